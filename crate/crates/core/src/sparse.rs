//! Sparse symmetric positive-definite solver used for the discrete flux
//! operator: triplet assembly into CSR, reverse Cuthill-McKee reordering and
//! an envelope (skyline) Cholesky factorization that is computed once per
//! mesh and reused by every forward and adjoint solve.

use crate::error::{GsError, Result};

/// Compressed sparse row matrix (square or rectangular).
#[derive(Debug, Clone)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from unsorted triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &mut [(usize, usize, f64)]) -> Csr {
        triplets.sort_unstable_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut k = 0usize;
        for i in 0..nrows {
            while k < triplets.len() && triplets[k].0 == i {
                let j = triplets[k].1;
                let mut v = triplets[k].2;
                k += 1;
                while k < triplets.len() && triplets[k].0 == i && triplets[k].1 == j {
                    v += triplets[k].2;
                    k += 1;
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Csr {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        y
    }

    /// y = Aᵀ x
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * x[i];
            }
        }
        y
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col_idx[k] == j {
                return self.values[k];
            }
        }
        0.0
    }

    /// Text triplet dump (`i j value` per line), for debugging.
    pub fn dump_triplets(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s.push_str(&format!("{} {} {:e}\n", i, self.col_idx[k], self.values[k]));
            }
        }
        s
    }
}

/// Reverse Cuthill-McKee ordering of a symmetric sparsity pattern.
/// Returns `perm` such that new index `k` holds old index `perm[k]`.
pub fn reverse_cuthill_mckee(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let degree = |i: usize| adj[i].len();

    while order.len() < n {
        // start each component from a pseudo-peripheral node
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree(i))
            .unwrap();
        let start = pseudo_peripheral(seed, adj, &visited);
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_unstable_by_key(|&v| (degree(v), v));
            for v in nbrs {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], visited: &[bool]) -> usize {
    let mut node = seed;
    let mut last_ecc = 0usize;
    for _ in 0..8 {
        let (far, ecc) = bfs_farthest(node, adj, visited);
        if ecc <= last_ecc {
            break;
        }
        last_ecc = ecc;
        node = far;
    }
    node
}

fn bfs_farthest(start: usize, adj: &[Vec<usize>], visited: &[bool]) -> (usize, usize) {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    dist[start] = 0;
    queue.push_back(start);
    let mut far = start;
    while let Some(u) = queue.pop_front() {
        if dist[u] > dist[far] || (dist[u] == dist[far] && adj[u].len() < adj[far].len()) {
            far = u;
        }
        for &v in &adj[u] {
            if !visited[v] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (far, dist[far])
}

/// Envelope (skyline) Cholesky factorization L Lᵀ of a symmetric positive
/// definite matrix, stored row-wise from the first nonzero column of each
/// row up to the diagonal. The factorization fills only inside the
/// envelope, so RCM ordering keeps it small.
pub struct SkylineCholesky {
    n: usize,
    /// permutation: internal index k ↔ external index perm[k]
    perm: Vec<usize>,
    jmin: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factor the SPD matrix given in CSR form (full pattern, both halves).
    pub fn factor(a: &Csr) -> Result<SkylineCholesky> {
        let n = a.nrows;
        assert_eq!(a.nrows, a.ncols);
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                if j != i {
                    adj[i].push(j);
                }
            }
        }
        let perm = reverse_cuthill_mckee(n, &adj);
        let mut inv_perm = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            inv_perm[p] = k;
        }

        // envelope of the permuted matrix
        let mut jmin: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let pi = inv_perm[i];
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let pj = inv_perm[a.col_idx[k]];
                let (row, col) = (pi.max(pj), pi.min(pj));
                if col < jmin[row] {
                    jmin[row] = col;
                }
            }
        }
        let mut row_start = vec![0usize; n + 1];
        for i in 0..n {
            row_start[i + 1] = row_start[i] + (i - jmin[i] + 1);
        }
        let mut data = vec![0.0; row_start[n]];
        for i in 0..n {
            let pi = inv_perm[i];
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let pj = inv_perm[a.col_idx[k]];
                if pj <= pi {
                    data[row_start[pi] + (pj - jmin[pi])] += a.values[k];
                }
            }
        }

        // in-place LLᵀ restricted to the envelope
        for i in 0..n {
            let ji = jmin[i];
            for j in ji..i {
                let jj = jmin[j];
                let lo = ji.max(jj);
                let mut s = data[row_start[i] + (j - ji)];
                for k in lo..j {
                    s -= data[row_start[i] + (k - ji)] * data[row_start[j] + (k - jj)];
                }
                let djj = data[row_start[j] + (j - jj)];
                data[row_start[i] + (j - ji)] = s / djj;
            }
            let mut s = data[row_start[i] + (i - ji)];
            for k in ji..i {
                let v = data[row_start[i] + (k - ji)];
                s -= v * v;
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(GsError::Factorization(format!(
                    "non-positive pivot {s:.3e} at row {i} of {n}"
                )));
            }
            data[row_start[i] + (i - ji)] = s.sqrt();
        }

        Ok(SkylineCholesky {
            n,
            perm,
            jmin,
            row_start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b. Reentrant (no internal mutable state).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for k in 0..n {
            y[k] = b[self.perm[k]];
        }
        // forward: L y' = y
        for i in 0..n {
            let ji = self.jmin[i];
            let base = self.row_start[i];
            let mut s = y[i];
            for k in ji..i {
                s -= self.data[base + (k - ji)] * y[k];
            }
            y[i] = s / self.data[base + (i - ji)];
        }
        // backward: Lᵀ x' = y'
        for i in (0..n).rev() {
            let ji = self.jmin[i];
            let base = self.row_start[i];
            let xi = y[i] / self.data[base + (i - ji)];
            y[i] = xi;
            for k in ji..i {
                y[k] -= self.data[base + (k - ji)] * xi;
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.perm[k]] = y[k];
        }
        x
    }
}

/// Dense symmetric positive-definite solve via Cholesky; used for the small
/// normal-equations systems of the profile identification.
pub fn solve_spd_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(GsError::IllPosed(format!(
                        "normal matrix not positive definite (pivot {s:.3e} at {i})"
                    )));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Ok(x)
}
