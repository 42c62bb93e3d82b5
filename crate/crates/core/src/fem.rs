//! Discrete flux operator: P1 stiffness assembly of the axisymmetric
//! elliptic operator, Dirichlet lifting, the plasma-current load matrix D
//! and the plasma-domain quadrature shared by every integral over the
//! masked region. The stiffness factorization is computed once per mesh and
//! reused by every forward and adjoint solve.

use crate::error::{GsError, Result};
use crate::geometry::{triangle_area, Point};
use crate::mesh::Mesh;
use crate::par::maybe_par_map;
use crate::plasma::FluxState;
use crate::profiles::ProfileBasis;
use crate::sparse::{Csr, SkylineCholesky};
use crate::MU_0;

/// 3x3 element stiffness of triangle t: (area / (mu0 r_c)) grad_i . grad_j,
/// with 1/r evaluated at the centroid.
pub fn element_stiffness(mesh: &Mesh, t: usize) -> Result<[[f64; 3]; 3]> {
    let area = mesh.area(t);
    if area <= 0.0 {
        return Err(GsError::SingularElement(format!("triangle {t}")));
    }
    let rc = mesh.centroid(t).r;
    let g = mesh.shape_gradients(t);
    let scale = area / (MU_0 * rc);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = scale * (g[i].r * g[j].r + g[i].z * g[j].z);
        }
    }
    Ok(k)
}

/// Assembled stiffness with its Dirichlet partition and cached Cholesky
/// factorization. Read-only after construction; solves are reentrant.
pub struct StiffnessOperator {
    /// node -> interior-local index
    interior_index: Vec<Option<usize>>,
    /// interior-local -> node
    interior_nodes: Vec<usize>,
    /// node -> boundary-local index (order of mesh.boundary_nodes())
    boundary_index: Vec<Option<usize>>,
    k_full: Csr,
    k_ib: Csr,
    factor: SkylineCholesky,
}

pub fn assemble_stiffness(mesh: &Mesh) -> Result<StiffnessOperator> {
    let nn = mesh.node_count();
    let mut interior_index = vec![None; nn];
    let mut interior_nodes = Vec::new();
    for i in 0..nn {
        if !mesh.is_boundary_node(i) {
            interior_index[i] = Some(interior_nodes.len());
            interior_nodes.push(i);
        }
    }
    let mut boundary_index = vec![None; nn];
    for (k, &b) in mesh.boundary_nodes().iter().enumerate() {
        boundary_index[b] = Some(k);
    }
    let ni = interior_nodes.len();
    let nb = mesh.boundary_nodes().len();
    if ni == 0 {
        return Err(GsError::Topology(
            "mesh has no interior nodes; refine the mesh".into(),
        ));
    }

    let mut full = Vec::with_capacity(9 * mesh.triangle_count());
    let mut tii = Vec::new();
    let mut tib = Vec::new();
    for t in 0..mesh.triangle_count() {
        let ke = element_stiffness(mesh, t)?;
        let tri = mesh.triangle(t);
        for a in 0..3 {
            for b in 0..3 {
                full.push((tri[a], tri[b], ke[a][b]));
                if let Some(ia) = interior_index[tri[a]] {
                    match interior_index[tri[b]] {
                        Some(ib) => tii.push((ia, ib, ke[a][b])),
                        None => tib.push((ia, boundary_index[tri[b]].unwrap(), ke[a][b])),
                    }
                }
            }
        }
    }
    let k_full = Csr::from_triplets(nn, nn, &mut full);
    let k_ii = Csr::from_triplets(ni, ni, &mut tii);
    let k_ib = Csr::from_triplets(ni, nb, &mut tib);
    let factor = SkylineCholesky::factor(&k_ii)?;
    Ok(StiffnessOperator {
        interior_index,
        interior_nodes,
        boundary_index,
        k_full,
        k_ib,
        factor,
    })
}

impl StiffnessOperator {
    pub fn interior_count(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_index[node]
    }

    pub fn boundary_index(&self, node: usize) -> Option<usize> {
        self.boundary_index[node]
    }

    /// Full operator applied to a nodal vector (boundary rows included).
    pub fn apply_full(&self, psi: &[f64]) -> Vec<f64> {
        self.k_full.mul_vec(psi)
    }

    pub fn full_matrix(&self) -> &Csr {
        &self.k_full
    }

    /// Solve the Dirichlet problem: interior load plus boundary values h
    /// (ordered like mesh.boundary_nodes()). Returns psi on all nodes.
    pub fn solve_with_dirichlet(&self, load: &[f64], h: &[f64]) -> Vec<f64> {
        debug_assert_eq!(load.len(), self.interior_nodes.len());
        let lift = self.k_ib.mul_vec(h);
        let rhs: Vec<f64> = load.iter().zip(&lift).map(|(l, b)| l - b).collect();
        let x = self.factor.solve(&rhs);
        self.scatter(&x, h)
    }

    /// Adjoint solve against an interior functional (the operator is
    /// symmetric, so this is the same factorization).
    pub fn adjoint_solve(&self, l_interior: &[f64]) -> Vec<f64> {
        self.factor.solve(l_interior)
    }

    /// Assemble a full nodal vector from interior values and boundary h.
    pub fn scatter(&self, interior: &[f64], h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.interior_index.len()];
        for (k, &node) in self.interior_nodes.iter().enumerate() {
            out[node] = interior[k];
        }
        for (node, bi) in self.boundary_index.iter().enumerate() {
            if let Some(k) = bi {
                out[node] = h[*k];
            }
        }
        out
    }

    /// Restrict a full nodal vector to interior-local ordering.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.interior_nodes.iter().map(|&n| nodal[n]).collect()
    }
}

/// Visit the quadrature points of the plasma-covered part of the mesh.
/// Full triangles get the degree-2 mid-edge rule; triangles cut by the
/// plasma boundary are subdivided along the linear psibar = 1 level line
/// first. The callback receives (triangle, point, weight, psibar,
/// barycentric coords in the parent triangle).
pub fn for_each_plasma_quad_point<F>(mesh: &Mesh, flux: &FluxState, f: F)
where
    F: FnMut(usize, Point, f64, f64, [f64; 3]),
{
    for_each_plasma_quad_point_range(
        mesh,
        flux,
        TriangleRange {
            lo: 0,
            hi: mesh.triangle_count(),
        },
        f,
    );
}

/// Rectangular load matrix mapping profile coefficients to the nodal load:
/// rows are interior nodes, columns the [A | B | n_e] basis blocks, with the
/// n_e columns identically zero (density carries no current).
pub struct CurrentMatrix {
    pub nrows: usize,
    pub ncols: usize,
    ne_start: usize,
    /// row-major dense storage
    values: Vec<f64>,
}

impl CurrentMatrix {
    pub fn mul_u(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.ncols);
        let mut out = vec![0.0; self.nrows];
        for (i, row) in self.values.chunks(self.ncols).enumerate() {
            let mut acc = 0.0;
            for k in 0..self.ne_start {
                acc += row[k] * u[k];
            }
            out[i] = acc;
        }
        out
    }

    /// zᵀ D for an interior-local vector z.
    pub fn transpose_mul(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (i, row) in self.values.chunks(self.ncols).enumerate() {
            let zi = z[i];
            if zi == 0.0 {
                continue;
            }
            for k in 0..self.ne_start {
                out[k] += zi * row[k];
            }
        }
        out
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.ncols + k]
    }
}

/// Assemble D(psi_n): D_ik = ∫_plasma w_k(r, psibar) phi_i, with
/// w_k = (r/R0) chi_k for the A block and (R0/r) chi_k for the B block.
/// Contributions are summed in element-index order regardless of thread
/// count, so the result is deterministic.
pub fn assemble_current_matrix(
    mesh: &Mesh,
    op: &StiffnessOperator,
    flux: &FluxState,
    basis: &ProfileBasis,
    r0: f64,
    parallel: bool,
) -> CurrentMatrix {
    let ncols = basis.len();
    let ne_start = basis.ne_range().start;
    let nrows = op.interior_count();
    let nt = mesh.triangle_count();

    // per-triangle contribution lists, merged in element order
    let chunk = 256usize;
    let nchunks = nt.div_ceil(chunk);
    let partials: Vec<Vec<(u32, u32, f64)>> = maybe_par_map(parallel, nchunks, |c| {
        let lo = c * chunk;
        let hi = ((c + 1) * chunk).min(nt);
        let mut out: Vec<(u32, u32, f64)> = Vec::new();
        let sub = TriangleRange { lo, hi };
        for_each_plasma_quad_point_range(mesh, flux, sub, |t, p, w, psibar, bary| {
            let tri = mesh.triangle(t);
            let x = psibar.clamp(0.0, 1.0);
            let (fa, va) = basis.a.eval_nonzero(x).expect("x in [0,1]");
            let (fb, vb) = basis.b.eval_nonzero(x).expect("x in [0,1]");
            let wa = p.r / r0;
            let wb = r0 / p.r;
            for v in 0..3 {
                if let Some(row) = op.interior_index(tri[v]) {
                    let phi = bary[v];
                    if phi == 0.0 {
                        continue;
                    }
                    for (j, bv) in va.iter().enumerate() {
                        out.push((row as u32, (fa + j) as u32, w * wa * bv * phi));
                    }
                    let b_off = basis.b_range().start;
                    for (j, bv) in vb.iter().enumerate() {
                        out.push((row as u32, (b_off + fb + j) as u32, w * wb * bv * phi));
                    }
                }
            }
        });
        out
    });

    let mut values = vec![0.0; nrows * ncols];
    for part in partials {
        for (i, k, v) in part {
            values[i as usize * ncols + k as usize] += v;
        }
    }
    CurrentMatrix {
        nrows,
        ncols,
        ne_start,
        values,
    }
}

struct TriangleRange {
    lo: usize,
    hi: usize,
}

fn for_each_plasma_quad_point_range<F>(mesh: &Mesh, flux: &FluxState, range: TriangleRange, f: F)
where
    F: FnMut(usize, Point, f64, f64, [f64; 3]),
{
    // mirror of for_each_plasma_quad_point restricted to [lo, hi)
    let mut f = f;
    const MID: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
    for t in range.lo..range.hi {
        let cover = flux.mask[t];
        if cover <= 0.0 {
            continue;
        }
        let tri = mesh.triangle(t);
        let pb = [
            flux.psibar[tri[0]],
            flux.psibar[tri[1]],
            flux.psibar[tri[2]],
        ];
        let pts = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
        if cover >= 1.0 {
            let w = mesh.area(t) / 3.0;
            for bary in MID {
                let p = Point::new(
                    bary[0] * pts[0].r + bary[1] * pts[1].r + bary[2] * pts[2].r,
                    bary[0] * pts[0].z + bary[1] * pts[1].z + bary[2] * pts[2].z,
                );
                let psibar = bary[0] * pb[0] + bary[1] * pb[1] + bary[2] * pb[2];
                f(t, p, w, psibar, bary);
            }
            continue;
        }
        let mut poly: Vec<[f64; 3]> = Vec::with_capacity(4);
        for k in 0..3 {
            let (a, b) = (k, (k + 1) % 3);
            let mut ea = [0.0; 3];
            ea[a] = 1.0;
            if pb[a] < 1.0 {
                poly.push(ea);
            }
            if (pb[a] < 1.0) != (pb[b] < 1.0) {
                let s = (1.0 - pb[a]) / (pb[b] - pb[a]);
                let mut e = [0.0; 3];
                e[a] = 1.0 - s;
                e[b] = s;
                poly.push(e);
            }
        }
        if poly.len() < 3 {
            continue;
        }
        let to_point = |bary: &[f64; 3]| -> Point {
            Point::new(
                bary[0] * pts[0].r + bary[1] * pts[1].r + bary[2] * pts[2].r,
                bary[0] * pts[0].z + bary[1] * pts[1].z + bary[2] * pts[2].z,
            )
        };
        for k in 1..poly.len() - 1 {
            let corners = [poly[0], poly[k], poly[k + 1]];
            let cpts = [
                to_point(&corners[0]),
                to_point(&corners[1]),
                to_point(&corners[2]),
            ];
            let sub_area = triangle_area(cpts[0], cpts[1], cpts[2]).abs();
            if sub_area <= 0.0 {
                continue;
            }
            let w = sub_area / 3.0;
            for mid in MID {
                let mut bary = [0.0; 3];
                for c in 0..3 {
                    for v in 0..3 {
                        bary[v] += mid[c] * corners[c][v];
                    }
                }
                let p = to_point(&bary);
                let psibar = bary[0] * pb[0] + bary[1] * pb[1] + bary[2] * pb[2];
                f(t, p, w, psibar, bary);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_vessel_mesh;
    use crate::plasma::BoundaryKind;

    fn square_mesh(h: f64) -> Mesh {
        let sq = vec![
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        generate_vessel_mesh(&sq, h).unwrap()
    }

    #[test]
    fn element_stiffness_hand_values() {
        let m = Mesh::new(
            vec![
                Point::new(1.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(1.0, 1.0),
            ],
            vec![[0, 1, 2]],
            vec![0, 1, 2],
        )
        .unwrap();
        let k = element_stiffness(&m, 0).unwrap();
        // area 1/2, centroid r 4/3, Gram rows [[2,-1,-1],[-1,1,0],[-1,0,1]]
        let scale = 0.5 / (MU_0 * (4.0 / 3.0));
        let gram = [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                let expect = scale * gram[i][j];
                assert!(
                    (k[i][j] - expect).abs() < 1e-9 * scale,
                    "K[{i}][{j}] = {} vs {}",
                    k[i][j],
                    expect
                );
            }
        }
    }

    #[test]
    fn assembled_operator_is_symmetric() {
        let m = square_mesh(0.2);
        let op = assemble_stiffness(&m).unwrap();
        let k = op.full_matrix();
        for i in 0..k.nrows {
            for idx in k.row_ptr[i]..k.row_ptr[i + 1] {
                let j = k.col_idx[idx];
                assert_eq!(k.values[idx], k.get(j, i), "asymmetry at ({i},{j})");
            }
        }
    }

    #[test]
    fn constant_vector_in_null_space() {
        let m = square_mesh(0.2);
        let op = assemble_stiffness(&m).unwrap();
        let ones = vec![1.0; m.node_count()];
        let r = op.apply_full(&ones);
        let k = op.full_matrix();
        for i in 0..m.node_count() {
            let row_scale: f64 = (k.row_ptr[i]..k.row_ptr[i + 1])
                .map(|idx| k.values[idx].abs())
                .sum();
            assert!(
                r[i].abs() <= 1e-10 * row_scale,
                "row {i}: residual {} vs scale {}",
                r[i],
                row_scale
            );
        }
    }

    #[test]
    fn vacuum_constant_boundary_gives_constant_flux() {
        let m = square_mesh(0.15);
        let op = assemble_stiffness(&m).unwrap();
        let load = vec![0.0; op.interior_count()];
        let h = vec![3.25; m.boundary_nodes().len()];
        let psi = op.solve_with_dirichlet(&load, &h);
        for (i, v) in psi.iter().enumerate() {
            assert!((v - 3.25).abs() < 1e-10, "node {i}: {v}");
        }
    }

    #[test]
    fn solve_is_linear() {
        let m = square_mesh(0.2);
        let op = assemble_stiffness(&m).unwrap();
        let ni = op.interior_count();
        let nb = m.boundary_nodes().len();
        let mut seed = 42u64;
        let mut rng = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let l1: Vec<f64> = (0..ni).map(|_| rng()).collect();
        let l2: Vec<f64> = (0..ni).map(|_| rng()).collect();
        let h1: Vec<f64> = (0..nb).map(|_| rng()).collect();
        let h2: Vec<f64> = (0..nb).map(|_| rng()).collect();
        let s1 = op.solve_with_dirichlet(&l1, &h1);
        let s2 = op.solve_with_dirichlet(&l2, &h2);
        let lsum: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a + b).collect();
        let hsum: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a + b).collect();
        let s12 = op.solve_with_dirichlet(&lsum, &hsum);
        let scale = s12.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        for i in 0..s12.len() {
            assert!(
                (s12[i] - s1[i] - s2[i]).abs() < 1e-10 * scale,
                "superposition violated at {i}"
            );
        }
    }

    /// Manufactured solution psi* = r^4: the operator applied to it is
    /// computable in closed form, and the discrete solution must converge
    /// at second order in L2.
    #[test]
    fn manufactured_r4_second_order() {
        let mut errors = Vec::new();
        for &h in &[0.2, 0.1, 0.05] {
            let m = square_mesh(h);
            let op = assemble_stiffness(&m).unwrap();
            // -Delta*(r^4) = -8 r / mu0
            let mut load = vec![0.0; op.interior_count()];
            const MID: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
            for t in 0..m.triangle_count() {
                let tri = m.triangle(t);
                let pts = [m.node(tri[0]), m.node(tri[1]), m.node(tri[2])];
                let w = m.area(t) / 3.0;
                for bary in MID {
                    let r = bary[0] * pts[0].r + bary[1] * pts[1].r + bary[2] * pts[2].r;
                    let source = -8.0 * r / MU_0;
                    for v in 0..3 {
                        if let Some(row) = op.interior_index(tri[v]) {
                            load[row] += w * source * bary[v];
                        }
                    }
                }
            }
            let h_vals: Vec<f64> = m
                .boundary_nodes()
                .iter()
                .map(|&b| m.node(b).r.powi(4))
                .collect();
            let psi = op.solve_with_dirichlet(&load, &h_vals);
            // L2 error by mid-edge quadrature
            let mut err2 = 0.0;
            for t in 0..m.triangle_count() {
                let tri = m.triangle(t);
                let pts = [m.node(tri[0]), m.node(tri[1]), m.node(tri[2])];
                let w = m.area(t) / 3.0;
                for bary in MID {
                    let r = bary[0] * pts[0].r + bary[1] * pts[1].r + bary[2] * pts[2].r;
                    let vh =
                        bary[0] * psi[tri[0]] + bary[1] * psi[tri[1]] + bary[2] * psi[tri[2]];
                    err2 += w * (vh - r.powi(4)).powi(2);
                }
            }
            errors.push(err2.sqrt());
        }
        let o1 = (errors[0] / errors[1]).log2();
        let o2 = (errors[1] / errors[2]).log2();
        assert!(
            o1 > 1.5 && o1 < 2.6 && o2 > 1.5 && o2 < 2.6,
            "orders {o1:.2}, {o2:.2} from errors {errors:?}"
        );
    }

    fn fake_flux(mesh: &Mesh, psibar: Vec<f64>) -> FluxState {
        let mask = crate::plasma::plasma_mask(mesh, &psibar);
        FluxState {
            psi: psibar.iter().map(|v| -v).collect(),
            axis: Point::new(1.5, 0.5),
            psi_axis: 0.0,
            psi_b: -1.0,
            kind: BoundaryKind::Limiter,
            x_point: None,
            psibar,
            mask,
            boundary_contour: vec![],
            sign_flipped: false,
            warnings: vec![],
        }
    }

    #[test]
    fn empty_plasma_gives_zero_matrix() {
        let m = square_mesh(0.25);
        let op = assemble_stiffness(&m).unwrap();
        let flux = fake_flux(&m, vec![5.0; m.node_count()]);
        let basis = ProfileBasis::default_cubic();
        let d = assemble_current_matrix(&m, &op, &flux, &basis, 1.5, false);
        let u = vec![1.0; basis.len()];
        assert!(d.mul_u(&u).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_basis_column_matches_hand_quadrature() {
        // single basis function identically 1: D column = (1/R0) ∫ r phi_i
        let m = square_mesh(0.25);
        let op = assemble_stiffness(&m).unwrap();
        let flux = fake_flux(&m, vec![0.2; m.node_count()]); // plasma covers all
        let basis = ProfileBasis::new(0, 1, 1, 1).unwrap();
        let r0 = 1.5;
        let d = assemble_current_matrix(&m, &op, &flux, &basis, r0, false);
        // oracle: ∫_T r phi_i = A (2 r_i + r_j + r_k) / 12 summed over elements
        let mut expect = vec![0.0; op.interior_count()];
        for t in 0..m.triangle_count() {
            let tri = m.triangle(t);
            let a = m.area(t);
            for v in 0..3 {
                if let Some(row) = op.interior_index(tri[v]) {
                    let ri = m.node(tri[v]).r;
                    let rj = m.node(tri[(v + 1) % 3]).r;
                    let rk = m.node(tri[(v + 2) % 3]).r;
                    expect[row] += a * (2.0 * ri + rj + rk) / 12.0 / r0;
                }
            }
        }
        for i in 0..op.interior_count() {
            assert!(
                (d.value(i, 0) - expect[i]).abs() < 1e-12 * expect[i].abs().max(1e-12),
                "row {i}: {} vs {}",
                d.value(i, 0),
                expect[i]
            );
        }
    }

    #[test]
    fn ne_columns_are_zero() {
        let m = square_mesh(0.25);
        let op = assemble_stiffness(&m).unwrap();
        let flux = fake_flux(&m, vec![0.3; m.node_count()]);
        let basis = ProfileBasis::default_cubic();
        let d = assemble_current_matrix(&m, &op, &flux, &basis, 1.5, false);
        for i in 0..d.nrows {
            for k in basis.ne_range() {
                assert_eq!(d.value(i, k), 0.0);
            }
        }
    }

    #[test]
    fn parallel_assembly_is_deterministic() {
        let m = square_mesh(0.15);
        let op = assemble_stiffness(&m).unwrap();
        let psibar: Vec<f64> = m
            .nodes()
            .iter()
            .map(|p| ((p.r - 1.5).powi(2) + (p.z - 0.5).powi(2)) / 0.09)
            .collect();
        let flux = fake_flux(&m, psibar);
        let basis = ProfileBasis::default_cubic();
        let d_seq = assemble_current_matrix(&m, &op, &flux, &basis, 1.5, false);
        let d_par = assemble_current_matrix(&m, &op, &flux, &basis, 1.5, true);
        for i in 0..d_seq.nrows {
            for k in 0..d_seq.ncols {
                assert_eq!(d_seq.value(i, k), d_par.value(i, k), "({i},{k})");
            }
        }
    }

    #[test]
    fn discrete_maximum_principle() {
        let m = square_mesh(0.15);
        let op = assemble_stiffness(&m).unwrap();
        let load = vec![0.0; op.interior_count()];
        let h: Vec<f64> = m
            .boundary_nodes()
            .iter()
            .map(|&b| m.node(b).r + 0.3 * m.node(b).z)
            .collect();
        let (lo, hi) = h
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let psi = op.solve_with_dirichlet(&load, &h);
        for &v in &psi {
            assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo},{hi}]");
        }
    }
}
