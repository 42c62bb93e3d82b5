//! Reduced-basis representation of the three unknown 1-D functions of the
//! normalized flux: the pressure-gradient source A, the diamagnetic source B
//! and the electron density n_e, all on `[0, 1]`, together with the physical
//! profiles p and f derived from them and the curvature (Tikhonov)
//! regularization matrices.

use crate::error::{GsError, Result};
use crate::MU_0;

/// Gauss-Legendre nodes/weights on [-1, 1].
const G3: [(f64, f64); 3] = [
    (-0.7745966692414834, 0.5555555555555556),
    (0.0, 0.8888888888888888),
    (0.7745966692414834, 0.5555555555555556),
];
const G4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.3478548451374538),
    (-0.3399810435848563, 0.6521451548625461),
    (0.3399810435848563, 0.6521451548625461),
    (0.8611363115940526, 0.3478548451374538),
];

/// Clamped B-spline basis on `[0, 1]` with uniform interior knots.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    degree: usize,
    count: usize,
    knots: Vec<f64>,
}

impl SplineBasis {
    pub fn new_uniform(degree: usize, count: usize) -> Result<SplineBasis> {
        if count < degree + 1 {
            return Err(GsError::Config(format!(
                "basis needs at least degree+1 = {} functions, got {count}",
                degree + 1
            )));
        }
        let interior = count - degree - 1;
        let mut knots = vec![0.0; degree + 1];
        for i in 1..=interior {
            knots.push(i as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Ok(SplineBasis {
            degree,
            count,
            knots,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Knot span index s with knots[s] <= x < knots[s+1]; x = 1 maps to the
    /// last nonempty span.
    fn span(&self, x: f64) -> usize {
        let p = self.degree;
        if x >= 1.0 {
            return self.count - 1;
        }
        let mut lo = p;
        let mut hi = self.count;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Values of the nonzero basis functions of degree `d` (d <= degree) at
    /// x, all sharing this knot vector. Returns (first index, values).
    fn eval_nonzero_degree(&self, x: f64, d: usize) -> (usize, Vec<f64>) {
        let s = self.span(x);
        let k = &self.knots;
        let mut vals = vec![0.0; d + 1];
        vals[0] = 1.0;
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        for j in 1..=d {
            left[j] = x - k[s + 1 - j];
            right[j] = k[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let den = right[r + 1] + left[j - r];
                let temp = if den != 0.0 { vals[r] / den } else { 0.0 };
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        (s - d, vals)
    }

    /// Nonzero basis values at x: (first index, degree+1 values).
    pub fn eval_nonzero(&self, x: f64) -> Result<(usize, Vec<f64>)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(GsError::Config(format!(
                "basis evaluation point {x} outside [0,1]"
            )));
        }
        Ok(self.eval_nonzero_degree(x, self.degree))
    }

    /// Dense vector of all basis values at x.
    pub fn eval_all(&self, x: f64) -> Result<Vec<f64>> {
        let (first, vals) = self.eval_nonzero(x)?;
        let mut out = vec![0.0; self.count];
        for (j, v) in vals.iter().enumerate() {
            out[first + j] = *v;
        }
        Ok(out)
    }

    fn knot_diff(&self, a: usize, b: usize) -> f64 {
        self.knots[a] - self.knots[b]
    }

    /// Dense vector of second derivatives at x (degree >= 2 required).
    pub fn eval_second_derivative_all(&self, x: f64) -> Result<Vec<f64>> {
        let p = self.degree;
        if p < 2 {
            return Err(GsError::Config(
                "second derivative needs basis degree >= 2".into(),
            ));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(GsError::Config(format!(
                "basis evaluation point {x} outside [0,1]"
            )));
        }
        let (first2, low) = self.eval_nonzero_degree(x, p - 2);
        // N''_{i,p} expressed through degree p-2 functions
        let mut out = vec![0.0; self.count];
        let pf = (p * (p - 1)) as f64;
        let inv = |num: f64| if num != 0.0 { 1.0 / num } else { 0.0 };
        for (j, &nlow) in low.iter().enumerate() {
            let i2 = first2 + j; // index of the degree p-2 function
            // contributes to N''_{i2,p}, N''_{i2-1,p}, N''_{i2-2,p}
            // term ++ : i = i2
            {
                let i = i2;
                if i < self.count {
                    let c = inv(self.knot_diff(i + p, i)) * inv(self.knot_diff(i + p - 1, i));
                    out[i] += pf * c * nlow;
                }
            }
            // middle term : i = i2 - 1
            if i2 >= 1 {
                let i = i2 - 1;
                let a_i = inv(self.knot_diff(i + p, i));
                let b_i = inv(self.knot_diff(i + p + 1, i + 1));
                let c = inv(self.knot_diff(i + p, i + 1));
                out[i] -= pf * (a_i + b_i) * c * nlow;
            }
            // term -- : i = i2 - 2
            if i2 >= 2 {
                let i = i2 - 2;
                let c = inv(self.knot_diff(i + p + 1, i + 1)) * inv(self.knot_diff(i + p + 1, i + 2));
                out[i] += pf * c * nlow;
            }
        }
        Ok(out)
    }

    /// Greville abscissa of basis function k; coefficients set to g(greville)
    /// reproduce any affine g exactly.
    pub fn greville(&self, k: usize) -> f64 {
        let p = self.degree;
        self.knots[k + 1..=k + p].iter().sum::<f64>() / p as f64
    }

    /// Exact integrals of every basis function over [x, 1].
    pub fn integrate_from(&self, x: f64) -> Vec<f64> {
        let x = x.clamp(0.0, 1.0);
        let mut out = vec![0.0; self.count];
        let p = self.degree;
        for s in p..self.count {
            let (t0, t1) = (self.knots[s], self.knots[s + 1]);
            if t1 <= x || t1 <= t0 {
                continue;
            }
            let lo = t0.max(x);
            let half = 0.5 * (t1 - lo);
            let mid = 0.5 * (t1 + lo);
            for &(gx, gw) in G4.iter() {
                let xi = mid + half * gx;
                let (first, vals) = self.eval_nonzero_degree(xi, p);
                for (j, v) in vals.iter().enumerate() {
                    out[first + j] += gw * half * v;
                }
            }
        }
        out
    }

    /// Gram matrix of second derivatives, S_ij = ∫ χ''_i χ''_j dx.
    pub fn second_derivative_gram(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.count;
        let p = self.degree;
        let mut s_mat = vec![vec![0.0; m]; m];
        for s in p..m {
            let (t0, t1) = (self.knots[s], self.knots[s + 1]);
            if t1 <= t0 {
                continue;
            }
            let half = 0.5 * (t1 - t0);
            let mid = 0.5 * (t1 + t0);
            for &(gx, gw) in G3.iter() {
                let xi = mid + half * gx;
                let d2 = self.eval_second_derivative_all(xi)?;
                let w = gw * half;
                for i in 0..m {
                    if d2[i] == 0.0 {
                        continue;
                    }
                    for j in 0..m {
                        if d2[j] != 0.0 {
                            s_mat[i][j] += w * d2[i] * d2[j];
                        }
                    }
                }
            }
        }
        Ok(s_mat)
    }
}

/// The three per-unknown bases. One shared degree and knot layout family,
/// independent coefficient blocks ordered [A | B | n_e].
#[derive(Debug, Clone)]
pub struct ProfileBasis {
    pub a: SplineBasis,
    pub b: SplineBasis,
    pub ne: SplineBasis,
}

impl ProfileBasis {
    pub fn new(degree: usize, m_a: usize, m_b: usize, m_ne: usize) -> Result<ProfileBasis> {
        Ok(ProfileBasis {
            a: SplineBasis::new_uniform(degree, m_a)?,
            b: SplineBasis::new_uniform(degree, m_b)?,
            ne: SplineBasis::new_uniform(degree, m_ne)?,
        })
    }

    /// Default used throughout: cubic splines, 8 functions per unknown.
    pub fn default_cubic() -> ProfileBasis {
        ProfileBasis::new(3, 8, 8, 8).unwrap()
    }

    pub fn len(&self) -> usize {
        self.a.count() + self.b.count() + self.ne.count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn a_range(&self) -> std::ops::Range<usize> {
        0..self.a.count()
    }

    pub fn b_range(&self) -> std::ops::Range<usize> {
        self.a.count()..self.a.count() + self.b.count()
    }

    pub fn ne_range(&self) -> std::ops::Range<usize> {
        self.a.count() + self.b.count()..self.len()
    }
}

/// Coefficient vector plus the reference scalars needed to map the sources
/// to physical pressure and diamagnetic profiles.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub basis: ProfileBasis,
    /// coefficients ordered [a_1..a_mA, b_1..b_mB, c_1..c_mne]
    pub u: Vec<f64>,
    /// reference major radius, m
    pub r0: f64,
    /// vacuum diamagnetic function value at the boundary, T·m
    pub f0: f64,
    pub psi_axis: f64,
    pub psi_b: f64,
}

impl ProfileSet {
    pub fn zero(basis: ProfileBasis, r0: f64, f0: f64) -> ProfileSet {
        let n = basis.len();
        ProfileSet {
            basis,
            u: vec![0.0; n],
            r0,
            f0,
            psi_axis: 0.0,
            psi_b: 1.0,
        }
    }

    pub fn a_coeffs(&self) -> &[f64] {
        &self.u[self.basis.a_range()]
    }

    pub fn b_coeffs(&self) -> &[f64] {
        &self.u[self.basis.b_range()]
    }

    pub fn ne_coeffs(&self) -> &[f64] {
        &self.u[self.basis.ne_range()]
    }

    fn eval_block(basis: &SplineBasis, coeffs: &[f64], x: f64) -> f64 {
        let (first, vals) = basis
            .eval_nonzero(x.clamp(0.0, 1.0))
            .expect("clamped x is inside [0,1]");
        vals.iter()
            .enumerate()
            .map(|(j, v)| coeffs[first + j] * v)
            .sum()
    }

    /// Pressure-gradient source A(x); x clamped to `[0,1]`.
    pub fn eval_a(&self, x: f64) -> f64 {
        Self::eval_block(&self.basis.a, self.a_coeffs(), x)
    }

    /// Diamagnetic source B(x); x clamped to `[0,1]`.
    pub fn eval_b(&self, x: f64) -> f64 {
        Self::eval_block(&self.basis.b, self.b_coeffs(), x)
    }

    /// Electron density; zero outside the separatrix (x outside `[0,1]`).
    pub fn eval_ne(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        Self::eval_block(&self.basis.ne, self.ne_coeffs(), x)
    }

    /// p(x) = -((psi_b - psi_axis)/R0) ∫_x^1 A(s) ds, so that p(1) = 0.
    pub fn pressure(&self, x: f64) -> f64 {
        let ints = self.basis.a.integrate_from(x);
        let acc: f64 = ints
            .iter()
            .zip(self.a_coeffs())
            .map(|(w, c)| w * c)
            .sum();
        -((self.psi_b - self.psi_axis) / self.r0) * acc
    }

    /// f²(x) = f0² - 2 μ0 R0 (psi_b - psi_axis) ∫_x^1 B(s) ds, f(1) = f0.
    pub fn f_squared(&self, x: f64) -> Result<f64> {
        let v = self.f_squared_unchecked(x);
        if v <= 0.0 {
            return Err(GsError::UnphysicalProfile(format!(
                "f^2({x}) = {v:.6e} <= 0"
            )));
        }
        Ok(v)
    }

    pub fn f_squared_unchecked(&self, x: f64) -> f64 {
        let ints = self.basis.b.integrate_from(x);
        let acc: f64 = ints
            .iter()
            .zip(self.b_coeffs())
            .map(|(w, c)| w * c)
            .sum();
        self.f0 * self.f0 - 2.0 * MU_0 * self.r0 * (self.psi_b - self.psi_axis) * acc
    }

    /// Diamagnetic function for lagged evaluations: clamps unphysical f² to
    /// a small positive floor and reports whether clamping occurred.
    pub fn f_lagged(&self, x: f64) -> (f64, bool) {
        if x >= 1.0 {
            return (self.f0, false);
        }
        let v = self.f_squared_unchecked(x.max(0.0));
        let floor = 1e-6 * self.f0 * self.f0;
        if v < floor {
            (floor.sqrt(), true)
        } else {
            (v.sqrt(), false)
        }
    }
}

/// Block-diagonal curvature penalty ε_1 S_A ⊕ ε_2 S_B ⊕ ε_3 S_ne, with each
/// block rescaled by a characteristic coefficient magnitude so that the ε
/// defaults are meaningful against unit-normalized residuals.
#[derive(Debug, Clone)]
pub struct RegularizationMatrix {
    pub s_a: Vec<Vec<f64>>,
    pub s_b: Vec<Vec<f64>>,
    pub s_ne: Vec<Vec<f64>>,
    /// effective weights (ε_i / x_char_i²) applied to each Gram block
    pub eps_eff: [f64; 3],
}

impl RegularizationMatrix {
    pub fn new(basis: &ProfileBasis, eps: [f64; 3], char_scale: [f64; 3]) -> Result<Self> {
        for (k, &e) in eps.iter().enumerate() {
            if e < 0.0 {
                return Err(GsError::Config(format!("eps{} must be >= 0", k + 1)));
            }
        }
        let eps_eff = [
            eps[0] / (char_scale[0] * char_scale[0]),
            eps[1] / (char_scale[1] * char_scale[1]),
            eps[2] / (char_scale[2] * char_scale[2]),
        ];
        Ok(RegularizationMatrix {
            s_a: basis.a.second_derivative_gram()?,
            s_b: basis.b.second_derivative_gram()?,
            s_ne: basis.ne.second_derivative_gram()?,
            eps_eff,
        })
    }

    /// uᵀ Λ u
    pub fn quadratic_form(&self, basis: &ProfileBasis, u: &[f64]) -> f64 {
        self.block_forms(basis, u).iter().sum()
    }

    /// The three ε̂_i uᵀ S_i u terms separately. Evaluated by per-span
    /// quadrature of the assembled second derivative, which squares the
    /// pointwise residual and so stays exact for curvature-free profiles.
    pub fn block_forms(&self, basis: &ProfileBasis, u: &[f64]) -> [f64; 3] {
        let f = |sb: &SplineBasis, range: std::ops::Range<usize>, e: f64| -> f64 {
            let block = &u[range];
            let p = sb.degree();
            let knots = sb.knots();
            let mut acc = 0.0;
            for s in p..sb.count() {
                let (t0, t1) = (knots[s], knots[s + 1]);
                if t1 <= t0 {
                    continue;
                }
                let half = 0.5 * (t1 - t0);
                let mid = 0.5 * (t1 + t0);
                for &(gx, gw) in G3.iter() {
                    let d2 = sb
                        .eval_second_derivative_all(mid + half * gx)
                        .expect("interior point");
                    let v: f64 = d2.iter().zip(block).map(|(d, c)| d * c).sum();
                    acc += gw * half * v * v;
                }
            }
            e * acc
        };
        [
            f(&basis.a, basis.a_range(), self.eps_eff[0]),
            f(&basis.b, basis.b_range(), self.eps_eff[1]),
            f(&basis.ne, basis.ne_range(), self.eps_eff[2]),
        ]
    }

    /// Add Λ restricted to `cols` into a dense normal matrix.
    pub fn add_to_normal(
        &self,
        basis: &ProfileBasis,
        cols: &std::ops::Range<usize>,
        normal: &mut [Vec<f64>],
    ) {
        let mut add_block = |s: &Vec<Vec<f64>>, range: std::ops::Range<usize>, e: f64| {
            for i in range.clone() {
                if !cols.contains(&i) {
                    continue;
                }
                for j in range.clone() {
                    if cols.contains(&j) {
                        normal[i - cols.start][j - cols.start] +=
                            e * s[i - range.start][j - range.start];
                    }
                }
            }
        };
        add_block(&self.s_a, basis.a_range(), self.eps_eff[0]);
        add_block(&self.s_b, basis.b_range(), self.eps_eff[1]);
        add_block(&self.s_ne, basis.ne_range(), self.eps_eff[2]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent Cox-de Boor reference: naive recursive definition.
    fn naive_bspline(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            let hi = knots[i + 1];
            // make the last span right-closed
            let closed = (hi - 1.0).abs() < 1e-14;
            if (knots[i] <= x && x < hi) || (closed && (x - 1.0).abs() < 1e-14 && knots[i] < hi) {
                return 1.0;
            }
            return 0.0;
        }
        let mut acc = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            acc += (x - knots[i]) / d1 * naive_bspline(knots, i, p - 1, x);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            acc += (knots[i + p + 1] - x) / d2 * naive_bspline(knots, i + 1, p - 1, x);
        }
        acc
    }

    #[test]
    fn partition_of_unity() {
        let basis = SplineBasis::new_uniform(3, 8).unwrap();
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let s: f64 = basis.eval_all(x).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "sum {} at x {}", s, x);
        }
    }

    #[test]
    fn clamped_endpoint_values() {
        let basis = SplineBasis::new_uniform(3, 8).unwrap();
        let v0 = basis.eval_all(0.0).unwrap();
        assert!((v0[0] - 1.0).abs() < 1e-14);
        assert!(v0[1..].iter().all(|&v| v.abs() < 1e-14));
        let v1 = basis.eval_all(1.0).unwrap();
        assert!((v1[7] - 1.0).abs() < 1e-14);
        assert!(v1[..7].iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn matches_recursive_reference() {
        let basis = SplineBasis::new_uniform(3, 9).unwrap();
        for &x in &[0.05, 0.25, 0.5, 0.62, 0.9, 0.999] {
            let fast = basis.eval_all(x).unwrap();
            for i in 0..basis.count() {
                let slow = naive_bspline(basis.knots(), i, 3, x);
                assert!(
                    (fast[i] - slow).abs() < 1e-12,
                    "basis {i} at {x}: {} vs {}",
                    fast[i],
                    slow
                );
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let basis = SplineBasis::new_uniform(3, 8).unwrap();
        assert!(basis.eval_all(-0.1).is_err());
        assert!(basis.eval_all(1.1).is_err());
    }

    #[test]
    fn second_derivative_matches_finite_differences() {
        let basis = SplineBasis::new_uniform(3, 8).unwrap();
        let h = 1e-5;
        for &x in &[0.31, 0.52, 0.77] {
            let d2 = basis.eval_second_derivative_all(x).unwrap();
            let vm = basis.eval_all(x - h).unwrap();
            let v0 = basis.eval_all(x).unwrap();
            let vp = basis.eval_all(x + h).unwrap();
            for i in 0..basis.count() {
                let fd = (vp[i] - 2.0 * v0[i] + vm[i]) / (h * h);
                assert!(
                    (d2[i] - fd).abs() < 1e-4 * (1.0 + d2[i].abs()),
                    "d2[{i}] at {x}: {} vs fd {}",
                    d2[i],
                    fd
                );
            }
        }
    }

    #[test]
    fn affine_profiles_have_zero_curvature_penalty() {
        let basis = ProfileBasis::new(3, 8, 8, 8).unwrap();
        let lam = RegularizationMatrix::new(&basis, [1.0, 1.0, 1.0], [1.0; 3]).unwrap();
        // coefficients of the affine function 2 - x via Greville abscissae
        let mut u = vec![0.0; basis.len()];
        for k in 0..8 {
            u[k] = 2.0 - basis.a.greville(k);
        }
        let q = lam.quadratic_form(&basis, &u);
        assert!(q.abs() < 1e-12, "affine penalty {q}");
    }

    #[test]
    fn single_span_quadratic_direction_integral() {
        // single cubic span = Bernstein basis; x² has coefficients [0,0,1/3,1]
        // and ∫ (d²/dx² x²)² dx = 4
        let basis = SplineBasis::new_uniform(3, 4).unwrap();
        let s = basis.second_derivative_gram().unwrap();
        let u = [0.0, 0.0, 1.0 / 3.0, 1.0];
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += u[i] * s[i][j] * u[j];
            }
        }
        assert!((acc - 4.0).abs() < 1e-12, "got {acc}");
    }

    #[test]
    fn gram_is_symmetric_psd() {
        let basis = SplineBasis::new_uniform(3, 8).unwrap();
        let s = basis.second_derivative_gram().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((s[i][j] - s[j][i]).abs() < 1e-10);
            }
        }
        // PSD check through random quadratic forms
        let mut seed = 7u64;
        for _ in 0..100 {
            let mut q = 0.0;
            let mut u = [0.0; 8];
            for v in u.iter_mut() {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                *v = ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
            }
            for i in 0..8 {
                for j in 0..8 {
                    q += u[i] * s[i][j] * u[j];
                }
            }
            assert!(q >= -1e-12, "negative quadratic form {q}");
        }
    }

    #[test]
    fn pressure_closed_forms() {
        let basis = ProfileBasis::new(3, 8, 8, 8).unwrap();
        let mut ps = ProfileSet::zero(basis, 3.0, 9.0);
        ps.psi_axis = 2.0;
        ps.psi_b = 0.5; // psi_b - psi_axis = -1.5
        let a0 = 4.0e5;
        for k in 0..8 {
            ps.u[k] = a0;
        }
        // constant A: p(x) = -(Δψ/R0) a0 (1-x)
        for &x in &[0.0, 0.3, 0.7, 1.0] {
            let expect = -((0.5 - 2.0) / 3.0) * a0 * (1.0 - x);
            let got = ps.pressure(x);
            assert!(
                (got - expect).abs() < 1e-9 * expect.abs().max(1.0),
                "p({x}) = {got} vs {expect}"
            );
        }
        assert!(ps.pressure(1.0).abs() < 1e-9);
        // derivative consistency at an interior point
        let h = 1e-6;
        let dp = (ps.pressure(0.5 + h) - ps.pressure(0.5 - h)) / (2.0 * h);
        let expect = ((0.5 - 2.0) / 3.0) * a0;
        assert!((dp - expect).abs() < 1e-3 * expect.abs());
    }

    #[test]
    fn f_squared_closed_forms() {
        let basis = ProfileBasis::new(3, 8, 8, 8).unwrap();
        let mut ps = ProfileSet::zero(basis, 3.0, 9.0);
        ps.psi_axis = 2.0;
        ps.psi_b = 0.5;
        // B = 0 -> f = f0 everywhere
        assert!((ps.f_squared(0.3).unwrap() - 81.0).abs() < 1e-12);
        assert!((ps.f_squared(1.0).unwrap() - 81.0).abs() < 1e-12);
        let b0 = 3.0e5;
        let b_range = ps.basis.b_range();
        for k in b_range {
            ps.u[k] = b0;
        }
        for &x in &[0.0, 0.4, 1.0] {
            let expect = 81.0 - 2.0 * MU_0 * 3.0 * (0.5 - 2.0) * b0 * (1.0 - x);
            let got = ps.f_squared(x).unwrap();
            assert!(
                (got - expect).abs() < 1e-9 * expect.abs(),
                "f2({x}) = {got} vs {expect}"
            );
        }
    }

    #[test]
    fn f_squared_detects_unphysical() {
        let basis = ProfileBasis::new(3, 8, 8, 8).unwrap();
        let mut ps = ProfileSet::zero(basis, 3.0, 0.01);
        ps.psi_axis = 10.0;
        ps.psi_b = 0.0;
        let b_range = ps.basis.b_range();
        for k in b_range {
            ps.u[k] = -1.0e6;
        }
        assert!(ps.f_squared(0.0).is_err());
        let (f, clamped) = ps.f_lagged(0.0);
        assert!(clamped && f > 0.0);
    }

    #[test]
    fn integrate_from_matches_fine_quadrature() {
        let basis = SplineBasis::new_uniform(3, 8).unwrap();
        for &x in &[0.0, 0.17, 0.5, 0.83] {
            let exact = basis.integrate_from(x);
            // composite midpoint with many panels as an independent check
            let n = 20000;
            let mut approx = [0.0; 8];
            let dx = (1.0 - x) / n as f64;
            for k in 0..n {
                let xi = x + (k as f64 + 0.5) * dx;
                let v = basis.eval_all(xi).unwrap();
                for i in 0..8 {
                    approx[i] += v[i] * dx;
                }
            }
            for i in 0..8 {
                assert!(
                    (exact[i] - approx[i]).abs() < 1e-7,
                    "integral {i} from {x}: {} vs {}",
                    exact[i],
                    approx[i]
                );
            }
        }
    }
}
