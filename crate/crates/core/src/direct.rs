//! Forward Grad-Shafranov solver: given prescribed source profiles and
//! Dirichlet boundary data, iterate the flux to self-consistency. Provides
//! the ground truth for round-trip validation, the analytic equilibrium
//! with closed-form flux, and filament (wire) fields used to manufacture
//! X-point boundary data.

use crate::diagnostics::{synthesize, DiagnosticGeometry, MeasurementSet, NoiseSpec};
use crate::error::{GsError, Result};
use crate::fem::{for_each_plasma_quad_point, StiffnessOperator};
use crate::geometry::Point;
use crate::mesh::{generate_vessel_mesh, Mesh};
use crate::plasma::FluxState;
use crate::profiles::{ProfileBasis, ProfileSet, SplineBasis};
use crate::MU_0;

/// Prescribed 1-D source function on `[0, 1]`.
#[derive(Debug, Clone)]
pub enum SourceProfile {
    Constant(f64),
    /// spline representation in the same family the inverse solver uses
    Spline { basis: SplineBasis, coeffs: Vec<f64> },
}

impl SourceProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SourceProfile::Constant(c) => *c,
            SourceProfile::Spline { basis, coeffs } => {
                let (first, vals) = basis
                    .eval_nonzero(x.clamp(0.0, 1.0))
                    .expect("clamped x in [0,1]");
                vals.iter()
                    .enumerate()
                    .map(|(j, v)| coeffs[first + j] * v)
                    .sum()
            }
        }
    }

    /// Spline fit through Greville collocation of a shape function (exact
    /// for affine shapes, high-quality interpolation otherwise).
    pub fn from_shape(basis: &SplineBasis, shape: impl Fn(f64) -> f64) -> SourceProfile {
        // collocation at Greville abscissae: solve the small interpolation
        // system B c = g
        let m = basis.count();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for i in 0..m {
            let x = basis.greville(i);
            let vals = basis.eval_all(x).expect("greville in [0,1]");
            a[i][..m].copy_from_slice(&vals[..m]);
            b[i] = shape(x);
        }
        // normal equations of the square collocation system
        let mut ata = vec![vec![0.0; m]; m];
        let mut atb = vec![0.0; m];
        for r in 0..m {
            for i in 0..m {
                atb[i] += a[r][i] * b[r];
                for j in 0..m {
                    ata[i][j] += a[r][i] * a[r][j];
                }
            }
        }
        let coeffs = crate::sparse::solve_spd_dense(&ata, &atb)
            .expect("Greville collocation matrix is nonsingular");
        SourceProfile::Spline {
            basis: basis.clone(),
            coeffs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForwardProblem {
    pub a: SourceProfile,
    pub b: SourceProfile,
    /// Dirichlet boundary flux on mesh boundary nodes
    pub h: Vec<f64>,
    pub r0: f64,
    pub f0: f64,
    /// when set, the source amplitude is rescaled each iteration so the
    /// integrated current matches
    pub ip_target: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            tolerance: 1.0e-7,
            max_iterations: 300,
        }
    }
}

/// Self-consistent forward solution: the converged flux state plus the
/// amplitude factor applied to the prescribed profiles.
pub struct ForwardSolution {
    pub flux: FluxState,
    pub amplitude: f64,
    pub iterations: usize,
}

pub fn solve_forward(
    mesh: &Mesh,
    op: &StiffnessOperator,
    problem: &ForwardProblem,
    cfg: &ForwardConfig,
) -> Result<ForwardSolution> {
    let psi_vacuum = op.solve_with_dirichlet(&vec![0.0; op.interior_count()], &problem.h);
    let mut flux = match FluxState::from_psi(mesh, psi_vacuum.clone()) {
        Ok(f) => f,
        Err(_) => {
            let wall = mesh.boundary_polygon();
            let n = wall.len() as f64;
            let mut c = Point::new(0.0, 0.0);
            for p in &wall {
                c = c + *p;
            }
            let center = Point::new(c.r / n, c.z / n);
            let min_d = wall
                .iter()
                .map(|p| p.dist(center))
                .fold(f64::INFINITY, f64::min);
            FluxState::synthetic_circular(mesh, center, 0.6 * min_d)
        }
    };

    let mut prev_err = f64::INFINITY;
    let mut osc_count = 0usize;
    let mut under_relax = false;
    for iter in 1..=cfg.max_iterations {
        // load vector and raw current of the prescribed sources at psibar_n
        let mut load = vec![0.0; op.interior_count()];
        let mut i_raw = 0.0;
        for_each_plasma_quad_point(mesh, &flux, |t, p, w, psibar, bary| {
            let x = psibar.clamp(0.0, 1.0);
            let j = p.r / problem.r0 * problem.a.eval(x) + problem.r0 / p.r * problem.b.eval(x);
            i_raw += w * j;
            let tri = mesh.triangle(t);
            for v in 0..3 {
                if let Some(row) = op.interior_index(tri[v]) {
                    load[row] += w * j * bary[v];
                }
            }
        });
        let amplitude = match problem.ip_target {
            Some(ip) => {
                if i_raw.abs() < 1e-300 {
                    return Err(GsError::EmptyPlasma);
                }
                ip / i_raw
            }
            None => 1.0,
        };
        for v in load.iter_mut() {
            *v *= amplitude;
        }
        let mut psi_new = op.solve_with_dirichlet(&load, &problem.h);
        if under_relax {
            for (nv, ov) in psi_new.iter_mut().zip(&flux.psi) {
                *nv = 0.5 * (*nv + ov);
            }
        }
        let flux_new = FluxState::from_psi(mesh, psi_new)?;
        let span = (flux_new.psi_axis - flux_new.psi_b).abs().max(1e-300);
        let err = flux
            .psi
            .iter()
            .zip(&flux_new.psi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / span;
        flux = flux_new;
        if err < cfg.tolerance {
            // one more pass fixes the amplitude against the converged mask
            let mut i_final = 0.0;
            for_each_plasma_quad_point(mesh, &flux, |_t, p, w, psibar, _| {
                let x = psibar.clamp(0.0, 1.0);
                i_final += w
                    * (p.r / problem.r0 * problem.a.eval(x)
                        + problem.r0 / p.r * problem.b.eval(x));
            });
            let amplitude = match problem.ip_target {
                Some(ip) => ip / i_final,
                None => 1.0,
            };
            return Ok(ForwardSolution {
                flux,
                amplitude,
                iterations: iter,
            });
        }
        if err > prev_err {
            osc_count += 1;
            if osc_count >= 2 {
                under_relax = true;
            }
        } else {
            osc_count = 0;
        }
        prev_err = err;
    }
    Err(GsError::NonConvergence {
        iterations: cfg.max_iterations,
        last_change: prev_err,
    })
}

/// The effective profile set of a forward solution, expressed in the given
/// inverse basis (amplitude folded in); the truth record for round trips.
/// The optional density shape populates the n_e block (it carries no
/// current, but drives the chord diagnostics).
pub fn truth_profiles(
    basis: &ProfileBasis,
    problem: &ForwardProblem,
    sol: &ForwardSolution,
    ne_shape: Option<&dyn Fn(f64) -> f64>,
) -> ProfileSet {
    let a_fit = SourceProfile::from_shape(&basis.a, |x| sol.amplitude * problem.a.eval(x));
    let b_fit = SourceProfile::from_shape(&basis.b, |x| sol.amplitude * problem.b.eval(x));
    let mut u = vec![0.0; basis.len()];
    if let SourceProfile::Spline { coeffs, .. } = &a_fit {
        u[basis.a_range()].copy_from_slice(coeffs);
    }
    if let SourceProfile::Spline { coeffs, .. } = &b_fit {
        u[basis.b_range()].copy_from_slice(coeffs);
    }
    if let Some(shape) = ne_shape {
        if let SourceProfile::Spline { coeffs, .. } = SourceProfile::from_shape(&basis.ne, shape) {
            u[basis.ne_range()].copy_from_slice(&coeffs);
        }
    }
    ProfileSet {
        basis: basis.clone(),
        u,
        r0: problem.r0,
        f0: problem.f0,
        psi_axis: sol.flux.psi_axis,
        psi_b: sol.flux.psi_b,
    }
}

// ---------------------------------------------------------------------------
// analytic equilibrium with closed-form flux (constant sources)
// ---------------------------------------------------------------------------

/// Exact equilibrium for constant A and B: the flux is the closed-form
/// quartic psi = psi_axis - (alpha/8)(r² - R0²)² - z²(beta r² + gamma)/2,
/// which satisfies the field equation with A0 = R0(alpha+beta)/mu0 and
/// B0 = gamma/(mu0 R0). The domain is one of its own flux surfaces.
#[derive(Debug, Clone)]
pub struct AnalyticEquilibrium {
    pub r0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub psi_axis: f64,
    /// psi_axis - psi_boundary of the domain surface
    pub delta: f64,
    pub f0: f64,
}

impl AnalyticEquilibrium {
    /// Machine-scale default: R0 = 3 m, sources 6e5 and 2e5 A/m², a ~1 m
    /// domain surface.
    pub fn standard() -> AnalyticEquilibrium {
        let r0: f64 = 3.0;
        let a0 = 6.0e5;
        let b0 = 2.0e5;
        let beta = 0.05;
        let alpha = MU_0 * a0 / r0 - beta;
        let gamma = MU_0 * r0 * b0;
        // half-width parameter s = 5.8 gives a minor radius near 1 m
        let s: f64 = 5.8;
        AnalyticEquilibrium {
            r0,
            alpha,
            beta,
            gamma,
            psi_axis: 1.0,
            delta: alpha * s * s / 8.0,
            f0: 8.1,
        }
    }

    pub fn a0(&self) -> f64 {
        self.r0 * (self.alpha + self.beta) / MU_0
    }

    pub fn b0(&self) -> f64 {
        self.gamma / (MU_0 * self.r0)
    }

    pub fn psi(&self, p: Point) -> f64 {
        let d = p.r * p.r - self.r0 * self.r0;
        self.psi_axis
            - self.alpha / 8.0 * d * d
            - 0.5 * p.z * p.z * (self.beta * p.r * p.r + self.gamma)
    }

    pub fn grad_psi(&self, p: Point) -> Point {
        let d = p.r * p.r - self.r0 * self.r0;
        Point::new(
            -0.5 * self.alpha * d * p.r - self.beta * p.r * p.z * p.z,
            -p.z * (self.beta * p.r * p.r + self.gamma),
        )
    }

    pub fn psi_boundary(&self) -> f64 {
        self.psi_axis - self.delta
    }

    /// The domain flux surface psi = psi_boundary, sampled by radial
    /// bisection from the axis.
    pub fn boundary_contour(&self, n: usize) -> Vec<Point> {
        let target = self.psi_boundary();
        (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let dir = Point::new(theta.cos(), theta.sin());
                let mut lo = 0.0f64;
                let mut hi = 0.1f64;
                while self.psi(Point::new(self.r0 + hi * dir.r, hi * dir.z)) > target {
                    hi *= 1.5;
                    if hi > 100.0 {
                        break;
                    }
                }
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.psi(Point::new(self.r0 + mid * dir.r, mid * dir.z)) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t = 0.5 * (lo + hi);
                Point::new(self.r0 + t * dir.r, t * dir.z)
            })
            .collect()
    }

    pub fn mesh(&self, target_h: f64) -> Result<Mesh> {
        generate_vessel_mesh(&self.boundary_contour(1440), target_h)
    }

    pub fn boundary_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.boundary_nodes()
            .iter()
            .map(|&b| self.psi(mesh.node(b)))
            .collect()
    }

    pub fn forward_problem(&self, mesh: &Mesh) -> ForwardProblem {
        ForwardProblem {
            a: SourceProfile::Constant(self.a0()),
            b: SourceProfile::Constant(self.b0()),
            h: self.boundary_values(mesh),
            r0: self.r0,
            f0: self.f0,
            ip_target: None,
        }
    }

    /// L2 norm of (psi_h - psi_exact) over the mesh by mid-edge quadrature.
    pub fn l2_error(&self, mesh: &Mesh, psi_h: &[f64]) -> f64 {
        const MID: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        let mut acc = 0.0;
        for t in 0..mesh.triangle_count() {
            let tri = mesh.triangle(t);
            let pts = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
            let w = mesh.area(t) / 3.0;
            for bary in MID {
                let p = Point::new(
                    bary[0] * pts[0].r + bary[1] * pts[1].r + bary[2] * pts[2].r,
                    bary[0] * pts[0].z + bary[1] * pts[1].z + bary[2] * pts[2].z,
                );
                let vh =
                    bary[0] * psi_h[tri[0]] + bary[1] * psi_h[tri[1]] + bary[2] * psi_h[tri[2]];
                acc += w * (vh - self.psi(p)).powi(2);
            }
        }
        acc.sqrt()
    }
}

// ---------------------------------------------------------------------------
// filament (circular wire) flux, for manufacturing X-point boundary data
// ---------------------------------------------------------------------------

/// Complete elliptic integrals K(m) and E(m) with parameter m = k², by the
/// arithmetic-geometric mean.
pub fn elliptic_ke(m: f64) -> (f64, f64) {
    assert!((0.0..1.0).contains(&m), "elliptic parameter m in [0,1)");
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut c = m.sqrt();
    let mut sum = 0.5 * c * c;
    let mut pow = 1.0f64;
    for _ in 0..40 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        pow *= 2.0;
        sum += 0.5 * pow * c * c;
        a = an;
        b = bn;
        if c.abs() < 1e-17 {
            break;
        }
    }
    let k = std::f64::consts::FRAC_PI_2 / a;
    let e = k * (1.0 - sum);
    (k, e)
}

/// Poloidal flux of a toroidal current filament at (rc, zc) carrying
/// current `current`, in the same flux convention as the field relations.
pub fn filament_psi(p: Point, rc: f64, zc: f64, current: f64) -> f64 {
    let dz = p.z - zc;
    let denom = (p.r + rc) * (p.r + rc) + dz * dz;
    let m = 4.0 * p.r * rc / denom;
    let (kk, ee) = elliptic_ke(m.min(1.0 - 1e-15));
    let k = m.sqrt().max(1e-300);
    MU_0 * current / (2.0 * std::f64::consts::PI)
        * (p.r * rc).sqrt()
        * ((2.0 / k - k) * kk - 2.0 / k * ee)
}

/// A set of external filaments plus a uniform vertical field, defining
/// vacuum boundary data.
#[derive(Debug, Clone)]
pub struct FilamentSet {
    pub filaments: Vec<(Point, f64)>,
    /// uniform vertical field B_z, T (flux contribution B_z r²/2)
    pub vertical_field: f64,
}

impl FilamentSet {
    pub fn psi(&self, p: Point) -> f64 {
        self.filaments
            .iter()
            .map(|&(c, i)| filament_psi(p, c.r, c.z, i))
            .sum::<f64>()
            + 0.5 * self.vertical_field * p.r * p.r
    }

    pub fn boundary_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.boundary_nodes()
            .iter()
            .map(|&b| self.psi(mesh.node(b)))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// built-in cases
// ---------------------------------------------------------------------------

/// D-shaped vessel wall (Miller parametrization).
pub fn vessel_contour(n: usize) -> Vec<Point> {
    let (rg, a, kappa, delta) = (3.0, 1.35, 1.8, 0.25);
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point::new(
                rg + a * (t + delta * t.sin()).cos(),
                kappa * a * t.sin(),
            )
        })
        .collect()
}

/// Kind of prescribed current-profile shape for the built-in cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFamily {
    /// peaked on axis, monotonically decreasing
    Monotonic,
    /// hollow current profile producing an off-axis q minimum
    ReversedShear,
}

/// A full synthetic case: vessel mesh boundary data from filaments, source
/// profiles, the density truth and the diagnostic layout.
pub struct CaseSetup {
    pub problem: ForwardProblem,
    pub geometry: DiagnosticGeometry,
    pub ip: f64,
    /// density truth on `[0,1]`, m^-3
    pub ne_shape: fn(f64) -> f64,
}

/// Boundary data: a plasma-like filament plus a divertor coil below the
/// vessel pulling an X-point into the lower chamber, a weaker upper coil
/// recentering the column, and an inward-pushing vertical field.
pub fn diverted_case(mesh: &Mesh, basis: &ProfileBasis, family: ProfileFamily) -> CaseSetup {
    let ip = 2.0e6;
    let filaments = FilamentSet {
        filaments: vec![
            (Point::new(3.0, 0.1), ip),
            (Point::new(2.8, -3.4), 0.8 * ip),
            (Point::new(3.0, 3.4), 0.5 * ip),
        ],
        vertical_field: -0.2,
    };
    let h = filaments.boundary_values(mesh);
    let (a_shape, b_shape): (fn(f64) -> f64, fn(f64) -> f64) = match family {
        ProfileFamily::Monotonic => (
            |x| (1.0 - x) * (1.0 + 0.3 * x),
            |x| 1.0 - x * x,
        ),
        ProfileFamily::ReversedShear => (
            |x| (1.0 - x) * (0.22 + 3.1 * x * (1.0 - x)),
            |x| (1.0 - x) * (0.08 + 1.3 * x),
        ),
    };
    let problem = ForwardProblem {
        a: SourceProfile::from_shape(&basis.a, move |x| 8.0e5 * a_shape(x)),
        b: SourceProfile::from_shape(&basis.b, move |x| 1.4e5 * b_shape(x)),
        h,
        r0: 3.0,
        f0: 8.1,
        ip_target: Some(ip),
    };
    CaseSetup {
        problem,
        geometry: standard_diagnostics(mesh),
        ip,
        ne_shape: |x| 3.2e19 * (1.0 - x * x) * (1.0 - 0.4 * x),
    }
}

/// Probe ring on the wall, vertical and horizontal interferometry and
/// polarimetry chords, and a midplane MSE array.
pub fn standard_diagnostics(mesh: &Mesh) -> DiagnosticGeometry {
    let nb = mesh.boundary_nodes().len();
    let n_probes = 40.min(nb);
    let stride = nb / n_probes;
    let probes: Vec<(Point, Point)> = (0..n_probes)
        .map(|k| {
            let idx = k * stride;
            (
                mesh.node(mesh.boundary_nodes()[idx]),
                mesh.boundary_normal(idx),
            )
        })
        .collect();
    let mut chords: Vec<Vec<Point>> = Vec::new();
    for &r in &[2.35, 2.7, 3.05, 3.4] {
        chords.push(vec![Point::new(r, -2.6), Point::new(r, 2.6)]);
    }
    for &z in &[-0.6, 0.0, 0.55, 1.1] {
        chords.push(vec![Point::new(1.6, z), Point::new(4.4, z)]);
    }
    let mse: Vec<(Point, [f64; 6])> = (0..12)
        .map(|k| {
            let r = 2.25 + 1.45 * k as f64 / 11.0;
            (Point::new(r, 0.05), [0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
        })
        .collect();
    DiagnosticGeometry { probes, chords, mse }
}

/// A fully-synthesized case bundle: the measurement set the inverse solver
/// sees plus the truth needed to score it.
pub struct CaseBundle {
    pub measurements: MeasurementSet,
    pub truth_flux: FluxState,
    pub truth_profiles: ProfileSet,
}

/// Run the forward solve and synthesize the diagnostics for a case.
pub fn export_case(
    mesh: &Mesh,
    op: &StiffnessOperator,
    setup: &CaseSetup,
    basis: &ProfileBasis,
    noise: NoiseSpec,
) -> Result<CaseBundle> {
    let sol = solve_forward(mesh, op, &setup.problem, &ForwardConfig::default())?;
    let truth = truth_profiles(basis, &setup.problem, &sol, Some(&setup.ne_shape));
    let measurements = synthesize(mesh, &sol.flux, &truth, &setup.geometry, noise)?;
    Ok(CaseBundle {
        measurements,
        truth_flux: sol.flux,
        truth_profiles: truth,
    })
}
