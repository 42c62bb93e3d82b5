//! The reconstruction engine: weighted, nondimensionalized observation
//! rows are fitted by Tikhonov-regularized least squares through the normal
//! equations, the poloidal-field unknowns and the density unknowns
//! alternating in half-sweeps, and the flux map is advanced by Picard
//! fixed-point updates until the relative change drops below tolerance (or
//! for a fixed iteration count in the real-time sequence mode).

use crate::diagnostics::{
    chord_quadrature, current_row, field_functionals, integrated_current, interferometry_rows,
    mse_rows, polarimetry_rows_density, polarimetry_rows_field, probe_functional, probe_rows,
    ChordQuadrature, MeasurementSet, ObservationRow, RowBlock,
};
use crate::error::{GsError, Result};
use crate::fem::{assemble_current_matrix, assemble_stiffness, CurrentMatrix, StiffnessOperator};
use crate::mesh::Mesh;
use crate::plasma::{BoundaryKind, FluxState};
use crate::profiles::{ProfileBasis, ProfileSet, RegularizationMatrix};
use crate::sparse::solve_spd_dense;

/// Which measurement families constrain the fit: magnetics-only or the full
/// set with internal measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    MagneticsOnly,
    Full,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::MagneticsOnly => write!(f, "M"),
            Mode::Full => write!(f, "J"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: Mode,
    /// polarimetry weight
    pub k1: f64,
    /// interferometry weight
    pub k2: f64,
    /// MSE weight
    pub k3: f64,
    /// total-current weight
    pub k_ip: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub max_iterations: usize,
    pub rt_iterations: usize,
    /// convergence tolerance on the max-norm relative flux change
    pub tolerance: f64,
    pub basis_degree: usize,
    pub m_a: usize,
    pub m_b: usize,
    pub m_ne: usize,
    pub parallel: bool,
    /// store (psi, u) after every iteration for offline cost audits
    pub keep_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: Mode::Full,
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            k_ip: 1.0e3,
            eps1: 1.0e-2,
            eps2: 1.0e-2,
            eps3: 1.0e-2,
            max_iterations: 50,
            rt_iterations: 2,
            tolerance: 1.0e-4,
            basis_degree: 3,
            m_a: 8,
            m_b: 8,
            m_ne: 8,
            parallel: true,
            keep_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("K1", self.k1),
            ("K2", self.k2),
            ("K3", self.k3),
            ("K_Ip", self.k_ip),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(GsError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.rt_iterations < 1 {
            return Err(GsError::Config("rt_iterations must be >= 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(GsError::Config("max_iterations must be >= 1".into()));
        }
        if self.tolerance <= 0.0 {
            return Err(GsError::Config("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<ProfileBasis> {
        ProfileBasis::new(self.basis_degree, self.m_a, self.m_b, self.m_ne)
    }

    fn uses_internal(&self) -> bool {
        self.mode == Mode::Full
    }
}

/// Per-iteration records: raw cost components (unweighted residual sums per
/// measurement family, plus the regularization quadratic form), the weighted
/// total actually minimized, and the convergence monitors.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub j0: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub j_eps: f64,
    pub j_total_weighted: f64,
    pub rel_change: f64,
    pub u_norm: f64,
    pub psi_axis: f64,
    pub psi_b: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub flux: FluxState,
    pub profiles: ProfileSet,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
    /// (psi, u) snapshots per iteration when cfg.keep_iterates is set
    pub iterates: Vec<(Vec<f64>, Vec<f64>)>,
    pub wall_seconds: f64,
    /// wall time of each Picard iteration (D assembly through topology)
    pub iteration_seconds: Vec<f64>,
}

/// Solve min ||sqrt(W)(C u - k~)||² + uᵀΛu over the `active` column range,
/// holding the remaining coefficients at their values in `fixed_u`.
pub fn solve_least_squares(
    rows: &[ObservationRow],
    weights: &[f64],
    lambda: &RegularizationMatrix,
    basis: &ProfileBasis,
    active: std::ops::Range<usize>,
    fixed_u: &[f64],
) -> Result<Vec<f64>> {
    let na = active.len();
    let mut normal = vec![vec![0.0; na]; na];
    let mut rhs = vec![0.0; na];
    for (row, &w) in rows.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        // move the inactive-column part of the model into the target
        let mut k_eff = row.target - row.offset;
        for (j, c) in row.coeffs.iter().enumerate() {
            if !active.contains(&j) {
                k_eff -= c * fixed_u[j];
            }
        }
        for i in 0..na {
            let ci = row.coeffs[active.start + i];
            if ci == 0.0 {
                continue;
            }
            rhs[i] += w * ci * k_eff;
            for j in 0..na {
                normal[i][j] += w * ci * row.coeffs[active.start + j];
            }
        }
    }
    lambda.add_to_normal(basis, &active, &mut normal);
    let sol = solve_spd_dense(&normal, &rhs).map_err(|_| {
        GsError::IllPosed(
            "normal matrix is singular; with all regularization off the profile \
             identification is ill-posed"
                .into(),
        )
    })?;
    let mut u = fixed_u.to_vec();
    for (i, v) in sol.iter().enumerate() {
        u[active.start + i] = *v;
    }
    Ok(u)
}

/// One Picard flux update: psi_{n+1} = K^-1 [D(psi_n) u + h], followed by
/// the topology pipeline on the new flux.
pub fn picard_update(
    mesh: &Mesh,
    op: &StiffnessOperator,
    d: &CurrentMatrix,
    u: &[f64],
    h: &[f64],
) -> Result<(Vec<f64>, FluxState)> {
    let load = d.mul_u(u);
    let psi = op.solve_with_dirichlet(&load, h);
    let flux = FluxState::from_psi(mesh, psi.clone())?;
    Ok((psi, flux))
}


/// Raw cost components of the fit at a given state, evaluated nonlinearly:
/// probe, polarimetry, interferometry and MSE residual sums.
pub fn measurement_costs(
    mesh: &Mesh,
    flux: &FluxState,
    ps: &ProfileSet,
    meas: &MeasurementSet,
    quads: &[ChordQuadrature],
) -> Result<[f64; 4]> {
    let mut j0 = 0.0;
    for p in &meas.probes {
        let func = probe_functional(mesh, p.pos, p.dir)?;
        j0 += (func.apply(&flux.psi) - p.value).powi(2);
    }
    let mut j1 = 0.0;
    let mut j2 = 0.0;
    for (chord, quad) in meas.chords.iter().zip(quads) {
        j1 += (quad.faraday_integral(mesh, flux, ps) - chord.alpha).powi(2);
        j2 += (quad.density_integral(flux, ps) - chord.beta).powi(2);
    }
    let mut j3 = 0.0;
    for m in &meas.mse {
        let (br_f, bz_f) = field_functionals(mesh, m.pos)?;
        let br = br_f.apply(&flux.psi);
        let bz = bz_f.apply(&flux.psi);
        let x = flux.psibar_at(mesh, m.pos).ok_or(GsError::OutsideDomain)?;
        let (f_val, _) = ps.f_lagged(x);
        let bphi = f_val / m.pos.r;
        let reconstructed = ((m.a[0] * br + m.a[1] * bz + m.a[2] * bphi)
            / (m.a[3] * br + m.a[4] * bz + m.a[5] * bphi))
            .atan();
        j3 += (reconstructed - m.gamma).powi(2);
    }
    Ok([j0, j1, j2, j3])
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 1.0;
    }
    let m = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Per-block nondimensionalization scales derived from the measurements.
struct BlockScales {
    probe: f64,
    polarimetry: f64,
    interferometry: f64,
    mse: f64,
    ip: f64,
}

impl BlockScales {
    fn from(meas: &MeasurementSet) -> BlockScales {
        BlockScales {
            probe: rms(meas.probes.iter().map(|p| p.value)),
            polarimetry: rms(meas.chords.iter().map(|c| c.alpha)),
            interferometry: rms(meas.chords.iter().map(|c| c.beta)),
            mse: rms(meas.mse.iter().map(|m| m.gamma.tan())),
            ip: if meas.globals.ip.abs() > 0.0 {
                meas.globals.ip.abs()
            } else {
                1.0
            },
        }
    }

    fn weight(&self, block: RowBlock, cfg: &SolverConfig) -> f64 {
        match block {
            RowBlock::Probe => 1.0 / (self.probe * self.probe),
            RowBlock::Polarimetry => cfg.k1 / (self.polarimetry * self.polarimetry),
            RowBlock::Interferometry => cfg.k2 / (self.interferometry * self.interferometry),
            RowBlock::Mse => cfg.k3 / (self.mse * self.mse),
            RowBlock::PlasmaCurrent => cfg.k_ip / (self.ip * self.ip),
        }
    }
}

enum IterationPolicy {
    Converge,
    Fixed(usize),
}

/// Reconstruction driver holding the per-mesh state that is reused across
/// frames: the stiffness factorization and cached chord quadratures.
pub struct Reconstructor<'m> {
    pub mesh: &'m Mesh,
    pub op: StiffnessOperator,
    chord_cache: std::sync::Mutex<Option<(Vec<(usize, Point2)>, Vec<ChordQuadrature>)>>,
}

type Point2 = crate::geometry::Point;

impl<'m> Reconstructor<'m> {
    pub fn new(mesh: &'m Mesh) -> Result<Reconstructor<'m>> {
        Ok(Reconstructor {
            mesh,
            op: assemble_stiffness(mesh)?,
            chord_cache: std::sync::Mutex::new(None),
        })
    }

    fn chord_quads(&self, meas: &MeasurementSet) -> Vec<ChordQuadrature> {
        let key: Vec<(usize, Point2)> = meas
            .chords
            .iter()
            .map(|c| (c.points.len(), c.points[0]))
            .collect();
        {
            let cache = self.chord_cache.lock().expect("chord cache lock");
            if let Some((ref k, ref q)) = *cache {
                if *k == key {
                    return q.clone();
                }
            }
        }
        let quads: Vec<ChordQuadrature> = meas
            .chords
            .iter()
            .map(|c| chord_quadrature(self.mesh, &c.points))
            .collect();
        *self.chord_cache.lock().expect("chord cache lock") = Some((key, quads.clone()));
        quads
    }

    /// Offline reconstruction: iterate to convergence.
    pub fn reconstruct(
        &self,
        meas: &MeasurementSet,
        cfg: &SolverConfig,
        warm: Option<(&FluxState, &ProfileSet)>,
    ) -> Result<ReconstructionResult> {
        self.run(meas, cfg, warm, IterationPolicy::Converge)
    }

    /// Real-time style reconstruction: exactly `cfg.rt_iterations`
    /// iterations, no early exit.
    pub fn reconstruct_fixed(
        &self,
        meas: &MeasurementSet,
        cfg: &SolverConfig,
        warm: Option<(&FluxState, &ProfileSet)>,
    ) -> Result<ReconstructionResult> {
        self.run(meas, cfg, warm, IterationPolicy::Fixed(cfg.rt_iterations))
    }

    fn cold_start(
        &self,
        meas: &MeasurementSet,
        cfg: &SolverConfig,
        basis: &ProfileBasis,
        psi_vacuum: &[f64],
    ) -> Result<(FluxState, ProfileSet)> {
        let mesh = self.mesh;
        let flux0 = match FluxState::from_psi(mesh, psi_vacuum.to_vec()) {
            Ok(f) => f,
            Err(_) => {
                // vacuum field peaks on the wall; place a synthetic circular
                // plasma at the wall centroid
                let wall = mesh.boundary_polygon();
                let n = wall.len() as f64;
                let mut c = Point2::new(0.0, 0.0);
                for p in &wall {
                    c = c + *p;
                }
                let center = Point2::new(c.r / n, c.z / n);
                let min_d = wall.iter().map(|p| p.dist(center)).fold(f64::INFINITY, f64::min);
                FluxState::synthetic_circular(mesh, center, 0.6 * min_d)
            }
        };
        // one iteration with the parabolic source A(x) = a0 (1 - x), B = 0,
        // amplitude matched to the measured plasma current
        let mut ps = ProfileSet::zero(basis.clone(), meas.globals.r0, meas.globals.f0);
        ps.psi_axis = flux0.psi_axis;
        ps.psi_b = flux0.psi_b;
        for (j, k) in basis.a_range().enumerate() {
            ps.u[k] = 1.0 - basis.a.greville(j);
        }
        let row = current_row(mesh, &flux0, basis, meas.globals.r0, meas.globals.ip);
        let raw: f64 = row
            .coeffs
            .iter()
            .zip(&ps.u)
            .map(|(c, v)| c * v)
            .sum();
        if raw.abs() > 0.0 {
            let s = meas.globals.ip / raw;
            for k in basis.a_range() {
                ps.u[k] *= s;
            }
        }
        let d = assemble_current_matrix(mesh, &self.op, &flux0, basis, meas.globals.r0, cfg.parallel);
        let (_, flux1) = picard_update(mesh, &self.op, &d, &ps.u, &meas.h)?;
        ps.psi_axis = flux1.psi_axis;
        ps.psi_b = flux1.psi_b;
        Ok((flux1, ps))
    }

    fn run(
        &self,
        meas: &MeasurementSet,
        cfg: &SolverConfig,
        warm: Option<(&FluxState, &ProfileSet)>,
        policy: IterationPolicy,
    ) -> Result<ReconstructionResult> {
        match self.run_once(meas, cfg, warm, &policy, false) {
            Err(GsError::NonConvergence { .. }) | Err(GsError::Divergence { .. })
                if matches!(policy, IterationPolicy::Converge) =>
            {
                // marginal topologies can cycle between near-degenerate
                // states; a fully damped restart averages them out
                let mut res = self.run_once(meas, cfg, warm, &policy, true)?;
                res.warnings
                    .push("converged only under damped iteration (marginal topology)".into());
                Ok(res)
            }
            other => other,
        }
    }

    fn run_once(
        &self,
        meas: &MeasurementSet,
        cfg: &SolverConfig,
        warm: Option<(&FluxState, &ProfileSet)>,
        policy: &IterationPolicy,
        start_damped: bool,
    ) -> Result<ReconstructionResult> {
        let t0 = std::time::Instant::now();
        cfg.validate()?;
        meas.validate(self.mesh)?;
        let mesh = self.mesh;
        let basis = cfg.basis()?;
        let quads = self.chord_quads(meas);
        for (k, q) in quads.iter().enumerate() {
            if q.qps.is_empty() {
                return Err(GsError::Measurement(format!(
                    "chord {k} lies entirely outside the domain"
                )));
            }
        }
        let scales = BlockScales::from(meas);
        let lambda = self.regularization(meas, cfg, &basis, &quads)?;
        let psi_vacuum = self
            .op
            .solve_with_dirichlet(&vec![0.0; self.op.interior_count()], &meas.h);

        let mut warnings: Vec<String> = Vec::new();
        let (mut flux, mut ps) = match warm {
            Some((f, p)) => {
                if p.u.len() != basis.len() {
                    return Err(GsError::Config(
                        "warm-start profile basis does not match the configured basis".into(),
                    ));
                }
                // project the previous equilibrium onto the new boundary
                // data and measured current before the first profile solve:
                // a short amplitude-rescaled flux continuation, so the free
                // iterations only absorb the frame-to-frame shape change
                let mut ps = p.clone();
                let mut projected = f.clone();
                for _ in 0..2 {
                    let i_cur = integrated_current(mesh, &projected, &ps);
                    if i_cur.abs() > 0.0 && meas.globals.ip.abs() > 0.0 {
                        let ratio = meas.globals.ip / i_cur;
                        if (ratio - 1.0).abs() > 1e-4 {
                            for k in basis.a_range().chain(basis.b_range()) {
                                ps.u[k] *= ratio;
                            }
                        }
                    }
                    let d = assemble_current_matrix(
                        mesh,
                        &self.op,
                        &projected,
                        &basis,
                        meas.globals.r0,
                        cfg.parallel,
                    );
                    let (_, fnew) = picard_update(mesh, &self.op, &d, &ps.u, &meas.h)?;
                    projected = fnew;
                }
                ps.psi_axis = projected.psi_axis;
                ps.psi_b = projected.psi_b;
                (projected, ps)
            }
            None => self.cold_start(meas, cfg, &basis, &psi_vacuum)?,
        };
        warnings.extend(flux.warnings.iter().cloned());

        let use_internal = cfg.uses_internal();
        let have_chords = !meas.chords.is_empty();
        let have_mse = !meas.mse.is_empty();
        if !use_internal && (have_chords || have_mse) {
            warnings.push(
                "magnetics-only mode: chord and MSE measurements present but ignored".into(),
            );
        }

        let max_iter = match policy {
            IterationPolicy::Converge => cfg.max_iterations,
            IterationPolicy::Fixed(n) => *n,
        };
        let mut trace: Vec<IterationRecord> = Vec::with_capacity(max_iter);
        let mut iteration_seconds: Vec<f64> = Vec::with_capacity(max_iter);
        let mut iterates = Vec::new();
        let mut converged = false;
        let mut prev_change = f64::INFINITY;
        let mut best_change = f64::INFINITY;
        let mut stall = 0usize;
        let mut grow_count = 0usize;
        let mut damped = start_damped;
        let mut clamped_last = false;

        for iter in 0..max_iter {
            let t_iter = std::time::Instant::now();
            let d = assemble_current_matrix(mesh, &self.op, &flux, &basis, meas.globals.r0, cfg.parallel);

            // field sweep: probes (+ polarimetry and MSE with lagged
            // density/field factors) + total current, over the A,B blocks
            let mut rows = probe_rows(mesh, &self.op, &d, &psi_vacuum, &meas.probes, cfg.parallel)?;
            if use_internal && have_chords && cfg.k1 > 0.0 {
                rows.extend(polarimetry_rows_field(
                    mesh,
                    &self.op,
                    &d,
                    &psi_vacuum,
                    &flux,
                    &ps,
                    &meas.chords,
                    &quads,
                    cfg.parallel,
                ));
            }
            if use_internal && have_mse && cfg.k3 > 0.0 {
                let (mse, clamped) = mse_rows(
                    mesh,
                    &self.op,
                    &d,
                    &psi_vacuum,
                    &flux,
                    &ps,
                    &meas.mse,
                    cfg.parallel,
                )?;
                clamped_last = clamped;
                rows.extend(mse);
            }
            rows.push(current_row(mesh, &flux, &basis, meas.globals.r0, meas.globals.ip));
            let weights: Vec<f64> = rows.iter().map(|r| scales.weight(r.block, cfg)).collect();
            let ab_range = 0..basis.ne_range().start;
            let mut u_next = solve_least_squares(&rows, &weights, &lambda, &basis, ab_range, &ps.u)?;

            // density sweep: interferometry plus polarimetry with the field
            // lagged, over the n_e block
            if use_internal && have_chords && (cfg.k1 > 0.0 || cfg.k2 > 0.0) {
                let mut ne_rows = Vec::new();
                if cfg.k2 > 0.0 {
                    ne_rows.extend(interferometry_rows(&flux, &meas.chords, &quads, &basis));
                }
                if cfg.k1 > 0.0 {
                    ne_rows.extend(polarimetry_rows_density(
                        mesh,
                        &flux,
                        &meas.chords,
                        &quads,
                        &basis,
                    ));
                }
                let ne_weights: Vec<f64> =
                    ne_rows.iter().map(|r| scales.weight(r.block, cfg)).collect();
                u_next = solve_least_squares(
                    &ne_rows,
                    &ne_weights,
                    &lambda,
                    &basis,
                    basis.ne_range(),
                    &u_next,
                )?;
            }

            if damped {
                // blend the coefficients too; the flux blend alone cannot
                // break cycles driven by topology-sensitive profile swings
                for (nv, ov) in u_next.iter_mut().zip(&ps.u) {
                    *nv = 0.5 * (*nv + ov);
                }
            }
            let mut ps_next = ProfileSet {
                basis: basis.clone(),
                u: u_next,
                r0: meas.globals.r0,
                f0: meas.globals.f0,
                psi_axis: flux.psi_axis,
                psi_b: flux.psi_b,
            };
            let (mut psi_new, mut flux_new) =
                picard_update(mesh, &self.op, &d, &ps_next.u, &meas.h)?;
            if damped || grow_count > 0 {
                // damp an oscillating iteration before judging divergence
                for (nv, ov) in psi_new.iter_mut().zip(&flux.psi) {
                    *nv = 0.5 * (*nv + ov);
                }
                flux_new = FluxState::from_psi(mesh, psi_new.clone())?;
            }
            ps_next.psi_axis = flux_new.psi_axis;
            ps_next.psi_b = flux_new.psi_b;
            // D assembly through topology: the stages a real-time frame pays
            iteration_seconds.push(t_iter.elapsed().as_secs_f64());

            let span = (flux_new.psi_axis - flux_new.psi_b).abs().max(1e-300);
            let rel_change = flux
                .psi
                .iter()
                .zip(&psi_new)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / span;

            let [j0, j1, j2, j3] = measurement_costs(mesh, &flux_new, &ps_next, meas, &quads)?;
            let blocks = lambda.block_forms(&basis, &ps_next.u);
            let j_eps = blocks.iter().sum::<f64>();
            let j_total_weighted = j0 / (scales.probe * scales.probe)
                + cfg.k1 * j1 / (scales.polarimetry * scales.polarimetry)
                + cfg.k2 * j2 / (scales.interferometry * scales.interferometry)
                + cfg.k3 * j3 / (scales.mse * scales.mse)
                + j_eps;
            trace.push(IterationRecord {
                j0,
                j1,
                j2,
                j3,
                j_eps,
                j_total_weighted,
                rel_change,
                u_norm: ps_next.u.iter().map(|v| v * v).sum::<f64>().sqrt(),
                psi_axis: flux_new.psi_axis,
                psi_b: flux_new.psi_b,
            });
            if cfg.keep_iterates {
                iterates.push((psi_new.clone(), ps_next.u.clone()));
            }

            flux = flux_new;
            ps = ps_next;

            if rel_change > prev_change {
                grow_count += 1;
                if grow_count >= 2 {
                    // oscillation: keep the update damped from here on
                    damped = true;
                }
                if grow_count >= 3 {
                    return Err(GsError::Divergence {
                        iterations: iter + 1,
                    });
                }
            } else {
                grow_count = grow_count.saturating_sub(1);
            }
            // cycles that alternate rise and fall evade the growth counter;
            // latch damping when the residual stops reaching new lows
            if rel_change < 0.9 * best_change {
                best_change = rel_change;
                stall = 0;
            } else {
                stall += 1;
                if stall >= 6 {
                    damped = true;
                }
            }
            prev_change = rel_change;

            if matches!(policy, IterationPolicy::Converge) && rel_change < cfg.tolerance {
                converged = true;
                break;
            }
        }

        if let IterationPolicy::Converge = policy {
            if !converged {
                return Err(GsError::NonConvergence {
                    iterations: max_iter,
                    last_change: prev_change,
                });
            }
        } else {
            converged = prev_change < cfg.tolerance;
        }
        if clamped_last {
            warnings.push("unphysical f² clamped in MSE lagged evaluation".into());
        }

        // positivity is not enforced during the fit; report violations
        let p_floor = -1e-3 * ps.pressure(0.0).abs().max(1.0);
        let mut p_bad = false;
        let mut ne_bad = false;
        let mut f2_bad = false;
        for k in 0..=40 {
            let x = k as f64 / 40.0;
            if ps.pressure(x) < p_floor {
                p_bad = true;
            }
            if ps.eval_ne(x) < -1e-3 * ps.eval_ne(0.0).abs().max(1.0) {
                ne_bad = true;
            }
            if ps.f_squared_unchecked(x) <= 0.0 {
                f2_bad = true;
            }
        }
        if p_bad {
            warnings.push("reconstructed pressure goes negative inside the plasma".into());
        }
        if ne_bad {
            warnings.push("reconstructed density goes negative inside the plasma".into());
        }
        if f2_bad {
            warnings.push("reconstructed f² is not positive everywhere".into());
        }
        warnings.extend(flux.warnings.iter().cloned());
        warnings.dedup();

        let iterations = trace.len();
        Ok(ReconstructionResult {
            flux,
            profiles: ps,
            trace,
            converged,
            iterations,
            warnings,
            iterates,
            wall_seconds: t0.elapsed().as_secs_f64(),
            iteration_seconds,
        })
    }

    /// Curvature penalty scaled per block by characteristic coefficient
    /// magnitudes, so the configured ε values are relative to the
    /// unit-normalized residuals.
    fn regularization(
        &self,
        meas: &MeasurementSet,
        cfg: &SolverConfig,
        basis: &ProfileBasis,
        quads: &[ChordQuadrature],
    ) -> Result<RegularizationMatrix> {
        let j_char = meas.globals.ip.abs().max(1.0) / (0.5 * self.mesh.total_area());
        let chord_len: f64 = quads
            .iter()
            .map(|q| q.qps.iter().map(|p| p.weight).sum::<f64>())
            .sum::<f64>()
            / quads.len().max(1) as f64;
        let beta_rms = rms(meas.chords.iter().map(|c| c.beta));
        let ne_char = if !meas.chords.is_empty() && chord_len > 0.0 {
            (beta_rms / chord_len).max(1e-300)
        } else {
            1.0
        };
        RegularizationMatrix::new(basis, [cfg.eps1, cfg.eps2, cfg.eps3], [j_char, j_char, ne_char])
    }

    /// Process time-ordered frames. A frame with no usable previous state
    /// (the first one, or any frame after a failure) is solved to
    /// convergence to bootstrap the chain; every other frame warm-starts
    /// from the previous result and runs exactly `cfg.rt_iterations`
    /// iterations. Per-frame failures are recorded and the sequence
    /// continues with a re-cold-start.
    pub fn reconstruct_sequence(
        &self,
        frames: &[MeasurementSet],
        cfg: &SolverConfig,
    ) -> Vec<SequenceFrame> {
        let mut out = Vec::with_capacity(frames.len());
        let mut prev: Option<(FluxState, ProfileSet)> = None;
        for frame in frames {
            let t0 = std::time::Instant::now();
            let result = match prev.as_ref() {
                Some((f, p)) => self.reconstruct_fixed(frame, cfg, Some((f, p))),
                None => self.reconstruct(frame, cfg, None),
            };
            let wall_seconds = t0.elapsed().as_secs_f64();
            match result {
                Ok(r) => {
                    prev = Some((r.flux.clone(), r.profiles.clone()));
                    out.push(SequenceFrame {
                        result: Ok(r),
                        wall_seconds,
                    });
                }
                Err(e) => {
                    prev = None;
                    out.push(SequenceFrame {
                        result: Err(e),
                        wall_seconds,
                    });
                }
            }
        }
        out
    }

    /// The vacuum solution for the given boundary data (u = 0).
    pub fn vacuum_solution(&self, h: &[f64]) -> Vec<f64> {
        self.op
            .solve_with_dirichlet(&vec![0.0; self.op.interior_count()], h)
    }

    /// Reconstructed total current of a state (bookkeeping helper).
    pub fn total_current(&self, flux: &FluxState, ps: &ProfileSet) -> f64 {
        integrated_current(self.mesh, flux, ps)
    }
}

pub struct SequenceFrame {
    pub result: Result<ReconstructionResult>,
    pub wall_seconds: f64,
}

/// Verify the boundary kind tag is consistent (used by outputs).
pub fn boundary_kind_label(kind: BoundaryKind) -> &'static str {
    match kind {
        BoundaryKind::XPoint => "x-point",
        BoundaryKind::Limiter => "limiter",
    }
}

// ---------------------------------------------------------------------------
// config file: `key = value` lines covering every SolverConfig field
// ---------------------------------------------------------------------------

pub fn write_config(cfg: &SolverConfig) -> String {
    format!(
        "mode = {}\nk1 = {:e}\nk2 = {:e}\nk3 = {:e}\nk_ip = {:e}\neps1 = {:e}\neps2 = {:e}\n\
         eps3 = {:e}\nmax_iterations = {}\nrt_iterations = {}\ntolerance = {:e}\n\
         basis_degree = {}\nm_a = {}\nm_b = {}\nm_ne = {}\nparallel = {}\nkeep_iterates = {}\n",
        cfg.mode,
        cfg.k1,
        cfg.k2,
        cfg.k3,
        cfg.k_ip,
        cfg.eps1,
        cfg.eps2,
        cfg.eps3,
        cfg.max_iterations,
        cfg.rt_iterations,
        cfg.tolerance,
        cfg.basis_degree,
        cfg.m_a,
        cfg.m_b,
        cfg.m_ne,
        cfg.parallel,
        cfg.keep_iterates,
    )
}

pub fn parse_config(text: &str, path: &str) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    for (ln0, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, val) = line.split_once('=').ok_or_else(|| GsError::Parse {
            path: path.into(),
            line: ln0 + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let val = val.trim();
        let bad = |msg: String| GsError::Parse {
            path: path.into(),
            line: ln0 + 1,
            msg,
        };
        let fval = || -> Result<f64> { val.parse().map_err(|e| bad(format!("{key}: {e}"))) };
        let uval = || -> Result<usize> { val.parse().map_err(|e| bad(format!("{key}: {e}"))) };
        let bval = || -> Result<bool> { val.parse().map_err(|e| bad(format!("{key}: {e}"))) };
        match key {
            "mode" => {
                cfg.mode = match val {
                    "M" | "m" => Mode::MagneticsOnly,
                    "J" | "j" => Mode::Full,
                    other => return Err(bad(format!("mode must be M or J, got {other}"))),
                }
            }
            "k1" => cfg.k1 = fval()?,
            "k2" => cfg.k2 = fval()?,
            "k3" => cfg.k3 = fval()?,
            "k_ip" => cfg.k_ip = fval()?,
            "eps1" => cfg.eps1 = fval()?,
            "eps2" => cfg.eps2 = fval()?,
            "eps3" => cfg.eps3 = fval()?,
            "max_iterations" => cfg.max_iterations = uval()?,
            "rt_iterations" => cfg.rt_iterations = uval()?,
            "tolerance" => cfg.tolerance = fval()?,
            "basis_degree" => cfg.basis_degree = uval()?,
            "m_a" => cfg.m_a = uval()?,
            "m_b" => cfg.m_b = uval()?,
            "m_ne" => cfg.m_ne = uval()?,
            "parallel" => cfg.parallel = bval()?,
            "keep_iterates" => cfg.keep_iterates = bval()?,
            other => return Err(bad(format!("unknown config key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<SolverConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}
