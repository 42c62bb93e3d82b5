//! Measurement operators: magnetic probes, interferometry and polarimetry
//! chords, motional-Stark-effect pitch angles and the total plasma current,
//! each expressed as an affine functional of the profile coefficients given
//! a lagged flux iterate. Also the synthetic-measurement generator used to
//! manufacture test cases, and the measurement file format.

use crate::error::{GsError, Result};
use crate::fem::{for_each_plasma_quad_point, CurrentMatrix, StiffnessOperator};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::par::maybe_par_map;
use crate::plasma::FluxState;
use crate::profiles::{ProfileBasis, ProfileSet};
use rand::SeedableRng;
use rand_distr::Distribution;

#[derive(Debug, Clone)]
pub struct Probe {
    pub pos: Point,
    /// unit direction of the measured flux derivative (outward wall normal)
    pub dir: Point,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Chord {
    pub points: Vec<Point>,
    /// Faraday rotation integral, T (full-flux convention)
    pub alpha: f64,
    /// line-integrated density, m^-2
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct MsePoint {
    pub pos: Point,
    /// geometry coefficients a1..a6 of the pitch-angle response
    pub a: [f64; 6],
    /// measured angle, radians
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Globals {
    /// total plasma current, A
    pub ip: f64,
    /// vacuum diamagnetic function r*B_phi at the boundary, T.m
    pub f0: f64,
    /// reference major radius, m
    pub r0: f64,
}

#[derive(Debug, Clone)]
pub struct MeasurementSet {
    /// Dirichlet flux on boundary nodes, mesh boundary order, Wb
    pub h: Vec<f64>,
    pub probes: Vec<Probe>,
    pub chords: Vec<Chord>,
    pub mse: Vec<MsePoint>,
    pub globals: Globals,
}

/// Instrument layout without measured values; what `synthesize` needs.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticGeometry {
    pub probes: Vec<(Point, Point)>,
    pub chords: Vec<Vec<Point>>,
    pub mse: Vec<(Point, [f64; 6])>,
}

impl MeasurementSet {
    pub fn geometry(&self) -> DiagnosticGeometry {
        DiagnosticGeometry {
            probes: self.probes.iter().map(|p| (p.pos, p.dir)).collect(),
            chords: self.chords.iter().map(|c| c.points.clone()).collect(),
            mse: self.mse.iter().map(|m| (m.pos, m.a)).collect(),
        }
    }

    /// Consistency checks against a mesh: boundary count, probes on the wall.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.h.len() != mesh.boundary_nodes().len() {
            return Err(GsError::Measurement(format!(
                "boundary flux has {} values but the mesh has {} boundary nodes",
                self.h.len(),
                mesh.boundary_nodes().len()
            )));
        }
        let wall = mesh.boundary_polygon();
        for (i, p) in self.probes.iter().enumerate() {
            let d = crate::geometry::dist_to_polygon(p.pos, &wall);
            if d > mesh.median_edge() {
                return Err(GsError::Measurement(format!(
                    "probe {i} lies {d:.3} m from the wall"
                )));
            }
        }
        for (i, m) in self.mse.iter().enumerate() {
            if m.gamma.abs() >= std::f64::consts::FRAC_PI_2 {
                return Err(GsError::Measurement(format!(
                    "mse angle {i} outside (-pi/2, pi/2)"
                )));
            }
        }
        Ok(())
    }
}

/// Sparse linear functional over nodal flux values.
#[derive(Debug, Clone, Default)]
pub struct NodalFunctional {
    pub terms: Vec<(usize, f64)>,
}

impl NodalFunctional {
    pub fn apply(&self, nodal: &[f64]) -> f64 {
        self.terms.iter().map(|&(n, c)| c * nodal[n]).sum()
    }

    /// Dense interior-local restriction (boundary terms dropped).
    pub fn interior_vector(&self, op: &StiffnessOperator) -> Vec<f64> {
        let mut v = vec![0.0; op.interior_count()];
        for &(n, c) in &self.terms {
            if let Some(i) = op.interior_index(n) {
                v[i] += c;
            }
        }
        v
    }
}

/// Which measurement family a row belongs to; each family forms one
/// weighting block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowBlock {
    Probe,
    Polarimetry,
    Interferometry,
    Mse,
    PlasmaCurrent,
}

/// One scalar measurement as an affine function of the coefficient vector:
/// model(u) = coeffs . u + offset, to be fitted against `target`.
#[derive(Debug, Clone)]
pub struct ObservationRow {
    pub coeffs: Vec<f64>,
    pub offset: f64,
    pub target: f64,
    pub block: RowBlock,
}

impl ObservationRow {
    pub fn model(&self, u: &[f64]) -> f64 {
        self.coeffs.iter().zip(u).map(|(c, v)| c * v).sum::<f64>() + self.offset
    }

    pub fn residual(&self, u: &[f64]) -> f64 {
        self.model(u) - self.target
    }
}

/// Cached chord quadrature: 2-point Gauss per sub-segment with step half
/// the median mesh edge, points located once per (mesh, geometry).
#[derive(Debug, Clone)]
pub struct ChordQuadraturePoint {
    pub tri: usize,
    pub nodes: [usize; 3],
    pub bary: [f64; 3],
    pub weight: f64,
    pub point: Point,
    /// unit normal of the chord in the poloidal plane (tangent rotated -90)
    pub normal: Point,
}

#[derive(Debug, Clone, Default)]
pub struct ChordQuadrature {
    pub qps: Vec<ChordQuadraturePoint>,
}

pub fn chord_quadrature(mesh: &Mesh, polyline: &[Point]) -> ChordQuadrature {
    let step = 0.5 * mesh.median_edge();
    let gauss = 0.5 / 3.0f64.sqrt();
    let mut qps = Vec::new();
    for seg in polyline.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let tangent = (b - a) * (1.0 / len);
        let normal = Point::new(tangent.z, -tangent.r);
        let n = (len / step).ceil() as usize;
        let w = len / n as f64 / 2.0;
        for k in 0..n {
            for s in [-gauss, gauss] {
                let t = (k as f64 + 0.5 + s) / n as f64;
                let p = a + (b - a) * t;
                if let Some(loc) = mesh.locate(p) {
                    qps.push(ChordQuadraturePoint {
                        tri: loc.triangle,
                        nodes: mesh.triangle(loc.triangle),
                        bary: loc.bary,
                        weight: w,
                        point: p,
                        normal,
                    });
                }
            }
        }
    }
    ChordQuadrature { qps }
}

impl ChordQuadrature {
    fn psibar_at(&self, qp: &ChordQuadraturePoint, flux: &FluxState) -> f64 {
        qp.bary[0] * flux.psibar[qp.nodes[0]]
            + qp.bary[1] * flux.psibar[qp.nodes[1]]
            + qp.bary[2] * flux.psibar[qp.nodes[2]]
    }

    /// ∫ n_e(psibar) dl on the chord; n_e vanishes outside the separatrix.
    pub fn density_integral(&self, flux: &FluxState, ps: &ProfileSet) -> f64 {
        self.qps
            .iter()
            .map(|qp| qp.weight * ps.eval_ne(self.psibar_at(qp, flux)))
            .sum()
    }

    /// ∫ (n_e / r) dpsi/dn dl on the chord.
    pub fn faraday_integral(&self, mesh: &Mesh, flux: &FluxState, ps: &ProfileSet) -> f64 {
        self.qps
            .iter()
            .map(|qp| {
                let ne = ps.eval_ne(self.psibar_at(qp, flux));
                if ne == 0.0 {
                    return 0.0;
                }
                let g = mesh.gradient(qp.tri, &flux.psi);
                qp.weight * ne / qp.point.r * (g.r * qp.normal.r + g.z * qp.normal.z)
            })
            .sum()
    }

    /// The Faraday integral as a linear functional of nodal flux, with the
    /// density profile lagged.
    pub fn faraday_functional(
        &self,
        mesh: &Mesh,
        flux_lag: &FluxState,
        ne_lag: &ProfileSet,
    ) -> NodalFunctional {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for qp in &self.qps {
            let ne = ne_lag.eval_ne(self.psibar_at(qp, flux_lag));
            if ne == 0.0 {
                continue;
            }
            let grads = mesh.shape_gradients(qp.tri);
            let c = qp.weight * ne / qp.point.r;
            for v in 0..3 {
                terms.push((
                    qp.nodes[v],
                    c * (grads[v].r * qp.normal.r + grads[v].z * qp.normal.z),
                ));
            }
        }
        NodalFunctional { terms }
    }
}

/// Functional for a magnetic probe: (1/r) (grad psi . dir) evaluated from
/// the P1 gradient in the triangle adjacent to the probe point.
pub fn probe_functional(mesh: &Mesh, pos: Point, dir: Point) -> Result<NodalFunctional> {
    let nudge = mesh.median_edge();
    let loc = mesh
        .locate(pos)
        .or_else(|| mesh.locate(pos - dir * (1e-9 * nudge)))
        .or_else(|| mesh.locate(pos - dir * (1e-3 * nudge)))
        .ok_or_else(|| {
            GsError::Measurement(format!(
                "probe at ({:.3}, {:.3}) is not adjacent to any triangle",
                pos.r, pos.z
            ))
        })?;
    let grads = mesh.shape_gradients(loc.triangle);
    let nodes = mesh.triangle(loc.triangle);
    let inv_r = 1.0 / pos.r;
    Ok(NodalFunctional {
        terms: (0..3)
            .map(|v| {
                (
                    nodes[v],
                    inv_r * (grads[v].r * dir.r + grads[v].z * dir.z),
                )
            })
            .collect(),
    })
}

/// Functionals for the poloidal field components at an interior point:
/// B_r = -(1/r) dpsi/dz, B_z = (1/r) dpsi/dr.
pub fn field_functionals(mesh: &Mesh, pos: Point) -> Result<(NodalFunctional, NodalFunctional)> {
    let loc = mesh.locate(pos).ok_or(GsError::OutsideDomain)?;
    let grads = mesh.shape_gradients(loc.triangle);
    let nodes = mesh.triangle(loc.triangle);
    let inv_r = 1.0 / pos.r;
    let br = NodalFunctional {
        terms: (0..3).map(|v| (nodes[v], -inv_r * grads[v].z)).collect(),
    };
    let bz = NodalFunctional {
        terms: (0..3).map(|v| (nodes[v], inv_r * grads[v].r)).collect(),
    };
    Ok((br, bz))
}

/// Compose a nodal functional with the flux map psi(u) = K^-1(D u + lift):
/// one adjoint solve gives the row coefficients, the vacuum solution the
/// affine offset.
pub fn affine_row(
    op: &StiffnessOperator,
    d: &CurrentMatrix,
    psi_vacuum: &[f64],
    func: &NodalFunctional,
) -> (Vec<f64>, f64) {
    let z = op.adjoint_solve(&func.interior_vector(op));
    (d.transpose_mul(&z), func.apply(psi_vacuum))
}

/// Probe rows over the full coefficient vector (n_e columns zero).
#[allow(clippy::too_many_arguments)]
pub fn probe_rows(
    mesh: &Mesh,
    op: &StiffnessOperator,
    d: &CurrentMatrix,
    psi_vacuum: &[f64],
    probes: &[Probe],
    parallel: bool,
) -> Result<Vec<ObservationRow>> {
    let funcs: Vec<NodalFunctional> = probes
        .iter()
        .map(|p| probe_functional(mesh, p.pos, p.dir))
        .collect::<Result<_>>()?;
    Ok(maybe_par_map(parallel, probes.len(), |i| {
        let (coeffs, offset) = affine_row(op, d, psi_vacuum, &funcs[i]);
        ObservationRow {
            coeffs,
            offset,
            target: probes[i].value,
            block: RowBlock::Probe,
        }
    }))
}

/// Interferometry rows: linear in the n_e block, flux lagged.
pub fn interferometry_rows(
    flux_lag: &FluxState,
    chords: &[Chord],
    quads: &[ChordQuadrature],
    basis: &ProfileBasis,
) -> Vec<ObservationRow> {
    let ne_start = basis.ne_range().start;
    chords
        .iter()
        .zip(quads)
        .map(|(chord, quad)| {
            let mut coeffs = vec![0.0; basis.len()];
            for qp in &quad.qps {
                let x = quad.psibar_at(qp, flux_lag);
                if !(0.0..=1.0).contains(&x) {
                    continue;
                }
                let (first, vals) = basis.ne.eval_nonzero(x).expect("x in [0,1]");
                for (j, v) in vals.iter().enumerate() {
                    coeffs[ne_start + first + j] += qp.weight * v;
                }
            }
            ObservationRow {
                coeffs,
                offset: 0.0,
                target: chord.beta,
                block: RowBlock::Interferometry,
            }
        })
        .collect()
}

/// Polarimetry rows acting on the (A, B) blocks with the density lagged:
/// one adjoint solve per chord.
#[allow(clippy::too_many_arguments)]
pub fn polarimetry_rows_field(
    mesh: &Mesh,
    op: &StiffnessOperator,
    d: &CurrentMatrix,
    psi_vacuum: &[f64],
    flux_lag: &FluxState,
    ne_lag: &ProfileSet,
    chords: &[Chord],
    quads: &[ChordQuadrature],
    parallel: bool,
) -> Vec<ObservationRow> {
    let funcs: Vec<NodalFunctional> = quads
        .iter()
        .map(|q| q.faraday_functional(mesh, flux_lag, ne_lag))
        .collect();
    maybe_par_map(parallel, chords.len(), |i| {
        let (coeffs, offset) = affine_row(op, d, psi_vacuum, &funcs[i]);
        ObservationRow {
            coeffs,
            offset,
            target: chords[i].alpha,
            block: RowBlock::Polarimetry,
        }
    })
}

/// Polarimetry rows acting on the n_e block with the field lagged.
pub fn polarimetry_rows_density(
    mesh: &Mesh,
    flux_lag: &FluxState,
    chords: &[Chord],
    quads: &[ChordQuadrature],
    basis: &ProfileBasis,
) -> Vec<ObservationRow> {
    let ne_start = basis.ne_range().start;
    chords
        .iter()
        .zip(quads)
        .map(|(chord, quad)| {
            let mut coeffs = vec![0.0; basis.len()];
            for qp in &quad.qps {
                let x = quad.psibar_at(qp, flux_lag);
                if !(0.0..=1.0).contains(&x) {
                    continue;
                }
                let g = mesh.gradient(qp.tri, &flux_lag.psi);
                let dpsi_dn = g.r * qp.normal.r + g.z * qp.normal.z;
                let c = qp.weight / qp.point.r * dpsi_dn;
                let (first, vals) = basis.ne.eval_nonzero(x).expect("x in [0,1]");
                for (j, v) in vals.iter().enumerate() {
                    coeffs[ne_start + first + j] += c * v;
                }
            }
            ObservationRow {
                coeffs,
                offset: 0.0,
                target: chord.alpha,
                block: RowBlock::Polarimetry,
            }
        })
        .collect()
}

/// MSE rows: the pitch-angle relation cross-multiplied and scaled by the
/// lagged denominator, so the residual approximates tan(mse) - tan(gamma)
/// while staying linear in u. Toroidal field enters through the lagged
/// diamagnetic profile. Returns rows plus a flag for clamped f² values.
#[allow(clippy::too_many_arguments)]
pub fn mse_rows(
    mesh: &Mesh,
    op: &StiffnessOperator,
    d: &CurrentMatrix,
    psi_vacuum: &[f64],
    flux_lag: &FluxState,
    profiles_lag: &ProfileSet,
    mse: &[MsePoint],
    parallel: bool,
) -> Result<(Vec<ObservationRow>, bool)> {
    let mut clamped_any = false;
    let mut funcs = Vec::with_capacity(mse.len());
    let mut offsets_bphi = Vec::with_capacity(mse.len());
    for (i, m) in mse.iter().enumerate() {
        let (br_f, bz_f) = field_functionals(mesh, m.pos)?;
        let x = flux_lag
            .psibar_at(mesh, m.pos)
            .ok_or(GsError::OutsideDomain)?;
        let (f_val, clamped) = profiles_lag.f_lagged(x);
        clamped_any |= clamped;
        let bphi = f_val / m.pos.r;
        let br_lag = br_f.apply(&flux_lag.psi);
        let bz_lag = bz_f.apply(&flux_lag.psi);
        let den = m.a[3] * br_lag + m.a[4] * bz_lag + m.a[5] * bphi;
        let scale = m.a[3].abs() * br_lag.abs()
            + m.a[4].abs() * bz_lag.abs()
            + m.a[5].abs() * bphi.abs();
        if den.abs() < 1e-12 * scale.max(1e-300) {
            return Err(GsError::MseDenominator { index: i });
        }
        let tg = m.gamma.tan();
        let mut terms = Vec::with_capacity(6);
        for &(n, c) in &br_f.terms {
            terms.push((n, (m.a[0] - tg * m.a[3]) * c / den));
        }
        for &(n, c) in &bz_f.terms {
            terms.push((n, (m.a[1] - tg * m.a[4]) * c / den));
        }
        funcs.push(NodalFunctional { terms });
        offsets_bphi.push((m.a[2] - tg * m.a[5]) * bphi / den);
    }
    let rows = maybe_par_map(parallel, mse.len(), |i| {
        let (coeffs, offset) = affine_row(op, d, psi_vacuum, &funcs[i]);
        ObservationRow {
            coeffs,
            offset: offset + offsets_bphi[i],
            target: 0.0,
            block: RowBlock::Mse,
        }
    });
    Ok((rows, clamped_any))
}

/// Total-current row: integral of the current-density pattern over the
/// plasma domain, targeting I_p.
pub fn current_row(
    mesh: &Mesh,
    flux_lag: &FluxState,
    basis: &ProfileBasis,
    r0: f64,
    ip: f64,
) -> ObservationRow {
    let mut coeffs = vec![0.0; basis.len()];
    let b_off = basis.b_range().start;
    for_each_plasma_quad_point(mesh, flux_lag, |_t, p, w, psibar, _bary| {
        let x = psibar.clamp(0.0, 1.0);
        let (fa, va) = basis.a.eval_nonzero(x).expect("x in [0,1]");
        for (j, v) in va.iter().enumerate() {
            coeffs[fa + j] += w * p.r / r0 * v;
        }
        let (fb, vb) = basis.b.eval_nonzero(x).expect("x in [0,1]");
        for (j, v) in vb.iter().enumerate() {
            coeffs[b_off + fb + j] += w * r0 / p.r * v;
        }
    });
    ObservationRow {
        coeffs,
        offset: 0.0,
        target: ip,
        block: RowBlock::PlasmaCurrent,
    }
}

/// Toroidal current density integrated over the plasma domain.
pub fn integrated_current(mesh: &Mesh, flux: &FluxState, ps: &ProfileSet) -> f64 {
    let mut acc = 0.0;
    for_each_plasma_quad_point(mesh, flux, |_t, p, w, psibar, _| {
        let x = psibar.clamp(0.0, 1.0);
        acc += w * (p.r / ps.r0 * ps.eval_a(x) + ps.r0 / p.r * ps.eval_b(x));
    });
    acc
}

/// What multiplicative Gaussian noise applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScope {
    /// every synthesized value (boundary flux, probes, chords, angles)
    AllSignals,
    /// boundary flux and probe values only (the wall-side inputs)
    BoundaryMagnetics,
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
    pub scope: NoiseScope,
}

impl NoiseSpec {
    pub fn none() -> NoiseSpec {
        NoiseSpec {
            level: 0.0,
            seed: 0,
            scope: NoiseScope::AllSignals,
        }
    }
}

/// Evaluate every measurement operator nonlinearly (no lagging, no
/// linearization) on the given state, then apply multiplicative Gaussian
/// noise. Zero noise reproduces exact model values; a fixed seed gives a
/// byte-identical set.
pub fn synthesize(
    mesh: &Mesh,
    flux: &FluxState,
    ps: &ProfileSet,
    geometry: &DiagnosticGeometry,
    noise: NoiseSpec,
) -> Result<MeasurementSet> {
    let mut h: Vec<f64> = mesh
        .boundary_nodes()
        .iter()
        .map(|&b| flux.psi[b])
        .collect();

    let mut probes = Vec::with_capacity(geometry.probes.len());
    for &(pos, dir) in &geometry.probes {
        let func = probe_functional(mesh, pos, dir)?;
        probes.push(Probe {
            pos,
            dir,
            value: func.apply(&flux.psi),
        });
    }

    let mut chords = Vec::with_capacity(geometry.chords.len());
    for polyline in &geometry.chords {
        let quad = chord_quadrature(mesh, polyline);
        if quad.qps.is_empty() {
            return Err(GsError::Measurement(
                "chord lies entirely outside the domain".into(),
            ));
        }
        chords.push(Chord {
            points: polyline.clone(),
            alpha: quad.faraday_integral(mesh, flux, ps),
            beta: quad.density_integral(flux, ps),
        });
    }

    let mut mse = Vec::with_capacity(geometry.mse.len());
    for &(pos, a) in &geometry.mse {
        let (br_f, bz_f) = field_functionals(mesh, pos)?;
        let br = br_f.apply(&flux.psi);
        let bz = bz_f.apply(&flux.psi);
        let x = flux.psibar_at(mesh, pos).ok_or(GsError::OutsideDomain)?;
        let f_val = if x >= 1.0 { ps.f0 } else { ps.f_squared(x)?.sqrt() };
        let bphi = f_val / pos.r;
        let num = a[0] * br + a[1] * bz + a[2] * bphi;
        let den = a[3] * br + a[4] * bz + a[5] * bphi;
        mse.push(MsePoint {
            pos,
            a,
            gamma: (num / den).atan(),
        });
    }

    let ip = integrated_current(mesh, flux, ps);

    // fixed draw order keeps sets comparable across noise scopes
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = rand_distr::StandardNormal;
    let mut perturb = |v: &mut f64, active: bool| {
        let xi: f64 = normal.sample(&mut rng);
        if active && noise.level > 0.0 {
            *v *= 1.0 + noise.level * xi;
        }
    };
    for v in h.iter_mut() {
        perturb(v, true);
    }
    for p in probes.iter_mut() {
        perturb(&mut p.value, true);
    }
    let internal = noise.scope == NoiseScope::AllSignals;
    for c in chords.iter_mut() {
        perturb(&mut c.alpha, internal);
        perturb(&mut c.beta, internal);
    }
    for m in mse.iter_mut() {
        perturb(&mut m.gamma, internal);
    }

    Ok(MeasurementSet {
        h,
        probes,
        chords,
        mse,
        globals: Globals {
            ip,
            f0: ps.f0,
            r0: ps.r0,
        },
    })
}

// ---------------------------------------------------------------------------
// measurement file: sectioned line-oriented text
// ---------------------------------------------------------------------------

pub fn write_measurements(ms: &MeasurementSet) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    writeln!(s, "[globals]").unwrap();
    writeln!(s, "Ip = {:e}", ms.globals.ip).unwrap();
    writeln!(s, "f0 = {:e}", ms.globals.f0).unwrap();
    writeln!(s, "R0 = {:e}", ms.globals.r0).unwrap();
    writeln!(s, "[boundary]").unwrap();
    for v in &ms.h {
        writeln!(s, "{v:e}").unwrap();
    }
    writeln!(s, "[probes]").unwrap();
    for p in &ms.probes {
        writeln!(
            s,
            "{:e} {:e} {:e} {:e} {:e}",
            p.pos.r, p.pos.z, p.dir.r, p.dir.z, p.value
        )
        .unwrap();
    }
    for c in &ms.chords {
        writeln!(s, "[chord]").unwrap();
        for p in &c.points {
            writeln!(s, "{:e} {:e}", p.r, p.z).unwrap();
        }
        writeln!(s, "alpha = {:e}", c.alpha).unwrap();
        writeln!(s, "beta = {:e}", c.beta).unwrap();
    }
    writeln!(s, "[mse]").unwrap();
    for m in &ms.mse {
        writeln!(
            s,
            "{:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e}",
            m.pos.r, m.pos.z, m.a[0], m.a[1], m.a[2], m.a[3], m.a[4], m.a[5], m.gamma
        )
        .unwrap();
    }
    s
}

pub fn parse_measurements(text: &str, path: &str) -> Result<MeasurementSet> {
    let perr = |line: usize, msg: String| GsError::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut gmap: std::collections::HashMap<String, f64> = std::collections::HashMap::new();
    let mut h = Vec::new();
    let mut probes = Vec::new();
    let mut chords: Vec<Chord> = Vec::new();
    let mut mse = Vec::new();
    #[derive(PartialEq)]
    enum Section {
        None,
        Globals,
        Boundary,
        Probes,
        Chord,
        Mse,
    }
    let mut section = Section::None;
    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line {
            "[globals]" => {
                section = Section::Globals;
                continue;
            }
            "[boundary]" => {
                section = Section::Boundary;
                continue;
            }
            "[probes]" => {
                section = Section::Probes;
                continue;
            }
            "[chord]" => {
                section = Section::Chord;
                chords.push(Chord {
                    points: Vec::new(),
                    alpha: f64::NAN,
                    beta: f64::NAN,
                });
                continue;
            }
            "[mse]" => {
                section = Section::Mse;
                continue;
            }
            _ => {}
        }
        let nums = |l: &str| -> std::result::Result<Vec<f64>, String> {
            l.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| format!("{t}: {e}")))
                .collect()
        };
        match section {
            Section::None => return Err(perr(ln, format!("data before any section: {line}"))),
            Section::Globals => {
                let (key, val) = line
                    .split_once('=')
                    .ok_or_else(|| perr(ln, "expected `key = value`".into()))?;
                let v: f64 = val
                    .trim()
                    .parse()
                    .map_err(|e| perr(ln, format!("bad value: {e}")))?;
                gmap.insert(key.trim().to_string(), v);
            }
            Section::Boundary => {
                let v: f64 = line
                    .parse()
                    .map_err(|e| perr(ln, format!("bad boundary flux: {e}")))?;
                h.push(v);
            }
            Section::Probes => {
                let v = nums(line).map_err(|e| perr(ln, e))?;
                if v.len() != 5 {
                    return Err(perr(ln, "probe line must be `r z nr nz g`".into()));
                }
                probes.push(Probe {
                    pos: Point::new(v[0], v[1]),
                    dir: Point::new(v[2], v[3]).normalized(),
                    value: v[4],
                });
            }
            Section::Chord => {
                let chord = chords.last_mut().expect("inside a [chord] section");
                if let Some((key, val)) = line.split_once('=') {
                    let v: f64 = val
                        .trim()
                        .parse()
                        .map_err(|e| perr(ln, format!("bad value: {e}")))?;
                    match key.trim() {
                        "alpha" => chord.alpha = v,
                        "beta" => chord.beta = v,
                        other => return Err(perr(ln, format!("unknown chord key {other}"))),
                    }
                } else {
                    let v = nums(line).map_err(|e| perr(ln, e))?;
                    if v.len() != 2 {
                        return Err(perr(ln, "chord point must be `r z`".into()));
                    }
                    chord.points.push(Point::new(v[0], v[1]));
                }
            }
            Section::Mse => {
                let v = nums(line).map_err(|e| perr(ln, e))?;
                if v.len() != 9 {
                    return Err(perr(ln, "mse line must be `r z a1..a6 gamma`".into()));
                }
                mse.push(MsePoint {
                    pos: Point::new(v[0], v[1]),
                    a: [v[2], v[3], v[4], v[5], v[6], v[7]],
                    gamma: v[8],
                });
            }
        }
    }
    for key in ["Ip", "f0", "R0"] {
        if !gmap.contains_key(key) {
            return Err(perr(0, format!("[globals] is missing {key}")));
        }
    }
    let globals = Globals {
        ip: gmap["Ip"],
        f0: gmap["f0"],
        r0: gmap["R0"],
    };
    for (i, c) in chords.iter().enumerate() {
        if c.points.len() < 2 {
            return Err(perr(0, format!("chord {i} has fewer than 2 points")));
        }
        if !c.alpha.is_finite() || !c.beta.is_finite() {
            return Err(perr(0, format!("chord {i} is missing alpha or beta")));
        }
    }
    Ok(MeasurementSet {
        h,
        probes,
        chords,
        mse,
        globals,
    })
}

pub fn load_measurements(path: &std::path::Path) -> Result<MeasurementSet> {
    let text = std::fs::read_to_string(path)?;
    parse_measurements(&text, &path.display().to_string())
}

pub fn save_measurements(ms: &MeasurementSet, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, write_measurements(ms))?;
    Ok(())
}
