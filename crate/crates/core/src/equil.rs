//! Derived physical outputs of an equilibrium: toroidal current density,
//! safety-factor profile by contour integration, and the global scalars
//! (volume, poloidal beta, internal inductance, shape parameters) used for
//! validation.

use crate::error::{GsError, Result};
use crate::fem::for_each_plasma_quad_point;
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::plasma::FluxState;
use crate::profiles::ProfileSet;
use crate::MU_0;

#[derive(Debug, Clone)]
pub struct DerivedScalars {
    /// plasma volume, m³
    pub volume: f64,
    pub beta_p: f64,
    pub l_i: f64,
    pub r_x: Option<f64>,
    pub z_x: Option<f64>,
    pub shafranov_shift: f64,
    pub upper_triangularity: f64,
    pub lower_triangularity: f64,
    pub q_axis: f64,
    pub q95: f64,
    pub beta_p_plus_li_over_2: f64,
    /// area-integrated toroidal current of the state, A
    pub plasma_current: f64,
    pub r_axis: f64,
    pub z_axis: f64,
    pub psi_axis: f64,
    pub psi_b: f64,
}

/// Toroidal current density at a point: the source pattern inside the
/// plasma, zero outside.
pub fn current_density(mesh: &Mesh, flux: &FluxState, ps: &ProfileSet, p: Point) -> f64 {
    let x = match flux.psibar_at(mesh, p) {
        Some(v) => v,
        None => return 0.0,
    };
    if x > 1.0 {
        return 0.0;
    }
    let x = x.max(0.0);
    p.r / ps.r0 * ps.eval_a(x) + ps.r0 / p.r * ps.eval_b(x)
}

/// q(level) = (f(level) / 2π) ∮ dl / (r |grad psi|) on the level contour,
/// with |grad psi| at segment midpoints interpolated from the patch-recovered
/// nodal gradients of the P1 flux (the raw element-wise gradient carries
/// mesh-phase noise into the line integral).
pub fn q_at_level(mesh: &Mesh, flux: &FluxState, ps: &ProfileSet, level: f64) -> Result<f64> {
    let grad = mesh.recovered_gradient(&flux.psi);
    q_at_level_with_gradient(mesh, flux, ps, level, &grad)
}

fn q_at_level_with_gradient(
    mesh: &Mesh,
    flux: &FluxState,
    ps: &ProfileSet,
    level: f64,
    nodal_grad: &[Point],
) -> Result<f64> {
    if !(0.0..1.0).contains(&level) || level == 0.0 {
        return Err(GsError::Config(format!(
            "q level must lie strictly inside (0,1), got {level}"
        )));
    }
    let f_val = ps.f_squared(level)?.sqrt();
    let contour = flux.contour(mesh, level)?;
    let n = contour.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = contour[i];
        let b = contour[(i + 1) % n];
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let mid = Point::new(0.5 * (a.r + b.r), 0.5 * (a.z + b.z));
        let loc = match mesh.locate(mid) {
            Some(l) => l,
            None => continue,
        };
        let tri = mesh.triangle(loc.triangle);
        let mut g = Point::new(0.0, 0.0);
        for v in 0..3 {
            g = g + nodal_grad[tri[v]] * loc.bary[v];
        }
        let gn = g.norm();
        if gn == 0.0 {
            continue;
        }
        acc += len / (mid.r * gn);
    }
    Ok(f_val / (2.0 * std::f64::consts::PI) * acc)
}

/// q at a list of levels in (0, 1).
pub fn q_profile(mesh: &Mesh, flux: &FluxState, ps: &ProfileSet, levels: &[f64]) -> Result<Vec<f64>> {
    let grad = mesh.recovered_gradient(&flux.psi);
    levels
        .iter()
        .map(|&l| q_at_level_with_gradient(mesh, flux, ps, l, &grad))
        .collect()
}

/// q extrapolated to the axis from the two innermost levels (the contour
/// integral degenerates at the axis itself).
pub fn q_axis_extrapolated(mesh: &Mesh, flux: &FluxState, ps: &ProfileSet) -> Result<f64> {
    let (l1, l2) = (0.04, 0.1);
    let q1 = q_at_level(mesh, flux, ps, l1)?;
    let q2 = q_at_level(mesh, flux, ps, l2)?;
    Ok(q1 - l1 * (q2 - q1) / (l2 - l1))
}

pub fn global_scalars(mesh: &Mesh, flux: &FluxState, ps: &ProfileSet) -> Result<DerivedScalars> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut volume = 0.0;
    let mut p_int = 0.0;
    let mut bp2_int = 0.0;
    let mut ip = 0.0;
    for_each_plasma_quad_point(mesh, flux, |t, p, w, psibar, _| {
        let x = psibar.clamp(0.0, 1.0);
        volume += w * p.r;
        p_int += w * p.r * ps.pressure(x);
        let g = mesh.gradient(t, &flux.psi);
        bp2_int += w * (g.r * g.r + g.z * g.z) / p.r;
        ip += w * (p.r / ps.r0 * ps.eval_a(x) + ps.r0 / p.r * ps.eval_b(x));
    });
    volume *= two_pi;
    if volume <= 0.0 {
        return Err(GsError::EmptyPlasma);
    }
    let p_avg = two_pi * p_int / volume;
    let bp2_avg = two_pi * bp2_int / volume;

    let contour = &flux.boundary_contour;
    if contour.len() < 3 {
        return Err(GsError::OpenContour { level: 1.0 });
    }
    let perimeter = crate::geometry::polygon_perimeter(contour);
    let b_pa = MU_0 * ip / perimeter;
    let beta_p = 2.0 * MU_0 * p_avg / (b_pa * b_pa);
    let l_i = bp2_avg / (b_pa * b_pa);

    let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut top, mut bottom) = (contour[0], contour[0]);
    for p in contour {
        rmin = rmin.min(p.r);
        rmax = rmax.max(p.r);
        if p.z > top.z {
            top = *p;
        }
        if p.z < bottom.z {
            bottom = *p;
        }
    }
    let r_geo = 0.5 * (rmin + rmax);
    let a_minor = 0.5 * (rmax - rmin);
    let upper_triangularity = (r_geo - top.r) / a_minor;
    let lower_triangularity = (r_geo - bottom.r) / a_minor;
    let shafranov_shift = flux.axis.r - r_geo;

    let q_axis = q_axis_extrapolated(mesh, flux, ps)?;
    let q95 = q_at_level(mesh, flux, ps, 0.95)?;

    Ok(DerivedScalars {
        volume,
        beta_p,
        l_i,
        r_x: flux.x_point.map(|p| p.r),
        z_x: flux.x_point.map(|p| p.z),
        shafranov_shift,
        upper_triangularity,
        lower_triangularity,
        q_axis,
        q95,
        beta_p_plus_li_over_2: beta_p + 0.5 * l_i,
        plasma_current: ip,
        r_axis: flux.axis.r,
        z_axis: flux.axis.z,
        psi_axis: flux.psi_axis,
        psi_b: flux.psi_b,
    })
}

/// Row of the exported 1-D profile table.
#[derive(Debug, Clone)]
pub struct ProfileTableRow {
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub ne: f64,
    pub p: f64,
    pub f: f64,
    pub f2: f64,
    pub q: f64,
}

/// Tabulate the physical profiles on a uniform grid; q uses the contour
/// integral clamped away from the degenerate endpoints.
pub fn profile_table(
    mesh: &Mesh,
    flux: &FluxState,
    ps: &ProfileSet,
    n: usize,
) -> Result<Vec<ProfileTableRow>> {
    let q_axis = q_axis_extrapolated(mesh, flux, ps).unwrap_or(f64::NAN);
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let x = k as f64 / n as f64;
        let f2 = ps.f_squared_unchecked(x);
        let q = if x < 0.04 {
            q_axis
        } else {
            q_at_level(mesh, flux, ps, x.min(0.97)).unwrap_or(f64::NAN)
        };
        rows.push(ProfileTableRow {
            x,
            a: ps.eval_a(x),
            b: ps.eval_b(x),
            ne: ps.eval_ne(x),
            p: ps.pressure(x),
            f: if f2 > 0.0 { f2.sqrt() } else { f64::NAN },
            f2,
            q,
        });
    }
    Ok(rows)
}
