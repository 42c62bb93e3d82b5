//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Tolerances are pinned here and nowhere else.

use gsrec::diagnostics::{synthesize, NoiseScope, NoiseSpec};
use gsrec::direct::{
    diverted_case, export_case, solve_forward, AnalyticEquilibrium, FilamentSet, ForwardConfig,
    ProfileFamily,
};
use gsrec::equil::{global_scalars, q_profile};
use gsrec::geometry::{hausdorff_distance, Point};
use gsrec::inverse::{measurement_costs, Mode, Reconstructor, SolverConfig};
use gsrec::mesh::{generate_vessel_mesh, Mesh};
use gsrec::profiles::{ProfileBasis, ProfileSet, RegularizationMatrix};
use std::sync::OnceLock;

// -- criterion 1: FEM correctness on the analytic equilibrium ---------------
const C1_ORDER_RANGE: (f64, f64) = (1.8, 2.2);
const C1_BUDGET_SECONDS: f64 = 10.0;

// -- criterion 2: round-trip identification ----------------------------------
const C2_VOLUME_REL: f64 = 0.02;
const C2_LI_ABS: f64 = 0.05;
const C2_Q_REL: f64 = 0.05; // on psibar in [0.1, 0.9]
const C2_AB_REL_L2: f64 = 0.02; // on psibar in [0, 0.9]
const C2_BOUNDARY_HAUSDORFF_M: f64 = 0.01;
const C2_XPOINT_M: f64 = 0.01;

// -- criterion 3: reversed-shear identifiability ------------------------------
const C3_QMIN_LOCATION_ABS: f64 = 0.1;

// -- criterion 4: real-time latency -------------------------------------------
const C4_ITERATION_MS: f64 = 60.0;
const C4_FRAMES: usize = 100;

// -- criterion 5: warm-start economy ------------------------------------------
const C5_REL_CHANGE: f64 = 1e-3;

// -- criterion 6: sensitivity reproduction ------------------------------------
const C6_SEEDS: usize = 50;
const C6_LI_STD_RANGE: (f64, f64) = (0.03, 0.3);
/// seeds whose noise draw lands the X-point exactly on the wall can cycle
/// between two near-degenerate topologies and are reported as failed
const C6_MIN_RECONSTRUCTED: usize = 45;

// -- criterion 7: cost bookkeeping --------------------------------------------
const C7_REL: f64 = 1e-9;

// -- criterion 8: operator property suite --------------------------------------
const C8_ADJOINT_REL: f64 = 1e-9;
const C8_BUDGET_SECONDS: f64 = 5.0;

struct Fixture {
    mesh: Mesh,
    bundle: gsrec::direct::CaseBundle,
}

fn monotonic_fixture() -> &'static Fixture {
    static FIX: OnceLock<Fixture> = OnceLock::new();
    FIX.get_or_init(|| {
        let mesh = generate_vessel_mesh(&gsrec::direct::vessel_contour(720), 0.07).unwrap();
        let op = gsrec::fem::assemble_stiffness(&mesh).unwrap();
        let basis = ProfileBasis::default_cubic();
        let setup = diverted_case(&mesh, &basis, ProfileFamily::Monotonic);
        let bundle = export_case(&mesh, &op, &setup, &basis, NoiseSpec::none()).unwrap();
        Fixture { mesh, bundle }
    })
}

fn roundtrip_config() -> SolverConfig {
    // the round-trip criteria run with light regularization: noiseless data
    // with a matching basis should be recovered up to the curvature penalty
    SolverConfig {
        eps1: 1e-4,
        eps2: 1e-4,
        eps3: 1e-4,
        max_iterations: 120,
        ..SolverConfig::default()
    }
}

fn rel_l2(a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let n = 200;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=n {
        let x = hi * k as f64 / n as f64;
        num += (a(x) - b(x)).powi(2);
        den += b(x).powi(2);
    }
    (num / den).sqrt()
}

#[test]
fn criterion_1_fem_soloviev_convergence() {
    let t0 = std::time::Instant::now();
    let eq = AnalyticEquilibrium::standard();
    let hs = [0.2, 0.1, 0.05];
    let mut errors = Vec::new();
    for &h in &hs {
        let mesh = eq.mesh(h).unwrap();
        let op = gsrec::fem::assemble_stiffness(&mesh).unwrap();
        let problem = eq.forward_problem(&mesh);
        let sol = solve_forward(&mesh, &op, &problem, &ForwardConfig::default()).unwrap();
        errors.push(eq.l2_error(&mesh, &sol.flux.psi));
    }
    // least-squares slope of log(error) against log(h)
    let logs: Vec<(f64, f64)> = hs.iter().zip(&errors).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    let order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = order >= C1_ORDER_RANGE.0 && order <= C1_ORDER_RANGE.1 && elapsed < C1_BUDGET_SECONDS;
    println!(
        "[{}] criterion 1: flux L2 convergence order {order:.3} (gate [{}, {}]), {elapsed:.1} s (budget {} s); errors {errors:?}",
        if pass { "PASS" } else { "FAIL" },
        C1_ORDER_RANGE.0,
        C1_ORDER_RANGE.1,
        C1_BUDGET_SECONDS
    );
    assert!(pass);
}

#[test]
fn criterion_2_roundtrip_identification() {
    let fix = monotonic_fixture();
    let (mesh, bundle) = (&fix.mesh, &fix.bundle);
    let rec = Reconstructor::new(mesh).unwrap();
    let cfg = roundtrip_config();
    let res = rec.reconstruct(&bundle.measurements, &cfg, None).unwrap();

    let truth_scal = global_scalars(mesh, &bundle.truth_flux, &bundle.truth_profiles).unwrap();
    let recon_scal = global_scalars(mesh, &res.flux, &res.profiles).unwrap();
    let dvol = (recon_scal.volume - truth_scal.volume).abs() / truth_scal.volume;
    let dli = (recon_scal.l_i - truth_scal.l_i).abs();
    let haus = hausdorff_distance(&res.flux.boundary_contour, &bundle.truth_flux.boundary_contour);

    let levels: Vec<f64> = (2..=18).map(|k| k as f64 / 20.0).collect();
    let qt = q_profile(mesh, &bundle.truth_flux, &bundle.truth_profiles, &levels).unwrap();
    let qr = q_profile(mesh, &res.flux, &res.profiles, &levels).unwrap();
    let dq = qt
        .iter()
        .zip(&qr)
        .map(|(a, b)| (a - b).abs() / a.abs())
        .fold(0.0, f64::max);

    let tp = &bundle.truth_profiles;
    let rp = &res.profiles;
    let da = rel_l2(|x| rp.eval_a(x), |x| tp.eval_a(x), 0.9);
    let db = rel_l2(|x| rp.eval_b(x), |x| tp.eval_b(x), 0.9);

    let dxp = match (res.flux.x_point, bundle.truth_flux.x_point) {
        (Some(a), Some(b)) => a.dist(b),
        _ => f64::INFINITY,
    };

    let pass = dvol <= C2_VOLUME_REL
        && dli <= C2_LI_ABS
        && dq <= C2_Q_REL
        && da <= C2_AB_REL_L2
        && db <= C2_AB_REL_L2
        && haus <= C2_BOUNDARY_HAUSDORFF_M
        && dxp <= C2_XPOINT_M;
    println!(
        "[{}] criterion 2: volume {:.3}% (gate {}%), l_i {:.4} (gate {}), q {:.3}% (gate {}%), A {:.3}% B {:.3}% (gate {}%), boundary {:.4} m (gate {} m), x-point {:.4} m (gate {} m)",
        if pass { "PASS" } else { "FAIL" },
        100.0 * dvol,
        100.0 * C2_VOLUME_REL,
        dli,
        C2_LI_ABS,
        100.0 * dq,
        100.0 * C2_Q_REL,
        100.0 * da,
        100.0 * db,
        100.0 * C2_AB_REL_L2,
        haus,
        C2_BOUNDARY_HAUSDORFF_M,
        dxp,
        C2_XPOINT_M
    );
    assert!(pass);
}

#[test]
fn criterion_3_reversed_shear_identifiability() {
    let mesh = generate_vessel_mesh(&gsrec::direct::vessel_contour(720), 0.07).unwrap();
    let op = gsrec::fem::assemble_stiffness(&mesh).unwrap();
    let basis = ProfileBasis::default_cubic();
    let setup = diverted_case(&mesh, &basis, ProfileFamily::ReversedShear);
    let bundle = export_case(&mesh, &op, &setup, &basis, NoiseSpec::none()).unwrap();
    let rec = Reconstructor::new(&mesh).unwrap();

    let levels: Vec<f64> = (1..=19).map(|k| k as f64 / 20.0).collect();
    let argmin = |q: &[f64]| -> usize {
        let mut best = 0;
        for i in 0..q.len() {
            if q[i] < q[best] {
                best = i;
            }
        }
        best
    };
    let qt = q_profile(&mesh, &bundle.truth_flux, &bundle.truth_profiles, &levels).unwrap();
    let truth_min = levels[argmin(&qt)];
    assert!(
        truth_min > 0.1 && truth_min < 0.9,
        "case must have an interior q minimum, got {truth_min}"
    );

    let cfg = roundtrip_config();
    let res = rec.reconstruct(&bundle.measurements, &cfg, None).unwrap();
    let qr = q_profile(&mesh, &res.flux, &res.profiles, &levels).unwrap();
    let j_min = levels[argmin(&qr)];
    let interior = j_min > 0.05 && j_min < 0.95;
    let located = (j_min - truth_min).abs() <= C3_QMIN_LOCATION_ABS;

    // magnetics-only on the same data: allowed to miss the minimum
    let m_cfg = SolverConfig {
        mode: Mode::MagneticsOnly,
        max_iterations: 120,
        ..SolverConfig::default()
    };
    let m_note = match rec.reconstruct(&bundle.measurements, &m_cfg, None) {
        Ok(m_res) => {
            let qm = q_profile(&mesh, &m_res.flux, &m_res.profiles, &levels).unwrap();
            let m_min = levels[argmin(&qm)];
            format!("magnetics-only q-min at {m_min:.2} (interior not required)")
        }
        Err(e) => format!("magnetics-only did not converge ({e})"),
    };

    let pass = interior && located;
    println!(
        "[{}] criterion 3: full-mode q minimum at {j_min:.2} vs truth {truth_min:.2} (gate +/-{C3_QMIN_LOCATION_ABS}); {m_note}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_4_realtime_latency() {
    // reference mesh near 3000 nodes
    let mesh = generate_vessel_mesh(&gsrec::direct::vessel_contour(720), 0.062).unwrap();
    assert!(
        (2500..=3800).contains(&mesh.node_count()),
        "reference mesh has {} nodes",
        mesh.node_count()
    );
    let op = gsrec::fem::assemble_stiffness(&mesh).unwrap();
    let basis = ProfileBasis::default_cubic();
    let setup = diverted_case(&mesh, &basis, ProfileFamily::Monotonic);
    let bundle = export_case(&mesh, &op, &setup, &basis, NoiseSpec::none()).unwrap();
    let rec = Reconstructor::new(&mesh).unwrap();
    let frames: Vec<_> = (0..C4_FRAMES).map(|_| bundle.measurements.clone()).collect();
    let seq = rec.reconstruct_sequence(&frames, &SolverConfig::default());

    let mut iter_ms: Vec<f64> = Vec::new();
    for fr in seq.iter().skip(1) {
        let r = fr.result.as_ref().expect("sequence frame reconstructs");
        for &s in &r.iteration_seconds {
            iter_ms.push(s * 1e3);
        }
    }
    iter_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = iter_ms[iter_ms.len() / 2];
    let pass = median <= C4_ITERATION_MS;
    println!(
        "[{}] criterion 4: median Picard iteration {median:.1} ms over {} iterations on a {}-node mesh (gate {} ms)",
        if pass { "PASS" } else { "FAIL" },
        iter_ms.len(),
        mesh.node_count(),
        C4_ITERATION_MS
    );
    assert!(pass);
}

#[test]
fn criterion_5_warm_start_economy() {
    let mesh = generate_vessel_mesh(&gsrec::direct::vessel_contour(720), 0.07).unwrap();
    let op = gsrec::fem::assemble_stiffness(&mesh).unwrap();
    let basis = ProfileBasis::default_cubic();
    // 20-frame ramp: source amplitude and plasma boundary contribution
    // scaled 1.0 -> 1.1
    let mut frames = Vec::new();
    for k in 0..20 {
        let scale = 1.0 + 0.1 * k as f64 / 19.0;
        let mut setup = diverted_case(&mesh, &basis, ProfileFamily::Monotonic);
        setup.problem.ip_target = Some(2.0e6 * scale);
        let filaments = FilamentSet {
            filaments: vec![
                (Point::new(3.0, 0.1), 2.0e6 * scale),
                (Point::new(2.8, -3.4), 0.8 * 2.0e6),
                (Point::new(3.0, 3.4), 0.5 * 2.0e6),
            ],
            vertical_field: -0.2,
        };
        setup.problem.h = filaments.boundary_values(&mesh);
        let bundle = export_case(&mesh, &op, &setup, &basis, NoiseSpec::none()).unwrap();
        frames.push(bundle.measurements);
    }
    let rec = Reconstructor::new(&mesh).unwrap();
    let cfg = roundtrip_config();
    let seq = rec.reconstruct_sequence(&frames, &cfg);
    let mut worst: f64 = 0.0;
    for fr in seq.iter().skip(1) {
        let r = fr.result.as_ref().expect("ramp frame reconstructs");
        assert_eq!(r.iterations, cfg.rt_iterations);
        worst = worst.max(r.trace.last().unwrap().rel_change);
    }
    let pass = worst < C5_REL_CHANGE;
    println!(
        "[{}] criterion 5: worst relative flux change after 2 warm iterations {worst:.2e} over 19 ramped frames (gate {C5_REL_CHANGE:.0e})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_6_sensitivity_reproduction() {
    let fix = monotonic_fixture();
    let (mesh, bundle) = (&fix.mesh, &fix.bundle);
    let rec = Reconstructor::new(mesh).unwrap();
    // boundary-input perturbation study runs in magnetics-only mode at the
    // default regularization
    let cfg = SolverConfig {
        mode: Mode::MagneticsOnly,
        max_iterations: 120,
        ..SolverConfig::default()
    };
    let geometry = bundle.measurements.geometry();
    let lis: Vec<Option<f64>> = gsrec::par::maybe_par_map(true, C6_SEEDS, |seed| {
        let noisy = synthesize(
            mesh,
            &bundle.truth_flux,
            &bundle.truth_profiles,
            &geometry,
            NoiseSpec {
                level: 0.01,
                seed: seed as u64,
                scope: NoiseScope::BoundaryMagnetics,
            },
        )
        .unwrap();
        rec.reconstruct(&noisy, &cfg, None)
            .ok()
            .map(|res| global_scalars(mesh, &res.flux, &res.profiles).unwrap().l_i)
    });
    let ok: Vec<f64> = lis.iter().filter_map(|v| *v).collect();
    let n = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / n;
    let std = (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let pass = ok.len() >= C6_MIN_RECONSTRUCTED
        && std >= C6_LI_STD_RANGE.0
        && std <= C6_LI_STD_RANGE.1;
    println!(
        "[{}] criterion 6: l_i std {std:.4} over {}/{} reconstructed seeds at 1% boundary noise (gate [{}, {}], min {} seeds), mean {mean:.4}",
        if pass { "PASS" } else { "FAIL" },
        ok.len(),
        C6_SEEDS,
        C6_LI_STD_RANGE.0,
        C6_LI_STD_RANGE.1,
        C6_MIN_RECONSTRUCTED
    );
    assert!(pass);
}

#[test]
fn criterion_7_cost_bookkeeping() {
    let fix = monotonic_fixture();
    let (mesh, bundle) = (&fix.mesh, &fix.bundle);
    let rec = Reconstructor::new(mesh).unwrap();
    let cfg = SolverConfig {
        keep_iterates: true,
        max_iterations: 120,
        ..roundtrip_config()
    };
    let res = rec.reconstruct(&bundle.measurements, &cfg, None).unwrap();
    assert_eq!(res.iterates.len(), res.trace.len());

    let basis = cfg.basis().unwrap();
    let quads: Vec<_> = bundle
        .measurements
        .chords
        .iter()
        .map(|c| gsrec::diagnostics::chord_quadrature(mesh, &c.points))
        .collect();
    // the regularization matrix rebuilt exactly as the solver builds it
    let j_char = bundle.measurements.globals.ip.abs().max(1.0) / (0.5 * mesh.total_area());
    let chord_len: f64 = quads
        .iter()
        .map(|q| q.qps.iter().map(|p| p.weight).sum::<f64>())
        .sum::<f64>()
        / quads.len().max(1) as f64;
    let beta_rms = {
        let v: Vec<f64> = bundle.measurements.chords.iter().map(|c| c.beta).collect();
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    };
    let ne_char = beta_rms / chord_len;
    let lambda =
        RegularizationMatrix::new(&basis, [cfg.eps1, cfg.eps2, cfg.eps3], [j_char, j_char, ne_char])
            .unwrap();

    let mut worst: f64 = 0.0;
    for (k, (psi, u)) in res.iterates.iter().enumerate() {
        let flux = gsrec::plasma::FluxState::from_psi(mesh, psi.clone()).unwrap();
        let ps = ProfileSet {
            basis: basis.clone(),
            u: u.clone(),
            r0: bundle.measurements.globals.r0,
            f0: bundle.measurements.globals.f0,
            psi_axis: flux.psi_axis,
            psi_b: flux.psi_b,
        };
        let [j0, j1, j2, j3] =
            measurement_costs(mesh, &flux, &ps, &bundle.measurements, &quads).unwrap();
        // independent j_eps route: quadratic form through the Gram matrices
        // instead of the solver's assembled-derivative quadrature
        let gram_form = |s: &Vec<Vec<f64>>, rng: std::ops::Range<usize>, e: f64| -> f64 {
            let block = &u[rng];
            let mut acc = 0.0;
            for i in 0..block.len() {
                for j in 0..block.len() {
                    acc += block[i] * s[i][j] * block[j];
                }
            }
            e * acc
        };
        let j_eps = gram_form(&lambda.s_a, basis.a_range(), lambda.eps_eff[0])
            + gram_form(&lambda.s_b, basis.b_range(), lambda.eps_eff[1])
            + gram_form(&lambda.s_ne, basis.ne_range(), lambda.eps_eff[2]);
        let t = &res.trace[k];
        for (got, expect, name) in [
            (t.j0, j0, "J0"),
            (t.j1, j1, "J1"),
            (t.j2, j2, "J2"),
            (t.j3, j3, "J3"),
            (t.j_eps, j_eps, "J_eps"),
        ] {
            let scale = expect.abs().max(1e-300);
            let rel = (got - expect).abs() / scale;
            worst = worst.max(rel);
            assert!(
                rel <= C7_REL,
                "{name} at iteration {k}: trace {got:.12e} vs recomputed {expect:.12e} (rel {rel:.2e})"
            );
        }
    }
    println!(
        "[PASS] criterion 7: trace cost components match independent recomputation over {} iterations (worst rel {worst:.2e}, gate {C7_REL:.0e})",
        res.trace.len()
    );
}

#[test]
fn criterion_8_operator_property_suite() {
    let t0 = std::time::Instant::now();
    let mesh = generate_vessel_mesh(&gsrec::direct::vessel_contour(360), 0.12).unwrap();
    let op = gsrec::fem::assemble_stiffness(&mesh).unwrap();
    let basis = ProfileBasis::default_cubic();
    let mut rng = gsrec::testkit::TestRng::new(2024);

    // synthetic topology over the whole vessel
    let psi: Vec<f64> = mesh
        .nodes()
        .iter()
        .map(|p| 2.0 - ((p.r - 3.0) * (p.r - 3.0) + 0.6 * p.z * p.z))
        .collect();
    let flux = gsrec::plasma::FluxState::from_psi(&mesh, psi).unwrap();
    let d = gsrec::fem::assemble_current_matrix(&mesh, &op, &flux, &basis, 3.0, false);

    // 1. adjoint identity: (K^-T l)ᵀ (D u + r) = l(K^-1 (D u + r))
    let k0 = mesh.boundary_nodes()[3];
    let func = gsrec::diagnostics::probe_functional(&mesh, mesh.node(k0), mesh.boundary_normal(3))
        .unwrap();
    let z = op.adjoint_solve(&func.interior_vector(&op));
    let mut worst_adj: f64 = 0.0;
    for _ in 0..10 {
        let u: Vec<f64> = (0..basis.len()).map(|_| rng.next() * 1e5).collect();
        let r: Vec<f64> = (0..op.interior_count()).map(|_| rng.next() * 1e4).collect();
        let rhs: Vec<f64> = d.mul_u(&u).iter().zip(&r).map(|(a, b)| a + b).collect();
        let lhs: f64 = z.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        let psi_sol = op.solve_with_dirichlet(&rhs, &vec![0.0; mesh.boundary_nodes().len()]);
        let rhs_val = func.apply(&psi_sol);
        let rel = (lhs - rhs_val).abs() / rhs_val.abs().max(1e-300);
        worst_adj = worst_adj.max(rel);
    }
    assert!(worst_adj <= C8_ADJOINT_REL, "adjoint identity rel {worst_adj:.2e}");

    // 2. affinity of observation rows (exact)
    let h = vec![1.0; mesh.boundary_nodes().len()];
    let psi_vac = op.solve_with_dirichlet(&vec![0.0; op.interior_count()], &h);
    let probe = gsrec::diagnostics::Probe {
        pos: mesh.node(k0),
        dir: mesh.boundary_normal(3),
        value: 0.0,
    };
    let rows = gsrec::diagnostics::probe_rows(&mesh, &op, &d, &psi_vac, &[probe], false).unwrap();
    let u1: Vec<f64> = (0..basis.len()).map(|_| rng.next()).collect();
    let u2: Vec<f64> = (0..basis.len()).map(|_| rng.next()).collect();
    let alpha = 0.37;
    let mix: Vec<f64> = u1
        .iter()
        .zip(&u2)
        .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
        .collect();
    let lhs = rows[0].model(&mix);
    let rhs = alpha * rows[0].model(&u1) + (1.0 - alpha) * rows[0].model(&u2);
    assert!(
        (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0),
        "affinity violated: {lhs} vs {rhs}"
    );

    // 3. partition of unity
    for k in 0..=1000 {
        let x = k as f64 / 1000.0;
        let s: f64 = basis.a.eval_all(x).unwrap().iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "partition of unity at {x}: {s}");
    }

    // 4. psibar affine invariance
    let scaled: Vec<f64> = flux.psi.iter().map(|v| 2.7 * v - 4.2).collect();
    let flux2 = gsrec::plasma::FluxState::from_psi(&mesh, scaled).unwrap();
    for i in 0..mesh.node_count() {
        assert!(
            (flux.psibar[i] - flux2.psibar[i]).abs() < 1e-10,
            "psibar affine invariance at node {i}"
        );
    }

    // 5. vacuum constant-flux identity
    let hc = vec![5.5; mesh.boundary_nodes().len()];
    let vac = op.solve_with_dirichlet(&vec![0.0; op.interior_count()], &hc);
    for v in &vac {
        assert!((v - 5.5).abs() < 1e-10, "vacuum constant violated: {v}");
    }

    let elapsed = t0.elapsed().as_secs_f64();
    let pass = elapsed < C8_BUDGET_SECONDS;
    println!(
        "[{}] criterion 8: adjoint identity worst rel {worst_adj:.2e}, affinity, partition of unity, psibar affine invariance, vacuum identity all hold; {elapsed:.2} s (budget {C8_BUDGET_SECONDS} s)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}
