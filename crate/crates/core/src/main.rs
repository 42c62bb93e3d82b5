#![allow(clippy::needless_range_loop)]

//! Command-line driver: mesh generation, forward (truth) solves, synthetic
//! measurements, reconstruction (single frame or real-time sequences),
//! perturbation/regularization sweeps and result comparison.

use clap::{Args, Parser, Subcommand};
use gsrec::diagnostics::{
    load_measurements, save_measurements, synthesize, NoiseScope, NoiseSpec,
};
use gsrec::direct::{
    diverted_case, export_case, solve_forward, standard_diagnostics, truth_profiles,
    AnalyticEquilibrium, ForwardConfig, ProfileFamily,
};
use gsrec::equil::{global_scalars, profile_table};
use gsrec::error::{GsError, Result};
use gsrec::geometry::{hausdorff_distance, Point};
use gsrec::inverse::{
    load_config, write_config, Mode, ReconstructionResult, Reconstructor, SolverConfig,
};
use gsrec::mesh::{generate_vessel_mesh, load_mesh, save_mesh, Mesh};
use gsrec::plasma::FluxState;
use gsrec::profiles::ProfileSet;
use gsrec::report::{contour_csv, ResultFile, RunManifest, SvgPlot};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "gsrec",
    version,
    about = "Tokamak equilibrium reconstruction from boundary magnetics and internal diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Triangulate the interior of a wall contour
    Mesh(MeshArgs),
    /// Solve the forward problem for a named case and export a truth bundle
    Forward(ForwardArgs),
    /// Re-synthesize measurements from a truth bundle with optional noise
    Synth(SynthArgs),
    /// Reconstruct the equilibrium from a measurement file (or a sequence)
    Reconstruct(ReconstructArgs),
    /// Perturbation or regularization sweeps around a base case
    Sweep(SweepArgs),
    /// Compare two result files within tolerances
    Compare(CompareArgs),
}

#[derive(Args)]
struct MeshArgs {
    /// wall contour file (`r z` per line); omit to use the built-in vessel
    #[arg(long)]
    contour: Option<PathBuf>,
    #[arg(long, default_value_t = 0.07)]
    target_h: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ForwardArgs {
    /// built-in case: soloviev | monotonic | reversed-shear
    #[arg(long)]
    case: Option<String>,
    /// custom mesh file (built-in geometry at --target-h otherwise)
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 0.07)]
    target_h: f64,
    /// relative measurement noise level
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// truth bundle result file (stores psi and profile coefficients)
    #[arg(long)]
    truth: PathBuf,
    /// measurement file supplying the instrument geometry (standard layout otherwise)
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// single measurement file
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// directory of frame measurement files, processed in name order
    #[arg(long)]
    sequence: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// measurement mode: M (magnetics only) or J (full)
    #[arg(long)]
    mode: Option<String>,
    /// truth result file for overlay plots and gate reporting
    #[arg(long)]
    truth: Option<PathBuf>,
    /// dump the assembled flux operator as `i j value` triplets
    #[arg(long, default_value_t = false)]
    dump_operator: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// relative perturbation level applied to boundary flux and probes
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// comma-separated regularization values for an L-curve table
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// relative tolerance on scalar entries
    #[arg(long, default_value_t = 0.05)]
    tol_scalars: f64,
    /// absolute tolerance on the boundary contour Hausdorff distance, m
    #[arg(long, default_value_t = 0.02)]
    tol_boundary: f64,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh(a) => cmd_mesh(a),
        Command::Forward(a) => cmd_forward(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn load_contour(path: &Path) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path)?;
    let mut pts = Vec::new();
    for (ln0, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| GsError::Parse {
                path: path.display().to_string(),
                line: ln0 + 1,
                msg: format!("bad contour point: {e}"),
            })?;
        if vals.len() != 2 {
            return Err(GsError::Parse {
                path: path.display().to_string(),
                line: ln0 + 1,
                msg: "contour line must be `r z`".into(),
            });
        }
        pts.push(Point::new(vals[0], vals[1]));
    }
    Ok(pts)
}

fn solver_config(path: Option<&PathBuf>, mode: Option<&String>) -> Result<SolverConfig> {
    let mut cfg = match path {
        Some(p) => load_config(p)?,
        None => SolverConfig::default(),
    };
    if let Some(m) = mode {
        cfg.mode = match m.as_str() {
            "M" | "m" => Mode::MagneticsOnly,
            "J" | "j" => Mode::Full,
            other => return Err(GsError::Config(format!("mode must be M or J, got {other}"))),
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_mesh(a: MeshArgs) -> Result<()> {
    ensure_out(&a.out)?;
    let t0 = std::time::Instant::now();
    let contour = match &a.contour {
        Some(path) => load_contour(path)?,
        None => gsrec::direct::vessel_contour(720),
    };
    let mesh = generate_vessel_mesh(&contour, a.target_h)?;
    save_mesh(&mesh, &a.out.join("mesh.txt"))?;

    // smallest-angle quality histogram
    let mut hist = [0usize; 6];
    for t in 0..mesh.triangle_count() {
        let tri = mesh.triangle(t);
        let mut min_angle = f64::INFINITY;
        for k in 0..3 {
            let a0 = mesh.node(tri[k]);
            let b = mesh.node(tri[(k + 1) % 3]);
            let c = mesh.node(tri[(k + 2) % 3]);
            let v1 = b - a0;
            let v2 = c - a0;
            let ang = (gsrec::geometry::dot(v1, v2) / (v1.norm() * v2.norm()))
                .clamp(-1.0, 1.0)
                .acos()
                .to_degrees();
            min_angle = min_angle.min(ang);
        }
        let bin = ((min_angle / 10.0) as usize).min(5);
        hist[bin] += 1;
    }
    println!(
        "mesh: {} nodes, {} triangles, {} boundary nodes, area {:.4} m^2",
        mesh.node_count(),
        mesh.triangle_count(),
        mesh.boundary_nodes().len(),
        mesh.total_area()
    );
    println!("smallest-angle histogram (degrees):");
    for (k, n) in hist.iter().enumerate() {
        println!("  [{:2}-{:2}): {n}", 10 * k, 10 * (k + 1));
    }

    let mut manifest = RunManifest {
        command: "mesh".into(),
        ..Default::default()
    };
    if let Some(path) = &a.contour {
        manifest.add_input("contour", &std::fs::read(path)?);
    }
    manifest.add_wall("total", t0.elapsed().as_secs_f64());
    manifest.write_to(&a.out.join("manifest.txt"))?;
    Ok(())
}

fn truth_result_file(mesh: &Mesh, flux: &FluxState, ps: &ProfileSet, ip: f64) -> Result<ResultFile> {
    let scalars = global_scalars(mesh, flux, ps)?;
    let table = profile_table(mesh, flux, ps, 100)?;
    let mut rf = ResultFile::from_reconstruction(
        &ReconstructionResult {
            flux: flux.clone(),
            profiles: ps.clone(),
            trace: vec![],
            converged: true,
            iterations: 0,
            warnings: flux.warnings.clone(),
            iterates: vec![],
            wall_seconds: 0.0,
            iteration_seconds: vec![],
        },
        &scalars,
        table,
    );
    rf.scalars.push(("ip_input".into(), ip));
    rf.scalars.push(("f0".into(), ps.f0));
    rf.scalars.push(("r0".into(), ps.r0));
    rf.tags.push((
        "basis".into(),
        format!(
            "{}:{}:{}:{}",
            ps.basis.a.degree(),
            ps.basis.a.count(),
            ps.basis.b.count(),
            ps.basis.ne.count()
        ),
    ));
    Ok(rf)
}

fn cmd_forward(a: ForwardArgs) -> Result<()> {
    ensure_out(&a.out)?;
    let t0 = std::time::Instant::now();
    let case = a.case.as_deref().ok_or_else(|| {
        GsError::Config("--case is required (soloviev | monotonic | reversed-shear)".into())
    })?;
    let cfg = solver_config(a.config.as_ref(), None)?;
    let basis = cfg.basis()?;
    let mut manifest = RunManifest {
        command: format!("forward --case {case}"),
        config: write_config(&cfg),
        ..Default::default()
    };

    let noise = NoiseSpec {
        level: a.noise,
        seed: a.seed,
        scope: NoiseScope::AllSignals,
    };
    match case {
        "soloviev" => {
            let eq = AnalyticEquilibrium::standard();
            let mesh = match &a.mesh {
                Some(p) => load_mesh(p)?,
                None => eq.mesh(a.target_h)?,
            };
            let op = gsrec::fem::assemble_stiffness(&mesh)?;
            let problem = eq.forward_problem(&mesh);
            let sol = solve_forward(&mesh, &op, &problem, &ForwardConfig::default())?;
            let l2 = eq.l2_error(&mesh, &sol.flux.psi);
            println!(
                "analytic case: {} nodes, {} forward iterations, flux L2 error {:.4e}",
                mesh.node_count(),
                sol.iterations,
                l2
            );
            let truth = truth_profiles(&basis, &problem, &sol, None);
            let geometry = standard_diagnostics(&mesh);
            let ms = synthesize(&mesh, &sol.flux, &truth, &geometry, noise)?;
            save_mesh(&mesh, &a.out.join("mesh.txt"))?;
            save_measurements(&ms, &a.out.join("measurements.txt"))?;
            truth_result_file(&mesh, &sol.flux, &truth, ms.globals.ip)?
                .write_to(&a.out.join("truth.txt"))?;
        }
        "monotonic" | "reversed-shear" => {
            let family = if case == "monotonic" {
                ProfileFamily::Monotonic
            } else {
                ProfileFamily::ReversedShear
            };
            let mesh = match &a.mesh {
                Some(p) => load_mesh(p)?,
                None => generate_vessel_mesh(&gsrec::direct::vessel_contour(720), a.target_h)?,
            };
            let op = gsrec::fem::assemble_stiffness(&mesh)?;
            let setup = diverted_case(&mesh, &basis, family);
            let bundle = export_case(&mesh, &op, &setup, &basis, noise)?;
            println!(
                "{case}: {} nodes, boundary kind {}, axis ({:.3}, {:.3})",
                mesh.node_count(),
                bundle.truth_flux.kind,
                bundle.truth_flux.axis.r,
                bundle.truth_flux.axis.z
            );
            save_mesh(&mesh, &a.out.join("mesh.txt"))?;
            save_measurements(&bundle.measurements, &a.out.join("measurements.txt"))?;
            truth_result_file(
                &mesh,
                &bundle.truth_flux,
                &bundle.truth_profiles,
                bundle.measurements.globals.ip,
            )?
            .write_to(&a.out.join("truth.txt"))?;
        }
        other => {
            return Err(GsError::Config(format!(
                "unknown case `{other}` (expected soloviev | monotonic | reversed-shear)"
            )))
        }
    }
    manifest.add_wall("total", t0.elapsed().as_secs_f64());
    manifest.write_to(&a.out.join("manifest.txt"))?;
    Ok(())
}

/// Rebuild (flux, profiles) from a truth result file.
fn state_from_truth(mesh: &Mesh, truth: &ResultFile) -> Result<(FluxState, ProfileSet)> {
    let flux = FluxState::from_psi(mesh, truth.psi.clone())?;
    let basis_tag = truth
        .tags
        .iter()
        .find(|(k, _)| k == "basis")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| GsError::Config("truth file lacks a basis tag".into()))?;
    let dims: Vec<usize> = basis_tag
        .split(':')
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| GsError::Config(format!("bad basis tag: {e}")))?;
    if dims.len() != 4 {
        return Err(GsError::Config("basis tag must be degree:mA:mB:mne".into()));
    }
    let basis = gsrec::profiles::ProfileBasis::new(dims[0], dims[1], dims[2], dims[3])?;
    if basis.len() != truth.u.len() {
        return Err(GsError::Config(format!(
            "truth u has {} coefficients, basis expects {}",
            truth.u.len(),
            basis.len()
        )));
    }
    let f0 = truth
        .scalar("f0")
        .ok_or_else(|| GsError::Config("truth file lacks f0".into()))?;
    let r0 = truth
        .scalar("r0")
        .ok_or_else(|| GsError::Config("truth file lacks r0".into()))?;
    let ps = ProfileSet {
        basis,
        u: truth.u.clone(),
        r0,
        f0,
        psi_axis: flux.psi_axis,
        psi_b: flux.psi_b,
    };
    Ok((flux, ps))
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    ensure_out(&a.out)?;
    let t0 = std::time::Instant::now();
    let mut manifest = RunManifest {
        command: format!("synth --noise {} --seed {}", a.noise, a.seed),
        ..Default::default()
    };
    manifest.add_input("mesh", &std::fs::read(&a.mesh)?);
    manifest.add_input("truth", &std::fs::read(&a.truth)?);
    let mesh = load_mesh(&a.mesh)?;
    let truth = ResultFile::load(&a.truth)?;
    let (flux, ps) = state_from_truth(&mesh, &truth)?;
    let geometry = match &a.geometry {
        Some(p) => load_measurements(p)?.geometry(),
        None => standard_diagnostics(&mesh),
    };
    let ms = synthesize(
        &mesh,
        &flux,
        &ps,
        &geometry,
        NoiseSpec {
            level: a.noise,
            seed: a.seed,
            scope: NoiseScope::AllSignals,
        },
    )?;
    save_measurements(&ms, &a.out.join("measurements.txt"))?;
    println!(
        "synthesized {} probes, {} chords, {} mse points (noise {}, seed {})",
        ms.probes.len(),
        ms.chords.len(),
        ms.mse.len(),
        a.noise,
        a.seed
    );
    manifest.add_wall("total", t0.elapsed().as_secs_f64());
    manifest.write_to(&a.out.join("manifest.txt"))?;
    Ok(())
}

fn write_reconstruction_outputs(
    out: &Path,
    stem: &str,
    mesh: &Mesh,
    res: &ReconstructionResult,
    truth: Option<&ResultFile>,
) -> Result<ResultFile> {
    let scalars = global_scalars(mesh, &res.flux, &res.profiles)?;
    let table = profile_table(mesh, &res.flux, &res.profiles, 100)?;
    let rf = ResultFile::from_reconstruction(res, &scalars, table);
    rf.write_to(&out.join(format!("{stem}.txt")))?;

    let mut csv = String::from("x,A,B,n_e,p,f,f2,q\n");
    for r in &rf.profiles {
        use std::fmt::Write as _;
        writeln!(
            csv,
            "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.x, r.a, r.b, r.ne, r.p, r.f, r.f2, r.q
        )
        .unwrap();
    }
    std::fs::write(out.join(format!("{stem}_profiles.csv")), csv)?;
    std::fs::write(
        out.join(format!("{stem}_boundary.csv")),
        contour_csv(&res.flux.boundary_contour),
    )?;

    let mut plot = SvgPlot::new("source profiles", "normalized flux", "A, B (A/m^2)");
    plot.add_line("A", rf.profiles.iter().map(|r| (r.x, r.a)).collect());
    plot.add_line("B", rf.profiles.iter().map(|r| (r.x, r.b)).collect());
    plot.write_to(&out.join(format!("{stem}_profiles.svg")))?;

    let mut plot = SvgPlot::new("safety factor", "normalized flux", "q");
    plot.add_line("q", rf.profiles.iter().map(|r| (r.x, r.q)).collect());
    if let Some(t) = truth {
        plot.add_line("q truth", t.profiles.iter().map(|r| (r.x, r.q)).collect());
    }
    plot.write_to(&out.join(format!("{stem}_q.svg")))?;

    let mut plot = SvgPlot::new("plasma boundary", "r (m)", "z (m)");
    plot.add_closed(
        "wall",
        mesh.boundary_polygon().iter().map(|p| (p.r, p.z)).collect(),
    );
    plot.add_closed(
        "reconstructed",
        res.flux
            .boundary_contour
            .iter()
            .map(|p| (p.r, p.z))
            .collect(),
    );
    if let Some(t) = truth {
        plot.add_closed(
            "truth",
            t.boundary_contour.iter().map(|p| (p.r, p.z)).collect(),
        );
    }
    plot.write_to(&out.join(format!("{stem}_boundary.svg")))?;

    let mut plot = SvgPlot::new("convergence trace", "iteration", "log10");
    plot.add_line(
        "rel change",
        res.trace
            .iter()
            .enumerate()
            .map(|(i, t)| (i as f64, t.rel_change.max(1e-300).log10()))
            .collect(),
    );
    plot.add_line(
        "weighted cost",
        res.trace
            .iter()
            .enumerate()
            .map(|(i, t)| (i as f64, t.j_total_weighted.max(1e-300).log10()))
            .collect(),
    );
    plot.write_to(&out.join(format!("{stem}_trace.svg")))?;
    Ok(rf)
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<()> {
    ensure_out(&a.out)?;
    let t0 = std::time::Instant::now();
    let cfg = solver_config(a.config.as_ref(), a.mode.as_ref())?;
    let mesh = load_mesh(&a.mesh)?;
    let rec = Reconstructor::new(&mesh)?;
    let truth = match &a.truth {
        Some(p) => Some(ResultFile::load(p)?),
        None => None,
    };
    let mut manifest = RunManifest {
        command: "reconstruct".into(),
        config: write_config(&cfg),
        ..Default::default()
    };
    manifest.add_input("mesh", &std::fs::read(&a.mesh)?);
    if a.dump_operator {
        std::fs::write(
            a.out.join("stiffness_triplets.txt"),
            rec.op.full_matrix().dump_triplets(),
        )?;
    }

    match (&a.measurements, &a.sequence) {
        (Some(mpath), None) => {
            let meas = load_measurements(mpath)?;
            manifest.add_input("measurements", &std::fs::read(mpath)?);
            if cfg.mode == Mode::MagneticsOnly && (!meas.chords.is_empty() || !meas.mse.is_empty())
            {
                manifest
                    .warnings
                    .push("mode M: chord and MSE data present but ignored".into());
            }
            let res = rec.reconstruct(&meas, &cfg, None)?;
            let rf = write_reconstruction_outputs(&a.out, "result", &mesh, &res, truth.as_ref())?;
            manifest.warnings.extend(res.warnings.iter().cloned());
            println!(
                "converged = {} after {} iterations; volume {:.2} m^3, l_i {:.3}, q0 {:.3}",
                res.converged,
                res.iterations,
                rf.scalar("volume").unwrap_or(f64::NAN),
                rf.scalar("l_i").unwrap_or(f64::NAN),
                rf.scalar("q_axis").unwrap_or(f64::NAN),
            );
            if let Some(t) = &truth {
                let d = hausdorff_distance(&rf.boundary_contour, &t.boundary_contour);
                println!("boundary Hausdorff distance to truth: {d:.4} m");
            }
            manifest.add_wall("reconstruct", res.wall_seconds);
        }
        (None, Some(dir)) => {
            let mut frame_paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().map(|x| x == "txt").unwrap_or(false))
                .collect();
            frame_paths.sort();
            if frame_paths.is_empty() {
                return Err(GsError::Config(format!(
                    "sequence directory {} has no .txt frames",
                    dir.display()
                )));
            }
            let frames: Vec<_> = frame_paths
                .iter()
                .map(|p| load_measurements(p))
                .collect::<Result<_>>()?;
            let seq = rec.reconstruct_sequence(&frames, &cfg);
            let mut latency =
                String::from("frame,wall_ms,iterations,ms_per_iteration,converged\n");
            for (k, fr) in seq.iter().enumerate() {
                use std::fmt::Write as _;
                match &fr.result {
                    Ok(r) => {
                        write_reconstruction_outputs(
                            &a.out,
                            &format!("result_{k:04}"),
                            &mesh,
                            r,
                            truth.as_ref(),
                        )?;
                        writeln!(
                            latency,
                            "{k},{:.3},{},{:.3},{}",
                            fr.wall_seconds * 1e3,
                            r.iterations,
                            fr.wall_seconds * 1e3 / r.iterations.max(1) as f64,
                            r.converged
                        )
                        .unwrap();
                    }
                    Err(e) => {
                        manifest.warnings.push(format!("frame {k} failed: {e}"));
                        writeln!(latency, "{k},{:.3},0,,failed", fr.wall_seconds * 1e3).unwrap();
                    }
                }
            }
            std::fs::write(a.out.join("latency.csv"), latency)?;
            let ok = seq.iter().filter(|f| f.result.is_ok()).count();
            println!("sequence: {ok}/{} frames reconstructed", seq.len());
        }
        _ => {
            return Err(GsError::Config(
                "provide exactly one of --measurements or --sequence".into(),
            ))
        }
    }
    manifest.add_wall("total", t0.elapsed().as_secs_f64());
    manifest.write_to(&a.out.join("manifest.txt"))?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    ensure_out(&a.out)?;
    let t0 = std::time::Instant::now();
    let cfg = solver_config(a.config.as_ref(), None)?;
    let mut manifest = RunManifest {
        command: "sweep".into(),
        config: write_config(&cfg),
        ..Default::default()
    };
    manifest.add_input("mesh", &std::fs::read(&a.mesh)?);
    manifest.add_input("measurements", &std::fs::read(&a.measurements)?);
    let mesh = load_mesh(&a.mesh)?;
    let meas = load_measurements(&a.measurements)?;
    let rec = Reconstructor::new(&mesh)?;

    match (&a.perturb, &a.eps_grid) {
        (Some(level), None) => {
            if a.seeds == 0 {
                return Err(GsError::Config(
                    "--seeds must be positive for --perturb".into(),
                ));
            }
            // reconstruct a reference state once, then perturb its exact
            // synthetic measurements seed by seed
            let reference = rec.reconstruct(&meas, &cfg, None)?;
            let geometry = meas.geometry();
            let seeds: Vec<u64> = (0..a.seeds as u64).map(|k| a.seed + k).collect();
            let rows = gsrec::par::maybe_par_map(cfg.parallel, seeds.len(), |i| {
                let outcome = synthesize(
                    &mesh,
                    &reference.flux,
                    &reference.profiles,
                    &geometry,
                    NoiseSpec {
                        level: *level,
                        seed: seeds[i],
                        scope: NoiseScope::BoundaryMagnetics,
                    },
                )
                .and_then(|ms| rec.reconstruct(&ms, &cfg, None))
                .and_then(|res| global_scalars(&mesh, &res.flux, &res.profiles));
                (seeds[i], outcome)
            });
            let mut csv = String::from(
                "seed,volume,beta_p,l_i,shafranov_shift,upper_triangularity,lower_triangularity,q_axis,q95,beta_p_plus_li_over_2\n",
            );
            let mut lis = Vec::new();
            for (seed, row) in rows {
                use std::fmt::Write as _;
                match row {
                    Ok(s) => {
                        writeln!(
                            csv,
                            "{seed},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
                            s.volume,
                            s.beta_p,
                            s.l_i,
                            s.shafranov_shift,
                            s.upper_triangularity,
                            s.lower_triangularity,
                            s.q_axis,
                            s.q95,
                            s.beta_p_plus_li_over_2
                        )
                        .unwrap();
                        lis.push(s.l_i);
                    }
                    Err(e) => writeln!(csv, "{seed},failed: {e}").unwrap(),
                }
            }
            std::fs::write(a.out.join("sweep.csv"), csv)?;
            let n = lis.len() as f64;
            if n > 1.0 {
                let mean = lis.iter().sum::<f64>() / n;
                let std = (lis.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                println!(
                    "perturbation sweep: {} of {} seeds reconstructed; l_i mean {:.4}, std {:.4}",
                    lis.len(),
                    a.seeds,
                    mean,
                    std
                );
            }
        }
        (None, Some(grid)) => {
            let eps_values: Vec<f64> = grid
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| GsError::Config(format!("bad --eps-grid: {e}")))?;
            let mut csv = String::from("eps,misfit_weighted,penalty,converged,iterations\n");
            for eps in eps_values {
                use std::fmt::Write as _;
                let mut c = cfg.clone();
                c.eps1 = eps;
                c.eps2 = eps;
                c.eps3 = eps;
                match rec.reconstruct(&meas, &c, None) {
                    Ok(res) => {
                        let t = res.trace.last().expect("at least one iteration");
                        writeln!(
                            csv,
                            "{eps:e},{:.6e},{:.6e},{},{}",
                            t.j_total_weighted - t.j_eps,
                            t.j_eps,
                            res.converged,
                            res.iterations
                        )
                        .unwrap();
                    }
                    Err(e) => writeln!(csv, "{eps:e},failed: {e}").unwrap(),
                }
            }
            std::fs::write(a.out.join("lcurve.csv"), csv)?;
            println!("regularization sweep written to lcurve.csv");
        }
        _ => {
            return Err(GsError::Config(
                "provide exactly one of --perturb or --eps-grid".into(),
            ))
        }
    }
    manifest.add_wall("total", t0.elapsed().as_secs_f64());
    manifest.write_to(&a.out.join("manifest.txt"))?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let fa = ResultFile::load(&a.a)?;
    let fb = ResultFile::load(&a.b)?;
    let mut failures = Vec::new();
    let bookkeeping = ["iterations", "converged", "ip_input"];
    for (key, va) in &fa.scalars {
        if bookkeeping.contains(&key.as_str()) {
            continue;
        }
        if let Some(vb) = fb.scalar(key) {
            let scale = va.abs().max(vb.abs()).max(1e-12);
            let rel = (va - vb).abs() / scale;
            let flag = if rel > a.tol_scalars { " <-- EXCEEDS" } else { "" };
            println!("{key}: {va:.6e} vs {vb:.6e} (rel {rel:.3e}){flag}");
            if rel > a.tol_scalars {
                failures.push(key.clone());
            }
        }
    }
    if !fa.boundary_contour.is_empty() && !fb.boundary_contour.is_empty() {
        let d = hausdorff_distance(&fa.boundary_contour, &fb.boundary_contour);
        let flag = if d > a.tol_boundary { " <-- EXCEEDS" } else { "" };
        println!("boundary Hausdorff: {d:.4} m{flag}");
        if d > a.tol_boundary {
            failures.push("boundary".into());
        }
    }
    if failures.is_empty() {
        println!("results agree within tolerances");
        Ok(())
    } else {
        Err(GsError::Mismatch(format!(
            "{} quantities exceed tolerances: {}",
            failures.len(),
            failures.join(", ")
        )))
    }
}
