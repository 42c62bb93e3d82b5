//! End-to-end runs of the command-line binary: workflows, exit codes and
//! output determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsrec"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("gsrec_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn full_workflow_and_determinism() {
    let dir = tmp("workflow");
    // coarse case keeps the test quick
    let case = dir.join("case");
    let status = bin()
        .args([
            "forward",
            "--case",
            "monotonic",
            "--target-h",
            "0.12",
            "--out",
            case.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["mesh.txt", "measurements.txt", "truth.txt", "manifest.txt"] {
        assert!(case.join(f).exists(), "missing {f}");
    }

    let rec1 = dir.join("rec1");
    let rec2 = dir.join("rec2");
    for out in [&rec1, &rec2] {
        let status = bin()
            .args([
                "reconstruct",
                "--mesh",
                case.join("mesh.txt").to_str().unwrap(),
                "--measurements",
                case.join("measurements.txt").to_str().unwrap(),
                "--truth",
                case.join("truth.txt").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    // identical inputs give byte-identical result files (manifests differ
    // only in their timing section)
    assert_eq!(
        read(&rec1.join("result.txt")),
        read(&rec2.join("result.txt")),
        "result files must be deterministic"
    );
    assert!(rec1.join("result_boundary.svg").exists());
    assert!(rec1.join("result_profiles.csv").exists());

    // compare the reconstruction against the truth bundle
    let status = bin()
        .args([
            "compare",
            rec1.join("result.txt").to_str().unwrap(),
            case.join("truth.txt").to_str().unwrap(),
            "--tol-scalars",
            "0.2",
            "--tol-boundary",
            "0.02",
        ])
        .status()
        .unwrap();
    assert!(status.success(), "reconstruction must match truth loosely");
}

#[test]
fn synth_reproduces_measurements() {
    let dir = tmp("synth");
    let case = dir.join("case");
    assert!(bin()
        .args([
            "forward",
            "--case",
            "monotonic",
            "--target-h",
            "0.12",
            "--out",
            case.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let synth = dir.join("synth");
    assert!(bin()
        .args([
            "synth",
            "--mesh",
            case.join("mesh.txt").to_str().unwrap(),
            "--truth",
            case.join("truth.txt").to_str().unwrap(),
            "--geometry",
            case.join("measurements.txt").to_str().unwrap(),
            "--out",
            synth.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    assert!(synth.join("manifest.txt").exists());
    // the re-synthesized noiseless measurements match the bundle closely
    // (the truth file stores full-precision psi and coefficients)
    let a = read(&case.join("measurements.txt"));
    let b = read(&synth.join("measurements.txt"));
    let parse = |text: &str| -> Vec<f64> {
        text.split(|c: char| !matches!(c, '0'..='9' | '.' | '-' | '+' | 'e' | 'E'))
            .filter_map(|t| t.parse::<f64>().ok())
            .collect()
    };
    let (va, vb) = (parse(&a), parse(&b));
    assert_eq!(va.len(), vb.len());
    for (x, y) in va.iter().zip(&vb) {
        assert!(
            (x - y).abs() <= 1e-9 * x.abs().max(1.0),
            "measurement drift: {x} vs {y}"
        );
    }
}

#[test]
fn mesh_command_roundtrip_and_errors() {
    let dir = tmp("mesh");
    // circle contour file
    let contour = dir.join("circle.txt");
    let mut text = String::from("# circle r=0.5 at (3, 0)\n");
    for k in 0..360 {
        let t = 2.0 * std::f64::consts::PI * k as f64 / 360.0;
        text.push_str(&format!("{} {}\n", 3.0 + 0.5 * t.cos(), 0.5 * t.sin()));
    }
    std::fs::write(&contour, text).unwrap();
    let out = dir.join("out");
    assert!(bin()
        .args([
            "mesh",
            "--contour",
            contour.to_str().unwrap(),
            "--target-h",
            "0.05",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    // the mesh file reloads without error through the reconstruct loader path
    let reload = gsrec::mesh::load_mesh(&out.join("mesh.txt")).unwrap();
    assert!(reload.triangle_count() > 100);

    // triangle count scaling vs half the spacing
    let out2 = dir.join("out2");
    assert!(bin()
        .args([
            "mesh",
            "--contour",
            contour.to_str().unwrap(),
            "--target-h",
            "0.025",
            "--out",
            out2.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let fine = gsrec::mesh::load_mesh(&out2.join("mesh.txt")).unwrap();
    let ratio = fine.triangle_count() as f64 / reload.triangle_count() as f64;
    assert!((3.5..=4.5).contains(&ratio), "count ratio {ratio}");

    // malformed contour: nonzero exit, message names the bad line
    let bad = dir.join("bad.txt");
    std::fs::write(&bad, "3.0 0.0\n3.5 bogus\n3.2 0.4\n").unwrap();
    let output = bin()
        .args([
            "mesh",
            "--contour",
            bad.to_str().unwrap(),
            "--out",
            dir.join("badout").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":2"), "error must name line 2: {stderr}");
}

#[test]
fn exit_codes_for_config_errors() {
    let dir = tmp("exitcodes");
    // missing --case is a config error: exit 2
    let output = bin()
        .args(["forward", "--out", dir.join("x").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // bad mode flag
    let output = bin()
        .args([
            "reconstruct",
            "--mesh",
            "nonexistent.txt",
            "--measurements",
            "nonexistent.txt",
            "--mode",
            "Q",
            "--out",
            dir.join("y").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // missing input file: I/O error, exit 4
    let output = bin()
        .args([
            "reconstruct",
            "--mesh",
            "nonexistent.txt",
            "--measurements",
            "nonexistent.txt",
            "--out",
            dir.join("z").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));

    // sweep without a variant selected
    let output = bin()
        .args([
            "sweep",
            "--mesh",
            "nonexistent.txt",
            "--measurements",
            "nonexistent.txt",
            "--out",
            dir.join("w").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(matches!(output.status.code(), Some(2) | Some(4)));
}

#[test]
fn sweep_perturbation_csv() {
    let dir = tmp("sweep");
    let case = dir.join("case");
    assert!(bin()
        .args([
            "forward",
            "--case",
            "monotonic",
            "--target-h",
            "0.12",
            "--out",
            case.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let out = dir.join("out");
    let output = bin()
        .args([
            "sweep",
            "--mesh",
            case.join("mesh.txt").to_str().unwrap(),
            "--measurements",
            case.join("measurements.txt").to_str().unwrap(),
            "--perturb",
            "0.01",
            "--seeds",
            "8",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv = read(&out.join("sweep.csv"));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 9, "header plus one row per seed:\n{csv}");
    assert!(rows[0].starts_with("seed,volume,beta_p,l_i"));
    assert!(out.join("manifest.txt").exists());

    // zero seeds: usage error
    let output = bin()
        .args([
            "sweep",
            "--mesh",
            case.join("mesh.txt").to_str().unwrap(),
            "--measurements",
            case.join("measurements.txt").to_str().unwrap(),
            "--perturb",
            "0.01",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // L-curve table over a small grid
    let out2 = dir.join("lcurve");
    assert!(bin()
        .args([
            "sweep",
            "--mesh",
            case.join("mesh.txt").to_str().unwrap(),
            "--measurements",
            case.join("measurements.txt").to_str().unwrap(),
            "--eps-grid",
            "1e-4,1e-3,1e-2",
            "--out",
            out2.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let csv = read(&out2.join("lcurve.csv"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn sequence_reconstruction_over_frames() {
    let dir = tmp("sequence");
    let case = dir.join("case");
    assert!(bin()
        .args([
            "forward",
            "--case",
            "monotonic",
            "--target-h",
            "0.12",
            "--out",
            case.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let frames = dir.join("frames");
    std::fs::create_dir_all(&frames).unwrap();
    let meas = read(&case.join("measurements.txt"));
    for k in 0..4 {
        std::fs::write(frames.join(format!("frame_{k:03}.txt")), &meas).unwrap();
    }
    let out = dir.join("out");
    assert!(bin()
        .args([
            "reconstruct",
            "--mesh",
            case.join("mesh.txt").to_str().unwrap(),
            "--sequence",
            frames.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let latency = read(&out.join("latency.csv"));
    assert_eq!(latency.lines().count(), 5, "{latency}");
    for k in 0..4 {
        assert!(out.join(format!("result_{k:04}.txt")).exists());
    }
}
