//! Output artifacts: the sectioned result file, CSV tables, minimal SVG
//! plots and the run manifest. Result files are deterministic for identical
//! inputs; wall-clock information lives only in the manifest.

use crate::equil::{DerivedScalars, ProfileTableRow};
use crate::error::{GsError, Result};
use crate::geometry::Point;
use crate::inverse::{IterationRecord, ReconstructionResult};
use crate::plasma::BoundaryKind;
use std::fmt::Write as _;
use std::path::Path;

/// Everything a result file stores; also the truth-record format of the
/// forward solver, so the compare command can diff the two directly.
#[derive(Debug, Clone, Default)]
pub struct ResultFile {
    pub scalars: Vec<(String, f64)>,
    pub tags: Vec<(String, String)>,
    pub profiles: Vec<ProfileTableRow>,
    pub psi: Vec<f64>,
    pub boundary_contour: Vec<Point>,
    pub trace: Vec<IterationRecord>,
    /// profile coefficients, for matched-basis comparisons
    pub u: Vec<f64>,
}

impl ResultFile {
    pub fn from_reconstruction(
        res: &ReconstructionResult,
        scalars: &DerivedScalars,
        table: Vec<ProfileTableRow>,
    ) -> ResultFile {
        let mut s = scalar_list(scalars);
        s.push(("converged".into(), if res.converged { 1.0 } else { 0.0 }));
        s.push(("iterations".into(), res.iterations as f64));
        let mut tags = vec![(
            "boundary_kind".into(),
            match res.flux.kind {
                BoundaryKind::XPoint => "x-point".to_string(),
                BoundaryKind::Limiter => "limiter".to_string(),
            },
        )];
        for (k, w) in res.warnings.iter().enumerate() {
            tags.push((format!("warning_{k}"), w.clone()));
        }
        ResultFile {
            scalars: s,
            tags,
            profiles: table,
            psi: res.flux.psi.clone(),
            boundary_contour: res.flux.boundary_contour.clone(),
            trace: res.trace.clone(),
            u: res.profiles.u.clone(),
        }
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "[scalars]").unwrap();
        for (k, v) in &self.scalars {
            writeln!(s, "{k} = {v:e}").unwrap();
        }
        for (k, v) in &self.tags {
            writeln!(s, "{k} = {v}").unwrap();
        }
        writeln!(s, "[profiles]").unwrap();
        writeln!(s, "x,A,B,n_e,p,f,f2,q").unwrap();
        for r in &self.profiles {
            writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.x, r.a, r.b, r.ne, r.p, r.f, r.f2, r.q
            )
            .unwrap();
        }
        writeln!(s, "[u]").unwrap();
        for v in &self.u {
            writeln!(s, "{v:e}").unwrap();
        }
        writeln!(s, "[psi]").unwrap();
        for v in &self.psi {
            writeln!(s, "{v:e}").unwrap();
        }
        writeln!(s, "[boundary_contour]").unwrap();
        for p in &self.boundary_contour {
            writeln!(s, "{:e},{:e}", p.r, p.z).unwrap();
        }
        writeln!(s, "[trace]").unwrap();
        writeln!(
            s,
            "iter,j0,j1,j2,j3,j_eps,j_total_weighted,rel_change,u_norm,psi_axis,psi_b"
        )
        .unwrap();
        for (i, t) in self.trace.iter().enumerate() {
            writeln!(
                s,
                "{i},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                t.j0,
                t.j1,
                t.j2,
                t.j3,
                t.j_eps,
                t.j_total_weighted,
                t.rel_change,
                t.u_norm,
                t.psi_axis,
                t.psi_b
            )
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str, path: &str) -> Result<ResultFile> {
        let mut out = ResultFile::default();
        let mut section = String::new();
        let mut header_seen = false;
        for (ln0, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                header_seen = false;
                continue;
            }
            let perr = |msg: String| GsError::Parse {
                path: path.into(),
                line: ln0 + 1,
                msg,
            };
            match section.as_str() {
                "scalars" => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| perr("expected `key = value`".into()))?;
                    match v.trim().parse::<f64>() {
                        Ok(num) => out.scalars.push((k.trim().into(), num)),
                        Err(_) => out.tags.push((k.trim().into(), v.trim().into())),
                    }
                }
                "profiles" => {
                    if !header_seen {
                        header_seen = true;
                        continue;
                    }
                    let vals: Vec<f64> = line
                        .split(',')
                        .map(|t| t.parse().unwrap_or(f64::NAN))
                        .collect();
                    if vals.len() != 8 {
                        return Err(perr("profile row must have 8 columns".into()));
                    }
                    out.profiles.push(ProfileTableRow {
                        x: vals[0],
                        a: vals[1],
                        b: vals[2],
                        ne: vals[3],
                        p: vals[4],
                        f: vals[5],
                        f2: vals[6],
                        q: vals[7],
                    });
                }
                "u" => out
                    .u
                    .push(line.parse().map_err(|e| perr(format!("bad u value: {e}")))?),
                "psi" => out
                    .psi
                    .push(line.parse().map_err(|e| perr(format!("bad psi value: {e}")))?),
                "boundary_contour" => {
                    let (r, z) = line
                        .split_once(',')
                        .ok_or_else(|| perr("contour row must be `r,z`".into()))?;
                    out.boundary_contour.push(Point::new(
                        r.trim().parse().map_err(|e| perr(format!("{e}")))?,
                        z.trim().parse().map_err(|e| perr(format!("{e}")))?,
                    ));
                }
                "trace" => {
                    if !header_seen {
                        header_seen = true;
                        continue;
                    }
                    let vals: Vec<f64> = line
                        .split(',')
                        .map(|t| t.parse().unwrap_or(f64::NAN))
                        .collect();
                    if vals.len() != 11 {
                        return Err(perr("trace row must have 11 columns".into()));
                    }
                    out.trace.push(IterationRecord {
                        j0: vals[1],
                        j1: vals[2],
                        j2: vals[3],
                        j3: vals[4],
                        j_eps: vals[5],
                        j_total_weighted: vals[6],
                        rel_change: vals[7],
                        u_norm: vals[8],
                        psi_axis: vals[9],
                        psi_b: vals[10],
                    });
                }
                other => {
                    return Err(perr(format!("unknown section [{other}]")));
                }
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<ResultFile> {
        let text = std::fs::read_to_string(path)?;
        ResultFile::parse(&text, &path.display().to_string())
    }
}

fn scalar_list(s: &DerivedScalars) -> Vec<(String, f64)> {
    let mut out = vec![
        ("volume".to_string(), s.volume),
        ("beta_p".to_string(), s.beta_p),
        ("l_i".to_string(), s.l_i),
        ("shafranov_shift".to_string(), s.shafranov_shift),
        ("upper_triangularity".to_string(), s.upper_triangularity),
        ("lower_triangularity".to_string(), s.lower_triangularity),
        ("q_axis".to_string(), s.q_axis),
        ("q95".to_string(), s.q95),
        ("beta_p_plus_li_over_2".to_string(), s.beta_p_plus_li_over_2),
        ("plasma_current".to_string(), s.plasma_current),
        ("r_axis".to_string(), s.r_axis),
        ("z_axis".to_string(), s.z_axis),
        ("psi_axis".to_string(), s.psi_axis),
        ("psi_b".to_string(), s.psi_b),
    ];
    if let (Some(rx), Some(zx)) = (s.r_x, s.z_x) {
        out.push(("r_x".to_string(), rx));
        out.push(("z_x".to_string(), zx));
    }
    out
}

// ---------------------------------------------------------------------------
// run manifest
// ---------------------------------------------------------------------------

/// FNV-1a, for input fingerprints in the manifest.
pub fn fnv1a(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub inputs: Vec<(String, u64)>,
    pub wall: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn add_input(&mut self, name: &str, content: &[u8]) {
        self.inputs.push((name.to_string(), fnv1a(content)));
    }

    pub fn add_wall(&mut self, stage: &str, seconds: f64) {
        self.wall.push((stage.to_string(), seconds));
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "command = {}", self.command).unwrap();
        writeln!(s, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        for (name, hash) in &self.inputs {
            writeln!(s, "input {name} = {hash:016x}").unwrap();
        }
        writeln!(s, "[config]").unwrap();
        s.push_str(&self.config);
        writeln!(s, "[timing]").unwrap();
        for (stage, secs) in &self.wall {
            writeln!(s, "{stage} = {secs:.6}s").unwrap();
        }
        writeln!(s, "[warnings]").unwrap();
        for w in &self.warnings {
            writeln!(s, "{w}").unwrap();
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// minimal SVG plotting
// ---------------------------------------------------------------------------

pub struct SvgPlot {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<(String, Vec<(f64, f64)>, &'static str, bool)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#386c6c"];

impl SvgPlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> SvgPlot {
        SvgPlot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
        }
    }

    pub fn add_line(&mut self, name: &str, pts: Vec<(f64, f64)>) {
        let color = COLORS[self.series.len() % COLORS.len()];
        self.series.push((name.to_string(), pts, color, false));
    }

    pub fn add_closed(&mut self, name: &str, pts: Vec<(f64, f64)>) {
        let color = COLORS[self.series.len() % COLORS.len()];
        self.series.push((name.to_string(), pts, color, true));
    }

    pub fn render(&self) -> String {
        let (w, h) = (640.0, 480.0);
        let (ml, mr, mt, mb) = (64.0, 16.0, 32.0, 48.0);
        let (mut x0, mut x1, mut y0, mut y1) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (_, pts, _, _) in &self.series {
            for &(x, y) in pts {
                if x.is_finite() && y.is_finite() {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        if !x0.is_finite() {
            x0 = 0.0;
            x1 = 1.0;
            y0 = 0.0;
            y1 = 1.0;
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let pad_x = 0.04 * (x1 - x0);
        let pad_y = 0.06 * (y1 - y0);
        x0 -= pad_x;
        x1 += pad_x;
        y0 -= pad_y;
        y1 += pad_y;
        let sx = (w - ml - mr) / (x1 - x0);
        let sy = (h - mt - mb) / (y1 - y0);
        let tx = |x: f64| ml + (x - x0) * sx;
        let ty = |y: f64| h - mb - (y - y0) * sy;

        let mut s = String::new();
        writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        )
        .unwrap();
        writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
        writeln!(
            s,
            "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"15\" font-family=\"sans-serif\">{}</text>",
            w / 2.0,
            xml_escape(&self.title)
        )
        .unwrap();
        // axes with 5 ticks per direction
        writeln!(
            s,
            "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
            w - ml - mr,
            h - mt - mb
        )
        .unwrap();
        for k in 0..=5 {
            let fx = x0 + (x1 - x0) * k as f64 / 5.0;
            let fy = y0 + (y1 - y0) * k as f64 / 5.0;
            writeln!(
                s,
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#444\"/>",
                tx(fx),
                h - mb,
                h - mb + 5.0
            )
            .unwrap();
            writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">{:.3}</text>",
                tx(fx),
                h - mb + 18.0,
                fx
            )
            .unwrap();
            writeln!(
                s,
                "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#444\"/>",
                ty(fy),
                ml - 5.0,
                ml
            )
            .unwrap();
            writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">{:.3}</text>",
                ml - 8.0,
                ty(fy) + 4.0,
                fy
            )
            .unwrap();
        }
        writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">{}</text>",
            w / 2.0,
            h - 10.0,
            xml_escape(&self.x_label)
        )
        .unwrap();
        writeln!(
            s,
            "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 16 {})\">{}</text>",
            h / 2.0,
            h / 2.0,
            xml_escape(&self.y_label)
        )
        .unwrap();
        for (i, (name, pts, color, closed)) in self.series.iter().enumerate() {
            let mut path = String::new();
            for (k, &(x, y)) in pts.iter().enumerate() {
                if !x.is_finite() || !y.is_finite() {
                    continue;
                }
                let cmd = if k == 0 { 'M' } else { 'L' };
                write!(path, "{cmd}{:.2},{:.2} ", tx(x), ty(y)).unwrap();
            }
            if *closed {
                path.push('Z');
            }
            writeln!(
                s,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
            )
            .unwrap();
            let ly = mt + 16.0 + 16.0 * i as f64;
            writeln!(
                s,
                "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                ml + 8.0,
                ml + 28.0
            )
            .unwrap();
            writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>",
                ml + 34.0,
                ly + 4.0,
                xml_escape(name)
            )
            .unwrap();
        }
        writeln!(s, "</svg>").unwrap();
        s
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Contours exported as CSV polylines (`r,z` per line, closed).
pub fn contour_csv(points: &[Point]) -> String {
    let mut s = String::from("r,z\n");
    for p in points {
        writeln!(s, "{:e},{:e}", p.r, p.z).unwrap();
    }
    if let Some(first) = points.first() {
        writeln!(s, "{:e},{:e}", first.r, first.z).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn result_file_roundtrip() {
        let rf = ResultFile {
            scalars: vec![("volume".into(), 97.25), ("l_i".into(), 0.96)],
            tags: vec![("boundary_kind".into(), "x-point".into())],
            profiles: vec![ProfileTableRow {
                x: 0.5,
                a: 1.0e5,
                b: 2.0e4,
                ne: 1.5e19,
                p: 4.0e4,
                f: 8.1,
                f2: 65.61,
                q: 1.7,
            }],
            psi: vec![0.1, 0.2, 0.3],
            boundary_contour: vec![Point::new(2.0, 0.0), Point::new(3.0, 1.0)],
            trace: vec![],
            u: vec![1.0, -2.0],
        };
        let text = rf.render();
        let back = ResultFile::parse(&text, "inline").unwrap();
        assert_eq!(back.scalar("volume"), Some(97.25));
        assert_eq!(back.psi, rf.psi);
        assert_eq!(back.u, rf.u);
        assert_eq!(back.profiles.len(), 1);
        assert_eq!(back.boundary_contour.len(), 2);
        assert_eq!(back.tags[0].1, "x-point");
    }

    #[test]
    fn render_is_deterministic() {
        let rf = ResultFile {
            scalars: vec![("volume".into(), 1.0 / 3.0)],
            ..Default::default()
        };
        assert_eq!(rf.render(), rf.render());
    }

    #[test]
    fn svg_renders_valid_shell() {
        let mut plot = SvgPlot::new("profiles", "x", "A");
        plot.add_line("A", vec![(0.0, 1.0), (0.5, 0.6), (1.0, 0.0)]);
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("profiles"));
    }

    #[test]
    fn fnv_stable() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
