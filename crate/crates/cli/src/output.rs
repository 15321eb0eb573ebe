//! Run artifacts: trajectory and diagnostics CSVs, the run manifest, and
//! standalone SVG plots.

use anyhow::{anyhow, Context, Result};
use gyrovortex::diagnostics::DiagnosticsRecord;
use gyrovortex::state::MassiveVortex;
use std::fmt::Write as _;
use std::path::Path;
use std::time::SystemTime;

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Completed,
    Collision(f64),
    Stiffness(f64),
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::Collision(t) => write!(f, "collision(t={t})"),
            Termination::Stiffness(t) => write!(f, "stiffness(t={t})"),
        }
    }
}

/// One trajectory row: time plus per-vortex position and velocity.
#[derive(Clone, Debug)]
pub struct TrajectoryRow {
    pub t: f64,
    pub vortices: Vec<MassiveVortex<f64>>,
}

/// Everything recorded over a run, ready for serialization.
#[derive(Clone, Debug, Default)]
pub struct RunSeries {
    pub trajectory: Vec<TrajectoryRow>,
    pub diagnostics: Vec<DiagnosticsRecord<f64>>,
}

/// Provenance of one run; exactly one manifest is emitted per run.
pub struct RunManifest {
    pub command: String,
    pub config_echo: String,
    pub start: SystemTime,
    pub end: SystemTime,
    pub termination: Termination,
    pub files: Vec<String>,
    pub version: String,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing '{}'", path.display()))
}

fn trajectories_csv(series: &RunSeries, n_vortices: usize) -> String {
    let mut out = String::from("t");
    for k in 0..n_vortices {
        let _ = write!(out, ",hx_{k},hy_{k},vx_{k},vy_{k}");
    }
    out.push('\n');
    for row in &series.trajectory {
        out.push_str(&num(row.t));
        for v in &row.vortices {
            let _ = write!(
                out,
                ",{},{},{},{}",
                num(v.h.x),
                num(v.h.y),
                num(v.hdot.x),
                num(v.hdot.y)
            );
        }
        out.push('\n');
    }
    out
}

/// Render the diagnostics CSV (also used by `diagnose` for recomputed rows).
pub fn diagnostics_csv(series: &RunSeries, n_vortices: usize) -> String {
    let mut out = String::from(
        "t,H0,I0,Hn,minVortexDist,minParticleVortexDist,supportRadius,L1,L2,Linf,D",
    );
    for k in 0..n_vortices {
        let _ = write!(out, ",Fk_mean_{k}");
    }
    out.push('\n');
    for r in &series.diagnostics {
        let d = r.d_t.map(num).unwrap_or_default();
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{d}",
            num(r.t),
            num(r.h0),
            num(r.i0),
            num(r.hn),
            num(r.min_vortex_dist),
            num(r.min_particle_vortex_dist),
            num(r.support_radius),
            num(r.l1),
            num(r.l2),
            num(r.linf)
        );
        for f in &r.fk_mean {
            let _ = write!(out, ",{}", num(*f));
        }
        out.push('\n');
    }
    out
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    width: f64,
    height: f64,
    margin: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = (self.width - 2.0 * self.margin) / (self.x1 - self.x0).max(1e-300);
        let sy = (self.height - 2.0 * self.margin) / (self.y1 - self.y0).max(1e-300);
        (
            self.margin + (x - self.x0) * sx,
            self.height - self.margin - (y - self.y0) * sy,
        )
    }

    fn polyline(&self, points: impl Iterator<Item = (f64, f64)>, color: &str) -> String {
        let coords: Vec<String> = points
            .map(|(x, y)| {
                let (px, py) = self.map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            coords.join(" ")
        )
    }
}

fn svg_document(width: f64, height: f64, title: &str, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{title}</text>\n{body}</svg>\n",
        width / 2.0
    )
}

fn trajectory_svg(series: &RunSeries) -> String {
    let (w, h, m) = (600.0, 600.0, 50.0);
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &series.trajectory {
        for v in &row.vortices {
            xs = (xs.0.min(v.h.x), xs.1.max(v.h.x));
            ys = (ys.0.min(v.h.y), ys.1.max(v.h.y));
        }
    }
    if !xs.0.is_finite() {
        return svg_document(w, h, "vortex trajectories (empty series)", "");
    }
    let pad_x = 0.05 * (xs.1 - xs.0).max(1e-6);
    let pad_y = 0.05 * (ys.1 - ys.0).max(1e-6);
    let frame = Frame {
        x0: xs.0 - pad_x,
        x1: xs.1 + pad_x,
        y0: ys.0 - pad_y,
        y1: ys.1 + pad_y,
        width: w,
        height: h,
        margin: m,
    };
    let n_vortices = series.trajectory[0].vortices.len();
    let mut body = format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
        w - 2.0 * m,
        h - 2.0 * m
    );
    for k in 0..n_vortices {
        let color = PALETTE[k % PALETTE.len()];
        body.push_str(&frame.polyline(
            series.trajectory.iter().map(|r| (r.vortices[k].h.x, r.vortices[k].h.y)),
            color,
        ));
    }
    svg_document(w, h, "vortex trajectories", &body)
}

fn drift_svg(series: &RunSeries) -> String {
    let (w, h, m) = (600.0, 300.0, 50.0);
    let recs = &series.diagnostics;
    if recs.len() < 2 {
        return svg_document(w, h, "conservation drift (empty series)", "");
    }
    let rel = |q: f64, q0: f64| ((q - q0) / q0.abs().max(1e-300)).abs();
    let h0_drift: Vec<(f64, f64)> = recs.iter().map(|r| (r.t, rel(r.h0, recs[0].h0))).collect();
    let i0_drift: Vec<(f64, f64)> = recs.iter().map(|r| (r.t, rel(r.i0, recs[0].i0))).collect();
    let y_max = h0_drift
        .iter()
        .chain(&i0_drift)
        .map(|&(_, y)| y)
        .fold(1e-16, f64::max);
    let frame = Frame {
        x0: recs[0].t,
        x1: recs.last().unwrap().t,
        y0: 0.0,
        y1: y_max * 1.05,
        width: w,
        height: h,
        margin: m,
    };
    let mut body = format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n\
         <text x=\"{m}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\
         max relative drift: {y_max:.3e}</text>\n\
         <text x=\"440\" y=\"45\" font-family=\"sans-serif\" font-size=\"11\" \
         fill=\"{}\">H0</text>\n\
         <text x=\"470\" y=\"45\" font-family=\"sans-serif\" font-size=\"11\" \
         fill=\"{}\">I0</text>\n",
        w - 2.0 * m,
        h - 2.0 * m,
        h - 15.0,
        PALETTE[0],
        PALETTE[1]
    );
    body.push_str(&frame.polyline(h0_drift.into_iter(), PALETTE[0]));
    body.push_str(&frame.polyline(i0_drift.into_iter(), PALETTE[1]));
    svg_document(w, h, "conservation drift", &body)
}

fn unix_ms(t: SystemTime) -> u128 {
    t.duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn manifest_txt(manifest: &RunManifest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "version = {}", manifest.version);
    let _ = writeln!(out, "command = {}", manifest.command);
    let _ = writeln!(out, "start_unix_ms = {}", unix_ms(manifest.start));
    let _ = writeln!(out, "end_unix_ms = {}", unix_ms(manifest.end));
    let _ = writeln!(out, "termination = {}", manifest.termination);
    let _ = writeln!(out, "files:");
    for f in &manifest.files {
        let _ = writeln!(out, "  {f}");
    }
    let _ = writeln!(out, "config:");
    for line in manifest.config_echo.lines() {
        let _ = writeln!(out, "  {line}");
    }
    out
}

/// Write all run artifacts into `outdir`: the two CSVs, the config echo,
/// the two SVG plots, and the manifest.
pub fn emit_outputs(
    series: &RunSeries,
    manifest: &mut RunManifest,
    n_vortices: usize,
    outdir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(outdir)
        .map_err(|e| anyhow!("cannot create outdir '{}': {e}", outdir.display()))?;
    manifest.files = vec![
        "trajectories.csv".into(),
        "diagnostics.csv".into(),
        "trajectories.svg".into(),
        "drift.svg".into(),
        "config.txt".into(),
        "manifest.txt".into(),
    ];
    write_file(&outdir.join("trajectories.csv"), &trajectories_csv(series, n_vortices))?;
    write_file(&outdir.join("diagnostics.csv"), &diagnostics_csv(series, n_vortices))?;
    write_file(&outdir.join("trajectories.svg"), &trajectory_svg(series))?;
    write_file(&outdir.join("drift.svg"), &drift_svg(series))?;
    write_file(&outdir.join("config.txt"), &manifest.config_echo)?;
    manifest.end = SystemTime::now();
    write_file(&outdir.join("manifest.txt"), &manifest_txt(manifest))?;
    Ok(())
}
