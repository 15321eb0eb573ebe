//! Command-line driver: simulate, picard, diagnose, bench-velocity.
//!
//! Exit codes: 0 completed, 2 collision termination, 3 configuration error,
//! 4 stiffness termination, 1 other failures.

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use gyrovortex::diagnostics::DiagnosticsCollector;
use gyrovortex::integrator::{self, RunRecorder, StepOutcome};
use gyrovortex::scheme::picard_run;
use gyrovortex::state::{InitialData, MassiveVortex, Mode, ParticleCloud, SimConfig, SimState};
use gyrovortex::vec2::Vec2;
use gyrovortex::{SimError, VelocityField};
use gyrovortex_cli::config::{emit_config, parse_config};
use gyrovortex_cli::output::{
    diagnostics_csv, emit_outputs, RunManifest, RunSeries, Termination, TrajectoryRow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

#[derive(Parser)]
#[command(name = "gyrovortex", about = "2D vortex-wave simulator with massive point vortices")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the coupled solver and write trajectories, diagnostics and plots.
    Simulate { config: PathBuf, outdir: PathBuf },
    /// Run the iterative frozen-field scheme and write the final iterate.
    Picard { config: PathBuf, outdir: PathBuf },
    /// Recompute vortex-subsystem diagnostics from stored trajectories.
    Diagnose { trajdir: PathBuf },
    /// Time tree-accelerated against direct velocity evaluation.
    BenchVelocity {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: f64,
    },
}

/// Records both diagnostics and the vortex trajectory.
struct CliRecorder {
    diag: DiagnosticsCollector<f64>,
    trajectory: Vec<TrajectoryRow>,
}

impl RunRecorder<f64> for CliRecorder {
    fn record(&mut self, state: &SimState<f64>, outcome: Option<&StepOutcome<f64>>) {
        self.diag.record(state, outcome);
        self.trajectory.push(TrajectoryRow {
            t: state.t,
            vortices: state.vortices.clone(),
        });
    }
}

fn new_manifest(command: &str, config_echo: String) -> RunManifest {
    RunManifest {
        command: command.into(),
        config_echo,
        start: SystemTime::now(),
        end: SystemTime::now(),
        termination: Termination::Completed,
        files: vec![],
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

fn termination_exit(t: Termination) -> ExitCode {
    match t {
        Termination::Completed => ExitCode::SUCCESS,
        Termination::Collision(_) => ExitCode::from(2),
        Termination::Stiffness(_) => ExitCode::from(4),
    }
}

fn simulate(init: &InitialData<f64>, cfg: &SimConfig<f64>, outdir: &Path) -> Result<ExitCode> {
    if cfg.mode == Mode::Picard {
        return picard(init, cfg, outdir, "simulate");
    }
    let mut rec = CliRecorder {
        diag: DiagnosticsCollector::new(cfg.mollifier_eps),
        trajectory: vec![],
    };
    let mut manifest = new_manifest("simulate", emit_config(init, cfg));
    manifest.termination = match integrator::run(init, cfg, &mut rec) {
        Ok(_) => Termination::Completed,
        Err(SimError::VortexCollision { t, .. }) => Termination::Collision(t),
        Err(SimError::StiffnessLimit { t }) => Termination::Stiffness(t),
        Err(e) => return Err(e.into()),
    };
    let series = RunSeries {
        trajectory: rec.trajectory,
        diagnostics: rec.diag.records,
    };
    emit_outputs(&series, &mut manifest, init.vortices.len(), outdir)?;
    Ok(termination_exit(manifest.termination))
}

fn picard(
    init: &InitialData<f64>,
    cfg: &SimConfig<f64>,
    outdir: &Path,
    command: &str,
) -> Result<ExitCode> {
    let mut manifest = new_manifest(command, emit_config(init, cfg));
    let mut series = RunSeries::default();
    let termination = match picard_run(init, cfg) {
        Ok(iterates) => {
            let last = iterates.last().expect("at least the base iterate");
            let mut diag = DiagnosticsCollector::new(cfg.mollifier_eps);
            for s in 0..last.times.len() {
                let state = last.state_at_slice(s);
                diag.push_record(&state)?;
                series.trajectory.push(TrajectoryRow {
                    t: state.t,
                    vortices: state.vortices,
                });
            }
            series.diagnostics = diag.records;
            Termination::Completed
        }
        Err(SimError::PicardCollision { t, .. }) | Err(SimError::VortexCollision { t, .. }) => {
            Termination::Collision(t)
        }
        Err(SimError::StiffnessLimit { t }) => Termination::Stiffness(t),
        Err(e) => return Err(e.into()),
    };
    manifest.termination = termination;
    emit_outputs(&series, &mut manifest, init.vortices.len(), outdir)?;
    Ok(termination_exit(termination))
}

fn diagnose(trajdir: &Path) -> Result<ExitCode> {
    let (init, cfg) = parse_config(&trajdir.join("config.txt"))
        .map_err(|e| anyhow!("cannot load run config from '{}': {e}", trajdir.display()))?;
    let csv_path = trajdir.join("trajectories.csv");
    let text = std::fs::read_to_string(&csv_path)
        .map_err(|e| anyhow!("cannot read '{}': {e}", csv_path.display()))?;
    let mut diag = DiagnosticsCollector::new(cfg.mollifier_eps);
    let n_v = init.vortices.len();
    for (i, line) in text.lines().skip(1).enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow!("bad number in trajectories.csv row {}: {e}", i + 1))?;
        if fields.len() != 1 + 4 * n_v {
            return Err(anyhow!(
                "trajectories.csv row {} has {} columns, expected {}",
                i + 1,
                fields.len(),
                1 + 4 * n_v
            ));
        }
        let vortices = (0..n_v)
            .map(|k| MassiveVortex {
                h: Vec2::new(fields[1 + 4 * k], fields[2 + 4 * k]),
                hdot: Vec2::new(fields[3 + 4 * k], fields[4 + 4 * k]),
                mass: init.vortices[k].mass,
                gamma: init.vortices[k].gamma,
            })
            .collect();
        let state = SimState {
            t: fields[0],
            cloud: ParticleCloud::empty(cfg.blob_sigma),
            vortices,
        };
        diag.push_record(&state)?;
    }
    let series = RunSeries {
        trajectory: vec![],
        diagnostics: diag.records,
    };
    let out = trajdir.join("diagnostics_recomputed.csv");
    std::fs::write(&out, diagnostics_csv(&series, n_v))
        .map_err(|e| anyhow!("writing '{}': {e}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn bench_velocity(n: usize, theta: f64) -> Result<ExitCode> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut positions = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    while positions.len() < n {
        let p = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if p.norm() <= 1.0 {
            positions.push(p);
            weights.push(rng.gen_range(0.2..1.0) / n as f64);
        }
    }
    let sigma = 2.0 / (n as f64).sqrt();
    let cloud = ParticleCloud {
        initial_positions: positions.clone(),
        positions,
        weights,
        blob_radius: sigma,
        cell_area: std::f64::consts::PI / n as f64,
    };
    let m = n.min(2000);
    let targets = cloud.positions[..m].to_vec();

    let direct = VelocityField::new(&cloud, &[], 0.0, sigma);
    let t0 = Instant::now();
    let u_direct = direct.eval_u(&targets);
    let t_direct = t0.elapsed().as_secs_f64();

    let tree = VelocityField::new(&cloud, &[], theta, sigma);
    let t0 = Instant::now();
    let u_tree = tree.eval_u(&targets);
    let t_tree = t0.elapsed().as_secs_f64();

    let max_rel = u_direct
        .iter()
        .zip(&u_tree)
        .map(|(a, b)| (*a - *b).norm() / a.norm().max(1e-300))
        .fold(0.0, f64::max);
    println!("n = {n}, theta = {theta}, targets = {m}");
    println!("direct: {t_direct:.4} s");
    println!("tree:   {t_tree:.4} s  (speedup {:.2}x)", t_direct / t_tree.max(1e-12));
    println!("max relative error vs direct: {max_rel:.3e}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate { config, outdir } | Cmd::Picard { config, outdir } => {
            let (init, cfg) = match parse_config(config) {
                Ok(parsed) => parsed,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(3);
                }
            };
            match &cli.cmd {
                Cmd::Simulate { .. } => simulate(&init, &cfg, outdir),
                _ => picard(&init, &cfg, outdir, "picard"),
            }
        }
        Cmd::Diagnose { trajdir } => diagnose(trajdir),
        Cmd::BenchVelocity { n, theta } => bench_velocity(*n, *theta),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
