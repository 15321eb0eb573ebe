//! Time stepping: classical RK4 with adaptive substepping near close
//! approaches, collision detection, and the run loop.

use crate::dynamics::{rhs_for_mode, StateDerivative};
use crate::error::{Result, SimError};
use crate::real::Real;
use crate::state::{discretize, InitialData, Mode, SimConfig, SimState};
use crate::vec2::Vec2;
use crate::velocity::VelocityField;

const MAX_SUBSTEPS: usize = 1 << 10;

/// Result of one macro step of size `dt`.
#[derive(Clone, Debug)]
pub struct StepOutcome<R = f64> {
    pub state: SimState<R>,
    pub substeps_taken: usize,
    pub min_vortex_distance: R,
    pub min_particle_vortex_distance: R,
}

/// Observer invoked between macro steps. `outcome` is `None` for the
/// initial record at t = 0.
pub trait RunRecorder<R: Real> {
    fn record(&mut self, state: &SimState<R>, outcome: Option<&StepOutcome<R>>);
}

/// Recorder that drops everything.
pub struct NullRecorder;

impl<R: Real> RunRecorder<R> for NullRecorder {
    fn record(&mut self, _state: &SimState<R>, _outcome: Option<&StepOutcome<R>>) {}
}

fn first_order<R: Real>(cfg: &SimConfig<R>, mass: R) -> bool {
    cfg.mode == Mode::VortexWave || mass == R::zero()
}

/// Working copy of the integrated variables.
#[derive(Clone)]
struct Ys<R> {
    px: Vec<Vec2<R>>,
    h: Vec<Vec2<R>>,
    hd: Vec<Vec2<R>>,
}

impl<R: Real> Ys<R> {
    fn from_state(state: &SimState<R>) -> Self {
        Self {
            px: state.cloud.positions.clone(),
            h: state.vortices.iter().map(|v| v.h).collect(),
            hd: state.vortices.iter().map(|v| v.hdot).collect(),
        }
    }

    fn store(&self, state: &mut SimState<R>, t: R) {
        state.t = t;
        state.cloud.positions.copy_from_slice(&self.px);
        for (v, (&h, &hd)) in state
            .vortices
            .iter_mut()
            .zip(self.h.iter().zip(&self.hd))
        {
            v.h = h;
            v.hdot = hd;
        }
    }

    fn axpy(&self, k: &Deriv<R>, a: R) -> Self {
        let mut out = self.clone();
        for (o, d) in out.px.iter_mut().zip(&k.px) {
            *o += *d * a;
        }
        for (o, d) in out.h.iter_mut().zip(&k.h) {
            *o += *d * a;
        }
        for (o, d) in out.hd.iter_mut().zip(&k.hd) {
            *o += *d * a;
        }
        out
    }
}

#[derive(Clone)]
struct Deriv<R> {
    px: Vec<Vec2<R>>,
    h: Vec<Vec2<R>>,
    hd: Vec<Vec2<R>>,
}

impl<R: Real> Deriv<R> {
    fn from_rhs(d: StateDerivative<R>, state: &SimState<R>, cfg: &SimConfig<R>) -> Self {
        let mut h = Vec::with_capacity(state.vortices.len());
        let mut hd = Vec::with_capacity(state.vortices.len());
        for (k, v) in state.vortices.iter().enumerate() {
            if first_order(cfg, v.mass) {
                h.push(d.vortex_hdots[k]);
                hd.push(Vec2::zero());
            } else {
                h.push(v.hdot);
                hd.push(d.vortex_hddots[k].expect("massive vortex without hddot"));
            }
        }
        Self {
            px: d.particle_velocities,
            h,
            hd,
        }
    }
}

fn min_pair_distance<R: Real>(h: &[Vec2<R>]) -> (R, usize, usize) {
    let mut best = R::infinity();
    let (mut bi, mut bj) = (0, 0);
    for i in 0..h.len() {
        for j in (i + 1)..h.len() {
            let d = h[i].dist(h[j]);
            if d < best {
                best = d;
                bi = i;
                bj = j;
            }
        }
    }
    (best, bi, bj)
}

fn min_particle_vortex<R: Real>(px: &[Vec2<R>], h: &[Vec2<R>]) -> R {
    let mut best = R::infinity();
    for hv in h {
        for p in px {
            best = best.min(p.dist(*hv));
        }
    }
    best
}

/// True when some pair is closer than four times the distance it can close
/// within one substep. The speed entering the heuristic is the radial
/// approach speed of the pair, so steadily co-rotating configurations do
/// not trigger endless refinement.
fn needs_refinement<R: Real>(ys: &Ys<R>, k1: &Deriv<R>, h_sub: R) -> bool {
    let four = R::lit(4.0);
    let nv = ys.h.len();
    for i in 0..nv {
        for j in (i + 1)..nv {
            let d = ys.h[i] - ys.h[j];
            let dist = d.norm();
            let w = k1.h[i] - k1.h[j];
            let approach = (-(d.dot(w)) / dist.max(R::min_positive_value())).max(R::zero());
            if dist < four * approach * h_sub {
                return true;
            }
        }
    }
    for (p, vel) in ys.px.iter().zip(&k1.px) {
        for (hv, hvel) in ys.h.iter().zip(&k1.h) {
            let d = *p - *hv;
            let dist = d.norm();
            let w = *vel - *hvel;
            let approach = (-(d.dot(w)) / dist.max(R::min_positive_value())).max(R::zero());
            if dist < four * approach * h_sub {
                return true;
            }
        }
    }
    false
}

/// One RK4 macro step of size `dt`, possibly via several substeps.
pub fn step<R: Real>(state: &SimState<R>, cfg: &SimConfig<R>) -> Result<StepOutcome<R>> {
    step_dt(state, cfg, cfg.dt)
}

/// Same as [`step`] with an explicit step size (used for the final partial
/// step of a run).
pub fn step_dt<R: Real>(state: &SimState<R>, cfg: &SimConfig<R>, dt: R) -> Result<StepOutcome<R>> {
    let t0 = state.t;
    let mut n_sub = 1usize;

    'attempt: loop {
        let h_sub = dt / R::from_usize(n_sub).unwrap();
        let mut scratch = state.clone();
        let mut ys = Ys::from_state(state);
        let mut min_vv = R::infinity();
        let mut min_pv = R::infinity();

        for i in 0..n_sub {
            let t = t0 + h_sub * R::from_usize(i).unwrap();
            ys.store(&mut scratch, t);

            let k1 = Deriv::from_rhs(rhs_for_mode(&scratch, cfg)?, &scratch, cfg);
            if needs_refinement(&ys, &k1, h_sub) {
                if n_sub >= MAX_SUBSTEPS {
                    return Err(SimError::StiffnessLimit {
                        t: t.to_f64().unwrap_or(f64::NAN),
                    });
                }
                n_sub *= 2;
                continue 'attempt;
            }

            let half = h_sub * R::lit(0.5);
            let y2 = ys.axpy(&k1, half);
            y2.store(&mut scratch, t + half);
            let k2 = Deriv::from_rhs(rhs_for_mode(&scratch, cfg)?, &scratch, cfg);

            let y3 = ys.axpy(&k2, half);
            y3.store(&mut scratch, t + half);
            let k3 = Deriv::from_rhs(rhs_for_mode(&scratch, cfg)?, &scratch, cfg);

            let y4 = ys.axpy(&k3, h_sub);
            y4.store(&mut scratch, t + h_sub);
            let k4 = Deriv::from_rhs(rhs_for_mode(&scratch, cfg)?, &scratch, cfg);

            let sixth = h_sub / R::lit(6.0);
            let two = R::lit(2.0);
            for (idx, y) in ys.px.iter_mut().enumerate() {
                *y += (k1.px[idx] + k2.px[idx] * two + k3.px[idx] * two + k4.px[idx]) * sixth;
            }
            for (idx, y) in ys.h.iter_mut().enumerate() {
                *y += (k1.h[idx] + k2.h[idx] * two + k3.h[idx] * two + k4.h[idx]) * sixth;
            }
            for (idx, y) in ys.hd.iter_mut().enumerate() {
                *y += (k1.hd[idx] + k2.hd[idx] * two + k3.hd[idx] * two + k4.hd[idx]) * sixth;
            }

            let t_now = (t0 + h_sub * R::from_usize(i + 1).unwrap())
                .to_f64()
                .unwrap_or(f64::NAN);
            for p in &ys.px {
                if !p.is_finite() {
                    return Err(SimError::NonFinite {
                        what: "particle position",
                        t: t_now,
                    });
                }
            }
            for (hv, hd) in ys.h.iter().zip(&ys.hd) {
                if !hv.is_finite() || !hd.is_finite() {
                    return Err(SimError::NonFinite {
                        what: "vortex state",
                        t: t_now,
                    });
                }
            }

            let (dvv, bi, bj) = min_pair_distance(&ys.h);
            if dvv < cfg.collision_stop_rho {
                return Err(SimError::VortexCollision {
                    t: t_now,
                    i: bi,
                    j: bj,
                    dist: dvv.to_f64().unwrap_or(f64::NAN),
                });
            }
            min_vv = min_vv.min(dvv);
            min_pv = min_pv.min(min_particle_vortex(&ys.px, &ys.h));
        }

        let mut out = state.clone();
        ys.store(&mut out, t0 + dt);
        // Keep massless hdot slots in sync with the field for snapshot
        // consumers (diagnostics read hdot).
        refresh_massless_hdots(&mut out, cfg)?;
        return Ok(StepOutcome {
            state: out,
            substeps_taken: n_sub,
            min_vortex_distance: min_vv,
            min_particle_vortex_distance: min_pv,
        });
    }
}

/// For first-order vortices the stored `hdot` is derived data; recompute it
/// from the current field.
pub fn refresh_massless_hdots<R: Real>(state: &mut SimState<R>, cfg: &SimConfig<R>) -> Result<()> {
    let needs: Vec<usize> = state
        .vortices
        .iter()
        .enumerate()
        .filter(|(_, v)| first_order(cfg, v.mass))
        .map(|(k, _)| k)
        .collect();
    if needs.is_empty() {
        return Ok(());
    }
    let field = VelocityField::new(
        &state.cloud,
        &state.vortices,
        cfg.treecode_theta,
        cfg.blob_sigma,
    );
    let mut updates = Vec::with_capacity(needs.len());
    for &k in &needs {
        updates.push((k, field.eval_rhs_vortex(k)?));
    }
    for (k, hd) in updates {
        state.vortices[k].hdot = hd;
    }
    Ok(())
}

/// Build the initial state from `init` and `cfg`.
pub fn initial_state<R: Real>(init: &InitialData<R>, cfg: &SimConfig<R>) -> Result<SimState<R>> {
    cfg.validate()?;
    let cloud = discretize(init, cfg.particle_density, cfg.blob_sigma)?;
    let mut state = SimState {
        t: R::zero(),
        cloud,
        vortices: init.initial_vortices(),
    };
    state.validate()?;
    refresh_massless_hdots(&mut state, cfg)?;
    Ok(state)
}

/// Step repeatedly until `t >= horizon` (with a final partial step when the
/// horizon is not a multiple of `dt`), recording every `diag_stride` steps
/// and at the end. Deterministic given `(init, cfg)`.
pub fn run<R: Real>(
    init: &InitialData<R>,
    cfg: &SimConfig<R>,
    recorder: &mut dyn RunRecorder<R>,
) -> Result<SimState<R>> {
    let state = initial_state(init, cfg)?;
    run_from(state, cfg, recorder)
}

/// Same as [`run`] starting from an already-built state at its current time.
pub fn run_from<R: Real>(
    mut state: SimState<R>,
    cfg: &SimConfig<R>,
    recorder: &mut dyn RunRecorder<R>,
) -> Result<SimState<R>> {
    recorder.record(&state, None);
    let mut steps = 0usize;
    let tiny = cfg.dt * R::lit(1e-9);
    while state.t < cfg.horizon - tiny {
        let dt = cfg.dt.min(cfg.horizon - state.t);
        let outcome = step_dt(&state, cfg, dt)?;
        state = outcome.state.clone();
        steps += 1;
        let done = state.t >= cfg.horizon - tiny;
        if steps % cfg.diag_stride == 0 || done {
            recorder.record(&state, Some(&outcome));
        }
    }
    Ok(state)
}
