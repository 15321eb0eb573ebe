//! Conserved quantities, norms and trajectory monitors computed on
//! immutable snapshots: interaction energy, second moment, per-vortex local
//! energy, Lp norms, measure-preservation and constancy checks, solution
//! distance, support and confinement reports.

use crate::error::{Result, SimError};
use crate::integrator::{RunRecorder, StepOutcome};
use crate::kernels::{mollified_log, mollified_log_deriv, stream_phi_eps};
use crate::real::Real;
use crate::state::{InitialData, MassiveVortex, ParticleCloud, SimState};
use crate::vec2::Vec2;
use crate::velocity::VelocityField;

/// One row of run diagnostics.
#[derive(Clone, Debug)]
pub struct DiagnosticsRecord<R = f64> {
    pub t: R,
    pub h0: R,
    pub i0: R,
    pub hn: R,
    pub min_vortex_dist: R,
    pub min_particle_vortex_dist: R,
    pub support_radius: R,
    pub l1: R,
    pub l2: R,
    pub linf: R,
    pub d_t: Option<R>,
    /// Mean local energy over the tracer set, one entry per vortex.
    pub fk_mean: Vec<R>,
}

/// Interaction-minus-kinetic energy of the vortex subsystem:
/// `sum_{j != k} (gamma_j gamma_k / 2pi) ln|h_j - h_k| - sum_k m_k |hdot_k|^2`
/// (ordered pairs, both orders counted).
pub fn vortex_hamiltonian<R: Real>(vortices: &[MassiveVortex<R>]) -> R {
    let mut s = R::zero();
    for i in 0..vortices.len() {
        for j in (i + 1)..vortices.len() {
            let d = vortices[i].h.dist(vortices[j].h);
            s += R::lit(2.0) * vortices[i].gamma * vortices[j].gamma * d.ln();
        }
    }
    s = s / R::two_pi();
    for v in vortices {
        s -= v.mass * v.hdot.norm_sq();
    }
    s
}

/// Total interaction energy of the snapshot. Particle pair and
/// particle-vortex terms closer than `eps` use the mollified log; the
/// diagonal particle self-pairs are excluded.
pub fn energy_h0<R: Real>(state: &SimState<R>, eps: R) -> Result<R> {
    for i in 0..state.vortices.len() {
        for j in (i + 1)..state.vortices.len() {
            if state.vortices[i].h == state.vortices[j].h {
                return Err(SimError::VortexCollision {
                    t: state.t.to_f64().unwrap_or(f64::NAN),
                    i,
                    j,
                    dist: 0.0,
                });
            }
        }
    }
    let px = &state.cloud.positions;
    let w = &state.cloud.weights;
    let mut pair = R::zero();
    for i in 0..px.len() {
        if w[i] == R::zero() {
            continue;
        }
        let mut row = R::zero();
        for j in (i + 1)..px.len() {
            if w[j] == R::zero() {
                continue;
            }
            row += w[j] * mollified_log(px[i].dist(px[j]), eps);
        }
        pair += w[i] * row;
    }
    // both orders of the double integral
    pair = pair * R::lit(2.0) / R::two_pi();

    let mut cross = R::zero();
    for v in &state.vortices {
        let mut s = R::zero();
        for (p, wi) in px.iter().zip(w) {
            s += *wi * mollified_log(p.dist(v.h), eps);
        }
        cross += v.gamma * s;
    }
    cross = cross / R::PI();

    Ok(pair + cross + vortex_hamiltonian(&state.vortices))
}

/// Second moment `sum_i G_i |x_i|^2 + sum_k gamma_k |h_k|^2
/// - 2 sum_k m_k <h_k^perp, hdot_k>`.
pub fn momentum_i0<R: Real>(state: &SimState<R>) -> R {
    let mut s = R::zero();
    for (p, w) in state.cloud.positions.iter().zip(&state.cloud.weights) {
        s += *w * p.norm_sq();
    }
    for v in &state.vortices {
        s += v.gamma * v.h.norm_sq();
        s -= R::lit(2.0) * v.mass * v.h.perp().dot(v.hdot);
    }
    s
}

/// Local energy seen from vortex `k` at the point `tracer`:
/// `sum_j (gamma_j / 2pi) ln|tracer - h_j| + phi_eps(tracer)
/// + <tracer, hdot_k^perp>`.
pub fn local_energy_fk<R: Real>(
    state: &SimState<R>,
    tracer: Vec2<R>,
    k: usize,
    eps: R,
) -> Result<R> {
    let mut s = R::zero();
    for (j, v) in state.vortices.iter().enumerate() {
        let d = tracer.dist(v.h);
        if d == R::zero() {
            return Err(SimError::EvaluationAtVortex { index: j });
        }
        s += v.gamma * d.ln();
    }
    s = s / R::two_pi();
    s += stream_phi_eps(&state.cloud, tracer, eps);
    s += tracer.dot(state.vortices[k].hdot.perp());
    Ok(s)
}

/// Weight-based Lp norms from the initial weight / cell-area assignment;
/// exactly constant in time by construction. `p = infinity` selects the max
/// norm.
pub fn lp_norms<R: Real>(cloud: &ParticleCloud<R>, ps: &[R]) -> Vec<(R, R)> {
    let area = cloud.cell_area;
    ps.iter()
        .map(|&p| {
            let v = if p.is_infinite() {
                cloud
                    .weights
                    .iter()
                    .map(|w| w.abs() / area)
                    .fold(R::zero(), R::max)
            } else {
                let s: R = cloud
                    .weights
                    .iter()
                    .map(|w| (w.abs() / area).powf(p) * area)
                    .sum();
                s.powf(p.recip())
            };
            (p, v)
        })
        .collect()
}

/// Independent histogram estimate of the Lp norms: deposit circulations on
/// a uniform grid over the current bounding box (cell side
/// `4 sqrt(cell_area)`) and compute the grid-function norms. Used to
/// measure drift; the weight-based norms are constant by construction.
pub fn lp_norms_histogram<R: Real>(cloud: &ParticleCloud<R>, ps: &[R]) -> Vec<(R, R)> {
    if cloud.is_empty() {
        return ps.iter().map(|&p| (p, R::zero())).collect();
    }
    let s = R::lit(4.0) * cloud.cell_area.sqrt();
    let (lo, hi) = bbox(&cloud.positions);
    let nx = ((hi.x - lo.x) / s).ceil().to_usize().unwrap_or(0) + 1;
    let ny = ((hi.y - lo.y) / s).ceil().to_usize().unwrap_or(0) + 1;
    let mut bins = vec![R::zero(); nx * ny];
    for (p, w) in cloud.positions.iter().zip(&cloud.weights) {
        let i = ((p.x - lo.x) / s).floor().to_usize().unwrap_or(0).min(nx - 1);
        let j = ((p.y - lo.y) / s).floor().to_usize().unwrap_or(0).min(ny - 1);
        bins[j * nx + i] += *w;
    }
    let cell = s * s;
    ps.iter()
        .map(|&p| {
            let v = if p.is_infinite() {
                bins.iter().map(|b| b.abs() / cell).fold(R::zero(), R::max)
            } else {
                let acc: R = bins
                    .iter()
                    .map(|b| (b.abs() / cell).powf(p) * cell)
                    .sum();
                acc.powf(p.recip())
            };
            (p, v)
        })
        .collect()
}

fn bbox<R: Real>(points: &[Vec2<R>]) -> (Vec2<R>, Vec2<R>) {
    let mut lo = Vec2::new(R::infinity(), R::infinity());
    let mut hi = Vec2::new(R::neg_infinity(), R::neg_infinity());
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Bin the particle set on a `grid_size x grid_size` lattice over the
/// bounding box of the initial positions; the defect is the worst relative
/// change of per-cell counts between t = 0 and now.
pub fn measure_preservation_defect<R: Real>(cloud: &ParticleCloud<R>, grid_size: usize) -> R {
    if cloud.is_empty() || grid_size == 0 {
        return R::zero();
    }
    let (lo, hi) = bbox(&cloud.initial_positions);
    let pad = R::lit(1e-12) + (hi.x - lo.x).max(hi.y - lo.y) * R::lit(1e-12);
    let span_x = (hi.x - lo.x + pad).max(R::min_positive_value());
    let span_y = (hi.y - lo.y + pad).max(R::min_positive_value());
    let n = grid_size;
    let index = |p: &Vec2<R>| -> Option<usize> {
        let fx = (p.x - lo.x) / span_x;
        let fy = (p.y - lo.y) / span_y;
        if fx < R::zero() || fx >= R::one() || fy < R::zero() || fy >= R::one() {
            return None;
        }
        let i = (fx * R::from_usize(n).unwrap()).floor().to_usize()?.min(n - 1);
        let j = (fy * R::from_usize(n).unwrap()).floor().to_usize()?.min(n - 1);
        Some(j * n + i)
    };
    let mut count0 = vec![0usize; n * n];
    let mut count1 = vec![0usize; n * n];
    for p in &cloud.initial_positions {
        if let Some(c) = index(p) {
            count0[c] += 1;
        }
    }
    for p in &cloud.positions {
        if let Some(c) = index(p) {
            count1[c] += 1;
        }
    }
    let mut defect = R::zero();
    for (c0, c1) in count0.iter().zip(&count1) {
        if *c0 == 0 {
            continue;
        }
        let r = R::from_usize(*c1).unwrap() / R::from_usize(*c0).unwrap();
        defect = defect.max((r - R::one()).abs());
    }
    defect
}

/// Result of [`constancy_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConstancyReport<R = f64> {
    /// `None` when no particle currently lies in the probed ball.
    pub max_abs_deviation: Option<R>,
    pub samples: usize,
    /// Particles now inside the probed ball whose initial position was
    /// outside the patch around the vortex.
    pub violations: usize,
}

/// Compare the vorticity carried by particles currently within
/// `B(h_k(t), radius)` against the level of the initial patch centered at
/// the vortex's initial position.
pub fn constancy_check<R: Real>(
    state: &SimState<R>,
    init: &InitialData<R>,
    k: usize,
    radius: R,
) -> Result<ConstancyReport<R>> {
    let h0 = init
        .vortices
        .get(k)
        .ok_or_else(|| SimError::InvalidConfig(format!("no vortex {k}")))?
        .h0;
    let patch = init
        .patches
        .iter()
        .find(|p| p.center.dist(h0) <= p.radius * R::lit(1e-9) + R::lit(1e-12))
        .ok_or_else(|| {
            SimError::InvalidConfig(format!("no patch centered at vortex {k}"))
        })?;
    let alpha = patch.level;
    let delta0 = patch.radius;
    let hk = state.vortices[k].h;

    let mut max_dev: Option<R> = None;
    let mut samples = 0usize;
    let mut violations = 0usize;
    for (p, p0) in state
        .cloud
        .positions
        .iter()
        .zip(&state.cloud.initial_positions)
    {
        if p.dist(hk) > radius {
            continue;
        }
        samples += 1;
        let carried = init.omega0_at(*p0);
        let dev = (carried - alpha).abs();
        max_dev = Some(match max_dev {
            Some(m) => m.max(dev),
            None => dev,
        });
        if p0.dist(h0) > delta0 {
            violations += 1;
        }
    }
    Ok(ConstancyReport {
        max_abs_deviation: max_dev,
        samples,
        violations,
    })
}

/// Squared distance between two snapshots: grid L2 of the smooth-field
/// difference over the union bounding box inflated by 20%, plus the exact
/// vortex position and velocity terms.
pub fn solution_distance_d<R: Real>(
    a: &SimState<R>,
    b: &SimState<R>,
    grid_n: usize,
    theta: R,
) -> Result<R> {
    if a.vortices.len() != b.vortices.len() {
        return Err(SimError::MismatchedVortexCounts {
            left: a.vortices.len(),
            right: b.vortices.len(),
        });
    }
    let mut total = R::zero();
    for (va, vb) in a.vortices.iter().zip(&b.vortices) {
        total += va.h.dist(vb.h).powi(2);
        total += (va.hdot - vb.hdot).norm_sq();
    }

    if !a.cloud.is_empty() || !b.cloud.is_empty() {
        let mut pts: Vec<Vec2<R>> = Vec::new();
        pts.extend_from_slice(&a.cloud.positions);
        pts.extend_from_slice(&b.cloud.positions);
        let (lo, hi) = bbox(&pts);
        let span = hi - lo;
        let pad = Vec2::new(span.x, span.y) * R::lit(0.1);
        let lo = lo - pad;
        let hi = hi + pad;
        let n = grid_n.max(2);
        let dx = (hi.x - lo.x) / R::from_usize(n).unwrap();
        let dy = (hi.y - lo.y) / R::from_usize(n).unwrap();
        let mut targets = Vec::with_capacity(n * n);
        let half = R::lit(0.5);
        for j in 0..n {
            for i in 0..n {
                targets.push(Vec2::new(
                    lo.x + dx * (R::from_usize(i).unwrap() + half),
                    lo.y + dy * (R::from_usize(j).unwrap() + half),
                ));
            }
        }
        let fa = VelocityField::new(&a.cloud, &[], theta, a.cloud.blob_radius);
        let fb = VelocityField::new(&b.cloud, &[], theta, b.cloud.blob_radius);
        let ua = fa.eval_u(&targets);
        let ub = fb.eval_u(&targets);
        let cell = dx * dy;
        let mut l2 = R::zero();
        for (x, y) in ua.iter().zip(&ub) {
            l2 += (*x - *y).norm_sq() * cell;
        }
        total += l2;
    }
    Ok(total)
}

/// Largest particle radius among particles carrying circulation.
pub fn support_radius<R: Real>(cloud: &ParticleCloud<R>) -> R {
    cloud
        .positions
        .iter()
        .zip(&cloud.weights)
        .filter(|(_, w)| **w != R::zero())
        .map(|(p, _)| p.norm())
        .fold(R::zero(), R::max)
}

/// Series-wide extrema of the vortex subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfinementReport<R = f64> {
    pub max_h: R,
    pub max_hdot: R,
    pub min_pair_dist: R,
}

pub fn confinement_report<R: Real>(states: &[SimState<R>]) -> ConfinementReport<R> {
    let mut r = ConfinementReport {
        max_h: R::zero(),
        max_hdot: R::zero(),
        min_pair_dist: R::infinity(),
    };
    for s in states {
        for v in &s.vortices {
            r.max_h = r.max_h.max(v.h.norm());
            r.max_hdot = r.max_hdot.max(v.hdot.norm());
        }
        if let Some(d) = s.min_vortex_distance() {
            r.min_pair_dist = r.min_pair_dist.min(d);
        }
    }
    r
}

/// Time derivative of the mollified particle stream function at `x`, as a
/// particle sum over the instantaneous particle velocities:
/// `(1/2pi) sum_i G_i ln_eps'(r_i) <(x_i - x)/r_i, v_i>`.
pub fn dphi_dt_eps<R: Real>(
    cloud: &ParticleCloud<R>,
    velocities: &[Vec2<R>],
    x: Vec2<R>,
    eps: R,
) -> R {
    let mut s = R::zero();
    for ((p, w), v) in cloud
        .positions
        .iter()
        .zip(&cloud.weights)
        .zip(velocities)
    {
        let d = *p - x;
        let r = d.norm();
        if r == R::zero() {
            continue; // ln_eps'(0) = 0
        }
        s += *w * mollified_log_deriv(r, eps) * d.dot(*v) / r;
    }
    s / R::two_pi()
}

/// Recorder that turns snapshots into [`DiagnosticsRecord`] rows.
pub struct DiagnosticsCollector<R = f64> {
    pub eps: R,
    /// Indices of the particles used as local-energy tracers.
    pub tracer_cap: usize,
    pub records: Vec<DiagnosticsRecord<R>>,
}

impl<R: Real> DiagnosticsCollector<R> {
    pub fn new(eps: R) -> Self {
        Self {
            eps,
            tracer_cap: 200,
            records: Vec::new(),
        }
    }

    pub fn push_record(&mut self, state: &SimState<R>) -> Result<()> {
        let lp = lp_norms(&state.cloud, &[R::one(), R::lit(2.0), R::infinity()]);
        let n_tracers = state.cloud.len().min(self.tracer_cap);
        let mut fk_mean = Vec::with_capacity(state.vortices.len());
        for k in 0..state.vortices.len() {
            let mut acc = R::zero();
            let mut cnt = 0usize;
            for i in 0..n_tracers {
                let x = state.cloud.positions[i];
                if let Ok(f) = local_energy_fk(state, x, k, self.eps) {
                    acc += f;
                    cnt += 1;
                }
            }
            fk_mean.push(if cnt > 0 {
                acc / R::from_usize(cnt).unwrap()
            } else {
                R::zero()
            });
        }
        self.records.push(DiagnosticsRecord {
            t: state.t,
            h0: energy_h0(state, self.eps)?,
            i0: momentum_i0(state),
            hn: vortex_hamiltonian(&state.vortices),
            min_vortex_dist: state.min_vortex_distance().unwrap_or(R::infinity()),
            min_particle_vortex_dist: state
                .min_particle_vortex_distance()
                .unwrap_or(R::infinity()),
            support_radius: support_radius(&state.cloud),
            l1: lp[0].1,
            l2: lp[1].1,
            linf: lp[2].1,
            d_t: None,
            fk_mean,
        });
        Ok(())
    }
}

impl<R: Real> RunRecorder<R> for DiagnosticsCollector<R> {
    fn record(&mut self, state: &SimState<R>, _outcome: Option<&StepOutcome<R>>) {
        // Collision/error states terminate the run before reaching here,
        // so a failed record is a bug worth surfacing loudly.
        self.push_record(state).expect("diagnostics on live state");
    }
}
