//! Iterative frozen-field scheme: each iterate advects the particles in the
//! previous iterate's field (interpolated linearly in time between stored
//! slices) and solves the vortex ODEs with the frozen smooth part but the
//! current iterate's point-vortex interactions.

use crate::diagnostics::vortex_hamiltonian;
use crate::error::{Result, SimError};
use crate::kernels::biot_savart_k;
use crate::real::Real;
use crate::state::{discretize, InitialData, MassiveVortex, ParticleCloud, SimConfig, SimState};
use crate::vec2::Vec2;
use crate::velocity::VelocityField;

/// One iterate: particle positions and vortex states stored on a uniform
/// time grid (stride `diag_stride * dt`, last slice at the horizon).
#[derive(Clone, Debug)]
pub struct PicardIterate<R = f64> {
    pub times: Vec<R>,
    /// `[slice][particle]`.
    pub particle_slices: Vec<Vec<Vec2<R>>>,
    /// `[slice][vortex]`. For massless vortices the `hdot` entry is the
    /// carried initial value, not a field sample.
    pub vortex_slices: Vec<Vec<MassiveVortex<R>>>,
    /// Circulations, constant in time.
    pub weights: Vec<R>,
    pub blob_radius: R,
    pub cell_area: R,
    pub initial_positions: Vec<Vec2<R>>,
    /// Iteration index; 0 is the constant-in-time base iterate.
    pub n: usize,
}

fn time_grid<R: Real>(cfg: &SimConfig<R>) -> Vec<R> {
    let stride = cfg.dt * R::from_usize(cfg.diag_stride).unwrap();
    let mut times = vec![R::zero()];
    let tiny = cfg.dt * R::lit(1e-9);
    let mut t = R::zero();
    while t < cfg.horizon - tiny {
        t = (t + stride).min(cfg.horizon);
        times.push(t);
    }
    times
}

impl<R: Real> PicardIterate<R> {
    /// Base iterate: the initial data held constant in time.
    pub fn base(init: &InitialData<R>, cfg: &SimConfig<R>) -> Result<Self> {
        cfg.validate()?;
        let cloud = discretize(init, cfg.particle_density, cfg.blob_sigma)?;
        let vortices = init.initial_vortices();
        let state = SimState {
            t: R::zero(),
            cloud: cloud.clone(),
            vortices: vortices.clone(),
        };
        state.validate()?;
        let times = time_grid(cfg);
        let slices = times.len();
        Ok(Self {
            times,
            particle_slices: vec![cloud.positions.clone(); slices],
            vortex_slices: vec![vortices; slices],
            weights: cloud.weights,
            blob_radius: cloud.blob_radius,
            cell_area: cloud.cell_area,
            initial_positions: cloud.initial_positions,
            n: 0,
        })
    }

    pub fn slice_count(&self) -> usize {
        self.times.len()
    }

    /// Particle positions and vortex states interpolated linearly at `t`
    /// (clamped to the grid range).
    pub fn interpolate(&self, t: R) -> (Vec<Vec2<R>>, Vec<MassiveVortex<R>>) {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return (
                self.particle_slices[0].clone(),
                self.vortex_slices[0].clone(),
            );
        }
        if t >= self.times[last] {
            return (
                self.particle_slices[last].clone(),
                self.vortex_slices[last].clone(),
            );
        }
        let s = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => return (self.particle_slices[i].clone(), self.vortex_slices[i].clone()),
            Err(i) => i - 1,
        };
        let w = (t - self.times[s]) / (self.times[s + 1] - self.times[s]);
        let one = R::one();
        let px = self.particle_slices[s]
            .iter()
            .zip(&self.particle_slices[s + 1])
            .map(|(a, b)| *a * (one - w) + *b * w)
            .collect();
        let vort = self.vortex_slices[s]
            .iter()
            .zip(&self.vortex_slices[s + 1])
            .map(|(a, b)| MassiveVortex {
                h: a.h * (one - w) + b.h * w,
                hdot: a.hdot * (one - w) + b.hdot * w,
                mass: a.mass,
                gamma: a.gamma,
            })
            .collect();
        (px, vort)
    }

    /// Snapshot at a stored slice.
    pub fn state_at_slice(&self, s: usize) -> SimState<R> {
        SimState {
            t: self.times[s],
            cloud: ParticleCloud {
                positions: self.particle_slices[s].clone(),
                weights: self.weights.clone(),
                blob_radius: self.blob_radius,
                initial_positions: self.initial_positions.clone(),
                cell_area: self.cell_area,
            },
            vortices: self.vortex_slices[s].clone(),
        }
    }

    fn slice_index(&self, t: R) -> Result<usize> {
        let tol = R::lit(1e-9) * (R::one() + t.abs());
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .ok_or(SimError::GridMismatch)
    }
}

/// The frozen smooth field of `prev` at time `t`, evaluated at `targets`.
fn frozen_u<R: Real>(
    prev: &PicardIterate<R>,
    cfg: &SimConfig<R>,
    scratch: &mut ParticleCloud<R>,
    t: R,
    targets: &[Vec2<R>],
) -> Vec<Vec2<R>> {
    let (px, _) = prev.interpolate(t);
    scratch.positions = px;
    let field = VelocityField::new(scratch, &[], cfg.treecode_theta, cfg.blob_sigma);
    field.eval_u(targets)
}

struct SchemeDeriv<R> {
    px: Vec<Vec2<R>>,
    h: Vec<Vec2<R>>,
    hd: Vec<Vec2<R>>,
}

/// RHS of iterate `n` at time `t`: particles see the frozen field of
/// `prev` entirely; vortices see the frozen smooth part plus the current
/// iterate's mutual interactions.
fn scheme_rhs<R: Real>(
    prev: &PicardIterate<R>,
    cfg: &SimConfig<R>,
    scratch: &mut ParticleCloud<R>,
    t: R,
    px: &[Vec2<R>],
    vort: &[MassiveVortex<R>],
) -> Result<SchemeDeriv<R>> {
    let (prev_px, prev_vort) = prev.interpolate(t);
    scratch.positions = prev_px;
    let field = VelocityField::new(scratch, &prev_vort, cfg.treecode_theta, cfg.blob_sigma);
    let dpx = field.eval_v(px)?;

    let smooth_only = VelocityField::new(scratch, &[], cfg.treecode_theta, cfg.blob_sigma);
    let h_targets: Vec<Vec2<R>> = vort.iter().map(|v| v.h).collect();
    let u_at_h = smooth_only.eval_u(&h_targets);

    let mut h = Vec::with_capacity(vort.len());
    let mut hd = Vec::with_capacity(vort.len());
    for (k, v) in vort.iter().enumerate() {
        let mut drive = u_at_h[k];
        for (j, w) in vort.iter().enumerate() {
            if j == k {
                continue;
            }
            let d = v.h - w.h;
            if d.norm_sq() == R::zero() {
                return Err(SimError::PicardCollision {
                    iterate: prev.n + 1,
                    t: t.to_f64().unwrap_or(f64::NAN),
                });
            }
            drive += biot_savart_k(d)? * w.gamma;
        }
        if v.is_massless() {
            h.push(drive);
            hd.push(Vec2::zero());
        } else {
            h.push(v.hdot);
            hd.push((v.hdot - drive).perp() * (v.gamma / v.mass));
        }
    }
    Ok(SchemeDeriv { px: dpx, h, hd })
}

/// Produce iterate `prev.n + 1` from `prev`, restarting from the shared
/// initial data.
pub fn picard_step<R: Real>(
    prev: &PicardIterate<R>,
    init: &InitialData<R>,
    cfg: &SimConfig<R>,
) -> Result<PicardIterate<R>> {
    let n = prev.n + 1;
    // The previous iterate's paths must be collision-free.
    for (s, slice) in prev.vortex_slices.iter().enumerate() {
        if min_pair_dist(slice) < cfg.collision_stop_rho {
            return Err(SimError::PicardCollision {
                iterate: prev.n,
                t: prev.times[s].to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let mut scratch = ParticleCloud {
        positions: prev.initial_positions.clone(),
        weights: prev.weights.clone(),
        blob_radius: prev.blob_radius,
        initial_positions: prev.initial_positions.clone(),
        cell_area: prev.cell_area,
    };

    let mut px = prev.particle_slices[0].clone();
    let mut vort = init.initial_vortices();
    if vort.len() != prev.vortex_slices[0].len() {
        return Err(SimError::MismatchedVortexCounts {
            left: vort.len(),
            right: prev.vortex_slices[0].len(),
        });
    }

    let mut particle_slices = vec![px.clone()];
    let mut vortex_slices = vec![vort.clone()];

    for s in 0..prev.times.len() - 1 {
        let t0 = prev.times[s];
        let t1 = prev.times[s + 1];
        let span = t1 - t0;
        let steps = (span / cfg.dt)
            .round()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h_step = span / R::from_usize(steps).unwrap();
        for i in 0..steps {
            let t = t0 + h_step * R::from_usize(i).unwrap();
            rk4_scheme(prev, cfg, &mut scratch, t, h_step, &mut px, &mut vort)?;
        }
        if min_pair_dist(&vort) < cfg.collision_stop_rho {
            return Err(SimError::PicardCollision {
                iterate: n,
                t: t1.to_f64().unwrap_or(f64::NAN),
            });
        }
        particle_slices.push(px.clone());
        vortex_slices.push(vort.clone());
    }

    Ok(PicardIterate {
        times: prev.times.clone(),
        particle_slices,
        vortex_slices,
        weights: prev.weights.clone(),
        blob_radius: prev.blob_radius,
        cell_area: prev.cell_area,
        initial_positions: prev.initial_positions.clone(),
        n,
    })
}

fn min_pair_dist<R: Real>(vort: &[MassiveVortex<R>]) -> R {
    let mut best = R::infinity();
    for i in 0..vort.len() {
        for j in (i + 1)..vort.len() {
            best = best.min(vort[i].h.dist(vort[j].h));
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn rk4_scheme<R: Real>(
    prev: &PicardIterate<R>,
    cfg: &SimConfig<R>,
    scratch: &mut ParticleCloud<R>,
    t: R,
    h_step: R,
    px: &mut Vec<Vec2<R>>,
    vort: &mut Vec<MassiveVortex<R>>,
) -> Result<()> {
    let half = h_step * R::lit(0.5);
    let advance = |px0: &[Vec2<R>],
                   v0: &[MassiveVortex<R>],
                   d: &SchemeDeriv<R>,
                   a: R|
     -> (Vec<Vec2<R>>, Vec<MassiveVortex<R>>) {
        let px1 = px0
            .iter()
            .zip(&d.px)
            .map(|(x, dx)| *x + *dx * a)
            .collect();
        let v1 = v0
            .iter()
            .enumerate()
            .map(|(k, v)| MassiveVortex {
                h: v.h + d.h[k] * a,
                hdot: v.hdot + d.hd[k] * a,
                mass: v.mass,
                gamma: v.gamma,
            })
            .collect();
        (px1, v1)
    };

    let k1 = scheme_rhs(prev, cfg, scratch, t, px, vort)?;
    let (px2, v2) = advance(px, vort, &k1, half);
    let k2 = scheme_rhs(prev, cfg, scratch, t + half, &px2, &v2)?;
    let (px3, v3) = advance(px, vort, &k2, half);
    let k3 = scheme_rhs(prev, cfg, scratch, t + half, &px3, &v3)?;
    let (px4, v4) = advance(px, vort, &k3, h_step);
    let k4 = scheme_rhs(prev, cfg, scratch, t + h_step, &px4, &v4)?;

    let sixth = h_step / R::lit(6.0);
    let two = R::lit(2.0);
    for (i, x) in px.iter_mut().enumerate() {
        *x += (k1.px[i] + k2.px[i] * two + k3.px[i] * two + k4.px[i]) * sixth;
    }
    for (k, v) in vort.iter_mut().enumerate() {
        v.h += (k1.h[k] + k2.h[k] * two + k3.h[k] * two + k4.h[k]) * sixth;
        v.hdot += (k1.hd[k] + k2.hd[k] * two + k3.hd[k] * two + k4.hd[k]) * sixth;
    }
    Ok(())
}

/// Max over the shared time grid of
/// `max_k |dh| + max_k |dhdot| + max_i |dx|`.
pub fn picard_distance<R: Real>(a: &PicardIterate<R>, b: &PicardIterate<R>) -> Result<R> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(x, y)| (*x - *y).abs() > R::lit(1e-12))
        || a.particle_slices[0].len() != b.particle_slices[0].len()
    {
        return Err(SimError::GridMismatch);
    }
    if a.vortex_slices[0].len() != b.vortex_slices[0].len() {
        return Err(SimError::MismatchedVortexCounts {
            left: a.vortex_slices[0].len(),
            right: b.vortex_slices[0].len(),
        });
    }
    let mut best = R::zero();
    for s in 0..a.times.len() {
        let mut dh = R::zero();
        let mut dhd = R::zero();
        for (va, vb) in a.vortex_slices[s].iter().zip(&b.vortex_slices[s]) {
            dh = dh.max(va.h.dist(vb.h));
            dhd = dhd.max((va.hdot - vb.hdot).norm());
        }
        let mut dx = R::zero();
        for (pa, pb) in a.particle_slices[s].iter().zip(&b.particle_slices[s]) {
            dx = dx.max(pa.dist(*pb));
        }
        best = best.max(dh + dhd + dx);
    }
    Ok(best)
}

/// Interaction-minus-kinetic energy of the iterate's vortex subsystem at a
/// grid time.
pub fn picard_hn<R: Real>(iter: &PicardIterate<R>, t: R) -> Result<R> {
    let s = iter.slice_index(t)?;
    let vort = &iter.vortex_slices[s];
    for i in 0..vort.len() {
        for j in (i + 1)..vort.len() {
            if vort[i].h == vort[j].h {
                return Err(SimError::VortexCollision {
                    t: t.to_f64().unwrap_or(f64::NAN),
                    i,
                    j,
                    dist: 0.0,
                });
            }
        }
    }
    Ok(vortex_hamiltonian(vort))
}

/// Exact rate of change of [`picard_hn`] along iterate `iter`, driven by the
/// frozen smooth field of `prev`: `2 sum_k gamma_k <hdot_k, u_prev(t,h_k)^perp>`.
/// The singular pair terms cancel identically and do not appear.
pub fn picard_hn_rate<R: Real>(
    iter: &PicardIterate<R>,
    prev: &PicardIterate<R>,
    cfg: &SimConfig<R>,
    t: R,
) -> Result<R> {
    let s = iter.slice_index(t)?;
    let vort = &iter.vortex_slices[s];
    let mut scratch = ParticleCloud {
        positions: prev.initial_positions.clone(),
        weights: prev.weights.clone(),
        blob_radius: prev.blob_radius,
        initial_positions: prev.initial_positions.clone(),
        cell_area: prev.cell_area,
    };
    let targets: Vec<Vec2<R>> = vort.iter().map(|v| v.h).collect();
    let u = frozen_u(prev, cfg, &mut scratch, t, &targets);
    let mut rate = R::zero();
    for (k, v) in vort.iter().enumerate() {
        rate += v.gamma * v.hdot.dot(u[k].perp());
    }
    Ok(rate * R::lit(2.0))
}

/// Run the scheme: base iterate plus up to `picard_iters` refinements,
/// stopping early once successive iterates are closer than `picard_tol`.
/// Returns every iterate produced (index = iterate number).
pub fn picard_run<R: Real>(
    init: &InitialData<R>,
    cfg: &SimConfig<R>,
) -> Result<Vec<PicardIterate<R>>> {
    let mut iterates = vec![PicardIterate::base(init, cfg)?];
    for _ in 0..cfg.picard_iters {
        let next = picard_step(iterates.last().unwrap(), init, cfg)?;
        iterates.push(next);
        let n = iterates.len();
        if n >= 3 {
            let d = picard_distance(&iterates[n - 1], &iterates[n - 2])?;
            if d < cfg.picard_tol {
                break;
            }
        }
    }
    Ok(iterates)
}
