//! Right-hand sides of the coupled system: particle advection by the total
//! field and the massive / massless vortex ODEs.

use crate::error::Result;
use crate::real::Real;
use crate::state::{Mode, SimConfig, SimState};
use crate::vec2::Vec2;
use crate::velocity::VelocityField;

/// Time derivative of a `SimState`.
#[derive(Clone, Debug)]
pub struct StateDerivative<R = f64> {
    pub particle_velocities: Vec<Vec2<R>>,
    pub vortex_hdots: Vec<Vec2<R>>,
    /// `None` for massless entries (their slot is unused).
    pub vortex_hddots: Vec<Option<Vec2<R>>>,
}

/// RHS of the full second-order system. Massless vortices fall back to the
/// vortex-wave equation, so mixed systems are allowed.
pub fn rhs_full<R: Real>(state: &SimState<R>, cfg: &SimConfig<R>) -> Result<StateDerivative<R>> {
    rhs(state, cfg, false)
}

/// RHS of the vortex-wave system: every vortex is treated as massless.
pub fn rhs_vortex_wave<R: Real>(
    state: &SimState<R>,
    cfg: &SimConfig<R>,
) -> Result<StateDerivative<R>> {
    rhs(state, cfg, true)
}

/// RHS dispatching on the configured mode.
pub fn rhs_for_mode<R: Real>(
    state: &SimState<R>,
    cfg: &SimConfig<R>,
) -> Result<StateDerivative<R>> {
    rhs(state, cfg, cfg.mode == Mode::VortexWave)
}

fn rhs<R: Real>(
    state: &SimState<R>,
    cfg: &SimConfig<R>,
    force_massless: bool,
) -> Result<StateDerivative<R>> {
    let field = VelocityField::new(
        &state.cloud,
        &state.vortices,
        cfg.treecode_theta,
        cfg.blob_sigma,
    );
    let particle_velocities = field.eval_v(&state.cloud.positions)?;

    let mut vortex_hdots = Vec::with_capacity(state.vortices.len());
    let mut vortex_hddots = Vec::with_capacity(state.vortices.len());
    for (k, v) in state.vortices.iter().enumerate() {
        let drive = field.eval_rhs_vortex(k)?;
        if force_massless || v.is_massless() {
            vortex_hdots.push(drive);
            vortex_hddots.push(None);
        } else {
            vortex_hdots.push(v.hdot);
            let slip = v.hdot - drive;
            vortex_hddots.push(Some(slip.perp() * (v.gamma / v.mass)));
        }
    }

    Ok(StateDerivative {
        particle_velocities,
        vortex_hdots,
        vortex_hddots,
    })
}
