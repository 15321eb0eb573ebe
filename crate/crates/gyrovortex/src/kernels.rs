//! Pointwise kernels and stream functions: the singular Biot-Savart kernel,
//! its delta-regularization, the Gaussian blob kernel and the mollified-log
//! stream sums.

use crate::error::{Result, SimError};
use crate::real::Real;
use crate::state::{MassiveVortex, ParticleCloud};
use crate::vec2::Vec2;

/// Smooth cap of `ln` below `eps`: value `ln(eps) - 1/2 + r^2 / (2 eps^2)`
/// for `r < eps`, `ln r` above. C1 at the junction; the derivative is
/// bounded by `1/eps` everywhere.
#[derive(Clone, Copy, Debug)]
pub struct MollifiedLog<R = f64> {
    pub eps: R,
}

impl<R: Real> MollifiedLog<R> {
    pub fn new(eps: R) -> Self {
        debug_assert!(eps > R::zero());
        Self { eps }
    }

    pub fn value(&self, r: R) -> R {
        mollified_log(r, self.eps)
    }

    pub fn derivative(&self, r: R) -> R {
        mollified_log_deriv(r, self.eps)
    }
}

/// Biot-Savart kernel `K(x) = x_perp / (2 pi |x|^2)`.
pub fn biot_savart_k<R: Real>(x: Vec2<R>) -> Result<Vec2<R>> {
    let r2 = x.norm_sq();
    if r2 == R::zero() {
        return Err(SimError::SingularEvaluation);
    }
    Ok(x.perp() / (R::two_pi() * r2))
}

pub fn mollified_log<R: Real>(r: R, eps: R) -> R {
    if r >= eps {
        r.ln()
    } else {
        eps.ln() - R::lit(0.5) + r * r / (R::lit(2.0) * eps * eps)
    }
}

pub fn mollified_log_deriv<R: Real>(r: R, eps: R) -> R {
    if r >= eps {
        r.recip()
    } else {
        r / (eps * eps)
    }
}

/// `K_delta = (1/2pi) grad_perp ln_delta`: coincides with `K` outside
/// `B(0, delta)`, bounded by `1/(2 pi delta)`, vanishes at the origin.
pub fn regularized_k_delta<R: Real>(x: Vec2<R>, delta: R) -> Vec2<R> {
    let r = x.norm();
    if r == R::zero() {
        return Vec2::zero();
    }
    x.perp() * (mollified_log_deriv(r, delta) / (R::two_pi() * r))
}

/// Gaussian blob kernel `K(x) (1 - exp(-|x|^2 / sigma^2))`; smooth at the
/// origin, converges to `K` in the far field.
pub fn blob_kernel<R: Real>(x: Vec2<R>, sigma: R) -> Vec2<R> {
    let r2 = x.norm_sq();
    if r2 == R::zero() {
        return Vec2::zero();
    }
    let q = r2 / (sigma * sigma);
    // 1 - exp(-q) via expm1 keeps the removable singularity accurate.
    let factor = -(-q).exp_m1() / (R::two_pi() * r2);
    x.perp() * factor
}

/// Mollified stream function of the particle cloud,
/// `(1/2pi) sum_i gamma_i ln_eps |x - x_i|`.
pub fn stream_phi_eps<R: Real>(cloud: &ParticleCloud<R>, x: Vec2<R>, eps: R) -> R {
    let mut s = R::zero();
    for (p, w) in cloud.positions.iter().zip(&cloud.weights) {
        s += *w * mollified_log(x.dist(*p), eps);
    }
    s / R::two_pi()
}

/// Regularized vortex stream sum
/// `sum_{j != exclude} (gamma_j / 2pi) ln_delta |x - h_j|`.
pub fn stream_psi_delta<R: Real>(
    vortices: &[MassiveVortex<R>],
    x: Vec2<R>,
    delta: R,
    exclude: Option<usize>,
) -> R {
    let mut s = R::zero();
    for (j, v) in vortices.iter().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        s += v.gamma * mollified_log(x.dist(v.h), delta);
    }
    s / R::two_pi()
}
