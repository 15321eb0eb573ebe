//! Domain types for system state, initial data and configuration.

use crate::error::{Result, SimError};
use crate::real::Real;
use crate::vec2::Vec2;

/// Background vorticity discretized as weighted blobs.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleCloud<R = f64> {
    /// Particle centers `x_i`.
    pub positions: Vec<Vec2<R>>,
    /// Circulations `gamma_i = omega0(x_i) * cell_area` (signed).
    pub weights: Vec<R>,
    /// Blob regularization length, > 0.
    pub blob_radius: R,
    /// Frozen copy of the positions at t = 0, for flow-map diagnostics.
    pub initial_positions: Vec<Vec2<R>>,
    /// Area represented by one particle at t = 0.
    pub cell_area: R,
}

impl<R: Real> ParticleCloud<R> {
    pub fn empty(blob_radius: R) -> Self {
        Self {
            positions: Vec::new(),
            weights: Vec::new(),
            blob_radius,
            initial_positions: Vec::new(),
            cell_area: R::one(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_circulation(&self) -> R {
        self.weights.iter().copied().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.weights.len()
            || self.positions.len() != self.initial_positions.len()
        {
            return Err(SimError::InvalidConfig(
                "cloud component lengths differ".into(),
            ));
        }
        if self.blob_radius <= R::zero() {
            return Err(SimError::InvalidConfig("blob radius must be > 0".into()));
        }
        for p in &self.positions {
            if !p.is_finite() {
                return Err(SimError::NonFinite {
                    what: "particle position",
                    t: f64::NAN,
                });
            }
        }
        Ok(())
    }
}

/// One point vortex with inertia. `mass = 0` selects the vortex-wave
/// (first order) equation for this point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassiveVortex<R = f64> {
    pub h: Vec2<R>,
    pub hdot: Vec2<R>,
    pub mass: R,
    pub gamma: R,
}

impl<R: Real> MassiveVortex<R> {
    pub fn is_massless(&self) -> bool {
        self.mass == R::zero()
    }
}

/// Simulation mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Second-order vortex ODEs (massless entries fall back to vortex-wave).
    Full,
    /// First-order vortex ODEs for every point, masses ignored.
    VortexWave,
    /// Iterative frozen-field scheme.
    Picard,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "vortex_wave" => Ok(Mode::VortexWave),
            "picard" => Ok(Mode::Picard),
            other => Err(SimError::InvalidConfig(format!("unknown mode '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::VortexWave => "vortex_wave",
            Mode::Picard => "picard",
        }
    }
}

/// Value-type snapshot of the whole system.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState<R = f64> {
    pub t: R,
    pub cloud: ParticleCloud<R>,
    pub vortices: Vec<MassiveVortex<R>>,
}

impl<R: Real> SimState<R> {
    pub fn min_vortex_distance(&self) -> Option<R> {
        let n = self.vortices.len();
        let mut best: Option<R> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.vortices[i].h.dist(self.vortices[j].h);
                best = Some(match best {
                    Some(b) if b < d => b,
                    _ => d,
                });
            }
        }
        best
    }

    pub fn min_particle_vortex_distance(&self) -> Option<R> {
        let mut best: Option<R> = None;
        for v in &self.vortices {
            for p in &self.cloud.positions {
                let d = p.dist(v.h);
                best = Some(match best {
                    Some(b) if b < d => b,
                    _ => d,
                });
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        self.cloud.validate()?;
        for (k, v) in self.vortices.iter().enumerate() {
            if v.mass < R::zero() {
                return Err(SimError::InvalidConfig(format!("vortex {k}: mass < 0")));
            }
            if v.gamma == R::zero() {
                return Err(SimError::InvalidConfig(format!("vortex {k}: gamma = 0")));
            }
            if !v.h.is_finite() || !v.hdot.is_finite() {
                return Err(SimError::NonFinite {
                    what: "vortex state",
                    t: self.t.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        if let Some(d) = self.min_vortex_distance() {
            if d <= R::zero() {
                return Err(SimError::InvalidConfig(
                    "vortex positions must be pairwise distinct".into(),
                ));
            }
        }
        Ok(())
    }
}

/// All numerical parameters of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<R = f64> {
    pub dt: R,
    pub horizon: R,
    pub blob_sigma: R,
    pub mollifier_eps: R,
    pub kernel_delta: R,
    /// Barnes-Hut opening angle in [0, 1); 0 selects direct summation.
    pub treecode_theta: R,
    /// Terminate when any inter-vortex distance falls below this.
    pub collision_stop_rho: R,
    pub mode: Mode,
    pub picard_iters: usize,
    pub picard_tol: R,
    /// Record diagnostics every this many macro steps.
    pub diag_stride: usize,
    pub seed: u64,
    /// Particles per unit area used by `discretize`.
    pub particle_density: R,
}

impl<R: Real> Default for SimConfig<R> {
    fn default() -> Self {
        Self {
            dt: R::lit(1e-3),
            horizon: R::one(),
            blob_sigma: R::lit(0.02),
            mollifier_eps: R::lit(1e-3),
            kernel_delta: R::lit(1e-3),
            treecode_theta: R::zero(),
            collision_stop_rho: R::lit(1e-4),
            mode: Mode::Full,
            picard_iters: 5,
            picard_tol: R::lit(1e-6),
            diag_stride: 10,
            seed: 0,
            particle_density: R::lit(2500.0),
        }
    }
}

impl<R: Real> SimConfig<R> {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            (self.dt, "dt"),
            (self.blob_sigma, "blob_sigma"),
            (self.mollifier_eps, "mollifier_eps"),
            (self.kernel_delta, "kernel_delta"),
            (self.collision_stop_rho, "collision_stop_rho"),
            (self.picard_tol, "picard_tol"),
            (self.particle_density, "particle_density"),
        ];
        for (v, name) in pos {
            if !(v > R::zero()) || !v.is_finite() {
                return Err(SimError::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        // horizon = 0 is a valid empty run (initial state only).
        if !(self.horizon >= R::zero()) || !self.horizon.is_finite() {
            return Err(SimError::InvalidConfig("horizon must be >= 0".into()));
        }
        if self.treecode_theta < R::zero() || self.treecode_theta >= R::one() {
            return Err(SimError::InvalidConfig(
                "treecode_theta must lie in [0, 1)".into(),
            ));
        }
        if self.picard_iters < 1 {
            return Err(SimError::InvalidConfig("picard_iters must be >= 1".into()));
        }
        if self.diag_stride < 1 {
            return Err(SimError::InvalidConfig("diag_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Constant-vorticity disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Patch<R = f64> {
    pub center: Vec2<R>,
    pub radius: R,
    pub level: R,
}

/// Sampled vorticity field on a uniform grid. `values[j][i]` is the sample
/// at `origin + (i * spacing, j * spacing)`; evaluation is bilinear.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField<R = f64> {
    pub origin: Vec2<R>,
    pub spacing: R,
    pub values: Vec<Vec<R>>,
}

impl<R: Real> SampledField<R> {
    pub fn extent(&self) -> (Vec2<R>, Vec2<R>) {
        let ny = self.values.len();
        let nx = self.values.first().map_or(0, |r| r.len());
        let w = R::from_usize(nx.saturating_sub(1)).unwrap() * self.spacing;
        let h = R::from_usize(ny.saturating_sub(1)).unwrap() * self.spacing;
        (self.origin, self.origin + Vec2::new(w, h))
    }

    pub fn contains(&self, x: Vec2<R>) -> bool {
        let (lo, hi) = self.extent();
        x.x >= lo.x && x.x <= hi.x && x.y >= lo.y && x.y <= hi.y
    }

    pub fn sample(&self, x: Vec2<R>) -> R {
        if !self.contains(x) {
            return R::zero();
        }
        let fx = (x.x - self.origin.x) / self.spacing;
        let fy = (x.y - self.origin.y) / self.spacing;
        let nx = self.values[0].len() - 1;
        let ny = self.values.len() - 1;
        let i = fx.floor().to_usize().unwrap_or(0).min(nx.saturating_sub(1));
        let j = fy.floor().to_usize().unwrap_or(0).min(ny.saturating_sub(1));
        let tx = fx - R::from_usize(i).unwrap();
        let ty = fy - R::from_usize(j).unwrap();
        let one = R::one();
        self.values[j][i] * (one - tx) * (one - ty)
            + self.values[j][i + 1] * tx * (one - ty)
            + self.values[j + 1][i] * (one - tx) * ty
            + self.values[j + 1][i + 1] * tx * ty
    }
}

/// Initial vortex datum `(h_0, l_0, m, gamma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexInit<R = f64> {
    pub h0: Vec2<R>,
    pub l0: Vec2<R>,
    pub mass: R,
    pub gamma: R,
}

/// Initial data: constant-vorticity discs, an optional sampled background,
/// and the point-vortex data.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData<R = f64> {
    pub patches: Vec<Patch<R>>,
    pub background: Option<SampledField<R>>,
    pub support_radius: R,
    pub vortices: Vec<VortexInit<R>>,
}

impl<R: Real> InitialData<R> {
    pub fn validate(&self) -> Result<()> {
        if self.support_radius <= R::zero() {
            return Err(SimError::InvalidConfig("support_radius must be > 0".into()));
        }
        for p in &self.patches {
            if p.radius <= R::zero() {
                return Err(SimError::InvalidConfig("patch radius must be > 0".into()));
            }
            let slack = R::lit(1e-9);
            if p.center.norm() + p.radius > self.support_radius + slack {
                return Err(SimError::InvalidConfig(
                    "patch support exceeds support_radius".into(),
                ));
            }
        }
        if let Some(bg) = &self.background {
            let (lo, hi) = bg.extent();
            let corners = [
                lo,
                hi,
                Vec2::new(lo.x, hi.y),
                Vec2::new(hi.x, lo.y),
            ];
            for c in corners {
                if c.norm() > self.support_radius + R::lit(1e-9) {
                    return Err(SimError::InvalidConfig(
                        "background support exceeds support_radius".into(),
                    ));
                }
            }
        }
        for i in 0..self.vortices.len() {
            for j in (i + 1)..self.vortices.len() {
                if self.vortices[i].h0 == self.vortices[j].h0 {
                    return Err(SimError::InvalidConfig(
                        "vortex initial positions must be distinct".into(),
                    ));
                }
            }
        }
        // Overlapping discs with different levels make omega_0 ambiguous.
        for i in 0..self.patches.len() {
            for j in (i + 1)..self.patches.len() {
                let a = &self.patches[i];
                let b = &self.patches[j];
                if a.center.dist(b.center) < a.radius + b.radius && a.level != b.level {
                    return Err(SimError::AmbiguousInitialVorticity);
                }
            }
        }
        Ok(())
    }

    /// Pointwise initial vorticity (patches take precedence where they
    /// overlap the background sum is additive).
    pub fn omega0_at(&self, x: Vec2<R>) -> R {
        let mut v = R::zero();
        let mut in_patch = false;
        for p in &self.patches {
            if x.dist(p.center) <= p.radius {
                if !in_patch {
                    v += p.level;
                    in_patch = true;
                }
            }
        }
        if let Some(bg) = &self.background {
            v += bg.sample(x);
        }
        v
    }

    pub fn initial_vortices(&self) -> Vec<MassiveVortex<R>> {
        self.vortices
            .iter()
            .map(|v| MassiveVortex {
                h: v.h0,
                hdot: v.l0,
                mass: v.mass,
                gamma: v.gamma,
            })
            .collect()
    }
}

/// Area of `disc(center, radius)` intersected with the axis-aligned cell
/// `[x0, x1] x [y0, y1]`, by composite Simpson along x. The integrand has
/// sqrt kinks where the circle enters the cell, so the rule is applied on
/// a fairly fine fixed subdivision.
fn disc_cell_overlap<R: Real>(center: Vec2<R>, radius: R, lo: Vec2<R>, hi: Vec2<R>) -> R {
    let a = (lo.x - center.x).max(-radius);
    let b = (hi.x - center.x).min(radius);
    if b <= a {
        return R::zero();
    }
    let y0 = lo.y - center.y;
    let y1 = hi.y - center.y;
    let chord = |x: R| -> R {
        let yc = (radius * radius - x * x).max(R::zero()).sqrt();
        (y1.min(yc) - y0.max(-yc)).max(R::zero())
    };
    let n = 64usize; // even
    let hstep = (b - a) / R::from_usize(n).unwrap();
    let mut s = chord(a) + chord(b);
    for i in 1..n {
        let x = a + hstep * R::from_usize(i).unwrap();
        let w = if i % 2 == 1 { R::lit(4.0) } else { R::lit(2.0) };
        s += w * chord(x);
    }
    s * hstep / R::lit(3.0)
}

/// Lay particles on a uniform grid over the support of `omega_0`.
///
/// Interior cells carry `omega_0(center) * cell_area`; cells cut by a patch
/// boundary carry `level * overlap_area`, so the summed circulation of a
/// disc patch matches `pi r^2 level` to quadrature accuracy.
pub fn discretize<R: Real>(
    init: &InitialData<R>,
    particles_per_unit_area: R,
    blob_radius: R,
) -> Result<ParticleCloud<R>> {
    if !(particles_per_unit_area > R::zero()) {
        return Err(SimError::InvalidConfig(
            "particles_per_unit_area must be > 0".into(),
        ));
    }
    init.validate()?;

    let cell = particles_per_unit_area.sqrt().recip();
    let cell_area = cell * cell;

    // Bounding box of the support.
    let mut lo = Vec2::new(R::infinity(), R::infinity());
    let mut hi = Vec2::new(R::neg_infinity(), R::neg_infinity());
    let mut cover = |a: Vec2<R>, b: Vec2<R>| {
        lo.x = lo.x.min(a.x);
        lo.y = lo.y.min(a.y);
        hi.x = hi.x.max(b.x);
        hi.y = hi.y.max(b.y);
    };
    for p in &init.patches {
        cover(
            p.center - Vec2::new(p.radius, p.radius),
            p.center + Vec2::new(p.radius, p.radius),
        );
    }
    if let Some(bg) = &init.background {
        let (a, b) = bg.extent();
        cover(a, b);
    }
    if !lo.is_finite() {
        return Ok(ParticleCloud::empty(blob_radius));
    }

    let nx = ((hi.x - lo.x) / cell).ceil().to_usize().unwrap_or(0).max(1);
    let ny = ((hi.y - lo.y) / cell).ceil().to_usize().unwrap_or(0).max(1);

    let mut positions = Vec::new();
    let mut weights = Vec::new();
    let half = R::lit(0.5);
    for j in 0..ny {
        for i in 0..nx {
            let cmin = lo + Vec2::new(
                cell * R::from_usize(i).unwrap(),
                cell * R::from_usize(j).unwrap(),
            );
            let cmax = cmin + Vec2::new(cell, cell);
            let center = cmin + Vec2::new(cell * half, cell * half);

            let mut w = R::zero();
            let mut occupied = false;
            let mut patch_overlap = R::zero();
            let mut patch_level = R::zero();
            for p in &init.patches {
                let ov = disc_cell_overlap(p.center, p.radius, cmin, cmax);
                if ov > R::zero() {
                    patch_overlap += ov;
                    patch_level = p.level;
                    occupied = true;
                }
            }
            // Equal-level overlapping discs would double count; cap at the
            // cell area (exact for cells interior to the union).
            w += patch_level * patch_overlap.min(cell_area);
            if let Some(bg) = &init.background {
                if bg.contains(center) {
                    w += bg.sample(center) * cell_area;
                    occupied = true;
                }
            }
            if occupied {
                positions.push(center);
                weights.push(w);
            }
        }
    }

    let initial_positions = positions.clone();
    Ok(ParticleCloud {
        positions,
        weights,
        blob_radius,
        initial_positions,
        cell_area,
    })
}
