//! Line-based `key = value` run configuration with repeatable `[vortex]`
//! and `[patch]` sections.

use anyhow::{anyhow, bail, Result};
use gyrovortex::state::{InitialData, Mode, Patch, SimConfig, VortexInit};
use gyrovortex::vec2::Vec2;
use std::collections::BTreeMap;
use std::path::Path;

const GLOBAL_KEYS: &[&str] = &[
    "dt",
    "horizon",
    "blob_sigma",
    "mollifier_eps",
    "kernel_delta",
    "treecode_theta",
    "collision_stop_rho",
    "mode",
    "picard_iters",
    "picard_tol",
    "diag_stride",
    "seed",
    "support_radius",
    "particle_density",
];
const REQUIRED_KEYS: &[&str] = &["dt", "horizon"];
const VORTEX_KEYS: &[&str] = &["h0x", "h0y", "l0x", "l0y", "mass", "gamma"];
const PATCH_KEYS: &[&str] = &["cx", "cy", "radius", "level"];

fn parse_number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| anyhow!("malformed number for key '{key}': '{value}'"))
}

fn parse_integer(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| anyhow!("malformed number for key '{key}': '{value}'"))
}

#[derive(Default)]
struct Section {
    name: &'static str,
    entries: BTreeMap<String, String>,
}

impl Section {
    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            Some(v) => Ok(Some(parse_number(key, v)?)),
            None => Ok(None),
        }
    }

    fn require(&self, key: &str, index: usize) -> Result<f64> {
        self.number(key)?.ok_or_else(|| {
            anyhow!("missing required key '{key}' in [{}] section {index}", self.name)
        })
    }
}

fn split_sections(text: &str) -> Result<(Section, Vec<Section>, Vec<Section>)> {
    let mut globals = Section {
        name: "global",
        ..Section::default()
    };
    let mut vortices = Vec::new();
    let mut patches = Vec::new();
    // index into which section the cursor currently writes
    let mut cursor: Option<(&'static str, usize)> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[vortex]" {
            vortices.push(Section {
                name: "vortex",
                ..Section::default()
            });
            cursor = Some(("vortex", vortices.len() - 1));
            continue;
        }
        if line == "[patch]" {
            patches.push(Section {
                name: "patch",
                ..Section::default()
            });
            cursor = Some(("patch", patches.len() - 1));
            continue;
        }
        if line.starts_with('[') {
            bail!("unknown section {line} at line {}", lineno + 1);
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("expected 'key = value' at line {}: '{line}'", lineno + 1))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = match cursor {
            None => {
                if !GLOBAL_KEYS.contains(&key.as_str()) {
                    bail!("unknown key '{key}' at line {}", lineno + 1);
                }
                &mut globals
            }
            Some(("vortex", i)) => {
                if !VORTEX_KEYS.contains(&key.as_str()) {
                    bail!("unknown key '{key}' in [vortex] at line {}", lineno + 1);
                }
                &mut vortices[i]
            }
            Some((_, i)) => {
                if !PATCH_KEYS.contains(&key.as_str()) {
                    bail!("unknown key '{key}' in [patch] at line {}", lineno + 1);
                }
                &mut patches[i]
            }
        };
        if section.entries.insert(key.clone(), value).is_some() {
            bail!("duplicate key '{key}' at line {}", lineno + 1);
        }
    }
    Ok((globals, vortices, patches))
}

/// Parse a configuration file into initial data and solver settings.
pub fn parse_config(path: &Path) -> Result<(InitialData<f64>, SimConfig<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow!("cannot read config '{}': {e}", path.display()))?;
    parse_config_str(&text)
}

/// Parse configuration text (see [`parse_config`]).
pub fn parse_config_str(text: &str) -> Result<(InitialData<f64>, SimConfig<f64>)> {
    let (globals, vortex_sections, patch_sections) = split_sections(text)?;

    let missing: Vec<&str> = REQUIRED_KEYS
        .iter()
        .copied()
        .filter(|k| !globals.entries.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        bail!("missing required keys: {}", missing.join(", "));
    }

    let mut cfg = SimConfig::<f64>::default();
    cfg.dt = globals.number("dt")?.unwrap();
    cfg.horizon = globals.number("horizon")?.unwrap();
    if cfg.dt <= 0.0 {
        bail!("dt must be positive, got {}", cfg.dt);
    }
    if let Some(v) = globals.number("blob_sigma")? {
        cfg.blob_sigma = v;
    }
    if let Some(v) = globals.number("mollifier_eps")? {
        cfg.mollifier_eps = v;
    }
    if let Some(v) = globals.number("kernel_delta")? {
        cfg.kernel_delta = v;
    }
    if let Some(v) = globals.number("treecode_theta")? {
        cfg.treecode_theta = v;
    }
    if let Some(v) = globals.number("collision_stop_rho")? {
        cfg.collision_stop_rho = v;
    }
    if let Some(v) = globals.entries.get("mode") {
        cfg.mode = Mode::parse(v)?;
    }
    if let Some(v) = globals.entries.get("picard_iters") {
        cfg.picard_iters = parse_integer("picard_iters", v)? as usize;
    }
    if let Some(v) = globals.number("picard_tol")? {
        cfg.picard_tol = v;
    }
    if let Some(v) = globals.entries.get("diag_stride") {
        cfg.diag_stride = parse_integer("diag_stride", v)? as usize;
    }
    if let Some(v) = globals.entries.get("seed") {
        cfg.seed = parse_integer("seed", v)?;
    }
    if let Some(v) = globals.number("particle_density")? {
        cfg.particle_density = v;
    }

    let mut vortices = Vec::new();
    for (i, s) in vortex_sections.iter().enumerate() {
        vortices.push(VortexInit {
            h0: Vec2::new(s.require("h0x", i)?, s.require("h0y", i)?),
            l0: Vec2::new(
                s.number("l0x")?.unwrap_or(0.0),
                s.number("l0y")?.unwrap_or(0.0),
            ),
            mass: s.number("mass")?.unwrap_or(0.0),
            gamma: s.require("gamma", i)?,
        });
    }
    for i in 0..vortices.len() {
        for j in (i + 1)..vortices.len() {
            if vortices[i].h0 == vortices[j].h0 {
                bail!("vortex initial positions must be distinct");
            }
        }
    }

    let mut patches = Vec::new();
    for (i, s) in patch_sections.iter().enumerate() {
        patches.push(Patch {
            center: Vec2::new(s.require("cx", i)?, s.require("cy", i)?),
            radius: s.require("radius", i)?,
            level: s.number("level")?.unwrap_or(1.0),
        });
    }

    let support_default = patches
        .iter()
        .map(|p| p.center.norm() + p.radius)
        .fold(1.0, f64::max);
    let init = InitialData {
        patches,
        background: None,
        support_radius: globals.number("support_radius")?.unwrap_or(support_default),
        vortices,
    };
    Ok((init, cfg))
}

/// Serialize a parsed configuration back to the text format; output parses
/// to the same configuration.
pub fn emit_config(init: &InitialData<f64>, cfg: &SimConfig<f64>) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("dt", format!("{}", cfg.dt));
    kv("horizon", format!("{}", cfg.horizon));
    kv("blob_sigma", format!("{}", cfg.blob_sigma));
    kv("mollifier_eps", format!("{}", cfg.mollifier_eps));
    kv("kernel_delta", format!("{}", cfg.kernel_delta));
    kv("treecode_theta", format!("{}", cfg.treecode_theta));
    kv("collision_stop_rho", format!("{}", cfg.collision_stop_rho));
    kv("mode", cfg.mode.as_str().to_string());
    kv("picard_iters", format!("{}", cfg.picard_iters));
    kv("picard_tol", format!("{}", cfg.picard_tol));
    kv("diag_stride", format!("{}", cfg.diag_stride));
    kv("seed", format!("{}", cfg.seed));
    kv("support_radius", format!("{}", init.support_radius));
    kv("particle_density", format!("{}", cfg.particle_density));
    for v in &init.vortices {
        out.push_str("\n[vortex]\n");
        out.push_str(&format!("h0x = {}\nh0y = {}\n", v.h0.x, v.h0.y));
        out.push_str(&format!("l0x = {}\nl0y = {}\n", v.l0.x, v.l0.y));
        out.push_str(&format!("mass = {}\ngamma = {}\n", v.mass, v.gamma));
    }
    for p in &init.patches {
        out.push_str("\n[patch]\n");
        out.push_str(&format!("cx = {}\ncy = {}\n", p.center.x, p.center.y));
        out.push_str(&format!("radius = {}\nlevel = {}\n", p.radius, p.level));
    }
    out
}
