//! Plain-text run configuration: one `key = value` per line, `#` comments.
//!
//! ```text
//! # r = 2 at an eighth-wavelength spacing
//! gamma_ratio = 2
//! theta1 = 0
//! theta_d = pi/4
//! tau_fb = 1.0
//! tau_dd = 0
//! variant = semi_infinite
//! horizon_T = 40
//! ```
//!
//! Rates come either from `gamma_ratio` (normalised so `γ_L + γ_R = 1`) or
//! from an explicit `gamma_L` / `gamma_R` pair. Phases accept multiples of
//! `pi`, e.g. `pi/4`, `0.5*pi`, `3pi/8`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::ConfigError;
use crate::model::{SystemConfig, Variant};

/// A system config plus optional solver overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig<f64>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut seen = HashSet::new();
    let mut ratio = None;
    let (mut gamma_l, mut gamma_r) = (None, None);
    let (mut theta1, mut theta_d, mut tau_fb, mut tau_dd, mut delta) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut variant = Variant::SemiInfinite;
    let (mut step, mut horizon) = (None, None);

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| ConfigError::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if !seen.insert(key.clone()) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        let number = || parse_value(value).ok_or_else(|| err(format!("`{value}` is not a number")));
        match key.as_str() {
            "gamma_ratio" => ratio = Some(number()?),
            "gamma_l" => gamma_l = Some(number()?),
            "gamma_r" => gamma_r = Some(number()?),
            "theta1" => theta1 = number()?,
            "theta_d" => theta_d = number()?,
            "tau_fb" => tau_fb = number()?,
            "tau_dd" => tau_dd = number()?,
            "delta" => delta = number()?,
            "variant" => variant = value.parse().map_err(err)?,
            "step_h" => step = Some(number()?),
            "horizon_t" => horizon = Some(number()?),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }

    let base = match (ratio, gamma_l, gamma_r) {
        (Some(r), None, None) => SystemConfig::from_chirality(r)?,
        (None, Some(l), Some(r)) => SystemConfig::new(l, r)?,
        (Some(_), _, _) => {
            return Err(ConfigError::Parse {
                line: 0,
                message: "give either gamma_ratio or gamma_L/gamma_R, not both".into(),
            })
        }
        _ => {
            return Err(ConfigError::Parse {
                line: 0,
                message: "missing rates: set gamma_ratio or both gamma_L and gamma_R".into(),
            })
        }
    };
    let system =
        base.with_phases(theta1, theta_d).with_delays(tau_fb, tau_dd).with_detuning(delta).with_variant(variant);
    system.validate()?;
    Ok(RunConfig { system, step, horizon })
}

/// Parses a float or a multiple of pi (`pi`, `-pi/2`, `3pi/8`, `0.25*pi`).
pub fn parse_value(s: &str) -> Option<f64> {
    let s = s.trim().replace('π', "pi").replace(' ', "");
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), Some(d.parse::<f64>().ok()?)),
        None => (s.clone(), None),
    };
    let coef = num.strip_suffix("pi")?.trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let v = coef * PI / den.unwrap_or(1.0);
    v.is_finite().then_some(v)
}

/// Renders a config in the same format `parse_config` reads.
pub fn render_config(cfg: &RunConfig) -> String {
    let s = &cfg.system;
    let mut out = format!(
        "gamma_L = {:?}\ngamma_R = {:?}\ntheta1 = {:?}\ntheta_d = {:?}\ntau_fb = {:?}\ntau_dd = {:?}\ndelta = {:?}\nvariant = {}\n",
        s.gamma_l, s.gamma_r, s.theta1, s.theta_d, s.tau_fb, s.tau_dd, s.delta, s.variant
    );
    if let Some(h) = cfg.step {
        out.push_str(&format!("step_h = {h:?}\n"));
    }
    if let Some(t) = cfg.horizon {
        out.push_str(&format!("horizon_T = {t:?}\n"));
    }
    out
}
