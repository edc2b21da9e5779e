//! Rigid localization noise for SD maps.
//!
//! A configuration such as `rot5_std2_prob0.5` reads: with probability 0.5,
//! rotate the whole map about the ego origin by an angle drawn uniformly from
//! ±5°, then shift it by a Gaussian offset with a 2 m standard deviation per
//! axis. `no_noise` disables the perturbation.
//!
//! Randomness comes from ChaCha8 seeded with the caller's `u64`. One stream
//! per call, consumed in a fixed order: gate, angle, Δx, Δy. The gate and
//! angle take one `f64` each from `[0, 1)`; shifts are standard normals
//! scaled by `std`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{Point2, RigidTransform};
use crate::sd_encode::SdMapLocal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Maximum absolute rotation, degrees.
    pub rot_max: f64,
    /// Per-axis shift standard deviation, meters.
    pub std: f64,
    /// Probability that a map is perturbed at all.
    pub prob: f64,
}

/// Test-time noise levels 0 through 8.
pub const NOISE_LEVELS: [&str; 9] = [
    "no_noise",
    "rot5_std2_prob0.5",
    "rot5_std5_prob0.5",
    "rot5_std7_prob0.5",
    "rot5_std10_prob0.5",
    "rot5_std20_prob0.5",
    "rot5_std30_prob0.5",
    "rot5_std20_prob1",
    "rot5_std30_prob1",
];

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        rot_max: 0.0,
        std: 0.0,
        prob: 0.0,
    };

    pub fn new(rot_max: f64, std: f64, prob: f64) -> Result<Self> {
        let cfg = NoiseConfig { rot_max, std, prob };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rot_max >= 0.0 && self.rot_max.is_finite()) {
            return Err(Error::Config(format!(
                "rot_max {} must be >= 0",
                self.rot_max
            )));
        }
        if !(self.std >= 0.0 && self.std.is_finite()) {
            return Err(Error::Config(format!("std {} must be >= 0", self.std)));
        }
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(Error::Config(format!("prob {} outside [0, 1]", self.prob)));
        }
        Ok(())
    }
}

impl fmt::Display for NoiseConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == NoiseConfig::NONE {
            return f.write_str("no_noise");
        }
        write!(f, "rot{}_std{}_prob{}", self.rot_max, self.std, self.prob)
    }
}

impl FromStr for NoiseConfig {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        parse_noise_spec(spec)
    }
}

pub fn parse_noise_spec(spec: &str) -> Result<NoiseConfig> {
    if spec == "no_noise" {
        return Ok(NoiseConfig::NONE);
    }
    let err = |token: &str, reason: &str| Error::NoiseSpec {
        spec: spec.to_string(),
        token: token.to_string(),
        reason: reason.to_string(),
    };
    let tokens: Vec<&str> = spec.split('_').collect();
    if tokens.len() != 3 {
        return Err(err(spec, "expected rot<deg>_std<m>_prob<p> or no_noise"));
    }
    let mut values = [0.0; 3];
    for ((token, prefix), value) in tokens.iter().zip(["rot", "std", "prob"]).zip(&mut values) {
        let Some(number) = token.strip_prefix(prefix) else {
            return Err(err(token, &format!("expected prefix `{prefix}`")));
        };
        let plain = !number.is_empty() && number.chars().all(|c| c.is_ascii_digit() || c == '.');
        *value = match number.parse::<f64>() {
            Ok(v) if plain => v,
            _ => return Err(err(token, "not a non-negative decimal number")),
        };
    }
    let cfg = NoiseConfig {
        rot_max: values[0],
        std: values[1],
        prob: values[2],
    };
    if cfg.prob > 1.0 {
        return Err(err(tokens[2], "probability must be at most 1"));
    }
    Ok(cfg)
}

pub fn noise_level(level: usize) -> Result<NoiseConfig> {
    NOISE_LEVELS
        .get(level)
        .ok_or_else(|| Error::Config(format!("noise level {level} outside 0..=8")))
        .and_then(|spec| parse_noise_spec(spec))
}

/// Draws the map-level transform, or `None` when the gate does not fire.
pub fn sample_transform(cfg: &NoiseConfig, seed: u64) -> Option<RigidTransform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gate: f64 = rng.random();
    if gate >= cfg.prob {
        return None;
    }
    let u: f64 = rng.random();
    let angle_deg = cfg.rot_max * (2.0 * u - 1.0);
    let zx: f64 = rng.sample(StandardNormal);
    let zy: f64 = rng.sample(StandardNormal);
    Some(RigidTransform::new(
        angle_deg.to_radians(),
        Point2::new(cfg.std * zx, cfg.std * zy),
    ))
}

/// Applies one rigid transform to every element of `map`, or returns it
/// unchanged when the gate does not fire.
pub fn perturb(map: &SdMapLocal, cfg: &NoiseConfig, seed: u64) -> SdMapLocal {
    match sample_transform(cfg, seed) {
        Some(t) => map.transformed(&t),
        None => map.clone(),
    }
}
