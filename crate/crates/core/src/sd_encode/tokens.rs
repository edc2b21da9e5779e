use serde::{Deserialize, Serialize};

use super::SdMapLocal;
use crate::lane_model::resample_polyline;
use crate::{Error, Result};

const FREQUENCY_BASE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenConfig {
    /// Points per polyline after resampling.
    pub n_points: usize,
    /// Embedding width per point; each coordinate gets half of it.
    pub embed_dim: usize,
    pub category_count: usize,
}

impl Default for TokenConfig {
    fn default() -> Self {
        TokenConfig {
            n_points: 11,
            embed_dim: 32,
            category_count: 3,
        }
    }
}

impl TokenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Config(format!(
                "n_points must be at least 2, got {}",
                self.n_points
            )));
        }
        if self.embed_dim == 0 || !self.embed_dim.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "embed_dim must be a positive multiple of 4, got {}",
                self.embed_dim
            )));
        }
        if self.category_count < 3 {
            return Err(Error::Config(format!(
                "category_count must cover the 3 SD categories, got {}",
                self.category_count
            )));
        }
        Ok(())
    }

    /// `n_points · embed_dim + category_count`.
    pub fn token_dim(&self) -> usize {
        self.n_points * self.embed_dim + self.category_count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdToken(pub Vec<f64>);

impl SdToken {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn one_hot(&self, cfg: &TokenConfig) -> &[f64] {
        &self.0[self.0.len() - cfg.category_count..]
    }

    pub fn embedding(&self, cfg: &TokenConfig) -> &[f64] {
        &self.0[..self.0.len() - cfg.category_count]
    }
}

/// Embeds a scalar into `dim` values: `dim / 2` frequencies spaced
/// geometrically from 1 to 10 000, each contributing `(sin, cos)`.
pub fn sinusoidal_embedding(value: f64, dim: usize, out: &mut Vec<f64>) {
    let freqs = dim / 2;
    for k in 0..freqs {
        let exponent = if freqs > 1 {
            k as f64 / (freqs - 1) as f64
        } else {
            0.0
        };
        let (s, c) = (value * FREQUENCY_BASE.powf(exponent)).sin_cos();
        out.push(s);
        out.push(c);
    }
}

/// One token per element, in element order. Points are resampled to
/// `cfg.n_points` and normalized to `[0, 1]` over `map.range()` before
/// embedding.
pub fn tokenize(map: &SdMapLocal, cfg: &TokenConfig) -> Result<Vec<SdToken>> {
    cfg.validate()?;
    let range = map.range();
    let half = cfg.embed_dim / 2;
    map.elements
        .iter()
        .map(|element| {
            let resampled = resample_polyline(&element.polyline, cfg.n_points)?;
            let mut v = Vec::with_capacity(cfg.token_dim());
            for p in resampled.points() {
                let x_norm = (p.x - range.x_min) / range.width_x();
                let y_norm = (p.y - range.y_min) / range.width_y();
                sinusoidal_embedding(x_norm, half, &mut v);
                sinusoidal_embedding(y_norm, half, &mut v);
            }
            let mut one_hot = vec![0.0; cfg.category_count];
            one_hot[element.category.index()] = 1.0;
            v.extend(one_hot);
            Ok(SdToken(v))
        })
        .collect()
}
