//! Synthetic GS traces.
//!
//! Most frames render well from the GS model and carry a small loss drawn
//! uniformly from the bulk range; a tail fraction models frames the model
//! has not seen, with losses log-uniform between the bulk ceiling and the
//! tail ceiling. Channels are Rician draws from the scenario.

use gsclo::channel::rician_sample;
use gsclo::{FrameTrace64, ScenarioConfig64};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub bulk_loss_min: f64,
    pub bulk_loss_max: f64,
    pub tail_fraction: f64,
    pub tail_loss_max: f64,
    /// Estimation-error variance as a fraction of `|h̃|²`; zero means the
    /// channel is known.
    pub uncertainty_ratio: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            bulk_loss_min: 0.005,
            bulk_loss_max: 0.02,
            tail_fraction: 0.15,
            tail_loss_max: 0.3,
            uncertainty_ratio: 0.0,
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.bulk_loss_min > 0.0
            && self.bulk_loss_min <= self.bulk_loss_max
            && self.bulk_loss_max <= self.tail_loss_max
            && self.tail_loss_max.is_finite()
            && (0.0..=1.0).contains(&self.tail_fraction)
            && self.uncertainty_ratio >= 0.0
            && self.uncertainty_ratio.is_finite();
        if ok {
            Ok(())
        } else {
            Err(CliError::Spec(
                "generator needs 0 < bulk_loss_min ≤ bulk_loss_max ≤ tail_loss_max, tail_fraction in [0,1] and uncertainty_ratio ≥ 0".into(),
            ))
        }
    }
}

fn sample_loss<R: Rng + ?Sized>(params: &GeneratorParams, rng: &mut R) -> f64 {
    if params.tail_fraction > 0.0 && rng.random_bool(params.tail_fraction) {
        let (lo, hi) = (params.bulk_loss_max.ln(), params.tail_loss_max.ln());
        if hi > lo {
            rng.random_range(lo..=hi).exp()
        } else {
            params.tail_loss_max
        }
    } else if params.bulk_loss_max > params.bulk_loss_min {
        rng.random_range(params.bulk_loss_min..=params.bulk_loss_max)
    } else {
        params.bulk_loss_min
    }
}

/// `cfg.num_frames` frames with losses from the mixture and Rician channels.
pub fn generate_trace<R: Rng + ?Sized>(
    cfg: &ScenarioConfig64,
    params: &GeneratorParams,
    rng: &mut R,
) -> Result<Vec<FrameTrace64>> {
    params.validate()?;
    if cfg.num_frames == 0 {
        return Err(CliError::Spec("num_frames must be positive".into()));
    }
    (1..=cfg.num_frames)
        .map(|t| {
            let loss = sample_loss(params, rng);
            let h = rician_sample(cfg, rng)?;
            let frame = FrameTrace64::new(t, loss, h.norm_sqr());
            Ok(if params.uncertainty_ratio > 0.0 {
                frame.with_uncertainty(h, params.uncertainty_ratio * h.norm_sqr())
            } else {
                frame
            })
        })
        .collect()
}
