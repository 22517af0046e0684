//! Per-cell quality and efficiency metrics.
//!
//! Traces carry only GS losses, not images, so PSNR and SSIM are estimates:
//! a delivered image scores the PSNR cap and SSIM 1, a GS render scores the
//! calibrated PSNR of its loss and SSIM `1 − L`.

use gsclo::robust::evaluate_packet_loss;
use gsclo::types::losses_of;
use gsclo::{Allocation64, FrameTrace64, ScenarioConfig64};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::solvers::{channel_estimates, has_uncertainty};

/// Log-linear loss → PSNR map through two anchor points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsnrCalibration {
    pub high_loss: f64,
    pub high_loss_psnr_db: f64,
    pub low_loss: f64,
    pub low_loss_psnr_db: f64,
    pub cap_db: f64,
}

impl Default for PsnrCalibration {
    fn default() -> Self {
        Self {
            high_loss: 0.035,
            high_loss_psnr_db: 30.0,
            low_loss: 0.02,
            low_loss_psnr_db: 40.0,
            cap_db: 60.0,
        }
    }
}

impl PsnrCalibration {
    pub fn validate(&self) -> Result<()> {
        let ok = self.low_loss > 0.0
            && self.high_loss > self.low_loss
            && self.low_loss_psnr_db > self.high_loss_psnr_db
            && self.cap_db >= self.low_loss_psnr_db
            && self.cap_db.is_finite();
        if ok {
            Ok(())
        } else {
            Err(CliError::Spec("PSNR calibration must be strictly decreasing in loss and below the cap".into()))
        }
    }

    /// Estimated PSNR of a GS render with loss `loss`, clamped to `[0, cap]`.
    pub fn psnr_db(&self, loss: f64) -> f64 {
        if loss <= 0.0 {
            return self.cap_db;
        }
        let slope = (self.low_loss_psnr_db - self.high_loss_psnr_db) / (self.low_loss.ln() - self.high_loss.ln());
        let db = self.high_loss_psnr_db + slope * (loss.ln() - self.high_loss.ln());
        db.clamp(0.0, self.cap_db)
    }
}

/// Metrics of one solved allocation, averaged over channel draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub mean_loss: f64,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    /// Delivered payload bits per joule of transmit energy.
    pub energy_efficiency: f64,
    pub mean_power: f64,
    pub packet_loss_prob: f64,
}

/// Evaluates `alloc` against true channels. Known-channel traces are
/// checked once; uncertain ones are drawn `draws` times. An upload in
/// outage falls back to the GS render.
pub fn evaluate<R: Rng + ?Sized>(
    alloc: &Allocation64,
    trace: &[FrameTrace64],
    cfg: &ScenarioConfig64,
    calibration: &PsnrCalibration,
    draws: usize,
    rng: &mut R,
) -> Result<CellMetrics> {
    let losses = losses_of(trace);
    let (est, omega2) = channel_estimates(trace);
    let runs = if has_uncertainty(trace) { draws } else { 1 };
    let report = evaluate_packet_loss(alloc, &losses, &est, &omega2, cfg, runs, rng)?;
    let n = trace.len() as f64;
    let switches = alloc.switches();
    let mut psnr = 0.0;
    let mut ssim = 0.0;
    for t in 0..trace.len() {
        let delivered = if switches[t] { 1.0 - report.per_frame_outage[t] } else { 0.0 };
        psnr += delivered * calibration.cap_db + (1.0 - delivered) * calibration.psnr_db(losses[t]);
        ssim += delivered + (1.0 - delivered) * (1.0 - losses[t]).max(0.0);
    }
    let energy = cfg.slot_duration * alloc.p.iter().sum::<f64>();
    let energy_efficiency = if energy > 0.0 { report.delivered_bits / energy } else { 0.0 };
    Ok(CellMetrics {
        mean_loss: report.realized_mean_loss,
        mean_psnr: psnr / n,
        mean_ssim: ssim / n,
        energy_efficiency,
        mean_power: alloc.mean_power(),
        packet_loss_prob: report.outage_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsclo::apo::ranking_init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn calibration_hits_its_anchors() {
        let c = PsnrCalibration::default();
        assert!((c.psnr_db(0.035) - 30.0).abs() < 1e-12);
        assert!((c.psnr_db(0.02) - 40.0).abs() < 1e-12);
        assert_eq!(c.psnr_db(0.0), 60.0);
        assert_eq!(c.psnr_db(1e-9), 60.0);
        assert!(c.psnr_db(0.3) < c.psnr_db(0.1));
    }

    #[test]
    fn known_channels_deliver_everything() {
        let trace: Vec<FrameTrace64> = (1..=4).map(|t| FrameTrace64::new(t, 0.01 * t as f64, 1e-6)).collect();
        let cfg = ScenarioConfig64::default().with_frames(4).with_budget(25e-3);
        let alloc = ranking_init(&losses_of(&trace), &[1e-6; 4], &cfg).unwrap();
        let m = evaluate(&alloc, &trace, &cfg, &PsnrCalibration::default(), 10, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(m.packet_loss_prob, 0.0);
        let want = losses_of(&trace).iter().zip(&alloc.x).map(|(l, x)| l * (1.0 - x)).sum::<f64>() / 4.0;
        assert!((m.mean_loss - want).abs() < 1e-15);
        let bits: f64 = alloc.switches().iter().map(|&s| if s { cfg.image_bits } else { cfg.pose_bits }).sum();
        assert!((m.energy_efficiency - bits / (cfg.slot_duration * alloc.p.iter().sum::<f64>())).abs() <= 1e-9 * m.energy_efficiency);
    }
}
