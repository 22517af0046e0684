use serde::{Deserialize, Serialize};

use crate::error::{GscloError, Result};
use crate::num::Real;

/// Physical and algorithmic parameters of one uplink scenario.
///
/// Serialized key names carry SI units. Solver tunables that are not
/// physical (penalty weight, iteration caps) live in the per-solver
/// settings types instead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de> + Real")
)]
pub struct ScenarioConfig<F> {
    pub num_frames: usize,
    #[serde(rename = "slot_duration_s")]
    pub slot_duration: F,
    #[serde(rename = "bandwidth_hz")]
    pub bandwidth: F,
    #[serde(rename = "noise_power_w")]
    pub noise_power: F,
    /// Average per-frame transmit power budget.
    #[serde(rename = "power_budget_w")]
    pub power_budget: F,
    pub image_bits: F,
    pub pose_bits: F,
    pub loss_weight: F,
    pub outage_target: F,
    pub neighborhood_radius: usize,
    /// Rician K-factor as a linear ratio.
    pub rician_k: F,
    /// Linear pathloss at 1 m.
    pub pathloss_ref: F,
    pub pathloss_exp: F,
    #[serde(rename = "distance_m")]
    pub distance: F,
    /// Extra linear attenuation, e.g. wall blockage.
    pub extra_fading: F,
    pub rng_seed: u64,
}

impl<F: Real> Default for ScenarioConfig<F> {
    fn default() -> Self {
        Self {
            num_frames: 288,
            slot_duration: F::lit(0.1),
            bandwidth: F::lit(1e6),
            noise_power: F::lit(1e-9),
            power_budget: F::lit(10e-3),
            image_bits: F::lit(537_600.0),
            pose_bits: F::lit(192.0),
            loss_weight: F::lit(0.2),
            outage_target: F::lit(0.1),
            neighborhood_radius: 5,
            rician_k: F::one(),
            pathloss_ref: F::lit(1e-3),
            pathloss_exp: F::lit(3.0),
            distance: F::lit(10.0),
            extra_fading: F::one(),
            rng_seed: 0,
        }
    }
}

impl<F: Real> ScenarioConfig<F> {
    /// Bits that one slot carries per bit/s of rate (τ·B).
    #[inline]
    pub fn slot_bandwidth(&self) -> F {
        self.slot_duration * self.bandwidth
    }

    /// Payload of a frame with content switch `x`: `x·I + (1−x)·S`.
    #[inline]
    pub fn payload_bits(&self, x: F) -> F {
        x * self.image_bits + (F::one() - x) * self.pose_bits
    }

    /// Total budget `T·P` across the horizon.
    #[inline]
    pub fn total_budget(&self) -> F {
        F::count(self.num_frames) * self.power_budget
    }

    /// Mean large-scale gain `ϱ₀ ω₀ d^−α`.
    pub fn mean_gain(&self) -> F {
        self.pathloss_ref * self.extra_fading * self.distance.powf(-self.pathloss_exp)
    }

    pub fn with_frames(mut self, num_frames: usize) -> Self {
        self.num_frames = num_frames;
        self
    }

    pub fn with_budget(mut self, power_budget: F) -> Self {
        self.power_budget = power_budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(GscloError::InvalidConfig(msg.to_owned()));
        if self.num_frames == 0 {
            return bad("num_frames must be positive");
        }
        for (name, v) in [
            ("slot_duration_s", self.slot_duration),
            ("bandwidth_hz", self.bandwidth),
            ("noise_power_w", self.noise_power),
            ("power_budget_w", self.power_budget),
        ] {
            if !(v > F::zero()) || !v.is_finite() {
                return bad(&format!("{name} must be positive and finite"));
            }
        }
        if !(self.pose_bits >= F::zero()) || !(self.pose_bits < self.image_bits) {
            return bad("pose_bits must satisfy 0 <= pose_bits < image_bits");
        }
        if !(self.loss_weight >= F::zero() && self.loss_weight <= F::one()) {
            return bad("loss_weight must lie in [0, 1]");
        }
        if !(self.outage_target > F::zero() && self.outage_target < F::one()) {
            return bad("outage_target must lie in (0, 1)");
        }
        if self.neighborhood_radius == 0 || self.neighborhood_radius > self.num_frames {
            return bad("neighborhood_radius must lie in [1, num_frames]");
        }
        if !(self.rician_k >= F::zero()) {
            return bad("rician_k must be nonnegative");
        }
        if !(self.pathloss_ref > F::zero())
            || !(self.distance > F::zero())
            || !(self.extra_fading > F::zero())
            || !self.pathloss_exp.is_finite()
        {
            return bad("pathloss parameters must be positive");
        }
        Ok(())
    }
}
