//! Fading channels, Shannon rate, power inversion, and outage under
//! imperfect channel knowledge.

mod marcum;
mod zf;

pub use marcum::{marcum_q1, marcum_q1_pair};
pub use zf::{zf_cross_terms, zf_effective_gains, MultiAntennaChannel, ZeroForcing};

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::config::ScenarioConfig;
use crate::error::{GscloError, Result};
use crate::num::Real;

/// `B·log2(1 + gain·p/σ²)` in bits/s.
pub fn achievable_rate<F: Real>(power: F, gain: F, cfg: &ScenarioConfig<F>) -> Result<F> {
    if !(power >= F::zero()) {
        return Err(GscloError::InvalidArgument("transmit power must be nonnegative".into()));
    }
    if power == F::zero() {
        return Ok(F::zero());
    }
    Ok(cfg.bandwidth * (gain * power / cfg.noise_power).ln_1p() / F::LN_2())
}

/// Smallest power whose slot carries `bits`: `(σ²/gain)(2^{C/(τB)} − 1)`.
pub fn min_power_for_payload<F: Real>(bits: F, gain: F, cfg: &ScenarioConfig<F>) -> Result<F> {
    if !(bits >= F::zero()) {
        return Err(GscloError::InvalidArgument("payload must be nonnegative".into()));
    }
    if bits == F::zero() {
        return Ok(F::zero());
    }
    if !(gain > F::zero()) {
        return Err(GscloError::Infeasible(
            "a zero-gain channel cannot carry a positive payload".into(),
        ));
    }
    let snr = (bits / cfg.slot_bandwidth() * F::LN_2()).exp_m1();
    Ok(cfg.noise_power / gain * snr)
}

/// Minimum power for image (`upload`) or pose payload.
pub fn frame_power<F: Real>(upload: bool, gain: F, cfg: &ScenarioConfig<F>) -> Result<F> {
    let bits = if upload { cfg.image_bits } else { cfg.pose_bits };
    min_power_for_payload(bits, gain, cfg)
}

fn standard_complex_normal<F: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<F> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(F::lit(re * std::f64::consts::FRAC_1_SQRT_2), F::lit(im * std::f64::consts::FRAC_1_SQRT_2))
}

/// One Rician draw `h = √(ϱ₀ω₀d^−α)(√(K/(1+K)) g_LoS + √(1/(1+K)) g_NLoS)`
/// with `g_LoS = exp(−jπ sin ψ)`, `ψ ~ U(−π, π)` and `g_NLoS ~ CN(0, 1)`.
/// An infinite K-factor yields the pure line-of-sight component.
pub fn rician_sample<F: Real, R: Rng + ?Sized>(cfg: &ScenarioConfig<F>, rng: &mut R) -> Result<Complex<F>> {
    let k = cfg.rician_k;
    if !(k >= F::zero()) {
        return Err(GscloError::InvalidConfig("rician_k must be nonnegative".into()));
    }
    if !(cfg.distance > F::zero()) || !(cfg.pathloss_ref > F::zero()) || !(cfg.extra_fading > F::zero()) {
        return Err(GscloError::InvalidConfig("pathloss parameters must be positive".into()));
    }
    let amplitude = cfg.mean_gain().sqrt();
    let psi: f64 = Uniform::new(-std::f64::consts::PI, std::f64::consts::PI)
        .expect("valid range")
        .sample(rng);
    let phase = F::lit(-std::f64::consts::PI * psi.sin());
    let los = Complex::new(phase.cos(), phase.sin());
    let nlos: Complex<F> = standard_complex_normal(rng);
    let (w_los, w_nlos) = if k.is_infinite() {
        (F::one(), F::zero())
    } else {
        ((k / (F::one() + k)).sqrt(), (F::one() / (F::one() + k)).sqrt())
    };
    Ok((los * w_los + nlos * w_nlos) * amplitude)
}

/// Estimated channel, its uncertainty, and one realization of the true gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw<F> {
    pub estimate: Complex<F>,
    pub estimate_gain: F,
    pub uncertainty: F,
    pub true_gain: F,
}

impl<F: Real> ChannelDraw<F> {
    pub fn sample<R: Rng + ?Sized>(estimate: Complex<F>, omega2: F, rng: &mut R) -> Self {
        Self {
            estimate,
            estimate_gain: estimate.norm_sqr(),
            uncertainty: omega2,
            true_gain: sample_true_gain(estimate, omega2, rng),
        }
    }
}

/// `|h̃ + Δh|²` with `Δh ~ CN(0, ω²)`.
pub fn sample_true_gain<F: Real, R: Rng + ?Sized>(estimate: Complex<F>, omega2: F, rng: &mut R) -> F {
    if omega2 <= F::zero() {
        return estimate.norm_sqr();
    }
    let err: Complex<F> = standard_complex_normal(rng);
    (estimate + err * omega2.sqrt()).norm_sqr()
}

/// Gain below which the frame's payload cannot be delivered at `power`.
pub fn outage_gain_threshold<F: Real>(upload: bool, power: F, cfg: &ScenarioConfig<F>) -> F {
    let bits = if upload { cfg.image_bits } else { cfg.pose_bits };
    let snr = (bits / cfg.slot_bandwidth() * F::LN_2()).exp_m1();
    snr * cfg.noise_power / power
}

/// Outage probability `Γ_t = 1 − Q₁(|h̃|/√(ω²/2), √θ/√(ω²/2))` with θ the
/// gain threshold of the payload at `power`.
///
/// Zero power never delivers (Γ = 1). With `ω² = 0` the channel is known
/// and Γ is the indicator `|h̃|² < θ`.
pub fn outage_prob<F: Real>(
    upload: bool,
    power: F,
    estimate: Complex<F>,
    omega2: F,
    cfg: &ScenarioConfig<F>,
) -> Result<F> {
    if !(power >= F::zero()) {
        return Err(GscloError::InvalidArgument("transmit power must be nonnegative".into()));
    }
    if !(omega2 >= F::zero()) {
        return Err(GscloError::InvalidArgument("omega2 must be nonnegative".into()));
    }
    if power == F::zero() {
        return Ok(F::one());
    }
    let threshold = outage_gain_threshold(upload, power, cfg);
    let est_gain = estimate.norm_sqr();
    if omega2 == F::zero() {
        return Ok(if est_gain < threshold { F::one() } else { F::zero() });
    }
    let scale = (omega2 / F::lit(2.0)).sqrt();
    let (_, p) = marcum_q1_pair(est_gain.sqrt() / scale, threshold.sqrt() / scale)?;
    Ok(p)
}
