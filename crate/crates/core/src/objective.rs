//! GSMR objective, zero-one penalty, and constraint checks of the GSCLO problem.

use crate::channel::achievable_rate;
use crate::config::ScenarioConfig;
use crate::error::{GscloError, Result};
use crate::num::{le_with_rel_tol, Real};
use crate::types::Allocation;

/// Relative slack accepted on the per-frame rate constraint.
pub const RATE_REL_TOL: f64 = 1e-9;
/// Relative slack accepted on the average power budget.
pub const BUDGET_REL_TOL: f64 = 1e-9;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(GscloError::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// Mean GSMR loss `(1/T)Σ L_t(1 − x_t)`.
pub fn objective_gsmr<F: Real>(x: &[F], losses: &[F]) -> Result<F> {
    check_len(losses.len(), x.len())?;
    if x.is_empty() {
        return Ok(F::zero());
    }
    Ok(mean_loss_unchecked(x, losses))
}

pub(crate) fn mean_loss_unchecked<F: Real>(x: &[F], losses: &[F]) -> F {
    let sum: F = x
        .iter()
        .zip(losses)
        .map(|(&xt, &lt)| lt * (F::one() - xt))
        .sum();
    sum / F::count(x.len())
}

/// `(1/β)Σ x_t(1 − x_t)`; zero exactly on binary vectors.
pub fn zero_one_penalty<F: Real>(x: &[F], beta: F) -> Result<F> {
    if !(beta > F::zero()) {
        return Err(GscloError::InvalidArgument("penalty beta must be positive".into()));
    }
    let sum: F = x.iter().map(|&v| v * (F::one() - v)).sum();
    Ok(sum / beta)
}

/// `(1/T)Σ x_t(1 − x_t)`, the binariness gap tracked during DC iterations.
pub fn binariness_gap<F: Real>(x: &[F]) -> F {
    if x.is_empty() {
        return F::zero();
    }
    let sum: F = x.iter().map(|&v| v * (F::one() - v)).sum();
    sum / F::count(x.len())
}

/// Whether a total power `Σp_t` respects the average budget `P`.
pub fn within_budget<F: Real>(total_power: F, cfg: &ScenarioConfig<F>) -> bool {
    le_with_rel_tol(total_power, cfg.total_budget(), F::lit(BUDGET_REL_TOL))
}

/// Per-constraint verdict of an allocation against the GSCLO constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict<F> {
    /// `τ·R_t(p_t) ≥ payload_t` per frame.
    pub rate_ok: Vec<bool>,
    /// Bits each frame can carry in its slot.
    pub carried_bits: Vec<F>,
    pub mean_power: F,
    pub budget_ok: bool,
    pub binary_ok: bool,
}

impl<F: Real> FeasibilityVerdict<F> {
    pub fn is_feasible(&self) -> bool {
        self.budget_ok && self.binary_ok && self.rate_ok.iter().all(|&ok| ok)
    }

    pub fn rate_violations(&self) -> Vec<usize> {
        self.rate_ok
            .iter()
            .enumerate()
            .filter(|(_, &ok)| !ok)
            .map(|(t, _)| t)
            .collect()
    }
}

/// Checks rate, budget, and binariness constraints. Length mismatches are
/// reported as rate violations on the missing frames.
pub fn validate_allocation<F: Real>(
    alloc: &Allocation<F>,
    cfg: &ScenarioConfig<F>,
    gains: &[F],
) -> FeasibilityVerdict<F> {
    let tau = cfg.slot_duration;
    let rel = F::lit(RATE_REL_TOL);
    let n = alloc.len().max(gains.len());
    let mut rate_ok = Vec::with_capacity(n);
    let mut carried_bits = Vec::with_capacity(n);
    for t in 0..n {
        match (alloc.x.get(t), alloc.p.get(t), gains.get(t)) {
            (Some(&x), Some(&p), Some(&g)) => {
                let bits = achievable_rate(p, g, cfg).map(|r| tau * r).unwrap_or(F::zero());
                let need = cfg.payload_bits(x);
                rate_ok.push(bits >= need - rel * need);
                carried_bits.push(bits);
            }
            _ => {
                rate_ok.push(false);
                carried_bits.push(F::zero());
            }
        }
    }
    let total: F = alloc.p.iter().copied().sum();
    let mean_power = if alloc.is_empty() {
        F::zero()
    } else {
        total / F::count(alloc.len())
    };
    let budget_ok = if alloc.len() == cfg.num_frames {
        within_budget(total, cfg)
    } else {
        le_with_rel_tol(mean_power, cfg.power_budget, F::lit(BUDGET_REL_TOL))
    };
    let binary_ok = alloc.x.iter().all(|&v| v == F::zero() || v == F::one());
    FeasibilityVerdict {
        rate_ok,
        carried_bits,
        mean_power,
        budget_ok,
        binary_ok,
    }
}
