//! Comparison allocators.
//!
//! `MaxRate` and `Fairness` pick powers from the channel alone and then
//! upload an image wherever the resulting slot capacity carries one.
//! `Rounding`, `Search` and `MaxImg` act on the GSCLO problem directly.
//! [`oracle`] enumerates every switch pattern for small horizons.

pub mod oracle;

pub use oracle::{exhaustive_oracle, OracleVariant, ORACLE_MAX_FRAMES};

use crate::apo::{
    binary_allocation, descending_order, fits_budget, horizon_budget, power_curves, repair_switches,
    separable_knapsack,
};
use crate::channel::achievable_rate;
use crate::config::ScenarioConfig;
use crate::error::{GscloError, Result};
use crate::num::Real;
use crate::objective::{check_len, RATE_REL_TOL};
use crate::robust::{iterated_local_search, BilsSettings, PowerTable};
use crate::types::{Allocation, SolveReport};

/// A channel-only power profile with content chosen by achieved capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdAllocation<F> {
    pub allocation: Allocation<F>,
    /// Water level `ν` or common SNR, depending on the allocator.
    pub level: F,
    /// Frames whose power cannot carry even the pose payload.
    pub undeliverable: Vec<usize>,
}

fn check_gains<F: Real>(gains: &[F]) -> Result<()> {
    if gains.is_empty() {
        return Err(GscloError::InvalidArgument("at least one frame is required".into()));
    }
    if gains.iter().any(|&g| !(g >= F::zero()) || !g.is_finite()) {
        return Err(GscloError::InvalidArgument("gains must be finite and nonnegative".into()));
    }
    if gains.iter().all(|&g| g == F::zero()) {
        return Err(GscloError::InvalidArgument("all channel gains are zero".into()));
    }
    Ok(())
}

fn threshold_content<F: Real>(p: Vec<F>, gains: &[F], cfg: &ScenarioConfig<F>, level: F) -> Result<ThresholdAllocation<F>> {
    let rel = F::lit(RATE_REL_TOL);
    let mut switches = Vec::with_capacity(p.len());
    let mut undeliverable = Vec::new();
    for (t, (&pt, &g)) in p.iter().zip(gains).enumerate() {
        let carried = cfg.slot_duration * achievable_rate(pt, g, cfg)?;
        switches.push(carried >= cfg.image_bits * (F::one() - rel));
        if carried < cfg.pose_bits * (F::one() - rel) {
            undeliverable.push(t);
        }
    }
    Ok(ThresholdAllocation {
        allocation: Allocation::from_switches(&switches, p)?,
        level,
        undeliverable,
    })
}

/// Sum-rate water-filling: `p_t = max(ν − σ²/g_t, 0)` with `(1/T)Σp_t = P`.
///
/// The level is found exactly by sorting the inverse gains. Zero-gain
/// frames get no power.
pub fn waterfill_maxrate<F: Real>(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<ThresholdAllocation<F>> {
    check_gains(gains)?;
    let budget = horizon_budget(gains.len(), cfg);
    let mut floors: Vec<F> = gains
        .iter()
        .filter(|&&g| g > F::zero())
        .map(|&g| cfg.noise_power / g)
        .collect();
    floors.sort_by(|a, b| a.partial_cmp(b).expect("finite floors"));
    let mut level = F::zero();
    let mut prefix = F::zero();
    for (k, &floor) in floors.iter().enumerate() {
        prefix += floor;
        let candidate = (budget + prefix) / F::count(k + 1);
        let next = floors.get(k + 1).copied().unwrap_or(F::infinity());
        if candidate <= next {
            level = candidate;
            break;
        }
    }
    let p = gains
        .iter()
        .map(|&g| {
            if g > F::zero() {
                (level - cfg.noise_power / g).max(F::zero())
            } else {
                F::zero()
            }
        })
        .collect();
    threshold_content(p, gains, cfg, level)
}

/// Max-min fairness: equal slot capacity for every frame, spending the
/// whole budget. The common SNR is `z = TP / Σ(σ²/g_t)` and
/// `p_t = z σ²/g_t`.
pub fn maxmin_fairness<F: Real>(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<ThresholdAllocation<F>> {
    check_gains(gains)?;
    if gains.iter().any(|&g| g == F::zero()) {
        return Err(GscloError::InvalidArgument(
            "max-min fairness needs every gain positive".into(),
        ));
    }
    let inverse_sum: F = gains.iter().map(|&g| cfg.noise_power / g).sum();
    let snr = horizon_budget(gains.len(), cfg) / inverse_sum;
    let p = gains.iter().map(|&g| snr * cfg.noise_power / g).collect();
    threshold_content(p, gains, cfg, snr)
}

/// Continuous relaxation of the GSCLO problem (`x ∈ [0, 1]^T`, no penalty).
pub fn continuous_relaxation<F: Real>(losses: &[F], gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Allocation<F>> {
    check_len(losses.len(), gains.len())?;
    let curves = power_curves(gains, cfg)?;
    let n = F::count(losses.len());
    let c: Vec<F> = losses.iter().map(|&l| -l / n).collect();
    let (x, _) = separable_knapsack(&c, &curves, horizon_budget(losses.len(), cfg), F::lit(1e-13))?;
    let p = x.iter().zip(&curves).map(|(&v, curve)| curve.power(v)).collect();
    Allocation::relaxed(x, p)
}

/// Relaxation, rounding at one half, then budget repair.
pub fn relax_round<F: Real>(losses: &[F], gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Allocation<F>> {
    let relaxed = continuous_relaxation(losses, gains, cfg)?;
    let curves = power_curves(gains, cfg)?;
    let switches = repair_switches(relaxed.switches(), losses, &curves, horizon_budget(losses.len(), cfg))?;
    binary_allocation(&switches, &curves)
}

/// Iterated local search on the deterministic problem from the all-pose start.
pub fn local_search_pgs<F: Real>(
    losses: &[F],
    gains: &[F],
    cfg: &ScenarioConfig<F>,
    settings: &BilsSettings<F>,
) -> Result<SolveReport<F>> {
    check_len(losses.len(), gains.len())?;
    let table = PowerTable::deterministic(gains, cfg)?;
    let start = vec![false; losses.len()];
    if settings.max_outer_iterations == 0 {
        let curves = power_curves(gains, cfg)?;
        let alloc = binary_allocation(&start, &curves)?;
        let feasible = fits_budget(alloc.p.iter().copied().sum(), horizon_budget(losses.len(), cfg));
        let objective = crate::objective::objective_gsmr(&alloc.x, losses)?;
        return Ok(SolveReport::new(alloc, objective, feasible));
    }
    iterated_local_search(losses, &table, horizon_budget(losses.len(), cfg), &start, settings)
}

/// Uploads the frames with the cheapest images until the budget binds.
pub fn max_img<F: Real>(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Allocation<F>> {
    let curves = power_curves(gains, cfg)?;
    let budget = horizon_budget(gains.len(), cfg);
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| {
        curves[a]
            .image_power()
            .partial_cmp(&curves[b].image_power())
            .expect("finite powers")
    });
    let mut switches = vec![false; gains.len()];
    let mut total: F = curves.iter().map(|c| c.pose_power()).sum();
    for t in order {
        let next = total + curves[t].image_power() - curves[t].pose_power();
        if !fits_budget(next, budget) {
            break;
        }
        switches[t] = true;
        total = next;
    }
    binary_allocation(&switches, &curves)
}

/// Uploads every image regardless of the budget.
pub fn robo_mr<F: Real>(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Allocation<F>> {
    let curves = power_curves(gains, cfg)?;
    binary_allocation(&vec![true; gains.len()], &curves)
}

/// Sends only poses.
pub fn robo_gs<F: Real>(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Allocation<F>> {
    let curves = power_curves(gains, cfg)?;
    binary_allocation(&vec![false; gains.len()], &curves)
}

/// Frames ranked by loss, for callers that need the ranking order itself.
pub fn loss_ranking<F: Real>(losses: &[F]) -> Vec<usize> {
    descending_order(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::objective_gsmr;

    fn cfg() -> ScenarioConfig<f64> {
        ScenarioConfig::default()
    }

    #[test]
    fn waterfill_single_and_equal() {
        let c = cfg().with_frames(1);
        let w = waterfill_maxrate(&[1e-6], &c).unwrap();
        assert!((w.allocation.p[0] - c.power_budget).abs() < 1e-15);
        let c = cfg().with_frames(5);
        let w = waterfill_maxrate(&[1e-6; 5], &c).unwrap();
        for p in &w.allocation.p {
            assert!((p - c.power_budget).abs() < 1e-15);
        }
    }

    #[test]
    fn waterfill_kkt() {
        let c = cfg().with_frames(2);
        let gains = [1e-6, 1e-7];
        let w = waterfill_maxrate(&gains, &c).unwrap();
        let total: f64 = w.allocation.p.iter().sum();
        assert!((total - 2.0 * c.power_budget).abs() < 1e-15);
        for (p, g) in w.allocation.p.iter().zip(gains) {
            assert!((p - (w.level - c.noise_power / g)).abs() < 1e-12);
        }
        // A very weak frame stays dry.
        let w = waterfill_maxrate(&[1e-6, 1e-12], &c).unwrap();
        assert_eq!(w.allocation.p[1], 0.0);
        assert!(w.level <= 1e-9 / 1e-12);
        assert_eq!(w.undeliverable, vec![1]);
    }

    #[test]
    fn fairness_equalizes_rates() {
        let c = cfg().with_frames(3);
        let gains = [1e-6, 3e-7, 2e-6];
        let f = maxmin_fairness(&gains, &c).unwrap();
        let rates: Vec<f64> = f
            .allocation
            .p
            .iter()
            .zip(gains)
            .map(|(&p, g)| achievable_rate(p, g, &c).unwrap())
            .collect();
        for r in &rates {
            assert!((r / rates[0] - 1.0).abs() < 1e-9);
        }
        let weakest = f.allocation.p[1];
        assert!(f.allocation.p.iter().all(|&p| p <= weakest));
        let total: f64 = f.allocation.p.iter().sum();
        assert!((total / (3.0 * c.power_budget) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_img_counts() {
        let c = cfg().with_frames(5).with_budget(20e-3);
        let a = max_img(&[1e-6; 5], &c).unwrap();
        // 100 mW fits two 40.5 mW images plus three poses.
        assert_eq!(a.upload_count(), 2);
        let c = cfg().with_frames(5).with_budget(1.0);
        assert_eq!(max_img(&[1e-6; 5], &c).unwrap().upload_count(), 5);
    }

    #[test]
    fn relaxation_bounds_rounding() {
        let c = cfg().with_frames(6).with_budget(15e-3);
        let gains = [1e-6, 2e-6, 5e-7, 1.5e-6, 8e-7, 3e-6];
        let losses = [0.05, 0.02, 0.2, 0.01, 0.12, 0.03];
        let relaxed = continuous_relaxation(&losses, &gains, &c).unwrap();
        let rounded = relax_round(&losses, &gains, &c).unwrap();
        assert!(objective_gsmr(&relaxed.x, &losses).unwrap() <= objective_gsmr(&rounded.x, &losses).unwrap());
        assert!(rounded.is_binary);
    }

    #[test]
    fn local_search_with_no_iterations_returns_start() {
        let c = cfg().with_frames(3);
        let s = BilsSettings { max_outer_iterations: 0, ..BilsSettings::default() };
        let r = local_search_pgs(&[0.1, 0.2, 0.3], &[1e-6; 3], &c, &s).unwrap();
        assert_eq!(r.allocation.x, vec![0.0; 3]);
    }

    #[test]
    fn rejects_zero_gains() {
        let c = cfg().with_frames(2);
        assert!(waterfill_maxrate(&[0.0, 0.0], &c).is_err());
        assert!(maxmin_fairness(&[0.0, 0.0], &c).is_err());
    }
}
