//! Accelerated penalty optimization (APO) for the deterministic GSCLO
//! problem.
//!
//! With the rate constraint active, frame `t` costs
//! `f_t(x) = (σ²/g_t)(2^{((I−S)x+S)/(τB)} − 1)`, a convex increasing
//! function of the relaxed switch. The binary problem is then a knapsack
//! over frames. APO starts from the loss ranking, relaxes `x` to `[0, 1]`,
//! adds the concave penalty `φ(x) = (1/β)Σx(1−x)`, and linearizes it at the
//! previous iterate. Each difference-of-convex step is a separable convex
//! problem with one coupling budget, solved exactly by bisection on its
//! multiplier.

use std::time::Instant;

use crate::channel::frame_power;
use crate::config::ScenarioConfig;
use crate::error::{GscloError, Result};
use crate::num::{le_with_rel_tol, Real};
use crate::objective::{
    binariness_gap, check_len, mean_loss_unchecked, zero_one_penalty, BUDGET_REL_TOL,
};
use crate::types::{Allocation, SolveReport};

/// Tunables of [`apo_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApoSettings<F> {
    /// Initial penalty parameter. `None` derives it from the losses as
    /// `1/β = penalty_scale · max_t L_t / T`.
    pub beta: Option<F>,
    pub penalty_scale: F,
    /// Factor applied to `1/β` when an iterate converges without becoming binary.
    pub penalty_growth: F,
    pub max_iterations: usize,
    pub max_restarts: usize,
    /// Stop when `‖x⁽ⁿ⁾ − x⁽ⁿ⁻¹⁾‖₂` falls to this value.
    pub convergence_tol: F,
    /// Accept a converged iterate once `(1/T)Σx(1−x)` falls to this value.
    pub binary_tol: F,
    /// Relative width at which the multiplier bisection stops.
    pub dual_tol: F,
    /// Largest number of simultaneous drops tried by the exchange pass
    /// after rounding; `0` disables it.
    pub exchange_radius: usize,
}

impl<F: Real> Default for ApoSettings<F> {
    fn default() -> Self {
        Self {
            beta: None,
            penalty_scale: F::lit(0.1),
            penalty_growth: F::lit(2.0),
            max_iterations: 200,
            max_restarts: 12,
            convergence_tol: F::lit(1e-4),
            binary_tol: F::lit(1e-2),
            dual_tol: F::lit(1e-13),
            exchange_radius: 2,
        }
    }
}

impl<F: Real> ApoSettings<F> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: F| v > F::zero() && v.is_finite();
        if let Some(b) = self.beta {
            if !positive(b) {
                return Err(GscloError::InvalidConfig("beta must be positive".into()));
            }
        }
        if !positive(self.penalty_scale)
            || !(self.penalty_growth > F::one())
            || !positive(self.convergence_tol)
            || !positive(self.binary_tol)
            || !positive(self.dual_tol)
        {
            return Err(GscloError::InvalidConfig(
                "APO tolerances and scales must be positive (growth > 1)".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(GscloError::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }

    /// The initial `β` used for a given loss vector.
    pub fn initial_beta(&self, losses: &[F]) -> F {
        if let Some(b) = self.beta {
            return b;
        }
        let max_loss = losses.iter().copied().fold(F::zero(), F::max);
        let n = F::count(losses.len().max(1));
        let rho = self.penalty_scale * max_loss / n;
        if rho > F::zero() {
            F::one() / rho
        } else {
            F::one()
        }
    }
}

/// Activated-constraint power of frame `t` as a function of the relaxed switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCurve<F> {
    /// `σ²/g_t`.
    scale: F,
    /// `ln 2 / (τB)`.
    rate: F,
    pose_bits: F,
    extra_bits: F,
    /// `f_t(0)` and `f_t(1)`, taken from the channel inversion so they
    /// match the binary powers bit for bit.
    pose_power: F,
    image_power: F,
}

impl<F: Real> PowerCurve<F> {
    pub fn new(gain: F, cfg: &ScenarioConfig<F>) -> Result<Self> {
        if !(gain > F::zero()) || !gain.is_finite() {
            return Err(GscloError::InvalidArgument(
                "channel gains must be positive and finite".into(),
            ));
        }
        Ok(Self {
            scale: cfg.noise_power / gain,
            rate: F::LN_2() / cfg.slot_bandwidth(),
            pose_bits: cfg.pose_bits,
            extra_bits: cfg.image_bits - cfg.pose_bits,
            pose_power: frame_power(false, gain, cfg)?,
            image_power: frame_power(true, gain, cfg)?,
        })
    }

    /// `f_t(x)`.
    pub fn power(&self, x: F) -> F {
        if x == F::zero() {
            self.pose_power
        } else if x == F::one() {
            self.image_power
        } else {
            self.scale * ((self.pose_bits + self.extra_bits * x) * self.rate).exp_m1()
        }
    }

    /// `f'_t(x)`.
    pub fn slope(&self, x: F) -> F {
        self.scale * self.rate * self.extra_bits * ((self.pose_bits + self.extra_bits * x) * self.rate).exp()
    }

    pub fn pose_power(&self) -> F {
        self.pose_power
    }

    pub fn image_power(&self) -> F {
        self.image_power
    }

    /// Binary power for a switch.
    pub fn binary_power(&self, upload: bool) -> F {
        if upload {
            self.image_power
        } else {
            self.pose_power
        }
    }

    /// Minimizer of `c·x + μ·f_t(x)` over `[0, 1]`.
    pub fn argmin_linear(&self, c: F, mu: F) -> F {
        if c >= F::zero() {
            return F::zero();
        }
        if mu == F::zero() {
            return F::one();
        }
        // Stationarity: μ·scale·rate·(I−S)·exp(rate·payload) = −c.
        let denom = mu * self.scale * self.rate * self.extra_bits;
        let payload = (-c / denom).ln() / self.rate;
        let x = (payload - self.pose_bits) / self.extra_bits;
        x.max(F::zero()).min(F::one())
    }
}

pub(crate) fn power_curves<F: Real>(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Vec<PowerCurve<F>>> {
    gains.iter().map(|&g| PowerCurve::new(g, cfg)).collect()
}

pub(crate) fn horizon_budget<F: Real>(frames: usize, cfg: &ScenarioConfig<F>) -> F {
    F::count(frames) * cfg.power_budget
}

pub(crate) fn fits_budget<F: Real>(total: F, budget: F) -> bool {
    le_with_rel_tol(total, budget, F::lit(BUDGET_REL_TOL))
}

pub(crate) fn binary_total<F: Real>(switches: &[bool], curves: &[PowerCurve<F>]) -> F {
    switches
        .iter()
        .zip(curves)
        .map(|(&s, c)| c.binary_power(s))
        .sum()
}

pub(crate) fn binary_allocation<F: Real>(switches: &[bool], curves: &[PowerCurve<F>]) -> Result<Allocation<F>> {
    let p = switches
        .iter()
        .zip(curves)
        .map(|(&s, c)| c.binary_power(s))
        .collect();
    Allocation::from_switches(switches, p)
}

fn check_inputs<F: Real>(losses: &[F], gains: &[F]) -> Result<()> {
    check_len(losses.len(), gains.len())?;
    if losses.is_empty() {
        return Err(GscloError::InvalidArgument("at least one frame is required".into()));
    }
    if let Some(t) = losses.iter().position(|&l| !(l >= F::zero()) || !l.is_finite()) {
        return Err(GscloError::InvalidArgument(format!("loss of frame {t} is invalid")));
    }
    Ok(())
}

/// Ranking initialization: upload the `μ` highest-loss frames, with `μ` the
/// largest count whose image-plus-pose power fits the budget `TP`.
///
/// Ties in the loss keep frame order. Frames with zero loss are never
/// uploaded.
pub fn ranking_init<F: Real>(losses: &[F], gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Allocation<F>> {
    check_inputs(losses, gains)?;
    let curves = power_curves(gains, cfg)?;
    let budget = horizon_budget(losses.len(), cfg);
    let order = descending_order(losses);
    let positive = losses.iter().filter(|&&l| l > F::zero()).count();

    let switches_for = |mu: usize| {
        let mut s = vec![false; losses.len()];
        for &t in &order[..mu] {
            s[t] = true;
        }
        s
    };
    let fits = |mu: usize| fits_budget(binary_total(&switches_for(mu), &curves), budget);
    if !fits(0) {
        return Err(GscloError::Infeasible(
            "pose-only transmission already exceeds the power budget".into(),
        ));
    }
    // Ξ(μ) is increasing, so bisect on the largest feasible prefix.
    let (mut lo, mut hi) = (0, positive);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    binary_allocation(&switches_for(lo), &curves)
}

/// Frame indices sorted by loss, largest first, stable in frame order.
pub(crate) fn descending_order<F: Real>(losses: &[F]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[b].partial_cmp(&losses[a]).expect("finite losses"));
    order
}

/// Linearized penalty `φ̂(x|x*) = (1/β)Σ(x_t − 2x*_t x_t + x*_t²)`.
pub fn dc_surrogate<F: Real>(x: &[F], x_star: &[F], beta: F) -> Result<F> {
    check_len(x_star.len(), x.len())?;
    if !(beta > F::zero()) {
        return Err(GscloError::InvalidArgument("penalty beta must be positive".into()));
    }
    let two = F::lit(2.0);
    let sum: F = x
        .iter()
        .zip(x_star)
        .map(|(&v, &s)| v - two * s * v + s * s)
        .sum();
    Ok(sum / beta)
}

/// Penalized objective `(1/T)ΣL_t(1−x_t) + φ(x)`.
pub fn penalized_objective<F: Real>(x: &[F], losses: &[F], beta: F) -> Result<F> {
    check_len(losses.len(), x.len())?;
    Ok(mean_loss_unchecked(x, losses) + zero_one_penalty(x, beta)?)
}

/// Result of one difference-of-convex step.
#[derive(Debug, Clone, PartialEq)]
pub struct DcStep<F> {
    pub allocation: Allocation<F>,
    /// Budget multiplier `μ` at the returned point.
    pub multiplier: F,
    /// Linear coefficients `c_t = −L_t/T + (1 − 2x*_t)/β`.
    pub coefficients: Vec<F>,
    /// `Σ f_t(x_t)`.
    pub total_power: F,
}

/// Minimizes `Σ c_t x_t` subject to `Σ f_t(x_t) ≤ budget`, `x ∈ [0,1]^T`.
///
/// Returns the primal point at the smallest multiplier found feasible, and
/// that multiplier.
pub(crate) fn separable_knapsack<F: Real>(
    coefficients: &[F],
    curves: &[PowerCurve<F>],
    budget: F,
    dual_tol: F,
) -> Result<(Vec<F>, F)> {
    let eval = |mu: F| -> (Vec<F>, F) {
        let x: Vec<F> = coefficients
            .iter()
            .zip(curves)
            .map(|(&c, curve)| curve.argmin_linear(c, mu))
            .collect();
        let total = x.iter().zip(curves).map(|(&v, c)| c.power(v)).sum();
        (x, total)
    };

    let floor: F = curves.iter().map(|c| c.pose_power()).sum();
    if !fits_budget(floor, budget) {
        return Err(GscloError::Infeasible(
            "pose-only transmission already exceeds the power budget".into(),
        ));
    }
    let (x0, total0) = eval(F::zero());
    if total0 <= budget {
        return Ok((x0, F::zero()));
    }

    let two = F::lit(2.0);
    let mut hi = F::one();
    let mut lo = F::zero();
    let mut doublings = 0;
    loop {
        let (x, total) = eval(hi);
        if total <= budget {
            break;
        }
        lo = hi;
        hi *= two;
        doublings += 1;
        if doublings > 4000 || !hi.is_finite() {
            // Budget equals the pose floor to rounding: only all-pose fits.
            let zeros = vec![F::zero(); x.len()];
            return Ok((zeros, hi));
        }
    }
    for _ in 0..400 {
        if hi - lo <= dual_tol * hi {
            break;
        }
        let mid = if lo > F::zero() { (lo * hi).sqrt() } else { hi / two };
        let mid = if mid <= lo || mid >= hi { (lo + hi) / two } else { mid };
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid).1 <= budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((eval(hi).0, hi))
}

/// One DC step: the exact minimizer of the penalized objective with the
/// penalty linearized at `x_star`.
pub fn solve_dc_subproblem<F: Real>(
    x_star: &[F],
    losses: &[F],
    gains: &[F],
    cfg: &ScenarioConfig<F>,
    beta: F,
    dual_tol: F,
) -> Result<DcStep<F>> {
    check_inputs(losses, gains)?;
    check_len(losses.len(), x_star.len())?;
    if !(beta > F::zero()) {
        return Err(GscloError::InvalidArgument("penalty beta must be positive".into()));
    }
    let curves = power_curves(gains, cfg)?;
    dc_step_with(x_star, losses, &curves, horizon_budget(losses.len(), cfg), beta, dual_tol)
}

fn dc_step_with<F: Real>(
    x_star: &[F],
    losses: &[F],
    curves: &[PowerCurve<F>],
    budget: F,
    beta: F,
    dual_tol: F,
) -> Result<DcStep<F>> {
    let n = F::count(losses.len());
    let rho = F::one() / beta;
    let two = F::lit(2.0);
    let coefficients: Vec<F> = losses
        .iter()
        .zip(x_star)
        .map(|(&l, &s)| -l / n + rho * (F::one() - two * s))
        .collect();
    let (x, multiplier) = separable_knapsack(&coefficients, curves, budget, dual_tol)?;
    let p: Vec<F> = x.iter().zip(curves).map(|(&v, c)| c.power(v)).collect();
    let total_power = p.iter().copied().sum();
    Ok(DcStep {
        allocation: Allocation::relaxed(x, p)?,
        multiplier,
        coefficients,
        total_power,
    })
}

/// Rounds a relaxed allocation to binary, then flips the smallest-loss
/// uploads back to poses until the budget holds.
pub fn binarize_and_repair<F: Real>(
    relaxed: &Allocation<F>,
    losses: &[F],
    gains: &[F],
    cfg: &ScenarioConfig<F>,
) -> Result<Allocation<F>> {
    check_inputs(losses, gains)?;
    check_len(losses.len(), relaxed.len())?;
    let curves = power_curves(gains, cfg)?;
    let budget = horizon_budget(losses.len(), cfg);
    let switches = repair_switches(relaxed.switches(), losses, &curves, budget)?;
    binary_allocation(&switches, &curves)
}

pub(crate) fn repair_switches<F: Real>(
    mut switches: Vec<bool>,
    losses: &[F],
    curves: &[PowerCurve<F>],
    budget: F,
) -> Result<Vec<bool>> {
    let mut total = binary_total(&switches, curves);
    let mut order = descending_order(losses);
    order.reverse();
    for t in order {
        if fits_budget(total, budget) {
            break;
        }
        if switches[t] {
            switches[t] = false;
            total = binary_total(&switches, curves);
        }
    }
    if !fits_budget(total, budget) {
        return Err(GscloError::Infeasible(
            "pose-only transmission already exceeds the power budget".into(),
        ));
    }
    Ok(switches)
}

/// Local improvement of a feasible binary pattern.
///
/// Each round evaluates every move of the following kinds and applies the
/// best strictly improving one:
/// * drop up to `radius` uploads, then refill greedily;
/// * force one pose frame to upload, evict uploads until the budget holds,
///   then refill greedily.
///
/// Refill and eviction are tried both in loss order and in loss-per-watt
/// order. The pattern is first refilled so no affordable upload is left out.
pub fn exchange_polish<F: Real>(
    switches: Vec<bool>,
    losses: &[F],
    curves: &[PowerCurve<F>],
    budget: F,
    radius: usize,
) -> Vec<bool> {
    let n = losses.len();
    let delta: Vec<F> = curves.iter().map(|c| c.image_power() - c.pose_power()).collect();
    let by_loss = descending_order(losses);
    let mut by_ratio: Vec<usize> = (0..n).collect();
    by_ratio.sort_by(|&a, &b| {
        (losses[b] / delta[b])
            .partial_cmp(&(losses[a] / delta[a]))
            .expect("finite ratios")
    });
    let orders = [by_loss, by_ratio];
    let saved = |s: &[bool]| -> F {
        s.iter()
            .zip(losses)
            .filter(|(&u, _)| u)
            .map(|(_, &l)| l)
            .sum()
    };

    let refill = |s: &mut Vec<bool>, total: &mut F, order: &[usize], banned: &[usize]| {
        for &t in order {
            if !s[t] && losses[t] > F::zero() && !banned.contains(&t) {
                let next = *total + delta[t];
                if fits_budget(next, budget) {
                    s[t] = true;
                    *total = next;
                }
            }
        }
    };

    let mut current = switches;
    let mut total = binary_total(&current, curves);
    refill(&mut current, &mut total, &orders[0], &[]);
    let mut best_value = saved(&current);

    loop {
        let mut best: Option<(Vec<bool>, F)> = None;
        let consider = |cand: Vec<bool>, best: &mut Option<(Vec<bool>, F)>| {
            let value = saved(&cand);
            let bar = best.as_ref().map_or(best_value, |b| b.1);
            if value > bar && value > best_value + best_value * F::lit(1e-12) {
                *best = Some((cand, value));
            }
        };

        let ones: Vec<usize> = (0..n).filter(|&t| current[t]).collect();
        let mut drops: Vec<Vec<usize>> = Vec::new();
        if radius >= 1 {
            drops.extend(ones.iter().map(|&i| vec![i]));
        }
        if radius >= 2 {
            for a in 0..ones.len() {
                for b in a + 1..ones.len() {
                    drops.push(vec![ones[a], ones[b]]);
                }
            }
        }
        if radius >= 3 {
            for a in 0..ones.len() {
                for b in a + 1..ones.len() {
                    for c in b + 1..ones.len() {
                        drops.push(vec![ones[a], ones[b], ones[c]]);
                    }
                }
            }
        }
        for drop in &drops {
            for order in &orders {
                let mut cand = current.clone();
                let mut cand_total = total;
                for &i in drop {
                    cand[i] = false;
                    cand_total -= delta[i];
                }
                refill(&mut cand, &mut cand_total, order, drop);
                consider(cand, &mut best);
            }
        }

        if radius >= 1 {
            for j in (0..n).filter(|&t| !current[t] && losses[t] > F::zero()) {
                for evict_order in &orders {
                    let mut cand = current.clone();
                    cand[j] = true;
                    let mut cand_total = total + delta[j];
                    for &i in evict_order.iter().rev() {
                        if fits_budget(cand_total, budget) {
                            break;
                        }
                        if cand[i] && i != j {
                            cand[i] = false;
                            cand_total -= delta[i];
                        }
                    }
                    if !fits_budget(cand_total, budget) {
                        continue;
                    }
                    for order in &orders {
                        let mut filled = cand.clone();
                        let mut filled_total = cand_total;
                        refill(&mut filled, &mut filled_total, order, &[]);
                        consider(filled, &mut best);
                    }
                }
            }
        }

        match best {
            Some((cand, value)) => {
                current = cand;
                // Recompute from scratch so rounding drift never accumulates.
                total = binary_total(&current, curves);
                best_value = value;
            }
            None => return current,
        }
    }
}

/// Runs APO: ranking initialization, DC iterations with penalty
/// continuation, rounding with budget repair, and an exchange pass.
///
/// The iterations stop once `‖Δx‖ ≤ convergence_tol` with the binariness
/// gap at most `binary_tol`. A converged but still fractional iterate
/// strengthens the penalty by `penalty_growth` and resumes from that
/// iterate. The returned objective is the mean GSMR loss of the final
/// binary allocation; the ranking initialization is kept if rounding did
/// worse. `objective_trajectory` holds the penalized objective of the
/// last penalty stage, which is non-increasing.
pub fn apo_solve<F: Real>(
    losses: &[F],
    gains: &[F],
    cfg: &ScenarioConfig<F>,
    settings: &ApoSettings<F>,
) -> Result<SolveReport<F>> {
    let start = Instant::now();
    settings.validate()?;
    check_inputs(losses, gains)?;
    let curves = power_curves(gains, cfg)?;
    let budget = horizon_budget(losses.len(), cfg);
    let init = ranking_init(losses, gains, cfg)?;

    let mut beta = settings.initial_beta(losses);
    let mut x = init.x.clone();
    let mut objective_trajectory = vec![penalized_objective(&x, losses, beta)?];
    let mut delta_x_trajectory = Vec::new();
    let mut binariness_trajectory = Vec::new();
    let mut iterations = 0;
    let mut restarts = 0;
    let mut relaxed = init.clone();

    if losses.iter().any(|&l| l > F::zero()) {
        while iterations < settings.max_iterations {
            let step = dc_step_with(&x, losses, &curves, budget, beta, settings.dual_tol)?;
            iterations += 1;
            let dx = step
                .allocation
                .x
                .iter()
                .zip(&x)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<F>()
                .sqrt();
            x = step.allocation.x.clone();
            relaxed = step.allocation;
            let gap = binariness_gap(&x);
            delta_x_trajectory.push(dx);
            binariness_trajectory.push(gap);
            objective_trajectory.push(penalized_objective(&x, losses, beta)?);
            if dx <= settings.convergence_tol {
                if gap <= settings.binary_tol || restarts >= settings.max_restarts {
                    break;
                }
                beta /= settings.penalty_growth;
                restarts += 1;
                objective_trajectory.clear();
                objective_trajectory.push(penalized_objective(&x, losses, beta)?);
            }
        }
    }

    let switches = repair_switches(relaxed.switches(), losses, &curves, budget)?;
    let switches = if settings.exchange_radius > 0 {
        exchange_polish(switches, losses, &curves, budget, settings.exchange_radius)
    } else {
        switches
    };
    // Uploading a zero-loss frame only spends power.
    let switches: Vec<bool> = switches
        .iter()
        .zip(losses)
        .map(|(&s, &l)| s && l > F::zero())
        .collect();
    let mut allocation = binary_allocation(&switches, &curves)?;
    let mut objective = mean_loss_unchecked(&allocation.x, losses);
    let init_objective = mean_loss_unchecked(&init.x, losses);
    if init_objective < objective {
        allocation = init;
        objective = init_objective;
    }
    let feasible = fits_budget(allocation.p.iter().copied().sum(), budget);
    let mut report = SolveReport::new(allocation, objective, feasible);
    report.objective_trajectory = objective_trajectory;
    report.delta_x_trajectory = delta_x_trajectory;
    report.binariness_trajectory = binariness_trajectory;
    report.iterations = iterations;
    report.restarts = restarts;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::min_power_for_payload;

    fn cfg() -> ScenarioConfig<f64> {
        ScenarioConfig::default()
    }

    #[test]
    fn ranking_three_frame_example() {
        let c = cfg().with_frames(3).with_budget(30e-3);
        let gains = [1e-6; 3];
        let a = ranking_init(&[0.5, 0.1, 0.3], &gains, &c).unwrap();
        assert_eq!(a.x, vec![1.0, 0.0, 1.0]);
        let image = min_power_for_payload(537_600.0, 1e-6, &c).unwrap();
        let pose = min_power_for_payload(192.0, 1e-6, &c).unwrap();
        assert_eq!(a.p, vec![image, pose, image]);
        assert!(2.0 * image + pose <= 90e-3 && 3.0 * image > 90e-3);
    }

    #[test]
    fn ranking_uploads_everything_when_budget_is_slack() {
        let c = cfg().with_frames(4).with_budget(1.0);
        let a = ranking_init(&[0.1, 0.2, 0.3, 0.05], &[1e-6; 4], &c).unwrap();
        assert_eq!(a.x, vec![1.0; 4]);
    }

    #[test]
    fn ranking_rejects_unaffordable_poses() {
        let c = cfg().with_frames(2).with_budget(1e-9);
        assert!(matches!(
            ranking_init(&[0.1, 0.2], &[1e-6; 2], &c),
            Err(GscloError::Infeasible(_))
        ));
    }

    #[test]
    fn ranking_keeps_frame_order_on_ties() {
        let c = cfg().with_frames(3).with_budget(15e-3);
        let a = ranking_init(&[0.2, 0.2, 0.2], &[1e-6; 3], &c).unwrap();
        assert_eq!(a.x, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn surrogate_examples() {
        assert!((dc_surrogate(&[0.0_f64], &[0.5], 1.0).unwrap() - 0.25).abs() < 1e-15);
        let xs = [0.3_f64, 0.9];
        let phi = zero_one_penalty(&xs, 0.7).unwrap();
        assert!((dc_surrogate(&xs, &xs, 0.7).unwrap() - phi).abs() < 1e-15);
        assert!(dc_surrogate(&xs, &xs, 0.0).is_err());
        assert!(dc_surrogate(&xs, &xs[..1], 1.0).is_err());
    }

    #[test]
    fn slack_budget_subproblem_is_a_sign_test() {
        let c = cfg().with_frames(3).with_budget(10.0);
        let step = solve_dc_subproblem(&[1.0, 0.0, 0.0], &[0.3, 0.0, 0.6], &[1e-6; 3], &c, 1.0, 1e-13).unwrap();
        // c = [−0.1 − 1, 1, −0.2 + 1]: only the first is negative.
        assert_eq!(step.multiplier, 0.0);
        assert_eq!(step.allocation.x, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn positive_coefficients_give_all_pose() {
        let c = cfg().with_frames(3).with_budget(1e-3);
        let step = solve_dc_subproblem(&[0.0; 3], &[0.1, 0.2, 0.3], &[1e-6; 3], &c, 0.01, 1e-13).unwrap();
        assert_eq!(step.allocation.x, vec![0.0; 3]);
    }

    #[test]
    fn argmin_matches_stationarity() {
        let c = cfg();
        let curve = PowerCurve::new(2e-6, &c).unwrap();
        let x = curve.argmin_linear(-3e-3, 0.2);
        assert!(x > 0.0 && x < 1.0);
        assert!((-3e-3 + 0.2 * curve.slope(x)).abs() < 1e-15);
        assert_eq!(curve.power(0.0), curve.pose_power());
        let mid = curve.power(0.5);
        let direct = c.noise_power / 2e-6 * (2f64.powf(c.payload_bits(0.5) / 1e5) - 1.0);
        assert!((mid / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binarize_examples() {
        let c = cfg().with_frames(2).with_budget(30e-3);
        let relaxed = Allocation::relaxed(vec![0.96, 0.03], vec![0.0, 0.0]).unwrap();
        let b = binarize_and_repair(&relaxed, &[0.5, 0.4], &[1e-6; 2], &c).unwrap();
        assert_eq!(b.x, vec![1.0, 0.0]);
        let pose = min_power_for_payload(192.0, 1e-6, &c).unwrap();
        assert_eq!(b.p[1], pose);

        let both = Allocation::relaxed(vec![0.9, 0.8], vec![0.0, 0.0]).unwrap();
        let b = binarize_and_repair(&both, &[0.5, 0.4], &[1e-6; 2], &c).unwrap();
        assert_eq!(b.x, vec![1.0, 0.0]);

        let already = Allocation::binary(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let b = binarize_and_repair(&already, &[0.5, 0.4], &[1e-6; 2], &c).unwrap();
        assert_eq!(b.x, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_losses_upload_nothing() {
        let c = cfg().with_frames(4).with_budget(1.0);
        let gains = [1e-6, 2e-6, 5e-7, 1e-6];
        let r = apo_solve(&[0.0; 4], &gains, &c, &ApoSettings::default()).unwrap();
        assert_eq!(r.allocation.x, vec![0.0; 4]);
        assert_eq!(r.objective, 0.0);
        for (p, &g) in r.allocation.p.iter().zip(&gains) {
            assert_eq!(*p, min_power_for_payload(192.0, g, &c).unwrap());
        }
    }

    #[test]
    fn apo_equal_gains_matches_ranking() {
        let c = cfg().with_frames(6).with_budget(20e-3);
        let losses = [0.02, 0.15, 0.01, 0.07, 0.3, 0.005];
        let gains = [1e-6; 6];
        let r = apo_solve(&losses, &gains, &c, &ApoSettings::default()).unwrap();
        let init = ranking_init(&losses, &gains, &c).unwrap();
        assert_eq!(r.objective, mean_loss_unchecked(&init.x, &losses));
        assert!(r.feasible);
    }

    #[test]
    fn settings_validation() {
        assert!(ApoSettings::<f64>::default().validate().is_ok());
        let bad = ApoSettings { beta: Some(0.0), ..ApoSettings::<f64>::default() };
        assert!(bad.validate().is_err());
        let bad = ApoSettings { penalty_growth: 1.0, ..ApoSettings::<f64>::default() };
        assert!(bad.validate().is_err());
    }
}
