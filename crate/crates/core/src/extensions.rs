//! Power minimization under a QoE constraint, the GS power-saving factor,
//! and the multi-robot problem with zero-forcing reception.

use std::time::Instant;

use crate::apo::{
    apo_solve, binary_allocation, descending_order, power_curves, ApoSettings, PowerCurve,
};
use crate::channel::{zf_effective_gains, MultiAntennaChannel};
use crate::config::ScenarioConfig;
use crate::error::{GscloError, Result};
use crate::num::Real;
use crate::objective::{binariness_gap, check_len, mean_loss_unchecked};
use crate::types::{Allocation, SolveReport};

/// How the loss threshold constrains the allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QoeMode {
    /// `(1/T)Σ L_t(1−x_t) ≤ L_th`.
    Average,
    /// `L_t(1−x_t) ≤ L_th` for every frame.
    PerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoeSettings<F> {
    pub loss_threshold: F,
    pub mode: QoeMode,
}

impl<F: Real> QoeSettings<F> {
    pub fn average(loss_threshold: F) -> Self {
        Self { loss_threshold, mode: QoeMode::Average }
    }

    pub fn per_frame(loss_threshold: F) -> Self {
        Self { loss_threshold, mode: QoeMode::PerFrame }
    }
}

fn check_threshold<F: Real>(l_th: F) -> Result<()> {
    if !(l_th >= F::zero()) || !l_th.is_finite() {
        return Err(GscloError::InvalidArgument("loss threshold must be finite and nonnegative".into()));
    }
    Ok(())
}

fn check_losses<F: Real>(losses: &[F], gains: &[F]) -> Result<()> {
    check_len(losses.len(), gains.len())?;
    if losses.is_empty() {
        return Err(GscloError::InvalidArgument("at least one frame is required".into()));
    }
    if losses.iter().any(|&l| !(l >= F::zero()) || !l.is_finite()) {
        return Err(GscloError::InvalidArgument("losses must be finite and nonnegative".into()));
    }
    Ok(())
}

/// Closed form for the per-frame QoE problem: upload exactly the frames
/// with `L_t > L_th`, at activated-rate powers.
pub fn qgs_prime_closed_form<F: Real>(
    losses: &[F],
    gains: &[F],
    cfg: &ScenarioConfig<F>,
    loss_threshold: F,
) -> Result<Allocation<F>> {
    check_losses(losses, gains)?;
    check_threshold(loss_threshold)?;
    let curves = power_curves(gains, cfg)?;
    let switches: Vec<bool> = losses.iter().map(|&l| l > loss_threshold).collect();
    binary_allocation(&switches, &curves)
}

/// All-upload power `Σ p^MR_t` minus the per-frame QoE optimum `Σ p*_t`:
/// `ΔP = Σ_{L_t ≤ L_th} (2^{I/(τB)} − 2^{S/(τB)}) σ²/|h_t|²`.
pub fn power_saving_factor<F: Real>(
    losses: &[F],
    gains: &[F],
    cfg: &ScenarioConfig<F>,
    loss_threshold: F,
) -> Result<F> {
    check_losses(losses, gains)?;
    check_threshold(loss_threshold)?;
    let tb = cfg.slot_bandwidth();
    let two = F::lit(2.0);
    let spread = two.powf(cfg.image_bits / tb) - two.powf(cfg.pose_bits / tb);
    let mut total = F::zero();
    for (&l, &g) in losses.iter().zip(gains) {
        if !(g > F::zero()) {
            return Err(GscloError::InvalidArgument("gains must be positive".into()));
        }
        if l <= loss_threshold {
            total += spread * cfg.noise_power / g;
        }
    }
    Ok(total)
}

/// Mean power of the all-upload allocation, `(1/T)Σ p^MR_t`.
pub fn all_upload_power<F: Real>(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<F> {
    let curves = power_curves(gains, cfg)?;
    Ok(curves.iter().map(|c| c.image_power()).sum::<F>() / F::count(gains.len()))
}

/// Smallest-multiplier solution of
/// `min Σ [a_t x_t + f_t(x_t)/T]` s.t. `Σ L_t(1−x_t) ≤ allowance`, with
/// `a_t = ρ(1 − 2x*_t) − ν L_t` for multiplier `ν`.
fn qoe_knapsack<F: Real>(
    base: &[F],
    losses: &[F],
    curves: &[PowerCurve<F>],
    allowance: F,
    dual_tol: F,
) -> (Vec<F>, F) {
    let inv_t = F::one() / F::count(losses.len());
    let eval = |nu: F| -> (Vec<F>, F) {
        let x: Vec<F> = base
            .iter()
            .zip(losses)
            .zip(curves)
            .map(|((&b, &l), c)| c.argmin_linear(b - nu * l, inv_t))
            .collect();
        let residual = x.iter().zip(losses).map(|(&v, &l)| l * (F::one() - v)).sum();
        (x, residual)
    };
    let (x0, r0) = eval(F::zero());
    if r0 <= allowance {
        return (x0, F::zero());
    }
    let two = F::lit(2.0);
    let mut lo = F::zero();
    let mut hi = F::one();
    let mut guard = 0;
    loop {
        let (x, r) = eval(hi);
        if r <= allowance {
            break;
        }
        if guard > 4000 || !hi.is_finite() {
            return (x, hi);
        }
        lo = hi;
        hi *= two;
        guard += 1;
    }
    for _ in 0..400 {
        if hi - lo <= dual_tol * hi {
            break;
        }
        let mid = if lo > F::zero() { (lo * hi).sqrt() } else { hi / two };
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid).1 <= allowance {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (eval(hi).0, hi)
}

fn residual_loss<F: Real>(switches: &[bool], losses: &[F]) -> F {
    switches
        .iter()
        .zip(losses)
        .filter(|(&s, _)| !s)
        .map(|(_, &l)| l)
        .sum()
}

fn qoe_met<F: Real>(residual: F, allowance: F) -> bool {
    residual <= allowance + allowance.abs() * F::lit(1e-12)
}

/// Flips poses to uploads in descending loss until the QoE budget holds.
fn repair_qoe<F: Real>(mut switches: Vec<bool>, losses: &[F], allowance: F) -> Vec<bool> {
    for t in descending_order(losses) {
        if qoe_met(residual_loss(&switches, losses), allowance) {
            break;
        }
        switches[t] = true;
    }
    switches
}

/// Greedy cover: repeatedly uploads the frame with the least extra power
/// per unit of still-uncovered loss.
fn cover_greedy<F: Real>(losses: &[F], curves: &[PowerCurve<F>], allowance: F) -> Vec<bool> {
    let mut switches = vec![false; losses.len()];
    loop {
        let residual = residual_loss(&switches, losses);
        if qoe_met(residual, allowance) {
            return switches;
        }
        let need = residual - allowance;
        let pick = (0..losses.len())
            .filter(|&t| !switches[t] && losses[t] > F::zero())
            .map(|t| {
                let delta = curves[t].image_power() - curves[t].pose_power();
                (t, delta / losses[t].min(need))
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite ratios"));
        match pick {
            Some((t, _)) => switches[t] = true,
            None => return switches,
        }
    }
}

/// Best-improvement search over drops and one-for-one, one-for-two and
/// two-for-one swaps that keep the QoE budget and lower total power.
fn polish_qoe<F: Real>(mut switches: Vec<bool>, losses: &[F], curves: &[PowerCurve<F>], allowance: F) -> Vec<bool> {
    let n = losses.len();
    let delta: Vec<F> = curves.iter().map(|c| c.image_power() - c.pose_power()).collect();
    loop {
        let residual = residual_loss(&switches, losses);
        let ones: Vec<usize> = (0..n).filter(|&t| switches[t]).collect();
        let zeros: Vec<usize> = (0..n).filter(|&t| !switches[t]).collect();
        let mut best: Option<(F, Vec<usize>, Vec<usize>)> = None;
        let offer = |saving: F, off: Vec<usize>, on: Vec<usize>, best: &mut Option<(F, Vec<usize>, Vec<usize>)>| {
            if saving > F::zero() && best.as_ref().is_none_or(|b| saving > b.0) {
                *best = Some((saving, off, on));
            }
        };
        for (a, &i) in ones.iter().enumerate() {
            if qoe_met(residual + losses[i], allowance) {
                offer(delta[i], vec![i], vec![], &mut best);
            }
            for &j in &zeros {
                if qoe_met(residual + losses[i] - losses[j], allowance) {
                    offer(delta[i] - delta[j], vec![i], vec![j], &mut best);
                }
            }
            for (b, &j) in zeros.iter().enumerate() {
                for &m in &zeros[b + 1..] {
                    if qoe_met(residual + losses[i] - losses[j] - losses[m], allowance) {
                        offer(delta[i] - delta[j] - delta[m], vec![i], vec![j, m], &mut best);
                    }
                }
            }
            for &k in &ones[a + 1..] {
                for &j in &zeros {
                    if qoe_met(residual + losses[i] + losses[k] - losses[j], allowance) {
                        offer(delta[i] + delta[k] - delta[j], vec![i, k], vec![j], &mut best);
                    }
                }
            }
        }
        match best {
            Some((_, off, on)) => {
                for i in off {
                    switches[i] = false;
                }
                for j in on {
                    switches[j] = true;
                }
            }
            None => return switches,
        }
    }
}

/// Power-minimizing GSCLO under an average QoE constraint.
///
/// Powers are eliminated by constraint activation; the relaxed switches
/// are driven to binary by the same penalized difference-of-convex
/// iterations as APO, each step solved by bisection on the QoE multiplier.
/// The rounded pattern is repaired toward QoE feasibility (highest-loss
/// poses become uploads) and locally improved; the descending-loss and
/// greedy-cover patterns are improved the same way and the cheapest wins. A per-frame `mode`
/// returns the closed form instead.
pub fn qgs_solve<F: Real>(
    losses: &[F],
    gains: &[F],
    cfg: &ScenarioConfig<F>,
    qoe: &QoeSettings<F>,
    settings: &ApoSettings<F>,
) -> Result<SolveReport<F>> {
    let clock = Instant::now();
    check_losses(losses, gains)?;
    check_threshold(qoe.loss_threshold)?;
    settings.validate()?;
    let curves = power_curves(gains, cfg)?;
    let n = losses.len();
    let nf = F::count(n);

    if qoe.mode == QoeMode::PerFrame {
        let alloc = qgs_prime_closed_form(losses, gains, cfg, qoe.loss_threshold)?;
        let objective = alloc.mean_power();
        let mut report = SolveReport::new(alloc, objective, true);
        report.wall_time = clock.elapsed().as_secs_f64();
        return Ok(report);
    }

    let allowance = nf * qoe.loss_threshold;
    let mean_power = |x: &[F]| -> F { x.iter().zip(&curves).map(|(&v, c)| c.power(v)).sum::<F>() / nf };

    // Initial pattern: upload the highest losses until the QoE holds.
    let init = repair_qoe(vec![false; n], losses, allowance);
    let mut x: Vec<F> = init.iter().map(|&s| if s { F::one() } else { F::zero() }).collect();

    let max_delta = curves
        .iter()
        .map(|c| c.image_power() - c.pose_power())
        .fold(F::zero(), F::max);
    let mut rho = match settings.beta {
        Some(b) => F::one() / b,
        None => settings.penalty_scale * max_delta / nf,
    };
    let two = F::lit(2.0);
    let mut iterations = 0;
    let mut restarts = 0;
    let mut trajectory = Vec::new();
    let mut delta_x_trajectory = Vec::new();
    let mut binariness_trajectory = Vec::new();
    let penalized = |x: &[F], rho: F| mean_power(x) + rho * x.iter().map(|&v| v * (F::one() - v)).sum::<F>();
    trajectory.push(penalized(&x, rho));

    if losses.iter().any(|&l| l > qoe.loss_threshold) && qoe.loss_threshold > F::zero() {
        while iterations < settings.max_iterations {
            let base: Vec<F> = x.iter().map(|&s| rho * (F::one() - two * s)).collect();
            let (next, _) = qoe_knapsack(&base, losses, &curves, allowance, settings.dual_tol);
            iterations += 1;
            let dx = next.iter().zip(&x).map(|(&a, &b)| (a - b) * (a - b)).sum::<F>().sqrt();
            x = next;
            let gap = binariness_gap(&x);
            delta_x_trajectory.push(dx);
            binariness_trajectory.push(gap);
            trajectory.push(penalized(&x, rho));
            if dx <= settings.convergence_tol {
                if gap <= settings.binary_tol || restarts >= settings.max_restarts {
                    break;
                }
                rho *= settings.penalty_growth;
                restarts += 1;
                trajectory.clear();
                trajectory.push(penalized(&x, rho));
            }
        }
    }

    let rounded: Vec<bool> = x.iter().map(|&v| v >= F::lit(0.5)).collect();
    let total = |s: &[bool]| -> F { s.iter().zip(&curves).map(|(&u, c)| c.binary_power(u)).sum() };
    let mut switches = polish_qoe(repair_qoe(rounded, losses, allowance), losses, &curves, allowance);
    for start in [init, cover_greedy(losses, &curves, allowance)] {
        let candidate = polish_qoe(start, losses, &curves, allowance);
        if total(&candidate) < total(&switches) {
            switches = candidate;
        }
    }
    let alloc = binary_allocation(&switches, &curves)?;
    let feasible = qoe_met(residual_loss(&switches, losses), allowance);
    let objective = alloc.mean_power();
    let mut report = SolveReport::new(alloc, objective, feasible);
    report.objective_trajectory = trajectory;
    report.delta_x_trajectory = delta_x_trajectory;
    report.binariness_trajectory = binariness_trajectory;
    report.iterations = iterations;
    report.restarts = restarts;
    report.wall_time = clock.elapsed().as_secs_f64();
    Ok(report)
}

/// Per-robot zero-forcing gains `H_{k,t}`, indexed `[robot][frame]`.
pub fn effective_gain_sequences<F: Real>(channels: &[MultiAntennaChannel<F>]) -> Result<Vec<Vec<F>>> {
    let k = channels.first().map(|c| c.num_robots()).unwrap_or(0);
    let mut out = vec![Vec::with_capacity(channels.len()); k];
    for (t, ch) in channels.iter().enumerate() {
        if ch.num_robots() != k {
            return Err(GscloError::InvalidArgument(format!(
                "frame {t} has {} robots, expected {k}",
                ch.num_robots()
            )));
        }
        let zf = zf_effective_gains(ch).map_err(|e| match e {
            GscloError::RankDeficient { .. } => GscloError::RankDeficient { frame: t },
            other => other,
        })?;
        for (robot, g) in zf.gains.into_iter().enumerate() {
            out[robot].push(g);
        }
    }
    Ok(out)
}

/// Multi-robot GSCLO: zero-forcing decouples the robots, so each runs APO
/// on its own effective-gain sequence with its own budget `P`.
pub fn mgs_solve<F: Real>(
    per_robot_losses: &[Vec<F>],
    channels: &[MultiAntennaChannel<F>],
    cfg: &ScenarioConfig<F>,
    settings: &ApoSettings<F>,
) -> Result<Vec<SolveReport<F>>> {
    let gains = effective_gain_sequences(channels)?;
    check_len(gains.len(), per_robot_losses.len())?;
    per_robot_losses
        .iter()
        .zip(&gains)
        .map(|(losses, g)| apo_solve(losses, g, cfg, settings))
        .collect()
}

/// Mean GSMR loss of the all-pose allocation, the floor every robot should beat.
pub fn all_pose_loss<F: Real>(losses: &[F]) -> F {
    mean_loss_unchecked(&vec![F::zero(); losses.len()], losses)
}
