//! Robust GSCLO under channel-estimation error.
//!
//! With `h = h̃ + Δh`, `Δh ~ CN(0, ω²)`, the rate constraint becomes an
//! outage constraint `Γ_t(x_t, p_t) ≤ ε`. For a fixed switch pattern the
//! powers decouple into per-frame bisections; the switches are searched by
//! bisection-in-the-loop iterated local search (BILS).

use std::time::Instant;

use num_complex::Complex;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apo::{apo_solve, fits_budget, horizon_budget, ApoSettings};
use crate::channel::{outage_prob, sample_true_gain, achievable_rate};
use crate::config::ScenarioConfig;
use crate::error::{GscloError, Result};
use crate::num::Real;
use crate::objective::{check_len, mean_loss_unchecked, RATE_REL_TOL};
use crate::types::{Allocation, SolveReport};

/// Tunables of [`bils_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilsSettings<F> {
    /// Number of neighborhood samples `Ī`.
    pub max_outer_iterations: usize,
    /// Hamming radius `η` of the neighborhood.
    pub neighborhood_radius: usize,
    pub rng_seed: u64,
    /// Per-frame upper end of the power bisection. `None` uses the average
    /// budget `P`.
    pub power_cap: Option<F>,
}

impl<F: Real> Default for BilsSettings<F> {
    fn default() -> Self {
        Self {
            max_outer_iterations: 2000,
            neighborhood_radius: 5,
            rng_seed: 0,
            power_cap: None,
        }
    }
}

impl<F: Real> BilsSettings<F> {
    pub fn from_config(cfg: &ScenarioConfig<F>) -> Self {
        Self {
            neighborhood_radius: cfg.neighborhood_radius,
            rng_seed: cfg.rng_seed,
            ..Self::default()
        }
    }

    pub fn cap(&self, cfg: &ScenarioConfig<F>) -> F {
        self.power_cap.unwrap_or(cfg.power_budget)
    }

    fn validate(&self, frames: usize) -> Result<()> {
        if self.max_outer_iterations == 0 {
            return Err(GscloError::InvalidConfig("max_outer_iterations must be positive".into()));
        }
        if self.neighborhood_radius == 0 || self.neighborhood_radius > frames {
            return Err(GscloError::InvalidConfig(format!(
                "neighborhood_radius must lie in [1, {frames}]"
            )));
        }
        if let Some(cap) = self.power_cap {
            if !(cap > F::zero()) {
                return Err(GscloError::InvalidConfig("power_cap must be positive".into()));
            }
        }
        Ok(())
    }
}

const BISECTION_STEPS: usize = 200;

/// Smallest `p ∈ [0, cap]` with `Γ(x, p) ≤ ε`, or `None` when even the cap
/// violates the outage target.
pub fn min_power_outage<F: Real>(
    upload: bool,
    estimate: Complex<F>,
    omega2: F,
    epsilon: F,
    cfg: &ScenarioConfig<F>,
    cap: F,
) -> Result<Option<F>> {
    if !(epsilon > F::zero() && epsilon < F::one()) {
        return Err(GscloError::InvalidArgument("outage target must lie in (0, 1)".into()));
    }
    if !(cap > F::zero()) {
        return Err(GscloError::InvalidArgument("power cap must be positive".into()));
    }
    let ok = |p: F| -> Result<bool> { Ok(outage_prob(upload, p, estimate, omega2, cfg)? <= epsilon) };
    if !ok(cap)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (F::zero(), cap);
    let two = F::lit(2.0);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Outcome of the power subproblem for a fixed switch pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult<F> {
    pub feasible: bool,
    /// Minimum outage-constrained power per frame; the cap where unsolvable.
    pub powers: Vec<F>,
    /// Frames whose outage target cannot be met under the cap.
    pub capped_frames: Vec<usize>,
    pub total_power: F,
}

fn check_robust_inputs<F: Real>(n: usize, estimates: &[Complex<F>], omega2: &[F]) -> Result<()> {
    check_len(n, estimates.len())?;
    check_len(n, omega2.len())?;
    if n == 0 {
        return Err(GscloError::InvalidArgument("at least one frame is required".into()));
    }
    Ok(())
}

/// Solves the per-frame power bisections for `switches` and tests the
/// average budget.
pub fn feasibility_check<F: Real>(
    switches: &[bool],
    estimates: &[Complex<F>],
    omega2: &[F],
    cfg: &ScenarioConfig<F>,
    settings: &BilsSettings<F>,
) -> Result<FeasibilityResult<F>> {
    check_robust_inputs(switches.len(), estimates, omega2)?;
    let cap = settings.cap(cfg);
    let mut powers = Vec::with_capacity(switches.len());
    let mut capped_frames = Vec::new();
    for (t, &s) in switches.iter().enumerate() {
        match min_power_outage(s, estimates[t], omega2[t], cfg.outage_target, cfg, cap)? {
            Some(p) => powers.push(p),
            None => {
                powers.push(cap);
                capped_frames.push(t);
            }
        }
    }
    let total_power: F = powers.iter().copied().sum();
    let feasible = capped_frames.is_empty() && fits_budget(total_power, horizon_budget(switches.len(), cfg));
    Ok(FeasibilityResult {
        feasible,
        powers,
        capped_frames,
        total_power,
    })
}

/// Flips between 1 and `η` positions of `x`, chosen uniformly without
/// replacement; the flip count is uniform on `{1, …, η}`.
pub fn sample_neighborhood<R: Rng + ?Sized>(x: &[bool], eta: usize, rng: &mut R) -> Vec<bool> {
    let mut out = x.to_vec();
    if x.is_empty() {
        return out;
    }
    let eta = eta.clamp(1, x.len());
    let flips = rng.random_range(1..=eta);
    for t in index::sample(rng, x.len(), flips) {
        out[t] = !out[t];
    }
    out
}

/// Per-frame power of each switch value; `None` marks an unsupportable choice.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTable<F> {
    pub pose: Vec<Option<F>>,
    pub image: Vec<Option<F>>,
    /// Power charged to an unsupportable choice when measuring violation.
    pub cap: F,
}

impl<F: Real> PowerTable<F> {
    /// Outage-constrained table.
    pub fn outage(
        estimates: &[Complex<F>],
        omega2: &[F],
        cfg: &ScenarioConfig<F>,
        cap: F,
    ) -> Result<Self> {
        check_robust_inputs(estimates.len(), estimates, omega2)?;
        let mut pose = Vec::with_capacity(estimates.len());
        let mut image = Vec::with_capacity(estimates.len());
        for (h, &w) in estimates.iter().zip(omega2) {
            pose.push(min_power_outage(false, *h, w, cfg.outage_target, cfg, cap)?);
            image.push(min_power_outage(true, *h, w, cfg.outage_target, cfg, cap)?);
        }
        Ok(Self { pose, image, cap })
    }

    /// Deterministic activated-rate table.
    pub fn deterministic(gains: &[F], cfg: &ScenarioConfig<F>) -> Result<Self> {
        let curves = crate::apo::power_curves(gains, cfg)?;
        Ok(Self {
            pose: curves.iter().map(|c| Some(c.pose_power())).collect(),
            image: curves.iter().map(|c| Some(c.image_power())).collect(),
            cap: F::infinity(),
        })
    }

    pub fn len(&self) -> usize {
        self.pose.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pose.is_empty()
    }

    pub fn get(&self, t: usize, upload: bool) -> Option<F> {
        if upload {
            self.image[t]
        } else {
            self.pose[t]
        }
    }

    fn evaluate(&self, switches: &[bool], budget: F) -> Candidate<F> {
        let mut total = F::zero();
        let mut capped = 0;
        let powers: Vec<F> = switches
            .iter()
            .enumerate()
            .map(|(t, &s)| match self.get(t, s) {
                Some(p) => p,
                None => {
                    capped += 1;
                    self.cap
                }
            })
            .collect();
        for &p in &powers {
            total += p;
        }
        let feasible = capped == 0 && fits_budget(total, budget);
        Candidate {
            powers,
            capped,
            excess: (total - budget).max(F::zero()),
            feasible,
        }
    }
}

struct Candidate<F> {
    powers: Vec<F>,
    capped: usize,
    excess: F,
    feasible: bool,
}

impl<F: Real> Candidate<F> {
    /// Lexicographic (unsupportable frames, budget excess) comparison.
    fn violation_le(&self, other: &Self) -> bool {
        self.capped < other.capped || (self.capped == other.capped && self.excess <= other.excess)
    }
}

/// Iterated local search over switch patterns with a per-frame power table.
///
/// Follows Algorithm 2: each of the `max_outer_iterations` samples flips up
/// to `η` switches of the incumbent and is accepted iff it is feasible and
/// its mean loss does not exceed the incumbent's. While the incumbent is
/// itself infeasible, samples that do not increase the violation (number of
/// unsupportable frames, then budget excess) are accepted so the walk can
/// reach the feasible region. The trajectory records the incumbent's mean
/// loss after every sample once it is feasible.
pub fn iterated_local_search<F: Real>(
    losses: &[F],
    table: &PowerTable<F>,
    budget: F,
    start: &[bool],
    settings: &BilsSettings<F>,
) -> Result<SolveReport<F>> {
    let clock = Instant::now();
    check_len(losses.len(), table.len())?;
    check_len(losses.len(), start.len())?;
    settings.validate(losses.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.rng_seed);
    let loss_of = |s: &[bool]| -> F {
        let x: Vec<F> = s.iter().map(|&u| if u { F::one() } else { F::zero() }).collect();
        mean_loss_unchecked(&x, losses)
    };

    let mut x = start.to_vec();
    let mut inc = table.evaluate(&x, budget);
    let mut inc_loss = loss_of(&x);
    let mut trajectory = Vec::with_capacity(settings.max_outer_iterations);
    let mut accepted = 0;
    for _ in 0..settings.max_outer_iterations {
        let cand_x = sample_neighborhood(&x, settings.neighborhood_radius, &mut rng);
        let cand = table.evaluate(&cand_x, budget);
        let cand_loss = loss_of(&cand_x);
        let accept = if inc.feasible {
            cand.feasible && cand_loss <= inc_loss
        } else {
            cand.feasible || cand.violation_le(&inc)
        };
        if accept {
            x = cand_x;
            inc = cand;
            inc_loss = cand_loss;
            accepted += 1;
        }
        if inc.feasible {
            trajectory.push(inc_loss);
        }
    }

    let allocation = Allocation::from_switches(&x, inc.powers)?;
    let mut report = SolveReport::new(allocation, inc_loss, inc.feasible);
    report.objective_trajectory = trajectory;
    report.iterations = accepted;
    report.wall_time = clock.elapsed().as_secs_f64();
    Ok(report)
}

/// BILS from an explicit warm start (usually the APO switches computed on
/// the estimated gains).
pub fn bils_solve<F: Real>(
    losses: &[F],
    estimates: &[Complex<F>],
    omega2: &[F],
    cfg: &ScenarioConfig<F>,
    settings: &BilsSettings<F>,
    warm_start: &[bool],
) -> Result<SolveReport<F>> {
    check_robust_inputs(losses.len(), estimates, omega2)?;
    let table = PowerTable::outage(estimates, omega2, cfg, settings.cap(cfg))?;
    iterated_local_search(losses, &table, horizon_budget(losses.len(), cfg), warm_start, settings)
}

/// APO on the estimated gains followed by BILS.
pub fn robust_gsclo<F: Real>(
    losses: &[F],
    estimates: &[Complex<F>],
    omega2: &[F],
    cfg: &ScenarioConfig<F>,
    apo: &ApoSettings<F>,
    settings: &BilsSettings<F>,
) -> Result<SolveReport<F>> {
    let clock = Instant::now();
    let gains: Vec<F> = estimates.iter().map(|h| h.norm_sqr()).collect();
    let warm = apo_solve(losses, &gains, cfg, apo)?;
    let mut report = bils_solve(losses, estimates, omega2, cfg, settings, &warm.allocation.switches())?;
    report.wall_time = clock.elapsed().as_secs_f64();
    Ok(report)
}

/// Monte Carlo delivery statistics of an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketLossReport<F> {
    /// Outage frequency of each frame over the runs.
    pub per_frame_outage: Vec<F>,
    /// Outage frequency over all frames and runs.
    pub outage_rate: F,
    /// Mean GSMR loss when an outaged upload falls back to the GS render.
    pub realized_mean_loss: F,
    /// Delivered payload bits per run, averaged over runs.
    pub delivered_bits: F,
    pub runs: usize,
}

/// Draws `runs` true channels per frame and counts deliveries. A frame is
/// in outage when its realized slot capacity misses the payload; an
/// outaged upload costs its GS loss as if only the pose had been sent.
pub fn evaluate_packet_loss<F: Real, R: Rng + ?Sized>(
    alloc: &Allocation<F>,
    losses: &[F],
    estimates: &[Complex<F>],
    omega2: &[F],
    cfg: &ScenarioConfig<F>,
    runs: usize,
    rng: &mut R,
) -> Result<PacketLossReport<F>> {
    check_len(losses.len(), alloc.len())?;
    check_robust_inputs(losses.len(), estimates, omega2)?;
    if runs == 0 {
        return Err(GscloError::InvalidArgument("runs must be positive".into()));
    }
    let n = losses.len();
    let switches = alloc.switches();
    let rel = F::lit(RATE_REL_TOL);
    let mut outages = vec![0usize; n];
    let mut loss_sum = F::zero();
    let mut bits_sum = F::zero();
    for _ in 0..runs {
        let mut run_loss = F::zero();
        for t in 0..n {
            let gain = sample_true_gain(estimates[t], omega2[t], rng);
            let need = if switches[t] { cfg.image_bits } else { cfg.pose_bits };
            let carried = cfg.slot_duration * achievable_rate(alloc.p[t], gain, cfg)?;
            let delivered = carried >= need - rel * need;
            if delivered {
                bits_sum += need;
            } else {
                outages[t] += 1;
            }
            if !(switches[t] && delivered) {
                run_loss += losses[t];
            }
        }
        loss_sum += run_loss / F::count(n);
    }
    let runs_f = F::count(runs);
    let per_frame_outage: Vec<F> = outages.iter().map(|&k| F::count(k) / runs_f).collect();
    let outage_rate = F::count(outages.iter().sum()) / (runs_f * F::count(n));
    Ok(PacketLossReport {
        per_frame_outage,
        outage_rate,
        realized_mean_loss: loss_sum / runs_f,
        delivered_bits: bits_sum / runs_f,
        runs,
    })
}
