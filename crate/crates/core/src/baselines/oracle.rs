//! Exhaustive enumeration of switch patterns for short horizons.

use num_complex::Complex;

use crate::apo::{fits_budget, horizon_budget};
use crate::config::ScenarioConfig;
use crate::error::{GscloError, Result};
use crate::num::Real;
use crate::objective::check_len;
use crate::robust::PowerTable;
use crate::types::Allocation;

/// Longest horizon the oracle accepts.
pub const ORACLE_MAX_FRAMES: usize = 20;

/// Problem solved by [`exhaustive_oracle`].
#[derive(Debug, Clone, Copy)]
pub enum OracleVariant<'a, F> {
    /// Minimize mean loss under the average budget, known channels.
    PGs { gains: &'a [F] },
    /// Minimize mean power subject to `(1/T)ΣL_t(1−x_t) ≤ L_th`.
    QGs { gains: &'a [F], loss_threshold: F },
    /// Minimize mean power subject to `L_t(1−x_t) ≤ L_th` for every frame.
    QGsPrime { gains: &'a [F], loss_threshold: F },
    /// Minimize mean loss under outage constraints and the average budget.
    PGsPrime {
        estimates: &'a [Complex<F>],
        omega2: &'a [F],
        power_cap: F,
    },
}

/// Optimal allocation of the chosen variant, or `Infeasible` when no
/// pattern satisfies its constraints.
///
/// Loss-minimizing variants break ties by lower total power; power-minimizing
/// ones by lower loss, then by the smaller pattern index.
pub fn exhaustive_oracle<F: Real>(
    losses: &[F],
    cfg: &ScenarioConfig<F>,
    variant: OracleVariant<'_, F>,
) -> Result<Allocation<F>> {
    let n = losses.len();
    if n == 0 {
        return Err(GscloError::InvalidArgument("at least one frame is required".into()));
    }
    if n > ORACLE_MAX_FRAMES {
        return Err(GscloError::ProblemTooLarge {
            frames: n,
            limit: ORACLE_MAX_FRAMES,
        });
    }
    let table = match variant {
        OracleVariant::PGs { gains }
        | OracleVariant::QGs { gains, .. }
        | OracleVariant::QGsPrime { gains, .. } => {
            check_len(n, gains.len())?;
            PowerTable::deterministic(gains, cfg)?
        }
        OracleVariant::PGsPrime {
            estimates,
            omega2,
            power_cap,
        } => {
            check_len(n, estimates.len())?;
            PowerTable::outage(estimates, omega2, cfg, power_cap)?
        }
    };
    let budget = horizon_budget(n, cfg);
    let threshold = match variant {
        OracleVariant::QGs { loss_threshold, .. } | OracleVariant::QGsPrime { loss_threshold, .. } => {
            if !(loss_threshold >= F::zero()) {
                return Err(GscloError::InvalidArgument("loss threshold must be nonnegative".into()));
            }
            Some(loss_threshold)
        }
        _ => None,
    };
    let minimize_power = threshold.is_some();
    let tf = F::count(n);

    let mut best: Option<(u32, F, F)> = None;
    'patterns: for mask in 0u32..(1u32 << n) {
        let mut total = F::zero();
        let mut residual = F::zero();
        for (t, &loss) in losses.iter().enumerate() {
            let upload = mask >> t & 1 == 1;
            match table.get(t, upload) {
                Some(p) => total += p,
                None => continue 'patterns,
            }
            if !upload {
                residual += loss;
                if let (OracleVariant::QGsPrime { .. }, Some(th)) = (variant, threshold) {
                    if loss > th {
                        continue 'patterns;
                    }
                }
            }
        }
        let mean_loss = residual / tf;
        let feasible = match variant {
            OracleVariant::PGs { .. } | OracleVariant::PGsPrime { .. } => fits_budget(total, budget),
            OracleVariant::QGs { .. } => mean_loss <= threshold.unwrap_or_else(F::zero),
            OracleVariant::QGsPrime { .. } => true,
        };
        if !feasible {
            continue;
        }
        let (key, tie) = if minimize_power { (total, mean_loss) } else { (mean_loss, total) };
        let better = match best {
            None => true,
            Some((_, bk, bt)) => key < bk || (key == bk && tie < bt),
        };
        if better {
            best = Some((mask, key, tie));
        }
    }

    let (mask, _, _) = best.ok_or_else(|| GscloError::Infeasible("no switch pattern is feasible".into()))?;
    let switches: Vec<bool> = (0..n).map(|t| mask >> t & 1 == 1).collect();
    let p = switches
        .iter()
        .enumerate()
        .map(|(t, &s)| table.get(t, s).expect("feasible pattern has powers"))
        .collect();
    Allocation::from_switches(&switches, p)
}
