//! Solver registry.

use std::fmt;
use std::str::FromStr;

use gsclo::apo::{apo_solve, ranking_init, ApoSettings};
use gsclo::baselines::{
    exhaustive_oracle, local_search_pgs, max_img, maxmin_fairness, relax_round, robo_gs, robo_mr,
    waterfill_maxrate, OracleVariant,
};
use gsclo::extensions::{qgs_prime_closed_form, qgs_solve, QoeSettings};
use gsclo::robust::{robust_gsclo, BilsSettings};
use gsclo::types::{gains_of, losses_of};
use gsclo::{Allocation64, FrameTrace64, GscloError, ScenarioConfig64};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SolverId {
    Apo,
    Ranking,
    MaxRate,
    Fairness,
    Rounding,
    Search,
    MaxImg,
    RoboMr,
    RoboGs,
    Bils,
    Oracle,
    Qgs,
    QgsPrime,
}

impl SolverId {
    pub const ALL: [SolverId; 13] = [
        SolverId::Apo,
        SolverId::Ranking,
        SolverId::MaxRate,
        SolverId::Fairness,
        SolverId::Rounding,
        SolverId::Search,
        SolverId::MaxImg,
        SolverId::RoboMr,
        SolverId::RoboGs,
        SolverId::Bils,
        SolverId::Oracle,
        SolverId::Qgs,
        SolverId::QgsPrime,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverId::Apo => "apo",
            SolverId::Ranking => "ranking",
            SolverId::MaxRate => "maxrate",
            SolverId::Fairness => "fairness",
            SolverId::Rounding => "rounding",
            SolverId::Search => "search",
            SolverId::MaxImg => "maximg",
            SolverId::RoboMr => "robomr",
            SolverId::RoboGs => "robogs",
            SolverId::Bils => "bils",
            SolverId::Oracle => "oracle",
            SolverId::Qgs => "qgs",
            SolverId::QgsPrime => "qgs_prime",
        }
    }

    /// Minimizes power under a loss threshold instead of loss under a budget.
    pub fn is_qoe(self) -> bool {
        matches!(self, SolverId::Qgs | SolverId::QgsPrime)
    }

    /// Respects the average power budget by construction.
    pub fn is_budgeted(self) -> bool {
        !self.is_qoe() && self != SolverId::RoboMr
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        SolverId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = SolverId::ALL.iter().map(|id| id.as_str()).collect();
                CliError::Spec(format!("unknown solver `{s}` (expected one of {})", known.join(", ")))
            })
    }
}

impl TryFrom<String> for SolverId {
    type Error = CliError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SolverId> for String {
    fn from(id: SolverId) -> String {
        id.as_str().to_owned()
    }
}

/// Settings shared by every solve of one run.
#[derive(Debug, Clone, Copy)]
pub struct SolveContext {
    pub apo: ApoSettings<f64>,
    pub bils: BilsSettings<f64>,
    pub loss_threshold: f64,
}

/// Channel estimates and uncertainty of a trace; frames without them are
/// treated as known channels with a real estimate `√g`.
pub fn channel_estimates(trace: &[FrameTrace64]) -> (Vec<Complex<f64>>, Vec<f64>) {
    trace
        .iter()
        .map(|f| match (f.estimate, f.omega2) {
            (Some(h), Some(w)) => (h, w),
            _ => (Complex::new(f.gain.sqrt(), 0.0), 0.0),
        })
        .unzip()
}

pub fn has_uncertainty(trace: &[FrameTrace64]) -> bool {
    trace.iter().any(|f| f.omega2.is_some_and(|w| w > 0.0))
}

/// Runs one solver on `trace` under `cfg`.
pub fn solve(id: SolverId, trace: &[FrameTrace64], cfg: &ScenarioConfig64, ctx: &SolveContext) -> Result<Allocation64> {
    let losses = losses_of(trace);
    let gains = gains_of(trace);
    let cfg = &cfg.with_frames(trace.len());
    let alloc = match id {
        SolverId::Apo => apo_solve(&losses, &gains, cfg, &ctx.apo)?.allocation,
        SolverId::Ranking => ranking_init(&losses, &gains, cfg)?,
        SolverId::MaxRate => waterfill_maxrate(&gains, cfg)?.allocation,
        SolverId::Fairness => maxmin_fairness(&gains, cfg)?.allocation,
        SolverId::Rounding => relax_round(&losses, &gains, cfg)?,
        SolverId::Search => {
            let r = local_search_pgs(&losses, &gains, cfg, &ctx.bils)?;
            if !r.feasible {
                return Err(GscloError::Infeasible("local search found no feasible pattern".into()).into());
            }
            r.allocation
        }
        SolverId::MaxImg => max_img(&gains, cfg)?,
        SolverId::RoboMr => robo_mr(&gains, cfg)?,
        SolverId::RoboGs => robo_gs(&gains, cfg)?,
        SolverId::Bils => {
            let (est, omega2) = channel_estimates(trace);
            let r = robust_gsclo(&losses, &est, &omega2, cfg, &ctx.apo, &ctx.bils)?;
            if !r.feasible {
                return Err(GscloError::Infeasible("no pattern meets the outage target".into()).into());
            }
            r.allocation
        }
        SolverId::Oracle => {
            if has_uncertainty(trace) {
                let (est, omega2) = channel_estimates(trace);
                let variant = OracleVariant::PGsPrime {
                    estimates: &est,
                    omega2: &omega2,
                    power_cap: ctx.bils.cap(cfg),
                };
                exhaustive_oracle(&losses, cfg, variant)?
            } else {
                exhaustive_oracle(&losses, cfg, OracleVariant::PGs { gains: &gains })?
            }
        }
        SolverId::Qgs => {
            qgs_solve(&losses, &gains, cfg, &QoeSettings::average(ctx.loss_threshold), &ctx.apo)?.allocation
        }
        SolverId::QgsPrime => qgs_prime_closed_form(&losses, &gains, cfg, ctx.loss_threshold)?,
    };
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in SolverId::ALL {
            assert_eq!(id.as_str().parse::<SolverId>().unwrap(), id);
        }
        assert!("apo2".parse::<SolverId>().is_err());
    }

    #[test]
    fn every_solver_runs_on_a_small_trace() {
        let trace: Vec<FrameTrace64> = [0.1, 0.01, 0.2, 0.015, 0.05, 0.3]
            .iter()
            .enumerate()
            .map(|(t, &l)| FrameTrace64::new(t + 1, l, 1e-6 * (1.0 + t as f64)))
            .collect();
        let cfg = ScenarioConfig64::default().with_budget(20e-3);
        let ctx = SolveContext {
            apo: ApoSettings::default(),
            bils: BilsSettings { max_outer_iterations: 100, neighborhood_radius: 3, ..BilsSettings::default() },
            loss_threshold: 0.03,
        };
        for id in SolverId::ALL {
            let a = solve(id, &trace, &cfg, &ctx).unwrap();
            assert_eq!(a.len(), trace.len(), "{id}");
            if id.is_budgeted() {
                let total: f64 = a.p.iter().sum();
                assert!(total <= 6.0 * 20e-3 * (1.0 + 1e-9), "{id}");
            }
        }
    }
}
