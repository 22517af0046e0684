use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{GscloError, Result};
use crate::num::Real;

/// One frame of a GS trace: the loss saved by uploading the image and the
/// channel seen by the uplink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTrace<F> {
    /// 1-based frame number.
    pub frame_index: usize,
    pub gs_loss: F,
    /// Linear channel gain `|h_t|²` used by deterministic solvers.
    pub gain: F,
    pub estimate: Option<Complex<F>>,
    /// Estimation-error variance `ω²`.
    pub omega2: Option<F>,
    /// Robot pose `(a, b, θ)`.
    pub pose: Option<[F; 3]>,
}

impl<F: Real> FrameTrace<F> {
    pub fn new(frame_index: usize, gs_loss: F, gain: F) -> Self {
        Self {
            frame_index,
            gs_loss,
            gain,
            estimate: None,
            omega2: None,
            pose: None,
        }
    }

    pub fn with_uncertainty(mut self, estimate: Complex<F>, omega2: F) -> Self {
        self.estimate = Some(estimate);
        self.omega2 = Some(omega2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gs_loss >= F::zero()) || !self.gs_loss.is_finite() {
            return Err(GscloError::Trace(format!(
                "frame {}: gs_loss must be finite and nonnegative",
                self.frame_index
            )));
        }
        if !(self.gain >= F::zero()) || !self.gain.is_finite() {
            return Err(GscloError::Trace(format!(
                "frame {}: gain must be finite and nonnegative",
                self.frame_index
            )));
        }
        if let Some(w) = self.omega2 {
            if !(w >= F::zero()) {
                return Err(GscloError::Trace(format!(
                    "frame {}: omega2 must be nonnegative",
                    self.frame_index
                )));
            }
            if let Some(h) = self.estimate {
                let est_gain = h.norm_sqr();
                let tol = F::lit(1e-9) * est_gain.max(self.gain);
                if w == F::zero() && (est_gain - self.gain).abs() > tol {
                    return Err(GscloError::Trace(format!(
                        "frame {}: estimate gain disagrees with gain while omega2 = 0",
                        self.frame_index
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-frame GS losses of a trace, in frame order.
pub fn losses_of<F: Real>(trace: &[FrameTrace<F>]) -> Vec<F> {
    trace.iter().map(|f| f.gs_loss).collect()
}

/// Per-frame channel gains of a trace, in frame order.
pub fn gains_of<F: Real>(trace: &[FrameTrace<F>]) -> Vec<F> {
    trace.iter().map(|f| f.gain).collect()
}

/// Content switches `x` and transmit powers `p` for every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct Allocation<F> {
    pub x: Vec<F>,
    pub p: Vec<F>,
    pub is_binary: bool,
}

impl<F: Real> Allocation<F> {
    pub fn relaxed(x: Vec<F>, p: Vec<F>) -> Result<Self> {
        Self::checked(x, p, false)
    }

    pub fn binary(x: Vec<F>, p: Vec<F>) -> Result<Self> {
        Self::checked(x, p, true)
    }

    /// Binary allocation from upload decisions.
    pub fn from_switches(switches: &[bool], p: Vec<F>) -> Result<Self> {
        let x = switches
            .iter()
            .map(|&s| if s { F::one() } else { F::zero() })
            .collect();
        Self::binary(x, p)
    }

    fn checked(x: Vec<F>, p: Vec<F>, is_binary: bool) -> Result<Self> {
        if x.len() != p.len() {
            return Err(GscloError::LengthMismatch {
                expected: x.len(),
                actual: p.len(),
            });
        }
        if let Some(t) = x.iter().position(|&v| !(v >= F::zero() && v <= F::one())) {
            return Err(GscloError::InvalidArgument(format!(
                "x[{t}] outside [0, 1]"
            )));
        }
        if is_binary {
            if let Some(t) = x.iter().position(|&v| v != F::zero() && v != F::one()) {
                return Err(GscloError::InvalidArgument(format!(
                    "x[{t}] is not binary"
                )));
            }
        }
        if let Some(t) = p.iter().position(|&v| !(v >= F::zero())) {
            return Err(GscloError::InvalidArgument(format!("p[{t}] is negative")));
        }
        Ok(Self { x, p, is_binary })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn switches(&self) -> Vec<bool> {
        self.x.iter().map(|&v| v >= F::lit(0.5)).collect()
    }

    pub fn upload_count(&self) -> usize {
        self.x.iter().filter(|&&v| v == F::one()).count()
    }

    pub fn mean_power(&self) -> F {
        if self.p.is_empty() {
            return F::zero();
        }
        self.p.iter().copied().sum::<F>() / F::count(self.p.len())
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: Deserialize<'de>"))]
pub struct SolveReport<F> {
    pub allocation: Allocation<F>,
    /// Mean GSMR loss, or mean power for the power-minimization problems.
    pub objective: F,
    pub objective_trajectory: Vec<F>,
    /// `‖x⁽ⁿ⁾ − x⁽ⁿ⁻¹⁾‖` per DC iteration; empty for non-DC solvers.
    pub delta_x_trajectory: Vec<F>,
    /// `(1/T)Σ x_t(1 − x_t)` per DC iteration; empty for non-DC solvers.
    pub binariness_trajectory: Vec<F>,
    pub iterations: usize,
    /// Number of times the penalty was strengthened and the DC loop resumed.
    pub restarts: usize,
    pub feasible: bool,
    /// Seconds spent inside the solver.
    pub wall_time: f64,
}

impl<F: Real> SolveReport<F> {
    pub(crate) fn new(allocation: Allocation<F>, objective: F, feasible: bool) -> Self {
        Self {
            allocation,
            objective,
            objective_trajectory: Vec::new(),
            delta_x_trajectory: Vec::new(),
            binariness_trajectory: Vec::new(),
            iterations: 0,
            restarts: 0,
            feasible,
            wall_time: 0.0,
        }
    }
}
