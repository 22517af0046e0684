//! Joint content switching and transmit-power allocation for
//! Gaussian-splatting mixed-reality uplinks.
//!
//! A robot streams either a full camera image or only its pose every frame.
//! With a pose, the server renders the view from its Gaussian-splatting
//! model and pays the per-frame GS loss `L_t`; with an image it pays
//! nothing but spends far more transmit power. The solvers in this crate
//! choose the switches `x_t ∈ {0, 1}` and powers `p_t` under rate and
//! average-power constraints:
//!
//! * [`apo`]: ranking initialization plus penalized difference-of-convex
//!   iterations for the deterministic problem;
//! * [`robust`]: outage-constrained powers and bisection-in-the-loop
//!   iterated local search under channel-estimation error;
//! * [`extensions`]: power minimization under a QoE constraint, the GS power
//!   saving factor, and the zero-forcing multi-robot problem;
//! * [`baselines`]: channel-only allocators and an exhaustive oracle.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` / `*32`
//! aliases below name the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a > b)` deliberately rejects NaN.

pub mod apo;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod error;
pub mod extensions;
pub mod image;
pub mod num;
pub mod objective;
pub mod robust;
pub mod trace;
pub mod types;

pub use config::ScenarioConfig;
pub use error::{GscloError, Result};
pub use num::Real;
pub use types::{Allocation, FrameTrace, SolveReport};

pub type ScenarioConfig64 = ScenarioConfig<f64>;
pub type ScenarioConfig32 = ScenarioConfig<f32>;
pub type Allocation64 = Allocation<f64>;
pub type Allocation32 = Allocation<f32>;
pub type FrameTrace64 = FrameTrace<f64>;
pub type FrameTrace32 = FrameTrace<f32>;
pub type SolveReport64 = SolveReport<f64>;
pub type SolveReport32 = SolveReport<f32>;
pub type Image64 = image::Image<f64>;
pub type Image32 = image::Image<f32>;
