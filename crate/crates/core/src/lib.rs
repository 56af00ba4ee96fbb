//! Minimum supply power of a two-user downlink base station.
//!
//! The crate models a base station serving two users at a common
//! guaranteed rate and finds the allocation of bandwidth share, transmit
//! power and sleep time that minimizes its mains power draw. Five policies
//! are compared over Monte-Carlo user drops:
//!
//! * constant peak transmit power,
//! * a conventional load-proportional station ("SOTA"),
//! * resource sharing with power control (RS-PC),
//! * full-power transmission with sleep (ON/OFF DTX),
//! * the joint optimum with sharing, power control and sleep (RS-PC-DTX).

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod linkmodel;
pub mod montecarlo;
pub mod optimizer;
pub mod output;
pub mod powermodel;
pub mod schemes;
pub mod units;

pub use channel::{ChannelRealization, GeometryParams, PathlossModel, ShadowingParams};
pub use error::{Error, Result};
pub use linkmodel::{QosTarget, TxPower, Weighting};
pub use montecarlo::{GainReport, SimulationConfig, SweepCurve, SweepPoint};
pub use optimizer::{OptimalAllocation, OptimizerSettings};
pub use powermodel::{Allocation, PowerModelParams};
pub use schemes::{SchemeId, SchemeResult, SotaLoad};
