//! The five allocation policies compared by the simulator.
//!
//! Every policy maps one drop and one rate target to a [`SchemeResult`].
//! A policy in outage cannot meet the rate within the peak transmit power;
//! its result then reports the station saturated at peak output and the
//! caller is expected to leave it out of averages.

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linkmodel::QosTarget;
use crate::optimizer::{optimal_mu, optimal_mu_t, OptimizerSettings};
use crate::powermodel::{Allocation, PowerModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    ConstMax,
    Sota,
    RsPc,
    OnOffDtx,
    RsPcDtx,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::ConstMax,
        SchemeId::Sota,
        SchemeId::RsPc,
        SchemeId::OnOffDtx,
        SchemeId::RsPcDtx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::ConstMax => "CONST_MAX",
            SchemeId::Sota => "SOTA",
            SchemeId::RsPc => "RS_PC",
            SchemeId::OnOffDtx => "ONOFF_DTX",
            SchemeId::RsPcDtx => "RS_PC_DTX",
        }
    }

    /// Policies that actually have to deliver the rate (all but the two
    /// reference consumption curves).
    pub fn serves_qos(self) -> bool {
        matches!(
            self,
            SchemeId::RsPc | SchemeId::OnOffDtx | SchemeId::RsPcDtx
        )
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == norm)
            .ok_or_else(|| Error::config("schemes", format!("unknown scheme `{s}`")))
    }
}

/// How the conventional station's load is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SotaLoad {
    /// Fraction of time a full-power station without power control needs,
    /// `t1 + t2` of the ON/OFF policy.
    #[default]
    OnOffOccupancy,
    /// Least transmit power with sharing and power control, relative to
    /// the peak.
    TxPowerFraction,
}

impl SotaLoad {
    pub fn name(self) -> &'static str {
        match self {
            SotaLoad::OnOffOccupancy => "onoff_occupancy",
            SotaLoad::TxPowerFraction => "tx_power_fraction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "onoff_occupancy" => Some(SotaLoad::OnOffOccupancy),
            "tx_power_fraction" => Some(SotaLoad::TxPowerFraction),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeResult {
    pub scheme: SchemeId,
    pub p_supply_w: f64,
    pub p_tx_w: f64,
    pub allocation: Allocation,
    pub outage: bool,
}

impl SchemeResult {
    fn saturated(scheme: SchemeId, mu: f64, pm: &PowerModelParams) -> Self {
        SchemeResult {
            scheme,
            p_supply_w: pm.p_max_supply_w(),
            p_tx_w: pm.p_max_tx_w(),
            allocation: Allocation::always_on(mu.clamp(0.0, 1.0)).expect("mu clamped"),
            outage: true,
        }
    }
}

/// Everything besides the drop and the rate that a policy needs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SchemeContext {
    pub pm: PowerModelParams,
    pub settings: OptimizerSettings,
    pub sota_load: SotaLoad,
}

/// Full-band rate of each link at peak power, in bps/Hz.
pub fn peak_spectral_efficiency(r: &ChannelRealization, pm: &PowerModelParams) -> (f64, f64) {
    let c = |g: f64| (g * pm.p_max_tx_w() / r.noise_w).ln_1p() / std::f64::consts::LN_2;
    (c(r.g1), c(r.g2))
}

/// Active-time fractions `(t1, t2)` a full-power, full-band station needs
/// to serve each user in turn.
pub fn onoff_time_shares(
    r: &ChannelRealization,
    qos: &QosTarget,
    pm: &PowerModelParams,
) -> (f64, f64) {
    let (c1, c2) = peak_spectral_efficiency(r, pm);
    (qos.sigma_min() / c1, qos.sigma_min() / c2)
}

/// Supply power of the conventional station at `load` in `[0, 1]`.
pub fn sota_supply(load: f64, pm: &PowerModelParams) -> f64 {
    let half = 0.5 * pm.p_max_supply_w();
    half + load * half
}

pub fn eval_const_max(
    r: &ChannelRealization,
    qos: &QosTarget,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    let pm = &ctx.pm;
    let (mu, p_tx) = optimal_mu(qos.sigma_min(), r.g1, r.g2, r.noise_w, &ctx.settings)?;
    Ok(SchemeResult {
        scheme: SchemeId::ConstMax,
        p_supply_w: pm.p_max_supply_w(),
        p_tx_w: pm.p_max_tx_w(),
        allocation: Allocation::always_on(mu.mu())?,
        outage: !p_tx.within(pm.p_max_tx_w()),
    })
}

pub fn eval_sota(
    r: &ChannelRealization,
    qos: &QosTarget,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    let pm = &ctx.pm;
    let (mu, load) = match ctx.sota_load {
        SotaLoad::OnOffOccupancy => {
            let (t1, t2) = onoff_time_shares(r, qos, pm);
            let load = t1 + t2;
            let mu = if load > 0.0 { t1 / load } else { 0.5 };
            (mu, load)
        }
        SotaLoad::TxPowerFraction => {
            let (mu, p_tx) = optimal_mu(qos.sigma_min(), r.g1, r.g2, r.noise_w, &ctx.settings)?;
            (mu.mu(), p_tx.or_inf() / pm.p_max_tx_w())
        }
    };
    if !(load <= 1.0) {
        return Ok(SchemeResult::saturated(SchemeId::Sota, mu, pm));
    }
    Ok(SchemeResult {
        scheme: SchemeId::Sota,
        p_supply_w: sota_supply(load, pm),
        p_tx_w: load * pm.p_max_tx_w(),
        allocation: Allocation::always_on(mu)?,
        outage: false,
    })
}

pub fn eval_rs_pc(
    r: &ChannelRealization,
    qos: &QosTarget,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    let pm = &ctx.pm;
    let (mu, p_tx) = optimal_mu(qos.sigma_min(), r.g1, r.g2, r.noise_w, &ctx.settings)?;
    match p_tx.watts().filter(|&p| p <= pm.p_max_tx_w()) {
        Some(p) => Ok(SchemeResult {
            scheme: SchemeId::RsPc,
            p_supply_w: pm.active_unchecked(p),
            p_tx_w: p,
            allocation: Allocation::always_on(mu.mu())?,
            outage: false,
        }),
        None => Ok(SchemeResult::saturated(SchemeId::RsPc, mu.mu(), pm)),
    }
}

pub fn eval_onoff_dtx(
    r: &ChannelRealization,
    qos: &QosTarget,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    let pm = &ctx.pm;
    if qos.sigma_min() == 0.0 {
        return Ok(SchemeResult {
            scheme: SchemeId::OnOffDtx,
            p_supply_w: pm.p_sleep_w(),
            p_tx_w: 0.0,
            allocation: Allocation::ASLEEP,
            outage: false,
        });
    }
    let (t1, t2) = onoff_time_shares(r, qos, pm);
    let t = t1 + t2;
    let mu = t1 / t;
    if !(t <= 1.0) {
        return Ok(SchemeResult::saturated(SchemeId::OnOffDtx, mu, pm));
    }
    Ok(SchemeResult {
        scheme: SchemeId::OnOffDtx,
        p_supply_w: pm.dtx_unchecked(t, pm.p_max_tx_w()),
        p_tx_w: pm.p_max_tx_w(),
        allocation: Allocation::new(mu, t)?,
        outage: false,
    })
}

pub fn eval_rs_pc_dtx(
    r: &ChannelRealization,
    qos: &QosTarget,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    let pm = &ctx.pm;
    let sol = optimal_mu_t(qos.sigma_min(), r, pm, &ctx.settings)?;
    if !sol.feasible {
        return Ok(SchemeResult::saturated(
            SchemeId::RsPcDtx,
            sol.allocation.mu(),
            pm,
        ));
    }
    Ok(SchemeResult {
        scheme: SchemeId::RsPcDtx,
        p_supply_w: sol.p_supply_w,
        p_tx_w: sol.p_tx.watts().expect("feasible power is finite"),
        allocation: sol.allocation,
        outage: false,
    })
}

pub fn evaluate(
    scheme: SchemeId,
    r: &ChannelRealization,
    qos: &QosTarget,
    ctx: &SchemeContext,
) -> Result<SchemeResult> {
    match scheme {
        SchemeId::ConstMax => eval_const_max(r, qos, ctx),
        SchemeId::Sota => eval_sota(r, qos, ctx),
        SchemeId::RsPc => eval_rs_pc(r, qos, ctx),
        SchemeId::OnOffDtx => eval_onoff_dtx(r, qos, ctx),
        SchemeId::RsPcDtx => eval_rs_pc_dtx(r, qos, ctx),
    }
}
