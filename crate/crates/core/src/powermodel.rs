//! Linear base-station power model with a single instantly available sleep
//! mode.
//!
//! While awake the station draws `P0 + m * P_tx`; asleep it draws `P_s`.
//! Sleeping for a fraction `1 - t` of the time forces the awake phase to
//! carry `sigma / t` bps/Hz. Sleep transitions cost no time or energy.

use crate::error::{Error, Result};
use crate::units::dbm_to_w;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerModelParams {
    p0_w: f64,
    m_slope: f64,
    p_sleep_w: f64,
    p_max_tx_w: f64,
}

impl PowerModelParams {
    pub fn new(p0_w: f64, m_slope: f64, p_sleep_w: f64, p_max_tx_w: f64) -> Result<Self> {
        if !(p_sleep_w >= 0.0 && p0_w > p_sleep_w && p0_w.is_finite()) {
            return Err(Error::domain(format!(
                "need p0_w ({p0_w}) > p_sleep_w ({p_sleep_w}) >= 0"
            )));
        }
        if !(m_slope > 0.0 && m_slope.is_finite()) {
            return Err(Error::domain(format!(
                "slope must be positive, got {m_slope}"
            )));
        }
        if !(p_max_tx_w > 0.0 && p_max_tx_w.is_finite()) {
            return Err(Error::domain(format!(
                "peak transmit power must be positive, got {p_max_tx_w}"
            )));
        }
        Ok(PowerModelParams {
            p0_w,
            m_slope,
            p_sleep_w,
            p_max_tx_w,
        })
    }

    pub fn p0_w(&self) -> f64 {
        self.p0_w
    }

    pub fn m_slope(&self) -> f64 {
        self.m_slope
    }

    pub fn p_sleep_w(&self) -> f64 {
        self.p_sleep_w
    }

    pub fn p_max_tx_w(&self) -> f64 {
        self.p_max_tx_w
    }

    /// Supply power while transmitting at peak output.
    pub fn p_max_supply_w(&self) -> f64 {
        self.p0_w + self.m_slope * self.p_max_tx_w
    }

    /// `P0 + m P_tx` without the peak-power check.
    #[inline]
    pub(crate) fn active_unchecked(&self, p_tx_w: f64) -> f64 {
        self.p0_w + self.m_slope * p_tx_w
    }

    /// `(1 - t) P_s + t (P0 + m P_tx)` without checks.
    #[inline]
    pub(crate) fn dtx_unchecked(&self, t: f64, p_tx_w: f64) -> f64 {
        (1.0 - t) * self.p_sleep_w + t * self.active_unchecked(p_tx_w)
    }
}

impl Default for PowerModelParams {
    /// 233 W standby, slope 5, 50 W sleep, 46 dBm peak.
    fn default() -> Self {
        PowerModelParams {
            p0_w: 233.0,
            m_slope: 5.0,
            p_sleep_w: 50.0,
            p_max_tx_w: dbm_to_w(46.0),
        }
    }
}

/// Resource share `mu` of link 1 and awake-time share `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    mu: f64,
    t: f64,
}

impl Allocation {
    /// Idle station asleep for the whole frame. This is the only allocation
    /// with `t = 0` and only arises when nothing has to be served.
    pub const ASLEEP: Allocation = Allocation { mu: 0.5, t: 0.0 };

    pub fn new(mu: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::domain(format!("mu must be in [0, 1], got {mu}")));
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::domain(format!("t must be in (0, 1], got {t}")));
        }
        Ok(Allocation { mu, t })
    }

    /// Always-on allocation with share `mu`.
    pub fn always_on(mu: f64) -> Result<Self> {
        Self::new(mu, 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

fn check_tx(p_tx_w: f64, pm: &PowerModelParams) -> Result<()> {
    if !(p_tx_w >= 0.0) {
        return Err(Error::domain(format!(
            "transmit power must be >= 0, got {p_tx_w}"
        )));
    }
    if p_tx_w > pm.p_max_tx_w {
        return Err(Error::PeakPower {
            requested_w: p_tx_w,
            max_w: pm.p_max_tx_w,
        });
    }
    Ok(())
}

pub fn supply_power_active(p_tx_w: f64, pm: &PowerModelParams) -> Result<f64> {
    check_tx(p_tx_w, pm)?;
    Ok(pm.active_unchecked(p_tx_w))
}

pub fn supply_power_dtx(t: f64, p_tx_active_w: f64, pm: &PowerModelParams) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t must be in (0, 1], got {t}")));
    }
    check_tx(p_tx_active_w, pm)?;
    Ok(pm.dtx_unchecked(t, p_tx_active_w))
}

/// Spectral efficiency the awake phase must carry.
pub fn dtx_spectral_efficiency(sigma: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t must be in (0, 1], got {t}")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    Ok(sigma / t)
}
