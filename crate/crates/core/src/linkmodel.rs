//! Shannon-capacity link relations for the two-user downlink.
//!
//! Link `i` occupying a share `mu_i` of the band at power `P_i` delivers
//! `mu_i * log2(1 + G_i P_i / N)` bps/Hz. Inverting this for a guaranteed
//! spectral efficiency on both links and summing the weighted link powers
//! gives the system transmit power minimized by [`crate::optimizer`].

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A transmit power that is either a finite number of watts or infeasible.
///
/// `Infeasible` marks a QoS demand no finite power can meet (a link that
/// receives no resource) or an exponent that overflows `f64`; it is never
/// encoded as a bare infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TxPower {
    Finite(f64),
    Infeasible,
}

impl TxPower {
    pub(crate) fn from_raw(w: f64) -> Self {
        if w.is_finite() {
            TxPower::Finite(w)
        } else {
            TxPower::Infeasible
        }
    }

    pub fn watts(self) -> Option<f64> {
        match self {
            TxPower::Finite(w) => Some(w),
            TxPower::Infeasible => None,
        }
    }

    /// Watts, with `Infeasible` mapped to `+inf` for ordering in searches.
    pub fn or_inf(self) -> f64 {
        self.watts().unwrap_or(f64::INFINITY)
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, TxPower::Finite(_))
    }

    /// Finite and no greater than `cap_w`.
    pub fn within(self, cap_w: f64) -> bool {
        matches!(self, TxPower::Finite(w) if w <= cap_w)
    }
}

impl PartialOrd for TxPower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.or_inf().partial_cmp(&other.or_inf())
    }
}

impl fmt::Display for TxPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TxPower::Finite(w) => write!(f, "{w} W"),
            TxPower::Infeasible => f.write_str("infeasible"),
        }
    }
}

/// Guaranteed spectral efficiency shared by both links.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QosTarget {
    sigma_min: f64,
    bandwidth_hz: f64,
}

impl QosTarget {
    pub fn from_rate(rate_bps: f64, bandwidth_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(Error::domain(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        Self::from_sigma(rate_bps / bandwidth_hz, bandwidth_hz)
    }

    pub fn from_sigma(sigma_min: f64, bandwidth_hz: f64) -> Result<Self> {
        if !(sigma_min >= 0.0 && sigma_min.is_finite()) {
            return Err(Error::domain(format!(
                "spectral efficiency must be >= 0, got {sigma_min}"
            )));
        }
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(Error::domain(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        Ok(QosTarget {
            sigma_min,
            bandwidth_hz,
        })
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn rate_bps(&self) -> f64 {
        self.sigma_min * self.bandwidth_hz
    }
}

/// Share of the resource assigned to link 1.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Weighting(f64);

impl Weighting {
    pub fn new(mu: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&mu) {
            Ok(Weighting(mu))
        } else {
            Err(Error::domain(format!(
                "weighting must be in [0, 1], got {mu}"
            )))
        }
    }

    pub fn mu(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Weighting(1.0 - self.0)
    }
}

pub fn capacity(bandwidth_hz: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain(format!("SINR must be >= 0, got {gamma}")));
    }
    Ok(bandwidth_hz * gamma.ln_1p() / std::f64::consts::LN_2)
}

pub fn sinr(gain: f64, p_tx_w: f64, noise_w: f64) -> f64 {
    gain * p_tx_w / noise_w
}

/// `2^x - 1` without cancellation for small `x`.
#[inline]
fn exp2_m1(x: f64) -> f64 {
    (x * std::f64::consts::LN_2).exp_m1()
}

/// Power link `i` needs on a share `share` of the band to carry `sigma` bps/Hz.
pub fn required_link_power(sigma: f64, share: f64, gain: f64, noise_w: f64) -> Result<TxPower> {
    if !(sigma >= 0.0) {
        return Err(Error::domain(format!(
            "spectral efficiency must be >= 0, got {sigma}"
        )));
    }
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::domain(format!(
            "share must be in [0, 1], got {share}"
        )));
    }
    if !(gain > 0.0 && noise_w > 0.0) {
        return Err(Error::domain("gain and noise must be positive"));
    }
    Ok(link_power(sigma, share, noise_w / gain))
}

#[inline]
fn link_power(sigma: f64, share: f64, noise_over_gain: f64) -> TxPower {
    if sigma == 0.0 {
        TxPower::Finite(0.0)
    } else if share == 0.0 {
        TxPower::Infeasible
    } else {
        TxPower::from_raw(exp2_m1(sigma / share) * noise_over_gain)
    }
}

/// Total transmit power when both links carry `sigma_min` bps/Hz and link 1
/// holds the share `mu`.
pub fn system_tx_power(sigma_min: f64, mu: Weighting, g1: f64, g2: f64, noise_w: f64) -> TxPower {
    system_tx_power_raw(sigma_min, mu.0, noise_w / g1, noise_w / g2)
}

/// Unchecked core of [`system_tx_power`] taking the noise-to-gain ratios.
#[inline]
pub(crate) fn system_tx_power_raw(sigma_min: f64, mu: f64, nog1: f64, nog2: f64) -> TxPower {
    if sigma_min == 0.0 {
        return TxPower::Finite(0.0);
    }
    if mu <= 0.0 || mu >= 1.0 {
        return TxPower::Infeasible;
    }
    let p1 = link_power(sigma_min, mu, nog1);
    let p2 = link_power(sigma_min, 1.0 - mu, nog2);
    match (p1, p2) {
        (TxPower::Finite(a), TxPower::Finite(b)) => TxPower::from_raw(mu * a + (1.0 - mu) * b),
        _ => TxPower::Infeasible,
    }
}

/// Weighted system spectral efficiency
/// `mu log2(1 + gamma_1) + (1 - mu) log2(1 + gamma_2)` in bps/Hz.
pub fn system_spectral_efficiency(mu: Weighting, gamma1: f64, gamma2: f64) -> Result<f64> {
    Ok(mu.0 * capacity(1.0, gamma1)? + (1.0 - mu.0) * capacity(1.0, gamma2)?)
}
