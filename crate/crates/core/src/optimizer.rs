//! Power-minimizing resource share and awake time.
//!
//! For a fixed activity `t` the system transmit power is strictly convex in
//! the share `mu`, so the inner problem is solved by golden-section search
//! on `(eps, 1 - eps)`. The outer problem over `t` is scanned on a
//! log-spaced grid between the feasibility boundary and `t = 1`, then
//! refined by golden-section search around the best grid point.
//!
//! [`brute_force_mu`] and [`brute_force_mu_t`] are exhaustive grid scans
//! with their own evaluation of the objective. They exist to check the
//! searches and are far too slow for the simulator.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linkmodel::{system_tx_power_raw, TxPower, Weighting};
use crate::powermodel::{Allocation, PowerModelParams};

/// Lower/upper offset of the `mu` search interval from 0 and 1.
pub const MU_EPS: f64 = 1e-9;

/// Relative tolerance under which two supply powers count as tied.
const TIE_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerSettings {
    /// Final bracket width of the `mu` search.
    pub mu_tolerance: f64,
    /// Number of log-spaced `t` values in the coarse scan.
    pub t_grid_size: usize,
    /// Golden-section iterations when refining `t`.
    pub refine_iterations: usize,
    /// Grid points per axis for the brute-force oracles.
    pub grid_resolution_oracle: usize,
}

impl OptimizerSettings {
    pub fn new(
        mu_tolerance: f64,
        t_grid_size: usize,
        refine_iterations: usize,
        grid_resolution_oracle: usize,
    ) -> Result<Self> {
        if !(mu_tolerance > 0.0 && mu_tolerance < 0.5) {
            return Err(Error::domain(format!(
                "mu_tolerance must be in (0, 0.5), got {mu_tolerance}"
            )));
        }
        if t_grid_size < 8 {
            return Err(Error::domain(format!(
                "t_grid_size must be >= 8, got {t_grid_size}"
            )));
        }
        if grid_resolution_oracle < 1000 {
            return Err(Error::domain(format!(
                "grid_resolution_oracle must be >= 1000, got {grid_resolution_oracle}"
            )));
        }
        Ok(OptimizerSettings {
            mu_tolerance,
            t_grid_size,
            refine_iterations,
            grid_resolution_oracle,
        })
    }
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            mu_tolerance: 1e-6,
            t_grid_size: 64,
            refine_iterations: 60,
            grid_resolution_oracle: 100_000,
        }
    }
}

/// Solution of the joint share/activity problem for one drop and rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalAllocation {
    pub allocation: Allocation,
    /// Transmit power during the awake phase. For an infeasible problem this
    /// is the least power needed at `t = 1`, which exceeds the peak.
    pub p_tx: TxPower,
    /// Supply power; for an infeasible problem the peak supply power.
    pub p_supply_w: f64,
    pub feasible: bool,
}

impl OptimalAllocation {
    fn asleep(pm: &PowerModelParams) -> Self {
        OptimalAllocation {
            allocation: Allocation::ASLEEP,
            p_tx: TxPower::Finite(0.0),
            p_supply_w: pm.p_sleep_w(),
            feasible: true,
        }
    }

    fn outage(mu: f64, p_tx: TxPower, pm: &PowerModelParams) -> Self {
        OptimalAllocation {
            allocation: Allocation::always_on(mu).expect("mu in [0, 1]"),
            p_tx,
            p_supply_w: pm.p_max_supply_w(),
            feasible: false,
        }
    }
}

/// Where a point of the joint search was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceStage {
    Boundary,
    Coarse,
    OnOff,
    Refine,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub stage: TraceStage,
    pub t: f64,
    pub mu: f64,
    pub p_tx: TxPower,
    /// `None` when the point violates the peak-power cap.
    pub p_supply_w: Option<f64>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of `f` over `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol` or after `max_iter`
/// iterations and returns the best evaluated point.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while hi - lo > tol && iter < max_iter {
        iter += 1;
        // `<=` keeps the left bracket on ties, including `inf == inf`
        // near a right boundary that is infeasible.
        if f1 <= f2 && !(f1.is_infinite() && f2.is_infinite()) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    [(x1, f1), (x2, f2), (mid, fm)]
        .into_iter()
        .fold(
            (mid, fm),
            |best, cand| if cand.1 < best.1 { cand } else { best },
        )
}

/// Inner solve on noise-to-gain ratios; `sigma` may be zero.
fn min_over_mu(sigma: f64, nog1: f64, nog2: f64, tol: f64) -> (f64, TxPower) {
    if sigma == 0.0 {
        return (0.5, TxPower::Finite(0.0));
    }
    if nog1 == nog2 {
        return (0.5, system_tx_power_raw(sigma, 0.5, nog1, nog2));
    }
    let (mu, p) = golden_section(
        |mu| system_tx_power_raw(sigma, mu, nog1, nog2).or_inf(),
        MU_EPS,
        1.0 - MU_EPS,
        tol,
        500,
    );
    (mu, TxPower::from_raw(p))
}

fn check_channel(sigma: f64, g1: f64, g2: f64, noise_w: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    if !(g1 > 0.0 && g2 > 0.0 && noise_w > 0.0) {
        return Err(Error::domain("gains and noise must be positive"));
    }
    Ok(())
}

/// Share `mu*` of link 1 minimizing the system transmit power, and that
/// power.
pub fn optimal_mu(
    sigma_min: f64,
    g1: f64,
    g2: f64,
    noise_w: f64,
    settings: &OptimizerSettings,
) -> Result<(Weighting, TxPower)> {
    check_channel(sigma_min, g1, g2, noise_w)?;
    let (mu, p) = min_over_mu(sigma_min, noise_w / g1, noise_w / g2, settings.mu_tolerance);
    Ok((Weighting::new(mu)?, p))
}

struct JointProblem<'a> {
    sigma: f64,
    nog1: f64,
    nog2: f64,
    pm: &'a PowerModelParams,
    tol: f64,
}

impl JointProblem<'_> {
    fn at(&self, stage: TraceStage, t: f64) -> TracePoint {
        let (mu, p_tx) = min_over_mu(self.sigma / t, self.nog1, self.nog2, self.tol);
        let p_supply_w = p_tx
            .watts()
            .filter(|&p| p <= self.pm.p_max_tx_w())
            .map(|p| self.pm.dtx_unchecked(t, p));
        TracePoint {
            stage,
            t,
            mu,
            p_tx,
            p_supply_w,
        }
    }

    fn feasible_at(&self, t: f64) -> bool {
        min_over_mu(self.sigma / t, self.nog1, self.nog2, self.tol)
            .1
            .within(self.pm.p_max_tx_w())
    }

    /// Full-band, full-power rate of each link in bps/Hz.
    fn peak_rates(&self) -> (f64, f64) {
        let pmax = self.pm.p_max_tx_w();
        (
            (pmax / self.nog1).ln_1p() / std::f64::consts::LN_2,
            (pmax / self.nog2).ln_1p() / std::f64::consts::LN_2,
        )
    }

    /// Smallest feasible activity, given that `t = 1` is feasible.
    fn feasibility_boundary(&self) -> f64 {
        let (c1, c2) = self.peak_rates();
        // below this even the weaker link alone on the whole band at peak
        // power falls short
        let mut lo = (self.sigma / c1.min(c2)).min(1.0);
        let mut hi = 1.0;
        if self.feasible_at(lo) {
            return lo;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            let mid = (lo * hi).sqrt();
            if self.feasible_at(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

fn better(cand: &TracePoint, best: &TracePoint) -> bool {
    match (cand.p_supply_w, best.p_supply_w) {
        (Some(c), Some(b)) => {
            c < b - TIE_REL * b || ((c - b).abs() <= TIE_REL * b && cand.t > best.t)
        }
        (Some(_), None) => true,
        _ => false,
    }
}

/// Jointly optimal share and awake time under the peak-power cap.
pub fn optimal_mu_t(
    sigma_min: f64,
    realization: &ChannelRealization,
    pm: &PowerModelParams,
    settings: &OptimizerSettings,
) -> Result<OptimalAllocation> {
    optimal_mu_t_impl(sigma_min, realization, pm, settings, None)
}

/// [`optimal_mu_t`] that also records every evaluated point.
pub fn optimal_mu_t_traced(
    sigma_min: f64,
    realization: &ChannelRealization,
    pm: &PowerModelParams,
    settings: &OptimizerSettings,
) -> Result<(OptimalAllocation, Vec<TracePoint>)> {
    let mut trace = Vec::new();
    let sol = optimal_mu_t_impl(sigma_min, realization, pm, settings, Some(&mut trace))?;
    Ok((sol, trace))
}

fn optimal_mu_t_impl(
    sigma_min: f64,
    realization: &ChannelRealization,
    pm: &PowerModelParams,
    settings: &OptimizerSettings,
    mut trace: Option<&mut Vec<TracePoint>>,
) -> Result<OptimalAllocation> {
    let ChannelRealization {
        g1, g2, noise_w, ..
    } = *realization;
    check_channel(sigma_min, g1, g2, noise_w)?;
    if sigma_min == 0.0 {
        return Ok(OptimalAllocation::asleep(pm));
    }
    let problem = JointProblem {
        sigma: sigma_min,
        nog1: noise_w / g1,
        nog2: noise_w / g2,
        pm,
        tol: settings.mu_tolerance,
    };
    let mut record = |p: TracePoint| {
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(p);
        }
        p
    };

    // t = 1 needs the least awake-phase rate; if it fails, every t fails.
    let full = record(problem.at(TraceStage::Coarse, 1.0));
    if full.p_supply_w.is_none() {
        return Ok(OptimalAllocation::outage(full.mu, full.p_tx, pm));
    }

    let t_lo = problem.feasibility_boundary();
    let n = settings.t_grid_size.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|k| {
            if k == n - 1 {
                1.0
            } else {
                t_lo * (1.0 / t_lo).powf(k as f64 / (n - 1) as f64)
            }
        })
        .collect();

    let mut best = full;
    let mut best_k = n - 1;
    for (k, &t) in grid.iter().enumerate().take(n - 1) {
        let stage = if k == 0 {
            TraceStage::Boundary
        } else {
            TraceStage::Coarse
        };
        let p = record(problem.at(stage, t));
        if better(&p, &best) {
            best = p;
            best_k = k;
        }
    }

    // Time-shared full-power point; dominated in exact arithmetic, checked
    // explicitly so the search never loses to the no-power-control policy.
    let (c1, c2) = problem.peak_rates();
    let t_onoff = sigma_min * (1.0 / c1 + 1.0 / c2);
    if t_onoff > t_lo && t_onoff < 1.0 {
        let p = record(problem.at(TraceStage::OnOff, t_onoff));
        if better(&p, &best) {
            best = p;
        }
    }

    let lo = grid[best_k.saturating_sub(1)];
    let hi = grid[(best_k + 1).min(n - 1)];
    if hi > lo {
        let (t_ref, _) = golden_section(
            |t| {
                problem
                    .at(TraceStage::Refine, t)
                    .p_supply_w
                    .unwrap_or(f64::INFINITY)
            },
            lo,
            hi,
            0.0,
            settings.refine_iterations,
        );
        let p = record(problem.at(TraceStage::Refine, t_ref));
        if better(&p, &best) {
            best = p;
        }
    }

    let p_supply_w = best.p_supply_w.expect("best point is feasible");
    Ok(OptimalAllocation {
        allocation: Allocation::new(best.mu, best.t)?,
        p_tx: best.p_tx,
        p_supply_w,
        feasible: true,
    })
}

/// Independent evaluation of the system transmit power for the oracles.
fn oracle_tx_power(sigma: f64, mu: f64, nog1: f64, nog2: f64) -> f64 {
    let a = 2f64.powf(sigma / mu) - 1.0;
    let b = 2f64.powf(sigma / (1.0 - mu)) - 1.0;
    mu * nog1 * a + (1.0 - mu) * nog2 * b
}

/// Exhaustive scan over `mu_k = k / (resolution + 1)`, `k = 1..=resolution`.
pub fn brute_force_mu(
    sigma_min: f64,
    g1: f64,
    g2: f64,
    noise_w: f64,
    resolution: usize,
) -> Result<(f64, TxPower)> {
    check_channel(sigma_min, g1, g2, noise_w)?;
    if resolution == 0 {
        return Err(Error::domain("resolution must be positive"));
    }
    let (nog1, nog2) = (noise_w / g1, noise_w / g2);
    let mut best = (0.5, f64::INFINITY);
    for k in 1..=resolution {
        let mu = k as f64 / (resolution + 1) as f64;
        let p = oracle_tx_power(sigma_min, mu, nog1, nog2);
        if p < best.1 {
            best = (mu, p);
        }
    }
    Ok((best.0, TxPower::from_raw(best.1)))
}

/// Lowest activity on the oracle's `t` axis.
pub const ORACLE_T_MIN: f64 = 1e-6;

/// Exhaustive `(mu, t)` scan with the peak-power cap applied per point.
///
/// `mu` is uniform as in [`brute_force_mu`]; `t` is log-spaced on
/// `[ORACLE_T_MIN, 1]` so that small optimal activities are resolved.
pub fn brute_force_mu_t(
    sigma_min: f64,
    realization: &ChannelRealization,
    pm: &PowerModelParams,
    resolution: usize,
) -> Result<OptimalAllocation> {
    let ChannelRealization {
        g1, g2, noise_w, ..
    } = *realization;
    check_channel(sigma_min, g1, g2, noise_w)?;
    if resolution < 2 {
        return Err(Error::domain("resolution must be >= 2"));
    }
    if sigma_min == 0.0 {
        return Ok(OptimalAllocation::asleep(pm));
    }
    let (nog1, nog2) = (noise_w / g1, noise_w / g2);
    let pmax = pm.p_max_tx_w();
    let log_span = (1.0 / ORACLE_T_MIN).ln();

    let mut best: Option<(f64, f64, f64, f64)> = None; // (supply, mu, t, p_tx)
    let mut full_min = (0.5, f64::INFINITY);
    // descending t, strict improvement: ties keep the larger t
    for j in (0..resolution).rev() {
        let t = if j == resolution - 1 {
            1.0
        } else {
            ORACLE_T_MIN * (log_span * j as f64 / (resolution - 1) as f64).exp()
        };
        let s = sigma_min / t;
        for k in 1..=resolution {
            let mu = k as f64 / (resolution + 1) as f64;
            let p = oracle_tx_power(s, mu, nog1, nog2);
            if j == resolution - 1 && p < full_min.1 {
                full_min = (mu, p);
            }
            if !(p <= pmax) {
                continue;
            }
            let supply = (1.0 - t) * pm.p_sleep_w() + t * (pm.p0_w() + pm.m_slope() * p);
            if best.is_none_or(|b| supply < b.0) {
                best = Some((supply, mu, t, p));
            }
        }
    }
    Ok(match best {
        Some((supply, mu, t, p)) => OptimalAllocation {
            allocation: Allocation::new(mu, t)?,
            p_tx: TxPower::Finite(p),
            p_supply_w: supply,
            feasible: true,
        },
        None => OptimalAllocation::outage(full_min.0, TxPower::from_raw(full_min.1), pm),
    })
}
