//! Rate sweeps over Monte-Carlo user drops.
//!
//! Drop `i` of a run is generated from a ChaCha8 stream selected by
//! `(master_seed, i)`, and the same drop is reused for every rate and every
//! policy. Drops are evaluated in parallel in fixed-size blocks whose
//! partial sums are combined in block order, so results do not depend on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{sample_drop, Drop, GeometryParams, ShadowingParams};
use crate::error::{Error, Result};
use crate::linkmodel::QosTarget;
use crate::optimizer::OptimizerSettings;
use crate::powermodel::PowerModelParams;
use crate::schemes::{evaluate, SchemeContext, SchemeId, SchemeResult, SotaLoad};
use crate::units::dbm_to_w;

/// Drops per deterministic reduction block.
const BLOCK: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub geometry: GeometryParams,
    pub shadow: ShadowingParams,
    pub pm: PowerModelParams,
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    pub iterations: usize,
    pub master_seed: u64,
    pub rate_grid_bps: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub sota_load: SotaLoad,
    pub optimizer: OptimizerSettings,
}

/// `points` log-spaced rates from `min` to `max`, both included exactly.
pub fn log_rate_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    let (a, b) = (min.log10(), max.log10());
    (0..points)
        .map(|k| match k {
            0 => min,
            k if k == points - 1 => max,
            k => 10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64),
        })
        .collect()
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            geometry: GeometryParams::default(),
            shadow: ShadowingParams::default(),
            pm: PowerModelParams::default(),
            bandwidth_hz: 10e6,
            noise_w: dbm_to_w(-100.0),
            iterations: 10_000,
            master_seed: 1,
            rate_grid_bps: log_rate_grid(1e5, 1e8, 25),
            schemes: SchemeId::ALL.to_vec(),
            sota_load: SotaLoad::default(),
            optimizer: OptimizerSettings::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be >= 1"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        if !(self.noise_w > 0.0 && self.noise_w.is_finite()) {
            return Err(Error::config(
                "noise_dbm",
                "must give a positive finite noise power",
            ));
        }
        if self.rate_grid_bps.is_empty() {
            return Err(Error::config("rate_grid", "must contain at least one rate"));
        }
        if self
            .rate_grid_bps
            .iter()
            .any(|r| !(*r >= 0.0 && r.is_finite()))
        {
            return Err(Error::config("rate_grid", "rates must be finite and >= 0"));
        }
        if self.rate_grid_bps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "rate_grid",
                "rates must be strictly increasing",
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return Err(Error::config("schemes", "duplicate scheme"));
        }
        Ok(())
    }

    pub fn scheme_context(&self) -> SchemeContext {
        SchemeContext {
            pm: self.pm,
            settings: self.optimizer,
            sota_load: self.sota_load,
        }
    }
}

/// Random stream owned by one drop.
pub fn drop_rng(master_seed: u64, drop_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(drop_index);
    rng
}

pub fn realize_drop(config: &SimulationConfig, drop_index: usize) -> Result<Drop> {
    let mut rng = drop_rng(config.master_seed, drop_index as u64);
    sample_drop(
        &config.geometry,
        &config.shadow,
        config.noise_w,
        config.bandwidth_hz,
        &mut rng,
    )
}

fn evaluate_all(
    config: &SimulationConfig,
    ctx: &SchemeContext,
    drop: &Drop,
    rate_bps: f64,
) -> Result<Vec<SchemeResult>> {
    let qos = QosTarget::from_rate(rate_bps, config.bandwidth_hz)?;
    config
        .schemes
        .iter()
        .map(|&s| evaluate(s, &drop.realization, &qos, ctx))
        .collect()
}

/// Results of every configured scheme, in configuration order, for one drop.
pub fn run_drop(
    config: &SimulationConfig,
    drop_index: usize,
    rate_bps: f64,
) -> Result<Vec<SchemeResult>> {
    if drop_index >= config.iterations {
        return Err(Error::domain(format!(
            "drop index {drop_index} outside 0..{}",
            config.iterations
        )));
    }
    let drop = realize_drop(config, drop_index)?;
    evaluate_all(config, &config.scheme_context(), &drop, rate_bps)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub rate_bps: f64,
    /// Mean over drops not in outage; `None` if every drop is in outage.
    pub mean_supply_w: Option<f64>,
    pub outage_prob: f64,
    pub mean_mu: Option<f64>,
    pub mean_t: Option<f64>,
    pub n_feasible: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCurve {
    pub scheme: SchemeId,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn point_at(&self, rate_bps: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.rate_bps == rate_bps)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Acc {
    n_feasible: u64,
    n_outage: u64,
    supply: f64,
    mu: f64,
    t: f64,
}

impl Acc {
    fn add(&mut self, r: &SchemeResult) {
        if r.outage {
            self.n_outage += 1;
        } else {
            self.n_feasible += 1;
            self.supply += r.p_supply_w;
            self.mu += r.allocation.mu();
            self.t += r.allocation.t();
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.n_feasible += o.n_feasible;
        self.n_outage += o.n_outage;
        self.supply += o.supply;
        self.mu += o.mu;
        self.t += o.t;
    }
}

/// Partial sums indexed `[rate][scheme]`.
type Sums = Vec<Vec<Acc>>;

fn block_sums(
    config: &SimulationConfig,
    ctx: &SchemeContext,
    range: std::ops::Range<usize>,
) -> Result<Sums> {
    let mut sums = vec![vec![Acc::default(); config.schemes.len()]; config.rate_grid_bps.len()];
    for idx in range {
        let drop = realize_drop(config, idx)?;
        for (ri, &rate) in config.rate_grid_bps.iter().enumerate() {
            for (si, res) in evaluate_all(config, ctx, &drop, rate)?.iter().enumerate() {
                sums[ri][si].add(res);
            }
        }
    }
    Ok(sums)
}

/// Averages every configured scheme over `iterations` drops at each rate.
pub fn run_sweep(config: &SimulationConfig) -> Result<Vec<SweepCurve>> {
    config.validate()?;
    let ctx = config.scheme_context();
    let n = config.iterations;
    let blocks: Vec<Sums> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| block_sums(config, &ctx, b * BLOCK..((b + 1) * BLOCK).min(n)))
        .collect::<Result<_>>()?;

    let mut total = vec![vec![Acc::default(); config.schemes.len()]; config.rate_grid_bps.len()];
    for block in &blocks {
        for (tr, br) in total.iter_mut().zip(block) {
            for (t, b) in tr.iter_mut().zip(br) {
                t.merge(b);
            }
        }
    }

    Ok(config
        .schemes
        .iter()
        .enumerate()
        .map(|(si, &scheme)| SweepCurve {
            scheme,
            points: config
                .rate_grid_bps
                .iter()
                .zip(&total)
                .map(|(&rate_bps, row)| {
                    let a = row[si];
                    let mean = |s: f64| (a.n_feasible > 0).then(|| s / a.n_feasible as f64);
                    SweepPoint {
                        rate_bps,
                        mean_supply_w: mean(a.supply),
                        outage_prob: a.n_outage as f64 / n as f64,
                        mean_mu: mean(a.mu),
                        mean_t: mean(a.t),
                        n_feasible: a.n_feasible,
                    }
                })
                .collect(),
        })
        .collect())
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(
    config: &SimulationConfig,
    threads: usize,
) -> Result<Vec<SweepCurve>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

/// Gain of one scheme over the conventional station.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeGains {
    pub scheme: SchemeId,
    /// `10 log10(P_sota / P_scheme)` per rate point; `None` where either
    /// curve has no feasible drop.
    pub gain_db: Vec<Option<f64>>,
    pub low_load_gain_db: Option<f64>,
    pub high_load_gain_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainReport {
    pub rates_bps: Vec<f64>,
    pub schemes: Vec<SchemeGains>,
    /// Lowest nonzero rate of the grid.
    pub low_load_rate_bps: Option<f64>,
    /// Highest rate at which the conventional station is in outage for
    /// fewer than 5% of drops.
    pub high_load_rate_bps: Option<f64>,
}

/// Outage probability below which a rate counts as served for the
/// high-load anchor.
pub const HIGH_LOAD_OUTAGE: f64 = 0.05;

pub fn gain_db(p_ref_w: f64, p_w: f64) -> f64 {
    10.0 * (p_ref_w / p_w).log10()
}

/// Fractional saving corresponding to a gain in dB.
pub fn saving_fraction(gain_db: f64) -> f64 {
    1.0 - 10f64.powf(-gain_db / 10.0)
}

impl GainReport {
    pub fn for_scheme(&self, scheme: SchemeId) -> Option<&SchemeGains> {
        self.schemes.iter().find(|g| g.scheme == scheme)
    }
}

pub fn gain_report(curves: &[SweepCurve]) -> Result<GainReport> {
    let sota = curves
        .iter()
        .find(|c| c.scheme == SchemeId::Sota)
        .ok_or_else(|| Error::config("schemes", "gain report needs the SOTA curve"))?;
    let rates: Vec<f64> = sota.points.iter().map(|p| p.rate_bps).collect();
    let low_idx = rates.iter().position(|&r| r > 0.0);
    let high_idx = sota
        .points
        .iter()
        .rposition(|p| p.outage_prob < HIGH_LOAD_OUTAGE && p.n_feasible > 0);

    let schemes = curves
        .iter()
        .map(|c| {
            if c.points.len() != rates.len()
                || c.points.iter().zip(&rates).any(|(p, r)| p.rate_bps != *r)
            {
                return Err(Error::config(
                    "rate_grid",
                    format!("curve {} uses a different rate grid", c.scheme),
                ));
            }
            let gain: Vec<Option<f64>> = c
                .points
                .iter()
                .zip(&sota.points)
                .map(|(p, s)| Some(gain_db(s.mean_supply_w?, p.mean_supply_w?)))
                .collect();
            Ok(SchemeGains {
                scheme: c.scheme,
                low_load_gain_db: low_idx.and_then(|i| gain[i]),
                high_load_gain_db: high_idx.and_then(|i| gain[i]),
                gain_db: gain,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(GainReport {
        low_load_rate_bps: low_idx.map(|i| rates[i]),
        high_load_rate_bps: high_idx.map(|i| rates[i]),
        rates_bps: rates,
        schemes,
    })
}
