//! Flat `key = value` run configuration.
//!
//! ```text
//! # defaults
//! carrier_freq_hz = 2e9
//! cell_radius_m = 250
//! shadowing_std_db = 8
//! iterations = 10000
//! rate_grid = 1e5:1e8:25
//! ```
//!
//! Values are kept exactly as parsed so that writing a [`RunConfig`] back
//! out and reading it again reproduces the same simulation bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::{GeometryParams, PathlossModel, ShadowingParams};
use crate::error::{Error, Result};
use crate::montecarlo::{log_rate_grid, SimulationConfig};
use crate::optimizer::OptimizerSettings;
use crate::powermodel::PowerModelParams;
use crate::schemes::{SchemeId, SotaLoad};
use crate::units::dbm_to_w;

/// Keys a run manifest carries in addition to the configuration.
pub const MANIFEST_ONLY_KEYS: [&str; 3] = ["tool_version", "wall_clock_s", "threads"];

#[derive(Clone, Debug, PartialEq)]
pub enum RateGrid {
    List(Vec<f64>),
    /// `points` log-spaced rates from `min` to `max`.
    Log {
        min: f64,
        max: f64,
        points: usize,
    },
}

impl RateGrid {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |m: &str| Error::config("rate_grid", format!("{m}: `{s}`"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad("expected min:max:points"));
            }
            let min: f64 = parts[0].parse().map_err(|_| bad("bad min"))?;
            let max: f64 = parts[1].parse().map_err(|_| bad("bad max"))?;
            let points: usize = parts[2].parse().map_err(|_| bad("bad point count"))?;
            if !(min > 0.0 && max > min && max.is_finite()) || points < 2 {
                return Err(bad("need 0 < min < max and at least 2 points"));
            }
            Ok(RateGrid::Log { min, max, points })
        } else {
            let rates = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad rate list"))?;
            Ok(RateGrid::List(rates))
        }
    }

    pub fn rates(&self) -> Vec<f64> {
        match self {
            RateGrid::List(v) => v.clone(),
            RateGrid::Log { min, max, points } => log_rate_grid(*min, *max, *points),
        }
    }
}

impl std::fmt::Display for RateGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RateGrid::List(v) => {
                let items: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
                f.write_str(&items.join(","))
            }
            RateGrid::Log { min, max, points } => write!(f, "{min:e}:{max:e}:{points}"),
        }
    }
}

/// Raw configuration values as they appear in a file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub carrier_freq_hz: f64,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub pathloss_model: PathlossModel,
    pub shadowing_std_db: f64,
    pub iterations: usize,
    pub bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub p0_w: f64,
    pub m_slope: f64,
    pub p_sleep_w: f64,
    pub p_max_tx_dbm: f64,
    pub master_seed: u64,
    pub rate_grid: RateGrid,
    pub schemes: Vec<SchemeId>,
    pub sota_load: SotaLoad,
    pub mu_tolerance: f64,
    pub t_grid_size: usize,
    pub refine_iterations: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            carrier_freq_hz: 2e9,
            cell_radius_m: 250.0,
            min_distance_m: 35.0,
            pathloss_model: PathlossModel::Macro2Ghz,
            shadowing_std_db: 8.0,
            iterations: 10_000,
            bandwidth_hz: 10e6,
            noise_dbm: -100.0,
            p0_w: 233.0,
            m_slope: 5.0,
            p_sleep_w: 50.0,
            p_max_tx_dbm: 46.0,
            master_seed: 1,
            rate_grid: RateGrid::Log {
                min: 1e5,
                max: 1e8,
                points: 25,
            },
            schemes: SchemeId::ALL.to_vec(),
            sota_load: SotaLoad::OnOffOccupancy,
            mu_tolerance: OptimizerSettings::default().mu_tolerance,
            t_grid_size: OptimizerSettings::default().t_grid_size,
            refine_iterations: OptimizerSettings::default().refine_iterations,
        }
    }
}

pub fn parse_scheme_list(s: &str) -> Result<Vec<SchemeId>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.parse())
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

impl RunConfig {
    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment; blank lines are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected key = value, got `{line}`"),
                )
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "carrier_freq_hz" => self.carrier_freq_hz = num(key, value)?,
            "cell_radius_m" => self.cell_radius_m = num(key, value)?,
            "min_distance_m" => self.min_distance_m = num(key, value)?,
            "pathloss_model" => {
                self.pathloss_model = PathlossModel::parse(value)
                    .ok_or_else(|| Error::config(key, format!("unknown model `{value}`")))?
            }
            "shadowing_std_db" => self.shadowing_std_db = num(key, value)?,
            "iterations" => self.iterations = num(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = num(key, value)?,
            "noise_dbm" => self.noise_dbm = num(key, value)?,
            "p0_w" => self.p0_w = num(key, value)?,
            "m_slope" => self.m_slope = num(key, value)?,
            "p_sleep_w" => self.p_sleep_w = num(key, value)?,
            "p_max_tx_dbm" => self.p_max_tx_dbm = num(key, value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            "rate_grid" => self.rate_grid = RateGrid::parse(value)?,
            "schemes" => self.schemes = parse_scheme_list(value)?,
            "sota_load" => {
                self.sota_load = SotaLoad::parse(value).ok_or_else(|| {
                    Error::config(key, format!("unknown load definition `{value}`"))
                })?
            }
            "mu_tolerance" => self.mu_tolerance = num(key, value)?,
            "t_grid_size" => self.t_grid_size = num(key, value)?,
            "refine_iterations" => self.refine_iterations = num(key, value)?,
            k if MANIFEST_ONLY_KEYS.contains(&k) => {}
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Builds and validates the simulation configuration.
    pub fn to_simulation(&self) -> Result<SimulationConfig> {
        let field = |name: &'static str| move |e: Error| Error::config(name, e.to_string());
        let geometry = GeometryParams::new(
            self.cell_radius_m,
            self.min_distance_m,
            self.carrier_freq_hz,
            self.pathloss_model,
        )
        .map_err(field("cell_radius_m"))?;
        let shadow =
            ShadowingParams::new(self.shadowing_std_db).map_err(field("shadowing_std_db"))?;
        let pm = PowerModelParams::new(
            self.p0_w,
            self.m_slope,
            self.p_sleep_w,
            dbm_to_w(self.p_max_tx_dbm),
        )
        .map_err(field("p0_w"))?;
        let optimizer = OptimizerSettings::new(
            self.mu_tolerance,
            self.t_grid_size,
            self.refine_iterations,
            OptimizerSettings::default().grid_resolution_oracle,
        )
        .map_err(field("mu_tolerance"))?;
        let sim = SimulationConfig {
            geometry,
            shadow,
            pm,
            bandwidth_hz: self.bandwidth_hz,
            noise_w: dbm_to_w(self.noise_dbm),
            iterations: self.iterations,
            master_seed: self.master_seed,
            rate_grid_bps: self.rate_grid.rates(),
            schemes: self.schemes.clone(),
            sota_load: self.sota_load,
            optimizer,
        };
        sim.validate()?;
        Ok(sim)
    }

    /// Serializes every key; parsing the output gives back `self`.
    pub fn to_text(&self) -> String {
        let schemes: Vec<&str> = self.schemes.iter().map(|s| s.name()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("carrier_freq_hz", format!("{:e}", self.carrier_freq_hz));
        kv("cell_radius_m", self.cell_radius_m.to_string());
        kv("min_distance_m", self.min_distance_m.to_string());
        kv("pathloss_model", self.pathloss_model.name().to_string());
        kv("shadowing_std_db", self.shadowing_std_db.to_string());
        kv("iterations", self.iterations.to_string());
        kv("bandwidth_hz", format!("{:e}", self.bandwidth_hz));
        kv("noise_dbm", self.noise_dbm.to_string());
        kv("p0_w", self.p0_w.to_string());
        kv("m_slope", self.m_slope.to_string());
        kv("p_sleep_w", self.p_sleep_w.to_string());
        kv("p_max_tx_dbm", self.p_max_tx_dbm.to_string());
        kv("master_seed", self.master_seed.to_string());
        kv("rate_grid", self.rate_grid.to_string());
        kv("schemes", schemes.join(","));
        kv("sota_load", self.sota_load.name().to_string());
        kv("mu_tolerance", format!("{:e}", self.mu_tolerance));
        kv("t_grid_size", self.t_grid_size.to_string());
        kv("refine_iterations", self.refine_iterations.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_reference_setup() {
        let sim = RunConfig::default().to_simulation().unwrap();
        assert_eq!(sim, SimulationConfig::default());
    }

    #[test]
    fn parses_comments_and_overrides() {
        let cfg = RunConfig::parse(
            "# test\niterations = 10 # inline\nmaster_seed=7\n\nrate_grid = 0, 1e6, 5e7\nschemes = RS_PC_DTX,SOTA\npathloss_model = uma_nlos\n",
        )
        .unwrap();
        assert_eq!(cfg.iterations, 10);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.rate_grid, RateGrid::List(vec![0.0, 1e6, 5e7]));
        assert_eq!(cfg.schemes, vec![SchemeId::RsPcDtx, SchemeId::Sota]);
        assert_eq!(cfg.pathloss_model, PathlossModel::UmaNlos);
    }

    #[test]
    fn field_level_diagnostics() {
        let err = RunConfig::parse("iterations = ten").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref field, .. } if field == "iterations"),
            "{err}"
        );
        let err = RunConfig::parse("bogus = 1").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "bogus"));
        let err = RunConfig::parse("just words").unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let err = RunConfig::parse("rate_grid = 5e7,1e6")
            .unwrap()
            .to_simulation()
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "rate_grid"));
        let err = RunConfig::parse("p_sleep_w = 300")
            .unwrap()
            .to_simulation()
            .unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        assert!(RunConfig::parse("rate_grid = 1e5:1e8").is_err());
        assert!(RunConfig::parse("sota_load = busy").is_err());
    }

    #[test]
    fn manifest_keys_are_accepted() {
        let cfg =
            RunConfig::parse("tool_version = 0.1.0\nwall_clock_s = 1.5\niterations = 3").unwrap();
        assert_eq!(cfg.iterations, 3);
    }

    proptest! {
        #[test]
        fn text_round_trip(
            radius in 100.0f64..2000.0,
            sigma in 0.0f64..12.0,
            seed in any::<u64>(),
            iters in 1usize..100_000,
            noise in -130.0f64..-80.0,
            rates in proptest::collection::vec(0.0f64..1e9, 1..6),
            log in any::<bool>(),
        ) {
            let cfg = RunConfig {
                cell_radius_m: radius,
                shadowing_std_db: sigma,
                master_seed: seed,
                iterations: iters,
                noise_dbm: noise,
                rate_grid: if log { RateGrid::Log { min: 1e5, max: 3.3e8, points: 17 } } else { RateGrid::List(rates) },
                ..RunConfig::default()
            };
            prop_assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }
}
