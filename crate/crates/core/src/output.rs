//! Curve, gain and manifest files.
//!
//! Curve files are comma-separated with a header row:
//!
//! ```text
//! rate_bps,scheme,mean_supply_w,mean_supply_dbm,outage_prob,mean_mu,mean_t,n_feasible
//! ```
//!
//! Means over an empty feasible set are written as `NA`. Floats use the
//! shortest representation that parses back to the same value.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{saving_fraction, GainReport, SweepCurve, SweepPoint};
use crate::schemes::SchemeId;
use crate::units::w_to_dbm;

pub const CURVE_HEADER: [&str; 8] = [
    "rate_bps",
    "scheme",
    "mean_supply_w",
    "mean_supply_dbm",
    "outage_prob",
    "mean_mu",
    "mean_t",
    "n_feasible",
];

pub const ABSENT: &str = "NA";

pub fn curve_file_name(scheme: SchemeId) -> String {
    format!("curve_{}.csv", scheme.name())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| ABSENT.to_string(), |v| v.to_string())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

pub fn write_curve_to<W: Write>(w: W, curve: &SweepCurve) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CURVE_HEADER)?;
    for p in &curve.points {
        out.write_record([
            p.rate_bps.to_string(),
            curve.scheme.name().to_string(),
            opt(p.mean_supply_w),
            opt(p.mean_supply_w.map(w_to_dbm)),
            p.outage_prob.to_string(),
            opt(p.mean_mu),
            opt(p.mean_t),
            p.n_feasible.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_curve(path: &Path, curve: &SweepCurve) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_curve_to(f, curve).map_err(|e| csv_err(path, e))
}

pub fn read_curve(path: &Path) -> Result<SweepCurve> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(f);
    let fmt = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CURVE_HEADER.iter().copied()) {
        return Err(fmt(format!("unexpected header {header:?}")));
    }
    let mut scheme = None;
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = i + 2;
        let f64_at = |col: usize| -> Result<f64> {
            rec[col].parse().map_err(|_| {
                fmt(format!(
                    "row {row}: bad {} `{}`",
                    CURVE_HEADER[col], &rec[col]
                ))
            })
        };
        let opt_at = |col: usize| -> Result<Option<f64>> {
            if &rec[col] == ABSENT {
                Ok(None)
            } else {
                f64_at(col).map(Some)
            }
        };
        let id: SchemeId = rec[1]
            .parse()
            .map_err(|_| fmt(format!("row {row}: bad scheme")))?;
        if *scheme.get_or_insert(id) != id {
            return Err(fmt(format!("row {row}: mixed schemes in one curve file")));
        }
        let mean_supply_w = opt_at(2)?;
        if opt_at(3)?.is_some() != mean_supply_w.is_some() {
            return Err(fmt(format!(
                "row {row}: dBm column disagrees with W column"
            )));
        }
        points.push(SweepPoint {
            rate_bps: f64_at(0)?,
            mean_supply_w,
            outage_prob: f64_at(4)?,
            mean_mu: opt_at(5)?,
            mean_t: opt_at(6)?,
            n_feasible: rec[7]
                .parse()
                .map_err(|_| fmt(format!("row {row}: bad n_feasible")))?,
        });
    }
    let scheme = scheme.ok_or_else(|| fmt("no data rows".to_string()))?;
    Ok(SweepCurve { scheme, points })
}

pub fn write_gains(path: &Path, report: &GainReport) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = csv::Writer::from_writer(f);
    let run = |out: &mut csv::Writer<File>| -> csv::Result<()> {
        out.write_record(["rate_bps", "scheme", "gain_db", "saving_pct"])?;
        for g in &report.schemes {
            for (rate, gain) in report.rates_bps.iter().zip(&g.gain_db) {
                out.write_record([
                    rate.to_string(),
                    g.scheme.name().to_string(),
                    opt(*gain),
                    opt(gain.map(|x| 100.0 * saving_fraction(x))),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    };
    run(&mut out).map_err(|e| csv_err(path, e))
}

fn fmt_gain(g: Option<f64>) -> String {
    match g {
        Some(db) => format!("{db:6.2} dB ({:5.1}% saving)", 100.0 * saving_fraction(db)),
        None => "   n/a".to_string(),
    }
}

pub fn gain_summary(report: &GainReport) -> String {
    let rate = |r: Option<f64>| r.map_or("n/a".to_string(), |x| format!("{x:.3e} bps"));
    let mut s = String::new();
    s.push_str("Supply-power gain over the conventional (SOTA) station\n");
    s.push_str(&format!(
        "  low-load anchor:  {}\n",
        rate(report.low_load_rate_bps)
    ));
    s.push_str(&format!(
        "  high-load anchor: {}\n",
        rate(report.high_load_rate_bps)
    ));
    for g in &report.schemes {
        if g.scheme == SchemeId::Sota {
            continue;
        }
        s.push_str(&format!(
            "  {:<10} low {}   high {}\n",
            g.scheme.name(),
            fmt_gain(g.low_load_gain_db),
            fmt_gain(g.high_load_gain_db)
        ));
    }
    s
}

/// Everything needed to re-run a sweep; see [`RunConfig::parse`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config: RunConfig,
    pub tool_version: String,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        format!(
            "# bspower run manifest; usable as --config\ntool_version = {}\nwall_clock_s = {:.3}\n{}",
            self.tool_version,
            self.wall_clock_s,
            self.config.to_text()
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config = RunConfig::parse(text)?;
        let mut tool_version = String::new();
        let mut wall_clock_s = 0.0;
        for line in text.lines() {
            if let Some((k, v)) = line.split('#').next().unwrap_or("").split_once('=') {
                match k.trim() {
                    "tool_version" => tool_version = v.trim().to_string(),
                    "wall_clock_s" => {
                        wall_clock_s = v
                            .trim()
                            .parse()
                            .map_err(|_| Error::config("wall_clock_s", "cannot parse"))?
                    }
                    _ => {}
                }
            }
        }
        Ok(RunManifest {
            config,
            tool_version,
            wall_clock_s,
        })
    }
}
