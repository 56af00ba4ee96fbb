//! `bspower` command line.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_scheme_list, RateGrid, RunConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{gain_report, realize_drop, run_drop, run_sweep, run_sweep_with_threads};
use crate::optimizer::{optimal_mu, optimal_mu_t_traced, OptimizerSettings, TraceStage};
use crate::output::{curve_file_name, gain_summary, write_curve, write_gains, RunManifest};
use crate::schemes::SchemeId;
use crate::units::{db_to_linear, dbm_to_w, linear_to_db};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bspower",
    version,
    about = "Base-station supply power under resource sharing, power control and DTX"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Key-value configuration file; defaults apply to absent keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated scheme names, e.g. RS_PC_DTX,SOTA.
    #[arg(long)]
    schemes: Option<String>,
    /// Comma-separated rates in bps, or min:max:points (log-spaced).
    #[arg(long)]
    rates: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the rate sweep and write curves, gains and a manifest.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Tabulate the optimal resource share against the gain ratio.
    MuCurves {
        /// Comma-separated spectral efficiencies in bps/Hz.
        #[arg(long, default_value = "0.1,0.5,1,2,4,6")]
        sigmas: String,
        /// G1/G2 range in dB as min:max:points (linear in dB).
        #[arg(
            long = "ratio-db",
            default_value = "-40:40:81",
            allow_hyphen_values = true
        )]
        ratio_db: String,
        /// Gain of link 2 in dB.
        #[arg(long = "g2-db", default_value_t = -100.0, allow_hyphen_values = true)]
        g2_db: f64,
        #[arg(long = "noise-dbm", default_value_t = -100.0, allow_hyphen_values = true)]
        noise_dbm: f64,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one drop, every scheme's result and the optimizer trace.
    Inspect {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "drop", default_value_t = 0)]
        drop_index: usize,
        #[arg(long = "rate")]
        rate_bps: f64,
    },
    /// Parse and validate a configuration, then print it resolved.
    ValidateConfig {
        #[command(flatten)]
        run: RunArgs,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let res = match cli.command {
        Command::Sweep { run, out, threads } => {
            resolve(&run).and_then(|cfg| cmd_sweep(&cfg, &out, threads, stdout))
        }
        Command::MuCurves {
            sigmas,
            ratio_db,
            g2_db,
            noise_dbm,
            out,
        } => cmd_mu_curves(&sigmas, &ratio_db, g2_db, noise_dbm, out.as_deref(), stdout),
        Command::Inspect {
            run,
            drop_index,
            rate_bps,
        } => resolve(&run).and_then(|cfg| cmd_inspect(&cfg, drop_index, rate_bps, stdout)),
        Command::ValidateConfig { run } => resolve(&run).map(|cfg| {
            let _ = write!(stdout, "{}", cfg.to_text());
        }),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Loads the config file (if any), applies flag overrides and validates.
fn resolve(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = args.iterations {
        cfg.iterations = n;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(s) = &args.schemes {
        cfg.schemes = parse_scheme_list(s)?;
    }
    if let Some(r) = &args.rates {
        cfg.rate_grid = RateGrid::parse(r)?;
    }
    cfg.to_simulation()?;
    Ok(cfg)
}

/// Runs the sweep and writes its files into `out_dir`. On failure every
/// file written so far is removed again.
pub fn cmd_sweep(
    cfg: &RunConfig,
    out_dir: &Path,
    threads: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let sim = cfg.to_simulation()?;
    let start = Instant::now();
    let curves = match threads {
        Some(n) => run_sweep_with_threads(&sim, n)?,
        None => run_sweep(&sim)?,
    };
    let report = if sim.schemes.contains(&SchemeId::Sota) {
        Some(gain_report(&curves)?)
    } else {
        None
    };
    let manifest = RunManifest {
        config: cfg.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };

    let created_dir = !out_dir.exists();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for curve in &curves {
            let path = out_dir.join(curve_file_name(curve.scheme));
            written.push(path.clone());
            write_curve(&path, curve)?;
        }
        if let Some(rep) = &report {
            let path = out_dir.join("gains.csv");
            written.push(path.clone());
            write_gains(&path, rep)?;
            let path = out_dir.join("gain_summary.txt");
            written.push(path.clone());
            std::fs::write(&path, gain_summary(rep)).map_err(|e| Error::io(&path, e))?;
        }
        let path = out_dir.join("manifest.txt");
        written.push(path.clone());
        std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
        Ok(())
    })();
    if let Err(e) = result {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        if created_dir {
            let _ = std::fs::remove_dir(out_dir);
        }
        return Err(e);
    }

    let _ = writeln!(
        stdout,
        "{} drops x {} rates in {:.1} s -> {}",
        sim.iterations,
        sim.rate_grid_bps.len(),
        manifest.wall_clock_s,
        out_dir.display()
    );
    if let Some(rep) = &report {
        let _ = write!(stdout, "{}", gain_summary(rep));
    }
    Ok(())
}

pub fn parse_sigmas(s: &str) -> Result<Vec<f64>> {
    let sigmas = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::config("sigmas", format!("cannot parse `{s}`")))?;
    if sigmas.is_empty() || sigmas.iter().any(|x| !(0.1..=6.0).contains(x)) {
        return Err(Error::config(
            "sigmas",
            "need one or more values in [0.1, 6]",
        ));
    }
    Ok(sigmas)
}

pub fn parse_ratio_range(s: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::config(
            "ratio-db",
            format!("expected min:max:points with min < max, points >= 2, got `{s}`"),
        )
    };
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo < hi && hi.is_finite() && lo.is_finite()) || n < 2 {
        return Err(bad());
    }
    Ok((0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect())
}

/// One row of the optimal-share table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuCurvePoint {
    pub sigma: f64,
    pub gain_ratio_db: f64,
    pub mu_opt: f64,
    pub p_tx_w: Option<f64>,
}

pub fn mu_curves(
    sigmas: &[f64],
    ratios_db: &[f64],
    g2_db: f64,
    noise_dbm: f64,
) -> Result<Vec<MuCurvePoint>> {
    let settings = OptimizerSettings::default();
    let g2 = db_to_linear(g2_db);
    let noise = dbm_to_w(noise_dbm);
    let mut rows = Vec::with_capacity(sigmas.len() * ratios_db.len());
    for &sigma in sigmas {
        for &x in ratios_db {
            let g1 = g2 * db_to_linear(x);
            let (mu, p) = optimal_mu(sigma, g1, g2, noise, &settings)?;
            rows.push(MuCurvePoint {
                sigma,
                gain_ratio_db: x,
                mu_opt: mu.mu(),
                p_tx_w: p.watts(),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_mu_curves(
    sigmas: &str,
    ratio_db: &str,
    g2_db: f64,
    noise_dbm: f64,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let rows = mu_curves(
        &parse_sigmas(sigmas)?,
        &parse_ratio_range(ratio_db)?,
        g2_db,
        noise_dbm,
    )?;
    let mut text = String::from("sigma,gain_ratio_db,mu_opt,p_tx_w\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.sigma,
            r.gain_ratio_db,
            r.mu_opt,
            r.p_tx_w.map_or("NA".to_string(), |p| p.to_string())
        ));
    }
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn stage_name(s: TraceStage) -> &'static str {
    match s {
        TraceStage::Boundary => "boundary",
        TraceStage::Coarse => "coarse",
        TraceStage::OnOff => "onoff",
        TraceStage::Refine => "refine",
    }
}

pub fn cmd_inspect(
    cfg: &RunConfig,
    drop_index: usize,
    rate_bps: f64,
    out: &mut dyn Write,
) -> Result<()> {
    let sim = cfg.to_simulation()?;
    if !(rate_bps >= 0.0 && rate_bps.is_finite()) {
        return Err(Error::config("rate", "must be finite and >= 0"));
    }
    let drop = realize_drop(&sim, drop_index)?;
    let results = run_drop(&sim, drop_index, rate_bps)?;
    let r = drop.realization;
    let mut s = String::new();
    s.push_str(&format!(
        "seed {}  drop {}  rate {} bps\n",
        sim.master_seed, drop_index, rate_bps
    ));
    for i in 0..2 {
        s.push_str(&format!(
            "  user {}: distance {:8.2} m  pathloss {:7.2} dB  with shadowing {:7.2} dB  gain {:8.2} dB\n",
            i + 1,
            drop.distance_m[i],
            drop.pathloss_db[i],
            drop.attenuation_db[i],
            linear_to_db([r.g1, r.g2][i]),
        ));
    }
    s.push_str(&format!(
        "  noise {:.3e} W  bandwidth {:.3e} Hz\n",
        r.noise_w, r.bandwidth_hz
    ));
    for res in &results {
        s.push_str(&format!(
            "  {:<10} supply {:9.4} W  tx {:9.4} W  mu {:.6}  t {:.6}{}\n",
            res.scheme.name(),
            res.p_supply_w,
            res.p_tx_w,
            res.allocation.mu(),
            res.allocation.t(),
            if res.outage { "  OUTAGE" } else { "" }
        ));
    }
    let sigma = rate_bps / sim.bandwidth_hz;
    let (sol, trace) = optimal_mu_t_traced(sigma, &r, &sim.pm, &sim.optimizer)?;
    s.push_str(&format!(
        "  optimizer: mu* {:.6}  t* {:.6}  supply {:.4} W  feasible {}\n",
        sol.allocation.mu(),
        sol.allocation.t(),
        sol.p_supply_w,
        sol.feasible
    ));
    for p in &trace {
        s.push_str(&format!(
            "    {:<8} t {:.6e}  mu {:.6}  tx {}  supply {}\n",
            stage_name(p.stage),
            p.t,
            p.mu,
            p.p_tx,
            p.p_supply_w
                .map_or("capped".to_string(), |x| format!("{x:.6} W"))
        ));
    }
    out.write_all(s.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}
