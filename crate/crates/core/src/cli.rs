//! Command-line front end.
//!
//! Exit codes: 0 success, 1 hypothesis violation, 2 accuracy failure,
//! 3 bad configuration or input.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::config::WalkConfig;
use crate::error::{Error, Result};
use crate::experiments::{compare, convergence_sweep, write_reports_csv, FamilySpec, Mode};
use crate::kernel::io::{write_field, FieldHeader};
use crate::kernel::{estimate_stable_constant, gaussian_symbol_check, spectral_gap, FieldTag, KernelField, Walk};
use crate::limits::{self, Regime};
use crate::montecarlo::{build_sampler_from_walk, empirical_kernel};
use crate::profile::validate;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "TORWALK_THREADS";

#[derive(Parser, Debug)]
#[command(name = "torwalk", version, about = "Exact kernels and local limit diagnostics for circulant walks on discrete tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Stable,
    Gaussian,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Stable => Mode::Stable,
            ModeArg::Gaussian => Mode::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ThetaKind {
    Stable,
    Jacobi,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact n-step kernel as CSV.
    Kernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fourier symbol as CSV plus symbol diagnostics as JSON on stdout.
    Symbol {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regime prediction field as CSV.
    Limit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// I, II or III; defaults to the classified regime.
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the exact kernel with its regime prediction; JSON on stdout.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        regime: Option<String>,
        /// Also append the report as a CSV row to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a scaling family; one CSV row per member.
    Sweep {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the n-step kernel.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1_000_000)]
        chains: u64,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a stable or Jacobi theta function.
    Theta {
        #[arg(long, value_enum, default_value = "stable")]
        kind: ThetaKind,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        /// Point, comma separated.
        #[arg(long, default_value = "0")]
        z: String,
        /// Quadratic form for the Jacobi kind, row-major and comma separated.
        #[arg(long)]
        gamma: Option<String>,
        /// Also evaluate the spatial series with this cutoff (stable, d = 1).
        #[arg(long)]
        spatial_cutoff: Option<usize>,
    },
    /// Check the theorem hypotheses for a configured walk.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(Box::new(BufWriter::new(File::create(p)?))),
        _ => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {t:?}")))).collect()
}

fn load_walk(path: &Path) -> Result<(WalkConfig, Walk)> {
    let cfg = WalkConfig::load(path)?;
    let walk = Walk::new(cfg.walk_spec()?)?;
    Ok((cfg, walk))
}

fn configure_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
                    log::debug!("thread pool already initialised");
                }
            }
            _ => log::warn!("ignoring {THREADS_ENV}={v:?}"),
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Kernel { config, n, out } => {
            let (_, walk) = load_walk(&config)?;
            let field = walk.n_step(n);
            let header = FieldHeader::for_field(walk.spec(), &field);
            write_field(open_out(&out)?, &header, &field, None)?;
            if field.clamped_mass > 0.0 {
                log::info!("clamped negative mass {:e}", field.clamped_mass);
            }
        }
        Command::Symbol { config, out } => {
            let (cfg, walk) = load_walk(&config)?;
            let geom = *walk.geom();
            let mut w = csv::Writer::from_writer(open_out(&out)?);
            let mut cols: Vec<String> = (1..=geom.dim()).map(|i| format!("k{i}")).collect();
            cols.push("value".into());
            w.write_record(&cols)?;
            let mut k = vec![0i64; geom.dim()];
            for (i, v) in walk.symbol().values.iter().enumerate() {
                geom.coords_into(i, &mut k);
                let mut row: Vec<String> = k.iter().map(|c| c.to_string()).collect();
                row.push(format!("{v:e}"));
                w.write_record(&row)?;
            }
            w.flush()?;
            let fit = match walk.spec().profile().tail_index() {
                Some(_) => match estimate_stable_constant(&walk, cfg.fit_window()) {
                    Ok(f) => json!(f),
                    Err(e) => json!({ "error": e.to_string() }),
                },
                None => serde_json::Value::Null,
            };
            let gap = spectral_gap(&walk, cfg.delta).map(|g| json!(g)).unwrap_or_else(|e| json!({ "error": e.to_string() }));
            let diag = json!({
                "omega": walk.omega(),
                "imag_residue": walk.symbol().imag_residue,
                "spectral_gap": gap,
                "delta": cfg.delta,
                "stable_fit": fit,
            });
            if out.is_some() {
                print_json(&diag)?;
            } else {
                eprintln!("{}", serde_json::to_string_pretty(&diag)?);
            }
        }
        Command::Limit { config, n, mode, regime, out } => {
            let (cfg, walk) = load_walk(&config)?;
            let mode: Mode = mode.into();
            let spec = walk.spec();
            let regime = match regime {
                Some(r) => Regime::parse(&r)?,
                None => crate::experiments::classify_regime(spec, n, mode, cfg.thresholds)?
                    .classification
                    .regime()
                    .ok_or_else(|| Error::HypothesisViolation("regime indeterminate; pass --regime".into()))?,
            };
            let geom = *walk.geom();
            let values: Vec<f64> = match mode {
                Mode::Stable => {
                    let (p, _, _) = crate::experiments::stable_params(&walk, cfg.stable_constant, cfg.fit_window())?;
                    (0..geom.sites())
                        .map(|i| limits::stable_prediction(spec, n, geom.point_at(i).coords(), regime, &p))
                        .collect::<Result<_>>()?
                }
                Mode::Gaussian => {
                    let g = limits::lattice_covariance_of(&walk)?;
                    (0..geom.sites())
                        .map(|i| limits::gaussian_prediction(spec, n, geom.point_at(i).coords(), regime, &g))
                        .collect::<Result<_>>()?
                }
            };
            let label = format!("{mode:?} regime {regime}").to_lowercase();
            let field = KernelField { geom, values, tag: FieldTag::Prediction { n, label }, clamped_mass: 0.0 };
            let header = FieldHeader::for_field(spec, &field);
            write_field(open_out(&out)?, &header, &field, None)?;
        }
        Command::Compare { config, n, mode, regime, csv: csv_path } => {
            let (cfg, walk) = load_walk(&config)?;
            let mut opts = cfg.compare_options();
            opts.regime = regime.map(|r| Regime::parse(&r)).transpose()?;
            let report = compare(&walk, n, mode.into(), &opts)?;
            print_json(&report)?;
            if let Some(p) = csv_path {
                write_reports_csv(File::create(p)?, std::slice::from_ref(&report))?;
            }
        }
        Command::Sweep { family, out, json } => {
            let text = std::fs::read_to_string(&family).map_err(|e| Error::Config(format!("cannot read {}: {e}", family.display())))?;
            let fam: FamilySpec = serde_json::from_str(&text).map_err(|e| Error::Config(format!("cannot parse family: {e}")))?;
            let res = convergence_sweep(&fam)?;
            write_reports_csv(open_out(&out)?, &res.reports)?;
            if let Some(p) = json {
                serde_json::to_writer_pretty(BufWriter::new(File::create(p)?), &res)?;
            }
            if out.is_some() {
                print_json(&json!({
                    "name": res.name,
                    "sup_rel_errors": res.sup_rel_errors,
                    "strictly_decreasing": res.strictly_decreasing,
                    "bound_ratio_spread": res.bound_ratio_spread,
                }))?;
            }
        }
        Command::Mc { config, n, chains, seed, out } => {
            let (cfg, walk) = load_walk(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let table = build_sampler_from_walk(&walk)?;
            let emp = empirical_kernel(&table, n, chains, seed)?;
            let header = FieldHeader::for_field(walk.spec(), &emp.field);
            write_field(open_out(&out)?, &header, &emp.field, Some(&emp.standard_errors))?;
            let exact = walk.n_step(n);
            let summary = json!({
                "n": n,
                "chains": chains,
                "seed": seed,
                "fraction_outside_4se": emp.fraction_outside(&exact.values, 4.0),
                "max_se": emp.max_se(),
            });
            if out.is_some() {
                print_json(&summary)?;
            } else {
                eprintln!("{summary}");
            }
        }
        Command::Theta { kind, alpha, c, tau, z, gamma, spatial_cutoff } => {
            let z = parse_list(&z)?;
            match kind {
                ThetaKind::Stable => {
                    let p = limits::StableLimitParams::new(alpha, c, z.len())?;
                    let dual = limits::stable_theta(&p, &z, tau)?;
                    let spatial = match spatial_cutoff {
                        Some(k) => Some(limits::stable_theta_spatial(&p, z[0], tau, k)?),
                        None => None,
                    };
                    print_json(&json!({ "kind": "stable", "params": p, "tau": tau, "z": z, "dual": dual, "spatial": spatial }))?;
                }
                ThetaKind::Jacobi => {
                    let g = parse_list(gamma.as_deref().ok_or_else(|| Error::Config("--gamma is required for the jacobi kind".into()))?)?;
                    let d = z.len();
                    if g.len() != d * d {
                        return Err(Error::DimensionMismatch { expected: d * d, got: g.len() });
                    }
                    let m = DMatrix::from_row_slice(d, d, &g);
                    let v = limits::jacobi_theta(&z, &m)?;
                    print_json(
                        &json!({ "kind": "jacobi", "z": z, "re": v.value.re, "im": v.value.im, "tail_bound": v.tail_bound, "terms": v.terms }),
                    )?;
                }
            }
        }
        Command::Validate { config } => {
            let (cfg, walk) = load_walk(&config)?;
            let report = validate(walk.spec().profile());
            let mut ok = report.all_passed();
            let gap = spectral_gap(&walk, cfg.delta)?;
            ok &= gap < 1.0;
            let symbol_check = if walk.spec().profile().covariance().is_some() {
                let n0 = 64u64;
                let r = gaussian_symbol_check(&walk, cfg.delta, &[n0, 4 * n0, 16 * n0], cfg.delta0)?;
                ok &= r.inequality_holds;
                Some(r)
            } else {
                None
            };
            print_json(&json!({
                "profile": report,
                "omega": walk.omega(),
                "spectral_gap": gap,
                "gaussian_symbol_check": symbol_check,
                "passed": ok,
            }))?;
            if !ok {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parse `argv` and run the requested subcommand, returning the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
