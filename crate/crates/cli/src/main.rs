//! `cextreme`: extreme value index estimation for censored data.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric or guard
//! error.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use cextreme::asymptotics::{
    ekm_cdf_asymptotics, hill_asymptotics, limit_variance_monte_carlo, limit_variance_quadrature, moment_asymptotics,
    moment_pair_asymptotics, AsymptoticLaw, MomentCase, SecondOrderParams,
};
use cextreme::ekm::write_ekm_csv;
use cextreme::estimators::{estimate_path, write_path_csv};
use cextreme::format::{fmt_f64, fmt_opt};
use cextreme::kaplan_meier::km_estimate;
use cextreme::simulation::{preset, run_experiment, run_scenarios, ExperimentSpec, KGrid, Preset, Scale};
use cextreme::{CensoredSample, ErrorKind, EstimatorId, NamedFn, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "cextreme", version, about = "Extreme value index estimation under random right-censoring")]
struct Cli {
    /// Master seed of every random stream [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Maximum number of worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimator path over a grid of k
    Estimate {
        /// CSV with `time` and `status` columns
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        estimator: EstimatorId,
        /// `a:b[:step]`
        #[arg(long)]
        k_grid: String,
        /// Divide the EKM integrals by the EKM mass
        #[arg(long)]
        normalized: bool,
        /// Attach plug-in variances and confidence intervals at this level
        #[arg(long)]
        ci: Option<f64>,
    },
    /// Monte-Carlo study from a JSON spec or a built-in preset
    #[command(group(ArgGroup::new("source").required(true).args(["spec", "preset"])))]
    Simulate {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Desk-scale preset (the default)
        #[arg(long, conflicts_with = "full_scale")]
        desk_scale: bool,
        /// Full-scale preset: 1000 replications, n in {1000, 10000}
        #[arg(long)]
        full_scale: bool,
    },
    /// Kaplan–Meier cdf as `x,cdf`
    Km {
        #[arg(long)]
        input: PathBuf,
    },
    /// EKM weights of the top k as `ratio,delta,omega,cum_mass`
    Ekm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Asymptotic bias and variance
    Variance {
        #[arg(long, value_enum)]
        law: Law,
        #[arg(long, allow_hyphen_values = true)]
        gf: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        gg: Option<f64>,
        #[arg(long)]
        alpha_f: Option<f64>,
        /// Evaluation point of the EKM cdf
        #[arg(long)]
        x0: Option<f64>,
        /// Integrand of the quadrature law: one, log, log2, indicator(x0), power(p)
        #[arg(long)]
        phi: Option<String>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rho: f64,
        /// Also estimate the quadrature variance from this many Monte-Carlo draws
        #[arg(long)]
        mc_draws: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Law {
    Hill,
    MomentPos,
    MomentZero,
    MomentNeg,
    EkmCdf,
    Quadrature,
}

type Result<T> = cextreme::Result<T>;

fn required(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| cextreme::Error::InvalidParameter(format!("--{flag} is required for this law")))
}

fn run(cli: Cli) -> Result<Vec<u8>> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let mut out = Vec::new();
    match cli.command {
        Command::Estimate { input, estimator, k_grid, normalized, ci } => {
            let sorted = CensoredSample::read_csv(&input)?.sort();
            let grid: KGrid = k_grid.parse()?;
            grid.validate(sorted.len())?;
            let rows = estimate_path(&sorted, estimator, normalized, grid.values(), ci)?;
            write_path_csv(&rows, ci.is_some(), &mut out)?;
        }
        Command::Simulate { spec, preset: name, full_scale, .. } => {
            if let Some(path) = spec {
                let text = fs::read_to_string(&path)?;
                let mut spec = ExperimentSpec::from_json(&text)?;
                if let Some(s) = cli.seed {
                    spec.master_seed = s;
                }
                run_experiment(&spec, cli.threads)?.write_csv(&mut out)?;
            } else {
                let which: Preset = name.expect("clap enforces one source").parse()?;
                let scale = if full_scale { Scale::Full } else { Scale::Desk };
                run_scenarios(&preset(which, scale, seed), cli.threads, &mut out)?;
            }
        }
        Command::Km { input } => {
            let cdf = km_estimate(&CensoredSample::read_csv(&input)?.sort());
            writeln!(out, "x,cdf")?;
            for (x, v) in cdf.knots().iter().zip(cdf.values()) {
                writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*v))?;
            }
        }
        Command::Ekm { input, k } => {
            let view = CensoredSample::read_csv(&input)?.sort().top_k_view(k)?;
            write_ekm_csv(&view, &mut out)?;
        }
        Command::Variance { law, gf, gg, alpha_f, x0, phi, lambda, rho, mc_draws } => {
            let so = SecondOrderParams::with_lambda(lambda, rho);
            let write_law = |out: &mut Vec<u8>, l: AsymptoticLaw| -> Result<()> {
                writeln!(out, "bias,variance")?;
                writeln!(out, "{},{}", fmt_f64(l.bias), fmt_f64(l.variance))?;
                Ok(())
            };
            match law {
                Law::Hill => write_law(&mut out, hill_asymptotics(required(gf, "gf")?, required(gg, "gg")?, &so)?)?,
                Law::MomentPos => {
                    let case = MomentCase::Positive { gamma_f: required(gf, "gf")?, gamma_g: required(gg, "gg")? };
                    write_law(&mut out, moment_asymptotics(case, &so)?)?
                }
                Law::MomentZero => {
                    let case = MomentCase::Zero { alpha_f: required(alpha_f, "alpha-f")? };
                    write_law(&mut out, moment_asymptotics(case, &so)?)?
                }
                Law::MomentNeg => {
                    let case = MomentCase::Negative { gamma_f: required(gf, "gf")?, gamma_g: required(gg, "gg")? };
                    write_law(&mut out, moment_asymptotics(case, &so)?)?
                }
                Law::EkmCdf => write_law(
                    &mut out,
                    ekm_cdf_asymptotics(required(x0, "x0")?, required(gf, "gf")?, required(gg, "gg")?, &so)?,
                )?,
                Law::Quadrature => {
                    let phi: NamedFn = phi
                        .ok_or_else(|| cextreme::Error::InvalidParameter("--phi is required for this law".into()))?
                        .parse()?;
                    let (gf, gg) = (required(gf, "gf")?, required(gg, "gg")?);
                    let quad = limit_variance_quadrature(phi, gf, gg)?;
                    let closed = match phi {
                        NamedFn::Log => Some(hill_asymptotics(gf, gg, &SecondOrderParams::default())?.variance),
                        NamedFn::Log2 => Some(moment_pair_asymptotics(gf, gg, &SecondOrderParams::default())?.1[1][1]),
                        NamedFn::Indicator(x0) if x0 > 1.0 => {
                            Some(ekm_cdf_asymptotics(x0, gf, gg, &SecondOrderParams::default())?.variance)
                        }
                        _ => None,
                    };
                    match mc_draws {
                        Some(draws) => {
                            let mut rng = ChaCha20Rng::seed_from_u64(seed);
                            let mc = limit_variance_monte_carlo(phi, gf, gg, draws, &mut rng)?;
                            writeln!(out, "phi,closed_form,quadrature,monte_carlo,mc_std_error")?;
                            writeln!(
                                out,
                                "{phi},{},{},{},{}",
                                fmt_opt(closed),
                                fmt_f64(quad),
                                fmt_f64(mc.variance),
                                fmt_f64(mc.std_error)
                            )?;
                        }
                        None => {
                            writeln!(out, "phi,closed_form,quadrature")?;
                            writeln!(out, "{phi},{},{}", fmt_opt(closed), fmt_f64(quad))?;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numeric => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let out_path = cli.out.clone();
    let bytes = match run(cli) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(e.kind()));
        }
    };
    let written = match out_path {
        Some(path) => fs::write(&path, &bytes),
        None => io::stdout().lock().write_all(&bytes),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::from(2)
        }
    }
}
