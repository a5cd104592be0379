//! Command-line front end: rate sweeps, ellipsoid width reports, invariant
//! suites and norm evaluation.
//!
//! Exit codes: 0 success, 1 invariant or fit failure, 2 invalid or
//! inapplicable parameters.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bernwidths::error::Error;
use bernwidths::harness::{self, verify, ExperimentConfig};
use bernwidths::moduli::TGrid;
use bernwidths::quad::QuadratureRule;

#[derive(Parser)]
#[command(
    name = "bernwidths",
    version,
    about = "width asymptotics at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dyadic rate sweep of the upper/lower width pipelines with slope fits.
    Rates {
        /// JSON config file; flags override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
        #[arg(long)]
        p: Option<f64>,
        /// Target-norm exponent; accepts `inf`.
        #[arg(long)]
        q: Option<String>,
        /// Summability exponent; accepts `inf`.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        nmin: Option<u64>,
        #[arg(long)]
        nmax: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path (a companion `.plot` file is written next to it).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also compute the desk-scale lower certificate where admissible.
        #[arg(long)]
        cert: bool,
    },
    /// Exact, upper-bound and sampled widths of one diagonal ellipsoid.
    Widths {
        #[arg(long, value_delimiter = ',')]
        rho: Vec<f64>,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one invariant suite (or `all`).
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturb the grid projector by 1e-3 to demonstrate sensitivity.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Nikolskii/Besov-type norms of a catalog function.
    Norm {
        #[arg(long)]
        func: String,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        theta: Option<String>,
    },
}

fn parse_ext(v: &str) -> Result<f64, Error> {
    if v.eq_ignore_ascii_case("inf") || v.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    v.parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse `{v}` as a real or `inf`")))
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Inapplicable { .. }
        | Error::InvalidParameter(_)
        | Error::UnknownFunction(_)
        | Error::UnknownSuite(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Rates {
            config,
            alpha,
            p,
            q,
            theta,
            nmin,
            nmax,
            seed,
            out,
            cert,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(path.to_str().unwrap_or_default())?,
                None => ExperimentConfig::default(),
            };
            if let Some(alpha) = alpha {
                cfg.alpha = alpha;
            }
            if let Some(p) = p {
                cfg.p = p;
            }
            if let Some(q) = q {
                cfg.q = parse_ext(&q)?;
            }
            if let Some(theta) = theta {
                cfg.theta = parse_ext(&theta)?;
            }
            if let Some(nmin) = nmin {
                cfg.n_min = nmin;
            }
            if let Some(nmax) = nmax {
                cfg.n_max = nmax;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out = Some(out.to_string_lossy().into_owned());
            }
            if cert {
                cfg.certificate = true;
            }

            let report = harness::run_rates(&cfg)?;
            match &cfg.out {
                Some(path) => {
                    std::fs::write(path, &report.csv)?;
                    std::fs::write(format!("{path}.plot"), &report.plot)?;
                    println!("wrote {path} and {path}.plot");
                }
                None => print!("{}", report.csv),
            }
            println!(
                "slope_upper={:.4} slope_lower={:.4} theory={:.4} band={:.3} pass={}",
                report.slope_upper,
                report.slope_lower,
                -report.theory_exponent,
                report.band_upper,
                report.pass
            );
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Widths {
            rho,
            p,
            q,
            n,
            trials,
            seed,
        } => {
            let p = parse_ext(&p)?;
            let q = parse_ext(&q)?;
            let report = harness::run_widths(&rho, p, q, n, trials, seed)?;
            print!("{report}");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify {
            suite,
            seed,
            inject_fault,
        } => {
            let fault = if inject_fault { Some(1e-3) } else { None };
            let checks = verify::run_suite(&suite, fault, seed)?;
            let mut failures = 0usize;
            for c in &checks {
                println!(
                    "check={} status={}{}",
                    c.name,
                    if c.pass { "pass" } else { "fail" },
                    if c.detail.is_empty() {
                        String::new()
                    } else {
                        format!(" detail={}", c.detail)
                    }
                );
                if !c.pass {
                    failures += 1;
                }
            }
            println!("suite={suite} checks={} failures={failures}", checks.len());
            Ok(if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Norm {
            func,
            alpha,
            p,
            theta,
        } => {
            let theta = theta.map(|t| parse_ext(&t)).transpose()?;
            let report = harness::run_norm(
                &func,
                &alpha,
                p,
                theta,
                &TGrid::default(),
                &QuadratureRule::default(),
            )?;
            print!("{report}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
