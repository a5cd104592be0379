//! Experiment configuration, rate sweeps with CSV and plot-data emission,
//! log-log slope fits, and the invariant-suite runner.

pub mod verify;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, CertificateOpts, RegimeLabel};
use crate::error::{Error, Result};
use crate::fdwidths::{self, ConvexBody, Ellipsoid, SubspaceSearch};
use crate::indexgrid::AnisoParams;
use crate::moduli::{self, TGrid};
use crate::quad::QuadratureRule;

/// `f64` codec that writes infinity as JSON `null`.
mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let opt = Option::<f64>::deserialize(d)?;
        Ok(opt.unwrap_or(f64::INFINITY))
    }
}

/// Full description of one rate experiment.  JSON-loadable; CLI flags
/// override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub alpha: Vec<f64>,
    pub p: f64,
    #[serde(with = "maybe_inf")]
    pub q: f64,
    #[serde(with = "maybe_inf")]
    pub theta: f64,
    pub n_min: u64,
    pub n_max: u64,
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    pub slope_tol: f64,
    pub certificate: bool,
    pub t_grid: TGrid,
    pub quadrature: QuadratureRule,
    pub out: Option<String>,
    pub inject_fault: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha: vec![1.0],
            p: 2.0,
            q: 2.0,
            theta: f64::INFINITY,
            n_min: 8,
            n_max: 1024,
            seed: 0,
            trials: 1000,
            samples: 8,
            slope_tol: 0.05,
            certificate: false,
            t_grid: TGrid::default(),
            quadrature: QuadratureRule::default(),
            out: None,
            inject_fault: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One row of a rate sweep.
#[derive(Debug, Clone)]
pub struct RateRecord {
    pub n: u64,
    pub k: u64,
    pub regime: RegimeLabel,
    pub upper: f64,
    pub lower: f64,
    pub certificate: Option<f64>,
    pub theory_exponent: f64,
}

/// Ordinary least squares slope of `y` on `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx: f64 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my: f64 = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn fmt_sci(v: f64) -> String {
    format!("{v:.12e}")
}

fn fmt_q(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else {
        format!("{q}")
    }
}

/// Build identifier embedded in CSV headers.
pub fn build_tag() -> String {
    match option_env!("GIT_DESCRIBE") {
        Some(tag) => format!("bernwidths-{}+{tag}", env!("CARGO_PKG_VERSION")),
        None => format!("bernwidths-{}", env!("CARGO_PKG_VERSION")),
    }
}

/// Outcome of a rate sweep: the emitted files plus the fitted slopes.
#[derive(Debug)]
pub struct RatesReport {
    pub records: Vec<RateRecord>,
    pub csv: String,
    pub plot: String,
    pub slope_upper: f64,
    pub slope_lower: f64,
    pub theory_exponent: f64,
    pub band_upper: f64,
    pub pass: bool,
}

/// Run the dyadic rate sweep of the upper and lower pipelines and fit both
/// slopes against the regime exponent.
pub fn run_rates(cfg: &ExperimentConfig) -> Result<RatesReport> {
    let params = AnisoParams::new(cfg.alpha.clone(), cfg.p, cfg.q, cfg.theta)?;
    let regime = asymptotics::classify(&cfg.alpha, cfg.p, cfg.q);
    if regime.label == RegimeLabel::Inapplicable {
        return Err(Error::Inapplicable {
            violated: regime.violated().unwrap_or("no case applies").to_string(),
        });
    }
    let l = params.smoothness_order();
    let n0 = asymptotics::min_sweep_n(&l, &cfg.alpha)?;
    if cfg.n_min < n0 {
        return Err(Error::InvalidParameter(format!(
            "n_min = {} is below the sweep threshold {n0}",
            cfg.n_min
        )));
    }
    if cfg.n_max < 4 * cfg.n_min {
        return Err(Error::InvalidParameter(
            "n_max must be at least 4 * n_min for a slope fit".into(),
        ));
    }

    let mut records = Vec::new();
    let mut n = cfg.n_min;
    while n <= cfg.n_max {
        let (k, _) = asymptotics::resolution_for(n, &l, &cfg.alpha)?;
        let upper = asymptotics::upper_bound_value(&cfg.alpha, cfg.p, cfg.q, n)?;
        let lower = asymptotics::lower_bound_value(&cfg.alpha, cfg.p, cfg.q, n)?;
        let certificate =
            if cfg.certificate && cfg.alpha.len() <= 2 && n <= 32 && cfg.theta.is_finite() {
                let opts = CertificateOpts {
                    samples: cfg.samples,
                    seed: cfg.seed,
                    tgrid: cfg.t_grid.clone(),
                    ..CertificateOpts::default()
                };
                Some(asymptotics::lower_certificate(
                    &cfg.alpha, cfg.p, cfg.theta, cfg.q, n, &opts,
                )?)
            } else {
                None
            };
        records.push(RateRecord {
            n,
            k,
            regime: regime.label,
            upper,
            lower,
            certificate,
            theory_exponent: regime.exponent,
        });
        n = n
            .checked_mul(2)
            .ok_or(Error::Overflow { what: "sweep size" })?;
    }

    let upper_pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.n as f64).log2(), r.upper.log2()))
        .collect();
    let lower_pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.n as f64).log2(), r.lower.log2()))
        .collect();
    let slope_upper = fit_slope(&upper_pts);
    let slope_lower = fit_slope(&lower_pts);
    let compensated: Vec<f64> = records
        .iter()
        .map(|r| r.upper * (r.n as f64).powf(regime.exponent))
        .collect();
    let band_upper = compensated.iter().cloned().fold(0.0f64, f64::max)
        / compensated.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = (slope_upper + regime.exponent).abs() <= cfg.slope_tol
        && (slope_lower + regime.exponent).abs() <= cfg.slope_tol;

    let mut csv = String::new();
    csv.push_str(&format!(
        "# {} config={}\n",
        build_tag(),
        serde_json::to_string(cfg)?
    ));
    csv.push_str("n,k,regime,upper,lower,certificate,theory_exponent\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.k,
            r.regime,
            fmt_sci(r.upper),
            fmt_sci(r.lower),
            r.certificate.map(fmt_sci).unwrap_or_default(),
            fmt_sci(r.theory_exponent),
        ));
    }
    csv.push_str(&format!(
        "# fit_upper slope={} theory={} tol={} pass={}\n",
        fmt_sci(slope_upper),
        fmt_sci(-regime.exponent),
        cfg.slope_tol,
        (slope_upper + regime.exponent).abs() <= cfg.slope_tol
    ));
    csv.push_str(&format!(
        "# fit_lower slope={} theory={} tol={} pass={}\n",
        fmt_sci(slope_lower),
        fmt_sci(-regime.exponent),
        cfg.slope_tol,
        (slope_lower + regime.exponent).abs() <= cfg.slope_tol
    ));
    csv.push_str(&format!(
        "# band_upper max_over_min={} limit=20 pass={}\n",
        fmt_sci(band_upper),
        band_upper <= 20.0
    ));

    let mut plot = String::new();
    for (series, pick) in [("upper", 0usize), ("lower", 1), ("certificate", 2)] {
        let mut lines = Vec::new();
        for r in &records {
            let v = match pick {
                0 => Some(r.upper),
                1 => Some(r.lower),
                _ => r.certificate,
            };
            if let Some(v) = v {
                lines.push(format!(
                    "{} {}",
                    fmt_sci((r.n as f64).log2()),
                    fmt_sci(v.log2())
                ));
            }
        }
        if !lines.is_empty() {
            plot.push_str(&format!("# series: {series}\n"));
            plot.push_str(&lines.join("\n"));
            plot.push_str("\n\n");
        }
    }

    Ok(RatesReport {
        records,
        csv,
        plot,
        slope_upper,
        slope_lower,
        theory_exponent: regime.exponent,
        band_upper,
        pass,
    })
}

/// Report of the `widths` subcommand.
pub fn run_widths(
    rho: &[f64],
    p: f64,
    q: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<String> {
    let ball = Ellipsoid::new(rho.to_vec(), p)?;
    let sorted = ball.sorted_axes().to_vec();
    if n == 0 || n > rho.len() {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    let mut out = String::new();
    out.push_str(&format!(
        "rho={rho:?} p={} q={} n={n} trials={trials} seed={seed}\n",
        fmt_q(p),
        fmt_q(q)
    ));
    if p < q {
        let exact = fdwidths::ellipsoid_width_exact(&sorted, p, q, n)?;
        out.push_str(&format!("exact={}\n", fmt_sci(exact)));
    } else {
        out.push_str("exact formula inapplicable (requires p<q)\n");
    }
    if p.is_infinite() && (q - 2.0).abs() < 1e-12 {
        let upper = fdwidths::box_width_l2_upper(&sorted, n)?;
        out.push_str(&format!("box_l2_upper={}\n", fmt_sci(upper)));
    }
    let body = ConvexBody::Ball(ball);
    let search = SubspaceSearch {
        seed,
        ..SubspaceSearch::default()
    };
    let oracle = fdwidths::width_oracle(&body, q, n, trials, &search)?;
    out.push_str(&format!("oracle={}\n", fmt_sci(oracle)));
    Ok(out)
}

/// Report of the `norm` subcommand: the Nikolskii-type norm and, when a
/// finite `theta` is supplied, the Besov-type norm of a catalog function.
pub fn run_norm(
    func: &str,
    alpha: &[f64],
    p: f64,
    theta: Option<f64>,
    grid: &TGrid,
    rule: &QuadratureRule,
) -> Result<String> {
    let d = alpha.len();
    let f = moduli::catalog(func, d)?;
    let params = AnisoParams::new(alpha.to_vec(), p, p, theta.unwrap_or(f64::INFINITY))?;
    let h = moduli::nikolskii_norm(&f, &params, grid, rule)?;
    let mut out = String::new();
    out.push_str(&format!("func={func} alpha={alpha:?} p={p}\n"));
    out.push_str(&format!(
        "nikolskii: lp={} seminorms={:?} total={}\n",
        fmt_sci(h.lp),
        h.seminorms.iter().map(|&s| fmt_sci(s)).collect::<Vec<_>>(),
        fmt_sci(h.total)
    ));
    if let Some(theta) = theta {
        if theta.is_finite() {
            let b = moduli::besov_norm(&f, &params, grid, rule)?;
            out.push_str(&format!(
                "besov(theta={theta}): lp={} seminorms={:?} total={}\n",
                fmt_sci(b.lp),
                b.seminorms.iter().map(|&s| fmt_sci(s)).collect::<Vec<_>>(),
                fmt_sci(b.total)
            ));
        }
    }
    Ok(out)
}
