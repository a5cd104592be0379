//! Regime classification with theoretical width exponents, the upper-bound
//! pipeline through finite-dimensional ellipsoid widths, and the
//! bump-system lower bounds.
//!
//! All unspecified constants of the two-sided asymptotics are set to one;
//! every claim is therefore checked as a log-log slope or a bounded
//! oscillation band, never as an absolute value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fdwidths;
use crate::indexgrid::{
    dyadic_levels, lattice_dims, lex_positions, lex_rank, piecewise_dim, pos_part, recip,
    AnisoParams, MultiIndex,
};
use crate::moduli::{self, TGrid};
use crate::polyspace::{self, GridFunction};
use crate::quad::QuadratureRule;

/// Which case of the width asymptotics applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RegimeLabel {
    R1,
    R2,
    R3,
    Inapplicable,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RegimeLabel::R1 => "R1",
            RegimeLabel::R2 => "R2",
            RegimeLabel::R3 => "R3",
            RegimeLabel::Inapplicable => "inapplicable",
        };
        write!(f, "{s}")
    }
}

/// Classification outcome: the regime, its width exponent, and every side
/// condition together with its truth value.
#[derive(Debug, Clone)]
pub struct Regime {
    pub label: RegimeLabel,
    pub exponent: f64,
    pub conditions: Vec<(String, bool)>,
}

impl Regime {
    /// Name of the first violated condition, for error reporting.
    pub fn violated(&self) -> Option<&str> {
        self.conditions
            .iter()
            .find(|(_, ok)| !ok)
            .map(|(name, _)| name.as_str())
    }
}

/// Classify `(alpha, p, q)` into a width regime and compute its exponent.
pub fn classify(alpha: &[f64], p: f64, q: f64) -> Regime {
    if !(1.0..f64::INFINITY).contains(&p) || !(q >= 1.0) {
        return Regime {
            label: RegimeLabel::Inapplicable,
            exponent: f64::NAN,
            conditions: vec![("1 <= p < infinity and 1 <= q <= infinity".into(), false)],
        };
    }
    let hs: f64 = alpha.iter().map(|&a| 1.0 / a).sum();
    let rp = recip(p);
    let rq = recip(q);
    let approx_cond = 1.0 - hs * pos_part(rp - rq);

    let mut conditions = vec![(
        format!("1 - hsum*(1/p - 1/q)_+ = {approx_cond:.6} > 0"),
        approx_cond > 0.0,
    )];

    // first case: q <= p <= 2, or q = p, or p < q with its positivity
    if (q <= p && p <= 2.0) || (q == p && p < f64::INFINITY) {
        conditions.push(("q <= p <= 2 or q = p".into(), true));
        return Regime {
            label: RegimeLabel::R1,
            exponent: 1.0 / hs,
            conditions,
        };
    }
    if p < q {
        let c = 1.0 - hs * rp + hs * rq;
        conditions.push((
            format!("p < q and 1 - hsum/p + hsum/q = {c:.6} > 0"),
            c > 0.0,
        ));
        if c > 0.0 {
            return Regime {
                label: RegimeLabel::R1,
                exponent: 1.0 / hs,
                conditions,
            };
        }
        return Regime {
            label: RegimeLabel::Inapplicable,
            exponent: f64::NAN,
            conditions,
        };
    }
    // here q < p; the two remaining cases overlap at q = 2, where their
    // conditions and exponents coincide, and the summability-corrected one
    // takes the label
    if q >= 2.0 {
        let c = 1.0 - hs * rp + hs * rq - hs * 0.5;
        conditions.push((
            format!("2 <= q < p and 1 - hsum/p + hsum/q - hsum/2 = {c:.6} > 0"),
            c > 0.0,
        ));
        if c > 0.0 {
            return Regime {
                label: RegimeLabel::R3,
                exponent: 1.0 / hs - rp + rq,
                conditions,
            };
        }
        return Regime {
            label: RegimeLabel::Inapplicable,
            exponent: f64::NAN,
            conditions,
        };
    }
    if p > 2.0 {
        let c = 1.0 - hs * rp;
        conditions.push((format!("q <= 2 < p and 1 - hsum/p = {c:.6} > 0"), c > 0.0));
        if c > 0.0 {
            return Regime {
                label: RegimeLabel::R2,
                exponent: 1.0 / hs - rp + 0.5,
                conditions,
            };
        }
    }
    Regime {
        label: RegimeLabel::Inapplicable,
        exponent: f64::NAN,
        conditions,
    }
}

/// Smallest admissible sweep size for the given smoothness order `l`
/// (the pipelines use polynomial degree `l - e`).
pub fn min_sweep_n(l: &MultiIndex, alpha: &[f64]) -> Result<u64> {
    let degree = reduced_degree(l)?;
    Ok(2 * piecewise_dim(&degree, alpha, 0)?)
}

fn reduced_degree(l: &MultiIndex) -> Result<MultiIndex> {
    if l.entries().iter().any(|&lj| lj == 0) {
        return Err(Error::InvalidParameter(
            "smoothness order must be >= 1 in every direction".into(),
        ));
    }
    Ok(MultiIndex::new(
        l.entries().iter().map(|&lj| lj - 1).collect(),
    ))
}

/// The unique resolution `k` with `2 R_k <= n < 2 R_{k+1}`, where `R_k` is
/// the dimension of the degree-`(l - e)` piecewise space.  Returns
/// `(k, R_k)`.
pub fn resolution_for(n: u64, l: &MultiIndex, alpha: &[f64]) -> Result<(u64, u64)> {
    let degree = reduced_degree(l)?;
    let r0 = piecewise_dim(&degree, alpha, 0)?;
    if n < 2 * r0 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} is below the sweep threshold {}",
            2 * r0
        )));
    }
    let mut k = 0u64;
    let mut rk = r0;
    loop {
        let rk1 = piecewise_dim(&degree, alpha, k + 1)?;
        if 2 * rk1 > n {
            return Ok((k, rk));
        }
        k += 1;
        rk = rk1;
    }
}

fn piecewise_dim_f64(degree: &MultiIndex, alpha: &[f64], k: u64) -> f64 {
    let kappa = dyadic_levels(k, alpha);
    let dofs: f64 = degree.entries().iter().map(|&l| (l + 1) as f64).product();
    2f64.powi(kappa.sum() as i32) * dofs
}

/// Semi-axis groups `(value, multiplicity)` of the finite-dimensional body
/// assembled at resolution `k`: one group per tail index `j >= 1`, with the
/// per-group decay exponent `a` and slack `s` in `rho_j = 2^{-(k+j) a + s j}`.
fn assemble_groups(
    degree: &MultiIndex,
    alpha: &[f64],
    k: u64,
    rk: u64,
    a: f64,
    slack: f64,
) -> Vec<(f64, f64)> {
    let mut groups = Vec::new();
    let mut acc = 0.0f64;
    let mut j = 1u64;
    loop {
        let count = piecewise_dim_f64(degree, alpha, k + j);
        let rho = 2f64.powf(-((k + j) as f64) * a + slack * j as f64);
        groups.push((rho, count));
        acc += count * rho * rho;
        let reached_min = count >= 2.0 * rk as f64;
        let term = rho * count.sqrt();
        if (reached_min && term < 1e-6 * acc.sqrt()) || j >= 40 {
            break;
        }
        j += 1;
    }
    groups
}

/// Upper-bound pipeline value at sweep size `n`, constants set to one.
///
/// For `q <= p <= 2` or `q = p` the projection error itself gives `2^{-k}`.
/// For `p > max(2, q)` the increments embed into a box whose width in `l_2`
/// is bounded by the tail-sum formula.  For `p < q` they embed into an
/// `l_p` ball whose width in `l_q` is exact.
pub fn upper_bound_value(alpha: &[f64], p: f64, q: f64, n: u64) -> Result<f64> {
    let regime = classify(alpha, p, q);
    if regime.label == RegimeLabel::Inapplicable {
        return Err(Error::Inapplicable {
            violated: regime.violated().unwrap_or("no case applies").to_string(),
        });
    }
    let params = AnisoParams::new(alpha.to_vec(), p, q, f64::INFINITY)?;
    let l = params.smoothness_order();
    let degree = reduced_degree(&l)?;
    let (k, rk) = resolution_for(n, &l, alpha)?;
    let hs = params.harmonic_sum();
    let rp = recip(p);
    let rq = recip(q);

    if (q <= p && p <= 2.0) || q == p {
        return Ok(2f64.powi(-(k as i32)));
    }
    if p > 2.0 && p > q {
        // box route: per-group axes with the summability correction, width
        // in l_2 at n = R_k
        let a = 1.0 - hs * rp + hs * rq - hs * pos_part(rq - 0.5);
        let margin = 1.0 - hs * rp - hs * pos_part(0.5 - rq);
        let eps = margin / 2.0;
        let groups = assemble_groups(&degree, alpha, k, rk, a, eps);
        return fdwidths::box_width_l2_upper_grouped(&groups, rk as f64);
    }
    // p < q: ellipsoid route, exact width in l_q at n = R_k
    let a = 1.0 - hs * rp + hs * rq;
    let margin = a;
    let slack = margin / 2.0; // eps + delta, each a quarter of the margin
    let groups = assemble_groups(&degree, alpha, k, rk, a, slack);
    fdwidths::ellipsoid_width_exact_grouped(&groups, p, q, rk as f64)
}

/// Lower-bound pipeline value at sweep size `n`, constants set to one:
/// the bump-embedding factor times the shell rate of the `2n`-dimensional
/// dual ball.
pub fn lower_bound_value(alpha: &[f64], p: f64, q: f64, n: u64) -> Result<f64> {
    let params = AnisoParams::new(alpha.to_vec(), p, q, f64::INFINITY)?;
    if !params.condition_flag() {
        return Err(Error::Inapplicable {
            violated: format!(
                "1 - hsum*(1/p - 1/q)_+ = {:.6} > 0",
                params.condition_value()
            ),
        });
    }
    let hs = params.harmonic_sum();
    let nf = n as f64;
    Ok(nf.powf(-1.0 / hs + recip(p) - recip(q)) * fdwidths::shell_lower_rate(p, q, n))
}

/// The fixed smooth bump: product of `exp(-1/(x_j (1 - x_j)))` inside the
/// open unit cube, zero outside.
pub fn bump(x: &[f64]) -> f64 {
    let mut v = 1.0;
    for &t in x {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        v *= (-1.0 / (t * (1.0 - t))).exp();
    }
    v
}

/// A system of `2n` disjointly supported rescaled bumps on the lattice of
/// size `kappa`, where `kappa` is the smallest admissible lattice whose
/// cell count reaches `2n`.
#[derive(Debug, Clone)]
pub struct BumpSystem {
    pub k: u64,
    /// Per-axis lattice size; bump `nu` lives on `[nu/kappa, (nu+e)/kappa]`.
    pub kappa: MultiIndex,
    pub positions: Vec<MultiIndex>,
}

impl BumpSystem {
    /// Smallest `k >= 2` whose lattice holds `2n` bumps, positions taken in
    /// lexicographic order.
    pub fn new(n: u64, alpha: &[f64]) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let need = 2 * n as u128;
        let cell_count = |k: u64| -> u128 {
            lattice_dims(k, alpha)
                .entries()
                .iter()
                .map(|&x| x as u128)
                .product()
        };
        // cell count is nondecreasing in k: binary search for the first k
        // at or above the target, then (K(k-1))^e < 2n <= (K(k))^e holds
        let mut lo = 2u64;
        let mut hi = 2u64;
        while cell_count(hi) < need {
            hi = hi.saturating_mul(2);
            if hi > 1 << 40 {
                return Err(Error::Overflow {
                    what: "bump lattice size",
                });
            }
        }
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if cell_count(mid) >= need {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let k = lo;
        let kappa = lattice_dims(k, alpha);
        let positions: Vec<MultiIndex> = lex_positions(kappa.entries())
            .take(2 * n as usize)
            .collect();
        Ok(BumpSystem {
            k,
            kappa,
            positions,
        })
    }

    /// System at a prescribed lattice resolution `k` with `count` bumps,
    /// for scaling studies where `k` varies independently of `n`.
    pub fn with_resolution(k: u64, alpha: &[f64], count: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        let kappa = lattice_dims(k, alpha);
        let cells: u128 = kappa.entries().iter().map(|&x| x as u128).product();
        if (count as u128) > cells {
            return Err(Error::InvalidParameter(format!(
                "lattice at k={k} holds only {cells} bumps"
            )));
        }
        let positions: Vec<MultiIndex> = lex_positions(kappa.entries()).take(count).collect();
        Ok(BumpSystem {
            k,
            kappa,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kappa.dim()
    }

    /// Value of the combination `sum_nu beta_nu phi(kappa x - nu)` at `x`.
    /// Supports are disjoint, so only the owning lattice cell contributes.
    pub fn eval_combination(&self, beta: &[f64], x: &[f64]) -> f64 {
        let d = self.dim();
        let mut local = vec![0.0; d];
        let mut nu = vec![0u64; d];
        for j in 0..d {
            let kj = self.kappa.0[j] as f64;
            let t = x[j] * kj;
            let cell = (t.floor() as i64).clamp(0, self.kappa.0[j] as i64 - 1) as u64;
            nu[j] = cell;
            local[j] = t - cell as f64;
        }
        match lex_rank(self.kappa.entries(), &nu) {
            Some(r) if r < beta.len() => beta[r] * bump(&local),
            _ => 0.0,
        }
    }

    /// The combination as a grid function with lattice-line breakpoints.
    pub fn combination(&self, beta: &[f64]) -> GridFunction {
        assert_eq!(beta.len(), self.len());
        let breaks: Vec<Vec<f64>> = self
            .kappa
            .entries()
            .iter()
            .map(|&kj| (1..kj).map(|i| i as f64 / kj as f64).collect())
            .collect();
        let sys = self.clone();
        let beta = beta.to_vec();
        GridFunction::new(
            format!("bumps[k={},m={}]", self.k, self.len()),
            breaks,
            move |x| sys.eval_combination(&beta, x),
        )
    }
}

/// Both sides of the rescaled-bump norm identity in `L_r`:
/// the quadrature norm of the combination, and
/// `|phi|_r * kappa^{-e/r} * |beta|_r`.
pub fn bump_norm_sides(
    sys: &BumpSystem,
    beta: &[f64],
    r: f64,
    rule: &QuadratureRule,
) -> Result<(f64, f64)> {
    if beta.len() != sys.len() {
        return Err(Error::LengthMismatch {
            expected: sys.len(),
            got: beta.len(),
        });
    }
    let d = sys.dim();
    let g = sys.combination(beta);
    let lhs = polyspace::lp_norm(&g, r, d, rule)?;
    let phi = GridFunction::new("bump", vec![], |x: &[f64]| bump(x));
    let phi_norm = polyspace::lp_norm(&phi, r, d, rule)?;
    let scale: f64 = sys
        .kappa
        .entries()
        .iter()
        .map(|&kj| (kj as f64).powf(-recip(r)))
        .product();
    let rhs = phi_norm * scale * polyspace::vector_lp_norm(beta, r);
    Ok((lhs, rhs))
}

/// Options of the constructive certificate.
#[derive(Debug, Clone)]
pub struct CertificateOpts {
    pub samples: usize,
    pub seed: u64,
    pub tgrid: TGrid,
    pub rule: QuadratureRule,
}

impl Default for CertificateOpts {
    fn default() -> Self {
        CertificateOpts {
            samples: 8,
            seed: 1,
            tgrid: TGrid::default(),
            // slope-level accuracy is enough for the certificate norms
            rule: QuadratureRule::new(4, 1e-6, 10),
        }
    }
}

/// Desk-scale lower certificate: build the `2n`-bump system, restrict to
/// the first `n` coefficient coordinates, and minimize the ratio
/// `|J beta|_{L_q} / |J beta|_{Besov}` over sampled unit coefficient
/// vectors.  Any subspace gives a valid certificate direction; sampling
/// estimates its inf from above.
pub fn lower_certificate(
    alpha: &[f64],
    p: f64,
    theta: f64,
    q: f64,
    n: u64,
    opts: &CertificateOpts,
) -> Result<f64> {
    if alpha.len() > 2 || n > 32 {
        return Err(Error::InvalidParameter(
            "certificate is desk-scale only: d <= 2 and n <= 32".into(),
        ));
    }
    if theta.is_infinite() {
        return Err(Error::InvalidParameter(
            "certificate requires finite theta".into(),
        ));
    }
    let params = AnisoParams::new(alpha.to_vec(), p, q, theta)?;
    let sys = BumpSystem::new(n, alpha)?;
    let d = sys.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let normal = StandardNormal;
    let mut best = f64::INFINITY;
    for _ in 0..opts.samples.max(1) {
        let mut beta = vec![0.0; sys.len()];
        let mut norm = 0.0;
        for b in beta.iter_mut().take(n as usize) {
            let v: f64 = normal.sample(&mut rng);
            *b = v;
            norm += v * v;
        }
        let norm = norm.sqrt();
        if norm < 1e-12 {
            continue;
        }
        for b in beta.iter_mut() {
            *b /= norm;
        }
        let g = sys.combination(&beta);
        let num = polyspace::lp_norm(&g, q, d, &opts.rule)?;
        let den = moduli::besov_norm(&g, &params, &opts.tgrid, &opts.rule)?.total;
        if den <= 0.0 {
            return Err(Error::InvalidParameter(
                "degenerate certificate norm".into(),
            ));
        }
        best = best.min(num / den);
    }
    Ok(best)
}
