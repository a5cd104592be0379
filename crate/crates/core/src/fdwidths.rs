//! Finite-dimensional Bernstein widths of diagonal convex bodies: exact
//! formulas where they exist, a box-in-`l_2` upper bound, dual-ball lower
//! rates, and a sampling oracle over random subspaces.
//!
//! The width of a symmetric convex body `C` in `l_q^N` restricted to a
//! subspace `L` is `inf_{x in L, x != 0} |x|_q / mu_C(x)`; the width itself
//! is the sup of that over all `n`-dimensional subspaces.  The oracle
//! estimates the inner inf by sampling plus local refinement and takes the
//! best subspace it saw, so it approaches the width from the subspace side.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::indexgrid::recip;
use crate::polyspace::vector_lp_norm;

/// A diagonal `l_p` ball with semi-axes `rho`: `sum |x_j / rho_j|^p <= 1`
/// (componentwise bound for `p = infinity`).
///
/// The axes are kept in their original order for gauge evaluation and in
/// sorted descending order for the width formulas, which assume sorting.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    axes: Vec<f64>,
    sorted: Vec<f64>,
    perm: Vec<usize>,
    pub p: f64,
}

impl Ellipsoid {
    pub fn new(rho: Vec<f64>, p: f64) -> Result<Self> {
        if rho.is_empty() || rho.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidParameter("semi-axes must be positive".into()));
        }
        if p < 1.0 {
            return Err(Error::InvalidParameter("ball exponent must be >= 1".into()));
        }
        let mut perm: Vec<usize> = (0..rho.len()).collect();
        perm.sort_by(|&a, &b| rho[b].partial_cmp(&rho[a]).unwrap());
        let sorted: Vec<f64> = perm.iter().map(|&i| rho[i]).collect();
        Ok(Ellipsoid {
            axes: rho,
            sorted,
            perm,
            p,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Semi-axes in the original coordinate order.
    pub fn axes(&self) -> &[f64] {
        &self.axes
    }

    /// Semi-axes sorted descending, as the width formulas require.
    pub fn sorted_axes(&self) -> &[f64] {
        &self.sorted
    }

    /// Recorded permutation: `sorted[i] = axes[perm[i]]`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Minkowski gauge of the ball at `x` (original coordinate order).
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.p.is_infinite() {
            Ok(x.iter()
                .zip(&self.axes)
                .fold(0.0f64, |m, (&v, &r)| m.max(v.abs() / r)))
        } else {
            let s: f64 = x
                .iter()
                .zip(&self.axes)
                .map(|(&v, &r)| (v.abs() / r).powf(self.p))
                .sum();
            Ok(s.powf(1.0 / self.p))
        }
    }

    pub fn scale(&self, a: f64) -> Ellipsoid {
        Ellipsoid {
            axes: self.axes.iter().map(|&r| a * r).collect(),
            sorted: self.sorted.iter().map(|&r| a * r).collect(),
            perm: self.perm.clone(),
            p: self.p,
        }
    }
}

/// A symmetric convex body: a single diagonal ball or a finite intersection
/// of them (the gauge of an intersection is the max of the member gauges).
#[derive(Debug, Clone)]
pub enum ConvexBody {
    Ball(Ellipsoid),
    Intersection(Vec<Ellipsoid>),
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball(e) => e.dim(),
            ConvexBody::Intersection(v) => v.first().map(|e| e.dim()).unwrap_or(0),
        }
    }

    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        match self {
            ConvexBody::Ball(e) => e.gauge(x),
            ConvexBody::Intersection(members) => {
                let mut m = 0.0f64;
                for e in members {
                    m = m.max(e.gauge(x)?);
                }
                Ok(m)
            }
        }
    }

    pub fn scale(&self, a: f64) -> ConvexBody {
        match self {
            ConvexBody::Ball(e) => ConvexBody::Ball(e.scale(a)),
            ConvexBody::Intersection(v) => {
                ConvexBody::Intersection(v.iter().map(|e| e.scale(a)).collect())
            }
        }
    }
}

/// Exact Bernstein width of the diagonal `l_p` ball in `l_q^N`, valid for
/// `1 <= p < q <= infinity` and `rho` sorted descending:
/// `(sum_{j<=n} rho_j^{pq/(p-q)})^{(p-q)/(pq)}`, with the `-p` power form
/// at `q = infinity`.
pub fn ellipsoid_width_exact(rho: &[f64], p: f64, q: f64, n: usize) -> Result<f64> {
    validate_sorted(rho)?;
    if n == 0 || n > rho.len() {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    if !(p >= 1.0) || p.is_infinite() || q <= p {
        return Err(Error::InvalidParameter(
            "exact ellipsoid width requires 1 <= p < q".into(),
        ));
    }
    let value = if q.is_infinite() {
        let s: f64 = rho[..n].iter().map(|&r| r.powf(-p)).sum();
        s.powf(-1.0 / p)
    } else {
        let e = p * q / (p - q);
        let s: f64 = rho[..n].iter().map(|&r| r.powf(e)).sum();
        s.powf(recip(q) - recip(p))
    };
    Ok(value)
}

/// Upper bound for the width of the box with semi-axes `rho` in `l_2^N`:
/// `sqrt(2 * sum_{j > n/2} rho_j^2 / n)`, `rho` sorted descending.
pub fn box_width_l2_upper(rho: &[f64], n: usize) -> Result<f64> {
    validate_sorted(rho)?;
    if n == 0 || n > rho.len() {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    let skip = n / 2; // indices j with j > n/2, 1-based
    let s: f64 = rho.iter().skip(skip).map(|&r| r * r).sum();
    Ok((2.0 * s / n as f64).sqrt())
}

fn validate_sorted(rho: &[f64]) -> Result<()> {
    if rho.is_empty() || rho.iter().any(|&r| !(r > 0.0) && r != 0.0) {
        return Err(Error::InvalidParameter(
            "semi-axes must be nonnegative".into(),
        ));
    }
    if rho.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(
            "semi-axes must be sorted descending".into(),
        ));
    }
    Ok(())
}

/// Grouped variant of [`ellipsoid_width_exact`]: semi-axis values with
/// multiplicities, descending, so the huge coordinate lists of the rate
/// pipelines never need to be materialized.  Multiplicities are `f64`
/// because deep tails overflow any integer type.
pub fn ellipsoid_width_exact_grouped(groups: &[(f64, f64)], p: f64, q: f64, n: f64) -> Result<f64> {
    if !(p >= 1.0) || p.is_infinite() || q <= p {
        return Err(Error::InvalidParameter(
            "exact ellipsoid width requires 1 <= p < q".into(),
        ));
    }
    let total: f64 = groups.iter().map(|&(_, c)| c).sum();
    if !(n >= 1.0) || n > total {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    let mut remaining = n;
    let mut s = 0.0f64;
    let e = if q.is_infinite() { -p } else { p * q / (p - q) };
    for &(rho, count) in groups {
        let take = remaining.min(count);
        s += take * rho.powf(e);
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    let outer = if q.is_infinite() {
        -1.0 / p
    } else {
        recip(q) - recip(p)
    };
    Ok(s.powf(outer))
}

/// Grouped variant of [`box_width_l2_upper`].
pub fn box_width_l2_upper_grouped(groups: &[(f64, f64)], n: f64) -> Result<f64> {
    let total: f64 = groups.iter().map(|&(_, c)| c).sum();
    if !(n >= 1.0) || n > total {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    let mut skip = (n / 2.0).floor();
    let mut s = 0.0f64;
    for &(rho, count) in groups {
        let skipped = skip.min(count);
        skip -= skipped;
        s += (count - skipped) * rho * rho;
    }
    Ok((2.0 * s / n).sqrt())
}

/// Rate factor of the lower bound for the width of `B(l_p^{2n})` in
/// `l_q^{2n}`, with the unknown constant set to one.  Used only for slope
/// checks, never for absolute comparisons.
pub fn shell_lower_rate(p: f64, q: f64, n: u64) -> f64 {
    let nf = n as f64;
    if q <= 2.0 && p >= 2.0 {
        nf.powf(recip(q) - 0.5)
    } else if q >= 2.0 && q <= p {
        1.0
    } else {
        nf.powf(recip(q) - recip(p))
    }
}

/// Search parameters of the subspace oracle.
#[derive(Debug, Clone)]
pub struct SubspaceSearch {
    pub samples: usize,
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for SubspaceSearch {
    fn default() -> Self {
        SubspaceSearch {
            samples: 4096,
            refine_steps: 200,
            seed: 0,
        }
    }
}

fn orthonormalize(basis: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for row in basis {
        let mut v = row.clone();
        for prev in &out {
            let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(prev) {
                *x -= dot * y;
            }
        }
        let norm = vector_lp_norm(&v, 2.0);
        if norm < 1e-10 {
            return Err(Error::RankDeficient);
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        out.push(v);
    }
    Ok(out)
}

/// Estimate of `inf |x|_q / mu_C(x)` over the span of the basis rows:
/// random unit directions in coefficient space followed by coordinate
/// descent with a shrinking step.  The estimate approaches the inf from
/// above, so the oracle built on it stays a subspace-side certificate.
pub fn width_on_subspace(
    body: &ConvexBody,
    basis: &[Vec<f64>],
    q: f64,
    search: &SubspaceSearch,
) -> Result<f64> {
    let n = basis.len();
    let big_n = body.dim();
    if n == 0 || basis.iter().any(|r| r.len() != big_n) {
        return Err(Error::DimensionMismatch {
            expected: big_n,
            got: basis.first().map(|r| r.len()).unwrap_or(0),
        });
    }
    let frame = orthonormalize(basis)?;
    let mut x = vec![0.0; big_n];
    let mut ratio_of = |c: &[f64]| -> Result<f64> {
        for v in x.iter_mut() {
            *v = 0.0;
        }
        for (ci, row) in c.iter().zip(&frame) {
            for (xv, rv) in x.iter_mut().zip(row) {
                *xv += ci * rv;
            }
        }
        let g = body.gauge(&x)?;
        if g == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(vector_lp_norm(&x, q) / g)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best_val = f64::INFINITY;
    let mut best_c = vec![0.0; n];
    // coordinate directions first, then random ones
    for i in 0..n {
        let mut c = vec![0.0; n];
        c[i] = 1.0;
        let v = ratio_of(&c)?;
        if v < best_val {
            best_val = v;
            best_c = c;
        }
    }
    for _ in 0..search.samples {
        let mut c: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = vector_lp_norm(&c, 2.0);
        if norm < 1e-12 {
            continue;
        }
        for v in c.iter_mut() {
            *v /= norm;
        }
        let v = ratio_of(&c)?;
        if v < best_val {
            best_val = v;
            best_c = c;
        }
    }

    // coordinate descent with shrinking step
    let mut step = 0.25;
    for _ in 0..search.refine_steps {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                let mut c = best_c.clone();
                c[i] += dir * step;
                let norm = vector_lp_norm(&c, 2.0);
                if norm < 1e-12 {
                    continue;
                }
                for v in c.iter_mut() {
                    *v /= norm;
                }
                let v = ratio_of(&c)?;
                if v < best_val {
                    best_val = v;
                    best_c = c;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    Ok(best_val)
}

/// Sampling lower oracle for the Bernstein width of `body` in `l_q^N`:
/// the best subspace value over `trials` random orthonormal frames plus the
/// leading-coordinate subspace.  All frames derive from the configured seed.
pub fn width_oracle(
    body: &ConvexBody,
    q: f64,
    n: usize,
    trials: usize,
    search: &SubspaceSearch,
) -> Result<f64> {
    let big_n = body.dim();
    if n == 0 || n > big_n {
        return Err(Error::InvalidParameter(format!("n = {n} out of range")));
    }
    // leading-coordinate subspace: for diagonal bodies with sorted axes this
    // is the extremal one, so the oracle is anchored there
    let lead: Vec<Vec<f64>> = leading_coordinate_basis(body, n);
    let mut best = width_on_subspace(body, &lead, q, search)?;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed ^ (0x9e3779b9 + trial as u64));
        let basis: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..big_n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let trial_search = SubspaceSearch {
            samples: search.samples,
            refine_steps: search.refine_steps,
            seed: search.seed ^ (0xabcd + trial as u64),
        };
        match width_on_subspace(body, &basis, q, &trial_search) {
            Ok(v) => best = best.max(v),
            Err(Error::RankDeficient) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

fn leading_coordinate_basis(body: &ConvexBody, n: usize) -> Vec<Vec<f64>> {
    let big_n = body.dim();
    // axes of the first member, largest first
    let perm: Vec<usize> = match body {
        ConvexBody::Ball(e) => e.permutation().to_vec(),
        ConvexBody::Intersection(v) => v
            .first()
            .map(|e| e.permutation().to_vec())
            .unwrap_or_default(),
    };
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; big_n];
            row[perm[i]] = 1.0;
            row
        })
        .collect()
}
