//! Gauss-Legendre quadrature: fixed rules, breakpoint-seeded adaptive
//! integration over boxes, and sup-norm estimation by scan plus pattern
//! search.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Parameters of the composite quadrature used throughout the crate.
///
/// `nodes_per_axis` is the Gauss order on each panel; non-polynomial
/// integrands are handled by dyadic refinement down to `rel_tol` with at
/// most `max_depth` levels.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct QuadratureRule {
    pub nodes_per_axis: usize,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule {
            nodes_per_axis: 4,
            rel_tol: 1e-8,
            max_depth: 12,
        }
    }
}

impl QuadratureRule {
    pub fn new(nodes_per_axis: usize, rel_tol: f64, max_depth: u32) -> Self {
        assert!(nodes_per_axis >= 2);
        QuadratureRule {
            nodes_per_axis,
            rel_tol,
            max_depth,
        }
    }

    /// Rule suited to degree-`l` polynomial algebra: `max l_j + 3` nodes make
    /// products of two such polynomials integrate exactly.
    pub fn for_degree(l: &[u64]) -> Self {
        let m = l.iter().copied().max().unwrap_or(0) as usize + 3;
        QuadratureRule {
            nodes_per_axis: m,
            ..Default::default()
        }
    }

    /// A tighter variant for projector coefficients and golden-value checks.
    /// The deeper cap lets bisection resolve algebraic kinks to the tolerance.
    pub fn tight(&self) -> Self {
        QuadratureRule {
            rel_tol: self.rel_tol.min(1e-12),
            max_depth: self.max_depth.max(40),
            ..self.clone()
        }
    }

    /// Gauss nodes and weights on `[a, b]`; weights are positive and sum to
    /// the interval length.
    pub fn nodes_weights_on(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let rule = gauss_rule(self.nodes_per_axis);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let nodes = rule.0.iter().map(|&t| mid + half * t).collect();
        let weights = rule.1.iter().map(|&w| w * half).collect();
        (nodes, weights)
    }
}

type RulePair = Arc<(Vec<f64>, Vec<f64>)>;

fn rule_cache() -> &'static Mutex<BTreeMap<usize, RulePair>> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, RulePair>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence and cached per order.
pub fn gauss_rule(m: usize) -> RulePair {
    assert!(m >= 1);
    if let Some(r) = rule_cache().lock().unwrap().get(&m) {
        return r.clone();
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..60 {
            let (p, d) = legendre_with_deriv(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (p2, d2) = legendre_with_deriv(m, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
        let (_, d) = legendre_with_deriv(m, 0.0);
        weights[m / 2] = 2.0 / (d * d);
    }
    let pair: RulePair = Arc::new((nodes, weights));
    rule_cache().lock().unwrap().insert(m, pair.clone());
    pair
}

fn legendre_with_deriv(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed Gauss integral of `f` over `[a, b]`.
pub fn gauss_integrate<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, m: usize) -> f64 {
    let rule = gauss_rule(m);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (&t, &w) in rule.0.iter().zip(rule.1.iter()) {
        acc += w * f(mid + half * t);
    }
    acc * half
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    depth: u32,
}

/// Value, conservative error estimate, and the `L_1` mass that set the
/// tolerance scale (cancellation makes the signed value an unusable scale).
#[derive(Debug, Clone, Copy)]
pub struct Quad1d {
    pub value: f64,
    pub err: f64,
    pub scale: f64,
}

/// Adaptive integral of `f` over `[a, b]`, splitting first at the supplied
/// breakpoints and then by dyadic bisection wherever the two-panel estimate
/// disagrees with the one-panel estimate.
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rule: &QuadratureRule,
) -> Quad1d {
    if b <= a {
        return Quad1d {
            value: 0.0,
            err: 0.0,
            scale: 0.0,
        };
    }
    let m = rule.nodes_per_axis;
    let mut cuts: Vec<f64> = vec![a, b];
    cuts.extend(breakpoints.iter().copied().filter(|&t| t > a && t < b));
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);

    // scale for the relative tolerance: a cheap L1 estimate
    let mut scale = 0.0;
    for w in cuts.windows(2) {
        scale += gauss_integrate(&mut |x| f(x).abs(), w[0], w[1], m);
    }
    let tol_abs = rule.rel_tol * scale.max(1e-300);

    let mut stack: Vec<Segment> = cuts
        .windows(2)
        .map(|w| Segment {
            a: w[0],
            b: w[1],
            value: gauss_integrate(f, w[0], w[1], m),
            depth: 0,
        })
        .collect();
    let mut total = 0.0;
    let mut err = 0.0;
    // work cap: deep bisection chains around kinks stay cheap, while
    // roundoff-level integrands (which never satisfy a relative tolerance)
    // cannot trigger an exponential split
    let mut budget: u64 = 20_000 + 256 * stack.len() as u64;
    while let Some(seg) = stack.pop() {
        let mid = 0.5 * (seg.a + seg.b);
        let left = gauss_integrate(f, seg.a, mid, m);
        let right = gauss_integrate(f, mid, seg.b, m);
        let refined = left + right;
        let e = (refined - seg.value).abs();
        let local_tol = tol_abs * (seg.b - seg.a) / (b - a);
        budget = budget.saturating_sub(1);
        if e <= local_tol.max(1e-300) || seg.depth >= rule.max_depth || budget == 0 {
            total += refined;
            err += e;
        } else {
            stack.push(Segment {
                a: seg.a,
                b: mid,
                value: left,
                depth: seg.depth + 1,
            });
            stack.push(Segment {
                a: mid,
                b: seg.b,
                value: right,
                depth: seg.depth + 1,
            });
        }
    }
    Quad1d {
        value: total,
        err,
        scale,
    }
}

/// Adaptive integral of `f` over the box `[lo, hi]`, nesting one
/// breakpoint-seeded 1-d pass per axis.  `seeds[j]` lists known kinks of the
/// integrand along axis `j`.
pub fn integrate_box(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    seeds: &[Vec<f64>],
    rule: &QuadratureRule,
) -> Result<f64> {
    assert_eq!(lo.len(), hi.len());
    assert_eq!(seeds.len(), lo.len());
    if lo.iter().zip(hi).any(|(a, b)| b <= a) {
        return Ok(0.0);
    }
    let mut point = vec![0.0; lo.len()];
    let out = integrate_axis(f, lo, hi, seeds, rule, 0, &mut point);
    // all quantities in this crate are O(1)-normalized, so estimates below
    // the floor are roundoff noise, not convergence failures
    let scale = out.scale.max(out.value.abs()).max(1e-9);
    if out.err > 100.0 * rule.rel_tol * scale {
        return Err(Error::QuadratureNoConvergence {
            err: out.err,
            tol: rule.rel_tol * scale,
        });
    }
    Ok(out.value)
}

fn integrate_axis(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    seeds: &[Vec<f64>],
    rule: &QuadratureRule,
    axis: usize,
    point: &mut [f64],
) -> Quad1d {
    let last = axis == lo.len() - 1;
    let mut inner_err = 0.0f64;
    let mut inner_scale = 0.0f64;
    let mut g = |x: f64| -> f64 {
        point[axis] = x;
        if last {
            f(point)
        } else {
            let mut sub = point.to_vec();
            let out = integrate_axis(f, lo, hi, seeds, rule, axis + 1, &mut sub);
            inner_err = inner_err.max(out.err);
            inner_scale = inner_scale.max(out.scale);
            v_or_zero(out.value)
        }
    };
    let out = integrate_1d(&mut g, lo[axis], hi[axis], &seeds[axis], rule);
    let len = hi[axis] - lo[axis];
    Quad1d {
        value: out.value,
        err: out.err + inner_err * len,
        scale: out.scale.max(inner_scale * len),
    }
}

fn v_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Estimate of `sup |f|` over the box: seeded grid scan followed by a
/// shrinking pattern search around the best point.  Seed lists per axis mark
/// panel boundaries (cell edges); each panel is sampled on an odd uniform
/// grid so panel centers are always hit.
pub fn sup_abs_on_box(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    seeds: &[Vec<f64>],
) -> f64 {
    let d = lo.len();
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut cuts = vec![lo[j], hi[j]];
        cuts.extend(seeds[j].iter().copied().filter(|&t| t > lo[j] && t < hi[j]));
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        // 5 samples per panel, endpoints and center included
        let mut pts = Vec::new();
        for w in cuts.windows(2) {
            for i in 0..=4 {
                pts.push(w[0] + (w[1] - w[0]) * i as f64 / 4.0);
            }
        }
        pts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        axes.push(pts);
    }

    let mut best = f64::NEG_INFINITY;
    let mut best_pt = lo.to_vec();
    let mut idx = vec![0usize; d];
    'scan: loop {
        let pt: Vec<f64> = (0..d).map(|j| axes[j][idx[j]]).collect();
        let v = f(&pt).abs();
        if v > best {
            best = v;
            best_pt = pt;
        }
        let mut j = d;
        loop {
            if j == 0 {
                break 'scan;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }

    // local polish
    let mut step: Vec<f64> = (0..d).map(|j| (hi[j] - lo[j]) / 16.0).collect();
    let mut pt = best_pt;
    for _ in 0..200 {
        let mut improved = false;
        for j in 0..d {
            for dir in [-1.0, 1.0] {
                let mut cand = pt.clone();
                cand[j] = (cand[j] + dir * step[j]).clamp(lo[j], hi[j]);
                let v = f(&cand).abs();
                if v > best {
                    best = v;
                    pt = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
            if step.iter().all(|&s| s < 1e-13) {
                break;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        // degree 2m-1 exactness
        for m in 2..=8 {
            let mut f = |x: f64| x.powi(2 * m as i32 - 1) + x.powi(2) + 1.0;
            let got = gauss_integrate(&mut f, 0.0, 1.0, m);
            let want = 1.0 / (2.0 * m as f64) + 1.0 / 3.0 + 1.0;
            assert!((got - want).abs() < 1e-13, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn weights_positive_and_sum_to_length() {
        let rule = QuadratureRule::new(6, 1e-8, 12);
        let (_, w) = rule.nodes_weights_on(0.25, 0.75);
        assert!(w.iter().all(|&x| x > 0.0));
        let s: f64 = w.iter().sum();
        assert!((s - 0.5).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let rule = QuadratureRule::default();
        let mut f = |x: f64| (x - 0.5f64).abs().powf(0.75);
        let out = integrate_1d(&mut f, 0.0, 1.0, &[0.5], &rule);
        // closed form: 2 * (1/2)^{7/4} / (7/4)
        let want = 2.0 * 0.5f64.powf(1.75) / 1.75;
        assert!((out.value - want).abs() < 1e-8, "{} vs {want}", out.value);
    }

    #[test]
    fn box_integration_2d() {
        let rule = QuadratureRule::default();
        let f = |x: &[f64]| (std::f64::consts::PI * x[0]).sin() * x[1];
        let v = integrate_box(&f, &[0.0, 0.0], &[1.0, 1.0], &[vec![], vec![]], &rule).unwrap();
        let want = (2.0 / std::f64::consts::PI) * 0.5;
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
    }

    #[test]
    fn sup_norm_finds_interior_maximum() {
        let f = |x: &[f64]| x[0] * (1.0 - x[0]) * 4.0;
        let got = sup_abs_on_box(&f, &[0.0], &[1.0], &[vec![]]);
        assert!((got - 1.0).abs() < 1e-10, "{got}");
    }
}
