//! Forward differences with domain shrinkage, the shift-averaged modulus of
//! continuity, and the Nikolskii/Besov-type norms built from it.
//!
//! The modulus averages `|Delta^l f|^p` in both the spatial variable and the
//! shift, instead of taking a sup over shifts; the function spaces here are
//! defined directly through that averaged quantity, with one smoothness
//! exponent per coordinate direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexgrid::{recip, AnisoParams};
use crate::polyspace::{self, GridFunction, PiecewisePoly};
use crate::quad::{self, QuadratureRule};

/// Direction, difference order and integral exponent of one modulus.
#[derive(Debug, Clone, Copy)]
pub struct ModulusSpec {
    pub axis: usize,
    pub order: u64,
    pub p: f64,
}

/// The `L_p` part, the per-direction seminorms, and their maximum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimedNorms {
    pub lp: f64,
    pub seminorms: Vec<f64>,
    pub total: f64,
}

impl PrimedNorms {
    fn assemble(lp: f64, seminorms: Vec<f64>) -> Self {
        let total = seminorms.iter().fold(lp, |m, &s| m.max(s));
        PrimedNorms {
            lp,
            seminorms,
            total,
        }
    }
}

/// Geometric grid of shift scales `t` on which the sup and the
/// theta-integral of the seminorms are evaluated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TGrid {
    pub min_log2: f64,
    pub max_log2: f64,
    pub step_log2: f64,
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid {
            min_log2: -12.0,
            max_log2: 2.0,
            step_log2: 0.5,
        }
    }
}

impl TGrid {
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.min_log2;
        while e <= self.max_log2 + 1e-9 {
            out.push(2f64.powf(e));
            e += self.step_log2;
        }
        out
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Forward difference of order `order` with step `xi` along `axis`,
/// evaluated at `x`.  Returns `None` when the difference stencil leaves the
/// open unit cube (the shrunken-domain convention).
pub fn forward_difference(
    f: &GridFunction,
    axis: usize,
    order: u64,
    xi: f64,
    x: &[f64],
) -> Option<f64> {
    if x.iter().any(|&t| !(0.0 < t && t < 1.0)) {
        return None;
    }
    let end = x[axis] + order as f64 * xi;
    if !(0.0 < end && end < 1.0) {
        return None;
    }
    let mut point = x.to_vec();
    let mut acc = 0.0;
    for m in 0..=order {
        let sign = if (order - m) % 2 == 1 { -1.0 } else { 1.0 };
        point[axis] = x[axis] + m as f64 * xi;
        acc += sign * binomial(order, m) * f.eval(&point);
    }
    Some(acc)
}

/// Number of panels of the composite Gauss rule in the shift variable.
pub const XI_PANELS: usize = 64;

/// Shift-averaged modulus of order `order` along `axis` at scale `t`:
/// the `p`-mean over shifts `|xi| <= t` of the `L_p` norm of the forward
/// difference over the shrunken cube.
///
/// The integrand is even in the shift, so only nonnegative shifts are
/// integrated; shifts with an empty shrunken domain contribute zero.
pub fn averaged_modulus(
    f: &GridFunction,
    d: usize,
    spec: ModulusSpec,
    t: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let ModulusSpec { axis, order, p } = spec;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("t must be positive".into()));
    }
    if p.is_infinite() {
        return Err(Error::InvalidParameter(
            "averaged modulus requires a finite exponent".into(),
        ));
    }
    assert!(axis < d && order >= 1);
    let l = order as f64;
    // the difference is supported on shifts below 1/order
    let xi_max = t.min(1.0 / l);
    if xi_max <= 0.0 {
        return Ok(0.0);
    }

    let failure = std::cell::Cell::new(None::<(f64, f64)>);
    let mut g = |xi: f64| -> f64 {
        if xi <= 0.0 || l * xi >= 1.0 {
            return 0.0;
        }
        let lo = vec![0.0; d];
        let mut hi = vec![1.0; d];
        hi[axis] = 1.0 - l * xi;
        let mut seeds: Vec<Vec<f64>> = f.breakpoints().to_vec();
        seeds.resize(d, Vec::new());
        // the difference stencil shifts every kink of f by multiples of xi
        let base = seeds[axis].clone();
        for m in 1..=order {
            for &b in &base {
                seeds[axis].push(b - m as f64 * xi);
            }
        }
        let value = quad::integrate_box(
            &|x| {
                let mut acc = 0.0;
                let mut point = x.to_vec();
                for m in 0..=order {
                    let sign = if (order - m) % 2 == 1 { -1.0 } else { 1.0 };
                    point[axis] = x[axis] + m as f64 * xi;
                    acc += sign * binomial(order, m) * f.eval(&point);
                }
                acc.abs().powf(p)
            },
            &lo,
            &hi,
            &seeds,
            rule,
        );
        match value {
            Ok(v) => v,
            Err(Error::QuadratureNoConvergence { err, tol }) => {
                failure.set(Some((err, tol)));
                0.0
            }
            Err(_) => {
                failure.set(Some((f64::NAN, f64::NAN)));
                0.0
            }
        }
    };

    let mut integral = 0.0;
    let m = rule.nodes_per_axis;
    for panel in 0..XI_PANELS {
        let a = xi_max * panel as f64 / XI_PANELS as f64;
        let b = xi_max * (panel + 1) as f64 / XI_PANELS as f64;
        integral += quad::gauss_integrate(&mut g, a, b, m);
    }
    if let Some((err, tol)) = failure.get() {
        return Err(Error::QuadratureNoConvergence { err, tol });
    }
    // (2t)^{-1} * 2 * integral over [0, xi_max]
    Ok((integral / t).powf(1.0 / p))
}

/// Nikolskii-type norm: `max(L_p norm, max_j sup_t t^{-alpha_j} modulus_j)`,
/// the sup taken over the supplied scale grid.
pub fn nikolskii_norm(
    f: &GridFunction,
    params: &AnisoParams,
    grid: &TGrid,
    rule: &QuadratureRule,
) -> Result<PrimedNorms> {
    let lp = polyspace::lp_norm(f, params.p, params.d, rule)?;
    let orders = params.smoothness_order();
    let ts = grid.points();
    let mut seminorms = Vec::with_capacity(params.d);
    for j in 0..params.d {
        let spec = ModulusSpec {
            axis: j,
            order: orders.0[j],
            p: params.p,
        };
        let mut best = 0.0f64;
        for &t in &ts {
            let omega = averaged_modulus(f, params.d, spec, t, rule)?;
            best = best.max(t.powf(-params.alpha[j]) * omega);
        }
        seminorms.push(best);
    }
    Ok(PrimedNorms::assemble(lp, seminorms))
}

/// Besov-type norm with summability `theta`: the theta-integral of the
/// weighted modulus over the scale grid (trapezoid in log scale) plus an
/// exact power-law tail above the largest grid scale.
///
/// `theta = infinity` coincides with the Nikolskii-type norm.
pub fn besov_norm(
    f: &GridFunction,
    params: &AnisoParams,
    grid: &TGrid,
    rule: &QuadratureRule,
) -> Result<PrimedNorms> {
    if params.theta.is_infinite() {
        return nikolskii_norm(f, params, grid, rule);
    }
    let theta = params.theta;
    let lp = polyspace::lp_norm(f, params.p, params.d, rule)?;
    let orders = params.smoothness_order();
    let ts = grid.points();
    let mut seminorms = Vec::with_capacity(params.d);
    for j in 0..params.d {
        let spec = ModulusSpec {
            axis: j,
            order: orders.0[j],
            p: params.p,
        };
        let omegas: Result<Vec<f64>> = ts
            .iter()
            .map(|&t| averaged_modulus(f, params.d, spec, t, rule))
            .collect();
        let omegas = omegas?;
        let alpha_j = params.alpha[j];
        // integrand F(t) = t^{-1 - theta alpha_j} * omega(t)^theta;
        // trapezoid in u = ln t integrates F(e^u) e^u
        let mut integral = 0.0;
        for i in 0..ts.len() - 1 {
            let (t0, t1) = (ts[i], ts[i + 1]);
            let f0 = t0.powf(-theta * alpha_j) * omegas[i].powf(theta);
            let f1 = t1.powf(-theta * alpha_j) * omegas[i + 1].powf(theta);
            integral += 0.5 * (t1.ln() - t0.ln()) * (f0 + f1);
        }
        // beyond the largest scale the averaged integral is saturated, so
        // the modulus decays exactly like t^{-1/p}; integrate that tail in
        // closed form
        let t_top = *ts.last().unwrap();
        let omega_top = *omegas.last().unwrap();
        let tail = omega_top.powf(theta) * t_top.powf(-theta * alpha_j)
            / (theta * (alpha_j + recip(params.p)));
        seminorms.push((integral + tail).powf(1.0 / theta));
    }
    Ok(PrimedNorms::assemble(lp, seminorms))
}

/// Pull a function on the box `x0 + delta * I^d` back to the unit cube:
/// returns the composed evaluator together with the exact factor
/// `prod delta_j^{-1/p}` relating the two `L_p` norms.
pub fn affine_pullback(f: &GridFunction, delta: &[f64], x0: &[f64], p: f64) -> (GridFunction, f64) {
    assert!(delta.iter().all(|&d| d > 0.0));
    assert_eq!(delta.len(), x0.len());
    let d = delta.len();
    let breaks: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            f.breakpoints()
                .get(j)
                .map(|s| s.iter().map(|&b| (b - x0[j]) / delta[j]).collect())
                .unwrap_or_default()
        })
        .collect();
    let inner = f.clone();
    let delta_owned = delta.to_vec();
    let x0_owned = x0.to_vec();
    let pulled = GridFunction::new(format!("pullback({})", f.label), breaks, move |x| {
        let y: Vec<f64> = (0..x.len())
            .map(|j| x0_owned[j] + delta_owned[j] * x[j])
            .collect();
        inner.eval(&y)
    });
    let factor: f64 = delta.iter().map(|&dj| dj.powf(-recip(p))).product();
    (pulled, factor)
}

/// Inverse transfer: push a function on the unit cube forward to the box
/// `x0 + delta * I^d`, with the reciprocal norm factor.
pub fn affine_pushforward(
    f: &GridFunction,
    delta: &[f64],
    x0: &[f64],
    p: f64,
) -> (GridFunction, f64) {
    let inv_delta: Vec<f64> = delta.iter().map(|&dj| 1.0 / dj).collect();
    let shifted_x0: Vec<f64> = x0.iter().zip(delta).map(|(&c, &dj)| -c / dj).collect();
    affine_pullback(f, &inv_delta, &shifted_x0, p)
}

/// `L_p` norm over an arbitrary box, for transfer-identity checks.
pub fn lp_norm_on_box(
    f: &GridFunction,
    p: f64,
    lo: &[f64],
    hi: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    let seeds: Vec<Vec<f64>> = vec![Vec::new(); lo.len()];
    if p.is_infinite() {
        return Ok(quad::sup_abs_on_box(&|x| f.eval(x), lo, hi, &seeds));
    }
    let v = quad::integrate_box(&|x| f.eval(x).abs().powf(p), lo, hi, &seeds, rule)?;
    Ok(v.powf(1.0 / p))
}

/// Built-in function catalog addressable by name from the CLI:
/// `linear`, `abs-power:<gamma>`, `sin:<omega>`, `bump`, `zero`,
/// `piecewise-poly:<file>`.
pub fn catalog(name: &str, d: usize) -> Result<GridFunction> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    match head {
        "linear" => Ok(GridFunction::new("linear", vec![], move |x: &[f64]| {
            x.iter().sum::<f64>() / x.len() as f64
        })),
        "abs-power" => {
            let gamma: f64 = arg
                .ok_or_else(|| Error::UnknownFunction(name.into()))?
                .parse()
                .map_err(|_| Error::UnknownFunction(name.into()))?;
            let breaks = vec![vec![0.5]; d];
            Ok(GridFunction::new(
                format!("abs-power:{gamma}"),
                breaks,
                move |x: &[f64]| x.iter().map(|&t| (t - 0.5f64).abs().powf(gamma)).sum(),
            ))
        }
        "sin" => {
            let omega: f64 = arg
                .ok_or_else(|| Error::UnknownFunction(name.into()))?
                .parse()
                .map_err(|_| Error::UnknownFunction(name.into()))?;
            Ok(GridFunction::new(
                format!("sin:{omega}"),
                vec![],
                move |x: &[f64]| {
                    x.iter()
                        .map(|&t| (std::f64::consts::PI * omega * t).sin())
                        .product()
                },
            ))
        }
        "bump" => Ok(GridFunction::new("bump", vec![], |x: &[f64]| {
            crate::asymptotics::bump(x)
        })),
        "zero" => Ok(GridFunction::new("zero", vec![], |_: &[f64]| 0.0)),
        "piecewise-poly" => {
            let path = arg.ok_or_else(|| Error::UnknownFunction(name.into()))?;
            let text = std::fs::read_to_string(path)?;
            let rec: polyspace::PiecewisePolyRecord = serde_json::from_str(&text)?;
            let poly = PiecewisePoly::from_record(&rec)?;
            Ok(GridFunction::from_piecewise(poly))
        }
        _ => Err(Error::UnknownFunction(name.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule() -> QuadratureRule {
        QuadratureRule::default()
    }

    fn linear_1d() -> GridFunction {
        GridFunction::new("x", vec![], |x: &[f64]| x[0])
    }

    #[test]
    fn forward_difference_examples() {
        let f = linear_1d();
        let v = forward_difference(&f, 0, 1, 0.2, &[0.3]).unwrap();
        assert!((v - 0.2).abs() < 1e-14);
        let sq = GridFunction::new("x^2", vec![], |x: &[f64]| x[0] * x[0]);
        let v = forward_difference(&sq, 0, 1, 0.1, &[0.5]).unwrap();
        assert!((v - 0.11).abs() < 1e-14);
        // out of domain is a value, not a failure
        assert!(forward_difference(&f, 0, 1, 0.5, &[0.6]).is_none());
    }

    #[test]
    fn differences_annihilate_low_degree() {
        let f = GridFunction::new("affine", vec![], |x: &[f64]| 3.0 * x[0] - 1.0);
        for &xi in &[0.05, 0.11, -0.07] {
            for &x in &[0.3, 0.5, 0.6] {
                if let Some(v) = forward_difference(&f, 0, 2, xi, &[x]) {
                    assert!(v.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn averaged_modulus_golden_value() {
        // linear function, first-order difference, p = 1, t = 1/2:
        // closed form t/2 - t^2/3 = 1/6
        let f = linear_1d();
        let spec = ModulusSpec {
            axis: 0,
            order: 1,
            p: 1.0,
        };
        let v = averaged_modulus(&f, 1, spec, 0.5, &rule()).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-9, "{v}");
        // constant functions have zero modulus
        let c = GridFunction::new("const", vec![], |_: &[f64]| 0.7);
        for &t in &[0.1, 0.5, 2.0] {
            let v = averaged_modulus(&c, 1, spec, t, &rule()).unwrap();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn averaged_modulus_matches_closed_form_on_grid() {
        // t/2 - t^2/3 on (0, 3/4], monotone there
        let f = linear_1d();
        let spec = ModulusSpec {
            axis: 0,
            order: 1,
            p: 1.0,
        };
        let mut prev = 0.0;
        for &t in &[0.1, 0.2, 0.35, 0.5, 0.7] {
            let v = averaged_modulus(&f, 1, spec, t, &rule()).unwrap();
            let want = t / 2.0 - t * t / 3.0;
            assert!((v - want).abs() < 1e-9, "t={t}: {v} vs {want}");
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn nikolskii_norm_golden_value() {
        // alpha = 0.5, p = 1: seminorm max_t t^{-1/2} (t/2 - t^2/3) attained
        // at t = 1/2 with value 1/(3 sqrt 2); total is the L_1 norm 1/2
        let f = linear_1d();
        let params = AnisoParams::new(vec![0.5], 1.0, 2.0, 2.0).unwrap();
        let norms = nikolskii_norm(&f, &params, &TGrid::default(), &rule()).unwrap();
        let want = 1.0 / (3.0 * 2f64.sqrt());
        assert!(
            (norms.seminorms[0] - want).abs() < 1e-6,
            "{}",
            norms.seminorms[0]
        );
        assert!((norms.total - 0.5).abs() < 1e-9);
        assert!((norms.lp - 0.5).abs() < 1e-9);
    }

    #[test]
    fn norms_scale_linearly() {
        let f = linear_1d();
        let g = f.scale(-3.0);
        let params = AnisoParams::new(vec![0.5], 1.0, 2.0, 2.0).unwrap();
        let grid = TGrid::default();
        let nf = nikolskii_norm(&f, &params, &grid, &rule()).unwrap();
        let ng = nikolskii_norm(&g, &params, &grid, &rule()).unwrap();
        assert!((ng.total - 3.0 * nf.total).abs() < 1e-9);
        let bf = besov_norm(&f, &params, &grid, &rule()).unwrap();
        let bg = besov_norm(&g, &params, &grid, &rule()).unwrap();
        assert!((bg.total - 3.0 * bf.total).abs() < 1e-8);
    }

    #[test]
    fn besov_norm_golden_value() {
        // alpha = 0.5, p = 1, theta = 2: the theta-integral of the closed
        // form gives sqrt(7/54)
        let f = linear_1d();
        let params = AnisoParams::new(vec![0.5], 1.0, 2.0, 2.0).unwrap();
        let norms = besov_norm(&f, &params, &TGrid::default(), &rule()).unwrap();
        let want = (7.0f64 / 54.0).sqrt();
        assert!(
            (norms.seminorms[0] - want).abs() < 2e-2,
            "{} vs {want}",
            norms.seminorms[0]
        );
    }

    #[test]
    fn zero_function_has_zero_norms() {
        let z = catalog("zero", 1).unwrap();
        let params = AnisoParams::new(vec![0.5], 1.0, 2.0, 2.0).unwrap();
        let n = besov_norm(&z, &params, &TGrid::default(), &rule()).unwrap();
        assert_eq!(n.total, 0.0);
        assert_eq!(n.lp, 0.0);
    }

    #[test]
    fn theta_infinity_delegates_to_nikolskii() {
        let f = linear_1d();
        let params = AnisoParams::new(vec![0.5], 1.0, 2.0, f64::INFINITY).unwrap();
        let grid = TGrid::default();
        let a = besov_norm(&f, &params, &grid, &rule()).unwrap();
        let b = nikolskii_norm(&f, &params, &grid, &rule()).unwrap();
        assert_eq!(a.total, b.total);
    }

    #[test]
    fn pullback_identity_and_factor() {
        let f = linear_1d();
        let (g, factor) = affine_pullback(&f, &[1.0], &[0.0], 1.0);
        assert_eq!(factor, 1.0);
        assert!((g.eval(&[0.3]) - 0.3).abs() < 1e-15);
        // d=1, delta=1/2, p=1: factor 2
        let c = GridFunction::new("one", vec![], |_: &[f64]| 1.0);
        let (_, factor) = affine_pullback(&c, &[0.5], &[0.25], 1.0);
        assert!((factor - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pullback_norm_identity() {
        // |h f|_{L_p(I)} = delta^{-1/p} |f|_{L_p(x0 + delta I)}
        let f = GridFunction::new("wave", vec![], |x: &[f64]| (3.0 * x[0]).sin() + 0.2);
        let (delta, x0, p) = ([0.5], [0.25], 2.0);
        let (g, factor) = affine_pullback(&f, &delta, &x0, p);
        let r = rule();
        let lhs = lp_norm_on_box(&g, p, &[0.0], &[1.0], &r).unwrap();
        let rhs = factor * lp_norm_on_box(&f, p, &[0.25], &[0.75], &r).unwrap();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        // round trip restores the norm
        let (back, inv_factor) = affine_pushforward(&g, &delta, &x0, p);
        let back_norm = lp_norm_on_box(&back, p, &[0.25], &[0.75], &r).unwrap();
        let orig = lp_norm_on_box(&f, p, &[0.25], &[0.75], &r).unwrap();
        assert!((back_norm - orig).abs() < 1e-9);
        assert!((factor * inv_factor - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modulus_subadditive() {
        let f = linear_1d();
        let g = GridFunction::new("sq", vec![], |x: &[f64]| x[0] * x[0]);
        let sum = f.add(&g);
        let spec = ModulusSpec {
            axis: 0,
            order: 1,
            p: 2.0,
        };
        for &t in &[0.1, 0.4, 1.0] {
            let a = averaged_modulus(&sum, 1, spec, t, &rule()).unwrap();
            let b = averaged_modulus(&f, 1, spec, t, &rule()).unwrap();
            let c = averaged_modulus(&g, 1, spec, t, &rule()).unwrap();
            assert!(a <= b + c + 1e-8, "t={t}");
        }
    }

    #[test]
    fn catalog_names() {
        assert!(catalog("linear", 2).is_ok());
        assert!(catalog("abs-power:0.75", 1).is_ok());
        assert!(catalog("sin:2", 2).is_ok());
        assert!(catalog("bump", 2).is_ok());
        assert!(catalog("nope", 1).is_err());
    }
}
