//! Tensor polynomials on dyadic cells and the piecewise-polynomial spaces
//! they span.
//!
//! Per-cell coefficients are stored in the tensor Legendre basis orthonormal
//! on the owning cell, in lexicographic order over the degree multi-indices.
//! This makes the local projector a plain inner-product map and `L_2` norms
//! exact sums of squared coefficients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexgrid::{cells_at, lex_positions, lex_rank, Cell, MultiIndex};
use crate::quad::{self, QuadratureRule};

/// Value of the shifted Legendre polynomial of degree `m`, orthonormal on
/// `[0, 1]`, at `u` (the formula extends to all real `u`).
pub fn ortho_legendre(m: u64, u: f64) -> f64 {
    let t = 2.0 * u - 1.0;
    let mut p0 = 1.0;
    let mut p1 = t;
    let value = match m {
        0 => 1.0,
        1 => t,
        _ => {
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    };
    (2.0 * m as f64 + 1.0).sqrt() * value
}

/// One tensor polynomial attached to a cell, in the cell's orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPolynomial {
    pub degree: MultiIndex,
    pub coeffs: Vec<f64>,
}

impl CellPolynomial {
    pub fn zero(degree: MultiIndex) -> Self {
        let n: u64 = degree.entries().iter().map(|&l| l + 1).product();
        CellPolynomial {
            degree,
            coeffs: vec![0.0; n as usize],
        }
    }

    pub fn new(degree: MultiIndex, coeffs: Vec<f64>) -> Result<Self> {
        let n: u64 = degree.entries().iter().map(|&l| l + 1).product();
        if coeffs.len() != n as usize {
            return Err(Error::LengthMismatch {
                expected: n as usize,
                got: coeffs.len(),
            });
        }
        Ok(CellPolynomial { degree, coeffs })
    }

    /// Basis function indexed by the degree multi-index `lambda`, evaluated
    /// at `x` relative to `cell` (valid also outside the cell).
    pub fn basis_at(cell: &Cell, lambda: &[u64], x: &[f64]) -> f64 {
        let mut v = 1.0;
        for j in 0..cell.dim() {
            let h = cell.side(j);
            let u = (x[j] - cell.lower_f64(j)) / h;
            v *= ortho_legendre(lambda[j], u) / h.sqrt();
        }
        v
    }

    /// Evaluate the polynomial at `x` relative to `cell`.
    pub fn eval_on(&self, cell: &Cell, x: &[f64]) -> f64 {
        let bounds: Vec<u64> = self.degree.entries().iter().map(|&l| l + 1).collect();
        let mut acc = 0.0;
        for (i, lambda) in lex_positions(&bounds).enumerate() {
            if self.coeffs[i] != 0.0 {
                acc += self.coeffs[i] * Self::basis_at(cell, lambda.entries(), x);
            }
        }
        acc
    }
}

/// A piecewise tensor polynomial on the dyadic grid at a fixed level, one
/// `CellPolynomial` per cell in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    pub level: MultiIndex,
    pub degree: MultiIndex,
    pub pieces: Vec<CellPolynomial>,
}

/// Flat serialization record: `{d, l, kappa, coefficients}` with the
/// coefficients row-major over cells then degree indices.
#[derive(Debug, Serialize, Deserialize)]
pub struct PiecewisePolyRecord {
    pub d: usize,
    pub l: Vec<u64>,
    pub kappa: Vec<u64>,
    pub coefficients: Vec<f64>,
}

impl PiecewisePoly {
    pub fn zero(level: MultiIndex, degree: MultiIndex) -> Self {
        let cell_count = 1u64 << level.sum();
        let pieces = (0..cell_count)
            .map(|_| CellPolynomial::zero(degree.clone()))
            .collect();
        PiecewisePoly {
            level,
            degree,
            pieces,
        }
    }

    pub fn dim(&self) -> usize {
        self.level.dim()
    }

    pub fn cells(&self) -> Result<Vec<Cell>> {
        cells_at(&self.level)
    }

    fn cell_bounds(&self) -> Vec<u64> {
        self.level.entries().iter().map(|&k| 1u64 << k).collect()
    }

    /// Index of the cell owning `x` under the half-open convention.
    pub fn cell_index_of(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let bounds = self.cell_bounds();
        let pos: Vec<u64> = (0..self.dim())
            .map(|j| {
                let i = (x[j] * bounds[j] as f64).floor() as u64;
                i.min(bounds[j] - 1)
            })
            .collect();
        Ok(lex_rank(&bounds, &pos).expect("position in range"))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let idx = self.cell_index_of(x)?;
        let bounds = self.cell_bounds();
        let pos = nth_position(&bounds, idx);
        let cell = Cell::new(self.level.clone(), MultiIndex(pos))?;
        Ok(self.pieces[idx].eval_on(&cell, x))
    }

    /// Exact re-representation on a finer (componentwise `>=`) level.
    pub fn refine_to(&self, level: &MultiIndex) -> Result<PiecewisePoly> {
        if !self.level.le(level) {
            return Err(Error::LevelMismatch {
                expected: self.level.0.clone(),
                got: level.0.clone(),
            });
        }
        let rule = QuadratureRule::for_degree(self.degree.entries());
        let coarse_bounds = self.cell_bounds();
        let mut out = PiecewisePoly::zero(level.clone(), self.degree.clone());
        let fine_cells = cells_at(level)?;
        let deg_bounds: Vec<u64> = self.degree.entries().iter().map(|&l| l + 1).collect();
        let lambdas: Vec<MultiIndex> = lex_positions(&deg_bounds).collect();
        for (fi, fc) in fine_cells.iter().enumerate() {
            let shift: Vec<u32> = (0..self.dim())
                .map(|j| (level.0[j] - self.level.0[j]) as u32)
                .collect();
            let coarse_pos: Vec<u64> = (0..self.dim()).map(|j| fc.pos.0[j] >> shift[j]).collect();
            let ci = lex_rank(&coarse_bounds, &coarse_pos).expect("coarse cell exists");
            let coarse_cell = Cell::new(self.level.clone(), MultiIndex(coarse_pos))?;
            let src = &self.pieces[ci];
            // coefficients of the restriction: inner products on the fine
            // cell; integrand is a product of two tensor polynomials, exact
            // for the chosen Gauss order
            for (li, lambda) in lambdas.iter().enumerate() {
                let v = tensor_gauss_on_cell(fc, &rule, &mut |x: &[f64]| {
                    src.eval_on(&coarse_cell, x) * CellPolynomial::basis_at(fc, lambda.entries(), x)
                });
                out.pieces[fi].coeffs[li] = v;
            }
        }
        Ok(out)
    }

    /// Coefficient-level linear combination `self + c * other` for operands
    /// on the same level and degree.
    pub fn axpy(&self, c: f64, other: &PiecewisePoly) -> Result<PiecewisePoly> {
        if self.level != other.level {
            return Err(Error::LevelMismatch {
                expected: self.level.0.clone(),
                got: other.level.0.clone(),
            });
        }
        if self.degree != other.degree {
            return Err(Error::InvalidParameter("degree mismatch".into()));
        }
        let mut out = self.clone();
        for (p, q) in out.pieces.iter_mut().zip(&other.pieces) {
            for (a, b) in p.coeffs.iter_mut().zip(&q.coeffs) {
                *a += c * b;
            }
        }
        Ok(out)
    }

    /// Exact `L_2` norm from the orthonormal coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| p.coeffs.iter())
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_record(&self) -> PiecewisePolyRecord {
        PiecewisePolyRecord {
            d: self.dim(),
            l: self.degree.0.clone(),
            kappa: self.level.0.clone(),
            coefficients: self
                .pieces
                .iter()
                .flat_map(|p| p.coeffs.iter().copied())
                .collect(),
        }
    }

    pub fn from_record(rec: &PiecewisePolyRecord) -> Result<PiecewisePoly> {
        if rec.l.len() != rec.d || rec.kappa.len() != rec.d {
            return Err(Error::DimensionMismatch {
                expected: rec.d,
                got: rec.l.len(),
            });
        }
        let level = MultiIndex::new(rec.kappa.clone());
        let degree = MultiIndex::new(rec.l.clone());
        let per_cell: usize = degree.entries().iter().map(|&l| (l + 1) as usize).product();
        let cell_count = 1usize << level.sum();
        if rec.coefficients.len() != per_cell * cell_count {
            return Err(Error::LengthMismatch {
                expected: per_cell * cell_count,
                got: rec.coefficients.len(),
            });
        }
        let pieces = rec
            .coefficients
            .chunks(per_cell)
            .map(|c| CellPolynomial {
                degree: degree.clone(),
                coeffs: c.to_vec(),
            })
            .collect();
        Ok(PiecewisePoly {
            level,
            degree,
            pieces,
        })
    }

    /// Per-axis cell-edge coordinates, used as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<Vec<f64>> {
        self.level
            .entries()
            .iter()
            .map(|&k| {
                let n = 1u64 << k;
                (1..n).map(|i| i as f64 / n as f64).collect()
            })
            .collect()
    }

    /// Uniformly random coefficients in `[-1, 1]`.
    pub fn random<R: rand::Rng>(level: MultiIndex, degree: MultiIndex, rng: &mut R) -> Self {
        let mut f = PiecewisePoly::zero(level, degree);
        for p in f.pieces.iter_mut() {
            for c in p.coeffs.iter_mut() {
                *c = rng.gen_range(-1.0..1.0);
            }
        }
        f
    }
}

fn nth_position(bounds: &[u64], mut idx: usize) -> Vec<u64> {
    let mut pos = vec![0u64; bounds.len()];
    for j in (0..bounds.len()).rev() {
        pos[j] = (idx as u64) % bounds[j];
        idx /= bounds[j] as usize;
    }
    pos
}

pub(crate) fn tensor_gauss_on_cell(
    cell: &Cell,
    rule: &QuadratureRule,
    f: &mut dyn FnMut(&[f64]) -> f64,
) -> f64 {
    let d = cell.dim();
    let mut axes_nodes = Vec::with_capacity(d);
    let mut axes_weights = Vec::with_capacity(d);
    for j in 0..d {
        let a = cell.lower_f64(j);
        let (n, w) = rule.nodes_weights_on(a, a + cell.side(j));
        axes_nodes.push(n);
        axes_weights.push(w);
    }
    let mut acc = 0.0;
    let m = rule.nodes_per_axis;
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for j in 0..d {
            point[j] = axes_nodes[j][idx[j]];
            w *= axes_weights[j][idx[j]];
        }
        acc += w * f(&point);
        let mut j = d;
        loop {
            if j == 0 {
                return acc;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// A real-valued function on the closed unit cube: a deterministic evaluator
/// plus per-axis kink locations that quadrature should respect.
#[derive(Clone)]
pub struct GridFunction {
    pub label: String,
    evaluator: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    breakpoints: Vec<Vec<f64>>,
}

impl std::fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFunction")
            .field("label", &self.label)
            .finish()
    }
}

impl GridFunction {
    pub fn new(
        label: impl Into<String>,
        breakpoints: Vec<Vec<f64>>,
        evaluator: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        GridFunction {
            label: label.into(),
            evaluator: Arc::new(evaluator),
            breakpoints,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn breakpoints(&self) -> &[Vec<f64>] {
        &self.breakpoints
    }

    pub fn from_piecewise(f: PiecewisePoly) -> Self {
        let breaks = f.breakpoints();
        let label = format!("piecewise-poly[{:?}]", f.level.entries());
        GridFunction::new(label, breaks, move |x| f.eval(x).unwrap_or(0.0))
    }

    /// Pointwise scaling `c * f`.
    pub fn scale(&self, c: f64) -> GridFunction {
        let inner = self.evaluator.clone();
        GridFunction {
            label: format!("{}*{}", c, self.label),
            evaluator: Arc::new(move |x| c * inner(x)),
            breakpoints: self.breakpoints.clone(),
        }
    }

    /// Pointwise sum `f + g` (breakpoints merged).
    pub fn add(&self, other: &GridFunction) -> GridFunction {
        let a = self.evaluator.clone();
        let b = other.evaluator.clone();
        let mut breaks = self.breakpoints.clone();
        if breaks.len() < other.breakpoints.len() {
            breaks.resize(other.breakpoints.len(), Vec::new());
        }
        for (j, extra) in other.breakpoints.iter().enumerate() {
            breaks[j].extend(extra.iter().copied());
            breaks[j].sort_by(|x, y| x.partial_cmp(y).unwrap());
            breaks[j].dedup();
        }
        GridFunction {
            label: format!("{}+{}", self.label, other.label),
            evaluator: Arc::new(move |x| a(x) + b(x)),
            breakpoints: breaks,
        }
    }
}

/// `l_p` norm of a coordinate vector, `p` in `[1, infinity]`.
pub fn vector_lp_norm(x: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        x.iter().fold(0.0, |m, &v| m.max(v.abs()))
    } else if (p - 2.0).abs() < 1e-14 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else if (p - 1.0).abs() < 1e-14 {
        x.iter().map(|v| v.abs()).sum()
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// `L_p(I^d)` norm of a grid function by adaptive quadrature; for
/// `p = infinity` a seeded sup scan.
pub fn lp_norm(f: &GridFunction, p: f64, d: usize, rule: &QuadratureRule) -> Result<f64> {
    let lo = vec![0.0; d];
    let hi = vec![1.0; d];
    let mut seeds = f.breakpoints().to_vec();
    seeds.resize(d, Vec::new());
    if p.is_infinite() {
        return Ok(quad::sup_abs_on_box(&|x| f.eval(x), &lo, &hi, &seeds));
    }
    if p < 1.0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let v = quad::integrate_box(&|x| f.eval(x).abs().powf(p), &lo, &hi, &seeds, rule)?;
    Ok(v.powf(1.0 / p))
}

/// `L_p(I^d)` norm of a piecewise polynomial.  `p = 2` is exact through the
/// orthonormal coefficients; other exponents integrate `|f|^p` cell by cell
/// with sign-change roots located and used as panel boundaries, so the Gauss
/// panels only ever see smooth integrands.
pub fn lp_norm_piecewise(f: &PiecewisePoly, p: f64, rule: &QuadratureRule) -> Result<f64> {
    if (p - 2.0).abs() < 1e-14 {
        return Ok(f.l2_norm());
    }
    let cells = f.cells()?;
    if p.is_infinite() {
        let multilinear = f.degree.entries().iter().all(|&l| l <= 1);
        let mut best = 0.0f64;
        for (i, cell) in cells.iter().enumerate() {
            let piece = &f.pieces[i];
            let lo: Vec<f64> = (0..f.dim()).map(|j| cell.lower_f64(j)).collect();
            let hi: Vec<f64> = (0..f.dim()).map(|j| lo[j] + cell.side(j)).collect();
            let local = if multilinear {
                // a multilinear function attains its sup at a corner
                let mut m = 0.0f64;
                let d = f.dim();
                for mask in 0..(1u32 << d) {
                    let x: Vec<f64> = (0..d)
                        .map(|j| if mask >> j & 1 == 1 { hi[j] } else { lo[j] })
                        .collect();
                    m = m.max(piece.eval_on(cell, &x).abs());
                }
                m
            } else {
                let seeds: Vec<Vec<f64>> = vec![Vec::new(); f.dim()];
                quad::sup_abs_on_box(&|x| piece.eval_on(cell, x), &lo, &hi, &seeds)
            };
            best = best.max(local);
        }
        return Ok(best);
    }
    let mut acc = 0.0;
    for (i, cell) in cells.iter().enumerate() {
        acc += cell_abs_power_integral(&f.pieces[i], cell, p, rule, &mut vec![0.0; f.dim()], 0);
    }
    Ok(acc.powf(1.0 / p))
}

/// Nested integral of `|piece|^p` over the cell: adaptive in the outer axes,
/// root-seeded Gauss along the innermost axis where the restriction is a
/// plain polynomial whose sign changes can be bisected out.
fn cell_abs_power_integral(
    piece: &CellPolynomial,
    cell: &Cell,
    p: f64,
    rule: &QuadratureRule,
    point: &mut [f64],
    axis: usize,
) -> f64 {
    let d = cell.dim();
    let a = cell.lower_f64(axis);
    let b = a + cell.side(axis);
    if axis + 1 == d {
        let roots = {
            let mut plain = |t: f64| -> f64 {
                point[axis] = t;
                piece.eval_on(cell, point)
            };
            sign_change_roots(&mut plain, a, b, piece.degree.entries()[axis])
        };
        let mut g = |t: f64| -> f64 {
            point[axis] = t;
            piece.eval_on(cell, point).abs().powf(p)
        };
        let out = quad::integrate_1d(&mut g, a, b, &roots, rule);
        out.value
    } else {
        let mut g = |t: f64| -> f64 {
            point[axis] = t;
            let mut sub = point.to_vec();
            cell_abs_power_integral(piece, cell, p, rule, &mut sub, axis + 1)
        };
        let out = quad::integrate_1d(&mut g, a, b, &[], rule);
        out.value
    }
}

/// Sign-change locations of a univariate restriction.  Linear restrictions
/// solve in closed form; higher degrees sample past the degree and bisect.
fn sign_change_roots(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, degree: u64) -> Vec<f64> {
    if degree <= 1 {
        let (fa, fb) = (f(a), f(b));
        if fa * fb < 0.0 {
            return vec![a - fa * (b - a) / (fb - fa)];
        }
        return Vec::new();
    }
    let samples = (4 * (degree + 1) + 1) as usize;
    let mut roots = Vec::new();
    let mut prev_t = a;
    let mut prev_v = f(a);
    for i in 1..samples {
        let t = a + (b - a) * i as f64 / (samples - 1) as f64;
        let v = f(t);
        if prev_v == 0.0 {
            roots.push(prev_t);
        } else if prev_v * v < 0.0 {
            let (mut lo, mut hi) = (prev_t, t);
            let mut flo = prev_v;
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
                if hi - lo < 1e-13 * (b - a) {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_t = t;
        prev_v = v;
    }
    roots
}

/// Node-value vector of a piecewise polynomial: the owning cell's polynomial
/// sampled at the lattice `2^{-kappa}(nu + lambda)`, cells outer and degree
/// indices inner, both lexicographic.
pub fn to_node_vector(f: &PiecewisePoly, alpha: &[f64], k: u64) -> Result<Vec<f64>> {
    let expected = crate::indexgrid::dyadic_levels(k, alpha);
    if f.level != expected {
        return Err(Error::LevelMismatch {
            expected: expected.0,
            got: f.level.0.clone(),
        });
    }
    let cells = f.cells()?;
    let deg_bounds: Vec<u64> = f.degree.entries().iter().map(|&l| l + 1).collect();
    let lambdas: Vec<MultiIndex> = lex_positions(&deg_bounds).collect();
    let mut out = Vec::with_capacity(cells.len() * lambdas.len());
    for (i, cell) in cells.iter().enumerate() {
        for lambda in &lambdas {
            let x: Vec<f64> = (0..f.dim())
                .map(|j| (cell.pos.0[j] + lambda.0[j]) as f64 * cell.side(j))
                .collect();
            out.push(f.pieces[i].eval_on(cell, &x));
        }
    }
    Ok(out)
}

/// Inverse of [`to_node_vector`]: per-cell tensor Lagrange interpolation at
/// the same nodes, returned in the orthonormal cell basis.
pub fn from_node_vector(
    v: &[f64],
    degree: &MultiIndex,
    alpha: &[f64],
    k: u64,
) -> Result<PiecewisePoly> {
    let level = crate::indexgrid::dyadic_levels(k, alpha);
    let cells = cells_at(&level)?;
    let deg_bounds: Vec<u64> = degree.entries().iter().map(|&l| l + 1).collect();
    let lambdas: Vec<MultiIndex> = lex_positions(&deg_bounds).collect();
    let per_cell = lambdas.len();
    if v.len() != cells.len() * per_cell {
        return Err(Error::LengthMismatch {
            expected: cells.len() * per_cell,
            got: v.len(),
        });
    }
    let mut out = PiecewisePoly::zero(level, degree.clone());
    let mut matrix = vec![0.0; per_cell * per_cell];
    for (ci, cell) in cells.iter().enumerate() {
        for (r, lam_node) in lambdas.iter().enumerate() {
            let x: Vec<f64> = (0..cell.dim())
                .map(|j| (cell.pos.0[j] + lam_node.0[j]) as f64 * cell.side(j))
                .collect();
            for (c, lam_basis) in lambdas.iter().enumerate() {
                matrix[r * per_cell + c] = CellPolynomial::basis_at(cell, lam_basis.entries(), &x);
            }
        }
        let rhs = &v[ci * per_cell..(ci + 1) * per_cell];
        let coeffs = solve_dense(&mut matrix.clone(), rhs, per_cell)?;
        out.pieces[ci].coeffs = coeffs;
    }
    Ok(out)
}

/// Dense solve with partial pivoting; the systems here are tiny tensor
/// interpolation matrices.
fn solve_dense(a: &mut [f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-14 {
            return Err(Error::RankDeficient);
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            x.swap(col, piv);
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= a[col * n + col];
        for r in 0..col {
            x[r] -= a[r * n + col] * x[col];
        }
    }
    Ok(x)
}
