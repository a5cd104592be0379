//! Cell-wise orthogonal projection onto piecewise tensor polynomials and the
//! dyadic increment operators built from it.
//!
//! The local operator is the `L_2(cell)`-orthogonal projection onto tensor
//! polynomials of bounded degree: it reproduces polynomials and kills
//! exactly the functions orthogonal to them, which pins it down uniquely.
//! Applied cell by cell it yields the grid projector; differences of grid
//! projectors at consecutive resolutions give the increments.

use crate::error::Result;
use crate::indexgrid::{cells_at, dyadic_levels, lex_positions, Cell, MultiIndex};
use crate::polyspace::{CellPolynomial, GridFunction, PiecewisePoly};
use crate::quad::{self, QuadratureRule};

/// Parameter bundle for the grid projectors: polynomial degree, anisotropy
/// driving the level choice, and the quadrature backend.
///
/// `fault` perturbs the first output coefficient and exists only so the
/// verification harness can demonstrate that the operator identities are
/// sensitive to such perturbations.
#[derive(Debug, Clone)]
pub struct Projector {
    pub degree: MultiIndex,
    pub alpha: Vec<f64>,
    pub rule: QuadratureRule,
    pub fault: Option<f64>,
}

impl Projector {
    pub fn new(degree: MultiIndex, alpha: Vec<f64>) -> Self {
        let rule = QuadratureRule::for_degree(degree.entries()).tight();
        Projector {
            degree,
            alpha,
            rule,
            fault: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Grid level used at resolution `k`; `k = -1` denotes the zero operator
    /// and is represented at the root level.
    pub fn level_for(&self, k: i64) -> MultiIndex {
        if k < 0 {
            MultiIndex::zeros(self.dim())
        } else {
            dyadic_levels(k as u64, &self.alpha)
        }
    }

    /// Projection of an integrable function at resolution `k`.
    pub fn apply_fn(&self, f: &GridFunction, k: i64) -> Result<PiecewisePoly> {
        let level = self.level_for(k);
        if k < 0 {
            return Ok(PiecewisePoly::zero(level, self.degree.clone()));
        }
        let mut out = project_onto_level(f, &level, &self.degree, &self.rule)?;
        self.inject(&mut out);
        Ok(out)
    }

    /// Projection of a piecewise polynomial at resolution `k`, integrating
    /// exactly over the common refinement of the two grids.
    pub fn apply_pw(&self, f: &PiecewisePoly, k: i64) -> Result<PiecewisePoly> {
        let level = self.level_for(k);
        if k < 0 {
            return Ok(PiecewisePoly::zero(level, self.degree.clone()));
        }
        let mut out = project_onto_level_piecewise(f, &level, &self.degree)?;
        self.inject(&mut out);
        Ok(out)
    }

    /// Increment between resolutions `k-1` and `k`, represented at level `k`.
    pub fn increment_fn(&self, f: &GridFunction, k: u64) -> Result<PiecewisePoly> {
        let fine = self.apply_fn(f, k as i64)?;
        if k == 0 {
            return Ok(fine);
        }
        let coarse = self.apply_fn(f, k as i64 - 1)?.refine_to(&fine.level)?;
        fine.axpy(-1.0, &coarse)
    }

    /// Same increment for a piecewise-polynomial input.
    pub fn increment_pw(&self, f: &PiecewisePoly, k: u64) -> Result<PiecewisePoly> {
        let fine = self.apply_pw(f, k as i64)?;
        if k == 0 {
            return Ok(fine);
        }
        let coarse = self.apply_pw(f, k as i64 - 1)?.refine_to(&fine.level)?;
        fine.axpy(-1.0, &coarse)
    }

    /// Block increment between resolutions `k` and `k + j`, `j >= 1`,
    /// represented at the finer level.
    pub fn block_increment_fn(&self, f: &GridFunction, k: u64, j: u64) -> Result<PiecewisePoly> {
        assert!(j >= 1);
        let fine = self.apply_fn(f, (k + j) as i64)?;
        let coarse = self.apply_fn(f, k as i64)?.refine_to(&fine.level)?;
        fine.axpy(-1.0, &coarse)
    }

    /// Same block increment for a piecewise-polynomial input.
    pub fn block_increment_pw(&self, f: &PiecewisePoly, k: u64, j: u64) -> Result<PiecewisePoly> {
        assert!(j >= 1);
        let fine = self.apply_pw(f, (k + j) as i64)?;
        let coarse = self.apply_pw(f, k as i64)?.refine_to(&fine.level)?;
        fine.axpy(-1.0, &coarse)
    }

    /// `L_q` distance between `f` and its projection at resolution `k`.
    pub fn approx_error(&self, f: &GridFunction, k: u64, q: f64) -> Result<f64> {
        let proj = self.apply_fn(f, k as i64)?;
        norm_of_difference(f, &proj, q, &self.rule)
    }

    fn inject(&self, out: &mut PiecewisePoly) {
        if let Some(eps) = self.fault {
            if let Some(piece) = out.pieces.first_mut() {
                piece.coeffs[0] += eps;
            }
        }
    }
}

/// `L_2(cell)`-orthogonal projection of `f` onto tensor polynomials of
/// degree `<= degree`: one inner product against each orthonormal basis
/// function, by breakpoint-seeded adaptive quadrature.
pub fn local_project(
    f: &GridFunction,
    cell: &Cell,
    degree: &MultiIndex,
    rule: &QuadratureRule,
) -> Result<CellPolynomial> {
    let d = cell.dim();
    let lo: Vec<f64> = (0..d).map(|j| cell.lower_f64(j)).collect();
    let hi: Vec<f64> = (0..d).map(|j| lo[j] + cell.side(j)).collect();
    let mut seeds: Vec<Vec<f64>> = f.breakpoints().to_vec();
    seeds.resize(d, Vec::new());
    let deg_bounds: Vec<u64> = degree.entries().iter().map(|&l| l + 1).collect();
    let mut out = CellPolynomial::zero(degree.clone());
    for (i, lambda) in lex_positions(&deg_bounds).enumerate() {
        out.coeffs[i] = quad::integrate_box(
            &|x| f.eval(x) * CellPolynomial::basis_at(cell, lambda.entries(), x),
            &lo,
            &hi,
            &seeds,
            rule,
        )?;
    }
    Ok(out)
}

/// Apply [`local_project`] on every cell of the grid at `level`.
pub fn project_onto_level(
    f: &GridFunction,
    level: &MultiIndex,
    degree: &MultiIndex,
    rule: &QuadratureRule,
) -> Result<PiecewisePoly> {
    let cells = cells_at(level)?;
    let mut out = PiecewisePoly::zero(level.clone(), degree.clone());
    for (i, cell) in cells.iter().enumerate() {
        out.pieces[i] = local_project(f, cell, degree, rule)?;
    }
    Ok(out)
}

/// Exact projection of a piecewise polynomial onto the grid at `level`:
/// each target coefficient is a sum of Gauss-exact integrals over the cells
/// of the common refinement of the two grids.
pub fn project_onto_level_piecewise(
    f: &PiecewisePoly,
    level: &MultiIndex,
    degree: &MultiIndex,
) -> Result<PiecewisePoly> {
    let common_level = f.level.max(level);
    let src = if common_level == f.level {
        f.clone()
    } else {
        f.refine_to(&common_level)?
    };
    let rule = QuadratureRule::new(
        (degree
            .entries()
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
            .max(f.degree.entries().iter().copied().max().unwrap_or(0)) as usize)
            + 3,
        1e-12,
        12,
    );
    let common_cells = cells_at(&common_level)?;
    let target_bounds: Vec<u64> = level.entries().iter().map(|&k| 1u64 << k).collect();
    let deg_bounds: Vec<u64> = degree.entries().iter().map(|&l| l + 1).collect();
    let lambdas: Vec<MultiIndex> = lex_positions(&deg_bounds).collect();
    let mut out = PiecewisePoly::zero(level.clone(), degree.clone());
    for (si, sc) in common_cells.iter().enumerate() {
        let shift: Vec<u32> = (0..level.dim())
            .map(|j| (common_level.0[j] - level.0[j]) as u32)
            .collect();
        let target_pos: Vec<u64> = (0..level.dim()).map(|j| sc.pos.0[j] >> shift[j]).collect();
        let ti = crate::indexgrid::lex_rank(&target_bounds, &target_pos).expect("target cell");
        let target_cell = Cell::new(level.clone(), MultiIndex(target_pos))?;
        let piece = &src.pieces[si];
        for (li, lambda) in lambdas.iter().enumerate() {
            let (nodes, weights) = tensor_rule_on(sc, &rule);
            let mut acc = 0.0;
            for (x, w) in nodes.iter().zip(&weights) {
                acc += w
                    * piece.eval_on(sc, x)
                    * CellPolynomial::basis_at(&target_cell, lambda.entries(), x);
            }
            out.pieces[ti].coeffs[li] += acc;
        }
    }
    Ok(out)
}

fn tensor_rule_on(cell: &Cell, rule: &QuadratureRule) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = cell.dim();
    let mut axes = Vec::with_capacity(d);
    for j in 0..d {
        let a = cell.lower_f64(j);
        axes.push(rule.nodes_weights_on(a, a + cell.side(j)));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let m = rule.nodes_per_axis;
    let mut idx = vec![0usize; d];
    loop {
        let mut w = 1.0;
        let mut pt = vec![0.0; d];
        for j in 0..d {
            pt[j] = axes[j].0[idx[j]];
            w *= axes[j].1[idx[j]];
        }
        points.push(pt);
        weights.push(w);
        let mut j = d;
        loop {
            if j == 0 {
                return (points, weights);
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

/// `L_q` norm of `f - g` over the unit cube, integrating cell by cell on
/// `g`'s grid so the polynomial pieces stay smooth inside each panel.
pub fn norm_of_difference(
    f: &GridFunction,
    g: &PiecewisePoly,
    q: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let d = g.dim();
    let cells = g.cells()?;
    let clip = |seeds: &[Vec<f64>], lo: &[f64], hi: &[f64]| -> Vec<Vec<f64>> {
        (0..d)
            .map(|j| {
                seeds
                    .get(j)
                    .map(|s| {
                        s.iter()
                            .copied()
                            .filter(|&t| t > lo[j] && t < hi[j])
                            .collect()
                    })
                    .unwrap_or_default()
            })
            .collect()
    };
    if q.is_infinite() {
        let mut best = 0.0f64;
        for (i, cell) in cells.iter().enumerate() {
            let lo: Vec<f64> = (0..d).map(|j| cell.lower_f64(j)).collect();
            let hi: Vec<f64> = (0..d).map(|j| lo[j] + cell.side(j)).collect();
            let seeds = clip(f.breakpoints(), &lo, &hi);
            let piece = &g.pieces[i];
            let v = quad::sup_abs_on_box(&|x| f.eval(x) - piece.eval_on(cell, x), &lo, &hi, &seeds);
            best = best.max(v);
        }
        return Ok(best);
    }
    let mut acc = 0.0;
    for (i, cell) in cells.iter().enumerate() {
        let lo: Vec<f64> = (0..d).map(|j| cell.lower_f64(j)).collect();
        let hi: Vec<f64> = (0..d).map(|j| lo[j] + cell.side(j)).collect();
        let seeds = clip(f.breakpoints(), &lo, &hi);
        let piece = &g.pieces[i];
        acc += quad::integrate_box(
            &|x| (f.eval(x) - piece.eval_on(cell, x)).abs().powf(q),
            &lo,
            &hi,
            &seeds,
            rule,
        )?;
    }
    Ok(acc.powf(1.0 / q))
}

/// Largest deviation between two piecewise polynomials sampled at `count`
/// uniform random points of the cube.
pub fn sampled_sup_distance<R: rand::Rng>(
    a: &PiecewisePoly,
    b: &PiecewisePoly,
    count: usize,
    rng: &mut R,
) -> f64 {
    let d = a.dim();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let va = a.eval(&x).unwrap_or(f64::NAN);
        let vb = b.eval(&x).unwrap_or(f64::NAN);
        worst = worst.max((va - vb).abs());
    }
    worst
}
