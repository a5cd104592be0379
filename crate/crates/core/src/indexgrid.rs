//! Multi-index arithmetic and the anisotropic dyadic grid.
//!
//! A level vector assigns each axis its own dyadic refinement depth, so the
//! cells of the grid are boxes `2^{-kappa} nu + 2^{-kappa} I^d` with per-axis
//! side lengths.  Cell coordinates are kept as exact dyadic rationals
//! (`num / 2^exp`) so that tiling and nesting queries have no floating-point
//! ambiguity; conversion to `f64` happens only at quadrature time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector of nonnegative integers of fixed length `d`.
///
/// Used for dyadic levels, cell positions, polynomial degree bounds and
/// lattice sizes alike.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u64>);

impl MultiIndex {
    pub fn new(entries: Vec<u64>) -> Self {
        assert!(!entries.is_empty(), "multi-index must have length >= 1");
        MultiIndex(entries)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    /// Sum of the entries, `(self, e)`.
    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise maximum.
    pub fn max(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim(), other.dim());
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (*a).max(*b))
                .collect(),
        )
    }
}

/// Iterates over all integer vectors `v` with `0 <= v_j < bounds_j` in
/// lexicographic order (first coordinate most significant).
///
/// This is the one enumeration order used everywhere: cells, tensor degree
/// indices and bump lattice positions all follow it, which pins down the
/// coordinate layout of coefficient and node-value vectors.
pub fn lex_positions(bounds: &[u64]) -> LexPositions {
    let total: u128 = bounds.iter().map(|&b| b as u128).product();
    LexPositions {
        bounds: bounds.to_vec(),
        next: if total == 0 {
            None
        } else {
            Some(vec![0; bounds.len()])
        },
    }
}

pub struct LexPositions {
    bounds: Vec<u64>,
    next: Option<Vec<u64>>,
}

impl Iterator for LexPositions {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // odometer increment, last coordinate fastest
        let mut j = succ.len();
        loop {
            if j == 0 {
                self.next = None;
                break;
            }
            j -= 1;
            succ[j] += 1;
            if succ[j] < self.bounds[j] {
                self.next = Some(succ);
                break;
            }
            succ[j] = 0;
        }
        Some(MultiIndex(current))
    }
}

/// Lexicographic rank of `v` within `lex_positions(bounds)`.
pub fn lex_rank(bounds: &[u64], v: &[u64]) -> Option<usize> {
    if bounds.len() != v.len() || v.iter().zip(bounds).any(|(x, b)| x >= b) {
        return None;
    }
    let mut rank: u128 = 0;
    for j in 0..v.len() {
        let stride: u128 = bounds[j + 1..].iter().map(|&b| b as u128).product();
        rank += v[j] as u128 * stride;
    }
    Some(rank as usize)
}

/// An exact dyadic rational `num / 2^exp` in `[0, +inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dyadic {
    pub num: u64,
    pub exp: u32,
}

impl Dyadic {
    pub fn new(num: u64, exp: u32) -> Self {
        Dyadic { num, exp }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (1u64 << self.exp) as f64
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // a/2^m vs b/2^n  <=>  a*2^n vs b*2^m, exact in u128
        let lhs = (self.num as u128) << other.exp;
        let rhs = (other.num as u128) << self.exp;
        lhs.cmp(&rhs)
    }
}

/// One cell of the anisotropic dyadic grid: `2^{-level} pos + 2^{-level} I^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub level: MultiIndex,
    pub pos: MultiIndex,
}

impl Cell {
    pub fn new(level: MultiIndex, pos: MultiIndex) -> Result<Self> {
        if level.dim() != pos.dim() {
            return Err(Error::DimensionMismatch {
                expected: level.dim(),
                got: pos.dim(),
            });
        }
        for j in 0..level.dim() {
            if level.0[j] >= 63 {
                return Err(Error::Overflow {
                    what: "dyadic level",
                });
            }
            if pos.0[j] >= (1u64 << level.0[j]) {
                return Err(Error::InvalidParameter(format!(
                    "cell position {} out of range for level {}",
                    pos.0[j], level.0[j]
                )));
            }
        }
        Ok(Cell { level, pos })
    }

    pub fn dim(&self) -> usize {
        self.level.dim()
    }

    /// Exact lower corner along axis `j`.
    pub fn lower(&self, j: usize) -> Dyadic {
        Dyadic::new(self.pos.0[j], self.level.0[j] as u32)
    }

    /// Exact upper corner along axis `j`.
    pub fn upper(&self, j: usize) -> Dyadic {
        Dyadic::new(self.pos.0[j] + 1, self.level.0[j] as u32)
    }

    /// Side length along axis `j` as `f64` (`2^{-level_j}`).
    pub fn side(&self, j: usize) -> f64 {
        0.5f64.powi(self.level.0[j] as i32)
    }

    pub fn lower_f64(&self, j: usize) -> f64 {
        self.lower(j).to_f64()
    }

    /// True iff `self` is contained in `other` (closed boxes, exact).
    pub fn is_subcell_of(&self, other: &Cell) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        (0..self.dim()).all(|j| other.lower(j) <= self.lower(j) && self.upper(j) <= other.upper(j))
    }

    /// True iff the open interiors of the two cells intersect (exact).
    pub fn intersects(&self, other: &Cell) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        (0..self.dim())
            .all(|j| self.lower(j).max(other.lower(j)) < self.upper(j).min(other.upper(j)))
    }

    /// True iff `x` lies in the cell under the half-open convention
    /// `[lower, upper)`, with the upper face closed on the last cell of the
    /// axis so that the cells cover the closed unit cube.
    pub fn contains_halfopen(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|j| {
            let lo = self.lower_f64(j);
            let hi = self.upper(j).to_f64();
            let last = self.pos.0[j] + 1 == (1u64 << self.level.0[j]);
            x[j] >= lo && (x[j] < hi || (last && x[j] <= hi))
        })
    }
}

/// Anisotropy parameters shared by the norm and projector machinery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnisoParams {
    pub d: usize,
    pub alpha: Vec<f64>,
    pub p: f64,
    /// `f64::INFINITY` encodes the sup norm.
    pub q: f64,
    pub theta: f64,
}

impl AnisoParams {
    pub fn new(alpha: Vec<f64>, p: f64, q: f64, theta: f64) -> Result<Self> {
        if alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidParameter(
                "alpha must be a nonempty vector of positive reals".into(),
            ));
        }
        if !(1.0..f64::INFINITY).contains(&p) {
            return Err(Error::InvalidParameter(
                "p must lie in [1, infinity)".into(),
            ));
        }
        if q < 1.0 {
            return Err(Error::InvalidParameter(
                "q must lie in [1, infinity]".into(),
            ));
        }
        if theta < 1.0 {
            return Err(Error::InvalidParameter(
                "theta must lie in [1, infinity]".into(),
            ));
        }
        Ok(AnisoParams {
            d: alpha.len(),
            alpha,
            p,
            q,
            theta,
        })
    }

    /// Per-axis difference order: the least integer strictly above `alpha_j`.
    ///
    /// Integer `alpha_j` therefore gets order `alpha_j + 1`.
    pub fn smoothness_order(&self) -> MultiIndex {
        MultiIndex(self.alpha.iter().map(|&a| smoothness_order_of(a)).collect())
    }

    /// The harmonic sum `sum_j 1/alpha_j` that drives all rate exponents.
    pub fn harmonic_sum(&self) -> f64 {
        self.alpha.iter().map(|&a| 1.0 / a).sum()
    }

    /// The side condition `1 - harmonic_sum * (1/p - 1/q)_+ > 0` that the
    /// approximation and lower-bound machinery require.
    pub fn condition_flag(&self) -> bool {
        self.condition_value() > 0.0
    }

    /// Value of `1 - harmonic_sum * (1/p - 1/q)_+`.
    pub fn condition_value(&self) -> f64 {
        1.0 - self.harmonic_sum() * pos_part(recip(self.p) - recip(self.q))
    }
}

/// `(t)_+`.
pub fn pos_part(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// `1/p` with the convention `1/infinity = 0`.
pub fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn smoothness_order_of(alpha: f64) -> u64 {
    // min { m in N : alpha < m }; equals floor(alpha) + 1 for alpha > 0,
    // including integer alpha (strict inequality).
    let f = alpha.floor();
    // guard against alpha sitting a hair below an integer due to rounding
    let f = if alpha - f > 1.0 - 1e-9 { f + 1.0 } else { f };
    f as u64 + 1
}

fn floor_ratio(value: f64) -> u64 {
    let f = value.floor();
    let f = if value - f > 1.0 - 1e-9 { f + 1.0 } else { f };
    if f < 0.0 {
        0
    } else {
        f as u64
    }
}

/// Per-axis dyadic levels `floor(k / alpha_j)` of the grid at resolution `k`.
pub fn dyadic_levels(k: u64, alpha: &[f64]) -> MultiIndex {
    assert!(alpha.iter().all(|&a| a > 0.0));
    MultiIndex(alpha.iter().map(|&a| floor_ratio(k as f64 / a)).collect())
}

/// Per-axis lattice sizes `floor(k^{1/alpha_j})` used by the bump systems.
pub fn lattice_dims(k: u64, alpha: &[f64]) -> MultiIndex {
    assert!(k >= 1);
    MultiIndex(
        alpha
            .iter()
            .map(|&a| floor_ratio((k as f64).powf(1.0 / a)))
            .collect(),
    )
}

/// Dimension of the space of piecewise tensor polynomials of degree `<= l`
/// on the grid at resolution `k`: `2^{sum of levels} * prod (l_j + 1)`.
pub fn piecewise_dim(l: &MultiIndex, alpha: &[f64], k: u64) -> Result<u64> {
    let kappa = dyadic_levels(k, alpha);
    let cells_log2 = kappa.sum();
    if cells_log2 >= 63 {
        return Err(Error::Overflow { what: "cell count" });
    }
    let mut r: u64 = 1u64 << cells_log2;
    for &lj in l.entries() {
        r = r.checked_mul(lj + 1).ok_or(Error::Overflow {
            what: "piecewise dimension",
        })?;
    }
    Ok(r)
}

/// All cells of the grid at the given level, in lexicographic position order.
pub fn cells_at(level: &MultiIndex) -> Result<Vec<Cell>> {
    let total: u64 = level.sum();
    if total > 30 {
        return Err(Error::Overflow {
            what: "cell enumeration",
        });
    }
    let bounds: Vec<u64> = level.entries().iter().map(|&k| 1u64 << k).collect();
    lex_positions(&bounds)
        .map(|pos| Cell::new(level.clone(), pos))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dyadic_levels_examples() {
        assert_eq!(dyadic_levels(3, &[1.0, 2.0]).entries(), &[3, 1]);
        assert_eq!(dyadic_levels(0, &[0.7, 3.1]).entries(), &[0, 0]);
        assert_eq!(dyadic_levels(5, &[1.5]).entries(), &[3]);
    }

    #[test]
    fn lattice_dims_examples() {
        assert_eq!(lattice_dims(8, &[1.0, 3.0]).entries(), &[8, 2]);
        assert_eq!(lattice_dims(1, &[0.4, 2.0, 7.0]).entries(), &[1, 1, 1]);
        assert_eq!(lattice_dims(9, &[2.0]).entries(), &[3]);
    }

    #[test]
    fn piecewise_dim_examples() {
        // kappa = (2,1), 8 cells, 4 dofs per cell
        let l = MultiIndex::new(vec![1, 1]);
        assert_eq!(piecewise_dim(&l, &[1.0, 2.0], 2).unwrap(), 32);
        let l = MultiIndex::new(vec![0]);
        assert_eq!(piecewise_dim(&l, &[1.0], 3).unwrap(), 8);
        let l = MultiIndex::new(vec![0, 0]);
        assert_eq!(piecewise_dim(&l, &[1.0, 1.0], 0).unwrap(), 1);
    }

    #[test]
    fn smoothness_order_strict_at_integers() {
        let params = AnisoParams::new(vec![1.0, 2.0, 0.75], 2.0, 2.0, 2.0).unwrap();
        assert_eq!(params.smoothness_order().entries(), &[2, 3, 1]);
    }

    #[test]
    fn condition_flag_examples() {
        // harmonic sum 2, (1/p - 1/q)_+ = 0 for p = q
        let params = AnisoParams::new(vec![1.0, 1.0], 2.0, 2.0, 2.0).unwrap();
        assert!(params.condition_flag());
        // harmonic sum 10, p=1, q=infinity: 1 - 10 < 0
        let params = AnisoParams::new(vec![0.2, 0.2], 1.0, f64::INFINITY, 2.0).unwrap();
        assert!(!params.condition_flag());
    }

    #[test]
    fn cells_at_examples() {
        let cells = cells_at(&MultiIndex::new(vec![1, 1])).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].pos.entries(), &[0, 0]);
        assert_eq!(cells[0].lower_f64(0), 0.0);
        assert_eq!(cells[0].side(0), 0.5);
        assert_eq!(cells[0].side(1), 0.5);
        // lexicographic: (0,0), (0,1), (1,0), (1,1)
        assert_eq!(cells[1].pos.entries(), &[0, 1]);
        assert_eq!(cells[2].pos.entries(), &[1, 0]);

        let cells = cells_at(&MultiIndex::new(vec![0])).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].lower_f64(0), 0.0);
        assert_eq!(cells[0].side(0), 1.0);

        let cells = cells_at(&MultiIndex::new(vec![2, 0])).unwrap();
        assert_eq!(cells.len(), 4);
        for c in &cells {
            assert_eq!(c.side(0), 0.25);
            assert_eq!(c.side(1), 1.0);
        }
    }

    #[test]
    fn nesting_examples() {
        let fine = Cell::new(MultiIndex::new(vec![1]), MultiIndex::new(vec![0])).unwrap();
        let coarse = Cell::new(MultiIndex::new(vec![0]), MultiIndex::new(vec![0])).unwrap();
        assert!(fine.is_subcell_of(&coarse));
        let sibling = Cell::new(MultiIndex::new(vec![1]), MultiIndex::new(vec![1])).unwrap();
        assert!(!fine.is_subcell_of(&sibling));
        assert!(fine.is_subcell_of(&fine));
    }

    #[test]
    fn levels_monotone_in_k() {
        let alpha = [1.0, 2.0, 0.6];
        for k in 1..=12u64 {
            let prev = dyadic_levels(k - 1, &alpha);
            let cur = dyadic_levels(k, &alpha);
            assert!(prev.le(&cur), "levels must be nondecreasing in k");
        }
    }

    #[test]
    fn dimension_sandwich() {
        // R_k / 2^{k * harmonic_sum} stays in a bounded interval whose spread
        // is at most 2^{harmonic_sum} * prod (l_j + 1)
        let l = MultiIndex::new(vec![1, 1]);
        let alpha = [1.0, 2.0];
        let hs: f64 = alpha.iter().map(|a| 1.0 / a).sum();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for k in 0..=12u64 {
            let r = piecewise_dim(&l, &alpha, k).unwrap() as f64;
            let ratio = r / 2f64.powf(k as f64 * hs);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let spread_bound = 2f64.powf(hs) * 4.0;
        assert!(
            hi / lo <= spread_bound,
            "spread {} exceeds {}",
            hi / lo,
            spread_bound
        );
    }

    #[test]
    fn cells_tile_unit_cube_exactly() {
        // exact rational volume bookkeeping: sum of 2^{-sum(level)} over all
        // cells equals 1; track the numerator over the common denominator
        let level = MultiIndex::new(vec![2, 1]);
        let cells = cells_at(&level).unwrap();
        let denom_log2 = level.sum();
        let total: u64 = cells.iter().map(|_| 1u64).sum();
        assert_eq!(total, 1u64 << denom_log2);
        // and the union covers: every dyadic midpoint belongs to exactly one cell
        let probes = [[0.1, 0.3], [0.6, 0.9], [0.26, 0.49], [1.0, 1.0], [0.0, 0.5]];
        for p in probes {
            let owners = cells.iter().filter(|c| c.contains_halfopen(&p)).count();
            assert_eq!(owners, 1, "point {:?} owned by {} cells", p, owners);
        }
    }

    proptest! {
        #[test]
        fn nesting_holds_for_intersecting_comparable_cells(
            k1 in 0u64..5, k2 in 0u64..5, j1 in 0u64..5, j2 in 0u64..5,
            seed in 0u64..1u64 << 16,
        ) {
            // coarse level <= fine level componentwise
            let coarse = MultiIndex::new(vec![k1.min(j1), k2.min(j2)]);
            let fine = MultiIndex::new(vec![k1.max(j1), k2.max(j2)]);
            let fine_cells = cells_at(&fine).unwrap();
            let coarse_cells = cells_at(&coarse).unwrap();
            let fc = &fine_cells[(seed as usize) % fine_cells.len()];
            for cc in &coarse_cells {
                if fc.intersects(cc) {
                    prop_assert!(fc.is_subcell_of(cc));
                }
            }
        }

        #[test]
        fn lex_rank_inverts_enumeration(b1 in 1u64..5, b2 in 1u64..5, b3 in 1u64..4) {
            let bounds = [b1, b2, b3];
            for (i, v) in lex_positions(&bounds).enumerate() {
                prop_assert_eq!(lex_rank(&bounds, v.entries()), Some(i));
            }
        }
    }
}
