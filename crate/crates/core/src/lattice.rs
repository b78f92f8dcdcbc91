//! The d-dimensional toroidal lattice of unit cubes and the open cells it is
//! built from.
//!
//! Every open cell is addressed by a *doubled coordinate* per axis: a value
//! in `[0, 2n)` that is even when the cell is a single lattice point along
//! that axis and odd when it spans the unit interval starting at
//! `coordinate / 2`. The dense cell index is the mixed-radix number formed
//! from these coordinates with axis 0 most significant, so the whole torus
//! occupies `[0, (2n)^d)` without gaps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported ambient dimension. `(2n)^d < 2^63` with `n >= 2` forces
/// `d <= 31` anyway; the axis mask lives in a `u32`.
pub const MAX_DIM: usize = 31;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice dimension must be between 1 and {MAX_DIM}, got {0}")]
    BadDimension(usize),
    #[error("lattice side length must be at least 2, got {0}")]
    SideTooSmall(u64),
    #[error("lattice with d = {dim}, n = {side} has at least 2^63 open cells")]
    TooLarge { dim: usize, side: u64 },
    #[error("cell dimension {cell_dim} is out of range for a {dim}-dimensional lattice")]
    DimensionOutOfRange { cell_dim: usize, dim: usize },
    #[error("common cubes are only unique when n > 2 (got n = {0})")]
    AmbiguousCommonCube(u64),
    #[error("cell does not belong to this lattice")]
    ForeignCell,
}

/// Dimension `d` and side length `n` of the torus `(Z/n)^d` of unit cubes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    dim: usize,
    side: u64,
}

/// One open unit cell: the lattice point at its minimal corner plus the set
/// of axes it spans.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    anchor: Vec<u64>,
    axes: u32,
}

impl CellId {
    /// Builds a cell from its anchor and a bitmask of spanned axes (bit `a`
    /// set when the cell spans axis `a`). Use [`LatticeSpec::contains`] to
    /// check it against a lattice.
    pub fn new(anchor: Vec<u64>, axes: u32) -> Self {
        Self { anchor, axes }
    }

    pub fn anchor(&self) -> &[u64] {
        &self.anchor
    }

    pub fn axes(&self) -> u32 {
        self.axes
    }

    pub fn spans(&self, axis: usize) -> bool {
        self.axes >> axis & 1 == 1
    }

    /// Number of spanned axes.
    pub fn dim(&self) -> usize {
        self.axes.count_ones() as usize
    }
}

/// `C(n, k)` as an exact integer; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * u128::from(n - t) / u128::from(t + 1);
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

impl LatticeSpec {
    pub fn new(dim: usize, side: u64) -> Result<Self, LatticeError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LatticeError::BadDimension(dim));
        }
        if side < 2 {
            return Err(LatticeError::SideTooSmall(side));
        }
        let too_large = LatticeError::TooLarge { dim, side };
        let doubled = side.checked_mul(2).ok_or_else(|| too_large.clone())?;
        let total = (0..dim).try_fold(1u64, |acc, _| acc.checked_mul(doubled));
        match total {
            Some(t) if t < 1 << 63 => Ok(Self { dim, side }),
            _ => Err(too_large),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> u64 {
        self.side
    }

    /// Side length of the doubled coordinate grid, `2n`.
    pub fn doubled_side(&self) -> u64 {
        2 * self.side
    }

    /// `n^d`, the number of top-dimensional cells.
    pub fn top_count(&self) -> u64 {
        self.side.pow(self.dim as u32)
    }

    /// `(2n)^d`, the number of open cells of all dimensions.
    pub fn total_cells(&self) -> u64 {
        self.doubled_side().pow(self.dim as u32)
    }

    /// `N_i = C(d, i) n^d`, the number of open `i`-cells.
    pub fn cell_count(&self, cell_dim: usize) -> Result<u64, LatticeError> {
        if cell_dim > self.dim {
            return Err(LatticeError::DimensionOutOfRange {
                cell_dim,
                dim: self.dim,
            });
        }
        Ok(binomial(self.dim as u64, cell_dim as u64) * self.top_count())
    }

    pub fn contains(&self, cell: &CellId) -> bool {
        cell.anchor.len() == self.dim
            && cell.anchor.iter().all(|&x| x < self.side)
            && u64::from(cell.axes) < 1u64 << self.dim
    }

    /// Doubled coordinates of a cell.
    pub fn coords(&self, cell: &CellId) -> Vec<u64> {
        debug_assert!(self.contains(cell));
        (0..self.dim)
            .map(|a| 2 * cell.anchor[a] + u64::from(cell.spans(a)))
            .collect()
    }

    pub fn cell_from_coords(&self, coords: &[u64]) -> CellId {
        debug_assert_eq!(coords.len(), self.dim);
        let mut axes = 0u32;
        let anchor = coords
            .iter()
            .enumerate()
            .map(|(a, &c)| {
                axes |= ((c & 1) as u32) << a;
                c / 2
            })
            .collect();
        CellId { anchor, axes }
    }

    /// Dense index of a cell in `[0, (2n)^d)`.
    pub fn index(&self, cell: &CellId) -> u64 {
        self.index_of_coords(&self.coords(cell))
    }

    pub fn index_of_coords(&self, coords: &[u64]) -> u64 {
        let m = self.doubled_side();
        coords.iter().fold(0, |acc, &c| acc * m + c)
    }

    pub fn coords_of_index(&self, mut index: u64) -> Vec<u64> {
        let m = self.doubled_side();
        let mut coords = vec![0; self.dim];
        for c in coords.iter_mut().rev() {
            *c = index % m;
            index /= m;
        }
        coords
    }

    /// Inverse of [`LatticeSpec::index`].
    pub fn cell(&self, index: u64) -> CellId {
        self.cell_from_coords(&self.coords_of_index(index))
    }

    /// All open cells in dense-index order.
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.total_cells()).map(move |i| self.cell(i))
    }

    /// Index of a top cell in `[0, n^d)`, axis 0 slowest.
    pub fn top_index(&self, cell: &CellId) -> Option<u64> {
        if cell.dim() != self.dim {
            return None;
        }
        Some(cell.anchor.iter().fold(0, |acc, &x| acc * self.side + x))
    }

    pub fn top_cell(&self, mut index: u64) -> CellId {
        let mut anchor = vec![0; self.dim];
        for x in anchor.iter_mut().rev() {
            *x = index % self.side;
            index /= self.side;
        }
        CellId {
            anchor,
            axes: (1u32 << self.dim) - 1,
        }
    }

    fn wrap(&self, c: u64, delta: i64) -> u64 {
        let m = self.doubled_side() as i64;
        (c as i64 + delta).rem_euclid(m) as u64
    }

    /// Expands per-axis coordinate choices into the cells they describe.
    fn expand(&self, cell: &CellId, choose: impl Fn(u64) -> Vec<i64>) -> Vec<CellId> {
        let coords = self.coords(cell);
        let mut out: Vec<Vec<u64>> = vec![Vec::with_capacity(self.dim)];
        for &c in &coords {
            let deltas = choose(c);
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    deltas.iter().map(move |&delta| {
                        let mut next = prefix.clone();
                        next.push(self.wrap(c, delta));
                        next
                    })
                })
                .collect();
        }
        out.iter().map(|c| self.cell_from_coords(c)).collect()
    }

    /// Calls `f` with the dense index of every cell obtained by moving each
    /// doubled coordinate by one of `deltas(c)`, without allocating cells.
    pub(crate) fn visit_offsets(
        &self,
        coords: &[u64],
        deltas: impl Fn(u64) -> &'static [i64],
        mut f: impl FnMut(u64),
    ) {
        fn go(
            spec: &LatticeSpec,
            coords: &[u64],
            deltas: &dyn Fn(u64) -> &'static [i64],
            prefix: u64,
            f: &mut dyn FnMut(u64),
        ) {
            match coords.split_first() {
                None => f(prefix),
                Some((&c, rest)) => {
                    for &delta in deltas(c) {
                        let next = prefix * spec.doubled_side() + spec.wrap(c, delta);
                        go(spec, rest, deltas, next, f);
                    }
                }
            }
        }
        go(self, coords, &deltas, 0, &mut f);
    }

    /// The `2^(d-i)` top cells whose closure contains the cell.
    pub fn cofaces_top(&self, cell: &CellId) -> Vec<CellId> {
        self.expand(cell, |c| if c & 1 == 1 { vec![0] } else { vec![-1, 1] })
    }

    /// The `3^(d-i)` cells having the given cell as a face, itself included.
    pub fn star_cells(&self, cell: &CellId) -> Vec<CellId> {
        self.expand(cell, |c| if c & 1 == 1 { vec![0] } else { vec![-1, 0, 1] })
    }

    /// The `3^i` faces of the cell's closure, itself included.
    pub fn closed_faces(&self, cell: &CellId) -> Vec<CellId> {
        self.expand(cell, |c| if c & 1 == 1 { vec![-1, 0, 1] } else { vec![0] })
    }

    /// The unique smallest cube having both cells as faces, with its
    /// dimension, or `None` when the cells are far apart (no common top
    /// cell). Requires `n > 2`.
    pub fn common_cube(
        &self,
        a: &CellId,
        b: &CellId,
    ) -> Result<Option<(CellId, usize)>, LatticeError> {
        if self.side <= 2 {
            return Err(LatticeError::AmbiguousCommonCube(self.side));
        }
        if !self.contains(a) || !self.contains(b) {
            return Err(LatticeError::ForeignCell);
        }
        let (ca, cb) = (self.coords(a), self.coords(b));
        let mut joint = Vec::with_capacity(self.dim);
        for (&x, &y) in ca.iter().zip(&cb) {
            let c = if x == y {
                x
            } else {
                match (x & 1, y & 1) {
                    // two distinct spanning intervals never share a cube
                    (1, 1) => return Ok(None),
                    (1, 0) if y == self.wrap(x, -1) || y == self.wrap(x, 1) => x,
                    (0, 1) if x == self.wrap(y, -1) || x == self.wrap(y, 1) => y,
                    (0, 0) if y == self.wrap(x, 2) => self.wrap(x, 1),
                    (0, 0) if x == self.wrap(y, 2) => self.wrap(y, 1),
                    _ => return Ok(None),
                }
            };
            joint.push(c);
        }
        let cube = self.cell_from_coords(&joint);
        let s = cube.dim();
        Ok(Some((cube, s)))
    }

    /// Shifts a cell by a lattice vector, wrapping on the torus.
    pub fn translate(&self, cell: &CellId, offset: &[u64]) -> CellId {
        let anchor = cell
            .anchor
            .iter()
            .zip(offset)
            .map(|(&x, &o)| (x + o % self.side) % self.side)
            .collect();
        CellId {
            anchor,
            axes: cell.axes,
        }
    }

    /// Moves the cell's axis `a` to axis `perm[a]`.
    pub fn permute_axes(&self, cell: &CellId, perm: &[usize]) -> CellId {
        let mut anchor = vec![0; self.dim];
        let mut axes = 0;
        for (a, &to) in perm.iter().enumerate() {
            anchor[to] = cell.anchor[a];
            axes |= u32::from(cell.spans(a)) << to;
        }
        CellId { anchor, axes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn spec(d: usize, n: u64) -> LatticeSpec {
        LatticeSpec::new(d, n).unwrap()
    }

    fn set(cells: Vec<CellId>) -> BTreeSet<CellId> {
        cells.into_iter().collect()
    }

    /// Brute-force face test on anchors and axes, independent of the doubled
    /// coordinate arithmetic: `x` is a face of `y` iff along every axis the
    /// closed projection of `x` lies inside the closed projection of `y`.
    fn is_face(spec: &LatticeSpec, x: &CellId, y: &CellId) -> bool {
        let n = spec.side();
        (0..spec.dim()).all(|a| {
            let (xa, ya) = (x.anchor()[a], y.anchor()[a]);
            match (x.spans(a), y.spans(a)) {
                (true, true) => xa == ya,
                (true, false) => false,
                (false, false) => xa == ya,
                (false, true) => xa == ya || xa == (ya + 1) % n,
            }
        })
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(LatticeSpec::new(0, 4), Err(LatticeError::BadDimension(0)));
        assert_eq!(LatticeSpec::new(2, 1), Err(LatticeError::SideTooSmall(1)));
        assert!(matches!(
            LatticeSpec::new(31, 3),
            Err(LatticeError::TooLarge { .. })
        ));
        assert!(LatticeSpec::new(31, 2).is_ok());
        assert!(matches!(
            LatticeSpec::new(1, 1 << 62),
            Err(LatticeError::TooLarge { .. })
        ));
    }

    #[test]
    fn cell_counts() {
        assert_eq!(spec(2, 20).cell_count(1).unwrap(), 800);
        assert_eq!(spec(3, 2).cell_count(3).unwrap(), 8);
        let s = spec(4, 3);
        let mut by_dim = [0u64; 5];
        for cell in s.cells() {
            by_dim[cell.dim()] += 1;
        }
        assert_eq!(by_dim[2], 486);
        assert_eq!(s.cell_count(2).unwrap(), 486);
        assert!(matches!(
            s.cell_count(5),
            Err(LatticeError::DimensionOutOfRange { .. })
        ));
    }

    #[test]
    fn total_is_doubled_volume() {
        for d in 1..=4 {
            for n in 2..=5 {
                let s = spec(d, n);
                let sum: u64 = (0..=d).map(|i| s.cell_count(i).unwrap()).sum();
                assert_eq!(sum, s.total_cells());
                assert_eq!(sum, (2 * n).pow(d as u32));
            }
        }
    }

    #[test]
    fn index_round_trip() {
        let s = spec(3, 4);
        for i in 0..s.total_cells() {
            assert_eq!(s.index(&s.cell(i)), i);
        }
        for t in 0..s.top_count() {
            assert_eq!(s.top_index(&s.top_cell(t)), Some(t));
        }
    }

    #[test]
    fn vertex_cofaces_in_the_plane() {
        let s = spec(2, 5);
        let v = CellId::new(vec![0, 0], 0);
        let got = set(s.cofaces_top(&v));
        let want = set(vec![
            s.top_cell(0),
            s.top_cell(4),
            s.top_cell(20),
            s.top_cell(24),
        ]);
        assert_eq!(got, want);
        let top = s.top_cell(7);
        assert_eq!(s.cofaces_top(&top), vec![top]);
    }

    #[test]
    fn edge_cofaces_in_space() {
        let s = spec(3, 3);
        let edge = CellId::new(vec![0, 0, 0], 0b001);
        let got = set(s.cofaces_top(&edge));
        let want: BTreeSet<_> = [[0, 0, 0], [0, 2, 0], [0, 0, 2], [0, 2, 2]]
            .iter()
            .map(|a| CellId::new(a.to_vec(), 0b111))
            .collect();
        assert_eq!(got, want);
        let brute: BTreeSet<_> = s
            .cells()
            .filter(|t| t.dim() == 3 && is_face(&s, &edge, t))
            .collect();
        assert_eq!(brute, want);
    }

    #[test]
    fn star_and_closure_sizes() {
        let s = spec(2, 4);
        assert_eq!(s.star_cells(&CellId::new(vec![1, 1], 0)).len(), 9);
        assert_eq!(s.closed_faces(&s.top_cell(3)).len(), 9);
        assert_eq!(s.closed_faces(&CellId::new(vec![2, 3], 0)).len(), 1);
        let s3 = spec(3, 3);
        assert_eq!(s3.closed_faces(&s3.top_cell(0)).len(), 27);
        let edge = CellId::new(vec![1, 2, 0], 0b010);
        let star = set(s3.star_cells(&edge));
        assert_eq!(star.len(), 9);
        let brute: BTreeSet<_> = s3.cells().filter(|y| is_face(&s3, &edge, y)).collect();
        assert_eq!(star, brute);
    }

    #[test]
    fn exhaustive_face_relations() {
        for d in 1..=3 {
            let s = spec(d, 3);
            let cells: Vec<_> = s.cells().collect();
            for x in &cells {
                let codim = (d - x.dim()) as u32;
                let star = set(s.star_cells(x));
                let cof = set(s.cofaces_top(x));
                let faces = set(s.closed_faces(x));
                assert_eq!(star.len(), 3usize.pow(codim));
                assert_eq!(cof.len(), 2usize.pow(codim));
                assert_eq!(faces.len(), 3usize.pow(x.dim() as u32));
                for y in &cells {
                    let face = is_face(&s, x, y);
                    assert_eq!(star.contains(y), face);
                    assert_eq!(faces.contains(y), is_face(&s, y, x));
                    if y.dim() == d {
                        assert_eq!(cof.contains(y), face);
                        assert_eq!(set(s.closed_faces(y)).contains(x), cof.contains(y));
                    }
                }
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let s = spec(3, 4);
        let offset = [1, 3, 2];
        for i in (0..s.total_cells()).step_by(7) {
            let x = s.cell(i);
            let moved = s.translate(&x, &offset);
            let shifted: BTreeSet<_> = s
                .closed_faces(&x)
                .iter()
                .map(|f| s.translate(f, &offset))
                .collect();
            assert_eq!(set(s.closed_faces(&moved)), shifted);
            let shifted: BTreeSet<_> = s
                .cofaces_top(&x)
                .iter()
                .map(|f| s.translate(f, &offset))
                .collect();
            assert_eq!(set(s.cofaces_top(&moved)), shifted);
        }
    }

    #[test]
    fn common_cube_basics() {
        let s = spec(2, 4);
        let a = CellId::new(vec![0, 0], 0);
        let b = CellId::new(vec![1, 0], 0);
        let (cube, dim) = s.common_cube(&a, &b).unwrap().unwrap();
        assert_eq!(cube, CellId::new(vec![0, 0], 0b01));
        assert_eq!(dim, 1);
        assert_eq!(s.common_cube(&a, &a).unwrap(), Some((a.clone(), 0)));
        // wraps around the torus
        let c = CellId::new(vec![3, 3], 0);
        let (cube, dim) = s.common_cube(&a, &c).unwrap().unwrap();
        assert_eq!((cube, dim), (s.top_cell(15), 2));
        let far = CellId::new(vec![2, 0], 0);
        assert_eq!(s.common_cube(&a, &far).unwrap(), None);
        let tiny = spec(2, 2);
        assert_eq!(
            tiny.common_cube(&a, &b),
            Err(LatticeError::AmbiguousCommonCube(2))
        );
    }

    /// Inclusion–exclusion pair counts, written out independently of the
    /// moments module.
    fn pair_count(i: i64, j: i64, s: i64) -> i64 {
        let c = |n: i64, k: i64| binomial(n as u64, k as u64) as i64;
        (0..=s)
            .map(|l| {
                let sign = if (s - l) % 2 == 0 { 1 } else { -1 };
                let pow = s + l - i - j;
                if pow < 0 {
                    return 0;
                }
                sign * c(s, l) * c(l, i) * c(l, j) * (1 << pow)
            })
            .sum()
    }

    #[test]
    fn common_cube_pair_census() {
        let s = spec(2, 3);
        let cells: Vec<_> = s.cells().collect();
        let mut census: BTreeMap<(usize, usize, usize), i64> = BTreeMap::new();
        for x in &cells {
            for y in &cells {
                let close = cells
                    .iter()
                    .any(|t| t.dim() == 2 && is_face(&s, x, t) && is_face(&s, y, t));
                let common = s.common_cube(x, y).unwrap();
                assert_eq!(common.is_some(), close);
                if let Some((cube, dim)) = common {
                    assert!(is_face(&s, x, &cube) && is_face(&s, y, &cube));
                    // minimality: every cube containing both contains the common cube
                    for t in cells
                        .iter()
                        .filter(|t| is_face(&s, x, t) && is_face(&s, y, t))
                    {
                        assert!(is_face(&s, &cube, t));
                    }
                    *census.entry((x.dim(), y.dim(), dim)).or_default() += 1;
                }
            }
        }
        for i in 0..=2i64 {
            for j in 0..=2i64 {
                for sd in 0..=2i64 {
                    let want = s.cell_count(sd as usize).unwrap() as i64 * pair_count(i, j, sd);
                    let got = census
                        .get(&(i as usize, j as usize, sd as usize))
                        .copied()
                        .unwrap_or(0);
                    assert_eq!(got, want, "i={i} j={j} s={sd}");
                }
            }
        }
    }
}
