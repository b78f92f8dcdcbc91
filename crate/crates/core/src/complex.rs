//! Cubical complexes as sets of open cells on the torus.
//!
//! Two storage schemes exist. [`VoxelField`] keeps one bit per top cell and
//! derives lower cells on demand (voxel and plaquette models); [`CellSet`]
//! keeps one bit per open cell of every dimension and represents arbitrary
//! unions, closed or not.

pub mod io;

use crate::bits::Bits;
use crate::lattice::{CellId, LatticeSpec};

const SAME: &[i64] = &[0];
const SPREAD: &[i64] = &[-1, 0, 1];

/// Occupancy of the `n^d` top cells, indexed by [`LatticeSpec::top_index`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VoxelField {
    spec: LatticeSpec,
    bits: Bits,
}

impl VoxelField {
    pub fn empty(spec: LatticeSpec) -> Self {
        Self {
            spec,
            bits: Bits::zeros(spec.top_count()),
        }
    }

    pub fn full(spec: LatticeSpec) -> Self {
        Self {
            spec,
            bits: Bits::ones(spec.top_count()),
        }
    }

    /// Field whose top cell `t` is set iff `f(t)`; `f` is called in index order.
    pub fn from_fn(spec: LatticeSpec, mut f: impl FnMut(u64) -> bool) -> Self {
        let mut field = Self::empty(spec);
        for t in 0..spec.top_count() {
            if f(t) {
                field.bits.set(t, true);
            }
        }
        field
    }

    pub(crate) fn from_bits(spec: LatticeSpec, bits: Bits) -> Self {
        debug_assert_eq!(bits.len(), spec.top_count());
        Self { spec, bits }
    }

    pub(crate) fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn get(&self, top_index: u64) -> bool {
        self.bits.get(top_index)
    }

    pub fn set(&mut self, top_index: u64, value: bool) {
        self.bits.set(top_index, value);
    }

    /// Number of occupied top cells.
    pub fn count(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn occupied(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter_ones()
    }

    /// Whether the cell with these doubled coordinates is a face of an
    /// occupied top cell.
    #[inline]
    pub(crate) fn covers_coords(&self, coords: &[u64]) -> bool {
        let n = self.spec.side();
        let mut fixed = 0u64;
        let mut options = [(0u64, 0u64); crate::lattice::MAX_DIM];
        let mut free = 0usize;
        let mut stride = 1u64;
        for &c in coords.iter().rev() {
            let x = c / 2;
            if c & 1 == 1 {
                fixed += x * stride;
            } else {
                // the top cells on either side of the point along this axis
                options[free] = (((x + n - 1) % n) * stride, x * stride);
                free += 1;
            }
            stride *= n;
        }
        (0u64..1 << free).any(|mask| {
            let t = options[..free]
                .iter()
                .enumerate()
                .fold(fixed, |acc, (b, &(lo, hi))| {
                    acc + if mask >> b & 1 == 1 { hi } else { lo }
                });
            self.bits.get(t)
        })
    }

    /// Whether `cell` is included in the complex the field generates: some
    /// top cell in its coface set is occupied.
    pub fn includes(&self, cell: &CellId) -> bool {
        self.covers_coords(&self.spec.coords(cell))
    }

    /// Materializes the closed complex generated by the occupied top cells.
    pub fn to_cell_set(&self) -> CellSet {
        let mut set = CellSet::empty(self.spec);
        for t in self.occupied() {
            let top = self.spec.top_cell(t);
            let coords = self.spec.coords(&top);
            self.spec
                .visit_offsets(&coords, |_| SPREAD, |i| set.bits.set(i, true));
        }
        set
    }
}

/// Free-function form of [`VoxelField::includes`].
pub fn included_from_voxels(field: &VoxelField, cell: &CellId) -> bool {
    field.includes(cell)
}

/// Arbitrary union of open cells, indexed by the dense cell index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellSet {
    spec: LatticeSpec,
    bits: Bits,
}

impl CellSet {
    pub fn empty(spec: LatticeSpec) -> Self {
        Self {
            spec,
            bits: Bits::zeros(spec.total_cells()),
        }
    }

    /// Every open cell of the torus.
    pub fn full(spec: LatticeSpec) -> Self {
        Self {
            spec,
            bits: Bits::ones(spec.total_cells()),
        }
    }

    pub fn from_cells<'a>(spec: LatticeSpec, cells: impl IntoIterator<Item = &'a CellId>) -> Self {
        let mut set = Self::empty(spec);
        for c in cells {
            set.insert(c);
        }
        set
    }

    /// Set containing dense index `i` iff `f(i)`; `f` is called in index order.
    pub fn from_fn(spec: LatticeSpec, mut f: impl FnMut(u64) -> bool) -> Self {
        let mut set = Self::empty(spec);
        for i in 0..spec.total_cells() {
            if f(i) {
                set.bits.set(i, true);
            }
        }
        set
    }

    pub(crate) fn from_bits(spec: LatticeSpec, bits: Bits) -> Self {
        debug_assert_eq!(bits.len(), spec.total_cells());
        Self { spec, bits }
    }

    pub(crate) fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn insert(&mut self, cell: &CellId) {
        let i = self.spec.index(cell);
        self.bits.set(i, true);
    }

    pub fn remove(&mut self, cell: &CellId) {
        let i = self.spec.index(cell);
        self.bits.set(i, false);
    }

    pub fn contains(&self, cell: &CellId) -> bool {
        self.bits.get(self.spec.index(cell))
    }

    pub fn contains_index(&self, index: u64) -> bool {
        self.bits.get(index)
    }

    pub fn set_index(&mut self, index: u64, value: bool) {
        self.bits.set(index, value);
    }

    pub fn len(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dense indices of the members, ascending.
    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter_ones()
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.indices().map(|i| self.spec.cell(i))
    }

    /// Union of the closed faces of every member.
    pub fn closure(&self) -> CellSet {
        let mut out = self.clone();
        for i in self.indices() {
            let coords = self.spec.coords_of_index(i);
            self.spec.visit_offsets(
                &coords,
                |c| if c & 1 == 1 { SPREAD } else { SAME },
                |f| out.bits.set(f, true),
            );
        }
        out
    }

    /// Open cells of the torus that are not members.
    pub fn complement(&self) -> CellSet {
        Self {
            spec: self.spec,
            bits: self.bits.not(),
        }
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        assert_eq!(
            self.spec, other.spec,
            "cell sets live on different lattices"
        );
        Self {
            spec: self.spec,
            bits: self.bits.or(&other.bits),
        }
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        assert_eq!(
            self.spec, other.spec,
            "cell sets live on different lattices"
        );
        Self {
            spec: self.spec,
            bits: self.bits.and(&other.bits),
        }
    }

    /// Whether every face of every member is a member.
    pub fn is_closed(&self) -> bool {
        self.indices().all(|i| {
            let coords = self.spec.coords_of_index(i);
            let mut closed = true;
            self.spec.visit_offsets(
                &coords,
                |c| if c & 1 == 1 { SPREAD } else { SAME },
                |f| closed &= self.bits.get(f),
            );
            closed
        })
    }
}

pub fn closure(cells: &CellSet) -> CellSet {
    cells.closure()
}

pub fn complement(cells: &CellSet) -> CellSet {
    cells.complement()
}

/// A complex together with the rule that decides which open cells it
/// includes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Complex {
    /// Closure of the occupied top cells.
    Voxel(VoxelField),
    /// Every cell below the top dimension, plus the occupied top cells.
    Plaquette(VoxelField),
    /// Exactly the listed open cells.
    Cells(CellSet),
}

impl Complex {
    pub fn spec(&self) -> LatticeSpec {
        match self {
            Complex::Voxel(f) | Complex::Plaquette(f) => f.spec(),
            Complex::Cells(c) => c.spec(),
        }
    }

    pub fn includes(&self, cell: &CellId) -> bool {
        match self {
            Complex::Voxel(f) => f.includes(cell),
            Complex::Plaquette(f) => match f.spec().top_index(cell) {
                Some(t) => f.get(t),
                None => true,
            },
            Complex::Cells(c) => c.contains(cell),
        }
    }

    /// Explicit inventory of the included open cells.
    pub fn to_cell_set(&self) -> CellSet {
        match self {
            Complex::Voxel(f) => f.to_cell_set(),
            Complex::Plaquette(f) => {
                let spec = f.spec();
                CellSet::from_fn(spec, |i| {
                    let cell = spec.cell(i);
                    spec.top_index(&cell).is_none_or(|t| f.get(t))
                })
            }
            Complex::Cells(c) => c.clone(),
        }
    }
}
