//! Intrinsic volumes of cubical complexes.
//!
//! The primary route sums the open-cell values `(-1)^(i-k) C(i, k)` over the
//! included cells. [`measure_oracle`] reaches the same numbers through
//! closed cells only, as a cross-check.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::complex::{CellSet, Complex, VoxelField};
use crate::lattice::{binomial, LatticeSpec};

/// Cells per work unit of the parallel scan.
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("intrinsic volume mu_{k} overflows a 64-bit integer")]
    Overflow { k: usize },
    #[error("oracle input is not topologically closed")]
    NotClosed,
}

/// `(mu_0, ..., mu_d)` of one complex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct IntrinsicVolumes(Vec<i64>);

impl IntrinsicVolumes {
    pub fn new(values: Vec<i64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, k: usize) -> i64 {
        self.0[k]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.0[0]
    }

    pub fn into_vec(self) -> Vec<i64> {
        self.0
    }
}

/// `mu_k` of an open unit `i`-cube: `(-1)^(i-k) C(i, k)`, zero for `k > i`.
pub fn open_cell_contribution(i: usize, k: usize) -> i64 {
    if k > i {
        return 0;
    }
    let magnitude = binomial(i as u64, k as u64) as i64;
    if (i - k).is_multiple_of(2) {
        magnitude
    } else {
        -magnitude
    }
}

/// Folds per-dimension cell counts into intrinsic volumes with checked
/// arithmetic.
pub fn volumes_from_counts(counts: &[u64]) -> Result<IntrinsicVolumes, MeasureError> {
    let d = counts.len() - 1;
    (0..=d)
        .map(|k| {
            counts
                .iter()
                .enumerate()
                .try_fold(0i64, |acc, (i, &count)| {
                    let count = i64::try_from(count).map_err(|_| MeasureError::Overflow { k })?;
                    open_cell_contribution(i, k)
                        .checked_mul(count)
                        .and_then(|term| acc.checked_add(term))
                        .ok_or(MeasureError::Overflow { k })
                })
        })
        .collect::<Result<_, _>>()
        .map(IntrinsicVolumes)
}

fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Counts included cells per dimension over the dense index range, split
/// into chunks whose partial counts are summed at the end.
fn count_by_dimension(spec: LatticeSpec, included: impl Fn(&[u64]) -> bool + Sync) -> Vec<u64> {
    let d = spec.dim();
    let total = spec.total_cells();
    let chunks = total.div_ceil(CHUNK);
    let scan = |chunk: u64| {
        let mut counts = vec![0u64; d + 1];
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut coords = spec.coords_of_index(start);
        let m = spec.doubled_side();
        for _ in start..end {
            if included(&coords) {
                counts[coords.iter().filter(|&&c| c & 1 == 1).count()] += 1;
            }
            // odometer step, last axis fastest
            for c in coords.iter_mut().rev() {
                *c += 1;
                if *c < m {
                    break;
                }
                *c = 0;
            }
        }
        counts
    };
    if chunks == 1 {
        scan(0)
    } else {
        (0..chunks)
            .into_par_iter()
            .map(scan)
            .reduce(|| vec![0u64; d + 1], add_counts)
    }
}

/// Included cells per dimension, `counts[i]` for open `i`-cells.
pub fn dimension_counts(complex: &Complex) -> Vec<u64> {
    match complex {
        Complex::Voxel(field) => voxel_counts(field),
        Complex::Plaquette(field) => {
            let spec = field.spec();
            let mut counts: Vec<u64> = (0..=spec.dim())
                .map(|i| spec.cell_count(i).unwrap())
                .collect();
            counts[spec.dim()] = field.count();
            counts
        }
        Complex::Cells(cells) => cell_counts(cells),
    }
}

fn voxel_counts(field: &VoxelField) -> Vec<u64> {
    count_by_dimension(field.spec(), |coords| field.covers_coords(coords))
}

fn cell_counts(cells: &CellSet) -> Vec<u64> {
    let spec = cells.spec();
    let mut counts = vec![0u64; spec.dim() + 1];
    for i in cells.indices() {
        let dim = spec
            .coords_of_index(i)
            .iter()
            .filter(|&&c| c & 1 == 1)
            .count();
        counts[dim] += 1;
    }
    counts
}

/// Intrinsic volumes `mu_0..mu_d` of a complex.
pub fn measure(complex: &Complex) -> Result<IntrinsicVolumes, MeasureError> {
    volumes_from_counts(&dimension_counts(complex))
}

pub fn measure_cells(cells: &CellSet) -> Result<IntrinsicVolumes, MeasureError> {
    volumes_from_counts(&cell_counts(cells))
}

pub fn euler_characteristic(complex: &Complex) -> Result<i64, MeasureError> {
    measure(complex).map(|v| v.euler_characteristic())
}

/// Intrinsic volumes of a closed complex computed from closed cubes only.
///
/// Writing the indicator of the complex as a signed sum of closed-cube
/// indicators gives each member cell `r` the Möbius weight
/// `w(r) = sum over members s having r as a face of (-1)^(dim s - dim r)`;
/// then `mu_k = sum_r w(r) C(dim r, k)`, using only the closed-cube values.
pub fn measure_oracle(cells: &CellSet) -> Result<IntrinsicVolumes, MeasureError> {
    if !cells.is_closed() {
        return Err(MeasureError::NotClosed);
    }
    let spec = cells.spec();
    let d = spec.dim();
    let mut values = vec![0i64; d + 1];
    for index in cells.indices() {
        let face = spec.cell(index);
        let r = face.dim();
        let weight: i64 = spec
            .star_cells(&face)
            .iter()
            .filter(|s| cells.contains(s))
            .map(|s| {
                if (s.dim() - r).is_multiple_of(2) {
                    1
                } else {
                    -1
                }
            })
            .sum();
        if weight == 0 {
            continue;
        }
        for (k, v) in values.iter_mut().enumerate().take(r + 1) {
            let term = weight
                .checked_mul(binomial(r as u64, k as u64) as i64)
                .ok_or(MeasureError::Overflow { k })?;
            *v = v.checked_add(term).ok_or(MeasureError::Overflow { k })?;
        }
    }
    Ok(IntrinsicVolumes(values))
}
