//! Seeded generators for the four random complex models.
//!
//! Randomness comes from ChaCha8 seeded with [`SeedableRng::seed_from_u64`].
//! A generator draws exactly one `u64` per random site, in ascending dense
//! index order: top-cell index for the voxel and plaquette models, all-cell
//! index for the closed-faces and independent-faces models. A site is
//! selected when the top 53 bits of its draw, read as a uniform value in
//! `[0, 1)`, fall below the site's probability.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellSet, Complex, VoxelField};
use crate::lattice::LatticeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Top cells i.i.d. with probability `p`; the complex is their closure.
    Voxel,
    /// Every open cell i.i.d. with probability `p`, then closure.
    ClosedFaces,
    /// Each open `i`-cell i.i.d. with probability `p^i`, no closure.
    IndependentFaces,
    /// Full `(d-1)`-skeleton plus top cells i.i.d. with probability `p`.
    Plaquette,
}

impl Model {
    pub const ALL: [Model; 4] = [
        Model::Voxel,
        Model::ClosedFaces,
        Model::IndependentFaces,
        Model::Plaquette,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Voxel => "voxel",
            Model::ClosedFaces => "closed-faces",
            Model::IndependentFaces => "independent-faces",
            Model::Plaquette => "plaquette",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s || m.name().replace('-', "_") == s)
            .ok_or_else(|| ModelError::UnknownModel(s.to_owned()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("generator for {expected} called with {actual} parameters")]
    WrongModel { expected: Model, actual: Model },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: Model,
    pub spec: LatticeSpec,
    pub p: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(model: Model, spec: LatticeSpec, p: f64, seed: u64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::BadProbability(p));
        }
        Ok(Self {
            model,
            spec,
            p,
            seed,
        })
    }

    /// `1 - p`.
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn expect(&self, model: Model) -> Result<(), ModelError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(ModelError::BadProbability(self.p));
        }
        if self.model != model {
            return Err(ModelError::WrongModel {
                expected: model,
                actual: self.model,
            });
        }
        Ok(())
    }
}

/// Uniform draw in `[0, 1)` with 53 bits of resolution.
#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn bernoulli_field(spec: LatticeSpec, p: f64, seed: u64) -> VoxelField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VoxelField::from_fn(spec, |_| uniform(&mut rng) < p)
}

pub fn sample_voxel(params: &ModelParams) -> Result<VoxelField, ModelError> {
    params.expect(Model::Voxel)?;
    Ok(bernoulli_field(params.spec, params.p, params.seed))
}

/// Selected open cells before closure.
fn closed_faces_selection(params: &ModelParams) -> CellSet {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    CellSet::from_fn(params.spec, |_| uniform(&mut rng) < params.p)
}

pub fn sample_closed_faces(params: &ModelParams) -> Result<CellSet, ModelError> {
    params.expect(Model::ClosedFaces)?;
    Ok(closed_faces_selection(params).closure())
}

pub fn sample_independent_faces(params: &ModelParams) -> Result<CellSet, ModelError> {
    params.expect(Model::IndependentFaces)?;
    let spec = params.spec;
    let probs: Vec<f64> = (0..=spec.dim()).map(|i| params.p.powi(i as i32)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    Ok(CellSet::from_fn(spec, |index| {
        let dim = spec
            .coords_of_index(index)
            .iter()
            .filter(|&&c| c & 1 == 1)
            .count();
        // vertices draw too, keeping one draw per cell; p^0 = 1 always passes
        uniform(&mut rng) < probs[dim]
    }))
}

/// Top-cell occupancy of a plaquette sample. Cells below the top dimension
/// are implicitly present; wrap in [`Complex::Plaquette`] to measure.
pub fn sample_plaquette(params: &ModelParams) -> Result<VoxelField, ModelError> {
    params.expect(Model::Plaquette)?;
    Ok(bernoulli_field(params.spec, params.p, params.seed))
}

/// Draws one complex of the model named in `params`.
pub fn sample(params: &ModelParams) -> Result<Complex, ModelError> {
    Ok(match params.model {
        Model::Voxel => Complex::Voxel(sample_voxel(params)?),
        Model::ClosedFaces => Complex::Cells(sample_closed_faces(params)?),
        Model::IndependentFaces => Complex::Cells(sample_independent_faces(params)?),
        Model::Plaquette => Complex::Plaquette(sample_plaquette(params)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::CellId;

    fn params(model: Model, d: usize, n: u64, p: f64, seed: u64) -> ModelParams {
        ModelParams::new(model, LatticeSpec::new(d, n).unwrap(), p, seed).unwrap()
    }

    /// `|observed - expected| <= 4` standard errors of a binomial proportion.
    fn within_four_se(hits: u64, trials: u64, prob: f64) {
        let se = (prob * (1.0 - prob) / trials as f64).sqrt();
        let rate = hits as f64 / trials as f64;
        assert!(
            (rate - prob).abs() <= 4.0 * se,
            "rate {rate} vs {prob} (se {se})"
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        let spec = LatticeSpec::new(2, 4).unwrap();
        assert!(matches!(
            ModelParams::new(Model::Voxel, spec, 1.5, 0),
            Err(ModelError::BadProbability(_))
        ));
        let p = params(Model::Plaquette, 2, 4, 0.5, 0);
        assert!(matches!(
            sample_voxel(&p),
            Err(ModelError::WrongModel { .. })
        ));
        assert_eq!("closed-faces".parse::<Model>(), Ok(Model::ClosedFaces));
        assert!("cubes".parse::<Model>().is_err());
    }

    #[test]
    fn degenerate_probabilities() {
        let spec = LatticeSpec::new(2, 5).unwrap();
        assert_eq!(
            sample_voxel(&params(Model::Voxel, 2, 5, 0.0, 3)).unwrap(),
            VoxelField::empty(spec)
        );
        assert_eq!(
            sample_voxel(&params(Model::Voxel, 2, 5, 1.0, 3)).unwrap(),
            VoxelField::full(spec)
        );
        assert!(
            sample_closed_faces(&params(Model::ClosedFaces, 2, 5, 0.0, 1))
                .unwrap()
                .is_empty()
        );
        assert_eq!(
            sample_closed_faces(&params(Model::ClosedFaces, 2, 5, 1.0, 1)).unwrap(),
            CellSet::full(spec)
        );
        let vertices =
            sample_independent_faces(&params(Model::IndependentFaces, 2, 5, 0.0, 1)).unwrap();
        assert_eq!(vertices.len(), spec.top_count());
        assert!(vertices.cells().all(|c| c.dim() == 0));
        assert_eq!(
            sample_independent_faces(&params(Model::IndependentFaces, 2, 5, 1.0, 1)).unwrap(),
            CellSet::full(spec)
        );
        let skeleton =
            Complex::Plaquette(sample_plaquette(&params(Model::Plaquette, 2, 5, 0.0, 1)).unwrap());
        assert_eq!(
            skeleton.to_cell_set().len(),
            spec.total_cells() - spec.top_count()
        );
        let torus =
            Complex::Plaquette(sample_plaquette(&params(Model::Plaquette, 2, 5, 1.0, 1)).unwrap());
        assert_eq!(torus.to_cell_set(), CellSet::full(spec));
    }

    #[test]
    fn voxel_occupancy_rate() {
        let mut hits = 0;
        let samples = 10_000;
        for seed in 0..samples {
            hits += sample_voxel(&params(Model::Voxel, 2, 64, 0.5, seed))
                .unwrap()
                .count();
        }
        within_four_se(hits, samples * 64 * 64, 0.5);
    }

    #[test]
    fn closed_faces_vertex_rate() {
        let spec = LatticeSpec::new(1, 3).unwrap();
        let vertex = CellId::new(vec![1], 0);
        let samples = 100_000;
        let hits = (0..samples)
            .filter(|&seed| {
                sample_closed_faces(&params(Model::ClosedFaces, 1, 3, 0.5, seed))
                    .unwrap()
                    .contains(&vertex)
            })
            .count() as u64;
        assert_eq!(spec.dim(), 1);
        within_four_se(hits, samples, 1.0 - 0.5f64.powi(3));
    }

    #[test]
    fn independent_faces_rates() {
        let spec = LatticeSpec::new(2, 16).unwrap();
        let samples = 10_000;
        let (mut edges, mut squares) = (0, 0);
        for seed in 0..samples {
            let set = sample_independent_faces(&params(Model::IndependentFaces, 2, 16, 0.5, seed))
                .unwrap();
            for c in set.cells() {
                match c.dim() {
                    1 => edges += 1,
                    2 => squares += 1,
                    _ => {}
                }
            }
        }
        within_four_se(edges, samples * spec.cell_count(1).unwrap(), 0.5);
        within_four_se(squares, samples * spec.cell_count(2).unwrap(), 0.25);
    }

    #[test]
    fn plaquette_counting_identity() {
        let spec = LatticeSpec::new(2, 8).unwrap();
        for seed in 0..10 {
            let field = sample_plaquette(&params(Model::Plaquette, 2, 8, 0.25, seed)).unwrap();
            let included = Complex::Plaquette(field.clone()).to_cell_set().len();
            assert_eq!(
                included,
                spec.total_cells() - spec.top_count() + field.count()
            );
        }
    }

    #[test]
    fn closed_faces_output_is_closed() {
        for seed in 0..10 {
            let set = sample_closed_faces(&params(Model::ClosedFaces, 3, 3, 0.1, seed)).unwrap();
            assert!(set.is_closed());
        }
    }

    #[test]
    fn determinism_and_seed_sensitivity() {
        for model in Model::ALL {
            for seed in 0..100u64 {
                let a = sample(&params(model, 2, 8, 0.5, seed)).unwrap();
                let b = sample(&params(model, 2, 8, 0.5, seed)).unwrap();
                let c = sample(&params(model, 2, 8, 0.5, seed + 1000)).unwrap();
                assert_eq!(a, b);
                assert_ne!(a, c);
            }
        }
    }
}
