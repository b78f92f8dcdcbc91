use cubical_volumes::complex::io;
use cubical_volumes::complex::Complex;
use cubical_volumes::lattice::LatticeSpec;
use cubical_volumes::measure::{measure, measure_oracle};
use cubical_volumes::models::{sample, Model, ModelParams};
use cubical_volumes::moments::{mean_voxel, variance_voxel};
use num_rational::BigRational;
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Runs of occupied arcs on a cycle of `n` unit edges: the Euler
/// characteristic of their closure, or 0 for the whole circle.
fn circle_euler(mask: u32, n: u32) -> i64 {
    if mask == (1 << n) - 1 {
        return 0;
    }
    (0..n)
        .filter(|&i| mask >> i & 1 == 1 && mask >> ((i + n - 1) % n) & 1 == 0)
        .count() as i64
}

#[test]
fn circle_moments_by_counting_arcs() {
    let n = 5u32;
    let q = rat(1, 3);
    let p = rat(2, 3);
    let (mut first, mut second) = (rat(0, 1), rat(0, 1));
    for mask in 0..1u32 << n {
        let on = mask.count_ones() as usize;
        let w = num_traits::pow(p.clone(), on) * num_traits::pow(q.clone(), n as usize - on);
        let chi = rat(circle_euler(mask, n), 1);
        first += &w * &chi;
        second += w * &chi * &chi;
    }
    let volume = rat(n as i64, 1);
    assert_eq!(first, mean_voxel(1, 0).unwrap().eval(&q) * &volume);
    let var = second - &first * &first;
    assert_eq!(var, variance_voxel(1, 0).unwrap().eval(&q) * &volume);
}

#[test]
fn stored_samples_measure_the_same() {
    let dir = tempfile::tempdir().unwrap();
    for (i, model) in Model::ALL.into_iter().enumerate() {
        let spec = LatticeSpec::new(3, 4).unwrap();
        let params = ModelParams::new(model, spec, 0.3, 40 + i as u64).unwrap();
        let complex = sample(&params).unwrap();
        let path = dir.path().join(format!("{model}.bin"));
        let reread = match &complex {
            Complex::Voxel(f) => {
                io::write_field(f, &path).unwrap();
                Complex::Voxel(io::read_field(&path).unwrap())
            }
            Complex::Plaquette(f) => {
                io::write_field(f, &path).unwrap();
                Complex::Plaquette(io::read_field(&path).unwrap())
            }
            Complex::Cells(c) => {
                io::write_cells(c, &path).unwrap();
                Complex::Cells(io::read_cells(&path).unwrap())
            }
        };
        assert_eq!(measure(&complex).unwrap(), measure(&reread).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circle_euler_matches_measure(mask in 0u32..256) {
        let spec = LatticeSpec::new(1, 8).unwrap();
        let field = cubical_volumes::complex::VoxelField::from_fn(spec, |i| mask >> i & 1 == 1);
        let mu = measure(&Complex::Voxel(field.clone())).unwrap();
        prop_assert_eq!(mu.get(0), circle_euler(mask, 8));
        prop_assert_eq!(mu.get(1), mask.count_ones() as i64);
        prop_assert_eq!(measure_oracle(&field.to_cell_set()).unwrap(), mu);
    }

    #[test]
    fn closed_models_agree_with_oracle(seed in any::<u64>(), p in 0.0f64..0.4) {
        let spec = LatticeSpec::new(2, 5).unwrap();
        for model in [Model::Voxel, Model::ClosedFaces, Model::Plaquette] {
            let complex = sample(&ModelParams::new(model, spec, p, seed).unwrap()).unwrap();
            let cells = complex.to_cell_set();
            prop_assert!(cells.is_closed());
            prop_assert_eq!(measure_oracle(&cells).unwrap(), measure(&complex).unwrap());
        }
    }
}
