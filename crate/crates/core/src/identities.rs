//! Structural identities among the moment polynomials, checked exactly.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::lattice::binomial;
use crate::models::Model;
use crate::moments::{
    mean, mean_voxel, model_variable, variance, variance_codim_one_closed_form, variance_voxel,
    MomentsError, Variable,
};
use crate::poly::{int, RationalPolynomial};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub identity: &'static str,
    pub model: Model,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub d_max: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn passed_for(&self, identity: &str) -> bool {
        self.checks
            .iter()
            .filter(|c| c.identity == identity)
            .all(|c| c.passed)
    }
}

struct Recorder(Vec<IdentityCheck>);

impl Recorder {
    fn push(
        &mut self,
        identity: &'static str,
        model: Model,
        d: usize,
        k: Option<usize>,
        passed: bool,
    ) {
        self.0.push(IdentityCheck {
            identity,
            model,
            d,
            k,
            passed,
        });
    }
}

fn vanishes_at_endpoints(poly: &RationalPolynomial) -> bool {
    poly.eval(&BigRational::zero()).is_zero() && poly.eval(&BigRational::one()).is_zero()
}

/// `1 - q` in `q`, or `p` in `p`.
fn top_mean(variable: Variable) -> RationalPolynomial {
    match variable {
        Variable::Q => RationalPolynomial::from_int_terms(&[(0, 1), (1, -1)]),
        Variable::P => RationalPolynomial::x(),
    }
}

/// Runs every identity for `1 <= d <= d_max`.
///
/// * `recurrence`: `E_d(q) = E_{d-1}(q^2) - E_{d-1}(q)`.
/// * `codimension`: `E_{d,k} = C(d,k) E_{d-k,0}` for the voxel, closed-faces
///   and plaquette models.
/// * `top-variance`: `V_{d,d} = q - q^2` for the voxel model.
/// * `codim-one-variance`: `V_{d,d-1}` equals its closed form.
/// * `mean-endpoints`: means vanish at both endpoints for `k < d` (voxel and
///   closed faces); for `k = d` they equal `1 - q` or `p`, except the
///   independent-faces top mean `p^d`.
/// * `variance-endpoints`: variances vanish at both endpoints (all models).
/// * `degree`: voxel means have degree `2^(d-k)` and variances `2^(d-k+1)`
///   for `k < d`.
pub fn run_identities(d_max: usize) -> Result<IdentityReport, MomentsError> {
    let mut rec = Recorder(Vec::new());
    for d in 1..=d_max {
        let lower = mean_voxel(d - 1, 0)?;
        let expected = &lower.compose_power(2) - &lower;
        rec.push(
            "recurrence",
            Model::Voxel,
            d,
            None,
            mean_voxel(d, 0)? == expected,
        );

        rec.push(
            "top-variance",
            Model::Voxel,
            d,
            Some(d),
            variance_voxel(d, d)? == RationalPolynomial::from_int_terms(&[(1, 1), (2, -1)]),
        );
        rec.push(
            "codim-one-variance",
            Model::Voxel,
            d,
            Some(d - 1),
            variance_voxel(d, d - 1)? == variance_codim_one_closed_form(d as u64),
        );

        for model in Model::ALL {
            for k in 0..=d {
                let m = mean(model, d, k)?;
                if model == Model::IndependentFaces {
                    // the p^k factor breaks the codimension form; the top mean is p^d
                    if k == d {
                        let top = RationalPolynomial::monomial(d as u64, int(1));
                        rec.push("mean-endpoints", model, d, Some(k), m == top);
                    }
                } else {
                    let scaled =
                        mean(model, d - k, 0)?.scale(&int(binomial(d as u64, k as u64) as i64));
                    rec.push("codimension", model, d, Some(k), m == scaled);
                    if k == d {
                        rec.push(
                            "mean-endpoints",
                            model,
                            d,
                            Some(k),
                            m == top_mean(model_variable(model)),
                        );
                    } else if model != Model::Plaquette {
                        // plaquette means are nonzero at p = 0
                        rec.push(
                            "mean-endpoints",
                            model,
                            d,
                            Some(k),
                            vanishes_at_endpoints(&m),
                        );
                    }
                }

                let v = variance(model, d, k)?;
                rec.push(
                    "variance-endpoints",
                    model,
                    d,
                    Some(k),
                    vanishes_at_endpoints(&v),
                );
            }
        }

        for k in 0..d {
            let shift = (d - k) as u32;
            let degrees = mean_voxel(d, k)?.degree() == Some(1 << shift)
                && variance_voxel(d, k)?.degree() == Some(1 << (shift + 1));
            rec.push("degree", Model::Voxel, d, Some(k), degrees);
        }
    }
    Ok(IdentityReport {
        d_max,
        checks: rec.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold_to_dimension_five() {
        let report = run_identities(5).unwrap();
        let failures: Vec<_> = report.failures().collect();
        assert!(failures.is_empty(), "{failures:?}");
        for identity in [
            "recurrence",
            "codimension",
            "top-variance",
            "codim-one-variance",
            "mean-endpoints",
            "variance-endpoints",
            "degree",
        ] {
            assert!(report.checks.iter().any(|c| c.identity == identity));
            assert!(report.passed_for(identity));
        }
    }

    #[test]
    fn closed_form_matches_small_cases() {
        assert_eq!(
            variance_codim_one_closed_form(2),
            RationalPolynomial::from_int_terms(&[(1, 4), (2, -18), (3, 28), (4, -14)])
        );
        assert_eq!(
            variance_codim_one_closed_form(1),
            RationalPolynomial::from_int_terms(&[(1, 1), (2, -4), (3, 6), (4, -3)])
        );
    }

    #[test]
    fn a_wrong_identity_is_detected() {
        // the degree claim 2^(d-k) for variances is false
        let v = variance_voxel(2, 0).unwrap();
        assert_ne!(v.degree(), Some(4));
        assert_ne!(
            mean_voxel(3, 0).unwrap(),
            mean_voxel(2, 0).unwrap().compose_power(2)
        );
    }
}
