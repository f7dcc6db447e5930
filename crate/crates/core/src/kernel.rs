//! Positive definiteness of the max filtering kernel `K(x, y) = ⟨⟨[x],[y]⟩⟩`.
//!
//! For finite groups the kernel is positive definite exactly when the group is
//! generated by reflections, i.e. when `χ(G) = 1`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::sym_eigen;
use crate::quotient::max_filter;
use crate::sampling::{gaussian_vector, task_rng};
use crate::tol::TolerancePolicy;
use crate::voronoi::{voronoi_characteristic, ChiEstimate};

const TRIAL_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Psd,
    NotPsd,
}

#[derive(Debug, Clone, Serialize)]
pub struct GramAudit {
    pub points: Vec<Vec<f64>>,
    /// Row-major `k x k` Gram matrix of the kernel.
    pub gram: Vec<Vec<f64>>,
    pub min_eig: f64,
    /// Unit eigenvector for `min_eig`; `cᵀ K c = min_eig`.
    pub certificate: Vec<f64>,
    pub verdict: Verdict,
}

impl GramAudit {
    /// `cᵀ K c` evaluated directly from the stored Gram matrix.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        self.gram
            .iter()
            .zip(c)
            .map(|(row, ci)| ci * row.iter().zip(c).map(|(k, cj)| k * cj).sum::<f64>())
            .sum()
    }
}

pub fn gram_audit(group: &FiniteGroup, points: &[DVector<f64>], tol: &TolerancePolicy) -> Result<GramAudit> {
    if points.is_empty() {
        return Err(Error::InvalidInput("gram audit needs at least one point".into()));
    }
    let k = points.len();
    let mut gram = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = max_filter(group, &points[i], &points[j])?.value();
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let (values, vectors) = sym_eigen(&gram);
    let max_diag = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    let min_eig = values[0];
    let verdict = if min_eig < -tol.psd_tol * (1.0 + max_diag) {
        Verdict::NotPsd
    } else {
        Verdict::Psd
    };
    Ok(GramAudit {
        points: points.iter().map(|p| p.as_slice().to_vec()).collect(),
        gram: (0..k).map(|i| gram.row(i).iter().copied().collect()).collect(),
        min_eig,
        certificate: vectors[0].as_slice().to_vec(),
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PsdSearch {
    pub found: bool,
    pub trials_run: usize,
    /// Smallest `min_eig` seen over the trials that ran.
    pub lowest_min_eig: f64,
    pub certificate: Option<GramAudit>,
}

/// Audits `n_trials` Gaussian point sets drawn from streams `(seed, trial)` and
/// stops at the first set whose Gram matrix is not PSD.
pub fn search_psd_violation(
    group: &FiniteGroup,
    n_trials: usize,
    points_per_trial: usize,
    seed: u64,
    tol: &TolerancePolicy,
) -> Result<PsdSearch> {
    if n_trials == 0 || points_per_trial == 0 {
        return Err(Error::InvalidInput("n_trials and points_per_trial must be positive".into()));
    }
    let dim = group.dim();
    let mut lowest = f64::INFINITY;
    let mut start = 0;
    while start < n_trials {
        let end = (start + TRIAL_CHUNK).min(n_trials);
        let audits = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut rng = task_rng(seed, t as u64);
                let points: Vec<DVector<f64>> = (0..points_per_trial).map(|_| gaussian_vector(&mut rng, dim)).collect();
                gram_audit(group, &points, tol)
            })
            .collect::<Result<Vec<_>>>()?;
        for (offset, audit) in audits.into_iter().enumerate() {
            lowest = lowest.min(audit.min_eig);
            if audit.verdict == Verdict::NotPsd {
                return Ok(PsdSearch {
                    found: true,
                    trials_run: start + offset + 1,
                    lowest_min_eig: lowest,
                    certificate: Some(audit),
                });
            }
        }
        start = end;
    }
    Ok(PsdSearch {
        found: false,
        trials_run: n_trials,
        lowest_min_eig: lowest,
        certificate: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflectionVerdict {
    /// Probabilistic when true, certified by `chi.witness` when false.
    pub is_reflection: bool,
    pub chi: ChiEstimate,
}

pub fn is_reflection_group(
    group: &FiniteGroup,
    n_samples: usize,
    seed: u64,
    tol: &TolerancePolicy,
) -> Result<ReflectionVerdict> {
    let chi = voronoi_characteristic(group, n_samples, seed, tol)?;
    Ok(ReflectionVerdict {
        is_reflection: chi.chi_lower == 1,
        chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_family, Family};
    use nalgebra::dvector;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn single_point_gram() {
        let g = build_family(Family::CyclicRotation2d { m: 5 }, &tol()).unwrap();
        let audit = gram_audit(&g, &[dvector![3.0, 4.0]], &tol()).unwrap();
        assert!((audit.min_eig - 25.0).abs() < 1e-9);
        assert_eq!(audit.verdict, Verdict::Psd);
    }

    #[test]
    fn trivial_group_is_psd() {
        let g = build_family(Family::Trivial { d: 3 }, &tol()).unwrap();
        let search = search_psd_violation(&g, 20, 6, 1, &tol()).unwrap();
        assert!(!search.found);
    }

    #[test]
    fn rotations_violate_psd() {
        let g = build_family(Family::CyclicRotation2d { m: 5 }, &tol()).unwrap();
        let search = search_psd_violation(&g, 200, 6, 1, &tol()).unwrap();
        let audit = search.certificate.unwrap();
        assert!(audit.quadratic_form(&audit.certificate) < -1e-6);
    }

    #[test]
    fn reflection_detection() {
        let s4 = build_family(Family::Permutations { d: 4 }, &tol()).unwrap();
        assert!(is_reflection_group(&s4, 200, 2, &tol()).unwrap().is_reflection);
        let c3 = build_family(Family::CyclicRotation2d { m: 3 }, &tol()).unwrap();
        let v = is_reflection_group(&c3, 200, 2, &tol()).unwrap();
        assert!(!v.is_reflection);
        assert!(v.chi.witness.is_some());
    }
}
