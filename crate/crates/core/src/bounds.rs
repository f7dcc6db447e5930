//! Upper and lower Lipschitz bounds for max filter banks.
//!
//! * [`upper_bound_exact`]: max of `‖{g_i z_i}‖₂` over tuples whose open cells meet.
//! * [`upper_bound_relaxed`]: the same max over every tuple.
//! * [`lower_bound_sharp`]: the choice-function bound, estimated on sampled pairs.
//! * [`alpha_tilde`]: the pigeonhole bound over template subsets of size `⌈n/χ⌉`.
//!
//! Tuple searches use that the feasibility of `(g g_1, …, g g_n)` and the norm
//! of `{g g_i z_i}` do not depend on `g`, so the first template is pinned to
//! its base point.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{FiniteGroup, Orbit};
use crate::linalg::{add_outer, bottom_eigenvector, frame_operator, lambda_min_buf, lambda_min_frame, spectral_norm};
use crate::quotient::{apply_bank, quotient_distance, MaxFilterBank};
use crate::sampling::{gaussian_vector, task_rng};
use crate::tol::TolerancePolicy;
use crate::voronoi::{
    choice_assignments, is_nice, is_principal, strict_cones_feasible, unique_argmax, voronoi_characteristic,
    VoronoiCellSpec, PRINCIPAL_RETRIES,
};

/// Pairs closer than this in the quotient metric are redrawn.
pub const MIN_PAIR_DISTANCE: f64 = 1e-6;
const HEURISTIC_DIRECTIONS: u64 = 64;
const HEURISTIC_ROUNDS: usize = 6;

#[derive(Debug, Clone, Serialize)]
pub struct UpperBound {
    pub beta: f64,
    /// Group index applied to each template in one maximizing tuple.
    pub tuple: Vec<usize>,
    /// Feasibility checks (exact) or tuples (relaxed) evaluated.
    pub evaluations: u64,
}

fn check_budget(used: u64, budget: u64, best: f64) -> Result<()> {
    if used > budget {
        return Err(Error::BudgetExceeded { budget, best });
    }
    Ok(())
}

struct ExactSearch<'a> {
    orbits: &'a [Orbit],
    cells: Vec<Vec<VoronoiCellSpec>>,
    tol: &'a TolerancePolicy,
    budget: u64,
    used: u64,
    best: f64,
    best_tuple: Vec<usize>,
    dim: usize,
}

impl ExactSearch<'_> {
    fn visit(&mut self, chosen: &mut Vec<usize>, witness: &DVector<f64>) -> Result<()> {
        let i = chosen.len();
        if i == self.orbits.len() {
            let cols = chosen
                .iter()
                .zip(self.orbits)
                .map(|(&k, o)| &o.points()[k]);
            let norm = spectral_norm(self.dim, cols);
            if norm > self.best {
                self.best = norm;
                self.best_tuple = chosen.clone();
            }
            return Ok(());
        }
        for k in 0..self.orbits[i].len() {
            self.used += 1;
            check_budget(self.used, self.budget, self.best)?;
            let next_witness = if self.cells[i][k].contains(witness, self.tol) {
                Some(witness.clone())
            } else {
                let active: Vec<VoronoiCellSpec> = chosen
                    .iter()
                    .enumerate()
                    .map(|(j, &kj)| self.cells[j][kj].clone())
                    .chain(std::iter::once(self.cells[i][k].clone()))
                    .collect();
                let result = strict_cones_feasible(&active, self.tol)?;
                result.witness.filter(|_| result.feasible)
            };
            if let Some(w) = next_witness {
                chosen.push(k);
                self.visit(chosen, &w)?;
                chosen.pop();
            }
        }
        Ok(())
    }
}

/// `β = max ‖{g_i z_i}‖₂` over tuples with `∩_i V_{g_i z_i} ≠ ∅`.
///
/// Depth-first search that extends a partial tuple only while its cells still
/// meet. `budget` caps the number of feasibility checks.
pub fn upper_bound_exact(bank: &MaxFilterBank, tol: &TolerancePolicy, budget: u64) -> Result<UpperBound> {
    let orbits = bank.template_orbits();
    let dim = bank.dim();
    if orbits.is_empty() {
        return Ok(UpperBound {
            beta: 0.0,
            tuple: vec![],
            evaluations: 0,
        });
    }
    let cells: Vec<Vec<VoronoiCellSpec>> = orbits
        .iter()
        .map(|o| (0..o.len()).map(|k| VoronoiCellSpec::of_orbit_point(o, k)).collect())
        .collect();
    let mut search = ExactSearch {
        orbits,
        cells,
        tol,
        budget,
        used: 1,
        best: 0.0,
        best_tuple: vec![],
        dim,
    };
    let first = strict_cones_feasible(&search.cells[0][..1], tol)?;
    let Some(start) = first.witness.filter(|_| first.feasible) else {
        return Err(Error::LpNumericalFailure { iterations: 0 });
    };
    let mut chosen = vec![0];
    search.visit(&mut chosen, &start)?;
    Ok(UpperBound {
        beta: search.best,
        tuple: search
            .best_tuple
            .iter()
            .zip(orbits)
            .map(|(&k, o)| o.representative(k))
            .collect(),
        evaluations: search.used,
    })
}

/// Max of `‖{g_i z_i}‖₂` over all of `Gⁿ`; `budget` caps the tuples visited.
pub fn upper_bound_relaxed(bank: &MaxFilterBank, budget: u64) -> Result<UpperBound> {
    let orbits = bank.template_orbits();
    let dim = bank.dim();
    if orbits.is_empty() {
        return Ok(UpperBound {
            beta: 0.0,
            tuple: vec![],
            evaluations: 0,
        });
    }
    let n = orbits.len();
    let mut digits = vec![0usize; n];
    let mut best = 0.0;
    let mut best_tuple = digits.clone();
    let mut used = 0u64;
    loop {
        used += 1;
        check_budget(used, budget, best)?;
        let cols = digits.iter().zip(orbits).map(|(&k, o)| &o.points()[k]);
        let norm = spectral_norm(dim, cols);
        if norm > best {
            best = norm;
            best_tuple.clone_from(&digits);
        }
        // the first template stays at its base point
        let mut pos = n;
        loop {
            if pos == 1 {
                return Ok(UpperBound {
                    beta: best,
                    tuple: best_tuple.iter().zip(orbits).map(|(&k, o)| o.representative(k)).collect(),
                    evaluations: used,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < orbits[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Seeded source of pairs `(x, y)` in the nice set of a bank: both principal,
/// both off every template's Voronoi walls, and `d([x],[y]) > 1e-6`.
///
/// [`lower_bound_sharp`] and [`empirical_lipschitz`] draw from the same
/// sampler, so the sharp bound is evaluated on exactly the pairs whose ratios
/// it bounds.
#[derive(Debug, Clone, Copy)]
pub struct PairSampler {
    pub seed: u64,
}

impl PairSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn pair(&self, bank: &MaxFilterBank, index: usize, tol: &TolerancePolicy) -> Result<(DVector<f64>, DVector<f64>)> {
        let mut rng = task_rng(self.seed, index as u64);
        let dim = bank.dim();
        for _ in 0..PRINCIPAL_RETRIES {
            let x = gaussian_vector(&mut rng, dim);
            let y = gaussian_vector(&mut rng, dim);
            if is_nice(bank, &x, tol)?
                && is_nice(bank, &y, tol)?
                && quotient_distance(bank.group(), &x, &y, tol)? > MIN_PAIR_DISTANCE
            {
                return Ok((x, y));
            }
        }
        Err(Error::NotNicePoint {
            reason: format!("pair {index}: no nice pair after {PRINCIPAL_RETRIES} draws"),
        })
    }
}

/// `‖Φx − Φy‖ / d([x],[y])`.
pub fn lipschitz_ratio(bank: &MaxFilterBank, x: &DVector<f64>, y: &DVector<f64>, tol: &TolerancePolicy) -> Result<f64> {
    let diff = apply_bank(bank, x)? - apply_bank(bank, y)?;
    Ok(diff.norm() / quotient_distance(bank.group(), x, y, tol)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalLipschitz {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_witness: (Vec<f64>, Vec<f64>),
    pub beta_witness: (Vec<f64>, Vec<f64>),
    pub ratios: Vec<f64>,
}

/// Min and max of the Lipschitz ratio over `n_pairs` sampled pairs.
pub fn empirical_lipschitz(
    bank: &MaxFilterBank,
    sampler: PairSampler,
    n_pairs: usize,
    tol: &TolerancePolicy,
) -> Result<EmpiricalLipschitz> {
    if n_pairs == 0 {
        return Err(Error::InvalidInput("n_pairs must be at least 1".into()));
    }
    let samples = (0..n_pairs)
        .into_par_iter()
        .map(|k| {
            let (x, y) = sampler.pair(bank, k, tol)?;
            let r = lipschitz_ratio(bank, &x, &y, tol)?;
            Ok((r, x, y))
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = argbest(&samples, |a, b| a < b);
    let hi = argbest(&samples, |a, b| a > b);
    let as_pair = |k: usize| (samples[k].1.as_slice().to_vec(), samples[k].2.as_slice().to_vec());
    Ok(EmpiricalLipschitz {
        alpha: samples[lo].0,
        beta: samples[hi].0,
        alpha_witness: as_pair(lo),
        beta_witness: as_pair(hi),
        ratios: samples.iter().map(|s| s.0).collect(),
    })
}

/// First index whose value beats every earlier one under `better`.
fn argbest<T>(samples: &[(f64, T, T)], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (k, s) in samples.iter().enumerate() {
        if better(s.0, samples[best].0) {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpLowerBound {
    pub alpha: f64,
    pub witness: (Vec<f64>, Vec<f64>),
    /// Some pair had more choice functions than the cap allowed.
    pub truncated: bool,
    pub per_pair: Vec<f64>,
}

/// `max_f (Σ_w λ_min(Σ_{i ∈ f⁻¹(w)} v_i v_iᵀ))^{1/2}` at one pair.
pub fn sharp_value_at(
    bank: &MaxFilterBank,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: &TolerancePolicy,
    cap: usize,
) -> Result<(f64, bool)> {
    let dim = bank.dim();
    let e = choice_assignments(bank, x, y, tol, cap)?;
    let mut best = 0.0f64;
    let mut buckets: Vec<Vec<f64>> = vec![vec![0.0; dim * dim]; e.s_set.len()];
    for assignment in &e.assignments {
        for b in &mut buckets {
            b.fill(0.0);
        }
        for (i, &w) in assignment.images.iter().enumerate() {
            add_outer(&mut buckets[w], e.aligned[i].as_slice());
        }
        let total: f64 = buckets
            .iter()
            .map(|b| lambda_min_buf(b, dim).max(0.0))
            .sum();
        best = best.max(total);
    }
    Ok((best.sqrt(), e.truncated))
}

/// Minimum of [`sharp_value_at`] over `n_pairs` sampled nice pairs.
///
/// This is a sampled estimate of an infimum, so it may overshoot the true
/// bound; only [`alpha_tilde`] is certified.
pub fn lower_bound_sharp(
    bank: &MaxFilterBank,
    sampler: PairSampler,
    n_pairs: usize,
    tol: &TolerancePolicy,
    cap: usize,
) -> Result<SharpLowerBound> {
    if n_pairs == 0 {
        return Err(Error::InvalidInput("n_pairs must be at least 1".into()));
    }
    let samples = (0..n_pairs)
        .into_par_iter()
        .map(|k| {
            let (x, y) = sampler.pair(bank, k, tol)?;
            let (value, truncated) = sharp_value_at(bank, &x, &y, tol, cap)?;
            Ok(((value, x, y), truncated))
        })
        .collect::<Result<Vec<_>>>()?;
    let truncated = samples.iter().any(|s| s.1);
    let samples: Vec<_> = samples.into_iter().map(|s| s.0).collect();
    let lo = argbest(&samples, |a, b| a < b);
    Ok(SharpLowerBound {
        alpha: samples[lo].0,
        witness: (samples[lo].1.as_slice().to_vec(), samples[lo].2.as_slice().to_vec()),
        truncated,
        per_pair: samples.iter().map(|s| s.0).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaTilde {
    pub alpha: f64,
    /// Subset size `⌈n/χ⌉`.
    pub subset_size: usize,
    /// Minimizing subset of template indices (empty when the bound is trivially 0).
    pub subset: Vec<usize>,
    pub evaluations: u64,
}

/// Orbit points of each template with `p` and `−p` merged, since both give
/// the same summand `p pᵀ`. The base point always comes first.
fn sign_reduced_orbits(bank: &MaxFilterBank, tol: &TolerancePolicy) -> Vec<Vec<DVector<f64>>> {
    bank.template_orbits()
        .iter()
        .map(|o| {
            let mut kept: Vec<DVector<f64>> = Vec::new();
            for p in o.points() {
                let thresh = tol.eq_tol * (1.0 + p.norm());
                if !kept.iter().any(|q| (q + p).amax() <= thresh) {
                    kept.push(p.clone());
                }
            }
            kept
        })
        .collect()
}

struct TildeSearch<'a> {
    reps: &'a [Vec<DVector<f64>>],
    k: usize,
    dim: usize,
    budget: u64,
    used: u64,
    best: f64,
    best_subset: Vec<usize>,
}

impl TildeSearch<'_> {
    fn visit(&mut self, i: usize, subset: &mut Vec<usize>, acc: &[f64]) -> Result<()> {
        self.used += 1;
        check_budget(self.used, self.budget, self.best.max(0.0).sqrt())?;
        let count = subset.len();
        if count >= self.dim {
            let lower = lambda_min_buf(acc, self.dim);
            if count == self.k {
                if lower < self.best {
                    self.best = lower;
                    self.best_subset.clone_from(subset);
                }
                return Ok(());
            }
            // adding PSD terms never lowers λ_min
            if lower >= self.best {
                return Ok(());
            }
        }
        if count == self.k || self.reps.len() - i < self.k - count {
            return Ok(());
        }
        // any subset may be rotated so that its first member sits at its base point
        let choices = if count == 0 { &self.reps[i][..1] } else { &self.reps[i][..] };
        for p in choices {
            let mut next = acc.to_vec();
            add_outer(&mut next, p.as_slice());
            subset.push(i);
            self.visit(i + 1, subset, &next)?;
            subset.pop();
        }
        self.visit(i + 1, subset, acc)
    }
}

/// Starting upper bound: for a direction `u`, pick per template the orbit
/// point least aligned with `u`, keep the `k` least aligned templates, and
/// refine `u` to the bottom eigenvector of the resulting frame a few times.
fn heuristic_tilde(reps: &[Vec<DVector<f64>>], k: usize, dim: usize) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, vec![]);
    for dir in 0..HEURISTIC_DIRECTIONS {
        let mut rng = task_rng(0x5eed, dir);
        let mut u = gaussian_vector(&mut rng, dim);
        for _ in 0..HEURISTIC_ROUNDS {
            let mut scored: Vec<(f64, usize, usize)> = reps
                .iter()
                .enumerate()
                .map(|(i, pts)| {
                    let (j, s) = pts
                        .iter()
                        .map(|p| p.dot(&u).powi(2))
                        .enumerate()
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .expect("orbits are nonempty");
                    (s, i, j)
                })
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            scored.truncate(k);
            let frame = frame_operator(dim, scored.iter().map(|&(_, i, j)| &reps[i][j]));
            let (value, bottom) = bottom_eigenvector(&frame);
            if value < best.0 {
                let mut subset: Vec<usize> = scored.iter().map(|s| s.1).collect();
                subset.sort_unstable();
                best = (value.max(0.0), subset);
            }
            u = bottom;
        }
    }
    best
}

/// `α̃ = min_{|I| = ⌈n/χ⌉} min_{g_i} λ_min(Σ_{i∈I} (g_i z_i)(g_i z_i)ᵀ)^{1/2}`.
///
/// Larger subsets cannot give a smaller value, so only size `⌈n/χ⌉` is
/// searched. Branch and bound over templates in index order; `budget` caps
/// the search nodes.
pub fn alpha_tilde(bank: &MaxFilterBank, chi: usize, tol: &TolerancePolicy, budget: u64) -> Result<AlphaTilde> {
    if chi == 0 {
        return Err(Error::InvalidInput("chi must be at least 1".into()));
    }
    let n = bank.len();
    let dim = bank.dim();
    let k = n.div_ceil(chi);
    if k + 1 <= dim {
        return Ok(AlphaTilde {
            alpha: 0.0,
            subset_size: k,
            subset: vec![],
            evaluations: 0,
        });
    }
    let reps = sign_reduced_orbits(bank, tol);
    let (start, start_subset) = heuristic_tilde(&reps, k, dim);
    let mut search = TildeSearch {
        reps: &reps,
        k,
        dim,
        budget,
        used: 0,
        best: start,
        best_subset: start_subset,
    };
    search.visit(0, &mut vec![], &vec![0.0; dim * dim])?;
    Ok(AlphaTilde {
        alpha: search.best.max(0.0).sqrt(),
        subset_size: k,
        subset: search.best_subset,
        evaluations: search.used,
    })
}

/// `σ(ℓ, λ, t)`, the high-probability lower bound on the smallest singular
/// value used for Gaussian templates.
pub fn theoretical_sigma(ell: u64, lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::Domain(format!("lambda must exceed 1, got {lambda}")));
    }
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("t must be at least 1, got {t}")));
    }
    if ell == 0 {
        return Err(Error::Domain("ell must be at least 1".into()));
    }
    let e = std::f64::consts::E;
    let inv = 1.0 / (lambda - 1.0);
    let base = 1.0 / (2.0 * (2.0 + 2f64.sqrt()) * e.sqrt() * lambda);
    Ok(e.sqrt().recip()
        * (1.0 - 1.0 / lambda)
        * base.powf(inv)
        * t.sqrt().recip().powf(inv)
        * (-t * lambda * inv).exp()
        * (ell as f64).sqrt())
}

/// Inputs to [`theoretical_distortion_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionBoundParams {
    pub m: usize,
    pub chi: usize,
    pub d: usize,
    pub n: usize,
    pub lambda: f64,
    pub lambda0: f64,
    pub big_c: f64,
    pub small_c: f64,
}

impl DistortionBoundParams {
    pub fn new(m: usize, chi: usize, d: usize, n: usize, lambda0: f64) -> Result<Self> {
        if m == 0 || chi == 0 || d == 0 || n == 0 {
            return Err(Error::Domain("m, chi, d and n must be positive".into()));
        }
        if !(lambda0 > 1.0) || !lambda0.is_finite() {
            return Err(Error::Domain(format!("lambda0 must be a finite value above 1, got {lambda0}")));
        }
        let lambda = n as f64 / (chi * d) as f64;
        if lambda < lambda0 {
            return Err(Error::Domain(format!(
                "lambda = n/(chi d) = {lambda} is below lambda0 = {lambda0}"
            )));
        }
        Ok(Self {
            m,
            chi,
            d,
            n,
            lambda,
            lambda0,
            big_c: 4.0 * 1.5f64.exp(),
            small_c: 2.0 + (lambda0.sqrt() + 2.0) / (lambda0 - 1.0),
        })
    }

    /// Probability the distortion bound holds for Gaussian templates: `1 − 3e^{−d√λ}`.
    pub fn success_probability(&self) -> f64 {
        1.0 - 3.0 * (-(self.d as f64) * self.lambda.sqrt()).exp()
    }
}

/// `(C χ^{3/2} m √log(e m))^{1 + c/√λ}`.
pub fn theoretical_distortion_bound(params: &DistortionBoundParams) -> Result<f64> {
    if params.lambda < params.lambda0 || !(params.lambda0 > 1.0) {
        return Err(Error::Domain(format!(
            "need lambda >= lambda0 > 1, got lambda = {}, lambda0 = {}",
            params.lambda, params.lambda0
        )));
    }
    let m = params.m as f64;
    let base = params.big_c * (params.chi as f64).powf(1.5) * m * (std::f64::consts::E * m).ln().sqrt();
    Ok(base.powf(1.0 + params.small_c / params.lambda.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessCase {
    /// `G = {±id}`.
    PmId,
    /// `G` generated by reflections.
    Reflection,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalityWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `‖Φx − Φy‖ / d([x],[y])` measured on the returned pair.
    pub achieved_ratio: f64,
    /// Closed-form optimal lower Lipschitz constant for the case.
    pub alpha: f64,
}

const PM_ID_MAX_TEMPLATES: usize = 24;
const REFLECTION_CHI_SAMPLES: usize = 200;

/// Builds a pair attaining the optimal lower Lipschitz constant when `G = {±id}`
/// or `G` is a reflection group.
pub fn optimality_witness(
    bank: &MaxFilterBank,
    case: WitnessCase,
    seed: u64,
    tol: &TolerancePolicy,
) -> Result<OptimalityWitness> {
    let (x, y, alpha) = match case {
        WitnessCase::PmId => pm_id_witness(bank)?,
        WitnessCase::Reflection => reflection_witness(bank, seed, tol)?,
    };
    let achieved_ratio = lipschitz_ratio(bank, &x, &y, tol)?;
    Ok(OptimalityWitness {
        x: x.as_slice().to_vec(),
        y: y.as_slice().to_vec(),
        achieved_ratio,
        alpha,
    })
}

fn pm_id_witness(bank: &MaxFilterBank) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let group = bank.group();
    if group.order() != 2 || !group.contains_minus_identity() {
        return Err(Error::CaseMismatch("group is not {±id}".into()));
    }
    let n = bank.len();
    if n > PM_ID_MAX_TEMPLATES {
        return Err(Error::InvalidInput(format!(
            "partition search supports at most {PM_ID_MAX_TEMPLATES} templates, got {n}"
        )));
    }
    let dim = bank.dim();
    let z = bank.templates();
    let frame_of = |mask: u64, inside: bool| -> DMatrix<f64> {
        frame_operator(dim, (0..n).filter(|&i| (mask >> i & 1 == 1) == inside).map(|i| &z[i]))
    };
    let mut best = (f64::INFINITY, 0u64);
    for mask in 0..(1u64 << n) {
        let value = lambda_min_frame(dim, (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| &z[i]))
            + lambda_min_frame(dim, (0..n).filter(|&i| mask >> i & 1 == 0).map(|i| &z[i]));
        if value < best.0 {
            best = (value, mask);
        }
    }
    let (_, u) = bottom_eigenvector(&frame_of(best.1, true));
    let (_, v) = bottom_eigenvector(&frame_of(best.1, false));
    Ok((&u + &v, &u - &v, best.0.max(0.0).sqrt()))
}

fn reflection_witness(bank: &MaxFilterBank, seed: u64, tol: &TolerancePolicy) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let group: &FiniteGroup = bank.group();
    let chi = voronoi_characteristic(group, REFLECTION_CHI_SAMPLES, seed, tol)?;
    if chi.chi_lower != 1 {
        return Err(Error::CaseMismatch(format!(
            "sampled Voronoi characteristic is {}, so the group is not a reflection group",
            chi.chi_lower
        )));
    }
    let dim = bank.dim();
    let mut rng = task_rng(seed, u64::MAX - 1);
    for _ in 0..PRINCIPAL_RETRIES {
        let x = gaussian_vector(&mut rng, dim);
        if !is_principal(group, &x, tol)? {
            continue;
        }
        let aligned: Option<Vec<DVector<f64>>> = bank
            .template_orbits()
            .iter()
            .map(|o| unique_argmax(o, &x, tol).map(|k| o.points()[k].clone()))
            .collect();
        let Some(aligned) = aligned else { continue };
        let (lambda, bottom) = bottom_eigenvector(&frame_operator(dim, &aligned));
        let cell = VoronoiCellSpec::new(group, &x, tol)?;
        let mut t = x.norm();
        for _ in 0..60 {
            let y = &x + &bottom * t;
            if cell.contains(&y, tol) {
                return Ok((x, y, lambda.max(0.0).sqrt()));
            }
            t *= 0.5;
        }
    }
    Err(Error::NotNicePoint {
        reason: format!("no usable chamber point after {PRINCIPAL_RETRIES} draws"),
    })
}

/// Knobs for [`stability_report`].
#[derive(Debug, Clone, Serialize)]
pub struct StabilityOptions {
    pub n_pairs: usize,
    pub seed: u64,
    pub chi: usize,
    pub choice_cap: usize,
    pub beta_budget: u64,
    pub relaxed_budget: u64,
    pub alpha_tilde_budget: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub beta_exact: f64,
    pub beta_exact_certified: bool,
    pub beta_exact_tuple: Vec<usize>,
    pub beta_relaxed: f64,
    pub beta_relaxed_certified: bool,
    pub alpha_sharp: f64,
    pub alpha_sharp_truncated: bool,
    pub alpha_tilde: f64,
    pub alpha_tilde_certified: bool,
    pub alpha_empirical: f64,
    pub beta_empirical: f64,
    /// `β_exact / α̃`; absent when `α̃ = 0`.
    pub kappa_certified: Option<f64>,
    pub kappa_empirical: Option<f64>,
    pub alpha_empirical_witness: (Vec<f64>, Vec<f64>),
    pub beta_empirical_witness: (Vec<f64>, Vec<f64>),
    pub alpha_sharp_witness: (Vec<f64>, Vec<f64>),
    pub options: StabilityOptions,
    #[serde(skip)]
    pub pair_ratios: Vec<f64>,
    #[serde(skip)]
    pub pair_sharp_values: Vec<f64>,
}

/// Splits a budgeted result into `(value, certified)`, keeping the best
/// partial value when the budget ran out.
fn budgeted<T>(result: Result<T>, value: impl Fn(&T) -> f64) -> Result<(Option<T>, f64, bool)> {
    match result {
        Ok(r) => {
            let v = value(&r);
            Ok((Some(r), v, true))
        }
        Err(Error::BudgetExceeded { best, .. }) => Ok((None, best, false)),
        Err(e) => Err(e),
    }
}

fn ratio_or_none(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Every bound for one bank, with budget overruns recorded as uncertified values.
pub fn stability_report(bank: &MaxFilterBank, options: &StabilityOptions, tol: &TolerancePolicy) -> Result<StabilityReport> {
    let (exact, beta_exact, beta_exact_certified) =
        budgeted(upper_bound_exact(bank, tol, options.beta_budget), |r| r.beta)?;
    let (_, beta_relaxed, beta_relaxed_certified) =
        budgeted(upper_bound_relaxed(bank, options.relaxed_budget), |r| r.beta)?;
    let (_, alpha_tilde_value, alpha_tilde_certified) =
        budgeted(alpha_tilde(bank, options.chi, tol, options.alpha_tilde_budget), |r| r.alpha)?;
    let sampler = PairSampler::new(options.seed);
    let sharp = lower_bound_sharp(bank, sampler, options.n_pairs, tol, options.choice_cap)?;
    let empirical = empirical_lipschitz(bank, sampler, options.n_pairs, tol)?;
    Ok(StabilityReport {
        beta_exact,
        beta_exact_certified,
        beta_exact_tuple: exact.map(|e| e.tuple).unwrap_or_default(),
        beta_relaxed,
        beta_relaxed_certified,
        alpha_sharp: sharp.alpha,
        alpha_sharp_truncated: sharp.truncated,
        alpha_tilde: alpha_tilde_value,
        alpha_tilde_certified,
        alpha_empirical: empirical.alpha,
        beta_empirical: empirical.beta,
        kappa_certified: ratio_or_none(beta_exact, alpha_tilde_value),
        kappa_empirical: ratio_or_none(empirical.beta, empirical.alpha),
        alpha_empirical_witness: empirical.alpha_witness,
        beta_empirical_witness: empirical.beta_witness,
        alpha_sharp_witness: sharp.witness,
        options: options.clone(),
        pair_ratios: empirical.ratios,
        pair_sharp_values: sharp.per_pair,
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

    fn bank(f: Family, z: Vec<DVector<f64>>) -> MaxFilterBank {
        MaxFilterBank::new(build_family(f, &tol()).unwrap(), z, &tol()).unwrap()
    }

    fn c3_example() -> MaxFilterBank {
        bank(
            Family::CyclicRotation2d { m: 3 },
            vec![dvector![1.0, 0.0], dvector![0.5, 3f64.sqrt() / 2.0]],
        )
    }

    #[test]
    fn c3_upper_bounds() {
        let b = c3_example();
        let exact = upper_bound_exact(&b, &tol(), 1_000).unwrap();
        assert!((exact.beta - 1.5f64.sqrt()).abs() < 1e-9);
        assert_eq!(exact.tuple.len(), 2);
        // [z₁, −z₁] has rank one with singular value √2
        let relaxed = upper_bound_relaxed(&b, 1_000).unwrap();
        assert!((relaxed.beta - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn plus_minus_single_template() {
        let b = bank(Family::PlusMinusId { d: 2 }, vec![dvector![1.0, 0.0]]);
        assert!((upper_bound_exact(&b, &tol(), 100).unwrap().beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_best() {
        let b = c3_example();
        assert!(matches!(
            upper_bound_relaxed(&b, 1),
            Err(Error::BudgetExceeded { budget: 1, .. })
        ));
    }

    #[test]
    fn sharp_bound_on_the_line() {
        let b = bank(Family::SignFlips { d: 1 }, vec![dvector![2.0]]);
        let sharp = lower_bound_sharp(&b, PairSampler::new(3), 20, &tol(), 64).unwrap();
        assert!((sharp.alpha - 2.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_tilde_vanishes_below_dimension() {
        let b = bank(Family::CyclicRotation2d { m: 3 }, vec![dvector![1.0, 0.0], dvector![0.0, 1.0]]);
        assert_eq!(alpha_tilde(&b, 2, &tol(), 100).unwrap().alpha, 0.0);
    }

    #[test]
    fn alpha_tilde_plus_minus_pairs() {
        let z = vec![dvector![1.0, 0.0], dvector![0.0, 1.0], dvector![1.0, 1.0], dvector![1.0, -1.0]];
        let b = bank(Family::PlusMinusId { d: 2 }, z.clone());
        let got = alpha_tilde(&b, 2, &tol(), 10_000).unwrap().alpha;
        let mut want = f64::INFINITY;
        for i in 0..4 {
            for j in i + 1..4 {
                want = want.min(lambda_min_frame(2, [&z[i], &z[j]]));
            }
        }
        assert!((got - want.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sigma_limit_for_large_lambda() {
        let s = theoretical_sigma(9, 1e9, 2.0).unwrap();
        let limit = (-0.5f64).exp() * (-2.0f64).exp() * 3.0;
        assert!((s - limit).abs() < 1e-6);
        assert!(theoretical_sigma(9, 1.0, 2.0).is_err());
        assert!(theoretical_sigma(9, 3.0, 0.5).is_err());
    }

    #[test]
    fn distortion_bound_domain() {
        assert!(DistortionBoundParams::new(3, 2, 2, 15, 4.0).is_err());
        let p = DistortionBoundParams::new(1, 1, 3, 12, 4.0).unwrap();
        let want = (4.0 * 1.5f64.exp()).powf(1.0 + p.small_c / 2.0);
        assert!((theoretical_distortion_bound(&p).unwrap() - want).abs() < 1e-9 * want);
    }

    #[test]
    fn pm_id_axis_templates_have_zero_alpha() {
        let b = bank(Family::PlusMinusId { d: 2 }, vec![dvector![1.0, 0.0], dvector![0.0, 1.0]]);
        let w = optimality_witness(&b, WitnessCase::PmId, 0, &tol()).unwrap();
        assert_eq!(w.alpha, 0.0);
        assert!(w.achieved_ratio < 1e-12);
    }

    #[test]
    fn witness_case_is_checked() {
        let b = c3_example();
        assert!(matches!(
            optimality_witness(&b, WitnessCase::PmId, 0, &tol()),
            Err(Error::CaseMismatch(_))
        ));
        assert!(matches!(
            optimality_witness(&b, WitnessCase::Reflection, 0, &tol()),
            Err(Error::CaseMismatch(_))
        ));
    }
}
