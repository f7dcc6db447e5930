//! Open Voronoi cells of orbits as strict polyhedral cones.
//!
//! For a point `x` with orbit `[x]`, the open cell `V_x` is the set of `y` with
//! `⟨x, y⟩ > ⟨p, y⟩` for every other orbit point `p`. Joint feasibility of
//! several such cones is decided by the max-margin LP in [`crate::lp`]; on top
//! of that sit the sets `S(x, y)`, choice functions, and a sampled lower bound
//! on the Voronoi characteristic `χ(G)`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{orbit_of, stabilizer_order, FiniteGroup, Orbit};
use crate::lp::max_margin;
use crate::quotient::MaxFilterBank;
use crate::sampling::{gaussian_vector, task_rng, TaskRng};
use crate::tol::TolerancePolicy;

/// Rejection sampling of principal points gives up after this many draws.
pub const PRINCIPAL_RETRIES: usize = 100;
const CHI_CHUNK: usize = 64;

/// The open cell `V_c` of an orbit point `c`, with the rest of its orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCellSpec {
    points: Vec<DVector<f64>>,
    center: usize,
}

impl VoronoiCellSpec {
    pub fn new(group: &FiniteGroup, center: &DVector<f64>, tol: &TolerancePolicy) -> Result<Self> {
        Ok(Self::of_orbit_point(&orbit_of(group, center, tol)?, 0))
    }

    /// Cell of the `k`-th point of an already computed orbit.
    pub fn of_orbit_point(orbit: &Orbit, k: usize) -> Self {
        Self {
            points: orbit.points().to_vec(),
            center: k,
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.points[self.center]
    }

    pub fn orbit_points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.center().len()
    }

    /// `c − p` for every orbit point `p ≠ c`; `y ∈ V_c` iff all are positive on `y`.
    fn constraint_rows(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        let c = self.center();
        self.points
            .iter()
            .enumerate()
            .filter(move |(k, _)| *k != self.center)
            .map(move |(_, p)| c - p)
    }

    /// `y ∈ V_c`: `⟨c, y⟩ > ⟨p, y⟩ + lp_tol·‖y‖` for every other orbit point.
    pub fn contains(&self, y: &DVector<f64>, tol: &TolerancePolicy) -> bool {
        let slack = tol.lp_tol * y.norm();
        self.constraint_rows().all(|a| a.dot(y) > slack)
    }

    /// `y ∈ closure(V_c)`: `⟨c, y⟩ ≥ ⟨p, y⟩ − lp_tol·‖y‖` for every orbit point.
    pub fn closure_contains(&self, y: &DVector<f64>, tol: &TolerancePolicy) -> bool {
        let slack = tol.lp_tol * y.norm();
        self.constraint_rows().all(|a| a.dot(y) >= -slack)
    }
}

/// Outcome of a joint strict-feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// A point in the intersection of the open cells, when feasible.
    pub witness: Option<DVector<f64>>,
    /// Optimal margin `t*` of the bounded LP (`+∞` without constraints).
    pub margin: f64,
}

/// Decides whether `∩_k V_{c_k}` is nonempty by maximizing `t` subject to
/// `⟨c_k − p, y⟩ ≥ t` over all cells and non-center orbit points, `‖y‖_∞ ≤ 1`.
pub fn strict_cones_feasible(cells: &[VoronoiCellSpec], tol: &TolerancePolicy) -> Result<Feasibility> {
    let Some(first) = cells.first() else {
        return Err(Error::InvalidInput("no cells given".into()));
    };
    let dim = first.dim();
    for cell in cells {
        if cell.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: cell.dim(),
            });
        }
    }
    if let [cell] = cells {
        if cell.contains(cell.center(), tol) {
            return Ok(Feasibility {
                feasible: true,
                witness: Some(cell.center().clone()),
                margin: cell
                    .constraint_rows()
                    .map(|a| a.dot(cell.center()))
                    .fold(f64::INFINITY, f64::min),
            });
        }
    }
    let rows: Vec<DVector<f64>> = cells.iter().flat_map(|c| c.constraint_rows()).collect();
    if rows.is_empty() {
        let witness = if first.center().norm() > 0.0 {
            first.center().clone()
        } else {
            let mut e = DVector::zeros(dim);
            e[0] = 1.0;
            e
        };
        return Ok(Feasibility {
            feasible: true,
            witness: Some(witness),
            margin: f64::INFINITY,
        });
    }
    let solution = max_margin(&rows, dim)?;
    let feasible = solution.margin > tol.lp_tol;
    Ok(Feasibility {
        feasible,
        witness: feasible.then_some(solution.point),
        margin: solution.margin,
    })
}

/// Indices of the largest and second-largest `⟨p, y⟩` over the orbit.
fn top_two(orbit: &Orbit, y: &DVector<f64>) -> (usize, f64, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    let mut second = f64::NEG_INFINITY;
    for (k, p) in orbit.points().iter().enumerate() {
        let v = p.dot(y);
        if v > best.1 {
            second = best.1;
            best = (k, v);
        } else if v > second {
            second = v;
        }
    }
    (best.0, best.1, second)
}

/// `y ∈ Q_x`: the argmax of `⟨p, y⟩` over the orbit is unique, with a gap
/// larger than `sample_tol·(1 + ‖y‖)`. Ties count as outside.
pub fn in_q(orbit: &Orbit, y: &DVector<f64>, tol: &TolerancePolicy) -> bool {
    if orbit.len() <= 1 {
        return true;
    }
    let (_, best, second) = top_two(orbit, y);
    best - second > tol.sample_tol * (1.0 + y.norm())
}

/// The unique maximizer of `⟨p, y⟩` over the orbit, if `y ∈ Q`.
pub fn unique_argmax(orbit: &Orbit, y: &DVector<f64>, tol: &TolerancePolicy) -> Option<usize> {
    in_q(orbit, y, tol).then(|| top_two(orbit, y).0)
}

/// Trivial stabilizer.
pub fn is_principal(group: &FiniteGroup, x: &DVector<f64>, tol: &TolerancePolicy) -> Result<bool> {
    Ok(stabilizer_order(group, x, tol)? == 1)
}

/// `x ∈ P(G) ∩ ⋂_i Q_{z_i}`.
pub fn is_nice(bank: &MaxFilterBank, x: &DVector<f64>, tol: &TolerancePolicy) -> Result<bool> {
    Ok(is_principal(bank.group(), x, tol)?
        && bank.template_orbits().iter().all(|o| in_q(o, x, tol)))
}

/// `S(x, y) = {q ∈ [y] : V_q ∩ V_x ≠ ∅}`.
#[derive(Debug, Clone)]
pub struct SSet {
    pub base_x: DVector<f64>,
    pub base_y: DVector<f64>,
    /// Orbit of `y`; members index into it.
    pub orbit_y: Orbit,
    pub member_indices: Vec<usize>,
    /// For each member `q`, a point of `V_q ∩ V_x`.
    pub witnesses: Vec<DVector<f64>>,
}

impl SSet {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn member(&self, j: usize) -> &DVector<f64> {
        &self.orbit_y.points()[self.member_indices[j]]
    }

    pub fn members(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.member_indices.iter().map(|&k| &self.orbit_y.points()[k])
    }
}

pub fn s_set(group: &FiniteGroup, x: &DVector<f64>, y: &DVector<f64>, tol: &TolerancePolicy) -> Result<SSet> {
    let orbit_x = orbit_of(group, x, tol)?;
    let orbit_y = orbit_of(group, y, tol)?;
    let cell_x = VoronoiCellSpec::of_orbit_point(&orbit_x, 0);
    let mut member_indices = Vec::new();
    let mut witnesses = Vec::new();
    for k in 0..orbit_y.len() {
        let cell_q = VoronoiCellSpec::of_orbit_point(&orbit_y, k);
        let result = strict_cones_feasible(&[cell_q, cell_x.clone()], tol)?;
        if let Some(w) = result.witness.filter(|_| result.feasible) {
            member_indices.push(k);
            witnesses.push(w);
        }
    }
    Ok(SSet {
        base_x: x.clone(),
        base_y: y.clone(),
        orbit_y,
        member_indices,
        witnesses,
    })
}

/// One choice function `f: {1..n} → S(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceAssignment {
    /// `images[i]` indexes into the members of the accompanying [`SSet`].
    pub images: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ChoiceEnumeration {
    /// `v_i(x)`, the unique closest member of `[z_i]` to `x`.
    pub aligned: Vec<DVector<f64>>,
    pub s_set: SSet,
    /// Admissible images per template index.
    pub candidates: Vec<Vec<usize>>,
    pub assignments: Vec<ChoiceAssignment>,
    /// Set when the product of candidate sets exceeded the cap.
    pub truncated: bool,
}

/// Enumerates choice functions with `f(i) ∈ S(x, y) ∩ argmax_{q ∈ [y]} ⟨q, v_i(x)⟩`.
pub fn choice_assignments(
    bank: &MaxFilterBank,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: &TolerancePolicy,
    cap: usize,
) -> Result<ChoiceEnumeration> {
    if !is_principal(bank.group(), x, tol)? {
        return Err(Error::NotNicePoint {
            reason: "x has a nontrivial stabilizer".into(),
        });
    }
    let mut aligned = Vec::with_capacity(bank.len());
    for (i, orbit) in bank.template_orbits().iter().enumerate() {
        match unique_argmax(orbit, x, tol) {
            Some(k) => aligned.push(orbit.points()[k].clone()),
            None => {
                return Err(Error::NotNicePoint {
                    reason: format!("x lies on a Voronoi wall of template {i}"),
                })
            }
        }
    }
    let s = s_set(bank.group(), x, y, tol)?;
    let y_points = s.orbit_y.points();
    let candidates: Vec<Vec<usize>> = aligned
        .iter()
        .map(|v| {
            let best = y_points
                .iter()
                .map(|q| q.dot(v))
                .fold(f64::NEG_INFINITY, f64::max);
            let slack = tol.sample_tol * (1.0 + v.norm() * y.norm());
            let hits: Vec<usize> = (0..s.len())
                .filter(|&j| s.member(j).dot(v) >= best - slack)
                .collect();
            if hits.is_empty() {
                // The argmax set always meets S in exact arithmetic; keep the
                // closest member when the LP margin rounded it away.
                let j = (0..s.len())
                    .max_by(|&a, &b| s.member(a).dot(v).total_cmp(&s.member(b).dot(v)))
                    .into_iter()
                    .collect();
                j
            } else {
                hits
            }
        })
        .collect();

    let total = candidates
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
    let truncated = total.is_none_or(|t| t > cap);
    let limit = total.map_or(cap, |t| t.min(cap));
    let mut assignments = Vec::with_capacity(limit);
    let mut digits = vec![0usize; candidates.len()];
    'outer: while assignments.len() < limit {
        assignments.push(ChoiceAssignment {
            images: digits.iter().zip(&candidates).map(|(&d, c)| c[d]).collect(),
        });
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < candidates[pos].len() {
                continue 'outer;
            }
            digits[pos] = 0;
        }
        break;
    }
    Ok(ChoiceEnumeration {
        aligned,
        s_set: s,
        candidates,
        assignments,
        truncated,
    })
}

/// Draws a standard Gaussian point with trivial stabilizer.
pub fn sample_principal(group: &FiniteGroup, rng: &mut TaskRng, tol: &TolerancePolicy) -> Result<DVector<f64>> {
    for _ in 0..PRINCIPAL_RETRIES {
        let x = gaussian_vector(rng, group.dim());
        if is_principal(group, &x, tol)? {
            return Ok(x);
        }
    }
    Err(Error::NotNicePoint {
        reason: format!("no principal point after {PRINCIPAL_RETRIES} draws"),
    })
}

/// Sampled lower bound on `χ(G) = max_{x,y ∈ P(G)} |S(x, y)|`.
#[derive(Debug, Clone, Serialize)]
pub struct ChiEstimate {
    pub chi_lower: usize,
    /// `chi_lower = |G|`, so further sampling cannot raise it.
    pub saturated: bool,
    pub samples_requested: usize,
    pub samples_evaluated: usize,
    /// First sampled pair attaining `chi_lower`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Pair `k` is drawn from the stream `(seed, k)`, so the estimate for `n`
/// samples is the running maximum over a fixed prefix of pairs.
pub fn voronoi_characteristic(
    group: &FiniteGroup,
    n_samples: usize,
    seed: u64,
    tol: &TolerancePolicy,
) -> Result<ChiEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let order = group.order();
    let mut best: Option<(usize, DVector<f64>, DVector<f64>)> = None;
    let mut evaluated = 0;
    let mut start = 0;
    while start < n_samples {
        let end = (start + CHI_CHUNK).min(n_samples);
        let sizes = (start..end)
            .into_par_iter()
            .map(|k| {
                let mut rng = task_rng(seed, k as u64);
                let x = sample_principal(group, &mut rng, tol)?;
                let y = sample_principal(group, &mut rng, tol)?;
                let size = s_set(group, &x, &y, tol)?.len();
                Ok((size, x, y))
            })
            .collect::<Result<Vec<_>>>()?;
        for (offset, (size, x, y)) in sizes.into_iter().enumerate() {
            evaluated = start + offset + 1;
            if best.as_ref().is_none_or(|b| size > b.0) {
                best = Some((size, x, y));
            }
            if size == order {
                break;
            }
        }
        if best.as_ref().is_some_and(|b| b.0 == order) {
            break;
        }
        start = end;
    }
    let (chi_lower, x, y) = best.expect("at least one sample");
    Ok(ChiEstimate {
        chi_lower,
        saturated: chi_lower == order,
        samples_requested: n_samples,
        samples_evaluated: evaluated,
        witness: Some((x.as_slice().to_vec(), y.as_slice().to_vec())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_family, Family};
    use nalgebra::dvector;
    use std::f64::consts::PI;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn family(f: Family) -> FiniteGroup {
        build_family(f, &tol()).unwrap()
    }

    #[test]
    fn single_principal_cell_uses_its_center() {
        let c5 = family(Family::CyclicRotation2d { m: 5 });
        let x = dvector![0.3, 0.8];
        let cell = VoronoiCellSpec::new(&c5, &x, &tol()).unwrap();
        let result = strict_cones_feasible(&[cell], &tol()).unwrap();
        assert!(result.feasible);
        assert_eq!(result.witness.unwrap(), x);
    }

    #[test]
    fn opposite_half_planes_do_not_meet() {
        let pm = family(Family::PlusMinusId { d: 2 });
        let orbit = orbit_of(&pm, &dvector![1.0, 0.0], &tol()).unwrap();
        let cells = [
            VoronoiCellSpec::of_orbit_point(&orbit, 0),
            VoronoiCellSpec::of_orbit_point(&orbit, 1),
        ];
        assert!(!strict_cones_feasible(&cells, &tol()).unwrap().feasible);
    }

    #[test]
    fn three_fold_rotation_has_six_components() {
        let c3 = family(Family::CyclicRotation2d { m: 3 });
        let z1 = dvector![1.0, 0.0];
        let z2 = dvector![0.5, 3f64.sqrt() / 2.0];
        let o1 = orbit_of(&c3, &z1, &tol()).unwrap();
        let o2 = orbit_of(&c3, &z2, &tol()).unwrap();
        let mut feasible = 0;
        for g1 in 0..3 {
            for g2 in 0..3 {
                let cells = [
                    VoronoiCellSpec::of_orbit_point(&o1, o1.image_of(g1)),
                    VoronoiCellSpec::of_orbit_point(&o2, o2.image_of(g2)),
                ];
                let result = strict_cones_feasible(&cells, &tol()).unwrap();
                if result.feasible {
                    let w = result.witness.unwrap();
                    assert!(cells.iter().all(|c| c.contains(&w, &tol())));
                    feasible += 1;
                }
            }
        }
        assert_eq!(feasible, 6);
    }

    #[test]
    fn in_q_examples() {
        let trivial = family(Family::Trivial { d: 2 });
        let o = orbit_of(&trivial, &dvector![1.0, 0.0], &tol()).unwrap();
        assert!(in_q(&o, &dvector![0.0, 0.0], &tol()));

        let c4 = family(Family::CyclicRotation2d { m: 4 });
        let o = orbit_of(&c4, &dvector![1.0, 0.0], &tol()).unwrap();
        let diag = dvector![1.0, 1.0] / 2f64.sqrt();
        assert!(!in_q(&o, &diag, &tol()));
        assert!(in_q(&o, &dvector![1.0, 0.1], &tol()));
    }

    #[test]
    fn principal_examples() {
        let c5 = family(Family::CyclicRotation2d { m: 5 });
        assert!(!is_principal(&c5, &dvector![0.0, 0.0], &tol()).unwrap());
        for k in 0..12 {
            let a = 0.37 + k as f64 * PI / 6.0;
            assert!(is_principal(&c5, &dvector![a.cos(), a.sin()], &tol()).unwrap());
        }
        let axis = family(Family::AxisRotation3d { m: 5 });
        assert!(!is_principal(&axis, &dvector![0.0, 0.0, 2.0], &tol()).unwrap());
    }

    #[test]
    fn s_set_on_planar_rotations() {
        let c5 = family(Family::CyclicRotation2d { m: 5 });
        let y = dvector![0.6, -0.2];
        assert_eq!(s_set(&c5, &(&y * 2.5), &y, &tol()).unwrap().len(), 1);
        assert_eq!(s_set(&c5, &dvector![0.1, 1.0], &y, &tol()).unwrap().len(), 2);
    }

    #[test]
    fn s_set_with_axis_point() {
        let axis = family(Family::AxisRotation3d { m: 5 });
        let s = s_set(&axis, &dvector![0.0, 0.0, 1.0], &dvector![1.0, 0.2, -0.4], &tol()).unwrap();
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn choice_assignments_trivial_group() {
        let trivial = family(Family::Trivial { d: 2 });
        let bank = MaxFilterBank::new(trivial, vec![dvector![1.0, 0.0], dvector![0.2, 1.0]], &tol()).unwrap();
        let y = dvector![-0.4, 0.9];
        let e = choice_assignments(&bank, &dvector![0.5, 0.5], &y, &tol(), 16).unwrap();
        assert_eq!(e.assignments.len(), 1);
        assert!(!e.truncated);
        assert_eq!(e.s_set.len(), 1);
        assert_eq!(e.s_set.member(0), &y);
    }

    #[test]
    fn choice_assignments_reject_axis_points() {
        let axis = family(Family::AxisRotation3d { m: 5 });
        let bank = MaxFilterBank::new(axis, vec![dvector![0.0, 0.0, 1.0]], &tol()).unwrap();
        let err = choice_assignments(&bank, &dvector![0.0, 0.0, 2.0], &dvector![1.0, 0.0, 0.0], &tol(), 8);
        assert!(matches!(err, Err(Error::NotNicePoint { .. })));
    }

    #[test]
    fn choice_assignments_single_image_when_templates_cluster() {
        // x at angle 0, y at angle 20°; templates near angle 5° and 10° both
        // align inside V_x and are closest to y itself.
        let c3 = family(Family::CyclicRotation2d { m: 3 });
        let deg = PI / 180.0;
        let templates = vec![
            dvector![(5.0 * deg).cos(), (5.0 * deg).sin()],
            dvector![2.0 * (10.0 * deg).cos(), 2.0 * (10.0 * deg).sin()],
        ];
        let bank = MaxFilterBank::new(c3, templates, &tol()).unwrap();
        let x = dvector![1.0, 0.0];
        let y = dvector![(20.0 * deg).cos(), (20.0 * deg).sin()];
        let e = choice_assignments(&bank, &x, &y, &tol(), 16).unwrap();
        assert_eq!(e.assignments.len(), 1);
        let images = &e.assignments[0].images;
        assert_eq!(images[0], images[1]);
        assert!((e.s_set.member(images[0]) - &y).amax() < 1e-12);
    }

    #[test]
    fn chi_examples() {
        let s3 = family(Family::Permutations { d: 3 });
        assert_eq!(voronoi_characteristic(&s3, 200, 1, &tol()).unwrap().chi_lower, 1);
        let c7 = family(Family::CyclicRotation2d { m: 7 });
        let est = voronoi_characteristic(&c7, 200, 1, &tol()).unwrap();
        assert_eq!(est.chi_lower, 2);
        assert!(!est.saturated);
        let pm = family(Family::PlusMinusId { d: 3 });
        let est = voronoi_characteristic(&pm, 200, 1, &tol()).unwrap();
        assert_eq!((est.chi_lower, est.saturated), (2, true));
    }
}
