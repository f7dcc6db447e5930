//! Finite subgroups of `O(d)` stored as explicit matrix lists.
//!
//! Groups come either from generators (breadth-first closure) or from the
//! named family builders. Elements are kept in a canonical lexicographic order
//! so that every enumeration over a group is reproducible across runs.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol::TolerancePolicy;

/// Default cap on the order of groups produced by [`build_family`].
pub const DEFAULT_ORDER_CAP: usize = 1_000_000;

/// Groups up to this order fall back to a linear scan when the hashed lookup
/// misses, which guards against entries that straddle a rounding boundary.
const LINEAR_FALLBACK_ORDER: usize = 4096;
const KEY_GRID: f64 = 1e-6;

/// An orthogonal `d x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: DMatrix<f64>,
}

impl GroupElement {
    pub fn new(matrix: DMatrix<f64>, tol: &TolerancePolicy) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "group element must be a nonempty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = orthogonality_defect(&matrix);
        if deviation > tol.eq_tol {
            return Err(Error::NotOrthogonal { index: 0, deviation });
        }
        Ok(Self { matrix })
    }

    pub fn from_row_major(dim: usize, entries: &[f64], tol: &TolerancePolicy) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries), tol)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub(crate) fn unchecked(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// `self · other`
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn max_distance(&self, other: &DMatrix<f64>) -> f64 {
        max_abs_diff(self.matrix.as_slice(), other.as_slice())
    }

    fn row_major(&self) -> Vec<f64> {
        self.matrix.transpose().as_slice().to_vec()
    }
}

/// `‖QᵀQ − I‖_max`, plus the deviation of `|det Q|` from one.
fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let d = q.nrows();
    let gram = q.transpose() * q;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst.max((q.determinant().abs() - 1.0).abs())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

fn grid_key(entries: &[f64]) -> Vec<i64> {
    entries
        .iter()
        .map(|v| (v / KEY_GRID).round() as i64)
        .collect()
}

/// Named group families with explicit matrix realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `{id}` on `ℝᵈ`.
    Trivial { d: usize },
    /// Rotations of the plane by multiples of `2π/m`.
    #[serde(rename = "cyclic_rotation_2d")]
    CyclicRotation2d { m: usize },
    /// Rotations of `ℝ³` about the third axis by multiples of `2π/m`.
    #[serde(rename = "axis_rotation_3d")]
    AxisRotation3d { m: usize },
    /// The symmetry group of the regular `m`-gon, order `2m`.
    #[serde(rename = "dihedral_2d")]
    Dihedral2d { m: usize },
    /// Diagonal sign changes, order `2ᵈ`.
    SignFlips { d: usize },
    /// Coordinate permutations, order `d!`.
    Permutations { d: usize },
    /// `{±id}` on `ℝᵈ`.
    PlusMinusId { d: usize },
    /// Cyclic shifts of length-`d` signals, order `d`.
    CircularShifts { d: usize },
}

impl Family {
    pub fn dim(&self) -> usize {
        match *self {
            Family::CyclicRotation2d { .. } | Family::Dihedral2d { .. } => 2,
            Family::AxisRotation3d { .. } => 3,
            Family::Trivial { d }
            | Family::SignFlips { d }
            | Family::Permutations { d }
            | Family::PlusMinusId { d }
            | Family::CircularShifts { d } => d,
        }
    }

    pub fn order(&self) -> u128 {
        match *self {
            Family::Trivial { .. } => 1,
            Family::CyclicRotation2d { m } | Family::AxisRotation3d { m } => m as u128,
            Family::Dihedral2d { m } => 2 * m as u128,
            Family::SignFlips { d } => {
                if d >= 127 {
                    u128::MAX
                } else {
                    1u128 << d
                }
            }
            Family::Permutations { d } => (1..=d as u128)
                .try_fold(1u128, |acc, k| acc.checked_mul(k))
                .unwrap_or(u128::MAX),
            Family::PlusMinusId { .. } => 2,
            Family::CircularShifts { d } => d as u128,
        }
    }

    fn parameter(&self) -> usize {
        match *self {
            Family::CyclicRotation2d { m }
            | Family::AxisRotation3d { m }
            | Family::Dihedral2d { m } => m,
            Family::Trivial { d }
            | Family::SignFlips { d }
            | Family::Permutations { d }
            | Family::PlusMinusId { d }
            | Family::CircularShifts { d } => d,
        }
    }
}

/// A finite group `G ≤ O(d)` listed element by element.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    dim: usize,
    elements: Vec<GroupElement>,
    lookup: HashMap<Vec<i64>, usize>,
    identity: usize,
    family: Option<Family>,
    eq_tol: f64,
}

impl FiniteGroup {
    /// Builds a group from an element list that is already closed. Duplicates
    /// are dropped and the remainder stored in canonical order.
    pub fn from_elements(
        dim: usize,
        elements: Vec<GroupElement>,
        family: Option<Family>,
        tol: &TolerancePolicy,
    ) -> Result<Self> {
        for element in &elements {
            if element.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: element.dim(),
                });
            }
        }
        let mut keyed: Vec<(Vec<i64>, Vec<f64>, GroupElement)> = elements
            .into_iter()
            .map(|e| {
                let flat = e.row_major();
                (grid_key(&flat), flat, e)
            })
            .collect();
        keyed.sort_by(|a, b| {
            a.0.cmp(&b.0).then_with(|| {
                a.1.iter()
                    .zip(&b.1)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });

        let mut group = FiniteGroup {
            dim,
            elements: Vec::with_capacity(keyed.len()),
            lookup: HashMap::with_capacity(keyed.len()),
            identity: 0,
            family,
            eq_tol: tol.eq_tol,
        };
        for (key, _, element) in keyed {
            if group.index_of(element.matrix()).is_none() {
                group.lookup.insert(key, group.elements.len());
                group.elements.push(element);
            }
        }
        group.identity = group
            .index_of(&DMatrix::identity(dim, dim))
            .ok_or_else(|| Error::InvalidInput("element list lacks the identity".into()))?;
        Ok(group)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> &GroupElement {
        &self.elements[index]
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    /// The family this group was built from, if it came from [`build_family`].
    pub fn family(&self) -> Option<Family> {
        self.family
    }

    pub fn is_circular_shift_family(&self) -> bool {
        matches!(self.family, Some(Family::CircularShifts { .. }))
    }

    /// Index of the stored element within `eq_tol` of `matrix`.
    pub fn index_of(&self, matrix: &DMatrix<f64>) -> Option<usize> {
        let flat = matrix.transpose().as_slice().to_vec();
        if let Some(&i) = self.lookup.get(&grid_key(&flat)) {
            if self.elements[i].max_distance(matrix) <= self.eq_tol {
                return Some(i);
            }
        }
        if self.elements.len() <= LINEAR_FALLBACK_ORDER {
            return self
                .elements
                .iter()
                .position(|e| e.max_distance(matrix) <= self.eq_tol);
        }
        None
    }

    pub fn contains_minus_identity(&self) -> bool {
        self.index_of(&(-DMatrix::<f64>::identity(self.dim, self.dim)))
            .is_some()
    }

    /// Checks that every product `g·h` and every inverse is stored.
    pub fn closure_audit(&self) -> bool {
        self.elements.iter().all(|g| {
            self.index_of(g.inverse().matrix()).is_some()
                && self
                    .elements
                    .iter()
                    .all(|h| self.index_of(g.compose(h).matrix()).is_some())
        })
    }

    pub(crate) fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Closure of `generators` under multiplication, by breadth-first products.
pub fn generate_group(
    generators: &[GroupElement],
    max_order: usize,
    tol: &TolerancePolicy,
) -> Result<FiniteGroup> {
    tol.validate()?;
    let dim = generators
        .first()
        .map(GroupElement::dim)
        .ok_or_else(|| Error::InvalidInput("at least one generator is required".into()))?;
    for (index, g) in generators.iter().enumerate() {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        let deviation = orthogonality_defect(g.matrix());
        if deviation > tol.eq_tol {
            return Err(Error::NotOrthogonal { index, deviation });
        }
    }
    if max_order == 0 {
        return Err(Error::ClosureOverflow { max_order });
    }

    let identity = GroupElement::identity(dim);
    let mut partial = FiniteGroup {
        dim,
        elements: vec![],
        lookup: HashMap::new(),
        identity: 0,
        family: None,
        eq_tol: tol.eq_tol,
    };
    let push = |group: &mut FiniteGroup, e: GroupElement| -> Result<bool> {
        if group.index_of(e.matrix()).is_some() {
            return Ok(false);
        }
        if group.elements.len() == max_order {
            return Err(Error::ClosureOverflow { max_order });
        }
        group
            .lookup
            .insert(grid_key(&e.row_major()), group.elements.len());
        group.elements.push(e);
        Ok(true)
    };

    push(&mut partial, identity)?;
    let mut frontier = 0;
    while frontier < partial.elements.len() {
        let current = partial.elements[frontier].clone();
        for g in generators {
            push(&mut partial, g.compose(&current))?;
        }
        frontier += 1;
    }
    FiniteGroup::from_elements(dim, partial.elements, None, tol)
}

/// [`build_family_capped`] with the default cap of one million elements.
pub fn build_family(family: Family, tol: &TolerancePolicy) -> Result<FiniteGroup> {
    build_family_capped(family, DEFAULT_ORDER_CAP, tol)
}

pub fn build_family_capped(family: Family, cap: usize, tol: &TolerancePolicy) -> Result<FiniteGroup> {
    tol.validate()?;
    if family.parameter() == 0 {
        return Err(Error::InvalidInput(format!(
            "family parameter must be positive: {family:?}"
        )));
    }
    let order = family.order();
    if order > cap as u128 {
        return Err(Error::SizeOverflow { order, cap });
    }
    let dim = family.dim();
    let elements: Vec<GroupElement> = match family {
        Family::Trivial { d } => vec![GroupElement::identity(d)],
        Family::CyclicRotation2d { m } => (0..m)
            .map(|k| rotation_2d(2.0 * PI * k as f64 / m as f64))
            .collect(),
        Family::AxisRotation3d { m } => (0..m)
            .map(|k| {
                let r = rotation_2d(2.0 * PI * k as f64 / m as f64);
                let mut q = DMatrix::identity(3, 3);
                q.view_mut((0, 0), (2, 2)).copy_from(r.matrix());
                GroupElement::unchecked(q)
            })
            .collect(),
        Family::Dihedral2d { m } => (0..m)
            .map(|k| rotation_2d(2.0 * PI * k as f64 / m as f64))
            .chain((0..m).map(|k| reflection_2d(PI * k as f64 / m as f64)))
            .collect(),
        Family::SignFlips { d } => (0..1usize << d)
            .map(|mask| {
                let diag = DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
                GroupElement::unchecked(DMatrix::from_diagonal(&diag))
            })
            .collect(),
        Family::Permutations { d } => (0..d)
            .permutations(d)
            .map(|perm| {
                let mut q = DMatrix::zeros(d, d);
                for (i, &pi) in perm.iter().enumerate() {
                    q[(pi, i)] = 1.0;
                }
                GroupElement::unchecked(q)
            })
            .collect(),
        Family::PlusMinusId { d } => vec![
            GroupElement::identity(d),
            GroupElement::unchecked(-DMatrix::<f64>::identity(d, d)),
        ],
        Family::CircularShifts { d } => (0..d)
            .map(|k| {
                let mut q = DMatrix::zeros(d, d);
                for j in 0..d {
                    q[((j + k) % d, j)] = 1.0;
                }
                GroupElement::unchecked(q)
            })
            .collect(),
    };
    FiniteGroup::from_elements(dim, elements, Some(family), tol)
}

fn rotation_2d(theta: f64) -> GroupElement {
    let (s, c) = theta.sin_cos();
    GroupElement::unchecked(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
}

/// Reflection across the line through the origin at angle `phi`.
fn reflection_2d(phi: f64) -> GroupElement {
    let (s, c) = (2.0 * phi).sin_cos();
    GroupElement::unchecked(DMatrix::from_row_slice(2, 2, &[c, s, s, -c]))
}

/// The orbit `G·x`, deduplicated, with the base point stored first.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    base: DVector<f64>,
    points: Vec<DVector<f64>>,
    /// For each orbit point, the first group index mapping `base` onto it.
    representatives: Vec<usize>,
    /// For each group index, the orbit point it maps `base` onto.
    image_of: Vec<usize>,
}

impl Orbit {
    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Group index of some `g` with `g·base = points[k]`.
    pub fn representative(&self, k: usize) -> usize {
        self.representatives[k]
    }

    /// Orbit index of `g·base` for group index `g`.
    pub fn image_of(&self, g: usize) -> usize {
        self.image_of[g]
    }

    pub fn position(&self, p: &DVector<f64>, tol: &TolerancePolicy) -> Option<usize> {
        let thresh = point_threshold(&self.base, tol);
        self.points.iter().position(|q| (q - p).amax() <= thresh)
    }
}

fn point_threshold(x: &DVector<f64>, tol: &TolerancePolicy) -> f64 {
    tol.eq_tol * (1.0 + x.norm())
}

pub fn orbit_of(group: &FiniteGroup, x: &DVector<f64>, tol: &TolerancePolicy) -> Result<Orbit> {
    group.check_dim(x)?;
    let thresh = point_threshold(x, tol);
    let mut points: Vec<DVector<f64>> = vec![x.clone()];
    let mut representatives = vec![group.identity_index()];
    let mut image_of = vec![0; group.order()];
    for (g, element) in group.elements().iter().enumerate() {
        if g == group.identity_index() {
            continue;
        }
        let gx = element.apply(x);
        match points.iter().position(|p| (p - &gx).amax() <= thresh) {
            Some(k) => image_of[g] = k,
            None => {
                image_of[g] = points.len();
                points.push(gx);
                representatives.push(g);
            }
        }
    }
    Ok(Orbit {
        base: x.clone(),
        points,
        representatives,
        image_of,
    })
}

/// Number of `g` with `‖g·x − x‖ ≤ eq_tol·(1 + ‖x‖)`.
pub fn stabilizer_order(group: &FiniteGroup, x: &DVector<f64>, tol: &TolerancePolicy) -> Result<usize> {
    group.check_dim(x)?;
    let thresh = point_threshold(x, tol);
    Ok(group
        .elements()
        .iter()
        .filter(|g| (g.apply(x) - x).amax() <= thresh)
        .count())
}

/// On-disk group description: dimension plus row-major generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFile {
    pub dim: usize,
    pub generators: Vec<Vec<f64>>,
}

impl GroupFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn from_group_generators(generators: &[GroupElement]) -> Self {
        let dim = generators.first().map_or(0, GroupElement::dim);
        Self {
            dim,
            generators: generators.iter().map(GroupElement::row_major).collect(),
        }
    }

    pub fn build(&self, max_order: usize, tol: &TolerancePolicy) -> Result<FiniteGroup> {
        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(index, entries)| {
                GroupElement::from_row_major(self.dim, entries, tol).map_err(|e| match e {
                    Error::NotOrthogonal { deviation, .. } => Error::NotOrthogonal { index, deviation },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        generate_group(&generators, max_order, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn identity_generator_gives_trivial_group() {
        let g = generate_group(&[GroupElement::identity(2)], 10, &tol()).unwrap();
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn fifth_root_rotation_generates_order_five() {
        let g = generate_group(&[rotation_2d(2.0 * PI / 5.0)], 100, &tol()).unwrap();
        assert_eq!(g.order(), 5);
        assert!(g.closure_audit());
    }

    #[test]
    fn minus_identity_is_an_involution() {
        let minus = GroupElement::new(-DMatrix::<f64>::identity(3, 3), &tol()).unwrap();
        let g = generate_group(&[minus], 10, &tol()).unwrap();
        assert_eq!(g.order(), 2);
        assert!(g.contains_minus_identity());
    }

    #[test]
    fn closure_overflow_and_non_orthogonal_generators_are_rejected() {
        let r = rotation_2d(2.0 * PI / 7.0);
        assert!(matches!(
            generate_group(&[r], 5, &tol()),
            Err(Error::ClosureOverflow { max_order: 5 })
        ));
        let skew = GroupElement::unchecked(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]));
        assert!(matches!(
            generate_group(&[GroupElement::identity(2), skew], 5, &tol()),
            Err(Error::NotOrthogonal { index: 1, .. })
        ));
    }

    #[test]
    fn dihedral_closure_matches_builder() {
        let built = build_family(Family::Dihedral2d { m: 4 }, &tol()).unwrap();
        assert_eq!(built.order(), 8);
        let generated =
            generate_group(&[rotation_2d(PI / 2.0), reflection_2d(0.0)], 100, &tol()).unwrap();
        assert_eq!(generated.order(), 8);
        for e in built.elements() {
            assert!(generated.index_of(e.matrix()).is_some());
        }
    }

    #[test]
    fn family_orders() {
        let cases = [
            (Family::PlusMinusId { d: 3 }, 2),
            (Family::CircularShifts { d: 4 }, 4),
            (Family::SignFlips { d: 3 }, 8),
            (Family::Permutations { d: 4 }, 24),
            (Family::AxisRotation3d { m: 5 }, 5),
            (Family::Trivial { d: 3 }, 1),
        ];
        for (family, order) in cases {
            let g = build_family(family, &tol()).unwrap();
            assert_eq!(g.order(), order, "{family:?}");
            assert!(g.closure_audit(), "{family:?}");
        }
    }

    #[test]
    fn circular_shifts_are_permutation_matrices() {
        let g = build_family(Family::CircularShifts { d: 4 }, &tol()).unwrap();
        for e in g.elements() {
            let m = e.matrix();
            for r in 0..4 {
                let row = m.row(r);
                assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
                assert_eq!(row.iter().filter(|v| **v == 0.0).count(), 3);
            }
        }
    }

    #[test]
    fn size_cap_is_enforced() {
        assert!(matches!(
            build_family_capped(Family::Permutations { d: 6 }, 100, &tol()),
            Err(Error::SizeOverflow { order: 720, cap: 100 })
        ));
    }

    #[test]
    fn canonical_order_is_deterministic() {
        let a = build_family(Family::Dihedral2d { m: 6 }, &tol()).unwrap();
        let b = generate_group(&[rotation_2d(PI / 3.0), reflection_2d(0.0)], 100, &tol()).unwrap();
        for (x, y) in a.elements().iter().zip(b.elements()) {
            assert!(x.max_distance(y.matrix()) < 1e-12);
        }
    }

    #[test]
    fn orbit_examples() {
        let trivial = build_family(Family::Trivial { d: 2 }, &tol()).unwrap();
        assert_eq!(orbit_of(&trivial, &dvector![0.3, -1.0], &tol()).unwrap().len(), 1);

        let c5 = build_family(Family::CyclicRotation2d { m: 5 }, &tol()).unwrap();
        let orbit = orbit_of(&c5, &dvector![1.0, 0.0], &tol()).unwrap();
        assert_eq!(orbit.len(), 5);
        for k in 0..5 {
            let angle = 2.0 * PI * k as f64 / 5.0;
            let target = dvector![angle.cos(), angle.sin()];
            assert!(orbit.position(&target, &tol()).is_some());
        }

        let flips = build_family(Family::SignFlips { d: 2 }, &tol()).unwrap();
        let x = dvector![1.0, 0.0];
        let orbit = orbit_of(&flips, &x, &tol()).unwrap();
        assert_eq!(orbit.len(), 2);
        assert!(orbit.position(&dvector![-1.0, 0.0], &tol()).is_some());
        assert_eq!(stabilizer_order(&flips, &x, &tol()).unwrap(), 2);
    }

    #[test]
    fn stabilizer_examples() {
        let s3 = build_family(Family::Permutations { d: 3 }, &tol()).unwrap();
        assert_eq!(stabilizer_order(&s3, &dvector![0.0, 0.0, 0.0], &tol()).unwrap(), 6);
        assert_eq!(stabilizer_order(&s3, &dvector![1.0, 2.0, 3.0], &tol()).unwrap(), 1);
        assert_eq!(stabilizer_order(&s3, &dvector![1.0, 1.0, 2.0], &tol()).unwrap(), 2);
    }

    #[test]
    fn group_file_round_trip() {
        let file = GroupFile {
            dim: 2,
            generators: vec![vec![0.0, -1.0, 1.0, 0.0]],
        };
        let text = serde_json::to_string(&file).unwrap();
        let parsed: GroupFile = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.build(100, &tol()).unwrap().order(), 4);
    }
}
