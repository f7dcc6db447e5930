//! The max filtering map `⟨⟨[x],[y]⟩⟩ = max_g ⟨g·x, y⟩`, the quotient metric it
//! induces through the polarization identity, and max filter banks.

use std::path::Path;

use nalgebra::DVector;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::group::{orbit_of, FiniteGroup, Orbit};
use crate::tol::TolerancePolicy;

/// Value of the max filtering map for one pair of orbits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FilterValue(pub f64);

impl FilterValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `max_g ⟨g·x, y⟩` by brute force over the group.
pub fn max_filter(group: &FiniteGroup, x: &DVector<f64>, y: &DVector<f64>) -> Result<FilterValue> {
    group.check_dim(x)?;
    group.check_dim(y)?;
    let best = group
        .elements()
        .iter()
        .map(|g| g.apply(x).dot(y))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FilterValue(best))
}

/// Same as [`max_filter`], except that groups built as
/// [`Family::CircularShifts`](crate::group::Family::CircularShifts) go through
/// the FFT cross-correlation.
pub fn max_filter_fast(group: &FiniteGroup, x: &DVector<f64>, y: &DVector<f64>) -> Result<FilterValue> {
    if group.is_circular_shift_family() {
        group.check_dim(x)?;
        group.check_dim(y)?;
        max_filter_circular_fft(x.as_slice(), y.as_slice())
    } else {
        max_filter(group, x, y)
    }
}

/// Max of `⟨p, y⟩` over a precomputed orbit.
pub fn max_over_orbit(orbit: &Orbit, y: &DVector<f64>) -> f64 {
    orbit
        .points()
        .iter()
        .map(|p| p.dot(y))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `d([x],[y]) = √(‖x‖² + ‖y‖² − 2⟨⟨[x],[y]⟩⟩)`.
///
/// Radicands down to `−eq_tol·(1 + ‖x‖² + ‖y‖²)` are float noise and clamp
/// to zero; anything below that means the group is not orthogonal or closed.
pub fn quotient_distance(
    group: &FiniteGroup,
    x: &DVector<f64>,
    y: &DVector<f64>,
    tol: &TolerancePolicy,
) -> Result<f64> {
    let filter = max_filter(group, x, y)?.value();
    radicand_to_distance(x.norm_squared() + y.norm_squared() - 2.0 * filter, x, y, tol)
}

fn radicand_to_distance(radicand: f64, x: &DVector<f64>, y: &DVector<f64>, tol: &TolerancePolicy) -> Result<f64> {
    let scale = 1.0 + x.norm_squared() + y.norm_squared();
    if radicand < -tol.eq_tol * scale {
        return Err(Error::NegativeRadicand { value: radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// `min_g ‖x − g·y‖`, the orbit-minimum definition of the quotient metric.
pub fn quotient_distance_brute(group: &FiniteGroup, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    group.check_dim(x)?;
    group.check_dim(y)?;
    Ok(group
        .elements()
        .iter()
        .map(|g| (x - g.apply(y)).norm())
        .fold(f64::INFINITY, f64::min))
}

/// `max_a Σ_t f(t)·g(t − a)` over cyclic shifts `a`, through a length-`d` DFT.
pub fn max_filter_circular_fft(f: &[f64], g: &[f64]) -> Result<FilterValue> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    let d = f.len();
    if d == 0 {
        return Ok(FilterValue(0.0));
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(d);
    let inverse = planner.plan_fft_inverse(d);

    let mut fs: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut gs: Vec<Complex<f64>> = g.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward.process(&mut fs);
    forward.process(&mut gs);
    // c(a) = Σ_t f(t) g(t − a)  ⇔  C = F · conj(G)
    let mut corr: Vec<Complex<f64>> = fs.iter().zip(&gs).map(|(a, b)| a * b.conj()).collect();
    inverse.process(&mut corr);
    let scale = 1.0 / d as f64;
    let best = corr
        .iter()
        .map(|c| c.re * scale)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FilterValue(best))
}

/// Direct evaluation of the circular cross-correlation maximum, `O(d²)`.
pub fn max_filter_circular_direct(f: &[f64], g: &[f64]) -> Result<FilterValue> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    let d = f.len();
    let best = (0..d)
        .map(|a| (0..d).map(|t| f[t] * g[(t + d - a) % d]).sum::<f64>())
        .fold(if d == 0 { 0.0 } else { f64::NEG_INFINITY }, f64::max);
    Ok(FilterValue(best))
}

/// A finite group together with templates `z₁,…,z_n`, realizing
/// `Φ([x]) = (⟨⟨[z_i],[x]⟩⟩)_i`.
#[derive(Debug, Clone)]
pub struct MaxFilterBank {
    group: FiniteGroup,
    templates: Vec<DVector<f64>>,
    template_orbits: Vec<Orbit>,
}

impl MaxFilterBank {
    pub fn new(group: FiniteGroup, templates: Vec<DVector<f64>>, tol: &TolerancePolicy) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::InvalidInput("a bank needs at least one template".into()));
        }
        let template_orbits = templates
            .iter()
            .map(|z| orbit_of(&group, z, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            group,
            templates,
            template_orbits,
        })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn templates(&self) -> &[DVector<f64>] {
        &self.templates
    }

    pub fn template_orbits(&self) -> &[Orbit] {
        &self.template_orbits
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.group.dim()
    }

    /// Same bank with every template multiplied by `s`.
    pub fn scaled(&self, s: f64, tol: &TolerancePolicy) -> Result<Self> {
        Self::new(
            self.group.clone(),
            self.templates.iter().map(|z| z * s).collect(),
            tol,
        )
    }

    pub fn with_template(&self, z: DVector<f64>, tol: &TolerancePolicy) -> Result<Self> {
        let mut templates = self.templates.clone();
        templates.push(z);
        Self::new(self.group.clone(), templates, tol)
    }
}

/// `Φ(x)`; component `i` is `max_g ⟨g·z_i, x⟩`.
pub fn apply_bank(bank: &MaxFilterBank, x: &DVector<f64>) -> Result<DVector<f64>> {
    bank.group.check_dim(x)?;
    Ok(DVector::from_iterator(
        bank.len(),
        bank.template_orbits.iter().map(|orbit| max_over_orbit(orbit, x)),
    ))
}

/// Reads templates from CSV: one template per row, `d` comma-separated reals,
/// no header.
pub fn read_templates_csv(path: &Path) -> Result<Vec<DVector<f64>>> {
    let file = std::fs::File::open(path)?;
    parse_templates_csv(file)
}

pub fn parse_templates_csv<R: std::io::Read>(reader: R) -> Result<Vec<DVector<f64>>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut templates = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    Error::InvalidInput(format!("template row {row}: cannot parse {field:?}: {e}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = templates.first().map(|t: &DVector<f64>| t.len()) {
            if first != values.len() {
                return Err(Error::DimensionMismatch {
                    expected: first,
                    found: values.len(),
                });
            }
        }
        templates.push(DVector::from_vec(values));
    }
    Ok(templates)
}

pub fn write_templates_csv<W: std::io::Write>(writer: W, templates: &[DVector<f64>]) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for z in templates {
        csv.write_record(z.iter().map(|v| format!("{v:?}")))?;
    }
    csv.flush()?;
    Ok(())
}
