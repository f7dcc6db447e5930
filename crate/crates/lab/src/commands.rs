//! One function per subcommand. Each returns an [`Outcome`] without touching
//! the filesystem; writing is left to the caller.

use maxfilter_core::bounds::{
    alpha_tilde, empirical_lipschitz, stability_report, theoretical_distortion_bound, upper_bound_exact,
    DistortionBoundParams, PairSampler, StabilityOptions,
};
use maxfilter_core::kernel::{is_reflection_group, search_psd_violation};
use maxfilter_core::quotient::{max_filter_circular_direct, max_filter_circular_fft};
use maxfilter_core::sampling::{derive_seed, gaussian_templates, gaussian_vector, task_rng};
use maxfilter_core::voronoi::{voronoi_characteristic, ChiEstimate, PRINCIPAL_RETRIES};
use maxfilter_core::{apply_bank, build_family, max_filter, quotient_distance, Error, Family, FiniteGroup, MaxFilterBank};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, TemplateSpec};
use crate::error::{LabError, LabResult};
use crate::report::{num, Assertion, CsvTable, Outcome, RunReport, Timings};

/// Slack on every inequality between a bound and a sampled ratio.
pub const SANDWICH_SLACK: f64 = 1e-7;
/// Slack on empirical versus certified distortion.
pub const KAPPA_SLACK: f64 = 1e-6;
/// Allowed FFT versus direct discrepancy.
pub const FFT_TOL: f64 = 1e-9;
/// Largest length at which the FFT path is also checked against the explicit shift group.
const GROUP_CHECK_MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bounds,
    Distortion,
    Injectivity,
    Kernel,
    Maxfilter,
    Chi,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Distortion => "distortion",
            Command::Injectivity => "injectivity",
            Command::Kernel => "kernel",
            Command::Maxfilter => "maxfilter",
            Command::Chi => "chi",
        }
    }
}

/// Independent seed streams derived from `--seed`.
mod stream {
    pub const TEMPLATES: u64 = 1;
    pub const CHI: u64 = 2;
    pub const PAIRS: u64 = 3;
    pub const TRIALS: u64 = 4;
    pub const KERNEL: u64 = 5;
    pub const SIGNALS: u64 = 6;
    pub const INJECTIVITY: u64 = 7;
}

pub fn run_command(command: Command, config: &ExperimentConfig, seed: u64) -> LabResult<Outcome> {
    config.validate()?;
    let mut timings = Timings::default();
    let (results, assertions, table, certified) = match command {
        Command::Bounds => cmd_bounds(config, seed, &mut timings)?,
        Command::Distortion => cmd_distortion(config, seed, &mut timings)?,
        Command::Injectivity => cmd_injectivity(config, seed, &mut timings)?,
        Command::Kernel => cmd_kernel(config, seed, &mut timings)?,
        Command::Maxfilter => cmd_maxfilter(config, seed, &mut timings)?,
        Command::Chi => cmd_chi(config, seed, &mut timings)?,
    };
    let passed = assertions.iter().all(|a| a.passed);
    Ok(Outcome {
        report: RunReport {
            command: command.name().to_string(),
            seed,
            config: config.clone(),
            results,
            assertions,
            certified,
            passed,
        },
        table,
        timings,
    })
}

type CommandOutput = (serde_json::Value, Vec<Assertion>, CsvTable, bool);

fn assertion(name: &str, anchor: &str, passed: bool, observed: f64, threshold: f64, tolerance: f64, detail: String) -> Assertion {
    Assertion {
        name: name.to_string(),
        anchor: anchor.to_string(),
        passed,
        observed,
        threshold,
        tolerance,
        detail,
    }
}

/// The configured `χ`, or a sampled lower bound when none is given.
fn resolve_chi(config: &ExperimentConfig, group: &FiniteGroup, seed: u64) -> LabResult<(usize, Option<ChiEstimate>)> {
    match config.chi {
        Some(chi) => Ok((chi, None)),
        None => {
            let est = voronoi_characteristic(group, config.chi_samples, derive_seed(seed, stream::CHI), &config.tolerances)?;
            Ok((est.chi_lower, Some(est)))
        }
    }
}

fn chi_json(chi: usize, estimate: &Option<ChiEstimate>) -> serde_json::Value {
    json!({ "value": chi, "source": if estimate.is_some() { "sampled" } else { "config" }, "estimate": estimate })
}

fn cmd_bounds(config: &ExperimentConfig, seed: u64, timings: &mut Timings) -> LabResult<CommandOutput> {
    let tol = config.tolerances;
    let group = config.build_group()?;
    let templates = config.load_templates(group.dim(), derive_seed(seed, stream::TEMPLATES))?;
    let has_minus_id = group.contains_minus_identity();
    let bank = MaxFilterBank::new(group, templates, &tol)?;
    let (chi, chi_estimate) = timings.time("chi", || resolve_chi(config, bank.group(), seed))?;
    let options = StabilityOptions {
        n_pairs: config.n_pairs,
        seed: derive_seed(seed, stream::PAIRS),
        chi,
        choice_cap: config.choice_cap,
        beta_budget: config.budgets.beta_exact,
        relaxed_budget: config.budgets.beta_relaxed,
        alpha_tilde_budget: config.budgets.alpha_tilde,
    };
    let report = timings.time("bounds", || stability_report(&bank, &options, &tol))?;

    let sampler = PairSampler::new(options.seed);
    let pairs = timings.time("sandwich", || {
        (0..config.n_pairs)
            .into_par_iter()
            .map(|k| {
                let (x, y) = sampler.pair(&bank, k, &tol)?;
                let d = quotient_distance(bank.group(), &x, &y, &tol)?;
                let diff = (apply_bank(&bank, &x)? - apply_bank(&bank, &y)?).norm();
                Ok((d, diff))
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;

    let mut table = CsvTable::new(&["pair", "distance", "delta_phi", "ratio", "sharp_value"]);
    for (k, &(d, diff)) in pairs.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            num(d),
            num(diff),
            num(report.pair_ratios[k]),
            num(report.pair_sharp_values[k]),
        ]);
    }

    let mut assertions = Vec::new();
    if report.alpha_tilde_certified {
        let worst = pairs
            .iter()
            .map(|&(d, diff)| diff - report.alpha_tilde * d)
            .fold(f64::INFINITY, f64::min);
        assertions.push(assertion(
            "sandwich_lower",
            "pigeonhole lower Lipschitz bound",
            worst >= -SANDWICH_SLACK,
            worst,
            -SANDWICH_SLACK,
            SANDWICH_SLACK,
            "min over pairs of |dPhi| - alpha_tilde * d".into(),
        ));
    }
    if report.beta_exact_certified {
        let worst = pairs
            .iter()
            .map(|&(d, diff)| diff - report.beta_exact * d)
            .fold(f64::NEG_INFINITY, f64::max);
        assertions.push(assertion(
            "sandwich_upper",
            "optimal upper Lipschitz bound for finite groups",
            worst <= SANDWICH_SLACK,
            worst,
            SANDWICH_SLACK,
            SANDWICH_SLACK,
            "max over pairs of |dPhi| - beta_exact * d".into(),
        ));
    }
    let mut chain = Vec::new();
    if report.alpha_tilde_certified {
        chain.push(("alpha_tilde", report.alpha_tilde));
    }
    chain.push(("alpha_sharp", report.alpha_sharp));
    chain.push(("alpha_empirical", report.alpha_empirical));
    chain.push(("beta_empirical", report.beta_empirical));
    if report.beta_exact_certified {
        chain.push(("beta_exact", report.beta_exact));
    }
    if report.beta_relaxed_certified {
        chain.push(("beta_relaxed", report.beta_relaxed));
    }
    let violation = chain.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::NEG_INFINITY, f64::max);
    assertions.push(assertion(
        "bound_ordering",
        "lower bounds below sampled ratios below upper bounds",
        violation <= SANDWICH_SLACK,
        violation,
        SANDWICH_SLACK,
        SANDWICH_SLACK,
        chain.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(" <= "),
    ));
    if has_minus_id && report.beta_exact_certified && report.beta_relaxed_certified {
        let gap = (report.beta_exact - report.beta_relaxed).abs();
        assertions.push(assertion(
            "minus_identity_equality",
            "upper bounds coincide when -id is in the group",
            gap <= 1e-9,
            gap,
            1e-9,
            1e-9,
            "|beta_exact - beta_relaxed|".into(),
        ));
    }

    let certified = report.beta_exact_certified && report.beta_relaxed_certified && report.alpha_tilde_certified;
    let results = json!({
        "group_order": bank.group().order(),
        "dim": bank.dim(),
        "n_templates": bank.len(),
        "chi": chi_json(chi, &chi_estimate),
        "stability": report,
    });
    Ok((results, assertions, table, certified))
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionTrial {
    pub trial: usize,
    pub template_seed: u64,
    pub beta_exact: Option<f64>,
    pub alpha_tilde: Option<f64>,
    pub kappa_certified: Option<f64>,
    pub alpha_empirical: f64,
    pub beta_empirical: f64,
    pub kappa_empirical: f64,
    pub within_bound: bool,
}

fn budget_ok<T>(r: Result<T, Error>) -> Result<Option<T>, Error> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BudgetExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cmd_distortion(config: &ExperimentConfig, seed: u64, timings: &mut Timings) -> LabResult<CommandOutput> {
    let tol = config.tolerances;
    let Some(TemplateSpec::Gaussian { n, seed: template_seed }) = &config.templates else {
        return Err(LabError::Config("distortion needs gaussian templates".into()));
    };
    let n = *n;
    let group = config.build_group()?;
    let dim = group.dim();
    let (chi, chi_estimate) = timings.time("chi", || resolve_chi(config, &group, seed))?;
    let params = DistortionBoundParams::new(group.order(), chi, dim, n, config.lambda0)?;
    let bound = theoretical_distortion_bound(&params)?;
    let trial_base = template_seed.unwrap_or_else(|| derive_seed(seed, stream::TRIALS));
    let pair_base = derive_seed(seed, stream::PAIRS);

    let trials = timings.time("trials", || {
        (0..config.n_trials)
            .into_par_iter()
            .map(|t| {
                let template_seed = derive_seed(trial_base, t as u64);
                let bank = MaxFilterBank::new(group.clone(), gaussian_templates(template_seed, dim, n), &tol)?;
                let beta = budget_ok(upper_bound_exact(&bank, &tol, config.budgets.beta_exact))?.map(|b| b.beta);
                let tilde = budget_ok(alpha_tilde(&bank, chi, &tol, config.budgets.alpha_tilde))?.map(|a| a.alpha);
                let sampler = PairSampler::new(derive_seed(pair_base, t as u64));
                let emp = empirical_lipschitz(&bank, sampler, config.n_pairs, &tol)?;
                let kappa_certified = match (beta, tilde) {
                    (Some(b), Some(a)) if a > 0.0 => Some(b / a),
                    _ => None,
                };
                Ok(DistortionTrial {
                    trial: t,
                    template_seed,
                    beta_exact: beta,
                    alpha_tilde: tilde,
                    kappa_certified,
                    alpha_empirical: emp.alpha,
                    beta_empirical: emp.beta,
                    kappa_empirical: emp.beta / emp.alpha,
                    within_bound: kappa_certified.is_some_and(|k| k <= bound),
                })
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;

    let n_trials = trials.len() as f64;
    let fraction = trials.iter().filter(|t| t.within_bound).count() as f64 / n_trials;
    let p = params.success_probability();
    let slack = 3.0 * (p * (1.0 - p) / n_trials).sqrt();
    let mut assertions = vec![assertion(
        "distortion_frequency",
        "distortion bound for Gaussian templates",
        fraction >= p - slack,
        fraction,
        p - slack,
        slack,
        format!("fraction of trials with certified kappa <= {bound:e}; target 1 - 3exp(-d sqrt(lambda)) = {p}"),
    )];
    let worst = trials
        .iter()
        .filter_map(|t| t.kappa_certified.map(|k| t.kappa_empirical - k))
        .fold(f64::NEG_INFINITY, f64::max);
    assertions.push(assertion(
        "empirical_below_certified",
        "sampled distortion never exceeds the certified distortion",
        !(worst > KAPPA_SLACK),
        worst,
        KAPPA_SLACK,
        KAPPA_SLACK,
        "max over certified trials of kappa_empirical - kappa_certified".into(),
    ));

    let mut table = CsvTable::new(&[
        "trial",
        "beta_exact",
        "alpha_tilde",
        "kappa_certified",
        "alpha_empirical",
        "beta_empirical",
        "kappa_empirical",
        "within_bound",
    ]);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for t in &trials {
        table.push(vec![
            t.trial.to_string(),
            opt(t.beta_exact),
            opt(t.alpha_tilde),
            opt(t.kappa_certified),
            num(t.alpha_empirical),
            num(t.beta_empirical),
            num(t.kappa_empirical),
            t.within_bound.to_string(),
        ]);
    }
    let certified = trials.iter().all(|t| t.beta_exact.is_some() && t.alpha_tilde.is_some());
    let results = json!({
        "group_order": group.order(),
        "dim": dim,
        "n_templates": n,
        "chi": chi_json(chi, &chi_estimate),
        "params": params,
        "bound": bound,
        "success_probability": p,
        "fraction_within_bound": fraction,
        "trials": trials,
    });
    Ok((results, assertions, table, certified))
}

#[derive(Debug, Clone, Serialize)]
pub struct CollisionRun {
    pub n_templates: usize,
    pub template_seed: u64,
    pub collisions: usize,
    pub min_delta_phi: f64,
    pub min_ratio: f64,
    pub alpha_tilde: Option<f64>,
}

fn draw_separated_pair(
    group: &FiniteGroup,
    seed: u64,
    k: usize,
    min_distance: f64,
    config: &ExperimentConfig,
) -> Result<(DVector<f64>, DVector<f64>, f64), Error> {
    let mut rng = task_rng(seed, k as u64);
    for _ in 0..PRINCIPAL_RETRIES {
        let x = gaussian_vector(&mut rng, group.dim());
        let y = gaussian_vector(&mut rng, group.dim());
        let d = quotient_distance(group, &x, &y, &config.tolerances)?;
        if d > min_distance {
            return Ok((x, y, d));
        }
    }
    Err(Error::NotNicePoint {
        reason: format!("pair {k}: no pair farther apart than {min_distance}"),
    })
}

fn cmd_injectivity(config: &ExperimentConfig, seed: u64, timings: &mut Timings) -> LabResult<CommandOutput> {
    let tol = config.tolerances;
    let group = config.build_group()?;
    let dim = group.dim();
    let (chi, chi_estimate) = timings.time("chi", || resolve_chi(config, &group, seed))?;
    let threshold_n = chi * (dim - 1) + 1;
    let mut sizes = vec![2 * dim];
    if threshold_n != 2 * dim {
        sizes.push(threshold_n);
    }
    let pair_seed = derive_seed(seed, stream::PAIRS);
    let mut table = CsvTable::new(&["n_templates", "pair", "distance", "delta_phi", "ratio"]);
    let mut runs = Vec::new();
    let mut assertions = Vec::new();
    let mut certified = true;
    for &n in &sizes {
        let template_seed = derive_seed(derive_seed(seed, stream::INJECTIVITY), n as u64);
        let bank = MaxFilterBank::new(group.clone(), gaussian_templates(template_seed, dim, n), &tol)?;
        let samples = timings.time(&format!("pairs_n{n}"), || {
            (0..config.n_pairs)
                .into_par_iter()
                .map(|k| {
                    let (x, y, d) = draw_separated_pair(&group, pair_seed, k, config.min_pair_distance, config)?;
                    let diff = (apply_bank(&bank, &x)? - apply_bank(&bank, &y)?).norm();
                    Ok((d, diff))
                })
                .collect::<Result<Vec<_>, Error>>()
        })?;
        let tilde = budget_ok(alpha_tilde(&bank, chi, &tol, config.budgets.alpha_tilde))?.map(|a| a.alpha);
        certified &= tilde.is_some();
        let collisions = samples.iter().filter(|s| s.1 < config.collision_tol).count();
        let min_delta_phi = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let min_ratio = samples.iter().map(|s| s.1 / s.0).fold(f64::INFINITY, f64::min);
        for (k, &(d, diff)) in samples.iter().enumerate() {
            table.push(vec![n.to_string(), k.to_string(), num(d), num(diff), num(diff / d)]);
        }
        assertions.push(assertion(
            &format!("no_collisions_n{n}"),
            if n == 2 * dim {
                "injectivity with 2d generic templates"
            } else {
                "generic bilipschitz above chi (d - 1) templates"
            },
            collisions == 0,
            collisions as f64,
            0.0,
            config.collision_tol,
            format!("pairs with |dPhi| < {} among {} with d > {}", config.collision_tol, config.n_pairs, config.min_pair_distance),
        ));
        if n == threshold_n {
            if let Some(a) = tilde {
                assertions.push(assertion(
                    "alpha_tilde_positive_at_threshold",
                    "generic bilipschitz above chi (d - 1) templates",
                    a > 0.0,
                    a,
                    0.0,
                    0.0,
                    format!("alpha_tilde with n = chi (d - 1) + 1 = {n}"),
                ));
            }
        }
        runs.push(CollisionRun {
            n_templates: n,
            template_seed,
            collisions,
            min_delta_phi,
            min_ratio,
            alpha_tilde: tilde,
        });
    }
    let results = json!({
        "group_order": group.order(),
        "dim": dim,
        "chi": chi_json(chi, &chi_estimate),
        "runs": runs,
    });
    Ok((results, assertions, table, certified))
}

fn cmd_kernel(config: &ExperimentConfig, seed: u64, timings: &mut Timings) -> LabResult<CommandOutput> {
    let tol = config.tolerances;
    let group = config.build_group()?;
    let reflection = timings.time("reflection", || {
        is_reflection_group(&group, config.chi_samples, derive_seed(seed, stream::CHI), &tol)
    })?;
    let search = timings.time("psd_search", || {
        search_psd_violation(&group, config.n_trials, config.points_per_trial, derive_seed(seed, stream::KERNEL), &tol)
    })?;
    let mut assertions = vec![assertion(
        "kernel_dichotomy",
        "max filtering kernel is positive definite exactly for reflection groups",
        reflection.is_reflection != search.found,
        search.found as u8 as f64,
        (!reflection.is_reflection) as u8 as f64,
        tol.psd_tol,
        format!(
            "reflection group = {}, PSD violation found = {} after {} trials",
            reflection.is_reflection, search.found, search.trials_run
        ),
    )];
    let mut table = CsvTable::new(&["point", "coefficient", "coordinates"]);
    if let Some(audit) = &search.certificate {
        let points: Vec<DVector<f64>> = audit.points.iter().map(|p| DVector::from_vec(p.clone())).collect();
        let c = &audit.certificate;
        let mut form = 0.0;
        let mut max_diag = 0.0f64;
        for i in 0..points.len() {
            for j in 0..points.len() {
                let k = max_filter(&group, &points[i], &points[j])?.value();
                form += c[i] * c[j] * k;
                if i == j {
                    max_diag = max_diag.max(k);
                }
            }
        }
        let threshold = -tol.psd_tol * (1.0 + max_diag);
        assertions.push(assertion(
            "certificate_recheck",
            "max filtering kernel is positive definite exactly for reflection groups",
            form < threshold,
            form,
            threshold,
            tol.psd_tol,
            "c^T K c recomputed from the stored points".into(),
        ));
        for (i, p) in audit.points.iter().enumerate() {
            let coords: Vec<String> = p.iter().map(|v| num(*v)).collect();
            table.push(vec![i.to_string(), num(c[i]), coords.join(" ")]);
        }
    }
    let results = json!({
        "group_order": group.order(),
        "dim": group.dim(),
        "reflection": reflection,
        "psd_search": search,
    });
    Ok((results, assertions, table, true))
}

#[derive(Debug, Clone, Serialize)]
pub struct FftCheck {
    pub d: usize,
    pub pairs: usize,
    pub max_discrepancy: f64,
    /// Largest discrepancy against the explicit shift group, for short signals.
    pub max_group_discrepancy: Option<f64>,
}

fn cmd_maxfilter(config: &ExperimentConfig, seed: u64, timings: &mut Timings) -> LabResult<CommandOutput> {
    let tol = config.tolerances;
    let signal_seed = derive_seed(seed, stream::SIGNALS);
    let mut table = CsvTable::new(&["d", "pair", "fft", "direct", "abs_diff"]);
    let mut checks = Vec::new();
    let mut assertions = Vec::new();
    for &d in &config.dims {
        let signals: Vec<(Vec<f64>, Vec<f64>)> = (0..config.n_pairs)
            .map(|k| {
                let mut rng = task_rng(derive_seed(signal_seed, d as u64), k as u64);
                let f = gaussian_vector(&mut rng, d).as_slice().to_vec();
                let g = gaussian_vector(&mut rng, d).as_slice().to_vec();
                (f, g)
            })
            .collect();
        let fft = timings.time(&format!("fft_d{d}"), || {
            signals
                .iter()
                .map(|(f, g)| max_filter_circular_fft(f, g).map(|v| v.value()))
                .collect::<Result<Vec<_>, Error>>()
        })?;
        let direct = timings.time(&format!("direct_d{d}"), || {
            signals
                .iter()
                .map(|(f, g)| max_filter_circular_direct(f, g).map(|v| v.value()))
                .collect::<Result<Vec<_>, Error>>()
        })?;
        let max_group_discrepancy = if d <= GROUP_CHECK_MAX_DIM {
            let group = build_family(Family::CircularShifts { d }, &tol)?;
            let mut worst = 0.0f64;
            for ((f, g), v) in signals.iter().zip(&fft) {
                let brute = max_filter(&group, &DVector::from_vec(f.clone()), &DVector::from_vec(g.clone()))?.value();
                worst = worst.max((brute - v).abs());
            }
            Some(worst)
        } else {
            None
        };
        let mut worst = 0.0f64;
        for (k, (a, b)) in fft.iter().zip(&direct).enumerate() {
            let diff = (a - b).abs();
            worst = worst.max(diff);
            table.push(vec![d.to_string(), k.to_string(), num(*a), num(*b), num(diff)]);
        }
        let observed = worst.max(max_group_discrepancy.unwrap_or(0.0));
        assertions.push(assertion(
            &format!("fft_agreement_d{d}"),
            "linearithmic max filtering for circular shifts",
            observed <= FFT_TOL,
            observed,
            FFT_TOL,
            FFT_TOL,
            format!("max |fft - brute force| over {} pairs", config.n_pairs),
        ));
        checks.push(FftCheck {
            d,
            pairs: config.n_pairs,
            max_discrepancy: worst,
            max_group_discrepancy,
        });
    }
    Ok((json!({ "checks": checks }), assertions, table, true))
}

fn cmd_chi(config: &ExperimentConfig, seed: u64, timings: &mut Timings) -> LabResult<CommandOutput> {
    let group = config.build_group()?;
    let estimate = timings.time("chi", || {
        voronoi_characteristic(&group, config.chi_samples, derive_seed(seed, stream::CHI), &config.tolerances)
    })?;
    let order = group.order();
    let assertions = vec![assertion(
        "chi_in_range",
        "Voronoi characteristic lies between 1 and the group order",
        (1..=order).contains(&estimate.chi_lower),
        estimate.chi_lower as f64,
        order as f64,
        0.0,
        "1 <= chi_lower <= |G|".into(),
    )];
    let mut table = CsvTable::new(&["chi_lower", "saturated", "samples_evaluated", "group_order"]);
    table.push(vec![
        estimate.chi_lower.to_string(),
        estimate.saturated.to_string(),
        estimate.samples_evaluated.to_string(),
        order.to_string(),
    ]);
    let results = json!({ "group_order": order, "dim": group.dim(), "chi": estimate });
    Ok((results, assertions, table, true))
}
