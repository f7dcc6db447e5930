//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use maxfilter_core::group::{build_family_capped, GroupFile, DEFAULT_ORDER_CAP};
use maxfilter_core::quotient::read_templates_csv;
use maxfilter_core::sampling::gaussian_templates;
use maxfilter_core::{Family, FiniteGroup, TolerancePolicy};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    File {
        file: PathBuf,
    },
    Family(Family),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TemplateSpec {
    /// CSV file, one template per row.
    Path(PathBuf),
    /// `n` standard Gaussian templates; the seed defaults to one derived from `--seed`.
    Gaussian { n: usize, seed: Option<u64> },
    Inline(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Feasibility checks in the exact upper-bound search.
    pub beta_exact: u64,
    /// Tuples in the relaxed upper-bound search.
    pub beta_relaxed: u64,
    /// Search nodes in the pigeonhole lower-bound search.
    pub alpha_tilde: u64,
    /// Largest group the closure or a family build may produce.
    pub max_order: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            beta_exact: 10_000_000,
            beta_relaxed: 10_000_000,
            alpha_tilde: 100_000_000,
            max_order: DEFAULT_ORDER_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required by every command except `maxfilter`, which always uses circular shifts.
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub templates: Option<TemplateSpec>,
    #[serde(default = "defaults::n_pairs")]
    pub n_pairs: usize,
    #[serde(default = "defaults::n_trials")]
    pub n_trials: usize,
    #[serde(default = "defaults::lambda0")]
    pub lambda0: f64,
    /// Known Voronoi characteristic; sampled with `chi_samples` pairs when absent.
    #[serde(default)]
    pub chi: Option<usize>,
    #[serde(default = "defaults::chi_samples")]
    pub chi_samples: usize,
    /// Cap on enumerated choice functions per pair.
    #[serde(default = "defaults::choice_cap")]
    pub choice_cap: usize,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub tolerances: TolerancePolicy,
    /// Signal lengths for the circular max filter cross-check.
    #[serde(default = "defaults::dims")]
    pub dims: Vec<usize>,
    #[serde(default = "defaults::points_per_trial")]
    pub points_per_trial: usize,
    /// Pairs closer than this are redrawn in the collision search.
    #[serde(default = "defaults::min_pair_distance")]
    pub min_pair_distance: f64,
    /// `‖Φx − Φy‖` below this counts as a collision.
    #[serde(default = "defaults::collision_tol")]
    pub collision_tol: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

mod defaults {
    pub fn n_pairs() -> usize {
        1000
    }
    pub fn n_trials() -> usize {
        50
    }
    pub fn lambda0() -> f64 {
        4.0
    }
    pub fn chi_samples() -> usize {
        1000
    }
    pub fn choice_cap() -> usize {
        4096
    }
    pub fn dims() -> Vec<usize> {
        vec![4, 16, 64, 256]
    }
    pub fn points_per_trial() -> usize {
        6
    }
    pub fn min_pair_distance() -> f64 {
        1e-3
    }
    pub fn collision_tol() -> f64 {
        1e-9
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> LabResult<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config; relative file paths inside it resolve against its directory.
    pub fn read(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(GroupSpec::File { file }) = &mut config.group {
            *file = resolve(base, file);
        }
        if let Some(TemplateSpec::Path(p)) = &mut config.templates {
            *p = resolve(base, p);
        }
        Ok(config)
    }

    pub fn validate(&self) -> LabResult<()> {
        let counts = [
            ("n_pairs", self.n_pairs),
            ("n_trials", self.n_trials),
            ("chi_samples", self.chi_samples),
            ("choice_cap", self.choice_cap),
            ("points_per_trial", self.points_per_trial),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(LabError::Config(format!("{name} must be positive")));
            }
        }
        if self.chi == Some(0) {
            return Err(LabError::Config("chi must be positive".into()));
        }
        if let Some(TemplateSpec::Gaussian { n: 0, .. }) = self.templates {
            return Err(LabError::Config("gaussian template count must be positive".into()));
        }
        if self.dims.contains(&0) {
            return Err(LabError::Config("dims must be positive".into()));
        }
        self.tolerances.validate()?;
        Ok(())
    }

    pub fn build_group(&self) -> LabResult<FiniteGroup> {
        let tol = &self.tolerances;
        Ok(match &self.group {
            None => return Err(LabError::Config("this command needs a group entry".into())),
            Some(GroupSpec::Family(family)) => build_family_capped(*family, self.budgets.max_order, tol)?,
            Some(GroupSpec::File { file }) => GroupFile::read(file)?.build(self.budgets.max_order, tol)?,
        })
    }

    /// Templates as configured; Gaussian draws without a seed use `fallback_seed`.
    pub fn load_templates(&self, dim: usize, fallback_seed: u64) -> LabResult<Vec<DVector<f64>>> {
        let templates = match &self.templates {
            None => return Err(LabError::Config("this command needs a templates entry".into())),
            Some(TemplateSpec::Path(path)) => read_templates_csv(path)?,
            Some(TemplateSpec::Gaussian { n, seed }) => gaussian_templates(seed.unwrap_or(fallback_seed), dim, *n),
            Some(TemplateSpec::Inline(rows)) => rows.iter().map(|r| DVector::from_vec(r.clone())).collect(),
        };
        if let Some(bad) = templates.iter().find(|z| z.len() != dim) {
            return Err(LabError::Config(format!(
                "template of length {} does not match the group dimension {dim}",
                bad.len()
            )));
        }
        Ok(templates)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
