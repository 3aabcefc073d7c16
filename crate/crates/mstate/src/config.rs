//! Run configuration: a JSON document describing one model, one grid, one
//! ensemble and the payment specifications to value on it.
//!
//! [`RunConfig`] is the serialized form; [`RunConfig::resolve`] validates it
//! field by field and produces the concrete engine objects. Everything the
//! pipeline does is a pure function of a resolved configuration, which is
//! what makes runs reproducible.

use serde::{Deserialize, Serialize};

use crate::cashflow::{CashflowSpec1D, FreePolicySpec};
use crate::error::{Error, Result};
use crate::estimate::ConditioningScheme;
use crate::grid::{StateSpace, TimeGrid};
use crate::measure::Measure1D;
use crate::simulate::{DiscountCurve, IntensityModel, RateFn};

/// Grid section: horizon, step and pivot time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub t_max: f64,
    pub step: f64,
    pub pivot: f64,
}

/// Discount section: a flat short rate or explicit factors per grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiscountConfig {
    Flat { rate: f64 },
    Table { kappa: Vec<f64> },
}

/// State-space section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatesConfig {
    pub labels: Vec<String>,
    /// Labels of the scheme block for free-policy products.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Vec<String>>,
    pub initial: String,
}

/// One declared transition intensity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntensityConfig {
    pub from: String,
    pub to: String,
    pub rate: RateFn,
}

/// Ensemble section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub seed: u64,
}

/// Conditioning section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum ConditioningConfig {
    AsIfMarkov,
    StateDuration { edges: Vec<f64> },
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        ConditioningConfig::AsIfMarkov
    }
}

/// A sojourn payment atom at an absolute time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomConfig {
    pub t: f64,
    pub value: f64,
}

/// Sojourn payments of one state: point atoms plus an optional payment rate
/// (lumped into right-endpoint atoms).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SojournConfig {
    pub state: String,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<RateFn>,
}

/// A constant payment on one transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionPaymentConfig {
    pub from: String,
    pub to: String,
    pub value: f64,
}

/// One named 1D payment specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CashflowConfig {
    pub name: String,
    #[serde(default)]
    pub sojourn: Vec<SojournConfig>,
    #[serde(default)]
    pub transition: Vec<TransitionPaymentConfig>,
}

/// Conversion factor of one exercise transition, sampled from a time
/// function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoConfig {
    pub from: String,
    pub to: String,
    pub factor: RateFn,
}

/// Free-policy section.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreePolicyConfig {
    #[serde(default)]
    pub sojourn: Vec<SojournConfig>,
    #[serde(default)]
    pub transition: Vec<TransitionPaymentConfig>,
    pub rho: Vec<RhoConfig>,
}

fn default_k_sigma() -> f64 {
    3.0
}

/// A complete run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub grid: GridConfig,
    pub discount: DiscountConfig,
    pub states: StatesConfig,
    pub intensities: Vec<IntensityConfig>,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub conditioning: ConditioningConfig,
    #[serde(default)]
    pub cashflows: Vec<CashflowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_policy: Option<FreePolicyConfig>,
    /// Conditioning cells to process (textual labels); all observed cells
    /// when absent. Requesting an unobserved cell is an error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Width of the oracle comparison band in standard errors.
    #[serde(default = "default_k_sigma")]
    pub k_sigma: f64,
}

/// Concrete engine objects resolved from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub space: StateSpace,
    pub grid: TimeGrid,
    pub model: IntensityModel,
    pub discount: DiscountCurve,
    pub scheme: ConditioningScheme,
    pub n_paths: usize,
    pub seed: u64,
    pub specs: Vec<(String, CashflowSpec1D)>,
    pub free_policy: Option<FreePolicySpec>,
    pub requested_labels: Option<Vec<String>>,
    pub k_sigma: f64,
}

impl RunConfig {
    /// Parse from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Serialize to pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Validate and build the engine objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let space = match &self.states.scheme {
            None => StateSpace::new(self.states.labels.clone())?,
            Some(scheme) => {
                let refs: Vec<&str> = scheme.iter().map(String::as_str).collect();
                StateSpace::with_partition(self.states.labels.clone(), &refs)?
            }
        };
        let grid = TimeGrid::new(self.grid.t_max, self.grid.step, self.grid.pivot)?;
        let initial = space.index_of(&self.states.initial)?;
        let mut model = IntensityModel::new(space.len(), initial)?;
        if self.intensities.is_empty() {
            return Err(Error::InvalidConfig {
                field: "intensities".into(),
                message: "at least one transition intensity is required".into(),
            });
        }
        for ic in &self.intensities {
            let from = space.index_of(&ic.from)?;
            let to = space.index_of(&ic.to)?;
            model = model.with_rate(from, to, ic.rate.clone())?;
        }
        let discount = match &self.discount {
            DiscountConfig::Flat { rate } => DiscountCurve::flat(&grid, *rate),
            DiscountConfig::Table { kappa } => {
                if kappa.len() != grid.len() {
                    return Err(Error::InvalidConfig {
                        field: "discount.kappa".into(),
                        message: format!(
                            "{} factors for {} grid points",
                            kappa.len(),
                            grid.len()
                        ),
                    });
                }
                DiscountCurve::from_values(kappa.clone())?
            }
        };
        let scheme = match &self.conditioning {
            ConditioningConfig::AsIfMarkov => ConditioningScheme::AsIfMarkov,
            ConditioningConfig::StateDuration { edges } => {
                ConditioningScheme::StateDuration { edges: edges.clone() }
            }
        };
        scheme.validate()?;
        if self.ensemble.n_paths == 0 {
            return Err(Error::InvalidConfig {
                field: "ensemble.n_paths".into(),
                message: "need at least one path".into(),
            });
        }

        let mut specs = Vec::new();
        for cf in &self.cashflows {
            let mut spec = CashflowSpec1D::new(space.len(), grid.len());
            for so in &cf.sojourn {
                let i = space.index_of(&so.state)?;
                let mut m = match &so.density {
                    Some(rate) => Measure1D::from_rate(&grid, |t| rate.eval(t, 0.0)),
                    None => Measure1D::zeros(grid.len()),
                };
                for atom in &so.atoms {
                    m.add_atom(grid.index_of(atom.t)?, atom.value);
                }
                spec = spec.with_sojourn(i, m)?;
            }
            for tp in &cf.transition {
                let i = space.index_of(&tp.from)?;
                let j = space.index_of(&tp.to)?;
                spec = spec.with_transition_const(i, j, tp.value)?;
            }
            specs.push((cf.name.clone(), spec));
        }

        let free_policy = match &self.free_policy {
            None => None,
            Some(fpc) => {
                let mut fp = FreePolicySpec::new(space.len(), grid.len());
                for so in &fpc.sojourn {
                    let i = space.index_of(&so.state)?;
                    let mut m = match &so.density {
                        Some(rate) => Measure1D::from_rate(&grid, |t| rate.eval(t, 0.0)),
                        None => Measure1D::zeros(grid.len()),
                    };
                    for atom in &so.atoms {
                        m.add_atom(grid.index_of(atom.t)?, atom.value);
                    }
                    fp = fp.with_sojourn(i, m)?;
                }
                for tp in &fpc.transition {
                    let i = space.index_of(&tp.from)?;
                    let j = space.index_of(&tp.to)?;
                    fp = fp.with_transition_const(i, j, tp.value)?;
                }
                for rc in &fpc.rho {
                    let k = space.index_of(&rc.from)?;
                    let l = space.index_of(&rc.to)?;
                    let samples: Vec<f64> =
                        (0..grid.len()).map(|m| rc.factor.eval(grid.time(m), 0.0)).collect();
                    fp = fp.with_rho(k, l, samples)?;
                }
                fp.validate(&space)?;
                Some(fp)
            }
        };

        if self.cashflows.is_empty() && free_policy.is_none() {
            return Err(Error::InvalidConfig {
                field: "cashflows".into(),
                message: "nothing to value: no cashflows and no free_policy section".into(),
            });
        }

        Ok(Resolved {
            name: self.name.clone(),
            space,
            grid,
            model,
            discount,
            scheme,
            n_paths: self.ensemble.n_paths,
            seed: self.ensemble.seed,
            specs,
            free_policy,
            requested_labels: self.labels.clone(),
            k_sigma: self.k_sigma,
        })
    }
}
