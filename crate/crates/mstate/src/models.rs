//! Shipped example configurations.
//!
//! Three models of increasing structure, each a complete [`RunConfig`]:
//!
//! * `two_state` — active/dead with a constant mortality hazard. Markov, so
//!   every pipeline quantity has a closed form to check against.
//! * `disability` — active/disabled/dead with duration-dependent recovery
//!   and disabled mortality: the canonical non-Markov disability product.
//! * `free_policy` — a four-state conversion product: premium-paying block
//!   (active/dead) and converted block (active/dead), with a gated exercise
//!   intensity, duration-dependent mortality after conversion, and a
//!   time-dependent conversion factor on converted payments.

use crate::config::{
    AtomConfig, CashflowConfig, ConditioningConfig, DiscountConfig, EnsembleConfig,
    FreePolicyConfig, GridConfig, IntensityConfig, RhoConfig, RunConfig, SojournConfig,
    StatesConfig, TransitionPaymentConfig,
};
use crate::error::{Error, Result};
use crate::simulate::RateFn;

/// Names of the shipped configurations.
pub fn example_names() -> &'static [&'static str] {
    &["two_state", "disability", "free_policy"]
}

/// The shipped configuration with the given name.
pub fn example_config(name: &str) -> Result<RunConfig> {
    match name {
        "two_state" => Ok(two_state()),
        "disability" => Ok(disability()),
        "free_policy" => Ok(free_policy()),
        other => Err(Error::InvalidConfig {
            field: "model".into(),
            message: format!(
                "unknown example `{other}`; available: {}",
                example_names().join(", ")
            ),
        }),
    }
}

fn two_state() -> RunConfig {
    RunConfig {
        name: "two_state".into(),
        grid: GridConfig { t_max: 10.0, step: 0.02, pivot: 5.0 },
        discount: DiscountConfig::Flat { rate: 0.03 },
        states: StatesConfig {
            labels: vec!["active".into(), "dead".into()],
            scheme: None,
            initial: "active".into(),
        },
        intensities: vec![IntensityConfig {
            from: "active".into(),
            to: "dead".into(),
            rate: RateFn::Constant { value: 0.1 },
        }],
        ensemble: EnsembleConfig { n_paths: 50_000, seed: 2024_08_01 },
        conditioning: ConditioningConfig::AsIfMarkov,
        cashflows: vec![
            CashflowConfig {
                name: "term_insurance".into(),
                sojourn: vec![],
                transition: vec![TransitionPaymentConfig {
                    from: "active".into(),
                    to: "dead".into(),
                    value: 1.0,
                }],
            },
            CashflowConfig {
                name: "pure_endowment".into(),
                sojourn: vec![SojournConfig {
                    state: "active".into(),
                    atoms: vec![AtomConfig { t: 10.0, value: 1.0 }],
                    density: None,
                }],
                transition: vec![],
            },
        ],
        free_policy: None,
        labels: None,
        k_sigma: 3.0,
    }
}

fn disability() -> RunConfig {
    RunConfig {
        name: "disability".into(),
        grid: GridConfig { t_max: 10.0, step: 0.02, pivot: 5.0 },
        discount: DiscountConfig::Flat { rate: 0.03 },
        states: StatesConfig {
            labels: vec!["active".into(), "disabled".into(), "dead".into()],
            scheme: None,
            initial: "active".into(),
        },
        intensities: vec![
            IntensityConfig {
                from: "active".into(),
                to: "disabled".into(),
                rate: RateFn::Constant { value: 0.15 },
            },
            IntensityConfig {
                from: "active".into(),
                to: "dead".into(),
                rate: RateFn::TimeLinear { intercept: 0.02, slope: 0.001 },
            },
            // Recovery fades with time spent disabled: the non-Markov part.
            IntensityConfig {
                from: "disabled".into(),
                to: "active".into(),
                rate: RateFn::DurationExp { base: 0.0, amp: 0.5, decay: 0.8 },
            },
            IntensityConfig {
                from: "disabled".into(),
                to: "dead".into(),
                rate: RateFn::DurationLinear { base: 0.04, slope: 0.01 },
            },
        ],
        ensemble: EnsembleConfig { n_paths: 50_000, seed: 7 },
        conditioning: ConditioningConfig::AsIfMarkov,
        cashflows: vec![
            CashflowConfig {
                name: "disability_annuity".into(),
                sojourn: vec![SojournConfig {
                    state: "disabled".into(),
                    atoms: vec![],
                    density: Some(RateFn::Constant { value: 1.0 }),
                }],
                transition: vec![],
            },
            CashflowConfig {
                name: "full_product".into(),
                sojourn: vec![
                    SojournConfig {
                        state: "disabled".into(),
                        atoms: vec![],
                        density: Some(RateFn::Constant { value: 1.0 }),
                    },
                    SojournConfig {
                        state: "active".into(),
                        atoms: vec![],
                        density: Some(RateFn::Constant { value: -0.3 }),
                    },
                ],
                transition: vec![
                    TransitionPaymentConfig {
                        from: "active".into(),
                        to: "dead".into(),
                        value: 1.0,
                    },
                    TransitionPaymentConfig {
                        from: "disabled".into(),
                        to: "dead".into(),
                        value: 1.0,
                    },
                ],
            },
        ],
        free_policy: None,
        labels: None,
        k_sigma: 3.0,
    }
}

fn free_policy() -> RunConfig {
    RunConfig {
        name: "free_policy".into(),
        grid: GridConfig { t_max: 10.0, step: 0.02, pivot: 5.0 },
        discount: DiscountConfig::Flat { rate: 0.03 },
        states: StatesConfig {
            labels: vec![
                "premium_active".into(),
                "premium_dead".into(),
                "converted_active".into(),
                "converted_dead".into(),
            ],
            scheme: Some(vec!["premium_active".into(), "premium_dead".into()]),
            initial: "premium_active".into(),
        },
        intensities: vec![
            IntensityConfig {
                from: "premium_active".into(),
                to: "premium_dead".into(),
                rate: RateFn::Constant { value: 0.02 },
            },
            // Conversion is only possible while the option window is open;
            // it closes strictly before the horizon so no scheduled payment
            // can collide with an exercise.
            IntensityConfig {
                from: "premium_active".into(),
                to: "converted_active".into(),
                rate: RateFn::TimeWindow { value: 0.15, open: 0.0, close: 8.0 },
            },
            // Mortality after conversion depends on time since conversion.
            IntensityConfig {
                from: "converted_active".into(),
                to: "converted_dead".into(),
                rate: RateFn::DurationExp { base: 0.02, amp: 0.016, decay: 0.5 },
            },
        ],
        ensemble: EnsembleConfig { n_paths: 50_000, seed: 99 },
        conditioning: ConditioningConfig::AsIfMarkov,
        cashflows: vec![],
        free_policy: Some(FreePolicyConfig {
            sojourn: vec![
                // Scheme schedule: single premium at inception, continuous
                // premiums while premium-paying, endowment at the horizon.
                SojournConfig {
                    state: "premium_active".into(),
                    atoms: vec![
                        AtomConfig { t: 0.0, value: -0.2 },
                        AtomConfig { t: 10.0, value: 1.0 },
                    ],
                    density: Some(RateFn::Constant { value: -0.05 }),
                },
                // Converted schedule: the endowment continues, scaled.
                SojournConfig {
                    state: "converted_active".into(),
                    atoms: vec![AtomConfig { t: 10.0, value: 1.0 }],
                    density: None,
                },
            ],
            transition: vec![
                TransitionPaymentConfig {
                    from: "premium_active".into(),
                    to: "premium_dead".into(),
                    value: 0.6,
                },
                TransitionPaymentConfig {
                    from: "converted_active".into(),
                    to: "converted_dead".into(),
                    value: 0.6,
                },
            ],
            rho: vec![RhoConfig {
                from: "premium_active".into(),
                to: "converted_active".into(),
                factor: RateFn::TimeLinear { intercept: 0.5, slope: 0.02 },
            }],
        }),
        labels: None,
        k_sigma: 3.0,
    }
}
