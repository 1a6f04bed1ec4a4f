//! Experiment spec files: JSON documents naming one command, a network, a
//! catalog and the command's own section. Unknown keys are rejected.
//!
//! Tier indices in spec files are 1-based.

use std::path::PathBuf;

use hetcache_core::model::{db_to_linear, dbm_to_watts, density_per_disc};
use hetcache_core::optimizer::SolveOptions;
use hetcache_core::quadrature::QuadratureSettings;
use hetcache_core::{CachingPolicy, ContentCatalog, NetworkConfig, TierParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eval,
    Optimize,
    Simulate,
    Tradeoff,
    Sweep,
    Compare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Optimize => "optimize",
            Command::Simulate => "simulate",
            Command::Tradeoff => "tradeoff",
            Command::Sweep => "sweep",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    PerM2(f64),
    /// `k / (π r²)`.
    KOverPiR2 { k: f64, r: f64 },
}

impl Density {
    pub fn per_m2(&self) -> f64 {
        match *self {
            Density::PerM2(v) => v,
            Density::KOverPiR2 { k, r } => density_per_disc(k, r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Power {
    Dbm(f64),
    Watts(f64),
}

impl Power {
    pub fn watts(&self) -> f64 {
        match *self {
            Power::Dbm(v) => dbm_to_watts(v),
            Power::Watts(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Db(f64),
    Linear(f64),
}

impl Threshold {
    pub fn linear(&self) -> f64 {
        match *self {
            Threshold::Db(v) => db_to_linear(v),
            Threshold::Linear(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    Watts(f64),
    Dbm(f64),
}

impl Noise {
    pub fn watts(&self) -> f64 {
        match *self {
            Noise::Watts(v) => v,
            Noise::Dbm(v) => dbm_to_watts(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierSpec {
    pub density: Density,
    pub power: Power,
    pub cache_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub tiers: Vec<TierSpec>,
    pub path_loss_exponent: f64,
    pub sinr_threshold: Threshold,
    #[serde(default = "no_noise")]
    pub noise_power: Noise,
}

fn no_noise() -> Noise {
    Noise::Watts(0.0)
}

impl NetworkSpec {
    pub fn build(&self) -> Result<NetworkConfig, CliError> {
        let tiers = self
            .tiers
            .iter()
            .enumerate()
            .map(|(k, t)| {
                TierParams::new(t.density.per_m2(), t.power.watts(), t.cache_size)
                    .map_err(|e| CliError::field(format!("network.tiers[{}]", k + 1), e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        NetworkConfig::new(
            tiers,
            self.path_loss_exponent,
            self.sinr_threshold.linear(),
            self.noise_power.watts(),
        )
        .map_err(|e| CliError::field("network", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogSpec {
    Zipf { size: usize, gamma: f64 },
    Explicit(Vec<f64>),
}

impl CatalogSpec {
    pub fn build(&self) -> Result<ContentCatalog, CliError> {
        match self {
            CatalogSpec::Zipf { size, gamma } => ContentCatalog::zipf(*size, *gamma),
            CatalogSpec::Explicit(p) => ContentCatalog::new(p.clone()),
        }
        .map_err(|e| CliError::field("catalog", e))
    }

    pub fn zipf_size(&self) -> Option<usize> {
        match self {
            CatalogSpec::Zipf { size, .. } => Some(*size),
            CatalogSpec::Explicit(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    Uniform,
    Popular,
    Optimal,
    Explicit(Vec<Vec<f64>>),
}

impl PolicySpec {
    pub fn label(&self) -> &'static str {
        match self {
            PolicySpec::Uniform => "uniform",
            PolicySpec::Popular => "popular",
            PolicySpec::Optimal => "optimal",
            PolicySpec::Explicit(_) => "explicit",
        }
    }

    pub fn explicit(&self) -> Option<Result<CachingPolicy, CliError>> {
        match self {
            PolicySpec::Explicit(rows) => Some(
                CachingPolicy::from_rows(rows.clone()).map_err(|e| CliError::field("policy", e)),
            ),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Range { start: f64, stop: f64, step: f64 },
    Values(Vec<f64>),
}

const MAX_GRID: usize = 1_000_000;

impl GridSpec {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let values = match *self {
            GridSpec::Values(ref v) => v.clone(),
            GridSpec::Range { start, stop, step } => {
                if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
                    return Err(CliError::Validation(format!(
                        "{field}: range needs finite start <= stop and a positive step"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor();
                if n >= MAX_GRID as f64 {
                    return Err(CliError::Validation(format!("{field}: range has too many points")));
                }
                (0..=n as usize).map(|k| start + k as f64 * step).collect()
            }
        };
        if values.is_empty() {
            return Err(CliError::Validation(format!("{field}: grid is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!("{field}: grid values must be finite")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_side: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TradeoffLaw {
    SameTierDensity,
    SameTierPower,
    CrossTierDensity,
    CrossTierPower,
}

/// Overrides applied to one tier of the base network for one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub tier: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Density>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<Power>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffSpec {
    pub law: TradeoffLaw,
    pub source_tier: usize,
    /// Affected tier for cross-tier laws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varied_tier: Option<usize>,
    /// Defaults to the base network's equivalent cache size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_q_e: Option<f64>,
    pub grid: GridSpec,
    /// One curve per case; an empty list means a single curve on the base network.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepParameter {
    Gamma,
    PathLossExponent,
    SinrThresholdDb,
    CacheSize { tier: usize },
    /// Density as `k / (π r²)`; the grid holds `k`.
    DensityK { tier: usize, r: f64 },
    PowerDbm { tier: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyChoice {
    Optimal,
    Popular,
    Uniform,
}

impl PolicyChoice {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyChoice::Optimal => "optimal",
            PolicyChoice::Popular => "popular",
            PolicyChoice::Uniform => "uniform",
        }
    }
}

fn all_policies() -> Vec<PolicyChoice> {
    vec![PolicyChoice::Optimal, PolicyChoice::Popular, PolicyChoice::Uniform]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: GridSpec,
    #[serde(default = "all_policies")]
    pub policies: Vec<PolicyChoice>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub gammas: GridSpec,
    #[serde(default = "yes")]
    pub simulate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Command,
    pub network: NetworkSpec,
    pub catalog: CatalogSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolveOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tradeoff: Option<TradeoffSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }

    /// Shipped configuration for `command`.
    pub fn defaults(command: Command) -> Self {
        let tier = |k: f64, dbm: f64, q: f64| TierSpec {
            density: Density::KOverPiR2 { k, r: 500.0 },
            power: Power::Dbm(dbm),
            cache_size: q,
        };
        let network = |q1: f64, q2: f64| NetworkSpec {
            tiers: vec![tier(1.0, 53.0, q1), tier(5.0, 33.0, q2)],
            path_loss_exponent: 4.0,
            sinr_threshold: Threshold::Db(-10.0),
            noise_power: no_noise(),
        };
        let catalog = CatalogSpec::Zipf {
            size: 200,
            gamma: 0.8,
        };
        let base = ExperimentSpec {
            command,
            // Weight ratio 2:1 puts Q_e at 20 for caches [25, 10].
            network: network(25.0, 10.0),
            catalog,
            policy: None,
            solver: None,
            quadrature: None,
            simulation: None,
            tradeoff: None,
            sweep: None,
            compare: None,
            output: None,
        };
        match command {
            Command::Eval => ExperimentSpec {
                policy: Some(PolicySpec::Uniform),
                ..base
            },
            Command::Simulate => ExperimentSpec {
                policy: Some(PolicySpec::Uniform),
                simulation: Some(SimulationSpec {
                    window_side: Some(5000.0),
                    realizations: Some(10_000),
                    seed: Some(1),
                }),
                ..base
            },
            Command::Optimize => ExperimentSpec {
                network: network(40.0, 10.0),
                solver: Some(SolveOptions::default()),
                ..base
            },
            Command::Tradeoff => ExperimentSpec {
                tradeoff: Some(TradeoffSpec {
                    law: TradeoffLaw::SameTierDensity,
                    source_tier: 1,
                    varied_tier: None,
                    target_q_e: Some(20.0),
                    grid: GridSpec::Range {
                        start: 0.0,
                        stop: 60.0,
                        step: 1.0,
                    },
                    cases: vec![
                        CaseSpec {
                            tier: 2,
                            density: None,
                            power: None,
                            cache_size: Some(10.0),
                        },
                        CaseSpec {
                            tier: 2,
                            density: None,
                            power: None,
                            cache_size: Some(30.0),
                        },
                    ],
                }),
                ..base
            },
            Command::Sweep => ExperimentSpec {
                network: network(40.0, 10.0),
                sweep: Some(SweepSpec {
                    parameter: SweepParameter::Gamma,
                    grid: GridSpec::Range {
                        start: 0.0,
                        stop: 2.0,
                        step: 0.2,
                    },
                    policies: all_policies(),
                }),
                ..base
            },
            Command::Compare => ExperimentSpec {
                network: network(200.0, 50.0),
                catalog: CatalogSpec::Zipf {
                    size: 1000,
                    gamma: 0.8,
                },
                simulation: Some(SimulationSpec {
                    window_side: Some(5000.0),
                    realizations: Some(10_000),
                    seed: Some(1),
                }),
                compare: Some(CompareSpec {
                    gammas: GridSpec::Values(vec![0.2, 0.6, 1.0, 1.4, 1.8]),
                    simulate: true,
                }),
                ..base
            },
        }
    }
}
