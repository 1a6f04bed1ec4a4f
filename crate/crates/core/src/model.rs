//! Network, catalog and caching-policy types shared by every other module.
//!
//! Units are fixed at construction: densities in BS per square meter, powers
//! in watts, the SINR threshold on a linear scale. Conversions from dBm / dB
//! live here and are meant to be applied only when ingesting user input.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the popularity normalization `Σ t_j = 1`.
pub const POPULARITY_SUM_TOL: f64 = 1e-12;

/// Slack allowed on the per-tier budget `Σ_j p_ij ≤ Q_i`.
pub const BUDGET_TOL: f64 = 1e-9;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Density of `k` base stations per disc of radius `r` meters, i.e. `k / (π r²)`.
pub fn density_per_disc(k: f64, radius: f64) -> f64 {
    k / (PI * radius * radius)
}

/// One tier of base stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierParams {
    /// BS density λ in BS/m².
    pub density: f64,
    /// Transmit power S in watts.
    pub power: f64,
    /// Cache size Q in content slots. Real valued; fractional budgets are
    /// meaningful under probabilistic placement.
    pub cache_size: f64,
}

impl TierParams {
    pub fn new(density: f64, power: f64, cache_size: f64) -> Result<Self> {
        let tier = TierParams {
            density,
            power,
            cache_size,
        };
        tier.check()?;
        Ok(tier)
    }

    fn check(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::invalid(format!(
                "tier density must be positive and finite, got {}",
                self.density
            )));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::invalid(format!(
                "tier power must be positive and finite, got {}",
                self.power
            )));
        }
        if !(self.cache_size.is_finite() && self.cache_size >= 0.0) {
            return Err(Error::invalid(format!(
                "tier cache size must be nonnegative and finite, got {}",
                self.cache_size
            )));
        }
        Ok(())
    }

    /// `λ S^(2/β)`, the weight of the tier in association and in `Q_e`.
    pub fn weight(&self, path_loss_exponent: f64) -> f64 {
        self.density * self.power.powf(2.0 / path_loss_exponent)
    }
}

/// Tiers plus the propagation and reception parameters common to all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    tiers: Vec<TierParams>,
    path_loss_exponent: f64,
    sinr_threshold: f64,
    noise_power: f64,
}

impl NetworkConfig {
    /// `sinr_threshold` is linear; use [`db_to_linear`] for dB inputs.
    /// `noise_power = 0` selects the interference-limited model.
    pub fn new(
        tiers: Vec<TierParams>,
        path_loss_exponent: f64,
        sinr_threshold: f64,
        noise_power: f64,
    ) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::invalid("network needs at least one tier"));
        }
        for tier in &tiers {
            tier.check()?;
        }
        if !(path_loss_exponent.is_finite() && path_loss_exponent > 2.0) {
            return Err(Error::invalid(format!(
                "path loss exponent must exceed 2, got {path_loss_exponent}"
            )));
        }
        if !(sinr_threshold.is_finite() && sinr_threshold > 0.0) {
            return Err(Error::invalid(format!(
                "SINR threshold must be positive (linear scale), got {sinr_threshold}"
            )));
        }
        if !(noise_power.is_finite() && noise_power >= 0.0) {
            return Err(Error::invalid(format!(
                "noise power must be nonnegative, got {noise_power}"
            )));
        }
        Ok(NetworkConfig {
            tiers,
            path_loss_exponent,
            sinr_threshold,
            noise_power,
        })
    }

    pub fn tiers(&self) -> &[TierParams] {
        &self.tiers
    }

    pub fn tier(&self, i: usize) -> &TierParams {
        &self.tiers[i]
    }

    pub fn num_tiers(&self) -> usize {
        self.tiers.len()
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    pub fn sinr_threshold(&self) -> f64 {
        self.sinr_threshold
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn is_interference_limited(&self) -> bool {
        self.noise_power == 0.0
    }

    /// Per-tier weights `λ_i S_i^(2/β)`.
    pub fn tier_weights(&self) -> Vec<f64> {
        self.tiers
            .iter()
            .map(|t| t.weight(self.path_loss_exponent))
            .collect()
    }

    pub fn cache_sizes(&self) -> Vec<f64> {
        self.tiers.iter().map(|t| t.cache_size).collect()
    }

    /// Copy with tier `i` replaced.
    pub fn with_tier(&self, i: usize, tier: TierParams) -> Result<Self> {
        if i >= self.tiers.len() {
            return Err(Error::invalid(format!(
                "tier index {i} out of range for {} tiers",
                self.tiers.len()
            )));
        }
        let mut tiers = self.tiers.clone();
        tiers[i] = tier;
        NetworkConfig::new(
            tiers,
            self.path_loss_exponent,
            self.sinr_threshold,
            self.noise_power,
        )
    }

    pub fn with_noise_power(&self, noise_power: f64) -> Result<Self> {
        NetworkConfig::new(
            self.tiers.clone(),
            self.path_loss_exponent,
            self.sinr_threshold,
            noise_power,
        )
    }

    /// Checks `Q_i ≤ M` for every tier.
    pub fn check_catalog(&self, catalog: &ContentCatalog) -> Result<()> {
        let m = catalog.len() as f64;
        for (i, tier) in self.tiers.iter().enumerate() {
            if tier.cache_size > m {
                return Err(Error::invalid(format!(
                    "tier {i} cache size {} exceeds catalog size {}",
                    tier.cache_size,
                    catalog.len()
                )));
            }
        }
        Ok(())
    }
}

/// Catalog of `M` equal-length contents with a nonincreasing popularity law.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentCatalog {
    popularity: Vec<f64>,
}

impl ContentCatalog {
    /// Zipf law `t_j = j^(-γ) / Σ_k k^(-γ)`.
    pub fn zipf(size: usize, gamma: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("catalog size must be at least 1"));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::invalid(format!(
                "Zipf exponent must be nonnegative, got {gamma}"
            )));
        }
        let weights: Vec<f64> = (1..=size).map(|j| (j as f64).powf(-gamma)).collect();
        Ok(ContentCatalog {
            popularity: normalize(&weights),
        })
    }

    /// Explicit popularity vector; must already sum to one and be sorted.
    pub fn new(popularity: Vec<f64>) -> Result<Self> {
        if popularity.is_empty() {
            return Err(Error::invalid("catalog size must be at least 1"));
        }
        if let Some((j, t)) = popularity
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t >= 0.0))
        {
            return Err(Error::invalid(format!(
                "popularity of content {j} must be a nonnegative number, got {t}"
            )));
        }
        let sum: f64 = popularity.iter().sum();
        if (sum - 1.0).abs() > POPULARITY_SUM_TOL {
            return Err(Error::invalid(format!(
                "popularity must sum to 1, got {sum}"
            )));
        }
        if let Some(j) = popularity.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::invalid(format!(
                "popularity must be nonincreasing, but t[{}] < t[{}]",
                j,
                j + 1
            )));
        }
        Ok(ContentCatalog { popularity })
    }

    /// Explicit nonnegative weights, normalized to sum to one.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::invalid("popularity weights must have a positive finite sum"));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("popularity weights must be nonnegative"));
        }
        ContentCatalog::new(normalize(weights))
    }

    pub fn len(&self) -> usize {
        self.popularity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.popularity.is_empty()
    }

    pub fn popularity(&self) -> &[f64] {
        &self.popularity
    }
}

fn normalize(weights: &[f64]) -> Vec<f64> {
    // Sum smallest-first to keep the normalization error near one ulp.
    let sum: f64 = weights.iter().rev().sum();
    weights.iter().map(|w| w / sum).collect()
}

/// The `N × M` caching probability matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CachingPolicy {
    tiers: usize,
    contents: usize,
    probs: Vec<f64>,
}

impl CachingPolicy {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let tiers = rows.len();
        if tiers == 0 {
            return Err(Error::invalid("policy needs at least one row"));
        }
        let contents = rows[0].len();
        if contents == 0 {
            return Err(Error::invalid("policy rows must be nonempty"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != contents) {
            return Err(Error::invalid(format!(
                "policy row {i} has {} entries, expected {contents}",
                rows[i].len()
            )));
        }
        Ok(CachingPolicy {
            tiers,
            contents,
            probs: rows.into_iter().flatten().collect(),
        })
    }

    pub fn filled(tiers: usize, contents: usize, value: f64) -> Self {
        CachingPolicy {
            tiers,
            contents,
            probs: vec![value; tiers * contents],
        }
    }

    pub fn num_tiers(&self) -> usize {
        self.tiers
    }

    pub fn num_contents(&self) -> usize {
        self.contents
    }

    #[inline]
    pub fn get(&self, tier: usize, content: usize) -> f64 {
        self.probs[tier * self.contents + content]
    }

    #[inline]
    pub fn set(&mut self, tier: usize, content: usize, value: f64) {
        self.probs[tier * self.contents + content] = value;
    }

    pub fn row(&self, tier: usize) -> &[f64] {
        &self.probs[tier * self.contents..(tier + 1) * self.contents]
    }

    pub fn row_mut(&mut self, tier: usize) -> &mut [f64] {
        &mut self.probs[tier * self.contents..(tier + 1) * self.contents]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.contents)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn row_sum(&self, tier: usize) -> f64 {
        self.row(tier).iter().sum()
    }

    /// Largest elementwise difference to `other`.
    pub fn max_abs_diff(&self, other: &CachingPolicy) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_dims(&self, config: &NetworkConfig, catalog: &ContentCatalog) -> Result<()> {
        if self.tiers != config.num_tiers() || self.contents != catalog.len() {
            return Err(Error::DimensionMismatch {
                expected_tiers: config.num_tiers(),
                expected_contents: catalog.len(),
                tiers: self.tiers,
                contents: self.contents,
            });
        }
        Ok(())
    }
}

/// A violated placement constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyViolation {
    /// `p_ij` outside `[0, 1]` (or not a number).
    Box {
        tier: usize,
        content: usize,
        value: f64,
    },
    /// Row sum above the tier's cache size.
    Budget {
        tier: usize,
        row_sum: f64,
        budget: f64,
        excess: f64,
    },
}

impl fmt::Display for PolicyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyViolation::Box {
                tier,
                content,
                value,
            } => write!(f, "p[{tier}][{content}] = {value} is outside [0, 1]"),
            PolicyViolation::Budget {
                tier,
                row_sum,
                budget,
                excess,
            } => write!(
                f,
                "row {tier} sums to {row_sum}, exceeding cache size {budget} by {excess}"
            ),
        }
    }
}

/// Lists every violated box or budget constraint; an empty list means the
/// policy is feasible.
pub fn validate_policy(
    policy: &CachingPolicy,
    config: &NetworkConfig,
    catalog: &ContentCatalog,
) -> Result<Vec<PolicyViolation>> {
    policy.check_dims(config, catalog)?;
    let mut violations = Vec::new();
    for (i, row) in policy.rows().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                violations.push(PolicyViolation::Box {
                    tier: i,
                    content: j,
                    value: p,
                });
            }
        }
        let budget = config.tier(i).cache_size;
        let row_sum: f64 = row.iter().sum();
        if row_sum > budget + BUDGET_TOL {
            violations.push(PolicyViolation::Budget {
                tier: i,
                row_sum,
                budget,
                excess: row_sum - budget,
            });
        }
    }
    Ok(violations)
}

/// [`validate_policy`] folded into a single error.
pub fn ensure_feasible(
    policy: &CachingPolicy,
    config: &NetworkConfig,
    catalog: &ContentCatalog,
) -> Result<()> {
    let violations = validate_policy(policy, config, catalog)?;
    if violations.is_empty() {
        return Ok(());
    }
    let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(Error::invalid(format!(
        "infeasible caching policy: {}",
        listed.join("; ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_tier(q: [f64; 2]) -> NetworkConfig {
        NetworkConfig::new(
            vec![
                TierParams::new(1e-6, 10.0, q[0]).unwrap(),
                TierParams::new(5e-6, 1.0, q[1]).unwrap(),
            ],
            4.0,
            0.1,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zipf_uniform_when_gamma_zero() {
        let c = ContentCatalog::zipf(4, 0.0).unwrap();
        assert_eq!(c.popularity(), &[0.25; 4]);
    }

    #[test]
    fn zipf_two_contents() {
        let c = ContentCatalog::zipf(2, 1.0).unwrap();
        assert!((c.popularity()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.popularity()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zipf_head_matches_direct_sum() {
        // 1 / Σ_{k=1}^{200} k^-0.8, evaluated at 40 digits.
        let c = ContentCatalog::zipf(200, 0.8).unwrap();
        assert!((c.popularity()[0] - 0.100_033_317_759_868_6).abs() < 1e-14);
    }

    #[test]
    fn zipf_rejects_bad_arguments() {
        assert!(matches!(
            ContentCatalog::zipf(0, 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            ContentCatalog::zipf(10, -0.1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn explicit_catalog_checks() {
        assert!(ContentCatalog::new(vec![0.5, 0.5]).is_ok());
        assert!(ContentCatalog::new(vec![0.4, 0.6]).is_err());
        assert!(ContentCatalog::new(vec![0.5, 0.4]).is_err());
        assert!(ContentCatalog::new(vec![1.2, -0.2]).is_err());
        let c = ContentCatalog::from_weights(&[3.0, 1.0]).unwrap();
        assert_eq!(c.popularity(), &[0.75, 0.25]);
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(33.0) - 1.995_262_314_968_879_6).abs() < 1e-14);
        assert!((dbm_to_watts(53.0) - 199.526_231_496_887_96).abs() < 1e-11);
        assert!((db_to_linear(-10.0) - 0.1).abs() < 1e-16);
        assert!((density_per_disc(1.0, 500.0) * PI * 250_000.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let t = TierParams::new(1e-6, 1.0, 1.0).unwrap();
        assert!(NetworkConfig::new(vec![], 4.0, 0.1, 0.0).is_err());
        assert!(NetworkConfig::new(vec![t], 2.0, 0.1, 0.0).is_err());
        assert!(NetworkConfig::new(vec![t], 4.0, 0.0, 0.0).is_err());
        assert!(NetworkConfig::new(vec![t], 4.0, 0.1, -1.0).is_err());
        assert!(TierParams::new(0.0, 1.0, 1.0).is_err());
        assert!(TierParams::new(1.0, -1.0, 1.0).is_err());
        assert!(TierParams::new(1.0, 1.0, -1.0).is_err());
        let cfg = NetworkConfig::new(vec![TierParams::new(1e-6, 1.0, 5.0).unwrap()], 4.0, 0.1, 0.0)
            .unwrap();
        assert!(cfg.check_catalog(&ContentCatalog::zipf(4, 1.0).unwrap()).is_err());
        assert!(cfg.check_catalog(&ContentCatalog::zipf(5, 1.0).unwrap()).is_ok());
    }

    #[test]
    fn uniform_policy_is_feasible() {
        let cfg = two_tier([3.0, 1.5]);
        let cat = ContentCatalog::zipf(6, 0.8).unwrap();
        let policy = CachingPolicy::from_rows(vec![vec![0.5; 6], vec![0.25; 6]]).unwrap();
        assert!(validate_policy(&policy, &cfg, &cat).unwrap().is_empty());
    }

    #[test]
    fn box_violation_reported() {
        let cfg = two_tier([3.0, 3.0]);
        let cat = ContentCatalog::zipf(4, 0.8).unwrap();
        let policy =
            CachingPolicy::from_rows(vec![vec![1.2, 0.0, 0.0, 0.0], vec![0.5; 4]]).unwrap();
        let v = validate_policy(&policy, &cfg, &cat).unwrap();
        assert_eq!(
            v,
            vec![PolicyViolation::Box {
                tier: 0,
                content: 0,
                value: 1.2
            }]
        );
    }

    #[test]
    fn budget_violation_reports_excess() {
        let cfg = two_tier([2.0, 1.0]);
        let cat = ContentCatalog::zipf(4, 0.8).unwrap();
        let policy =
            CachingPolicy::from_rows(vec![vec![1.0, 1.0, 0.5, 0.0], vec![0.25; 4]]).unwrap();
        let v = validate_policy(&policy, &cfg, &cat).unwrap();
        assert_eq!(v.len(), 1);
        match &v[0] {
            PolicyViolation::Budget { tier, excess, .. } => {
                assert_eq!(*tier, 0);
                assert!((excess - 0.5).abs() < 1e-15);
            }
            other => panic!("unexpected violation {other:?}"),
        }
        assert!(ensure_feasible(&policy, &cfg, &cat).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let cfg = two_tier([1.0, 1.0]);
        let cat = ContentCatalog::zipf(4, 0.8).unwrap();
        let policy = CachingPolicy::filled(1, 4, 0.1);
        assert!(matches!(
            validate_policy(&policy, &cfg, &cat),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn zipf_normalized_and_sorted(m in 1usize..3000, gamma in 0.0f64..4.0) {
            let c = ContentCatalog::zipf(m, gamma).unwrap();
            let sum: f64 = c.popularity().iter().sum();
            prop_assert!((sum - 1.0).abs() <= POPULARITY_SUM_TOL);
            prop_assert!(c.popularity().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn dbm_round_trip(dbm in -150.0f64..100.0) {
            prop_assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() <= 1e-12);
        }

        #[test]
        fn validation_accepts_exactly_the_polytope(
            entries in proptest::collection::vec(-0.3f64..1.3, 10),
            q in proptest::collection::vec(0.0f64..5.0, 2),
        ) {
            let cfg = two_tier([q[0], q[1]]);
            let cat = ContentCatalog::zipf(5, 0.5).unwrap();
            let policy = CachingPolicy::from_rows(vec![entries[..5].to_vec(), entries[5..].to_vec()]).unwrap();
            let in_box = entries.iter().all(|p| (0.0..=1.0).contains(p));
            let in_budget = (0..2).all(|i| policy.row_sum(i) <= q[i] + BUDGET_TOL);
            let ok = validate_policy(&policy, &cfg, &cat).unwrap().is_empty();
            prop_assert_eq!(ok, in_box && in_budget);
        }
    }
}
