//! Uniform caching and the density/power versus cache-size tradeoffs.
//!
//! Under the uniform policy `p_ij = Q_i/M` the SDP depends on the network only
//! through the equivalent cache size `Q_e = Σ a_i Q_i / Σ a_i`,
//! `a_i = λ_i S_i^(2/β)`. Holding `Q_e` fixed therefore holds the SDP fixed,
//! and solving that identity for one tier parameter gives the tradeoff laws.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ContentCatalog, NetworkConfig, TierParams};
use crate::specfun::channel_constants;

pub fn equivalent_cache_size(config: &NetworkConfig) -> f64 {
    let a = config.tier_weights();
    let weighted: f64 = a
        .iter()
        .zip(config.tiers())
        .map(|(ai, t)| ai * t.cache_size)
        .sum();
    weighted / a.iter().sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformCacheSummary {
    pub q_e: f64,
    pub sdp: f64,
}

/// `Q_e / (T Q_e + D M)` for a target equivalent cache size.
pub fn uniform_sdp_at(q_e: f64, catalog_size: usize, tau: f64, beta: f64) -> Result<f64> {
    let m = catalog_size as f64;
    if !(0.0..=m).contains(&q_e) {
        return Err(Error::invalid(format!(
            "equivalent cache size {q_e} must lie in [0, {m}]"
        )));
    }
    let c = channel_constants(tau, beta)?;
    Ok(q_e / (c.t * q_e + c.d * m))
}

pub fn uniform_sdp(config: &NetworkConfig, catalog: &ContentCatalog) -> Result<UniformCacheSummary> {
    config.check_catalog(catalog)?;
    let q_e = equivalent_cache_size(config);
    let sdp = uniform_sdp_at(
        q_e,
        catalog.len(),
        config.sinr_threshold(),
        config.path_loss_exponent(),
    )?;
    Ok(UniformCacheSummary { q_e, sdp })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TradeoffKind {
    SameTierDensity,
    SameTierPower,
    CrossTierDensity,
    CrossTierPower,
}

impl TradeoffKind {
    fn varies_density(self) -> bool {
        matches!(self, TradeoffKind::SameTierDensity | TradeoffKind::CrossTierDensity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// Zero denominator: `Q_i = Q_e` for same-tier laws.
    Singular,
    NonPositive,
    NonFinite,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::Singular => "singular",
            RejectReason::NonPositive => "nonpositive",
            RejectReason::NonFinite => "nonfinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    /// Cache size `Q_i` of the source tier.
    pub q: f64,
    /// Density or power of the varied tier.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectedPoint {
    pub q: f64,
    /// Raw value of the law, when it evaluates to a number.
    pub value: Option<f64>,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TradeoffConstants {
    pub q_e: f64,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub k4: Option<f64>,
    pub k5: Option<f64>,
    pub k6: Option<f64>,
}

/// Range of `Q_i` on which the law yields a positive, finite parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, q: f64) -> bool {
        let above = if self.lo_closed { q >= self.lo } else { q > self.lo };
        let below = if self.hi_closed { q <= self.hi } else { q < self.hi };
        above && below
    }
}

/// Sign regime of a cross-tier law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossTierCase {
    /// `Q_j > Q_e`: `K3, K5, K6 > 0`; the varied parameter falls with `Q_i`
    /// on `[0, K3/K4)`.
    Decreasing,
    /// `Q_j < Q_e`, `K3 > 0`: rises with `Q_i` on `(K3/K4, ∞)`.
    IncreasingAboveThreshold,
    /// `K3 ≤ 0` (forcing `Q_j < Q_e`): rises with `Q_i` on `[0, ∞)`.
    IncreasingEverywhere,
    /// `Q_j = Q_e`: `K5 = K6 = 0`, no tradeoff exists.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub kind: TradeoffKind,
    pub source_tier: usize,
    pub varied_tier: usize,
    pub points: Vec<TradeoffPoint>,
    pub rejected: Vec<RejectedPoint>,
    pub constants: TradeoffConstants,
    pub validity_interval: Option<Interval>,
    pub cross_case: Option<CrossTierCase>,
}

impl TradeoffCurve {
    /// `base` with the source tier's cache set to `point.q` and the varied
    /// tier's density or power set to `point.value`.
    pub fn config_at(&self, base: &NetworkConfig, point: &TradeoffPoint) -> Result<NetworkConfig> {
        let src = base.tier(self.source_tier);
        let cfg = base.with_tier(
            self.source_tier,
            TierParams::new(src.density, src.power, point.q)?,
        )?;
        let var = cfg.tier(self.varied_tier);
        let tier = if self.kind.varies_density() {
            TierParams::new(point.value, var.power, var.cache_size)?
        } else {
            TierParams::new(var.density, point.value, var.cache_size)?
        };
        cfg.with_tier(self.varied_tier, tier)
    }
}

fn check_tiers(config: &NetworkConfig, tiers: &[usize], target_q_e: f64) -> Result<()> {
    if config.num_tiers() < 2 {
        return Err(Error::invalid("tradeoff curves need at least two tiers"));
    }
    for &t in tiers {
        if t >= config.num_tiers() {
            return Err(Error::invalid(format!(
                "tier index {t} out of range for {} tiers",
                config.num_tiers()
            )));
        }
    }
    if !(target_q_e >= 0.0 && target_q_e.is_finite()) {
        return Err(Error::invalid(format!(
            "target equivalent cache size must be finite and nonnegative, got {target_q_e}"
        )));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(q) = grid.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
        return Err(Error::invalid(format!(
            "cache-size grid values must be finite and nonnegative, got {q}"
        )));
    }
    Ok(())
}

fn classify(q: f64, numerator: f64, denominator: f64, exponent: f64) -> std::result::Result<TradeoffPoint, RejectedPoint> {
    if denominator == 0.0 {
        return Err(RejectedPoint {
            q,
            value: None,
            reason: RejectReason::Singular,
        });
    }
    let ratio = numerator / denominator;
    if !ratio.is_finite() {
        return Err(RejectedPoint {
            q,
            value: None,
            reason: RejectReason::NonFinite,
        });
    }
    if ratio <= 0.0 {
        return Err(RejectedPoint {
            q,
            value: Some(ratio),
            reason: RejectReason::NonPositive,
        });
    }
    let value = ratio.powf(exponent);
    if !value.is_finite() || value <= 0.0 {
        return Err(RejectedPoint {
            q,
            value: Some(value),
            reason: if value.is_finite() {
                RejectReason::NonPositive
            } else {
                RejectReason::NonFinite
            },
        });
    }
    Ok(TradeoffPoint { q, value })
}

fn same_tier_interval(k: f64, q_e: f64) -> Option<Interval> {
    if k > 0.0 {
        Some(Interval {
            lo: q_e,
            hi: f64::INFINITY,
            lo_closed: false,
            hi_closed: false,
        })
    } else if k < 0.0 {
        Some(Interval {
            lo: 0.0,
            hi: q_e,
            lo_closed: true,
            hi_closed: false,
        })
    } else {
        None
    }
}

fn same_tier_curve(
    config: &NetworkConfig,
    tier: usize,
    target_q_e: f64,
    grid: &[f64],
    kind: TradeoffKind,
) -> Result<TradeoffCurve> {
    check_tiers(config, &[tier], target_q_e)?;
    check_grid(grid)?;
    let delta = 2.0 / config.path_loss_exponent();
    let src = config.tier(tier);
    let others = config
        .tiers()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != tier)
        .map(|(_, t)| t);

    let (k, exponent) = match kind {
        // K1 = Σ_{j≠i} λ_j (S_j/S_i)^(2/β) (Q_e − Q_j)
        TradeoffKind::SameTierDensity => (
            others
                .map(|t| t.density * (t.power / src.power).powf(delta) * (target_q_e - t.cache_size))
                .sum::<f64>(),
            1.0,
        ),
        // K2 = Σ_{j≠i} (λ_j/λ_i) S_j^(2/β) (Q_e − Q_j)
        TradeoffKind::SameTierPower => (
            others
                .map(|t| t.density / src.density * t.power.powf(delta) * (target_q_e - t.cache_size))
                .sum::<f64>(),
            1.0 / delta,
        ),
        _ => unreachable!("cross-tier kinds are built by cross_tier_curves"),
    };

    let mut points = Vec::new();
    let mut rejected = Vec::new();
    for &q in grid {
        match classify(q, k, q - target_q_e, exponent) {
            Ok(p) => points.push(p),
            Err(r) => rejected.push(r),
        }
    }
    let mut constants = TradeoffConstants {
        q_e: target_q_e,
        ..Default::default()
    };
    if kind == TradeoffKind::SameTierDensity {
        constants.k1 = Some(k);
    } else {
        constants.k2 = Some(k);
    }
    Ok(TradeoffCurve {
        kind,
        source_tier: tier,
        varied_tier: tier,
        points,
        rejected,
        constants,
        validity_interval: same_tier_interval(k, target_q_e),
        cross_case: None,
    })
}

/// `λ_i = K1 / (Q_i − Q_e)` along `grid`, other tiers fixed.
pub fn same_tier_density_curve(
    config: &NetworkConfig,
    tier: usize,
    target_q_e: f64,
    grid: &[f64],
) -> Result<TradeoffCurve> {
    same_tier_curve(config, tier, target_q_e, grid, TradeoffKind::SameTierDensity)
}

/// `S_i = (K2 / (Q_i − Q_e))^(β/2)` along `grid`, other tiers fixed.
pub fn same_tier_power_curve(
    config: &NetworkConfig,
    tier: usize,
    target_q_e: f64,
    grid: &[f64],
) -> Result<TradeoffCurve> {
    same_tier_curve(config, tier, target_q_e, grid, TradeoffKind::SameTierPower)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossTierCurves {
    pub density: TradeoffCurve,
    pub power: TradeoffCurve,
    pub case: CrossTierCase,
}

/// Cross-tier laws `λ_j = (K3 − K4 Q_i)/K5` and `S_j = ((K3 − K4 Q_i)/K6)^(β/2)`
/// for source tier `i` and affected tier `j`.
pub fn cross_tier_curves(
    config: &NetworkConfig,
    source: usize,
    affected: usize,
    target_q_e: f64,
    grid: &[f64],
) -> Result<CrossTierCurves> {
    check_tiers(config, &[source, affected], target_q_e)?;
    check_grid(grid)?;
    if source == affected {
        return Err(Error::invalid("cross-tier laws need two distinct tiers"));
    }
    let delta = 2.0 / config.path_loss_exponent();
    let a = config.tier_weights();
    let tj = config.tier(affected);

    let mut k3 = 0.0;
    for (k, (ak, t)) in a.iter().zip(config.tiers()).enumerate() {
        if k == affected {
            continue;
        }
        k3 += target_q_e * ak;
        if k != source {
            k3 -= ak * t.cache_size;
        }
    }
    let k4 = a[source];
    let k5 = tj.power.powf(delta) * (tj.cache_size - target_q_e);
    let k6 = tj.density * (tj.cache_size - target_q_e);

    let case = if k5 == 0.0 {
        CrossTierCase::Degenerate
    } else if k5 > 0.0 {
        CrossTierCase::Decreasing
    } else if k3 > 0.0 {
        CrossTierCase::IncreasingAboveThreshold
    } else {
        CrossTierCase::IncreasingEverywhere
    };
    let threshold = k3 / k4;
    let interval = match case {
        CrossTierCase::Decreasing => Some(Interval {
            lo: 0.0,
            hi: threshold,
            lo_closed: true,
            hi_closed: false,
        }),
        CrossTierCase::IncreasingAboveThreshold => Some(Interval {
            lo: threshold,
            hi: f64::INFINITY,
            lo_closed: false,
            hi_closed: false,
        }),
        CrossTierCase::IncreasingEverywhere => Some(Interval {
            lo: 0.0,
            hi: f64::INFINITY,
            lo_closed: true,
            hi_closed: false,
        }),
        CrossTierCase::Degenerate => None,
    };

    let constants = TradeoffConstants {
        q_e: target_q_e,
        k3: Some(k3),
        k4: Some(k4),
        k5: Some(k5),
        k6: Some(k6),
        ..Default::default()
    };
    let build = |kind: TradeoffKind, denom: f64, exponent: f64| {
        let mut points = Vec::new();
        let mut rejected = Vec::new();
        for &q in grid {
            match classify(q, k3 - k4 * q, denom, exponent) {
                Ok(p) => points.push(p),
                Err(r) => rejected.push(r),
            }
        }
        TradeoffCurve {
            kind,
            source_tier: source,
            varied_tier: affected,
            points,
            rejected,
            constants,
            validity_interval: interval,
            cross_case: Some(case),
        }
    };
    Ok(CrossTierCurves {
        density: build(TradeoffKind::CrossTierDensity, k5, 1.0),
        power: build(TradeoffKind::CrossTierPower, k6, 1.0 / delta),
        case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::total_sdp_interference_limited;
    use crate::model::{dbm_to_watts, density_per_disc};
    use crate::optimizer::baseline_uniform;
    use proptest::prelude::*;

    fn fig_config(q: [f64; 2]) -> NetworkConfig {
        NetworkConfig::new(
            vec![
                TierParams::new(density_per_disc(1.0, 500.0), dbm_to_watts(53.0), q[0]).unwrap(),
                TierParams::new(density_per_disc(5.0, 500.0), dbm_to_watts(33.0), q[1]).unwrap(),
            ],
            4.0,
            0.1,
            0.0,
        )
        .unwrap()
    }

    fn grid() -> Vec<f64> {
        (0..=60).map(f64::from).collect()
    }

    #[test]
    fn equivalent_cache_examples() {
        assert!((equivalent_cache_size(&fig_config([40.0, 10.0])) - 30.0).abs() < 1e-12);
        assert!((equivalent_cache_size(&fig_config([25.0, 10.0])) - 20.0).abs() < 1e-12);
        assert!((equivalent_cache_size(&fig_config([7.0, 7.0])) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn anchor_value() {
        let cat = ContentCatalog::zipf(200, 0.8).unwrap();
        let s = uniform_sdp(&fig_config([25.0, 10.0]), &cat).unwrap();
        assert!((s.sdp - 0.179_616_471_591_933_63).abs() < 1e-12);
        assert!((s.sdp - 0.18).abs() < 0.005);
        let full = uniform_sdp_at(200.0, 200, 0.1, 4.0).unwrap();
        assert!((full - 0.911_698_858_291_396_2).abs() < 1e-12);
        assert_eq!(uniform_sdp_at(0.0, 200, 0.1, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn same_tier_density_branches() {
        let cat = ContentCatalog::zipf(200, 0.8).unwrap();
        for (q2, positive) in [(10.0, true), (30.0, false)] {
            let cfg = fig_config([25.0, q2]);
            let curve = same_tier_density_curve(&cfg, 0, 20.0, &grid()).unwrap();
            let k1 = curve.constants.k1.unwrap();
            assert_eq!(k1 > 0.0, positive);
            let iv = curve.validity_interval.unwrap();
            assert!(curve.points.iter().all(|p| iv.contains(p.q)));
            assert!(curve
                .rejected
                .iter()
                .any(|r| r.q == 20.0 && r.reason == RejectReason::Singular));
            for p in &curve.points {
                assert!((p.value * (p.q - 20.0) - k1).abs() < 1e-12 * k1.abs());
                let at = curve.config_at(&cfg, p).unwrap();
                assert!((equivalent_cache_size(&at) - 20.0).abs() < 1e-9);
                let s = uniform_sdp(&at, &cat).unwrap().sdp;
                assert!((s - 0.179_616_471_591_933_63).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn power_law_has_beta_half_exponent() {
        let cfg = fig_config([25.0, 10.0]);
        let curve = same_tier_power_curve(&cfg, 0, 20.0, &grid()).unwrap();
        let k2 = curve.constants.k2.unwrap();
        for p in &curve.points {
            let want = k2 * k2 / ((p.q - 20.0) * (p.q - 20.0));
            assert!((p.value - want).abs() < 1e-12 * want);
            let at = curve.config_at(&cfg, p).unwrap();
            assert!((equivalent_cache_size(&at) - 20.0).abs() < 1e-9);
        }
        // Tier-1 power at Q1 = 25 reproduces the base configuration.
        let p25 = curve.points.iter().find(|p| p.q == 25.0).unwrap();
        assert!((p25.value - dbm_to_watts(53.0)).abs() < 1e-9);
    }

    #[test]
    fn cross_tier_cases() {
        let cat = ContentCatalog::zipf(200, 0.8).unwrap();
        let cfg = fig_config([20.0, 30.0]);
        let c = cross_tier_curves(&cfg, 0, 1, 20.0, &grid()).unwrap();
        assert_eq!(c.case, CrossTierCase::Decreasing);
        let k = c.density.constants;
        let (k3, k4, k5) = (k.k3.unwrap(), k.k4.unwrap(), k.k5.unwrap());
        // Two tiers: K3/K4 = Q_e.
        assert!((k3 / k4 - 20.0).abs() < 1e-12);
        assert!(k3 > 0.0 && k5 > 0.0 && k.k6.unwrap() > 0.0);
        for w in c.density.points.windows(2) {
            assert!(w[1].value < w[0].value);
            let slope = (w[1].value - w[0].value) / (w[1].q - w[0].q);
            assert!((slope + k4 / k5).abs() < 1e-9 * (k4 / k5));
        }
        for curve in [&c.density, &c.power] {
            assert!(!curve.points.is_empty());
            for p in &curve.points {
                let at = curve.config_at(&cfg, p).unwrap();
                assert!((equivalent_cache_size(&at) - 20.0).abs() < 1e-9);
                let s = uniform_sdp(&at, &cat).unwrap().sdp;
                assert!((s - 0.179_616_471_591_933_63).abs() < 1e-9);
            }
        }

        let low = cross_tier_curves(&fig_config([20.0, 5.0]), 0, 1, 20.0, &grid()).unwrap();
        assert_eq!(low.case, CrossTierCase::IncreasingAboveThreshold);
        assert!(low.density.points.iter().all(|p| p.q > 20.0));

        let flat = cross_tier_curves(&fig_config([20.0, 20.0]), 0, 1, 20.0, &grid()).unwrap();
        assert_eq!(flat.case, CrossTierCase::Degenerate);
        assert!(flat.density.points.is_empty());
        assert!(flat.density.rejected.iter().all(|r| r.reason == RejectReason::Singular));
    }

    #[test]
    fn third_tier_can_force_increasing_everywhere() {
        // A huge-cache third tier pushes the fixed part above Q_e, so K3 < 0.
        let cfg = NetworkConfig::new(
            vec![
                TierParams::new(1e-6, 1.0, 10.0).unwrap(),
                TierParams::new(1e-6, 1.0, 5.0).unwrap(),
                TierParams::new(4e-6, 1.0, 80.0).unwrap(),
            ],
            4.0,
            0.1,
            0.0,
        )
        .unwrap();
        let c = cross_tier_curves(&cfg, 0, 1, 20.0, &grid()).unwrap();
        assert_eq!(c.case, CrossTierCase::IncreasingEverywhere);
        assert!(c.density.constants.k3.unwrap() < 0.0);
        assert_eq!(c.density.points.len(), grid().len());
    }

    #[test]
    fn rejects_bad_requests() {
        let cfg = fig_config([20.0, 10.0]);
        assert!(cross_tier_curves(&cfg, 0, 0, 20.0, &grid()).is_err());
        assert!(same_tier_density_curve(&cfg, 2, 20.0, &grid()).is_err());
        assert!(same_tier_density_curve(&cfg, 0, 20.0, &[f64::NAN]).is_err());
        let single = NetworkConfig::new(vec![TierParams::new(1e-6, 1.0, 1.0).unwrap()], 4.0, 0.1, 0.0).unwrap();
        assert!(same_tier_density_curve(&single, 0, 20.0, &grid()).is_err());
    }

    fn random_config() -> impl Strategy<Value = NetworkConfig> {
        (2usize..5)
            .prop_flat_map(|n| {
                prop::collection::vec((0.1f64..10.0, 0.0f64..30.0, 0.0f64..100.0), n)
            })
            .prop_map(|tiers| {
                let tiers = tiers
                    .into_iter()
                    .map(|(k, dbm, q)| {
                        TierParams::new(density_per_disc(k, 500.0), dbm_to_watts(dbm + 20.0), q.round())
                            .unwrap()
                    })
                    .collect();
                NetworkConfig::new(tiers, 4.0, 0.1, 0.0).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn uniform_summary_equals_direct_evaluation(cfg in random_config(), gamma in 0.0f64..1.6) {
            let cat = ContentCatalog::zipf(100, gamma).unwrap();
            let summary = uniform_sdp(&cfg, &cat).unwrap();
            let direct = total_sdp_interference_limited(&cfg, &cat, &baseline_uniform(&cfg, &cat).unwrap())
                .unwrap()
                .total;
            prop_assert!((summary.sdp - direct).abs() < 1e-12);
            let lo = cfg.cache_sizes().into_iter().fold(f64::INFINITY, f64::min);
            let hi = cfg.cache_sizes().into_iter().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(summary.q_e >= lo - 1e-12 && summary.q_e <= hi + 1e-12);
        }

        #[test]
        fn curves_close_on_target(cfg in random_config(), target in 1.0f64..60.0, src in 0usize..2) {
            let g = grid();
            let dst = 1 - src;
            let mut curves = vec![
                same_tier_density_curve(&cfg, src, target, &g).unwrap(),
                same_tier_power_curve(&cfg, src, target, &g).unwrap(),
            ];
            let cross = cross_tier_curves(&cfg, src, dst, target, &g).unwrap();
            curves.push(cross.density);
            curves.push(cross.power);
            for curve in &curves {
                for p in &curve.points {
                    let at = curve.config_at(&cfg, p).unwrap();
                    prop_assert!((equivalent_cache_size(&at) - target).abs() < 1e-9 * target.max(1.0));
                    if let Some(iv) = curve.validity_interval {
                        prop_assert!(iv.contains(p.q));
                    }
                }
            }
        }

        #[test]
        fn density_gain_sign_follows_cache_ordering(cfg in random_config(), tier in 0usize..2) {
            let cat = ContentCatalog::zipf(100, 0.8).unwrap();
            let base = uniform_sdp(&cfg, &cat).unwrap().sdp;
            let t = cfg.tier(tier);
            let bumped = cfg
                .with_tier(tier, TierParams::new(t.density * 1.01, t.power, t.cache_size).unwrap())
                .unwrap();
            let d = uniform_sdp(&bumped, &cat).unwrap().sdp - base;
            let a = cfg.tier_weights();
            let (mut w, mut wq) = (0.0, 0.0);
            for (k, (ak, tk)) in a.iter().zip(cfg.tiers()).enumerate() {
                if k != tier {
                    w += ak;
                    wq += ak * tk.cache_size;
                }
            }
            let others = wq / w;
            if (t.cache_size - others).abs() > 1e-6 {
                prop_assert_eq!(d > 0.0, t.cache_size > others);
            }
        }

        #[test]
        fn cache_gain_ordering_tracks_weights(cfg in random_config()) {
            let cat = ContentCatalog::zipf(200, 0.8).unwrap();
            let base = uniform_sdp(&cfg, &cat).unwrap().sdp;
            let a = cfg.tier_weights();
            let gains: Vec<f64> = cfg
                .tiers()
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let up = cfg
                        .with_tier(i, TierParams::new(t.density, t.power, t.cache_size + 0.5).unwrap())
                        .unwrap();
                    uniform_sdp(&up, &cat).unwrap().sdp - base
                })
                .collect();
            for i in 0..a.len() {
                prop_assert!(gains[i] > 0.0);
                for j in 0..a.len() {
                    if a[i] > a[j] * (1.0 + 1e-9) {
                        prop_assert!(gains[i] > gains[j]);
                    }
                }
            }
        }
    }
}
