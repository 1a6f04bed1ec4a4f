//! Analytic successful delivery probability.
//!
//! A user requesting content `j` is served by tier `i` with probability
//! `W_{i|j} = λ_i p_ij S_i^(2/β) / Σ_l λ_l p_lj S_l^(2/β)`. Given that, the
//! delivery succeeds with probability `C_{i|j}`, an integral over the serving
//! distance that reduces to a ratio when the noise vanishes. The total SDP is
//! `C = Σ_j t_j Σ_i W_{i|j} C_{i|j}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ensure_feasible, CachingPolicy, ContentCatalog, NetworkConfig};
use crate::quadrature::integrate;
pub use crate::quadrature::QuadratureSettings;
use crate::specfun::{channel_constants, ChannelConstants};

/// `e^{-v}` falls below 1e-16 past this point: `16 ln 10`.
const EXP_TRUNCATION: f64 = 16.0 * std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpMode {
    AnalyticGeneral,
    AnalyticInterferenceLimited,
    MonteCarlo,
}

impl SdpMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SdpMode::AnalyticGeneral => "analytic-general",
            SdpMode::AnalyticInterferenceLimited => "analytic-interference-limited",
            SdpMode::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpReport {
    pub total: f64,
    /// `per_pair[i][j]`: `W_{i|j} C_{i|j}` for the analytic modes; for Monte
    /// Carlo, the fraction of requests for `j` delivered by tier `i`.
    pub per_pair: Vec<Vec<f64>>,
    pub mode: SdpMode,
    /// Standard error of `total`; Monte Carlo only.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    tiers: usize,
    contents: usize,
    w: Vec<f64>,
    /// Contents cached by no tier; their column is all zeros.
    pub undefined_content: Vec<usize>,
}

impl AssociationMatrix {
    pub fn get(&self, tier: usize, content: usize) -> f64 {
        self.w[tier * self.contents + content]
    }

    pub fn num_tiers(&self) -> usize {
        self.tiers
    }

    pub fn num_contents(&self) -> usize {
        self.contents
    }

    pub fn column(&self, content: usize) -> Vec<f64> {
        (0..self.tiers).map(|i| self.get(i, content)).collect()
    }
}

/// `Σ_l λ_l p_lj S_l^(2/β)`, the weighted density of BSs holding `j`.
fn cached_weight(weights: &[f64], policy: &CachingPolicy, content: usize) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(l, a)| a * policy.get(l, content))
        .sum()
}

pub fn association_matrix(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
) -> Result<AssociationMatrix> {
    ensure_feasible(policy, config, catalog)?;
    let weights = config.tier_weights();
    let (n, m) = (config.num_tiers(), catalog.len());
    let mut w = vec![0.0; n * m];
    let mut undefined_content = Vec::new();
    for j in 0..m {
        let total = cached_weight(&weights, policy, j);
        if total == 0.0 {
            undefined_content.push(j);
            continue;
        }
        for i in 0..n {
            w[i * m + j] = weights[i] * policy.get(i, j) / total;
        }
    }
    Ok(AssociationMatrix {
        tiers: n,
        contents: m,
        w,
        undefined_content,
    })
}

/// `Σ_l p_lj λ_l (S_l/S_i)^(2/β)`: the serving distance `R_{i|j}` is Rayleigh
/// with this intensity.
fn serving_intensity(config: &NetworkConfig, policy: &CachingPolicy, tier: usize, content: usize) -> f64 {
    let delta = 2.0 / config.path_loss_exponent();
    let s_i = config.tier(tier).power;
    config
        .tiers()
        .iter()
        .enumerate()
        .map(|(l, t)| policy.get(l, content) * t.density * (t.power / s_i).powf(delta))
        .sum()
}

fn association_probability(
    config: &NetworkConfig,
    policy: &CachingPolicy,
    tier: usize,
    content: usize,
) -> f64 {
    let weights = config.tier_weights();
    let total = cached_weight(&weights, policy, content);
    if total == 0.0 {
        0.0
    } else {
        weights[tier] * policy.get(tier, content) / total
    }
}

fn check_pair(config: &NetworkConfig, policy: &CachingPolicy, tier: usize, content: usize) -> Result<()> {
    if tier >= config.num_tiers() || content >= policy.num_contents() {
        return Err(Error::invalid(format!(
            "pair ({tier}, {content}) out of range for a {}x{} policy",
            config.num_tiers(),
            policy.num_contents()
        )));
    }
    if policy.num_tiers() != config.num_tiers() {
        return Err(Error::DimensionMismatch {
            expected_tiers: config.num_tiers(),
            expected_contents: policy.num_contents(),
            tiers: policy.num_tiers(),
            contents: policy.num_contents(),
        });
    }
    if policy.get(tier, content) <= 0.0 {
        return Err(Error::UndefinedDistribution { tier, content });
    }
    Ok(())
}

/// Density of the distance to the serving BS, given service by tier `i` for
/// content `j`:
/// `f(r) = (2π p_ij λ_i / W_{i|j}) r exp(-π Σ_l p_lj λ_l (S_l/S_i)^(2/β) r²)`.
pub fn serving_distance_pdf(
    config: &NetworkConfig,
    policy: &CachingPolicy,
    tier: usize,
    content: usize,
    r: f64,
) -> Result<f64> {
    check_pair(config, policy, tier, content)?;
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("distance must be nonnegative, got {r}")));
    }
    let w = association_probability(config, policy, tier, content);
    let lead = 2.0 * PI * policy.get(tier, content) * config.tier(tier).density / w;
    let intensity = serving_intensity(config, policy, tier, content);
    Ok(lead * r * (-PI * intensity * r * r).exp())
}

/// `E[R_{i|j}] = 1 / (2 sqrt(Σ_l p_lj λ_l (S_l/S_i)^(2/β)))`.
pub fn mean_serving_distance(
    config: &NetworkConfig,
    policy: &CachingPolicy,
    tier: usize,
    content: usize,
) -> Result<f64> {
    check_pair(config, policy, tier, content)?;
    Ok(0.5 / serving_intensity(config, policy, tier, content).sqrt())
}

/// Exponent rate `Λ = Σ_l λ_l (S_l/S_i)^(2/β) (p_lj H + (1-p_lj) D + p_lj)` of
/// the interference Laplace transform times the serving-distance law, in `r²`.
fn interference_intensity(
    config: &NetworkConfig,
    policy: &CachingPolicy,
    consts: &ChannelConstants,
    tier: usize,
    content: usize,
) -> f64 {
    let delta = 2.0 / config.path_loss_exponent();
    let s_i = config.tier(tier).power;
    config
        .tiers()
        .iter()
        .enumerate()
        .map(|(l, t)| {
            let p = policy.get(l, content);
            t.density * (t.power / s_i).powf(delta) * (p * consts.h + (1.0 - p) * consts.d + p)
        })
        .sum()
}

fn conditional_sdp_inner(
    config: &NetworkConfig,
    policy: &CachingPolicy,
    consts: &ChannelConstants,
    tier: usize,
    content: usize,
    quad: Option<&QuadratureSettings>,
) -> Result<f64> {
    let intensity = serving_intensity(config, policy, tier, content);
    let lambda = interference_intensity(config, policy, consts, tier, content);
    let ratio = intensity / lambda;
    let noise = config.noise_power();
    let quad = match quad {
        None if noise == 0.0 => return Ok(ratio),
        None => return Err(Error::invalid("noisy SDP needs quadrature settings")),
        Some(q) => q,
    };
    // u = r², v = πΛu:
    //   C = (A/Λ) ∫₀^∞ exp(-v - τσ²/S_i · (v/(πΛ))^(β/2)) dv,   A = serving intensity.
    let half_beta = 0.5 * config.path_loss_exponent();
    let noise_scale = config.sinr_threshold() * noise / config.tier(tier).power;
    let area = PI * lambda;
    let integrand = |v: f64| (-v - noise_scale * (v / area).powf(half_beta)).exp();
    let integral = integrate(integrand, 0.0, EXP_TRUNCATION, quad)?;
    Ok(ratio * integral.value)
}

/// `C_{i|j}`: probability that a request for `j` served by tier `i` succeeds.
///
/// With zero noise this is the closed form
/// `Σ_l a_l p_lj / Σ_l a_l (T p_lj + D)`, `a_l = λ_l S_l^(2/β)`; otherwise the
/// distance integral is evaluated by adaptive quadrature.
pub fn conditional_sdp(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
    tier: usize,
    content: usize,
    quad: &QuadratureSettings,
) -> Result<f64> {
    ensure_feasible(policy, config, catalog)?;
    check_pair(config, policy, tier, content)?;
    let consts = channel_constants(config.sinr_threshold(), config.path_loss_exponent())?;
    let quad = (!config.is_interference_limited()).then_some(quad);
    conditional_sdp_inner(config, policy, &consts, tier, content, quad)
}

/// [`conditional_sdp`] that always integrates, even when the noise is zero.
pub fn conditional_sdp_by_quadrature(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
    tier: usize,
    content: usize,
    quad: &QuadratureSettings,
) -> Result<f64> {
    ensure_feasible(policy, config, catalog)?;
    check_pair(config, policy, tier, content)?;
    let consts = channel_constants(config.sinr_threshold(), config.path_loss_exponent())?;
    conditional_sdp_inner(config, policy, &consts, tier, content, Some(quad))
}

/// Total SDP for arbitrary noise power. Contents cached nowhere contribute 0.
pub fn total_sdp_general(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
    quad: &QuadratureSettings,
) -> Result<SdpReport> {
    ensure_feasible(policy, config, catalog)?;
    quad.check()?;
    let consts = channel_constants(config.sinr_threshold(), config.path_loss_exponent())?;
    let assoc = association_matrix(config, catalog, policy)?;
    let quad = (!config.is_interference_limited()).then_some(quad);
    let (n, m) = (config.num_tiers(), catalog.len());

    let columns: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| {
                    let w = assoc.get(i, j);
                    if w == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(w * conditional_sdp_inner(config, policy, &consts, i, j, quad)?)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let per_pair: Vec<Vec<f64>> = (0..n)
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    let total = compose_total(catalog, &per_pair);
    Ok(SdpReport {
        total,
        per_pair,
        mode: SdpMode::AnalyticGeneral,
        stderr: None,
    })
}

fn compose_total(catalog: &ContentCatalog, per_pair: &[Vec<f64>]) -> f64 {
    catalog
        .popularity()
        .iter()
        .enumerate()
        .map(|(j, t)| t * per_pair.iter().map(|row| row[j]).sum::<f64>())
        .sum()
}

/// Interference-limited SDP,
/// `C' = Σ_j Σ_i a_i p_ij t_j / Σ_l a_l (T p_lj + D)`.
pub fn total_sdp_interference_limited(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
) -> Result<SdpReport> {
    ensure_feasible(policy, config, catalog)?;
    let consts = channel_constants(config.sinr_threshold(), config.path_loss_exponent())?;
    let weights = config.tier_weights();
    let (n, m) = (config.num_tiers(), catalog.len());
    let mut per_pair = vec![vec![0.0; m]; n];
    for j in 0..m {
        let denom: f64 = weights
            .iter()
            .enumerate()
            .map(|(l, a)| a * (consts.t * policy.get(l, j) + consts.d))
            .sum();
        for i in 0..n {
            per_pair[i][j] = weights[i] * policy.get(i, j) / denom;
        }
    }
    let total = compose_total(catalog, &per_pair);
    Ok(SdpReport {
        total,
        per_pair,
        mode: SdpMode::AnalyticInterferenceLimited,
        stderr: None,
    })
}

/// Gradient of the interference-limited SDP,
/// `∂C'/∂p_ij = V_ij E / (Σ_k G_k p_kj + E)²` with `V_ij = a_i t_j`,
/// `G_k = a_k T`, `E = D Σ_k a_k`. Defined on the whole box, feasible or not.
pub fn sdp_gradient(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
) -> Result<CachingPolicy> {
    if policy.num_tiers() != config.num_tiers() || policy.num_contents() != catalog.len() {
        return Err(Error::DimensionMismatch {
            expected_tiers: config.num_tiers(),
            expected_contents: catalog.len(),
            tiers: policy.num_tiers(),
            contents: policy.num_contents(),
        });
    }
    let consts = channel_constants(config.sinr_threshold(), config.path_loss_exponent())?;
    let weights = config.tier_weights();
    let e = consts.d * weights.iter().sum::<f64>();
    let mut grad = policy.clone();
    for (j, t) in catalog.popularity().iter().enumerate() {
        let load: f64 = weights
            .iter()
            .enumerate()
            .map(|(k, a)| a * consts.t * policy.get(k, j))
            .sum();
        let denom = (load + e) * (load + e);
        for (i, a) in weights.iter().enumerate() {
            grad.set(i, j, a * t * e / denom);
        }
    }
    Ok(grad)
}
