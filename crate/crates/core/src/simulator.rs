//! Monte Carlo delivery simulation on Poisson deployments.
//!
//! Each realization drops every tier as an independent Poisson process on a
//! square window centred on the user, lets each BS cache the requested content
//! independently with probability `p_ij`, associates the user with the
//! strongest-on-average cacher and draws Rayleigh fading for every BS. The
//! request succeeds when the SINR exceeds the threshold.
//!
//! Realization `k` draws from its own ChaCha stream `k` under the master seed,
//! so an estimate is a pure function of its inputs whatever the thread count.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{SdpMode, SdpReport};
use crate::error::{Error, Result};
use crate::model::{ensure_feasible, CachingPolicy, ContentCatalog, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub window_side: f64,
    pub realizations: usize,
    pub seed: u64,
    /// Overrides the configuration's noise power when set.
    #[serde(default)]
    pub noise_power: Option<f64>,
}

impl SimSettings {
    pub fn new(seed: u64) -> Self {
        SimSettings {
            window_side: 5000.0,
            realizations: 10_000,
            seed,
            noise_power: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.window_side > 0.0 && self.window_side.is_finite()) {
            return Err(Error::invalid(format!(
                "window side must be positive, got {}",
                self.window_side
            )));
        }
        if self.realizations == 0 {
            return Err(Error::invalid("at least one realization is required"));
        }
        if let Some(n) = self.noise_power {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(Error::invalid(format!("noise power must be nonnegative, got {n}")));
            }
        }
        Ok(())
    }

    fn noise(&self, config: &NetworkConfig) -> f64 {
        self.noise_power.unwrap_or(config.noise_power())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub tier: usize,
    /// Position relative to the user.
    pub x: f64,
    pub y: f64,
    /// Whether this BS holds the requested content.
    pub caches: bool,
    /// Rayleigh power gain `|h|²`.
    pub fading: f64,
}

impl Station {
    pub fn distance(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Deployment {
    pub stations: Vec<Station>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Service {
    /// Index into [`Deployment::stations`].
    pub station: usize,
    pub distance: f64,
    pub sinr: f64,
}

impl Deployment {
    /// Serving cacher and its SINR, or `None` when no station caches the
    /// content. Every other station interferes.
    pub fn serve(&self, config: &NetworkConfig, noise_power: f64) -> Option<Service> {
        let beta = config.path_loss_exponent();
        let mut best: Option<(usize, f64)> = None;
        for (k, s) in self.stations.iter().enumerate() {
            if !s.caches {
                continue;
            }
            let mean_power = config.tier(s.tier).power * s.distance().powf(-beta);
            if best.is_none_or(|(_, p)| mean_power > p) {
                best = Some((k, mean_power));
            }
        }
        let (serving, _) = best?;
        let mut signal = 0.0;
        let mut interference = 0.0;
        for (k, s) in self.stations.iter().enumerate() {
            let rx = config.tier(s.tier).power * s.fading * s.distance().powf(-beta);
            if k == serving {
                signal = rx;
            } else {
                interference += rx;
            }
        }
        Some(Service {
            station: serving,
            distance: self.stations[serving].distance(),
            sinr: signal / (interference + noise_power),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub deployment: Deployment,
    pub requested: usize,
    pub service: Option<Service>,
    pub success: bool,
}

impl Realization {
    pub fn serving_tier(&self) -> Option<usize> {
        self.service.map(|s| self.deployment.stations[s.station].tier)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Sampler<'a> {
    config: &'a NetworkConfig,
    policy: &'a CachingPolicy,
    popularity: WeightedIndex<f64>,
    counts: Vec<Poisson<f64>>,
    half: f64,
    noise: f64,
    seed: u64,
}

impl<'a> Sampler<'a> {
    fn new(
        config: &'a NetworkConfig,
        catalog: &ContentCatalog,
        policy: &'a CachingPolicy,
        settings: &SimSettings,
    ) -> Result<Self> {
        settings.check()?;
        ensure_feasible(policy, config, catalog)?;
        let popularity = WeightedIndex::new(catalog.popularity())
            .map_err(|e| Error::invalid(format!("popularity vector: {e}")))?;
        let area = settings.window_side * settings.window_side;
        let counts = config
            .tiers()
            .iter()
            .map(|t| {
                Poisson::new(t.density * area)
                    .map_err(|e| Error::invalid(format!("BS count distribution: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Sampler {
            config,
            policy,
            popularity,
            counts,
            half: 0.5 * settings.window_side,
            noise: settings.noise(config),
            seed: settings.seed,
        })
    }

    fn sample(&self, stream: u64) -> Realization {
        let mut rng = stream_rng(self.seed, stream);
        let requested = self.popularity.sample(&mut rng);
        let mut stations = Vec::new();
        for (tier, count) in self.counts.iter().enumerate() {
            let n = count.sample(&mut rng) as usize;
            let p = self.policy.get(tier, requested);
            for _ in 0..n {
                let x = rng.random_range(-self.half..self.half);
                let y = rng.random_range(-self.half..self.half);
                let caches = rng.random::<f64>() < p;
                let fading: f64 = Exp1.sample(&mut rng);
                stations.push(Station {
                    tier,
                    x,
                    y,
                    caches,
                    fading,
                });
            }
        }
        let deployment = Deployment { stations };
        let service = deployment.serve(self.config, self.noise);
        let tau = self.config.sinr_threshold();
        Realization {
            success: service.is_some_and(|s| s.sinr > tau),
            deployment,
            requested,
            service,
        }
    }
}

/// Draws realization number `stream` for the seed in `settings`.
pub fn sample_realization(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
    settings: &SimSettings,
    stream: u64,
) -> Result<Realization> {
    Ok(Sampler::new(config, catalog, policy, settings)?.sample(stream))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub sdp_hat: f64,
    pub stderr: f64,
    pub realizations: u64,
    pub successes: u64,
    /// Requests per content.
    pub requests: Vec<u64>,
    /// `[tier][content]`: requests served by the tier.
    pub associations: Vec<Vec<u64>>,
    /// `[tier][content]`: successful deliveries by the tier.
    pub pair_successes: Vec<Vec<u64>>,
    /// `[tier][content]`: sum of serving distances, in metres.
    pub serving_distance_sum: Vec<Vec<f64>>,
    /// BSs dropped per tier, summed over realizations.
    pub stations: Vec<u64>,
    /// `[tier][content]`: BSs dropped, and how many cached the requested content.
    pub stations_by_request: Vec<Vec<u64>>,
    pub cachers_by_request: Vec<Vec<u64>>,
}

impl SimEstimate {
    /// Empirical `W_{i|j}`.
    pub fn association_frequency(&self, tier: usize, content: usize) -> Option<f64> {
        let served: u64 = self.associations.iter().map(|row| row[content]).sum();
        (served > 0).then(|| self.associations[tier][content] as f64 / served as f64)
    }

    pub fn mean_serving_distance(&self, tier: usize, content: usize) -> Option<f64> {
        let n = self.associations[tier][content];
        (n > 0).then(|| self.serving_distance_sum[tier][content] / n as f64)
    }

    /// `per_pair[i][j]`: fraction of requests for `j` delivered by tier `i`.
    pub fn to_report(&self) -> SdpReport {
        let per_pair = self
            .pair_successes
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.requests)
                    .map(|(s, r)| if *r == 0 { 0.0 } else { *s as f64 / *r as f64 })
                    .collect()
            })
            .collect();
        SdpReport {
            total: self.sdp_hat,
            per_pair,
            mode: SdpMode::MonteCarlo,
            stderr: Some(self.stderr),
        }
    }
}

struct Outcome {
    requested: usize,
    served_by: Option<(usize, f64)>,
    success: bool,
    stations: Vec<u64>,
    cachers: Vec<u64>,
}

/// Monte Carlo SDP estimate; bit-identical for fixed inputs and seed.
pub fn estimate_sdp(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
    settings: &SimSettings,
) -> Result<SimEstimate> {
    let sampler = Sampler::new(config, catalog, policy, settings)?;
    let (n, m) = (config.num_tiers(), catalog.len());

    let outcomes: Vec<Outcome> = (0..settings.realizations as u64)
        .into_par_iter()
        .map(|k| {
            let r = sampler.sample(k);
            let mut stations = vec![0; n];
            let mut cachers = vec![0; n];
            for s in &r.deployment.stations {
                stations[s.tier] += 1;
                cachers[s.tier] += u64::from(s.caches);
            }
            Outcome {
                requested: r.requested,
                served_by: r.serving_tier().zip(r.service.map(|s| s.distance)),
                success: r.success,
                stations,
                cachers,
            }
        })
        .collect();

    let mut est = SimEstimate {
        sdp_hat: 0.0,
        stderr: 0.0,
        realizations: outcomes.len() as u64,
        successes: 0,
        requests: vec![0; m],
        associations: vec![vec![0; m]; n],
        pair_successes: vec![vec![0; m]; n],
        serving_distance_sum: vec![vec![0.0; m]; n],
        stations: vec![0; n],
        stations_by_request: vec![vec![0; m]; n],
        cachers_by_request: vec![vec![0; m]; n],
    };
    for o in &outcomes {
        let j = o.requested;
        est.requests[j] += 1;
        for i in 0..n {
            est.stations[i] += o.stations[i];
            est.stations_by_request[i][j] += o.stations[i];
            est.cachers_by_request[i][j] += o.cachers[i];
        }
        if let Some((tier, dist)) = o.served_by {
            est.associations[tier][j] += 1;
            est.serving_distance_sum[tier][j] += dist;
            if o.success {
                est.pair_successes[tier][j] += 1;
                est.successes += 1;
            }
        }
    }
    let total = est.realizations as f64;
    est.sdp_hat = est.successes as f64 / total;
    est.stderr = (est.sdp_hat * (1.0 - est.sdp_hat) / total).sqrt();
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{density_per_disc, TierParams};

    fn single_tier(k: f64, power: f64, q: f64) -> NetworkConfig {
        NetworkConfig::new(
            vec![TierParams::new(density_per_disc(k, 500.0), power, q).unwrap()],
            4.0,
            0.1,
            0.0,
        )
        .unwrap()
    }

    fn settings(seed: u64, n: usize) -> SimSettings {
        SimSettings {
            realizations: n,
            ..SimSettings::new(seed)
        }
    }

    #[test]
    fn empty_caches_never_serve() {
        let cfg = single_tier(2.0, 10.0, 2.0);
        let cat = ContentCatalog::zipf(4, 0.8).unwrap();
        let pol = CachingPolicy::filled(1, 4, 0.0);
        let r = sample_realization(&cfg, &cat, &pol, &settings(1, 1), 0).unwrap();
        assert!(r.service.is_none() && !r.success);
        let est = estimate_sdp(&cfg, &cat, &pol, &settings(1, 200)).unwrap();
        assert_eq!(est.successes, 0);
        assert_eq!(est.sdp_hat, 0.0);
    }

    #[test]
    fn lone_station_follows_rayleigh_tail() {
        let cfg = single_tier(1.0, 2.0, 1.0);
        let (r, noise) = (300.0_f64, 1e-10);
        let mut rng = stream_rng(7, 0);
        let trials = 40_000;
        let mut hits = 0;
        for _ in 0..trials {
            let d = Deployment {
                stations: vec![Station {
                    tier: 0,
                    x: r,
                    y: 0.0,
                    caches: true,
                    fading: Exp1.sample(&mut rng),
                }],
            };
            let s = d.serve(&cfg, noise).unwrap();
            hits += u32::from(s.sinr > 0.1);
        }
        let want = (-0.1 * noise * r.powi(4) / 2.0).exp();
        let got = hits as f64 / trials as f64;
        let se = (want * (1.0 - want) / trials as f64).sqrt();
        assert!((got - want).abs() < 4.0 * se, "{got} vs {want}");
    }

    #[test]
    fn strongest_cacher_serves() {
        let cfg = NetworkConfig::new(
            vec![
                TierParams::new(1e-6, 100.0, 1.0).unwrap(),
                TierParams::new(1e-6, 1.0, 1.0).unwrap(),
            ],
            4.0,
            0.1,
            0.0,
        )
        .unwrap();
        let st = |tier, x: f64, caches| Station {
            tier,
            x,
            y: 0.0,
            caches,
            fading: 1.0,
        };
        // 100·300⁻⁴ > 1·100⁻⁴, and the nearer non-cacher is ignored.
        let d = Deployment {
            stations: vec![st(1, 100.0, true), st(0, 300.0, true), st(1, 50.0, false)],
        };
        let s = d.serve(&cfg, 0.0).unwrap();
        assert_eq!(s.station, 1);
        let rx = |p: f64, x: f64| p * x.powi(-4);
        let want = rx(100.0, 300.0) / (rx(1.0, 100.0) + rx(1.0, 50.0));
        assert!((s.sinr - want).abs() < 1e-12 * want);
    }

    #[test]
    fn bit_identical_across_thread_counts() {
        let cfg = single_tier(3.0, 5.0, 2.0);
        let cat = ContentCatalog::zipf(5, 0.8).unwrap();
        let pol = CachingPolicy::from_rows(vec![vec![0.8, 0.6, 0.3, 0.2, 0.1]]).unwrap();
        let s = settings(42, 500);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_sdp(&cfg, &cat, &pol, &s).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(3));
        let other = estimate_sdp(&cfg, &cat, &pol, &settings(43, 500)).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn counts_and_cache_marginals() {
        let cfg = NetworkConfig::new(
            vec![
                TierParams::new(density_per_disc(1.0, 500.0), 200.0, 1.0).unwrap(),
                TierParams::new(density_per_disc(4.0, 500.0), 2.0, 1.0).unwrap(),
            ],
            4.0,
            0.1,
            0.0,
        )
        .unwrap();
        let cat = ContentCatalog::zipf(2, 1.0).unwrap();
        let pol = CachingPolicy::from_rows(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let s = settings(9, 2000);
        let est = estimate_sdp(&cfg, &cat, &pol, &s).unwrap();
        let area = s.window_side * s.window_side;
        for i in 0..2 {
            let mean = cfg.tier(i).density * area;
            let got = est.stations[i] as f64 / est.realizations as f64;
            let sd = (mean / est.realizations as f64).sqrt();
            assert!((got - mean).abs() < 3.0 * sd, "tier {i}: {got} vs {mean}");
            for j in 0..2 {
                let n = est.stations_by_request[i][j] as f64;
                let frac = est.cachers_by_request[i][j] as f64 / n;
                let p = pol.get(i, j);
                // Counts within a realization share a request, so allow extra slack.
                assert!((frac - p).abs() < 4.0 * (p * (1.0 - p) / n).sqrt() + 0.01);
            }
        }
        assert_eq!(est.requests.iter().sum::<u64>(), est.realizations);
        let report = est.to_report();
        let composed: f64 = (0..2)
            .map(|j| est.requests[j] as f64 / est.realizations as f64 * (report.per_pair[0][j] + report.per_pair[1][j]))
            .sum();
        assert!((composed - report.total).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_settings() {
        let cfg = single_tier(1.0, 1.0, 1.0);
        let cat = ContentCatalog::zipf(2, 1.0).unwrap();
        let pol = CachingPolicy::filled(1, 2, 0.5);
        let mut s = settings(0, 0);
        assert!(estimate_sdp(&cfg, &cat, &pol, &s).is_err());
        s.realizations = 1;
        s.window_side = -1.0;
        assert!(estimate_sdp(&cfg, &cat, &pol, &s).is_err());
    }
}
