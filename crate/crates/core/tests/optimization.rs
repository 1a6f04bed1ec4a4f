//! Optimality properties of the caching solvers on randomized networks.

use hetcache_core::analytics::total_sdp_interference_limited;
use hetcache_core::model::{dbm_to_watts, density_per_disc, validate_policy};
use hetcache_core::optimizer::{
    baseline_uniform, kkt_certificate, solve_p1, solve_p1_from, solve_p2_equivalent, SolveMethod,
    SolveOptions,
};
use hetcache_core::{CachingPolicy, ContentCatalog, NetworkConfig, TierParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_network(rng: &mut ChaCha8Rng, m: usize, equal_caches: bool) -> NetworkConfig {
    let n = rng.random_range(2..=3);
    let shared = rng.random_range(0.05..0.6) * m as f64;
    let tiers = (0..n)
        .map(|_| {
            let q = if equal_caches {
                shared
            } else {
                rng.random_range(0.05..0.8) * m as f64
            };
            TierParams::new(
                density_per_disc(rng.random_range(0.2..10.0), 500.0),
                dbm_to_watts(rng.random_range(15.0..50.0)),
                q,
            )
            .unwrap()
        })
        .collect();
    NetworkConfig::new(
        tiers,
        rng.random_range(2.5..5.5),
        10f64.powf(rng.random_range(-1.0..0.5)),
        0.0,
    )
    .unwrap()
}

#[test]
fn certified_optimum_beats_random_restarts() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let pg = SolveOptions {
        method: SolveMethod::ProjectedGradient,
        ..Default::default()
    };
    for _ in 0..6 {
        let m = rng.random_range(8..30);
        let cfg = random_network(&mut rng, m, false);
        let cat = ContentCatalog::zipf(m, rng.random_range(0.2..1.8)).unwrap();
        let best = solve_p1(&cfg, &cat, &SolveOptions::default()).unwrap();
        assert!(best.certificate.certified());
        let mut restarts = f64::MIN;
        for _ in 0..20 {
            let start = CachingPolicy::from_rows(
                (0..cfg.num_tiers())
                    .map(|_| (0..m).map(|_| rng.random_range(0.0..1.0)).collect())
                    .collect(),
            )
            .unwrap();
            restarts = restarts.max(solve_p1_from(&cfg, &cat, start, &pg).unwrap().objective);
        }
        assert!(best.objective >= restarts - 1e-5, "{} < {restarts}", best.objective);
        assert!((best.objective - restarts).abs() < 1e-5);
    }
}

#[test]
fn optimum_is_a_fixed_point_and_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let m = rng.random_range(5..60);
        let cfg = random_network(&mut rng, m, false);
        let cat = ContentCatalog::zipf(m, rng.random_range(0.0..2.0)).unwrap();
        let sol = solve_p1(&cfg, &cat, &SolveOptions::default()).unwrap();
        assert!(validate_policy(&sol.policy, &cfg, &cat).unwrap().is_empty());
        for i in 0..cfg.num_tiers() {
            assert!((sol.policy.row_sum(i) - cfg.tier(i).cache_size).abs() < 1e-9);
        }
        let again = kkt_certificate(&cfg, &cat, &sol.policy).unwrap();
        assert!(again.stationarity_residual < 1e-6);
        let value = total_sdp_interference_limited(&cfg, &cat, &sol.policy).unwrap().total;
        assert!((value - sol.objective).abs() < 1e-8);
    }
}

#[test]
fn equivalent_problem_bounds_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for round in 0..30 {
        let equal = round % 3 == 0;
        let m = rng.random_range(10..80);
        let cfg = random_network(&mut rng, m, equal);
        let cat = ContentCatalog::zipf(m, rng.random_range(0.0..2.0)).unwrap();
        let p1 = solve_p1(&cfg, &cat, &SolveOptions::default()).unwrap();
        let p2 = solve_p2_equivalent(&cfg, &cat).unwrap();
        assert!(p1.objective <= p2.bound + 1e-8);
        if equal {
            assert!((p1.objective - p2.bound).abs() < 1e-6);
            let rows = vec![p2.x.clone(); cfg.num_tiers()];
            let stacked = CachingPolicy::from_rows(rows).unwrap();
            assert!(validate_policy(&stacked, &cfg, &cat).unwrap().is_empty());
            let v = total_sdp_interference_limited(&cfg, &cat, &stacked).unwrap().total;
            assert!((v - p2.bound).abs() < 1e-10);
        }
    }
}

#[test]
fn more_cache_strictly_helps() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..15 {
        let m = rng.random_range(10..50);
        let cfg = random_network(&mut rng, m, false);
        let cat = ContentCatalog::zipf(m, rng.random_range(0.0..2.0)).unwrap();
        let base = solve_p1(&cfg, &cat, &SolveOptions::default()).unwrap().objective;
        for i in 0..cfg.num_tiers() {
            let t = cfg.tier(i);
            if t.cache_size + 0.5 > m as f64 {
                continue;
            }
            let bigger = cfg
                .with_tier(i, TierParams::new(t.density, t.power, t.cache_size + 0.5).unwrap())
                .unwrap();
            let up = solve_p1(&bigger, &cat, &SolveOptions::default()).unwrap().objective;
            assert!(up > base, "tier {i}: {up} !> {base}");
        }
    }
}

#[test]
fn uniform_demand_makes_uniform_caching_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..10 {
        let m = rng.random_range(5..50);
        let cfg = random_network(&mut rng, m, false);
        let cat = ContentCatalog::zipf(m, 0.0).unwrap();
        let opt = solve_p1(&cfg, &cat, &SolveOptions::default()).unwrap().objective;
        let uni = total_sdp_interference_limited(&cfg, &cat, &baseline_uniform(&cfg, &cat).unwrap())
            .unwrap()
            .total;
        assert!((opt - uni).abs() < 1e-10);
    }
}
