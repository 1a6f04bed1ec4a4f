//! Caching-probability optimization under the interference-limited SDP.
//!
//! The objective is `C'(P) = Σ_j Σ_i V_ij p_ij / (Σ_k G_k p_kj + E)`, concave on
//! the polytope `0 ≤ p_ij ≤ 1`, `Σ_j p_ij ≤ Q_i`. Holding every row but one
//! fixed, the stationarity condition for row `i` reads
//!
//! ```text
//! p_ij = min{ [ (√(V_ij E / η_i) − s_ij) / G_i ]⁺, 1 },   s_ij = Σ_{k≠i} G_k p_kj + E
//! ```
//!
//! and the multiplier `η_i` is fixed by the budget. [`solve_p1`] sweeps this
//! row update over the tiers; projected gradient ascent is kept as a second,
//! independent method.

use serde::{Deserialize, Serialize};

use crate::analytics::total_sdp_interference_limited;
use crate::error::{Error, Result};
use crate::model::{CachingPolicy, ContentCatalog, NetworkConfig, TierParams};
use crate::specfun::channel_constants;

/// Residual threshold for accepting a KKT certificate.
pub const KKT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConstants {
    tiers: usize,
    contents: usize,
    /// `V_ij = λ_i S_i^(2/β) t_j`, row-major.
    pub v: Vec<f64>,
    /// `G_i = λ_i S_i^(2/β) T`.
    pub g: Vec<f64>,
    /// `E = D Σ_i λ_i S_i^(2/β)`.
    pub e: f64,
}

impl ObjectiveConstants {
    pub fn new(config: &NetworkConfig, catalog: &ContentCatalog) -> Result<Self> {
        let c = channel_constants(config.sinr_threshold(), config.path_loss_exponent())?;
        let a = config.tier_weights();
        let t = catalog.popularity();
        let v = a
            .iter()
            .flat_map(|ai| t.iter().map(move |tj| ai * tj))
            .collect();
        Ok(ObjectiveConstants {
            tiers: a.len(),
            contents: t.len(),
            v,
            g: a.iter().map(|ai| ai * c.t).collect(),
            e: c.d * a.iter().sum::<f64>(),
        })
    }

    pub fn v(&self, tier: usize, content: usize) -> f64 {
        self.v[tier * self.contents + content]
    }

    fn check(&self, policy: &CachingPolicy) -> Result<()> {
        if policy.num_tiers() != self.tiers || policy.num_contents() != self.contents {
            return Err(Error::DimensionMismatch {
                expected_tiers: self.tiers,
                expected_contents: self.contents,
                tiers: policy.num_tiers(),
                contents: policy.num_contents(),
            });
        }
        Ok(())
    }

    /// `Σ_k G_k p_kj` for every content.
    fn loads(&self, policy: &CachingPolicy) -> Vec<f64> {
        let mut load = vec![0.0; self.contents];
        for (gk, row) in self.g.iter().zip(policy.rows()) {
            for (l, p) in load.iter_mut().zip(row) {
                *l += gk * p;
            }
        }
        load
    }

    pub fn value(&self, policy: &CachingPolicy) -> Result<f64> {
        self.check(policy)?;
        let load = self.loads(policy);
        let mut total = 0.0;
        for (j, lj) in load.iter().enumerate() {
            let num: f64 = (0..self.tiers).map(|i| self.v(i, j) * policy.get(i, j)).sum();
            total += num / (lj + self.e);
        }
        Ok(total)
    }

    /// `∂C'/∂p_ij = V_ij E / (Σ_k G_k p_kj + E)²`.
    pub fn gradient(&self, policy: &CachingPolicy) -> Result<CachingPolicy> {
        self.check(policy)?;
        let load = self.loads(policy);
        let mut grad = CachingPolicy::filled(self.tiers, self.contents, 0.0);
        for (j, lj) in load.iter().enumerate() {
            let denom = (lj + self.e) * (lj + self.e);
            for i in 0..self.tiers {
                grad.set(i, j, self.v(i, j) * self.e / denom);
            }
        }
        Ok(grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    BlockKkt,
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub max_outer_iters: usize,
    pub convergence_tol: f64,
    pub bisection_tol: f64,
    pub method: SolveMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_outer_iters: 5000,
            convergence_tol: 1e-9,
            bisection_tol: 1e-12,
            method: SolveMethod::BlockKkt,
        }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<()> {
        if self.max_outer_iters == 0 || !(self.convergence_tol > 0.0) || !(self.bisection_tol > 0.0) {
            return Err(Error::invalid(
                "solver iteration limit and tolerances must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    /// Budget multipliers. `+∞` for an empty cache, `0` for a full one.
    pub eta: Vec<f64>,
    pub stationarity_residual: f64,
    pub budget_residual: f64,
    pub box_residual: f64,
}

impl KktCertificate {
    pub fn certified(&self) -> bool {
        self.stationarity_residual < KKT_TOL
            && self.budget_residual < KKT_TOL
            && self.box_residual < KKT_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct P1Solution {
    pub policy: CachingPolicy,
    pub certificate: KktCertificate,
    /// `C'` at `policy`.
    pub objective: f64,
    pub iterations: usize,
    /// Method that produced `policy`; differs from the requested one after a
    /// fallback.
    pub method: SolveMethod,
}

/// Finds `θ` with `Σ_j clamp(c_j θ + o_j, 0, 1) = budget` for `c_j ≥ 0` by
/// bisection, then snaps `θ` onto the exact root of the active linear piece.
pub(crate) fn fill_to_budget(
    slopes: &[f64],
    offsets: &[f64],
    budget: f64,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    debug_assert_eq!(slopes.len(), offsets.len());
    let fill = |theta: f64| -> Vec<f64> {
        slopes
            .iter()
            .zip(offsets)
            .map(|(c, o)| (c * theta + o).clamp(0.0, 1.0))
            .collect()
    };
    let total = |theta: f64| -> f64 {
        slopes
            .iter()
            .zip(offsets)
            .map(|(c, o)| (c * theta + o).clamp(0.0, 1.0))
            .sum()
    };

    let fixed: f64 = slopes
        .iter()
        .zip(offsets)
        .filter(|(c, _)| **c <= 0.0)
        .map(|(_, o)| o.clamp(0.0, 1.0))
        .sum();
    let movable = slopes.iter().filter(|c| **c > 0.0).count() as f64;
    let slack = 1e-9 * (1.0 + budget.abs());
    if budget < fixed - slack || budget > fixed + movable + slack {
        return Err(Error::invalid(format!(
            "budget {budget} outside the attainable range [{fixed}, {}]",
            fixed + movable
        )));
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (c, o) in slopes.iter().zip(offsets) {
        if *c > 0.0 {
            lo = lo.min(-o / c);
            hi = hi.max((1.0 - o) / c);
        }
    }
    if movable == 0.0 {
        return Ok((fill(0.0), 0.0));
    }
    if budget <= fixed {
        return Ok((fill(lo), lo));
    }
    if budget >= fixed + movable {
        return Ok((fill(hi), hi));
    }

    for _ in 0..300 {
        if hi - lo <= tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if total(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = 0.5 * (lo + hi);

    // On the active piece the total is linear in θ.
    let (mut ones, mut free_offset, mut free_slope) = (0.0, 0.0, 0.0);
    for (c, o) in slopes.iter().zip(offsets) {
        let x = c * theta + o;
        if x >= 1.0 {
            ones += 1.0;
        } else if x > 0.0 {
            free_offset += o;
            free_slope += c;
        } else if *c <= 0.0 {
            ones += o.clamp(0.0, 1.0);
        }
    }
    if free_slope > 0.0 {
        let exact = (budget - ones - free_offset) / free_slope;
        if (total(exact) - budget).abs() <= (total(theta) - budget).abs() {
            theta = exact;
        }
    }
    Ok((fill(theta), theta))
}

/// Euclidean projection of `y` onto `{x : 0 ≤ x ≤ 1, Σ x = budget}`.
pub(crate) fn project_capped_simplex(y: &[f64], budget: f64, tol: f64) -> Result<Vec<f64>> {
    let ones = vec![1.0; y.len()];
    fill_to_budget(&ones, y, budget, tol).map(|(x, _)| x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Empty,
    Full,
    Free,
}

fn row_kind(q: f64, m: usize) -> RowKind {
    if q <= 0.0 {
        RowKind::Empty
    } else if q >= m as f64 {
        RowKind::Full
    } else {
        RowKind::Free
    }
}

/// Best row `i` against the other rows of `policy`; returns the row and `η_i`.
fn best_row(
    consts: &ObjectiveConstants,
    policy: &CachingPolicy,
    load: &[f64],
    tier: usize,
    budget: f64,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let gi = consts.g[tier];
    let m = policy.num_contents();
    let mut slopes = Vec::with_capacity(m);
    let mut offsets = Vec::with_capacity(m);
    for j in 0..m {
        let s = load[j] - gi * policy.get(tier, j) + consts.e;
        slopes.push((consts.v(tier, j) * consts.e).sqrt() / gi);
        offsets.push(-s / gi);
    }
    let (row, theta) = fill_to_budget(&slopes, &offsets, budget, tol)?;
    Ok((row, 1.0 / (theta * theta)))
}

/// KKT residuals of `policy` for the interference-limited problem.
pub fn kkt_certificate(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    policy: &CachingPolicy,
) -> Result<KktCertificate> {
    let consts = ObjectiveConstants::new(config, catalog)?;
    certify(&consts, config, policy, SolveOptions::default().bisection_tol)
}

fn certify(
    consts: &ObjectiveConstants,
    config: &NetworkConfig,
    policy: &CachingPolicy,
    tol: f64,
) -> Result<KktCertificate> {
    consts.check(policy)?;
    let m = policy.num_contents();
    let mut box_residual: f64 = 0.0;
    for p in policy.as_slice() {
        box_residual = box_residual.max(-p).max(p - 1.0);
    }
    let load = consts.loads(policy);
    let mut eta = Vec::with_capacity(config.num_tiers());
    let (mut stationarity, mut budget_residual): (f64, f64) = (0.0, 0.0);
    for (i, tier) in config.tiers().iter().enumerate() {
        let q = tier.cache_size;
        budget_residual = budget_residual.max((policy.row_sum(i) - q).abs());
        let target = match row_kind(q, m) {
            RowKind::Empty => {
                eta.push(f64::INFINITY);
                vec![0.0; m]
            }
            RowKind::Full => {
                eta.push(0.0);
                vec![1.0; m]
            }
            RowKind::Free => {
                let (row, e) = best_row(consts, policy, &load, i, q, tol)?;
                eta.push(e);
                row
            }
        };
        for (x, p) in target.iter().zip(policy.row(i)) {
            stationarity = stationarity.max((x - p).abs());
        }
    }
    Ok(KktCertificate {
        eta,
        stationarity_residual: stationarity,
        budget_residual,
        box_residual: box_residual.max(0.0),
    })
}

/// Uniform policy `p_ij = Q_i / M`.
pub fn baseline_uniform(config: &NetworkConfig, catalog: &ContentCatalog) -> Result<CachingPolicy> {
    config.check_catalog(catalog)?;
    let m = catalog.len();
    CachingPolicy::from_rows(
        config
            .tiers()
            .iter()
            .map(|t| vec![t.cache_size / m as f64; m])
            .collect(),
    )
}

/// Most-popular policy: ones on the first `⌊Q_i⌋` contents, the fractional
/// remainder on the next one.
pub fn baseline_popular(config: &NetworkConfig, catalog: &ContentCatalog) -> Result<CachingPolicy> {
    config.check_catalog(catalog)?;
    let m = catalog.len();
    let rows = config
        .tiers()
        .iter()
        .map(|t| {
            let whole = t.cache_size.floor() as usize;
            let mut row = vec![0.0; m];
            for p in row.iter_mut().take(whole.min(m)) {
                *p = 1.0;
            }
            if whole < m {
                row[whole] = t.cache_size - whole as f64;
            }
            row
        })
        .collect();
    CachingPolicy::from_rows(rows)
}

fn block_kkt(
    consts: &ObjectiveConstants,
    config: &NetworkConfig,
    start: CachingPolicy,
    options: &SolveOptions,
) -> Result<(CachingPolicy, usize)> {
    let m = start.num_contents();
    let mut policy = start;
    let mut load = consts.loads(&policy);
    for sweep in 1..=options.max_outer_iters {
        let mut delta: f64 = 0.0;
        for (i, tier) in config.tiers().iter().enumerate() {
            if row_kind(tier.cache_size, m) != RowKind::Free {
                continue;
            }
            let (row, _) = best_row(consts, &policy, &load, i, tier.cache_size, options.bisection_tol)?;
            let gi = consts.g[i];
            for (j, x) in row.iter().enumerate() {
                let old = policy.get(i, j);
                delta = delta.max((x - old).abs());
                load[j] += gi * (x - old);
            }
            policy.row_mut(i).copy_from_slice(&row);
        }
        if delta < options.convergence_tol {
            return Ok((policy, sweep));
        }
        if sweep % 64 == 0 {
            load = consts.loads(&policy);
        }
    }
    Ok((policy, options.max_outer_iters))
}

fn project_policy(
    config: &NetworkConfig,
    y: &CachingPolicy,
    tol: f64,
) -> Result<CachingPolicy> {
    let m = y.num_contents();
    let mut out = y.clone();
    for (i, tier) in config.tiers().iter().enumerate() {
        let row = match row_kind(tier.cache_size, m) {
            RowKind::Empty => vec![0.0; m],
            RowKind::Full => vec![1.0; m],
            RowKind::Free => project_capped_simplex(y.row(i), tier.cache_size, tol)?,
        };
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

fn step(policy: &CachingPolicy, grad: &CachingPolicy, alpha: f64) -> CachingPolicy {
    let mut y = policy.clone();
    for i in 0..y.num_tiers() {
        for (p, g) in y.row_mut(i).iter_mut().zip(grad.row(i)) {
            *p += alpha * g;
        }
    }
    y
}

fn dot_diff(a: &CachingPolicy, b: &CachingPolicy, w: &CachingPolicy) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .zip(w.as_slice())
        .map(|((x, y), g)| (x - y) * g)
        .sum()
}

/// Projected gradient ascent with Barzilai–Borwein steps and Armijo
/// backtracking.
fn projected_gradient(
    consts: &ObjectiveConstants,
    config: &NetworkConfig,
    start: CachingPolicy,
    options: &SolveOptions,
) -> Result<(CachingPolicy, usize)> {
    let tol = options.bisection_tol;
    let mut policy = project_policy(config, &start, tol)?;
    let mut value = consts.value(&policy)?;
    let mut grad = consts.gradient(&policy)?;
    let scale = |g: &CachingPolicy| g.as_slice().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut alpha = 1.0 / scale(&grad).max(f64::MIN_POSITIVE);

    for iter in 1..=options.max_outer_iters {
        let g_max = scale(&grad).max(f64::MIN_POSITIVE);
        let probe = project_policy(config, &step(&policy, &grad, 1.0 / g_max), tol)?;
        if probe.max_abs_diff(&policy) < options.convergence_tol {
            return Ok((policy, iter));
        }

        let mut accepted = None;
        let mut trial_alpha = alpha;
        for _ in 0..60 {
            let cand = project_policy(config, &step(&policy, &grad, trial_alpha), tol)?;
            let cand_value = consts.value(&cand)?;
            if cand_value >= value + 1e-4 * dot_diff(&cand, &policy, &grad) {
                accepted = Some((cand, cand_value));
                break;
            }
            trial_alpha *= 0.5;
        }
        let Some((next, next_value)) = accepted else {
            // No ascent left at working precision.
            return Ok((policy, iter));
        };

        let next_grad = consts.gradient(&next)?;
        let mut ss = 0.0;
        let mut sy = 0.0;
        for ((pn, p), (gn, g)) in next
            .as_slice()
            .iter()
            .zip(policy.as_slice())
            .zip(next_grad.as_slice().iter().zip(grad.as_slice()))
        {
            let s = pn - p;
            ss += s * s;
            sy += s * (gn - g);
        }
        let g_next = scale(&next_grad).max(f64::MIN_POSITIVE);
        alpha = if sy < 0.0 { ss / -sy } else { 1e6 / g_next };
        alpha = alpha.clamp(1e-12 / g_next, 1e12 / g_next);

        policy = next;
        value = next_value;
        grad = next_grad;
    }
    Ok((policy, options.max_outer_iters))
}

/// Maximizes the interference-limited SDP over feasible caching policies.
///
/// Rows with `Q_i = 0` or `Q_i = M` are pinned to zeros or ones. When the
/// requested method does not produce a certified point the other method is
/// run from its iterate and the better of the two is returned; an uncertified
/// result is still returned, with the residuals in its certificate.
pub fn solve_p1(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    options: &SolveOptions,
) -> Result<P1Solution> {
    solve_p1_from(config, catalog, baseline_uniform(config, catalog)?, options)
}

/// [`solve_p1`] started from `start`, any matrix in the unit box.
pub fn solve_p1_from(
    config: &NetworkConfig,
    catalog: &ContentCatalog,
    start: CachingPolicy,
    options: &SolveOptions,
) -> Result<P1Solution> {
    options.check()?;
    config.check_catalog(catalog)?;
    let consts = ObjectiveConstants::new(config, catalog)?;
    consts.check(&start)?;
    if start.as_slice().iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("starting policy must lie in the unit box"));
    }
    let run = |method: SolveMethod, from: CachingPolicy| match method {
        SolveMethod::BlockKkt => block_kkt(&consts, config, from, options),
        SolveMethod::ProjectedGradient => projected_gradient(&consts, config, from, options),
    };

    let (policy, iterations) = run(options.method, start)?;
    let certificate = certify(&consts, config, &policy, options.bisection_tol)?;
    let mut best = (policy, certificate, iterations, options.method);

    if !best.1.certified() {
        let other = match options.method {
            SolveMethod::BlockKkt => SolveMethod::ProjectedGradient,
            SolveMethod::ProjectedGradient => SolveMethod::BlockKkt,
        };
        let (policy, iterations) = run(other, best.0.clone())?;
        let certificate = certify(&consts, config, &policy, options.bisection_tol)?;
        let better = certificate.certified()
            || consts.value(&policy)? > consts.value(&best.0)?;
        if better {
            best = (policy, certificate, best.2 + iterations, other);
        }
    }

    let (policy, certificate, iterations, method) = best;
    let objective = total_sdp_interference_limited(config, catalog, &policy)?.total;
    Ok(P1Solution {
        policy,
        certificate,
        objective,
        iterations,
        method,
    })
}

/// Optimal single-tier probabilities
/// `p_j = min{[(1/T)√(t_j D/η) − D/T]⁺, 1}` with `Σ_j p_j = Q`.
/// Returns the row and `η`.
pub fn solve_single_tier(
    catalog: &ContentCatalog,
    cache_size: f64,
    tau: f64,
    beta: f64,
) -> Result<(Vec<f64>, f64)> {
    let m = catalog.len();
    if !(0.0..=m as f64).contains(&cache_size) {
        return Err(Error::invalid(format!(
            "cache size {cache_size} must lie in [0, {m}]"
        )));
    }
    let c = channel_constants(tau, beta)?;
    match row_kind(cache_size, m) {
        RowKind::Empty => return Ok((vec![0.0; m], f64::INFINITY)),
        RowKind::Full => return Ok((vec![1.0; m], 0.0)),
        RowKind::Free => {}
    }
    let slopes: Vec<f64> = catalog
        .popularity()
        .iter()
        .map(|t| (t * c.d).sqrt() / c.t)
        .collect();
    let offsets = vec![-c.d / c.t; m];
    let (row, theta) = fill_to_budget(&slopes, &offsets, cache_size, 1e-14)?;
    Ok((row, 1.0 / (theta * theta)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P2Solution {
    pub x: Vec<f64>,
    pub q_e: f64,
    pub eta: f64,
    /// `C1'* = Σ_j t_j x_j / (T x_j + D)`, an upper bound on the N-tier optimum.
    pub bound: f64,
}

/// Single-tier problem at the equivalent cache size
/// `Q_e = Σ_i λ_i S_i^(2/β) Q_i / Σ_i λ_i S_i^(2/β)`.
pub fn solve_p2_equivalent(config: &NetworkConfig, catalog: &ContentCatalog) -> Result<P2Solution> {
    config.check_catalog(catalog)?;
    let a = config.tier_weights();
    let q_e = a
        .iter()
        .zip(config.tiers())
        .map(|(ai, t)| ai * t.cache_size)
        .sum::<f64>()
        / a.iter().sum::<f64>();
    let m = catalog.len();
    if q_e >= m as f64 {
        return Err(Error::invalid(format!(
            "equivalent cache size {q_e} must be below the catalog size {m}"
        )));
    }
    let (tau, beta) = (config.sinr_threshold(), config.path_loss_exponent());
    let (x, eta) = solve_single_tier(catalog, q_e, tau, beta)?;
    let c = channel_constants(tau, beta)?;
    let bound = catalog
        .popularity()
        .iter()
        .zip(&x)
        .map(|(t, p)| t * p / (c.t * p + c.d))
        .sum();
    Ok(P2Solution { x, q_e, eta, bound })
}

/// Single-tier network with the weights of `config` collapsed onto one tier of
/// cache size `Q_e`; handy for comparing against [`solve_p2_equivalent`].
pub fn equivalent_single_tier(config: &NetworkConfig, q_e: f64) -> Result<NetworkConfig> {
    let weight: f64 = config.tier_weights().iter().sum();
    NetworkConfig::new(
        vec![TierParams::new(weight, 1.0, q_e)?],
        config.path_loss_exponent(),
        config.sinr_threshold(),
        0.0,
    )
}
