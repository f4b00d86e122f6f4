//! How much data a pattern-matching learner needs on a two-hop task.
//!
//! Training triples are drawn uniformly with replacement from `X^3`. Two
//! first-hop fragments `a`, `a'` with equal intermediate gain one piece of
//! evidence per context `c` for which both `(a, c)` and `(a', c)` were drawn.
//! With `q = 1/|X|^3`:
//!
//! - one context is shared with probability `p1 = 1 - 2(1-q)^N + (1-2q)^N ≈ N²/|X|⁶`;
//! - the expected number of shared contexts is `μ = |X|·p1 ≈ N²/|X|⁵`;
//! - at least `k` are shared with probability `≈ μ^k / k!`.
//!
//! Requiring every balanced class (size `|X|`) to be connected in its
//! k-evidence graph gives `N_req ∝ |X|^(2.5 - 0.5/k)` up to log factors.
//! [`estimate_n_req`] measures this threshold by simulation.

use rand::Rng as _;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, stream, streams};
use crate::scalar::Real;
use crate::task::make_balanced_primitive;
use crate::unionfind::UnionFind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("vocabulary size must be at least 2, got {0}")]
    VocabTooSmall(u32),
    #[error("vocabulary sizes must be strictly increasing")]
    UnsortedVocab,
    #[error("evidence threshold k must be in 1..=255, got {0}")]
    BadK(usize),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("success probability must lie strictly between 0 and 1, got {0}")]
    BadProbability(f64),
    #[error("no N up to the ceiling {ceiling} reaches success probability {target} (|X| = {vocab}, k = {k})")]
    Ceiling { vocab: u32, k: usize, ceiling: u64, target: f64 },
    #[error("power-law fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("power-law fit needs positive coordinates, got ({0}, {1})")]
    NonPositive(f64, f64),
    #[error("power-law fit needs at least two distinct x values")]
    DegenerateX,
}

/// `p1 = 1 - 2(1-q)^N + (1-2q)^N` with `q = 1/|X|^3`: probability that two
/// fixed distinct triples both occur among `N` uniform draws.
///
/// Evaluated as `expm1(a)^2 + e^{2a}·expm1(N·ln1p(-q²/(1-q)²))` with
/// `a = N·ln1p(-q)`, which avoids cancellation when `q` is tiny.
pub fn evidence_pair_prob_exact<F: Real>(n: u64, vocab: u32) -> F {
    if n < 2 {
        return F::zero();
    }
    let x = F::of(vocab as f64);
    let q = (x * x * x).recip();
    let nf = F::of(n as f64);
    let a = nf * (-q).ln_1p();
    let r = q / (F::one() - q);
    let b = nf * (-(r * r)).ln_1p();
    let p = a.exp_m1().powi(2) + (a + a).exp() * b.exp_m1();
    p.max(F::zero()).min(F::one())
}

/// Leading term `N²/|X|⁶`; accurate for `|X| ≪ N ≪ |X|³`.
pub fn evidence_pair_prob_asymptotic<F: Real>(n: u64, vocab: u32) -> F {
    let nf = F::of(n as f64);
    let x = F::of(vocab as f64);
    nf * nf / x.powi(6)
}

/// Which form of `p1` to use for `μ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbForm {
    #[default]
    Asymptotic,
    Exact,
}

/// Expected number of shared contexts for one fragment pair, `|X|·p1`.
pub fn mean_evidence_mu<F: Real>(n: u64, vocab: u32, form: ProbForm) -> F {
    let p1 = match form {
        ProbForm::Asymptotic => evidence_pair_prob_asymptotic::<F>(n, vocab),
        ProbForm::Exact => evidence_pair_prob_exact::<F>(n, vocab),
    };
    F::of(vocab as f64) * p1
}

/// Leading Poisson-tail term `μ^k / k!`.
pub fn k_evidence_edge_prob<F: Real>(mu: F, k: usize) -> F {
    let mut term = F::one();
    for r in 1..=k {
        term = term * mu / F::of_usize(r);
    }
    term
}

/// Exact Poisson tail `P[Y ≥ k] = 1 - Σ_{r<k} e^{-μ} μ^r / r!`.
pub fn poisson_tail<F: Real>(mu: F, k: usize) -> F {
    if k == 0 {
        return F::one();
    }
    // sum the tail directly; the head sum cancels badly for small mu
    let mut term = (-mu).exp();
    for r in 1..=k {
        term = term * mu / F::of_usize(r);
    }
    let mut total = F::zero();
    let mut r = k;
    loop {
        total = total + term;
        r += 1;
        term = term * mu / F::of_usize(r);
        if term <= total * F::epsilon() || r > k + 10_000 {
            break;
        }
    }
    total
}

/// `α(k) = 2.5 - 0.5/k`.
pub fn theoretical_exponent<F: Real>(k: usize) -> F {
    F::of(2.5) - F::of(0.5) / F::of_usize(k)
}

/// Root of `μ^k/k! = ln|X|/|X|` in `N`, i.e.
/// `|X|^{(5k-1)/(2k)} (k! ln|X|)^{1/(2k)}`.
pub fn closed_form_n_req<F: Real>(vocab: u32, k: usize) -> F {
    let x = F::of(vocab as f64);
    let kf = F::of_usize(k);
    let fact: F = (1..=k).map(F::of_usize).fold(F::one(), |a, b| a * b);
    let two_k = kf + kf;
    x.powf((F::of(5.0) * kf - F::one()) / two_k) * (fact * x.ln()).powf(two_k.recip())
}

/// Ordinary least squares on `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<F> {
    pub exponent: F,
    pub intercept: F,
    pub r_squared: F,
}

impl<F: Real> PowerLawFit<F> {
    pub fn predict(&self, x: F) -> F {
        (self.intercept + self.exponent * x.ln()).exp()
    }
}

pub fn fit_power_law<F: Real>(points: &[(F, F)]) -> Result<PowerLawFit<F>, ScalingError> {
    if points.len() < 3 {
        return Err(ScalingError::TooFewPoints(points.len()));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > F::zero() && *y > F::zero())) {
        return Err(ScalingError::NonPositive(x.to_f64_lossy(), y.to_f64_lossy()));
    }
    let m = F::of_usize(points.len());
    let logs: Vec<(F, F)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<F>() / m;
    let my = logs.iter().map(|p| p.1).sum::<F>() / m;
    let sxx: F = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: F = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: F = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx <= F::zero() {
        return Err(ScalingError::DegenerateX);
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let r_squared = if syy <= F::zero() { F::one() } else { (sxy * sxy / (sxx * syy)).min(F::one()) };
    Ok(PowerLawFit { exponent, intercept, r_squared })
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical probability with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub successes: usize,
    pub trials: usize,
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ProbabilityEstimate {
    pub fn new(successes: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials);
        let p = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        ProbabilityEstimate { successes, trials, p, ci_low, ci_high }
    }
}

fn check_common(vocab: u32, k: usize, trials: usize) -> Result<(), ScalingError> {
    if vocab < 2 {
        return Err(ScalingError::VocabTooSmall(vocab));
    }
    if !(1..=255).contains(&k) {
        return Err(ScalingError::BadK(k));
    }
    if trials == 0 {
        return Err(ScalingError::NoTrials);
    }
    Ok(())
}

/// Number of draws after which every class of one trial is connected, or
/// `None` if that does not happen within `cap` draws.
///
/// Draws come from a stream that depends only on `(seed, trial)`, so the
/// first `N` draws of a trial are the same for every `N` and `k`: the
/// dataset of size `N` is a prefix of the dataset of size `N' > N`.
fn connection_time(vocab: u32, k: usize, cap: u64, seed: u64, trial: u64) -> Option<u64> {
    let x = vocab as usize;
    let trial_seed = derive_seed(seed, trial);
    let f1 = make_balanced_primitive(vocab, derive_seed(trial_seed, 0)).expect("vocab checked by caller");
    // class membership and position within class for every first-hop pair
    let mut members: Vec<Vec<u32>> = vec![Vec::with_capacity(x); x];
    let mut local = vec![0u32; x * x];
    for pair in 0..x * x {
        let b = f1.apply_index(pair).index();
        local[pair] = members[b].len() as u32;
        members[b].push(pair as u32);
    }
    let mut present = vec![false; x * x * x];
    // evidence[b][i * x + j] for i < j within class b
    let mut evidence = vec![0u8; x * x * x];
    let mut classes: Vec<UnionFind> = (0..x).map(|_| UnionFind::new(x)).collect();
    let mut components = x * x;
    let mut rng = stream(trial_seed, streams::TRIAL);
    let domain = (x * x * x) as u64;
    for draw in 1..=cap {
        let t = rng.random_range(0..domain) as usize;
        if present[t] {
            continue;
        }
        present[t] = true;
        let (pair, c) = (t / x, t % x);
        let b = f1.apply_index(pair).index();
        let i = local[pair] as usize;
        for (j, &other) in members[b].iter().enumerate() {
            if j == i || !present[other as usize * x + c] {
                continue;
            }
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let slot = &mut evidence[b * x * x + lo * x + hi];
            *slot += 1;
            if *slot as usize == k && classes[b].union(lo as u32, hi as u32) {
                components -= 1;
                if components == x {
                    return Some(draw);
                }
            }
        }
    }
    None
}

/// Per-trial connection times for one `(|X|, k)`; the sampling distribution
/// behind every connectivity probability at any `N ≤ cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionTimes {
    pub vocab: u32,
    pub k: usize,
    pub cap: u64,
    /// Sorted; `None` (not connected by `cap`) sorts last.
    times: Vec<Option<u64>>,
}

impl ConnectionTimes {
    pub fn simulate(vocab: u32, k: usize, trials: usize, cap: u64, seed: u64) -> Result<Self, ScalingError> {
        check_common(vocab, k, trials)?;
        let mut times: Vec<Option<u64>> =
            (0..trials as u64).into_par_iter().map(|t| connection_time(vocab, k, cap, seed, t)).collect();
        times.sort_unstable_by_key(|t| t.unwrap_or(u64::MAX));
        Ok(ConnectionTimes { vocab, k, cap, times })
    }

    pub fn trials(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[Option<u64>] {
        &self.times
    }

    /// Trials whose classes are all connected after `n` draws (`n ≤ cap`).
    pub fn successes_at(&self, n: u64) -> usize {
        self.times.partition_point(|t| t.is_some_and(|t| t <= n))
    }

    pub fn estimate_at(&self, n: u64) -> ProbabilityEstimate {
        ProbabilityEstimate::new(self.successes_at(n), self.trials())
    }

    /// Connection time of the `rank`-th fastest trial (1-based).
    fn order_statistic(&self, rank: usize) -> Option<u64> {
        self.times.get(rank.checked_sub(1)?).copied().flatten()
    }
}

/// Fraction of trials in which all `|X|` balanced classes are connected in
/// their k-evidence graphs after `N` uniform draws from `X^3`.
pub fn simulate_class_connectivity(
    vocab: u32,
    n: u64,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<ProbabilityEstimate, ScalingError> {
    Ok(ConnectionTimes::simulate(vocab, k, trials, n, seed)?.estimate_at(n))
}

/// Probability that `G(n, p)` is connected, by Monte Carlo. Edges are
/// generated with geometric skips over the `n(n-1)/2` vertex pairs.
pub fn er_connectivity_baseline(n: usize, p: f64, trials: usize, seed: u64) -> ProbabilityEstimate {
    let p = p.clamp(0.0, 1.0);
    let pairs = (n * n.saturating_sub(1) / 2) as u64;
    let successes = (0..trials as u64)
        .into_par_iter()
        .filter(|&t| {
            if n < 2 {
                return true;
            }
            if p == 0.0 {
                return false;
            }
            let mut rng = stream(derive_seed(seed, t), streams::TRIAL);
            let skip = Geometric::new(p).expect("p in (0, 1]");
            let mut uf = UnionFind::new(n);
            let mut components = n;
            let mut e = skip.sample(&mut rng);
            // row-major walk over pairs (i, j), i < j
            let (mut i, mut row_start) = (0u64, 0u64);
            while e < pairs {
                while e >= row_start + (n as u64 - 1 - i) {
                    row_start += n as u64 - 1 - i;
                    i += 1;
                }
                let j = i + 1 + (e - row_start);
                if uf.union(i as u32, j as u32) {
                    components -= 1;
                    if components == 1 {
                        return true;
                    }
                }
                e = e.saturating_add(1).saturating_add(skip.sample(&mut rng));
            }
            components == 1
        })
        .count();
    ProbabilityEstimate::new(successes, trials)
}

/// Estimated data requirement at one vocabulary size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NReqEstimate {
    pub vocab: u32,
    pub k: usize,
    /// Midpoint of the final bisection bracket.
    pub n_req: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Final bracket: success below target at `lo`, at or above at `hi`.
    pub bracket: (u64, u64),
    pub evaluations: usize,
}

/// Options for [`estimate_n_req_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Stop bisecting once `hi - lo ≤ rel_tol · (lo + hi)/2`.
    pub rel_tol: f64,
    /// Largest `N` considered; defaults to `64·|X|^3`.
    pub ceiling: Option<u64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { rel_tol: 0.05, ceiling: None }
    }
}

/// Smallest `N` at which the simulated connectivity probability reaches
/// `success_prob`, by exponential bracketing and bisection.
pub fn estimate_n_req(
    vocab: u32,
    k: usize,
    success_prob: f64,
    trials: usize,
    seed: u64,
) -> Result<NReqEstimate, ScalingError> {
    estimate_n_req_with(vocab, k, success_prob, trials, seed, SearchOptions::default())
}

pub fn estimate_n_req_with(
    vocab: u32,
    k: usize,
    success_prob: f64,
    trials: usize,
    seed: u64,
    options: SearchOptions,
) -> Result<NReqEstimate, ScalingError> {
    check_common(vocab, k, trials)?;
    if !(success_prob > 0.0 && success_prob < 1.0) {
        return Err(ScalingError::BadProbability(success_prob));
    }
    let ceiling = options.ceiling.unwrap_or_else(|| 64 * (vocab as u64).pow(3));
    let times = ConnectionTimes::simulate(vocab, k, trials, ceiling, seed)?;
    let ceiling_err = ScalingError::Ceiling { vocab, k, ceiling, target: success_prob };
    let reached = |n: u64| times.estimate_at(n).p >= success_prob;
    let mut evaluations = 0;
    let (mut lo, mut hi) = (0u64, vocab as u64);
    loop {
        evaluations += 1;
        if reached(hi) {
            break;
        }
        if hi >= ceiling {
            return Err(ceiling_err);
        }
        lo = hi;
        hi = (hi * 2).min(ceiling);
    }
    while hi - lo > 1 && (hi - lo) as f64 > options.rel_tol * (lo + hi) as f64 / 2.0 {
        let mid = lo + (hi - lo) / 2;
        evaluations += 1;
        if reached(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // distribution-free interval for the success_prob-quantile of the
    // connection time, from the Wilson interval on its rank
    let t = trials as f64;
    let (q_lo, q_hi) = wilson_interval((success_prob * t).round() as usize, trials);
    let rank_lo = ((q_lo * t).floor() as usize).max(1);
    let rank_hi = ((q_hi * t).ceil() as usize).min(trials);
    let n_lo = times.order_statistic(rank_lo).unwrap_or(lo);
    let n_hi = times.order_statistic(rank_hi).unwrap_or(ceiling);
    Ok(NReqEstimate {
        vocab,
        k,
        n_req: (lo + hi) as f64 / 2.0,
        ci_low: n_lo.min(lo) as f64,
        ci_high: n_hi.max(hi) as f64,
        bracket: (lo, hi),
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub vocab_sizes: Vec<u32>,
    pub k: usize,
    pub trials: usize,
    #[serde(default = "default_success_prob")]
    pub success_prob: f64,
    pub seed: u64,
    #[serde(default)]
    pub search: SearchOptions,
}

fn default_success_prob() -> f64 {
    0.5
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<(), ScalingError> {
        if self.vocab_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ScalingError::UnsortedVocab);
        }
        if let Some(&v) = self.vocab_sizes.iter().find(|&&v| v < 2) {
            return Err(ScalingError::VocabTooSmall(v));
        }
        if !(1..=255).contains(&self.k) {
            return Err(ScalingError::BadK(self.k));
        }
        if self.trials == 0 {
            return Err(ScalingError::NoTrials);
        }
        if !(self.success_prob > 0.0 && self.success_prob < 1.0) {
            return Err(ScalingError::BadProbability(self.success_prob));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub vocab_size: u32,
    pub n_req: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `N` solving `μ^k/k! = ln|X|/|X|`, for comparison.
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub k: usize,
    pub points: Vec<ScalingPoint>,
    /// Present when there are at least three points.
    pub fit: Option<PowerLawFit<f64>>,
    pub theoretical_exponent: f64,
}

impl ScalingResult {
    pub fn fitted_exponent(&self) -> Option<f64> {
        self.fit.map(|f| f.exponent)
    }

    pub fn r_squared(&self) -> Option<f64> {
        self.fit.map(|f| f.r_squared)
    }
}

/// Runs [`estimate_n_req_with`] for each vocabulary size, with the seed of
/// size `i` derived from the config seed, and fits a power law.
pub fn run_scaling(config: &ScalingConfig) -> Result<ScalingResult, ScalingError> {
    config.validate()?;
    let points = config
        .vocab_sizes
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let est = estimate_n_req_with(
                v,
                config.k,
                config.success_prob,
                config.trials,
                derive_seed(config.seed, i as u64),
                config.search,
            )?;
            Ok(ScalingPoint {
                vocab_size: v,
                n_req: est.n_req,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                closed_form: closed_form_n_req::<f64>(v, config.k),
            })
        })
        .collect::<Result<Vec<_>, ScalingError>>()?;
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.vocab_size as f64, p.n_req)).collect();
    let fit = if xy.len() >= 3 { Some(fit_power_law(&xy)?) } else { None };
    Ok(ScalingResult { k: config.k, points, fit, theoretical_exponent: theoretical_exponent(config.k) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_small_cases() {
        assert_eq!(evidence_pair_prob_exact::<f64>(0, 10), 0.0);
        assert_eq!(evidence_pair_prob_exact::<f64>(1, 10), 0.0);
        // N = 2: both orders of the two triples
        let q: f64 = 1e-3;
        let direct = 1.0 - 2.0 * (1.0 - q).powi(2) + (1.0 - 2.0 * q).powi(2);
        assert!((evidence_pair_prob_exact::<f64>(2, 10) - direct).abs() < 1e-15);
        assert!((evidence_pair_prob_asymptotic::<f64>(100, 10) - 0.01).abs() < 1e-15);
        assert!((mean_evidence_mu::<f64>(100, 10, ProbForm::Asymptotic) - 0.1).abs() < 1e-12);
        assert_eq!(mean_evidence_mu::<f64>(0, 10, ProbForm::Exact), 0.0);
    }

    #[test]
    fn p1_stable_for_large_vocab() {
        // naive evaluation loses everything at |X| = 10^4; to leading order
        // p1 = N(N-1)q^2
        let p = evidence_pair_prob_exact::<f64>(1000, 10_000);
        let approx = 1000.0 * 999.0 * 1e-24;
        assert!((p / approx - 1.0).abs() < 1e-6, "{p} vs {approx}");
        let p32 = evidence_pair_prob_exact::<f32>(100, 10);
        assert!((p32 as f64 - evidence_pair_prob_exact::<f64>(100, 10)).abs() < 1e-5);
    }

    #[test]
    fn edge_prob_and_exponent() {
        assert!((k_evidence_edge_prob(0.1f64, 2) - 0.005).abs() < 1e-15);
        assert_eq!(k_evidence_edge_prob(0.3f64, 1), 0.3);
        assert_eq!(theoretical_exponent::<f64>(1), 2.0);
        assert_eq!(theoretical_exponent::<f64>(2), 2.25);
        assert!((theoretical_exponent::<f64>(1_000_000) - 2.5).abs() < 1e-6);
        assert!((poisson_tail(0.05f64, 1) - (1.0 - (-0.05f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn fit_exact_power_law() {
        let fit = fit_power_law(&[(10.0, 100.0), (100.0, 10_000.0), (10f64.sqrt() * 10.0, 1000.0)]).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.predict(1000.0) - 1e6).abs() < 1e-3);
        assert_eq!(fit_power_law(&[(1.0, 1.0), (2.0, 4.0)]), Err(ScalingError::TooFewPoints(2)));
        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(ScalingError::NonPositive(..))));
    }

    #[test]
    fn connectivity_extremes() {
        assert_eq!(simulate_class_connectivity(4, 0, 1, 20, 1).unwrap().p, 0.0);
        assert_eq!(simulate_class_connectivity(4, 20 * 64, 1, 50, 1).unwrap().p, 1.0);
        assert_eq!(er_connectivity_baseline(10, 1.0, 20, 3).p, 1.0);
        assert_eq!(er_connectivity_baseline(10, 0.0, 20, 3).p, 0.0);
    }

    #[test]
    fn connection_times_are_monotone_in_k() {
        let k1 = ConnectionTimes::simulate(8, 1, 64, 50_000, 7).unwrap();
        let k2 = ConnectionTimes::simulate(8, 2, 64, 50_000, 7).unwrap();
        for n in [100, 200, 400, 800, 1600] {
            assert!(k1.successes_at(n) >= k2.successes_at(n));
        }
    }

    #[test]
    fn n_req_ceiling() {
        let err = estimate_n_req_with(6, 3, 0.5, 10, 1, SearchOptions { ceiling: Some(20), ..Default::default() });
        assert!(matches!(err, Err(ScalingError::Ceiling { .. })));
        let ok = estimate_n_req(6, 1, 0.5, 40, 1).unwrap();
        assert!(ok.ci_low <= ok.n_req && ok.n_req <= ok.ci_high);
        assert!((ok.bracket.1 - ok.bracket.0) as f64 <= 0.05 * ok.n_req + 1.0);
    }

    #[test]
    fn config_validation() {
        let mut c = ScalingConfig {
            vocab_sizes: vec![8, 16],
            k: 1,
            trials: 10,
            success_prob: 0.5,
            seed: 0,
            search: SearchOptions::default(),
        };
        assert!(c.validate().is_ok());
        c.vocab_sizes = vec![16, 8];
        assert_eq!(c.validate(), Err(ScalingError::UnsortedVocab));
    }
}
