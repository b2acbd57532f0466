//! Closed-form analysis: error-bound recursions, repetition sizing, spacing
//! and velocity bounds, delay budgets, and the converse dynamic program with
//! its exponential envelope.
//!
//! Everything here is pure numerics — no simulation. The routines are
//! generic over [`Real`], so they can be evaluated in `f32` or `f64` (the
//! crate-root aliases fix `f64`). Quantities that are inherently integers
//! (repetition counts, spacings, budgets) are returned as integers.

use crate::hamming::redundancy_count;
use crate::multibit::MultiBitParams;
use crate::onebit::{decoder_level, OneBitParams};
use crate::scalar::Real;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Binomial helpers
// ---------------------------------------------------------------------------

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact binomial coefficient; `None` when the value exceeds `u128`.
/// Intermediates are gcd-reduced, so any coefficient that fits (all of
/// `n <= 128`, for instance) is computed exactly.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 1..=u128::from(k) {
        // acc = C(n-k+j-1, j-1); multiply into C(n-k+j, j) = acc·mul/j.
        let (mut mul, mut div) = (u128::from(n - k) + j, j);
        let g = gcd_u128(mul, div);
        mul /= g;
        div /= g;
        let g = gcd_u128(acc, div);
        acc /= g;
        div /= g;
        debug_assert_eq!(div, 1, "binomial step must divide exactly");
        acc = acc.checked_mul(mul)?;
    }
    Some(acc)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0; n + 1];
    for i in 1..=n {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    lf
}

/// Upper tail of a binomial: `P[Bin(n, p) >= k]`, evaluated by log-space
/// summation (log-sum-exp), so it neither overflows nor underflows for `n`
/// up to at least `10^4`.
pub fn binomial_tail_at_least(n: u64, k: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let n_us = n as usize;
    let lf = ln_factorials(n_us);
    let lp = p.ln();
    let lq = (-p).ln_1p(); // ln(1 - p), stable for small p
    let mut terms = Vec::with_capacity(n_us - k as usize + 1);
    let mut max_term = f64::NEG_INFINITY;
    for j in k..=n {
        let lt = lf[n_us] - lf[j as usize] - lf[(n - j) as usize]
            + j as f64 * lp
            + (n - j) as f64 * lq;
        max_term = max_term.max(lt);
        terms.push(lt);
    }
    if max_term == f64::NEG_INFINITY {
        return 0.0;
    }
    let sum: f64 = terms.iter().map(|&lt| (lt - max_term).exp()).sum();
    (max_term + sum.ln()).exp().min(1.0)
}

// ---------------------------------------------------------------------------
// Integer rounding with representation-error guards
// ---------------------------------------------------------------------------

/// Ceiling with a snap: values within `1e-9` (relative) of an integer are
/// treated as that integer, so `⌈x⌉` of an exact quantity cannot be bumped
/// up by floating-point representation error.
fn ceil_snapped<R: Real>(x: R) -> u64 {
    let r = x.round();
    let tol = R::of(1e-9) * R::one().max(x.abs());
    let v = if (x - r).abs() < tol { r } else { x.ceil() };
    v.to_u64().unwrap_or(0)
}

/// Floor with the same snap as [`ceil_snapped`].
fn floor_snapped<R: Real>(x: R) -> u64 {
    let r = x.round();
    let tol = R::of(1e-9) * R::one().max(x.abs());
    let v = if (x - r).abs() < tol { r } else { x.floor() };
    v.to_u64().unwrap_or(0)
}

fn validate_p<R: Real>(p: R) -> Result<()> {
    if p > R::zero() && p < R::of(0.5) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p.to_f64().unwrap_or(f64::NAN)))
    }
}

// ---------------------------------------------------------------------------
// Error-bound recursions
// ---------------------------------------------------------------------------

/// Per-level upper bounds on block failure probability.
///
/// `eps[0]` is the effective crossover probability of a single (possibly
/// repetition-coded) link; `eps[l]` bounds the probability that a level-`l`
/// block fails. For the multi-bit recursion, `simplified` additionally
/// carries the coarser `2(b_l t_l ε)²` form for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTable<R: Real> {
    eps: Vec<R>,
    simplified: Option<Vec<R>>,
}

impl<R: Real> BoundTable<R> {
    /// Highest level in the table.
    pub fn top_level(&self) -> u32 {
        (self.eps.len() - 1) as u32
    }

    /// Bound at level `l`.
    pub fn eps_at(&self, l: u32) -> R {
        self.eps[l as usize]
    }

    /// All bounds, index = level.
    pub fn eps(&self) -> &[R] {
        &self.eps
    }

    /// The coarser comparison bound at level `l`; equals [`Self::eps_at`]
    /// when the recursion has no separate simplified form.
    pub fn simplified_at(&self, l: u32) -> R {
        match &self.simplified {
            Some(s) => s[l as usize],
            None => self.eps[l as usize],
        }
    }

    /// Whether a separate simplified sequence is present.
    pub fn has_simplified(&self) -> bool {
        self.simplified.is_some()
    }
}

fn validate_eps0<R: Real>(eps0: R) -> Result<()> {
    if eps0 >= R::zero() && eps0 <= R::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eps0 must lie in [0, 1], got {eps0}"
        )))
    }
}

/// Single-bit error recursion: `ε̄_{l+1} = min(1, C(b,(b+1)/2)·(t·ε̄_l)^((b+1)/2))`
/// for `levels` steps. At `b = 3, t = 4` this is `ε̄_{l+1} = 48·ε̄_l²`, whose
/// fixed point is `1/48`.
pub fn onebit_error_recursion<R: Real>(
    eps0: R,
    b: u32,
    t: u32,
    levels: u32,
) -> Result<BoundTable<R>> {
    validate_eps0(eps0)?;
    if b < 3 || b.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "majority arity b must be odd and >= 3, got {b}"
        )));
    }
    if t <= b {
        return Err(Error::InvalidParameter(format!(
            "spacing base t must exceed b, got t = {t}, b = {b}"
        )));
    }
    let half = b.div_ceil(2);
    let coef = R::of(binomial_exact(u64::from(b), u64::from(half))
        .expect("small binomial fits u128") as f64);
    let t_r = R::of_u64(u64::from(t));
    let mut eps = Vec::with_capacity(levels as usize + 1);
    eps.push(eps0);
    for _ in 0..levels {
        let prev = *eps.last().expect("non-empty");
        let next = coef * (t_r * prev).powi(half as i32);
        eps.push(next.min(R::one()));
    }
    Ok(BoundTable {
        eps,
        simplified: None,
    })
}

/// Multi-bit error recursion with the actual block counts
/// `B_l = b_l + red(b_l)`:
///
/// ```text
/// ε̄_l = min(1, C(B_l, 2)·(t_l·ε̄_{l-1})²)
/// ```
///
/// The table also carries the coarser `ε̄_l = min(1, 2·(b_l·t_l·ε̄_{l-1})²)`
/// comparison sequence (which assumes `B_l <= 2·b_l`; that fails at
/// `b_1 = 2` where `red = 3`, which is why the exact form is primary).
pub fn multibit_error_recursion<R: Real>(
    eps0: R,
    params: &MultiBitParams,
    levels: u32,
) -> Result<BoundTable<R>> {
    validate_eps0(eps0)?;
    let mut eps = vec![eps0];
    let mut simplified = vec![eps0];
    for l in 1..=levels {
        let b = params.b_of(l);
        let t = R::of_u64(params.t_of(l));
        let big_b = (b + redundancy_count(b)?) as u64;
        let coef = R::of_u64(big_b * (big_b - 1) / 2);
        let prev = *eps.last().expect("non-empty");
        eps.push((coef * (t * prev).powi(2)).min(R::one()));
        let prev_s = *simplified.last().expect("non-empty");
        let b_r = R::of_u64(b as u64);
        simplified.push((R::of(2.0) * (b_r * t * prev_s).powi(2)).min(R::one()));
    }
    Ok(BoundTable {
        eps,
        simplified: Some(simplified),
    })
}

// ---------------------------------------------------------------------------
// Sufficient-condition diagnostics
// ---------------------------------------------------------------------------

/// Finite-horizon diagnostics for the three sufficient conditions on the
/// level sequences. Only the ratio condition (ii) is an exact statement; the
/// other two are asymptotic, so this reports their finite-horizon proxies
/// and never claims a proof.
#[derive(Debug, Clone)]
pub struct ConditionsReport<R: Real> {
    /// Levels evaluated: `1..=horizon`.
    pub horizon: u32,
    /// Condition (ii): `b_l / t_l <= 1/2` for every evaluated level.
    pub ratio_ok: bool,
    /// Levels violating the ratio condition.
    pub ratio_violations: Vec<u32>,
    /// Condition (i) proxy: entry `l` is `t_{l+1}·b_{l+1}·ε̄_l`, for
    /// `l = 0..horizon-1`; the asymptotic condition needs this to tend to 0.
    pub shrink_factors: Vec<R>,
    /// Whether the shrink factors are strictly decreasing from `l = 1` on.
    pub shrink_strictly_decreasing: bool,
    /// Condition (iii) proxy: entry `l-1` is `Σ_{i=1..l} ln(b_i)/b_i`.
    pub logb_partial_sums: Vec<R>,
    /// Whether the summand `ln(b_l)/b_l` is non-increasing over the horizon
    /// (a convergence diagnostic for the series).
    pub logb_increments_nonincreasing: bool,
}

/// Evaluates the sufficient-condition diagnostics on raw level sequences
/// (`b_seq[l-1]`, `t_seq[l-1]` are the level-`l` values). Unlike
/// [`MultiBitParams`], this accepts ratio-violating sequences — reporting
/// the violation is the point.
pub fn check_sufficient_conditions<R: Real>(
    b_seq: &[usize],
    t_seq: &[u64],
    eps0: R,
    horizon: u32,
) -> Result<ConditionsReport<R>> {
    validate_eps0(eps0)?;
    if horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let h = horizon as usize;
    if b_seq.len() < h || t_seq.len() < h {
        return Err(Error::LengthMismatch {
            expected: h,
            got: b_seq.len().min(t_seq.len()),
        });
    }

    let mut ratio_violations = Vec::new();
    for l in 1..=horizon {
        let (b, t) = (b_seq[l as usize - 1], t_seq[l as usize - 1]);
        if (2 * b) as u64 > t {
            ratio_violations.push(l);
        }
    }

    // Error recursion over the raw sequences (exact B_l form).
    let mut eps = vec![eps0];
    for l in 1..=h {
        let b = b_seq[l - 1];
        let big_b = (b + redundancy_count(b)?) as u64;
        let coef = R::of_u64(big_b * (big_b - 1) / 2);
        let t = R::of_u64(t_seq[l - 1]);
        let prev = *eps.last().expect("non-empty");
        eps.push((coef * (t * prev).powi(2)).min(R::one()));
    }

    // Entry l = t_{l+1}·b_{l+1}·ε̄_l (seq index l holds the level-(l+1) value).
    let shrink_factors: Vec<R> = (0..h)
        .map(|l| R::of_u64(t_seq[l]) * R::of_u64(b_seq[l] as u64) * eps[l])
        .collect();
    let shrink_strictly_decreasing = shrink_factors.windows(2).skip(1).all(|w| w[1] < w[0]);

    let mut logb_partial_sums = Vec::with_capacity(h);
    let mut acc = R::zero();
    let mut increments = Vec::with_capacity(h);
    for &b in b_seq.iter().take(h) {
        let inc = R::of_u64(b as u64).ln() / R::of_u64(b as u64);
        increments.push(inc);
        acc = acc + inc;
        logb_partial_sums.push(acc);
    }
    let logb_increments_nonincreasing =
        increments.windows(2).all(|w| w[1] <= w[0] + R::of(1e-12));

    Ok(ConditionsReport {
        horizon,
        ratio_ok: ratio_violations.is_empty(),
        ratio_violations,
        shrink_factors,
        shrink_strictly_decreasing,
        logb_partial_sums,
        logb_increments_nonincreasing,
    })
}

/// [`check_sufficient_conditions`] with the sequences taken from `params`.
pub fn conditions_from_params<R: Real>(
    params: &MultiBitParams,
    eps0: R,
    horizon: u32,
) -> Result<ConditionsReport<R>> {
    let b_seq: Vec<usize> = (1..=horizon).map(|l| params.b_of(l)).collect();
    let t_seq: Vec<u64> = (1..=horizon).map(|l| params.t_of(l)).collect();
    check_sufficient_conditions(&b_seq, &t_seq, eps0, horizon)
}

// ---------------------------------------------------------------------------
// Repetition sizing
// ---------------------------------------------------------------------------

/// Hoeffding-based repetition count: the smallest odd
/// `N >= ⌈ln(1/target) / (2·(1/2 - p)²)⌉` ("log" is the natural log, forced
/// by the `e^{-2Nϵ²}` form of the bound). Guarantees a majority-vote error
/// at most `target`, usually with slack — see [`exact_repetition_count`].
pub fn repetition_count<R: Real>(p: R, target: R) -> Result<u64> {
    validate_p(p)?;
    if !(target > R::zero() && target < R::one()) {
        return Err(Error::InvalidParameter(format!(
            "target must lie in (0, 1), got {target}"
        )));
    }
    let gap = R::of(0.5) - p;
    let raw = target.recip().ln() / (R::of(2.0) * gap * gap);
    let n = ceil_snapped(raw).max(1);
    Ok(if n.is_multiple_of(2) { n + 1 } else { n })
}

/// Minimal odd `N` whose *exact* majority-error `P[Bin(N, p) >= (N+1)/2]` is
/// at most `target`. Always `<=` the Hoeffding count (the bound is an upper
/// bound on the exact tail); found by binary search over odd `N`, which is
/// valid because the majority error is decreasing in `N`.
pub fn exact_repetition_count(p: f64, target: f64) -> Result<u64> {
    let cap = repetition_count(p, target)?;
    let err_at = |n: u64| binomial_tail_at_least(n, n.div_ceil(2), p);
    if err_at(1) <= target {
        return Ok(1);
    }
    // Invariant: err_at(2*lo+1) > target, err_at(2*hi+1) <= target.
    let (mut lo, mut hi) = (0u64, cap / 2);
    if err_at(2 * hi + 1) > target {
        // Defensive: only reachable through rounding at the very boundary.
        return Ok(cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if err_at(2 * mid + 1) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(2 * hi + 1)
}

// ---------------------------------------------------------------------------
// Spacing and velocity bounds
// ---------------------------------------------------------------------------

/// Level-0 spacing for low noise: `c = max(1, ⌊1/(48p)⌋)` when
/// `p <= 1/48`, else 1. Spacing the whole schedule by `c` keeps the level-1
/// input error at `3·(4pc)² <= 1/48`, restoring the fixed-point regime.
pub fn low_noise_spacing<R: Real>(p: R) -> Result<u64> {
    validate_p(p)?;
    if p > R::of(1.0 / 48.0) {
        return Ok(1);
    }
    let c = floor_snapped((R::of(48.0) * p).recip()).max(1);
    // Derivation check: 3·(4pc)² <= 1/48 must hold (allow a hair of float
    // slack; ~1e-9 relative from the snapped floor).
    let lhs = R::of(3.0) * (R::of(4.0) * p * R::of_u64(c)).powi(2);
    if lhs > R::of(1.0 / 48.0) * R::of(1.0 + 1e-6) {
        return Err(Error::Internal(format!(
            "spacing c = {c} violates 3(4pc)^2 <= 1/48 at p = {p}"
        )));
    }
    Ok(c)
}

/// Achievable and converse bounds on information velocity at crossover `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityBounds<R: Real> {
    /// Achievability: `1/4` for `p <= 1/48`, else
    /// `1 / (4·⌈2 ln 48 / (1-2p)²⌉)` via repetition down to the fixed point.
    pub lower: R,
    /// Converse: `(1-2p)²`.
    pub upper: R,
    /// The ceiling-free comparison form `(1-2p)²/31`, valid when the ceiling
    /// equals its argument; reported as an annotation only.
    pub repetition_form: R,
}

/// Computes [`VelocityBounds`] at crossover probability `p`.
pub fn velocity_bounds<R: Real>(p: R) -> Result<VelocityBounds<R>> {
    validate_p(p)?;
    let delta = R::one() - R::of(2.0) * p;
    let upper = delta * delta;
    let lower = if p <= R::of(1.0 / 48.0) {
        R::of(0.25)
    } else {
        let reps = ceil_snapped(R::of(2.0) * R::of(48.0).ln() / (delta * delta)).max(1);
        (R::of(4.0) * R::of_u64(reps)).recip()
    };
    let bounds = VelocityBounds {
        lower,
        upper,
        repetition_form: upper / R::of(31.0),
    };
    if bounds.lower > bounds.upper {
        return Err(Error::Internal(format!(
            "velocity lower bound {} exceeds upper bound {}",
            bounds.lower, bounds.upper
        )));
    }
    Ok(bounds)
}

// ---------------------------------------------------------------------------
// Delay budgets
// ---------------------------------------------------------------------------

/// Upper bounds on the delay components of one protocol execution, in raw
/// channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayBudget {
    /// Unit store-and-forward lag: `r·(m-1)` (every relay waits for at least
    /// one logical bit).
    pub store_forward: u64,
    /// Extra waiting injected by nonzero-level relays,
    /// `r·Σ_{l>=1} ⌊(m-1)/(c·t^l)⌋·b^l` (single-bit) or
    /// `r·Σ_{l>=1} ⌊(m-1)/(t_1⋯t_l)⌋·n_l` (multi-bit). Counts every relay
    /// once per level at or below its own, so it dominates the true lag.
    pub relay_extra: u64,
    /// `store_forward + relay_extra`: an upper bound on the measured
    /// propagation delay.
    pub propagation_bound: u64,
    /// Exact transmission length of the encoder's stream.
    pub transmission_bits: u64,
}

/// Delay budget for the single-bit protocol.
pub fn delay_budget_onebit(m: usize, params: &OneBitParams) -> Result<DelayBudget> {
    if m < 1 {
        return Err(Error::InvalidParameter("hop count m must be >= 1".into()));
    }
    let relays = (m - 1) as u64;
    let mut relay_extra = 0u64;
    let (t, b) = (u64::from(params.t()), u64::from(params.b()));
    let mut spacing = params.c();
    let mut b_pow = 1u64;
    loop {
        spacing = match spacing.checked_mul(t) {
            Some(s) if s <= relays => s,
            _ => break,
        };
        b_pow *= b;
        relay_extra += (relays / spacing) * b_pow;
    }
    let r = u64::from(params.r());
    let store_forward = r * relays;
    relay_extra *= r;
    let top = decoder_level(m, params);
    Ok(DelayBudget {
        store_forward,
        relay_extra,
        propagation_bound: store_forward + relay_extra,
        transmission_bits: r * b.pow(top),
    })
}

/// Delay budget for the multi-bit protocol carrying a `k`-bit message.
pub fn delay_budget_multibit(m: usize, k: usize, params: &MultiBitParams) -> Result<DelayBudget> {
    if m < 1 {
        return Err(Error::InvalidParameter("hop count m must be >= 1".into()));
    }
    let relays = (m - 1) as u64;
    // Max relay level: largest l with t_1⋯t_l <= m-1.
    let mut l_prime = 0u32;
    let mut prod = 1u64;
    loop {
        match prod.checked_mul(params.t_of(l_prime + 1)) {
            Some(p) if p <= relays => {
                prod = p;
                l_prime += 1;
            }
            _ => break,
        }
    }
    let (plan, dims) = crate::multibit::encode_plan(k, l_prime, params)?;
    let mut relay_extra = 0u64;
    let mut prod = 1u64;
    for l in 1..=l_prime {
        prod *= params.t_of(l);
        relay_extra += (relays / prod) * dims.n_of(l) as u64;
    }
    let r = u64::from(params.r());
    let store_forward = r * relays;
    relay_extra *= r;
    Ok(DelayBudget {
        store_forward,
        relay_extra,
        propagation_bound: store_forward + relay_extra,
        transmission_bits: r * (plan.blocks * dims.n_of(plan.level)) as u64,
    })
}

// ---------------------------------------------------------------------------
// Converse dynamic program and envelope
// ---------------------------------------------------------------------------

/// Parameters of the converse envelope `F(i,j) <= e^{c(γi - j)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverseParams<R: Real> {
    delta: R,
    gamma: R,
    c_exp: R,
    v0: R,
}

impl<R: Real> ConverseParams<R> {
    /// Validates `0 < δ < 1`, `δ² < γ < v0 <= 1`, `c > 0`, and the envelope
    /// inequality `e^{cγ} >= 1 + δ²(e^c - 1)`.
    pub fn new(delta: R, gamma: R, c_exp: R, v0: R) -> Result<Self> {
        if !(delta > R::zero() && delta < R::one()) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        let d2 = delta * delta;
        if gamma.is_nan() || gamma <= d2 {
            return Err(Error::InvalidParameter(format!(
                "gamma = {gamma} must exceed delta^2 = {d2}"
            )));
        }
        if !(v0 > gamma && v0 <= R::one()) {
            return Err(Error::InvalidParameter(format!(
                "probe velocity v0 = {v0} must lie in (gamma, 1]"
            )));
        }
        if c_exp.is_nan() || c_exp <= R::zero() {
            return Err(Error::InvalidParameter(format!(
                "envelope exponent c must be positive, got {c_exp}"
            )));
        }
        if ln_envelope_ratio(c_exp, gamma) < d2.ln() - R::of(1e-12) {
            return Err(Error::InvalidParameter(format!(
                "c = {c_exp} violates e^(c gamma) >= 1 + delta^2 (e^c - 1)"
            )));
        }
        Ok(ConverseParams {
            delta,
            gamma,
            c_exp,
            v0,
        })
    }

    /// Builds params by solving for the largest feasible envelope exponent
    /// via [`find_envelope_c`].
    pub fn derive(delta: R, gamma: R, v0: R) -> Result<Self> {
        let c_exp = find_envelope_c(gamma, delta)?;
        Self::new(delta, gamma, c_exp, v0)
    }

    /// `δ = 1 - 2p`.
    pub fn delta(&self) -> R {
        self.delta
    }

    /// Envelope rate `γ`.
    pub fn gamma(&self) -> R {
        self.gamma
    }

    /// Envelope exponent `c`.
    pub fn c_exp(&self) -> R {
        self.c_exp
    }

    /// Probe velocity `v0`.
    pub fn v0(&self) -> R {
        self.v0
    }
}

/// The DP surface `F(i, j)`: an upper bound on how much information about Θ
/// node `j` can have after `i` time steps, normalized to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ConverseTable<R: Real> {
    delta: R,
    i_max: usize,
    j_max: usize,
    /// Row-major `(i_max+1) × (j_max+1)`.
    f: Vec<R>,
}

/// Fills the converse DP `F(i,j) = (1-δ²)·F(i-1,j) + δ²·F(i-1,j-1)` with
/// boundary `F(i,0) = 1`, `F(0,j) = 0` for `j >= 1`.
pub fn converse_table<R: Real>(delta: R, i_max: usize, j_max: usize) -> Result<ConverseTable<R>> {
    if !(delta > R::zero() && delta < R::one()) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if j_max < 1 {
        return Err(Error::InvalidParameter("j_max must be >= 1".into()));
    }
    let cols = j_max + 1;
    let d2 = delta * delta;
    let keep = R::one() - d2;
    let mut f = vec![R::zero(); (i_max + 1) * cols];
    f[0] = R::one();
    for i in 1..=i_max {
        f[i * cols] = R::one();
        for j in 1..=j_max {
            let up = f[(i - 1) * cols + j];
            let diag = f[(i - 1) * cols + j - 1];
            f[i * cols + j] = keep * up + d2 * diag;
        }
    }
    Ok(ConverseTable {
        delta,
        i_max,
        j_max,
        f,
    })
}

impl<R: Real> ConverseTable<R> {
    /// `F(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> R {
        debug_assert!(i <= self.i_max && j <= self.j_max);
        self.f[i * (self.j_max + 1) + j]
    }

    /// Largest time index.
    pub fn i_max(&self) -> usize {
        self.i_max
    }

    /// Largest node index.
    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// The `δ` the table was built with.
    pub fn delta(&self) -> R {
        self.delta
    }
}

/// `ln[(e^{cγ} - 1)/(e^c - 1)]`, evaluated without overflow for any `c > 0`:
/// the envelope inequality `e^{cγ} >= 1 + δ²(e^c - 1)` is equivalent to this
/// being at least `ln δ²`.
fn ln_envelope_ratio<R: Real>(c: R, gamma: R) -> R {
    let a = c * gamma;
    // ln(e^x - 1) = x + ln(1 - e^{-x}).
    let ln_em1 = |x: R| x + (-(-x).exp()).ln_1p();
    ln_em1(a) - ln_em1(c)
}

/// Finds the largest `c > 0` satisfying the envelope requirement
/// `(e^{cγ} - 1)/(e^c - 1) >= δ²` (which always exists for `γ > δ²`, since
/// the ratio tends to `γ` as `c → 0` and decreases to 0).
///
/// Bracket expansion doubles `c` from 1 until the requirement fails (capped
/// where the ratio is provably below any representable `δ²`), then bisects
/// to a width of `1e-12` relative, returning the feasible (lower) side.
pub fn find_envelope_c<R: Real>(gamma: R, delta: R) -> Result<R> {
    if !(delta > R::zero() && delta < R::one()) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let d2 = delta * delta;
    if !(gamma > d2 && gamma < R::one()) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must lie in (delta^2, 1) = ({d2}, 1)"
        )));
    }
    let ln_d2 = d2.ln();
    let feasible = |c: R| ln_envelope_ratio(c, gamma) >= ln_d2;

    // Beyond this cap the ratio is below δ² by a wide margin:
    // ln ratio <= -c(1-γ) + ln 2 for c >= 1.
    let cap = (ln_d2.abs() + R::of(4.0)) / (R::one() - gamma);
    let mut lo = R::of(1e-8).min(cap * R::of(0.5));
    if !feasible(lo) {
        // Only possible through float rounding at γ extremely close to δ².
        return Ok(lo);
    }
    let mut hi = lo;
    while feasible(hi) && hi < cap {
        lo = hi;
        hi = (hi * R::of(2.0)).min(cap);
        if hi == lo {
            break;
        }
    }
    if feasible(hi) {
        return Ok(hi);
    }
    let tol = R::of(1e-12);
    while (hi - lo) > tol * R::one().max(lo) {
        let mid = lo + (hi - lo) * R::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Outcome of checking a [`ConverseTable`] against its envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport<R: Real> {
    /// `F(i,j) <= e^{c(γi - j)}` held for every entry (within `1e-12`).
    pub envelope_holds: bool,
    /// Largest observed `F(i,j) - e^{c(γi - j)}` (negative when the envelope
    /// has slack everywhere).
    pub max_excess: R,
    /// `F(i_max, ⌊v0·i_max⌋)` — the decay probe along the `v0` ray.
    pub decay_value: R,
    /// Whether the decay probe fell below the supplied threshold.
    pub decay_ok: bool,
}

/// Verifies `F(i,j) <= e^{c_exp·(γ·i - j)}` over the whole table and probes
/// the decay of `F(i, ⌊v0·i⌋)` at `i = i_max` against `decay_threshold`.
pub fn verify_envelope<R: Real>(
    table: &ConverseTable<R>,
    params: &ConverseParams<R>,
    decay_threshold: R,
) -> EnvelopeReport<R> {
    let tol = R::of(1e-12);
    let mut max_excess = R::neg_infinity();
    let mut holds = true;
    for i in 0..=table.i_max() {
        for j in 0..=table.j_max() {
            let expo = params.c_exp() * (params.gamma() * R::of_u64(i as u64) - R::of_u64(j as u64));
            // For expo >= 0 the bound is >= 1 >= F: trivially satisfied, and
            // skipping it avoids overflowing exp for large i.
            if expo < R::zero() {
                let excess = table.get(i, j) - expo.exp();
                max_excess = max_excess.max(excess);
                if excess > tol {
                    holds = false;
                }
            } else {
                max_excess = max_excess.max(table.get(i, j) - R::one());
            }
        }
    }
    let decay_value = decay_probe(table, params.v0());
    EnvelopeReport {
        envelope_holds: holds,
        max_excess,
        decay_value,
        decay_ok: decay_value < decay_threshold,
    }
}

/// `F(i_max, ⌊v0·i_max⌋)` (clamped to the table), for probing decay along an
/// arbitrary velocity ray — including rays at or below `δ²`, where no decay
/// is expected.
pub fn decay_probe<R: Real>(table: &ConverseTable<R>, v0: R) -> R {
    let j = (v0 * R::of_u64(table.i_max() as u64))
        .floor()
        .to_u64()
        .map_or(table.j_max(), |j| (j as usize).min(table.j_max()));
    table.get(table.i_max(), j)
}

// ---------------------------------------------------------------------------
// Low-noise level-1 spacing for the multi-bit protocol
// ---------------------------------------------------------------------------

/// Result of the low-noise `t_1` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowNoiseT1 {
    /// Chosen level-1 spacing.
    pub t1: u64,
    /// Level-1 error bound at this spacing.
    pub eps1: f64,
    /// `1/(t1·p)`: the constant `K` such that the fraction of nonzero-level
    /// relays (`~1/t1`) is `K·p`.
    pub node_fraction_constant: f64,
}

/// Picks the level-1 spacing for low noise: the **largest** `t_1 >= 9` with
/// `ε̄_1 = C(B_1,2)·(t_1·p)² <= 3^{-8}/4`, keeping `b_1` (and all higher
/// levels) from `base`. Growing `t_1` to the Θ(1/p) limit thins the relay
/// schedule — the fraction of nonzero-level nodes becomes O(p) — while the
/// level-1 error stays inside the recursion's working region.
pub fn low_noise_t1(p: f64, base: &MultiBitParams) -> Result<LowNoiseT1> {
    let target = 3f64.powi(-8) / 4.0;
    if !(p > 0.0 && p < target) {
        return Err(Error::Infeasible(format!(
            "low-noise tuning requires 0 < p < 3^-8/4, got {p}"
        )));
    }
    let b1 = base.b_of(1);
    let eps1_of = |t1: u64| -> Result<f64> {
        let params = MultiBitParams::new(vec![b1], vec![t1], base.r())?;
        Ok(multibit_error_recursion(p, &params, 1)?.eps_at(1))
    };
    let floor_t1 = 9u64.max(2 * b1 as u64);
    if eps1_of(floor_t1)? > target {
        return Err(Error::Infeasible(format!(
            "no t1 >= {floor_t1} keeps eps1 <= 3^-8/4 at p = {p}"
        )));
    }
    // Closed-form guess, then nudge to the exact integer boundary.
    let big_b = (b1 + redundancy_count(b1)?) as f64;
    let coef = big_b * (big_b - 1.0) / 2.0;
    let mut t1 = (((target / coef).sqrt() / p).floor() as u64).max(floor_t1);
    while eps1_of(t1 + 1)? <= target {
        t1 += 1;
    }
    while t1 > floor_t1 && eps1_of(t1)? > target {
        t1 -= 1;
    }
    Ok(LowNoiseT1 {
        t1,
        eps1: eps1_of(t1)?,
        node_fraction_constant: 1.0 / (t1 as f64 * p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS48: f64 = 1.0 / 48.0;

    #[test]
    fn binomial_exact_small_values() {
        assert_eq!(binomial_exact(3, 2), Some(3));
        assert_eq!(binomial_exact(5, 3), Some(10));
        assert_eq!(binomial_exact(31, 16), Some(300_540_195));
        assert_eq!(binomial_exact(4, 7), Some(0));
        assert_eq!(
            binomial_exact(128, 64),
            Some(23951146041928082866135587776380551750)
        );
    }

    #[test]
    fn binomial_tail_matches_exact_rational_sums() {
        // P[Bin(3, 1/2) >= 2] = 4/8.
        assert!((binomial_tail_at_least(3, 2, 0.5) - 0.5).abs() < 1e-14);
        // P[Bin(31, 1/4) >= 16] via exact integers.
        let mut num: u128 = 0;
        for k in 16..=31u64 {
            num += binomial_exact(31, k).unwrap() * 3u128.pow(31 - k as u32);
        }
        let oracle = num as f64 / 4f64.powi(31);
        let got = binomial_tail_at_least(31, 16, 0.25);
        assert!((got - oracle).abs() < 1e-12 * oracle);
        // Degenerate edges.
        assert_eq!(binomial_tail_at_least(10, 0, 0.3), 1.0);
        assert_eq!(binomial_tail_at_least(10, 11, 0.3), 0.0);
        assert_eq!(binomial_tail_at_least(10, 3, 0.0), 0.0);
        // Huge n stays finite.
        let big = binomial_tail_at_least(10_000, 5_001, 0.49);
        assert!(big.is_finite() && (0.0..=1.0).contains(&big));
    }

    #[test]
    fn onebit_recursion_fixed_point_at_one_over_48() {
        let table = onebit_error_recursion(EPS48, 3, 4, 10).unwrap();
        for l in 0..=10 {
            assert!(
                (table.eps_at(l) - EPS48).abs() < 1e-15,
                "level {l} drifted: {}",
                table.eps_at(l)
            );
        }
    }

    #[test]
    fn onebit_recursion_halves_at_one_over_96() {
        let table = onebit_error_recursion(1.0f64 / 96.0, 3, 4, 1).unwrap();
        assert!((table.eps_at(1) - 1.0 / 192.0).abs() < 1e-15);
    }

    #[test]
    fn onebit_recursion_zero_stays_zero() {
        let table = onebit_error_recursion(0.0, 3, 4, 6).unwrap();
        assert!(table.eps().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn onebit_recursion_closed_form_at_defaults() {
        // At b=3, t=4: eps_{l+1} = 48 eps_l^2, so 48 eps_l = (48 eps_0)^(2^l).
        let eps0 = 1.0f64 / 96.0;
        let table = onebit_error_recursion(eps0, 3, 4, 8).unwrap();
        for l in 0..=8u32 {
            let expected = (48.0 * eps0).powi(1 << l) / 48.0;
            let got = table.eps_at(l);
            assert!(
                (got - expected).abs() <= 1e-12 * expected,
                "level {l}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn onebit_recursion_saturates_at_one() {
        let table = onebit_error_recursion(0.9, 3, 4, 3).unwrap();
        assert_eq!(table.eps_at(1), 1.0);
        assert_eq!(table.eps_at(3), 1.0);
    }

    #[test]
    fn multibit_recursion_level1_example() {
        let eps0 = 3f64.powi(-8) / 8.0;
        let table = multibit_error_recursion(eps0, &MultiBitParams::default(), 3).unwrap();
        // B_1 = 2 + 3 = 5, so C(5,2) = 10 and eps_1 = 10 (9 eps0)^2.
        let expected = 10.0 * (9.0 * eps0).powi(2);
        assert!((table.eps_at(1) - expected).abs() < 1e-18);
        // Simplified comparison form: 2 (b t eps)^2 = 2 (18 eps0)^2.
        let simplified = 2.0 * (18.0 * eps0).powi(2);
        assert!((table.simplified_at(1) - simplified).abs() < 1e-18);
        assert!(table.has_simplified());
    }

    #[test]
    fn multibit_recursion_zero_stays_zero() {
        let table = multibit_error_recursion(0.0, &MultiBitParams::default(), 4).unwrap();
        assert!(table.eps().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn multibit_recursion_satisfies_the_induction_bound() {
        // With eps0 = 3^-8/(4c), the recursion must stay below
        // (c^{-2^l}/4)·(l+3)^{-8} for l <= 6.
        for c in [2.0f64, 4.0, 16.0] {
            let eps0 = 3f64.powi(-8) / (4.0 * c);
            let table = multibit_error_recursion(eps0, &MultiBitParams::default(), 6).unwrap();
            for l in 1..=6u32 {
                let bound = c.powf(-((1u64 << l) as f64)) / 4.0 * f64::from(l + 3).powi(-8);
                assert!(
                    table.eps_at(l) <= bound,
                    "c = {c}, level {l}: {} > {bound}",
                    table.eps_at(l)
                );
            }
        }
    }

    #[test]
    fn sufficient_conditions_on_defaults() {
        let eps0 = 3f64.powi(-8) / 8.0;
        let report =
            conditions_from_params(&MultiBitParams::default(), eps0, 8).unwrap();
        assert!(report.ratio_ok);
        assert!(report.ratio_violations.is_empty());
        // b_1/t_1 = 2/9 <= 1/2 — spot value.
        assert_eq!(MultiBitParams::default().b_of(1), 2);
        // Shrink factors strictly decreasing across 2 <= l <= 6.
        for l in 2..=6usize {
            assert!(
                report.shrink_factors[l] < report.shrink_factors[l - 1],
                "shrink factor did not fall at l = {l}"
            );
        }
        assert!(report.shrink_strictly_decreasing);
        assert!(report.logb_increments_nonincreasing);
        // Partial sums are increasing and finite.
        assert!(report
            .logb_partial_sums
            .windows(2)
            .all(|w| w[1] > w[0] && w[1].is_finite()));
    }

    #[test]
    fn sufficient_conditions_flag_ratio_violation() {
        let b = vec![9usize, 4];
        let t = vec![9u64, 16];
        let report = check_sufficient_conditions(&b, &t, 0.001, 2).unwrap();
        assert!(!report.ratio_ok);
        assert_eq!(report.ratio_violations, vec![1]);
    }

    #[test]
    fn repetition_counts_match_examples() {
        // 2 ln 48 / (1 - 2p)^2 at p = 1/4 is about 30.97 -> 31 (odd).
        assert_eq!(repetition_count(0.25f64, EPS48).unwrap(), 31);
        // Tiny requirement: one shot suffices.
        assert_eq!(repetition_count(0.01f64, 0.999).unwrap(), 1);
        // p -> 0 keeps the Hoeffding floor at ceil(2 ln 48) = 8 -> odd 9.
        assert_eq!(repetition_count(1e-9f64, EPS48).unwrap(), 9);
        // The exact search sees that a single transmission already meets the
        // target at p = 0.001.
        assert_eq!(exact_repetition_count(0.001, EPS48).unwrap(), 1);
        assert!(repetition_count(0.5f64, 0.1).is_err());
        assert!(repetition_count(0.25f64, 0.0).is_err());
    }

    #[test]
    fn exact_repetition_count_is_minimal_and_below_formula() {
        for &p in &[0.05f64, 0.1, 0.2, 0.25, 0.3, 0.4, 0.45] {
            for &target in &[0.1f64, EPS48, 1e-3, 1e-5] {
                let formula = repetition_count(p, target).unwrap();
                let exact = exact_repetition_count(p, target).unwrap();
                assert!(exact <= formula, "p={p}, target={target}");
                assert!(exact % 2 == 1);
                assert!(binomial_tail_at_least(exact, exact.div_ceil(2), p) <= target);
                if exact > 1 {
                    assert!(
                        binomial_tail_at_least(exact - 2, (exact - 2).div_ceil(2), p) > target,
                        "p={p}, target={target}: {exact} not minimal"
                    );
                }
            }
        }
    }

    #[test]
    fn hoeffding_dominates_the_exact_tail() {
        for &p in &[0.05f64, 0.2, 0.4] {
            for n in (1u64..=99).step_by(14) {
                let exact = binomial_tail_at_least(n, n.div_ceil(2), p);
                let eps = 0.5 - p;
                let hoeffding = (-2.0 * n as f64 * eps * eps).exp();
                assert!(exact <= hoeffding * (1.0 + 1e-12), "n={n}, p={p}");
            }
        }
    }

    #[test]
    fn low_noise_spacing_examples() {
        assert_eq!(low_noise_spacing(0.001f64).unwrap(), 20);
        assert_eq!(low_noise_spacing(EPS48).unwrap(), 1);
        assert_eq!(low_noise_spacing(1.0f64 / 96.0).unwrap(), 2);
        assert_eq!(low_noise_spacing(0.1f64).unwrap(), 1, "above 1/48");
        // Derivation inequality on a grid.
        for &p in &[1e-6f64, 1e-4, 1e-3, 0.01, 0.02, EPS48] {
            let c = low_noise_spacing(p).unwrap() as f64;
            assert!(3.0 * (4.0 * p * c).powi(2) <= EPS48 * (1.0 + 1e-6));
        }
        assert!(low_noise_spacing(0.0f64).is_err());
    }

    #[test]
    fn velocity_bounds_examples() {
        let at_quarter = velocity_bounds(0.25f64).unwrap();
        assert!((at_quarter.upper - 0.25).abs() < 1e-15);
        let at_48 = velocity_bounds(EPS48).unwrap();
        assert!((at_48.lower - 0.25).abs() < 1e-15);
        let tiny = velocity_bounds(1e-9f64).unwrap();
        assert!(tiny.upper > 0.999_999_9);
        // Above 1/48 the ceiling form applies: p = 0.1 -> 1/(4*ceil(12.098)).
        let at_tenth = velocity_bounds(0.1f64).unwrap();
        assert!((at_tenth.lower - 1.0 / 52.0).abs() < 1e-15);
        assert!(at_tenth.lower <= at_tenth.upper);
        assert!((at_tenth.repetition_form - 0.64 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn delay_budget_onebit_values() {
        let params = OneBitParams::default();
        let budget = delay_budget_onebit(256, &params).unwrap();
        // Relay extra: 63*3 + 15*9 + 3*27 = 405 over the unit lag of 255.
        assert_eq!(budget.store_forward, 255);
        assert_eq!(budget.relay_extra, 405);
        assert_eq!(budget.propagation_bound, 660);
        assert!(budget.propagation_bound <= 4 * 256);
        assert_eq!(budget.transmission_bits, 81);

        let trivial = delay_budget_onebit(1, &params).unwrap();
        assert_eq!(trivial.propagation_bound, 0);
        assert_eq!(trivial.transmission_bits, 1);
    }

    #[test]
    fn delay_budget_multibit_values() {
        let params = MultiBitParams::default();
        let budget = delay_budget_multibit(144, 8, &params).unwrap();
        // floor(143/9)*5 = 75; the level-2 product 144 exceeds 143.
        assert_eq!(budget.relay_extra, 75);
        assert_eq!(budget.store_forward, 143);
        assert_eq!(budget.propagation_bound, 218);
        // k = 8 encodes as one 35-bit level-2 codeword.
        assert_eq!(budget.transmission_bits, 35);

        let trivial = delay_budget_multibit(1, 4, &params).unwrap();
        assert_eq!(trivial.relay_extra, 0);
        assert_eq!(trivial.store_forward, 0);
    }

    #[test]
    fn converse_table_boundary_and_closed_form() {
        let delta = 0.5f64;
        let table = converse_table(delta, 100, 10).unwrap();
        assert_eq!(table.get(0, 0), 1.0);
        assert!((table.get(1, 1) - 0.25).abs() < 1e-15);
        for i in 0..=100 {
            assert_eq!(table.get(i, 0), 1.0);
        }
        for j in 1..=10 {
            assert_eq!(table.get(0, j), 0.0);
        }
        // F(i,1) = 1 - (1 - delta^2)^i.
        for i in 0..=100usize {
            let expected = 1.0 - 0.75f64.powi(i as i32);
            assert!((table.get(i, 1) - expected).abs() < 1e-12, "i = {i}");
        }
    }

    #[test]
    fn converse_table_monotonicity_and_range() {
        for &delta in &[0.1f64, 0.3, 0.5, 0.9] {
            let table = converse_table(delta, 60, 40).unwrap();
            for i in 0..=60 {
                for j in 0..=40 {
                    let v = table.get(i, j);
                    assert!((0.0..=1.0).contains(&v));
                    if i > 0 {
                        assert!(v >= table.get(i - 1, j) - 1e-15, "i-monotone at ({i},{j})");
                    }
                    if j > 0 {
                        assert!(v <= table.get(i, j - 1) + 1e-15, "j-antitone at ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn envelope_exponent_search() {
        // gamma = 0.3, delta = 0.5: the boundary sits between 0.4 and 0.6.
        let c = find_envelope_c(0.3f64, 0.5).unwrap();
        assert!(c > 0.1 && c < 1.0, "c = {c}");
        let g = |x: f64| (0.3 * x).exp_m1() / x.exp_m1();
        assert!(g(c) >= 0.25 * (1.0 - 1e-9), "returned side must be feasible");
        assert!(g(c + 1e-3) < 0.25, "not the largest feasible c");

        // gamma barely above delta^2: c collapses toward 0.
        let tiny = find_envelope_c(0.25f64 * 1.001, 0.5).unwrap();
        assert!(tiny < 0.1, "c = {tiny}");

        // gamma = 0.9, delta = 0.1: c = 1 must be feasible.
        let wide = find_envelope_c(0.9f64, 0.1).unwrap();
        assert!(wide >= 1.0);
        assert!(g_ratio(wide, 0.9) >= 0.01 * (1.0 - 1e-9));

        assert!(find_envelope_c(0.2f64, 0.5).is_err(), "gamma below delta^2");
    }

    fn g_ratio(c: f64, gamma: f64) -> f64 {
        (gamma * c).exp_m1() / c.exp_m1()
    }

    #[test]
    fn envelope_holds_and_probe_decays() {
        let params = ConverseParams::derive(0.5f64, 0.3, 0.35).unwrap();
        let table = converse_table(0.5f64, 500, 500).unwrap();
        let report = verify_envelope(&table, &params, 1e-6);
        assert!(report.envelope_holds, "max excess {}", report.max_excess);
        assert!(report.decay_ok, "F(500,175) = {}", report.decay_value);
        assert!(report.decay_value < 1e-6);

        // A probe at or below delta^2 = 0.25 must NOT decay.
        let stuck = decay_probe(&table, 0.2f64);
        assert!(stuck > 1e-6, "sub-critical ray unexpectedly decayed: {stuck}");
        let critical = decay_probe(&table, 0.25f64);
        assert!(critical > 1e-6);
    }

    #[test]
    fn envelope_soundness_across_a_grid() {
        for &delta in &[0.2f64, 0.5, 0.8] {
            let d2 = delta * delta;
            for &gamma_scale in &[1.05f64, 1.5, 2.5] {
                let gamma = (d2 * gamma_scale).min(0.97);
                if gamma <= d2 {
                    continue;
                }
                let v0 = (gamma + 0.02).min(1.0);
                let params = ConverseParams::derive(delta, gamma, v0).unwrap();
                let table = converse_table(delta, 120, 120).unwrap();
                let report = verify_envelope(&table, &params, 1.0);
                assert!(
                    report.envelope_holds,
                    "delta={delta}, gamma={gamma}: excess {}",
                    report.max_excess
                );
            }
        }
    }

    #[test]
    fn converse_params_validation() {
        assert!(ConverseParams::new(0.5f64, 0.3, 0.4, 0.35).is_ok());
        assert!(ConverseParams::new(0.5f64, 0.2, 0.4, 0.35).is_err(), "gamma <= d2");
        assert!(ConverseParams::new(0.5f64, 0.3, -1.0, 0.35).is_err(), "c <= 0");
        assert!(ConverseParams::new(0.5f64, 0.3, 0.4, 0.25).is_err(), "v0 <= gamma");
        // A c far beyond the feasible boundary violates the inequality.
        assert!(ConverseParams::new(0.5f64, 0.3, 50.0, 0.35).is_err());
    }

    #[test]
    fn low_noise_t1_search() {
        let base = MultiBitParams::default();
        // p = 3^-8/8: the largest feasible spacing is sqrt((3^-8/4)/10)/p.
        let p = 3f64.powi(-8) / 8.0;
        let result = low_noise_t1(p, &base).unwrap();
        assert!(result.t1 >= 9);
        assert!(result.eps1 <= 3f64.powi(-8) / 4.0);
        // One step further must break the budget.
        let over = MultiBitParams::new(vec![2], vec![result.t1 + 1], 1).unwrap();
        let eps_over = multibit_error_recursion(p, &over, 1).unwrap().eps_at(1);
        assert!(eps_over > 3f64.powi(-8) / 4.0, "t1 not maximal");

        // p = 1e-6: spacing reaches the Θ(1/p) regime; the relay fraction is
        // O(p) with the reported constant.
        let fine = low_noise_t1(1e-6, &base).unwrap();
        assert!(fine.t1 >= 1000);
        let fraction = 1.0 / fine.t1 as f64;
        assert!(fraction <= fine.node_fraction_constant * 1e-6 * (1.0 + 1e-9));

        assert!(low_noise_t1(3f64.powi(-8) / 4.0, &base).is_err());
        assert!(low_noise_t1(0.0, &base).is_err());
    }
}
