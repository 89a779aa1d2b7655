//! Nonstationary M_t/G/∞ analysis.
//!
//! With Poisson arrivals of rate `λ(t)` and i.i.d. stays `X`, the number of
//! sojourners present at time `t` (starting empty) is Poisson with mean
//! `v(t) = ∫₀ᵗ λ(τ) P(X > t − τ) dτ`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::phasefit::PhaseTypeDist;
use crate::quadrature::{adaptive_simpson, gauss_legendre};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// Gauss–Legendre nodes per arrival slot for time averages.
pub const NODES_PER_SLOT: usize = 16;

/// Piecewise-constant arrival rate over equal slots. `rates[k]` counts
/// arrivals per slot, so the per-minute rate in slot `k` is `rates[k] / slot_length_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrivalProfileDoc", into = "ArrivalProfileDoc")]
pub struct ArrivalProfile {
    slot_length_min: f64,
    rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalProfileDoc {
    pub slot_length_min: f64,
    pub rates: Vec<f64>,
    pub horizon_min: f64,
}

impl TryFrom<ArrivalProfileDoc> for ArrivalProfile {
    type Error = Error;

    fn try_from(doc: ArrivalProfileDoc) -> Result<Self> {
        let p = ArrivalProfile::new(doc.slot_length_min, doc.rates)?;
        if (p.horizon() - doc.horizon_min).abs() > 1e-9 * p.horizon().max(1.0) {
            return Err(validation(format!(
                "horizon_min {} != slot_length_min x slot count = {}",
                doc.horizon_min,
                p.horizon()
            )));
        }
        Ok(p)
    }
}

impl From<ArrivalProfile> for ArrivalProfileDoc {
    fn from(p: ArrivalProfile) -> Self {
        let horizon_min = p.horizon();
        ArrivalProfileDoc { slot_length_min: p.slot_length_min, rates: p.rates, horizon_min }
    }
}

impl ArrivalProfile {
    pub fn new(slot_length_min: f64, rates: Vec<f64>) -> Result<Self> {
        if !(slot_length_min > 0.0) || !slot_length_min.is_finite() {
            return Err(validation(format!("slot length must be positive, got {slot_length_min}")));
        }
        if rates.is_empty() {
            return Err(validation("arrival profile needs at least one slot"));
        }
        if let Some((k, r)) = rates.iter().enumerate().find(|(_, r)| !(**r >= 0.0) || !r.is_finite()) {
            return Err(validation(format!("arrival rate {r} in slot {k} must be non-negative")));
        }
        Ok(ArrivalProfile { slot_length_min, rates })
    }

    /// `n_slots` slots of `slot_length_min` sharing one per-slot rate.
    pub fn constant(slot_length_min: f64, n_slots: usize, rate_per_slot: f64) -> Result<Self> {
        Self::new(slot_length_min, vec![rate_per_slot; n_slots])
    }

    pub fn slot_length(&self) -> f64 {
        self.slot_length_min
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn n_slots(&self) -> usize {
        self.rates.len()
    }

    pub fn horizon(&self) -> f64 {
        self.slot_length_min * self.rates.len() as f64
    }

    /// Arrivals per minute at time `t` (right-continuous; 0 outside the horizon).
    pub fn rate_per_min(&self, t: f64) -> f64 {
        if t < 0.0 || t >= self.horizon() {
            return 0.0;
        }
        let k = ((t / self.slot_length_min) as usize).min(self.rates.len() - 1);
        self.rates[k] / self.slot_length_min
    }

    pub fn max_rate_per_min(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max) / self.slot_length_min
    }

    pub fn expected_arrivals(&self) -> f64 {
        self.rates.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcurrencyModel {
    pub profile: ArrivalProfile,
    pub service: PhaseTypeDist,
}

impl ConcurrencyModel {
    pub fn new(profile: ArrivalProfile, service: PhaseTypeDist) -> Self {
        ConcurrencyModel { profile, service }
    }

    pub fn horizon(&self) -> f64 {
        self.profile.horizon()
    }
}

/// Whether "adequate" means at most the supportable count, or strictly fewer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountBound {
    #[default]
    AtMost,
    Below,
}

/// `v(t)`, integrated slot by slot so rate jumps fall on panel edges.
pub fn offered_load(model: &ConcurrencyModel, t: f64, quad_tol: f64) -> Result<f64> {
    let horizon = model.horizon();
    if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) {
        return Err(domain(format!("time {t} lies outside [0, {horizon}]")));
    }
    if !(quad_tol > 0.0) {
        return Err(domain(format!("quadrature tolerance must be positive, got {quad_tol}")));
    }
    let t = t.min(horizon);
    let len = model.profile.slot_length();
    let active: Vec<(f64, f64, f64)> = model
        .profile
        .rates()
        .iter()
        .enumerate()
        .filter_map(|(k, &r)| {
            let start = k as f64 * len;
            (r > 0.0 && start < t).then(|| (r / len, start, (start + len).min(t)))
        })
        .collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let survival = |u: f64| model.service.survival(u.max(0.0)).unwrap_or(0.0);
    let mut total = 0.0;
    for &(lambda, start, end) in &active {
        let tol = quad_tol / (active.len() as f64 * lambda);
        total += lambda * adaptive_simpson(&survival, t - end, t - start, tol);
    }
    Ok(total.max(0.0))
}

fn check_mean(v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(domain(format!("Poisson mean must be finite and non-negative, got {v}")));
    }
    Ok(())
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// `vⁿ e^{−v} / n!`.
pub fn concurrency_pmf(v: f64, n: u64) -> Result<f64> {
    check_mean(v)?;
    if v == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if v > 50.0 || n > 50 {
        return Ok((n as f64 * v.ln() - v - ln_factorial(n)).exp());
    }
    let mut p = (-v).exp();
    for k in 1..=n {
        p *= v / k as f64;
    }
    Ok(p)
}

/// `P(N ≤ n_max)` for `N ~ Poisson(v)`.
pub fn concurrency_cdf(v: f64, n_max: u64) -> Result<f64> {
    check_mean(v)?;
    if v == 0.0 {
        return Ok(1.0);
    }
    let ln_v = v.ln();
    let mut ln_p = -v;
    let mut sum = 0.0;
    for k in 0..=n_max {
        if k > 0 {
            ln_p += ln_v - (k as f64).ln();
        }
        let p = ln_p.exp();
        sum += p;
        // Past the mode the tail is dominated by a geometric series in v/k.
        if k as f64 > 2.0 * v + 10.0 && p < 1e-18 * sum {
            break;
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Count threshold used in the adequacy CDF: `⌊N_U / Q⌋`.
pub fn supportable_count(n_supportable: u64, q: f64) -> Result<u64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(domain(format!("QoS fraction must lie in (0, 1], got {q}")));
    }
    Ok((n_supportable as f64 / q + 1e-9).floor() as u64)
}

fn adequacy_at(v: f64, count: u64, bound: CountBound) -> Result<f64> {
    match bound {
        CountBound::AtMost => concurrency_cdf(v, count),
        CountBound::Below if count == 0 => Ok(if v == 0.0 { 1.0 } else { 0.0 }),
        CountBound::Below => concurrency_cdf(v, count - 1),
    }
}

fn check_supportable(n_supportable: u64) -> Result<()> {
    if n_supportable == 0 {
        return Err(domain("supportable sojourner count must be at least 1"));
    }
    Ok(())
}

/// `P(N_U, t) = P(N(t) ≤ ⌊N_U/Q⌋)`.
pub fn adequacy_probability(model: &ConcurrencyModel, n_supportable: u64, q: f64, t: f64) -> Result<f64> {
    adequacy_probability_with(model, n_supportable, q, t, CountBound::AtMost)
}

pub fn adequacy_probability_with(
    model: &ConcurrencyModel,
    n_supportable: u64,
    q: f64,
    t: f64,
    bound: CountBound,
) -> Result<f64> {
    check_supportable(n_supportable)?;
    let count = supportable_count(n_supportable, q)?;
    adequacy_at(offered_load(model, t, DEFAULT_QUAD_TOL)?, count, bound)
}

/// Time average of `P(N_U, t)` over `[0, T]`.
pub fn mean_adequacy(model: &ConcurrencyModel, n_supportable: u64, q: f64, quad_tol: f64) -> Result<f64> {
    check_supportable(n_supportable)?;
    supportable_count(n_supportable, q)?;
    AdequacyProfile::new(model, quad_tol)?.mean_adequacy(n_supportable, q, CountBound::AtMost)
}

/// Offered load tabulated at the Gauss–Legendre nodes of every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AdequacyProfile {
    /// `(weight / T, v(t_node))` pairs.
    nodes: Vec<(f64, f64)>,
}

impl AdequacyProfile {
    pub fn new(model: &ConcurrencyModel, quad_tol: f64) -> Result<Self> {
        let (x, w) = gauss_legendre(NODES_PER_SLOT);
        let len = model.profile.slot_length();
        let horizon = model.horizon();
        let mut nodes = Vec::with_capacity(model.profile.n_slots() * NODES_PER_SLOT);
        for k in 0..model.profile.n_slots() {
            let mid = (k as f64 + 0.5) * len;
            for (xi, wi) in x.iter().zip(&w) {
                let t = mid + 0.5 * len * xi;
                let v = offered_load(model, t, quad_tol)?;
                nodes.push((0.5 * len * wi / horizon, v));
            }
        }
        Ok(AdequacyProfile { nodes })
    }

    pub fn mean_adequacy(&self, n_supportable: u64, q: f64, bound: CountBound) -> Result<f64> {
        check_supportable(n_supportable)?;
        let count = supportable_count(n_supportable, q)?;
        let mut shortfall = 0.0;
        for &(w, v) in &self.nodes {
            shortfall += w * (1.0 - adequacy_at(v, count, bound)?);
        }
        Ok((1.0 - shortfall).clamp(0.0, 1.0))
    }

    /// `E[P(n, t)]` for `n = 1..=n_max`.
    pub fn curve(&self, n_max: u64, q: f64, bound: CountBound) -> Result<Vec<f64>> {
        (1..=n_max).map(|n| self.mean_adequacy(n, q, bound)).collect()
    }

    pub fn peak_offered_load(&self) -> f64 {
        self.nodes.iter().map(|n| n.1).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_model(rate_per_slot: f64, slots: usize) -> ConcurrencyModel {
        ConcurrencyModel::new(
            ArrivalProfile::constant(10.0, slots, rate_per_slot).unwrap(),
            PhaseTypeDist::exponential(1.0 / 60.0).unwrap(),
        )
    }

    #[test]
    fn offered_load_closed_form() {
        let m = exp_model(1.25, 48);
        assert_eq!(offered_load(&m, 0.0, 1e-8).unwrap(), 0.0);
        let want = 7.5 * (1.0 - (-2.0f64).exp());
        assert!((offered_load(&m, 120.0, 1e-10).unwrap() - want).abs() < 1e-7);
    }

    #[test]
    fn offered_load_outside_horizon() {
        let m = exp_model(1.0, 4);
        assert!(matches!(offered_load(&m, 41.0, 1e-8), Err(Error::Domain(_))));
        assert!(matches!(offered_load(&m, -1.0, 1e-8), Err(Error::Domain(_))));
    }

    #[test]
    fn pmf_values() {
        assert_eq!(concurrency_pmf(0.0, 0).unwrap(), 1.0);
        assert!((concurrency_pmf(7.5, 7).unwrap() - 0.146_483_832).abs() < 1e-8);
        let total: f64 = (0..=200).map(|n| concurrency_pmf(7.5, n).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(concurrency_pmf(-1.0, 0).is_err());
        // Log-space branch agrees with the product branch at the switch-over.
        let direct = concurrency_pmf(49.0, 50).unwrap();
        let logged = (50.0 * 49f64.ln() - 49.0 - ln_factorial(50)).exp();
        assert!((direct - logged).abs() < 1e-14);
    }

    #[test]
    fn cdf_values() {
        assert_eq!(concurrency_cdf(0.0, 3).unwrap(), 1.0);
        assert!((concurrency_cdf(7.5, 10).unwrap() - 0.862_238).abs() < 1e-5);
        assert!((concurrency_cdf(7.5, 10_000).unwrap() - 1.0).abs() < 1e-12);
        assert!(concurrency_cdf(900.0, 1000).unwrap() > 0.99);
    }

    #[test]
    fn floor_rule_and_bounds() {
        assert_eq!(supportable_count(10, 0.5).unwrap(), 20);
        assert_eq!(supportable_count(10, 0.3).unwrap(), 33);
        assert_eq!(supportable_count(3, 0.1).unwrap(), 30);
        assert!(supportable_count(10, 0.0).is_err());
        assert!(supportable_count(10, 1.5).is_err());
        assert_eq!(adequacy_at(2.0, 0, CountBound::Below).unwrap(), 0.0);
        let strict = adequacy_at(7.5, 10, CountBound::Below).unwrap();
        assert!((strict - concurrency_cdf(7.5, 9).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_arrivals_always_adequate() {
        let m = exp_model(0.0, 6);
        for n in 1..5 {
            assert_eq!(mean_adequacy(&m, n, 1.0, 1e-8).unwrap(), 1.0);
        }
        assert_eq!(adequacy_probability(&m, 1, 1.0, 30.0).unwrap(), 1.0);
    }
}
