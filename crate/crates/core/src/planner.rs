//! Antenna-count selection for the sojourner and inhabitant access points.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::queue::{AdequacyProfile, ConcurrencyModel, CountBound, DEFAULT_QUAD_TOL};

pub const DEFAULT_SEARCH_CAP: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest count whose mean adequacy reaches `eta`.
    #[default]
    Eta,
    /// Smallest count past which one more sojourner gains at most `gamma`.
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub n_r: u64,
    /// Inhabitants in the coverage area.
    pub n1: u64,
    /// Inhabitants inside the sojourner cell that the SAP must null toward.
    pub n1_prime: u64,
    pub q: f64,
    pub q_prime: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Overlap area divided by the sojourner-cell area.
    pub overlap_ratio: f64,
    #[serde(default)]
    pub rule: SelectionRule,
    #[serde(default = "default_bound")]
    pub count_bound: CountBound,
    #[serde(default = "default_cap")]
    pub search_cap: u64,
}

fn default_bound() -> CountBound {
    CountBound::Below
}

fn default_cap() -> u64 {
    DEFAULT_SEARCH_CAP
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            n_r: 2,
            n1: 10,
            n1_prime: 0,
            q: 1.0,
            q_prime: 1.0,
            eta: 0.99,
            gamma: 0.001,
            overlap_ratio: 0.1,
            rule: SelectionRule::Eta,
            count_bound: default_bound(),
            search_cap: DEFAULT_SEARCH_CAP,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_r == 0 {
            return Err(validation("n_r must be at least 1"));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(validation(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.q_prime > 0.0) || !self.q_prime.is_finite() {
            return Err(validation(format!("q_prime must be positive, got {}", self.q_prime)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(validation(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(validation(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.overlap_ratio) {
            return Err(validation(format!("overlap_ratio must lie in [0, 1], got {}", self.overlap_ratio)));
        }
        if self.search_cap == 0 {
            return Err(validation("search_cap must be at least 1"));
        }
        Ok(())
    }

    /// Transmit antennas needed to serve `n_u` sojourners.
    pub fn sap_antennas_for(&self, n_u: u64) -> u64 {
        self.n_r * (n_u + self.n1_prime)
    }
}

/// `N_U = N_ST / N_R − N1'`.
pub fn supportable_sojourners(n_st: u64, cfg: &PlannerConfig) -> Result<u64> {
    if cfg.n_r == 0 {
        return Err(validation("n_r must be at least 1"));
    }
    if !n_st.is_multiple_of(cfg.n_r) {
        return Err(domain(format!("{n_st} transmit antennas is not a multiple of n_r = {}", cfg.n_r)));
    }
    let streams = n_st / cfg.n_r;
    if streams <= cfg.n1_prime {
        return Err(domain(format!(
            "{n_st} transmit antennas leave no sojourner streams after nulling {} inhabitants",
            cfg.n1_prime
        )));
    }
    Ok(streams - cfg.n1_prime)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub n_st: u64,
    pub n_u: u64,
    /// Mean adequacy at `n_u`.
    pub mean_adequacy: f64,
}

/// Linear search over `N_U = 1, 2, …` (equivalently `N_ST` in steps of `N_R`).
fn search(
    profile: &AdequacyProfile,
    cfg: &PlannerConfig,
    accept: impl Fn(f64, &dyn Fn() -> Result<f64>) -> bool,
) -> Result<Selection> {
    cfg.validate()?;
    let mean = |n: u64| profile.mean_adequacy(n, cfg.q, cfg.count_bound);
    for n_u in 1..=cfg.search_cap {
        let here = mean(n_u)?;
        let next = || mean(n_u + 1);
        if accept(here, &next) {
            return Ok(Selection { n_st: cfg.sap_antennas_for(n_u), n_u, mean_adequacy: here });
        }
    }
    Err(Error::Unsatisfiable { cap: cfg.search_cap })
}

pub fn select_eta_from_profile(profile: &AdequacyProfile, cfg: &PlannerConfig) -> Result<Selection> {
    search(profile, cfg, |here, _| here >= cfg.eta)
}

pub fn select_gamma_from_profile(profile: &AdequacyProfile, cfg: &PlannerConfig) -> Result<Selection> {
    search(profile, cfg, |here, next| next().map(|n| n - here <= cfg.gamma).unwrap_or(false))
}

/// Minimum `N_ST` with `E[P(N_U, t)] ≥ η`.
pub fn select_sap_antennas_eta(model: &ConcurrencyModel, cfg: &PlannerConfig) -> Result<u64> {
    cfg.validate()?;
    let profile = AdequacyProfile::new(model, DEFAULT_QUAD_TOL)?;
    Ok(select_eta_from_profile(&profile, cfg)?.n_st)
}

/// Minimum `N_ST` with `E[P(N_U + 1, t)] − E[P(N_U, t)] ≤ γ`.
pub fn select_sap_antennas_gamma(model: &ConcurrencyModel, cfg: &PlannerConfig) -> Result<u64> {
    cfg.validate()?;
    let profile = AdequacyProfile::new(model, DEFAULT_QUAD_TOL)?;
    Ok(select_gamma_from_profile(&profile, cfg)?.n_st)
}

/// `⌈N_R · Q' · (N1 + N_U* · overlap_ratio)⌉`.
pub fn iap_antennas(cfg: &PlannerConfig, n_u_star: u64) -> Result<u64> {
    cfg.validate()?;
    if n_u_star == 0 {
        return Err(domain("selected sojourner count must be at least 1"));
    }
    let raw = cfg.n_r as f64 * cfg.q_prime * (cfg.n1 as f64 + n_u_star as f64 * cfg.overlap_ratio);
    Ok((raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as u64)
}

/// Area of the intersection of two disks.
pub fn disk_overlap_area(r1: f64, r2: f64, d: f64) -> Result<f64> {
    if !(r1 > 0.0) || !(r2 > 0.0) || !(d >= 0.0) || !(r1 + r2 + d).is_finite() {
        return Err(domain(format!("radii must be positive and distance non-negative, got ({r1}, {r2}, {d})")));
    }
    if d >= r1 + r2 {
        return Ok(0.0);
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return Ok(std::f64::consts::PI * r * r);
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let kite = 0.5 * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0).sqrt();
    Ok(r1 * r1 * a1 + r2 * r2 * a2 - kite)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub rule: SelectionRule,
    pub eta_selection: Option<Selection>,
    pub gamma_selection: Option<Selection>,
    /// SAP antennas chosen by `rule`.
    pub n_st_star: u64,
    pub n_u_star: u64,
    pub n_it: u64,
    /// `(N_U, N_U / Q count threshold, E[P(N_U, t)])` rows.
    pub table: Vec<(u64, u64, f64)>,
}

/// Runs both selection rules and sizes the IAP from the one named by `cfg.rule`.
pub fn plan(model: &ConcurrencyModel, cfg: &PlannerConfig, table_len: u64) -> Result<PlanReport> {
    cfg.validate()?;
    let profile = AdequacyProfile::new(model, DEFAULT_QUAD_TOL)?;
    plan_from_profile(&profile, cfg, table_len)
}

pub fn plan_from_profile(profile: &AdequacyProfile, cfg: &PlannerConfig, table_len: u64) -> Result<PlanReport> {
    let eta = select_eta_from_profile(profile, cfg);
    let gamma = select_gamma_from_profile(profile, cfg);
    let chosen = match cfg.rule {
        SelectionRule::Eta => eta.as_ref(),
        SelectionRule::Gamma => gamma.as_ref(),
    };
    let chosen = match chosen {
        Ok(s) => *s,
        Err(Error::Unsatisfiable { cap }) => return Err(Error::Unsatisfiable { cap: *cap }),
        Err(e) => return Err(validation(e.to_string())),
    };
    let rows = table_len.max(chosen.n_u + 1);
    let mut table = Vec::with_capacity(rows as usize);
    for n in 1..=rows {
        let count = crate::queue::supportable_count(n, cfg.q)?;
        table.push((n, count, profile.mean_adequacy(n, cfg.q, cfg.count_bound)?));
    }
    Ok(PlanReport {
        rule: cfg.rule,
        eta_selection: eta.ok(),
        gamma_selection: gamma.ok(),
        n_st_star: chosen.n_st,
        n_u_star: chosen.n_u,
        n_it: iap_antennas(cfg, chosen.n_u)?,
        table,
    })
}
