//! Experiment runners: attribute-matched planning data sets and the
//! Monte-Carlo capacity/interference study of BD plus robust beamforming.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::linalg::CMat;
use crate::mimo::{bd_precoder, db_to_linear, gaussian_matrix, stack_rows, BdPrecoder};
use crate::phasefit::{empht_fit, DurationSamples, EmOptions, PhaseTypeFit};
use crate::planner::{select_eta_from_profile, select_gamma_from_profile, PlannerConfig, Selection};
use crate::queue::{AdequacyProfile, ArrivalProfile, ConcurrencyModel, CountBound, DEFAULT_QUAD_TOL};
use crate::robust::{interference_terms, solve_p2_with, RobustBfProblem, SolveOptions, SolveStatus, SubcarrierProblem};

pub const SLOTS_PER_DAY: usize = 48;
pub const SLOT_MINUTES: f64 = 10.0;

/// Attributes of one planning data set: sojourner count, stay-time moments
/// and arrivals per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetAttributes {
    pub name: String,
    pub total_sojourners: usize,
    pub mean_stay_min: f64,
    pub sd_stay_min: f64,
    pub slot_length_min: f64,
    pub rates: Vec<f64>,
}

/// The eight reference data sets (48 ten-minute slots from 9 am).
pub fn reference_dataset(index: usize) -> Result<DatasetAttributes> {
    let uniform = |total: f64| vec![total / SLOTS_PER_DAY as f64; SLOTS_PER_DAY];
    // 5 arrivals per slot from 10 to 11 am, the remaining 30 spread over 42 slots.
    let peaked = || -> Vec<f64> { (0..SLOTS_PER_DAY).map(|k| if (6..12).contains(&k) { 5.0 } else { 30.0 / 42.0 }).collect() };
    let (total, mean, sd, rates) = match index {
        1 => (60, 60.0, 3.7947, uniform(60.0)),
        2 => (60, 60.0, 148.0447, uniform(60.0)),
        3 => (60, 90.0, 3.7947, uniform(60.0)),
        4 => (60, 90.0, 148.0447, uniform(60.0)),
        5 => (60, 60.0, 3.7947, peaked()),
        6 => (60, 60.0, 148.0447, peaked()),
        7 => (90, 60.0, 2.7809, uniform(90.0)),
        8 => (90, 60.0, 134.5144, uniform(90.0)),
        _ => return Err(validation(format!("reference data sets are numbered 1..=8, got {index}"))),
    };
    Ok(DatasetAttributes {
        name: format!("set{index}"),
        total_sojourners: total,
        mean_stay_min: mean,
        sd_stay_min: sd,
        slot_length_min: SLOT_MINUTES,
        rates,
    })
}

pub fn reference_datasets() -> Vec<DatasetAttributes> {
    (1..=8).map(|i| reference_dataset(i).expect("valid index")).collect()
}

fn sample_cv(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt() / mean
}

/// Lognormal stays whose sample mean and standard deviation equal the targets.
///
/// Draws `z ~ N(0, 1)` and searches the log-scale `σ` so that `exp(σ z)` has
/// the target sample coefficient of variation, then rescales to the mean.
pub fn synth_durations(count: usize, mean: f64, sd: f64, seed: u64) -> Result<DurationSamples> {
    if count < 2 {
        return Err(validation("need at least two samples to match a standard deviation"));
    }
    if !(mean > 0.0) || !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
        return Err(validation(format!("stay moments must be positive, got mean {mean}, sd {sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..count).map(|_| StandardNormal.sample(&mut rng)).collect();
    let z_max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shaped = |sigma: f64| -> Vec<f64> { z.iter().map(|zi| (sigma * (zi - z_max)).exp()).collect() };
    let target = sd / mean;
    let max_cv = (count as f64).sqrt();
    if target >= max_cv {
        return Err(validation(format!("coefficient of variation {target} is unattainable with {count} samples")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while sample_cv(&shaped(hi)) < target {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(validation(format!("could not reach coefficient of variation {target}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sample_cv(&shaped(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let raw = shaped(0.5 * (lo + hi));
    let scale = mean * count as f64 / raw.iter().sum::<f64>();
    DurationSamples::new(raw.into_iter().map(|x| x * scale).collect())
}

/// Duration samples plus the arrival profile of a data set.
pub fn synth_dataset(attrs: &DatasetAttributes, seed: u64) -> Result<(DurationSamples, ArrivalProfile)> {
    let samples = synth_durations(attrs.total_sojourners, attrs.mean_stay_min, attrs.sd_stay_min, seed)?;
    let profile = ArrivalProfile::new(attrs.slot_length_min, attrs.rates.clone())?;
    Ok((samples, profile))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningOptions {
    pub q: f64,
    pub eta: f64,
    pub gamma: f64,
    pub curve_max: u64,
    pub count_bound: CountBound,
    pub em: EmOptions,
    pub seed: u64,
}

impl Default for PlanningOptions {
    fn default() -> Self {
        PlanningOptions {
            q: 1.0,
            eta: 0.99,
            gamma: 0.001,
            curve_max: 40,
            count_bound: CountBound::Below,
            em: EmOptions::default(),
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPlan {
    pub name: String,
    pub sample_mean: f64,
    pub sample_sd: f64,
    pub fit: PhaseTypeFit,
    /// `E[P(n, t)]` for `n = 1..=curve_max`.
    pub curve: Vec<f64>,
    pub eta_selection: Option<Selection>,
    pub gamma_selection: Option<Selection>,
}

impl DatasetPlan {
    /// `E[P(n, t)]`, or `None` past the tabulated range.
    pub fn mean_adequacy(&self, n: u64) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.curve.get(i as usize)).copied()
    }
}

/// Synthesises, fits and plans one data set.
pub fn plan_dataset(attrs: &DatasetAttributes, opts: &PlanningOptions, seed: u64) -> Result<DatasetPlan> {
    let (samples, profile) = synth_dataset(attrs, seed)?;
    let fit = empht_fit(&samples, &opts.em)?;
    let model = ConcurrencyModel::new(profile, fit.distribution.clone());
    let adequacy = AdequacyProfile::new(&model, DEFAULT_QUAD_TOL)?;
    let cfg = PlannerConfig {
        n_r: 1,
        n1: 0,
        n1_prime: 0,
        q: opts.q,
        eta: opts.eta,
        gamma: opts.gamma,
        count_bound: opts.count_bound,
        ..Default::default()
    };
    Ok(DatasetPlan {
        name: attrs.name.clone(),
        sample_mean: samples.mean(),
        sample_sd: samples.std_dev(),
        curve: adequacy.curve(opts.curve_max, opts.q, opts.count_bound)?,
        eta_selection: select_eta_from_profile(&adequacy, &cfg).ok(),
        gamma_selection: select_gamma_from_profile(&adequacy, &cfg).ok(),
        fit,
    })
}

/// Plans every data set; a failure stays confined to its own entry.
pub fn run_planning_experiment(datasets: &[DatasetAttributes], opts: &PlanningOptions) -> Vec<Result<DatasetPlan>> {
    datasets
        .par_iter()
        .enumerate()
        .map(|(i, attrs)| plan_dataset(attrs, opts, split_seed(opts.seed, i as u64)))
        .collect()
}

/// SplitMix64 finaliser applied to `(master, index)`.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfCsi {
    /// The beamformer sees the true inhabitant channels.
    #[default]
    Perfect,
    /// The beamformer sees the estimates and guards the whole error ball.
    Robust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_sojourners_overlap: usize,
    pub n_inhabitants_overlap: usize,
    pub n_r: usize,
    pub snr_db: f64,
    pub p_sap_watts: f64,
    pub n_subcarriers: usize,
    pub eps_sq_list: Vec<f64>,
    pub zeta_list: Vec<f64>,
    pub n_trials: usize,
    pub master_seed: u64,
    /// SAP transmit antennas; defaults to one stream group per sojourner and inhabitant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_st_star: Option<usize>,
    /// Divide the SNR across subcarriers.
    #[serde(default = "default_true")]
    pub split_snr_over_subcarriers: bool,
    #[serde(default)]
    pub bf_csi: BfCsi,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
}

fn default_true() -> bool {
    true
}

fn default_solver_tol() -> f64 {
    crate::robust::DEFAULT_SOLVER_TOL
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_sojourners_overlap: 2,
            n_inhabitants_overlap: 2,
            n_r: 2,
            snr_db: 20.0,
            p_sap_watts: 10.0,
            n_subcarriers: 4,
            eps_sq_list: vec![0.0, 0.1, 1.0, 5.0, 10.0],
            zeta_list: (1..=12).map(|k| 0.25 * k as f64).collect(),
            n_trials: 200,
            master_seed: 20_160_301,
            n_st_star: None,
            split_snr_over_subcarriers: true,
            bf_csi: BfCsi::Perfect,
            solver_tol: default_solver_tol(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config { path: format!("scenario.{key}"), message: msg });
        if self.n_sojourners_overlap == 0 {
            return bad("n_sojourners_overlap", "must be at least 1".into());
        }
        if self.n_r == 0 {
            return bad("n_r", "must be at least 1".into());
        }
        if self.n_subcarriers == 0 {
            return bad("n_subcarriers", "must be at least 1".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials", "must be at least 1".into());
        }
        if !(self.p_sap_watts > 0.0) || !self.p_sap_watts.is_finite() {
            return bad("p_sap_watts", format!("must be positive, got {}", self.p_sap_watts));
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db", "must be finite".into());
        }
        if self.eps_sq_list.is_empty() || self.eps_sq_list.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return bad("eps_sq_list", "must be a non-empty list of finite non-negative values".into());
        }
        if self.zeta_list.is_empty() || self.zeta_list.iter().any(|z| !(*z > 0.0) || !z.is_finite()) {
            return bad("zeta_list", "must be a non-empty list of positive values".into());
        }
        if !(self.solver_tol > 0.0) {
            return bad("solver_tol", "must be positive".into());
        }
        let needed = self.n_r * (self.n_sojourners_overlap + self.n_inhabitants_overlap);
        if self.n_st() < needed {
            return bad("n_st_star", format!("{} antennas cannot null {needed} receive antennas", self.n_st()));
        }
        Ok(())
    }

    pub fn n_st(&self) -> usize {
        self.n_st_star.unwrap_or(self.n_r * (self.n_sojourners_overlap + self.n_inhabitants_overlap))
    }

    /// Linear SNR entering each subcarrier's capacity.
    pub fn snr_per_subcarrier(&self) -> f64 {
        let snr = db_to_linear(self.snr_db);
        if self.split_snr_over_subcarriers {
            snr / self.n_subcarriers as f64
        } else {
            snr
        }
    }
}

/// BD over sojourners and inhabitant estimates (`A`) or over sojourners only (`B`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum System {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl System {
    pub fn label(self) -> &'static str {
        match self {
            System::A => "a",
            System::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Optimal,
    Infeasible,
    MaxIter,
    Error,
}

impl From<SolveStatus> for TrialStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => TrialStatus::Optimal,
            SolveStatus::Infeasible => TrialStatus::Infeasible,
            SolveStatus::MaxIter => TrialStatus::MaxIter,
        }
    }
}

/// Outcome of one trial in one (system, ε², ζ) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub system: System,
    pub eps_sq: f64,
    pub zeta_watts: f64,
    pub status: TrialStatus,
    /// Sum capacity over sojourners and subcarriers, bits/s with 1 Hz subcarriers.
    pub capacity_bps: f64,
    /// Mean of `Tr(H W Q Wᴴ Hᴴ)` over inhabitants, sojourners and subcarriers (Watts).
    pub interference_w: f64,
}

impl TrialRecord {
    pub fn ok(&self) -> bool {
        self.status == TrialStatus::Optimal
    }
}

/// Channels of one trial on one subcarrier.
struct SubcarrierDraw {
    sojourners: Vec<CMat>,
    inhabitants: Vec<CMat>,
    /// Unit-variance error directions; the error at radius ε² is `√ε² · z`.
    errors: Vec<CMat>,
}

fn draw_trial(cfg: &ScenarioConfig, trial: u64) -> Vec<SubcarrierDraw> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(trial);
    let n_t = cfg.n_st();
    (0..cfg.n_subcarriers)
        .map(|_| {
            let sojourners = (0..cfg.n_sojourners_overlap).map(|_| gaussian_matrix(cfg.n_r, n_t, &mut rng)).collect();
            let inhabitants = (0..cfg.n_inhabitants_overlap).map(|_| gaussian_matrix(cfg.n_r, n_t, &mut rng)).collect();
            let errors = (0..cfg.n_inhabitants_overlap).map(|_| gaussian_matrix(cfg.n_r, n_t, &mut rng)).collect();
            SubcarrierDraw { sojourners, inhabitants, errors }
        })
        .collect()
}

fn precoders(draw: &SubcarrierDraw, estimates: &[CMat], system: System) -> Result<Vec<BdPrecoder>> {
    (0..draw.sojourners.len())
        .map(|i| {
            let mut blocks: Vec<&CMat> = draw.sojourners.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, h)| h).collect();
            if system == System::A {
                blocks.extend(estimates.iter());
            }
            let h_tilde = if blocks.is_empty() { CMat::zeros(0, draw.sojourners[i].ncols()) } else { stack_rows(&blocks)? };
            bd_precoder(&h_tilde, &draw.sojourners[i])
        })
        .collect()
}

/// Per-subcarrier BD output for one system at one uncertainty radius.
struct Design {
    bd: Vec<Vec<BdPrecoder>>,
    victims: Vec<Vec<CMat>>,
    sdp_eps_sq: f64,
}

fn design(cfg: &ScenarioConfig, draws: &[SubcarrierDraw], system: System, eps_sq: f64) -> Result<Design> {
    let scale = nalgebra::Complex::new(eps_sq.sqrt(), 0.0);
    let mut bd = Vec::with_capacity(draws.len());
    let mut victims = Vec::with_capacity(draws.len());
    for d in draws {
        let estimates: Vec<CMat> = d.inhabitants.iter().zip(&d.errors).map(|(h, z)| h - z * scale).collect();
        bd.push(precoders(d, &estimates, system)?);
        victims.push(match cfg.bf_csi {
            BfCsi::Perfect => d.inhabitants.clone(),
            BfCsi::Robust => estimates,
        });
    }
    let sdp_eps_sq = match cfg.bf_csi {
        BfCsi::Perfect => 0.0,
        BfCsi::Robust => eps_sq,
    };
    Ok(Design { bd, victims, sdp_eps_sq })
}

fn evaluate(cfg: &ScenarioConfig, draws: &[SubcarrierDraw], design: &Design, zeta: f64) -> Result<(TrialStatus, f64, f64)> {
    let problem = RobustBfProblem {
        subcarriers: design
            .bd
            .iter()
            .zip(&design.victims)
            .map(|(bd, victims)| SubcarrierProblem {
                sigmas: bd.iter().map(|b| b.sigma.clone()).collect(),
                precoders: bd.iter().map(|b| b.w.clone()).collect(),
                victims: victims.clone(),
            })
            .collect(),
        eps_sq: design.sdp_eps_sq,
        zeta,
        p_sap: cfg.p_sap_watts,
        snr: cfg.snr_per_subcarrier(),
        n_st_star: cfg.n_st(),
    };
    let sol = solve_p2_with(&problem, &SolveOptions { tol: cfg.solver_tol, ..Default::default() })?;
    let mut terms = Vec::new();
    for ((d, bd), q) in draws.iter().zip(&design.bd).zip(&sol.q) {
        let ws: Vec<CMat> = bd.iter().map(|b| b.w.clone()).collect();
        terms.extend(interference_terms(&d.inhabitants, &ws, q)?);
    }
    let interference = if terms.is_empty() { 0.0 } else { compensated_sum(&terms) / terms.len() as f64 };
    Ok((sol.status.into(), sol.objective, interference))
}

fn run_trial(cfg: &ScenarioConfig, trial: u64) -> Vec<TrialRecord> {
    let draws = draw_trial(cfg, trial);
    let mut out = Vec::with_capacity(2 * cfg.eps_sq_list.len() * cfg.zeta_list.len());
    // Under perfect CSI the sojourner-only design does not depend on ε².
    let mut shared_b: Option<Vec<(TrialStatus, f64, f64)>> = None;
    for system in [System::A, System::B] {
        for &eps_sq in &cfg.eps_sq_list {
            let reuse = system == System::B && cfg.bf_csi == BfCsi::Perfect;
            let cells: Vec<(TrialStatus, f64, f64)> = match (&shared_b, reuse) {
                (Some(cached), true) => cached.clone(),
                _ => {
                    let computed: Vec<_> = match design(cfg, &draws, system, eps_sq) {
                        Ok(d) => cfg
                            .zeta_list
                            .iter()
                            .map(|&z| evaluate(cfg, &draws, &d, z).unwrap_or((TrialStatus::Error, f64::NAN, f64::NAN)))
                            .collect(),
                        Err(_) => vec![(TrialStatus::Error, f64::NAN, f64::NAN); cfg.zeta_list.len()],
                    };
                    if reuse {
                        shared_b = Some(computed.clone());
                    }
                    computed
                }
            };
            for (&zeta, (status, cap, intf)) in cfg.zeta_list.iter().zip(cells) {
                out.push(TrialRecord {
                    trial,
                    system,
                    eps_sq,
                    zeta_watts: zeta,
                    status,
                    capacity_bps: cap,
                    interference_w: intf,
                });
            }
        }
    }
    out
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = compensated_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub system: System,
    pub eps_sq: f64,
    pub zeta_watts: f64,
    pub mean_capacity_bps: f64,
    pub se_capacity: f64,
    pub mean_interference_w: f64,
    pub se_interference: f64,
    pub n_ok: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRecord>,
    /// More than 5% of trial cells failed.
    pub failure_warning: bool,
}

impl ExperimentResult {
    pub fn cell(&self, system: System, eps_sq: f64, zeta: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.system == system && c.eps_sq == eps_sq && c.zeta_watts == zeta)
    }

    pub fn records(&self, system: System, eps_sq: f64, zeta: f64) -> Vec<&TrialRecord> {
        self.trials.iter().filter(|r| r.system == system && r.eps_sq == eps_sq && r.zeta_watts == zeta).collect()
    }
}

type CellKey = (System, u64, u64);

fn key(r: &TrialRecord) -> CellKey {
    (r.system, r.eps_sq.to_bits(), r.zeta_watts.to_bits())
}

/// Aggregates trial records into per-cell means; records are sorted by trial
/// first, so the result does not depend on their input order.
pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<CellKey, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(key(r)).or_default().push(r);
    }
    let mut order: Vec<(CellKey, Vec<&TrialRecord>)> = groups.into_iter().collect();
    order.sort_by(|a, b| {
        let (sa, ea, za) = a.0;
        let (sb, eb, zb) = b.0;
        sa.cmp(&sb)
            .then(f64::from_bits(ea).total_cmp(&f64::from_bits(eb)))
            .then(f64::from_bits(za).total_cmp(&f64::from_bits(zb)))
    });
    order
        .into_iter()
        .map(|((system, e, z), mut rs)| {
            rs.sort_by_key(|r| r.trial);
            let ok: Vec<&&TrialRecord> = rs.iter().filter(|r| r.ok()).collect();
            let caps: Vec<f64> = ok.iter().map(|r| r.capacity_bps).collect();
            let intf: Vec<f64> = ok.iter().map(|r| r.interference_w).collect();
            let (mean_capacity_bps, se_capacity) = mean_se(&caps);
            let (mean_interference_w, se_interference) = mean_se(&intf);
            CellSummary {
                system,
                eps_sq: f64::from_bits(e),
                zeta_watts: f64::from_bits(z),
                mean_capacity_bps,
                se_capacity,
                mean_interference_w,
                se_interference,
                n_ok: ok.len(),
                n_failed: rs.len() - ok.len(),
            }
        })
        .collect()
}

/// Runs every trial (in parallel on the current rayon pool) and aggregates.
pub fn run_bdbf_experiment(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let trials: Vec<TrialRecord> =
        (0..cfg.n_trials as u64).into_par_iter().map(|t| run_trial(cfg, t)).collect::<Vec<_>>().concat();
    Ok(from_records(trials))
}

pub fn from_records(trials: Vec<TrialRecord>) -> ExperimentResult {
    let cells = summarize(&trials);
    let failed = trials.iter().filter(|r| !r.ok()).count();
    let failure_warning = failed as f64 > 0.05 * trials.len() as f64;
    ExperimentResult { cells, trials, failure_warning }
}

/// Paired difference `x − y` over trials where both succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub mean_diff: f64,
    pub se_diff: f64,
    pub n_pairs: usize,
}

impl PairedDifference {
    /// Mean difference exceeds `k` standard errors.
    pub fn significant(&self, k: f64) -> bool {
        self.mean_diff > k * self.se_diff
    }
}

pub fn paired_difference(xs: &[&TrialRecord], ys: &[&TrialRecord]) -> Result<PairedDifference> {
    let index = |rs: &[&TrialRecord]| -> Result<BTreeMap<u64, (bool, f64)>> {
        let mut m = BTreeMap::new();
        for r in rs {
            if m.insert(r.trial, (r.ok(), r.capacity_bps)).is_some() {
                return Err(validation(format!("trial {} appears twice in one cell", r.trial)));
            }
        }
        Ok(m)
    };
    let xm = index(xs)?;
    let ym = index(ys)?;
    if xm.len() != ym.len() || xm.keys().zip(ym.keys()).any(|(a, b)| a != b) {
        return Err(validation("compared cells do not cover the same trials"));
    }
    let diffs: Vec<f64> = xm
        .iter()
        .zip(ym.values())
        .filter(|((_, (okx, _)), (oky, _))| *okx && *oky)
        .map(|((_, (_, x)), (_, y))| x - y)
        .collect();
    let (mean_diff, se_diff) = mean_se(&diffs);
    Ok(PairedDifference { mean_diff, se_diff, n_pairs: diffs.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub eps_sq_a: f64,
    pub eps_sq_b: f64,
    pub zeta_watts: f64,
    pub mean_capacity_a: f64,
    pub mean_capacity_b: f64,
    pub mean_diff_bps: f64,
    pub se_diff: f64,
    pub n_pairs: usize,
    /// `mean(a) > mean(b)` fails.
    pub flagged: bool,
    pub significant_2se: bool,
}

/// Paired comparison of system a against system b per (ε², ζ). With
/// `baseline_eps`, system b is always taken at that radius.
pub fn compare_systems(result: &ExperimentResult, baseline_eps: Option<f64>) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    let cells: Vec<&CellSummary> = result.cells.iter().filter(|c| c.system == System::A).collect();
    if cells.is_empty() {
        return Err(validation("result holds no system-a cells"));
    }
    for a in cells {
        let eps_b = baseline_eps.unwrap_or(a.eps_sq);
        let Some(b) = result.cell(System::B, eps_b, a.zeta_watts) else {
            return Err(validation(format!("no system-b cell at eps_sq={eps_b}, zeta={}", a.zeta_watts)));
        };
        let d = paired_difference(
            &result.records(System::A, a.eps_sq, a.zeta_watts),
            &result.records(System::B, eps_b, a.zeta_watts),
        )?;
        rows.push(ComparisonRow {
            eps_sq_a: a.eps_sq,
            eps_sq_b: eps_b,
            zeta_watts: a.zeta_watts,
            mean_capacity_a: a.mean_capacity_bps,
            mean_capacity_b: b.mean_capacity_bps,
            mean_diff_bps: d.mean_diff,
            se_diff: d.se_diff,
            n_pairs: d.n_pairs,
            flagged: !(d.mean_diff > 0.0),
            significant_2se: d.significant(2.0),
        });
    }
    Ok(rows)
}
