//! Phase-type distributions: evaluation, moments, sampling, and EM fitting.
//!
//! A phase-type law is the absorption time of a continuous-time Markov chain
//! with `m` transient states. It is described by the initial probability
//! vector `alpha` (all mass on transient states) and the sub-generator `R`
//! holding the transition rates among transient states, so that
//! `F(x) = 1 - alpha * exp(R x) * 1`.
//!
//! [`empht_fit`] estimates `(alpha, R)` from uncensored duration samples with
//! the expectation-maximisation scheme of Asmussen, Nerman and Olsson: the
//! conditional sufficient statistics of each observation are read off one
//! block matrix exponential.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};

const ALPHA_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhaseTypeDoc", into = "PhaseTypeDoc")]
pub struct PhaseTypeDist {
    alpha: DVector<f64>,
    rate_matrix: DMatrix<f64>,
    /// Cached `-alpha R^{-1} 1`.
    mean: f64,
}

/// Serialized form with keys `m`, `alpha`, `rate_matrix` (row-major rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTypeDoc {
    pub m: usize,
    pub alpha: Vec<f64>,
    pub rate_matrix: Vec<Vec<f64>>,
}

impl TryFrom<PhaseTypeDoc> for PhaseTypeDist {
    type Error = Error;

    fn try_from(doc: PhaseTypeDoc) -> Result<Self> {
        if doc.alpha.len() != doc.m || doc.rate_matrix.len() != doc.m {
            return Err(validation(format!(
                "phase count m={} disagrees with alpha ({}) or rate_matrix ({} rows)",
                doc.m,
                doc.alpha.len(),
                doc.rate_matrix.len()
            )));
        }
        if let Some(row) = doc.rate_matrix.iter().find(|r| r.len() != doc.m) {
            return Err(validation(format!("rate_matrix row of length {} in {}x{} matrix", row.len(), doc.m, doc.m)));
        }
        let r = DMatrix::from_fn(doc.m, doc.m, |i, j| doc.rate_matrix[i][j]);
        PhaseTypeDist::new(doc.alpha, r)
    }
}

impl From<PhaseTypeDist> for PhaseTypeDoc {
    fn from(d: PhaseTypeDist) -> Self {
        let m = d.phases();
        PhaseTypeDoc {
            m,
            alpha: d.alpha.iter().copied().collect(),
            rate_matrix: (0..m).map(|i| d.rate_matrix.row(i).iter().copied().collect()).collect(),
        }
    }
}

impl PhaseTypeDist {
    pub fn new(alpha: Vec<f64>, rate_matrix: DMatrix<f64>) -> Result<Self> {
        let m = alpha.len();
        if m == 0 {
            return Err(validation("phase-type distribution needs at least one phase"));
        }
        if rate_matrix.shape() != (m, m) {
            return Err(validation(format!(
                "rate matrix is {}x{}, expected {m}x{m}",
                rate_matrix.nrows(),
                rate_matrix.ncols()
            )));
        }
        if alpha.iter().chain(rate_matrix.iter()).any(|v| !v.is_finite()) {
            return Err(validation("non-finite entry in alpha or rate matrix"));
        }
        if let Some(a) = alpha.iter().find(|&&a| a < 0.0) {
            return Err(validation(format!("negative initial probability {a}")));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > ALPHA_SUM_TOL {
            return Err(validation(format!("initial probabilities sum to {total}, expected 1")));
        }
        let scale = (0..m).map(|i| rate_matrix[(i, i)].abs()).fold(0.0, f64::max);
        for i in 0..m {
            if !(rate_matrix[(i, i)] < 0.0) {
                return Err(validation(format!("diagonal rate R[{i},{i}] = {} must be negative", rate_matrix[(i, i)])));
            }
            let mut row_sum = 0.0;
            for j in 0..m {
                let v = rate_matrix[(i, j)];
                if i != j && v < 0.0 {
                    return Err(validation(format!("off-diagonal rate R[{i},{j}] = {v} is negative")));
                }
                row_sum += v;
            }
            if row_sum > 1e-9 * scale {
                return Err(validation(format!("row {i} of the rate matrix sums to {row_sum} > 0")));
            }
        }
        let alpha = DVector::from_vec(alpha);
        let ones = DVector::from_element(m, 1.0);
        let neg = -&rate_matrix;
        let times = neg
            .lu()
            .solve(&ones)
            .ok_or_else(|| validation("-R is singular: some phases never absorb"))?;
        if times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(validation("-R is singular: some phases never absorb"));
        }
        let mean = alpha.dot(&times);
        Ok(PhaseTypeDist { alpha, rate_matrix, mean })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![1.0], DMatrix::from_element(1, 1, -rate))
    }

    /// Erlang law with `k` phases of rate `rate` each.
    pub fn erlang(k: usize, rate: f64) -> Result<Self> {
        let mut r = DMatrix::zeros(k, k);
        for i in 0..k {
            r[(i, i)] = -rate;
            if i + 1 < k {
                r[(i, i + 1)] = rate;
            }
        }
        let mut alpha = vec![0.0; k];
        if let Some(a) = alpha.first_mut() {
            *a = 1.0;
        }
        Self::new(alpha, r)
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn rate_matrix(&self) -> &DMatrix<f64> {
        &self.rate_matrix
    }

    /// Absorption rates `-R 1`.
    pub fn exit_rates(&self) -> DVector<f64> {
        -(&self.rate_matrix * DVector::from_element(self.phases(), 1.0))
    }

    /// `P(X > x) = alpha exp(R x) 1`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain(format!("duration must be non-negative, got {x}")));
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        let e = (&self.rate_matrix * x).exp();
        let s = (self.alpha.transpose() * e).sum();
        Ok(s.clamp(0.0, 1.0))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok((1.0 - self.survival(x)?).clamp(0.0, 1.0))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(domain(format!("duration must be non-negative, got {x}")));
        }
        let e = (&self.rate_matrix * x).exp();
        Ok((self.alpha.transpose() * e * self.exit_rates())[0].max(0.0))
    }

    /// `-alpha R^{-1} 1`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Second raw moment `2 alpha R^{-2} 1`.
    pub fn second_moment(&self) -> f64 {
        let neg = -&self.rate_matrix;
        let lu = neg.lu();
        let ones = DVector::from_element(self.phases(), 1.0);
        let once = lu.solve(&ones).expect("validated sub-generator");
        let twice = lu.solve(&once).expect("validated sub-generator");
        2.0 * self.alpha.dot(&twice)
    }

    /// Same law with the rate matrix multiplied by `factor` (time divided by it).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(domain(format!("rate scale factor must be positive, got {factor}")));
        }
        Self::new(self.alpha.iter().copied().collect(), &self.rate_matrix * factor)
    }

    /// Draws one absorption time by simulating the underlying chain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.phases();
        let exits = self.exit_rates();
        let mut state = pick(rng, self.alpha.iter().copied(), 1.0).unwrap_or(m - 1);
        let mut elapsed = 0.0;
        loop {
            let out_rate = -self.rate_matrix[(state, state)];
            let hold: f64 = Exp1.sample(rng);
            elapsed += hold / out_rate;
            let jumps = (0..m).map(|j| if j == state { 0.0 } else { self.rate_matrix[(state, j)] });
            let weights = jumps.chain(std::iter::once(exits[state].max(0.0)));
            match pick(rng, weights, out_rate) {
                Some(next) if next < m => state = next,
                _ => return elapsed,
            }
        }
    }

    pub fn sample_seeded(&self, seed: u64) -> f64 {
        self.sample(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample_n(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }

    pub fn to_doc(&self) -> PhaseTypeDoc {
        self.clone().into()
    }
}

/// Index drawn with probability proportional to `weights` (which sum to `total`).
fn pick<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64>, total: f64) -> Option<usize> {
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    last
}

/// Positive duration observations in minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DurationSamples {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for DurationSamples {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<DurationSamples> for Vec<f64> {
    fn from(s: DurationSamples) -> Self {
        s.values
    }
}

impl DurationSamples {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(validation("no samples"));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(validation(format!("sample {i} is {v}; durations must be positive and finite")));
        }
        Ok(DurationSamples { values })
    }

    /// Parses one decimal duration per line. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("`{line}` is not a decimal duration"),
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parse { line: idx + 1, message: format!("duration {v} must be positive") });
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::Parse { line: 0, message: "no samples".into() });
        }
        Ok(DurationSamples { values })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 12);
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (n - 1 denominator; 0 for a single sample).
    pub fn std_dev(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mu = self.mean();
        (self.values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmOptions {
    pub phases: usize,
    pub max_iters: usize,
    /// Stop once the log-likelihood grows by less than this between iterations.
    pub ll_tol: f64,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { phases: 4, max_iters: 2000, ll_tol: 1e-7, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWarning {
    /// Every sample has the same value; no phase-type law attains the likelihood supremum.
    DegenerateSamples,
    /// Fewer than ten samples per phase.
    FewSamplesPerPhase { samples: usize, phases: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTypeFit {
    pub distribution: PhaseTypeDist,
    /// Log-likelihood of the iterate entering each EM step; the last entry
    /// belongs to `distribution`.
    pub log_likelihood_trace: Vec<f64>,
    pub status: FitStatus,
    pub warnings: Vec<FitWarning>,
}

impl PhaseTypeFit {
    pub fn iterations(&self) -> usize {
        self.log_likelihood_trace.len()
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Working parameters of the EM iteration (time rescaled to unit sample mean).
struct EmState {
    alpha: DVector<f64>,
    rates: DMatrix<f64>,
    exits: DVector<f64>,
}

impl EmState {
    fn random_start(m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut alpha = DVector::from_fn(m, |_, _| rng.random_range(0.1..1.0));
        alpha /= alpha.sum();
        let mut rates = DMatrix::zeros(m, m);
        let mut exits = DVector::zeros(m);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    rates[(i, j)] = rng.random_range(0.0..1.0);
                }
            }
            exits[i] = rng.random_range(0.1..1.0);
            let out: f64 = rates.row(i).sum() + exits[i];
            rates[(i, i)] = -out;
        }
        let mut state = EmState { alpha, rates, exits };
        // Rescale so the starting law has unit mean, matching the rescaled data.
        let mean = state.mean();
        state.rates *= mean;
        state.exits *= mean;
        state
    }

    fn mean(&self) -> f64 {
        let m = self.alpha.len();
        let neg = -&self.rates;
        let t = neg.lu().solve(&DVector::from_element(m, 1.0)).expect("sub-generator");
        self.alpha.dot(&t)
    }

    /// One E-step over `data`; returns the log-likelihood of the current
    /// parameters and the M-step update.
    fn step(&self, data: &[f64]) -> (f64, EmState) {
        let m = self.alpha.len();
        let mut block = DMatrix::zeros(2 * m, 2 * m);
        block.view_mut((0, 0), (m, m)).copy_from(&self.rates);
        block.view_mut((m, m), (m, m)).copy_from(&self.rates);
        block.view_mut((0, m), (m, m)).copy_from(&(&self.exits * self.alpha.transpose()));

        let mut ll = 0.0;
        let mut starts = DVector::<f64>::zeros(m);
        let mut occupancy = DVector::<f64>::zeros(m);
        let mut jumps = DMatrix::<f64>::zeros(m, m);
        let mut absorptions = DVector::<f64>::zeros(m);

        for &y in data {
            let e = (&block * y).exp();
            let ety = e.view((0, 0), (m, m));
            let conv = e.view((0, m), (m, m));
            let a = self.alpha.transpose() * ety;
            let b = ety * &self.exits;
            let f = self.alpha.dot(&b).max(f64::MIN_POSITIVE);
            ll += f.ln();
            for i in 0..m {
                starts[i] += self.alpha[i] * b[i] / f;
                occupancy[i] += conv[(i, i)] / f;
                absorptions[i] += self.exits[i] * a[i] / f;
                for j in 0..m {
                    if i != j {
                        jumps[(i, j)] += self.rates[(i, j)] * conv[(j, i)] / f;
                    }
                }
            }
        }

        let n = data.len() as f64;
        let mut alpha = starts / n;
        alpha /= alpha.sum();
        let mut rates = self.rates.clone();
        let mut exits = self.exits.clone();
        for i in 0..m {
            // A phase with no expected occupancy keeps its previous rates.
            if occupancy[i] > 1e-300 {
                for j in 0..m {
                    if i != j {
                        rates[(i, j)] = jumps[(i, j)] / occupancy[i];
                    }
                }
                exits[i] = absorptions[i] / occupancy[i];
            }
            let out: f64 = (0..m).filter(|&j| j != i).map(|j| rates[(i, j)]).sum::<f64>() + exits[i];
            rates[(i, i)] = -out;
        }
        (ll, EmState { alpha, rates, exits })
    }
}

/// Maximum-likelihood phase-type fit by expectation maximisation.
pub fn empht_fit(samples: &DurationSamples, opts: &EmOptions) -> Result<PhaseTypeFit> {
    let m = opts.phases;
    if m == 0 {
        return Err(domain("phase count must be at least 1"));
    }
    if opts.max_iters == 0 {
        return Err(domain("max_iters must be at least 1"));
    }
    if samples.count() < m {
        return Err(domain(format!("{} samples cannot fit {m} phases", samples.count())));
    }
    let mut warnings = Vec::new();
    let first = samples.values()[0];
    if samples.values().iter().all(|&v| v == first) {
        warnings.push(FitWarning::DegenerateSamples);
    }
    if samples.count() < 10 * m {
        warnings.push(FitWarning::FewSamplesPerPhase { samples: samples.count(), phases: m });
    }

    // EM is equivariant under time scaling; fitting at unit mean keeps ‖R y‖ moderate.
    let scale = samples.mean();
    let data: Vec<f64> = samples.values().iter().map(|v| v / scale).collect();
    let ll_offset = -(data.len() as f64) * scale.ln();

    let mut state = EmState::random_start(m, opts.seed);
    let mut trace = Vec::new();
    let mut status = FitStatus::MaxIterations;
    for iter in 0..opts.max_iters {
        let (ll, next) = state.step(&data);
        let ll = ll + ll_offset;
        let grew = trace.last().map(|prev: &f64| ll - prev);
        trace.push(ll);
        if matches!(grew, Some(g) if g < opts.ll_tol) {
            status = FitStatus::Converged;
            break;
        }
        if iter + 1 == opts.max_iters {
            break;
        }
        state = next;
    }

    let alpha: Vec<f64> = state.alpha.iter().map(|a| a.max(0.0)).collect();
    let total: f64 = alpha.iter().sum();
    let alpha = alpha.into_iter().map(|a| a / total).collect();
    let distribution = PhaseTypeDist::new(alpha, &state.rates / scale)?;
    Ok(PhaseTypeFit { distribution, log_likelihood_trace: trace, status, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_cdf_closed_form() {
        let d = PhaseTypeDist::exponential(1.0 / 60.0).unwrap();
        assert_eq!(d.cdf(0.0).unwrap(), 0.0);
        let want = 1.0 - (-1.0f64).exp();
        assert!((d.cdf(60.0).unwrap() - want).abs() < 1e-12);
        assert!((d.mean() - 60.0).abs() < 1e-10);
    }

    #[test]
    fn erlang_two_cdf_and_mean() {
        let d = PhaseTypeDist::erlang(2, 0.1).unwrap();
        let want = 1.0 - (-2.0f64).exp() * 3.0;
        assert!((d.cdf(20.0).unwrap() - want).abs() < 1e-12);
        assert!((d.mean() - 20.0).abs() < 1e-10);
        assert!((d.second_moment() - 2.0 * 3.0 / 0.01).abs() < 1e-8);
    }

    #[test]
    fn scaling_rates_divides_mean() {
        let d = PhaseTypeDist::erlang(3, 0.2).unwrap();
        assert!((d.scaled(4.0).unwrap().mean() - d.mean() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn negative_duration_is_domain_error() {
        let d = PhaseTypeDist::exponential(1.0).unwrap();
        assert!(matches!(d.cdf(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_generators_rejected() {
        let bad_diag = DMatrix::from_row_slice(1, 1, &[0.5]);
        assert!(matches!(PhaseTypeDist::new(vec![1.0], bad_diag), Err(Error::Validation(_))));
        let bad_alpha = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(PhaseTypeDist::new(vec![0.3, 0.3], bad_alpha).is_err());
        let positive_row = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -1.0]);
        assert!(PhaseTypeDist::new(vec![1.0, 0.0], positive_row).is_err());
        let neg_off = DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 0.0, -1.0]);
        assert!(PhaseTypeDist::new(vec![1.0, 0.0], neg_off).is_err());
    }

    #[test]
    fn closed_class_is_singular() {
        // Phases 0 and 1 exchange mass forever without absorbing.
        let r = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
        assert!(matches!(PhaseTypeDist::new(vec![1.0, 0.0], r), Err(Error::Validation(_))));
    }

    #[test]
    fn doc_roundtrip() {
        let d = PhaseTypeDist::erlang(3, 0.25).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"rate_matrix\""));
        let back: PhaseTypeDist = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let d = PhaseTypeDist::erlang(2, 0.1).unwrap();
        assert_eq!(d.sample_n(50, 9), d.sample_n(50, 9));
        assert_ne!(d.sample_n(50, 9), d.sample_n(50, 10));
    }

    #[test]
    fn parse_reports_line_number() {
        let err = DurationSamples::parse("1.5\n\n2.0\nabc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        assert!(matches!(DurationSamples::parse("# nothing\n\n"), Err(Error::Parse { .. })));
        let s = DurationSamples::parse("1.5 # first\n2.5\n").unwrap();
        assert_eq!(s.values(), &[1.5, 2.5]);
    }

    #[test]
    fn fit_preconditions() {
        let s = DurationSamples::new(vec![1.0, 2.0]).unwrap();
        let opts = EmOptions { phases: 3, ..Default::default() };
        assert!(matches!(empht_fit(&s, &opts), Err(Error::Domain(_))));
        let opts = EmOptions { phases: 1, max_iters: 0, ..Default::default() };
        assert!(matches!(empht_fit(&s, &opts), Err(Error::Domain(_))));
    }

    #[test]
    fn degenerate_samples_flagged() {
        let s = DurationSamples::new(vec![5.0; 30]).unwrap();
        let fit = empht_fit(&s, &EmOptions { phases: 2, max_iters: 50, ..Default::default() }).unwrap();
        assert!(fit.warnings.contains(&FitWarning::DegenerateSamples));
        assert!((fit.distribution.mean() - 5.0).abs() / 5.0 < 0.05);
    }

    #[test]
    fn single_phase_fit_is_exponential_mle() {
        let d = PhaseTypeDist::exponential(0.5).unwrap();
        let s = DurationSamples::new(d.sample_n(400, 3)).unwrap();
        let fit = empht_fit(&s, &EmOptions { phases: 1, ..Default::default() }).unwrap();
        assert_eq!(fit.status, FitStatus::Converged);
        assert!((fit.distribution.mean() - s.mean()).abs() < 1e-6 * s.mean());
    }
}
