//! Reference computations shared by the integration tests. Everything here is
//! written against first principles, not against the library's internals.

#![allow(dead_code)]

use cscs::linalg::CMat;
use cscs::{ArrivalProfile, PhaseTypeDist};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

/// Direct CTMC simulation of the absorption time.
pub fn ph_sample<R: Rng>(dist: &PhaseTypeDist, rng: &mut R) -> f64 {
    let r = dist.rate_matrix();
    let m = dist.phases();
    let pick = |weights: &[f64], rng: &mut R| -> Option<usize> {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                return Some(k);
            }
            u -= w;
        }
        None
    };
    let alpha: Vec<f64> = dist.alpha().iter().copied().collect();
    let mut state = pick(&alpha, rng).unwrap_or(m - 1);
    let mut t = 0.0;
    loop {
        let out = -r[(state, state)];
        t += Exp::new(out).unwrap().sample(rng);
        let mut w: Vec<f64> = (0..m).map(|j| if j == state { 0.0 } else { r[(state, j)] }).collect();
        let exit = out - w.iter().sum::<f64>();
        w.push(exit.max(0.0));
        match pick(&w, rng) {
            Some(j) if j < m => state = j,
            _ => return t,
        }
    }
}

/// Concurrent-customer counts at each checkpoint for one sample path of an
/// infinite-server queue fed by the piecewise-constant profile.
pub fn des_counts<R: Rng>(profile: &ArrivalProfile, service: &PhaseTypeDist, checkpoints: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; checkpoints.len()];
    let slot = profile.slot_length();
    let last = checkpoints.iter().copied().fold(0.0, f64::max);
    for (k, &rate) in profile.rates().iter().enumerate() {
        let start = k as f64 * slot;
        if start > last || rate == 0.0 {
            continue;
        }
        let n: f64 = Poisson::new(rate).unwrap().sample(rng);
        for _ in 0..n as u64 {
            let arrival = start + rng.random::<f64>() * slot;
            let departure = arrival + ph_sample(service, rng);
            for (c, &t) in counts.iter_mut().zip(checkpoints) {
                if arrival <= t && departure > t {
                    *c += 1;
                }
            }
        }
    }
    counts
}

/// `∫_{u0}^{u1} α e^{R u} 1 du = α R⁻¹ (e^{R u1} − e^{R u0}) 1`.
pub fn ph_survival_integral(dist: &PhaseTypeDist, u0: f64, u1: f64) -> f64 {
    let r = dist.rate_matrix();
    let m = dist.phases();
    let r_inv = r.clone().try_inverse().expect("rate matrix is invertible");
    let diff: DMatrix<f64> = (r * u1).exp() - (r * u0).exp();
    let ones = DVector::from_element(m, 1.0);
    (dist.alpha().transpose() * r_inv * diff * ones)[(0, 0)]
}

/// Offered load by summing exact per-slot integrals.
pub fn offered_load_closed_form(profile: &ArrivalProfile, service: &PhaseTypeDist, t: f64) -> f64 {
    let slot = profile.slot_length();
    let mut v = 0.0;
    for (k, &rate) in profile.rates().iter().enumerate() {
        let a = k as f64 * slot;
        if a >= t {
            break;
        }
        let b = ((k + 1) as f64 * slot).min(t);
        v += rate / slot * ph_survival_integral(service, t - b, t - a);
    }
    v
}

/// Total-variation distance between an empirical count histogram and a pmf.
pub fn total_variation(counts: &[u64], pmf: impl Fn(u64) -> f64) -> f64 {
    let n = counts.len() as f64;
    let top = counts.iter().copied().max().unwrap_or(0) + 60;
    let mut hist = vec![0.0; top as usize + 1];
    for &c in counts {
        hist[c as usize] += 1.0 / n;
    }
    let mut covered = 0.0;
    let mut tv = 0.0;
    for (k, h) in hist.iter().enumerate() {
        let p = pmf(k as u64);
        covered += p;
        tv += (h - p).abs();
    }
    0.5 * (tv + (1.0 - covered).max(0.0))
}

/// Optimal value of `Σ log2(1 + g_k p_k)` with `Σ p_k ≤ power`, `p_k ≥ 0`.
pub fn water_filling(gains: &[f64], power: f64) -> f64 {
    let alloc = |level: f64| -> f64 { gains.iter().filter(|&&g| g > 0.0).map(|g| (level - 1.0 / g).max(0.0)).sum() };
    let (mut lo, mut hi) = (0.0, power + gains.iter().filter(|&&g| g > 0.0).map(|g| 1.0 / g).sum::<f64>());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if alloc(mid) > power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let level = 0.5 * (lo + hi);
    gains.iter().filter(|&&g| g > 0.0).map(|g| (1.0 + g * (level - 1.0 / g).max(0.0)).log2()).sum()
}

/// Complex Gaussian matrix with unit-variance entries.
pub fn cn_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let normal = rand_distr::StandardNormal;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = normal.sample(rng);
        let im: f64 = normal.sample(rng);
        nalgebra::Complex::new(s * re, s * im)
    })
}

pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Random point on the sphere `Tr(Δ Δᴴ) = ε²`.
pub fn boundary_error<R: Rng>(rows: usize, cols: usize, eps_sq: f64, rng: &mut R) -> CMat {
    let z = cn_matrix(rows, cols, rng);
    let n = fro(&z);
    z * nalgebra::Complex::new(eps_sq.sqrt() / n, 0.0)
}
