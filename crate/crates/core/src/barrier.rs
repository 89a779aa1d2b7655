//! Path-following barrier method for log-det programs.
//!
//! Maximises `Σ wᵢ ln det Fᵢ(x)` subject to `Gₖ(x) ⪰ 0`, where every `Fᵢ`
//! and `Gₖ` is an affine Hermitian matrix function of a real vector `x`.
//! Each centering step minimises `−t Σ wᵢ ln det Fᵢ − Σ ln det Gₖ` by damped
//! Newton; after centering, the suboptimality is at most `θ / t` with `θ`
//! the total constraint dimension.

use nalgebra::{DMatrix, DVector};

use crate::error::{validation, Result};
use crate::linalg::{c, cholesky_inverse, cholesky_pd, ln_det_pd, CMat};

/// `base + Σ x_j A_j` with Hermitian `base` and `A_j`.
#[derive(Debug, Clone)]
pub(crate) struct AffineHermitian {
    pub base: CMat,
    pub terms: Vec<(usize, CMat)>,
}

impl AffineHermitian {
    pub fn constant(base: CMat) -> Self {
        AffineHermitian { base, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn add(&mut self, var: usize, coeff: CMat) {
        debug_assert_eq!(coeff.shape(), self.base.shape());
        if let Some((_, existing)) = self.terms.iter_mut().find(|(j, _)| *j == var) {
            *existing += coeff;
        } else {
            self.terms.push((var, coeff));
        }
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        let mut m = self.base.clone();
        for (j, a) in &self.terms {
            if x[*j] != 0.0 {
                m += a * c(x[*j], 0.0);
            }
        }
        m
    }

    /// Adds `scale · ∇ ln det F` and `scale · ∇² ln det F` at `m = F(x)`.
    /// Returns false when `m` is not positive definite.
    fn accumulate(&self, m: &CMat, scale: f64, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) -> bool {
        let Some(l) = cholesky_pd(m) else {
            return false;
        };
        let inv = cholesky_inverse(&l);
        let prods: Vec<(usize, CMat)> = self.terms.iter().map(|(j, a)| (*j, &inv * a)).collect();
        let n = m.nrows();
        for (p, (j, bj)) in prods.iter().enumerate() {
            grad[*j] += scale * bj.trace().re;
            for (l, bl) in prods.iter().skip(p) {
                let mut tr = 0.0;
                for r in 0..n {
                    for k in 0..n {
                        tr += (bj[(r, k)] * bl[(k, r)]).re;
                    }
                }
                hess[(*j, *l)] -= scale * tr;
                if j != l {
                    hess[(*l, *j)] -= scale * tr;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LogDetProgram {
    pub n_vars: usize,
    pub objective: Vec<(f64, AffineHermitian)>,
    pub constraints: Vec<AffineHermitian>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierOptions {
    /// Relative suboptimality target.
    pub tol: f64,
    pub t0: f64,
    pub mu: f64,
    pub max_newton: usize,
    pub max_outer: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        BarrierOptions { tol: 1e-6, t0: 1.0, mu: 10.0, max_newton: 200, max_outer: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BarrierStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierResult {
    pub x: Vec<f64>,
    pub status: BarrierStatus,
}

impl LogDetProgram {
    pub fn new(n_vars: usize) -> Self {
        LogDetProgram { n_vars, objective: Vec::new(), constraints: Vec::new() }
    }

    fn theta(&self) -> f64 {
        self.constraints.iter().map(|g| g.dim() as f64).sum()
    }

    /// Objective value, or `None` outside the domain.
    pub fn objective_value(&self, x: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for (w, f) in &self.objective {
            acc += w * ln_det_pd(&f.eval(x))?;
        }
        Some(acc)
    }

    pub fn strictly_feasible(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|g| ln_det_pd(&g.eval(x)).is_some()) && self.objective_value(x).is_some()
    }

    /// Centering objective `−t f(x) − Σ ln det G(x)`.
    fn merit(&self, x: &[f64], t: f64) -> Option<f64> {
        let mut phi = -t * self.objective_value(x)?;
        for g in &self.constraints {
            phi -= ln_det_pd(&g.eval(x))?;
        }
        Some(phi)
    }

    fn derivatives(&self, x: &[f64], t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n_vars;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for (w, f) in &self.objective {
            if !f.accumulate(&f.eval(x), -t * w, &mut grad, &mut hess) {
                return None;
            }
        }
        for g in &self.constraints {
            if !g.accumulate(&g.eval(x), -1.0, &mut grad, &mut hess) {
                return None;
            }
        }
        Some((grad, hess))
    }

    /// Newton direction for the merit function with gradient `grad` and Hessian `hess`.
    fn newton_step(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Option<DVector<f64>> {
        let n = grad.len();
        let scale = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut reg = 0.0;
        for _ in 0..8 {
            let mut h = hess.clone();
            for i in 0..n {
                h[(i, i)] += reg;
            }
            if let Some(ch) = h.cholesky() {
                return Some(-ch.solve(grad));
            }
            reg = if reg == 0.0 { 1e-12 * scale } else { reg * 100.0 };
        }
        None
    }

    fn center(&self, x: &mut Vec<f64>, t: f64, opts: &BarrierOptions) -> bool {
        for _ in 0..opts.max_newton {
            let Some((grad, hess)) = self.derivatives(x, t) else {
                return false;
            };
            let Some(step) = Self::newton_step(&grad, &hess) else {
                return false;
            };
            let slope = grad.dot(&step);
            if -slope / 2.0 <= 1e-10 {
                return true;
            }
            let Some(phi0) = self.merit(x, t) else {
                return false;
            };
            let mut s = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + s * d).collect();
                if let Some(phi) = self.merit(&trial, t) {
                    if phi <= phi0 + 0.25 * s * slope {
                        *x = trial;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                // No representable descent left: treat as centred.
                return true;
            }
        }
        true
    }

    /// Runs the barrier method from a strictly feasible `x0`.
    pub fn solve(&self, x0: Vec<f64>, opts: &BarrierOptions) -> Result<BarrierResult> {
        if x0.len() != self.n_vars {
            return Err(validation(format!("start point has {} coordinates, expected {}", x0.len(), self.n_vars)));
        }
        if !self.strictly_feasible(&x0) {
            return Err(validation("barrier start point is not strictly feasible"));
        }
        let theta = self.theta();
        let mut x = x0;
        let mut t = opts.t0;
        let mut best = x.clone();
        for _ in 0..opts.max_outer {
            if !self.center(&mut x, t, opts) {
                break;
            }
            best.clone_from(&x);
            let obj = self.objective_value(&x).unwrap_or(f64::NEG_INFINITY);
            if theta / t <= opts.tol * obj.abs().max(1.0) {
                return Ok(BarrierResult { x, status: BarrierStatus::Converged });
            }
            t *= opts.mu;
        }
        Ok(BarrierResult { x: best, status: BarrierStatus::MaxIterations })
    }
}
