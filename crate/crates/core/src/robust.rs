//! Robust auxiliary beamforming under bounded victim-channel uncertainty.
//!
//! For each subcarrier the solver maximises the sojourners' sum capacity
//! over transmit covariances `Q_i ⪰ 0` under the SAP power budget, while every
//! inhabitant `v` sees at most `ζ` from every sojourner stream `i` for all
//! channel errors with `Tr(ΔH ΔHᴴ) ≤ ε²`. The semi-infinite constraint is
//! replaced by the equivalent S-Procedure LMI in `(Q_i, α_{v,i})`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::barrier::{AffineHermitian, BarrierOptions, BarrierStatus, LogDetProgram};
use crate::error::{domain, validation, Error, Result};
use crate::linalg::{
    c, frobenius, hermitian_basis, hermitian_coords, hermitian_eigen, hermitian_from_coords, is_hermitian, kron,
    min_eigenvalue, trace_product_re, vec_cols, CMat, MatrixDoc,
};
use crate::mimo::capacity_term;

pub const DEFAULT_SOLVER_TOL: f64 = 1e-6;

/// `Tr(H Q̆ Hᴴ)`, clamped at zero.
pub fn interference(victim: &CMat, q_breve: &CMat) -> Result<f64> {
    if victim.ncols() != q_breve.nrows() || !q_breve.is_square() {
        return Err(Error::Dimension(format!(
            "victim channel is {}x{}, covariance is {}x{}",
            victim.nrows(),
            victim.ncols(),
            q_breve.nrows(),
            q_breve.ncols()
        )));
    }
    let hq = victim * q_breve;
    Ok(trace_product_re(&hq, &victim.adjoint()).max(0.0))
}

/// The S-Procedure matrix `[[αI + G, J], [Jᴴ, k − αε²]]` with
/// `G = −I ⊗ Q̆`, `J = −vec(Q̆ᴴ Ĥᴴ)`, `k = ζ − Tr(Ĥ Q̆ Ĥᴴ)`.
pub fn assemble_lmi(q_breve: &CMat, victim_est: &CMat, eps_sq: f64, zeta: f64, alpha: f64) -> Result<CMat> {
    if !(alpha >= 0.0) {
        return Err(domain(format!("S-Procedure multiplier must be non-negative, got {alpha}")));
    }
    let n_t = q_breve.nrows();
    if !q_breve.is_square() || victim_est.ncols() != n_t {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, victim channel has {} columns",
            q_breve.nrows(),
            q_breve.ncols(),
            victim_est.ncols()
        )));
    }
    let n_r = victim_est.nrows();
    let dim = n_t * n_r;
    let mut m = CMat::zeros(dim + 1, dim + 1);
    let g = -kron(&CMat::identity(n_r, n_r), q_breve);
    m.view_mut((0, 0), (dim, dim)).copy_from(&(g + CMat::identity(dim, dim) * c(alpha, 0.0)));
    let j = -vec_cols(&(q_breve.adjoint() * victim_est.adjoint()));
    m.view_mut((0, dim), (dim, 1)).copy_from(&j);
    m.view_mut((dim, 0), (1, dim)).copy_from(&j.adjoint());
    let k = zeta - trace_product_re(&(victim_est * q_breve), &victim_est.adjoint());
    m[(dim, dim)] = c(k - alpha * eps_sq, 0.0);
    Ok(m)
}

/// Hermitian square root `P` with `P Pᴴ = Q`.
pub fn beamformer_from_q(q: &CMat) -> Result<CMat> {
    if !is_hermitian(q, 1e-8) {
        return Err(validation("covariance is not Hermitian"));
    }
    let (values, vectors) = hermitian_eigen(q);
    let scale = frobenius(q).max(1.0);
    if let Some(bad) = values.iter().find(|&&v| v < -1e-8 * scale) {
        return Err(validation(format!("covariance has negative eigenvalue {bad}")));
    }
    let roots = values.map(|v| c(v.max(0.0).sqrt(), 0.0));
    Ok(&vectors * CMat::from_diagonal(&roots) * vectors.adjoint())
}

/// Data of one subcarrier: each sojourner's BD output and each inhabitant's
/// channel as seen by the optimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierProblem {
    /// Singular values of each sojourner's equivalent channel.
    pub sigmas: Vec<DVector<f64>>,
    /// BD precoder `W_i` of each sojourner.
    pub precoders: Vec<CMat>,
    /// Channel estimate from the SAP to each inhabitant.
    pub victims: Vec<CMat>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustBfProblem {
    pub subcarriers: Vec<SubcarrierProblem>,
    pub eps_sq: f64,
    /// Interference cap in Watts; `f64::INFINITY` drops the constraint.
    pub zeta: f64,
    /// Per-subcarrier power budget in Watts.
    pub p_sap: f64,
    /// Linear SNR entering `SNR / N_ST*`.
    pub snr: f64,
    pub n_st_star: usize,
}

impl RobustBfProblem {
    pub fn validate(&self) -> Result<()> {
        if self.subcarriers.is_empty() {
            return Err(validation("problem has no subcarriers"));
        }
        if !(self.eps_sq >= 0.0) || !self.eps_sq.is_finite() {
            return Err(validation(format!("eps_sq must be finite and non-negative, got {}", self.eps_sq)));
        }
        if !(self.p_sap >= 0.0) || !self.p_sap.is_finite() {
            return Err(validation(format!("p_sap must be non-negative, got {}", self.p_sap)));
        }
        if self.zeta.is_nan() {
            return Err(validation("zeta is NaN"));
        }
        if !(self.snr >= 0.0) || self.n_st_star == 0 {
            return Err(validation("snr must be non-negative and n_st_star positive"));
        }
        for (s, sub) in self.subcarriers.iter().enumerate() {
            if sub.sigmas.len() != sub.precoders.len() || sub.sigmas.is_empty() {
                return Err(Error::Dimension(format!("subcarrier {s}: sojourner data lengths disagree or are empty")));
            }
            let n_t = sub.precoders[0].nrows();
            for (i, (sig, w)) in sub.sigmas.iter().zip(&sub.precoders).enumerate() {
                if w.nrows() != n_t || w.ncols() != sig.len() {
                    return Err(Error::Dimension(format!(
                        "subcarrier {s}, sojourner {i}: precoder {}x{} does not match {} streams on {n_t} antennas",
                        w.nrows(),
                        w.ncols(),
                        sig.len()
                    )));
                }
            }
            if let Some(v) = sub.victims.iter().find(|v| v.ncols() != n_t) {
                return Err(Error::Dimension(format!("subcarrier {s}: victim channel has {} columns, expected {n_t}", v.ncols())));
            }
        }
        Ok(())
    }

    fn gain(&self) -> f64 {
        self.snr / self.n_st_star as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    /// `q[s][i]`: covariance of sojourner `i` on subcarrier `s`.
    pub q: Vec<Vec<CMat>>,
    /// `multipliers[s][v][i]`: S-Procedure multiplier of the LMI for
    /// inhabitant `v` and sojourner `i`; empty when no LMI is imposed.
    pub multipliers: Vec<Vec<Vec<f64>>>,
    /// Sum capacity in bits/s/Hz over sojourners and subcarriers.
    pub objective: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Interference {
    None,
    Nominal,
    Robust,
}

/// Variable layout of one subcarrier program.
struct Layout {
    n_users: usize,
    n_r: Vec<usize>,
    q_offset: Vec<usize>,
    alpha_offset: usize,
    n_victims: usize,
    n_vars: usize,
}

impl Layout {
    fn new(sub: &SubcarrierProblem, mode: Interference) -> Self {
        let n_r: Vec<usize> = sub.sigmas.iter().map(|s| s.len()).collect();
        let mut q_offset = Vec::with_capacity(n_r.len());
        let mut off = 0;
        for r in &n_r {
            q_offset.push(off);
            off += r * r;
        }
        let n_victims = sub.victims.len();
        let alpha_offset = off;
        if mode == Interference::Robust {
            off += n_victims * n_r.len();
        }
        Layout { n_users: n_r.len(), n_r, q_offset, alpha_offset, n_victims, n_vars: off }
    }

    fn alpha(&self, v: usize, i: usize) -> usize {
        self.alpha_offset + v * self.n_users + i
    }
}

fn scalar(v: f64) -> CMat {
    CMat::from_element(1, 1, c(v, 0.0))
}

fn build_program(p: &RobustBfProblem, sub: &SubcarrierProblem, mode: Interference) -> (Layout, LogDetProgram) {
    let layout = Layout::new(sub, mode);
    let mut prog = LogDetProgram::new(layout.n_vars);
    let gain = p.gain();
    let n_t = sub.precoders[0].nrows();
    let mut power = AffineHermitian::constant(scalar(p.p_sap));
    for i in 0..layout.n_users {
        let n_r = layout.n_r[i];
        let basis = hermitian_basis(n_r);
        let lam = CMat::from_diagonal(&sub.sigmas[i].map(|s| c(s, 0.0)));
        let w = &sub.precoders[i];
        let wh_w = w.adjoint() * w;
        let mut cap = AffineHermitian::constant(CMat::identity(n_r, n_r));
        let mut psd = AffineHermitian::constant(CMat::zeros(n_r, n_r));
        for (k, b) in basis.iter().enumerate() {
            let var = layout.q_offset[i] + k;
            cap.add(var, &lam * b * &lam * c(gain, 0.0));
            psd.add(var, b.clone());
            power.add(var, scalar(-trace_product_re(b, &wh_w)));
        }
        prog.objective.push((1.0, cap));
        prog.constraints.push(psd);
    }
    prog.constraints.push(power);

    if mode == Interference::None {
        return (layout, prog);
    }
    for (v, h) in sub.victims.iter().enumerate() {
        for i in 0..layout.n_users {
            let w = &sub.precoders[i];
            let basis = hermitian_basis(layout.n_r[i]);
            let dim = n_t * h.nrows() + 1;
            let mut lmi = match mode {
                Interference::Robust => {
                    let mut base = CMat::zeros(dim, dim);
                    base[(dim - 1, dim - 1)] = c(p.zeta, 0.0);
                    let mut lmi = AffineHermitian::constant(base);
                    let mut a = CMat::identity(dim, dim);
                    a[(dim - 1, dim - 1)] = c(-p.eps_sq, 0.0);
                    lmi.add(layout.alpha(v, i), a);
                    lmi
                }
                _ => AffineHermitian::constant(scalar(p.zeta)),
            };
            for (k, b) in basis.iter().enumerate() {
                let q_breve = w * b * w.adjoint();
                let coeff = match mode {
                    Interference::Robust => assemble_lmi(&q_breve, h, 0.0, 0.0, 0.0).expect("dimensions checked"),
                    _ => scalar(-trace_product_re(&(h * &q_breve), &h.adjoint())),
                };
                lmi.add(layout.q_offset[i] + k, coeff);
            }
            prog.constraints.push(lmi);
        }
    }
    if mode == Interference::Robust {
        for v in 0..layout.n_victims {
            for i in 0..layout.n_users {
                let mut pos = AffineHermitian::constant(scalar(0.0));
                pos.add(layout.alpha(v, i), scalar(1.0));
                prog.constraints.push(pos);
            }
        }
    }
    (layout, prog)
}

/// Strictly feasible start: scaled identities, multipliers at `ζ / (2ε²)`.
fn start_point(p: &RobustBfProblem, layout: &Layout, prog: &LogDetProgram, mode: Interference) -> Option<Vec<f64>> {
    let mut q0 = p.p_sap / (layout.n_users as f64 * layout.n_r.iter().copied().max().unwrap_or(1) as f64) / 2.0;
    for _ in 0..200 {
        let mut x = vec![0.0; layout.n_vars];
        for i in 0..layout.n_users {
            let coords = hermitian_coords(&(CMat::identity(layout.n_r[i], layout.n_r[i]) * c(q0, 0.0)));
            x[layout.q_offset[i]..layout.q_offset[i] + coords.len()].copy_from_slice(&coords);
        }
        if mode == Interference::Robust {
            for v in 0..layout.n_victims {
                for i in 0..layout.n_users {
                    x[layout.alpha(v, i)] = p.zeta / (2.0 * p.eps_sq);
                }
            }
        }
        if prog.strictly_feasible(&x) {
            return Some(x);
        }
        q0 *= 0.5;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative suboptimality target.
    pub tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_SOLVER_TOL, max_outer: 60, max_newton: 200 }
    }
}

pub fn solve_p2(problem: &RobustBfProblem, tol: f64) -> Result<BeamformerSolution> {
    solve_p2_with(problem, &SolveOptions { tol, ..Default::default() })
}

pub fn solve_p2_with(problem: &RobustBfProblem, opts: &SolveOptions) -> Result<BeamformerSolution> {
    problem.validate()?;
    if !(opts.tol > 0.0) {
        return Err(domain(format!("solver tolerance must be positive, got {}", opts.tol)));
    }
    let zero_q = || -> Vec<Vec<CMat>> {
        problem
            .subcarriers
            .iter()
            .map(|s| s.sigmas.iter().map(|sig| CMat::zeros(sig.len(), sig.len())).collect())
            .collect()
    };
    let mode = if problem.zeta.is_infinite() {
        Interference::None
    } else if problem.eps_sq == 0.0 {
        Interference::Nominal
    } else {
        Interference::Robust
    };
    let no_multipliers = || vec![Vec::new(); problem.subcarriers.len()];
    if mode != Interference::None && problem.zeta <= 0.0 {
        return Ok(BeamformerSolution { q: zero_q(), multipliers: no_multipliers(), objective: 0.0, status: SolveStatus::Infeasible });
    }
    if problem.p_sap == 0.0 {
        return Ok(BeamformerSolution { q: zero_q(), multipliers: no_multipliers(), objective: 0.0, status: SolveStatus::Optimal });
    }

    let barrier = BarrierOptions { tol: opts.tol, max_outer: opts.max_outer, max_newton: opts.max_newton, ..Default::default() };
    let mut q = Vec::with_capacity(problem.subcarriers.len());
    let mut multipliers = Vec::with_capacity(problem.subcarriers.len());
    let mut status = SolveStatus::Optimal;
    for sub in &problem.subcarriers {
        let (layout, prog) = build_program(problem, sub, mode);
        let Some(x0) = start_point(problem, &layout, &prog, mode) else {
            return Ok(BeamformerSolution { q: zero_q(), multipliers: no_multipliers(), objective: 0.0, status: SolveStatus::Infeasible });
        };
        let res = prog.solve(x0, &barrier)?;
        if res.status == BarrierStatus::MaxIterations {
            status = SolveStatus::MaxIter;
        }
        q.push(
            (0..layout.n_users)
                .map(|i| {
                    let n = layout.n_r[i];
                    hermitian_from_coords(&res.x[layout.q_offset[i]..layout.q_offset[i] + n * n], n)
                })
                .collect::<Vec<_>>(),
        );
        multipliers.push(if mode == Interference::Robust {
            (0..layout.n_victims).map(|v| (0..layout.n_users).map(|i| res.x[layout.alpha(v, i)]).collect()).collect()
        } else {
            Vec::new()
        });
    }
    let objective = sum_capacity(problem, &q)?;
    Ok(BeamformerSolution { q, multipliers, objective, status })
}

/// Sum of per-sojourner capacities for the given covariances.
pub fn sum_capacity(problem: &RobustBfProblem, q: &[Vec<CMat>]) -> Result<f64> {
    let mut total = 0.0;
    for (sub, qs) in problem.subcarriers.iter().zip(q) {
        for (sig, qi) in sub.sigmas.iter().zip(qs) {
            total += capacity_term(sig, &clip_psd(qi), problem.snr, problem.n_st_star)?;
        }
    }
    Ok(total)
}

/// Projection onto the PSD cone by eigenvalue clipping.
pub fn clip_psd(q: &CMat) -> CMat {
    let (values, vectors) = hermitian_eigen(q);
    let clipped = values.map(|v| c(v.max(0.0), 0.0));
    &vectors * CMat::from_diagonal(&clipped) * vectors.adjoint()
}

/// `Tr(H_v W_i Q_i W_iᴴ H_vᴴ)` for every (victim, sojourner) pair of one subcarrier.
pub fn interference_terms(victims: &[CMat], precoders: &[CMat], q: &[CMat]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(victims.len() * precoders.len());
    for h in victims {
        for (w, qi) in precoders.iter().zip(q) {
            out.push(interference(h, &(w * qi * w.adjoint()))?);
        }
    }
    Ok(out)
}

/// Feasibility diagnostics of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub min_q_eigenvalue: f64,
    /// Largest `Σ Tr(Q̆) − P_SAP` over subcarriers.
    pub max_power_excess: f64,
    /// Smallest LMI eigenvalue divided by the LMI's Frobenius norm.
    pub min_lmi_eigenvalue_rel: f64,
}

pub fn certificates(problem: &RobustBfProblem, sol: &BeamformerSolution) -> Result<Certificates> {
    let mut min_q = f64::INFINITY;
    let mut power_excess = f64::NEG_INFINITY;
    let mut min_lmi = f64::INFINITY;
    for (s, sub) in problem.subcarriers.iter().enumerate() {
        let mut power = 0.0;
        for (w, qi) in sub.precoders.iter().zip(&sol.q[s]) {
            min_q = min_q.min(min_eigenvalue(qi));
            power += (w * qi * w.adjoint()).trace().re;
        }
        power_excess = power_excess.max(power - problem.p_sap);
        if let Some(alphas) = sol.multipliers.get(s).filter(|m| !m.is_empty()) {
            for (v, h) in sub.victims.iter().enumerate() {
                for (i, (w, qi)) in sub.precoders.iter().zip(&sol.q[s]).enumerate() {
                    let lmi = assemble_lmi(&(w * qi * w.adjoint()), h, problem.eps_sq, problem.zeta, alphas[v][i].max(0.0))?;
                    min_lmi = min_lmi.min(min_eigenvalue(&lmi) / frobenius(&lmi).max(1e-300));
                }
            }
        }
    }
    Ok(Certificates { min_q_eigenvalue: min_q, max_power_excess: power_excess, min_lmi_eigenvalue_rel: min_lmi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierProblemDoc {
    pub sigmas: Vec<Vec<f64>>,
    pub precoders: Vec<MatrixDoc>,
    pub victims: Vec<MatrixDoc>,
}

/// Serialized problem; matrices as row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustBfProblemDoc {
    pub subcarriers: Vec<SubcarrierProblemDoc>,
    pub eps_sq: f64,
    /// `null` stands for an unconstrained cap.
    pub zeta: Option<f64>,
    pub p_sap: f64,
    pub snr: f64,
    pub n_st_star: usize,
}

impl From<&RobustBfProblem> for RobustBfProblemDoc {
    fn from(p: &RobustBfProblem) -> Self {
        RobustBfProblemDoc {
            subcarriers: p
                .subcarriers
                .iter()
                .map(|s| SubcarrierProblemDoc {
                    sigmas: s.sigmas.iter().map(|v| v.iter().copied().collect()).collect(),
                    precoders: s.precoders.iter().map(MatrixDoc::from).collect(),
                    victims: s.victims.iter().map(MatrixDoc::from).collect(),
                })
                .collect(),
            eps_sq: p.eps_sq,
            zeta: p.zeta.is_finite().then_some(p.zeta),
            p_sap: p.p_sap,
            snr: p.snr,
            n_st_star: p.n_st_star,
        }
    }
}

impl TryFrom<&RobustBfProblemDoc> for RobustBfProblem {
    type Error = Error;

    fn try_from(d: &RobustBfProblemDoc) -> Result<Self> {
        let subcarriers = d
            .subcarriers
            .iter()
            .map(|s| {
                Ok(SubcarrierProblem {
                    sigmas: s.sigmas.iter().map(|v| DVector::from_vec(v.clone())).collect(),
                    precoders: s.precoders.iter().map(CMat::try_from).collect::<Result<_>>()?,
                    victims: s.victims.iter().map(CMat::try_from).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        let p = RobustBfProblem {
            subcarriers,
            eps_sq: d.eps_sq,
            zeta: d.zeta.unwrap_or(f64::INFINITY),
            p_sap: d.p_sap,
            snr: d.snr,
            n_st_star: d.n_st_star,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSolutionDoc {
    pub q: Vec<Vec<MatrixDoc>>,
    pub multipliers: Vec<Vec<Vec<f64>>>,
    pub objective: f64,
    pub status: SolveStatus,
}

impl From<&BeamformerSolution> for BeamformerSolutionDoc {
    fn from(s: &BeamformerSolution) -> Self {
        BeamformerSolutionDoc {
            q: s.q.iter().map(|qs| qs.iter().map(MatrixDoc::from).collect()).collect(),
            multipliers: s.multipliers.clone(),
            objective: s.objective,
            status: s.status,
        }
    }
}

impl TryFrom<&BeamformerSolutionDoc> for BeamformerSolution {
    type Error = Error;

    fn try_from(d: &BeamformerSolutionDoc) -> Result<Self> {
        Ok(BeamformerSolution {
            q: d.q.iter().map(|qs| qs.iter().map(CMat::try_from).collect::<Result<_>>()).collect::<Result<_>>()?,
            multipliers: d.multipliers.clone(),
            objective: d.objective,
            status: d.status,
        })
    }
}
