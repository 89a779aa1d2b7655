//! Flat-fading MIMO channels and block-diagonalization precoding.

use nalgebra::{DVector, SVD};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::linalg::{c, frobenius, is_hermitian, ln_det_pd, min_eigenvalue, CMat, C64, MatrixDoc};

/// Relative cut-off below which a singular value counts as zero.
pub const NULL_SPACE_RTOL: f64 = 1e-10;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Identifies one link: transmitter, receiving user and subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LinkId {
    pub tx: usize,
    pub user: usize,
    pub subcarrier: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMat,
    pub link: LinkId,
}

impl ChannelMatrix {
    pub fn new(entries: CMat, link: LinkId) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(validation("channel matrix has non-finite entries"));
        }
        Ok(ChannelMatrix { entries, link })
    }

    pub fn n_r(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.entries.ncols()
    }

    pub fn to_doc(&self) -> MatrixDoc {
        MatrixDoc::from(&self.entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    /// Entries i.i.d. CN(0, eps_sq).
    Gaussian,
    /// Uniform direction with `Tr(ΔH ΔHᴴ) = eps_sq` exactly.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertainChannel {
    pub estimate: ChannelMatrix,
    pub radius_sq: f64,
    pub true_channel: Option<ChannelMatrix>,
}

impl UncertainChannel {
    /// `H − Ĥ`, when the true channel is known.
    pub fn error(&self) -> Option<CMat> {
        self.true_channel.as_ref().map(|h| &h.entries - &self.estimate.entries)
    }
}

/// One CN(0, 1) draw.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `n_r × n_t` matrix of i.i.d. CN(0, 1) entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n_r, n_t, |_, _| complex_normal(rng))
}

pub fn sample_channel<R: Rng + ?Sized>(n_r: usize, n_t: usize, rng: &mut R) -> Result<CMat> {
    if n_r == 0 || n_t == 0 {
        return Err(domain(format!("channel dimensions must be positive, got {n_r}x{n_t}")));
    }
    Ok(gaussian_matrix(n_r, n_t, rng))
}

/// Channel-error draw of the given mode.
pub fn sample_error<R: Rng + ?Sized>(n_r: usize, n_t: usize, eps_sq: f64, mode: PerturbMode, rng: &mut R) -> Result<CMat> {
    if !(eps_sq >= 0.0) || !eps_sq.is_finite() {
        return Err(domain(format!("uncertainty radius must be non-negative, got {eps_sq}")));
    }
    if eps_sq == 0.0 {
        return Ok(CMat::zeros(n_r, n_t));
    }
    let z = gaussian_matrix(n_r, n_t, rng);
    Ok(match mode {
        PerturbMode::Gaussian => z * c(eps_sq.sqrt(), 0.0),
        PerturbMode::Boundary => {
            let norm = frobenius(&z);
            z * c(eps_sq.sqrt() / norm, 0.0)
        }
    })
}

/// Treats `est` as the estimate and draws the true channel `est + ΔH`.
pub fn perturb_channel<R: Rng + ?Sized>(
    est: &ChannelMatrix,
    eps_sq: f64,
    mode: PerturbMode,
    rng: &mut R,
) -> Result<UncertainChannel> {
    let dh = sample_error(est.n_r(), est.n_t(), eps_sq, mode, rng)?;
    let true_channel = ChannelMatrix::new(&est.entries + dh, est.link)?;
    Ok(UncertainChannel { estimate: est.clone(), radius_sq: eps_sq, true_channel: Some(true_channel) })
}

/// Vertical stack of every channel except `exclude`, keeping order.
pub fn stack_interfering(channels: &[CMat], exclude: usize) -> Result<CMat> {
    let kept: Vec<&CMat> = channels.iter().enumerate().filter(|(i, _)| *i != exclude).map(|(_, h)| h).collect();
    stack_rows(&kept)
}

pub fn stack_rows(blocks: &[&CMat]) -> Result<CMat> {
    let Some(first) = blocks.first() else {
        return Err(validation("nothing left to stack"));
    };
    let n_t = first.ncols();
    if let Some(bad) = blocks.iter().find(|h| h.ncols() != n_t) {
        return Err(Error::Dimension(format!("channel with {} columns stacked with {n_t}-column channels", bad.ncols())));
    }
    let rows: usize = blocks.iter().map(|h| h.nrows()).sum();
    let mut out = CMat::zeros(rows, n_t);
    let mut r = 0;
    for h in blocks {
        out.view_mut((r, 0), (h.nrows(), n_t)).copy_from(*h);
        r += h.nrows();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdPrecoder {
    /// `N_t × N_r`, orthonormal columns in the null space of the stacked channel.
    pub w: CMat,
    /// `Uᴴ` of the equivalent channel.
    pub decoder: CMat,
    /// Descending singular values of the equivalent channel.
    pub sigma: DVector<f64>,
}

impl BdPrecoder {
    pub fn n_r(&self) -> usize {
        self.sigma.len()
    }

    pub fn lambda(&self) -> CMat {
        CMat::from_diagonal(&self.sigma.map(|s| c(s, 0.0)))
    }
}

/// Singular values (descending) and the full set of right singular vectors as columns.
fn full_right_svd(m: &CMat) -> (Vec<f64>, CMat) {
    let (rows, cols) = m.shape();
    let mut padded = CMat::zeros(rows.max(cols), cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = SVD::new(padded, false, true);
    let v = svd.v_t.expect("requested V").adjoint();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut sorted = CMat::zeros(cols, cols);
    for (dst, &src) in order.iter().enumerate() {
        sorted.set_column(dst, &v.column(src));
    }
    (values, sorted)
}

/// Orthonormal basis of the null space of `m`.
pub fn null_space(m: &CMat) -> CMat {
    let n_t = m.ncols();
    if m.nrows() == 0 {
        return CMat::identity(n_t, n_t);
    }
    let (values, v) = full_right_svd(m);
    let cutoff = NULL_SPACE_RTOL * values.first().copied().unwrap_or(0.0);
    let rank = values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    v.columns(rank, n_t - rank).into_owned()
}

/// Rotates each column so its largest-magnitude entry is real and positive,
/// returning the applied phases.
fn fix_column_phases(m: &mut CMat) -> Vec<C64> {
    let mut phases = Vec::with_capacity(m.ncols());
    for mut col in m.column_iter_mut() {
        let pivot = col.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())).unwrap_or(c(1.0, 0.0));
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { c(1.0, 0.0) };
        col *= phase;
        phases.push(phase);
    }
    phases
}

/// Two-stage SVD precoder: null space of `h_tilde`, then the dominant
/// right singular vectors of the equivalent channel `h_own · Ṽ⁽⁰⁾`.
pub fn bd_precoder(h_tilde: &CMat, h_own: &CMat) -> Result<BdPrecoder> {
    let n_t = h_own.ncols();
    let n_r = h_own.nrows();
    if h_tilde.nrows() > 0 && h_tilde.ncols() != n_t {
        return Err(Error::Dimension(format!(
            "stacked channel has {} columns, own channel has {n_t}",
            h_tilde.ncols()
        )));
    }
    if n_r == 0 || n_t == 0 {
        return Err(Error::Dimension("own channel is empty".into()));
    }
    let v0 = null_space(h_tilde);
    let null_dim = v0.ncols();
    if null_dim < n_r {
        let rank = n_t - null_dim;
        return Err(Error::BdInfeasible { required_nt: rank + n_r, nt: n_t });
    }
    let h_eq = h_own * &v0;
    let (_, v_eq) = full_right_svd(&h_eq);
    let mut w = &v0 * v_eq.columns(0, n_r);
    fix_column_phases(&mut w);
    // With W fixed, Uᴴ H W is diagonal with the singular values on the diagonal.
    let hw = h_own * &w;
    let mut sigma = DVector::zeros(n_r);
    let mut u = CMat::zeros(n_r, n_r);
    for k in 0..n_r {
        let col = hw.column(k);
        let s = col.norm();
        sigma[k] = s;
        if s > 0.0 {
            u.set_column(k, &(col / c(s, 0.0)));
        }
    }
    if sigma.iter().any(|&s| s == 0.0) {
        // Rank-deficient equivalent channel: complete U to a unitary basis.
        let filled: Vec<usize> = (0..n_r).filter(|&k| sigma[k] > 0.0).collect();
        let basis = null_space(&u.select_columns(&filled).adjoint());
        for (next, k) in (0..n_r).filter(|&k| sigma[k] == 0.0).enumerate() {
            u.set_column(k, &basis.column(next));
        }
    }
    Ok(BdPrecoder { w, decoder: u.adjoint(), sigma })
}

fn check_psd(q: &CMat, tol: f64) -> Result<()> {
    if !is_hermitian(q, 1e-9) {
        return Err(validation("covariance is not Hermitian"));
    }
    let scale = frobenius(q).max(1.0);
    let min = min_eigenvalue(q);
    if min < -tol * scale {
        return Err(validation(format!("covariance has negative eigenvalue {min}")));
    }
    Ok(())
}

/// `log₂ det(I + (snr / n_st_star) Λ Q Λᴴ)` in bits/s/Hz.
pub fn capacity_term(sigma: &DVector<f64>, q: &CMat, snr: f64, n_st_star: usize) -> Result<f64> {
    let n = sigma.len();
    if q.shape() != (n, n) {
        return Err(Error::Dimension(format!("covariance is {}x{}, expected {n}x{n}", q.nrows(), q.ncols())));
    }
    if !(snr >= 0.0) || n_st_star == 0 {
        return Err(domain("snr must be non-negative and n_st_star positive"));
    }
    check_psd(q, 1e-9)?;
    let gain = snr / n_st_star as f64;
    let a = CMat::from_fn(n, n, |i, j| q[(i, j)] * (sigma[i] * sigma[j] * gain));
    let m = CMat::identity(n, n) + a;
    let ln_det = ln_det_pd(&m).ok_or_else(|| validation("I + A is not positive definite"))?;
    Ok((ln_det / std::f64::consts::LN_2).max(0.0))
}
