//! Complex matrix helpers shared by the MIMO and beamforming modules.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| c(x, 0.0))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Re Tr(AB) without forming the product.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && frobenius(&(m - m.adjoint())) <= tol * frobenius(m).max(1.0)
}

/// Ascending eigenvalues and matching eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    let (values, _) = hermitian_eigen(m);
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-stacking vectorization.
pub fn vec_cols(m: &CMat) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

/// Real basis of the n x n Hermitian matrices: n diagonal units, then for each
/// i < j the symmetric real pair and the antisymmetric imaginary pair.
pub fn hermitian_basis(n: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = CMat::zeros(n, n);
        e[(i, i)] = c(1.0, 0.0);
        basis.push(e);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut re = CMat::zeros(n, n);
            re[(i, j)] = c(1.0, 0.0);
            re[(j, i)] = c(1.0, 0.0);
            basis.push(re);
            let mut im = CMat::zeros(n, n);
            im[(i, j)] = c(0.0, 1.0);
            im[(j, i)] = c(0.0, -1.0);
            basis.push(im);
        }
    }
    basis
}

/// Inverse of [`hermitian_basis`]: the coordinates of a Hermitian matrix.
pub fn hermitian_coords(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let mut x = Vec::with_capacity(n * n);
    for i in 0..n {
        x.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            x.push(z.re);
            x.push(z.im);
        }
    }
    x
}

pub fn hermitian_from_coords(x: &[f64], n: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    for (xi, b) in x.iter().zip(hermitian_basis(n)) {
        m += b.scale(*xi);
    }
    m
}

/// Lower Cholesky factor of the Hermitian part of `m`, or `None` unless it is
/// positive definite. Every pivot must be real and strictly positive.
pub fn cholesky_pd(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    if !m.is_square() {
        return None;
    }
    let a = hermitian_part(m);
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = c(ljj, 0.0);
        for i in (j + 1)..n {
            let mut z = a[(i, j)];
            for k in 0..j {
                z -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = z / ljj;
        }
    }
    Some(l)
}

/// Inverse of `L Lᴴ` from its lower Cholesky factor.
pub fn cholesky_inverse(l: &CMat) -> CMat {
    let n = l.nrows();
    let linv = l.solve_lower_triangular(&CMat::identity(n, n)).expect("non-zero pivots");
    linv.adjoint() * linv
}

/// Cholesky-based PD test returning ln det on success.
pub fn ln_det_pd(m: &CMat) -> Option<f64> {
    let l = cholesky_pd(m)?;
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Dense matrix as rows of `[re, im]` pairs in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixDoc {
    fn from(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixDoc { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<&MatrixDoc> for CMat {
    type Error = crate::Error;

    fn try_from(doc: &MatrixDoc) -> Result<Self> {
        if doc.data.len() != doc.rows * doc.cols {
            return Err(validation(format!(
                "matrix document holds {} entries, expected {}x{}",
                doc.data.len(),
                doc.rows,
                doc.cols
            )));
        }
        Ok(CMat::from_fn(doc.rows, doc.cols, |i, j| {
            let [re, im] = doc.data[i * doc.cols + j];
            c(re, im)
        }))
    }
}
