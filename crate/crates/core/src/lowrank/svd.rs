//! Singular values for rank decisions.
//!
//! Kernel matrices between particle clouds usually have ε-rank far below their
//! size. [`deflated_singular_values`] runs column-pivoted Householder QR until
//! the trailing block's Frobenius norm drops below `rel_tol·‖A‖_F` and then
//! takes the singular values of the small upper-trapezoidal factor. The
//! discarded block perturbs every singular value by at most its norm, which is
//! far below the thresholds used for ranks. [`full_singular_values`] is the
//! reference route.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use faer::{c64, Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + Debug
    + PartialEq
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    const COMPLEX: bool;
    fn from_re(x: f64) -> Self;
    fn re(self) -> f64;
    fn abs2(self) -> f64;
    fn conj(self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn to_c64(self) -> Complex64;
    fn is_finite(self) -> bool;
    fn faer_singular_values(a: MatRef<'_, Self>) -> Result<Vec<f64>>;
    /// Thin SVD as `(U·diag(s), s, conj(V))`, so that `A = Us·Vcᵀ`.
    fn faer_scaled_svd(a: MatRef<'_, Self>) -> Result<(Mat<Self>, Vec<f64>, Mat<Self>)>;

    #[inline]
    fn abs(self) -> f64 {
        self.abs2().sqrt()
    }
}

fn svd_error(e: impl Debug) -> Error {
    Error::LinAlg(format!("SVD did not converge: {e:?}"))
}

impl Scalar for f64 {
    const COMPLEX: bool = false;

    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn abs2(self) -> f64 {
        self * self
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }

    fn faer_singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
        a.singular_values().map_err(svd_error)
    }

    fn faer_scaled_svd(a: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
        let svd = a.thin_svd().map_err(svd_error)?;
        let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
        let u = Mat::from_fn(a.nrows(), s.len(), |i, k| svd.U()[(i, k)] * s[k]);
        Ok((u, s, svd.V().to_owned()))
    }
}

impl Scalar for Complex64 {
    const COMPLEX: bool = true;

    #[inline]
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        self
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn faer_singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
        a.singular_values().map_err(svd_error)
    }

    fn faer_scaled_svd(a: MatRef<'_, c64>) -> Result<(Mat<c64>, Vec<f64>, Mat<c64>)> {
        let svd = a.thin_svd().map_err(svd_error)?;
        let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
        let u = Mat::from_fn(a.nrows(), s.len(), |i, k| svd.U()[(i, k)] * s[k]);
        let v = Mat::from_fn(a.ncols(), s.len(), |j, k| svd.V()[(j, k)].conj());
        Ok((u, s, v))
    }
}

/// Singular values of a column-major `m×n` matrix by a full SVD.
pub fn full_singular_values<T: Scalar>(m: usize, n: usize, a: &[T]) -> Result<Vec<f64>> {
    if m == 0 || n == 0 {
        return Ok(Vec::new());
    }
    T::faer_singular_values(MatRef::from_column_major_slice(a, m, n))
}

/// Outcome of a deflated singular value computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Deflated {
    /// Leading singular values, descending.
    pub values: Vec<f64>,
    /// Householder steps taken.
    pub steps: usize,
    /// Frobenius norm of the discarded trailing block.
    pub tail: f64,
    /// Whether the full SVD was used because the rank was too high.
    pub fell_back: bool,
}

#[inline]
fn dot_conj<T: Scalar>(v: &[T], c: &[T]) -> T {
    let mut acc = [T::default(); 8];
    let mut vc = v.chunks_exact(8);
    let mut cc = c.chunks_exact(8);
    for (a, b) in (&mut vc).zip(&mut cc) {
        for l in 0..8 {
            acc[l] += a[l].conj() * b[l];
        }
    }
    let mut s = T::default();
    for (a, b) in vc.remainder().iter().zip(cc.remainder()) {
        s += a.conj() * *b;
    }
    acc.iter().fold(s, |x, &y| x + y)
}

/// `c -= w·v`, returning the squared norm of the updated `c`.
#[inline]
fn axpy_norm<T: Scalar>(c: &mut [T], v: &[T], w: T) -> f64 {
    let mut acc = [0.0f64; 8];
    let mut cc = c.chunks_exact_mut(8);
    let mut vc = v.chunks_exact(8);
    for (a, b) in (&mut cc).zip(&mut vc) {
        for l in 0..8 {
            a[l] -= w * b[l];
            acc[l] += a[l].abs2();
        }
    }
    let mut s = 0.0;
    for (a, b) in cc.into_remainder().iter_mut().zip(vc.remainder()) {
        *a -= w * *b;
        s += a.abs2();
    }
    s + acc.iter().sum::<f64>()
}

/// Column-pivoted QR deflation followed by an SVD of the retained rows.
///
/// `a` is column-major `m×n` and is overwritten. When more than `max_steps`
/// Householder steps would be needed, the full SVD of the matrix is taken
/// instead.
pub fn deflated_singular_values<T: Scalar>(
    m: usize,
    n: usize,
    a: &mut [T],
    rel_tol: f64,
    max_steps: usize,
) -> Result<Deflated> {
    let kmax = m.min(n);
    if kmax == 0 {
        return Ok(Deflated { values: Vec::new(), steps: 0, tail: 0.0, fell_back: false });
    }
    let mut norms: Vec<f64> = (0..n).map(|j| a[j * m..(j + 1) * m].iter().map(|v| v.abs2()).sum()).collect();
    let total: f64 = norms.iter().sum();
    let tol2 = rel_tol * rel_tol * total;
    let mut v = vec![T::default(); m];
    let mut k = 0;
    let mut rest = total;
    while k < kmax {
        rest = norms[k..].iter().sum();
        if rest <= tol2 {
            break;
        }
        if k >= max_steps {
            let values = T::faer_singular_values(MatRef::from_column_major_slice(a, m, n))?;
            return Ok(Deflated { values, steps: k, tail: 0.0, fell_back: true });
        }
        let p = k + norms[k..]
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
            .0;
        if p != k {
            norms.swap(k, p);
            for i in 0..m {
                a.swap(k * m + i, p * m + i);
            }
        }
        let len = m - k;
        let (head, tail_cols) = a.split_at_mut((k + 1) * m);
        let col = &mut head[k * m + k..k * m + m];
        let alpha = col[0];
        let xnorm2: f64 = col[1..].iter().map(|x| x.abs2()).sum();
        let tau_conj = if xnorm2 == 0.0 && alpha.conj() == alpha {
            None
        } else {
            let norm = (alpha.abs2() + xnorm2).sqrt();
            let beta = if alpha.re() >= 0.0 { -norm } else { norm };
            let scale = recip(alpha - T::from_re(beta));
            v[0] = T::from_re(1.0);
            for i in 1..len {
                v[i] = col[i] * scale;
            }
            let tau = (T::from_re(beta) - alpha).scale(1.0 / beta);
            col[0] = T::from_re(beta);
            col[1..].iter_mut().for_each(|x| *x = T::default());
            Some(tau.conj())
        };
        for (jj, c) in tail_cols.chunks_exact_mut(m).enumerate() {
            let c = &mut c[k..];
            match tau_conj {
                Some(tc) => {
                    let w = tc * dot_conj(&v[..len], c);
                    c[0] -= w;
                    norms[k + 1 + jj] = axpy_norm(&mut c[1..], &v[1..len], w);
                }
                None => norms[k + 1 + jj] = c[1..].iter().map(|x| x.abs2()).sum(),
            }
        }
        norms[k] = 0.0;
        k += 1;
    }
    if k == kmax {
        rest = 0.0;
    }
    let r = Mat::<T>::from_fn(k, n, |i, j| if j >= i { a[j * m + i] } else { T::default() });
    let values = if k == 0 { Vec::new() } else { T::faer_singular_values(r.as_ref())? };
    Ok(Deflated { values, steps: k, tail: rest.sqrt(), fell_back: false })
}

#[inline]
fn recip<T: Scalar>(z: T) -> T {
    // 1/z = conj(z)/|z|²
    z.conj().scale(1.0 / z.abs2())
}
