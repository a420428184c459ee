//! Split real/imaginary complex vectors and matrices, plus the small set of
//! kernels the layer needs: Hermitian inner products, norms, global phase
//! rotation and the Tikhonov-regularized rank-1 projector.
//!
//! Storage is structure-of-arrays (`re`, `im`) throughout. Slice-level
//! kernels in [`kernels`] operate on row views so the layer never has to
//! allocate a `ComplexVector` per arc.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{GescError, Result};

pub type C64 = num_complex::Complex<f64>;

/// A complex vector `re + i·im`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexVector {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexVector {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(GescError::Dimension {
                what: "imaginary part",
                expected: re.len(),
                found: im.len(),
            });
        }
        if re.iter().chain(im.iter()).any(|v| !v.is_finite()) {
            return Err(GescError::NonFinite { stage: "complex vector" });
        }
        Ok(Self { re, im })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            re: vec![0.0; dim],
            im: vec![0.0; dim],
        }
    }

    pub fn from_complex(values: &[C64]) -> Self {
        Self {
            re: values.iter().map(|z| z.re).collect(),
            im: values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_real(re: &[f64]) -> Self {
        Self {
            re: re.to_vec(),
            im: vec![0.0; re.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn get(&self, k: usize) -> C64 {
        C64::new(self.re[k], self.im[k])
    }

    pub fn to_complex(&self) -> Vec<C64> {
        (0..self.len()).map(|k| self.get(k)).collect()
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut out = Self::zeros(self.len());
        for k in 0..self.len() {
            let z = a * self.get(k);
            out.re[k] = z.re;
            out.im[k] = z.im;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self {
            re: self.re.iter().zip(&other.re).map(|(a, b)| a - b).collect(),
            im: self.im.iter().zip(&other.im).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self {
            re: self.re.iter().zip(&other.re).map(|(a, b)| a + b).collect(),
            im: self.im.iter().zip(&other.im).map(|(a, b)| a + b).collect(),
        })
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (0..self.len().min(other.len()))
            .map(|k| (self.get(k) - other.get(k)).norm())
            .fold(0.0, f64::max)
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            re: vec![0.0; rows * cols],
            im: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.re[k * n + k] = 1.0;
        }
        m
    }

    pub fn from_parts(rows: usize, cols: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != rows * cols {
            return Err(GescError::Dimension {
                what: "matrix real part",
                expected: rows * cols,
                found: re.len(),
            });
        }
        if im.len() != rows * cols {
            return Err(GescError::Dimension {
                what: "matrix imaginary part",
                expected: rows * cols,
                found: im.len(),
            });
        }
        Ok(Self { rows, cols, re, im })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    pub fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let k = r * self.cols + c;
        C64::new(self.re[k], self.im[k])
    }

    pub fn set(&mut self, r: usize, c: usize, z: C64) {
        let k = r * self.cols + c;
        self.re[k] = z.re;
        self.im[k] = z.im;
    }

    pub fn row(&self, r: usize) -> (&[f64], &[f64]) {
        let s = r * self.cols..(r + 1) * self.cols;
        (&self.re[s.clone()], &self.im[s])
    }

    pub fn row_mut(&mut self, r: usize) -> (&mut [f64], &mut [f64]) {
        let s = r * self.cols..(r + 1) * self.cols;
        (&mut self.re[s.clone()], &mut self.im[s])
    }

    pub fn row_vector(&self, r: usize) -> ComplexVector {
        let (re, im) = self.row(r);
        ComplexVector {
            re: re.to_vec(),
            im: im.to_vec(),
        }
    }

    pub fn set_row(&mut self, r: usize, v: &ComplexVector) {
        let (re, im) = self.row_mut(r);
        re.copy_from_slice(&v.re);
        im.copy_from_slice(&v.im);
    }

    pub fn matvec(&self, x: &ComplexVector) -> Result<ComplexVector> {
        check_len(self.cols, x.len())?;
        let mut out = ComplexVector::zeros(self.rows);
        kernels::matvec(self, &x.re, &x.im, &mut out.re, &mut out.im);
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.re.iter().chain(self.im.iter()).map(|v| v * v).sum())
    }

    /// Largest componentwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.re.len().min(other.re.len()) {
            let dr = self.re[k] - other.re[k];
            let di = self.im[k] - other.im[k];
            worst = worst.max(libm::sqrt(dr * dr + di * di));
        }
        worst
    }

    /// `‖self − other‖_F`.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.re.len().min(other.re.len()) {
            let dr = self.re[k] - other.re[k];
            let di = self.im[k] - other.im[k];
            acc += dr * dr + di * di;
        }
        libm::sqrt(acc)
    }
}

/// Tikhonov-regularized rank-1 projector `h h^H / (‖h‖² + ε)`, kept in
/// factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorHandle {
    anchor: ComplexVector,
    epsilon: f64,
    cached_sqnorm: f64,
}

impl ProjectorHandle {
    pub fn new(anchor: ComplexVector, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(GescError::Parameter("projector epsilon must be positive"));
        }
        let cached_sqnorm = kernels::sqnorm(&anchor.re, &anchor.im);
        Ok(Self {
            anchor,
            epsilon,
            cached_sqnorm,
        })
    }

    pub fn anchor(&self) -> &ComplexVector {
        &self.anchor
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sqnorm(&self) -> f64 {
        self.cached_sqnorm
    }

    /// The single nonzero eigenvalue `‖h‖²/(‖h‖²+ε)`.
    pub fn eigenvalue(&self) -> f64 {
        self.cached_sqnorm / (self.cached_sqnorm + self.epsilon)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(GescError::Dimension {
            what: "complex vector length",
            expected,
            found,
        });
    }
    Ok(())
}

/// `⟨u, v⟩ = Σ conj(u_k) v_k`.
pub fn inner_product(u: &ComplexVector, v: &ComplexVector) -> Result<C64> {
    check_len(u.len(), v.len())?;
    Ok(kernels::dot(&u.re, &u.im, &v.re, &v.im))
}

pub fn norm2(u: &ComplexVector) -> f64 {
    libm::sqrt(kernels::sqnorm(&u.re, &u.im))
}

/// Multiplies every entry by `e^{iψ}`.
pub fn phase_rotate(u: &ComplexVector, psi: f64) -> ComplexVector {
    u.scale(C64::from_polar(1.0, psi))
}

/// `Π_ε(anchor)·x` in O(d).
pub fn project_parallel(p: &ProjectorHandle, x: &ComplexVector) -> Result<ComplexVector> {
    check_len(p.anchor.len(), x.len())?;
    let beta = kernels::dot(&p.anchor.re, &p.anchor.im, &x.re, &x.im) / (p.cached_sqnorm + p.epsilon);
    Ok(p.anchor.scale(beta))
}

/// `x − η·Π_ε(anchor)·x`.
pub fn sic_apply(p: &ProjectorHandle, eta: f64, x: &ComplexVector) -> Result<ComplexVector> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(GescError::Parameter("eta_sic must lie in [0, 1]"));
    }
    let par = project_parallel(p, x)?;
    let mut out = x.clone();
    for k in 0..out.len() {
        out.re[k] -= eta * par.re[k];
        out.im[k] -= eta * par.im[k];
    }
    Ok(out)
}

/// Allocation-free kernels on split re/im slices.
pub mod kernels {
    use super::{ComplexMatrix, C64};

    #[inline]
    pub fn dot(ur: &[f64], ui: &[f64], vr: &[f64], vi: &[f64]) -> C64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..ur.len() {
            // conj(u)·v
            re += ur[k] * vr[k] + ui[k] * vi[k];
            im += ur[k] * vi[k] - ui[k] * vr[k];
        }
        C64::new(re, im)
    }

    #[inline]
    pub fn sqnorm(ur: &[f64], ui: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..ur.len() {
            acc += ur[k] * ur[k] + ui[k] * ui[k];
        }
        acc
    }

    #[inline]
    pub fn norm(ur: &[f64], ui: &[f64]) -> f64 {
        libm::sqrt(sqnorm(ur, ui))
    }

    /// `out += a·x`.
    #[inline]
    pub fn axpy(a: C64, xr: &[f64], xi: &[f64], or: &mut [f64], oi: &mut [f64]) {
        for k in 0..xr.len() {
            or[k] += a.re * xr[k] - a.im * xi[k];
            oi[k] += a.re * xi[k] + a.im * xr[k];
        }
    }

    /// `out = a·x`.
    #[inline]
    pub fn scale_into(a: C64, xr: &[f64], xi: &[f64], or: &mut [f64], oi: &mut [f64]) {
        for k in 0..xr.len() {
            or[k] = a.re * xr[k] - a.im * xi[k];
            oi[k] = a.re * xi[k] + a.im * xr[k];
        }
    }

    /// `out = A·x`.
    pub fn matvec(a: &ComplexMatrix, xr: &[f64], xi: &[f64], or: &mut [f64], oi: &mut [f64]) {
        let cols = a.cols();
        let (are, aim) = (a.re(), a.im());
        for r in 0..a.rows() {
            let row_re = &are[r * cols..(r + 1) * cols];
            let row_im = &aim[r * cols..(r + 1) * cols];
            let mut sr = 0.0;
            let mut si = 0.0;
            for c in 0..cols {
                sr += row_re[c] * xr[c] - row_im[c] * xi[c];
                si += row_re[c] * xi[c] + row_im[c] * xr[c];
            }
            or[r] = sr;
            oi[r] = si;
        }
    }

    /// `out += A^H·g`.
    pub fn matvec_adjoint_acc(a: &ComplexMatrix, gr: &[f64], gi: &[f64], or: &mut [f64], oi: &mut [f64]) {
        let cols = a.cols();
        let (are, aim) = (a.re(), a.im());
        for r in 0..a.rows() {
            let row_re = &are[r * cols..(r + 1) * cols];
            let row_im = &aim[r * cols..(r + 1) * cols];
            let (g_re, g_im) = (gr[r], gi[r]);
            for c in 0..cols {
                // conj(A_rc)·g_r
                or[c] += row_re[c] * g_re + row_im[c] * g_im;
                oi[c] += row_re[c] * g_im - row_im[c] * g_re;
            }
        }
    }

    /// `G_A += g·x^H`, the gradient of `A·x` with respect to `A`.
    pub fn outer_acc(ga: &mut ComplexMatrix, gr: &[f64], gi: &[f64], xr: &[f64], xi: &[f64]) {
        let cols = ga.cols();
        let rows = ga.rows();
        let (ar, ai) = ga.parts_mut();
        for r in 0..rows {
            let (g_re, g_im) = (gr[r], gi[r]);
            let row_re = &mut ar[r * cols..(r + 1) * cols];
            let row_im = &mut ai[r * cols..(r + 1) * cols];
            for c in 0..cols {
                row_re[c] += g_re * xr[c] + g_im * xi[c];
                row_im[c] += g_im * xr[c] - g_re * xi[c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[(f64, f64)]) -> ComplexVector {
        ComplexVector::new(v.iter().map(|z| z.0).collect(), v.iter().map(|z| z.1).collect()).unwrap()
    }

    // brute-force componentwise oracle for the inner product
    fn inner_oracle(u: &[(f64, f64)], v: &[(f64, f64)]) -> (f64, f64) {
        let mut acc = (0.0, 0.0);
        for (a, b) in u.iter().zip(v) {
            let (ar, ai) = (a.0, -a.1);
            acc.0 += ar * b.0 - ai * b.1;
            acc.1 += ar * b.1 + ai * b.0;
        }
        acc
    }

    #[test]
    fn inner_product_examples() {
        let one = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        assert_eq!(inner_product(&one, &one).unwrap(), C64::new(1.0, 0.0));
        let i = cv(&[(0.0, 1.0)]);
        assert_eq!(inner_product(&i, &i).unwrap(), C64::new(1.0, 0.0));
        let u = [(1.0, 2.0), (3.0, 0.0)];
        let v = [(2.0, 0.0), (0.0, 1.0)];
        let expected = inner_oracle(&u, &v);
        assert_eq!(expected, (2.0, -1.0));
        let got = inner_product(&cv(&u), &cv(&v)).unwrap();
        assert_eq!((got.re, got.im), expected);
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let err = inner_product(&ComplexVector::zeros(2), &ComplexVector::zeros(3)).unwrap_err();
        assert!(matches!(err, GescError::Dimension { .. }));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm2(&cv(&[(3.0, 4.0)])), 5.0);
        assert_eq!(norm2(&ComplexVector::zeros(7)), 0.0);
        assert!((norm2(&cv(&[(1.0, 1.0), (1.0, -1.0)])) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn phase_rotate_examples() {
        let u = cv(&[(1.0, 0.0)]);
        assert_eq!(phase_rotate(&u, 0.0), u);
        let r = phase_rotate(&u, core::f64::consts::FRAC_PI_2);
        assert!(r.max_abs_diff(&cv(&[(0.0, 1.0)])) < 1e-15);
        let w = cv(&[(0.3, -1.2), (2.0, 0.5)]);
        let back = phase_rotate(&phase_rotate(&w, 1.234), -1.234);
        assert!(back.max_abs_diff(&w) < 1e-12);
    }

    #[test]
    fn projector_examples() {
        let p = ProjectorHandle::new(cv(&[(2.0, 0.0), (0.0, 0.0)]), 1.0).unwrap();
        let out = project_parallel(&p, &cv(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        assert!(out.max_abs_diff(&cv(&[(0.8, 0.0), (0.0, 0.0)])) < 1e-15);

        let p = ProjectorHandle::new(cv(&[(1.0, 1.0), (0.0, 0.0)]), 1e-3).unwrap();
        let out = project_parallel(&p, &cv(&[(0.0, 0.0), (5.0, -2.0)])).unwrap();
        assert_eq!(norm2(&out), 0.0);

        let p = ProjectorHandle::new(ComplexVector::zeros(3), 1e-4).unwrap();
        let out = project_parallel(&p, &cv(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)])).unwrap();
        assert_eq!(norm2(&out), 0.0);
    }

    #[test]
    fn projector_rejects_bad_epsilon() {
        assert!(ProjectorHandle::new(ComplexVector::zeros(2), 0.0).is_err());
        assert!(ProjectorHandle::new(ComplexVector::zeros(2), -1.0).is_err());
    }

    // dense Π_ε oracle: build h h^H/(‖h‖²+ε) explicitly, then multiply.
    fn dense_sic_oracle(h: &[C64], eps: f64, eta: f64, x: &[C64]) -> Vec<C64> {
        let d = h.len();
        let denom: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>() + eps;
        let mut out = Vec::with_capacity(d);
        for r in 0..d {
            let mut acc = x[r];
            for c in 0..d {
                let pi_rc = h[r] * h[c].conj() / denom;
                acc -= eta * pi_rc * x[c];
            }
            out.push(acc);
        }
        out
    }

    #[test]
    fn sic_examples() {
        let anchor = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let x = cv(&[(3.0, 0.0), (4.0, 0.0)]);
        let p = ProjectorHandle::new(anchor.clone(), 1e-4).unwrap();
        assert_eq!(sic_apply(&p, 0.0, &x).unwrap(), x);

        let p12 = ProjectorHandle::new(anchor.clone(), 1e-12).unwrap();
        let out = sic_apply(&p12, 1.0, &x).unwrap();
        assert!(out.max_abs_diff(&cv(&[(0.0, 0.0), (4.0, 0.0)])) < 1e-11);

        let x2 = cv(&[(2.0, 0.0), (0.0, 0.0)]);
        let out = sic_apply(&p, 0.5, &x2).unwrap();
        let oracle = dense_sic_oracle(&anchor.to_complex(), 1e-4, 0.5, &x2.to_complex());
        assert!(out.max_abs_diff(&ComplexVector::from_complex(&oracle)) < 1e-14);
        // 2 − 0.5·2/(1 + 1e-4) = 1.000099990…
        assert!((out.get(0).re - (2.0 - 1.0 / (1.0 + 1e-4))).abs() < 1e-15);
        assert!((out.get(0).re - 1.0001).abs() < 1e-8);

        assert!(matches!(sic_apply(&p, 1.5, &x), Err(GescError::Parameter(_))));
        assert!(matches!(sic_apply(&p, -0.1, &x), Err(GescError::Parameter(_))));
    }

    #[test]
    fn matrix_kernels_agree_with_definition() {
        let a = ComplexMatrix::from_parts(2, 3, vec![1.0, 2.0, 0.0, -1.0, 0.5, 3.0], vec![0.0, 1.0, -2.0, 0.5, 0.0, 1.0]).unwrap();
        let x = cv(&[(1.0, 1.0), (0.0, -1.0), (2.0, 0.5)]);
        let y = a.matvec(&x).unwrap();
        for r in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..3 {
                acc += a.get(r, c) * x.get(c);
            }
            assert!((y.get(r) - acc).norm() < 1e-14);
        }
        // adjoint: ⟨A^H g, x⟩ = ⟨g, A x⟩
        let g = cv(&[(0.3, -0.7), (1.1, 0.2)]);
        let mut ahg = ComplexVector::zeros(3);
        let (r, i) = ahg.parts_mut();
        kernels::matvec_adjoint_acc(&a, g.re(), g.im(), r, i);
        let lhs = inner_product(&ahg, &x).unwrap();
        let rhs = inner_product(&g, &y).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }
}
