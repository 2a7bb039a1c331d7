//! Dense complex eigensolver: diagonal balancing, Householder reduction to
//! upper Hessenberg form, then single-shift QR iteration with Wilkinson shifts
//! to complex Schur form. Eigenvectors come from back substitution on the
//! triangular factor.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::matrix::CMatrix;
use crate::{Error, Result};

pub const MAX_DIM: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigenvalues of a square matrix, ordered by real part then imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Largest imaginary part (signed).
    pub max_imag: f64,
}

impl Spectrum {
    fn from_values(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(cmp_complex);
        let max_imag = eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        Self { eigenvalues, max_imag }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Eigenpairs; `vectors` holds unit 2-norm right eigenvectors as columns in
/// the same order as `values`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub vectors: CMatrix,
}

pub(crate) fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn eigenvalues_dense(m: &CMatrix) -> Result<Spectrum> {
    check_input(m)?;
    let (balanced, _) = balance(m);
    let schur = schur(balanced, false)?;
    let n = m.rows();
    Ok(Spectrum::from_values((0..n).map(|i| schur.t[(i, i)]).collect()))
}

pub fn eigen_decomposition(m: &CMatrix) -> Result<EigenDecomposition> {
    check_input(m)?;
    let n = m.rows();
    let (balanced, scaling) = balance(m);
    let schur = schur(balanced, true)?;
    let t = &schur.t;
    let z = schur.z.as_ref().expect("requested Schur vectors");
    let small = f64::EPSILON * t.norm_frobenius().max(f64::MIN_POSITIVE);

    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * x[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            x[i] = -s / d;
        }
        let mut v = z.mul_vec(&x);
        for (vi, di) in v.iter_mut().zip(&scaling) {
            *vi *= *di;
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        pairs.push((lambda, v));
    }
    pairs.sort_by(|a, b| cmp_complex(&a.0, &b.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(EigenDecomposition { values, vectors })
}

fn check_input(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::SizeMismatch {
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    if m.rows() > MAX_DIM {
        return Err(Error::MatrixTooLarge(m.rows()));
    }
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidModel("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Parlett-Reinsch balancing with powers of two. Returns `D^{-1} M D` and the
/// diagonal of `D`.
fn balance(m: &CMatrix) -> (CMatrix, Vec<f64>) {
    let n = m.rows();
    let mut a = m.clone();
    let mut d = vec![1.0; n];
    let radix = 2.0f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    (a, d)
}

struct Schur {
    t: CMatrix,
    z: Option<CMatrix>,
}

fn schur(mut h: CMatrix, want_z: bool) -> Result<Schur> {
    let n = h.rows();
    let mut z = want_z.then(|| CMatrix::identity(n));
    hessenberg(&mut h, z.as_mut());
    if n <= 1 {
        return Ok(Schur { t: h, z });
    }

    let eps = f64::EPSILON;
    let norm = h.norm_frobenius();
    let max_iter = 100 * n;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        if total >= max_iter {
            return Err(Error::NoConvergence { n, iterations: total });
        }
        total += 1;
        its += 1;

        let mu = if its.is_multiple_of(10) {
            // Exceptional shift to break cycles.
            let e = h[(hi, hi - 1)].norm()
                + if hi >= 2 { h[(hi - 1, hi - 2)].norm() } else { 0.0 };
            h[(hi, hi)] + Complex64::new(0.75 * e, 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        qr_sweep(&mut h, z.as_mut(), l, hi, mu);
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok(Schur { t: h, z })
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) * 0.5;
    let disc = (((a - d) * 0.5).powu(2) + b * c).sqrt();
    let mu1 = half_tr + disc;
    let mu2 = half_tr - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// One explicitly shifted QR step `H - mu I = QR, H <- RQ + mu I` on the
/// active block `l..=hi`, applied as a similarity to the whole matrix.
fn qr_sweep(h: &mut CMatrix, mut z: Option<&mut CMatrix>, l: usize, hi: usize, mu: Complex64) {
    let n = h.rows();
    for i in l..=hi {
        h[(i, i)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - l);
    for j in l..hi {
        let (c, s) = givens(h[(j, j)], h[(j + 1, j)]);
        for col in j..n {
            let x = h[(j, col)];
            let y = h[(j + 1, col)];
            h[(j, col)] = x * c + s * y;
            h[(j + 1, col)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (offset, &(c, s)) in rots.iter().enumerate() {
        let j = l + offset;
        for row in 0..=(j + 1).min(hi) {
            let x = h[(row, j)];
            let y = h[(row, j + 1)];
            h[(row, j)] = x * c + s.conj() * y;
            h[(row, j + 1)] = -s * x + y * c;
        }
        if let Some(z) = z.as_deref_mut() {
            for row in 0..n {
                let x = z[(row, j)];
                let y = z[(row, j + 1)];
                z[(row, j)] = x * c + s.conj() * y;
                z[(row, j + 1)] = -s * x + y * c;
            }
        }
    }
    for i in l..=hi {
        h[(i, i)] += mu;
    }
}

/// `(c, s)` with real `c` such that `[[c, s], [-conj(s), c]] [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

fn hessenberg(h: &mut CMatrix, mut z: Option<&mut CMatrix>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for j in 0..n - 2 {
        let col_norm = (j + 1..n).map(|i| h[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if col_norm == 0.0 {
            continue;
        }
        let x0 = h[(j + 1, j)];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * col_norm;
        for i in 0..n {
            v[i] = if i > j { h[(i, j)] } else { ZERO };
        }
        v[j + 1] -= alpha;
        let vnorm2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let f = 2.0 / vnorm2;
        for col in j..n {
            let s: Complex64 = (j + 1..n).map(|i| v[i].conj() * h[(i, col)]).sum();
            for i in j + 1..n {
                h[(i, col)] -= v[i] * s * f;
            }
        }
        for row in 0..n {
            let s: Complex64 = (j + 1..n).map(|i| h[(row, i)] * v[i]).sum();
            for i in j + 1..n {
                h[(row, i)] -= s * f * v[i].conj();
            }
        }
        if let Some(z) = z.as_deref_mut() {
            for row in 0..n {
                let s: Complex64 = (j + 1..n).map(|i| z[(row, i)] * v[i]).sum();
                for i in j + 1..n {
                    z[(row, i)] -= s * f * v[i].conj();
                }
            }
        }
        for i in j + 2..n {
            h[(i, j)] = ZERO;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn residual(m: &CMatrix, d: &EigenDecomposition) -> f64 {
        let n = m.rows();
        (0..n)
            .map(|j| {
                let v = d.vectors.column(j);
                let mv = m.mul_vec(&v);
                mv.iter().zip(&v).map(|(a, b)| (a - d.values[j] * b).norm_sqr()).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn diagonal() {
        let m = CMatrix::from_diagonal(&[c(1.0, 0.0), c(0.0, 2.0)]);
        let s = eigenvalues_dense(&m).unwrap();
        assert_eq!(s.eigenvalues, vec![c(0.0, 2.0), c(1.0, 0.0)]);
        assert_eq!(s.max_imag, 2.0);
    }

    #[test]
    fn rotation_generator() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let s = eigenvalues_dense(&m).unwrap();
        assert!((s.eigenvalues[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn stable_kdv_permutation_block() {
        let p = crate::construction::stable_permutation(3, 1).unwrap();
        let s = eigenvalues_dense(&p.to_cmatrix()).unwrap();
        assert!((s.eigenvalues[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_of_known_roots() {
        // (z-1)(z-2)(z-3)(z+i)
        let roots = [c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(0.0, -1.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (i, a) in coeffs.iter().enumerate() {
                next[i] += *a;
                next[i + 1] -= *a * r;
            }
            coeffs = next;
        }
        let n = roots.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -coeffs[j + 1]
            } else if i == j + 1 {
                ONE
            } else {
                ZERO
            }
        });
        let s = eigenvalues_dense(&m).unwrap();
        let mut expected = roots.to_vec();
        expected.sort_by(cmp_complex);
        for (a, b) in s.eigenvalues.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn too_large_is_rejected() {
        let m = CMatrix::identity(65);
        assert!(matches!(eigenvalues_dense(&m), Err(Error::MatrixTooLarge(65))));
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(eigenvalues_dense(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn defective_jordan_block_converges() {
        let m = CMatrix::from_real_rows(&[vec![2.0, 1.0, 0.0], vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 2.0]]);
        let s = eigenvalues_dense(&m).unwrap();
        assert!(s.eigenvalues.iter().all(|z| (z - c(2.0, 0.0)).norm() < 1e-12));
    }

    fn matrix_strategy() -> impl Strategy<Value = CMatrix> {
        (1usize..12).prop_flat_map(|n| {
            proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), n * n)
                .prop_map(move |v| CMatrix::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
        })
    }

    proptest! {
        #[test]
        fn eigenpairs_have_small_residual(m in matrix_strategy()) {
            let d = eigen_decomposition(&m).unwrap();
            prop_assert_eq!(d.values.len(), m.rows());
            let r = residual(&m, &d);
            prop_assert!(r <= 1e-9 * m.norm_frobenius().max(1.0), "residual {}", r);
        }

        #[test]
        fn eigenvalues_match_nalgebra(m in matrix_strategy()) {
            let n = m.rows();
            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
            let mut theirs: Vec<Complex64> = na.eigenvalues().expect("complex Schur form is triangular").iter().cloned().collect();
            theirs.sort_by(cmp_complex);
            let ours = eigenvalues_dense(&m).unwrap().eigenvalues;
            // Match as multisets by greedy nearest neighbour.
            let mut used = vec![false; n];
            for z in &ours {
                let (best, dist) = theirs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !used[*i])
                    .map(|(i, w)| (i, (z - w).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                used[best] = true;
                prop_assert!(dist <= 1e-8 * m.norm_frobenius().max(1.0), "{} vs {}", z, theirs[best]);
            }
        }

        #[test]
        fn trace_is_sum_of_eigenvalues(m in matrix_strategy()) {
            let s = eigenvalues_dense(&m).unwrap();
            let tr: Complex64 = (0..m.rows()).map(|i| m[(i, i)]).sum();
            let sum: Complex64 = s.eigenvalues.iter().sum();
            prop_assert!((tr - sum).norm() <= 1e-10 * m.norm_frobenius().max(1.0));
        }
    }
}
