//! Matrix exponential by scaling and squaring with the [13/13] Padé
//! approximant (Higham, 2005).

use num_complex::Complex64;

use crate::matrix::CMatrix;
use crate::Result;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    assert!(a.is_square());
    let n = a.rows();
    let norm = a.norm_one();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale(Complex64::new(2f64.powi(-squarings), 0.0));

    let re = |x: f64| Complex64::new(x, 0.0);
    let b = &PADE13;
    let ident = CMatrix::identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |terms: &[(f64, &CMatrix)]| -> CMatrix {
        terms
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, (c, m)| &acc + &m.scale(re(*c)))
    };

    let u_inner = lin(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
    let u_outer = lin(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &ident)]);
    let u = &scaled * &(&(&a6 * &u_inner) + &u_outer);

    let v_inner = lin(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
    let v_outer = lin(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &ident)]);
    let v = &(&a6 * &v_inner) + &v_outer;

    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let d = [c(-1.0, 0.0), c(0.0, 3.0), c(2.0, -1.0)];
        let e = expm(&CMatrix::from_diagonal(&d)).unwrap();
        for (i, z) in d.iter().enumerate() {
            assert!((e[(i, i)] - z.exp()).norm() < 1e-13 * z.exp().norm().max(1.0));
        }
    }

    #[test]
    fn rotation() {
        let theta = 20.0;
        let a = CMatrix::from_real_rows(&[vec![0.0, -theta], vec![theta, 0.0]]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-12);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let a = CMatrix::from_real_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0]]);
        let e = expm(&a).unwrap();
        assert!((e[(0, 2)].re - 0.5).abs() < 1e-15);
        assert!((e[(0, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_taylor_series() {
        let a = CMatrix::from_fn(4, 4, |i, j| c(0.3 * (i as f64) - 0.2 * (j as f64), 0.1 * ((i * j) as f64)));
        let mut term = CMatrix::identity(4);
        let mut sum = CMatrix::identity(4);
        for k in 1..40 {
            term = (&term * &a).scale(c(1.0 / k as f64, 0.0));
            sum = &sum + &term;
        }
        let e = expm(&a).unwrap();
        assert!((&e - &sum).max_abs() < 1e-12);
    }
}
