use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Serializable description of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub n: usize,
}

/// Equispaced periodic grid on `[x_left, x_right)` with FFT plans.
#[derive(Clone)]
pub struct PeriodicGrid {
    spec: GridSpec,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("spec", &self.spec).finish()
    }
}

impl PeriodicGrid {
    pub fn new(x_left: f64, x_right: f64, n: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite() && x_right > x_left) {
            return Err(Error::InvalidGrid(format!("need x_left < x_right, got [{x_left}, {x_right}]")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n must be a power of two >= 8, got {n}")));
        }
        let len = x_right - x_left;
        let dx = len / n as f64;
        let nodes = (0..n).map(|j| x_left + j as f64 * dx).collect();
        let wavenumbers = (0..n)
            .map(|j| {
                let j = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * std::f64::consts::PI * j / len
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            spec: GridSpec { x_left, x_right, n },
            nodes,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self> {
        Self::new(spec.x_left, spec.x_right, spec.n)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn x_left(&self) -> f64 {
        self.spec.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.spec.x_right
    }

    pub fn length(&self) -> f64 {
        self.spec.x_right - self.spec.x_left
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n() as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `2 pi j / L` in FFT order; the Nyquist entry carries `j = -n/2`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    pub fn nyquist(&self) -> usize {
        self.n() / 2
    }

    /// Zero at the Nyquist index, one elsewhere: the factor applied to
    /// odd-order derivative terms.
    pub fn odd_factor(&self, j: usize) -> f64 {
        if j == self.nyquist() {
            0.0
        } else {
            1.0
        }
    }

    /// `(ik)^order` with the Nyquist mode removed for odd orders.
    pub fn derivative_symbol(&self, j: usize, order: u32) -> Complex64 {
        if order % 2 == 1 && j == self.nyquist() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, self.wavenumbers[j]).powu(order)
    }

    /// Unnormalised forward transform.
    pub fn fft(&self, field: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(field.len(), self.n());
        let mut buf = field.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/n` factor.
    pub fn ifft(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.n());
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        let s = 1.0 / self.n() as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        buf
    }

    /// 2/3 rule: keeps modes with `|j| <= n/3`.
    pub fn dealias_keep(&self, j: usize) -> bool {
        let n = self.n();
        let jj = if j <= n / 2 { j } else { n - j };
        3 * jj <= n
    }

    pub fn dealias(&self, coeffs: &mut [Complex64]) {
        for (j, z) in coeffs.iter_mut().enumerate() {
            if !self.dealias_keep(j) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn derivative_hat(&self, coeffs: &[Complex64], order: u32) -> Vec<Complex64> {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, z)| z * self.derivative_symbol(j, order))
            .collect()
    }

    /// Same grid refined by `factor` (a power of two).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.x_left(), self.x_right(), self.n() * factor)
    }
}

/// `d^order field / dx^order` by multiplication with `(ik)^order`.
pub fn spectral_derivative(grid: &PeriodicGrid, field: &[Complex64], order: u32) -> Vec<Complex64> {
    grid.ifft(&grid.derivative_hat(&grid.fft(field), order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn real_field(grid: &PeriodicGrid, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        grid.nodes().iter().map(|&x| Complex64::new(f(x), 0.0)).collect()
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::new(0.0, 1.0, 12).is_err());
        assert!(PeriodicGrid::new(0.0, 1.0, 4).is_err());
        assert!(PeriodicGrid::new(1.0, 0.0, 16).is_err());
        let g = PeriodicGrid::new(0.0, 2.0 * PI, 16).unwrap();
        assert_eq!(g.nodes().len(), 16);
        assert_eq!(g.wavenumbers()[1], 1.0);
        assert_eq!(g.wavenumbers()[15], -1.0);
        assert_eq!(g.wavenumbers()[8], -8.0);
        assert!(g.nodes().iter().all(|&x| x < 2.0 * PI));
    }

    #[test]
    fn derivative_of_sine() {
        let g = PeriodicGrid::new(0.0, 2.0 * PI, 32).unwrap();
        let d = spectral_derivative(&g, &real_field(&g, f64::sin), 1);
        for (z, x) in d.iter().zip(g.nodes()) {
            assert!((z.re - x.cos()).abs() < 1e-10 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = PeriodicGrid::new(-1.0, 3.0, 16).unwrap();
        for order in 1..5 {
            let d = spectral_derivative(&g, &real_field(&g, |_| 2.5), order);
            assert!(d.iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn fourth_derivative_of_gaussian() {
        // n = 256 leaves an aliasing error near 4e-3 for this width; 512 resolves it.
        let g = PeriodicGrid::new(-20.0 * PI, 20.0 * PI, 512).unwrap();
        let d = spectral_derivative(&g, &real_field(&g, |x| (-x * x).exp()), 4);
        // d^4/dx^4 exp(-x^2) = (16x^4 - 48x^2 + 12) exp(-x^2)
        let err = d
            .iter()
            .zip(g.nodes())
            .map(|(z, &x)| (z.re - (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * (-x * x).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn nyquist_is_dropped_for_odd_orders_only() {
        let g = PeriodicGrid::new(0.0, 2.0 * PI, 8).unwrap();
        let f = real_field(&g, |x| (4.0 * x).cos());
        assert!(spectral_derivative(&g, &f, 1).iter().all(|z| z.norm() < 1e-13));
        let d2 = spectral_derivative(&g, &f, 2);
        for (z, w) in d2.iter().zip(&f) {
            assert!((z + 16.0 * w).norm() < 1e-12);
        }
    }

    #[test]
    fn dealias_mask() {
        let g = PeriodicGrid::new(0.0, 1.0, 16).unwrap();
        let kept: Vec<usize> = (0..16).filter(|&j| g.dealias_keep(j)).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, 5, 11, 12, 13, 14, 15]);
    }

    #[test]
    fn transforms_round_trip() {
        let g = PeriodicGrid::new(0.0, 1.0, 64).unwrap();
        let f: Vec<Complex64> = (0..64).map(|j| Complex64::new((j as f64).sin(), (j as f64 * 0.3).cos())).collect();
        let back = g.ifft(&g.fft(&f));
        assert!(f.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-14));
    }
}
