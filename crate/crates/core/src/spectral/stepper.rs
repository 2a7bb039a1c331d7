use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::Dynamics;
use super::Field;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    /// Three-stage, third-order strong-stability-preserving Runge-Kutta.
    Ssprk33,
    /// Classical fourth-order Runge-Kutta.
    Rk4,
    /// ARS(4,4,3): the linear part implicit, the rest explicit.
    Imex,
}

impl Stepper {
    pub fn is_implicit(self) -> bool {
        self == Self::Imex
    }
}

impl std::str::FromStr for Stepper {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ssprk33" => Ok(Self::Ssprk33),
            "rk4" => Ok(Self::Rk4),
            "imex" => Ok(Self::Imex),
            other => Err(format!("unknown stepper {other:?} (expected ssprk33, rk4 or imex)")),
        }
    }
}

/// A semi-discrete system `u' = L u + N(u)` with `L` simple to invert.
pub trait Semidiscrete {
    fn linear(&self, u: &Field) -> Field;
    fn nonlinear(&self, u: &Field) -> Field;
    /// `(I - h L)^{-1} rhs`.
    fn solve_implicit(&self, h: f64, rhs: &Field) -> Result<Field>;

    fn full(&self, u: &Field) -> Field {
        let mut out = self.linear(u);
        axpy(&mut out, 1.0, &self.nonlinear(u));
        out
    }
}

impl Semidiscrete for super::model::Dynamics {
    fn linear(&self, u: &Field) -> Field {
        self.apply_linear(u)
    }

    fn nonlinear(&self, u: &Field) -> Field {
        self.apply_nonlinear(u)
    }

    fn solve_implicit(&self, h: f64, rhs: &Field) -> Result<Field> {
        Dynamics::solve_implicit(self, h, rhs)
    }

    fn full(&self, u: &Field) -> Field {
        self.apply_full(u)
    }
}

/// `y += a x`
pub fn axpy(y: &mut Field, a: f64, x: &Field) {
    for (yc, xc) in y.iter_mut().zip(x) {
        for (p, q) in yc.iter_mut().zip(xc) {
            *p += a * q;
        }
    }
}

fn combine(terms: &[(f64, &Field)]) -> Field {
    let mut out = terms[0].1.clone();
    let a0 = terms[0].0;
    if a0 != 1.0 {
        out.iter_mut().flatten().for_each(|z| *z *= a0);
    }
    for (a, f) in &terms[1..] {
        if *a != 0.0 {
            axpy(&mut out, *a, f);
        }
    }
    out
}

pub fn is_finite(u: &Field) -> bool {
    u.iter().flatten().all(|z: &Complex64| z.re.is_finite() && z.im.is_finite())
}

/// Advances `u` by one step of size `dt`.
pub fn step<S: Semidiscrete + ?Sized>(stepper: Stepper, sys: &S, u: &Field, dt: f64) -> Result<Field> {
    match stepper {
        Stepper::Ssprk33 => Ok(ssprk33(sys, u, dt)),
        Stepper::Rk4 => Ok(rk4(sys, u, dt)),
        Stepper::Imex => ars443(sys, u, dt),
    }
}

fn ssprk33<S: Semidiscrete + ?Sized>(sys: &S, u: &Field, dt: f64) -> Field {
    let mut u1 = u.clone();
    axpy(&mut u1, dt, &sys.full(u));
    let mut u2 = combine(&[(0.75, u), (0.25, &u1)]);
    axpy(&mut u2, 0.25 * dt, &sys.full(&u1));
    let mut out = combine(&[(1.0 / 3.0, u), (2.0 / 3.0, &u2)]);
    axpy(&mut out, 2.0 / 3.0 * dt, &sys.full(&u2));
    out
}

fn rk4<S: Semidiscrete + ?Sized>(sys: &S, u: &Field, dt: f64) -> Field {
    let k1 = sys.full(u);
    let k2 = sys.full(&combine(&[(1.0, u), (0.5 * dt, &k1)]));
    let k3 = sys.full(&combine(&[(1.0, u), (0.5 * dt, &k2)]));
    let k4 = sys.full(&combine(&[(1.0, u), (dt, &k3)]));
    combine(&[
        (1.0, u),
        (dt / 6.0, &k1),
        (dt / 3.0, &k2),
        (dt / 3.0, &k3),
        (dt / 6.0, &k4),
    ])
}

const ARS_GAMMA: f64 = 0.5;

/// Explicit tableau, rows 2..5 (stage 1 is `u`).
const ARS_E: [&[f64]; 4] = [
    &[0.5],
    &[11.0 / 18.0, 1.0 / 18.0],
    &[5.0 / 6.0, -5.0 / 6.0, 0.5],
    &[0.25, 1.75, 0.75, -1.75],
];

/// Implicit tableau below the diagonal, rows 2..5; the diagonal is
/// `ARS_GAMMA` and the first column is zero.
const ARS_I: [&[f64]; 4] = [&[0.0], &[0.0, 1.0 / 6.0], &[0.0, -0.5, 0.5], &[0.0, 1.5, -1.5, 0.5]];

/// Stiffly accurate in both parts: the last stage is the new value.
fn ars443<S: Semidiscrete + ?Sized>(sys: &S, u: &Field, dt: f64) -> Result<Field> {
    let mut n_terms: Vec<Field> = vec![sys.nonlinear(u)];
    let mut l_terms: Vec<Field> = vec![sys.linear(u)];
    let mut y = u.clone();
    for (row_e, row_i) in ARS_E.iter().zip(ARS_I.iter()) {
        let mut rhs = u.clone();
        for (j, a) in row_e.iter().enumerate() {
            if *a != 0.0 {
                axpy(&mut rhs, dt * a, &n_terms[j]);
            }
        }
        for (j, a) in row_i.iter().enumerate() {
            if *a != 0.0 {
                axpy(&mut rhs, dt * a, &l_terms[j]);
            }
        }
        y = sys.solve_implicit(ARS_GAMMA * dt, &rhs)?;
        n_terms.push(sys.nonlinear(&y));
        l_terms.push(sys.linear(&y));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `u' = a u + b u^2` with the linear part as `L`.
    struct Bernoulli {
        a: f64,
        b: f64,
    }

    impl Semidiscrete for Bernoulli {
        fn linear(&self, u: &Field) -> Field {
            vec![u[0].iter().map(|z| z * self.a).collect()]
        }

        fn nonlinear(&self, u: &Field) -> Field {
            vec![u[0].iter().map(|z| z * z * self.b).collect()]
        }

        fn solve_implicit(&self, h: f64, rhs: &Field) -> Result<Field> {
            Ok(vec![rhs[0].iter().map(|z| z / (1.0 - h * self.a)).collect()])
        }
    }

    fn bernoulli_exact(a: f64, b: f64, u0: f64, t: f64) -> f64 {
        a / ((a / u0 + b) * (-a * t).exp() - b)
    }

    fn scalar(x: f64) -> Field {
        vec![vec![Complex64::new(x, 0.0)]]
    }

    fn integrate(stepper: Stepper, sys: &Bernoulli, u0: f64, t: f64, steps: usize) -> f64 {
        let dt = t / steps as f64;
        let mut u = scalar(u0);
        for _ in 0..steps {
            u = step(stepper, sys, &u, dt).unwrap();
        }
        u[0][0].re
    }

    fn measured_order(stepper: Stepper) -> f64 {
        let sys = Bernoulli { a: -1.0, b: 0.5 };
        let exact = bernoulli_exact(-1.0, 0.5, 0.8, 1.0);
        let e1 = (integrate(stepper, &sys, 0.8, 1.0, 20) - exact).abs();
        let e2 = (integrate(stepper, &sys, 0.8, 1.0, 40) - exact).abs();
        (e1 / e2).log2()
    }

    #[test]
    fn amplification_factors() {
        let sys = Bernoulli { a: -1.0, b: 0.0 };
        let z: f64 = -0.1;
        let taylor = |p: usize| (0..=p).map(|j| z.powi(j as i32) / (1..=j).product::<usize>() as f64).sum::<f64>();
        let s = step(Stepper::Ssprk33, &sys, &scalar(1.0), 0.1).unwrap()[0][0].re;
        assert!((s - taylor(3)).abs() < 1e-15);
        let r = step(Stepper::Rk4, &sys, &scalar(1.0), 0.1).unwrap()[0][0].re;
        assert!((r - taylor(4)).abs() < 1e-15);
    }

    #[test]
    fn explicit_orders() {
        let p = measured_order(Stepper::Ssprk33);
        assert!((2.9..=3.1).contains(&p), "{p}");
        let p = measured_order(Stepper::Rk4);
        assert!((3.9..=4.1).contains(&p), "{p}");
    }

    #[test]
    fn imex_order_is_at_least_three() {
        let p = measured_order(Stepper::Imex);
        assert!(p >= 2.9, "{p}");
    }

    #[test]
    fn imex_pure_implicit_matches_heat_mode() {
        // Linear part only: one step multiplies by the stability function,
        // which agrees with exp(-k^2 dt) to third order.
        for k in [1.0f64, 2.0] {
            let sys = Bernoulli { a: -k * k, b: 0.0 };
            let errs: Vec<f64> = [0.02, 0.01]
                .iter()
                .map(|&dt| (step(Stepper::Imex, &sys, &scalar(1.0), dt).unwrap()[0][0].re - (-k * k * dt).exp()).abs())
                .collect();
            let p = (errs[0] / errs[1]).log2();
            assert!(p > 3.5, "local order {p}");
        }
    }

    #[test]
    fn imex_is_stable_for_stiff_decay() {
        let sys = Bernoulli { a: -1e6, b: 0.0 };
        let mut u = scalar(1.0);
        for _ in 0..10 {
            u = step(Stepper::Imex, &sys, &u, 0.1).unwrap();
        }
        assert!(u[0][0].norm() < 1e-3);
    }

    #[test]
    fn stepper_names() {
        assert_eq!("RK4".parse::<Stepper>().unwrap(), Stepper::Rk4);
        assert!("euler".parse::<Stepper>().is_err());
        assert_eq!(serde_json::to_string(&Stepper::Ssprk33).unwrap(), "\"ssprk33\"");
    }
}
