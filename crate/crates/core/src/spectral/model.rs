use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::PeriodicGrid;
use super::state::{linear_symbol, State};
use super::Field;
use crate::construction::{stable_system, HyperbolicSystem, LinearModel};
use crate::matrix::CMatrix;
use crate::{Error, Result};

/// The model catalog.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ModelKind {
    /// `u_t = u_xx`
    Heat,
    /// `u_t + u_xxx = 0`
    LinearKdv,
    /// `u_t + u u_x + u_xxx = 0`
    Kdv,
    /// `i u_t + u_xx + kappa |u|^2 u = 0`
    Nls { kappa: f64 },
    /// `u_t - u_txx + 3 u u_x - 2 u_x u_xx - u u_xxx = 0`
    CamassaHolm,
    /// `u_t + u_xx + u_xxxx + u u_x = 0`
    KuramotoSivashinsky,
    GeneralLinear { linear: LinearModel },
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            name: String,
            kappa: Option<f64>,
            linear: Option<LinearModel>,
        }
        let doc = Doc::deserialize(d)?;
        let kind = ModelKind::from_name(&doc.name, doc.kappa, doc.linear).map_err(serde::de::Error::custom)?;
        Ok(kind)
    }
}

impl ModelKind {
    /// Builds a model from its name; `kappa` belongs to `nls` and `linear`
    /// to `general-linear`, and are rejected elsewhere.
    pub fn from_name(name: &str, kappa: Option<f64>, linear: Option<LinearModel>) -> Result<Self> {
        let has_linear = linear.is_some();
        let kind = match name {
            "heat" => Self::Heat,
            "linear-kdv" => Self::LinearKdv,
            "kdv" => Self::Kdv,
            "nls" => Self::Nls {
                kappa: kappa.unwrap_or(1.0),
            },
            "camassa-holm" | "ch" => Self::CamassaHolm,
            "kuramoto-sivashinsky" | "ks" => Self::KuramotoSivashinsky,
            "general-linear" | "linear" => Self::GeneralLinear {
                linear: linear.ok_or_else(|| Error::InvalidModel("general-linear needs a linear model".into()))?,
            },
            other => return Err(Error::InvalidModel(format!("unknown model {other:?}"))),
        };
        if kappa.is_some() && !matches!(kind, Self::Nls { .. }) {
            return Err(Error::InvalidModel(format!("kappa does not apply to {name}")));
        }
        if has_linear && !matches!(kind, Self::GeneralLinear { .. }) {
            return Err(Error::InvalidModel(format!("a linear model does not apply to {name}")));
        }
        Ok(kind)
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Heat => "heat",
            Self::LinearKdv => "linear-kdv",
            Self::Kdv => "kdv",
            Self::Nls { .. } => "nls",
            Self::CamassaHolm => "camassa-holm",
            Self::KuramotoSivashinsky => "kuramoto-sivashinsky",
            Self::GeneralLinear { .. } => "general-linear",
        }
    }

    /// The linear part as a [`LinearModel`], for models whose relaxation is
    /// the generic construction.
    pub fn linear_model(&self) -> Option<LinearModel> {
        match self {
            Self::Heat => Some(LinearModel::heat()),
            Self::LinearKdv | Self::Kdv => Some(LinearModel::linear_kdv()),
            Self::KuramotoSivashinsky => Some(LinearModel::kuramoto_sivashinsky()),
            Self::GeneralLinear { linear } => Some(linear.clone()),
            Self::Nls { .. } | Self::CamassaHolm => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Heat | Self::LinearKdv | Self::GeneralLinear { .. })
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, Self::Nls { .. })
    }

    pub fn default_dealias(&self) -> bool {
        !self.is_linear()
    }

    /// Number of fields of the relaxed system.
    pub fn hyperbolic_components(&self) -> usize {
        match self {
            Self::Nls { .. } => 2,
            Self::CamassaHolm => 3,
            other => other.linear_model().map_or(1, |l| l.m()),
        }
    }

    pub fn components(&self, hyperbolized: bool) -> usize {
        if hyperbolized {
            self.hyperbolic_components()
        } else {
            1
        }
    }
}

/// A catalog model together with its relaxation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub tau: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, tau: f64) -> Result<Self> {
        let spec = Self { kind, tau };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidModel(format!("tau must be positive and finite, got {}", self.tau)));
        }
        if let ModelKind::Nls { kappa } = self.kind {
            if !kappa.is_finite() {
                return Err(Error::InvalidModel(format!("kappa must be finite, got {kappa}")));
            }
        }
        Ok(())
    }

    /// The assembled linear relaxation for the generic models.
    pub fn system(&self) -> Result<Option<HyperbolicSystem>> {
        self.kind.linear_model().map(|l| stable_system(&l, self.tau)).transpose()
    }
}

/// The semi-discrete right-hand side `q_hat' = M(k) q_hat + N(q)` on a grid,
/// split into its per-mode linear part and everything else.
#[derive(Clone, Debug)]
pub struct Dynamics {
    grid: PeriodicGrid,
    kind: ModelKind,
    hyperbolized: bool,
    tau: f64,
    dealias: bool,
    ncomp: usize,
    /// Row-major `ncomp x ncomp` block per mode.
    linear: Vec<Complex64>,
}

impl Dynamics {
    pub fn new(model: &ModelSpec, hyperbolized: bool, grid: &PeriodicGrid, dealias: bool) -> Result<Self> {
        model.validate()?;
        let ncomp = model.kind.components(hyperbolized);
        let n = grid.n();
        let mut linear = vec![Complex64::new(0.0, 0.0); n * ncomp * ncomp];
        let system = if hyperbolized { model.system()? } else { None };
        let inv_tau = 1.0 / model.tau;
        let i = Complex64::new(0.0, 1.0);
        for j in 0..n {
            let block = &mut linear[j * ncomp * ncomp..(j + 1) * ncomp * ncomp];
            let odd = grid.odd_factor(j);
            let ik = i * grid.wavenumbers()[j] * odd;
            match (&model.kind, hyperbolized) {
                (ModelKind::Nls { .. }, false) => block[0] = i * grid.derivative_symbol(j, 2),
                (ModelKind::Nls { .. }, true) => {
                    block[1] = i * ik;
                    block[2] = -i * ik * inv_tau;
                    block[3] = i * inv_tau;
                }
                (ModelKind::CamassaHolm, false) => {}
                (ModelKind::CamassaHolm, true) => {
                    let t = inv_tau;
                    block.copy_from_slice(&[
                        ik * t,
                        (-t).into(),
                        0.0.into(),
                        0.0.into(),
                        -ik * t,
                        t.into(),
                        ik * t,
                        (-t).into(),
                        0.0.into(),
                    ]);
                }
                (kind, false) => {
                    let lm = kind.linear_model().expect("generic model");
                    block[0] = linear_symbol(&lm, grid, j);
                }
                (_, true) => {
                    let sys = system.as_ref().expect("generic model");
                    let k = grid.wavenumbers()[j];
                    block.copy_from_slice(sys.mode_matrix(k, odd).as_slice());
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            kind: model.kind.clone(),
            hyperbolized,
            tau: model.tau,
            dealias,
            ncomp,
            linear,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.ncomp
    }

    pub fn hyperbolized(&self) -> bool {
        self.hyperbolized
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_scalar(&self) -> bool {
        self.ncomp == 1
    }

    pub fn mode_block(&self, j: usize) -> CMatrix {
        let c = self.ncomp;
        let b = &self.linear[j * c * c..(j + 1) * c * c];
        CMatrix::from_fn(c, c, |r, s| b[r * c + s])
    }

    /// `M(k) q_hat`, mode by mode.
    pub fn apply_linear(&self, hat: &Field) -> Field {
        let (c, n) = (self.ncomp, self.grid.n());
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; c];
        for j in 0..n {
            let b = &self.linear[j * c * c..(j + 1) * c * c];
            for r in 0..c {
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..c {
                    let m = b[r * c + s];
                    if m != Complex64::new(0.0, 0.0) {
                        acc += m * hat[s][j];
                    }
                }
                out[r][j] = acc;
            }
        }
        out
    }

    /// `(I - h M(k))^{-1} rhs`, mode by mode.
    pub fn solve_implicit(&self, h: f64, rhs: &Field) -> Result<Field> {
        let (c, n) = (self.ncomp, self.grid.n());
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; c];
        for j in 0..n {
            if c == 1 {
                out[0][j] = rhs[0][j] / (1.0 - h * self.linear[j]);
                continue;
            }
            let a = &CMatrix::identity(c) - &self.mode_block(j).scale(h.into());
            let b = CMatrix::from_fn(c, 1, |r, _| rhs[r][j]);
            let x = a.solve(&b)?;
            for r in 0..c {
                out[r][j] = x[(r, 0)];
            }
        }
        Ok(out)
    }

    fn to_hat(&self, phys: &[Complex64]) -> Vec<Complex64> {
        let mut h = self.grid.fft(phys);
        if self.dealias {
            self.grid.dealias(&mut h);
        }
        h
    }

    fn phys_deriv(&self, hat: &[Complex64], order: u32) -> Vec<Complex64> {
        if order == 0 {
            self.grid.ifft(hat)
        } else {
            self.grid.ifft(&self.grid.derivative_hat(hat, order))
        }
    }

    /// Everything except the per-mode linear part, in Fourier space.
    pub fn apply_nonlinear(&self, hat: &Field) -> Field {
        let (c, n) = (self.ncomp, self.grid.n());
        let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; c];
        match &self.kind {
            ModelKind::Heat | ModelKind::LinearKdv | ModelKind::GeneralLinear { .. } => {}
            ModelKind::Kdv | ModelKind::KuramotoSivashinsky => {
                // u u_x in conservative form d(u^2/2).
                let u = self.phys_deriv(&hat[0], 0);
                let sq: Vec<Complex64> = u.iter().map(|z| 0.5 * z * z).collect();
                out[0] = self.grid.derivative_hat(&self.to_hat(&sq), 1);
                out[0].iter_mut().for_each(|z| *z = -*z);
            }
            ModelKind::Nls { kappa } => {
                let u = self.phys_deriv(&hat[0], 0);
                let cubic: Vec<Complex64> = u.iter().map(|z| z * z.norm_sqr()).collect();
                let i_kappa = Complex64::new(0.0, *kappa);
                out[0] = self.to_hat(&cubic).iter().map(|z| i_kappa * z).collect();
            }
            ModelKind::CamassaHolm if !self.hyperbolized => {
                let u = self.phys_deriv(&hat[0], 0);
                let ux = self.phys_deriv(&hat[0], 1);
                let uxx = self.phys_deriv(&hat[0], 2);
                let uxxx = self.phys_deriv(&hat[0], 3);
                let prod: Vec<Complex64> = (0..n)
                    .map(|p| -3.0 * u[p] * ux[p] + 2.0 * ux[p] * uxx[p] + u[p] * uxxx[p])
                    .collect();
                let ks = self.grid.wavenumbers();
                out[0] = self
                    .to_hat(&prod)
                    .iter()
                    .zip(ks)
                    .map(|(z, k)| z / (1.0 + k * k))
                    .collect();
            }
            ModelKind::CamassaHolm => {
                let q0 = self.phys_deriv(&hat[0], 0);
                let q0x = self.phys_deriv(&hat[0], 1);
                let q2 = self.phys_deriv(&hat[2], 0);
                let q2x = self.phys_deriv(&hat[2], 1);
                let prod: Vec<Complex64> = (0..n)
                    .map(|p| -3.0 * q0[p] * q0x[p] + 2.0 * q2[p] * q0x[p] + q0[p] * q2x[p])
                    .collect();
                out[0] = self.to_hat(&prod);
            }
        }
        out
    }

    pub fn apply_full(&self, hat: &Field) -> Field {
        let mut out = self.apply_linear(hat);
        for (o, n) in out.iter_mut().zip(self.apply_nonlinear(hat)) {
            for (a, b) in o.iter_mut().zip(n) {
                *a += b;
            }
        }
        out
    }

    /// Largest `|eigenvalue|` of the per-mode linear blocks.
    pub fn linear_spectral_radius(&self) -> Result<f64> {
        let mut rho: f64 = 0.0;
        for j in 0..self.grid.n() {
            let r = if self.is_scalar() {
                self.linear[j].norm()
            } else {
                crate::dispersion::eigenvalues_dense(&self.mode_block(j))?
                    .eigenvalues
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            };
            rho = rho.max(r);
        }
        Ok(rho)
    }

    /// Rate estimate for the explicitly treated nonlinear terms at `hat`.
    pub fn nonlinear_rate(&self, hat: &Field) -> f64 {
        let max_of = |c: usize| self.grid.ifft(&hat[c]).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let k = self.grid.k_max();
        match &self.kind {
            ModelKind::Heat | ModelKind::LinearKdv | ModelKind::GeneralLinear { .. } => 0.0,
            ModelKind::Kdv | ModelKind::KuramotoSivashinsky => k * max_of(0),
            ModelKind::Nls { kappa } => kappa.abs() * max_of(0).powi(2),
            ModelKind::CamassaHolm if !self.hyperbolized => 4.0 * k * max_of(0),
            ModelKind::CamassaHolm => k * (4.0 * max_of(0) + 2.0 * max_of(2)),
        }
    }

    pub fn to_hat_state(&self, state: &State) -> Result<Field> {
        if state.components.len() != self.ncomp {
            return Err(Error::SizeMismatch {
                expected: self.ncomp,
                actual: state.components.len(),
            });
        }
        Ok(state.components.iter().map(|c| self.grid.fft(c)).collect())
    }

    pub fn to_physical(&self, hat: &Field) -> Vec<Vec<Complex64>> {
        hat.iter().map(|h| self.grid.ifft(h)).collect()
    }
}

/// Time derivative of `state` in physical space.
pub fn rhs(model: &ModelSpec, hyperbolized: bool, state: &State) -> Result<Vec<Vec<Complex64>>> {
    let dyn_ = Dynamics::new(model, hyperbolized, &state.grid, model.kind.default_dealias())?;
    let hat = dyn_.to_hat_state(state)?;
    Ok(dyn_.to_physical(&dyn_.apply_full(&hat)))
}
