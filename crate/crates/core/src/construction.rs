//! Model equations, signed permutations and the assembled relaxation system.
//!
//! For a model `u_t + sum_{j<m} alpha_j d^j u + sigma0 d^m u = 0` the relaxation
//! in the variables `q_0..q_{m-1}` reads
//!
//! ```text
//! q_0,t + sum_{j=1}^{m-1} alpha_j d q_{j-1} + sigma0 d q_{m-1} = -alpha_0 q_0
//! tau q_j,t = sum_c P[j-1][c] (q_{c+1} - d q_c),            j = 1..m-1
//! ```
//!
//! which is `D q_t + A q_x = B q` with `A = [[alpha, sigma0], [P, 0]]`,
//! `B = [[-alpha_0, 0], [0, P]]` and `D = diag(1, tau, .., tau)`. `D` is never
//! stored; `tau` is kept as a scalar.
//!
//! Indices are 0-based: entry `(i, j)` of a [`SignedPermutation`] is the
//! 1-based `p_{i+1, j+1}`.

use std::fmt;

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dispersion;
use crate::matrix::CMatrix;
use crate::{Error, Result};

/// Largest census (number of candidate permutations) that
/// [`enumerate_candidates`] will attempt.
pub const CENSUS_LIMIT: u64 = 1_000_000;

/// A square matrix with exactly one `+1` or `-1` in every row and column.
///
/// Row `i` holds `sign[i]` in column `target[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedPermutation {
    target: Vec<usize>,
    sign: Vec<i8>,
}

/// One cycle of a signed permutation, `i -> target[i] -> ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedCycle {
    pub indices: Vec<usize>,
    /// Product of the signs along the cycle; the eigenvalues of the cycle are
    /// the `len`-th roots of this value.
    pub sign_product: i8,
}

impl SignedCycle {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl SignedPermutation {
    pub fn new(target: Vec<usize>, sign: Vec<i8>) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return Err(Error::InvalidModel("signed permutation must be non-empty".into()));
        }
        if sign.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                actual: sign.len(),
            });
        }
        let mut seen = vec![false; n];
        for &t in &target {
            if t >= n || seen[t] {
                return Err(Error::InvalidModel(format!(
                    "target {target:?} is not a permutation of 0..{n}"
                )));
            }
            seen[t] = true;
        }
        if let Some(s) = sign.iter().find(|s| s.abs() != 1) {
            return Err(Error::InvalidModel(format!("sign entries must be +1 or -1, got {s}")));
        }
        Ok(Self { target, sign })
    }

    /// Builds a signed permutation from its dense form.
    pub fn from_dense(rows: &[Vec<i8>]) -> Result<Self> {
        let n = rows.len();
        let mut target = Vec::with_capacity(n);
        let mut sign = Vec::with_capacity(n);
        for row in rows {
            if row.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            let nz: Vec<_> = row.iter().enumerate().filter(|(_, v)| **v != 0).collect();
            match nz.as_slice() {
                [(j, v)] => {
                    target.push(*j);
                    sign.push(**v);
                }
                _ => {
                    return Err(Error::InvalidModel(format!(
                        "row {row:?} must have exactly one non-zero entry"
                    )))
                }
            }
        }
        Self::new(target, sign)
    }

    pub fn size(&self) -> usize {
        self.target.len()
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn sign(&self) -> &[i8] {
        &self.sign
    }

    pub fn entry(&self, i: usize, j: usize) -> i8 {
        if self.target[i] == j {
            self.sign[i]
        } else {
            0
        }
    }

    pub fn dense(&self) -> Vec<Vec<i8>> {
        let n = self.size();
        (0..n).map(|i| (0..n).map(|j| self.entry(i, j)).collect()).collect()
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        let n = self.size();
        CMatrix::from_fn(n, n, |i, j| Complex64::new(self.entry(i, j) as f64, 0.0))
    }

    pub fn negated(&self) -> Self {
        Self {
            target: self.target.clone(),
            sign: self.sign.iter().map(|s| -s).collect(),
        }
    }

    /// Disjoint cycle decomposition, ordered by smallest index.
    pub fn cycles(&self) -> Vec<SignedCycle> {
        let n = self.size();
        let mut visited = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut indices = Vec::new();
            let mut sign_product = 1i8;
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                indices.push(i);
                sign_product *= self.sign[i];
                i = self.target[i];
            }
            out.push(SignedCycle {
                indices,
                sign_product,
            });
        }
        out
    }

    /// All `n! 2^n` signed permutations of size `n`, permutations in
    /// lexicographic order, signs enumerated as a binary counter
    /// (bit `i` set means row `i` is negative).
    pub fn all(n: usize) -> impl Iterator<Item = SignedPermutation> {
        (0..n).permutations(n).flat_map(move |target| {
            (0u32..(1u32 << n)).map(move |mask| SignedPermutation {
                target: target.clone(),
                sign: (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect(),
            })
        })
    }

    pub fn count(n: usize) -> u64 {
        (1..=n as u64).product::<u64>().saturating_mul(1u64 << n)
    }
}

impl fmt::Display for SignedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .dense()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).join(",")))
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// JSON form: 1-based targets.
#[derive(Serialize, Deserialize)]
struct PermutationDoc {
    target: Vec<usize>,
    sign: Vec<i8>,
}

impl Serialize for SignedPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PermutationDoc {
            target: self.target.iter().map(|t| t + 1).collect(),
            sign: self.sign.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignedPermutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PermutationDoc::deserialize(d)?;
        if doc.target.contains(&0) {
            return Err(serde::de::Error::custom("targets are 1-based"));
        }
        SignedPermutation::new(doc.target.iter().map(|t| t - 1).collect(), doc.sign)
            .map_err(serde::de::Error::custom)
    }
}

/// `u_t + sum_{j<m} alpha_j d^j u + sigma0 d^m u = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearModel {
    m: usize,
    sigma0: i8,
    alpha: Vec<f64>,
}

impl LinearModel {
    pub fn new(m: usize, sigma0: i8, alpha: Vec<f64>) -> Result<Self> {
        check_order_and_sign(m, sigma0)?;
        if alpha.len() != m {
            return Err(Error::SizeMismatch {
                expected: m,
                actual: alpha.len(),
            });
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidModel("alpha must be finite".into()));
        }
        if alpha[0] < 0.0 {
            return Err(Error::InvalidModel(format!(
                "alpha_0 = {} < 0 gives unbounded solutions",
                alpha[0]
            )));
        }
        Ok(Self { m, sigma0, alpha })
    }

    /// `u_t + sigma0 d^m u = 0`.
    pub fn pure(m: usize, sigma0: i8) -> Result<Self> {
        Self::new(m, sigma0, vec![0.0; m])
    }

    /// The bounded sign for even `m`, `+1` for odd `m`.
    pub fn natural_sigma0(m: usize) -> i8 {
        if m.is_multiple_of(2) {
            even_sign(m)
        } else {
            1
        }
    }

    pub fn heat() -> Self {
        Self::pure(2, -1).expect("valid")
    }

    pub fn linear_kdv() -> Self {
        Self::pure(3, 1).expect("valid")
    }

    /// Linear part of Kuramoto-Sivashinsky: `u_t + u_xx + u_xxxx = 0`.
    pub fn kuramoto_sivashinsky() -> Self {
        Self::new(4, 1, vec![0.0, 0.0, 1.0, 0.0]).expect("valid")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sigma0(&self) -> i8 {
        self.sigma0
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn is_pure(&self) -> bool {
        self.alpha.iter().all(|a| *a == 0.0)
    }

    /// Fourier symbol `s(k)` such that `u_hat' = s(k) u_hat`.
    pub fn symbol(&self, k: f64) -> Complex64 {
        let ik = Complex64::new(0.0, k);
        let lower: Complex64 = self
            .alpha
            .iter()
            .enumerate()
            .map(|(j, a)| *a * ik.powu(j as u32))
            .sum();
        -(lower + self.sigma0 as f64 * ik.powu(self.m as u32))
    }
}

impl<'de> Deserialize<'de> for LinearModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            m: usize,
            sigma0: i8,
            alpha: Option<Vec<f64>>,
        }
        let raw = Raw::deserialize(d)?;
        let alpha = raw.alpha.unwrap_or_else(|| vec![0.0; raw.m]);
        LinearModel::new(raw.m, raw.sigma0, alpha).map_err(serde::de::Error::custom)
    }
}

fn even_sign(m: usize) -> i8 {
    if (m / 2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn check_order_and_sign(m: usize, sigma0: i8) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidModel(format!("order m = {m} must be at least 2")));
    }
    if sigma0.abs() != 1 {
        return Err(Error::InvalidModel(format!("sigma0 must be +1 or -1, got {sigma0}")));
    }
    if m.is_multiple_of(2) && sigma0 != even_sign(m) {
        return Err(Error::UnstableSign {
            m,
            required: even_sign(m),
            got: sigma0,
        });
    }
    Ok(())
}

/// The unique signed permutation of size `m - 1` for which the relaxation of
/// `u_t + sigma0 d^m u = 0` is stable: anti-diagonal, with 1-based entries
/// `p_{i,j} = sigma0 (-1)^{j-1}` for `j <= m/2` and `sigma0 (-1)^{m-j}` for
/// `j > m/2` (`i + j = m`).
pub fn stable_permutation(m: usize, sigma0: i8) -> Result<SignedPermutation> {
    check_order_and_sign(m, sigma0)?;
    let n = m - 1;
    let mut target = Vec::with_capacity(n);
    let mut sign = Vec::with_capacity(n);
    for i in 1..=n {
        let j = m - i;
        let exponent = if 2 * j <= m { j - 1 } else { m - j };
        let s = if exponent % 2 == 0 { sigma0 } else { -sigma0 };
        target.push(j - 1);
        sign.push(s);
    }
    SignedPermutation::new(target, sign)
}

/// Low-wavenumber condition: every eigenvalue of `P` lies in the closed left
/// half-plane. Holds exactly when `P` splits into 1-cycles of sign `-1` and
/// antisymmetric 2-cycles.
pub fn classify_left_half_plane(p: &SignedPermutation) -> bool {
    p.cycles().iter().all(|c| match c.len() {
        1 | 2 => c.sign_product == -1,
        _ => false,
    })
}

/// High-wavenumber condition: the advective matrix `A = [[0, sigma0], [P, 0]]`
/// has a real spectrum. `A` is itself a signed permutation, so this holds
/// exactly when its cycles are 1-cycles or equal-sign 2-cycles, i.e. `A = A^T`.
pub fn has_real_spectrum_a(p: &SignedPermutation, sigma0: i8) -> bool {
    advective_permutation(p, sigma0).cycles().iter().all(|c| match c.len() {
        1 => true,
        2 => c.sign_product == 1,
        _ => false,
    })
}

/// `A` for `alpha = 0` as a signed permutation of size `m = n + 1`.
pub fn advective_permutation(p: &SignedPermutation, sigma0: i8) -> SignedPermutation {
    let n = p.size();
    let mut target = Vec::with_capacity(n + 1);
    let mut sign = Vec::with_capacity(n + 1);
    target.push(n);
    sign.push(sigma0);
    target.extend_from_slice(p.target());
    sign.extend_from_slice(p.sign());
    SignedPermutation { target, sign }
}

/// Assembled relaxation `D q_t + A q_x = B q`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicSystem {
    model: LinearModel,
    p: SignedPermutation,
    tau: f64,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

pub fn assemble_system(model: &LinearModel, p: &SignedPermutation, tau: f64) -> Result<HyperbolicSystem> {
    let m = model.m();
    if p.size() != m - 1 {
        return Err(Error::SizeMismatch {
            expected: m - 1,
            actual: p.size(),
        });
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidModel(format!("tau must be positive and finite, got {tau}")));
    }
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![vec![0.0; m]; m];
    for j in 1..m {
        a[0][j - 1] = model.alpha()[j];
    }
    a[0][m - 1] += model.sigma0() as f64;
    b[0][0] = -model.alpha()[0];
    for i in 0..m - 1 {
        let c = p.target()[i];
        let s = p.sign()[i] as f64;
        a[i + 1][c] = s;
        b[i + 1][c + 1] = s;
    }
    Ok(HyperbolicSystem {
        model: model.clone(),
        p: p.clone(),
        tau,
        a,
        b,
    })
}

/// Assembles the system with the stable permutation for `model`.
pub fn stable_system(model: &LinearModel, tau: f64) -> Result<HyperbolicSystem> {
    let p = stable_permutation(model.m(), model.sigma0())?;
    assemble_system(model, &p, tau)
}

impl HyperbolicSystem {
    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn permutation(&self) -> &SignedPermutation {
        &self.p
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    pub fn a_matrix(&self) -> CMatrix {
        CMatrix::from_real_rows(&self.a)
    }

    pub fn b_matrix(&self) -> CMatrix {
        CMatrix::from_real_rows(&self.b)
    }

    /// Diagonal of `Lambda = D^{-1}`.
    pub fn lambda(&self) -> Vec<f64> {
        let mut l = vec![1.0 / self.tau; self.m()];
        l[0] = 1.0;
        l
    }

    /// Same model and permutation with a different relaxation time.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        assemble_system(&self.model, &self.p, tau)
    }

    /// Per-mode matrix `M(k)` with `q_hat' = M(k) q_hat`, i.e.
    /// `Lambda (B - i k A)`. `odd_factor` multiplies the `ik` terms; pass 0 to
    /// drop first-derivative terms at the Nyquist mode.
    pub fn mode_matrix(&self, k: f64, odd_factor: f64) -> CMatrix {
        let lam = self.lambda();
        let ik = Complex64::new(0.0, k * odd_factor);
        CMatrix::from_fn(self.m(), self.m(), |i, j| lam[i] * (self.b[i][j] - ik * self.a[i][j]))
    }

    pub fn to_json(&self) -> Value {
        let num = |x: f64| -> Value {
            if x.fract() == 0.0 && x.abs() < 9.0e15 {
                json!(x as i64)
            } else {
                json!(x)
            }
        };
        let mat = |rows: &[Vec<f64>]| -> Value {
            Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(|x| num(*x)).collect())).collect())
        };
        json!({
            "m": self.m(),
            "sigma0": self.model.sigma0(),
            "alpha": self.model.alpha(),
            "tau": self.tau,
            "P": self.p.dense(),
            "A": mat(&self.a),
            "B": mat(&self.b),
        })
    }

    /// Parses the JSON document produced by [`HyperbolicSystem::to_json`]. The
    /// stored `A` and `B` must agree with the matrices assembled from the
    /// other fields.
    pub fn from_json(value: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            m: usize,
            sigma0: i8,
            alpha: Vec<f64>,
            tau: f64,
            #[serde(rename = "P")]
            p: Vec<Vec<i8>>,
            #[serde(rename = "A")]
            a: Vec<Vec<f64>>,
            #[serde(rename = "B")]
            b: Vec<Vec<f64>>,
        }
        let doc = Doc::deserialize(value)?;
        let model = LinearModel::new(doc.m, doc.sigma0, doc.alpha)?;
        let sys = assemble_system(&model, &SignedPermutation::from_dense(&doc.p)?, doc.tau)?;
        if sys.a != doc.a || sys.b != doc.b {
            return Err(Error::InvalidModel("A/B do not match m, sigma0, alpha and P".into()));
        }
        Ok(sys)
    }
}

/// `L_tau = -i tau Lambda (k A + i B)` for the pure model with permutation `p`.
/// `tau = 0` is allowed and gives the limit matrix `L_0`.
pub fn relaxation_generator_raw(p: &SignedPermutation, sigma0: i8, k: f64, tau: f64) -> CMatrix {
    let m = p.size() + 1;
    let ik = Complex64::new(0.0, k);
    let mut l = CMatrix::zeros(m, m);
    l[(0, m - 1)] = -ik * tau * sigma0 as f64;
    for i in 0..m - 1 {
        let c = p.target()[i];
        let s = p.sign()[i] as f64;
        l[(i + 1, c)] += -ik * s;
        l[(i + 1, c + 1)] += Complex64::new(s, 0.0);
    }
    l
}

/// `L_tau` for an assembled pure system; see [`relaxation_generator_raw`].
pub fn relaxation_generator(system: &HyperbolicSystem, k: f64) -> Result<CMatrix> {
    require_pure(system.model())?;
    Ok(relaxation_generator_raw(
        system.permutation(),
        system.model().sigma0(),
        k,
        system.tau(),
    ))
}

pub(crate) fn require_pure(model: &LinearModel) -> Result<()> {
    if model.is_pure() {
        Ok(())
    } else {
        Err(Error::NotPureModel(model.alpha().to_vec()))
    }
}

/// Verdicts for one candidate permutation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub permutation: SignedPermutation,
    pub low_k: bool,
    pub high_k: bool,
    pub full: bool,
}

impl Candidate {
    pub fn is_stable(&self) -> bool {
        self.low_k && self.high_k && self.full
    }
}

/// Relaxation times used by the sampled full-spectrum check.
pub const CENSUS_TAUS: [f64; 3] = [1e-3, 1e-1, 1.0];

/// Classifies every signed permutation of size `m - 1` for the pure model
/// `u_t + sigma0 d^m u = 0`.
pub fn enumerate_candidates(m: usize, sigma0: i8) -> Result<Vec<Candidate>> {
    let model = LinearModel::pure(m, sigma0)?;
    let count = SignedPermutation::count(m - 1);
    if count > CENSUS_LIMIT {
        return Err(Error::CensusTooLarge {
            candidates: count,
            limit: CENSUS_LIMIT,
        });
    }
    let k_grid = dispersion::census_k_grid();
    let all: Vec<SignedPermutation> = SignedPermutation::all(m - 1).collect();
    all.into_par_iter()
        .map(|p| {
            let low_k = classify_left_half_plane(&p);
            let high_k = has_real_spectrum_a(&p, sigma0);
            let mut full = true;
            for tau in CENSUS_TAUS {
                let sys = assemble_system(&model, &p, tau)?;
                if !dispersion::is_stable_on(&sys, &k_grid, dispersion::STABILITY_TOL)? {
                    full = false;
                    break;
                }
            }
            Ok(Candidate {
                permutation: p,
                low_k,
                high_k,
                full,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::eigenvalues_dense;
    use proptest::prelude::*;

    fn perm(rows: &[&[i8]]) -> SignedPermutation {
        SignedPermutation::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn stable_permutation_m3() {
        let p = stable_permutation(3, 1).unwrap();
        assert_eq!(p.dense(), vec![vec![0, -1], vec![1, 0]]);
    }

    #[test]
    fn stable_permutation_heat_sign() {
        let p = stable_permutation(2, -1).unwrap();
        assert_eq!(p.dense(), vec![vec![-1]]);
        // tau v_t = -(v - u_x) = u_x - v
        let sys = assemble_system(&LinearModel::heat(), &p, 0.3).unwrap();
        assert_eq!(sys.a(), &[vec![0.0, -1.0], vec![-1.0, 0.0]]);
        assert_eq!(sys.b(), &[vec![0.0, 0.0], vec![0.0, -1.0]]);
    }

    #[test]
    fn stable_permutation_m4_matches_ks_signs() {
        let p = stable_permutation(4, 1).unwrap();
        // (p13, p22, p31) = (-1, -1, +1)
        assert_eq!(p.entry(0, 2), -1);
        assert_eq!(p.entry(1, 1), -1);
        assert_eq!(p.entry(2, 0), 1);
        assert_eq!(p.cycles().len(), 2);
    }

    #[test]
    fn stable_permutation_rejects_unbounded_sign() {
        assert!(matches!(stable_permutation(2, 1), Err(Error::UnstableSign { .. })));
        assert!(matches!(stable_permutation(4, -1), Err(Error::UnstableSign { .. })));
        assert!(stable_permutation(3, -1).is_ok());
        assert!(stable_permutation(1, 1).is_err());
    }

    #[test]
    fn kdv_system_matches_display() {
        // q1: tau q1_t - q1_x = -q2 ; q2: tau q2_t + q0_x = q1
        let sys = stable_system(&LinearModel::linear_kdv(), 0.1).unwrap();
        assert_eq!(sys.a(), &[vec![0.0, 0.0, 1.0], vec![0.0, -1.0, 0.0], vec![1.0, 0.0, 0.0]]);
        assert_eq!(sys.b(), &[vec![0.0, 0.0, 0.0], vec![0.0, 0.0, -1.0], vec![0.0, 1.0, 0.0]]);
    }

    #[test]
    fn ks_system_matches_display() {
        let sys = stable_system(&LinearModel::kuramoto_sivashinsky(), 0.1).unwrap();
        // q0_t + q1_x + q3_x = 0
        assert_eq!(sys.a()[0], vec![0.0, 1.0, 0.0, 1.0]);
        // tau q1_t - (q2_x - q3) = 0  ->  A row = (0,0,-1,0), B row = (0,0,0,-1)
        assert_eq!(sys.a()[1], vec![0.0, 0.0, -1.0, 0.0]);
        assert_eq!(sys.b()[1], vec![0.0, 0.0, 0.0, -1.0]);
        // tau q2_t - (q1_x - q2) = 0
        assert_eq!(sys.a()[2], vec![0.0, -1.0, 0.0, 0.0]);
        assert_eq!(sys.b()[2], vec![0.0, 0.0, -1.0, 0.0]);
        // tau q3_t + (q0_x - q1) = 0
        assert_eq!(sys.a()[3], vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sys.b()[3], vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn assembly_accepts_unstable_permutation() {
        let p = perm(&[&[1]]);
        let sys = assemble_system(&LinearModel::heat(), &p, 1.0).unwrap();
        assert_eq!(sys.b()[1][1], 1.0);
    }

    #[test]
    fn assembly_rejects_size_mismatch() {
        let p = stable_permutation(3, 1).unwrap();
        assert!(matches!(
            assemble_system(&LinearModel::heat(), &p, 1.0),
            Err(Error::SizeMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn general_linear_layout() {
        let model = LinearModel::new(3, 1, vec![0.5, 2.0, -3.0]).unwrap();
        let sys = stable_system(&model, 0.2).unwrap();
        assert_eq!(sys.a()[0], vec![2.0, -3.0, 1.0]);
        assert_eq!(sys.b()[0][0], -0.5);
    }

    #[test]
    fn model_validation() {
        assert!(LinearModel::new(3, 1, vec![-0.1, 0.0, 0.0]).is_err());
        assert!(LinearModel::new(3, 1, vec![0.0, 0.0]).is_err());
        assert!(LinearModel::new(3, 2, vec![0.0; 3]).is_err());
        assert_eq!(LinearModel::natural_sigma0(6), -1);
        assert_eq!(LinearModel::natural_sigma0(8), 1);
    }

    #[test]
    fn classify_examples() {
        assert!(classify_left_half_plane(&perm(&[&[-1]])));
        assert!(classify_left_half_plane(&perm(&[&[0, 1], &[-1, 0]])));
        assert!(!classify_left_half_plane(&perm(&[&[0, 1], &[1, 0]])));
        assert!(!classify_left_half_plane(&perm(&[&[1]])));
    }

    #[test]
    fn real_spectrum_examples() {
        assert!(has_real_spectrum_a(&stable_permutation(3, 1).unwrap(), 1));
        let minus_i = perm(&[&[-1, 0], &[0, -1]]);
        assert!(!has_real_spectrum_a(&minus_i, 1));
        let eig = eigenvalues_dense(&advective_permutation(&minus_i, 1).to_cmatrix()).unwrap();
        assert!(eig.max_abs_imag() > 0.5);
        assert!(has_real_spectrum_a(&perm(&[&[-1]]), -1));
    }

    #[test]
    fn generator_examples() {
        // m = 2 (heat), k = 1, tau = 0.5
        let sys = stable_system(&LinearModel::heat(), 0.5).unwrap();
        let l = relaxation_generator(&sys, 1.0).unwrap();
        let c = Complex64::new;
        assert_eq!(l[(0, 0)], c(0.0, 0.0));
        assert_eq!(l[(0, 1)], c(0.0, 0.5));
        assert_eq!(l[(1, 0)], c(0.0, 1.0));
        assert_eq!(l[(1, 1)], c(-1.0, 0.0));

        // m = 3, k = 0: first row zero, lower rows equal B's lower block
        let p = stable_permutation(3, 1).unwrap();
        let l0 = relaxation_generator_raw(&p, 1, 0.0, 0.7);
        let sys3 = stable_system(&LinearModel::linear_kdv(), 0.7).unwrap();
        for j in 0..3 {
            assert_eq!(l0[(0, j)], c(0.0, 0.0));
        }
        for i in 1..3 {
            for j in 0..3 {
                assert_eq!(l0[(i, j)], c(sys3.b()[i][j], 0.0));
            }
        }

        // m = 3, k = 2, tau = 0: null vector (1, 2i, -4)
        let l = relaxation_generator_raw(&p, 1, 2.0, 0.0);
        let r0 = vec![c(1.0, 0.0), c(0.0, 2.0), c(-4.0, 0.0)];
        let res = l.mul_vec(&r0);
        assert!(res.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn generator_matches_lambda_form() {
        for m in 2..=6 {
            let model = LinearModel::pure(m, LinearModel::natural_sigma0(m)).unwrap();
            let sys = stable_system(&model, 0.37).unwrap();
            let k = 1.3;
            let l = relaxation_generator(&sys, k).unwrap();
            // L = -i tau Lambda (kA + iB) = tau * M(k)
            let expected = sys.mode_matrix(k, 1.0).scale(Complex64::new(sys.tau(), 0.0));
            assert!((&l - &expected).max_abs() < 1e-15, "m = {m}");
        }
    }

    #[test]
    fn generator_requires_pure_model() {
        let model = LinearModel::new(3, 1, vec![0.0, 1.0, 0.0]).unwrap();
        let sys = stable_system(&model, 0.1).unwrap();
        assert!(matches!(relaxation_generator(&sys, 1.0), Err(Error::NotPureModel(_))));
    }

    #[test]
    fn stable_permutation_passes_both_conditions() {
        for m in 2..=8 {
            for sigma0 in [1, -1] {
                let Ok(p) = stable_permutation(m, sigma0) else { continue };
                assert!(classify_left_half_plane(&p), "m={m} sigma0={sigma0}");
                assert!(has_real_spectrum_a(&p, sigma0), "m={m} sigma0={sigma0}");
            }
        }
    }

    #[test]
    fn structure_of_stable_pure_systems() {
        for m in 2..=8 {
            let model = LinearModel::pure(m, LinearModel::natural_sigma0(m)).unwrap();
            let sys = stable_system(&model, 0.5).unwrap();
            let (a, b) = (sys.a(), sys.b());
            for i in 0..m {
                for j in 0..m {
                    assert_eq!(a[i][j], a[j][i], "A symmetric, m={m}");
                    if i != j {
                        assert_eq!(b[i][j], -b[j][i], "B skew off the diagonal, m={m}");
                    }
                }
                // Diagonal of B is 0 or -1 (P = R - D with D in {0, 1}).
                assert!(b[i][i] == 0.0 || b[i][i] == -1.0);
            }
            let diag_count = (0..m).filter(|&i| b[i][i] != 0.0).count();
            assert_eq!(diag_count, if m % 2 == 0 { 1 } else { 0 }, "m={m}");
        }
    }

    #[test]
    fn census_m3_has_eight_candidates_one_stable() {
        let cands = enumerate_candidates(3, 1).unwrap();
        assert_eq!(cands.len(), 8);
        let stable: Vec<_> = cands.iter().filter(|c| c.is_stable()).collect();
        assert_eq!(stable.len(), 1);
        assert_eq!(stable[0].permutation, stable_permutation(3, 1).unwrap());
    }

    #[test]
    fn census_m2() {
        let cands = enumerate_candidates(2, -1).unwrap();
        assert_eq!(cands.len(), 2);
        let plus = cands.iter().find(|c| c.permutation.sign()[0] == 1).unwrap();
        assert!(!plus.low_k && !plus.is_stable());
        assert_eq!(cands.iter().filter(|c| c.is_stable()).count(), 1);
    }

    #[test]
    fn census_too_large() {
        assert!(matches!(enumerate_candidates(9, 1), Err(Error::CensusTooLarge { .. })));
    }

    #[test]
    fn lemma_conditions_match_numerical_spectra() {
        for n in 1..=4 {
            for p in SignedPermutation::all(n) {
                let eig = eigenvalues_dense(&p.to_cmatrix()).unwrap();
                let max_re = eig.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(classify_left_half_plane(&p), max_re <= 1e-10, "{p}");
            }
        }
        for m in 2..=5 {
            for sigma0 in [1i8, -1] {
                for p in SignedPermutation::all(m - 1) {
                    let a = advective_permutation(&p, sigma0).to_cmatrix();
                    let eig = eigenvalues_dense(&a).unwrap();
                    let real = eig.max_abs_imag() <= 1e-10;
                    assert_eq!(has_real_spectrum_a(&p, sigma0), real, "{p} sigma0={sigma0}");
                    let symmetric = (&a - &a.transpose()).max_abs() == 0.0;
                    assert_eq!(real, symmetric);
                }
            }
        }
    }

    #[test]
    fn relaxation_rows_vanish_on_exact_modes_as_tau_goes_to_zero() {
        // q_j = (ik)^j u_hat(t), u_hat' = -sigma0 (ik)^m u_hat.
        for m in 2..=6 {
            let sigma0 = LinearModel::natural_sigma0(m);
            let model = LinearModel::pure(m, sigma0).unwrap();
            let k = 1.7;
            let ik = Complex64::new(0.0, k);
            let q: Vec<Complex64> = (0..m).map(|j| ik.powu(j as u32)).collect();
            let growth = -(sigma0 as f64) * ik.powu(m as u32);
            let residual_at = |tau: f64| -> f64 {
                let sys = stable_system(&model, tau.max(1e-300)).unwrap();
                let (a, b) = (sys.a_matrix(), sys.b_matrix());
                let aq = a.mul_vec(&q);
                let bq = b.mul_vec(&q);
                (1..m)
                    .map(|i| (tau * growth * q[i] + ik * aq[i] - bq[i]).norm())
                    .fold(0.0, f64::max)
            };
            assert_eq!(residual_at(0.0), 0.0);
            let r1 = residual_at(1e-2);
            let r2 = residual_at(5e-3);
            assert!(r1 > 0.0 && ((r1 / r2) - 2.0).abs() < 1e-9, "m={m}: {r1} {r2}");
        }
    }

    #[test]
    fn json_round_trip_with_integer_entries() {
        let sys = stable_system(&LinearModel::linear_kdv(), 0.01).unwrap();
        let v = sys.to_json();
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("\"P\":[[0,-1],[1,0]]"), "{text}");
        assert!(text.contains("\"A\":[[0,0,1],[0,-1,0],[1,0,0]]"), "{text}");
        let back = HyperbolicSystem::from_json(&v).unwrap();
        assert_eq!(back, sys);

        let mut bad = v.clone();
        bad["A"][0][0] = json!(5);
        assert!(HyperbolicSystem::from_json(&bad).is_err());
    }

    fn signed_permutation_strategy() -> impl Strategy<Value = SignedPermutation> {
        (1usize..7)
            .prop_flat_map(|n| {
                (
                    Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n),
                )
            })
            .prop_map(|(t, s)| SignedPermutation::new(t, s).unwrap())
    }

    proptest! {
        #[test]
        fn dense_form_has_one_nonzero_per_row_and_column(p in signed_permutation_strategy()) {
            let d = p.dense();
            let n = p.size();
            for row in &d {
                prop_assert_eq!(row.iter().filter(|v| **v != 0).count(), 1);
            }
            for c in 0..n {
                prop_assert_eq!(d.iter().filter(|row| row[c] != 0).count(), 1);
            }
            prop_assert_eq!(SignedPermutation::from_dense(&d).unwrap(), p.clone());
            let lens: usize = p.cycles().iter().map(SignedCycle::len).sum();
            prop_assert_eq!(lens, n);
        }

        #[test]
        fn json_round_trip(p in signed_permutation_strategy()) {
            let text = serde_json::to_string(&p).unwrap();
            let back: SignedPermutation = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
