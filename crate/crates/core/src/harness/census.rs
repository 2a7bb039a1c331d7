use serde::Serialize;

use crate::construction::{enumerate_candidates, stable_permutation, LinearModel, SignedPermutation};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusReport {
    pub m: usize,
    pub sigma0: i8,
    pub total_candidates: usize,
    pub low_k_pass: usize,
    pub high_k_pass: usize,
    pub full_pass: usize,
    /// The single candidate passing every check, if there is exactly one.
    pub unique_stable: Option<SignedPermutation>,
    /// `unique_stable` equals the closed-form stable permutation.
    pub matches_formula: bool,
}

/// Census for one `(m, sigma0)`.
pub fn census_one(m: usize, sigma0: i8) -> Result<CensusReport> {
    let cands = enumerate_candidates(m, sigma0)?;
    let count = |f: &dyn Fn(&crate::construction::Candidate) -> bool| cands.iter().filter(|c| f(c)).count();
    let stable: Vec<&SignedPermutation> = cands.iter().filter(|c| c.is_stable()).map(|c| &c.permutation).collect();
    let unique_stable = (stable.len() == 1).then(|| stable[0].clone());
    let formula = stable_permutation(m, sigma0)?;
    Ok(CensusReport {
        m,
        sigma0,
        total_candidates: cands.len(),
        low_k_pass: count(&|c| c.low_k),
        high_k_pass: count(&|c| c.high_k),
        full_pass: stable.len(),
        matches_formula: unique_stable.as_ref() == Some(&formula),
        unique_stable,
    })
}

/// Census over `ms`. Without an explicit `sigma0` each `m` uses
/// [`LinearModel::natural_sigma0`].
pub fn census(ms: impl IntoIterator<Item = usize>, sigma0: Option<i8>) -> Result<Vec<CensusReport>> {
    ms.into_iter()
        .map(|m| {
            if m < 2 {
                return Err(Error::InvalidModel(format!("m must be at least 2, got {m}")));
            }
            census_one(m, sigma0.unwrap_or_else(|| LinearModel::natural_sigma0(m)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_counts() {
        let reports = census(2..=4, None).unwrap();
        let totals: Vec<usize> = reports.iter().map(|r| r.total_candidates).collect();
        assert_eq!(totals, vec![2, 8, 48]);
        for r in &reports {
            assert_eq!(r.full_pass, 1, "m={}", r.m);
            assert!(r.matches_formula);
            assert!(r.full_pass <= r.low_k_pass.min(r.high_k_pass));
        }
    }

    #[test]
    fn odd_m_negative_sign() {
        let r = census_one(3, -1).unwrap();
        assert_eq!(r.full_pass, 1);
        assert!(r.matches_formula);
    }

    #[test]
    fn invalid_inputs() {
        assert!(census([1], None).is_err());
        assert!(matches!(census_one(4, -1), Err(Error::UnstableSign { .. })));
        assert!(matches!(census_one(10, 1), Err(Error::UnstableSign { .. }) | Err(Error::CensusTooLarge { .. })));
    }
}
