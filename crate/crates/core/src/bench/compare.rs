//! Agreement between two sets of taper results matched by airway id.

use serde::{Deserialize, Serialize};

use super::stats::{bland_altman, icc, wilcoxon_ranksum, AgreementStats, Icc};
use crate::taper::TaperResult;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaperComparison {
    pub n: usize,
    /// Agreement of `b` against `a`.
    pub agreement: AgreementStats,
    pub icc: Icc,
    /// Rank-sum test between the two populations.
    pub wilcoxon_p: f64,
    /// Airway ids present in only one of the sets.
    pub unmatched: Vec<String>,
}

pub fn compare_tapers(a: &[TaperResult], b: &[TaperResult]) -> Result<TaperComparison> {
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for ra in a {
        match b.iter().find(|rb| rb.airway_id == ra.airway_id) {
            Some(rb) => pairs.push((ra.taper, rb.taper)),
            None => unmatched.push(ra.airway_id.clone()),
        }
    }
    unmatched.extend(
        b.iter()
            .filter(|rb| !a.iter().any(|ra| ra.airway_id == rb.airway_id))
            .map(|rb| rb.airway_id.clone()),
    );
    if pairs.len() < 2 {
        return Err(Error::InvalidStatistics(format!("only {} matched airways", pairs.len())));
    }
    let xa: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let xb: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(TaperComparison {
        n: pairs.len(),
        agreement: bland_altman(&xb, &xa)?,
        icc: icc(&pairs)?,
        wilcoxon_p: wilcoxon_ranksum(&xa, &xb)?,
        unmatched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(id: &str, taper: f64) -> TaperResult {
        TaperResult {
            airway_id: id.into(),
            taper,
            log_a: 3.0,
            s_err: 0.01,
            n: 50,
            fitted: Vec::new(),
        }
    }

    #[test]
    fn matches_by_id() {
        let a = vec![result("x", -0.02), result("y", -0.03), result("z", -0.01), result("only_a", 0.0)];
        let b = vec![result("z", -0.012), result("x", -0.022), result("y", -0.032), result("only_b", 0.0)];
        let c = compare_tapers(&a, &b).unwrap();
        assert_eq!(c.n, 3);
        assert!((c.agreement.bias + 0.002).abs() < 1e-12);
        assert!(c.agreement.sd < 1e-12);
        assert_eq!(c.unmatched, vec!["only_a".to_string(), "only_b".to_string()]);
        assert!(c.icc.value > 0.9);
        assert!(compare_tapers(&a[..1], &b).is_err());
    }
}
