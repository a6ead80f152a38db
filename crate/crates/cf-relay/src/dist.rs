//! Edge-perspective degree distributions.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Fraction of edges attached to nodes of each degree. This is the decision
/// variable of all three code designs.
///
/// Invariants: every fraction is nonnegative, the fractions sum to one
/// (within 1e-9), and the support is finite with degrees >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDegreeDistribution {
    entries: BTreeMap<usize, f64>,
}

impl EdgeDegreeDistribution {
    /// Builds a distribution from (degree, edge fraction) pairs, dropping
    /// zero-mass entries and validating the invariants.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for &(d, v) in pairs {
            if d == 0 {
                return Err(Error::Domain("degree 0 is not allowed".into()));
            }
            if v < 0.0 || v.is_nan() {
                return Err(Error::Domain(format!(
                    "edge fraction for degree {d} must be nonnegative, got {v}"
                )));
            }
            if v > 0.0 {
                *entries.entry(d).or_insert(0.0) += v;
            }
        }
        let dist = EdgeDegreeDistribution { entries };
        dist.check_normalized()?;
        Ok(dist)
    }

    /// All edges on nodes of a single degree.
    pub fn regular(degree: usize) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(degree, 1.0);
        EdgeDegreeDistribution { entries }
    }

    fn check_normalized(&self) -> Result<()> {
        let total: f64 = self.entries.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "edge fractions must sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    /// Iterates over (degree, edge fraction) in ascending degree order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&d, &v)| (d, v))
    }

    pub fn fraction(&self, degree: usize) -> f64 {
        self.entries.get(&degree).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.entries.keys().next().copied().unwrap_or(0)
    }

    /// Sum of v_d / d. Node counts and design rates are all expressed
    /// through this quantity.
    pub fn inv_degree_mean(&self) -> f64 {
        self.iter().map(|(d, v)| v / d as f64).sum()
    }

    /// Sum of v_d * x^(d-1): the generating polynomial common to the
    /// mutual-information updates.
    pub fn eval_poly(&self, x: f64) -> f64 {
        self.iter()
            .map(|(d, v)| {
                if d == 1 {
                    v // x^0, including at x = 0
                } else {
                    v * x.powi(d as i32 - 1)
                }
            })
            .sum()
    }

    /// Sum of v_d * x^d.
    pub fn eval_poly_full(&self, x: f64) -> f64 {
        self.iter().map(|(d, v)| v * x.powi(d as i32)).sum()
    }

    /// Node-perspective fractions: the share of nodes (not edges) of each
    /// degree, proportional to v_d / d.
    pub fn node_fractions(&self) -> Vec<(usize, f64)> {
        let total = self.inv_degree_mean();
        self.iter().map(|(d, v)| (d, v / d as f64 / total)).collect()
    }
}

impl fmt::Display for EdgeDegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, v) in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{d}:{v:.6}")?;
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pairs_validates() {
        assert!(EdgeDegreeDistribution::from_pairs(&[(2, 0.5), (3, 0.5)]).is_ok());
        assert!(EdgeDegreeDistribution::from_pairs(&[(2, 0.5), (3, 0.4)]).is_err());
        assert!(EdgeDegreeDistribution::from_pairs(&[(2, -0.1), (3, 1.1)]).is_err());
        assert!(EdgeDegreeDistribution::from_pairs(&[(0, 1.0)]).is_err());
    }

    #[test]
    fn merges_duplicate_degrees() {
        let d = EdgeDegreeDistribution::from_pairs(&[(2, 0.25), (2, 0.25), (4, 0.5)]).unwrap();
        assert_eq!(d.fraction(2), 0.5);
    }

    #[test]
    fn inv_degree_mean_and_polys() {
        let d = EdgeDegreeDistribution::from_pairs(&[(2, 0.5), (4, 0.5)]).unwrap();
        assert!((d.inv_degree_mean() - (0.25 + 0.125)).abs() < 1e-15);
        // 0.5 x + 0.5 x^3 at x = 0.5
        assert!((d.eval_poly(0.5) - (0.25 + 0.0625)).abs() < 1e-15);
        assert!((d.eval_poly_full(0.5) - (0.125 + 0.03125)).abs() < 1e-15);
    }

    #[test]
    fn degree_one_counts_at_zero() {
        let d = EdgeDegreeDistribution::from_pairs(&[(1, 0.25), (2, 0.75)]).unwrap();
        assert_eq!(d.eval_poly(0.0), 0.25);
        assert_eq!(d.min_degree(), 1);
    }

    #[test]
    fn node_fractions_sum_to_one() {
        let d = EdgeDegreeDistribution::from_pairs(&[(2, 0.3), (3, 0.3), (10, 0.4)]).unwrap();
        let total: f64 = d.node_fractions().iter().map(|&(_, f)| f).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
