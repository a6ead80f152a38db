//! Binary-erasure broadcast channel from the source to relay and destination,
//! plus the information-theoretic reference quantities the rest of the crate
//! designs against.
//!
//! The source bit is copied to each receiver independently; each link erases
//! its copy with probability `epsilon`. Erasures on the two links are drawn
//! independently per position (the conditional law factorizes as a product of
//! two erasure channels), with one draw per link sharing the transmitted bit.
//!
//! Note on `binary_entropy`: the standard nonnegative definition
//! H2(p) = -p*log2(p) - (1-p)*log2(1-p) is used throughout. Some write-ups
//! drop the leading minus signs; the quantity intended is always the
//! nonnegative entropy and that is what this module computes.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// One received symbol: the transmitted bit, or an erasure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TernarySymbol {
    Zero,
    One,
    Erased,
}

impl TernarySymbol {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            TernarySymbol::One
        } else {
            TernarySymbol::Zero
        }
    }

    /// The carried bit, or `None` for an erasure.
    pub fn bit(self) -> Option<bool> {
        match self {
            TernarySymbol::Zero => Some(false),
            TernarySymbol::One => Some(true),
            TernarySymbol::Erased => None,
        }
    }

    pub fn is_erased(self) -> bool {
        matches!(self, TernarySymbol::Erased)
    }

    /// Index into probability tables: 0, 1, E -> 0, 1, 2.
    pub fn index(self) -> usize {
        match self {
            TernarySymbol::Zero => 0,
            TernarySymbol::One => 1,
            TernarySymbol::Erased => 2,
        }
    }
}

/// Channel parameters: the per-link erasure probability and the seed that
/// makes erasure draws reproducible.
#[derive(Debug, Clone, Copy)]
pub struct ChannelParams {
    pub epsilon: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn new(epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
            return Err(Error::Domain(format!(
                "erasure probability must lie in [0,1], got {epsilon}"
            )));
        }
        Ok(ChannelParams { epsilon, seed })
    }
}

/// Conditional law p(y_r, y_d | x_s) as two 3x3 tables, one per source bit.
/// Rows are indexed by y_d, columns by y_r, both in the order (0, 1, E).
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub given_zero: [[f64; 3]; 3],
    pub given_one: [[f64; 3]; 3],
}

impl JointTable {
    /// p(y_d, y_r | x_s).
    pub fn prob(&self, x_s: bool, y_d: TernarySymbol, y_r: TernarySymbol) -> f64 {
        let t = if x_s { &self.given_one } else { &self.given_zero };
        t[y_d.index()][y_r.index()]
    }

    /// Joint law p(y_d, y_r) under a uniform source bit.
    pub fn joint_uniform(&self) -> [[f64; 3]; 3] {
        let mut j = [[0.0; 3]; 3];
        for d in 0..3 {
            for r in 0..3 {
                j[d][r] = 0.5 * (self.given_zero[d][r] + self.given_one[d][r]);
            }
        }
        j
    }
}

/// Builds the conditional table: the destination and relay copies are erased
/// independently, so the entries are (1-e)^2, (1-e)e and e^2 with every
/// cell that would require receiving the complement of x_s equal to zero.
/// The x_s = 1 table is the x_s = 0 table with the 0 and 1 values exchanged.
pub fn joint_table(params: ChannelParams) -> JointTable {
    let e = params.epsilon;
    let c = 1.0 - e;
    // given_zero[y_d][y_r], order (0, 1, E)
    let given_zero = [
        [c * c, 0.0, c * e],
        [0.0, 0.0, 0.0],
        [e * c, 0.0, e * e],
    ];
    // exchange the roles of 0 and 1 on both axes
    let mut given_one = [[0.0; 3]; 3];
    let swap = |i: usize| match i {
        0 => 1,
        1 => 0,
        other => other,
    };
    for d in 0..3 {
        for r in 0..3 {
            given_one[swap(d)][swap(r)] = given_zero[d][r];
        }
    }
    JointTable {
        given_zero,
        given_one,
    }
}

/// Sends `x_s` over both links. Returns (y_r, y_d). Each position on each
/// link is erased independently with probability epsilon; outputs are
/// deterministic given the seed.
pub fn broadcast_transmit(
    x_s: &[bool],
    params: ChannelParams,
) -> (Vec<TernarySymbol>, Vec<TernarySymbol>) {
    assert!(!x_s.is_empty(), "broadcast_transmit requires a nonempty input");
    let mut rng_r = Rng::from_seed(params.seed);
    let mut rng_d = Rng::from_seed(params.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let y_r = x_s
        .iter()
        .map(|&b| {
            if rng_r.gen_bool(params.epsilon) {
                TernarySymbol::Erased
            } else {
                TernarySymbol::from_bit(b)
            }
        })
        .collect();
    let y_d = x_s
        .iter()
        .map(|&b| {
            if rng_d.gen_bool(params.epsilon) {
                TernarySymbol::Erased
            } else {
                TernarySymbol::from_bit(b)
            }
        })
        .collect();
    (y_r, y_d)
}

/// Nonnegative binary entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Domain(format!(
            "binary_entropy argument must lie in [0,1], got {p}"
        )));
    }
    Ok(h2_unchecked(p))
}

#[inline]
pub(crate) fn h2_unchecked(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

/// The reference quantities every experiment is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRates {
    /// Rate ceiling when the relay must fully decode: 1 - epsilon.
    pub df_bound: f64,
    /// Cut-set bound, reachable by lossless compress-and-forward: 1 - epsilon^2.
    pub cutset_bound: f64,
    /// Entropy of the relay observation under a uniform source, bits/symbol.
    pub h_yr: f64,
    /// Conditional entropy H(y_r | y_d): the lossless compression limit with
    /// the destination observation as side information.
    pub h_yr_given_yd: f64,
    /// Floor on the quantizer rate of a lossless two-bit mapping: 2 - epsilon.
    pub ldgm_rate_floor: f64,
}

/// Computes the reference rates. `h_yr_given_yd` is summed exactly over the
/// nine cells of the joint table under a uniform source bit.
pub fn reference_rates(params: ChannelParams) -> ReferenceRates {
    let e = params.epsilon;
    let table = joint_table(params);
    let joint = table.joint_uniform();

    // marginal of y_d
    let mut p_yd = [0.0; 3];
    for d in 0..3 {
        for r in 0..3 {
            p_yd[d] += joint[d][r];
        }
    }
    // H(y_r, y_d) and H(y_d), then H(y_r | y_d) = H(y_r, y_d) - H(y_d)
    let ent = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    let mut h_joint = 0.0;
    for d in 0..3 {
        for r in 0..3 {
            h_joint += ent(joint[d][r]);
        }
    }
    let h_yd: f64 = p_yd.iter().map(|&p| ent(p)).sum();
    let h_yr_given_yd = h_joint - h_yd;

    // H(y_r): y_r is 0 or 1 with probability (1-e)/2 each, E with probability e.
    let h_yr = 2.0 * ent((1.0 - e) / 2.0) + ent(e);

    ReferenceRates {
        df_bound: 1.0 - e,
        cutset_bound: 1.0 - e * e,
        h_yr,
        h_yr_given_yd,
        ldgm_rate_floor: 2.0 - e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(e: f64) -> ChannelParams {
        ChannelParams::new(e, 1234).unwrap()
    }

    #[test]
    fn rejects_epsilon_outside_unit_interval() {
        assert!(ChannelParams::new(-0.1, 0).is_err());
        assert!(ChannelParams::new(1.1, 0).is_err());
        assert!(ChannelParams::new(f64::NAN, 0).is_err());
    }

    #[test]
    fn joint_table_half() {
        let t = joint_table(params(0.5));
        assert!((t.prob(false, TernarySymbol::Zero, TernarySymbol::Zero) - 0.25).abs() < 1e-15);
        assert!((t.prob(false, TernarySymbol::Erased, TernarySymbol::Erased) - 0.25).abs() < 1e-15);
        assert_eq!(t.prob(false, TernarySymbol::Zero, TernarySymbol::One), 0.0);
    }

    #[test]
    fn joint_table_noiseless() {
        let t = joint_table(params(0.0));
        assert_eq!(t.prob(false, TernarySymbol::Zero, TernarySymbol::Zero), 1.0);
        assert_eq!(t.prob(true, TernarySymbol::One, TernarySymbol::One), 1.0);
        let sum_off: f64 = (0..3)
            .flat_map(|d| (0..3).map(move |r| (d, r)))
            .filter(|&(d, r)| !(d == 0 && r == 0))
            .map(|(d, r)| t.given_zero[d][r])
            .sum();
        assert_eq!(sum_off, 0.0);
    }

    #[test]
    fn joint_table_point_three() {
        let t = joint_table(params(0.3));
        // p(y_d = E, y_r = 0 | x_s = 0) = (1 - e) * e
        assert!((t.prob(false, TernarySymbol::Erased, TernarySymbol::Zero) - 0.21).abs() < 1e-15);
    }

    #[test]
    fn joint_table_rows_sum_to_one_and_swap_symmetry() {
        for &e in &[0.0, 0.1, 0.25, 0.5, 0.9, 1.0] {
            let t = joint_table(params(e));
            for table in [&t.given_zero, &t.given_one] {
                let total: f64 = table.iter().flatten().sum();
                assert!((total - 1.0).abs() < 1e-12, "e={e}");
                assert!(table.iter().flatten().all(|&p| p >= 0.0));
            }
            // x_s = 1 table is the 0<->1 exchange of the x_s = 0 table
            assert_eq!(t.given_one[1][1], t.given_zero[0][0]);
            assert_eq!(t.given_one[2][1], t.given_zero[2][0]);
            assert_eq!(t.given_one[1][2], t.given_zero[0][2]);
        }
    }

    #[test]
    fn joint_table_marginals_are_single_link_bec() {
        // summing over y_r must give the erasure-channel law of y_d, and
        // vice versa, for every epsilon
        for &e in &[0.0, 0.2, 0.5, 0.77, 1.0] {
            let t = joint_table(params(e));
            for (x_s, table) in [(false, &t.given_zero), (true, &t.given_one)] {
                let copy = if x_s { 1 } else { 0 };
                for axis in 0..2 {
                    let mut marg = [0.0; 3];
                    for d in 0..3 {
                        for r in 0..3 {
                            let kept = if axis == 0 { d } else { r };
                            marg[kept] += table[d][r];
                        }
                    }
                    assert!((marg[copy] - (1.0 - e)).abs() < 1e-12);
                    assert!((marg[1 - copy]).abs() < 1e-12);
                    assert!((marg[2] - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transmit_noiseless_and_fully_erased() {
        let x = vec![false, true, true];
        let (y_r, y_d) = broadcast_transmit(&x, params(0.0));
        assert_eq!(
            y_r,
            vec![TernarySymbol::Zero, TernarySymbol::One, TernarySymbol::One]
        );
        assert_eq!(y_r, y_d);

        let (y_r, y_d) = broadcast_transmit(&x, params(1.0));
        assert!(y_r.iter().all(|s| s.is_erased()));
        assert!(y_d.iter().all(|s| s.is_erased()));
    }

    #[test]
    fn transmit_matches_joint_law_empirically() {
        // law of large numbers against the conditional table at e = 0.5
        let n = 100_000;
        let p = params(0.5);
        let x: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let (y_r, y_d) = broadcast_transmit(&x, p);
        assert_eq!(y_r.len(), n);
        assert_eq!(y_d.len(), n);

        let frac_r = y_r.iter().filter(|s| s.is_erased()).count() as f64 / n as f64;
        let frac_d = y_d.iter().filter(|s| s.is_erased()).count() as f64 / n as f64;
        assert!((frac_r - 0.5).abs() < 0.01, "relay erasure fraction {frac_r}");
        assert!((frac_d - 0.5).abs() < 0.01, "dest erasure fraction {frac_d}");

        let table = joint_table(p);
        let mut counts = [[[0usize; 3]; 3]; 2];
        for i in 0..n {
            counts[x[i] as usize][y_d[i].index()][y_r[i].index()] += 1;
        }
        for xs in 0..2 {
            let total: usize = counts[xs].iter().flatten().sum();
            for d in 0..3 {
                for r in 0..3 {
                    let emp = counts[xs][d][r] as f64 / total as f64;
                    let t = if xs == 1 {
                        table.given_one[d][r]
                    } else {
                        table.given_zero[d][r]
                    };
                    assert!((emp - t).abs() < 0.01, "x_s={xs} cell ({d},{r}): {emp} vs {t}");
                }
            }
        }
    }

    #[test]
    fn transmit_is_deterministic_given_seed() {
        let x: Vec<bool> = (0..512).map(|i| i % 3 == 0).collect();
        let a = broadcast_transmit(&x, params(0.4));
        let b = broadcast_transmit(&x, params(0.4));
        assert_eq!(a, b);
        let c = broadcast_transmit(&x, ChannelParams::new(0.4, 999).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let h = binary_entropy(0.003).unwrap();
        assert!((h - 0.0295).abs() < 0.0005, "H2(0.003) = {h}");
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn entropy_symmetric_and_peaked() {
        for &p in &[0.01, 0.1, 0.25, 0.4] {
            let a = binary_entropy(p).unwrap();
            let b = binary_entropy(1.0 - p).unwrap();
            assert!((a - b).abs() < 1e-14);
            assert!(a < 1.0);
        }
    }

    #[test]
    fn reference_rates_half() {
        let r = reference_rates(params(0.5));
        assert!((r.cutset_bound - 0.75).abs() < 1e-12);
        assert!((r.h_yr_given_yd - 1.25).abs() < 1e-12);
        assert!((r.h_yr - 1.5).abs() < 1e-12);
        assert!((r.ldgm_rate_floor - 1.5).abs() < 1e-12);
        assert!((r.df_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reference_rates_noiseless() {
        let r = reference_rates(params(0.0));
        assert!((r.df_bound - 1.0).abs() < 1e-12);
        assert!((r.cutset_bound - 1.0).abs() < 1e-12);
        assert!(r.h_yr_given_yd.abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_closed_form_agreement() {
        // closed form: H(y_r | y_d) = (1-e) H2(e) + e H(y_r)
        for &e in &[0.1, 0.3, 0.5, 0.8] {
            let r = reference_rates(params(e));
            let h_yr = 2.0 * {
                let p = (1.0 - e) / 2.0;
                if p > 0.0 { -p * p.log2() } else { 0.0 }
            } + if e > 0.0 { -e * e.log2() } else { 0.0 };
            let closed = (1.0 - e) * h2_unchecked(e) + e * h_yr;
            assert!(
                (r.h_yr_given_yd - closed).abs() < 1e-12,
                "e={e}: {} vs {closed}",
                r.h_yr_given_yd
            );
        }
    }

    #[test]
    fn conditioning_reduces_entropy_and_bounds_order() {
        let mut e = 0.0;
        while e <= 1.0 {
            let r = reference_rates(params(e));
            assert!(r.h_yr_given_yd <= r.h_yr + 1e-12, "e={e}");
            assert!(r.cutset_bound >= r.df_bound - 1e-15, "e={e}");
            e += 0.01;
        }
    }
}
