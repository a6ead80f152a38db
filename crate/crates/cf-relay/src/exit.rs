//! Mutual-information curve evaluators for code design.
//!
//! All functions here are deterministic and pure: the extrinsic-information
//! updates of the source code (q- and s-nodes), the fixed-point form of the
//! quantizer's b-node update, and the decoder-side EBP curve of the quantizer
//! with side information. The design LPs in [`crate::design`] sample these on
//! a grid; re-evaluating on any denser grid reproduces the same values at
//! shared abscissae because everything is closed-form.

use crate::channel::h2_unchecked;
use crate::dist::EdgeDegreeDistribution;
use crate::error::{Error, Result};
use std::io::Write;

/// A sampled curve of mutual-information pairs.
///
/// The abscissa grid is strictly ascending and all values lie in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ExitCurve {
    grid: Vec<f64>,
    values: Vec<f64>,
    label: String,
}

impl ExitCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Domain(format!(
                "curve grid and values differ in length: {} vs {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::Domain("curve needs at least two points".into()));
        }
        for w in grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Domain(format!(
                    "curve grid must ascend strictly: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for &v in grid.iter().chain(values.iter()) {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::Domain(format!("curve entry {v} outside [0,1]")));
            }
        }
        Ok(ExitCurve {
            grid,
            values,
            label: label.into(),
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// First abscissa whose ordinate is at least `y`, if any.
    pub fn first_abscissa_reaching(&self, y: f64) -> Option<f64> {
        self.grid
            .iter()
            .zip(&self.values)
            .find(|&(_, &v)| v >= y)
            .map(|(&x, _)| x)
    }

    /// Piecewise-linear interpolation, clamped to the end values outside the
    /// abscissa range.
    pub fn interpolate(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return self.values[0];
        }
        if x >= *self.grid.last().unwrap() {
            return *self.values.last().unwrap();
        }
        // binary search for the bracketing segment
        let mut lo = 0;
        let mut hi = self.grid.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.grid[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (x0, x1) = (self.grid[lo], self.grid[hi]);
        let (y0, y1) = (self.values[lo], self.values[hi]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// `n` uniform points covering [0, 1] inclusive.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Extrinsic information out of the variable (q) nodes of the source code:
/// I_qs = 1 - (1 - I_q,pri) * sum_d v_qd (1 - I_sq)^(d-1).
///
/// Monotone nondecreasing in both `i_q_pri` and `i_sq`.
pub fn exit_q(dist: &EdgeDegreeDistribution, i_q_pri: f64, i_sq: f64) -> f64 {
    1.0 - (1.0 - i_q_pri) * dist.eval_poly(1.0 - i_sq)
}

/// Inverse check (s) node map of the source code: the q-to-s information the
/// previous iteration must have carried to produce `i_sq` from a regular
/// degree-`d_s` check, i.e. I_sq^(1/(d_s-1)).
pub fn exit_s(i_sq: f64, d_s: usize) -> f64 {
    debug_assert!(d_s >= 2);
    if i_sq <= 0.0 {
        0.0
    } else {
        i_sq.powf(1.0 / (d_s - 1) as f64)
    }
}

/// Encoder-side fixed point of the quantizer's b-nodes: the prior information
/// the b-nodes must hold for the system to sit at b-to-c information `i_bc`.
///
/// I_cb = i_yc * sum_d v_cd * i_bc^(d-1), then
/// I_bc,pri = 1 - (1 - i_bc) / (1 - I_cb)^(d_b - 1).
///
/// The return value never exceeds 1 but may be negative (including -inf when
/// I_cb saturates); a negative value signals that the fixed point `i_bc` is
/// not reachable, i.e. the monotonic condition is violated there.
pub fn ldgm_encoder_fixed_point(
    dist_c: &EdgeDegreeDistribution,
    d_b: usize,
    i_yc: f64,
    i_bc: f64,
) -> f64 {
    debug_assert!(d_b >= 2);
    if i_bc >= 1.0 {
        return 1.0;
    }
    let i_cb = i_yc * dist_c.eval_poly(i_bc);
    let denom = (1.0 - i_cb).powi(d_b as i32 - 1);
    if denom <= 0.0 {
        return f64::NEG_INFINITY;
    }
    1.0 - (1.0 - i_bc) / denom
}

/// The three side-information quantities the decoder-side design needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideInfoMi {
    /// Per-bit information the destination observation gives about a mapped
    /// bit on its own.
    pub i_c0: f64,
    /// Per-bit information once the sibling bit of the pair is fully known.
    pub i_c1: f64,
    /// Encoder-side prior at the relay: 1 - 0.5 * epsilon.
    pub i_yc: f64,
}

/// Index of a ternary outcome: 0, 1, erased -> 0, 1, 2.
const ERASED: usize = 2;

/// Computes the side-information quantities by exact enumeration.
///
/// The joint law of (mapped bit pair, destination symbol) is enumerated over
/// the source bit, the two independent link erasures and a uniform free bit
/// filling the don't-care position of erased pairs. The shared dither is a
/// known XOR offset at both ends, so all informations are computed on the
/// dither-free pair. Conventions fixed here:
///
/// - `i_c0` is the average over the two pair positions of I(bit; y_d).
/// - `i_c1` is the average over the two positions of I(bit; y_d | sibling).
pub fn side_info_mi(epsilon: f64) -> Result<SideInfoMi> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(Error::Domain(format!(
            "erasure probability must lie in [0,1], got {epsilon}"
        )));
    }
    // joint[c1][c2][y_d]
    let mut joint = [[[0.0_f64; 3]; 2]; 2];
    for x_s in 0..2usize {
        let w_x = 0.5;
        for e_r in 0..2usize {
            let w_r = if e_r == 1 { epsilon } else { 1.0 - epsilon };
            for e_d in 0..2usize {
                let w_d = if e_d == 1 { epsilon } else { 1.0 - epsilon };
                let y_d = if e_d == 1 { ERASED } else { x_s };
                if e_r == 1 {
                    // erased relay symbol maps to (1, *): the free position is
                    // filled uniformly
                    for u in 0..2usize {
                        joint[1][u][y_d] += w_x * w_r * w_d * 0.5;
                    }
                } else {
                    // intact relay symbol x_s maps to (0, x_s)
                    joint[0][x_s][y_d] += w_x * w_r * w_d;
                }
            }
        }
    }

    let ent = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };

    // I(bit; y_d) for one position, marginalizing the other
    let mi_single = |pos: usize| -> f64 {
        let mut p_by = [[0.0; 3]; 2]; // [bit][y_d]
        for c1 in 0..2 {
            for c2 in 0..2 {
                for y in 0..3 {
                    let bit = if pos == 0 { c1 } else { c2 };
                    p_by[bit][y] += joint[c1][c2][y];
                }
            }
        }
        let mut h_b = 0.0;
        let mut h_y = 0.0;
        let mut h_by = 0.0;
        let mut p_b = [0.0; 2];
        let mut p_y = [0.0; 3];
        for b in 0..2 {
            for y in 0..3 {
                p_b[b] += p_by[b][y];
                p_y[y] += p_by[b][y];
                h_by += ent(p_by[b][y]);
            }
        }
        for b in 0..2 {
            h_b += ent(p_b[b]);
        }
        for y in 0..3 {
            h_y += ent(p_y[y]);
        }
        h_b + h_y - h_by
    };

    // I(bit; y_d | sibling) for one position
    let mi_conditional = |pos: usize| -> f64 {
        let mut total = 0.0;
        for sib in 0..2usize {
            // conditional table p(bit, y_d | sibling = sib)
            let mut p_by = [[0.0; 3]; 2];
            let mut p_sib = 0.0;
            for c1 in 0..2 {
                for c2 in 0..2 {
                    let (bit, s) = if pos == 0 { (c1, c2) } else { (c2, c1) };
                    if s != sib {
                        continue;
                    }
                    for y in 0..3 {
                        p_by[bit][y] += joint[c1][c2][y];
                        p_sib += joint[c1][c2][y];
                    }
                }
            }
            if p_sib <= 0.0 {
                continue;
            }
            let mut h_b = 0.0;
            let mut h_y = 0.0;
            let mut h_by = 0.0;
            let mut p_b = [0.0; 2];
            let mut p_y = [0.0; 3];
            for b in 0..2 {
                for y in 0..3 {
                    let p = p_by[b][y] / p_sib;
                    p_b[b] += p;
                    p_y[y] += p;
                    h_by += ent(p);
                }
            }
            for b in 0..2 {
                h_b += ent(p_b[b]);
            }
            for y in 0..3 {
                h_y += ent(p_y[y]);
            }
            total += p_sib * (h_b + h_y - h_by);
        }
        total
    };

    let i_c0 = 0.5 * (mi_single(0) + mi_single(1));
    let i_c1 = 0.5 * (mi_conditional(0) + mi_conditional(1));
    Ok(SideInfoMi {
        i_c0,
        i_c1,
        i_yc: 1.0 - 0.5 * epsilon,
    })
}

/// One point of the decoder-side quantizer analysis, before any clamping.
#[derive(Debug, Clone, Copy)]
pub struct EbpSample {
    /// The b-to-c information this fixed point corresponds to.
    pub i_bc: f64,
    /// Prior into the b-nodes required to hold the fixed point. May be
    /// negative where the syndrome side provides surplus information.
    pub pri: f64,
    /// Extrinsic information out of the b-nodes at the fixed point.
    pub ext: f64,
}

/// Raw decoder-side EBP samples of the quantizer over an `i_bc` grid.
///
/// Per grid value: the side-information message I_yc,d = i_c0 (1 - I_bc^d)
/// + i_c1 I_bc^d for each degree, I_cb = sum_d v_cd I_yc,d I_bc^(d-1), then
/// ext = 1 - (1 - I_cb)^d_b and pri = 1 - (1 - I_bc) / (1 - I_cb)^(d_b - 1).
pub fn ldgm_decoder_ebp_samples(
    dist_c: &EdgeDegreeDistribution,
    d_b: usize,
    si: &SideInfoMi,
    grid: &[f64],
) -> Vec<EbpSample> {
    grid.iter()
        .map(|&i_bc| {
            let mut i_cb = 0.0;
            for (d, v) in dist_c.iter() {
                let pow_d = i_bc.powi(d as i32);
                let i_ycd = si.i_c0 * (1.0 - pow_d) + si.i_c1 * pow_d;
                let pow_dm1 = if d == 1 { 1.0 } else { i_bc.powi(d as i32 - 1) };
                i_cb += v * i_ycd * pow_dm1;
            }
            let ext = 1.0 - (1.0 - i_cb).powi(d_b as i32);
            let denom = (1.0 - i_cb).powi(d_b as i32 - 1);
            let pri = if i_bc >= 1.0 {
                1.0
            } else if denom <= 0.0 {
                f64::NEG_INFINITY
            } else {
                1.0 - (1.0 - i_bc) / denom
            };
            EbpSample { i_bc, pri, ext }
        })
        .collect()
}

/// Decoder-side EBP curve of the quantizer: prior in, extrinsic out.
///
/// Priors are clamped to [0, 1] and the abscissa sequence is monotonized by
/// running maximum (merging ties at the greatest ordinate), so the result is
/// always a valid curve. For distributions satisfying the encoder design
/// constraints the samples are already monotone and the curve is exact.
pub fn ldgm_decoder_ebp(
    dist_c: &EdgeDegreeDistribution,
    d_b: usize,
    si: &SideInfoMi,
    grid: &[f64],
) -> Result<ExitCurve> {
    let samples = ldgm_decoder_ebp_samples(dist_c, d_b, si, grid);
    let mut xs: Vec<f64> = Vec::with_capacity(samples.len());
    let mut ys: Vec<f64> = Vec::with_capacity(samples.len());
    let mut running = 0.0_f64;
    for s in &samples {
        let pri = s.pri.clamp(0.0, 1.0);
        running = running.max(pri);
        let ext = s.ext.clamp(0.0, 1.0);
        if let Some(last_x) = xs.last().copied() {
            if running <= last_x {
                // merge duplicate abscissa at the larger ordinate
                let last_y = ys.last_mut().unwrap();
                *last_y = last_y.max(ext);
                continue;
            }
        }
        xs.push(running);
        ys.push(ext);
    }
    ExitCurve::new(xs, ys, "ldgm_ebp")
}

/// Writes a curve as CSV: a `x,y,label` header then one row per point with
/// 12 significant digits.
pub fn export_curve<W: Write>(curve: &ExitCurve, sink: &mut W) -> Result<()> {
    writeln!(sink, "x,y,label")?;
    for (x, y) in curve.grid().iter().zip(curve.values()) {
        writeln!(sink, "{:.11e},{:.11e},{}", x, y, curve.label())?;
    }
    Ok(())
}

/// Parses CSV produced by [`export_curve`]. Lines starting with `#` are
/// ignored so callers may prepend provenance comments.
pub fn parse_curve_csv(text: &str) -> Result<Vec<(f64, f64, String)>> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "x,y,label" {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected header `x,y,label`, got {trimmed:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let mut parts = trimmed.splitn(3, ',');
        let x = parts
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or(Error::Parse {
                line: line_no,
                msg: "bad x field".into(),
            })?;
        let y = parts
            .next()
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or(Error::Parse {
                line: line_no,
                msg: "bad y field".into(),
            })?;
        let label = parts
            .next()
            .ok_or(Error::Parse {
                line: line_no,
                msg: "missing label field".into(),
            })?
            .to_string();
        rows.push((x, y, label));
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            msg: "empty curve file".into(),
        });
    }
    Ok(rows)
}

/// Exact closed forms for the side information at a given erasure rate,
/// used as the independent cross-check of the enumeration.
pub fn side_info_closed_form(epsilon: f64) -> (f64, f64) {
    let e = epsilon;
    // First position carries the erasure indicator, independent of y_d.
    // Second position: known y_d pins the bit unless the pair was erased and
    // refilled, so I = (1-e) * (1 - H2(1 - e/2)).
    let i_c0 = 0.5 * (1.0 - e) * (1.0 - h2_unchecked(1.0 - 0.5 * e));
    // Given the second bit: sibling = 1 certifies an erasure; otherwise the
    // erasure indicator keeps entropy H2(q) with q = (e/2) / (1 - e/2).
    let q = (0.5 * e) / (1.0 - 0.5 * e).max(f64::MIN_POSITIVE);
    let i1 = (1.0 - e) * (h2_unchecked(e) - (1.0 - 0.5 * e) * h2_unchecked(q.min(1.0)));
    // Given the first bit: an intact pair (probability 1-e) reveals the
    // source bit, which y_d matches unless erased.
    let i2 = (1.0 - e) * (1.0 - e);
    let i_c1 = 0.5 * (i1 + i2);
    (i_c0, i_c1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(usize, f64)]) -> EdgeDegreeDistribution {
        EdgeDegreeDistribution::from_pairs(pairs).unwrap()
    }

    #[test]
    fn exit_q_saturates_and_passes_prior() {
        let d = dist(&[(2, 0.4), (5, 0.6)]);
        assert!((exit_q(&d, 0.3, 1.0) - 1.0).abs() < 1e-15);
        assert!((exit_q(&d, 0.3, 0.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn exit_q_hand_value() {
        let d = dist(&[(2, 1.0)]);
        // 1 - 0.25 * 0.5 = 0.875
        assert!((exit_q(&d, 0.75, 0.5) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn exit_q_monotone() {
        let d = dist(&[(2, 0.5), (7, 0.5)]);
        let mut prev = -1.0;
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let v = exit_q(&d, 0.6, x);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!(exit_q(&d, 0.7, 0.4) >= exit_q(&d, 0.6, 0.4));
    }

    #[test]
    fn exit_s_examples() {
        assert_eq!(exit_s(1.0, 16), 1.0);
        assert_eq!(exit_s(0.0, 16), 0.0);
        let v = exit_s(0.5, 16);
        assert!((v - 0.5f64.powf(1.0 / 15.0)).abs() < 1e-15);
        assert!((v - 0.9548).abs() < 1e-4, "got {v}");
    }

    #[test]
    fn encoder_fixed_point_examples() {
        let d2 = dist(&[(2, 1.0)]);
        // saturation at i_bc = 1
        assert_eq!(ldgm_encoder_fixed_point(&d2, 6, 0.75, 1.0), 1.0);
        // origin with no degree-1 mass
        assert_eq!(ldgm_encoder_fixed_point(&d2, 6, 0.75, 0.0), 0.0);
        // hand evaluation: I_cb = 0.375, pri = 1 - 0.5 / 0.625^5
        let v = ldgm_encoder_fixed_point(&d2, 6, 0.75, 0.5);
        assert!((v - (1.0 - 0.5 / 0.625f64.powi(5))).abs() < 1e-12);
        assert!((v + 4.2429).abs() < 1e-3, "got {v}");
    }

    #[test]
    fn side_info_at_half_matches_closed_form() {
        let si = side_info_mi(0.5).unwrap();
        assert!((si.i_yc - 0.75).abs() < 1e-15);
        let (c0, c1) = side_info_closed_form(0.5);
        assert!((si.i_c0 - c0).abs() < 1e-12, "{} vs {c0}", si.i_c0);
        assert!((si.i_c1 - c1).abs() < 1e-12, "{} vs {c1}", si.i_c1);
        // frozen reference values from the closed form
        assert!((si.i_c0 - 0.04718047).abs() < 1e-6, "i_c0 = {}", si.i_c0);
        assert!((si.i_c1 - 0.20281953).abs() < 1e-6, "i_c1 = {}", si.i_c1);
    }

    #[test]
    fn side_info_ordering_and_limits() {
        for &e in &[0.0, 0.1, 0.3, 0.5, 0.8, 1.0] {
            let si = side_info_mi(e).unwrap();
            assert!(si.i_c1 >= si.i_c0 - 1e-12, "e={e}");
            assert!((0.0..=1.0).contains(&si.i_c0));
            assert!((0.0..=1.0).contains(&si.i_c1));
            let (c0, c1) = side_info_closed_form(e);
            assert!((si.i_c0 - c0).abs() < 1e-12, "e={e}");
            assert!((si.i_c1 - c1).abs() < 1e-12, "e={e}");
        }
        assert!(side_info_mi(1.5).is_err());
    }

    #[test]
    fn ebp_saturation_and_origin() {
        let d = dist(&[(2, 1.0)]);
        let si = SideInfoMi {
            i_c0: 0.2,
            i_c1: 1.0,
            i_yc: 0.9,
        };
        let samples = ldgm_decoder_ebp_samples(&d, 6, &si, &[0.0, 1.0]);
        // i_bc = 0 with no degree-1 mass: I_cb = 0
        assert!((samples[0].ext).abs() < 1e-15);
        assert!((samples[0].pri).abs() < 1e-15);
        // i_bc = 1 with i_c1 = 1: I_cb = 1, ext = 1
        assert!((samples[1].ext - 1.0).abs() < 1e-15);
        assert_eq!(samples[1].pri, 1.0);
    }

    #[test]
    fn ebp_origin_with_degree_one_mass() {
        let d = dist(&[(1, 0.1), (2, 0.9)]);
        let si = SideInfoMi {
            i_c0: 0.3,
            i_c1: 0.5,
            i_yc: 0.9,
        };
        let s = &ldgm_decoder_ebp_samples(&d, 4, &si, &[0.0])[0];
        // I_cb at the origin is i_c0 * v_1
        let expect = 0.3 * 0.1;
        assert!((s.ext - (1.0 - (1.0f64 - expect).powi(4))).abs() < 1e-14);
    }

    #[test]
    fn curve_requires_valid_grid() {
        assert!(ExitCurve::new(vec![0.0, 0.5, 0.5], vec![0.0, 0.1, 0.2], "c").is_err());
        assert!(ExitCurve::new(vec![0.0, 0.5], vec![0.0, 1.2], "c").is_err());
        assert!(ExitCurve::new(vec![0.0, 0.5], vec![0.0], "c").is_err());
    }

    #[test]
    fn interpolation_is_linear_and_clamped() {
        let c = ExitCurve::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.4, 1.0], "c").unwrap();
        assert!((c.interpolate(0.25) - 0.2).abs() < 1e-15);
        assert!((c.interpolate(-1.0) - 0.0).abs() < 1e-15);
        assert!((c.interpolate(2.0) - 1.0).abs() < 1e-15);
        assert!((c.interpolate(0.75) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn export_and_parse_round_trip() {
        let c = ExitCurve::new(
            vec![0.0, 0.3333333333333333, 1.0],
            vec![0.1, 0.123456789012345, 0.9],
            "demo",
        )
        .unwrap();
        let mut buf = Vec::new();
        export_curve(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4); // header + 3 rows
        let rows = parse_curve_csv(&text).unwrap();
        assert_eq!(rows.len(), 3);
        for (i, (x, y, label)) in rows.iter().enumerate() {
            assert!((x - c.grid()[i]).abs() < 1e-12);
            assert!((y - c.values()[i]).abs() < 1e-12);
            assert_eq!(label, "demo");
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_curve_csv("").is_err());
        assert!(parse_curve_csv("nope\n1,2,3\n").is_err());
        assert!(parse_curve_csv("x,y,label\nfoo,2,c\n").is_err());
    }
}
