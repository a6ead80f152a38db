//! Degree-distribution design for the three codes of the system: the source
//! code, the quantizer part and the syndrome part of the nested compression
//! code.
//!
//! Each design is a small linear program over edge fractions, sampled on a
//! mutual-information grid, solved by the in-repo simplex and then re-verified
//! on a ten-times finer grid with violated points added back as cuts.
//!
//! Gap convention: the decoding-progress constraints demand an extrinsic
//! advantage of `gap` over the matched curve at every grid point. A fixed
//! additive gap is unsatisfiable where the two curves meet at their common
//! fixed point (both approach the same corner), so the demanded gap tapers
//! there: `gap(x) = min(gap_cfg, CORNER_TAPER * headroom(x))` where headroom
//! is the distance left to the corner. In the bulk of the grid this is
//! exactly the configured additive gap; only the pinch region is relaxed, and
//! the taper keeps the usual stability margin at the corner.

use crate::dist::EdgeDegreeDistribution;
use crate::error::{Error, Result};
use crate::exit::{exit_s, uniform_grid, ExitCurve, SideInfoMi};
use crate::lp::{Constraint, LpOutcome, Problem, Sense};

/// Fraction of the remaining corner headroom that may be demanded as gap
/// where the additive gap no longer fits.
const CORNER_TAPER: f64 = 0.1;

/// Cap on the erased degree-2 cycle density rho = delta * v_2 * (d_s - 1).
/// Wholly-erased cycles of degree-2 variable nodes are unresolvable stopping
/// sets, and their expected count per block diverges as rho approaches 1;
/// keeping rho bounded keeps them rare at practical block lengths.
const DEGREE2_DENSITY_CAP: f64 = 0.75;

/// Safety margin folded into every LP row so the solved vertex sits strictly
/// inside the true constraint set even after floating-point extraction.
const ROW_MARGIN: f64 = 3e-6;

/// Violation size that triggers a new cutting plane. Solutions come back
/// with at least `ROW_MARGIN` of true slack, so anything past this is a real
/// miss rather than solver noise.
const VERIFY_TOL: f64 = 1e-6;

/// Margin applied to a row whose true headroom is `head`: full `ROW_MARGIN`
/// in the bulk, vanishing where the constraint is a corner equality.
fn row_margin(head: f64) -> f64 {
    ROW_MARGIN.min(0.5 * head).max(0.0)
}

/// Candidate degree sets for the four edge distributions.
#[derive(Debug, Clone)]
pub struct CandidateDegrees {
    /// Source-code variable nodes (v_qd).
    pub source: Vec<usize>,
    /// Quantizer observation nodes (v_cd).
    pub quantizer: Vec<usize>,
    /// Syndrome-code b side (v_bd).
    pub syndrome_b: Vec<usize>,
    /// Syndrome-code check side (v_pd). Degree 1 is allowed here: degree-1
    /// checks hand the destination decoder its cold-start pins.
    pub syndrome_p: Vec<usize>,
}

impl CandidateDegrees {
    /// Geometric degree ladder for the quantizer. The fixed-point prior must
    /// rise monotonically all the way into the (1,1) corner, and a
    /// polynomial can only track that boundary with a long tail of degrees:
    /// support capped below roughly 400 is infeasible at d_b = 6. A ladder
    /// keeps the column count small enough for the solver.
    pub fn quantizer_ladder(d_max: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (1..=8).collect();
        let mut d = 10.0_f64;
        while (d as usize) < d_max {
            v.push(d as usize);
            d *= 1.25;
        }
        v.push(d_max);
        v.dedup();
        v
    }
}

impl Default for CandidateDegrees {
    fn default() -> Self {
        CandidateDegrees {
            source: (2..=30).collect(),
            quantizer: CandidateDegrees::quantizer_ladder(400),
            syndrome_b: (2..=30).collect(),
            syndrome_p: (1..=20).collect(),
        }
    }
}

/// Knobs shared by the three optimizations.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Number of grid points on [0, 1] the constraints are sampled at.
    pub grid_size: usize,
    pub candidate_degrees: CandidateDegrees,
    /// Demanded extrinsic-information gap of the source-code curves.
    pub gap_qs: f64,
    /// Demanded per-iteration progress of the syndrome-code staircase, and
    /// the margin target between the two exported EBP curves.
    pub gap_pb: f64,
    /// Regular check degree of the source code.
    pub d_s: usize,
    /// Regular b-node degree on the quantizer graph.
    pub d_b: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid_size: 1001,
            candidate_degrees: CandidateDegrees::default(),
            gap_qs: 0.005,
            // the largest gap the guidance allows; smaller values design
            // codes whose finite-length decoding falls off a cliff
            gap_pb: 0.01,
            d_s: 16,
            d_b: 6,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 100 {
            return Err(Error::Domain(format!(
                "grid_size must be at least 100, got {}",
                self.grid_size
            )));
        }
        for (name, g) in [("gap_qs", self.gap_qs), ("gap_pb", self.gap_pb)] {
            if !(g > 0.0 && g <= 0.01) {
                return Err(Error::Domain(format!(
                    "{name} must lie in (0, 0.01], got {g}"
                )));
            }
        }
        if self.d_s < 3 {
            return Err(Error::Domain(format!(
                "d_s must be at least 3, got {}",
                self.d_s
            )));
        }
        if self.d_b < 2 {
            return Err(Error::Domain(format!(
                "d_b must be at least 2, got {}",
                self.d_b
            )));
        }
        for (name, set) in [
            ("source", &self.candidate_degrees.source),
            ("quantizer", &self.candidate_degrees.quantizer),
            ("syndrome_b", &self.candidate_degrees.syndrome_b),
            ("syndrome_p", &self.candidate_degrees.syndrome_p),
        ] {
            if set.is_empty() {
                return Err(Error::Domain(format!("empty candidate degree set {name}")));
            }
            if set.iter().any(|&d| d == 0) {
                return Err(Error::Domain(format!("degree 0 in candidate set {name}")));
            }
        }
        Ok(())
    }
}

/// A designed source-code ensemble: variable-side edge distribution and rate.
#[derive(Debug, Clone)]
pub struct C1Design {
    pub dist: EdgeDegreeDistribution,
    /// R0 = 1 - (1/d_s) / sum_d v_qd/d.
    pub rate: f64,
    /// The channel prior the design assumed.
    pub prior: f64,
    /// Check degree the design used.
    pub d_s: usize,
}

/// The demanded extrinsic value at a source-code grid point: the inverse
/// check map plus the (corner-tapered) gap, never above 1.
pub fn c1_required_exit(i_sq: f64, d_s: usize, gap_qs: f64) -> f64 {
    let s = exit_s(i_sq, d_s);
    let gap = gap_qs.min(CORNER_TAPER * (1.0 - s));
    s + gap
}

fn solution_to_dist(degrees: &[usize], x: &[f64]) -> Result<EdgeDegreeDistribution> {
    // scrub solver dust, then renormalize exactly
    let cleaned: Vec<f64> = x.iter().map(|&v| if v < 1e-11 { 0.0 } else { v }).collect();
    let total: f64 = cleaned.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain("LP returned an empty distribution".into()));
    }
    let pairs: Vec<(usize, f64)> = degrees
        .iter()
        .zip(&cleaned)
        .filter(|&(_, &v)| v > 0.0)
        .map(|(&d, &v)| (d, v / total))
        .collect();
    EdgeDegreeDistribution::from_pairs(&pairs)
}

/// Minimum separation between constraint points handed to the LP. Clustered
/// monomial rows are nearly parallel and wreck the basis conditioning.
const CUT_SPACING: f64 = 2e-3;

/// Deterministic warm-start points for the cutting-plane loops: a uniform
/// sweep plus geometric clusters hugging both endpoints (where the design
/// constraints pinch), thinned to the minimum spacing.
fn seed_points() -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
    let mut step = 0.5_f64;
    for _ in 0..8 {
        pts.push(1.0 - step);
        pts.push(step);
        step *= 0.5;
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|b, a| (*b - *a).abs() < CUT_SPACING);
    pts
}

/// Thins a violation list (point, excess) down to at most `cap` cuts spaced
/// at least `min_gap` apart, worst first. Clustered near-duplicate rows
/// degrade the simplex, so each round only learns well-separated cuts.
fn select_spaced(mut violations: Vec<(f64, f64)>, min_gap: f64, cap: usize) -> Vec<f64> {
    violations.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut kept: Vec<f64> = Vec::new();
    for (x, _) in violations {
        if kept.iter().all(|&k| (k - x).abs() >= min_gap) {
            kept.push(x);
            if kept.len() == cap {
                break;
            }
        }
    }
    kept
}

/// Solves a degree-distribution LP by cutting planes: small active row sets,
/// re-verified against `find_violations` (which should scan the fine grid),
/// growing until the returned distribution is clean.
fn cutting_plane_lp<K, R, V>(
    degrees: &[usize],
    objective: &[f64],
    initial: Vec<K>,
    row_for: R,
    find_violations: V,
    what: &str,
) -> Result<EdgeDegreeDistribution>
where
    K: Clone + PartialEq,
    R: Fn(&K) -> Constraint,
    V: Fn(&EdgeDegreeDistribution) -> Vec<K>,
{
    let mut active = initial;
    for _round in 0..60 {
        let mut constraints: Vec<Constraint> = vec![Constraint {
            coeffs: vec![1.0; degrees.len()],
            sense: Sense::Eq,
            rhs: 1.0,
        }];
        constraints.extend(active.iter().map(&row_for));
        let problem = Problem {
            objective: objective.to_vec(),
            constraints,
        };
        let (outcome, sol) = crate::lp::solve(&problem)?;
        let sol = match (outcome, sol) {
            (LpOutcome::Optimal, Some(s)) => s,
            (LpOutcome::Infeasible, _) => {
                return Err(Error::Infeasible {
                    what: what.into(),
                    grid_point: None,
                })
            }
            _ => return Err(Error::Domain(format!("{what}: LP unbounded"))),
        };
        let dist = solution_to_dist(degrees, &sol.x)?;
        let violated = find_violations(&dist);
        if violated.is_empty() {
            return Ok(dist);
        }
        let before = active.len();
        for v in violated {
            if !active.contains(&v) {
                active.push(v);
            }
        }
        if active.len() == before {
            return Err(Error::Stalled(format!(
                "{what}: fine-grid violations persist but yield no new cuts"
            )));
        }
    }
    Err(Error::Stalled(format!(
        "{what}: cutting planes failed to converge"
    )))
}

/// Designs the source-code variable distribution for a given channel prior,
/// maximizing the code rate subject to the decoding-progress constraint at
/// every grid point.
pub fn optimize_c1_with_prior(i_q_pri: f64, cfg: &OptimizerConfig) -> Result<C1Design> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&i_q_pri) {
        return Err(Error::Domain(format!("prior {i_q_pri} outside [0,1]")));
    }
    let degrees = &cfg.candidate_degrees.source;
    let objective: Vec<f64> = degrees.iter().map(|&d| 1.0 / d as f64).collect();
    let channel = 1.0 - i_q_pri;

    // (1 - pri) * sum_d v_d (1-x)^(d-1) <= 1 - required(x)
    let row_for = |x: &f64| -> Constraint {
        let coeffs: Vec<f64> = degrees
            .iter()
            .map(|&d| {
                let z = 1.0 - x;
                channel * if d == 1 { 1.0 } else { z.powi(d as i32 - 1) }
            })
            .collect();
        let head = 1.0 - c1_required_exit(*x, cfg.d_s, cfg.gap_qs);
        Constraint {
            coeffs,
            sense: Sense::Le,
            rhs: head - row_margin(head),
        }
    };

    let fine = uniform_grid((cfg.grid_size - 1) * 10 + 1);
    let find_violations = |dist: &EdgeDegreeDistribution| -> Vec<f64> {
        let v: Vec<(f64, f64)> = fine
            .iter()
            .filter_map(|&x| {
                let excess = channel * dist.eval_poly(1.0 - x)
                    - (1.0 - c1_required_exit(x, cfg.d_s, cfg.gap_qs));
                (excess > VERIFY_TOL).then_some((x, excess))
            })
            .collect();
        select_spaced(v, CUT_SPACING, 12)
    };

    // key -1.0 encodes the degree-2 density row; it is always in the
    // active set and never re-added, so the sentinel cannot collide
    let base_row = row_for;
    let row_for = |x: &f64| -> Constraint {
        if *x < 0.0 {
            Constraint {
                coeffs: degrees
                    .iter()
                    .map(|&d| if d == 2 { 1.0 } else { 0.0 })
                    .collect(),
                sense: Sense::Le,
                rhs: if channel > 0.0 {
                    DEGREE2_DENSITY_CAP / (channel * (cfg.d_s - 1) as f64)
                } else {
                    1.0
                },
            }
        } else {
            base_row(x)
        }
    };
    let mut initial = seed_points();
    initial.insert(0, -1.0);

    let dist = cutting_plane_lp(
        degrees,
        &objective,
        initial,
        row_for,
        find_violations,
        &format!(
            "source-code design at prior {i_q_pri}, d_s {}, gap {}",
            cfg.d_s, cfg.gap_qs
        ),
    )?;
    let rate = 1.0 - (1.0 / cfg.d_s as f64) / dist.inv_degree_mean();
    Ok(C1Design {
        dist,
        rate,
        prior: i_q_pri,
        d_s: cfg.d_s,
    })
}

/// Designs the source code for the decode-and-forward baseline: the relay
/// itself must decode, so the prior is 1 - epsilon and the configured check
/// degree is far too heavy for the halved capacity. Candidate check degrees
/// are swept from a capacity-scaled guess down to 4 and the best feasible
/// rate wins.
pub fn design_df(epsilon: f64, cfg: &OptimizerConfig) -> Result<C1Design> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [0,1]")));
    }
    let prior = 1.0 - epsilon;
    let scaled = ((cfg.d_s as f64) / (1.0 + epsilon)).round() as usize;
    let mut best: Option<C1Design> = None;
    for d_s in (4..=scaled.max(4)).rev() {
        let mut sub = cfg.clone();
        sub.d_s = d_s;
        match optimize_c1_with_prior(prior, &sub) {
            Ok(design) => {
                if design.rate > 0.0 && best.as_ref().map_or(true, |b| design.rate > b.rate) {
                    best = Some(design);
                }
            }
            Err(Error::Infeasible { .. }) | Err(Error::Stalled(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::Infeasible {
        what: format!("decode-and-forward source design at epsilon {epsilon}"),
        grid_point: None,
    })
}

/// Designs the source code for the compress-and-forward role: the destination
/// sees the merged observation, so the prior is 1 - epsilon^2.
pub fn optimize_c1(epsilon: f64, cfg: &OptimizerConfig) -> Result<C1Design> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [0,1]")));
    }
    optimize_c1_with_prior(1.0 - epsilon * epsilon, cfg)
}

/// A designed quantizer ensemble and its rate R_b.
#[derive(Debug, Clone)]
pub struct LdgmDesign {
    pub dist: EdgeDegreeDistribution,
    /// R_b = 2 / (d_b * sum_d v_cd/d).
    pub rate: f64,
    pub i_yc: f64,
}

/// The pointwise cap on the encoder-side message I_cb that keeps the
/// quantizer fixed-point prior nonnegative: 1 - (1-x)^(1/(d_b-1)).
pub fn ldgm_icb_limit(i_bc: f64, d_b: usize) -> f64 {
    1.0 - (1.0 - i_bc).powf(1.0 / (d_b - 1) as f64)
}

/// Designs the quantizer observation-side distribution, minimizing R_b
/// subject to the fixed-point prior staying nonnegative and nondecreasing
/// over the whole grid.
pub fn optimize_ldgm(epsilon: f64, cfg: &OptimizerConfig) -> Result<LdgmDesign> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [0,1]")));
    }
    let i_yc = 1.0 - 0.5 * epsilon;
    let degrees = &cfg.candidate_degrees.quantizer;
    // minimizing R_b = 2 / (d_b sum v/d) means maximizing sum v/d
    let objective: Vec<f64> = degrees.iter().map(|&d| 1.0 / d as f64).collect();

    let poly_coeff = |d: usize, x: f64| -> f64 {
        if d == 1 {
            1.0
        } else {
            x.powi(d as i32 - 1)
        }
    };
    let dpoly_coeff = |d: usize, x: f64| -> f64 {
        match d {
            1 => 0.0,
            2 => 1.0,
            _ => (d - 1) as f64 * x.powi(d as i32 - 2),
        }
    };
    let b_exp = (cfg.d_b - 1) as f64;

    // A cut is either the nonnegativity row at x (key (x, false)) or the
    // derivative form of the monotonic condition at x (key (x, true)):
    // d I_bc,pri / d I_bc >= 0  <=>  (d_b - 1)(1 - x) I_cb'(x) + I_cb(x) <= 1.
    let row_for = |key: &(f64, bool)| -> Constraint {
        let (x, derivative) = *key;
        if derivative {
            Constraint {
                coeffs: degrees
                    .iter()
                    .map(|&d| {
                        i_yc * (b_exp * (1.0 - x) * dpoly_coeff(d, x) + poly_coeff(d, x))
                    })
                    .collect(),
                sense: Sense::Le,
                rhs: 1.0 - ROW_MARGIN,
            }
        } else {
            let limit = ldgm_icb_limit(x, cfg.d_b);
            Constraint {
                coeffs: degrees.iter().map(|&d| i_yc * poly_coeff(d, x)).collect(),
                sense: Sense::Le,
                rhs: limit - row_margin(limit),
            }
        }
    };

    let fine = uniform_grid((cfg.grid_size - 1) * 10 + 1);
    let find_violations = |dist: &EdgeDegreeDistribution| -> Vec<(f64, bool)> {
        let nonneg: Vec<(f64, f64)> = fine
            .iter()
            .filter_map(|&x| {
                let excess = i_yc * dist.eval_poly(x) - ldgm_icb_limit(x, cfg.d_b);
                (excess > VERIFY_TOL).then_some((x, excess))
            })
            .collect();
        let slope: Vec<(f64, f64)> = fine
            .iter()
            .filter_map(|&x| {
                let lhs: f64 = dist
                    .iter()
                    .map(|(d, v)| {
                        v * i_yc * (b_exp * (1.0 - x) * dpoly_coeff(d, x) + poly_coeff(d, x))
                    })
                    .sum();
                (lhs - 1.0 > VERIFY_TOL).then_some((x, lhs - 1.0))
            })
            .collect();
        let mut cuts: Vec<(f64, bool)> = select_spaced(nonneg, CUT_SPACING, 8)
            .into_iter()
            .map(|x| (x, false))
            .collect();
        cuts.extend(
            select_spaced(slope, CUT_SPACING, 8)
                .into_iter()
                .map(|x| (x, true)),
        );
        cuts
    };

    let seeds = seed_points();
    let mut initial: Vec<(f64, bool)> = seeds.iter().map(|&x| (x, false)).collect();
    initial.extend(seeds.iter().map(|&x| (x, true)));

    let dist = cutting_plane_lp(
        degrees,
        &objective,
        initial,
        row_for,
        find_violations,
        &format!("quantizer design at epsilon {epsilon}, d_b {}", cfg.d_b),
    )?;
    let rate = 2.0 / (cfg.d_b as f64 * dist.inv_degree_mean());
    Ok(LdgmDesign { dist, rate, i_yc })
}

/// A designed syndrome-part ensemble pair and its rate R_p.
#[derive(Debug, Clone)]
pub struct C2LdpcDesign {
    pub v_bd: EdgeDegreeDistribution,
    pub v_pd: EdgeDegreeDistribution,
    /// R_p = R_b * (sum v_pd/d) / (sum v_bd/d).
    pub rate: f64,
}

/// The demanded staircase progress at state `u`, tapered at the top corner.
pub fn staircase_gap(u: f64, gap_pb: f64) -> f64 {
    gap_pb.min(CORNER_TAPER * (1.0 - u))
}

/// One evaluation of the coupled decoder iteration at state u = I_pb, for a
/// fixed ensemble pair and quantizer curve: returns the next-iteration I_pb.
pub fn staircase_next(
    v_bd: &EdgeDegreeDistribution,
    v_pd: &EdgeDegreeDistribution,
    phi: &ExitCurve,
    u: f64,
) -> f64 {
    let x = 1.0 - v_bd.eval_poly_full(1.0 - u);
    let pri = phi.interpolate(x);
    let s = v_bd.eval_poly(1.0 - u);
    let i_bp = 1.0 - (1.0 - pri) * s;
    v_pd.eval_poly(i_bp)
}

fn verify_staircase(
    v_bd: &EdgeDegreeDistribution,
    v_pd: &EdgeDegreeDistribution,
    phi: &ExitCurve,
    gap_pb: f64,
    grid: &[f64],
) -> Option<f64> {
    grid.iter()
        .copied()
        .find(|&u| staircase_next(v_bd, v_pd, phi, u) < u + staircase_gap(u, gap_pb) - VERIFY_TOL)
}

/// Inverse of the increasing polynomial P(w) = sum v_pd w^(d-1) on [0, 1].
fn invert_pd_poly(v_pd: &EdgeDegreeDistribution, target: f64) -> f64 {
    if target <= v_pd.eval_poly(0.0) {
        return 0.0;
    }
    if target >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if v_pd.eval_poly(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The syndrome code's own EBP curve: for each internal state u the pair
/// (extrinsic out of the b side, prior the b side needs), with the prior
/// clamped to [0, 1] for export.
pub fn ldpc_part_ebp_curve(
    v_bd: &EdgeDegreeDistribution,
    v_pd: &EdgeDegreeDistribution,
    grid: &[f64],
) -> Result<ExitCurve> {
    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    for &u in grid {
        let ext = 1.0 - v_bd.eval_poly_full(1.0 - u);
        let g = invert_pd_poly(v_pd, u);
        let s = v_bd.eval_poly(1.0 - u);
        let pri = if s > 0.0 {
            1.0 - (1.0 - g) / s
        } else {
            // one-sided limit at u = 1: (1 - G)/S -> (1/P'(1)) / v_bd2, and
            // -inf (all prior demands vanish) without degree-2 mass
            let p_slope: f64 = v_pd.iter().map(|(d, v)| v * (d - 1) as f64).sum();
            let b2 = v_bd.fraction(2);
            if p_slope > 0.0 && b2 > 0.0 {
                1.0 - 1.0 / (p_slope * b2)
            } else {
                f64::NEG_INFINITY
            }
        };
        let pri = pri.clamp(0.0, 1.0);
        if let Some(&last) = xs.last() {
            if ext <= last {
                let y: &mut f64 = ys.last_mut().unwrap();
                *y = y.max(pri);
                continue;
            }
        }
        xs.push(ext.clamp(0.0, 1.0));
        ys.push(pri);
    }
    ExitCurve::new(xs, ys, "c2_ldpc_ebp")
}

/// Pointwise dominance margin between the quantizer curve and the syndrome
/// curve on a shared uniform abscissa grid.
///
/// Both curves leave the origin together, so a fixed margin is checked from
/// the abscissa where the quantizer curve first clears `2 * gap_pb` (below
/// that the syndrome curve sits at or under zero and dominance is trivial).
/// Returns the minimum margin found and the abscissa attaining it.
pub fn dominance_margin(
    ldgm: &ExitCurve,
    ldpc: &ExitCurve,
    gap_pb: f64,
    points: usize,
) -> (f64, f64) {
    let start = ldgm
        .first_abscissa_reaching(2.0 * gap_pb)
        .unwrap_or(0.0)
        .max(ldgm.grid()[0])
        .max(ldpc.grid()[0]);
    let mut min_margin = f64::INFINITY;
    let mut at = start;
    for i in 0..points {
        let x = start + (1.0 - start) * i as f64 / (points - 1) as f64;
        let margin = ldgm.interpolate(x) - ldpc.interpolate(x);
        if margin < min_margin {
            min_margin = margin;
            at = x;
        }
    }
    (min_margin, at)
}

/// Designs the syndrome part of the compression code by alternating linear
/// programs over the two edge distributions. `ebp_ldgm` is the quantizer's
/// decoder-side curve and `r_b` its rate.
pub fn optimize_c2_ldpc(
    ebp_ldgm: &ExitCurve,
    r_b: f64,
    cfg: &OptimizerConfig,
) -> Result<C2LdpcDesign> {
    cfg.validate()?;
    let phi = ebp_ldgm;
    let fine = uniform_grid((cfg.grid_size - 1) * 10 + 1);
    let bd_degrees = &cfg.candidate_degrees.syndrome_b;
    let pd_degrees = &cfg.candidate_degrees.syndrome_p;

    let inits = [3usize, 4, 2, 6, 8];
    let mut best: Option<C2LdpcDesign> = None;
    let mut lp_ever_feasible = false;

    for &init in &inits {
        if !bd_degrees.contains(&init) {
            continue;
        }
        let mut v_bd = EdgeDegreeDistribution::regular(init);

        for _outer in 0..40 {
            // --- v_pd step: exact LP given v_bd (the model is closed-form) ---
            let i_bp_at = {
                let v_bd = v_bd.clone();
                move |u: f64| -> f64 {
                    let x = 1.0 - v_bd.eval_poly_full(1.0 - u);
                    let pri = phi.interpolate(x);
                    let s = v_bd.eval_poly(1.0 - u);
                    (1.0 - (1.0 - pri) * s).clamp(0.0, 1.0)
                }
            };
            let pd_row = |u: &f64| -> Constraint {
                let i_bp = i_bp_at(*u);
                Constraint {
                    coeffs: pd_degrees
                        .iter()
                        .map(|&d| {
                            if d == 1 {
                                1.0
                            } else {
                                i_bp.powi(d as i32 - 1)
                            }
                        })
                        .collect(),
                    sense: Sense::Ge,
                    rhs: {
                        let gap = staircase_gap(*u, cfg.gap_pb);
                        u + gap + row_margin(gap)
                    },
                }
            };
            let pd_violations = |cand: &EdgeDegreeDistribution| -> Vec<f64> {
                let v: Vec<(f64, f64)> = fine
                    .iter()
                    .filter_map(|&u| {
                        let shortfall =
                            u + staircase_gap(u, cfg.gap_pb) - staircase_next(&v_bd, cand, phi, u);
                        (shortfall > VERIFY_TOL).then_some((u, shortfall))
                    })
                    .collect();
                select_spaced(v, CUT_SPACING, 12)
            };
            let new_pd = match cutting_plane_lp(
                pd_degrees,
                &pd_degrees.iter().map(|&d| -1.0 / d as f64).collect::<Vec<_>>(),
                seed_points(),
                pd_row,
                pd_violations,
                "syndrome-code check-side step",
            ) {
                Ok(d) => {
                    lp_ever_feasible = true;
                    d
                }
                Err(_) => break, // this init cannot support the staircase
            };

            // track the verified pair
            if verify_staircase(&v_bd, &new_pd, phi, cfg.gap_pb, &fine).is_none() {
                let rate = r_b * new_pd.inv_degree_mean() / v_bd.inv_degree_mean();
                if best.as_ref().map_or(true, |b| rate < b.rate - 1e-12) {
                    best = Some(C2LdpcDesign {
                        v_bd: v_bd.clone(),
                        v_pd: new_pd.clone(),
                        rate,
                    });
                }
            }

            // --- v_bd step: LP with the quantizer coupling frozen at the
            // current v_bd ---
            let pri_frozen = {
                let v_bd = v_bd.clone();
                move |u: f64| -> f64 {
                    let x = 1.0 - v_bd.eval_poly_full(1.0 - u);
                    phi.interpolate(x).min(1.0 - 1e-12)
                }
            };
            let bd_rhs = |u: f64| -> f64 {
                let target = (u + staircase_gap(u, cfg.gap_pb)).min(1.0);
                let h = invert_pd_poly(&new_pd, target);
                ((1.0 - h) / (1.0 - pri_frozen(u))).max(0.0)
            };
            let bd_row = |u: &f64| -> Constraint {
                Constraint {
                    coeffs: bd_degrees
                        .iter()
                        .map(|&d| {
                            let z = 1.0 - u;
                            if d == 1 {
                                1.0
                            } else {
                                z.powi(d as i32 - 1)
                            }
                        })
                        .collect(),
                    sense: Sense::Le,
                    rhs: {
                        let r = bd_rhs(*u);
                        (r - row_margin(r)).max(0.0)
                    },
                }
            };
            let bd_violations = |cand: &EdgeDegreeDistribution| -> Vec<f64> {
                let v: Vec<(f64, f64)> = fine
                    .iter()
                    .filter_map(|&u| {
                        let excess = cand.eval_poly(1.0 - u) - bd_rhs(u);
                        (excess > VERIFY_TOL).then_some((u, excess))
                    })
                    .collect();
                select_spaced(v, CUT_SPACING, 12)
            };
            let cand_bd = match cutting_plane_lp(
                bd_degrees,
                &bd_degrees.iter().map(|&d| 1.0 / d as f64).collect::<Vec<_>>(),
                seed_points(),
                bd_row,
                bd_violations,
                "syndrome-code b-side step",
            ) {
                Ok(d) => d,
                Err(_) => break,
            };
            // the frozen-coupling step can overshoot; damp toward the old
            // point until the true (unfrozen) staircase holds
            let mut accepted: Option<EdgeDegreeDistribution> = None;
            for theta in [1.0, 0.5, 0.25, 0.125] {
                let pairs: Vec<(usize, f64)> = {
                    let mut merged: std::collections::BTreeMap<usize, f64> =
                        std::collections::BTreeMap::new();
                    for (d, v) in cand_bd.iter() {
                        *merged.entry(d).or_insert(0.0) += theta * v;
                    }
                    for (d, v) in v_bd.iter() {
                        *merged.entry(d).or_insert(0.0) += (1.0 - theta) * v;
                    }
                    merged.into_iter().collect()
                };
                let blended = EdgeDegreeDistribution::from_pairs(&pairs)?;
                if verify_staircase(&blended, &new_pd, phi, cfg.gap_pb, &fine).is_none() {
                    accepted = Some(blended);
                    break;
                }
            }
            let Some(next_bd) = accepted else {
                break; // keep the verified pair from the pd step
            };
            let rate = r_b * new_pd.inv_degree_mean() / next_bd.inv_degree_mean();
            let improved = best.as_ref().map_or(true, |b| rate < b.rate - 1e-4);
            if best.as_ref().map_or(true, |b| rate < b.rate - 1e-12) {
                best = Some(C2LdpcDesign {
                    v_bd: next_bd.clone(),
                    v_pd: new_pd.clone(),
                    rate,
                });
            }
            v_bd = next_bd;
            if !improved {
                break; // converged for this init
            }
        }
    }

    match best {
        Some(design) => Ok(design),
        None if lp_ever_feasible => Err(Error::Stalled(
            "syndrome-code alternation never produced a verified staircase".into(),
        )),
        None => Err(Error::Infeasible {
            what: "syndrome-code design: no initialization admits the demanded staircase".into(),
            grid_point: None,
        }),
    }
}

/// Everything the simulator needs for one erasure rate.
#[derive(Debug, Clone)]
pub struct EnsembleSet {
    pub epsilon: f64,
    pub c1: C1Design,
    pub ldgm: LdgmDesign,
    pub c2_ldpc: C2LdpcDesign,
    pub side_info: SideInfoMi,
    pub ldgm_curve: ExitCurve,
    pub cfg: OptimizerConfig,
}

/// Runs the three optimizations in order at one erasure probability.
pub fn design_all(epsilon: f64, cfg: &OptimizerConfig) -> Result<EnsembleSet> {
    let c1 = optimize_c1(epsilon, cfg)?;
    let ldgm = optimize_ldgm(epsilon, cfg)?;
    let side_info = crate::exit::side_info_mi(epsilon)?;
    let grid = uniform_grid(cfg.grid_size);
    let ldgm_curve = crate::exit::ldgm_decoder_ebp(&ldgm.dist, cfg.d_b, &side_info, &grid)?;
    let c2_ldpc = optimize_c2_ldpc(&ldgm_curve, ldgm.rate, cfg)?;
    Ok(EnsembleSet {
        epsilon,
        c1,
        ldgm,
        c2_ldpc,
        side_info,
        ldgm_curve,
        cfg: cfg.clone(),
    })
}
