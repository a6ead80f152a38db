//! Small dense linear-programming solver.
//!
//! The design problems in this crate are tiny: tens of variables, a few
//! hundred active rows under the cutting-plane loops. A two-phase tableau
//! simplex is plenty, and keeping it in-repo means the optimizers have no
//! external solver behind them. The monomial constraint columns are badly
//! scaled, so the tableau is refactorized from the original data every few
//! dozen pivots (and before any termination decision): the walk may be
//! guided by slightly stale numbers, but the basis, the reduced costs at
//! decision time and the returned point are always recomputed fresh.

use crate::error::{Error, Result};

/// Row sense of one constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// One linear constraint: `coeffs . x  (sense)  rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Maximize `objective . x` subject to constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

/// Optimal solution with the achieved objective value.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;
const REFACTOR_EVERY: usize = 32;

struct Tableau {
    rows: usize,
    cols: usize, // total columns excluding the rhs column
    /// Working tableau, (rows + 1) x (cols + 1); last row is the objective,
    /// last column the rhs.
    a: Vec<f64>,
    /// Pristine copy of the constraint rows (rows x (cols + 1)).
    a0: Vec<f64>,
    /// Objective being maximized, in original coordinates (length cols).
    c: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * (self.cols + 1) + c] = v;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.cols + 1;
        let p = self.at(row, col);
        debug_assert!(p.abs() > 0.0);
        let inv = 1.0 / p;
        for c in 0..w {
            self.a[row * w + c] *= inv;
        }
        for r in 0..=self.rows {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            for c in 0..w {
                let v = self.a[row * w + c];
                self.a[r * w + c] -= factor * v;
            }
            self.set(r, col, 0.0);
        }
        self.basis[row] = col;
    }

    /// Rebuilds the working tableau exactly from the pristine rows and the
    /// current basis: LU-factors the basis matrix and solves for every
    /// column, then reprices the objective row. Returns false if the basis
    /// matrix is numerically singular.
    fn refactor(&mut self) -> bool {
        let m = self.rows;
        let w = self.cols + 1;
        // basis matrix in column-major order
        let mut lu = vec![0.0_f64; m * m];
        for (k, &bcol) in self.basis.iter().enumerate() {
            for r in 0..m {
                lu[r * m + k] = self.a0[r * w + bcol];
            }
        }
        // LU with partial pivoting
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let mut p = k;
            let mut best = lu[perm[k] * m + k].abs();
            for r in k + 1..m {
                let v = lu[perm[r] * m + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < 1e-12 {
                return false;
            }
            perm.swap(k, p);
            let pk = perm[k];
            let diag = lu[pk * m + k];
            for r in k + 1..m {
                let pr = perm[r];
                let f = lu[pr * m + k] / diag;
                lu[pr * m + k] = f;
                for c in k + 1..m {
                    lu[pr * m + c] -= f * lu[pk * m + c];
                }
            }
        }
        let lu_solve = |rhs: &mut [f64]| {
            // forward substitution on the permuted system
            let mut y = vec![0.0_f64; m];
            for k in 0..m {
                let mut v = rhs[perm[k]];
                for c in 0..k {
                    v -= lu[perm[k] * m + c] * y[c];
                }
                y[k] = v;
            }
            for k in (0..m).rev() {
                let mut v = y[k];
                for c in k + 1..m {
                    v -= lu[perm[k] * m + c] * rhs[c];
                }
                rhs[k] = v / lu[perm[k] * m + k];
            }
        };
        // B^{-1} rhs with two passes of iterative refinement; the bases can
        // be poorly conditioned when several tight rows are nearly parallel
        let bcol = |r: usize, k: usize| self.a0[r * w + self.basis[k]];
        let solve_into = |rhs: &mut [f64]| {
            let b0 = rhs.to_vec();
            lu_solve(rhs);
            for _ in 0..2 {
                let mut resid = vec![0.0_f64; m];
                for r in 0..m {
                    let mut v = b0[r];
                    for k in 0..m {
                        v -= bcol(r, k) * rhs[k];
                    }
                    resid[r] = v;
                }
                lu_solve(&mut resid);
                for k in 0..m {
                    rhs[k] += resid[k];
                }
            }
        };
        // new tableau body: B^{-1} applied to every pristine column
        let mut fresh = vec![0.0_f64; (m + 1) * w];
        let mut col = vec![0.0_f64; m];
        for j in 0..w {
            for r in 0..m {
                col[r] = self.a0[r * w + j];
            }
            solve_into(&mut col);
            for r in 0..m {
                fresh[r * w + j] = col[r];
            }
        }
        // reprice: objective row = c_B B^{-1} A - c, rhs cell = c_B B^{-1} b
        for j in 0..w {
            let mut v = 0.0;
            for r in 0..m {
                v += self.c[self.basis[r]] * fresh[r * w + j];
            }
            if j < self.cols {
                v -= self.c[j];
            }
            fresh[m * w + j] = v;
        }
        self.a = fresh;
        // basic columns become exact unit columns
        for (k, &bcol) in self.basis.iter().enumerate() {
            for r in 0..m {
                self.a[r * w + bcol] = if r == k { 1.0 } else { 0.0 };
            }
            self.a[m * w + bcol] = 0.0;
        }
        true
    }

    /// Runs the simplex on the current objective. `allowed` limits entering
    /// columns. The tableau is refactorized on a fixed cadence and before
    /// any claim of optimality or unboundedness.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<LpOutcome> {
        let obj_row = self.rows;
        let mut degenerate_steps = 0usize;
        let mut since_refactor = 0usize;
        let mut pivots = 0usize;
        let mut verified = false; // tableau freshly refactored and unchanged
        loop {
            pivots += 1;
            if pivots > 50_000 {
                return Err(Error::Domain(
                    "simplex exceeded its pivot budget".into(),
                ));
            }
            let bland = degenerate_steps > 200;
            let mut enter: Option<usize> = None;
            let mut best = -EPS;
            for c in 0..self.cols {
                if !allowed(c) {
                    continue;
                }
                let rc = self.at(obj_row, c);
                if rc < -EPS {
                    if bland {
                        enter = Some(c);
                        break;
                    }
                    if rc < best {
                        best = rc;
                        enter = Some(c);
                    }
                }
            }
            let Some(col) = enter else {
                if verified {
                    return Ok(LpOutcome::Optimal);
                }
                if !self.refactor() {
                    return Err(Error::Domain("simplex basis went singular".into()));
                }
                verified = true;
                since_refactor = 0;
                continue; // rescan with exact reduced costs
            };

            // leaving row: minimum ratio; among near-ties prefer the largest
            // pivot element for stability (smallest basis index under Bland)
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, col);
                if a > EPS {
                    best_ratio = best_ratio.min(self.at(r, self.cols).max(0.0) / a);
                }
            }
            if best_ratio.is_infinite() {
                if verified {
                    return Ok(LpOutcome::Unbounded);
                }
                if !self.refactor() {
                    return Err(Error::Domain("simplex basis went singular".into()));
                }
                verified = true;
                since_refactor = 0;
                continue;
            }
            let mut leave: Option<usize> = None;
            let mut best_pivot = 0.0_f64;
            for r in 0..self.rows {
                let a = self.at(r, col);
                if a > EPS && self.at(r, self.cols).max(0.0) / a <= best_ratio + 1e-9 {
                    let take = if bland {
                        leave.map_or(true, |l| self.basis[r] < self.basis[l])
                    } else {
                        a > best_pivot
                    };
                    if take {
                        best_pivot = a;
                        leave = Some(r);
                    }
                }
            }
            let row = leave.expect("a minimum-ratio row exists");
            if best_ratio < EPS {
                degenerate_steps += 1;
            } else {
                degenerate_steps = 0;
            }
            self.pivot(row, col);
            verified = false;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                if !self.refactor() {
                    return Err(Error::Domain("simplex basis went singular".into()));
                }
                verified = true;
                since_refactor = 0;
            }
        }
    }
}

/// Solves the problem, returning the outcome and (when optimal) the solution.
pub fn solve(problem: &Problem) -> Result<(LpOutcome, Option<Solution>)> {
    let n = problem.objective.len();
    for c in &problem.constraints {
        if c.coeffs.len() != n {
            return Err(Error::Domain(format!(
                "constraint arity {} does not match objective arity {n}",
                c.coeffs.len()
            )));
        }
    }
    let m = problem.constraints.len();

    // Normalize every row to nonnegative rhs; count slack and artificial needs.
    #[derive(Clone)]
    struct Row {
        coeffs: Vec<f64>,
        sense: Sense,
        rhs: f64,
    }
    let rows: Vec<Row> = problem
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                Row {
                    coeffs: c.coeffs.iter().map(|&v| -v).collect(),
                    sense: match c.sense {
                        Sense::Le => Sense::Ge,
                        Sense::Ge => Sense::Le,
                        Sense::Eq => Sense::Eq,
                    },
                    rhs: -c.rhs,
                }
            } else {
                Row {
                    coeffs: c.coeffs.clone(),
                    sense: c.sense,
                    rhs: c.rhs,
                }
            }
        })
        .collect();

    let n_slack = rows
        .iter()
        .filter(|r| matches!(r.sense, Sense::Le | Sense::Ge))
        .count();
    let n_art = rows
        .iter()
        .filter(|r| matches!(r.sense, Sense::Ge | Sense::Eq))
        .count();

    let cols = n + n_slack + n_art;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        a: vec![0.0; (m + 1) * w],
        a0: Vec::new(),
        c: vec![0.0; cols],
        basis: vec![usize::MAX; m],
    };

    let mut slack_at = n;
    let mut art_at = n + n_slack;
    let mut art_cols = Vec::with_capacity(n_art);
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.coeffs.iter().enumerate() {
            t.set(r, c, v);
        }
        t.set(r, cols, row.rhs);
        match row.sense {
            Sense::Le => {
                t.set(r, slack_at, 1.0);
                t.basis[r] = slack_at;
                slack_at += 1;
            }
            Sense::Ge => {
                t.set(r, slack_at, -1.0);
                slack_at += 1;
                t.set(r, art_at, 1.0);
                t.basis[r] = art_at;
                art_cols.push(art_at);
                art_at += 1;
            }
            Sense::Eq => {
                t.set(r, art_at, 1.0);
                t.basis[r] = art_at;
                art_cols.push(art_at);
                art_at += 1;
            }
        }
    }
    t.a0 = t.a[..m * w].to_vec();

    // Phase 1: minimize the sum of artificials, i.e. maximize its negation.
    if !art_cols.is_empty() {
        for &c in &art_cols {
            t.c[c] = -1.0;
        }
        if !t.refactor() {
            return Err(Error::Domain("simplex basis went singular".into()));
        }
        t.optimize(&|_| true)?;
        let phase1 = -t.at(m, cols);
        if phase1 > 1e-7 {
            return Ok((LpOutcome::Infeasible, None));
        }
        // drive any lingering artificials out of the basis, pivoting on the
        // largest available element
        for r in 0..m {
            if art_cols.contains(&t.basis[r]) {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..n + n_slack {
                    let a = t.at(r, c).abs();
                    if a > 1e-7 && best.map_or(true, |(_, b)| a > b) {
                        best = Some((c, a));
                    }
                }
                if let Some((c, _)) = best {
                    t.pivot(r, c);
                }
                // a numerically zero row stays basic at zero, harmless
            }
        }
    }

    // Phase 2: maximize the real objective with artificial columns barred.
    t.c = vec![0.0; cols];
    t.c[..n].copy_from_slice(&problem.objective);
    if !t.refactor() {
        return Err(Error::Domain("simplex basis went singular".into()));
    }
    let art_start = n + n_slack;
    let outcome = t.optimize(&|c| c < art_start)?;
    match outcome {
        LpOutcome::Unbounded => Ok((LpOutcome::Unbounded, None)),
        LpOutcome::Infeasible => unreachable!(),
        LpOutcome::Optimal => {
            let mut x = vec![0.0; n];
            for r in 0..m {
                let b = t.basis[r];
                if b < n {
                    x[b] = t.at(r, cols).max(0.0);
                }
            }
            // the tableau is floating point; never hand back a vector that
            // fails its own constraints
            for (i, c) in problem.constraints.iter().enumerate() {
                let lhs: f64 = c.coeffs.iter().zip(&x).map(|(&a, &v)| a * v).sum();
                let scale =
                    1.0 + c.rhs.abs() + c.coeffs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let bad = match c.sense {
                    Sense::Le => lhs - c.rhs > 1e-6 * scale,
                    Sense::Ge => c.rhs - lhs > 1e-6 * scale,
                    Sense::Eq => (lhs - c.rhs).abs() > 1e-6 * scale,
                };
                if bad {
                    return Err(Error::Domain(format!(
                        "simplex lost feasibility on row {i} (lhs {lhs}, rhs {})",
                        c.rhs
                    )));
                }
            }
            let objective = problem
                .objective
                .iter()
                .zip(&x)
                .map(|(&c, &v)| c * v)
                .sum();
            Ok((LpOutcome::Optimal, Some(Solution { x, objective })))
        }
    }
}

/// Convenience wrapper that treats anything but an optimum as an error.
pub fn solve_expect_optimal(problem: &Problem, what: &str) -> Result<Solution> {
    match solve(problem)? {
        (LpOutcome::Optimal, Some(s)) => Ok(s),
        (LpOutcome::Infeasible, _) => Err(Error::Infeasible {
            what: what.into(),
            grid_point: None,
        }),
        (LpOutcome::Unbounded, _) => Err(Error::Domain(format!("{what}: LP is unbounded"))),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(coeffs: &[f64], rhs: f64) -> Constraint {
        Constraint {
            coeffs: coeffs.to_vec(),
            sense: Sense::Le,
            rhs,
        }
    }

    fn ge(coeffs: &[f64], rhs: f64) -> Constraint {
        Constraint {
            coeffs: coeffs.to_vec(),
            sense: Sense::Ge,
            rhs,
        }
    }

    fn eq(coeffs: &[f64], rhs: f64) -> Constraint {
        Constraint {
            coeffs: coeffs.to_vec(),
            sense: Sense::Eq,
            rhs,
        }
    }

    #[test]
    fn textbook_two_variable() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18
        let p = Problem {
            objective: vec![3.0, 5.0],
            constraints: vec![
                le(&[1.0, 0.0], 4.0),
                le(&[0.0, 2.0], 12.0),
                le(&[3.0, 2.0], 18.0),
            ],
        };
        let s = solve_expect_optimal(&p, "textbook").unwrap();
        assert!((s.objective - 36.0).abs() < 1e-8);
        assert!((s.x[0] - 2.0).abs() < 1e-8);
        assert!((s.x[1] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn equality_and_ge_rows() {
        let p = Problem {
            objective: vec![1.0, 1.0],
            constraints: vec![eq(&[1.0, 1.0], 1.0), ge(&[1.0, 0.0], 0.25)],
        };
        let s = solve_expect_optimal(&p, "eq").unwrap();
        assert!((s.objective - 1.0).abs() < 1e-8);
        assert!(s.x[0] >= 0.25 - 1e-9);
        assert!((s.x[0] + s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let p = Problem {
            objective: vec![1.0],
            constraints: vec![le(&[1.0], 1.0), ge(&[1.0], 2.0)],
        };
        let (outcome, _) = solve(&p).unwrap();
        assert_eq!(outcome, LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let p = Problem {
            objective: vec![1.0, 0.0],
            constraints: vec![ge(&[1.0, 1.0], 1.0)],
        };
        let (outcome, _) = solve(&p).unwrap();
        assert_eq!(outcome, LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_normalization() {
        let p = Problem {
            objective: vec![-1.0],
            constraints: vec![ge(&[-1.0], -3.0)],
        };
        let s = solve_expect_optimal(&p, "neg").unwrap();
        assert!(s.x[0].abs() < 1e-9);

        let p = Problem {
            objective: vec![1.0],
            constraints: vec![ge(&[-1.0], -3.0)],
        };
        let s = solve_expect_optimal(&p, "neg2").unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_guard() {
        // classic degenerate instance (Beale); must terminate at optimum 0.05
        let p = Problem {
            objective: vec![0.75, -150.0, 0.02, -6.0],
            constraints: vec![
                le(&[0.25, -60.0, -0.04, 9.0], 0.0),
                le(&[0.5, -90.0, -0.02, 3.0], 0.0),
                le(&[0.0, 0.0, 1.0, 0.0], 1.0),
            ],
        };
        let s = solve_expect_optimal(&p, "beale").unwrap();
        assert!((s.objective - 0.05).abs() < 1e-8, "obj {}", s.objective);
    }

    #[test]
    fn simplex_on_distribution_shape() {
        let degrees = [2usize, 3, 5, 8];
        let objective: Vec<f64> = degrees.iter().map(|&d| 1.0 / d as f64).collect();
        let mut constraints = vec![eq(&[1.0, 1.0, 1.0, 1.0], 1.0)];
        constraints.push(le(&[1.0, 0.0, 0.0, 0.0], 0.3));
        let p = Problem {
            objective,
            constraints,
        };
        let s = solve_expect_optimal(&p, "dist").unwrap();
        assert!((s.x[0] - 0.3).abs() < 1e-8);
        assert!((s.x[1] - 0.7).abs() < 1e-8);
        assert!((s.objective - (0.15 + 0.7 / 3.0)).abs() < 1e-8);
    }

    #[test]
    fn ill_conditioned_monomial_columns() {
        // a shrunken version of the design LPs: monomial rows over [0,1]
        // with a simplex-wide equality; the solution must satisfy every row
        let degrees: Vec<usize> = (2..=25).collect();
        let objective: Vec<f64> = degrees.iter().map(|&d| 1.0 / d as f64).collect();
        let mut constraints = vec![eq(&vec![1.0; degrees.len()], 1.0)];
        for i in 0..=60 {
            let x = i as f64 / 60.0;
            constraints.push(le(
                &degrees
                    .iter()
                    .map(|&d| 0.25 * (1.0 - x).powi(d as i32 - 1))
                    .collect::<Vec<_>>(),
                1.0 - x.powf(1.0 / 15.0) * 0.995,
            ));
        }
        let p = Problem {
            objective,
            constraints: constraints.clone(),
        };
        let s = solve_expect_optimal(&p, "monomial").unwrap();
        for c in &constraints {
            let lhs: f64 = c.coeffs.iter().zip(&s.x).map(|(&a, &v)| a * v).sum();
            match c.sense {
                Sense::Le => assert!(lhs <= c.rhs + 1e-7),
                Sense::Eq => assert!((lhs - c.rhs).abs() < 1e-7),
                Sense::Ge => assert!(lhs >= c.rhs - 1e-7),
            }
        }
        assert!(s.objective > 0.2, "suspiciously weak optimum {}", s.objective);
    }
}
