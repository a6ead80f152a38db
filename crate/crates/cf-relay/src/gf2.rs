//! Dense linear algebra over the two-element field, on u64 limbs.

/// Row-major dense bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    pub rows: usize,
    pub cols: usize,
    limbs_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        let limbs_per_row = cols.div_ceil(64);
        BitMatrix {
            rows,
            cols,
            limbs_per_row,
            data: vec![0; rows * limbs_per_row],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.limbs_per_row + (c >> 6)] >> (c & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let limb = &mut self.data[r * self.limbs_per_row + (c >> 6)];
        if v {
            *limb |= 1 << (c & 63);
        } else {
            *limb &= !(1 << (c & 63));
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.limbs_per_row + (c >> 6)] ^= 1 << (c & 63);
    }

    /// row r ^= row s
    pub fn xor_rows(&mut self, r: usize, s: usize) {
        debug_assert!(r != s);
        let w = self.limbs_per_row;
        let (rs, ss) = (r * w, s * w);
        for i in 0..w {
            let v = self.data[ss + i];
            self.data[rs + i] ^= v;
        }
    }

    pub fn row_is_zero(&self, r: usize) -> bool {
        let w = self.limbs_per_row;
        self.data[r * w..(r + 1) * w].iter().all(|&l| l == 0)
    }
}

/// Result of solving `A x = b` over the binary field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Exactly one solution.
    Unique(Vec<bool>),
    /// Consistent but underdetermined; carries one particular solution, the
    /// free column indices, and the per-column mask of values shared by
    /// every solution.
    Underdetermined {
        particular: Vec<bool>,
        free_cols: Vec<usize>,
        forced: Vec<bool>,
    },
    /// No solution: some equation reduces to 0 = 1.
    Inconsistent,
}

/// Gaussian elimination with partial pivoting by column order. `b` must have
/// one bit per row of `a`. Consumes copies; inputs are left untouched.
pub fn solve(a: &BitMatrix, b: &[bool]) -> SolveOutcome {
    assert_eq!(a.rows, b.len());
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; m.cols];
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let Some(pivot) = (row..m.rows).find(|&r| m.get(r, col)) else {
            continue;
        };
        if pivot != row {
            // swap rows by xor trick is wrong; swap properly
            for c in 0..m.limbs_per_row {
                m.data.swap(row * m.limbs_per_row + c, pivot * m.limbs_per_row + c);
            }
            rhs.swap(row, pivot);
        }
        for r in 0..m.rows {
            if r != row && m.get(r, col) {
                m.xor_rows(r, row);
                let v = rhs[row];
                rhs[r] ^= v;
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
    }
    // zero rows with nonzero rhs are contradictions
    for r in 0..m.rows {
        if rhs[r] && m.row_is_zero(r) {
            return SolveOutcome::Inconsistent;
        }
    }
    let mut x = vec![false; m.cols];
    let mut free_cols = Vec::new();
    for col in 0..m.cols {
        match pivot_of_col[col] {
            Some(r) => x[col] = rhs[r],
            None => free_cols.push(col),
        }
    }
    if free_cols.is_empty() {
        SolveOutcome::Unique(x)
    } else {
        // a pivot column is forced exactly when its reduced row touches no
        // free column: its value is the same in every solution
        let mut forced = vec![false; m.cols];
        for col in 0..m.cols {
            if let Some(r) = pivot_of_col[col] {
                forced[col] = !free_cols.iter().any(|&f| m.get(r, f));
            }
        }
        SolveOutcome::Underdetermined {
            particular: x,
            free_cols,
            forced,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[usize]], cols: usize) -> BitMatrix {
        let mut m = BitMatrix::zero(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            for &c in *row {
                m.set(r, c, true);
            }
        }
        m
    }

    #[test]
    fn unique_solution() {
        // x0 ^ x1 = 1, x1 = 1, x1 ^ x2 = 0
        let a = from_rows(&[&[0, 1], &[1], &[1, 2]], 3);
        match solve(&a, &[true, true, false]) {
            SolveOutcome::Unique(x) => assert_eq!(x, vec![false, true, true]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_detected() {
        let a = from_rows(&[&[0], &[0]], 1);
        assert_eq!(solve(&a, &[true, false]), SolveOutcome::Inconsistent);
    }

    #[test]
    fn underdetermined_reports_free_columns() {
        let a = from_rows(&[&[0, 1, 2]], 3);
        match solve(&a, &[true]) {
            SolveOutcome::Underdetermined {
                particular,
                free_cols,
                forced,
            } => {
                // particular must satisfy the equation
                assert!(particular[0] ^ particular[1] ^ particular[2]);
                assert_eq!(free_cols.len(), 2);
                assert!(forced.iter().all(|&f| !f));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn random_systems_verify() {
        let mut rng = crate::rng::Rng::from_seed(31);
        for trial in 0..50 {
            let rows = 8 + rng.gen_range(8);
            let cols = 8 + rng.gen_range(8);
            let mut a = BitMatrix::zero(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    if rng.gen_bool(0.3) {
                        a.set(r, c, true);
                    }
                }
            }
            // choose a ground-truth x and derive b so the system is consistent
            let x_true: Vec<bool> = (0..cols).map(|_| rng.gen_bool(0.5)).collect();
            let b: Vec<bool> = (0..rows)
                .map(|r| (0..cols).filter(|&c| a.get(r, c)).fold(false, |acc, c| acc ^ x_true[c]))
                .collect();
            match solve(&a, &b) {
                SolveOutcome::Unique(x) => {
                    assert_eq!(x, x_true, "trial {trial}");
                }
                SolveOutcome::Underdetermined { particular, .. } => {
                    for r in 0..rows {
                        let got = (0..cols)
                            .filter(|&c| a.get(r, c))
                            .fold(false, |acc, c| acc ^ particular[c]);
                        assert_eq!(got, b[r], "trial {trial} row {r}");
                    }
                }
                SolveOutcome::Inconsistent => panic!("consistent system flagged inconsistent"),
            }
        }
    }
}
