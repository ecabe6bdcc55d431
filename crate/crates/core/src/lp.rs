//! Two-phase dense simplex for equality-form linear programs.
//!
//! Solves `maximize c.x  subject to  A x = b, x >= 0` on a dense tableau.
//! This is the geometric oracle behind gauge, radial and membership queries,
//! so the solver is deliberately boring: fully deterministic pivoting
//! (largest-coefficient rule with lowest-index ties, switching to Bland's
//! rule after a fixed pivot budget to rule out cycling) and no randomization.
//! Re-solving the same input yields bit-identical output.

use thiserror::Error;

/// `maximize c.x  s.t.  A x = b, x >= 0`, dense row-major `A`.
#[derive(Debug, Clone)]
pub struct StandardLp {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl StandardLp {
    /// `a` is `rows x cols` row-major.
    pub fn new(rows: usize, cols: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self, LpError> {
        if a.len() != rows * cols || b.len() != rows || c.len() != cols {
            return Err(LpError::InvalidInput("matrix/vector shapes disagree".into()));
        }
        if rows > cols {
            return Err(LpError::InvalidInput(format!(
                "{rows} equality constraints on {cols} variables: system is overdetermined"
            )));
        }
        if a.iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(LpError::InvalidInput("non-finite coefficient".into()));
        }
        Ok(StandardLp { rows, cols, a, b, c })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("pivot budget exhausted after {pivots} pivots")]
    CycleLimitExceeded { pivots: usize },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Feasibility / optimality tolerance.
    pub tol: f64,
    /// Pivot count after which entering-variable selection switches from the
    /// largest-coefficient rule to Bland's rule.
    pub bland_after: usize,
    /// Hard pivot budget; exceeding it is reported as a cycle.
    pub max_pivots: usize,
    /// Smallest acceptable pivot magnitude.
    pub pivot_floor: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { tol: 1e-9, bland_after: 500, max_pivots: 50_000, pivot_floor: 1e-11 }
    }
}

struct Tableau {
    m: usize,
    d: usize,
    /// Row stride: d original columns + m artificial columns + rhs.
    width: usize,
    /// (m + 1) rows; the last row carries reduced costs and the objective.
    t: Vec<f64>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
    pivots: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn new(lp: &StandardLp) -> Self {
        let (m, d) = (lp.rows, lp.cols);
        let width = d + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            let flip = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..d {
                t[i * width + j] = flip * lp.a[i * d + j];
            }
            t[i * width + d + i] = 1.0;
            t[i * width + width - 1] = flip * lp.b[i];
        }
        // Phase-1 objective: maximize minus the sum of artificials. With the
        // artificial basis the reduced cost of original column j is the
        // negated column sum, and the objective cell is minus the rhs sum.
        for j in 0..d {
            let mut s = 0.0;
            for i in 0..m {
                s += t[i * width + j];
            }
            t[m * width + j] = -s;
        }
        let mut rhs_sum = 0.0;
        for i in 0..m {
            rhs_sum += t[i * width + width - 1];
        }
        t[m * width + width - 1] = -rhs_sum;

        let basis = (d..d + m).collect();
        let allowed = vec![true; d + m];
        Tableau { m, d, width, t, basis, allowed, pivots: 0 }
    }

    #[inline]
    fn cell(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn objective(&self) -> f64 {
        self.cell(self.m, self.width - 1)
    }

    fn choose_entering(&self, opts: &SimplexOptions) -> Option<usize> {
        let obj = &self.t[self.m * self.width..(self.m + 1) * self.width - 1];
        if self.pivots >= opts.bland_after {
            // Bland: lowest eligible index.
            return (0..self.d + self.m).find(|&j| self.allowed[j] && obj[j] < -opts.tol);
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.d + self.m {
            if !self.allowed[j] {
                continue;
            }
            let r = obj[j];
            if r < -opts.tol && best.map_or(true, |(_, b)| r < b) {
                best = Some((j, r));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Ratio test: minimal rhs/pivot over rows with a positive pivot entry,
    /// ties broken towards the smallest basis index (keeps Bland's guarantee).
    fn choose_leaving(&self, col: usize, opts: &SimplexOptions) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let p = self.cell(i, col);
            if p <= opts.tol {
                continue;
            }
            let ratio = self.cell(i, self.width - 1) / p;
            match best {
                None => best = Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br - opts.tol * (1.0 + br.abs())
                        || ((ratio - br).abs() <= opts.tol * (1.0 + br.abs()) && self.basis[i] < self.basis[bi])
                    {
                        best = Some((i, ratio));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, row: usize, col: usize, opts: &SimplexOptions) -> Result<(), LpError> {
        let w = self.width;
        let p = self.cell(row, col);
        if p.abs() < opts.pivot_floor {
            return Err(LpError::NumericalBreakdown(format!("pivot magnitude {p:.3e}")));
        }
        let inv = 1.0 / p;
        for j in 0..w {
            self.t[row * w + j] *= inv;
        }
        self.t[row * w + col] = 1.0;
        for i in 0..=self.m {
            if i == row {
                continue;
            }
            let f = self.t[i * w + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                self.t[i * w + j] -= f * self.t[row * w + j];
            }
            self.t[i * w + col] = 0.0;
        }
        // Round-off can push a basic value marginally negative; clamp so the
        // ratio test stays sound.
        for i in 0..self.m {
            let v = &mut self.t[i * w + w - 1];
            if *v < 0.0 && *v > -opts.tol {
                *v = 0.0;
            }
        }
        if !self.objective().is_finite() {
            return Err(LpError::NumericalBreakdown("objective became non-finite".into()));
        }
        self.basis[row] = col;
        self.pivots += 1;
        Ok(())
    }

    fn run(&mut self, opts: &SimplexOptions) -> Result<Step, LpError> {
        loop {
            if self.pivots > opts.max_pivots {
                return Err(LpError::CycleLimitExceeded { pivots: self.pivots });
            }
            let Some(col) = self.choose_entering(opts) else {
                return Ok(Step::Optimal);
            };
            let Some(row) = self.choose_leaving(col, opts) else {
                return Ok(Step::Unbounded);
            };
            self.pivot(row, col, opts)?;
        }
    }

    /// Replace the objective row with reduced costs for costs `c` (length d).
    fn install_objective(&mut self, c: &[f64]) {
        let w = self.width;
        for j in 0..w {
            self.t[self.m * w + j] = 0.0;
        }
        for j in 0..self.d {
            self.t[self.m * w + j] = -c[j];
        }
        // Add c_B times each basic row so that basic reduced costs are zero.
        for i in 0..self.m {
            let cb = if self.basis[i] < self.d { c[self.basis[i]] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                self.t[self.m * w + j] += cb * self.t[i * w + j];
            }
        }
        for i in 0..self.m {
            self.t[self.m * w + self.basis[i]] = 0.0;
        }
    }
}

/// Solve an equality-form LP.
///
/// On `Optimal`, the basic solution satisfies `|A x - b|_inf <=
/// tol * (1 + |b|_inf)` and every allowed column has reduced cost
/// `>= -tol` (checked in tests, not re-verified here).
pub fn solve(lp: &StandardLp, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    let mut tab = Tableau::new(lp);
    let b_scale = lp.b.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let feas_tol = opts.tol * (1.0 + b_scale) * (1.0 + lp.rows as f64);

    // Phase 1: drive the artificial variables to zero.
    match tab.run(opts)? {
        Step::Optimal => {}
        Step::Unbounded => {
            return Err(LpError::NumericalBreakdown(
                "phase-1 objective unbounded; the artificial subproblem is always bounded".into(),
            ));
        }
    }
    if tab.objective() < -feas_tol {
        return Ok(LpSolution::Infeasible);
    }

    // Kick artificials that linger in the basis at level zero. If a row has
    // no eligible original column the constraint was redundant; the
    // artificial stays basic at zero and is simply banned from re-entering.
    for i in 0..tab.m {
        if tab.basis[i] >= tab.d {
            let piv = (0..tab.d).find(|&j| tab.cell(i, j).abs() > opts.tol);
            if let Some(j) = piv {
                tab.pivot(i, j, opts)?;
            }
        }
    }
    for j in tab.d..tab.d + tab.m {
        tab.allowed[j] = false;
    }

    // Phase 2 on the original objective.
    tab.install_objective(&lp.c);
    match tab.run(opts)? {
        Step::Unbounded => Ok(LpSolution::Unbounded),
        Step::Optimal => {
            let mut x = vec![0.0; lp.cols];
            for i in 0..tab.m {
                if tab.basis[i] < tab.d {
                    x[tab.basis[i]] = tab.cell(i, tab.width - 1).max(0.0);
                }
            }
            Ok(LpSolution::Optimal { objective: tab.objective(), x })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn solve_default(m: usize, d: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> LpSolution {
        let lp = StandardLp::new(m, d, a, b, c).unwrap();
        solve(&lp, &SimplexOptions::default()).unwrap()
    }

    #[test]
    fn gauge_style_lp_on_the_planar_cross_polytope() {
        // maximize t with t*(1,0) a convex combination of +-e1, +-e2.
        // Columns: t, l1..l4 for e1, -e1, e2, -e2.
        let a = vec![
            1.0, -1.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, 1.0, //
            0.0, 1.0, 1.0, 1.0, 1.0,
        ];
        let b = vec![0.0, 0.0, 1.0];
        let c = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        match solve_default(3, 5, a, b, c) {
            LpSolution::Optimal { objective, x } => {
                assert_relative_eq!(objective, 1.0, epsilon = 1e-9);
                assert_relative_eq!(x[0], 1.0, epsilon = 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn pinned_variable_yields_zero() {
        // maximize x s.t. x = 0.
        match solve_default(1, 1, vec![1.0], vec![0.0], vec![1.0]) {
            LpSolution::Optimal { objective, x } => {
                assert_eq!(objective, 0.0);
                assert_eq!(x[0], 0.0);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn free_maximization_is_unbounded() {
        match solve_default(0, 1, vec![], vec![], vec![1.0]) {
            LpSolution::Unbounded => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        // x1 + x2 = -1 with x >= 0.
        match solve_default(1, 2, vec![1.0, 1.0], vec![-1.0], vec![0.0, 0.0]) {
            LpSolution::Infeasible => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn textbook_problem_with_slacks() {
        // max x + 2y s.t. x + y <= 6, x + 3y <= 12, 2x + y <= 10 (slacked).
        let a = vec![
            1.0, 1.0, 1.0, 0.0, 0.0, //
            1.0, 3.0, 0.0, 1.0, 0.0, //
            2.0, 1.0, 0.0, 0.0, 1.0,
        ];
        let b = vec![6.0, 12.0, 10.0];
        let c = vec![1.0, 2.0, 0.0, 0.0, 0.0];
        match solve_default(3, 5, a, b, c) {
            LpSolution::Optimal { objective, .. } => assert_relative_eq!(objective, 9.0, epsilon = 1e-9),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn beale_cycling_example_terminates_via_bland() {
        // A classic degenerate program that cycles under the plain
        // largest-coefficient rule; the Bland switch must rescue it.
        let a = vec![
            0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0, //
            0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0,
        ];
        let b = vec![0.0, 0.0, 1.0];
        let c = vec![0.75, -150.0, 0.02, -6.0, 0.0, 0.0, 0.0];
        let lp = StandardLp::new(3, 7, a, b, c).unwrap();
        let opts = SimplexOptions { bland_after: 3, ..SimplexOptions::default() };
        match solve(&lp, &opts).unwrap() {
            LpSolution::Optimal { objective, .. } => assert_relative_eq!(objective, 0.05, epsilon = 1e-9),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // x + y = 2 stated twice.
        let a = vec![1.0, 1.0, 1.0, 1.0];
        let b = vec![2.0, 2.0];
        let c = vec![1.0, 0.0];
        match solve_default(2, 2, a, b, c) {
            LpSolution::Optimal { objective, .. } => assert_relative_eq!(objective, 2.0, epsilon = 1e-9),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn resolving_is_bit_identical() {
        let a = vec![
            1.0, 2.0, 0.5, 1.0, 0.0, //
            0.3, -1.0, 2.0, 0.0, 1.0,
        ];
        let b = vec![3.0, 1.5];
        let c = vec![1.0, 0.7, -0.2, 0.0, 0.0];
        let lp = StandardLp::new(2, 5, a, b, c).unwrap();
        let opts = SimplexOptions::default();
        let s1 = solve(&lp, &opts).unwrap();
        let s2 = solve(&lp, &opts).unwrap();
        match (s1, s2) {
            (LpSolution::Optimal { objective: o1, x: x1 }, LpSolution::Optimal { objective: o2, x: x2 }) => {
                assert!(o1 == o2, "objective bits differ");
                assert!(x1 == x2, "solution bits differ");
            }
            other => panic!("expected optimal pair, got {other:?}"),
        }
    }

    #[test]
    fn optimal_solutions_satisfy_the_constraints() {
        // Spot-check the advertised post-condition on a few fixed programs.
        let cases: Vec<(usize, usize, Vec<f64>, Vec<f64>, Vec<f64>)> = vec![
            (2, 4, vec![1.0, 1.0, 1.0, 0.0, 2.0, -1.0, 0.0, 1.0], vec![4.0, 1.0], vec![3.0, 1.0, 0.0, 0.0]),
            (1, 3, vec![1.0, 2.0, 3.0], vec![6.0], vec![0.0, 1.0, 0.5]),
        ];
        for (m, d, a, b, c) in cases {
            let lp = StandardLp::new(m, d, a.clone(), b.clone(), c).unwrap();
            if let LpSolution::Optimal { x, .. } = solve(&lp, &SimplexOptions::default()).unwrap() {
                for i in 0..m {
                    let mut r = -b[i];
                    for j in 0..d {
                        r += a[i * d + j] * x[j];
                    }
                    assert!(r.abs() <= 1e-9 * (1.0 + b[i].abs()), "residual {r} in row {i}");
                }
                assert!(x.iter().all(|&v| v >= 0.0));
            } else {
                panic!("expected optimal");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Feasible-by-construction bounded programs stay optimal, and the
        /// objective is invariant (to 10x solver tolerance) under column
        /// permutations.
        #[test]
        fn objective_invariant_under_column_permutation(
            m in 1usize..4,
            d in 4usize..8,
            seed_entries in proptest::collection::vec(-3.0f64..3.0, 4 * 8),
            x0 in proptest::collection::vec(0.0f64..2.0, 8),
            costs in proptest::collection::vec(-2.0f64..2.0, 8),
            rot in 0usize..8,
        ) {
            // Rows of A from the entry pool, plus a simplex row sum(x) = s to
            // force boundedness.
            let rows = m + 1;
            let mut a = vec![0.0; rows * d];
            for i in 0..m {
                for j in 0..d {
                    a[i * d + j] = seed_entries[i * d + j];
                }
            }
            for j in 0..d {
                a[m * d + j] = 1.0;
            }
            let mut b = vec![0.0; rows];
            for i in 0..rows {
                for j in 0..d {
                    b[i] += a[i * d + j] * x0[j];
                }
            }
            let c: Vec<f64> = costs[..d].to_vec();

            let lp = StandardLp::new(rows, d, a.clone(), b.clone(), c.clone()).unwrap();
            let sol = solve(&lp, &SimplexOptions::default()).unwrap();
            let LpSolution::Optimal { objective: v1, .. } = sol else {
                panic!("feasible bounded program must be optimal, got {sol:?}");
            };

            // Rotate the columns by `rot`.
            let perm: Vec<usize> = (0..d).map(|j| (j + rot) % d).collect();
            let mut a2 = vec![0.0; rows * d];
            let mut c2 = vec![0.0; d];
            for (new_j, &old_j) in perm.iter().enumerate() {
                for i in 0..rows {
                    a2[i * d + new_j] = a[i * d + old_j];
                }
                c2[new_j] = c[old_j];
            }
            let lp2 = StandardLp::new(rows, d, a2, b, c2).unwrap();
            let LpSolution::Optimal { objective: v2, .. } = solve(&lp2, &SimplexOptions::default()).unwrap() else {
                panic!("permuted program lost feasibility?");
            };
            let tol = 10.0 * 1e-9 * (1.0 + v1.abs());
            prop_assert!((v1 - v2).abs() <= tol, "objective moved under permutation: {v1} vs {v2}");
        }
    }
}
