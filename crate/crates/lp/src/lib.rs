//! Dense two-phase simplex for small linear programs.
//!
//! Programs are stated in the form
//!
//! ```text
//! minimize    c·v
//! subject to  A v  = b
//!             G v <= h
//!             v   >= 0
//! ```
//!
//! The solver keeps a full dense tableau and pivots with Bland's rule, so it
//! always terminates and two runs on the same input follow the same pivot
//! sequence. It is meant for programs with a handful of rows and up to a few
//! thousand columns, such as mixtures over deterministic strategies.

use thiserror::Error;

/// Pivot budget used by [`solve`].
pub const DEFAULT_MAX_PIVOTS: usize = 1_000_000;

/// Smallest tableau entry accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-9;

/// Phase-one objective above which a program is declared infeasible
/// (scaled by the largest right-hand side).
const FEASIBILITY_TOL: f64 = 1e-9;

/// Reduced costs above `-OPTIMALITY_TOL` are treated as nonnegative.
const OPTIMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("pivot limit of {0} reached")]
    IterationLimit(usize),
}

/// A linear program over nonnegative variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    /// Objective coefficients `c`; the program minimizes `c·v`.
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ineq_matrix: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds the constraint `row·v = rhs`.
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    /// Adds the constraint `row·v <= rhs`.
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ineq_matrix.push(row);
        self.ineq_rhs.push(rhs);
        self
    }

    /// Adds the constraint `row·v >= rhs`, stored as `-row·v <= -rhs`.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_le(row.into_iter().map(|a| -a).collect(), -rhs)
    }

    pub fn check_dimensions(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.eq_matrix.len() != self.eq_rhs.len() {
            return Err(LpError::DimensionMismatch(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_matrix.len(),
                self.eq_rhs.len()
            )));
        }
        if self.ineq_matrix.len() != self.ineq_rhs.len() {
            return Err(LpError::DimensionMismatch(format!(
                "{} inequality rows but {} right-hand sides",
                self.ineq_matrix.len(),
                self.ineq_rhs.len()
            )));
        }
        for (kind, rows) in [("equality", &self.eq_matrix), ("inequality", &self.ineq_matrix)] {
            if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(LpError::DimensionMismatch(format!(
                    "{kind} row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !finite(&self.objective) {
            return Err(LpError::NonFinite("objective"));
        }
        if !self.eq_matrix.iter().all(|r| finite(r)) || !finite(&self.eq_rhs) {
            return Err(LpError::NonFinite("equality constraints"));
        }
        if !self.ineq_matrix.iter().all(|r| finite(r)) || !finite(&self.ineq_rhs) {
            return Err(LpError::NonFinite("inequality constraints"));
        }
        Ok(())
    }

    /// Largest constraint violation of `v`: equality residuals, inequality
    /// excess and negative entries.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(v).map(|(a, x)| a * x).sum::<f64>();
        let eq = self
            .eq_matrix
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, b)| (dot(row) - b).abs());
        let ineq = self
            .ineq_matrix
            .iter()
            .zip(&self.ineq_rhs)
            .map(|(row, h)| (dot(row) - h).max(0.0));
        let sign = v.iter().map(|x| (-x).max(0.0));
        eq.chain(ineq).chain(sign).fold(0.0, f64::max)
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// The Lagrangian dual, restated as a minimization over nonnegative
    /// variables `(y+, y-, w)`.
    ///
    /// Equality multipliers are `y = y+ - y-` and inequality multipliers are
    /// `z = -w`. The dual's optimal value is the negated primal optimum.
    pub fn dual(&self) -> LinearProgram {
        let n = self.num_vars();
        let me = self.eq_matrix.len();
        let mi = self.ineq_matrix.len();
        let mut objective = Vec::with_capacity(2 * me + mi);
        objective.extend(self.eq_rhs.iter().map(|b| -b));
        objective.extend(self.eq_rhs.iter().copied());
        objective.extend(self.ineq_rhs.iter().copied());
        let mut dual = LinearProgram::new(objective);
        for j in 0..n {
            let mut row = Vec::with_capacity(2 * me + mi);
            row.extend(self.eq_matrix.iter().map(|r| r[j]));
            row.extend(self.eq_matrix.iter().map(|r| -r[j]));
            row.extend(self.ineq_matrix.iter().map(|r| -r[j]));
            dual.add_le(row, self.objective[j]);
        }
        dual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Optimal objective; `+inf` when infeasible, `-inf` when unbounded.
    pub value: f64,
    /// Primal solution (empty unless optimal).
    pub solution: Vec<f64>,
    /// Constraint multipliers, equality rows first, then inequality rows.
    /// Inequality multipliers are nonpositive at a minimum. Empty unless
    /// optimal.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub max_pivots: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_pivots: DEFAULT_MAX_PIVOTS,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_with(lp, &SolveOptions::default())
}

pub fn solve_with(lp: &LinearProgram, options: &SolveOptions) -> Result<LpOutcome, LpError> {
    lp.check_dimensions()?;
    let mut tab = Tableau::build(lp);
    let max_pivots = options.max_pivots;

    // Phase one: minimize the sum of artificials.
    let mut phase_one = vec![0.0; tab.cols + 1];
    phase_one[tab.artificial_start..tab.cols].fill(1.0);
    tab.set_objective(&phase_one);
    let all_columns = tab.cols;
    if tab.run(all_columns, max_pivots)? == Run::Unbounded {
        unreachable!("phase-one objective is bounded below by zero");
    }
    let scale = 1.0 + tab.rhs_scale;
    if tab.objective_value() > FEASIBILITY_TOL * scale {
        return Ok(LpOutcome {
            status: LpStatus::Infeasible,
            value: f64::INFINITY,
            solution: Vec::new(),
            duals: Vec::new(),
            iterations: tab.iterations,
        });
    }
    tab.drive_out_artificials(max_pivots)?;

    // Phase two on the structural and slack columns.
    let mut cost = vec![0.0; tab.cols + 1];
    cost[..lp.num_vars()].copy_from_slice(&lp.objective);
    tab.set_objective(&cost);
    let artificial_start = tab.artificial_start;
    if tab.run(artificial_start, max_pivots)? == Run::Unbounded {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            solution: Vec::new(),
            duals: Vec::new(),
            iterations: tab.iterations,
        });
    }

    let solution = tab.primal(lp.num_vars());
    let duals = tab.duals();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        value: lp.objective_value(&solution),
        solution,
        duals,
        iterations: tab.iterations,
    })
}

#[derive(Debug, PartialEq, Eq)]
enum Run {
    Optimal,
    Unbounded,
}

/// Row-major dense tableau. Column `cols` holds the right-hand side.
struct Tableau {
    rows: usize,
    cols: usize,
    artificial_start: usize,
    data: Vec<f64>,
    /// Reduced costs; the last entry is the negated objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Column that formed the identity for each row at start.
    initial_basis: Vec<usize>,
    /// +1 or -1: the factor applied to each input row to make its rhs >= 0.
    row_sign: Vec<f64>,
    /// Signed input rows including slack and artificial columns.
    original: Vec<f64>,
    rhs_scale: f64,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars();
        let me = lp.eq_matrix.len();
        let mi = lp.ineq_matrix.len();
        let rows = me + mi;

        let mut row_sign = Vec::with_capacity(rows);
        let mut needs_artificial = Vec::with_capacity(rows);
        for &b in &lp.eq_rhs {
            row_sign.push(if b < 0.0 { -1.0 } else { 1.0 });
            needs_artificial.push(true);
        }
        for &h in &lp.ineq_rhs {
            let negative = h < 0.0;
            row_sign.push(if negative { -1.0 } else { 1.0 });
            needs_artificial.push(negative);
        }
        let n_art = needs_artificial.iter().filter(|&&a| a).count();
        let artificial_start = n + mi;
        let cols = artificial_start + n_art;
        let width = cols + 1;

        let mut data = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut next_art = artificial_start;
        let inputs = lp
            .eq_matrix
            .iter()
            .zip(&lp.eq_rhs)
            .chain(lp.ineq_matrix.iter().zip(&lp.ineq_rhs));
        for (r, (coeffs, &rhs)) in inputs.enumerate() {
            let s = row_sign[r];
            let row = &mut data[r * width..(r + 1) * width];
            for (dst, &a) in row[..n].iter_mut().zip(coeffs) {
                *dst = s * a;
            }
            if r >= me {
                row[n + (r - me)] = s;
                basis[r] = n + (r - me);
            }
            if needs_artificial[r] {
                row[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            row[cols] = s * rhs;
        }
        let rhs_scale = lp
            .eq_rhs
            .iter()
            .chain(&lp.ineq_rhs)
            .fold(0.0f64, |m, b| m.max(b.abs()));

        Tableau {
            rows,
            cols,
            artificial_start,
            original: data.clone(),
            data,
            obj: vec![0.0; width],
            initial_basis: basis.clone(),
            basis,
            row_sign,
            rhs_scale,
            iterations: 0,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.cols]
    }

    /// Installs cost vector `cost` (length `cols + 1`, last entry ignored)
    /// and prices out the current basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let width = self.cols + 1;
        self.obj.copy_from_slice(cost);
        self.obj[self.cols] = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * width..(r + 1) * width];
                for (o, a) in self.obj.iter_mut().zip(row) {
                    *o -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.cols + 1;
        let inv = 1.0 / self.at(pr, pc);
        {
            let row = &mut self.data[pr * width..(pr + 1) * width];
            for a in row.iter_mut() {
                *a *= inv;
            }
            row[pc] = 1.0;
        }
        let (before, rest) = self.data.split_at_mut(pr * width);
        let (pivot_row, after) = rest.split_at_mut(width);
        for row in before.chunks_exact_mut(width).chain(after.chunks_exact_mut(width)) {
            let f = row[pc];
            if f != 0.0 {
                for (a, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *a -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (o, p) in self.obj.iter_mut().zip(pivot_row.iter()) {
                *o -= f * p;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn count_pivot(&mut self, max_pivots: usize) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > max_pivots {
            Err(LpError::IterationLimit(max_pivots))
        } else {
            Ok(())
        }
    }

    /// Bland's rule simplex over columns `0..allowed`.
    fn run(&mut self, allowed: usize, max_pivots: usize) -> Result<Run, LpError> {
        loop {
            let Some(entering) = (0..allowed).find(|&j| self.obj[j] < -OPTIMALITY_TOL) else {
                return Ok(Run::Optimal);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, entering);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.at(r, self.cols).max(0.0) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((best_r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if (!tie && ratio < best) || (tie && self.basis[r] < self.basis[best_r]) {
                            Some((r, ratio))
                        } else {
                            Some((best_r, best))
                        }
                    }
                };
            }
            let Some((pr, _)) = leaving else {
                return Ok(Run::Unbounded);
            };
            self.count_pivot(max_pivots)?;
            self.pivot(pr, entering);
        }
    }

    /// Pivots zero-valued artificials out of the basis where possible. Rows
    /// whose non-artificial entries are all zero are redundant and keep
    /// their artificial at zero for the rest of the solve.
    fn drive_out_artificials(&mut self, max_pivots: usize) -> Result<(), LpError> {
        let width = self.cols + 1;
        for r in 0..self.rows {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            let candidate = (0..self.artificial_start).find(|&j| self.at(r, j).abs() > PIVOT_TOL);
            if let Some(c) = candidate {
                self.data[r * width + self.cols] = 0.0;
                self.count_pivot(max_pivots)?;
                self.pivot(r, c);
            }
        }
        Ok(())
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut full = vec![0.0; self.cols];
        for r in 0..self.rows {
            full[self.basis[r]] = self.at(r, self.cols);
        }
        if let Some(refined) = self.refine_basic_solution() {
            if refined.iter().all(|&x| x >= -1e-10) {
                for (r, x) in refined.into_iter().enumerate() {
                    full[self.basis[r]] = x;
                }
            }
        }
        full.truncate(n);
        for x in &mut full {
            if *x <= 0.0 {
                *x = 0.0;
            }
        }
        full
    }

    /// Re-solves `B x_B = b` against the untouched input rows, removing the
    /// drift accumulated over many pivots.
    fn refine_basic_solution(&self) -> Option<Vec<f64>> {
        let m = self.rows;
        let width = self.cols + 1;
        let mut aug = vec![0.0; m * (m + 1)];
        for r in 0..m {
            for (k, &col) in self.basis.iter().enumerate() {
                aug[r * (m + 1) + k] = self.original[r * width + col];
            }
            aug[r * (m + 1) + m] = self.original[r * width + self.cols];
        }
        solve_dense(&mut aug, m)
    }

    fn duals(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let y_signed = -self.obj[self.initial_basis[r]];
                let y = self.row_sign[r] * y_signed;
                if y == 0.0 {
                    0.0
                } else {
                    y
                }
            })
            .collect()
    }
}

/// Gaussian elimination with partial pivoting on an `m x (m+1)` augmented
/// matrix. Returns `None` if the matrix is numerically singular.
fn solve_dense(aug: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let w = m + 1;
    for col in 0..m {
        let (piv, max) = (col..m)
            .map(|r| (r, aug[r * w + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if max < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..w {
                aug.swap(piv * w + k, col * w + k);
            }
        }
        let p = aug[col * w + col];
        for r in col + 1..m {
            let f = aug[r * w + col] / p;
            if f != 0.0 {
                for k in col..w {
                    aug[r * w + k] -= f * aug[col * w + k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = aug[r * w + m];
        for k in r + 1..m {
            s -= aug[r * w + k] * x[k];
        }
        x[r] = s / aug[r * w + r];
    }
    Some(x)
}
