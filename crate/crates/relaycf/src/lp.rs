//! A small dense linear-program solver for the rate polytopes.
//!
//! Two-phase primal simplex with Bland's rule. The problems here are tiny
//! (at most a handful of variables and a few hundred rows), so a dense
//! tableau with deterministic pivoting beats anything cleverer: identical
//! inputs produce identical solutions, bit for bit.

use crate::tol;

/// Pivot entries smaller than this count as zero.
const EPS_PIVOT: f64 = 1e-10;
/// Reduced costs smaller than this do not qualify for entering.
const EPS_COST: f64 = 1e-11;
/// Phase-1 infeasibility below this means the program is feasible.
const EPS_FEAS: f64 = 1e-9;

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub bound: f64,
}

/// Maximize `objective . x` subject to the constraints; variables are
/// nonnegative unless marked free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub free: Vec<bool>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> LinearProgram {
        LinearProgram {
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, coeffs: Vec<f64>, sense: Sense, bound: f64) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint { coeffs, sense, bound });
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let gap = match c.sense {
                Sense::Le => lhs - c.bound,
                Sense::Ge => c.bound - lhs,
            };
            worst = worst.max(gap);
        }
        for (j, &is_free) in self.free.iter().enumerate() {
            if !is_free {
                worst = worst.max(-x[j]);
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { objective: f64, solution: Vec<f64> },
    /// No feasible point; carries the smallest achievable total constraint
    /// violation, useful as a search signal.
    Infeasible { violation: f64 },
    Unbounded,
}

struct Tableau {
    cols: usize,
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Reduced-cost row `z - c`; optimal when all entries >= 0.
    obj: Vec<f64>,
    obj_rhs: f64,
    basis: Vec<usize>,
    enterable: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let factor = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= factor;
        }
        self.rhs[row] /= factor;
        for r in 0..self.a.len() {
            if r == row {
                continue;
            }
            let scale = self.a[r][col];
            if scale != 0.0 {
                for j in 0..self.cols {
                    self.a[r][j] -= scale * self.a[row][j];
                }
                self.a[r][col] = 0.0;
                self.rhs[r] -= scale * self.rhs[row];
            }
        }
        let scale = self.obj[col];
        if scale != 0.0 {
            for j in 0..self.cols {
                self.obj[j] -= scale * self.a[row][j];
            }
            self.obj[col] = 0.0;
            self.obj_rhs -= scale * self.rhs[row];
        }
        self.basis[row] = col;
    }

    /// Bland's rule: enter the lowest-indexed improving column, leave by
    /// minimum ratio with the lowest basic index breaking ties. Returns
    /// false at optimality, panics only on iteration runaway.
    fn run_simplex(&mut self) -> Result<(), Unbounded> {
        for _ in 0..50_000 {
            let entering = (0..self.cols)
                .find(|&j| self.enterable[j] && self.obj[j] < -EPS_COST);
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let coeff = self.a[r][col];
                if coeff > EPS_PIVOT {
                    let ratio = self.rhs[r] / coeff;
                    let better = match leaving {
                        None => true,
                        Some((best_row, best_ratio)) => {
                            ratio < best_ratio - 1e-12
                                || (ratio < best_ratio + 1e-12
                                    && self.basis[r] < self.basis[best_row])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(Unbounded),
            }
        }
        panic!("simplex failed to terminate; the program assembly must be malformed");
    }
}

struct Unbounded;

/// Solves the program. Deterministic: the same program always returns the
/// same outcome and witness.
pub fn solve(lp: &LinearProgram) -> LpOutcome {
    assert_eq!(lp.free.len(), lp.num_vars());
    for c in &lp.constraints {
        assert!(c.bound.is_finite() && c.coeffs.iter().all(|v| v.is_finite()));
    }

    // Expand free variables into differences of nonnegative pairs.
    let mut plus_col = vec![0usize; lp.num_vars()];
    let mut minus_col = vec![usize::MAX; lp.num_vars()];
    let mut ns = 0usize;
    for j in 0..lp.num_vars() {
        plus_col[j] = ns;
        ns += 1;
        if lp.free[j] {
            minus_col[j] = ns;
            ns += 1;
        }
    }

    let m = lp.constraints.len();
    let cols = ns + m + m; // structural, one slack per row, one artificial per row
    let mut a = vec![vec![0.0f64; cols]; m];
    let mut rhs = vec![0.0f64; m];
    let mut basis = vec![0usize; m];
    let mut enterable = vec![true; cols];
    let mut artificial_cols = Vec::new();

    for (r, c) in lp.constraints.iter().enumerate() {
        let flip = if c.bound < 0.0 { -1.0 } else { 1.0 };
        for j in 0..lp.num_vars() {
            a[r][plus_col[j]] = flip * c.coeffs[j];
            if lp.free[j] {
                a[r][minus_col[j]] = -flip * c.coeffs[j];
            }
        }
        rhs[r] = flip * c.bound;
        let sense = if flip < 0.0 {
            match c.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
            }
        } else {
            c.sense
        };
        let slack_col = ns + r;
        a[r][slack_col] = match sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
        };
        if sense == Sense::Le {
            basis[r] = slack_col;
        } else {
            let art_col = ns + m + r;
            a[r][art_col] = 1.0;
            basis[r] = art_col;
            artificial_cols.push(art_col);
        }
    }
    for &col in &artificial_cols {
        // Unused artificial slots stay enterable=false from the start.
        enterable[col] = true;
    }
    for r in 0..m {
        let art_col = ns + m + r;
        if !artificial_cols.contains(&art_col) {
            enterable[art_col] = false;
        }
    }

    let mut t = Tableau {
        cols,
        a,
        rhs,
        obj: vec![0.0; cols],
        obj_rhs: 0.0,
        basis,
        enterable,
    };

    // Phase 1: minimize the artificial total, priced out over the basis.
    if !artificial_cols.is_empty() {
        let mut phase1 = vec![0.0f64; cols];
        for &col in &artificial_cols {
            phase1[col] = -1.0;
        }
        set_objective(&mut t, &phase1);
        if t.run_simplex().is_err() {
            unreachable!("phase 1 is bounded below by zero");
        }
        let violation = -t.obj_rhs;
        if violation > EPS_FEAS {
            return LpOutcome::Infeasible { violation };
        }
        // Pivot leftover artificials out of the basis where possible and bar
        // them from ever entering again.
        for r in 0..m {
            if artificial_cols.contains(&t.basis[r]) {
                if let Some(col) =
                    (0..ns + m).find(|&j| t.enterable[j] && t.a[r][j].abs() > EPS_PIVOT)
                {
                    t.pivot(r, col);
                }
            }
        }
        for &col in &artificial_cols {
            t.enterable[col] = false;
        }
    }

    // Phase 2: the real objective.
    let mut phase2 = vec![0.0f64; cols];
    for j in 0..lp.num_vars() {
        phase2[plus_col[j]] = lp.objective[j];
        if lp.free[j] {
            phase2[minus_col[j]] = -lp.objective[j];
        }
    }
    set_objective(&mut t, &phase2);
    if t.run_simplex().is_err() {
        return LpOutcome::Unbounded;
    }

    let mut expanded = vec![0.0f64; cols];
    for r in 0..m {
        expanded[t.basis[r]] = t.rhs[r];
    }
    let mut solution = vec![0.0f64; lp.num_vars()];
    for j in 0..lp.num_vars() {
        solution[j] = expanded[plus_col[j]];
        if lp.free[j] {
            solution[j] -= expanded[minus_col[j]];
        }
    }
    let objective: f64 = lp
        .objective
        .iter()
        .zip(&solution)
        .map(|(c, x)| c * x)
        .sum();
    let residual = lp.violation(&solution);
    assert!(
        residual <= tol::LP_RESIDUAL * 10.0,
        "simplex returned an infeasible point (residual {residual})"
    );
    LpOutcome::Optimal { objective, solution }
}

fn set_objective(t: &mut Tableau, costs: &[f64]) {
    for j in 0..t.cols {
        let priced: f64 = (0..t.a.len())
            .map(|r| costs[t.basis[r]] * t.a[r][j])
            .sum();
        t.obj[j] = priced - costs[j];
    }
    t.obj_rhs = (0..t.a.len()).map(|r| costs[t.basis[r]] * t.rhs[r]).sum();
}
