//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Solves `maximize c^T x  s.t.  A x = b, x >= 0` on dense tableaus. Sized for
//! desk-scale problems (a few thousand variables at most); Bland's rule keeps
//! degenerate instances from cycling at the cost of speed, which is
//! irrelevant here.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal solution (zeros unless status is `Optimal`).
    pub x: DVector<f64>,
    /// Objective value `c^T x` (0 unless status is `Optimal`).
    pub objective_value: f64,
}

/// Equality-form linear program `maximize c^T x  s.t.  A x = b, x >= 0`.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub objective: DVector<f64>,
    pub constraints: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

struct Tableau {
    /// `rows x (n_total + 1)` matrix; last column is the RHS.
    t: DMatrix<f64>,
    /// Basic variable per row.
    basis: Vec<usize>,
    /// Reduced-cost row for the current (minimization) objective.
    cost: DVector<f64>,
    /// Current objective value (minimization sense).
    value: f64,
    n_structural: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.t.nrows()
    }

    fn n_total(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.t[(row, col)];
        let ncols = self.t.ncols();
        for j in 0..ncols {
            self.t[(row, j)] /= pivot;
        }
        for i in 0..self.rows() {
            if i == row {
                continue;
            }
            let factor = self.t[(i, col)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..ncols {
                self.t[(i, j)] -= factor * self.t[(row, j)];
            }
        }
        let cost_factor = self.cost[col];
        if cost_factor != 0.0 {
            for j in 0..self.n_total() {
                self.cost[j] -= cost_factor * self.t[(row, j)];
            }
            // The entering variable comes in at level theta = rhs of the
            // pivoted row, changing the objective by r_col * theta.
            self.value += cost_factor * self.t[(row, self.n_total())];
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering variable is the lowest-index column with a
    /// negative reduced cost; leaving row is the lowest-index basic variable
    /// among the minimum-ratio rows.
    fn iterate(&mut self, allowed: &dyn Fn(usize) -> bool) -> LpStatus {
        loop {
            let mut entering = None;
            for j in 0..self.n_total() {
                if allowed(j) && self.cost[j] < -PIVOT_TOL && !self.basis.contains(&j) {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return LpStatus::Optimal;
            };

            let rhs_col = self.n_total();
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.t[(i, col)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(i, rhs_col)] / a;
                    match leaving {
                        None => leaving = Some((i, ratio)),
                        Some((best_row, best_ratio)) => {
                            if ratio < best_ratio - PIVOT_TOL
                                || ((ratio - best_ratio).abs() <= PIVOT_TOL
                                    && self.basis[i] < self.basis[best_row])
                            {
                                leaving = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return LpStatus::Unbounded;
            };
            self.pivot(row, col);
        }
    }

    /// Recomputes the reduced-cost row for a new minimization objective.
    fn set_objective(&mut self, c_min: &DVector<f64>) {
        let n = self.n_total();
        let rhs_col = n;
        let mut cost = DVector::zeros(n);
        let mut value = 0.0;
        for j in 0..n {
            cost[j] = c_min[j];
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c_min[b];
            if cb == 0.0 {
                continue;
            }
            for j in 0..n {
                cost[j] -= cb * self.t[(i, j)];
            }
            value += cb * self.t[(i, rhs_col)];
        }
        self.cost = cost;
        self.value = value;
    }
}

/// Two-phase dense simplex.
pub fn solve_standard_form(lp: &StandardLp) -> LpOutcome {
    let m = lp.rhs.len();
    let n = lp.objective.len();
    assert_eq!(lp.constraints.nrows(), m, "constraint rows");
    assert_eq!(lp.constraints.ncols(), n, "constraint cols");

    // Phase 1 tableau: [A | I | b] with rows flipped so b >= 0.
    let n_total = n + m;
    let mut t = DMatrix::zeros(m, n_total + 1);
    for i in 0..m {
        let flip = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = flip * lp.constraints[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, n_total)] = flip * lp.rhs[i];
    }
    let basis: Vec<usize> = (n..n_total).collect();
    let mut tab = Tableau {
        t,
        basis,
        cost: DVector::zeros(n_total),
        value: 0.0,
        n_structural: n,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = DVector::zeros(n_total);
    for j in n..n_total {
        phase1_cost[j] = 1.0;
    }
    tab.set_objective(&phase1_cost);
    if tab.iterate(&|_| true) == LpStatus::Unbounded {
        unreachable!("phase-1 objective is bounded below by zero");
    }
    if tab.value > FEAS_TOL {
        return LpOutcome {
            status: LpStatus::Infeasible,
            x: DVector::zeros(n),
            objective_value: 0.0,
        };
    }

    // Drive remaining artificial variables out of the basis where possible;
    // rows where no structural pivot exists are redundant and harmless (the
    // artificial stays basic at level zero and its column is blocked).
    for row in 0..m {
        if tab.basis[row] >= n {
            let mut pivot_col = None;
            for j in 0..n {
                if tab.t[(row, j)].abs() > PIVOT_TOL {
                    pivot_col = Some(j);
                    break;
                }
            }
            if let Some(col) = pivot_col {
                tab.pivot(row, col);
            }
        }
    }

    // Phase 2: minimize -c over structural columns only.
    let mut phase2_cost = DVector::zeros(n_total);
    for j in 0..n {
        phase2_cost[j] = -lp.objective[j];
    }
    tab.set_objective(&phase2_cost);
    let n_structural = tab.n_structural;
    let status = tab.iterate(&|j| j < n_structural);
    if status == LpStatus::Unbounded {
        return LpOutcome {
            status,
            x: DVector::zeros(n),
            objective_value: 0.0,
        };
    }

    let mut x = DVector::zeros(n);
    let rhs_col = tab.n_total();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.t[(i, rhs_col)];
        }
    }
    let objective_value = lp.objective.dot(&x);
    LpOutcome {
        status: LpStatus::Optimal,
        x,
        objective_value,
    }
}
