//! Occupancy-measure linear programs: the exact CMDP optimum and the Slater
//! margin.
//!
//! Over the discounted state-action visitation distribution `nu`, values are
//! linear: `V_i(rho) = <nu, r_i> / (1 - gamma)`, and `nu` ranges over the
//! polytope cut out by the flow constraints
//! `sum_a nu(s,a) = (1-gamma) rho(s) + gamma sum_{s',a'} P(s|s',a') nu(s',a')`.

use mdp_core::{Policy, TabularCmdp};
use nalgebra::{DMatrix, DVector};

use crate::simplex::{solve_standard_form, LpStatus, StandardLp};
use crate::OracleError;

/// Exact CMDP solution recovered from the occupancy-measure LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Optimal objective value `V_0^*(rho)`.
    pub optimal_value: f64,
    /// Optimal occupancy measure, |S| x |A|.
    pub occupancy: DMatrix<f64>,
    /// Policy recovered as `nu(s,a) / sum_a nu(s,a)`, uniform on states with
    /// no occupancy mass.
    pub policy: Policy,
}

/// LP outcome: infeasible and unbounded are results, not errors.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(sol) => Some(sol),
            _ => None,
        }
    }

    pub fn expect_optimal(&self) -> &LpSolution {
        self.optimal()
            .expect("LP did not reach an optimal solution")
    }
}

/// Column index of `nu(s, a)` in the LP.
fn col(s: usize, a: usize, n_actions: usize) -> usize {
    s * n_actions + a
}

/// Flow-constraint rows shared by both LPs: one row per state over the
/// `n_vars` leading occupancy columns of a matrix with `total_cols` columns.
fn flow_rows(cmdp: &TabularCmdp, total_cols: usize) -> (DMatrix<f64>, DVector<f64>) {
    let (ns, na) = (cmdp.n_states(), cmdp.n_actions());
    let gamma = cmdp.gamma();
    let mut a = DMatrix::zeros(ns, total_cols);
    let mut b = DVector::zeros(ns);
    for s in 0..ns {
        for s2 in 0..ns {
            for a2 in 0..na {
                let mut coeff = if s2 == s { 1.0 } else { 0.0 };
                coeff -= gamma * cmdp.mdp().prob(s2, a2, s);
                if coeff != 0.0 {
                    a[(s, col(s2, a2, na))] = coeff;
                }
            }
        }
        b[s] = (1.0 - gamma) * cmdp.mdp().rho()[s];
    }
    (a, b)
}

fn occupancy_to_policy(occupancy: &DMatrix<f64>) -> Policy {
    let (ns, na) = (occupancy.nrows(), occupancy.ncols());
    let mut probs = DMatrix::zeros(ns, na);
    for s in 0..ns {
        let mass: f64 = (0..na).map(|a| occupancy[(s, a)].max(0.0)).sum();
        if mass > 1e-12 {
            for a in 0..na {
                probs[(s, a)] = occupancy[(s, a)].max(0.0) / mass;
            }
            // Exact renormalization after clipping stray negatives.
            let row_sum: f64 = (0..na).map(|a| probs[(s, a)]).sum();
            for a in 0..na {
                probs[(s, a)] /= row_sum;
            }
        } else {
            // Unreachable state under nu*: any action is optimal.
            for a in 0..na {
                probs[(s, a)] = 1.0 / na as f64;
            }
        }
    }
    Policy::from_probs(probs).expect("recovered policy rows are normalized")
}

/// Solves the CMDP exactly:
/// `max <nu, r_0>/(1-gamma)` over the occupancy polytope subject to
/// `<nu, r_i>/(1-gamma) >= c_i`.
pub fn lp_solve_cmdp(cmdp: &TabularCmdp) -> Result<LpOutcome, OracleError> {
    let (ns, na, m) = (cmdp.n_states(), cmdp.n_actions(), cmdp.num_constraints());
    let n_occ = ns * na;
    let n_vars = n_occ + m; // occupancy + constraint surpluses
    let rows = ns + m;

    let (flow_a, flow_b) = flow_rows(cmdp, n_vars);
    let mut a = DMatrix::zeros(rows, n_vars);
    let mut b = DVector::zeros(rows);
    a.view_mut((0, 0), (ns, n_vars)).copy_from(&flow_a);
    b.rows_mut(0, ns).copy_from(&flow_b);
    for i in 0..m {
        let reward = cmdp.reward(i + 1);
        for s in 0..ns {
            for act in 0..na {
                a[(ns + i, col(s, act, na))] = reward[(s, act)];
            }
        }
        a[(ns + i, n_occ + i)] = -1.0;
        b[ns + i] = (1.0 - cmdp.gamma()) * cmdp.thresholds()[i];
    }

    let mut objective = DVector::zeros(n_vars);
    let r0 = cmdp.reward(0);
    let scale = 1.0 / (1.0 - cmdp.gamma());
    for s in 0..ns {
        for act in 0..na {
            objective[col(s, act, na)] = r0[(s, act)] * scale;
        }
    }

    let outcome = solve_standard_form(&StandardLp {
        objective,
        constraints: a,
        rhs: b,
    });
    match outcome.status {
        LpStatus::Infeasible => Ok(LpOutcome::Infeasible),
        LpStatus::Unbounded => Ok(LpOutcome::Unbounded),
        LpStatus::Optimal => {
            let mut occupancy = DMatrix::zeros(ns, na);
            for s in 0..ns {
                for act in 0..na {
                    occupancy[(s, act)] = outcome.x[col(s, act, na)];
                }
            }
            let policy = occupancy_to_policy(&occupancy);
            Ok(LpOutcome::Optimal(LpSolution {
                optimal_value: outcome.objective_value,
                occupancy,
                policy,
            }))
        }
    }
}

/// Largest uniform constraint slack achievable by any policy:
/// `max t  s.t.  <nu, r_i>/(1-gamma) >= c_i + t` over the occupancy
/// polytope. Negative means no feasible policy exists; `+inf` is returned
/// for unconstrained instances (m = 0).
pub fn slater_margin(cmdp: &TabularCmdp) -> Result<f64, OracleError> {
    Ok(slater_margin_with_policy(cmdp)?.0)
}

/// [`slater_margin`] together with the margin-achieving policy (`None` for
/// unconstrained instances).
pub fn slater_margin_with_policy(cmdp: &TabularCmdp) -> Result<(f64, Option<Policy>), OracleError> {
    let (ns, na, m) = (cmdp.n_states(), cmdp.n_actions(), cmdp.num_constraints());
    if m == 0 {
        return Ok((f64::INFINITY, None));
    }
    let n_occ = ns * na;
    // Columns: occupancy, t+, t-, surpluses.
    let n_vars = n_occ + 2 + m;
    let rows = ns + m;

    let (flow_a, flow_b) = flow_rows(cmdp, n_vars);
    let mut a = DMatrix::zeros(rows, n_vars);
    let mut b = DVector::zeros(rows);
    a.view_mut((0, 0), (ns, n_vars)).copy_from(&flow_a);
    b.rows_mut(0, ns).copy_from(&flow_b);
    let one_minus_gamma = 1.0 - cmdp.gamma();
    for i in 0..m {
        let reward = cmdp.reward(i + 1);
        for s in 0..ns {
            for act in 0..na {
                a[(ns + i, col(s, act, na))] = reward[(s, act)];
            }
        }
        a[(ns + i, n_occ)] = -one_minus_gamma; // t+
        a[(ns + i, n_occ + 1)] = one_minus_gamma; // t-
        a[(ns + i, n_occ + 2 + i)] = -1.0;
        b[ns + i] = one_minus_gamma * cmdp.thresholds()[i];
    }

    let mut objective = DVector::zeros(n_vars);
    objective[n_occ] = 1.0;
    objective[n_occ + 1] = -1.0;

    let outcome = solve_standard_form(&StandardLp {
        objective,
        constraints: a,
        rhs: b,
    });
    match outcome.status {
        LpStatus::Optimal => {
            let mut occupancy = DMatrix::zeros(ns, na);
            for s in 0..ns {
                for act in 0..na {
                    occupancy[(s, act)] = outcome.x[col(s, act, na)];
                }
            }
            Ok((
                outcome.objective_value,
                Some(occupancy_to_policy(&occupancy)),
            ))
        }
        LpStatus::Infeasible => Err(OracleError::Numerical(
            "slater LP reported infeasible; the flow polytope is never empty".into(),
        )),
        LpStatus::Unbounded => Err(OracleError::Numerical(
            "slater LP reported unbounded; the margin is bounded by max rewards".into(),
        )),
    }
}
