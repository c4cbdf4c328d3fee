//! Per-iteration convergence trace and its CSV form.

use std::fmt::Write as _;

use nalgebra::DVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceAction {
    SubgradientCut,
    SeparationCut,
    Drop,
    DropRejected,
    /// Inner solver returned an exactly zero gradient; the run stopped.
    ZeroSubgradient,
}

impl TraceAction {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceAction::SubgradientCut => "subgradient-cut",
            TraceAction::SeparationCut => "separation-cut",
            TraceAction::Drop => "drop",
            TraceAction::DropRejected => "drop-rejected",
            TraceAction::ZeroSubgradient => "zero-subgradient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t: usize,
    pub action: TraceAction,
    /// Plane count of the polytope whose center was queried.
    pub k: usize,
    pub sigma_min: f64,
    pub lambda: DVector<f64>,
    pub value_estimate: Option<f64>,
    /// Best value estimate among subgradient iterations so far.
    pub best_so_far: Option<f64>,
    /// `V_0^* - V_0(pi_t)` when the LP oracle ran.
    pub gap_vs_lp: Option<f64>,
    /// `||[c - V(pi_t)]_+||_2` for subgradient iterations.
    pub violation_l2: Option<f64>,
}

/// Iteration-by-iteration record of a solve.
#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    /// CSV with columns
    /// `t,action,k,sigma_min,lambda,value_estimate,gap_vs_lp,violation_l2`
    /// (lambda entries joined by `;`, optional fields left empty).
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("t,action,k,sigma_min,lambda,value_estimate,gap_vs_lp,violation_l2\n");
        for row in &self.rows {
            let lambda = row
                .lambda
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";");
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.t,
                row.action.as_str(),
                row.k,
                row.sigma_min,
                lambda,
                opt(row.value_estimate),
                opt(row.gap_vs_lp),
                opt(row.violation_l2),
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Rows that carried a subgradient-cut value estimate.
    pub fn subgradient_rows(&self) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(|r| {
            matches!(
                r.action,
                TraceAction::SubgradientCut | TraceAction::ZeroSubgradient
            )
        })
    }
}
