//! JSON instance files.
//!
//! The on-disk schema mirrors the mathematical description directly:
//! `kernel[s][a][s']` and `rewards[i][s][a]` as nested arrays. Loading
//! revalidates every invariant and reports the offending field and indices.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{MdpError, TabularCmdp, TabularMdp};

/// Serialized form of a constrained MDP instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub rho: Vec<f64>,
    /// Indexed `[s][a][s']`.
    pub kernel: Vec<Vec<Vec<f64>>>,
    /// Indexed `[i][s][a]`, `i = 0..=m` with index 0 the objective.
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub thresholds: Vec<f64>,
}

impl CmdpFile {
    pub fn from_cmdp(cmdp: &TabularCmdp) -> Self {
        let (ns, na) = (cmdp.n_states(), cmdp.n_actions());
        let kernel = (0..ns)
            .map(|s| {
                (0..na)
                    .map(|a| (0..ns).map(|next| cmdp.mdp().prob(s, a, next)).collect())
                    .collect()
            })
            .collect();
        let rewards = cmdp
            .rewards()
            .iter()
            .map(|table| {
                (0..ns)
                    .map(|s| (0..na).map(|a| table[(s, a)]).collect())
                    .collect()
            })
            .collect();
        Self {
            n_states: ns,
            n_actions: na,
            gamma: cmdp.gamma(),
            rho: cmdp.mdp().rho().iter().copied().collect(),
            kernel,
            rewards,
            thresholds: cmdp.thresholds().iter().copied().collect(),
        }
    }

    pub fn into_cmdp(self) -> Result<TabularCmdp, MdpError> {
        let (ns, na) = (self.n_states, self.n_actions);
        if self.kernel.len() != ns {
            return Err(MdpError::DimensionMismatch {
                what: "kernel (outer, states)".into(),
                expected: ns,
                actual: self.kernel.len(),
            });
        }
        let mut kernel = DMatrix::zeros(ns * na, ns);
        for (s, per_action) in self.kernel.iter().enumerate() {
            if per_action.len() != na {
                return Err(MdpError::DimensionMismatch {
                    what: format!("kernel[{s}] (actions)"),
                    expected: na,
                    actual: per_action.len(),
                });
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != ns {
                    return Err(MdpError::DimensionMismatch {
                        what: format!("kernel[{s}][{a}] (successors)"),
                        expected: ns,
                        actual: row.len(),
                    });
                }
                for (next, &p) in row.iter().enumerate() {
                    kernel[(s * na + a, next)] = p;
                }
            }
        }
        let mdp = TabularMdp::new(ns, na, kernel, self.gamma, DVector::from_vec(self.rho))?;

        let mut rewards = Vec::with_capacity(self.rewards.len());
        for (i, table) in self.rewards.iter().enumerate() {
            if table.len() != ns {
                return Err(MdpError::DimensionMismatch {
                    what: format!("rewards[{i}] (states)"),
                    expected: ns,
                    actual: table.len(),
                });
            }
            let mut m = DMatrix::zeros(ns, na);
            for (s, row) in table.iter().enumerate() {
                if row.len() != na {
                    return Err(MdpError::DimensionMismatch {
                        what: format!("rewards[{i}][{s}] (actions)"),
                        expected: na,
                        actual: row.len(),
                    });
                }
                for (a, &r) in row.iter().enumerate() {
                    m[(s, a)] = r;
                }
            }
            rewards.push(m);
        }
        TabularCmdp::new(mdp, rewards, DVector::from_vec(self.thresholds))
    }
}

impl TabularCmdp {
    pub fn from_json_str(s: &str) -> Result<Self, MdpError> {
        let file: CmdpFile = serde_json::from_str(s)?;
        file.into_cmdp()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&CmdpFile::from_cmdp(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MdpError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MdpError> {
        Ok(std::fs::write(path, self.to_json_string())?)
    }
}
