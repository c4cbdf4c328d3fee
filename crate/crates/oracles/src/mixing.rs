//! Certified uniform-ergodicity constants.
//!
//! For any stationary policy the induced chain's one-step Dobrushin
//! coefficient is at most
//! `beta = max_{s != s'} max_{a, a'} TV(P(.|s,a), P(.|s',a'))`
//! (total variation is jointly convex, so the worst mixture is a vertex).
//! When `beta < 1`, every policy-induced chain satisfies
//! `sup_s TV(P^t(s, .), stationary) <= beta^t`, i.e. `(C_M, beta) = (1, beta)`
//! certifies uniform ergodicity simultaneously for all policies.

use mdp_core::TabularMdp;

/// `(c_m, beta)` valid for every stationary policy, or `None` when the
/// one-step coefficient is 1 (e.g. disjoint successor supports). `beta` is
/// clamped below by 1e-9 so downstream logarithms stay finite.
pub fn mixing_certificate(mdp: &TabularMdp) -> Option<(f64, f64)> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut beta = 0.0f64;
    for s in 0..ns {
        for s2 in (s + 1)..ns {
            for a in 0..na {
                for a2 in 0..na {
                    let mut overlap = 0.0;
                    for next in 0..ns {
                        overlap += mdp.prob(s, a, next).min(mdp.prob(s2, a2, next));
                    }
                    beta = beta.max(1.0 - overlap);
                }
            }
        }
    }
    if beta < 1.0 {
        Some((1.0, beta.max(1e-9)))
    } else {
        None
    }
}
