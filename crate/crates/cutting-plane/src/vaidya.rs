//! The cutting-plane loop with delta-subgradient oracles.
//!
//! Control flow per iteration: compute the volumetric center, the barrier
//! Hessian inverse and the leverage scores; if the smallest score falls below
//! `zeta`, remove that plane (no oracle call this iteration), otherwise query
//! the oracle at the center and append the returned cut at the depth fixed by
//! `eta` and `zeta`. After the iteration budget the best visited point by
//! oracle value estimate is reported.

use nalgebra::{DMatrix, DVector};

use crate::barrier::BarrierEval;
use crate::center::volumetric_center;
use crate::{CutPlaneError, NewtonSettings, Polytope};

/// Parameters of the cutting-plane loop.
///
/// The convergence analysis requires `eta <= 1e-4` and `zeta <= 1e-3 * eta`;
/// practical runs use far larger values (cuts are placed much deeper, trading
/// guarantees for speed). [`VaidyaParams::theory`] enforces the analyzed
/// regime, [`VaidyaParams::relaxed`] accepts any positive pair with
/// `zeta <= eta` and is the explicit opt-out.
#[derive(Debug, Clone, Copy)]
pub struct VaidyaParams {
    pub eta: f64,
    pub zeta: f64,
    pub t_max: usize,
    pub newton_tol: f64,
}

impl VaidyaParams {
    pub const THEORY_ETA_MAX: f64 = 1e-4;

    /// Parameters within the analyzed regime.
    pub fn theory(eta: f64, zeta: f64, t_max: usize) -> Result<Self, CutPlaneError> {
        if !(eta > 0.0 && eta <= Self::THEORY_ETA_MAX) {
            return Err(CutPlaneError::InvalidParams(format!(
                "eta must lie in (0, 1e-4] for guaranteed runs, got {eta}"
            )));
        }
        if !(zeta > 0.0 && zeta <= 1e-3 * eta) {
            return Err(CutPlaneError::InvalidParams(format!(
                "zeta must lie in (0, 1e-3 * eta] for guaranteed runs, got {zeta}"
            )));
        }
        Ok(Self {
            eta,
            zeta,
            t_max,
            newton_tol: 1e-9,
        })
    }

    /// Parameters outside the analyzed regime (explicit acknowledgment).
    pub fn relaxed(eta: f64, zeta: f64, t_max: usize) -> Result<Self, CutPlaneError> {
        if !(eta > 0.0 && zeta > 0.0 && zeta <= eta) {
            return Err(CutPlaneError::InvalidParams(format!(
                "need eta > 0, zeta > 0 and zeta <= eta, got eta={eta}, zeta={zeta}"
            )));
        }
        Ok(Self {
            eta,
            zeta,
            t_max,
            newton_tol: 1e-9,
        })
    }

    pub fn with_newton_tol(mut self, tol: f64) -> Self {
        self.newton_tol = tol;
        self
    }

    fn newton(&self) -> NewtonSettings {
        NewtonSettings::with_tol(self.newton_tol)
    }
}

/// What kind of cut the oracle answered with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutKind {
    /// A (delta-)subgradient cut at a feasible query point.
    Subgradient,
    /// A separation cut returned when the query point lies outside the
    /// feasible search set.
    Separation,
}

/// Oracle answer: the cut direction `g` (the added plane reads
/// `g . x >= beta` with `beta` computed from the cut-depth equation) plus an
/// optional objective-value estimate used for best-iterate selection.
#[derive(Debug, Clone)]
pub struct CutResponse {
    pub kind: CutKind,
    pub vector: DVector<f64>,
    pub value_estimate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationAction {
    /// Plane `index` was removed.
    DroppedPlane {
        index: usize,
    },
    /// The smallest leverage score was below `zeta` but removing the plane
    /// would leave the polytope unbounded; nothing changed this iteration.
    DropRejected {
        index: usize,
    },
    AddedSubgradientCut,
    AddedSeparationCut,
    /// The oracle returned an exactly zero subgradient: the query point is a
    /// certified minimizer and the run stops early.
    ZeroSubgradientStop,
}

/// Per-iteration record passed to the trace callback.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub t: usize,
    /// Volumetric center queried (or inspected) this iteration.
    pub point: DVector<f64>,
    /// Plane count of the polytope the center was computed for.
    pub num_planes: usize,
    pub sigma_min: f64,
    pub action: IterationAction,
    pub value_estimate: Option<f64>,
}

/// A point at which the oracle was queried.
#[derive(Debug, Clone)]
pub struct VisitedPoint {
    pub t: usize,
    pub point: DVector<f64>,
    pub value_estimate: Option<f64>,
}

/// Result of a cutting-plane run.
#[derive(Debug, Clone)]
pub struct VaidyaRun {
    /// Every oracle-queried point in visit order.
    pub visited: Vec<VisitedPoint>,
    /// Among visited points with a value estimate, the one with the smallest
    /// estimate (first such point on ties).
    pub best: Option<VisitedPoint>,
    pub final_polytope: Polytope,
}

/// Offset `beta` for the cut `g . x >= beta` through the depth equation
/// `g^T H^{-1} g / (g^T x - beta)^2 = sqrt(eta * zeta) / 2`, taking the root
/// with `g^T x >= beta` so the current center stays strictly feasible.
pub fn cut_offset(
    grad: &DVector<f64>,
    x: &DVector<f64>,
    h_inverse: &DMatrix<f64>,
    eta: f64,
    zeta: f64,
) -> Result<f64, CutPlaneError> {
    if grad.iter().any(|v| !v.is_finite()) || grad.norm() == 0.0 {
        return Err(CutPlaneError::DegenerateCut);
    }
    let quad = grad.dot(&(h_inverse * grad));
    if !(quad > 0.0) {
        return Err(CutPlaneError::DegenerateCut);
    }
    let depth = (2.0 * quad / (eta * zeta).sqrt()).sqrt();
    Ok(grad.dot(x) - depth)
}

/// Runs the cutting-plane method for `params.t_max` iterations.
///
/// The oracle is consulted at volumetric centers only. An `Err` from the
/// oracle aborts the run. `on_iteration` observes every iteration, including
/// plane drops where the oracle is not called.
pub fn vaidya_run<O, F>(
    mut oracle: O,
    initial: Polytope,
    params: &VaidyaParams,
    mut on_iteration: F,
) -> Result<VaidyaRun, CutPlaneError>
where
    O: FnMut(&DVector<f64>) -> Result<CutResponse, CutPlaneError>,
    F: FnMut(&IterationRecord),
{
    let m = initial.dim();
    let newton = params.newton();
    let mut poly = initial;
    let mut visited: Vec<VisitedPoint> = Vec::new();
    let mut warm: Option<DVector<f64>> = None;

    for t in 0..params.t_max {
        // Once cuts have localized the optimum, the polytope can shrink to
        // the resolution of f64 slack arithmetic; centering then fails even
        // though the run has effectively converged. Stop and report what was
        // visited. Failures on the *initial* polytope are real errors.
        let exhausted = |err: &CutPlaneError| {
            t > 0
                && matches!(
                    err,
                    CutPlaneError::NewtonStalled(_)
                        | CutPlaneError::NotInterior { .. }
                        | CutPlaneError::NoInteriorPoint
                        | CutPlaneError::NotPositiveDefinite
                )
        };
        let center = match volumetric_center(&poly, warm.as_ref(), &newton) {
            Ok(c) => c,
            Err(e) if exhausted(&e) => break,
            Err(e) => return Err(e),
        };
        let eval = match BarrierEval::compute(&poly, &center) {
            Ok(e) => e,
            Err(e) if exhausted(&e) => break,
            Err(e) => return Err(e),
        };
        let (min_idx, sigma_min) = {
            let mut best = (0usize, f64::INFINITY);
            for (i, &s) in eval.sigmas.iter().enumerate() {
                if s < best.1 {
                    best = (i, s);
                }
            }
            best
        };

        let record = if sigma_min < params.zeta {
            if poly.num_planes() <= m + 1 {
                // Dropping would leave fewer than m + 1 planes, which cannot
                // bound the polytope; keep it and spend the iteration.
                warm = Some(center.clone());
                IterationRecord {
                    t,
                    point: center,
                    num_planes: poly.num_planes(),
                    sigma_min,
                    action: IterationAction::DropRejected { index: min_idx },
                    value_estimate: None,
                }
            } else {
                let mut candidate = poly.clone();
                candidate.remove_plane(min_idx);
                match volumetric_center(&candidate, Some(&center), &newton) {
                    Ok(new_center) => {
                        poly = candidate;
                        warm = Some(new_center);
                        IterationRecord {
                            t,
                            point: center,
                            num_planes: poly.num_planes() + 1,
                            sigma_min,
                            action: IterationAction::DroppedPlane { index: min_idx },
                            value_estimate: None,
                        }
                    }
                    Err(
                        CutPlaneError::Unbounded
                        | CutPlaneError::NewtonStalled(_)
                        | CutPlaneError::NotPositiveDefinite
                        | CutPlaneError::NoInteriorPoint,
                    ) => {
                        // Removing this plane breaks boundedness; roll back.
                        warm = Some(center.clone());
                        IterationRecord {
                            t,
                            point: center,
                            num_planes: poly.num_planes(),
                            sigma_min,
                            action: IterationAction::DropRejected { index: min_idx },
                            value_estimate: None,
                        }
                    }
                    Err(other) => return Err(other),
                }
            }
        } else {
            let response = oracle(&center)?;
            if response.vector.len() != m {
                return Err(CutPlaneError::InvalidPolytope(format!(
                    "oracle returned a cut of dimension {}, expected {m}",
                    response.vector.len()
                )));
            }
            if response.kind == CutKind::Subgradient
                && response.vector.iter().all(|v| v.is_finite())
                && response.vector.norm() == 0.0
            {
                // An exact zero subgradient at an interior point certifies a
                // global minimizer; no plane can be formed from it.
                visited.push(VisitedPoint {
                    t,
                    point: center.clone(),
                    value_estimate: response.value_estimate,
                });
                on_iteration(&IterationRecord {
                    t,
                    point: center,
                    num_planes: poly.num_planes(),
                    sigma_min,
                    action: IterationAction::ZeroSubgradientStop,
                    value_estimate: response.value_estimate,
                });
                break;
            }
            let beta = cut_offset(
                &response.vector,
                &center,
                &eval.h_inverse(),
                params.eta,
                params.zeta,
            )?;
            poly.push_plane(&response.vector, beta);
            visited.push(VisitedPoint {
                t,
                point: center.clone(),
                value_estimate: response.value_estimate,
            });
            warm = Some(center.clone());
            IterationRecord {
                t,
                point: center,
                num_planes: poly.num_planes() - 1,
                sigma_min,
                action: match response.kind {
                    CutKind::Subgradient => IterationAction::AddedSubgradientCut,
                    CutKind::Separation => IterationAction::AddedSeparationCut,
                },
                value_estimate: response.value_estimate,
            }
        };
        on_iteration(&record);
    }

    let best = visited
        .iter()
        .filter(|v| v.value_estimate.is_some())
        .min_by(|a, b| {
            a.value_estimate
                .unwrap()
                .partial_cmp(&b.value_estimate.unwrap())
                .expect("value estimates are comparable")
        })
        .cloned();

    Ok(VaidyaRun {
        visited,
        best,
        final_polytope: poly,
    })
}
