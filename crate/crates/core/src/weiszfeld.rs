//! The projected Weiszfeld iteration `x_{k+1} = Π_C(T(x_k))`.

use serde::Serialize;

use crate::certify::{anchor_optimality, Verdict};
use crate::error::{Error, Result};
use crate::problem::{check_dim, ProblemInstance, Tolerances, Vector};
use crate::sets::MEMBERSHIP_TOL;

/// Number of times the escape step is halved before giving up.
const ESCAPE_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    /// The step-norm stopping rule fired.
    Converged,
    /// The iteration budget ran out; the result holds the best iterate.
    MaxIterations,
    /// The anchor with this (zero-based) index passed the anchor optimality test.
    AnchorOptimal(usize),
    /// The anchors are collinear and no override was set; nothing was run.
    CollinearRefused,
}

impl std::fmt::Display for SolveStatus {
    /// Anchors are numbered from 1 here, matching `a_1..a_m`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Converged => write!(f, "Converged"),
            SolveStatus::MaxIterations => write!(f, "MaxIterations"),
            SolveStatus::AnchorOptimal(j) => write!(f, "AnchorOptimal({})", j + 1),
            SolveStatus::CollinearRefused => write!(f, "CollinearRefused"),
        }
    }
}

/// One Weiszfeld step taken from `point`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub point: Vector,
    /// `f(x_k)`
    pub objective: f64,
    /// `‖x_k − x_{k+1}‖`
    pub step_norm: f64,
    /// `‖Π_C(T(x_k)) − x_k‖`
    pub fixed_point_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x_final: Vector,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// How many times the iteration was pushed off a non-optimal anchor.
    pub escapes: usize,
}

/// One projected Weiszfeld step. Fails within `eta` of an anchor.
pub fn step(instance: &ProblemInstance, x: &Vector, eta: f64) -> Result<Vector> {
    check_dim(instance.dim(), x)?;
    let (index, distance) = instance.nearest_anchor(x);
    if distance < eta {
        return Err(Error::AnchorProximity { index, distance });
    }
    let t = instance.weiszfeld_map(x, eta)?;
    Ok(instance.constraint().project_unchecked(&t))
}

/// Moves off the non-optimal anchor `a_j` along the projected steepest
/// descent direction `−R_j/‖R_j‖`, halving the step until `f` decreases.
pub fn anchor_escape(instance: &ProblemInstance, j: usize, tol: &Tolerances) -> Result<Vector> {
    if j >= instance.num_anchors() {
        return Err(Error::InvalidArgument(format!("anchor index {j} out of range")));
    }
    if anchor_optimality(instance, j).verdict == Verdict::Optimal {
        return Err(Error::InvalidArgument(format!(
            "anchor {j} is optimal; there is nothing to escape from"
        )));
    }
    let aj = &instance.anchors()[j];
    let r = instance.anchor_resultant(j);
    let rn = r.norm();
    if rn == 0.0 {
        return Err(Error::EscapeFailure { anchor: j });
    }
    let direction = -r / rn;
    let f_anchor = instance.objective_unchecked(aj);
    let mut t = tol.delta_escape;
    for _ in 0..=ESCAPE_HALVINGS {
        let trial = instance.constraint().project_unchecked(&(aj + &direction * t));
        if instance.objective_unchecked(&trial) < f_anchor {
            return Ok(trial);
        }
        t *= 0.5;
    }
    Err(Error::EscapeFailure { anchor: j })
}

/// Runs the projected Weiszfeld iteration from `x0`, or from the projection of
/// the weighted anchor mean when no start is given.
///
/// Whenever an iterate lands within `eta_anchor` of an anchor, the anchor
/// optimality test decides between stopping there and escaping. When the loop
/// ends, the anchor nearest to the final iterate is tested as well: the
/// iteration approaches an optimal anchor only geometrically and would
/// otherwise stop just short of it.
pub fn solve(instance: &ProblemInstance, tol: &Tolerances, x0: Option<&Vector>) -> Result<SolveResult> {
    tol.validate()?;
    let constraint = instance.constraint();
    let start = match x0 {
        Some(x) => {
            check_dim(instance.dim(), x)?;
            let distance = constraint.distance(x)?;
            if distance > MEMBERSHIP_TOL {
                return Err(Error::Infeasible { distance });
            }
            x.clone()
        }
        None => constraint.project_unchecked(&instance.weighted_mean()),
    };

    if instance.is_collinear() && !instance.collinear_override() {
        let objective = instance.objective_unchecked(&start);
        return Ok(SolveResult {
            x_final: start,
            objective,
            status: SolveStatus::CollinearRefused,
            iterations: 0,
            trace: Vec::new(),
            escapes: 0,
        });
    }

    let eta = tol.eta_anchor;
    let mut x = start;
    let mut trace = Vec::new();
    let mut escapes = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < tol.max_iter {
        iterations += 1;
        let (j, d) = instance.nearest_anchor(&x);
        if d < eta {
            if anchor_optimality(instance, j).verdict == Verdict::Optimal {
                return Ok(anchor_result(instance, j, iterations, trace, escapes));
            }
            x = anchor_escape(instance, j, tol)?;
            escapes += 1;
            continue;
        }

        let next = step(instance, &x, eta)?;
        let step_norm = (&x - &next).norm();
        trace.push(TraceRecord {
            iter: iterations - 1,
            objective: instance.objective_unchecked(&x),
            step_norm,
            fixed_point_residual: step_norm,
            point: x,
        });
        x = next;
        if step_norm <= tol.epsilon {
            status = SolveStatus::Converged;
            break;
        }
    }

    let (j, _) = instance.nearest_anchor(&x);
    if anchor_optimality(instance, j).verdict == Verdict::Optimal {
        return Ok(anchor_result(instance, j, iterations, trace, escapes));
    }

    let objective = instance.objective_unchecked(&x);
    Ok(SolveResult {
        x_final: x,
        objective,
        status,
        iterations,
        trace,
        escapes,
    })
}

fn anchor_result(
    instance: &ProblemInstance,
    j: usize,
    iterations: usize,
    trace: Vec<TraceRecord>,
    escapes: usize,
) -> SolveResult {
    let x_final = instance.anchors()[j].clone();
    SolveResult {
        objective: instance.objective_unchecked(&x_final),
        x_final,
        status: SolveStatus::AnchorOptimal(j),
        iterations,
        trace,
        escapes,
    }
}
