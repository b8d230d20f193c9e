//! Independent reference solvers: projected subgradient descent and a
//! zooming grid search in the plane. They share nothing with the Weiszfeld
//! path except the objective and the projection.

use crate::error::{Error, Result};
use crate::problem::{check_dim, ProblemInstance, Vector};
use crate::weiszfeld::{SolveResult, SolveStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Subgradient step is `step_scale / √(k+1)`.
    pub step_scale: f64,
    pub iterations: usize,
    /// Grid box `[lower, upper]` for the 2-D search.
    pub grid_lower: [f64; 2],
    pub grid_upper: [f64; 2],
    /// Grid points per axis.
    pub resolution: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            step_scale: 0.5,
            iterations: 200_000,
            grid_lower: [-2.0, -2.0],
            grid_upper: [2.0, 2.0],
            resolution: 401,
            seed: 0,
        }
    }
}

impl OracleConfig {
    /// Grid box covering the anchors' bounding box with a 10% margin.
    pub fn for_instance(instance: &ProblemInstance) -> Self {
        let mut cfg = OracleConfig::default();
        if instance.dim() == 2 {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for a in instance.anchors() {
                for c in 0..2 {
                    lo[c] = lo[c].min(a[c]);
                    hi[c] = hi[c].max(a[c]);
                }
            }
            for c in 0..2 {
                let pad = 0.1 * (hi[c] - lo[c]).max(1e-3);
                cfg.grid_lower[c] = lo[c] - pad;
                cfg.grid_upper[c] = hi[c] + pad;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::InvalidArgument("step_scale must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be positive".into()));
        }
        if self.resolution < 3 {
            return Err(Error::InvalidArgument("grid resolution must be at least 3".into()));
        }
        if (0..2).any(|c| self.grid_lower[c].partial_cmp(&self.grid_upper[c]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::InvalidArgument("grid bounds must satisfy lower < upper".into()));
        }
        Ok(())
    }
}

/// A subgradient of `f` at `x`.
///
/// Off the anchors this is the gradient `Σ w_i (x − a_i)/‖x − a_i‖`. At an
/// anchor `a_j` (within `eta`) it is the minimal-norm element of
/// `R_j + w_j·B̄(0,1)`, namely `R_j · max(0, 1 − w_j/‖R_j‖)`.
pub fn subgradient_of_f(instance: &ProblemInstance, x: &Vector, eta: f64) -> Result<Vector> {
    check_dim(instance.dim(), x)?;
    let (j, d) = instance.nearest_anchor(x);
    if d < eta {
        let r = instance.anchor_resultant(j);
        let rn = r.norm();
        if rn == 0.0 {
            return Ok(r);
        }
        let scale = (1.0 - instance.weights()[j] / rn).max(0.0);
        return Ok(r * scale);
    }
    let mut g = Vector::zeros(instance.dim());
    for (a, w) in instance.anchors().iter().zip(instance.weights()) {
        let diff = x - a;
        let n = diff.norm();
        g.axpy(w / n, &diff, 1.0);
    }
    Ok(g)
}

/// Projected subgradient descent with diminishing steps, keeping the best
/// point seen. The feasible anchors are scored up front as candidates.
pub fn projected_subgradient(instance: &ProblemInstance, cfg: &OracleConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let constraint = instance.constraint();
    let eta = crate::problem::DEFAULT_ETA_ANCHOR;

    let mut y = constraint.project_unchecked(&instance.weighted_mean());
    let mut best = y.clone();
    let mut best_f = instance.objective_unchecked(&y);
    for a in instance.anchors() {
        if constraint.contains(a, 0.0) {
            let fa = instance.objective_unchecked(a);
            if fa < best_f {
                best_f = fa;
                best = a.clone();
            }
        }
    }

    for k in 0..cfg.iterations {
        let g = subgradient_of_f(instance, &y, eta)?;
        let alpha = cfg.step_scale / ((k + 1) as f64).sqrt();
        y = constraint.project_unchecked(&(&y - g * alpha));
        let fy = instance.objective_unchecked(&y);
        if fy < best_f {
            best_f = fy;
            best = y.clone();
        }
    }

    Ok(SolveResult {
        x_final: best,
        objective: best_f,
        status: SolveStatus::MaxIterations,
        iterations: cfg.iterations,
        trace: Vec::new(),
        escapes: 0,
    })
}

/// Exhaustive search over a planar grid followed by three 10× zooms around
/// the best point. Grid points outside `C` are replaced by their projection,
/// which keeps lower-dimensional sets (lines, segments) searchable.
///
/// Ties go to the lexicographically smaller point.
pub fn grid_search_2d(instance: &ProblemInstance, cfg: &OracleConfig) -> Result<Vector> {
    if instance.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: instance.dim(),
        });
    }
    cfg.validate()?;
    let constraint = instance.constraint();
    let n = cfg.resolution;
    let mut lower = cfg.grid_lower;
    let mut upper = cfg.grid_upper;
    let mut best: Option<(f64, Vector)> = None;

    for _zoom in 0..4 {
        let pitch = [
            (upper[0] - lower[0]) / (n - 1) as f64,
            (upper[1] - lower[1]) / (n - 1) as f64,
        ];
        for i in 0..n {
            for k in 0..n {
                let g = Vector::from_column_slice(&[
                    lower[0] + i as f64 * pitch[0],
                    lower[1] + k as f64 * pitch[1],
                ]);
                let p = constraint.project_unchecked(&g);
                let fp = instance.objective_unchecked(&p);
                let better = match &best {
                    None => true,
                    Some((bf, bp)) => fp < *bf || (fp == *bf && lex_less(&p, bp)),
                };
                if better {
                    best = Some((fp, p));
                }
            }
        }
        let center = &best.as_ref().expect("grid is nonempty").1;
        for c in 0..2 {
            let half = 0.05 * (upper[c] - lower[c]);
            lower[c] = center[c] - half;
            upper[c] = center[c] + half;
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

/// Pitch of the last zoom level of [`grid_search_2d`].
pub fn final_grid_pitch(cfg: &OracleConfig) -> f64 {
    let span = (cfg.grid_upper[0] - cfg.grid_lower[0]).max(cfg.grid_upper[1] - cfg.grid_lower[1]);
    span * 1e-3 / (cfg.resolution - 1) as f64
}

fn lex_less(a: &Vector, b: &Vector) -> bool {
    a.iter().partial_cmp(b.iter()) == Some(std::cmp::Ordering::Less)
}
