//! How the optimal value `m(a)` and the solution `M(a)` move with the anchors.
//!
//! Anchor tuples live in the product space `R^{m·n}`, stacked anchor by
//! anchor. `m` and `M` are evaluated with the projected Weiszfeld solver at a
//! tightened tolerance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problem::{ProblemInstance, Tolerances, Vector};
use crate::weiszfeld::{solve, SolveResult, SolveStatus};

/// Stopping tolerance used for every evaluation of `m` and `M`.
pub const TIGHT_EPSILON: f64 = 1e-12;
/// Iteration floor for tightened solves.
const TIGHT_MAX_ITER: usize = 100_000;

fn tight_solve(instance: &ProblemInstance, tol: &Tolerances) -> Result<SolveResult> {
    if instance.is_collinear() {
        return Err(Error::Collinear);
    }
    let tight = Tolerances {
        epsilon: tol.epsilon.min(TIGHT_EPSILON),
        max_iter: tol.max_iter.max(TIGHT_MAX_ITER),
        ..*tol
    };
    solve(instance, &tight, None)
}

/// The optimal value `m(a)`.
pub fn optimal_value(instance: &ProblemInstance, tol: &Tolerances) -> Result<f64> {
    Ok(tight_solve(instance, tol)?.objective)
}

/// The solution map `M(a)`, a single point because the minimizer is unique
/// off collinear configurations.
pub fn solution_map(instance: &ProblemInstance, tol: &Tolerances) -> Result<Vector> {
    Ok(tight_solve(instance, tol)?.x_final)
}

/// The gradient of `m` at `a`: block `i` is `−w_i (M(a) − a_i)/‖M(a) − a_i‖`.
///
/// Only defined when `M(a)` is not an anchor; there `∂m(a)` is set-valued and
/// this returns [`Error::AnchorSolution`].
pub fn value_subgradient(instance: &ProblemInstance, tol: &Tolerances) -> Result<Vec<Vector>> {
    let res = tight_solve(instance, tol)?;
    if let SolveStatus::AnchorOptimal(index) = res.status {
        return Err(Error::AnchorSolution { index });
    }
    let (index, distance) = instance.nearest_anchor(&res.x_final);
    if distance < tol.eta_anchor {
        return Err(Error::AnchorSolution { index });
    }
    Ok(instance
        .anchors()
        .iter()
        .zip(instance.weights())
        .map(|(a, w)| {
            let d = &res.x_final - a;
            let n = d.norm();
            d * (-w / n)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDifferenceReport {
    /// Largest `|central difference − gradient entry|` over checked coordinates.
    pub max_error: f64,
    /// Coordinates actually compared.
    pub checked: usize,
    /// `(anchor, coordinate)` pairs whose perturbation left the admissible
    /// set (collinear or coincident anchors).
    pub skipped: Vec<(usize, usize)>,
}

/// Compares [`value_subgradient`] with central differences of `m` taken one
/// anchor coordinate at a time. The perturbed solves run in parallel.
pub fn finite_difference_check(instance: &ProblemInstance, h: f64, tol: &Tolerances) -> Result<FiniteDifferenceReport> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    let gradient = value_subgradient(instance, tol)?;
    let n = instance.dim();
    let coords: Vec<(usize, usize)> = (0..instance.num_anchors())
        .flat_map(|i| (0..n).map(move |c| (i, c)))
        .collect();

    let outcomes: Vec<Result<Option<f64>>> = coords
        .par_iter()
        .map(|&(i, c)| {
            let shifted = |s: f64| -> Result<Option<f64>> {
                let mut anchors = instance.anchors().to_vec();
                anchors[i][c] += s;
                match instance.with_anchors(anchors) {
                    Ok(p) if !p.is_collinear() => optimal_value(&p, tol).map(Some),
                    _ => Ok(None),
                }
            };
            match (shifted(h)?, shifted(-h)?) {
                (Some(up), Some(down)) => Ok(Some(((up - down) / (2.0 * h) - gradient[i][c]).abs())),
                _ => Ok(None),
            }
        })
        .collect();

    let mut report = FiniteDifferenceReport {
        max_error: 0.0,
        checked: 0,
        skipped: Vec::new(),
    };
    for (coord, outcome) in coords.into_iter().zip(outcomes) {
        match outcome? {
            Some(err) => {
                report.max_error = report.max_error.max(err);
                report.checked += 1;
            }
            None => report.skipped.push(coord),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Directions spread over the whole anchor tuple.
    Joint,
    /// Direction `k` moves only anchor `k mod m`.
    PerAnchor,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directions {
    /// Unit vectors of length `m·n`.
    Explicit(Vec<Vector>),
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    /// Strictly decreasing, nonnegative.
    pub deltas: Vec<f64>,
    pub directions: Directions,
    pub mode: PerturbationMode,
}

impl PerturbationSpec {
    pub fn random(deltas: Vec<f64>, count: usize, seed: u64) -> Self {
        PerturbationSpec {
            deltas,
            directions: Directions::Random { count, seed },
            mode: PerturbationMode::Joint,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::InvalidArgument("at least one delta is required".into()));
        }
        if self.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidArgument("deltas must be finite and nonnegative".into()));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("deltas must be strictly decreasing".into()));
        }
        Ok(())
    }

    /// Materializes the unit directions in `R^{m·n}`.
    pub fn resolve_directions(&self, num_anchors: usize, dim: usize) -> Result<Vec<Vector>> {
        let total = num_anchors * dim;
        match &self.directions {
            Directions::Explicit(dirs) => {
                for (k, d) in dirs.iter().enumerate() {
                    if d.len() != total {
                        return Err(Error::DimensionMismatch {
                            expected: total,
                            found: d.len(),
                        });
                    }
                    if (d.norm() - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidArgument(format!("direction {k} is not a unit vector")));
                    }
                }
                Ok(dirs.clone())
            }
            Directions::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count)
                    .map(|k| {
                        let mut d = Vector::zeros(total);
                        let range = match self.mode {
                            PerturbationMode::Joint => 0..total,
                            PerturbationMode::PerAnchor => {
                                let i = k % num_anchors;
                                i * dim..(i + 1) * dim
                            }
                        };
                        loop {
                            for idx in range.clone() {
                                d[idx] = StandardNormal.sample(&mut rng);
                            }
                            let n = d.norm();
                            if n > 1e-8 {
                                break d / n;
                            }
                        }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub delta: f64,
    pub direction: usize,
    /// `‖M(a′) − M(a)‖`, absent when the perturbed instance was skipped.
    pub solution_shift: Option<f64>,
    /// `|m(a′) − m(a)|`, absent when skipped.
    pub value_shift: Option<f64>,
    /// The perturbed anchors were collinear or coincident.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub base_solution: Vector,
    pub base_value: f64,
    /// Sorted by delta descending, then by direction.
    pub rows: Vec<StabilityRow>,
}

/// Solves `a′ = a + δ·d` for every delta and direction and records how far
/// the solution and the optimal value moved.
pub fn continuity_probe(instance: &ProblemInstance, spec: &PerturbationSpec, tol: &Tolerances) -> Result<StabilityReport> {
    spec.validate()?;
    let base = tight_solve(instance, tol)?;
    let n = instance.dim();
    let m = instance.num_anchors();
    let directions = spec.resolve_directions(m, n)?;

    let jobs: Vec<(f64, usize)> = spec
        .deltas
        .iter()
        .flat_map(|&delta| (0..directions.len()).map(move |k| (delta, k)))
        .collect();

    let rows: Vec<Result<StabilityRow>> = jobs
        .par_iter()
        .map(|&(delta, k)| {
            let dir = &directions[k];
            let anchors: Vec<Vector> = instance
                .anchors()
                .iter()
                .enumerate()
                .map(|(i, a)| a + dir.rows(i * n, n) * delta)
                .collect();
            let skipped = StabilityRow {
                delta,
                direction: k,
                solution_shift: None,
                value_shift: None,
                flagged: true,
            };
            let perturbed = match instance.with_anchors(anchors) {
                Ok(p) if !p.is_collinear() => p,
                _ => return Ok(skipped),
            };
            let res = tight_solve(&perturbed, tol)?;
            Ok(StabilityRow {
                delta,
                direction: k,
                solution_shift: Some((&res.x_final - &base.x_final).norm()),
                value_shift: Some((res.objective - base.objective).abs()),
                flagged: false,
            })
        })
        .collect();

    Ok(StabilityReport {
        base_solution: base.x_final,
        base_value: base.objective,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
