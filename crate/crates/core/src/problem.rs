//! Problem data: anchors, weights, the constraint set, and the quantities the
//! projected Weiszfeld iteration is built from.
//!
//! The objective is `f(x) = Σ w_i ‖x − a_i‖`. Everything here is a pure
//! function of an immutable [`ProblemInstance`].

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::ConstraintSet;

/// A point in `R^n`.
pub type Vector = DVector<f64>;

/// Distances below this count as hitting an anchor unless configured otherwise.
pub const DEFAULT_ETA_ANCHOR: f64 = 1e-12;

/// Default relative residual threshold for [`check_collinear`].
pub const DEFAULT_COLLINEAR_TOL: f64 = 1e-10;

/// Builds a [`Vector`] from a slice.
pub fn vector(coords: &[f64]) -> Vector {
    Vector::from_column_slice(coords)
}

pub(crate) fn check_dim(expected: usize, x: &Vector) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Stop once `‖x_k − x_{k+1}‖ ≤ epsilon`.
    pub epsilon: f64,
    /// Distances below this count as hitting an anchor.
    pub eta_anchor: f64,
    pub max_iter: usize,
    /// Initial step length of the anchor escape.
    pub delta_escape: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            epsilon: 1e-8,
            eta_anchor: DEFAULT_ETA_ANCHOR,
            max_iter: 10_000,
            delta_escape: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("tolerances.{name}"),
                    "must be finite and strictly positive",
                ))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("eta_anchor", self.eta_anchor)?;
        positive("delta_escape", self.delta_escape)?;
        if self.max_iter == 0 {
            return Err(Error::invalid("tolerances.max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

/// Anchors `a_1..a_m` with their positive weights.
///
/// Coincident anchors are merged at construction by summing their weights,
/// which leaves the objective unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: Vec<Vector>,
    weights: Vec<f64>,
}

impl AnchorSet {
    pub fn new(anchors: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if anchors.len() != weights.len() {
            return Err(Error::invalid(
                "weights",
                format!(
                    "expected {} weights (one per anchor), found {}",
                    anchors.len(),
                    weights.len()
                ),
            ));
        }
        let dim = match anchors.first() {
            Some(a) => a.len(),
            None => return Err(Error::invalid("anchors", "at least two anchors are required")),
        };
        if dim == 0 {
            return Err(Error::invalid("anchors[0]", "dimension must be at least 1"));
        }
        for (i, a) in anchors.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::invalid(
                    format!("anchors[{i}]"),
                    format!("expected {dim} coordinates, found {}", a.len()),
                ));
            }
            if let Some(c) = a.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("anchors[{i}][{c}]"), "must be finite"));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(
                    format!("weights[{i}]"),
                    format!("weight must be finite and strictly positive, found {w}"),
                ));
            }
        }

        let mut merged_anchors: Vec<Vector> = Vec::with_capacity(anchors.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(weights.len());
        for (a, w) in anchors.into_iter().zip(weights) {
            match merged_anchors.iter().position(|b| *b == a) {
                Some(k) => merged_weights[k] += w,
                None => {
                    merged_anchors.push(a);
                    merged_weights.push(w);
                }
            }
        }
        if merged_anchors.len() < 2 {
            return Err(Error::invalid(
                "anchors",
                "at least two distinct anchors are required",
            ));
        }
        Ok(AnchorSet {
            anchors: merged_anchors,
            weights: merged_weights,
        })
    }

    pub fn anchors(&self) -> &[Vector] {
        &self.anchors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].len()
    }
}

/// Decides whether all anchors lie on one line.
///
/// The differences `a_i − a_1` are orthogonalized one by one (longest first);
/// a residual larger than `tol` times the longest difference opens a second
/// direction, which means the anchors are not collinear.
pub fn check_collinear(anchors: &[Vector], tol: f64) -> bool {
    let Some(first) = anchors.first() else {
        return true;
    };
    let mut diffs: Vec<Vector> = anchors[1..].iter().map(|a| a - first).collect();
    diffs.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let scale = diffs.first().map_or(0.0, |d| d.norm());
    if scale == 0.0 {
        return true;
    }

    let mut basis: Vec<Vector> = Vec::with_capacity(2);
    for d in diffs {
        let mut r = d;
        for u in &basis {
            let c = r.dot(u);
            r.axpy(-c, u, 1.0);
        }
        let rn = r.norm();
        if rn > tol * scale {
            basis.push(r / rn);
            if basis.len() >= 2 {
                return false;
            }
        }
    }
    true
}

/// A constrained Fermat-Weber problem: minimize `Σ w_i ‖x − a_i‖` over `x ∈ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    anchor_set: AnchorSet,
    constraint: ConstraintSet,
    collinear: bool,
    allow_collinear: bool,
}

impl ProblemInstance {
    pub fn new(anchor_set: AnchorSet, constraint: ConstraintSet) -> Result<Self> {
        constraint.validate()?;
        if constraint.dim() != anchor_set.dim() {
            return Err(Error::invalid(
                "constraint",
                format!(
                    "constraint dimension {} does not match anchor dimension {}",
                    constraint.dim(),
                    anchor_set.dim()
                ),
            ));
        }
        let collinear = check_collinear(anchor_set.anchors(), DEFAULT_COLLINEAR_TOL);
        Ok(ProblemInstance {
            anchor_set,
            constraint,
            collinear,
            allow_collinear: false,
        })
    }

    /// Shorthand for building an instance from raw coordinates.
    pub fn from_coords(anchors: &[&[f64]], weights: &[f64], constraint: ConstraintSet) -> Result<Self> {
        let anchors = anchors.iter().map(|a| vector(a)).collect();
        ProblemInstance::new(AnchorSet::new(anchors, weights.to_vec())?, constraint)
    }

    /// Lets the solver run on collinear anchors, where the minimizer may not
    /// be unique.
    pub fn with_collinear_override(mut self, allow: bool) -> Self {
        self.allow_collinear = allow;
        self
    }

    pub fn anchor_set(&self) -> &AnchorSet {
        &self.anchor_set
    }

    pub fn anchors(&self) -> &[Vector] {
        self.anchor_set.anchors()
    }

    pub fn weights(&self) -> &[f64] {
        self.anchor_set.weights()
    }

    pub fn constraint(&self) -> &ConstraintSet {
        &self.constraint
    }

    pub fn dim(&self) -> usize {
        self.anchor_set.dim()
    }

    pub fn num_anchors(&self) -> usize {
        self.anchor_set.len()
    }

    pub fn is_collinear(&self) -> bool {
        self.collinear
    }

    pub fn collinear_override(&self) -> bool {
        self.allow_collinear
    }

    pub fn total_weight(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// `f(x) = Σ w_i ‖x − a_i‖`. The constraint is not part of the value.
    pub fn objective(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(self.objective_unchecked(x))
    }

    pub(crate) fn objective_unchecked(&self, x: &Vector) -> f64 {
        self.anchors()
            .iter()
            .zip(self.weights())
            .map(|(a, w)| w * (x - a).norm())
            .sum()
    }

    /// Index of and distance to the anchor closest to `x`.
    pub fn nearest_anchor(&self, x: &Vector) -> (usize, f64) {
        self.anchors()
            .iter()
            .map(|a| (x - a).norm())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("anchor set is never empty")
    }

    fn guard_anchor(&self, x: &Vector, eta: f64) -> Result<()> {
        let (index, distance) = self.nearest_anchor(x);
        if distance < eta {
            return Err(Error::AnchorProximity { index, distance });
        }
        Ok(())
    }

    /// The Weiszfeld map
    /// `T(x) = (Σ w_i a_i / ‖x − a_i‖) / (Σ w_i / ‖x − a_i‖)`.
    ///
    /// Within `eta` of an anchor the map returns that anchor exactly.
    pub fn weiszfeld_map(&self, x: &Vector, eta: f64) -> Result<Vector> {
        check_dim(self.dim(), x)?;
        let (j, d) = self.nearest_anchor(x);
        if d < eta {
            return Ok(self.anchors()[j].clone());
        }
        let mut num = Vector::zeros(self.dim());
        let mut den = 0.0;
        for (a, w) in self.anchors().iter().zip(self.weights()) {
            let c = w / (x - a).norm();
            num.axpy(c, a, 1.0);
            den += c;
        }
        Ok(num / den)
    }

    /// `L(x) = Σ w_i / ‖x − a_i‖`.
    pub fn lipschitz_weight(&self, x: &Vector, eta: f64) -> Result<f64> {
        check_dim(self.dim(), x)?;
        self.guard_anchor(x, eta)?;
        Ok(self
            .anchors()
            .iter()
            .zip(self.weights())
            .map(|(a, w)| w / (x - a).norm())
            .sum())
    }

    /// The quadratic surrogate `h(x, x_ref) = Σ w_i ‖x − a_i‖² / ‖x_ref − a_i‖`.
    ///
    /// It touches `f` at `x_ref` and satisfies `h(x, x_ref) ≥ 2 f(x) − f(x_ref)`.
    pub fn auxiliary_value(&self, x: &Vector, x_ref: &Vector, eta: f64) -> Result<f64> {
        check_dim(self.dim(), x)?;
        check_dim(self.dim(), x_ref)?;
        self.guard_anchor(x_ref, eta)?;
        Ok(self
            .anchors()
            .iter()
            .zip(self.weights())
            .map(|(a, w)| w * (x - a).norm_squared() / (x_ref - a).norm())
            .sum())
    }

    /// `R_j = Σ_{i≠j} w_i (a_j − a_i) / ‖a_j − a_i‖`, the gradient at `a_j` of
    /// every term except the j-th.
    pub fn anchor_resultant(&self, j: usize) -> Vector {
        let aj = &self.anchors()[j];
        let mut r = Vector::zeros(self.dim());
        for (i, (a, w)) in self.anchors().iter().zip(self.weights()).enumerate() {
            if i != j {
                let d = aj - a;
                let n = d.norm();
                r.axpy(w / n, &d, 1.0);
            }
        }
        r
    }

    pub fn weighted_mean(&self) -> Vector {
        let mut s = Vector::zeros(self.dim());
        for (a, w) in self.anchors().iter().zip(self.weights()) {
            s.axpy(*w, a, 1.0);
        }
        s / self.total_weight()
    }

    /// The same constraint and weights with a different anchor tuple.
    pub fn with_anchors(&self, anchors: Vec<Vector>) -> Result<Self> {
        let set = AnchorSet::new(anchors, self.weights().to_vec())?;
        if set.len() != self.num_anchors() {
            return Err(Error::invalid("anchors", "perturbed anchors coincide"));
        }
        Ok(ProblemInstance::new(set, self.constraint.clone())?
            .with_collinear_override(self.allow_collinear))
    }
}
