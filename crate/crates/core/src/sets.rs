//! Closed convex constraint sets with exact projections and normal cones.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::{check_dim, Vector};

/// Default tolerance for set membership and for deciding active constraints.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A nonempty closed convex subset of `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    /// The whole space.
    Free { dim: usize },
    /// `{x : ‖x − center‖ ≤ radius}`.
    Ball { center: Vector, radius: f64 },
    /// `{x : lower ≤ x ≤ upper}` componentwise.
    Box { lower: Vector, upper: Vector },
    /// `{x : ⟨normal, x⟩ ≤ offset}`.
    Halfspace { normal: Vector, offset: f64 },
    /// `{x : ⟨normal, x⟩ = offset}`.
    Hyperplane { normal: Vector, offset: f64 },
    /// `{x : x ≥ 0}`.
    Orthant { dim: usize },
    /// `{x : x ≥ 0, Σ x_i = scale}`.
    Simplex { dim: usize, scale: f64 },
}

impl ConstraintSet {
    pub fn free(dim: usize) -> Self {
        ConstraintSet::Free { dim }
    }

    pub fn ball(center: Vector, radius: f64) -> Self {
        ConstraintSet::Ball { center, radius }
    }

    pub fn bounds(lower: Vector, upper: Vector) -> Self {
        ConstraintSet::Box { lower, upper }
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Self {
        ConstraintSet::Halfspace { normal, offset }
    }

    pub fn hyperplane(normal: Vector, offset: f64) -> Self {
        ConstraintSet::Hyperplane { normal, offset }
    }

    pub fn orthant(dim: usize) -> Self {
        ConstraintSet::Orthant { dim }
    }

    pub fn simplex(dim: usize, scale: f64) -> Self {
        ConstraintSet::Simplex { dim, scale }
    }

    /// Lower-case tag used in instance documents.
    pub fn kind(&self) -> &'static str {
        match self {
            ConstraintSet::Free { .. } => "free",
            ConstraintSet::Ball { .. } => "ball",
            ConstraintSet::Box { .. } => "box",
            ConstraintSet::Halfspace { .. } => "halfspace",
            ConstraintSet::Hyperplane { .. } => "hyperplane",
            ConstraintSet::Orthant { .. } => "orthant",
            ConstraintSet::Simplex { .. } => "simplex",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Free { dim }
            | ConstraintSet::Orthant { dim }
            | ConstraintSet::Simplex { dim, .. } => *dim,
            ConstraintSet::Ball { center, .. } => center.len(),
            ConstraintSet::Box { lower, .. } => lower.len(),
            ConstraintSet::Halfspace { normal, .. } | ConstraintSet::Hyperplane { normal, .. } => {
                normal.len()
            }
        }
    }

    /// Checks that the description is a well-formed nonempty set.
    pub fn validate(&self) -> Result<()> {
        let finite = |path: &str, v: &Vector| match v.iter().position(|c| !c.is_finite()) {
            Some(i) => Err(Error::invalid(format!("constraint.{path}[{i}]"), "must be finite")),
            None => Ok(()),
        };
        if self.dim() == 0 {
            return Err(Error::invalid("constraint", "dimension must be at least 1"));
        }
        match self {
            ConstraintSet::Free { .. } | ConstraintSet::Orthant { .. } => {}
            ConstraintSet::Ball { center, radius } => {
                finite("center", center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::invalid("constraint.radius", "must be finite and positive"));
                }
            }
            ConstraintSet::Box { lower, upper } => {
                finite("lower", lower)?;
                finite("upper", upper)?;
                if lower.len() != upper.len() {
                    return Err(Error::invalid(
                        "constraint.upper",
                        format!("expected {} bounds, found {}", lower.len(), upper.len()),
                    ));
                }
                if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
                    return Err(Error::invalid(
                        format!("constraint.lower[{i}]"),
                        "lower bound exceeds upper bound",
                    ));
                }
            }
            ConstraintSet::Halfspace { normal, offset } | ConstraintSet::Hyperplane { normal, offset } => {
                finite("normal", normal)?;
                if !offset.is_finite() {
                    return Err(Error::invalid("constraint.offset", "must be finite"));
                }
                if normal.norm() == 0.0 {
                    return Err(Error::invalid("constraint.normal", "must be nonzero"));
                }
            }
            ConstraintSet::Simplex { scale, .. } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::invalid("constraint.scale", "must be finite and positive"));
                }
            }
        }
        Ok(())
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x)?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Vector) -> Vector {
        match self {
            ConstraintSet::Free { .. } => x.clone(),
            ConstraintSet::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / n)
                }
            }
            ConstraintSet::Box { lower, upper } => {
                Vector::from_fn(x.len(), |i, _| x[i].clamp(lower[i], upper[i]))
            }
            ConstraintSet::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x - normal * (excess / normal.norm_squared())
                }
            }
            ConstraintSet::Hyperplane { normal, offset } => {
                let excess = normal.dot(x) - offset;
                x - normal * (excess / normal.norm_squared())
            }
            ConstraintSet::Orthant { .. } => x.map(|v| v.max(0.0)),
            ConstraintSet::Simplex { scale, .. } => project_simplex(x, *scale),
        }
    }

    /// `‖x − Π(x)‖`.
    pub fn distance(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok((x - self.project_unchecked(x)).norm())
    }

    /// Membership up to `tol`. A point of the wrong dimension is never a member.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.len() == self.dim() && (x - self.project_unchecked(x)).norm() <= tol
    }

    /// Distance from `v` to the normal cone `N(x, C)` at a feasible `x`.
    pub fn normal_cone_distance(&self, x: &Vector, v: &Vector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        check_dim(self.dim(), v)?;
        let infeasibility = (x - self.project_unchecked(x)).norm();
        if infeasibility > MEMBERSHIP_TOL {
            return Err(Error::Infeasible {
                distance: infeasibility,
            });
        }
        let tol = MEMBERSHIP_TOL;
        let d = match self {
            ConstraintSet::Free { .. } => v.norm(),
            ConstraintSet::Ball { center, radius } => {
                let r = x - center;
                let rn = r.norm();
                if rn < radius - tol || rn == 0.0 {
                    v.norm()
                } else {
                    distance_to_ray(v, &(r / rn))
                }
            }
            ConstraintSet::Box { lower, upper } => {
                let mut s = 0.0;
                for i in 0..x.len() {
                    let at_lower = x[i] - lower[i] <= tol;
                    let at_upper = upper[i] - x[i] <= tol;
                    let c = match (at_lower, at_upper) {
                        (true, true) => 0.0,
                        (true, false) => v[i].max(0.0),
                        (false, true) => (-v[i]).max(0.0),
                        (false, false) => v[i].abs(),
                    };
                    s += c * c;
                }
                s.sqrt()
            }
            ConstraintSet::Halfspace { normal, offset } => {
                let nn = normal.norm();
                if normal.dot(x) - offset >= -tol * nn {
                    distance_to_ray(v, &(normal / nn))
                } else {
                    v.norm()
                }
            }
            ConstraintSet::Hyperplane { normal, .. } => {
                let u = normal / normal.norm();
                (v - &u * u.dot(v)).norm()
            }
            ConstraintSet::Orthant { .. } => x
                .iter()
                .zip(v.iter())
                .map(|(&xi, &vi)| if xi <= tol { vi.max(0.0) } else { vi.abs() })
                .map(|c| c * c)
                .sum::<f64>()
                .sqrt(),
            ConstraintSet::Simplex { .. } => {
                let active: Vec<bool> = x.iter().map(|&xi| xi <= tol).collect();
                simplex_cone_distance(v, &active)
            }
        };
        Ok(d)
    }

    /// Draws a feasible point, either by projecting a Gaussian perturbation of
    /// `around` with standard deviation `radius` or, for bounded sets, by
    /// sampling the set directly.
    pub fn sample_feasible<R: Rng + ?Sized>(&self, around: &Vector, radius: f64, rng: &mut R) -> Vector {
        let n = self.dim();
        let bounded = matches!(
            self,
            ConstraintSet::Ball { .. } | ConstraintSet::Box { .. } | ConstraintSet::Simplex { .. }
        );
        if bounded && rng.random_bool(0.5) {
            return match self {
                ConstraintSet::Ball { center, radius } => {
                    let g = gaussian(n, rng);
                    let gn = g.norm().max(f64::MIN_POSITIVE);
                    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                    center + g * (r / gn)
                }
                ConstraintSet::Box { lower, upper } => {
                    Vector::from_fn(n, |i, _| lower[i] + (upper[i] - lower[i]) * rng.random::<f64>())
                }
                ConstraintSet::Simplex { scale, .. } => {
                    let e = Vector::from_fn(n, |_, _| Exp1.sample(rng));
                    let s = e.sum();
                    e * (*scale / s)
                }
                _ => unreachable!(),
            };
        }
        let y = around + gaussian(n, rng) * radius;
        self.project_unchecked(&y)
    }

    /// Feasible points obtained by pushing `x` to the extreme points or along
    /// the extreme rays of the set, where the set has such a finite list.
    pub fn extreme_probes(&self, x: &Vector) -> Vec<Vector> {
        match self {
            ConstraintSet::Box { lower, upper } => {
                let mut out = Vec::with_capacity(2 * x.len());
                for i in 0..x.len() {
                    for bound in [lower[i], upper[i]] {
                        let mut z = x.clone();
                        z[i] = bound;
                        out.push(z);
                    }
                }
                out
            }
            ConstraintSet::Orthant { .. } => {
                let scale = 1.0 + x.amax();
                let mut out = Vec::with_capacity(2 * x.len());
                for i in 0..x.len() {
                    let mut down = x.clone();
                    down[i] = 0.0;
                    out.push(down);
                    let mut up = x.clone();
                    up[i] += scale;
                    out.push(up);
                }
                out
            }
            ConstraintSet::Simplex { dim, scale } => (0..*dim)
                .map(|i| {
                    let mut z = Vector::zeros(*dim);
                    z[i] = *scale;
                    z
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Distance from `v` to the ray `{λ u : λ ≥ 0}` for a unit vector `u`.
fn distance_to_ray(v: &Vector, u: &Vector) -> f64 {
    let t = u.dot(v).max(0.0);
    (v - u * t).norm()
}

/// Projection onto `{x ≥ 0, Σ x = scale}` by sorting and thresholding.
fn project_simplex(x: &Vector, scale: f64) -> Vector {
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - scale) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    x.map(|v| (v - theta).max(0.0))
}

/// Distance from `v` to the simplex normal cone `{λ·1 − μ : μ ≥ 0, μ_i = 0 off
/// the active set}`.
///
/// For fixed `λ` the best `μ` cancels every negative active residual, leaving
/// `φ(λ) = Σ_free (v_i − λ)² + Σ_active max(v_i − λ, 0)²`. Its minimizer keeps
/// some prefix of the active entries sorted in decreasing order; every prefix is
/// tried and `φ` is evaluated exactly at each candidate.
fn simplex_cone_distance(v: &Vector, active: &[bool]) -> f64 {
    let free: Vec<f64> = v.iter().zip(active).filter(|(_, &a)| !a).map(|(&x, _)| x).collect();
    let mut act: Vec<f64> = v.iter().zip(active).filter(|(_, &a)| a).map(|(&x, _)| x).collect();
    act.sort_by(|a, b| b.total_cmp(a));

    let phi = |lambda: f64| -> f64 {
        free.iter().map(|&x| (x - lambda).powi(2)).sum::<f64>()
            + act.iter().map(|&x| (x - lambda).max(0.0).powi(2)).sum::<f64>()
    };
    if free.is_empty() && act.is_empty() {
        return 0.0;
    }

    let mut best = f64::INFINITY;
    let mut sum: f64 = free.iter().sum();
    let mut count = free.len();
    for k in 0..=act.len() {
        if k > 0 {
            sum += act[k - 1];
            count += 1;
        }
        if count == 0 {
            // nothing free and no active entry kept: λ can grow past every v_i
            best = 0.0;
            continue;
        }
        best = best.min(phi(sum / count as f64));
    }
    best.max(0.0).sqrt()
}
