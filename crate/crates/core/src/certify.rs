//! Optimality certificates.
//!
//! A feasible point `x̄` off the anchors is optimal iff it is a fixed point of
//! `Π_C ∘ T`, equivalently iff `⟨T(x̄) − x̄, z − x̄⟩ ≤ 0` for every `z ∈ C`.
//! An anchor `a_j` is optimal iff `−R_j ∈ w_j·B̄(0,1) + N(a_j, C)`, which is
//! the same as `dist(−R_j, N(a_j, C)) ≤ w_j`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{check_dim, ProblemInstance, Vector};
use crate::sets::MEMBERSHIP_TOL;

/// Slack allowed in the anchor test `dist(−R_j, N) ≤ w_j`.
pub const ANCHOR_TEST_TOL: f64 = 1e-9;
pub const DEFAULT_VI_SAMPLES: usize = 500;
pub const DEFAULT_VI_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    FixedPoint,
    VariationalInequality,
    /// Zero-based anchor index.
    AnchorCase(usize),
}

impl std::fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CertificateKind::FixedPoint => write!(f, "FixedPoint"),
            CertificateKind::VariationalInequality => write!(f, "VariationalInequality"),
            CertificateKind::AnchorCase(j) => write!(f, "AnchorCase({})", j + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Optimal,
    NotOptimal,
    /// No evidence either way.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    /// Nonnegative violation measure of the optimality condition.
    pub residual: f64,
    /// Anchor case only: `w_j − dist(−R_j, N(a_j, C))`.
    pub margin: Option<f64>,
    pub verdict: Verdict,
    /// Threshold the residual was compared against.
    pub tolerance: f64,
}

impl Certificate {
    pub fn is_optimal(&self) -> bool {
        self.verdict == Verdict::Optimal
    }
}

fn require_feasible(instance: &ProblemInstance, x: &Vector) -> Result<()> {
    let distance = instance.constraint().distance(x)?;
    if distance > MEMBERSHIP_TOL {
        return Err(Error::Infeasible { distance });
    }
    Ok(())
}

fn require_off_anchor(instance: &ProblemInstance, x: &Vector, eta: f64) -> Result<()> {
    let (index, distance) = instance.nearest_anchor(x);
    if distance < eta {
        return Err(Error::AnchorProximity { index, distance });
    }
    Ok(())
}

/// `‖Π_C(T(x)) − x‖` at a feasible non-anchor point.
pub fn fixed_point_residual(instance: &ProblemInstance, x: &Vector, eta: f64) -> Result<f64> {
    check_dim(instance.dim(), x)?;
    require_feasible(instance, x)?;
    require_off_anchor(instance, x, eta)?;
    let t = instance.weiszfeld_map(x, eta)?;
    Ok((instance.constraint().project_unchecked(&t) - x).norm())
}

/// Largest `⟨T(x) − x, z − x⟩` over `samples` random feasible `z` plus the
/// set's extreme probes, clipped below at zero.
///
/// Sampling only ever finds violations, so a zero value is evidence rather
/// than proof. The draw is deterministic in `seed`.
pub fn vi_certificate(instance: &ProblemInstance, x: &Vector, samples: usize, seed: u64, eta: f64) -> Result<f64> {
    Ok(vi_probe(instance, x, samples, seed, eta)?.0)
}

fn vi_probe(instance: &ProblemInstance, x: &Vector, samples: usize, seed: u64, eta: f64) -> Result<(f64, usize)> {
    check_dim(instance.dim(), x)?;
    require_feasible(instance, x)?;
    require_off_anchor(instance, x, eta)?;
    let g = instance.weiszfeld_map(x, eta)? - x;
    let constraint = instance.constraint();
    let radius = instance
        .anchors()
        .iter()
        .map(|a| (a - x).norm())
        .fold(0.0, f64::max)
        .max(1e-3);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let probes = constraint.extreme_probes(x);
    let evaluated = probes.len() + samples;
    for z in probes {
        worst = worst.max(g.dot(&(z - x)));
    }
    for _ in 0..samples {
        let z = constraint.sample_feasible(x, radius, &mut rng);
        worst = worst.max(g.dot(&(z - x)));
    }
    Ok((worst, evaluated))
}

/// Variational-inequality certificate with a verdict: `Optimal` when no
/// sampled direction violates the inequality by more than `tol`.
pub fn certify_vi(
    instance: &ProblemInstance,
    x: &Vector,
    samples: usize,
    seed: u64,
    tol: f64,
    eta: f64,
) -> Result<Certificate> {
    let (residual, evaluated) = vi_probe(instance, x, samples, seed, eta)?;
    let verdict = if residual > tol {
        Verdict::NotOptimal
    } else if evaluated == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Optimal
    };
    Ok(Certificate {
        kind: CertificateKind::VariationalInequality,
        residual,
        margin: None,
        verdict,
        tolerance: tol,
    })
}

/// Tests whether the anchor `a_j` (zero-based) solves the problem.
///
/// An infeasible anchor is never optimal; its residual is its distance to `C`.
pub fn anchor_optimality(instance: &ProblemInstance, j: usize) -> Certificate {
    let kind = CertificateKind::AnchorCase(j);
    let aj = &instance.anchors()[j];
    let constraint = instance.constraint();
    let infeasibility = (aj - constraint.project_unchecked(aj)).norm();
    if infeasibility > MEMBERSHIP_TOL {
        return Certificate {
            kind,
            residual: infeasibility,
            margin: None,
            verdict: Verdict::NotOptimal,
            tolerance: ANCHOR_TEST_TOL,
        };
    }
    let r = instance.anchor_resultant(j);
    let d = constraint
        .normal_cone_distance(aj, &(-r))
        .expect("anchor feasibility was checked above");
    let wj = instance.weights()[j];
    let verdict = if d <= wj + ANCHOR_TEST_TOL {
        Verdict::Optimal
    } else {
        Verdict::NotOptimal
    };
    Certificate {
        kind,
        residual: (d - wj).max(0.0),
        margin: Some(wj - d),
        verdict,
        tolerance: ANCHOR_TEST_TOL,
    }
}

/// Certifies a feasible point: the anchor test when `x` sits on an anchor,
/// the fixed-point residual otherwise.
pub fn certify(instance: &ProblemInstance, x: &Vector, tol: f64, eta: f64) -> Result<Certificate> {
    check_dim(instance.dim(), x)?;
    require_feasible(instance, x)?;
    let (j, d) = instance.nearest_anchor(x);
    if d < eta {
        return Ok(anchor_optimality(instance, j));
    }
    let residual = fixed_point_residual(instance, x, eta)?;
    Ok(Certificate {
        kind: CertificateKind::FixedPoint,
        residual,
        margin: None,
        verdict: if residual <= tol {
            Verdict::Optimal
        } else {
            Verdict::NotOptimal
        },
        tolerance: tol,
    })
}
