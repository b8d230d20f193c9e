#![allow(dead_code)]

use fermat_weber::problem::DEFAULT_ETA_ANCHOR;
use fermat_weber::weiszfeld::step;
use fermat_weber::{ConstraintSet, ProblemInstance, SolveResult, Vector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const VARIANTS: usize = 7;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn uniform_box<R: Rng>(n: usize, half: f64, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-half..half))
}

fn unit<R: Rng>(n: usize, rng: &mut R) -> Vector {
    loop {
        let g = gaussian(n, rng);
        let norm = g.norm();
        if norm > 1e-6 {
            return g / norm;
        }
    }
}

/// Catalog member `variant % 7` in dimension `n`, sized to interact with
/// anchors drawn from `[-1, 1]^n`.
pub fn random_constraint<R: Rng>(variant: usize, n: usize, rng: &mut R) -> ConstraintSet {
    match variant % VARIANTS {
        0 => ConstraintSet::free(n),
        1 => ConstraintSet::ball(uniform_box(n, 0.5, rng), rng.random_range(0.2..0.8)),
        2 => {
            let lower = Vector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
            let upper = Vector::from_fn(n, |i, _| lower[i] + rng.random_range(0.2..1.2));
            ConstraintSet::bounds(lower, upper)
        }
        3 => ConstraintSet::halfspace(unit(n, rng), rng.random_range(-0.3..0.3)),
        4 => ConstraintSet::hyperplane(unit(n, rng), rng.random_range(-0.3..0.3)),
        5 => ConstraintSet::orthant(n),
        _ => ConstraintSet::simplex(n, rng.random_range(0.5..2.0)),
    }
}

/// A seeded instance: dimension in `dims`, 3 to 8 anchors in `[-1, 1]^n`,
/// weights in `[0.5, 2]`. Redraws the rare collinear configuration.
pub fn random_instance(seed: u64, dims: (usize, usize), variant: usize) -> ProblemInstance {
    let mut rng = rng(seed);
    loop {
        let n = rng.random_range(dims.0..=dims.1);
        let m = rng.random_range(3..=8);
        let anchors: Vec<Vector> = (0..m).map(|_| uniform_box(n, 1.0, &mut rng)).collect();
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
        let constraint = random_constraint(variant, n, &mut rng);
        let set = fermat_weber::AnchorSet::new(anchors, weights).expect("valid anchors");
        let inst = ProblemInstance::new(set, constraint).expect("valid instance");
        if !inst.is_collinear() {
            return inst;
        }
    }
}

/// Euclidean distance from `p` to the convex hull of `points`.
///
/// Enumerates every subset, takes the nearest point of its affine hull by
/// least squares and keeps it when the barycentric coefficients are
/// nonnegative. Exact up to rounding and fine for a handful of points.
pub fn hull_distance(points: &[Vector], p: &Vector) -> f64 {
    let m = points.len();
    assert!(m <= 12, "subset enumeration is exponential");
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let base = &points[idx[0]];
        let rest = &idx[1..];
        let candidate = if rest.is_empty() {
            Some(base.clone())
        } else {
            let n = p.len();
            let d = DMatrix::from_fn(n, rest.len(), |r, c| points[rest[c]][r] - base[r]);
            let rhs = p - base;
            let svd = d.clone().svd(true, true);
            svd.solve(&rhs, 1e-12).ok().and_then(|beta| {
                let lead = 1.0 - beta.sum();
                let ok = lead >= -1e-12 && beta.iter().all(|&b| b >= -1e-12);
                ok.then(|| base + &d * beta)
            })
        };
        if let Some(q) = candidate {
            best = best.min((q - p).norm());
        }
    }
    best
}

/// `(x_k, x_{k+1})` for every Weiszfeld step recorded in the trace. The
/// successor is recomputed with the same arithmetic the solver used.
pub fn step_pairs(instance: &ProblemInstance, result: &SolveResult) -> Vec<(Vector, Vector)> {
    result
        .trace
        .iter()
        .map(|rec| {
            let next = step(instance, &rec.point, DEFAULT_ETA_ANCHOR).expect("trace points are off the anchors");
            (rec.point.clone(), next)
        })
        .collect()
}

pub fn equilateral() -> ProblemInstance {
    ProblemInstance::from_coords(
        &[&[0.0, 0.0], &[1.0, 0.0], &[0.5, 0.8660254]],
        &[1.0; 3],
        ConstraintSet::free(2),
    )
    .unwrap()
}

pub fn square_halfspace() -> ProblemInstance {
    ProblemInstance::from_coords(
        &[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]],
        &[1.0; 4],
        ConstraintSet::halfspace(fermat_weber::vector(&[0.0, -1.0]), -0.5),
    )
    .unwrap()
}

pub fn heavy_anchor() -> ProblemInstance {
    ProblemInstance::from_coords(
        &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]],
        &[3.0, 1.0, 1.0],
        ConstraintSet::free(2),
    )
    .unwrap()
}
