//! Smallest enclosing ball of a handful of points (Welzl, move-to-front).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MEB_SEED: u64 = 0x5eed_ba11;

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    fn point(p: &[f64]) -> Self {
        Ball { center: p.to_vec(), radius: 0.0 }
    }

    pub fn contains(&self, p: &[f64], slack: f64) -> bool {
        dist(&self.center, p) <= self.radius + slack * (1.0 + self.radius)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest ball with every point of `support` on its boundary, centered in
/// their affine hull. Affinely dependent supports are handled through a
/// least-squares solve of the Gram system.
pub fn circumball(support: &[&[f64]]) -> Option<Ball> {
    let p0 = support[0];
    if support.len() == 1 {
        return Some(Ball::point(p0));
    }
    let k = support.len() - 1;
    let vs: Vec<Vec<f64>> = support[1..].iter().map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gram = nalgebra::DMatrix::from_fn(k, k, |i, j| 2.0 * dot(&vs[i], &vs[j]));
    let rhs = nalgebra::DVector::from_fn(k, |i, _| dot(&vs[i], &vs[i]));
    let scale = gram.amax().max(f64::MIN_POSITIVE);
    let lambda = gram.svd(true, true).solve(&rhs, 1e-14 * scale).ok()?;
    let mut center = p0.to_vec();
    for (l, v) in lambda.iter().zip(&vs) {
        for (c, x) in center.iter_mut().zip(v) {
            *c += l * x;
        }
    }
    if center.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let radius = support.iter().map(|p| dist(&center, p)).fold(0.0, f64::max);
    Some(Ball { center, radius })
}

const CONTAIN_SLACK: f64 = 1e-12;

/// Move-to-front Welzl: `list[..end]` must lie in the ball whose boundary
/// passes through `boundary`.
fn welzl_mtf<'a>(list: &mut Vec<&'a [f64]>, end: usize, boundary: &mut Vec<&'a [f64]>, dim: usize) -> Option<Ball> {
    let mut ball = if boundary.is_empty() { None } else { Some(circumball(boundary)?) };
    if boundary.len() == dim + 1 {
        return ball;
    }
    for i in 0..end {
        let p = list[i];
        if ball.as_ref().is_some_and(|b| b.contains(p, CONTAIN_SLACK)) {
            continue;
        }
        boundary.push(p);
        ball = Some(welzl_mtf(list, i, boundary, dim)?);
        boundary.pop();
        list.remove(i);
        list.insert(0, p);
    }
    ball
}

/// Exhaustive search over support sets of size at most `dim + 1`.
pub fn min_enclosing_ball_brute_force(points: &[Vec<f64>]) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = points[0].len();
    let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    let max_support = refs.len().min(dim + 1);
    let mut best: Option<Ball> = None;
    let mut subset = Vec::new();
    fn rec<'a>(
        refs: &[&'a [f64]],
        start: usize,
        max_support: usize,
        subset: &mut Vec<&'a [f64]>,
        best: &mut Option<Ball>,
    ) {
        if !subset.is_empty() {
            if let Some(ball) = circumball(subset) {
                let better = best.as_ref().is_none_or(|b| ball.radius < b.radius);
                if better && refs.iter().all(|p| ball.contains(p, CONTAIN_SLACK)) {
                    *best = Some(ball);
                }
            }
        }
        if subset.len() == max_support {
            return;
        }
        for i in start..refs.len() {
            subset.push(refs[i]);
            rec(refs, i + 1, max_support, subset, best);
            subset.pop();
        }
    }
    rec(&refs, 0, max_support, &mut subset, &mut best);
    best.ok_or_else(|| Error::Invariant("no enclosing ball among candidate supports".into()))
}

/// Smallest ball containing all points. The input order is shuffled with a
/// fixed seed, so the result is deterministic.
pub fn min_enclosing_ball(points: &[Vec<f64>]) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: 0 });
    }
    let mut refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    refs.shuffle(&mut ChaCha8Rng::seed_from_u64(MEB_SEED));
    let len = refs.len();
    let ball = welzl_mtf(&mut refs, len, &mut Vec::with_capacity(dim + 1), dim);
    match ball {
        Some(b) if points.iter().all(|p| b.contains(p, CONTAIN_SLACK)) => Ok(b),
        _ => min_enclosing_ball_brute_force(points),
    }
}
