//! The lattice `U_eta` on the surface of the cube `[-1, 1]^{n+1}` and its
//! radial projection `G_eta` onto the unit sphere.
//!
//! Points are addressed by integer coordinates `c` with `|c_j| <= 2^k` and
//! `max_j |c_j| = 2^k`; the cube point is `c * 2^-k`. Enumeration runs in
//! lexicographic order of `c`, so every lattice point shared by several
//! faces is emitted exactly once, and any contiguous index range can be
//! enumerated on its own.

use crate::error::{Error, Result};

pub const DEFAULT_POINT_BUDGET: u128 = 500_000_000;

/// `k = ceil(log2(4 sqrt(n+1)))`, i.e. the least `k` with `16 (n+1) <= 4^k`.
pub fn initial_mesh_exponent(n: usize) -> u32 {
    let target = 16u128 * (n as u128 + 1);
    let mut k = 0u32;
    while 4u128.pow(k) < target {
        k += 1;
    }
    k
}

/// `R_eta = 2 (n+1) (2/eta)^n` for `eta = 2^-k`.
pub fn grid_cardinality_bound(n: usize, k: u32) -> Result<u128> {
    let base = 1u128
        .checked_shl(k + 1)
        .filter(|_| k + 1 < 128)
        .ok_or_else(|| Error::InvalidShape(format!("mesh exponent {k} overflows")))?;
    let mut acc = 2u128 * (n as u128 + 1);
    for _ in 0..n {
        acc = acc
            .checked_mul(base)
            .ok_or_else(|| Error::InvalidShape(format!("grid bound overflows for n = {n}, k = {k}")))?;
    }
    Ok(acc)
}

pub fn sep(eta: f64, n: usize) -> f64 {
    eta * ((n + 1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
    k: u32,
}

impl GridSpec {
    pub fn new(n: usize, k: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidShape("n must be >= 1".into()));
        }
        if k == 0 || k > 60 {
            return Err(Error::InvalidShape(format!("mesh exponent must lie in 1..=60, got {k}")));
        }
        Ok(GridSpec { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `eta = 2^-k`, exact.
    pub fn eta(&self) -> f64 {
        (-(self.k as i32) as f64).exp2()
    }

    /// Lattice half-width `M = 2^k`.
    pub fn half_width(&self) -> i64 {
        1i64 << self.k
    }

    fn width(&self) -> u128 {
        2 * self.half_width() as u128 + 1
    }

    fn completions(&self, rest: u32, hit: bool) -> (u128, u128) {
        let w = self.width();
        let all = w.saturating_pow(rest);
        if hit {
            (all, all)
        } else {
            (all, all - (w - 2).saturating_pow(rest))
        }
    }

    /// Exact number of lattice points, `(2M+1)^{n+1} - (2M-1)^{n+1}`;
    /// saturates at `u128::MAX`.
    pub fn count(&self) -> u128 {
        let w = self.width();
        let e = self.n as u32 + 1;
        match (w.checked_pow(e), (w - 2).checked_pow(e)) {
            (Some(a), Some(b)) => a - b,
            _ => u128::MAX,
        }
    }

    /// Integer coordinates of the point with lexicographic rank `index`.
    pub fn unrank(&self, mut index: u128) -> Vec<i64> {
        let m = self.half_width();
        let mut coords = Vec::with_capacity(self.n + 1);
        let mut hit = false;
        for j in 0..=self.n {
            let rest = (self.n - j) as u32;
            let (edge, inner) = self.completions(rest, hit);
            if hit {
                coords.push(-m + (index / edge) as i64);
                index %= edge;
                continue;
            }
            if index < edge {
                coords.push(-m);
                hit = true;
                continue;
            }
            index -= edge;
            let middle = (2 * m as u128 - 1) * inner;
            if index < middle {
                coords.push(-m + 1 + (index / inner) as i64);
                index %= inner;
            } else {
                coords.push(m);
                hit = true;
                index -= middle;
            }
        }
        coords
    }

    pub fn cursor(&self, range: std::ops::Range<u128>) -> GridCursor {
        GridCursor {
            m: self.half_width(),
            coords: if range.start < range.end { self.unrank(range.start) } else { Vec::new() },
            remaining: range.end.saturating_sub(range.start),
            started: false,
        }
    }

    /// Allocating iterator over the points of an index range.
    pub fn points_in(&self, range: std::ops::Range<u128>) -> impl Iterator<Item = GridPoint> {
        let k = self.k;
        let mut cursor = self.cursor(range);
        std::iter::from_fn(move || cursor.advance().map(|c| GridPoint::new(c.to_vec(), k)))
    }

    pub fn enumerate(&self, budget: u128) -> Result<impl Iterator<Item = GridPoint>> {
        let count = self.count();
        if count > budget {
            return Err(Error::GridBudget { count, budget });
        }
        Ok(self.points_in(0..count))
    }
}

/// Streaming odometer over consecutive lattice points.
pub struct GridCursor {
    m: i64,
    coords: Vec<i64>,
    remaining: u128,
    started: bool,
}

impl GridCursor {
    pub fn advance(&mut self) -> Option<&[i64]> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        if self.started {
            self.step();
        }
        self.started = true;
        Some(&self.coords)
    }

    fn step(&mut self) {
        let m = self.m;
        let last = self.coords.len() - 1;
        let prefix_hit = self.coords[..last].iter().any(|c| c.abs() == m);
        let c = self.coords[last];
        if c < m {
            self.coords[last] = if prefix_hit { c + 1 } else { m };
            return;
        }
        let mut p = last;
        loop {
            // the caller never steps past the final point, so p stays valid
            p -= 1;
            if self.coords[p] < m {
                self.coords[p] += 1;
                for q in &mut self.coords[p + 1..] {
                    *q = -m;
                }
                return;
            }
        }
    }
}

/// Writes the sphere point `c / ||c||` for integer cube coordinates.
#[inline]
pub fn sphere_into(coords: &[i64], out: &mut [f64]) {
    let norm = coords.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt();
    for (o, &c) in out.iter_mut().zip(coords) {
        *o = c as f64 / norm;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    coords: Vec<i64>,
    k: u32,
}

impl GridPoint {
    pub fn new(coords: Vec<i64>, k: u32) -> Self {
        GridPoint { coords, k }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn cube(&self) -> Vec<f64> {
        let eta = (-(self.k as i32) as f64).exp2();
        self.coords.iter().map(|&c| c as f64 * eta).collect()
    }

    pub fn sphere(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.coords.len()];
        sphere_into(&self.coords, &mut out);
        out
    }
}

/// `phi(y) = y / ||y||` for `y` on the cube surface.
pub fn project_cube_to_sphere(y: &[f64]) -> Result<Vec<f64>> {
    let inf = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if inf == 0.0 {
        return Err(Error::ZeroPoint);
    }
    if (inf - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("point is not on the cube surface (max norm {inf})")));
    }
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(y.iter().map(|v| v / norm).collect())
}

/// `phi^{-1}(x) = x / ||x||_inf`.
pub fn project_sphere_to_cube(x: &[f64]) -> Result<Vec<f64>> {
    let inf = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if inf == 0.0 {
        return Err(Error::ZeroPoint);
    }
    Ok(x.iter().map(|v| v / inf).collect())
}
