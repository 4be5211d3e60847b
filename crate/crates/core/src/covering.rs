//! The covering loop: classify every point of `G_eta`, halve `eta` until no
//! point is left undecided, and return the accepted cloud `X` with the
//! ball radius `epsilon`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, DEFAULT_POINT_BUDGET};
use crate::par;
use crate::pointestimates::{estimates_from, point_estimates, PointEstimates};
use crate::polysys::PolynomialSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Certified,
    Guarded,
    Practical,
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileName::Certified => "certified",
            ProfileName::Guarded => "guarded",
            ProfileName::Practical => "practical",
        })
    }
}

impl FromStr for ProfileName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(ProfileName::Certified),
            "guarded" => Ok(ProfileName::Guarded),
            "practical" => Ok(ProfileName::Practical),
            other => Err(Error::Malformed(format!("unknown profile {other:?}"))),
        }
    }
}

/// Constants driving the covering loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub name: ProfileName,
    pub alpha0: f64,
    pub gamma_factor: f64,
    pub beta_factor: f64,
    pub epsilon_factor: f64,
    pub exclusion_margin: f64,
    pub thin_theta: f64,
    /// Largest mesh exponent tried; `None` means initial exponent + 40.
    pub max_k: Option<u32>,
    pub point_budget: u128,
    /// Test the exclusion inequality before computing any singular values.
    pub fast_exclude: bool,
}

const SLACK: f64 = 1e-12;

impl Profile {
    pub fn certified() -> Self {
        Profile {
            name: ProfileName::Certified,
            alpha0: 0.125,
            gamma_factor: 531.0,
            beta_factor: 2.2,
            epsilon_factor: 3.5,
            exclusion_margin: 1.1,
            thin_theta: 0.0,
            max_k: None,
            point_budget: DEFAULT_POINT_BUDGET,
            fast_exclude: true,
        }
    }

    /// Certified constants with thinning radius `theta * r`: the acceptance
    /// factor and the ball radius scale by `1 + theta`.
    pub fn certified_thinned(theta: f64) -> Self {
        Profile {
            gamma_factor: 531.0 * (1.0 + theta),
            epsilon_factor: 3.5 * (1.0 + theta),
            thin_theta: theta,
            ..Self::certified()
        }
    }

    /// Halved and doubled tolerances leaving room for rounding errors.
    pub fn guarded() -> Self {
        Profile {
            name: ProfileName::Guarded,
            alpha0: 0.0625,
            gamma_factor: 1000.0,
            beta_factor: 4.4,
            exclusion_margin: 2.2,
            ..Self::certified()
        }
    }

    pub fn guarded_thinned(theta: f64) -> Self {
        Profile {
            gamma_factor: 1000.0 * (1.0 + theta),
            epsilon_factor: 3.5 * (1.0 + theta),
            thin_theta: theta,
            ..Self::guarded()
        }
    }

    /// Small acceptance factor and thinning. Structural postconditions are
    /// kept; the worst-case homotopy guarantee is not.
    pub fn practical() -> Self {
        Profile { name: ProfileName::Practical, gamma_factor: 5.0, thin_theta: 1.0, ..Self::certified() }
    }

    pub fn named(name: ProfileName) -> Self {
        match name {
            ProfileName::Certified => Self::certified(),
            ProfileName::Guarded => Self::guarded(),
            ProfileName::Practical => Self::practical(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(format!("{} profile: {msg}", self.name)));
        if !(self.alpha0 > 0.0 && self.alpha0 <= 0.125) {
            return bad(format!("alpha0 = {} must lie in (0, 0.125]", self.alpha0));
        }
        if !(self.gamma_factor > 0.0 && self.beta_factor > 0.0 && self.epsilon_factor > 0.0) {
            return bad("factors must be positive".into());
        }
        if !(self.thin_theta >= 0.0) || !(self.exclusion_margin > 0.0) {
            return bad("thin_theta must be >= 0 and exclusion_margin > 0".into());
        }
        if self.point_budget == 0 {
            return bad("point budget must be positive".into());
        }
        let scale = 1.0 + self.thin_theta;
        let (alpha0, gamma, beta, margin) = match self.name {
            ProfileName::Practical => return Ok(()),
            ProfileName::Certified => (0.125, 531.0, 2.2, 1.1),
            ProfileName::Guarded => (0.0625, 1000.0, 4.4, 2.2),
        };
        if self.alpha0 > alpha0 {
            return bad(format!("alpha0 must be <= {alpha0}"));
        }
        if self.gamma_factor < gamma * scale * (1.0 - SLACK) {
            return bad(format!("gamma_factor must be >= {}", gamma * scale));
        }
        if self.beta_factor < beta {
            return bad(format!("beta_factor must be >= {beta}"));
        }
        if self.exclusion_margin < margin {
            return bad(format!("exclusion_margin must be >= {margin}"));
        }
        let (lo, hi) = (3.0 * scale, 4.0 * scale);
        if self.epsilon_factor < lo * (1.0 - SLACK) || self.epsilon_factor > hi * (1.0 + SLACK) {
            return bad(format!("epsilon_factor must lie in [{lo}, {hi}]"));
        }
        Ok(())
    }
}

/// `delta(f, eta) = margin * sqrt(D (n+1)) * ||f|| * eta`.
pub fn delta(system: &PolynomialSystem, eta: f64, margin: f64) -> f64 {
    let d = system.max_degree() as f64;
    let n1 = (system.n() + 1) as f64;
    margin * (d * n1).sqrt() * system.weyl_norm() * eta
}

pub use crate::grid::sep;

/// `C = max{12 (n+1) D, (531^2 / 2) sqrt(n+1) D^3}`; once
/// `eta <= 1 / (C kappa(f)^2)` every grid point is decided.
pub fn halting_constant(n: usize, max_degree: u32) -> f64 {
    let d = max_degree as f64;
    let n1 = (n + 1) as f64;
    f64::max(12.0 * n1 * d, 531.0 * 531.0 / 2.0 * n1.sqrt() * d * d * d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Exclude,
    Refine,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub decision: Decision,
    pub residual_norm: f64,
    /// `None` when the point was excluded from its residual alone.
    pub estimates: Option<PointEstimates>,
}

/// Per-mesh thresholds, computed once per pass.
#[derive(Clone, Copy, Debug)]
struct Thresholds {
    r: f64,
    delta: f64,
}

impl Thresholds {
    fn new(system: &PolynomialSystem, eta: f64, profile: &Profile) -> Self {
        Thresholds { r: sep(eta, system.n()).sqrt(), delta: delta(system, eta, profile.exclusion_margin) }
    }
}

fn classify_with(system: &PolynomialSystem, x: &[f64], t: Thresholds, profile: &Profile) -> Result<Classification> {
    let residual = system.residual_norm(x)?;
    if profile.fast_exclude && residual >= t.delta {
        return Ok(Classification { decision: Decision::Exclude, residual_norm: residual, estimates: None });
    }
    let mu = crate::pointestimates::mu_norm(system, x)?;
    let est = estimates_from(system, mu, residual);
    let accept = est.alpha_bar <= profile.alpha0
        && 1.0 / (profile.gamma_factor * est.gamma_bar) >= t.r
        && profile.beta_factor * est.beta_bar < t.r;
    let decision = if accept {
        Decision::Accept
    } else if residual >= t.delta {
        Decision::Exclude
    } else {
        Decision::Refine
    };
    Ok(Classification { decision, residual_norm: residual, estimates: Some(est) })
}

/// Classifies one unit vector of `G_eta`.
pub fn classify_point(system: &PolynomialSystem, x: &[f64], eta: f64, profile: &Profile) -> Result<Classification> {
    classify_with(system, x, Thresholds::new(system, eta, profile), profile)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PassStats {
    pub k: u32,
    /// Points examined: the whole grid for the final pass, otherwise up to
    /// and including the first undecided point in lexicographic order.
    pub scanned: u64,
    pub accepted: u64,
    pub excluded: u64,
    pub refined: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringResult {
    pub n: usize,
    pub m: usize,
    pub profile: ProfileName,
    /// Certified cloud `X`, unit vectors sorted by integer cube coordinates.
    pub points: Vec<Vec<f64>>,
    #[serde(skip)]
    pub coords: Vec<Vec<i64>>,
    pub epsilon: f64,
    pub eta: f64,
    pub k: u32,
    pub r: f64,
    pub thin_theta: f64,
    pub passes: u32,
    pub pass_stats: Vec<PassStats>,
    /// `|X|` before thinning.
    pub accepted_before_thinning: u64,
    pub empty: bool,
    /// `1 / (87 max gamma_bar)` over `X`: a diagnostic stand-in for the
    /// reach of the zero set, not a bound on it.
    pub reach_proxy: Option<f64>,
}

impl CoveringResult {
    /// Admissible ball radii `[3 r', 4 r']` for the effective density
    /// radius `r' = (1 + theta) r`.
    pub fn admissible_epsilon_interval(&self) -> (f64, f64) {
        let r = (1.0 + self.thin_theta) * self.r;
        (3.0 * r, 4.0 * r)
    }
}

fn canonical_sign(coords: &[i64]) -> i64 {
    match coords.iter().find(|&&c| c != 0) {
        Some(&c) if c < 0 => -1,
        _ => 1,
    }
}

struct ChunkOutcome {
    accepted: Vec<i64>,
    stats: PassStats,
    refined_at: Option<u64>,
}

fn scan_chunk(
    system: &PolynomialSystem,
    spec: &GridSpec,
    range: std::ops::Range<u128>,
    t: Thresholds,
    profile: &Profile,
    stop_at_refine: bool,
) -> Result<ChunkOutcome> {
    let dim = spec.n() + 1;
    let mut cursor = spec.cursor(range.clone());
    let mut canon = vec![0i64; dim];
    let mut x = vec![0.0; dim];
    let mut accepted = Vec::new();
    let mut stats = PassStats { k: spec.k(), scanned: 0, accepted: 0, excluded: 0, refined: 0 };
    let mut refined_at = None;
    let mut index = range.start as u64;
    while let Some(c) = cursor.advance() {
        // classify the antipodal representative so x and -x agree bit for bit
        let sign = canonical_sign(c);
        for (o, &v) in canon.iter_mut().zip(c) {
            *o = sign * v;
        }
        grid::sphere_into(&canon, &mut x);
        stats.scanned += 1;
        match classify_with(system, &x, t, profile)?.decision {
            Decision::Accept => {
                stats.accepted += 1;
                accepted.extend_from_slice(c);
            }
            Decision::Exclude => stats.excluded += 1,
            Decision::Refine => {
                stats.refined += 1;
                refined_at.get_or_insert(index);
                if stop_at_refine {
                    break;
                }
            }
        }
        index += 1;
    }
    Ok(ChunkOutcome { accepted, stats, refined_at })
}

enum PassOutcome {
    Complete { accepted: Vec<i64>, stats: PassStats },
    Refine { stats: PassStats },
}

fn run_pass(system: &PolynomialSystem, spec: &GridSpec, profile: &Profile, full_scan: bool) -> Result<PassOutcome> {
    let t = Thresholds::new(system, spec.eta(), profile);
    let ranges = par::ranges(spec.count(), par::CHUNK);
    let first_refine_chunk = AtomicUsize::new(usize::MAX);
    let outcomes = par::map_vec(ranges.into_iter().enumerate().collect(), |(i, range)| {
        if !full_scan && first_refine_chunk.load(Ordering::Relaxed) < i {
            return None;
        }
        let out = scan_chunk(system, spec, range, t, profile, !full_scan);
        if let Ok(o) = &out {
            if o.refined_at.is_some() {
                first_refine_chunk.fetch_min(i, Ordering::Relaxed);
            }
        }
        Some(out)
    });
    let mut total = PassStats { k: spec.k(), scanned: 0, accepted: 0, excluded: 0, refined: 0 };
    let mut accepted = Vec::new();
    for outcome in outcomes {
        // chunks after the first refining chunk may or may not have run;
        // they are ignored so the statistics do not depend on scheduling
        let Some(outcome) = outcome else { break };
        let o = outcome?;
        total.scanned += o.stats.scanned;
        total.accepted += o.stats.accepted;
        total.excluded += o.stats.excluded;
        total.refined += o.stats.refined;
        accepted.extend(o.accepted);
        if !full_scan && o.refined_at.is_some() {
            return Ok(PassOutcome::Refine { stats: total });
        }
    }
    if total.refined > 0 {
        Ok(PassOutcome::Refine { stats: total })
    } else {
        Ok(PassOutcome::Complete { accepted, stats: total })
    }
}

/// Runs the covering loop. `Ok` with `empty == true` certifies that the
/// zero set is empty; budget exhaustion is reported as an error.
pub fn run_covering(system: &PolynomialSystem, profile: &Profile) -> Result<CoveringResult> {
    profile.validate()?;
    let n = system.n();
    let k0 = grid::initial_mesh_exponent(n);
    let max_k = profile.max_k.unwrap_or(k0 + 40);
    let mut pass_stats = Vec::new();
    let mut k = k0;
    loop {
        if k > max_k {
            let k_last = k - 1;
            let refine_count = pass_stats.last().map(|s: &PassStats| s.refined).unwrap_or(0);
            return Err(Error::BudgetExceeded { eta: (-(k_last as i32) as f64).exp2(), k: k_last, refine_count });
        }
        let spec = GridSpec::new(n, k)?;
        let count = spec.count();
        if count > profile.point_budget {
            return Err(Error::GridBudget { count, budget: profile.point_budget });
        }
        match run_pass(system, &spec, profile, k == max_k)? {
            PassOutcome::Refine { stats } => {
                pass_stats.push(stats);
                k += 1;
            }
            PassOutcome::Complete { accepted, stats } => {
                pass_stats.push(stats);
                return Ok(finish(system, profile, spec, accepted, pass_stats));
            }
        }
    }
}

fn finish(
    system: &PolynomialSystem,
    profile: &Profile,
    spec: GridSpec,
    accepted: Vec<i64>,
    pass_stats: Vec<PassStats>,
) -> CoveringResult {
    let dim = system.n() + 1;
    let eta = spec.eta();
    let r = sep(eta, system.n()).sqrt();
    let coords: Vec<Vec<i64>> = accepted.chunks(dim).map(|c| c.to_vec()).collect();
    let before = coords.len() as u64;
    let coords = if profile.thin_theta > 0.0 && !coords.is_empty() {
        let spheres: Vec<Vec<f64>> = coords.iter().map(|c| sphere_of(c)).collect();
        let kept = thin_canonical(&spheres, profile.thin_theta * r);
        let mut out: Vec<Vec<i64>> = Vec::with_capacity(2 * kept.len());
        for i in kept {
            out.push(coords[i].clone());
            out.push(coords[i].iter().map(|v| -v).collect());
        }
        out.sort();
        out.dedup();
        out
    } else {
        coords
    };
    let points = coords.iter().map(|c| sphere_of(c)).collect::<Vec<_>>();
    let gamma_max =
        points.iter().filter_map(|x| point_estimates(system, x).ok()).map(|e| e.gamma_bar).fold(0.0, f64::max);
    CoveringResult {
        reach_proxy: (gamma_max > 0.0).then(|| 1.0 / (87.0 * gamma_max)),
        n: system.n(),
        m: system.m(),
        profile: profile.name,
        empty: points.is_empty(),
        points,
        coords,
        epsilon: profile.epsilon_factor * r,
        eta,
        k: spec.k(),
        r,
        thin_theta: profile.thin_theta,
        passes: pass_stats.len() as u32,
        pass_stats,
        accepted_before_thinning: before,
    }
}

fn sphere_of(coords: &[i64]) -> Vec<f64> {
    let sign = canonical_sign(coords);
    let canon: Vec<i64> = coords.iter().map(|v| sign * v).collect();
    let mut x = vec![0.0; coords.len()];
    grid::sphere_into(&canon, &mut x);
    x.iter().map(|v| sign as f64 * v).collect()
}

fn is_canonical(x: &[f64]) -> bool {
    x.iter().find(|v| **v != 0.0).is_some_and(|v| *v > 0.0)
}

fn cell_of(x: &[f64], size: f64) -> Vec<i64> {
    x.iter().map(|v| (v / size).floor() as i64).collect()
}

fn neighbor_cells(cell: &[i64]) -> impl Iterator<Item = Vec<i64>> + '_ {
    let dim = cell.len();
    (0..3usize.pow(dim as u32)).map(move |mut code| {
        let mut c = cell.to_vec();
        for v in c.iter_mut() {
            *v += (code % 3) as i64 - 1;
            code /= 3;
        }
        c
    })
}

/// Greedy net over canonical representatives (first nonzero coordinate
/// positive): a representative is kept iff no kept point or mirror of a
/// kept point lies within `radius`. Returns indices of kept
/// representatives in input order.
fn thin_canonical(points: &[Vec<f64>], radius: f64) -> Vec<usize> {
    let mut buckets: HashMap<Vec<i64>, Vec<Vec<f64>>> = HashMap::new();
    let mut kept = Vec::new();
    let r2 = radius * radius;
    for (i, x) in points.iter().enumerate() {
        if !is_canonical(x) {
            continue;
        }
        let cell = cell_of(x, radius);
        let covered = neighbor_cells(&cell).any(|c| {
            buckets.get(&c).is_some_and(|bucket| {
                bucket.iter().any(|y| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2)
            })
        });
        if covered {
            continue;
        }
        kept.push(i);
        let mirror: Vec<f64> = x.iter().map(|v| -v).collect();
        buckets.entry(cell_of(&mirror, radius)).or_default().push(mirror);
        buckets.entry(cell).or_default().push(x.clone());
    }
    kept
}

/// Thins a point cloud to a `radius`-net, enforcing antipodal symmetry by
/// thinning canonical representatives and adding their mirrors. The output
/// is sorted lexicographically.
pub fn thin_to_net(points: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
    if radius <= 0.0 {
        return points.to_vec();
    }
    // points given only by their non-canonical half contribute through
    // their mirror
    let canon: Vec<Vec<f64>> =
        points.iter().map(|x| if is_canonical(x) { x.clone() } else { x.iter().map(|v| -v).collect() }).collect();
    let kept = thin_canonical(&canon, radius);
    let mut out = Vec::with_capacity(2 * kept.len());
    for i in kept {
        out.push(canon[i].clone());
        out.push(canon[i].iter().map(|v| -v).collect());
    }
    out.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    out.dedup();
    out
}

/// Covering document exchanged between pipeline stages. `n` is implied by
/// the point length; `m` is needed to pick the nerve dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub eta: f64,
    pub r: f64,
    pub epsilon: f64,
    pub profile: ProfileName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passes: Option<u32>,
    /// Admissible radii `[3 r', 4 r']`, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach_proxy: Option<f64>,
    pub points: Vec<Vec<f64>>,
}

impl From<&CoveringResult> for CoveringDoc {
    fn from(c: &CoveringResult) -> Self {
        CoveringDoc {
            n: Some(c.n),
            m: Some(c.m),
            eta: c.eta,
            r: c.r,
            epsilon: c.epsilon,
            profile: c.profile,
            passes: Some(c.passes),
            epsilon_interval: Some(c.admissible_epsilon_interval().into()),
            reach_proxy: c.reach_proxy,
            points: c.points.clone(),
        }
    }
}

impl CoveringDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("covering document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CoveringDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let dim = match (doc.n, doc.points.first()) {
            (Some(n), _) => n + 1,
            (None, Some(p)) => p.len(),
            (None, None) => 0,
        };
        if doc.points.iter().any(|p| p.len() != dim) {
            return Err(Error::Malformed("point dimensions disagree".into()));
        }
        if !(doc.epsilon > 0.0) {
            return Err(Error::Malformed("epsilon must be positive".into()));
        }
        Ok(doc)
    }

    /// Ambient `n`, from the header or the points.
    pub fn ambient_n(&self) -> Option<usize> {
        self.n.or_else(|| self.points.first().map(|p| p.len() - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sphere2() -> PolynomialSystem {
        PolynomialSystem::from_terms(2, &[(2, &[(&[2, 0, 0], 1.0), (&[0, 2, 0], 1.0), (&[0, 0, 2], 1.0)])]).unwrap()
    }

    fn hyperbola() -> PolynomialSystem {
        PolynomialSystem::from_terms(1, &[(2, &[(&[2, 0], 1.0), (&[0, 2], -1.0)])]).unwrap()
    }

    #[test]
    fn sep_and_delta_examples() {
        assert_relative_eq!(sep(0.25, 1), 2f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_relative_eq!(delta(&sphere2(), 0.125, 1.1), 1.1 * 6f64.sqrt() * 3f64.sqrt() / 8.0, epsilon = 1e-14);
        assert_relative_eq!(delta(&sphere2(), 0.125, 1.1), 0.5834, epsilon = 1e-4);
        assert_eq!(sep(0.125, 3), sep(0.25, 3) / 2.0);
    }

    #[test]
    fn classify_examples() {
        let p = Profile::certified();
        let c = classify_point(&sphere2(), &[0.0, 0.6, 0.8], 0.125, &p).unwrap();
        assert_eq!(c.decision, Decision::Exclude);

        let s = 0.5f64.sqrt();
        let f = hyperbola();
        // r >= 1/(531 sqrt 2) fails the gamma test; the zero cannot be excluded
        let c = classify_point(&f, &[s, s], 0.125, &p).unwrap();
        assert_eq!(c.decision, Decision::Refine);
        let est = c.estimates.unwrap();
        assert_relative_eq!(est.gamma_bar, 2f64.sqrt(), epsilon = 1e-14);
        // r = sqrt(eta sqrt 2) < 1/(531 sqrt 2) once eta = 2^-21
        let eta = (-21f64).exp2();
        assert!(sep(eta, 1).sqrt() < 1.0 / (531.0 * 2f64.sqrt()));
        let c = classify_point(&f, &[s, s], eta, &p).unwrap();
        assert_eq!(c.decision, Decision::Accept);
    }

    #[test]
    fn empty_sphere_in_one_pass() {
        let res = run_covering(&sphere2(), &Profile::certified()).unwrap();
        assert!(res.empty && res.points.is_empty());
        assert_eq!(res.passes, 1);
        assert_eq!(res.eta, 0.125);
    }

    #[test]
    fn budget_exceeded() {
        let mut p = Profile::certified();
        p.max_k = Some(grid::initial_mesh_exponent(1) + 1);
        match run_covering(&hyperbola(), &p) {
            Err(Error::BudgetExceeded { k, refine_count, .. }) => {
                assert_eq!(k, 4);
                assert!(refine_count > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut p = Profile::certified();
        p.point_budget = 10;
        assert!(matches!(run_covering(&hyperbola(), &p), Err(Error::GridBudget { .. })));
    }

    #[test]
    fn profile_validation() {
        assert!(Profile::certified().validate().is_ok());
        assert!(Profile::certified_thinned(1.0).validate().is_ok());
        assert!(Profile::guarded().validate().is_ok());
        assert!(Profile::practical().validate().is_ok());
        let mut p = Profile::certified();
        p.gamma_factor = 5.0;
        assert!(p.validate().is_err());
        let mut p = Profile::certified();
        p.thin_theta = 1.0;
        assert!(p.validate().is_err());
        let mut p = Profile::guarded();
        p.alpha0 = 0.125;
        assert!(p.validate().is_err());
    }

    #[test]
    fn thin_identity_and_pair() {
        let pts = vec![vec![0.6, 0.8], vec![-0.6, -0.8]];
        assert_eq!(thin_to_net(&pts, 0.0), pts);
        let a = vec![1.0, 0.0];
        let theta = 0.1f64;
        let b = vec![theta.cos(), theta.sin()];
        let out = thin_to_net(&[a.clone(), b], 0.2);
        assert_eq!(out, vec![vec![-1.0, -0.0], a]);
    }

    // Oracle: plain greedy simulation on a sorted sequence, no hashing.
    fn greedy(points: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for x in points {
            let near = kept.iter().any(|y| {
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let dm: f64 = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
                d <= radius || dm <= radius
            });
            if !near {
                kept.push(x.clone());
            }
        }
        kept
    }

    #[test]
    fn thin_dense_cluster() {
        // 480 points spaced 1.3e-6 along a short arc near (1, 1)/sqrt 2
        let base = std::f64::consts::FRAC_PI_4;
        let cluster: Vec<Vec<f64>> = (0..480)
            .map(|i| {
                let t = base + (i as f64 - 240.0) * 1.3e-6;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let radius = 1.3e-3;
        let out = thin_to_net(&cluster, radius);
        let expected = greedy(&cluster, radius);
        assert!(expected.len() <= 2);
        assert_eq!(out.len(), 2 * expected.len());
        for x in &cluster {
            assert!(out
                .iter()
                .any(|y| { x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= radius }));
        }
    }

    #[test]
    fn covering_doc_round_trip() {
        let res = run_covering(&sphere2(), &Profile::certified()).unwrap();
        let doc = CoveringDoc::from(&res);
        assert_eq!(CoveringDoc::from_json(&doc.to_json()).unwrap(), doc);
        assert!(CoveringDoc::from_json("{}").is_err());
    }

    #[test]
    fn halting_constant_formula() {
        let c = halting_constant(1, 2);
        assert_relative_eq!(c, 531.0 * 531.0 / 2.0 * 2f64.sqrt() * 8.0, max_relative = 1e-15);
        assert_eq!(halting_constant(100, 1), f64::max(12.0 * 101.0, 531.0 * 531.0 / 2.0 * 101f64.sqrt()));
    }
}
