//! Nerve of the ball cover `{B(x, epsilon) : x in X}` on the sphere and on
//! projective space. A `q`-simplex is a `(q+1)`-subset of the centers whose
//! smallest enclosing ball has radius `< epsilon`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meb::min_enclosing_ball;
use crate::par;

pub use crate::meb::Ball;

pub const DEFAULT_SIMPLEX_BUDGET: usize = 10_000_000;
const TIE_TOL: f64 = 1e-12;

/// Simplices by dimension, each list sorted with strictly increasing
/// vertex tuples stored flat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NerveComplex {
    vertex_count: usize,
    q_max: usize,
    flat: Vec<Vec<usize>>,
}

fn cmp_slices(a: &[usize], b: &[usize]) -> Ordering {
    a.cmp(b)
}

impl NerveComplex {
    /// Validates sortedness, vertex range and downward closure.
    pub fn new(vertex_count: usize, q_max: usize, simplices: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if simplices.len() > q_max + 1 {
            return Err(Error::Malformed(format!(
                "simplices given up to dimension {} but q_max is {q_max}",
                simplices.len() - 1
            )));
        }
        let mut flat = vec![Vec::new(); q_max + 1];
        for (q, list) in simplices.into_iter().enumerate() {
            let mut prev: Option<Vec<usize>> = None;
            for s in list {
                if s.len() != q + 1 {
                    return Err(Error::Malformed(format!("simplex {s:?} listed in dimension {q}")));
                }
                if s.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Malformed(format!("simplex {s:?} is not strictly increasing")));
                }
                if s.iter().any(|&v| v >= vertex_count) {
                    return Err(Error::Malformed(format!("simplex {s:?} uses a vertex >= {vertex_count}")));
                }
                if let Some(p) = &prev {
                    if cmp_slices(p, &s) != Ordering::Less {
                        return Err(Error::Malformed(format!("dimension {q} list is not sorted at {s:?}")));
                    }
                }
                flat[q].extend_from_slice(&s);
                prev = Some(s);
            }
        }
        let complex = NerveComplex { vertex_count, q_max, flat };
        complex.check_downward_closed()?;
        Ok(complex)
    }

    fn check_downward_closed(&self) -> Result<()> {
        for q in 1..=self.q_max {
            let mut facet = Vec::with_capacity(q);
            for s in self.iter(q) {
                for skip in 0..=q {
                    facet.clear();
                    facet.extend(s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v));
                    if self.index_of(&facet).is_none() {
                        return Err(Error::MissingFacet(facet.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn q_max(&self) -> usize {
        self.q_max
    }

    /// Number of `q`-simplices, `O_q`.
    pub fn count(&self, q: usize) -> usize {
        self.flat.get(q).map_or(0, |f| f.len() / (q + 1))
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..=self.q_max).map(|q| self.count(q)).collect()
    }

    pub fn total(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn iter(&self, q: usize) -> std::slice::ChunksExact<'_, usize> {
        match self.flat.get(q) {
            Some(f) => f.chunks_exact(q + 1),
            None => [].chunks_exact(q + 1),
        }
    }

    pub fn simplex(&self, q: usize, i: usize) -> &[usize] {
        &self.flat[q][i * (q + 1)..(i + 1) * (q + 1)]
    }

    /// Position of a sorted simplex within its dimension list.
    pub fn index_of(&self, s: &[usize]) -> Option<usize> {
        if s.is_empty() || s.len() > self.q_max + 1 {
            return None;
        }
        let q = s.len() - 1;
        let (mut lo, mut hi) = (0, self.count(q));
        while lo < hi {
            let mid = (lo + hi) / 2;
            match cmp_slices(self.simplex(q, mid), s) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn to_lists(&self) -> Vec<Vec<Vec<usize>>> {
        (0..=self.q_max).map(|q| self.iter(q).map(|s| s.to_vec()).collect()).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerveDiagnostics {
    /// Candidate simplices whose enclosing radius was within 1e-12 of
    /// epsilon, or which were dropped because a facet failed the test.
    pub ties: u64,
}

fn sub(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn add(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt()
}

fn cell_of(x: &[f64], size: f64) -> Vec<i64> {
    x.iter().map(|v| (v / size).floor() as i64).collect()
}

/// Sorted neighbor lists of the graph `pair_radius(i, j) < epsilon`. Hash
/// cells of size `2 epsilon` over `centers`; each center carries the index
/// of the vertex it represents.
fn proximity_graph<F>(
    centers: &[(usize, &[f64])],
    vertex_count: usize,
    epsilon: f64,
    pair_radius: F,
    ties: &mut u64,
) -> Vec<Vec<usize>>
where
    F: Fn(usize, usize) -> f64,
{
    let size = 2.0 * epsilon;
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (ci, (_, x)) in centers.iter().enumerate() {
        buckets.entry(cell_of(x, size)).or_default().push(ci);
    }
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); vertex_count];
    for (v, x) in centers {
        let cell = cell_of(x, size);
        let dim = cell.len();
        for mut code in 0..3usize.pow(dim as u32) {
            let mut c = cell.clone();
            for e in c.iter_mut() {
                *e += (code % 3) as i64 - 1;
                code /= 3;
            }
            let Some(bucket) = buckets.get(&c) else { continue };
            for &cj in bucket {
                let w = centers[cj].0;
                if w <= *v || adj[*v].contains(&w) {
                    continue;
                }
                let radius = pair_radius(*v, w);
                if (radius - epsilon).abs() <= TIE_TOL {
                    *ties += 1;
                }
                if radius < epsilon {
                    adj[*v].insert(w);
                    adj[w].insert(*v);
                }
            }
        }
    }
    adj.into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect()
}

fn clique_complex<F>(
    adj: &[Vec<usize>],
    q_max: usize,
    epsilon: f64,
    budget: usize,
    radius_of: F,
    ties: &mut u64,
) -> Result<NerveComplex>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let vertex_count = adj.len();
    let mut complex = NerveComplex { vertex_count, q_max: 0, flat: vec![(0..vertex_count).collect()] };
    let mut total = vertex_count;
    if q_max >= 1 {
        let mut edges = Vec::new();
        for (v, nbrs) in adj.iter().enumerate() {
            for &w in nbrs.iter().filter(|&&w| w > v) {
                edges.extend_from_slice(&[v, w]);
            }
        }
        total += edges.len() / 2;
        complex.flat.push(edges);
        complex.q_max = 1;
    }
    if total > budget {
        return Err(Error::SimplexBudget(budget));
    }
    for q in 2..=q_max {
        // extend each (q-1)-simplex by common neighbors above its last vertex
        let lower = complex.count(q - 1);
        let ranges = par::ranges(lower as u128, 256);
        let complex_ref = &complex;
        let results = par::map_vec(ranges, |range| {
            let mut out = Vec::new();
            let mut local_ties = 0u64;
            let mut cand = Vec::with_capacity(q + 1);
            let mut facet = Vec::with_capacity(q);
            for i in range.start as usize..range.end as usize {
                let sigma = complex_ref.simplex(q - 1, i);
                let last = sigma[q - 1];
                for &v in adj[sigma[0]].iter().filter(|&&v| v > last) {
                    if !sigma[1..].iter().all(|&u| adj[u].binary_search(&v).is_ok()) {
                        continue;
                    }
                    cand.clear();
                    cand.extend_from_slice(sigma);
                    cand.push(v);
                    let radius = radius_of(&cand);
                    if (radius - epsilon).abs() <= TIE_TOL {
                        local_ties += 1;
                    }
                    if radius >= epsilon {
                        continue;
                    }
                    // rounding could accept a simplex whose facet was rejected
                    let closed = (0..q).all(|skip| {
                        facet.clear();
                        facet.extend(cand.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &u)| u));
                        complex_ref.index_of(&facet).is_some()
                    });
                    if closed {
                        out.extend_from_slice(&cand);
                    } else {
                        local_ties += 1;
                    }
                }
            }
            (out, local_ties)
        });
        let mut flat = Vec::new();
        for (out, t) in results {
            flat.extend(out);
            *ties += t;
        }
        total += flat.len() / (q + 1);
        if total > budget {
            return Err(Error::SimplexBudget(budget));
        }
        complex.flat.push(flat);
        complex.q_max = q;
    }
    // pad empty dimensions when q_max exceeds what was built
    while complex.flat.len() < q_max + 1 {
        complex.flat.push(Vec::new());
    }
    complex.q_max = q_max;
    Ok(complex)
}

fn meb_radius(points: &[Vec<f64>], simplex: &[usize]) -> f64 {
    let pts: Vec<Vec<f64>> = simplex.iter().map(|&i| points[i].clone()).collect();
    min_enclosing_ball(&pts).map(|b| b.radius).unwrap_or(f64::INFINITY)
}

/// Nerve of `{B(x_i, epsilon)}` up to dimension `q_max`.
pub fn build_nerve(
    points: &[Vec<f64>],
    epsilon: f64,
    q_max: usize,
    budget: usize,
) -> Result<(NerveComplex, NerveDiagnostics)> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    check_dims(points)?;
    let mut ties = 0;
    let centers: Vec<(usize, &[f64])> = points.iter().map(|p| p.as_slice()).enumerate().collect();
    let adj = proximity_graph(&centers, points.len(), epsilon, |i, j| 0.5 * sub(&points[i], &points[j]), &mut ties);
    let complex = clique_complex(&adj, q_max, epsilon, budget, |s| meb_radius(points, s), &mut ties)?;
    Ok((complex, NerveDiagnostics { ties }))
}

fn check_dims(points: &[Vec<f64>]) -> Result<()> {
    if let Some(first) = points.first() {
        if let Some(p) = points.iter().find(|p| p.len() != first.len()) {
            return Err(Error::DimensionMismatch { expected: first.len(), got: p.len() });
        }
    }
    Ok(())
}

fn canonical_key(x: &[f64]) -> Vec<u64> {
    // -0.0 + 0.0 == +0.0, so both zeros hash alike
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn is_canonical(x: &[f64]) -> bool {
    x.iter().find(|v| **v != 0.0).is_some_and(|v| *v > 0.0)
}

/// One representative per antipodal pair: the one whose first nonzero
/// coordinate is positive, in input order.
pub fn projective_reduce(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let keys: HashSet<Vec<u64>> = points.iter().map(|p| canonical_key(p)).collect();
    for p in points {
        let neg: Vec<f64> = p.iter().map(|v| -v).collect();
        if !keys.contains(&canonical_key(&neg)) {
            return Err(Error::NotAntipodal);
        }
    }
    let mut seen = HashSet::new();
    let mut reps = Vec::with_capacity(points.len() / 2);
    for p in points {
        if is_canonical(p) && seen.insert(canonical_key(p)) {
            reps.push(p.clone());
        }
    }
    Ok(reps)
}

/// Nerve of the projective balls `{B(x, eps), B(-x, eps)}`: a simplex on
/// classes exists iff some choice of signs (first sign fixed to +1) gives
/// an enclosing radius below `epsilon`.
pub fn build_projective_nerve(
    reps: &[Vec<f64>],
    epsilon: f64,
    q_max: usize,
    budget: usize,
) -> Result<(NerveComplex, NerveDiagnostics)> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon >= 1.0 {
        return Err(Error::ProjectiveEpsilon(epsilon));
    }
    check_dims(reps)?;
    let mirrors: Vec<Vec<f64>> = reps.iter().map(|p| p.iter().map(|v| -v).collect()).collect();
    let mut centers: Vec<(usize, &[f64])> = Vec::with_capacity(2 * reps.len());
    for i in 0..reps.len() {
        centers.push((i, reps[i].as_slice()));
        centers.push((i, mirrors[i].as_slice()));
    }
    let mut ties = 0;
    let adj = proximity_graph(
        &centers,
        reps.len(),
        epsilon,
        |i, j| 0.5 * f64::min(sub(&reps[i], &reps[j]), add(&reps[i], &reps[j])),
        &mut ties,
    );
    let radius = |s: &[usize]| -> f64 {
        let q = s.len() - 1;
        let mut best = f64::INFINITY;
        for signs in 0..(1usize << q) {
            let pts: Vec<Vec<f64>> = s
                .iter()
                .enumerate()
                .map(|(j, &i)| if j > 0 && signs >> (j - 1) & 1 == 1 { mirrors[i].clone() } else { reps[i].clone() })
                .collect();
            if let Ok(b) = min_enclosing_ball(&pts) {
                best = best.min(b.radius);
            }
        }
        best
    };
    let complex = clique_complex(&adj, q_max, epsilon, budget, radius, &mut ties)?;
    Ok((complex, NerveDiagnostics { ties }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sphere,
    Projective,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Sphere => "sphere",
            Mode::Projective => "projective",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Mode::Sphere),
            "projective" => Ok(Mode::Projective),
            other => Err(Error::Malformed(format!("unknown mode {other:?}"))),
        }
    }
}

/// Provenance carried along with a nerve so that the homology stage can
/// report the same diagnostics as the one-shot pipeline.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NerveSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ties: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct NerveDoc {
    q_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertex_count: Option<usize>,
    simplices: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(flatten)]
    source: NerveSource,
}

pub fn nerve_to_json(complex: &NerveComplex, source: &NerveSource) -> String {
    let simplices =
        (0..=complex.q_max).map(|q| (q.to_string(), complex.iter(q).map(|s| s.to_vec()).collect())).collect();
    let doc =
        NerveDoc { q_max: complex.q_max, vertex_count: Some(complex.vertex_count), simplices, source: source.clone() };
    serde_json::to_string(&doc).expect("nerve document serializes")
}

/// Parses a nerve document. Simplex lists may be unsorted; they are sorted
/// here, then validated for downward closure.
pub fn nerve_from_json(text: &str) -> Result<(NerveComplex, NerveSource)> {
    let doc: NerveDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut lists = vec![Vec::new(); doc.q_max + 1];
    for (key, list) in doc.simplices {
        let q: usize = key.parse().map_err(|_| Error::Malformed(format!("bad dimension key {key:?}")))?;
        if q > doc.q_max {
            return Err(Error::Malformed(format!("dimension {q} exceeds q_max {}", doc.q_max)));
        }
        let mut list: Vec<Vec<usize>> = list
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s
            })
            .collect();
        list.sort();
        list.dedup();
        lists[q] = list;
    }
    let vertex_count = match doc.vertex_count {
        Some(v) => v,
        None => lists.iter().flatten().flatten().map(|&v| v + 1).max().unwrap_or(0),
    };
    if lists[0].len() != vertex_count || lists[0].iter().enumerate().any(|(i, s)| s[0] != i) {
        return Err(Error::Malformed("vertex list must be 0..vertex_count".into()));
    }
    Ok((NerveComplex::new(vertex_count, doc.q_max, lists)?, doc.source))
}
