//! Homogeneous polynomial systems: dense term maps, evaluation,
//! differentiation, the Weyl norm and the Kostlan ensemble.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multi-index of a monomial `x_0^{a_0} ... x_n^{a_n}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exponents: Vec<u32>) -> Self {
        ExponentVector(exponents)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `d! / (a_0! ... a_n!)`, exact for the degrees handled here.
    pub fn multinomial(&self) -> f64 {
        let d = self.total_degree();
        let mut value = factorial(d);
        for &a in &self.0 {
            value /= factorial(a);
        }
        value
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

#[inline]
fn ipow(x: f64, e: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..e {
        acc *= x;
    }
    acc
}

#[inline]
fn monomial(x: &[f64], exps: &[u32]) -> f64 {
    let mut acc = 1.0;
    for (&xi, &a) in x.iter().zip(exps) {
        acc *= ipow(xi, a);
    }
    acc
}

/// Every exponent vector of total degree `degree` in `vars` variables,
/// in decreasing lexicographic order.
pub fn exponents_of_degree(vars: usize, degree: u32) -> Vec<ExponentVector> {
    fn rec(vars: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<ExponentVector>) {
        if vars == 1 {
            prefix.push(remaining);
            out.push(ExponentVector(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=remaining).rev() {
            prefix.push(a);
            rec(vars - 1, remaining - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if vars > 0 {
        rec(vars, degree, &mut Vec::with_capacity(vars), &mut out);
    }
    out
}

/// Binomial coefficient as u128.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPolynomial {
    degree: u32,
    terms: BTreeMap<ExponentVector, f64>,
}

impl HomogeneousPolynomial {
    /// Builds a polynomial in `vars` variables, rejecting terms whose
    /// exponents do not match `vars` or `degree`, and duplicates.
    pub fn new<I>(vars: usize, degree: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        if degree == 1 {
            return Err(Error::InvalidShape(
                "degree 1 polynomials are not accepted; eliminate linear equations by \
                 restricting to the sphere of their common kernel first"
                    .into(),
            ));
        }
        if degree < 2 {
            return Err(Error::InvalidShape(format!("degree must be >= 2, got {degree}")));
        }
        let mut map = BTreeMap::new();
        for (exps, coeff) in terms {
            if exps.len() != vars {
                return Err(Error::InconsistentTerm(format!(
                    "exponent vector {exps:?} has length {}, expected {vars}",
                    exps.len()
                )));
            }
            let ev = ExponentVector(exps);
            if ev.total_degree() != degree {
                return Err(Error::InconsistentTerm(format!(
                    "exponents {:?} sum to {}, polynomial degree is {degree}",
                    ev.0,
                    ev.total_degree()
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::InconsistentTerm(format!("non-finite coefficient for {:?}", ev.0)));
            }
            if map.insert(ev.clone(), coeff).is_some() {
                return Err(Error::InconsistentTerm(format!("duplicate exponent vector {:?}", ev.0)));
            }
        }
        Ok(HomogeneousPolynomial { degree, terms: map })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn coefficient(&self, exps: &[u32]) -> f64 {
        self.terms.get(&ExponentVector(exps.to_vec())).copied().unwrap_or(0.0)
    }

    pub fn weyl_norm_sq(&self) -> f64 {
        self.terms.iter().map(|(e, &c)| c * c / e.multinomial()).sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, &c)| c * monomial(x, &e.0)).sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (e, &c) in &self.terms {
            for (j, &a) in e.0.iter().enumerate().take(x.len()) {
                if a == 0 {
                    continue;
                }
                let mut acc = c * a as f64;
                for (l, (&xl, &al)) in x.iter().zip(&e.0).enumerate() {
                    let p = if l == j { al - 1 } else { al };
                    acc *= ipow(xl, p);
                }
                out[j] += acc;
            }
        }
    }
}

/// A system `f = (f_1, ..., f_m)` of homogeneous polynomials in `n + 1`
/// variables. Immutable once built; the derived quantities are cached.
#[derive(Clone, Debug)]
pub struct PolynomialSystem {
    n: usize,
    polys: Vec<HomogeneousPolynomial>,
    max_degree: u32,
    dim: u128,
    norm: f64,
}

impl PartialEq for PolynomialSystem {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.polys == other.polys
    }
}

impl PolynomialSystem {
    pub fn new(n: usize, polys: Vec<HomogeneousPolynomial>) -> Result<Self> {
        Self::build(n, polys, true)
    }

    fn build(n: usize, polys: Vec<HomogeneousPolynomial>, require_nonzero: bool) -> Result<Self> {
        let m = polys.len();
        if n == 0 {
            return Err(Error::InvalidShape("n must be >= 1".into()));
        }
        if m == 0 || m > n {
            return Err(Error::InvalidShape(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
        }
        for p in &polys {
            if let Some((e, _)) = p.terms.iter().next() {
                if e.len() != n + 1 {
                    return Err(Error::InconsistentTerm(format!(
                        "exponent vector length {} does not match n + 1 = {}",
                        e.len(),
                        n + 1
                    )));
                }
            }
        }
        let max_degree = polys.iter().map(|p| p.degree).max().unwrap_or(0);
        let dim = polys.iter().map(|p| binomial(n as u64 + p.degree as u64, n as u64)).sum();
        let norm = polys.iter().map(|p| p.weyl_norm_sq()).sum::<f64>().sqrt();
        if require_nonzero && !(norm > 0.0) {
            return Err(Error::InvalidShape("the zero system has no well-defined zero set".into()));
        }
        Ok(PolynomialSystem { n, polys, max_degree, dim, norm })
    }

    /// Convenience constructor from `(degree, [(exponents, coeff)])` lists.
    #[allow(clippy::type_complexity)]
    pub fn from_terms(n: usize, polys: &[(u32, &[(&[u32], f64)])]) -> Result<Self> {
        let polys = polys
            .iter()
            .map(|(d, terms)| HomogeneousPolynomial::new(n + 1, *d, terms.iter().map(|(e, c)| (e.to_vec(), *c))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, polys)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[HomogeneousPolynomial] {
        &self.polys
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(|p| p.degree).collect()
    }

    /// `D = max d_i`.
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `N = sum_i binom(n + d_i, n)`, the dimension of the coefficient space.
    pub fn coefficient_dim(&self) -> u128 {
        self.dim
    }

    /// Weyl norm `||f||` (cached).
    pub fn weyl_norm(&self) -> f64 {
        self.norm
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n + 1 {
            return Err(Error::DimensionMismatch { expected: self.n + 1, got: x.len() });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.polys.iter().map(|p| p.evaluate(x)).collect())
    }

    /// Euclidean norm of `f(x)`, without allocating.
    pub fn residual_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.residual_norm_unchecked(x))
    }

    pub(crate) fn residual_norm_unchecked(&self, x: &[f64]) -> f64 {
        self.polys
            .iter()
            .map(|p| {
                let v = p.evaluate(x);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `Df(x)`, an `m x (n+1)` matrix.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let cols = self.n + 1;
        let mut jac = DMatrix::zeros(self.m(), cols);
        let mut row = vec![0.0; cols];
        for (i, p) in self.polys.iter().enumerate() {
            p.gradient_into(x, &mut row);
            for j in 0..cols {
                jac[(i, j)] = row[j];
            }
        }
        Ok(jac)
    }

    /// Diagonal of `Delta(x)`: `||x||^{d_i - 1} sqrt(d_i)`.
    pub fn delta_diagonal(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroPoint);
        }
        Ok(self.polys.iter().map(|p| ipow(norm, p.degree - 1) * (p.degree as f64).sqrt()).collect())
    }

    pub fn delta_scaling(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let diag = self.delta_diagonal(x)?;
        Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// The system `x -> f(U x)` for an orthogonal `U`, expanded densely.
    pub fn pullback_orthogonal(&self, u: &DMatrix<f64>) -> Result<PolynomialSystem> {
        let vars = self.n + 1;
        if u.nrows() != vars || u.ncols() != vars {
            return Err(Error::DimensionMismatch { expected: vars, got: u.nrows() });
        }
        let dev = (u.transpose() * u - DMatrix::<f64>::identity(vars, vars)).amax();
        if dev > 1e-12 {
            return Err(Error::NotOrthogonal(dev));
        }
        // x_j = sum_l U[j][l] y_l as sparse linear forms
        let linear: Vec<BTreeMap<Vec<u32>, f64>> = (0..vars)
            .map(|j| {
                let mut form = BTreeMap::new();
                for l in 0..vars {
                    let mut e = vec![0u32; vars];
                    e[l] = 1;
                    form.insert(e, u[(j, l)]);
                }
                form
            })
            .collect();
        let mut polys = Vec::with_capacity(self.m());
        for p in &self.polys {
            let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            for (e, c) in p.terms() {
                let mut prod: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                prod.insert(vec![0u32; vars], c);
                for (j, &a) in e.as_slice().iter().enumerate() {
                    for _ in 0..a {
                        prod = poly_mul(&prod, &linear[j]);
                    }
                }
                for (k, v) in prod {
                    *acc.entry(k).or_insert(0.0) += v;
                }
            }
            let acc = acc.into_iter().filter(|(_, v)| *v != 0.0);
            polys.push(HomogeneousPolynomial::new(vars, p.degree, acc)?);
        }
        PolynomialSystem::build(self.n, polys, false)
    }
}

fn poly_mul(a: &BTreeMap<Vec<u32>, f64>, b: &BTreeMap<Vec<u32>, f64>) -> BTreeMap<Vec<u32>, f64> {
    let mut out = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    out
}

/// Kostlan system before normalization: `f_{i,a} ~ N(0, multinomial(d_i; a))`.
pub fn kostlan_gaussian<R: rand::Rng>(n: usize, degrees: &[u32], rng: &mut R) -> Result<PolynomialSystem> {
    validate_shape(n, degrees)?;
    let mut polys = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let terms: Vec<(Vec<u32>, f64)> = exponents_of_degree(n + 1, d)
            .into_iter()
            .map(|e| {
                let z: f64 = StandardNormal.sample(rng);
                let c = z * e.multinomial().sqrt();
                (e.0, c)
            })
            .collect();
        polys.push(HomogeneousPolynomial::new(n + 1, d, terms)?);
    }
    PolynomialSystem::build(n, polys, false)
}

/// Uniform sample from the unit sphere of the Weyl norm.
pub fn sample_kostlan(n: usize, degrees: &[u32], seed: u64) -> Result<PolynomialSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = kostlan_gaussian(n, degrees, &mut rng)?;
    let scale = 1.0 / raw.weyl_norm();
    let polys = raw
        .polys
        .iter()
        .map(|p| HomogeneousPolynomial {
            degree: p.degree,
            terms: p.terms.iter().map(|(e, &c)| (e.clone(), c * scale)).collect(),
        })
        .collect();
    PolynomialSystem::new(n, polys)
}

/// Multiplies every coefficient by `lambda`.
pub fn scaled(system: &PolynomialSystem, lambda: f64) -> Result<PolynomialSystem> {
    let polys = system
        .polys
        .iter()
        .map(|p| HomogeneousPolynomial {
            degree: p.degree,
            terms: p.terms.iter().map(|(e, &c)| (e.clone(), c * lambda)).collect(),
        })
        .collect();
    PolynomialSystem::new(system.n, polys)
}

fn validate_shape(n: usize, degrees: &[u32]) -> Result<()> {
    if n == 0 || degrees.is_empty() || degrees.len() > n {
        return Err(Error::InvalidShape(format!("need 1 <= m <= n, got m = {}, n = {n}", degrees.len())));
    }
    if let Some(d) = degrees.iter().find(|&&d| d < 2) {
        return Err(Error::InvalidShape(format!("degrees must be >= 2, got {d}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    exponents: Vec<u32>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDoc {
    degree: u32,
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    n: usize,
    m: usize,
    polynomials: Vec<PolyDoc>,
}

pub fn parse_system(text: &str) -> Result<PolynomialSystem> {
    let doc: SystemDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    if doc.m != doc.polynomials.len() {
        return Err(Error::Malformed(format!("m = {} but {} polynomials given", doc.m, doc.polynomials.len())));
    }
    let polys = doc
        .polynomials
        .into_iter()
        .map(|p| HomogeneousPolynomial::new(doc.n + 1, p.degree, p.terms.into_iter().map(|t| (t.exponents, t.coeff))))
        .collect::<Result<Vec<_>>>()?;
    PolynomialSystem::new(doc.n, polys)
}

pub fn serialize_system(system: &PolynomialSystem) -> String {
    let doc = SystemDoc {
        n: system.n,
        m: system.m(),
        polynomials: system
            .polys
            .iter()
            .map(|p| PolyDoc {
                degree: p.degree,
                terms: p.terms.iter().map(|(e, &c)| TermDoc { exponents: e.0.clone(), coeff: c }).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("system document serializes")
}
