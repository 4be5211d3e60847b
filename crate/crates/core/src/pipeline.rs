//! End-to-end orchestration: covering, nerve, homology.

use serde::Serialize;

use crate::covering::{run_covering, CoveringDoc, Profile};
use crate::error::{Error, Result};
use crate::homology::{homology_from_complex, serialize_torsion};
use crate::nerve::{
    build_nerve, build_projective_nerve, projective_reduce, Mode, NerveComplex, NerveDiagnostics, NerveSource,
    DEFAULT_SIMPLEX_BUDGET,
};
use crate::polysys::PolynomialSystem;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub mode: Mode,
    pub profile: Profile,
    pub simplex_budget: usize,
}

impl RunOptions {
    pub fn new(mode: Mode, profile: Profile) -> Self {
        RunOptions { mode, profile, simplex_budget: DEFAULT_SIMPLEX_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    /// Vertices of the nerve: points of `X`, or antipodal classes.
    pub points: usize,
    pub simplices_per_dim: Vec<usize>,
    pub passes: Option<u32>,
    /// Candidate simplices with enclosing radius within 1e-12 of epsilon.
    pub ties: Option<u64>,
    pub runtime_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomologyReport {
    pub mode: Mode,
    pub empty: bool,
    pub betti: Vec<usize>,
    #[serde(serialize_with = "serialize_torsion")]
    pub torsion: Vec<Vec<num_bigint::BigInt>>,
    pub diagnostics: Diagnostics,
}

impl HomologyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Top homology degree `n - m` and nerve dimension `n - m + 1`.
pub fn nerve_dimension(n: usize, m: usize) -> Result<usize> {
    if m == 0 || m > n {
        return Err(Error::InvalidShape(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
    }
    Ok(n - m + 1)
}

/// Builds the nerve for a covering document.
pub fn nerve_stage(
    doc: &CoveringDoc,
    mode: Mode,
    budget: usize,
) -> Result<(NerveComplex, NerveDiagnostics, NerveSource)> {
    let n = doc.ambient_n().ok_or_else(|| Error::Malformed("covering document has neither n nor points".into()))?;
    let m = doc.m.ok_or_else(|| Error::Malformed("covering document lacks m".into()))?;
    let q_max = nerve_dimension(n, m)?;
    let (complex, diag) = match mode {
        Mode::Sphere => build_nerve(&doc.points, doc.epsilon, q_max, budget)?,
        Mode::Projective => {
            let reps = projective_reduce(&doc.points)?;
            build_projective_nerve(&reps, doc.epsilon, q_max, budget)?
        }
    };
    let source = NerveSource {
        mode: Some(mode),
        eta: Some(doc.eta),
        epsilon: Some(doc.epsilon),
        passes: doc.passes,
        ties: Some(diag.ties),
    };
    Ok((complex, diag, source))
}

/// Homology of a nerve, reported with the provenance it carries. A complex
/// without vertices is the certified empty set.
pub fn homology_stage(complex: &NerveComplex, source: &NerveSource) -> Result<HomologyReport> {
    let empty = complex.vertex_count() == 0;
    let (betti, torsion) = if empty {
        (Vec::new(), Vec::new())
    } else {
        let q_top = complex.q_max().checked_sub(1).ok_or(Error::QTopTooLarge { q_top: 0, q_max: 0 })?;
        let h = homology_from_complex(complex, q_top)?;
        (h.betti, h.torsion)
    };
    Ok(HomologyReport {
        mode: source.mode.unwrap_or(Mode::Sphere),
        empty,
        betti,
        torsion,
        diagnostics: Diagnostics {
            eta: source.eta,
            epsilon: source.epsilon,
            points: complex.vertex_count(),
            simplices_per_dim: complex.counts(),
            passes: source.passes,
            ties: source.ties,
            runtime_ms: None,
        },
    })
}

/// Runs the whole pipeline. `runtime_ms` is left for the caller to fill.
pub fn run_homology(system: &PolynomialSystem, options: &RunOptions) -> Result<HomologyReport> {
    let covering = run_covering(system, &options.profile)?;
    let doc = CoveringDoc::from(&covering);
    let (complex, _, source) = match nerve_stage(&doc, options.mode, options.simplex_budget) {
        // the covering is antipodally symmetric by construction
        Err(Error::NotAntipodal) => return Err(Error::Invariant("covering is not closed under x -> -x".into())),
        other => other?,
    };
    homology_stage(&complex, &source)
}
