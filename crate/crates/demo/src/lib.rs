//! Browser bindings for `www/index.html`. Every export takes and returns JSON
//! strings and reports failures as a thrown string. The `*_json` functions
//! carry the logic so they can be tested natively.

use realhom::covering::{classify_point, Profile, ProfileName};
use realhom::grid::{GridSpec, DEFAULT_POINT_BUDGET};
use realhom::nerve::Mode;
use realhom::pipeline::{run_homology, RunOptions};
use realhom::pointestimates::kappa_upper_estimate;
use realhom::polysys::parse_system;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn profile(name: &str) -> Result<Profile, String> {
    Ok(Profile::named(name.parse::<ProfileName>().map_err(fail)?))
}

/// Classifies one point, normalised onto the sphere, at mesh `2^-k`.
pub fn classify_json(system: &str, point: &str, k: u32, profile_name: &str) -> Result<String, String> {
    let f = parse_system(system).map_err(fail)?;
    let x: Vec<f64> = serde_json::from_str(point).map_err(fail)?;
    if x.len() != f.n() + 1 {
        return Err(fail(format!("point needs {} coordinates", f.n() + 1)));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(fail("point must be finite and nonzero"));
    }
    let x: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let eta = GridSpec::new(f.n(), k).map_err(fail)?.eta();
    let c = classify_point(&f, &x, eta, &profile(profile_name)?).map_err(fail)?;
    Ok(json!({
        "point": x,
        "eta": eta,
        "decision": c.decision,
        "residual_norm": c.residual_norm,
        "estimates": c.estimates,
    })
    .to_string())
}

/// Runs covering, nerve and homology; returns the result document.
pub fn homology_json(system: &str, mode: &str, profile_name: &str) -> Result<String, String> {
    let f = parse_system(system).map_err(fail)?;
    let mode: Mode = mode.parse().map_err(fail)?;
    let report = run_homology(&f, &RunOptions::new(mode, profile(profile_name)?)).map_err(fail)?;
    Ok(report.to_json())
}

/// Condition estimates on successively finer grids, `[{k, eta, kappa}]`.
pub fn kappa_sweep_json(system: &str, k_from: u32, k_to: u32) -> Result<String, String> {
    let f = parse_system(system).map_err(fail)?;
    let rows = (k_from..=k_to)
        .map(|k| {
            let eta = GridSpec::new(f.n(), k).map_err(fail)?.eta();
            let kappa = kappa_upper_estimate(&f, k, DEFAULT_POINT_BUDGET).map_err(fail)?;
            Ok(json!({"k": k, "eta": eta, "kappa": kappa}))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(serde_json::Value::from(rows).to_string())
}

#[wasm_bindgen]
pub fn classify(system: &str, point: &str, k: u32, profile_name: &str) -> Result<String, JsValue> {
    classify_json(system, point, k, profile_name).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn homology(system: &str, mode: &str, profile_name: &str) -> Result<String, JsValue> {
    homology_json(system, mode, profile_name).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn kappa_sweep(system: &str, k_from: u32, k_to: u32) -> Result<String, JsValue> {
    kappa_sweep_json(system, k_from, k_to).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINES: &str = r#"{"n": 1, "m": 1, "polynomials": [{"degree": 2, "terms": [{"exponents": [2,0], "coeff": 1.0}, {"exponents": [0,2], "coeff": -1.0}]}]}"#;

    #[test]
    fn classify_reports_decision() {
        let decision = |point: &str, k: u32| {
            let out: serde_json::Value =
                serde_json::from_str(&classify_json(LINES, point, k, "certified").unwrap()).unwrap();
            out["decision"].as_str().unwrap().to_string()
        };
        // a zero needs a fine mesh before it is certified
        assert_eq!(decision("[1, 1]", 4), "refine");
        assert_eq!(decision("[1, 1]", 20), "accept");
        assert_eq!(decision("[1, 0]", 4), "exclude");
    }

    #[test]
    fn homology_of_four_points() {
        let out: serde_json::Value =
            serde_json::from_str(&homology_json(LINES, "projective", "certified").unwrap()).unwrap();
        assert_eq!(out["betti"], json!([2]));
    }

    #[test]
    fn errors_are_messages() {
        assert!(classify_json(LINES, "[1, 0, 0]", 4, "certified").unwrap_err().contains("2 coordinates"));
        assert!(homology_json(LINES, "torus", "certified").is_err());
    }

    #[test]
    fn sweep_has_one_row_per_mesh() {
        let out: serde_json::Value = serde_json::from_str(&kappa_sweep_json(LINES, 3, 5).unwrap()).unwrap();
        assert_eq!(out.as_array().unwrap().len(), 3);
    }
}
