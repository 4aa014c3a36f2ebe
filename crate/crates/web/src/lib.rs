//! Browser bindings for the demo page in `www/`. Every export takes and returns JSON text so
//! the page needs nothing beyond `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dilato::ando::{build_ando_tuple, fundamental_ops};
use dilato::instance::{InstanceFile, InstanceMeta};
use dilato::linalg::{numerical_radius, op_norm, C64};
use dilato::model::charfn::{char_eval, char_triple};
use dilato::pairs::{random_pair, CommutingPair, Scheme};
use dilato::report::Check;
use dilato::suite::{run_suite, Suite, SuiteConfig};

const RADIUS_NON_PURE: f64 = 0.999;

fn parse(instance: &str) -> Result<CommutingPair, String> {
    InstanceFile::parse(instance).and_then(|f| f.to_pair()).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo payloads serialize")
}

fn angles(samples: usize) -> impl Iterator<Item = f64> {
    let samples = samples.max(2);
    (0..=samples).map(move |k| std::f64::consts::TAU * k as f64 / samples as f64)
}

#[derive(Serialize)]
struct ThetaCurves {
    pure: bool,
    radius: f64,
    theta: Vec<f64>,
    /// `sigma[k][i]`: k-th largest singular value at `theta[i]`.
    sigma: Vec<Vec<f64>>,
    theta_at_zero_norm: f64,
}

pub fn theta_curves_json(instance: &str, samples: usize) -> Result<String, String> {
    let pair = parse(instance)?;
    let triple = char_triple(&pair).map_err(|e| e.to_string())?;
    let cf = &triple.theta;
    let radius = if cf.pure { 1.0 } else { RADIUS_NON_PURE };
    let (ds, d) = cf.shape();
    let mut sigma = vec![Vec::new(); ds.min(d)];
    let mut theta = Vec::new();
    for t in angles(samples) {
        let th = char_eval(cf, C64::from_polar(radius, t)).map_err(|e| e.to_string())?;
        let mut s: Vec<f64> = th.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        for (row, x) in sigma.iter_mut().zip(s) {
            row.push(x);
        }
        theta.push(t);
    }
    let theta0 = char_eval(cf, C64::new(0.0, 0.0)).map_err(|e| e.to_string())?;
    Ok(to_json(&ThetaCurves { pure: cf.pure, radius, theta, sigma, theta_at_zero_norm: op_norm(&theta0) }))
}

#[derive(Serialize)]
struct PencilCurves {
    theta: Vec<f64>,
    /// `‖F₁ + e^{iθ}F₂ᴴ‖` and `‖F₂ + e^{iθ}F₁ᴴ‖`.
    phi: Vec<f64>,
    psi: Vec<f64>,
    numerical_radius: [f64; 2],
    norm: [f64; 2],
}

pub fn pencil_curves_json(instance: &str, samples: usize) -> Result<String, String> {
    let pair = parse(instance)?;
    let tuple = build_ando_tuple(&pair).map_err(|e| e.to_string())?;
    let fund = fundamental_ops(&pair, &tuple);
    let (f1, f2) = (&fund.f1, &fund.f2);
    let (mut theta, mut phi, mut psi) = (Vec::new(), Vec::new(), Vec::new());
    for t in angles(samples) {
        let z = C64::from_polar(1.0, t);
        theta.push(t);
        phi.push(op_norm(&(f1 + f2.adjoint() * z)));
        psi.push(op_norm(&(f2 + f1.adjoint() * z)));
    }
    Ok(to_json(&PencilCurves {
        theta,
        phi,
        psi,
        numerical_radius: [numerical_radius(f1, 256), numerical_radius(f2, 256)],
        norm: [op_norm(f1), op_norm(f2)],
    }))
}

#[derive(Serialize)]
struct Row<'a> {
    suite: &'a str,
    #[serde(flatten)]
    check: &'a Check,
}

#[derive(Serialize)]
struct Table<'a> {
    rows: Vec<Row<'a>>,
    /// `(suite, reason)` for suites that were skipped or errored.
    notes: Vec<(&'a str, &'a str)>,
    passed: bool,
}

pub fn residual_table_json(instance: &str, degree: usize) -> Result<String, String> {
    if degree < 2 {
        return Err("the degree bound must be at least 2".into());
    }
    let pair = parse(instance)?;
    let reports = run_suite(&pair, Suite::All, &SuiteConfig { n: degree, seed: 0 });
    let mut table = Table { rows: vec![], notes: vec![], passed: reports.iter().all(|r| r.passed()) };
    for r in &reports {
        table.rows.extend(r.checks.iter().map(|check| Row { suite: &r.suite, check }));
        if let Some(why) = r.skipped.as_deref().or(r.error.as_deref()) {
            table.notes.push((&r.suite, why));
        }
    }
    Ok(to_json(&table))
}

pub fn random_instance_json(dim: usize, seed: u64, scheme: &str) -> Result<String, String> {
    if dim == 0 || dim > 6 {
        return Err("the demo takes dimensions 1 to 6".into());
    }
    let scheme: Scheme = scheme.parse().map_err(|e: dilato::error::Error| e.to_string())?;
    let pair = random_pair(dim, seed, scheme);
    Ok(InstanceFile::from_pair(&pair, Some(InstanceMeta { seed: Some(seed), scheme: Some(scheme) })).to_json())
}

#[wasm_bindgen]
pub fn theta_curves(instance: &str, samples: usize) -> Result<String, JsValue> {
    theta_curves_json(instance, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pencil_curves(instance: &str, samples: usize) -> Result<String, JsValue> {
    pencil_curves_json(instance, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn residual_table(instance: &str, degree: usize) -> Result<String, JsValue> {
    residual_table_json(instance, degree).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn random_instance(dim: usize, seed: u64, scheme: &str) -> Result<String, JsValue> {
    random_instance_json(dim, seed, scheme).map_err(|e| JsValue::from_str(&e))
}
