//! Browser bindings: STFT and Bargmann-side heatmaps of the same function, and
//! growth classification of synthetic coefficient families.
//!
//! The `*_impl` functions are plain Rust so they can be tested natively.

use fockcalc::bargmann::{bargmann_coeff, fock_eval, stft_gaussian, StftQuad};
use fockcalc::hermite::{hermite_synthesize, Sampled};
use fockcalc::weights::{classify_growth, synthetic_family, SeqKind, SeqWeightSpec};
use fockcalc::{Basis, CoeffArray, TruncationSpec, C64};
use wasm_bindgen::prelude::*;

/// Row-major magnitudes on an n×n lattice over [−r, r]²; rows run over ξ, columns over x.
#[wasm_bindgen]
pub struct Heatmap {
    n: usize,
    r: f64,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Heatmap {
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> usize {
        self.n
    }

    #[wasm_bindgen(getter)]
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

fn hermite_series(re: &[f64], im: &[f64]) -> Result<CoeffArray, String> {
    if re.is_empty() {
        return Err("no coefficients".into());
    }
    if im.len() > re.len() {
        return Err("more imaginary parts than coefficients".into());
    }
    let trunc = TruncationSpec::new(1, re.len() - 1).map_err(|e| e.to_string())?;
    let mut k = 0;
    Ok(CoeffArray::from_fn(trunc, Basis::Hermite, |_| {
        let v = C64::new(re[k], im.get(k).copied().unwrap_or(0.0));
        k += 1;
        v
    }))
}

fn lattice(r: f64, n: usize) -> Result<f64, String> {
    if !(r > 0.0) || n < 2 || n > 401 {
        return Err("need r > 0 and 2 <= n <= 401".into());
    }
    Ok(2.0 * r / (n - 1) as f64)
}

/// |V_φ f| for f = Σ c_k h_k, by direct quadrature on ℝ.
pub fn stft_impl(re: &[f64], im: &[f64], r: f64, n: usize) -> Result<Heatmap, String> {
    let c = hermite_series(re, im)?;
    let h = lattice(r, n)?;
    let f = |y: &[f64]| hermite_synthesize(&c, y).unwrap_or_default();
    let g = stft_gaussian(Sampled::Fn(&f), 1, r, h, StftQuad { r: 12.0, h: 0.05 }).map_err(|e| e.to_string())?;
    // the grid stores x on the slow axis; transpose so rows are ξ
    let mut values = vec![0.0; n * n];
    for ix in 0..n {
        for ik in 0..n {
            values[(n - 1 - ik) * n + ix] = g.values[ix * n + ik].norm();
        }
    }
    Ok(Heatmap { n, r, values })
}

/// (2π)^{-1/2} |F(z)| e^{-|z|²/2} at z = (x − iξ)/√2 with F = 𝔙f from coefficients alone.
pub fn bargmann_impl(re: &[f64], im: &[f64], r: f64, n: usize) -> Result<Heatmap, String> {
    let fock = bargmann_coeff(&hermite_series(re, im)?).map_err(|e| e.to_string())?;
    let h = lattice(r, n)?;
    let pre = (2.0 * std::f64::consts::PI).powf(-0.5);
    let mut values = vec![0.0; n * n];
    for row in 0..n {
        let xi = r - row as f64 * h;
        for col in 0..n {
            let x = -r + col as f64 * h;
            let z = C64::new(x, -xi) / std::f64::consts::SQRT_2;
            let f = fock_eval(&fock, &[z]).map_err(|e| e.to_string())?;
            values[row * n + col] = pre * f.norm() * (-z.norm_sqr() / 2.0).exp();
        }
    }
    Ok(Heatmap { n, r, values })
}

/// Builds a synthetic family and runs the classifier; returns a JSON summary.
pub fn classify_impl(kind: &str, param: f64, r: f64, growth: bool, n: usize) -> Result<String, String> {
    let kind = match kind {
        "powerexp" => SeqKind::PowerExp { s: param },
        "flat" => SeqKind::Flat { sigma: param },
        other => return Err(format!("unknown family '{other}' (powerexp or flat)")),
    };
    let trunc = TruncationSpec::new(1, n).map_err(|e| e.to_string())?;
    let c = synthetic_family(trunc, &SeqWeightSpec { kind, r }, growth).map_err(|e| e.to_string())?;
    let g = classify_growth(&c).map_err(|e| e.to_string())?;
    Ok(serde_json::json!({
        "family": g.family.label(),
        "parameter": g.parameter,
        "r": g.r,
        "residual": g.residual,
        "relative_error": (g.parameter - param).abs() / param,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn stft_heatmap(re: Vec<f64>, im: Vec<f64>, r: f64, n: usize) -> Result<Heatmap, JsValue> {
    stft_impl(&re, &im, r, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bargmann_heatmap(re: Vec<f64>, im: Vec<f64>, r: f64, n: usize) -> Result<Heatmap, JsValue> {
    bargmann_impl(&re, &im, r, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify_family(kind: &str, param: f64, r: f64, growth: bool, n: usize) -> Result<String, JsValue> {
    classify_impl(kind, param, r, growth, n).map_err(|e| JsValue::from_str(&e))
}
