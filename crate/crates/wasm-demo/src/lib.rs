//! Browser bindings for the interactive demo page in `www/`.

use wasm_bindgen::prelude::*;

use grd::cepstrum::{self, CepstralConfig, DctPlan};
use grd::dtw::{self, CostMatrix};
use grd::graph::{build_graph_basis, GftBasis, GraphSpec, Operator, Topology};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn spec(topology: &str, operator: &str, n: usize) -> Result<GraphSpec, JsError> {
    let topology: Topology = topology.parse().map_err(js_err)?;
    let operator: Operator = operator.parse().map_err(js_err)?;
    Ok(GraphSpec::new(topology, n, operator))
}

/// Eigenbasis of a path or cycle graph.
#[wasm_bindgen]
pub struct Basis {
    inner: GftBasis,
}

#[wasm_bindgen]
impl Basis {
    #[wasm_bindgen(constructor)]
    pub fn new(topology: &str, operator: &str, n: usize) -> Result<Basis, JsError> {
        let inner = build_graph_basis(&spec(topology, operator, n)?).map_err(js_err)?;
        Ok(Basis { inner })
    }

    pub fn size(&self) -> usize {
        self.inner.size()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    /// Eigenvector `k`, in ascending eigenvalue order.
    pub fn vector(&self, k: usize) -> Result<Vec<f64>, JsError> {
        if k >= self.inner.size() {
            return Err(JsError::new("eigenvector index out of range"));
        }
        Ok(self.inner.vector(k))
    }

    pub fn gft(&self, frame: &[f64]) -> Result<Vec<f64>, JsError> {
        self.inner.gft(frame).map_err(js_err)
    }

    /// GFCC (`kind = "gfcc"`) or GFLC (`kind = "gflc"`) of one frame.
    pub fn cepstrum(&self, kind: &str, frame: &[f64], n_ceps: usize) -> Result<Vec<f64>, JsError> {
        let coeffs = self.inner.gft(frame).map_err(js_err)?;
        let cfg = CepstralConfig {
            n_ceps,
            ..CepstralConfig::default()
        };
        match kind {
            "gfcc" => cepstrum::gfcc_frame(&coeffs, &cfg).map_err(js_err),
            "gflc" => cepstrum::gflc_frame(&coeffs, &cfg).map_err(js_err),
            other => Err(JsError::new(&format!("unknown kind `{other}`"))),
        }
    }
}

/// Sum of `harmonics` partials of `f0` with 1/h amplitudes, Hamming-windowed.
#[wasm_bindgen]
pub fn harmonic_frame(n: usize, f0: f64, sample_rate: f64, harmonics: usize) -> Vec<f64> {
    let w = grd::framing::Window::Hamming.coefficients(n);
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            let x: f64 = (1..=harmonics)
                .map(|h| (2.0 * std::f64::consts::PI * f0 * h as f64 * t).sin() / h as f64)
                .sum();
            x * w[i]
        })
        .collect()
}

/// Orthonormal DCT-II, truncated to `n_out` outputs.
#[wasm_bindgen]
pub fn dct(x: &[f64], n_out: usize) -> Result<Vec<f64>, JsError> {
    DctPlan::new(x.len(), n_out)
        .map_err(js_err)?
        .apply(x)
        .map_err(js_err)
}

/// Optimal warping path between two scalar sequences.
#[wasm_bindgen]
pub struct Alignment {
    steps: Vec<u32>,
    cost: f64,
}

#[wasm_bindgen]
impl Alignment {
    /// Flattened `(i, j)` steps.
    pub fn steps(&self) -> Vec<u32> {
        self.steps.clone()
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }
}

#[wasm_bindgen]
pub fn align(g: &[f64], s: &[f64]) -> Result<Alignment, JsError> {
    if g.is_empty() || s.is_empty() {
        return Err(JsError::new("sequences must be nonempty"));
    }
    let data = g
        .iter()
        .flat_map(|a| s.iter().map(move |b| (a - b).abs()))
        .collect();
    let cost = CostMatrix::new(g.len(), s.len(), data).map_err(js_err)?;
    let path = dtw::dtw_from_cost(&cost);
    Ok(Alignment {
        steps: path
            .steps
            .iter()
            .flat_map(|&(i, j)| [i as u32, j as u32])
            .collect(),
        cost: path.total_cost,
    })
}
