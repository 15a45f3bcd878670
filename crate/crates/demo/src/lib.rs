//! WebAssembly exports for the browser demo in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string, either the
//! result object or `{"error": "..."}`. Nothing here depends on the
//! browser, so the same functions run natively in the tests.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use spectral_labels::assign::min_cost_assignment;
use spectral_labels::{
    align_and_error, generate_corpus, sample_params, tensor_power_method, theorem_bounds, train, BoundInputs, Exec,
    MomentScales, PowerConfig, SymTensor3, TrainConfig,
};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&Failure { error }),
    }
    .expect("plain data serializes")
}

#[derive(Serialize, Debug)]
pub struct Recovery {
    pub d: usize,
    pub l: usize,
    pub k: usize,
    pub n_docs: usize,
    pub passes: usize,
    /// true word distributions, one array per topic
    pub true_o: Vec<Vec<f64>>,
    /// estimated word distributions, reordered to match `true_o`
    pub est_o: Vec<Vec<f64>>,
    pub true_pi: Vec<f64>,
    pub est_pi: Vec<f64>,
    pub mu_err: Vec<f64>,
    pub gamma_err: Vec<f64>,
    pub pi_err: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

pub fn recover(
    d: usize,
    l: usize,
    k: usize,
    n_docs: usize,
    words_per_doc: usize,
    concentration: f64,
    seed: u64,
) -> Result<Recovery, String> {
    if n_docs == 0 || n_docs > 200_000 {
        return Err("documents must be between 1 and 200000".into());
    }
    let truth = sample_params(d, l, k, concentration, seed).map_err(|e| e.to_string())?;
    let (corpus, labels) =
        generate_corpus(&truth, n_docs, words_per_doc, 3, seed.wrapping_add(1)).map_err(|e| e.to_string())?;
    let mut cfg = TrainConfig::new(k);
    cfg.seed = seed;
    let out = train(&corpus, &labels, &cfg).map_err(|e| e.to_string())?;
    let err = align_and_error(&truth, &out.model).map_err(|e| e.to_string())?;
    let est = columns(&out.model.o);
    Ok(Recovery {
        d,
        l,
        k,
        n_docs,
        passes: out.report.passes,
        true_o: columns(&truth.o),
        est_o: err.permutation.iter().map(|&j| est[j].clone()).collect(),
        est_pi: err.permutation.iter().map(|&j| out.model.pi[j]).collect(),
        true_pi: truth.pi,
        mu_err: err.mu_errs,
        gamma_err: err.gamma_errs,
        pi_err: err.pi_errs,
        sigma: out.basis.eig.values.clone(),
        lambda: out.eigs.values.clone(),
    })
}

/// Samples a K-topic model, draws a corpus from it, trains, and compares.
#[wasm_bindgen]
pub fn recover_topics(d: u32, k: u32, n_docs: u32, words_per_doc: u32, concentration: f64, seed: u32) -> String {
    to_json(recover(d as usize, 10, k as usize, n_docs as usize, words_per_doc as usize, concentration, seed as u64))
}

#[derive(Serialize, Debug)]
pub struct BoundCurve {
    pub eps1: f64,
    pub eps2: f64,
    pub n: Vec<f64>,
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub pi: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn bounds(
    sigma1: f64,
    sigma_k: f64,
    d2s: f64,
    d3s: f64,
    dls: f64,
    delta: f64,
    n_min: f64,
    n_max: f64,
    points: usize,
) -> Result<BoundCurve, String> {
    if !(n_min > 0.0 && n_max > n_min) || points < 2 {
        return Err("need 0 < n_min < n_max and at least two points".into());
    }
    let mut curve = BoundCurve { eps1: 0.0, eps2: 0.0, n: vec![], mu: vec![], gamma: vec![], pi: vec![] };
    let step = (n_max / n_min).ln() / (points - 1) as f64;
    for i in 0..points {
        let n = n_min * (step * i as f64).exp();
        let b = theorem_bounds(&BoundInputs {
            sigma1,
            sigma_k,
            scales: MomentScales { d1s: 0.0, d2s, d3s, dls },
            n,
            delta,
            k: 1,
            c1: 1.0,
            c2: 1.0,
            pi_max: 1.0,
            pi_min: 1.0,
        })
        .map_err(|e| e.to_string())?;
        curve.eps1 = b.eps1;
        curve.eps2 = b.eps2;
        curve.n.push(n);
        curve.mu.push(b.mu);
        curve.gamma.push(b.gamma);
        curve.pi.push(b.pi);
    }
    Ok(curve)
}

/// The three error bounds on a log-spaced grid of sample sizes.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bound_curve(
    sigma1: f64,
    sigma_k: f64,
    d2s: f64,
    d3s: f64,
    dls: f64,
    delta: f64,
    n_min: f64,
    n_max: f64,
    points: u32,
) -> String {
    to_json(bounds(sigma1, sigma_k, d2s, d3s, dls, delta, n_min, n_max, points as usize))
}

#[derive(Serialize, Debug)]
pub struct PowerDemo {
    pub k: usize,
    pub noise: f64,
    pub true_lambda: Vec<f64>,
    /// recovered eigenvalues matched to `true_lambda`
    pub est_lambda: Vec<f64>,
    /// ‖v_k − û_k‖ after matching
    pub vector_err: Vec<f64>,
    pub iterations: Vec<usize>,
}

pub fn power(k: usize, noise: f64, seed: u64) -> Result<PowerDemo, String> {
    if !(1..=10).contains(&k) {
        return Err("K must be between 1 and 10".into());
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err("noise must be a non-negative number".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
    let mut vectors = columns(&basis);
    let mut weights: Vec<f64> = (0..k).map(|i| 1.0 + 4.0 * (i as f64 + 0.5) / k as f64).collect();
    let true_lambda = weights.clone();
    // noise: random symmetric rank-one terms scaled to Frobenius norm `noise`
    if noise > 0.0 {
        let gs: Vec<Vec<f64>> = (0..k + 2).map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let cs: Vec<f64> = (0..k + 2).map(|_| rng.sample(StandardNormal)).collect();
        let scale = noise / SymTensor3::from_components(&cs, &gs).frobenius();
        weights.extend(cs.iter().map(|c| c * scale));
        vectors.extend(gs);
    }
    let t = SymTensor3::from_components(&weights, &vectors);
    let got = tensor_power_method(&t, k, &PowerConfig::for_k(k, seed), Exec::Sequential).map_err(|e| e.to_string())?;
    let cost: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| (basis.column(i) - got.vectors.column(j)).norm()).collect()).collect();
    let perm = min_cost_assignment(&cost);
    Ok(PowerDemo {
        k,
        noise,
        est_lambda: perm.iter().map(|&j| got.values[j]).collect(),
        vector_err: perm.iter().enumerate().map(|(i, &j)| cost[i][j]).collect(),
        iterations: perm.iter().map(|&j| got.iterations[j]).collect(),
        true_lambda,
    })
}

/// Decomposes a random orthogonal tensor plus symmetric noise.
#[wasm_bindgen]
pub fn power_method(k: u32, noise: f64, seed: u32) -> String {
    to_json(power(k as usize, noise, seed as u64))
}
