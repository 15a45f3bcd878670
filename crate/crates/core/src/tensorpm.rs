//! Robust tensor power method with random restarts and deflation.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::tensor::SymTensor3;

/// Eigenpairs of the whitened third moment; `vectors` holds u_k as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorEigs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// Power iterations used by the winning restart of each round.
    pub iterations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub restarts: usize,
    pub iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl PowerConfig {
    /// Defaults for `k` components: 10 + 2K restarts, 100 iterations, tol 1e-10.
    pub fn for_k(k: usize, seed: u64) -> Self {
        PowerConfig { restarts: 10 + 2 * k, iters: 100, tol: 1e-10, seed }
    }
}

/// t − λ·u⊗u⊗u.
pub fn deflate(t: &SymTensor3, lambda: f64, u: &[f64]) -> Result<SymTensor3> {
    if u.len() != t.dim() {
        return Err(Error::Dimension(format!("vector of length {} for a tensor of dim {}", u.len(), t.dim())));
    }
    let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("deflation vector must be unit length, norm = {n}")));
    }
    Ok(t.minus_rank_one(lambda, u))
}

struct Candidate {
    lambda: f64,
    theta: Vec<f64>,
    iters: usize,
}

/// Independent stream per (round, restart) so that restarts can run in any order.
fn restart_rng(seed: u64, round: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((round as u64) << 32) | restart as u64);
    rng
}

fn power_iterate(t: &SymTensor3, mut theta: Vec<f64>, iters: usize, tol: f64) -> Candidate {
    let mut used = 0;
    for _ in 0..iters {
        let mut next = t.contract2(&theta);
        let n = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) || !n.is_finite() {
            break;
        }
        next.iter_mut().for_each(|x| *x /= n);
        used += 1;
        // T(·,θ,θ) is even in θ, so a negative-eigenvalue fixed point alternates sign.
        let (mut dp, mut dm) = (0.0, 0.0);
        for (a, b) in next.iter().zip(&theta) {
            dp += (a - b) * (a - b);
            dm += (a + b) * (a + b);
        }
        theta = next;
        if dp.min(dm).sqrt() <= tol {
            break;
        }
    }
    let mut lambda = t.contract3(&theta);
    if lambda < 0.0 {
        theta.iter_mut().for_each(|x| *x = -*x);
        lambda = -lambda;
    }
    Candidate { lambda, theta, iters: used }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Extracts `k` eigenpairs of `t` by deflation.
pub fn tensor_power_method(t: &SymTensor3, k: usize, cfg: &PowerConfig, exec: Exec) -> Result<TensorEigs> {
    let dim = t.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= {dim}, got {k}")));
    }
    if cfg.restarts == 0 || cfg.iters == 0 || !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument("restarts, iterations and tolerance must be positive".into()));
    }
    let mut residual = t.clone();
    let mut values = Vec::with_capacity(k);
    let mut vectors = DMatrix::zeros(dim, k);
    let mut iterations = Vec::with_capacity(k);
    for round in 0..k {
        let run = |r: usize| {
            let mut rng = restart_rng(cfg.seed, round, r);
            let start = random_unit(&mut rng, dim);
            power_iterate(&residual, start, cfg.iters, cfg.tol)
        };
        let candidates: Vec<Candidate> = match exec {
            Exec::Sequential => (0..cfg.restarts).map(run).collect(),
            Exec::Parallel => (0..cfg.restarts).into_par_iter().map(run).collect(),
        };
        // Largest λ wins; strict comparison keeps the lowest restart index on ties.
        let mut best = &candidates[0];
        for c in &candidates[1..] {
            if c.lambda > best.lambda {
                best = c;
            }
        }
        if !(best.lambda > 0.0) {
            return Err(Error::DecompositionFailed { round: round + 1, lambda: best.lambda });
        }
        residual = residual.minus_rank_one(best.lambda, &best.theta);
        values.push(best.lambda);
        for (r, x) in best.theta.iter().enumerate() {
            vectors[(r, round)] = *x;
        }
        iterations.push(best.iters);
    }
    Ok(TensorEigs { values, vectors, iterations })
}
