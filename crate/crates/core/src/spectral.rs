//! Truncated symmetric eigendecomposition of M̂2 and the whitening basis.
//!
//! The iterative solver is Lanczos with full reorthogonalization. When the
//! Krylov space becomes invariant before enough eigenvalues have converged
//! (repeated eigenvalues, or a start vector missing part of the spectrum) it
//! is restarted with a fresh random vector orthogonal to everything found.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::moments::PairwiseMoment;

/// Top-K eigenpairs, values descending, vectors as the columns of a D×K matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Ŵ = ΩΣ^{-1/2} and Ŵ† = ΩΣ^{1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningBasis {
    pub w: DMatrix<f64>,
    pub w_pinv: DMatrix<f64>,
    pub eig: EigPairs,
}

impl WhiteningBasis {
    pub fn k(&self) -> usize {
        self.w.ncols()
    }
}

/// Flip each column so that its first non-negligible entry is positive.
pub fn canonicalize_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        if let Some(&first) = col.iter().find(|x| x.abs() > 1e-10) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the components of `w` along every basis vector (two sweeps).
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
    }
}

/// Random unit vector orthogonal to `basis`; `None` once the space is spanned.
fn fresh_start(dim: usize, basis: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    if basis.len() >= dim {
        return None;
    }
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        orthogonalize(&mut v, basis);
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            return Some(v);
        }
    }
    None
}

/// Eigen-decomposition of the symmetric tridiagonal (alpha, beta), values descending.
fn tridiag_eig(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let se = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| se.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// The `k` algebraically largest eigenpairs of `m2`.
///
/// Converged when every wanted Ritz pair has residual ‖M̂2ω − νω‖ ≤ tol·ν.
/// `max_iter` bounds the number of Lanczos steps.
pub fn truncated_eig(m2: &PairwiseMoment, k: usize, tol: f64, max_iter: usize, seed: u64) -> Result<EigPairs> {
    let dim = m2.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= D, got k = {k}, D = {dim}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("eigensolver tolerance must be positive, got {tol}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    // beta[j] couples basis j and j+1; zero after a restart.
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];

    let mut v = fresh_start(dim, &basis, &mut rng).expect("dim >= 1");
    let mut steps = 0usize;
    loop {
        m2.matvec(&v, &mut w);
        let a = dot(&w, &v);
        basis.push(v);
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        steps += 1;
        let m = basis.len();

        let exhausted = m == dim;
        let invariant = b <= 1e-12 * alpha.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
        let check = m >= k && (exhausted || invariant || (m - k).is_multiple_of(4));
        if check {
            let (vals, s) = tridiag_eig(&alpha, &beta);
            let coupling = if invariant { 0.0 } else { b };
            let converged = (0..k).all(|i| {
                let res = (coupling * s[(m - 1, i)]).abs();
                res <= tol * vals[i].abs() || (vals[i].abs() <= tol && res <= tol)
            });
            if converged || exhausted {
                return finish(m2, k, tol, &basis, &vals, &s);
            }
        }
        if steps >= max_iter {
            return Err(Error::NoConvergence(max_iter));
        }
        if invariant {
            beta.push(0.0);
            match fresh_start(dim, &basis, &mut rng) {
                Some(nv) => v = nv,
                None => {
                    let (vals, s) = tridiag_eig(&alpha, &beta[..alpha.len() - 1]);
                    return finish(m2, k, tol, &basis, &vals, &s);
                }
            }
        } else {
            beta.push(b);
            v = w.iter().map(|x| x / b).collect();
        }
    }
}

fn finish(
    m2: &PairwiseMoment,
    k: usize,
    tol: f64,
    basis: &[Vec<f64>],
    vals: &[f64],
    s: &DMatrix<f64>,
) -> Result<EigPairs> {
    let dim = m2.dim();
    let mut vectors = DMatrix::zeros(dim, k);
    for c in 0..k {
        let mut col = vec![0.0; dim];
        for (j, q) in basis.iter().enumerate() {
            let coef = s[(j, c)];
            for (x, qi) in col.iter_mut().zip(q) {
                *x += coef * qi;
            }
        }
        let n = norm(&col);
        for (r, x) in col.iter().enumerate() {
            vectors[(r, c)] = x / n;
        }
    }
    canonicalize_signs(&mut vectors);
    let values = vals[..k].to_vec();
    check_rank(&values, tol)?;
    Ok(EigPairs { values, vectors })
}

fn check_rank(values: &[f64], tol: f64) -> Result<()> {
    match values.iter().position(|&v| v <= tol) {
        Some(i) => Err(Error::RankDeficient { index: i + 1, value: values[i], tol }),
        None => Ok(()),
    }
}

/// Dense reference eigensolver; intended for D up to a few hundred.
pub fn dense_eig(m2: &PairwiseMoment, k: usize, tol: f64) -> Result<EigPairs> {
    let dim = m2.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= D, got k = {k}, D = {dim}")));
    }
    let se = SymmetricEigen::new(m2.to_dense());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let values: Vec<f64> = order[..k].iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(dim, k, |r, c| se.eigenvectors[(r, order[c])]);
    canonicalize_signs(&mut vectors);
    check_rank(&values, tol)?;
    Ok(EigPairs { values, vectors })
}

pub fn whitening_from_eig(eig: &EigPairs) -> Result<WhiteningBasis> {
    if let Some(i) = eig.values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::RankDeficient { index: i + 1, value: eig.values[i], tol: 0.0 });
    }
    let mut w = eig.vectors.clone();
    let mut w_pinv = eig.vectors.clone();
    for (c, &nu) in eig.values.iter().enumerate() {
        let r = nu.sqrt();
        w.column_mut(c).unscale_mut(r);
        w_pinv.column_mut(c).scale_mut(r);
    }
    Ok(WhiteningBasis { w, w_pinv, eig: eig.clone() })
}
