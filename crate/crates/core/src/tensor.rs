//! Dense symmetric K×K×K tensors.
//!
//! Entries are stored in full (row-major, `i*K*K + j*K + k`) but every
//! write goes through the canonical index triple `i <= j <= k` and is then
//! mirrored, so the six permutations of an entry are always bit-identical.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3 {
    dim: usize,
    data: Vec<f64>,
}

/// Number of canonical entries `i <= j <= k` for dimension `k`.
pub(crate) fn packed_len(k: usize) -> usize {
    k * (k + 1) * (k + 2) / 6
}

/// Adds `w * z⊗z⊗z` to a packed canonical accumulator.
pub(crate) fn packed_add_cube(acc: &mut [f64], z: &[f64], w: f64) {
    let k = z.len();
    let mut p = 0;
    for a in 0..k {
        let za = w * z[a];
        for b in a..k {
            let zab = za * z[b];
            for c in b..k {
                acc[p] += zab * z[c];
                p += 1;
            }
        }
    }
}

impl SymTensor3 {
    pub fn zeros(dim: usize) -> Self {
        SymTensor3 { dim, data: vec![0.0; dim * dim * dim] }
    }

    /// Expands a packed canonical accumulator, scaling every entry by `scale`.
    pub(crate) fn from_packed(dim: usize, packed: &[f64], scale: f64) -> Self {
        debug_assert_eq!(packed.len(), packed_len(dim));
        let mut t = SymTensor3::zeros(dim);
        let mut p = 0;
        for a in 0..dim {
            for b in a..dim {
                for c in b..dim {
                    t.set_sym(a, b, c, packed[p] * scale);
                    p += 1;
                }
            }
        }
        t
    }

    /// Σ_r λ_r v_r⊗v_r⊗v_r for the given weights and (unit) vectors.
    pub fn from_components(weights: &[f64], vectors: &[Vec<f64>]) -> Self {
        let dim = vectors.first().map_or(0, Vec::len);
        let mut packed = vec![0.0; packed_len(dim)];
        for (&w, v) in weights.iter().zip(vectors) {
            packed_add_cube(&mut packed, v, w);
        }
        SymTensor3::from_packed(dim, &packed, 1.0)
    }

    /// Builds from raw full storage; fails unless the data is exactly symmetric.
    pub fn from_full(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim * dim {
            return Err(Error::Dimension(format!(
                "tensor data has {} entries, expected {}",
                data.len(),
                dim * dim * dim
            )));
        }
        let t = SymTensor3 { dim, data };
        if !t.is_symmetric() {
            return Err(Error::InvalidArgument("tensor is not symmetric".into()));
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    fn set_sym(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let d = self.dim;
        for (i, j, k) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
            self.data[(i * d + j) * d + k] = v;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.dim;
        for a in 0..d {
            for b in a..d {
                for c in b..d {
                    let v = self.get(a, b, c);
                    let perms = [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)];
                    if perms.iter().any(|&(i, j, k)| self.get(i, j, k).to_bits() != v.to_bits()) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// T(·, θ, θ).
    pub fn contract2(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (i, o) in out.iter_mut().enumerate() {
            let slab = &self.data[i * d * d..(i + 1) * d * d];
            let mut s = 0.0;
            for j in 0..d {
                let row = &slab[j * d..(j + 1) * d];
                let inner: f64 = row.iter().zip(theta).map(|(t, x)| t * x).sum();
                s += theta[j] * inner;
            }
            *o = s;
        }
        out
    }

    /// T(θ, θ, θ).
    pub fn contract3(&self, theta: &[f64]) -> f64 {
        self.contract2(theta).iter().zip(theta).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Returns `self - lambda * u⊗u⊗u`, keeping exact symmetry.
    pub fn minus_rank_one(&self, lambda: f64, u: &[f64]) -> SymTensor3 {
        let d = self.dim;
        let mut out = self.clone();
        for a in 0..d {
            let la = lambda * u[a];
            for b in a..d {
                let lab = la * u[b];
                for c in b..d {
                    out.set_sym(a, b, c, self.get(a, b, c) - lab * u[c]);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &SymTensor3) -> SymTensor3 {
        SymTensor3 { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }
}
