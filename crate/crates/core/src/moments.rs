//! The three estimation passes over the corpus.
//!
//! Pass 1 counts word pairs into the normalized co-occurrence matrix M̂2.
//! Pass 2 projects every document through the whitening matrix and
//! accumulates z⊗z⊗z, so the D×D×D third moment is never formed.
//! Pass 3 does the same for the label cross moment, keeping only the K
//! diagonal slices u_kᵀ M̂2L(Ŵ,Ŵ) u_k that the label matrix needs.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::corpus::{LabelSet, SparseCorpus};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::spectral::WhiteningBasis;
use crate::tensor::{packed_add_cube, packed_len, SymTensor3};
use crate::tensorpm::TensorEigs;

/// Above this vocabulary size pair counts go to a hash map instead of a
/// dense triangle.
const DENSE_PAIR_LIMIT: usize = 1024;

/// Symmetric sparse estimate of the word-pair probabilities, stored as CSR
/// with both triangles present.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMoment {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl PairwiseMoment {
    /// From symmetric triplets (i, j, v) with i <= j; each off-diagonal
    /// triplet is mirrored.
    fn from_upper(dim: usize, mut upper: Vec<(u32, u32, f64)>) -> Self {
        let mut full = Vec::with_capacity(upper.len() * 2);
        for &(i, j, v) in &upper {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        upper.clear();
        full.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; dim + 1];
        for &(i, _, _) in &full {
            row_ptr[i as usize + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        PairwiseMoment {
            dim,
            row_ptr,
            cols: full.iter().map(|t| t.1).collect(),
            vals: full.iter().map(|t| t.2).collect(),
        }
    }

    /// From a dense symmetric matrix; used for tests and small inputs.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension("pairwise moment must be square".into()));
        }
        let d = m.nrows();
        let mut upper = Vec::new();
        for i in 0..d {
            for j in i..d {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::InvalidArgument(format!("matrix not symmetric at ({i},{j})")));
                }
                if m[(i, j)] != 0.0 {
                    upper.push((i as u32, j as u32, m[(i, j)]));
                }
            }
        }
        Ok(PairwiseMoment::from_upper(d, upper))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(p) => self.vals[lo + p],
            Err(_) => 0.0,
        }
    }

    /// y = M x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *yr = self.cols[lo..hi].iter().zip(&self.vals[lo..hi]).map(|(&c, v)| v * x[c as usize]).sum();
        }
    }

    pub fn sum(&self) -> f64 {
        self.vals.iter().sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[p] as usize)] = self.vals[p];
            }
        }
        m
    }
}

enum PairCounts {
    Dense { dim: usize, counts: Vec<u64> },
    Sparse(HashMap<(u32, u32), u64>),
}

/// Offset of row `i` in a row-major packed upper triangle (diagonal included).
#[inline]
fn upper_offset(dim: usize, i: usize) -> usize {
    i * dim - i * i.saturating_sub(1) / 2
}

impl PairCounts {
    fn new(dim: usize) -> Self {
        if dim <= DENSE_PAIR_LIMIT {
            PairCounts::Dense { dim, counts: vec![0; dim * (dim + 1) / 2] }
        } else {
            PairCounts::Sparse(HashMap::new())
        }
    }

    fn add_row(&mut self, row: &[u32]) {
        match self {
            PairCounts::Dense { dim, counts } => {
                for (a, &i) in row.iter().enumerate() {
                    let base = upper_offset(*dim, i as usize);
                    for &j in &row[a..] {
                        counts[base + (j - i) as usize] += 1;
                    }
                }
            }
            PairCounts::Sparse(map) => {
                for (a, &i) in row.iter().enumerate() {
                    for &j in &row[a..] {
                        *map.entry((i, j)).or_insert(0) += 1;
                    }
                }
            }
        }
    }

    fn merge(&mut self, other: PairCounts) {
        match (self, other) {
            (PairCounts::Dense { counts, .. }, PairCounts::Dense { counts: o, .. }) => {
                for (a, b) in counts.iter_mut().zip(o) {
                    *a += b;
                }
            }
            (PairCounts::Sparse(m), PairCounts::Sparse(o)) => {
                for (k, v) in o {
                    *m.entry(k).or_insert(0) += v;
                }
            }
            _ => unreachable!("pair accumulators of one pass share a layout"),
        }
    }

    /// Upper-triangle triplets; unordered pairs off the diagonal stand for
    /// both (i, j) and (j, i), so each contributes its count once per side.
    fn into_upper(self, norm: f64) -> Vec<(u32, u32, f64)> {
        match self {
            PairCounts::Dense { dim, counts } => {
                let mut out = Vec::new();
                for i in 0..dim {
                    let base = upper_offset(dim, i);
                    for j in i..dim {
                        let c = counts[base + (j - i)];
                        if c > 0 {
                            out.push((i as u32, j as u32, c as f64 / norm));
                        }
                    }
                }
                out
            }
            PairCounts::Sparse(map) => map.into_iter().map(|((i, j), c)| (i, j, c as f64 / norm)).collect(),
        }
    }
}

/// Which co-occurrences the estimators count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// XᵀX and x⊗x⊗x verbatim, self-pairs included; normalizers
    /// Σ nnz², Σ nnz³ and Σ nnz²·nnz(y).
    #[default]
    Full,
    /// Only pairs and triples of distinct words; normalizers
    /// Σ nnz(nnz−1), Σ nnz(nnz−1)(nnz−2) and Σ nnz(nnz−1)·nnz(y).
    Distinct,
}

impl Estimator {
    fn pair_weight(self, nnz: u128) -> u128 {
        match self {
            Estimator::Full => nnz * nnz,
            Estimator::Distinct => nnz * nnz.saturating_sub(1),
        }
    }

    fn triple_weight(self, nnz: u128) -> u128 {
        match self {
            Estimator::Full => nnz * nnz * nnz,
            Estimator::Distinct => nnz * nnz.saturating_sub(1) * nnz.saturating_sub(2),
        }
    }
}

/// Pass 1: M̂2 = XᵀX / Σ nnz(x_i)² (or its distinct-pair form).
pub fn estimate_m2(corpus: &SparseCorpus, est: Estimator, exec: Exec) -> Result<PairwiseMoment> {
    let norm: u128 = corpus.rows().iter().map(|r| est.pair_weight(r.len() as u128)).sum();
    if norm == 0 {
        return Err(Error::DegenerateMoment("no word pairs in the corpus (pair normalizer is 0)".into()));
    }
    let dim = corpus.n_words();
    let counts = exec.reduce(corpus.pass(), || PairCounts::new(dim), |acc, row| acc.add_row(row), |a, b| a.merge(b));
    let mut upper = counts.into_upper(norm as f64);
    if est == Estimator::Distinct {
        upper.retain(|&(i, j, _)| i != j);
    }
    Ok(PairwiseMoment::from_upper(dim, upper))
}

/// Row-major copy of a D×K matrix for cheap per-word row sums.
fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (d, k) = m.shape();
    let mut out = vec![0.0; d * k];
    for c in 0..k {
        for r in 0..d {
            out[r * k + c] = m[(r, c)];
        }
    }
    out
}

/// z = Wᵀx for a binary row x.
#[inline]
fn project(w_rows: &[f64], k: usize, row: &[u32], z: &mut [f64]) {
    z.fill(0.0);
    for &v in row {
        let wr = &w_rows[v as usize * k..(v as usize + 1) * k];
        for (zi, wi) in z.iter_mut().zip(wr) {
            *zi += wi;
        }
    }
}

struct ThirdScratch {
    acc: Vec<f64>,
    z: Vec<f64>,
    // Σ_v w_v w_vᵀ (full K×K) and Σ_v w_v⊗w_v⊗w_v (packed), distinct mode only
    s2: Vec<f64>,
    s3: Vec<f64>,
}

/// Adds the distinct-triple part of z⊗z⊗z for one document:
/// z⊗z⊗z − (S2⊗z in its three positions) + 2·S3, entry by canonical entry.
fn add_distinct_cube(scr: &mut ThirdScratch, w_rows: &[f64], k: usize, row: &[u32]) {
    let ThirdScratch { acc, z, s2, s3 } = scr;
    s2.fill(0.0);
    s3.fill(0.0);
    for &v in row {
        let w = &w_rows[v as usize * k..(v as usize + 1) * k];
        for a in 0..k {
            for b in 0..k {
                s2[a * k + b] += w[a] * w[b];
            }
        }
        packed_add_cube(s3, w, 1.0);
    }
    let mut p = 0;
    for a in 0..k {
        for b in a..k {
            let zab = z[a] * z[b];
            for c in b..k {
                let cross = s2[a * k + b] * z[c] + s2[a * k + c] * z[b] + s2[b * k + c] * z[a];
                acc[p] += zab * z[c] - cross + 2.0 * s3[p];
                p += 1;
            }
        }
    }
}

/// Pass 2: (1/Σ nnz³) Σ_i z_i⊗z_i⊗z_i with z_i = Ŵᵀx_i (or the
/// distinct-triple form).
pub fn whitened_third_moment(
    corpus: &SparseCorpus,
    basis: &WhiteningBasis,
    est: Estimator,
    exec: Exec,
) -> Result<SymTensor3> {
    let (d, k) = basis.w.shape();
    if d != corpus.n_words() {
        return Err(Error::Dimension(format!(
            "whitening matrix has {d} rows but the corpus has {} words",
            corpus.n_words()
        )));
    }
    let norm: u128 = corpus.rows().iter().map(|r| est.triple_weight(r.len() as u128)).sum();
    if norm == 0 {
        return Err(Error::DegenerateMoment("no word triples in the corpus (triple normalizer is 0)".into()));
    }
    let w_rows = row_major(&basis.w);
    let plen = packed_len(k);
    let scratch = exec.reduce(
        corpus.pass(),
        || ThirdScratch { acc: vec![0.0; plen], z: vec![0.0; k], s2: vec![0.0; k * k], s3: vec![0.0; plen] },
        |scr, row| {
            if est.triple_weight(row.len() as u128) == 0 {
                return;
            }
            project(&w_rows, k, row, &mut scr.z);
            match est {
                Estimator::Full => packed_add_cube(&mut scr.acc, &scr.z, 1.0),
                Estimator::Distinct => add_distinct_cube(scr, &w_rows, k, row),
            }
        },
        |a, b| {
            for (x, y) in a.acc.iter_mut().zip(b.acc) {
                *x += y;
            }
        },
    );
    Ok(SymTensor3::from_packed(k, &scratch.acc, 1.0 / norm as f64))
}

/// Pass 3: L×K matrix whose column k is
/// (1/Σ nnz(x)²nnz(y)) Σ_i (u_kᵀŴᵀx_i)² y_i (or the distinct-pair form,
/// which drops the Σ_v (u_kᵀŴᵀe_v)² self-pair part).
pub fn estimate_raw_q(
    corpus: &SparseCorpus,
    labels: &LabelSet,
    basis: &WhiteningBasis,
    eigs: &TensorEigs,
    est: Estimator,
    exec: Exec,
) -> Result<DMatrix<f64>> {
    let n = corpus.n_docs();
    if labels.n_docs() != n {
        return Err(Error::Dimension(format!("corpus has {n} documents but label set has {}", labels.n_docs())));
    }
    let (d, k) = basis.w.shape();
    if d != corpus.n_words() {
        return Err(Error::Dimension(format!(
            "whitening matrix has {d} rows but the corpus has {} words",
            corpus.n_words()
        )));
    }
    if eigs.vectors.shape() != (k, k) {
        return Err(Error::Dimension(format!("tensor eigenvectors are {:?}, expected {k}x{k}", eigs.vectors.shape())));
    }
    let norm: u128 =
        corpus.rows().iter().zip(labels.rows()).map(|(x, y)| est.pair_weight(x.len() as u128) * y.len() as u128).sum();
    if norm == 0 {
        return Err(Error::DegenerateMoment("label moment normalizer Σ nnz(x)²·nnz(y) is 0".into()));
    }
    let n_labels = labels.n_labels();
    // Fold Ŵ and Û together: s_i = (ŴÛ)ᵀ x_i.
    let wu_rows = row_major(&(&basis.w * &eigs.vectors));
    let docs: Vec<(&Vec<u32>, &Vec<u32>)> = corpus.pass().iter().zip(labels.rows()).collect();
    let (acc, _) = exec.reduce(
        &docs,
        || (vec![0.0; n_labels * k], vec![0.0; k]),
        |(acc, s), (x, y)| {
            if x.is_empty() || y.is_empty() {
                return;
            }
            project(&wu_rows, k, x, s);
            for si in s.iter_mut() {
                *si *= *si;
            }
            if est == Estimator::Distinct {
                for &v in x.iter() {
                    let r = &wu_rows[v as usize * k..(v as usize + 1) * k];
                    for (si, ri) in s.iter_mut().zip(r) {
                        *si -= ri * ri;
                    }
                }
            }
            for &l in y.iter() {
                let dst = &mut acc[l as usize * k..(l as usize + 1) * k];
                for (a, si) in dst.iter_mut().zip(s.iter()) {
                    *a += si;
                }
            }
        },
        |(a, _), (b, _)| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        },
    );
    let scale = 1.0 / norm as f64;
    Ok(DMatrix::from_fn(n_labels, k, |l, c| acc[l * k + c] * scale))
}
