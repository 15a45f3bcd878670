//! Probabilistic parameters assembled from the spectral outputs, Bayes-rule
//! label ranking, and the binary model file.
//!
//! Model file (all little-endian):
//!
//! | field   | type            |
//! |---------|-----------------|
//! | magic   | `b"SMOM"`       |
//! | version | u32 (= 1)       |
//! | D, L, K | u64 each        |
//! | pi_raw  | K × f64         |
//! | pi      | K × f64         |
//! | O       | D·K × f64, column-major |
//! | Q       | L·K × f64, column-major |

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::WhiteningBasis;
use crate::tensorpm::TensorEigs;

pub const MAGIC: &[u8; 4] = b"SMOM";
pub const VERSION: u32 = 1;

/// Added to every P[v|h] before taking logs during prediction.
pub const DEFAULT_SMOOTHING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    /// D×K, column k = P[v | h=k]
    pub o: DMatrix<f64>,
    /// L×K, column k = P[l | h=k]
    pub q: DMatrix<f64>,
    /// P[h=k], renormalized
    pub pi: Vec<f64>,
    /// λ_k^{-2} as estimated
    pub pi_raw: Vec<f64>,
}

impl SpectralModel {
    pub fn n_words(&self) -> usize {
        self.o.nrows()
    }

    pub fn n_labels(&self) -> usize {
        self.q.nrows()
    }

    pub fn k(&self) -> usize {
        self.o.ncols()
    }

    /// Checks stochasticity of O and Q and the prior.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.q.ncols() != k || self.pi.len() != k || self.pi_raw.len() != k {
            return Err(Error::Dimension("model parts disagree on K".into()));
        }
        for (name, m) in [("O", &self.o), ("Q", &self.q)] {
            for (c, col) in m.column_iter().enumerate() {
                if col.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return Err(Error::ModelFormat(format!("{name} column {c} has a negative or non-finite entry")));
                }
                let s: f64 = col.iter().sum();
                if (s - 1.0).abs() > 1e-10 {
                    return Err(Error::ModelFormat(format!("{name} column {c} sums to {s}")));
                }
            }
        }
        if self.pi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::ModelFormat("prior has a non-positive entry".into()));
        }
        let s: f64 = self.pi.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::ModelFormat(format!("prior sums to {s}")));
        }
        Ok(())
    }
}

/// Clamps negatives to zero and scales the column to sum to one.
fn clamp_normalize(col: &mut [f64], topic: usize) -> Result<()> {
    for x in col.iter_mut() {
        if !(*x > 0.0) {
            *x = 0.0;
        }
    }
    let s: f64 = col.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::DegenerateTopic(topic));
    }
    col.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

/// μ̂_k = Ŵ†u_k and γ̂_k = column k of the raw label projection, each
/// clamped and normalized; π_raw = λ^{-2}, π = π_raw / Σ π_raw.
pub fn assemble_model(basis: &WhiteningBasis, eigs: &TensorEigs, raw_q: &DMatrix<f64>) -> Result<SpectralModel> {
    let k = basis.k();
    if eigs.vectors.shape() != (k, k) || eigs.values.len() != k {
        return Err(Error::Dimension(format!("expected {k} tensor eigenpairs of length {k}")));
    }
    if raw_q.ncols() != k {
        return Err(Error::Dimension(format!("label projection has {} columns, expected {k}", raw_q.ncols())));
    }
    let mut o = &basis.w_pinv * &eigs.vectors;
    for (c, mut col) in o.column_iter_mut().enumerate() {
        clamp_normalize(col.as_mut_slice(), c)?;
    }
    let mut q = raw_q.clone();
    for (c, mut col) in q.column_iter_mut().enumerate() {
        clamp_normalize(col.as_mut_slice(), c)?;
    }
    let pi_raw: Vec<f64> = eigs.values.iter().map(|l| 1.0 / (l * l)).collect();
    let total: f64 = pi_raw.iter().sum();
    let pi = pi_raw.iter().map(|p| p / total).collect();
    Ok(SpectralModel { o, q, pi, pi_raw })
}

fn distinct_words(model: &SpectralModel, doc: &[u32]) -> Result<Vec<u32>> {
    let mut w = doc.to_vec();
    w.sort_unstable();
    w.dedup();
    if let Some(&last) = w.last() {
        if last as usize >= model.n_words() {
            return Err(Error::Dimension(format!("word {last} >= D = {}", model.n_words())));
        }
    }
    Ok(w)
}

/// P[h=k | d] ∝ π_k Π_{v∈d} (O_vk + smoothing), evaluated in log space.
pub fn posterior_topics(model: &SpectralModel, doc: &[u32], smoothing: f64) -> Result<Vec<f64>> {
    let words = distinct_words(model, doc)?;
    let k = model.k();
    let mut logp: Vec<f64> = model.pi.iter().map(|p| p.ln()).collect();
    for c in 0..k {
        let col = model.o.column(c);
        logp[c] += words.iter().map(|&v| (col[v as usize] + smoothing).ln()).sum::<f64>();
    }
    let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logp.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelScores {
    /// P[l | d] for every label
    pub scores: Vec<f64>,
    /// label ids by descending score, ties by ascending id; truncated to top_m
    pub ranking: Vec<u32>,
}

/// Ranks labels by P[l|d] = Σ_k Q_lk P[h=k|d].
pub fn predict_labels(model: &SpectralModel, doc: &[u32], top_m: Option<usize>, smoothing: f64) -> Result<LabelScores> {
    let post = posterior_topics(model, doc, smoothing)?;
    let l = model.n_labels();
    let mut scores = vec![0.0; l];
    for (c, &wk) in post.iter().enumerate() {
        for (s, q) in scores.iter_mut().zip(model.q.column(c).iter()) {
            *s += q * wk;
        }
    }
    let mut ranking: Vec<u32> = (0..l as u32).collect();
    ranking.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    if let Some(m) = top_m {
        ranking.truncate(m);
    }
    Ok(LabelScores { scores, ranking })
}

pub fn save_model<W: Write>(model: &SpectralModel, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for dim in [model.n_words(), model.n_labels(), model.k()] {
        w.write_all(&(dim as u64).to_le_bytes())?;
    }
    let parts: [&[f64]; 4] = [&model.pi_raw, &model.pi, model.o.as_slice(), model.q.as_slice()];
    for part in parts {
        for x in part {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact_section<R: Read>(r: &mut R, buf: &mut [u8], section: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::ModelFormat(format!("truncated: missing {section}")),
        _ => Error::Io(e),
    })
}

fn read_u64<R: Read>(r: &mut R, section: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_section(r, &mut b, section)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize, section: &str) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    read_exact_section(r, &mut buf, section)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn load_model<R: Read>(mut r: R) -> Result<SpectralModel> {
    let mut magic = [0u8; 4];
    read_exact_section(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::ModelFormat(format!("bad magic {magic:?}")));
    }
    let mut v = [0u8; 4];
    read_exact_section(&mut r, &mut v, "version")?;
    let version = u32::from_le_bytes(v);
    if version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version} (expected {VERSION})")));
    }
    let d = read_u64(&mut r, "D")? as usize;
    let l = read_u64(&mut r, "L")? as usize;
    let k = read_u64(&mut r, "K")? as usize;
    if d.checked_mul(k).is_none() || l.checked_mul(k).is_none() || d.max(l).max(k) > 1 << 40 {
        return Err(Error::ModelFormat(format!("implausible dimensions D={d} L={l} K={k}")));
    }
    let pi_raw = read_f64s(&mut r, k, "pi_raw")?;
    let pi = read_f64s(&mut r, k, "pi")?;
    let o = DMatrix::from_vec(d, k, read_f64s(&mut r, d * k, "O")?);
    let q = DMatrix::from_vec(l, k, read_f64s(&mut r, l * k, "Q")?);
    let model = SpectralModel { o, q, pi, pi_raw };
    model.validate()?;
    Ok(model)
}
