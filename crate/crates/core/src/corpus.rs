//! Sparse binary document-word and document-label matrices.
//!
//! Interchange format (0-based indices):
//!
//! ```text
//! N D L
//! l1,l2 f1:v1 f2:v2 ...
//! ```
//!
//! Feature values only signal presence; any positive value becomes a 1.
//! Lines starting with `#` after the header are comments.

use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Binary N×D document-word matrix, one sorted row of distinct word ids per document.
#[derive(Debug)]
pub struct SparseCorpus {
    n_words: usize,
    rows: Vec<Vec<u32>>,
    passes: AtomicUsize,
}

impl Clone for SparseCorpus {
    fn clone(&self) -> Self {
        SparseCorpus { n_words: self.n_words, rows: self.rows.clone(), passes: AtomicUsize::new(0) }
    }
}

impl PartialEq for SparseCorpus {
    fn eq(&self, other: &Self) -> bool {
        self.n_words == other.n_words && self.rows == other.rows
    }
}

impl SparseCorpus {
    /// Builds a corpus from arbitrary rows; each row is sorted and deduplicated.
    pub fn new(n_words: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let rows = canonical_rows(rows, n_words, "word")?;
        Ok(SparseCorpus { n_words, rows, passes: AtomicUsize::new(0) })
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// Starts a full data pass and returns the rows. Every call is counted.
    pub fn pass(&self) -> &[Vec<u32>] {
        self.passes.fetch_add(1, Ordering::Relaxed);
        &self.rows
    }

    /// Number of full data passes made through [`SparseCorpus::pass`].
    pub fn passes(&self) -> usize {
        self.passes.load(Ordering::Relaxed)
    }

    /// Σ nnz(x_i)^p, exact.
    pub fn nnz_power_sum(&self, p: u32) -> u128 {
        self.rows.iter().map(|r| (r.len() as u128).pow(p)).sum()
    }

    /// Returns a copy with documents reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> SparseCorpus {
        SparseCorpus {
            n_words: self.n_words,
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
            passes: AtomicUsize::new(0),
        }
    }

    /// Splits into the first `n` documents and the rest.
    pub fn split_at(&self, n: usize) -> (SparseCorpus, SparseCorpus) {
        let n = n.min(self.rows.len());
        let mk = |rows: &[Vec<u32>]| SparseCorpus {
            n_words: self.n_words,
            rows: rows.to_vec(),
            passes: AtomicUsize::new(0),
        };
        (mk(&self.rows[..n]), mk(&self.rows[n..]))
    }
}

/// Binary N×L document-label matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    n_labels: usize,
    rows: Vec<Vec<u32>>,
}

impl LabelSet {
    pub fn new(n_labels: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let rows = canonical_rows(rows, n_labels, "label")?;
        Ok(LabelSet { n_labels, rows })
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn permuted(&self, order: &[usize]) -> LabelSet {
        LabelSet { n_labels: self.n_labels, rows: order.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    pub fn split_at(&self, n: usize) -> (LabelSet, LabelSet) {
        let n = n.min(self.rows.len());
        (
            LabelSet { n_labels: self.n_labels, rows: self.rows[..n].to_vec() },
            LabelSet { n_labels: self.n_labels, rows: self.rows[n..].to_vec() },
        )
    }
}

fn canonical_rows(mut rows: Vec<Vec<u32>>, dim: usize, what: &str) -> Result<Vec<Vec<u32>>> {
    for (i, row) in rows.iter_mut().enumerate() {
        row.sort_unstable();
        row.dedup();
        if let Some(&last) = row.last() {
            if last as usize >= dim {
                return Err(Error::InvalidArgument(format!(
                    "document {i}: {what} index {last} out of range (dimension {dim})"
                )));
            }
        }
    }
    Ok(rows)
}

/// Means of powers of the per-document non-zero counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentScales {
    /// mean nnz(x)
    pub d1s: f64,
    /// mean nnz(x)^2
    pub d2s: f64,
    /// mean nnz(x)^3
    pub d3s: f64,
    /// mean nnz(x)^2 nnz(y); zero without labels
    pub dls: f64,
}

pub fn corpus_stats(corpus: &SparseCorpus, labels: Option<&LabelSet>) -> Result<MomentScales> {
    let n = corpus.n_docs();
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    if let Some(l) = labels {
        if l.n_docs() != n {
            return Err(Error::Dimension(format!("corpus has {n} documents but label set has {}", l.n_docs())));
        }
    }
    let (mut s1, mut s2, mut s3, mut sl) = (0u128, 0u128, 0u128, 0u128);
    for (i, row) in corpus.rows().iter().enumerate() {
        let c = row.len() as u128;
        s1 += c;
        s2 += c * c;
        s3 += c * c * c;
        if let Some(l) = labels {
            sl += c * c * l.row(i).len() as u128;
        }
    }
    let nf = n as f64;
    Ok(MomentScales { d1s: s1 as f64 / nf, d2s: s2 as f64 / nf, d3s: s3 as f64 / nf, dls: sl as f64 / nf })
}

/// Reads the interchange format. With `expect_labels` the label column is
/// parsed and returned; otherwise it is skipped.
pub fn parse_corpus<R: BufRead>(reader: R, expect_labels: bool) -> Result<(SparseCorpus, Option<LabelSet>)> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::parse(1, "missing header \"N D L\"")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::parse(1, format!("malformed header {header:?}, expected \"N D L\"")));
    }
    let mut dims = [0usize; 3];
    for (slot, f) in dims.iter_mut().zip(&fields) {
        *slot = f.parse().map_err(|_| Error::parse(1, format!("malformed header field {f:?}")))?;
    }
    let [n, d, l] = dims;

    let mut words = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(if expect_labels { n } else { 0 });
    let mut last_line = 1;
    for (idx, line) in lines {
        let lineno = idx + 1;
        last_line = lineno;
        let line = line?;
        if line.starts_with('#') {
            continue;
        }
        if words.len() == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(lineno, format!("more data lines than the {n} declared in the header")));
        }
        let (lab, feats) = parse_line(&line, lineno, d, l, expect_labels)?;
        words.push(feats);
        if expect_labels {
            labels.push(lab);
        }
    }
    if words.len() != n {
        return Err(Error::parse(last_line + 1, format!("header declares {n} documents but found {}", words.len())));
    }
    let corpus = SparseCorpus::new(d, words)?;
    let labels = if expect_labels { Some(LabelSet::new(l, labels)?) } else { None };
    Ok((corpus, labels))
}

fn parse_line(line: &str, lineno: usize, d: usize, l: usize, want_labels: bool) -> Result<(Vec<u32>, Vec<u32>)> {
    let mut tokens = line.split_whitespace().peekable();
    let mut labels = Vec::new();
    // A leading blank or a first token holding ':' means the label list is empty.
    let has_label_field = !line.starts_with(char::is_whitespace) && tokens.peek().is_some_and(|t| !t.contains(':'));
    if has_label_field {
        let field = tokens.next().unwrap_or_default();
        if want_labels {
            for tok in field.split(',').filter(|s| !s.is_empty()) {
                let idx: usize = tok.parse().map_err(|_| Error::parse(lineno, format!("non-numeric label {tok:?}")))?;
                if idx >= l {
                    return Err(Error::parse(lineno, format!("label index {idx} >= L = {l}")));
                }
                labels.push(idx as u32);
            }
        }
    }
    let mut feats = Vec::new();
    for tok in tokens {
        let (fi, fv) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(lineno, format!("feature token {tok:?} is not index:value")))?;
        let idx: usize = fi.parse().map_err(|_| Error::parse(lineno, format!("non-numeric feature index {fi:?}")))?;
        let val: f64 = fv.parse().map_err(|_| Error::parse(lineno, format!("non-numeric feature value {fv:?}")))?;
        if idx >= d {
            return Err(Error::parse(lineno, format!("feature index {idx} >= D = {d}")));
        }
        if !val.is_finite() {
            return Err(Error::parse(lineno, format!("non-finite feature value {fv:?}")));
        }
        if val > 0.0 {
            feats.push(idx as u32);
        }
    }
    labels.sort_unstable();
    labels.dedup();
    feats.sort_unstable();
    feats.dedup();
    Ok((labels, feats))
}

/// Writes the canonical interchange form: sorted, deduplicated, values 1.
pub fn write_corpus<W: Write>(mut w: W, corpus: &SparseCorpus, labels: Option<&LabelSet>) -> Result<()> {
    if let Some(l) = labels {
        if l.n_docs() != corpus.n_docs() {
            return Err(Error::Dimension("label rows != corpus rows".into()));
        }
    }
    let n_labels = labels.map_or(0, |l| l.n_labels());
    writeln!(w, "{} {} {}", corpus.n_docs(), corpus.n_words(), n_labels)?;
    let mut line = String::new();
    for i in 0..corpus.n_docs() {
        line.clear();
        if let Some(l) = labels {
            for (j, lab) in l.row(i).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&lab.to_string());
            }
        }
        for f in corpus.row(i) {
            line.push(' ');
            line.push_str(&f.to_string());
            line.push_str(":1");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
