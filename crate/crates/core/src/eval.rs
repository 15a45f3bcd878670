//! Per-document label-ranking AUC, its macro average, and precision@m.

use std::collections::BTreeMap;

use crate::corpus::{LabelSet, SparseCorpus};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{predict_labels, SpectralModel};

/// Probability that a random positive label outscores a random negative
/// one, ties counting ½. `None` when there are no positives or no negatives.
///
/// Computed from average ranks; the numerator is kept as an integer count
/// of half-pairs, so the result equals the pairwise count exactly.
pub fn doc_auc(scores: &[f64], positives: &[u32]) -> Result<Option<f64>> {
    let n = scores.len();
    let mut is_pos = vec![false; n];
    for &p in positives {
        let p = p as usize;
        if p >= n {
            return Err(Error::Dimension(format!("positive label {p} >= L = {n}")));
        }
        is_pos[p] = true;
    }
    let n_pos = is_pos.iter().filter(|&&b| b).count() as u64;
    let n_neg = n as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum of the positives; ranks are 1-based, ties averaged
    let mut rank2_sum: u64 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let pos_in_group = order[i..=j].iter().filter(|&&x| is_pos[x]).count() as u64;
        // average rank of the group times two: (i+1) + (j+1)
        rank2_sum += pos_in_group * (i as u64 + j as u64 + 2);
        i = j + 1;
    }
    let half_pairs = rank2_sum - n_pos * (n_pos + 1);
    Ok(Some(half_pairs as f64 / (2 * n_pos * n_neg) as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub macro_auc: f64,
    /// `None` for skipped documents
    pub per_doc_auc: Vec<Option<f64>>,
    pub precision_at: BTreeMap<usize, f64>,
    pub n_skipped: usize,
}

impl MetricReport {
    /// Aligned key-value lines.
    pub fn to_text(&self) -> String {
        let evaluated = self.per_doc_auc.len() - self.n_skipped;
        let mut rows = vec![
            ("documents".to_string(), self.per_doc_auc.len().to_string()),
            ("evaluated".to_string(), evaluated.to_string()),
            ("skipped".to_string(), self.n_skipped.to_string()),
            ("macro_auc".to_string(), format!("{:.6}", self.macro_auc)),
        ];
        for (m, p) in &self.precision_at {
            rows.push((format!("precision@{m}"), format!("{p:.6}")));
        }
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        s.push_str(&format!("macro_auc,{}\n", self.macro_auc));
        for (m, p) in &self.precision_at {
            s.push_str(&format!("precision@{m},{p}\n"));
        }
        s.push_str(&format!("n_skipped,{}\n", self.n_skipped));
        s
    }
}

/// Mean of the defined per-document AUCs and mean precision of the top-m
/// ranked labels, over the documents of `corpus`.
pub fn macro_auc(
    model: &SpectralModel,
    corpus: &SparseCorpus,
    labels: &LabelSet,
    at: &[usize],
    smoothing: f64,
    exec: Exec,
) -> Result<MetricReport> {
    if corpus.n_docs() != labels.n_docs() {
        return Err(Error::Dimension("label rows != corpus rows".into()));
    }
    if corpus.n_words() > model.n_words() || labels.n_labels() != model.n_labels() {
        return Err(Error::Dimension(format!(
            "data is D={} L={}, model is D={} L={}",
            corpus.n_words(),
            labels.n_labels(),
            model.n_words(),
            model.n_labels()
        )));
    }
    let ids: Vec<usize> = (0..corpus.n_docs()).collect();
    let per_doc = exec.map(&ids, |&i| -> Result<(Option<f64>, Vec<f64>)> {
        let s = predict_labels(model, corpus.row(i), None, smoothing)?;
        let pos = labels.row(i);
        let auc = doc_auc(&s.scores, pos)?;
        let prec = at
            .iter()
            .map(|&m| {
                if m == 0 {
                    return 0.0;
                }
                let hits = s.ranking.iter().take(m).filter(|l| pos.binary_search(l).is_ok()).count();
                hits as f64 / m as f64
            })
            .collect();
        Ok((auc, prec))
    });
    let mut aucs = Vec::with_capacity(per_doc.len());
    let mut prec_sum = vec![0.0; at.len()];
    for r in per_doc {
        let (auc, prec) = r?;
        aucs.push(auc);
        for (a, p) in prec_sum.iter_mut().zip(prec) {
            *a += p;
        }
    }
    let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::InvalidArgument("no document has both positive and negative labels".into()));
    }
    let n_docs = aucs.len() as f64;
    Ok(MetricReport {
        macro_auc: defined.iter().sum::<f64>() / defined.len() as f64,
        n_skipped: aucs.len() - defined.len(),
        per_doc_auc: aucs,
        precision_at: at.iter().zip(prec_sum).map(|(&m, s)| (m, s / n_docs)).collect(),
    })
}

/// Pairwise enumeration, the defining form of the ranking AUC.
pub fn doc_auc_pairwise(scores: &[f64], positives: &[u32]) -> Option<f64> {
    let mut is_pos = vec![false; scores.len()];
    for &p in positives {
        is_pos[p as usize] = true;
    }
    let (mut half_pairs, mut pairs) = (0u64, 0u64);
    for (i, &si) in scores.iter().enumerate() {
        if !is_pos[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if is_pos[j] {
                continue;
            }
            pairs += 1;
            if si > sj {
                half_pairs += 2;
            } else if si == sj {
                half_pairs += 1;
            }
        }
    }
    (pairs > 0).then(|| half_pairs as f64 / (2 * pairs) as f64)
}
