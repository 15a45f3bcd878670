//! Synthetic ground truth, corpus sampling from the generative model,
//! recovery-error measurement and the finite-sample bound calculator.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;

use crate::assign::min_cost_assignment;
use crate::corpus::{corpus_stats, LabelSet, MomentScales, SparseCorpus};
use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::pipeline::{train, TrainConfig};

/// Column pairs of O correlated above this are resampled.
pub const MAX_COLUMN_CORRELATION: f64 = 0.95;
const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub pi: Vec<f64>,
    pub o: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.pi.len()
    }

    /// As a model, for prediction with the true parameters or for saving.
    pub fn to_model(&self) -> SpectralModel {
        SpectralModel { o: self.o.clone(), q: self.q.clone(), pi: self.pi.clone(), pi_raw: self.pi.clone() }
    }

    pub fn from_model(m: &SpectralModel) -> Self {
        GroundTruth { pi: m.pi.clone(), o: m.o.clone(), q: m.q.clone() }
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, gamma: &Gamma<f64>, n: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 && s.is_finite() {
            v.iter_mut().for_each(|x| *x /= s);
            return v;
        }
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        // a constant column is indistinguishable from another constant one
        return if saa == sbb { 1.0 } else { 0.0 };
    }
    sab / (saa * sbb).sqrt()
}

/// Draws π, the columns of O and the columns of Q from a symmetric
/// Dirichlet(`concentration`).
pub fn sample_params(d: usize, l: usize, k: usize, concentration: f64, seed: u64) -> Result<GroundTruth> {
    if k == 0 || k > d.min(l) {
        return Err(Error::InvalidArgument(format!("need 1 <= K <= min(D, L), got K={k}, D={d}, L={l}")));
    }
    if !(concentration > 0.0) || !concentration.is_finite() {
        return Err(Error::InvalidArgument(format!("concentration must be positive, got {concentration}")));
    }
    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let pi = loop {
        let p = dirichlet(&mut rng, &gamma, k);
        if p.iter().all(|&x| x > 0.0) {
            break p;
        }
    };

    let mut attempts = 0;
    let o = loop {
        let cols: Vec<Vec<f64>> = (0..k).map(|_| dirichlet(&mut rng, &gamma, d)).collect();
        let separated = (0..k).all(|a| (a + 1..k).all(|b| pearson(&cols[a], &cols[b]) <= MAX_COLUMN_CORRELATION));
        if separated {
            break DMatrix::from_fn(d, k, |r, c| cols[c][r]);
        }
        attempts += 1;
        if attempts >= MAX_RESAMPLES {
            return Err(Error::InvalidArgument(format!(
                "could not draw {k} distinguishable topics over {d} words in {MAX_RESAMPLES} attempts"
            )));
        }
    };
    let qcols: Vec<Vec<f64>> = (0..k).map(|_| dirichlet(&mut rng, &gamma, l)).collect();
    let q = DMatrix::from_fn(l, k, |r, c| qcols[c][r]);
    Ok(GroundTruth { pi, o, q })
}

/// Samples documents: one topic per document, `words_per_doc` words and
/// `labels_per_doc` labels drawn i.i.d. from that topic, then deduplicated.
pub fn generate_corpus(
    truth: &GroundTruth,
    n_docs: usize,
    words_per_doc: usize,
    labels_per_doc: usize,
    seed: u64,
) -> Result<(SparseCorpus, LabelSet)> {
    if words_per_doc == 0 {
        return Err(Error::InvalidArgument("words_per_doc must be at least 1".into()));
    }
    let bad = |e: rand::distr::weighted::Error| Error::InvalidArgument(format!("invalid distribution: {e}"));
    let topic = WeightedIndex::new(&truth.pi).map_err(bad)?;
    let word_dists = truth
        .o
        .column_iter()
        .map(|c| WeightedIndex::new(c.iter().copied()).map_err(bad))
        .collect::<Result<Vec<_>>>()?;
    let label_dists = truth
        .q
        .column_iter()
        .map(|c| WeightedIndex::new(c.iter().copied()).map_err(bad))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = Vec::with_capacity(n_docs);
    let mut labels = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let h = topic.sample(&mut rng);
        let w: Vec<u32> = (0..words_per_doc).map(|_| word_dists[h].sample(&mut rng) as u32).collect();
        let l: Vec<u32> = (0..labels_per_doc).map(|_| label_dists[h].sample(&mut rng) as u32).collect();
        words.push(w);
        labels.push(l);
    }
    Ok((SparseCorpus::new(truth.o.nrows(), words)?, LabelSet::new(truth.q.nrows(), labels)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryError {
    /// ‖μ_k − μ̂_Π(k)‖₂ per true topic k
    pub mu_errs: Vec<f64>,
    pub gamma_errs: Vec<f64>,
    /// |π_k − π̂_Π(k)| using the renormalized prior
    pub pi_errs: Vec<f64>,
    /// |π_k − λ_Π(k)^{-2}|
    pub pi_raw_errs: Vec<f64>,
    /// true topic k ↔ model topic permutation[k]
    pub permutation: Vec<usize>,
}

fn col_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    (a.column(i) - b.column(j)).norm()
}

/// Matches model topics to true topics by minimum total word-distribution
/// distance and reports per-topic errors under that one permutation.
pub fn align_and_error(truth: &GroundTruth, model: &SpectralModel) -> Result<RecoveryError> {
    let k = truth.k();
    if model.o.shape() != truth.o.shape() || model.q.shape() != truth.q.shape() || model.k() != k {
        return Err(Error::Dimension(format!(
            "truth is D={} L={} K={k}, model is D={} L={} K={}",
            truth.o.nrows(),
            truth.q.nrows(),
            model.n_words(),
            model.n_labels(),
            model.k()
        )));
    }
    let cost: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| col_dist(&truth.o, i, &model.o, j)).collect()).collect();
    let perm = min_cost_assignment(&cost);
    Ok(RecoveryError {
        mu_errs: (0..k).map(|i| cost[i][perm[i]]).collect(),
        gamma_errs: (0..k).map(|i| col_dist(&truth.q, i, &model.q, perm[i])).collect(),
        pi_errs: (0..k).map(|i| (truth.pi[i] - model.pi[perm[i]]).abs()).collect(),
        pi_raw_errs: (0..k).map(|i| (truth.pi[i] - model.pi_raw[perm[i]]).abs()).collect(),
        permutation: perm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub sigma1: f64,
    pub sigma_k: f64,
    pub scales: MomentScales,
    pub n: f64,
    pub delta: f64,
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    pub pi_max: f64,
    pub pi_min: f64,
}

/// Error bounds and sample-size thresholds. `n2` and `n3` are order
/// expressions evaluated with unit constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub eps1: f64,
    pub eps2: f64,
    pub mu: f64,
    pub gamma: f64,
    pub pi: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
}

impl BoundInputs {
    fn check(&self) -> Result<()> {
        if !(self.sigma_k > 0.0 && self.sigma_k <= self.sigma1) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < sigma_K <= sigma_1, got sigma_K={} sigma_1={}",
                self.sigma_k, self.sigma1
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        if !(self.n > 0.0) {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        Ok(())
    }
}

pub fn theorem_bounds(b: &BoundInputs) -> Result<Bounds> {
    b.check()?;
    let eps1 = 1.0 + ((1.0 / b.delta).ln() / 2.0).sqrt();
    let eps2 = 1.0 + ((2.0 / b.delta).ln() / 2.0).sqrt();
    let (s1, sk) = (b.sigma1, b.sigma_k);
    let MomentScales { d2s, d3s, dls, .. } = b.scales;
    let root_n = b.n.sqrt();
    let sqrt2 = std::f64::consts::SQRT_2;

    let mu = (160.0 * s1.sqrt() / (d2s * sk.powf(2.5))
        + 32.0 * (2.0 * s1).sqrt() / (d3s * sk.powf(1.5))
        + 4.0 * s1.sqrt() / (d2s * sk))
        * eps1
        / root_n;
    let gamma =
        (160.0 / (d2s * sk.powf(3.5)) + 32.0 * sqrt2 / (d3s * sk.powf(2.5)) + (2.0 + 2.0 * sqrt2) / (d2s * sk * sk))
            * 2.0
            * eps1
            / root_n
            + 8.0 * eps2 / (dls * sk * root_n);
    let pi = (200.0 / sk.powf(2.5) + 40.0 * sqrt2 / sk.powf(1.5)) * eps1 / (d3s * root_n);

    let k = b.k as f64;
    let inner = (k / b.c1 * (b.pi_max / b.pi_min).sqrt()).ln();
    // log log of an argument <= e is not a constraint
    let n1 = if inner > 0.0 { (b.c2 * (k.ln() + inner.ln())).max(0.0) } else { (b.c2 * k.ln()).max(0.0) };
    let n2 = (eps1 / (d2s * sk)).powi(2);
    let n3 = k * k * (10.0 / (d2s * sk.powf(2.5)) + 2.0 * sqrt2 / (d3s * sk.powf(1.5))).powi(2) * eps1 * eps1;
    Ok(Bounds { eps1, eps2, mu, gamma, pi, n1, n2, n3 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub words_per_doc: usize,
    pub labels_per_doc: usize,
    pub train: TrainConfig,
}

/// One row of the convergence table; medians pool the per-topic errors of
/// every successful trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mu_err: f64,
    pub gamma_err: f64,
    pub pi_err: f64,
    pub pi_raw_err: f64,
    pub failures: Vec<String>,
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Runs generate → train → align for every grid size and trial.
/// Trial t uses corpus seed `seed + t`.
pub fn convergence_experiment(
    truth: &GroundTruth,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<Vec<ConvergenceRow>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_grid must be strictly ascending".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let trial_ids: Vec<usize> = (0..trials).collect();
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let outcomes = cfg.train.exec.map(&trial_ids, |&t| -> std::result::Result<RecoveryError, String> {
            let s = seed.wrapping_add(t as u64);
            let (corpus, labels) =
                generate_corpus(truth, n, cfg.words_per_doc, cfg.labels_per_doc, s).map_err(|e| e.to_string())?;
            let mut tc = cfg.train.clone();
            tc.seed = s;
            let out = train(&corpus, &labels, &tc).map_err(|e| e.to_string())?;
            align_and_error(truth, &out.model).map_err(|e| e.to_string())
        });
        let (mut mu, mut gamma, mut pi, mut pi_raw, mut failures) = (vec![], vec![], vec![], vec![], vec![]);
        for (t, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(e) => {
                    mu.extend(e.mu_errs);
                    gamma.extend(e.gamma_errs);
                    pi.extend(e.pi_errs);
                    pi_raw.extend(e.pi_raw_errs);
                }
                Err(msg) => failures.push(format!("trial {t}: {msg}")),
            }
        }
        rows.push(ConvergenceRow {
            n,
            mu_err: median(&mu),
            gamma_err: median(&gamma),
            pi_err: median(&pi),
            pi_raw_err: median(&pi_raw),
            failures,
        });
    }
    Ok(rows)
}

/// CSV with header `N,mu_err,gamma_err,pi_err`.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("N,mu_err,gamma_err,pi_err\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.n, r.mu_err, r.gamma_err, r.pi_err));
    }
    s
}

/// Bound inputs measured on a corpus: σ from its M̂2, scales from its nnz counts.
pub fn bound_inputs_from_corpus(
    corpus: &SparseCorpus,
    labels: Option<&LabelSet>,
    sigma1: f64,
    sigma_k: f64,
    k: usize,
    delta: f64,
) -> Result<BoundInputs> {
    Ok(BoundInputs {
        sigma1,
        sigma_k,
        scales: corpus_stats(corpus, labels)?,
        n: corpus.n_docs() as f64,
        delta,
        k,
        c1: 1.0,
        c2: 1.0,
        pi_max: 1.0,
        pi_min: 1.0,
    })
}
