use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use spectral_labels::synth::{bound_inputs_from_corpus, convergence_csv};
use spectral_labels::{
    estimate_m2, generate_corpus, load_model, macro_auc, parse_corpus, predict_labels, sample_params, save_model,
    theorem_bounds, truncated_eig, write_corpus, Error, Estimator, Exec, ExperimentConfig, GroundTruth, LabelSet,
    SparseCorpus, SpectralModel, StageError, TrainConfig,
};

use crate::gfmt::fmt_g;
use crate::{
    BoundsArgs, EstimatorArg, EvalArgs, ExperimentArgs, Parallelism, PredictArgs, SolverArgs, SynthArgs, TrainArgs,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    pub fn code(&self) -> u8 {
        self.code
    }

    fn usage(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, msg: msg.into() }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        CliError { code: EXIT_DATA, msg: format!("{}: {e}", path.display()) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError { code: code_for(&e), msg: e.to_string() }
    }
}

impl From<StageError> for CliError {
    fn from(e: StageError) -> Self {
        CliError { code: code_for(&e.source), msg: format!("training failed in {e}") }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn with_path(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| {
        let code = code_for(&e);
        CliError { code, msg: format!("{}: {e}", path.display()) }
    }
}

fn read_corpus(path: &Path, labels: bool) -> Result<(SparseCorpus, Option<LabelSet>)> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_corpus(BufReader::new(f), labels).map_err(with_path(path))
}

fn read_model(path: &Path) -> Result<SpectralModel> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let m = load_model(BufReader::new(f)).map_err(with_path(path))?;
    Ok(m)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_model(path: &Path, model: &SpectralModel) -> Result<()> {
    let mut w = create(path)?;
    save_model(model, &mut w).map_err(with_path(path))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn exec(par: &Parallelism) -> Result<Exec> {
    if par.threads == 1 {
        return Ok(Exec::Sequential);
    }
    // an already-built global pool is fine: this is a single command per process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(par.threads).build_global();
    Ok(Exec::Parallel)
}

fn train_config(s: &SolverArgs, exec: Exec) -> TrainConfig {
    let mut cfg = TrainConfig::new(s.k as usize);
    cfg.eig_tol = s.eig_tol;
    cfg.eig_max_iter = s.eig_max_iter;
    cfg.restarts = s.restarts.map(|r| r as usize);
    cfg.power_iters = s.power_iters as usize;
    cfg.tpm_tol = s.tpm_tol;
    cfg.seed = s.seed;
    cfg.estimator = match s.estimator {
        EstimatorArg::Full => Estimator::Full,
        EstimatorArg::Distinct => Estimator::Distinct,
    };
    cfg.exec = exec;
    cfg
}

pub fn train(a: TrainArgs) -> Result<()> {
    let exec = exec(&a.par)?;
    let (corpus, labels) = read_corpus(&a.data, true)?;
    let labels = labels.expect("labels requested");
    let cfg = train_config(&a.solver, exec);
    let (n, k) = (corpus.n_docs(), cfg.k);
    if n < k * k {
        eprintln!("warning: N = {n} documents is below K² = {}; estimates are unlikely to be reliable", k * k);
    }
    let out = spectral_labels::train(&corpus, &labels, &cfg)?;
    write_model(&a.model, &out.model)?;

    let r = &out.report;
    let mut err = io::stderr().lock();
    let _ = writeln!(err, "passes over data: {}", r.passes);
    for (stage, t) in &r.timings {
        let _ = writeln!(err, "  {:<32} {:>10.3} ms", stage.name(), t.as_secs_f64() * 1e3);
    }
    let _ = writeln!(err, "sigma_1 = {}  sigma_K = {}", fmt_g(r.sigma_1, 6), fmt_g(r.sigma_k, 6));
    let _ = writeln!(err, "lambda min = {}  max = {}", fmt_g(r.lambda_min, 6), fmt_g(r.lambda_max, 6));
    let _ = writeln!(err, "model written to {}", a.model.display());
    Ok(())
}

fn prediction_line(model: &SpectralModel, i: usize, doc: &[u32], top: Option<usize>, smoothing: f64) -> Result<String> {
    let s = predict_labels(model, doc, top, smoothing).map_err(|e| CliError::from(e).prefix(i))?;
    let mut line = i.to_string();
    for l in s.ranking {
        line.push('\t');
        line.push_str(&format!("{l}:{}", fmt_g(s.scores[l as usize], 6)));
    }
    line.push('\n');
    Ok(line)
}

impl CliError {
    fn prefix(self, doc: usize) -> Self {
        CliError { code: self.code, msg: format!("document {doc}: {}", self.msg) }
    }
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let exec = exec(&a.par)?;
    let model = read_model(&a.model)?;
    let (corpus, _) = read_corpus(&a.data, false)?;
    if corpus.n_words() > model.n_words() {
        return Err(CliError {
            code: EXIT_DATA,
            msg: format!("data has D = {} but the model was trained with D = {}", corpus.n_words(), model.n_words()),
        });
    }
    let line = |(i, doc): (usize, &Vec<u32>)| prediction_line(&model, i, doc, a.top, a.smoothing);
    let lines: Vec<String> = match exec {
        Exec::Sequential => corpus.rows().iter().enumerate().map(line).collect::<Result<_>>()?,
        Exec::Parallel => corpus.rows().par_iter().enumerate().map(line).collect::<Result<_>>()?,
    };
    let mut w = output(a.out.as_deref())?;
    let written = lines.iter().try_for_each(|l| w.write_all(l.as_bytes())).and_then(|_| w.flush());
    match written {
        // downstream closed early, e.g. `| head`
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => r.map_err(|e| CliError { code: EXIT_DATA, msg: format!("writing predictions: {e}") }),
    }
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let exec = exec(&a.par)?;
    let model = read_model(&a.model)?;
    let (corpus, labels) = read_corpus(&a.data, true)?;
    let labels = labels.expect("labels requested");
    let report = macro_auc(&model, &corpus, &labels, &a.at, a.smoothing, exec)?;
    print!("{}", report.to_text());
    if let Some(p) = &a.out {
        let mut w = create(p)?;
        w.write_all(report.to_csv().as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(p, e))?;
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let s = &a.shape;
    let truth = sample_params(s.d, s.l, a.k as usize, s.concentration, a.seed)?;
    let (corpus, labels) =
        generate_corpus(&truth, a.n, s.words_per_doc as usize, s.labels_per_doc, a.seed.wrapping_add(1))?;
    let mut w = create(&a.out)?;
    write_corpus(&mut w, &corpus, Some(&labels)).map_err(with_path(&a.out))?;
    w.flush().map_err(|e| CliError::io(&a.out, e))?;
    write_model(&a.truth, &truth.to_model())?;
    eprintln!(
        "wrote {} documents (D = {}, L = {}, K = {}) to {} and ground truth to {}",
        a.n,
        s.d,
        s.l,
        a.k,
        a.out.display(),
        a.truth.display()
    );
    Ok(())
}

pub fn bounds(a: BoundsArgs) -> Result<()> {
    if !(a.delta > 0.0 && a.delta <= 1.0) {
        return Err(CliError::usage(format!("--delta must lie in (0, 1], got {}", a.delta)));
    }
    let k = a.k as usize;
    let (corpus, labels) = read_corpus(&a.data, true)?;
    let m2 = estimate_m2(&corpus, Estimator::Full, Exec::Sequential)?;
    let eig = truncated_eig(&m2, k, a.eig_tol, 10 * corpus.n_words(), a.seed)?;
    let mut inputs = bound_inputs_from_corpus(&corpus, labels.as_ref(), eig.values[0], eig.values[k - 1], k, a.delta)?;
    inputs.c1 = a.c1;
    inputs.c2 = a.c2;
    if let Some(p) = &a.model {
        let m = read_model(p)?;
        inputs.pi_max = m.pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        inputs.pi_min = m.pi.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    let b = theorem_bounds(&inputs)?;
    let sc = inputs.scales;
    let rows = [
        ("N", corpus.n_docs().to_string()),
        ("K", k.to_string()),
        ("delta", fmt_g(a.delta, 6)),
        ("sigma_1", fmt_g(inputs.sigma1, 6)),
        ("sigma_K", fmt_g(inputs.sigma_k, 6)),
        ("d1s", fmt_g(sc.d1s, 6)),
        ("d2s", fmt_g(sc.d2s, 6)),
        ("d3s", fmt_g(sc.d3s, 6)),
        ("dls", fmt_g(sc.dls, 6)),
        ("eps1", fmt_g(b.eps1, 6)),
        ("eps2", fmt_g(b.eps2, 6)),
        ("mu_bound", fmt_g(b.mu, 6)),
        ("gamma_bound", fmt_g(b.gamma, 6)),
        ("pi_bound", fmt_g(b.pi, 6)),
        ("n1", format!("{}  (c1 = {}, c2 = {})", fmt_g(b.n1, 6), fmt_g(a.c1, 6), fmt_g(a.c2, 6))),
        ("n2", format!("{}  (up to constants)", fmt_g(b.n2, 6))),
        ("n3", format!("{}  (up to constants)", fmt_g(b.n3, 6))),
    ];
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (name, v) in rows {
        println!("{name:<width$}  {v}");
    }
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let exec = exec(&a.par)?;
    let k = a.solver.k as usize;
    let truth = match &a.truth {
        Some(p) => GroundTruth::from_model(&read_model(p)?),
        None => sample_params(a.shape.d, a.shape.l, k, a.shape.concentration, a.solver.seed)?,
    };
    if truth.k() != k {
        return Err(CliError::usage(format!("--k {k} does not match the {} topics of the truth file", truth.k())));
    }
    let cfg = ExperimentConfig {
        words_per_doc: a.shape.words_per_doc as usize,
        labels_per_doc: a.shape.labels_per_doc,
        train: train_config(&a.solver, exec),
    };
    let rows = spectral_labels::convergence_experiment(&truth, &a.grid, a.trials, a.solver.seed, &cfg)?;
    for r in &rows {
        for f in &r.failures {
            eprintln!("N = {}: {f}", r.n);
        }
    }
    let mut w = output(a.out.as_deref())?;
    w.write_all(convergence_csv(&rows).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError { code: EXIT_DATA, msg: format!("writing results: {e}") })
}
