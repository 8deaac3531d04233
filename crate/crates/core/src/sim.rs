//! Monte Carlo driver: trial execution, degeneracy-aware classification,
//! aggregation, and result files.
//!
//! Trial `t` draws its randomness from the stream `(seed, t)`, so results do
//! not depend on how trials are spread over worker threads. Trials run in
//! fixed-size batches; the early-stop rule is applied by scanning each batch
//! in trial order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, DepolarizingParams, PauliKind, RngStream};
use crate::code::{self, CodeError, CssCode};
use crate::gf2::{BitVec, RowSpaceBasis};
use crate::mp::{DecodeError, DecoderConfig, LlrVector, MpDecoder};
use crate::osd::{Osd0Decoder, OsdError};
use crate::si::{self, SiConfig, SiDecoder, SiError, SiResult};

/// Trials per batch. Fixed so early stopping is independent of thread count.
const BATCH: u64 = 256;

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

pub const DEFAULT_STOP_AFTER_ERRORS: u64 = 100;

pub const LER_CONVENTION: &str = "logical error rate counts converged-logical-error, post-logical-error and \
failure outcomes; a decoder that returns no syndrome-valid estimate (including non-converged message passing \
without post-processing) is a failure";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Si(#[from] SiError),
    #[error(transparent)]
    Osd(#[from] OsdError),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl SimError {
    /// True for failures reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            SimError::Io { .. } | SimError::Csv { .. } | SimError::Code(CodeError::Io { .. })
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PostProcessing {
    None,
    Si(SiConfig),
    Osd0,
}

impl PostProcessing {
    pub fn tag(&self) -> &'static str {
        match self {
            PostProcessing::None => "none",
            PostProcessing::Si(_) => "si",
            PostProcessing::Osd0 => "osd0",
        }
    }
}

fn default_stop_after() -> Option<u64> {
    Some(DEFAULT_STOP_AFTER_ERRORS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Manifest reference, `path` or `path#name`.
    pub code: String,
    /// Depolarizing probabilities `p`, split evenly over X, Y and Z.
    pub p: Vec<f64>,
    pub decoder: DecoderConfig,
    pub post: PostProcessing,
    pub trials: u64,
    pub seed: u64,
    /// Stop a p-point once this many logical errors are seen.
    #[serde(default = "default_stop_after")]
    pub stop_after_errors: Option<u64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.p.is_empty() {
            return Err(SimError::InvalidSpec("p grid is empty".into()));
        }
        for &p in &self.p {
            DepolarizingParams::uniform(p)?;
        }
        if self.stop_after_errors == Some(0) {
            return Err(SimError::InvalidSpec("stop_after_errors must be positive".into()));
        }
        self.decoder.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    ConvergedSuccess,
    ConvergedLogicalError,
    PostSuccess,
    PostLogicalError,
    Failure,
}

impl TrialOutcome {
    pub fn is_logical_error(self) -> bool {
        !matches!(self, TrialOutcome::ConvergedSuccess | TrialOutcome::PostSuccess)
    }

    pub fn mp_converged(self) -> bool {
        matches!(self, TrialOutcome::ConvergedSuccess | TrialOutcome::ConvergedLogicalError)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub error_weight: usize,
    pub outcome: TrialOutcome,
    /// Set when SI post-processing ran.
    pub inactivations_used: Option<usize>,
    /// Iterations of the initial message-passing decode.
    pub iterations: usize,
}

/// `ê` is a valid correction of `e` iff `e + ê` lies in the row space of `hx`.
pub fn is_success(code: &CssCode, e: &BitVec, e_hat: &BitVec) -> bool {
    let mut residual = e.clone();
    residual ^= e_hat;
    crate::gf2::in_row_space(code.hx(), &residual).expect("lengths equal n")
}

enum PostDecoder {
    None,
    Si(SiDecoder),
    Osd0(Osd0Decoder),
}

/// Decoders and precomputed code data shared by all trials of an experiment.
pub struct Decoders<'a> {
    code: &'a CssCode,
    mp: MpDecoder,
    post: PostDecoder,
    stabilizers: RowSpaceBasis,
    config: DecoderConfig,
}

impl<'a> Decoders<'a> {
    pub fn new(code: &'a CssCode, decoder: &DecoderConfig, post: &PostProcessing) -> Result<Self, SimError> {
        let post = match post {
            PostProcessing::None => PostDecoder::None,
            PostProcessing::Si(si) => PostDecoder::Si(SiDecoder::new(code, decoder.clone(), *si)?),
            PostProcessing::Osd0 => PostDecoder::Osd0(Osd0Decoder::new(code.hz())),
        };
        Ok(Decoders {
            code,
            mp: MpDecoder::new(code.hz(), decoder.clone())?,
            post,
            stabilizers: RowSpaceBasis::new(code.hx()),
            config: decoder.clone(),
        })
    }

    fn succeeded(&self, e: &BitVec, e_hat: &BitVec) -> bool {
        let mut residual = e.clone();
        residual ^= e_hat;
        self.stabilizers.contains(&residual).expect("lengths equal n")
    }

    /// Decodes one syndrome and classifies the estimate against `e`.
    pub fn classify(&self, e: &BitVec, priors: &[f64]) -> Result<(TrialOutcome, Option<usize>, usize), SimError> {
        let s = self.code.hz().mat_vec(e).expect("error has n bits");
        let converged = |hat: &BitVec| {
            if self.succeeded(e, hat) {
                TrialOutcome::ConvergedSuccess
            } else {
                TrialOutcome::ConvergedLogicalError
            }
        };
        let post = |hat: &BitVec| {
            if self.succeeded(e, hat) {
                TrialOutcome::PostSuccess
            } else {
                TrialOutcome::PostLogicalError
            }
        };
        Ok(match &self.post {
            PostDecoder::Si(si) => {
                let out = si.decode(&s, priors)?;
                let iterations = out.initial.iterations;
                if out.initial.converged {
                    (converged(&out.initial.hard), None, iterations)
                } else {
                    let outcome = match &out.result {
                        SiResult::Success(hat) => post(hat),
                        SiResult::Failure => TrialOutcome::Failure,
                    };
                    (outcome, Some(out.inactivations_used), iterations)
                }
            }
            PostDecoder::None | PostDecoder::Osd0(_) => {
                let out = self.mp.decode(&s, priors)?;
                if out.converged {
                    (converged(&out.hard), None, out.iterations)
                } else if let PostDecoder::Osd0(osd) = &self.post {
                    let hat = osd.decode(&s, &out.hard, &out.soft)?;
                    (post(&hat), None, out.iterations)
                } else {
                    (TrialOutcome::Failure, None, out.iterations)
                }
            }
        })
    }

    pub fn priors(&self, eps: f64) -> Result<LlrVector, SimError> {
        Ok(channel::a_priori_llrs(self.code.n(), eps, self.config.algorithm)?)
    }
}

/// Runs trial `trial` at X flip probability `eps`.
pub fn run_trial(
    decoders: &Decoders<'_>,
    eps: f64,
    priors: &[f64],
    seed: u64,
    trial: u64,
) -> Result<TrialRecord, SimError> {
    let mut rng = RngStream::new(seed, trial).rng();
    let e = channel::sample_x_error(decoders.code.n(), eps, &mut rng);
    let (outcome, inactivations_used, iterations) = decoders.classify(&e, priors)?;
    Ok(TrialRecord {
        trial,
        error_weight: e.weight(),
        outcome,
        inactivations_used,
        iterations,
    })
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub p: f64,
    pub eps_x: f64,
    pub trials: u64,
    pub logical_errors: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Mean inactivations over trials where SI ran.
    pub lambda_ave: Option<f64>,
    pub post_invocations: u64,
    pub mp_converged: u64,
    pub mp_converged_frac: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Default)]
struct Tally {
    trials: u64,
    logical_errors: u64,
    failures: u64,
    post_invocations: u64,
    inactivations: u64,
    mp_converged: u64,
}

impl Tally {
    fn add(&mut self, rec: &TrialRecord) {
        self.trials += 1;
        if rec.outcome.is_logical_error() {
            self.logical_errors += 1;
        }
        if rec.outcome == TrialOutcome::Failure {
            self.failures += 1;
        }
        if rec.outcome.mp_converged() {
            self.mp_converged += 1;
        }
        if let Some(l) = rec.inactivations_used {
            self.post_invocations += 1;
            self.inactivations += l as u64;
        }
    }

    fn finish(self, p: f64, eps_x: f64, post: &PostProcessing, stopped_early: bool) -> PointStats {
        let (ci_lo, ci_hi) = wilson_interval(self.logical_errors, self.trials);
        let lambda_ave = match post {
            PostProcessing::Si(_) if self.post_invocations > 0 => {
                Some(self.inactivations as f64 / self.post_invocations as f64)
            }
            _ => None,
        };
        let post_invocations = match post {
            PostProcessing::None => 0,
            _ => self.trials - self.mp_converged,
        };
        PointStats {
            p,
            eps_x,
            trials: self.trials,
            logical_errors: self.logical_errors,
            failures: self.failures,
            ler: self.logical_errors as f64 / self.trials as f64,
            ci_lo,
            ci_hi,
            lambda_ave,
            post_invocations,
            mp_converged: self.mp_converged,
            mp_converged_frac: self.mp_converged as f64 / self.trials as f64,
            stopped_early,
        }
    }
}

/// Runs every trial of one p-point, honouring the early-stop rule.
pub fn run_point(
    decoders: &Decoders<'_>,
    p: f64,
    post: &PostProcessing,
    trials: u64,
    seed: u64,
    stop_after_errors: Option<u64>,
) -> Result<PointStats, SimError> {
    let params = DepolarizingParams::uniform(p)?;
    let eps = channel::marginal_flip_prob(&params, PauliKind::X);
    let priors = if eps > 0.0 {
        decoders.priors(eps)?
    } else {
        // No noise: sum-product priors are infinite, any positive value works.
        LlrVector(vec![decoders.config.clamp; decoders.code.n()])
    };
    let mut tally = Tally::default();
    let mut stopped_early = false;
    let mut start = 0;
    'batches: while start < trials {
        let end = (start + BATCH).min(trials);
        let records = (start..end)
            .into_par_iter()
            .map(|t| run_trial(decoders, eps, &priors, seed, t))
            .collect::<Result<Vec<_>, _>>()?;
        for rec in &records {
            tally.add(rec);
            if stop_after_errors.is_some_and(|cap| tally.logical_errors >= cap) {
                stopped_early = tally.trials < trials;
                break 'batches;
            }
        }
        start = end;
    }
    Ok(tally.finish(p, eps, post, stopped_early))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub decoder: DecoderConfig,
    pub post: PostProcessing,
    pub lambda_max: Option<usize>,
    pub seed: u64,
    pub trials_requested: u64,
    pub stop_after_errors: Option<u64>,
    pub ler_convention: String,
    pub points: Vec<PointStats>,
}

/// One CSV line of experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub eps_x: f64,
    pub alg: String,
    pub sched: String,
    pub post: String,
    pub trials: u64,
    pub logical_errors: u64,
    pub ler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub lambda_ave: Option<f64>,
    pub mp_converged_frac: f64,
}

impl ExperimentResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.points
            .iter()
            .map(|pt| CsvRow {
                code: self.code.clone(),
                n: self.n,
                k: self.k,
                p: pt.p,
                eps_x: pt.eps_x,
                alg: self.decoder.algorithm.tag().to_string(),
                sched: self.decoder.schedule.tag().to_string(),
                post: self.post.tag().to_string(),
                trials: pt.trials,
                logical_errors: pt.logical_errors,
                ler: pt.ler,
                ci_lo: pt.ci_lo,
                ci_hi: pt.ci_hi,
                lambda_ave: pt.lambda_ave,
                mp_converged_frac: pt.mp_converged_frac,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.csv_rows())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes") + "\n"
    }

    /// File stem derived from code and decoder settings.
    pub fn file_stem(&self) -> String {
        let raw = format!(
            "{}_{}_{}_{}",
            self.code,
            self.decoder.algorithm.tag(),
            self.decoder.schedule.tag(),
            self.post.tag()
        );
        raw.chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect()
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns the CSV path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, SimError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let stem = self.file_stem();
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv()).map_err(io_err(&csv_path))?;
        fs::write(&json_path, self.to_json()).map_err(io_err(&json_path))?;
        Ok(csv_path)
    }
}

fn rows_to_csv(rows: &[CsvRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "code",
            "n",
            "k",
            "p",
            "eps_x",
            "alg",
            "sched",
            "post",
            "trials",
            "logical_errors",
            "ler",
            "ci_lo",
            "ci_hi",
            "lambda_ave",
            "mp_converged_frac",
        ])
        .expect("in-memory write");
    }
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Runs all p-points of `spec` on an already loaded code.
pub fn run_experiment_on(code: &CssCode, spec: &ExperimentSpec) -> Result<ExperimentResult, SimError> {
    spec.validate()?;
    let decoders = Decoders::new(code, &spec.decoder, &spec.post)?;
    let points = spec
        .p
        .iter()
        .map(|&p| run_point(&decoders, p, &spec.post, spec.trials, spec.seed, spec.stop_after_errors))
        .collect::<Result<Vec<_>, _>>()?;
    let lambda_max = match (&decoders.post, &spec.post) {
        (PostDecoder::Si(si), _) => Some(si.lambda_max()),
        _ => None,
    };
    Ok(ExperimentResult {
        code: code.name.clone(),
        n: code.n(),
        k: code.k(),
        decoder: spec.decoder.clone(),
        post: spec.post,
        lambda_max,
        seed: spec.seed,
        trials_requested: spec.trials,
        stop_after_errors: spec.stop_after_errors,
        ler_convention: LER_CONVENTION.to_string(),
        points,
    })
}

/// Loads the code named by `spec.code` and runs the experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, SimError> {
    let code = code::load_code_ref(&spec.code)?;
    run_experiment_on(&code, spec)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::InvalidSpec(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Results of several experiments sharing a p grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub results: Vec<ExperimentResult>,
}

impl SweepReport {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.results.iter().flat_map(ExperimentResult::csv_rows).collect()
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows())
    }

    pub fn table(&self) -> String {
        ler_table(&self.rows())
    }
}

pub fn sweep(runs: &[(&CssCode, ExperimentSpec)]) -> Result<SweepReport, SimError> {
    if let Some((_, first)) = runs.first() {
        if runs.iter().any(|(_, s)| s.p != first.p) {
            return Err(SimError::InvalidSpec("sweep specs must share a p grid".into()));
        }
    }
    let results = runs
        .iter()
        .map(|(code, spec)| run_experiment_on(code, spec))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepReport { results })
}

/// Logical error rates laid out with one row per p and one column per run.
pub fn ler_table(rows: &[CsvRow]) -> String {
    let mut runs: Vec<String> = Vec::new();
    let mut ps: Vec<f64> = Vec::new();
    let label = |r: &CsvRow| format!("{}/{}-{}-{}", r.code, r.alg, r.sched, r.post);
    for r in rows {
        let l = label(r);
        if !runs.contains(&l) {
            runs.push(l);
        }
        if !ps.contains(&r.p) {
            ps.push(r.p);
        }
    }
    ps.sort_by(f64::total_cmp);
    let mut out = String::new();
    write!(out, "{:>8}", "p").unwrap();
    for r in &runs {
        write!(out, "  {r:>24}").unwrap();
    }
    out.push('\n');
    for &p in &ps {
        write!(out, "{p:>8.4}").unwrap();
        for run in &runs {
            match rows.iter().find(|r| r.p == p && &label(r) == run) {
                Some(r) => write!(out, "  {:>24}", format!("{:.3e} ({})", r.ler, r.logical_errors)).unwrap(),
                None => write!(out, "  {:>24}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_csv_rows(path: &Path) -> Result<Vec<CsvRow>, SimError> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| SimError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    reader
        .deserialize()
        .collect::<Result<Vec<CsvRow>, _>>()
        .map_err(|source| SimError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

/// Collects every `*.csv` in `dir` (sorted by file name) into one table.
pub fn report_dir(dir: &Path) -> Result<String, SimError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut rows = Vec::new();
    for p in &paths {
        rows.extend(read_csv_rows(p)?);
    }
    Ok(ler_table(&rows))
}

/// Ranks of split checks among failing trials, binned by 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankHistogram {
    pub code: String,
    pub p: f64,
    pub m_x: usize,
    pub total_trials: u64,
    pub failing_trials: u64,
    pub bin_width: usize,
    /// Rank recorded for each failing trial, in trial order.
    pub ranks: Vec<usize>,
    /// `bins[i]` counts ranks in `[5i, 5i + 5)`.
    pub bins: Vec<u64>,
}

pub const RANK_BIN_WIDTH: usize = 5;

impl RankHistogram {
    /// Fraction of recorded ranks strictly below `rank`.
    pub fn mass_below(&self, rank: usize) -> f64 {
        if self.ranks.is_empty() {
            return 0.0;
        }
        self.ranks.iter().filter(|&&r| r < rank).count() as f64 / self.ranks.len() as f64
    }
}

pub fn bin_ranks(ranks: &[usize], m_x: usize) -> Vec<u64> {
    let mut bins = vec![0u64; m_x.div_ceil(RANK_BIN_WIDTH).max(1)];
    for &r in ranks {
        bins[r / RANK_BIN_WIDTH] += 1;
    }
    bins
}

/// Error that flips exactly half the support of an X-check on top of BSC
/// noise elsewhere; bits inside the check's support are replaced.
pub fn splitting_error<R: Rng + ?Sized>(code: &CssCode, eps: f64, rng: &mut R) -> (usize, BitVec) {
    let hx = code.hx();
    let check = loop {
        let r = rng.gen_range(0..hx.rows());
        let w = hx.row(r).len();
        if w > 0 && w.is_multiple_of(2) {
            break r;
        }
    };
    let mut e = channel::sample_x_error(code.n(), eps, rng);
    let support = hx.row(check);
    for &c in support {
        e.set(c, false);
    }
    for k in index::sample(rng, support.len(), support.len() / 2) {
        e.set(support[k], true);
    }
    (check, e)
}

/// Decodes stabilizer-splitting errors and records, for every trial where
/// message passing fails, the reliability rank of the split check.
pub fn rank_histogram_experiment(
    code: &CssCode,
    p: f64,
    decoder: &DecoderConfig,
    trials: u64,
    seed: u64,
) -> Result<RankHistogram, SimError> {
    if !code.hx().row_supports().iter().any(|r| !r.is_empty() && r.len() % 2 == 0) {
        return Err(SimError::InvalidSpec("no X-check has even positive weight".into()));
    }
    let params = DepolarizingParams::uniform(p)?;
    let eps = channel::marginal_flip_prob(&params, PauliKind::X);
    let priors = channel::a_priori_llrs(code.n(), eps, decoder.algorithm)?;
    let mp = MpDecoder::new(code.hz(), decoder.clone())?;
    let ranks: Vec<Option<usize>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Option<usize>, SimError> {
            let mut rng = RngStream::new(seed, t).rng();
            let (check, e) = splitting_error(code, eps, &mut rng);
            let s = code.hz().mat_vec(&e).expect("n bits");
            let out = mp.decode(&s, &priors)?;
            if out.converged {
                return Ok(None);
            }
            let rel = si::all_check_reliabilities(code.hx(), &out.soft);
            Ok(Some(si::rank_of_check(check, &rel)))
        })
        .collect::<Result<_, _>>()?;
    let ranks: Vec<usize> = ranks.into_iter().flatten().collect();
    Ok(RankHistogram {
        code: code.name.clone(),
        p,
        m_x: code.m_x(),
        total_trials: trials,
        failing_trials: ranks.len() as u64,
        bin_width: RANK_BIN_WIDTH,
        bins: bin_ranks(&ranks, code.m_x()),
        ranks,
    })
}
