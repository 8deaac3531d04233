//! Experiment settings gathered from an optional JSON file and command-line
//! flags. Every flag has a same-named key in the file; flags win.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qldpc::mp::{Algorithm, DecoderConfig, Schedule};
use qldpc::si::{LambdaMax, SiConfig};
use qldpc::sim::{ExperimentSpec, PostProcessing, DEFAULT_STOP_AFTER_ERRORS};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgArg {
    Sp,
    Ms,
    Nms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedArg {
    Flooding,
    Serial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostArg {
    None,
    Si,
    Osd0,
}

/// Decoder flags shared by `run` and `rank-hist`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DecoderArgs {
    /// Message-passing algorithm
    #[arg(long, value_enum)]
    pub alg: Option<AlgArg>,
    /// Normalization factor for nms
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Check-node update schedule
    #[arg(long, value_enum)]
    pub sched: Option<SchedArg>,
    /// Maximum message-passing iterations
    #[arg(long)]
    pub iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct RunArgs {
    /// Code reference: manifest path, optionally followed by #name
    #[arg(long)]
    pub code: Option<String>,
    /// Depolarizing probabilities, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub p: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub decoder: DecoderArgs,
    /// Post-processing applied when message passing fails
    #[arg(long, value_enum)]
    pub post: Option<PostArg>,
    /// Maximum number of X-checks SI may inactivate
    #[arg(long, conflicts_with = "lambda_frac")]
    pub lambda_max: Option<usize>,
    /// SI inactivation budget as a fraction of the X-checks
    #[arg(long)]
    pub lambda_frac: Option<f64>,
    /// Iterations for the restricted decodes inside SI
    #[arg(long)]
    pub restricted_iters: Option<usize>,
    /// Trials per p-point
    #[arg(long)]
    pub trials: Option<u64>,
    /// Base seed; trial t uses stream t of this seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stop a p-point after this many logical errors (0 disables)
    #[arg(long)]
    pub stop_after: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory for CSV and JSON results
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct RankHistArgs {
    /// Code reference: manifest path, optionally followed by #name
    #[arg(long)]
    pub code: Option<String>,
    /// Depolarizing probability of the background noise
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub decoder: DecoderArgs,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory for the histogram JSON
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const DECODER_KEYS: [&str; 4] = ["alg", "alpha", "sched", "iters"];

pub const RUN_KEYS: &[&str] = &[
    "code", "p", "post", "lambda_max", "lambda_frac", "restricted_iters", "trials", "seed", "stop_after", "threads",
    "out",
];

pub const RANK_HIST_KEYS: &[&str] = &["code", "p", "trials", "seed", "threads", "out"];

/// Reads a JSON config object, rejecting keys outside `keys` and the decoder
/// keys.
pub fn read_config<T: for<'de> Deserialize<'de>>(path: &Path, keys: &[&str]) -> Result<T, CliError> {
    let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
    let obj = value.as_object().ok_or_else(|| bad(&"expected a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !keys.contains(&k.as_str()) && !DECODER_KEYS.contains(&k.as_str())) {
        return Err(bad(&format!("unknown key {k:?}")));
    }
    serde_json::from_value(value).map_err(|e| bad(&e))
}

pub fn rebase_code(code: &mut Option<String>, base: &Path) {
    if let Some(c) = code {
        if Path::new(c.split('#').next().unwrap_or(c)).is_relative() {
            *c = base.join(&*c).to_string_lossy().into_owned();
        }
    }
}

pub fn rebase_out(out: &mut Option<PathBuf>, base: &Path) {
    if let Some(o) = out {
        if o.is_relative() {
            *o = base.join(&*o);
        }
    }
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),+) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field.clone(); } )+
    };
}

impl DecoderArgs {
    pub fn overlay(&mut self, cli: &DecoderArgs) {
        overlay!(self, cli, alg, alpha, sched, iters);
    }

    pub fn build(&self) -> Result<DecoderConfig, CliError> {
        let alg = self.alg.ok_or_else(|| CliError::Config("--alg is required".into()))?;
        let algorithm = match (alg, self.alpha) {
            (AlgArg::Sp, _) => Algorithm::SumProduct,
            (AlgArg::Ms, _) => Algorithm::MinSum,
            (AlgArg::Nms, Some(alpha)) => Algorithm::NormalizedMinSum { alpha },
            (AlgArg::Nms, None) => return Err(CliError::Config("--alg nms needs --alpha".into())),
        };
        let schedule = match self.sched.unwrap_or(SchedArg::Serial) {
            SchedArg::Flooding => Schedule::Flooding,
            SchedArg::Serial => Schedule::Serial,
        };
        let iters = self.iters.unwrap_or(match schedule {
            Schedule::Flooding => 100,
            _ => 50,
        });
        let cfg = DecoderConfig::new(algorithm, schedule, iters);
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

impl RunArgs {
    pub fn overlay(&mut self, cli: &RunArgs) {
        overlay!(self, cli, code, p, post, lambda_max, lambda_frac, restricted_iters, trials, seed, stop_after, threads, out);
        if cli.lambda_max.is_some() {
            self.lambda_frac = None;
        }
        if cli.lambda_frac.is_some() {
            self.lambda_max = None;
        }
        self.decoder.overlay(&cli.decoder);
    }

    pub fn post(&self) -> Result<PostProcessing, CliError> {
        Ok(match self.post.unwrap_or(PostArg::None) {
            PostArg::None => PostProcessing::None,
            PostArg::Osd0 => PostProcessing::Osd0,
            PostArg::Si => {
                let lambda_max = match (self.lambda_max, self.lambda_frac) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::Config("give either lambda_max or lambda_frac, not both".into()))
                    }
                    (Some(n), None) => LambdaMax::Count(n),
                    (None, Some(f)) => LambdaMax::Fraction(f),
                    (None, None) => {
                        return Err(CliError::Config("--post si needs --lambda-max or --lambda-frac".into()))
                    }
                };
                PostProcessing::Si(SiConfig {
                    lambda_max,
                    restricted_iters: self.restricted_iters,
                })
            }
        })
    }

    pub fn build(&self) -> Result<ExperimentSpec, CliError> {
        let code = self.code.clone().ok_or_else(|| CliError::Config("--code is required".into()))?;
        let p = self.p.clone().ok_or_else(|| CliError::Config("--p is required".into()))?;
        let trials = self.trials.ok_or_else(|| CliError::Config("--trials is required".into()))?;
        let stop_after_errors = match self.stop_after {
            Some(0) => None,
            Some(n) => Some(n),
            None => Some(DEFAULT_STOP_AFTER_ERRORS),
        };
        let spec = ExperimentSpec {
            code,
            p,
            decoder: self.decoder.build()?,
            post: self.post()?,
            trials,
            seed: self.seed.unwrap_or(0),
            stop_after_errors,
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }
}

impl RankHistArgs {
    pub fn overlay(&mut self, cli: &RankHistArgs) {
        overlay!(self, cli, code, p, trials, seed, threads, out);
        self.decoder.overlay(&cli.decoder);
    }
}
