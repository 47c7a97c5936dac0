use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;
use superpos::scheme::Dist;
use superpos::sim::{estimate_error, message_counts, Decoder, SimConfig, TrialResult, DEFAULT_EPS};

use crate::config::{self, Loaded};
use crate::error::{CliError, Result};

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Uv,
    Ux,
    /// UX with the cloud carrying message 2.
    Vx,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecoderArg {
    #[default]
    Ml,
    Typicality,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Defaults to the kind of the distribution document.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[arg(long)]
    channel: Option<PathBuf>,
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Blocklength; with --r1 and --r2 replaces the config's runs.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderArg>,
    /// Typicality slack.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct Run {
    n: usize,
    r1: f64,
    r2: f64,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
struct SimulateConfig {
    channel: Option<PathBuf>,
    dist: Option<PathBuf>,
    scheme: Option<SchemeArg>,
    decoder: DecoderArg,
    eps: f64,
    seed: u64,
    trials: usize,
    out: Option<PathBuf>,
    runs: Vec<Run>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            channel: None,
            dist: None,
            scheme: None,
            decoder: DecoderArg::Ml,
            eps: DEFAULT_EPS,
            seed: 0,
            trials: 100,
            out: None,
            runs: Vec::new(),
        }
    }
}

pub const CSV_HEADER: &str = "scheme,n,r1,r2,m1,m2,realized_r1,realized_r2,decoder,eps,seed,trials,\
rx1_errors,rx2_errors,joint_errors,rx1_no_candidate,rx2_no_candidate,rx1_ambiguous,rx2_ambiguous";

fn required(flag: &Option<PathBuf>, key: &Option<PathBuf>, cfg: &Loaded<SimulateConfig>, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| key.as_ref().map(|p| cfg.resolve(p)))
        .ok_or_else(|| CliError::Usage(format!("no {what} given (--{what} or `{what}` in the config)")))
}

pub fn run(args: SimulateArgs) -> Result<bool> {
    let cfg: Loaded<SimulateConfig> = config::load(args.config.as_deref())?;
    let c = &cfg.value;
    let channel_path = required(&args.channel, &c.channel, &cfg, "channel")?;
    let dist_path = required(&args.dist, &c.dist, &cfg, "dist")?;
    let runs: Vec<Run> = match (args.n, args.r1, args.r2) {
        (Some(n), Some(r1), Some(r2)) => vec![Run { n, r1, r2 }],
        (None, None, None) => c.runs.clone(),
        _ => return Err(CliError::Usage("--n, --r1 and --r2 go together".into())),
    };
    let trials = args.trials.unwrap_or(c.trials);
    let eps = args.eps.unwrap_or(c.eps);
    let seed = args.seed.unwrap_or(c.seed);
    let decoder_arg = args.decoder.unwrap_or(c.decoder);
    let decoder = match decoder_arg {
        DecoderArg::Ml => Decoder::Ml,
        DecoderArg::Typicality => Decoder::Typicality { eps },
    };
    let out = args.out.clone().or_else(|| c.out.as_ref().map(|p| cfg.resolve(p)));

    let ch = config::channel(&channel_path)?;
    let dist = config::dist(&dist_path)?;
    let scheme = args.scheme.or(c.scheme).unwrap_or(match dist {
        Dist::Uv(_) => SchemeArg::Uv,
        Dist::Ux(_) => SchemeArg::Ux,
    });
    match (scheme, &dist) {
        (SchemeArg::Uv, Dist::Uv(_)) | (SchemeArg::Ux | SchemeArg::Vx, Dist::Ux(_)) => {}
        _ => return Err(CliError::Usage(format!("scheme {scheme:?} does not match the distribution document"))),
    }
    // every guard before any trial runs
    for r in &runs {
        message_counts(r.n, r.r1, r.r2)?;
    }

    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    if trials > 0 {
        let swapped = ch.swapped();
        for r in &runs {
            let result = match scheme {
                SchemeArg::Vx => {
                    let sc = SimConfig { n: r.n, r1: r.r2, r2: r.r1, trials, decoder, seed };
                    swap_receivers(estimate_error(&dist, &swapped, &sc)?)
                }
                _ => estimate_error(&dist, &ch, &SimConfig { n: r.n, r1: r.r1, r2: r.r2, trials, decoder, seed })?,
            };
            let name = format!("{scheme:?}").to_lowercase();
            let dec = format!("{decoder_arg:?}").to_lowercase();
            let t = &result;
            let _ = writeln!(
                s,
                "{name},{},{:?},{:?},{},{},{:?},{:?},{dec},{eps:?},{seed},{},{},{},{},{},{},{},{}",
                r.n,
                r.r1,
                r.r2,
                t.m1,
                t.m2,
                t.realized_rates.0,
                t.realized_rates.1,
                t.trials,
                t.rx1_errors,
                t.rx2_errors,
                t.joint_errors,
                t.no_candidate.0,
                t.no_candidate.1,
                t.ambiguous.0,
                t.ambiguous.1
            );
        }
    }
    config::emit(out.as_deref(), &s)?;
    Ok(true)
}

fn swap_receivers(t: TrialResult) -> TrialResult {
    TrialResult {
        rx1_errors: t.rx2_errors,
        rx2_errors: t.rx1_errors,
        no_candidate: (t.no_candidate.1, t.no_candidate.0),
        ambiguous: (t.ambiguous.1, t.ambiguous.0),
        m1: t.m2,
        m2: t.m1,
        nominal_rates: (t.nominal_rates.1, t.nominal_rates.0),
        realized_rates: (t.realized_rates.1, t.realized_rates.0),
        ..t
    }
}
