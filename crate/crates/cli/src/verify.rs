use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use superpos::channel::{make_bsc_bc, make_vector_bc, save_channel, BroadcastChannel};
use superpos::scheme::{save_dist, Dist, UXDist};
use superpos::search::SweepConfig;
use superpos::theorem::{strictness_demo, verify_batch, StrictnessReport};

use crate::config::{self, Loaded};
use crate::error::{CliError, Result};

pub const REPORT_FORMAT: &str = "superpos-certificates/1";

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random channels in the corpus.
    #[arg(long)]
    random_channels: Option<usize>,
    #[arg(long)]
    dists_per_channel: Option<usize>,
    /// Extra channel document; repeatable.
    #[arg(long = "channel")]
    channels: Vec<PathBuf>,
    /// Leave the vector and binary symmetric channels out of the corpus.
    #[arg(long)]
    no_builtin: bool,
    /// Skip the separation example.
    #[arg(long)]
    no_strictness: bool,
    /// Certificate report; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields, default)]
struct VerifyConfig {
    seed: u64,
    random_channels: usize,
    dists_per_channel: usize,
    max_x: usize,
    max_y: usize,
    max_u: usize,
    builtin: bool,
    channels: Vec<PathBuf>,
    strictness: bool,
    report: Option<PathBuf>,
    sweep: SweepConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            random_channels: 100,
            dists_per_channel: 10,
            max_x: 3,
            max_y: 3,
            max_u: 3,
            builtin: true,
            channels: Vec::new(),
            strictness: true,
            report: None,
            sweep: SweepConfig::default(),
        }
    }
}

fn builtin_corpus() -> Result<Vec<(String, BroadcastChannel)>> {
    let mut v = vec![("vector".to_string(), make_vector_bc())];
    for (a, b) in [(0.1, 0.2), (0.05, 0.3)] {
        let ch = make_bsc_bc(a, b)?;
        v.push((format!("bsc({b},{a})"), ch.swapped()));
        v.push((format!("bsc({a},{b})"), ch));
    }
    Ok(v)
}

pub fn run(args: VerifyArgs) -> Result<bool> {
    let cfg: Loaded<VerifyConfig> = config::load(args.config.as_deref())?;
    let c = &cfg.value;
    if c.max_x < 2 || c.max_y < 2 || c.max_u < 1 {
        return Err(CliError::Usage("max_x and max_y must be at least 2, max_u at least 1".into()));
    }
    let seed = args.seed.unwrap_or(c.seed);
    let random_channels = args.random_channels.unwrap_or(c.random_channels);
    let per_channel = args.dists_per_channel.unwrap_or(c.dists_per_channel);
    let report_path = args.report.clone().or_else(|| c.report.as_ref().map(|p| cfg.resolve(p)));

    let mut corpus: Vec<(String, BroadcastChannel)> = Vec::new();
    if c.builtin && !args.no_builtin {
        corpus.extend(builtin_corpus()?);
    }
    let files: Vec<PathBuf> =
        c.channels.iter().map(|p| cfg.resolve(p)).chain(args.channels.iter().cloned()).collect();
    for p in &files {
        corpus.push((p.display().to_string(), config::channel(p)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random_channels {
        let (nx, n1, n2) = (rng.random_range(2..=c.max_x), rng.random_range(2..=c.max_y), rng.random_range(2..=c.max_y));
        corpus.push((format!("random-{k}"), BroadcastChannel::random(&mut rng, nx, n1, n2)?));
    }

    let mut pairs = Vec::with_capacity(corpus.len() * per_channel);
    let mut owner = Vec::with_capacity(pairs.capacity());
    for (i, (_, ch)) in corpus.iter().enumerate() {
        for _ in 0..per_channel {
            let nu = rng.random_range(1..=c.max_u);
            pairs.push((ch.clone(), UXDist::random(&mut rng, nu, ch.x_size(), 1.0)));
            owner.push(i);
        }
    }
    let certs = verify_batch(&pairs)?;
    let strict = if c.strictness && !args.no_strictness { Some(strictness_demo(&c.sweep)?) } else { None };

    let passed = certs.iter().filter(|c| c.verdict).count();
    let all_ok = passed == certs.len() && strict.as_ref().is_none_or(StrictnessReport::holds);

    let mut s = String::new();
    let _ = writeln!(s, "format = \"{REPORT_FORMAT}\"");
    let _ = writeln!(s, "seed = {seed}\nchannels = {}\ncertificate_count = {}\npassed = {passed}", corpus.len(), certs.len());
    let _ = writeln!(s, "all_verified = {all_ok}");
    if let Some(r) = &strict {
        let _ = writeln!(s, "\n[strictness]");
        let _ = writeln!(s, "max_sum_rate = {:?}", r.max_sum_rate);
        let _ = writeln!(s, "sum_rate_bounded = {}", r.sum_rate_bounded);
        let _ = writeln!(s, "unit_pair_achievable = {}", r.unit_pair_achievable);
        let _ = writeln!(s, "gap_area = {:?}", r.gap_area);
        let _ = writeln!(s, "holds = {}", r.holds());
    }
    for (k, cert) in certs.iter().enumerate() {
        let _ = writeln!(s, "\n[[certificates]]");
        let _ = writeln!(s, "channel = {:?}", corpus[owner[k]].0);
        let _ = writeln!(s, "case = \"{}\"", cert.case_tag);
        let run: Vec<String> = cert.cases_run.iter().map(|t| format!("\"{t}\"")).collect();
        let _ = writeln!(s, "cases_run = [{}]", run.join(", "));
        let _ = writeln!(s, "margin = {:?}\nverdict = {}\nsum_step_gap = {:?}", cert.inclusion_margin, cert.verdict, cert.sum_step_gap);
        if let Some(a) = cert.ux_reduced_area_diff {
            let _ = writeln!(s, "ux_reduced_area_diff = {a:?}");
        }
        if let Some(a) = cert.uv_reduced_area_diff {
            let _ = writeln!(s, "uv_reduced_area_diff = {a:?}");
        }
        if !cert.verdict {
            // everything needed to reproduce the failure
            let (ch, d) = &pairs[k];
            let _ = writeln!(s, "channel_document = '''\n{}'''", save_channel(ch));
            let _ = writeln!(s, "dist_document = '''\n{}'''", save_dist(&Dist::Ux(d.clone())));
            eprintln!("inclusion failed on {} (certificate {k}), margin {:e}", corpus[owner[k]].0, cert.inclusion_margin);
        }
    }
    config::emit(report_path.as_deref(), &s)?;
    if let Some(r) = &strict {
        if !r.holds() {
            eprintln!("separation example failed: max sum rate {}, (1,1) achievable {}", r.max_sum_rate, r.unit_pair_achievable);
        }
    }
    if report_path.is_some() {
        println!("{passed}/{} certificates verified{}", certs.len(), if all_ok { "" } else { "; see report" });
    }
    Ok(all_ok)
}
