//! Finite surrogates for the hulls `co(U_p R(p))` over each distribution
//! family: a rational grid, Dirichlet samples and a few seeded
//! distributions, followed by coordinate ascent along fixed support
//! directions.
//!
//! All sweeps are deterministic for a fixed [`SweepConfig`]. Candidates are
//! evaluated in parallel but merged in their generation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::{BroadcastChannel, Receiver};
use crate::error::{Error, Result};
use crate::geom::{Point, Region2D};
use crate::prob::{random_simplex, JointPmf, Pmf};
use crate::scheme::{mi_bundle_ux, region_uv, region_ux, UVDist, UXDist, UxMiBundle};

/// Largest map table `|X|^(|U||V|)` that is enumerated rather than sampled.
pub const MAP_ENUM_CAP: usize = 4096;
/// Largest number of grid points per simplex.
pub const GRID_CAP: usize = 200_000;
/// Largest number of UV candidates (grid pairs times maps).
pub const CANDIDATE_CAP: usize = 400_000;
/// Number of support directions used for refinement.
pub const DIRECTIONS: usize = 16;
/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SUPERPOS_WORKERS";

const CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub u_size: usize,
    pub v_size: usize,
    /// Grid denominators run over `1..grid_steps`.
    pub grid_steps: usize,
    pub random_samples: usize,
    pub rng_seed: u64,
    /// Coordinate-ascent passes per support direction.
    pub refine_iters: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { u_size: 2, v_size: 2, grid_steps: 5, random_samples: 2000, rng_seed: 0, refine_iters: 50 }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.u_size == 0 || self.v_size == 0 {
            return Err(Error::OutOfRange("auxiliary alphabet sizes must be at least 1".into()));
        }
        if self.grid_steps < 2 {
            return Err(Error::OutOfRange(format!("grid_steps must be at least 2, got {}", self.grid_steps)));
        }
        Ok(())
    }
}

/// Sizes the global worker pool from [`WORKERS_ENV`] if set. Has no effect
/// once the pool exists.
pub fn init_workers_from_env() {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Unit weight vectors `(cos t, sin t)` for `t` evenly spaced over `[0, pi/2]`.
pub fn support_directions(n: usize) -> Vec<(f64, f64)> {
    if n == 1 {
        return vec![(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)];
    }
    (0..n)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64;
            (t.cos(), t.sin())
        })
        .collect()
}

/// Capacity-achieving input of `w = p(y|x)` by Blahut-Arimoto iteration.
/// Returns `(capacity, p(x))`.
pub fn blahut_arimoto(w: &[f64], nx: usize, ny: usize) -> (f64, Vec<f64>) {
    let mut p = vec![1.0 / nx as f64; nx];
    let mut d = vec![0.0; nx];
    let mut lower = 0.0;
    for _ in 0..20_000 {
        let mut py = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                py[y] += p[x] * w[x * ny + y];
            }
        }
        for x in 0..nx {
            d[x] = (0..ny)
                .filter(|&y| w[x * ny + y] > 0.0)
                .map(|y| w[x * ny + y] * (w[x * ny + y] / py[y]).log2())
                .sum();
        }
        lower = p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < 1e-13 {
            break;
        }
        let mut total = 0.0;
        for x in 0..nx {
            p[x] *= d[x].exp2();
            total += p[x];
        }
        p.iter_mut().for_each(|v| *v /= total);
    }
    (lower.max(0.0), p)
}

/// Points of the `n`-simplex with coordinates in `{k/den}` for some
/// `den < steps`, each listed once, in a fixed order.
pub fn simplex_grid(n: usize, steps: usize) -> Result<Vec<Vec<f64>>> {
    let mut count: usize = 0;
    for den in 1..steps {
        count = count.saturating_add(binomial(den + n - 1, n - 1));
    }
    if count > GRID_CAP {
        return Err(Error::ScaleGuard(format!("simplex grid of {count} points over {n} cells exceeds {GRID_CAP}")));
    }
    let mut out = Vec::new();
    let mut parts = vec![0usize; n];
    for den in 1..steps {
        compositions(den, 0, &mut parts, &mut |c| {
            if c.iter().fold(den, |g, &k| gcd(g, k)) == 1 {
                out.push(c.iter().map(|&k| k as f64 / den as f64).collect());
            }
        });
    }
    Ok(out)
}

fn compositions(rest: usize, i: usize, parts: &mut [usize], f: &mut impl FnMut(&[usize])) {
    if i + 1 == parts.len() {
        parts[i] = rest;
        f(parts);
        return;
    }
    for k in (0..=rest).rev() {
        parts[i] = k;
        compositions(rest - k, i + 1, parts, f);
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// A distribution family whose free parameters are a list of simplex blocks.
trait Family: Sync {
    type D: Clone + Send + Sync;
    fn region(&self, d: &Self::D) -> Region2D;
    fn blocks(&self, d: &Self::D) -> Vec<Vec<f64>>;
    fn with_blocks(&self, d: &Self::D, blocks: Vec<Vec<f64>>) -> Self::D;
}

struct Outcome<D> {
    region: Region2D,
    /// Refined distribution per support direction.
    refined: Vec<D>,
    candidates: usize,
}

fn hull_vertices(pts: Vec<Point>) -> Vec<Point> {
    Region2D::from_points(&pts).vertices().collect()
}

fn score(r: &Region2D, w: (f64, f64)) -> f64 {
    r.max_weighted_sum(w.0, w.1)
}

fn run<F: Family>(fam: &F, candidates: &[F::D], refine_iters: usize, delta0: f64) -> Outcome<F::D> {
    let dirs = support_directions(DIRECTIONS);
    let mut pts: Vec<Point> = Vec::new();
    let mut best: Vec<Option<(f64, usize)>> = vec![None; dirs.len()];
    for (c, chunk) in candidates.chunks(CHUNK).enumerate() {
        let evals: Vec<(Vec<Point>, Vec<f64>)> = chunk
            .par_iter()
            .map(|d| {
                let r = fam.region(d);
                let s = dirs.iter().map(|&w| score(&r, w)).collect();
                (r.vertices().collect(), s)
            })
            .collect();
        for (i, (v, s)) in evals.into_iter().enumerate() {
            pts.extend(v);
            for (k, &sk) in s.iter().enumerate() {
                if best[k].is_none_or(|(b, _)| sk > b) {
                    best[k] = Some((sk, c * CHUNK + i));
                }
            }
        }
        pts = hull_vertices(pts);
    }
    let refined: Vec<(F::D, Vec<Point>)> = dirs
        .par_iter()
        .zip(best.par_iter())
        .filter_map(|(&w, b)| b.map(|(_, i)| (w, i)))
        .map(|(w, i)| {
            let d = refine(fam, &candidates[i], w, refine_iters, delta0);
            let v = fam.region(&d).vertices().collect();
            (d, v)
        })
        .collect();
    let mut out = Vec::with_capacity(refined.len());
    for (d, v) in refined {
        pts.extend(v);
        out.push(d);
    }
    Outcome { region: Region2D::from_points(&pts), refined: out, candidates: candidates.len() }
}

/// First-improvement coordinate ascent: mass moves between pairs of cells
/// of one block, halving the step whenever a full pass finds nothing.
fn refine<F: Family>(fam: &F, start: &F::D, w: (f64, f64), iters: usize, delta0: f64) -> F::D {
    let mut cur = start.clone();
    let mut blocks = fam.blocks(&cur);
    let mut val = score(&fam.region(&cur), w);
    let mut delta = delta0;
    for _ in 0..iters {
        let mut improved = false;
        for b in 0..blocks.len() {
            let n = blocks[b].len();
            for i in 0..n {
                for j in 0..n {
                    if i == j || blocks[b][i] <= 0.0 {
                        continue;
                    }
                    let mut trial = blocks.clone();
                    let m = delta.min(trial[b][i]);
                    trial[b][i] -= m;
                    trial[b][j] += m;
                    let d = fam.with_blocks(&cur, trial.clone());
                    let s = score(&fam.region(&d), w);
                    if s > val + 1e-15 {
                        cur = d;
                        blocks = trial;
                        val = s;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            delta *= 0.5;
            if delta < 1e-12 {
                break;
            }
        }
    }
    cur
}

fn clean(v: Vec<f64>) -> Vec<f64> {
    let v: Vec<f64> = v.into_iter().map(|p| p.max(0.0)).collect();
    let t: f64 = v.iter().sum();
    v.into_iter().map(|p| p / t).collect()
}

struct UvFamily<'a> {
    ch: &'a BroadcastChannel,
}

impl Family for UvFamily<'_> {
    type D = UVDist;

    fn region(&self, d: &UVDist) -> Region2D {
        region_uv(self.ch, d).expect("alphabets checked before the sweep")
    }

    fn blocks(&self, d: &UVDist) -> Vec<Vec<f64>> {
        vec![d.pu().probs().to_vec(), d.pv().probs().to_vec()]
    }

    fn with_blocks(&self, d: &UVDist, mut blocks: Vec<Vec<f64>>) -> UVDist {
        let pv = Pmf::normalized(clean(blocks.pop().expect("two blocks"))).expect("nonzero block");
        let pu = Pmf::normalized(clean(blocks.pop().expect("two blocks"))).expect("nonzero block");
        UVDist::new(pu, pv, d.xmap().to_vec(), d.x_size()).expect("same shape")
    }
}

struct UxFamily<'a> {
    ch: &'a BroadcastChannel,
}

impl Family for UxFamily<'_> {
    type D = UXDist;

    fn region(&self, d: &UXDist) -> Region2D {
        region_ux(self.ch, d).expect("alphabets checked before the sweep")
    }

    fn blocks(&self, d: &UXDist) -> Vec<Vec<f64>> {
        vec![d.pux().probs().to_vec()]
    }

    fn with_blocks(&self, d: &UXDist, mut blocks: Vec<Vec<f64>>) -> UXDist {
        let probs = clean(blocks.pop().expect("one block"));
        UXDist::new(JointPmf::new(d.pux().shape().to_vec(), probs).expect("renormalized block")).expect("two axes")
    }
}

/// Coded time sharing: `p(q)` and one UX component per value of `q`; every
/// mutual-information term is averaged over `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeShared {
    pub pq: Vec<f64>,
    pub components: Vec<UXDist>,
}

struct TsFamily<'a> {
    ch: &'a BroadcastChannel,
}

impl TsFamily<'_> {
    fn bundle(&self, d: &TimeShared) -> UxMiBundle {
        let b: Vec<UxMiBundle> =
            d.components.iter().map(|c| mi_bundle_ux(self.ch, c).expect("alphabets checked before the sweep")).collect();
        UxMiBundle::mix(&d.pq, &b)
    }
}

impl Family for TsFamily<'_> {
    type D = TimeShared;

    fn region(&self, d: &TimeShared) -> Region2D {
        self.bundle(d).region((self.ch.x_size() as f64).log2())
    }

    fn blocks(&self, d: &TimeShared) -> Vec<Vec<f64>> {
        let mut b = vec![d.pq.clone()];
        b.extend(d.components.iter().map(|c| c.pux().probs().to_vec()));
        b
    }

    fn with_blocks(&self, d: &TimeShared, blocks: Vec<Vec<f64>>) -> TimeShared {
        let mut it = blocks.into_iter();
        let pq = clean(it.next().expect("weight block"));
        let components = d
            .components
            .iter()
            .zip(it)
            .map(|(c, b)| UXDist::new(JointPmf::new(c.pux().shape().to_vec(), clean(b)).expect("block")).expect("axes"))
            .collect();
        TimeShared { pq, components }
    }
}

fn check_sizes(ch: &BroadcastChannel, d_x: usize) -> Result<()> {
    if d_x != ch.x_size() {
        return Err(Error::SizeMismatch(format!("seed has |X| = {d_x}, channel has {}", ch.x_size())));
    }
    Ok(())
}

/// Capacity-achieving input laws of the two receivers.
fn capacity_inputs(ch: &BroadcastChannel) -> [Vec<f64>; 2] {
    let (n1, w1) = ch.receiver(Receiver::One);
    let (n2, w2) = ch.receiver(Receiver::Two);
    [clean(blahut_arimoto(w1, ch.x_size(), n1).1), clean(blahut_arimoto(w2, ch.x_size(), n2).1)]
}

/// Seeds with one auxiliary equal to `X` and the other trivial, for both
/// receivers' capacity-achieving inputs.
fn uv_seeds(ch: &BroadcastChannel) -> Vec<UVDist> {
    let nx = ch.x_size();
    let id: Vec<usize> = (0..nx).collect();
    let mut out = Vec::new();
    for px in capacity_inputs(ch) {
        let px = Pmf::new(px).expect("capacity input");
        let one = Pmf::uniform(1).expect("singleton");
        out.push(UVDist::new(px.clone(), one.clone(), id.clone(), nx).expect("identity map"));
        out.push(UVDist::new(one, px, id.clone(), nx).expect("identity map"));
    }
    out
}

fn ux_seeds(ch: &BroadcastChannel) -> Vec<UXDist> {
    let nx = ch.x_size();
    let mut out = Vec::new();
    for px in capacity_inputs(ch) {
        out.push(UXDist::new(JointPmf::new(vec![1, nx], px.clone()).expect("pmf")).expect("axes"));
        let diag = (0..nx * nx).map(|i| if i / nx == i % nx { px[i / nx] } else { 0.0 }).collect();
        out.push(UXDist::new(JointPmf::new(vec![nx, nx], diag).expect("pmf")).expect("axes"));
    }
    out
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let samples = ChaCha8Rng::seed_from_u64(seed);
    let mut maps = ChaCha8Rng::seed_from_u64(seed);
    maps.set_stream(1);
    (samples, maps)
}

/// Every map `x(u, v)` when there are at most [`MAP_ENUM_CAP`], otherwise
/// that many uniform samples.
/// The flag tells whether the list is exhaustive.
fn symbol_maps(cells: usize, nx: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<usize>>, bool) {
    let total = (0..cells).try_fold(1usize, |a, _| a.checked_mul(nx)).filter(|&t| t <= MAP_ENUM_CAP);
    let maps = match total {
        Some(t) => (0..t)
            .map(|mut k| {
                (0..cells)
                    .map(|_| {
                        let x = k % nx;
                        k /= nx;
                        x
                    })
                    .collect()
            })
            .collect(),
        None => (0..MAP_ENUM_CAP).map(|_| (0..cells).map(|_| rng.random_range(0..nx)).collect()).collect(),
    };
    (maps, total.is_some())
}

fn sample_alpha(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        0.3
    }
}

fn initial_step(cfg: &SweepConfig) -> f64 {
    0.5 / (cfg.grid_steps - 1) as f64
}

/// What a sweep produced.
#[derive(Debug, Clone)]
pub struct SweepReport<D> {
    pub region: Region2D,
    pub candidates: usize,
    /// Refined distribution per support direction.
    pub refined: Vec<D>,
    pub maps_enumerated: bool,
}

fn uv_candidates(ch: &BroadcastChannel, cfg: &SweepConfig, seeds: &[UVDist]) -> Result<(Vec<UVDist>, bool)> {
    cfg.validate()?;
    for s in seeds {
        check_sizes(ch, s.x_size())?;
    }
    let nx = ch.x_size();
    let (mut rng, mut map_rng) = rngs(cfg.rng_seed);
    let (maps, enumerated) = symbol_maps(cfg.u_size * cfg.v_size, nx, &mut map_rng);
    let gu = simplex_grid(cfg.u_size, cfg.grid_steps)?;
    let gv = simplex_grid(cfg.v_size, cfg.grid_steps)?;
    let total = gu.len().saturating_mul(gv.len()).saturating_mul(maps.len());
    if total > CANDIDATE_CAP {
        return Err(Error::ScaleGuard(format!(
            "{} x {} grid pairs x {} maps = {total} candidates exceed {CANDIDATE_CAP}",
            gu.len(),
            gv.len(),
            maps.len()
        )));
    }
    let mut out: Vec<UVDist> = seeds.to_vec();
    out.extend(uv_seeds(ch));
    for m in &maps {
        for a in &gu {
            for b in &gv {
                out.push(UVDist::new(Pmf::new(a.clone())?, Pmf::new(b.clone())?, m.clone(), nx)?);
            }
        }
    }
    for i in 0..cfg.random_samples {
        let a = random_simplex(&mut rng, cfg.u_size, sample_alpha(i));
        let b = random_simplex(&mut rng, cfg.v_size, sample_alpha(i));
        let m = maps[rng.random_range(0..maps.len())].clone();
        out.push(UVDist::new(Pmf::normalized(a)?, Pmf::normalized(b)?, m, nx)?);
    }
    Ok((out, enumerated))
}

fn ux_candidates(ch: &BroadcastChannel, cfg: &SweepConfig, seeds: &[UXDist]) -> Result<Vec<UXDist>> {
    cfg.validate()?;
    for s in seeds {
        check_sizes(ch, s.x_size())?;
    }
    let nx = ch.x_size();
    let (mut rng, _) = rngs(cfg.rng_seed);
    let mut out: Vec<UXDist> = seeds.to_vec();
    out.extend(ux_seeds(ch));
    for g in simplex_grid(cfg.u_size * nx, cfg.grid_steps)? {
        out.push(UXDist::new(JointPmf::new(vec![cfg.u_size, nx], g)?)?);
    }
    for i in 0..cfg.random_samples {
        out.push(UXDist::random(&mut rng, cfg.u_size, nx, sample_alpha(i)));
    }
    Ok(out)
}

/// Hull of UV regions with extra seed distributions in the candidate set.
pub fn sweep_uv_report(ch: &BroadcastChannel, cfg: &SweepConfig, seeds: &[UVDist]) -> Result<SweepReport<UVDist>> {
    let (cands, maps_enumerated) = uv_candidates(ch, cfg, seeds)?;
    let o = run(&UvFamily { ch }, &cands, cfg.refine_iters, initial_step(cfg));
    Ok(SweepReport { region: o.region, candidates: o.candidates, refined: o.refined, maps_enumerated })
}

/// Hull of UX regions with extra seed distributions in the candidate set.
pub fn sweep_ux_report(ch: &BroadcastChannel, cfg: &SweepConfig, seeds: &[UXDist]) -> Result<SweepReport<UXDist>> {
    let cands = ux_candidates(ch, cfg, seeds)?;
    let o = run(&UxFamily { ch }, &cands, cfg.refine_iters, initial_step(cfg));
    Ok(SweepReport { region: o.region, candidates: o.candidates, refined: o.refined, maps_enumerated: true })
}

pub fn sweep_uv(ch: &BroadcastChannel, cfg: &SweepConfig) -> Result<Region2D> {
    Ok(sweep_uv_report(ch, cfg, &[])?.region)
}

pub fn sweep_ux(ch: &BroadcastChannel, cfg: &SweepConfig) -> Result<Region2D> {
    Ok(sweep_ux_report(ch, cfg, &[])?.region)
}

/// UX sweep with the message roles exchanged.
pub fn sweep_vx(ch: &BroadcastChannel, cfg: &SweepConfig) -> Result<Region2D> {
    Ok(sweep_ux(&ch.swapped(), cfg)?.swap_axes())
}

/// Outcome of [`coded_time_sharing_check`].
#[derive(Debug, Clone)]
pub struct TimeSharingReport {
    pub q_size: usize,
    /// Hull over time-shared UX distributions.
    pub time_shared: Region2D,
    /// UX sweep with `|U|` scaled by `q_size`.
    pub reference: Region2D,
    /// `(w, support of time_shared - support of reference)` per direction.
    pub excess: Vec<((f64, f64), f64)>,
    pub max_excess: f64,
    pub enlarged: bool,
}

/// Directions compared by [`coded_time_sharing_check`].
pub const CHECK_DIRECTIONS: usize = 64;
/// Excess above which the time-shared hull counts as larger.
pub const TIME_SHARING_TOL: f64 = 1e-3;

/// Compares the hull of coded-time-shared UX regions against a UX sweep in
/// which `U` is large enough to absorb `Q`.
///
/// Candidates are mixtures of the plain UX sweep candidates, mixtures of its
/// per-direction optima, and `random_samples` random mixtures; all are then
/// refined jointly in the weights and components. With `q_size = 1` this
/// reproduces the plain UX sweep.
pub fn coded_time_sharing_check(ch: &BroadcastChannel, cfg: &SweepConfig, q_size: usize) -> Result<TimeSharingReport> {
    if q_size == 0 {
        return Err(Error::OutOfRange("q_size must be at least 1".into()));
    }
    let base = ux_candidates(ch, cfg, &[])?;
    let lifted = SweepConfig { u_size: cfg.u_size * q_size, ..cfg.clone() };
    let reference = if q_size == 1 { sweep_ux(ch, cfg)? } else { sweep_ux(ch, &lifted)? };

    let fam = TsFamily { ch };
    let mut cands: Vec<TimeShared> =
        base.iter().map(|c| TimeShared { pq: vec![1.0; 1], components: vec![c.clone()] }).collect();
    if q_size > 1 {
        let optima = run(&UxFamily { ch }, &base, cfg.refine_iters, initial_step(cfg)).refined;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(2);
        let pad = |mut comps: Vec<UXDist>| {
            while comps.len() < q_size {
                comps.push(comps[0].clone());
            }
            comps
        };
        cands.clear();
        for a in 0..optima.len() {
            for b in a + 1..optima.len() {
                for t in [0.25, 0.5, 0.75] {
                    let mut pq = vec![0.0; q_size];
                    pq[0] = t;
                    pq[1] = 1.0 - t;
                    cands.push(TimeShared { pq, components: pad(vec![optima[a].clone(), optima[b].clone()]) });
                }
            }
        }
        for i in 0..cfg.random_samples {
            let pq = random_simplex(&mut rng, q_size, 1.0);
            let components = (0..q_size).map(|_| UXDist::random(&mut rng, cfg.u_size, ch.x_size(), sample_alpha(i))).collect();
            cands.push(TimeShared { pq, components });
        }
        for _ in 0..cfg.random_samples {
            let pq = random_simplex(&mut rng, q_size, 1.0);
            let components = (0..q_size).map(|_| base[rng.random_range(0..base.len())].clone()).collect();
            cands.push(TimeShared { pq, components });
        }
    }
    let time_shared = run(&fam, &cands, cfg.refine_iters, initial_step(cfg)).region;

    let excess: Vec<((f64, f64), f64)> = support_directions(CHECK_DIRECTIONS)
        .into_iter()
        .map(|w| (w, score(&time_shared, w) - score(&reference, w)))
        .collect();
    let max_excess = excess.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(TimeSharingReport { q_size, time_shared, reference, excess, max_excess, enlarged: max_excess > TIME_SHARING_TOL })
}
