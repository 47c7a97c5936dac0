//! Small-blocklength Monte Carlo over the two random codebook ensembles.
//!
//! Messages are 0-based. A fresh codebook is drawn for every trial, so
//! error counts estimate the ensemble-average error probability.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{BroadcastChannel, Receiver};
use crate::error::{Error, Result};
use crate::prob::JointPmf;
use crate::scheme::{Dist, UVDist, UXDist};

/// Largest `M1 * M2` a codebook may have.
pub const CODEBOOK_GUARD: usize = 1 << 22;
/// Largest supported blocklength.
pub const MAX_BLOCKLENGTH: usize = 64;
/// Default typicality slack.
pub const DEFAULT_EPS: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Uv,
    Ux,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decoder {
    Typicality { eps: f64 },
    Ml,
}

/// Whether `|count(a)/n - p(a)| <= eps * p(a)` for every joint symbol `a`.
/// `seqs[k]` is the sequence for axis `k` of `joint`.
pub fn is_typical(seqs: &[&[usize]], joint: &JointPmf, eps: f64) -> Result<bool> {
    if seqs.len() != joint.axes() {
        return Err(Error::Arity { expected: joint.axes(), got: seqs.len() });
    }
    let n = seqs.first().map_or(0, |s| s.len());
    if seqs.iter().any(|s| s.len() != n) {
        return Err(Error::SizeMismatch("sequences differ in length".into()));
    }
    let shape = joint.shape();
    for (s, &k) in seqs.iter().zip(shape) {
        if s.iter().any(|&a| a >= k) {
            return Err(Error::SizeMismatch(format!("symbol outside alphabet of size {k}")));
        }
    }
    let mut counts = vec![0u32; joint.probs().len()];
    for i in 0..n {
        let idx = seqs.iter().zip(shape).fold(0, |acc, (s, &k)| acc * k + s[i]);
        counts[idx] += 1;
    }
    Ok(typical_counts(&counts, joint.probs(), n, eps))
}

fn typical_counts(counts: &[u32], probs: &[f64], n: usize, eps: f64) -> bool {
    let n = n as f64;
    counts.iter().zip(probs).all(|(&c, &p)| (c as f64 / n - p).abs() <= eps * p)
}

/// Inverse-cdf sampler over `{0, .., len-1}` on 32-bit uniforms, so each
/// probability is resolved to within `2^-32`. Point masses use no randomness.
#[derive(Debug, Clone)]
struct Sampler {
    thresholds: Vec<u64>,
    last: usize,
    point: Option<usize>,
}

impl Sampler {
    fn new(p: &[f64]) -> Self {
        let total: f64 = p.iter().sum();
        let mut acc = 0.0;
        let thresholds = p
            .iter()
            .map(|v| {
                acc += v;
                ((acc / total) * 4294967296.0).round() as u64
            })
            .collect();
        let last = p.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        let mut support = p.iter().enumerate().filter(|(_, &v)| v > 0.0);
        let point = match (support.next(), support.next()) {
            (Some((k, _)), None) => Some(k),
            _ => None,
        };
        Self { thresholds, last, point }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if let Some(k) = self.point {
            return k;
        }
        let r = rng.next_u32() as u64;
        // branch-free: the comparisons are on random data
        let k: usize = self.thresholds.iter().map(|&c| (r >= c) as usize).sum();
        k.min(self.last)
    }
}

/// Message count `max(1, round(2^(n R)))`.
pub fn message_count(n: usize, rate: f64) -> usize {
    ((n as f64 * rate).exp2().round() as usize).max(1)
}

/// `(M1, M2)` for blocklength `n` and rates `(r1, r2)`, checked against
/// [`MAX_BLOCKLENGTH`] and [`CODEBOOK_GUARD`].
pub fn message_counts(n: usize, r1: f64, r2: f64) -> Result<(usize, usize)> {
    if !(r1 >= 0.0 && r2 >= 0.0 && r1.is_finite() && r2.is_finite()) {
        return Err(Error::OutOfRange(format!("rates must be finite and nonnegative, got ({r1}, {r2})")));
    }
    let (m1, m2) = (message_count(n, r1), message_count(n, r2));
    guard(n, m1, m2)?;
    Ok((m1, m2))
}

/// A realized codebook. Symbols are stored as bytes, sequences row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    scheme: Scheme,
    dist: Dist,
    n: usize,
    rates: (f64, f64),
    m1: usize,
    m2: usize,
    seed: u64,
    /// `u^n(m1)`, `m1`-major.
    u: Vec<u8>,
    /// `v^n(m2)`, UV only.
    v: Vec<u8>,
    /// `x^n(m1, m2)`, indexed `(m1 * M2 + m2) * n + i`.
    x: Vec<u8>,
}

fn check_alphabets(sizes: &[usize]) -> Result<()> {
    if sizes.iter().any(|&k| k > 256) {
        return Err(Error::ScaleGuard("alphabets above 256 symbols are not simulated".into()));
    }
    Ok(())
}

fn guard(n: usize, m1: usize, m2: usize) -> Result<()> {
    if n == 0 || n > MAX_BLOCKLENGTH {
        return Err(Error::ScaleGuard(format!("blocklength {n} outside 1..={MAX_BLOCKLENGTH}")));
    }
    match m1.checked_mul(m2) {
        Some(m) if m <= CODEBOOK_GUARD => Ok(()),
        _ => Err(Error::ScaleGuard(format!("M1 * M2 = {m1} * {m2} exceeds {CODEBOOK_GUARD}"))),
    }
}

impl Codebook {
    /// A UV codebook from explicit `u` and `v` sequences.
    pub fn from_uv_sequences(d: &UVDist, n: usize, u: &[Vec<usize>], v: &[Vec<usize>]) -> Result<Self> {
        let (m1, m2) = (u.len(), v.len());
        guard(n, m1, m2)?;
        check_alphabets(&[d.u_size(), d.v_size(), d.x_size()])?;
        let flat = |rows: &[Vec<usize>], k: usize| -> Result<Vec<u8>> {
            if rows.iter().any(|r| r.len() != n || r.iter().any(|&a| a >= k)) {
                return Err(Error::SizeMismatch(format!("sequences must have length {n} over {k} symbols")));
            }
            Ok(rows.iter().flatten().map(|&a| a as u8).collect())
        };
        let u = flat(u, d.u_size())?;
        let v = flat(v, d.v_size())?;
        let x = uv_codewords(d, n, m1, m2, &u, &v);
        let rates = ((m1 as f64).log2() / n as f64, (m2 as f64).log2() / n as f64);
        Ok(Self { scheme: Scheme::Uv, dist: Dist::Uv(d.clone()), n, rates, m1, m2, seed: 0, u, v, x })
    }

    /// A UX codebook from explicit cloud centers and codewords; `x[m1][m2]`.
    pub fn from_ux_sequences(d: &UXDist, n: usize, u: &[Vec<usize>], x: &[Vec<Vec<usize>>]) -> Result<Self> {
        let m1 = u.len();
        let m2 = x.first().map_or(0, Vec::len);
        guard(n, m1, m2)?;
        check_alphabets(&[d.u_size(), d.x_size()])?;
        if x.len() != m1 || x.iter().any(|c| c.len() != m2) {
            return Err(Error::SizeMismatch("x must hold M2 codewords per cloud".into()));
        }
        let ok = |r: &Vec<usize>, k: usize| r.len() == n && r.iter().all(|&a| a < k);
        if !u.iter().all(|r| ok(r, d.u_size())) || !x.iter().flatten().all(|r| ok(r, d.x_size())) {
            return Err(Error::SizeMismatch(format!("sequences must have length {n} within the alphabets")));
        }
        let u: Vec<u8> = u.iter().flatten().map(|&a| a as u8).collect();
        let xs: Vec<u8> = x.iter().flatten().flatten().map(|&a| a as u8).collect();
        let rates = ((m1 as f64).log2() / n as f64, (m2 as f64).log2() / n as f64);
        Ok(Self { scheme: Scheme::Ux, dist: Dist::Ux(d.clone()), n, rates, m1, m2, seed: 0, u, v: Vec::new(), x: xs })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dist(&self) -> &Dist {
        &self.dist
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nominal `(R1, R2)`.
    pub fn rates(&self) -> (f64, f64) {
        self.rates
    }

    /// `(log2 M1 / n, log2 M2 / n)`.
    pub fn realized_rates(&self) -> (f64, f64) {
        ((self.m1 as f64).log2() / self.n as f64, (self.m2 as f64).log2() / self.n as f64)
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn u_codeword(&self, m1: usize) -> &[u8] {
        &self.u[m1 * self.n..(m1 + 1) * self.n]
    }

    /// `v^n(m2)`; empty for UX codebooks.
    pub fn v_codeword(&self, m2: usize) -> &[u8] {
        self.v.get(m2 * self.n..(m2 + 1) * self.n).unwrap_or(&[])
    }

    pub fn x_codeword(&self, m1: usize, m2: usize) -> &[u8] {
        let k = (m1 * self.m2 + m2) * self.n;
        &self.x[k..k + self.n]
    }

    fn x_size(&self) -> usize {
        match &self.dist {
            Dist::Uv(d) => d.x_size(),
            Dist::Ux(d) => d.x_size(),
        }
    }
}

fn uv_codewords(d: &UVDist, n: usize, m1: usize, m2: usize, u: &[u8], v: &[u8]) -> Vec<u8> {
    let mut x = Vec::with_capacity(m1 * m2 * n);
    for a in 0..m1 {
        for b in 0..m2 {
            for i in 0..n {
                x.push(d.x(u[a * n + i] as usize, v[b * n + i] as usize) as u8);
            }
        }
    }
    x
}

/// Draws a codebook for `dist` with `M_k = max(1, round(2^(n R_k)))`.
pub fn generate_codebook(dist: &Dist, n: usize, r1: f64, r2: f64, seed: u64) -> Result<Codebook> {
    let (m1, m2) = message_counts(n, r1, r2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (scheme, u, v, x) = match dist {
        Dist::Uv(d) => {
            check_alphabets(&[d.u_size(), d.v_size(), d.x_size()])?;
            let su = Sampler::new(d.pu().probs());
            let sv = Sampler::new(d.pv().probs());
            let u: Vec<u8> = (0..m1 * n).map(|_| su.sample(&mut rng) as u8).collect();
            let v: Vec<u8> = (0..m2 * n).map(|_| sv.sample(&mut rng) as u8).collect();
            let x = uv_codewords(d, n, m1, m2, &u, &v);
            (Scheme::Uv, u, v, x)
        }
        Dist::Ux(d) => {
            check_alphabets(&[d.u_size(), d.x_size()])?;
            let nx = d.x_size();
            let pu = d.pu();
            let su = Sampler::new(&pu);
            let sx: Vec<Sampler> = d
                .pux()
                .probs()
                .chunks(nx)
                .zip(&pu)
                .map(|(row, &p)| {
                    let cond: Vec<f64> = if p > 0.0 { row.iter().map(|v| v / p).collect() } else { row.to_vec() };
                    Sampler::new(&cond)
                })
                .collect();
            let u: Vec<u8> = (0..m1 * n).map(|_| su.sample(&mut rng) as u8).collect();
            let mut x = Vec::with_capacity(m1 * m2 * n);
            for a in 0..m1 {
                let center = &u[a * n..(a + 1) * n];
                for _ in 0..m2 {
                    x.extend(center.iter().map(|&c| sx[c as usize].sample(&mut rng) as u8));
                }
            }
            (Scheme::Ux, u, Vec::new(), x)
        }
    };
    Ok(Codebook { scheme, dist: dist.clone(), n, rates: (r1, r2), m1, m2, seed, u, v, x })
}

/// Result of a decoding attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoded {
    Message(usize),
    /// No message passed the test.
    NoCandidate,
    /// This many messages passed the test.
    Ambiguous(usize),
}

impl Decoded {
    pub fn message(self) -> Option<usize> {
        match self {
            Decoded::Message(m) => Some(m),
            _ => None,
        }
    }
}

fn check_received(cb: &Codebook, ch: &BroadcastChannel, k: Receiver, y: &[usize]) -> Result<()> {
    if ch.x_size() != cb.x_size() {
        return Err(Error::SizeMismatch(format!("codebook has |X| = {}, channel has {}", cb.x_size(), ch.x_size())));
    }
    let ny = ch.receiver(k).0;
    if y.len() != cb.n || y.iter().any(|&b| b >= ny) {
        return Err(Error::SizeMismatch(format!("received sequence must have length {} over {ny} symbols", cb.n)));
    }
    Ok(())
}

/// `p(a, b, y)` for the decoding tuple: `(u, v, y)` under UV and
/// `(u, x, y)` under UX.
fn tuple_joint(cb: &Codebook, ch: &BroadcastChannel, k: Receiver) -> (usize, usize, usize, Vec<f64>) {
    let (ny, w) = ch.receiver(k);
    match &cb.dist {
        Dist::Uv(d) => {
            let (nu, nv) = (d.u_size(), d.v_size());
            let mut p = vec![0.0; nu * nv * ny];
            for u in 0..nu {
                for v in 0..nv {
                    let x = d.x(u, v);
                    for y in 0..ny {
                        p[(u * nv + v) * ny + y] = d.pu().get(u) * d.pv().get(v) * w[x * ny + y];
                    }
                }
            }
            (nu, nv, ny, p)
        }
        Dist::Ux(d) => {
            let (nu, nx) = (d.u_size(), d.x_size());
            let mut p = vec![0.0; nu * nx * ny];
            for u in 0..nu {
                for x in 0..nx {
                    for y in 0..ny {
                        p[(u * nx + x) * ny + y] = d.pux().probs()[u * nx + x] * w[x * ny + y];
                    }
                }
            }
            (nu, nx, ny, p)
        }
    }
}

/// Which `(m1, m2)` pairs are jointly typical with `y` at receiver `k`.
fn typical_pairs(cb: &Codebook, ch: &BroadcastChannel, k: Receiver, y: &[usize], eps: f64) -> Vec<bool> {
    let (_, nb, ny, p) = tuple_joint(cb, ch, k);
    let n = cb.n;
    let mut counts = vec![0u32; p.len()];
    let mut out = vec![false; cb.m1 * cb.m2];
    for a in 0..cb.m1 {
        let u = cb.u_codeword(a);
        for b in 0..cb.m2 {
            let second = match cb.scheme {
                Scheme::Uv => cb.v_codeword(b),
                Scheme::Ux => cb.x_codeword(a, b),
            };
            counts.iter_mut().for_each(|c| *c = 0);
            for i in 0..n {
                counts[(u[i] as usize * nb + second[i] as usize) * ny + y[i]] += 1;
            }
            out[a * cb.m2 + b] = typical_counts(&counts, &p, n, eps);
        }
    }
    out
}

fn unique(candidates: impl Iterator<Item = usize>) -> Decoded {
    let c: Vec<usize> = candidates.collect();
    match c.len() {
        0 => Decoded::NoCandidate,
        1 => Decoded::Message(c[0]),
        k => Decoded::Ambiguous(k),
    }
}

/// Simultaneous nonunique decoding of message 1 from `y1`.
pub fn decode_typicality_rx1(cb: &Codebook, ch: &BroadcastChannel, y1: &[usize], eps: f64) -> Result<Decoded> {
    check_received(cb, ch, Receiver::One, y1)?;
    let t = typical_pairs(cb, ch, Receiver::One, y1, eps);
    Ok(unique((0..cb.m1).filter(|&a| (0..cb.m2).any(|b| t[a * cb.m2 + b]))))
}

/// Simultaneous nonunique decoding of message 2 from `y2`.
pub fn decode_typicality_rx2(cb: &Codebook, ch: &BroadcastChannel, y2: &[usize], eps: f64) -> Result<Decoded> {
    check_received(cb, ch, Receiver::Two, y2)?;
    let t = typical_pairs(cb, ch, Receiver::Two, y2, eps);
    Ok(unique((0..cb.m2).filter(|&b| (0..cb.m1).any(|a| t[a * cb.m2 + b]))))
}

/// `p(y^n | x^n(m1, m2))` for every pair, `m1`-major. Stops multiplying at
/// the first zero factor.
fn likelihoods(cb: &Codebook, ch: &BroadcastChannel, k: Receiver, y: &[usize]) -> Vec<f64> {
    let (ny, w) = ch.receiver(k);
    let nx = cb.x_size();
    let n = cb.n;
    // table[i * nx + x] = p(y_i | x)
    let table: Vec<f64> = (0..n).flat_map(|i| (0..nx).map(move |x| (i, x))).map(|(i, x)| w[x * ny + y[i]]).collect();
    cb.x.chunks_exact(n)
        .map(|cw| {
            let mut l = 1.0;
            for (i, &x) in cw.iter().enumerate() {
                l *= table[i * nx + x as usize];
                if l == 0.0 {
                    break;
                }
            }
            l
        })
        .collect()
}

fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in scores.enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// `argmax_m1 sum_m2 p(y1 | x(m1, m2))`, ties toward the smallest index.
pub fn decode_ml_rx1(cb: &Codebook, ch: &BroadcastChannel, y1: &[usize]) -> Result<usize> {
    check_received(cb, ch, Receiver::One, y1)?;
    let l = likelihoods(cb, ch, Receiver::One, y1);
    Ok(argmax(l.chunks_exact(cb.m2).map(|r| r.iter().sum())))
}

/// `argmax_m2 sum_m1 p(y2 | x(m1, m2))`, ties toward the smallest index.
pub fn decode_ml_rx2(cb: &Codebook, ch: &BroadcastChannel, y2: &[usize]) -> Result<usize> {
    check_received(cb, ch, Receiver::Two, y2)?;
    let l = likelihoods(cb, ch, Receiver::Two, y2);
    Ok(argmax((0..cb.m2).map(|b| (0..cb.m1).map(|a| l[a * cb.m2 + b]).sum())))
}

/// `argmax_(m1, m2) p(y | x(m1, m2))` at receiver `k`, ties toward the
/// smallest `(m1, m2)` in lexicographic order.
pub fn decode_ml_joint(cb: &Codebook, ch: &BroadcastChannel, k: Receiver, y: &[usize]) -> Result<(usize, usize)> {
    check_received(cb, ch, k, y)?;
    let i = argmax(likelihoods(cb, ch, k, y).into_iter());
    Ok((i / cb.m2, i % cb.m2))
}

/// Error counts of [`estimate_error`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trials: usize,
    pub rx1_errors: usize,
    pub rx2_errors: usize,
    /// Trials where either receiver erred.
    pub joint_errors: usize,
    /// Typicality only: failures with no candidate, per receiver.
    pub no_candidate: (usize, usize),
    /// Typicality only: failures with several candidates, per receiver.
    pub ambiguous: (usize, usize),
    pub decoder: Decoder,
    pub m1: usize,
    pub m2: usize,
    pub nominal_rates: (f64, f64),
    pub realized_rates: (f64, f64),
}

impl TrialResult {
    pub fn rx1_rate(&self) -> f64 {
        ratio(self.rx1_errors, self.trials)
    }

    pub fn rx2_rate(&self) -> f64 {
        ratio(self.rx2_errors, self.trials)
    }

    pub fn joint_rate(&self) -> f64 {
        ratio(self.joint_errors, self.trials)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Parameters of [`estimate_error`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub trials: usize,
    pub decoder: Decoder,
    pub seed: u64,
}

#[derive(Default)]
struct Tally {
    rx1: usize,
    rx2: usize,
    joint: usize,
    none: (usize, usize),
    many: (usize, usize),
}

fn record(t: &mut Tally, d1: Decoded, d2: Decoded, m1: usize, m2: usize) {
    let bad1 = d1.message() != Some(m1);
    let bad2 = d2.message() != Some(m2);
    t.rx1 += bad1 as usize;
    t.rx2 += bad2 as usize;
    t.joint += (bad1 || bad2) as usize;
    t.none.0 += matches!(d1, Decoded::NoCandidate) as usize;
    t.none.1 += matches!(d2, Decoded::NoCandidate) as usize;
    t.many.0 += matches!(d1, Decoded::Ambiguous(_)) as usize;
    t.many.1 += matches!(d2, Decoded::Ambiguous(_)) as usize;
}

fn run_trial(dist: &Dist, ch: &BroadcastChannel, cfg: &SimConfig, t: u64) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t);
    let cb = generate_codebook(dist, cfg.n, cfg.r1, cfg.r2, rng.random())?;
    let m1 = rng.random_range(0..cb.m1);
    let m2 = rng.random_range(0..cb.m2);
    let rows: Vec<Sampler> = ch.transitions().chunks(ch.y1_size() * ch.y2_size()).map(Sampler::new).collect();
    let (mut y1, mut y2) = (Vec::with_capacity(cfg.n), Vec::with_capacity(cfg.n));
    for &x in cb.x_codeword(m1, m2) {
        let k = rows[x as usize].sample(&mut rng);
        y1.push(k / ch.y2_size());
        y2.push(k % ch.y2_size());
    }
    let (d1, d2) = match cfg.decoder {
        Decoder::Ml => (
            Decoded::Message(decode_ml_rx1(&cb, ch, &y1)?),
            Decoded::Message(decode_ml_rx2(&cb, ch, &y2)?),
        ),
        Decoder::Typicality { eps } => (
            decode_typicality_rx1(&cb, ch, &y1, eps)?,
            decode_typicality_rx2(&cb, ch, &y2, eps)?,
        ),
    };
    let mut tally = Tally::default();
    record(&mut tally, d1, d2, m1, m2);
    Ok(tally)
}

/// Ensemble-average error estimate: every trial draws a fresh codebook,
/// uniform messages and channel noise from its own stream of `seed`.
pub fn estimate_error(dist: &Dist, ch: &BroadcastChannel, cfg: &SimConfig) -> Result<TrialResult> {
    let x_size = match dist {
        Dist::Uv(d) => d.x_size(),
        Dist::Ux(d) => d.x_size(),
    };
    if x_size != ch.x_size() {
        return Err(Error::SizeMismatch(format!("distribution has |X| = {x_size}, channel has {}", ch.x_size())));
    }
    if let Decoder::Typicality { eps } = cfg.decoder {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::OutOfRange(format!("typicality eps must be positive, got {eps}")));
        }
    }
    let (m1, m2) = message_counts(cfg.n, cfg.r1, cfg.r2)?;
    let tallies: Vec<Tally> =
        (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(dist, ch, cfg, t)).collect::<Result<_>>()?;
    let mut sum = Tally::default();
    for t in tallies {
        sum.rx1 += t.rx1;
        sum.rx2 += t.rx2;
        sum.joint += t.joint;
        sum.none = (sum.none.0 + t.none.0, sum.none.1 + t.none.1);
        sum.many = (sum.many.0 + t.many.0, sum.many.1 + t.many.1);
    }
    let n = cfg.n as f64;
    Ok(TrialResult {
        trials: cfg.trials,
        rx1_errors: sum.rx1,
        rx2_errors: sum.rx2,
        joint_errors: sum.joint,
        no_candidate: sum.none,
        ambiguous: sum.many,
        decoder: cfg.decoder,
        m1,
        m2,
        nominal_rates: (cfg.r1, cfg.r2),
        realized_rates: ((m1 as f64).log2() / n, (m2 as f64).log2() / n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_bsc_bc, make_vector_bc};
    use crate::prob::Pmf;

    fn noiseless(k: usize) -> BroadcastChannel {
        let id: Vec<f64> = (0..k * k).map(|i| if i / k == i % k { 1.0 } else { 0.0 }).collect();
        BroadcastChannel::from_marginals(k, k, k, &id, &id).unwrap()
    }

    #[test]
    fn typicality_examples() {
        let j = JointPmf::from_pmf(&Pmf::uniform(2).unwrap());
        assert!(is_typical(&[&[0, 1, 1, 0]], &j, 1e-9).unwrap());
        assert!(!is_typical(&[&[0, 0, 0, 1]], &j, 0.4).unwrap());
        let j = JointPmf::from_pmf(&Pmf::new(vec![1.0, 0.0]).unwrap());
        assert!(!is_typical(&[&[0, 0, 1]], &j, 0.9).unwrap());
        let pair = JointPmf::new(vec![2, 2], vec![0.25; 4]).unwrap();
        assert!(is_typical(&[&[0, 0, 1, 1], &[0, 1, 0, 1]], &pair, 1e-9).unwrap());
        assert!(is_typical(&[&[0, 1]], &pair, 0.1).is_err());
    }

    #[test]
    fn codebook_examples() {
        let p0 = Pmf::point_mass(3, 2).unwrap();
        let d = UVDist::new(p0.clone(), p0, vec![0, 1, 2, 1, 0, 2, 3, 3, 1], 4).unwrap();
        let cb = generate_codebook(&Dist::Uv(d), 6, 0.5, 0.5, 1).unwrap();
        let first = cb.x_codeword(0, 0).to_vec();
        for a in 0..cb.m1() {
            for b in 0..cb.m2() {
                assert_eq!(cb.x_codeword(a, b), &first[..]);
            }
        }

        let d = UXDist::new(JointPmf::new(vec![1, 2], vec![0.3, 0.7]).unwrap()).unwrap();
        let cb = generate_codebook(&Dist::Ux(d), 8, 0.5, 0.5, 2).unwrap();
        assert!((0..cb.m1()).all(|a| cb.u_codeword(a).iter().all(|&u| u == 0)));

        let big = generate_codebook(&Dist::Ux(UXDist::random(&mut ChaCha8Rng::seed_from_u64(0), 2, 2, 1.0)), 12, 0.9, 0.9, 0);
        assert_eq!(big.unwrap().m1(), 1783);
        assert!(matches!(
            generate_codebook(&Dist::Ux(UXDist::random(&mut ChaCha8Rng::seed_from_u64(0), 2, 2, 1.0)), 16, 1.0, 0.5, 0),
            Err(Error::ScaleGuard(_))
        ));
        let a = generate_codebook(&cb.dist, 8, 0.5, 0.5, 9).unwrap();
        let b = generate_codebook(&cb.dist, 8, 0.5, 0.5, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symbol_frequencies_concentrate() {
        let d = UXDist::new(JointPmf::new(vec![2, 3], vec![0.1, 0.2, 0.2, 0.05, 0.05, 0.4]).unwrap()).unwrap();
        let cb = generate_codebook(&Dist::Ux(d.clone()), 20, 0.5, 0.5, 5).unwrap();
        let total = (cb.m1() * cb.m2() * cb.n()) as f64;
        let mut counts = [0.0; 3];
        for a in 0..cb.m1() {
            for b in 0..cb.m2() {
                for &x in cb.x_codeword(a, b) {
                    counts[x as usize] += 1.0;
                }
            }
        }
        // cloud centers are shared, so the effective sample is the centers
        let ucount = (cb.m1() * cb.n()) as f64;
        let ones = (0..cb.m1()).flat_map(|a| cb.u_codeword(a).to_vec()).filter(|&u| u == 1).count() as f64;
        let pu1 = 0.5;
        assert!((ones / ucount - pu1).abs() <= 3.0 * (pu1 * (1.0 - pu1) / ucount).sqrt());
        let px = d.px();
        for x in 0..3 {
            let sd = (px[x] * (1.0 - px[x]) / ucount).sqrt();
            assert!((counts[x] / total - px[x]).abs() <= 3.0 * sd, "{x}: {} vs {}", counts[x] / total, px[x]);
        }
    }

    #[test]
    fn typicality_decoding_examples() {
        let ch = noiseless(2);
        let d = UXDist::new(JointPmf::new(vec![1, 2], vec![0.5, 0.5]).unwrap()).unwrap();
        let x = vec![vec![vec![0, 1, 0, 1], vec![1, 1, 0, 0]], vec![vec![0, 0, 1, 1], vec![1, 0, 1, 0]]];
        let cb = Codebook::from_ux_sequences(&d, 4, &[vec![0; 4], vec![0; 4]], &x).unwrap();
        let (y, _) = (x[1][0].clone(), ());
        assert_eq!(decode_typicality_rx1(&cb, &ch, &y, 0.01).unwrap(), Decoded::Message(1));
        assert_eq!(decode_typicality_rx2(&cb, &ch, &y, 0.01).unwrap(), Decoded::Message(0));

        // identical clouds cannot be told apart
        let x = vec![vec![vec![0, 1, 0, 1]], vec![vec![0, 1, 0, 1]]];
        let cb = Codebook::from_ux_sequences(&d, 4, &[vec![0; 4], vec![0; 4]], &x).unwrap();
        assert_eq!(decode_typicality_rx1(&cb, &ch, &[0, 1, 0, 1], 0.01).unwrap(), Decoded::Ambiguous(2));
        assert_eq!(decode_typicality_rx1(&cb, &ch, &[0, 0, 0, 0], 0.01).unwrap(), Decoded::NoCandidate);
    }

    #[test]
    fn vector_bc_distinct_rows_decode_exactly() {
        // U = X1, V = X2 uniform at n = 8, six messages each, rows balanced
        // so every tuple has the exact design type
        let ch = make_vector_bc();
        let half = Pmf::uniform(2).unwrap();
        let d = UVDist::new(half.clone(), half, vec![0, 1, 2, 3], 4).unwrap();
        let rows: Vec<Vec<usize>> = [0b00001111usize, 0b00110011, 0b01010101, 0b11110000, 0b11001100, 0b10101010]
            .iter()
            .map(|&r| (0..8).map(|i| (r >> i) & 1).collect())
            .collect();
        let cb = Codebook::from_uv_sequences(&d, 8, &rows, &rows).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let x = cb.x_codeword(a, b);
                let y1: Vec<usize> = x.iter().map(|&s| (s >> 1) as usize).collect();
                let y2: Vec<usize> = x.iter().map(|&s| (s & 1) as usize).collect();
                assert_eq!(decode_ml_rx1(&cb, &ch, &y1).unwrap(), a);
                assert_eq!(decode_ml_rx2(&cb, &ch, &y2).unwrap(), b);
                assert_eq!(decode_typicality_rx1(&cb, &ch, &y1, 0.2).unwrap().message(), Some(a));
            }
        }
    }

    #[test]
    fn ml_examples() {
        let ch = noiseless(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = UXDist::random(&mut rng, 2, 3, 1.0);
        let cb = generate_codebook(&Dist::Ux(d.clone()), 10, 0.2, 0.2, 4).unwrap();
        for a in 0..cb.m1() {
            for b in 0..cb.m2() {
                let y: Vec<usize> = cb.x_codeword(a, b).iter().map(|&s| s as usize).collect();
                let (ja, jb) = decode_ml_joint(&cb, &ch, Receiver::One, &y).unwrap();
                // exact match, or an earlier identical codeword
                assert_eq!(cb.x_codeword(ja, jb), cb.x_codeword(a, b));
                assert!((ja, jb) <= (a, b));
            }
        }
        let one = generate_codebook(&Dist::Ux(d), 10, 0.0, 0.0, 4).unwrap();
        assert_eq!(decode_ml_rx1(&one, &ch, &[1; 10]).unwrap(), 0);
        assert_eq!(decode_ml_rx2(&one, &ch, &[1; 10]).unwrap(), 0);
    }

    #[test]
    fn ml_matches_brute_force_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = BroadcastChannel::random(&mut rng, 2, 2, 2).unwrap();
        let d = UXDist::random(&mut rng, 2, 2, 1.0);
        for seed in 0..20 {
            let cb = generate_codebook(&Dist::Ux(d.clone()), 2, 0.5, 0.5, seed).unwrap();
            assert_eq!((cb.m1(), cb.m2()), (2, 2));
            for y in 0..4 {
                let y = [y >> 1, y & 1];
                // posterior of m1 under uniform messages, by enumeration
                let lik = |a: usize, b: usize, k: Receiver| -> f64 {
                    let (ny, w) = ch.receiver(k);
                    cb.x_codeword(a, b).iter().zip(&y).map(|(&x, &o)| w[x as usize * ny + o]).product()
                };
                let post1: Vec<f64> = (0..2).map(|a| (0..2).map(|b| 0.25 * lik(a, b, Receiver::One)).sum()).collect();
                let post2: Vec<f64> = (0..2).map(|b| (0..2).map(|a| 0.25 * lik(a, b, Receiver::Two)).sum()).collect();
                let pick = |p: &[f64]| if p[1] > p[0] { 1 } else { 0 };
                assert_eq!(decode_ml_rx1(&cb, &ch, &y).unwrap(), pick(&post1));
                assert_eq!(decode_ml_rx2(&cb, &ch, &y).unwrap(), pick(&post2));
            }
        }
    }

    #[test]
    fn zero_rates_never_err() {
        let ch = make_bsc_bc(0.1, 0.2).unwrap();
        let d = Dist::Ux(UXDist::random(&mut ChaCha8Rng::seed_from_u64(1), 2, 2, 1.0));
        let cfg = SimConfig { n: 8, r1: 0.0, r2: 0.0, trials: 50, decoder: Decoder::Ml, seed: 3 };
        assert_eq!(estimate_error(&d, &ch, &cfg).unwrap().joint_errors, 0);
        // a lone message can still fail the typicality test, never by ambiguity
        let cfg = SimConfig { decoder: Decoder::Typicality { eps: 0.2 }, ..cfg };
        let r = estimate_error(&d, &ch, &cfg).unwrap();
        assert_eq!(r.ambiguous, (0, 0));
        assert_eq!(r.no_candidate, (r.rx1_errors, r.rx2_errors));
    }

    #[test]
    fn estimates_are_reproducible() {
        let ch = make_bsc_bc(0.05, 0.1).unwrap();
        let d = Dist::Ux(UXDist::random(&mut ChaCha8Rng::seed_from_u64(2), 2, 2, 1.0));
        let cfg = SimConfig { n: 8, r1: 0.25, r2: 0.25, trials: 40, decoder: Decoder::Ml, seed: 11 };
        assert_eq!(estimate_error(&d, &ch, &cfg).unwrap(), estimate_error(&d, &ch, &cfg).unwrap());
        let cfg = SimConfig { trials: 0, ..cfg };
        assert_eq!(estimate_error(&d, &ch, &cfg).unwrap().joint_rate(), 0.0);
    }

    #[test]
    fn ml_not_worse_than_typicality() {
        let ch = make_bsc_bc(0.05, 0.1).unwrap().swapped();
        let pu = Pmf::uniform(2).unwrap();
        let d = Dist::Ux(UXDist::from_conditional(&pu, &[0.9, 0.1, 0.1, 0.9], 2).unwrap());
        let base = SimConfig { n: 12, r1: 0.15, r2: 0.15, trials: 300, decoder: Decoder::Ml, seed: 5 };
        let ml = estimate_error(&d, &ch, &base).unwrap();
        let ty = estimate_error(&d, &ch, &SimConfig { decoder: Decoder::Typicality { eps: 0.2 }, ..base }).unwrap();
        for (a, b) in [(ml.rx1_rate(), ty.rx1_rate()), (ml.rx2_rate(), ty.rx2_rate())] {
            let sd = (b.max(1.0 / 300.0) * (1.0 - b) / 300.0).sqrt();
            assert!(a <= b + 3.0 * sd, "ml {a} typicality {b}");
        }
    }

    #[test]
    fn uv_clouds_share_displacements() {
        let half = Pmf::uniform(2).unwrap();
        let d = UVDist::new(half.clone(), half, vec![0, 1, 1, 0], 2).unwrap();
        let cb = generate_codebook(&Dist::Uv(d), 12, 0.3, 0.3, 6).unwrap();
        for b in 0..cb.m2() {
            let pattern = |a: usize| -> Vec<u8> { cb.x_codeword(a, b).iter().zip(cb.u_codeword(a)).map(|(x, u)| x ^ u).collect() };
            let first = pattern(0);
            assert!((1..cb.m1()).all(|a| pattern(a) == first));
            assert_eq!(first, cb.v_codeword(b));
        }
    }

    #[test]
    fn ux_clouds_are_independent() {
        // 2 x 2 contingency table of same-position symbols in two clouds;
        // 10.83 is the chi-square(1) quantile at p = 0.001
        let chi2 = |cb: &Codebook| -> f64 {
            let mut t = [[0.0; 2]; 2];
            for b in 0..cb.m2() {
                for (&p, &q) in cb.x_codeword(0, b).iter().zip(cb.x_codeword(1, b)) {
                    t[p as usize][q as usize] += 1.0;
                }
            }
            let total: f64 = t.iter().flatten().sum();
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let e = (t[i][0] + t[i][1]) * (t[0][j] + t[1][j]) / total;
                    s += (t[i][j] - e).powi(2) / e;
                }
            }
            s
        };
        let ux = UXDist::new(JointPmf::new(vec![1, 2], vec![0.3, 0.7]).unwrap()).unwrap();
        let cb = generate_codebook(&Dist::Ux(ux), 20, 0.05, 0.6, 7).unwrap();
        assert_eq!(cb.m1(), 2);
        assert!(chi2(&cb) < 10.83, "{}", chi2(&cb));

        let uv = UVDist::new(Pmf::uniform(1).unwrap(), Pmf::new(vec![0.3, 0.7]).unwrap(), vec![0, 1], 2).unwrap();
        let cb = generate_codebook(&Dist::Uv(uv), 20, 0.05, 0.6, 7).unwrap();
        assert!(chi2(&cb) > 1000.0);
    }
}
