//! Two-receiver discrete memoryless broadcast channel `p(y1, y2 | x)`.

use std::fmt::Write as _;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::prob::NORM_TOL;

pub const CHANNEL_FORMAT: &str = "superpos-channel/1";

/// Residual tolerance of the degradedness feasibility problem.
pub const DEGRADED_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastChannel {
    x_size: usize,
    y1_size: usize,
    y2_size: usize,
    /// `p(y1, y2 | x)`, indexed `[x][y1][y2]`.
    transitions: Vec<f64>,
    /// `p(y1 | x)`, indexed `[x][y1]`.
    marginal1: Vec<f64>,
    /// `p(y2 | x)`, indexed `[x][y2]`.
    marginal2: Vec<f64>,
}

impl BroadcastChannel {
    pub fn new(x_size: usize, y1_size: usize, y2_size: usize, transitions: Vec<f64>) -> Result<Self> {
        if x_size == 0 || y1_size == 0 || y2_size == 0 {
            return Err(Error::SizeMismatch("alphabet sizes must be positive".into()));
        }
        let row = y1_size * y2_size;
        if transitions.len() != x_size * row {
            return Err(Error::SizeMismatch(format!(
                "expected {} transition entries, got {}",
                x_size * row,
                transitions.len()
            )));
        }
        for x in 0..x_size {
            let r = &transitions[x * row..(x + 1) * row];
            if let Some(&value) = r.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::NegativeEntry { row: x, value });
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > NORM_TOL {
                return Err(Error::NotStochastic { row: x, sum });
            }
        }
        let mut marginal1 = vec![0.0; x_size * y1_size];
        let mut marginal2 = vec![0.0; x_size * y2_size];
        for x in 0..x_size {
            for a in 0..y1_size {
                for b in 0..y2_size {
                    let p = transitions[(x * y1_size + a) * y2_size + b];
                    marginal1[x * y1_size + a] += p;
                    marginal2[x * y2_size + b] += p;
                }
            }
        }
        Ok(Self { x_size, y1_size, y2_size, transitions, marginal1, marginal2 })
    }

    /// Conditionally independent outputs: `p(y1,y2|x) = p(y1|x) p(y2|x)`.
    pub fn from_marginals(x_size: usize, y1_size: usize, y2_size: usize, m1: &[f64], m2: &[f64]) -> Result<Self> {
        if m1.len() != x_size * y1_size || m2.len() != x_size * y2_size {
            return Err(Error::SizeMismatch("marginal tables do not match alphabet sizes".into()));
        }
        let mut t = Vec::with_capacity(x_size * y1_size * y2_size);
        for x in 0..x_size {
            for a in 0..y1_size {
                for b in 0..y2_size {
                    t.push(m1[x * y1_size + a] * m2[x * y2_size + b]);
                }
            }
        }
        Self::new(x_size, y1_size, y2_size, t)
    }

    /// Random channel with rows drawn uniformly from the simplex, receivers
    /// conditionally independent given the input.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, x_size: usize, y1_size: usize, y2_size: usize) -> Result<Self> {
        let mut rows = |n: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity(x_size * n);
            for _ in 0..x_size {
                let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
                let t: f64 = w.iter().sum();
                out.extend(w.iter().map(|v| v / t));
            }
            out
        };
        let m1 = rows(y1_size);
        let m2 = rows(y2_size);
        Self::from_marginals(x_size, y1_size, y2_size, &m1, &m2)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }
    pub fn y1_size(&self) -> usize {
        self.y1_size
    }
    pub fn y2_size(&self) -> usize {
        self.y2_size
    }
    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn p(&self, y1: usize, y2: usize, x: usize) -> f64 {
        self.transitions[(x * self.y1_size + y1) * self.y2_size + y2]
    }

    /// `p(y1|x)` table, row-major in `x`.
    pub fn marginal1(&self) -> &[f64] {
        &self.marginal1
    }

    /// `p(y2|x)` table, row-major in `x`.
    pub fn marginal2(&self) -> &[f64] {
        &self.marginal2
    }

    /// Output alphabet size and `p(y|x)` table for receiver 1 or 2.
    pub fn receiver(&self, k: Receiver) -> (usize, &[f64]) {
        match k {
            Receiver::One => (self.y1_size, &self.marginal1),
            Receiver::Two => (self.y2_size, &self.marginal2),
        }
    }

    /// Same channel with the receivers' roles exchanged.
    pub fn swapped(&self) -> Self {
        let mut t = Vec::with_capacity(self.transitions.len());
        for x in 0..self.x_size {
            for b in 0..self.y2_size {
                for a in 0..self.y1_size {
                    t.push(self.p(a, b, x));
                }
            }
        }
        Self {
            x_size: self.x_size,
            y1_size: self.y2_size,
            y2_size: self.y1_size,
            transitions: t,
            marginal1: self.marginal2.clone(),
            marginal2: self.marginal1.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    One,
    Two,
}

/// Binary-input vector channel: `X = (X1, X2)` encoded as `2*x1 + x2`,
/// receiver 1 sees `X1` and receiver 2 sees `X2`.
pub fn make_vector_bc() -> BroadcastChannel {
    let mut t = vec![0.0; 16];
    for x in 0..4 {
        let (x1, x2) = (x >> 1, x & 1);
        t[(x * 2 + x1) * 2 + x2] = 1.0;
    }
    BroadcastChannel::new(4, 2, 2, t).expect("vector channel is stochastic")
}

/// Binary input observed through BSC(eps1) at receiver 1 and BSC(eps2) at
/// receiver 2, conditionally independent.
pub fn make_bsc_bc(eps1: f64, eps2: f64) -> Result<BroadcastChannel> {
    if !(0.0..=0.5).contains(&eps1) || !(0.0..=0.5).contains(&eps2) || eps1 > eps2 {
        return Err(Error::OutOfRange(format!("need 0 <= eps1 <= eps2 <= 0.5, got ({eps1}, {eps2})")));
    }
    let bsc = |e: f64| vec![1.0 - e, e, e, 1.0 - e];
    BroadcastChannel::from_marginals(2, 2, 2, &bsc(eps1), &bsc(eps2))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    format: String,
    x_size: usize,
    y1_size: usize,
    y2_size: usize,
    transitions: Vec<Vec<Entry>>,
}

/// A probability written either as a TOML number or as a decimal / `a/b`
/// fraction string.
#[derive(Deserialize, Clone, Debug)]
#[serde(untagged)]
pub(crate) enum Entry {
    Num(f64),
    Text(String),
}

impl Entry {
    pub(crate) fn value(&self) -> Result<f64> {
        match self {
            Entry::Num(v) => Ok(*v),
            Entry::Text(s) => parse_decimal(s),
        }
    }
}

pub(crate) fn parse_decimal(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("cannot read probability {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            Ok(n / d)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Parses a channel document.
pub fn load_channel(text: &str) -> Result<BroadcastChannel> {
    let doc: ChannelDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.format != CHANNEL_FORMAT {
        return Err(Error::Parse(format!("unsupported format {:?}, expected {CHANNEL_FORMAT:?}", doc.format)));
    }
    if doc.transitions.len() != doc.x_size {
        return Err(Error::Parse(format!(
            "transitions has {} rows, x_size is {}",
            doc.transitions.len(),
            doc.x_size
        )));
    }
    let width = doc.y1_size * doc.y2_size;
    let mut t = Vec::with_capacity(doc.x_size * width);
    for (x, row) in doc.transitions.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Parse(format!("row x={x} has {} entries, expected {width}", row.len())));
        }
        for e in row {
            t.push(e.value()?);
        }
    }
    BroadcastChannel::new(doc.x_size, doc.y1_size, doc.y2_size, t)
}

/// Canonical text form; `load_channel` reproduces every entry bit-exactly.
pub fn save_channel(ch: &BroadcastChannel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format = \"{CHANNEL_FORMAT}\"");
    let _ = writeln!(s, "x_size = {}", ch.x_size);
    let _ = writeln!(s, "y1_size = {}", ch.y1_size);
    let _ = writeln!(s, "y2_size = {}", ch.y2_size);
    let _ = writeln!(s, "# p(y1, y2 | x): one row per x, y1-major");
    s.push_str("transitions = [\n");
    let w = ch.y1_size * ch.y2_size;
    for x in 0..ch.x_size {
        let row: Vec<String> = ch.transitions[x * w..(x + 1) * w].iter().map(|v| fmt_float(*v)).collect();
        let _ = writeln!(s, "  [{}],", row.join(", "));
    }
    s.push_str("]\n");
    s
}

/// Shortest round-trip decimal that TOML reads back as the same float.
pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Outcome of the stochastic-degradedness test.
#[derive(Debug, Clone, PartialEq)]
pub enum Degradedness {
    /// `q(y2|y1)` indexed `[y1][y2]` with `p(y2|x) = sum_y1 q(y2|y1) p(y1|x)`.
    Degraded { kernel: Vec<f64> },
    NotDegraded { residual: f64 },
}

impl Degradedness {
    pub fn is_degraded(&self) -> bool {
        matches!(self, Degradedness::Degraded { .. })
    }
}

/// Decides whether receiver 2 is a stochastically degraded version of
/// receiver 1 by minimizing the L1 residual of the factorization over the
/// kernel simplex.
pub fn is_stochastically_degraded(ch: &BroadcastChannel) -> Degradedness {
    let (nx, n1, n2) = (ch.x_size, ch.y1_size, ch.y2_size);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let q: Vec<_> = (0..n1 * n2).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for a in 0..n1 {
        let terms: Vec<_> = (0..n2).map(|b| (q[a * n2 + b], 1.0)).collect();
        lp.add_constraint(&terms, ComparisonOp::Eq, 1.0);
    }
    for x in 0..nx {
        for b in 0..n2 {
            let plus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let minus = lp.add_var(1.0, (0.0, f64::INFINITY));
            let mut terms: Vec<_> = (0..n1).map(|a| (q[a * n2 + b], ch.marginal1[x * n1 + a])).collect();
            terms.push((plus, 1.0));
            terms.push((minus, -1.0));
            lp.add_constraint(&terms, ComparisonOp::Eq, ch.marginal2[x * n2 + b]);
        }
    }
    match lp.solve() {
        Ok(sol) if sol.objective() <= DEGRADED_TOL => {
            let kernel = q.iter().map(|v| sol[*v].max(0.0)).collect();
            Degradedness::Degraded { kernel }
        }
        Ok(sol) => Degradedness::NotDegraded { residual: sol.objective() },
        // the LP is always feasible (slack variables), so this is numerical trouble
        Err(_) => Degradedness::NotDegraded { residual: f64::NAN },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{mutual_information, JointPmf, Pmf};
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn mi_to(ch: &BroadcastChannel, px: &Pmf, k: Receiver) -> f64 {
        let (ny, m) = ch.receiver(k);
        let j = JointPmf::from_fn(vec![ch.x_size(), ny], |i| px.get(i[0]) * m[i[0] * ny + i[1]]).unwrap();
        mutual_information(&j).unwrap()
    }

    #[test]
    fn vector_bc_structure() {
        let ch = make_vector_bc();
        for x in 0..4 {
            assert_eq!(ch.p(x >> 1, x & 1, x), 1.0);
        }
        let u = Pmf::uniform(4).unwrap();
        assert!((mi_to(&ch, &u, Receiver::One) - 1.0).abs() < 1e-15);
        // both outputs together recover X
        let j = JointPmf::from_fn(vec![4, 4], |i| 0.25 * ch.p(i[1] >> 1, i[1] & 1, i[0])).unwrap();
        assert!((mutual_information(&j).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bsc_bc_examples() {
        let ch = make_bsc_bc(0.0, 0.0).unwrap();
        assert_eq!(ch.marginal1(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(ch.marginal2(), &[1.0, 0.0, 0.0, 1.0]);

        let ch = make_bsc_bc(0.5, 0.5).unwrap();
        let px = Pmf::new(vec![0.3, 0.7]).unwrap();
        assert!(mi_to(&ch, &px, Receiver::One).abs() < 1e-15);

        let ch = make_bsc_bc(0.1, 0.2).unwrap();
        let u = Pmf::uniform(2).unwrap();
        assert!((mi_to(&ch, &u, Receiver::One) - 0.5310).abs() < 5e-5);
        assert!((mi_to(&ch, &u, Receiver::Two) - 0.2781).abs() < 5e-5);

        assert!(make_bsc_bc(0.3, 0.2).is_err());
        assert!(make_bsc_bc(-0.1, 0.2).is_err());
        assert!(make_bsc_bc(0.1, 0.6).is_err());
    }

    #[test]
    fn document_round_trip() {
        let ch = make_vector_bc();
        let text = save_channel(&ch);
        assert_eq!(load_channel(&text).unwrap(), ch);
        assert_eq!(save_channel(&load_channel(&text).unwrap()), text);

        let ch = make_bsc_bc(0.1, 0.2).unwrap();
        let text = save_channel(&ch);
        assert_eq!(save_channel(&load_channel(&text).unwrap()), text);
    }

    #[test]
    fn document_accepts_decimal_strings() {
        let doc = r#"
format = "superpos-channel/1"
x_size = 2
y1_size = 1
y2_size = 2
transitions = [["1/3", "2/3"], ["0.25", 0.75]]
"#;
        let ch = load_channel(doc).unwrap();
        assert_eq!(ch.p(0, 0, 0), 1.0 / 3.0);
        assert_eq!(ch.p(0, 1, 1), 0.75);
    }

    #[test]
    fn document_errors_name_the_row() {
        let doc = r#"
format = "superpos-channel/1"
x_size = 2
y1_size = 1
y2_size = 2
transitions = [[0.5, 0.5], [0.5, 0.499]]
"#;
        let err = load_channel(doc).unwrap_err();
        assert!(matches!(err, Error::NotStochastic { row: 1, .. }), "{err}");
        assert!(err.to_string().contains("x=1"));

        assert!(matches!(load_channel("x_size = 2"), Err(Error::Parse(_))));
        let extra = doc.replace("[0.5, 0.499]", "[0.5, 0.5]") + "bogus = 1\n";
        assert!(matches!(load_channel(&extra), Err(Error::Parse(_))));
        let wrong = doc.replace("[0.5, 0.499]", "[1.0]");
        assert!(load_channel(&wrong).unwrap_err().to_string().contains("x=1"));
    }

    #[test]
    fn degraded_bsc_cascade() {
        let ch = make_bsc_bc(0.1, 0.2).unwrap();
        let Degradedness::Degraded { kernel } = is_stochastically_degraded(&ch) else {
            panic!("BSC(0.1) -> BSC(0.2) is degraded");
        };
        // oracle: Q = P1^{-1} P2 for the 2x2 symmetric matrices
        let (e1, e2) = (0.1f64, 0.2f64);
        let det = (1.0 - e1) * (1.0 - e1) - e1 * e1;
        let q01 = ((1.0 - e1) * e2 - e1 * (1.0 - e2)) / det;
        assert!((q01 - 0.125).abs() < 1e-12);
        let expect = [1.0 - q01, q01, q01, 1.0 - q01];
        for (k, e) in kernel.iter().zip(expect) {
            assert!((k - e).abs() < 1e-9, "{kernel:?}");
        }
    }

    #[test]
    fn vector_bc_not_degraded() {
        let d = is_stochastically_degraded(&make_vector_bc());
        let Degradedness::NotDegraded { residual } = d else { panic!("{d:?}") };
        // oracle: any q gives p(y2|x) = q(.|x1), which cannot match both x2 values;
        // the best L1 residual is 1 per (x1, y2) pair -> 4 in total
        assert!((residual - 4.0).abs() < 1e-9, "{residual}");
    }

    #[test]
    fn identical_marginals_are_degraded() {
        let m = [0.7, 0.2, 0.1, 0.1, 0.3, 0.6];
        let ch = BroadcastChannel::from_marginals(2, 3, 3, &m, &m).unwrap();
        let Degradedness::Degraded { kernel } = is_stochastically_degraded(&ch) else { panic!() };
        for x in 0..2 {
            for b in 0..3 {
                let v: f64 = (0..3).map(|a| kernel[a * 3 + b] * m[x * 3 + a]).sum();
                assert!((v - m[x * 3 + b]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn swap_is_involution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let ch = BroadcastChannel::random(&mut rng, 3, 2, 3).unwrap();
        let s = ch.swapped();
        assert_eq!(s.y1_size(), 3);
        assert_eq!(s.marginal1(), ch.marginal2());
        assert_eq!(s.swapped(), ch);
    }

    proptest! {
        #[test]
        fn random_channels_round_trip(seed in any::<u64>(), nx in 1usize..4, n1 in 1usize..4, n2 in 1usize..4) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let ch = BroadcastChannel::random(&mut rng, nx, n1, n2).unwrap();
            let back = load_channel(&save_channel(&ch)).unwrap();
            prop_assert_eq!(back, ch);
        }
    }
}
