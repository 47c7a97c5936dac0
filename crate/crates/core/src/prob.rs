//! Finite-alphabet probability mass functions and the entropy / mutual
//! information primitives every region formula is built from.
//!
//! All logarithms are base 2. `0 log 0` is taken as 0 and conditioning
//! symbols of zero probability are skipped.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::error::{Error, Result};

/// Normalization tolerance for every pmf in the crate.
pub const NORM_TOL: f64 = 1e-12;

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidPmf("empty support".into()));
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidPmf(format!("entry {i} = {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidPmf(format!("sums to {sum}")));
    }
    Ok(())
}

fn plogp_sum(probs: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// A pmf over `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs)?;
        Ok(Self { probs })
    }

    /// Divides nonnegative weights by their total.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPmf("weights must be nonnegative with positive total".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        Ok(Self { probs: vec![1.0 / n as f64; n] })
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::InvalidPmf(format!("point mass at {at} outside support of size {n}")));
        }
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

/// A dense joint pmf over a product alphabet, stored row-major (last axis
/// varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(shape: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidPmf(format!("bad axis sizes {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "axis sizes {shape:?} need {len} entries, got {}",
                probs.len()
            )));
        }
        check_probs(&probs)?;
        Ok(Self { shape, probs })
    }

    /// Builds a joint by evaluating `f` at every multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = shape.iter().product();
        let mut probs = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            probs.push(f(&idx));
            advance(&mut idx, &shape);
        }
        Self::new(shape, probs)
    }

    pub fn from_pmf(p: &Pmf) -> Self {
        Self { shape: vec![p.support_size()], probs: p.probs.clone() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn axes(&self) -> usize {
        self.shape.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for (&i, &s) in idx.iter().zip(&self.shape) {
            flat = flat * s + i;
        }
        self.probs[flat]
    }

    /// Sums out every axis not in `keep`. The result's axes follow the order
    /// given in `keep`, so this also permutes.
    pub fn marginalize(&self, keep: &[usize]) -> Result<JointPmf> {
        if keep.is_empty() {
            return Err(Error::Axes("empty keep-set".into()));
        }
        for (i, &a) in keep.iter().enumerate() {
            if a >= self.shape.len() {
                return Err(Error::Axes(format!("axis {a} out of range for {} axes", self.shape.len())));
            }
            if keep[..i].contains(&a) {
                return Err(Error::Axes(format!("axis {a} repeated")));
            }
        }
        let out_shape: Vec<usize> = keep.iter().map(|&a| self.shape[a]).collect();
        // stride of each kept axis inside the output array
        let mut out_stride = vec![0usize; self.shape.len()];
        let mut s = 1;
        for (k, &a) in keep.iter().enumerate().rev() {
            out_stride[a] = s;
            s *= out_shape[k];
        }
        let mut out = vec![0.0; s];
        let mut idx = vec![0usize; self.shape.len()];
        for &p in &self.probs {
            let flat: usize = idx.iter().zip(&out_stride).map(|(i, st)| i * st).sum();
            out[flat] += p;
            advance(&mut idx, &self.shape);
        }
        Ok(JointPmf { shape: out_shape, probs: out })
    }

    /// Joint entropy of all axes.
    pub fn entropy(&self) -> f64 {
        plogp_sum(self.probs.iter().copied())
    }

    pub fn to_pmf(&self) -> Result<Pmf> {
        if self.shape.len() != 1 {
            return Err(Error::Arity { expected: 1, got: self.shape.len() });
        }
        Ok(Pmf { probs: self.probs.clone() })
    }
}

fn advance(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// A point of the `n`-simplex drawn from the symmetric Dirichlet(`alpha`)
/// law. `alpha = 1` is uniform on the simplex; small `alpha` favors sparse
/// points.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, alpha: f64) -> Vec<f64> {
    let w: Vec<f64> = if alpha == 1.0 {
        (0..n).map(|_| Exp1.sample(rng)).collect()
    } else {
        let g = Gamma::new(alpha, 1.0).expect("positive shape");
        (0..n).map(|_| g.sample(rng)).collect()
    };
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() {
        w.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

pub fn entropy(p: &Pmf) -> f64 {
    plogp_sum(p.probs.iter().copied())
}

/// `I(A;B)` for a two-axis joint.
pub fn mutual_information(j: &JointPmf) -> Result<f64> {
    if j.axes() != 2 {
        return Err(Error::Arity { expected: 2, got: j.axes() });
    }
    let ha = j.marginalize(&[0])?.entropy();
    let hb = j.marginalize(&[1])?.entropy();
    Ok((ha + hb - j.entropy()).max(0.0))
}

/// `I(A;B|C)` for a three-axis joint, conditioning on the third axis.
///
/// Evaluated as `sum_c p(c) I(A;B | C=c)`, skipping zero-probability `c`.
pub fn conditional_mutual_information(j: &JointPmf) -> Result<f64> {
    if j.axes() != 3 {
        return Err(Error::Arity { expected: 3, got: j.axes() });
    }
    let (na, nb, nc) = (j.shape[0], j.shape[1], j.shape[2]);
    let mut total = 0.0;
    let mut slice = vec![0.0; na * nb];
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for c in 0..nc {
        let mut pc = 0.0;
        for a in 0..na {
            for b in 0..nb {
                let p = j.probs[(a * nb + b) * nc + c];
                slice[a * nb + b] = p;
                pc += p;
            }
        }
        if pc <= 0.0 {
            continue;
        }
        pa.iter_mut().for_each(|v| *v = 0.0);
        pb.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..na {
            for b in 0..nb {
                let p = slice[a * nb + b] / pc;
                pa[a] += p;
                pb[b] += p;
            }
        }
        let hab = plogp_sum(slice.iter().map(|p| p / pc));
        let mi = plogp_sum(pa.iter().copied()) + plogp_sum(pb.iter().copied()) - hab;
        total += pc * mi.max(0.0);
    }
    Ok(total.max(0.0))
}

/// `I(A;B|C)` between groups of axes of an arbitrary joint, via
/// `H(AC) + H(BC) - H(ABC) - H(C)`. An empty `c` gives `I(A;B)`.
pub fn group_mutual_information(j: &JointPmf, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Axes("mutual information needs nonempty groups".into()));
    }
    let h = |axes: Vec<usize>| -> Result<f64> {
        if axes.is_empty() {
            Ok(0.0)
        } else {
            Ok(j.marginalize(&axes)?.entropy())
        }
    };
    let cat = |x: &[usize], y: &[usize]| [x, y].concat();
    let v = h(cat(a, c))? + h(cat(b, c))? - h([a, b, c].concat())? - h(c.to_vec())?;
    Ok(v.max(0.0))
}
