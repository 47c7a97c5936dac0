//! Per-distribution rate regions of homogeneous (UV) and heterogeneous
//! (UX, VX) superposition coding.
//!
//! Every region is the intersection of what receiver 1 and receiver 2 can
//! decode. Each receiver region is built twice: as the union of two
//! polygons ("or" form) and from the `min` constraints. The two must
//! agree, which the tests check. Strict inequalities are replaced by their
//! closures throughout.

use std::fmt::Write as _;

use rand::Rng;
use serde::Deserialize;

use crate::channel::{fmt_float, BroadcastChannel, Entry, Receiver};
use crate::error::{Error, Result};
use crate::geom::{HalfPlane, Region2D};
use crate::prob::{random_simplex, JointPmf, Pmf};

pub const DIST_FORMAT: &str = "superpos-dist/1";

/// Largest function alphabet `|X|^|supp U|` the functional representation
/// will build.
pub const MAX_FUNCTION_ALPHABET: usize = 1 << 16;

/// `p(u) p(v)` with a deterministic symbol map `x(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UVDist {
    pu: Pmf,
    pv: Pmf,
    /// `x(u, v)` stored `u`-major.
    xmap: Vec<usize>,
    x_size: usize,
}

impl UVDist {
    pub fn new(pu: Pmf, pv: Pmf, xmap: Vec<usize>, x_size: usize) -> Result<Self> {
        let (nu, nv) = (pu.probs().len(), pv.probs().len());
        if xmap.len() != nu * nv {
            return Err(Error::SizeMismatch(format!("x-map has {} entries, |U||V| = {}", xmap.len(), nu * nv)));
        }
        if let Some(&x) = xmap.iter().find(|&&x| x >= x_size) {
            return Err(Error::SizeMismatch(format!("x-map symbol {x} outside |X| = {x_size}")));
        }
        Ok(Self { pu, pv, xmap, x_size })
    }

    /// Independent uniform-simplex `p(u)`, `p(v)` and a uniformly random map.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, u_size: usize, v_size: usize, x_size: usize) -> Self {
        let pu = Pmf::normalized(random_simplex(rng, u_size, 1.0)).expect("simplex point");
        let pv = Pmf::normalized(random_simplex(rng, v_size, 1.0)).expect("simplex point");
        let xmap = (0..u_size * v_size).map(|_| rng.random_range(0..x_size)).collect();
        Self { pu, pv, xmap, x_size }
    }

    pub fn u_size(&self) -> usize {
        self.pu.probs().len()
    }

    pub fn v_size(&self) -> usize {
        self.pv.probs().len()
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn pu(&self) -> &Pmf {
        &self.pu
    }

    pub fn pv(&self) -> &Pmf {
        &self.pv
    }

    pub fn xmap(&self) -> &[usize] {
        &self.xmap
    }

    pub fn x(&self, u: usize, v: usize) -> usize {
        self.xmap[u * self.v_size() + v]
    }

    /// `p(u, x)`, `u`-major.
    pub fn joint_ux(&self) -> Vec<f64> {
        let (nu, nv, nx) = (self.u_size(), self.v_size(), self.x_size);
        let mut out = vec![0.0; nu * nx];
        for u in 0..nu {
            for v in 0..nv {
                out[u * nx + self.x(u, v)] += self.pu.get(u) * self.pv.get(v);
            }
        }
        out
    }

    /// `p(v, x)`, `v`-major.
    pub fn joint_vx(&self) -> Vec<f64> {
        let (nu, nv, nx) = (self.u_size(), self.v_size(), self.x_size);
        let mut out = vec![0.0; nv * nx];
        for u in 0..nu {
            for v in 0..nv {
                out[v * nx + self.x(u, v)] += self.pu.get(u) * self.pv.get(v);
            }
        }
        out
    }

    pub fn px(&self) -> Vec<f64> {
        column_sums(&self.joint_ux(), self.x_size)
    }

    /// The same input law written as a UX distribution.
    pub fn to_ux(&self) -> UXDist {
        let pux = JointPmf::new(vec![self.u_size(), self.x_size], self.joint_ux()).expect("product of pmfs");
        UXDist { pux }
    }
}

/// A joint `p(u, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UXDist {
    pux: JointPmf,
}

impl UXDist {
    pub fn new(pux: JointPmf) -> Result<Self> {
        if pux.axes() != 2 {
            return Err(Error::Arity { expected: 2, got: pux.axes() });
        }
        Ok(Self { pux })
    }

    /// From `p(u)` and rows `p(x|u)`, stored `u`-major.
    pub fn from_conditional(pu: &Pmf, px_given_u: &[f64], x_size: usize) -> Result<Self> {
        let nu = pu.probs().len();
        if px_given_u.len() != nu * x_size {
            return Err(Error::SizeMismatch(format!("p(x|u) has {} entries, expected {}", px_given_u.len(), nu * x_size)));
        }
        for u in 0..nu {
            Pmf::new(px_given_u[u * x_size..(u + 1) * x_size].to_vec())?;
        }
        let probs = (0..nu * x_size).map(|i| pu.get(i / x_size) * px_given_u[i]).collect();
        Self::new(JointPmf::new(vec![nu, x_size], probs)?)
    }

    /// Joint drawn from the symmetric Dirichlet(`alpha`) law on the
    /// `|U||X|`-simplex.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, u_size: usize, x_size: usize, alpha: f64) -> Self {
        let w = random_simplex(rng, u_size * x_size, alpha);
        let pux = JointPmf::new(vec![u_size, x_size], renormalize(w)).expect("simplex point");
        Self { pux }
    }

    pub fn u_size(&self) -> usize {
        self.pux.shape()[0]
    }

    pub fn x_size(&self) -> usize {
        self.pux.shape()[1]
    }

    pub fn pux(&self) -> &JointPmf {
        &self.pux
    }

    pub fn pu(&self) -> Vec<f64> {
        let nx = self.x_size();
        self.pux.probs().chunks(nx).map(|r| r.iter().sum()).collect()
    }

    pub fn px(&self) -> Vec<f64> {
        column_sums(self.pux.probs(), self.x_size())
    }
}

fn renormalize(mut w: Vec<f64>) -> Vec<f64> {
    let t: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= t);
    w
}

fn column_sums(rows: &[f64], width: usize) -> Vec<f64> {
    let mut out = vec![0.0; width];
    for r in rows.chunks(width) {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    out
}

/// `I(X;Y)`, `I(X;Y|A)` and `I(A;Y)` for a joint `p(a, x)` sent through
/// `w = p(y|x)`.
#[derive(Debug, Clone, Copy)]
struct Terms {
    xy: f64,
    xy_given_a: f64,
    ay: f64,
}

fn terms(pax: &[f64], nx: usize, w: &[f64], ny: usize) -> Terms {
    let px = column_sums(pax, nx);
    let mut py = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            py[y] += px[x] * w[x * ny + y];
        }
    }
    // sum_x q(x) sum_y w(y|x) log w(y|x) / out(y)
    let info = |q: &[f64], out: &[f64]| -> f64 {
        let mut s = 0.0;
        for x in 0..nx {
            if q[x] <= 0.0 {
                continue;
            }
            for y in 0..ny {
                let p = w[x * ny + y];
                if p > 0.0 {
                    s += q[x] * p * (p / out[y]).log2();
                }
            }
        }
        s
    };
    let xy = info(&px, &py);
    let mut xy_given_a = 0.0;
    let mut ay = 0.0;
    let mut py_a = vec![0.0; ny];
    for row in pax.chunks(nx) {
        let pa: f64 = row.iter().sum();
        if pa <= 0.0 {
            continue;
        }
        py_a.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..nx {
            for y in 0..ny {
                py_a[y] += row[x] * w[x * ny + y];
            }
        }
        py_a.iter_mut().for_each(|v| *v /= pa);
        xy_given_a += info(row, &py_a);
        for y in 0..ny {
            if py_a[y] > 0.0 {
                ay += pa * py_a[y] * (py_a[y] / py[y]).log2();
            }
        }
    }
    Terms { xy: xy.max(0.0), xy_given_a: xy_given_a.max(0.0), ay: ay.max(0.0) }
}

fn check_x(ch: &BroadcastChannel, x_size: usize) -> Result<()> {
    if ch.x_size() != x_size {
        return Err(Error::SizeMismatch(format!("distribution has |X| = {x_size}, channel has {}", ch.x_size())));
    }
    Ok(())
}

fn cap(x_size: usize) -> f64 {
    (x_size as f64).log2()
}

/// Polygon cut by `hps` from the box `[0, cap]^2`.
fn polygon(cap: f64, hps: &[HalfPlane]) -> Region2D {
    let mut all = hps.to_vec();
    all.push(HalfPlane::r1_at_most(cap));
    all.push(HalfPlane::r2_at_most(cap));
    Region2D::from_halfplanes(&all).expect("capped constraint set is bounded")
}

/// Mutual-information terms of a UV distribution, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiBundle {
    pub i_u_y1: f64,
    pub i_v_y2: f64,
    pub i_x_y1: f64,
    pub i_x_y2: f64,
    pub i_x_y1_given_u: f64,
    pub i_x_y1_given_v: f64,
    pub i_x_y2_given_u: f64,
    pub i_x_y2_given_v: f64,
}

impl MiBundle {
    /// Receiver regions as unions, capped at `cap` bits per axis.
    pub fn region(&self, cap: f64) -> Region2D {
        use HalfPlane as H;
        let rx1 = polygon(cap, &[H::r1_at_most(self.i_u_y1)])
            .union(&polygon(cap, &[H::sum_at_most(self.i_x_y1), H::r1_at_most(self.i_x_y1_given_v)]));
        let rx2 = polygon(cap, &[H::r2_at_most(self.i_v_y2)])
            .union(&polygon(cap, &[H::sum_at_most(self.i_x_y2), H::r2_at_most(self.i_x_y2_given_u)]));
        rx1.intersect(&rx2)
    }

    /// Receiver regions from `R1 <= I(X;Y1|V)`, `R1 + min(R2, I(X;Y1|U)) <= I(X;Y1)`
    /// and the mirrored pair.
    pub fn region_minform(&self, cap: f64) -> Region2D {
        use HalfPlane as H;
        let r1 = H::r1_at_most(self.i_x_y1_given_v);
        let rx1 = polygon(cap, &[r1, H::sum_at_most(self.i_x_y1)])
            .union(&polygon(cap, &[r1, H::r1_at_most((self.i_x_y1 - self.i_x_y1_given_u).max(0.0))]));
        let r2 = H::r2_at_most(self.i_x_y2_given_u);
        let rx2 = polygon(cap, &[r2, H::sum_at_most(self.i_x_y2)])
            .union(&polygon(cap, &[r2, H::r2_at_most((self.i_x_y2 - self.i_x_y2_given_v).max(0.0))]));
        rx1.intersect(&rx2)
    }
}

/// Mutual-information terms of a UX distribution, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UxMiBundle {
    pub i_u_y1: f64,
    pub i_u_y2: f64,
    pub i_x_y1: f64,
    pub i_x_y2: f64,
    pub i_x_y1_given_u: f64,
    pub i_x_y2_given_u: f64,
}

impl UxMiBundle {
    pub fn region(&self, cap: f64) -> Region2D {
        use HalfPlane as H;
        let rx1 = polygon(cap, &[H::r1_at_most(self.i_u_y1)]).union(&polygon(cap, &[H::sum_at_most(self.i_x_y1)]));
        rx1.intersect(&self.rx2(cap))
    }

    /// Receiver 1 from `R1 + min(R2, I(X;Y1|U)) <= I(X;Y1)`.
    pub fn region_minform(&self, cap: f64) -> Region2D {
        use HalfPlane as H;
        let rx1 = polygon(cap, &[H::sum_at_most(self.i_x_y1)])
            .union(&polygon(cap, &[H::r1_at_most((self.i_x_y1 - self.i_x_y1_given_u).max(0.0))]));
        rx1.intersect(&self.rx2(cap))
    }

    fn rx2(&self, cap: f64) -> Region2D {
        polygon(cap, &[HalfPlane::r2_at_most(self.i_x_y2_given_u), HalfPlane::sum_at_most(self.i_x_y2)])
    }

    /// Termwise `sum_k weights[k] * bundles[k]`.
    pub fn mix(weights: &[f64], bundles: &[UxMiBundle]) -> UxMiBundle {
        let mut m = UxMiBundle { i_u_y1: 0.0, i_u_y2: 0.0, i_x_y1: 0.0, i_x_y2: 0.0, i_x_y1_given_u: 0.0, i_x_y2_given_u: 0.0 };
        for (w, b) in weights.iter().zip(bundles) {
            m.i_u_y1 += w * b.i_u_y1;
            m.i_u_y2 += w * b.i_u_y2;
            m.i_x_y1 += w * b.i_x_y1;
            m.i_x_y2 += w * b.i_x_y2;
            m.i_x_y1_given_u += w * b.i_x_y1_given_u;
            m.i_x_y2_given_u += w * b.i_x_y2_given_u;
        }
        m
    }
}

pub fn mi_bundle_uv(ch: &BroadcastChannel, d: &UVDist) -> Result<MiBundle> {
    check_x(ch, d.x_size)?;
    let (pux, pvx, nx) = (d.joint_ux(), d.joint_vx(), d.x_size);
    let (n1, w1) = ch.receiver(Receiver::One);
    let (n2, w2) = ch.receiver(Receiver::Two);
    let u1 = terms(&pux, nx, w1, n1);
    let v1 = terms(&pvx, nx, w1, n1);
    let u2 = terms(&pux, nx, w2, n2);
    let v2 = terms(&pvx, nx, w2, n2);
    Ok(MiBundle {
        i_u_y1: u1.ay,
        i_v_y2: v2.ay,
        i_x_y1: u1.xy,
        i_x_y2: u2.xy,
        i_x_y1_given_u: u1.xy_given_a,
        i_x_y1_given_v: v1.xy_given_a,
        i_x_y2_given_u: u2.xy_given_a,
        i_x_y2_given_v: v2.xy_given_a,
    })
}

pub fn mi_bundle_ux(ch: &BroadcastChannel, d: &UXDist) -> Result<UxMiBundle> {
    check_x(ch, d.x_size())?;
    let (pux, nx) = (d.pux.probs(), d.x_size());
    let (n1, w1) = ch.receiver(Receiver::One);
    let (n2, w2) = ch.receiver(Receiver::Two);
    let t1 = terms(pux, nx, w1, n1);
    let t2 = terms(pux, nx, w2, n2);
    Ok(UxMiBundle {
        i_u_y1: t1.ay,
        i_u_y2: t2.ay,
        i_x_y1: t1.xy,
        i_x_y2: t2.xy,
        i_x_y1_given_u: t1.xy_given_a,
        i_x_y2_given_u: t2.xy_given_a,
    })
}

pub fn region_uv(ch: &BroadcastChannel, d: &UVDist) -> Result<Region2D> {
    Ok(mi_bundle_uv(ch, d)?.region(cap(d.x_size)))
}

pub fn region_uv_minform(ch: &BroadcastChannel, d: &UVDist) -> Result<Region2D> {
    Ok(mi_bundle_uv(ch, d)?.region_minform(cap(d.x_size)))
}

pub fn region_ux(ch: &BroadcastChannel, d: &UXDist) -> Result<Region2D> {
    Ok(mi_bundle_ux(ch, d)?.region(cap(d.x_size())))
}

pub fn region_ux_minform(ch: &BroadcastChannel, d: &UXDist) -> Result<Region2D> {
    Ok(mi_bundle_ux(ch, d)?.region_minform(cap(d.x_size())))
}

/// UX coding with the message roles exchanged: `d` is read as `p(v, x)`,
/// the cloud carries message 2.
pub fn region_vx(ch: &BroadcastChannel, d: &UXDist) -> Result<Region2D> {
    Ok(region_ux(&ch.swapped(), d)?.swap_axes())
}

/// A UV distribution with the same `p(u, x)` as `d`.
///
/// `V` ranges over the functions from the support of `U` to `X`, with
/// `q(v) = prod_u p(v(u) | u)` and `x(u, v) = v(u)`. Symbols `u` of zero
/// probability map every `v` to `x = 0`.
pub fn functional_representation(d: &UXDist) -> Result<UVDist> {
    let (nu, nx) = (d.u_size(), d.x_size());
    let pu = d.pu();
    let support: Vec<usize> = (0..nu).filter(|&u| pu[u] > 0.0).collect();
    let nv = (0..support.len()).try_fold(1usize, |acc, _| acc.checked_mul(nx)).filter(|&n| n <= MAX_FUNCTION_ALPHABET);
    let nv = nv.ok_or_else(|| {
        Error::ScaleGuard(format!("{nx}^{} functions exceed {MAX_FUNCTION_ALPHABET}", support.len()))
    })?;
    let cond = |u: usize, x: usize| d.pux.probs()[u * nx + x] / pu[u];
    let mut qv = vec![1.0; nv];
    let mut xmap = vec![0usize; nu * nv];
    for v in 0..nv {
        // digit k of v in base |X| is the image of support[k]
        let mut rest = v;
        for &u in &support {
            let x = rest % nx;
            rest /= nx;
            qv[v] *= cond(u, x);
            xmap[u * nv + v] = x;
        }
    }
    let pu = Pmf::new(pu).or_else(|_| Pmf::normalized(d.pu()))?;
    let pv = Pmf::new(qv.clone()).or_else(|_| Pmf::normalized(qv))?;
    UVDist::new(pu, pv, xmap, nx)
}

/// A distribution document: either family.
#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    Uv(UVDist),
    Ux(UXDist),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistDoc {
    format: String,
    kind: String,
    pu: Option<Vec<Entry>>,
    pv: Option<Vec<Entry>>,
    x_size: Option<usize>,
    xmap: Option<Vec<Vec<usize>>>,
    pux: Option<Vec<Vec<Entry>>>,
}

fn values(v: &[Entry]) -> Result<Vec<f64>> {
    v.iter().map(Entry::value).collect()
}

/// Parses a distribution document.
///
/// ```toml
/// format = "superpos-dist/1"
/// kind = "uv"            # or "ux"
/// pu = [0.5, 0.5]        # uv only
/// pv = [0.5, 0.5]        # uv only
/// x_size = 4             # uv only
/// xmap = [[0, 1], [2, 3]]  # uv only, one row per u
/// # pux = [[0.25, 0.25], [0.25, 0.25]]  # ux only, one row per u
/// ```
pub fn load_dist(text: &str) -> Result<Dist> {
    let doc: DistDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.format != DIST_FORMAT {
        return Err(Error::Parse(format!("unsupported format {:?}, expected {DIST_FORMAT:?}", doc.format)));
    }
    let missing = |k: &str| Error::Parse(format!("kind {:?} needs key {k:?}", doc.kind));
    let stray = |k: &str| Error::Parse(format!("key {k:?} does not apply to kind {:?}", doc.kind));
    match doc.kind.as_str() {
        "uv" => {
            if doc.pux.is_some() {
                return Err(stray("pux"));
            }
            let pu = Pmf::new(values(doc.pu.as_ref().ok_or_else(|| missing("pu"))?)?)?;
            let pv = Pmf::new(values(doc.pv.as_ref().ok_or_else(|| missing("pv"))?)?)?;
            let x_size = doc.x_size.ok_or_else(|| missing("x_size"))?;
            let rows = doc.xmap.as_ref().ok_or_else(|| missing("xmap"))?;
            if rows.len() != pu.probs().len() || rows.iter().any(|r| r.len() != pv.probs().len()) {
                return Err(Error::Parse("xmap must have |U| rows of |V| symbols".into()));
            }
            Ok(Dist::Uv(UVDist::new(pu, pv, rows.concat(), x_size)?))
        }
        "ux" => {
            for (k, present) in [("pu", doc.pu.is_some()), ("pv", doc.pv.is_some()), ("x_size", doc.x_size.is_some()), ("xmap", doc.xmap.is_some())] {
                if present {
                    return Err(stray(k));
                }
            }
            let rows = doc.pux.as_ref().ok_or_else(|| missing("pux"))?;
            let nx = rows.first().map_or(0, Vec::len);
            if nx == 0 || rows.iter().any(|r| r.len() != nx) {
                return Err(Error::Parse("pux must be a nonempty rectangular table".into()));
            }
            let mut probs = Vec::with_capacity(rows.len() * nx);
            for r in rows {
                probs.extend(values(r)?);
            }
            Ok(Dist::Ux(UXDist::new(JointPmf::new(vec![rows.len(), nx], probs)?)?))
        }
        other => Err(Error::Parse(format!("unknown kind {other:?}, expected \"uv\" or \"ux\""))),
    }
}

/// Canonical text form; `load_dist` reproduces every entry bit-exactly.
pub fn save_dist(d: &Dist) -> String {
    let list = |v: &[f64]| v.iter().map(|p| fmt_float(*p)).collect::<Vec<_>>().join(", ");
    let mut s = String::new();
    let _ = writeln!(s, "format = \"{DIST_FORMAT}\"");
    match d {
        Dist::Uv(d) => {
            let _ = writeln!(s, "kind = \"uv\"");
            let _ = writeln!(s, "pu = [{}]", list(d.pu.probs()));
            let _ = writeln!(s, "pv = [{}]", list(d.pv.probs()));
            let _ = writeln!(s, "x_size = {}", d.x_size);
            s.push_str("xmap = [\n");
            for row in d.xmap.chunks(d.v_size()) {
                let row: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "  [{}],", row.join(", "));
            }
            s.push_str("]\n");
        }
        Dist::Ux(d) => {
            let _ = writeln!(s, "kind = \"ux\"");
            s.push_str("pux = [\n");
            for row in d.pux.probs().chunks(d.x_size()) {
                let _ = writeln!(s, "  [{}],", list(row));
            }
            s.push_str("]\n");
        }
    }
    s
}

/// Total variation between the `p(u, x)` of two distributions of equal shape.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
