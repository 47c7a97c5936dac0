//! Per-distribution execution of the inclusion argument
//! `co(R_UX ∪ R_VX) ⊆ R_UV`, and the vector-channel example showing the
//! inclusion can be strict.
//!
//! For a UX distribution `p(u, x)` the argument builds two UV
//! distributions with one auxiliary equal to `X` (`q'`, `q''`), whose hull
//! contains the sum-rate triangle, and splits into three cases on the
//! ordering of `I(X;Y1)`, `I(X;Y2)`, `I(X;Y1|U)`, `I(X;Y2|U)`.

use std::fmt;

use rayon::prelude::*;

use crate::channel::{make_vector_bc, BroadcastChannel};
use crate::error::{Error, Result};
use crate::geom::{HalfPlane, Region2D, INCLUSION_EPS};
use crate::prob::Pmf;
use crate::scheme::{functional_representation, mi_bundle_uv, mi_bundle_ux, region_uv, region_ux, UVDist, UXDist};
use crate::search::{sweep_uv, sweep_ux, sweep_vx, SweepConfig};

/// Tolerance within which two mutual informations count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CaseTag {
    /// `I(X;Y1) >= I(X;Y2)`.
    Case1,
    /// `I(X;Y1) < I(X;Y2)` and `I(X;Y1|U) >= I(X;Y2|U)`.
    Case2,
    /// `I(X;Y1) < I(X;Y2)` and `I(X;Y1|U) < I(X;Y2|U)`.
    Case3,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseTag::Case1 => "case1",
            CaseTag::Case2 => "case2",
            CaseTag::Case3 => "case3",
        })
    }
}

fn cap(x_size: usize) -> f64 {
    (x_size as f64).log2()
}

fn polygon(cap: f64, hps: &[HalfPlane]) -> Region2D {
    let mut all = hps.to_vec();
    all.push(HalfPlane::r1_at_most(cap));
    all.push(HalfPlane::r2_at_most(cap));
    Region2D::from_halfplanes(&all).expect("capped constraint set is bounded")
}

fn identity_dist(px: Vec<f64>, u_is_x: bool) -> UVDist {
    let nx = px.len();
    let px = Pmf::new(px.clone()).or_else(|_| Pmf::normalized(px)).expect("marginal of a joint pmf");
    let one = Pmf::uniform(1).expect("singleton");
    let (pu, pv) = if u_is_x { (px, one) } else { (one, px) };
    UVDist::new(pu, pv, (0..nx).collect(), nx).expect("identity map")
}

/// `U = X` with `q'(x) = p(x)` and `V` trivial.
pub fn build_q_prime(d: &UXDist) -> UVDist {
    identity_dist(d.px(), true)
}

/// `V = X` with `q''(x) = p(x)` and `U` trivial.
pub fn build_q_doubleprime(d: &UXDist) -> UVDist {
    identity_dist(d.px(), false)
}

/// `R1 + R2 <= min(I(X;Y1), I(X;Y2))`.
pub fn sum_region(ch: &BroadcastChannel, d: &UXDist) -> Result<Region2D> {
    let b = mi_bundle_ux(ch, d)?;
    Ok(polygon(cap(d.x_size()), &[HalfPlane::sum_at_most(b.i_x_y1.min(b.i_x_y2))]))
}

/// The case, with ties resolved toward the earlier case.
pub fn classify_case(ch: &BroadcastChannel, d: &UXDist) -> Result<CaseTag> {
    Ok(applicable_cases(ch, d)?[0])
}

/// Every case whose defining inequalities hold within [`TIE_TOL`], in order.
pub fn applicable_cases(ch: &BroadcastChannel, d: &UXDist) -> Result<Vec<CaseTag>> {
    let b = mi_bundle_ux(ch, d)?;
    let mut out = Vec::new();
    if b.i_x_y1 >= b.i_x_y2 - TIE_TOL {
        out.push(CaseTag::Case1);
    }
    if b.i_x_y1 < b.i_x_y2 + TIE_TOL {
        if b.i_x_y1_given_u >= b.i_x_y2_given_u - TIE_TOL {
            out.push(CaseTag::Case2);
        }
        if b.i_x_y1_given_u < b.i_x_y2_given_u + TIE_TOL {
            out.push(CaseTag::Case3);
        }
    }
    Ok(out)
}

/// The two regions compared in case 3.
#[derive(Debug, Clone)]
pub struct Case3Regions {
    /// `R2 <= I(X;Y2|U)`, `R1 + min(R2, I(X;Y1|U)) <= I(X;Y1)`.
    pub ux_reduced: Region2D,
    /// The same constraints plus `R1 <= I(X;Y1|V)` under `q`, built directly.
    pub uv_reduced: Region2D,
    /// `region_uv(q)`.
    pub uv_of_q: Region2D,
    pub q: UVDist,
}

pub fn case3_regions(ch: &BroadcastChannel, d: &UXDist) -> Result<Case3Regions> {
    if !applicable_cases(ch, d)?.contains(&CaseTag::Case3) {
        return Err(Error::WrongCase("case3_regions"));
    }
    let b = mi_bundle_ux(ch, d)?;
    let q = functional_representation(d)?;
    let bq = mi_bundle_uv(ch, &q)?;
    let l = cap(d.x_size());
    let r2 = HalfPlane::r2_at_most(b.i_x_y2_given_u);
    let corner = HalfPlane::r1_at_most((b.i_x_y1 - b.i_x_y1_given_u).max(0.0));
    let sum = HalfPlane::sum_at_most(b.i_x_y1);
    let ux_reduced = polygon(l, &[r2, sum]).union(&polygon(l, &[r2, corner]));
    let r1 = HalfPlane::r1_at_most(bq.i_x_y1_given_v);
    let uv_reduced = polygon(l, &[r2, r1, sum]).union(&polygon(l, &[r2, r1, corner]));
    let uv_of_q = region_uv(ch, &q)?;
    Ok(Case3Regions { ux_reduced, uv_reduced, uv_of_q, q })
}

/// Outcome of running the argument on one `(channel, distribution)` pair.
#[derive(Debug, Clone)]
pub struct InclusionCertificate {
    /// Case by the strict rule (ties toward the earlier case).
    pub case_tag: CaseTag,
    /// Every case run; more than one when the inequalities tie.
    pub cases_run: Vec<CaseTag>,
    /// `q'`, `q''`, then `q` when case 3 was run.
    pub witnesses: Vec<UVDist>,
    /// `-t` for the least `t >= 0` at which the inclusion holds with slack
    /// `t`; the minimum over the cases run.
    pub inclusion_margin: f64,
    pub verdict: bool,
    /// Slack needed for `co(R_UV(q') ∪ R_UV(q''))` to cover the sum region.
    pub sum_step_gap: f64,
    /// Case 3 only: area between `ux_reduced` and `region_ux(d)`.
    pub ux_reduced_area_diff: Option<f64>,
    /// Case 3 only: area between `uv_reduced` and `uv_of_q`.
    pub uv_reduced_area_diff: Option<f64>,
}

pub fn verify_inclusion(ch: &BroadcastChannel, d: &UXDist) -> Result<InclusionCertificate> {
    let cases = applicable_cases(ch, d)?;
    let r = region_ux(ch, d)?;
    let qp = build_q_prime(d);
    let qpp = build_q_doubleprime(d);
    let rqp = region_uv(ch, &qp)?;
    let sum = sum_region(ch, d)?;
    let sum_step_gap = Region2D::convex_hull(&[&rqp, &region_uv(ch, &qpp)?]).inclusion_gap(&sum);
    let mut witnesses = vec![qp, qpp];
    let mut gap: f64 = 0.0;
    let (mut ux_reduced_area_diff, mut uv_reduced_area_diff) = (None, None);
    for &c in &cases {
        let outer = match c {
            CaseTag::Case1 | CaseTag::Case2 => sum.clone(),
            CaseTag::Case3 => {
                let c3 = case3_regions(ch, d)?;
                ux_reduced_area_diff = Some(c3.ux_reduced.symmetric_difference_area(&r));
                uv_reduced_area_diff = Some(c3.uv_reduced.symmetric_difference_area(&c3.uv_of_q));
                let outer = Region2D::convex_hull(&[&c3.uv_of_q, &rqp]);
                witnesses.push(c3.q);
                outer
            }
        };
        gap = gap.max(outer.inclusion_gap(&r));
    }
    Ok(InclusionCertificate {
        case_tag: cases[0],
        cases_run: cases,
        witnesses,
        inclusion_margin: -gap,
        verdict: gap <= INCLUSION_EPS,
        sum_step_gap,
        ux_reduced_area_diff,
        uv_reduced_area_diff,
    })
}

/// [`verify_inclusion`] over many pairs, in input order.
pub fn verify_batch(pairs: &[(BroadcastChannel, UXDist)]) -> Result<Vec<InclusionCertificate>> {
    pairs.par_iter().map(|(ch, d)| verify_inclusion(ch, d)).collect()
}

/// The vector-channel separation between the two schemes.
#[derive(Debug, Clone)]
pub struct StrictnessReport {
    /// Largest `R1 + R2` over `co(sweep_ux ∪ sweep_vx)`.
    pub max_sum_rate: f64,
    /// `max_sum_rate <= 1 + 1e-6`.
    pub sum_rate_bounded: bool,
    /// `U = X1`, `V = X2`, both uniform.
    pub witness: UVDist,
    pub witness_region: Region2D,
    /// Whether `(1, 1)` lies in `witness_region`.
    pub unit_pair_achievable: bool,
    pub uv_hull: Region2D,
    pub ux_vx_hull: Region2D,
    /// Area between `uv_hull` and `ux_vx_hull`.
    pub gap_area: f64,
}

impl StrictnessReport {
    pub fn holds(&self) -> bool {
        self.sum_rate_bounded && self.unit_pair_achievable && self.gap_area > 0.0
    }
}

/// Runs the separation example. `cfg` drives all three sweeps; the UV sweep
/// uses binary auxiliaries.
pub fn strictness_demo(cfg: &SweepConfig) -> Result<StrictnessReport> {
    let ch = make_vector_bc();
    let ux = sweep_ux(&ch, cfg)?;
    let vx = sweep_vx(&ch, cfg)?;
    let ux_vx_hull = Region2D::convex_hull(&[&ux, &vx]);
    let max_sum_rate = ux_vx_hull.max_weighted_sum(1.0, 1.0);

    let half = Pmf::uniform(2)?;
    // x = 2 x1 + x2 with x1 = u, x2 = v
    let witness = UVDist::new(half.clone(), half, vec![0, 1, 2, 3], 4)?;
    let witness_region = region_uv(&ch, &witness)?;
    let uv_hull = sweep_uv(&ch, &SweepConfig { u_size: 2, v_size: 2, ..cfg.clone() })?;
    let gap_area = uv_hull.symmetric_difference_area(&ux_vx_hull);
    Ok(StrictnessReport {
        max_sum_rate,
        sum_rate_bounded: max_sum_rate <= 1.0 + 1e-6,
        unit_pair_achievable: witness_region.contains((1.0, 1.0)),
        witness,
        witness_region,
        uv_hull,
        ux_vx_hull,
        gap_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_bsc_bc;
    use crate::prob::JointPmf;
    use crate::scheme::total_variation;
    use crate::search::sweep_uv_report;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ux(rows: &[f64], nu: usize, nx: usize) -> UXDist {
        UXDist::new(JointPmf::new(vec![nu, nx], rows.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn q_prime_examples() {
        let ch = make_vector_bc();
        let d = ux(&[0.25; 4], 1, 4);
        let qp = build_q_prime(&d);
        let r = region_uv(&ch, &qp).unwrap();
        assert!(r.approx_eq(&Region2D::from_points(&[(1.0, 0.0)]), 1e-12));
        let qpp = build_q_doubleprime(&d);
        let r = region_uv(&ch, &qpp).unwrap();
        assert!(r.approx_eq(&Region2D::from_points(&[(0.0, 1.0)]), 1e-12));

        let point = ux(&[0.0, 0.0, 1.0, 0.0], 1, 4);
        for q in [build_q_prime(&point), build_q_doubleprime(&point)] {
            assert_eq!(region_uv(&ch, &q).unwrap().max_weighted_sum(1.0, 1.0), 0.0);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let d = UXDist::random(&mut rng, 3, 3, 1.0);
            assert!(total_variation(&build_q_prime(&d).px(), &d.px()) <= 1e-12);
            assert!(total_variation(&build_q_doubleprime(&d).px(), &d.px()) <= 1e-12);
        }
    }

    #[test]
    fn sum_region_examples() {
        let ch = make_vector_bc();
        let d = ux(&[0.25; 4], 1, 4);
        let tri = Region2D::from_points(&[(1.0, 0.0), (0.0, 1.0)]);
        assert!(sum_region(&ch, &d).unwrap().approx_eq(&tri, 1e-12));
        assert_eq!(sum_region(&ch, &ux(&[1.0, 0.0, 0.0, 0.0], 1, 4)).unwrap().max_weighted_sum(1.0, 1.0), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let ch = BroadcastChannel::random(&mut rng, 3, 2, 3).unwrap();
            let d = UXDist::random(&mut rng, 2, 3, 1.0);
            let hull = Region2D::convex_hull(&[
                &region_uv(&ch, &build_q_prime(&d)).unwrap(),
                &region_uv(&ch, &build_q_doubleprime(&d)).unwrap(),
            ]);
            let sum = sum_region(&ch, &d).unwrap();
            assert!(hull.includes(&sum, 1e-12));
            // equality needs I(X;Y1) = I(X;Y2)
            let b = mi_bundle_ux(&ch, &d).unwrap();
            let (lo, hi) = (b.i_x_y1.min(b.i_x_y2), b.i_x_y1.max(b.i_x_y2));
            assert!((hull.area() - sum.area() - 0.5 * lo * (hi - lo)).abs() < 1e-9);
        }
    }

    #[test]
    fn classification() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = BroadcastChannel::random(&mut rng, 3, 3, 1).unwrap();
        let w = m.marginal1().to_vec();
        let sym = BroadcastChannel::from_marginals(3, 3, 3, &w, &w).unwrap();
        let d = UXDist::random(&mut rng, 2, 3, 1.0);
        assert_eq!(classify_case(&sym, &d).unwrap(), CaseTag::Case1);

        let bsc = make_bsc_bc(0.1, 0.2).unwrap();
        for _ in 0..100 {
            let d = UXDist::random(&mut rng, 2, 2, 1.0);
            assert_eq!(classify_case(&bsc, &d).unwrap(), CaseTag::Case1);
        }

        let flipped = bsc.swapped();
        for _ in 0..50 {
            let pu = Pmf::new(crate::prob::random_simplex(&mut rng, 2, 1.0)).unwrap();
            let px = crate::prob::random_simplex(&mut rng, 2, 1.0);
            let d = UXDist::from_conditional(&pu, &[px.clone(), px].concat(), 2).unwrap();
            let b = mi_bundle_ux(&flipped, &d).unwrap();
            let expect = if b.i_x_y1 >= b.i_x_y2 {
                CaseTag::Case1
            } else if b.i_x_y1_given_u >= b.i_x_y2_given_u {
                CaseTag::Case2
            } else {
                CaseTag::Case3
            };
            assert_eq!(classify_case(&flipped, &d).unwrap(), expect);
            assert_ne!(expect, CaseTag::Case1);
        }
    }

    #[test]
    fn ties_run_both_cases() {
        let ch = make_vector_bc();
        let d = ux(&[0.25; 4], 1, 4);
        assert_eq!(applicable_cases(&ch, &d).unwrap(), vec![CaseTag::Case1, CaseTag::Case2, CaseTag::Case3]);
        let cert = verify_inclusion(&ch, &d).unwrap();
        assert!(cert.verdict);
        assert_eq!(cert.witnesses.len(), 3);
    }

    #[test]
    fn case3_region_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut seen = 0;
        for _ in 0..400 {
            let ch = BroadcastChannel::random(&mut rng, 3, 3, 3).unwrap();
            let d = UXDist::random(&mut rng, 2, 3, 1.0);
            if classify_case(&ch, &d).unwrap() != CaseTag::Case3 {
                assert!(matches!(case3_regions(&ch, &d), Err(Error::WrongCase(_))) || applicable_cases(&ch, &d).unwrap().len() > 1);
                continue;
            }
            seen += 1;
            let c = case3_regions(&ch, &d).unwrap();
            assert!(c.ux_reduced.includes(&c.uv_reduced, 1e-12));
            let qp = region_uv(&ch, &build_q_prime(&d)).unwrap();
            assert!(Region2D::convex_hull(&[&c.uv_reduced, &qp]).includes(&c.ux_reduced, 1e-9));
        }
        assert!(seen > 10, "{seen}");
    }

    #[test]
    fn verify_examples() {
        let ch = make_vector_bc();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let d = UXDist::random(&mut rng, 2, 4, 0.5);
            let c = verify_inclusion(&ch, &d).unwrap();
            assert!(c.verdict, "{c:?}");
        }
        let m = BroadcastChannel::random(&mut rng, 2, 3, 1).unwrap();
        let w = m.marginal1().to_vec();
        let sym = BroadcastChannel::from_marginals(2, 3, 3, &w, &w).unwrap();
        let c = verify_inclusion(&sym, &ux(&[0.3, 0.7], 1, 2)).unwrap();
        assert_eq!(c.case_tag, CaseTag::Case1);
        assert!(c.verdict && c.inclusion_margin == 0.0);
    }

    #[test]
    fn seeded_uv_sweep_covers_ux_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cfg = SweepConfig { u_size: 2, v_size: 2, grid_steps: 2, random_samples: 0, rng_seed: 0, refine_iters: 0 };
        for _ in 0..5 {
            let ch = BroadcastChannel::random(&mut rng, 3, 2, 2).unwrap();
            let d = UXDist::random(&mut rng, 2, 3, 1.0);
            let seeds = [functional_representation(&d).unwrap(), build_q_prime(&d), build_q_doubleprime(&d)];
            let hull = sweep_uv_report(&ch, &cfg, &seeds).unwrap().region;
            assert!(hull.inclusion_gap(&region_ux(&ch, &d).unwrap()) <= 1e-6);
        }
    }

    #[test]
    fn wrong_case_is_rejected() {
        let ch = make_bsc_bc(0.1, 0.2).unwrap();
        let d = ux(&[0.25; 4], 2, 2);
        assert!(matches!(case3_regions(&ch, &d), Err(Error::WrongCase(_))));
    }
}
