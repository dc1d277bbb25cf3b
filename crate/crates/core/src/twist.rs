//! Dehn twists of the slits about the curve `γ(v1, v2)`.
//!
//! A partner pair `(v1, v2)` of primitive vectors with both `cross(v_i, w) > 0` spans the
//! annulus `R1 ∪ R2`; twisting `k` times replaces `w` by `w + k(v1 + v2)` and regrows
//! each torus from its (unchanged) cylinder `C_i`.

use std::fmt;

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldgeom::{cross, enumerate_small_cross, Lattice, QuadExt, Vec2};
use crate::splitting::{frame_on, CylinderFrame, Splitting, Stratum};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartnerPair {
    pub v1: Vec2,
    pub v2: Vec2,
}

/// Number of twists licensed by a partner pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TwistCount {
    Finite(Integer),
    Unbounded,
}

impl TwistCount {
    pub fn at_least(&self, n: u32) -> bool {
        match self {
            TwistCount::Finite(m) => *m >= n,
            TwistCount::Unbounded => true,
        }
    }
}

impl fmt::Display for TwistCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwistCount::Finite(n) => write!(f, "{n}"),
            TwistCount::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for TwistCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwistCertificate {
    pub pair: PartnerPair,
    pub k: i64,
    pub w_new: Vec2,
    /// `|cross(v1, w)| + |cross(v1, w_new)|`.
    pub exchanged_area_bound: QuadExt,
    /// `2|cross(v1, w)| + |k|·|cross(v1, v2)|`.
    pub loose_area_bound: QuadExt,
    pub irrational_in_l1_after: bool,
}

impl TwistCertificate {
    pub fn exchanged_area_bound(&self) -> &QuadExt {
        &self.exchanged_area_bound
    }
}

/// Normalises signs so both `cross(v_i, w) > 0` and checks the pair defines `γ(v1, v2)`.
pub fn make_pair(s: &Splitting, v1: &Vec2, v2: &Vec2) -> Result<PartnerPair> {
    for (side, v) in [(1u8, v1), (2, v2)] {
        if !s.lattice(side).is_primitive(v) {
            return Err(Error::NotPrimitive(format!("{v} is not primitive in L{side}")));
        }
    }
    let c1 = cross(v1, &s.w);
    let c2 = cross(v2, &s.w);
    if c1.is_zero() || c2.is_zero() {
        return Err(Error::ParallelToW);
    }
    let v1 = if c1.signum() > 0 { v1.clone() } else { -v1 };
    let v2 = if c2.signum() > 0 { v2.clone() } else { -v2 };
    let (c1, c2) = (c1.abs(), c2.abs());
    // R1 = T1 \ C1 must leave a cylinder of positive height
    if c1 >= s.area(1) {
        return Err(Error::CrossTooLarge(1));
    }
    let a2 = s.area(2);
    match s.stratum {
        Stratum::H11 if c2 >= a2 => return Err(Error::CrossTooLarge(2)),
        Stratum::H2 if c2 > a2 => return Err(Error::CrossTooLarge(2)),
        Stratum::H2 if c2 != a2 => return Err(Error::H2Mismatch),
        _ => {}
    }
    Ok(PartnerPair { v1, v2 })
}

/// Largest `n` with `|cross(v1, v2)| < max(|cross(v1, w)|, |cross(v2, w)|) / n`.
pub fn max_twists(s: &Splitting, pair: &PartnerPair) -> TwistCount {
    let c = cross(&pair.v1, &pair.v2).abs();
    if c.is_zero() {
        return TwistCount::Unbounded;
    }
    let m = cross(&pair.v1, &s.w).abs().max(cross(&pair.v2, &s.w).abs());
    TwistCount::Finite((m / c).ceil() - 1u32)
}

pub fn twisted_w(s: &Splitting, pair: &PartnerPair, k: i64) -> Vec2 {
    &s.w + &(&pair.v1 + &pair.v2).scale_i64(k)
}

/// The twisted slits are realised by one saddle connection iff `w^k` stays on the
/// positive side of both `v1` and `v2`.
pub fn twist_allowed(s: &Splitting, pair: &PartnerPair, k: i64) -> Result<bool> {
    if k == 0 {
        return Err(Error::ZeroTwist);
    }
    let wk = twisted_w(s, pair, k);
    Ok(cross(&pair.v1, &wk).signum() > 0 && cross(&pair.v2, &wk).signum() > 0)
}

/// Both cylinder frames of a pair; the second may be degenerate in H(2).
pub fn frames(s: &Splitting, pair: &PartnerPair) -> Result<(CylinderFrame, CylinderFrame)> {
    let f1 = frame_on(&s.l1, &s.w, &pair.v1, false).map_err(|e| side_err(e, 1))?;
    let f2 = frame_on(&s.l2, &s.w, &pair.v2, s.stratum == Stratum::H2).map_err(|e| side_err(e, 2))?;
    Ok((f1, f2))
}

fn side_err(e: Error, side: u8) -> Error {
    match e {
        Error::CrossTooLarge(_) => Error::CrossTooLarge(side),
        e => e,
    }
}

fn regrow(old: &Lattice, v: &Vec2, u: &Vec2) -> Lattice {
    let new = Lattice { b1: v.clone(), b2: u.clone() };
    if old.same_lattice(&new) {
        old.clone()
    } else {
        new.reduced()
    }
}

/// Performs the twist. The new tori are `⟨v_i, u_i + k(v1 + v2)⟩`, reported in a reduced
/// basis (or the old basis when the lattice did not change).
pub fn apply_twist(s: &Splitting, pair: &PartnerPair, k: i64) -> Result<(Splitting, TwistCertificate)> {
    if !twist_allowed(s, pair, k)? {
        return Err(Error::NotAllowed(k.to_string()));
    }
    let (f1, f2) = frames(s, pair)?;
    let shift = (&pair.v1 + &pair.v2).scale_i64(k);
    let w_new = &s.w + &shift;
    let l1 = regrow(&s.l1, &pair.v1, &(&f1.u + &shift));
    let l2 = regrow(&s.l2, &pair.v2, &(&f2.u + &shift));
    let out = Splitting::new(l1, l2, w_new.clone(), s.stratum);
    out.ensure_valid().map_err(|e| Error::InvalidResult(e.to_string()))?;
    let c1w = cross(&pair.v1, &s.w).abs();
    let bound = &c1w + &cross(&pair.v1, &w_new).abs();
    let loose = c1w.mul_int(&Integer::from(2)) + cross(&pair.v1, &pair.v2).abs().mul_int(&Integer::from(k.abs()));
    let cert = TwistCertificate {
        pair: pair.clone(),
        k,
        w_new,
        exchanged_area_bound: bound,
        loose_area_bound: loose,
        irrational_in_l1_after: !out.is_rational_in(1),
    };
    Ok((out, cert))
}

pub fn exchanged_area_bound(cert: &TwistCertificate) -> QuadExt {
    cert.exchanged_area_bound.clone()
}

/// The sign `±1` for which `k = ±1, …, ±n` are all allowed, positive first.
pub fn twist_sign(s: &Splitting, pair: &PartnerPair, n: i64) -> Option<i64> {
    [1i64, -1].into_iter().find(|&sg| (1..=n).all(|k| twist_allowed(s, pair, sg * k).unwrap_or(false)))
}

/// Returns the first of the three same-sign twists that is irrational in `L1'`.
pub fn choose_irrational_twist(s: &Splitting, pair: &PartnerPair) -> Result<(i64, Splitting, TwistCertificate)> {
    if s.is_rational_in(1) {
        return Err(Error::Precondition("splitting must be irrational in L1".into()));
    }
    if !max_twists(s, pair).at_least(3) {
        return Err(Error::Precondition("pair must license at least three twists".into()));
    }
    let sign = twist_sign(s, pair, 3).ok_or(Error::LemmaViolation)?;
    for j in 1..=3 {
        let k = sign * j;
        let (t, cert) = apply_twist(s, pair, k)?;
        if cert.irrational_in_l1_after {
            return Ok((k, t, cert));
        }
    }
    Err(Error::LemmaViolation)
}

/// Cross products in the frame where `v1 = (1, 0)` and `w = (0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormalizedFrame {
    /// `cross(v1, w)`; every normalised cross product is the raw one divided by it.
    pub scale: QuadExt,
    pub theta: QuadExt,
    pub v0_cross_w: QuadExt,
    pub v1_cross_v2: QuadExt,
    pub v2_cross_w: QuadExt,
}

pub fn normalized_frame(s: &Splitting, pair: &PartnerPair) -> Result<NormalizedFrame> {
    let f1 = frame_on(&s.l1, &s.w, &pair.v1, false).map_err(|e| side_err(e, 1))?;
    let scale = cross(&pair.v1, &s.w);
    if scale.is_zero() {
        return Err(Error::ParallelToW);
    }
    Ok(NormalizedFrame {
        theta: &f1.theta / &scale,
        v0_cross_w: cross(&f1.v0, &s.w) / &scale,
        v1_cross_v2: cross(&pair.v1, &pair.v2) / &scale,
        v2_cross_w: cross(&pair.v2, &s.w) / &scale,
        scale,
    })
}

/// Slope `σ_k` of `w^k` and rotation number `ρ_k` of the first return to the base of `R1`,
/// both in the normalised frame.
pub fn slope_and_rotation(s: &Splitting, pair: &PartnerPair, k: i64) -> Result<(QuadExt, QuadExt)> {
    let nf = normalized_frame(s, pair)?;
    let sigma = slope(&nf, k)?;
    if sigma.is_zero() {
        return Err(Error::SigmaZero);
    }
    let rho = -(&nf.theta / &sigma) - &nf.v0_cross_w;
    Ok((sigma, rho))
}

fn slope(nf: &NormalizedFrame, k: i64) -> Result<QuadExt> {
    if k == 0 {
        return Err(Error::ZeroTwist);
    }
    let kq = QuadExt::int(k);
    let num = QuadExt::one() + &kq * &nf.v1_cross_v2;
    let den = &kq * &(QuadExt::one() + &nf.v2_cross_w);
    Ok(num / den)
}

/// Rational data recorded when none of the four twists produces an irrational splitting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VeechCertificate {
    pub theta: QuadExt,
    pub v0_cross_w: QuadExt,
    pub v1_cross_v2: QuadExt,
    pub v1_cross_v2p: QuadExt,
    pub v2_cross_w: QuadExt,
    pub v2p_cross_w: QuadExt,
    /// `(partner, k, ρ_k)`; `ρ_k` is absent when `σ_k = 0`.
    pub rotations: Vec<(u8, i64, Option<QuadExt>)>,
    /// Every recorded quantity is rational.
    pub all_rational: bool,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum InitialOutcome {
    Irrational { k: i64, partner: u8, splitting: Splitting, cert: TwistCertificate },
    Veech(VeechCertificate),
}

/// Tries the two allowed twists of each of the two partners of `v1`.
pub fn initial_irrational_search(s: &Splitting, v1: &Vec2, v2: &Vec2, v2p: &Vec2) -> Result<InitialOutcome> {
    if !(s.is_rational_in(1) && s.is_rational_in(2)) {
        return Err(Error::Precondition("splitting must be rational in both tori".into()));
    }
    let p = make_pair(s, v1, v2)?;
    let pp = make_pair(s, v1, v2p)?;
    if cross(&(&p.v2 - &pp.v2), &s.w).is_zero() {
        return Err(Error::Precondition("v2 - v2' must not be parallel to w".into()));
    }
    let mut rotations = Vec::new();
    for (idx, pair) in [(1u8, &p), (2u8, &pp)] {
        if !max_twists(s, pair).at_least(2) {
            return Err(Error::Precondition(format!("partner {idx} must license two twists")));
        }
        let sign = twist_sign(s, pair, 2).ok_or(Error::LemmaViolation)?;
        for j in 1..=2 {
            let k = sign * j;
            let (t, cert) = apply_twist(s, pair, k)?;
            if cert.irrational_in_l1_after {
                return Ok(InitialOutcome::Irrational { k, partner: idx, splitting: t, cert });
            }
            let rho = match slope_and_rotation(s, pair, k) {
                Ok((_, r)) => Some(r),
                Err(Error::SigmaZero) => None,
                Err(e) => return Err(e),
            };
            rotations.push((idx, k, rho));
        }
    }
    let nf = normalized_frame(s, &p)?;
    let nfp = normalized_frame(s, &pp)?;
    let mut cert = VeechCertificate {
        theta: nf.theta,
        v0_cross_w: nf.v0_cross_w,
        v1_cross_v2: nf.v1_cross_v2,
        v1_cross_v2p: nfp.v1_cross_v2,
        v2_cross_w: nf.v2_cross_w,
        v2p_cross_w: nfp.v2_cross_w,
        rotations,
        all_rational: false,
    };
    cert.all_rational = [&cert.theta, &cert.v0_cross_w, &cert.v1_cross_v2, &cert.v1_cross_v2p, &cert.v2_cross_w, &cert.v2p_cross_w]
        .iter()
        .all(|x| x.is_rational())
        && cert.rotations.iter().all(|(_, _, r)| r.as_ref().is_none_or(|r| r.is_rational()));
    Ok(InitialOutcome::Veech(cert))
}

/// Partners `v2 ∈ L2` of `v1` with coordinates bounded by `height_cap`, best first
/// (more twists, then smaller `|cross(v1, v2)|`, then shorter).
pub fn good_partners(s: &Splitting, v1: &Vec2, height_cap: u64) -> Result<Vec<(PartnerPair, TwistCount)>> {
    let a2 = s.area(2);
    let cands = enumerate_small_cross(&s.l2, &s.w, &a2, height_cap);
    let mut out = Vec::new();
    for v2 in cands {
        let Ok(pair) = make_pair(s, v1, &v2) else { continue };
        if out.iter().any(|(p, _): &(PartnerPair, TwistCount)| p == &pair) {
            continue;
        }
        let n = max_twists(s, &pair);
        if n.at_least(1) {
            out.push((pair, n));
        }
    }
    let key = |n: &TwistCount| match n {
        TwistCount::Unbounded => None,
        TwistCount::Finite(m) => Some(m.clone()),
    };
    out.sort_by(|(p, n), (q, m)| {
        let ord = match (key(n), key(m)) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, _) => std::cmp::Ordering::Less,
            (_, None) => std::cmp::Ordering::Greater,
            (Some(a), Some(b)) => b.cmp(&a),
        };
        ord.then_with(|| cross(&p.v1, &p.v2).abs().cmp(&cross(&q.v1, &q.v2).abs()))
            .then_with(|| p.v2.len_sq().cmp(&q.v2.len_sq()))
    });
    Ok(out)
}
