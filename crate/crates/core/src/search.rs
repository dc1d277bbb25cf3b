//! Bounded search for the pairs that drive a refinement step, and the refinement itself:
//! a twist whose new slit is within a prescribed angle of the old one and which moves
//! only a small area between the tori.
//!
//! Candidates for `v1` are the best approximations of the slit direction in `L1`, taken
//! in order of increasing height. The cap limits how many of them are examined, so a
//! larger cap only ever extends the search and never changes an answer already found.

use std::collections::VecDeque;

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldgeom::{cross, Lattice, QuadExt, SmallCrossStream, Vec2};
use crate::splitting::{Splitting, Stratum};
use crate::twist::{apply_twist, choose_irrational_twist, make_pair, max_twists, twist_sign, PartnerPair, TwistCertificate, TwistCount};

/// Upper bound on lattice points visited while listing partners of one `v1`.
const PARTNER_POINT_LIMIT: u64 = 1 << 20;
/// Smallest `ε′ / ε` tried before giving up.
const MAX_HALVINGS: u32 = 40;
/// Twists per pair considered when several children are wanted.
const MAX_EXTRA_TWISTS: i64 = 6;
/// Pairs examined per `ε′` when several children are wanted.
const MAX_PAIRS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineParams {
    pub eps: QuadExt,
    /// Starting `ε′`; defaults to `ε`.
    pub eps_prime: Option<QuadExt>,
    /// Number of `v1` candidates examined in the first round.
    pub height_cap: u64,
    pub cap_growth: u64,
    pub max_rounds: u32,
}

impl RefineParams {
    pub fn new(eps: QuadExt) -> Self {
        RefineParams { eps, eps_prime: None, height_cap: 10_000, cap_growth: 10, max_rounds: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.signum() <= 0 {
            return Err(Error::Precondition("eps must be positive".into()));
        }
        if let Some(e) = &self.eps_prime {
            if e.signum() <= 0 || *e > self.eps {
                return Err(Error::Precondition("eps' must lie in (0, eps]".into()));
            }
        }
        if self.height_cap == 0 || self.cap_growth < 2 || self.max_rounds == 0 {
            return Err(Error::Precondition("caps must be positive and growth at least 2".into()));
        }
        Ok(())
    }

    /// Candidates examined in the last round.
    pub fn total_cap(&self) -> u64 {
        (1..self.max_rounds).fold(self.height_cap, |c, _| c.saturating_mul(self.cap_growth))
    }

    fn round_of(&self, examined: u64) -> u32 {
        let mut cap = self.height_cap;
        for r in 1..=self.max_rounds {
            if examined <= cap {
                return r;
            }
            cap = cap.saturating_mul(self.cap_growth);
        }
        self.max_rounds
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub v1_examined: u64,
    pub round: u32,
}

/// A pair satisfying (i) `|v1 × w| < min(ε′/4, A1)` and (ii) `|v1 × v2| < ε′/6`,
/// `|v1 × v2| < max(|v1 × w|, |v2 × w|)/3`, with three same-sign twists available.
pub fn find_prop_key_pair(s: &Splitting, params: &RefineParams) -> Result<PartnerPair> {
    params.validate()?;
    let eps_prime = params.eps_prime.clone().unwrap_or_else(|| params.eps.clone());
    let (pairs, _) = prop_key_pairs(s, &eps_prime, params, 1)?;
    Ok(pairs.into_iter().next().expect("nonempty"))
}

/// Lazy enumeration of qualifying pairs in search order. For each `v1` the partner
/// proportional to `v1` (cross product zero, hence first in order) is tried before the
/// full partner region is listed.
pub struct PairSearch<'a> {
    s: &'a Splitting,
    eps_prime: QuadExt,
    bound1: QuadExt,
    eta: QuadExt,
    limit: u64,
    examined: u64,
    stream: SmallCrossStream,
    v1: Option<Vec2>,
    listed_all: bool,
    queue: VecDeque<Vec2>,
    seen: Vec<PartnerPair>,
}

impl<'a> PairSearch<'a> {
    pub fn new(s: &'a Splitting, eps_prime: &QuadExt, params: &RefineParams) -> Result<Self> {
        if s.is_rational_in(1) {
            return Err(Error::Precondition("splitting must be irrational in L1".into()));
        }
        let a1 = s.area(1);
        let quarter = eps_prime / &QuadExt::int(4);
        Ok(PairSearch {
            s,
            eps_prime: eps_prime.clone(),
            bound1: if quarter < a1 { quarter } else { a1 },
            eta: eps_prime / &QuadExt::int(6),
            limit: params.total_cap(),
            examined: 0,
            stream: SmallCrossStream::new(&s.l1, &s.w),
            v1: None,
            listed_all: true,
            queue: VecDeque::new(),
            seen: Vec::new(),
        })
    }

    pub fn stats(&self, params: &RefineParams) -> SearchStats {
        let e = self.examined.min(self.limit);
        SearchStats { v1_examined: e, round: params.round_of(e) }
    }

    pub fn next_pair(&mut self) -> Result<Option<PartnerPair>> {
        loop {
            if let Some(v2) = self.queue.pop_front() {
                let v1 = self.v1.as_ref().expect("v1 set");
                let Ok(pair) = make_pair(self.s, v1, &v2) else { continue };
                if satisfies_conditions(self.s, &pair, &self.eps_prime) && !self.seen.contains(&pair) {
                    self.seen.push(pair.clone());
                    return Ok(Some(pair));
                }
                continue;
            }
            if !self.listed_all {
                self.listed_all = true;
                let v1 = self.v1.as_ref().expect("v1 set");
                let shortcut = self.s.l2.primitive_along(v1);
                let all = partner_candidates(self.s, v1, &self.eta)?;
                self.queue = all.into_iter().filter(|v| shortcut.as_ref().is_none_or(|u| u != v && *u != -v)).collect();
                continue;
            }
            let Some(v1) = self.next_v1() else { return Ok(None) };
            self.queue.clear();
            if let Some(u) = self.s.l2.primitive_along(&v1) {
                self.queue.push_back(u);
            }
            self.v1 = Some(v1);
            self.listed_all = false;
        }
    }

    fn next_v1(&mut self) -> Option<Vec2> {
        while self.examined < self.limit {
            self.examined += self.stream.skip_above(&self.bound1, self.limit - self.examined);
            if self.examined >= self.limit {
                return None;
            }
            let (v1, _, c1) = self.stream.next()?;
            self.examined += 1;
            if c1 < self.bound1 && self.s.l1.is_primitive(&v1) {
                return Some(v1);
            }
        }
        None
    }
}

/// Up to `want` qualifying pairs in search order.
pub fn prop_key_pairs(s: &Splitting, eps_prime: &QuadExt, params: &RefineParams, want: usize) -> Result<(Vec<PartnerPair>, SearchStats)> {
    let mut search = PairSearch::new(s, eps_prime, params)?;
    let mut out = Vec::new();
    while out.len() < want {
        match search.next_pair()? {
            Some(p) => out.push(p),
            None => break,
        }
    }
    if out.is_empty() {
        let limit = params.total_cap();
        return Err(Error::SearchExhausted(format!("no pair among the first {limit} candidates for v1 at eps' = {eps_prime}")));
    }
    Ok((out, search.stats(params)))
}

/// Exact re-check of conditions (i) and (ii) plus the three-twist requirement.
pub fn satisfies_conditions(s: &Splitting, pair: &PartnerPair, eps_prime: &QuadExt) -> bool {
    let c1 = cross(&pair.v1, &s.w).abs();
    let c2 = cross(&pair.v2, &s.w).abs();
    let c12 = cross(&pair.v1, &pair.v2).abs();
    let six = QuadExt::int(6);
    let three = QuadExt::int(3);
    let cond_i = c1.mul_int(&Integer::from(4)) < *eps_prime && c1 < s.area(1) && c2 <= s.area(2);
    let big = if c1 > c2 { c1 } else { c2 };
    let cond_ii = &c12 * &six < *eps_prime && &c12 * &three < big;
    cond_i && cond_ii && max_twists(s, pair).at_least(3) && twist_sign(s, pair, 3).is_some()
}

/// Primitive `v2 ∈ L2` with `|v2 × w| ≤ A2` (`= A2` in H(2)) and `|v1 × v2| < η`, up to
/// sign, ordered by `|v1 × v2|`, squared length, then coordinates.
fn partner_candidates(s: &Splitting, v1: &Vec2, eta: &QuadExt) -> Result<Vec<Vec2>> {
    let mut found: Vec<Vec2> = Vec::new();
    if let Some(v) = s.l2.primitive_along(v1) {
        found.push(v);
    }
    match s.stratum {
        Stratum::H2 => h2_partners(s, v1, eta, &mut found)?,
        Stratum::H11 => region_partners(s, v1, eta, &mut found)?,
    }
    let mut keyed: Vec<(QuadExt, QuadExt, Vec2)> = Vec::new();
    for v in found {
        let v = if cross(&v, &s.w).signum() < 0 { -v } else { v };
        if keyed.iter().any(|(_, _, u)| *u == v) {
            continue;
        }
        keyed.push((cross(v1, &v).abs(), v.len_sq(), v));
    }
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.x.cmp(&b.2.x)).then_with(|| a.2.y.cmp(&b.2.y))
    });
    Ok(keyed.into_iter().map(|t| t.2).collect())
}

/// In H(2) the partners are exactly `u + m·w` with `{w, u}` a basis of `L2`.
fn h2_partners(s: &Splitting, v1: &Vec2, eta: &QuadExt, out: &mut Vec<Vec2>) -> Result<()> {
    let u = s.l2.complete_basis(&s.w)?;
    let base = cross(v1, &u);
    let step = cross(v1, &s.w);
    // |base + m·step| < η
    let e1 = (-eta - &base) / &step;
    let e2 = (eta - &base) / &step;
    let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
    let mut m = lo.floor() + 1u32;
    let top = hi.ceil();
    let mut visited = 0u64;
    while m < top {
        visited += 1;
        if visited > PARTNER_POINT_LIMIT {
            return Err(Error::SearchExhausted("too many partner candidates".into()));
        }
        out.push(&u + &s.w.scale_int(&m));
        m += 1;
    }
    Ok(())
}

/// Lattice points of `L2` in the parallelogram `|v × w| < A2`, `|v1 × v| < η`, listed
/// through a basis reduced for that parallelogram.
fn region_partners(s: &Splitting, v1: &Vec2, eta: &QuadExt, out: &mut Vec<Vec2>) -> Result<()> {
    let a2 = s.area(2);
    let c = cross(v1, &s.w);
    let to_unit = |v: &Vec2| Vec2::new(cross(v, &s.w) / &a2, cross(v1, v) / eta);
    // v = α·v1 + β·w with α = x·A2/c and β = y·η/c
    let from_unit = |p: &Vec2| &v1.scale(&(&p.x * &a2 / &c)) + &s.w.scale(&(&p.y * eta / &c));
    let red = Lattice::new(to_unit(&s.l2.b1), to_unit(&s.l2.b2))?.reduced();
    let (b1, b2) = (&red.b1, &red.b2);
    let det = cross(b1, b2).abs();
    // the coefficient n of the longer vector is bounded by |b1 × p| / det with |p|∞ < 1
    let n_max = ((b1.x.abs() + b1.y.abs()) / &det).floor();
    if n_max > PARTNER_POINT_LIMIT {
        return Err(Error::SearchExhausted("partner region too large".into()));
    }
    let one = QuadExt::one();
    let inside = |p: &Vec2| p.x.abs() < one && p.y.abs() < one;
    for m in [1i64, -1] {
        let p = b1.scale_i64(m);
        if inside(&p) {
            out.push(from_unit(&p));
        }
    }
    let mut visited = 0u64;
    let mut n = -n_max.clone();
    while n <= n_max {
        if n == 0 {
            n += 1;
            continue;
        }
        let (lo, hi) = open_range(&b2.x.mul_int(&n), &b1.x, &b2.y.mul_int(&n), &b1.y);
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if hi >= lo && Integer::from(&hi - &lo) > PARTNER_POINT_LIMIT - visited {
                return Err(Error::SearchExhausted("too many partner candidates".into()));
            }
            let mut m = lo;
            while m <= hi {
                visited += 1;
                if m.clone().gcd(&n) == 1 {
                    out.push(from_unit(&(&b1.scale_int(&m) + &b2.scale_int(&n))));
                }
                m += 1;
            }
        }
        n += 1;
    }
    Ok(())
}

/// Integer range of `m` with `|x0 + m·dx| < 1` and `|y0 + m·dy| < 1`.
fn open_range(x0: &QuadExt, dx: &QuadExt, y0: &QuadExt, dy: &QuadExt) -> (Option<Integer>, Option<Integer>) {
    let mut lo: Option<Integer> = None;
    let mut hi: Option<Integer> = None;
    for (c0, d) in [(x0, dx), (y0, dy)] {
        if d.is_zero() {
            if c0.abs() >= QuadExt::one() {
                return (Some(Integer::from(1)), Some(Integer::new()));
            }
            continue;
        }
        let e1 = (-QuadExt::one() - c0) / d;
        let e2 = (QuadExt::one() - c0) / d;
        let (a, b) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let l = a.floor() + 1u32;
        let h = b.ceil() - 1u32;
        lo = Some(match lo {
            Some(x) if x > l => x,
            _ => l,
        });
        hi = Some(match hi {
            Some(x) if x < h => x,
            _ => h,
        });
    }
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineMetrics {
    pub eps: QuadExt,
    pub eps_prime: QuadExt,
    /// `|w × w′| / (w · w′)`, an upper bound for the tangent of the angle.
    pub angle_tan_bound: QuadExt,
    pub area_bound: QuadExt,
    pub w_len_sq: QuadExt,
    /// The tori were exchanged because the input was rational in `L1`.
    pub swapped: bool,
    pub search: SearchStats,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub splitting: Splitting,
    pub cert: TwistCertificate,
    pub metrics: RefineMetrics,
}

pub fn refine(s: &Splitting, params: &RefineParams) -> Result<Refinement> {
    Ok(refine_many(s, params, 1)?.remove(0))
}

/// `count` refinements with pairwise distinct slit directions: further twists of the first
/// pair, then twists of later pairs in search order.
pub fn refine_many(s: &Splitting, params: &RefineParams, count: usize) -> Result<Vec<Refinement>> {
    params.validate()?;
    s.ensure_valid()?;
    if s.is_rational_in(1) {
        if s.stratum == Stratum::H11 && !s.is_rational_in(2) {
            let out = refine_many(&s.swapped(), params, count)?;
            return Ok(out.into_iter().map(unswap).collect());
        }
        return Err(Error::Precondition("splitting must be irrational".into()));
    }
    let mut eps_prime = params.eps_prime.clone().unwrap_or_else(|| params.eps.clone());
    let half = QuadExt::frac(1, 2);
    for _ in 0..MAX_HALVINGS {
        let mut search = PairSearch::new(s, &eps_prime, params)?;
        let mut out: Vec<Refinement> = Vec::new();
        let mut tried = 0;
        while tried < MAX_PAIRS {
            let Some(pair) = search.next_pair()? else { break };
            tried += 1;
            let stats = search.stats(params);
            for k in twist_candidates(s, &pair)? {
                if out.len() >= count {
                    break;
                }
                let Ok((t, cert)) = apply_twist(s, &pair, k) else { continue };
                if let Some(metrics) = post_checks(s, &t, &cert, params, &eps_prime, &stats) {
                    if out.iter().all(|r| !cross(&r.splitting.w, &t.w).is_zero()) {
                        out.push(Refinement { splitting: t, cert, metrics });
                    }
                }
            }
            if out.len() >= count {
                return Ok(out);
            }
            if count <= 1 {
                break;
            }
        }
        if tried == 0 {
            let limit = params.total_cap();
            return Err(Error::SearchExhausted(format!("no pair among the first {limit} candidates for v1 at eps' = {eps_prime}")));
        }
        eps_prime = &eps_prime * &half;
    }
    Err(Error::SearchExhausted("eps' shrank without passing the post-checks".into()))
}

/// Twist numbers in trial order. Twists move `w` towards `±(v1 + v2)`, so the sign that keeps
/// `w'` close to `w` goes first; the irrational twist of the three-twist argument leads when it
/// already has that sign.
fn twist_candidates(s: &Splitting, pair: &PartnerPair) -> Result<Vec<i64>> {
    let (k0, _, _) = choose_irrational_twist(s, pair)?;
    let pref = if s.w.dot(&(&pair.v1 + &pair.v2)).signum() < 0 { -1 } else { 1 };
    let top = match max_twists(s, pair) {
        TwistCount::Unbounded => MAX_EXTRA_TWISTS,
        TwistCount::Finite(n) => n.to_i64().unwrap_or(MAX_EXTRA_TWISTS).min(MAX_EXTRA_TWISTS),
    };
    let mut ks = Vec::new();
    if k0.signum() == pref {
        ks.push(k0);
    }
    ks.extend((1..=top).map(|j| pref * j).filter(|&k| k != k0));
    Ok(ks)
}

fn post_checks(
    s: &Splitting,
    t: &Splitting,
    cert: &TwistCertificate,
    params: &RefineParams,
    eps_prime: &QuadExt,
    stats: &SearchStats,
) -> Option<RefineMetrics> {
    if !cert.irrational_in_l1_after || cert.exchanged_area_bound >= params.eps {
        return None;
    }
    let (w, w2) = (&s.w, &t.w);
    let cr = cross(w, w2).abs();
    let dot = w.dot(w2);
    if dot.signum() <= 0 || cr >= &params.eps * &dot {
        return None;
    }
    let pair = &cert.pair;
    let cap = (cross(w, &pair.v1).abs() + cross(w, &pair.v2).abs()).mul_int(&Integer::from(cert.k.abs()));
    let w_len_sq = w2.len_sq();
    if cr > cap || w_len_sq <= w.len_sq() {
        return None;
    }
    Some(RefineMetrics {
        eps: params.eps.clone(),
        eps_prime: eps_prime.clone(),
        angle_tan_bound: cr / dot,
        area_bound: cert.exchanged_area_bound.clone(),
        w_len_sq,
        swapped: false,
        search: stats.clone(),
    })
}

fn unswap(mut r: Refinement) -> Refinement {
    r.splitting = r.splitting.swapped();
    let p = &mut r.cert.pair;
    std::mem::swap(&mut p.v1, &mut p.v2);
    r.cert.irrational_in_l1_after = !r.splitting.is_rational_in(1);
    r.metrics.swapped = true;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::demo_irrational;

    fn params(eps: QuadExt) -> RefineParams {
        RefineParams::new(eps)
    }

    #[test]
    fn demo_pairs_follow_convergents() {
        let s = demo_irrational().splitting;
        let mut p = params(QuadExt::frac(1, 2));
        assert_eq!(find_prop_key_pair(&s, &p).unwrap().v1, Vec2::ints(5, 7));
        p.eps_prime = Some(QuadExt::frac(1, 50));
        let pair = find_prop_key_pair(&s, &p).unwrap();
        assert_eq!(pair.v1, Vec2::ints(169, 239));
        assert_eq!(pair.v2, Vec2::ints(169, 239));
    }

    #[test]
    fn rational_input_rejected() {
        let s = crate::splitting::prop_new().splitting;
        assert!(matches!(find_prop_key_pair(&s, &params(QuadExt::frac(1, 2))), Err(Error::Precondition(_))));
    }

    #[test]
    fn demo_refine() {
        let s = demo_irrational().splitting;
        let r = refine(&s, &params(QuadExt::frac(1, 10))).unwrap();
        assert_eq!(r.cert.pair.v1, Vec2::ints(29, 41));
        assert!(r.metrics.area_bound < QuadExt::frac(1, 10));
        assert!(r.splitting.is_irrational());
        let loose = refine(&s, &params(QuadExt::one())).unwrap();
        assert_eq!(loose.metrics.search.round, 1);
    }

    #[test]
    fn tiny_eps_exhausts() {
        let s = demo_irrational().splitting;
        let p = RefineParams { height_cap: 3, max_rounds: 1, ..params(QuadExt::frac(1, 1_000_000)) };
        assert!(matches!(refine(&s, &p), Err(Error::SearchExhausted(_))));
    }

    #[test]
    fn h11_partners_found_off_the_shortcut() {
        // v1 ∈ Z² is never proportional to a vector of this skewed L2
        let l2 = Lattice::new(Vec2::new(QuadExt::one(), QuadExt::zero()), Vec2::new(QuadExt::sqrt(2), QuadExt::int(3))).unwrap();
        let s = Splitting::new(Lattice::z2(), l2, Vec2::new(QuadExt::one(), QuadExt::sqrt(2)), Stratum::H11);
        s.ensure_valid().unwrap();
        let p = params(QuadExt::frac(1, 2));
        let pair = find_prop_key_pair(&s, &p).unwrap();
        assert!(satisfies_conditions(&s, &pair, &QuadExt::frac(1, 2)));
        let r = refine(&s, &p).unwrap();
        assert!(r.metrics.area_bound < QuadExt::frac(1, 2));
    }
}
