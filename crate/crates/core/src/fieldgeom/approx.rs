//! Certified float approximations, continued fractions of quadratic irrationals,
//! and small-cross enumeration.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rug::{Complete, Integer, Rational};

use super::{cross, Lattice, QuadExt, Vec2};

/// A dyadic approximation of a field element together with an exact error bound.
#[derive(Clone, Debug)]
pub struct FloatApprox {
    /// Nearest-ish `f64` (relative error at most `rel_err_bound + 2^-52`).
    pub value: f64,
    /// Dyadic rational with `|x − approx| ≤ abs_err`.
    pub approx: Rational,
    pub abs_err: Rational,
    /// Guaranteed bound on `|x − approx| / |x|`.
    pub rel_err_bound: f64,
}

fn pow2(k: i64) -> Rational {
    let one = Integer::from(1);
    if k >= 0 {
        Rational::from(one << k as u32)
    } else {
        Rational::from((Integer::from(1), one << (-k) as u32))
    }
}

/// Approximates `x` to within relative error `2^-precision_bits`.
pub fn to_float(x: &QuadExt, precision_bits: u32) -> FloatApprox {
    assert!(precision_bits >= 32, "precision_bits must be at least 32");
    let Some(e) = x.log2_estimate() else {
        return FloatApprox {
            value: 0.0,
            approx: Rational::new(),
            abs_err: Rational::new(),
            rel_err_bound: 0.0,
        };
    };
    let ax = x.abs();
    let mut k = precision_bits as i64 + 8 - e;
    loop {
        let scaled = &ax * &QuadExt::rational(pow2(k));
        let m = scaled.floor();
        if m.significant_bits() as i64 > precision_bits as i64 {
            let step = pow2(-k);
            let mut approx = Rational::from(m.clone()) * &step;
            if x.signum() < 0 {
                approx = -approx;
            }
            let rel = 1.0 / m.to_f64();
            return FloatApprox { value: approx.to_f64(), approx, abs_err: step, rel_err_bound: rel };
        }
        k += 16;
    }
}

fn log2_int(n: &Integer) -> f64 {
    let bits = n.significant_bits();
    if bits <= 64 {
        return n.to_f64().abs().log2();
    }
    let top = Integer::from(n >> (bits - 64));
    top.to_f64().abs().log2() + (bits - 64) as f64
}

fn log2_rat(q: &Rational) -> f64 {
    log2_int(q.numer()) - log2_int(q.denom())
}

/// `log2(2^a + 2^b)` and `log2(2^a − 2^b)` for `a ≥ b`.
fn log2_sum(a: f64, b: f64) -> f64 {
    a + (1.0 + (b - a).exp2()).log2()
}

fn log2_diff(a: f64, b: f64) -> f64 {
    a + (1.0 - (b - a).exp2()).log2()
}

/// `log2 |x|` with close to `f64` relative accuracy at any magnitude; `None` for zero.
pub fn log2_abs(x: &QuadExt) -> Option<f64> {
    if x.is_zero() {
        return None;
    }
    if x.is_rational() {
        return Some(log2_rat(x.a()));
    }
    let lb = log2_rat(x.b()) + 0.5 * (x.d() as f64).log2();
    if x.a().cmp0() == Ordering::Equal {
        return Some(lb);
    }
    let la = log2_rat(x.a());
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    if x.a().cmp0() == x.b().cmp0() {
        return Some(log2_sum(hi, lo));
    }
    if hi - lo > 2.0 {
        return Some(log2_diff(hi, lo));
    }
    // cancellation: |x| = |N(x)| / |conj(x)|
    Some(log2_rat(&x.norm()) - log2_sum(hi, lo))
}

/// Scientific rendering of `±2^log2` with `digits` significant digits.
pub fn sci_from_log2(negative: bool, log2: f64, digits: usize) -> String {
    let t = log2 * std::f64::consts::LOG10_2;
    let mut e10 = t.floor() as i64;
    let scale = 10f64.powi(digits as i32 - 1);
    let mut mant = (10f64.powf(t - e10 as f64) * scale).round();
    if mant >= 10.0 * scale {
        mant = (mant / 10.0).round();
        e10 += 1;
    }
    let digits_str = format!("{mant:.0}");
    let (head, tail) = digits_str.split_at(1);
    let tail = tail.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e10}")
    } else {
        format!("{sign}{head}.{tail}e{e10}")
    }
}

/// Scientific rendering of a field element with `digits` (at most 12) significant
/// digits, valid far beyond the `f64` exponent range.
pub fn to_sci_string(x: &QuadExt, digits: usize) -> String {
    assert!((1..=12).contains(&digits), "digits must lie in 1..=12");
    match log2_abs(x) {
        None => "0".into(),
        Some(l) => sci_from_log2(x.signum() < 0, l, digits),
    }
}

/// Continued-fraction expansion of a real quadratic irrational `(P + √D)/Q`.
///
/// Partial quotients use the integer recurrence, so each step costs a few
/// linear-time operations even for numbers with tens of thousands of digits.
#[derive(Clone, Debug)]
pub struct QuadCf {
    p: Integer,
    q: Integer,
    q_prev: Option<Integer>,
    d: Integer,
    root: Integer,
    // terminates when x is rational
    rational: Option<Rational>,
}

impl QuadCf {
    pub fn new(x: &QuadExt) -> Self {
        if x.is_rational() {
            return QuadCf {
                p: Integer::new(),
                q: Integer::from(1),
                q_prev: None,
                d: Integer::new(),
                root: Integer::new(),
                rational: Some(x.a().clone()),
            };
        }
        let (a, b, c) = x.integer_form();
        let n = b.clone().square() * x.d();
        let c2 = c.clone().square();
        let (p, dd, q) = if b.cmp0() == Ordering::Greater {
            ((&a * &c).complete(), n * &c2, c2)
        } else {
            (-(&a * &c).complete(), n * &c2, -c2)
        };
        let root = dd.clone().sqrt();
        QuadCf { p, q, q_prev: None, d: dd, root, rational: None }
    }

    /// Next partial quotient.
    pub fn next_quotient(&mut self) -> Option<Integer> {
        if let Some(r) = self.rational.take() {
            let (num, den) = r.into_numer_denom();
            if den == 0 {
                return None;
            }
            let (a, rem) = num.div_rem_floor(den.clone());
            if rem != 0 {
                self.rational = Some(Rational::from((den, rem)));
            } else {
                self.rational = None;
                self.q = Integer::new();
            }
            return Some(a);
        }
        if self.q == 0 {
            return None;
        }
        let a = if self.q.cmp0() == Ordering::Greater {
            (&self.p + &self.root).complete().div_rem_floor(self.q.clone()).0
        } else {
            let num = (-(&self.p)).complete() - &self.root - 1u32;
            num.div_rem_floor((-(&self.q)).complete()).0
        };
        let p_next = (&a * &self.q).complete() - &self.p;
        let q_next = match &self.q_prev {
            Some(qp) => {
                let diff = (&self.p - &p_next).complete();
                qp + &a * diff
            }
            None => {
                let num = &self.d - p_next.clone().square();
                num.div_exact(&self.q)
            }
        };
        self.q_prev = Some(std::mem::replace(&mut self.q, q_next));
        self.p = p_next;
        Some(a)
    }
}

/// Stream of convergents `p/q` (with `q ≥ 1`) of a field element.
#[derive(Clone, Debug)]
pub struct Convergents {
    cf: QuadCf,
    p: (Integer, Integer),
    q: (Integer, Integer),
}

impl Convergents {
    pub fn new(x: &QuadExt) -> Self {
        Convergents {
            cf: QuadCf::new(x),
            p: (Integer::new(), Integer::from(1)),
            q: (Integer::from(1), Integer::new()),
        }
    }

    /// Continues the expansion of `x` after the convergents `p.0/q.0`, `p.1/q.1`.
    fn resume(x: &QuadExt, p: (Integer, Integer), q: (Integer, Integer)) -> Self {
        let num = -(x.mul_int(&q.0) - QuadExt::from(p.0.clone()));
        let den = x.mul_int(&q.1) - QuadExt::from(p.1.clone());
        Convergents { cf: QuadCf::new(&(num / den)), p, q }
    }
}

impl Iterator for Convergents {
    type Item = (Integer, Integer);

    fn next(&mut self) -> Option<(Integer, Integer)> {
        let a = self.cf.next_quotient()?;
        let p = (&a * &self.p.1).complete() + &self.p.0;
        let q = (&a * &self.q.1).complete() + &self.q.0;
        self.p = (std::mem::replace(&mut self.p.1, p.clone()), p.clone());
        self.q = (std::mem::replace(&mut self.q.1, q.clone()), q.clone());
        Some((p, q))
    }
}

/// Primitive lattice vectors with a small cross product against `w`, in increasing
/// height of the lattice coordinate multiplying the basis vector less aligned with `w`.
///
/// These are the best approximations of the direction of `w` by `L`; every candidate
/// strictly improves `|cross(v, w)|` over all earlier ones.
pub struct SmallCrossStream {
    lattice: Lattice,
    w: Vec2,
    conv: Convergents,
    ahead: VecDeque<(Integer, Integer)>,
    ratio: QuadExt,
    swap: bool,
    emitted_first: bool,
    big_log2: i64,
}

impl SmallCrossStream {
    pub fn new(lattice: &Lattice, w: &Vec2) -> Self {
        let c1 = cross(&lattice.b1, w);
        let c2 = cross(&lattice.b2, w);
        // v = m b1 + n b2 has cross m c1 + n c2; approximate the larger coefficient's ratio
        let swap = c2.abs() < c1.abs();
        let (ratio, big) = if swap { (&c2 / &c1, c1) } else { (&c1 / &c2, c2) };
        SmallCrossStream {
            lattice: lattice.clone(),
            w: w.clone(),
            conv: Convergents::new(&ratio),
            ahead: VecDeque::new(),
            ratio,
            swap,
            emitted_first: false,
            big_log2: big.log2_estimate().unwrap_or(0),
        }
    }

    fn make(&self, m: &Integer, n: &Integer) -> Vec2 {
        let (m, n) = if self.swap { (n, m) } else { (m, n) };
        self.lattice.vector(m, n)
    }

    fn fill(&mut self, k: usize) {
        while self.ahead.len() < k {
            match self.conv.next() {
                Some(c) => self.ahead.push_back(c),
                None => break,
            }
        }
    }

    /// Drops up to `max` leading candidates whose `|cross(v, w)|` certainly exceeds
    /// `bound`, without evaluating them; returns how many were dropped.
    ///
    /// For consecutive convergents, `|cross| > |c| / (q_k + q_{k+1})` where `c` is the
    /// larger basis cross product, so bit lengths alone decide most candidates.
    pub fn skip_above(&mut self, bound: &QuadExt, max: u64) -> u64 {
        let Some(bound_log2) = bound.log2_estimate() else { return 0 };
        if !self.emitted_first {
            return 0;
        }
        let limit = self.big_log2 - bound_log2 - 8;
        let mut dropped = 0;
        while dropped < max {
            if self.ahead.len() < 2 {
                let have = self.conv.q.1.significant_bits() as i64;
                if limit - have > JUMP_MIN_BITS && !self.ratio.is_rational() {
                    dropped += self.jump(limit, max - dropped);
                }
                self.fill(2);
                if self.ahead.len() < 2 {
                    break;
                }
            }
            if droppable(&self.ahead[0], &self.ahead[1], limit) {
                self.ahead.pop_front();
                dropped += 1;
            } else {
                break;
            }
        }
        dropped
    }

    /// Same dropping rule as `skip_above`, but the partial quotients come in blocks from
    /// dyadic brackets of the complete quotient. A quotient is taken only when both ends
    /// of the bracket agree on it, so the expansion stays exact.
    fn jump(&mut self, limit: i64, max: u64) -> u64 {
        let x = &self.ratio;
        let (mut p0, mut p1) = self.conv.p.clone();
        let (mut q0, mut q1) = self.conv.q.clone();
        let mut buf = std::mem::take(&mut self.ahead);
        let mut dropped = 0;
        let mut moved = false;
        let mut block = (limit / 8).clamp(512, 1 << 16) as u32;
        let base_prec = 2 * limit as u32 + 128;
        let mut prec = base_prec;
        let mut xs = scaled_floor(x, prec);
        'outer: while dropped < max {
            let one = Integer::from(1) << prec;
            let mut ends = Vec::with_capacity(2);
            for e in [xs.clone(), Integer::from(&xs + 1u32)] {
                let num = -(Integer::from(&q0 * &e) - Integer::from(&p0 * &one));
                let den = Integer::from(&q1 * &e) - Integer::from(&p1 * &one);
                ends.push((num, den));
            }
            // a sign change of the denominator means the current convergent lies inside the bracket
            let quotients = if ends[0].1.cmp0() == Ordering::Equal || ends[0].1.cmp0() != ends[1].1.cmp0() {
                Vec::new()
            } else {
                let scaled: Vec<Integer> = ends
                    .iter()
                    .map(|(n, d)| {
                        let (n, d) = if d.cmp0() == Ordering::Less { (-n.clone(), -d.clone()) } else { (n.clone(), d.clone()) };
                        (n << block).div_rem_floor(d).0
                    })
                    .collect();
                let (lo, hi) = if scaled[0] <= scaled[1] { (&scaled[0], &scaled[1]) } else { (&scaled[1], &scaled[0]) };
                let den = Integer::from(1) << block;
                common_quotients((lo.clone(), den.clone()), (Integer::from(hi + 1u32), den))
            };
            if quotients.is_empty() {
                // either a huge partial quotient (widen the block) or too little precision
                if 2 * block < prec {
                    block *= 4;
                } else if prec < 8 * base_prec {
                    prec *= 2;
                    xs = scaled_floor(x, prec);
                } else {
                    break;
                }
                continue;
            }
            block = (limit / 8).clamp(512, 1 << 16) as u32;
            // whole block first: every convergent but the last is dropped if the last pair is
            let m = block_matrix(&quotients);
            let np1 = Integer::from(&p1 * &m[0]) + Integer::from(&p0 * &m[2]);
            let np0 = Integer::from(&p1 * &m[1]) + Integer::from(&p0 * &m[3]);
            let nq1 = Integer::from(&q1 * &m[0]) + Integer::from(&q0 * &m[2]);
            let nq0 = Integer::from(&q1 * &m[1]) + Integer::from(&q0 * &m[3]);
            let gain = (buf.len() + quotients.len() - 1) as u64;
            if dropped + gain <= max && droppable(&(np0.clone(), nq0.clone()), &(np1.clone(), nq1.clone()), limit) {
                dropped += gain;
                (p0, p1, q0, q1) = (np0, np1, nq0, nq1);
                buf.clear();
                buf.push_back((p1.clone(), q1.clone()));
                moved = true;
                continue;
            }
            for a in quotients {
                let p2 = Integer::from(&a * &p1) + &p0;
                let q2 = Integer::from(&a * &q1) + &q0;
                p0 = std::mem::replace(&mut p1, p2);
                q0 = std::mem::replace(&mut q1, q2);
                moved = true;
                buf.push_back((p1.clone(), q1.clone()));
                if buf.len() >= 2 {
                    if dropped < max && droppable(&buf[0], &buf[1], limit) {
                        buf.pop_front();
                        dropped += 1;
                    } else {
                        break 'outer;
                    }
                }
            }
        }
        if moved {
            self.conv = Convergents::resume(x, (p0, p1), (q0, q1));
        }
        self.ahead = buf;
        dropped
    }
}

/// Below this many bits of remaining growth, plain stepping is cheaper than bracketing.
const JUMP_MIN_BITS: i64 = 4096;

/// For consecutive convergents `q_j`, `q_{j+1}`: `|cross| > |c| / (q_j + q_{j+1})`.
fn droppable(a: &(Integer, Integer), b: &(Integer, Integer), limit: i64) -> bool {
    (Integer::from(&a.1 + &b.1).significant_bits() as i64) < limit
}

/// `[[m00, m01], [m10, m11]]`, the product of `[[a, 1], [1, 0]]` over the quotients,
/// built by balanced halving so the multiplications stay subquadratic.
fn block_matrix(quotients: &[Integer]) -> [Integer; 4] {
    if quotients.len() == 1 {
        return [quotients[0].clone(), Integer::from(1), Integer::from(1), Integer::new()];
    }
    let (l, r) = quotients.split_at(quotients.len() / 2);
    let (a, b) = (block_matrix(l), block_matrix(r));
    let mul = |i: usize, j: usize| Integer::from(&a[i] * &b[j]) + Integer::from(&a[i + 1] * &b[j + 2]);
    [mul(0, 0), mul(0, 1), mul(2, 0), mul(2, 1)]
}

/// `floor(x · 2^prec)`.
fn scaled_floor(x: &QuadExt, prec: u32) -> Integer {
    x.mul_int(&(Integer::from(1) << prec)).floor()
}

/// Leading partial quotients shared by every number in `[n1/d1, n2/d2]` (`d1, d2 > 0`).
fn common_quotients(lo: (Integer, Integer), hi: (Integer, Integer)) -> Vec<Integer> {
    let (mut n1, mut d1) = lo;
    let (mut n2, mut d2) = hi;
    let mut out = Vec::new();
    loop {
        let (a1, r1) = n1.div_rem_floor(d1.clone());
        let (a2, r2) = n2.div_rem_floor(d2.clone());
        if a1 != a2 || r1.cmp0() == Ordering::Equal || r2.cmp0() == Ordering::Equal {
            return out;
        }
        out.push(a1);
        (n1, d1) = (d1, r1);
        (n2, d2) = (d2, r2);
    }
}

impl Iterator for SmallCrossStream {
    /// `(v, coords, |cross(v, w)|)`; coordinates are in the lattice basis.
    type Item = (Vec2, (Integer, Integer), QuadExt);

    fn next(&mut self) -> Option<Self::Item> {
        let (m, n) = if !self.emitted_first {
            self.emitted_first = true;
            (Integer::new(), Integer::from(1))
        } else {
            self.fill(1);
            let (p, q) = self.ahead.pop_front()?;
            (q, -p)
        };
        let v = self.make(&m, &n);
        let c = cross(&v, &self.w).abs();
        if c.is_zero() {
            return None;
        }
        let coords = if self.swap { (n, m) } else { (m, n) };
        Some((v, coords, c))
    }
}

/// All primitive `v ∈ L` with `0 < |cross(v, w)| ≤ bound` whose lattice coordinates are
/// bounded by `height_cap`, ordered by `|cross|`, then squared length, then coordinates.
pub fn enumerate_small_cross(lattice: &Lattice, w: &Vec2, bound: &QuadExt, height_cap: u64) -> Vec<Vec2> {
    assert!(!w.is_zero(), "w must be nonzero");
    assert!(bound.signum() > 0, "bound must be positive");
    let c1 = cross(&lattice.b1, w);
    let c2 = cross(&lattice.b2, w);
    let cap = Integer::from(height_cap);
    let neg_cap = (-&cap).complete();
    let mut out: Vec<(QuadExt, QuadExt, Integer, Integer, Vec2)> = Vec::new();
    let mut m = neg_cap.clone();
    while m <= cap {
        let base = c1.mul_int(&m);
        let (lo, hi) = if c2.is_zero() {
            if base.abs() > *bound {
                (Integer::from(1), Integer::new())
            } else {
                (neg_cap.clone(), cap.clone())
            }
        } else {
            let e1 = (-bound - &base) / &c2;
            let e2 = (bound - &base) / &c2;
            let (e1, e2) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            (e1.ceil().max(neg_cap.clone()), e2.floor().min(cap.clone()))
        };
        let mut n = lo;
        while n <= hi {
            if m.clone().gcd(&n) == 1 {
                let v = lattice.vector(&m, &n);
                let c = cross(&v, w).abs();
                if !c.is_zero() && c <= *bound {
                    out.push((c, v.len_sq(), m.clone(), n.clone(), v));
                }
            }
            n += 1;
        }
        m += 1;
    }
    out.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then_with(|| x.1.cmp(&y.1))
            .then_with(|| x.2.cmp(&y.2))
            .then_with(|| x.3.cmp(&y.3))
    });
    out.into_iter().map(|t| t.4).collect()
}
