//! Exact scalars `a + b·√d` over a real quadratic field (or plain rationals when `d = 0`).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::{Complete, Integer, Rational};

use crate::error::{Error, Result};

/// An element `a + b√d` of `Q(√d)`.
///
/// `d` is square-free. A value with `b = 0` is a rational number and combines freely
/// with values from any field; mixing two genuinely different fields panics.
#[derive(Clone, Debug)]
pub struct QuadExt {
    a: Rational,
    b: Rational,
    d: u64,
}

/// Splits `d` into `s²·f` with `f` square-free.
pub fn square_free_part(d: u64) -> (u64, u64) {
    let mut f = d;
    let mut s = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= f {
        while f.is_multiple_of(p * p) {
            f /= p * p;
            s *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (s, f)
}

impl QuadExt {
    /// Builds `a + b√d`, folding square factors of `d` into `b`.
    pub fn new(a: impl Into<Rational>, b: impl Into<Rational>, d: u64) -> Self {
        let a = a.into();
        let mut b = b.into();
        if d == 0 {
            return QuadExt { a, b: Rational::new(), d: 0 };
        }
        let (s, f) = square_free_part(d);
        if s != 1 {
            b *= s;
        }
        if f == 1 {
            return QuadExt { a: a + b, b: Rational::new(), d: 0 };
        }
        QuadExt { a, b, d: f }
    }

    pub fn rational(q: impl Into<Rational>) -> Self {
        QuadExt { a: q.into(), b: Rational::new(), d: 0 }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(n)
    }

    pub fn zero() -> Self {
        Self::rational(0)
    }

    pub fn one() -> Self {
        Self::rational(1)
    }

    /// `√d` itself.
    pub fn sqrt(d: u64) -> Self {
        Self::new(0, 1, d)
    }

    pub fn frac(num: i64, den: i64) -> Self {
        Self::rational(Rational::from((num, den)))
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// The field tag carried by this value.
    pub fn d(&self) -> u64 {
        self.d
    }

    /// Re-tags a rational value with the session field; irrational values keep theirs.
    pub fn with_field(mut self, d: u64) -> Self {
        if self.b.cmp0() == Ordering::Equal {
            self.d = d;
        }
        self
    }

    pub fn is_rational(&self) -> bool {
        self.b.cmp0() == Ordering::Equal
    }

    pub fn is_zero(&self) -> bool {
        self.a.cmp0() == Ordering::Equal && self.is_rational()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.a)
    }

    /// Integer value if the scalar is a rational integer.
    pub fn as_integer(&self) -> Option<&Integer> {
        (self.is_rational() && *self.a.denom() == 1).then(|| self.a.numer())
    }

    fn merge_d(&self, other: &Self) -> u64 {
        match (self.is_rational(), other.is_rational()) {
            (false, false) => {
                assert_eq!(self.d, other.d, "values from different quadratic fields");
                self.d
            }
            (false, true) => self.d,
            (true, false) => other.d,
            (true, true) => self.d.max(other.d),
        }
    }

    /// Exact sign in {-1, 0, 1}.
    pub fn signum(&self) -> i32 {
        let sa = ord_to_i32(self.a.cmp0());
        let sb = ord_to_i32(self.b.cmp0());
        if sb == 0 || self.d == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        let a2 = self.a.clone().square();
        let bd = self.b.clone().square() * self.d;
        match a2.cmp(&bd) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => unreachable!("sqrt of a square-free d > 1 is irrational"),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// Galois conjugate `a − b√d`.
    pub fn conj(&self) -> Self {
        QuadExt { a: self.a.clone(), b: (-&self.b).complete(), d: self.d }
    }

    /// Field norm `a² − d·b²`.
    pub fn norm(&self) -> Rational {
        let a2 = self.a.clone().square();
        if self.d == 0 {
            return a2;
        }
        a2 - self.b.clone().square() * self.d
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero");
        if self.is_rational() {
            return QuadExt { a: self.a.clone().recip(), b: Rational::new(), d: self.d };
        }
        let n = self.norm();
        QuadExt { a: (&self.a / &n).complete(), b: -Rational::from(&self.b / &n), d: self.d }
    }

    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        (!other.is_zero()).then(|| self * &other.recip())
    }

    /// Writes the value as `(A + B√d)/C` with integers and `C > 0`.
    pub fn integer_form(&self) -> (Integer, Integer, Integer) {
        let c = self.a.denom().clone().lcm(self.b.denom());
        let a = self.a.numer() * (&c / self.a.denom()).complete();
        let b = self.b.numer() * (&c / self.b.denom()).complete();
        (a, b, c)
    }

    /// Exact floor.
    pub fn floor(&self) -> Integer {
        if self.is_rational() || self.d == 0 {
            return self.a.clone().floor().into_numer_denom().0;
        }
        let (a, b, c) = self.integer_form();
        let n = (b.clone().square() * self.d).sqrt();
        if b.cmp0() == Ordering::Greater {
            (a + n).div_rem_floor(c).0
        } else {
            (a - n - 1u32).div_rem_floor(c).0
        }
    }

    pub fn ceil(&self) -> Integer {
        -(-self).floor()
    }

    /// Nearest integer, ties towards +∞.
    pub fn round(&self) -> Integer {
        (self + &QuadExt::frac(1, 2)).floor()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = QuadExt::one().with_field(self.d);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn mul_int(&self, k: &Integer) -> Self {
        QuadExt { a: (&self.a * k).complete(), b: (&self.b * k).complete(), d: self.d }
    }

    /// Nearest `f64` (within a few ulps).
    pub fn to_f64(&self) -> f64 {
        super::to_float(self, 53).value
    }

    /// Rough base-2 magnitude `log2 |x|`, exact to within a couple of units.
    pub fn log2_estimate(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let lg = |q: &Rational| -> i64 {
            q.numer().significant_bits() as i64 - q.denom().significant_bits() as i64
        };
        if self.is_rational() {
            return Some(lg(&self.a));
        }
        let s = self.a.cmp0() == self.b.cmp0() || self.a.cmp0() == Ordering::Equal;
        let sqrt_d_bits = (64 - self.d.leading_zeros() as i64) / 2;
        let big = lg(&self.b) + sqrt_d_bits;
        let plain = if self.a.cmp0() == Ordering::Equal { big } else { lg(&self.a).max(big) };
        if s {
            Some(plain)
        } else {
            // cancellation: use x = N(x) / conj(x), with no cancellation in the conjugate
            let n = self.norm();
            Some(lg(&n) - plain)
        }
    }
}

fn ord_to_i32(o: Ordering) -> i32 {
    match o {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

impl PartialEq for QuadExt {
    fn eq(&self, other: &Self) -> bool {
        if self.a != other.a || self.b != other.b {
            return false;
        }
        self.is_rational() || self.d == other.d
    }
}

impl Eq for QuadExt {}

impl PartialOrd for QuadExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadExt {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl std::hash::Hash for QuadExt {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.a.hash(state);
        self.b.hash(state);
        if !self.is_rational() {
            self.d.hash(state);
        }
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", self.a);
        }
        if self.a.cmp0() != Ordering::Equal {
            write!(f, "{}", self.a)?;
            if self.b.cmp0() == Ordering::Greater {
                write!(f, "+")?;
            }
        }
        write!(f, "{}√{}", self.b, self.d)
    }
}

impl std::str::FromStr for QuadExt {
    type Err = Error;

    /// Accepts `P`, `P/Q`, `a+b√d`, `a-b*sqrt(d)`, `√d`, `-b√d`.
    fn from_str(s: &str) -> Result<Self> {
        parse_quad(s)
    }
}

fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let t = t.strip_prefix('+').unwrap_or(t);
    if let Some((int, frac)) = t.split_once('.') {
        let digits = format!("{int}{frac}");
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || int.contains('/') {
            return Err(bad());
        }
        let n = Integer::from_str_radix(&digits, 10).map_err(|_| bad())?;
        return Ok(Rational::from((n, Integer::u_pow_u(10, frac.len() as u32).complete())));
    }
    let q = Rational::from_str_radix(t, 10).map_err(|_| bad())?;
    Ok(q)
}

fn parse_quad(s: &str) -> Result<QuadExt> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let t = t.replace("sqrt(", "√").replace("sqrt", "√").replace(')', "");
    if t.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    // split into signed terms
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, c) in t.char_indices() {
        if i > start && (c == '+' || c == '-') && !t[..i].ends_with('/') {
            terms.push(&t[start..i]);
            start = i;
        }
    }
    terms.push(&t[start..]);
    let mut a = Rational::new();
    let mut b = Rational::new();
    let mut d = 0u64;
    for term in terms {
        match term.find('√') {
            None => a += parse_rational(term)?,
            Some(root) => {
                let rad: u64 = term[root + '√'.len_utf8()..]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad radicand in {s:?}")))?;
                if d != 0 && rad != d {
                    return Err(Error::Parse(format!("mixed radicands in {s:?}")));
                }
                d = rad;
                let coeff = term[..root].trim_end_matches('*');
                b += match coeff {
                    "" | "+" => Rational::from(1),
                    "-" => Rational::from(-1),
                    other => parse_rational(other)?,
                };
            }
        }
    }
    Ok(QuadExt::new(a, b, d))
}

macro_rules! binop {
    ($tr:ident, $f:ident, $body:expr) => {
        impl<'a, 'b> $tr<&'b QuadExt> for &'a QuadExt {
            type Output = QuadExt;
            fn $f(self, rhs: &'b QuadExt) -> QuadExt {
                let g: fn(&QuadExt, &QuadExt) -> QuadExt = $body;
                g(self, rhs)
            }
        }
        impl $tr<QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $f(self, rhs: QuadExt) -> QuadExt {
                (&self).$f(&rhs)
            }
        }
        impl<'b> $tr<&'b QuadExt> for QuadExt {
            type Output = QuadExt;
            fn $f(self, rhs: &'b QuadExt) -> QuadExt {
                (&self).$f(rhs)
            }
        }
        impl<'a> $tr<QuadExt> for &'a QuadExt {
            type Output = QuadExt;
            fn $f(self, rhs: QuadExt) -> QuadExt {
                self.$f(&rhs)
            }
        }
    };
}

binop!(Add, add, |x, y| {
    let d = x.merge_d(y);
    QuadExt { a: (&x.a + &y.a).complete(), b: (&x.b + &y.b).complete(), d }
});

binop!(Sub, sub, |x, y| {
    let d = x.merge_d(y);
    QuadExt { a: (&x.a - &y.a).complete(), b: (&x.b - &y.b).complete(), d }
});

binop!(Mul, mul, |x, y| {
    let d = x.merge_d(y);
    if y.is_rational() {
        return QuadExt { a: (&x.a * &y.a).complete(), b: (&x.b * &y.a).complete(), d };
    }
    if x.is_rational() {
        return QuadExt { a: (&x.a * &y.a).complete(), b: (&x.a * &y.b).complete(), d };
    }
    let bb = (&x.b * &y.b).complete() * d;
    let a = (&x.a * &y.a).complete() + bb;
    let b = (&x.a * &y.b).complete() + (&x.b * &y.a).complete();
    QuadExt { a, b, d }
});

binop!(Div, div, |x, y| x * &y.recip());

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt { a: -self.a, b: -self.b, d: self.d }
    }
}

impl Neg for &QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt { a: (-&self.a).complete(), b: (-&self.b).complete(), d: self.d }
    }
}

impl AddAssign<&QuadExt> for QuadExt {
    fn add_assign(&mut self, rhs: &QuadExt) {
        self.d = self.merge_d(rhs);
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl SubAssign<&QuadExt> for QuadExt {
    fn sub_assign(&mut self, rhs: &QuadExt) {
        self.d = self.merge_d(rhs);
        self.a -= &rhs.a;
        self.b -= &rhs.b;
    }
}

impl MulAssign<&QuadExt> for QuadExt {
    fn mul_assign(&mut self, rhs: &QuadExt) {
        *self = &*self * rhs;
    }
}

impl From<i64> for QuadExt {
    fn from(n: i64) -> Self {
        QuadExt::int(n)
    }
}

impl From<Integer> for QuadExt {
    fn from(n: Integer) -> Self {
        QuadExt::rational(n)
    }
}

impl From<Rational> for QuadExt {
    fn from(q: Rational) -> Self {
        QuadExt::rational(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> QuadExt {
        s.parse().unwrap()
    }

    #[test]
    fn parses_decimals() {
        assert_eq!(q("1.25"), QuadExt::frac(5, 4));
        assert_eq!(q("-0.5"), QuadExt::frac(-1, 2));
        assert_eq!(q("0.5+√2"), QuadExt::frac(1, 2) + q("√2"));
        assert!("1.".parse::<QuadExt>().is_err());
    }

    #[test]
    fn parses_forms() {
        assert_eq!(q("3"), QuadExt::int(3));
        assert_eq!(q("-3/4"), QuadExt::frac(-3, 4));
        assert_eq!(q("√2"), QuadExt::sqrt(2));
        assert_eq!(q("1+√2"), QuadExt::new(1, 1, 2));
        assert_eq!(q("1/2-3/4√5"), QuadExt::new(Rational::from((1, 2)), Rational::from((-3, 4)), 5));
        assert_eq!(q("-1+2*sqrt(3)"), QuadExt::new(-1, 2, 3));
        assert_eq!(q("-√2"), QuadExt::new(0, -1, 2));
        assert!("abc".parse::<QuadExt>().is_err());
    }

    #[test]
    fn square_factors_fold() {
        assert_eq!(QuadExt::new(0, 1, 8), QuadExt::new(0, 2, 2));
        assert_eq!(QuadExt::new(1, 1, 4), QuadExt::int(3));
        assert_eq!(QuadExt::new(1, 5, 1), QuadExt::int(6));
    }

    #[test]
    fn signs_near_cancellation() {
        assert_eq!(q("5√2-7").signum(), 1);
        assert_eq!(q("7-5√2").signum(), -1);
        assert_eq!(q("-99+70√2").signum(), -1);
        assert_eq!(q("577-408√2").signum(), 1);
        assert_eq!(q("0").signum(), 0);
    }

    #[test]
    fn floor_matches_float_on_small_values() {
        for (s, f) in [("√2", 1), ("-√2", -2), ("3-2√2", 0), ("1/3+√5", 2), ("-7/2-1/3√7", -5)] {
            assert_eq!(q(s).floor(), f, "{s}");
        }
        assert_eq!(q("5/2").round(), 3);
        assert_eq!(q("-5/2").round(), -2);
    }

    #[test]
    fn recip_and_norm() {
        let x = q("3+2√2");
        assert_eq!(x.norm(), 1);
        assert_eq!(x.recip(), q("3-2√2"));
    }

    #[test]
    fn display_round_trips() {
        for s in ["1/2-3/4√5", "√2", "-7", "2/3"] {
            let x = q(s);
            assert_eq!(q(&x.to_string()), x);
        }
    }

    #[test]
    fn log2_estimate_handles_cancellation() {
        let x = q("665857-470832√2");
        let e = x.log2_estimate().unwrap();
        let f = 665857f64 - 470832f64 * 2f64.sqrt();
        assert!((e as f64 - f.abs().log2()).abs() <= 3.0, "{e} vs {}", f.abs().log2());
    }
}
