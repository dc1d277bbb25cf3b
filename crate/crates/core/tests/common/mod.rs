//! Seeded generators of random field elements, splittings and partner pairs.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use slitwork_core::splitting::{Splitting, Stratum};
use slitwork_core::twist::{make_pair, max_twists, PartnerPair};
use slitwork_core::{cross, Lattice, QuadExt, Vec2};

pub const FIELDS: [u64; 3] = [0, 2, 5];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `a + b√d` with small rational parts; `b = 0` when `d = 0`.
pub fn quad(r: &mut ChaCha8Rng, d: u64, range: i64) -> QuadExt {
    let a = QuadExt::frac(r.gen_range(-range..=range), r.gen_range(1..=6));
    if d == 0 {
        return a;
    }
    let b = QuadExt::frac(r.gen_range(-range..=range), r.gen_range(1..=6));
    a + b * QuadExt::sqrt(d)
}

pub fn nonzero_quad(r: &mut ChaCha8Rng, d: u64, range: i64) -> QuadExt {
    loop {
        let x = quad(r, d, range);
        if !x.is_zero() {
            return x;
        }
    }
}

pub fn vec2(r: &mut ChaCha8Rng, d: u64, range: i64) -> Vec2 {
    Vec2::new(quad(r, d, range), quad(r, d, range))
}

/// A number in `(0, 1)`, irrational when `d > 0` and the coin says so.
pub fn unit_fraction(r: &mut ChaCha8Rng, d: u64) -> QuadExt {
    let den = r.gen_range(2..=12);
    let mut x = QuadExt::frac(r.gen_range(1..den), den);
    if d > 0 && r.gen_bool(0.7) {
        // shift by a small irrational amount, staying inside (0, 1)
        let eps = QuadExt::frac(1, 4 * den) * (QuadExt::sqrt(d) - QuadExt::from(QuadExt::sqrt(d).floor()));
        x = x + eps;
    }
    x
}

/// Vector `n` with `cross(v, n) = 1`.
fn unit_normal(v: &Vec2) -> Vec2 {
    if !v.x.is_zero() {
        Vec2::new(QuadExt::zero(), v.x.recip())
    } else {
        Vec2::new(-v.y.recip(), QuadExt::zero())
    }
}

pub struct Instance {
    pub splitting: Splitting,
    pub pair: PartnerPair,
}

/// Random valid H(1,1) splitting together with an admissible partner pair. With
/// `tight = Some(n)` the pair licenses at least `n` twists.
pub fn instance(r: &mut ChaCha8Rng, d: u64, tight: Option<u32>) -> Instance {
    loop {
        if let Some(inst) = try_instance(r, d, tight) {
            return inst;
        }
    }
}

fn try_instance(r: &mut ChaCha8Rng, d: u64, tight: Option<u32>) -> Option<Instance> {
    let v1 = primitive_int(r);
    let n1 = unit_normal(&v1);
    let a1 = QuadExt::int(r.gen_range(1..=4)) + if d > 0 { unit_fraction(r, d) } else { QuadExt::zero() };
    let u1 = &n1.scale(&a1) + &v1.scale(&quad(r, d, 3));
    let l1 = Lattice::new(v1.clone(), u1).ok()?;
    // v2 = λ v1 + μ n1, so that cross(v1, v2) = μ
    let mu = match tight {
        Some(n) => QuadExt::frac(1, (n as i64 + 1) * r.gen_range(2..=5)) * if r.gen_bool(0.5) { QuadExt::one() } else { -QuadExt::one() },
        None => nonzero_quad(r, d, 3),
    };
    let lam = nonzero_quad(r, d, 2);
    let v2 = &v1.scale(&lam) + &n1.scale(&mu);
    let n2 = unit_normal(&v2);
    let a2 = QuadExt::int(r.gen_range(1..=4)) + if d > 0 { unit_fraction(r, d) } else { QuadExt::zero() };
    let u2 = &n2.scale(&a2) + &v2.scale(&quad(r, d, 3));
    let l2 = Lattice::new(v2.clone(), u2).ok()?;
    // w with cross(v1, w) = c1 ∈ (0, A1), cross(v2, w) = c2 ∈ (0, A2)
    let c1 = &a1 * &unit_fraction(r, d);
    let c2 = &a2 * &unit_fraction(r, d);
    let w = (&v2.scale(&c1) - &v1.scale(&c2)).scale(&mu.recip());
    debug_assert_eq!(cross(&v1, &w), c1);
    let s = Splitting::new(l1, l2, w, Stratum::H11);
    if !s.validate().is_valid() {
        return None;
    }
    let pair = make_pair(&s, &v1, &v2).ok()?;
    if let Some(n) = tight {
        if !max_twists(&s, &pair).at_least(n) {
            return None;
        }
    }
    Some(Instance { splitting: s, pair })
}

fn primitive_int(r: &mut ChaCha8Rng) -> Vec2 {
    loop {
        let (x, y): (i64, i64) = (r.gen_range(-4..=4), r.gen_range(-4..=4));
        if gcd(x, y) == 1 {
            return Vec2::ints(x, y);
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}
