//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with timings.
//!
//! Runs without the libtest harness so the report is always printed; any failure makes
//! the process exit nonzero.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use rug::Integer;
use slitwork_core::search::RefineParams;
use slitwork_core::splitting::{build_example, demo_irrational, prop_new, prop_new_perturbed, slit_torus, Splitting};
use slitwork_core::surface::{
    build_normal_form, ergodicity_probe, exchange_overlay, first_return_rotation, saddle_connection_exists, twisted_slit_exists,
    ProbeConfig,
};
use slitwork_core::tree::{build_branch, build_tree, limit_direction, verify_branch};
use slitwork_core::twist::{
    apply_twist, choose_irrational_twist, initial_irrational_search, make_pair, max_twists, slope_and_rotation, twist_allowed,
    twisted_w, InitialOutcome, TwistCount,
};
use slitwork_core::{cross, Error, Lattice, QuadExt, Vec2};

/// Slack allowed between the float overlay area and the exact exchanged-area bound.
const OVERLAY_TOL: f64 = 1e-9;
/// Constructed-direction spread must exceed this multiple of the control spread.
const PROBE_RATIO: f64 = 3.0;
/// Calibration target for the control spread; reported, not enforced.
const CONTROL_SPREAD_TARGET: f64 = 0.05;
const PROBE_FLOW_TIME: f64 = 1e7;
const PROBE_STARTS: usize = 4;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn main() {
    let criteria: [(&str, Duration, Check); 9] = [
        ("worked example regression", Duration::from_secs(1), c1_worked_example),
        ("negative and perturbed pair", Duration::from_secs(1), c2_negative_and_perturbed),
        ("twist oracle equivalence", Duration::from_secs(60), c3_twist_oracle),
        ("rotation oracle equivalence", Duration::from_secs(60), c4_rotation_oracle),
        ("surgery bookkeeping", Duration::from_secs(60), c5_bookkeeping),
        ("three twists property", Duration::from_secs(60), c6_three_twists),
        ("depth-8 tree on demo-irrational", Duration::from_secs(300), c7_tree),
        ("nonergodicity probe", Duration::from_secs(300), c8_probe),
        ("exact arithmetic suite", Duration::from_secs(60), c9_arithmetic),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()),
        };
        let took = t.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > *budget => Err(format!("over time budget {budget:?}; {detail}")),
            o => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => ("FAIL", d.clone()),
        };
        failed += outcome.is_err() as usize;
        println!("criterion {} {tag} {name} ({:.2?}): {detail}", i + 1, took);
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn c1_worked_example() -> Result<String, String> {
    let ex = build_example("prop-new", None).map_err(e2s)?;
    let s = &ex.splitting;
    ensure(s.area(1) == QuadExt::int(2) && s.area(2) == QuadExt::int(7), || format!("areas {} {}", s.area(1), s.area(2)))?;
    let p = make_pair(s, &Vec2::ints(1, 0), &Vec2::ints(3, -1)).map_err(e2s)?;
    let pp = make_pair(s, &Vec2::ints(1, 0), &Vec2::ints(4, 1)).map_err(e2s)?;
    let (n, np) = (max_twists(s, &p), max_twists(s, &pp));
    ensure(n == TwistCount::Finite(Integer::from(2)) && np == TwistCount::Finite(Integer::from(3)), || format!("max twists {n} {np}"))?;
    let allowed: Vec<i64> = (-6..=6).filter(|&k| k != 0 && twist_allowed(s, &p, k).unwrap()).collect();
    ensure(allowed == [-2, -1], || format!("allowed {allowed:?}"))?;
    Ok("A1 = 2, A2 = 7, max twists 2 and 3, allowed {-1, -2}".into())
}

fn c2_negative_and_perturbed() -> Result<String, String> {
    let (v1, v2, v2p) = (Vec2::ints(1, 0), Vec2::ints(3, -1), Vec2::ints(4, 1));
    match initial_irrational_search(&prop_new().splitting, &v1, &v2, &v2p).map_err(e2s)? {
        InitialOutcome::Veech(cert) => ensure(cert.all_rational && cert.rotations.len() == 4, || format!("{cert:?}"))?,
        InitialOutcome::Irrational { k, .. } => return Err(format!("prop-new twisted irrationally at k = {k}")),
    }
    let pert = prop_new_perturbed(QuadExt::sqrt(2)).splitting;
    let InitialOutcome::Irrational { k, splitting, .. } = initial_irrational_search(&pert, &v1, &v2, &v2p).map_err(e2s)? else {
        return Err("perturbed example produced a Veech certificate".into());
    };
    ensure(k == -1, || format!("k = {k}"))?;
    let generators = Lattice::new(Vec2::ints(1, 0), Vec2::new(QuadExt::int(-4), "3+√2".parse().unwrap())).map_err(e2s)?;
    ensure(splitting.l1.same_lattice(&generators), || format!("L1' = {:?}", splitting.l1))?;
    let (a, b) = generators.coords(&splitting.w);
    let ratio = &a / &b;
    let want: QuadExt = "-2-2√2".parse().unwrap();
    ensure(ratio == want, || format!("ratio {ratio}"))?;
    Ok(format!("Veech certificate on prop-new; perturbed k = {k}, ratio {ratio}"))
}

fn c3_twist_oracle() -> Result<String, String> {
    let mut r = common::rng(3);
    let (mut allowed, mut disagreements, mut elsewhere) = (0, Vec::new(), 0);
    for i in 0..100 {
        let d = common::FIELDS[i % 3];
        let inst = common::instance(&mut r, d, None);
        let k = loop {
            let k = r.gen_range(-4i64..=4);
            if k != 0 {
                break k;
            }
        };
        let f = build_normal_form(&inst.splitting, &inst.pair).map_err(e2s)?;
        let lemma = twist_allowed(&inst.splitting, &inst.pair, k).map_err(e2s)?;
        let geometric = twisted_slit_exists(&f, k);
        allowed += lemma as usize;
        elsewhere += (!geometric && saddle_connection_exists(&f, &twisted_w(&inst.splitting, &inst.pair, k))) as usize;
        if lemma != geometric {
            disagreements.push((i, d, k));
        }
    }
    ensure(disagreements.is_empty(), || format!("disagreements {disagreements:?}"))?;
    Ok(format!(
        "100 instances ({allowed} allowed), 0 disagreements; {elsewhere} disallowed w^k realised by another saddle connection"
    ))
}

fn c4_rotation_oracle() -> Result<String, String> {
    let s = prop_new().splitting;
    let p = make_pair(&s, &Vec2::ints(1, 0), &Vec2::ints(3, -1)).map_err(e2s)?;
    let f = build_normal_form(&s, &p).map_err(e2s)?;
    for (k, want) in [(-1, QuadExt::int(-2)), (-2, QuadExt::frac(-8, 3))] {
        let (_, rho) = slope_and_rotation(&s, &p, k).map_err(e2s)?;
        ensure(rho == want, || format!("rho_{k} = {rho}"))?;
        let orbit = first_return_rotation(&f, k).map_err(e2s)?;
        ensure(orbit == frac_part(&rho), || format!("orbit rotation {orbit} vs {rho} at k = {k}"))?;
    }
    let mut r = common::rng(4);
    let mut checked = 2;
    while checked < 50 {
        let d = common::FIELDS[checked % 3];
        let inst = common::instance(&mut r, d, None);
        let k = r.gen_range(1i64..=3) * if r.gen_bool(0.5) { 1 } else { -1 };
        if !twist_allowed(&inst.splitting, &inst.pair, k).map_err(e2s)? {
            continue;
        }
        let (_, rho) = match slope_and_rotation(&inst.splitting, &inst.pair, k) {
            Ok(x) => x,
            Err(Error::SigmaZero) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let f = build_normal_form(&inst.splitting, &inst.pair).map_err(e2s)?;
        let orbit = first_return_rotation(&f, k).map_err(e2s)?;
        ensure(orbit == frac_part(&rho), || format!("instance {checked}: orbit {orbit} vs formula {rho}"))?;
        checked += 1;
    }
    Ok("50 allowed twists agree mod 1, worked values -2 and -8/3".into())
}

fn frac_part(x: &QuadExt) -> QuadExt {
    x - &QuadExt::from(x.floor())
}

fn c5_bookkeeping() -> Result<String, String> {
    let mut r = common::rng(5);
    let mut done = 0;
    let mut worst = f64::NEG_INFINITY;
    while done < 200 {
        let d = common::FIELDS[done % 3];
        let inst = common::instance(&mut r, d, None);
        let (s, p) = (&inst.splitting, &inst.pair);
        let Some(k) = [1i64, -1, 2, -2, 3, -3].into_iter().find(|&k| twist_allowed(s, p, k).unwrap()) else { continue };
        let (t, cert) = apply_twist(s, p, k).map_err(e2s)?;
        ensure(t.total_area() == s.total_area(), || format!("area not conserved at {done}"))?;
        let step = t.area(1) - s.area(1);
        let c = cross(&p.v1, &p.v2).mul_int(&Integer::from(k));
        ensure(step == c || step == -c.clone(), || format!("area step {step} vs k·cross {c}"))?;
        ensure(step.abs() <= cert.exchanged_area_bound && cert.exchanged_area_bound <= cert.loose_area_bound, || {
            format!("area bound chain fails at {done}")
        })?;
        let back = make_pair(&t, &p.v1, &p.v2).map_err(e2s)?;
        if twist_allowed(&t, &back, -k).map_err(e2s)? {
            let (u, _) = apply_twist(&t, &back, -k).map_err(e2s)?;
            ensure(same_splitting(&u, s), || format!("involution fails at {done}"))?;
        } else {
            return Err(format!("reverse twist not allowed at {done}"));
        }
        let f0 = build_normal_form(s, p).map_err(e2s)?;
        let f1 = build_normal_form(&t, p).map_err(e2s)?;
        let ov = exchange_overlay(&f0, &f1).map_err(e2s)?;
        let bound = cert.exchanged_area_bound.to_f64();
        let area = ov.exchanged.to_f64();
        worst = worst.max(area - bound);
        ensure(ov.exchanged <= cert.exchanged_area_bound && area <= bound + OVERLAY_TOL, || {
            format!("overlay {} exceeds bound {}", ov.exchanged, cert.exchanged_area_bound)
        })?;
        done += 1;
    }
    Ok(format!("200 twists exact; max overlay - bound = {worst:.3e}"))
}

fn same_splitting(a: &Splitting, b: &Splitting) -> bool {
    a.w == b.w && a.l1.same_lattice(&b.l1) && a.l2.same_lattice(&b.l2)
}

fn c6_three_twists() -> Result<String, String> {
    let mut r = common::rng(6);
    let mut done = 0;
    while done < 50 {
        let d = [2, 5][done % 2];
        let inst = common::instance(&mut r, d, Some(3));
        if inst.splitting.is_rational_in(1) {
            continue;
        }
        match choose_irrational_twist(&inst.splitting, &inst.pair) {
            Ok((_, t, _)) => ensure(!t.is_rational_in(1), || format!("instance {done}: result rational"))?,
            Err(e) => return Err(format!("instance {done}: {e}")),
        }
        done += 1;
    }
    Ok("50 splittings, 0 lemma violations".into())
}

fn c7_tree() -> Result<String, String> {
    let s = demo_irrational().splitting;
    let b = build_tree(&s, 8, &QuadExt::frac(1, 4), &RefineParams::new(QuadExt::one())).map_err(e2s)?;
    if let Some(e) = b.error {
        return Err(format!("aborted: {e}"));
    }
    let rep = &b.report;
    let half = QuadExt::frac(1, 2);
    let six = QuadExt::int(6);
    ensure(rep.leaves == 256, || format!("{} leaves", rep.leaves))?;
    ensure(rep.distinctness.all_disjoint, || "leaf cones overlap".into())?;
    ensure(rep.eps_halving_ok, || "eps halving fails".into())?;
    for br in &rep.branches {
        ensure(br.sum_a <= half && br.sum_a_ok, || format!("leaf {}: sum a_n = {}", br.leaf, br.sum_a))?;
        ensure(br.min_area > half && br.area_ok, || format!("leaf {}: min area {}", br.leaf, br.min_area))?;
        ensure(br.edge_cross_ok && br.w_len_increasing && br.irrational && br.passed, || format!("leaf {} fails", br.leaf))?;
    }
    for node in b.tree.nodes.iter().skip(1) {
        let parent = &b.tree.nodes[node.parent.unwrap()];
        ensure(cross(&parent.splitting.w, &node.splitting.w).abs() <= six, || format!("edge into node {}", node.id))?;
    }
    let levels: Vec<String> = b.tree.eps_levels.iter().map(|e| e.log2_estimate().unwrap_or(0).to_string()).collect();
    Ok(format!("256 leaves, all branches pass; log2 eps_n = [{}]", levels.join(", ")))
}

fn c8_probe() -> Result<String, String> {
    let s = slit_torus("-1+√2".parse().unwrap()).splitting;
    let e1 = Vec2::ints(1, 0);
    let pair = make_pair(&s, &e1, &e1).map_err(e2s)?;
    let (root, _) = apply_twist(&s, &pair, 1).map_err(e2s)?;
    let tree = build_branch(&root, 8, &QuadExt::frac(1, 4), &RefineParams::new(QuadExt::one())).map_err(e2s)?;
    let branch = tree.branch(tree.leaves()[0].id);
    ensure(branch.len() == 9, || format!("branch of {} nodes", branch.len()))?;
    ensure(verify_branch(&branch, &tree.eps0).passed, || "branch hypotheses fail".into())?;
    let theta = limit_direction(&branch, 64).center;
    let f = build_normal_form(&s, &pair).map_err(e2s)?;
    let probe = |dir| {
        let cfg = ProbeConfig { direction: dir, n_starts: PROBE_STARTS, flow_time: PROBE_FLOW_TIME, checkpoints: 10, seed: 0 };
        ergodicity_probe(&f, &cfg).spread
    };
    let constructed = probe((theta.cos(), theta.sin()));
    let control = probe((1.0, 2f64.sqrt()));
    let note = if control <= CONTROL_SPREAD_TARGET { "within" } else { "above" };
    let detail = format!(
        "constructed spread {constructed:.4}, control spread {control:.2e} ({note} target {CONTROL_SPREAD_TARGET}), ratio {:.3e}",
        constructed / control
    );
    ensure(constructed > PROBE_RATIO * control, || detail.clone())?;
    Ok(detail)
}

fn c9_arithmetic() -> Result<String, String> {
    let mut r = common::rng(9);
    let mut cases = 0;
    for i in 0..10_000 {
        let d = common::FIELDS[i % 3];
        let (x, y, z) = (common::quad(&mut r, d, 20), common::quad(&mut r, d, 20), common::quad(&mut r, d, 20));
        ensure(&(&x * &y) * &z == &x * &(&y * &z), || format!("associativity {x} {y} {z}"))?;
        ensure(&x * &(&y + &z) == &(&x * &y) + &(&x * &z), || format!("distributivity {x} {y} {z}"))?;
        if !x.is_zero() {
            ensure(&x * &x.recip() == QuadExt::one(), || format!("inverse {x}"))?;
        }
        let (u, v, w) = (common::vec2(&mut r, d, 9), common::vec2(&mut r, d, 9), common::vec2(&mut r, d, 9));
        ensure(cross(&u, &v) == -cross(&v, &u), || "antisymmetry".into())?;
        ensure(cross(&(&u.scale(&x) + &w), &v) == &(&x * &cross(&u, &v)) + &cross(&w, &v), || "bilinearity".into())?;
        let l = Lattice::new(u.clone(), v.clone());
        if let Ok(l) = l {
            let (a, b) = l.coords(&w);
            ensure(&l.b1.scale(&a) + &l.b2.scale(&b) == w, || "coords round trip".into())?;
            let s = Splitting::new(l.clone(), l.clone(), w.clone(), slitwork_core::splitting::Stratum::H11);
            if !w.is_zero() {
                check_rationality(&s, &l, &w)?;
            }
        }
        ensure(x.signum() == oracle_sign(&x), || format!("sign of {x}"))?;
        cases += 1;
    }
    Ok(format!("{cases} randomized cases, 0 failures"))
}

/// Brute force with witnesses up to 50; a rational answer with a larger witness is
/// confirmed on the witness itself.
fn check_rationality(s: &Splitting, l: &Lattice, w: &Vec2) -> Result<(), String> {
    let fast = s.is_rational_in(1);
    let (a, b) = l.coords(w);
    let witness = if b.is_zero() {
        Some((Integer::from(1), Integer::from(0)))
    } else {
        (&a / &b).as_rational().map(|q| (q.numer().clone(), q.denom().clone()))
    };
    let small = witness.as_ref().is_none_or(|(m, n)| m.clone().abs() <= 50 && n.clone().abs() <= 50);
    let slow = if small {
        brute_rational(l, w, 50)
    } else {
        let (m, n) = witness.as_ref().unwrap();
        cross(w, &l.vector(m, n)).is_zero()
    };
    ensure(fast == slow, || format!("rationality of {w} in {l:?}: fast {fast}, brute {slow}"))
}

/// `w ∥ m b1 + n b2` for some `0 < max(|m|, |n|) ≤ bound`: for each `n` the only
/// candidate `m` solves `m·(w × b1) + n·(w × b2) = 0`.
fn brute_rational(l: &Lattice, w: &Vec2, bound: i64) -> bool {
    let (c1, c2) = (cross(w, &l.b1), cross(w, &l.b2));
    (0..=bound).any(|n| {
        if c1.is_zero() {
            return n == 0 || c2.is_zero();
        }
        let m = -(&c2.mul_int(&Integer::from(n)) / &c1);
        match m.as_integer() {
            Some(m) => (n, m.to_i64()) != (0, Some(0)) && m.clone().abs() <= bound,
            None => false,
        }
    })
}

/// Sign of `a + b√d` from `a` and a 256-bit integer approximation of `b√d`.
fn oracle_sign(x: &QuadExt) -> i32 {
    let scale = Integer::from(1) << 256u32;
    let a = Integer::from(x.a().numer() * x.b().denom()) * &scale;
    let bn = Integer::from(x.b().numer() * x.a().denom());
    let root = (Integer::from(&bn * &bn) * x.d() * &scale * &scale).sqrt();
    let b = if bn < 0 { -root } else { root };
    let total = a + b;
    match total.cmp0() {
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 1,
    }
}
