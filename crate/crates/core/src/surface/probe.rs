//! Floating-point orbit statistics: time averages of the indicator of `T1` along
//! straight-line orbits from several seeded starting points.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{FlatSurface, PieceKind, Side};

const SIDES: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];
const CORNER_TOL: f64 = 1e-11;

fn side_index(s: Side) -> usize {
    SIDES.iter().position(|&x| x == s).expect("side")
}

#[derive(Clone, Debug)]
struct FPiece {
    kind: PieceKind,
    area: f64,
    /// rows of the inverse of `[a b]`
    inv: [[f64; 2]; 2],
}

#[derive(Clone, Debug)]
pub struct FloatSurface {
    pieces: Vec<FPiece>,
    glue: Vec<[(usize, Side); 4]>,
}

impl FloatSurface {
    pub fn new(f: &FlatSurface) -> Self {
        let pieces = f
            .pieces
            .iter()
            .map(|p| {
                let (ax, ay) = p.a.to_f64();
                let (bx, by) = p.b.to_f64();
                let det = ax * by - ay * bx;
                FPiece { kind: p.kind, area: det, inv: [[by / det, -bx / det], [-ay / det, ax / det]] }
            })
            .collect();
        let glue = (0..f.pieces.len()).map(|i| SIDES.map(|s| f.gluing[&(i, s)])).collect();
        FloatSurface { pieces, glue }
    }

    pub fn t1_area_fraction(&self) -> f64 {
        let t1: f64 = self.pieces.iter().filter(|p| p.kind.in_t1()).map(|p| p.area).sum();
        t1 / self.pieces.iter().map(|p| p.area).sum::<f64>()
    }

    fn random_point(&self, rng: &mut ChaCha8Rng, in_t1: bool) -> (usize, f64, f64) {
        let cand: Vec<usize> = (0..self.pieces.len()).filter(|&i| self.pieces[i].kind.in_t1() == in_t1).collect();
        let total: f64 = cand.iter().map(|&i| self.pieces[i].area).sum();
        let mut x = rng.gen::<f64>() * total;
        let mut piece = *cand.last().expect("nonempty torus");
        for &i in &cand {
            if x < self.pieces[i].area {
                piece = i;
                break;
            }
            x -= self.pieces[i].area;
        }
        (piece, rng.gen::<f64>(), rng.gen::<f64>())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeConfig {
    /// Flow direction; normalised internally.
    pub direction: (f64, f64),
    pub n_starts: usize,
    /// Flow time per start, in units of the (unit-speed) flow.
    pub flow_time: f64,
    pub checkpoints: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { direction: (1.0, 0.0), n_starts: 4, flow_time: 1e6, checkpoints: 100, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitStats {
    pub start_in_t1: bool,
    /// `(time, running average)` at evenly spaced checkpoints.
    pub series: Vec<(f64, f64)>,
    pub final_average: f64,
    pub restarts: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeResult {
    pub orbits: Vec<OrbitStats>,
    pub t1_area_fraction: f64,
    /// Largest difference between final averages.
    pub spread: f64,
    pub restarts: u64,
    /// Set when orbits ran into zeros or the caller flagged a saddle-connection direction.
    pub degenerate: bool,
}

pub fn ergodicity_probe(f: &FlatSurface, cfg: &ProbeConfig) -> ProbeResult {
    let fs = FloatSurface::new(f);
    let orbits: Vec<OrbitStats> = (0..cfg.n_starts).into_par_iter().map(|i| run_orbit(&fs, cfg, i)).collect();
    let finals: Vec<f64> = orbits.iter().map(|o| o.final_average).collect();
    let spread = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - finals.iter().cloned().fold(f64::INFINITY, f64::min);
    let restarts = orbits.iter().map(|o| o.restarts).sum();
    ProbeResult { orbits, t1_area_fraction: fs.t1_area_fraction(), spread, restarts, degenerate: restarts > 0 }
}

fn run_orbit(fs: &FloatSurface, cfg: &ProbeConfig, index: usize) -> OrbitStats {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let start_in_t1 = index.is_multiple_of(2);
    let (dx, dy) = cfg.direction;
    let norm = dx.hypot(dy);
    let h = (dx / norm, dy / norm);
    let vel: Vec<(f64, f64)> =
        fs.pieces.iter().map(|p| (p.inv[0][0] * h.0 + p.inv[0][1] * h.1, p.inv[1][0] * h.0 + p.inv[1][1] * h.1)).collect();
    let (mut piece, mut s, mut t) = fs.random_point(&mut rng, start_in_t1);
    let mut time = 0.0;
    let mut in_t1 = 0.0;
    let mut restarts = 0;
    let mut series = Vec::with_capacity(cfg.checkpoints);
    let mut next_mark = 1usize;
    let mark_at = |n: usize| cfg.flow_time * n as f64 / cfg.checkpoints.max(1) as f64;
    while time < cfg.flow_time {
        let (al, be) = vel[piece];
        let ls = exit(s, al);
        let lt = exit(t, be);
        let mut l = ls.min(lt);
        let limit = mark_at(next_mark) - time;
        let partial = l > limit;
        if partial {
            l = limit.max(0.0);
        }
        if fs.pieces[piece].kind.in_t1() {
            in_t1 += l;
        }
        time += l;
        s += al * l;
        t += be * l;
        if partial {
            series.push((time, in_t1 / time));
            next_mark += 1;
            continue;
        }
        let s_edge = (ls - l).abs() <= CORNER_TOL * ls.max(1.0);
        let t_edge = (lt - l).abs() <= CORNER_TOL * lt.max(1.0);
        let near = |x: f64| x.abs() < 1e-9 || (1.0 - x).abs() < 1e-9;
        if (s_edge && near(t)) || (t_edge && near(s)) {
            restarts += 1;
            (piece, s, t) = fs.random_point(&mut rng, start_in_t1);
            continue;
        }
        let side = if s_edge {
            if al > 0.0 {
                Side::Right
            } else {
                Side::Left
            }
        } else if be > 0.0 {
            Side::Top
        } else {
            Side::Bottom
        };
        let (j, side2) = fs.glue[piece][side_index(side)];
        piece = j;
        match side2 {
            Side::Left => s = 0.0,
            Side::Right => s = 1.0,
            Side::Bottom => t = 0.0,
            Side::Top => t = 1.0,
        }
        s = s.clamp(0.0, 1.0);
        t = t.clamp(0.0, 1.0);
    }
    let final_average = if time > 0.0 { in_t1 / time } else { f64::NAN };
    OrbitStats { start_in_t1, series, final_average, restarts }
}

fn exit(x: f64, v: f64) -> f64 {
    if v > 0.0 {
        (1.0 - x) / v
    } else if v < 0.0 {
        -x / v
    } else {
        f64::INFINITY
    }
}

/// Writes the running averages as CSV: `time,orbit_0,orbit_1,…`.
pub fn write_csv(r: &ProbeResult, mut out: impl Write) -> std::io::Result<()> {
    let header: Vec<String> = (0..r.orbits.len()).map(|i| format!("orbit_{i}")).collect();
    writeln!(out, "time,{}", header.join(","))?;
    let rows = r.orbits.iter().map(|o| o.series.len()).min().unwrap_or(0);
    for k in 0..rows {
        let vals: Vec<String> = r.orbits.iter().map(|o| format!("{:.9}", o.series[k].1)).collect();
        writeln!(out, "{:.6},{}", r.orbits[0].series[k].0, vals.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgeom::Vec2;
    use crate::splitting::prop_new;
    use crate::surface::build_normal_form;
    use crate::twist::make_pair;

    #[test]
    fn irrational_direction_on_veech_example_mixes() {
        let s = prop_new().splitting;
        let p = make_pair(&s, &Vec2::ints(1, 0), &Vec2::ints(3, -1)).unwrap();
        let f = build_normal_form(&s, &p).unwrap();
        let cfg = ProbeConfig { direction: (1.0, std::f64::consts::SQRT_2), flow_time: 2e5, ..Default::default() };
        let r = ergodicity_probe(&f, &cfg);
        assert!((r.t1_area_fraction - 2.0 / 9.0).abs() < 1e-12);
        for o in &r.orbits {
            assert!((o.final_average - r.t1_area_fraction).abs() < 0.02, "{}", o.final_average);
        }
        assert_eq!(r.orbits[0].series.len(), 100);
    }
}
