//! Finite truncations of the binary tree of refinements.
//!
//! Level `n + 1` is grown from level `n` by refining every node twice with
//! `ε = ε_n / 8`, where `ε_n` is a dyadic lower bound for the angular gaps between all
//! directions built so far (`ε_0 = eps0`). Every node carries the cone of half-width
//! `ε_n / 4` around its slit direction; cones of descendants nest, so the limit direction
//! of any infinite continuation lies in the cone of each of its nodes.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldgeom::{cross, log2_abs, sci_from_log2, to_float, to_sci_string, QuadExt, Vec2};
use crate::json::FORMAT_VERSION;
use crate::search::{refine_many, RefineMetrics, RefineParams};
use crate::splitting::Splitting;
use crate::twist::{apply_twist, TwistCertificate};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: u32,
    pub splitting: Splitting,
    pub cert: Option<TwistCertificate>,
    /// Exchanged-area bound against the parent (zero at the root).
    pub a_n: QuadExt,
    pub w_len_sq: QuadExt,
    /// `ε` passed to the refinement that produced this node.
    pub eps: Option<QuadExt>,
    /// Half-width of the direction cone, `ε_depth / 4`.
    pub cone_radius: QuadExt,
    pub metrics: Option<RefineMetrics>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    pub eps0: QuadExt,
    pub depth: u32,
    /// Nodes in level order.
    pub nodes: Vec<TreeNode>,
    /// `ε_n` for every completed level.
    pub eps_levels: Vec<QuadExt>,
}

impl Tree {
    pub fn leaves(&self) -> Vec<&TreeNode> {
        let top = self.nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        self.nodes.iter().filter(|n| n.depth == top).collect()
    }

    /// Root-to-node path.
    pub fn branch(&self, id: usize) -> Vec<&TreeNode> {
        let mut out = vec![&self.nodes[id]];
        while let Some(p) = out.last().and_then(|n| n.parent) {
            out.push(&self.nodes[p]);
        }
        out.reverse();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchReport {
    pub leaf: usize,
    pub sum_a: QuadExt,
    pub sum_a_ok: bool,
    pub min_area: QuadExt,
    pub area_ok: bool,
    /// Largest `|w^n × w^{n+1}|`, rounded for display.
    pub max_edge_cross: String,
    pub edge_cross_ok: bool,
    pub w_len_increasing: bool,
    pub cones_nested: bool,
    pub irrational: bool,
    /// `H_n² = 4|w^{n−1} × w^n|² / |w^{n−1}|²`, rounded for display.
    pub h_sq: Vec<String>,
    pub passed: bool,
}

/// Cone of directions around a node's slit. The half-width is far below `f64` resolution
/// after a few levels, so it is kept exact and only the center is rounded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionInterval {
    /// Angle of the slit direction in radians.
    pub center: f64,
    /// Bound on the rounding error of `center`.
    pub center_err: f64,
    /// Exact half-width (a power of two).
    pub radius: QuadExt,
    /// `log2` of the half-width.
    pub radius_log2: i64,
}

impl DirectionInterval {
    /// `log2` of the full width.
    pub fn width_log2(&self) -> i64 {
        self.radius_log2 + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Distinctness {
    pub all_disjoint: bool,
    /// Row `i`, column `j` is `1` when the cones of leaves `i` and `j` are certified disjoint.
    pub matrix: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeReport {
    pub format: u32,
    pub depth: u32,
    pub eps0: QuadExt,
    pub nodes: usize,
    pub leaves: usize,
    pub eps_levels: Vec<QuadExt>,
    pub eps_halving_ok: bool,
    pub branches: Vec<BranchReport>,
    pub distinctness: Distinctness,
    pub leaf_intervals: Vec<DirectionInterval>,
    pub all_passed: bool,
    /// Set when construction stopped early.
    pub aborted: Option<String>,
}

/// Result of [`build_tree`]; on an aborted build the tree holds the completed levels.
#[derive(Clone, Debug)]
pub struct TreeBuild {
    pub tree: Tree,
    pub report: TreeReport,
    pub error: Option<Error>,
}

/// Builds the tree to `depth` levels. `search` supplies the caps; its `eps` is ignored.
pub fn build_tree(s0: &Splitting, depth: u32, eps0: &QuadExt, search: &RefineParams) -> Result<TreeBuild> {
    let (tree, error) = grow(s0, depth, eps0, search, false)?;
    let mut report = tree_report(&tree);
    if let Some(e) = &error {
        report.aborted = Some(e.to_string());
        report.all_passed = false;
    }
    Ok(TreeBuild { tree, report, error })
}

/// Builds a single branch: every level refines only the first child of the previous one.
/// Siblings are kept, so each node has two children and `ε_n` is set by the same gap rule
/// as in [`build_tree`]. The branch ends at the last node, see [`Tree::branch`].
pub fn build_branch(s0: &Splitting, depth: u32, eps0: &QuadExt, search: &RefineParams) -> Result<Tree> {
    let (tree, error) = grow(s0, depth, eps0, search, true)?;
    match error {
        Some(e) => Err(e),
        None => Ok(tree),
    }
}

fn grow(s0: &Splitting, depth: u32, eps0: &QuadExt, search: &RefineParams, single: bool) -> Result<(Tree, Option<Error>)> {
    s0.ensure_valid()?;
    if !s0.is_irrational() {
        return Err(Error::Precondition("root splitting must be irrational".into()));
    }
    let a_min = s0.area(1).min(s0.area(2));
    if eps0.signum() <= 0 || eps0.mul_int(&Integer::from(2)) >= a_min {
        return Err(Error::Precondition(format!("eps0 must lie in (0, min(A1, A2)/2) = (0, {})", a_min / QuadExt::int(2))));
    }
    let quarter = QuadExt::frac(1, 4);
    let root = TreeNode {
        id: 0,
        parent: None,
        depth: 0,
        splitting: s0.clone(),
        cert: None,
        a_n: QuadExt::zero(),
        w_len_sq: s0.w.len_sq(),
        eps: None,
        cone_radius: eps0 * &quarter,
        metrics: None,
    };
    let mut tree = Tree { eps0: eps0.clone(), depth, nodes: vec![root], eps_levels: vec![eps0.clone()] };
    let mut frontier: Vec<usize> = vec![0];
    let mut error = None;
    for n in 0..depth {
        let eps = &tree.eps_levels[n as usize] / &QuadExt::int(8);
        let params = RefineParams { eps: eps.clone(), eps_prime: None, ..search.clone() };
        let results: Vec<Result<Vec<crate::search::Refinement>>> =
            frontier.par_iter().map(|&id| refine_many(&tree.nodes[id].splitting, &params, 2)).collect();
        let mut next = Vec::new();
        let mut failed = None;
        for (&pid, res) in frontier.iter().zip(results) {
            match res {
                Ok(children) => {
                    for r in children {
                        let id = tree.nodes.len();
                        tree.nodes.push(TreeNode {
                            id,
                            parent: Some(pid),
                            depth: n + 1,
                            w_len_sq: r.splitting.w.len_sq(),
                            a_n: r.cert.exchanged_area_bound.clone(),
                            splitting: r.splitting,
                            cert: Some(r.cert),
                            eps: Some(eps.clone()),
                            cone_radius: QuadExt::zero(),
                            metrics: Some(r.metrics),
                        });
                        next.push(id);
                    }
                }
                Err(e) => {
                    failed.get_or_insert(e);
                }
            }
        }
        if let Some(e) = failed {
            tree.nodes.retain(|x| x.depth <= n);
            error = Some(e);
            break;
        }
        let dirs: Vec<&Vec2> = tree.nodes.iter().map(|x| &x.splitting.w).collect();
        let eps_next = gap_level(&dirs).ok_or_else(|| Error::InvalidResult("two nodes share a direction".into()))?;
        for &id in &next {
            tree.nodes[id].cone_radius = &eps_next * &quarter;
        }
        tree.eps_levels.push(eps_next);
        if single {
            next.truncate(1);
        }
        frontier = next;
    }
    Ok((tree, error))
}

/// Orders vectors of a common open half-plane counterclockwise.
fn ccw(a: &Vec2, b: &Vec2) -> Ordering {
    match cross(a, b).signum() {
        1 => Ordering::Less,
        -1 => Ordering::Greater,
        _ => Ordering::Equal,
    }
}

/// Lower bound for the angle between two directions: `t / (1 + t²)` with
/// `t = |a × b| / (a · b)` (and `1` for angles of at least a right angle).
pub fn angle_lower_bound(a: &Vec2, b: &Vec2) -> QuadExt {
    let c = cross(a, b).abs();
    let d = a.dot(b);
    if d.signum() <= 0 {
        return QuadExt::one();
    }
    &c * &d / (d.square() + c.square())
}

/// Upper bound for the angle: `|a × b| / (a · b)`, or `None` past a right angle.
pub fn angle_upper_bound(a: &Vec2, b: &Vec2) -> Option<QuadExt> {
    let d = a.dot(b);
    if d.signum() <= 0 {
        return None;
    }
    Some(cross(a, b).abs() / d)
}

/// `angle_lower_bound(a, b) > r`, decided without dividing.
fn gap_exceeds(a: &Vec2, b: &Vec2, r: &QuadExt) -> bool {
    let c = cross(a, b).abs();
    let d = a.dot(b);
    if d.signum() <= 0 {
        return QuadExt::one() > *r;
    }
    &c * &d > r * &(d.square() + c.square())
}

fn pow2(k: i64) -> QuadExt {
    if k >= 0 {
        QuadExt::from(Integer::from(1) << k as u32)
    } else {
        QuadExt::from(Rational::from((Integer::from(1), Integer::from(1) << (-k) as u32)))
    }
}

/// `dyadic_floor` of the smallest certified gap between angularly adjacent directions;
/// `None` if two coincide. Bit-length estimates pick the few pairs that can attain the
/// minimum and only those are compared exactly.
fn gap_level(dirs: &[&Vec2]) -> Option<QuadExt> {
    let mut sorted: Vec<&Vec2> = dirs.to_vec();
    sorted.sort_by(|a, b| ccw(a, b));
    let mut gaps = Vec::with_capacity(sorted.len());
    for pair in sorted.windows(2) {
        let c = cross(pair[0], pair[1]).abs();
        let d = pair[0].dot(pair[1]);
        let (Some(lc), Some(ld)) = (c.log2_estimate(), d.log2_estimate()) else {
            if c.is_zero() {
                return None;
            }
            gaps.push((0, c, d));
            continue;
        };
        let est = if d.signum() <= 0 { 0 } else { lc + ld - 2 * lc.max(ld) };
        gaps.push((est, c, d));
    }
    let Some(e_min) = gaps.iter().map(|g| g.0).min() else {
        return Some(QuadExt::one());
    };
    let mut best = i64::MAX;
    for (est, c, d) in gaps.iter().filter(|g| g.0 <= e_min + 8) {
        if d.signum() <= 0 {
            best = best.min(0);
            continue;
        }
        let num = c * d;
        let den = d.square() + c.square();
        let above = |k: i64| &den * &pow2(k) > num;
        let mut k = est + 8;
        while !above(k) {
            k += 1;
        }
        while above(k) {
            k -= 1;
        }
        best = best.min(k);
    }
    Some(pow2(best.min(0)))
}

/// Largest power of two not exceeding `x > 0`.
pub fn dyadic_floor(x: &QuadExt) -> QuadExt {
    let e = x.log2_estimate().expect("positive");
    let pow = pow2;
    let mut k = e + 3;
    while pow(k) > *x {
        k -= 1;
    }
    pow(k)
}

struct NodeFacts {
    irrational: bool,
    min_area: QuadExt,
    edge: Option<EdgeFacts>,
}

/// Quantities of the step from a node's parent to the node.
struct EdgeFacts {
    cross: QuadExt,
    w_inc: bool,
    h_sq: String,
    nested: bool,
}

fn node_facts(node: &TreeNode, prev: Option<&TreeNode>) -> NodeFacts {
    let s = &node.splitting;
    let (a1, a2) = (s.area(1), s.area(2));
    let edge = prev.map(|prev| {
        let cr = cross(&prev.splitting.w, &s.w).abs();
        let dot = prev.splitting.w.dot(&s.w);
        let nested = dot.signum() > 0 && cr <= &(&prev.cone_radius - &node.cone_radius) * &dot;
        EdgeFacts {
            h_sq: match (log2_abs(&cr), log2_abs(&prev.w_len_sq)) {
                (Some(c), Some(w)) => sci_from_log2(false, 2.0 * c + 2.0 - w, 6),
                _ => "0".into(),
            },
            w_inc: node.w_len_sq > prev.w_len_sq,
            cross: cr,
            nested,
        }
    });
    NodeFacts { irrational: s.is_irrational(), min_area: if a1 <= a2 { a1 } else { a2 }, edge }
}

/// Checks the hypotheses of the nonergodicity criterion along one root-to-leaf path.
pub fn verify_branch(branch: &[&TreeNode], eps0: &QuadExt) -> BranchReport {
    let facts: Vec<NodeFacts> =
        branch.iter().enumerate().map(|(i, n)| node_facts(n, i.checked_sub(1).map(|j| branch[j]))).collect();
    assemble_branch(branch, &facts.iter().collect::<Vec<_>>(), eps0)
}

fn assemble_branch(branch: &[&TreeNode], facts: &[&NodeFacts], eps0: &QuadExt) -> BranchReport {
    let root = &branch[0].splitting;
    let c = root.area(1).min(root.area(2)) - eps0.mul_int(&Integer::from(2));
    let edge_cap = root.total_area().mul_int(&Integer::from(3));
    let mut sum_a = QuadExt::zero();
    let mut min_area = facts[0].min_area.clone();
    let mut max_cross = QuadExt::zero();
    let mut w_inc = true;
    let mut nested = true;
    let mut irrational = true;
    let mut h_sq = Vec::new();
    for (node, f) in branch.iter().zip(facts) {
        irrational &= f.irrational;
        if f.min_area < min_area {
            min_area = f.min_area.clone();
        }
        let Some(e) = &f.edge else { continue };
        sum_a += &node.a_n;
        if e.cross > max_cross {
            max_cross = e.cross.clone();
        }
        w_inc &= e.w_inc;
        nested &= e.nested;
        h_sq.push(e.h_sq.clone());
    }
    let sum_a_ok = sum_a <= eps0.mul_int(&Integer::from(2));
    let area_ok = min_area > c && c.signum() > 0;
    let edge_cross_ok = max_cross <= edge_cap;
    let passed = sum_a_ok && area_ok && edge_cross_ok && w_inc && nested && irrational;
    BranchReport {
        leaf: branch.last().map(|n| n.id).unwrap_or(0),
        sum_a,
        sum_a_ok,
        min_area,
        area_ok,
        max_edge_cross: to_sci_string(&max_cross, 6),
        edge_cross_ok,
        w_len_increasing: w_inc,
        cones_nested: nested,
        irrational,
        h_sq,
        passed,
    }
}

/// Angle of `w` in radians, accurate to a few ulps.
fn angle_of(w: &Vec2, bits: u32) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    if w.x.abs() >= w.y.abs() {
        let t = to_float(&(&w.y / &w.x), bits).value.atan();
        if w.x.signum() > 0 {
            t
        } else if t > 0.0 {
            t - PI
        } else {
            t + PI
        }
    } else {
        let t = to_float(&(&w.x / &w.y), bits).value.atan();
        if w.y.signum() > 0 {
            FRAC_PI_2 - t
        } else {
            -FRAC_PI_2 - t
        }
    }
}

/// Interval of angles containing the limit direction of every continuation of the branch.
pub fn limit_direction(branch: &[&TreeNode], precision_bits: u32) -> DirectionInterval {
    let node = branch.last().expect("nonempty branch");
    let center = angle_of(&node.splitting.w, precision_bits.max(53));
    let radius = node.cone_radius.clone();
    let radius_log2 = radius.log2_estimate().unwrap_or(i64::MIN);
    DirectionInterval { center, center_err: 8.0 * f64::EPSILON * center.abs().max(1.0), radius, radius_log2 }
}

/// Whether the leaf cones are pairwise disjoint, decided exactly: leaves are sorted by
/// direction and neighbouring cones are separated by their certified angular gap.
pub fn distinctness_check(tree: &Tree) -> Distinctness {
    let leaves = tree.leaves();
    let n = leaves.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ccw(&leaves[i].splitting.w, &leaves[j].splitting.w));
    // gap_ok[p] says cones at sorted positions p and p+1 are disjoint
    let gap_ok: Vec<bool> = order
        .windows(2)
        .map(|p| {
            let (a, b) = (leaves[p[0]], leaves[p[1]]);
            gap_exceeds(&a.splitting.w, &b.splitting.w, &(&a.cone_radius + &b.cone_radius))
        })
        .collect();
    let mut pos = vec![0usize; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let mut matrix = Vec::with_capacity(n);
    for i in 0..n {
        let row: String = (0..n)
            .map(|j| {
                if i == j {
                    return '-';
                }
                let (lo, hi) = (pos[i].min(pos[j]), pos[i].max(pos[j]));
                // disjoint if any separating gap between them holds
                if gap_ok[lo..hi].iter().any(|&g| g) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect();
        matrix.push(row);
    }
    Distinctness { all_disjoint: gap_ok.iter().all(|&g| g), matrix }
}

pub fn tree_report(tree: &Tree) -> TreeReport {
    let leaves = tree.leaves();
    let facts: Vec<NodeFacts> =
        tree.nodes.par_iter().map(|n| node_facts(n, n.parent.map(|p| &tree.nodes[p]))).collect();
    let branches: Vec<BranchReport> = leaves
        .iter()
        .map(|leaf| {
            let branch = tree.branch(leaf.id);
            let f: Vec<&NodeFacts> = branch.iter().map(|n| &facts[n.id]).collect();
            assemble_branch(&branch, &f, &tree.eps0)
        })
        .collect();
    let two = QuadExt::int(2);
    let eps_halving_ok = tree.eps_levels.windows(2).all(|e| &e[1] * &two <= e[0]);
    let distinctness = distinctness_check(tree);
    let leaf_intervals = leaves.iter().map(|l| limit_direction(&tree.branch(l.id), 64)).collect();
    let complete = leaves.len() == 1usize << tree.depth.min(62) && leaves.first().is_some_and(|l| l.depth == tree.depth);
    let all_passed = complete && eps_halving_ok && distinctness.all_disjoint && branches.iter().all(|b| b.passed);
    TreeReport {
        format: FORMAT_VERSION,
        depth: tree.depth,
        eps0: tree.eps0.clone(),
        nodes: tree.nodes.len(),
        leaves: leaves.len(),
        eps_levels: tree.eps_levels.clone(),
        eps_halving_ok,
        branches,
        distinctness,
        leaf_intervals,
        all_passed,
        aborted: None,
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: u32,
    eps0: QuadExt,
    depth: u32,
    eps_levels: Vec<QuadExt>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Line {
    Header { header: Header },
    Node(Box<TreeNode>),
}

/// JSON lines: a header line, then one node per line in level order.
pub fn write_jsonl(tree: &Tree, mut out: impl Write) -> std::io::Result<()> {
    let header = Header { format: FORMAT_VERSION, eps0: tree.eps0.clone(), depth: tree.depth, eps_levels: tree.eps_levels.clone() };
    serde_json::to_writer(&mut out, &Line::Header { header })?;
    out.write_all(b"\n")?;
    for node in &tree.nodes {
        serde_json::to_writer(&mut out, node)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(input: impl BufRead) -> Result<Tree> {
    let mut header: Option<Header> = None;
    let mut nodes = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Line>(&line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))? {
            Line::Header { header: h } => {
                if h.format != FORMAT_VERSION {
                    return Err(Error::Parse(format!("unsupported format {}", h.format)));
                }
                header = Some(h);
            }
            Line::Node(n) => nodes.push(*n),
        }
    }
    let h = header.ok_or_else(|| Error::Parse("missing header line".into()))?;
    Ok(Tree { eps0: h.eps0, depth: h.depth, nodes, eps_levels: h.eps_levels })
}

/// Replays every twist and recomputes the spacing data, then reports as [`tree_report`].
pub fn replay_verify(tree: &Tree) -> TreeReport {
    let mut problems: Vec<String> = Vec::new();
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.id != i {
            problems.push(format!("node {i} has id {}", node.id));
            continue;
        }
        if node.w_len_sq != node.splitting.w.len_sq() {
            problems.push(format!("node {i}: stored |w|^2 is wrong"));
        }
        let (Some(pid), Some(cert)) = (node.parent, &node.cert) else {
            if i != 0 {
                problems.push(format!("node {i} lacks a parent or certificate"));
            }
            continue;
        };
        let Some(parent) = tree.nodes.get(pid).filter(|p| p.depth + 1 == node.depth && pid < i) else {
            problems.push(format!("node {i}: bad parent {pid}"));
            continue;
        };
        match apply_twist(&parent.splitting, &cert.pair, cert.k) {
            Ok((s, c)) if s == node.splitting && c == *cert && node.a_n == c.exchanged_area_bound => {}
            Ok(_) => problems.push(format!("node {i}: replayed twist differs")),
            Err(e) => problems.push(format!("node {i}: {e}")),
        }
    }
    let top = tree.nodes.iter().map(|n| n.depth).max().unwrap_or(0);
    let mut eps_levels = vec![tree.eps0.clone()];
    for n in 1..=top {
        let dirs: Vec<&Vec2> = tree.nodes.iter().filter(|x| x.depth <= n).map(|x| &x.splitting.w).collect();
        match gap_level(&dirs) {
            Some(g) => eps_levels.push(g),
            None => {
                problems.push(format!("level {n}: repeated direction"));
                eps_levels.push(QuadExt::zero());
            }
        }
    }
    if eps_levels != tree.eps_levels {
        problems.push("stored eps_n differ from recomputed values".into());
    }
    let quarter = QuadExt::frac(1, 4);
    for node in &tree.nodes {
        if let Some(e) = eps_levels.get(node.depth as usize) {
            if node.cone_radius != e * &quarter {
                problems.push(format!("node {}: cone radius differs", node.id));
            }
        }
    }
    let mut report = tree_report(tree);
    if !problems.is_empty() {
        report.all_passed = false;
        report.aborted = Some(problems.join("; "));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::demo_irrational;

    #[test]
    fn dyadic_floor_values() {
        assert_eq!(dyadic_floor(&QuadExt::frac(3, 10)), QuadExt::frac(1, 4));
        assert_eq!(dyadic_floor(&QuadExt::frac(1, 4)), QuadExt::frac(1, 4));
        assert_eq!(dyadic_floor(&QuadExt::int(5)), QuadExt::int(4));
        assert_eq!(dyadic_floor(&("√2-1".parse().unwrap())), QuadExt::frac(1, 4));
    }

    #[test]
    fn depth_zero_and_bad_eps0() {
        let s = demo_irrational().splitting;
        let p = RefineParams::new(QuadExt::one());
        let b = build_tree(&s, 0, &QuadExt::frac(1, 4), &p).unwrap();
        assert_eq!(b.tree.nodes.len(), 1);
        assert!(b.report.all_passed);
        assert!(matches!(build_tree(&s, 1, &QuadExt::one(), &p), Err(Error::Precondition(_))));
    }

    #[test]
    fn depth_three_demo() {
        let s = demo_irrational().splitting;
        let b = build_tree(&s, 3, &QuadExt::frac(1, 4), &RefineParams::new(QuadExt::one())).unwrap();
        assert!(b.error.is_none(), "{:?}", b.error);
        assert_eq!(b.tree.leaves().len(), 8);
        assert!(b.report.all_passed, "{:?}", b.report);
        let mut buf = Vec::new();
        write_jsonl(&b.tree, &mut buf).unwrap();
        let back = read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, b.tree);
        assert!(replay_verify(&back).all_passed);
        let leaf = b.tree.leaves()[0].id;
        let iv = limit_direction(&b.tree.branch(leaf), 64);
        assert!(iv.radius.mul_int(&Integer::from(2)) <= &b.tree.eps_levels[2] / &QuadExt::int(2));
        let root = limit_direction(&b.tree.branch(0), 64);
        assert_eq!(root.radius, QuadExt::frac(1, 16));
    }

    #[test]
    fn forged_duplicate_leaf_detected() {
        let s = demo_irrational().splitting;
        let b = build_tree(&s, 2, &QuadExt::frac(1, 4), &RefineParams::new(QuadExt::one())).unwrap();
        let mut t = b.tree.clone();
        let n = t.nodes.len();
        t.nodes[n - 1].splitting = t.nodes[n - 2].splitting.clone();
        assert!(!distinctness_check(&t).all_disjoint);
        assert!(!replay_verify(&t).all_passed);
    }
}
