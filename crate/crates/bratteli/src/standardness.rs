//! Standardness of tail filtrations via iterated optimal-transport metrics:
//! the transferred-metric recursion (weak scan), the coupling-constrained
//! filtration distance and strong scan, and the binary-tree orbit distance.
//!
//! Scan indexing: scan entry n compares the level-(n+1) vertices of the
//! graph. Level 0 is the artificial root, so for a two-state chain whose
//! first random state sits at level 1, entry n corresponds to chain time n
//! and the initial metric lives on level 1.

use crate::graph::{Equipment, GradedGraph, VertexId};
use crate::measure::{level_projection, total_variation, Measure};
use crate::numeric::{Rational, rat};
use crate::transport::kantorovich;
use crate::{Error, Result};
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;

/// Symmetric nonnegative matrix with zero diagonal over one level's vertices.
/// The triangle inequality is not required (semimetrics are allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMetric {
    pub level: usize,
    pub matrix: Vec<Vec<Rational>>,
}

impl LevelMetric {
    pub fn new(level: usize, matrix: Vec<Vec<Rational>>) -> Result<Self> {
        let n = matrix.len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMetric("matrix is not square".into()));
            }
            if !row[i].is_zero() {
                return Err(Error::InvalidMetric("nonzero diagonal".into()));
            }
            for (j, x) in row.iter().enumerate() {
                if x < &Rational::zero() {
                    return Err(Error::InvalidMetric("negative entry".into()));
                }
                if x != &matrix[j][i] {
                    return Err(Error::InvalidMetric("asymmetric entry".into()));
                }
            }
        }
        Ok(LevelMetric { level, matrix })
    }

    /// Discrete metric: 0 on the diagonal, 1 off it.
    pub fn discrete(level: usize, size: usize) -> Self {
        let matrix = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| {
                        if i == j {
                            Rational::zero()
                        } else {
                            Rational::one()
                        }
                    })
                    .collect()
            })
            .collect();
        LevelMetric { level, matrix }
    }

    pub fn size(&self) -> usize {
        self.matrix.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.matrix[i][j]
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        LevelMetric {
            level: self.level,
            matrix: self
                .matrix
                .iter()
                .map(|row| row.iter().map(|x| x * c).collect())
                .collect(),
        }
    }
}

/// ρ_{n+1}(v, w) = K(λ_v, λ_w; ρ_n): the transferred metric one level up,
/// with cotransition distributions lumped over parallel edges. Vertices
/// outside the equipment's domain get zero rows (they carry no mass).
pub fn transfer_metric(
    graph: &GradedGraph,
    equipment: &Equipment,
    rho: &LevelMetric,
) -> Result<LevelMetric> {
    let level = rho.level;
    graph.check_level(level + 1)?;
    if rho.size() != graph.level_size(level) {
        return Err(Error::DimensionMismatch(format!(
            "metric has {} entries for level {} of size {}",
            rho.size(),
            level,
            graph.level_size(level)
        )));
    }
    let width = graph.level_size(level + 1);
    let rows: Vec<Option<Vec<(usize, Rational)>>> = (0..width)
        .map(|v| {
            let vid = VertexId::new(level + 1, v);
            if equipment.contains(vid) {
                Some(
                    equipment
                        .cotransition_row(graph, vid)
                        .into_iter()
                        .filter(|(_, w)| !w.is_zero())
                        .collect(),
                )
            } else {
                None
            }
        })
        .collect();
    let mut matrix = vec![vec![Rational::zero(); width]; width];
    for v in 0..width {
        for w in v + 1..width {
            let (Some(a), Some(b)) = (&rows[v], &rows[w]) else {
                continue;
            };
            let mu: Vec<Rational> = a.iter().map(|(_, x)| x.clone()).collect();
            let nu: Vec<Rational> = b.iter().map(|(_, x)| x.clone()).collect();
            let cost: Vec<Vec<Rational>> = a
                .iter()
                .map(|(i, _)| b.iter().map(|(j, _)| rho.get(*i, *j).clone()).collect())
                .collect();
            let (value, _) = kantorovich(&mu, &nu, &cost)?;
            matrix[v][w] = value.clone();
            matrix[w][v] = value;
        }
    }
    LevelMetric::new(level + 1, matrix)
}

/// Default verdict threshold for both scans; the paper gives no quantitative
/// rate, so the cutoff is a fixed artifact choice.
pub fn scan_tolerance() -> Rational {
    rat(1, 10_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanVerdict {
    /// values decayed below tolerance over the scanned range
    StandardEvidence,
    /// values stayed above tolerance; never a proof, the scan is finite
    NonstandardEvidence,
}

fn verdict_of(values: &[Rational]) -> ScanVerdict {
    let tol = scan_tolerance();
    let last = values.last().expect("nonempty scan");
    let tail_decreasing = values.len() < 3 || {
        let k = values.len();
        values[k - 3] >= values[k - 2] && values[k - 2] >= values[k - 1]
    };
    if *last <= tol && tail_decreasing {
        ScanVerdict::StandardEvidence
    } else {
        ScanVerdict::NonstandardEvidence
    }
}

#[derive(Debug, Clone)]
pub struct ScanEntry {
    /// scan index; the metric lives on the vertices of level n+1
    pub n: usize,
    pub metric: LevelMetric,
    /// expectation of the metric over independent μ-distributed vertex pairs
    pub expectation: Rational,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub entries: Vec<ScanEntry>,
    pub verdict: ScanVerdict,
}

fn expectation_over_pairs(metric: &LevelMetric, masses: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (v, mv) in masses.iter().enumerate() {
        if mv.is_zero() {
            continue;
        }
        for (w, mw) in masses.iter().enumerate() {
            if w == v || mw.is_zero() {
                continue;
            }
            acc += mv * mw * metric.get(v, w);
        }
    }
    acc
}

/// Weak standardness scan: iterates the transferred metric from a discrete
/// (or supplied) initial metric on level 1 and reports
/// s_n = Σ μ(v) μ(w) ρ_n(v, w) for n = 1..=levels.
pub fn weak_standardness_scan(
    graph: &GradedGraph,
    equipment: &Equipment,
    measure: &Measure,
    levels: usize,
    initial: Option<&LevelMetric>,
) -> Result<ScanOutcome> {
    if levels == 0 {
        return Err(Error::EmptyInput("scan needs at least one level".into()));
    }
    graph.check_level(levels + 1)?;
    let mut rho = match initial {
        Some(m) => {
            if m.level != 1 || m.size() != graph.level_size(1) {
                return Err(Error::DimensionMismatch(
                    "initial metric must live on level 1".into(),
                ));
            }
            m.clone()
        }
        None => LevelMetric::discrete(1, graph.level_size(1)),
    };
    let mut entries = Vec::with_capacity(levels);
    for n in 1..=levels {
        rho = transfer_metric(graph, equipment, &rho)?;
        let mu = level_projection(graph, measure, n + 1)?;
        let expectation = expectation_over_pairs(&rho, &mu.masses);
        entries.push(ScanEntry {
            n,
            metric: rho.clone(),
            expectation,
        });
    }
    let values: Vec<Rational> = entries.iter().map(|e| e.expectation.clone()).collect();
    Ok(ScanOutcome {
        verdict: verdict_of(&values),
        entries,
    })
}

// ---------------------------------------------------------------------------
// Filtration trees and the coupling-constrained distance.
// ---------------------------------------------------------------------------

/// Finite tree of partitions: a rooted tree of uniform height whose edges
/// carry conditional probabilities (children of every internal node sum to
/// one) and whose leaves carry point identities for cross-tree cost lookup.
#[derive(Debug, Clone)]
pub struct FiltrationTree {
    nodes: Vec<TreeNode>,
    root: usize,
    height: usize,
}

#[derive(Debug, Clone)]
struct TreeNode {
    children: Vec<(usize, Rational)>,
    leaf_id: Option<usize>,
}

/// Mutable builder handle for assembling trees node by node.
pub struct TreeBuilder {
    nodes: Vec<TreeNode>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        TreeBuilder { nodes: Vec::new() }
    }

    pub fn leaf(&mut self, id: usize) -> usize {
        self.nodes.push(TreeNode {
            children: Vec::new(),
            leaf_id: Some(id),
        });
        self.nodes.len() - 1
    }

    pub fn internal(&mut self, children: Vec<(usize, Rational)>) -> usize {
        self.nodes.push(TreeNode {
            children,
            leaf_id: None,
        });
        self.nodes.len() - 1
    }

    pub fn finish(self, root: usize) -> Result<FiltrationTree> {
        let nodes = self.nodes;
        fn height_of(nodes: &[TreeNode], at: usize) -> Result<usize> {
            let node = &nodes[at];
            if node.children.is_empty() {
                if node.leaf_id.is_none() {
                    return Err(Error::InvalidMeasure(
                        "childless internal node in filtration tree".into(),
                    ));
                }
                return Ok(0);
            }
            let total: Rational = node.children.iter().map(|(_, p)| p.clone()).sum();
            if total != Rational::one() {
                return Err(Error::InvalidMeasure(format!(
                    "child probabilities sum to {total}"
                )));
            }
            let mut h = None;
            for (c, _) in &node.children {
                let ch = height_of(nodes, *c)?;
                match h {
                    None => h = Some(ch),
                    Some(x) if x != ch => {
                        return Err(Error::HeightMismatch(x + 1, ch + 1));
                    }
                    _ => {}
                }
            }
            Ok(h.unwrap() + 1)
        }
        let height = height_of(&nodes, root)?;
        Ok(FiltrationTree {
            nodes,
            root,
            height,
        })
    }
}

impl Default for TreeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl FiltrationTree {
    pub fn height(&self) -> usize {
        self.height
    }

    /// Leaf distribution: (leaf id, total mass) pairs in first-visit order.
    pub fn leaf_distribution(&self) -> Vec<(usize, Rational)> {
        let mut acc: Vec<(usize, Rational)> = Vec::new();
        fn walk(
            tree: &FiltrationTree,
            at: usize,
            mass: Rational,
            acc: &mut Vec<(usize, Rational)>,
        ) {
            let node = &tree.nodes[at];
            if let Some(id) = node.leaf_id {
                match acc.iter_mut().find(|(x, _)| *x == id) {
                    Some((_, m)) => *m += mass,
                    None => acc.push((id, mass)),
                }
                return;
            }
            for (c, p) in &node.children {
                walk(tree, *c, &mass * p, acc);
            }
        }
        walk(self, self.root, Rational::one(), &mut acc);
        acc
    }
}

/// Recursive Markov-coupling optimum between two filtration trees: leaves
/// pay `leaf_cost` on their identities, an internal pair pays the
/// transportation optimum between its children distributions with ground
/// cost the recursive pair cost.
pub fn filtration_distance(
    a: &FiltrationTree,
    b: &FiltrationTree,
    leaf_cost: &dyn Fn(usize, usize) -> Rational,
) -> Result<Rational> {
    if a.height != b.height {
        return Err(Error::HeightMismatch(a.height, b.height));
    }
    let mut memo: HashMap<(usize, usize), Rational> = HashMap::new();
    pair_cost(a, b, a.root, b.root, leaf_cost, &mut memo)
}

fn pair_cost(
    a: &FiltrationTree,
    b: &FiltrationTree,
    x: usize,
    y: usize,
    leaf_cost: &dyn Fn(usize, usize) -> Rational,
    memo: &mut HashMap<(usize, usize), Rational>,
) -> Result<Rational> {
    if let Some(v) = memo.get(&(x, y)) {
        return Ok(v.clone());
    }
    let na = &a.nodes[x];
    let nb = &b.nodes[y];
    let value = match (na.leaf_id, nb.leaf_id) {
        (Some(ia), Some(ib)) => leaf_cost(ia, ib),
        (None, None) => {
            let mu: Vec<Rational> = na.children.iter().map(|(_, p)| p.clone()).collect();
            let nu: Vec<Rational> = nb.children.iter().map(|(_, p)| p.clone()).collect();
            let mut cost = Vec::with_capacity(mu.len());
            for (ca, _) in &na.children {
                let mut row = Vec::with_capacity(nu.len());
                for (cb, _) in &nb.children {
                    row.push(pair_cost(a, b, *ca, *cb, leaf_cost, memo)?);
                }
                cost.push(row);
            }
            kantorovich(&mu, &nu, &cost)?.0
        }
        _ => unreachable!("uniform height was validated"),
    };
    memo.insert((x, y), value.clone());
    Ok(value)
}

/// Interns leaf identities so that equal path prefixes get equal ids across
/// trees built for different vertices.
#[derive(Debug, Default)]
pub struct LeafInterner {
    map: HashMap<Vec<u64>, usize>,
}

impl LeafInterner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, key: Vec<u64>) -> usize {
        let next = self.map.len();
        *self.map.entry(key).or_insert(next)
    }
}

/// The conditional tree of finite paths into `v`: depth-d nodes are path
/// suffixes from level v.level - d into v, edges carry the equipment's
/// per-parallel cotransition weights, and a leaf's identity is the full path
/// below v (the endpoint and the final edge are not part of the identity).
pub fn conditional_tree(
    graph: &GradedGraph,
    equipment: &Equipment,
    v: VertexId,
    interner: &mut LeafInterner,
    path_cap: usize,
) -> Result<FiltrationTree> {
    graph.check_vertex(v)?;
    if !equipment.contains(v) {
        return Err(Error::InvalidMeasure(format!(
            "vertex ({},{}) outside equipment domain",
            v.level, v.index
        )));
    }
    if graph.dim(v)? > &crate::numeric::Dim::from(path_cap) {
        return Err(Error::ResourceLimit(format!(
            "conditional tree of ({},{}) exceeds {path_cap} paths",
            v.level, v.index
        )));
    }
    let mut builder = TreeBuilder::new();
    let root = build_tree_node(graph, equipment, v, true, &mut builder, interner, &mut Vec::new())?;
    builder.finish(root)
}

fn build_tree_node(
    graph: &GradedGraph,
    equipment: &Equipment,
    at: VertexId,
    is_root: bool,
    builder: &mut TreeBuilder,
    interner: &mut LeafInterner,
    suffix: &mut Vec<u64>,
) -> Result<usize> {
    // `suffix` accumulates the identity of the branch taken so far: the
    // vertices strictly below the tree root and the parallel indices of the
    // edges between them. The final edge into the root is excluded, so two
    // trees rooted at different vertices share identities for shared paths.
    if at.level == 0 {
        let id = interner.intern(suffix.clone());
        return Ok(builder.leaf(id));
    }
    if !equipment.contains(at) {
        return Err(Error::InvalidMeasure(format!(
            "vertex ({},{}) outside equipment domain",
            at.level, at.index
        )));
    }
    let ins = graph.in_edges(at);
    let row = equipment.row(at);
    let mut children = Vec::new();
    for (slot, (u, mult)) in ins.iter().enumerate() {
        let m = mult
            .to_u64()
            .ok_or_else(|| Error::ResourceLimit("multiplicity too large to expand".into()))?;
        for par in 0..m {
            let p = row[slot].per_parallel(mult, par);
            if p.is_zero() {
                continue;
            }
            let pushed = if is_root {
                suffix.push(*u as u64);
                1
            } else {
                suffix.push(par);
                suffix.push(*u as u64);
                2
            };
            let child = build_tree_node(
                graph,
                equipment,
                VertexId::new(at.level - 1, *u),
                false,
                builder,
                interner,
                suffix,
            )?;
            for _ in 0..pushed {
                suffix.pop();
            }
            children.push((child, p));
        }
    }
    Ok(builder.internal(children))
}

// ---------------------------------------------------------------------------
// Strong scan.
// ---------------------------------------------------------------------------

/// Filtration distance between the conditional trees of two same-level
/// vertices under the scaled discrete leaf cost, evaluated in closed form.
///
/// With the discrete cost on full path identities, any child pair over
/// different predecessors already differs in its identity at every leaf
/// (cost = scale), while the pair over a common predecessor couples
/// diagonally at zero cost; the recursive optimum therefore collapses to
/// the total variation between the lumped cotransition rows. The generic
/// recursion on explicit trees is kept as an oracle in the tests.
fn strong_pair_distance(
    graph: &GradedGraph,
    equipment: &Equipment,
    v: VertexId,
    w: VertexId,
    scale: &Rational,
) -> Rational {
    if v == w {
        return Rational::zero();
    }
    let a = dense_cotransitions(graph, equipment, v);
    let b = dense_cotransitions(graph, equipment, w);
    total_variation(&a, &b) * scale
}

fn dense_cotransitions(graph: &GradedGraph, equipment: &Equipment, v: VertexId) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); graph.level_size(v.level - 1)];
    for (u, x) in equipment.cotransition_row(graph, v) {
        row[u] += x;
    }
    row
}

/// Strong standardness scan: ρ̄_n as the expectation over independent
/// μ-distributed pairs of level-(n+1) vertices of the filtration distance
/// between their conditional trees, with the discrete leaf cost scaled by
/// `leaf_scale`.
pub fn standardness_scan_scaled(
    graph: &GradedGraph,
    equipment: &Equipment,
    measure: &Measure,
    levels: usize,
    leaf_scale: &Rational,
) -> Result<ScanOutcome> {
    if levels == 0 {
        return Err(Error::EmptyInput("scan needs at least one level".into()));
    }
    graph.check_level(levels + 1)?;
    let mut entries = Vec::with_capacity(levels);
    for n in 1..=levels {
        let level = n + 1;
        let width = graph.level_size(level);
        let mut matrix = vec![vec![Rational::zero(); width]; width];
        for v in 0..width {
            for w in v + 1..width {
                let (vv, ww) = (VertexId::new(level, v), VertexId::new(level, w));
                if !equipment.contains(vv) || !equipment.contains(ww) {
                    continue;
                }
                let d = strong_pair_distance(graph, equipment, vv, ww, leaf_scale);
                matrix[v][w] = d.clone();
                matrix[w][v] = d;
            }
        }
        let metric = LevelMetric::new(level, matrix)?;
        let mu = level_projection(graph, measure, level)?;
        let expectation = expectation_over_pairs(&metric, &mu.masses);
        entries.push(ScanEntry {
            n,
            metric,
            expectation,
        });
    }
    let values: Vec<Rational> = entries.iter().map(|e| e.expectation.clone()).collect();
    Ok(ScanOutcome {
        verdict: verdict_of(&values),
        entries,
    })
}

pub fn standardness_scan(
    graph: &GradedGraph,
    equipment: &Equipment,
    measure: &Measure,
    levels: usize,
) -> Result<ScanOutcome> {
    standardness_scan_scaled(graph, equipment, measure, levels, &Rational::one())
}

// ---------------------------------------------------------------------------
// Binary-tree orbit distance.
// ---------------------------------------------------------------------------

/// Minimum Hamming distance between two 0/1 leaf labelings of the complete
/// binary tree over all tree automorphisms:
/// d(A, B) = min(d(AL,BL) + d(AR,BR), d(AL,BR) + d(AR,BL)).
pub fn tree_orbit_hamming(labels_a: &[u8], labels_b: &[u8]) -> Result<u64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::DimensionMismatch(format!(
            "label counts {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    let n = labels_a.len();
    if n == 0 || n & (n - 1) != 0 {
        return Err(Error::NotPowerOfTwo(n));
    }
    fn rec(a: &[u8], b: &[u8]) -> u64 {
        if a.len() == 1 {
            return u64::from(a[0] != b[0]);
        }
        let half = a.len() / 2;
        let (al, ar) = a.split_at(half);
        let (bl, br) = b.split_at(half);
        let straight = rec(al, bl) + rec(ar, br);
        let swapped = rec(al, br) + rec(ar, bl);
        straight.min(swapped)
    }
    Ok(rec(labels_a, labels_b))
}
