//! Lexicographic orderings on tail-equivalence classes, the adic successor
//! and predecessor (Vershik map), orbits, exact measure-invariance checks,
//! and the Takagi function for figure reproduction.

use crate::graph::{GradedGraph, PathPrefix, VertexId};
use crate::measure::Measure;
use crate::numeric::Rational;
use crate::{Error, Result};
use num_traits::{ToPrimitive, Zero};
use std::cmp::Ordering;

/// A strict linear order on the incoming edges of every vertex. An edge is
/// addressed as (slot, parallel) into the graph's sorted in-edge list; the
/// order is stored as the ranked list of edges, minimal first.
#[derive(Debug, Clone)]
pub struct AdicOrder {
    ranked: Vec<Vec<Vec<(usize, u64)>>>,
}

impl AdicOrder {
    /// Default order: by predecessor vertex index, then by parallel index.
    pub fn default_order(graph: &GradedGraph) -> Self {
        let mut ranked = Vec::with_capacity(graph.num_levels().saturating_sub(1));
        for level in 1..graph.num_levels() {
            let table = (0..graph.level_size(level))
                .map(|v| flatten_edges(graph, VertexId::new(level, v)))
                .collect();
            ranked.push(table);
        }
        AdicOrder { ranked }
    }

    /// Morse-type order on the dyadic graph: the edge order is reversed at
    /// vertex 1 of every level, realizing the Morse automorphism on the same
    /// diagram that carries the odometer under the default order.
    pub fn morse_dyadic(graph: &GradedGraph) -> Result<Self> {
        for level in 1..graph.num_levels() {
            if graph.level_size(level) != 2 {
                return Err(Error::MalformedGraph(
                    "Morse order needs two vertices per level".into(),
                ));
            }
        }
        let mut order = AdicOrder::default_order(graph);
        for table in order.ranked.iter_mut() {
            table[1].reverse();
        }
        Ok(order)
    }

    /// Number of incoming edges of `v`, parallel edges counted.
    pub fn edge_count(&self, v: VertexId) -> usize {
        self.ranked[v.level - 1][v.index].len()
    }

    pub fn edge_at_rank(&self, v: VertexId, rank: usize) -> (usize, u64) {
        self.ranked[v.level - 1][v.index][rank]
    }

    pub fn rank_of(&self, v: VertexId, slot: usize, parallel: u64) -> usize {
        self.ranked[v.level - 1][v.index]
            .iter()
            .position(|&e| e == (slot, parallel))
            .expect("edge present in order")
    }
}

fn flatten_edges(graph: &GradedGraph, v: VertexId) -> Vec<(usize, u64)> {
    let mut list = Vec::new();
    for (slot, (_, mult)) in graph.in_edges(v).iter().enumerate() {
        let m = mult.to_u64().expect("enumerable multiplicity");
        for par in 0..m {
            list.push((slot, par));
        }
    }
    list
}

/// Continuation rule for the unwritten part of an infinite path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TailRule {
    /// Continue along the minimal outgoing (successor, parallel) choice.
    AllMinimal,
    /// Repeat the given (vertex index, parallel) steps cyclically.
    Periodic { steps: Vec<(usize, u64)> },
    /// The path is only defined up to its explicit prefix.
    Explicit,
}

/// An infinite path represented as a finite prefix plus a tail rule. The
/// successor map materializes the tail as far as it needs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfinitePath {
    pub prefix: PathPrefix,
    pub tail: TailRule,
}

impl InfinitePath {
    pub fn new(graph: &GradedGraph, prefix: PathPrefix, tail: TailRule) -> Result<Self> {
        prefix.validate(graph)?;
        Ok(InfinitePath { prefix, tail })
    }

    /// The prefix extended to `level` according to the tail rule. The
    /// all-minimal rule picks, at each step, the continuation whose new
    /// incoming edge has minimal rank in the adic order (ties broken by
    /// successor index), so an all-minimal tail consists of rank-0 edges
    /// whenever the graph allows it.
    pub fn materialize(
        &self,
        graph: &GradedGraph,
        order: &AdicOrder,
        level: usize,
    ) -> Result<PathPrefix> {
        graph.check_level(level)?;
        let mut steps = self.prefix.steps.clone();
        while steps.len() < level {
            let k = steps.len(); // extending to level k+1
            let u = if k == 0 { 0 } else { steps[k - 1].0 };
            let next = match &self.tail {
                TailRule::Explicit => {
                    return Err(Error::InvalidPath(format!(
                        "explicit path of length {} queried at level {level}",
                        self.prefix.len()
                    )));
                }
                TailRule::AllMinimal => {
                    let mut best: Option<((usize, usize, u64), (usize, u64))> = None;
                    for &(v, ref mult) in graph.out_edges(VertexId::new(k, u)) {
                        let vid = VertexId::new(k + 1, v);
                        let slot = graph
                            .in_edges(vid)
                            .iter()
                            .position(|&(w, _)| w == u)
                            .expect("outgoing edge has an incoming mirror");
                        let m = mult
                            .to_u64()
                            .ok_or_else(|| Error::ResourceLimit("huge multiplicity".into()))?;
                        for par in 0..m {
                            let key = (order.rank_of(vid, slot, par), v, par);
                            if best.as_ref().is_none_or(|(b, _)| key < *b) {
                                best = Some((key, (v, par)));
                            }
                        }
                    }
                    best.expect("every vertex has a successor").1
                }
                TailRule::Periodic { steps: period } => {
                    if period.is_empty() {
                        return Err(Error::InvalidPath("empty period".into()));
                    }
                    period[(k - self.prefix.len()) % period.len()]
                }
            };
            steps.push(next);
            let candidate = PathPrefix { steps };
            candidate.validate(graph)?;
            steps = candidate.steps;
        }
        Ok(PathPrefix { steps })
    }
}

/// The minimal path to a vertex: every edge minimal in the adic order.
pub fn minimal_path_to(graph: &GradedGraph, order: &AdicOrder, v: VertexId) -> PathPrefix {
    let mut rev = Vec::new();
    let mut at = v;
    while at.level > 0 {
        let (slot, par) = order.edge_at_rank(at, 0);
        let (u, _) = graph.in_edges(at)[slot];
        rev.push((at.index, par));
        at = VertexId::new(at.level - 1, u);
    }
    rev.reverse();
    PathPrefix { steps: rev }
}

fn path_vertex(path: &PathPrefix, level: usize) -> VertexId {
    VertexId::new(level, path.vertex_at(level))
}

fn edge_rank(graph: &GradedGraph, order: &AdicOrder, path: &PathPrefix, level: usize) -> usize {
    let v = path_vertex(path, level);
    let u = path.vertex_at(level - 1);
    let slot = graph
        .in_edges(v)
        .iter()
        .position(|&(w, _)| w == u)
        .expect("validated path edge");
    order.rank_of(v, slot, path.steps[level - 1].1)
}

/// Lexicographic-from-below comparison of two cofinal finite paths: the
/// larger path takes the larger edge into the first common vertex.
pub fn compare_paths(
    graph: &GradedGraph,
    order: &AdicOrder,
    a: &PathPrefix,
    b: &PathPrefix,
) -> Result<Ordering> {
    if a.len() != b.len() || a.endpoint() != b.endpoint() {
        return Err(Error::NotCofinal);
    }
    for level in (1..=a.len()).rev() {
        let same_vertex = a.vertex_at(level) == b.vertex_at(level);
        if !same_vertex {
            return Err(Error::NotCofinal);
        }
        let ra = edge_rank(graph, order, a, level);
        let rb = edge_rank(graph, order, b, level);
        if ra != rb {
            return Ok(ra.cmp(&rb));
        }
        if a.vertex_at(level - 1) != b.vertex_at(level - 1) {
            // distinct predecessors but equal edge ranks cannot happen: the
            // rank pins down the slot, hence the predecessor
            unreachable!("equal edge ranks with distinct predecessors");
        }
    }
    Ok(Ordering::Equal)
}

/// The adic successor: finds the minimal level whose incoming edge can be
/// increased, increases it minimally and resets everything below to the
/// minimal path; the tail is unchanged.
pub fn successor(graph: &GradedGraph, order: &AdicOrder, path: &InfinitePath) -> Result<InfinitePath> {
    step(graph, order, path, true)
}

/// Inverse of [`successor`] on its domain.
pub fn predecessor(
    graph: &GradedGraph,
    order: &AdicOrder,
    path: &InfinitePath,
) -> Result<InfinitePath> {
    step(graph, order, path, false)
}

fn step(
    graph: &GradedGraph,
    order: &AdicOrder,
    path: &InfinitePath,
    forward: bool,
) -> Result<InfinitePath> {
    path.prefix.validate(graph)?;
    let horizon = match path.tail {
        TailRule::Explicit => path.prefix.len(),
        _ => graph.max_level(),
    };
    let mut current = path.prefix.clone();
    for level in 1..=horizon {
        if current.len() < level {
            current = path.materialize(graph, order, level)?;
        }
        let v = path_vertex(&current, level);
        let rank = edge_rank(graph, order, &current, level);
        let movable = if forward {
            rank + 1 < order.edge_count(v)
        } else {
            rank > 0
        };
        if !movable {
            continue;
        }
        let new_rank = if forward { rank + 1 } else { rank - 1 };
        let (slot, par) = order.edge_at_rank(v, new_rank);
        let (u, _) = graph.in_edges(v)[slot];
        // below the changed level: minimal for the successor, maximal for
        // the predecessor
        let below = if forward {
            minimal_path_to(graph, order, VertexId::new(level - 1, u))
        } else {
            maximal_path_to(graph, order, VertexId::new(level - 1, u))
        };
        let mut steps = below.steps;
        steps.push((v.index, par));
        steps.extend_from_slice(&current.steps[level..]);
        let prefix = PathPrefix { steps };
        prefix.validate(graph)?;
        return Ok(InfinitePath {
            prefix,
            tail: path.tail.clone(),
        });
    }
    if forward {
        Err(Error::NoSuccessor)
    } else {
        Err(Error::NoPredecessor)
    }
}

fn maximal_path_to(graph: &GradedGraph, order: &AdicOrder, v: VertexId) -> PathPrefix {
    let mut rev = Vec::new();
    let mut at = v;
    while at.level > 0 {
        let last = order.edge_count(at) - 1;
        let (slot, par) = order.edge_at_rank(at, last);
        let (u, _) = graph.in_edges(at)[slot];
        rev.push((at.index, par));
        at = VertexId::new(at.level - 1, u);
    }
    rev.reverse();
    PathPrefix { steps: rev }
}

/// Iterates the successor (k >= 0) or predecessor (k < 0) and returns the
/// |k|+1 paths visited, the start included.
pub fn orbit(
    graph: &GradedGraph,
    order: &AdicOrder,
    start: &InfinitePath,
    k: i64,
) -> Result<Vec<InfinitePath>> {
    let mut out = vec![start.clone()];
    let mut at = start.clone();
    for _ in 0..k.unsigned_abs() {
        at = if k >= 0 {
            successor(graph, order, &at)?
        } else {
            predecessor(graph, order, &at)?
        };
        out.push(at.clone());
    }
    Ok(out)
}

/// True when the two paths eventually coincide within the graph truncation.
pub fn cofinal(
    graph: &GradedGraph,
    order: &AdicOrder,
    a: &InfinitePath,
    b: &InfinitePath,
) -> Result<bool> {
    let horizon = a.prefix.len().max(b.prefix.len()).max(1);
    if horizon > graph.max_level() {
        return Err(Error::LevelOutOfRange {
            level: horizon,
            max_level: graph.max_level(),
        });
    }
    let pa = a.materialize(graph, order, horizon)?;
    let pb = b.materialize(graph, order, horizon)?;
    if pa.steps[horizon - 1] != pb.steps[horizon - 1] {
        return Ok(false);
    }
    // same vertex and edge at the horizon; beyond it the tails decide
    Ok(match (&a.tail, &b.tail) {
        (TailRule::AllMinimal, TailRule::AllMinimal) => true,
        (TailRule::Explicit, TailRule::Explicit) => true,
        (TailRule::Periodic { steps: sa }, TailRule::Periodic { steps: sb }) => {
            // compare a few materialized continuation steps
            let extra = (sa.len().max(sb.len()) * 2).min(graph.max_level() - horizon);
            let qa = a.materialize(graph, order, horizon + extra)?;
            let qb = b.materialize(graph, order, horizon + extra)?;
            qa.steps[horizon..] == qb.steps[horizon..]
        }
        _ => {
            let extra = graph.max_level() - horizon;
            let qa = a.materialize(graph, order, horizon + extra)?;
            let qb = b.materialize(graph, order, horizon + extra)?;
            qa.steps[horizon..] == qb.steps[horizon..]
        }
    })
}

/// Exact adic-invariance check: the maximal discrepancy |μ(P⁻¹C) − μ(C)|
/// over all rank-≤-`rank` cylinders C on which the successor map acts as a
/// cylinder map. Zero means invariant at this rank.
pub fn invariance_check(
    graph: &GradedGraph,
    order: &AdicOrder,
    measure: &Measure,
    rank: usize,
    path_cap: usize,
) -> Result<Rational> {
    graph.check_level(rank)?;
    let mut worst = Rational::zero();
    for level in 1..=rank {
        for v in 0..graph.level_size(level) {
            let vid = VertexId::new(level, v);
            let mut paths = graph.enumerate_paths_into(vid, path_cap)?;
            paths.sort_by(|a, b| compare_paths(graph, order, a, b).expect("cofinal by construction"));
            // successor maps cylinder(paths[i]) onto cylinder(paths[i+1])
            for pair in paths.windows(2) {
                let m0 = measure.path_mass(graph, &pair[0])?;
                let m1 = measure.path_mass(graph, &pair[1])?;
                let d = (m0 - m1).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    Ok(worst)
}

use num_traits::Signed;

/// Partial sums of the Takagi series T(x) = Σ 2^{-k} dist(2^k x, ℤ).
pub fn takagi(x: f64, terms: usize) -> f64 {
    let mut sum = 0.0;
    let mut pow = 1.0;
    for k in 0..terms {
        let y = x * (k as f64).exp2();
        let frac = y - y.floor();
        sum += pow * frac.min(1.0 - frac);
        pow *= 0.5;
    }
    sum
}
