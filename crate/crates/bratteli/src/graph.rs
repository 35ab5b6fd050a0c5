//! ℕ-graded graphs with edge multiplicities, exact path-count dimensions,
//! cotransition equipments and level telescoping.

use crate::numeric::{dim_to_rational, format_rational, Dim, Rational};
use crate::{Error, Result};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Vertex address: (level, index within level). Labels are payload only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub level: usize,
    pub index: usize,
}

impl VertexId {
    pub fn new(level: usize, index: usize) -> Self {
        VertexId { level, index }
    }
}

/// Optional per-vertex payload used by the builders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "t", content = "v")]
pub enum Label {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "int")]
    Int(i64),
    #[serde(rename = "tuple")]
    Tuple(Vec<i64>),
    #[serde(rename = "partition")]
    Partition(Vec<u32>),
    #[serde(rename = "word")]
    Word(Vec<u8>),
    #[serde(rename = "pair")]
    Pair(Box<Label>, Box<Label>),
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::None => write!(f, "_"),
            Label::Int(n) => write!(f, "{n}"),
            Label::Tuple(t) => {
                let parts: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            Label::Partition(p) => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                write!(f, "[{}]", parts.join(","))
            }
            Label::Word(w) => {
                let parts: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "w{}", parts.join("."))
            }
            Label::Pair(a, b) => write!(f, "{{{a},{b}}}"),
        }
    }
}

/// A finite path from the root: one (vertex, parallel-edge index) per level.
///
/// Step `k` (0-based) records the vertex index at level `k+1` and which of
/// the parallel edges from the previous vertex was taken.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathPrefix {
    pub steps: Vec<(usize, u64)>,
}

impl PathPrefix {
    pub fn root() -> Self {
        PathPrefix { steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Vertex index at a given level (level 0 is the root).
    pub fn vertex_at(&self, level: usize) -> usize {
        if level == 0 {
            0
        } else {
            self.steps[level - 1].0
        }
    }

    pub fn endpoint(&self) -> VertexId {
        VertexId::new(self.len(), self.vertex_at(self.len()))
    }

    /// Checks incidence and parallel-edge bounds against a graph.
    pub fn validate(&self, graph: &GradedGraph) -> Result<()> {
        if self.len() >= graph.num_levels() {
            return Err(Error::InvalidPath(format!(
                "path of length {} does not fit in {} levels",
                self.len(),
                graph.num_levels()
            )));
        }
        for (k, &(v, par)) in self.steps.iter().enumerate() {
            let level = k + 1;
            if v >= graph.level_size(level) {
                return Err(Error::UnknownVertex { level, index: v });
            }
            let u = self.vertex_at(k);
            let mult = graph.multiplicity(VertexId::new(k, u), VertexId::new(level, v));
            if mult.is_zero() {
                return Err(Error::InvalidPath(format!(
                    "no edge between ({k},{u}) and ({level},{v})"
                )));
            }
            if Dim::from(par) >= mult {
                return Err(Error::InvalidPath(format!(
                    "parallel index {par} out of range at level {level}"
                )));
            }
        }
        Ok(())
    }
}

/// An ℕ-graded graph, truncated at a declared maximal level.
///
/// Level 0 consists of the single root. Edges join adjacent levels only and
/// carry multiplicities; a "simple" graph has all multiplicities in {0,1}.
/// Graphs are immutable after construction and path-count dimensions are
/// memoized eagerly, so all operations are pure and thread-safe.
#[derive(Debug, Clone)]
pub struct GradedGraph {
    labels: Vec<Vec<Label>>,
    /// in_edges[n][v] = sorted list of (predecessor index, multiplicity), n >= 1.
    in_edges: Vec<Vec<Vec<(usize, Dim)>>>,
    /// out_edges[n][u] = sorted list of (successor index, multiplicity).
    out_edges: Vec<Vec<Vec<(usize, Dim)>>>,
    dims: Vec<Vec<Dim>>,
}

impl GradedGraph {
    /// Builds a graph from per-level labels and incoming-edge tables.
    ///
    /// `in_edges[n]` describes edges between levels n and n+1 of `labels`,
    /// i.e. `in_edges[0]` are the edges into level 1.
    pub fn new(labels: Vec<Vec<Label>>, in_edges: Vec<Vec<Vec<(usize, Dim)>>>) -> Result<Self> {
        if labels.is_empty() || labels[0].len() != 1 {
            return Err(Error::MalformedGraph(
                "level 0 must contain exactly one vertex".into(),
            ));
        }
        if in_edges.len() + 1 != labels.len() {
            return Err(Error::MalformedGraph(format!(
                "expected {} edge tables for {} levels, got {}",
                labels.len() - 1,
                labels.len(),
                in_edges.len()
            )));
        }
        let mut edges = in_edges;
        for (n, table) in edges.iter_mut().enumerate() {
            let level = n + 1;
            if table.len() != labels[level].len() {
                return Err(Error::MalformedGraph(format!(
                    "edge table size mismatch at level {level}"
                )));
            }
            for (v, ins) in table.iter_mut().enumerate() {
                ins.sort_by_key(|&(u, _)| u);
                let mut total = Dim::zero();
                let mut last: Option<usize> = None;
                for &(u, ref m) in ins.iter() {
                    if u >= labels[n].len() {
                        return Err(Error::MalformedGraph(format!(
                            "edge into ({level},{v}) from unknown vertex ({n},{u})"
                        )));
                    }
                    if m.is_zero() {
                        return Err(Error::MalformedGraph(format!(
                            "zero multiplicity on edge ({n},{u})-({level},{v})"
                        )));
                    }
                    if last == Some(u) {
                        return Err(Error::MalformedGraph(format!(
                            "duplicate edge entry ({n},{u})-({level},{v})"
                        )));
                    }
                    last = Some(u);
                    total += m;
                }
                if total.is_zero() {
                    return Err(Error::MalformedGraph(format!(
                        "vertex ({level},{v}) has no predecessor"
                    )));
                }
            }
        }
        // Derive outgoing adjacency and check that interior vertices have successors.
        let mut out_edges: Vec<Vec<Vec<(usize, Dim)>>> = Vec::with_capacity(edges.len());
        for (n, table) in edges.iter().enumerate() {
            let mut outs = vec![Vec::new(); labels[n].len()];
            for (v, ins) in table.iter().enumerate() {
                for &(u, ref m) in ins {
                    outs[u].push((v, m.clone()));
                }
            }
            for (u, o) in outs.iter_mut().enumerate() {
                o.sort_by_key(|&(v, _)| v);
                if o.is_empty() {
                    return Err(Error::MalformedGraph(format!(
                        "vertex ({n},{u}) has no successor"
                    )));
                }
            }
            out_edges.push(outs);
        }
        // Memoize path counts.
        let mut dims: Vec<Vec<Dim>> = Vec::with_capacity(labels.len());
        dims.push(vec![Dim::one()]);
        for (n, table) in edges.iter().enumerate() {
            let prev = &dims[n];
            let mut row = Vec::with_capacity(table.len());
            for ins in table {
                let mut d = Dim::zero();
                for &(u, ref m) in ins {
                    d += m * &prev[u];
                }
                row.push(d);
            }
            dims.push(row);
        }
        Ok(GradedGraph {
            labels,
            in_edges: edges,
            out_edges,
            dims,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.labels.len()
    }

    /// Highest level index present.
    pub fn max_level(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn level_size(&self, level: usize) -> usize {
        self.labels[level].len()
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.num_levels() {
            return Err(Error::LevelOutOfRange {
                level,
                max_level: self.max_level(),
            });
        }
        Ok(())
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        self.check_level(v.level)?;
        if v.index >= self.level_size(v.level) {
            return Err(Error::UnknownVertex {
                level: v.level,
                index: v.index,
            });
        }
        Ok(())
    }

    pub fn label(&self, v: VertexId) -> &Label {
        &self.labels[v.level][v.index]
    }

    pub fn find_by_label(&self, level: usize, label: &Label) -> Option<VertexId> {
        self.labels
            .get(level)?
            .iter()
            .position(|l| l == label)
            .map(|i| VertexId::new(level, i))
    }

    /// Incoming edges of a vertex at level >= 1: sorted (predecessor, multiplicity).
    pub fn in_edges(&self, v: VertexId) -> &[(usize, Dim)] {
        &self.in_edges[v.level - 1][v.index]
    }

    /// Outgoing edges of a vertex: sorted (successor, multiplicity).
    pub fn out_edges(&self, v: VertexId) -> &[(usize, Dim)] {
        &self.out_edges[v.level][v.index]
    }

    pub fn multiplicity(&self, u: VertexId, v: VertexId) -> Dim {
        debug_assert_eq!(u.level + 1, v.level);
        self.in_edges[v.level - 1][v.index]
            .iter()
            .find(|&&(w, _)| w == u.index)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(Dim::zero)
    }

    /// Exact number of paths from the root to `v`, multiplicities counted.
    pub fn dim(&self, v: VertexId) -> Result<&Dim> {
        self.check_vertex(v)?;
        Ok(&self.dims[v.level][v.index])
    }

    pub fn dims_at(&self, level: usize) -> &[Dim] {
        &self.dims[level]
    }

    /// Removes all levels except the chosen ones and composes edges, so that
    /// the new multiplicity of (u, w) counts the old paths from u to w.
    pub fn telescope(&self, level_indices: &[usize]) -> Result<GradedGraph> {
        if level_indices.first() != Some(&0) {
            return Err(Error::MalformedGraph(
                "telescope indices must start at level 0".into(),
            ));
        }
        for w in level_indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::MalformedGraph(
                    "telescope indices must be strictly increasing".into(),
                ));
            }
        }
        let last = *level_indices.last().unwrap();
        self.check_level(last)?;
        let labels: Vec<Vec<Label>> = level_indices
            .iter()
            .map(|&n| self.labels[n].clone())
            .collect();
        let mut tables = Vec::with_capacity(level_indices.len().saturating_sub(1));
        for w in level_indices.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // path_counts[u][x] = number of paths from (lo,u) to the current level's x
            let mut counts: Vec<Vec<Dim>> = (0..self.level_size(lo))
                .map(|u| {
                    let mut row = vec![Dim::zero(); self.level_size(lo)];
                    row[u] = Dim::one();
                    row
                })
                .collect();
            for level in lo..hi {
                let next_size = self.level_size(level + 1);
                counts = counts
                    .iter()
                    .map(|row| {
                        let mut next = vec![Dim::zero(); next_size];
                        for (x, c) in row.iter().enumerate() {
                            if c.is_zero() {
                                continue;
                            }
                            for &(y, ref m) in self.out_edges(VertexId::new(level, x)) {
                                next[y] += m * c;
                            }
                        }
                        next
                    })
                    .collect();
            }
            let mut table: Vec<Vec<(usize, Dim)>> = vec![Vec::new(); self.level_size(hi)];
            for (u, row) in counts.iter().enumerate() {
                for (v, c) in row.iter().enumerate() {
                    if !c.is_zero() {
                        table[v].push((u, c.clone()));
                    }
                }
            }
            tables.push(table);
        }
        GradedGraph::new(labels, tables)
    }

    /// Enumerates all paths from the root into `v` in lexicographic order of
    /// (predecessor index, parallel index) read from the root upward.
    pub fn enumerate_paths_into(&self, v: VertexId, cap: usize) -> Result<Vec<PathPrefix>> {
        self.check_vertex(v)?;
        let total = self.dim(v)?;
        if total > &Dim::from(cap) {
            return Err(Error::ResourceLimit(format!(
                "{total} paths into ({},{}) exceed cap {cap}",
                v.level, v.index
            )));
        }
        let mut result = vec![PathPrefix::root()];
        // Extend prefixes level by level, keeping only those that can reach v.
        // reach[k][x] = can (k,x) reach v?
        let mut reach: Vec<Vec<bool>> = (0..=v.level)
            .map(|k| vec![false; self.level_size(k)])
            .collect();
        reach[v.level][v.index] = true;
        for k in (0..v.level).rev() {
            for x in 0..self.level_size(k) {
                reach[k][x] = self
                    .out_edges(VertexId::new(k, x))
                    .iter()
                    .any(|&(y, _)| reach[k + 1][y]);
            }
        }
        for level in 1..=v.level {
            let mut next = Vec::new();
            for p in &result {
                let u = p.vertex_at(level - 1);
                for &(y, ref m) in self.out_edges(VertexId::new(level - 1, u)) {
                    if !reach[level][y] {
                        continue;
                    }
                    if level == v.level && y != v.index {
                        continue;
                    }
                    let m = m.to_u64().ok_or_else(|| {
                        Error::ResourceLimit("multiplicity too large to enumerate".into())
                    })?;
                    for par in 0..m {
                        let mut q = p.clone();
                        q.steps.push((y, par));
                        next.push(q);
                    }
                }
            }
            result = next;
        }
        Ok(result)
    }

    pub fn to_json(&self) -> String {
        let levels: Vec<Vec<Label>> = self.labels.clone();
        let edges: Vec<Vec<(usize, usize, String)>> = self
            .in_edges
            .iter()
            .map(|table| {
                let mut list = Vec::new();
                for (v, ins) in table.iter().enumerate() {
                    for &(u, ref m) in ins {
                        list.push((u, v, m.to_string()));
                    }
                }
                list.sort();
                list
            })
            .collect();
        serde_json::to_string_pretty(&GraphJson { levels, edges }).expect("graph serialization")
    }

    pub fn from_json(s: &str) -> Result<GradedGraph> {
        let parsed: GraphJson = serde_json::from_str(s)
            .map_err(|e| Error::MalformedGraph(format!("bad graph JSON: {e}")))?;
        let mut tables: Vec<Vec<Vec<(usize, Dim)>>> = parsed
            .levels
            .iter()
            .skip(1)
            .map(|lvl| vec![Vec::new(); lvl.len()])
            .collect();
        for (n, list) in parsed.edges.iter().enumerate() {
            for (u, v, m) in list {
                let mult: Dim = m
                    .parse()
                    .map_err(|_| Error::MalformedGraph(format!("bad multiplicity {m}")))?;
                if n >= tables.len() || *v >= tables[n].len() {
                    return Err(Error::MalformedGraph(format!(
                        "edge ({u},{v}) outside declared levels"
                    )));
                }
                tables[n][*v].push((*u, mult));
            }
        }
        GradedGraph::new(parsed.levels, tables)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    levels: Vec<Vec<Label>>,
    edges: Vec<Vec<(usize, usize, String)>>,
}

/// How the probability weight of an edge pair splits over parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub enum ParallelWeights {
    /// All parallel edges carry the same weight.
    Uniform,
    /// One weight per parallel edge, in parallel-index order.
    Explicit(Vec<Rational>),
}

/// Probability weight attached to one (u, v) edge pair of an equipment or a
/// Markov transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeight {
    /// Sum of the weights of all parallel edges of the pair.
    pub total: Rational,
    pub split: ParallelWeights,
}

impl EdgeWeight {
    pub fn uniform(total: Rational) -> Self {
        EdgeWeight {
            total,
            split: ParallelWeights::Uniform,
        }
    }

    pub fn per_parallel(&self, mult: &Dim, parallel: u64) -> Rational {
        match &self.split {
            ParallelWeights::Uniform => &self.total / dim_to_rational(mult),
            ParallelWeights::Explicit(w) => w[parallel as usize].clone(),
        }
    }
}

/// A system of cotransition probabilities (Λ-structure): for every non-root
/// vertex, a probability weight per incoming parallel edge, summing to one
/// over the incoming edges.
///
/// The equipment's domain may be a subgraph: vertices with an empty weight
/// row are outside the domain (they carry no arriving mass).
#[derive(Debug, Clone)]
pub struct Equipment {
    /// weights[n][v] aligned with the graph's in_edges tables (n >= 1 level).
    weights: Vec<Vec<Vec<EdgeWeight>>>,
}

impl Equipment {
    pub fn from_weights(graph: &GradedGraph, weights: Vec<Vec<Vec<EdgeWeight>>>) -> Result<Self> {
        if weights.len() + 1 != graph.num_levels() {
            return Err(Error::DimensionMismatch(
                "equipment level count does not match graph".into(),
            ));
        }
        for (n, table) in weights.iter().enumerate() {
            let level = n + 1;
            if table.len() != graph.level_size(level) {
                return Err(Error::DimensionMismatch(format!(
                    "equipment table size mismatch at level {level}"
                )));
            }
            for (v, row) in table.iter().enumerate() {
                if row.is_empty() {
                    continue; // vertex outside the equipment's domain
                }
                let ins = graph.in_edges(VertexId::new(level, v));
                if row.len() != ins.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "equipment row at ({level},{v}) has {} entries for {} edge pairs",
                        row.len(),
                        ins.len()
                    )));
                }
                let mut total = Rational::zero();
                for (w, (_, mult)) in row.iter().zip(ins) {
                    // zero-weight pairs lie outside the equipment's subgraph
                    if w.total < Rational::zero() {
                        return Err(Error::InvalidMeasure(format!(
                            "negative cotransition weight at ({level},{v})"
                        )));
                    }
                    if let ParallelWeights::Explicit(list) = &w.split {
                        let m = mult.to_u64().unwrap_or(u64::MAX);
                        if list.len() as u64 != m {
                            return Err(Error::DimensionMismatch(format!(
                                "parallel weight list at ({level},{v}) does not match multiplicity"
                            )));
                        }
                        let s: Rational = list.iter().cloned().sum();
                        if s != w.total {
                            return Err(Error::InvalidMeasure(format!(
                                "parallel weights at ({level},{v}) do not sum to the pair total"
                            )));
                        }
                    }
                    total += &w.total;
                }
                if total != Rational::one() {
                    return Err(Error::InvalidMeasure(format!(
                        "cotransition weights at ({level},{v}) sum to {} instead of 1",
                        format_rational(&total)
                    )));
                }
            }
        }
        Ok(Equipment { weights })
    }

    /// The canonical central equipment: λ_v^u = dim(u)/dim(v) per parallel edge.
    pub fn central(graph: &GradedGraph) -> Self {
        let mut weights = Vec::with_capacity(graph.num_levels() - 1);
        for level in 1..graph.num_levels() {
            let mut table = Vec::with_capacity(graph.level_size(level));
            for v in 0..graph.level_size(level) {
                let dv = dim_to_rational(&graph.dims_at(level)[v]);
                let row = graph
                    .in_edges(VertexId::new(level, v))
                    .iter()
                    .map(|(u, mult)| {
                        let du = dim_to_rational(&graph.dims_at(level - 1)[*u]);
                        EdgeWeight {
                            total: du / &dv * dim_to_rational(mult),
                            split: ParallelWeights::Uniform,
                        }
                    })
                    .collect();
                table.push(row);
            }
            weights.push(table);
        }
        Equipment { weights }
    }

    /// True if the vertex carries cotransition weights.
    pub fn contains(&self, v: VertexId) -> bool {
        v.level == 0 || !self.weights[v.level - 1][v.index].is_empty()
    }

    pub fn row(&self, v: VertexId) -> &[EdgeWeight] {
        &self.weights[v.level - 1][v.index]
    }

    /// Cotransition distribution of `v` over level v.level - 1, with parallel
    /// edges lumped together: pairs (predecessor index, total weight).
    pub fn cotransition_row(&self, graph: &GradedGraph, v: VertexId) -> Vec<(usize, Rational)> {
        graph
            .in_edges(v)
            .iter()
            .zip(self.row(v))
            .map(|((u, _), w)| (*u, w.total.clone()))
            .collect()
    }

    /// Product of per-parallel-edge cotransition weights along a path.
    pub fn path_weight(&self, graph: &GradedGraph, path: &PathPrefix) -> Result<Rational> {
        path.validate(graph)?;
        let mut acc = Rational::one();
        for level in 1..=path.len() {
            let v = VertexId::new(level, path.vertex_at(level));
            if !self.contains(v) {
                return Err(Error::InvalidMeasure(format!(
                    "vertex ({},{}) outside equipment domain",
                    v.level, v.index
                )));
            }
            let u = path.vertex_at(level - 1);
            let ins = graph.in_edges(v);
            let slot = ins
                .iter()
                .position(|&(w, _)| w == u)
                .expect("validated path edge");
            let (_, mult) = &ins[slot];
            let par = path.steps[level - 1].1;
            acc *= self.row(v)[slot].per_parallel(mult, par);
        }
        Ok(acc)
    }
}
