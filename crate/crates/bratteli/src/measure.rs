//! Markov measures on path spaces: centrality, cocycles, level projections
//! and the extremality (ergodicity) statistic for projective limits of
//! simplices.

use crate::graph::{EdgeWeight, Equipment, GradedGraph, Label, ParallelWeights, PathPrefix, VertexId};
use crate::numeric::{rational_to_f64, Rational};
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};

/// Declared number representation of a measure. Computations always run in
/// exact rational arithmetic (every f64 converts losslessly); the declaration
/// only selects verdict tolerances: exact equality for `Exact`, 1e-12 for
/// `Float`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumberRepr {
    Exact,
    Float,
}

pub const FLOAT_TOL: f64 = 1e-12;

fn verdict_zero(repr: NumberRepr, deviation: &Rational) -> bool {
    match repr {
        NumberRepr::Exact => deviation.is_zero(),
        NumberRepr::Float => rational_to_f64(deviation).abs() < FLOAT_TOL,
    }
}

/// Probability vector over the vertices of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDistribution {
    pub level: usize,
    pub masses: Vec<Rational>,
}

impl LevelDistribution {
    pub fn new(level: usize, masses: Vec<Rational>, repr: NumberRepr) -> Result<Self> {
        if masses.iter().any(|m| m.is_negative()) {
            return Err(Error::InvalidMeasure("negative level mass".into()));
        }
        let total: Rational = masses.iter().cloned().sum();
        let defect = &total - Rational::one();
        if !verdict_zero(repr, &defect) {
            return Err(Error::InvalidMeasure(format!(
                "level distribution sums to {total}"
            )));
        }
        Ok(LevelDistribution { level, masses })
    }
}

/// Half the ℓ1 distance between two mass vectors (total variation).
pub fn total_variation(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    let sum: Rational = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(Rational::zero(), |acc, d| acc + d);
    sum / Rational::from_integer(2.into())
}

/// A Markov measure on the path space: per-level transition tables with the
/// initial distribution δ at the root. Transition rows of reachable vertices
/// sum to one; zero-weight edges are outside the measure's support.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    repr: NumberRepr,
    /// transitions[n][u] aligned with graph.out_edges at level n (to n+1).
    transitions: Vec<Vec<Vec<EdgeWeight>>>,
    /// reachable[n][v]
    reachable: Vec<Vec<bool>>,
}

impl MarkovMeasure {
    pub fn from_transitions(
        graph: &GradedGraph,
        mut transitions: Vec<Vec<Vec<EdgeWeight>>>,
        repr: NumberRepr,
    ) -> Result<Self> {
        if transitions.len() + 1 != graph.num_levels() {
            return Err(Error::DimensionMismatch(
                "transition level count does not match graph".into(),
            ));
        }
        let mut reachable: Vec<Vec<bool>> = (0..graph.num_levels())
            .map(|n| vec![false; graph.level_size(n)])
            .collect();
        reachable[0][0] = true;
        for n in 0..transitions.len() {
            if transitions[n].len() != graph.level_size(n) {
                return Err(Error::DimensionMismatch(format!(
                    "transition table size mismatch at level {n}"
                )));
            }
            for u in 0..graph.level_size(n) {
                if !reachable[n][u] {
                    continue;
                }
                let outs = graph.out_edges(VertexId::new(n, u));
                let row = &mut transitions[n][u];
                if row.len() != outs.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "transition row at ({n},{u}) has {} entries for {} edge pairs",
                        row.len(),
                        outs.len()
                    )));
                }
                let mut total = Rational::zero();
                for (w, (_, mult)) in row.iter().zip(outs) {
                    if w.total.is_negative() {
                        return Err(Error::InvalidMeasure(format!(
                            "negative transition weight at ({n},{u})"
                        )));
                    }
                    if let ParallelWeights::Explicit(list) = &w.split {
                        use num_traits::ToPrimitive;
                        if Some(list.len() as u64) != mult.to_u64() {
                            return Err(Error::DimensionMismatch(format!(
                                "parallel transition list at ({n},{u}) does not match multiplicity"
                            )));
                        }
                        let s: Rational = list.iter().cloned().sum();
                        if s != w.total {
                            return Err(Error::InvalidMeasure(format!(
                                "parallel transition weights at ({n},{u}) do not sum to the pair total"
                            )));
                        }
                        if list.iter().any(|x| x.is_negative()) {
                            return Err(Error::InvalidMeasure(format!(
                                "negative parallel weight at ({n},{u})"
                            )));
                        }
                    }
                    total += &w.total;
                }
                let defect = &total - Rational::one();
                if !verdict_zero(repr, &defect) {
                    return Err(Error::InvalidMeasure(format!(
                        "transitions from ({n},{u}) sum to {total}"
                    )));
                }
                if repr == NumberRepr::Float && !defect.is_zero() {
                    // rescale exactly so downstream arithmetic stays consistent
                    for w in row.iter_mut() {
                        w.total = &w.total / &total;
                        if let ParallelWeights::Explicit(list) = &mut w.split {
                            for x in list.iter_mut() {
                                *x = &*x / &total;
                            }
                        }
                    }
                }
                for (w, (v, _)) in row.iter().zip(outs) {
                    if w.total.is_positive() {
                        reachable[n + 1][*v] = true;
                    }
                }
            }
        }
        Ok(MarkovMeasure {
            repr,
            transitions,
            reachable,
        })
    }

    /// Uniform split specified as (successor, weight) pairs per vertex; edges
    /// not mentioned get weight zero.
    pub fn from_sparse_rows(
        graph: &GradedGraph,
        rows: impl Fn(VertexId) -> Vec<(usize, Rational)>,
        repr: NumberRepr,
    ) -> Result<Self> {
        let mut transitions = Vec::new();
        for n in 0..graph.max_level() {
            let mut table = Vec::with_capacity(graph.level_size(n));
            for u in 0..graph.level_size(n) {
                let outs = graph.out_edges(VertexId::new(n, u));
                let wanted = rows(VertexId::new(n, u));
                let row = outs
                    .iter()
                    .map(|(v, _)| {
                        let w = wanted
                            .iter()
                            .find(|(x, _)| x == v)
                            .map(|(_, w)| w.clone())
                            .unwrap_or_else(Rational::zero);
                        EdgeWeight::uniform(w)
                    })
                    .collect();
                table.push(row);
            }
            transitions.push(table);
        }
        MarkovMeasure::from_transitions(graph, transitions, repr)
    }

    pub fn repr(&self) -> NumberRepr {
        self.repr
    }

    pub fn is_reachable(&self, v: VertexId) -> bool {
        self.reachable[v.level][v.index]
    }

    pub fn transition_row(&self, u: VertexId) -> &[EdgeWeight] {
        &self.transitions[u.level][u.index]
    }

    /// Mass of the cylinder of a finite path: product of the per-parallel
    /// transition weights along it.
    pub fn path_mass(&self, graph: &GradedGraph, path: &PathPrefix) -> Result<Rational> {
        path.validate(graph)?;
        let mut acc = Rational::one();
        for level in 1..=path.len() {
            let u = path.vertex_at(level - 1);
            let v = path.vertex_at(level);
            let outs = graph.out_edges(VertexId::new(level - 1, u));
            let slot = outs
                .iter()
                .position(|&(w, _)| w == v)
                .expect("validated path edge");
            let (_, mult) = &outs[slot];
            let par = path.steps[level - 1].1;
            acc *= self.transitions[level - 1][u][slot].per_parallel(mult, par);
            if acc.is_zero() {
                return Ok(acc);
            }
        }
        Ok(acc)
    }

    fn level_masses(&self, graph: &GradedGraph, n: usize) -> Result<Vec<Rational>> {
        graph.check_level(n)?;
        let mut masses = vec![Rational::one()];
        for level in 0..n {
            let mut next = vec![Rational::zero(); graph.level_size(level + 1)];
            for (u, mass) in masses.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                let outs = graph.out_edges(VertexId::new(level, u));
                for ((v, _), w) in outs.iter().zip(&self.transitions[level][u]) {
                    if !w.total.is_zero() {
                        next[*v] += mass * &w.total;
                    }
                }
            }
            masses = next;
        }
        Ok(masses)
    }
}

/// A measure on the path space: either Markov or a finite convex mixture of
/// Markov measures (mixtures of central measures stay central but are not
/// Markov, so the extremality scans accept this wider class).
#[derive(Debug, Clone)]
pub enum Measure {
    Markov(MarkovMeasure),
    Mixture(Vec<(Rational, MarkovMeasure)>),
}

impl From<MarkovMeasure> for Measure {
    fn from(m: MarkovMeasure) -> Self {
        Measure::Markov(m)
    }
}

impl Measure {
    pub fn mixture(parts: Vec<(Rational, MarkovMeasure)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyInput("mixture".into()));
        }
        let total: Rational = parts.iter().map(|(w, _)| w.clone()).sum();
        if total != Rational::one() || parts.iter().any(|(w, _)| !w.is_positive()) {
            return Err(Error::InvalidMeasure(
                "mixture weights must be positive and sum to 1".into(),
            ));
        }
        Ok(Measure::Mixture(parts))
    }

    pub fn repr(&self) -> NumberRepr {
        match self {
            Measure::Markov(m) => m.repr(),
            Measure::Mixture(parts) => {
                if parts.iter().any(|(_, m)| m.repr() == NumberRepr::Float) {
                    NumberRepr::Float
                } else {
                    NumberRepr::Exact
                }
            }
        }
    }

    pub fn is_reachable(&self, v: VertexId) -> bool {
        match self {
            Measure::Markov(m) => m.is_reachable(v),
            Measure::Mixture(parts) => parts.iter().any(|(_, m)| m.is_reachable(v)),
        }
    }

    pub fn path_mass(&self, graph: &GradedGraph, path: &PathPrefix) -> Result<Rational> {
        match self {
            Measure::Markov(m) => m.path_mass(graph, path),
            Measure::Mixture(parts) => {
                let mut acc = Rational::zero();
                for (w, m) in parts {
                    acc += w * m.path_mass(graph, path)?;
                }
                Ok(acc)
            }
        }
    }
}

/// Marginal of the measure on the vertices of level `n` (forward pass).
pub fn level_projection(graph: &GradedGraph, measure: &Measure, n: usize) -> Result<LevelDistribution> {
    let masses = match measure {
        Measure::Markov(m) => m.level_masses(graph, n)?,
        Measure::Mixture(parts) => {
            let mut acc = vec![Rational::zero(); graph.level_size(n)];
            for (w, m) in parts {
                for (slot, x) in m.level_masses(graph, n)?.into_iter().enumerate() {
                    acc[slot] += w * x;
                }
            }
            acc
        }
    };
    LevelDistribution::new(n, masses, measure.repr())
}

/// The system of cotransition probabilities induced by a measure: the mass
/// arriving at v along each parallel edge, conditioned on reaching v.
/// Unreachable vertices are excluded from the equipment's domain.
pub fn cotransitions_of(graph: &GradedGraph, measure: &Measure) -> Result<Equipment> {
    let parts: Vec<(Rational, &MarkovMeasure)> = match measure {
        Measure::Markov(m) => vec![(Rational::one(), m)],
        Measure::Mixture(ps) => ps.iter().map(|(w, m)| (w.clone(), m)).collect(),
    };
    // masses[k][u] = mixture weight k times its mass at the current level
    let mut masses: Vec<Vec<Rational>> = parts.iter().map(|(w, _)| vec![w.clone()]).collect();
    let mut weights: Vec<Vec<Vec<EdgeWeight>>> = Vec::new();
    for level in 1..graph.num_levels() {
        // arriving[v][slot] = list of per-parallel arriving masses
        let mut arriving: Vec<Vec<Vec<Rational>>> = (0..graph.level_size(level))
            .map(|v| {
                graph
                    .in_edges(VertexId::new(level, v))
                    .iter()
                    .map(|(_, mult)| {
                        use num_traits::ToPrimitive;
                        vec![Rational::zero(); mult.to_u64().unwrap_or(0) as usize]
                    })
                    .collect()
            })
            .collect();
        let mut totals: Vec<Rational> = vec![Rational::zero(); graph.level_size(level)];
        for (k, (_, m)) in parts.iter().enumerate() {
            let mass = &masses[k];
            for (u, mu) in mass.iter().enumerate() {
                if mu.is_zero() {
                    continue;
                }
                let outs = graph.out_edges(VertexId::new(level - 1, u));
                for (slot_out, ((v, mult), w)) in
                    outs.iter().zip(m.transition_row(VertexId::new(level - 1, u))).enumerate()
                {
                    let _ = slot_out;
                    if w.total.is_zero() {
                        continue;
                    }
                    let ins = graph.in_edges(VertexId::new(level, *v));
                    let slot_in = ins.iter().position(|&(x, _)| x == u).expect("edge");
                    use num_traits::ToPrimitive;
                    let mcount = mult.to_u64().expect("enumerable multiplicity");
                    for par in 0..mcount {
                        let pw = w.per_parallel(mult, par);
                        if pw.is_zero() {
                            continue;
                        }
                        let add = mu * &pw;
                        arriving[*v][slot_in][par as usize] += &add;
                        totals[*v] += &add;
                    }
                }
            }
        }
        // advance component masses to this level
        for (k, (_, m)) in parts.iter().enumerate() {
            let mass = &masses[k];
            let mut next = vec![Rational::zero(); graph.level_size(level)];
            for (u, mu) in mass.iter().enumerate() {
                if mu.is_zero() {
                    continue;
                }
                let outs = graph.out_edges(VertexId::new(level - 1, u));
                for ((v, _), w) in outs.iter().zip(m.transition_row(VertexId::new(level - 1, u))) {
                    if !w.total.is_zero() {
                        next[*v] += mu * &w.total;
                    }
                }
            }
            masses[k] = next;
        }
        let table: Vec<Vec<EdgeWeight>> = (0..graph.level_size(level))
            .map(|v| {
                if totals[v].is_zero() {
                    return Vec::new(); // outside the equipment's domain
                }
                arriving[v]
                    .iter()
                    .map(|pars| {
                        let list: Vec<Rational> =
                            pars.iter().map(|x| x / &totals[v]).collect();
                        let total: Rational = list.iter().cloned().sum();
                        let uniform = list.windows(2).all(|w| w[0] == w[1]);
                        EdgeWeight {
                            total,
                            split: if uniform {
                                ParallelWeights::Uniform
                            } else {
                                ParallelWeights::Explicit(list)
                            },
                        }
                    })
                    .collect()
            })
            .collect();
        weights.push(table);
    }
    Equipment::from_weights(graph, weights)
}

/// Outcome of the centrality check.
#[derive(Debug, Clone)]
pub struct CentralityReport {
    pub central: bool,
    /// max over vertices of (max path mass - min path mass) / mean path mass
    pub worst_relative_deviation: Rational,
    /// a vertex witnessing the worst deviation, when any mass was seen
    pub witness: Option<VertexId>,
}

/// Checks that all finite paths into every vertex up to `max_level` carry
/// equal measure.
pub fn is_central(
    graph: &GradedGraph,
    measure: &Measure,
    max_level: usize,
    path_cap: usize,
) -> Result<CentralityReport> {
    graph.check_level(max_level)?;
    let mut worst = Rational::zero();
    let mut witness = None;
    for level in 1..=max_level {
        for v in 0..graph.level_size(level) {
            let vid = VertexId::new(level, v);
            if !measure.is_reachable(vid) {
                continue;
            }
            let paths = graph.enumerate_paths_into(vid, path_cap)?;
            let mut lo: Option<Rational> = None;
            let mut hi: Option<Rational> = None;
            let mut sum = Rational::zero();
            let mut count = 0u64;
            for p in &paths {
                let mass = measure.path_mass(graph, p)?;
                sum += &mass;
                count += 1;
                if lo.as_ref().is_none_or(|x| &mass < x) {
                    lo = Some(mass.clone());
                }
                if hi.as_ref().is_none_or(|x| &mass > x) {
                    hi = Some(mass);
                }
            }
            if count == 0 || sum.is_zero() {
                continue;
            }
            let mean = &sum / Rational::from_integer(count.into());
            let dev = (hi.unwrap() - lo.unwrap()) / mean;
            if dev > worst {
                worst = dev;
                witness = Some(vid);
            }
        }
    }
    Ok(CentralityReport {
        central: verdict_zero(measure.repr(), &worst),
        worst_relative_deviation: worst,
        witness,
    })
}

/// Ratio of cotransition products along two cofinal paths.
pub fn cocycle(
    graph: &GradedGraph,
    equipment: &Equipment,
    path1: &PathPrefix,
    path2: &PathPrefix,
) -> Result<Rational> {
    path1.validate(graph)?;
    path2.validate(graph)?;
    if path1.len() != path2.len() || path1.endpoint() != path2.endpoint() {
        return Err(Error::NotCofinal);
    }
    // first level after which the paths fully coincide
    let mut merge = 0;
    for level in (1..=path1.len()).rev() {
        let same = path1.vertex_at(level) == path2.vertex_at(level)
            && path1.vertex_at(level - 1) == path2.vertex_at(level - 1)
            && path1.steps[level - 1].1 == path2.steps[level - 1].1;
        if !same {
            merge = level;
            break;
        }
    }
    let mut num = Rational::one();
    let mut den = Rational::one();
    for level in 1..=merge {
        num *= step_weight(graph, equipment, path1, level)?;
        den *= step_weight(graph, equipment, path2, level)?;
    }
    if den.is_zero() {
        return Err(Error::InvalidMeasure(
            "cocycle undefined: zero cotransition along the second path".into(),
        ));
    }
    Ok(num / den)
}

fn step_weight(
    graph: &GradedGraph,
    equipment: &Equipment,
    path: &PathPrefix,
    level: usize,
) -> Result<Rational> {
    let v = VertexId::new(level, path.vertex_at(level));
    if !equipment.contains(v) {
        return Err(Error::InvalidMeasure(format!(
            "vertex ({},{}) outside equipment domain",
            v.level, v.index
        )));
    }
    let u = path.vertex_at(level - 1);
    let ins = graph.in_edges(v);
    let slot = ins.iter().position(|&(w, _)| w == u).expect("edge");
    let (_, mult) = &ins[slot];
    Ok(equipment.row(v)[slot].per_parallel(mult, path.steps[level - 1].1))
}

/// One-step cotransition projections composed from level m down to level n,
/// for every vertex of level m in the equipment's domain. The result is a
/// dense row over the vertices of level n (None outside the domain).
pub fn vertex_projections_to_level(
    graph: &GradedGraph,
    equipment: &Equipment,
    m: usize,
    n: usize,
) -> Result<Vec<Option<Vec<Rational>>>> {
    if n >= m {
        return Err(Error::BadProjectionLevels { target: n, start: m });
    }
    graph.check_level(m)?;
    let width = graph.level_size(n);
    // rows for level n itself: identity
    let mut rows: Vec<Option<Vec<Rational>>> = (0..width)
        .map(|v| {
            let mut row = vec![Rational::zero(); width];
            row[v] = Rational::one();
            Some(row)
        })
        .collect();
    for level in n + 1..=m {
        let mut next: Vec<Option<Vec<Rational>>> = Vec::with_capacity(graph.level_size(level));
        for v in 0..graph.level_size(level) {
            let vid = VertexId::new(level, v);
            if !equipment.contains(vid) {
                next.push(None);
                continue;
            }
            let mut acc = vec![Rational::zero(); width];
            let mut ok = true;
            for (u, w) in equipment.cotransition_row(graph, vid) {
                if w.is_zero() {
                    continue;
                }
                match &rows[u] {
                    Some(row) => {
                        for (slot, x) in row.iter().enumerate() {
                            if !x.is_zero() {
                                acc[slot] += &w * x;
                            }
                        }
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            next.push(if ok { Some(acc) } else { None });
        }
        rows = next;
    }
    Ok(rows)
}

/// The point p_{m,n}(δ_vertex) of the simplex over level n.
pub fn vertex_projection(
    graph: &GradedGraph,
    equipment: &Equipment,
    vertex: VertexId,
    n: usize,
) -> Result<LevelDistribution> {
    graph.check_vertex(vertex)?;
    if n >= vertex.level {
        return Err(Error::BadProjectionLevels {
            target: n,
            start: vertex.level,
        });
    }
    let rows = vertex_projections_to_level(graph, equipment, vertex.level, n)?;
    match &rows[vertex.index] {
        Some(row) => LevelDistribution::new(n, row.clone(), NumberRepr::Exact),
        None => Err(Error::InvalidMeasure(format!(
            "vertex ({},{}) outside equipment domain",
            vertex.level, vertex.index
        ))),
    }
}

/// Mass of level-m vertices whose projection to level n lies within total
/// variation ε of the measure's own level-n marginal. The statistic tends to
/// one along m for ergodic measures and stays bounded away for mixtures.
pub fn extremality_statistic(
    graph: &GradedGraph,
    equipment: &Equipment,
    measure: &Measure,
    n: usize,
    m: usize,
    epsilon: &Rational,
) -> Result<Rational> {
    if n >= m {
        return Err(Error::BadProjectionLevels { target: n, start: m });
    }
    graph.check_level(m)?;
    let mu_n = level_projection(graph, measure, n)?;
    let mu_m = level_projection(graph, measure, m)?;
    let rows = vertex_projections_to_level(graph, equipment, m, n)?;
    let mut mass = Rational::zero();
    for (v, mv) in mu_m.masses.iter().enumerate() {
        if mv.is_zero() {
            continue;
        }
        let row = rows[v].as_ref().ok_or_else(|| {
            Error::InvalidMeasure(format!(
                "vertex ({m},{v}) carries mass but lies outside the equipment domain"
            ))
        })?;
        if total_variation(row, &mu_n.masses) <= *epsilon {
            mass += mv;
        }
    }
    Ok(mass)
}

// ---------------------------------------------------------------------------
// Constructors for the worked measures.
// ---------------------------------------------------------------------------

/// Bernoulli(p) on the classic Pascal graph: step k adds a unit to the second
/// coordinate with probability p.
pub fn bernoulli_pascal(graph: &GradedGraph, p: &Rational) -> Result<MarkovMeasure> {
    if p.is_negative() || p > &Rational::one() {
        return Err(Error::DegenerateParameter(format!("p = {p} outside [0,1]")));
    }
    let q = Rational::one() - p;
    MarkovMeasure::from_sparse_rows(
        graph,
        |u| {
            let (k0, k1) = match graph.label(u) {
                Label::Tuple(t) => (t[0], t[1]),
                _ if u.level == 0 => (0, 0),
                _ => return Vec::new(),
            };
            let mut row = Vec::new();
            for &(v, _) in graph.out_edges(u) {
                let Label::Tuple(s) = graph.label(VertexId::new(u.level + 1, v)) else {
                    continue;
                };
                if s[0] == k0 + 1 && s[1] == k1 {
                    row.push((v, q.clone()));
                } else if s[0] == k0 && s[1] == k1 + 1 {
                    row.push((v, p.clone()));
                }
            }
            row
        },
        NumberRepr::Exact,
    )
}

/// Telescopes a Markov measure along with its graph: each original path
/// between two surviving levels becomes one parallel edge of the telescoped
/// graph, carrying the product of the original transition weights. Parallel
/// edges of a pair (u, w) are indexed by the lexicographic order of the
/// original step sequences, matching the path enumeration order.
pub fn telescope_measure(
    graph: &GradedGraph,
    measure: &MarkovMeasure,
    level_indices: &[usize],
) -> Result<(GradedGraph, MarkovMeasure)> {
    let tg = graph.telescope(level_indices)?;
    let mut transitions = Vec::new();
    for (k, w) in level_indices.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let mut table = Vec::with_capacity(graph.level_size(lo));
        for u in 0..graph.level_size(lo) {
            // per-endpoint lists of path products, in DFS-lex step order
            let mut lists: Vec<Vec<Rational>> = vec![Vec::new(); graph.level_size(hi)];
            collect_paths(graph, measure, lo, u, hi, &mut lists)?;
            let outs = tg.out_edges(VertexId::new(k, u));
            let row: Vec<EdgeWeight> = outs
                .iter()
                .map(|&(v, ref mult)| {
                    use num_traits::ToPrimitive;
                    let list = std::mem::take(&mut lists[v]);
                    debug_assert_eq!(Some(list.len() as u64), mult.to_u64());
                    let total: Rational = list.iter().cloned().sum();
                    EdgeWeight {
                        total,
                        split: ParallelWeights::Explicit(list),
                    }
                })
                .collect();
            table.push(row);
        }
        transitions.push(table);
    }
    let measure = MarkovMeasure::from_transitions(&tg, transitions, measure.repr())?;
    Ok((tg, measure))
}

/// Depth-first enumeration of the weighted paths from (lo, u) up to level
/// `hi`, appending each path's weight product to its endpoint's list.
fn collect_paths(
    graph: &GradedGraph,
    measure: &MarkovMeasure,
    level: usize,
    at: usize,
    hi: usize,
    lists: &mut [Vec<Rational>],
) -> Result<()> {
    fn rec(
        graph: &GradedGraph,
        measure: &MarkovMeasure,
        level: usize,
        at: usize,
        hi: usize,
        acc: &Rational,
        lists: &mut [Vec<Rational>],
    ) -> Result<()> {
        if level == hi {
            lists[at].push(acc.clone());
            return Ok(());
        }
        let uid = VertexId::new(level, at);
        let outs = graph.out_edges(uid);
        // rows of unreachable vertices are unvalidated; their paths carry no mass
        let reachable = measure.is_reachable(uid);
        let row = measure.transition_row(uid);
        for (slot, (v, mult)) in outs.iter().enumerate() {
            use num_traits::ToPrimitive;
            let m = mult
                .to_u64()
                .ok_or_else(|| Error::ResourceLimit("huge multiplicity".into()))?;
            for par in 0..m {
                let weight = if reachable && slot < row.len() {
                    row[slot].per_parallel(mult, par)
                } else {
                    Rational::zero()
                };
                let next = acc * &weight;
                rec(graph, measure, level + 1, *v, hi, &next, lists)?;
            }
        }
        Ok(())
    }
    rec(graph, measure, level, at, hi, &Rational::one(), lists)
}

/// Stationary two-state chain on a dyadic-shaped graph: `initial` feeds the
/// two level-1 states, `matrix[u][v]` the later transitions.
pub fn stationary_chain(
    graph: &GradedGraph,
    initial: &[Rational; 2],
    matrix: &[[Rational; 2]; 2],
) -> Result<MarkovMeasure> {
    MarkovMeasure::from_sparse_rows(
        graph,
        |u| {
            let outs = graph.out_edges(u);
            if u.level == 0 {
                return outs
                    .iter()
                    .map(|&(v, _)| (v, initial[v].clone()))
                    .collect();
            }
            outs.iter()
                .map(|&(v, _)| (v, matrix[u.index][v].clone()))
                .collect()
        },
        NumberRepr::Exact,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{dyadic, pascal, pascal_vertex};
    use crate::numeric::{rat, rat_int};

    fn flip_chain(p: i64, levels: usize) -> (GradedGraph, MarkovMeasure) {
        let g = dyadic(levels).unwrap();
        let m = stationary_chain(
            &g,
            &[rat(1, 2), rat(1, 2)],
            &[
                [rat(p, 10), rat(10 - p, 10)],
                [rat(10 - p, 10), rat(p, 10)],
            ],
        )
        .unwrap();
        (g, m)
    }

    #[test]
    fn bernoulli_pascal_is_central() {
        let g = pascal(1, 6).unwrap();
        for p in [rat(1, 2), rat(1, 3), rat(7, 10)] {
            let m = Measure::from(bernoulli_pascal(&g, &p).unwrap());
            let rep = is_central(&g, &m, 6, 100_000).unwrap();
            assert!(rep.central, "p = {p}");
            assert!(rep.worst_relative_deviation.is_zero());
        }
    }

    #[test]
    fn bernoulli_cotransitions_match_central_equipment() {
        let g = pascal(1, 6).unwrap();
        let m = Measure::from(bernoulli_pascal(&g, &rat(3, 10)).unwrap());
        let eq = cotransitions_of(&g, &m).unwrap();
        let central = Equipment::central(&g);
        for level in 1..=6 {
            for v in 0..g.level_size(level) {
                let vid = VertexId::new(level, v);
                assert_eq!(
                    eq.cotransition_row(&g, vid),
                    central.cotransition_row(&g, vid)
                );
            }
        }
    }

    #[test]
    fn deterministic_path_has_unit_cotransitions() {
        let g = pascal(1, 5).unwrap();
        let m = Measure::from(bernoulli_pascal(&g, &rat_int(1)).unwrap());
        let eq = cotransitions_of(&g, &m).unwrap();
        for level in 1..=5 {
            // only the all-ones vertex (k = level) is reachable
            let v = pascal_vertex(&g, level, level).unwrap();
            assert!(eq.contains(v));
            let row = eq.cotransition_row(&g, v);
            let total: Rational = row.iter().map(|(_, w)| w.clone()).sum();
            assert_eq!(total, Rational::one());
            // off-path vertices carry no mass and fall outside the domain
            let k0 = pascal_vertex(&g, level, 0).unwrap();
            assert!(!eq.contains(k0));
        }
    }

    #[test]
    fn flip_chain_cotransitions_are_stationary() {
        let (g, m) = flip_chain(7, 8);
        let eq = cotransitions_of(&g, &Measure::from(m)).unwrap();
        for level in 2..=8 {
            for v in 0..2 {
                let row = eq.cotransition_row(&g, VertexId::new(level, v));
                let expect = if v == 0 {
                    vec![(0, rat(7, 10)), (1, rat(3, 10))]
                } else {
                    vec![(0, rat(3, 10)), (1, rat(7, 10))]
                };
                assert_eq!(row, expect, "level {level} vertex {v}");
            }
        }
    }

    #[test]
    fn flip_chain_is_not_central() {
        let (g, m) = flip_chain(7, 4);
        let rep = is_central(&g, &Measure::from(m), 3, 10_000).unwrap();
        assert!(!rep.central);
        assert!(rep.worst_relative_deviation.is_positive());
    }

    #[test]
    fn chain_graph_measures_are_central() {
        // one vertex per level: a single path
        let g = GradedGraph::new(
            vec![vec![Label::None], vec![Label::Int(0)], vec![Label::Int(0)]],
            vec![vec![vec![(0, 1u32.into())]], vec![vec![(0, 1u32.into())]]],
        )
        .unwrap();
        let m = MarkovMeasure::from_sparse_rows(&g, |_| vec![(0, Rational::one())], NumberRepr::Exact);
        let m = Measure::from(m.unwrap());
        let rep = is_central(&g, &m, 2, 100).unwrap();
        assert!(rep.central);
    }

    #[test]
    fn level_projection_binomial() {
        let g = pascal(1, 4).unwrap();
        let m = Measure::from(bernoulli_pascal(&g, &rat(1, 2)).unwrap());
        let d = level_projection(&g, &m, 2).unwrap();
        assert_eq!(d.masses, vec![rat(1, 4), rat(1, 2), rat(1, 4)]);
        let d0 = level_projection(&g, &m, 0).unwrap();
        assert_eq!(d0.masses, vec![rat_int(1)]);
    }

    #[test]
    fn flip_chain_marginals_stay_uniform() {
        let (g, m) = flip_chain(7, 4);
        let d = level_projection(&g, &Measure::from(m), 3).unwrap();
        assert_eq!(d.masses, vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn cocycle_trivial_and_central() {
        let g = pascal(1, 5).unwrap();
        let eq = Equipment::central(&g);
        let v = pascal_vertex(&g, 5, 2).unwrap();
        let paths = g.enumerate_paths_into(v, 1000).unwrap();
        for p in &paths {
            assert_eq!(cocycle(&g, &eq, p, p).unwrap(), Rational::one());
        }
        // central equipment: every cofinal pair has cocycle 1
        for a in &paths {
            for b in &paths {
                assert_eq!(cocycle(&g, &eq, a, b).unwrap(), Rational::one());
            }
        }
    }

    #[test]
    fn cocycle_bernoulli_equipment() {
        let g = pascal(1, 5).unwrap();
        let m = Measure::from(bernoulli_pascal(&g, &rat(3, 10)).unwrap());
        let eq = cotransitions_of(&g, &m).unwrap();
        let v = pascal_vertex(&g, 4, 2).unwrap();
        let paths = g.enumerate_paths_into(v, 100).unwrap();
        for a in &paths {
            for b in &paths {
                assert_eq!(cocycle(&g, &eq, a, b).unwrap(), Rational::one());
            }
        }
    }

    #[test]
    fn non_cofinal_paths_rejected() {
        let g = pascal(1, 4).unwrap();
        let eq = Equipment::central(&g);
        let a = g
            .enumerate_paths_into(pascal_vertex(&g, 3, 1).unwrap(), 100)
            .unwrap();
        let b = g
            .enumerate_paths_into(pascal_vertex(&g, 3, 2).unwrap(), 100)
            .unwrap();
        assert!(matches!(
            cocycle(&g, &eq, &a[0], &b[0]),
            Err(Error::NotCofinal)
        ));
    }

    #[test]
    fn one_step_vertex_projection_is_cotransition_row() {
        let g = pascal(1, 4).unwrap();
        let eq = Equipment::central(&g);
        let v = pascal_vertex(&g, 3, 1).unwrap();
        let proj = vertex_projection(&g, &eq, v, 2).unwrap();
        let mut expect = vec![Rational::zero(); g.level_size(2)];
        for (u, w) in eq.cotransition_row(&g, v) {
            expect[u] += w;
        }
        assert_eq!(proj.masses, expect);
    }

    #[test]
    fn central_pascal_projects_middle_to_half() {
        let g = pascal(1, 12).unwrap();
        let eq = Equipment::central(&g);
        for m in 1..=6usize {
            let v = pascal_vertex(&g, 2 * m, m).unwrap();
            let proj = vertex_projection(&g, &eq, v, 1).unwrap();
            assert_eq!(proj.masses, vec![rat(1, 2), rat(1, 2)], "m = {m}");
        }
    }

    #[test]
    fn projection_level_guards() {
        let g = pascal(1, 4).unwrap();
        let eq = Equipment::central(&g);
        let v = pascal_vertex(&g, 2, 1).unwrap();
        assert!(matches!(
            vertex_projection(&g, &eq, v, 2),
            Err(Error::BadProjectionLevels { .. })
        ));
        let m = Measure::from(bernoulli_pascal(&g, &rat(1, 2)).unwrap());
        assert!(matches!(
            extremality_statistic(&g, &eq, &m, 3, 3, &rat(1, 10)),
            Err(Error::BadProjectionLevels { .. })
        ));
    }

    #[test]
    fn martingale_consistency() {
        // E_{mu_m}[vertex_projection(v, n)] == level_projection(n), exactly
        let g = pascal(1, 8).unwrap();
        let eq = Equipment::central(&g);
        for p in [rat(1, 2), rat(1, 3)] {
            let m = Measure::from(bernoulli_pascal(&g, &p).unwrap());
            for target in 0..3usize {
                for level in (target + 1)..=8 {
                    let mu_m = level_projection(&g, &m, level).unwrap();
                    let mu_n = level_projection(&g, &m, target).unwrap();
                    let rows = vertex_projections_to_level(&g, &eq, level, target).unwrap();
                    let mut acc = vec![Rational::zero(); g.level_size(target)];
                    for (v, mass) in mu_m.masses.iter().enumerate() {
                        if mass.is_zero() {
                            continue;
                        }
                        for (slot, x) in rows[v].as_ref().unwrap().iter().enumerate() {
                            acc[slot] += mass * x;
                        }
                    }
                    assert_eq!(acc, mu_n.masses);
                }
            }
        }
    }

    #[test]
    fn extremality_concentrates_for_bernoulli_half() {
        let g = pascal(1, 100).unwrap();
        let eq = Equipment::central(&g);
        let m = Measure::from(bernoulli_pascal(&g, &rat(1, 2)).unwrap());
        let s = extremality_statistic(&g, &eq, &m, 1, 100, &rat(1, 10)).unwrap();
        assert!(s > rat(9, 10), "statistic {s}");
        assert!(s < Rational::one());
    }

    #[test]
    fn extremality_fails_for_mixture() {
        let g = pascal(1, 100).unwrap();
        let eq = Equipment::central(&g);
        let mix = Measure::mixture(vec![
            (rat(1, 2), bernoulli_pascal(&g, &rat(1, 4)).unwrap()),
            (rat(1, 2), bernoulli_pascal(&g, &rat(3, 4)).unwrap()),
        ])
        .unwrap();
        let s = extremality_statistic(&g, &eq, &mix, 1, 100, &rat(1, 10)).unwrap();
        assert!(s < rat(1, 5), "statistic {s}");
    }

    #[test]
    fn telescoped_measure_preserves_level_masses() {
        let (g, m) = flip_chain(7, 9);
        let indices = [0usize, 1, 3, 6, 9];
        let (tg, tm) = telescope_measure(&g, &m, &indices).unwrap();
        let orig = Measure::from(m);
        let tele = Measure::from(tm);
        for (new_level, &old_level) in indices.iter().enumerate() {
            let a = level_projection(&g, &orig, old_level).unwrap();
            let b = level_projection(&tg, &tele, new_level).unwrap();
            assert_eq!(a.masses, b.masses, "level {old_level}");
        }
        // lumped cotransitions of the telescoped flip chain are the matrix
        // powers of the one-step cotransition matrix
        let eq = cotransitions_of(&tg, &tele).unwrap();
        let pow = |g: usize| -> [[Rational; 2]; 2] {
            // (flip matrix)^g has diagonal (1 + d^g)/2 with d = 2/5
            let d = rat(2, 5);
            let mut dg = Rational::one();
            for _ in 0..g {
                dg *= &d;
            }
            let hi = (Rational::one() + &dg) / rat_int(2);
            let lo = (Rational::one() - &dg) / rat_int(2);
            [[hi.clone(), lo.clone()], [lo, hi]]
        };
        for (new_level, w) in indices.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if w[0] == 0 {
                continue; // the root level has trivial cotransitions
            }
            let expect = pow(gap);
            for v in 0..2usize {
                let row = eq.cotransition_row(&tg, VertexId::new(new_level + 1, v));
                for (u, weight) in row {
                    assert_eq!(weight, expect[v][u], "gap {gap} v {v} u {u}");
                }
            }
        }
    }

    #[test]
    fn telescoped_central_equipment_is_the_stepwise_product() {
        let g = pascal(1, 4).unwrap();
        let t = g.telescope(&[0, 2, 4]).unwrap();
        let eq_t = Equipment::central(&t);
        let eq_g = Equipment::central(&g);
        // lumped two-step product on the original graph
        for v in 0..g.level_size(4) {
            let mut composed = vec![Rational::zero(); g.level_size(2)];
            for (mid, w1) in eq_g.cotransition_row(&g, VertexId::new(4, v)) {
                for (lo, w2) in eq_g.cotransition_row(&g, VertexId::new(3, mid)) {
                    composed[lo] += &w1 * w2;
                }
            }
            let mut telescoped = vec![Rational::zero(); t.level_size(1)];
            for (u, w) in eq_t.cotransition_row(&t, VertexId::new(2, v)) {
                telescoped[u] += w;
            }
            assert_eq!(telescoped, composed, "vertex {v}");
        }
    }

    #[test]
    fn one_vertex_level_statistic_is_one() {
        // m = n + 1 with a single vertex at level n
        let g = pascal(1, 2).unwrap();
        let eq = Equipment::central(&g);
        let m = Measure::from(bernoulli_pascal(&g, &rat(1, 3)).unwrap());
        let s = extremality_statistic(&g, &eq, &m, 0, 1, &rat(1, 10)).unwrap();
        assert_eq!(s, Rational::one());
    }
}
