//! Canonical graded-graph builders: Pascal, Young, dyadic, Fibonacci,
//! ordered/unordered pairs, and pascalizations (dynamic graphs) of a chain
//! or a regular tree.

use crate::graph::{GradedGraph, Label, VertexId};
use crate::numeric::Dim;
use crate::{Error, Result};
use num_traits::One;

/// Hard cap on the size of a single level; builders refuse to grow past it.
pub const MAX_LEVEL_VERTICES: usize = 2_000_000;

/// Base graph of a pascalization (dynamic graph).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PascalizationBase {
    /// The two-sided chain ℤ rooted at 0; its pascalization is the Pascal graph.
    Chain,
    /// The (q+1)-regular tree rooted at its origin.
    Tree { q: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildKind {
    /// d-dimensional Pascal graph; d = 1 is the classic Pascal triangle.
    Pascal { d: usize, max_n: usize },
    Young { max_n: usize },
    Dyadic { max_n: usize },
    Fibonacci { max_n: usize },
    OrderedPairs { max_n: usize },
    UnorderedPairs { max_n: usize },
    Pascalization {
        base: PascalizationBase,
        max_n: usize,
    },
}

/// Builds one of the canonical example graphs, truncated at `max_n` levels.
pub fn build(kind: &BuildKind) -> Result<GradedGraph> {
    match *kind {
        BuildKind::Pascal { d, max_n } => pascal(d, max_n),
        BuildKind::Young { max_n } => young(max_n),
        BuildKind::Dyadic { max_n } => dyadic(max_n),
        BuildKind::Fibonacci { max_n } => fibonacci(max_n),
        BuildKind::OrderedPairs { max_n } => pairs(max_n, true),
        BuildKind::UnorderedPairs { max_n } => pairs(max_n, false),
        BuildKind::Pascalization { base, max_n } => pascalization(base, max_n),
    }
}

fn check_width(width: usize) -> Result<()> {
    if width > MAX_LEVEL_VERTICES {
        return Err(Error::ResourceLimit(format!(
            "level would hold {width} vertices (cap {MAX_LEVEL_VERTICES})"
        )));
    }
    Ok(())
}

/// Compositions of `n` into `parts` nonnegative parts, in lexicographic order.
fn compositions(n: usize, parts: usize) -> Vec<Vec<i64>> {
    fn rec(n: i64, parts: usize, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            rec(n - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n as i64, parts, &mut Vec::new(), &mut out);
    out
}

/// The d-dimensional Pascal graph: level n holds the compositions of n into
/// d+1 parts, and an edge increments one coordinate.
pub fn pascal(d: usize, max_n: usize) -> Result<GradedGraph> {
    if d == 0 {
        return Err(Error::DegenerateParameter("pascal needs d >= 1".into()));
    }
    let mut labels = vec![vec![Label::None]];
    let mut edges = Vec::new();
    for n in 1..=max_n {
        let comps = compositions(n, d + 1);
        check_width(comps.len())?;
        let prev = &labels[n - 1];
        let index_of = |c: &Vec<i64>| -> usize {
            prev.iter()
                .position(|l| matches!(l, Label::Tuple(t) if t == c))
                .expect("predecessor composition present")
        };
        let mut table = Vec::with_capacity(comps.len());
        for c in &comps {
            let mut ins = Vec::new();
            for j in 0..=d {
                if c[j] > 0 {
                    let mut p = c.clone();
                    p[j] -= 1;
                    let u = if n == 1 { 0 } else { index_of(&p) };
                    ins.push((u, Dim::one()));
                }
            }
            table.push(ins);
        }
        labels.push(comps.into_iter().map(Label::Tuple).collect());
        edges.push(table);
    }
    GradedGraph::new(labels, edges)
}

/// Resolves the classic Pascal vertex (n, k), k = number of unit steps in the
/// second coordinate.
pub fn pascal_vertex(graph: &GradedGraph, n: usize, k: usize) -> Result<VertexId> {
    let label = Label::Tuple(vec![(n - k) as i64, k as i64]);
    graph
        .find_by_label(n, &label)
        .ok_or(Error::UnknownVertex { level: n, index: k })
}

/// Partitions of `n` in descending lexicographic order ([n] first).
fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(n: u32, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        let hi = max_part.min(n);
        for part in (1..=hi).rev() {
            prefix.push(part);
            rec(n - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// The Young graph: level n holds the partitions of n, edges add one box.
pub fn young(max_n: usize) -> Result<GradedGraph> {
    let mut labels = vec![vec![Label::None]];
    let mut edges = Vec::new();
    for n in 1..=max_n {
        let parts = partitions(n as u32);
        check_width(parts.len())?;
        let prev = &labels[n - 1];
        let index_of = |p: &Vec<u32>| -> usize {
            prev.iter()
                .position(|l| matches!(l, Label::Partition(q) if q == p))
                .expect("sub-partition present")
        };
        let mut table = Vec::with_capacity(parts.len());
        for lam in &parts {
            let mut ins = Vec::new();
            for i in 0..lam.len() {
                // removable corner: strictly longer than the next row
                if i + 1 < lam.len() && lam[i] == lam[i + 1] {
                    continue;
                }
                let mut mu = lam.clone();
                if mu[i] == 1 {
                    mu.truncate(i);
                } else {
                    mu[i] -= 1;
                }
                let u = if n == 1 { 0 } else { index_of(&mu) };
                ins.push((u, Dim::one()));
            }
            table.push(ins);
        }
        labels.push(parts.into_iter().map(Label::Partition).collect());
        edges.push(table);
    }
    GradedGraph::new(labels, edges)
}

pub fn young_vertex(graph: &GradedGraph, partition: &[u32]) -> Result<VertexId> {
    let n: u32 = partition.iter().sum();
    graph
        .find_by_label(n as usize, &Label::Partition(partition.to_vec()))
        .ok_or(Error::UnknownVertex {
            level: n as usize,
            index: usize::MAX,
        })
}

/// Stationary two-state graph with all four edges present at every level.
pub fn dyadic(max_n: usize) -> Result<GradedGraph> {
    stationary_two_state(max_n, &[(0, 0), (0, 1), (1, 0), (1, 1)])
}

/// Stationary two-state graph with edges 0->0, 0->1, 1->0 (golden-mean shift);
/// total path counts obey the Fibonacci recursion.
pub fn fibonacci(max_n: usize) -> Result<GradedGraph> {
    stationary_two_state(max_n, &[(0, 0), (0, 1), (1, 0)])
}

fn stationary_two_state(max_n: usize, arcs: &[(usize, usize)]) -> Result<GradedGraph> {
    let mut labels = vec![vec![Label::None]];
    let mut edges = Vec::new();
    for n in 1..=max_n {
        labels.push(vec![Label::Int(0), Label::Int(1)]);
        let table = if n == 1 {
            vec![vec![(0, Dim::one())], vec![(0, Dim::one())]]
        } else {
            let mut t = vec![Vec::new(), Vec::new()];
            for &(u, v) in arcs {
                t[v].push((u, Dim::one()));
            }
            t
        };
        edges.push(table);
    }
    GradedGraph::new(labels, edges)
}

pub fn ordered_pairs(max_n: usize) -> Result<GradedGraph> {
    pairs(max_n, true)
}

pub fn unordered_pairs(max_n: usize) -> Result<GradedGraph> {
    pairs(max_n, false)
}

/// Graphs of ordered (OP) and unordered (UP) pairs. Level n+1 consists of the
/// ordered pairs (resp. multisets) of level-n vertices; in UP a pair {v, v}
/// is joined to v by a double edge.
fn pairs(max_n: usize, ordered: bool) -> Result<GradedGraph> {
    let mut labels = vec![vec![Label::None]];
    let mut edges = Vec::new();
    if max_n >= 1 {
        labels.push(vec![Label::Int(0), Label::Int(1)]);
        edges.push(vec![vec![(0, Dim::one())], vec![(0, Dim::one())]]);
    }
    for n in 2..=max_n {
        let prev_size = labels[n - 1].len();
        let width = if ordered {
            prev_size.checked_mul(prev_size)
        } else {
            prev_size.checked_mul(prev_size + 1).map(|x| x / 2)
        }
        .ok_or_else(|| Error::ResourceLimit("pair level overflows usize".into()))?;
        check_width(width)?;
        let mut level = Vec::with_capacity(width);
        let mut table = Vec::with_capacity(width);
        for a in 0..prev_size {
            let b_range = if ordered { 0..prev_size } else { a..prev_size };
            for b in b_range {
                level.push(Label::Pair(
                    Box::new(labels[n - 1][a].clone()),
                    Box::new(labels[n - 1][b].clone()),
                ));
                if a == b {
                    let mult = if ordered { Dim::one() } else { Dim::from(2u32) };
                    table.push(vec![(a, mult)]);
                } else {
                    table.push(vec![(a, Dim::one()), (b, Dim::one())]);
                }
            }
        }
        labels.push(level);
        edges.push(table);
    }
    GradedGraph::new(labels, edges)
}

/// Tree addresses for the (q+1)-regular tree: the root is the empty word,
/// the root has children 0..=q, every other vertex has children 0..q.
pub fn tree_children(word: &[u8], q: usize) -> Vec<Vec<u8>> {
    let fanout = if word.is_empty() { q + 1 } else { q };
    (0..fanout)
        .map(|c| {
            let mut w = word.to_vec();
            w.push(c as u8);
            w
        })
        .collect()
}

/// Tree neighbours of a vertex: parent (if any) then children.
pub fn tree_neighbors(word: &[u8], q: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    if !word.is_empty() {
        out.push(word[..word.len() - 1].to_vec());
    }
    out.extend(tree_children(word, q));
    out
}

/// The dynamic graph (pascalization) of the base graph: level n holds the
/// base vertices reachable from the root by a walk of length exactly n, and
/// edges follow base adjacency.
pub fn pascalization(base: PascalizationBase, max_n: usize) -> Result<GradedGraph> {
    match base {
        PascalizationBase::Chain => pascalization_chain(max_n),
        PascalizationBase::Tree { q } => pascalization_tree(q, max_n),
    }
}

fn pascalization_chain(max_n: usize) -> Result<GradedGraph> {
    let mut labels = vec![vec![Label::None]];
    let mut edges = Vec::new();
    for n in 1..=max_n {
        // positions m with |m| <= n, m ≡ n (mod 2), listed in descending m so
        // that the chain pascalization coincides with pascal(1) index-by-index
        let level: Vec<i64> = (0..=n).map(|i| n as i64 - 2 * i as i64).collect();
        let prev: Vec<i64> = (0..n).map(|i| (n - 1) as i64 - 2 * i as i64).collect();
        let mut table = Vec::with_capacity(level.len());
        for &m in &level {
            let mut ins = Vec::new();
            for (u, &p) in prev.iter().enumerate() {
                if (p - m).abs() == 1 {
                    ins.push((u, Dim::one()));
                }
            }
            table.push(ins);
        }
        labels.push(level.into_iter().map(Label::Int).collect());
        edges.push(table);
    }
    GradedGraph::new(labels, edges)
}

fn pascalization_tree(q: usize, max_n: usize) -> Result<GradedGraph> {
    if q < 1 {
        return Err(Error::DegenerateParameter(
            "tree pascalization needs q >= 1".into(),
        ));
    }
    let mut words: Vec<Vec<Vec<u8>>> = vec![vec![Vec::new()]];
    for n in 1..=max_n {
        // words w with |w| <= n, |w| ≡ n (mod 2), ordered by (length, lex)
        let mut level: Vec<Vec<u8>> = Vec::new();
        let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
        let mut len = 0;
        while len <= n {
            if len % 2 == n % 2 {
                level.extend(frontier.iter().cloned());
            }
            len += 1;
            if len > n {
                break;
            }
            let next_width: usize = frontier
                .iter()
                .map(|w| if w.is_empty() { q + 1 } else { q })
                .sum();
            check_width(level.len() + next_width)?;
            frontier = frontier
                .iter()
                .flat_map(|w| tree_children(w, q))
                .collect();
        }
        check_width(level.len())?;
        words.push(level);
    }
    let mut edges = Vec::new();
    for n in 1..=max_n {
        let prev = &words[n - 1];
        let level = &words[n];
        let index_of = |w: &Vec<u8>| prev.binary_search_by(|x| cmp_word(x, w)).ok();
        let mut table = Vec::with_capacity(level.len());
        for w in level {
            let mut ins: Vec<(usize, Dim)> = tree_neighbors(w, q)
                .iter()
                .filter_map(|nb| index_of(nb).map(|u| (u, Dim::one())))
                .collect();
            ins.sort_by_key(|&(u, _)| u);
            table.push(ins);
        }
        edges.push(table);
    }
    let labels = words
        .into_iter()
        .map(|lvl| lvl.into_iter().map(Label::Word).collect())
        .collect();
    GradedGraph::new(labels, edges)
}

fn cmp_word(a: &[u8], b: &[u8]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Equipment;
    use crate::numeric::{rat, Rational};
    use num_traits::{One, Zero};

    #[test]
    fn pascal_dim_is_binomial() {
        let g = pascal(1, 6).unwrap();
        let v = pascal_vertex(&g, 4, 2).unwrap();
        assert_eq!(g.dim(v).unwrap(), &Dim::from(6u32));
        assert_eq!(g.dim(VertexId::new(0, 0)).unwrap(), &Dim::one());
    }

    #[test]
    fn pascal_total_paths_double_each_level() {
        let g = pascal(1, 10).unwrap();
        for n in 0..=10usize {
            let total: Dim = g.dims_at(n).iter().sum();
            assert_eq!(total, Dim::from(2u32).pow(n as u32));
        }
    }

    #[test]
    fn pascal_central_weights() {
        let g = pascal(1, 4).unwrap();
        let eq = Equipment::central(&g);
        let v = pascal_vertex(&g, 2, 1).unwrap();
        let row = eq.cotransition_row(&g, v);
        assert_eq!(row.len(), 2);
        assert!(row.iter().all(|(_, w)| *w == rat(1, 2)));
    }

    /// Independent brute-force count of standard Young tableaux: try every
    /// filling order of the cells and keep the row/column-increasing ones.
    fn syt_count_brute(shape: &[u32]) -> usize {
        let cells: Vec<(usize, usize)> = shape
            .iter()
            .enumerate()
            .flat_map(|(i, &len)| (0..len as usize).map(move |j| (i, j)))
            .collect();
        let n = cells.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut count = 0;
        permute(&mut perm, 0, &mut |p| {
            // p[t] = which cell receives entry t
            let mut grid = vec![vec![0usize; *shape.first().unwrap_or(&0) as usize]; shape.len()];
            for (t, &c) in p.iter().enumerate() {
                let (i, j) = cells[c];
                grid[i][j] = t + 1;
            }
            let mut ok = true;
            for &(i, j) in &cells {
                if j > 0 && grid[i][j - 1] > grid[i][j] {
                    ok = false;
                }
                if i > 0 && (shape[i - 1] as usize) > j && grid[i - 1][j] > grid[i][j] {
                    ok = false;
                }
            }
            if ok {
                count += 1;
            }
        });
        count
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn young_dims_match_tableau_enumeration() {
        let g = young(4).unwrap();
        for shape in [vec![2u32, 1], vec![3], vec![2, 2], vec![2, 1, 1]] {
            let v = young_vertex(&g, &shape).unwrap();
            let expect = syt_count_brute(&shape);
            assert_eq!(g.dim(v).unwrap(), &Dim::from(expect), "shape {shape:?}");
        }
        // the worked example: two standard tableaux of shape (2,1)
        let v = young_vertex(&g, &[2, 1]).unwrap();
        assert_eq!(g.dim(v).unwrap(), &Dim::from(2u32));
    }

    #[test]
    fn fibonacci_counts() {
        let g = fibonacci(8).unwrap();
        let totals: Vec<Dim> = (0..=8).map(|n| g.dims_at(n).iter().sum()).collect();
        for n in 3..=8 {
            let expect = &totals[n - 1] + &totals[n - 2];
            assert_eq!(totals[n], expect, "level {n}");
        }
    }

    #[test]
    fn pair_graph_shapes() {
        let op = pairs(3, true).unwrap();
        assert_eq!(op.level_size(2), 4);
        assert_eq!(op.level_size(3), 16);
        let up = pairs(3, false).unwrap();
        assert_eq!(up.level_size(2), 3);
        assert_eq!(up.level_size(3), 6);
        // {0,0} carries a double edge from 0
        assert_eq!(
            up.multiplicity(VertexId::new(1, 0), VertexId::new(2, 0)),
            Dim::from(2u32)
        );
    }

    #[test]
    fn up_central_equipment_on_doubled_edge() {
        let up = pairs(3, false).unwrap();
        let eq = Equipment::central(&up);
        // vertex {0,0} at level 2: dim = 2, single doubled edge from 0 (dim 1)
        let v = VertexId::new(2, 0);
        assert_eq!(up.dim(v).unwrap(), &Dim::from(2u32));
        let row = eq.row(v);
        assert_eq!(row[0].total, Rational::one());
        assert_eq!(row[0].per_parallel(&Dim::from(2u32), 0), rat(1, 2));
        assert_eq!(row[0].per_parallel(&Dim::from(2u32), 1), rat(1, 2));
    }

    #[test]
    fn chain_pascalization_is_pascal() {
        let p = pascal(1, 6).unwrap();
        let c = pascalization(PascalizationBase::Chain, 6).unwrap();
        assert_eq!(p.num_levels(), c.num_levels());
        for n in 0..=6usize {
            assert_eq!(p.level_size(n), c.level_size(n), "level {n}");
            assert_eq!(p.dims_at(n), c.dims_at(n), "dims at level {n}");
            for v in 0..p.level_size(n) {
                if n > 0 {
                    assert_eq!(
                        p.in_edges(VertexId::new(n, v)),
                        c.in_edges(VertexId::new(n, v))
                    );
                }
            }
        }
    }

    #[test]
    fn tree_pascalization_shape() {
        let g = pascalization(PascalizationBase::Tree { q: 2 }, 5).unwrap();
        // level n: words of length <= n with matching parity; q = 2
        assert_eq!(g.level_size(1), 3);
        assert_eq!(g.level_size(2), 1 + 6);
        assert_eq!(g.level_size(3), 3 + 12);
        // the root word at level 2 is reachable from all three level-1 words
        assert_eq!(g.in_edges(VertexId::new(2, 0)).len(), 3);
        let total: Dim = g.dims_at(5).iter().sum();
        // total walks of length 5 from the root: 3 * 2^4... each step has q+1=3
        // choices at the root and q+1 neighbours elsewhere, i.e. 3^5 walks.
        assert_eq!(total, Dim::from(3u32).pow(5));
    }

    #[test]
    fn builders_respect_resource_caps() {
        assert!(matches!(
            pairs(7, true),
            Err(Error::ResourceLimit(_) | Error::MalformedGraph(_))
        ));
    }

    #[test]
    fn dim_survives_telescoping_across_builders() {
        for g in [
            pascal(1, 8).unwrap(),
            young(8).unwrap(),
            dyadic(8).unwrap(),
            fibonacci(8).unwrap(),
        ] {
            let t = g.telescope(&[0, 2, 5, 8]).unwrap();
            for (new_level, &old_level) in [0usize, 2, 5, 8].iter().enumerate() {
                assert_eq!(t.dims_at(new_level), g.dims_at(old_level));
            }
        }
    }

    #[test]
    fn central_rows_sum_to_one_everywhere() {
        for g in [
            pascal(1, 8).unwrap(),
            young(8).unwrap(),
            dyadic(8).unwrap(),
            fibonacci(8).unwrap(),
            pairs(5, false).unwrap(),
            pairs(5, true).unwrap(),
        ] {
            let eq = Equipment::central(&g);
            for level in 1..g.num_levels() {
                for v in 0..g.level_size(level) {
                    let total: Rational = eq
                        .cotransition_row(&g, VertexId::new(level, v))
                        .into_iter()
                        .fold(Rational::zero(), |acc, (_, w)| acc + w);
                    assert_eq!(total, Rational::one());
                }
            }
        }
    }
}
