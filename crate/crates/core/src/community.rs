//! Walktrap community detection and Newman modularity on the undirected
//! projection of a network.
//!
//! Walktrap (Pons & Latapy) compares vertices through the distributions of
//! `t`-step random walks started from them. With `P` the transition matrix
//! of the graph (every vertex carrying a self-loop of weight 1) and `D` the
//! degree matrix, the distance between two communities is
//! `r(C1, C2) = || D^-1/2 (P^t_C1 - P^t_C2) ||`, where `P^t_C` averages the
//! walk distributions of the community members. Starting from singletons,
//! adjacent communities are merged greedily by the smallest increase of
//! `sigma = 1/n * sum_C sum_{i in C} r(i, C)^2`, which for a merge is
//! `1/n * |C1||C2| / (|C1| + |C2|) * r(C1, C2)^2`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Digraph;

pub const DEFAULT_WALK_LENGTH: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommunityError {
    #[error("walk length must be at least 1")]
    ZeroWalkLength,
    #[error("community detection needs a non-empty network")]
    EmptyNetwork,
    #[error("partition covers {got} nodes, network has {expected}")]
    PartialPartition { expected: usize, got: usize },
    #[error("node `{0}` has no community")]
    Unassigned(String),
    #[error("community id {id} out of range 0..{count}")]
    BadCommunityId { id: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Merged communities. Leaves are node indices `0..n`; the community made
    /// by merge `k` has id `n + k`.
    pub a: usize,
    pub b: usize,
    /// Increase of sigma caused by this merge.
    pub delta_sigma: f64,
    /// Cumulative sigma after this merge (non-decreasing).
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub walk_length: usize,
    pub merges: Vec<Merge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// Community of every node, by node index. Ids are dense and numbered in
    /// order of each community's first node.
    pub assignment: Vec<usize>,
    pub community_count: usize,
}

impl Partition {
    /// Renumbers arbitrary labels densely in order of first appearance.
    pub fn from_assignment(raw: &[usize]) -> Self {
        let mut map = HashMap::new();
        let assignment = raw
            .iter()
            .map(|c| {
                let next = map.len();
                *map.entry(*c).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            community_count: map.len(),
        }
    }

    pub fn single(n: usize) -> Self {
        Self {
            assignment: vec![0; n],
            community_count: usize::from(n > 0),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            assignment: (0..n).collect(),
            community_count: n,
        }
    }

    /// Builds a partition from a label → community map, which must cover
    /// every node of `g`.
    pub fn from_labels(g: &Digraph, map: &HashMap<String, usize>) -> Result<Self, CommunityError> {
        let raw = g
            .labels()
            .iter()
            .map(|l| {
                map.get(l)
                    .copied()
                    .ok_or_else(|| CommunityError::Unassigned(l.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_assignment(&raw))
    }

    /// `node_id,community_id` lines with a header.
    pub fn to_csv(&self, g: &Digraph) -> String {
        let mut out = String::from("node_id,community_id\n");
        for (label, c) in g.labels().iter().zip(&self.assignment) {
            let quoted = if label.contains([',', '"', '\n']) {
                format!("\"{}\"", label.replace('"', "\"\""))
            } else {
                label.clone()
            };
            out.push_str(&format!("{quoted},{c}\n"));
        }
        out
    }

    fn validate(&self, n: usize) -> Result<(), CommunityError> {
        if self.assignment.len() != n {
            return Err(CommunityError::PartialPartition {
                expected: n,
                got: self.assignment.len(),
            });
        }
        if let Some(&id) = self.assignment.iter().find(|&&c| c >= self.community_count) {
            return Err(CommunityError::BadCommunityId {
                id,
                count: self.community_count,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Community {
    size: usize,
    min_node: usize,
    /// `D^-1/2 P^t_C`, dense.
    walk: Vec<f64>,
    /// Adjacent communities and the merge cost with each.
    neighbours: BTreeMap<usize, f64>,
}

/// Walk distributions `D^-1/2 P^t_i` of every vertex.
fn walk_vectors(adj: &[Vec<usize>], t: usize) -> Vec<Vec<f64>> {
    let n = adj.len();
    // Degrees include the self-loop.
    let inv_deg: Vec<f64> = adj.iter().map(|a| 1.0 / (a.len() + 1) as f64).collect();
    (0..n)
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            for _ in 0..t {
                let mut next = vec![0.0; n];
                for (j, &pj) in v.iter().enumerate() {
                    if pj == 0.0 {
                        continue;
                    }
                    let share = pj * inv_deg[j];
                    next[j] += share;
                    for &k in &adj[j] {
                        next[k] += share;
                    }
                }
                v = next;
            }
            for (k, x) in v.iter_mut().enumerate() {
                *x *= inv_deg[k].sqrt();
            }
            v
        })
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn merge_cost(n: usize, c1: &Community, c2: &Community) -> f64 {
    let (s1, s2) = (c1.size as f64, c2.size as f64);
    s1 * s2 / (s1 + s2) * squared_distance(&c1.walk, &c2.walk) / n as f64
}

/// Agglomerates the undirected projection of `g` into a dendrogram. Only
/// adjacent communities merge, so a graph with `c` weak components (isolated
/// nodes included) yields `n - c` merges. Ties between equal costs go to the
/// pair whose smaller first node is smallest.
pub fn walktrap(g: &Digraph, walk_length: usize) -> Result<Dendrogram, CommunityError> {
    if walk_length == 0 {
        return Err(CommunityError::ZeroWalkLength);
    }
    let n = g.node_count();
    if n == 0 {
        return Err(CommunityError::EmptyNetwork);
    }
    let adj = g.undirected_adjacency();
    let mut communities: Vec<Option<Community>> = walk_vectors(&adj, walk_length)
        .into_iter()
        .enumerate()
        .map(|(i, walk)| {
            Some(Community {
                size: 1,
                min_node: i,
                walk,
                neighbours: BTreeMap::new(),
            })
        })
        .collect();

    type Entry = Reverse<(Key, usize, usize, usize, usize)>;
    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    let push =
        |heap: &mut BinaryHeap<Entry>, cost: f64, a: usize, am: usize, b: usize, bm: usize| {
            let (lo, hi) = if am < bm { (am, bm) } else { (bm, am) };
            heap.push(Reverse((Key(cost), lo, hi, a, b)));
        };

    for (i, nbrs) in adj.iter().enumerate() {
        for &j in nbrs.iter().filter(|&&j| j > i) {
            let cost = merge_cost(
                n,
                communities[i].as_ref().unwrap(),
                communities[j].as_ref().unwrap(),
            );
            communities[i].as_mut().unwrap().neighbours.insert(j, cost);
            communities[j].as_mut().unwrap().neighbours.insert(i, cost);
            push(&mut heap, cost, i, i, j, j);
        }
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut height = 0.0;
    while let Some(Reverse((Key(cost), _, _, a, b))) = heap.pop() {
        let current = match (&communities[a], &communities[b]) {
            (Some(ca), Some(_)) => ca.neighbours.get(&b).copied(),
            _ => None,
        };
        if current.map(f64::to_bits) != Some(cost.to_bits()) {
            continue;
        }
        let ca = communities[a].take().unwrap();
        let cb = communities[b].take().unwrap();
        let id = communities.len();
        let size = ca.size + cb.size;
        let (wa, wb) = (ca.size as f64 / size as f64, cb.size as f64 / size as f64);
        let walk = ca
            .walk
            .iter()
            .zip(&cb.walk)
            .map(|(x, y)| wa * x + wb * y)
            .collect();
        let mut merged = Community {
            size,
            min_node: ca.min_node.min(cb.min_node),
            walk,
            neighbours: BTreeMap::new(),
        };
        let adjacent: Vec<usize> = ca
            .neighbours
            .keys()
            .chain(cb.neighbours.keys())
            .copied()
            .filter(|&c| c != a && c != b)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        for c in adjacent {
            let other = communities[c].as_mut().unwrap();
            other.neighbours.remove(&a);
            other.neighbours.remove(&b);
            let cost = merge_cost(n, &merged, other);
            other.neighbours.insert(id, cost);
            merged.neighbours.insert(c, cost);
            let other_min = other.min_node;
            push(&mut heap, cost, id, merged.min_node, c, other_min);
        }
        height += cost;
        merges.push(Merge {
            a,
            b,
            delta_sigma: cost,
            height,
        });
        communities.push(Some(merged));
    }
    Ok(Dendrogram {
        leaves: n,
        walk_length,
        merges,
    })
}

/// Exact modularity numerator `4m * sum(e_c) - sum(a_c^2)`, where `e_c`
/// counts internal edges and `a_c` sums degrees; `Q = numerator / (4m^2)`.
fn modularity_numerator(m: u64, internal: u64, degree_sq: u128) -> i128 {
    4 * i128::from(m) * i128::from(internal) - degree_sq as i128
}

fn modularity_value(m: u64, numerator: i128) -> f64 {
    if m == 0 {
        0.0
    } else {
        numerator as f64 / (4.0 * (m as f64) * (m as f64))
    }
}

/// Newman modularity of `partition` on the undirected simple projection of
/// `g`: `Q = sum_c (e_c / m - (a_c / 2m)^2)`; 0 for an edgeless graph.
pub fn modularity(g: &Digraph, partition: &Partition) -> Result<f64, CommunityError> {
    partition.validate(g.node_count())?;
    let edges = g.undirected_edges();
    let m = edges.len() as u64;
    let mut internal = 0u64;
    let mut degree = vec![0u64; partition.community_count];
    for &(a, b) in &edges {
        let (ca, cb) = (partition.assignment[a], partition.assignment[b]);
        internal += u64::from(ca == cb);
        degree[ca] += 1;
        degree[cb] += 1;
    }
    let degree_sq = degree.iter().map(|&d| u128::from(d) * u128::from(d)).sum();
    Ok(modularity_value(
        m,
        modularity_numerator(m, internal, degree_sq),
    ))
}

/// Partition after applying the first `cut` merges of `dendrogram`.
pub fn cut(dendrogram: &Dendrogram, cut: usize) -> Partition {
    let n = dendrogram.leaves;
    let mut parent: Vec<usize> = (0..n + cut).collect();
    for (k, m) in dendrogram.merges.iter().take(cut).enumerate() {
        parent[m.a] = n + k;
        parent[m.b] = n + k;
    }
    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let raw: Vec<usize> = (0..n).map(root).collect();
    Partition::from_assignment(&raw)
}

/// Scans every cut of the dendrogram and returns the partition of maximal
/// modularity. Ties go to the cut with fewer communities.
pub fn best_partition(dendrogram: &Dendrogram, g: &Digraph) -> (Partition, f64) {
    let n = dendrogram.leaves;
    let edges = g.undirected_edges();
    let m = edges.len() as u64;
    let total = n + dendrogram.merges.len();
    let mut degree = vec![0u64; total];
    let mut internal_of = vec![0u64; total];
    let mut links: Vec<HashMap<usize, u64>> = vec![HashMap::new(); total];
    for &(a, b) in &edges {
        degree[a] += 1;
        degree[b] += 1;
        *links[a].entry(b).or_insert(0) += 1;
        *links[b].entry(a).or_insert(0) += 1;
    }
    let mut internal = 0u64;
    let mut degree_sq: u128 = degree.iter().map(|&d| u128::from(d) * u128::from(d)).sum();
    let mut best = (modularity_numerator(m, internal, degree_sq), 0usize);

    for (k, merge) in dendrogram.merges.iter().enumerate() {
        let c = n + k;
        let (a, b) = (merge.a, merge.b);
        let between = links[a].get(&b).copied().unwrap_or(0);
        internal_of[c] = internal_of[a] + internal_of[b] + between;
        internal += between;
        degree[c] = degree[a] + degree[b];
        degree_sq = degree_sq + u128::from(degree[c]) * u128::from(degree[c])
            - u128::from(degree[a]) * u128::from(degree[a])
            - u128::from(degree[b]) * u128::from(degree[b]);
        let mut merged = std::mem::take(&mut links[a]);
        for (x, w) in std::mem::take(&mut links[b]) {
            *merged.entry(x).or_insert(0) += w;
        }
        merged.remove(&a);
        merged.remove(&b);
        for (&x, &w) in &merged {
            links[x].remove(&a);
            links[x].remove(&b);
            links[x].insert(c, w);
        }
        links[c] = merged;

        let numerator = modularity_numerator(m, internal, degree_sq);
        if numerator >= best.0 {
            best = (numerator, k + 1);
        }
    }
    (cut(dendrogram, best.1), modularity_value(m, best.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainOverlap {
    /// Operation counts per community (rows, by community id) and domain.
    pub contingency: Vec<BTreeMap<String, usize>>,
    /// `sum_c max_d count(c, d) / n`.
    pub purity: f64,
}

pub const NO_DOMAIN: &str = "(none)";

/// Cross-tabulates communities against domain labels (keyed by node label).
/// `None` when no node carries a domain.
pub fn domain_overlap(
    partition: &Partition,
    g: &Digraph,
    domains: &BTreeMap<String, Option<String>>,
) -> Option<DomainOverlap> {
    let labels: Vec<Option<&str>> = g
        .labels()
        .iter()
        .map(|l| domains.get(l).and_then(|d| d.as_deref()))
        .collect();
    if labels.iter().all(Option::is_none) {
        return None;
    }
    let mut contingency = vec![BTreeMap::new(); partition.community_count];
    for (c, d) in partition.assignment.iter().zip(&labels) {
        *contingency[*c]
            .entry(d.unwrap_or(NO_DOMAIN).to_string())
            .or_insert(0) += 1;
    }
    let majority: usize = contingency
        .iter()
        .map(|row| row.values().copied().max().unwrap_or(0))
        .sum();
    Some(DomainOverlap {
        contingency,
        purity: majority as f64 / g.node_count() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles_bridge() -> Digraph {
        Digraph::anonymous(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
    }

    fn two_k5_bridge() -> Digraph {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((4, 5));
        Digraph::anonymous(10, edges)
    }

    /// Modularity by direct edge-fraction counting, independent of the
    /// integer formulation used by the implementation.
    fn brute_modularity(g: &Digraph, assignment: &[usize]) -> f64 {
        let edges = g.undirected_edges();
        let m = edges.len() as f64;
        let k = assignment.iter().max().map_or(0, |x| x + 1);
        (0..k)
            .map(|c| {
                let inside = edges
                    .iter()
                    .filter(|&&(a, b)| assignment[a] == c && assignment[b] == c)
                    .count() as f64;
                let ends = edges
                    .iter()
                    .map(|&(a, b)| {
                        usize::from(assignment[a] == c) + usize::from(assignment[b] == c)
                    })
                    .sum::<usize>() as f64;
                inside / m - (ends / (2.0 * m)).powi(2)
            })
            .sum()
    }

    #[test]
    fn modularity_fixtures() {
        let g = two_triangles_bridge();
        assert_eq!(modularity(&g, &Partition::single(6)).unwrap(), 0.0);
        let cliques = Partition::from_assignment(&[0, 0, 0, 1, 1, 1]);
        let q = modularity(&g, &cliques).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
        assert!((q - brute_modularity(&g, &cliques.assignment)).abs() < 1e-12);

        let disjoint = Digraph::anonymous(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        assert!((modularity(&disjoint, &cliques).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn modularity_rejects_partial_partitions() {
        let g = two_triangles_bridge();
        let err = modularity(&g, &Partition::from_assignment(&[0, 0, 1]));
        assert_eq!(
            err,
            Err(CommunityError::PartialPartition {
                expected: 6,
                got: 3
            })
        );
        let mut map: HashMap<String, usize> = g.labels().iter().map(|l| (l.clone(), 0)).collect();
        map.remove("v5");
        assert_eq!(
            Partition::from_labels(&g, &map),
            Err(CommunityError::Unassigned("v5".into()))
        );
    }

    #[test]
    fn two_k5_best_cut_matches_brute_force() {
        let g = two_k5_bridge();
        let dendrogram = walktrap(&g, DEFAULT_WALK_LENGTH).unwrap();
        assert_eq!(dendrogram.merges.len(), 9);
        let (best, q) = best_partition(&dendrogram, &g);
        assert_eq!(best.community_count, 2);
        assert_eq!(best.assignment, [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);

        // Brute force over all bipartitions (node 0 fixed on side 0).
        let mut brute_best = f64::NEG_INFINITY;
        let mut brute_arg = 0u32;
        for mask in 0u32..(1 << 9) {
            let assign: Vec<usize> = (0..10)
                .map(|i| {
                    if i == 0 {
                        0
                    } else {
                        ((mask >> (i - 1)) & 1) as usize
                    }
                })
                .collect();
            let q = brute_modularity(&g, &assign);
            if q > brute_best + 1e-12 {
                brute_best = q;
                brute_arg = mask;
            }
        }
        assert_eq!(brute_arg, 0b1_1111_0000);
        assert!((q - brute_best).abs() < 1e-12);
    }

    #[test]
    fn single_edge_and_pairs() {
        let g = Digraph::anonymous(2, [(0, 1)]);
        let d = walktrap(&g, 4).unwrap();
        assert_eq!(d.merges.len(), 1);
        let (p, q) = best_partition(&d, &g);
        assert_eq!(p.community_count, 1);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn complete_graph_is_one_community() {
        let edges = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j)));
        let g = Digraph::anonymous(6, edges);
        let (p, q) = best_partition(&walktrap(&g, 4).unwrap(), &g);
        assert_eq!(p.community_count, 1);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn disconnected_graph_gives_forest() {
        let g = Digraph::anonymous(7, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        let d = walktrap(&g, 3).unwrap();
        assert_eq!(d.merges.len(), 4);
        let (p, q) = best_partition(&d, &g);
        assert_eq!(p.assignment, [0, 0, 0, 1, 1, 1, 2]);
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn walktrap_is_deterministic_with_monotone_heights() {
        let g = two_triangles_bridge();
        let a = walktrap(&g, 4).unwrap();
        assert_eq!(a, walktrap(&g, 4).unwrap());
        assert!(a.merges.windows(2).all(|w| w[0].height <= w[1].height));
        assert_eq!(walktrap(&g, 0), Err(CommunityError::ZeroWalkLength));
        assert_eq!(
            walktrap(&Digraph::default(), 4),
            Err(CommunityError::EmptyNetwork)
        );
    }

    #[test]
    fn best_partition_beats_trivial_cuts() {
        let g = two_triangles_bridge();
        let d = walktrap(&g, 4).unwrap();
        let (p, q) = best_partition(&d, &g);
        assert!(q >= modularity(&g, &Partition::single(6)).unwrap());
        assert!(q >= modularity(&g, &Partition::singletons(6)).unwrap());
        assert!((q - modularity(&g, &p).unwrap()).abs() < 1e-12);
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_purity() {
        let g = Digraph::anonymous(4, [(0, 1), (2, 3)]);
        let labels = |ds: [&str; 4]| -> BTreeMap<String, Option<String>> {
            g.labels()
                .iter()
                .zip(ds)
                .map(|(l, d)| (l.clone(), Some(d.to_string())))
                .collect()
        };
        let same = Partition::from_assignment(&[0, 0, 1, 1]);
        let o = domain_overlap(&same, &g, &labels(["x", "x", "y", "y"])).unwrap();
        assert_eq!(o.purity, 1.0);
        let one = Partition::single(4);
        let o = domain_overlap(&one, &g, &labels(["x", "x", "y", "y"])).unwrap();
        assert_eq!(o.purity, 0.5);
        assert!(domain_overlap(&one, &g, &BTreeMap::new()).is_none());
    }

    #[test]
    fn partition_csv() {
        let g = Digraph::from_labelled(vec!["a,b".into(), "c".into()], [("a,b", "c")]).unwrap();
        let csv = Partition::from_assignment(&[0, 1]).to_csv(&g);
        assert_eq!(csv, "node_id,community_id\n\"a,b\",0\nc,1\n");
    }
}
