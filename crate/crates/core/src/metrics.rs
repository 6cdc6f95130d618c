//! Structural measures: weak components, directed distances, transitivity,
//! degree statistics and the Erdős–Rényi small-world baseline.

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Digraph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("G(n, m) needs m <= n(n-1)/2 (n = {n}, m = {m})")]
    TooManyEdges { n: usize, m: usize },
    #[error("at least one ER sample is required")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// Node counts, largest first.
    pub component_sizes: Vec<usize>,
    pub giant_node_fraction: f64,
    pub giant_link_fraction: f64,
}

/// Weak component id of every node, numbered in order of their smallest node.
pub fn weak_component_ids(g: &Digraph) -> Vec<usize> {
    let adj = g.undirected_adjacency();
    let mut comp = vec![usize::MAX; g.node_count()];
    let mut next = 0;
    for start in 0..g.node_count() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Component id of the giant component: most nodes, ties to the component
/// holding the smallest node id.
fn giant_id(comp: &[usize]) -> Option<usize> {
    let count = comp.iter().copied().max()? + 1;
    let mut sizes = vec![0usize; count];
    for &c in comp {
        sizes[c] += 1;
    }
    // Ids follow the order of each component's smallest (lexicographically
    // first) node, so the first maximum wins ties.
    let best = *sizes.iter().max()?;
    sizes.iter().position(|&s| s == best)
}

pub fn weak_components(g: &Digraph) -> ComponentReport {
    let comp = weak_component_ids(g);
    let Some(giant) = giant_id(&comp) else {
        return ComponentReport {
            component_sizes: Vec::new(),
            giant_node_fraction: 0.0,
            giant_link_fraction: 0.0,
        };
    };
    let mut sizes = vec![0usize; comp.iter().max().unwrap() + 1];
    for &c in &comp {
        sizes[c] += 1;
    }
    let giant_links = g.edges().iter().filter(|&&(a, _)| comp[a] == giant).count();
    let giant_nodes = sizes[giant];
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    ComponentReport {
        component_sizes: sizes,
        giant_node_fraction: giant_nodes as f64 / g.node_count() as f64,
        giant_link_fraction: if g.edge_count() == 0 {
            0.0
        } else {
            giant_links as f64 / g.edge_count() as f64
        },
    }
}

/// Subgraph induced by the giant weak component (empty for an empty graph).
pub fn giant_component(g: &Digraph) -> Digraph {
    let comp = weak_component_ids(g);
    match giant_id(&comp) {
        Some(giant) => g.induced(&comp.iter().map(|&c| c == giant).collect::<Vec<_>>()),
        None => g.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// Mean over ordered pairs `(i, j)`, `i != j`, with `j` reachable from `i`;
    /// `None` when no such pair exists.
    pub average_distance: Option<f64>,
    pub diameter: Option<usize>,
    pub reachable_pairs: u64,
    /// Ordered pairs excluded from the average because no directed path exists.
    pub unreachable_pairs: u64,
}

/// Distances from `source` by BFS over `adj`; `u32::MAX` marks unreachable.
pub fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v] + 1;
        for &w in &adj[v] {
            if dist[w] == u32::MAX {
                dist[w] = d;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// (sum of distances, reachable pairs, max distance) over all BFS sources.
fn distance_totals(adj: &[Vec<usize>]) -> (u64, u64, u32) {
    (0..adj.len())
        .into_par_iter()
        .map(|s| {
            let dist = bfs_distances(adj, s);
            let mut acc = (0u64, 0u64, 0u32);
            for (t, &d) in dist.iter().enumerate() {
                if t != s && d != u32::MAX {
                    acc.0 += u64::from(d);
                    acc.1 += 1;
                    acc.2 = acc.2.max(d);
                }
            }
            acc
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)))
}

pub fn distance_report(g: &Digraph) -> DistanceReport {
    let n = g.node_count() as u64;
    let (sum, pairs, max) = distance_totals(&g.out_adjacency());
    DistanceReport {
        average_distance: (pairs > 0).then(|| sum as f64 / pairs as f64),
        diameter: (pairs > 0).then_some(max as usize),
        reachable_pairs: pairs,
        unreachable_pairs: n * n.saturating_sub(1) - pairs,
    }
}

/// Global clustering coefficient of the undirected simple projection:
/// `3 * triangles / connected triples`, 0 without any triple.
pub fn transitivity(g: &Digraph) -> f64 {
    let adj = g.undirected_adjacency();
    let mut triangles = 0u64;
    for (u, nu) in adj.iter().enumerate() {
        for &v in nu.iter().filter(|&&v| v > u) {
            // Count common neighbours w > v so each triangle is seen once.
            let (a, b) = (&adj[u], &adj[v]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        triangles += u64::from(a[i] > v);
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    let triples: u64 = adj
        .iter()
        .map(|n| {
            let d = n.len() as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if triples == 0 {
        0.0
    } else {
        3.0 * triangles as f64 / triples as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedNode {
    pub id: String,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeReport {
    /// `(degree, node count)` pairs, ascending by degree.
    pub in_histogram: Vec<(usize, usize)>,
    pub out_histogram: Vec<(usize, usize)>,
    pub total_histogram: Vec<(usize, usize)>,
    /// Highest out-degree nodes.
    pub hubs: Vec<RankedNode>,
    /// Highest in-degree nodes.
    pub authorities: Vec<RankedNode>,
}

fn histogram(degrees: &[usize]) -> Vec<(usize, usize)> {
    let mut h = BTreeMap::new();
    for &d in degrees {
        *h.entry(d).or_insert(0) += 1;
    }
    h.into_iter().collect()
}

fn top_k(g: &Digraph, degrees: &[usize], k: usize) -> Vec<RankedNode> {
    let mut order: Vec<usize> = (0..degrees.len()).collect();
    // Node index order is label order, so a stable sort breaks ties by id.
    order.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]));
    order
        .into_iter()
        .take(k)
        .map(|i| RankedNode {
            id: g.label(i).to_string(),
            degree: degrees[i],
        })
        .collect()
}

pub fn degree_report(g: &Digraph, k: usize) -> DegreeReport {
    let ins = g.in_degrees();
    let outs = g.out_degrees();
    let totals: Vec<usize> = ins.iter().zip(&outs).map(|(a, b)| a + b).collect();
    DegreeReport {
        in_histogram: histogram(&ins),
        out_histogram: histogram(&outs),
        total_histogram: histogram(&totals),
        hubs: top_k(g, &outs, k),
        authorities: top_k(g, &ins, k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldReport {
    pub nodes: usize,
    pub links: usize,
    pub samples: usize,
    pub seed: u64,
    /// `ln n / ln <k>` with `<k> = 2m/n`; `None` when `<k> <= 1`.
    pub er_estimate: Option<f64>,
    /// Mean over samples of the average distance inside each sample's giant
    /// component; samples whose giant component is a single node are skipped.
    pub er_sampled_mean: Option<f64>,
    pub er_sampled_stddev: Option<f64>,
    pub observed: Option<f64>,
    /// `observed / er_sampled_mean`.
    pub ratio: Option<f64>,
}

impl SmallWorldReport {
    pub fn with_observed(mut self, observed: Option<f64>) -> Self {
        self.observed = observed;
        self.ratio = match (observed, self.er_sampled_mean) {
            (Some(o), Some(e)) if e > 0.0 => Some(o / e),
            _ => None,
        };
        self
    }
}

/// Maps `k` in `0..n(n-1)/2` to the `k`-th pair `(i, j)`, `i < j`, in
/// row-major order.
pub fn pair_from_index(k: u64, n: u64) -> (usize, usize) {
    // Row i holds n-1-i pairs; find the row by the closed form then correct
    // for floating-point error.
    let total = n * (n - 1) / 2;
    let rem = total - k; // pairs from k to the end, >= 1
    let mut r = ((((8 * rem) as f64 + 1.0).sqrt() - 1.0) / 2.0).ceil() as u64; // rows from the end
    while r * (r + 1) / 2 < rem {
        r += 1;
    }
    while r > 1 && (r - 1) * r / 2 >= rem {
        r -= 1;
    }
    let i = n - 1 - r;
    let row_start = total - r * (r + 1) / 2;
    let j = i + 1 + (k - row_start);
    (i as usize, j as usize)
}

/// Uniform G(n, m) sample as an undirected adjacency list.
pub fn sample_gnm(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let total = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let mut adj = vec![Vec::new(); n];
    for k in rand::seq::index::sample(rng, total as usize, m) {
        let (i, j) = pair_from_index(k as u64, n as u64);
        adj[i].push(j);
        adj[j].push(i);
    }
    adj
}

fn giant_average_distance(adj: &[Vec<usize>]) -> Option<f64> {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut sizes = Vec::new();
    for s in 0..adj.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        comp[s] = id;
        let mut stack = vec![s];
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    let best = *sizes.iter().max()?;
    let giant = sizes.iter().position(|&s| s == best)?;
    let members: Vec<usize> = (0..adj.len()).filter(|&v| comp[v] == giant).collect();
    if members.len() < 2 {
        return None;
    }
    let (sum, pairs) = members
        .par_iter()
        .map(|&s| {
            let d = bfs_distances(adj, s);
            members
                .iter()
                .filter(|&&t| t != s)
                .fold((0u64, 0u64), |acc, &t| (acc.0 + u64::from(d[t]), acc.1 + 1))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Some(sum as f64 / pairs as f64)
}

/// Average distance of `samples` uniform undirected G(n, m) graphs. Each
/// sample draws from its own ChaCha stream `(seed, sample index)`, so the
/// result does not depend on thread count.
pub fn er_baseline(
    n: usize,
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<SmallWorldReport, MetricsError> {
    let max_edges = n.saturating_mul(n.saturating_sub(1)) / 2;
    if m > max_edges {
        return Err(MetricsError::TooManyEdges { n, m });
    }
    if samples == 0 {
        return Err(MetricsError::NoSamples);
    }
    let mean_degree = if n == 0 {
        0.0
    } else {
        2.0 * m as f64 / n as f64
    };
    let er_estimate = (mean_degree > 1.0).then(|| (n as f64).ln() / mean_degree.ln());

    let per_sample: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            giant_average_distance(&sample_gnm(n, m, &mut rng))
        })
        .collect();
    let values: Vec<f64> = per_sample.into_iter().flatten().collect();
    let (mean, stddev) = if values.is_empty() {
        (None, None)
    } else {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        (Some(mean), Some(var.sqrt()))
    };
    Ok(SmallWorldReport {
        nodes: n,
        links: m,
        samples,
        seed,
        er_estimate,
        er_sampled_mean: mean,
        er_sampled_stddev: stddev,
        observed: None,
        ratio: None,
    })
}
