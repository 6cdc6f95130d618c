//! Simple directed graph over string-labelled nodes.
//!
//! Nodes are stored sorted by label, so node index order is also the
//! lexicographic order of ids. Edges are a sorted, deduplicated list of
//! `(source, target)` index pairs without self-loops.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edge endpoint `{0}` is not a node")]
    UnknownNode(String),
    #[error("edge index ({0}, {1}) out of range")]
    IndexOutOfRange(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Digraph {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl Digraph {
    /// Builds a graph from labels and label pairs. Labels are sorted; self-loops
    /// and repeated edges are dropped.
    pub fn from_labelled<S, I>(labels: Vec<String>, edges: I) -> Result<Self, GraphError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, S)>,
    {
        let mut labels = labels;
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateNode(w[0].clone()));
        }
        let lookup = |s: &str| {
            labels
                .binary_search_by(|l| l.as_str().cmp(s))
                .map_err(|_| GraphError::UnknownNode(s.to_string()))
        };
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let (a, b) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
            if a != b {
                set.insert((a, b));
            }
        }
        Ok(Self {
            edges: set.into_iter().collect(),
            labels,
        })
    }

    /// Builds a graph over already-sorted unique labels from index pairs.
    pub fn from_indexed(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        let n = labels.len();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::IndexOutOfRange(a, b));
            }
            if a != b {
                set.insert((a, b));
            }
        }
        Ok(Self {
            labels,
            edges: set.into_iter().collect(),
        })
    }

    /// Unlabelled graph on `n` nodes named `v000`, `v001`, ... (zero-padded so
    /// index order matches label order).
    pub fn anonymous(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let width = n.saturating_sub(1).to_string().len();
        let labels = (0..n).map(|i| format!("v{i:0width$}")).collect();
        Self::from_indexed(labels, edges).expect("indices in range")
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
        }
        adj
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count()];
        for &(_, b) in &self.edges {
            deg[b] += 1;
        }
        deg
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count()];
        for &(a, _) in &self.edges {
            deg[a] += 1;
        }
        deg
    }

    /// Undirected simple projection: direction dropped, reciprocal pairs merged.
    /// Neighbour lists are sorted.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for (a, b) in self.undirected_edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted and unique.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        set.into_iter().collect()
    }

    /// Subgraph induced by the nodes where `keep[i]` is true.
    pub fn induced(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.node_count());
        let mut remap = vec![usize::MAX; self.node_count()];
        let mut labels = Vec::new();
        for (i, _) in keep.iter().enumerate().filter(|(_, k)| **k) {
            remap[i] = labels.len();
            labels.push(self.labels[i].clone());
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| keep[a] && keep[b])
            .map(|&(a, b)| (remap[a], remap[b]))
            .collect();
        Self { labels, edges }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_sorted_and_edges_remapped() {
        let g = Digraph::from_labelled(
            vec!["b".into(), "a".into(), "c".into()],
            [("b", "a"), ("b", "a"), ("c", "c")],
        )
        .unwrap();
        assert_eq!(g.labels(), ["a", "b", "c"]);
        assert_eq!(g.edges(), [(1, 0)]);
    }

    #[test]
    fn rejects_unknown_and_duplicate_nodes() {
        assert_eq!(
            Digraph::from_labelled(vec!["a".into()], [("a", "z")]),
            Err(GraphError::UnknownNode("z".into()))
        );
        assert!(matches!(
            Digraph::from_labelled::<&str, _>(vec!["a".into(), "a".into()], []),
            Err(GraphError::DuplicateNode(_))
        ));
    }

    #[test]
    fn undirected_projection_merges_reciprocal_links() {
        let g = Digraph::anonymous(3, [(0, 1), (1, 0), (1, 2)]);
        assert_eq!(g.undirected_edges(), [(0, 1), (1, 2)]);
        assert_eq!(g.undirected_adjacency()[1], [0, 2]);
    }

    #[test]
    fn induced_keeps_only_inner_edges() {
        let g = Digraph::anonymous(4, [(0, 1), (1, 2), (2, 3)]);
        let sub = g.induced(&[true, true, false, true]);
        assert_eq!(sub.labels(), ["v0", "v1", "v3"]);
        assert_eq!(sub.edges(), [(0, 1)]);
    }
}
