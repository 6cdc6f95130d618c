//! Interaction networks: operation `i` links to operation `j` when every input
//! of `j` is matched by some output of `i`.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{OperationDesc, ParameterDesc, ServiceCollection};
use crate::graph::{Digraph, GraphError};
use crate::matcher::{MatchError, Matcher, MatcherKind};
use crate::ontology::Ontology;

#[derive(Debug, Error)]
pub enum NetError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("GraphML: {0}")]
    GraphMl(String),
    #[error("unknown export format `{0}` (expected graphml, dot or edgelist)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Let operations without inputs receive links from every other operation.
    pub zero_input_targets: bool,
    /// PlugIn/Subsume also accept identical concepts.
    pub reflexive_subsumption: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionNetwork {
    pub graph: Digraph,
    pub kind: MatcherKind,
    pub options: BuildOptions,
}

impl InteractionNetwork {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Edges as label pairs, sorted.
    pub fn labelled_edges(&self) -> Vec<(&str, &str)> {
        self.graph
            .edges()
            .iter()
            .map(|&(a, b)| (self.graph.label(a), self.graph.label(b)))
            .collect()
    }
}

/// Operations in node order (sorted by display id).
fn sorted_operations(coll: &ServiceCollection) -> Result<Vec<&OperationDesc>, NetError> {
    let mut ops: Vec<(String, &OperationDesc)> = coll
        .operations()
        .map(|(_, o)| (o.id.to_string(), o))
        .collect();
    ops.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = ops.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(GraphError::DuplicateNode(w[0].0.clone()).into());
    }
    Ok(ops.into_iter().map(|(_, o)| o).collect())
}

/// Producer index: for every output name and concept, the operations emitting it.
struct ProducerIndex<'c> {
    by_name: HashMap<&'c str, FixedBitSet>,
    by_concept: HashMap<&'c str, FixedBitSet>,
    n: usize,
}

impl<'c> ProducerIndex<'c> {
    fn new(ops: &[&'c OperationDesc]) -> Self {
        let n = ops.len();
        let mut by_name: HashMap<&str, FixedBitSet> = HashMap::new();
        let mut by_concept: HashMap<&str, FixedBitSet> = HashMap::new();
        for (i, op) in ops.iter().enumerate() {
            for out in &op.outputs {
                by_name
                    .entry(out.name.as_str())
                    .or_insert_with(|| FixedBitSet::with_capacity(n))
                    .insert(i);
                if let Some(c) = &out.concept {
                    by_concept
                        .entry(c.as_str())
                        .or_insert_with(|| FixedBitSet::with_capacity(n))
                        .insert(i);
                }
            }
        }
        Self {
            by_name,
            by_concept,
            n,
        }
    }

    fn add_concept(&self, set: &mut FixedBitSet, concept: &str) {
        if let Some(s) = self.by_concept.get(concept) {
            set.union_with(s);
        }
    }

    /// Operations with at least one output matching `required`.
    fn producers(&self, m: &Matcher<'_>, required: &ParameterDesc) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.n);
        if m.kind() == MatcherKind::Equal {
            if let Some(s) = self.by_name.get(required.name.as_str()) {
                set.union_with(s);
            }
            return set;
        }
        let Some(concept) = required.concept.as_deref() else {
            return set;
        };
        let onto = m.ontology();
        match m.kind() {
            MatcherKind::Equal => unreachable!(),
            MatcherKind::Exact => self.add_concept(&mut set, concept),
            MatcherKind::PlugIn => {
                for d in onto.descendants(concept) {
                    self.add_concept(&mut set, d);
                }
            }
            MatcherKind::Subsume => {
                for a in onto.ancestors(concept) {
                    self.add_concept(&mut set, a);
                }
            }
        }
        if m.reflexive() && matches!(m.kind(), MatcherKind::PlugIn | MatcherKind::Subsume) {
            self.add_concept(&mut set, concept);
        }
        set
    }
}

/// Builds the interaction network of `coll` under matcher `kind`.
///
/// Candidate sources for each target are the intersection, over the target's
/// inputs, of the operations producing a matching output. Targets are
/// processed in parallel; the edge set does not depend on scheduling.
pub fn build_network(
    coll: &ServiceCollection,
    kind: MatcherKind,
    onto: Option<&Ontology>,
    opts: BuildOptions,
) -> Result<InteractionNetwork, NetError> {
    let matcher = Matcher::new(kind, onto, opts.reflexive_subsumption)?;
    let ops = sorted_operations(coll)?;
    let index = ProducerIndex::new(&ops);
    let n = ops.len();

    let edges: Vec<(usize, usize)> = ops
        .par_iter()
        .enumerate()
        .flat_map_iter(|(j, target)| {
            let mut candidates = FixedBitSet::with_capacity(n);
            if target.inputs.is_empty() {
                if opts.zero_input_targets {
                    candidates.insert_range(..);
                }
            } else {
                candidates.insert_range(..);
                for p in &target.inputs {
                    candidates.intersect_with(&index.producers(&matcher, p));
                    if candidates.is_clear() {
                        break;
                    }
                }
            }
            candidates.set(j, false);
            candidates.ones().map(move |i| (i, j)).collect::<Vec<_>>()
        })
        .collect();

    let labels = ops.iter().map(|o| o.id.to_string()).collect();
    Ok(InteractionNetwork {
        graph: Digraph::from_indexed(labels, edges)?,
        kind,
        options: opts,
    })
}

/// Removes nodes without any incident link. Returns the trimmed network and
/// the removed fraction of the original nodes (0 for an empty network).
pub fn trim_isolates(net: &InteractionNetwork) -> (InteractionNetwork, f64) {
    let n = net.node_count();
    let mut keep = vec![false; n];
    for &(a, b) in net.graph.edges() {
        keep[a] = true;
        keep[b] = true;
    }
    let removed = keep.iter().filter(|k| !**k).count();
    let trimmed = InteractionNetwork {
        graph: net.graph.induced(&keep),
        kind: net.kind,
        options: net.options,
    };
    let fraction = if n == 0 {
        0.0
    } else {
        removed as f64 / n as f64
    };
    (trimmed, fraction)
}
