use std::collections::BTreeSet;

use proptest::prelude::*;

use svcnet::community::{best_partition, cut, modularity, walktrap, Partition};
use svcnet::corpus::ServiceCollection;
use svcnet::gen::{generate, GenSpec};
use svcnet::graph::Digraph;
use svcnet::matcher::{match_params, MatcherKind};
use svcnet::metrics::{er_baseline, giant_component, transitivity};
use svcnet::netbuild::{build_network, BuildOptions};
use svcnet::ontology::Ontology;

/// Pairwise definition of the interaction network: i feeds j when every
/// input of j is matched by some output of i.
fn naive_edges(
    coll: &ServiceCollection,
    kind: MatcherKind,
    onto: &Ontology,
    opts: BuildOptions,
) -> BTreeSet<(String, String)> {
    let ops: Vec<_> = coll.operations().map(|(_, op)| op).collect();
    let mut edges = BTreeSet::new();
    for src in &ops {
        for dst in &ops {
            if src.id == dst.id || (dst.inputs.is_empty() && !opts.zero_input_targets) {
                continue;
            }
            let fed = dst.inputs.iter().all(|q| {
                src.outputs.iter().any(|p| {
                    let m = match_params(kind, p, q, Some(onto)).unwrap();
                    if opts.reflexive_subsumption
                        && matches!(kind, MatcherKind::PlugIn | MatcherKind::Subsume)
                    {
                        m || (p.concept.is_some() && p.concept == q.concept)
                    } else {
                        m
                    }
                })
            });
            if fed {
                edges.insert((src.id.to_string(), dst.id.to_string()));
            }
        }
    }
    edges
}

fn spec_strategy() -> impl Strategy<Value = GenSpec> {
    (
        any::<u64>(),
        1usize..4,
        0.0f64..=1.0,
        0.0f64..=0.5,
        0usize..2,
        3usize..8,
    )
        .prop_map(
            |(seed, n_domains, annotation_rate, cross_domain_rate, min_in, name_pool)| GenSpec {
                n_services: 8,
                ops_per_service: 3,
                n_domains,
                name_pool_size: name_pool,
                concept_pool_size: 7,
                hierarchy_depth: 2,
                branching: 2,
                inputs: (min_in, 2),
                outputs: (1, 3),
                annotation_rate,
                cross_domain_rate,
                seed,
            },
        )
}

fn graph_strategy() -> impl Strategy<Value = Digraph> {
    (1usize..16).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..40).prop_map(move |pairs| {
            let mut edges: Vec<_> = pairs.into_iter().filter(|(a, b)| a != b).collect();
            edges.sort_unstable();
            edges.dedup();
            Digraph::anonymous(n, edges)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn indexed_build_equals_pairwise_definition(
        spec in spec_strategy(),
        zero_input_targets: bool,
        reflexive_subsumption: bool,
    ) {
        let g = generate(&spec).unwrap();
        let opts = BuildOptions { zero_input_targets, reflexive_subsumption };
        for kind in MatcherKind::ALL {
            let net = build_network(&g.collection, kind, Some(&g.ontology), opts).unwrap();
            let got: BTreeSet<(String, String)> = net
                .labelled_edges()
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
            prop_assert_eq!(got, naive_edges(&g.collection, kind, &g.ontology, opts), "{}", kind);
        }
    }

    #[test]
    fn transitivity_is_a_ratio_and_one_only_when_closed(g in graph_strategy()) {
        let t = transitivity(&g);
        prop_assert!((0.0..=1.0).contains(&t));
        let set: BTreeSet<(usize, usize)> = g.undirected_edges().into_iter().collect();
        let adj = |a: usize, b: usize| set.contains(&(a.min(b), a.max(b)));
        let n = g.node_count();
        let mut open = false;
        let mut any = false;
        for c in 0..n {
            for a in 0..n {
                for b in a + 1..n {
                    if a != c && b != c && adj(c, a) && adj(c, b) {
                        any = true;
                        open |= !adj(a, b);
                    }
                }
            }
        }
        prop_assert_eq!(t == 1.0, any && !open);
    }

    #[test]
    fn giant_component_is_induced(g in graph_strategy()) {
        let giant = giant_component(&g);
        let members: BTreeSet<&str> = giant.labels().iter().map(String::as_str).collect();
        let expected: BTreeSet<(&str, &str)> = g
            .edges()
            .iter()
            .map(|&(a, b)| (g.label(a), g.label(b)))
            .filter(|(a, b)| members.contains(a) && members.contains(b))
            .collect();
        let got: BTreeSet<(&str, &str)> = giant
            .edges()
            .iter()
            .map(|&(a, b)| (giant.label(a), giant.label(b)))
            .collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn modularity_bounds_and_best_cut(g in graph_strategy(), raw in prop::collection::vec(0usize..4, 16)) {
        prop_assume!(g.edge_count() > 0);
        let n = g.node_count();
        let q = modularity(&g, &Partition::from_assignment(&raw[..n])).unwrap();
        prop_assert!(q <= 1.0);
        prop_assert_eq!(modularity(&g, &Partition::single(n)).unwrap(), 0.0);
        let d = walktrap(&g, 4).unwrap();
        let (_, best) = best_partition(&d, &g);
        let singles = modularity(&g, &cut(&d, 0)).unwrap();
        let merged = modularity(&g, &cut(&d, d.merges.len())).unwrap();
        prop_assert!(best >= singles && best >= merged);
    }

    #[test]
    fn er_baseline_is_reproducible(n in 2usize..40, frac in 0.0f64..=1.0, seed: u64) {
        let m = ((n * (n - 1) / 2) as f64 * frac) as usize;
        prop_assert_eq!(er_baseline(n, m, 4, seed), er_baseline(n, m, 4, seed));
    }
}
