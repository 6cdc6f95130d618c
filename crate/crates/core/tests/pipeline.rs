use svcnet::community::domain_overlap;
use svcnet::corpus::ServiceCollection;
use svcnet::export::{from_graphml, to_graphml};
use svcnet::gen::{generate, GenSpec};
use svcnet::matcher::MatcherKind;
use svcnet::netbuild::{build_network, BuildOptions};
use svcnet::report::{
    analyze_network, communities_of, compare, giant_of, to_canonical_json, AnalysisSettings,
};

fn settings() -> AnalysisSettings {
    AnalysisSettings {
        plfit_boot: 50,
        er_samples: 5,
        seed: 3,
        ..AnalysisSettings::default()
    }
}

fn spec(annotation_rate: f64) -> GenSpec {
    GenSpec {
        n_services: 24,
        ops_per_service: 3,
        n_domains: 3,
        annotation_rate,
        cross_domain_rate: 0.02,
        seed: 11,
        ..GenSpec::default()
    }
}

#[test]
fn graphml_round_trip_gives_identical_report() {
    let g = generate(&spec(1.0)).unwrap();
    for kind in MatcherKind::ALL {
        let net = build_network(
            &g.collection,
            kind,
            Some(&g.ontology),
            BuildOptions::default(),
        )
        .unwrap();
        let back = from_graphml(&to_graphml(&net)).unwrap();
        let a = analyze_network(&net, None, &settings()).unwrap();
        let b = analyze_network(&back, None, &settings()).unwrap();
        assert_eq!(to_canonical_json(&a), to_canonical_json(&b), "{kind}");
    }
}

#[test]
fn compare_matches_independent_analyses() {
    let g = generate(&spec(1.0)).unwrap();
    let report = compare(
        &g.collection,
        &g.ontology,
        BuildOptions::default(),
        &settings(),
    )
    .unwrap();
    let domains = g.collection.domains();
    assert_eq!(report.columns, MatcherKind::ALL);
    for (kind, got) in MatcherKind::ALL.iter().zip(&report.networks) {
        let net = build_network(
            &g.collection,
            *kind,
            Some(&g.ontology),
            BuildOptions::default(),
        )
        .unwrap();
        let want = analyze_network(&net, Some(&domains), &settings()).unwrap();
        assert_eq!(got, &want);
        assert!(!got.empty, "{kind} empty");
        assert!(
            got.average_distance.is_some()
                && got.modularity.is_some()
                && got.transitivity.is_some()
        );
    }
    assert!(report.deltas.empty.is_empty());
}

#[test]
fn unannotated_collection_flags_semantic_columns() {
    let g = generate(&spec(0.0)).unwrap();
    let report = compare(
        &g.collection,
        &g.ontology,
        BuildOptions::default(),
        &settings(),
    )
    .unwrap();
    assert_eq!(
        report.deltas.empty,
        [
            MatcherKind::Exact,
            MatcherKind::PlugIn,
            MatcherKind::Subsume
        ]
    );
    assert!(!report.networks[0].empty);
    let nodes = &report
        .table
        .iter()
        .find(|r| r.metric == "nodes")
        .unwrap()
        .values;
    assert!(nodes[0].unwrap() > 0.0);
    assert_eq!(&nodes[1..], [Some(0.0); 3]);
}

#[test]
fn communities_follow_domains() {
    let g = generate(&GenSpec {
        cross_domain_rate: 0.0,
        ..spec(1.0)
    })
    .unwrap();
    let net = build_network(
        &g.collection,
        MatcherKind::Equal,
        None,
        BuildOptions::default(),
    )
    .unwrap();
    let giant = giant_of(&net);
    let (_, partition, _) = communities_of(&giant, 4).unwrap().unwrap();
    let overlap = domain_overlap(&partition, &giant, &g.collection.domains()).unwrap();
    assert!(overlap.purity > 0.8, "purity {}", overlap.purity);
}

#[test]
fn reports_are_reproducible() {
    let g = generate(&spec(1.0)).unwrap();
    let run = || {
        to_canonical_json(
            &compare(
                &g.collection,
                &g.ontology,
                BuildOptions::default(),
                &settings(),
            )
            .unwrap(),
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn collection_dump_round_trips() {
    let g = generate(&spec(0.5)).unwrap();
    let back = ServiceCollection::from_json(&g.collection.to_json()).unwrap();
    assert_eq!(back, g.collection);
}
