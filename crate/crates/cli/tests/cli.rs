use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use svcnet::corpus::{write_wsdl, OperationDesc, ParameterDesc, ServiceDesc};

fn svcnet(args: &[&str]) -> Output {
    svcnet_env(args, &[])
}

fn svcnet_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_svcnet"));
    cmd.args(args).env_remove("SVCNET_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run svcnet")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn gen_tree(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "gen",
        "-o",
        dir.to_str().unwrap(),
        "--services",
        "20",
        "--seed",
        "5",
    ];
    args.extend_from_slice(extra);
    stdout(&svcnet(&args));
}

fn demo(dir: &Path) {
    let p = ParameterDesc::named;
    let service = ServiceDesc {
        name: "demo".into(),
        domain: None,
        source: None,
        operations: vec![
            OperationDesc::new("demo", "op1", vec![], vec![p("c"), p("d"), p("e")]),
            OperationDesc::new("demo", "op2", vec![p("c"), p("d")], vec![p("e"), p("f")]),
            OperationDesc::new("demo", "op3", vec![p("a"), p("f"), p("g")], vec![]),
        ],
    };
    std::fs::write(dir.join("demo.wsdl"), write_wsdl(&service)).unwrap();
}

const FAST: [&str; 4] = ["--plfit-boot", "20", "--er-samples", "3"];

#[test]
fn extract_worked_example_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    demo(dir.path());
    let out = svcnet(&[
        "extract",
        dir.path().to_str().unwrap(),
        "--matcher",
        "equal",
        "--format",
        "edgelist",
    ]);
    assert_eq!(stdout(&out), "demo/op1\tdemo/op2\n");
}

#[test]
fn missing_directory_is_a_usage_error() {
    let out = svcnet(&["extract", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/not/here"));
}

#[test]
fn subsumption_matchers_need_an_ontology() {
    let dir = tempfile::tempdir().unwrap();
    gen_tree(dir.path(), &[]);
    for kind in ["plugin", "subsume"] {
        let out = svcnet(&["extract", dir.path().to_str().unwrap(), "--matcher", kind]);
        assert_eq!(out.status.code(), Some(2), "{kind}");
    }
}

#[test]
fn exact_without_ontology_warns_and_proceeds() {
    let dir = tempfile::tempdir().unwrap();
    gen_tree(dir.path(), &[]);
    let out = svcnet(&[
        "extract",
        dir.path().to_str().unwrap(),
        "--matcher",
        "exact",
        "--format",
        "edgelist",
    ]);
    assert!(!stdout(&out).is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn analyze_directed_path_graphml() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.graphml");
    std::fs::write(
        &path,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="kind" for="graph" attr.name="kind" attr.type="string"/>
  <graph edgedefault="directed">
    <data key="kind">equal</data>
    <node id="a"/><node id="b"/><node id="c"/>
    <edge source="a" target="b"/><edge source="b" target="c"/>
  </graph>
</graphml>"#,
    )
    .unwrap();
    let mut args = vec!["analyze", path.to_str().unwrap()];
    args.extend(FAST);
    let report: Value = serde_json::from_str(&stdout(&svcnet(&args))).unwrap();
    assert_eq!(report["network"]["average_distance"], 1.33333);
    assert_eq!(report["network"]["diameter"], 2);
    assert_eq!(report["schema_version"], 1);
}

#[test]
fn empty_network_reports_nulls_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    gen_tree(dir.path(), &["--annotation-rate", "0"]);
    let onto = dir.path().join("ontology.tsv");
    let mut args = vec![
        "analyze",
        dir.path().to_str().unwrap(),
        "--matcher",
        "plugin",
        "--ontology",
        onto.to_str().unwrap(),
    ];
    args.extend(FAST);
    let report: Value = serde_json::from_str(&stdout(&svcnet(&args))).unwrap();
    assert_eq!(report["network"]["empty"], true);
    assert!(report["network"]["diameter"].is_null());
}

#[test]
fn compare_is_thread_count_independent_and_matches_analyze() {
    let dir = tempfile::tempdir().unwrap();
    gen_tree(dir.path(), &[]);
    let root = dir.path().to_str().unwrap();
    let onto = dir.path().join("ontology.tsv");
    let onto = onto.to_str().unwrap();
    let mut args = vec!["compare", root, "--ontology", onto];
    args.extend(FAST);
    let one = stdout(&svcnet_env(&args, &[("SVCNET_THREADS", "1")]));
    let three = stdout(&svcnet_env(&args, &[("SVCNET_THREADS", "3")]));
    assert_eq!(one, three);

    let report: Value = serde_json::from_str(&one).unwrap();
    for (i, kind) in ["equal", "exact", "plugin", "subsume"].iter().enumerate() {
        let mut args = vec!["analyze", root, "--matcher", kind, "--ontology", onto];
        args.extend(FAST);
        let single: Value = serde_json::from_str(&stdout(&svcnet(&args))).unwrap();
        assert_eq!(report["networks"][i], single["network"], "{kind}");
    }
}

#[test]
fn compare_csv_has_four_columns() {
    let dir = tempfile::tempdir().unwrap();
    gen_tree(dir.path(), &[]);
    let onto = dir.path().join("ontology.tsv");
    let mut args = vec![
        "compare",
        dir.path().to_str().unwrap(),
        "--ontology",
        onto.to_str().unwrap(),
        "--format",
        "csv",
    ];
    args.extend(FAST);
    let csv = stdout(&svcnet(&args));
    assert!(csv.starts_with("metric,equal,exact,plugin,subsume\n"));
    assert!(csv.lines().all(|l| l.split(',').count() == 5));
}

#[test]
fn compare_without_ontology_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    gen_tree(dir.path(), &[]);
    assert_eq!(
        svcnet(&["compare", dir.path().to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn export_round_trips_and_partitions() {
    let dir = tempfile::tempdir().unwrap();
    gen_tree(dir.path(), &[]);
    let root = dir.path().to_str().unwrap();
    let graphml = dir.path().join("net.graphml");
    stdout(&svcnet(&["extract", root, "-o", graphml.to_str().unwrap()]));
    let from_file = stdout(&svcnet(&[
        "export",
        graphml.to_str().unwrap(),
        "--format",
        "edgelist",
    ]));
    let from_dir = stdout(&svcnet(&["export", root, "--format", "edgelist"]));
    assert_eq!(from_file, from_dir);

    let csv = stdout(&svcnet(&["export", root, "--format", "partition"]));
    assert!(csv.starts_with("node_id,community_id\n"));
    let dendrogram: Value = serde_json::from_str(&stdout(&svcnet(&[
        "export",
        root,
        "--format",
        "dendrogram",
    ])))
    .unwrap();
    assert_eq!(dendrogram["walk_length"], 4);
    let collection: Value = serde_json::from_str(&stdout(&svcnet(&[
        "export",
        root,
        "--format",
        "collection",
    ])))
    .unwrap();
    assert_eq!(collection["services"].as_array().unwrap().len(), 20);
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let out = svcnet_env(&["gen", "-o", "/tmp/unused"], &[("SVCNET_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
}
