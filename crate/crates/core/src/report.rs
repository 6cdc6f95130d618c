//! Giant-component metrics reports for one network and the four-way
//! comparison across matchers. Reports serialise to canonical JSON: sorted
//! keys, floats rounded to six significant digits, undefined values as `null`.

use std::collections::BTreeMap;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{
    best_partition, domain_overlap, walktrap, CommunityError, Dendrogram, DomainOverlap, Partition,
    DEFAULT_WALK_LENGTH,
};
use crate::corpus::ServiceCollection;
use crate::graph::Digraph;
use crate::matcher::MatcherKind;
use crate::metrics::{
    degree_report, distance_report, er_baseline, giant_component, transitivity, weak_components,
    DegreeReport, SmallWorldReport,
};
use crate::netbuild::{build_network, trim_isolates, BuildOptions, InteractionNetwork, NetError};
use crate::ontology::Ontology;
use crate::plfit::{fit_with_pvalue, PowerLawFit, DEFAULT_BOOTSTRAP};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ER_SAMPLES: usize = 20;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Community(#[from] CommunityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisSettings {
    pub seed: u64,
    pub walk_length: usize,
    pub plfit_boot: usize,
    pub er_samples: usize,
    pub top_k: usize,
    /// Also report whole-network statistics before trimming.
    pub full: bool,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            walk_length: DEFAULT_WALK_LENGTH,
            plfit_boot: DEFAULT_BOOTSTRAP,
            er_samples: DEFAULT_ER_SAMPLES,
            top_k: DEFAULT_TOP_K,
            full: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawReport {
    pub total_degree: Option<PowerLawFit>,
    pub in_degree: Option<PowerLawFit>,
    pub out_degree: Option<PowerLawFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WholeNetworkStats {
    pub component_sizes: Vec<usize>,
    pub average_distance: Option<f64>,
    pub diameter: Option<usize>,
    pub transitivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub kind: MatcherKind,
    pub build_options: BuildOptions,
    pub total_nodes: usize,
    pub total_links: usize,
    pub isolated_fraction: f64,
    /// No links at all: every metric below is undefined.
    pub empty: bool,
    /// Weak component sizes after trimming isolates, largest first.
    pub component_sizes: Vec<usize>,
    pub nodes: usize,
    pub links: usize,
    pub giant_node_fraction: Option<f64>,
    pub giant_link_fraction: Option<f64>,
    pub average_distance: Option<f64>,
    pub diameter: Option<usize>,
    pub reachable_pairs: u64,
    pub unreachable_pairs: u64,
    pub transitivity: Option<f64>,
    pub communities: Option<usize>,
    pub modularity: Option<f64>,
    pub domain_overlap: Option<DomainOverlap>,
    pub power_law: PowerLawReport,
    pub small_world: Option<SmallWorldReport>,
    pub degrees: Option<DegreeReport>,
    pub whole_network: Option<WholeNetworkStats>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub settings: AnalysisSettings,
    pub network: NetworkReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub metric: String,
    /// One value per column, in `CompareReport::columns` order.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    /// Kinds sharing the smallest giant-component diameter.
    pub smallest_diameter: Vec<MatcherKind>,
    pub smallest_average_distance: Vec<MatcherKind>,
    /// Non-empty kinds by decreasing modularity.
    pub modularity_order: Vec<MatcherKind>,
    pub empty: Vec<MatcherKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub settings: AnalysisSettings,
    pub columns: Vec<MatcherKind>,
    pub networks: Vec<NetworkReport>,
    pub table: Vec<TableRow>,
    pub deltas: Deltas,
}

/// Rounds to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn round_value(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_value),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_canonical_value<T: Serialize>(value: &T) -> serde_json::Value {
    let mut v = serde_json::to_value(value).expect("reports serialise");
    round_value(&mut v);
    v
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(&to_canonical_value(value)).expect("reports serialise") + "\n"
}

/// Trimmed giant component of a network.
pub fn giant_of(net: &InteractionNetwork) -> Digraph {
    giant_component(&trim_isolates(net).0.graph)
}

/// Walktrap dendrogram and modularity-maximising partition of the giant
/// component. `None` for an empty giant component.
pub fn communities_of(
    giant: &Digraph,
    walk_length: usize,
) -> Result<Option<(Dendrogram, Partition, f64)>, CommunityError> {
    if walk_length == 0 {
        return Err(CommunityError::ZeroWalkLength);
    }
    if giant.is_empty() {
        return Ok(None);
    }
    let dendrogram = walktrap(giant, walk_length)?;
    let (partition, q) = best_partition(&dendrogram, giant);
    Ok(Some((dendrogram, partition, q)))
}

fn fit_degrees(
    name: &str,
    degrees: &[usize],
    settings: &AnalysisSettings,
    warnings: &mut Vec<String>,
) -> Option<PowerLawFit> {
    let samples: Vec<u64> = degrees.iter().map(|&d| d as u64).collect();
    match fit_with_pvalue(&samples, settings.plfit_boot, settings.seed) {
        Ok((fit, w)) => {
            warnings.extend(w.into_iter().map(|w| format!("{name}: {w}")));
            Some(fit)
        }
        Err(e) => {
            warnings.push(format!("{name}: {e}"));
            None
        }
    }
}

pub fn analyze_network(
    net: &InteractionNetwork,
    domains: Option<&BTreeMap<String, Option<String>>>,
    settings: &AnalysisSettings,
) -> Result<NetworkReport, ReportError> {
    if settings.walk_length == 0 {
        return Err(CommunityError::ZeroWalkLength.into());
    }
    let mut warnings = Vec::new();
    let (trimmed, isolated_fraction) = trim_isolates(net);
    let components = weak_components(&trimmed.graph);
    let giant = giant_component(&trimmed.graph);
    let empty = giant.edge_count() == 0;
    if empty {
        warnings.push("network has no links after trimming isolated nodes".into());
    }

    let distances = distance_report(&giant);
    let communities = communities_of(&giant, settings.walk_length)?;
    let overlap = match (&communities, domains) {
        (Some((_, partition, _)), Some(d)) => domain_overlap(partition, &giant, d),
        _ => None,
    };

    let power_law = if empty {
        PowerLawReport {
            total_degree: None,
            in_degree: None,
            out_degree: None,
        }
    } else {
        let ins = giant.in_degrees();
        let outs = giant.out_degrees();
        let totals: Vec<usize> = ins.iter().zip(&outs).map(|(a, b)| a + b).collect();
        PowerLawReport {
            total_degree: fit_degrees("total degree", &totals, settings, &mut warnings),
            in_degree: fit_degrees("in-degree", &ins, settings, &mut warnings),
            out_degree: fit_degrees("out-degree", &outs, settings, &mut warnings),
        }
    };

    let small_world = if empty || settings.er_samples == 0 {
        None
    } else {
        let undirected_links = giant.undirected_edges().len();
        er_baseline(
            giant.node_count(),
            undirected_links,
            settings.er_samples,
            settings.seed,
        )
        .ok()
        .map(|r| r.with_observed(distances.average_distance))
    };

    let whole_network = settings.full.then(|| {
        let d = distance_report(&net.graph);
        WholeNetworkStats {
            component_sizes: weak_components(&net.graph).component_sizes,
            average_distance: d.average_distance,
            diameter: d.diameter,
            transitivity: transitivity(&net.graph),
        }
    });

    Ok(NetworkReport {
        kind: net.kind,
        build_options: net.options,
        total_nodes: net.node_count(),
        total_links: net.edge_count(),
        isolated_fraction,
        empty,
        component_sizes: components.component_sizes,
        nodes: giant.node_count(),
        links: giant.edge_count(),
        giant_node_fraction: (!empty).then_some(components.giant_node_fraction),
        giant_link_fraction: (!empty).then_some(components.giant_link_fraction),
        average_distance: distances.average_distance,
        diameter: distances.diameter,
        reachable_pairs: distances.reachable_pairs,
        unreachable_pairs: distances.unreachable_pairs,
        transitivity: (!empty).then(|| transitivity(&giant)),
        communities: communities.as_ref().map(|(_, p, _)| p.community_count),
        modularity: communities.as_ref().map(|(_, _, q)| *q),
        domain_overlap: overlap,
        power_law,
        small_world,
        degrees: (!empty).then(|| degree_report(&giant, settings.top_k)),
        whole_network,
        warnings,
    })
}

pub fn metrics_report(network: NetworkReport, settings: &AnalysisSettings) -> MetricsReport {
    MetricsReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        seed: settings.seed,
        settings: *settings,
        network,
    }
}

fn table_rows(networks: &[NetworkReport]) -> Vec<TableRow> {
    type Getter = fn(&NetworkReport) -> Option<f64>;
    let rows: [(&str, Getter); 12] = [
        ("nodes", |r| Some(r.nodes as f64)),
        ("links", |r| Some(r.links as f64)),
        ("isolated_fraction", |r| Some(r.isolated_fraction)),
        ("average_distance", |r| r.average_distance),
        ("diameter", |r| r.diameter.map(|d| d as f64)),
        ("transitivity", |r| r.transitivity),
        ("communities", |r| r.communities.map(|c| c as f64)),
        ("modularity", |r| r.modularity),
        ("er_average_distance", |r| {
            r.small_world.as_ref().and_then(|s| s.er_estimate)
        }),
        ("powerlaw_alpha", |r| {
            r.power_law.total_degree.as_ref().map(|f| f.alpha)
        }),
        ("powerlaw_xmin", |r| {
            r.power_law.total_degree.as_ref().map(|f| f.xmin as f64)
        }),
        ("powerlaw_p_value", |r| {
            r.power_law.total_degree.as_ref().and_then(|f| f.p_value)
        }),
    ];
    rows.iter()
        .map(|(metric, get)| TableRow {
            metric: metric.to_string(),
            values: networks.iter().map(get).collect(),
        })
        .collect()
}

fn argmin_kinds<F: Fn(&NetworkReport) -> Option<f64>>(
    networks: &[NetworkReport],
    get: F,
) -> Vec<MatcherKind> {
    let best = networks
        .iter()
        .filter_map(&get)
        .fold(f64::INFINITY, f64::min);
    networks
        .iter()
        .filter(|r| get(r) == Some(best))
        .map(|r| r.kind)
        .collect()
}

fn deltas(networks: &[NetworkReport]) -> Deltas {
    let mut by_q: Vec<(f64, usize)> = networks
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.modularity.map(|q| (q, i)))
        .collect();
    by_q.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Deltas {
        smallest_diameter: argmin_kinds(networks, |r| r.diameter.map(|d| d as f64)),
        smallest_average_distance: argmin_kinds(networks, |r| r.average_distance),
        modularity_order: by_q.into_iter().map(|(_, i)| networks[i].kind).collect(),
        empty: networks
            .iter()
            .filter(|r| r.empty)
            .map(|r| r.kind)
            .collect(),
    }
}

/// Builds and analyses the network of every matcher kind.
pub fn compare(
    coll: &ServiceCollection,
    ontology: &Ontology,
    options: BuildOptions,
    settings: &AnalysisSettings,
) -> Result<CompareReport, ReportError> {
    let domains = coll.domains();
    let networks: Vec<NetworkReport> = MatcherKind::ALL
        .par_iter()
        .map(|&kind| {
            let net = build_network(coll, kind, Some(ontology), options)?;
            analyze_network(&net, Some(&domains), settings)
        })
        .collect::<Result<_, _>>()?;
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        seed: settings.seed,
        settings: *settings,
        columns: MatcherKind::ALL.to_vec(),
        table: table_rows(&networks),
        deltas: deltas(&networks),
        networks,
    })
}

/// The comparison table as CSV, one row per metric. Values go through the
/// same rounding as the JSON report; undefined cells are empty.
pub fn compare_csv(report: &CompareReport) -> String {
    let mut out = String::from("metric");
    for kind in &report.columns {
        let _ = write!(out, ",{kind}");
    }
    out.push('\n');
    for row in &report.table {
        out.push_str(&row.metric);
        for v in &row.values {
            out.push(',');
            if let Some(v) = v {
                let _ = write!(out, "{}", round_sig(*v));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(labels: &[&str], edges: &[(&str, &str)]) -> InteractionNetwork {
        InteractionNetwork {
            graph: Digraph::from_labelled(
                labels.iter().map(|s| s.to_string()).collect(),
                edges.iter().copied(),
            )
            .unwrap(),
            kind: MatcherKind::Equal,
            options: BuildOptions::default(),
        }
    }

    fn quick() -> AnalysisSettings {
        AnalysisSettings {
            plfit_boot: 0,
            er_samples: 3,
            ..AnalysisSettings::default()
        }
    }

    #[test]
    fn rounding_keeps_six_significant_digits() {
        assert_eq!(round_sig(0.123456789), 0.123457);
        assert_eq!(round_sig(4.0 / 3.0), 1.33333);
        assert_eq!(round_sig(123456789.0), 123457000.0);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn directed_path_report() {
        let r = analyze_network(
            &net(&["a", "b", "c", "z"], &[("a", "b"), ("b", "c")]),
            None,
            &quick(),
        )
        .unwrap();
        assert_eq!(r.average_distance, Some(4.0 / 3.0));
        assert_eq!(r.diameter, Some(2));
        assert_eq!(r.isolated_fraction, 0.25);
        assert_eq!((r.nodes, r.links), (3, 2));
        let json = to_canonical_json(&metrics_report(r, &quick()));
        assert!(json.contains("\"average_distance\": 1.33333"));
    }

    #[test]
    fn two_triangle_bridge_report() {
        let edges = [
            ("a", "b"),
            ("b", "c"),
            ("c", "a"),
            ("d", "e"),
            ("e", "f"),
            ("f", "d"),
            ("c", "d"),
        ];
        let r = analyze_network(
            &net(&["a", "b", "c", "d", "e", "f"], &edges),
            None,
            &quick(),
        )
        .unwrap();
        assert!((r.transitivity.unwrap() - 0.6).abs() < 1e-12);
        assert!(r.modularity.unwrap() >= 5.0 / 14.0 - 1e-12);
        assert_eq!(r.communities, Some(2));
    }

    #[test]
    fn empty_network_has_undefined_metrics() {
        let r = analyze_network(&net(&["a", "b"], &[]), None, &quick()).unwrap();
        assert!(r.empty);
        assert_eq!(r.isolated_fraction, 1.0);
        assert!(r.average_distance.is_none() && r.modularity.is_none() && r.transitivity.is_none());
        let json = to_canonical_json(&r);
        assert!(json.contains("\"modularity\": null"));
    }

    #[test]
    fn full_flag_adds_whole_network_stats() {
        let settings = AnalysisSettings {
            full: true,
            ..quick()
        };
        let r = analyze_network(&net(&["a", "b", "z"], &[("a", "b")]), None, &settings).unwrap();
        assert_eq!(r.whole_network.unwrap().component_sizes, vec![2, 1]);
    }

    #[test]
    fn csv_projects_the_table() {
        let networks = vec![
            analyze_network(
                &net(&["a", "b", "c"], &[("a", "b"), ("b", "c")]),
                None,
                &quick(),
            )
            .unwrap(),
            NetworkReport {
                kind: MatcherKind::Exact,
                ..analyze_network(&net(&["a"], &[]), None, &quick()).unwrap()
            },
        ];
        let report = CompareReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.into(),
            seed: 1,
            settings: quick(),
            columns: vec![MatcherKind::Equal, MatcherKind::Exact],
            table: table_rows(&networks),
            deltas: deltas(&networks),
            networks,
        };
        let csv = compare_csv(&report);
        assert!(csv.starts_with("metric,equal,exact\nnodes,3,0\n"));
        assert!(csv.contains("\ndiameter,2,\n"));
        assert_eq!(report.deltas.empty, vec![MatcherKind::Exact]);
        assert_eq!(report.deltas.smallest_diameter, vec![MatcherKind::Equal]);
    }
}
