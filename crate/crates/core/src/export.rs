//! Deterministic network serialisation: GraphML, Graphviz DOT and a plain
//! tab-separated edge list. Nodes and edges are always written in sorted
//! order, so the same network always yields the same bytes.

use std::fmt::Write;
use std::str::FromStr;

use roxmltree::Document;

use crate::graph::Digraph;
use crate::matcher::MatcherKind;
use crate::netbuild::{BuildOptions, InteractionNetwork, NetError};

pub const GRAPHML_NS: &str = "http://graphml.graphdrawing.org/xmlns";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    Dot,
    EdgeList,
}

impl FromStr for ExportFormat {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(Self::GraphMl),
            "dot" => Ok(Self::Dot),
            "edgelist" | "tsv" => Ok(Self::EdgeList),
            _ => Err(NetError::UnknownFormat(s.to_string())),
        }
    }
}

pub fn export_network(net: &InteractionNetwork, format: ExportFormat) -> String {
    match format {
        ExportFormat::GraphMl => to_graphml(net),
        ExportFormat::Dot => to_dot(net),
        ExportFormat::EdgeList => to_edge_list(net),
    }
}

/// One `src<TAB>dst` line per link. Isolated nodes do not appear.
pub fn to_edge_list(net: &InteractionNetwork) -> String {
    let mut out = String::new();
    for (a, b) in net.labelled_edges() {
        let _ = writeln!(out, "{a}\t{b}");
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn to_graphml(net: &InteractionNetwork) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<graphml xmlns=\"{GRAPHML_NS}\">");
    out.push_str(
        "  <key id=\"kind\" for=\"graph\" attr.name=\"kind\" attr.type=\"string\"/>\n\
         \x20 <key id=\"zero_input_targets\" for=\"graph\" attr.name=\"zero_input_targets\" attr.type=\"boolean\"/>\n\
         \x20 <key id=\"reflexive_subsumption\" for=\"graph\" attr.name=\"reflexive_subsumption\" attr.type=\"boolean\"/>\n",
    );
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    let _ = writeln!(out, "    <data key=\"kind\">{}</data>", net.kind);
    let _ = writeln!(
        out,
        "    <data key=\"zero_input_targets\">{}</data>",
        net.options.zero_input_targets
    );
    let _ = writeln!(
        out,
        "    <data key=\"reflexive_subsumption\">{}</data>",
        net.options.reflexive_subsumption
    );
    for label in net.graph.labels() {
        let _ = writeln!(out, "    <node id=\"{}\"/>", xml_escape(label));
    }
    for (a, b) in net.labelled_edges() {
        let _ = writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\"/>",
            xml_escape(a),
            xml_escape(b)
        );
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn to_dot(net: &InteractionNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_quote(net.kind.as_str()));
    let _ = writeln!(
        out,
        "  graph [kind={}, zero_input_targets={}, reflexive_subsumption={}];",
        dot_quote(net.kind.as_str()),
        dot_quote(&net.options.zero_input_targets.to_string()),
        dot_quote(&net.options.reflexive_subsumption.to_string()),
    );
    for label in net.graph.labels() {
        let _ = writeln!(out, "  {};", dot_quote(label));
    }
    for (a, b) in net.labelled_edges() {
        let _ = writeln!(out, "  {} -> {};", dot_quote(a), dot_quote(b));
    }
    out.push_str("}\n");
    out
}

/// Reads a GraphML document written by [`to_graphml`] (or any GraphML whose
/// graph carries a `kind` data entry).
pub fn from_graphml(text: &str) -> Result<InteractionNetwork, NetError> {
    let doc = Document::parse(text).map_err(|e| NetError::GraphMl(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(NetError::GraphMl(format!(
            "root element is `{}`",
            root.tag_name().name()
        )));
    }
    let key_names: std::collections::HashMap<&str, &str> = root
        .children()
        .filter(|c| c.tag_name().name() == "key")
        .filter_map(|k| {
            Some((
                k.attribute("id")?,
                k.attribute("attr.name").unwrap_or(k.attribute("id")?),
            ))
        })
        .collect();
    let graph = root
        .children()
        .find(|c| c.tag_name().name() == "graph")
        .ok_or_else(|| NetError::GraphMl("no <graph> element".into()))?;

    let mut kind = None;
    let mut options = BuildOptions::default();
    let mut labels = Vec::new();
    let mut edges = Vec::new();
    for child in graph.children().filter(|c| c.is_element()) {
        match child.tag_name().name() {
            "data" => {
                let key = child.attribute("key").unwrap_or_default();
                let value = child.text().unwrap_or_default().trim();
                let flag = || value.eq_ignore_ascii_case("true");
                match key_names.get(key).copied().unwrap_or(key) {
                    "kind" => kind = Some(value.parse::<MatcherKind>()?),
                    "zero_input_targets" => options.zero_input_targets = flag(),
                    "reflexive_subsumption" => options.reflexive_subsumption = flag(),
                    _ => {}
                }
            }
            "node" => labels.push(
                child
                    .attribute("id")
                    .ok_or_else(|| NetError::GraphMl("node without id".into()))?
                    .to_string(),
            ),
            "edge" => {
                let (Some(s), Some(t)) = (child.attribute("source"), child.attribute("target"))
                else {
                    return Err(NetError::GraphMl("edge without source/target".into()));
                };
                edges.push((s.to_string(), t.to_string()));
            }
            _ => {}
        }
    }
    let kind = kind.ok_or_else(|| NetError::GraphMl("graph has no `kind` data entry".into()))?;
    Ok(InteractionNetwork {
        graph: Digraph::from_labelled(labels, edges)?,
        kind,
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_nodes() -> InteractionNetwork {
        InteractionNetwork {
            graph: Digraph::from_labelled(vec!["b".into(), "a\"&".into()], [("a\"&", "b")])
                .unwrap(),
            kind: MatcherKind::PlugIn,
            options: BuildOptions {
                zero_input_targets: false,
                reflexive_subsumption: true,
            },
        }
    }

    #[test]
    fn edge_list_has_one_line_per_link() {
        assert_eq!(to_edge_list(&two_nodes()), "a\"&\tb\n");
    }

    #[test]
    fn exports_are_deterministic() {
        let net = two_nodes();
        for f in [
            ExportFormat::GraphMl,
            ExportFormat::Dot,
            ExportFormat::EdgeList,
        ] {
            assert_eq!(export_network(&net, f), export_network(&net.clone(), f));
        }
    }

    #[test]
    fn graphml_round_trip_keeps_kind_and_options() {
        let net = two_nodes();
        let back = from_graphml(&to_graphml(&net)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn dot_escapes_quotes() {
        let dot = to_dot(&two_nodes());
        assert!(dot.contains("\"a\\\"&\" -> \"b\";"));
        assert!(dot.starts_with("digraph \"plugin\" {"));
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!(matches!(
            "png".parse::<ExportFormat>(),
            Err(NetError::UnknownFormat(_))
        ));
    }

    #[test]
    fn graphml_without_kind_is_rejected() {
        let text = r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns"><graph edgedefault="directed"><node id="a"/></graph></graphml>"#;
        assert!(from_graphml(text).is_err());
    }
}
