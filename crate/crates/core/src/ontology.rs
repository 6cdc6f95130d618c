//! Concept hierarchy with a precomputed subclass closure.
//!
//! Two source formats are accepted, sniffed by content:
//!
//! * edge list: one `child<TAB>parent` IRI pair per line; blank lines and
//!   lines starting with `#` are skipped;
//! * an OWL subset: `SubClassOf` axioms between named classes, either in
//!   OWL/XML (`<SubClassOf><Class IRI=".."/><Class IRI=".."/></SubClassOf>`)
//!   or RDF/XML (`<owl:Class rdf:about=".."><rdfs:subClassOf rdf:resource=".."/>`).
//!   Everything else is ignored; `equivalentClass` axioms produce a warning.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use roxmltree::{Document, Node};
use thiserror::Error;

const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("subclass cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("line {line}: expected `child<TAB>parent`, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("{line}:{column}: malformed XML: {message}")]
    Xml {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Immutable subclass hierarchy. Concepts are compared by exact IRI string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    concepts: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
    /// Strict ancestors of every concept, sorted.
    ancestors: Vec<Vec<usize>>,
    /// Strict descendants of every concept, sorted.
    descendants: Vec<Vec<usize>>,
    warnings: Vec<String>,
}

impl Ontology {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds the hierarchy from `(child, parent)` pairs plus optional extra
    /// concepts without edges.
    pub fn from_edges<S: AsRef<str>>(
        edges: impl IntoIterator<Item = (S, S)>,
        extra_concepts: impl IntoIterator<Item = S>,
    ) -> Result<Self, OntologyError> {
        let mut onto = Self::default();
        for (child, parent) in edges {
            let (child, parent) = (child.as_ref(), parent.as_ref());
            if child == parent {
                onto.warnings
                    .push(format!("self subclass axiom on `{child}` ignored"));
                onto.intern(child);
                continue;
            }
            let c = onto.intern(child);
            let p = onto.intern(parent);
            onto.edges.insert((c, p));
        }
        for c in extra_concepts {
            onto.intern(c.as_ref());
        }
        onto.close()?;
        Ok(onto)
    }

    fn intern(&mut self, iri: &str) -> usize {
        if let Some(&i) = self.index.get(iri) {
            return i;
        }
        let i = self.concepts.len();
        self.concepts.push(iri.to_string());
        self.index.insert(iri.to_string(), i);
        i
    }

    /// Computes ancestor/descendant closures in topological order, failing on
    /// the first cycle found.
    fn close(&mut self) -> Result<(), OntologyError> {
        let n = self.concepts.len();
        let mut parents = vec![Vec::new(); n];
        for &(c, p) in &self.edges {
            parents[c].push(p);
        }
        // Iterative DFS post-order; colours: 0 new, 1 on stack, 2 done.
        let mut colour = vec![0u8; n];
        let mut order = Vec::with_capacity(n);
        for start in 0..n {
            if colour[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            colour[start] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if let Some(&p) = parents[v].get(*next) {
                    *next += 1;
                    match colour[p] {
                        0 => {
                            colour[p] = 1;
                            stack.push((p, 0));
                        }
                        1 => {
                            let from = stack.iter().position(|&(u, _)| u == p).unwrap();
                            let mut cycle: Vec<String> = stack[from..]
                                .iter()
                                .map(|&(u, _)| self.concepts[u].clone())
                                .collect();
                            cycle.push(self.concepts[p].clone());
                            return Err(OntologyError::Cycle(cycle));
                        }
                        _ => {}
                    }
                } else {
                    colour[v] = 2;
                    order.push(v);
                    stack.pop();
                }
            }
        }
        // Post-order visits parents before children.
        let mut ancestors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &v in &order {
            let mut acc = BTreeSet::new();
            for &p in &parents[v] {
                acc.insert(p);
                acc.extend(ancestors[p].iter().copied());
            }
            ancestors[v] = acc;
        }
        let mut descendants = vec![Vec::new(); n];
        for (v, anc) in ancestors.iter().enumerate() {
            for &a in anc {
                descendants[a].push(v);
            }
        }
        self.ancestors = ancestors
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        self.descendants = descendants;
        Ok(())
    }

    /// Parses either supported format, chosen by the first non-blank character.
    pub fn parse(text: &str) -> Result<Self, OntologyError> {
        let trimmed = text.trim_start_matches('\u{feff}').trim_start();
        if trimmed.starts_with('<') {
            parse_owl(trimmed)
        } else {
            parse_edge_list(text)
        }
    }

    pub fn load(path: &Path) -> Result<Self, OntologyError> {
        let text = std::fs::read_to_string(path).map_err(|e| OntologyError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn contains(&self, iri: &str) -> bool {
        self.index.contains_key(iri)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Direct subclass edges as `(child, parent)` IRIs, sorted.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .map(|&(c, p)| (self.concepts[c].as_str(), self.concepts[p].as_str()))
            .collect();
        out.sort();
        out
    }

    /// True iff `sub` differs from `sup` and is below it in the closure.
    /// Unknown concepts are isolated.
    pub fn is_strict_subclass(&self, sub: &str, sup: &str) -> bool {
        match (self.index.get(sub), self.index.get(sup)) {
            (Some(&a), Some(&b)) => a != b && self.ancestors[a].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    /// Strict ancestors of `iri` (empty for unknown concepts).
    pub fn ancestors(&self, iri: &str) -> impl Iterator<Item = &str> {
        self.related(iri, &self.ancestors)
    }

    /// Strict descendants of `iri` (empty for unknown concepts).
    pub fn descendants(&self, iri: &str) -> impl Iterator<Item = &str> {
        self.related(iri, &self.descendants)
    }

    fn related<'s>(&'s self, iri: &str, table: &'s [Vec<usize>]) -> impl Iterator<Item = &'s str> {
        self.index
            .get(iri)
            .map(|&i| table[i].as_slice())
            .unwrap_or_default()
            .iter()
            .map(|&j| self.concepts[j].as_str())
    }

    /// Edge-list serialisation, one sorted `child<TAB>parent` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (c, p) in self.edges() {
            out.push_str(c);
            out.push('\t');
            out.push_str(p);
            out.push('\n');
        }
        out
    }
}

fn parse_edge_list(text: &str) -> Result<Ontology, OntologyError> {
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t').map(str::trim);
        match (fields.next(), fields.next(), fields.next()) {
            (Some(c), Some(p), None) if !c.is_empty() && !p.is_empty() => edges.push((c, p)),
            _ => {
                return Err(OntologyError::BadLine {
                    line: i + 1,
                    text: line.to_string(),
                })
            }
        }
    }
    Ontology::from_edges(edges, std::iter::empty())
}

struct OwlReader<'a> {
    base: String,
    prefixes: HashMap<&'a str, &'a str>,
    edges: Vec<(String, String)>,
    classes: Vec<String>,
    warnings: Vec<String>,
}

impl<'a> OwlReader<'a> {
    fn resolve(&self, iri: &str) -> String {
        if iri.contains(':') && !iri.starts_with('#') {
            iri.to_string()
        } else if iri.starts_with('#') {
            format!("{}{}", self.base.trim_end_matches('#'), iri)
        } else {
            format!("{}{}", self.base, iri)
        }
    }

    /// IRI of a named OWL/XML `Class` element.
    fn class_iri(&self, node: Node) -> Option<String> {
        if let Some(iri) = node.attribute("IRI") {
            return Some(self.resolve(iri));
        }
        let abbrev = node.attribute("abbreviatedIRI")?;
        let (p, l) = abbrev.split_once(':').unwrap_or(("", abbrev));
        self.prefixes.get(p).map(|ns| format!("{ns}{l}"))
    }

    fn rdf_attr(node: Node<'_, '_>, name: &str) -> Option<String> {
        node.attribute((RDF_NS, name)).map(str::to_string)
    }

    fn visit(&mut self, node: Node<'a, '_>) {
        for child in node.children().filter(Node::is_element) {
            match child.tag_name().name() {
                "SubClassOf" => {
                    let elems: Vec<_> = child.children().filter(Node::is_element).collect();
                    let named: Vec<_> = elems
                        .iter()
                        .filter(|c| c.tag_name().name() == "Class")
                        .filter_map(|c| self.class_iri(*c))
                        .collect();
                    if elems.len() == 2 && named.len() == 2 {
                        self.edges.push((named[0].clone(), named[1].clone()));
                    }
                }
                "Declaration" => {
                    for c in child.children().filter(|c| c.tag_name().name() == "Class") {
                        if let Some(iri) = self.class_iri(c) {
                            self.classes.push(iri);
                        }
                    }
                }
                "EquivalentClasses" => self
                    .warnings
                    .push("EquivalentClasses axiom ignored".to_string()),
                "Class"
                    if Self::rdf_attr(child, "about").is_some()
                        || Self::rdf_attr(child, "ID").is_some() =>
                {
                    self.rdf_class(child)
                }
                "Class" => {}
                _ => self.visit(child),
            }
        }
    }

    fn rdf_class(&mut self, class: Node<'a, '_>) {
        let about = Self::rdf_attr(class, "about")
            .map(|a| self.resolve(&a))
            .or_else(|| Self::rdf_attr(class, "ID").map(|id| self.resolve(&format!("#{id}"))));
        let Some(about) = about else {
            return;
        };
        self.classes.push(about.clone());
        for prop in class.children().filter(Node::is_element) {
            match prop.tag_name().name() {
                "subClassOf" => {
                    let parent = Self::rdf_attr(prop, "resource").or_else(|| {
                        // Nested named class: <rdfs:subClassOf><owl:Class rdf:about=".."/>
                        prop.children()
                            .find(|c| c.tag_name().name() == "Class")
                            .and_then(|c| Self::rdf_attr(c, "about"))
                    });
                    if let Some(parent) = parent {
                        self.edges.push((about.clone(), self.resolve(&parent)));
                    }
                }
                "equivalentClass" => self
                    .warnings
                    .push(format!("equivalentClass on `{about}` ignored")),
                _ => {}
            }
        }
    }
}

fn parse_owl(text: &str) -> Result<Ontology, OntologyError> {
    let doc = Document::parse(text).map_err(|e| OntologyError::Xml {
        line: e.pos().row,
        column: e.pos().col,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    let base = root
        .attribute(("http://www.w3.org/XML/1998/namespace", "base"))
        .or_else(|| root.attribute("ontologyIRI"))
        .unwrap_or_default()
        .to_string();
    let prefixes = root
        .children()
        .filter(|c| c.tag_name().name() == "Prefix")
        .filter_map(|c| Some((c.attribute("name")?, c.attribute("IRI")?)))
        .collect();
    let mut reader = OwlReader {
        base,
        prefixes,
        edges: Vec::new(),
        classes: Vec::new(),
        warnings: Vec::new(),
    };
    reader.visit(root);
    let mut onto = Ontology::from_edges(
        reader.edges.iter().map(|(c, p)| (c.as_str(), p.as_str())),
        reader.classes.iter().map(String::as_str),
    )?;
    onto.warnings.extend(reader.warnings);
    Ok(onto)
}
