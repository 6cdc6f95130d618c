//! Service collections parsed from WSDL 1.1 / SAWSDL documents.
//!
//! Every portType operation becomes an [`OperationDesc`] whose inputs and
//! outputs are flat parameter sets. A message part is one parameter, except
//! when it references an unannotated element wrapping a complex type, in which
//! case each top-level child element of the wrapper is one parameter. The
//! `sawsdl:modelReference` of the element (or of its named type) becomes the
//! parameter concept.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const WSDL_NS: &str = "http://schemas.xmlsoap.org/wsdl/";
pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema";
pub const SAWSDL_NS: &str = "http://www.w3.org/ns/sawsdl";

/// Name of the optional sidecar file mapping description files to domains.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}:{column}: malformed XML: {message}")]
    Xml {
        file: String,
        line: u32,
        column: u32,
        message: String,
    },
    #[error("{file}: not valid UTF-8")]
    Encoding { file: String },
    #[error("{file}: root element is `{found}`, expected WSDL `definitions`")]
    NotWsdl { file: String, found: String },
    #[error("{}: no descriptions found", .dir.display())]
    NoDescriptions { dir: PathBuf },
    #[error("{}: bad manifest: {message}", .path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("collection dump: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParameterDesc {
    pub name: String,
    pub xsd_type: Option<String>,
    pub concept: Option<String>,
}

impl ParameterDesc {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            xsd_type: None,
            concept: None,
        }
    }

    pub fn with_concept(mut self, iri: impl Into<String>) -> Self {
        self.concept = Some(iri.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OperationId {
    pub service: String,
    pub operation: String,
}

impl fmt::Display for OperationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.service, self.operation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationDesc {
    pub id: OperationId,
    pub inputs: Vec<ParameterDesc>,
    pub outputs: Vec<ParameterDesc>,
}

impl OperationDesc {
    /// Creates an operation; parameter lists are normalised into sets keyed by
    /// `(name, concept)`.
    pub fn new(
        service: impl Into<String>,
        operation: impl Into<String>,
        inputs: Vec<ParameterDesc>,
        outputs: Vec<ParameterDesc>,
    ) -> Self {
        Self {
            id: OperationId {
                service: service.into(),
                operation: operation.into(),
            },
            inputs: normalize_params(inputs),
            outputs: normalize_params(outputs),
        }
    }
}

fn normalize_params(mut params: Vec<ParameterDesc>) -> Vec<ParameterDesc> {
    params.sort();
    params.dedup_by(|a, b| a.name == b.name && a.concept == b.concept);
    params
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDesc {
    pub name: String,
    pub domain: Option<String>,
    pub source: Option<String>,
    pub operations: Vec<OperationDesc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ServiceCollection {
    pub services: Vec<ServiceDesc>,
    pub warnings: Vec<String>,
}

impl ServiceCollection {
    pub fn operations(&self) -> impl Iterator<Item = (&ServiceDesc, &OperationDesc)> {
        self.services
            .iter()
            .flat_map(|s| s.operations.iter().map(move |o| (s, o)))
    }

    pub fn operation_count(&self) -> usize {
        self.services.iter().map(|s| s.operations.len()).sum()
    }

    /// Domain label of every operation, keyed by its display id.
    pub fn domains(&self) -> BTreeMap<String, Option<String>> {
        self.operations()
            .map(|(s, o)| (o.id.to_string(), s.domain.clone()))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("collection serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub services: usize,
    pub operations: usize,
    pub parameters: usize,
    pub annotated_parameters: usize,
    pub annotation_coverage: f64,
}

pub fn collection_stats(coll: &ServiceCollection) -> CollectionStats {
    let (mut parameters, mut annotated) = (0, 0);
    for (_, op) in coll.operations() {
        for p in op.inputs.iter().chain(&op.outputs) {
            parameters += 1;
            annotated += usize::from(p.concept.is_some());
        }
    }
    CollectionStats {
        services: coll.services.len(),
        operations: coll.operation_count(),
        parameters,
        annotated_parameters: annotated,
        annotation_coverage: if parameters == 0 {
            0.0
        } else {
            annotated as f64 / parameters as f64
        },
    }
}

/// Result of parsing one description document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedService {
    pub service: ServiceDesc,
    pub warnings: Vec<String>,
}

/// Parses one WSDL 1.1 document. `file` labels errors and warnings and names
/// the service when the document declares no name.
pub fn parse_description(bytes: &[u8], file: &str) -> Result<ParsedService, CorpusError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CorpusError::Encoding {
        file: file.to_string(),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        CorpusError::Xml {
            file: file.to_string(),
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "definitions" {
        return Err(CorpusError::NotWsdl {
            file: file.to_string(),
            found: root.tag_name().name().to_string(),
        });
    }
    let mut parser = WsdlParser::new(&doc, file);
    let service = parser.service(root);
    Ok(ParsedService {
        service,
        warnings: parser.warnings,
    })
}

struct WsdlParser<'a, 'input> {
    file: &'a str,
    elements: HashMap<&'a str, Node<'a, 'input>>,
    types: HashMap<&'a str, Node<'a, 'input>>,
    messages: HashMap<&'a str, Node<'a, 'input>>,
    warnings: Vec<String>,
}

fn local(qname: &str) -> &str {
    qname.rsplit_once(':').map_or(qname, |(_, l)| l)
}

fn prefix(qname: &str) -> Option<&str> {
    qname.split_once(':').map(|(p, _)| p)
}

fn children<'a, 'input: 'a>(
    node: Node<'a, 'input>,
    name: &'a str,
) -> impl Iterator<Item = Node<'a, 'input>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == name)
}

/// Loose absolute-IRI check: a scheme followed by `:` and a non-empty,
/// whitespace-free remainder.
pub fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
        && !rest.is_empty()
        && !rest.chars().any(char::is_whitespace)
}

impl<'a, 'input> WsdlParser<'a, 'input> {
    fn new(doc: &'a Document<'input>, file: &'a str) -> Self {
        let root = doc.root_element();
        let mut elements = HashMap::new();
        let mut types = HashMap::new();
        for schema in children(root, "types").flat_map(|t| children(t, "schema")) {
            for item in schema.children().filter(Node::is_element) {
                let Some(name) = item.attribute("name") else {
                    continue;
                };
                match item.tag_name().name() {
                    "element" => {
                        elements.entry(name).or_insert(item);
                    }
                    "complexType" | "simpleType" => {
                        types.entry(name).or_insert(item);
                    }
                    _ => {}
                }
            }
        }
        let messages = children(root, "message")
            .filter_map(|m| m.attribute("name").map(|n| (n, m)))
            .collect();
        Self {
            file,
            elements,
            types,
            messages,
            warnings: Vec::new(),
        }
    }

    fn warn(&mut self, message: String) {
        self.warnings.push(format!("{}: {message}", self.file));
    }

    fn service(&mut self, root: Node<'a, 'input>) -> ServiceDesc {
        let name = children(root, "service")
            .find_map(|s| s.attribute("name"))
            .or_else(|| root.attribute("name"))
            .map(str::to_string)
            .unwrap_or_else(|| {
                Path::new(self.file).file_stem().map_or_else(
                    || self.file.to_string(),
                    |s| s.to_string_lossy().into_owned(),
                )
            });
        let mut operations: Vec<OperationDesc> = Vec::new();
        for port_type in children(root, "portType") {
            for op in children(port_type, "operation") {
                let Some(op_name) = op.attribute("name") else {
                    self.warn("portType operation without a name skipped".into());
                    continue;
                };
                let inputs = self.message_params(op, "input", op_name);
                let outputs = self.message_params(op, "output", op_name);
                if inputs.is_none() && outputs.is_none() {
                    self.warn(format!("operation `{op_name}` has no input and no output"));
                }
                let mut op_name = op_name.to_string();
                if operations.iter().any(|o| o.id.operation == op_name) {
                    let base = op_name.clone();
                    let mut k = 2;
                    while operations.iter().any(|o| o.id.operation == op_name) {
                        op_name = format!("{base}~{k}");
                        k += 1;
                    }
                    self.warn(format!("duplicate operation `{base}` renamed `{op_name}`"));
                }
                operations.push(OperationDesc::new(
                    name.clone(),
                    op_name,
                    inputs.unwrap_or_default(),
                    outputs.unwrap_or_default(),
                ));
            }
        }
        ServiceDesc {
            name,
            domain: None,
            source: Some(self.file.to_string()),
            operations,
        }
    }

    /// Parameters of the `input`/`output` message of `op`; `None` when the
    /// operation declares no such message.
    fn message_params(
        &mut self,
        op: Node<'a, 'input>,
        direction: &str,
        op_name: &str,
    ) -> Option<Vec<ParameterDesc>> {
        let io = op
            .children()
            .find(|c| c.is_element() && c.tag_name().name() == direction)?;
        let Some(msg_ref) = io.attribute("message") else {
            self.warn(format!("{op_name}: {direction} without message attribute"));
            return Some(Vec::new());
        };
        let Some(&message) = self.messages.get(local(msg_ref)) else {
            self.warn(format!("{op_name}: unknown message `{msg_ref}`"));
            return Some(Vec::new());
        };
        let mut params = Vec::new();
        for part in children(message, "part") {
            self.part_params(part, &mut params);
        }
        Some(params)
    }

    fn model_reference(&mut self, node: Node<'a, 'input>) -> Option<String> {
        let value = node
            .attributes()
            .find(|a| a.name() == "modelReference" && a.namespace() == Some(SAWSDL_NS))
            .or_else(|| node.attributes().find(|a| a.name() == "modelReference"))?
            .value();
        let mut iris = value.split_whitespace();
        let first = iris.next()?.to_string();
        if iris.next().is_some() {
            self.warn(format!(
                "modelReference `{value}` lists several concepts; keeping `{first}`"
            ));
        }
        if !is_absolute_iri(&first) {
            self.warn(format!(
                "modelReference `{first}` is not an absolute IRI; ignored"
            ));
            return None;
        }
        Some(first)
    }

    fn is_builtin(&self, node: Node<'a, 'input>, qname: &str) -> bool {
        match prefix(qname) {
            Some(p) => node.lookup_namespace_uri(Some(p)) == Some(XSD_NS),
            None => node.lookup_namespace_uri(None) == Some(XSD_NS),
        }
    }

    /// Locally declared named type, warning when a non-builtin type cannot be
    /// resolved (typically declared in an imported schema).
    fn named_type(&mut self, node: Node<'a, 'input>, qname: &str) -> Option<Node<'a, 'input>> {
        if self.is_builtin(node, qname) {
            return None;
        }
        let found = self.types.get(local(qname)).copied();
        if found.is_none() {
            self.warn(format!("type `{qname}` not resolvable; kept as raw QName"));
        }
        found
    }

    fn part_params(&mut self, part: Node<'a, 'input>, out: &mut Vec<ParameterDesc>) {
        let part_name = part.attribute("name").unwrap_or_default();
        let part_concept = self.model_reference(part);
        if let Some(el_ref) = part.attribute("element") {
            match self.elements.get(local(el_ref)).copied() {
                Some(el) => self.element_params(el, part_concept, out),
                None => {
                    self.warn(format!(
                        "part `{part_name}`: element `{el_ref}` not resolvable; kept as raw QName"
                    ));
                    out.push(ParameterDesc {
                        name: local(el_ref).to_string(),
                        xsd_type: Some(el_ref.to_string()),
                        concept: part_concept,
                    });
                }
            }
        } else {
            let xsd_type = part.attribute("type");
            let concept = part_concept.or_else(|| {
                xsd_type
                    .and_then(|t| self.named_type(part, t))
                    .and_then(|t| self.model_reference(t))
            });
            if part_name.is_empty() {
                self.warn("message part without a name skipped".into());
                return;
            }
            out.push(ParameterDesc {
                name: part_name.to_string(),
                xsd_type: xsd_type.map(str::to_string),
                concept,
            });
        }
    }

    fn element_params(
        &mut self,
        el: Node<'a, 'input>,
        inherited: Option<String>,
        out: &mut Vec<ParameterDesc>,
    ) {
        let name = el.attribute("name").unwrap_or_default();
        let xsd_type = el.attribute("type");
        let named_type = xsd_type.and_then(|t| self.named_type(el, t));
        let concept = self
            .model_reference(el)
            .or(inherited)
            .or_else(|| named_type.and_then(|t| self.model_reference(t)));
        if concept.is_none() {
            let complex = children(el, "complexType")
                .next()
                .or(named_type.filter(|t| t.tag_name().name() == "complexType"));
            let wrapped: Vec<_> = complex.map(wrapper_children).unwrap_or_default();
            if !wrapped.is_empty() {
                for child in wrapped {
                    self.child_param(child, out);
                }
                return;
            }
        }
        out.push(ParameterDesc {
            name: name.to_string(),
            xsd_type: xsd_type.map(str::to_string),
            concept,
        });
    }

    fn child_param(&mut self, child: Node<'a, 'input>, out: &mut Vec<ParameterDesc>) {
        let target = match child.attribute("ref") {
            Some(r) => match self.elements.get(local(r)).copied() {
                Some(el) => el,
                None => {
                    self.warn(format!(
                        "element ref `{r}` not resolvable; kept as raw QName"
                    ));
                    out.push(ParameterDesc {
                        name: local(r).to_string(),
                        xsd_type: Some(r.to_string()),
                        concept: self.model_reference(child),
                    });
                    return;
                }
            },
            None => child,
        };
        let Some(name) = target.attribute("name") else {
            return;
        };
        let xsd_type = target.attribute("type");
        let concept = self
            .model_reference(child)
            .or_else(|| self.model_reference(target))
            .or_else(|| {
                xsd_type
                    .and_then(|t| self.named_type(target, t))
                    .and_then(|t| self.model_reference(t))
            });
        out.push(ParameterDesc {
            name: name.to_string(),
            xsd_type: xsd_type.map(str::to_string),
            concept,
        });
    }
}

/// Top-level element particles of a complex type (`sequence`, `all` or
/// `choice`), without recursing into nested groups.
fn wrapper_children<'a, 'input>(complex: Node<'a, 'input>) -> Vec<Node<'a, 'input>> {
    complex
        .children()
        .filter(|c| c.is_element() && matches!(c.tag_name().name(), "sequence" | "all" | "choice"))
        .flat_map(|group| {
            group
                .children()
                .filter(|c| c.is_element() && c.tag_name().name() == "element")
        })
        .collect()
}

fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Parses every `.wsdl` file of `dir` (sorted by file name). Files that fail
/// to parse become warnings; `manifest.json`, when present, assigns domains.
pub fn load_collection(dir: &Path) -> Result<ServiceCollection, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("wsdl"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CorpusError::NoDescriptions {
            dir: dir.to_path_buf(),
        });
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest = if manifest_path.is_file() {
        read_manifest(&manifest_path)?
    } else {
        BTreeMap::new()
    };

    let parsed: Vec<(String, Result<ParsedService, CorpusError>)> = files
        .par_iter()
        .map(|path| {
            let file = path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default();
            let result = fs::read(path)
                .map_err(|source| CorpusError::Io {
                    path: path.clone(),
                    source,
                })
                .and_then(|bytes| parse_description(&bytes, &file));
            (file, result)
        })
        .collect();

    let mut coll = ServiceCollection::default();
    for (file, result) in parsed {
        match result {
            Ok(ParsedService {
                mut service,
                warnings,
            }) => {
                coll.warnings.extend(warnings);
                service.domain = manifest.remove(&file);
                let base = service.name.clone();
                let mut k = 2;
                while coll.services.iter().any(|s| s.name == service.name) {
                    service.name = format!("{base}~{k}");
                    k += 1;
                }
                if service.name != base {
                    coll.warnings.push(format!(
                        "{file}: duplicate service name `{base}` renamed `{}`",
                        service.name
                    ));
                    for op in &mut service.operations {
                        op.id.service = service.name.clone();
                    }
                }
                coll.services.push(service);
            }
            Err(e) => coll.warnings.push(e.to_string()),
        }
    }
    for file in manifest.keys() {
        coll.warnings.push(format!(
            "{MANIFEST_FILE}: entry `{file}` matches no parsed description"
        ));
    }
    Ok(coll)
}

/// Loads a collection from a description directory or from a JSON dump file.
pub fn load_collection_or_dump(path: &Path) -> Result<ServiceCollection, CorpusError> {
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ServiceCollection::from_json(&text)
    } else {
        load_collection(dir_or_err(path)?)
    }
}

fn dir_or_err(path: &Path) -> Result<&Path, CorpusError> {
    if path.is_dir() {
        Ok(path)
    } else {
        Err(CorpusError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such directory"),
        })
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serialises a service as a SAWSDL document that [`parse_description`] reads
/// back into the same operations. Each non-empty message is one wrapper element
/// holding one child element per parameter.
pub fn write_wsdl(service: &ServiceDesc) -> String {
    use std::fmt::Write;

    let name = escape(&service.name);
    let mut types = String::new();
    let mut messages = String::new();
    let mut port = String::new();
    for op in &service.operations {
        let op_name = escape(&op.id.operation);
        let _ = writeln!(port, "    <wsdl:operation name=\"{op_name}\">");
        for (suffix, params, tag) in [
            ("Request", &op.inputs, "input"),
            ("Response", &op.outputs, "output"),
        ] {
            if params.is_empty() {
                continue;
            }
            let wrapper = format!("{op_name}{suffix}");
            let _ = writeln!(
                types,
                "      <xsd:element name=\"{wrapper}\">\n        <xsd:complexType>\n          <xsd:sequence>"
            );
            for p in params {
                let _ = write!(
                    types,
                    "            <xsd:element name=\"{}\"",
                    escape(&p.name)
                );
                if let Some(t) = &p.xsd_type {
                    let _ = write!(types, " type=\"{}\"", escape(t));
                }
                if let Some(c) = &p.concept {
                    let _ = write!(types, " sawsdl:modelReference=\"{}\"", escape(c));
                }
                types.push_str("/>\n");
            }
            types.push_str(
                "          </xsd:sequence>\n        </xsd:complexType>\n      </xsd:element>\n",
            );
            let _ = writeln!(
                messages,
                "  <wsdl:message name=\"{wrapper}\">\n    <wsdl:part name=\"parameters\" element=\"tns:{wrapper}\"/>\n  </wsdl:message>"
            );
            let _ = writeln!(port, "      <wsdl:{tag} message=\"tns:{wrapper}\"/>");
        }
        port.push_str("    </wsdl:operation>\n");
    }
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<wsdl:definitions name=\"{name}\" targetNamespace=\"urn:svcnet:{name}\" \
xmlns:wsdl=\"{WSDL_NS}\" xmlns:xsd=\"{XSD_NS}\" xmlns:sawsdl=\"{SAWSDL_NS}\" xmlns:tns=\"urn:svcnet:{name}\">\n\
  <wsdl:types>\n    <xsd:schema targetNamespace=\"urn:svcnet:{name}\" elementFormDefault=\"qualified\">\n\
{types}    </xsd:schema>\n  </wsdl:types>\n\
{messages}  <wsdl:portType name=\"{name}PortType\">\n{port}  </wsdl:portType>\n\
  <wsdl:service name=\"{name}\"/>\n</wsdl:definitions>\n"
    )
}
