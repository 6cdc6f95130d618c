//! Seeded synthetic collections with known structure, plus planted-partition
//! graphs for community-detection checks.
//!
//! Every domain owns a balanced concept subtree under a shared root and a
//! disjoint pool of parameter names. A parameter is drawn as a slot `k` of
//! its domain pool: its name is `names[k % name_pool_size]` and its concept
//! `concepts[k % concept_pool_size]`, so a name pool smaller than the concept
//! pool produces same-name parameters with different meanings.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    write_wsdl, OperationDesc, ParameterDesc, ServiceCollection, ServiceDesc, MANIFEST_FILE,
};
use crate::graph::Digraph;
use crate::ontology::{Ontology, OntologyError};

pub const ONTOLOGY_BASE: &str = "http://svcnet.example/onto#";
pub const ROOT_CONCEPT: &str = "http://svcnet.example/onto#Thing";
pub const ONTOLOGY_FILE: &str = "ontology.tsv";

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    Invalid(String),
    #[error("pool too small: {0}")]
    PoolTooSmall(String),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n_services: usize,
    pub ops_per_service: usize,
    pub n_domains: usize,
    pub name_pool_size: usize,
    pub concept_pool_size: usize,
    /// Levels below each domain's root concept.
    pub hierarchy_depth: usize,
    pub branching: usize,
    /// Inclusive `(min, max)` input count per operation.
    pub inputs: (usize, usize),
    pub outputs: (usize, usize),
    pub annotation_rate: f64,
    pub cross_domain_rate: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            n_services: 50,
            ops_per_service: 4,
            n_domains: 4,
            name_pool_size: 12,
            concept_pool_size: 15,
            hierarchy_depth: 3,
            branching: 2,
            inputs: (1, 2),
            outputs: (1, 3),
            annotation_rate: 1.0,
            cross_domain_rate: 0.05,
            seed: 1,
        }
    }
}

impl GenSpec {
    fn subtree_size(&self) -> usize {
        (0..=self.hierarchy_depth)
            .map(|k| self.branching.saturating_pow(k as u32))
            .fold(0usize, usize::saturating_add)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let counts = [
            ("n_services", self.n_services),
            ("ops_per_service", self.ops_per_service),
            ("n_domains", self.n_domains),
            ("name_pool_size", self.name_pool_size),
            ("concept_pool_size", self.concept_pool_size),
            ("hierarchy_depth", self.hierarchy_depth),
            ("branching", self.branching),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(GenError::Invalid(format!("{name} must be positive")));
        }
        for (name, rate) in [
            ("annotation_rate", self.annotation_rate),
            ("cross_domain_rate", self.cross_domain_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(GenError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        for (name, (lo, hi)) in [("inputs", self.inputs), ("outputs", self.outputs)] {
            if lo > hi {
                return Err(GenError::Invalid(format!(
                    "{name} range {lo}..={hi} is empty"
                )));
            }
        }
        if self.concept_pool_size > self.subtree_size() {
            return Err(GenError::PoolTooSmall(format!(
                "concept_pool_size {} exceeds the {} concepts of a depth-{} branching-{} subtree",
                self.concept_pool_size,
                self.subtree_size(),
                self.hierarchy_depth,
                self.branching
            )));
        }
        let slots = self.name_pool_size.max(self.concept_pool_size);
        let need = self.inputs.1.max(self.outputs.1);
        if need > slots {
            return Err(GenError::PoolTooSmall(format!(
                "{need} distinct parameters per message requested from a pool of {slots}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Domain of every operation, by operation id.
    pub op_domain: BTreeMap<String, String>,
    /// Root concept of every domain subtree.
    pub domain_roots: Vec<String>,
    /// Parameters drawn from a foreign domain pool.
    pub cross_domain_params: usize,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub collection: ServiceCollection,
    pub ontology: Ontology,
    pub truth: GroundTruth,
}

pub fn domain_name(d: usize) -> String {
    format!("domain{d}")
}

/// Balanced subtree for domain `d`, in BFS order (root first), and its edges.
fn domain_subtree(spec: &GenSpec, d: usize) -> (Vec<String>, Vec<(String, String)>) {
    let root = format!("{ONTOLOGY_BASE}D{d}");
    let mut nodes = vec![root.clone()];
    let mut edges = vec![(root.clone(), ROOT_CONCEPT.to_string())];
    let mut level = vec![root];
    for _ in 0..spec.hierarchy_depth {
        let mut next = Vec::new();
        for parent in &level {
            for b in 0..spec.branching {
                let child = format!("{parent}_{b}");
                edges.push((child.clone(), parent.clone()));
                nodes.push(child.clone());
                next.push(child);
            }
        }
        level = next;
    }
    (nodes, edges)
}

pub fn generate(spec: &GenSpec) -> Result<Generated, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut edges = Vec::new();
    let mut concept_pools = Vec::new();
    let mut domain_roots = Vec::new();
    for d in 0..spec.n_domains {
        let (nodes, e) = domain_subtree(spec, d);
        domain_roots.push(nodes[0].clone());
        concept_pools.push(nodes[..spec.concept_pool_size].to_vec());
        edges.extend(e);
    }
    let ontology = Ontology::from_edges(
        edges.iter().map(|(c, p)| (c.as_str(), p.as_str())),
        std::iter::empty(),
    )?;
    let name_pools: Vec<Vec<String>> = (0..spec.n_domains)
        .map(|d| {
            (0..spec.name_pool_size)
                .map(|k| format!("d{d}_p{k}"))
                .collect()
        })
        .collect();

    let slots = spec.name_pool_size.max(spec.concept_pool_size);
    let mut cross = 0;
    let mut draw = |rng: &mut ChaCha8Rng, home: usize, (lo, hi): (usize, usize)| {
        let count = rng.random_range(lo..=hi);
        rand::seq::index::sample(rng, slots, count)
            .into_iter()
            .map(|k| {
                let mut d = home;
                if spec.n_domains > 1 && rng.random::<f64>() < spec.cross_domain_rate {
                    d = (home + 1 + rng.random_range(0..spec.n_domains - 1)) % spec.n_domains;
                    cross += 1;
                }
                let annotated = rng.random::<f64>() < spec.annotation_rate;
                ParameterDesc {
                    name: name_pools[d][k % spec.name_pool_size].clone(),
                    xsd_type: Some("xsd:string".into()),
                    concept: annotated
                        .then(|| concept_pools[d][k % spec.concept_pool_size].clone()),
                }
            })
            .collect::<Vec<_>>()
    };

    let width = spec.n_services.saturating_sub(1).to_string().len().max(3);
    let mut services = Vec::new();
    let mut op_domain = BTreeMap::new();
    for s in 0..spec.n_services {
        let home = s % spec.n_domains;
        let name = format!("svc{s:0width$}");
        let operations: Vec<OperationDesc> = (0..spec.ops_per_service)
            .map(|o| {
                let inputs = draw(&mut rng, home, spec.inputs);
                let outputs = draw(&mut rng, home, spec.outputs);
                OperationDesc::new(name.clone(), format!("op{o}"), inputs, outputs)
            })
            .collect();
        for op in &operations {
            op_domain.insert(op.id.to_string(), domain_name(home));
        }
        services.push(ServiceDesc {
            source: Some(format!("{name}.wsdl")),
            name,
            domain: Some(domain_name(home)),
            operations,
        });
    }
    Ok(Generated {
        collection: ServiceCollection {
            services,
            warnings: Vec::new(),
        },
        ontology,
        truth: GroundTruth {
            op_domain,
            domain_roots,
            cross_domain_params: cross,
        },
    })
}

/// Writes one SAWSDL file per service, the ontology edge list and the domain
/// manifest into `dir` (created if missing).
pub fn write_tree(dir: &Path, generated: &Generated) -> Result<(), GenError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| GenError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut manifest = BTreeMap::new();
    for service in &generated.collection.services {
        let file = service
            .source
            .clone()
            .unwrap_or_else(|| format!("{}.wsdl", service.name));
        let path = dir.join(&file);
        fs::write(&path, write_wsdl(service)).map_err(io(&path))?;
        if let Some(d) = &service.domain {
            manifest.insert(file, d.clone());
        }
    }
    let path = dir.join(ONTOLOGY_FILE);
    fs::write(&path, generated.ontology.to_edge_list()).map_err(io(&path))?;
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    fs::write(&path, text).map_err(io(&path))?;
    Ok(())
}

/// Undirected planted-partition graph: consecutive blocks of the given
/// sizes, edge probability `p_in` inside a block and `p_out` across. Returns
/// the graph (edges stored as `(i, j)`, `i < j`) and the block of every node.
pub fn planted_partition(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (Digraph, Vec<usize>) {
    let truth: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = truth.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if truth[i] == truth[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    (Digraph::anonymous(n, edges), truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{collection_stats, load_collection};
    use crate::matcher::MatcherKind;
    use crate::netbuild::{build_network, BuildOptions};

    fn small(seed: u64) -> GenSpec {
        GenSpec {
            n_services: 12,
            ops_per_service: 3,
            n_domains: 2,
            seed,
            ..GenSpec::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small(4)).unwrap();
        let b = generate(&small(4)).unwrap();
        assert_eq!(a.collection, b.collection);
        assert_eq!(a.ontology, b.ontology);
        assert_ne!(a.collection, generate(&small(5)).unwrap().collection);
    }

    #[test]
    fn disjoint_domains_never_link_semantically() {
        let spec = GenSpec {
            cross_domain_rate: 0.0,
            ..small(2)
        };
        let g = generate(&spec).unwrap();
        for kind in [
            MatcherKind::Exact,
            MatcherKind::PlugIn,
            MatcherKind::Subsume,
        ] {
            let net = build_network(
                &g.collection,
                kind,
                Some(&g.ontology),
                BuildOptions::default(),
            )
            .unwrap();
            assert!(net.edge_count() > 0, "{kind} network is empty");
            for (a, b) in net.labelled_edges() {
                assert_eq!(g.truth.op_domain[a], g.truth.op_domain[b]);
            }
        }
    }

    #[test]
    fn unannotated_collections_have_empty_semantic_networks() {
        let spec = GenSpec {
            annotation_rate: 0.0,
            ..small(3)
        };
        let g = generate(&spec).unwrap();
        assert_eq!(collection_stats(&g.collection).annotation_coverage, 0.0);
        for kind in [
            MatcherKind::Exact,
            MatcherKind::PlugIn,
            MatcherKind::Subsume,
        ] {
            let net = build_network(
                &g.collection,
                kind,
                Some(&g.ontology),
                BuildOptions::default(),
            )
            .unwrap();
            assert_eq!(net.edge_count(), 0);
        }
        let eq = build_network(
            &g.collection,
            MatcherKind::Equal,
            None,
            BuildOptions::default(),
        );
        assert!(eq.unwrap().edge_count() > 0);
    }

    #[test]
    fn full_annotation_gives_full_coverage() {
        let g = generate(&small(1)).unwrap();
        assert_eq!(collection_stats(&g.collection).annotation_coverage, 1.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_rate = GenSpec {
            annotation_rate: 1.5,
            ..GenSpec::default()
        };
        assert!(matches!(generate(&bad_rate), Err(GenError::Invalid(_))));
        let tiny_pool = GenSpec {
            name_pool_size: 2,
            concept_pool_size: 2,
            outputs: (1, 3),
            ..GenSpec::default()
        };
        assert!(matches!(
            generate(&tiny_pool),
            Err(GenError::PoolTooSmall(_))
        ));
        let shallow = GenSpec {
            hierarchy_depth: 1,
            branching: 2,
            concept_pool_size: 4,
            ..GenSpec::default()
        };
        assert!(matches!(generate(&shallow), Err(GenError::PoolTooSmall(_))));
    }

    #[test]
    fn written_tree_loads_back_identically() {
        let g = generate(&small(8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path(), &g).unwrap();
        let loaded = load_collection(dir.path()).unwrap();
        assert_eq!(loaded, g.collection);
        let onto = Ontology::load(&dir.path().join(ONTOLOGY_FILE)).unwrap();
        assert_eq!(onto.edges(), g.ontology.edges());
    }

    #[test]
    fn planted_partition_respects_blocks() {
        let (g, truth) = planted_partition(&[5, 5], 1.0, 0.0, 1);
        assert_eq!(truth, [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(g.edge_count(), 20);
        assert!(g.edges().iter().all(|&(a, b)| truth[a] == truth[b]));
    }
}
