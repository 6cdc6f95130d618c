use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use svcnet::community::Partition;
use svcnet::corpus::{collection_stats, load_collection_or_dump, ServiceCollection};
use svcnet::export::{export_network, from_graphml, ExportFormat};
use svcnet::gen::{generate, write_tree, GenSpec, ONTOLOGY_FILE};
use svcnet::matcher::MatcherKind;
use svcnet::netbuild::{build_network, BuildOptions, InteractionNetwork};
use svcnet::ontology::Ontology;
use svcnet::report::{
    analyze_network, communities_of, compare, compare_csv, giant_of, metrics_report,
    to_canonical_json, AnalysisSettings, DEFAULT_ER_SAMPLES, DEFAULT_SEED, DEFAULT_TOP_K,
};

const THREADS_ENV: &str = "SVCNET_THREADS";

type Domains = BTreeMap<String, Option<String>>;

#[derive(Parser)]
#[command(
    name = "svcnet",
    version,
    about = "Build and compare web-service interaction networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one interaction network and write it as GraphML, DOT or an edge list.
    Extract {
        /// Collection directory or JSON collection dump.
        input: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, value_enum, default_value_t = NetFormat::Graphml)]
        format: NetFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Metrics report of one network's giant component.
    Analyze {
        /// GraphML network, collection directory or JSON collection dump.
        input: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Also report whole-network statistics before trimming.
        #[arg(long)]
        full: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Analyse the networks of all four matchers side by side.
    Compare {
        input: PathBuf,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[command(flatten)]
        options: OptionArgs,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long)]
        full: bool,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic collection, its ontology and domain manifest.
    Gen {
        #[command(flatten)]
        spec: GenArgs,
        /// Output directory.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Export a network, its communities or the parsed collection.
    Export {
        input: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, value_enum)]
        format: ExportKind,
        #[arg(long, default_value_t = svcnet::community::DEFAULT_WALK_LENGTH)]
        walk_length: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OptionArgs {
    /// Link producers to operations that take no inputs.
    #[arg(long)]
    zero_input_targets: bool,
    /// Let PlugIn and Subsume also accept identical concepts.
    #[arg(long)]
    reflexive_subsumption: bool,
}

impl OptionArgs {
    fn options(&self) -> BuildOptions {
        BuildOptions {
            zero_input_targets: self.zero_input_targets,
            reflexive_subsumption: self.reflexive_subsumption,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, default_value = "equal")]
    matcher: MatcherKind,
    #[arg(long)]
    ontology: Option<PathBuf>,
    #[command(flatten)]
    options: OptionArgs,
}

#[derive(Args)]
struct AnalysisArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = svcnet::community::DEFAULT_WALK_LENGTH)]
    walk_length: usize,
    /// Bootstrap replicates for the power-law p-value (0 skips it).
    #[arg(long, default_value_t = svcnet::plfit::DEFAULT_BOOTSTRAP)]
    plfit_boot: usize,
    /// Random graphs sampled for the small-world baseline.
    #[arg(long, default_value_t = DEFAULT_ER_SAMPLES)]
    er_samples: usize,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
}

impl AnalysisArgs {
    fn settings(&self, full: bool) -> Result<AnalysisSettings, CliError> {
        if self.walk_length == 0 {
            return Err(CliError::Usage("--walk-length must be positive".into()));
        }
        Ok(AnalysisSettings {
            seed: self.seed,
            walk_length: self.walk_length,
            plfit_boot: self.plfit_boot,
            er_samples: self.er_samples,
            top_k: self.top_k,
            full,
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = GenSpec::default().n_services)]
    services: usize,
    #[arg(long, default_value_t = GenSpec::default().ops_per_service)]
    ops_per_service: usize,
    #[arg(long, default_value_t = GenSpec::default().n_domains)]
    domains: usize,
    #[arg(long, default_value_t = GenSpec::default().name_pool_size)]
    name_pool: usize,
    #[arg(long, default_value_t = GenSpec::default().concept_pool_size)]
    concept_pool: usize,
    #[arg(long, default_value_t = GenSpec::default().hierarchy_depth)]
    depth: usize,
    #[arg(long, default_value_t = GenSpec::default().branching)]
    branching: usize,
    #[arg(long, default_value_t = GenSpec::default().inputs.0)]
    min_inputs: usize,
    #[arg(long, default_value_t = GenSpec::default().inputs.1)]
    max_inputs: usize,
    #[arg(long, default_value_t = GenSpec::default().outputs.0)]
    min_outputs: usize,
    #[arg(long, default_value_t = GenSpec::default().outputs.1)]
    max_outputs: usize,
    #[arg(long, default_value_t = GenSpec::default().annotation_rate)]
    annotation_rate: f64,
    #[arg(long, default_value_t = GenSpec::default().cross_domain_rate)]
    cross_domain_rate: f64,
    #[arg(long, default_value_t = GenSpec::default().seed)]
    seed: u64,
}

impl GenArgs {
    fn spec(&self) -> GenSpec {
        GenSpec {
            n_services: self.services,
            ops_per_service: self.ops_per_service,
            n_domains: self.domains,
            name_pool_size: self.name_pool,
            concept_pool_size: self.concept_pool,
            hierarchy_depth: self.depth,
            branching: self.branching,
            inputs: (self.min_inputs, self.max_inputs),
            outputs: (self.min_outputs, self.max_outputs),
            annotation_rate: self.annotation_rate,
            cross_domain_rate: self.cross_domain_rate,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NetFormat {
    Graphml,
    Dot,
    Edgelist,
}

impl From<NetFormat> for ExportFormat {
    fn from(f: NetFormat) -> Self {
        match f {
            NetFormat::Graphml => ExportFormat::GraphMl,
            NetFormat::Dot => ExportFormat::Dot,
            NetFormat::Edgelist => ExportFormat::EdgeList,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    Graphml,
    Dot,
    Edgelist,
    /// Giant-component communities as `node_id,community_id` CSV.
    Partition,
    /// Walktrap merge list of the giant component as JSON.
    Dendrogram,
    /// Parsed collection as JSON.
    Collection,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::Internal(e)
    }
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn require_exists(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{}: no such file or directory",
            path.display()
        )))
    }
}

fn load_ontology(path: Option<&Path>) -> Result<Option<Ontology>, CliError> {
    let Some(path) = path else { return Ok(None) };
    require_exists(path)?;
    let onto =
        Ontology::load(path).with_context(|| format!("loading ontology {}", path.display()))?;
    for w in onto.warnings() {
        warn(format!("{}: {w}", path.display()));
    }
    Ok(Some(onto))
}

fn load_collection(path: &Path) -> Result<ServiceCollection, CliError> {
    require_exists(path)?;
    let coll = load_collection_or_dump(path)
        .with_context(|| format!("loading collection {}", path.display()))?;
    for w in &coll.warnings {
        warn(w);
    }
    Ok(coll)
}

fn check_ontology(
    kind: MatcherKind,
    onto: Option<&Ontology>,
    coll: &ServiceCollection,
) -> Result<(), CliError> {
    match (kind, onto) {
        (MatcherKind::PlugIn | MatcherKind::Subsume, None) => Err(CliError::Usage(format!(
            "--matcher {kind} needs --ontology"
        ))),
        (MatcherKind::Exact, None) if collection_stats(coll).annotation_coverage > 0.0 => {
            warn("no ontology supplied: exact matching compares concept IRIs only");
            Ok(())
        }
        _ => Ok(()),
    }
}

fn build(path: &Path, args: &BuildArgs) -> Result<(InteractionNetwork, Domains), CliError> {
    let coll = load_collection(path)?;
    let onto = load_ontology(args.ontology.as_deref())?;
    check_ontology(args.matcher, onto.as_ref(), &coll)?;
    let net = build_network(&coll, args.matcher, onto.as_ref(), args.options.options())
        .context("building network")?;
    Ok((net, coll.domains()))
}

fn is_graphml(path: &Path) -> bool {
    if path.is_dir() {
        return false;
    }
    fs::read(path)
        .map(|b| {
            let head = String::from_utf8_lossy(&b[..b.len().min(4096)]).into_owned();
            head.trim_start().starts_with('<') && head.contains("graphml")
        })
        .unwrap_or(false)
}

/// A network from either a GraphML file or a collection.
fn network_input(
    path: &Path,
    args: &BuildArgs,
) -> Result<(InteractionNetwork, Option<Domains>), CliError> {
    require_exists(path)?;
    if is_graphml(path) {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let net = from_graphml(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok((net, None));
    }
    let (net, domains) = build(path, args)?;
    Ok((net, Some(domains)))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Into::into),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract {
            input,
            build: args,
            format,
            output,
        } => {
            let (net, _) = build(&input, &args)?;
            emit(output.as_deref(), &export_network(&net, format.into()))
        }
        Command::Analyze {
            input,
            build: args,
            analysis,
            full,
            output,
        } => {
            let settings = analysis.settings(full)?;
            let (net, domains) = network_input(&input, &args)?;
            let report = analyze_network(&net, domains.as_ref(), &settings).context("analysing")?;
            for w in &report.warnings {
                warn(w);
            }
            emit(
                output.as_deref(),
                &to_canonical_json(&metrics_report(report, &settings)),
            )
        }
        Command::Compare {
            input,
            ontology,
            options,
            analysis,
            full,
            format,
            output,
        } => {
            let settings = analysis.settings(full)?;
            let coll = load_collection(&input)?;
            let Some(onto) = load_ontology(ontology.as_deref())? else {
                return Err(CliError::Usage(
                    "compare runs plugin and subsume matching and needs --ontology".into(),
                ));
            };
            let report = compare(&coll, &onto, options.options(), &settings)
                .context("comparing networks")?;
            for r in report.networks.iter().filter(|r| r.empty) {
                warn(format!("{} network is empty", r.kind));
            }
            let text = match format {
                ReportFormat::Json => to_canonical_json(&report),
                ReportFormat::Csv => compare_csv(&report),
            };
            emit(output.as_deref(), &text)
        }
        Command::Gen { spec, output } => {
            let generated = generate(&spec.spec()).map_err(|e| CliError::Usage(e.to_string()))?;
            write_tree(&output, &generated).context("writing generated collection")?;
            eprintln!(
                "wrote {} services ({} operations) and {} to {}",
                generated.collection.services.len(),
                generated.collection.operation_count(),
                ONTOLOGY_FILE,
                output.display()
            );
            Ok(())
        }
        Command::Export {
            input,
            build: args,
            format,
            walk_length,
            output,
        } => {
            if walk_length == 0 {
                return Err(CliError::Usage("--walk-length must be positive".into()));
            }
            let text = match format {
                ExportKind::Collection => load_collection(&input)?.to_json() + "\n",
                ExportKind::Graphml | ExportKind::Dot | ExportKind::Edgelist => {
                    let (net, _) = network_input(&input, &args)?;
                    let f = match format {
                        ExportKind::Graphml => ExportFormat::GraphMl,
                        ExportKind::Dot => ExportFormat::Dot,
                        _ => ExportFormat::EdgeList,
                    };
                    export_network(&net, f)
                }
                ExportKind::Partition | ExportKind::Dendrogram => {
                    let (net, _) = network_input(&input, &args)?;
                    let giant = giant_of(&net);
                    let found =
                        communities_of(&giant, walk_length).context("detecting communities")?;
                    match (format, found) {
                        (ExportKind::Partition, Some((_, p, _))) => p.to_csv(&giant),
                        (ExportKind::Partition, None) => Partition::single(0).to_csv(&giant),
                        (_, Some((d, _, _))) => {
                            serde_json::to_string_pretty(&d).context("serialising dendrogram")?
                                + "\n"
                        }
                        (_, None) => "null\n".into(),
                    }
                }
            };
            emit(output.as_deref(), &text)
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring thread pool")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
