//! `pareto-stream`: cluster users, stream objects through an engine, score
//! approximate runs and dump brute-force frontiers.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 invariant
//! violation.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pareto_stream::approx::ApproxParams;
use pareto_stream::clustering::{agglomerate_groups, AgglomerateOptions, SimilarityKind};
use pareto_stream::harness::{
    accuracy_csv, evaluate, oracle_csv, oracle_dump, parse_frontiers_csv, parse_rational, parse_summary_csv, run,
    Algorithm, RunConfig,
};
use pareto_stream::ingest::{self, load_clusters, load_objects, load_profiles, load_schema, write_clusters};
use pareto_stream::window::trace_csv;
use pareto_stream::workload::{generate_workload, WorkloadSpec};
use pareto_stream::{AttributeSchema, Error, Execution, ObjectId, ObjectRecord, Rational, UserId, UserProfile};

type Frontiers = BTreeMap<UserId, BTreeSet<ObjectId>>;

#[derive(Parser)]
#[command(
    name = "pareto-stream",
    version,
    about = "Continuous Pareto frontiers for many users"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Agglomerate users into clusters and write the merge log.
    Cluster(ClusterArgs),
    /// Stream objects through an engine and write reports.
    Run(RunArgs),
    /// Score an approximate run's frontiers against an exact run's.
    Evaluate(EvaluateArgs),
    /// Brute-force frontiers for fixture diffing.
    Oracle(OracleArgs),
    /// Generate a synthetic archetype workload.
    Gen(GenArgs),
}

#[derive(Args)]
struct Inputs {
    /// Directory holding schema.txt, objects.csv and prefs.csv (as written by `gen`).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    objects: Option<PathBuf>,
    #[arg(long)]
    prefs: Option<PathBuf>,
}

impl Inputs {
    fn path(&self, given: &Option<PathBuf>, file: &str, flag: &str) -> Result<PathBuf> {
        match (given, &self.data) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(d)) => Ok(d.join(file)),
            (None, None) => Err(Error::Config(format!("--{flag} or --data is required")).into()),
        }
    }

    fn users(&self) -> Result<(AttributeSchema, Vec<UserProfile>)> {
        let path = self.path(&self.schema, ingest::SCHEMA_FILE, "schema")?;
        let schema = load_schema(&path).with_context(|| format!("reading {}", path.display()))?;
        let path = self.path(&self.prefs, ingest::PREFS_FILE, "prefs")?;
        let users = load_profiles(&path, &schema).with_context(|| format!("reading {}", path.display()))?;
        Ok((schema, users))
    }

    fn load(&self) -> Result<(Vec<UserProfile>, Vec<ObjectRecord>)> {
        let (schema, users) = self.users()?;
        let path = self.path(&self.objects, ingest::OBJECTS_FILE, "objects")?;
        let objects = load_objects(&path, &schema).with_context(|| format!("reading {}", path.display()))?;
        Ok((users, objects))
    }
}

#[derive(Args)]
struct ClusterOpts {
    /// Similarity: intersection, jaccard, weighted-intersection, weighted-jaccard,
    /// approx-jaccard, approx-weighted-jaccard.
    #[arg(long, default_value = "weighted-jaccard")]
    sim: String,
    /// Branch cut: merge while the best similarity is at least h. Accepts
    /// fractions (3/11) and decimals. Intersection kinds sum over attributes,
    /// so their useful h grows with the schema; Jaccard kinds lie in [0, d].
    #[arg(long)]
    h: Option<String>,
    /// Closed-relation size cap for approximate relations (default 7*|common|+7).
    #[arg(long)]
    theta1: Option<usize>,
    /// Frequency floor for approximate relations, in [0, 1].
    #[arg(long)]
    theta2: Option<String>,
    /// Divide each attribute's similarity by its domain size.
    #[arg(long)]
    normalize: bool,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

impl ClusterOpts {
    fn kind(&self) -> Result<SimilarityKind> {
        Ok(self.sim.parse()?)
    }

    fn h(&self) -> Result<Option<Rational>> {
        Ok(self.h.as_deref().map(parse_rational).transpose()?)
    }

    fn approx(&self) -> Result<ApproxParams> {
        let mut p = ApproxParams {
            theta1: self.theta1,
            ..ApproxParams::default()
        };
        if let Some(t) = &self.theta2 {
            p.theta2 = parse_rational(t)?;
        }
        Ok(p)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    opts: ClusterOpts,
    /// Output directory for clusters.csv and dendrogram.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    opts: ClusterOpts,
    /// baseline, ftv, ftv-approx, baseline-sw, ftv-sw, ftv-approx-sw.
    #[arg(long)]
    algo: String,
    /// Sliding-window size; required for the -sw algorithms.
    #[arg(long)]
    window: Option<usize>,
    /// Cluster assignment file (`cluster_id,user_id`) instead of agglomerating.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Check every step of an exact run against the baseline.
    #[arg(long)]
    assert_oracle: bool,
    /// Write frontier and buffer rows around each arrival (windowed runs).
    #[arg(long)]
    trace: bool,
    /// Output directory for the reports.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Report directory of the exact run.
    #[arg(long)]
    exact: PathBuf,
    /// Report directory of the approximate run.
    #[arg(long)]
    approx: PathBuf,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Window size; one dump per step when given.
    #[arg(long)]
    window: Option<usize>,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// RNG seed; the only source of randomness.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    users: usize,
    #[arg(long, default_value_t = 5)]
    archetypes: usize,
    /// Number of objects.
    #[arg(long, default_value_t = 50_000)]
    count: usize,
    #[arg(long, default_value_t = 4)]
    attributes: usize,
    #[arg(long, default_value_t = 8)]
    domain: usize,
    /// Probability that an archetype keeps each pair of its base order.
    #[arg(long, default_value_t = 0.6)]
    density: f64,
    /// Probability that a user drops each Hasse edge of its archetype.
    #[arg(long, default_value_t = 0.005)]
    drop: f64,
    /// Random tuples each user tries to add per attribute.
    #[arg(long, default_value_t = 1)]
    insert: usize,
    /// Output directory; also receives truth.csv with the archetype groups.
    #[arg(long)]
    out: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_cluster(a: &ClusterArgs) -> Result<()> {
    let (_, users) = a.inputs.users()?;
    let kind = a.opts.kind()?;
    let h = a.opts.h()?.ok_or_else(|| Error::Config("--h is required".into()))?;
    let options = AgglomerateOptions {
        approx: a.opts.approx()?,
        normalize: a.opts.normalize,
        exec: a.opts.exec(),
    };
    let (partition, dendrogram) = agglomerate_groups(&users, kind, h, &options)?;
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write(&dir.join("clusters.csv"), &write_clusters(&partition))?;
            write(&dir.join("dendrogram.txt"), &dendrogram.to_text())?;
        }
        None => print!("{}", write_clusters(&partition)),
    }
    eprintln!("{} clusters from {} users at h = {h}", partition.len(), users.len());
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let algorithm: Algorithm = a.algo.parse()?;
    let mut config = RunConfig::new(algorithm);
    config.similarity = a.opts.kind()?;
    config.h = a.opts.h()?;
    config.window = a.window;
    config.normalize = a.opts.normalize;
    config.exec = a.opts.exec();
    config.assert_oracle = a.assert_oracle;
    config.trace = a.trace;
    if algorithm.is_approximate() {
        config.approx = Some(a.opts.approx()?);
    } else if a.opts.theta1.is_some() || a.opts.theta2.is_some() {
        return Err(Error::Config(format!("{algorithm} takes no approximation thresholds")).into());
    }
    config.validate()?;
    let clusters = match &a.clusters {
        Some(p) => Some(load_clusters(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let (users, objects) = a.inputs.load()?;
    let report = run(&config, &users, &objects, clusters)?;

    fs::create_dir_all(&a.out)?;
    write(&a.out.join("steps.csv"), &report.steps_csv())?;
    write(&a.out.join("frontiers.csv"), &report.frontiers_csv())?;
    write(&a.out.join("summary.csv"), &report.summary_csv())?;
    if let Some(acc) = &report.accuracy {
        write(&a.out.join("accuracy.csv"), &accuracy_csv(acc))?;
    }
    if let Some(p) = &report.clusters {
        write(&a.out.join("clusters.csv"), &write_clusters(p))?;
    }
    if let Some(d) = &report.dendrogram {
        write(&a.out.join("dendrogram.txt"), &d.to_text())?;
    }
    if a.trace {
        write(&a.out.join("trace.csv"), &trace_csv(&report.trace))?;
    }
    eprintln!(
        "{algorithm}: {} objects, {} comparisons, {:.1} ms",
        report.universe,
        report.totals.total(),
        report.wall.as_secs_f64() * 1e3
    );
    Ok(())
}

fn read_run(dir: &Path) -> Result<(Frontiers, usize)> {
    let text = |f: &str| {
        let p = dir.join(f);
        fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))
    };
    let frontiers = parse_frontiers_csv(&text("frontiers.csv")?).context("parsing frontiers.csv")?;
    let summary = parse_summary_csv(&text("summary.csv")?).context("parsing summary.csv")?;
    let universe = summary
        .get("universe")
        .and_then(|u| u.parse().ok())
        .ok_or_else(|| Error::Mismatch(format!("{} has no universe in summary.csv", dir.display())))?;
    Ok((frontiers, universe))
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let (exact, eu) = read_run(&a.exact)?;
    let (approx, au) = read_run(&a.approx)?;
    let report = evaluate(&exact, eu, &approx, au)?;
    emit(&a.out, &accuracy_csv(&report))
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let (users, objects) = a.inputs.load()?;
    let dump = oracle_dump(&users, &objects, a.window)?;
    emit(&a.out, &oracle_csv(&dump))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let spec = WorkloadSpec {
        seed: a.seed,
        users: a.users,
        archetypes: a.archetypes,
        objects: a.count,
        attributes: a.attributes,
        domain_size: a.domain,
        density: a.density,
        drop: a.drop,
        insert: a.insert,
        ..WorkloadSpec::default()
    };
    let w = generate_workload(&spec)?;
    ingest::save_dataset(&a.out, &w.dataset())?;
    write(&a.out.join("truth.csv"), &write_clusters(&w.ground_truth()))?;
    eprintln!(
        "{} users, {} objects written to {}",
        w.users.len(),
        w.objects.len(),
        a.out.display()
    );
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 1,
        Some(Error::Invariant(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Cluster(a) => cmd_cluster(a),
        Command::Run(a) => cmd_run(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
