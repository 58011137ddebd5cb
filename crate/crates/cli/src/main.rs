use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use strongtie::eval::{self, Bucketing, Method, SplitSpec, SweepSpec};
use strongtie::learner::{self, Schema, TrainParams};
use strongtie::motif::EgoNetwork;
use strongtie::planted::{self, ModelKind, PlantedConfig};
use strongtie::sketch::{self, SketchParams};
use strongtie::{fixture, LayeredGraph, StrongPolicy};

#[derive(Parser)]
#[command(name = "strongtie", version, about = "Strong-tie detection from cycle motifs")]
struct Cli {
    /// Directory for output artifacts.
    #[arg(long, global = true, env = "STRONGTIE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (0 = all cores). Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted-community graph.
    Generate(GenerateArgs),
    /// Hide-and-predict p@1 / p@5 evaluation on a graph.
    Evaluate(EvaluateArgs),
    /// Edge-classifier sweep over q on planted graphs.
    Sweep(SweepArgs),
    /// All candidate scores for one focal node.
    Score(ScoreArgs),
    /// Check the toy graph's scores against reference values and the oracle.
    Fixture(FixtureArgs),
    /// Sketch-based square-outside counts for one focal node.
    HllSquares(HllArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Single,
    Double,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Single => ModelKind::Single,
            ModelArg::Double => ModelKind::Double,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "single")]
    model: ModelArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 30)]
    c: usize,
    #[arg(long, default_value_t = 0.85)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Cross-community edge probability [default: ln n / n].
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output name; writes NAME.tsv, NAME.communities.tsv, NAME.meta.json.
    #[arg(long, default_value = "planted")]
    out: String,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list: `u<TAB>v<TAB>label`, label 1 = strong.
    #[arg(long)]
    graph: PathBuf,
    /// Optional separate strong-tie edge list.
    #[arg(long)]
    strong: Option<PathBuf>,
    /// Reject strong edges missing from the weak graph instead of dropping them.
    #[arg(long)]
    strict: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<LayeredGraph> {
        let policy = if self.strict { StrongPolicy::Strict } else { StrongPolicy::Drop };
        let loaded = match &self.strong {
            Some(s) => LayeredGraph::load_pair(&self.graph, s, policy)?,
            None => LayeredGraph::load(&self.graph, policy)?,
        };
        let st = loaded.stats;
        if st.dropped_strong + st.dropped_self_loops + st.merged_duplicates > 0 {
            warn!(
                "load: dropped {} strong edges missing from the weak graph, {} self-loops; merged {} duplicates",
                st.dropped_strong, st.dropped_self_loops, st.merged_duplicates
            );
        }
        Ok(loaded.graph)
    }
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
}

impl TrainArgs {
    fn params(&self) -> TrainParams {
        TrainParams {
            learning_rate: self.lr,
            epochs: self.epochs,
            l2: self.l2,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    test_fraction: f64,
    #[arg(long, default_value_t = 10)]
    d_min: usize,
    #[arg(long, default_value_t = 75)]
    d_max: usize,
    /// Degree-bucket width.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    bucket_width: u64,
    /// Add the ground-truth oracle as a sanity method.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    train: TrainArgs,
    /// Output name; writes NAME.p1.csv, NAME.p5.csv, NAME.{basic,enhanced}.json, NAME.meta.json.
    #[arg(long, default_value = "eval")]
    out: String,
}

#[derive(Args)]
struct SweepArgs {
    /// n=4000, c=30, p=0.85, r=ln n/n, q = 0.1..2.5 step 0.1.
    #[arg(long, conflicts_with = "smoke")]
    paper_defaults: bool,
    /// Reduced grid: n=1000, q = 1.0..1.8 step 0.2, 5 reps.
    #[arg(long)]
    smoke: bool,
    #[arg(long, value_enum, default_value = "single")]
    model: ModelArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Comma-separated q values.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip (q, rep) pairs already recorded in NAME.runs.csv.
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    train: TrainArgs,
    /// Output name; writes NAME.csv, NAME.runs.csv, NAME.meta.json.
    #[arg(long, default_value = "sweep")]
    out: String,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// External id of the focal node.
    #[arg(long)]
    focal: u64,
    /// Add a probability column from a saved model.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV name (NAME.csv); prints to stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct FixtureArgs {
    /// Check this edge list (fixture numbering) instead of the built-in graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Write the built-in fixture edge list to this path and exit.
    #[arg(long, conflicts_with = "graph")]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct HllArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    focal: u64,
    #[arg(long, default_value_t = sketch::DEFAULT_PRECISION,
          value_parser = clap::value_parser!(u8).range(4..=18))]
    precision: u8,
    #[arg(long, default_value_t = 0)]
    hash_seed: u64,
    /// Add a column of exact weak square-outside counts.
    #[arg(long)]
    exact_check: bool,
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let out = |name: &str, suffix: &str| cli.out_dir.join(format!("{name}{suffix}"));
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, &out),
        Command::Evaluate(a) => cmd_evaluate(a, &out),
        Command::Sweep(a) => cmd_sweep(a, &out),
        Command::Score(a) => cmd_score(a, &out),
        Command::Fixture(a) => cmd_fixture(a),
        Command::HllSquares(a) => cmd_hll(a, &out),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_meta(path: &Path, command: &str, config: serde_json::Value) -> Result<()> {
    let meta = json!({
        "tool": "strongtie",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    });
    write_file(path, &(serde_json::to_string_pretty(&meta)? + "\n"))
}

fn emit(out: Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(&p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

type OutPath<'a> = &'a dyn Fn(&str, &str) -> PathBuf;

fn cmd_generate(a: &GenerateArgs, out: OutPath) -> Result<ExitCode> {
    let cfg = PlantedConfig {
        n: a.n,
        c: a.c,
        p: a.p,
        q: a.q,
        r: a.r.unwrap_or_else(|| planted::default_noise(a.n)),
        model: a.model.into(),
        seed: a.seed,
    };
    let pg = planted::generate(&cfg)?;
    let graph_path = out(&a.out, ".tsv");
    let mut w = BufWriter::new(File::create(&graph_path).with_context(|| format!("creating {}", graph_path.display()))?);
    pg.graph.write_edge_list(&mut w)?;
    w.flush()?;
    let mem_path = out(&a.out, ".communities.tsv");
    let mut w = BufWriter::new(File::create(&mem_path)?);
    pg.write_memberships(&mut w)?;
    w.flush()?;

    // isolated nodes vanish from an edge list, so compare edges only
    let reloaded = LayeredGraph::load(&graph_path, StrongPolicy::Strict)?.graph;
    if let Err(e) = reloaded.check_invariants() {
        bail!("reloaded graph is inconsistent: {e}");
    }
    if reloaded.weak_edge_count() != pg.graph.weak_edge_count()
        || reloaded.strong_edge_count() != pg.graph.strong_edge_count()
    {
        bail!("reloaded graph differs from the generated one");
    }
    write_meta(&out(&a.out, ".meta.json"), "generate", json!({ "planted": cfg }))?;
    println!(
        "nodes\t{}\nweak_edges\t{}\nstrong_edges\t{}",
        pg.graph.node_count(),
        pg.graph.weak_edge_count(),
        pg.graph.strong_edge_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(a: &EvaluateArgs, out: OutPath) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let spec = SplitSpec {
        test_fraction: a.test_fraction,
        d_min: a.d_min,
        d_max: a.d_max,
        seed: a.seed,
    };
    let split = eval::make_split(&g, &spec)?;
    info!(
        "eligible {}, test {}, hidden edges {}",
        split.eligible_count,
        split.test_nodes.len(),
        split.hidden_edges
    );
    let (basic, enhanced) = eval::train_ranking_models(&split, a.train.params())?;
    learner::save_model(&basic, out(&a.out, ".basic.json"))?;
    learner::save_model(&enhanced, out(&a.out, ".enhanced.json"))?;
    let mut methods = Method::baselines(a.seed);
    methods.extend(eval::model_methods(basic, enhanced));
    if a.oracle {
        methods.push(Method::Oracle);
    }
    let buckets = Bucketing {
        lo: a.d_min,
        hi: a.d_max,
        width: a.bucket_width as usize,
    };
    let p1 = eval::evaluate_p_at_1(&split, &methods, &buckets)?;
    let p5 = eval::evaluate_p_at_5(&split, &methods, &buckets)?;
    write_file(&out(&a.out, ".p1.csv"), &p1.to_csv())?;
    write_file(&out(&a.out, ".p5.csv"), &p5.to_csv())?;
    write_meta(
        &out(&a.out, ".meta.json"),
        "evaluate",
        json!({
            "graph": a.graph.graph,
            "strong": a.graph.strong,
            "split": spec,
            "bucketing": buckets,
            "train": a.train,
            "oracle": a.oracle,
            "eligible": split.eligible_count,
            "test_nodes": split.test_nodes.len(),
            "hidden_edges": split.hidden_edges,
            "p1_nodes": p1.evaluated,
            "p5_nodes": p5.evaluated,
        }),
    )?;
    println!("method\tp@1\tp@5");
    for (s1, s5) in p1.overall.iter().zip(&p5.overall) {
        println!("{}\t{:.4}\t{:.4}", s1.method, s1.mean, s5.mean);
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_spec(a: &SweepArgs) -> SweepSpec {
    // --paper-defaults pins the same values the bare command starts from
    let (n, q_default, reps_default) = if a.smoke {
        // at n=1000 squares overtake triangles near q = 0.8, so the reduced grid
        // starts just past that crossover
        (1000, vec![1.0, 1.2, 1.4, 1.6, 1.8], 5)
    } else {
        (4000, eval::paper_q_grid(), 20)
    };
    let n = a.n.unwrap_or(n);
    let base = PlantedConfig {
        n,
        c: a.c.unwrap_or(30),
        p: a.p.unwrap_or(0.85),
        q: 1.0,
        r: a.r.unwrap_or_else(|| planted::default_noise(n)),
        model: a.model.into(),
        seed: a.seed,
    };
    SweepSpec {
        base,
        q_values: a.q.clone().unwrap_or(q_default),
        reps: a.reps.map_or(reps_default, |r| r as usize),
        schemas: eval::SWEEP_SCHEMAS.to_vec(),
        params: a.train.params(),
    }
}

fn cmd_sweep(a: &SweepArgs, out: OutPath) -> Result<ExitCode> {
    let spec = sweep_spec(a);
    spec.validate()?;
    let runs_path = out(&a.out, ".runs.csv");
    let meta_path = out(&a.out, ".meta.json");
    let config = json!({ "sweep": spec });

    let mut records = Vec::new();
    if a.resume && runs_path.exists() {
        if meta_path.exists() {
            let old: serde_json::Value = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
            if old.get("config") != Some(&config) {
                bail!("{} was written with a different configuration; rerun without --resume", meta_path.display());
            }
        }
        let file = File::open(&runs_path)?;
        records = eval::read_runs(BufReader::new(file))?;
        info!("resuming with {} recorded runs", records.len());
    } else {
        write_file(&runs_path, &format!("{}\n", eval::RUNS_HEADER))?;
    }
    write_meta(&meta_path, "sweep", config)?;

    // one q value at a time so an interrupted sweep keeps finished points
    for &q in &spec.q_values {
        let done = eval::completed_points(&spec, &records);
        let one = SweepSpec {
            q_values: vec![q],
            ..spec.clone()
        };
        let fresh = eval::run_sweep(&one, &done)?;
        if fresh.is_empty() {
            continue;
        }
        let mut w = OpenOptions::new().append(true).open(&runs_path)?;
        eval::write_runs(&mut w, &fresh)?;
        for r in fresh.iter().filter(|r| r.scores.is_none()) {
            warn!("q={} rep={} {}: {}", r.q, r.rep, r.schema.name(), r.note);
        }
        records.extend(fresh);
    }

    // canonical order for the run log, independent of resumption history
    let grid_pos = |q: f64| spec.q_values.iter().position(|x| x.to_bits() == q.to_bits());
    let schema_pos = |s: Schema| spec.schemas.iter().position(|x| *x == s);
    let mut seen = HashSet::new();
    let mut canonical: Vec<_> = records
        .into_iter()
        .filter(|r| grid_pos(r.q).is_some() && r.rep < spec.reps && schema_pos(r.schema).is_some())
        .filter(|r| seen.insert((r.q.to_bits(), r.rep, r.schema)))
        .collect();
    canonical.sort_by_key(|r| (grid_pos(r.q), r.rep, schema_pos(r.schema)));
    let mut buf = format!("{}\n", eval::RUNS_HEADER).into_bytes();
    eval::write_runs(&mut buf, &canonical)?;
    fs::write(&runs_path, buf)?;

    let rows = eval::aggregate(&spec, &canonical);
    write_file(&out(&a.out, ".csv"), &eval::sweep_csv(&rows))?;
    println!("q\ttriangles\tsquares\tcombined\t(mean F1)");
    for &q in &spec.q_values {
        let f = |s| {
            eval::lookup(&rows, q, s, eval::Metric::F1)
                .and_then(|r| r.mean)
                .map_or_else(|| "-".to_string(), |m| format!("{m:.4}"))
        };
        println!("{q}\t{}\t{}\t{}", f(Schema::TrianglesOnly), f(Schema::SquaresOnly), f(Schema::Combined));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_score(a: &ScoreArgs, out: OutPath) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let focal = g.lookup_external(a.focal)?;
    let model = a.model.as_ref().map(learner::load_model).transpose()?;
    let ego = EgoNetwork::new(&g, focal)?;
    let mut text = String::from(
        "candidate,degree,embeddedness,adamic_adar,h1,triangle,square_in,square_out,pent_in,pent_out",
    );
    text.push_str(if model.is_some() { ",probability\n" } else { "\n" });
    for s in ego.all_scores() {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}",
            g.external_id(s.candidate),
            s.degree,
            s.embeddedness,
            s.adamic_adar,
            s.h1,
            s.triangle,
            s.square_in,
            s.square_out,
            s.pent_in,
            s.pent_out
        ));
        if let Some(m) = &model {
            let p = m.predict_proba(&learner::featurize(&s, m.schema)?)?;
            text.push_str(&format!(",{p}"));
        }
        text.push('\n');
    }
    let path = a.out.as_ref().map(|n| out(n, ".csv"));
    if let Some(name) = &a.out {
        write_meta(
            &out(name, ".meta.json"),
            "score",
            json!({ "graph": a.graph.graph, "strong": a.graph.strong, "focal": a.focal, "model": a.model, "seed": a.seed }),
        )?;
    }
    emit(path, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixture(a: &FixtureArgs) -> Result<ExitCode> {
    if let Some(path) = &a.emit {
        write_file(path, &fixture::edge_list_text())?;
        return Ok(ExitCode::SUCCESS);
    }
    let g = match &a.graph {
        Some(p) => LayeredGraph::load(p, StrongPolicy::Strict)?.graph,
        None => fixture::graph(),
    };
    let diff = fixture::check(&g)?;
    if diff.is_empty() {
        println!("fixture: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("fixture: FAIL ({} mismatches)", diff.len());
        for m in &diff {
            println!("  {m}");
        }
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_hll(a: &HllArgs, out: OutPath) -> Result<ExitCode> {
    let g = a.graph.load()?;
    let focal = g.lookup_external(a.focal)?;
    let params = SketchParams {
        precision: a.precision,
        seed: a.hash_seed,
    };
    let approx = sketch::approx_square_count(&g, focal, params)?;
    let exact = if a.exact_check {
        Some(sketch::weak_square_outside_counts(&g, focal)?)
    } else {
        None
    };
    let mut text = String::from(if exact.is_some() { "candidate,approx,exact\n" } else { "candidate,approx\n" });
    for (i, (b, est)) in approx.iter().enumerate() {
        text.push_str(&format!("{},{}", g.external_id(*b), est));
        if let Some(ex) = &exact {
            text.push_str(&format!(",{}", ex[i].1));
        }
        text.push('\n');
    }
    let path = a.out.as_ref().map(|n| out(n, ".csv"));
    if let Some(name) = &a.out {
        write_meta(
            &out(name, ".meta.json"),
            "hll-squares",
            json!({
                "graph": a.graph.graph,
                "strong": a.graph.strong,
                "focal": a.focal,
                "precision": a.precision,
                "hash_seed": a.hash_seed,
                "exact_check": a.exact_check,
            }),
        )?;
    }
    emit(path, &text)?;
    Ok(ExitCode::SUCCESS)
}
