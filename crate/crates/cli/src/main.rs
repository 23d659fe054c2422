//! Command-line front end for the `treespan` library.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use treespan::cut::{cut_once, partition_tree, piece_count_bound};
use treespan::embed::{embed_rooted_tree, verify_embedding, EmbedBudget, NodeOrder};
use treespan::error::Error;
use treespan::expansion::{refute_expander_sampled_with, verify_expander_exact_with, ExpansionOptions};
use treespan::generators::{gnp, random_regular};
use treespan::graph::Graph;
use treespan::harness::{run_experiment, sweep, ExperimentConfig, HostModel, SweepParameter, TreeSpec};
use treespan::pipeline::{check_th1_premises, embed_nearly_spanning, extract_core, Condition3Mode};
use treespan::rng::RngStream;
use treespan::spectral::{check_theorem2_premise, second_eigenvalue, SpectralOptions};
use treespan::splitter::{check_l44_premise, split_degrees};
use treespan::tree::{make_special_tree, random_bounded_degree_tree, RootedTree, TreeKind};

#[derive(Parser)]
#[command(name = "treespan", version, about = "Embed nearly-spanning bounded-degree trees in expanding graphs")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format. Generators default to their text formats.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random host graph.
    GenGraph {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        n: usize,
        /// Edge probability (gnp).
        #[arg(long)]
        p: Option<f64>,
        /// Degree (regular).
        #[arg(long = "D")]
        degree: Option<usize>,
    },
    /// Generate a bounded-degree tree.
    GenTree {
        #[arg(long, value_enum, default_value = "random")]
        kind: Kind,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
    },
    /// Partition a tree into pieces for an ambient graph of order n, or
    /// make a single cut with --k.
    CutTree {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, required_unless_present = "k")]
        eps: Option<f64>,
        #[arg(long, required_unless_present = "k")]
        n: Option<usize>,
        /// Cut off one subtree with at least this many vertices.
        #[arg(long, conflicts_with_all = ["eps", "n"])]
        k: Option<usize>,
    },
    /// Split the vertices into K classes with large degree into each.
    Split {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "K")]
        classes: usize,
        #[arg(long, default_value_t = 1000)]
        max_rounds: usize,
    },
    /// Certify or refute (alpha, c)-expansion.
    CheckExpander {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ExpansionModeArg,
        /// Sampling effort (sampled mode).
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Largest n exact mode will enumerate.
        #[arg(long, default_value_t = treespan::expansion::DEFAULT_EXACT_CAP)]
        exact_cap: usize,
        /// Count N(X) \ X instead of N(X).
        #[arg(long)]
        posa: bool,
    },
    /// Second eigenvalue of a regular graph.
    Spectral {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "dense")]
        method: MethodArg,
        #[arg(long)]
        tolerance: Option<f64>,
        /// With --eps, also report the spectral-gap premise for degree bound d.
        #[arg(long, requires = "eps")]
        d: Option<usize>,
        #[arg(long, requires = "d")]
        eps: Option<f64>,
    },
    /// Embed a rooted tree with its root at a given host vertex.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        root_image: usize,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Remove high- and low-degree vertices to leave a degree-bounded core.
    ExtractCore {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "D")]
        degree: usize,
        #[arg(long)]
        theta: f64,
    },
    /// Run the piece-by-piece nearly-spanning embedding.
    Pipeline {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Also evaluate the deterministic premises (degree bound is the tree's).
        #[arg(long, value_enum)]
        premises: Option<PremiseModeArg>,
    },
    /// Run a seeded batch of trials.
    Experiment(ExperimentArgs),
    /// Run an experiment per grid value of c or D.
    Sweep {
        #[command(flatten)]
        base: ExperimentArgs,
        #[arg(long, value_enum)]
        param: ParamArg,
        /// Comma-separated grid, e.g. 5,10,20,40.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Gnp,
    Regular,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Path,
    Spider,
    CompleteDAry,
    Caterpillar,
}

impl Kind {
    fn special(self) -> Option<TreeKind> {
        match self {
            Kind::Random => None,
            Kind::Path => Some(TreeKind::Path),
            Kind::Spider => Some(TreeKind::Spider),
            Kind::CompleteDAry => Some(TreeKind::CompleteDAry),
            Kind::Caterpillar => Some(TreeKind::Caterpillar),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpansionModeArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dense,
    Iterative,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Bfs,
    Dfs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PremiseModeArg {
    Exact,
    Sampled,
    Assume,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamArg {
    C,
    #[value(name = "D")]
    D,
}

#[derive(Args)]
struct BudgetArgs {
    /// Backtrack limit; 0 means unbounded.
    #[arg(long, default_value_t = treespan::embed::DEFAULT_MAX_BACKTRACKS)]
    max_backtracks: u64,
    #[arg(long, value_enum, default_value = "bfs")]
    order: OrderArg,
}

impl BudgetArgs {
    fn budget(&self) -> EmbedBudget {
        EmbedBudget {
            max_backtracks: (self.max_backtracks > 0).then_some(self.max_backtracks),
            node_order: match self.order {
                OrderArg::Bfs => NodeOrder::Bfs,
                OrderArg::Dfs => NodeOrder::Dfs,
            },
            ..EmbedBudget::default()
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment config; other flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gnp")]
    model: Model,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Expected degree of G(n, c/n).
    #[arg(long, default_value_t = 30.0)]
    c: f64,
    /// Degree of the random regular host.
    #[arg(long = "D", default_value_t = 30)]
    degree: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0.4)]
    eps: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Defaults to floor((1 - eps) n).
    #[arg(long)]
    tree_size: Option<usize>,
    #[arg(long, value_enum, default_value = "random")]
    tree_kind: Kind,
}

impl ExperimentArgs {
    fn config(&self, seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_str::<ExperimentConfig>(&read(path)?)
                .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?,
            None => {
                let model = match self.model {
                    Model::Gnp => HostModel::Gnp { n: self.n, c: self.c },
                    Model::Regular => HostModel::RandomRegular { n: self.n, degree: self.degree },
                };
                let mut cfg = ExperimentConfig::new(model, self.d, self.eps, self.trials, 0);
                cfg.tree_size = self.tree_size;
                cfg.tree = match self.tree_kind.special() {
                    Some(kind) => TreeSpec::Special { kind },
                    None => TreeSpec::Random,
                };
                cfg
            }
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Exit status and message for a failed command.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    const VALIDATION: u8 = 2;
    const SEARCH: u8 = 3;

    fn validation(message: impl Into<String>) -> Self {
        Failure { code: Self::VALIDATION, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Precondition(_) | Error::Refused(_) => Failure::VALIDATION,
            Error::SearchFailed { .. } | Error::SplitExhausted { .. } | Error::Infeasible(_) => Failure::SEARCH,
            Error::InvariantViolation(_) | Error::Convergence { .. } => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    Graph::parse(&read(path)?).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

fn load_tree(path: &Path) -> Result<RootedTree, Failure> {
    RootedTree::parse(&read(path)?).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

/// A command's result: what to print, and whether it counts as a search failure.
struct Report {
    body: String,
    search_failed: bool,
}

impl Report {
    fn ok(body: String) -> Self {
        Report { body, search_failed: false }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), scalar(other))),
    }
}

/// One CSV row per array element (or one row for an object). Nested objects
/// become dotted columns; arrays are kept as JSON text.
fn json_to_csv(v: &Value) -> Result<String, Failure> {
    let rows: Vec<&Value> = match v {
        Value::Array(items) => items.iter().collect(),
        other => vec![other],
    };
    let flat: Vec<Vec<(String, String)>> = rows
        .iter()
        .map(|r| {
            let mut cells = Vec::new();
            flatten("", r, &mut cells);
            if cells.len() == 1 && cells[0].0.is_empty() {
                cells[0].0 = "value".into();
            }
            cells
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &flat {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure { code: 1, message: format!("csv: {e}") };
    w.write_record(&header).map_err(err)?;
    for row in &flat {
        let record = header.iter().map(|h| row.iter().find(|(k, _)| k == h).map_or("", |(_, v)| v.as_str()));
        w.write_record(record).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure { code: 1, message: format!("csv: {e}") })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Serialize `value` as pretty JSON, or as CSV of `csv_view(value)`.
fn render<T: Serialize>(value: &T, format: Format, csv_view: impl Fn(&Value) -> &Value) -> Result<String, Failure> {
    let v = serde_json::to_value(value).map_err(|e| Failure { code: 1, message: e.to_string() })?;
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&v).expect("json value serializes") + "\n"),
        Format::Csv => json_to_csv(csv_view(&v)),
    }
}

fn whole(v: &Value) -> &Value {
    v
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let seed = cli.seed.unwrap_or(0);
    let format = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::GenGraph { model, n, p, degree } => {
            let stream = RngStream::new(seed, 0);
            let g = match model {
                Model::Gnp => gnp(*n, p.ok_or_else(|| Failure::validation("gnp needs --p"))?, stream)?,
                Model::Regular => random_regular(*n, degree.ok_or_else(|| Failure::validation("regular needs --D"))?, stream)?,
            };
            let edges: Vec<(usize, usize)> = g.edges().collect();
            Ok(Report::ok(match cli.format {
                None => g.to_text(),
                Some(f) => render(&json!({ "n": n, "m": edges.len(), "edges": edges }), f, |v| &v["edges"])?,
            }))
        }
        Command::GenTree { kind, k, d } => {
            let t = match kind.special() {
                None => random_bounded_degree_tree(*k, *d, seed)?,
                Some(kind) => make_special_tree(kind, *k, *d)?,
            };
            Ok(Report::ok(match cli.format {
                None => t.to_text(),
                Some(f) => {
                    let rows: Vec<Value> = (0..t.vertex_count()).map(|v| json!({ "v": v, "parent": t.parent(v) })).collect();
                    render(&json!({ "k": k, "root": t.root(), "parents": rows }), f, |v| &v["parents"])?
                }
            }))
        }
        Command::CutTree { tree, eps, n, k } => {
            let t = load_tree(tree)?;
            if let Some(k) = k {
                let cut = cut_once(&t, *k)?;
                return Ok(Report::ok(render(&cut, format, whole)?));
            }
            let (eps, n) = (eps.expect("clap requires eps"), n.expect("clap requires n"));
            let p = partition_tree(&t, eps, n)?;
            let pieces: Vec<Value> = p
                .pieces
                .iter()
                .enumerate()
                .map(|(i, piece)| {
                    json!({
                        "index": i + 1,
                        "size": piece.len(),
                        "root": piece.root,
                        "connect_edge": piece.connect_edge,
                        "vertices": piece.vertices,
                    })
                })
                .collect();
            let body = json!({
                "s": p.piece_count(),
                "s_bound": piece_count_bound(t.degree_bound(), eps),
                "epsilon": p.epsilon,
                "n": n,
                "d": t.degree_bound(),
                "pieces": pieces,
            });
            Ok(Report::ok(render(&body, format, |v| &v["pieces"])?))
        }
        Command::Split { graph, classes, max_rounds } => {
            let g = load_graph(graph)?;
            let (min_degree, max_degree) = g.degree_extrema()?;
            let premise = check_l44_premise(*classes, min_degree, max_degree)?;
            match split_degrees(&g, *classes, seed, *max_rounds) {
                Ok(s) => {
                    let body = json!({ "success": true, "split": s, "premise": premise });
                    Ok(Report::ok(render(&body, format, |v| &v["split"])?))
                }
                Err(Error::SplitExhausted { rounds, vertex, class, count, needed, .. }) => {
                    let body = json!({
                        "success": false,
                        "rounds": rounds,
                        "worst": { "vertex": vertex, "class": class, "count": count, "needed": needed },
                        "premise": premise,
                    });
                    Ok(Report { body: render(&body, format, whole)?, search_failed: true })
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::CheckExpander { graph, alpha, c, mode, trials, exact_cap, posa } => {
            let g = load_graph(graph)?;
            let opts = ExpansionOptions { exact_cap: *exact_cap, posa: *posa };
            let verdict = match mode {
                ExpansionModeArg::Exact => verify_expander_exact_with(&g, *alpha, *c, &opts)?,
                ExpansionModeArg::Sampled => refute_expander_sampled_with(&g, *alpha, *c, *trials, seed, &opts)?,
            };
            Ok(Report::ok(render(&verdict, format, whole)?))
        }
        Command::Spectral { graph, method, tolerance, d, eps } => {
            let g = load_graph(graph)?;
            let mut opts = match method {
                MethodArg::Dense => SpectralOptions::dense(),
                MethodArg::Iterative => SpectralOptions::iterative(),
            };
            opts.tolerance = *tolerance;
            opts.seed = seed;
            let profile = second_eigenvalue(&g, &opts)?;
            let body = match (d, eps) {
                (Some(d), Some(eps)) => {
                    let premise = check_theorem2_premise(&profile, *d, *eps)?;
                    let mut v = serde_json::to_value(&profile).expect("profile serializes");
                    v["premise"] = serde_json::to_value(premise).expect("premise serializes");
                    v
                }
                _ => serde_json::to_value(&profile).expect("profile serializes"),
            };
            Ok(Report::ok(render(&body, format, whole)?))
        }
        Command::Embed { graph, tree, root_image, budget } => {
            let g = load_graph(graph)?;
            let t = load_tree(tree)?;
            match embed_rooted_tree(&g, &t, *root_image, &budget.budget()) {
                Ok(e) => {
                    let check = verify_embedding(&g, &t, &e);
                    let body = json!({ "success": true, "verified": check.valid, "map": e.map });
                    Ok(Report::ok(render(&body, format, whole)?))
                }
                Err(Error::SearchFailed { deepest, guest_size, backtracks, exhaustive }) => {
                    let body = json!({
                        "success": false,
                        "deepest_partial": deepest,
                        "guest_size": guest_size,
                        "backtracks": backtracks,
                        "exhaustive": exhaustive,
                    });
                    Ok(Report { body: render(&body, format, whole)?, search_failed: true })
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::ExtractCore { graph, degree, theta } => {
            let g = load_graph(graph)?;
            let r = extract_core(&g, *degree, *theta)?;
            let mut v = serde_json::to_value(&r).expect("report serializes");
            v["core_vertices"] = json!(r.core.to_host);
            Ok(Report::ok(render(&v, format, whole)?))
        }
        Command::Pipeline { graph, tree, eps, budget, premises } => {
            let g = load_graph(graph)?;
            let t = load_tree(tree)?;
            let premise_report = premises
                .map(|m| {
                    let mode = match m {
                        PremiseModeArg::Exact => Condition3Mode::Exact,
                        PremiseModeArg::Sampled => Condition3Mode::Sampled { trials: 300, seed },
                        PremiseModeArg::Assume => Condition3Mode::Assume,
                    };
                    check_th1_premises(&g, t.degree_bound(), *eps, mode)
                })
                .transpose()?;
            let run = embed_nearly_spanning(&g, &t, *eps, seed, &budget.budget())?;
            let body = json!({
                "outcome": run.trace.outcome,
                "trace": run.trace,
                "map": run.embedding.as_ref().map(|e| &e.map),
                "premises": premise_report,
            });
            let failed = !run.succeeded();
            Ok(Report { body: render(&body, format, |v| &v["trace"]["steps"])?, search_failed: failed })
        }
        Command::Experiment(args) => {
            let cfg = args.config(cli.seed)?;
            let report = run_experiment(&cfg)?;
            Ok(Report::ok(render(&report, format, |v| &v["trials"])?))
        }
        Command::Sweep { base, param, grid } => {
            let cfg = base.config(cli.seed)?;
            let parameter = match param {
                ParamArg::C => SweepParameter::C,
                ParamArg::D => SweepParameter::D,
            };
            let table = sweep(&cfg, parameter, grid)?;
            Ok(Report::ok(match format {
                Format::Json => render(&table, format, whole)?,
                Format::Csv => table.to_csv()?,
            }))
        }
    }
}

fn experiment_output(cli: &Cli) -> Option<PathBuf> {
    let args = match &cli.command {
        Command::Experiment(a) => a,
        Command::Sweep { base, .. } => base,
        _ => return None,
    };
    let path = args.config.as_ref()?;
    let cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    cfg.output.map(PathBuf::from)
}

fn emit(cli: &Cli, body: &str) -> Result<(), Failure> {
    match cli.output.clone().or_else(|| experiment_output(cli)) {
        Some(path) => fs::write(&path, body).map_err(|e| Failure { code: 1, message: format!("{}: {e}", path.display()) }),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure { code: 1, message: e.to_string() }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|report| {
        emit(&cli, &report.body)?;
        Ok(report.search_failed)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(Failure::SEARCH),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
