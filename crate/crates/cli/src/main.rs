//! Command-line front end: every computation in the library behind one
//! binary, with reproducible seeds and machine-readable output.

mod render;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use render::{apply_precision, closed_form, pretty_lines, Precision};
use tensorbound_core::entropy::IpfOptions;
use tensorbound_core::error::Error;
use tensorbound_core::exponent::{
    check_cw_border_certificate, check_cw_border_with_linear_coeff, complete_graph_table,
    flattening_lower_bounds, table_to_csv, table_to_json, Constants, TableOptions,
};
use tensorbound_core::lab::{
    average_free_set, greedy_diagonal, power_support, run_cw_experiment, AvgFreeMode,
    ExperimentConfig,
};
use tensorbound_core::subrank::{
    dicke_symmetry_generators, main_lower_bound, LabelingChoice, MainBoundOptions, PStrategy,
    RelationEnumeration, SymmetryGroup,
};
use tensorbound_core::tensor::{dicke_tensor, graph_tensor, unit_tensor, Graph, SparseTensor};
use tensorbound_core::tightness::{
    check_tight, dicke_standard_labeling, find_labeling, LabelingSearch, TightLabeling,
};
use tensorbound_core::DEFAULT_SEED;

#[derive(Parser)]
#[command(
    name = "tensorbound",
    version,
    about = "Certified bounds on asymptotic tensor-rank quantities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    globals: Globals,
}

#[derive(Args, Clone)]
struct Globals {
    /// RNG seed; identical seeds give byte-identical output
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Termination tolerance for iterative fitting
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Worker threads for parallel sections (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Upper bound on the matrix multiplication exponent
    #[arg(long = "omega-mm", global = true, default_value_t = 2.3728639)]
    omega_mm: f64,
    /// Lower bound on the dual matrix multiplication exponent
    #[arg(long = "alpha-dual", global = true, default_value_t = 0.3029805)]
    alpha_dual: f64,
    /// Enumeration budget for relations
    #[arg(long, global = true, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Six)]
    precision: PrecisionArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Pretty,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    Six,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Certified lower bounds on the monomial subexponent
    Bound {
        #[command(subcommand)]
        target: BoundTarget,
    },
    /// Tightness checks and labeling synthesis
    Tight {
        #[command(subcommand)]
        action: TightAction,
    },
    /// Exponent summary tables
    Table {
        #[command(subcommand)]
        which: TableKind,
    },
    /// Proof certificate checks
    Certify {
        #[command(subcommand)]
        which: CertifyKind,
    },
    /// Restriction pipeline experiments
    Lab {
        #[command(subcommand)]
        which: LabKind,
    },
    /// Exact min/max cuts and the exponent bounds they induce
    Cuts(GraphArgs),
}

#[derive(Subcommand)]
enum BoundTarget {
    /// Dicke tensor given by its partition
    Dicke(BoundDickeArgs),
    /// Graph tensor
    Graph(BoundGraphArgs),
    /// Tensor read from a JSON file
    File(BoundFileArgs),
}

#[derive(Args)]
struct BoundCommonArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    strategy: StrategyArg,
    #[arg(long = "enum", value_enum, default_value_t = EnumArg::Closed)]
    enumeration: EnumArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Uniform,
    Ascent,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnumArg {
    Closed,
    Exhaustive,
}

#[derive(Args)]
struct BoundDickeArgs {
    /// Partition, comma separated (e.g. 2,2)
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<u64>,
    /// Use the support's symmetries to cut the relation enumeration
    #[arg(long, value_enum, default_value_t = SymmetryArg::Auto)]
    symmetry: SymmetryArg,
    #[command(flatten)]
    common: BoundCommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SymmetryArg {
    Auto,
    None,
}

#[derive(Args)]
struct BoundGraphArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Edge alphabet size
    #[arg(long, default_value_t = 2)]
    n: u64,
    #[command(flatten)]
    common: BoundCommonArgs,
}

#[derive(Args)]
struct BoundFileArgs {
    /// Tensor JSON file
    #[arg(long)]
    tensor: PathBuf,
    /// Labeling JSON file (synthesized when absent)
    #[arg(long)]
    labeling: Option<PathBuf>,
    #[command(flatten)]
    common: BoundCommonArgs,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Graph JSON file `{"vertices": n, "edges": [[u,v],...]}`
    #[arg(long)]
    file: Option<PathBuf>,
    /// Complete graph on k vertices
    #[arg(long)]
    complete: Option<usize>,
    /// Cycle graph on k vertices
    #[arg(long)]
    cycle: Option<usize>,
    /// Path graph on k vertices
    #[arg(long)]
    path: Option<usize>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    source: GraphSource,
}

#[derive(Subcommand)]
enum TightAction {
    /// Verify a labeling against a tensor support
    Check {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        labeling: PathBuf,
    },
    /// Synthesize an injective sum-zero labeling
    Find {
        #[arg(long)]
        tensor: PathBuf,
    },
}

#[derive(Subcommand)]
enum TableKind {
    /// Complete-graph exponent table, k = 3..=kmax
    Complete {
        #[arg(long, default_value_t = 10)]
        kmax: usize,
        /// Monomial subexponent fed to the CW bound
        #[arg(long, default_value_t = 1.0)]
        qm: f64,
        #[arg(long = "q-lo", default_value_t = 2)]
        q_lo: u64,
        #[arg(long = "q-hi", default_value_t = 10_000)]
        q_hi: u64,
    },
}

#[derive(Subcommand)]
enum CertifyKind {
    /// Border-rank certificate of the CW starting tensor
    CwBorder {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        k: usize,
        /// Deliberately corrupt the linear coefficient (must fail)
        #[arg(long, default_value_t = false)]
        corrupt: bool,
    },
}

#[derive(Subcommand)]
enum LabKind {
    /// Average-free set construction
    Avgfree {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = AvgFreeModeArg::Exhaustive)]
        mode: AvgFreeModeArg,
    },
    /// Full restriction pipeline on a tensor power
    Experiment {
        #[command(flatten)]
        source: TensorSource,
        #[arg(long)]
        power: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long = "no-restrict", default_value_t = false)]
        no_restrict: bool,
        #[arg(long = "no-hash", default_value_t = false)]
        no_hash: bool,
        #[arg(long = "modulus-floor", default_value_t = 11)]
        modulus_floor: u64,
        #[arg(long = "no-target", default_value_t = false)]
        no_target: bool,
    },
    /// Greedy collision-free diagonal of a tensor power
    Diagonal {
        #[command(flatten)]
        source: TensorSource,
        #[arg(long, default_value_t = 1)]
        power: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AvgFreeModeArg {
    Exhaustive,
    Greedy,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TensorSource {
    /// Dicke partition, comma separated
    #[arg(long, value_delimiter = ',')]
    dicke: Option<Vec<u64>>,
    /// Unit tensor "r,k"
    #[arg(long, value_delimiter = ',')]
    unit: Option<Vec<u64>>,
    /// Cycle graph tensor on k vertices (alphabet 2)
    #[arg(long)]
    cycle: Option<usize>,
    /// Tensor JSON file
    #[arg(long)]
    tensor: Option<PathBuf>,
}

impl TensorSource {
    fn load(&self) -> Result<SparseTensor, Error> {
        if let Some(lambda) = &self.dicke {
            return dicke_tensor(lambda);
        }
        if let Some(unit) = &self.unit {
            if unit.len() != 2 {
                return Err(Error::InvalidArgument("--unit expects r,k".into()));
            }
            return unit_tensor(unit[0], unit[1] as usize);
        }
        if let Some(k) = self.cycle {
            return graph_tensor(&Graph::cycle(k)?, 2);
        }
        if let Some(path) = &self.tensor {
            return read_tensor(path);
        }
        Err(Error::InvalidArgument("no tensor source given".into()))
    }
}

impl GraphArgs {
    fn load(&self) -> Result<Graph, Error> {
        if let Some(path) = &self.source.file {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
            return Graph::from_json(&value);
        }
        if let Some(k) = self.source.complete {
            return Graph::complete(k);
        }
        if let Some(k) = self.source.cycle {
            return Graph::cycle(k);
        }
        if let Some(k) = self.source.path {
            return Graph::path(k);
        }
        Err(Error::InvalidArgument("no graph source given".into()))
    }
}

fn read_tensor(path: &PathBuf) -> Result<SparseTensor, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    SparseTensor::from_json(&value)
}

fn read_labeling(path: &PathBuf) -> Result<TightLabeling, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    TightLabeling::from_json(&value)
}

/// What a handler produced: a JSON document plus the process exit status.
struct Outcome {
    json: Value,
    /// CSV text when the format supports it.
    csv: Option<String>,
    exit: u8,
}

impl Outcome {
    fn ok(json: Value) -> Self {
        Outcome {
            json,
            csv: None,
            exit: 0,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.globals.workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match run(&cli) {
        Ok(outcome) => {
            let precision = match cli.globals.precision {
                PrecisionArg::Six => Precision::Six,
                PrecisionArg::Full => Precision::Full,
            };
            match cli.globals.format {
                OutputFormat::Json => {
                    let mut v = outcome.json;
                    apply_precision(&mut v, precision);
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&v).expect("serializable")
                    );
                }
                OutputFormat::Csv => match outcome.csv {
                    Some(csv) => print!("{csv}"),
                    None => {
                        eprintln!("error: this subcommand has no CSV form");
                        return ExitCode::from(2);
                    }
                },
                OutputFormat::Pretty => {
                    let mut v = outcome.json;
                    apply_precision(&mut v, precision);
                    let mut text = String::new();
                    pretty_lines(&v, 0, &mut text);
                    print!("{text}");
                }
            }
            ExitCode::from(outcome.exit)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let globals = &cli.globals;
    match &cli.command {
        Command::Bound { target } => run_bound(target, globals),
        Command::Tight { action } => run_tight(action, globals),
        Command::Table { which } => run_table(which, globals),
        Command::Certify { which } => run_certify(which),
        Command::Lab { which } => run_lab(which, globals),
        Command::Cuts(args) => {
            let graph = args.load()?;
            let report = flattening_lower_bounds(&graph)?;
            Ok(Outcome::ok(
                serde_json::to_value(report).expect("serializable"),
            ))
        }
    }
}

fn bound_options(
    globals: &Globals,
    common: &BoundCommonArgs,
    labeling: LabelingChoice,
    symmetry: Option<Vec<tensorbound_core::subrank::SymmetryGenerator>>,
) -> MainBoundOptions {
    MainBoundOptions {
        labeling,
        p_strategy: match common.strategy {
            StrategyArg::Uniform => PStrategy::Uniform,
            StrategyArg::Ascent => PStrategy::Ascent {
                restarts: 8,
                steps: 25,
            },
        },
        enumeration: match common.enumeration {
            EnumArg::Closed => RelationEnumeration::Closed,
            EnumArg::Exhaustive => RelationEnumeration::Exhaustive,
        },
        symmetry,
        seed: globals.seed,
        ipf: IpfOptions {
            tol: globals.tol,
            ..IpfOptions::default()
        },
        budget: globals.budget,
    }
}

fn bound_outcome(t: &SparseTensor, opts: &MainBoundOptions) -> Result<Outcome, Error> {
    let cert = main_lower_bound(t, opts)?;
    let json = json!({
        "bound_bits": cert.bound_bits,
        "closed_form": closed_form(cert.bound_bits),
        "certificate": serde_json::to_value(&cert).expect("serializable"),
    });
    Ok(Outcome::ok(json))
}

fn run_bound(target: &BoundTarget, globals: &Globals) -> Result<Outcome, Error> {
    match target {
        BoundTarget::Dicke(args) => {
            let t = dicke_tensor(&args.lambda)?;
            let labeling = dicke_standard_labeling(&args.lambda);
            let symmetry = match args.symmetry {
                SymmetryArg::None => None,
                SymmetryArg::Auto => {
                    // keep only the generators the labeling is equivariant
                    // under; orbit reduction stays sound
                    let support = t.support();
                    let gens: Vec<_> = dicke_symmetry_generators(&args.lambda)
                        .into_iter()
                        .filter(|g| {
                            SymmetryGroup::generate(&support, std::slice::from_ref(g))
                                .map(|grp| {
                                    grp.labeling_compatible(
                                        &support,
                                        &labeling,
                                        std::slice::from_ref(g),
                                    )
                                })
                                .unwrap_or(false)
                        })
                        .collect();
                    if gens.is_empty() {
                        None
                    } else {
                        Some(gens)
                    }
                }
            };
            let opts = bound_options(
                globals,
                &args.common,
                LabelingChoice::Supplied(labeling),
                symmetry,
            );
            bound_outcome(&t, &opts)
        }
        BoundTarget::Graph(args) => {
            let graph = args.graph.load()?;
            let t = graph_tensor(&graph, args.n)?;
            let opts = bound_options(globals, &args.common, LabelingChoice::Synthesize, None);
            bound_outcome(&t, &opts)
        }
        BoundTarget::File(args) => {
            let t = read_tensor(&args.tensor)?;
            let labeling = match &args.labeling {
                Some(path) => LabelingChoice::Supplied(read_labeling(path)?),
                None => LabelingChoice::Synthesize,
            };
            let opts = bound_options(globals, &args.common, labeling, None);
            bound_outcome(&t, &opts)
        }
    }
}

fn run_tight(action: &TightAction, globals: &Globals) -> Result<Outcome, Error> {
    match action {
        TightAction::Check { tensor, labeling } => {
            let t = read_tensor(tensor)?;
            let l = read_labeling(labeling)?;
            let tight = check_tight(&t.support(), &l)?;
            Ok(Outcome::ok(json!({ "tight": tight })))
        }
        TightAction::Find { tensor } => {
            let t = read_tensor(tensor)?;
            match find_labeling(&t.support(), globals.seed)? {
                LabelingSearch::Tight { labeling, space } => Ok(Outcome::ok(json!({
                    "status": "tight",
                    "labeling": labeling.to_json(),
                    "space_dimension": space.dimension(),
                }))),
                LabelingSearch::NotTight { leg, a, b } => Ok(Outcome {
                    json: json!({
                        "status": "not_tight",
                        "leg": leg,
                        "forced_equal": [a, b],
                    }),
                    csv: None,
                    exit: 1,
                }),
                LabelingSearch::Undetermined => Ok(Outcome {
                    json: json!({ "status": "undetermined" }),
                    csv: None,
                    exit: 1,
                }),
            }
        }
    }
}

fn run_table(which: &TableKind, globals: &Globals) -> Result<Outcome, Error> {
    match which {
        TableKind::Complete {
            kmax,
            qm,
            q_lo,
            q_hi,
        } => {
            let opts = TableOptions {
                constants: Constants {
                    omega_mm: globals.omega_mm,
                    alpha_dual: globals.alpha_dual,
                },
                q_m: *qm,
                q_lo: *q_lo,
                q_hi: *q_hi,
            };
            let rows = complete_graph_table(*kmax, &opts)?;
            Ok(Outcome {
                json: table_to_json(&rows, &opts),
                csv: Some(table_to_csv(&rows)),
                exit: 0,
            })
        }
    }
}

fn run_certify(which: &CertifyKind) -> Result<Outcome, Error> {
    match which {
        CertifyKind::CwBorder { q, k, corrupt } => {
            let report = if *corrupt {
                check_cw_border_with_linear_coeff(*q, *k, *q as i64 + 1)?
            } else {
                check_cw_border_certificate(*q, *k)?
            };
            let exit = u8::from(!report.pass);
            Ok(Outcome {
                json: json!({
                    "check": "cw-border",
                    "q": report.q,
                    "k": report.k,
                    "pass": report.pass,
                    "result": if report.pass { "pass" } else { "fail" },
                    "failure": serde_json::to_value(&report.failure).expect("serializable"),
                }),
                csv: None,
                exit,
            })
        }
    }
}

fn run_lab(which: &LabKind, globals: &Globals) -> Result<Outcome, Error> {
    match which {
        LabKind::Avgfree { k, n, mode } => {
            let set = average_free_set(
                *k,
                *n,
                match mode {
                    AvgFreeModeArg::Exhaustive => AvgFreeMode::Exhaustive,
                    AvgFreeModeArg::Greedy => AvgFreeMode::Greedy,
                },
            )?;
            Ok(Outcome::ok(json!({
                "k": set.k,
                "n": set.n,
                "size": set.elements.len(),
                "elements": set.elements,
                "valid": set.validate(),
            })))
        }
        LabKind::Experiment {
            source,
            power,
            trials,
            no_restrict,
            no_hash,
            modulus_floor,
            no_target,
        } => {
            let t = source.load()?;
            let cfg = ExperimentConfig {
                trials: *trials,
                seed: globals.seed,
                type_restrict: !no_restrict,
                hash: !no_hash,
                modulus_floor: *modulus_floor,
                compute_target: !no_target,
            };
            let report = run_cw_experiment(&t, *power, &cfg)?;
            Ok(Outcome::ok(
                serde_json::to_value(&report).expect("serializable"),
            ))
        }
        LabKind::Diagonal { source, power } => {
            let t = source.load()?;
            let support = t.support();
            let elements = power_support(&support, *power)?;
            let diag = greedy_diagonal(&support, &elements);
            Ok(Outcome::ok(
                serde_json::to_value(&diag).expect("serializable"),
            ))
        }
    }
}
