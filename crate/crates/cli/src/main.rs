use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use segsim::dynamics::{BasinReport, Semantics, TransitionGraph};
use segsim::equilibria::enumerate_nash;
use segsim::export;
use segsim::params::ParamsFile;
use segsim::statics::{perturb_compare, sweep_group_size, StaticsError};
use segsim::stochastic::{build_chain, classify_stable, stationary};
use segsim::{Coef, Corner, Group, Params, State};

const DEFAULT_BETAS: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0];

/// Two-group platform choice with cross-group distaste.
#[derive(Parser)]
#[command(name = "segsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pure equilibria and the group-symmetric conditions.
    Classify(CommonArgs),
    /// Preference map with the integrated basin and equilibria.
    Map(CommonArgs),
    /// Best-response trajectories.
    Simulate(SimulateArgs),
    /// Basins of attraction of every rest point.
    Basins(BasinArgs),
    /// Tipping set of one group-symmetric equilibrium.
    Tipping(BasinArgs),
    /// Stochastically stable states and stationary laws over a β ladder.
    Stable(StableArgs),
    /// Stable states while one group grows.
    Sweep(SweepArgs),
    /// Compare reducing δ with raising γ for the group on ℓ.
    Perturb(PerturbArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// JSON file with n_a, n_b, gamma_a, gamma_b, delta.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["na", "nb", "gamma_a", "gamma_b", "delta"])]
    params: Option<PathBuf>,
    #[arg(long)]
    na: Option<String>,
    #[arg(long)]
    nb: Option<String>,
    #[arg(long)]
    gamma_a: Option<String>,
    #[arg(long)]
    gamma_b: Option<String>,
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Format {
    Csv,
    Json,
    Ascii,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Figure,
    Exact,
}

impl From<SemanticsArg> for Semantics {
    fn from(s: SemanticsArg) -> Self {
        match s {
            SemanticsArg::Figure => Semantics::Figure,
            SemanticsArg::Exact => Semantics::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum CornerArg {
    Mm,
    Ml,
    Lm,
    Ll,
}

impl From<CornerArg> for Corner {
    fn from(c: CornerArg) -> Self {
        match c {
            CornerArg::Mm => Corner::Mm,
            CornerArg::Ml => Corner::Ml,
            CornerArg::Lm => Corner::Lm,
            CornerArg::Ll => Corner::Ll,
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Revision semantics; `map` defaults to figure, everything else to exact.
    #[arg(long, value_enum)]
    semantics: Option<SemanticsArg>,
    /// Output formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Base seed; replicate i uses seed + i. Defaults to $SEGSIM_SEED or 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    replicates: u32,
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
    /// Initial state as `n_am,n_bm`.
    #[arg(long, default_value = "0,0")]
    start: String,
}

#[derive(Args)]
struct BasinArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    equilibrium: Option<CornerArg>,
}

#[derive(Args)]
struct StableArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Noise level(s); defaults to 1,2,5,10,20,40.
    #[arg(long)]
    beta: Vec<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value = "a")]
    group: GroupArg,
    #[arg(long, default_value_t = 200)]
    k_max: u32,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fractional change, e.g. 0.1.
    #[arg(long)]
    x: String,
}

/// An error carrying its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn invalid(message: impl std::fmt::Display) -> anyhow::Error {
    Failure { code: 2, message: message.to_string() }.into()
}

fn load_params(args: &ParamArgs) -> Result<Params> {
    if let Some(path) = &args.params {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Params::from_json(&text).map_err(invalid);
    }
    let field = |v: &Option<String>, flag: &str| -> Result<String> {
        v.clone().ok_or_else(|| invalid(format!("missing --{flag} (or pass --params FILE)")))
    };
    let size = |text: String| -> Result<Value> {
        let v: f64 = text.trim().parse().map_err(|_| invalid(format!("invalid group size {text:?}")))?;
        Ok(json!(v))
    };
    let coef = |text: String| Coef::decimal(&text).map_err(invalid);
    let file = ParamsFile {
        n_a: size(field(&args.na, "na")?)?,
        n_b: size(field(&args.nb, "nb")?)?,
        gamma_a: coef(field(&args.gamma_a, "gamma-a")?)?,
        gamma_b: coef(field(&args.gamma_b, "gamma-b")?)?,
        delta: coef(field(&args.delta, "delta")?)?,
    };
    file.into_params().map_err(invalid)
}

struct Output {
    dir: PathBuf,
    formats: BTreeSet<Format>,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(common: &CommonArgs, defaults: &[Format], allowed: &[Format]) -> Result<Self> {
        let formats: BTreeSet<Format> =
            if common.format.is_empty() { defaults.iter().copied().collect() } else { common.format.iter().copied().collect() };
        if let Some(f) = formats.iter().find(|f| !allowed.contains(f)) {
            let name = f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
            return Err(invalid(format!("format {name} is not available for this command")));
        }
        fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
        Ok(Self { dir: common.out.clone(), formats, written: Vec::new() })
    }

    fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    fn finish(&self) {
        for p in &self.written {
            println!("{}", p.display());
        }
    }
}

fn semantics(common: &CommonArgs, default: Semantics) -> Semantics {
    common.semantics.map(Semantics::from).unwrap_or(default)
}

fn parse_state(text: &str, params: &Params) -> Result<State> {
    let (a, b) = text.split_once(',').ok_or_else(|| invalid(format!("state {text:?} must be n_am,n_bm")))?;
    let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| invalid(format!("invalid state {text:?}")));
    let state = State::new(parse(a)?, parse(b)?);
    if !state.is_valid(params) {
        return Err(invalid(format!("state {state} outside the grid")));
    }
    Ok(state)
}

fn cmd_classify(args: &CommonArgs) -> Result<()> {
    let params = load_params(&args.params)?;
    let mut out = Output::new(args, &[Format::Json, Format::Csv], &[Format::Json, Format::Csv])?;
    let report = enumerate_nash(&params);
    if out.wants(Format::Json) {
        out.write("equilibria.json", &export::json_document(&params, "equilibria", &report))?;
    }
    if out.wants(Format::Csv) {
        out.write("equilibria.csv", &export::nash_csv(&report, &params))?;
    }
    out.finish();
    Ok(())
}

fn cmd_map(args: &CommonArgs) -> Result<()> {
    let params = load_params(&args.params)?;
    let sem = semantics(args, Semantics::Figure);
    let mut out = Output::new(args, &[Format::Ascii, Format::Svg], &[Format::Ascii, Format::Svg, Format::Csv])?;
    let map = export::PreferenceMap::build(&params, sem);
    if out.wants(Format::Ascii) {
        out.write("map.txt", &export::ascii_map(&map, &params))?;
    }
    if out.wants(Format::Svg) {
        out.write("map.svg", &export::svg_map(&map, &params))?;
    }
    if out.wants(Format::Csv) {
        let labels = TransitionGraph::build(&params, sem).classify_all();
        out.write("labels.csv", &export::classify_csv(&labels, &params, sem))?;
    }
    out.finish();
    Ok(())
}

fn default_seed() -> Result<u64> {
    match std::env::var("SEGSIM_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| invalid(format!("SEGSIM_SEED {v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let params = load_params(&args.common.params)?;
    if args.max_steps < 1 || args.replicates < 1 {
        return Err(invalid("--max-steps and --replicates must be at least 1"));
    }
    let sem = semantics(&args.common, Semantics::Exact);
    let start = parse_state(&args.start, &params)?;
    let seed = match args.seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let mut out = Output::new(&args.common, &[Format::Csv, Format::Json], &[Format::Csv, Format::Json])?;
    let graph = TransitionGraph::build(&params, sem);
    let mut summary = Vec::new();
    let mut stuck = 0;
    for i in 0..args.replicates {
        let s = seed.wrapping_add(i as u64);
        let t = graph.simulate(start, s, args.max_steps).map_err(invalid)?;
        if !t.is_absorbed() {
            stuck += 1;
        }
        summary.push(json!({
            "seed": s,
            "absorbed": t.absorbed_at.map(|(step, state)| json!({"t": step, "state": state})),
            "final_state": t.last(),
        }));
        if out.wants(Format::Csv) {
            let name = if args.replicates == 1 { "trajectory.csv".to_string() } else { format!("trajectory_{i}.csv") };
            out.write(&name, &export::trajectory_csv(&t, &params))?;
        }
    }
    if out.wants(Format::Json) {
        let doc = json!({ "semantics": sem, "start": start, "max_steps": args.max_steps, "runs": summary });
        out.write("simulation.json", &export::json_document(&params, "simulation", &doc))?;
    }
    out.finish();
    if stuck > 0 {
        return Err(Failure {
            code: 3,
            message: format!("not absorbed within max-steps: {stuck} of {} runs", args.replicates),
        }
        .into());
    }
    Ok(())
}

fn basin_of(graph: &TransitionGraph, params: &Params, corner: Corner) -> Result<BasinReport> {
    graph.basin(corner.state(params)).map_err(invalid)
}

fn cmd_basins(args: &BasinArgs) -> Result<()> {
    let params = load_params(&args.common.params)?;
    let sem = semantics(&args.common, Semantics::Exact);
    let mut out = Output::new(&args.common, &[Format::Csv, Format::Json], &[Format::Csv, Format::Json])?;
    let graph = TransitionGraph::build(&params, sem);
    match args.equilibrium {
        Some(c) => {
            let report = basin_of(&graph, &params, c.into())?;
            if out.wants(Format::Csv) {
                out.write("basin.csv", &export::basin_csv(&report, &params))?;
            }
            if out.wants(Format::Json) {
                out.write("basin.json", &export::json_document(&params, "basin", &report))?;
            }
        }
        None => {
            if out.wants(Format::Csv) {
                out.write("basins.csv", &export::classify_csv(&graph.classify_all(), &params, sem))?;
            }
            if out.wants(Format::Json) {
                let reports: Vec<BasinReport> =
                    graph.absorbing_states().into_iter().map(|s| graph.basin(s)).collect::<Result<_, _>>()?;
                out.write("basins.json", &export::json_document(&params, "basins", &reports))?;
            }
        }
    }
    out.finish();
    Ok(())
}

fn cmd_tipping(args: &BasinArgs) -> Result<()> {
    let params = load_params(&args.common.params)?;
    let sem = semantics(&args.common, Semantics::Exact);
    let Some(corner) = args.equilibrium else {
        return Err(invalid("tipping requires --equilibrium mm|ml|lm|ll"));
    };
    let mut out = Output::new(&args.common, &[Format::Csv, Format::Json], &[Format::Csv, Format::Json])?;
    let graph = TransitionGraph::build(&params, sem);
    let report = basin_of(&graph, &params, corner.into())?;
    if out.wants(Format::Csv) {
        out.write("tipping.csv", &export::tipping_csv(&report, &params))?;
    }
    if out.wants(Format::Json) {
        out.write("tipping.json", &export::json_document(&params, "tipping", &report))?;
    }
    out.finish();
    Ok(())
}

fn cmd_stable(args: &StableArgs) -> Result<()> {
    let params = load_params(&args.common.params)?;
    let betas: Vec<f64> = if args.beta.is_empty() { DEFAULT_BETAS.to_vec() } else { args.beta.clone() };
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
        return Err(invalid(format!("beta must be positive and finite, got {b}")));
    }
    let mut out = Output::new(&args.common, &[Format::Json, Format::Csv], &[Format::Json, Format::Csv])?;
    let report = classify_stable(&params);
    if out.wants(Format::Json) {
        out.write("stability.json", &export::json_document(&params, "stability", &report))?;
    }
    if out.wants(Format::Csv) {
        let dists = betas
            .iter()
            .map(|&b| Ok(stationary(&build_chain(&params, b)?)?))
            .collect::<Result<Vec<_>>>()?;
        out.write("stationary.csv", &export::distribution_csv(&dists, &params))?;
    }
    out.finish();
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let params = load_params(&args.common.params)?;
    let group = match args.group {
        GroupArg::A => Group::A,
        GroupArg::B => Group::B,
    };
    let mut out = Output::new(&args.common, &[Format::Csv, Format::Json], &[Format::Csv, Format::Json])?;
    let report = sweep_group_size(&params, group, args.k_max).map_err(invalid)?;
    if out.wants(Format::Csv) {
        out.write("sweep.csv", &export::sweep_csv(&report))?;
    }
    if out.wants(Format::Json) {
        out.write("sweep.json", &export::json_document(&params, "sweep", &report))?;
    }
    out.finish();
    Ok(())
}

fn cmd_perturb(args: &PerturbArgs) -> Result<()> {
    let params = load_params(&args.common.params)?;
    let x = Coef::decimal(&args.x).map_err(invalid)?;
    let mut out = Output::new(&args.common, &[Format::Json], &[Format::Json])?;
    let report = match perturb_compare(&params, x) {
        Ok(r) => r,
        Err(e @ StaticsError::GammaCapExceeded { .. }) => bail!(Failure { code: 4, message: e.to_string() }),
        Err(e) => return Err(invalid(e)),
    };
    out.write("perturb.json", &export::json_document(&params, "perturb", &report))?;
    out.finish();
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Map(a) => cmd_map(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Basins(a) => cmd_basins(a),
        Command::Tipping(a) => cmd_tipping(a),
        Command::Stable(a) => cmd_stable(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Perturb(a) => cmd_perturb(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Failure>().map_or(1, |f| f.code);
            ExitCode::from(code)
        }
    }
}
