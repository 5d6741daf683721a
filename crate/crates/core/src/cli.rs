// SPDX-License-Identifier: MIT
//! Command-line front end. `run` does the work; the binary only wires up
//! logging and the exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{map_fit, FitOptions};
use crate::io::report::{
    FitBody, Record, RestartEntry, ScoreBody, ScoreEntry, SearchBody, StabilityBody,
};
use crate::io::{
    self, export_graph, explore_table, load_study, read_design, read_graph, write_study, GraphExport,
    Study,
};
use crate::likelihood::{ConditionParameters, NoiseModel};
use crate::model::{ExperimentDesign, Intervention};
use crate::priors::{GpPriorConfig, LinearPriorConfig, PriorConfig};
use crate::search::{
    stability_selection, ScoringContext, SearchOptions, StabilityOptions, StructureConstraints,
};
use crate::seed::rng_for;
use crate::simulate::{generate_study, GroundTruthModel};

#[derive(Debug, Parser)]
#[command(name = "cyclic-scm", version, about = "Causal structure learning for cyclic linear SCMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic study from a known graph.
    Simulate(SimulateArgs),
    /// KS table of every condition against the first one.
    Explore(ExploreArgs),
    /// MAP-fit the parameters of one graph.
    Fit(FitArgs),
    /// Laplace log evidence of one or more graphs.
    Score(ScoreArgs),
    /// Greedy structure search with random restarts.
    Search(SearchArgs),
    /// Edge selection frequencies over subsamples.
    Stability(StabilityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Supergaussian,
}

impl From<NoiseArg> for NoiseModel {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gaussian => NoiseModel::Gaussian,
            NoiseArg::Supergaussian => NoiseModel::SuperGaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Linear,
    Gp,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
    #[arg(long, value_enum, default_value_t = PriorArg::Linear)]
    pub prior: PriorArg,
    /// Slope prior scale (linear prior).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Intercept and log-scale prior scale (linear prior).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Kernel length scale (GP prior).
    #[arg(long)]
    pub sigma_in: Option<f64>,
    /// Kernel amplitude (GP prior).
    #[arg(long)]
    pub sigma_out: Option<f64>,
    /// Pseudo-data jitter (GP prior).
    #[arg(long)]
    pub sigma_jitter: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub gradient_tolerance: f64,
    /// Optimizer restarts per graph.
    #[arg(long, default_value_t = 1)]
    pub fit_restarts: usize,
}

impl ModelArgs {
    pub fn noise(&self) -> NoiseModel {
        self.noise.into()
    }

    pub fn prior(&self) -> Result<PriorConfig> {
        match self.prior {
            PriorArg::Linear => {
                if let Some(flag) = [
                    ("--sigma-in", self.sigma_in),
                    ("--sigma-out", self.sigma_out),
                    ("--sigma-jitter", self.sigma_jitter),
                ]
                .iter()
                .find_map(|(f, v)| v.map(|_| f))
                {
                    return Err(Error::InvalidArgument(format!("{flag} requires --prior gp")));
                }
                let d = LinearPriorConfig::default();
                Ok(PriorConfig::Linear(LinearPriorConfig::new(
                    self.lambda.unwrap_or(d.lambda),
                    self.tau.unwrap_or(d.tau),
                )?))
            }
            PriorArg::Gp => {
                if self.lambda.is_some() || self.tau.is_some() {
                    return Err(Error::InvalidArgument(
                        "--lambda and --tau apply to the linear prior only".into(),
                    ));
                }
                let d = GpPriorConfig::default();
                Ok(PriorConfig::Gp(GpPriorConfig::new(
                    self.sigma_in.unwrap_or(d.sigma_in),
                    self.sigma_out.unwrap_or(d.sigma_out),
                    self.sigma_jitter.unwrap_or(d.sigma_jitter),
                )?))
            }
        }
    }

    pub fn fit_options(&self) -> Result<FitOptions> {
        if self.max_iterations == 0 || self.fit_restarts == 0 {
            return Err(Error::InvalidArgument(
                "--max-iterations and --fit-restarts must be positive".into(),
            ));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidArgument("--gradient-tolerance must be positive".into()));
        }
        Ok(FitOptions {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            restarts: self.fit_restarts,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConstraintArgs {
    #[arg(long)]
    pub max_edges: Option<usize>,
    /// Restrict to acyclic graphs.
    #[arg(long)]
    pub acyclic: bool,
}

impl ConstraintArgs {
    pub fn constraints(&self) -> StructureConstraints {
        StructureConstraints {
            max_edges: self.max_edges,
            require_acyclic: self.acyclic,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    /// Directory holding `<index>.csv` per condition.
    #[arg(long)]
    pub data: PathBuf,
    /// Design file; defaults to `<data>/design.csv`.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Detection limit; raw values at or below it are clamped (0 disables).
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
}

impl StudyArgs {
    pub fn load(&self) -> Result<Study> {
        let design = self
            .design
            .clone()
            .unwrap_or_else(|| self.data.join(io::dataset::DESIGN_FILE));
        load_study(&self.data, &design, self.theta)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Output directory for the study.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated compound names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub names: Vec<String>,
    /// Edge-list file of the true graph.
    #[arg(long)]
    pub graph: PathBuf,
    /// Design file; defaults to observational, then activity and abundance on
    /// every compound.
    #[arg(long)]
    pub design: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub magnitude: f64,
    #[arg(long, default_value_t = 0.3)]
    pub coef_min: f64,
    #[arg(long, default_value_t = 0.9)]
    pub coef_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
}

#[derive(Debug, Clone, Args)]
pub struct ExploreArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Edge-list or DOT file over the study's compound names.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[arg(long = "graph", required = true)]
    pub graphs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// DOT export of the best graph.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Edge-list export of the best graph, readable by `score` and `fit`.
    #[arg(long)]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub constraints: ConstraintArgs,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    /// Greedy restarts per run.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// DOT export with edge widths from the frequencies.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

fn emit<T: Serialize>(record: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn default_design(d: usize, names: &[String]) -> Result<ExperimentDesign> {
    let mut conditions = vec![Intervention::Observational];
    let mut labels = vec!["observational".to_string()];
    for (i, n) in names.iter().enumerate().take(d) {
        conditions.push(Intervention::Activity(i));
        labels.push(format!("activity {n}"));
    }
    for (i, n) in names.iter().enumerate().take(d) {
        conditions.push(Intervention::Abundance(i));
        labels.push(format!("abundance {n}"));
    }
    ExperimentDesign::new(conditions, labels)
}

#[derive(Serialize)]
struct TruthBody<'a> {
    edges: Vec<[String; 2]>,
    noise: NoiseModel,
    base: &'a ConditionParameters,
    design: &'a ExperimentDesign,
    per_condition_models: &'a [ConditionParameters],
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    if !(args.magnitude > 0.0) {
        return Err(Error::InvalidArgument("--magnitude must be positive".into()));
    }
    let names = &args.names;
    let graph = read_graph(&args.graph, names)?;
    let design = match &args.design {
        Some(p) => read_design(p, names)?,
        None => default_design(names.len(), names)?,
    };
    let mut rng = rng_for(args.seed, &[0x7207]);
    let truth =
        GroundTruthModel::random(graph, args.noise.into(), (args.coef_min, args.coef_max), &mut rng)?;
    let study = generate_study(&truth, &design, args.n, args.magnitude, args.seed)?;
    let design_path = write_study(&args.out, names, &study.design, &study.data)?;
    fs::write(args.out.join("truth.edges"), io::edge_list(&truth.graph, names))?;
    export_graph(GraphExport::Graph(&truth.graph), names, &args.out.join("truth.dot"))?;
    let body = TruthBody {
        edges: io::report::named_edges(&truth.graph, names),
        noise: truth.noise,
        base: &truth.base,
        design: &study.design,
        per_condition_models: &study.per_condition_models,
    };
    emit(&Record::new("truth", body), Some(&args.out.join("truth.json")), stdout)?;
    writeln!(stdout, "{}", design_path.display())?;
    Ok(())
}

fn explore(args: &ExploreArgs, stdout: &mut dyn Write) -> Result<()> {
    let study = args.study.load()?;
    let table = explore_table(&study)?;
    match &args.out {
        Some(p) => fs::write(p, table)?,
        None => stdout.write_all(table.as_bytes())?,
    }
    Ok(())
}

fn fit(args: &FitArgs, stdout: &mut dyn Write) -> Result<()> {
    let prior = args.model.prior()?;
    let opts = args.model.fit_options()?;
    let study = args.study.load()?;
    let graph = read_graph(&args.graph, &study.compound_names)?;
    let result = map_fit(&graph, &study.data, &study.design, &prior, args.model.noise(), &opts)?;
    let body = FitBody::new(&result, &study.compound_names, study.design.names());
    emit(&Record::new("fit", body), args.out.as_deref(), stdout)
}

fn score(args: &ScoreArgs, stdout: &mut dyn Write) -> Result<()> {
    let prior = args.model.prior()?;
    let opts = args.model.fit_options()?;
    let study = args.study.load()?;
    let graphs = args
        .graphs
        .iter()
        .map(|p| read_graph(p, &study.compound_names))
        .collect::<Result<Vec<_>>>()?;
    let constraints = args.constraints.constraints();
    for g in &graphs {
        constraints.check(g)?;
    }
    let ctx = ScoringContext::new(
        &study.data,
        &study.design,
        &prior,
        args.model.noise(),
        constraints,
        opts,
    )?;
    let scores = graphs
        .iter()
        .zip(&args.graphs)
        .map(|(g, p)| Ok(ScoreEntry::new(&p.display().to_string(), &ctx.score(g)?, &study.compound_names)))
        .collect::<Result<Vec<_>>>()?;
    emit(&Record::new("score", ScoreBody { scores }), args.out.as_deref(), stdout)
}

fn search(args: &SearchArgs, stdout: &mut dyn Write) -> Result<()> {
    let prior = args.model.prior()?;
    let fit = args.model.fit_options()?;
    if args.restarts == 0 {
        return Err(Error::InvalidArgument("--restarts must be positive".into()));
    }
    let study = args.study.load()?;
    let constraints = args.constraints.constraints();
    let ctx = ScoringContext::new(&study.data, &study.design, &prior, args.model.noise(), constraints, fit)?;
    let out = ctx.greedy_search(&SearchOptions {
        restarts: args.restarts,
        seed: args.model.seed,
        fit,
    })?;
    let names = &study.compound_names;
    if let Some(p) = &args.dot {
        export_graph(GraphExport::Graph(&out.best.graph), names, p)?;
    }
    if let Some(p) = &args.edges {
        fs::write(p, io::edge_list(&out.best.graph, names))?;
    }
    let body = SearchBody {
        constraints,
        best: ScoreEntry::new("best", &out.best, names),
        restarts: out.trace.iter().map(|r| RestartEntry::new(r, names)).collect(),
    };
    emit(&Record::new("search", body), args.out.as_deref(), stdout)
}

fn stability(args: &StabilityArgs, stdout: &mut dyn Write) -> Result<()> {
    let prior = args.model.prior()?;
    let fit = args.model.fit_options()?;
    if args.runs == 0 || args.restarts == 0 {
        return Err(Error::InvalidArgument("--runs and --restarts must be positive".into()));
    }
    if !(args.fraction > 0.0 && args.fraction < 1.0) {
        return Err(Error::InvalidArgument("--fraction must lie strictly between 0 and 1".into()));
    }
    let study = args.study.load()?;
    let constraints = args.constraints.constraints();
    let opts = StabilityOptions {
        n_runs: args.runs,
        subsample_fraction: args.fraction,
        search: SearchOptions {
            restarts: args.restarts,
            seed: args.model.seed,
            fit,
        },
    };
    let out = stability_selection(&study.data, &study.design, &prior, args.model.noise(), constraints, &opts)?;
    let names = &study.compound_names;
    if let Some(p) = &args.dot {
        export_graph(GraphExport::Frequencies(&out.frequencies), names, p)?;
    }
    let body = StabilityBody::new(&out.frequencies, &out.failed_runs, constraints, names);
    emit(&Record::new("stability", body), args.out.as_deref(), stdout)
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Explore(a) => explore(a, stdout),
        Command::Fit(a) => fit(a, stdout),
        Command::Score(a) => score(a, stdout),
        Command::Search(a) => search(a, stdout),
        Command::Stability(a) => stability(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code. Failures
/// print a JSON error record to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let err = Error::InvalidArgument(e.kind().to_string());
            let _ = write!(stderr, "{e}");
            return report_error(&err, stderr, 2);
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => report_error(&e, stderr, 1),
    }
}

fn report_error(e: &Error, stderr: &mut dyn Write, code: i32) -> i32 {
    let rec = Record::new("error", io::report::ErrorBody::from(e));
    let _ = writeln!(stderr, "{}", serde_json::to_string(&rec).unwrap_or_default());
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn rejects_cross_prior_hyperparameters() {
        let cli = Cli::try_parse_from([
            "cyclic-scm", "fit", "--data", "x", "--graph", "g", "--prior", "gp", "--lambda", "2",
        ])
        .unwrap();
        let Command::Fit(a) = &cli.command else { panic!() };
        assert!(matches!(a.model.prior(), Err(Error::InvalidArgument(_))));
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(
            ["cyclic-scm", "fit", "--data", "x", "--graph", "g", "--sigma-in", "2"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 1);
        let rec: serde_json::Value = serde_json::from_slice(&err).unwrap();
        assert_eq!(rec["kind"], "error");
        assert_eq!(rec["error"], "invalid_argument");
    }

    #[test]
    fn unknown_flags_give_an_error_record() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(main_with(["cyclic-scm", "search", "--bogus"], &mut out, &mut err), 2);
        let last = String::from_utf8(err).unwrap();
        assert!(last.lines().last().unwrap().contains("\"kind\":\"error\""));
    }
}
