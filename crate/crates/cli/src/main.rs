//! `locality` command-line front end.
//!
//! Every subcommand prints one report (JSON by default, or CSV with dotted
//! keys). Exit codes: 0 success, 1 error, 2 certified infeasibility.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use locality::consensus::{self, ConsensusController, ConsensusProblem, Verdict};
use locality::relative::{is_relative, relative_decompose_rational};
use locality::sls::{
    check_affine_constraint, check_of_constraints, closed_loops_of, closed_loops_of_of, implementation_realization_sf,
    of_structured_implementation, properness_slope, recover_controller_of, recover_controller_sf, ClosedLoopPair,
    Controller, LtiMap, OutputFeedbackClosedLoop, Plant,
};
use locality::spatial::{si_h2_norm, si_h2_norm_parseval, spatial_feasibility, ConvKernelArray};
use locality::structure::{build_structured_realization, check_realization_structure, is_tf_structured, Orientation};
use locality::{sampling, Graph, StructurePattern};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "locality", version, about = "Locality and relative-feedback analyses for networked LTI systems")]
struct Cli {
    /// JSON input file.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    output: Format,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tolerance: f64,
    /// Number of random frequency samples for sampled checks.
    #[arg(long, global = true, default_value_t = 7)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer-function and realization structure.
    Structure {
        #[command(subcommand)]
        cmd: StructureCmd,
    },
    /// Relative feedback checks and pairwise-difference decompositions.
    Relative {
        #[command(subcommand)]
        cmd: RelativeCmd,
    },
    /// System level closed loops, constraints, recovery and implementation.
    Sls {
        #[command(subcommand)]
        cmd: SlsCmd,
    },
    /// Ring consensus example.
    Consensus {
        #[command(subcommand)]
        cmd: ConsensusCmd,
    },
    /// Spatially invariant systems on the discrete torus.
    Spatial {
        #[command(subcommand)]
        cmd: SpatialCmd,
    },
}

#[derive(Subcommand)]
enum StructureCmd {
    /// Input `{graph, system}`; reports TF structure and, for state-space
    /// systems, the realization witnesses.
    Check,
    /// Input `{graph, system, orientation?}`; builds a structured realization.
    Realize,
}

#[derive(Subcommand)]
enum RelativeCmd {
    /// Input `{system}`.
    Check,
    /// Input `{graph, system}`.
    Decompose,
}

#[derive(Subcommand)]
enum SlsCmd {
    /// Input `{plant, controller}`.
    ClosedLoops {
        /// Close the loop through `y = C2 x` instead of the state.
        #[arg(long)]
        output_feedback: bool,
    },
    /// Input `{plant, closedLoops}`.
    Check,
    /// Input `{closedLoops}`.
    Recover,
    /// Input `{closedLoops, graph?}`; a graph is required for output feedback.
    Implement,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Le,
    Ave,
    Lr,
}

impl From<MeasureArg> for consensus::Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Le => consensus::Measure::Le,
            MeasureArg::Ave => consensus::Measure::Ave,
            MeasureArg::Lr => consensus::Measure::Lr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Ks,
    Ka,
}

#[derive(clap::Args)]
struct RingArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    b: usize,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = MeasureArg::Ave)]
    measure: MeasureArg,
}

#[derive(Subcommand)]
enum ConsensusCmd {
    /// Certificate for the ring problem; `--input` may supply `{n, b, gamma, c}`.
    Feasibility {
        #[command(flatten)]
        ring: RingArgs,
    },
    /// Deflated H2 norm squared of `K_s` or `K_a`.
    H2 {
        #[command(flatten)]
        ring: RingArgs,
        #[arg(long, value_enum, default_value_t = ControllerArg::Ks)]
        controller: ControllerArg,
        /// Pole of `K_a`.
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        a: f64,
    },
    /// Infeasibility verdict next to finite H2 values of relative controllers.
    GapDemo {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        b: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
}

#[derive(Subcommand)]
enum SpatialCmd {
    Feasibility {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Input: a kernel `{d, n, taps}`.
    H2,
}

#[derive(Deserialize)]
struct SystemInput {
    #[serde(default)]
    graph: Option<Graph>,
    system: LtiMap,
    #[serde(default)]
    orientation: Orientation,
}

#[derive(Deserialize)]
struct LoopInput {
    plant: Plant,
    controller: Controller,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ClosedLoops {
    Output(OutputFeedbackClosedLoop),
    State(ClosedLoopPair),
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ClosedLoopInput {
    #[serde(default)]
    plant: Option<Plant>,
    closed_loops: ClosedLoops,
    #[serde(default)]
    graph: Option<Graph>,
}

struct Report {
    value: Value,
    infeasible: bool,
}

impl Report {
    fn ok(value: Value) -> Self {
        Report { value, infeasible: false }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(report) => {
            let _ = writeln!(std::io::stdout(), "{}", render(&report.value, cli.output));
            ExitCode::from(if report.infeasible { 2 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_input<T: DeserializeOwned>(cli: &Cli) -> CliResult<T> {
    let path = cli.input.as_ref().ok_or("this command needs --input <file>")?;
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn run(cli: &Cli) -> CliResult<Report> {
    match &cli.command {
        Command::Structure { cmd } => structure(cli, cmd),
        Command::Relative { cmd } => relative(cli, cmd),
        Command::Sls { cmd } => sls(cli, cmd),
        Command::Consensus { cmd } => consensus_cmd(cli, cmd),
        Command::Spatial { cmd } => spatial(cli, cmd),
    }
}

fn require_graph(g: Option<Graph>) -> CliResult<Graph> {
    g.ok_or_else(|| "input needs a \"graph\" field".into())
}

fn structure(cli: &Cli, cmd: &StructureCmd) -> CliResult<Report> {
    let input: SystemInput = read_input(cli)?;
    let graph = require_graph(input.graph)?;
    let tf = input.system.to_rational();
    let pat = StructurePattern::new(graph, tf.row_partition().clone(), tf.col_partition().clone())?;
    match cmd {
        StructureCmd::Check => {
            let mut out = json!({ "tfStructured": is_tf_structured(&tf, &pat)? });
            if let LtiMap::StateSpace(ss) = &input.system {
                out["realization"] = serde_json::to_value(check_realization_structure(ss, &pat)?)?;
            }
            Ok(Report::ok(out))
        }
        StructureCmd::Realize => {
            let ss = build_structured_realization(&tf, &pat, input.orientation)?;
            let witness = check_realization_structure(&ss, &pat)?;
            Ok(Report::ok(json!({ "realization": ss, "witness": witness })))
        }
    }
}

fn relative(cli: &Cli, cmd: &RelativeCmd) -> CliResult<Report> {
    let input: SystemInput = read_input(cli)?;
    let k = input.system.to_rational();
    match cmd {
        RelativeCmd::Check => Ok(Report::ok(json!({ "relative": is_relative(&k) }))),
        RelativeCmd::Decompose => {
            let graph = require_graph(input.graph)?;
            let form = relative_decompose_rational(&k, &graph)?;
            let back = form.reassemble();
            let err = sampling::sample(cli.samples, cli.seed, |s| Ok(cmax(&(back.eval(s)? - k.eval(s)?))))?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(Report::ok(json!({ "terms": form.terms(), "reconstructionError": err })))
        }
    }
}

fn cmax(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn complex_rows(m: &DMatrix<Complex64>) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect();
    json!(rows)
}

/// Controllers without a finite form are reported by their samples.
fn controller_report(k: &Controller, cli: &Cli) -> CliResult<Value> {
    if let Controller::Frequency(_) = k {
        let samples = sampling::points(cli.samples, cli.seed)
            .into_iter()
            .map(|s| Ok(json!({ "s": [s.re, s.im], "k": complex_rows(&k.eval(s)?) })))
            .collect::<CliResult<Vec<Value>>>()?;
        return Ok(json!({ "controller": null, "samples": samples }));
    }
    Ok(json!({ "controller": k }))
}

fn sls(cli: &Cli, cmd: &SlsCmd) -> CliResult<Report> {
    if let SlsCmd::ClosedLoops { output_feedback } = cmd {
        let input: LoopInput = read_input(cli)?;
        let out = if *output_feedback {
            serde_json::to_value(closed_loops_of_of(&input.plant, &input.controller)?)?
        } else {
            serde_json::to_value(closed_loops_of(&input.plant, &input.controller)?)?
        };
        return Ok(Report::ok(out));
    }
    let input: ClosedLoopInput = read_input(cli)?;
    match (cmd, &input.closed_loops) {
        (SlsCmd::Check, cl) => {
            let plant = input.plant.as_ref().ok_or("input needs a \"plant\" field")?;
            let out = match cl {
                ClosedLoops::State(cl) => {
                    let chk = check_affine_constraint(cl, plant, cli.samples, cli.seed)?;
                    json!({
                        "residual": chk.residual,
                        "strictlyProper": chk.strictly_proper,
                        "propernessSlope": properness_slope(cl)?,
                        "satisfied": chk.residual <= cli.tolerance && chk.strictly_proper,
                    })
                }
                ClosedLoops::Output(cl) => {
                    let chk = check_of_constraints(cl, plant, cli.samples, cli.seed)?;
                    json!({
                        "rowResidual": chk.row_residual,
                        "columnResidual": chk.column_residual,
                        "satisfied": chk.max() <= cli.tolerance,
                    })
                }
            };
            Ok(Report::ok(out))
        }
        (SlsCmd::Recover, ClosedLoops::State(cl)) => Ok(Report::ok(controller_report(&recover_controller_sf(cl)?, cli)?)),
        (SlsCmd::Recover, ClosedLoops::Output(cl)) => Ok(Report::ok(controller_report(&recover_controller_of(cl), cli)?)),
        (SlsCmd::Implement, cl) => {
            let pat = input.graph.map(StructurePattern::scalar);
            let ss = match cl {
                ClosedLoops::State(cl) => implementation_realization_sf(cl, cli.tolerance)?,
                ClosedLoops::Output(cl) => {
                    let pat = pat.as_ref().ok_or("output-feedback implementation needs a \"graph\" field")?;
                    of_structured_implementation(cl, pat, cli.tolerance)?
                }
            };
            let mut out = json!({ "realization": ss });
            if let Some(pat) = &pat {
                out["witness"] = serde_json::to_value(check_realization_structure(&ss, pat)?)?;
            }
            Ok(Report::ok(out))
        }
        (SlsCmd::ClosedLoops { .. }, _) => unreachable!("handled above"),
    }
}

fn ring_problem(cli: &Cli, ring: &RingArgs) -> CliResult<ConsensusProblem> {
    if cli.input.is_some() {
        let prob: ConsensusProblem = read_input(cli)?;
        prob.validate()?;
        return Ok(prob);
    }
    let n = ring.n.ok_or("pass --n or --input")?;
    Ok(ConsensusProblem::with_measure(n, ring.b, ring.gamma, ring.measure.into())?)
}

fn consensus_cmd(cli: &Cli, cmd: &ConsensusCmd) -> CliResult<Report> {
    match cmd {
        ConsensusCmd::Feasibility { ring } => {
            let cert = consensus::sls_relative_feasibility(&ring_problem(cli, ring)?)?;
            Ok(Report { infeasible: cert.verdict == Verdict::Infeasible, value: serde_json::to_value(cert)? })
        }
        ConsensusCmd::H2 { ring, controller, a } => {
            let prob = ring_problem(cli, ring)?;
            let k = match controller {
                ControllerArg::Ks => ConsensusController::Static(consensus::static_consensus_gain(prob.n)?),
                ControllerArg::Ka => ConsensusController::Dynamic(consensus::proper_approximation(prob.n, *a)?),
            };
            Ok(Report::ok(json!({ "h2Squared": consensus::h2_deflated(&prob, &k)? })))
        }
        ConsensusCmd::GapDemo { n, b, gamma } => {
            Ok(Report::ok(serde_json::to_value(consensus::gap_demonstration(*n, *b, *gamma)?)?))
        }
    }
}

fn spatial(cli: &Cli, cmd: &SpatialCmd) -> CliResult<Report> {
    match cmd {
        SpatialCmd::Feasibility { d, n, b, gamma } => {
            let cert = spatial_feasibility(*d, *n, *b, *gamma)?;
            Ok(Report { infeasible: cert.verdict == Verdict::Infeasible, value: serde_json::to_value(cert)? })
        }
        SpatialCmd::H2 => {
            let k: ConvKernelArray = read_input(cli)?;
            Ok(Report::ok(json!({ "h2Squared": si_h2_norm(&k)?, "parsevalH2Squared": si_h2_norm_parseval(&k)? })))
        }
    }
}

fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => v.to_string(),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", v, &mut rows);
            let mut out = String::from("key,value");
            for (k, v) in rows {
                let _ = write!(out, "\n{},{}", csv_field(&k), csv_field(&v));
            }
            out
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
