//! Command-line driver for `adiabat`.
//!
//! A job is described by a [`JobConfig`]. Values are resolved in this order, later
//! sources winning: built-in defaults, the JSON document given by `--config`, then
//! command-line flags. The subcommand on the command line overrides `command` in the
//! config. Relative paths inside a config file are resolved against the file's
//! directory.
//!
//! Every run writes `report.json` (deterministic for a fixed config and seed) and
//! `metadata.json` (timestamps, thread count) into the output directory.
//!
//! Exit codes: 0 success, 1 failed assertion or numeric failure, 2 usage or config error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assoc::{self, MonodromyAtlas, PathParams};
use crate::bridges::{self, IsotropicCurve, Rect};
use crate::curvature;
use crate::error::Error;
use crate::fixtures;
use crate::flow::{self, FlowParams, FlowStatus};
use crate::grid::{GridShape, ScalarGrid};
use crate::io::{self, Encoding};
use crate::lattice::{self, ReflectionDatum};
use crate::sections::{self, SectionGrid};
use crate::suites::{self, Check};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    VerifyAlgebra,
    LatticeScan,
    SolveMaximal,
    MaBridge,
    TorusG2,
    Weierstrass,
    GradientPath,
    Report,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::VerifyAlgebra => "verify-algebra",
            CommandKind::LatticeScan => "lattice-scan",
            CommandKind::SolveMaximal => "solve-maximal",
            CommandKind::MaBridge => "ma-bridge",
            CommandKind::TorusG2 => "torus-g2",
            CommandKind::Weierstrass => "weierstrass",
            CommandKind::GradientPath => "gradient-path",
            CommandKind::Report => "report",
        }
    }
}

/// Both ends of a gradient path for the homological matching test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnds {
    pub start: ReflectionDatum,
    pub end: ReflectionDatum,
}

/// Full job description. Every field is optional in the JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub command: Option<CommandKind>,
    /// Input files: a section or scalar grid header, a curve, or reports for `report`.
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Cap on worker threads; 0 uses all cores.
    pub threads: usize,
    /// Sample count for `verify-algebra`.
    pub samples: usize,
    /// Built-in input used when `inputs` is empty.
    pub fixture: Option<String>,
    /// Nodes per side of fixture grids.
    pub n: Option<usize>,
    /// Size of the fixture perturbation.
    pub amplitude: f64,
    pub flow: FlowParams,
    pub height_bound: i64,
    /// Assertion tolerance where the subcommand has one (see the README).
    pub tolerance: Option<f64>,
    /// Right-hand side `C` of `det Hess F = C`.
    pub constant: Option<f64>,
    pub encoding: Encoding,
    pub rect: Rect,
    pub path: PathParams,
    /// Class `c` for the gradient path, as a target-space vector.
    pub c: Option<Vec<f64>>,
    pub start: Option<Vec<f64>>,
    pub atlas: MonodromyAtlas,
    pub ends: Option<PathEnds>,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            command: None,
            inputs: Vec::new(),
            output_dir: PathBuf::from("adiabat-out"),
            seed: 1,
            threads: 0,
            samples: 1000,
            fixture: None,
            n: None,
            amplitude: 0.1,
            flow: FlowParams::default(),
            height_bound: 2,
            tolerance: None,
            constant: None,
            encoding: Encoding::Binary,
            rect: Rect { re0: -0.5, re1: 0.5, im0: -0.5, im1: 0.5 },
            path: PathParams::default(),
            c: None,
            start: None,
            atlas: MonodromyAtlas::default(),
            ends: None,
        }
    }
}

impl JobConfig {
    /// Parses a config document; errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.inputs.iter_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("error[{code}]: {err}", code = .0.code(), err = .0)]
    Numeric(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_FAIL,
        }
    }
}

fn input_error(path: &Path, e: Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "adiabat", version, about = "Positive 3-forms, lattice monodromy and maximal sections")]
pub struct Cli {
    /// JSON job config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Cap on worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short = 'o', global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args, Default)]
pub struct InputArgs {
    /// Input file (grid header, curve, or report).
    #[arg(long = "input", short = 'i')]
    pub inputs: Vec<PathBuf>,
    /// Built-in input used when no file is given.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Nodes per side of fixture grids.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct FlowArgs {
    /// Relative stop threshold on max ‖m⊥‖.
    #[arg(long)]
    pub stop_mnorm: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub dt_safety: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Seeded identity suites for forms, hyper, curvature, sections and the lattice.
    VerifyAlgebra {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Enumerate −2 classes; with an input section, check it avoids them.
    LatticeScan {
        #[arg(long)]
        height_bound: Option<i64>,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Flow a positive section to a maximal one.
    SolveMaximal {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        encoding: Option<Encoding>,
    },
    /// Compare the Monge-Ampère residual with the maximal-graph residual.
    MaBridge {
        #[command(flatten)]
        input: InputArgs,
        /// Right-hand side of det Hess F = C.
        #[arg(long)]
        constant: Option<f64>,
    },
    /// Assemble the torus-fibred 3-form from a potential and measure its torsion.
    TorusG2 {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        flow: FlowArgs,
    },
    /// Maximal surface from an isotropic curve, with Gauss-map checks.
    Weierstrass {
        #[command(flatten)]
        input: InputArgs,
        /// re0,re1,im0,im1
        #[arg(long, value_delimiter = ',', num_args = 4)]
        rect: Option<Vec<f64>>,
        #[arg(long)]
        encoding: Option<Encoding>,
    },
    /// Trace a gradient path of c·h.
    GradientPath {
        #[command(flatten)]
        input: InputArgs,
        /// Class as comma-separated target coordinates.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        c: Option<Vec<f64>>,
        /// Start point as comma-separated base coordinates.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        start: Option<Vec<f64>>,
        #[arg(long)]
        step: Option<f64>,
    },
    /// Aggregate report.json files into CSV tables.
    Report {
        /// Report files or directories containing them.
        #[arg(required = false)]
        inputs: Vec<PathBuf>,
    },
}

impl InputArgs {
    fn apply(self, cfg: &mut JobConfig) {
        if !self.inputs.is_empty() {
            cfg.inputs = self.inputs;
        }
        set(&mut cfg.fixture, self.fixture.map(Some));
        set(&mut cfg.n, self.n.map(Some));
        set(&mut cfg.amplitude, self.amplitude);
        set(&mut cfg.tolerance, self.tolerance.map(Some));
    }
}

impl FlowArgs {
    fn apply(self, cfg: &mut JobConfig) {
        set(&mut cfg.flow.stop_mnorm, self.stop_mnorm);
        set(&mut cfg.flow.max_steps, self.max_steps);
        set(&mut cfg.flow.dt_safety, self.dt_safety);
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::VerifyAlgebra { .. } => CommandKind::VerifyAlgebra,
            Command::LatticeScan { .. } => CommandKind::LatticeScan,
            Command::SolveMaximal { .. } => CommandKind::SolveMaximal,
            Command::MaBridge { .. } => CommandKind::MaBridge,
            Command::TorusG2 { .. } => CommandKind::TorusG2,
            Command::Weierstrass { .. } => CommandKind::Weierstrass,
            Command::GradientPath { .. } => CommandKind::GradientPath,
            Command::Report { .. } => CommandKind::Report,
        }
    }

    fn apply(self, cfg: &mut JobConfig) {
        cfg.command = Some(self.kind());
        match self {
            Command::VerifyAlgebra { samples } => set(&mut cfg.samples, samples),
            Command::LatticeScan { height_bound, input } => {
                set(&mut cfg.height_bound, height_bound);
                input.apply(cfg);
            }
            Command::SolveMaximal { input, flow, encoding } => {
                input.apply(cfg);
                flow.apply(cfg);
                set(&mut cfg.encoding, encoding);
            }
            Command::MaBridge { input, constant } => {
                input.apply(cfg);
                set(&mut cfg.constant, constant.map(Some));
            }
            Command::TorusG2 { input, flow } => {
                input.apply(cfg);
                flow.apply(cfg);
            }
            Command::Weierstrass { input, rect, encoding } => {
                input.apply(cfg);
                if let Some(r) = rect {
                    cfg.rect = Rect { re0: r[0], re1: r[1], im0: r[2], im1: r[3] };
                }
                set(&mut cfg.encoding, encoding);
            }
            Command::GradientPath { input, c, start, step } => {
                input.apply(cfg);
                set(&mut cfg.c, c.map(Some));
                set(&mut cfg.start, start.map(Some));
                set(&mut cfg.path.step, step);
            }
            Command::Report { inputs } => {
                if !inputs.is_empty() {
                    cfg.inputs = inputs;
                }
            }
        }
    }
}

/// Merges defaults, the config file and the flags into one job.
pub fn resolve(cli: Cli) -> Result<JobConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => JobConfig::load(p)?,
        None => JobConfig::default(),
    };
    set(&mut cfg.threads, cli.threads);
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.output_dir, cli.output_dir);
    if let Some(c) = cli.command {
        c.apply(&mut cfg);
    }
    if cfg.command.is_none() {
        return Err(CliError::Usage("no subcommand given on the command line or in the config".into()));
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &JobConfig) -> Result<(), CliError> {
    for p in &cfg.inputs {
        if !p.exists() {
            return Err(CliError::Config(format!("input {} does not exist", p.display())));
        }
    }
    cfg.flow.validate().map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.samples == 0 {
        return Err(CliError::Config("samples must be positive".into()));
    }
    if cfg.n.is_some_and(|n| n < 3) {
        return Err(CliError::Config("n must be at least 3".into()));
    }
    if !(cfg.path.step > 0.0) {
        return Err(CliError::Config("path step must be positive".into()));
    }
    if cfg.height_bound < 0 {
        return Err(CliError::Config("height_bound must be non-negative".into()));
    }
    Ok(())
}

/// Deterministic content of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: CommandKind,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub data: Value,
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

struct Outcome {
    checks: Vec<Check>,
    data: Value,
}

fn flag(name: &str, ok: bool) -> Check {
    Check::at_most(name, 1, if ok { 0.0 } else { 1.0 }, 0.0)
}

fn fixture_name<'a>(cfg: &'a JobConfig, default: &'a str) -> &'a str {
    cfg.fixture.as_deref().unwrap_or(default)
}

fn unknown_fixture(name: &str, known: &[&str]) -> CliError {
    CliError::Config(format!("unknown fixture {name:?}; expected one of {known:?}"))
}

fn load_section(cfg: &JobConfig, default_fixture: &str, default_n: usize) -> Result<(SectionGrid, String), CliError> {
    if let Some(p) = cfg.inputs.first() {
        let h = io::read_section(p).map_err(|e| input_error(p, e))?;
        return Ok((h, p.display().to_string()));
    }
    let n = cfg.n.unwrap_or(default_n);
    let name = fixture_name(cfg, default_fixture);
    let h = match name {
        "perturbed-quadratic" => fixtures::perturbed_quadratic_graph(n, &fixtures::fixture_quadratic(), cfg.amplitude)?,
        "radial" => fixtures::radial_seed(n, cfg.amplitude)?,
        "radial-lattice" => fixtures::lattice_radial_seed(n, cfg.amplitude)?,
        _ => return Err(unknown_fixture(name, &["perturbed-quadratic", "radial", "radial-lattice"])),
    };
    Ok((h, format!("fixture:{name}")))
}

fn load_scalar(cfg: &JobConfig, default_fixture: &str, default_n: usize) -> Result<(ScalarGrid, String, f64), CliError> {
    if let Some(p) = cfg.inputs.first() {
        let f = io::read_scalar(p).map_err(|e| input_error(p, e))?;
        return Ok((f, p.display().to_string(), cfg.constant.unwrap_or(1.0)));
    }
    let n = cfg.n.unwrap_or(default_n);
    let name = fixture_name(cfg, default_fixture);
    let (f, c) = match name {
        "quadratic" => {
            let a = fixtures::fixture_quadratic();
            (bridges::quadratic_potential(GridShape::unit_box(3, n)?, &a), a.determinant())
        }
        "non-ma" => (fixtures::non_ma_potential(n)?, 1.0),
        "radial" => (ScalarGrid::from_fn(GridShape::cube(3, n, 1.0, 1.0)?, bridges::radial::potential), 1.0),
        "flowed" => {
            let hs = 1.0 / (n as f64 - 1.0);
            let params = FlowParams { stop_mnorm: 0.1 * hs * hs, ..cfg.flow.clone() };
            (bridges::flow_ma_potential(&bridges::radial_graph(n)?, &params)?.0, 1.0)
        }
        _ => return Err(unknown_fixture(name, &["quadratic", "non-ma", "radial", "flowed"])),
    };
    Ok((f, format!("fixture:{name}"), cfg.constant.unwrap_or(c)))
}

fn out_path(cfg: &JobConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn verify_algebra(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let checks = suites::verify_algebra(cfg.seed, cfg.samples)?;
    Ok(Outcome { checks, data: json!({ "samples": cfg.samples }) })
}

fn lattice_scan(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let scan = lattice::minus_two_classes(cfg.height_bound);
    let mut checks = suites::lattice_suite(&mut suites::rng(cfg.seed), 100)?;
    let bad = scan.vectors.iter().filter(|v| lattice::pairing_int(v, v) != -2).count();
    checks.push(Check::at_most("scanned_classes_not_minus_two", scan.vectors.len(), bad as f64, 0.0));
    let mut w = std::io::BufWriter::new(fs::File::create(out_path(cfg, "classes.jsonl")).map_err(Error::from)?);
    io::write_jsonl(&mut w, &scan.vectors)?;
    let mut data = json!({ "height_bound": scan.height_bound, "domain": scan.domain, "classes": scan.vectors.len() });
    if let Some(p) = cfg.inputs.first() {
        let h = io::read_section(p).map_err(|e| input_error(p, e))?;
        if h.target_dim() != lattice::RANK {
            return Err(CliError::Config(format!("{}: section must take values in the rank-{} lattice space", p.display(), lattice::RANK)));
        }
        let tol = cfg.tolerance.unwrap_or(1e-8);
        let r = sections::avoids_minus_two(&h, cfg.height_bound, tol)?;
        checks.push(Check::at_most("section_nodes_meeting_minus_two", r.nodes_checked, r.flagged.len() as f64, 0.0));
        data["avoidance"] = json!({ "input": p.display().to_string(), "tolerance": tol, "nodes_checked": r.nodes_checked, "flagged": r.flagged });
    }
    Ok(Outcome { checks, data })
}

fn solve_maximal(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let (h0, source) = load_section(cfg, "perturbed-quadratic", 17)?;
    let fr = flow::mcf_run(&h0, &cfg.flow)?;
    let mut trace = std::io::BufWriter::new(fs::File::create(out_path(cfg, "trace.csv")).map_err(Error::from)?);
    io::write_trace_csv(&mut trace, &fr.trace)?;
    io::write_section(&out_path(cfg, "section.json"), &fr.state, cfg.encoding)?;
    let hs = fr.state.grid.hstep;
    let mut checks = vec![
        flag("converged", fr.status == FlowStatus::Converged),
        Check::at_most("volume_worst_drop", fr.trace.accepted, fr.trace.worst_volume_drop, flow::VOLUME_SLACK),
    ];
    let mut data = json!({
        "source": source,
        "status": fr.status,
        "accepted": fr.trace.accepted,
        "rejected": fr.trace.rejected,
        "initial_mnorm": fr.initial_mnorm,
        "final_mnorm": fr.final_mnorm,
        "hstep": hs,
        "volume_initial": fr.trace.records.first().map(|r| r.volume),
        "volume_final": fr.trace.records.last().map(|r| r.volume),
    });
    if cfg.inputs.is_empty() && fixture_name(cfg, "perturbed-quadratic") == "perturbed-quadratic" {
        let d = flow::distance_to_span(&fr.state, &fixtures::quadratic_graph_span(&fixtures::fixture_quadratic()));
        checks.push(Check::at_most("distance_to_exact_graph", 1, d, cfg.tolerance.unwrap_or(5.0 * hs * hs)));
    }
    if fr.state.base_dim() == 3 {
        let r = curvature::induced_ricci(&fr.state)?;
        data["min_ricci_eigenvalue"] = json!(r.min_eigenvalue);
    }
    Ok(Outcome { checks, data })
}

fn ma_bridge(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let (f, source, c) = load_scalar(cfg, "quadratic", 9)?;
    let (ma, m) = bridges::ma_maximal_crosscheck(&f, c)?;
    let tol = cfg.tolerance.unwrap_or(1e-8);
    // the two residuals must agree on whether F is a solution
    let checks = vec![flag("ma_and_maximal_agree", (ma <= tol) == (m <= tol))];
    Ok(Outcome { checks, data: json!({ "source": source, "constant": c, "tolerance": tol, "ma_residual": ma, "maximal_residual": m }) })
}

fn torus_g2(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let (f, source, _) = load_scalar(cfg, "quadratic", 9)?;
    let r = bridges::torus_g2_assemble(&f)?;
    let mut checks = vec![Check::at_most("dphi_residual", r.nodes, r.dphi_residual, 1e-13)];
    if let Some(t) = cfg.tolerance {
        checks.push(Check::at_most("dstar_residual", r.nodes, r.dstar_residual, t));
    }
    Ok(Outcome { checks, data: json!({ "source": source, "hstep": f.grid.hstep, "report": r }) })
}

fn weierstrass(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let (curve, source) = match cfg.inputs.first() {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            let c: IsotropicCurve = serde_json::from_str(&text).map_err(|e| input_error(p, e.into()))?;
            (c, p.display().to_string())
        }
        None => (IsotropicCurve::q1_fixture(), "fixture:q1".to_string()),
    };
    let n = cfg.n.unwrap_or(33);
    let s = bridges::weierstrass(&curve, cfg.rect, n)?;
    io::write_section(&out_path(cfg, "surface.json"), &s, cfg.encoding)?;
    let mc = sections::mean_curvature(&s)?;
    let gm = bridges::gauss_map(&s)?;
    let cr = bridges::gauss_cr_residual(&s, 0)?;
    let iso = bridges::isotropy_residual(&curve);
    let checks = vec![
        Check::at_most("isotropy_residual", 1, iso, cfg.tolerance.unwrap_or(1e-10)),
        Check::at_most("gauss_quadric_residual", gm.nodes.len(), gm.quadric_residual, 1e-10),
    ];
    let data = json!({
        "source": source,
        "q": curve.q,
        "rect": cfg.rect,
        "n": n,
        "hstep": s.grid.hstep,
        "mean_curvature_max": mc.max_norm,
        "cauchy_riemann_residual": cr,
    });
    Ok(Outcome { checks, data })
}

fn gradient_path(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let (h, source) = load_section(cfg, "radial", 9)?;
    let dim = h.target_dim();
    let c = match &cfg.c {
        Some(c) => c.clone(),
        None if dim == 6 => vec![1.0, 0.5, 0.0, 0.0, 0.3, 0.0],
        None if dim == lattice::RANK => fixtures::fixture_delta().to_real(),
        None => return Err(CliError::Config(format!("no default class for target dimension {dim}; set c"))),
    };
    if c.len() != dim {
        return Err(CliError::Config(format!("c has {} entries, target dimension is {dim}", c.len())));
    }
    let g = &h.grid;
    let start = match &cfg.start {
        Some(s) => s.clone(),
        None => (0..g.base_dim()).map(|a| g.origin[a] + 0.5 * g.hstep * (g.shape[a] - 1) as f64).collect(),
    };
    let p = assoc::gradient_path(&h, &c, &start, &cfg.path)?;
    let lines = p.nodes.iter().zip(&p.profile).enumerate().map(|(k, (x, v))| json!({ "k": k, "x": x, "value": v }));
    let mut w = std::io::BufWriter::new(fs::File::create(out_path(cfg, "path.jsonl")).map_err(Error::from)?);
    io::write_jsonl(&mut w, lines)?;
    let scale = p.profile.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let drop = p.profile.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
    let mut checks = vec![Check::at_most("profile_worst_drop", p.profile.len(), drop, 1e-12 * scale)];
    let mut data = json!({
        "source": source,
        "c": c,
        "start": start,
        "end": p.nodes.last(),
        "nodes": p.nodes.len(),
        "stop": p.stop,
        "end_value": p.profile.last(),
        "transverse_hessian": p.transverse_hessian,
    });
    if let Some(ends) = &cfg.ends {
        let ok = assoc::matching_check(&p, &ends.start, &ends.end, &cfg.atlas)?;
        let crossed: Vec<&str> = cfg.atlas.crossings(&p).iter().map(|w| w.name.as_str()).collect();
        checks.push(flag("homological_matching", ok));
        data["walls_crossed"] = json!(crossed);
    }
    Ok(Outcome { checks, data })
}

fn collect_reports(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let direct = p.join("report.json");
            if direct.is_file() {
                out.push(direct);
            }
            let mut subs: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path().join("report.json")))
                .filter(|r| r.is_file())
                .collect();
            subs.sort();
            out.extend(subs);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("report: no report.json files found in the inputs".into()));
    }
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Null => {}
        Value::String(s) => out.push((prefix.into(), s.clone())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn report(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let files = collect_reports(&cfg.inputs)?;
    let mut checks_csv = String::from("source,command,name,samples,value,bound,tolerance,pass\n");
    let mut data_csv = String::from("source,command,key,value\n");
    let mut failed = 0usize;
    for f in &files {
        let text = fs::read_to_string(f).map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
        let r: Report = serde_json::from_str(&text).map_err(|e| input_error(f, e.into()))?;
        let src = csv_field(&f.display().to_string());
        let cmd = r.command.name();
        failed += usize::from(!r.pass);
        for c in &r.checks {
            let bound = match c.bound {
                suites::Bound::AtMost => "at_most",
                suites::Bound::AtLeast => "at_least",
            };
            checks_csv += &format!("{src},{cmd},{},{},{:e},{bound},{:e},{}\n", csv_field(&c.name), c.samples, c.value, c.tolerance, c.pass);
        }
        let mut rows = Vec::new();
        flatten("", &r.data, &mut rows);
        if let Some(e) = &r.error {
            rows.push(("error.code".into(), e.code.clone()));
        }
        for (k, v) in rows {
            data_csv += &format!("{src},{cmd},{},{}\n", csv_field(&k), csv_field(&v));
        }
    }
    fs::write(out_path(cfg, "checks.csv"), checks_csv).map_err(Error::from)?;
    fs::write(out_path(cfg, "data.csv"), data_csv).map_err(Error::from)?;
    let checks = vec![Check::at_most("failed_input_reports", files.len(), failed as f64, 0.0)];
    let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
    Ok(Outcome { checks, data: json!({ "reports": names }) })
}

fn execute(kind: CommandKind, cfg: &JobConfig) -> Result<Outcome, CliError> {
    match kind {
        CommandKind::VerifyAlgebra => verify_algebra(cfg),
        CommandKind::LatticeScan => lattice_scan(cfg),
        CommandKind::SolveMaximal => solve_maximal(cfg),
        CommandKind::MaBridge => ma_bridge(cfg),
        CommandKind::TorusG2 => torus_g2(cfg),
        CommandKind::Weierstrass => weierstrass(cfg),
        CommandKind::GradientPath => gradient_path(cfg),
        CommandKind::Report => report(cfg),
    }
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::Numeric(e.into()))
}

/// Runs a resolved job; returns the report that was written.
pub fn run(cfg: &JobConfig) -> Result<Report, CliError> {
    let kind = cfg.command.ok_or_else(|| CliError::Usage("no subcommand".into()))?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::Config(format!("{}: {e}", cfg.output_dir.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let result = pool.install(|| execute(kind, cfg));
    let report = match result {
        Ok(o) => Report { command: kind, seed: cfg.seed, pass: o.checks.iter().all(|c| c.pass), checks: o.checks, data: o.data, error: None },
        Err(CliError::Numeric(e)) => Report {
            command: kind,
            seed: cfg.seed,
            pass: false,
            checks: Vec::new(),
            data: Value::Null,
            error: Some(ErrorInfo { code: e.code().into(), message: e.to_string() }),
        },
        Err(e) => return Err(e),
    };
    write_json(&out_path(cfg, "report.json"), &report)?;
    let meta = json!({
        "command": kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "started_unix_seconds": started,
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "threads": pool.current_num_threads(),
    });
    write_json(&out_path(cfg, "metadata.json"), &meta)?;
    Ok(report)
}

/// Entry point used by the binary: parses arguments, runs, prints a summary and
/// returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match run(&cfg) {
        Ok(r) => {
            for c in &r.checks {
                println!("{} {} = {:e} (tolerance {:e})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.tolerance);
            }
            if let Some(e) = &r.error {
                eprintln!("error[{}]: {}", e.code, e.message);
            }
            println!("report: {}", out_path(&cfg, "report.json").display());
            if r.pass {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
