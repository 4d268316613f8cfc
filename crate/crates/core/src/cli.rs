//! Subcommand dispatch. Every command returns a deterministic JSON report with its inputs,
//! results and per-check verdicts; the exit status is 0 exactly when all checks pass.

use crate::coinvariants::{
    ambient_term_matrices, compute_block, matrix_json, report, BlockMode, BlockSpace, CoinvariantError, MarkedConfiguration,
};
use crate::config::{build_algebra, ConfigError, ModuleConfig, Resolved, RunConfig};
use crate::connection::{cybe_residual, flatness_check, ConnectionError, TermMatrices};
use crate::current_algebra::Gen;
use crate::lie_core::{AlgebraSpec, AlgebraType, LieAlgebra};
use crate::rational::{format_q, parse_q, Q};
use crate::singular_module::{
    build_affine_slice, build_finite_module, conformal_weight, coroot_pairing, cyclic_vector, describe_monomial, describe_vector, obstruction_determinant,
    shapovalov_block, sugawara_apply, sugawara_commutator_check, sugawara_eigencheck, weights_up_to_height, ModuleError,
    SingularCharacter, SingularModule,
};
use crate::transport::{integrate, max_abs_diff, CMatrix, FloatConnection, PathSpec, TransportError};
use crate::weights::dim_weight_space;
use clap::{Parser, Subcommand, ValueEnum};
use num::complex::Complex64;
use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Parser, Serialize)]
#[command(name = "wildkz", version, about = "Singular modules for truncated current algebras and the irregular KZ connection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub emit: Option<PathBuf>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Height cutoff for weight slices.
    #[arg(long, global = true)]
    pub height: Option<usize>,
    /// Total negative degree of affine slices.
    #[arg(long = "neg-degree", global = true)]
    pub neg_degree: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    RaisingQuotient,
    LoweringQuotient,
    FullTensor,
    NoRelations,
}

impl From<ModeArg> for BlockMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::RaisingQuotient => BlockMode::RaisingQuotient,
            ModeArg::LoweringQuotient => BlockMode::LoweringQuotient,
            ModeArg::FullTensor => BlockMode::FullTensor,
            ModeArg::NoRelations => BlockMode::NoRelations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// PBW weight-space dimensions against the closed formula over `ν` of height ≤ --height.
    Dims {
        #[arg(long, default_value = "A1")]
        algebra: String,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Basis, weight table and generator matrices of a module slice.
    ModuleBuild {
        #[arg(long, default_value_t = 0)]
        point: usize,
    },
    /// Sugawara eigenvalues on `w` and the `L_{−1}` commutator on an affine slice.
    SugawaraCheck {
        #[arg(long, default_value_t = 0)]
        point: usize,
    },
    /// Obstruction determinants at `ŵ = w` and Shapovalov block determinants.
    Shapovalov {
        #[arg(long, default_value_t = 0)]
        point: usize,
    },
    /// Exact classical Yang–Baxter residuals at random rational triples.
    CybeCheck {
        #[arg(long, default_value = "A1")]
        algebra: String,
        #[arg(long, default_value_t = 2)]
        p: usize,
    },
    /// Exact flatness of the Hamiltonians on the ambient slice and on the block.
    FlatnessCheck {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Dimension and basis of the conformal block.
    Coinvariants {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Reduced Hamiltonians and dilation operators at given times.
    Connection {
        /// Comma-separated rational times; defaults to the configured times.
        #[arg(long)]
        at: Option<String>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Numerical parallel transport along a path.
    Transport {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        v0: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dims { .. } => "dims",
            Command::ModuleBuild { .. } => "module-build",
            Command::SugawaraCheck { .. } => "sugawara-check",
            Command::Shapovalov { .. } => "shapovalov",
            Command::CybeCheck { .. } => "cybe-check",
            Command::FlatnessCheck { .. } => "flatness-check",
            Command::Coinvariants { .. } => "coinvariants",
            Command::Connection { .. } => "connection",
            Command::Transport { .. } => "transport",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    CriticalLevel(String),
    #[error("marked points {0} and {1} share a time")]
    CoincidentTimes(usize, usize),
    #[error("{0}")]
    Computation(String),
    #[error("{0}")]
    Io(String),
}

pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_CRITICAL_LEVEL: i32 = 3;
pub const EXIT_COINCIDENT_TIMES: i32 = 4;
pub const EXIT_COMPUTATION: i32 = 5;
pub const EXIT_IO: i32 = 6;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::CriticalLevel(_) => EXIT_CRITICAL_LEVEL,
            CliError::CoincidentTimes(..) => EXIT_COINCIDENT_TIMES,
            CliError::Computation(_) => EXIT_COMPUTATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "Schema",
            CliError::CriticalLevel(_) => "CriticalLevel",
            CliError::CoincidentTimes(..) => "CoincidentTimes",
            CliError::Computation(_) => "Computation",
            CliError::Io(_) => "Io",
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Schema(s) => CliError::Schema(s),
            ConfigError::CriticalLevel(_) => CliError::CriticalLevel(e.to_string()),
            ConfigError::CoincidentTimes(i, j) => CliError::CoincidentTimes(i, j),
        }
    }
}

impl From<ModuleError> for CliError {
    fn from(e: ModuleError) -> Self {
        match e {
            ModuleError::CriticalLevel => CliError::CriticalLevel(e.to_string()),
            ModuleError::InvalidCharacter(s) => CliError::Schema(s),
            other => CliError::Computation(other.to_string()),
        }
    }
}

impl From<ConnectionError> for CliError {
    fn from(e: ConnectionError) -> Self {
        match e {
            ConnectionError::CriticalLevel => CliError::CriticalLevel(e.to_string()),
            ConnectionError::CoincidentTimes(i, j) => CliError::CoincidentTimes(i, j),
            other => CliError::Computation(other.to_string()),
        }
    }
}

impl From<CoinvariantError> for CliError {
    fn from(e: CoinvariantError) -> Self {
        match e {
            CoinvariantError::CoincidentTimes(i, j) => CliError::CoincidentTimes(i, j),
            CoinvariantError::Module(m) => m.into(),
            CoinvariantError::Connection(c) => c.into(),
            other => CliError::Computation(other.to_string()),
        }
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::DimensionMismatch { .. } | TransportError::InvalidTolerance => CliError::Schema(e.to_string()),
            other => CliError::Computation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

fn check(name: impl Into<String>, pass: bool) -> Check {
    Check { name: name.into(), pass }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Outcome of one invocation: the document to print and the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub document: String,
}

/// Parses the process arguments, runs the command and writes the report.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    configure_threads();
    let outcome = run(&cli);
    let written = match &cli.emit {
        Some(path) => std::fs::write(path, &outcome.document).map_err(|e| e.to_string()),
        None => {
            print!("{}", outcome.document);
            Ok(())
        }
    };
    match written {
        Ok(()) => outcome.exit_code,
        Err(e) => {
            eprintln!("cannot write report: {e}");
            EXIT_IO
        }
    }
}

/// Caps the global rayon pool at `WILDKZ_THREADS` when set.
fn configure_threads() {
    if let Some(n) = std::env::var("WILDKZ_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        // Fails only when the pool already exists, which leaves the earlier setting in force.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let inputs = json!({ "args": cli, "config": read_config_value(cli).unwrap_or(Value::Null) });
    let result = dispatch(cli);
    match result {
        Ok((results, checks)) => {
            let pass = checks.iter().all(|c| c.pass);
            let report = Report { command: cli.command.name(), inputs, results, checks, pass };
            let document = match (&cli.command, &report.results) {
                (Command::Dims { format: Format::Csv, .. }, results) => dims_csv(results),
                _ => to_document(&report),
            };
            Outcome { exit_code: if pass { 0 } else { EXIT_CHECK_FAILED }, document }
        }
        Err(e) => {
            let doc = json!({
                "command": cli.command.name(),
                "inputs": inputs,
                "error": { "kind": e.kind(), "message": e.to_string() },
            });
            Outcome { exit_code: e.exit_code(), document: to_document(&doc) }
        }
    }
}

fn to_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_config_value(cli: &Cli) -> Option<Value> {
    let text = std::fs::read_to_string(cli.config.as_ref()?).ok()?;
    serde_json::from_str(&text).ok()
}

fn config_text(cli: &Cli) -> Result<String, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Schema(format!("{} needs --config", cli.command.name())))?;
    read_text(path)
}

fn run_config(cli: &Cli) -> Result<RunConfig, CliError> {
    RunConfig::from_json(&config_text(cli)?).map_err(CliError::from)
}

fn module_config(cli: &Cli) -> Result<ModuleConfig, CliError> {
    serde_json::from_str(&config_text(cli)?).map_err(|e| CliError::Schema(e.to_string()))
}

type Outputs = (Value, Vec<Check>);

fn dispatch(cli: &Cli) -> Result<Outputs, CliError> {
    match &cli.command {
        Command::Dims { algebra, p, .. } => dims(&parse_algebra(algebra)?, *p, cli.height.unwrap_or(4)),
        Command::ModuleBuild { point } => {
            let (alg, chi) = module_config(cli)?.character(*point)?;
            module_build(alg, chi, cli.height.unwrap_or(2), cli.neg_degree.unwrap_or(0))
        }
        Command::SugawaraCheck { point } => {
            let (alg, chi) = module_config(cli)?.character(*point)?;
            sugawara(alg, chi, cli.height.unwrap_or(2), cli.neg_degree.unwrap_or(1))
        }
        Command::Shapovalov { point } => {
            let (alg, chi) = module_config(cli)?.character(*point)?;
            shapovalov(alg, chi, cli.height.unwrap_or(2))
        }
        Command::CybeCheck { algebra, p } => {
            let alg = parse_algebra(algebra)?;
            cybe(&alg, *p, cli.samples.unwrap_or(6 * p + 1), cli.seed.unwrap_or(0))
        }
        Command::FlatnessCheck { mode } => {
            let cfg = run_config(cli)?;
            let resolved = cfg.resolve()?;
            let samples = cli.samples.unwrap_or(cfg.samples);
            let seed = cli.seed.unwrap_or(cfg.seed);
            flatness(&resolved.marked, cutoff(cli, &cfg), *mode, samples, seed)
        }
        Command::Coinvariants { mode } => {
            let cfg = run_config(cli)?;
            coinvariants(&cfg.resolve()?.marked, cutoff(cli, &cfg), *mode)
        }
        Command::Connection { at, mode } => {
            let cfg = run_config(cli)?;
            let resolved = cfg.resolve()?;
            let times = match at {
                Some(list) => parse_times(list, resolved.marked.finite_points())?,
                None if resolved.exact_times => resolved.marked.times.clone(),
                None => return Err(CliError::Schema("configured times are not real; pass --at".into())),
            };
            connection(&resolved.marked, cutoff(cli, &cfg), *mode, &times)
        }
        Command::Transport { path, v0, mode } => {
            let cfg = run_config(cli)?;
            let resolved = cfg.resolve()?;
            let path = path_spec(&read_text(path)?, &resolved)?;
            let v0 = v0.as_deref().map(|p| read_text(p).and_then(|t| parse_vector(&t))).transpose()?;
            transport(&resolved.marked, cutoff(cli, &cfg), *mode, &path, v0.as_deref())
        }
    }
}

fn cutoff(cli: &Cli, cfg: &RunConfig) -> usize {
    cli.height.unwrap_or(cfg.truncation.height)
}

/// `"A1"`, `"A2"`, … (also `"sl2"`, `"sl3"`).
pub fn parse_algebra(text: &str) -> Result<Arc<LieAlgebra>, CliError> {
    let t = text.trim();
    let bad = || CliError::Schema(format!("unknown algebra {text:?}"));
    let rank = if let Some(n) = t.strip_prefix("sl") {
        n.parse::<usize>().map_err(|_| bad())?.checked_sub(1).ok_or_else(bad)?
    } else if let Some(n) = t.strip_prefix('A') {
        n.parse::<usize>().map_err(|_| bad())?
    } else {
        return Err(bad());
    };
    Ok(build_algebra(AlgebraSpec { kind: AlgebraType::A, rank })?)
}

fn parse_times(list: &str, expected: usize) -> Result<Vec<Q>, CliError> {
    let times = list
        .split(',')
        .map(|s| parse_q(s).map_err(|e| CliError::Schema(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if times.len() != expected {
        return Err(CliError::Schema(format!("--at lists {} times, configuration has {expected} points", times.len())));
    }
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            if times[i] == times[j] {
                return Err(CliError::CoincidentTimes(i, j));
            }
        }
    }
    Ok(times)
}

/// Reads a path, filling `start` from the configured times when absent.
fn path_spec(text: &str, resolved: &Resolved) -> Result<PathSpec, CliError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("path: {e}")))?;
    if let Value::Object(map) = &mut value {
        map.entry("start").or_insert_with(|| json!(resolved.complex_times.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()));
    }
    serde_json::from_value(value).map_err(|e| CliError::Schema(format!("path: {e}")))
}

/// A JSON list whose entries are rational strings, numbers or `[re, im]` pairs.
fn parse_vector(text: &str) -> Result<Vec<Complex64>, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Schema(format!("v0: {e}")))?;
    let bad = |v: &Value| CliError::Schema(format!("v0: cannot read entry {v}"));
    let entries = value.as_array().ok_or_else(|| CliError::Schema("v0 must be a JSON list".into()))?;
    entries
        .iter()
        .map(|v| match v {
            Value::Number(n) => n.as_f64().map(|x| Complex64::new(x, 0.0)).ok_or_else(|| bad(v)),
            Value::String(s) => parse_q(s).map(|x| Complex64::new(crate::rational::to_f64(&x), 0.0)).map_err(|_| bad(v)),
            Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => Err(bad(v)),
            },
            _ => Err(bad(v)),
        })
        .collect()
}

/// Pairwise distinct nonzero rationals with small numerators and denominators.
pub fn random_times(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    let mut out: Vec<Q> = Vec::with_capacity(n);
    while out.len() < n {
        let d = rng.gen_range(1..=4i64);
        let num = rng.gen_range(-5 * d..=5 * d);
        let t = Q::new(num.into(), d.into());
        if !t.is_zero() && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

fn dims(alg: &Arc<LieAlgebra>, p: usize, height: usize) -> Result<Outputs, CliError> {
    if p == 0 {
        return Err(CliError::Schema("depth p must be at least 1".into()));
    }
    let zero = vec![Q::zero(); alg.rank()];
    let chi = SingularCharacter::new(p, zero.clone(), vec![zero; p - 1], Q::one())?;
    let module = SingularModule::new(alg.clone(), chi)?;
    let mut rows = Vec::new();
    let mut all = true;
    for nu in weights_up_to_height(alg.rank(), height) {
        let dim = module.finite_monomials(&nu).len() as u128;
        let formula = dim_weight_space(&nu, p, &alg.root_system);
        all &= dim == formula;
        rows.push(json!({ "weight": nu, "p": p, "dim": dim, "formula": formula }));
    }
    Ok((json!({ "rows": rows }), vec![check("pbw_count_matches_formula", all)]))
}

fn dims_csv(results: &Value) -> String {
    let mut out = String::from("weight,p,dim\n");
    for row in results["rows"].as_array().into_iter().flatten() {
        let weight: Vec<String> = row["weight"].as_array().into_iter().flatten().map(|x| x.to_string()).collect();
        out.push_str(&format!("{},{},{}\n", weight.join(";"), row["p"], row["dim"]));
    }
    out
}

fn module_build(alg: Arc<LieAlgebra>, chi: SingularCharacter, height: usize, neg: usize) -> Result<Outputs, CliError> {
    let p = chi.depth;
    let module = Arc::new(SingularModule::new(alg.clone(), chi)?);
    let slice = if neg == 0 { build_finite_module(module.clone(), height) } else { build_affine_slice(module.clone(), height, neg) };
    let mut generators = Vec::new();
    let mut blocks_ok = true;
    for deg in -(neg as i64)..p as i64 {
        for x in 0..alg.dim() {
            let g = Gen::new(x, deg);
            let (entries, dropped) = slice.truncated_action(g);
            blocks_ok &= slice.respects_weight_blocks(g, &entries);
            let matrix: Vec<Value> = entries.iter().map(|(r, c, v)| json!([r, c, format_q(v)])).collect();
            generators.push(json!({
                "generator": format!("{}z^{}", alg.label(x), deg),
                "entries": matrix,
                "dropped_images": dropped,
            }));
        }
    }
    let mut checks = vec![check("generators_respect_weight_blocks", blocks_ok), check("highest_weight_relations", module.highest_weight_holds())];
    if neg == 0 {
        let dims_ok = slice
            .weight_decomposition()
            .iter()
            .all(|(nu, idx)| idx.len() as u128 == dim_weight_space(nu, p, &alg.root_system));
        checks.push(check("weight_dimensions_match_formula", dims_ok));
    }
    Ok((json!({ "slice": slice.to_json(), "generators": generators }), checks))
}

fn sugawara(alg: Arc<LieAlgebra>, chi: SingularCharacter, height: usize, neg: usize) -> Result<Outputs, CliError> {
    let p = chi.depth as i64;
    let module = Arc::new(SingularModule::new(alg.clone(), chi.clone())?);
    let mut checks = Vec::new();
    let mut eigen = Vec::new();
    for n in (p - 1)..=(2 * p) {
        let c = sugawara_eigencheck(&module, n)?;
        checks.push(check(format!("eigenvalue_L{n}"), c.pass));
        eigen.push(c);
    }
    let low: Vec<Value> = (0..(p - 1).max(0))
        .map(|n| Ok(json!({ "n": n, "image": describe_vector(&alg, &sugawara_apply(&module, n, &cyclic_vector())?) })))
        .collect::<Result<_, CliError>>()?;
    let mut results = json!({ "eigenvalues": eigen, "lower_modes": low });
    if p == 1 {
        let delta = conformal_weight(&alg, &chi.lambda, &chi.kappa)?;
        let l0 = sugawara_apply(&module, 0, &cyclic_vector())?;
        let got = l0.get(&Vec::new()).cloned().unwrap_or_else(Q::zero);
        checks.push(check("conformal_weight", got == delta && l0.len() <= 1));
        results["conformal_weight"] = json!(format_q(&delta));
    }
    let slice = build_affine_slice(module, height, neg);
    checks.push(check("l_minus_one_commutator", sugawara_commutator_check(&slice)?));
    results["commutator_slice_dim"] = json!(slice.len());
    Ok((results, checks))
}

fn shapovalov(alg: Arc<LieAlgebra>, chi: SingularCharacter, height: usize) -> Result<Outputs, CliError> {
    let p = chi.depth;
    let top = chi.coefficient(p - 1).to_vec();
    let module = Arc::new(SingularModule::new(alg.clone(), chi)?);
    let mut roots = Vec::new();
    let mut consistent = true;
    for a in 0..alg.num_positive_roots() {
        let det = obstruction_determinant(&module, a, &[]);
        let pairing = coroot_pairing(&alg, &top, a);
        consistent &= det.is_zero() == pairing.is_zero();
        roots.push(json!({
            "root": alg.root_system.positive_roots[a],
            "det": format_q(&det),
            "top_pairing": format_q(&pairing),
        }));
    }
    let blocks: Vec<Value> = weights_up_to_height(alg.rank(), height)
        .into_iter()
        .map(|nu| {
            let (basis, m) = shapovalov_block(&module, &nu);
            json!({
                "nu": nu,
                "basis": basis.iter().map(|b| describe_monomial(&alg, b)).collect::<Vec<_>>(),
                "det": format_q(&m.determinant()),
            })
        })
        .collect();
    Ok((json!({ "obstruction": roots, "shapovalov_blocks": blocks }), vec![check("det_nonzero_iff_top_pairing_nonzero", consistent)]))
}

/// Degree bound of the cleared-denominator residual in the three times.
pub fn cybe_degree_bound(p: usize) -> usize {
    6 * p
}

fn cybe(alg: &LieAlgebra, p: usize, samples: usize, seed: u64) -> Result<Outputs, CliError> {
    if p == 0 {
        return Err(CliError::Schema("depth p must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<Vec<Q>> = (0..samples).map(|_| random_times(&mut rng, 3)).collect();
    let mut nonzero = Vec::new();
    for t in &triples {
        let residual = cybe_residual(alg, p, [&t[0], &t[1], &t[2]])?;
        if !residual.is_zero() {
            nonzero.push(t.iter().map(format_q).collect::<Vec<_>>());
        }
    }
    let bound = cybe_degree_bound(p);
    let results = json!({
        "p": p,
        "samples": samples,
        "degree_bound": bound,
        "triples": triples.iter().map(|t| t.iter().map(format_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "nonzero_residuals": nonzero,
    });
    Ok((results, vec![check("residual_zero", nonzero.is_empty()), check("samples_exceed_degree_bound", samples > bound)]))
}

fn block_for(cfg: &MarkedConfiguration, cutoff: usize, mode: Option<ModeArg>) -> Result<BlockSpace, CliError> {
    let mode = match mode {
        Some(m) => m.into(),
        None => cfg.default_mode()?,
    };
    Ok(compute_block(cfg, cutoff, mode)?)
}

fn ambient_and_reduced(cfg: &MarkedConfiguration, block: &BlockSpace) -> Result<(TermMatrices, TermMatrices), CliError> {
    let conn = cfg.connection(block.mode, None)?;
    let ambient = ambient_term_matrices(block, &conn)?;
    let reduced = block.reduce_terms(&ambient)?;
    Ok((ambient, reduced))
}

fn flatness(cfg: &MarkedConfiguration, cutoff: usize, mode: Option<ModeArg>, samples: usize, seed: u64) -> Result<Outputs, CliError> {
    let block = block_for(cfg, cutoff, mode)?;
    let conn = cfg.connection(block.mode, None)?;
    let ambient = ambient_term_matrices(&block, &conn)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<Q>> = (0..samples).map(|_| random_times(&mut rng, cfg.finite_points())).collect();
    let ambient_report = flatness_check(&ambient, &points)?;
    let mut checks = vec![check("ambient_flat", ambient_report.pass)];
    let reduced = block.reduce_terms(&ambient);
    checks.push(check("hamiltonians_descend", reduced.is_ok()));
    let reduced_report = match reduced {
        Ok(r) => {
            let rep = flatness_check(&r, &points)?;
            checks.push(check("block_flat", rep.pass));
            Some(rep)
        }
        Err(_) => None,
    };
    let results = json!({
        "mode": block.mode,
        "sample_times": points.iter().map(|t| t.iter().map(format_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "ambient": ambient_report,
        "block": reduced_report,
    });
    Ok((results, checks))
}

fn coinvariants(cfg: &MarkedConfiguration, cutoff: usize, mode: Option<ModeArg>) -> Result<Outputs, CliError> {
    let block = block_for(cfg, cutoff, mode)?;
    let rep = report(cfg, &block);
    let mut checks = Vec::new();
    if let Some(expected) = &rep.expected_ambient_dim {
        checks.push(check("ambient_dim_matches_formula", *expected == rep.ambient_dim.to_string()));
    }
    let descends = ambient_and_reduced(cfg, &block);
    checks.push(check("hamiltonians_descend", descends.is_ok()));
    Ok((serde_json::to_value(&rep).expect("report serializes"), checks))
}

fn connection(cfg: &MarkedConfiguration, cutoff: usize, mode: Option<ModeArg>, times: &[Q]) -> Result<Outputs, CliError> {
    let block = block_for(cfg, cutoff, mode)?;
    let (_, reduced) = ambient_and_reduced(cfg, &block)?;
    let n = cfg.finite_points();
    let hs = (0..n).map(|i| reduced.hamiltonian(i, times)).collect::<Result<Vec<_>, _>>()?;
    let dilations = (0..n).map(|i| reduced.dilation(i, times)).collect::<Result<Vec<_>, _>>()?;
    let mut commuting = true;
    for i in 0..n {
        for j in i + 1..n {
            commuting &= hs[i].commutator(&hs[j]).is_zero();
        }
    }
    let results = json!({
        "mode": block.mode,
        "times": times.iter().map(format_q).collect::<Vec<_>>(),
        "dim": reduced.dim,
        "basis_labels": block.free_columns.iter().map(|&c| block.label(&block.ambient.keys[c])).collect::<Vec<_>>(),
        "hamiltonians": hs.iter().map(matrix_json).collect::<Vec<_>>(),
        "dilations": dilations.iter().map(matrix_json).collect::<Vec<_>>(),
    });
    Ok((results, vec![check("hamiltonians_commute", commuting)]))
}

fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

/// Tolerance for the reversal and Liouville residuals of a transport.
pub const TRANSPORT_TOLERANCE: f64 = 1e-8;

fn transport(
    cfg: &MarkedConfiguration,
    cutoff: usize,
    mode: Option<ModeArg>,
    path: &PathSpec,
    v0: Option<&[Complex64]>,
) -> Result<Outputs, CliError> {
    let block = block_for(cfg, cutoff, mode)?;
    let (_, reduced) = ambient_and_reduced(cfg, &block)?;
    let conn = FloatConnection::new(&reduced);
    if let Some(v) = v0 {
        if v.len() != conn.dim {
            return Err(CliError::Schema(format!("v0 has {} entries, block has dimension {}", v.len(), conn.dim)));
        }
    }
    let forward = integrate(path, &conn)?;
    let back = integrate(&path.reversed(), &conn)?;
    let identity = CMatrix::identity(conn.dim, conn.dim);
    let reversal = max_abs_diff(&(&back.matrix * &forward.matrix), &identity);
    let summary = forward.summary();
    let det = Complex64::new(summary.det[0], summary.det[1]);
    let oracle = Complex64::new(summary.exp_trace_integral[0], summary.exp_trace_integral[1]);
    let liouville = (det - oracle).norm() / oracle.norm().max(1.0);
    let final_vector = v0.map(|v| {
        let out = &forward.matrix * nalgebra::DVector::from_column_slice(v);
        out.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()
    });
    let results = json!({
        "mode": block.mode,
        "dim": conn.dim,
        "basis_labels": block.free_columns.iter().map(|&c| block.label(&block.ambient.keys[c])).collect::<Vec<_>>(),
        "path": path,
        "final_vector": final_vector,
        "transport_matrix": complex_rows(&forward.matrix),
        "statistics": summary,
        "residuals": { "reversal": reversal, "liouville": liouville },
    });
    let checks = vec![check("reversal_residual", reversal <= TRANSPORT_TOLERANCE), check("liouville_residual", liouville <= TRANSPORT_TOLERANCE)];
    Ok((results, checks))
}
