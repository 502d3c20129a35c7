//! The `sftlab` command line.
//!
//! Every subcommand accepts `--config <file>` with `key=value` lines whose
//! keys are the subcommand's long options. Output starts with a schema
//! line and the effective configuration as `# config: key=value` lines,
//! which form a config file that reproduces the run.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 a check failed, 3 a search
//! or state budget ran out.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::burton_steif::{htop_identity_report, lift, verify_counting_identity, verify_lemma, ToneLift};
use crate::contours::{enumerate_encircling_loops, peierls_bound};
use crate::error::{Error, Result};
use crate::gibbs::{onsager_minus_beta_f, Interaction};
use crate::lattice::{boundary, Metric, Patch, Volume};
use crate::models::potts::{extrapolate, random_lifted_boundary, strip_pressures};
use crate::models::vertex::{Kind, VertexSymbol};
use crate::models::{edge_potts_spec, potts_cross_spec, vertex_lift, vertex_spec, yprime_spec};
use crate::rng::{derive_seed, stream};
use crate::sampling::{
    order_parameter, phase_scan, run_chain, sample_max_entropy, ChainModel, ChainSpec, Family, LatticeSpec, ModelTag,
    ScanConfig,
};
use crate::sft::{
    default_budget, enumerate_patches, full_shift, gluing_check, random_admissible_patch, strip_transfer_matrix,
    write_spec, SearchOptions, SftSpec, Wrap,
};

#[derive(Parser, Debug)]
#[command(name = "sftlab", version, about = "Tone lifts, Gibbs conditionals and contour tools for lattice SFTs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// key=value file supplying defaults for this subcommand's options.
    #[arg(long)]
    config: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Print a gnuplot command for the CSV output.
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true")]
    gnuplot_hint: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Allowed-patch census of a model.
    Census(CensusArgs),
    /// Finite-volume checks of the lift correspondence.
    Verify(VerifyArgs),
    /// Strip entropies `log λ / w` of a model.
    Entropy(EntropyArgs),
    /// Strip pressures of the Potts model and the exact two-color value.
    FreeEnergy(FreeEnergyArgs),
    /// Encircling loop counts and Peierls bounds.
    Peierls(PeierlsArgs),
    /// Run one seeded chain and print order parameters.
    Sample(SampleArgs),
    /// Boundary-sensitivity scan over tone counts.
    PhaseScan(ScanArgs),
    /// Model utilities.
    Model {
        #[command(subcommand)]
        action: ModelCommand,
    },
    /// Empirical gluing of random admissible patches.
    Gluing(GluingArgs),
}

#[derive(Subcommand, Debug)]
enum ModelCommand {
    /// Write a model in the spec file format.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct CensusArgs {
    #[command(flatten)]
    common: Common,
    /// vertex, vertex-lift:N, potts:q, edge-potts:q:N, full:q or yprime.
    #[arg(long)]
    model: String,
    /// Count admissible patches on a WxH box instead of listing window counts.
    #[arg(long)]
    volume: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// lemma, counting or htop.
    #[arg(long)]
    what: String,
    /// potts:q or vertex.
    #[arg(long)]
    model: String,
    #[arg(long = "N", default_value_t = 2)]
    n: u32,
    /// random:k:seed or a file of boundary patches.
    #[arg(long, default_value = "random:20:1")]
    cases: String,
    #[arg(long, default_value = "2x2")]
    volume: String,
    /// Extension depth required of interiors.
    #[arg(long, default_value_t = 2)]
    margin: i32,
    /// Strip widths for htop, as a..b or a comma list.
    #[arg(long, default_value = "2..4")]
    widths: String,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Also write a JSON summary here.
    #[arg(long)]
    json: Option<String>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: String,
    #[arg(long, default_value = "2..5")]
    widths: String,
    /// cylinder or free.
    #[arg(long, default_value = "cylinder")]
    wrap: String,
    #[arg(long, default_value_t = 2_000_000)]
    state_budget: usize,
}

#[derive(Args, Debug)]
struct FreeEnergyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "potts:2")]
    model: String,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value = "4..8")]
    widths: String,
    /// Compare with the exact two-color free energy.
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true")]
    onsager: bool,
    #[arg(long, default_value_t = 1e-2)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct PeierlsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 12)]
    ell_max: usize,
    #[arg(long, default_value_t = 1.5)]
    beta: f64,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// vertex, vertex-lift:N or potts:q.
    #[arg(long)]
    model: String,
    /// Inverse temperature; ignored for lifts, which run at β_N.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value = "32x32")]
    size: String,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// dot, cross, color:k or torus.
    #[arg(long, default_value = "dot")]
    pin: String,
    #[arg(long, default_value_t = 4)]
    block: i32,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    /// vertex-lift or potts:q.
    #[arg(long)]
    family: String,
    /// Tone counts N, as a..b or a comma list.
    #[arg(long, default_value = "1..6")]
    params: String,
    #[arg(long, default_value = "32x32")]
    size: String,
    #[arg(long, default_value_t = 10000)]
    sweeps: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 8)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    block: i32,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    common: Common,
    /// potts:q, vertex, vertex-lift:N, edge-potts:q:N or yprime.
    #[arg(long)]
    name: String,
    #[arg(long)]
    out: String,
}

#[derive(Args, Debug)]
struct GluingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: String,
    #[arg(long)]
    gap: i32,
    #[arg(long, default_value_t = 2)]
    radius: i32,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Outcome of a subcommand before it becomes an exit code.
enum Outcome {
    Ok,
    CheckFailed(String),
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SearchBudgetExceeded(_) | Error::StateBudgetExceeded(_) | Error::AlphabetBudgetExceeded(_) => 3,
        _ => 1,
    }
}

/// Run the command line with `args` (program name first), writing CSV to
/// `out` and diagnostics to stderr. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let matches = match overriding(Cli::command()).try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    let mut text = String::new();
    let result = dispatch(&cli, &matches, &mut text);
    let _ = out.write_all(text.as_bytes());
    match result {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("check failed: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Let a later occurrence of an option replace an earlier one, so flags
/// override values inserted from a config file.
fn overriding(cmd: clap::Command) -> clap::Command {
    cmd.args_override_self(true).mut_subcommands(overriding)
}

/// Path of subcommand names and the innermost matches.
fn leaf(matches: &ArgMatches) -> (Vec<String>, &ArgMatches) {
    let mut names = Vec::new();
    let mut m = matches;
    while let Some((name, sub)) = m.subcommand() {
        names.push(name.to_string());
        m = sub;
    }
    (names, m)
}

fn leaf_command(path: &[String]) -> Option<clap::Command> {
    let mut cmd = Cli::command();
    for name in path {
        cmd = cmd.find_subcommand(name)?.clone();
    }
    Some(cmd)
}

/// Insert `--key=value` pairs from `--config <file>` right after the
/// subcommand path so that command-line options override them.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(pos) = strs.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match strs[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => strs.get(pos + 1).cloned().ok_or_else(|| Error::Parse("--config needs a file".into()))?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    // subcommand path: leading non-option words after the program name
    let mut depth = 1;
    let mut path_names = Vec::new();
    while depth < strs.len() && !strs[depth].starts_with('-') {
        path_names.push(strs[depth].clone());
        depth += 1;
    }
    let cmd = leaf_command(&path_names).ok_or_else(|| Error::Parse("unknown subcommand".into()))?;
    let known: Vec<String> = cmd.get_arguments().filter_map(|a| a.get_long().map(String::from)).collect();
    let mut inserted = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line = line.strip_prefix("# config:").map(str::trim).unwrap_or(line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("{path}:{}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "config" || k == "command" {
            continue;
        }
        if !known.iter().any(|n| n == k) {
            return Err(Error::Parse(format!("{path}:{}: unknown key '{k}'", i + 1)));
        }
        if v.is_empty() {
            continue;
        }
        inserted.push(OsString::from(format!("--{k}={v}")));
    }
    let mut out: Vec<OsString> = args[..depth].to_vec();
    out.extend(inserted);
    out.extend(args[depth..].iter().cloned());
    Ok(out)
}

/// `# config:` lines for every option of the leaf subcommand.
fn config_echo(matches: &ArgMatches) -> String {
    let (path, m) = leaf(matches);
    let cmd = leaf_command(&path).expect("parsed subcommand exists");
    let mut s = String::new();
    let _ = writeln!(s, "# config: command={}", path.join(" "));
    for arg in cmd.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || long == "help" || long == "version" {
            continue;
        }
        let Ok(Some(vals)) = m.try_get_raw(arg.get_id().as_str()) else { continue };
        let vals: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
        let _ = writeln!(s, "# config: {long}={}", vals.join(","));
    }
    s
}

fn header(out: &mut String, schema: &str, matches: &ArgMatches, common: &Common, plot: &str) {
    let _ = writeln!(out, "# schema: {schema}");
    out.push_str(&config_echo(matches));
    if common.gnuplot_hint {
        let _ = writeln!(out, "# gnuplot: set datafile separator ','; {plot}");
    }
}

fn with_threads<T: Send>(common: &Common, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.max(1))
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(pool.install(f))
}

fn dispatch(cli: &Cli, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    match &cli.command {
        Command::Census(a) => with_threads(&a.common, || cmd_census(a, matches, out))?,
        Command::Verify(a) => with_threads(&a.common, || cmd_verify(a, matches, out))?,
        Command::Entropy(a) => with_threads(&a.common, || cmd_entropy(a, matches, out))?,
        Command::FreeEnergy(a) => with_threads(&a.common, || cmd_free_energy(a, matches, out))?,
        Command::Peierls(a) => with_threads(&a.common, || cmd_peierls(a, matches, out))?,
        Command::Sample(a) => with_threads(&a.common, || cmd_sample(a, matches, out))?,
        Command::PhaseScan(a) => with_threads(&a.common, || cmd_phase_scan(a, matches, out))?,
        Command::Model { action: ModelCommand::Export(a) } => cmd_export(a, matches, out),
        Command::Gluing(a) => with_threads(&a.common, || cmd_gluing(a, matches, out))?,
    }
}

/// Model names understood by the subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelName {
    Vertex,
    VertexLift(u32),
    Potts(u32),
    EdgePotts(u32, u32),
    Full(u32),
    YPrime,
}

pub fn parse_model(s: &str) -> Result<ModelName> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<u32> {
        parts
            .get(i)
            .ok_or_else(|| Error::Parse(format!("model '{s}' needs a parameter")))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad number in model '{s}'")))
    };
    let m = match parts[0] {
        "vertex" => ModelName::Vertex,
        "vertex-lift" => ModelName::VertexLift(num(1)?),
        "potts" => ModelName::Potts(num(1)?),
        "edge-potts" => ModelName::EdgePotts(num(1)?, num(2)?),
        "full" => ModelName::Full(num(1)?),
        "yprime" => ModelName::YPrime,
        _ => return Err(Error::Parse(format!("unknown model '{s}'"))),
    };
    let params = match m {
        ModelName::Vertex | ModelName::YPrime => 1,
        ModelName::EdgePotts(..) => 3,
        _ => 2,
    };
    if parts.len() != params {
        return Err(Error::Parse(format!("model '{s}' has the wrong number of parameters")));
    }
    if let ModelName::VertexLift(0) | ModelName::EdgePotts(_, 0) = m {
        return Err(Error::Parse("N must be positive".into()));
    }
    Ok(m)
}

pub fn model_spec(m: ModelName) -> Result<(SftSpec, Option<Interaction>)> {
    Ok(match m {
        ModelName::Vertex => {
            let (s, p) = vertex_spec();
            (s, Some(p))
        }
        ModelName::VertexLift(n) => ((*vertex_lift(n).lifted).clone(), None),
        ModelName::Potts(q) => {
            let (s, p) = potts_cross_spec(q)?;
            (s, Some(p))
        }
        ModelName::EdgePotts(q, n) => (edge_potts_spec(q, n), None),
        ModelName::Full(q) => (full_shift(q as usize), None),
        ModelName::YPrime => (yprime_spec(), None),
    })
}

pub fn parse_size(s: &str) -> Result<(i32, i32)> {
    let (w, h) = s.split_once('x').ok_or_else(|| Error::Parse(format!("expected WxH, got '{s}'")))?;
    let p = |t: &str| t.trim().parse::<i32>().map_err(|_| Error::Parse(format!("bad size '{s}'")));
    let (w, h) = (p(w)?, p(h)?);
    if w <= 0 || h <= 0 {
        return Err(Error::Parse(format!("size must be positive, got '{s}'")));
    }
    Ok((w, h))
}

/// `a..b` (inclusive) or `a,b,c`.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parse(format!("bad list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_census(a: &CensusArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let model = parse_model(&a.model)?;
    let (spec, _) = model_spec(model)?;
    header(out, "census/v1 model,row,count,expected,ok", matches, &a.common, "plot '-' using 3");
    let _ = writeln!(out, "model,row,count,expected,ok");
    let mut failed = Vec::new();
    let mut row = |out: &mut String, name: &str, count: String, expected: Option<u64>| {
        let ok = expected.map_or(true, |e| count == e.to_string());
        if !ok {
            failed.push(name.to_string());
        }
        let _ = writeln!(
            out,
            "{},{name},{count},{},{}",
            a.model,
            expected.map_or(String::new(), |e| e.to_string()),
            ok
        );
    };
    if let Some(vol) = &a.volume {
        let (w, h) = parse_size(vol)?;
        let opts = SearchOptions { classes: spec.has_nontrivial_classes(), ..SearchOptions::default() };
        let e = enumerate_patches(&spec, &Volume::rect(0, 0, w, h), None, &opts)?;
        let expected = match model {
            ModelName::Full(q) => Some((q as u64).pow((w * h) as u32)),
            _ => None,
        };
        row(out, &format!("patches_{w}x{h}"), e.count.to_string(), expected);
    } else {
        let _ = writeln!(out, "{},alphabet,{},,true", a.model, spec.alphabet_size());
        let count = spec.allowed_count();
        match model {
            ModelName::Vertex => {
                let patches = spec.allowed_patches().unwrap_or_default();
                row(out, "allowed", patches.len().to_string(), Some(248));
                let by = |k: Kind| patches.iter().filter(|p| VertexSymbol::of(p[0]).kind() == k).count();
                row(out, "center_dot", by(Kind::DotOut).to_string(), Some(90));
                row(out, "center_cross", by(Kind::CrossIn).to_string(), Some(90));
                row(out, "center_straight", by(Kind::Straight).to_string(), Some(36));
                row(out, "center_corner", by(Kind::Corner).to_string(), Some(32));
                let m = crate::models::vertex::m_matrix();
                let mut p = m;
                for _ in 0..3 {
                    let mut q = [[0u64; 4]; 4];
                    for i in 0..4 {
                        for j in 0..4 {
                            q[i][j] = (0..4).map(|k| p[i][k] * m[k][j]).sum();
                        }
                    }
                    p = q;
                }
                row(out, "trace_m4", (0..4).map(|i| p[i][i]).sum::<u64>().to_string(), Some(90));
            }
            ModelName::Potts(2) => row(out, "allowed", count.unwrap_or(0).to_string(), Some(8192)),
            ModelName::VertexLift(n) => {
                let _ = n;
                row(out, "allowed", count.unwrap_or(0).to_string(), None)
            }
            ModelName::YPrime => {
                let k = spec.forbidden_patterns().map_or(0, |f| f.len());
                row(out, "forbidden_families", k.to_string(), Some(2));
            }
            _ => row(out, "allowed", count.map_or("n/a".into(), |c| c.to_string()), None),
        }
    }
    Ok(if failed.is_empty() { Outcome::Ok } else { Outcome::CheckFailed(format!("census mismatch in {}", failed.join(", "))) })
}

enum Target {
    Potts { q: u32, lift: ToneLift },
    Vertex { lift: ToneLift },
}

impl Target {
    fn lift(&self) -> &ToneLift {
        match self {
            Target::Potts { lift, .. } | Target::Vertex { lift } => lift,
        }
    }
}

fn verify_target(model: &str, n: u32) -> Result<Target> {
    match parse_model(model)? {
        ModelName::Potts(q) => {
            let (spec, phi) = potts_cross_spec(q)?;
            Ok(Target::Potts { q, lift: lift(Arc::new(spec), phi, n)? })
        }
        ModelName::Vertex | ModelName::VertexLift(_) => Ok(Target::Vertex { lift: vertex_lift(n) }),
        _ => Err(Error::Parse(format!("verify supports potts:q and vertex, not '{model}'"))),
    }
}

fn read_cases(path: &str, names: &[String]) -> Result<Vec<Patch>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
    let mut chunks: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.trim_start().starts_with("volume") {
            chunks.push(String::new());
        }
        if let Some(c) = chunks.last_mut() {
            c.push_str(line);
            c.push('\n');
        }
    }
    chunks.iter().map(|c| Patch::from_text(c, names)).collect()
}

fn cmd_verify(a: &VerifyArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let target = verify_target(&a.model, a.n)?;
    let l = target.lift();
    header(out, "verify/v1 case_id,deviation", matches, &a.common, "plot '-' using 1:2 with points");
    let _ = writeln!(out, "case_id,deviation");
    let mut devs: Vec<(String, f64)> = Vec::new();
    let tol;
    if a.what == "htop" {
        tol = a.tolerance.unwrap_or(1e-9);
        let widths = parse_list(&a.widths)?;
        for r in htop_identity_report(l, &widths, 2_000_000)? {
            devs.push((format!("w{}", r.width), (r.lifted - r.base).abs()));
        }
    } else {
        tol = a.tolerance.unwrap_or(if a.what == "lemma" { 1e-12 } else { 1e-9 });
        let check: fn(&ToneLift, &Volume, &Patch, i32) -> Result<f64> = match a.what.as_str() {
            "lemma" => verify_lemma,
            "counting" => verify_counting_identity,
            other => return Err(Error::Parse(format!("unknown check '{other}'"))),
        };
        let (w, h) = parse_size(&a.volume)?;
        let v = Volume::rect(0, 0, w, h);
        let cases = boundary_cases(&target, &v, &a.cases, a.margin)?;
        use rayon::prelude::*;
        let results: Vec<Result<f64>> = cases.par_iter().map(|b| check(l, &v, b, a.margin)).collect();
        for (i, r) in results.into_iter().enumerate() {
            devs.push((i.to_string(), r?));
        }
    }
    let mut max = 0.0f64;
    for (id, d) in &devs {
        max = max.max(*d);
        let _ = writeln!(out, "{id},{d:e}");
    }
    let ok = max <= tol;
    let _ = writeln!(out, "# summary: cases={} max_deviation={max:e} tolerance={tol:e} ok={ok}", devs.len());
    if let Some(path) = &a.json {
        let cases: Vec<serde_json::Value> =
            devs.iter().map(|(id, d)| serde_json::json!({ "case": id, "deviation": d })).collect();
        let json = serde_json::json!({
            "what": a.what,
            "model": a.model,
            "N": a.n,
            "max_deviation": max,
            "tolerance": tol,
            "ok": ok,
            "cases": cases,
        });
        let json = format!("{}\n", serde_json::to_string_pretty(&json).expect("plain values serialize"));
        std::fs::write(path, json).map_err(|e| Error::Invalid(format!("{path}: {e}")))?;
    }
    Ok(if ok { Outcome::Ok } else { Outcome::CheckFailed(format!("max deviation {max:e} above {tol:e}")) })
}

/// Boundaries on the unit L1 ring around `v`.
pub fn random_boundaries_for(lift: &ToneLift, potts_q: Option<u32>, v: &Volume, k: usize, seed: u64, margin: i32) -> Result<Vec<Patch>> {
    let ring = boundary(v, 1, Metric::L1);
    (0..k)
        .map(|i| match potts_q {
            Some(q) => Ok(random_lifted_boundary(lift, q, v, &mut stream(&[seed, i as u64]))),
            None => {
                random_admissible_patch(&lift.lifted, &ring, margin, derive_seed(&[seed, i as u64]), default_budget())?
                    .ok_or(Error::EmptySupport)
            }
        })
        .collect()
}

fn boundary_cases(target: &Target, v: &Volume, cases: &str, margin: i32) -> Result<Vec<Patch>> {
    if let Some(rest) = cases.strip_prefix("random:") {
        let (k, seed) = rest.split_once(':').ok_or_else(|| Error::Parse("expected random:k:seed".into()))?;
        let k: usize = k.parse().map_err(|_| Error::Parse("bad case count".into()))?;
        let seed: u64 = seed.parse().map_err(|_| Error::Parse("bad seed".into()))?;
        let q = match target {
            Target::Potts { q, .. } => Some(*q),
            Target::Vertex { .. } => None,
        };
        random_boundaries_for(target.lift(), q, v, k, seed, margin)
    } else {
        read_cases(cases, target.lift().lifted.names())
    }
}

fn cmd_entropy(a: &EntropyArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let (spec, _) = model_spec(parse_model(&a.model)?)?;
    let wrap = match a.wrap.as_str() {
        "cylinder" => Wrap::Cylinder,
        "free" => Wrap::Free,
        w => return Err(Error::Parse(format!("unknown wrap '{w}'"))),
    };
    header(out, "entropy/v1 width,states,log_lambda_per_site,lower,upper", matches, &a.common, "plot '-' using 1:3 with linespoints");
    let _ = writeln!(out, "width,states,log_lambda_per_site,lower,upper");
    for w in parse_list(&a.widths)? {
        let tm = strip_transfer_matrix(&spec, w, None, wrap, a.state_budget)?;
        let e = tm.leading_eigenvalue(1e-12, 200_000);
        let wf = w as f64;
        let _ = writeln!(
            out,
            "{w},{},{:.12},{:.12},{:.12}",
            tm.len(),
            e.lambda.ln() / wf,
            e.lower.ln() / wf,
            e.upper.ln() / wf
        );
    }
    Ok(Outcome::Ok)
}

fn cmd_free_energy(a: &FreeEnergyArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let ModelName::Potts(q) = parse_model(&a.model)? else {
        return Err(Error::Parse("free-energy supports potts:q".into()));
    };
    if a.beta <= 0.0 {
        return Err(Error::Parse("beta must be positive".into()));
    }
    header(out, "free-energy/v1 row,width,minus_beta_f", matches, &a.common, "plot '-' using 2:3 with linespoints");
    let _ = writeln!(out, "row,width,minus_beta_f");
    let widths = parse_list(&a.widths)?;
    let p = strip_pressures(q, a.beta, &widths);
    for (w, v) in &p {
        let _ = writeln!(out, "strip,{w},{v:.12}");
    }
    let ext = extrapolate(&p);
    let _ = writeln!(out, "extrapolated,,{ext:.12}");
    if a.onsager {
        if q != 2 {
            return Err(Error::Parse("the exact value is for q = 2".into()));
        }
        let exact = onsager_minus_beta_f(a.beta)?;
        let diff = (ext - exact).abs();
        let _ = writeln!(out, "onsager,,{exact:.12}");
        let _ = writeln!(out, "diff,,{diff:.3e}");
        if diff > a.tolerance {
            return Ok(Outcome::CheckFailed(format!("|diff| = {diff:e} above {}", a.tolerance)));
        }
    }
    Ok(Outcome::Ok)
}

fn cmd_peierls(a: &PeierlsArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    header(out, "peierls/v1 ell,exact_count,bound,ratio,probability_bound", matches, &a.common, "set logscale y; plot '-' using 1:2, '' using 1:3");
    let _ = writeln!(out, "ell,exact_count,bound,ratio,probability_bound");
    let mut bad = Vec::new();
    for ell in (8..=a.ell_max).step_by(2) {
        let c = enumerate_encircling_loops(ell)?;
        let ratio = c.count as f64 / c.bound;
        if ratio > 1.0 {
            bad.push(ell);
        }
        let _ = writeln!(out, "{ell},{},{:.6e},{ratio:.6e},{:.6e}", c.count, c.bound, peierls_bound(a.beta, ell));
    }
    Ok(if bad.is_empty() { Outcome::Ok } else { Outcome::CheckFailed(format!("count above bound at {bad:?}")) })
}

fn cmd_sample(a: &SampleArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let (w, h) = parse_size(&a.size)?;
    header(out, "sample/v1 param,pinning,replicate,sweep,stat_name,value", matches, &a.common, "plot '-' using 4:6");
    let _ = writeln!(out, "param,pinning,replicate,sweep,stat_name,value");
    let mut rows = String::new();
    let mut emit = |sweep: usize, param: &str, stats: Vec<(String, f64)>| {
        for (k, v) in stats {
            let _ = writeln!(rows, "{param},{},0,{sweep},{k},{v:.6}", a.pin);
        }
    };
    let pin_lattice = |dot: u32, cross: u32, pad: i32| -> Result<(LatticeSpec, u32)> {
        Ok(match a.pin.as_str() {
            "torus" => (LatticeSpec::Torus { w, h }, dot),
            "dot" => (LatticeSpec::pinned_constant(w, h, pad, dot), dot),
            "cross" => (LatticeSpec::pinned_constant(w, h, pad, cross), cross),
            p => return Err(Error::Parse(format!("pin '{p}' does not apply to this model"))),
        })
    };
    match parse_model(&a.model)? {
        ModelName::Vertex => {
            let (spec, phi) = vertex_spec();
            let (lattice, init) = pin_lattice(crate::models::vertex::DOT, crate::models::vertex::CROSS, 2)?;
            let mut chain = ChainSpec::new(
                ChainModel::Sft { spec: Arc::new(spec), phi: Some(phi), block: a.block, classes: false },
                a.beta,
                lattice,
                init,
            );
            set_run(&mut chain, a);
            let param = format!("{}", a.beta);
            run_chain(&chain, |s, g| emit(s, &param, order_parameter(&g.to_patch(), ModelTag::Vertex)))?;
        }
        ModelName::VertexLift(n) => {
            let l = vertex_lift(n);
            let (dot, cross) = (crate::models::vertex::DOT, crate::models::vertex::CROSS);
            let (lattice, init) = pin_lattice(l.symbol(dot, 0), l.symbol(cross, 0), 2)?;
            let mut chain = ChainSpec::new(
                ChainModel::Sft { spec: l.lifted.clone(), phi: None, block: a.block, classes: true },
                0.0,
                lattice,
                init,
            );
            set_run(&mut chain, a);
            let param = n.to_string();
            sample_max_entropy(&l, &chain, a.block, |s, p| emit(s, &param, order_parameter(&l.project(p), ModelTag::Vertex)))?;
        }
        ModelName::Potts(q) => {
            let (lattice, init) = match a.pin.as_str() {
                "torus" => (LatticeSpec::Torus { w, h }, 0),
                p => {
                    let k: u32 = p
                        .strip_prefix("color:")
                        .and_then(|k| k.parse().ok())
                        .filter(|&k| k < q)
                        .ok_or_else(|| Error::Parse(format!("pin for potts is color:k or torus, got '{p}'")))?;
                    (LatticeSpec::pinned_constant(w, h, 1, k), k)
                }
            };
            let mut chain = ChainSpec::new(ChainModel::PottsSpin { q }, a.beta, lattice, init);
            set_run(&mut chain, a);
            let param = format!("{}", a.beta);
            run_chain(&chain, |s, g| emit(s, &param, order_parameter(&g.to_patch(), ModelTag::PottsSpin { q })))?;
        }
        _ => return Err(Error::Parse("sample supports vertex, vertex-lift:N and potts:q".into())),
    }
    out.push_str(&rows);
    Ok(Outcome::Ok)
}

fn set_run(chain: &mut ChainSpec, a: &SampleArgs) {
    chain.sweeps = a.sweeps;
    chain.thin = a.thin;
    chain.seed = a.seed;
}

fn cmd_phase_scan(a: &ScanArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let family = match parse_model(&a.family) {
        Ok(ModelName::Potts(q)) => Family::Potts { q },
        _ if a.family == "vertex-lift" => Family::VertexLift,
        _ => return Err(Error::Parse(format!("unknown family '{}'", a.family))),
    };
    let params: Vec<u32> = parse_list(&a.params)?.into_iter().map(|p| p as u32).collect();
    if params.contains(&0) {
        return Err(Error::Parse("N must be positive".into()));
    }
    let cfg = ScanConfig {
        family,
        params,
        size: parse_size(&a.size)?,
        sweeps: a.sweeps,
        thin: a.thin,
        replicates: a.replicates,
        seed: a.seed,
        block: a.block,
    };
    let r = phase_scan(&cfg)?;
    header(
        out,
        "phase-scan/v1 param,pinning,replicate,sweep,stat_name,value",
        matches,
        &a.common,
        "plot '< grep ,gap,' using 1:6",
    );
    for (name, v) in &r.thresholds {
        let _ = writeln!(out, "# threshold: {name}={v:.6}");
    }
    let _ = writeln!(out, "param,pinning,replicate,sweep,stat_name,value");
    for c in &r.chains {
        let _ = writeln!(out, "{},{},{},{},center_plus,{:.6}", c.param, c.pinning, c.replicate, a.sweeps, c.center_plus);
    }
    for s in &r.summary {
        let _ = writeln!(out, "{},gap,,{},gap,{:.6}", s.param, a.sweeps, s.gap);
        let _ = writeln!(out, "{},gap,,{},gap_err,{:.6}", s.param, a.sweeps, s.err);
        for f in &s.failures {
            let _ = writeln!(out, "# failure: {} {f}", s.param);
        }
    }
    for (name, v) in &r.thresholds {
        let _ = writeln!(out, ",threshold,,,{name},{v:.6}");
    }
    match r.transition() {
        Some((lo, hi)) => {
            let _ = writeln!(out, ",transition,,,between,{lo}-{hi}");
        }
        None => {
            let _ = writeln!(out, ",transition,,,between,none");
        }
    }
    Ok(Outcome::Ok)
}

fn cmd_export(a: &ExportArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let (spec, _) = model_spec(parse_model(&a.name)?)?;
    std::fs::write(&a.out, write_spec(&spec)).map_err(|e| Error::Invalid(format!("{}: {e}", a.out)))?;
    header(out, "model-export/v1 name,alphabet,allowed", matches, &a.common, "");
    let _ = writeln!(out, "name,alphabet,allowed");
    let _ = writeln!(
        out,
        "{},{},{}",
        a.name,
        spec.alphabet_size(),
        spec.allowed_count().map_or("forbidden-list".into(), |c| c.to_string())
    );
    Ok(Outcome::Ok)
}

fn cmd_gluing(a: &GluingArgs, matches: &ArgMatches, out: &mut String) -> Result<Outcome> {
    let (spec, _) = model_spec(parse_model(&a.model)?)?;
    let r = gluing_check(&spec, a.gap, a.radius, a.trials, a.seed, default_budget())?;
    header(out, "gluing/v1 model,gap,radius,pairs_tested,failures,budget_exceeded,sampling_failures", matches, &a.common, "");
    let _ = writeln!(out, "model,gap,radius,pairs_tested,failures,budget_exceeded,sampling_failures");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        a.model,
        a.gap,
        a.radius,
        r.pairs_tested,
        r.failures.len(),
        r.budget_exceeded,
        r.sampling_failures
    );
    Ok(if r.failures.is_empty() { Outcome::Ok } else { Outcome::CheckFailed(format!("{} pairs failed to glue", r.failures.len())) })
}
