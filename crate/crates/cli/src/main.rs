//! `slitwork`: command-line front end. Machine-readable JSON goes to stdout, human
//! reports to stderr.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use slitwork_core::json::{splitting_from_str, to_value};
use slitwork_core::search::{refine, RefineParams};
use slitwork_core::splitting::{build_example, EXAMPLE_NAMES};
use slitwork_core::surface::{build_normal_form, ergodicity_probe, render_svg, write_csv, ProbeConfig};
use slitwork_core::tree::{build_tree, read_jsonl, replay_verify, write_jsonl, TreeReport};
use slitwork_core::twist::{apply_twist, good_partners, initial_irrational_search, make_pair, InitialOutcome};
use slitwork_core::{Error, QuadExt, Splitting, Vec2};

const LONG_VERSION: &str =
    "0.1.0 (format 1; scalars are a+b√d in Q(√d) with d square-free, d = 0 for rational data)";

const EXIT_FAILED: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;
const EXIT_INVALID: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "slitwork", version = LONG_VERSION, about = "Exact slit-torus splittings, twists and nonergodic direction trees")]
struct Cli {
    /// Worker threads (default: all cores). Output order does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a built-in splitting as JSON.
    Example {
        name: String,
        /// Parameter of the example (α for slit-torus, δ for prop-new-perturbed).
        #[arg(long)]
        param: Option<String>,
    },
    /// Validity report and rationality of the slit in each torus.
    Check { file: PathBuf },
    /// Partners of v1 in L2, best first.
    Partners {
        file: PathBuf,
        #[arg(long, value_parser = parse_vec)]
        v1: Vec2,
        #[arg(long)]
        max: Option<usize>,
        /// Bound on lattice coordinates during enumeration.
        #[arg(long, default_value_t = 50)]
        cap: u64,
    },
    /// Twist the slits k times about γ(v1, v2).
    Twist {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_nonzero, allow_hyphen_values = true)]
        k: i64,
    },
    /// Look for an irrational splitting among the four twists of two partners.
    PropNew {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        v2p: Option<Vec2>,
    },
    /// One refinement step at tolerance eps.
    Refine {
        file: PathBuf,
        #[arg(long, value_parser = parse_positive)]
        eps: QuadExt,
        #[arg(long, value_parser = parse_positive)]
        eps_prime: Option<QuadExt>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Build the binary tree of refinements; JSON lines on stdout.
    Tree {
        file: PathBuf,
        #[arg(long)]
        depth: u32,
        #[arg(long, value_parser = parse_positive)]
        eps0: QuadExt,
        #[command(flatten)]
        search: SearchArgs,
        /// Also write the verification report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay a tree file and re-check every certificate.
    Verify { treefile: PathBuf },
    /// Floating-point ergodicity probe of the straight-line flow.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        direction: Vec2,
        /// Flow time per start.
        #[arg(long, default_value_t = 1e6)]
        steps: f64,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[arg(long, default_value_t = 100)]
        checkpoints: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Running averages as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// SVG picture of the normal form.
    Render {
        file: PathBuf,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Defaults to the `v1` field of the input document.
    #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
    v1: Option<Vec2>,
    /// Defaults to the `v2` field of the input document.
    #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
    v2: Option<Vec2>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Candidates for v1 examined in the first round.
    #[arg(long, default_value_t = 10_000)]
    cap: u64,
    /// Growth of the cap between rounds.
    #[arg(long, default_value_t = 10)]
    growth: u64,
    #[arg(long, default_value_t = 4)]
    rounds: u32,
}

impl SearchArgs {
    fn params(&self, eps: QuadExt, eps_prime: Option<QuadExt>) -> RefineParams {
        RefineParams { eps, eps_prime, height_cap: self.cap, cap_growth: self.growth, max_rounds: self.rounds }
    }
}

fn parse_quad(s: &str) -> Result<QuadExt, String> {
    s.trim().parse::<QuadExt>().map_err(|e| e.to_string())
}

fn parse_positive(s: &str) -> Result<QuadExt, String> {
    let x = parse_quad(s)?;
    if x.signum() <= 0 {
        return Err(format!("{s} must be positive"));
    }
    Ok(x)
}

fn parse_vec(s: &str) -> Result<Vec2, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y but got {s:?}"))?;
    Ok(Vec2::new(parse_quad(x)?, parse_quad(y)?))
}

fn parse_nonzero(s: &str) -> Result<i64, String> {
    let k: i64 = s.trim().parse().map_err(|_| format!("{s:?} is not an integer"))?;
    if k == 0 {
        return Err("k must be nonzero".into());
    }
    Ok(k)
}

/// A failed command: exit code plus message for stderr.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SearchExhausted(_) => EXIT_EXHAUSTED,
            Error::ZeroTwist => EXIT_USAGE,
            Error::NotAllowed(_) | Error::InvalidResult(_) | Error::LemmaViolation | Error::SigmaZero => EXIT_FAILED,
            _ => EXIT_INVALID,
        };
        Failure(code, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(EXIT_INVALID, format!("i/o error: {e}"))
    }
}

type Outcome = Result<u8, Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path).map_err(|e| Failure(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

/// Input document: the splitting plus any extra fields it carries.
struct Input {
    splitting: Splitting,
    doc: Value,
}

impl Input {
    fn vector(&self, flag: &Option<Vec2>, key: &str) -> Result<Vec2, Failure> {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match self.doc.get(key) {
            Some(v) if !v.is_null() => serde_json::from_value(v.clone())
                .map_err(|e| Failure(EXIT_INVALID, format!("field {key}: {e}"))),
            _ => Err(Failure(EXIT_USAGE, format!("--{key} is required (the input has no {key} field)"))),
        }
    }

    fn pair(&self, p: &PairArgs) -> Result<(Vec2, Vec2), Failure> {
        Ok((self.vector(&p.v1, "v1")?, self.vector(&p.v2, "v2")?))
    }
}

fn load(path: &Path) -> Result<Input, Failure> {
    let text = read_input(path)?;
    let splitting = splitting_from_str(&text)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Failure(EXIT_INVALID, e.to_string()))?;
    Ok(Input { splitting, doc })
}

/// Loads and refuses invalid splittings, printing the failed checks.
fn load_valid(path: &Path) -> Result<Input, Failure> {
    let input = load(path)?;
    let report = input.splitting.validate();
    if !report.is_valid() {
        let lines: Vec<String> = report.failures().iter().map(|c| format!("  {}: {}", c.name, c.detail)).collect();
        return Err(Failure(EXIT_INVALID, format!("invalid splitting:\n{}", lines.join("\n"))));
    }
    Ok(input)
}

fn emit(v: &Value) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, v).map_err(|e| Failure(EXIT_INVALID, e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// The splitting's JSON object with extra fields appended.
fn with_fields(s: &Splitting, extra: Vec<(&str, Value)>) -> Value {
    let mut obj = match to_value(s) {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    for (k, v) in extra {
        obj.insert(k.to_string(), v);
    }
    Value::Object(obj)
}

fn cmd_example(name: &str, param: &Option<String>) -> Outcome {
    let param = param.as_deref().map(parse_quad).transpose().map_err(|e| Failure(EXIT_USAGE, e))?;
    let ex = build_example(name, param.as_ref()).map_err(|e| {
        Failure(EXIT_USAGE, format!("{e}; known examples: {}", EXAMPLE_NAMES.join(", ")))
    })?;
    let v = with_fields(
        &ex.splitting,
        vec![("name", json!(ex.name)), ("v1", to_value(&ex.v1)), ("v2", to_value(&ex.v2)), ("v2p", to_value(&ex.v2p))],
    );
    emit(&v)?;
    Ok(0)
}

fn cmd_check(file: &Path) -> Outcome {
    let s = load(file)?.splitting;
    let report = s.validate();
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let (r1, r2) = (s.is_rational_in(1), s.is_rational_in(2));
    let verdict = match (r1, r2) {
        (true, true) => "rational in both tori",
        (false, false) => "irrational in both tori",
        (true, false) => "rational in L1 only",
        (false, true) => "rational in L2 only",
    };
    eprintln!("{verdict}");
    emit(&json!({
        "valid": report.is_valid(),
        "checks": to_value(&report),
        "rational_in_L1": r1,
        "rational_in_L2": r2,
        "A1": to_value(&s.area(1)),
        "A2": to_value(&s.area(2)),
    }))?;
    Ok(if report.is_valid() { 0 } else { EXIT_FAILED })
}

fn cmd_partners(file: &Path, v1: &Vec2, max: Option<usize>, cap: u64) -> Outcome {
    let s = load_valid(file)?.splitting;
    let mut list = good_partners(&s, v1, cap)?;
    if let Some(m) = max {
        list.truncate(m);
    }
    eprintln!("{} partner(s) of {v1}", list.len());
    let rows: Vec<Value> = list
        .iter()
        .map(|(pair, count)| {
            json!({
                "v1": to_value(&pair.v1),
                "v2": to_value(&pair.v2),
                "cross_v1_v2": to_value(&slitwork_core::cross(&pair.v1, &pair.v2)),
                "max_twists": count.to_string(),
            })
        })
        .collect();
    emit(&Value::Array(rows))?;
    Ok(0)
}

fn cmd_twist(file: &Path, pair: &PairArgs, k: i64) -> Outcome {
    let input = load_valid(file)?;
    let (v1, v2) = input.pair(pair)?;
    let p = make_pair(&input.splitting, &v1, &v2)?;
    let (t, cert) = apply_twist(&input.splitting, &p, k)?;
    eprintln!("twisted k = {k}: w' = {}, irrational in L1': {}", t.w, cert.irrational_in_l1_after);
    emit(&with_fields(&t, vec![("certificate", to_value(&cert))]))?;
    Ok(0)
}

fn cmd_prop_new(file: &Path, pair: &PairArgs, v2p: &Option<Vec2>) -> Outcome {
    let input = load_valid(file)?;
    let (v1, v2) = input.pair(pair)?;
    let v2p = input.vector(v2p, "v2p")?;
    match initial_irrational_search(&input.splitting, &v1, &v2, &v2p)? {
        InitialOutcome::Irrational { k, partner, splitting, cert } => {
            eprintln!("irrational splitting from partner {partner} at k = {k}");
            emit(&with_fields(
                &splitting,
                vec![("outcome", json!("irrational")), ("k", json!(k)), ("partner", json!(partner)), ("certificate", to_value(&cert))],
            ))?;
            Ok(0)
        }
        InitialOutcome::Veech(cert) => {
            eprintln!("all four twists are rational (all recorded data rational: {})", cert.all_rational);
            emit(&json!({"outcome": "veech", "certificate": to_value(&cert)}))?;
            Ok(EXIT_FAILED)
        }
    }
}

fn cmd_refine(file: &Path, eps: &QuadExt, eps_prime: &Option<QuadExt>, search: &SearchArgs) -> Outcome {
    let s = load_valid(file)?.splitting;
    let params = search.params(eps.clone(), eps_prime.clone());
    params.validate()?;
    let r = refine(&s, &params)?;
    eprintln!(
        "refined with v1 = {}, k = {} after {} candidate(s) in round {}",
        r.cert.pair.v1, r.cert.k, r.metrics.search.v1_examined, r.metrics.search.round
    );
    emit(&with_fields(&r.splitting, vec![("certificate", to_value(&r.cert)), ("metrics", to_value(&r.metrics))]))?;
    Ok(0)
}

fn summarize(report: &TreeReport) {
    let passed = report.branches.iter().filter(|b| b.passed).count();
    eprintln!(
        "depth {}: {} nodes, {} leaves; branches passing {passed}/{}; eps halving {}; leaf cones disjoint {}",
        report.depth,
        report.nodes,
        report.leaves,
        report.branches.len(),
        report.eps_halving_ok,
        report.distinctness.all_disjoint
    );
    let logs: Vec<String> = report.eps_levels.iter().map(|e| format!("2^{}", e.log2_estimate().unwrap_or(0))).collect();
    eprintln!("eps_n: {}", logs.join(", "));
    if let Some(a) = &report.aborted {
        eprintln!("aborted: {a}");
    }
    eprintln!("{}", if report.all_passed { "all checks passed" } else { "CHECKS FAILED" });
}

fn cmd_tree(file: &Path, depth: u32, eps0: &QuadExt, search: &SearchArgs, report_path: &Option<PathBuf>) -> Outcome {
    let s = load_valid(file)?.splitting;
    let params = search.params(QuadExt::one(), None);
    params.validate()?;
    let built = build_tree(&s, depth, eps0, &params)?;
    {
        let mut out = BufWriter::new(io::stdout().lock());
        write_jsonl(&built.tree, &mut out)?;
        out.flush()?;
    }
    if let Some(p) = report_path {
        let f = File::create(p)?;
        serde_json::to_writer_pretty(BufWriter::new(f), &built.report).map_err(|e| Failure(EXIT_INVALID, e.to_string()))?;
    }
    summarize(&built.report);
    if let Some(e) = built.error {
        return Err(e.into());
    }
    Ok(if built.report.all_passed { 0 } else { EXIT_FAILED })
}

fn cmd_verify(path: &Path) -> Outcome {
    let reader: Box<dyn BufRead> = if path.as_os_str() == "-" {
        Box::new(BufReader::new(io::stdin()))
    } else {
        Box::new(BufReader::new(File::open(path).map_err(|e| Failure(EXIT_INVALID, format!("{}: {e}", path.display())))?))
    };
    let tree = read_jsonl(reader)?;
    let report = replay_verify(&tree);
    summarize(&report);
    emit(&to_value(&report))?;
    Ok(if report.all_passed { 0 } else { EXIT_FAILED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    file: &Path,
    pair: &PairArgs,
    direction: &Vec2,
    steps: f64,
    starts: usize,
    checkpoints: usize,
    seed: u64,
    csv: &Option<PathBuf>,
) -> Outcome {
    let input = load_valid(file)?;
    let (v1, v2) = input.pair(pair)?;
    let p = make_pair(&input.splitting, &v1, &v2)?;
    let f = build_normal_form(&input.splitting, &p)?;
    if direction.is_zero() {
        return Err(Failure(EXIT_USAGE, "direction must be nonzero".into()));
    }
    if !(steps.is_finite() && steps > 0.0) || starts == 0 {
        return Err(Failure(EXIT_USAGE, "--steps and --starts must be positive".into()));
    }
    let cfg = ProbeConfig { direction: direction.to_f64(), n_starts: starts, flow_time: steps, checkpoints, seed };
    let r = ergodicity_probe(&f, &cfg);
    let finals: Vec<String> = r.orbits.iter().map(|o| format!("{:.6}", o.final_average)).collect();
    eprintln!("T1 area fraction {:.6}; final averages [{}]; spread {:.6}", r.t1_area_fraction, finals.join(", "), r.spread);
    if r.degenerate {
        eprintln!("warning: {} orbit(s) hit a zero and were restarted", r.restarts);
    }
    if let Some(path) = csv {
        write_csv(&r, BufWriter::new(File::create(path)?))?;
    }
    emit(&json!({"config": to_value(&cfg), "result": to_value(&r)}))?;
    Ok(0)
}

fn cmd_render(file: &Path, pair: &PairArgs, output: &Path) -> Outcome {
    let input = load_valid(file)?;
    let (v1, v2) = input.pair(pair)?;
    let p = make_pair(&input.splitting, &v1, &v2)?;
    let f = build_normal_form(&input.splitting, &p)?;
    std::fs::write(output, render_svg(&f))?;
    eprintln!("wrote {}", output.display());
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure(EXIT_USAGE, "--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure(EXIT_USAGE, e.to_string()))?;
    }
    match &cli.command {
        Command::Example { name, param } => cmd_example(name, param),
        Command::Check { file } => cmd_check(file),
        Command::Partners { file, v1, max, cap } => cmd_partners(file, v1, *max, *cap),
        Command::Twist { file, pair, k } => cmd_twist(file, pair, *k),
        Command::PropNew { file, pair, v2p } => cmd_prop_new(file, pair, v2p),
        Command::Refine { file, eps, eps_prime, search } => cmd_refine(file, eps, eps_prime, search),
        Command::Tree { file, depth, eps0, search, report } => cmd_tree(file, *depth, eps0, search, report),
        Command::Verify { treefile } => cmd_verify(treefile),
        Command::Simulate { file, pair, direction, steps, starts, checkpoints, seed, csv } => {
            cmd_simulate(file, pair, direction, *steps, *starts, *checkpoints, *seed, csv)
        }
        Command::Render { file, pair, output } => cmd_render(file, pair, output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
