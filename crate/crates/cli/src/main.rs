use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use symlab::asymptotics::{self, moment_parts, FamilyModel};
use symlab::efficiency::{self, alpha_grid, format_value, IndexCurve};
use symlab::montecarlo::{self, McConfig};
use symlab::validation::{self, Suite, DEFAULT_SEED};
use symlab::{evaluate, AltKind, AlternativeFamily, Family, StatKind, StatisticSpec, SymmetricNull};

#[derive(Parser)]
#[command(name = "symlab", version, about = "Symmetry tests around an estimated center")]
struct Cli {
    /// Worker threads for the parallel library calls.
    #[arg(long, global = true, env = "SYMLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a statistic on data with a Monte Carlo p-value.
    Test(TestArgs),
    /// Local approximate Bahadur indices over a trimming grid.
    Index(IndexArgs),
    /// Limiting variances over a trimming grid, or KS variance functions over t.
    Variance(VarianceArgs),
    /// Run the acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct TestArgs {
    /// One value per line ('#' starts a comment), or a CSV file with --col.
    data: PathBuf,
    #[arg(long)]
    stat: String,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value = "normal")]
    null: String,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// CSV column, by header name or 0-based position.
    #[arg(long)]
    col: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long, default_value = "normal")]
    null: String,
    #[arg(long, default_value = "contam")]
    alt: String,
    /// Comma-separated test ids; all tests when omitted.
    #[arg(long, value_delimiter = ',')]
    tests: Vec<String>,
    /// Number of equally spaced trimming levels in [0, 1/2].
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Combined long-format CSV; per-test files and a manifest go beside it.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VarianceArgs {
    #[arg(long, value_delimiter = ',', default_value = "normal,logistic,cauchy")]
    nulls: Vec<String>,
    #[arg(long)]
    stat: String,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Emit the variance function of a supremum family in t at --alpha.
    #[arg(long)]
    over_t: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    t_max: f64,
    #[arg(long, default_value_t = 201)]
    t_points: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value = "quick")]
    suite: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

/// Error carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<symlab::Error> for Failure {
    fn from(e: symlab::Error) -> Self {
        Self {
            code: if e.is_not_applicable() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::input(e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

#[derive(Serialize)]
struct RunManifest {
    command: String,
    parameters: serde_json::Value,
    seed: Option<u64>,
    tool_version: String,
    outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    fn write_beside(&mut self, main: &Path) -> Result<(), Failure> {
        let path = sibling(main, "manifest.json");
        self.outputs.push(path.display().to_string());
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// `dir/stem.<suffix>` for an output path `dir/stem.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn parse<T: std::str::FromStr<Err = symlab::Error>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(|e: symlab::Error| Failure::input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("symlab: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Index(a) => cmd_index(a),
        Command::Variance(a) => cmd_variance(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("symlab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_values(path: &Path, col: Option<&str>) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let number = |s: &str, line: usize| -> Result<f64, Failure> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("{}:{line}: not a number: '{}'", path.display(), s.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Failure::input(format!("{}:{line}: non-finite value", path.display())))
        }
    };
    let Some(col) = col else {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                out.push(number(content, i + 1)?);
            }
        }
        return Ok(out);
    };
    let position: Option<usize> = col.parse().ok();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(position.is_none())
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let idx = match position {
        Some(p) => p,
        None => reader
            .headers()?
            .iter()
            .position(|h| h.trim() == col)
            .ok_or_else(|| Failure::input(format!("no column named '{col}'")))?,
    };
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let cell = row
            .get(idx)
            .ok_or_else(|| Failure::input(format!("row {} has no column {idx}", i + 1)))?;
        out.push(number(cell, i + 1)?);
    }
    Ok(out)
}

fn cmd_test(a: TestArgs) -> Outcome {
    let kind: StatKind = parse(&a.stat)?;
    let null: SymmetricNull = parse(&a.null)?;
    let spec = StatisticSpec::new(kind, a.alpha)?;
    montecarlo::check_applicable(&spec, null)?;
    let data = read_values(&a.data, a.col.as_deref())?;
    let value = evaluate(&spec, &data)?;
    let cfg = McConfig::new(data.len(), a.reps, a.seed, a.level)?;
    let dist = montecarlo::null_distribution(&spec, null, &cfg)?;
    let p = dist.p_value(value.value);
    let crit = dist.critical_value(a.level);
    let manifest = RunManifest::new(
        "test",
        json!({
            "data": a.data.display().to_string(),
            "stat": kind.id(),
            "alpha": a.alpha,
            "null": (null.name()),
            "reps": a.reps,
            "level": a.level,
            "column": a.col,
        }),
        Some(a.seed),
    );
    let mut out = io::stdout().lock();
    if a.json {
        let report = json!({
            "manifest": manifest,
            "n": data.len(),
            "statistic": value.value,
            "sup_argument": value.sup_argument,
            "p_value": p,
            "critical_value": crit.value,
            "randomization": crit.randomization,
            "failures": dist.failures,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        writeln!(out, "statistic      {spec}")?;
        writeln!(out, "null           {null}")?;
        writeln!(out, "n              {}", data.len())?;
        writeln!(out, "value          {}", value.value)?;
        if let Some(t) = value.sup_argument {
            writeln!(out, "attained at t  {t}")?;
        }
        writeln!(out, "p-value        {p}")?;
        writeln!(out, "critical value {} (level {}, randomization {:.4})", crit.value, a.level, crit.randomization)?;
        writeln!(out, "reps           {} (seed {})", a.reps, a.seed)?;
    }
    Ok(0)
}

fn kinds_from(list: &[String]) -> Result<Vec<StatKind>, Failure> {
    if list.is_empty() {
        Ok(StatKind::battery())
    } else {
        list.iter().map(|s| parse(s)).collect()
    }
}

fn grid_from(points: usize) -> Result<Vec<f64>, Failure> {
    if points < 2 {
        return Err(Failure::input("the grid needs at least 2 points"));
    }
    Ok(alpha_grid(points))
}

fn cmd_index(a: IndexArgs) -> Outcome {
    let null: SymmetricNull = parse(&a.null)?;
    let kind: AltKind = parse(&a.alt)?;
    let alt = AlternativeFamily::new(kind, null);
    let kinds = kinds_from(&a.tests)?;
    let grid = grid_from(a.grid)?;
    let curves: Vec<IndexCurve> = kinds
        .iter()
        .map(|&k| efficiency::index_curve(k, &alt, &grid))
        .collect::<symlab::Result<_>>()?;
    let all_failed = curves.iter().all(|c| c.all_not_applicable());
    let mut manifest = RunManifest::new(
        "index",
        json!({
            "null": (null.name()),
            "alternative": alt.name(),
            "tests": curves.iter().map(|c| c.test.clone()).collect::<Vec<_>>(),
            "grid_points": a.grid,
        }),
        None,
    );
    match &a.output {
        Some(path) => {
            efficiency::write_long_csv(&curves, fs::File::create(path)?)?;
            manifest.outputs.push(path.display().to_string());
            for c in &curves {
                let file = sibling(path, &format!("{}.csv", file_safe(&c.test)));
                c.write_csv(fs::File::create(&file)?)?;
                manifest.outputs.push(file.display().to_string());
            }
            if a.json {
                let file = sibling(path, "json");
                fs::write(&file, serde_json::to_string_pretty(&json!({ "curves": curves }))? + "\n")?;
                manifest.outputs.push(file.display().to_string());
            }
            manifest.write_beside(path)?;
        }
        None if a.json => {
            let doc = json!({ "manifest": manifest, "curves": curves });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        None => efficiency::write_long_csv(&curves, io::stdout().lock())?,
    }
    if all_failed {
        eprintln!("symlab: every requested test is not applicable under the {null} null");
        return Ok(3);
    }
    Ok(0)
}

/// `NA_I(4)` becomes `NA_I_4`.
fn file_safe(id: &str) -> String {
    id.replace('(', "_").replace(')', "")
}

/// `sigma^2` of any test at `alpha`: the supremum over `t` for families.
fn limiting_variance(kind: StatKind, null: SymmetricNull, alpha: f64) -> symlab::Result<f64> {
    match kind.family() {
        Family::Integral => asymptotics::asymptotic_variance(kind, null, alpha),
        Family::Supremum => Ok(asymptotics::sup_variance(kind, null, alpha)?.value),
        Family::Moment => Ok(moment_parts(kind, null)?.variance),
    }
}

fn cmd_variance(a: VarianceArgs) -> Outcome {
    let kind: StatKind = parse(&a.stat)?;
    let nulls: Vec<SymmetricNull> = a.nulls.iter().map(|s| parse(s)).collect::<Result<_, _>>()?;
    if nulls.is_empty() {
        return Err(Failure::input("no null distributions given"));
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![if a.over_t { "t".to_string() } else { "alpha".to_string() }];
    header.extend(nulls.iter().map(|n| n.name().to_string()));
    let mut defined = 0usize;
    let mut extra = serde_json::Map::new();
    if a.over_t {
        if kind.family() != Family::Supremum {
            return Err(Failure::input(format!("--over-t needs a supremum statistic, got {kind}")));
        }
        let alpha = a.alpha.ok_or_else(|| Failure::input("--over-t needs --alpha"))?;
        if a.t_points < 2 || !(a.t_max > 0.0) {
            return Err(Failure::input("--over-t needs t-max > 0 and at least 2 points"));
        }
        let mut models = Vec::new();
        for &null in &nulls {
            match FamilyModel::new(kind, null, alpha) {
                Ok(m) => {
                    let sup = m.sup_variance();
                    extra.insert(format!("argmax_{}", null.name()), json!(sup.argmax));
                    extra.insert(format!("sup_{}", null.name()), json!(sup.value));
                    models.push(Some(m));
                }
                Err(e) if e.is_not_applicable() => models.push(None),
                Err(e) => return Err(e.into()),
            }
        }
        for i in 0..a.t_points {
            let t = a.t_max * i as f64 / (a.t_points - 1) as f64;
            let mut row = vec![t.to_string()];
            for m in &models {
                row.push(match m {
                    Some(m) => {
                        defined += 1;
                        m.variance(t).to_string()
                    }
                    None => String::new(),
                });
            }
            rows.push(row);
        }
    } else {
        for alpha in grid_from(a.grid)? {
            let mut row = vec![alpha.to_string()];
            for &null in &nulls {
                row.push(match limiting_variance(kind, null, alpha) {
                    Ok(v) => {
                        defined += 1;
                        format_value(v)
                    }
                    Err(e) if e.is_not_applicable() => String::new(),
                    Err(e) => return Err(e.into()),
                });
            }
            rows.push(row);
        }
    }
    let mut params = json!({
        "stat": kind.id(),
        "nulls": nulls.iter().map(|n| n.name()).collect::<Vec<_>>(),
        "over_t": a.over_t,
        "alpha": a.alpha,
        "grid_points": if a.over_t { a.t_points } else { a.grid },
        "t_max": a.over_t.then_some(a.t_max),
    });
    params.as_object_mut().expect("object").extend(extra);
    let mut manifest = RunManifest::new("variance", params, None);
    let write = |w: &mut dyn Write| -> Result<(), Failure> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&header)?;
        for r in &rows {
            csv.write_record(r)?;
        }
        csv.flush()?;
        Ok(())
    };
    match &a.output {
        Some(path) => {
            write(&mut fs::File::create(path)?)?;
            manifest.outputs.push(path.display().to_string());
            manifest.write_beside(path)?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    if defined == 0 {
        eprintln!("symlab: {kind} is not applicable under any requested null");
        return Ok(3);
    }
    Ok(0)
}

fn cmd_validate(a: ValidateArgs) -> Outcome {
    let suite: Suite = parse(&a.suite)?;
    let mut outcomes = Vec::new();
    for (id, _) in validation::CRITERIA {
        let o = validation::run(id, suite, a.seed);
        if !a.json {
            println!("{o}");
        }
        outcomes.push(o);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if a.json {
        let manifest = RunManifest::new("validate", json!({ "suite": suite.to_string() }), Some(a.seed));
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "manifest": manifest, "criteria": outcomes }))?
        );
    } else {
        println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
