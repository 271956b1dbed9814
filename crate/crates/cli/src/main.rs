use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hourglass::analysis::checks::Violation;
use hourglass::analysis::resources::{estimate, render_csv};
use hourglass::workload::{generate, Duplicates};
use hourglass::{
    build_tree, compare_variants, oracle_stable_sort, run, run_bubbles, trace, Element, RunReport,
    SimConfig, SimError, SinkPattern, TieBreak, Variant,
};

#[derive(Parser)]
#[command(name = "hourglass", version, about = "Cycle-accurate hourglass sorting tree simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sort an input array and print the emitted stream.
    Sort(SortArgs),
    /// Run the hourglass and registered trees on the same input.
    Compare(CompareArgs),
    /// Print the resource model as CSV.
    Resources(ResourceArgs),
    /// Emit one JSON record per simulated cycle.
    Trace(TraceArgs),
    /// Generate a random input file.
    Gen(GenArgs),
}

#[derive(Args)]
struct Source {
    /// Text file with one unsigned decimal per line.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    input: Option<PathBuf>,
    /// Sort N distinct random values instead of reading a file.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
    #[arg(long, default_value_t = 16)]
    width: u32,
    /// Seeds both the random input and a random sink.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Behaviour {
    #[arg(long, default_value = "left")]
    tie_break: TieBreak,
    /// always, every:K or random:P
    #[arg(long, default_value = "always")]
    sink: SinkPattern,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    behaviour: Behaviour,
    #[arg(long, default_value = "hourglass")]
    variant: Variant,
    /// Stop after the M smallest values.
    #[arg(long, value_name = "M")]
    take: Option<usize>,
    /// Print `value,index` with the input line as index.
    #[arg(long)]
    indices: bool,
    /// Print the tree wiring to stderr before running.
    #[arg(long)]
    dump_topology: bool,
}

#[derive(Args)]
struct SortArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Compare the output against a reference stable sort.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Include every cell's registers in each record.
    #[arg(long)]
    verbose: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    behaviour: Behaviour,
}

#[derive(Args)]
struct ResourceArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    widths: Vec<u32>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    width: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// none, some or heavy
    #[arg(long, default_value = "none")]
    duplicates: Duplicates,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Violations(Vec<Violation>),
    Mismatch(String),
    NonTermination(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Violations(_) | Failure::Mismatch(_) => 2,
            Failure::NonTermination(_) => 3,
        }
    }

    fn report(&self) {
        match self {
            Failure::Input(msg) | Failure::Mismatch(msg) | Failure::NonTermination(msg) => {
                eprintln!("error: {msg}")
            }
            Failure::Violations(found) => {
                eprintln!("error: {} invariant violations", found.len());
                for v in found {
                    eprintln!("  {v}");
                }
            }
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NonTermination { .. } => Failure::NonTermination(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
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
    let result = match cli.command {
        Command::Sort(args) => cmd_sort(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Resources(args) => cmd_resources(&args),
        Command::Trace(args) => cmd_trace(&args),
        Command::Gen(args) => cmd_gen(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.code())
        }
    }
}

fn read_values(path: &Path) -> Result<Vec<u64>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            line.trim().parse::<u64>().map_err(|e| {
                Failure::Input(format!("{}:{}: {:?} is not an unsigned integer: {e}", path.display(), i + 1, line))
            })
        })
        .collect()
}

fn load_input(source: &Source) -> Result<Vec<Element>, Failure> {
    let values = match (&source.input, source.random) {
        (Some(path), _) => read_values(path)?,
        (None, Some(n)) => generate(n, source.width, source.seed, Duplicates::None)?,
        (None, None) => return Err(Failure::Input("either --input or --random is required".into())),
    };
    if values.is_empty() {
        return Err(Failure::Input("input is empty".into()));
    }
    Ok(Element::indexed(&values))
}

fn simulate(args: &RunArgs, verbose: bool) -> Result<(Vec<Element>, RunReport), Failure> {
    let input = load_input(&args.source)?;
    let mut config = SimConfig::new(input.len(), args.source.width)
        .variant(args.variant)
        .tie_break(args.behaviour.tie_break)
        .sink(args.behaviour.sink)
        .seed(args.source.seed)
        .track_indices(args.indices)
        .verbose(verbose);
    if let Some(m) = args.take {
        config = config.take(m);
    }
    if args.dump_topology {
        eprint!("{}", build_tree(input.len())?.dump());
    }
    let report = run(&config, &input)?;
    if !report.violations.is_empty() {
        return Err(Failure::Violations(report.violations));
    }
    Ok((input, report))
}

fn summary(report: &RunReport) -> String {
    let first = report
        .first_output_cycle
        .map_or_else(|| "-".to_string(), |c| c.to_string());
    format!(
        "first={first} total={} bubbles={}",
        report.total_cycles,
        run_bubbles(report).len()
    )
}

fn cmd_sort(args: &SortArgs) -> Result<(), Failure> {
    let (input, report) = simulate(&args.run, false)?;
    if args.check {
        let mut expected = oracle_stable_sort(&input);
        expected.truncate(report.output.len());
        let matches = if args.run.indices {
            expected == report.output
        } else {
            expected.iter().map(|e| e.value).eq(report.output.iter().map(|e| e.value))
        };
        if !matches {
            return Err(Failure::Mismatch("output differs from the reference stable sort".into()));
        }
    }
    let mut out = BufWriter::new(io::stdout().lock());
    for e in &report.output {
        writeln!(out, "{e}")?;
    }
    out.flush()?;
    eprintln!("{}", summary(&report));
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> Result<(), Failure> {
    let (_, report) = simulate(&args.run, args.verbose)?;
    match &args.out {
        Some(path) => trace::write_jsonl(BufWriter::new(File::create(path)?), &report.trace)?,
        None => trace::write_jsonl(BufWriter::new(io::stdout().lock()), &report.trace)?,
    }
    eprintln!("{}", summary(&report));
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let input = load_input(&args.source)?;
    let config = SimConfig::new(input.len(), args.source.width)
        .tie_break(args.behaviour.tie_break)
        .sink(args.behaviour.sink)
        .seed(args.source.seed);
    let cmp = compare_variants(&config, &input)?;
    let json = serde_json::to_string_pretty(&cmp).map_err(|e| Failure::Input(e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn cmd_resources(args: &ResourceArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for &n in &args.sizes {
        if n == 0 {
            return Err(Failure::Input("sizes must be positive".into()));
        }
        for &w in &args.widths {
            if !(1..=64).contains(&w) {
                return Err(Failure::Input(format!("width {w} is outside 1..=64")));
            }
            rows.push(estimate(n, w));
        }
    }
    for &w in &args.widths {
        if rows.iter().any(|r| r.w == w && r.lut_estimate.is_none()) {
            eprintln!("warning: no LUT fit for width {w}; lut column left empty");
        }
    }
    for &n in &args.sizes {
        if rows.iter().any(|r| r.n == n && r.extrapolated) {
            eprintln!("warning: size {n} is outside the fitted range; LUT figure is extrapolated");
        }
    }
    print!("{}", render_csv(&rows));
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let values = generate(args.n, args.width, args.seed, args.duplicates)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}
