use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bandeau_cli::{serve, Store};
use bandeau_core::format::write_atomic;
use bandeau_core::{
    brute_force, brute_force_rearrangement, load_case, load_plan, plan_svg, reduce, save_case,
    save_plan, solve_3partition, solve_case, sweep_case, sweep_chart_svg, synth_bucket,
    zero_cost_decision, Bucket, Case, Mode, Outcome, PlanFile, SolveParams, Solved, SweepParams,
    SweepRecord, ThreePartitionInstance,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_INVALID: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "bandeau",
    version,
    about = "Plan cuts that reshape a deformed curve onto an ideal one"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic cases into a directory
    Synth {
        #[arg(long, value_enum)]
        bucket: BucketArg,
        /// Seed of the first case; case i uses seed + i
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve a case with exactly k cuts
    Solve {
        #[command(flatten)]
        solve: SolveArgs,
        /// Also render the plan as SVG
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Solve a case for every cut count up to kmax
    Sweep {
        #[arg(long)]
        case: PathBuf,
        #[arg(long, default_value_t = 13)]
        kmax: usize,
        #[command(flatten)]
        weights: Weights,
        /// Write one JSON record per cut count
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the area chart as SVG
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Render a case, a case with its plan, or a sweep chart as SVG
    Plot {
        #[arg(long, required_unless_present = "sweep")]
        case: Option<PathBuf>,
        #[arg(long, requires = "case")]
        plan: Option<PathBuf>,
        /// Sweep records written by `sweep --out`
        #[arg(long, conflicts_with_all = ["case", "plan"])]
        sweep: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive search over all plans of a small case
    Brute {
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Build the curve pair encoding a 3-Partition instance
    Reduce3p {
        #[command(flatten)]
        sizes: SizesArg,
        /// Write the reduced instance here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide a 3-Partition instance directly and through its reduction
    Oracle3p {
        #[command(flatten)]
        sizes: SizesArg,
    },
    /// Run the HTTP service
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Persist cases and plans here; in-memory when absent
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Weights {
    /// Penalty per uncovered ideal interval
    #[arg(long, default_value_t = 1e6)]
    delta: f64,
    /// Scale tolerance of a piece against its span
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::NoRearrangement)]
    mode: ModeArg,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(short, long)]
    k: usize,
    #[command(flatten)]
    weights: Weights,
    /// Write the plan here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SizesArg {
    /// Element sizes, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<u64>,
    /// Require every size strictly between B/4 and B/2
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BucketArg {
    Metopic,
    Sagittal,
    Extreme,
}

impl From<BucketArg> for Bucket {
    fn from(b: BucketArg) -> Self {
        match b {
            BucketArg::Metopic => Bucket::Metopic,
            BucketArg::Sagittal => Bucket::Sagittal,
            BucketArg::Extreme => Bucket::Extreme,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    NoRearrangement,
    Rearrangement,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::NoRearrangement => Mode::NoRearrangement,
            ModeArg::Rearrangement => Mode::Rearrangement,
        }
    }
}

impl SolveArgs {
    fn params(&self) -> SolveParams {
        SolveParams {
            k: self.k,
            delta: self.weights.delta,
            alpha: self.weights.alpha,
            mode: self.weights.mode.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Synth {
            bucket,
            seed,
            count,
            out,
        } => synth(bucket.into(), seed, count, &out),
        Command::Solve { solve, svg } => solve_cmd(&solve, svg.as_deref()),
        Command::Sweep {
            case,
            kmax,
            weights,
            out,
            svg,
        } => sweep_cmd(&case, kmax, &weights, out.as_deref(), svg.as_deref()),
        Command::Plot {
            case,
            plan,
            sweep,
            out,
        } => plot(case.as_deref(), plan.as_deref(), sweep.as_deref(), &out),
        Command::Brute { solve } => brute(&solve),
        Command::Reduce3p { sizes, out } => reduce3p(&sizes, out.as_deref()),
        Command::Oracle3p { sizes } => oracle3p(&sizes),
        Command::Serve {
            host,
            port,
            data_dir,
        } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .with_context(|| format!("bad listen address {host}:{port}"))?;
            let store = match data_dir {
                Some(dir) => Store::open(&dir)?,
                None => Store::in_memory(),
            };
            tokio::runtime::Runtime::new()?.block_on(serve(addr, store))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn synth(bucket: Bucket, seed: u64, count: usize, out: &Path) -> Result<ExitCode> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (i, sc) in synth_bucket(bucket, seed, count)?.iter().enumerate() {
        let case = Case::from_synth(sc);
        let path = out.join(format!(
            "{}-{}.json",
            bucket.as_str(),
            seed.wrapping_add(i as u64)
        ));
        save_case(&case, &path)?;
        println!("{}  {}", case.id(), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_plan(plan: &PlanFile) {
    println!("objective   {:.6}", plan.objective);
    println!("cuts        {:?}", plan.cuts);
    println!("clamps      {:?}", plan.clamps);
    println!("uncovered   {}", plan.uncovered);
    println!("plan id     {}", plan.id);
    println!("solve time  {:.1} ms", plan.solve_millis);
}

fn infeasible(params: &SolveParams) -> ExitCode {
    eprintln!(
        "infeasible: no plan with {} cuts has finite cost (alpha {})",
        params.k, params.alpha
    );
    ExitCode::from(EXIT_INFEASIBLE)
}

fn solve_cmd(args: &SolveArgs, svg: Option<&Path>) -> Result<ExitCode> {
    let case = load_case(&args.case)?;
    let params = args.params();
    params.validate()?;
    let plan = match solve_case(&case, params)? {
        Solved::Plan(plan) => plan,
        Solved::Infeasible { params, .. } => return Ok(infeasible(&params)),
    };
    print_plan(&plan);
    if let Some(out) = &args.out {
        save_plan(&plan, out)?;
    }
    if let Some(svg) = svg {
        write_atomic(svg, plan_svg(&case, Some(&plan))?.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn brute(args: &SolveArgs) -> Result<ExitCode> {
    let case = load_case(&args.case)?;
    let params = args.params();
    params.validate()?;
    let inst = case.instance(&params)?;
    let start = Instant::now();
    let outcome = match params.mode {
        Mode::NoRearrangement => brute_force(&inst)?,
        Mode::Rearrangement => brute_force_rearrangement(&inst)?,
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let plan = match outcome {
        Outcome::Optimal(plan) => PlanFile::new(&case, params, &plan, ms),
        Outcome::Infeasible => return Ok(infeasible(&params)),
    };
    print_plan(&plan);
    if let Some(out) = &args.out {
        save_plan(&plan, out)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn sweep_cmd(
    case_path: &Path,
    kmax: usize,
    weights: &Weights,
    out: Option<&Path>,
    svg: Option<&Path>,
) -> Result<ExitCode> {
    let case = load_case(case_path)?;
    let params = SweepParams {
        kmax,
        delta: weights.delta,
        alpha: weights.alpha,
        mode: weights.mode.into(),
    };
    params.at(0).validate()?;
    let mut rows = Vec::new();
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "{:>3}  {:>14}  {:>14}",
        "k", "objective", "best so far"
    )?;
    sweep_case(&case, params, |r| {
        let _ = writeln!(
            stdout,
            "{:>3}  {:>14}  {:>14}",
            r.k,
            fmt_opt(r.objective),
            fmt_opt(r.best_at_most)
        );
        rows.push(r);
    })?;
    if let Some(out) = out {
        let mut text = String::new();
        for r in &rows {
            text += &serde_json::to_string(r)?;
            text.push('\n');
        }
        write_atomic(out, text.as_bytes())?;
    }
    if let Some(svg) = svg {
        write_atomic(svg, sweep_chart_svg(&rows).as_bytes())?;
    }
    if rows.iter().all(|r| !r.feasible) {
        eprintln!("infeasible: no cut count up to {kmax} has a finite-cost plan");
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    Ok(ExitCode::SUCCESS)
}

fn read_sweep(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        rows.push(row);
    }
    Ok(rows)
}

fn plot(
    case: Option<&Path>,
    plan: Option<&Path>,
    sweep: Option<&Path>,
    out: &Path,
) -> Result<ExitCode> {
    let svg = match (case, sweep) {
        (_, Some(sweep)) => sweep_chart_svg(&read_sweep(sweep)?),
        (Some(case), None) => {
            let case = load_case(case)?;
            let plan = plan.map(load_plan).transpose()?;
            if let Some(p) = &plan {
                p.validate_for(&case)?;
            }
            plan_svg(&case, plan.as_ref())?
        }
        (None, None) => bail!("either --case or --sweep is required"),
    };
    write_atomic(out, svg.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn instance(args: &SizesArg) -> Result<ThreePartitionInstance> {
    Ok(ThreePartitionInstance::new(
        args.sizes.clone(),
        args.strict,
    )?)
}

fn reduce3p(args: &SizesArg, out: Option<&Path>) -> Result<ExitCode> {
    let reduced = reduce(&instance(args)?)?;
    let json = serde_json::to_string_pretty(&reduced)? + "\n";
    eprintln!(
        "m = {}, B = {}, |P| = {}, |Q| = {}, k = {}",
        reduced.m,
        reduced.b,
        reduced.deformed.len(),
        reduced.ideal.len(),
        reduced.k
    );
    match out {
        Some(path) => write_atomic(path, json.as_bytes())?,
        None => io::stdout().write_all(json.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle3p(args: &SizesArg) -> Result<ExitCode> {
    let tp = instance(args)?;
    let direct = solve_3partition(&tp)?;
    let via = zero_cost_decision(&reduce(&tp)?);
    let word = |b: bool| if b { "yes" } else { "no" };
    println!("3-partition       {}", word(direct));
    println!("zero-cost refit   {}", word(via));
    if direct != via {
        bail!("the two decisions disagree");
    }
    Ok(ExitCode::SUCCESS)
}
