use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sbtg_core::bbc::{GateConfig, Sleep};
use sbtg_core::harness::{
    crash_parts, run_experiment, unit_parts, write_report, Manifest, Mode, RecordStore, RunOptions, RunRecord,
};
use sbtg_core::heuristics::CrashTarget;
use sbtg_core::minilang::parse_stack_trace;
use sbtg_core::search::{run_crash_ga, run_dynamosa, Budget, CrashFitness, SearchConfig};
use sbtg_core::Subject;

#[derive(Parser)]
#[command(name = "sbtg", version, about = "Search-based test generation for .mini programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate tests that cover a program's lines and branches.
    Unit {
        program: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Search for a test that reproduces a crash stack trace.
    Crash {
        program: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// 1-based frame, counted from the innermost, whose function the
        /// tests call.
        #[arg(long)]
        target_frame: usize,
        #[arg(long, value_enum, default_value_t = FitnessArg::Std)]
        fitness: FitnessArg,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run every (case, config, seed) cell of a manifest.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 30)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize the records in a bench output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// Fitness evaluations.
    #[arg(long, default_value_t = 5000)]
    budget: u64,
    #[arg(long, default_value_t = 50)]
    population: usize,
    /// Share of fitness ties handed to BBC; leave unset to run without it.
    #[arg(long)]
    bbc_usage_rate: Option<f64>,
    /// Evaluations an objective stays active before BBC starts deciding.
    #[arg(long, default_value_t = 0)]
    bbc_sleep: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the run record and generated tests.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitnessArg {
    Ws,
    Std,
}

impl SearchArgs {
    fn config(&self) -> Result<SearchConfig> {
        let config = SearchConfig {
            population_size: self.population,
            budget: Budget::Evaluations(self.budget),
            bbc: self.bbc_usage_rate.map(|usage_rate| GateConfig {
                usage_rate,
                sleep: Sleep::Evaluations(self.bbc_sleep),
            }),
            seed: self.seed,
            ..SearchConfig::default()
        };
        if let Err(e) = config.validate() {
            bail!("{e}");
        }
        Ok(config)
    }

    fn config_id(&self) -> String {
        match self.bbc_usage_rate {
            Some(r) => format!("bbc{r}"),
            None => "base".to_string(),
        }
    }
}

fn load_subject(path: &Path) -> Result<Subject> {
    let source = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("program.mini");
    Subject::parse(name, &source).with_context(|| format!("parsing {}", path.display()))
}

fn case_id(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("program").to_string()
}

fn save(out: &Path, record: &RunRecord, tests: &str) -> Result<()> {
    RecordStore::in_dir(out).append(std::slice::from_ref(record))?;
    let path = out.join(format!("{}-{}-{}.tests", record.case, record.config, record.seed));
    std::fs::write(&path, tests).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn unit(program: &Path, args: &SearchArgs) -> Result<()> {
    let subject = load_subject(program)?;
    let config = args.config()?;
    let started = Instant::now();
    let result = run_dynamosa(&subject, &config);
    println!(
        "{}: line coverage {:.3}, branch coverage {:.3} after {} evaluations ({:.1}s)",
        program.display(),
        result.line_coverage,
        result.branch_coverage,
        result.evaluations,
        started.elapsed().as_secs_f64()
    );
    let mut tests = String::new();
    for (i, (objective, test)) in result.archive.iter().enumerate() {
        tests.push_str(&format!("// covers {objective}\n"));
        tests.push_str(&test.to_script(&format!("t{i}")));
    }
    print!("{tests}");
    if let Some(out) = &args.out {
        let (outcome, timeline, counters) = unit_parts(&result);
        let record = RunRecord {
            case: case_id(program),
            config: args.config_id(),
            seed: args.seed,
            mode: Mode::Unit,
            outcome,
            timeline,
            counters,
        };
        save(out, &record, &tests)?;
    }
    Ok(())
}

fn crash(program: &Path, trace: &Path, frame: usize, fitness: FitnessArg, args: &SearchArgs) -> Result<()> {
    let subject = load_subject(program)?;
    let text = std::fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let parsed = parse_stack_trace(&text)?;
    let target = CrashTarget::new(&subject, &parsed, frame)?;
    if !subject.program.entry_names.contains(target.target_function()) {
        bail!("target frame function `{}` is private", target.target_function());
    }
    let fitness = match fitness {
        FitnessArg::Ws => CrashFitness::WeightedSum,
        FitnessArg::Std => CrashFitness::StDistance,
    };
    let config = args.config()?;
    let started = Instant::now();
    let result = run_crash_ga(&subject, &target, fitness, &config);
    println!(
        "{}: {} after {} evaluations (best fitness {}, {:.1}s)",
        trace.display(),
        if result.reproduced { "reproduced" } else { "not reproduced" },
        result.evaluations,
        result.best_fitness,
        started.elapsed().as_secs_f64()
    );
    let tests = result.best_test.to_script("best");
    print!("{tests}");
    if let Some(out) = &args.out {
        let (outcome, timeline, counters) = crash_parts(&result);
        let record = RunRecord {
            case: case_id(trace),
            config: args.config_id(),
            seed: args.seed,
            mode: Mode::Crash,
            outcome,
            timeline,
            counters,
        };
        save(out, &record, &tests)?;
    }
    Ok(())
}

fn bench(manifest: &Path, options: RunOptions, out: &Path) -> Result<()> {
    let experiment = Manifest::load(manifest)?;
    let store = RecordStore::in_dir(out);
    let already = store.keys()?.len();
    if already > 0 {
        println!("resuming: {already} records already in {}", store.path().display());
    }
    let started = Instant::now();
    let records = run_experiment(&experiment, &options, Some(&store), |r| {
        let detail = match (&r.outcome.error, r.outcome.reproduced, r.outcome.branch_coverage) {
            (Some(e), _, _) => format!("failed: {e}"),
            (None, Some(rep), _) => format!("reproduced={rep}"),
            (None, None, Some(c)) => format!("branch coverage {c:.3}"),
            _ => String::new(),
        };
        eprintln!("{} {} seed {}: {detail}", r.case, r.config, r.seed);
    })?;
    println!("{} records in {:.1}s", records.len(), started.elapsed().as_secs_f64());
    write_report(out, &records)?;
    println!("report written to {}", out.display());
    Ok(())
}

fn report(input: &Path) -> Result<()> {
    let records = RecordStore::in_dir(input).load()?;
    if records.is_empty() {
        bail!("no records in {}", input.display());
    }
    let stats = write_report(input, &records)?;
    for case in &stats.cases {
        for c in &case.configs {
            let metric = match (c.reproduction_ratio, c.branch_coverage) {
                (Some(r), _) => format!("reproduction {r:.2}"),
                (None, Some(b)) => format!("branch coverage {:.3} ± {:.3}", b.mean, b.sd),
                _ => "n/a".to_string(),
            };
            println!("{:16} {:14} runs {:3}  {metric}", case.case, c.config, c.runs);
        }
        for cmp in &case.comparisons {
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
            println!(
                "{:16} {} vs {}: A12 {} p {} OR {}",
                case.case,
                cmp.treatment,
                cmp.baseline,
                fmt(cmp.a12),
                cmp.p_value.map_or("n/a".to_string(), |p| format!("{p:.2e}")),
                fmt(cmp.odds_ratio)
            );
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Unit { program, search } => unit(&program, &search),
        Command::Crash {
            program,
            trace,
            target_frame,
            fitness,
            search,
        } => crash(&program, &trace, target_frame, fitness, &search),
        Command::Bench {
            manifest,
            reps,
            base_seed,
            jobs,
            out,
        } => bench(
            &manifest,
            RunOptions {
                repetitions: reps,
                base_seed,
                jobs,
            },
            &out,
        ),
        Command::Report { input } => report(&input),
    }
}
