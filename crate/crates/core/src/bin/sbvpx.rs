use clap::{Parser, Subcommand};
use sbvpx::scenario::{corpus, load_scenario, parse_corpus, render, run, Scenario, ScenarioError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(name = "sbvpx", version, about = "Approximation and energy experiments for SBV maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report directory.
    Run {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output root; results go to <out>/<name>/.
        #[arg(long, env = "SBVPX_OUT")]
        out: Option<PathBuf>,
        /// Worker thread cap.
        #[arg(long)]
        jobs: Option<usize>,
        /// Replaces the scenario seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Expand a corpus spec into scenario files.
    Corpus {
        /// Corpus spec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Directory receiving the scenario files.
        #[arg(long, env = "SBVPX_OUT")]
        out: PathBuf,
    },
    /// Draw the input map of a scenario as SVG.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "SBVPX_OUT")]
        out: Option<PathBuf>,
    },
}

fn fail(e: ScenarioError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        ScenarioError::Schema { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn base_dir(p: &Path) -> PathBuf {
    p.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn out_dir(sc: &Scenario, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| sc.output.clone()).unwrap_or_else(|| PathBuf::from("out")).join(&sc.name)
}

fn cmd_run(path: &Path, out: Option<PathBuf>, jobs: Option<usize>, seed: Option<u64>) -> Result<bool, ScenarioError> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| ScenarioError::Pipeline(e.to_string()))?;
    }
    let mut sc = load_scenario(path)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();
    let res = run(&sc, &base_dir(path))?;
    let dir = out_dir(&sc, out);
    res.write(&dir)?;
    let meta = serde_json::json!({
        "started_unix": started,
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "threads": rayon::current_num_threads(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mp = dir.join("meta.json");
    std::fs::write(&mp, serde_json::to_string_pretty(&meta).expect("meta serializes"))
        .map_err(|source| ScenarioError::Io { path: mp.display().to_string(), source })?;
    match res.failure() {
        Some(c) => {
            eprintln!("check failed: {} (lhs {:e}, rhs {:e})", c.name, c.lhs, c.rhs);
            Ok(false)
        }
        None => {
            println!("{}: {} checks passed, report in {}", sc.name, res.checks.len(), dir.display());
            Ok(true)
        }
    }
}

fn cmd_corpus(spec: &Path, out: &Path) -> Result<(), ScenarioError> {
    let io = |p: &Path| {
        let s = p.display().to_string();
        move |source| ScenarioError::Io { path: s, source }
    };
    let text = std::fs::read_to_string(spec).map_err(io(spec))?;
    let files = corpus(&parse_corpus(&text)?)?;
    std::fs::create_dir_all(out).map_err(io(out))?;
    for (name, body) in &files {
        let p = out.join(name);
        std::fs::write(&p, body).map_err(io(&p))?;
    }
    println!("wrote {} scenarios to {}", files.len(), out.display());
    Ok(())
}

fn cmd_render(path: &Path, out: Option<PathBuf>) -> Result<(), ScenarioError> {
    let sc = load_scenario(path)?;
    let svg = render(&sc, &base_dir(path))?;
    let dir = out_dir(&sc, out).join("figures");
    let io = |source| ScenarioError::Io { path: dir.display().to_string(), source };
    std::fs::create_dir_all(&dir).map_err(io)?;
    std::fs::write(dir.join("input.svg"), svg).map_err(|source| ScenarioError::Io { path: dir.display().to_string(), source })?;
    println!("{}", dir.join("input.svg").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Run { scenario, out, jobs, seed_override } => cmd_run(&scenario, out, jobs, seed_override).map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }),
        Command::Corpus { spec, out } => cmd_corpus(&spec, &out).map(|_| ExitCode::SUCCESS),
        Command::Render { scenario, out } => cmd_render(&scenario, out).map(|_| ExitCode::SUCCESS),
    };
    r.unwrap_or_else(fail)
}
