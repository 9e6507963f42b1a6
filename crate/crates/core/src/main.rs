use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ringtumble::harness::{
    compare_traces, emit_svg, execute_run, parse_config, read_csv, run_sweep, HarnessError, Model, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "ringtumble", version, about = "Tumbling elliptical ring: cascade and high-fidelity runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduced cascade model.
    Rom {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Penalty-contact multibody model.
    Highfi {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Compare two trace CSVs and chart every shared channel.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run one scenario per parameter value, in parallel.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(short, long, default_value = "sweep")]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = SweepModels::Rom)]
        model: SweepModels,
    },
}

#[derive(Subcommand)]
enum RunAction {
    Run {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepModels {
    Rom,
    Highfi,
    Both,
}

fn load(path: &Path) -> Result<(ScenarioConfig, String), HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
    let cfg = parse_config(&text)?;
    let name = path.file_stem().map_or_else(|| "scenario".to_owned(), |s| s.to_string_lossy().into_owned());
    Ok((cfg, name))
}

fn label(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run_one(model: Model, config: &Path, output: &Path) -> Result<i32, HarnessError> {
    let (cfg, name) = load(config)?;
    let (record, result) = execute_run(model, &cfg, &name, output)?;
    match result {
        Ok(_) => {
            println!("{}: {} rows -> {}", model.name(), record.rows, output.join(format!("{}.csv", model.name())).display());
            Ok(0)
        }
        Err(e) => {
            eprintln!("{}: {e}", model.name());
            Ok(e.exit_code())
        }
    }
}

fn compare(a: &Path, b: &Path, output: &Path) -> Result<i32, HarnessError> {
    let (ta, tb) = (read_csv(a)?, read_csv(b)?);
    let (la, mut lb) = (label(a), label(b));
    if la == lb {
        lb.push_str("_b");
    }
    let report = compare_traces((&la, &ta), (&lb, &tb))?;
    let io = |p: PathBuf| move |source| HarnessError::Io { path: p.display().to_string(), source };
    fs::create_dir_all(output).map_err(io(output.to_path_buf()))?;
    let json = output.join("report.json");
    fs::write(&json, report.to_json()).map_err(io(json.clone()))?;
    let txt = output.join("report.txt");
    fs::write(&txt, report.to_text()).map_err(io(txt.clone()))?;
    for ch in ta.names() {
        emit_svg(&[(&la, &ta), (&lb, &tb)], ch, &output.join(format!("{ch}.svg")))?;
    }
    print!("{}", report.to_text());
    let lost = report.models.iter().any(|m| m.contact_loss_time.is_some());
    Ok(if lost { 3 } else { 0 })
}

fn sweep(config: &Path, param: &str, values: &[String], output: &Path, which: SweepModels) -> Result<i32, HarnessError> {
    let (cfg, name) = load(config)?;
    let models: &[Model] = match which {
        SweepModels::Rom => &[Model::Cascade],
        SweepModels::Highfi => &[Model::HighFi],
        SweepModels::Both => &[Model::Cascade, Model::HighFi],
    };
    let outcomes = run_sweep(&cfg, &name, param, values, models, output)?;
    let mut code = 0;
    for o in &outcomes {
        for r in &o.runs {
            println!("{param}={} {}: {}{}", o.value, r.model, r.status, r.message.as_ref().map_or(String::new(), |m| format!(" ({m})")));
        }
        if code == 0 {
            code = o.exit_code();
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rom { action: RunAction::Run { config, output } } => run_one(Model::Cascade, config, output),
        Command::Highfi { action: RunAction::Run { config, output } } => run_one(Model::HighFi, config, output),
        Command::Compare { a, b, output } => compare(a, b, output),
        Command::Sweep { config, param, values, output, model } => sweep(config, param, values, output, *model),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
