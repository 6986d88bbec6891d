use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bubble_core::harness::{
    fig6_csv, fig6_sweep, fig7_csv, fig7_sweep, fig8_csv, fig8_sweep, gnuplot_script, replay, run_scenario, telemetry_csv,
    ObjectPreset, RunOptions, Scenario, SweepOptions, TELEMETRY_FILE,
};
use bubble_core::perception::{calibrate_gain, format_gain, parse_gain, PerceptionConfig};
use bubble_core::pneumatics::{format_response, load_plant_profile, CommandConsole, ControllerConfig, PlantConfig, PneumaticSystem};
use clap::{Parser, Subcommand, ValueEnum};

/// Soft-bubble gripper simulator, shear estimator and pneumatics console.
#[derive(Parser)]
#[command(name = "bubble", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its record.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plant_profile: Option<PathBuf>,
        /// Gain matrix file written by `calibrate`.
        #[arg(long)]
        gain: Option<PathBuf>,
        /// Also write BBLM1 masks and BBLV1 flow for analysed frames.
        #[arg(long)]
        dump_debug: bool,
    },
    /// Recompute telemetry from a recorded run.
    Replay {
        record: PathBuf,
        /// Telemetry CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the flow averaging window.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        gain: Option<PathBuf>,
    },
    /// Run an experiment sweep and write CSVs plus a gnuplot script.
    Sweep {
        #[arg(value_enum)]
        which: SweepKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plant_profile: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Fit a gain matrix from `fx,fy,ft,sum_dx,sum_dy,torsion` rows.
    Calibrate {
        scenarios: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pneumatics command console on stdin/stdout.
    Protocol {
        /// Simulated seconds to advance after each command.
        #[arg(long, default_value_t = 0.5)]
        advance: f64,
        #[arg(long)]
        plant_profile: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Fig6,
    Fig7,
    Fig8,
    Fig8Wide,
    All,
}

fn plant(profile: &Option<PathBuf>) -> Result<PlantConfig> {
    match profile {
        Some(p) => load_plant_profile(p).with_context(|| format!("loading plant profile {}", p.display())),
        None => Ok(PlantConfig::default()),
    }
}

fn perception(gain: &Option<PathBuf>) -> Result<PerceptionConfig> {
    let mut config = PerceptionConfig::default();
    if let Some(path) = gain {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config.gain = parse_gain(&text)?;
    }
    Ok(config)
}

fn run(scenario: &Path, out: &Path, profile: &Option<PathBuf>, gain: &Option<PathBuf>, dump_debug: bool) -> Result<bool> {
    let scenario = Scenario::load(scenario)?;
    let options = RunOptions { plant: plant(profile)?, perception: perception(gain)?, debug_dumps: dump_debug, ..RunOptions::default() };
    let record = run_scenario(&scenario, &options)?;
    record.write(out)?;
    let analysed = record.telemetry.len();
    eprintln!("{}: {} frames, {} analysed, {} references", scenario.name, record.frames.len(), analysed, record.references.len());
    if gain.is_none() {
        eprintln!("shear forces are uncalibrated (identity gain, N per px)");
    }
    match record.audit() {
        Ok(()) => {
            eprintln!("audit: reset discipline ok");
            Ok(true)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(false)
        }
    }
}

fn replay_cmd(record: &Path, out: &Option<PathBuf>, window: Option<usize>, gain: &Option<PathBuf>) -> Result<bool> {
    let mut config = perception(gain)?;
    if let Some(w) = window {
        config.flow.window = w;
    }
    let telemetry = telemetry_csv(&replay(record, &config)?);
    match out {
        Some(path) => fs::write(path, &telemetry).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(telemetry.as_bytes())?,
    }
    if let Ok(live) = fs::read_to_string(record.join(TELEMETRY_FILE)) {
        eprintln!("replay {} the recorded telemetry", if live == telemetry { "matches" } else { "differs from" });
    }
    Ok(true)
}

fn sweep(which: SweepKind, out: &Path, profile: &Option<PathBuf>, seed: u64) -> Result<bool> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let opts = SweepOptions { plant: plant(profile)?, seed, ..SweepOptions::default() };
    let cfg = opts.bubble;
    let mut ok = true;
    let mut check = |pass: bool, what: String| {
        eprintln!("{} {what}", if pass { "ok  " } else { "FAIL" });
        ok &= pass;
    };
    if matches!(which, SweepKind::Fig6 | SweepKind::All) {
        let r = fig6_sweep(&opts)?;
        fs::write(out.join("fig6.csv"), fig6_csv(&r))?;
        let rel = (r.fit.c2 - cfg.geometry_quad).abs() / cfg.geometry_quad.abs();
        check(rel <= 0.05, format!("fig6 c2 = {:.4e} mm/hPa^2 (configured {:.4e})", r.fit.c2, cfg.geometry_quad));
        check(r.noisy_monotone, "fig6 noisy mean depth is monotone".into());
    }
    if matches!(which, SweepKind::Fig7 | SweepKind::All) {
        let r = fig7_sweep(&opts)?;
        fs::write(out.join("fig7.csv"), fig7_csv(&r))?;
        let rel = (r.fit.c2 - cfg.force_quad).abs() / cfg.force_quad.abs();
        check(rel <= 0.05, format!("fig7 c2 = {:.5e} N/hPa^2 (configured {:.5e})", r.fit.c2, cfg.force_quad));
        check(r.width_std <= 1e-3, format!("fig7 jaw width std = {:.3e} mm", r.width_std));
    }
    let mut fig8 = Vec::new();
    for (kind, wide) in [(SweepKind::Fig8, false), (SweepKind::Fig8Wide, true)] {
        if which == kind || which == SweepKind::All {
            let r = fig8_sweep(&opts, wide)?;
            let label = if wide { "fig8-wide" } else { "fig8" };
            let bad = r.non_monotone(wide);
            check(bad.is_empty(), format!("{label} patch area strictly increases with pressure (violations: {bad:?})"));
            if wide {
                let pen = r.cell(ObjectPreset::Pen, true, 1020.0).map_or(usize::MAX, |c| c.patch_area);
                check(pen == 0, format!("{label} pen at 1020 hPa has an empty patch ({pen} px)"));
            }
            fig8.push(r);
        }
    }
    if !fig8.is_empty() {
        fs::write(out.join("fig8.csv"), fig8_csv(&fig8.iter().collect::<Vec<_>>()))?;
    }
    fs::write(out.join("plot.gp"), gnuplot_script())?;
    Ok(ok)
}

fn calibrate(scenarios: &Path, out: &Path) -> Result<bool> {
    let text = fs::read_to_string(scenarios).with_context(|| format!("reading {}", scenarios.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("fx") {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("line {}: bad number", i + 1))?;
        if v.len() != 6 {
            bail!("line {}: expected 6 columns, got {}", i + 1, v.len());
        }
        rows.push(([v[0], v[1], v[2]], [v[3], v[4], v[5]]));
    }
    let cal = calibrate_gain(&rows)?;
    fs::write(out, format_gain(&cal.gain)).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("{} scenarios, rms residual {:.4e}", rows.len(), cal.residual);
    Ok(true)
}

fn protocol(advance: f64, profile: &Option<PathBuf>, seed: u64) -> Result<bool> {
    let system = PneumaticSystem::new(2, plant(profile)?, ControllerConfig::default(), 1050.0, seed)?;
    let mut console = CommandConsole::new(system);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in io::stdin().lock().lines() {
        let response = console.handle(&line?);
        writeln!(out, "{}", format_response(&response))?;
        out.flush()?;
        console.system.advance(advance);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out, plant_profile, gain, dump_debug } => run(scenario, out, plant_profile, gain, *dump_debug),
        Command::Replay { record, out, window, gain } => replay_cmd(record, out, *window, gain),
        Command::Sweep { which, out, plant_profile, seed } => sweep(*which, out, plant_profile, *seed),
        Command::Calibrate { scenarios, out } => calibrate(scenarios, out),
        Command::Protocol { advance, plant_profile, seed } => protocol(*advance, plant_profile, *seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
