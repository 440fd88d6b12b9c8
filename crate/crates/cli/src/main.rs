//! `fgap`: build decoding problems, run forced-gap shots, sweep thresholds
//! and query the exact oracle.

mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forced_gap::codes::{preset_problem, repetition_phenom_problem, PRESETS};
use forced_gap::dem::{parse_dem, serialize_dem};
use forced_gap::harness::{
    curve_to_csv, curve_to_json, parse_thresholds, records_from_csv, records_to_csv, run_experiment,
    sample_shot, sweep_thresholds, ExperimentConfig, ProblemSource,
};
use forced_gap::oracle::{class_distribution, exact_gap, exact_gap_via_forced, mld_decode};
use forced_gap::seed::substream;
use forced_gap::{BitVec, DecodingProblem, Error, RelayConfig, Syndrome};

#[derive(Parser, Debug)]
#[command(name = "fgap", version, about = "Forced-gap post-selection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a preset code or an existing DEM as DEM text.
    Build(BuildArgs),
    /// Sample and decode shots, writing per-shot records as CSV.
    Run(RunArgs),
    /// Turn shot records into a post-selection curve.
    Sweep(SweepArgs),
    /// Exact class probabilities and gap by coset enumeration.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Preset code name.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS), required_unless_present = "dem", conflicts_with = "dem")]
    preset: Option<String>,
    /// Existing DEM to re-emit (with `--p`, all priors are replaced).
    #[arg(long)]
    dem: Option<PathBuf>,
    /// Uniform fault probability.
    #[arg(long, required_unless_present = "dem")]
    p: Option<f64>,
    /// Repetition presets only: phenomenological model over this many rounds.
    #[arg(long)]
    rounds: Option<usize>,
    /// Measurement-flip probability for `--rounds` (defaults to `--p`).
    #[arg(long, requires = "rounds")]
    p_meas: Option<f64>,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    dem: PathBuf,
    #[arg(long, default_value_t = 1000)]
    shots: usize,
    /// Master seed.
    #[arg(long, env = "FG_SEED", default_value_t = 0)]
    seed: u64,
    /// Syndrome-extraction rounds the DEM spans.
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// key = value file for the baseline decoder.
    #[arg(long)]
    baseline_config: Option<PathBuf>,
    /// key = value file for the forced decoders.
    #[arg(long)]
    forced_config: Option<PathBuf>,
    /// Baseline override, e.g. `--set num_sets=50` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    baseline_set: Vec<String>,
    /// Forced-run override (repeatable).
    #[arg(long = "forced-set", value_name = "KEY=VALUE")]
    forced_set: Vec<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    records: PathBuf,
    /// Comma-separated ascending thresholds; `inf` allowed.
    #[arg(long, default_value = "0,0.5,1,2,inf", value_parser = thresholds_arg)]
    thresholds: Thresholds,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot of per-round LER against rejection rate.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    dem: PathBuf,
    /// Detector bits, detector 0 first (e.g. `10`).
    #[arg(long, conflicts_with = "exhaustive_shots", required_unless_present = "exhaustive_shots")]
    syndrome: Option<String>,
    /// Sample this many shots and report exact-decoder statistics.
    #[arg(long)]
    exhaustive_shots: Option<usize>,
    #[arg(long, env = "FG_SEED", default_value_t = 0)]
    seed: u64,
    /// Also compute the gap through the forced-instance reduction.
    #[arg(long)]
    check_reduction: bool,
}

#[derive(Clone, Debug)]
struct Thresholds(Vec<f64>);

fn thresholds_arg(s: &str) -> Result<Thresholds, String> {
    let ts = parse_thresholds(s).map_err(|e| e.to_string())?;
    if ts.windows(2).any(|w| w[0] > w[1]) {
        return Err("thresholds must be ascending".into());
    }
    Ok(Thresholds(ts))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> forced_gap::Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read(path: &Path) -> forced_gap::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_dem(path: &Path) -> forced_gap::Result<DecodingProblem> {
    parse_dem(&read(path)?)
}

fn cmd_build(a: BuildArgs) -> forced_gap::Result<()> {
    let prob = match (&a.preset, &a.dem) {
        (_, Some(path)) => {
            let prob = load_dem(path)?;
            match a.p {
                Some(p) => prob.with_uniform_prior(p)?,
                None => prob,
            }
        }
        (Some(name), None) => {
            let p = a.p.expect("required by clap");
            match (a.rounds, name.as_str()) {
                (Some(rounds), "rep3" | "rep5") => {
                    let n = if name == "rep3" { 3 } else { 5 };
                    repetition_phenom_problem(n, rounds, p, a.p_meas.unwrap_or(p))?
                }
                (Some(_), _) => {
                    return Err(Error::InvalidParameter(format!("--rounds is only supported for repetition presets, not `{name}`")))
                }
                (None, _) => preset_problem(name, p)?,
            }
        }
        (None, None) => unreachable!("clap requires a preset or --dem"),
    };
    emit(a.out.as_deref(), &serialize_dem(&prob))
}

fn relay_config(base: RelayConfig, file: Option<&Path>, overrides: &[String]) -> forced_gap::Result<RelayConfig> {
    let mut cfg = match file {
        Some(path) => base.apply_kv(&read(path)?)?,
        None => base,
    };
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("expected KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> forced_gap::Result<()> {
    let cfg = ExperimentConfig {
        source: ProblemSource::Problem(load_dem(&a.dem)?),
        baseline: relay_config(RelayConfig::baseline(), a.baseline_config.as_deref(), &a.baseline_set)?,
        forced: relay_config(RelayConfig::forced(), a.forced_config.as_deref(), &a.forced_set)?,
        n_shots: a.shots,
        rounds: a.rounds,
        master_seed: a.seed,
        worker_count: a.workers,
    };
    let records = run_experiment(&cfg)?;
    emit(a.out.as_deref(), &records_to_csv(&records))
}

fn cmd_sweep(a: SweepArgs) -> forced_gap::Result<()> {
    let records = records_from_csv(&read(&a.records)?, None)?;
    let curve = sweep_thresholds(&records, &a.thresholds.0, a.rounds)?;
    let text = if a.json {
        let mut s = curve_to_json(&curve);
        s.push('\n');
        s
    } else {
        curve_to_csv(&curve)
    };
    emit(a.out.as_deref(), &text)?;
    if let Some(path) = &a.svg {
        fs::write(path, svg::render_curve(&curve, a.rounds))
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> forced_gap::Result<()> {
    let prob = load_dem(&a.dem)?;
    let mut out = String::new();
    if let Some(bits) = &a.syndrome {
        let s = BitVec::parse_bits(bits)
            .map(Syndrome)
            .ok_or_else(|| Error::InvalidParameter(format!("bad syndrome `{bits}`")))?;
        let dist = class_distribution(&prob, &s)?;
        if dist.is_empty() {
            return Err(Error::InfeasibleSyndrome);
        }
        out.push_str("class,probability,log_probability\n");
        for e in &dist.entries {
            out.push_str(&format!("{},{:e},{:?}\n", e.class.bits(), e.log_mass.exp(), e.log_mass));
        }
        let mld = mld_decode(&prob, &s)?;
        out.push_str(&format!("mld_class = {}\n", mld.class.bits()));
        out.push_str(&format!("syndrome_probability = {:e}\n", dist.syndrome_mass()));
        let gap = match exact_gap(&prob, &s) {
            Ok(g) => Some(g),
            Err(Error::SingleClass) => None,
            Err(e) => return Err(e),
        };
        match gap {
            Some(g) => out.push_str(&format!("exact_gap = {g:?}\n")),
            None => out.push_str("exact_gap = inf\n"),
        }
        if a.check_reduction {
            if let Some(g) = gap {
                let via = exact_gap_via_forced(&prob, &s)?;
                out.push_str(&format!("forced_reduction_gap = {via:?}\n"));
                out.push_str(&format!("difference = {:e}\n", (g - via).abs()));
            } else {
                out.push_str("forced_reduction_gap = inf\ndifference = 0\n");
            }
        }
    } else {
        let shots = a.exhaustive_shots.expect("required by clap");
        let mut rng = substream(a.seed, 0);
        let (mut failures, mut max_diff, mut gaps) = (0usize, 0f64, Vec::new());
        for _ in 0..shots {
            let (_, s, class) = sample_shot(&prob, &mut rng);
            if mld_decode(&prob, &s)?.class != class {
                failures += 1;
            }
            match exact_gap(&prob, &s) {
                Ok(g) => {
                    if a.check_reduction {
                        max_diff = max_diff.max((g - exact_gap_via_forced(&prob, &s)?).abs());
                    }
                    gaps.push(g);
                }
                Err(Error::SingleClass) => {}
                Err(e) => return Err(e),
            }
        }
        out.push_str(&format!("shots = {shots}\nmld_failures = {failures}\n"));
        if shots > 0 {
            out.push_str(&format!("mld_ler = {:e}\n", failures as f64 / shots as f64));
        }
        if !gaps.is_empty() {
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            out.push_str(&format!("mean_exact_gap = {mean:?}\n"));
        }
        if a.check_reduction {
            out.push_str(&format!("max_reduction_difference = {max_diff:e}\n"));
        }
    }
    emit(None, &out)
}
