use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wifiloc::airsim::{DeviceProfile, PhoneState, DEFAULT_RTS_INTERVAL};
use wifiloc::dbfile::{load_database, save_database};
use wifiloc::eval::{
    compare, frames_per_minute, gap_calibration, localize_run, read_fixes_report, train_lstm, write_fixes, Engine,
    ErrorReport, RunManifest, RunSpec, ScenarioConfig,
};
use wifiloc::protocol::Algorithm;
use wifiloc::rnn::{grad_check, grad_check_case, save_checkpoint, LstmConfig, TrainConfig};

#[derive(Parser)]
#[command(name = "wifiloc", version, about = "Simulate, localize and score passive WiFi tracking runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survey every RP of a scenario and write the fingerprint database.
    SimulateDb(SimulateDb),
    /// Localize simulated test routes and write per-fix errors and a summary.
    Run(RunArgs),
    /// Merge fix files from earlier runs into a comparison table and CDFs.
    Compare(CompareArgs),
    /// Check LSTM backpropagation against central differences.
    GradCheck(GradCheckArgs),
    /// Measure inter-frame gap quantiles and CTS yield per device.
    CalibrateArrivals(CalibrateArgs),
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario TOML; the built-in desk scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ScenarioArg {
    fn load(&self) -> Result<ScenarioConfig> {
        match &self.scenario {
            Some(p) => ScenarioConfig::load(p).with_context(|| format!("loading {}", p.display())),
            None => Ok(ScenarioConfig::desk()),
        }
    }

    fn file(&self) -> Option<String> {
        self.scenario.as_ref().map(|p| p.display().to_string())
    }
}

#[derive(Args)]
struct SimulateDb {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Output database directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Database directory from `simulate-db`; surveyed on the fly when omitted.
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long, default_value = "samsung_s6")]
    device: String,
    /// active, inactive, inactive_screen_on or inactive_screen_off.
    #[arg(long, default_value = "inactive")]
    state: String,
    /// ssp, two_step or pmimo_lstm.
    #[arg(long, default_value = "ssp")]
    algorithm: String,
    /// Disable RTS elicitation.
    #[arg(long)]
    no_rts: bool,
    /// Seed list: `0..20`, `3,5,8` or a single seed.
    #[arg(long, default_value = "0..20")]
    seeds: String,
    /// Window length in seconds; the scenario's value when omitted.
    #[arg(long)]
    delta_t: Option<f64>,
    /// Output file prefix; derived from device, state and algorithm when omitted.
    #[arg(long)]
    label: Option<String>,
    /// Simulated routes used to train the LSTM.
    #[arg(long, default_value_t = 40)]
    lstm_routes: usize,
    #[arg(long, default_value_t = 30)]
    lstm_epochs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// `*.fixes.csv` files written by `run`; labels are the file stems.
    #[arg(required = true, num_args = 2..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradCheckArgs {
    #[arg(long, default_value_t = 4)]
    input_size: usize,
    /// Comma-separated LSTM widths, one per layer.
    #[arg(long, default_value = "5,4")]
    hidden: String,
    #[arg(long, default_value_t = 3)]
    memory_length: usize,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Device model, or `all`.
    #[arg(long, default_value = "all")]
    device: String,
    #[arg(long, default_value_t = DEFAULT_RTS_INTERVAL)]
    rts_interval: f64,
    /// Minimum gaps per configuration.
    #[arg(long, default_value_t = 10_000)]
    gaps: usize,
    /// 60 s runs averaged for the per-minute yield.
    #[arg(long, default_value_t = 20)]
    minutes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || format!("bad seed list `{s}`; expected `0..20`, `3,5,8` or one seed");
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().with_context(bad)?, b.trim().parse().with_context(bad)?);
        (a..b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>().with_context(bad)?
    };
    if seeds.is_empty() {
        bail!("seed list `{s}` is empty");
    }
    Ok(seeds)
}

fn write(path: &Path, text: &str, outputs: &mut Vec<String>) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    outputs.push(path.display().to_string());
    Ok(())
}

fn simulate_db(args: SimulateDb) -> Result<()> {
    let scenario = args.scenario.load()?;
    let engine = Engine::survey(scenario.clone())?;
    save_database(&engine.db, &args.out)?;
    let mut m = RunManifest::new("simulate-db", &scenario.name)
        .param("rps", engine.db.len())
        .param("training_seed", scenario.training.seed);
    m.scenario_file = args.scenario.file();
    m.database = Some(args.out.display().to_string());
    m.outputs.push(args.out.display().to_string());
    m.save(&args.out.join("manifest.toml"))?;
    println!("wrote {} RPs to {}", engine.db.len(), args.out.display());
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let scenario = args.scenario.load()?;
    let state: PhoneState = args.state.parse()?;
    let algorithm: Algorithm = args.algorithm.parse()?;
    let spec = RunSpec {
        device: args.device.clone(),
        state,
        algorithm,
        rts: !args.no_rts,
        seeds: parse_seeds(&args.seeds)?,
        delta_t: args.delta_t.unwrap_or(scenario.delta_t),
    };
    spec.validate()?;
    let mut engine = match &args.db {
        Some(dir) => Engine::new(scenario.clone(), load_database(dir)?)?,
        None => Engine::survey(scenario.clone())?,
    };
    fs::create_dir_all(&args.out)?;
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| format!("{}_{}_{}", spec.device, state, algorithm.as_str()));
    let mut outputs = Vec::new();

    if algorithm == Algorithm::PmimoLstm {
        let cfg = LstmConfig::desk(engine.env().ap_count());
        let tc = TrainConfig {
            epochs: args.lstm_epochs,
            ..Default::default()
        };
        let rep = train_lstm(&mut engine, cfg, args.lstm_routes, &tc)?;
        let model = &engine.lstm.as_ref().expect("just trained").model;
        let path = args.out.join(format!("{label}.lstm.txt"));
        save_checkpoint(model, &path)?;
        outputs.push(path.display().to_string());
        println!("lstm: {} epochs, final loss {:.4}", rep.epoch_loss.len(), rep.epoch_loss.last().unwrap_or(&f64::NAN));
    }

    let dev = DeviceProfile::by_name(&spec.device)?;
    let mut runs = Vec::new();
    let mut logs = String::new();
    for &seed in &spec.seeds {
        let sim = engine.simulate(&dev, state, spec.rts, seed)?;
        let res = localize_run(&engine, &sim, algorithm, spec.delta_t, spec.rts)?;
        let csv = res.log.to_csv();
        let body = csv.split_once('\n').map_or("", |(_, b)| b);
        if logs.is_empty() {
            logs.push_str("seed,");
            logs.push_str(csv.lines().next().unwrap_or(""));
            logs.push('\n');
        }
        for line in body.lines() {
            logs.push_str(&format!("{seed},{line}\n"));
        }
        runs.push((seed, res));
    }
    let report = ErrorReport::merge(runs.iter().map(|(_, r)| r.report()).collect::<Vec<_>>().iter());

    write(&args.out.join(format!("{label}.fixes.csv")), &write_fixes(&runs), &mut outputs)?;
    write(&args.out.join(format!("{label}.log.csv")), &logs, &mut outputs)?;
    let summary = format!(
        "label,fixes,mean,std,max,fix_rate,windows\n{label},{},{:.6},{:.6},{:.6},{:.6},{}\n",
        report.errors.len(),
        report.mean,
        report.std,
        report.max,
        report.fix_rate,
        report.windows
    );
    write(&args.out.join(format!("{label}.summary.csv")), &summary, &mut outputs)?;

    let mut m = RunManifest::new("run", &scenario.name)
        .param("device", &spec.device)
        .param("state", state)
        .param("algorithm", algorithm.as_str())
        .param("rts", spec.rts)
        .param("delta_t", spec.delta_t);
    m.scenario_file = args.scenario.file();
    m.database = args.db.as_ref().map(|p| p.display().to_string());
    m.seeds = spec.seeds.clone();
    m.outputs = outputs;
    m.save(&args.out.join(format!("{label}.manifest.toml")))?;
    println!("{label}: {} m over {} fixes, fix rate {:.3}", report.summary(), report.errors.len(), report.fix_rate);
    Ok(())
}

fn compare_cmd(args: CompareArgs) -> Result<()> {
    let mut reports = BTreeMap::new();
    for p in &args.inputs {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("run");
        let label = name.strip_suffix(".fixes.csv").unwrap_or(name).to_string();
        if reports.insert(label.clone(), read_fixes_report(&text, p)?).is_some() {
            bail!("duplicate label `{label}`");
        }
    }
    let cmp = compare(&reports)?;
    fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();
    write(&args.out.join("comparison.csv"), &cmp.table_csv(), &mut outputs)?;
    write(&args.out.join("cdf.csv"), &cmp.cdf_csv(), &mut outputs)?;
    let mut m = RunManifest::new("compare", "-");
    m.parameters = args
        .inputs
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("input_{i}"), p.display().to_string()))
        .collect();
    m.outputs = outputs;
    m.save(&args.out.join("manifest.toml"))?;
    print!("{}", cmp.table_text());
    Ok(())
}

fn grad_check_cmd(args: GradCheckArgs) -> Result<()> {
    let hidden = args
        .hidden
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<usize>, _>>()?;
    let cfg = LstmConfig {
        memory_length: args.memory_length,
        input_size: args.input_size,
        hidden_sizes: hidden,
        dropout: 0.0,
        learning_rate: 1e-3,
    };
    let (model, window, target) = grad_check_case(cfg, args.seed)?;
    let rep = grad_check(&model, &window, &target, args.step)?;
    println!(
        "{} parameters checked, max relative error {:.3e} at {}, max absolute error {:.3e}",
        rep.checked, rep.max_rel_err, rep.worst, rep.max_abs_err
    );
    rep.ensure(args.threshold)?;
    println!("pass (threshold {:.0e})", args.threshold);
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let devices = if args.device == "all" {
        DeviceProfile::all()
    } else {
        vec![DeviceProfile::by_name(&args.device)?]
    };
    let thresholds = [1.0, 4.0, 10.0, 30.0, 60.0];
    let mut gaps = String::from("device,state,rts_interval,gaps,mean_gap");
    for t in thresholds {
        gaps.push_str(&format!(",p_le_{t}"));
    }
    gaps.push('\n');
    let mut yields = String::from("device,rts_interval,frames_per_minute,expected\n");
    for (i, dev) in devices.iter().enumerate() {
        for state in [PhoneState::InactiveScreenOn, PhoneState::InactiveScreenOff] {
            for rts in [None, Some(args.rts_interval)] {
                let c = gap_calibration(dev, state, rts, &thresholds, args.gaps, args.seed ^ i as u64)?;
                gaps.push_str(&format!(
                    "{},{},{},{},{:.6}",
                    c.device,
                    state,
                    rts.map_or("none".into(), |r| r.to_string()),
                    c.gaps,
                    c.mean_gap
                ));
                for (_, p) in &c.quantiles {
                    gaps.push_str(&format!(",{p:.6}"));
                }
                gaps.push('\n');
            }
        }
        let fpm = frames_per_minute(dev, args.rts_interval, args.minutes, args.seed ^ i as u64)?;
        yields.push_str(&format!(
            "{},{},{fpm:.2},{:.2}\n",
            dev.model_name,
            args.rts_interval,
            dev.expected_cts_per_minute(args.rts_interval)
        ));
    }
    fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();
    write(&args.out.join("gaps.csv"), &gaps, &mut outputs)?;
    write(&args.out.join("yield.csv"), &yields, &mut outputs)?;
    let mut m = RunManifest::new("calibrate-arrivals", "-")
        .param("rts_interval", args.rts_interval)
        .param("min_gaps", args.gaps)
        .param("minutes", args.minutes);
    m.seeds = vec![args.seed];
    m.outputs = outputs;
    m.save(&args.out.join("manifest.toml"))?;
    print!("{yields}");
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SimulateDb(a) => simulate_db(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare_cmd(a),
        Command::GradCheck(a) => grad_check_cmd(a),
        Command::CalibrateArrivals(a) => calibrate(a),
    }
}
