use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isac_nomp::baseline::{extract_peaks, periodogram, PeakSelect};
use isac_nomp::config::{self, ConfigMap};
use isac_nomp::metrics::{associate, run_experiment, Gates, Scenario};
use isac_nomp::pipeline::{
    background_subtract, block_stream, load_recording, save_recording, synthesize_carousel, BackgroundState,
    ChannelRecording, RecordingFormat, RecordingMeta,
};
use isac_nomp::recovery::{nomp_detect, omp_detect, Detection, DetectorConfig, DetectorOutput, OmpStop, Provenance};
use isac_nomp::rng::derive_seed;
use isac_nomp::scene::{
    delay_doppler_to_range_velocity, select_resources, synthesize_channel, GridConfig, ResourceMode, ResourceSet,
    SynthesisPath, TargetTruth,
};
use isac_nomp::{Complex64, Error};
use serde::Serialize;

const MEASUREMENT: &str = "measurement.bin";
const RESOURCES: &str = "resources.csv";
const TRUTH: &str = "truth.json";
const SNAPSHOT: &str = "config.snapshot";

#[derive(Parser)]
#[command(name = "isac-nomp", version, about = "Off-grid delay/Doppler detection on sparse OFDM grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a sparse measurement and its ground truth.
    Simulate(Common),
    /// Run a detector on a simulated measurement or on a recording.
    Detect(DetectArgs),
    /// Run a Monte-Carlo scenario and write plot-ready tables.
    Bench(BenchArgs),
    /// Synthesize the rotating two-sphere recording.
    SynthRecording(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Extra KEY=VALUE overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetectorName {
    Nomp,
    Omp,
    Fft2d,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: Common,
    /// Directory written by `simulate`.
    #[arg(long, conflicts_with = "recording")]
    input: Option<PathBuf>,
    /// Channel recording (raw_complex or csv) processed block by block.
    #[arg(long)]
    recording: Option<PathBuf>,
    #[arg(long, value_enum)]
    detector: Option<DetectorName>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Scenario name, or `list` to print the available ones.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads for the Monte-Carlo runner; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

/// Message plus process exit code.
struct Failure {
    code: u8,
    message: String,
}

type CliResult<T> = Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

/// Library errors raised while resolving configuration or running.
fn runtime(e: Error) -> Failure {
    match e {
        Error::Numeric(_) => Failure { code: 4, message: e.to_string() },
        Error::Format { .. } => bad_input(e.to_string()),
        _ => usage(e.to_string()),
    }
}

/// Library errors raised while reading input data.
fn input_error(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::Numeric(_) => Failure { code: 4, message: e.to_string() },
        Error::InvalidArgument(_) => usage(format!("{}: {e}", path.display())),
        _ => bad_input(format!("{}: {e}", path.display())),
    }
}

fn config_error(path: Option<&Path>) -> impl Fn(Error) -> Failure + '_ {
    move |e| match path {
        Some(p) => usage(format!("{}: {e}", p.display())),
        None => usage(e.to_string()),
    }
}

struct Resolved {
    map: ConfigMap,
    seed: u64,
    out: PathBuf,
}

fn resolve(common: &Common, fallback: Option<&Path>) -> CliResult<Resolved> {
    let file = common.config.as_deref().or(fallback);
    let mut map = match file {
        Some(p) => ConfigMap::load(p).map_err(config_error(Some(p)))?,
        None => ConfigMap::default(),
    };
    for kv in &common.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        map.set(k.trim(), v.trim()).map_err(config_error(None))?;
    }
    let seed = match common.seed {
        Some(s) => s,
        None => map.get_or("run.seed", 1).map_err(config_error(file))?,
    };
    map.set("run.seed", seed.to_string()).map_err(config_error(None))?;
    fs::create_dir_all(&common.out)
        .map_err(|e| usage(format!("cannot create output directory {}: {e}", common.out.display())))?;
    Ok(Resolved { map, seed, out: common.out.clone() })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure { code: 4, message: e.to_string() })?;
    write_file(path, text + "\n")
}

fn write_snapshot(run: &Resolved, command: &str, notes: &[(&str, String)]) -> CliResult<()> {
    let mut text = format!("# isac-nomp {command}\n");
    for (k, v) in notes {
        let _ = writeln!(text, "# {k} = {v}");
    }
    text.push_str(&run.map.snapshot());
    write_file(&run.out.join(SNAPSHOT), text)
}

/// Records a resolved value unless the user already set the key.
fn pin(map: &mut ConfigMap, key: &str, value: impl std::fmt::Debug) -> CliResult<()> {
    if !map.contains(key) {
        let text = format!("{value:?}");
        map.set(key, text.trim_matches('"')).map_err(runtime)?;
    }
    Ok(())
}

fn pin_grid(map: &mut ConfigMap, grid: &GridConfig) -> CliResult<()> {
    pin(map, "grid.n_subcarriers", grid.n_subcarriers)?;
    pin(map, "grid.n_symbols", grid.n_symbols)?;
    pin(map, "grid.subcarrier_spacing_hz", grid.subcarrier_spacing)?;
    pin(map, "grid.symbol_duration_s", grid.symbol_duration)?;
    pin(map, "grid.carrier_freq_hz", grid.carrier_freq)
}

fn pin_resources(map: &mut ConfigMap, mode: ResourceMode, seed: u64) -> CliResult<()> {
    match mode {
        ResourceMode::Elementwise { occupancy } => {
            pin(map, "resources.mode", "elementwise")?;
            pin(map, "resources.eta", occupancy)?;
        }
        ResourceMode::Structured { n_sub_used, n_sym_used } => {
            pin(map, "resources.mode", "structured")?;
            pin(map, "resources.n_sub_used", n_sub_used)?;
            pin(map, "resources.n_sym_used", n_sym_used)?;
        }
    }
    pin(map, "resources.seed", seed)
}

fn pin_detector(map: &mut ConfigMap, det: &DetectorConfig) -> CliResult<()> {
    pin(map, "detector.p_fa", det.false_alarm_prob)?;
    pin(map, "detector.oversampling", det.oversampling)?;
    pin(map, "detector.refinement_steps", det.refinement_steps)?;
    pin(map, "detector.max_detections", det.max_detections)?;
    pin(map, "detector.global_steps", det.global_steps)?;
    pin(map, "detector.step_guard", det.step_guard)?;
    let json = |v: String| v.trim_matches('"').to_string();
    let enc = |v: serde_json::Result<String>| v.map(json).map_err(|e| Failure { code: 4, message: e.to_string() });
    pin(map, "detector.global_mode", enc(serde_json::to_string(&det.global_mode))?)?;
    pin(map, "detector.correlation", enc(serde_json::to_string(&det.correlation))?)?;
    pin(map, "detector.cfar_cells", enc(serde_json::to_string(&det.cfar_cells))?)
}

#[derive(Serialize)]
struct TargetRow {
    delay_s: f64,
    doppler_hz: f64,
    range_m: f64,
    velocity_mps: f64,
    gain_re: f64,
    gain_im: f64,
    gain_db: f64,
    phase_rad: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl TargetRow {
    fn new(grid: &GridConfig, delay: f64, doppler: f64, gain: Complex64, provenance: Option<Provenance>) -> Self {
        let (range_m, velocity_mps) = delay_doppler_to_range_velocity(grid, delay, doppler);
        let (gain_db, phase_rad) = config::gain_db_phase(gain);
        TargetRow {
            delay_s: delay,
            doppler_hz: doppler,
            range_m,
            velocity_mps,
            gain_re: gain.re,
            gain_im: gain.im,
            gain_db,
            phase_rad,
            provenance,
        }
    }
}

#[derive(Serialize, serde::Deserialize)]
struct TruthFile {
    targets: Vec<TruthRow>,
    noise_power: f64,
    n_resources: usize,
}

#[derive(Serialize, serde::Deserialize)]
struct TruthRow {
    delay_s: f64,
    doppler_hz: f64,
    gain_re: f64,
    gain_im: f64,
}

fn enc_path(path: SynthesisPath) -> &'static str {
    match path {
        SynthesisPath::Direct => "direct",
        SynthesisPath::FullTxRx => "full_tx_rx",
    }
}

fn cmd_simulate(common: &Common) -> CliResult<()> {
    let run = resolve(common, None)?;
    let grid = config::grid_config(&run.map).map_err(runtime)?;
    let scene = config::scene(&run.map, &grid).map_err(runtime)?;
    let mode = config::resource_mode(&run.map, &grid).map_err(runtime)?;
    let rs_seed = run.map.get_or("resources.seed", run.seed).map_err(runtime)?;
    let rs = select_resources(&grid, mode, rs_seed).map_err(runtime)?;
    let path = config::synthesis_path(&run.map).map_err(runtime)?;
    let h = synthesize_channel(&scene, &rs, &grid, derive_seed(run.seed, 1), path).map_err(runtime)?;

    let meta = RecordingMeta {
        subcarrier_spacing: grid.subcarrier_spacing,
        symbol_duration: grid.symbol_duration,
        carrier_freq: grid.carrier_freq,
        ..RecordingMeta::default()
    };
    let rec = ChannelRecording::new(grid.n_subcarriers, grid.n_symbols, rs.scatter(h.values()), meta)
        .map_err(runtime)?;
    save_recording(&run.out.join(MEASUREMENT), &rec, RecordingFormat::RawComplex).map_err(runtime)?;
    let mut csv = String::from("n,m\n");
    for (n, m) in rs.indices() {
        let _ = writeln!(csv, "{n},{m}");
    }
    write_file(&run.out.join(RESOURCES), csv)?;
    let truth = TruthFile {
        targets: scene
            .targets
            .iter()
            .map(|t| TruthRow { delay_s: t.delay, doppler_hz: t.doppler, gain_re: t.gain.re, gain_im: t.gain.im })
            .collect(),
        noise_power: scene.noise_power,
        n_resources: rs.len(),
    };
    write_json(&run.out.join(TRUTH), &truth)?;
    let mut run = run;
    pin_grid(&mut run.map, &grid)?;
    pin_resources(&mut run.map, mode, rs_seed)?;
    pin(&mut run.map, "synthesis.path", enc_path(path))?;
    if !run.map.keys().any(|k| k.starts_with("targets.")) {
        pin(&mut run.map, "targets.count", scene.targets.len())?;
        for (i, t) in scene.targets.iter().enumerate() {
            let (db, phase) = config::gain_db_phase(t.gain);
            pin(&mut run.map, &format!("targets.{i}.delay_s"), t.delay)?;
            pin(&mut run.map, &format!("targets.{i}.doppler_hz"), t.doppler)?;
            pin(&mut run.map, &format!("targets.{i}.gain_db"), db)?;
            pin(&mut run.map, &format!("targets.{i}.phase_rad"), phase)?;
        }
    }
    if !run.map.contains("noise.snr_db") {
        pin(&mut run.map, "noise.sigma2", scene.noise_power)?;
    }
    write_snapshot(&run, "simulate", &[("n_resources", rs.len().to_string())])?;
    println!("wrote {} ({} resources, {} targets)", run.out.display(), rs.len(), scene.targets.len());
    Ok(())
}

fn read_resources(path: &Path, n_sub: usize, n_sym: usize) -> CliResult<ResourceSet> {
    let text = fs::read_to_string(path).map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "n,m" => {}
        _ => return Err(bad_input(format!("{}: line 1: expected header 'n,m'", path.display()))),
    }
    let mut idx = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once(',')
            .and_then(|(n, m)| Some((n.trim().parse::<usize>().ok()?, m.trim().parse::<usize>().ok()?)));
        let (n, m) = parsed.ok_or_else(|| bad_input(format!("{}: line {}: expected n,m", path.display(), i + 1)))?;
        idx.push((n, m));
    }
    ResourceSet::new(n_sub, n_sym, idx).map_err(|e| bad_input(format!("{}: {e}", path.display())))
}

fn run_detector(
    kind: DetectorName,
    map: &ConfigMap,
    h: &[Complex64],
    rs: &ResourceSet,
    grid: &GridConfig,
    det: &DetectorConfig,
) -> CliResult<DetectorOutput> {
    match kind {
        DetectorName::Nomp => nomp_detect(h, rs, grid, det).map_err(runtime),
        DetectorName::Omp => {
            let stop = match map.get::<usize>("detector.omp_k").map_err(runtime)? {
                Some(k) => OmpStop::KKnown(k),
                None => OmpStop::Cfar,
            };
            omp_detect(h, rs, grid, det, stop).map_err(runtime)
        }
        DetectorName::Fft2d => {
            let peaks = map.get_or("detector.peaks", 1usize).map_err(runtime)?;
            let map = periodogram(h, rs, grid, det.oversampling).map_err(runtime)?;
            let set = extract_peaks(&map, PeakSelect::Count(peaks)).map_err(runtime)?;
            Ok(DetectorOutput { iterations: set.detections.len(), detections: set.detections, ..Default::default() })
        }
    }
}

fn detector_kind(args: &DetectArgs, map: &ConfigMap) -> CliResult<DetectorName> {
    if let Some(d) = args.detector {
        return Ok(d);
    }
    match map.raw("detector.kind").unwrap_or("nomp") {
        "nomp" => Ok(DetectorName::Nomp),
        "omp" => Ok(DetectorName::Omp),
        "fft2d" => Ok(DetectorName::Fft2d),
        other => Err(usage(format!("unknown detector '{other}' (expected nomp, omp or fft2d)"))),
    }
}

fn detector_name(kind: DetectorName) -> &'static str {
    match kind {
        DetectorName::Nomp => "nomp",
        DetectorName::Omp => "omp",
        DetectorName::Fft2d => "fft2d",
    }
}

fn rows(grid: &GridConfig, dets: &[Detection]) -> Vec<TargetRow> {
    dets.iter().map(|d| TargetRow::new(grid, d.delay, d.doppler, d.gain, Some(d.provenance))).collect()
}

#[derive(Serialize)]
struct DetectionReport {
    detector: &'static str,
    n_resources: usize,
    threshold: f64,
    iterations: usize,
    truncated: bool,
    detections: Vec<TargetRow>,
}

#[derive(Serialize)]
struct AssociationReport {
    pod: f64,
    matched: usize,
    false_alarms: usize,
    misses: usize,
    delay_gate_cells: f64,
    doppler_gate_cells: f64,
}

fn cmd_detect(args: &DetectArgs) -> CliResult<()> {
    match (&args.input, &args.recording) {
        (Some(dir), None) => detect_measurement(args, dir),
        (None, Some(path)) => detect_recording(args, path),
        _ => Err(usage("detect needs --input DIR or --recording FILE")),
    }
}

fn detect_measurement(args: &DetectArgs, dir: &Path) -> CliResult<()> {
    let snapshot = dir.join(SNAPSHOT);
    let run = resolve(&args.common, snapshot.exists().then_some(snapshot.as_path()))?;
    let kind = detector_kind(args, &run.map)?;
    let grid = config::grid_config(&run.map).map_err(runtime)?;
    let det = config::detector_config(&run.map).map_err(runtime)?;

    let mpath = dir.join(MEASUREMENT);
    let rec = load_recording(&mpath, RecordingFormat::RawComplex).map_err(input_error(&mpath))?;
    if rec.n_subcarriers() != grid.n_subcarriers || rec.n_symbols() != grid.n_symbols {
        return Err(bad_input(format!(
            "{}: grid is {}x{}, configuration expects {}x{}",
            mpath.display(),
            rec.n_subcarriers(),
            rec.n_symbols(),
            grid.n_subcarriers,
            grid.n_symbols
        )));
    }
    let rs = read_resources(&dir.join(RESOURCES), grid.n_subcarriers, grid.n_symbols)?;
    let h = rs.gather(rec.data());
    let out = run_detector(kind, &run.map, &h, &rs, &grid, &det)?;

    let report = DetectionReport {
        detector: detector_name(kind),
        n_resources: rs.len(),
        threshold: out.threshold,
        iterations: out.iterations,
        truncated: out.truncated,
        detections: rows(&grid, &out.detections),
    };
    write_json(&run.out.join("detections.json"), &report)?;
    let mut trace = String::from("iteration,residual_energy\n");
    for (i, e) in out.residual_trace.iter().enumerate() {
        let _ = writeln!(trace, "{i},{e:?}");
    }
    write_file(&run.out.join("residual_trace.csv"), trace)?;

    let tpath = dir.join(TRUTH);
    if tpath.exists() {
        let text = fs::read_to_string(&tpath).map_err(|e| bad_input(format!("{}: {e}", tpath.display())))?;
        let truth: TruthFile =
            serde_json::from_str(&text).map_err(|e| bad_input(format!("{}: {e}", tpath.display())))?;
        let truths: Vec<TargetTruth> = truth
            .targets
            .iter()
            .map(|t| TargetTruth::new(t.delay_s, t.doppler_hz, Complex64::new(t.gain_re, t.gain_im)))
            .collect();
        let gates = Gates::default();
        let assoc = associate(&out.detections, &truths, &grid, gates);
        let pod = if truths.is_empty() { 1.0 } else { assoc.matches.len() as f64 / truths.len() as f64 };
        write_json(
            &run.out.join("association.json"),
            &AssociationReport {
                pod,
                matched: assoc.matches.len(),
                false_alarms: assoc.false_alarms.len(),
                misses: assoc.misses.len(),
                delay_gate_cells: gates.delay_cells,
                doppler_gate_cells: gates.doppler_cells,
            },
        )?;
    }
    let mut run = run;
    pin(&mut run.map, "detector.kind", detector_name(kind))?;
    pin_grid(&mut run.map, &grid)?;
    pin_detector(&mut run.map, &det)?;
    write_snapshot(&run, "detect", &[("n_resources", rs.len().to_string())])?;
    println!("{} detections written to {}", out.detections.len(), run.out.display());
    Ok(())
}

#[derive(Serialize)]
struct BlockReport {
    block: usize,
    time_s: f64,
    iterations: usize,
    detections: Vec<TargetRow>,
}

fn detect_recording(args: &DetectArgs, path: &Path) -> CliResult<()> {
    let run = resolve(&args.common, None)?;
    let kind = detector_kind(args, &run.map)?;
    let det = config::detector_config(&run.map).map_err(runtime)?;
    let opts = config::recording_options(&run.map).map_err(runtime)?;
    let format = match opts.format {
        Some(f) => f,
        None => RecordingFormat::from_path(path),
    };
    let mut rec = load_recording(path, format).map_err(input_error(path))?;
    if let Some(v) = opts.subcarrier_spacing {
        rec.meta.subcarrier_spacing = v;
    }
    if let Some(v) = opts.symbol_duration {
        rec.meta.symbol_duration = v;
    }
    if let Some(v) = opts.carrier_freq {
        rec.meta.carrier_freq = v;
    }
    let grid = rec.block_grid(opts.block_len).map_err(runtime)?;
    let state = BackgroundState::new(rec.n_subcarriers(), opts.forgetting).map_err(runtime)?;
    let (clean, _) = background_subtract(&rec, opts.forgetting, &state).map_err(runtime)?;
    let mode = config::resource_mode(&run.map, &grid).map_err(runtime)?;
    let rs_seed = run.map.get_or("resources.seed", run.seed).map_err(runtime)?;
    let rs = select_resources(&grid, mode, rs_seed).map_err(runtime)?;
    let stream = block_stream(&clean, opts.block_len, &rs).map_err(runtime)?;
    if stream.is_short() {
        return Err(bad_input(format!(
            "{}: {} symbols is shorter than one {}-symbol block",
            path.display(),
            rec.n_symbols(),
            opts.block_len
        )));
    }

    let mut blocks = Vec::new();
    let mut trace = String::from("block,iteration,residual_energy\n");
    for (h, b) in stream {
        let out = run_detector(kind, &run.map, h.values(), &rs, &grid, &det)?;
        for (i, e) in out.residual_trace.iter().enumerate() {
            let _ = writeln!(trace, "{b},{i},{e:?}");
        }
        blocks.push(BlockReport {
            block: b,
            time_s: rec.timestamp(b * opts.block_len),
            iterations: out.iterations,
            detections: rows(&grid, &out.detections),
        });
    }
    write_json(&run.out.join("detections.json"), &blocks)?;
    write_file(&run.out.join("residual_trace.csv"), trace)?;
    let mut run = run;
    pin(&mut run.map, "detector.kind", detector_name(kind))?;
    pin_resources(&mut run.map, mode, rs_seed)?;
    pin_detector(&mut run.map, &det)?;
    pin(&mut run.map, "recording.block_len", opts.block_len)?;
    pin(&mut run.map, "recording.forgetting", opts.forgetting)?;
    write_snapshot(&run, "detect", &[("n_resources", rs.len().to_string())])?;
    println!("{} blocks written to {}", blocks.len(), run.out.display());
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    if args.scenario == "list" {
        for s in Scenario::ALL {
            println!("{}", s.name());
        }
        return Ok(());
    }
    let scenario: Scenario = args
        .scenario
        .parse()
        .map_err(|_| usage(format!("unknown scenario '{}'; try --scenario list", args.scenario)))?;
    let run = resolve(&args.common, None)?;
    let mut cfg = config::experiment_config(&run.map, scenario).map_err(runtime)?;
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    let trials = match args.trials {
        Some(t) => t,
        None => run.map.get_or("experiment.trials", 100).map_err(runtime)?,
    };
    let report = run_experiment(scenario, &cfg, trials, run.seed).map_err(runtime)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| Failure { code: 4, message: e.to_string() })?;
    write_file(&run.out.join(format!("{}.csv", scenario.name())), csv)?;
    write_file(&run.out.join(format!("{}.json", scenario.name())), report.to_json().map_err(runtime)? + "\n")?;
    write_snapshot(&run, "bench", &[("scenario", scenario.name().to_string()), ("trials", trials.to_string())])?;
    println!("{} points written to {}", report.points.len(), run.out.display());
    Ok(())
}

fn cmd_synth_recording(common: &Common) -> CliResult<()> {
    let mut run = resolve(common, None)?;
    let cfg = config::carousel_config(&run.map, run.seed).map_err(runtime)?;
    let opts = config::recording_options(&run.map).map_err(runtime)?;
    let format = opts.format.unwrap_or(RecordingFormat::RawComplex);
    let synth = synthesize_carousel(&cfg).map_err(runtime)?;
    let name = match format {
        RecordingFormat::RawComplex => "recording.bin",
        RecordingFormat::Csv => "recording.csv",
    };
    save_recording(&run.out.join(name), &synth.recording, format).map_err(runtime)?;

    let n_blocks = cfg.n_symbols / opts.block_len;
    let mut traj = String::from("block,time_s,delay_0_s,doppler_0_hz,delay_1_s,doppler_1_hz\n");
    for b in 0..n_blocks {
        let s = cfg.block_truth(b, opts.block_len);
        let mid = (b * opts.block_len) as f64 + 0.5 * (opts.block_len as f64 - 1.0);
        let _ = writeln!(
            traj,
            "{b},{:?},{:?},{:?},{:?},{:?}",
            mid * cfg.symbol_duration,
            s[0].delay,
            s[0].doppler,
            s[1].delay,
            s[1].doppler
        );
    }
    write_file(&run.out.join("trajectory.csv"), traj)?;
    // Pin the numerology so `detect --recording` can reuse this snapshot.
    for (k, v) in [
        ("recording.subcarrier_spacing_hz", cfg.subcarrier_spacing),
        ("recording.symbol_duration_s", cfg.symbol_duration),
        ("recording.carrier_freq_hz", cfg.carrier_freq),
    ] {
        run.map.set(k, format!("{v:?}")).map_err(runtime)?;
    }
    write_snapshot(&run, "synth-recording", &[("blocks", n_blocks.to_string())])?;
    println!("wrote {} ({} symbols, {n_blocks} blocks)", run.out.display(), cfg.n_symbols);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => cmd_simulate(c),
        Command::Detect(a) => cmd_detect(a),
        Command::Bench(a) => cmd_bench(a),
        Command::SynthRecording(c) => cmd_synth_recording(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
