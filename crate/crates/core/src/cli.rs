//! The `fatou` command-line surface: field decomposition, flow comparison
//! tables, push-out plan construction and checking, basin reports, and
//! slice rendering. All file outputs are deterministic for a fixed
//! configuration and seed, independent of `--threads`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::basins::{basin_membership, verify_rates, AutSequence, Membership, RateBounds};
use crate::calg::{CVec, Cpx};
use crate::fields::{
    al_decompose, classify_field, rk4_flow, trotter_flow, BasicFieldKind, PolyField, Splitting,
};
use crate::pushout::{fb_check, run_pushout, FbCheckConfig, PushOutError, PushOutPlan, RunReport};
use crate::render::{grid_csv, raster_slice, write_ppm, RasterTarget, SliceSpec};
use crate::scenario::{preset, Scenario, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE_OR_IO: i32 = 1;
pub const EXIT_CERTIFICATION: i32 = 2;

#[derive(Parser)]
#[command(
    name = "fatou",
    about = "Shear-calculus toolkit: complete-field splitting, push-out plans for Fatou-Bieberbach domains avoiding a compact set, basin rates, slice rendering",
    version
)]
struct Cli {
    /// Override the scenario/config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker thread count (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a polynomial field file into complete shear/overshear parts.
    Decompose {
        field_file: PathBuf,
    },
    /// Compare the split flow against the RK4 reference on a field file.
    Flow(FlowArgs),
    /// Push-out plans.
    #[command(subcommand)]
    Pushout(PushoutCmd),
    /// Basin rate verification and membership grid.
    Basin {
        config: PathBuf,
    },
    /// Rasterize a slice of a certified plan to PPM + CSV.
    Render {
        plan: PathBuf,
        slice: PathBuf,
    },
}

#[derive(Args)]
struct FlowArgs {
    field_file: PathBuf,
    /// Integration time (real).
    #[arg(long, default_value_t = 1.0)]
    time: f64,
    /// Start point as comma-separated re,im pairs.
    #[arg(long, default_value = "1,0,0,0")]
    point: String,
    /// Split step counts to tabulate.
    #[arg(long, default_value = "4,16,64,256")]
    steps: String,
    #[arg(long, default_value_t = 10_000)]
    rk4_steps: usize,
    #[arg(long, value_enum, default_value_t = SplittingArg::Lie)]
    splitting: SplittingArg,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum SplittingArg {
    Lie,
    Strang,
}

impl From<SplittingArg> for Splitting {
    fn from(s: SplittingArg) -> Splitting {
        match s {
            SplittingArg::Lie => Splitting::Lie,
            SplittingArg::Strang => Splitting::Strang,
        }
    }
}

#[derive(Subcommand)]
enum PushoutCmd {
    /// Build and certify a plan from a scenario file or preset name.
    Run {
        scenario: String,
        /// Override the stage count.
        #[arg(long)]
        stages: Option<usize>,
    },
    /// Run the family checks on a stored plan.
    Check {
        plan: PathBuf,
        #[arg(long)]
        avoid_samples: Option<usize>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        param_samples: Option<usize>,
    },
}

/// Basin run configuration file.
#[derive(serde::Serialize, serde::Deserialize)]
struct BasinConfig {
    #[serde(default = "crate::scenario::default_schema_version")]
    schema_version: u32,
    name: String,
    sequence: AutSequence,
    s: f64,
    r: f64,
    delta: f64,
    escape_radius: f64,
    horizon: usize,
    rate_samples: usize,
    seed: u64,
    #[serde(default)]
    grid: Option<SliceSpec>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("cannot parse {path:?}: {e}"))
}

fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {dir:?}: {e}"))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| format!("cannot write {path:?}: {e}"))?;
    Ok(path)
}

fn write_bytes(dir: &Path, name: &str, content: &[u8]) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {dir:?}: {e}"))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| format!("cannot write {path:?}: {e}"))?;
    Ok(path)
}

fn report_csv(report: &RunReport) -> String {
    let mut out =
        String::from("schema_version,record,stage,metric,value\n");
    for (i, c) in report.stages.iter().enumerate() {
        let k = i + 1;
        out.push_str(&format!("1,stage,{k},eps,{:?}\n", c.eps));
        out.push_str(&format!(
            "1,stage,{k},max_identity_deviation_on_kb,{:?}\n",
            c.max_identity_deviation_on_kb
        ));
        if let Some(g) = c.min_gap_pushed {
            out.push_str(&format!("1,stage,{k},min_gap_pushed,{g:?}\n"));
        }
        if let Some(m) = c.min_pushed_modulus {
            out.push_str(&format!("1,stage,{k},min_pushed_modulus,{m:?}\n"));
        }
        out.push_str(&format!("1,stage,{k},word_letters,{}\n", c.word_letters));
        out.push_str(&format!("1,stage,{k},attempts,{}\n", c.attempts_used));
    }
    out.push_str(&format!("1,summary,0,eps_budget,{:?}\n", report.eps_budget));
    out
}

fn fb_csv(report: &crate::pushout::FbReport) -> String {
    let mut out = String::from("schema_version,check,metric,value\n");
    out.push_str(&format!(
        "1,center,max_deviation,{:?}\n",
        report.center_max_deviation
    ));
    if let Some(g) = report.avoidance_min_gap {
        out.push_str(&format!("1,avoidance,min_gap,{g:?}\n"));
    }
    out.push_str(&format!(
        "1,avoidance,samples,{}\n",
        report.avoidance_samples
    ));
    out.push_str(&format!(
        "1,injectivity,min_ratio,{:?}\n",
        report.injectivity_min_ratio
    ));
    out.push_str(&format!(
        "1,injectivity,pairs,{}\n",
        report.injectivity_pairs
    ));
    out.push_str(&format!(
        "1,injectivity,violations,{}\n",
        report.injectivity_violations
    ));
    out.push_str(&format!(
        "1,domination,min_sigma_ratio,{:?}\n",
        report.domination_min_sigma_ratio
    ));
    out.push_str(&format!(
        "1,domination,rank_full,{}\n",
        report.domination_rank_full
    ));
    out.push_str(&format!("1,summary,all_pass,{}\n", report.all_pass));
    out
}

fn load_scenario(arg: &str, seed_override: Option<u64>) -> Result<Scenario, String> {
    let mut config: ScenarioConfig = if let Some(p) = preset(arg) {
        p
    } else {
        read_json(Path::new(arg))?
    };
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    Scenario::new(config).map_err(|e| format!("scenario rejected: {e}"))
}

fn cmd_decompose(field_file: &Path) -> Result<i32, String> {
    let field: PolyField = read_json(field_file)?;
    println!("field on C^{} of degree {}", field.dim(), field.degree());
    println!("classification: {:?}", classify_field(&field));
    let sum = al_decompose(&field).map_err(|e| format!("decomposition failed: {e}"))?;
    for (i, part) in sum.parts.iter().enumerate() {
        let conj = if part.conj.is_some() { " (conjugated)" } else { "" };
        match &part.kind {
            BasicFieldKind::Shear { j, p } => {
                println!("part {i}: shear on coordinate {j}, {} terms{conj}", p.num_terms())
            }
            BasicFieldKind::Overshear { j, p, q } => println!(
                "part {i}: overshear on coordinate {j}, p {} terms, q {} terms{conj}",
                p.num_terms(),
                q.num_terms()
            ),
        }
    }
    let residual = sum
        .residual()
        .map_err(|e| format!("residual evaluation failed: {e}"))?;
    println!("parts: {}", sum.parts.len());
    println!("residual: {residual:e}");
    Ok(EXIT_OK)
}

fn parse_point(s: &str) -> Result<CVec, String> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| format!("bad --point: {e}"))?;
    if vals.len() % 2 != 0 {
        return Err("--point needs an even number of reals (re,im pairs)".into());
    }
    CVec::new(
        vals.chunks(2)
            .map(|c| Cpx::new(c[0], c[1]))
            .collect(),
    )
    .map_err(|e| format!("bad --point: {e}"))
}

fn cmd_flow(args: &FlowArgs) -> Result<i32, String> {
    let field: PolyField = read_json(&args.field_file)?;
    let x = parse_point(&args.point)?;
    if x.len() != field.dim() {
        return Err(format!(
            "--point has dimension {}, field needs {}",
            x.len(),
            field.dim()
        ));
    }
    let sum = al_decompose(&field).map_err(|e| format!("decomposition failed: {e}"))?;
    let reference = rk4_flow(&field, args.time, args.rk4_steps, &x)
        .map_err(|e| format!("rk4 reference failed: {e}"))?;
    println!(
        "rk4 reference ({} steps): {:?}",
        args.rk4_steps,
        reference.as_slice()
    );
    println!("m,error");
    let splitting: Splitting = args.splitting.into();
    for tok in args.steps.split(',') {
        let m: usize = tok
            .trim()
            .parse()
            .map_err(|e| format!("bad --steps entry {tok:?}: {e}"))?;
        match trotter_flow(&sum, Cpx::new(args.time, 0.0), m, &x, splitting) {
            Ok(y) => {
                let err = y
                    .sub(&reference)
                    .map_err(|e| e.to_string())?
                    .norm();
                println!("{m},{err:e}");
            }
            Err(e) => println!("{m},failed: {e}"),
        }
    }
    Ok(EXIT_OK)
}

fn cmd_pushout_run(
    scenario_arg: &str,
    stages: Option<usize>,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<i32, String> {
    let scenario = load_scenario(scenario_arg, seed)?;
    let mut engine = crate::pushout::EngineConfig::default();
    if let Some(s) = stages {
        engine.max_stages = s;
    }
    let name = scenario.config().name.clone();
    match run_pushout(&scenario, &engine) {
        Ok((plan, report)) => {
            let plan_json =
                serde_json::to_string_pretty(&plan).map_err(|e| e.to_string())?;
            let report_json =
                serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
            let p1 = write_text(out_dir, &format!("{name}-plan.json"), &plan_json)?;
            let p2 = write_text(out_dir, &format!("{name}-report.json"), &report_json)?;
            let p3 = write_text(out_dir, &format!("{name}-report.csv"), &report_csv(&report))?;
            println!("plan: {}", p1.display());
            println!("report: {} / {}", p2.display(), p3.display());
            for (i, c) in report.stages.iter().enumerate() {
                println!(
                    "stage {}: deviation {:e} (budget {:e}), gap {:?}",
                    i + 1,
                    c.max_identity_deviation_on_kb,
                    c.eps,
                    c.min_gap_pushed
                );
            }
            Ok(EXIT_OK)
        }
        Err(PushOutError::Certification {
            stage,
            condition,
            measured_deviation,
            eps,
            measured_gap,
            attempts,
            partial,
        }) => {
            eprintln!(
                "certification failed at stage {stage}, condition {condition}: deviation {measured_deviation:e} (budget {eps:e}), gap {measured_gap:e}, attempts {attempts}"
            );
            // Preserve the partial plan for inspection.
            let partial_plan = PushOutPlan {
                schema_version: 1,
                scenario: scenario.clone(),
                engine,
                stages: partial,
            };
            if let Ok(json) = serde_json::to_string_pretty(&partial_plan) {
                let _ = write_text(out_dir, &format!("{name}-partial-plan.json"), &json);
            }
            Ok(EXIT_CERTIFICATION)
        }
        Err(e) => Err(format!("push-out failed: {e}")),
    }
}

fn cmd_pushout_check(
    plan_path: &Path,
    avoid: Option<usize>,
    pairs: Option<usize>,
    param_samples: Option<usize>,
    out_dir: &Path,
) -> Result<i32, String> {
    let plan: PushOutPlan = read_json(plan_path)?;
    let mut cfg = FbCheckConfig::default();
    if let Some(a) = avoid {
        cfg.avoid_samples = a;
    }
    if let Some(p) = pairs {
        cfg.injectivity_pairs = p;
    }
    if let Some(ps) = param_samples {
        cfg.param_samples = ps;
    }
    let report = fb_check(&plan, &cfg).map_err(|e| format!("check failed to run: {e}"))?;
    let name = plan.scenario.config().name.clone();
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    write_text(out_dir, &format!("{name}-fbcheck.json"), &json)?;
    write_text(out_dir, &format!("{name}-fbcheck.csv"), &fb_csv(&report))?;
    println!(
        "center {:e} | avoidance gap {:?} over {} samples | injectivity min ratio {:e} ({} pairs) | domination sigma ratio {:e}",
        report.center_max_deviation,
        report.avoidance_min_gap,
        report.avoidance_samples,
        report.injectivity_min_ratio,
        report.injectivity_pairs,
        report.domination_min_sigma_ratio
    );
    if report.all_pass {
        println!("all checks passed");
        Ok(EXIT_OK)
    } else {
        for f in &report.failures {
            eprintln!("FAILED: {f}");
        }
        Ok(EXIT_CERTIFICATION)
    }
}

fn cmd_basin(config_path: &Path, seed: Option<u64>, out_dir: &Path) -> Result<i32, String> {
    let mut cfg: BasinConfig = read_json(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let bounds = RateBounds::new(cfg.s, cfg.r, cfg.delta)
        .map_err(|e| format!("bad rate bounds: {e}"))?;
    let report = verify_rates(&cfg.sequence, &bounds, cfg.rate_samples, cfg.horizon, cfg.seed)
        .map_err(|e| format!("rate verification failed: {e}"))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    write_text(out_dir, &format!("{}-basin-report.json", cfg.name), &json)?;
    let mut csv = String::from("schema_version,metric,value\n");
    csv.push_str(&format!("1,declared_s,{:?}\n", report.declared_s));
    csv.push_str(&format!("1,declared_r,{:?}\n", report.declared_r));
    csv.push_str(&format!("1,measured_min_ratio,{:?}\n", report.measured_min_ratio));
    csv.push_str(&format!("1,measured_max_ratio,{:?}\n", report.measured_max_ratio));
    csv.push_str(&format!("1,violations_total,{}\n", report.violations_total));
    csv.push_str(&format!("1,pass,{}\n", report.pass));
    write_text(out_dir, &format!("{}-basin-report.csv", cfg.name), &csv)?;
    println!(
        "rates measured [{:.6}, {:.6}] against [s={}, r={}]: {} violations",
        report.measured_min_ratio,
        report.measured_max_ratio,
        report.declared_s,
        report.declared_r,
        report.violations_total
    );

    if let Some(grid) = &cfg.grid {
        let target = RasterTarget::Basin {
            seq: &cfg.sequence,
            delta: cfg.delta,
            escape_radius: cfg.escape_radius,
            horizon: cfg.horizon,
        };
        let raster = raster_slice(&target, grid).map_err(|e| format!("raster failed: {e}"))?;
        let ppm = write_ppm(&raster, &grid.palette).map_err(|e| e.to_string())?;
        write_bytes(out_dir, &format!("{}-basin.ppm", cfg.name), &ppm)?;
        write_text(out_dir, &format!("{}-basin-grid.csv", cfg.name), &grid_csv(&raster))?;
        let (c, e, u) = raster.counts();
        println!("grid {}x{}: {c} attracted, {e} escaped, {u} undecided", grid.width, grid.height);
    } else {
        // Single-point membership demo for the report.
        let x = cfg.sequence.center.clone();
        let m = basin_membership(&cfg.sequence, &x, cfg.delta, cfg.escape_radius, cfg.horizon)
            .map_err(|e| e.to_string())?;
        debug_assert!(matches!(m, Membership::Attracted { step: 0 }));
    }
    if report.pass {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_CERTIFICATION)
    }
}

fn cmd_render(plan_path: &Path, slice_path: &Path, out_dir: &Path) -> Result<i32, String> {
    let plan: PushOutPlan = read_json(plan_path)?;
    let spec: SliceSpec = read_json(slice_path)?;
    let raster = raster_slice(&RasterTarget::Plan(&plan), &spec)
        .map_err(|e| format!("raster failed: {e}"))?;
    let ppm = write_ppm(&raster, &spec.palette).map_err(|e| e.to_string())?;
    let name = plan.scenario.config().name.clone();
    let p1 = write_bytes(out_dir, &format!("{name}-render.ppm"), &ppm)?;
    let p2 = write_text(out_dir, &format!("{name}-render.csv"), &grid_csv(&raster))?;
    let (c, e, u) = raster.counts();
    println!("{}x{} raster: {c} converged, {e} escaped, {u} undecided", spec.width, spec.height);
    println!("ppm: {}", p1.display());
    println!("csv: {}", p2.display());
    Ok(EXIT_OK)
}

/// Entry point shared by the binary and the tests; returns the process exit
/// code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap prints help/version on stdout with exit 0 semantics.
            let code = if e.use_stderr() { EXIT_USAGE_OR_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::Decompose { field_file } => cmd_decompose(field_file),
        Command::Flow(args) => cmd_flow(args),
        Command::Pushout(PushoutCmd::Run { scenario, stages }) => {
            cmd_pushout_run(scenario, *stages, cli.seed, &cli.out_dir)
        }
        Command::Pushout(PushoutCmd::Check {
            plan,
            avoid_samples,
            pairs,
            param_samples,
        }) => cmd_pushout_check(plan, *avoid_samples, *pairs, *param_samples, &cli.out_dir),
        Command::Basin { config } => cmd_basin(config, cli.seed, &cli.out_dir),
        Command::Render { plan, slice } => cmd_render(plan, slice, &cli.out_dir),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE_OR_IO
        }
    }
}
