//! Command-line front end: load configs, run spectrum / compile / fidelity /
//! scan / coherence / verification commands, emit machine-readable results.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use oamforge::analysis::{waist_scan, ScanGrid};
use oamforge::config::{OutputFormat, RunConfig};
use oamforge::error::{Error, Result};
use oamforge::lg::factorial;
use oamforge::quad::QuadratureSettings;
use oamforge::setup::{
    check_coherence, compile_with_diagnostics, pump_equivalent, CoherenceGeometry, PumpEquivalence,
    PumpSpec, SetupPlan, Stage,
};
use oamforge::spdc::{amplitude, AmplitudeRequest, Window};
use oamforge::state::TargetState;
use oamforge::{CrystalConfig, WaistConfig};

#[derive(Parser)]
#[command(
    name = "oamforge",
    version,
    about = "Biphoton OAM spectra, path-identity setups, and fidelity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every data-producing command.
#[derive(Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file for the data product.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for the data product.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Spectral window half-width override: ℓ ∈ [−N, N].
    #[arg(long)]
    window: Option<i32>,
    /// Quadrature tolerance override.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Normalized OAM spectrum of one crystal under a pump superposition.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Pump spec: JSON array of {"l", "re", "im"}.
        #[arg(long)]
        pump: PathBuf,
    },
    /// Compile a setup plan into its biphoton state.
    Compile {
        #[command(flatten)]
        common: CommonArgs,
        /// Setup plan (JSON).
        #[arg(long)]
        plan: PathBuf,
        /// Optional target state for a fidelity report.
        #[arg(long)]
        target: Option<PathBuf>,
        /// OAM subspace "l1,l2,..." for the subspace fidelity.
        #[arg(long, allow_hyphen_values = true)]
        subspace: Option<String>,
    },
    /// Fidelity of a compiled plan over a pump/collection waist grid.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        wp_min: f64,
        #[arg(long, default_value_t = 100.0)]
        wp_max: f64,
        #[arg(long, default_value_t = 25)]
        wp_steps: usize,
        #[arg(long, default_value_t = 5.0)]
        wc_min: f64,
        #[arg(long, default_value_t = 100.0)]
        wc_max: f64,
        #[arg(long, default_value_t = 25)]
        wc_steps: usize,
    },
    /// Temporal-coherence feasibility of an interferometric geometry.
    Coherence {
        /// Geometry description (JSON, lengths in meters).
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the factorial amplitude-ratio law across a waist/length set.
    VerifyRatios {
        #[command(flatten)]
        common: CommonArgs,
        /// Pump OAM of the anti-diagonal under test.
        #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
        ell_pump: i32,
    },
    /// Compare a shift-free plan against its single-pump reduction.
    Equivalence {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        plan: PathBuf,
    },
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    if let Err(error) = run(cli.command) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}

/// `OAMFORGE_THREADS` caps parallelism; unset means rayon's default.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("OAMFORGE_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Spectrum { common, pump } => cmd_spectrum(&common, &pump),
        Command::Compile {
            common,
            plan,
            target,
            subspace,
        } => cmd_compile(&common, &plan, target.as_deref(), subspace.as_deref()),
        Command::Scan {
            common,
            plan,
            target,
            wp_min,
            wp_max,
            wp_steps,
            wc_min,
            wc_max,
            wc_steps,
        } => cmd_scan(
            &common,
            &plan,
            &target,
            (wp_min, wp_max, wp_steps),
            (wc_min, wc_max, wc_steps),
        ),
        Command::Coherence { geometry, out } => cmd_coherence(&geometry, out.as_deref()),
        Command::VerifyRatios { common, ell_pump } => cmd_verify_ratios(&common, ell_pump),
        Command::Equivalence { common, plan } => cmd_equivalence(&common, &plan),
    }
}

struct LoadedRun {
    crystal: CrystalConfig,
    waists: WaistConfig,
    window: Window,
    quad: QuadratureSettings,
    format: OutputFormat,
    out: Option<PathBuf>,
}

fn load_run(common: &CommonArgs) -> Result<LoadedRun> {
    let text = std::fs::read_to_string(&common.config)?;
    let mut config = RunConfig::from_json(&text)?;
    if let Some(window) = common.window {
        config.window = window;
    }
    if let Some(tol) = common.tol {
        config.quad_tolerance = tol;
    }
    config.validate()?;
    let format = match common.format {
        Some(FormatArg::Json) => OutputFormat::Json,
        Some(FormatArg::Csv) => OutputFormat::Csv,
        None => config.format,
    };
    let out = common
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from));
    Ok(LoadedRun {
        crystal: config.crystal,
        waists: config.waists,
        window: Window::symmetric(config.window),
        quad: QuadratureSettings::with_tolerance(config.quad_tolerance),
        format,
        out,
    })
}

fn require_out(run: &LoadedRun) -> Result<&Path> {
    run.out.as_deref().ok_or_else(|| {
        Error::InvalidConfig("no output path: pass --out or set it in the config".into())
    })
}

fn load_pump(path: &Path) -> Result<PumpSpec> {
    #[derive(serde::Deserialize)]
    struct ComponentRepr {
        l: i32,
        re: f64,
        im: f64,
    }
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<ComponentRepr> = serde_json::from_str(&text)?;
    PumpSpec::new(
        raw.into_iter()
            .map(|c| oamforge::setup::PumpComponent {
                ell: c.l,
                weight: Complex64::new(c.re, c.im),
            })
            .collect(),
    )
}

fn load_target(path: &Path) -> Result<TargetState> {
    let text = std::fs::read_to_string(path)?;
    TargetState::from_json(&text)
}

fn load_plan(path: &Path) -> Result<SetupPlan> {
    let text = std::fs::read_to_string(path)?;
    SetupPlan::from_json(&text)
}

fn parse_subspace(text: &str) -> Result<BTreeSet<i32>> {
    text.split(',')
        .map(|token| {
            token
                .trim()
                .parse::<i32>()
                .map_err(|_| Error::InvalidConfig(format!("bad subspace entry: {token:?}")))
        })
        .collect()
}

fn write_table(run: &LoadedRun, table: &oamforge::OamAmplitudeTable) -> Result<()> {
    let path = require_out(run)?;
    let contents = match run.format {
        OutputFormat::Json => table.to_json(),
        OutputFormat::Csv => table.to_csv(),
    };
    std::fs::write(path, contents)?;
    println!("wrote state to {}", path.display());
    Ok(())
}

fn cmd_spectrum(common: &CommonArgs, pump_path: &Path) -> Result<()> {
    let run = load_run(common)?;
    let pump = load_pump(pump_path)?;
    let (raw, diag) =
        oamforge::setup::pump_spectrum(&pump, &run.crystal, &run.waists, run.window, &run.quad)?;
    // Captured probability: compare against a further-widened window.
    let widened = Window::new(diag.window.lo() - 4, diag.window.hi() + 4)?;
    let (reference, _) =
        oamforge::setup::pump_spectrum(&pump, &run.crystal, &run.waists, widened, &run.quad)?;
    let captured = raw.norm_sqr() / reference.norm_sqr();
    let spectrum = raw.normalize()?;
    println!(
        "window [{}, {}], tail fraction {:.3e}",
        diag.window.lo(),
        diag.window.hi(),
        diag.tail_fraction
    );
    println!("captured probability vs widened window: {captured:.9}");
    println!("modes stored: {}", spectrum.len());
    write_table(&run, &spectrum)
}

fn cmd_compile(
    common: &CommonArgs,
    plan_path: &Path,
    target_path: Option<&Path>,
    subspace: Option<&str>,
) -> Result<()> {
    let run = load_run(common)?;
    let plan = load_plan(plan_path)?;
    let (state, diag) =
        compile_with_diagnostics(&plan, &run.crystal, &run.waists, run.window, &run.quad)?;
    println!(
        "compiled {} stages into {} modes (worst tail fraction {:.3e})",
        plan.stages().len(),
        state.len(),
        diag.tail_fraction
    );
    if let Some(target_path) = target_path {
        let target = load_target(target_path)?;
        println!("fidelity: {:.6}", state.fidelity(&target));
        if let Some(subspace) = subspace {
            let subspace = parse_subspace(subspace)?;
            println!(
                "subspace fidelity over {:?}: {:.6}",
                subspace,
                state.subspace_fidelity(&target, &subspace)?
            );
        }
    }
    write_table(&run, &state)
}

fn cmd_scan(
    common: &CommonArgs,
    plan_path: &Path,
    target_path: &Path,
    pump_axis: (f64, f64, usize),
    collection_axis: (f64, f64, usize),
) -> Result<()> {
    let run = load_run(common)?;
    let plan = load_plan(plan_path)?;
    let target = load_target(target_path)?;
    let grid = ScanGrid::new(
        linspace(pump_axis.0, pump_axis.1, pump_axis.2),
        linspace(collection_axis.0, collection_axis.1, collection_axis.2),
    )?;
    let table = waist_scan(&target, &plan, &grid, &run.crystal, run.window, &run.quad);
    if let Some(best) = table.best() {
        println!(
            "best fidelity {:.6} at w_p = {} μm, w_c = {} μm",
            best.fidelity, best.w_pump_um, best.w_collection_um
        );
    }
    if !table.failures.is_empty() {
        println!("{} grid points failed quadrature", table.failures.len());
    }
    let path = require_out(&run)?;
    let contents = match run.format {
        OutputFormat::Json => table.to_json(),
        OutputFormat::Csv => table.to_csv(),
    };
    std::fs::write(path, contents)?;
    println!("wrote scan to {}", path.display());
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn cmd_coherence(geometry_path: &Path, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(geometry_path)?;
    let geometry = CoherenceGeometry::from_json(&text)?;
    let report = check_coherence(&geometry)?;
    for check in &report.checks {
        println!(
            "{}: {} (margin {:+.3e} m)",
            check.label,
            if check.satisfied { "PASS" } else { "FAIL" },
            check.margin_m
        );
    }
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
        println!("wrote report to {}", path.display());
    }
    if !report.all_satisfied() {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.satisfied)
            .map(|c| c.label.as_str())
            .collect();
        return Err(Error::InvalidConfig(format!(
            "coherence conditions violated: {}",
            failing.join("; ")
        )));
    }
    Ok(())
}

fn cmd_verify_ratios(common: &CommonArgs, ell_pump: i32) -> Result<()> {
    let run = load_run(common)?;
    if ell_pump == 0 {
        return Err(Error::InvalidMode(
            "the ratio law needs at least two sign-aligned modes; use |ℓ_pump| ≥ 1".into(),
        ));
    }
    let waist_values = [10.0, 31.6, 100.0];
    let lengths_um = [1_000.0, 10_000.0, 30_000.0];
    let mut max_deviation = 0.0f64;
    for &w_pump in &waist_values {
        for &w_collection in &waist_values {
            for &length in &lengths_um {
                let crystal = run.crystal.with_length_um(length);
                let waists = WaistConfig::symmetric(w_pump, w_collection);
                let signal_range: Vec<i32> = if ell_pump > 0 {
                    (0..=ell_pump).collect()
                } else {
                    (ell_pump..=0).collect()
                };
                let amps: Vec<(i32, i32, Complex64)> = signal_range
                    .iter()
                    .map(|&ls| {
                        let li = ell_pump - ls;
                        amplitude(
                            &AmplitudeRequest::new(ell_pump, ls, li),
                            &crystal,
                            &waists,
                            &run.quad,
                        )
                        .map(|a| (ls, li, a))
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (i, &(ls1, li1, a1)) in amps.iter().enumerate() {
                    for &(ls2, li2, a2) in amps.iter().skip(i + 1) {
                        let expected = (factorial(ls2.unsigned_abs())
                            * factorial(li2.unsigned_abs())
                            / (factorial(ls1.unsigned_abs()) * factorial(li1.unsigned_abs())))
                        .sqrt();
                        let measured = a1.norm() / a2.norm();
                        max_deviation = max_deviation.max((measured - expected).abs() / expected);
                    }
                }
            }
        }
    }
    println!(
        "max relative deviation from the factorial ratio law (ℓ_pump = {ell_pump}): {max_deviation:.3e}"
    );
    Ok(())
}

fn cmd_equivalence(common: &CommonArgs, plan_path: &Path) -> Result<()> {
    let run = load_run(common)?;
    let plan = load_plan(plan_path)?;
    let pump = match pump_equivalent(&plan) {
        PumpEquivalence::Pump(pump) => pump,
        PumpEquivalence::NotRepresentable => {
            return Err(Error::InvalidMode(
                "plan contains nonzero mode shifts: no single-pump equivalent".into(),
            ))
        }
    };
    let direct = oamforge::setup::compile(&plan, &run.crystal, &run.waists, run.window, &run.quad)?;
    let reduced_plan = SetupPlan::new(vec![Stage::Crystal { pump, power: 1.0 }])?;
    let reduced = oamforge::setup::compile(
        &reduced_plan,
        &run.crystal,
        &run.waists,
        run.window,
        &run.quad,
    )?;
    let keys: BTreeSet<(i32, i32)> = direct.keys().chain(reduced.keys()).copied().collect();
    let mut max_discrepancy = 0.0f64;
    for &(a, b) in &keys {
        max_discrepancy =
            max_discrepancy.max((direct.amplitude(a, b) - reduced.amplitude(a, b)).norm());
    }
    println!("max amplitude discrepancy vs single-pump reduction: {max_discrepancy:.3e}");
    Ok(())
}
