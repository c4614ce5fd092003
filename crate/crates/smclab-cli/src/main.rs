//! Command-line front end wiring the workbench modules into reproducible
//! workflows: identification, controller design, sensitivity analysis,
//! chattering prediction, simulation and the chirp comparison.
//!
//! Usage errors exit with status 2 (clap); domain errors print a
//! machine-readable JSON object on stderr and exit with status 1.

mod csvio;
mod error;

use clap::{Args, Parser, Subcommand};
use error::CliError;
use serde::{Deserialize, Serialize};
use smclab::controllers::{csmc_gains_from_lipschitz, DEFAULT_LAMBDA};
use smclab::harmonic_balance::{hb_solve, log_grid, predict_chattering, sensitivity_map};
use smclab::pid_design::{
    design_pid, design_pid_with_gamma, syd_pd_magnitude, syd_pid_magnitude, syd_pid_peak,
    to_parallel,
};
use smclab::plant::{derive_plant, plant_tf, PhysicalParams, PlantModel, RationalTF};
use smclab::signals::SignalSpec;
use smclab::sim::{simulate, windowed_metrics, ControllerConfig, PlantConfig, SimConfig};
use smclab::sysid::{estimate_frf_point, fit_plant};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "smclab", version, about = "Disturbance-rejection workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate frequency-response points from trace CSVs and fit the
    /// two-parameter plant model
    Identify(IdentifyArgs),
    /// Two-step robust PID synthesis from the sensitivity bound and phase
    /// margin
    DesignPid(DesignPidArgs),
    /// CSMC gains from the disturbance Lipschitz bound
    DesignCsmc(DesignCsmcArgs),
    /// Frequency-amplitude disturbance sensitivity map of the CSMC loop
    AnalyzeSens(AnalyzeSensArgs),
    /// Solve the harmonic balance equation for the predicted limit cycle
    HbSolve(HbSolveArgs),
    /// Run a closed-loop simulation from a JSON config
    Simulate(SimulateArgs),
    /// Run both controllers on the canonical up-chirp and emit paired
    /// traces plus a windowed metrics table
    CompareChirp(CompareChirpArgs),
}

#[derive(Args)]
struct IdentifyArgs {
    /// Physical parameter JSON file {m, sigma, Psi, R, g, mu}
    #[arg(long)]
    params: PathBuf,
    /// Excitation frequency of each trace [rad/s]; repeat per trace
    #[arg(long = "omega", required = true)]
    omegas: Vec<f64>,
    /// Trace CSV (t, u, y columns); repeat per frequency
    #[arg(long = "trace", required = true)]
    traces: Vec<PathBuf>,
    #[arg(long, default_value_t = 5000.0)]
    sample_rate: f64,
    #[arg(long, default_value_t = 20)]
    n_periods: usize,
    /// Fit range lower edge [rad/s]
    #[arg(long, default_value_t = 4.0)]
    fit_lo: f64,
    /// Fit range upper edge [rad/s]
    #[arg(long, default_value_t = 380.0)]
    fit_hi: f64,
    /// Output CSV of estimated points
    #[arg(long)]
    frf_out: PathBuf,
    /// Output JSON of the fitted {sigma, K, tau}
    #[arg(long)]
    fit_out: PathBuf,
}

#[derive(Args)]
struct DesignPidArgs {
    #[arg(long = "K")]
    k: f64,
    #[arg(long)]
    tau: f64,
    /// Worst-case disturbance amplification in dB (typically negative)
    #[arg(long, allow_negative_numbers = true)]
    smax_db: f64,
    #[arg(long)]
    phi_deg: f64,
    /// Pin the proportional gain directly instead of 10^(-smax_db/20)
    #[arg(long)]
    gamma: Option<f64>,
    /// Output JSON path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV sweep of |S_yd,PD| and |S_yd,PID| magnitudes
    #[arg(long)]
    sweep_out: Option<PathBuf>,
}

#[derive(Args)]
struct DesignCsmcArgs {
    #[arg(long = "L")]
    lipschitz: f64,
    /// Scaling constants as "l1,l2,l3"
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<[f64; 3]>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeSensArgs {
    #[arg(long = "L")]
    lipschitz: f64,
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<[f64; 3]>,
    /// Plant JSON file: {K, tau, mu} or {m, sigma, Psi, R, g, mu}
    #[arg(long)]
    plant: PathBuf,
    /// Explicit amplitude list "a1,a2,..." [m]; overrides the log grid
    #[arg(long)]
    amps: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    omega_lo: f64,
    #[arg(long, default_value_t = 2000.0)]
    omega_hi: f64,
    #[arg(long, default_value_t = 60)]
    omega_points: usize,
    #[arg(long, default_value_t = 1e-5)]
    a_lo: f64,
    #[arg(long, default_value_t = 1e-2)]
    a_hi: f64,
    #[arg(long, default_value_t = 40)]
    a_points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HbSolveArgs {
    #[arg(long = "L")]
    lipschitz: f64,
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<[f64; 3]>,
    /// Use the normalized plant 1/(s^2 (mu s + 1))
    #[arg(long, conflicts_with = "plant")]
    normalized: bool,
    /// Actuator time constant for the normalized plant [s]
    #[arg(long, default_value_t = 1.2e-3)]
    mu: f64,
    /// Plant JSON file (actuator lag included from its mu field)
    #[arg(long)]
    plant: Option<PathBuf>,
    /// Initial amplitude guess [m]
    #[arg(long)]
    guess_a: Option<f64>,
    /// Initial frequency guess [rad/s]
    #[arg(long)]
    guess_omega: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config JSON
    #[arg(long)]
    config: PathBuf,
    /// Output trace CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareChirpArgs {
    /// Comparison config JSON; canonical defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for pid_trace.csv, csmc_trace.csv, metrics.csv
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_lambda(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("lambda must be three comma-separated numbers".into());
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.trim().parse::<f64>().map_err(|e| e.to_string())?;
    }
    Ok(out)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.code);
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Identify(args) => identify(args),
        Command::DesignPid(args) => design_pid_cmd(args),
        Command::DesignCsmc(args) => design_csmc_cmd(args),
        Command::AnalyzeSens(args) => analyze_sens(args),
        Command::HbSolve(args) => hb_solve_cmd(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::CompareChirp(args) => compare_chirp(args),
    }
}

/// Plant file: fitted model {K, tau, mu} or physical parameters.
#[derive(Deserialize)]
#[serde(untagged)]
enum PlantFile {
    Model(PlantModel),
    Physical(PhysicalParams),
}

fn load_plant_model(path: &Path) -> Result<PlantModel, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::domain("io", format!("{}: {e}", path.display())))?;
    let file: PlantFile = serde_json::from_str(&text)
        .map_err(|e| CliError::domain("parse", format!("{}: {e}", path.display())))?;
    let model = match file {
        PlantFile::Model(m) => m,
        PlantFile::Physical(p) => {
            p.validate().map_err(CliError::from)?;
            derive_plant(&p)
        }
    };
    model.validate().map_err(CliError::from)?;
    Ok(model)
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::domain("serialize", e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::domain("io", format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn identify(args: IdentifyArgs) -> Result<(), CliError> {
    if args.omegas.len() != args.traces.len() {
        return Err(CliError::usage(format!(
            "{} --omega values for {} --trace files",
            args.omegas.len(),
            args.traces.len()
        )));
    }
    let text = fs::read_to_string(&args.params)
        .map_err(|e| CliError::domain("io", format!("{}: {e}", args.params.display())))?;
    let params: PhysicalParams = serde_json::from_str(&text)
        .map_err(|e| CliError::domain("parse", format!("{}: {e}", args.params.display())))?;
    params.validate().map_err(CliError::from)?;

    let mut points = Vec::new();
    for (&omega, path) in args.omegas.iter().zip(&args.traces) {
        let (u, y) = csvio::read_uy_trace(path)?;
        let p = estimate_frf_point(&u, &y, omega, args.sample_rate, args.n_periods)
            .map_err(CliError::from)?;
        points.push(p);
    }
    csvio::write_frf_csv(&args.frf_out, &points)?;
    let fit = fit_plant(&points, (args.fit_lo, args.fit_hi), &params).map_err(CliError::from)?;
    write_json(&fit, Some(&args.fit_out))
}

/// JSON emitted by `design-pid`.
#[derive(Serialize, Deserialize)]
struct PidDesignOutput {
    gamma: f64,
    #[serde(rename = "T_I")]
    t_i: f64,
    omega_s: f64,
    #[serde(rename = "Kp")]
    kp: f64,
    #[serde(rename = "Ki")]
    ki: f64,
    #[serde(rename = "Kd")]
    kd: f64,
}

fn design_pid_cmd(args: DesignPidArgs) -> Result<(), CliError> {
    let design = match args.gamma {
        Some(gamma) => design_pid_with_gamma(args.k, args.tau, gamma, args.phi_deg),
        None => design_pid(args.k, args.tau, args.smax_db, args.phi_deg),
    }
    .map_err(CliError::from)?;
    let gains = to_parallel(&design);
    if let Some(path) = &args.sweep_out {
        let omegas = log_grid(1e-2, 1e4, 600);
        let (omega_max, peak_db) = syd_pid_peak(&design, args.k, args.tau);
        let rows: Vec<(f64, f64, f64)> = omegas
            .iter()
            .map(|&w| {
                (
                    w,
                    20.0 * syd_pd_magnitude(args.k, args.tau, design.gamma, w).log10(),
                    20.0 * syd_pid_magnitude(args.k, args.tau, design.gamma, design.t_i, w)
                        .max(1e-300)
                        .log10(),
                )
            })
            .collect();
        csvio::write_syd_sweep_csv(path, &rows, omega_max, peak_db)?;
    }
    write_json(
        &PidDesignOutput {
            gamma: design.gamma,
            t_i: design.t_i,
            omega_s: design.omega_s,
            kp: gains.kp,
            ki: gains.ki,
            kd: gains.kd,
        },
        args.out.as_deref(),
    )
}

fn design_csmc_cmd(args: DesignCsmcArgs) -> Result<(), CliError> {
    let gains = csmc_gains_from_lipschitz(args.lipschitz, args.lambda.unwrap_or(DEFAULT_LAMBDA))
        .map_err(CliError::from)?;
    write_json(&gains, args.out.as_deref())
}

fn analyze_sens(args: AnalyzeSensArgs) -> Result<(), CliError> {
    let gains = csmc_gains_from_lipschitz(args.lipschitz, args.lambda.unwrap_or(DEFAULT_LAMBDA))
        .map_err(CliError::from)?;
    let model = load_plant_model(&args.plant)?;
    let w = plant_tf(&model, true);
    let omega_grid = log_grid(args.omega_lo, args.omega_hi, args.omega_points.max(2));
    let a_grid = match &args.amps {
        Some(list) => {
            let mut amps = Vec::new();
            for part in list.split(',') {
                let a: f64 = part.trim().parse().map_err(|_| {
                    CliError::usage(format!("bad amplitude value {part:?} in --amps"))
                })?;
                if !(a > 0.0) {
                    return Err(CliError::usage("amplitudes must be positive".to_string()));
                }
                amps.push(a);
            }
            amps.sort_by(f64::total_cmp);
            amps
        }
        None => log_grid(args.a_lo, args.a_hi, args.a_points.max(2)),
    };
    let map = sensitivity_map(&gains, &w, &omega_grid, &a_grid);
    csvio::write_map_csv(&args.out, &map)
}

fn hb_solve_cmd(args: HbSolveArgs) -> Result<(), CliError> {
    let lambda = args.lambda.unwrap_or(DEFAULT_LAMBDA);
    let gains = csmc_gains_from_lipschitz(args.lipschitz, lambda).map_err(CliError::from)?;
    let (w, mu): (RationalTF, f64) = match &args.plant {
        Some(path) => {
            let model = load_plant_model(path)?;
            (plant_tf(&model, true), model.mu)
        }
        None => {
            if !args.normalized {
                return Err(CliError::usage(
                    "pass --normalized or --plant FILE".to_string(),
                ));
            }
            if !(args.mu > 0.0) {
                return Err(CliError::usage("--mu must be positive".to_string()));
            }
            (
                RationalTF::new(vec![1.0], vec![0.0, 0.0, 1.0, args.mu])
                    .expect("valid denominator"),
                args.mu,
            )
        }
    };
    let guess = match (args.guess_a, args.guess_omega) {
        (Some(a), Some(om)) => (a, om),
        (None, None) if mu > 0.0 => {
            predict_chattering(args.lipschitz, lambda[0], mu, 0.5).map_err(CliError::from)?
        }
        _ => {
            return Err(CliError::usage(
                "pass both --guess-a and --guess-omega (no actuator lag to derive a guess from)"
                    .to_string(),
            ))
        }
    };
    let sol = hb_solve(&gains, &w, guess, (mu > 0.0).then_some(mu)).map_err(CliError::from)?;
    write_json(&sol, args.out.as_deref())
}

fn simulate_cmd(args: SimulateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::domain("io", format!("{}: {e}", args.config.display())))?;
    let config: SimConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::domain("parse", format!("{}: {e}", args.config.display())))?;
    let trace = simulate(&config).map_err(CliError::from)?;
    csvio::write_trace_csv(&args.out, &trace)
}

/// Configuration of the two-controller chirp comparison; every field has
/// the canonical default.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct CompareChirpConfig {
    plant: PlantConfig,
    pid: smclab::ParallelPidGains,
    csmc_lipschitz: f64,
    csmc_lambda: [f64; 3],
    amplitude: f64,
    omega_start: f64,
    omega_end: f64,
    duration: f64,
    window: f64,
    reference: f64,
    initial_y: f64,
    plant_step: f64,
    control_period: f64,
    red_scaling: f64,
}

impl Default for CompareChirpConfig {
    fn default() -> Self {
        let design = design_pid_with_gamma(0.0408, 0.006684, 400.0, 60.0)
            .expect("canonical design is valid");
        Self {
            plant: PlantConfig::Model(
                PlantModel::new(0.0408, 0.006684, 1.2e-3).expect("canonical model"),
            ),
            pid: to_parallel(&design),
            csmc_lipschitz: 0.4,
            csmc_lambda: DEFAULT_LAMBDA,
            amplitude: 1.0,
            omega_start: 0.06,
            omega_end: 30.0,
            duration: 60.0,
            window: 2.0,
            reference: 0.009,
            initial_y: 0.009,
            plant_step: 1e-5,
            control_period: 2e-4,
            red_scaling: 8.0,
        }
    }
}

fn compare_chirp(args: CompareChirpArgs) -> Result<(), CliError> {
    let config: CompareChirpConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::domain("io", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::domain("parse", format!("{}: {e}", path.display())))?
        }
        None => CompareChirpConfig::default(),
    };
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::domain("io", format!("{}: {e}", args.out_dir.display())))?;

    let chirp = SignalSpec::chirp_spanning(
        config.amplitude,
        config.omega_start,
        config.omega_end,
        config.duration,
    )
    .map_err(CliError::from)?;
    let rate = (config.omega_end - config.omega_start) / (2.0 * config.duration);
    let sim_config = |controller: ControllerConfig| SimConfig {
        plant: config.plant.clone(),
        controller,
        disturbance: chirp.clone(),
        noise: None,
        reference: config.reference,
        t_end: config.duration,
        plant_step: config.plant_step,
        control_period: config.control_period,
        initial_y: config.initial_y,
        gravity_comp_enabled: false,
        saturation: None,
        sensor_range: None,
        red_scaling: config.red_scaling,
    };

    let pid_trace =
        simulate(&sim_config(ControllerConfig::Pid(config.pid))).map_err(CliError::from)?;
    let csmc_trace = simulate(&sim_config(ControllerConfig::Csmc {
        lipschitz: config.csmc_lipschitz,
        lambda: config.csmc_lambda,
    }))
    .map_err(CliError::from)?;

    csvio::write_trace_csv(&args.out_dir.join("pid_trace.csv"), &pid_trace)?;
    csvio::write_trace_csv(&args.out_dir.join("csmc_trace.csv"), &csmc_trace)?;

    let pid_wins = windowed_metrics(&pid_trace, config.window);
    let csmc_wins = windowed_metrics(&csmc_trace, config.window);
    csvio::write_compare_metrics_csv(
        &args.out_dir.join("metrics.csv"),
        &pid_wins,
        &csmc_wins,
        |t| config.omega_start + 2.0 * rate * t,
        config.amplitude,
    )
}
