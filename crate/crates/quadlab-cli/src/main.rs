//! Command-line workbench: simulation, linearization, identification,
//! validation, sweep generation, and waypoint geometry.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use quadlab::control::{
    attitude_closed_loop_poles, closed_loop_simulate, loop_rate_sweep, Axis, FeedbackSource,
    PlantKind, Scenario,
};
use quadlab::dynamics::{hover_trim, simulate, BodyState, MotorSpeeds};
use quadlab::excitation::{chirp_signal, doublet};
use quadlab::linearization::{
    controllability, errata_report, linearize_at, model_to_text, stability_report,
};
use quadlab::logio::{
    atomic_write, load_config, read_log, write_log, FlightLogRecord, WorkbenchConfig,
};
use quadlab::sensors::PilotCommand;
use quadlab::sysid::{
    end_to_end_identify, estimate_frf, fit_loes, frf_to_csv, model_from_string, model_to_string,
    FitOptions, LoesStructure, WindowConfig,
};
use quadlab::validation::{axis_channels, simulate_tf, validate_doublet, ValidationAxis};

mod json;

use json::JsonMap;

#[derive(Parser)]
#[command(
    name = "quadlab",
    about = "Desk-scale quadcopter dynamics, control, and system-identification workbench",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an open- or closed-loop simulation and write a flight log.
    Simulate(SimulateArgs),
    /// Linearize about hover; write matrices, poles, controllability, errata.
    Linearize(LinearizeArgs),
    /// Fly a chirp, estimate the frequency response, fit a low-order model.
    Sysid(SysidArgs),
    /// Validate a fitted model against a doublet flight log.
    Validate(ValidateArgs),
    /// Generate a frequency-sweep command trace as CSV.
    ChirpGen(ChirpGenArgs),
    /// Great-circle distance, course, and heading-error calculations.
    Geo(GeoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioName {
    Hover,
    ImpulseRoll,
    ImpulsePitch,
    ImpulseYaw,
    AttitudeOffset,
    DoubletRoll,
    DoubletPitch,
    DoubletYaw,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlantName {
    Nonlinear,
    Linear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FeedbackName {
    TrueState,
    Sensors,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisName {
    Roll,
    Pitch,
    Yaw,
}

impl AxisName {
    fn control_axis(self) -> Axis {
        match self {
            AxisName::Roll => Axis::Roll,
            AxisName::Pitch => Axis::Pitch,
            AxisName::Yaw => Axis::Yaw,
        }
    }

    fn validation_axis(self) -> ValidationAxis {
        match self {
            AxisName::Roll => ValidationAxis::Roll,
            AxisName::Pitch => ValidationAxis::Pitch,
            AxisName::Yaw => ValidationAxis::YawRate,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Workbench config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed for full determinism.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the summary as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Closed-loop scenario to run.
    #[arg(long, value_enum, default_value = "impulse-roll")]
    scenario: ScenarioName,
    /// Plant model for the closed loop.
    #[arg(long, value_enum, default_value = "nonlinear")]
    plant: PlantName,
    /// State feedback source.
    #[arg(long, value_enum, default_value = "true-state")]
    feedback: FeedbackName,
    /// Open-loop run (trim speeds, no controller).
    #[arg(long)]
    open_loop: bool,
    /// Perturb one rotor by +1 % in the open-loop run.
    #[arg(long)]
    perturb: bool,
    /// Override the controller loop rate [Hz].
    #[arg(long)]
    loop_rate: Option<f64>,
    /// Sweep the loop rate over a comma-separated list [Hz] and report
    /// stability per rate.
    #[arg(long, value_delimiter = ',')]
    loop_rate_sweep: Option<Vec<f64>>,
    /// Run duration [s].
    #[arg(long, default_value_t = 6.0)]
    duration: f64,
    /// Disturbance magnitude: [deg/s] for rate impulses, [deg] for
    /// attitude offsets and doublets.
    #[arg(long, default_value_t = 20.0)]
    magnitude: f64,
    /// Enable the configured sensor noise (noiseless otherwise).
    #[arg(long)]
    noise: bool,
    /// Flight log output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LinearizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write A, B, C, D as a plain-text matrix file.
    #[arg(long)]
    out_model: Option<PathBuf>,
}

#[derive(Args)]
struct SysidArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value = "roll")]
    axis: AxisName,
    /// Identify from an existing flight log instead of flying the sweep.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Frequency-response/coherence table output (CSV).
    #[arg(long)]
    out_frf: Option<PathBuf>,
    /// Fitted-model summary output.
    #[arg(long)]
    out_model: Option<PathBuf>,
    /// Sweep flight-log output.
    #[arg(long)]
    out_log: Option<PathBuf>,
    /// Fit band low edge [rad/s].
    #[arg(long, default_value_t = 0.5)]
    band_lo: f64,
    /// Fit band high edge [rad/s].
    #[arg(long, default_value_t = 10.0)]
    band_hi: f64,
    /// Welch window length [samples].
    #[arg(long, default_value_t = 2048)]
    window: usize,
    /// Welch window overlap fraction.
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fitted-model summary file.
    #[arg(long)]
    model: PathBuf,
    /// Doublet flight log.
    #[arg(long)]
    log: PathBuf,
    #[arg(long, value_enum, default_value = "roll")]
    axis: AxisName,
    /// Overlay CSV (t, input, measured, predicted) output.
    #[arg(long)]
    out_overlay: Option<PathBuf>,
}

#[derive(Args)]
struct ChirpGenArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sample period [s].
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Override the sweep record length [s].
    #[arg(long)]
    t_rec: Option<f64>,
    /// Override the start frequency [rad/s].
    #[arg(long)]
    omega_min: Option<f64>,
    /// Override the end frequency [rad/s].
    #[arg(long)]
    omega_max: Option<f64>,
    /// Override the amplitude [command units].
    #[arg(long)]
    amplitude: Option<f64>,
    /// Output CSV path (t, value).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeoArgs {
    #[command(subcommand)]
    op: GeoOp,
}

#[derive(Subcommand)]
enum GeoOp {
    /// Great-circle distance [m] between two points.
    Distance(GeoPair),
    /// Initial bearing [deg] from the first point to the second.
    Course(GeoPair),
    /// Signed turn [deg] from a compass heading to a course.
    HeadingError {
        #[arg(long)]
        course: f64,
        #[arg(long)]
        heading: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct GeoPair {
    #[arg(long)]
    lat1: f64,
    #[arg(long)]
    lon1: f64,
    #[arg(long)]
    lat2: f64,
    #[arg(long)]
    lon2: f64,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Linearize(args) => cmd_linearize(args),
        Command::Sysid(args) => cmd_sysid(args),
        Command::Validate(args) => cmd_validate(args),
        Command::ChirpGen(args) => cmd_chirp_gen(args),
        Command::Geo(args) => cmd_geo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn load(common: &CommonArgs) -> Result<WorkbenchConfig, String> {
    match &common.config {
        Some(path) => load_config(path).map_err(|e| e.to_string()),
        None => Ok(WorkbenchConfig::default()),
    }
}

fn emit(common: &CommonArgs, summary: JsonMap) {
    if common.json {
        println!("{}", summary.to_json());
    } else {
        print!("{}", summary.to_text());
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), String> {
    let mut cfg = load(&args.common)?;
    if let Some(rate) = args.loop_rate {
        cfg.cascade.loop_rate_hz = rate;
    }
    let params = cfg.vehicle;
    let mut summary = JsonMap::new("simulate");

    if let Some(rates) = &args.loop_rate_sweep {
        let table = loop_rate_sweep(&cfg.cascade, &params, rates).map_err(|e| e.to_string())?;
        for entry in &table {
            summary.push(
                &format!("rate_{:.0}_hz", entry.rate_hz),
                &format!(
                    "stable={} settling={} diverged={}",
                    entry.stable,
                    entry
                        .settling
                        .map_or("none".to_string(), |s| format!("{s:.3}")),
                    entry.diverged
                ),
            );
        }
        emit(&args.common, summary);
        return Ok(());
    }

    if args.open_loop {
        let hover = params.hover_speed();
        let speeds = if args.perturb {
            MotorSpeeds {
                omega1: hover * 1.01,
                omega2: hover,
                omega3: hover,
                omega4: hover,
            }
        } else {
            MotorSpeeds::uniform(hover)
        };
        let traj = simulate(
            &BodyState::default(),
            |_, _| speeds,
            &params,
            cfg.cascade.sample_time().min(0.01),
            args.duration,
        )
        .map_err(|e| e.to_string())?;
        summary.push_f64("duration_s", args.duration);
        match traj.aborted_at {
            Some(t) => {
                summary.push("outcome", "AttitudeDiverged");
                summary.push_f64("diverged_at_s", t);
            }
            None => summary.push("outcome", "completed"),
        }
        if let Some(out) = &args.out {
            let records = trajectory_records(&traj, &params);
            write_log(out, &records).map_err(|e| e.to_string())?;
            summary.push("log", &out.display().to_string());
        }
        emit(&args.common, summary);
        return Ok(());
    }

    let scenario = match args.scenario {
        ScenarioName::Hover => Scenario::HoverHold,
        ScenarioName::ImpulseRoll => Scenario::RateImpulse {
            axis: Axis::Roll,
            magnitude_dps: args.magnitude,
        },
        ScenarioName::ImpulsePitch => Scenario::RateImpulse {
            axis: Axis::Pitch,
            magnitude_dps: args.magnitude,
        },
        ScenarioName::ImpulseYaw => Scenario::RateImpulse {
            axis: Axis::Yaw,
            magnitude_dps: args.magnitude,
        },
        ScenarioName::AttitudeOffset => Scenario::AttitudeOffset {
            roll_deg: args.magnitude,
            pitch_deg: 0.0,
        },
        ScenarioName::DoubletRoll | ScenarioName::DoubletPitch | ScenarioName::DoubletYaw => {
            let (_, stick) = doublet(
                args.magnitude,
                0.5,
                2.0,
                cfg.cascade.sample_time(),
                args.duration,
            );
            let hover_throttle = cfg.cascade.hover_throttle();
            let commands = stick
                .iter()
                .map(|v| {
                    let mut cmd = PilotCommand {
                        throttle: hover_throttle,
                        ..Default::default()
                    };
                    match args.scenario {
                        ScenarioName::DoubletRoll => cmd.roll_deg = *v,
                        ScenarioName::DoubletPitch => cmd.pitch_deg = *v,
                        _ => cmd.yaw_rate_dps = *v,
                    }
                    cmd
                })
                .collect();
            Scenario::PilotTrace { commands }
        }
    };

    let plant = match args.plant {
        PlantName::Nonlinear => PlantKind::Nonlinear,
        PlantName::Linear => {
            let (_, trim) = hover_trim(&params);
            PlantKind::Linear(
                linearize_at(&BodyState::default(), &trim, &params).map_err(|e| e.to_string())?,
            )
        }
    };
    let feedback = match args.feedback {
        FeedbackName::TrueState => FeedbackSource::TrueState,
        FeedbackName::Sensors => FeedbackSource::Sensors,
    };
    let noise = if args.noise {
        cfg.noise
    } else {
        quadlab::sensors::NoiseConfig::zero()
    };

    let run = closed_loop_simulate(
        &plant,
        &cfg.cascade,
        &params,
        &scenario,
        args.duration,
        &noise,
        args.common.seed,
        feedback,
    )
    .map_err(|e| e.to_string())?;

    summary.push_f64("duration_s", args.duration);
    summary.push_f64("loop_rate_hz", cfg.cascade.loop_rate_hz);
    match run.aborted_at {
        Some(t) => {
            summary.push("outcome", "AttitudeDiverged");
            summary.push_f64("diverged_at_s", t);
        }
        None => summary.push("outcome", "completed"),
    }
    push_settling(&mut summary, "roll_settling_s", run.roll_settling);
    push_settling(&mut summary, "pitch_settling_s", run.pitch_settling);
    push_settling(&mut summary, "yaw_rate_settling_s", run.yaw_rate_settling);
    summary.push_usize("saturation_events", run.saturation_events);

    if let Some(out) = &args.out {
        write_log(out, &run.records).map_err(|e| e.to_string())?;
        summary.push("log", &out.display().to_string());
    }
    emit(&args.common, summary);
    Ok(())
}

fn push_settling(summary: &mut JsonMap, key: &str, value: Option<f64>) {
    match value {
        Some(s) => summary.push_f64(key, s),
        None => summary.push(key, "none"),
    }
}

fn trajectory_records(
    traj: &quadlab::dynamics::Trajectory,
    params: &quadlab::dynamics::VehicleParams,
) -> Vec<FlightLogRecord> {
    traj.points
        .iter()
        .map(|p| FlightLogRecord {
            t: p.t,
            pwm: [1536.0; 6],
            phi_deg: p.state.phi.to_degrees(),
            theta_deg: p.state.theta.to_degrees(),
            p_dps: p.state.p.to_degrees(),
            q_dps: p.state.q.to_degrees(),
            r_dps: p.state.r.to_degrees(),
            ax: 0.0,
            ay: 0.0,
            az: -p.efforts.u1 / params.mass,
            motor: [0.0; 4],
            u1: p.efforts.u1,
            u2: p.efforts.u2,
            u3: p.efforts.u3,
            u4: p.efforts.u4,
            trigger: false,
            kill: false,
        })
        .collect()
}

fn cmd_linearize(args: LinearizeArgs) -> Result<(), String> {
    let cfg = load(&args.common)?;
    let params = cfg.vehicle;
    let (_, trim) = hover_trim(&params);
    let model = linearize_at(&BodyState::default(), &trim, &params).map_err(|e| e.to_string())?;

    let mut summary = JsonMap::new("linearize");
    summary.push_f64("hover_speed_rad_s", params.hover_speed());
    summary.push_f64("hover_thrust_n", params.hover_thrust());
    summary.push_f64(
        "gravity_coupling_u_theta",
        model.entry(
            quadlab::linearization::StateVar::U,
            quadlab::linearization::StateVar::Theta,
        ),
    );
    summary.push_f64(
        "gravity_coupling_v_phi",
        model.entry(
            quadlab::linearization::StateVar::V,
            quadlab::linearization::StateVar::Phi,
        ),
    );

    let report = stability_report(&model, 1e-6);
    let max_pole = report.poles.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    summary.push_f64("max_pole_magnitude", max_pole);
    summary.push(
        "asymptotically_stable",
        &report.asymptotically_stable.to_string(),
    );

    let (rank, controllable) = controllability(&model);
    summary.push_usize("controllability_rank", rank);
    summary.push("controllable", &controllable.to_string());

    let closed_poles = attitude_closed_loop_poles(&cfg.cascade, &params);
    let max_real = closed_poles
        .iter()
        .map(|p| p.re)
        .fold(f64::NEG_INFINITY, f64::max);
    summary.push_f64("closed_loop_max_pole_real", max_real);

    for (i, e) in errata_report(&model).iter().enumerate() {
        summary.push(
            &format!("erratum_{i}"),
            &format!(
                "{}: printed {} vs computed {:.4}",
                e.location, e.printed, e.computed
            ),
        );
    }

    if let Some(out) = &args.out_model {
        atomic_write(out, model_to_text(&model).as_bytes()).map_err(|e| e.to_string())?;
        summary.push("model_file", &out.display().to_string());
    }
    emit(&args.common, summary);
    Ok(())
}

fn cmd_sysid(args: SysidArgs) -> Result<(), String> {
    let cfg = load(&args.common)?;
    let params = cfg.vehicle;
    let window = WindowConfig {
        length: args.window,
        overlap: args.overlap,
    };
    let band = (args.band_lo, args.band_hi);
    if !(band.0 > 0.0 && band.0 < band.1) {
        return Err(format!("invalid fit band [{}, {}]", band.0, band.1));
    }
    let options = FitOptions::default();

    let mut summary = JsonMap::new("sysid");
    summary.push("axis", args.axis.control_axis().name());

    let (frf, model, log) = match &args.log {
        Some(path) => {
            // Identify from an existing flight log.
            let records = read_log(path).map_err(|e| e.to_string())?;
            let (input, output) = axis_channels(&records, args.axis.validation_axis())
                .map_err(|e| e.to_string())?;
            let times: Vec<f64> = records.iter().map(|r| r.t).collect();
            let rate =
                quadlab::sysid::check_uniform_sampling(&times).map_err(|e| e.to_string())?;
            let frf = estimate_frf(&input, &output, rate, &window).map_err(|e| e.to_string())?;
            let structure = match args.axis {
                AxisName::Roll => LoesStructure::RollAngle,
                AxisName::Pitch => LoesStructure::PitchAngle,
                AxisName::Yaw => LoesStructure::YawRate,
            };
            let (model, _) = fit_loes(&frf, structure, band, &options).map_err(|e| e.to_string())?;
            (frf, model, None)
        }
        None => {
            let report = end_to_end_identify(
                &PlantKind::Nonlinear,
                args.axis.control_axis(),
                &cfg.chirp,
                &cfg.cascade,
                &params,
                &cfg.noise,
                args.common.seed,
                &window,
                band,
                &options,
            )
            .map_err(|e| e.to_string())?;
            summary.push_usize("saturation_events", report.saturation_events);
            (report.frf, report.model, Some(report.log))
        }
    };

    summary.push("fitted_tf", &model.display_tf());
    summary.push_f64("natural_frequency_rad_s", model.natural_frequency());
    summary.push_f64("damping_ratio", model.damping_ratio());
    summary.push_f64("delay_s", model.tau);
    summary.push_f64("dc_gain", model.dc_gain());
    summary.push_f64("fit_cost", model.fit_cost);
    summary.push_usize("window_count", frf.window_count);
    summary.push_f64("min_coherence_in_band", frf.min_coherence(band.0, band.1));

    if let Some(out) = &args.out_frf {
        atomic_write(out, frf_to_csv(&frf).as_bytes()).map_err(|e| e.to_string())?;
        summary.push("frf_file", &out.display().to_string());
    }
    if let Some(out) = &args.out_model {
        atomic_write(out, model_to_string(&model).as_bytes()).map_err(|e| e.to_string())?;
        summary.push("model_file", &out.display().to_string());
    }
    if let (Some(out), Some(records)) = (&args.out_log, &log) {
        write_log(out, records).map_err(|e| e.to_string())?;
        summary.push("log_file", &out.display().to_string());
    }
    emit(&args.common, summary);
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), String> {
    let model_text = std::fs::read_to_string(&args.model).map_err(|e| e.to_string())?;
    let model = model_from_string(&model_text).map_err(|e| e.to_string())?;
    let records = read_log(&args.log).map_err(|e| e.to_string())?;
    let metrics = validate_doublet(&model, &records, args.axis.validation_axis())
        .map_err(|e| e.to_string())?;

    let mut summary = JsonMap::new("validate");
    summary.push("axis", args.axis.validation_axis().name());
    summary.push("model_tf", &model.display_tf());
    summary.push_f64("rms_error", metrics.rms_error);
    summary.push_f64("peak_ratio", metrics.peak_ratio);
    summary.push_f64("lag_s", metrics.lag_s);
    summary.push_f64("window_start_s", metrics.window.0);
    summary.push_f64("window_end_s", metrics.window.1);

    if let Some(out) = &args.out_overlay {
        let (input, measured) = axis_channels(&records, args.axis.validation_axis())
            .map_err(|e| e.to_string())?;
        let dt = records[1].t - records[0].t;
        let predicted = simulate_tf(&model, &input, dt);
        let mut csv = String::from("t,input,measured,predicted\n");
        for (i, r) in records.iter().enumerate() {
            csv.push_str(&format!(
                "{:.6},{:.6},{:.6},{:.6}\n",
                r.t, input[i], measured[i], predicted[i]
            ));
        }
        atomic_write(out, csv.as_bytes()).map_err(|e| e.to_string())?;
        summary.push("overlay_file", &out.display().to_string());
    }
    emit(&args.common, summary);
    Ok(())
}

fn cmd_chirp_gen(args: ChirpGenArgs) -> Result<(), String> {
    let cfg = load(&args.common)?;
    let mut spec = cfg.chirp;
    if let Some(t_rec) = args.t_rec {
        spec.t_rec = t_rec;
    }
    if let Some(omega_min) = args.omega_min {
        spec.omega_min = omega_min;
    }
    if let Some(omega_max) = args.omega_max {
        spec.omega_max = omega_max;
    }
    if let Some(amplitude) = args.amplitude {
        spec.amplitude = amplitude;
    }
    spec.validate()?;
    if args.dt.is_nan() || args.dt <= 0.0 {
        return Err(format!("dt must be positive, got {}", args.dt));
    }

    let (times, values) = chirp_signal(&spec, args.dt);
    let mut summary = JsonMap::new("chirp-gen");
    summary.push_f64("t_rec_s", spec.t_rec);
    summary.push_f64("omega_min_rad_s", spec.omega_min);
    summary.push_f64("omega_max_rad_s", spec.omega_max);
    summary.push_f64("amplitude", spec.amplitude);
    summary.push_f64("schedule_end_fraction", spec.frequency_fraction(spec.t_rec));
    summary.push_usize("samples", values.len());

    if let Some(out) = &args.out {
        let mut csv = String::from("t,value\n");
        for (t, v) in times.iter().zip(values.iter()) {
            csv.push_str(&format!("{t:.6},{v:.9}\n"));
        }
        atomic_write(out, csv.as_bytes()).map_err(|e| e.to_string())?;
        summary.push("csv_file", &out.display().to_string());
    }
    emit(&args.common, summary);
    Ok(())
}

fn cmd_geo(args: GeoArgs) -> Result<(), String> {
    match args.op {
        GeoOp::Distance(pair) => {
            let d = quadlab::geo::distance_between(pair.lat1, pair.lon1, pair.lat2, pair.lon2)
                .map_err(|e| e.to_string())?;
            if pair.json {
                let mut summary = JsonMap::new("geo-distance");
                summary.push_f64("distance_m", d);
                println!("{}", summary.to_json());
            } else {
                println!("{d:.3}");
            }
        }
        GeoOp::Course(pair) => {
            let c = quadlab::geo::course_to(pair.lat1, pair.lon1, pair.lat2, pair.lon2)
                .map_err(|e| e.to_string())?;
            if pair.json {
                let mut summary = JsonMap::new("geo-course");
                summary.push_f64("course_deg", c);
                println!("{}", summary.to_json());
            } else {
                println!("{c:.4}");
            }
        }
        GeoOp::HeadingError {
            course,
            heading,
            json,
        } => {
            let e = quadlab::geo::heading_error(course, heading);
            if json {
                let mut summary = JsonMap::new("geo-heading-error");
                summary.push_f64("heading_error_deg", e);
                println!("{}", summary.to_json());
            } else {
                println!("{e:.4}");
            }
        }
    }
    Ok(())
}
