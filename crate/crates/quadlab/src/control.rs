//! Discrete PID control and the cascaded attitude architecture: roll/pitch
//! angle loops commanding inner rate loops, plus a yaw rate loop. Pilot
//! commands and controller I/O are in degrees; the rate-loop outputs are
//! scaled into torques before motor unmixing.
//!
//! The PID follows the fixed-sample-time library pattern: calls earlier than
//! one sample period return the previous output unchanged, the integral term
//! clamps to the output limits, and the derivative acts on the measurement
//! with an inverted sign (revertible via `negate_derivative`).

use std::fmt;

use nalgebra::{Complex, DMatrix};

use crate::dynamics::{
    hover_trim, mix_motors, rk4_step, unmix_motors, BodyState, ControlEfforts, DynamicsError,
    MotorSpeeds, VehicleParams,
};
use crate::linearization::{general_eigenvalues, LinearModel};
use crate::logio::FlightLogRecord;
use crate::sensors::{accel_angles, complementary_step, ImuEmulator, NoiseConfig, PilotCommand};

#[derive(Debug, Clone, PartialEq)]
pub enum ControlError {
    /// Loop rate / integration step mismatch or out of range.
    BadLoopRate(String),
    Dynamics(DynamicsError),
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlError::BadLoopRate(msg) => write!(f, "bad loop rate: {msg}"),
            ControlError::Dynamics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ControlError {}

impl From<DynamicsError> for ControlError {
    fn from(e: DynamicsError) -> Self {
        ControlError::Dynamics(e)
    }
}

/// PID gains: output = Kp·e + integral(Ki·e) - Td·d(measurement)/dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub td: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PidDirection {
    Direct,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PidMode {
    Active,
    Off,
}

/// Controller instance state, advanced functionally by `pid_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    /// Clamped integral accumulator.
    pub integral: f64,
    prev_measurement: Option<f64>,
    prev_output: f64,
    /// First-order filtered measurement derivative.
    d_filtered: f64,
    last_time: Option<f64>,
    pub out_min: f64,
    pub out_max: f64,
    /// Fixed sample period [s].
    pub sample_time: f64,
    pub direction: PidDirection,
    pub mode: PidMode,
    /// Apply the inverted derivative sign (default; revertible).
    pub negate_derivative: bool,
    /// Derivative low-pass time constant [s]; 0 disables filtering.
    pub derivative_filter_tau: f64,
}

impl PidState {
    pub fn new(sample_time: f64, out_min: f64, out_max: f64) -> Self {
        assert!(out_min < out_max && sample_time > 0.0);
        PidState {
            integral: 0.0,
            prev_measurement: None,
            prev_output: 0.0,
            d_filtered: 0.0,
            last_time: None,
            out_min,
            out_max,
            sample_time,
            direction: PidDirection::Direct,
            mode: PidMode::Active,
            negate_derivative: true,
            derivative_filter_tau: 0.0,
        }
    }
}

/// One PID update at time `now` [s]. Calls spaced closer than the sample
/// time are no-ops returning the previous output.
pub fn pid_step(
    state: &PidState,
    gains: &PidGains,
    setpoint: f64,
    measurement: f64,
    now: f64,
) -> (f64, PidState) {
    let mut next = *state;
    if state.mode == PidMode::Off {
        return (state.prev_output, next);
    }
    if let Some(last) = state.last_time {
        if now - last < state.sample_time - 1e-9 {
            return (state.prev_output, next);
        }
    }
    let dt = state.sample_time;
    let sign = match state.direction {
        PidDirection::Direct => 1.0,
        PidDirection::Reverse => -1.0,
    };
    let error = setpoint - measurement;

    let raw_derivative = match state.prev_measurement {
        Some(prev) => (measurement - prev) / dt,
        None => 0.0,
    };
    next.d_filtered = if state.derivative_filter_tau > 0.0 {
        let blend = dt / (state.derivative_filter_tau + dt);
        state.d_filtered + blend * (raw_derivative - state.d_filtered)
    } else {
        raw_derivative
    };
    let d_sign = if state.negate_derivative { -1.0 } else { 1.0 };

    // Output uses the integral as accumulated so far; the fresh error lands
    // in the accumulator afterwards, so the first step after a reset is the
    // pure P+D term.
    let unclamped =
        sign * gains.kp * error + state.integral + sign * d_sign * gains.td * next.d_filtered;
    let output = unclamped.clamp(state.out_min, state.out_max);

    next.integral =
        (state.integral + sign * gains.ki * error * dt).clamp(state.out_min, state.out_max);
    next.prev_measurement = Some(measurement);
    next.prev_output = output;
    next.last_time = Some(now);
    (output, next)
}

/// Zero the integral accumulator, leaving every other field unchanged.
pub fn reset_integral(state: &PidState) -> PidState {
    PidState {
        integral: 0.0,
        ..*state
    }
}

/// Cascade architecture configuration. Gains follow the initial
/// stabilization set: angle loops Kp 3.604, rate loops Kp 0.2209 / Td 0.014,
/// yaw rate Kp 0.1141 / Ki 0.634.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeConfig {
    pub angle_gains: PidGains,
    pub rate_gains: PidGains,
    pub yaw_rate_gains: PidGains,
    /// Controller frame rate [Hz].
    pub loop_rate_hz: f64,
    /// Angle-loop output (rate setpoint) limit [deg/s].
    pub rate_cmd_limit_dps: f64,
    /// Rate-loop output limit [command units].
    pub effort_cmd_limit: f64,
    /// Roll/pitch torque per rate-loop output unit [N·m].
    pub roll_pitch_effort_scale: f64,
    /// Yaw torque per yaw-loop output unit [N·m].
    pub yaw_effort_scale: f64,
    /// Full-throttle thrust as a multiple of vehicle weight; hover sits at
    /// throttle = 1/factor.
    pub throttle_thrust_factor: f64,
    /// Rate-loop derivative low-pass time constant [s]; 0 = filtering off.
    pub derivative_filter_tau: f64,
    pub negate_derivative: bool,
    /// Complementary blend for the attitude estimate feeding the angle loops.
    pub comp_filter_alpha: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            angle_gains: PidGains {
                kp: 3.604,
                ki: 0.0,
                td: 0.0,
            },
            rate_gains: PidGains {
                kp: 0.2209,
                ki: 0.0,
                td: 0.014,
            },
            yaw_rate_gains: PidGains {
                kp: 0.1141,
                ki: 0.634,
                td: 0.0,
            },
            loop_rate_hz: 100.0,
            rate_cmd_limit_dps: 400.0,
            effort_cmd_limit: 80.0,
            roll_pitch_effort_scale: 0.025,
            yaw_effort_scale: 0.0144,
            throttle_thrust_factor: 2.0,
            derivative_filter_tau: 0.02,
            negate_derivative: true,
            comp_filter_alpha: 0.98,
        }
    }
}

impl CascadeConfig {
    pub fn sample_time(&self) -> f64 {
        1.0 / self.loop_rate_hz
    }

    /// Throttle fraction that balances weight.
    pub fn hover_throttle(&self) -> f64 {
        1.0 / self.throttle_thrust_factor
    }
}

/// State estimate fed to the cascade: filtered attitude plus raw gyro rates,
/// in controller units (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatedState {
    pub phi_deg: f64,
    pub theta_deg: f64,
    pub p_dps: f64,
    pub q_dps: f64,
    pub r_dps: f64,
}

/// The five PID instances of the cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeState {
    pub roll_angle: PidState,
    pub pitch_angle: PidState,
    pub roll_rate: PidState,
    pub pitch_rate: PidState,
    pub yaw_rate: PidState,
}

impl CascadeState {
    pub fn new(cfg: &CascadeConfig) -> Self {
        let dt = cfg.sample_time();
        let angle = PidState::new(dt, -cfg.rate_cmd_limit_dps, cfg.rate_cmd_limit_dps);
        let mut rate = PidState::new(dt, -cfg.effort_cmd_limit, cfg.effort_cmd_limit);
        rate.negate_derivative = cfg.negate_derivative;
        rate.derivative_filter_tau = cfg.derivative_filter_tau;
        CascadeState {
            roll_angle: angle,
            pitch_angle: angle,
            roll_rate: rate,
            pitch_rate: rate,
            yaw_rate: PidState::new(dt, -cfg.effort_cmd_limit, cfg.effort_cmd_limit),
        }
    }

    /// Pre-takeoff integral reset on every loop.
    pub fn reset_integrals(&self) -> Self {
        CascadeState {
            roll_angle: reset_integral(&self.roll_angle),
            pitch_angle: reset_integral(&self.pitch_angle),
            roll_rate: reset_integral(&self.roll_rate),
            pitch_rate: reset_integral(&self.pitch_rate),
            yaw_rate: reset_integral(&self.yaw_rate),
        }
    }

    /// Turn every loop off (kill switch engaged).
    pub fn set_mode(&mut self, mode: PidMode) {
        self.roll_angle.mode = mode;
        self.pitch_angle.mode = mode;
        self.roll_rate.mode = mode;
        self.pitch_rate.mode = mode;
        self.yaw_rate.mode = mode;
    }
}

/// One cascade frame: angle PIDs feed the rate PID setpoints, yaw runs rate
/// only, throttle maps straight to thrust. With the kill switch engaged the
/// pilot command passes through to the efforts untouched by any loop.
pub fn cascade_step(
    cfg: &CascadeConfig,
    params: &VehicleParams,
    pilot: &PilotCommand,
    est: &EstimatedState,
    state: &CascadeState,
    now: f64,
) -> (ControlEfforts, CascadeState) {
    let u1 = pilot.throttle * cfg.throttle_thrust_factor * params.mass * params.g;
    let mut next = *state;

    if pilot.kill {
        // Open-loop pass-through at the same command scaling.
        return (
            ControlEfforts {
                u1,
                u2: pilot.roll_deg * cfg.roll_pitch_effort_scale,
                u3: pilot.pitch_deg * cfg.roll_pitch_effort_scale,
                u4: pilot.yaw_rate_dps * cfg.yaw_effort_scale,
                omega_res: 0.0,
            },
            next,
        );
    }

    let (roll_rate_sp, roll_angle_state) = pid_step(
        &state.roll_angle,
        &cfg.angle_gains,
        pilot.roll_deg,
        est.phi_deg,
        now,
    );
    let (pitch_rate_sp, pitch_angle_state) = pid_step(
        &state.pitch_angle,
        &cfg.angle_gains,
        pilot.pitch_deg,
        est.theta_deg,
        now,
    );
    let (roll_out, roll_rate_state) = pid_step(
        &state.roll_rate,
        &cfg.rate_gains,
        roll_rate_sp,
        est.p_dps,
        now,
    );
    let (pitch_out, pitch_rate_state) = pid_step(
        &state.pitch_rate,
        &cfg.rate_gains,
        pitch_rate_sp,
        est.q_dps,
        now,
    );
    let (yaw_out, yaw_rate_state) = pid_step(
        &state.yaw_rate,
        &cfg.yaw_rate_gains,
        pilot.yaw_rate_dps,
        est.r_dps,
        now,
    );
    next.roll_angle = roll_angle_state;
    next.pitch_angle = pitch_angle_state;
    next.roll_rate = roll_rate_state;
    next.pitch_rate = pitch_rate_state;
    next.yaw_rate = yaw_rate_state;

    (
        ControlEfforts {
            u1,
            u2: roll_out * cfg.roll_pitch_effort_scale,
            u3: pitch_out * cfg.roll_pitch_effort_scale,
            u4: yaw_out * cfg.yaw_effort_scale,
            omega_res: 0.0,
        },
        next,
    )
}

/// Which plant the closed loop drives.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum PlantKind {
    Nonlinear,
    /// Hover-linearized model; the plant integrates x' = A x + B (u - u_trim).
    Linear(LinearModel),
}

/// Where the cascade's state estimate comes from.
///
/// `TrueState` feeds the actual plant states back (the state-space
/// closed-loop analysis setting); `Sensors` runs the IMU emulation and
/// complementary filter, whose in-flight accelerometer carries no tilt
/// information, making the attitude estimate a washout of the true angle
/// (the hardware-faithful identification setting).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackSource {
    TrueState,
    Sensors,
}

/// Disturbance/command scenario for a closed-loop run.
#[derive(Debug, Clone)]
pub enum Scenario {
    /// Steady hover, no disturbance.
    HoverHold,
    /// Initial body-rate offset [deg/s] on one axis.
    RateImpulse { axis: Axis, magnitude_dps: f64 },
    /// Initial attitude offset [deg].
    AttitudeOffset { roll_deg: f64, pitch_deg: f64 },
    /// Pilot stick trace, one command per controller frame (throttle field
    /// is used as given).
    PilotTrace { commands: Vec<PilotCommand> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Roll => "roll",
            Axis::Pitch => "pitch",
            Axis::Yaw => "yaw",
        }
    }
}

impl Scenario {
    fn initial_state(&self) -> BodyState {
        match self {
            Scenario::RateImpulse { axis, magnitude_dps } => {
                let mag = magnitude_dps.to_radians();
                let mut s = BodyState::default();
                match axis {
                    Axis::Roll => s.p = mag,
                    Axis::Pitch => s.q = mag,
                    Axis::Yaw => s.r = mag,
                }
                s
            }
            Scenario::AttitudeOffset { roll_deg, pitch_deg } => BodyState {
                phi: roll_deg.to_radians(),
                theta: pitch_deg.to_radians(),
                ..Default::default()
            },
            _ => BodyState::default(),
        }
    }

    fn command(&self, frame: usize, hover_throttle: f64) -> PilotCommand {
        match self {
            Scenario::PilotTrace { commands } => commands
                .get(frame)
                .copied()
                .unwrap_or(PilotCommand {
                    throttle: hover_throttle,
                    ..Default::default()
                }),
            _ => PilotCommand {
                throttle: hover_throttle,
                ..Default::default()
            },
        }
    }
}

/// Closed-loop run output: per-frame log records, the true state trace, and
/// settling metrics.
#[derive(Debug, Clone)]
pub struct ClosedLoopRun {
    pub records: Vec<FlightLogRecord>,
    pub states: Vec<BodyState>,
    pub aborted_at: Option<f64>,
    /// Frames where the commanded efforts were infeasible or a rotor hit its
    /// speed ceiling.
    pub saturation_events: usize,
    /// 2 %-of-peak settling time [s] per axis signal (roll angle, pitch
    /// angle, yaw rate); None when the signal never stays inside the band.
    pub roll_settling: Option<f64>,
    pub pitch_settling: Option<f64>,
    pub yaw_rate_settling: Option<f64>,
}

impl ClosedLoopRun {
    pub fn diverged(&self) -> bool {
        self.aborted_at.is_some()
    }
}

/// Run the full pipeline each frame: sensor -> complementary filter ->
/// cascade -> unmix (with saturation) -> plant step. The plant integrates in
/// substeps of at most 10 ms so low controller rates stay well resolved.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_simulate(
    plant: &PlantKind,
    cfg: &CascadeConfig,
    params: &VehicleParams,
    scenario: &Scenario,
    duration: f64,
    noise: &NoiseConfig,
    seed: u64,
    feedback: FeedbackSource,
) -> Result<ClosedLoopRun, ControlError> {
    if !(cfg.loop_rate_hz > 0.0 && cfg.loop_rate_hz.is_finite()) {
        return Err(ControlError::BadLoopRate(format!(
            "loop rate {} Hz",
            cfg.loop_rate_hz
        )));
    }
    let frame_dt = cfg.sample_time();
    let frames = (duration / frame_dt).round() as usize;
    let substeps = (frame_dt / 0.01).ceil().max(1.0) as usize;
    let sub_dt = frame_dt / substeps as f64;

    let (_, trim_efforts) = hover_trim(params);
    let mut imu = ImuEmulator::new(*noise, seed);
    let mut cascade = CascadeState::new(cfg);
    let mut state = scenario.initial_state();
    let mut phi_hat = state.phi;
    let mut theta_hat = state.theta;

    let mut run = ClosedLoopRun {
        records: Vec::with_capacity(frames + 1),
        states: Vec::with_capacity(frames + 1),
        aborted_at: None,
        saturation_events: 0,
        roll_settling: None,
        pitch_settling: None,
        yaw_rate_settling: None,
    };

    let mut last_efforts = trim_efforts;
    for frame in 0..=frames {
        let t = frame as f64 * frame_dt;
        if !state.is_finite()
            || state.phi.abs() > crate::dynamics::DIVERGENCE_LIMIT
            || state.theta.abs() > crate::dynamics::DIVERGENCE_LIMIT
        {
            run.aborted_at = Some(t);
            break;
        }
        run.states.push(state);

        // Sense with the efforts currently applied (previous frame's output).
        let sample = imu.sample(&state, &last_efforts, params, t);
        let est = match feedback {
            FeedbackSource::Sensors => {
                let alpha = cfg.comp_filter_alpha;
                match accel_angles(&sample) {
                    Ok((roll_acc, pitch_acc)) => {
                        phi_hat =
                            complementary_step(phi_hat, sample.gyro[0], roll_acc, alpha, frame_dt);
                        theta_hat = complementary_step(
                            theta_hat,
                            sample.gyro[1],
                            pitch_acc,
                            alpha,
                            frame_dt,
                        );
                    }
                    Err(_) => {
                        // Free-fall frame: integrate gyro only.
                        phi_hat += sample.gyro[0] * frame_dt;
                        theta_hat += sample.gyro[1] * frame_dt;
                    }
                }
                EstimatedState {
                    phi_deg: phi_hat.to_degrees(),
                    theta_deg: theta_hat.to_degrees(),
                    p_dps: sample.gyro[0].to_degrees(),
                    q_dps: sample.gyro[1].to_degrees(),
                    r_dps: sample.gyro[2].to_degrees(),
                }
            }
            FeedbackSource::TrueState => {
                phi_hat = state.phi;
                theta_hat = state.theta;
                EstimatedState {
                    phi_deg: state.phi.to_degrees(),
                    theta_deg: state.theta.to_degrees(),
                    p_dps: state.p.to_degrees(),
                    q_dps: state.q.to_degrees(),
                    r_dps: state.r.to_degrees(),
                }
            }
        };

        let pilot = scenario.command(frame, cfg.hover_throttle());
        let (commanded, next_cascade) = cascade_step(cfg, params, &pilot, &est, &cascade, t);
        cascade = next_cascade;

        // Convert to rotor speeds; infeasible demands clamp at zero speed and
        // the ceiling clamps fast rotors. The plant sees the realizable
        // efforts, residual included.
        let (speeds, saturated) = saturating_unmix(&commanded, params);
        if saturated {
            run.saturation_events += 1;
        }
        let applied = mix_motors(&speeds, params);
        last_efforts = applied;

        let frame_pwm = crate::sensors::pwm_encode(&pilot);
        run.records.push(FlightLogRecord {
            t,
            pwm: [
                frame_pwm.throttle as f64,
                frame_pwm.roll as f64,
                frame_pwm.pitch as f64,
                frame_pwm.yaw as f64,
                frame_pwm.trigger as f64,
                frame_pwm.kill as f64,
            ],
            phi_deg: est.phi_deg,
            theta_deg: est.theta_deg,
            p_dps: est.p_dps,
            q_dps: est.q_dps,
            r_dps: est.r_dps,
            ax: sample.accel[0],
            ay: sample.accel[1],
            az: sample.accel[2],
            motor: motor_command_us(&speeds, params),
            u1: applied.u1,
            u2: applied.u2,
            u3: applied.u3,
            u4: applied.u4,
            trigger: pilot.trigger,
            kill: pilot.kill,
        });

        if frame == frames {
            break;
        }
        for _ in 0..substeps {
            state = match plant {
                PlantKind::Nonlinear => rk4_step(&state, &applied, params, sub_dt)?,
                PlantKind::Linear(model) => linear_step(model, &state, &applied, sub_dt),
            };
            if !state.is_finite() {
                break;
            }
        }
    }

    let times: Vec<f64> = run.records.iter().map(|r| r.t).collect();
    if run.aborted_at.is_none() {
        let roll: Vec<f64> = run.states.iter().map(|s| s.phi).collect();
        let pitch: Vec<f64> = run.states.iter().map(|s| s.theta).collect();
        let yaw_rate: Vec<f64> = run.states.iter().map(|s| s.r).collect();
        run.roll_settling = settling_time(&times, &roll, 0.02);
        run.pitch_settling = settling_time(&times, &pitch, 0.02);
        run.yaw_rate_settling = settling_time(&times, &yaw_rate, 0.02);
    }
    Ok(run)
}

/// Unmix with saturation handling: infeasible negative squared speeds clamp
/// to zero, over-speed rotors clamp to the ceiling. Returns the realizable
/// speeds and whether anything was clamped.
pub fn saturating_unmix(efforts: &ControlEfforts, params: &VehicleParams) -> (MotorSpeeds, bool) {
    match unmix_motors(efforts, params) {
        Ok(speeds) => speeds.clamp(params.omega_max),
        Err(DynamicsError::InfeasibleEffort { .. }) => {
            let lb = params.l * params.b;
            let a = efforts.u1 / params.b;
            let bb = efforts.u2 / lb;
            let c = efforts.u3 / lb;
            let dd = efforts.u4 / params.d;
            let squared = [
                (a - bb + c - dd) / 4.0,
                (a - bb - c + dd) / 4.0,
                (a + bb - c - dd) / 4.0,
                (a + bb + c + dd) / 4.0,
            ];
            let speeds = MotorSpeeds::from_array([
                squared[0].max(0.0).sqrt(),
                squared[1].max(0.0).sqrt(),
                squared[2].max(0.0).sqrt(),
                squared[3].max(0.0).sqrt(),
            ]);
            (speeds.clamp(params.omega_max).0, true)
        }
        Err(_) => (MotorSpeeds::uniform(0.0), true),
    }
}

/// Microsecond-equivalent motor commands: 1024 µs at zero speed, 2048 µs at
/// the ceiling.
fn motor_command_us(speeds: &MotorSpeeds, params: &VehicleParams) -> [f64; 4] {
    let map = |w: f64| 1024.0 + (w / params.omega_max).clamp(0.0, 1.0) * 1024.0;
    [
        map(speeds.omega1),
        map(speeds.omega2),
        map(speeds.omega3),
        map(speeds.omega4),
    ]
}

/// RK4 step of the hover-linear plant under constant efforts.
fn linear_step(
    model: &LinearModel,
    state: &BodyState,
    efforts: &ControlEfforts,
    dt: f64,
) -> BodyState {
    let trim = model.trim.1;
    let du = nalgebra::SVector::<f64, 4>::new(
        efforts.u1 - trim.u1,
        efforts.u2 - trim.u2,
        efforts.u3 - trim.u3,
        efforts.u4 - trim.u4,
    );
    let x = nalgebra::SVector::<f64, 12>::from_column_slice(&state.to_array());
    let f = |x: &nalgebra::SVector<f64, 12>| model.a * x + model.b * du;
    let k1 = f(&x);
    let k2 = f(&(x + k1 * (dt / 2.0)));
    let k3 = f(&(x + k2 * (dt / 2.0)));
    let k4 = f(&(x + k3 * dt));
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    let mut out = [0.0; 12];
    out.copy_from_slice(next.as_slice());
    BodyState::from_array(out)
}

/// First time after which |signal| stays below `frac` of its own peak.
/// Returns None when the signal never settles (or peaks at zero trivially
/// settles at t = 0).
pub fn settling_time(times: &[f64], signal: &[f64], frac: f64) -> Option<f64> {
    assert_eq!(times.len(), signal.len());
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Some(0.0);
    }
    let threshold = frac * peak;
    let mut last_outside = None;
    for (i, v) in signal.iter().enumerate() {
        if v.abs() > threshold {
            last_outside = Some(i);
        }
    }
    match last_outside {
        None => Some(0.0),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

/// Stability entry for one controller rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopRateEntry {
    pub rate_hz: f64,
    pub stable: bool,
    pub settling: Option<f64>,
    pub diverged: bool,
}

/// Run the standard roll-rate impulse at each controller rate on the
/// nonlinear plant and report stability/settling.
pub fn loop_rate_sweep(
    cfg: &CascadeConfig,
    params: &VehicleParams,
    rates_hz: &[f64],
) -> Result<Vec<LoopRateEntry>, ControlError> {
    let mut out = Vec::with_capacity(rates_hz.len());
    for rate in rates_hz {
        let mut c = *cfg;
        c.loop_rate_hz = *rate;
        let run = closed_loop_simulate(
            &PlantKind::Nonlinear,
            &c,
            params,
            &Scenario::RateImpulse {
                axis: Axis::Roll,
                magnitude_dps: 20.0,
            },
            8.0,
            &NoiseConfig::zero(),
            0,
            FeedbackSource::TrueState,
        )?;
        out.push(LoopRateEntry {
            rate_hz: *rate,
            stable: !run.diverged() && run.roll_settling.is_some(),
            settling: run.roll_settling,
            diverged: run.diverged(),
        });
    }
    Ok(out)
}

/// Continuous-time poles of the three attitude loops closed with the cascade
/// gains (ideal derivative term, the small-signal reduction of the discrete
/// loop). Useful for the linear stability property.
pub fn attitude_closed_loop_poles(cfg: &CascadeConfig, params: &VehicleParams) -> Vec<Complex<f64>> {
    let deg = 180.0 / std::f64::consts::PI;
    let mut poles = Vec::new();
    for inertia in [params.ixx, params.iyy] {
        // States [angle_deg, rate_dps]; ideal D folds into added inertia.
        let g = cfg.roll_pitch_effort_scale * deg / inertia;
        let denom = 1.0 + g * cfg.rate_gains.td;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                0.0,
                1.0,
                -g * cfg.rate_gains.kp * cfg.angle_gains.kp / denom,
                -g * cfg.rate_gains.kp / denom,
            ],
        );
        poles.extend(general_eigenvalues(&a));
    }
    // Yaw: states [rate_dps, integral]; r' = G(-Kp r + I), I' = -Ki r.
    let gy = cfg.yaw_effort_scale * deg / params.izz;
    let a = DMatrix::from_row_slice(
        2,
        2,
        &[
            -gy * cfg.yaw_rate_gains.kp,
            gy,
            -cfg.yaw_rate_gains.ki,
            0.0,
        ],
    );
    poles.extend(general_eigenvalues(&a));
    poles
}

/// Exact discrete-time transfer function of the noiseless closed roll loop
/// from pilot roll command [deg] to the logged complementary-filter estimate
/// [deg], evaluated at H(e^{jwT}) on a frequency grid [rad/s].
///
/// Assembles the small-signal pipeline exactly as the simulation executes it
/// each frame: the in-flight complementary update (accelerometer blind to
/// tilt, so the estimate is a washout of the true angle), the angle and rate
/// PIDs with the filtered measurement derivative, the effort scaling, and the
/// zero-order-hold double-integrator plant. States:
/// [phi, p, estimate memory, rate memory, derivative-filter memory].
pub fn roll_closed_loop_truth_frf(
    cfg: &CascadeConfig,
    params: &VehicleParams,
    freqs: &[f64],
) -> Vec<Complex<f64>> {
    let deg = 180.0 / std::f64::consts::PI;
    let g = cfg.roll_pitch_effort_scale * deg / params.ixx;
    let t = cfg.sample_time();
    let alpha = cfg.comp_filter_alpha;
    let kpa = cfg.angle_gains.kp;
    let kpr = cfg.rate_gains.kp;
    let td = cfg.rate_gains.td;
    let beta = if cfg.derivative_filter_tau > 0.0 {
        t / (cfg.derivative_filter_tau + t)
    } else {
        1.0
    };

    // Rate-loop output as a linear form over [phi, p, est_m, p_m, d_m] + delta.
    let out_p = -kpr * kpa * alpha * t - kpr - td * beta / t;
    let out_est = -kpr * kpa * alpha;
    let out_pm = td * beta / t;
    let out_dm = -td * (1.0 - beta);
    let out_delta = kpr * kpa;

    let mut a = DMatrix::<f64>::zeros(5, 5);
    // phi' = phi + T p + (G T^2 / 2) out
    a[(0, 0)] = 1.0;
    a[(0, 1)] = t + g * t * t / 2.0 * out_p;
    a[(0, 2)] = g * t * t / 2.0 * out_est;
    a[(0, 3)] = g * t * t / 2.0 * out_pm;
    a[(0, 4)] = g * t * t / 2.0 * out_dm;
    // p' = p + G T out
    a[(1, 1)] = 1.0 + g * t * out_p;
    a[(1, 2)] = g * t * out_est;
    a[(1, 3)] = g * t * out_pm;
    a[(1, 4)] = g * t * out_dm;
    // est_m' = alpha est_m + alpha T p
    a[(2, 1)] = alpha * t;
    a[(2, 2)] = alpha;
    // p_m' = p
    a[(3, 1)] = 1.0;
    // d_m' = (1-beta) d_m + beta (p - p_m)/T
    a[(4, 1)] = beta / t;
    a[(4, 3)] = -beta / t;
    a[(4, 4)] = 1.0 - beta;

    let mut b = DMatrix::<f64>::zeros(5, 1);
    b[(0, 0)] = g * t * t / 2.0 * out_delta;
    b[(1, 0)] = g * t * out_delta;

    // Logged estimate: y = alpha est_m + alpha T p (computed before the new
    // effort acts, so no direct feedthrough from delta).
    let c = [0.0, alpha * t, alpha, 0.0, 0.0];

    freqs
        .iter()
        .map(|w| {
            let z = Complex::new(0.0, w * t).exp();
            let mut zia = DMatrix::<Complex<f64>>::zeros(5, 5);
            for i in 0..5 {
                for j in 0..5 {
                    zia[(i, j)] = Complex::new(-a[(i, j)], 0.0);
                }
                zia[(i, i)] += z;
            }
            let rhs = DMatrix::<Complex<f64>>::from_fn(5, 1, |i, _| Complex::new(b[(i, 0)], 0.0));
            let x = zia
                .lu()
                .solve(&rhs)
                .expect("z I - A is invertible off the unit-circle poles");
            let mut y = Complex::new(0.0, 0.0);
            for i in 0..5 {
                y += Complex::new(c[i], 0.0) * x[(i, 0)];
            }
            y
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn default_setup() -> (CascadeConfig, VehicleParams) {
        (CascadeConfig::default(), VehicleParams::default())
    }

    #[test]
    fn proportional_only_step() {
        let state = PidState::new(0.01, -100.0, 100.0);
        let gains = PidGains {
            kp: 2.0,
            ki: 0.0,
            td: 0.0,
        };
        let (out, _) = pid_step(&state, &gains, 3.0, 0.0, 0.0);
        assert_eq!(out, 6.0);
    }

    #[test]
    fn integral_accumulates_ki_e_dt() {
        let mut state = PidState::new(0.01, -100.0, 100.0);
        let gains = PidGains {
            kp: 0.0,
            ki: 0.634,
            td: 0.0,
        };
        for k in 0..100 {
            let (_, next) = pid_step(&state, &gains, 1.0, 0.0, k as f64 * 0.01);
            state = next;
        }
        assert_relative_eq!(state.integral, 0.634, max_relative = 1e-12);
    }

    #[test]
    fn integral_clamps_and_reset_zeroes_it() {
        let mut state = PidState::new(0.01, -1.0, 1.0);
        let gains = PidGains {
            kp: 0.0,
            ki: 10.0,
            td: 0.0,
        };
        for k in 0..200 {
            let (out, next) = pid_step(&state, &gains, 50.0, 0.0, k as f64 * 0.01);
            assert!(out <= 1.0);
            state = next;
        }
        assert_eq!(state.integral, 1.0);
        let cleared = reset_integral(&state);
        assert_eq!(cleared.integral, 0.0);
        assert_eq!(cleared.prev_measurement, state.prev_measurement);
    }

    #[test]
    fn first_step_after_reset_is_pure_pd() {
        let mut state = PidState::new(0.01, -100.0, 100.0);
        let gains = PidGains {
            kp: 1.5,
            ki: 2.0,
            td: 0.1,
        };
        // Build up integral and measurement history.
        for k in 0..50 {
            let (_, next) = pid_step(&state, &gains, 1.0, 0.1 * k as f64, k as f64 * 0.01);
            state = next;
        }
        state = reset_integral(&state);
        let prev_meas = 0.1 * 49.0;
        let meas = 5.2;
        let (out, _) = pid_step(&state, &gains, 1.0, meas, 0.50);
        let expected = gains.kp * (1.0 - meas) - gains.td * (meas - prev_meas) / 0.01;
        assert_relative_eq!(out, expected, max_relative = 1e-12);
    }

    #[test]
    fn early_calls_return_previous_output() {
        let state = PidState::new(0.01, -10.0, 10.0);
        let gains = PidGains {
            kp: 1.0,
            ki: 0.0,
            td: 0.0,
        };
        let (out1, s1) = pid_step(&state, &gains, 2.0, 0.0, 0.0);
        let (out2, s2) = pid_step(&s1, &gains, 9.0, 0.0, 0.004);
        assert_eq!(out2, out1);
        assert_eq!(s1, s2);
        let (out3, _) = pid_step(&s2, &gains, 9.0, 0.0, 0.01);
        assert_eq!(out3, 9.0);
    }

    #[test]
    fn zero_gains_output_zero_forever() {
        let mut state = PidState::new(0.01, -10.0, 10.0);
        let gains = PidGains {
            kp: 0.0,
            ki: 0.0,
            td: 0.0,
        };
        for k in 0..100 {
            let (out, next) = pid_step(&state, &gains, (k as f64).sin(), k as f64, k as f64 * 0.01);
            assert_eq!(out, 0.0);
            state = next;
        }
    }

    #[test]
    fn reverse_negates_unclamped_output() {
        let gains = PidGains {
            kp: 1.2,
            ki: 0.8,
            td: 0.05,
        };
        let mut direct = PidState::new(0.01, -1e9, 1e9);
        let mut reverse = direct;
        reverse.direction = PidDirection::Reverse;
        for k in 0..50 {
            let t = k as f64 * 0.01;
            let sp = (0.3 * k as f64).sin();
            let meas = 0.5 * (0.2 * k as f64).cos();
            let (od, nd) = pid_step(&direct, &gains, sp, meas, t);
            let (orv, nr) = pid_step(&reverse, &gains, sp, meas, t);
            assert_relative_eq!(od, -orv, max_relative = 1e-12, epsilon = 1e-12);
            direct = nd;
            reverse = nr;
        }
    }

    #[test]
    fn setpoint_step_causes_no_derivative_kick() {
        // Derivative acts on the measurement only: jumping the setpoint
        // changes the output by exactly Kp·(setpoint change).
        let gains = PidGains {
            kp: 1.0,
            ki: 0.0,
            td: 0.5,
        };
        let mut state = PidState::new(0.01, -1e9, 1e9);
        let meas = 0.7;
        let mut last_out = 0.0;
        for k in 0..10 {
            let (out, next) = pid_step(&state, &gains, 1.0, meas, k as f64 * 0.01);
            state = next;
            last_out = out;
        }
        let (out_after_step, _) = pid_step(&state, &gains, 3.0, meas, 0.10);
        assert_relative_eq!(out_after_step - last_out, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn pid_off_freezes_output() {
        let gains = PidGains {
            kp: 2.0,
            ki: 1.0,
            td: 0.0,
        };
        let mut state = PidState::new(0.01, -10.0, 10.0);
        let (out1, s1) = pid_step(&state, &gains, 1.0, 0.0, 0.0);
        state = s1;
        state.mode = PidMode::Off;
        let (out2, s2) = pid_step(&state, &gains, 5.0, -3.0, 0.01);
        assert_eq!(out2, out1);
        assert_eq!(s2.integral, state.integral);
    }

    #[test]
    fn cascade_zero_state_zero_commands() {
        let (cfg, params) = default_setup();
        let pilot = PilotCommand {
            throttle: cfg.hover_throttle(),
            ..Default::default()
        };
        let (efforts, _) = cascade_step(
            &cfg,
            &params,
            &pilot,
            &EstimatedState::default(),
            &CascadeState::new(&cfg),
            0.0,
        );
        assert_eq!(efforts.u2, 0.0);
        assert_eq!(efforts.u3, 0.0);
        assert_eq!(efforts.u4, 0.0);
        assert_relative_eq!(efforts.u1, params.mass * params.g, max_relative = 1e-12);
    }

    #[test]
    fn cascade_two_stage_hand_evaluation() {
        // 10 deg roll error with zero rates: rate setpoint = 3.604·10 deg/s,
        // inner output = 0.2209·36.04, torque scaled by the effort constant.
        let (cfg, params) = default_setup();
        let pilot = PilotCommand {
            roll_deg: 10.0,
            throttle: cfg.hover_throttle(),
            ..Default::default()
        };
        let (efforts, _) = cascade_step(
            &cfg,
            &params,
            &pilot,
            &EstimatedState::default(),
            &CascadeState::new(&cfg),
            0.0,
        );
        let rate_sp = 3.604 * 10.0;
        assert_abs_diff_eq!(rate_sp, 36.04, epsilon = 1e-12);
        let inner = 0.2209 * rate_sp;
        assert_relative_eq!(
            efforts.u2,
            inner * cfg.roll_pitch_effort_scale,
            max_relative = 1e-12
        );
    }

    #[test]
    fn kill_switch_passes_pilot_through() {
        let (cfg, params) = default_setup();
        let pilot = PilotCommand {
            roll_deg: 12.0,
            pitch_deg: -7.0,
            yaw_rate_dps: 30.0,
            throttle: 0.4,
            kill: true,
            ..Default::default()
        };
        // Large estimated errors must not influence the output when killed.
        let est = EstimatedState {
            phi_deg: -40.0,
            theta_deg: 33.0,
            p_dps: 100.0,
            q_dps: -80.0,
            r_dps: 55.0,
        };
        let (efforts, _) = cascade_step(&cfg, &params, &pilot, &est, &CascadeState::new(&cfg), 0.0);
        assert_relative_eq!(efforts.u2, 12.0 * cfg.roll_pitch_effort_scale);
        assert_relative_eq!(efforts.u3, -7.0 * cfg.roll_pitch_effort_scale);
        assert_relative_eq!(efforts.u4, 30.0 * cfg.yaw_effort_scale);
        assert_relative_eq!(
            efforts.u1,
            0.4 * cfg.throttle_thrust_factor * params.mass * params.g
        );
    }

    #[test]
    fn attitude_closed_loop_poles_all_stable() {
        let (cfg, params) = default_setup();
        let poles = attitude_closed_loop_poles(&cfg, &params);
        assert_eq!(poles.len(), 6);
        for pole in poles {
            assert!(pole.re < 0.0, "pole {pole} not in the open left half plane");
        }
    }

    #[test]
    fn hover_hold_stays_put() {
        let (cfg, params) = default_setup();
        let run = closed_loop_simulate(
            &PlantKind::Nonlinear,
            &cfg,
            &params,
            &Scenario::HoverHold,
            2.0,
            &NoiseConfig::zero(),
            0,
            FeedbackSource::Sensors,
        )
        .unwrap();
        assert!(!run.diverged());
        for s in &run.states {
            assert!(s.max_abs() < 1e-6);
        }
    }

    #[test]
    fn linear_roll_rate_impulse_settles_within_a_second() {
        let (cfg, params) = default_setup();
        let (_, trim) = hover_trim(&params);
        let model =
            crate::linearization::linearize_at(&BodyState::default(), &trim, &params).unwrap();
        let run = closed_loop_simulate(
            &PlantKind::Linear(model),
            &cfg,
            &params,
            &Scenario::RateImpulse {
                axis: Axis::Roll,
                magnitude_dps: 20.0,
            },
            6.0,
            &NoiseConfig::zero(),
            0,
            FeedbackSource::TrueState,
        )
        .unwrap();
        let settle = run.roll_settling.expect("roll must settle");
        assert!(settle < 1.0, "settled in {settle} s");
    }

    #[test]
    fn nonlinear_five_degree_offset_recovers() {
        let (cfg, params) = default_setup();
        let run = closed_loop_simulate(
            &PlantKind::Nonlinear,
            &cfg,
            &params,
            &Scenario::AttitudeOffset {
                roll_deg: 5.0,
                pitch_deg: 0.0,
            },
            6.0,
            &NoiseConfig::zero(),
            0,
            FeedbackSource::TrueState,
        )
        .unwrap();
        assert!(!run.diverged());
        let settle = run.roll_settling.expect("roll must settle");
        assert!(settle < 1.5, "settled in {settle} s");
    }

    #[test]
    fn slow_loop_without_derivative_filter_fails() {
        let (mut cfg, params) = default_setup();
        cfg.loop_rate_hz = 20.0;
        cfg.derivative_filter_tau = 0.0;
        let run = closed_loop_simulate(
            &PlantKind::Nonlinear,
            &cfg,
            &params,
            &Scenario::RateImpulse {
                axis: Axis::Roll,
                magnitude_dps: 20.0,
            },
            6.0,
            &NoiseConfig::zero(),
            0,
            FeedbackSource::TrueState,
        )
        .unwrap();
        assert!(
            run.diverged() || run.roll_settling.is_none(),
            "20 Hz unfiltered-derivative loop unexpectedly stabilized"
        );
    }

    #[test]
    fn loop_rate_sweep_matches_reported_behavior() {
        let (cfg, params) = default_setup();
        let table = loop_rate_sweep(&cfg, &params, &[100.0, 20.0, 1000.0]).unwrap();
        let at100 = &table[0];
        let at20 = &table[1];
        let at1000 = &table[2];
        assert!(at100.stable, "100 Hz loop must be stable");
        let base = at100.settling.unwrap();
        let degraded = match (at20.diverged, at20.settling) {
            (true, _) => true,
            (false, None) => true,
            (false, Some(s)) => s > 3.0 * base,
        };
        assert!(degraded, "20 Hz loop not degraded: {at20:?}");
        assert!(at1000.stable);
        let fast = at1000.settling.unwrap();
        assert!(
            (fast - base).abs() <= 0.10 * base,
            "1 kHz settling {fast} vs 100 Hz {base}"
        );
    }

    #[test]
    fn identical_scenarios_identical_trajectories() {
        let (cfg, params) = default_setup();
        let scenario = Scenario::RateImpulse {
            axis: Axis::Roll,
            magnitude_dps: 25.0,
        };
        let run = |seed| {
            closed_loop_simulate(
                &PlantKind::Nonlinear,
                &cfg,
                &params,
                &scenario,
                3.0,
                &NoiseConfig::default(),
                seed,
                FeedbackSource::Sensors,
            )
            .unwrap()
        };
        let a = run(5);
        let b = run(5);
        for (sa, sb) in a.states.iter().zip(b.states.iter()) {
            assert_eq!(sa.to_array(), sb.to_array());
        }
    }
}
