//! Nonlinear 6-DOF quadcopter rigid-body dynamics.
//!
//! The model is an X-frame quadcopter with rotors numbered front-right (1),
//! rear-right (2), rear-left (3), front-left (4). Rotors 1 and 3 spin
//! clockwise, 2 and 4 counter-clockwise. Body axes: x forward, y left,
//! z up; inertial frame z up, so gravity is (0, 0, -g).
//!
//! Generalized inputs are vertical thrust U1 [N], roll/pitch/yaw torques
//! U2..U4 [N·m], and a residual rotor-speed term that drives the gyroscopic
//! coupling. The map between squared rotor speeds and those inputs is linear
//! and exactly invertible on the feasible set.

use std::fmt;

/// Margin [rad] kept from the Euler kinematics singularity at |theta| = pi/2.
pub const SINGULARITY_MARGIN: f64 = 1e-6;

/// Pitch/roll magnitude [rad] beyond which a simulation counts as crashed.
/// 89 deg, just inside the kinematic singularity.
pub const DIVERGENCE_LIMIT: f64 = 89.0 * std::f64::consts::PI / 180.0;

/// Largest RK4 step [s] accepted by `integrate_step`.
pub const MAX_STEP: f64 = 0.05;

/// Cap on `duration / dt` for a single simulation run.
pub const MAX_SAMPLES: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsError {
    /// A vehicle parameter violates its positivity constraint.
    InvalidParams(String),
    /// |theta| too close to +-90 deg for the Euler-rate kinematics.
    SingularAttitude { theta: f64 },
    /// The requested efforts demand a negative squared rotor speed.
    InfeasibleEffort { rotor: usize, omega_sq: f64 },
    /// Attitude exceeded `DIVERGENCE_LIMIT` during a run; `t` is the crash time [s].
    AttitudeDiverged { t: f64 },
    /// Integration step outside (0, MAX_STEP].
    StepTooLarge { dt: f64 },
    /// A state component is NaN or infinite.
    NonFiniteState,
    /// duration / dt exceeds MAX_SAMPLES.
    TooManySamples,
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::InvalidParams(msg) => write!(f, "invalid vehicle parameters: {msg}"),
            DynamicsError::SingularAttitude { theta } => {
                write!(f, "attitude singular: |theta| = {:.4} rad too close to pi/2", theta.abs())
            }
            DynamicsError::InfeasibleEffort { rotor, omega_sq } => write!(
                f,
                "infeasible effort: rotor {rotor} requires omega^2 = {omega_sq:.6} < 0"
            ),
            DynamicsError::AttitudeDiverged { t } => {
                write!(f, "attitude diverged (crash) at t = {t:.3} s")
            }
            DynamicsError::StepTooLarge { dt } => {
                write!(f, "step dt = {dt} s outside (0, {MAX_STEP}]")
            }
            DynamicsError::NonFiniteState => write!(f, "state contains a non-finite component"),
            DynamicsError::TooManySamples => write!(f, "run exceeds {MAX_SAMPLES} samples"),
        }
    }
}

impl std::error::Error for DynamicsError {}

/// Physical vehicle parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Mass [kg].
    pub mass: f64,
    /// Moment of inertia about body x [kg·m²].
    pub ixx: f64,
    /// Moment of inertia about body y [kg·m²].
    pub iyy: f64,
    /// Moment of inertia about body z [kg·m²].
    pub izz: f64,
    /// Rotor/propeller polar moment of inertia [kg·m²].
    pub jtp: f64,
    /// Thrust factor [N·s²/rad²]: thrust per rotor = b·omega².
    pub b: f64,
    /// Drag factor [N·m·s²/rad²]: rotor torque = d·omega².
    pub d: f64,
    /// Arm length [m].
    pub l: f64,
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Rotor speed ceiling [rad/s].
    pub omega_max: f64,
    /// Keep the thrust factor b inside the residual rotor-speed term.
    /// Dimensionally unusual but reproduced as printed; at hover the
    /// residual is zero either way.
    pub omega_residual_includes_b: bool,
    /// Use the printed (negative) sign on the pitch gyroscopic term
    /// instead of the standard positive one.
    pub pitch_gyro_sign_printed: bool,
}

impl Default for VehicleParams {
    /// Nominal platform parameters. Arm length is 8.25 in = 0.2096 m
    /// (the raw value 8.25 is a unit typo for a 550-class frame).
    fn default() -> Self {
        VehicleParams {
            mass: 1.8,
            ixx: 7.06e-3,
            iyy: 7.06e-3,
            izz: 7.865e-3,
            jtp: 1.42e-3,
            b: 4.5e-4,
            d: 1.8e-5,
            l: 0.2096,
            g: 9.81,
            // 2x hover speed for the nominal platform.
            omega_max: 2.0 * (1.8f64 * 9.81 / (4.0 * 4.5e-4)).sqrt(),
            omega_residual_includes_b: true,
            pitch_gyro_sign_printed: false,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let checks = [
            (self.mass, "mass"),
            (self.ixx, "ixx"),
            (self.iyy, "iyy"),
            (self.izz, "izz"),
            (self.jtp, "jtp"),
            (self.b, "b"),
            (self.d, "d"),
            (self.l, "l"),
            (self.g, "g"),
            (self.omega_max, "omega_max"),
        ];
        for (value, name) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(DynamicsError::InvalidParams(format!(
                    "{name} = {value} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }

    /// The airframe is assumed symmetric about x and y; returns a warning
    /// string when ixx != iyy instead of erroring.
    pub fn symmetry_warning(&self) -> Option<String> {
        if (self.ixx - self.iyy).abs() > 1e-12 * self.ixx.max(self.iyy) {
            Some(format!(
                "asymmetric airframe: ixx = {} != iyy = {}",
                self.ixx, self.iyy
            ))
        } else {
            None
        }
    }

    /// Hover rotor speed [rad/s]: sqrt(m·g / (4·b)).
    pub fn hover_speed(&self) -> f64 {
        (self.mass * self.g / (4.0 * self.b)).sqrt()
    }

    /// Hover thrust [N]: m·g.
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.g
    }
}

/// 12-dimensional rigid-body state.
///
/// `u, v, w` are body-axis velocities [m/s], `p, q, r` body rates [rad/s],
/// `x, y, z` inertial position [m], `phi, theta, psi` ZYX Euler angles [rad].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl BodyState {
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.u, self.v, self.w, self.p, self.q, self.r, self.x, self.y, self.z, self.phi,
            self.theta, self.psi,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        BodyState {
            u: a[0],
            v: a[1],
            w: a[2],
            p: a[3],
            q: a[4],
            r: a[5],
            x: a[6],
            y: a[7],
            z: a[8],
            phi: a[9],
            theta: a[10],
            psi: a[11],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Largest absolute component, used for trim-deviation checks.
    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Rotor angular speeds [rad/s], numbered per the X-frame layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorSpeeds {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
}

impl MotorSpeeds {
    pub fn uniform(omega: f64) -> Self {
        MotorSpeeds {
            omega1: omega,
            omega2: omega,
            omega3: omega,
            omega4: omega,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.omega1, self.omega2, self.omega3, self.omega4]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        MotorSpeeds {
            omega1: a[0],
            omega2: a[1],
            omega3: a[2],
            omega4: a[3],
        }
    }

    /// Clamp every rotor into [0, omega_max]; the second return is true when
    /// any rotor was clamped at the ceiling.
    pub fn clamp(&self, omega_max: f64) -> (MotorSpeeds, bool) {
        let mut saturated = false;
        let mut out = [0.0; 4];
        for (i, w) in self.to_array().into_iter().enumerate() {
            if w > omega_max {
                saturated = true;
                out[i] = omega_max;
            } else {
                out[i] = w.max(0.0);
            }
        }
        (MotorSpeeds::from_array(out), saturated)
    }
}

/// Generalized control inputs: thrust [N], body torques [N·m], and the
/// residual rotor-speed term feeding the gyroscopic coupling.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlEfforts {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
    pub omega_res: f64,
}

impl ControlEfforts {
    pub fn thrust_only(u1: f64) -> Self {
        ControlEfforts {
            u1,
            ..Default::default()
        }
    }
}

/// Map rotor speeds to generalized efforts.
///
/// U1 = b(O1² + O2² + O3² + O4²)
/// U2 = l·b(-O1² - O2² + O3² + O4²)
/// U3 = l·b(O1² - O2² - O3² + O4²)
/// U4 = d(-O1² + O2² - O3² + O4²)
/// residual = b(O1 - O2 + O3 - O4), the b factor dropping when
/// `omega_residual_includes_b` is cleared.
pub fn mix_motors(speeds: &MotorSpeeds, params: &VehicleParams) -> ControlEfforts {
    let s1 = speeds.omega1 * speeds.omega1;
    let s2 = speeds.omega2 * speeds.omega2;
    let s3 = speeds.omega3 * speeds.omega3;
    let s4 = speeds.omega4 * speeds.omega4;
    let lb = params.l * params.b;
    let res = speeds.omega1 - speeds.omega2 + speeds.omega3 - speeds.omega4;
    ControlEfforts {
        u1: params.b * (s1 + s2 + s3 + s4),
        u2: lb * (-s1 - s2 + s3 + s4),
        u3: lb * (s1 - s2 - s3 + s4),
        u4: params.d * (-s1 + s2 - s3 + s4),
        omega_res: if params.omega_residual_includes_b {
            params.b * res
        } else {
            res
        },
    }
}

/// Invert `mix_motors`: solve the 4x4 linear system in squared speeds.
///
/// The mixing matrix M has orthogonal rows with M·Mᵀ = 4I, so the inverse is
/// Mᵀ/4. Squared speeds within -1e-12 of zero are snapped to zero; anything
/// more negative is infeasible. Speeds above `omega_max` are returned as-is;
/// callers decide whether to clamp (see `MotorSpeeds::clamp`).
pub fn unmix_motors(
    efforts: &ControlEfforts,
    params: &VehicleParams,
) -> Result<MotorSpeeds, DynamicsError> {
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
    let mut out = [0.0; 4];
    for (i, s) in squared.into_iter().enumerate() {
        if s < -1e-12 * a.abs().max(1.0) {
            return Err(DynamicsError::InfeasibleEffort {
                rotor: i + 1,
                omega_sq: s,
            });
        }
        out[i] = s.max(0.0).sqrt();
    }
    Ok(MotorSpeeds::from_array(out))
}

/// Time derivative of the 12-state vector under the given efforts.
///
/// Force rows:
///   u' = (v·r - w·q) + g·sin(theta)
///   v' = (w·p - u·r) - g·cos(theta)·sin(phi)
///   w' = (u·q - v·p) - g·cos(theta)·cos(phi) + U1/m
/// Moment rows:
///   p' = ((Iyy - Izz)/Ixx)·q·r - (Jtp/Ixx)·q·res + U2/Ixx
///   q' = ((Izz - Ixx)/Iyy)·p·r + (Jtp/Iyy)·p·res + U3/Iyy
///   r' = ((Ixx - Iyy)/Izz)·p·q + U4/Izz
/// plus the Euler-rate and body-to-inertial kinematics. The returned
/// `BodyState` holds the derivative of each component.
pub fn eom_derivative(
    state: &BodyState,
    efforts: &ControlEfforts,
    params: &VehicleParams,
) -> Result<BodyState, DynamicsError> {
    if !state.is_finite() {
        return Err(DynamicsError::NonFiniteState);
    }
    if state.theta.abs() >= std::f64::consts::FRAC_PI_2 - SINGULARITY_MARGIN {
        return Err(DynamicsError::SingularAttitude { theta: state.theta });
    }

    let (u, v, w) = (state.u, state.v, state.w);
    let (p, q, r) = (state.p, state.q, state.r);
    let (sphi, cphi) = state.phi.sin_cos();
    let (sth, cth) = state.theta.sin_cos();
    let (spsi, cpsi) = state.psi.sin_cos();
    let tth = sth / cth;
    let g = params.g;
    let res = efforts.omega_res;

    let du = (v * r - w * q) + g * sth;
    let dv = (w * p - u * r) - g * cth * sphi;
    let dw = (u * q - v * p) - g * cth * cphi + efforts.u1 / params.mass;

    let pitch_gyro = if params.pitch_gyro_sign_printed { -1.0 } else { 1.0 };
    let dp = (params.iyy - params.izz) / params.ixx * q * r
        - params.jtp / params.ixx * q * res
        + efforts.u2 / params.ixx;
    let dq = (params.izz - params.ixx) / params.iyy * p * r
        + pitch_gyro * params.jtp / params.iyy * p * res
        + efforts.u3 / params.iyy;
    let dr = (params.ixx - params.iyy) / params.izz * p * q + efforts.u4 / params.izz;

    let dphi = p + q * sphi * tth + r * cphi * tth;
    let dtheta = q * cphi - r * sphi;
    let dpsi = (q * sphi + r * cphi) / cth;

    let dx = u * cth * cpsi + v * (sphi * sth * cpsi - cphi * spsi)
        + w * (cphi * sth * cpsi + sphi * spsi);
    let dy = u * cth * spsi + v * (sphi * sth * spsi + cphi * cpsi)
        + w * (cphi * sth * spsi - sphi * cpsi);
    let dz = -u * sth + v * sphi * cth + w * cphi * cth;

    Ok(BodyState {
        u: du,
        v: dv,
        w: dw,
        p: dp,
        q: dq,
        r: dr,
        x: dx,
        y: dy,
        z: dz,
        phi: dphi,
        theta: dtheta,
        psi: dpsi,
    })
}

/// Hover equilibrium: equal rotor speeds sqrt(m·g/(4·b)) and efforts
/// (m·g, 0, 0, 0) with zero residual.
pub fn hover_trim(params: &VehicleParams) -> (MotorSpeeds, ControlEfforts) {
    let speeds = MotorSpeeds::uniform(params.hover_speed());
    let efforts = ControlEfforts::thrust_only(params.hover_thrust());
    (speeds, efforts)
}

/// One classical RK4 step of the equations of motion with rotor speeds held
/// constant over the step.
pub fn integrate_step(
    state: &BodyState,
    speeds: &MotorSpeeds,
    params: &VehicleParams,
    dt: f64,
) -> Result<BodyState, DynamicsError> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(DynamicsError::StepTooLarge { dt });
    }
    let efforts = mix_motors(speeds, params);
    rk4_step(state, &efforts, params, dt)
}

/// RK4 step with efforts held constant (zero-order hold) over the step.
pub fn rk4_step(
    state: &BodyState,
    efforts: &ControlEfforts,
    params: &VehicleParams,
    dt: f64,
) -> Result<BodyState, DynamicsError> {
    let x0 = state.to_array();
    let k1 = eom_derivative(state, efforts, params)?.to_array();
    let k2 = eom_derivative(&shifted(&x0, &k1, dt / 2.0), efforts, params)?.to_array();
    let k3 = eom_derivative(&shifted(&x0, &k2, dt / 2.0), efforts, params)?.to_array();
    let k4 = eom_derivative(&shifted(&x0, &k3, dt), efforts, params)?.to_array();
    let mut next = [0.0; 12];
    for i in 0..12 {
        next[i] = x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(BodyState::from_array(next))
}

fn shifted(base: &[f64; 12], deriv: &[f64; 12], h: f64) -> BodyState {
    let mut out = [0.0; 12];
    for i in 0..12 {
        out[i] = base[i] + h * deriv[i];
    }
    BodyState::from_array(out)
}

/// One sampled point of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: BodyState,
    pub speeds: MotorSpeeds,
    pub efforts: ControlEfforts,
}

/// Fixed-step trajectory. `aborted_at` carries the crash time when the run
/// tripped the attitude divergence limit before `duration`.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub aborted_at: Option<f64>,
}

impl Trajectory {
    pub fn into_result(self) -> Result<Trajectory, DynamicsError> {
        match self.aborted_at {
            Some(t) => Err(DynamicsError::AttitudeDiverged { t }),
            None => Ok(self),
        }
    }
}

/// Open-loop fixed-step simulation; `command` yields the rotor speeds for
/// each frame. Bit-identical output for identical inputs.
pub fn simulate<F>(
    initial: &BodyState,
    mut command: F,
    params: &VehicleParams,
    dt: f64,
    duration: f64,
) -> Result<Trajectory, DynamicsError>
where
    F: FnMut(f64, &BodyState) -> MotorSpeeds,
{
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(DynamicsError::StepTooLarge { dt });
    }
    let steps = (duration / dt).round() as usize;
    if steps > MAX_SAMPLES {
        return Err(DynamicsError::TooManySamples);
    }
    let mut traj = Trajectory {
        points: Vec::with_capacity(steps + 1),
        aborted_at: None,
    };
    let mut state = *initial;
    for k in 0..=steps {
        let t = k as f64 * dt;
        if state.phi.abs() > DIVERGENCE_LIMIT || state.theta.abs() > DIVERGENCE_LIMIT {
            traj.aborted_at = Some(t);
            return Ok(traj);
        }
        let speeds = command(t, &state);
        let efforts = mix_motors(&speeds, params);
        traj.points.push(TrajectoryPoint {
            t,
            state,
            speeds,
            efforts,
        });
        if k < steps {
            state = match rk4_step(&state, &efforts, params, dt) {
                Ok(s) => s,
                Err(DynamicsError::SingularAttitude { .. }) => {
                    traj.aborted_at = Some(t);
                    return Ok(traj);
                }
                Err(e) => return Err(e),
            };
        }
    }
    Ok(traj)
}
