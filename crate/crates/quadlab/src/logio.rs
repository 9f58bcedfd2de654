//! Flight-log CSV format and the flat key-value workbench config.
//!
//! Both formats carry the `quadlab-v1` version tag. Logs are one record per
//! control frame with a fixed column order; numeric fields print with six
//! significant digits, which is the round-trip precision contract.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::control::CascadeConfig;
use crate::dynamics::VehicleParams;
use crate::excitation::ChirpSpec;
use crate::sensors::{FilterConfig, FilterKind, NoiseConfig};

pub const FORMAT_TAG: &str = "quadlab-v1";

#[derive(Debug, Clone, PartialEq)]
pub enum LogError {
    /// Row failed to parse; carries the 1-based line number.
    MalformedRow { line: usize, reason: String },
    /// File header/column row does not match the format.
    HeaderMismatch { found: String },
    /// Config key is not part of the schema.
    UnknownKey { key: String },
    /// Config value failed to parse or violates an invariant.
    TypeMismatch { key: String, value: String, reason: String },
    /// A required key is absent.
    MissingRequired { key: String },
    Io(String),
}

impl fmt::Display for LogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogError::MalformedRow { line, reason } => {
                write!(f, "malformed row at line {line}: {reason}")
            }
            LogError::HeaderMismatch { found } => write!(f, "header mismatch: found '{found}'"),
            LogError::UnknownKey { key } => write!(f, "unknown config key '{key}'"),
            LogError::TypeMismatch { key, value, reason } => {
                write!(f, "bad value for '{key}' = '{value}': {reason}")
            }
            LogError::MissingRequired { key } => write!(f, "missing required key '{key}'"),
            LogError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for LogError {}

impl From<std::io::Error> for LogError {
    fn from(e: std::io::Error) -> Self {
        LogError::Io(e.to_string())
    }
}

/// One logged control frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlightLogRecord {
    /// Frame time [s]; strictly increasing across a log.
    pub t: f64,
    /// Receiver channels [µs]: throttle, roll, pitch, yaw, trigger, kill.
    pub pwm: [f64; 6],
    /// Filtered attitude [deg].
    pub phi_deg: f64,
    pub theta_deg: f64,
    /// Body rates [deg/s].
    pub p_dps: f64,
    pub q_dps: f64,
    pub r_dps: f64,
    /// Accelerometer [m/s²].
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    /// Motor commands [µs-equivalent].
    pub motor: [f64; 4],
    /// Generalized efforts applied this frame.
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
    pub trigger: bool,
    pub kill: bool,
}

const LOG_COLUMNS: &str = "t,pwm1,pwm2,pwm3,pwm4,pwm5,pwm6,phi,theta,p,q,r,ax,ay,az,\
motor1,motor2,motor3,motor4,u1,u2,u3,u4,trigger,kill";

/// Print a value with six significant digits (the log precision contract).
fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format!("{v:.5e}");
    // Parse/re-print keeps "1.23000e2"-style output compact but exact at
    // six significant digits.
    s
}

pub fn records_to_string(records: &[FlightLogRecord]) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_TAG);
    out.push_str(" flight-log\n");
    out.push_str(LOG_COLUMNS);
    out.push('\n');
    for r in records {
        let mut fields: Vec<String> = Vec::with_capacity(25);
        fields.push(fmt_sig(r.t));
        for c in r.pwm {
            fields.push(fmt_sig(c));
        }
        for v in [r.phi_deg, r.theta_deg, r.p_dps, r.q_dps, r.r_dps, r.ax, r.ay, r.az] {
            fields.push(fmt_sig(v));
        }
        for m in r.motor {
            fields.push(fmt_sig(m));
        }
        for v in [r.u1, r.u2, r.u3, r.u4] {
            fields.push(fmt_sig(v));
        }
        fields.push(if r.trigger { "1" } else { "0" }.to_string());
        fields.push(if r.kill { "1" } else { "0" }.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn records_from_string(text: &str) -> Result<Vec<FlightLogRecord>, LogError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| LogError::HeaderMismatch {
        found: String::new(),
    })?;
    if first.trim() != format!("{FORMAT_TAG} flight-log") {
        return Err(LogError::HeaderMismatch {
            found: first.to_string(),
        });
    }
    let (_, columns) = lines.next().ok_or_else(|| LogError::HeaderMismatch {
        found: first.to_string(),
    })?;
    if columns.trim() != LOG_COLUMNS {
        return Err(LogError::HeaderMismatch {
            found: columns.to_string(),
        });
    }
    let mut records = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 25 {
            return Err(LogError::MalformedRow {
                line: line_no,
                reason: format!("expected 25 fields, found {}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64, LogError> {
            fields[i].parse::<f64>().map_err(|e| LogError::MalformedRow {
                line: line_no,
                reason: format!("field {i}: {e}"),
            })
        };
        let flag = |i: usize| -> Result<bool, LogError> {
            match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(LogError::MalformedRow {
                    line: line_no,
                    reason: format!("field {i}: flag must be 0/1, got '{other}'"),
                }),
            }
        };
        let r = FlightLogRecord {
            t: num(0)?,
            pwm: [num(1)?, num(2)?, num(3)?, num(4)?, num(5)?, num(6)?],
            phi_deg: num(7)?,
            theta_deg: num(8)?,
            p_dps: num(9)?,
            q_dps: num(10)?,
            r_dps: num(11)?,
            ax: num(12)?,
            ay: num(13)?,
            az: num(14)?,
            motor: [num(15)?, num(16)?, num(17)?, num(18)?],
            u1: num(19)?,
            u2: num(20)?,
            u3: num(21)?,
            u4: num(22)?,
            trigger: flag(23)?,
            kill: flag(24)?,
        };
        if r.t <= last_t {
            return Err(LogError::MalformedRow {
                line: line_no,
                reason: format!("time {} not strictly increasing", r.t),
            });
        }
        last_t = r.t;
        records.push(r);
    }
    Ok(records)
}

/// Write a flight log atomically (write to a temp file, then rename).
pub fn write_log(path: &Path, records: &[FlightLogRecord]) -> Result<(), LogError> {
    atomic_write(path, records_to_string(records).as_bytes())
}

pub fn read_log(path: &Path) -> Result<Vec<FlightLogRecord>, LogError> {
    records_from_string(&fs::read_to_string(path)?)
}

/// Write bytes to `path` via a temporary sibling and rename, so readers never
/// observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), LogError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Everything a workbench run needs: vehicle parameters, controller gains,
/// filter and noise settings, and the sweep spec.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkbenchConfig {
    pub vehicle: VehicleParams,
    pub cascade: CascadeConfig,
    pub filter: FilterConfig,
    pub noise: NoiseConfig,
    pub chirp: ChirpSpec,
    pub seed: u64,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        WorkbenchConfig {
            vehicle: VehicleParams::default(),
            cascade: CascadeConfig::default(),
            filter: FilterConfig::default(),
            noise: NoiseConfig::zero(),
            chirp: ChirpSpec::default(),
            seed: 0,
        }
    }
}

macro_rules! config_keys {
    ($(($key:literal, $get:expr, $set:expr)),+ $(,)?) => {
        const KEY_COUNT: usize = [$($key),+].len();
        fn key_names() -> [&'static str; KEY_COUNT] { [$($key),+] }
        fn get_key(cfg: &WorkbenchConfig, key: &str) -> Option<String> {
            match key {
                $($key => {
                    let get: fn(&WorkbenchConfig) -> String = $get;
                    Some(get(cfg))
                })+
                _ => None,
            }
        }
        fn set_key(cfg: &mut WorkbenchConfig, key: &str, raw: &str) -> Result<bool, String> {
            match key {
                $($key => {
                    let set: fn(&mut WorkbenchConfig, &str) -> Result<(), String> = $set;
                    set(cfg, raw)?;
                    Ok(true)
                })+
                _ => Ok(false),
            }
        }
    };
}

fn parse_f64(raw: &str) -> Result<f64, String> {
    raw.parse::<f64>().map_err(|e| e.to_string())
}

fn parse_bool(raw: &str) -> Result<bool, String> {
    match raw {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err("expected true/false".into()),
    }
}

fn parse_u64(raw: &str) -> Result<u64, String> {
    raw.parse::<u64>().map_err(|e| e.to_string())
}

config_keys![
    ("vehicle.mass", |c: &WorkbenchConfig| c.vehicle.mass.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.mass = parse_f64(r)?; Ok(()) }),
    ("vehicle.ixx", |c: &WorkbenchConfig| c.vehicle.ixx.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.ixx = parse_f64(r)?; Ok(()) }),
    ("vehicle.iyy", |c: &WorkbenchConfig| c.vehicle.iyy.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.iyy = parse_f64(r)?; Ok(()) }),
    ("vehicle.izz", |c: &WorkbenchConfig| c.vehicle.izz.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.izz = parse_f64(r)?; Ok(()) }),
    ("vehicle.jtp", |c: &WorkbenchConfig| c.vehicle.jtp.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.jtp = parse_f64(r)?; Ok(()) }),
    ("vehicle.b", |c: &WorkbenchConfig| c.vehicle.b.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.b = parse_f64(r)?; Ok(()) }),
    ("vehicle.d", |c: &WorkbenchConfig| c.vehicle.d.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.d = parse_f64(r)?; Ok(()) }),
    ("vehicle.l", |c: &WorkbenchConfig| c.vehicle.l.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.l = parse_f64(r)?; Ok(()) }),
    ("vehicle.g", |c: &WorkbenchConfig| c.vehicle.g.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.g = parse_f64(r)?; Ok(()) }),
    ("vehicle.omega_max", |c: &WorkbenchConfig| c.vehicle.omega_max.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.omega_max = parse_f64(r)?; Ok(()) }),
    ("vehicle.omega_residual_includes_b",
        |c: &WorkbenchConfig| c.vehicle.omega_residual_includes_b.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.omega_residual_includes_b = parse_bool(r)?; Ok(()) }),
    ("vehicle.pitch_gyro_sign_printed",
        |c: &WorkbenchConfig| c.vehicle.pitch_gyro_sign_printed.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.vehicle.pitch_gyro_sign_printed = parse_bool(r)?; Ok(()) }),
    ("pid.angle.kp", |c: &WorkbenchConfig| c.cascade.angle_gains.kp.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.angle_gains.kp = parse_f64(r)?; Ok(()) }),
    ("pid.angle.ki", |c: &WorkbenchConfig| c.cascade.angle_gains.ki.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.angle_gains.ki = parse_f64(r)?; Ok(()) }),
    ("pid.angle.td", |c: &WorkbenchConfig| c.cascade.angle_gains.td.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.angle_gains.td = parse_f64(r)?; Ok(()) }),
    ("pid.rate.kp", |c: &WorkbenchConfig| c.cascade.rate_gains.kp.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.rate_gains.kp = parse_f64(r)?; Ok(()) }),
    ("pid.rate.ki", |c: &WorkbenchConfig| c.cascade.rate_gains.ki.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.rate_gains.ki = parse_f64(r)?; Ok(()) }),
    ("pid.rate.td", |c: &WorkbenchConfig| c.cascade.rate_gains.td.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.rate_gains.td = parse_f64(r)?; Ok(()) }),
    ("pid.yaw_rate.kp", |c: &WorkbenchConfig| c.cascade.yaw_rate_gains.kp.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.yaw_rate_gains.kp = parse_f64(r)?; Ok(()) }),
    ("pid.yaw_rate.ki", |c: &WorkbenchConfig| c.cascade.yaw_rate_gains.ki.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.yaw_rate_gains.ki = parse_f64(r)?; Ok(()) }),
    ("pid.yaw_rate.td", |c: &WorkbenchConfig| c.cascade.yaw_rate_gains.td.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.yaw_rate_gains.td = parse_f64(r)?; Ok(()) }),
    ("loop.rate_hz", |c: &WorkbenchConfig| c.cascade.loop_rate_hz.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.loop_rate_hz = parse_f64(r)?; Ok(()) }),
    ("loop.rate_cmd_limit_dps", |c: &WorkbenchConfig| c.cascade.rate_cmd_limit_dps.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.rate_cmd_limit_dps = parse_f64(r)?; Ok(()) }),
    ("loop.effort_cmd_limit", |c: &WorkbenchConfig| c.cascade.effort_cmd_limit.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.effort_cmd_limit = parse_f64(r)?; Ok(()) }),
    ("loop.roll_pitch_effort_scale", |c: &WorkbenchConfig| c.cascade.roll_pitch_effort_scale.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.roll_pitch_effort_scale = parse_f64(r)?; Ok(()) }),
    ("loop.yaw_effort_scale", |c: &WorkbenchConfig| c.cascade.yaw_effort_scale.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.yaw_effort_scale = parse_f64(r)?; Ok(()) }),
    ("loop.throttle_thrust_factor", |c: &WorkbenchConfig| c.cascade.throttle_thrust_factor.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.throttle_thrust_factor = parse_f64(r)?; Ok(()) }),
    ("loop.derivative_filter_tau", |c: &WorkbenchConfig| c.cascade.derivative_filter_tau.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.derivative_filter_tau = parse_f64(r)?; Ok(()) }),
    ("loop.negate_derivative", |c: &WorkbenchConfig| c.cascade.negate_derivative.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.negate_derivative = parse_bool(r)?; Ok(()) }),
    ("loop.comp_filter_alpha", |c: &WorkbenchConfig| c.cascade.comp_filter_alpha.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.cascade.comp_filter_alpha = parse_f64(r)?; Ok(()) }),
    ("filter.kind", |c: &WorkbenchConfig| filter_kind_name(c.filter.kind).to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.filter.kind = filter_kind_parse(r)?; Ok(()) }),
    ("filter.alpha", |c: &WorkbenchConfig| c.filter.alpha.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.filter.alpha = parse_f64(r)?; Ok(()) }),
    ("filter.cutoff_hz", |c: &WorkbenchConfig| c.filter.cutoff_hz.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.filter.cutoff_hz = parse_f64(r)?; Ok(()) }),
    ("filter.ripple_db", |c: &WorkbenchConfig| c.filter.ripple_db.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.filter.ripple_db = parse_f64(r)?; Ok(()) }),
    ("filter.sample_rate_hz", |c: &WorkbenchConfig| c.filter.sample_rate_hz.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.filter.sample_rate_hz = parse_f64(r)?; Ok(()) }),
    ("noise.accel_sigma", |c: &WorkbenchConfig| c.noise.accel_sigma.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.noise.accel_sigma = parse_f64(r)?; Ok(()) }),
    ("noise.gyro_sigma", |c: &WorkbenchConfig| c.noise.gyro_sigma.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.noise.gyro_sigma = parse_f64(r)?; Ok(()) }),
    ("noise.gyro_bias_sigma", |c: &WorkbenchConfig| c.noise.gyro_bias_sigma.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.noise.gyro_bias_sigma = parse_f64(r)?; Ok(()) }),
    ("noise.gyro_bias_walk", |c: &WorkbenchConfig| c.noise.gyro_bias_walk.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.noise.gyro_bias_walk = parse_f64(r)?; Ok(()) }),
    ("chirp.c1", |c: &WorkbenchConfig| c.chirp.c1.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.chirp.c1 = parse_f64(r)?; Ok(()) }),
    ("chirp.c2", |c: &WorkbenchConfig| c.chirp.c2.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.chirp.c2 = parse_f64(r)?; Ok(()) }),
    ("chirp.omega_min", |c: &WorkbenchConfig| c.chirp.omega_min.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.chirp.omega_min = parse_f64(r)?; Ok(()) }),
    ("chirp.omega_max", |c: &WorkbenchConfig| c.chirp.omega_max.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.chirp.omega_max = parse_f64(r)?; Ok(()) }),
    ("chirp.amplitude", |c: &WorkbenchConfig| c.chirp.amplitude.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.chirp.amplitude = parse_f64(r)?; Ok(()) }),
    ("chirp.t_rec", |c: &WorkbenchConfig| c.chirp.t_rec.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.chirp.t_rec = parse_f64(r)?; Ok(()) }),
    ("chirp.trim_pad", |c: &WorkbenchConfig| c.chirp.trim_pad.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.chirp.trim_pad = parse_f64(r)?; Ok(()) }),
    ("seed", |c: &WorkbenchConfig| c.seed.to_string(),
        |c: &mut WorkbenchConfig, r: &str| { c.seed = parse_u64(r)?; Ok(()) }),
];

fn filter_kind_name(kind: FilterKind) -> &'static str {
    match kind {
        FilterKind::Complementary => "complementary",
        FilterKind::Lowpass1 => "lowpass1",
        FilterKind::Butterworth2 => "butterworth2",
        FilterKind::Chebyshev1 => "chebyshev1",
    }
}

fn filter_kind_parse(raw: &str) -> Result<FilterKind, String> {
    match raw {
        "complementary" => Ok(FilterKind::Complementary),
        "lowpass1" => Ok(FilterKind::Lowpass1),
        "butterworth2" => Ok(FilterKind::Butterworth2),
        "chebyshev1" => Ok(FilterKind::Chebyshev1),
        _ => Err("expected complementary|lowpass1|butterworth2|chebyshev1".into()),
    }
}

/// Parse the flat key-value config text. Absent keys keep their defaults;
/// unknown keys are rejected. A leading `quadlab-v1 config` tag line is
/// accepted and skipped; nothing else may look like a tag.
pub fn config_from_string(text: &str) -> Result<WorkbenchConfig, LogError> {
    let mut cfg = WorkbenchConfig::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.starts_with(FORMAT_TAG) {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| LogError::MalformedRow {
            line: idx + 1,
            reason: "expected key = value".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        match set_key(&mut cfg, key, value) {
            Ok(true) => {}
            Ok(false) => {
                return Err(LogError::UnknownKey {
                    key: key.to_string(),
                })
            }
            Err(reason) => {
                return Err(LogError::TypeMismatch {
                    key: key.to_string(),
                    value: value.to_string(),
                    reason,
                })
            }
        }
    }
    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &WorkbenchConfig) -> Result<(), LogError> {
    if let Err(e) = cfg.vehicle.validate() {
        return Err(LogError::TypeMismatch {
            key: "vehicle".into(),
            value: String::new(),
            reason: e.to_string(),
        });
    }
    if let Err(e) = cfg.filter.validate() {
        return Err(LogError::TypeMismatch {
            key: "filter".into(),
            value: String::new(),
            reason: e.to_string(),
        });
    }
    if let Err(e) = cfg.chirp.validate() {
        return Err(LogError::TypeMismatch {
            key: "chirp".into(),
            value: String::new(),
            reason: e,
        });
    }
    if cfg.cascade.loop_rate_hz.is_nan() || cfg.cascade.loop_rate_hz <= 0.0 {
        return Err(LogError::TypeMismatch {
            key: "loop.rate_hz".into(),
            value: cfg.cascade.loop_rate_hz.to_string(),
            reason: "loop rate must be > 0".into(),
        });
    }
    Ok(())
}

/// Serialize the full config, one key per line, with the version tag.
pub fn config_to_string(cfg: &WorkbenchConfig) -> String {
    let mut out = String::new();
    out.push_str(FORMAT_TAG);
    out.push_str(" config\n");
    for key in key_names() {
        let value = get_key(cfg, key).expect("schema key");
        out.push_str(&format!("{key} = {value}\n"));
    }
    out
}

pub fn load_config(path: &Path) -> Result<WorkbenchConfig, LogError> {
    config_from_string(&fs::read_to_string(path)?)
}

pub fn save_config(path: &Path, cfg: &WorkbenchConfig) -> Result<(), LogError> {
    atomic_write(path, config_to_string(cfg).as_bytes())
}
