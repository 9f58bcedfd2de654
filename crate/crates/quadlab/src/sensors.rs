//! IMU measurement emulation, attitude estimation filters, and RC receiver
//! PWM decoding.
//!
//! Accelerometer convention: gravity-sensing sign, so a level hover reads
//! (0, 0, -g). In drag-free flight the specific force is thrust-only, which
//! makes the reading (0, 0, -U1/m); tilt is recoverable from a bench-static
//! sample but not from coordinated flight, exactly like the real sensor.

use std::f64::consts::PI;
use std::fmt;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::dynamics::{BodyState, ControlEfforts, VehicleParams};

#[derive(Debug, Clone, PartialEq)]
pub enum SensorError {
    /// Accelerometer magnitude below 0.1 g: tilt is unobservable.
    FreeFall { magnitude: f64 },
    /// Filter configuration violates its invariants.
    InvalidFilter(String),
}

impl fmt::Display for SensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensorError::FreeFall { magnitude } => {
                write!(f, "free-fall frame: |accel| = {magnitude:.3} m/s² below 0.1 g")
            }
            SensorError::InvalidFilter(msg) => write!(f, "invalid filter config: {msg}"),
        }
    }
}

impl std::error::Error for SensorError {}

/// One IMU frame: accelerometer [m/s²], gyro [rad/s], timestamp [s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub accel: [f64; 3],
    pub gyro: [f64; 3],
    pub timestamp: f64,
}

/// Noise magnitudes for the IMU emulator. Zeroing everything gives exact
/// pass-through measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Accelerometer white noise sigma [m/s²].
    pub accel_sigma: f64,
    /// Gyro white noise sigma [rad/s].
    pub gyro_sigma: f64,
    /// Gyro constant bias sigma [rad/s]; drawn once per axis at stream start.
    pub gyro_bias_sigma: f64,
    /// Gyro bias random-walk intensity [rad/s per sqrt(s)].
    pub gyro_bias_walk: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            accel_sigma: 0.3,
            gyro_sigma: 0.02,
            gyro_bias_sigma: 0.01,
            gyro_bias_walk: 0.002,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        NoiseConfig {
            accel_sigma: 0.0,
            gyro_sigma: 0.0,
            gyro_bias_sigma: 0.0,
            gyro_bias_walk: 0.0,
        }
    }
}

/// Seeded IMU measurement stream. Identical seeds and inputs produce
/// identical samples.
#[derive(Debug, Clone)]
pub struct ImuEmulator {
    cfg: NoiseConfig,
    rng: StdRng,
    bias: [f64; 3],
    last_t: Option<f64>,
}

impl ImuEmulator {
    pub fn new(cfg: NoiseConfig, seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut bias = [0.0; 3];
        if cfg.gyro_bias_sigma > 0.0 {
            let dist = Normal::new(0.0, cfg.gyro_bias_sigma).unwrap();
            for b in &mut bias {
                *b = dist.sample(&mut rng);
            }
        }
        ImuEmulator {
            cfg,
            rng,
            bias,
            last_t: None,
        }
    }

    /// Measure the true state. `timestamp` must be strictly increasing across
    /// the stream.
    pub fn sample(
        &mut self,
        state: &BodyState,
        efforts: &ControlEfforts,
        params: &VehicleParams,
        timestamp: f64,
    ) -> ImuSample {
        if let Some(last) = self.last_t {
            debug_assert!(timestamp > last, "timestamps must be strictly increasing");
            let dt = (timestamp - last).max(0.0);
            if self.cfg.gyro_bias_walk > 0.0 && dt > 0.0 {
                let walk = Normal::new(0.0, self.cfg.gyro_bias_walk * dt.sqrt()).unwrap();
                for b in &mut self.bias {
                    *b += walk.sample(&mut self.rng);
                }
            }
        }
        self.last_t = Some(timestamp);

        // Drag-free specific force is thrust-only along body z; with the
        // gravity-sensing sign convention that reads -U1/m.
        let mut accel = [0.0, 0.0, -efforts.u1 / params.mass];
        let mut gyro = [state.p, state.q, state.r];
        if self.cfg.accel_sigma > 0.0 {
            let an = Normal::new(0.0, self.cfg.accel_sigma).unwrap();
            for a in &mut accel {
                *a += an.sample(&mut self.rng);
            }
        }
        if self.cfg.gyro_sigma > 0.0 {
            let gn = Normal::new(0.0, self.cfg.gyro_sigma).unwrap();
            for g in &mut gyro {
                *g += gn.sample(&mut self.rng);
            }
        }
        for (g, b) in gyro.iter_mut().zip(self.bias) {
            *g += b;
        }
        ImuSample {
            accel,
            gyro,
            timestamp,
        }
    }
}

/// Accelerometer reading of a bench-static vehicle at the given attitude:
/// pure rotated gravity under the same sign convention as `ImuEmulator`.
pub fn bench_static_accel(phi: f64, theta: f64, g: f64) -> [f64; 3] {
    [
        g * theta.sin(),
        -g * theta.cos() * phi.sin(),
        -g * theta.cos() * phi.cos(),
    ]
}

/// Tilt angles (roll, pitch) [rad] from the gravity direction via two-argument
/// arctangents. Rejects frames whose magnitude is below 0.1 g (free fall).
pub fn accel_angles(sample: &ImuSample) -> Result<(f64, f64), SensorError> {
    let [ax, ay, az] = sample.accel;
    let magnitude = (ax * ax + ay * ay + az * az).sqrt();
    if magnitude <= 0.1 * 9.81 {
        return Err(SensorError::FreeFall { magnitude });
    }
    let roll = (-ay).atan2(-az);
    let pitch = ax.atan2((ay * ay + az * az).sqrt());
    Ok((roll, pitch))
}

/// One complementary-filter update:
/// angle = alpha·(angle_prev + gyro·dt) + (1 - alpha)·accel_angle.
pub fn complementary_step(
    angle_prev: f64,
    gyro_rate: f64,
    accel_angle: f64,
    alpha: f64,
    dt: f64,
) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    alpha * (angle_prev + gyro_rate * dt) + (1.0 - alpha) * accel_angle
}

/// Discrete filter family for measurement smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Complementary,
    Lowpass1,
    Butterworth2,
    Chebyshev1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub kind: FilterKind,
    /// Complementary blend factor in [0, 1].
    pub alpha: f64,
    /// Cutoff [Hz]; must sit below Nyquist.
    pub cutoff_hz: f64,
    /// Passband ripple [dB], Chebyshev type 1 only.
    pub ripple_db: f64,
    pub sample_rate_hz: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            kind: FilterKind::Complementary,
            alpha: 0.98,
            cutoff_hz: 5.0,
            ripple_db: 1.0,
            sample_rate_hz: 100.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SensorError::InvalidFilter(format!(
                "alpha = {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.sample_rate_hz.is_nan() || self.sample_rate_hz <= 0.0 {
            return Err(SensorError::InvalidFilter("sample rate must be > 0".into()));
        }
        if self.cutoff_hz.is_nan()
            || self.cutoff_hz <= 0.0
            || self.cutoff_hz >= self.sample_rate_hz / 2.0
        {
            return Err(SensorError::InvalidFilter(format!(
                "cutoff {} Hz outside (0, Nyquist) at fs = {}",
                self.cutoff_hz, self.sample_rate_hz
            )));
        }
        if self.kind == FilterKind::Chebyshev1 && (self.ripple_db.is_nan() || self.ripple_db <= 0.0) {
            return Err(SensorError::InvalidFilter("ripple must be > 0 dB".into()));
        }
        Ok(())
    }
}

/// First-order low-pass state (bilinear transform of wc/(s + wc) with
/// prewarping at the cutoff). DC gain exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Lowpass1 {
    b0: f64,
    b1: f64,
    a1: f64,
    x1: f64,
    y1: f64,
    primed: bool,
}

impl Lowpass1 {
    pub fn new(cfg: &FilterConfig) -> Result<Self, SensorError> {
        cfg.validate()?;
        let t = 1.0 / cfg.sample_rate_hz;
        let wc = 2.0 * PI * cfg.cutoff_hz;
        // Prewarp so the analog cutoff maps exactly.
        let k = wc / (wc * t / 2.0).tan();
        let den = k + wc;
        Ok(Lowpass1 {
            b0: wc / den,
            b1: wc / den,
            a1: (wc - k) / den,
            x1: 0.0,
            y1: 0.0,
            primed: false,
        })
    }

    pub fn step(&mut self, input: f64) -> f64 {
        if !self.primed {
            // Start from rest at zero; the first sample sees x1 = y1 = 0.
            self.primed = true;
        }
        let y = self.b0 * input + self.b1 * self.x1 - self.a1 * self.y1;
        self.x1 = input;
        self.y1 = y;
        y
    }
}

/// Second-order section in direct form II transposed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    s1: f64,
    s2: f64,
}

impl Biquad {
    /// Bilinear transform of (B0) / (s² + A1 s + A0), numerator constant B0,
    /// prewarped so `warp_freq` [rad/s] maps exactly.
    fn from_analog(b0_analog: f64, a1_analog: f64, a0_analog: f64, warp_freq: f64, t: f64) -> Self {
        let k = warp_freq / (warp_freq * t / 2.0).tan();
        let k2 = k * k;
        let den = k2 + a1_analog * k + a0_analog;
        Biquad {
            b0: b0_analog / den,
            b1: 2.0 * b0_analog / den,
            b2: b0_analog / den,
            a1: (2.0 * a0_analog - 2.0 * k2) / den,
            a2: (k2 - a1_analog * k + a0_analog) / den,
            s1: 0.0,
            s2: 0.0,
        }
    }

    /// Second-order Butterworth low-pass. DC gain exactly 1.
    pub fn butterworth2(cfg: &FilterConfig) -> Result<Self, SensorError> {
        cfg.validate()?;
        let wc = 2.0 * PI * cfg.cutoff_hz;
        let t = 1.0 / cfg.sample_rate_hz;
        Ok(Self::from_analog(wc * wc, std::f64::consts::SQRT_2 * wc, wc * wc, wc, t))
    }

    /// Second-order Chebyshev type-1 low-pass. Even order, so the DC gain is
    /// 1/sqrt(1 + eps²) per the type-1 ripple convention.
    pub fn chebyshev1(cfg: &FilterConfig) -> Result<Self, SensorError> {
        cfg.validate()?;
        let eps = (10f64.powf(cfg.ripple_db / 10.0) - 1.0).sqrt();
        let mu = (1.0 / eps).asinh() / 2.0;
        let wc = 2.0 * PI * cfg.cutoff_hz;
        // Poles at wc·(-sinh(mu)·sin(pi/4) ± j·cosh(mu)·cos(pi/4)).
        let re = mu.sinh() * (PI / 4.0).sin();
        let im = mu.cosh() * (PI / 4.0).cos();
        let a1 = 2.0 * re * wc;
        let a0 = (re * re + im * im) * wc * wc;
        let dc_gain = 1.0 / (1.0 + eps * eps).sqrt();
        Ok(Self::from_analog(dc_gain * a0, a1, a0, wc, 1.0 / cfg.sample_rate_hz))
    }

    pub fn step(&mut self, input: f64) -> f64 {
        let y = self.b0 * input + self.s1;
        self.s1 = self.b1 * input - self.a1 * y + self.s2;
        self.s2 = self.b2 * input - self.a2 * y;
        y
    }
}

/// Receiver frame: six channel pulse widths [µs] after quantization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PwmFrame {
    pub throttle: u16,
    pub roll: u16,
    pub pitch: u16,
    pub yaw: u16,
    pub trigger: u16,
    pub kill: u16,
}

impl PwmFrame {
    pub fn channels(&self) -> [u16; 6] {
        [
            self.throttle,
            self.roll,
            self.pitch,
            self.yaw,
            self.trigger,
            self.kill,
        ]
    }

    pub fn from_channels(ch: [u16; 6]) -> Self {
        PwmFrame {
            throttle: ch[0],
            roll: ch[1],
            pitch: ch[2],
            yaw: ch[3],
            trigger: ch[4],
            kill: ch[5],
        }
    }

    /// Every channel must be a multiple of 4 µs inside [1024, 2048].
    pub fn validate(&self) -> Result<(), String> {
        for (i, c) in self.channels().into_iter().enumerate() {
            if !(1024..=2048).contains(&c) || c % 4 != 0 {
                return Err(format!("channel {i}: {c} µs not a 4 µs multiple in [1024, 2048]"));
            }
        }
        Ok(())
    }

    /// Neutral sticks: centered attitude channels, throttle low, switches off.
    pub fn neutral() -> Self {
        PwmFrame {
            throttle: 1024,
            roll: 1536,
            pitch: 1536,
            yaw: 1536,
            trigger: 1024,
            kill: 1024,
        }
    }
}

/// Receiver capture: clamp into [1024, 2048] and round to the 4 µs
/// measurement resolution.
pub fn pwm_quantize(true_width_us: f64) -> u16 {
    let clamped = true_width_us.clamp(1024.0, 2048.0);
    let quantized = (clamped / 4.0).round() * 4.0;
    quantized.clamp(1024.0, 2048.0) as u16
}

/// Stick deflection limits for the attitude channels.
pub const ROLL_PITCH_LIMIT_DEG: f64 = 45.0;
pub const YAW_RATE_LIMIT_DPS: f64 = 135.0;

/// Decoded pilot command.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PilotCommand {
    /// Commanded roll angle [deg].
    pub roll_deg: f64,
    /// Commanded pitch angle [deg].
    pub pitch_deg: f64,
    /// Commanded yaw rate [deg/s].
    pub yaw_rate_dps: f64,
    /// Throttle fraction in [0, 1].
    pub throttle: f64,
    pub trigger: bool,
    pub kill: bool,
}

/// Map a receiver frame to pilot commands: 1024 -> -limit, 1536 -> 0,
/// 2048 -> +limit on the attitude channels; throttle maps [1024, 2048] to
/// [0, 1]; switches threshold at the midpoint.
pub fn pwm_map(frame: &PwmFrame) -> PilotCommand {
    let bipolar = |w: u16, limit: f64| (w as f64 - 1536.0) / 512.0 * limit;
    PilotCommand {
        roll_deg: bipolar(frame.roll, ROLL_PITCH_LIMIT_DEG),
        pitch_deg: bipolar(frame.pitch, ROLL_PITCH_LIMIT_DEG),
        yaw_rate_dps: bipolar(frame.yaw, YAW_RATE_LIMIT_DPS),
        throttle: (frame.throttle as f64 - 1024.0) / 1024.0,
        trigger: frame.trigger > 1536,
        kill: frame.kill > 1536,
    }
}

/// Encode pilot commands back into a quantized receiver frame (used by the
/// workbench to synthesize stick traces).
pub fn pwm_encode(cmd: &PilotCommand) -> PwmFrame {
    let bipolar = |value: f64, limit: f64| pwm_quantize(1536.0 + value / limit * 512.0);
    PwmFrame {
        throttle: pwm_quantize(1024.0 + cmd.throttle * 1024.0),
        roll: bipolar(cmd.roll_deg, ROLL_PITCH_LIMIT_DEG),
        pitch: bipolar(cmd.pitch_deg, ROLL_PITCH_LIMIT_DEG),
        yaw: bipolar(cmd.yaw_rate_dps, YAW_RATE_LIMIT_DPS),
        trigger: if cmd.trigger { 2048 } else { 1024 },
        kill: if cmd.kill { 2048 } else { 1024 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::hover_trim;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn noiseless_hover_sample_reads_minus_g() {
        let params = VehicleParams::default();
        let (_, efforts) = hover_trim(&params);
        let mut imu = ImuEmulator::new(NoiseConfig::zero(), 1);
        let s = imu.sample(&BodyState::default(), &efforts, &params, 0.0);
        assert_abs_diff_eq!(s.accel[0], 0.0);
        assert_abs_diff_eq!(s.accel[1], 0.0);
        assert_relative_eq!(s.accel[2], -params.g, max_relative = 1e-12);
        assert_eq!(s.gyro, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn fixed_seed_reproduces_stream() {
        let params = VehicleParams::default();
        let (_, efforts) = hover_trim(&params);
        let run = |seed: u64| {
            let mut imu = ImuEmulator::new(NoiseConfig::default(), seed);
            (0..50)
                .map(|k| imu.sample(&BodyState::default(), &efforts, &params, k as f64 * 0.01))
                .collect::<Vec<_>>()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a, b);
        let c = run(8);
        assert_ne!(a, c);
    }

    #[test]
    fn gyro_integration_drifts_but_complementary_stays_bounded() {
        // 60 s hover with default bias/drift: raw gyro integration wanders,
        // the blended estimate stays near zero.
        let params = VehicleParams::default();
        let (_, efforts) = hover_trim(&params);
        let mut imu = ImuEmulator::new(NoiseConfig::default(), 42);
        let dt = 0.01;
        let mut integrated = 0.0;
        let mut blended = 0.0;
        let mut max_blended = 0.0f64;
        for k in 0..6000 {
            let s = imu.sample(&BodyState::default(), &efforts, &params, k as f64 * dt);
            let (roll_acc, _) = accel_angles(&s).unwrap();
            integrated += s.gyro[0] * dt;
            blended = complementary_step(blended, s.gyro[0], roll_acc, 0.98, dt);
            max_blended = max_blended.max(blended.abs());
        }
        assert!(
            integrated.abs() > 5.0 * max_blended,
            "integrated {integrated} vs blended max {max_blended}"
        );
        assert!(max_blended < 0.05, "blended estimate drifted to {max_blended}");
    }

    #[test]
    fn accel_angles_recover_bench_tilt() {
        let phi = 30f64.to_radians();
        let sample = ImuSample {
            accel: bench_static_accel(phi, 0.0, 9.81),
            gyro: [0.0; 3],
            timestamp: 0.0,
        };
        let (roll, pitch) = accel_angles(&sample).unwrap();
        assert_abs_diff_eq!(roll, phi, epsilon = 1e-9);
        assert_abs_diff_eq!(pitch, 0.0, epsilon = 1e-9);

        let level = ImuSample {
            accel: [0.0, 0.0, -9.81],
            gyro: [0.0; 3],
            timestamp: 0.0,
        };
        assert_eq!(accel_angles(&level).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn near_zero_accel_is_free_fall() {
        let sample = ImuSample {
            accel: [0.01, -0.02, 0.05],
            gyro: [0.0; 3],
            timestamp: 0.0,
        };
        assert!(matches!(
            accel_angles(&sample),
            Err(SensorError::FreeFall { .. })
        ));
    }

    #[test]
    fn complementary_limits() {
        // alpha = 1: pure gyro integration; alpha = 0: accel pass-through.
        assert_abs_diff_eq!(complementary_step(0.5, 0.2, 9.9, 1.0, 0.01), 0.502);
        assert_abs_diff_eq!(complementary_step(0.5, 0.2, 9.9, 0.0, 0.01), 9.9);
    }

    #[test]
    fn complementary_converges_geometrically() {
        let target = 0.3;
        let mut angle = 0.0;
        let mut prev_err = target;
        for _ in 0..200 {
            angle = complementary_step(angle, 0.0, target, 0.98, 0.01);
            let err = (target - angle).abs();
            assert_relative_eq!(err / prev_err, 0.98, max_relative = 1e-9);
            prev_err = err;
        }
    }

    #[test]
    fn complementary_identity_on_random_streams() {
        let mut x = 0xdeadbeefu64;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..1000 {
            let (prev, gyro, acc, dt) = (next(), next(), next(), next().abs() + 1e-3);
            let alpha = (next() + 1.0) / 2.0;
            let out = complementary_step(prev, gyro, acc, alpha, dt);
            let direct = alpha * (prev + gyro * dt) + (1.0 - alpha) * acc;
            assert_abs_diff_eq!(out, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn bounded_output_under_constant_gyro_bias() {
        // Geometric-series bound: steady error = alpha·bias·dt/(1 - alpha).
        let (alpha, bias, dt) = (0.98, 0.05, 0.01);
        let mut angle = 0.0;
        for _ in 0..100_000 {
            angle = complementary_step(angle, bias, 0.0, alpha, dt);
        }
        let bound = alpha * bias * dt / (1.0 - alpha);
        assert!(angle.abs() <= bound * (1.0 + 1e-9));
        assert_relative_eq!(angle, bound, max_relative = 1e-6);
    }

    #[test]
    fn lowpass_dc_gain_is_one() {
        let cfg = FilterConfig {
            kind: FilterKind::Lowpass1,
            cutoff_hz: 5.0,
            ..Default::default()
        };
        let mut lp = Lowpass1::new(&cfg).unwrap();
        let mut y = 0.0;
        for _ in 0..2000 {
            y = lp.step(3.7);
        }
        assert_relative_eq!(y, 3.7, max_relative = 1e-9);

        let mut bw = Biquad::butterworth2(&cfg).unwrap();
        let mut yb = 0.0;
        for _ in 0..2000 {
            yb = bw.step(3.7);
        }
        assert_relative_eq!(yb, 3.7, max_relative = 1e-9);
    }

    #[test]
    fn chebyshev_dc_gain_follows_ripple_convention() {
        let cfg = FilterConfig {
            kind: FilterKind::Chebyshev1,
            cutoff_hz: 5.0,
            ripple_db: 1.0,
            ..Default::default()
        };
        let mut ch = Biquad::chebyshev1(&cfg).unwrap();
        let mut y = 0.0;
        for _ in 0..4000 {
            y = ch.step(1.0);
        }
        let eps2 = 10f64.powf(0.1) - 1.0;
        assert_relative_eq!(y, 1.0 / (1.0 + eps2).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn butterworth_step_matches_continuous_prototype() {
        // 5 Hz cutoff at 100 Hz sampling; prewarped discrete step response
        // tracks the analog second-order response within 2 %.
        let cfg = FilterConfig {
            kind: FilterKind::Butterworth2,
            cutoff_hz: 5.0,
            ..Default::default()
        };
        let mut bw = Biquad::butterworth2(&cfg).unwrap();
        let wc = 2.0 * PI * 5.0;
        let zeta = std::f64::consts::FRAC_1_SQRT_2;
        let sigma = zeta * wc;
        let wd = wc * (1.0 - zeta * zeta).sqrt();
        let mut worst = 0.0f64;
        for k in 0..200 {
            let y = bw.step(1.0);
            // Analog response evaluated mid-sample: the bilinear transform is
            // centered, so the discrete output sits half a step ahead of y(kT).
            let t = (k as f64 + 0.5) / cfg.sample_rate_hz;
            let y_cont =
                1.0 - (-sigma * t).exp() * ((wd * t).cos() + sigma / wd * (wd * t).sin());
            worst = worst.max((y - y_cont).abs());
        }
        assert!(worst < 0.02, "worst deviation {worst}");
    }

    #[test]
    fn chebyshev_rises_faster_than_butterworth() {
        let base = FilterConfig {
            cutoff_hz: 5.0,
            ripple_db: 1.0,
            sample_rate_hz: 100.0,
            alpha: 0.98,
            kind: FilterKind::Butterworth2,
        };
        let rise_time = |mut filter: Biquad| -> f64 {
            let mut ys = Vec::new();
            for _ in 0..600 {
                ys.push(filter.step(1.0));
            }
            let final_value = *ys.last().unwrap();
            // Sub-sample crossing times via linear interpolation.
            let crossing = |level: f64| -> f64 {
                let k = ys.iter().position(|y| *y >= level).unwrap();
                if k == 0 {
                    return 0.0;
                }
                let frac = (level - ys[k - 1]) / (ys[k] - ys[k - 1]);
                (k as f64 - 1.0 + frac) / base.sample_rate_hz
            };
            crossing(0.9 * final_value) - crossing(0.1 * final_value)
        };
        let bw = rise_time(Biquad::butterworth2(&base).unwrap());
        let ch = rise_time(Biquad::chebyshev1(&base).unwrap());
        assert!(ch < bw, "chebyshev {ch} s vs butterworth {bw} s");
    }

    #[test]
    fn filters_are_linear_and_time_invariant() {
        let cfg = FilterConfig {
            kind: FilterKind::Butterworth2,
            cutoff_hz: 8.0,
            ..Default::default()
        };
        let input: Vec<f64> = (0..300)
            .map(|k| (0.37 * k as f64).sin() + 0.2 * (1.1 * k as f64).cos())
            .collect();
        let run = |scale: f64| {
            let mut f = Biquad::butterworth2(&cfg).unwrap();
            input.iter().map(|x| f.step(scale * x)).collect::<Vec<_>>()
        };
        let y1 = run(1.0);
        let y3 = run(3.0);
        for (a, b) in y1.iter().zip(y3.iter()) {
            assert_relative_eq!(3.0 * a, *b, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantization_rounds_to_4_us() {
        assert_eq!(pwm_quantize(1534.7), 1536);
        assert_eq!(pwm_quantize(1024.0), 1024);
        assert_eq!(pwm_quantize(2100.0), 2048);
        assert_eq!(pwm_quantize(900.0), 1024);
        let mut x = 77u64;
        for _ in 0..500 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
            let w = 900.0 + ((x >> 11) as f64 / (1u64 << 53) as f64) * 1300.0;
            let q = pwm_quantize(w);
            assert!((1024..=2048).contains(&q) && q % 4 == 0, "{w} -> {q}");
        }
    }

    #[test]
    fn pwm_map_endpoints() {
        let mut frame = PwmFrame::neutral();
        frame.roll = 1536;
        assert_eq!(pwm_map(&frame).roll_deg, 0.0);
        frame.roll = 2048;
        assert_eq!(pwm_map(&frame).roll_deg, 45.0);
        frame.roll = 1024;
        assert_eq!(pwm_map(&frame).roll_deg, -45.0);
        frame.yaw = 2048;
        assert_eq!(pwm_map(&frame).yaw_rate_dps, 135.0);
        frame.throttle = 1024;
        assert_eq!(pwm_map(&frame).throttle, 0.0);
        frame.throttle = 2048;
        assert_eq!(pwm_map(&frame).throttle, 1.0);
    }

    #[test]
    fn pwm_map_is_odd_about_center() {
        for offset in [4u16, 100, 256, 512] {
            let mut plus = PwmFrame::neutral();
            let mut minus = PwmFrame::neutral();
            plus.roll = 1536 + offset;
            minus.roll = 1536 - offset;
            plus.pitch = 1536 + offset;
            minus.pitch = 1536 - offset;
            plus.yaw = 1536 + offset;
            minus.yaw = 1536 - offset;
            let cp = pwm_map(&plus);
            let cm = pwm_map(&minus);
            assert_abs_diff_eq!(cp.roll_deg, -cm.roll_deg);
            assert_abs_diff_eq!(cp.pitch_deg, -cm.pitch_deg);
            assert_abs_diff_eq!(cp.yaw_rate_dps, -cm.yaw_rate_dps);
        }
    }

    #[test]
    fn filtering_a_stick_step_adds_delay() {
        // A quantized throttle step through the low-pass family crosses 50 %
        // later than the raw trace.
        let cfg = FilterConfig {
            kind: FilterKind::Lowpass1,
            cutoff_hz: 4.0,
            ..Default::default()
        };
        let mut lp = Lowpass1::new(&cfg).unwrap();
        let raw: Vec<f64> = (0..200)
            .map(|k| if k >= 50 { 1800.0 } else { 1024.0 })
            .collect();
        let filtered: Vec<f64> = raw.iter().map(|x| lp.step(*x)).collect();
        let cross = |trace: &[f64]| {
            trace
                .iter()
                .position(|v| *v >= (1024.0 + 1800.0) / 2.0)
                .unwrap()
        };
        assert!(cross(&filtered) > cross(&raw));
    }
}
