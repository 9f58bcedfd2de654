//! Excitation signal generation: exponential frequency sweeps (chirps) for
//! identification runs and doublets for time-domain validation.
//!
//! The sweep frequency schedule is
//!   K(t) = C2·(e^{C1·t/T_rec} - 1)
//!   w(t) = w_min + K·(w_max - w_min)
//! with the phase advanced by Euler integration (phi += w·dt) rather than
//! evaluating sin(w·t) directly; the accumulator form keeps the instantaneous
//! frequency exactly monotone. The constants C1 = 4.0 and C2 = 0.0187 make
//! K(T_rec) land 0.228 % above one, so the sweep slightly overshoots w_max;
//! it is deliberately not clamped.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpSpec {
    pub c1: f64,
    pub c2: f64,
    /// Sweep start frequency [rad/s].
    pub omega_min: f64,
    /// Sweep end frequency [rad/s].
    pub omega_max: f64,
    /// Command amplitude, usually ~10 % of the channel limit.
    pub amplitude: f64,
    /// Sweep record length [s].
    pub t_rec: f64,
    /// Trim hold [s] before and after the sweep.
    pub trim_pad: f64,
}

impl Default for ChirpSpec {
    /// Defaults cover the identified attitude dynamics (poles near 2 rad/s)
    /// with a 90 s record and 10 % of the 45 deg roll/pitch limit.
    fn default() -> Self {
        ChirpSpec {
            c1: 4.0,
            c2: 0.0187,
            omega_min: 0.3,
            omega_max: 40.0,
            amplitude: 4.5,
            t_rec: 90.0,
            trim_pad: 3.0,
        }
    }
}

impl ChirpSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err("chirp constants must be positive".into());
        }
        if !(self.omega_min > 0.0 && self.omega_min < self.omega_max) {
            return Err(format!(
                "need 0 < omega_min < omega_max, got [{}, {}]",
                self.omega_min, self.omega_max
            ));
        }
        if !(self.amplitude > 0.0 && self.t_rec > 0.0 && self.trim_pad >= 0.0) {
            return Err("amplitude and record length must be positive".into());
        }
        Ok(())
    }

    /// Frequency-schedule fraction K(t).
    pub fn frequency_fraction(&self, t: f64) -> f64 {
        self.c2 * ((self.c1 * t / self.t_rec).exp() - 1.0)
    }

    /// Instantaneous sweep frequency [rad/s] at time t into the record.
    pub fn instantaneous_frequency(&self, t: f64) -> f64 {
        self.omega_min + self.frequency_fraction(t) * (self.omega_max - self.omega_min)
    }

    /// Total signal duration including both trim pads [s].
    pub fn total_duration(&self) -> f64 {
        self.t_rec + 2.0 * self.trim_pad
    }
}

/// Euler phase accumulator for the sweep oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseAccumulator {
    pub phase: f64,
    last_t: Option<f64>,
}

/// One sweep sample at time `t` into the record (pads excluded). The phase
/// advances by w·dt from the previous call.
pub fn chirp_sample(spec: &ChirpSpec, t: f64, acc: PhaseAccumulator) -> (f64, PhaseAccumulator) {
    let omega = spec.instantaneous_frequency(t);
    let dt = match acc.last_t {
        Some(last) => t - last,
        None => 0.0,
    };
    let phase = acc.phase + omega * dt;
    (
        spec.amplitude * phase.sin(),
        PhaseAccumulator {
            phase,
            last_t: Some(t),
        },
    )
}

/// Full sweep record sampled every `dt`: trim_pad of zeros, the chirp, and a
/// trailing trim_pad of zeros. Returns (times, values).
pub fn chirp_signal(spec: &ChirpSpec, dt: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(dt > 0.0, "dt must be positive");
    let total = spec.total_duration();
    let n = (total / dt).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut acc = PhaseAccumulator::default();
    for k in 0..=n {
        let t = k as f64 * dt;
        times.push(t);
        let in_sweep = t >= spec.trim_pad && t <= spec.trim_pad + spec.t_rec;
        if in_sweep {
            let (value, next) = chirp_sample(spec, t - spec.trim_pad, acc);
            acc = next;
            values.push(value);
        } else {
            values.push(0.0);
        }
    }
    (times, values)
}

/// Back-to-back opposite pulses: +A for `pulse_width` starting at
/// `start_time`, then -A for the same width, zero elsewhere.
pub fn doublet(
    amplitude: f64,
    pulse_width: f64,
    start_time: f64,
    dt: f64,
    duration: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert!(dt > 0.0 && pulse_width > 0.0);
    assert!(
        start_time + 2.0 * pulse_width <= duration,
        "doublet must fit inside the record"
    );
    let n = (duration / dt).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        times.push(t);
        values.push(if t >= start_time && t < start_time + pulse_width {
            amplitude
        } else if t >= start_time + pulse_width && t < start_time + 2.0 * pulse_width {
            -amplitude
        } else {
            0.0
        });
    }
    (times, values)
}
