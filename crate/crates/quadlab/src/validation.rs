//! Time-domain validation of identified models against doublet flight logs.

use std::fmt;

use crate::logio::FlightLogRecord;
use crate::sensors::{ROLL_PITCH_LIMIT_DEG, YAW_RATE_LIMIT_DPS};
use crate::sysid::LoesModel;

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    /// The log has no usable excitation/response pair for the axis.
    MissingChannel { channel: String },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::MissingChannel { channel } => {
                write!(f, "log is missing channel data: {channel}")
            }
        }
    }
}

impl std::error::Error for ValidationError {}

/// Shift a record by `tau` seconds using linear interpolation between
/// samples; the head pads with zeros.
pub fn fractional_delay(input: &[f64], tau: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0 && tau >= 0.0);
    let shift = tau / dt;
    let whole = shift.floor() as usize;
    let frac = shift - shift.floor();
    (0..input.len())
        .map(|n| {
            let a = if n >= whole { input[n - whole] } else { 0.0 };
            let b = if n > whole { input[n - whole - 1] } else { 0.0 };
            a * (1.0 - frac) + b * frac
        })
        .collect()
}

/// Simulate the model on a uniformly sampled input: bilinear discretization
/// of the rational part, delay applied as a fractional-sample input shift.
pub fn simulate_tf(model: &LoesModel, input: &[f64], dt: f64) -> Vec<f64> {
    assert!(dt > 0.0);
    let delayed = fractional_delay(input, model.tau, dt);
    let k = 2.0 / dt;
    let k2 = k * k;
    let a0 = k2 + model.a1 * k + model.a0;
    let a1 = (2.0 * model.a0 - 2.0 * k2) / a0;
    let a2 = (k2 - model.a1 * k + model.a0) / a0;
    let b0 = (model.b1 * k + model.b0) / a0;
    let b1 = 2.0 * model.b0 / a0;
    let b2 = (model.b0 - model.b1 * k) / a0;

    let mut output = vec![0.0; delayed.len()];
    let mut x1 = 0.0;
    let mut x2 = 0.0;
    let mut y1 = 0.0;
    let mut y2 = 0.0;
    for (n, x) in delayed.iter().enumerate() {
        let y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        output[n] = y;
        x2 = x1;
        x1 = *x;
        y2 = y1;
        y1 = y;
    }
    output
}

/// Comparison metrics between predicted and measured doublet responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubletMetrics {
    /// RMS prediction error over the validation window.
    pub rms_error: f64,
    /// Predicted-to-measured peak magnitude ratio.
    pub peak_ratio: f64,
    /// Cross-correlation lag [s]; positive means the prediction trails the
    /// measurement.
    pub lag_s: f64,
    /// Window bounds [s].
    pub window: (f64, f64),
}

/// Validation axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationAxis {
    Roll,
    Pitch,
    YawRate,
}

impl ValidationAxis {
    pub fn name(self) -> &'static str {
        match self {
            ValidationAxis::Roll => "roll",
            ValidationAxis::Pitch => "pitch",
            ValidationAxis::YawRate => "yaw-rate",
        }
    }
}

/// Extract the mapped stick input [deg or deg/s] and the measured response
/// for one axis from a flight log.
pub fn axis_channels(
    log: &[FlightLogRecord],
    axis: ValidationAxis,
) -> Result<(Vec<f64>, Vec<f64>), ValidationError> {
    if log.is_empty() {
        return Err(ValidationError::MissingChannel {
            channel: format!("{} (empty log)", axis.name()),
        });
    }
    let map_stick = |us: f64, limit: f64| (us - 1536.0) / 512.0 * limit;
    let (input, output): (Vec<f64>, Vec<f64>) = match axis {
        ValidationAxis::Roll => log
            .iter()
            .map(|r| (map_stick(r.pwm[1], ROLL_PITCH_LIMIT_DEG), r.phi_deg))
            .unzip(),
        ValidationAxis::Pitch => log
            .iter()
            .map(|r| (map_stick(r.pwm[2], ROLL_PITCH_LIMIT_DEG), r.theta_deg))
            .unzip(),
        ValidationAxis::YawRate => log
            .iter()
            .map(|r| (map_stick(r.pwm[3], YAW_RATE_LIMIT_DPS), r.r_dps))
            .unzip(),
    };
    if input.iter().all(|v| *v == 0.0) {
        return Err(ValidationError::MissingChannel {
            channel: format!("{} stick (no excitation recorded)", axis.name()),
        });
    }
    Ok((input, output))
}

/// Run the fitted model on the logged doublet input and compare with the
/// logged response. The window spans 0.5 s before the first stick motion to
/// 5 s after it.
pub fn validate_doublet(
    model: &LoesModel,
    log: &[FlightLogRecord],
    axis: ValidationAxis,
) -> Result<DoubletMetrics, ValidationError> {
    let (input, measured) = axis_channels(log, axis)?;
    let dt = if log.len() >= 2 {
        log[1].t - log[0].t
    } else {
        return Err(ValidationError::MissingChannel {
            channel: "time base (single record)".into(),
        });
    };
    let predicted = simulate_tf(model, &input, dt);

    let start_idx = input.iter().position(|v| *v != 0.0).unwrap();
    let t_start = log[start_idx].t - 0.5;
    let t_end = log[start_idx].t + 5.0;
    let window: Vec<usize> = log
        .iter()
        .enumerate()
        .filter(|(_, r)| r.t >= t_start && r.t <= t_end)
        .map(|(i, _)| i)
        .collect();

    let mut sq_sum = 0.0;
    let mut peak_meas = 0.0f64;
    let mut peak_pred = 0.0f64;
    for &i in &window {
        let e = predicted[i] - measured[i];
        sq_sum += e * e;
        peak_meas = peak_meas.max(measured[i].abs());
        peak_pred = peak_pred.max(predicted[i].abs());
    }
    let rms_error = (sq_sum / window.len() as f64).sqrt();
    let peak_ratio = if peak_meas > 0.0 {
        peak_pred / peak_meas
    } else {
        f64::INFINITY
    };

    // Cross-correlation lag over +-1 s: positive shifts delay the prediction.
    let max_shift = (1.0 / dt).round() as isize;
    let mut best_shift = 0isize;
    let mut best_corr = f64::NEG_INFINITY;
    for shift in -max_shift..=max_shift {
        let mut corr = 0.0;
        for &i in &window {
            let j = i as isize - shift;
            if j >= 0 && (j as usize) < predicted.len() {
                corr += measured[i] * predicted[j as usize];
            }
        }
        if corr > best_corr {
            best_corr = corr;
            best_shift = shift;
        }
    }

    Ok(DoubletMetrics {
        rms_error,
        peak_ratio,
        lag_s: -(best_shift as f64) * dt,
        window: (t_start, t_end),
    })
}
