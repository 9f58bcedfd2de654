//! Frequency-domain system identification: Welch-averaged frequency-response
//! estimation with coherence, and low-order transfer-function fitting with a
//! pure time delay.
//!
//! The estimator is the workbench stand-in for an external identification
//! package: Hann windows with configurable overlap, H(w) = Gxy/Gxx and
//! coherence = |Gxy|²/(Gxx·Gyy). Fits minimize a coherence-weighted
//! magnitude(dB)/phase(deg) cost over the grid with a Nelder-Mead search
//! from eight deterministic starts.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone, PartialEq)]
pub enum SysIdError {
    /// Fewer than the minimum averaging windows fit in the record.
    RecordTooShort { samples: usize, needed: usize },
    /// Time stamps deviate from a uniform grid.
    NonuniformSampling { at_index: usize },
    /// Not enough grid points reach the coherence floor inside the fit band.
    InsufficientCoherence { usable_points: usize },
    /// No start converged to an acceptable stable fit.
    NoStableFit { best_cost: f64 },
    /// Input/output records differ in length.
    LengthMismatch { input: usize, output: usize },
    /// The closed-loop sweep itself failed (diverged or misconfigured).
    SweepRunFailed { reason: String },
    /// The response carries no second-order shape the structure could
    /// represent (e.g. flat magnitude across the band).
    StructureMismatch { mag_range_db: f64 },
}

impl fmt::Display for SysIdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SysIdError::RecordTooShort { samples, needed } => {
                write!(f, "record too short: {samples} samples, need {needed}")
            }
            SysIdError::NonuniformSampling { at_index } => {
                write!(f, "nonuniform sampling near index {at_index}")
            }
            SysIdError::InsufficientCoherence { usable_points } => {
                write!(f, "insufficient coherence: only {usable_points} usable points")
            }
            SysIdError::NoStableFit { best_cost } => {
                write!(f, "no acceptable stable fit (best cost {best_cost:.3})")
            }
            SysIdError::LengthMismatch { input, output } => {
                write!(f, "length mismatch: input {input} vs output {output}")
            }
            SysIdError::SweepRunFailed { reason } => write!(f, "sweep run failed: {reason}"),
            SysIdError::StructureMismatch { mag_range_db } => write!(
                f,
                "structure mismatch: response magnitude spans only {mag_range_db:.2} dB across the band"
            ),
        }
    }
}

impl std::error::Error for SysIdError {}

/// Welch estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    /// Segment length [samples].
    pub length: usize,
    /// Fractional overlap in [0, 1).
    pub overlap: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            length: 2048,
            overlap: 0.5,
        }
    }
}

/// Minimum averaging windows for an estimate at all.
pub const MIN_WINDOWS: usize = 4;
/// Windows below this leave the coherence statistically shaky; the count is
/// carried in the metadata so consumers can check.
pub const COHERENCE_VALID_WINDOWS: usize = 5;

/// Estimated frequency response with coherence on a uniform grid.
#[derive(Debug, Clone)]
pub struct FrequencyResponse {
    /// Grid [rad/s], DC excluded, up to Nyquist.
    pub freqs: Vec<f64>,
    pub response: Vec<Complex64>,
    /// Coherence in [0, 1] per grid point.
    pub coherence: Vec<f64>,
    pub window_length: usize,
    pub overlap: f64,
    pub window_count: usize,
    /// Raw coherence values outside [0, 1] by more than 1e-9 before clamping.
    pub clamp_violations: usize,
}

impl FrequencyResponse {
    /// Indices with lo <= freq <= hi.
    pub fn band_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        self.freqs
            .iter()
            .enumerate()
            .filter(|(_, w)| **w >= lo && **w <= hi)
            .map(|(i, _)| i)
            .collect()
    }

    /// Minimum coherence over a band.
    pub fn min_coherence(&self, lo: f64, hi: f64) -> f64 {
        self.band_indices(lo, hi)
            .into_iter()
            .map(|i| self.coherence[i])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Least-squares line through a segment, returned as (offset, slope per
/// sample).
fn detrend_line(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = xs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let dt = i as f64 - t_mean;
        num += dt * (x - x_mean);
        den += dt * dt;
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    (x_mean - slope * t_mean, slope)
}

/// Verify a time vector is uniform and return its sample rate [Hz].
pub fn check_uniform_sampling(times: &[f64]) -> Result<f64, SysIdError> {
    if times.len() < 2 {
        return Err(SysIdError::RecordTooShort {
            samples: times.len(),
            needed: 2,
        });
    }
    let dt = times[1] - times[0];
    for (i, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if (step - dt).abs() > 1e-6 * dt.abs().max(1e-12) {
            return Err(SysIdError::NonuniformSampling { at_index: i + 1 });
        }
    }
    Ok(1.0 / dt)
}

/// Welch-averaged frequency response H = Gxy/Gxx with coherence
/// |Gxy|²/(Gxx·Gyy); Hann windows, linear detrend per segment.
pub fn estimate_frf(
    input: &[f64],
    output: &[f64],
    sample_rate: f64,
    cfg: &WindowConfig,
) -> Result<FrequencyResponse, SysIdError> {
    if input.len() != output.len() {
        return Err(SysIdError::LengthMismatch {
            input: input.len(),
            output: output.len(),
        });
    }
    assert!(sample_rate > 0.0);
    assert!((0.0..1.0).contains(&cfg.overlap) && cfg.length >= 8);
    let n = cfg.length;
    let hop = ((n as f64) * (1.0 - cfg.overlap)).round().max(1.0) as usize;
    if input.len() < n {
        return Err(SysIdError::RecordTooShort {
            samples: input.len(),
            needed: n + (MIN_WINDOWS - 1) * hop,
        });
    }
    let count = 1 + (input.len() - n) / hop;
    if count < MIN_WINDOWS {
        return Err(SysIdError::RecordTooShort {
            samples: input.len(),
            needed: n + (MIN_WINDOWS - 1) * hop,
        });
    }

    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);

    let half = n / 2;
    let mut gxx = vec![0.0f64; half + 1];
    let mut gyy = vec![0.0f64; half + 1];
    let mut gxy = vec![Complex64::new(0.0, 0.0); half + 1];

    let mut bx = vec![Complex64::new(0.0, 0.0); n];
    let mut by = vec![Complex64::new(0.0, 0.0); n];
    for seg in 0..count {
        let start = seg * hop;
        let xs = &input[start..start + n];
        let ys = &output[start..start + n];
        let (x_off, x_slope) = detrend_line(xs);
        let (y_off, y_slope) = detrend_line(ys);
        for i in 0..n {
            let t = i as f64;
            bx[i] = Complex64::new((xs[i] - x_off - x_slope * t) * window[i], 0.0);
            by[i] = Complex64::new((ys[i] - y_off - y_slope * t) * window[i], 0.0);
        }
        fft.process(&mut bx);
        fft.process(&mut by);
        for k in 0..=half {
            gxx[k] += bx[k].norm_sqr();
            gyy[k] += by[k].norm_sqr();
            gxy[k] += bx[k].conj() * by[k];
        }
    }

    let mut freqs = Vec::with_capacity(half);
    let mut response = Vec::with_capacity(half);
    let mut coherence = Vec::with_capacity(half);
    let mut clamp_violations = 0usize;
    for k in 1..=half {
        freqs.push(2.0 * PI * sample_rate * k as f64 / n as f64);
        let h = if gxx[k] > 0.0 {
            gxy[k] / gxx[k]
        } else {
            Complex64::new(0.0, 0.0)
        };
        response.push(h);
        let denom = gxx[k] * gyy[k];
        let raw = if denom > 0.0 {
            gxy[k].norm_sqr() / denom
        } else {
            0.0
        };
        if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
            clamp_violations += 1;
        }
        coherence.push(raw.clamp(0.0, 1.0));
    }

    Ok(FrequencyResponse {
        freqs,
        response,
        coherence,
        window_length: n,
        overlap: cfg.overlap,
        window_count: count,
        clamp_violations,
    })
}

/// Transfer-function structure being fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoesStructure {
    /// c·s / (s² + a1·s + a0): angle response through a washout (zero DC).
    RollAngle,
    /// Same shape as roll.
    PitchAngle,
    /// (b1·s + b0) / (s² + a1·s + a0): rate response with finite DC gain.
    YawRate,
}

impl LoesStructure {
    pub fn has_constant_numerator_term(self) -> bool {
        matches!(self, LoesStructure::YawRate)
    }

    pub fn name(self) -> &'static str {
        match self {
            LoesStructure::RollAngle => "roll-angle",
            LoesStructure::PitchAngle => "pitch-angle",
            LoesStructure::YawRate => "yaw-rate",
        }
    }
}

/// Fitted low-order equivalent system: (b1·s + b0)/(s² + a1·s + a0)·e^(-tau·s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoesModel {
    pub structure: LoesStructure,
    pub b1: f64,
    pub b0: f64,
    pub a1: f64,
    pub a0: f64,
    /// Pure delay [s].
    pub tau: f64,
    pub fit_cost: f64,
}

impl LoesModel {
    pub fn natural_frequency(&self) -> f64 {
        self.a0.sqrt()
    }

    pub fn damping_ratio(&self) -> f64 {
        self.a1 / (2.0 * self.a0.sqrt())
    }

    pub fn dc_gain(&self) -> f64 {
        self.b0 / self.a0
    }

    pub fn is_stable(&self) -> bool {
        self.a1 > 0.0 && self.a0 > 0.0
    }

    /// Human-readable rational form, e.g.
    /// "(2.305·s)/(s^2 + 3.894·s + 3.967)·exp(-0.197·s)".
    pub fn display_tf(&self) -> String {
        let num = if self.b0 == 0.0 {
            format!("{:.4}·s", self.b1)
        } else {
            format!("{:.4}·s + {:.4}", self.b1, self.b0)
        };
        format!(
            "({num})/(s^2 + {:.4}·s + {:.4})·exp(-{:.4}·s)",
            self.a1, self.a0, self.tau
        )
    }
}

/// Evaluate H(jw)·e^(-jw·tau) on a grid.
pub fn tf_frequency_response(model: &LoesModel, freqs: &[f64]) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|w| {
            let s = Complex64::new(0.0, *w);
            let rational =
                (model.b1 * s + model.b0) / (s * s + model.a1 * s + model.a0);
            rational * (-s * model.tau).exp()
        })
        .collect()
}

/// Fit options; the defaults are the documented pipeline settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Grid points below this coherence are excluded from the cost.
    pub coherence_floor: f64,
    /// Delay search bounds [s].
    pub tau_max: f64,
    /// Fits worse than this cost are rejected as structure mismatch; genuine
    /// fits in this pipeline land far below 1.
    pub max_acceptable_cost: f64,
    /// Minimum usable grid points inside the band.
    pub min_points: usize,
    /// Minimum magnitude spread [dB] the usable band must show; flatter
    /// responses carry no second-order shape and are structure mismatches.
    pub min_mag_range_db: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            coherence_floor: 0.6,
            tau_max: 0.5,
            max_acceptable_cost: 2.0,
            min_points: 8,
            min_mag_range_db: 3.0,
        }
    }
}

/// Phase weight: one decibel of magnitude error costs the same as ten
/// degrees of phase error.
pub const PHASE_WEIGHT: f64 = 0.01;

/// Coherence-weighted magnitude/phase cost on the selected grid points:
/// J = mean over points of coh·[(20·dlog10|H|)² + PHASE_WEIGHT·(dphase_deg)²].
pub fn fit_cost(
    model: &LoesModel,
    freqs: &[f64],
    response: &[Complex64],
    coherence: &[f64],
) -> f64 {
    const WP: f64 = PHASE_WEIGHT;
    let fit = tf_frequency_response(model, freqs);
    let mut total = 0.0;
    for i in 0..freqs.len() {
        let measured = response[i];
        let predicted = fit[i];
        if measured.norm() <= 0.0 || predicted.norm() <= 0.0 {
            total += 1e6;
            continue;
        }
        let dmag_db = 20.0 * (predicted.norm().log10() - measured.norm().log10());
        let mut dphase_deg = (predicted.arg() - measured.arg()).to_degrees();
        while dphase_deg > 180.0 {
            dphase_deg -= 360.0;
        }
        while dphase_deg <= -180.0 {
            dphase_deg += 360.0;
        }
        total += coherence[i] * (dmag_db * dmag_db + WP * dphase_deg * dphase_deg);
    }
    total / freqs.len() as f64
}

/// Fit a LOES model to the response over `freq_band` [rad/s]. Points with
/// coherence below the floor are excluded; the search runs Nelder-Mead from
/// eight deterministic starts and keeps the best stable result.
///
/// Returns the fitted model plus the best-so-far cost sequence across the
/// accepted starts (monotone nonincreasing by construction).
pub fn fit_loes(
    frf: &FrequencyResponse,
    structure: LoesStructure,
    freq_band: (f64, f64),
    options: &FitOptions,
) -> Result<(LoesModel, Vec<f64>), SysIdError> {
    let indices: Vec<usize> = frf
        .band_indices(freq_band.0, freq_band.1)
        .into_iter()
        .filter(|i| frf.coherence[*i] >= options.coherence_floor)
        .collect();
    if indices.len() < options.min_points {
        return Err(SysIdError::InsufficientCoherence {
            usable_points: indices.len(),
        });
    }
    let freqs: Vec<f64> = indices.iter().map(|i| frf.freqs[*i]).collect();
    let response: Vec<Complex64> = indices.iter().map(|i| frf.response[*i]).collect();
    let coherence: Vec<f64> = indices.iter().map(|i| frf.coherence[*i]).collect();

    let mag_db: Vec<f64> = response.iter().map(|h| 20.0 * h.norm().max(1e-300).log10()).collect();
    let range_db = mag_db.iter().fold(f64::MIN, |m, v| m.max(*v))
        - mag_db.iter().fold(f64::MAX, |m, v| m.min(*v));
    if range_db < options.min_mag_range_db {
        return Err(SysIdError::StructureMismatch { mag_range_db: range_db });
    }

    // Start heuristics: the magnitude peak locates the natural frequency,
    // and the peak magnitude sizes the numerator.
    let peak_idx = (0..freqs.len())
        .max_by(|i, j| {
            response[*i]
                .norm()
                .partial_cmp(&response[*j].norm())
                .unwrap()
        })
        .unwrap();
    let wn_peak = freqs[peak_idx].max(freq_band.0);
    let mag_peak = response[peak_idx].norm().max(1e-9);
    let mag_low = response[0].norm().max(1e-9);

    let make_start = |wn: f64, zeta: f64, tau: f64| -> Vec<f64> {
        let a0 = wn * wn;
        let a1 = 2.0 * zeta * wn;
        let b1 = mag_peak * a1;
        match structure {
            LoesStructure::YawRate => {
                let b0 = mag_low * a0;
                vec![b1.ln(), b0.ln(), a1.ln(), a0.ln(), tau]
            }
            _ => vec![b1.ln(), a1.ln(), a0.ln(), tau],
        }
    };
    let starts: Vec<Vec<f64>> = vec![
        make_start(wn_peak, 0.7, 0.1),
        make_start(wn_peak, 0.3, 0.1),
        make_start(wn_peak, 1.0, 0.1),
        make_start(0.5 * wn_peak, 0.7, 0.1),
        make_start(2.0 * wn_peak, 0.7, 0.1),
        make_start(wn_peak, 0.7, 0.0),
        make_start(wn_peak, 0.7, 0.25),
        make_start(1.5 * wn_peak, 0.5, 0.05),
    ];

    let decode = |x: &[f64]| -> LoesModel {
        match structure {
            LoesStructure::YawRate => LoesModel {
                structure,
                b1: x[0].exp(),
                b0: x[1].exp(),
                a1: x[2].exp(),
                a0: x[3].exp(),
                tau: x[4],
                fit_cost: f64::NAN,
            },
            _ => LoesModel {
                structure,
                b1: x[0].exp(),
                b0: 0.0,
                a1: x[1].exp(),
                a0: x[2].exp(),
                tau: x[3],
                fit_cost: f64::NAN,
            },
        }
    };
    let objective = |x: &[f64]| -> f64 {
        let tau = *x.last().unwrap();
        if !(0.0..=options.tau_max).contains(&tau) {
            let violation = if tau < 0.0 {
                -tau
            } else {
                tau - options.tau_max
            };
            return 1e9 * (1.0 + violation);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return 1e12;
        }
        let model = decode(x);
        // Keep the natural frequency near the fit band; collapsing it to zero
        // or infinity is the degenerate escape of a structure mismatch.
        let wn = model.natural_frequency();
        if wn < freq_band.0 / 8.0 || wn > freq_band.1 * 4.0 {
            return 1e9;
        }
        fit_cost(&model, &freqs, &response, &coherence)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut cost_sequence = Vec::new();
    for start in starts {
        let (x, cost) = nelder_mead(&objective, &start, 600);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, x));
        }
        cost_sequence.push(best.as_ref().unwrap().0);
    }
    let (cost, x) = best.unwrap();
    if !cost.is_finite() || cost > options.max_acceptable_cost {
        return Err(SysIdError::NoStableFit { best_cost: cost });
    }
    let mut model = decode(&x);
    model.fit_cost = cost;
    Ok((model, cost_sequence))
}

/// Standard Nelder-Mead simplex minimization; deterministic for a given
/// start. Returns the best vertex and its cost.
pub fn nelder_mead<F>(f: &F, start: &[f64], max_iter: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        let step = if v[i].abs() > 1e-6 { 0.15 * v[i].abs() } else { 0.1 };
        v[i] += step;
        simplex.push(v);
    }
    let mut costs: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|a, b| costs[*a].partial_cmp(&costs[*b]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|i| simplex[*i].clone()).collect();
        let reordered_costs: Vec<f64> = order.iter().map(|i| costs[*i]).collect();
        simplex = reordered;
        costs = reordered_costs;

        if (costs[n] - costs[0]).abs() <= 1e-12 * (1.0 + costs[0].abs()) {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in simplex.iter().take(n) {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + alpha * (centroid[i] - worst[i]))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < costs[0] {
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + gamma * (centroid[i] - worst[i]))
                .collect();
            let f_expand = f(&expand);
            if f_expand < f_reflect {
                simplex[n] = expand;
                costs[n] = f_expand;
            } else {
                simplex[n] = reflect;
                costs[n] = f_reflect;
            }
        } else if f_reflect < costs[n - 1] {
            simplex[n] = reflect;
            costs[n] = f_reflect;
        } else {
            let (point, f_point) = if f_reflect < costs[n] {
                let outside: Vec<f64> = (0..n)
                    .map(|i| centroid[i] + rho * (reflect[i] - centroid[i]))
                    .collect();
                let fo = f(&outside);
                (outside, fo)
            } else {
                let inside: Vec<f64> = (0..n)
                    .map(|i| centroid[i] - rho * (centroid[i] - worst[i]))
                    .collect();
                let fi = f(&inside);
                (inside, fi)
            };
            if f_point < costs[n].min(f_reflect) {
                simplex[n] = point;
                costs[n] = f_point;
            } else {
                let best_vertex = simplex[0].clone();
                for v in 1..=n {
                    for (x, b) in simplex[v].iter_mut().zip(&best_vertex) {
                        *x = b + sigma * (*x - b);
                    }
                    costs[v] = f(&simplex[v]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|a, b| costs[*a].partial_cmp(&costs[*b]).unwrap())
        .unwrap();
    (simplex[best].clone(), costs[best])
}

/// Identification run output: the estimation artifacts plus the fitted model.
#[derive(Debug, Clone)]
pub struct IdentReport {
    pub frf: FrequencyResponse,
    pub model: LoesModel,
    /// Best-so-far cost across the multi-start sequence.
    pub cost_sequence: Vec<f64>,
    pub fit_band: (f64, f64),
    /// Flight log of the sweep run.
    pub log: Vec<crate::logio::FlightLogRecord>,
    /// Saturation events during the sweep.
    pub saturation_events: usize,
}

/// Sweep-to-model pipeline on the simulated vehicle: inject the chirp as the
/// pilot command on one axis, fly it closed-loop through the sensor pipeline,
/// estimate the frequency response from the logged (mapped stick, filtered
/// response) pair, and fit the axis structure over `fit_band`.
#[allow(clippy::too_many_arguments)]
pub fn end_to_end_identify(
    plant: &crate::control::PlantKind,
    axis: crate::control::Axis,
    chirp: &crate::excitation::ChirpSpec,
    cascade: &crate::control::CascadeConfig,
    params: &crate::dynamics::VehicleParams,
    noise: &crate::sensors::NoiseConfig,
    seed: u64,
    window: &WindowConfig,
    fit_band: (f64, f64),
    options: &FitOptions,
) -> Result<IdentReport, SysIdError> {
    use crate::control::{closed_loop_simulate, Axis, FeedbackSource, Scenario};
    use crate::sensors::PilotCommand;

    let frame_dt = cascade.sample_time();
    let (_, sweep) = crate::excitation::chirp_signal(chirp, frame_dt);
    let hover = cascade.hover_throttle();
    let commands: Vec<PilotCommand> = sweep
        .iter()
        .map(|value| {
            let mut cmd = PilotCommand {
                throttle: hover,
                ..Default::default()
            };
            match axis {
                Axis::Roll => cmd.roll_deg = *value,
                Axis::Pitch => cmd.pitch_deg = *value,
                Axis::Yaw => cmd.yaw_rate_dps = *value,
            }
            cmd
        })
        .collect();

    let run = closed_loop_simulate(
        plant,
        cascade,
        params,
        &Scenario::PilotTrace { commands },
        chirp.total_duration(),
        noise,
        seed,
        FeedbackSource::Sensors,
    )
    .map_err(|e| SysIdError::SweepRunFailed {
        reason: e.to_string(),
    })?;
    if let Some(t) = run.aborted_at {
        return Err(SysIdError::SweepRunFailed {
            reason: format!("sweep run diverged at t = {t:.2} s"),
        });
    }

    let validation_axis = match axis {
        Axis::Roll => crate::validation::ValidationAxis::Roll,
        Axis::Pitch => crate::validation::ValidationAxis::Pitch,
        Axis::Yaw => crate::validation::ValidationAxis::YawRate,
    };
    let (input, output) = crate::validation::axis_channels(&run.records, validation_axis)
        .map_err(|e| SysIdError::SweepRunFailed {
            reason: e.to_string(),
        })?;

    let frf = estimate_frf(&input, &output, cascade.loop_rate_hz, window)?;
    let structure = match axis {
        Axis::Roll => LoesStructure::RollAngle,
        Axis::Pitch => LoesStructure::PitchAngle,
        Axis::Yaw => LoesStructure::YawRate,
    };
    let (model, cost_sequence) = fit_loes(&frf, structure, fit_band, options)?;

    Ok(IdentReport {
        frf,
        model,
        cost_sequence,
        fit_band,
        log: run.records,
        saturation_events: run.saturation_events,
    })
}

/// Fitted-model text summary: versioned key-value form plus the printed
/// rational expression.
pub fn model_to_string(model: &LoesModel) -> String {
    format!(
        "quadlab-v1 loes-model\n\
         # {}\n\
         structure = {}\n\
         b1 = {:.10e}\n\
         b0 = {:.10e}\n\
         a1 = {:.10e}\n\
         a0 = {:.10e}\n\
         tau = {:.10e}\n\
         fit_cost = {:.10e}\n",
        model.display_tf(),
        model.structure.name(),
        model.b1,
        model.b0,
        model.a1,
        model.a0,
        model.tau,
        model.fit_cost,
    )
}

/// Parse a model summary produced by `model_to_string`.
pub fn model_from_string(text: &str) -> Result<LoesModel, String> {
    let mut structure = None;
    let mut fields = [f64::NAN; 6];
    const NAMES: [&str; 6] = ["b1", "b0", "a1", "a0", "tau", "fit_cost"];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (idx == 0 && line.starts_with("quadlab-v1")) {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", idx + 1))?;
        let key = key.trim();
        let value = value.trim();
        if key == "structure" {
            structure = Some(match value {
                "roll-angle" => LoesStructure::RollAngle,
                "pitch-angle" => LoesStructure::PitchAngle,
                "yaw-rate" => LoesStructure::YawRate,
                other => return Err(format!("unknown structure '{other}'")),
            });
            continue;
        }
        let slot = NAMES
            .iter()
            .position(|n| *n == key)
            .ok_or_else(|| format!("unknown model key '{key}'"))?;
        fields[slot] = value
            .parse::<f64>()
            .map_err(|e| format!("bad value for '{key}': {e}"))?;
    }
    let structure = structure.ok_or("missing structure")?;
    if fields.iter().take(5).any(|v| v.is_nan()) {
        return Err("missing model coefficients".into());
    }
    Ok(LoesModel {
        structure,
        b1: fields[0],
        b0: fields[1],
        a1: fields[2],
        a0: fields[3],
        tau: fields[4],
        fit_cost: fields[5],
    })
}

/// FRF/coherence table as CSV (freq_rad_s, mag_db, phase_deg, coherence).
pub fn frf_to_csv(frf: &FrequencyResponse) -> String {
    let mut out = String::from("freq_rad_s,mag_db,phase_deg,coherence\n");
    for i in 0..frf.freqs.len() {
        let mag_db = 20.0 * frf.response[i].norm().max(1e-300).log10();
        let phase = frf.response[i].arg().to_degrees();
        out.push_str(&format!(
            "{:.6},{:.6},{:.6},{:.6}\n",
            frf.freqs[i], mag_db, phase, frf.coherence[i]
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// The roll-angle reference model used across the identification tests.
    pub fn reference_roll_model() -> LoesModel {
        LoesModel {
            structure: LoesStructure::RollAngle,
            b1: 2.305,
            b0: 0.0,
            a1: 3.894,
            a0: 3.967,
            tau: 0.197,
            fit_cost: 0.0,
        }
    }

    fn reference_yaw_model() -> LoesModel {
        LoesModel {
            structure: LoesStructure::YawRate,
            b1: 10.68,
            b0: 138.8,
            a1: 11.64,
            a0: 163.8,
            tau: 0.0592,
            fit_cost: 0.0,
        }
    }

    #[test]
    fn pure_gain_system_estimates_exactly() {
        let n = 8192;
        let mut input = Vec::with_capacity(n);
        let mut x = 0x12345678u64;
        for _ in 0..n {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            input.push(((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        }
        let output: Vec<f64> = input.iter().map(|v| 2.0 * v).collect();
        let frf = estimate_frf(&input, &output, 100.0, &WindowConfig::default()).unwrap();
        for i in 0..frf.freqs.len() {
            assert_abs_diff_eq!(frf.response[i].re, 2.0, epsilon = 1e-6);
            assert_abs_diff_eq!(frf.response[i].im, 0.0, epsilon = 1e-6);
            assert!(frf.coherence[i] > 1.0 - 1e-6);
        }
        assert!(frf.window_count >= COHERENCE_VALID_WINDOWS);
    }

    #[test]
    fn short_record_rejected() {
        let xs = vec![0.0; 3000];
        match estimate_frf(&xs, &xs, 100.0, &WindowConfig::default()) {
            Err(SysIdError::RecordTooShort { .. }) => {}
            other => panic!("expected RecordTooShort, got {other:?}"),
        }
    }

    #[test]
    fn nonuniform_times_detected() {
        let mut times: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        times[50] += 0.003;
        assert!(matches!(
            check_uniform_sampling(&times),
            Err(SysIdError::NonuniformSampling { .. })
        ));
        let uniform: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        assert_relative_eq!(check_uniform_sampling(&uniform).unwrap(), 100.0, max_relative = 1e-9);
    }

    #[test]
    fn frf_is_scale_equivariant() {
        let n = 6000;
        let mut input = Vec::with_capacity(n);
        let mut x = 0xabcdefu64;
        for _ in 0..n {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
            input.push(((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        }
        // Simple IIR as the system under test.
        let respond = |xs: &[f64]| {
            let mut y = 0.0;
            xs.iter()
                .map(|v| {
                    y = 0.9 * y + 0.1 * v;
                    y
                })
                .collect::<Vec<f64>>()
        };
        let output = respond(&input);
        let scaled: Vec<f64> = input.iter().map(|v| 3.0 * v).collect();
        let cfg = WindowConfig {
            length: 1024,
            overlap: 0.5,
        };
        let frf1 = estimate_frf(&input, &output, 100.0, &cfg).unwrap();
        let frf3 = estimate_frf(&scaled, &output, 100.0, &cfg).unwrap();
        for i in 0..frf1.freqs.len() {
            assert_relative_eq!(
                frf1.response[i].norm(),
                3.0 * frf3.response[i].norm(),
                max_relative = 1e-9
            );
            assert_abs_diff_eq!(frf1.coherence[i], frf3.coherence[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn reference_tf_frequency_points() {
        let model = reference_roll_model();
        // Low-frequency magnitude vanishes with the s numerator.
        let h = tf_frequency_response(&model, &[1e-4, 10.0]);
        assert!(h[0].norm() < 1e-3);
        // Delay contributes -w·tau of phase at 10 rad/s relative to the
        // rational part alone.
        let mut no_delay = model;
        no_delay.tau = 0.0;
        let h0 = tf_frequency_response(&no_delay, &[10.0]);
        let dphase = h[1].arg() - h0[0].arg();
        let wrapped = (dphase + PI).rem_euclid(2.0 * PI) - PI;
        assert_abs_diff_eq!(wrapped, (-0.197f64 * 10.0 + PI).rem_euclid(2.0 * PI) - PI, epsilon = 1e-9);

        let yaw = reference_yaw_model();
        let hy = tf_frequency_response(&yaw, &[1e-6]);
        assert_relative_eq!(hy[0].norm(), 138.8 / 163.8, max_relative = 1e-6);
        assert_abs_diff_eq!(yaw.dc_gain(), 0.8474, epsilon = 1e-4);
    }

    #[test]
    fn fit_recovers_synthesized_roll_model() {
        let model = reference_roll_model();
        let freqs: Vec<f64> = (1..200).map(|k| 0.05 + k as f64 * 0.06).collect();
        let response = tf_frequency_response(&model, &freqs);
        let frf = FrequencyResponse {
            coherence: vec![1.0; freqs.len()],
            freqs,
            response,
            window_length: 0,
            overlap: 0.0,
            window_count: 8,
            clamp_violations: 0,
        };
        let (fit, sequence) =
            fit_loes(&frf, LoesStructure::RollAngle, (0.1, 12.0), &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.natural_frequency(), 3.967f64.sqrt(), max_relative = 0.02);
        assert_relative_eq!(fit.damping_ratio(), 0.978, max_relative = 0.05);
        assert_abs_diff_eq!(fit.tau, 0.197, epsilon = 0.02);
        // Best-so-far cost is monotone across starts.
        for pair in sequence.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15);
        }
    }

    #[test]
    fn fit_recovers_synthesized_yaw_model() {
        let model = reference_yaw_model();
        let freqs: Vec<f64> = (1..300).map(|k| 0.1 + k as f64 * 0.1).collect();
        let response = tf_frequency_response(&model, &freqs);
        let frf = FrequencyResponse {
            coherence: vec![1.0; freqs.len()],
            freqs,
            response,
            window_length: 0,
            overlap: 0.0,
            window_count: 8,
            clamp_violations: 0,
        };
        let (fit, _) =
            fit_loes(&frf, LoesStructure::YawRate, (0.2, 25.0), &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.dc_gain(), 0.8474, max_relative = 0.02);
    }

    #[test]
    fn flat_response_rejected_for_roll_structure() {
        let freqs: Vec<f64> = (1..100).map(|k| 0.1 * k as f64).collect();
        let frf = FrequencyResponse {
            response: vec![Complex64::new(1.0, 0.0); freqs.len()],
            coherence: vec![1.0; freqs.len()],
            freqs,
            window_length: 0,
            overlap: 0.0,
            window_count: 8,
            clamp_violations: 0,
        };
        match fit_loes(&frf, LoesStructure::RollAngle, (0.2, 9.0), &FitOptions::default()) {
            Err(SysIdError::StructureMismatch { mag_range_db }) => {
                assert!(mag_range_db < 1e-9);
            }
            Ok((m, _)) => panic!("flat response should not fit, got {}", m.display_tf()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn low_coherence_points_are_excluded() {
        let model = reference_roll_model();
        let freqs: Vec<f64> = (1..150).map(|k| 0.05 + k as f64 * 0.08).collect();
        let response = tf_frequency_response(&model, &freqs);
        let coherence: Vec<f64> = freqs
            .iter()
            .map(|w| if *w > 8.0 { 0.2 } else { 0.95 })
            .collect();
        let frf = FrequencyResponse {
            freqs: freqs.clone(),
            response,
            coherence,
            window_length: 0,
            overlap: 0.0,
            window_count: 8,
            clamp_violations: 0,
        };
        // Band entirely under the floor: insufficient coherence.
        match fit_loes(&frf, LoesStructure::RollAngle, (9.0, 12.0), &FitOptions::default()) {
            Err(SysIdError::InsufficientCoherence { .. }) => {}
            other => panic!("expected InsufficientCoherence, got {other:?}"),
        }
        // Mixed band still fits from the coherent points.
        let (fit, _) =
            fit_loes(&frf, LoesStructure::RollAngle, (0.1, 12.0), &FitOptions::default()).unwrap();
        assert_relative_eq!(fit.natural_frequency(), 1.9917, max_relative = 0.02);
    }

    #[test]
    fn refitting_own_output_is_idempotent() {
        let model = reference_roll_model();
        let freqs: Vec<f64> = (1..150).map(|k| 0.05 + k as f64 * 0.08).collect();
        let first = FrequencyResponse {
            response: tf_frequency_response(&model, &freqs),
            coherence: vec![1.0; freqs.len()],
            freqs: freqs.clone(),
            window_length: 0,
            overlap: 0.0,
            window_count: 8,
            clamp_violations: 0,
        };
        let (fit1, _) =
            fit_loes(&first, LoesStructure::RollAngle, (0.1, 12.0), &FitOptions::default())
                .unwrap();
        let second = FrequencyResponse {
            response: tf_frequency_response(&fit1, &freqs),
            coherence: vec![1.0; freqs.len()],
            freqs: freqs.clone(),
            window_length: 0,
            overlap: 0.0,
            window_count: 8,
            clamp_violations: 0,
        };
        let (fit2, _) =
            fit_loes(&second, LoesStructure::RollAngle, (0.1, 12.0), &FitOptions::default())
                .unwrap();
        assert_relative_eq!(fit1.natural_frequency(), fit2.natural_frequency(), max_relative = 1e-3);
        assert_relative_eq!(fit1.damping_ratio(), fit2.damping_ratio(), max_relative = 1e-2);
        assert_abs_diff_eq!(fit1.tau, fit2.tau, epsilon = 1e-3);
    }

    #[test]
    fn stationary_noiseless_pipeline_has_near_unit_coherence() {
        // Broadband stationary excitation through a linear filter: coherence
        // exceeds 0.999 across the band once the window dwarfs the filter
        // memory.
        let n = 60_000;
        let mut x = 0x5555u64;
        let mut input = Vec::with_capacity(n);
        for _ in 0..n {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            input.push(((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5);
        }
        let mut y1 = 0.0;
        let mut y2 = 0.0;
        let output: Vec<f64> = input
            .iter()
            .map(|u| {
                let y = 0.05 * u + 1.6 * y1 - 0.68 * y2;
                y2 = y1;
                y1 = y;
                y
            })
            .collect();
        let cfg = WindowConfig {
            length: 4096,
            overlap: 0.5,
        };
        let frf = estimate_frf(&input, &output, 100.0, &cfg).unwrap();
        let min_coh = frf.min_coherence(0.5, 30.0);
        assert!(min_coh > 0.999, "min coherence {min_coh}");
        for g in &frf.coherence {
            assert!((0.0..=1.0).contains(g));
        }
        assert_eq!(frf.clamp_violations, 0);
    }

    #[test]
    fn manual_style_sweep_loses_coherence_at_high_frequency() {
        // A hand-flown sweep: wandering amplitude, frequency capped near
        // 10 rad/s. Against the same sensor noise, the automated sweep keeps
        // coherence above 10 rad/s while the manual one loses it.
        use crate::control::{
            closed_loop_simulate, CascadeConfig, FeedbackSource, PlantKind, Scenario,
        };
        use crate::dynamics::VehicleParams;
        use crate::excitation::ChirpSpec;
        use crate::sensors::{NoiseConfig, PilotCommand};
        use crate::validation::{axis_channels, ValidationAxis};

        let params = VehicleParams::default();
        let cfg = CascadeConfig::default();
        let spec = ChirpSpec::default();
        let dt = cfg.sample_time();
        let noise = NoiseConfig {
            accel_sigma: 0.15,
            gyro_sigma: 0.01,
            gyro_bias_sigma: 0.0,
            gyro_bias_walk: 0.0,
        };

        let (_, automated) = crate::excitation::chirp_signal(&spec, dt);

        // Manual emulation: Euler phase with the schedule frequency capped at
        // 10 rad/s and wobbled, amplitude wandering between 50 % and 140 %.
        let mut rng_state = 0x2468aceu64;
        let mut next = move || {
            rng_state = rng_state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((rng_state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut phase = 0.0;
        let mut wobble = 0.0;
        let mut amp_mod = 1.0;
        let manual: Vec<f64> = automated
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let t = k as f64 * dt;
                if t < spec.trim_pad || t > spec.trim_pad + spec.t_rec {
                    return 0.0;
                }
                wobble += 0.02 * next();
                amp_mod = (amp_mod + 0.01 * next()).clamp(0.5, 1.4);
                let scheduled = spec.instantaneous_frequency(t - spec.trim_pad);
                let w = scheduled.min(10.0) * (1.0 + 0.2 * wobble.clamp(-1.0, 1.0));
                phase += w * dt;
                spec.amplitude * amp_mod * phase.sin()
            })
            .collect();

        let run_sweep = |stick: &[f64]| {
            let commands: Vec<PilotCommand> = stick
                .iter()
                .map(|v| PilotCommand {
                    roll_deg: *v,
                    throttle: cfg.hover_throttle(),
                    ..Default::default()
                })
                .collect();
            let run = closed_loop_simulate(
                &PlantKind::Nonlinear,
                &cfg,
                &params,
                &Scenario::PilotTrace { commands },
                spec.total_duration(),
                &noise,
                77,
                FeedbackSource::Sensors,
            )
            .unwrap();
            let (input, output) = axis_channels(&run.records, ValidationAxis::Roll).unwrap();
            estimate_frf(&input, &output, cfg.loop_rate_hz, &WindowConfig::default()).unwrap()
        };

        let frf_auto = run_sweep(&automated);
        let frf_manual = run_sweep(&manual);
        let band = (10.0, 20.0);
        let auto_min = frf_auto.min_coherence(band.0, band.1);
        let manual_min = frf_manual.min_coherence(band.0, band.1);
        assert!(
            manual_min < auto_min - 0.1,
            "manual sweep coherence {manual_min} not degraded vs automated {auto_min} above 10 rad/s"
        );
        // The low-frequency band stays adequate for both.
        assert!(frf_manual.min_coherence(1.0, 6.0) > 0.8);
    }

    #[test]
    fn model_summary_round_trips() {
        let model = reference_roll_model();
        let text = model_to_string(&model);
        assert!(text.starts_with("quadlab-v1 loes-model"));
        let back = model_from_string(&text).unwrap();
        assert_eq!(model.b1, back.b1);
        assert_eq!(model.a1, back.a1);
        assert_eq!(model.a0, back.a0);
        assert_eq!(model.tau, back.tau);
        assert_eq!(model.structure, back.structure);
        assert!(model_from_string("quadlab-v1 loes-model
structure = banana
").is_err());
    }

    #[test]
    fn csv_table_has_all_rows() {
        let freqs: Vec<f64> = (1..10).map(|k| k as f64).collect();
        let frf = FrequencyResponse {
            response: vec![Complex64::new(1.0, 1.0); freqs.len()],
            coherence: vec![0.9; freqs.len()],
            freqs,
            window_length: 256,
            overlap: 0.5,
            window_count: 6,
            clamp_violations: 0,
        };
        let csv = frf_to_csv(&frf);
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("freq_rad_s,"));
    }
}
