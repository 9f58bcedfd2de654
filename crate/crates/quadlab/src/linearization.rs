//! Numerical linearization of the nonlinear plant about a trim point, plus
//! open-loop eigenvalue and controllability analysis.
//!
//! Internally states are ordered velocity-first (u v w p q r x y z phi theta
//! psi), matching `BodyState`. Reports can permute into the position-first
//! order (x y z u v w phi theta psi p q r) via `ReportOrder`.

use nalgebra::{Complex, DMatrix, SMatrix, SVector};

use crate::dynamics::{
    eom_derivative, BodyState, ControlEfforts, DynamicsError, VehicleParams,
};

pub type StateMatrix = SMatrix<f64, 12, 12>;
pub type InputMatrix = SMatrix<f64, 12, 4>;
pub type StateVector = SVector<f64, 12>;

/// Named state components for order-independent matrix access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateVar {
    U,
    V,
    W,
    P,
    Q,
    R,
    X,
    Y,
    Z,
    Phi,
    Theta,
    Psi,
}

impl StateVar {
    pub const ALL: [StateVar; 12] = [
        StateVar::U,
        StateVar::V,
        StateVar::W,
        StateVar::P,
        StateVar::Q,
        StateVar::R,
        StateVar::X,
        StateVar::Y,
        StateVar::Z,
        StateVar::Phi,
        StateVar::Theta,
        StateVar::Psi,
    ];

    /// Index in the internal canonical (velocity-first) ordering.
    pub fn index(self) -> usize {
        match self {
            StateVar::U => 0,
            StateVar::V => 1,
            StateVar::W => 2,
            StateVar::P => 3,
            StateVar::Q => 4,
            StateVar::R => 5,
            StateVar::X => 6,
            StateVar::Y => 7,
            StateVar::Z => 8,
            StateVar::Phi => 9,
            StateVar::Theta => 10,
            StateVar::Psi => 11,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateVar::U => "u",
            StateVar::V => "v",
            StateVar::W => "w",
            StateVar::P => "p",
            StateVar::Q => "q",
            StateVar::R => "r",
            StateVar::X => "x",
            StateVar::Y => "y",
            StateVar::Z => "z",
            StateVar::Phi => "phi",
            StateVar::Theta => "theta",
            StateVar::Psi => "psi",
        }
    }
}

/// Position-first reporting order (X Y Z U V W phi theta psi P Q R).
pub const REPORT_ORDER: [StateVar; 12] = [
    StateVar::X,
    StateVar::Y,
    StateVar::Z,
    StateVar::U,
    StateVar::V,
    StateVar::W,
    StateVar::Phi,
    StateVar::Theta,
    StateVar::Psi,
    StateVar::P,
    StateVar::Q,
    StateVar::R,
];

/// Input channels of the linear model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputChannel {
    U1,
    U2,
    U3,
    U4,
}

impl InputChannel {
    pub const ALL: [InputChannel; 4] =
        [InputChannel::U1, InputChannel::U2, InputChannel::U3, InputChannel::U4];

    pub fn index(self) -> usize {
        match self {
            InputChannel::U1 => 0,
            InputChannel::U2 => 1,
            InputChannel::U3 => 2,
            InputChannel::U4 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InputChannel::U1 => "U1",
            InputChannel::U2 => "U2",
            InputChannel::U3 => "U3",
            InputChannel::U4 => "U4",
        }
    }
}

/// Linear state-space model x' = A x + B u, y = C x + D u about a trim point.
///
/// C is always the 12x12 identity and D the 12x4 zero matrix.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub c: StateMatrix,
    pub d: InputMatrix,
    /// State and efforts the model is linearized about.
    pub trim: (BodyState, ControlEfforts),
}

impl LinearModel {
    /// A entry by named row (derivative) and column (state).
    pub fn entry(&self, row: StateVar, col: StateVar) -> f64 {
        self.a[(row.index(), col.index())]
    }

    /// B entry by named row (derivative) and input channel.
    pub fn input_entry(&self, row: StateVar, input: InputChannel) -> f64 {
        self.b[(row.index(), input.index())]
    }

    /// A permuted into the position-first reporting order.
    pub fn a_report_order(&self) -> StateMatrix {
        let mut out = StateMatrix::zeros();
        for (i, ri) in REPORT_ORDER.iter().enumerate() {
            for (j, rj) in REPORT_ORDER.iter().enumerate() {
                out[(i, j)] = self.entry(*ri, *rj);
            }
        }
        out
    }

    /// B permuted into the position-first reporting order.
    pub fn b_report_order(&self) -> InputMatrix {
        let mut out = InputMatrix::zeros();
        for (i, ri) in REPORT_ORDER.iter().enumerate() {
            for j in 0..4 {
                out[(i, j)] = self.b[(ri.index(), j)];
            }
        }
        out
    }
}

/// Linearize the equations of motion at `(state, efforts)` by central finite
/// differences with per-component step h_i = max(1e-6, 1e-6·|x_i|).
pub fn linearize_at(
    state: &BodyState,
    efforts: &ControlEfforts,
    params: &VehicleParams,
) -> Result<LinearModel, DynamicsError> {
    // Fail fast on singular trim attitude before perturbing.
    eom_derivative(state, efforts, params)?;

    let x0 = state.to_array();
    let mut a = StateMatrix::zeros();
    for j in 0..12 {
        let h = step_size(x0[j]);
        let mut plus = x0;
        let mut minus = x0;
        plus[j] += h;
        minus[j] -= h;
        let fp = eom_derivative(&BodyState::from_array(plus), efforts, params)?.to_array();
        let fm = eom_derivative(&BodyState::from_array(minus), efforts, params)?.to_array();
        for i in 0..12 {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }

    let u0 = [efforts.u1, efforts.u2, efforts.u3, efforts.u4];
    let mut b = InputMatrix::zeros();
    for j in 0..4 {
        let h = step_size(u0[j]);
        let mut plus = *efforts;
        let mut minus = *efforts;
        match j {
            0 => {
                plus.u1 += h;
                minus.u1 -= h;
            }
            1 => {
                plus.u2 += h;
                minus.u2 -= h;
            }
            2 => {
                plus.u3 += h;
                minus.u3 -= h;
            }
            _ => {
                plus.u4 += h;
                minus.u4 -= h;
            }
        }
        let fp = eom_derivative(state, &plus, params)?.to_array();
        let fm = eom_derivative(state, &minus, params)?.to_array();
        for i in 0..12 {
            b[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }

    Ok(LinearModel {
        a,
        b,
        c: StateMatrix::identity(),
        d: InputMatrix::zeros(),
        trim: (*state, *efforts),
    })
}

fn step_size(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

/// Pole classification for the open-loop report.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub poles: Vec<Complex<f64>>,
    /// True only when every pole has real part < -tolerance.
    pub asymptotically_stable: bool,
    /// True when some pole has real part > +tolerance.
    pub has_unstable_pole: bool,
    pub tolerance: f64,
}

/// Eigenvalues of A. The hover-linearized model is nilpotent (integrator
/// chains), so all twelve poles sit at the origin.
///
/// Runs the permutation step of standard balancing first: rows/columns whose
/// active off-diagonal part is exactly zero are isolated and contribute their
/// diagonal entry directly, so pure integrator chains yield exact zeros. QR
/// iteration only sees the remaining coupled block.
pub fn eigenvalues(model: &LinearModel) -> Vec<Complex<f64>> {
    let dm = DMatrix::from_fn(12, 12, |i, j| model.a[(i, j)]);
    general_eigenvalues(&dm)
}

/// Eigenvalues of an arbitrary square matrix with the isolation pre-step.
pub fn general_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut active: Vec<usize> = (0..n).collect();
    let mut isolated: Vec<f64> = Vec::new();
    loop {
        let mut progress = false;
        let mut k = 0;
        while k < active.len() {
            let i = active[k];
            let row_zero = active.iter().all(|&j| j == i || m[(i, j)] == 0.0);
            let col_zero = active.iter().all(|&j| j == i || m[(j, i)] == 0.0);
            if row_zero || col_zero {
                isolated.push(m[(i, i)]);
                active.remove(k);
                progress = true;
            } else {
                k += 1;
            }
        }
        if !progress {
            break;
        }
    }
    let mut eig: Vec<Complex<f64>> = isolated
        .into_iter()
        .map(|d| Complex::new(d, 0.0))
        .collect();
    if !active.is_empty() {
        let sub = DMatrix::from_fn(active.len(), active.len(), |i, j| {
            m[(active[i], active[j])]
        });
        eig.extend(sub.complex_eigenvalues().iter().copied());
    }
    eig
}

/// Classify the poles with the given real-part tolerance.
pub fn stability_report(model: &LinearModel, tolerance: f64) -> StabilityReport {
    let poles = eigenvalues(model);
    let asymptotically_stable = poles.iter().all(|l| l.re < -tolerance);
    let has_unstable_pole = poles.iter().any(|l| l.re > tolerance);
    StabilityReport {
        poles,
        asymptotically_stable,
        has_unstable_pole,
        tolerance,
    }
}

/// Rank of the Krylov controllability matrix [B AB ... A^11 B] via SVD with
/// threshold 1e-8 times the largest singular value.
pub fn controllability(model: &LinearModel) -> (usize, bool) {
    let mut krylov = DMatrix::zeros(12, 48);
    let mut block = model.b;
    for k in 0..12 {
        for i in 0..12 {
            for j in 0..4 {
                krylov[(i, 4 * k + j)] = block[(i, j)];
            }
        }
        block = model.a * block;
    }
    let svd = krylov.svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    if smax == 0.0 {
        return (0, false);
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > 1e-8 * smax)
        .count();
    (rank, rank == 12)
}

/// Free response of x' = A x from the initial condition equivalent of a unit
/// impulse on one input channel (x0 = B·e_channel), sampled every `dt`.
///
/// Returns (times, states) with states in the internal canonical order.
pub fn impulse_response(
    model: &LinearModel,
    channel: InputChannel,
    dt: f64,
    duration: f64,
) -> (Vec<f64>, Vec<StateVector>) {
    let x0: StateVector = model.b.column(channel.index()).into();
    initial_condition_response(model, &x0, dt, duration)
}

/// Free response of x' = A x from an arbitrary initial state, integrated with
/// RK4 at the sample step.
pub fn initial_condition_response(
    model: &LinearModel,
    x0: &StateVector,
    dt: f64,
    duration: f64,
) -> (Vec<f64>, Vec<StateVector>) {
    assert!(dt > 0.0, "dt must be positive");
    let steps = (duration / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = *x0;
    for k in 0..=steps {
        times.push(k as f64 * dt);
        states.push(x);
        let k1 = model.a * x;
        let k2 = model.a * (x + k1 * (dt / 2.0));
        let k3 = model.a * (x + k2 * (dt / 2.0));
        let k4 = model.a * (x + k3 * dt);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    (times, states)
}

/// State-space entries exactly as printed in the source report, interpreted
/// in velocity-first row/column order (the integrator rows only cohere under
/// that reading). Used for structural comparison and the errata report, never
/// as model values.
pub mod printed {
    /// (row, col, value) of the printed A-matrix entries that a corrected
    /// hover linearization cannot produce.
    pub const A_DISCREPANT: [(&str, &str, f64); 3] = [
        ("w", "phi", -9.81),
        ("p", "q", -1.63),
        ("q", "p", 1.63),
    ];

    /// Printed nonzero B entries (row, input, value).
    pub const B_PRINTED: [(&str, &str, f64); 4] = [
        ("w", "U1", 0.7143),
        ("p", "U2", 12.3457),
        ("q", "U3", 12.3457),
        ("r", "U4", 7.0423),
    ];
}

/// One errata line: a printed entry the computed model does not reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct ErratumEntry {
    pub location: String,
    pub printed: f64,
    pub computed: f64,
}

/// Compare the computed hover model against the printed state-space entries.
///
/// Returns the list of printed entries absent from (or numerically different
/// in) the computed model. The B-matrix zero/nonzero pattern is structural
/// and matches; only magnitudes disagree.
pub fn errata_report(model: &LinearModel) -> Vec<ErratumEntry> {
    let var = |name: &str| {
        StateVar::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .expect("known state name")
    };
    let input = |name: &str| {
        InputChannel::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .expect("known input name")
    };

    let mut entries = Vec::new();
    for (row, col, value) in printed::A_DISCREPANT {
        let computed = model.entry(var(row), var(col));
        if (computed - value).abs() > 1e-6 {
            entries.push(ErratumEntry {
                location: format!("A({row}', {col})"),
                printed: value,
                computed,
            });
        }
    }
    for (row, ch, value) in printed::B_PRINTED {
        let computed = model.input_entry(var(row), input(ch));
        if (computed - value).abs() > 1e-6 {
            entries.push(ErratumEntry {
                location: format!("B({row}', {ch})"),
                printed: value,
                computed,
            });
        }
    }
    entries
}

/// Serialize A, B, C, D to a plain-text row-major matrix file with a
/// documented header. Readable back by external analysis tools.
pub fn model_to_text(model: &LinearModel) -> String {
    let mut out = String::new();
    out.push_str("quadlab-v1 linear-model\n");
    out.push_str("# state order (rows/cols): u v w p q r x y z phi theta psi\n");
    out.push_str("# inputs: U1 U2 U3 U4\n");
    for (name, rows, cols) in [("A", 12, 12), ("B", 12, 4), ("C", 12, 12), ("D", 12, 4)] {
        out.push_str(&format!("{name} {rows} {cols}\n"));
        for i in 0..rows {
            let row: Vec<String> = (0..cols)
                .map(|j| {
                    let v = match name {
                        "A" => model.a[(i, j)],
                        "B" => model.b[(i, j)],
                        "C" => model.c[(i, j)],
                        _ => model.d[(i, j)],
                    };
                    format!("{v:.9e}")
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}
