//! One recurrent network (cell + head), its windowed forward/backward pass,
//! and flat parameter serialization in frozen declaration order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::lstm::{lstm_backward, lstm_step, LstmGrads, LstmParams, LstmStepCache, N_GATES};
use super::mlp::{MlpCache, MlpGrads, MlpParams};

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub lstm: LstmParams,
    pub head: MlpParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub lstm: LstmGrads,
    pub head: MlpGrads,
}

/// Carried recurrent state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub h: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl RecurrentState {
    pub fn zeros(hidden: usize, batch: usize) -> Self {
        RecurrentState {
            h: DMatrix::zeros(hidden, batch),
            c: DMatrix::zeros(hidden, batch),
        }
    }

    pub fn reset(&mut self) {
        self.h.fill(0.0);
        self.c.fill(0.0);
    }

    /// Extracts one column as a batch-1 state.
    pub fn column(&self, col: usize) -> RecurrentState {
        RecurrentState {
            h: DMatrix::from_column_slice(self.h.nrows(), 1, self.h.column(col).as_slice()),
            c: DMatrix::from_column_slice(self.c.nrows(), 1, self.c.column(col).as_slice()),
        }
    }
}

impl NetParams {
    /// Zero-initialized network with the given head widths (excluding the
    /// input width, which is the recurrent hidden size).
    pub fn zeros(input: usize, hidden: usize, head_dims: &[usize], out: usize) -> Self {
        let mut dims = vec![hidden];
        dims.extend_from_slice(head_dims);
        dims.push(out);
        NetParams {
            lstm: LstmParams::zeros(input, hidden),
            head: MlpParams::zeros(&dims),
        }
    }

    /// Uniform ±1/√fan_in initialization.
    pub fn init(&mut self, rng: &mut impl Rng) {
        let mut fill = |m: &mut [f64], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in m {
                *v = rng.gen_range(-bound..bound);
            }
        };
        let input = self.lstm.input_dim();
        let hidden = self.lstm.hidden_dim();
        for k in 0..N_GATES {
            fill(self.lstm.w[k].as_mut_slice(), input);
            fill(self.lstm.u[k].as_mut_slice(), hidden);
            fill(self.lstm.b[k].as_mut_slice(), hidden);
        }
        for (w, b) in &mut self.head.layers {
            let fan_in = w.ncols();
            fill(w.as_mut_slice(), fan_in);
            fill(b.as_mut_slice(), fan_in);
        }
    }

    pub fn zero_grads(&self) -> NetGrads {
        NetGrads {
            lstm: self.lstm.zero_grads(),
            head: self.head.zero_grads(),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.lstm.hidden_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.lstm.input_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.head.layers.last().map_or(0, |(w, _)| w.nrows())
    }
}

/// Recorded forward pass over a truncated window.
pub struct WindowCache {
    pub lstm_steps: Vec<LstmStepCache>,
    pub head_caches: Vec<MlpCache>,
    /// Head outputs per step, out×batch.
    pub outputs: Vec<DMatrix<f64>>,
    /// Final recurrent state after the window.
    pub state: RecurrentState,
}

/// Runs the network over `xs` (one in×batch matrix per step). `resets[t]`
/// zeroes a column's carried state before step t.
pub fn forward_window(
    params: &NetParams,
    xs: &[DMatrix<f64>],
    resets: &[Vec<bool>],
    initial: &RecurrentState,
) -> WindowCache {
    assert_eq!(xs.len(), resets.len());
    let mut h = initial.h.clone();
    let mut c = initial.c.clone();
    let mut lstm_steps = Vec::with_capacity(xs.len());
    let mut head_caches = Vec::with_capacity(xs.len());
    let mut outputs = Vec::with_capacity(xs.len());
    for (x, reset) in xs.iter().zip(resets) {
        let step = lstm_step(&params.lstm, x, &h, &c, reset);
        h = step.h();
        c = step.c.clone();
        let head = params.head.forward(&h);
        outputs.push(head.output.clone());
        lstm_steps.push(step);
        head_caches.push(head);
    }
    WindowCache {
        lstm_steps,
        head_caches,
        outputs,
        state: RecurrentState { h, c },
    }
}

/// Exact reverse-mode gradients w.r.t. every parameter given dL/doutput per
/// step. Truncated at the window boundary.
pub fn backward_window(
    params: &NetParams,
    cache: &WindowCache,
    d_outputs: &[DMatrix<f64>],
) -> NetGrads {
    assert_eq!(d_outputs.len(), cache.outputs.len());
    let mut head_grads = params.head.zero_grads();
    let mut d_h = Vec::with_capacity(d_outputs.len());
    for (head_cache, d_out) in cache.head_caches.iter().zip(d_outputs) {
        let (grads, dx) = params.head.backward(head_cache, d_out);
        for (acc, g) in head_grads.layers.iter_mut().zip(grads.layers) {
            acc.0 += g.0;
            acc.1 += g.1;
        }
        d_h.push(dx);
    }
    let lstm_grads = lstm_backward(&params.lstm, &cache.lstm_steps, &d_h);
    NetGrads {
        lstm: lstm_grads,
        head: head_grads,
    }
}

/// Single-step convenience forward (batch 1), updating the carried state.
pub fn forward_step(
    params: &NetParams,
    x: &[f64],
    state: &mut RecurrentState,
) -> DVector<f64> {
    let xm = DMatrix::from_column_slice(x.len(), 1, x);
    let step = lstm_step(&params.lstm, &xm, &state.h, &state.c, &[false]);
    state.h = step.h();
    state.c = step.c.clone();
    let head = params.head.forward(&state.h);
    DVector::from_column_slice(head.output.as_slice())
}

// --- flat parameter layout -------------------------------------------------

/// Visits every parameter block in frozen declaration order.
pub fn visit_blocks<'a>(params: &'a NetParams, mut f: impl FnMut(String, &'a [f64])) {
    const GATE: [&str; 4] = ["input", "forget", "output", "candidate"];
    for k in 0..N_GATES {
        f(format!("lstm.w.{}", GATE[k]), params.lstm.w[k].as_slice());
    }
    for k in 0..N_GATES {
        f(format!("lstm.u.{}", GATE[k]), params.lstm.u[k].as_slice());
    }
    for k in 0..N_GATES {
        f(format!("lstm.b.{}", GATE[k]), params.lstm.b[k].as_slice());
    }
    for (i, (w, b)) in params.head.layers.iter().enumerate() {
        f(format!("head.{i}.w"), w.as_slice());
        f(format!("head.{i}.b"), b.as_slice());
    }
}

pub fn flatten_into(params: &NetParams, out: &mut Vec<f64>) {
    visit_blocks(params, |_, block| out.extend_from_slice(block));
}

pub fn unflatten_from(params: &mut NetParams, data: &[f64], cursor: &mut usize) {
    let mut take = |slice: &mut [f64]| {
        slice.copy_from_slice(&data[*cursor..*cursor + slice.len()]);
        *cursor += slice.len();
    };
    for k in 0..N_GATES {
        take(params.lstm.w[k].as_mut_slice());
    }
    for k in 0..N_GATES {
        take(params.lstm.u[k].as_mut_slice());
    }
    for k in 0..N_GATES {
        take(params.lstm.b[k].as_mut_slice());
    }
    for (w, b) in &mut params.head.layers {
        take(w.as_mut_slice());
        take(b.as_mut_slice());
    }
}

pub fn grads_flatten_into(grads: &NetGrads, out: &mut Vec<f64>) {
    for k in 0..N_GATES {
        out.extend_from_slice(grads.lstm.w[k].as_slice());
    }
    for k in 0..N_GATES {
        out.extend_from_slice(grads.lstm.u[k].as_slice());
    }
    for k in 0..N_GATES {
        out.extend_from_slice(grads.lstm.b[k].as_slice());
    }
    for (w, b) in &grads.head.layers {
        out.extend_from_slice(w.as_slice());
        out.extend_from_slice(b.as_slice());
    }
}

pub fn param_count(params: &NetParams) -> usize {
    let mut n = 0;
    visit_blocks(params, |_, block| n += block.len());
    n
}
