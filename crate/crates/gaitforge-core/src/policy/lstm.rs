//! A single gated recurrent (LSTM) cell with exact backpropagation through
//! time over a truncated window.

use nalgebra::{DMatrix, DVector};

/// Gate order everywhere: input, forget, output, candidate.
pub const N_GATES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// Input weights, hidden×input, per gate.
    pub w: [DMatrix<f64>; N_GATES],
    /// Recurrent weights, hidden×hidden, per gate.
    pub u: [DMatrix<f64>; N_GATES],
    /// Biases, hidden, per gate.
    pub b: [DVector<f64>; N_GATES],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LstmGrads {
    pub w: Vec<DMatrix<f64>>,
    pub u: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w: core::array::from_fn(|_| DMatrix::zeros(hidden, input)),
            u: core::array::from_fn(|_| DMatrix::zeros(hidden, hidden)),
            b: core::array::from_fn(|_| DVector::zeros(hidden)),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.b[0].len()
    }

    pub fn input_dim(&self) -> usize {
        self.w[0].ncols()
    }

    pub fn zero_grads(&self) -> LstmGrads {
        LstmGrads {
            w: self.w.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect(),
            u: self.u.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect(),
            b: self.b.iter().map(|v| DVector::zeros(v.len())).collect(),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn add_bias(mut m: DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    for mut col in m.column_iter_mut() {
        col += b;
    }
    m
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: DMatrix<f64>,
    /// Previous hidden/cell after any reset masking.
    pub h_prev: DMatrix<f64>,
    pub c_prev: DMatrix<f64>,
    pub gates: [DMatrix<f64>; N_GATES],
    pub c: DMatrix<f64>,
    pub tc: DMatrix<f64>,
    /// Columns whose hidden state was zeroed before this step.
    pub resets: Vec<bool>,
}

impl LstmStepCache {
    pub fn h(&self) -> DMatrix<f64> {
        self.gates[2].component_mul(&self.tc)
    }
}

/// One cell update over a batch (columns). `resets` zeroes the carried
/// state per column before the update.
pub fn lstm_step(
    params: &LstmParams,
    x: &DMatrix<f64>,
    h_prev: &DMatrix<f64>,
    c_prev: &DMatrix<f64>,
    resets: &[bool],
) -> LstmStepCache {
    let mut h_in = h_prev.clone();
    let mut c_in = c_prev.clone();
    for (col, reset) in resets.iter().enumerate() {
        if *reset {
            h_in.column_mut(col).fill(0.0);
            c_in.column_mut(col).fill(0.0);
        }
    }
    let pre: [DMatrix<f64>; N_GATES] = core::array::from_fn(|k| {
        add_bias(&params.w[k] * x + &params.u[k] * &h_in, &params.b[k])
    });
    let gates: [DMatrix<f64>; N_GATES] = [
        pre[0].map(sigmoid),
        pre[1].map(sigmoid),
        pre[2].map(sigmoid),
        pre[3].map(f64::tanh),
    ];
    let c = gates[1].component_mul(&c_in) + gates[0].component_mul(&gates[3]);
    let tc = c.map(f64::tanh);
    LstmStepCache {
        x: x.clone(),
        h_prev: h_in,
        c_prev: c_in,
        gates,
        c,
        tc,
        resets: resets.to_vec(),
    }
}

/// Backward over a recorded window. `d_h` holds dL/dh_t per step (from the
/// head); returns parameter gradients. Gradients do not flow across reset
/// boundaries or out of the window.
pub fn lstm_backward(
    params: &LstmParams,
    steps: &[LstmStepCache],
    d_h: &[DMatrix<f64>],
) -> LstmGrads {
    assert_eq!(steps.len(), d_h.len());
    let mut grads = params.zero_grads();
    let hidden = params.hidden_dim();
    let batch = steps.first().map_or(0, |s| s.x.ncols());
    let mut dh_carry = DMatrix::zeros(hidden, batch);
    let mut dc_carry = DMatrix::<f64>::zeros(hidden, batch);
    for (step, dh_head) in steps.iter().zip(d_h).rev() {
        let dh = dh_head + &dh_carry;
        let [i, f, o, g] = &step.gates;
        let d_o = dh.component_mul(&step.tc);
        let d_tc = dh.component_mul(o);
        let dc = dc_carry + d_tc.component_mul(&step.tc.map(|t| 1.0 - t * t));
        let d_i = dc.component_mul(g);
        let d_g = dc.component_mul(i);
        let d_f = dc.component_mul(&step.c_prev);
        dc_carry = dc.component_mul(f);

        let dz = [
            d_i.component_mul(&i.map(|v| v * (1.0 - v))),
            d_f.component_mul(&f.map(|v| v * (1.0 - v))),
            d_o.component_mul(&o.map(|v| v * (1.0 - v))),
            d_g.component_mul(&g.map(|v| 1.0 - v * v)),
        ];
        dh_carry.fill(0.0);
        for k in 0..N_GATES {
            grads.w[k] += &dz[k] * step.x.transpose();
            grads.u[k] += &dz[k] * step.h_prev.transpose();
            for col in dz[k].column_iter() {
                grads.b[k] += col;
            }
            dh_carry += params.u[k].transpose() * &dz[k];
        }
        for (col, reset) in step.resets.iter().enumerate() {
            if *reset {
                dh_carry.column_mut(col).fill(0.0);
                dc_carry.column_mut(col).fill(0.0);
            }
        }
    }
    grads
}
