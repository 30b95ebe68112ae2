//! Feed-forward head: linear layers with exponential-linear activations on
//! all but the output layer.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    /// (weights out×in, bias out) per layer.
    pub layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<(DMatrix<f64>, DVector<f64>)>,
}

fn elu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        z.exp() - 1.0
    }
}

fn elu_deriv(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        z.exp()
    }
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer.
    inputs: Vec<DMatrix<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<DMatrix<f64>>,
    pub output: DMatrix<f64>,
}

impl MlpParams {
    pub fn zeros(dims: &[usize]) -> Self {
        let layers = dims
            .windows(2)
            .map(|w| (DMatrix::zeros(w[1], w[0]), DVector::zeros(w[1])))
            .collect();
        MlpParams { layers }
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            layers: self
                .layers
                .iter()
                .map(|(w, b)| (DMatrix::zeros(w.nrows(), w.ncols()), DVector::zeros(b.len())))
                .collect(),
        }
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> MlpCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        let last = self.layers.len() - 1;
        for (idx, (w, b)) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let mut z = w * &cur;
            for mut col in z.column_iter_mut() {
                col += b;
            }
            pre.push(z.clone());
            cur = if idx == last { z } else { z.map(elu) };
        }
        MlpCache {
            inputs,
            pre,
            output: cur,
        }
    }

    /// Backward pass; returns (parameter grads, dL/dx).
    pub fn backward(&self, cache: &MlpCache, d_out: &DMatrix<f64>) -> (MlpGrads, DMatrix<f64>) {
        let mut grads = self.zero_grads();
        let last = self.layers.len() - 1;
        let mut dz = d_out.clone();
        for idx in (0..self.layers.len()).rev() {
            if idx != last {
                dz = dz.component_mul(&cache.pre[idx].map(elu_deriv));
            }
            let (w, _) = &self.layers[idx];
            grads.layers[idx].0 += &dz * cache.inputs[idx].transpose();
            for col in dz.column_iter() {
                grads.layers[idx].1 += col;
            }
            dz = w.transpose() * dz;
        }
        (grads, dz)
    }
}
