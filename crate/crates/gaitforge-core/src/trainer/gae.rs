//! Generalized advantage estimation over time-major arrays.

use crate::error::{GfError, Result};

/// Backward recursion over one env column:
/// δ_t = r_t + γ·V_{t+1}·(1−done_t) − V_t,
/// A_t = δ_t + γλ·(1−done_t)·A_{t+1},  returns = A + V.
///
/// `rewards`, `values`, `dones` are (T, N); `bootstrap` is the value of the
/// post-rollout state per env.
#[allow(clippy::type_complexity)]
pub fn compute_gae(
    rewards: &[Vec<f64>],
    values: &[Vec<f64>],
    dones: &[Vec<bool>],
    bootstrap: &[f64],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let t_len = rewards.len();
    if values.len() != t_len || dones.len() != t_len {
        return Err(GfError::DimensionMismatch {
            what: "advantage-estimation time axis",
            expected: t_len,
            got: values.len().min(dones.len()),
        });
    }
    let n = bootstrap.len();
    for row in rewards.iter().chain(values) {
        if row.len() != n {
            return Err(GfError::DimensionMismatch {
                what: "advantage-estimation env axis",
                expected: n,
                got: row.len(),
            });
        }
    }
    let mut advantages = vec![vec![0.0; n]; t_len];
    let mut returns = vec![vec![0.0; n]; t_len];
    for env in 0..n {
        let mut carry = 0.0;
        for t in (0..t_len).rev() {
            let not_done = if dones[t][env] { 0.0 } else { 1.0 };
            let v_next = if t + 1 == t_len {
                bootstrap[env]
            } else {
                values[t + 1][env]
            };
            let delta = rewards[t][env] + gamma * v_next * not_done - values[t][env];
            carry = delta + gamma * lambda * not_done * carry;
            advantages[t][env] = carry;
            returns[t][env] = carry + values[t][env];
        }
    }
    Ok((advantages, returns))
}

/// In-place shift/scale to batch mean 0 and standard deviation 1. A
/// degenerate (constant) batch is only centered.
pub fn normalize_advantages(advantages: &mut [Vec<f64>]) {
    let count: usize = advantages.iter().map(Vec::len).sum();
    if count == 0 {
        return;
    }
    let mean: f64 = advantages.iter().flatten().sum::<f64>() / count as f64;
    let var: f64 = advantages
        .iter()
        .flatten()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / count as f64;
    let std = var.sqrt().max(1e-8);
    for row in advantages.iter_mut() {
        for a in row.iter_mut() {
            *a = (*a - mean) / std;
        }
    }
}
