use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn small_net(seed: u64) -> NetParams {
    let mut net = NetParams::zeros(3, 4, &[5], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    net.init(&mut rng);
    net
}

fn random_inputs(rng: &mut impl Rng, steps: usize, input: usize, batch: usize) -> Vec<DMatrix<f64>> {
    (0..steps)
        .map(|_| DMatrix::from_fn(input, batch, |_, _| rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn single_cell_matches_hand_computation() {
    // hidden 1, input 1, all weights distinct so every term matters
    let mut p = LstmParams_scalar(0.3, 0.5, -0.2, 0.7, 0.4, -0.6, 0.1, 0.2, 0.05, -0.1, 0.15, 0.25);
    let x = DMatrix::from_element(1, 1, 0.8);
    let h0 = DMatrix::from_element(1, 1, 0.3);
    let c0 = DMatrix::from_element(1, 1, -0.4);
    let step = lstm::lstm_step(&p, &x, &h0, &c0, &[false]);

    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let i = sig(0.3 * 0.8 + 0.4 * 0.3 + 0.05);
    let f = sig(0.5 * 0.8 + (-0.6) * 0.3 + (-0.1));
    let o = sig((-0.2) * 0.8 + 0.1 * 0.3 + 0.15);
    let g = (0.7f64 * 0.8 + 0.2 * 0.3 + 0.25).tanh();
    let c = f * (-0.4) + i * g;
    let h = o * c.tanh();
    assert!((step.c[(0, 0)] - c).abs() < 1e-15);
    assert!((step.h()[(0, 0)] - h).abs() < 1e-15);

    // reset zeroes the carry: same as starting from h=c=0
    let reset = lstm::lstm_step(&p, &x, &h0, &c0, &[true]);
    let fresh = lstm::lstm_step(
        &p,
        &x,
        &DMatrix::zeros(1, 1),
        &DMatrix::zeros(1, 1),
        &[false],
    );
    assert_eq!(reset.h(), fresh.h());
    assert_eq!(reset.c, fresh.c);

    p.b[0][0] = f64::NAN;
    let bad = lstm::lstm_step(&p, &x, &h0, &c0, &[false]);
    assert!(bad.h()[(0, 0)].is_nan());
}

#[allow(non_snake_case, clippy::too_many_arguments)]
fn LstmParams_scalar(
    wi: f64, wf: f64, wo: f64, wg: f64,
    ui: f64, uf: f64, uo: f64, ug: f64,
    bi: f64, bf: f64, bo: f64, bg: f64,
) -> LstmParams {
    let mut p = LstmParams::zeros(1, 1);
    for (k, v) in [wi, wf, wo, wg].iter().enumerate() {
        p.w[k][(0, 0)] = *v;
    }
    for (k, v) in [ui, uf, uo, ug].iter().enumerate() {
        p.u[k][(0, 0)] = *v;
    }
    for (k, v) in [bi, bf, bo, bg].iter().enumerate() {
        p.b[k][0] = *v;
    }
    p
}

use super::lstm::{self, LstmParams};

/// Scalar loss: fixed random coefficients dotted with every output entry.
fn window_loss(
    net: &NetParams,
    xs: &[DMatrix<f64>],
    resets: &[Vec<bool>],
    init: &RecurrentState,
    coeffs: &[DMatrix<f64>],
) -> f64 {
    let cache = forward_window(net, xs, resets, init);
    cache
        .outputs
        .iter()
        .zip(coeffs)
        .map(|(y, c)| y.component_mul(c).sum())
        .sum()
}

#[test]
fn window_gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..3 {
        let net = small_net(100 + trial);
        let batch = 2;
        let steps = 4;
        let xs = random_inputs(&mut rng, steps, net.input_dim(), batch);
        // one mid-window reset in column 1 exercises the carry masking
        let mut resets = vec![vec![false; batch]; steps];
        resets[2][1] = true;
        let init = RecurrentState {
            h: DMatrix::from_fn(net.hidden_dim(), batch, |_, _| rng.gen_range(-0.5..0.5)),
            c: DMatrix::from_fn(net.hidden_dim(), batch, |_, _| rng.gen_range(-0.5..0.5)),
        };
        let coeffs: Vec<DMatrix<f64>> = (0..steps)
            .map(|_| DMatrix::from_fn(net.out_dim(), batch, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();

        let cache = forward_window(&net, &xs, &resets, &init);
        let grads = backward_window(&net, &cache, &coeffs);
        let mut analytic = Vec::new();
        net::grads_flatten_into(&grads, &mut analytic);

        let mut flat = Vec::new();
        net::flatten_into(&net, &mut flat);
        let eps = 1e-6;
        for (idx, a) in analytic.iter().enumerate() {
            let mut plus = net.clone();
            let mut minus = net.clone();
            let mut fp = flat.clone();
            let mut fm = flat.clone();
            fp[idx] += eps;
            fm[idx] -= eps;
            net::unflatten_from(&mut plus, &fp, &mut 0);
            net::unflatten_from(&mut minus, &fm, &mut 0);
            let fd = (window_loss(&plus, &xs, &resets, &init, &coeffs)
                - window_loss(&minus, &xs, &resets, &init, &coeffs))
                / (2.0 * eps);
            let denom = fd.abs().max(a.abs()).max(1e-6);
            assert!(
                (fd - a).abs() / denom < 1e-5,
                "trial {trial} param {idx}: analytic {a}, finite-difference {fd}"
            );
        }
    }
}

#[test]
fn reset_column_matches_fresh_start_bitwise() {
    let net = small_net(5);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let batch = 3;
    let steps = 6;
    let xs = random_inputs(&mut rng, steps, net.input_dim(), batch);
    let mut resets = vec![vec![false; batch]; steps];
    resets[3][2] = true;
    let init = RecurrentState {
        h: DMatrix::from_fn(net.hidden_dim(), batch, |_, _| rng.gen_range(-1.0..1.0)),
        c: DMatrix::from_fn(net.hidden_dim(), batch, |_, _| rng.gen_range(-1.0..1.0)),
    };
    let cache = forward_window(&net, &xs, &resets, &init);

    // fresh batch-1 run over the tail of column 2
    let tail: Vec<DMatrix<f64>> = xs[3..]
        .iter()
        .map(|x| DMatrix::from_column_slice(net.input_dim(), 1, x.column(2).as_slice()))
        .collect();
    let fresh = forward_window(
        &net,
        &tail,
        &vec![vec![false]; tail.len()],
        &RecurrentState::zeros(net.hidden_dim(), 1),
    );
    for (t, out) in fresh.outputs.iter().enumerate() {
        assert_eq!(
            cache.outputs[3 + t].column(2),
            out.column(0),
            "step {t} after reset diverged from fresh start"
        );
    }
}

#[test]
fn zero_network_outputs_zero_everywhere() {
    let net = NetParams::zeros(3, 4, &[5], 2);
    let xs = vec![DMatrix::from_element(3, 2, 1.0); 3];
    let cache = forward_window(&net, &xs, &vec![vec![false; 2]; 3], &RecurrentState::zeros(4, 2));
    for out in &cache.outputs {
        assert!(out.iter().all(|v| *v == 0.0));
    }
    let zero_d = vec![DMatrix::zeros(2, 2); 3];
    let grads = backward_window(&net, &cache, &zero_d);
    let mut flat = Vec::new();
    net::grads_flatten_into(&grads, &mut flat);
    assert!(flat.iter().all(|v| *v == 0.0));
}

#[test]
fn forward_step_matches_window() {
    let net = small_net(11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let xs = random_inputs(&mut rng, 4, net.input_dim(), 1);
    let cache = forward_window(
        &net,
        &xs,
        &vec![vec![false]; 4],
        &RecurrentState::zeros(net.hidden_dim(), 1),
    );
    let mut state = RecurrentState::zeros(net.hidden_dim(), 1);
    for (t, x) in xs.iter().enumerate() {
        let y = forward_step(&net, x.column(0).as_slice(), &mut state);
        assert_eq!(y.as_slice(), cache.outputs[t].column(0).as_slice());
    }
}

// --- distribution ----------------------------------------------------------

#[test]
fn log_prob_closed_forms() {
    // standard normal in 6 dims, evaluated at its mean
    let d = ActionDistribution::new(vec![0.0; 6], &[0.0; 6]);
    let lp = d.log_prob(&[0.0; 6]);
    assert!((lp - (-5.513_631_199_228_036)).abs() < 1e-12);

    // entropy of a 1-d unit Gaussian
    let d1 = ActionDistribution::new(vec![0.0], &[0.0]);
    assert!((d1.entropy() - 1.418_938_533_204_672_7).abs() < 1e-12);

    // doubling sigma adds ln 2 per dimension
    let wide = ActionDistribution::new(vec![0.0; 6], &[std::f64::consts::LN_2; 6]);
    assert!((wide.entropy() - (d.entropy() + 6.0 * std::f64::consts::LN_2)).abs() < 1e-12);

    // one-sigma displacement costs exactly 1/2 per dimension
    let shifted = d.log_prob(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!((lp - shifted - 0.5).abs() < 1e-12);
}

#[test]
fn density_integrates_to_one() {
    let d = ActionDistribution::new(vec![0.37], &[(0.8f64).ln()]);
    let (lo, hi, n) = (-8.0, 8.0, 40_000);
    let dx = (hi - lo) / n as f64;
    let mut total = 0.0;
    for k in 0..n {
        let x = lo + (k as f64 + 0.5) * dx;
        total += d.log_prob(&[x]).exp() * dx;
    }
    assert!((total - 1.0).abs() < 1e-3, "integral {total}");
}

#[test]
fn log_prob_gradients_match_finite_differences() {
    let d = ActionDistribution::new(vec![0.2, -0.5], &[-0.3, 0.4]);
    let action = [0.7, -0.1];
    let dmean = d.dlogp_dmean(&action);
    let dls = d.dlogp_dlogstd(&action);
    let eps = 1e-6;
    for k in 0..2 {
        let mut mp = d.mean.clone();
        let mut mm = d.mean.clone();
        mp[k] += eps;
        mm[k] -= eps;
        let fd = (ActionDistribution { mean: mp, std: d.std.clone() }.log_prob(&action)
            - ActionDistribution { mean: mm, std: d.std.clone() }.log_prob(&action))
            / (2.0 * eps);
        assert!((fd - dmean[k]).abs() < 1e-8);

        let base = [-0.3, 0.4];
        let mut lp = base;
        let mut lm = base;
        lp[k] += eps;
        lm[k] -= eps;
        let fd = (ActionDistribution::new(d.mean.clone(), &lp).log_prob(&action)
            - ActionDistribution::new(d.mean.clone(), &lm).log_prob(&action))
            / (2.0 * eps);
        assert!((fd - dls[k]).abs() < 1e-8);
    }
}

#[test]
fn sampling_is_seeded_and_centered() {
    let d = ActionDistribution::new(vec![1.0, -2.0], &[(0.1f64).ln(); 2]);
    let mut a = ChaCha8Rng::seed_from_u64(3);
    let mut b = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(d.sample(&mut a), d.sample(&mut b));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mean = [0.0; 2];
    let n = 2000;
    for _ in 0..n {
        let s = d.sample(&mut rng);
        mean[0] += s[0] / n as f64;
        mean[1] += s[1] / n as f64;
    }
    assert!((mean[0] - 1.0).abs() < 0.02);
    assert!((mean[1] + 2.0).abs() < 0.02);
    assert_eq!(d.mode(), vec![1.0, -2.0]);
}

// --- policy assembly and checkpointing --------------------------------------

#[test]
fn policy_init_is_deterministic_per_seed() {
    let a = Policy::init(Dims::default(), 42);
    let b = Policy::init(Dims::default(), 42);
    let c = Policy::init(Dims::default(), 43);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.log_std.iter().all(|v| *v == INITIAL_LOG_STD));
}

#[test]
fn flatten_round_trips() {
    let a = Policy::init(Dims::default(), 1);
    let mut flat = Vec::new();
    a.flatten_into(&mut flat);
    assert_eq!(flat.len(), a.param_count());
    let mut b = Policy::with_dims(Dims::default());
    b.unflatten_from(&flat).unwrap();
    assert_eq!(a, b);
    assert!(b.unflatten_from(&flat[1..]).is_err());
}

#[test]
fn checkpoint_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ckpt");
    let a = Policy::init(
        Dims { hidden: 16, ..Dims::default() },
        99,
    );
    checkpoint::save(&a, &path).unwrap();
    let b = checkpoint::load(&path).unwrap();
    assert_eq!(a, b);

    let bytes_a = std::fs::read(&path).unwrap();
    checkpoint::save(&b, &path).unwrap();
    assert_eq!(bytes_a, std::fs::read(&path).unwrap());
}

#[test]
fn checkpoint_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ckpt");
    let policy = Policy::init(Dims { hidden: 8, ..Dims::default() }, 1);
    checkpoint::save(&policy, &path).unwrap();

    let good = std::fs::read(&path).unwrap();

    let mut bad = good.clone();
    bad[0] = b'X';
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(checkpoint::load(&path), Err(GfError::CorruptCheckpoint(_))));

    std::fs::write(&path, &good[..good.len() - 8]).unwrap();
    assert!(matches!(checkpoint::load(&path), Err(GfError::CorruptCheckpoint(_))));

    let mut nan = good.clone();
    let tail = nan.len() - 8;
    nan[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
    std::fs::write(&path, &nan).unwrap();
    assert!(matches!(checkpoint::load(&path), Err(GfError::CorruptCheckpoint(_))));

    std::fs::write(&path, b"GF").unwrap();
    assert!(matches!(checkpoint::load(&path), Err(GfError::CorruptCheckpoint(_))));
}

#[test]
fn act_and_value_have_expected_shapes() {
    let policy = Policy::init(Dims { hidden: 8, ..Dims::default() }, 7);
    let (mut actor_state, mut critic_state) = policy.initial_state(1);
    let obs = vec![0.1; policy.dims.obs];
    let d = policy.act(&obs, &mut actor_state);
    assert_eq!(d.mean.len(), policy.dims.action);
    assert!(d.std.iter().all(|s| (*s - 0.5).abs() < 1e-15));
    let priv_obs = vec![0.1; policy.dims.privileged()];
    let v = policy.value(&priv_obs, &mut critic_state);
    assert!(v.is_finite());
    // recurrent state actually moved
    assert!(actor_state.h.iter().any(|v| *v != 0.0));
}

#[test]
fn action_targets_offset_default_pose() {
    let pose = [0.0, 0.1, 0.0, 0.1, 0.0, 0.0];
    let action = [1.0, -1.0, 0.0, 2.0, 0.5, -0.5];
    let t = action_to_targets(&action, &pose);
    assert_eq!(t, [0.5, -0.4, 0.0, 1.1, 0.25, -0.25]);
}

#[test]
fn block_layout_covers_every_parameter() {
    let policy = Policy::init(Dims { hidden: 4, ..Dims::default() }, 0);
    let total: usize = policy.block_layout().iter().map(|(_, n)| n).sum();
    assert_eq!(total, policy.param_count());
}
