//! Quick learning-curve check for the double-integrator cart.

use gaitforge_core::curriculum::default_phases;
use gaitforge_core::policy::{Dims, Policy};
use gaitforge_core::trainer::{
    derive_seed, train_loop, Environment, PPOConfig, ToyEnv, TrainerConfig,
};

fn main() {
    let oracle = ToyEnv::oracle_return(1234, 50);
    println!("oracle return: {oracle:.3}");
    for seed in [1u64, 2, 3] {
        let mut policy = Policy::init(
            Dims { obs: ToyEnv::OBS, hidden: 16, action: 1 },
            seed,
        );
        let mut envs: Vec<Box<dyn Environment>> = (0..8)
            .map(|i| Box::new(ToyEnv::new(derive_seed(seed, 0, i))) as Box<dyn Environment>)
            .collect();
        let cfg = PPOConfig {
            env_count: 8,
            rollout_length: 128,
            epochs: 4,
            minibatches: 2,
            learning_rate: 1e-3,
            entropy_coeff: 0.002,
            ..PPOConfig::default()
        };
        let dir = std::env::temp_dir().join(format!("toy_learn_{seed}"));
        let start = std::time::Instant::now();
        let outcome = train_loop(
            &mut policy,
            &mut envs,
            &default_phases(),
            &cfg,
            &TrainerConfig { iterations: 150, window: 16, checkpoint_interval: 0 },
            &dir,
            seed,
        )
        .unwrap();
        let initial = outcome.stats[0].mean_return;
        let last10: f64 = outcome.stats[140..].iter().map(|s| s.mean_return).sum::<f64>() / 10.0;
        let gap = oracle - initial;
        let closed = (last10 - initial) / gap;
        println!(
            "seed {seed}: initial {initial:8.2}  final(mean last 10) {last10:8.2}  gap closed {:.1}%  ({:.1}s)",
            closed * 100.0,
            start.elapsed().as_secs_f64()
        );
    }
}
