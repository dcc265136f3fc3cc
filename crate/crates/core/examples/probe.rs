// dev scratch: calibration probes for the acceptance configs
use rcm_core::environment::generate_environment;
use rcm_core::params::{scaling_terms, ModelParams};
use rcm_core::rng::{mix, substream};
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "sep" => separation(),
        "speed" => chain_speed(),
        _ => eprintln!("usage: probe sep|speed"),
    }
}

fn separation() {
    // criterion 6 fixture: RWT, alpha0 = alpha_inf = 0.5, p = 0.5, n = 4096,
    // K = 1, delta_hat = 0.1, 500 environments
    let params = ModelParams::walls_and_traps(0.5, 0.5, 0.5, 0.0);
    let n = 4096;
    let scales = scaling_terms(&params, n).unwrap();
    let mut separated = 0;
    let reps = 500;
    for e in 0..reps {
        let env = generate_environment(&params, n, 1, mix(4242, &[e])).unwrap();
        let sets = env.wall_trap_sets(&scales, 0.1).unwrap();
        if sets.separated {
            separated += 1;
        }
    }
    println!("separated {}/{} = {}", separated, reps, separated as f64 / reps as f64);
}

fn chain_speed() {
    let params = ModelParams::walls(0.8, 0.0);
    let n = 4096u64;
    let env = generate_environment(&params, n, 2, 1).unwrap();
    let scales = scaling_terms(&params, n).unwrap();
    let a_n = scales.wall_time;
    println!("a_n = {a_n:.3e}");
    let mut rng = substream(1, &[1]);
    let thr = env_thresholds(&env);
    let half = env.half();
    let t0 = Instant::now();
    let steps = a_n as u64;
    let mut x = 0i64;
    let mut m = 0i64;
    use rand::Rng;
    for _ in 0..steps {
        x = if x == -half {
            x + 1
        } else if x == half {
            x - 1
        } else if rng.gen::<u64>() < thr[(x + half) as usize] {
            x + 1
        } else {
            x - 1
        };
        if x > m {
            m = x;
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "steps {steps} in {dt:.2}s = {:.2} ns/step (max {m})",
        dt / steps as f64 * 1e9
    );
}

fn env_thresholds(env: &rcm_core::environment::Environment) -> Vec<u64> {
    let half = env.half();
    (-half..=half)
        .map(|x| {
            let p = env.right_jump_prob(x);
            if p >= 1.0 {
                u64::MAX
            } else {
                (p * u64::MAX as f64) as u64
            }
        })
        .collect()
}
