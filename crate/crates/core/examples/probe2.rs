// dev scratch: phase-1 event budget for the sub-aging drive
use rcm_core::coupling::CouplingBundle;
use rcm_core::params::{scaling_terms, ModelParams};
use rcm_core::rng::{mix, substream};
use rcm_core::walk::{drive_walk, CollapseOptions, DriveEvent, WalkOptions};
use std::time::Instant;

fn main() {
    let n: u64 = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(512);
    let reps: u64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(3);
    let threshold: f64 = std::env::args().nth(3).map(|s| s.parse().unwrap()).unwrap_or(20.0);
    let params = ModelParams::walls_and_traps(0.8, 0.5, 0.5, 0.0);
    let k = 2u32;
    let scales = scaling_terms(&params, n).unwrap();
    let b_n = scales.trap_time.unwrap();
    println!("n = {n}, b_n = {b_n:.3e}, threshold = {threshold}");
    let opts = WalkOptions {
        reflected: true,
        collapse: Some(CollapseOptions { threshold, ..Default::default() }),
    };
    for r in 0..reps {
        let bundle = CouplingBundle::new(&params, k, 1e-6, 1e-9, mix(777, &[r])).unwrap();
        let (env, _) = bundle.build_environment(n).unwrap();
        let mut rng = substream(888, &[n, r]);
        let t0 = Instant::now();
        let mut jumps = 0u64;
        let mut collapses = 0u64;
        let mut collapsed_steps = 0u64;
        let out = drive_walk(&env, 0, b_n, &[], &opts, &mut rng, |ev| {
            match ev {
                DriveEvent::Jump { .. } => jumps += 1,
                DriveEvent::Collapse(c) => {
                    collapses += 1;
                    collapsed_steps += c.steps;
                }
            }
            true
        })
        .unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "  rep {r}: {dt:.2}s honest_jumps={jumps:.3e} collapses={collapses:.3e} collapsed_steps={collapsed_steps:.3e} total={:.3e} final_x={}",
            out.events as f64, out.final_position
        );
    }
}
