//! Experiment runners: aging, sub-aging, gap-statistic and J1 sweeps.
//!
//! Replica-level parallelism only: every replica owns a substream keyed by
//! `(master seed, experiment tag, scale, environment index, walk index)` and
//! results are folded in replica order, so output bytes are independent of
//! the worker count.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::coupling::CouplingBundle;
use crate::environment::{generate_environment, Environment};
use crate::experiments::config::{EnvironmentSource, EstimatorSelection, ExperimentConfig};
use crate::experiments::output::CurveRow;
use crate::j1::j1_upper_bound;
use crate::limit::{
    build_speed_measure_traps, build_speed_measure_walls, simulate_quasi_diffusion,
};
use crate::params::{open_closed_unit, sample_edge_law, scaling_terms, Mode};
use crate::rng::{mix, substream};
use crate::stats::{ks_distance, Ecdf, EstimateResult};
use crate::walk::{drive_walk, pair_escape_sample, GapValue, PairRates, WalkOptions};
use crate::{Error, Result};

const TAG_BUNDLE: u64 = 0xB0;
const TAG_ENV: u64 = 0xE0;
const TAG_AGING: u64 = 0xA0;
const TAG_AGING_LIMIT: u64 = 0xA1;
const TAG_TRAP_AGING: u64 = 0xA2;
const TAG_TRAP_AGING_LIMIT: u64 = 0xA3;
const TAG_SUBAGING: u64 = 0xA4;
const TAG_SUBAGING_LIMIT: u64 = 0xA5;
const TAG_GAP: u64 = 0xA6;
const TAG_GAP_LIMIT: u64 = 0xA7;

/// Rows plus named side files (ECDF dumps and the like).
#[derive(Clone, Debug, Default)]
pub struct CurveSet {
    pub rows: Vec<CurveRow>,
    pub side_files: Vec<(String, String)>,
}

fn run_parallel<T, F>(workers: usize, count: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let exec = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    if workers == 0 {
        exec()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
        pool.install(exec)
    }
}

fn bundle_for(cfg: &ExperimentConfig, idx: u64) -> Result<CouplingBundle> {
    CouplingBundle::new(
        &cfg.params,
        cfg.k,
        cfg.epsilon0(),
        cfg.epsiloninf(),
        mix(cfg.master_seed, &[TAG_BUNDLE, idx]),
    )
}

fn discrete_env(cfg: &ExperimentConfig, n: u64, idx: u64) -> Result<Environment> {
    match cfg.environment_source {
        EnvironmentSource::Coupled => Ok(bundle_for(cfg, idx)?.build_environment(n)?.0),
        EnvironmentSource::Direct => generate_environment(
            &cfg.params,
            n,
            cfg.k,
            mix(cfg.master_seed, &[TAG_ENV, n, idx]),
        ),
    }
}

fn poisson_u64<G: Rng + ?Sized>(mean: f64, rng: &mut G) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Uniformised chain: positions of the walk at its jump epochs. Because every
/// holding is mean-1 exponential, the number of jumps in `[0, t]` is
/// Poisson(t) independent of the chain, so time-window maxima reduce to
/// index-window maxima over Poisson step counts.
struct Chain {
    thr: Vec<u64>,
    half: i64,
    x: i64,
}

impl Chain {
    fn new(env: &Environment, x0: i64) -> Self {
        Self {
            thr: env.jump_thresholds(),
            half: env.half(),
            x: x0,
        }
    }

    /// Runs `steps` jumps; returns the maximum position over the segment,
    /// including the entry position.
    #[inline]
    fn run_max(&mut self, steps: u64, rng: &mut Xoshiro256PlusPlus) -> i64 {
        let mut x = self.x;
        let mut m = x;
        let half = self.half;
        let thr = &self.thr[..];
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
        self.x = x;
        m
    }
}

struct BinomAcc {
    hits: Vec<u64>,
    trials: u64,
    sentinels: u64,
}

impl BinomAcc {
    fn new(slots: usize) -> Self {
        Self {
            hits: vec![0; slots],
            trials: 0,
            sentinels: 0,
        }
    }

    fn absorb(&mut self, flags: &[bool], sentinel: bool) {
        for (slot, &f) in flags.iter().enumerate() {
            if f {
                self.hits[slot] += 1;
            }
        }
        self.trials += 1;
        if sentinel {
            self.sentinels += 1;
        }
    }

    fn rows(&self, estimator: &str, n: u64, h_list: &[f64]) -> Result<Vec<CurveRow>> {
        let sf = self.sentinels as f64 / self.trials.max(1) as f64;
        h_list
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let est = EstimateResult::from_binomial(self.hits[i], self.trials)?;
                Ok(CurveRow::from_estimate(estimator, n, h, &est, sf))
            })
            .collect()
    }
}

fn require_h_above(h_list: &[f64], bound: f64) -> Result<()> {
    if h_list.iter().any(|&h| h <= bound) {
        return Err(Error::InvalidParameter(format!(
            "h grid must lie strictly above {bound}"
        )));
    }
    Ok(())
}

/// Aging of the running maximum under walls only: frequency of
/// `sup X over [0, a_n] == sup X over [a_n, h a_n]` with the limit-process
/// counterpart from the quasi-diffusion.
pub fn run_aging_walls(cfg: &ExperimentConfig, workers: usize) -> Result<CurveSet> {
    cfg.validate()?;
    cfg.requires_mode(Mode::Rw)?;
    let h_list = cfg.h_list_or(ExperimentConfig::aging_h_default());
    require_h_above(&h_list, 1.0)?;
    let mut out = CurveSet::default();

    if cfg.estimators != EstimatorSelection::LimitOnly {
        for &n in &cfg.n_list {
            let scales = scaling_terms(&cfg.params, n)?;
            let a_n = scales.wall_time;
            let total = cfg.environments * cfg.walks_per_env;
            let results = run_parallel(workers, total, |ridx| {
                let env_idx = ridx / cfg.walks_per_env;
                let walk_idx = ridx % cfg.walks_per_env;
                let env = discrete_env(cfg, n, env_idx)?;
                let mut rng =
                    substream(cfg.master_seed, &[TAG_AGING, n, env_idx, walk_idx]);
                let mut chain = Chain::new(&env, 0);
                let n1 = poisson_u64(a_n, &mut rng);
                let m1 = chain.run_max(n1, &mut rng);
                let mut flags = Vec::with_capacity(h_list.len());
                let mut m2 = chain.x; // window includes the position at a_n
                let mut prev_h = 1.0;
                for &h in &h_list {
                    let dm = poisson_u64((h - prev_h) * a_n, &mut rng);
                    m2 = m2.max(chain.run_max(dm, &mut rng));
                    flags.push(m2 == m1);
                    prev_h = h;
                }
                Ok((flags, m1 == env.half()))
            })?;
            let mut acc = BinomAcc::new(h_list.len());
            for (flags, sentinel) in &results {
                acc.absorb(flags, *sentinel);
            }
            out.rows
                .extend(acc.rows("aging_walls_discrete", n, &h_list)?);
        }
    }

    if cfg.estimators != EstimatorSelection::DiscreteOnly {
        let mean_c = cfg
            .params
            .mean_conductance()
            .ok_or_else(|| Error::InvalidParameter("walls-only law has finite mean".into()))?;
        let h_max = *h_list.last().unwrap();
        let results = run_parallel(workers, cfg.limit_replicas, |r| {
            let bundle = bundle_for(cfg, r)?;
            let sub0 = bundle.limit_resistance_path(cfg.params.lambda)?;
            let measure = build_speed_measure_walls(
                &sub0,
                cfg.params.lambda,
                cfg.k as f64,
                cfg.grid_step,
                mean_c,
            )?;
            let mut rng = substream(cfg.master_seed, &[TAG_AGING_LIMIT, r]);
            let start = measure.atom_nearest_preimage(0.0);
            let path = simulate_quasi_diffusion(&measure, start, h_max, &mut rng)?;
            let m1 = path.max_atom_over(0.0, 1.0);
            let flags: Vec<bool> = h_list
                .iter()
                .map(|&h| path.max_atom_over(1.0, h) == m1)
                .collect();
            Ok((flags, m1 + 1 == measure.len()))
        })?;
        let mut acc = BinomAcc::new(h_list.len());
        for (flags, sentinel) in &results {
            acc.absorb(flags, *sentinel);
        }
        out.rows.extend(acc.rows("aging_walls_limit", 0, &h_list)?);
    }
    Ok(out)
}

/// Position aging under walls and traps: frequency of
/// `|X(b_n) - X(h b_n)| <= 1` against `P(Z-tilde_1 = Z-tilde_h)`.
pub fn run_aging_traps(cfg: &ExperimentConfig, workers: usize) -> Result<CurveSet> {
    cfg.validate()?;
    cfg.requires_mode(Mode::Rwt)?;
    let h_list = cfg.h_list_or(ExperimentConfig::aging_h_default());
    require_h_above(&h_list, 1.0)?;
    let mut out = CurveSet::default();
    let opts = WalkOptions {
        reflected: true,
        collapse: Some(crate::walk::CollapseOptions {
            threshold: cfg.collapse_threshold,
            ..Default::default()
        }),
    };

    if cfg.estimators != EstimatorSelection::LimitOnly {
        for &n in &cfg.n_list {
            let scales = scaling_terms(&cfg.params, n)?;
            let b_n = scales.trap_time.expect("RWT scales");
            let h_max = *h_list.last().unwrap();
            let mut obs: Vec<f64> = vec![b_n];
            obs.extend(h_list.iter().map(|&h| h * b_n));
            let total = cfg.environments * cfg.walks_per_env;
            let results = run_parallel(workers, total, |ridx| {
                let env_idx = ridx / cfg.walks_per_env;
                let walk_idx = ridx % cfg.walks_per_env;
                let env = discrete_env(cfg, n, env_idx)?;
                let mut rng =
                    substream(cfg.master_seed, &[TAG_TRAP_AGING, n, env_idx, walk_idx]);
                let drive = drive_walk(
                    &env,
                    0,
                    h_max * b_n + 1.0,
                    &obs,
                    &opts,
                    &mut rng,
                    |_| true,
                )?;
                let p0 = drive.obs_positions[0];
                let flags: Vec<bool> = h_list
                    .iter()
                    .enumerate()
                    .map(|(i, _)| (p0 - drive.obs_positions[i + 1]).abs() <= 1)
                    .collect();
                Ok((flags, false))
            })?;
            let mut acc = BinomAcc::new(h_list.len());
            for (flags, sentinel) in &results {
                acc.absorb(flags, *sentinel);
            }
            out.rows
                .extend(acc.rows("aging_traps_discrete", n, &h_list)?);
        }
    }

    if cfg.estimators != EstimatorSelection::DiscreteOnly {
        let h_max = *h_list.last().unwrap();
        let results = run_parallel(workers, cfg.limit_replicas, |r| {
            let bundle = bundle_for(cfg, r)?;
            let sub0 = bundle.limit_resistance_path(cfg.params.lambda)?;
            let subinf = bundle
                .limit_conductance_path(0.0)?
                .expect("RWT bundle");
            let measure = build_speed_measure_traps(
                &sub0,
                &subinf,
                cfg.params.lambda,
                cfg.k as f64,
                cfg.weight_cutoff,
            )?;
            let mut rng = substream(cfg.master_seed, &[TAG_TRAP_AGING_LIMIT, r]);
            let start = measure.entry_atom(0.0, &mut rng);
            let path = simulate_quasi_diffusion(&measure, start, h_max, &mut rng)?;
            let a1 = path.atom_at(1.0);
            let flags: Vec<bool> = h_list.iter().map(|&h| path.atom_at(h) == a1).collect();
            Ok((flags, false))
        })?;
        let mut acc = BinomAcc::new(h_list.len());
        for (flags, sentinel) in &results {
            acc.absorb(flags, *sentinel);
        }
        out.rows.extend(acc.rows("aging_traps_limit", 0, &h_list)?);
    }
    Ok(out)
}

/// Sub-aging: the window event `{positions within one pair on
/// [b_n, b_n + h d_inf]}` evaluated through the exact escape-time identity
/// `T^{(n)} >= h`, against the limit `E[exp(-h (A0+A2)/(2 A1))]`.
pub fn run_subaging(cfg: &ExperimentConfig, workers: usize) -> Result<CurveSet> {
    cfg.validate()?;
    cfg.requires_mode(Mode::Rwt)?;
    let h_list = cfg.h_list_or(ExperimentConfig::subaging_h_default());
    require_h_above(&h_list, 0.0)?;
    let mut out = CurveSet::default();
    let opts = WalkOptions {
        reflected: true,
        collapse: Some(crate::walk::CollapseOptions {
            threshold: cfg.collapse_threshold,
            ..Default::default()
        }),
    };

    if cfg.estimators != EstimatorSelection::LimitOnly {
        for &n in &cfg.n_list {
            let scales = scaling_terms(&cfg.params, n)?;
            let b_n = scales.trap_time.expect("RWT scales");
            let d_inf = scales.conductance_scale.expect("RWT scales");
            let total = cfg.environments * cfg.walks_per_env;
            let results = run_parallel(workers, total, |ridx| {
                let env_idx = ridx / cfg.walks_per_env;
                let walk_idx = ridx % cfg.walks_per_env;
                let env = discrete_env(cfg, n, env_idx)?;
                let mut rng =
                    substream(cfg.master_seed, &[TAG_SUBAGING, n, env_idx, walk_idx]);
                // phase 1: age the walk to b_n (trap-collapse allowed)
                let drive = drive_walk(&env, 0, b_n, &[], &opts, &mut rng, |_| true)?;
                // phase 2: measure T = first time three distinct sites have
                // been seen after the shift; honest event stepping
                let t_norm = escape_after_shift(&env, drive.final_position, &mut rng) / d_inf;
                let flags: Vec<bool> = h_list.iter().map(|&h| t_norm >= h).collect();
                Ok((flags, false))
            })?;
            let mut acc = BinomAcc::new(h_list.len());
            for (flags, sentinel) in &results {
                acc.absorb(flags, *sentinel);
            }
            out.rows
                .extend(acc.rows("subaging_discrete", n, &h_list)?);
        }
    }

    if cfg.estimators != EstimatorSelection::DiscreteOnly {
        let results = run_parallel(workers, cfg.limit_replicas, |r| {
            let bundle = bundle_for(cfg, r)?;
            let sub0 = bundle.limit_resistance_path(cfg.params.lambda)?;
            let subinf = bundle.limit_conductance_path(0.0)?.expect("RWT bundle");
            let measure = build_speed_measure_traps(
                &sub0,
                &subinf,
                cfg.params.lambda,
                cfg.k as f64,
                cfg.weight_cutoff,
            )?;
            let mut rng = substream(cfg.master_seed, &[TAG_SUBAGING_LIMIT, r]);
            let start = measure.entry_atom(0.0, &mut rng);
            let path = simulate_quasi_diffusion(&measure, start, 1.0, &mut rng)?;
            let a1 = measure.atoms()[path.atom_at(1.0)].weight;
            let a0 = sample_edge_law(&cfg.params, &mut rng).0;
            let a2 = sample_edge_law(&cfg.params, &mut rng).0;
            let rate = (a0 + a2) / (2.0 * a1);
            Ok(h_list.iter().map(|&h| (-h * rate).exp()).collect::<Vec<f64>>())
        })?;
        for (i, &h) in h_list.iter().enumerate() {
            let samples: Vec<f64> = results.iter().map(|v| v[i]).collect();
            let est = EstimateResult::from_mean(&samples)?;
            out.rows
                .push(CurveRow::from_estimate("subaging_limit", 0, h, &est, 0.0));
        }
    }
    Ok(out)
}

/// Escape variable after the shift: time until a third distinct site is
/// visited, starting from `x0` with a fresh memoryless clock. The first jump
/// establishes the pair; the remaining excursion is one exact pair-escape
/// draw, so the cost is O(1) even on the deepest traps.
fn escape_after_shift<G: Rng + ?Sized>(env: &Environment, x0: i64, rng: &mut G) -> f64 {
    let half = env.half();
    let t1 = -open_closed_unit(rng).ln();
    let x1 = if x0 == -half {
        x0 + 1
    } else if x0 == half {
        x0 - 1
    } else if open_closed_unit(rng) <= env.right_jump_prob(x0) {
        x0 + 1
    } else {
        x0 - 1
    };
    let j = x0.min(x1);
    // reflecting boundary: a missing outer edge carries zero conductance, so
    // the excursion can only exit on the inward side
    let c_left = if j - 1 >= -half {
        env.conductance_tilted(j - 1)
    } else {
        0.0
    };
    let c_mid = env.conductance_tilted(j);
    let c_right = if j + 1 < half {
        env.conductance_tilted(j + 1)
    } else {
        0.0
    };
    let rates = PairRates::new(c_left, c_mid, c_right);
    let esc = pair_escape_sample(&rates, x1 == j, rng);
    t1 + esc.duration
}

/// Gap samples for one run: numeric values exclude the boundary sentinel,
/// whose frequency is reported separately.
#[derive(Clone, Debug, Default)]
pub struct GapSamples {
    pub discrete: Vec<(u64, Vec<f64>)>,
    pub limit: Vec<f64>,
}

/// Gap-statistic convergence: per-scale ECDFs of `Gap_n(1)` against the limit
/// `Gap(1)` sampled from the quasi-diffusion, with KS distances per scale.
pub fn run_gap(cfg: &ExperimentConfig, workers: usize) -> Result<(CurveSet, GapSamples)> {
    cfg.validate()?;
    cfg.requires_mode(Mode::Rw)?;
    let mut out = CurveSet::default();
    let mut samples = GapSamples::default();

    let mean_c = cfg
        .params
        .mean_conductance()
        .ok_or_else(|| Error::InvalidParameter("walls-only law has finite mean".into()))?;
    let limit_results = run_parallel(workers, cfg.limit_replicas, |r| {
        let bundle = bundle_for(cfg, r)?;
        let sub0 = bundle.limit_resistance_path(cfg.params.lambda)?;
        let measure = build_speed_measure_walls(
            &sub0,
            cfg.params.lambda,
            cfg.k as f64,
            cfg.grid_step,
            mean_c,
        )?;
        let mut rng = substream(cfg.master_seed, &[TAG_GAP_LIMIT, r]);
        let start = measure.atom_nearest_preimage(0.0);
        let path = simulate_quasi_diffusion(&measure, start, 1.0, &mut rng)?;
        let max_atom = path.max_atom_over(0.0, 1.0);
        if max_atom + 1 >= measure.len() {
            return Ok(GapValue::BoundarySentinel);
        }
        let v_bar = measure.atoms()[max_atom].preimage;
        let gap = sub0
            .atoms()
            .iter()
            .find(|&&(u, _)| u > v_bar)
            .map(|&(u, w)| (sub0.tilt * u).exp() * w);
        Ok(match gap {
            Some(g) => GapValue::Interior(g),
            None => GapValue::BoundarySentinel,
        })
    })?;
    let mut limit_sentinels = 0u64;
    for g in &limit_results {
        match g {
            GapValue::Interior(v) => samples.limit.push(*v),
            GapValue::BoundarySentinel => limit_sentinels += 1,
        }
    }
    let limit_ecdf = Ecdf::new(samples.limit.clone())?;
    let limit_sf = limit_sentinels as f64 / cfg.limit_replicas as f64;
    let limit_mean = EstimateResult::from_mean(&samples.limit)?;
    out.rows.push(CurveRow::from_estimate(
        "gap_limit_mean",
        0,
        1.0,
        &limit_mean,
        limit_sf,
    ));

    for &n in &cfg.n_list {
        let scales = scaling_terms(&cfg.params, n)?;
        let a_n = scales.wall_time;
        let d0 = scales.resistance_scale;
        let total = cfg.environments * cfg.walks_per_env;
        let results = run_parallel(workers, total, |ridx| {
            let env_idx = ridx / cfg.walks_per_env;
            let walk_idx = ridx % cfg.walks_per_env;
            let env = discrete_env(cfg, n, env_idx)?;
            let mut rng = substream(cfg.master_seed, &[TAG_GAP, n, env_idx, walk_idx]);
            let mut chain = Chain::new(&env, 0);
            let n1 = poisson_u64(a_n, &mut rng);
            let m1 = chain.run_max(n1, &mut rng);
            Ok(if m1 >= env.half() {
                GapValue::BoundarySentinel
            } else {
                GapValue::Interior(env.resistance_tilted(m1) / d0)
            })
        })?;
        let mut vals = Vec::with_capacity(results.len());
        let mut sentinels = 0u64;
        for g in &results {
            match g {
                GapValue::Interior(v) => vals.push(*v),
                GapValue::BoundarySentinel => sentinels += 1,
            }
        }
        let ecdf = Ecdf::new(vals.clone())?;
        let ks = ks_distance(&ecdf, &limit_ecdf);
        out.rows.push(CurveRow {
            estimator: "gap_ks".into(),
            n,
            h: 1.0,
            estimate: ks,
            stderr: 0.0,
            ci_lo: ks,
            ci_hi: ks,
            replicas: vals.len() as u64,
            sentinel_fraction: sentinels as f64 / total as f64,
        });
        samples.discrete.push((n, vals));
    }

    // side files: raw gap samples per scale and for the limit
    for (n, vals) in &samples.discrete {
        let body = vals
            .iter()
            .map(|v| format!("{v}\n"))
            .collect::<String>();
        out.side_files.push((format!("gap_samples_n{n}.txt"), body));
    }
    let body = samples
        .limit
        .iter()
        .map(|v| format!("{v}\n"))
        .collect::<String>();
    out.side_files.push(("gap_samples_limit.txt".into(), body));
    Ok((out, samples))
}

/// J1 diagnostic: upper bound between the coupled rescaled resistance process
/// and the limit subordinator, per scale. Replicas whose jump counts above
/// `delta` disagree are reported through `sentinel_fraction`.
pub fn run_j1(cfg: &ExperimentConfig, workers: usize) -> Result<CurveSet> {
    cfg.validate()?;
    let mut out = CurveSet::default();
    let grid: Vec<f64> = (0..=1024)
        .map(|i| -(cfg.k as f64) + 2.0 * cfg.k as f64 * i as f64 / 1024.0)
        .collect();
    for &n in &cfg.n_list {
        let scales = scaling_terms(&cfg.params, n)?;
        let results = run_parallel(workers, cfg.environments, |e| {
            let bundle = bundle_for(cfg, e)?;
            let (env, _) = bundle.build_environment(n)?;
            let rescaled = env.rescaled_processes(&scales)?;
            let discrete = rescaled.resistance_path.to_unit_interval();
            let limit = bundle
                .limit_resistance_path(cfg.params.lambda)?
                .to_step_path(&grid, cfg.k as f64)?
                .to_unit_interval();
            match j1_upper_bound(&limit, &discrete, cfg.j1_delta) {
                Ok(bound) => Ok(Some(bound)),
                Err(Error::JumpCountMismatch { .. }) | Err(Error::JumpMatchingFailed) => Ok(None),
                Err(e) => Err(e),
            }
        })?;
        let ok: Vec<f64> = results.iter().flatten().copied().collect();
        let failures = results.len() - ok.len();
        let failure_fraction = failures as f64 / results.len() as f64;
        let row = if ok.is_empty() {
            // every replica had mismatched jump counts; report the failure
            CurveRow {
                estimator: "j1_bound".into(),
                n,
                h: 0.0,
                estimate: 0.0,
                stderr: 0.0,
                ci_lo: 0.0,
                ci_hi: 0.0,
                replicas: 0,
                sentinel_fraction: failure_fraction,
            }
        } else {
            let est = EstimateResult::from_mean(&ok)?;
            CurveRow::from_estimate("j1_bound", n, 0.0, &est, failure_fraction)
        };
        out.rows.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::Tolerances;
    use crate::experiments::output::render_curves;
    use crate::params::ModelParams;

    fn small_cfg(mode_rwt: bool) -> ExperimentConfig {
        ExperimentConfig {
            params: if mode_rwt {
                ModelParams::walls_and_traps(0.8, 0.5, 0.5, 0.0)
            } else {
                ModelParams::walls(0.8, 0.0)
            },
            n_list: vec![16, 32],
            k: 1,
            h_list: vec![],
            environments: 24,
            walks_per_env: 1,
            limit_replicas: 60,
            master_seed: 99,
            estimators: EstimatorSelection::Both,
            environment_source: EnvironmentSource::Coupled,
            collapse_threshold: 20.0,
            grid_step: 0.02,
            weight_cutoff: 0.05,
            j1_delta: 0.5,
            sub_epsilon0: None,
            sub_epsiloninf: None,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn aging_walls_produces_probabilities_and_is_deterministic() {
        let mut cfg = small_cfg(false);
        cfg.h_list = vec![1.5, 2.0];
        let a = run_aging_walls(&cfg, 1).unwrap();
        let b = run_aging_walls(&cfg, 4).unwrap();
        assert_eq!(render_curves(&a.rows), render_curves(&b.rows));
        for row in &a.rows {
            assert!(row.estimate >= 0.0 && row.estimate <= 1.0);
            assert!(row.ci_lo <= row.estimate && row.estimate <= row.ci_hi);
        }
        // discrete rows for both scales plus limit rows
        assert_eq!(a.rows.len(), 2 * 2 + 2);
    }

    #[test]
    fn aging_rejects_h_at_or_below_one() {
        let mut cfg = small_cfg(false);
        cfg.h_list = vec![0.8, 1.5];
        assert!(run_aging_walls(&cfg, 1).is_err());
    }

    #[test]
    fn subaging_rejects_mode_mismatch_and_bad_h() {
        let cfg = small_cfg(false);
        assert!(run_subaging(&cfg, 1).is_err());
        let mut cfg = small_cfg(true);
        cfg.h_list = vec![0.0, 1.0];
        assert!(run_subaging(&cfg, 1).is_err());
    }

    #[test]
    fn subaging_runs_at_desk_scale() {
        let mut cfg = small_cfg(true);
        cfg.h_list = vec![0.5, 1.0];
        cfg.environments = 16;
        let set = run_subaging(&cfg, 1).unwrap();
        for row in &set.rows {
            assert!(row.estimate >= 0.0 && row.estimate <= 1.0);
        }
        // discrete for each (n, h) plus limit for each h
        assert_eq!(set.rows.len(), 2 * 2 + 2);
    }

    #[test]
    fn gap_emits_ecdfs_and_ks_rows() {
        let mut cfg = small_cfg(false);
        cfg.environments = 40;
        cfg.limit_replicas = 40;
        let (set, samples) = run_gap(&cfg, 1).unwrap();
        assert_eq!(samples.discrete.len(), 2);
        assert!(!samples.limit.is_empty());
        let ks_rows: Vec<_> = set.rows.iter().filter(|r| r.estimator == "gap_ks").collect();
        assert_eq!(ks_rows.len(), 2);
        for r in ks_rows {
            assert!(r.estimate >= 0.0 && r.estimate <= 1.0);
        }
        // all numeric gap samples are strictly positive
        for (_, vals) in &samples.discrete {
            assert!(vals.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn j1_bound_rows_cover_scales() {
        let mut cfg = small_cfg(false);
        cfg.environments = 12;
        let set = run_j1(&cfg, 1).unwrap();
        assert_eq!(set.rows.len(), 2);
        for r in &set.rows {
            assert!(r.estimate >= 0.0);
            assert!(r.sentinel_fraction <= 1.0);
        }
    }

    #[test]
    fn aging_traps_runs_and_stays_in_unit_interval() {
        let mut cfg = small_cfg(true);
        cfg.h_list = vec![1.5, 2.0];
        cfg.environments = 12;
        cfg.n_list = vec![16];
        let set = run_aging_traps(&cfg, 1).unwrap();
        for row in &set.rows {
            assert!(row.estimate >= 0.0 && row.estimate <= 1.0);
        }
    }
}
