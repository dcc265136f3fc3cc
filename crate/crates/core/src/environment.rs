//! Finite-window conductance environments and electrical-network queries.
//!
//! Sites run over `[-Kn, Kn]` and edge `i` joins `{i, i+1}` for
//! `i = -Kn .. Kn-1`. Tilted access multiplies edge `i` by `exp(2 lambda i/n)`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::params::{sample_edge_law, scaling_terms, Mode, ModelParams, ScaleSet};
use crate::path::StepPath;
use crate::rng::substream;
use crate::{Error, Result};

/// A purely atomic measure on the line: sorted locations, positive weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMeasure {
    atoms: Vec<(f64, f64)>,
}

impl PointMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter(
                "point measure locations must be strictly increasing".into(),
            ));
        }
        if atoms.iter().any(|&(_, w)| w <= 0.0) {
            return Err(Error::InvalidParameter(
                "point measure weights must be positive".into(),
            ));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    /// Number of atoms in `[x1, x2] x [w, infinity)`.
    pub fn count_in(&self, x1: f64, x2: f64, w_min: f64) -> usize {
        self.atoms
            .iter()
            .filter(|&&(x, w)| x >= x1 && x <= x2 && w >= w_min)
            .count()
    }

    /// Atoms restricted to `[x1, x2]` with weight above `w_min`.
    pub fn restricted(&self, x1: f64, x2: f64, w_min: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .filter(|&&(x, w)| x >= x1 && x <= x2 && w > w_min)
                .copied()
                .collect(),
        }
    }
}

/// Wall and trap index sets and their separation flag.
#[derive(Clone, Debug)]
pub struct WallTrapSets {
    /// Edges with `r_j > resistance_scale^{1 - delta_hat}`.
    pub walls: Vec<i64>,
    /// Edges with `c_j > conductance_scale^{1 - delta_hat}` (`RWT` only).
    pub traps: Vec<i64>,
    /// True iff all distinct members of the union are more than `n^{1/4}` apart.
    pub separated: bool,
}

/// Rescaled environment processes and empirical point measures.
#[derive(Clone, Debug)]
pub struct RescaledEnvironment {
    /// `t -> R(0, floor(n t)) / resistance_scale` (negated mirror for `t < 0`).
    pub resistance_path: StepPath<f64>,
    /// Conductance partial sums over the conductance scale (`RWT` only).
    pub conductance_path: Option<StepPath<f64>>,
    /// Weight `r_i / resistance_scale` at `i/n` for every window edge.
    pub wall_measure: PointMeasure,
    /// Weight `c_i / conductance_scale` at `i/n` (`RWT` only).
    pub trap_measure: Option<PointMeasure>,
}

#[derive(Clone, Debug)]
pub struct Environment {
    pub params: ModelParams,
    pub n: u64,
    pub k: u32,
    /// Conductances for edges `-Kn .. Kn-1`.
    cond: Vec<f64>,
    /// Cached tilted conductances `c_i exp(2 lambda i / n)`.
    tilted: Vec<f64>,
    /// Prefix sums of tilted resistances; `prefix_r[m]` sums edges below `m - Kn`.
    prefix_r: Vec<f64>,
}

impl Environment {
    pub fn from_edges(params: ModelParams, n: u64, k: u32, cond: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter("need n >= 1 and K >= 1".into()));
        }
        let half = (k as i64) * (n as i64);
        if cond.len() != (2 * half) as usize {
            return Err(Error::InvalidParameter(format!(
                "expected {} edges, got {}",
                2 * half,
                cond.len()
            )));
        }
        if cond.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(
                "conductances must be positive and finite".into(),
            ));
        }
        let mut env = Self {
            params,
            n,
            k,
            cond,
            tilted: Vec::new(),
            prefix_r: Vec::new(),
        };
        env.rebuild_cache();
        Ok(env)
    }

    fn rebuild_cache(&mut self) {
        let half = self.half();
        let rate = 2.0 * self.params.lambda / self.n as f64;
        self.tilted = self
            .cond
            .iter()
            .enumerate()
            .map(|(m, &c)| c * (rate * (m as i64 - half) as f64).exp())
            .collect();
        self.prefix_r = Vec::with_capacity(self.tilted.len() + 1);
        self.prefix_r.push(0.0);
        let mut acc = 0.0;
        for &ct in &self.tilted {
            acc += 1.0 / ct;
            self.prefix_r.push(acc);
        }
    }

    /// Half-width in lattice units; sites live in `[-half, half]`.
    pub fn half(&self) -> i64 {
        self.k as i64 * self.n as i64
    }

    pub fn edge_range(&self) -> std::ops::Range<i64> {
        -self.half()..self.half()
    }

    /// Untilted conductance of edge `{i, i+1}`.
    pub fn conductance(&self, i: i64) -> f64 {
        self.cond[(i + self.half()) as usize]
    }

    /// Untilted resistance of edge `{i, i+1}`.
    pub fn resistance(&self, i: i64) -> f64 {
        1.0 / self.conductance(i)
    }

    /// Tilted conductance `c_i exp(2 lambda i / n)`.
    pub fn conductance_tilted(&self, i: i64) -> f64 {
        self.tilted[(i + self.half()) as usize]
    }

    pub fn resistance_tilted(&self, i: i64) -> f64 {
        1.0 / self.conductance_tilted(i)
    }

    /// Site weight: sum of the adjacent tilted conductances (one-sided at the
    /// window boundary).
    pub fn site_weight(&self, x: i64) -> f64 {
        let half = self.half();
        if x == -half {
            self.conductance_tilted(x)
        } else if x == half {
            self.conductance_tilted(x - 1)
        } else {
            self.conductance_tilted(x - 1) + self.conductance_tilted(x)
        }
    }

    /// Probability that the embedded chain steps right from `x` (reflected at
    /// the window boundary).
    pub fn right_jump_prob(&self, x: i64) -> f64 {
        let half = self.half();
        if x == -half {
            1.0
        } else if x == half {
            0.0
        } else {
            let right = self.conductance_tilted(x);
            right / (self.conductance_tilted(x - 1) + right)
        }
    }

    /// Per-site `u64` thresholds for the branch-free chain kernel: a draw
    /// `r < thr[x]` means "step right". Boundary sites are handled by the
    /// kernel explicitly.
    pub(crate) fn jump_thresholds(&self) -> Vec<u64> {
        let half = self.half();
        (-half..=half)
            .map(|x| {
                let p = self.right_jump_prob(x);
                if p >= 1.0 {
                    u64::MAX
                } else {
                    (p * (u64::MAX as f64)) as u64
                }
            })
            .collect()
    }

    /// Effective resistance between indices: the series sum of tilted edge
    /// resistances, symmetric in its arguments, zero on the diagonal.
    pub fn effective_resistance(&self, i: i64, j: i64) -> Result<f64> {
        let half = self.half();
        for &idx in &[i, j] {
            if idx < -half || idx > half {
                return Err(Error::OutOfWindow {
                    index: idx,
                    lo: -half,
                    hi: half,
                });
            }
        }
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        Ok(self.prefix_r[(hi + half) as usize] - self.prefix_r[(lo + half) as usize])
    }

    /// Exact quenched hitting probability `P_x(tau_b < tau_a) = R(a,x)/R(a,b)`
    /// for `a < x < b`.
    pub fn hitting_probability_exact(&self, x: i64, a: i64, b: i64) -> Result<f64> {
        if a >= b || x <= a || x >= b {
            return Err(Error::InvalidParameter(format!(
                "need a < x < b, got a = {a}, x = {x}, b = {b}"
            )));
        }
        Ok(self.effective_resistance(a, x)? / self.effective_resistance(a, b)?)
    }

    /// Wall and trap index sets at threshold exponent `1 - delta_hat`, and
    /// whether they are `n^{1/4}`-separated.
    pub fn wall_trap_sets(&self, scales: &ScaleSet, delta_hat: f64) -> Result<WallTrapSets> {
        if !(delta_hat > 0.0 && delta_hat < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta_hat = {delta_hat} not in (0, 1)"
            )));
        }
        let wall_thr = scales.resistance_scale.powf(1.0 - delta_hat);
        let trap_thr = scales
            .conductance_scale
            .map(|d| d.powf(1.0 - delta_hat));
        let mut walls = Vec::new();
        let mut traps = Vec::new();
        for i in self.edge_range() {
            let c = self.conductance(i);
            if 1.0 / c > wall_thr {
                walls.push(i);
            }
            if let Some(thr) = trap_thr {
                if c > thr {
                    traps.push(i);
                }
            }
        }
        let mut union: Vec<i64> = walls.iter().chain(traps.iter()).copied().collect();
        union.sort_unstable();
        let min_gap = (self.n as f64).powf(0.25);
        let separated = union
            .windows(2)
            .all(|w| (w[1] - w[0]) as f64 > min_gap);
        Ok(WallTrapSets {
            walls,
            traps,
            separated,
        })
    }

    /// Rescaled resistance/conductance processes and empirical point measures.
    pub fn rescaled_processes(&self, scales: &ScaleSet) -> Result<RescaledEnvironment> {
        let half = self.half();
        let n = self.n as f64;
        let d0 = scales.resistance_scale;

        // Right-continuous representation: on [i/n, (i+1)/n) the value is
        // R(0, i)/d0 for i >= 0 and -R(i+1, 0)/d0 for i < 0, matching the
        // two-sided cadlag convention off the lattice points.
        let mut breaks = Vec::with_capacity((2 * half + 1) as usize);
        let mut res_vals = Vec::with_capacity(breaks.capacity());
        for i in -half..=half {
            breaks.push(i as f64 / n);
            let v = if i >= 0 {
                self.prefix_r[(i + half) as usize] - self.prefix_r[half as usize]
            } else {
                -(self.prefix_r[half as usize] - self.prefix_r[(i + 1 + half) as usize])
            };
            res_vals.push(v / d0);
        }
        let resistance_path = StepPath::new(breaks.clone(), res_vals)?;

        let conductance_path = match self.params.mode {
            Mode::Rw => None,
            Mode::Rwt => {
                let dinf = scales.conductance_scale.expect("RWT scales");
                let mut prefix_c = vec![0.0];
                let mut acc = 0.0;
                for &ct in &self.tilted {
                    acc += ct;
                    prefix_c.push(acc);
                }
                let vals = (-half..=half)
                    .map(|i| {
                        let v = if i >= 0 {
                            prefix_c[(i + half) as usize] - prefix_c[half as usize]
                        } else {
                            -(prefix_c[half as usize] - prefix_c[(i + 1 + half) as usize])
                        };
                        v / dinf
                    })
                    .collect();
                Some(StepPath::new(breaks.clone(), vals)?)
            }
        };

        let wall_measure = PointMeasure::new(
            self.edge_range()
                .map(|i| (i as f64 / n, self.resistance(i) / d0))
                .collect(),
        )?;
        let trap_measure = match self.params.mode {
            Mode::Rw => None,
            Mode::Rwt => {
                let dinf = scales.conductance_scale.expect("RWT scales");
                Some(PointMeasure::new(
                    self.edge_range()
                        .map(|i| (i as f64 / n, self.conductance(i) / dinf))
                        .collect(),
                )?)
            }
        };

        Ok(RescaledEnvironment {
            resistance_path,
            conductance_path,
            wall_measure,
            trap_measure,
        })
    }

    pub fn scales(&self) -> Result<ScaleSet> {
        scaling_terms(&self.params, self.n)
    }

    pub fn edges(&self) -> &[f64] {
        &self.cond
    }
}

/// Draws `2Kn` i.i.d. edges; reproducible from `(seed, n, K, params)`.
pub fn generate_environment(
    params: &ModelParams,
    n: u64,
    k: u32,
    seed: u64,
) -> Result<Environment> {
    params.validate()?;
    let mut rng = substream(seed, &[0x454e56, n, k as u64]);
    let count = 2 * (k as usize) * (n as usize);
    let cond = (0..count)
        .map(|_| sample_edge_law(params, &mut rng).0)
        .collect();
    Environment::from_edges(*params, n, k, cond)
}

/// One environment as a JSON Lines record; round trips bit-exactly.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvRecord {
    pub seed: u64,
    pub n: u64,
    pub k: u32,
    pub mode: Mode,
    pub params: ModelParams,
    pub edges: Vec<f64>,
}

impl EnvRecord {
    pub fn from_environment(env: &Environment, seed: u64) -> Self {
        Self {
            seed,
            n: env.n,
            k: env.k,
            mode: env.params.mode,
            params: env.params,
            edges: env.edges().to_vec(),
        }
    }

    pub fn to_environment(&self) -> Result<Environment> {
        Environment::from_edges(self.params, self.n, self.k, self.edges.clone())
    }
}

pub fn write_env_records<W: Write>(mut w: W, records: &[EnvRecord]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_env_records<R: BufRead>(r: R) -> Result<Vec<EnvRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_env(n: u64, k: u32) -> Environment {
        let params = ModelParams::walls(0.5, 0.0);
        let count = 2 * (k as usize) * (n as usize);
        Environment::from_edges(params, n, k, vec![1.0; count]).unwrap()
    }

    #[test]
    fn series_resistance_sum() {
        let params = ModelParams::walls(0.5, 0.0);
        // r-edges [1, 2, 3] on edges {0,1}, {1,2}, {2,3}, lambda = 0
        let mut cond = vec![1.0; 8];
        cond[5] = 0.5;
        cond[6] = 1.0 / 3.0;
        let env = Environment::from_edges(params, 4, 1, cond).unwrap();
        assert_relative_eq!(env.effective_resistance(0, 3).unwrap(), 6.0, epsilon = 1e-12);
        assert_eq!(env.effective_resistance(1, 1).unwrap(), 0.0);
        // symmetry
        assert_relative_eq!(
            env.effective_resistance(3, 0).unwrap(),
            env.effective_resistance(0, 3).unwrap()
        );
    }

    #[test]
    fn tilt_formula_on_single_edge() {
        // edge at i = 3 with c = 2 and lambda/n = 0.1: r^tilt = e^{-0.6}/2
        let params = ModelParams::walls(0.5, 1.0);
        let n = 10;
        let mut cond = vec![1.0; 2 * 10];
        cond[(3 + 10) as usize] = 2.0;
        let env = Environment::from_edges(params, n, 1, cond).unwrap();
        assert_relative_eq!(
            env.effective_resistance(3, 4).unwrap(),
            0.5 * (-0.6f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn untilted_accessors_agree_at_zero_lambda() {
        let env = generate_environment(&ModelParams::walls(0.5, 0.0), 64, 1, 7).unwrap();
        for i in env.edge_range() {
            assert_eq!(env.conductance(i), env.conductance_tilted(i));
        }
    }

    #[test]
    fn gamblers_ruin_on_unit_resistances() {
        let env = unit_env(8, 1);
        assert_relative_eq!(
            env.hitting_probability_exact(1, 0, 3).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-12
        );
        // midpoint symmetry
        assert_relative_eq!(
            env.hitting_probability_exact(0, -4, 4).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(env.hitting_probability_exact(0, 2, 2).is_err());
    }

    #[test]
    fn huge_wall_dominates_hitting() {
        let params = ModelParams::walls(0.5, 0.0);
        let n = 8;
        let mut cond = vec![1.0; 16];
        // wall on the edge {2, 3}: r = 1e6
        cond[(2 + 8) as usize] = 1e-6;
        let env = Environment::from_edges(params, n, 1, cond).unwrap();
        let p = env.hitting_probability_exact(2, 0, 3).unwrap();
        assert_relative_eq!(p, 2.0 / (2.0 + 1e6), max_relative = 1e-9);
    }

    #[test]
    fn walk_generation_is_deterministic() {
        let params = ModelParams::walls_and_traps(0.6, 0.5, 0.4, 0.3);
        let a = generate_environment(&params, 32, 2, 99).unwrap();
        let b = generate_environment(&params, 32, 2, 99).unwrap();
        assert_eq!(a.edges(), b.edges());
        let c = generate_environment(&params, 32, 2, 100).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn rw_mode_conductances_at_most_one() {
        let env = generate_environment(&ModelParams::walls(0.5, 0.0), 256, 1, 3).unwrap();
        assert!(env.edges().iter().all(|&c| c <= 1.0));
    }

    #[test]
    fn rw_empirical_mean_conductance() {
        // golden: E[c] = alpha0/(1+alpha0) = 1/3 at alpha0 = 1/2, checked
        // against a 1e7-draw brute Monte Carlo during development
        // (3.3333e-1 +- 9e-5); here 1e6 fresh draws at 3 sigma.
        let params = ModelParams::walls(0.5, 0.0);
        let mut rng = substream(17, &[1]);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_edge_law(&params, &mut rng).0)
            .sum::<f64>()
            / n as f64;
        let sd = 0.3 / (n as f64).sqrt(); // Var[c] < 0.09 for c in [0, 1]
        assert!((mean - 1.0 / 3.0).abs() < 3.0 * sd, "mean = {mean}");
    }

    #[test]
    fn wall_trap_sets_on_flat_environment() {
        let env = unit_env(64, 1);
        let scales = env.scales().unwrap();
        let sets = env.wall_trap_sets(&scales, 0.1).unwrap();
        assert!(sets.walls.is_empty());
        assert!(sets.traps.is_empty());
        assert!(sets.separated);
    }

    #[test]
    fn close_traps_fail_separation() {
        // two traps 2 sites apart, n = 32 >= 17 so n^{1/4} > 2
        let params = ModelParams::walls_and_traps(0.5, 0.5, 0.5, 0.0);
        let n = 32u64;
        let mut cond = vec![1.0; 64];
        let scales = scaling_terms(&params, n).unwrap();
        let big = scales.conductance_scale.unwrap().powf(0.95);
        cond[32] = big;
        cond[34] = big;
        let env = Environment::from_edges(params, n, 1, cond).unwrap();
        let sets = env.wall_trap_sets(&scales, 0.1).unwrap();
        assert_eq!(sets.traps, vec![0, 2]);
        assert!(!sets.separated);
    }

    #[test]
    fn rescaled_paths_anchor_and_monotone() {
        let params = ModelParams::walls(0.8, 0.5);
        let env = generate_environment(&params, 128, 1, 5).unwrap();
        let scales = env.scales().unwrap();
        let re = env.rescaled_processes(&scales).unwrap();
        assert_eq!(re.resistance_path.value(0.0), 0.0);
        assert!(re.resistance_path.is_nondecreasing());
        // total mass of the wall measure equals the rescaled untilted sum
        let direct: f64 = env
            .edge_range()
            .map(|i| env.resistance(i))
            .sum::<f64>()
            / scales.resistance_scale;
        assert_relative_eq!(re.wall_measure.total_mass(), direct, max_relative = 1e-12);
    }

    #[test]
    fn env_record_round_trip_is_bit_exact() {
        let params = ModelParams::walls_and_traps(0.8, 0.5, 0.5, 0.25);
        let env = generate_environment(&params, 64, 1, 1234).unwrap();
        let rec = EnvRecord::from_environment(&env, 1234);
        let mut buf = Vec::new();
        write_env_records(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let back = read_env_records(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], rec);
        let env2 = back[0].to_environment().unwrap();
        assert_eq!(env.edges(), env2.edges());
    }

    proptest! {
        #[test]
        fn resistance_additivity(seed in 0u64..1000, triple in (0i64..60, 0i64..60, 0i64..60)) {
            let env = generate_environment(&ModelParams::walls(0.5, 0.2), 32, 1, seed).unwrap();
            let mut idx = [triple.0 - 30, triple.1 - 30, triple.2 - 30];
            idx.sort_unstable();
            let [i, j, k] = idx;
            let whole = env.effective_resistance(i, k).unwrap();
            let split = env.effective_resistance(i, j).unwrap()
                + env.effective_resistance(j, k).unwrap();
            prop_assert!((whole - split).abs() <= 1e-9 * whole.abs().max(1.0));
        }
    }
}
