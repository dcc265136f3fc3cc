//! Quasi-diffusion limit processes.
//!
//! Brownian motion time-changed by an atomic speed measure in resistance
//! coordinates is, at atom resolution, a birth-death jump chain: from atom
//! `i` with neighbour gaps `d-`, `d+` the holding time is exponential with
//! mean `mass_i * g_i`, where `g_i = 2 d- d+ / (d- + d+)` is the killed
//! Brownian Green value at the centre point (the local time there is exactly
//! exponential), and the chain jumps left with probability `d+ / (d- + d+)`.
//! Reflection at the extreme atoms uses the one-sided Green value `2 d` and a
//! forced inward jump. No local times are ever simulated directly.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::params::{open_closed_unit, sample_edge_law, ModelParams};
use crate::scalar::KahanSum;
use crate::stats::EstimateResult;
use crate::subordinator::SubordinatorPath;
use crate::walk::GapValue;
use crate::{Error, Result};

/// One atom of a speed measure.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpeedAtom {
    /// Position in resistance coordinates.
    pub position: f64,
    /// Mass (tilt included).
    pub mass: f64,
    /// Spatial preimage.
    pub preimage: f64,
    /// Untilted weight behind the atom (trap depth, or the cell mass for the
    /// walls discretisation).
    pub weight: f64,
}

/// Discretised speed measure in resistance coordinates; reflecting at its
/// extreme atoms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomicSpeedMeasure {
    atoms: Vec<SpeedAtom>,
}

impl AtomicSpeedMeasure {
    pub fn new(atoms: Vec<SpeedAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySample);
        }
        if atoms.windows(2).any(|w| w[0].position >= w[1].position) {
            return Err(Error::InvalidParameter(
                "speed-measure positions must be strictly increasing".into(),
            ));
        }
        if atoms.windows(2).any(|w| w[0].preimage > w[1].preimage) {
            return Err(Error::InvalidParameter(
                "speed-measure preimages must be nondecreasing".into(),
            ));
        }
        if atoms.iter().any(|a| a.mass <= 0.0) {
            return Err(Error::InvalidParameter(
                "speed-measure masses must be positive".into(),
            ));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[SpeedAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Index of the atom whose preimage is nearest `v`.
    pub fn atom_nearest_preimage(&self, v: f64) -> usize {
        let k = self.atoms.partition_point(|a| a.preimage < v);
        if k == 0 {
            return 0;
        }
        if k >= self.atoms.len() {
            return self.atoms.len() - 1;
        }
        if (self.atoms[k].preimage - v).abs() < (v - self.atoms[k - 1].preimage).abs() {
            k
        } else {
            k - 1
        }
    }

    /// Holding mean and left-jump probability at atom `i` (one-sided Green
    /// value and forced inward jump at the extremes).
    pub fn local_rates(&self, i: usize) -> (f64, f64) {
        let n = self.atoms.len();
        let m = self.atoms[i].mass;
        if n == 1 {
            return (f64::INFINITY, 0.5);
        }
        if i == 0 {
            let d = self.atoms[1].position - self.atoms[0].position;
            (m * 2.0 * d, 0.0)
        } else if i == n - 1 {
            let d = self.atoms[n - 1].position - self.atoms[n - 2].position;
            (m * 2.0 * d, 1.0)
        } else {
            let d_minus = self.atoms[i].position - self.atoms[i - 1].position;
            let d_plus = self.atoms[i + 1].position - self.atoms[i].position;
            let green = 2.0 * d_minus * d_plus / (d_minus + d_plus);
            (m * green, d_plus / (d_minus + d_plus))
        }
    }

    /// Entry atom for a start in resistance coordinate `y0`: the atom itself
    /// when `y0` carries one, otherwise the Brownian hitting draw between the
    /// two neighbours.
    pub fn entry_atom<G: Rng + ?Sized>(&self, y0: f64, rng: &mut G) -> usize {
        let k = self.atoms.partition_point(|a| a.position < y0);
        if k == 0 {
            return 0;
        }
        if k >= self.atoms.len() {
            return self.atoms.len() - 1;
        }
        if self.atoms[k].position == y0 {
            return k;
        }
        let (xl, xr) = (self.atoms[k - 1].position, self.atoms[k].position);
        let p_left = (xr - y0) / (xr - xl);
        if rng.gen::<f64>() < p_left {
            k - 1
        } else {
            k
        }
    }
}

/// Walls-case speed measure: the continuous density `2 E[c] e^{2 lambda v} dv`
/// on `[-K, K]` discretised on a uniform grid and pushed through the tilted
/// resistance path (Stone approximation; the grid step is a refinement knob).
pub fn build_speed_measure_walls(
    sub0_tilted: &SubordinatorPath,
    lambda: f64,
    k: f64,
    grid_step: f64,
    mean_c: f64,
) -> Result<AtomicSpeedMeasure> {
    if grid_step <= 0.0 || k <= 0.0 || mean_c <= 0.0 {
        return Err(Error::InvalidParameter(
            "grid step, window and mean conductance must be positive".into(),
        ));
    }
    let cells = (2.0 * k / grid_step).round() as usize;
    let atoms = (0..=cells)
        .map(|j| {
            let v = -k + j as f64 * grid_step;
            SpeedAtom {
                position: sub0_tilted.value(v),
                mass: 2.0 * mean_c * (2.0 * lambda * v).exp() * grid_step,
                preimage: v,
                weight: 2.0 * mean_c * grid_step,
            }
        })
        .collect();
    AtomicSpeedMeasure::new(atoms)
}

/// Traps-case speed measure: one atom per jump `(y, w)` of the conductance
/// path above the weight cutoff, at position `S^{alpha0,lambda}(y)` with mass
/// `e^{2 lambda y} w`.
pub fn build_speed_measure_traps(
    sub0_tilted: &SubordinatorPath,
    subinf: &SubordinatorPath,
    lambda: f64,
    k: f64,
    weight_cutoff: f64,
) -> Result<AtomicSpeedMeasure> {
    if subinf.epsilon > weight_cutoff {
        return Err(Error::InvalidParameter(format!(
            "conductance path truncation {} exceeds the weight cutoff {}",
            subinf.epsilon, weight_cutoff
        )));
    }
    let atoms: Vec<SpeedAtom> = subinf
        .jumps_above(weight_cutoff, k)
        .into_iter()
        .map(|(y, w)| SpeedAtom {
            position: sub0_tilted.value(y),
            mass: (2.0 * lambda * y).exp() * w,
            preimage: y,
            weight: w,
        })
        .collect();
    AtomicSpeedMeasure::new(atoms)
}

/// Event record of one quasi-diffusion replica: the atom occupied after each
/// jump, starting at `atom_idx[0]` from time 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitPath {
    event_times: Vec<f64>,
    atom_idx: Vec<usize>,
}

impl LimitPath {
    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn atom_indices(&self) -> &[usize] {
        &self.atom_idx
    }

    pub fn atom_at(&self, t: f64) -> usize {
        let k = self.event_times.partition_point(|&s| s <= t);
        self.atom_idx[k.saturating_sub(1)]
    }

    pub fn spatial_at(&self, measure: &AtomicSpeedMeasure, t: f64) -> f64 {
        measure.atoms()[self.atom_at(t)].preimage
    }

    /// Largest atom index visited in `[a, b]`; atoms are ordered, so this is
    /// the running maximum in both coordinate systems.
    pub fn max_atom_over(&self, a: f64, b: f64) -> usize {
        let lo = self.event_times.partition_point(|&s| s <= a).saturating_sub(1);
        let hi = self.event_times.partition_point(|&s| s <= b);
        self.atom_idx[lo..hi].iter().copied().max().unwrap_or(0)
    }

    pub fn events(&self) -> usize {
        self.event_times.len() - 1
    }
}

/// Simulates the quasi-diffusion on `measure` from `start_atom` to `t_end`.
pub fn simulate_quasi_diffusion<G: Rng + ?Sized>(
    measure: &AtomicSpeedMeasure,
    start_atom: usize,
    t_end: f64,
    rng: &mut G,
) -> Result<LimitPath> {
    if measure.is_empty() {
        return Err(Error::EmptySample);
    }
    if start_atom >= measure.len() {
        return Err(Error::InvalidParameter(format!(
            "start atom {start_atom} outside the measure"
        )));
    }
    if t_end <= 0.0 {
        return Err(Error::InvalidParameter("t_end must be positive".into()));
    }
    // cache per-atom holding means and left-jump thresholds
    let n = measure.len();
    let mut hold = Vec::with_capacity(n);
    let mut thr_left = Vec::with_capacity(n);
    for i in 0..n {
        let (h, p_left) = measure.local_rates(i);
        hold.push(h);
        thr_left.push(if p_left >= 1.0 {
            u64::MAX
        } else {
            (p_left * u64::MAX as f64) as u64
        });
    }
    let mut clock = KahanSum::<f64>::new();
    let mut at = start_atom;
    let mut event_times = vec![0.0];
    let mut atom_idx = vec![at];
    loop {
        let e: f64 = Exp1.sample(rng);
        let dt = hold[at] * e;
        if !dt.is_finite() || clock.value() + dt >= t_end {
            break;
        }
        clock.add(dt);
        at = if rng.gen::<u64>() < thr_left[at] {
            at - 1
        } else {
            at + 1
        };
        event_times.push(clock.value());
        atom_idx.push(at);
    }
    Ok(LimitPath {
        event_times,
        atom_idx,
    })
}

/// Observables of one limit replica at `(t, h)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitObservables {
    /// Spatial position at `t`.
    pub z_t: f64,
    /// Running spatial supremum at `t`.
    pub z_bar_t: f64,
    /// Jump of the tilted resistance path at the wall blocking the maximum.
    pub gap: GapValue,
    /// Maximum-equality aging event within the window.
    pub max_equal: bool,
    /// Position-equality aging event between `t` and `t h`.
    pub position_equal: bool,
    /// Whether the process sits at its running maximum at `t`.
    pub at_maximum: bool,
    /// Mass of the occupied atom at `t`.
    pub trap_mass: f64,
    /// Untilted weight of the occupied atom at `t`.
    pub trap_weight: f64,
}

/// Derives the observables of a limit path. `resistance_path` is the tilted
/// resistance-coordinate subordinator used for the gap lookup: the blocking
/// wall is the first jump at or beyond the maximum's preimage (half-open
/// interval convention).
pub fn limit_observables(
    path: &LimitPath,
    measure: &AtomicSpeedMeasure,
    resistance_path: &SubordinatorPath,
    t: f64,
    h: f64,
) -> Result<LimitObservables> {
    let atoms = measure.atoms();
    let at_t = path.atom_at(t);
    let at_th = path.atom_at(t * h);
    let max_t = path.max_atom_over(0.0, t);
    let max_window = path.max_atom_over(t, t * h);
    let z_bar_t = atoms[max_t].preimage;
    let gap = if max_t + 1 >= atoms.len() {
        GapValue::BoundarySentinel
    } else {
        let v_bar = atoms[max_t].preimage;
        let tilt = resistance_path.tilt;
        match resistance_path
            .atoms()
            .iter()
            .find(|&&(u, _)| u > v_bar && u.abs() <= resistance_path.half_width)
        {
            Some(&(u, w)) => GapValue::Interior((tilt * u).exp() * w),
            None => GapValue::BoundarySentinel,
        }
    };
    Ok(LimitObservables {
        z_t: atoms[at_t].preimage,
        z_bar_t,
        gap,
        max_equal: max_t == max_window,
        position_equal: at_t == at_th,
        at_maximum: at_t == max_t,
        trap_mass: atoms[at_t].mass,
        trap_weight: atoms[at_t].weight,
    })
}

/// Monte Carlo estimate of the sub-aging limit
/// `E[exp(-h (A0 + A2) / (2 A1))]`, where `A1` is the untilted weight of the
/// trap occupied by the traps-case limit process at time one and `A0`, `A2`
/// are fresh untilted conductance draws. Exactly one at `h = 0`.
#[allow(clippy::too_many_arguments)]
pub fn theta_bar_limit<G: Rng + ?Sized>(
    params: &ModelParams,
    k: u32,
    h_list: &[f64],
    replicas: u64,
    sub0_tilted: &SubordinatorPath,
    subinf: &SubordinatorPath,
    weight_cutoff: f64,
    rng: &mut G,
) -> Result<Vec<EstimateResult>> {
    if replicas == 0 {
        return Err(Error::EmptySample);
    }
    if h_list.iter().any(|&h| h < 0.0) {
        return Err(Error::InvalidParameter("h must be nonnegative".into()));
    }
    let lambda = params.lambda;
    let measure = build_speed_measure_traps(sub0_tilted, subinf, lambda, k as f64, weight_cutoff)?;
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(replicas as usize); h_list.len()];
    for _ in 0..replicas {
        let start = measure.entry_atom(0.0, rng);
        let path = simulate_quasi_diffusion(&measure, start, 1.0, rng)?;
        let a1 = measure.atoms()[path.atom_at(1.0)].weight;
        let a0 = sample_edge_law(params, rng).0;
        let a2 = sample_edge_law(params, rng).0;
        let rate = (a0 + a2) / (2.0 * a1);
        for (slot, &h) in h_list.iter().enumerate() {
            samples[slot].push((-h * rate).exp());
        }
    }
    samples
        .iter()
        .map(|s| EstimateResult::from_mean(s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingBundle;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn three_atom_measure() -> AtomicSpeedMeasure {
        AtomicSpeedMeasure::new(vec![
            SpeedAtom {
                position: -1.0,
                mass: 1.0,
                preimage: -1.0,
                weight: 1.0,
            },
            SpeedAtom {
                position: 0.0,
                mass: 2.0,
                preimage: 0.0,
                weight: 2.0,
            },
            SpeedAtom {
                position: 3.0,
                mass: 1.5,
                preimage: 1.0,
                weight: 1.5,
            },
        ])
        .unwrap()
    }

    #[test]
    fn green_value_and_jump_probability() {
        // neighbours at -1 and 3, mass 2: holding mean 2 * (2*1*3/4) = 3,
        // left-jump probability 3/4
        let m = three_atom_measure();
        let (hold, p_left) = m.local_rates(1);
        assert_relative_eq!(hold, 3.0, max_relative = 1e-12);
        assert_relative_eq!(p_left, 0.75, max_relative = 1e-12);
        // boundary atoms: one-sided Green, forced inward jump
        let (h0, p0) = m.local_rates(0);
        assert_relative_eq!(h0, 2.0 * 1.0 * 1.0, max_relative = 1e-12);
        assert_eq!(p0, 0.0);
        let (h2, p2) = m.local_rates(2);
        assert_relative_eq!(h2, 1.5 * 2.0 * 3.0, max_relative = 1e-12);
        assert_eq!(p2, 1.0);
    }

    #[test]
    fn symmetric_neighbours_jump_half() {
        let m = AtomicSpeedMeasure::new(vec![
            SpeedAtom {
                position: -1.0,
                mass: 1.0,
                preimage: -1.0,
                weight: 1.0,
            },
            SpeedAtom {
                position: 0.0,
                mass: 1.0,
                preimage: 0.0,
                weight: 1.0,
            },
            SpeedAtom {
                position: 1.0,
                mass: 1.0,
                preimage: 1.0,
                weight: 1.0,
            },
        ])
        .unwrap();
        let (_, p_left) = m.local_rates(1);
        assert_eq!(p_left, 0.5);
    }

    #[test]
    fn walls_measure_mass_and_symmetry() {
        let mut rng = substream(1, &[0]);
        let sub = SubordinatorPath::sample(0.8, 2.5, 1e-3, 0.0, &mut rng).unwrap();
        let mean_c = 0.4;
        let k = 2.0;
        let s = 0.01;
        let m = build_speed_measure_walls(&sub, 0.0, k, s, mean_c).unwrap();
        // total mass within one grid cell of 2 * mean_c * 2K
        let want = 2.0 * mean_c * 2.0 * k;
        assert!((m.total_mass() - want).abs() <= 2.0 * mean_c * s + 1e-9);
        // lambda = 0: masses at +-v equal
        let atoms = m.atoms();
        let n = atoms.len();
        for j in 0..n / 2 {
            assert_relative_eq!(atoms[j].mass, atoms[n - 1 - j].mass, max_relative = 1e-12);
        }
        // positions nondecreasing in v
        assert!(atoms.windows(2).all(|w| w[0].position < w[1].position));
    }

    #[test]
    fn traps_measure_from_single_jump() {
        let sub0 = SubordinatorPath::from_atoms(0.8, 2.0, 1e-3, 0.0, vec![]).unwrap();
        let subinf =
            SubordinatorPath::from_atoms(0.5, 2.0, 1e-3, 0.0, vec![(0.3, 2.0)]).unwrap();
        let m = build_speed_measure_traps(&sub0, &subinf, 0.0, 2.0, 0.5).unwrap();
        assert_eq!(m.len(), 1);
        assert_relative_eq!(m.atoms()[0].mass, 2.0);
        assert_relative_eq!(m.atoms()[0].preimage, 0.3);
    }

    #[test]
    fn traps_measure_counts_jumps_above_cutoff() {
        let mut rng = substream(2, &[0]);
        let sub0 = SubordinatorPath::sample(0.8, 2.0, 1e-2, 0.0, &mut rng).unwrap();
        let subinf = SubordinatorPath::sample(0.5, 2.0, 1e-3, 0.0, &mut rng).unwrap();
        let cutoff = 0.05;
        let k = 1.5;
        let m = build_speed_measure_traps(&sub0, &subinf, 0.3, k, cutoff).unwrap();
        assert_eq!(m.len(), subinf.jumps_above(cutoff, k).len());
        // truncation above the cutoff is rejected
        assert!(build_speed_measure_traps(&sub0, &subinf, 0.3, k, 1e-4).is_err());
    }

    #[test]
    fn occupation_fractions_match_masses() {
        // stationary law of the birth-death chain: time-occupation
        // proportional to atom masses
        let m = three_atom_measure();
        let mut rng = substream(3, &[0]);
        let path = simulate_quasi_diffusion(&m, 1, 200_000.0, &mut rng).unwrap();
        let total_mass = m.total_mass();
        let mut occ = vec![0.0f64; m.len()];
        let times = path.event_times();
        let idx = path.atom_indices();
        for k in 0..times.len() - 1 {
            occ[idx[k]] += times[k + 1] - times[k];
        }
        let total_t: f64 = occ.iter().sum();
        for i in 0..m.len() {
            let want = m.atoms()[i].mass / total_mass;
            let got = occ[i] / total_t;
            // batch-free 3 sigma with a generous mixing allowance
            let sd = (want * (1.0 - want) / (total_t / 30.0)).sqrt();
            assert!(
                (got - want).abs() < 3.0 * sd,
                "atom {i}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn never_moving_path_keeps_position_equality() {
        let m = AtomicSpeedMeasure::new(vec![SpeedAtom {
            position: 0.0,
            mass: 1.0,
            preimage: 0.0,
            weight: 1.0,
        }])
        .unwrap();
        let mut rng = substream(4, &[0]);
        let path = simulate_quasi_diffusion(&m, 0, 10.0, &mut rng).unwrap();
        let sub = SubordinatorPath::from_atoms(0.8, 1.0, 1e-3, 0.0, vec![(0.5, 1.0)]).unwrap();
        let obs = limit_observables(&path, &m, &sub, 1.0, 4.0).unwrap();
        assert!(obs.position_equal);
        assert!(obs.max_equal);
    }

    #[test]
    fn gap_reads_the_blocking_jump() {
        // single-jump resistance path: whenever the maximum sits left of the
        // jump, the gap is that jump
        let sub = SubordinatorPath::from_atoms(0.8, 2.0, 1e-3, 0.0, vec![(0.31, 2.5)]).unwrap();
        let m = AtomicSpeedMeasure::new(vec![
            SpeedAtom {
                position: sub.value(-0.5),
                mass: 1.0,
                preimage: -0.5,
                weight: 1.0,
            },
            SpeedAtom {
                position: sub.value(0.3),
                mass: 1.0,
                preimage: 0.3,
                weight: 1.0,
            },
            SpeedAtom {
                position: sub.value(0.8),
                mass: 1.0,
                preimage: 0.8,
                weight: 1.0,
            },
        ])
        .unwrap();
        let mut rng = substream(5, &[0]);
        for _ in 0..20 {
            let path = simulate_quasi_diffusion(&m, 0, 3.0, &mut rng).unwrap();
            let obs = limit_observables(&path, &m, &sub, 1.0, 2.0).unwrap();
            let max_atom = path.max_atom_over(0.0, 1.0);
            match (max_atom, obs.gap) {
                (0 | 1, GapValue::Interior(g)) => assert_relative_eq!(g, 2.5),
                (2, GapValue::BoundarySentinel) => {}
                other => panic!("unexpected gap pairing {other:?}"),
            }
        }
    }

    #[test]
    fn theta_bar_is_one_at_zero_and_decreasing_in_h() {
        let params = ModelParams::walls_and_traps(0.8, 0.5, 0.5, 0.0);
        let bundle = CouplingBundle::new(&params, 2, 1e-3, 1e-3, 77).unwrap();
        let sub0 = bundle.limit_resistance_path(0.0).unwrap();
        let subinf = bundle.limit_conductance_path(0.0).unwrap().unwrap();
        let mut rng = substream(6, &[0]);
        let h_list = [0.0, 0.5, 1.0, 2.0, 4.0];
        let est = theta_bar_limit(
            &params, 2, &h_list, 2000, &sub0, &subinf, 0.05, &mut rng,
        )
        .unwrap();
        assert_eq!(est[0].estimate, 1.0);
        assert_eq!(est[0].stderr, 0.0);
        for w in est.windows(2) {
            assert!(
                w[1].estimate < w[0].estimate,
                "theta-bar not decreasing: {est:?}"
            );
        }
    }

    #[test]
    fn positions_and_masses_are_unassociated_across_bundles() {
        // positions come from the resistance path, masses from the
        // conductance path; a correlation test across bundles sits at the
        // permutation null
        let params = ModelParams::walls_and_traps(0.8, 0.5, 0.5, 0.0);
        let reps = 500;
        let mut spans = Vec::with_capacity(reps);
        let mut maxima = Vec::with_capacity(reps);
        for s in 0..reps {
            let bundle = CouplingBundle::new(&params, 1, 1e-2, 1e-2, 9000 + s as u64).unwrap();
            let sub0 = bundle.limit_resistance_path(0.0).unwrap();
            let subinf = bundle.limit_conductance_path(0.0).unwrap().unwrap();
            let m = build_speed_measure_traps(&sub0, &subinf, 0.0, 1.0, 0.05);
            let Ok(m) = m else { continue };
            let span = sub0.value(1.0) - sub0.value(-1.0);
            let max_mass = m.atoms().iter().map(|a| a.mass).fold(0.0f64, f64::max);
            spans.push(span.ln());
            maxima.push(max_mass.ln());
        }
        let n = spans.len() as f64;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ms, mm) = (mean(&spans), mean(&maxima));
        let mut num = 0.0;
        let (mut vs, mut vm) = (0.0, 0.0);
        for i in 0..spans.len() {
            num += (spans[i] - ms) * (maxima[i] - mm);
            vs += (spans[i] - ms).powi(2);
            vm += (maxima[i] - mm).powi(2);
        }
        let corr = num / (vs * vm).sqrt();
        assert!(corr.abs() < 3.0 / n.sqrt(), "correlation {corr}");
    }

    #[test]
    fn entry_atom_respects_hitting_probabilities() {
        let m = three_atom_measure();
        let mut rng = substream(7, &[0]);
        // y0 = 1.0 between atoms at 0 and 3: left with probability 2/3
        let n = 100_000;
        let mut left = 0;
        for _ in 0..n {
            if m.entry_atom(1.0, &mut rng) == 1 {
                left += 1;
            }
        }
        let p = left as f64 / n as f64;
        let sd = (2.0f64 / 9.0 / n as f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 3.0 * sd, "p = {p}");
        // exact atom position enters deterministically
        assert_eq!(m.entry_atom(0.0, &mut rng), 1);
    }
}
