//! Event-driven continuous-time random walk on a conductance environment.
//!
//! The embedded chain jumps right from `x` with probability
//! `c(x, x+1) / (c(x-1, x) + c(x, x+1))` (tilted weights); holding times are
//! i.i.d. mean-1 exponentials. Reflection at the window boundary forces the
//! inward step. The trap-collapse accelerator replaces the many crossings of
//! an edge whose conductance dwarfs both neighbours by one draw of the
//! (cycle count, total time, exit side) triple, whose joint law it preserves
//! exactly: the cycle count is geometric, the time a gamma variable with the
//! step count as shape, and the side an independent Bernoulli.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::params::{open_closed_unit, Mode, ScaleSet};
use crate::scalar::{KahanSum, Real};
use crate::{Error, Result};

/// Trap-collapse configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CollapseOptions {
    /// Collapse a pair when the middle conductance exceeds `threshold` times
    /// both outer neighbours.
    pub threshold: f64,
    /// Collapse only when the next observation boundary is at least `margin`
    /// expected excursion lengths away. The probability that a committed
    /// excursion still straddles a boundary is below `exp(-margin/2)`,
    /// vanishing at the default.
    pub margin: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            threshold: 50.0,
            margin: 64.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct WalkOptions {
    /// Reflect at the window boundary (deterministic inward step).
    pub reflected: bool,
    pub collapse: Option<CollapseOptions>,
}

/// One collapsed excursion within a 2-site pair.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CollapseInterval {
    pub start_time: f64,
    pub end_time: f64,
    /// The pair `(j, j+1)` the walk stayed in.
    pub pair: (i64, i64),
    /// Embedded steps the excursion replaced.
    pub steps: u64,
    /// Whether the upper (lower) site of the pair was visited.
    pub touched_high: bool,
    pub touched_low: bool,
}

/// Event-time/position record of one replica.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WalkPath {
    pub start: i64,
    pub reflected: bool,
    event_times: Vec<f64>,
    positions: Vec<i64>,
    pub collapse_log: Vec<CollapseInterval>,
}

impl WalkPath {
    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn events(&self) -> u64 {
        self.event_times.len() as u64 - 1
    }

    /// Cadlag position at time `t`.
    pub fn value_at(&self, t: f64) -> i64 {
        let k = self.event_times.partition_point(|&s| s <= t);
        self.positions[k.saturating_sub(1)]
    }

    /// Supremum of the position over `[a, b]`, accounting for sites touched
    /// inside collapsed intervals (touch times within an interval are
    /// attributed to its start).
    pub fn sup_over(&self, a: f64, b: f64) -> i64 {
        let mut sup = i64::MIN;
        let lo = self.event_times.partition_point(|&s| s <= a).saturating_sub(1);
        let hi = self.event_times.partition_point(|&s| s <= b);
        for k in lo..hi {
            sup = sup.max(self.positions[k]);
        }
        for c in &self.collapse_log {
            if c.start_time <= b && c.end_time > a {
                let top = if c.touched_high { c.pair.1 } else { c.pair.0 };
                sup = sup.max(top);
            }
        }
        sup
    }

    /// Running supremum at `t`.
    pub fn sup_at(&self, t: f64) -> i64 {
        self.sup_over(0.0, t)
    }

    /// Distinct sites visited in `[a, b]`, in first-touch order (collapse
    /// touches count from the interval start).
    fn visit_sequence(&self, a: f64, b: f64) -> Vec<(f64, i64)> {
        let mut seq = Vec::new();
        let start_idx = self.event_times.partition_point(|&s| s <= a).saturating_sub(1);
        let mut cidx = 0usize;
        for k in start_idx..self.event_times.len() {
            let t = self.event_times[k].max(a);
            if t > b {
                break;
            }
            while cidx < self.collapse_log.len() && self.collapse_log[cidx].start_time <= t {
                let c = &self.collapse_log[cidx];
                if c.start_time >= a {
                    if c.touched_low {
                        seq.push((c.start_time, c.pair.0));
                    }
                    if c.touched_high {
                        seq.push((c.start_time, c.pair.1));
                    }
                }
                cidx += 1;
            }
            seq.push((t, self.positions[k]));
        }
        seq
    }

    /// First time after `shift` at which more than two distinct sites have
    /// been visited (the escape variable), if it occurs before the horizon.
    pub fn escape_time_after(&self, shift: f64) -> Option<f64> {
        let horizon = *self.event_times.last()?;
        let seq = self.visit_sequence(shift, horizon);
        let mut first = None;
        let mut second = None;
        for (t, x) in seq {
            match (first, second) {
                (None, _) => first = Some(x),
                (Some(a), None) if x != a => second = Some(x),
                (Some(a), Some(b)) if x != a && x != b => return Some(t - shift),
                _ => {}
            }
        }
        None
    }

    /// Whether every position in `[a, b]` lies within some 2-site pair.
    pub fn range_within_pair(&self, a: f64, b: f64) -> bool {
        let mut distinct: Vec<i64> = Vec::new();
        for (_, x) in self.visit_sequence(a, b) {
            if !distinct.contains(&x) {
                distinct.push(x);
                if distinct.len() > 2 {
                    return false;
                }
            }
        }
        true
    }
}

/// Exit-side probabilities of a pair with middle edge weight `c_mid` and
/// outer edge weights `c_left`, `c_right`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairRates {
    /// Exit-left probability per visit to the left site.
    pub a: f64,
    /// Exit-right probability per visit to the right site.
    pub b: f64,
}

impl PairRates {
    pub fn new(c_left: f64, c_mid: f64, c_right: f64) -> Self {
        Self {
            a: c_left / (c_left + c_mid),
            b: c_right / (c_right + c_mid),
        }
    }

    /// Expected embedded steps to exit, starting on the left site.
    pub fn mean_steps_from_left(&self) -> f64 {
        let q1 = 1.0 - self.a;
        let q2 = 1.0 - self.b;
        (1.0 + q1) / (1.0 - q1 * q2)
    }

    pub fn mean_steps_from_right(&self) -> f64 {
        let q1 = 1.0 - self.a;
        let q2 = 1.0 - self.b;
        (1.0 + q2) / (1.0 - q1 * q2)
    }
}

/// One exact pair-excursion draw.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairEscape {
    pub steps: u64,
    pub duration: f64,
    pub exit_right: bool,
    /// Visited the site opposite the starting one.
    pub touched_other: bool,
}

/// Samples (cycle count, exit side, total duration) for an excursion in a
/// 2-site pair, started on the left (`from_left`) or right site.
pub(crate) fn pair_escape_sample<G: Rng + ?Sized>(
    rates: &PairRates,
    from_left: bool,
    rng: &mut G,
) -> PairEscape {
    let (first_exit, other_exit) = if from_left {
        (rates.a, rates.b)
    } else {
        (rates.b, rates.a)
    };
    let u_cycle = (1.0 - first_exit) * (1.0 - other_exit);
    let cycles = if u_cycle <= 0.0 {
        0u64
    } else {
        let u = open_closed_unit(rng);
        (u.ln() / u_cycle.ln()) as u64
    };
    // conditional on escaping, exit on the starting side first
    let p_first = first_exit / (first_exit + (1.0 - first_exit) * other_exit);
    let exit_first_side = rng.gen::<f64>() < p_first;
    let steps = 2 * cycles + if exit_first_side { 1 } else { 2 };
    let duration = if steps == 1 {
        -open_closed_unit(rng).ln()
    } else {
        Gamma::new(steps as f64, 1.0)
            .expect("positive shape")
            .sample(rng)
    };
    let exit_right = exit_first_side != from_left;
    PairEscape {
        steps,
        duration,
        exit_right,
        // the far site is visited whenever the excursion cycles at least
        // once or exits through the opposite side
        touched_other: cycles >= 1 || !exit_first_side,
    }
}

/// Expected time (mean-1 holdings) to first step outside the pair, starting
/// at the left site of the middle edge; first-step analysis gives
/// `a = 1 + q1 b`, `b = 1 + q2 a` with `q1 = c_mid/(c_mid+c_left)`,
/// `q2 = c_mid/(c_mid+c_right)`.
pub fn exact_mean_exit_two_site<R: Real>(c_left: R, c_mid: R, c_right: R) -> Result<R> {
    if c_left <= R::zero() || c_mid <= R::zero() || c_right <= R::zero() {
        return Err(Error::InvalidParameter(
            "pair weights must be positive".into(),
        ));
    }
    let q1 = c_mid / (c_mid + c_left);
    let q2 = c_mid / (c_mid + c_right);
    Ok((R::one() + q1) / (R::one() - q1 * q2))
}

/// Laplace transform of a geometric number of mean-1 exponential pairs:
/// with `p1 = c_left/(c_left+c_mid)`, `p2 = c_right/(c_right+c_mid)` and
/// `p = 1 - (1-p1)(1-p2)`, returns `p / (1 - (1-p)(1+xi)^{-2})`. A sandwich
/// for the true escape transform, tight as `c_mid` grows.
pub fn escape_laplace_geom<R: Real>(c_left: R, c_mid: R, c_right: R, xi: R) -> Result<R> {
    if c_left <= R::zero() || c_mid <= R::zero() || c_right <= R::zero() {
        return Err(Error::InvalidParameter(
            "pair weights must be positive".into(),
        ));
    }
    if xi < R::zero() {
        return Err(Error::InvalidParameter(
            "Laplace argument must be nonnegative".into(),
        ));
    }
    let p1 = c_left / (c_left + c_mid);
    let p2 = c_right / (c_right + c_mid);
    let p = R::one() - (R::one() - p1) * (R::one() - p2);
    let z = (R::one() + xi).powi(-2);
    Ok(p / (R::one() - (R::one() - p) * z))
}

/// Implied mean of the geometric-pair sandwich, `2(1-p)/p`.
pub fn escape_geom_mean<R: Real>(c_left: R, c_mid: R, c_right: R) -> Result<R> {
    if c_left <= R::zero() || c_mid <= R::zero() || c_right <= R::zero() {
        return Err(Error::InvalidParameter(
            "pair weights must be positive".into(),
        ));
    }
    let p1 = c_left / (c_left + c_mid);
    let p2 = c_right / (c_right + c_mid);
    let p = R::one() - (R::one() - p1) * (R::one() - p2);
    Ok(R::of(2.0) * (R::one() - p) / p)
}

#[doc(hidden)]
pub enum DriveEvent {
    Jump { time: f64, position: i64 },
    Collapse(CollapseInterval),
}

#[doc(hidden)]
pub struct DriveOutcome {
    pub obs_positions: Vec<i64>,
    pub final_position: i64,
    pub final_time: f64,
    pub events: u64,
}

/// Core event loop. Emits every position change to `sink`; captures the walk
/// position at each observation time. Collapse commits only when the next
/// observation boundary (or the horizon) is `margin` expected excursion
/// lengths away, so observed quantities keep their exact joint law.
#[doc(hidden)]
pub fn drive_walk<G, F>(
    env: &Environment,
    x0: i64,
    t_end: f64,
    obs_times: &[f64],
    options: &WalkOptions,
    rng: &mut G,
    mut sink: F,
) -> Result<DriveOutcome>
where
    G: Rng + ?Sized,
    F: FnMut(DriveEvent) -> bool,
{
    let half = env.half();
    if x0 < -half || x0 > half {
        return Err(Error::OutOfWindow {
            index: x0,
            lo: -half,
            hi: half,
        });
    }
    if t_end <= 0.0 {
        return Err(Error::InvalidParameter("t_end must be positive".into()));
    }
    if obs_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "observation times must be sorted".into(),
        ));
    }
    if let Some(&last) = obs_times.last() {
        if last > t_end || obs_times[0] < 0.0 {
            return Err(Error::InvalidParameter(
                "observation times must lie in [0, t_end]".into(),
            ));
        }
    }
    if !options.reflected {
        // the unreflected walk is only defined while it stays in the window;
        // callers must size the window so boundary hits are impossible or
        // handle the error
    }

    let thr = env.jump_thresholds();
    let collapse = options.collapse.as_ref();
    // per-edge pair rates for collapsible interior edges
    let collapsible: Vec<Option<PairRates>> = match collapse {
        None => Vec::new(),
        Some(copt) => env
            .edge_range()
            .map(|e| {
                if e - 1 < -half || e + 1 >= half {
                    return None;
                }
                let mid = env.conductance_tilted(e);
                let left = env.conductance_tilted(e - 1);
                let right = env.conductance_tilted(e + 1);
                if mid >= copt.threshold * left && mid >= copt.threshold * right {
                    Some(PairRates::new(left, mid, right))
                } else {
                    None
                }
            })
            .collect(),
    };
    let edge_rates = |e: i64| -> Option<&PairRates> {
        if collapsible.is_empty() {
            None
        } else {
            collapsible[(e + half) as usize].as_ref()
        }
    };

    let mut x = x0;
    let mut clock = KahanSum::<f64>::new();
    let mut obs_idx = 0usize;
    let mut obs_positions = Vec::with_capacity(obs_times.len());
    let mut events = 0u64;

    'outer: loop {
        let t = clock.value();
        // trap-collapse: try the pair on either side of the current site
        if collapse.is_some() {
            let candidate = if x < half && edge_rates(x).is_some() {
                Some((x, true))
            } else if x > -half && edge_rates(x - 1).is_some() {
                Some((x - 1, false))
            } else {
                None
            };
            if let Some((e, from_left)) = candidate {
                let rates = edge_rates(e).expect("candidate edge");
                let mean_len = if from_left {
                    rates.mean_steps_from_left()
                } else {
                    rates.mean_steps_from_right()
                };
                let boundary = if obs_idx < obs_times.len() {
                    obs_times[obs_idx].min(t_end)
                } else {
                    t_end
                };
                let margin = collapse.expect("checked").margin;
                if boundary - t >= margin * mean_len {
                    let esc = pair_escape_sample(rates, from_left, rng);
                    let end = t + esc.duration;
                    let interval = CollapseInterval {
                        start_time: t,
                        end_time: end,
                        pair: (e, e + 1),
                        steps: esc.steps,
                        touched_high: if from_left { esc.touched_other } else { true },
                        touched_low: if from_left { true } else { esc.touched_other },
                    };
                    // an excursion overrunning the boundary has probability
                    // below exp(-margin/2); observations inside it read the
                    // held entry site
                    while obs_idx < obs_times.len() && obs_times[obs_idx] < end {
                        obs_positions.push(x);
                        obs_idx += 1;
                    }
                    clock.add(esc.duration);
                    events += esc.steps;
                    x = if esc.exit_right { e + 2 } else { e - 1 };
                    if !sink(DriveEvent::Collapse(interval)) {
                        break 'outer;
                    }
                    if clock.value() >= t_end {
                        break 'outer;
                    }
                    if !sink(DriveEvent::Jump {
                        time: clock.value(),
                        position: x,
                    }) {
                        break 'outer;
                    }
                    continue;
                }
            }
        }

        let dt = -open_closed_unit(rng).ln();
        let t_next = t + dt;
        while obs_idx < obs_times.len() && obs_times[obs_idx] < t_next {
            obs_positions.push(x);
            obs_idx += 1;
        }
        if t_next >= t_end {
            clock.add(dt);
            break;
        }
        clock.add(dt);
        events += 1;
        x = if x == -half {
            x + 1
        } else if x == half {
            x - 1
        } else if rng.gen::<u64>() < thr[(x + half) as usize] {
            x + 1
        } else {
            x - 1
        };
        if !sink(DriveEvent::Jump {
            time: clock.value(),
            position: x,
        }) {
            break;
        }
    }
    while obs_idx < obs_times.len() {
        obs_positions.push(x);
        obs_idx += 1;
    }
    Ok(DriveOutcome {
        obs_positions,
        final_position: x,
        final_time: t_end,
        events,
    })
}

/// Simulates one replica and records the full event path.
pub fn simulate_walk<G: Rng + ?Sized>(
    env: &Environment,
    x0: i64,
    t_end: f64,
    obs_times: &[f64],
    options: &WalkOptions,
    rng: &mut G,
) -> Result<WalkPath> {
    let mut path = WalkPath {
        start: x0,
        reflected: options.reflected,
        event_times: vec![0.0],
        positions: vec![x0],
        collapse_log: Vec::new(),
    };
    drive_walk(env, x0, t_end, obs_times, options, rng, |ev| {
        match ev {
            DriveEvent::Jump { time, position } => {
                path.event_times.push(time);
                path.positions.push(position);
            }
            DriveEvent::Collapse(interval) => path.collapse_log.push(interval),
        }
        true
    })?;
    Ok(path)
}

/// Gap observable: either the rescaled tilted resistance of the edge to the
/// right of the running maximum, or the sentinel category at the reflecting
/// boundary (reported separately, never entering numeric ECDFs).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GapValue {
    Interior(f64),
    BoundarySentinel,
}

impl GapValue {
    pub fn interior(&self) -> Option<f64> {
        match self {
            GapValue::Interior(v) => Some(*v),
            GapValue::BoundarySentinel => None,
        }
    }
}

/// Walk observables at `(t, h)`: maxima on the wall clock `t a_n`, the gap
/// statistic, and the sub-aging escape variable on the trap clock.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalkObservables {
    /// Running supremum at `t a_n` and at `t h a_n`.
    pub sup_at: Vec<(f64, i64)>,
    /// Supremum over the window `[t a_n, t h a_n]`.
    pub window_sup: i64,
    /// `Gap_n(t)`: rescaled tilted resistance at the running maximum.
    pub gap: GapValue,
    /// Escape time after the shift `b_n` (`RWT` only, when the horizon allows).
    pub escape_time: Option<f64>,
    /// `T^{(n)} = escape_time / conductance_scale`.
    pub t_norm: Option<f64>,
    /// Sub-aging window event: all positions in `[b_n, b_n + h d_inf]` stay
    /// within a 2-site pair.
    pub window_range_ok: Option<bool>,
}

/// Derives the observables of one recorded path.
pub fn walk_observables(
    path: &WalkPath,
    env: &Environment,
    scales: &ScaleSet,
    t: f64,
    h: f64,
) -> Result<WalkObservables> {
    let horizon = *path.event_times.last().expect("nonempty path");
    let t_abs = t * scales.wall_time;
    let th_abs = t * h * scales.wall_time;
    if t_abs > horizon {
        return Err(Error::InvalidParameter(format!(
            "requested time {t_abs} beyond simulated horizon {horizon}"
        )));
    }
    let sup_t = path.sup_at(t_abs);
    let sup_th = path.sup_at(th_abs.min(horizon));
    let window_sup = path.sup_over(t_abs, th_abs.min(horizon));
    let gap = if sup_t >= env.half() {
        GapValue::BoundarySentinel
    } else {
        GapValue::Interior(env.resistance_tilted(sup_t) / scales.resistance_scale)
    };

    let (escape_time, t_norm, window_range_ok) = match (env.params.mode, scales.trap_time) {
        (Mode::Rwt, Some(b_n)) if b_n <= horizon => {
            let d_inf = scales.conductance_scale.expect("RWT scales");
            let esc = path.escape_time_after(b_n);
            let t_norm = esc.map(|e| e / d_inf);
            let window_hi = b_n + h * d_inf;
            let ok = if window_hi <= horizon {
                Some(path.range_within_pair(b_n, window_hi))
            } else {
                None
            };
            // the window event and the escape variable are two readings of
            // one identity; check it whenever both sides are defined
            if let (Some(tn), Some(ok_flag)) = (t_norm, ok) {
                debug_assert_eq!(ok_flag, tn >= h, "window/escape identity violated");
            }
            (esc, t_norm, ok)
        }
        _ => (None, None, None),
    };

    Ok(WalkObservables {
        sup_at: vec![(t_abs, sup_t), (th_abs, sup_th)],
        window_sup,
        gap,
        escape_time,
        t_norm,
        window_range_ok,
    })
}

/// Empirical distribution of the normalised escape time
/// `T (c_left + c_right) / (2 c_mid)` from the pair `{j, j+1}`, started at
/// `j`. Uses the exact excursion sampler; approaches Exp(1) as the middle
/// conductance grows.
pub fn escape_time_distribution<G: Rng + ?Sized>(
    env: &Environment,
    edge_j: i64,
    replicas: u64,
    rng: &mut G,
) -> Result<crate::stats::Ecdf<f64>> {
    if replicas == 0 {
        return Err(Error::EmptySample);
    }
    let half = env.half();
    if edge_j - 1 < -half || edge_j + 1 >= half {
        return Err(Error::OutOfWindow {
            index: edge_j,
            lo: -half + 1,
            hi: half - 2,
        });
    }
    let c_left = env.conductance_tilted(edge_j - 1);
    let c_mid = env.conductance_tilted(edge_j);
    let c_right = env.conductance_tilted(edge_j + 1);
    let rates = PairRates::new(c_left, c_mid, c_right);
    let norm = (c_left + c_right) / (2.0 * c_mid);
    let samples = (0..replicas)
        .map(|_| pair_escape_sample(&rates, true, rng).duration * norm)
        .collect();
    crate::stats::Ecdf::new(samples)
}
