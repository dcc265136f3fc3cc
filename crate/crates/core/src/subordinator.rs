//! Two-sided pure-jump subordinator paths.
//!
//! A path is stored as sorted `(location, jump)` atoms with jumps strictly
//! above a truncation threshold `epsilon`, plus a deterministic compensation
//! drift equal to the mean of the discarded small jumps per unit length,
//! `alpha epsilon^{1-alpha} / (1-alpha)`. Exponential tilting is applied on
//! evaluation: the resistance-side process uses `exp(-2 lambda u)`, the
//! conductance-side process `exp(+2 lambda u)`; the stored atoms are always
//! raw.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::params::open_closed_unit;
use crate::path::StepPath;
use crate::{Error, Result};

/// Mean of the jumps below `epsilon` under intensity `alpha x^{-1-alpha} dx`,
/// per unit length.
pub fn compensation_rate(alpha: f64, epsilon: f64) -> f64 {
    alpha * epsilon.powf(1.0 - alpha) / (1.0 - alpha)
}

/// Standard deviation per unit length of the discarded small-jump mass.
pub fn small_jump_sigma(alpha: f64, epsilon: f64) -> f64 {
    (alpha / (2.0 - alpha)).sqrt() * epsilon.powf(1.0 - 0.5 * alpha)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "PathRepr", into = "PathRepr")]
pub struct SubordinatorPath {
    pub alpha: f64,
    /// Covers locations in `[-half_width, half_width]`.
    pub half_width: f64,
    pub epsilon: f64,
    /// Tilt exponent coefficient `a`; evaluation weighs an atom at `u` by
    /// `exp(a u)`. Zero for the untilted path.
    pub tilt: f64,
    pub compensation_rate: f64,
    atoms: Vec<(f64, f64)>,
    /// Prefix sums of tilted atom weights, one slot past each atom.
    #[allow(clippy::rc_buffer)]
    prefix: Vec<f64>,
    /// Index of the first atom with location > 0.
    zero_split: usize,
}

#[derive(Serialize, Deserialize)]
struct PathRepr {
    alpha: f64,
    half_width: f64,
    epsilon: f64,
    tilt: f64,
    atoms: Vec<(f64, f64)>,
}

impl From<PathRepr> for SubordinatorPath {
    fn from(r: PathRepr) -> Self {
        SubordinatorPath::from_atoms(r.alpha, r.half_width, r.epsilon, r.tilt, r.atoms)
            .expect("serialised path is well formed")
    }
}

impl From<SubordinatorPath> for PathRepr {
    fn from(p: SubordinatorPath) -> Self {
        PathRepr {
            alpha: p.alpha,
            half_width: p.half_width,
            epsilon: p.epsilon,
            tilt: p.tilt,
            atoms: p.atoms,
        }
    }
}

impl SubordinatorPath {
    /// Samples atom locations as a Poisson process of intensity
    /// `epsilon^{-alpha}` per unit length on `[-half_width, half_width]`,
    /// with i.i.d. jumps of survival `(x/epsilon)^{-alpha}`.
    pub fn sample<G: Rng + ?Sized>(
        alpha: f64,
        half_width: f64,
        epsilon: f64,
        tilt: f64,
        rng: &mut G,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail index {alpha} not in (0, 1)"
            )));
        }
        if half_width <= 0.0 || epsilon <= 0.0 {
            return Err(Error::InvalidParameter(
                "window and truncation must be positive".into(),
            ));
        }
        let rate = epsilon.powf(-alpha);
        let mut atoms = Vec::with_capacity((2.2 * half_width * rate) as usize + 16);
        let mut u = -half_width;
        loop {
            u += -open_closed_unit(rng).ln() / rate;
            if u > half_width {
                break;
            }
            let jump = epsilon * open_closed_unit(rng).powf(-1.0 / alpha);
            atoms.push((u, jump));
        }
        Self::from_atoms(alpha, half_width, epsilon, tilt, atoms)
    }

    /// Builds a path from explicit atoms (test fixtures, rescaling).
    pub fn from_atoms(
        alpha: f64,
        half_width: f64,
        epsilon: f64,
        tilt: f64,
        mut atoms: Vec<(f64, f64)>,
    ) -> Result<Self> {
        atoms.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite locations"));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter(
                "atom locations must be distinct".into(),
            ));
        }
        let mut path = Self {
            alpha,
            half_width,
            epsilon,
            tilt,
            compensation_rate: compensation_rate(alpha, epsilon),
            atoms,
            prefix: Vec::new(),
            zero_split: 0,
        };
        path.rebuild_cache();
        Ok(path)
    }

    fn rebuild_cache(&mut self) {
        self.prefix = Vec::with_capacity(self.atoms.len() + 1);
        self.prefix.push(0.0);
        let mut acc = 0.0;
        for &(u, w) in &self.atoms {
            acc += (self.tilt * u).exp() * w;
            self.prefix.push(acc);
        }
        self.zero_split = self.atoms.partition_point(|&(u, _)| u <= 0.0);
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Same atoms, different tilt exponent.
    pub fn with_tilt(&self, tilt: f64) -> Self {
        let mut out = self.clone();
        out.tilt = tilt;
        out.rebuild_cache();
        out
    }

    /// Maps atoms `(u, w)` to `(u / space_div, weight_mul * w)`; the image of
    /// a subordinator under the scaling used by the conditioned-law coupling.
    pub fn rescaled(&self, space_div: f64, weight_mul: f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|&(u, w)| (u / space_div, weight_mul * w))
            .collect();
        Self::from_atoms(
            self.alpha,
            self.half_width / space_div,
            self.epsilon * weight_mul,
            self.tilt,
            atoms,
        )
    }

    fn drift_integral(&self, a: f64, b: f64) -> f64 {
        let r = self.compensation_rate;
        if self.tilt == 0.0 {
            r * (b - a)
        } else {
            r * ((self.tilt * b).exp() - (self.tilt * a).exp()) / self.tilt
        }
    }

    /// Tilted, compensated evaluation anchored at `S(0) = 0`:
    /// sum of tilted jumps over `(0, t]` (negated over `(t, 0]`) plus the
    /// tilt-weighted compensation drift.
    pub fn value(&self, t: f64) -> f64 {
        let hi = self.atoms.partition_point(|&(u, _)| u <= t);
        let z = self.zero_split;
        if t >= 0.0 {
            self.prefix[hi] - self.prefix[z] + self.drift_integral(0.0, t)
        } else {
            -(self.prefix[z] - self.prefix[hi]) - self.drift_integral(t, 0.0)
        }
    }

    /// Sum of raw (untilted) jumps over `(a, b]` plus the compensation mean;
    /// the increment fed to the coupling's quantile maps.
    pub fn raw_increment(&self, a: f64, b: f64) -> f64 {
        let lo = self.atoms.partition_point(|&(u, _)| u <= a);
        let hi = self.atoms.partition_point(|&(u, _)| u <= b);
        let mut sum = 0.0;
        for &(_, w) in &self.atoms[lo..hi] {
            sum += w;
        }
        sum + self.compensation_rate * (b - a)
    }

    /// Atoms with jump size strictly above `cutoff` inside `[-k, k]`.
    pub fn jumps_above(&self, cutoff: f64, k: f64) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .filter(|&&(u, w)| w > cutoff && u.abs() <= k)
            .copied()
            .collect()
    }

    /// Step-path snapshot of the tilted evaluation on `[-within, within]`,
    /// with breakpoints at every atom location plus the supplied extra grid
    /// (drift between breakpoints collapses onto the preceding one).
    pub fn to_step_path(&self, extra_breaks: &[f64], within: f64) -> Result<StepPath<f64>> {
        let within = within.min(self.half_width);
        let mut breaks: Vec<f64> = Vec::with_capacity(self.atoms.len() + extra_breaks.len() + 2);
        breaks.push(-within);
        breaks.extend(self.atoms.iter().map(|&(u, _)| u));
        breaks.extend_from_slice(extra_breaks);
        breaks.push(within);
        breaks.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite breaks"));
        breaks.dedup();
        breaks.retain(|&b| b.abs() <= within);
        let values = breaks.iter().map(|&b| self.value(b)).collect();
        StepPath::new(breaks, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::stats::{two_sample_ks, Ecdf, ks_distance};
    use approx::assert_relative_eq;

    #[test]
    fn compensation_rate_closed_form() {
        // mean of jumps below 1e-4 at alpha = 1/2: 0.5 * 1e-2 / 0.5 = 0.01
        assert_relative_eq!(compensation_rate(0.5, 1e-4), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn anchored_at_zero_and_monotone() {
        let mut rng = substream(40, &[0]);
        for rep in 0..20 {
            let tilt = if rep % 2 == 0 { 0.0 } else { -0.8 };
            let p = SubordinatorPath::sample(0.5, 2.0, 0.01, tilt, &mut rng).unwrap();
            assert_eq!(p.value(0.0), 0.0);
            let mut prev = p.value(-2.0);
            for i in -200..=200 {
                let t = i as f64 / 100.0;
                let v = p.value(t);
                assert!(v >= prev - 1e-12, "non-monotone at t = {t}");
                prev = v;
            }
        }
    }

    #[test]
    fn mean_atom_count_matches_poisson_intensity() {
        // window length 2, epsilon = 0.01, alpha = 1/2: mean = 2 * 10 = 20
        let mut rng = substream(41, &[0]);
        let reps = 10_000;
        let mut total = 0usize;
        for _ in 0..reps {
            let p = SubordinatorPath::sample(0.5, 1.0, 0.01, 0.0, &mut rng).unwrap();
            total += p.atoms().len();
        }
        let mean = total as f64 / reps as f64;
        let sd = (20.0f64 / reps as f64).sqrt();
        assert!((mean - 20.0).abs() < 3.0 * sd, "mean = {mean}");
    }

    #[test]
    fn stationary_increments_two_sample_ks() {
        let mut rng = substream(42, &[0]);
        let n = 10_000;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let p = SubordinatorPath::sample(0.5, 4.0, 1e-4, 0.0, &mut rng).unwrap();
            a.push(p.value(1.0));
            b.push(p.value(3.0) - p.value(2.0));
        }
        let (_, pval) = two_sample_ks(&a, &b).unwrap();
        assert!(pval > 0.01, "stationarity KS p = {pval}");
    }

    #[test]
    fn self_similarity_two_sample_ks() {
        // n^{1/alpha} S(1/n) ~ S(1) within the truncation bias
        let mut rng = substream(43, &[0]);
        let n = 10_000;
        let scale_n = 8.0f64;
        let mut small = Vec::with_capacity(n);
        let mut unit = Vec::with_capacity(n);
        for _ in 0..n {
            let p = SubordinatorPath::sample(0.5, 1.0, 1e-6, 0.0, &mut rng).unwrap();
            small.push(scale_n.powf(2.0) * p.value(1.0 / scale_n));
            let q = SubordinatorPath::sample(0.5, 1.0, 1e-6, 0.0, &mut rng).unwrap();
            unit.push(q.value(1.0));
        }
        let (_, pval) = two_sample_ks(&small, &unit).unwrap();
        assert!(pval > 0.01, "self-similarity KS p = {pval}");
    }

    #[test]
    fn increments_match_stable_marginal() {
        // S(1) against the exact Kanter sampler
        let mut rng = substream(44, &[0]);
        let n = 20_000;
        let mut path_vals = Vec::with_capacity(n);
        let mut exact = Vec::with_capacity(n);
        for _ in 0..n {
            let p = SubordinatorPath::sample(0.8, 1.0, 1e-5, 0.0, &mut rng).unwrap();
            path_vals.push(p.value(1.0));
            exact.push(crate::stable::sample_stable(0.8, &mut rng));
        }
        let ea = Ecdf::new(path_vals).unwrap();
        let eb = Ecdf::new(exact).unwrap();
        let d = ks_distance(&ea, &eb);
        let p = crate::stats::ks_two_sample_p(d, n, n);
        assert!(p > 0.01, "marginal KS p = {p}, d = {d}");
    }

    #[test]
    fn rescaled_path_preserves_law_shape() {
        let mut rng = substream(45, &[0]);
        let p = SubordinatorPath::sample(0.5, 2.0, 1e-4, 0.0, &mut rng).unwrap();
        let r = p.rescaled(0.5, 2.0f64.powf(2.0)).unwrap();
        assert_eq!(r.atoms().len(), p.atoms().len());
        assert_relative_eq!(r.half_width, 4.0);
        // atom (u, w) maps to (2u, 4w)
        let (u0, w0) = p.atoms()[0];
        let (u1, w1) = r.atoms()[0];
        assert_relative_eq!(u1, 2.0 * u0);
        assert_relative_eq!(w1, 4.0 * w0);
    }

    #[test]
    fn serde_round_trip() {
        let mut rng = substream(46, &[0]);
        let p = SubordinatorPath::sample(0.6, 1.0, 1e-3, -0.4, &mut rng).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let q: SubordinatorPath = serde_json::from_str(&json).unwrap();
        assert_eq!(p.atoms(), q.atoms());
        assert_eq!(p.value(0.7), q.value(0.7));
    }
}
