//! Model parameters, default edge laws and scaling sequences.
//!
//! The default laws fix the slowly varying prefactors to constants so every
//! scale below has an exact closed form:
//!
//! * walls-only (`RW`): `r = U^{-1/alpha0}` for uniform `U`, hence
//!   `P(r > t) = t^{-alpha0}` for `t >= 1` and `c = 1/r <= 1`;
//! * walls and traps (`RWT`): with probability `p` the edge is
//!   conductance-type, `c = U^{-1/alpha_inf}`, otherwise resistance-type,
//!   `r = U^{-1/alpha0}`. The mixture weights `p`, `1 - p` play the role of
//!   the slowly varying functions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::{Error, Result};

/// Which tails the environment carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Heavy-tailed resistances only (walls).
    #[serde(rename = "RW")]
    Rw,
    /// Heavy-tailed resistances and conductances (walls and traps).
    #[serde(rename = "RWT")]
    Rwt,
}

/// Tail indices, bias and mixture weight of the edge law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mode: Mode,
    /// Tail index of the resistance law, in (0, 1).
    pub alpha0: f64,
    /// Tail index of the conductance law, in (0, 1); `RWT` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_inf: Option<f64>,
    /// Bias parameter; the walk at scale `n` is tilted by `exp(2*lambda*i/n)`.
    pub lambda: f64,
    /// Probability that an edge is conductance-type; `RWT` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl ModelParams {
    pub fn walls(alpha0: f64, lambda: f64) -> Self {
        Self {
            mode: Mode::Rw,
            alpha0,
            alpha_inf: None,
            lambda,
            p: None,
        }
    }

    pub fn walls_and_traps(alpha0: f64, alpha_inf: f64, p: f64, lambda: f64) -> Self {
        Self {
            mode: Mode::Rwt,
            alpha0,
            alpha_inf: Some(alpha_inf),
            lambda,
            p: Some(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha0 = {} not in (0, 1)",
                self.alpha0
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        match self.mode {
            Mode::Rw => Ok(()),
            Mode::Rwt => {
                let ai = self
                    .alpha_inf
                    .ok_or_else(|| Error::InvalidParameter("RWT needs alpha_inf".into()))?;
                let p = self
                    .p
                    .ok_or_else(|| Error::InvalidParameter("RWT needs p".into()))?;
                if !(ai > 0.0 && ai < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha_inf = {ai} not in (0, 1)"
                    )));
                }
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidParameter(format!("p = {p} not in (0, 1)")));
                }
                Ok(())
            }
        }
    }

    /// Probability that an edge is conductance-type, i.e. `P(c >= 1)`.
    /// Zero under the default walls-only law, whose conductances are `<= 1`.
    pub fn conductance_fraction(&self) -> f64 {
        match self.mode {
            Mode::Rw => 0.0,
            Mode::Rwt => self.p.expect("validated"),
        }
    }

    /// Mean conductance `E[c]` of the untilted law; `None` when infinite.
    /// Under the default walls-only law `c = U^{1/alpha0}`, so
    /// `E[c] = alpha0 / (1 + alpha0)`.
    pub fn mean_conductance(&self) -> Option<f64> {
        match self.mode {
            Mode::Rw => Some(self.alpha0 / (1.0 + self.alpha0)),
            Mode::Rwt => None,
        }
    }
}

/// Closed-form scaling sequences for the default laws at window scale `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSet {
    pub n: u64,
    /// Resistance scale: `inf { t : P(r > t) <= 1/n }`.
    pub resistance_scale: f64,
    /// Conductance scale (`RWT` only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conductance_scale: Option<f64>,
    /// Wall time scale `a_n = n * resistance_scale`.
    pub wall_time: f64,
    /// Trap time scale `b_n = conductance_scale * resistance_scale` (`RWT`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trap_time: Option<f64>,
    /// Scale of the conditioned law `r | r > 1`.
    pub conditioned_resistance_scale: f64,
    /// Scale of the conditioned law `c | c >= 1` (`RWT`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditioned_conductance_scale: Option<f64>,
}

/// Exact scaling terms for the default laws.
pub fn scaling_terms(params: &ModelParams, n: u64) -> Result<ScaleSet> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let nf = n as f64;
    let d_star0 = nf.powf(1.0 / params.alpha0);
    match params.mode {
        Mode::Rw => {
            let d0 = d_star0;
            Ok(ScaleSet {
                n,
                resistance_scale: d0,
                conductance_scale: None,
                wall_time: nf * d0,
                trap_time: None,
                conditioned_resistance_scale: d_star0,
                conditioned_conductance_scale: None,
            })
        }
        Mode::Rwt => {
            let p = params.p.expect("validated");
            let ai = params.alpha_inf.expect("validated");
            let d0 = ((1.0 - p) * nf).powf(1.0 / params.alpha0);
            let dinf = (p * nf).powf(1.0 / ai);
            Ok(ScaleSet {
                n,
                resistance_scale: d0,
                conductance_scale: Some(dinf),
                wall_time: nf * d0,
                trap_time: Some(dinf * d0),
                conditioned_resistance_scale: d_star0,
                conditioned_conductance_scale: Some(nf.powf(1.0 / ai)),
            })
        }
    }
}

/// Quantile of the unit-scale Pareto tail: the `t` with `t^{-alpha} = u`.
pub fn pareto_quantile<R: Real>(u: R, alpha: R) -> Result<R> {
    if !(u > R::zero() && u <= R::one()) {
        return Err(Error::InvalidParameter(format!(
            "quantile argument {u} not in (0, 1]"
        )));
    }
    if !(alpha > R::zero() && alpha < R::one()) {
        return Err(Error::InvalidParameter(format!(
            "tail index {alpha} not in (0, 1)"
        )));
    }
    Ok(u.powf(-alpha.recip()))
}

/// One edge draw `(c, r)` with `r = 1/c` held exactly.
pub fn sample_edge_law<G: Rng + ?Sized>(params: &ModelParams, rng: &mut G) -> (f64, f64) {
    let u: f64 = open_closed_unit(rng);
    match params.mode {
        Mode::Rw => {
            let r = u.powf(-1.0 / params.alpha0);
            (1.0 / r, r)
        }
        Mode::Rwt => {
            let p = params.p.expect("validated");
            let ai = params.alpha_inf.expect("validated");
            if rng.gen::<f64>() < p {
                let c = u.powf(-1.0 / ai);
                (c, 1.0 / c)
            } else {
                let r = u.powf(-1.0 / params.alpha0);
                (1.0 / r, r)
            }
        }
    }
}

/// Uniform draw on (0, 1].
#[inline]
pub fn open_closed_unit<G: Rng + ?Sized>(rng: &mut G) -> f64 {
    ((rng.gen::<u64>() >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn pareto_quantile_closed_forms() {
        assert_relative_eq!(pareto_quantile(0.25, 0.5).unwrap(), 16.0, epsilon = 1e-12);
        assert_relative_eq!(pareto_quantile(1.0, 0.7).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            pareto_quantile(0.01, 0.5).unwrap(),
            10_000.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pareto_quantile_rejects_bad_arguments() {
        assert!(pareto_quantile(0.0, 0.5).is_err());
        assert!(pareto_quantile(1.5, 0.5).is_err());
        assert!(pareto_quantile(0.5, 1.0).is_err());
        assert!(pareto_quantile(0.5, 0.0).is_err());
    }

    proptest! {
        // survival/quantile round trip on a log grid of tail probabilities
        #[test]
        fn quantile_survival_round_trip(log_u in -9.0f64..0.0, alpha in 0.05f64..0.95) {
            let u = 10f64.powf(log_u);
            let t = pareto_quantile(u, alpha).unwrap();
            let survival = t.powf(-alpha);
            prop_assert!((survival - u).abs() <= 1e-12 * u);
        }
    }

    #[test]
    fn edge_law_reciprocal_identity() {
        let params = ModelParams::walls(0.5, 0.0);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        for _ in 0..1000 {
            let (c, r) = sample_edge_law(&params, &mut rng);
            // one side is the primitive Pareto draw, the other its reciprocal
            assert!(c == 1.0 / r || r == 1.0 / c);
            assert!((c * r - 1.0).abs() <= 2.0 * f64::EPSILON);
            assert!(c <= 1.0, "walls-only conductances stay below 1");
        }
    }

    #[test]
    fn rwt_tail_frequencies() {
        let params = ModelParams::walls_and_traps(0.5, 0.5, 0.5, 0.0);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        let n = 1_000_000usize;
        let mut over_four = 0usize;
        let mut at_least_one = 0usize;
        for _ in 0..n {
            let (c, _) = sample_edge_law(&params, &mut rng);
            if c > 4.0 {
                over_four += 1;
            }
            if c >= 1.0 {
                at_least_one += 1;
            }
        }
        // P(c > 4) = 0.5 * 4^{-1/2} = 0.25, three-sigma band
        let p1 = over_four as f64 / n as f64;
        let sd1 = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((p1 - 0.25).abs() < 3.0 * sd1, "p1 = {p1}");
        // P(c >= 1) = p = 0.5
        let p2 = at_least_one as f64 / n as f64;
        let sd2 = (0.25f64 / n as f64).sqrt();
        assert!((p2 - 0.5).abs() < 3.0 * sd2, "p2 = {p2}");
    }

    #[test]
    fn scaling_closed_forms() {
        let rw = ModelParams::walls(0.5, 0.0);
        let s = scaling_terms(&rw, 100).unwrap();
        assert_relative_eq!(s.resistance_scale, 1e4, max_relative = 1e-12);
        assert_relative_eq!(s.wall_time, 1e6, max_relative = 1e-12);

        let rwt = ModelParams::walls_and_traps(0.8, 0.5, 0.5, 0.0);
        let s = scaling_terms(&rwt, 200).unwrap();
        assert_relative_eq!(
            s.conductance_scale.unwrap(),
            100.0f64.powi(2),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            s.trap_time.unwrap(),
            1e4 * 100.0f64.powf(1.0 / 0.8),
            max_relative = 1e-12
        );
    }

    #[test]
    fn validation_catches_missing_rwt_fields() {
        let mut p = ModelParams::walls(0.5, 0.0);
        p.mode = Mode::Rwt;
        assert!(p.validate().is_err());
        assert!(ModelParams::walls(1.2, 0.0).validate().is_err());
    }

    #[test]
    fn mean_conductance_closed_form() {
        let p = ModelParams::walls(0.5, 0.0);
        assert_relative_eq!(p.mean_conductance().unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        let q = ModelParams::walls_and_traps(0.5, 0.5, 0.5, 0.0);
        assert!(q.mean_conductance().is_none());
    }
}
