//! Upper bound on the Skorokhod J1 distance between step paths.
//!
//! Builds the piecewise-linear reparametrisation that matches all jumps of
//! size above `delta` between the two paths (in order), then evaluates
//! `sup |f(xi(t)) - g(t)| + sup |xi(t) - t|`. This is an upper bound for the
//! J1 distance over the matching class; it fails loudly when the paths do not
//! have equally many jumps above `delta`.

use crate::path::StepPath;
use crate::scalar::Real;
use crate::{Error, Result};

/// Piecewise-linear increasing bijection of `[0, 1]` through anchor pairs.
struct Reparam<R: Real> {
    /// `(t, xi(t))` anchors, strictly increasing in both coordinates.
    anchors: Vec<(R, R)>,
}

impl<R: Real> Reparam<R> {
    fn through(pairs: &[(R, R)]) -> Result<Self> {
        let mut anchors = Vec::with_capacity(pairs.len() + 2);
        anchors.push((R::zero(), R::zero()));
        anchors.extend_from_slice(pairs);
        anchors.push((R::one(), R::one()));
        anchors.dedup_by(|a, b| a == b);
        for w in anchors.windows(2) {
            if w[0].0 >= w[1].0 || w[0].1 >= w[1].1 {
                return Err(Error::JumpMatchingFailed);
            }
        }
        Ok(Self { anchors })
    }

    fn eval(&self, t: R) -> R {
        let k = self.anchors.partition_point(|&(a, _)| a <= t);
        if k == 0 {
            return self.anchors[0].1;
        }
        if k >= self.anchors.len() {
            return self.anchors.last().unwrap().1;
        }
        let (t0, x0) = self.anchors[k - 1];
        let (t1, x1) = self.anchors[k];
        x0 + (t - t0) / (t1 - t0) * (x1 - x0)
    }

    fn eval_inverse(&self, x: R) -> R {
        let k = self.anchors.partition_point(|&(_, b)| b <= x);
        if k == 0 {
            return self.anchors[0].0;
        }
        if k >= self.anchors.len() {
            return self.anchors.last().unwrap().0;
        }
        let (t0, x0) = self.anchors[k - 1];
        let (t1, x1) = self.anchors[k];
        t0 + (x - x0) / (x1 - x0) * (t1 - t0)
    }

    fn max_distortion(&self) -> R {
        self.anchors
            .iter()
            .map(|&(t, x)| (t - x).abs())
            .fold(R::zero(), R::max)
    }
}

/// J1 upper bound between two cadlag step paths on `[0, 1]` (affinely
/// rescale other windows first). `delta` selects the jumps that the
/// reparametrisation must match exactly.
pub fn j1_upper_bound<R: Real>(f: &StepPath<R>, g: &StepPath<R>, delta: R) -> Result<R> {
    if delta <= R::zero() {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let jumps_f = f.jumps_above(delta);
    let jumps_g = g.jumps_above(delta);
    if jumps_f.len() != jumps_g.len() {
        return Err(Error::JumpCountMismatch {
            left: jumps_f.len(),
            right: jumps_g.len(),
        });
    }
    // xi maps g-time to f-time through the matched jump epochs
    let pairs: Vec<(R, R)> = jumps_g
        .iter()
        .zip(&jumps_f)
        .map(|(&(tg, _), &(tf, _))| (tg, tf))
        .collect();
    let xi = Reparam::through(&pairs)?;

    // f(xi(t)) - g(t) is constant between the merged breakpoints of g and
    // the xi-preimages of f's breakpoints; scan them all
    let mut breaks: Vec<R> = g.breaks().to_vec();
    breaks.extend(f.breaks().iter().map(|&b| xi.eval_inverse(b)));
    breaks.push(R::zero());
    breaks.push(R::one());
    breaks.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite breaks"));
    breaks.dedup();
    breaks.retain(|&b| b >= R::zero() && b <= R::one());

    let mut sup = R::zero();
    for (i, &t) in breaks.iter().enumerate() {
        let d = (f.value(xi.eval(t)) - g.value(t)).abs();
        sup = sup.max(d);
        // also probe the interior of the segment: evaluation points on the
        // two paths interleave strictly inside it
        if i + 1 < breaks.len() {
            let mid = (t + breaks[i + 1]) / R::of(2.0);
            let dm = (f.value(xi.eval(mid)) - g.value(mid)).abs();
            sup = sup.max(dm);
        }
    }
    Ok(sup + xi.max_distortion())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_step(at: f64, size: f64) -> StepPath<f64> {
        StepPath::new(vec![0.0, at], vec![0.0, size]).unwrap()
    }

    #[test]
    fn identical_paths_have_zero_bound() {
        let f = StepPath::new(vec![0.0, 0.25, 0.7], vec![0.0, 1.0, 3.0]).unwrap();
        let bound = j1_upper_bound(&f, &f, 0.5).unwrap();
        assert_eq!(bound, 0.0);
    }

    #[test]
    fn shifted_unit_jump_costs_the_shift() {
        let e = 0.03;
        let f = unit_step(0.5, 1.0);
        let g = unit_step(0.5 + e, 1.0);
        let bound = j1_upper_bound(&f, &g, 0.5).unwrap();
        assert!(bound <= e + 1e-12, "bound {bound} vs shift {e}");
        assert!(bound > 0.0);
    }

    #[test]
    fn mismatched_jump_counts_fail() {
        let f = unit_step(0.5, 1.0);
        let g = StepPath::new(vec![0.0, 0.3, 0.6], vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            j1_upper_bound(&f, &g, 0.5),
            Err(Error::JumpCountMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn value_mismatch_shows_in_the_sup_term(){
        let f = unit_step(0.5, 1.0);
        let g = unit_step(0.5, 1.2);
        let bound = j1_upper_bound(&f, &g, 0.5).unwrap();
        assert!((bound - 0.2).abs() < 1e-12, "bound {bound}");
    }

    #[test]
    fn works_in_f32_too() {
        let f = StepPath::new(vec![0.0f32, 0.5], vec![0.0, 1.0]).unwrap();
        let g = StepPath::new(vec![0.0f32, 0.52], vec![0.0, 1.0]).unwrap();
        let bound = j1_upper_bound(&f, &g, 0.5f32).unwrap();
        assert!(bound <= 0.021);
    }
}
