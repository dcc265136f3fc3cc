//! Right-continuous step paths stored as breakpoint arrays.

use crate::scalar::Real;
use crate::{Error, Result};

/// A cadlag step function: `value(t)` is the value attached to the last
/// breakpoint `<= t`. Exact evaluation by binary search, no gridding error.
#[derive(Clone, Debug)]
pub struct StepPath<R: Real> {
    breaks: Vec<R>,
    values: Vec<R>,
}

impl<R: Real> StepPath<R> {
    pub fn new(breaks: Vec<R>, values: Vec<R>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::InvalidParameter(
                "step path needs equally many breakpoints and values".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "step path breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self { breaks, values })
    }

    pub fn breaks(&self) -> &[R] {
        &self.breaks
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn domain(&self) -> (R, R) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    /// Value at `t`; for `t` before the first breakpoint returns the first value.
    pub fn value(&self, t: R) -> R {
        let k = self.breaks.partition_point(|&b| b <= t);
        if k == 0 {
            self.values[0]
        } else {
            self.values[k - 1]
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Jumps with size strictly above `delta`, as `(time, size)` pairs in
    /// breakpoint order.
    pub fn jumps_above(&self, delta: R) -> Vec<(R, R)> {
        let mut out = Vec::new();
        for i in 1..self.breaks.len() {
            let size = self.values[i] - self.values[i - 1];
            if size > delta {
                out.push((self.breaks[i], size));
            }
        }
        out
    }

    /// Affinely rescales the time axis onto `[0, 1]`.
    pub fn to_unit_interval(&self) -> Self {
        let (a, b) = self.domain();
        let span = b - a;
        let breaks = self.breaks.iter().map(|&t| (t - a) / span).collect();
        Self {
            breaks,
            values: self.values.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_is_right_continuous() {
        let p = StepPath::new(vec![0.0, 1.0, 2.0], vec![5.0, 7.0, 9.0]).unwrap();
        assert_eq!(p.value(0.0), 5.0);
        assert_eq!(p.value(0.999), 5.0);
        assert_eq!(p.value(1.0), 7.0);
        assert_eq!(p.value(10.0), 9.0);
        assert_eq!(p.value(-1.0), 5.0);
    }

    #[test]
    fn jumps_above_threshold() {
        let p = StepPath::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.5, 3.0, 3.2]).unwrap();
        let jumps = p.jumps_above(0.4);
        assert_eq!(jumps, vec![(1.0, 0.5), (2.0, 2.5)]);
    }

    #[test]
    fn rejects_unsorted_breaks() {
        assert!(StepPath::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
