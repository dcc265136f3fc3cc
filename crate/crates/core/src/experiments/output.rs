//! Deterministic experiment outputs: `curves.csv` rows and `meta.json`.

use std::fmt::Write as FmtWrite;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::stats::EstimateResult;
use crate::Result;

/// One line of `curves.csv`. Limit-process rows carry `n = 0`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveRow {
    pub estimator: String,
    pub n: u64,
    pub h: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub replicas: u64,
    pub sentinel_fraction: f64,
}

impl CurveRow {
    pub fn from_estimate(
        estimator: &str,
        n: u64,
        h: f64,
        est: &EstimateResult,
        sentinel_fraction: f64,
    ) -> Self {
        Self {
            estimator: estimator.to_string(),
            n,
            h,
            estimate: est.estimate,
            stderr: est.stderr,
            ci_lo: est.ci_lo,
            ci_hi: est.ci_hi,
            replicas: est.replicas,
            sentinel_fraction,
        }
    }
}

pub const CURVES_HEADER: &str =
    "estimator,n,h,estimate,stderr,ci_lo,ci_hi,replicas,sentinel_fraction";

/// Renders rows in their given order; float formatting is the shortest
/// round-trip form, so identical runs produce byte-identical files.
pub fn render_curves(rows: &[CurveRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CURVES_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.estimator,
            r.n,
            r.h,
            r.estimate,
            r.stderr,
            r.ci_lo,
            r.ci_hi,
            r.replicas,
            r.sentinel_fraction
        )
        .expect("string write");
    }
    out
}

pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<()> {
    std::fs::write(path, render_curves(rows))?;
    Ok(())
}

/// Rows as JSON Lines, for `--format jsonl`.
pub fn render_curves_jsonl(rows: &[CurveRow]) -> Result<String> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// FNV-1a over a byte slice; used for config hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Meta {
    pub config_hash: String,
    pub master_seed: u64,
    pub version: String,
    pub wall_clock_secs: f64,
}

impl Meta {
    pub fn new<C: Serialize>(config: &C, master_seed: u64, wall_clock_secs: f64) -> Result<Self> {
        let canonical = serde_json::to_string(config)?;
        Ok(Self {
            config_hash: format!("{:016x}", fnv1a64(canonical.as_bytes())),
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_secs,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering_is_stable() {
        let rows = vec![CurveRow {
            estimator: "demo".into(),
            n: 64,
            h: 1.5,
            estimate: 0.25,
            stderr: 0.01,
            ci_lo: 0.23,
            ci_hi: 0.27,
            replicas: 100,
            sentinel_fraction: 0.0,
        }];
        let a = render_curves(&rows);
        let b = render_curves(&rows);
        assert_eq!(a, b);
        assert!(a.starts_with(CURVES_HEADER));
        assert!(a.contains("demo,64,1.5,0.25,0.01,0.23,0.27,100,0"));
    }

    #[test]
    fn fnv_distinguishes_inputs() {
        assert_ne!(fnv1a64(b"a"), fnv1a64(b"b"));
        assert_eq!(fnv1a64(b"same"), fnv1a64(b"same"));
    }
}
