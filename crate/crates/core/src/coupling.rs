//! Explicit coupling between discrete environments and their limit measures.
//!
//! A bundle holds two fixed subordinator paths and a lazily evaluated
//! Bernoulli thinning sequence. For each requested scale `n` it derives a
//! discrete environment whose edge law equals the i.i.d. law exactly, while
//! the empirical wall/trap measures converge atom-by-atom to measures read
//! off the same paths. Conductance-type edges (`b_x = 1`) are built from
//! increments of the conductance-side path through the quantile map
//! `G^{-1}`, resistance-type edges from the resistance-side path; the
//! `x -> x*` counting map keeps the two families on disjoint index sets.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, PointMeasure};
use crate::params::{Mode, ModelParams};
use crate::rng::{indexed_bernoulli, indexed_normal, substream};
use crate::stable::{stable_scale, stable_survival};
use crate::subordinator::{small_jump_sigma, SubordinatorPath};
use crate::{Error, MatchError, Result};

const TAG_BERN: u64 = 0x4245524e;
const TAG_FILL0: u64 = 0x46494c30;
const TAG_FILLINF: u64 = 0x46494c49;
const TAG_SUB: u64 = 0x53554244;

/// How the mean of the truncated small jumps is restored when a coupled
/// increment is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SmallJumpFill {
    /// Deterministic drift only.
    DriftOnly,
    /// Drift plus a per-cell Gaussian matching the variance of the discarded
    /// jumps; tightens the coupled marginal at coarse truncations.
    #[default]
    MeanVariance,
}

/// Monotone quantile table for `G^{-1}(z) = survival(z)^{-1/alpha}`, where
/// `survival` is the stable marginal's. Log-spaced knots, monotone cubic
/// (Fritsch-Carlson) interpolation of `ln survival` against `ln z`; the far
/// tail is delegated to the convergent series so no accuracy is lost there.
#[derive(Clone, Debug)]
pub struct QuantileTable {
    pub alpha: f64,
    ln_z: Vec<f64>,
    ln_surv: Vec<f64>,
    tangents: Vec<f64>,
    z_lo: f64,
    z_hi: f64,
}

pub const TABLE_KNOTS: usize = 2048;

fn pchip_tangents(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = ys
        .windows(2)
        .zip(&h)
        .map(|(w, &hi)| (w[1] - w[0]) / hi)
        .collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

impl QuantileTable {
    pub fn build(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail index {alpha} not in (0, 1)"
            )));
        }
        // below z_lo the CDF underflows and G^{-1} is 1 to double precision
        let a_min = alpha.powf(alpha / (1.0 - alpha)) * (1.0 - alpha);
        let y_lo = (a_min / 34.5).powf((1.0 - alpha) / alpha);
        let z_lo = stable_scale(alpha) * y_lo;
        // above z_hi the tail series is both cheap and exact
        let z_hi = 1e9f64.powf(1.0 / alpha) * stable_scale(alpha);
        let ln_lo = z_lo.ln();
        let ln_hi = z_hi.ln();
        let mut ln_z = Vec::with_capacity(TABLE_KNOTS);
        let mut ln_surv = Vec::with_capacity(TABLE_KNOTS);
        for i in 0..TABLE_KNOTS {
            let t = i as f64 / (TABLE_KNOTS - 1) as f64;
            let lz = ln_lo + t * (ln_hi - ln_lo);
            let s = stable_survival(alpha, lz.exp())?;
            ln_z.push(lz);
            ln_surv.push(s.max(1e-300).ln());
        }
        let tangents = pchip_tangents(&ln_z, &ln_surv);
        Ok(Self {
            alpha,
            ln_z,
            ln_surv,
            tangents,
            z_lo,
            z_hi,
        })
    }

    /// Interpolated stable survival at `z`.
    pub fn survival(&self, z: f64) -> f64 {
        if z <= self.z_lo {
            return 1.0;
        }
        if z >= self.z_hi {
            return stable_survival(self.alpha, z).expect("tail series converges");
        }
        let lz = z.ln();
        let i = self
            .ln_z
            .partition_point(|&x| x <= lz)
            .clamp(1, self.ln_z.len() - 1)
            - 1;
        let h = self.ln_z[i + 1] - self.ln_z[i];
        let t = (lz - self.ln_z[i]) / h;
        let (y0, y1) = (self.ln_surv[i], self.ln_surv[i + 1]);
        let (m0, m1) = (self.tangents[i] * h, self.tangents[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        val.exp().min(1.0)
    }

    /// `G^{-1}(z) = survival(z)^{-1/alpha}`; nondecreasing, `>= 1`.
    pub fn g_inverse(&self, z: f64) -> f64 {
        if z <= self.z_lo {
            return 1.0;
        }
        self.survival(z).powf(-1.0 / self.alpha).max(1.0)
    }

    /// `G(y)`: the tail-matching map with `P(S(1) > G(y)) = y^{-alpha}` for
    /// `y >= 1`, recovered from the table by bisection.
    pub fn g_forward(&self, y: f64) -> f64 {
        if y <= 1.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (self.z_lo * 0.5, self.z_hi);
        while self.g_inverse(hi) < y {
            hi *= 4.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.g_inverse(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// FNV-1a hash of the knot values; bundles store it so a deserialised
    /// bundle can verify its rebuilt table.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |x: f64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for &v in &self.ln_z {
            eat(v);
        }
        for &v in &self.ln_surv {
            eat(v);
        }
        h
    }
}

fn table_cache(alpha: f64) -> Result<Arc<QuantileTable>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<QuantileTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = alpha.to_bits();
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let built = Arc::new(QuantileTable::build(alpha)?);
    cache
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| built.clone());
    Ok(built)
}

/// `g_n(y) = G^{-1}(n^{1/alpha} y) / d_star`, the scale-`n` quantile map.
pub fn g_function(alpha: f64, n: u64, y: f64, table: &QuantileTable, d_star: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "g_n argument {y} must be nonnegative"
        )));
    }
    if (table.alpha - alpha).abs() > 1e-12 {
        return Err(Error::InvalidParameter(
            "quantile table built for a different tail index".into(),
        ));
    }
    Ok(table.g_inverse((n as f64).powf(1.0 / alpha) * y) / d_star)
}

/// Which side of the environment an atom family describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomFamily {
    Walls,
    Traps,
}

/// One limit atom together with the edge index its coupled copy lives on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomCorrespondence {
    pub family: AtomFamily,
    pub limit_location: f64,
    pub limit_weight: f64,
    pub edge: Option<i64>,
}

/// Map from limit atoms to coupled edges for one `(bundle, n)` pair.
#[derive(Clone, Debug, Default)]
pub struct Correspondence {
    pub atoms: Vec<AtomCorrespondence>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "BundleRepr", into = "BundleRepr")]
pub struct CouplingBundle {
    pub params: ModelParams,
    pub k: u32,
    pub seed: u64,
    pub fill: SmallJumpFill,
    /// Resistance-side path (`alpha0`), untilted.
    pub sub0: SubordinatorPath,
    /// Conductance-side path (`alpha_inf`), untilted; `RWT` only.
    pub subinf: Option<SubordinatorPath>,
    table0: Arc<QuantileTable>,
    tableinf: Option<Arc<QuantileTable>>,
}

#[derive(Serialize, Deserialize)]
struct BundleRepr {
    params: ModelParams,
    k: u32,
    seed: u64,
    fill: SmallJumpFill,
    sub0: SubordinatorPath,
    subinf: Option<SubordinatorPath>,
    table_hash0: u64,
    table_hashinf: Option<u64>,
}

impl From<BundleRepr> for CouplingBundle {
    fn from(r: BundleRepr) -> Self {
        let table0 = table_cache(r.params.alpha0).expect("table rebuilds");
        assert_eq!(
            table0.content_hash(),
            r.table_hash0,
            "rebuilt quantile table disagrees with the serialised bundle"
        );
        let tableinf = r.params.alpha_inf.map(|a| {
            let t = table_cache(a).expect("table rebuilds");
            assert_eq!(Some(t.content_hash()), r.table_hashinf);
            t
        });
        Self {
            params: r.params,
            k: r.k,
            seed: r.seed,
            fill: r.fill,
            sub0: r.sub0,
            subinf: r.subinf,
            table0,
            tableinf,
        }
    }
}

impl From<CouplingBundle> for BundleRepr {
    fn from(b: CouplingBundle) -> Self {
        BundleRepr {
            params: b.params,
            k: b.k,
            seed: b.seed,
            fill: b.fill,
            table_hash0: b.table0.content_hash(),
            table_hashinf: b.tableinf.as_ref().map(|t| t.content_hash()),
            sub0: b.sub0,
            subinf: b.subinf,
        }
    }
}

impl CouplingBundle {
    /// Samples the two subordinator paths on `[-(K+1), K+1]` and fixes the
    /// Bernoulli seed. `epsilon0` / `epsiloninf` are the jump truncations.
    pub fn new(
        params: &ModelParams,
        k: u32,
        epsilon0: f64,
        epsiloninf: f64,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let width = (k + 1) as f64;
        let mut rng0 = substream(seed, &[TAG_SUB, 0]);
        let sub0 = SubordinatorPath::sample(params.alpha0, width, epsilon0, 0.0, &mut rng0)?;
        let (subinf, tableinf) = match params.mode {
            Mode::Rw => (None, None),
            Mode::Rwt => {
                let ai = params.alpha_inf.expect("validated");
                let mut rngi = substream(seed, &[TAG_SUB, 1]);
                let p = SubordinatorPath::sample(ai, width, epsiloninf, 0.0, &mut rngi)?;
                (Some(p), Some(table_cache(ai)?))
            }
        };
        Ok(Self {
            params: *params,
            k,
            seed,
            fill: SmallJumpFill::default(),
            sub0,
            subinf,
            table0: table_cache(params.alpha0)?,
            tableinf,
        })
    }

    pub fn with_fill(mut self, fill: SmallJumpFill) -> Self {
        self.fill = fill;
        self
    }

    /// Thinning bit for edge `x`: true means conductance-type.
    pub fn bern(&self, x: i64) -> bool {
        let p = self.params.conductance_fraction();
        if p <= 0.0 {
            return false;
        }
        indexed_bernoulli(self.seed, TAG_BERN, x, p)
    }

    fn coupled_increment(&self, sub: &SubordinatorPath, fill_tag: u64, n: u64, cell: i64) -> f64 {
        let nf = n as f64;
        let a = cell as f64 / nf;
        let b = (cell + 1) as f64 / nf;
        let atoms_plus_mean = sub.raw_increment(a, b);
        match self.fill {
            SmallJumpFill::DriftOnly => atoms_plus_mean,
            SmallJumpFill::MeanVariance => {
                let atoms_only = atoms_plus_mean - sub.compensation_rate / nf;
                let sigma = small_jump_sigma(sub.alpha, sub.epsilon) / nf.sqrt();
                let z = indexed_normal(self.seed, fill_tag, cell, n);
                let small = (sub.compensation_rate / nf + sigma * z).max(0.0);
                atoms_only + small
            }
        }
    }

    /// Derives the scale-`n` environment and the limit-atom correspondence.
    /// Pure function of the bundle: the same `(bundle, n)` always yields the
    /// same environment.
    pub fn build_environment(&self, n: u64) -> Result<(Environment, Correspondence)> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        let half = self.k as i64 * n as i64;
        let count = (2 * half) as usize;
        let nf = n as f64;
        let alpha0 = self.params.alpha0;
        let pow0 = nf.powf(1.0 / alpha0);
        let powinf = self
            .params
            .alpha_inf
            .map(|a| nf.powf(1.0 / a))
            .unwrap_or(0.0);

        let mut cond = vec![0.0f64; count];
        let mut cond_cells: HashMap<i64, i64> = HashMap::new();
        let mut res_cells: HashMap<i64, i64> = HashMap::new();

        // nonnegative side: x* counts ones in [0, x)
        let mut ones = 0i64;
        for x in 0..half {
            let star = ones;
            let b = self.bern(x);
            if b {
                ones += 1;
            }
            self.fill_edge(
                x,
                star,
                b,
                n,
                pow0,
                powinf,
                &mut cond,
                half,
                &mut cond_cells,
                &mut res_cells,
            );
        }
        // negative side: x* = -#{x < j < 0 : b_j = 1}
        let mut ones_neg = 0i64;
        for x in (-half..0).rev() {
            let star = -ones_neg;
            let b = self.bern(x);
            if b {
                ones_neg += 1;
            }
            self.fill_edge(
                x,
                star,
                b,
                n,
                pow0,
                powinf,
                &mut cond,
                half,
                &mut cond_cells,
                &mut res_cells,
            );
        }

        let env = Environment::from_edges(self.params, n, self.k, cond)?;
        let correspondence = self.correspondence(n, &cond_cells, &res_cells);
        Ok((env, correspondence))
    }

    #[allow(clippy::too_many_arguments)]
    fn fill_edge(
        &self,
        x: i64,
        star: i64,
        b: bool,
        n: u64,
        pow0: f64,
        powinf: f64,
        cond: &mut [f64],
        half: i64,
        cond_cells: &mut HashMap<i64, i64>,
        res_cells: &mut HashMap<i64, i64>,
    ) {
        let slot = (x + half) as usize;
        if b {
            let sub = self.subinf.as_ref().expect("RWT bundle");
            let table = self.tableinf.as_ref().expect("RWT bundle");
            let cell = if x >= 0 { star } else { star - 1 };
            let inc = self.coupled_increment(sub, TAG_FILLINF, n, cell);
            cond[slot] = table.g_inverse(powinf * inc);
            cond_cells.insert(cell, x);
        } else {
            let cell = x - star;
            let inc = self.coupled_increment(&self.sub0, TAG_FILL0, n, cell);
            let r = self.table0.g_inverse(pow0 * inc);
            cond[slot] = 1.0 / r;
            res_cells.insert(cell, x);
        }
    }

    fn correspondence(
        &self,
        n: u64,
        cond_cells: &HashMap<i64, i64>,
        res_cells: &HashMap<i64, i64>,
    ) -> Correspondence {
        let nf = n as f64;
        let kf = self.k as f64;
        let mut atoms = Vec::new();
        let q = 1.0 - self.params.conductance_fraction();
        if q > 0.0 {
            for &(u, w) in self.sub0.atoms() {
                if u.abs() > q * kf {
                    continue;
                }
                let cell = (u * nf).ceil() as i64 - 1;
                atoms.push(AtomCorrespondence {
                    family: AtomFamily::Walls,
                    limit_location: u / q,
                    limit_weight: q.powf(-1.0 / self.params.alpha0) * w,
                    edge: res_cells.get(&cell).copied(),
                });
            }
        }
        if let Some(sub) = &self.subinf {
            let p = self.params.conductance_fraction();
            let ai = self.params.alpha_inf.expect("RWT bundle");
            for &(u, w) in sub.atoms() {
                if u.abs() > p * kf {
                    continue;
                }
                let cell = (u * nf).ceil() as i64 - 1;
                atoms.push(AtomCorrespondence {
                    family: AtomFamily::Traps,
                    limit_location: u / p,
                    limit_weight: p.powf(-1.0 / ai) * w,
                    edge: cond_cells.get(&cell).copied(),
                });
            }
        }
        Correspondence { atoms }
    }

    /// Limit of the rescaled resistance process: the resistance-side path
    /// carried to the unconditioned law (`(u, w) -> (u/q, q^{-1/alpha0} w)`)
    /// and tilted by `exp(-2 lambda u)`.
    pub fn limit_resistance_path(&self, lambda: f64) -> Result<SubordinatorPath> {
        let q = 1.0 - self.params.conductance_fraction();
        Ok(self
            .sub0
            .rescaled(q, q.powf(-1.0 / self.params.alpha0))?
            .with_tilt(-2.0 * lambda))
    }

    /// Limit of the rescaled conductance process (`RWT` only), tilted by
    /// `exp(+2 lambda u)`.
    pub fn limit_conductance_path(&self, lambda: f64) -> Result<Option<SubordinatorPath>> {
        let Some(sub) = &self.subinf else {
            return Ok(None);
        };
        let p = self.params.conductance_fraction();
        let ai = self.params.alpha_inf.expect("RWT bundle");
        Ok(Some(
            sub.rescaled(p, p.powf(-1.0 / ai))?.with_tilt(2.0 * lambda),
        ))
    }

    /// Limit wall measure: atoms of the rescaled resistance path in `[-K, K]`
    /// above `cutoff`, untilted weights.
    pub fn limit_wall_measure(&self, cutoff: f64) -> Result<PointMeasure> {
        let path = self.limit_resistance_path(0.0)?;
        PointMeasure::new(path.jumps_above(cutoff, self.k as f64))
    }

    /// Limit trap measure (`RWT` only), untilted weights.
    pub fn limit_trap_measure(&self, cutoff: f64) -> Result<Option<PointMeasure>> {
        match self.limit_conductance_path(0.0)? {
            None => Ok(None),
            Some(path) => Ok(Some(PointMeasure::new(
                path.jumps_above(cutoff, self.k as f64),
            )?)),
        }
    }
}

/// Tolerance box for atom matching. Defaults: two lattice spacings in
/// location, 5% relative in weight.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MatchTolerance {
    pub location: f64,
    pub weight_rel: f64,
}

impl MatchTolerance {
    pub fn for_scale(n: u64) -> Self {
        Self {
            location: 2.0 / n as f64,
            weight_rel: 0.05,
        }
    }
}

/// Rectangle in location x weight space, bounded away from weight zero.
#[derive(Clone, Copy, Debug)]
pub struct MatchWindow {
    pub x_lo: f64,
    pub x_hi: f64,
    pub w_lo: f64,
    pub w_hi: f64,
}

/// One matched limit/discrete atom pair.
#[derive(Clone, Copy, Debug)]
pub struct AtomMatch {
    pub limit: (f64, f64),
    pub discrete: (f64, f64),
}

impl AtomMatch {
    /// Location error plus weight error; the displacement tracked by the
    /// convergence sweeps.
    pub fn displacement(&self) -> f64 {
        (self.limit.0 - self.discrete.0).abs() + (self.limit.1 - self.discrete.1).abs()
    }
}

/// Matches every limit atom in the window to the unique discrete atom inside
/// the tolerance box. Ambiguity and absence are distinct failures, and the
/// two measures must agree on the number of atoms in the window.
pub fn match_atoms(
    discrete: &PointMeasure,
    limit: &PointMeasure,
    window: &MatchWindow,
    tol: &MatchTolerance,
) -> Result<Vec<AtomMatch>, MatchError> {
    let in_window = |&(x, w): &(f64, f64)| {
        x >= window.x_lo && x <= window.x_hi && w >= window.w_lo && w <= window.w_hi
    };
    let limit_atoms: Vec<(f64, f64)> = limit
        .atoms()
        .iter()
        .filter(|a| in_window(a))
        .copied()
        .collect();
    let discrete_count = discrete.atoms().iter().filter(|a| in_window(a)).count();
    if discrete_count != limit_atoms.len() {
        return Err(MatchError::CountMismatch {
            discrete: discrete_count,
            limit: limit_atoms.len(),
        });
    }
    let mut out = Vec::with_capacity(limit_atoms.len());
    for (lx, lw) in limit_atoms {
        let candidates: Vec<(f64, f64)> = discrete
            .atoms()
            .iter()
            .filter(|&&(x, w)| {
                (x - lx).abs() <= tol.location && (w - lw).abs() <= tol.weight_rel * lw
            })
            .copied()
            .collect();
        match candidates.len() {
            0 => {
                return Err(MatchError::Missing {
                    location: lx,
                    weight: lw,
                })
            }
            1 => out.push(AtomMatch {
                limit: (lx, lw),
                discrete: candidates[0],
            }),
            m => {
                return Err(MatchError::Ambiguous {
                    location: lx,
                    weight: lw,
                    candidates: m,
                })
            }
        }
    }
    Ok(out)
}
