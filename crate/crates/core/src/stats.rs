//! Agreement coefficients, bootstrap intervals, the paired sign-flip test and
//! annotation speed-up bookkeeping.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float;
use crate::protocol::Verdict;

/// Bootstrap repetitions used when the caller does not choose.
pub const DEFAULT_BOOTSTRAP_REPS: usize = 1_000;
/// Confidence level (percent) used when the caller does not choose.
pub const DEFAULT_CONFIDENCE_LEVEL: f64 = 95.0;
/// Largest sample size for which the permutation test enumerates every
/// sign assignment.
pub const EXHAUSTIVE_PERMUTATION_LIMIT: usize = 20;
/// Monte-Carlo draws for larger permutation tests.
pub const DEFAULT_PERMUTATION_DRAWS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("verdict lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no jointly labelled items")]
    EmptyInput,
    #[error("both raters are constant on the same category; kappa is undefined")]
    DegenerateMarginals,
    #[error("fewer than two pairable values")]
    InsufficientPairableValues,
    #[error("all pairable values are identical; alpha is undefined")]
    ZeroExpectedDisagreement,
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("every bootstrap replicate was degenerate")]
    AllReplicatesDegenerate,
    #[error("statistic is undefined on the full sample")]
    DegeneratePoint,
    #[error("annotated count is zero")]
    ZeroAnnotated,
    #[error("annotated count {annotated} exceeds pool size {pool}")]
    AnnotatedExceedsPool { annotated: u64, pool: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementBand {
    Good,
    Questionable,
    Unacceptable,
}

impl AgreementBand {
    pub fn as_str(self) -> &'static str {
        match self {
            AgreementBand::Good => "good",
            AgreementBand::Questionable => "questionable",
            AgreementBand::Unacceptable => "unacceptable",
        }
    }
}

impl fmt::Display for AgreementBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Above 0.4 is good, `[0.2, 0.4]` questionable, below 0.2 unacceptable.
pub fn agreement_band(value: f64) -> Result<AgreementBand, StatsError> {
    if !(-1.0..=1.0).contains(&value) {
        return Err(StatsError::OutOfRange { name: "agreement", value });
    }
    Ok(if value > 0.4 {
        AgreementBand::Good
    } else if value >= 0.2 {
        AgreementBand::Questionable
    } else {
        AgreementBand::Unacceptable
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementStatistic {
    CohenKappa,
    KrippendorffAlpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub statistic: AgreementStatistic,
    pub point: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub band: AgreementBand,
}

impl AgreementResult {
    pub fn new(statistic: AgreementStatistic, point: f64) -> Result<Self, StatsError> {
        Ok(Self { statistic, point, ci_low: None, ci_high: None, band: agreement_band(point)? })
    }

    pub fn with_ci(mut self, low: f64, high: f64) -> Self {
        self.ci_low = Some(low);
        self.ci_high = Some(high);
        self
    }
}

/// Cohen's kappa for two raters over the same binary items.
pub fn cohen_kappa(a: &[Verdict], b: &[Verdict]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let a_yes = a.iter().filter(|v| v.is_yes()).count() as f64 / n;
    let b_yes = b.iter().filter(|v| v.is_yes()).count() as f64 / n;
    let p_o = agree / n;
    let p_e = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
    if p_e >= 1.0 {
        return Err(StatsError::DegenerateMarginals);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Krippendorff's alpha for nominal binary data.
///
/// `units[u][c]` is coder `c`'s verdict on unit `u`, if any. Units with fewer
/// than two verdicts are not pairable and are ignored. Uses the coincidence
/// matrix: `alpha = 1 - (n - 1) * o_01 / (n_0 * n_1)` for binary data, which
/// is `1 - D_o / D_e`.
pub fn krippendorff_alpha<U: AsRef<[Option<Verdict>]>>(units: &[U]) -> Result<f64, StatsError> {
    // Coincidence matrix o[c][k], c,k in {no, yes}.
    let mut o = [[0.0f64; 2]; 2];
    for unit in units {
        let mut counts = [0usize; 2];
        for v in unit.as_ref().iter().flatten() {
            counts[usize::from(v.is_yes())] += 1;
        }
        let m = counts[0] + counts[1];
        if m < 2 {
            continue;
        }
        let w = 1.0 / (m - 1) as f64;
        for c in 0..2 {
            for k in 0..2 {
                let pairs = if c == k { counts[c] * counts[c].saturating_sub(1) } else { counts[c] * counts[k] };
                o[c][k] += pairs as f64 * w;
            }
        }
    }
    let n_c = [o[0][0] + o[0][1], o[1][0] + o[1][1]];
    let n = n_c[0] + n_c[1];
    if n < 2.0 - 1e-12 {
        return Err(StatsError::InsufficientPairableValues);
    }
    let d_o = (o[0][1] + o[1][0]) / n;
    let d_e = 2.0 * n_c[0] * n_c[1] / (n * (n - 1.0));
    if d_e == 0.0 {
        return Err(StatsError::ZeroExpectedDisagreement);
    }
    Ok(1.0 - d_o / d_e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: usize,
    /// Replicates on which the statistic was undefined.
    pub skipped: usize,
    pub level: f64,
    pub seed: u64,
}

/// Random stream for bootstrap replicate `rep`; independent of evaluation
/// order, so replicates can be computed in any order or in parallel.
pub fn replicate_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Draws `len` indices uniformly with replacement from `0..len`.
pub fn resample_indices(rng: &mut impl Rng, len: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..len)).collect()
}

/// Position of the `q` quantile in a sorted vector of length `m`, by the
/// nearest-rank rule.
pub fn percentile_index(q: f64, m: usize) -> usize {
    let rank = float::ceil(q * m as f64 - 1e-9) as usize;
    rank.clamp(1, m) - 1
}

/// Percentile bootstrap over resampled units.
///
/// The point estimate is the statistic on `data` itself. Replicates whose
/// statistic fails are skipped and counted.
pub fn bootstrap_ci<T: Clone, E>(
    data: &[T],
    statistic: impl Fn(&[T]) -> Result<f64, E>,
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult, StatsError> {
    if data.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if reps == 0 {
        return Err(StatsError::OutOfRange { name: "reps", value: 0.0 });
    }
    if !(level > 0.0 && level < 100.0) {
        return Err(StatsError::OutOfRange { name: "level", value: level });
    }
    let point = statistic(data).map_err(|_| StatsError::DegeneratePoint)?;
    let mut values = Vec::with_capacity(reps);
    let mut sample = Vec::with_capacity(data.len());
    for rep in 0..reps {
        let mut rng = replicate_rng(seed, rep as u64);
        sample.clear();
        sample.extend(resample_indices(&mut rng, data.len()).into_iter().map(|i| data[i].clone()));
        if let Ok(v) = statistic(&sample) {
            values.push(v);
        }
    }
    let (ci_low, ci_high) = percentile_interval(&mut values, level).ok_or(StatsError::AllReplicatesDegenerate)?;
    Ok(BootstrapResult { point, ci_low, ci_high, reps, skipped: reps - values.len(), level, seed })
}

/// Sorts `values` and returns the central `level` percent interval.
pub fn percentile_interval(values: &mut [f64], level: f64) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| float::cmp(*a, *b));
    let tail = (1.0 - level / 100.0) / 2.0;
    let m = values.len();
    Some((values[percentile_index(tail, m)], values[percentile_index(1.0 - tail, m)]))
}

/// Median of a non-empty slice (mean of the two middle values for even
/// lengths). Sorts in place.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| float::cmp(*a, *b));
    let m = values.len();
    Some(if m % 2 == 1 { values[m / 2] } else { (values[m / 2 - 1] + values[m / 2]) / 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    /// Mean difference is greater than zero.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PermutationMode {
    /// Exhaustive up to [`EXHAUSTIVE_PERMUTATION_LIMIT`] items, Monte-Carlo
    /// beyond.
    Auto {
        draws: u64,
        seed: u64,
    },
    Exhaustive,
    MonteCarlo {
        draws: u64,
        seed: u64,
    },
}

impl Default for PermutationMode {
    fn default() -> Self {
        PermutationMode::Auto { draws: DEFAULT_PERMUTATION_DRAWS, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub p_value: f64,
    /// Count of assignments at least as extreme as observed, out of
    /// `denominator` (`2^n` when exhaustive, draws + 1 otherwise).
    pub extreme: u64,
    pub denominator: u64,
    pub exhaustive: bool,
}

/// One-sided paired sign-flip permutation test on the sum of differences.
/// The observed assignment is counted, so `p > 0`.
pub fn paired_permutation_test(
    differences: &[f64],
    alternative: Alternative,
    mode: PermutationMode,
) -> Result<PermutationResult, StatsError> {
    let Alternative::Greater = alternative;
    let n = differences.len();
    if n == 0 {
        return Err(StatsError::EmptyInput);
    }
    if let Some(&bad) = differences.iter().find(|d| !d.is_finite()) {
        return Err(StatsError::OutOfRange { name: "difference", value: bad });
    }
    let observed: f64 = differences.iter().sum();
    let tol = 1e-12 * differences.iter().map(|d| float::abs(*d)).sum::<f64>();
    let at_least = |mask: &dyn Fn(usize) -> bool| {
        let s: f64 = differences.iter().enumerate().map(|(i, d)| if mask(i) { -d } else { *d }).sum();
        s >= observed - tol
    };
    let exhaustive = match mode {
        PermutationMode::Exhaustive => true,
        PermutationMode::MonteCarlo { .. } => false,
        PermutationMode::Auto { .. } => n <= EXHAUSTIVE_PERMUTATION_LIMIT,
    };
    if exhaustive {
        if n >= 63 {
            return Err(StatsError::OutOfRange { name: "n", value: n as f64 });
        }
        let total = 1u64 << n;
        let extreme = (0..total).filter(|&bits| at_least(&|i| bits >> i & 1 == 1)).count() as u64;
        return Ok(PermutationResult {
            p_value: extreme as f64 / total as f64,
            extreme,
            denominator: total,
            exhaustive,
        });
    }
    let (draws, seed) = match mode {
        PermutationMode::Auto { draws, seed } | PermutationMode::MonteCarlo { draws, seed } => (draws, seed),
        PermutationMode::Exhaustive => unreachable!(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signs = alloc::vec![false; n];
    let mut extreme = 1u64;
    for _ in 0..draws {
        for s in signs.iter_mut() {
            *s = rng.random::<bool>();
        }
        if at_least(&|i| signs[i]) {
            extreme += 1;
        }
    }
    let denominator = draws + 1;
    Ok(PermutationResult { p_value: extreme as f64 / denominator as f64, extreme, denominator, exhaustive })
}

/// Speed-up of annotating `annotated` items instead of the whole pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeedUp {
    pub pool: u64,
    pub annotated: u64,
}

impl SpeedUp {
    pub fn factor(&self) -> f64 {
        self.pool as f64 / self.annotated as f64
    }

    pub fn fraction_annotated(&self) -> f64 {
        self.annotated as f64 / self.pool as f64
    }
}

pub fn speed_up(pool: u64, annotated: u64) -> Result<SpeedUp, StatsError> {
    if annotated == 0 {
        return Err(StatsError::ZeroAnnotated);
    }
    if annotated > pool {
        return Err(StatsError::AnnotatedExceedsPool { annotated, pool });
    }
    Ok(SpeedUp { pool, annotated })
}
