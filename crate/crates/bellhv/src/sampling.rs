//! Seeded sampling on the unit sphere and Monte Carlo estimation.
//!
//! Reproducibility scheme: work is cut into fixed-size chunks; chunk `k` of a
//! `SeededStream` draws from ChaCha8 with the stream word set to
//! `(stream << 32) | k` (counter-based splitting, so up to 2³² streams of
//! 2³² chunks never collide). Chunk results are reduced in chunk order, so
//! estimates are bit-identical regardless of how many workers ran them.
//! With the `parallel` feature the chunks run on rayon; without it they run
//! in a plain loop and produce the same bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::core::{JointOutcomeDistribution, Outcome, UnitVector3};
use crate::error::{Error, Result};
use crate::models::discrete::DichotomicM3Model;
use crate::models::spherical::{hall_outcome_a, hall_outcome_b, m3c_outcome_a, m3c_outcome_b};

/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: u64 = 1000;

/// Samples per work chunk.
const CHUNK: u64 = 1 << 16;

/// Iteration cap for the in-region rejection loop. Acceptance per attempt is
/// at least min(φ, π−φ)/π for the selected region, and a degenerate region is
/// selected with probability 0, so the cap is unreachable in practice.
const REJECT_CAP: u64 = 1 << 20;

/// A reproducible random stream: (seed, stream index) fully determine every
/// draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeededStream {
    pub seed: u64,
    pub stream: u64,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        SeededStream { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        SeededStream { seed, stream }
    }

    /// RNG positioned at chunk 0 of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        self.chunk_rng(0)
    }

    pub(crate) fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        debug_assert!(chunk < (1 << 32));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.stream << 32) | chunk);
        rng
    }
}

/// A Monte Carlo point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by √samples.
    pub standard_error: f64,
    pub samples: u64,
}

fn chunk_bounds(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(CHUNK))
        .map(|k| (k, (n - k * CHUNK).min(CHUNK)))
        .collect()
}

/// Runs `f` once per chunk, sequentially, in chunk order.
pub(crate) fn run_chunks_sequential<T, F>(n: u64, stream: SeededStream, f: F) -> Vec<T>
where
    F: Fn(&mut ChaCha8Rng, u64) -> T,
{
    chunk_bounds(n)
        .into_iter()
        .map(|(k, len)| f(&mut stream.chunk_rng(k), len))
        .collect()
}

/// Runs `f` once per chunk; parallel when the `parallel` feature is enabled.
/// Results come back in chunk order either way.
pub(crate) fn run_chunks<T, F>(n: u64, stream: SeededStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        chunk_bounds(n)
            .into_par_iter()
            .map(|(k, len)| f(&mut stream.chunk_rng(k), len))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_chunks_sequential(n, stream, f)
    }
}

/// A draw uniformly distributed on S².
pub fn sample_uniform_sphere<R: Rng>(rng: &mut R) -> UnitVector3 {
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    // UnitSphere normalizes its output; well within the 1e-12 invariant
    UnitVector3::new(x, y, z).expect("UnitSphere produced non-unit vector")
}

fn sgn_agree(v: UnitVector3, a: UnitVector3, b: UnitVector3) -> bool {
    (a.dot(v) >= 0.0) == (b.dot(v) >= 0.0)
}

/// Exact two-stage draw from the two-region density ρ(λ|a,b): choose the
/// sign-agreement region with probability (1 + a·b)/2, the disagreement
/// region with (1 − a·b)/2, then sample uniformly within the chosen region by
/// rejection from the uniform sphere. The density is piecewise constant, so
/// this reproduces it exactly.
pub fn sample_hall_lambda<R: Rng>(a: UnitVector3, b: UnitVector3, rng: &mut R) -> Result<UnitVector3> {
    let p_agree = (1.0 + a.dot(b).clamp(-1.0, 1.0)) / 2.0;
    let want_agree = rng.gen::<f64>() < p_agree;
    for _ in 0..REJECT_CAP {
        let v = sample_uniform_sphere(rng);
        if sgn_agree(v, a, b) == want_agree {
            return Ok(v);
        }
    }
    Err(Error::Sampling(format!(
        "rejection loop exceeded {REJECT_CAP} iterations"
    )))
}

/// Draw from ρ(ξ|λ1,λ2); same two-region structure as the Hall density.
pub fn sample_m3c_xi<R: Rng>(
    lambda1: UnitVector3,
    lambda2: UnitVector3,
    rng: &mut R,
) -> Result<UnitVector3> {
    sample_hall_lambda(lambda1, lambda2, rng)
}

/// A joint frequency estimate with per-cell and correlator standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointEstimate {
    pub joint: JointOutcomeDistribution,
    /// Binomial standard errors, cell order (+,+), (+,−), (−,+), (−,−).
    pub cells: [McEstimate; 4],
    pub correlation: McEstimate,
}

impl JointEstimate {
    fn from_counts(counts: [u64; 4], n: u64) -> Result<Self> {
        let joint = JointOutcomeDistribution::from_counts(counts, n)?;
        let nf = n as f64;
        let cells = counts.map(|c| {
            let p = c as f64 / nf;
            McEstimate {
                mean: p,
                standard_error: (p * (1.0 - p) / nf).sqrt(),
                samples: n,
            }
        });
        // products σ1σ2 are ±1: mean and variance follow from the counts
        let m = (counts[0] + counts[3]) as f64 / nf * 2.0 - 1.0;
        let var = if n > 1 {
            (nf / (nf - 1.0)) * (1.0 - m * m).max(0.0)
        } else {
            0.0
        };
        Ok(JointEstimate {
            joint,
            cells,
            correlation: McEstimate {
                mean: m,
                standard_error: (var / nf).sqrt(),
                samples: n,
            },
        })
    }
}

fn count_outcomes<F>(n: u64, stream: SeededStream, parallel: bool, sample: F) -> Result<[u64; 4]>
where
    F: Fn(&mut ChaCha8Rng) -> Result<(Outcome, Outcome)> + Sync,
{
    let chunk = |rng: &mut ChaCha8Rng, len: u64| -> Result<[u64; 4]> {
        let mut counts = [0u64; 4];
        for _ in 0..len {
            let (s1, s2) = sample(rng)?;
            counts[s1.index() * 2 + s2.index()] += 1;
        }
        Ok(counts)
    };
    let partials = if parallel {
        run_chunks(n, stream, chunk)
    } else {
        run_chunks_sequential(n, stream, chunk)
    };
    let mut total = [0u64; 4];
    for partial in partials {
        let partial = partial?;
        for (t, p) in total.iter_mut().zip(partial) {
            *t += p;
        }
    }
    Ok(total)
}

fn check_samples(n: u64) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::Config(format!(
            "sample count {n} below minimum {MIN_SAMPLES}"
        )));
    }
    Ok(())
}

fn hall_pair(a: UnitVector3, b: UnitVector3, rng: &mut ChaCha8Rng) -> Result<(Outcome, Outcome)> {
    let lam = sample_hall_lambda(a, b, rng)?;
    Ok((hall_outcome_a(lam, a), hall_outcome_b(lam, b)))
}

/// Frequency estimate of the Hall model's P(σ1,σ2|a,b): draw λ ~ ρ(λ|a,b)
/// and apply the outcome functions A, B.
pub fn estimate_hall_joint(
    a: UnitVector3,
    b: UnitVector3,
    n: u64,
    stream: SeededStream,
) -> Result<JointEstimate> {
    check_samples(n)?;
    let counts = count_outcomes(n, stream, true, |rng| hall_pair(a, b, rng))?;
    JointEstimate::from_counts(counts, n)
}

/// Sequential twin of `estimate_hall_joint`; bit-identical output.
pub fn estimate_hall_joint_sequential(
    a: UnitVector3,
    b: UnitVector3,
    n: u64,
    stream: SeededStream,
) -> Result<JointEstimate> {
    check_samples(n)?;
    let counts = count_outcomes(n, stream, false, |rng| hall_pair(a, b, rng))?;
    JointEstimate::from_counts(counts, n)
}

/// Estimate of the continuous-M3 joint at settings (a,b): the background
/// deltas are applied analytically (λ1 ← a, λ2 ← b) and the remaining
/// ξ-integral is sampled.
pub fn estimate_m3c_joint(
    a: UnitVector3,
    b: UnitVector3,
    n: u64,
    stream: SeededStream,
) -> Result<JointEstimate> {
    check_samples(n)?;
    let counts = count_outcomes(n, stream, true, |rng| {
        let xi = sample_m3c_xi(a, b, rng)?;
        Ok((m3c_outcome_a(xi, a, a), m3c_outcome_b(xi, b, b)))
    })?;
    JointEstimate::from_counts(counts, n)
}

/// A model that can generate outcome pairs one sample at a time.
pub trait PairSampler: Sync {
    fn sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(Outcome, Outcome)>;
}

/// The Hall model at a fixed setting pair.
#[derive(Clone, Copy, Debug)]
pub struct HallSampler {
    pub a: UnitVector3,
    pub b: UnitVector3,
}

impl PairSampler for HallSampler {
    fn sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(Outcome, Outcome)> {
        hall_pair(self.a, self.b, rng)
    }
}

fn sample_row_index(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// A dichotomic M3 model sampled hierarchically at a fixed setting pair:
/// λ1 ~ P(λ1|x), λ2 ~ P(λ2|y), ξ ~ P(ξ|λ1,λ2), then the two outcomes.
#[derive(Clone, Copy, Debug)]
pub struct DichotomicM3Sampler<'a> {
    pub model: &'a DichotomicM3Model,
    pub x: usize,
    pub y: usize,
}

impl PairSampler for DichotomicM3Sampler<'_> {
    fn sample_pair(&self, rng: &mut ChaCha8Rng) -> Result<(Outcome, Outcome)> {
        let m = self.model;
        let l1 = sample_row_index(m.left_bg().row(&[self.x]), rng);
        let l2 = sample_row_index(m.right_bg().row(&[self.y]), rng);
        let xi = sample_row_index(m.xi_table().row(&[l1, l2]), rng);
        let s1 = sample_row_index(m.left_table().row(&[xi, l1, self.x]), rng);
        let s2 = sample_row_index(m.right_table().row(&[xi, l2, self.y]), rng);
        let out = |i: usize| if i == 0 { Outcome::Plus } else { Outcome::Minus };
        Ok((out(s1), out(s2)))
    }
}

/// Mean of σ1σ2 over n draws, with standard error.
pub fn estimate_correlation_mc(
    sampler: &impl PairSampler,
    n: u64,
    stream: SeededStream,
) -> Result<McEstimate> {
    check_samples(n)?;
    let counts = count_outcomes(n, stream, true, |rng| sampler.sample_pair(rng))?;
    Ok(JointEstimate::from_counts(counts, n)?.correlation)
}

/// Full joint frequency estimate for any pair sampler.
pub fn estimate_joint_mc(
    sampler: &impl PairSampler,
    n: u64,
    stream: SeededStream,
) -> Result<JointEstimate> {
    check_samples(n)?;
    let counts = count_outcomes(n, stream, true, |rng| sampler.sample_pair(rng))?;
    JointEstimate::from_counts(counts, n)
}
