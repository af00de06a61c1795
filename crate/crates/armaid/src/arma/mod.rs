//! ARMA model generation and simulation.
//!
//! Produces stationary, invertible ARMA(p,q) coefficient sets by repeated
//! halving of standard-normal draws, simulates labeled series with either
//! Gaussian or heavy-tailed t(2) noise, and assembles shuffled training
//! batches with one series per (p,q) combination.

pub mod roots;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::Stream;
pub use roots::{poly_min_root_modulus, PolyRole};

/// Margin absorbing root-finder error in the "strictly outside the unit
/// circle" checks.
pub const ROOT_MARGIN: f64 = 1e-10;

/// Cap on coefficient halvings before giving up.
pub const HALVING_CAP: usize = 10_000;

/// Cap on regenerated noise draws per simulated series.
const NOISE_RETRY_CAP: usize = 100;

/// Distribution of the innovation noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    /// Standard normal draws.
    Normal01,
    /// t-distribution with 2 degrees of freedom, drawn as a ratio
    /// normal / sqrt(chi2(2)/2) and used raw (no rescaling).
    StudentT2,
}

impl NoiseKind {
    fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            NoiseKind::Normal01 => StandardNormal.sample(rng),
            NoiseKind::StudentT2 => {
                let z: f64 = StandardNormal.sample(rng);
                let chi2: f64 = ChiSquared::new(2.0).expect("valid dof").sample(rng);
                z / (chi2 / 2.0).sqrt()
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            NoiseKind::Normal01 => "normal",
            NoiseKind::StudentT2 => "t2",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "normal" => Ok(NoiseKind::Normal01),
            "t2" => Ok(NoiseKind::StudentT2),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise kind `{other}`"
            ))),
        }
    }
}

/// A stationary, invertible ARMA(p,q) specification.
#[derive(Clone, Debug)]
pub struct ArmaSpec {
    p: usize,
    q: usize,
    phi: Vec<f64>,
    theta: Vec<f64>,
    noise: NoiseKind,
}

impl ArmaSpec {
    /// Builds a specification, enforcing the root conditions.
    pub fn new(phi: Vec<f64>, theta: Vec<f64>, noise: NoiseKind) -> Result<Self> {
        let p = phi.len();
        let q = theta.len();
        if p > 9 || q > 9 {
            return Err(Error::InvalidSpec(format!(
                "orders ({p},{q}) exceed the supported maximum 9"
            )));
        }
        if p > 0 {
            let m = poly_min_root_modulus(&phi, PolyRole::Ar)?;
            if m <= 1.0 + ROOT_MARGIN {
                return Err(Error::InvalidSpec(format!(
                    "AR polynomial min root modulus {m} <= 1"
                )));
            }
        }
        if q > 0 {
            let m = poly_min_root_modulus(&theta, PolyRole::Ma)?;
            if m <= 1.0 + ROOT_MARGIN {
                return Err(Error::InvalidSpec(format!(
                    "MA polynomial min root modulus {m} <= 1"
                )));
            }
        }
        Ok(ArmaSpec {
            p,
            q,
            phi,
            theta,
            noise,
        })
    }

    /// Draws fresh coefficients for the given orders.
    pub fn generate<R: Rng>(p: usize, q: usize, noise: NoiseKind, rng: &mut R) -> Result<Self> {
        let phi = gen_coefficients(p, PolyRole::Ar, rng)?;
        let theta = gen_coefficients(q, PolyRole::Ma, rng)?;
        Ok(ArmaSpec {
            p,
            q,
            phi,
            theta,
            noise,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn noise(&self) -> NoiseKind {
        self.noise
    }
}

/// A fixed-length real-valued series with an optional (p,q) label.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub label: Option<(usize, usize)>,
}

impl TimeSeries {
    pub fn unlabeled(values: Vec<f64>) -> Self {
        TimeSeries {
            values,
            label: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A shuffled collection of labeled series, one per (p,q) combination.
#[derive(Clone, Debug)]
pub struct LabeledBatch {
    pub series: Vec<TimeSeries>,
}

impl LabeledBatch {
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.series
            .iter()
            .map(|s| s.label.expect("batch series are labeled"))
    }
}

/// Draws coefficients of the given order, halving one uniformly chosen entry
/// at a time until the root condition holds.
///
/// The initial draw is checked before any halving; the loop only runs while
/// the minimum root modulus is at most 1.
pub fn gen_coefficients<R: Rng>(order: usize, role: PolyRole, rng: &mut R) -> Result<Vec<f64>> {
    if order == 0 {
        return Ok(Vec::new());
    }
    let mut coeffs: Vec<f64> = (0..order).map(|_| StandardNormal.sample(rng)).collect();
    let mut halvings = 0usize;
    while poly_min_root_modulus(&coeffs, role)? <= 1.0 + ROOT_MARGIN {
        if halvings >= HALVING_CAP {
            return Err(Error::HalvingCapExceeded { cap: HALVING_CAP });
        }
        let idx = rng.random_range(0..order);
        coeffs[idx] *= 0.5;
        halvings += 1;
    }
    Ok(coeffs)
}

/// Number of warm-up steps to discard before a simulated series starts.
///
/// `min_root` is the minimum modulus over the AR polynomial roots; it is
/// ignored when `p == 0`, where the burn-in is simply `q`.
pub fn burn_in_length(p: usize, q: usize, min_root: f64) -> Result<usize> {
    if p == 0 {
        return Ok(q);
    }
    if min_root.is_nan() || min_root <= 1.0 {
        return Err(Error::BurnInDomain(min_root));
    }
    let tail = (10.0 / min_root.ln()).ceil();
    let tail = if tail >= 50_000.0 {
        50_000
    } else {
        tail as usize
    };
    Ok(p + q + tail)
}

/// Simulates a labeled series of exactly `length` values.
///
/// The recursion starts from zero initial conditions and runs for the
/// burn-in plus `length` steps; the burn-in prefix is discarded. Non-finite
/// noise draws (possible under extreme t(2) ratios) are regenerated, with a
/// hard cap on retries.
pub fn simulate_arma<R: Rng>(spec: &ArmaSpec, length: usize, rng: &mut R) -> Result<TimeSeries> {
    if length == 0 {
        return Err(Error::InvalidArgument("series length must be >= 1".into()));
    }
    let min_root = if spec.p > 0 {
        poly_min_root_modulus(&spec.phi, PolyRole::Ar)?
    } else {
        f64::INFINITY
    };
    let burn = burn_in_length(spec.p, spec.q, min_root)?;
    let total = burn + length;

    let mut values = vec![0.0f64; total];
    let mut eps = vec![0.0f64; total];
    let mut retries = 0usize;
    for n in 0..total {
        let mut draw = spec.noise.sample(rng);
        while !draw.is_finite() {
            retries += 1;
            if retries > NOISE_RETRY_CAP {
                return Err(Error::NoiseRetriesExceeded {
                    cap: NOISE_RETRY_CAP,
                });
            }
            draw = spec.noise.sample(rng);
        }
        eps[n] = draw;
        let mut x = draw;
        for (i, &phi) in spec.phi.iter().enumerate() {
            if n > i {
                x += phi * values[n - i - 1];
            }
        }
        for (j, &theta) in spec.theta.iter().enumerate() {
            if n > j {
                x += theta * eps[n - j - 1];
            }
        }
        values[n] = x;
    }
    values.drain(..burn);
    Ok(TimeSeries {
        values,
        label: Some((spec.p, spec.q)),
    })
}

/// Centers and scales a series to sample mean 0 and sample standard
/// deviation 1 (denominator n-1), preserving the label.
pub fn standardize(series: &TimeSeries) -> Result<TimeSeries> {
    let n = series.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { need: 2, got: n });
    }
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let ss = series
        .values
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>();
    let sd = (ss / (n - 1) as f64).sqrt();
    if sd < 1e-150 {
        return Err(Error::DegenerateSeries);
    }
    let values = series.values.iter().map(|v| (v - mean) / sd).collect();
    Ok(TimeSeries {
        values,
        label: series.label,
    })
}

/// Builds one standardized training batch: one freshly drawn series per
/// (p,q) in `ar_range` x `ma_range`, shuffled.
pub fn make_training_batch(
    ar_range: &[usize],
    ma_range: &[usize],
    noise: NoiseKind,
    length: usize,
    stream: &Stream,
) -> Result<LabeledBatch> {
    validate_range(ar_range, "AR")?;
    validate_range(ma_range, "MA")?;
    let mut series = Vec::with_capacity(ar_range.len() * ma_range.len());
    for &p in ar_range {
        for &q in ma_range {
            let mut rng = stream.child("series", &[p as u64, q as u64]).rng();
            let spec = ArmaSpec::generate(p, q, noise, &mut rng)?;
            let raw = simulate_arma(&spec, length, &mut rng)?;
            series.push(standardize(&raw)?);
        }
    }
    series.shuffle(&mut stream.child("shuffle", &[]).rng());
    Ok(LabeledBatch { series })
}

fn validate_range(range: &[usize], what: &str) -> Result<()> {
    if range.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{what} order range is empty"
        )));
    }
    if range.iter().any(|&o| o > 9) {
        return Err(Error::InvalidArgument(format!(
            "{what} orders must lie in 0..=9"
        )));
    }
    Ok(())
}
