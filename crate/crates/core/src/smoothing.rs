//! Weighted moving-average smoothing of per-token scores.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    Mean,
    Gaussian,
    None,
}

impl fmt::Display for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelShape::Mean => "mean",
            KernelShape::Gaussian => "gaussian",
            KernelShape::None => "none",
        })
    }
}

/// Symmetric (odd size) or floor-offset (even size) smoothing kernel with
/// coefficients summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    shape: KernelShape,
    size: usize,
    sigma: Option<f64>,
    first_offset: isize,
    coefficients: Vec<f64>,
}

impl Kernel {
    pub fn identity() -> Self {
        Kernel {
            shape: KernelShape::None,
            size: 1,
            sigma: None,
            first_offset: 0,
            coefficients: vec![1.0],
        }
    }

    pub fn build(shape: KernelShape, size: usize, sigma: Option<f64>) -> Result<Self> {
        if size < 1 {
            return Err(Error::Config("kernel size must be >= 1".into()));
        }
        // odd: -(L-1)/2 ..= (L-1)/2, even: -L/2 ..= L/2 - 1
        let first_offset = -((size / 2) as isize);
        let offsets = (0..size as isize).map(|i| first_offset + i);
        let raw: Vec<f64> = match shape {
            KernelShape::None => return Ok(Self::identity()),
            KernelShape::Mean => vec![1.0; size],
            KernelShape::Gaussian => {
                let sigma = sigma.ok_or_else(|| {
                    Error::Config("gaussian kernel requires sigma".into())
                })?;
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::DegenerateSigma(sigma));
                }
                let two_var = 2.0 * sigma * sigma;
                offsets
                    .map(|k| (-((k * k) as f64) / two_var).exp())
                    .collect()
            }
        };
        let total: f64 = raw.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::DegenerateSigma(sigma.unwrap_or(f64::NAN)));
        }
        Ok(Kernel {
            shape,
            size,
            sigma: if shape == KernelShape::Gaussian { sigma } else { None },
            first_offset,
            coefficients: raw.iter().map(|c| c / total).collect(),
        })
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `(offset, coefficient)` pairs, most negative offset first.
    pub fn taps(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.first_offset + i as isize, c))
    }

    pub fn is_identity(&self) -> bool {
        self.coefficients.len() == 1
    }
}

/// Applies the kernel at every position. Near the sentence edges only the
/// taps that land inside the sentence are used, renormalized to sum to one.
pub fn smooth(raw: &[f64], kernel: &Kernel) -> Vec<f64> {
    if kernel.is_identity() {
        return raw.to_vec();
    }
    let n = raw.len() as isize;
    (0..n)
        .map(|t| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, c) in kernel.taps() {
                let pos = t + k;
                if (0..n).contains(&pos) {
                    num += c * raw[pos as usize];
                    den += c;
                }
            }
            num / den
        })
        .collect()
}

/// Streaming count/mean/spread accumulator. Mergeable, so partial results
/// from different workers can be combined.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScoreMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ScoreMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, xs: I) {
        for x in xs {
            self.push(x);
        }
    }

    pub fn merge(&mut self, other: &ScoreMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.mean += delta * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance.
    pub fn variance(&self) -> Result<f64> {
        if self.count < 2 {
            return Err(Error::TooFewScores(self.count));
        }
        Ok((self.m2 / self.count as f64).max(0.0))
    }
}

/// Population variance of every raw score in the corpus.
pub fn global_sigma<I: IntoIterator<Item = f64>>(scores: I) -> Result<f64> {
    let mut m = ScoreMoments::default();
    m.extend(scores);
    m.variance()
}

/// How the gaussian dispersion is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaPolicy {
    /// Global variance of the raw scores.
    Variance,
    /// Global standard deviation of the raw scores.
    StdDev,
    Fixed(f64),
}

impl SigmaPolicy {
    pub fn resolve(&self, moments: &ScoreMoments) -> Result<f64> {
        match *self {
            SigmaPolicy::Variance => moments.variance(),
            SigmaPolicy::StdDev => moments.variance().map(f64::sqrt),
            SigmaPolicy::Fixed(s) => Ok(s),
        }
    }

    pub fn needs_corpus_pass(&self) -> bool {
        !matches!(self, SigmaPolicy::Fixed(_))
    }
}

impl FromStr for SigmaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(SigmaPolicy::Variance),
            "stddev" => Ok(SigmaPolicy::StdDev),
            other => other
                .parse::<f64>()
                .map(SigmaPolicy::Fixed)
                .map_err(|_| Error::Config(format!("unknown sigma policy `{other}`"))),
        }
    }
}

/// Kernel for a whole corpus. When every raw score is identical any
/// normalized kernel leaves the corpus unchanged, so a zero variance falls
/// back to the identity instead of failing.
pub fn corpus_kernel(
    shape: KernelShape,
    size: usize,
    policy: SigmaPolicy,
    moments: &ScoreMoments,
) -> Result<Kernel> {
    match shape {
        KernelShape::Gaussian => {
            if policy.needs_corpus_pass() && moments.count() >= 2 && moments.variance()? == 0.0 {
                return Ok(Kernel::identity());
            }
            let sigma = policy.resolve(moments)?;
            Kernel::build(shape, size, Some(sigma))
        }
        _ => Kernel::build(shape, size, None),
    }
}
