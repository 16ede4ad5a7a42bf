//! Monte Carlo aggregation with a reduction order that does not depend on
//! how replications are scheduled.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Replications are reduced in fixed blocks of this size, then the blocks are
/// merged in index order.
pub const BLOCK: u64 = 2048;

/// Default confidence level for reported intervals.
pub const DEFAULT_LEVEL: f64 = 0.99;

/// Monte Carlo mean with its standard error and confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub level: f64,
    pub half_width: f64,
}

impl McEstimate {
    /// A value known without sampling error.
    pub fn exact(value: f64, n: u64, level: f64) -> Self {
        Self { mean: value, stderr: 0.0, n, level, half_width: 0.0 }
    }

    pub fn ci(&self) -> (f64, f64) {
        (self.mean - self.half_width, self.mean + self.half_width)
    }

    pub fn contains(&self, v: f64) -> bool {
        let (lo, hi) = self.ci();
        lo <= v && v <= hi
    }

    /// |a − b| / sqrt(se_a² + se_b²); infinite when both are exact and differ.
    pub fn z_distance(&self, other: &McEstimate) -> f64 {
        let d = (self.mean - other.mean).abs();
        let s = self.stderr.hypot(other.stderr);
        if s == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / s
        }
    }

    /// |mean − v| in units of stderr.
    pub fn z_to(&self, v: f64) -> f64 {
        self.z_distance(&McEstimate::exact(v, 1, self.level))
    }
}

/// Two-sided normal quantile for a confidence level.
pub fn z_value(level: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + 0.5 * level)
}

/// Streaming first and second moments (Welford, with Chan's merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    /// Closes the accumulation into an estimate. A single sample reports a
    /// zero standard error.
    pub fn estimate(&self, level: f64) -> Result<McEstimate> {
        if self.n == 0 {
            return Err(Error::arg("no samples to aggregate"));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::arg(format!("confidence level {level} outside (0,1)")));
        }
        let var = if self.n > 1 { (self.m2 / (self.n - 1) as f64).max(0.0) } else { 0.0 };
        let stderr = (var / self.n as f64).sqrt();
        Ok(McEstimate {
            mean: self.mean,
            stderr,
            n: self.n,
            level,
            half_width: z_value(level) * stderr,
        })
    }
}

/// Mean, unbiased sample deviation, stderr and z-interval of a sample stream.
pub fn mc_aggregate<I: IntoIterator<Item = f64>>(samples: I, level: f64) -> Result<McEstimate> {
    let mut m = Moments::default();
    for x in samples {
        m.push(x);
    }
    m.estimate(level)
}

/// Runs `n` replications of `sample` on the rayon pool and reduces them
/// deterministically.
pub fn run_replications<F>(n: u64, level: f64, sample: F) -> Result<McEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    reduce_replications(n, sample)?.estimate(level)
}

/// As [`run_replications`] but returns the raw moments.
pub fn reduce_replications<F>(n: u64, sample: F) -> Result<Moments>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(Error::arg("replication count must be positive"));
    }
    let blocks = n.div_ceil(BLOCK);
    let parts: Vec<Result<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                let x = sample(i)?;
                if !x.is_finite() {
                    return Err(Error::Simulation {
                        time: f64::NAN,
                        message: format!("non-finite sample in replication {i}"),
                    });
                }
                m.push(x);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total)
}

/// Sequential counterpart used inside already-parallel work.
pub fn reduce_sequential<F>(n: u64, mut sample: F) -> Result<Moments>
where
    F: FnMut(u64) -> Result<f64>,
{
    if n == 0 {
        return Err(Error::arg("replication count must be positive"));
    }
    let mut total = Moments::default();
    for b in 0..n.div_ceil(BLOCK) {
        let mut m = Moments::default();
        for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
            m.push(sample(i)?);
        }
        total.merge(&m);
    }
    Ok(total)
}
