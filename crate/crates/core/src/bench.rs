//! Timing harness comparing the eSCN convolution with the full tensor-product
//! convolution.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{argument, Result};
use crate::escn::{escn_convolution, reparametrize_weights, So2LinearWeights};
use crate::irreps::{so3_convolution, IrrepsFeature, IrrepsLayout, PathWeights};

pub const MIN_REPS: usize = 3;
pub const CSV_HEADER: &str = "kernel,L_max,M_max,channels,reps,median_s";

/// Each timed repetition runs the kernel often enough to last at least this.
const MIN_BATCH: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Escn,
    FullTensorProduct,
}

impl Kernel {
    pub const ALL: [Kernel; 2] = [Kernel::Escn, Kernel::FullTensorProduct];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Escn => "escn",
            Kernel::FullTensorProduct => "full_tp",
        }
    }
}

/// Inputs for one kernel invocation: a source feature, an edge vector and
/// weights. The eSCN weights are the reparametrisation of the tensor-product
/// weights, so both kernels compute the same message when `M_max = L_max`.
pub struct KernelFixture {
    pub l_max: usize,
    pub m_max: usize,
    pub channels: usize,
    pub x: IrrepsFeature,
    pub vector: Vector3<f64>,
    pub path_weights: PathWeights,
    pub so2_weights: So2LinearWeights,
}

impl KernelFixture {
    pub fn new(l_max: usize, m_max: usize, channels: usize, seed: u64) -> Result<KernelFixture> {
        if l_max == 0 || channels == 0 {
            return Err(argument("benchmark needs L_max ≥ 1 and at least one channel"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let path_weights = PathWeights::random(l_max, 2 * l_max, l_max, channels, channels, &mut rng);
        let so2_weights = reparametrize_weights(&path_weights, m_max.min(l_max))?;
        Ok(KernelFixture {
            l_max,
            m_max: m_max.min(l_max),
            channels,
            x: IrrepsFeature::random(IrrepsLayout::new(l_max, channels), &mut rng),
            vector: Vector3::new(0.83, -1.21, 0.47),
            path_weights,
            so2_weights,
        })
    }

    pub fn run(&self, kernel: Kernel) -> Result<IrrepsFeature> {
        match kernel {
            Kernel::Escn => escn_convolution(&self.x, &self.vector, &self.so2_weights),
            Kernel::FullTensorProduct => {
                so3_convolution(&self.x, &self.vector, &self.path_weights, self.l_max)
            }
        }
    }

    /// Max abs difference of `kernel` against the tensor-product result.
    pub fn deviation(&self, kernel: Kernel) -> Result<f64> {
        let reference = self.run(Kernel::FullTensorProduct)?;
        Ok(self.run(kernel)?.max_abs_diff(&reference))
    }
}

/// Median seconds per call over `reps` repetitions after one warm-up.
pub fn median_time<F: FnMut() -> Result<()>>(reps: usize, mut f: F) -> Result<f64> {
    if reps < MIN_REPS {
        return Err(argument(format!("reps must be at least {MIN_REPS}, got {reps}")));
    }
    let start = Instant::now();
    f()?;
    let once = start.elapsed().max(Duration::from_nanos(1));
    let batch = (MIN_BATCH.as_secs_f64() / once.as_secs_f64()).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        for _ in 0..batch {
            f()?;
        }
        times.push(start.elapsed().as_secs_f64() / batch as f64);
    }
    times.sort_by(f64::total_cmp);
    let mid = reps / 2;
    Ok(if reps % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub kernel: Kernel,
    pub l_max: usize,
    pub m_max: usize,
    pub channels: usize,
    pub reps: usize,
    pub median_s: f64,
    /// Max abs difference from the tensor-product kernel.
    pub max_deviation: f64,
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
}

impl BenchReport {
    pub fn slope(&self, kernel: Kernel) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .records
            .iter()
            .filter(|r| r.kernel == kernel)
            .map(|r| (r.l_max as f64, r.median_s))
            .collect();
        loglog_slope(&pts)
    }

    /// `slope(full_tp) - slope(escn)`.
    pub fn slope_gap(&self) -> Option<f64> {
        Some(self.slope(Kernel::FullTensorProduct)? - self.slope(Kernel::Escn)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:e}",
                r.kernel.name(),
                r.l_max,
                r.m_max,
                r.channels,
                r.reps,
                r.median_s
            );
        }
        s
    }
}

/// Time both kernels at every `L_max`. `m_max = None` uses `M_max = L_max`.
pub fn run_benchmark(
    l_values: &[usize],
    m_max: Option<usize>,
    channels: usize,
    reps: usize,
    seed: u64,
) -> Result<BenchReport> {
    if reps < MIN_REPS {
        return Err(argument(format!("reps must be at least {MIN_REPS}, got {reps}")));
    }
    if l_values.is_empty() {
        return Err(argument("no L_max values to benchmark"));
    }
    let mut records = Vec::new();
    for &l in l_values {
        let fixture = KernelFixture::new(l, m_max.unwrap_or(l), channels, seed)?;
        for kernel in Kernel::ALL {
            let median_s = median_time(reps, || fixture.run(kernel).map(|_| ()))?;
            records.push(BenchRecord {
                kernel,
                l_max: l,
                m_max: match kernel {
                    Kernel::Escn => fixture.m_max,
                    Kernel::FullTensorProduct => l,
                },
                channels,
                reps,
                median_s,
                max_deviation: fixture.deviation(kernel)?,
            });
        }
    }
    Ok(BenchReport { records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|x: &f64| (*x, 3.0 * x.powi(3))).collect();
        assert!((loglog_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }

    #[test]
    fn too_few_reps() {
        assert!(median_time(1, || Ok(())).is_err());
        assert!(run_benchmark(&[2], None, 2, 1, 0).is_err());
    }

    #[test]
    fn single_degree_has_no_slope() {
        let r = run_benchmark(&[1], None, 2, 3, 0).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(r.slope(Kernel::Escn).is_none());
        assert!(r.to_csv().starts_with(CSV_HEADER));
        assert!(r.records.iter().all(|x| x.median_s > 0.0 && x.max_deviation < 1e-8));
    }
}
