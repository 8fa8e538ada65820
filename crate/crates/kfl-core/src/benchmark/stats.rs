//! Paired significance testing and bootstrap intervals.
//!
//! Self-contained: the Student-t tail probability comes from a regularized
//! incomplete beta evaluated with a Lentz continued fraction, so no stats
//! crate is needed. Bootstrap resampling is seeded and reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::BenchmarkError;

pub const BOOTSTRAP_RESAMPLES: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceResult {
    pub n: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub std_a: f64,
    pub std_b: f64,
    pub mean_diff: f64,
    pub t_stat: f64,
    pub p_value: f64,
    /// Percentile 95% interval for the mean of each sample.
    pub ci_a: (f64, f64),
    pub ci_b: (f64, f64),
    /// Set when every pairwise difference is identical, which leaves the
    /// t statistic undefined; p is then 1 (no difference) or 0 (constant
    /// nonzero difference).
    pub degenerate: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

/// ln Γ(x) for x > 0, Lanczos approximation (g = 5, 6 terms).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let tmp = x + 5.5 - (x + 0.5) * (x + 5.5).ln();
    let mut ser = 1.000000000190015;
    for (i, c) in COEF.iter().enumerate() {
        ser += c / (x + 1.0 + i as f64);
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 200;
    const EPS: f64 = 3.0e-14;
    const FPMIN: f64 = 1.0e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided p for a t statistic with `df` degrees of freedom:
/// P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
fn t_two_sided_p(t: f64, df: f64) -> f64 {
    beta_inc(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn bootstrap_ci(xs: &[f64], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = xs.len();
    let mut means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += xs[rng.random_range(0..n)];
        }
        means.push(sum / n as f64);
    }
    means.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // Empirical 2.5th and 97.5th percentiles of the 1,000 resample means.
    (means[24], means[974])
}

/// Paired two-sided Student t-test of per-task scores `a` vs `b`, plus
/// seeded percentile-bootstrap 95% intervals for each sample mean (sample
/// `a` consumes the random stream first).
pub fn significance(a: &[f64], b: &[f64], seed: u64) -> Result<SignificanceResult, BenchmarkError> {
    if a.len() != b.len() {
        return Err(BenchmarkError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.len() < 2 {
        return Err(BenchmarkError::TooFewSamples(a.len()));
    }
    let n = a.len();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_diff = mean(&diffs);
    let sd_diff = std_dev(&diffs);

    let (t_stat, p_value, degenerate) = if sd_diff == 0.0 {
        if mean_diff == 0.0 {
            (0.0, 1.0, true)
        } else {
            (f64::INFINITY.copysign(mean_diff), 0.0, true)
        }
    } else {
        let t = mean_diff / (sd_diff / (n as f64).sqrt());
        (t, t_two_sided_p(t, (n - 1) as f64), false)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ci_a = bootstrap_ci(a, &mut rng);
    let ci_b = bootstrap_ci(b, &mut rng);

    Ok(SignificanceResult {
        n,
        mean_a: mean(a),
        mean_b: mean(b),
        std_a: std_dev(a),
        std_b: std_dev(b),
        mean_diff,
        t_stat,
        p_value,
        ci_a,
        ci_b,
        degenerate,
    })
}
