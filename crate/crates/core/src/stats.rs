//! Small statistics toolkit: binomial intervals, logistic fits, moments.

use alloc::vec::Vec;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A Monte Carlo proportion with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(successes, trials, Z95);
        let estimate = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Proportion {
            successes,
            trials,
            estimate,
            ci_lo,
            ci_hi,
        }
    }

    /// Binomial standard error of the estimate.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        libm::sqrt(self.estimate * (1.0 - self.estimate) / self.trials as f64)
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample covariance of paired indicators together with the Monte Carlo
/// standard error of that covariance estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub covariance: f64,
    pub std_error: f64,
    /// Pearson correlation; `0.0` when either variable is constant.
    pub correlation: f64,
    pub samples: usize,
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> CovarianceEstimate {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return CovarianceEstimate {
            covariance: 0.0,
            std_error: 0.0,
            correlation: 0.0,
            samples: n,
        };
    }
    let mx = mean(xs);
    let my = mean(ys);
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let cov = mean(&prods);
    let var_prod = prods.iter().map(|p| (p - cov) * (p - cov)).sum::<f64>() / (n - 1) as f64;
    let vx = xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>() / n as f64;
    let vy = ys.iter().map(|y| (y - my) * (y - my)).sum::<f64>() / n as f64;
    let correlation = if vx > 0.0 && vy > 0.0 {
        cov / libm::sqrt(vx * vy)
    } else {
        0.0
    };
    CovarianceEstimate {
        covariance: cov,
        std_error: libm::sqrt(var_prod / n as f64),
        correlation,
        samples: n,
    }
}

/// Maximum likelihood fit of `P[success | x] = 1 / (1 + exp(-(b0 + b1 x)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticFit {
    pub intercept: f64,
    pub slope: f64,
    /// Inverse Fisher information `[[v00, v01], [v01, v11]]`.
    pub cov: [[f64; 2]; 2],
    pub iterations: usize,
}

impl LogisticFit {
    /// Abscissa where the fitted curve crosses 1/2.
    pub fn midpoint(&self) -> f64 {
        -self.intercept / self.slope
    }

    /// Delta-method standard error of [`midpoint`](Self::midpoint).
    pub fn midpoint_std_error(&self) -> f64 {
        let t = self.midpoint();
        let b1 = self.slope;
        let var = (self.cov[0][0] + 2.0 * t * self.cov[0][1] + t * t * self.cov[1][1]) / (b1 * b1);
        libm::sqrt(var.max(0.0))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Newton-Raphson with step halving. Returns `None` when the iteration does
/// not converge, which includes perfectly separated data.
pub fn logistic_fit(xs: &[f64], successes: &[u64], trials: &[u64]) -> Option<LogisticFit> {
    let n = xs.len();
    if n < 2 || successes.len() != n || trials.len() != n {
        return None;
    }
    // standardize x for conditioning
    let xm = mean(xs);
    let xs_dev = libm::sqrt(xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>() / n as f64);
    if xs_dev == 0.0 {
        return None;
    }
    let u: Vec<f64> = xs.iter().map(|x| (x - xm) / xs_dev).collect();

    let loglik = |b0: f64, b1: f64| -> f64 {
        let mut ll = 0.0;
        for k in 0..n {
            let z = b0 + b1 * u[k];
            let s = successes[k] as f64;
            let f = (trials[k] - successes[k]) as f64;
            // log sigmoid(z) = -log(1 + e^{-z})
            ll -= s * softplus(-z) + f * softplus(z);
        }
        ll
    };

    let (mut b0, mut b1) = (0.0, 0.0);
    let mut ll = loglik(b0, b1);
    for iter in 1..=200 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..n {
            let p = sigmoid(b0 + b1 * u[k]);
            let t = trials[k] as f64;
            let r = successes[k] as f64 - t * p;
            let w = t * p * (1.0 - p);
            g0 += r;
            g1 += r * u[k];
            h00 += w;
            h01 += w * u[k];
            h11 += w * u[k] * u[k];
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 1e-12) {
            return None;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-6 {
            let (n0, n1) = (b0 + step * d0, b1 + step * d1);
            let nll = loglik(n0, n1);
            if nll >= ll - 1e-12 {
                b0 = n0;
                b1 = n1;
                ll = nll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || libm::fabs(b1) > 1e3 {
            return None;
        }
        if libm::fabs(step * d0) < 1e-10 && libm::fabs(step * d1) < 1e-10 {
            // Fisher information at the optimum, then map back to raw x
            let (mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0);
            for k in 0..n {
                let p = sigmoid(b0 + b1 * u[k]);
                let w = trials[k] as f64 * p * (1.0 - p);
                h00 += w;
                h01 += w * u[k];
                h11 += w * u[k] * u[k];
            }
            let det = h00 * h11 - h01 * h01;
            if !(det > 0.0) {
                return None;
            }
            let cu = [[h11 / det, -h01 / det], [-h01 / det, h00 / det]];
            // raw: slope = b1 / s, intercept = b0 - b1 m / s
            let a = [[1.0, -xm / xs_dev], [0.0, 1.0 / xs_dev]];
            let mut cov = [[0.0; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    let mut acc = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            acc += a[r][p] * cu[p][q] * a[c][q];
                        }
                    }
                    cov[r][c] = acc;
                }
            }
            return Some(LogisticFit {
                intercept: b0 - b1 * xm / xs_dev,
                slope: b1 / xs_dev,
                cov,
                iterations: iter,
            });
        }
    }
    None
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// First crossing of `level` by the piecewise-linear interpolation of
/// `(xs, ys)`, with the bracketing abscissae.
pub fn interpolate_crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<(f64, f64, f64)> {
    for k in 1..xs.len() {
        let (y0, y1) = (ys[k - 1], ys[k]);
        if (y0 - level) * (y1 - level) <= 0.0 && y0 != y1 {
            let t = (level - y0) / (y1 - y0);
            return Some((xs[k - 1] + t * (xs[k] - xs[k - 1]), xs[k - 1], xs[k]));
        }
        if y0 == level {
            return Some((xs[k - 1], xs[k - 1], xs[k - 1]));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn wilson_reference_values() {
        // 5 out of 10 at z = 1.96
        let (lo, hi) = wilson_interval(5, 10, Z95);
        assert!((lo - 0.236_593).abs() < 1e-5 && (hi - 0.763_407).abs() < 1e-5);
        let (lo, hi) = wilson_interval(0, 20, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.161_130).abs() < 1e-5);
    }

    #[test]
    fn logistic_recovers_midpoint() {
        let xs = vec![0.5, 0.6, 0.7, 0.8, 0.9];
        let trials = vec![1000u64; 5];
        // exact probabilities of a logistic with midpoint 0.7, scale 0.05
        let succ: Vec<u64> = xs
            .iter()
            .map(|x| (1000.0 * sigmoid((x - 0.7) / 0.05)).round() as u64)
            .collect();
        let fit = logistic_fit(&xs, &succ, &trials).unwrap();
        assert!((fit.midpoint() - 0.7).abs() < 1e-3, "{}", fit.midpoint());
        assert!((fit.slope - 20.0).abs() < 0.5);
        assert!(fit.midpoint_std_error() < 0.01);
    }

    #[test]
    fn separated_data_fails_to_fit() {
        let xs = vec![0.1, 0.2, 0.3, 0.4];
        assert!(logistic_fit(&xs, &[0, 0, 10, 10], &[10, 10, 10, 10]).is_none());
        let (t, lo, hi) = interpolate_crossing(&xs, &[0.0, 0.0, 1.0, 1.0], 0.5).unwrap();
        assert!((t - 0.25).abs() < 1e-12 && lo == 0.2 && hi == 0.3);
    }

    #[test]
    fn covariance_of_constant_is_zero() {
        let c = covariance(&[0.0; 10], &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(c.covariance, 0.0);
        assert_eq!(c.std_error, 0.0);
        assert_eq!(c.correlation, 0.0);
    }
}
