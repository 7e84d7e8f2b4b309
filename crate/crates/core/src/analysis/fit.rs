//! Exponential decay and log-log slope fits.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Rate `r` in `e(t) ~ e(0) exp(-r t)`.
    pub rate: f64,
    /// Median of the last tenth of the samples.
    pub floor: f64,
    /// Samples in the fitted pre-floor segment.
    pub samples: usize,
    /// `e(0) / floor`, the dynamic range covered before flooring.
    pub decades: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares line `y = a + s x`; returns `(a, s, rms residual)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let s = sxy / sxx;
    let a = my - s * mx;
    let rms = (x.iter().zip(y).map(|(a0, b)| (b - a - s * a0).powi(2)).sum::<f64>() / n).sqrt();
    (a, s, rms)
}

/// Fits an exponential rate to the segment before the series first drops to
/// `3 x` the median of its last tenth.
pub fn decay_rate_fit(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::Fit("times and values must be nonempty and of equal length".into()));
    }
    let n = values.len();
    let tail = (n / 10).max(1);
    let floor = median(values[n - tail..].to_vec());
    let threshold = 3.0 * floor;
    let end = values.iter().position(|v| !(*v > threshold)).unwrap_or(n);
    if end < 10 {
        return Err(Error::Fit(format!(
            "only {end} samples above the floor threshold {threshold:.3e}; need 10"
        )));
    }
    let x = &times[..end];
    let y: Vec<f64> = values[..end].iter().map(|v| v.ln()).collect();
    let (_, slope, _) = line_fit(x, &y);
    if !(slope < 0.0) {
        return Err(Error::Fit(format!("series does not decay (log slope {slope:.3e})")));
    }
    Ok(DecayFit {
        rate: -slope,
        floor,
        samples: end,
        decades: (values[0] / floor).log10(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub points: usize,
}

/// Log-log least-squares slope of `(abscissa, error)` pairs. Nonpositive
/// entries are dropped with a warning.
pub fn convergence_order(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    let kept: Vec<(f64, f64)> = pairs.iter().copied().filter(|(x, e)| *x > 0.0 && *e > 0.0).collect();
    if kept.len() < pairs.len() {
        log::warn!("dropped {} nonpositive points from the order fit", pairs.len() - kept.len());
    }
    if kept.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 positive points, got {}", kept.len())));
    }
    let lo = kept.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = kept.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi < 4.0 * lo * (1.0 - 1e-12) {
        return Err(Error::Fit(format!("abscissa spans only {:.2}x; need 4x", hi / lo)));
    }
    let x: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let (intercept, slope, residual) = line_fit(&x, &y);
    Ok(OrderFit {
        slope,
        intercept,
        residual,
        points: kept.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn pure_exponential() {
        let t = grid(10.0, 201);
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let fit = decay_rate_fit(&t, &e).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-6, "{}", fit.rate);
    }

    #[test]
    fn exponential_with_floor() {
        let t = grid(20.0, 401);
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp() + 1e-9).collect();
        let fit = decay_rate_fit(&t, &e).unwrap();
        assert!((fit.rate - 2.0).abs() < 0.05, "{}", fit.rate);
        assert!((fit.floor - 1e-9).abs() < 1e-12);
        assert!(fit.decades > 8.9);
    }

    #[test]
    fn constant_series_has_no_decay() {
        let t = grid(1.0, 50);
        assert!(decay_rate_fit(&t, &vec![0.3; 50]).is_err());
    }

    #[test]
    fn first_order_slope() {
        let pairs: Vec<(f64, f64)> = [0.02, 0.01, 0.005, 0.0025].iter().map(|&t| (t, 3.0 * t)).collect();
        assert!((convergence_order(&pairs).unwrap().slope - 1.0).abs() < 1e-10);
        let floored: Vec<(f64, f64)> = [0.02, 0.01, 0.005, 0.0025].iter().map(|&t| (t, 3.0 * t + 1e-8)).collect();
        let s = convergence_order(&floored).unwrap().slope;
        assert!((0.9..=1.0).contains(&s));
    }

    #[test]
    fn negative_power() {
        let pairs: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0].iter().map(|&l: &f64| (l, 2.0 * l.powf(-1.25))).collect();
        assert!((convergence_order(&pairs).unwrap().slope + 1.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(convergence_order(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(convergence_order(&[(1.0, 1.0), (4.0, 0.0), (8.0, 3.0)]).is_err());
    }
}
