//! Measured-ratio reports and power-law fits.

use serde::Serialize;

/// Outcome of one estimate check over a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub name: String,
    /// Name of the swept parameter.
    pub parameter: String,
    pub params: Vec<f64>,
    /// Measured left-hand sides.
    pub values: Vec<f64>,
    /// Left-hand side over right-hand side.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log value` against `log parameter`.
    pub fitted_exponent: Option<f64>,
    pub expected_exponent: Option<f64>,
    /// `max ratio / min ratio`.
    pub spread: f64,
    pub pass: bool,
    pub note: String,
}

impl EstimateReport {
    pub fn new(name: &str, parameter: &str) -> Self {
        Self {
            name: name.to_string(),
            parameter: parameter.to_string(),
            params: Vec::new(),
            values: Vec::new(),
            ratios: Vec::new(),
            fitted_exponent: None,
            expected_exponent: None,
            spread: 1.0,
            pass: false,
            note: String::new(),
        }
    }

    pub fn push(&mut self, param: f64, value: f64, ratio: f64) {
        self.params.push(param);
        self.values.push(value);
        self.ratios.push(ratio);
    }

    /// Fits the exponent of `values` and the spread of `ratios`.
    pub fn finish(&mut self) {
        self.fitted_exponent = power_law_slope(&self.params, &self.values);
        self.spread = spread(&self.ratios);
    }

    /// Passes when the fitted exponent is within `tol` of `expected`.
    pub fn judge_exponent(&mut self, expected: f64, tol: f64) -> bool {
        self.finish();
        self.expected_exponent = Some(expected);
        self.pass = self.fitted_exponent.is_some_and(|s| (s - expected).abs() <= tol);
        self.pass
    }

    /// Passes when the ratios do not grow as the parameter decreases beyond
    /// a slope of `tol`, and no ratio exceeds `max_growth` times the ratio at
    /// the largest parameter.
    pub fn judge_bounded(&mut self, tol: f64, max_growth: f64) -> bool {
        self.finish();
        let trend = power_law_slope(&self.params, &self.ratios);
        self.pass = trend.is_some_and(|s| s >= -tol) && self.growth() <= max_growth;
        self.pass
    }

    /// Passes when no ratio exceeds `max_growth` times the first one; for
    /// upper bounds whose measured constant may decay along the sweep.
    pub fn judge_upper(&mut self, max_growth: f64) -> bool {
        self.finish();
        let first = self.ratios.first().copied().unwrap_or(0.0);
        let hi = self.ratios.iter().copied().fold(0.0, f64::max);
        self.pass = first > 0.0 && hi.is_finite() && hi <= max_growth * first;
        self.pass
    }

    /// Largest ratio over the ratio at the largest parameter.
    pub fn growth(&self) -> f64 {
        let Some(base) = self
            .params
            .iter()
            .zip(&self.ratios)
            .max_by(|a, b| a.0.total_cmp(b.0))
            .map(|(_, r)| *r)
        else {
            return 1.0;
        };
        let hi = self.ratios.iter().copied().fold(0.0, f64::max);
        if base > 0.0 {
            hi / base
        } else {
            f64::INFINITY
        }
    }

    /// Passes when the ratio spread is at most `max_spread`.
    pub fn judge_spread(&mut self, max_spread: f64) -> bool {
        self.finish();
        self.pass = self.spread.is_finite() && self.spread <= max_spread;
        self.pass
    }
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than two
/// usable points.
pub fn power_law_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// `max / min` of positive values; infinite if any value is not positive.
pub fn spread(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 1.0;
    }
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(0.0, f64::max);
    if lo > 0.0 && hi.is_finite() {
        hi / lo
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [1e-2, 1e-3, 1e-4];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(-1.0 / 3.0)).collect();
        assert!((power_law_slope(&x, &y).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(power_law_slope(&x[..1], &y[..1]), None);
        assert!((spread(&[2.0, 4.0, 3.0]) - 2.0).abs() < 1e-15);
        assert!(spread(&[0.0, 1.0]).is_infinite());
    }
}
