use serde::Serialize;

use super::RankStatistics;
use crate::error::{Error, Result};

/// Least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    LineFit { slope, intercept, r2, residuals }
}

/// Growth of the mean rank along an `n` ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    /// `ln(mean)` against `ln(n)`: the slope is the power-law exponent.
    pub power: LineFit,
    /// `mean` against `log2(n)`: the slope is the increment per doubling.
    pub log: LineFit,
}

pub fn growth_fit(n: &[u64], means: &[f64]) -> Result<GrowthFit> {
    if n.len() != means.len() {
        return Err(Error::Fit(format!("{} n values for {} means", n.len(), means.len())));
    }
    if n.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", n.len())));
    }
    if let Some(m) = means.iter().find(|&&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::Fit(format!("means must be positive, got {m}")));
    }
    if n.iter().any(|&v| v == 0) || n.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("n values must be positive and distinct".into()));
    }
    let ln_n: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let log2_n: Vec<f64> = n.iter().map(|&v| (v as f64).log2()).collect();
    let ln_m: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    Ok(GrowthFit { power: line_fit(&ln_n, &ln_m), log: line_fit(&log2_n, means) })
}

/// [`growth_fit`] over the cells of one kernel.
pub fn growth_fit_stats(stats: &RankStatistics, kernel: &str) -> Result<GrowthFit> {
    let cells: Vec<_> = stats.cells.iter().filter(|c| c.kernel.eq_ignore_ascii_case(kernel)).collect();
    if let Some(c) = cells.iter().find(|c| !c.is_ok()) {
        return Err(Error::Fit(format!("cell n = {} failed", c.n)));
    }
    let n: Vec<u64> = cells.iter().map(|c| c.n).collect();
    let means: Vec<f64> = cells.iter().map(|c| c.mean).collect();
    growth_fit(&n, &means)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let n = [64u64, 256, 1024, 4096, 16384];
        let m: Vec<f64> = n.iter().map(|&v| 3.0 * (v as f64).sqrt()).collect();
        let f = growth_fit(&n, &m).unwrap();
        assert!((f.power.slope - 0.5).abs() < 1e-6);
        assert!((f.power.intercept - 3f64.ln()).abs() < 1e-6);
        assert!((f.power.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_log_law() {
        let n = [250u64, 500, 1000, 2000, 4000];
        let m: Vec<f64> = n.iter().map(|&v| 5.0 * (v as f64).log2()).collect();
        let f = growth_fit(&n, &m).unwrap();
        assert!((f.log.slope - 5.0).abs() < 1e-6);
        assert!(f.log.residuals.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(growth_fit(&[1, 2, 3], &[1.0, 2.0, 3.0]), Err(Error::Fit(_))));
        assert!(matches!(growth_fit(&[1, 2, 3, 4], &[1.0, 0.0, 3.0, 4.0]), Err(Error::Fit(_))));
    }

    #[test]
    fn two_dimensional_edge_table_slope() {
        // Published means of the two-dimensional edge-sharing K1 matrices.
        let n = [225u64, 484, 961, 1936, 3969, 8100, 16129];
        let m = [80.43, 114.19, 154.62, 210.49, 292.42, 404.35, 545.65];
        let f = growth_fit(&n, &m).unwrap();
        assert!((f.power.slope - 0.45).abs() < 0.01, "{}", f.power.slope);
    }
}
