use serde::{Deserialize, Serialize};

use super::{quantile, summarize, AnalysisError};

pub const KDE_GRID_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub bandwidth: f64,
    pub points: Vec<(f64, f64)>,
    /// Fewer than two distinct values were given.
    pub degenerate: bool,
}

impl DensityCurve {
    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,density\n");
        for (x, d) in &self.points {
            out.push_str(&format!("{x},{d}\n"));
        }
        out
    }
}

/// Gaussian kernel density estimate on a grid extending `3h` past the data.
pub fn kde(values: &[f64], bandwidth: Bandwidth) -> Result<DensityCurve, AnalysisError> {
    kde_with_margin(values, bandwidth, 3.0)
}

/// As [`kde`] with the grid extending `margin * h` past the data.
pub fn kde_with_margin(values: &[f64], bandwidth: Bandwidth, margin: f64) -> Result<DensityCurve, AnalysisError> {
    let s = summarize(values)?;
    let degenerate = s.min == s.max;
    let h = match bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::Silverman => silverman(values, s.sd, degenerate),
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(AnalysisError::Bandwidth(h));
    }
    let lo = s.min - margin * h;
    let hi = s.max + margin * h;
    let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let points = (0..KDE_GRID_POINTS)
        .map(|i| {
            let x = if i == KDE_GRID_POINTS - 1 { hi } else { lo + step * i as f64 };
            let d: f64 = values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum();
            (x, d * norm)
        })
        .collect();
    Ok(DensityCurve { bandwidth: h, points, degenerate })
}

/// Silverman's rule of thumb. Falls back to the sd when the IQR is zero,
/// and to a small scale-relative width when every value is the same.
fn silverman(values: &[f64], sd: f64, degenerate: bool) -> f64 {
    if degenerate {
        return (values[0].abs() * 1e-3).max(1e-6);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (values.len() as f64).powf(-0.2)
}
