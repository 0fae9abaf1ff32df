//! Ordinary least-squares line fit, used for wavefront slopes and for the
//! linearity checks on sweeps.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for a two-point fit.
    pub slope_stderr: f64,
    /// Coefficient of determination. Defined as 1 when `y` is constant and
    /// the fit is exact.
    pub r_squared: f64,
    pub n: usize,
}

/// Fits `y = slope * x + intercept`. Returns `None` for fewer than two points
/// or when all `x` coincide.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x[..n].iter().zip(&y[..n]) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(xi, yi)| {
            let r = yi - (slope * xi + intercept);
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 {
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ssr / syy };
    Some(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        n,
    })
}
