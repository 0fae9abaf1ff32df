use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::stats::{linear_fit, LinearFit};

/// Density frames ρ(x_n, t) on a periodic ring.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    /// Snapshot times (fs), increasing.
    pub times: Vec<f64>,
    /// Site spacing L (nm); site n sits at x_n = nL.
    pub spacing: f64,
    /// One frame per time, each of length N.
    pub frames: Vec<Vec<f64>>,
}

impl DensitySeries {
    pub fn n_sites(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    pub fn ring_length(&self) -> f64 {
        self.n_sites() as f64 * self.spacing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavefrontOptions {
    /// Front threshold as a fraction of the frame maximum.
    pub threshold: f64,
    /// Linear-fit window [t₁, t₂] (fs).
    pub fit_window: (f64, f64),
}

impl Default for WavefrontOptions {
    fn default() -> Self {
        WavefrontOptions {
            threshold: 0.05,
            fit_window: (100.0, 400.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefrontResult {
    /// Unwrapped front position per frame (nm).
    pub front: Vec<f64>,
    /// Fitted slope (nm/fs).
    pub vg: f64,
    /// Standard error of the slope (nm/fs).
    pub vg_stderr: f64,
    pub fit: LinearFit,
    /// Fit window actually used (fs); shorter than requested when the
    /// front reached half the ring.
    pub window: (f64, f64),
    /// The front travelled half the ring before the end of the requested
    /// window and later frames were discarded.
    pub boundary_reached: bool,
}

/// Leading edge of one frame: start at the maximum and walk in +x while the
/// density stays above `threshold·max`; the crossing is interpolated
/// linearly between the last site above and the first site below. Returns
/// the position relative to x = 0, possibly beyond the ring length.
fn frame_front(frame: &[f64], spacing: f64, threshold: f64) -> Option<f64> {
    let n = frame.len();
    let (peak, &max) = frame
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(max > 0.0 && max.is_finite()) {
        return None;
    }
    let cut = threshold * max;
    let mut s = 0;
    while s + 1 < n && frame[(peak + s + 1) % n] >= cut {
        s += 1;
    }
    let above = frame[(peak + s) % n];
    let below = frame[(peak + s + 1) % n];
    let frac = if s + 1 < n && above > below {
        (above - cut) / (above - below)
    } else {
        0.0
    };
    Some((peak as f64 + s as f64 + frac) * spacing)
}

/// Track the leading edge of the density and fit its position linearly in
/// time over the requested window.
pub fn track_wavefront(series: &DensitySeries, options: &WavefrontOptions) -> Result<WavefrontResult> {
    ensure(options.threshold > 0.0 && options.threshold < 1.0, || {
        format!("threshold must lie in (0, 1), got {}", options.threshold)
    })?;
    let (t1, t2) = options.fit_window;
    ensure(t1.is_finite() && t2.is_finite() && t1 < t2, || {
        format!("fit window must satisfy t1 < t2, got ({t1}, {t2})")
    })?;
    ensure(series.spacing > 0.0, || "spacing must be > 0".to_string())?;
    if series.frames.is_empty() || series.frames.len() != series.times.len() {
        return Err(Error::Shape(format!(
            "{} frames for {} times",
            series.frames.len(),
            series.times.len()
        )));
    }
    let n = series.n_sites();
    if n == 0 || series.frames.iter().any(|f| f.len() != n) {
        return Err(Error::Shape("frames must be non-empty and of equal length".into()));
    }
    let ring = series.ring_length();

    let mut front = Vec::with_capacity(series.frames.len());
    let mut prev: Option<f64> = None;
    for (i, frame) in series.frames.iter().enumerate() {
        let raw = frame_front(frame, series.spacing, options.threshold).ok_or_else(|| {
            Error::Numerical(format!("frame {i} has no positive finite maximum"))
        })?;
        let x = match prev {
            None => raw,
            Some(p) => raw + ((p - raw) / ring).round() * ring,
        };
        front.push(x);
        prev = Some(x);
    }

    let start = front[0];
    let limit = series
        .times
        .iter()
        .zip(&front)
        .position(|(_, &x)| x - start >= 0.5 * ring);
    let boundary_reached = match limit {
        Some(i) => series.times[i] <= t2,
        None => false,
    };
    let end = limit.unwrap_or(front.len());

    let (xs, ys): (Vec<f64>, Vec<f64>) = series.times[..end]
        .iter()
        .zip(&front[..end])
        .filter(|(t, _)| **t >= t1 && **t <= t2)
        .map(|(t, x)| (*t, *x))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::Numerical(format!(
            "only {} frames inside the fit window ({t1}, {t2}) fs",
            xs.len()
        )));
    }
    let window = (xs[0], xs[xs.len() - 1]);
    if boundary_reached {
        log::warn!(
            "wavefront reached half the ring at t = {} fs; fit truncated to ({}, {}) fs",
            series.times[end],
            window.0,
            window.1
        );
    }
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::Numerical("degenerate wavefront fit".into()))?;
    Ok(WavefrontResult {
        front,
        vg: fit.slope,
        vg_stderr: fit.slope_stderr,
        fit,
        window,
        boundary_reached,
    })
}
