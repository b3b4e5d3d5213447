//! Tapered finite Fourier transform and periodogram on uniform frequency grids.
//!
//! ```text
//! d_T(λ) = Σ_{t=-T}^{T} e^{-iλt} h(t/T) Y(t)
//! I_T(λ) = |d_T(λ)|² / (2π H_{2,T}(0))
//! ```
//!
//! Grids are `λ_j = -π + 2πj/N`, `j = 1..N`, which lies in `(-π, π]` and is
//! closed under `λ ↦ -λ` modulo `2π`. On such a grid the transform is an
//! `N`-point DFT of the modulated series `(-1)^t h(t/T) Y(t)` folded modulo
//! `N`, so the FFT path is exact for every `N` (zero padding when `N ≥ 2T+1`,
//! aliasing folds when `N < 2T+1`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::models::SamplePath;
use crate::tapers::Taper;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(invalid("grid_n", "grid needs at least one point"));
        }
        let step = 2.0 * PI / n_points as f64;
        let points = (1..=n_points)
            .map(|j| {
                if j == n_points {
                    PI
                } else {
                    -PI + step * j as f64
                }
            })
            .collect();
        Ok(Self { points })
    }

    /// The `2T + 1` Fourier frequencies of a sample on `K_T`.
    pub fn fourier(half_window: usize) -> Result<Self> {
        Self::new(2 * half_window + 1)
    }

    /// Twice the Fourier resolution, `N = 2(2T + 1)`.
    pub fn default_for(half_window: usize) -> Result<Self> {
        Self::new(2 * (2 * half_window + 1))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Quadrature weight `2π/N` of every node.
    pub fn weight(&self) -> f64 {
        2.0 * PI / self.points.len() as f64
    }

    /// Index of the node equal to `-λ_i` modulo `2π`.
    pub fn negated_index(&self, i: usize) -> usize {
        let n = self.points.len();
        if i + 1 == n {
            i
        } else {
            n - i - 2
        }
    }
}

/// `d_T(λ)` at a single frequency by direct summation.
pub fn fourier_transform(path: &SamplePath, taper: &Taper, lambda: f64) -> Result<Complex64> {
    let h = taper.series(path.half_window)?;
    check_lengths(path, &h)?;
    Ok(direct_dft(&path.values, &h, lambda))
}

fn direct_dft(values: &[f64], taper: &[f64], lambda: f64) -> Complex64 {
    let half = (values.len() / 2) as i64;
    values
        .iter()
        .zip(taper)
        .enumerate()
        .map(|(i, (y, h))| Complex64::from_polar(h * y, -lambda * (i as i64 - half) as f64))
        .sum()
}

fn check_lengths(path: &SamplePath, taper: &[f64]) -> Result<()> {
    if path.values.len() != taper.len() {
        return Err(invalid(
            "path",
            format!(
                "length {} does not match taper discretization {}",
                path.values.len(),
                taper.len()
            ),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Fft,
    Direct,
}

#[derive(Debug, Clone)]
pub struct PeriodogramGrid {
    pub grid: FrequencyGrid,
    pub half_window: usize,
    pub taper: Taper,
    /// `d_T(λ_j)`
    pub dft: Vec<Complex64>,
    /// `I_T(λ_j)`
    pub values: Vec<f64>,
}

impl PeriodogramGrid {
    /// Pointwise `I_T^k`.
    pub fn power(&self, k: u32) -> Result<Vec<f64>> {
        power(&self.values, k)
    }
}

/// Pointwise `k`-th power of periodogram ordinates.
pub fn power(values: &[f64], k: u32) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("k", "power must be at least 1"));
    }
    Ok(values.iter().map(|v| v.powi(k as i32)).collect())
}

/// Precomputed taper, normalization and FFT plan for repeated periodogram
/// evaluation at a fixed `(taper, T, grid)`.
#[derive(Clone)]
pub struct PeriodogramEngine {
    grid: FrequencyGrid,
    taper: Taper,
    series: Vec<f64>,
    normalization: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodogramEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodogramEngine")
            .field("grid_n", &self.grid.len())
            .field("taper", &self.taper)
            .field("half_window", &(self.series.len() / 2))
            .finish()
    }
}

impl PeriodogramEngine {
    pub fn new(taper: &Taper, half_window: usize, grid: &FrequencyGrid) -> Result<Self> {
        let series = taper.series(half_window)?;
        let h2: f64 = series.iter().map(|h| h * h).sum();
        if h2 == 0.0 {
            return Err(Error::DegenerateTaper(format!(
                "H_2,T(0) = 0 for taper `{}` at T = {half_window}",
                taper.name()
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(grid.len());
        Ok(Self {
            grid: grid.clone(),
            taper: taper.clone(),
            series,
            normalization: 1.0 / (2.0 * PI * h2),
            fft,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn half_window(&self) -> usize {
        self.series.len() / 2
    }

    /// `1 / (2π H_{2,T}(0))`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn compute(&self, path: &SamplePath) -> Result<PeriodogramGrid> {
        self.compute_with(path, Evaluation::Fft)
    }

    pub fn compute_with(&self, path: &SamplePath, method: Evaluation) -> Result<PeriodogramGrid> {
        check_lengths(path, &self.series)?;
        let dft = match method {
            Evaluation::Fft => self.dft_fft(&path.values),
            Evaluation::Direct => self
                .grid
                .points()
                .iter()
                .map(|&l| direct_dft(&path.values, &self.series, l))
                .collect(),
        };
        let values = dft.iter().map(|d| d.norm_sqr() * self.normalization).collect();
        Ok(PeriodogramGrid {
            grid: self.grid.clone(),
            half_window: self.half_window(),
            taper: self.taper.clone(),
            dft,
            values,
        })
    }

    /// Periodogram ordinates only, into a caller-owned buffer.
    pub fn ordinates_into(&self, path: &SamplePath, out: &mut Vec<f64>) -> Result<()> {
        check_lengths(path, &self.series)?;
        let dft = self.dft_fft(&path.values);
        out.clear();
        out.extend(dft.iter().map(|d| d.norm_sqr() * self.normalization));
        Ok(())
    }

    fn dft_fft(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let half = (values.len() / 2) as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (i, (y, h)) in values.iter().zip(&self.series).enumerate() {
            let t = i as i64 - half;
            let sign = if t.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[t.rem_euclid(n as i64) as usize] += sign * h * y;
        }
        self.fft.process(&mut buf);
        // λ_j for j = 1..N sits at DFT bin j mod N.
        buf.rotate_left(1);
        buf
    }
}

/// `I_T` on `grid`, via FFT.
pub fn periodogram_grid(
    path: &SamplePath,
    taper: &Taper,
    grid: &FrequencyGrid,
) -> Result<PeriodogramGrid> {
    PeriodogramEngine::new(taper, path.half_window, grid)?.compute(path)
}
