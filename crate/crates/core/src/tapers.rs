//! Data tapers on `[-1, 1]` and the norms derived from them.
//!
//! A taper is an even, nonnegative function `h` of bounded variation that
//! vanishes outside `[-1, 1]`. Observations on `K_T = {-T, ..., T}` are
//! weighted by `h(t / T)`, so the discrete sample has `n = 2T + 1` points.
//!
//! Quantities provided here:
//!
//! ```text
//! H_{k,T}(λ) = Σ_{t=-T}^{T} h(t/T)^k e^{-iλt}
//! H_k(0)     = ∫_{-1}^{1} h(t)^k dt
//! e(h)       = (∫ h²)^{-2} ∫ h⁴
//! ```
//!
//! `H_{k,T}(0) / T → H_k(0)` as `T` grows (Riemann sums with mesh `1/T`).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default number of Simpson nodes on `[-1, 1]`.
pub const DEFAULT_QUADRATURE_POINTS: usize = 1025;

const MIN_QUADRATURE_POINTS: usize = 64;
const EVENNESS_SAMPLES: usize = 513;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaperKind {
    Rectangular,
    Cosine,
    Bartlett,
    Custom,
}

type TaperFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Taper {
    kind: TaperKind,
    name: String,
    custom: Option<TaperFn>,
}

impl fmt::Debug for Taper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Taper")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .finish()
    }
}

impl PartialEq for Taper {
    fn eq(&self, other: &Self) -> bool {
        match (&self.custom, &other.custom) {
            (None, None) => self.kind == other.kind,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Taper {
    /// `h ≡ 1` on `[-1, 1]`.
    pub fn rectangular() -> Self {
        Self::builtin(TaperKind::Rectangular)
    }

    /// `h(t) = cos(πt/2)` on `[-1, 1]`.
    pub fn cosine() -> Self {
        Self::builtin(TaperKind::Cosine)
    }

    /// `h(t) = 1 - |t|` on `[-1, 1]`.
    pub fn bartlett() -> Self {
        Self::builtin(TaperKind::Bartlett)
    }

    fn builtin(kind: TaperKind) -> Self {
        let name = match kind {
            TaperKind::Rectangular => "rectangular",
            TaperKind::Cosine => "cosine",
            TaperKind::Bartlett => "bartlett",
            TaperKind::Custom => unreachable!("custom tapers go through Taper::custom"),
        };
        Self {
            kind,
            name: name.to_string(),
            custom: None,
        }
    }

    /// Look up a built-in taper by its CLI name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "rectangular" => Ok(Self::rectangular()),
            "cosine" => Ok(Self::cosine()),
            "bartlett" => Ok(Self::bartlett()),
            other => Err(invalid(
                "taper",
                format!("unknown taper `{other}` (expected rectangular, cosine or bartlett)"),
            )),
        }
    }

    /// Wrap a user function as a taper.
    ///
    /// The function is only consulted on `[-1, 1]`; outside it the taper is
    /// zero regardless of what `h` returns. Evenness is checked by sampling
    /// even when `declared_even` is set, and nonnegativity is checked on the
    /// same samples.
    pub fn custom<F>(name: impl Into<String>, h: F, declared_even: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !declared_even {
            return Err(invalid("h", "custom taper must be declared even"));
        }
        let scale = (0..EVENNESS_SAMPLES)
            .map(|i| h(i as f64 / (EVENNESS_SAMPLES - 1) as f64).abs())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        for i in 0..EVENNESS_SAMPLES {
            let t = i as f64 / (EVENNESS_SAMPLES - 1) as f64;
            let (pos, neg) = (h(t), h(-t));
            if !pos.is_finite() || !neg.is_finite() {
                return Err(invalid("h", format!("non-finite value at t = ±{t}")));
            }
            if pos < 0.0 || neg < 0.0 {
                return Err(invalid("h", format!("negative value at t = ±{t}")));
            }
            if (pos - neg).abs() > 1e-12 * scale {
                return Err(invalid(
                    "h",
                    format!("not even: h({t}) = {pos}, h(-{t}) = {neg}"),
                ));
            }
        }
        Ok(Self {
            kind: TaperKind::Custom,
            name: name.into(),
            custom: Some(Arc::new(h)),
        })
    }

    pub fn kind(&self) -> TaperKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `h(t)`, zero for `|t| > 1`.
    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self.kind {
            TaperKind::Rectangular => 1.0,
            TaperKind::Cosine => {
                if a == 1.0 {
                    0.0
                } else {
                    (0.5 * PI * a).cos()
                }
            }
            TaperKind::Bartlett => 1.0 - a,
            TaperKind::Custom => {
                let h = self.custom.as_ref().expect("custom taper carries a function");
                // Evaluate at |t| so the discrete series is exactly palindromic.
                h(a)
            }
        }
    }

    /// The discrete taper `[h(-T/T), ..., h(0), ..., h(T/T)]`.
    pub fn series(&self, half_window: usize) -> Result<Vec<f64>> {
        check_half_window(half_window)?;
        let t_f = half_window as f64;
        let right: Vec<f64> = (0..=half_window)
            .map(|t| self.eval(t as f64 / t_f))
            .collect();
        let mut out = Vec::with_capacity(2 * half_window + 1);
        out.extend(right[1..].iter().rev());
        out.extend_from_slice(&right);
        Ok(out)
    }

    /// `H_{k,T}(λ) = Σ_{t=-T}^{T} h(t/T)^k e^{-iλt}`.
    pub fn norm(&self, half_window: usize, k: u32, lambda: f64) -> Result<Complex64> {
        check_power(k)?;
        let series = self.series(half_window)?;
        Ok(discrete_norm(&series, k, lambda))
    }

    /// `H_{k,T}(0)`, real by evenness.
    pub fn norm_at_zero(&self, half_window: usize, k: u32) -> Result<f64> {
        check_power(k)?;
        let series = self.series(half_window)?;
        Ok(series.iter().map(|h| h.powi(k as i32)).sum())
    }

    /// `∫_{-1}^{1} h(t)^k dt` by composite Simpson on `points` nodes.
    pub fn integral_power(&self, k: u32, points: usize) -> Result<f64> {
        check_power(k)?;
        if points < MIN_QUADRATURE_POINTS {
            return Err(invalid(
                "quadrature_points",
                format!("need at least {MIN_QUADRATURE_POINTS}, got {points}"),
            ));
        }
        Ok(simpson(|t| self.eval(t).powi(k as i32), -1.0, 1.0, points))
    }

    /// `e(h) = (∫h²)^{-2} ∫h⁴`.
    pub fn e_of_h(&self, points: usize) -> Result<f64> {
        let h2 = self.integral_power(2, points)?;
        if h2 <= 0.0 {
            return Err(Error::DegenerateTaper(format!(
                "∫h² = {h2} for taper `{}`",
                self.name
            )));
        }
        let h4 = self.integral_power(4, points)?;
        Ok(h4 / (h2 * h2))
    }

    /// Collect `H_{k,T}(0)`, `H_k(0)` for the requested powers plus `e(h)`.
    pub fn norms(&self, half_window: usize, powers: &[u32]) -> Result<TaperNorms> {
        let mut discrete = BTreeMap::new();
        let mut continuous = BTreeMap::new();
        for &k in powers {
            discrete.insert(k, self.norm_at_zero(half_window, k)?);
            continuous.insert(k, self.integral_power(k, DEFAULT_QUADRATURE_POINTS)?);
        }
        Ok(TaperNorms {
            half_window,
            h_kt_zero: discrete,
            h_k_zero: continuous,
            e_h: self.e_of_h(DEFAULT_QUADRATURE_POINTS)?,
        })
    }

    /// Discrete total variation of `h` on a uniform grid of `points` nodes
    /// over `[-1, 1]`. Converges to the total variation as the grid refines.
    pub fn discrete_variation(&self, points: usize) -> f64 {
        let step = 2.0 / (points - 1) as f64;
        let mut prev = self.eval(-1.0);
        let mut total = 0.0;
        for i in 1..points {
            let cur = self.eval(-1.0 + i as f64 * step);
            total += (cur - prev).abs();
            prev = cur;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaperNorms {
    pub half_window: usize,
    /// `k ↦ H_{k,T}(0)`
    pub h_kt_zero: BTreeMap<u32, f64>,
    /// `k ↦ H_k(0)`
    pub h_k_zero: BTreeMap<u32, f64>,
    pub e_h: f64,
}

pub(crate) fn discrete_norm(series: &[f64], k: u32, lambda: f64) -> Complex64 {
    let half = (series.len() / 2) as i64;
    series
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let t = i as i64 - half;
            Complex64::from_polar(h.powi(k as i32), -lambda * t as f64)
        })
        .sum()
}

pub(crate) fn check_half_window(half_window: usize) -> Result<()> {
    if half_window == 0 {
        return Err(invalid("T", "half-window must be at least 1"));
    }
    Ok(())
}

fn check_power(k: u32) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "power must be at least 1"));
    }
    Ok(())
}

/// Composite Simpson on `points` nodes (rounded up to an odd count).
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize) -> f64 {
    let intervals = if (points - 1).is_multiple_of(2) { points - 1 } else { points };
    let step = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * step);
    }
    acc * step / 3.0
}
