//! Weight functions and the empirical functional
//! `J_{k,T}(φ) = ∫_Λ φ(λ) I_T(λ)^k dλ`, evaluated by the uniform rule on a
//! [`FrequencyGrid`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::models::SamplePath;
use crate::periodogram::{FrequencyGrid, PeriodogramEngine, PeriodogramGrid};
use crate::tapers::Taper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Constant,
    CosinePoly,
    IndicatorBand,
    Custom,
}

type WeightFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Constant(Complex64),
    /// `Σ_j a_j cos(jλ)`, `a_0` first.
    CosinePoly(Vec<f64>),
    /// `1{lo ≤ |λ| ≤ hi}`
    Band { lo: f64, hi: f64 },
    Custom(WeightFn),
}

/// A weight `φ` on `Λ = (-π, π]`.
#[derive(Clone)]
pub struct WeightFunction {
    label: String,
    repr: Repr,
    declared_q: Option<f64>,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("label", &self.label)
            .field("kind", &self.kind())
            .field("declared_q", &self.declared_q)
            .finish()
    }
}

impl WeightFunction {
    pub fn constant(c: f64) -> Self {
        let label = if c == 1.0 { "one".to_string() } else { format!("const:{c}") };
        Self {
            label,
            repr: Repr::Constant(Complex64::new(c, 0.0)),
            declared_q: Some(f64::INFINITY),
        }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// `cos(jλ)`.
    pub fn cosine(j: usize) -> Self {
        let mut coeffs = vec![0.0; j + 1];
        coeffs[j] = 1.0;
        Self {
            label: format!("cos:{j}"),
            repr: Repr::CosinePoly(coeffs),
            declared_q: Some(f64::INFINITY),
        }
    }

    /// `Σ_j coeffs[j] cos(jλ)`.
    pub fn cosine_poly(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coeffs", "need at least one finite coefficient"));
        }
        let label = format!(
            "cospoly:{}",
            coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        Ok(Self {
            label,
            repr: Repr::CosinePoly(coeffs),
            declared_q: Some(f64::INFINITY),
        })
    }

    /// Indicator of the symmetric band `lo ≤ |λ| ≤ hi`. Discontinuous, so it
    /// falls outside the bounded-and-continuous weight class.
    pub fn band(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= PI) {
            return Err(invalid(
                "band",
                format!("need 0 ≤ lo < hi ≤ π, got [{lo}, {hi}]"),
            ));
        }
        Ok(Self {
            label: format!("band:{lo},{hi}"),
            repr: Repr::Band { lo, hi },
            declared_q: Some(f64::INFINITY),
        })
    }

    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            repr: Repr::Custom(Arc::new(f)),
            declared_q: None,
        }
    }

    /// `a·φ₁ + b·φ₂`.
    pub fn linear_combination(a: Complex64, phi1: &Self, b: Complex64, phi2: &Self) -> Self {
        let (p1, p2) = (phi1.clone(), phi2.clone());
        Self::custom(
            format!("({a})*{}+({b})*{}", phi1.label, phi2.label),
            move |l| a * p1.eval(l) + b * p2.eval(l),
        )
    }

    /// Parse the CLI syntax `one | cos:j | band:a,b`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || invalid("phi", format!("cannot parse `{spec}` (expected one, cos:j or band:a,b)"));
        if spec == "one" {
            return Ok(Self::one());
        }
        if let Some(j) = spec.strip_prefix("cos:") {
            return j.trim().parse::<usize>().map(Self::cosine).map_err(|_| bad());
        }
        if let Some(rest) = spec.strip_prefix("band:") {
            let mut it = rest.split(',').map(|s| s.trim().parse::<f64>());
            return match (it.next(), it.next(), it.next()) {
                (Some(Ok(lo)), Some(Ok(hi)), None) => Self::band(lo, hi),
                _ => Err(bad()),
            };
        }
        Err(bad())
    }

    pub fn with_declared_q(mut self, q: f64) -> Self {
        self.declared_q = Some(q);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn declared_q(&self) -> Option<f64> {
        self.declared_q
    }

    pub fn kind(&self) -> WeightKind {
        match self.repr {
            Repr::Constant(_) => WeightKind::Constant,
            Repr::CosinePoly(_) => WeightKind::CosinePoly,
            Repr::Band { .. } => WeightKind::IndicatorBand,
            Repr::Custom(_) => WeightKind::Custom,
        }
    }

    /// Whether `φ` is known to be bounded and continuous.
    pub fn is_continuous(&self) -> bool {
        !matches!(self.repr, Repr::Band { .. })
    }

    /// Whether `φ` is real by construction.
    pub fn is_real(&self) -> bool {
        match &self.repr {
            Repr::Constant(c) => c.im == 0.0,
            Repr::CosinePoly(_) | Repr::Band { .. } => true,
            Repr::Custom(_) => false,
        }
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::CosinePoly(coeffs) => Complex64::new(
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * (j as f64 * lambda).cos())
                    .sum(),
                0.0,
            ),
            Repr::Band { lo, hi } => {
                let a = lambda.abs();
                Complex64::new(if *lo <= a && a <= *hi { 1.0 } else { 0.0 }, 0.0)
            }
            Repr::Custom(f) => f(lambda),
        }
    }

    /// `φ(λ_j)` for every grid node.
    pub fn on_grid(&self, grid: &FrequencyGrid) -> Vec<Complex64> {
        grid.points().iter().map(|&l| self.eval(l)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Empirical,
    Oracle,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub value: Complex64,
    pub k: u32,
    pub half_window: usize,
    pub grid_n: usize,
    pub provenance: Provenance,
    /// Set when `φ` is not continuous, so the limit theory does not cover it.
    pub continuity_warning: bool,
}

/// `Σ_j (2π/N) φ(λ_j) I_j^k` for precomputed weights and ordinates.
pub fn integrate_power(phi_values: &[Complex64], ordinates: &[f64], k: u32, weight: f64) -> Complex64 {
    debug_assert_eq!(phi_values.len(), ordinates.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (p, i) in phi_values.iter().zip(ordinates) {
        acc += p * i.powi(k as i32);
    }
    acc * weight
}

/// `J_{k,T}(φ)` from an already computed periodogram.
pub fn functional(pg: &PeriodogramGrid, phi: &WeightFunction, k: u32) -> Result<FunctionalEstimate> {
    if k == 0 {
        return Err(invalid("k", "power must be at least 1"));
    }
    let weights = phi.on_grid(&pg.grid);
    if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
        return Err(invalid("phi", format!("`{}` is not finite on the grid", phi.label())));
    }
    Ok(FunctionalEstimate {
        value: integrate_power(&weights, &pg.values, k, pg.grid.weight()),
        k,
        half_window: pg.half_window,
        grid_n: pg.grid.len(),
        provenance: Provenance::Empirical,
        continuity_warning: !phi.is_continuous(),
    })
}

pub fn estimate(
    path: &SamplePath,
    taper: &Taper,
    phi: &WeightFunction,
    k: u32,
    grid: &FrequencyGrid,
) -> Result<FunctionalEstimate> {
    if k == 0 {
        return Err(invalid("k", "power must be at least 1"));
    }
    let pg = PeriodogramEngine::new(taper, path.half_window, grid)?.compute(path)?;
    functional(&pg, phi, k)
}

/// The vector `{J_{k_i,T}(φ_i)}` from one shared periodogram.
pub fn estimate_batch(
    path: &SamplePath,
    taper: &Taper,
    phis: &[WeightFunction],
    ks: &[u32],
    grid: &FrequencyGrid,
) -> Result<Vec<FunctionalEstimate>> {
    check_batch(phis, ks)?;
    let pg = PeriodogramEngine::new(taper, path.half_window, grid)?.compute(path)?;
    phis.iter().zip(ks).map(|(phi, &k)| functional(&pg, phi, k)).collect()
}

pub(crate) fn check_batch(phis: &[WeightFunction], ks: &[u32]) -> Result<()> {
    if phis.is_empty() || phis.len() != ks.len() {
        return Err(invalid(
            "phis",
            format!(
                "need equally many weights and powers (m ≥ 1), got {} and {}",
                phis.len(),
                ks.len()
            ),
        ));
    }
    if ks.contains(&0) {
        return Err(invalid("k", "power must be at least 1"));
    }
    Ok(())
}
