//! Stationary process models with known second- and fourth-order spectra.
//!
//! Conventions: `c(τ) = ∫_Λ f(λ) e^{iτλ} dλ` over `Λ = (-π, π]`, so white
//! noise with variance `σ²` has the flat density `σ²/2π`. Linear models are
//! causal ARMA filters of i.i.d. innovations,
//!
//! ```text
//! Y(t) = Σ_i ar_i Y(t-i) + ε(t) + Σ_j ma_j ε(t-j),
//! ψ(λ) = (1 + Σ_j ma_j e^{-ijλ}) / (1 - Σ_i ar_i e^{-iiλ}),
//! f(λ) = κ₂/(2π) |ψ(λ)|²,
//! f₄(λ₁, λ₂, λ₃) = κ₄/(2π)³ ψ(λ₁) ψ(λ₂) ψ(λ₃) ψ(-λ₁-λ₂-λ₃).
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::{Exp1, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tapers::check_half_window;

/// Relative tolerance for negative circulant eigenvalues.
pub const CIRCULANT_TOLERANCE: f64 = 1e-10;
const MAX_EMBEDDING_DOUBLINGS: usize = 6;
const BASE_BURN_IN: usize = 1024;
const PSI_CUTOFF: f64 = 1e-17;
const MAX_PSI_LEN: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Innovations {
    Gaussian,
    /// `σ(E - 1)` with `E ~ Exp(1)`: `κ₃ = 2σ³`, `κ₄ = 6σ⁴`.
    Exponential,
    /// `±σ` with equal probability: `κ₃ = 0`, `κ₄ = -2σ⁴`.
    TwoPoint,
}

impl Innovations {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::Gaussian),
            "exponential" => Ok(Self::Exponential),
            "twopoint" => Ok(Self::TwoPoint),
            other => Err(invalid(
                "innovations",
                format!("unknown law `{other}` (expected gaussian, exponential or twopoint)"),
            )),
        }
    }

    /// `(κ₂, κ₃, κ₄)` for the law scaled to variance `sigma2`.
    pub fn cumulants(self, sigma2: f64) -> (f64, f64, f64) {
        let sigma = sigma2.sqrt();
        match self {
            Self::Gaussian => (sigma2, 0.0, 0.0),
            Self::Exponential => (sigma2, 2.0 * sigma2 * sigma, 6.0 * sigma2 * sigma2),
            Self::TwoPoint => (sigma2, 0.0, -2.0 * sigma2 * sigma2),
        }
    }

    fn draw<R: Rng>(self, rng: &mut R, sigma: f64) -> f64 {
        match self {
            Self::Gaussian => sigma * rng.sample::<f64, _>(StandardNormal),
            Self::Exponential => sigma * (rng.sample::<f64, _>(Exp1) - 1.0),
            Self::TwoPoint => {
                if rng.random::<bool>() {
                    sigma
                } else {
                    -sigma
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    GaussianWhite,
    GaussianAr1,
    GaussianMa1,
    /// Gaussian ARMA of arbitrary finite order.
    GaussianLinear,
    LinearNongaussian,
}

impl ModelFamily {
    pub fn is_gaussian(self) -> bool {
        !matches!(self, Self::LinearNongaussian)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GaussianWhite => "gaussian_white",
            Self::GaussianAr1 => "gaussian_ar1",
            Self::GaussianMa1 => "gaussian_ma1",
            Self::GaussianLinear => "gaussian_linear",
            Self::LinearNongaussian => "linear_nongaussian",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A stationary linear process described by its innovation law and
/// ARMA coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    family: ModelFamily,
    sigma2: f64,
    ar: Vec<f64>,
    ma: Vec<f64>,
    innovations: Innovations,
    psi: Arc<Vec<f64>>,
}

impl SpectralModel {
    pub fn white(sigma2: f64) -> Result<Self> {
        Self::linear(sigma2, vec![], vec![], Innovations::Gaussian)
    }

    pub fn ar1(sigma2: f64, rho: f64) -> Result<Self> {
        if rho.is_nan() || rho.abs() >= 1.0 {
            return Err(invalid("rho", format!("need |rho| < 1, got {rho}")));
        }
        Self::linear(sigma2, vec![rho], vec![], Innovations::Gaussian)
    }

    pub fn ma1(sigma2: f64, theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        Self::linear(sigma2, vec![], vec![theta], Innovations::Gaussian)
    }

    /// General causal ARMA filter driven by i.i.d. innovations with variance
    /// `sigma2`.
    pub fn linear(
        sigma2: f64,
        ar: Vec<f64>,
        ma: Vec<f64>,
        innovations: Innovations,
    ) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid("sigma2", format!("need 0 < sigma2 < ∞, got {sigma2}")));
        }
        if ar.iter().chain(&ma).any(|c| !c.is_finite()) {
            return Err(invalid("coefficients", "must be finite"));
        }
        let psi = psi_weights(&ar, &ma)?;
        let family = match (innovations, ar.len(), ma.len()) {
            (Innovations::Gaussian, 0, 0) => ModelFamily::GaussianWhite,
            (Innovations::Gaussian, 1, 0) => ModelFamily::GaussianAr1,
            (Innovations::Gaussian, 0, 1) => ModelFamily::GaussianMa1,
            (Innovations::Gaussian, _, _) => ModelFamily::GaussianLinear,
            _ => ModelFamily::LinearNongaussian,
        };
        Ok(Self {
            family,
            sigma2,
            ar,
            ma,
            innovations,
            psi: Arc::new(psi),
        })
    }

    /// Same filter driven by a different innovation law of equal variance.
    pub fn with_innovations(&self, innovations: Innovations) -> Self {
        Self::linear(self.sigma2, self.ar.clone(), self.ma.clone(), innovations)
            .expect("coefficients already validated")
    }

    pub fn family(&self) -> ModelFamily {
        self.family
    }

    pub fn is_gaussian(&self) -> bool {
        self.family.is_gaussian()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn ar(&self) -> &[f64] {
        &self.ar
    }

    pub fn ma(&self) -> &[f64] {
        &self.ma
    }

    pub fn innovations(&self) -> Innovations {
        self.innovations
    }

    /// `(κ₂, κ₃, κ₄)` of the innovations.
    pub fn innovation_cumulants(&self) -> (f64, f64, f64) {
        self.innovations.cumulants(self.sigma2)
    }

    /// Moving-average representation `Y(t) = Σ_j ψ_j ε(t-j)`, truncated once
    /// the weights fall below double precision.
    pub fn psi_weights(&self) -> &[f64] {
        &self.psi
    }

    /// `ψ(λ)`.
    pub fn transfer(&self, lambda: f64) -> Complex64 {
        let poly = |coeffs: &[f64], sign: f64| -> Complex64 {
            coeffs
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (j, c)| {
                    acc + sign * c * Complex64::from_polar(1.0, -((j + 1) as f64) * lambda)
                })
        };
        poly(&self.ma, 1.0) / poly(&self.ar, -1.0)
    }

    /// Second-order spectral density `f(λ)`.
    pub fn spectral_density(&self, lambda: f64) -> f64 {
        match self.family {
            ModelFamily::GaussianWhite => self.sigma2 / (2.0 * PI),
            ModelFamily::GaussianAr1 => {
                let rho = self.ar[0];
                self.sigma2 / (2.0 * PI * (1.0 - 2.0 * rho * lambda.cos() + rho * rho))
            }
            ModelFamily::GaussianMa1 => {
                let theta = self.ma[0];
                self.sigma2 * (1.0 + 2.0 * theta * lambda.cos() + theta * theta) / (2.0 * PI)
            }
            _ => self.sigma2 / (2.0 * PI) * self.transfer(lambda).norm_sqr(),
        }
    }

    /// Fourth-order cumulant spectral density `f₄(λ₁, λ₂, λ₃)`; zero for
    /// Gaussian innovations.
    pub fn trispectrum(&self, l1: f64, l2: f64, l3: f64) -> Complex64 {
        let (_, _, k4) = self.innovation_cumulants();
        if k4 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let scale = k4 / (2.0 * PI).powi(3);
        scale
            * self.transfer(l1)
            * self.transfer(l2)
            * self.transfer(l3)
            * self.transfer(-l1 - l2 - l3)
    }

    /// Autocovariance `c(τ)`.
    pub fn autocovariance(&self, tau: i64) -> f64 {
        let lag = tau.unsigned_abs() as usize;
        match self.family {
            ModelFamily::GaussianWhite => {
                if lag == 0 {
                    self.sigma2
                } else {
                    0.0
                }
            }
            ModelFamily::GaussianAr1 => {
                let rho = self.ar[0];
                self.sigma2 * rho.powi(lag as i32) / (1.0 - rho * rho)
            }
            ModelFamily::GaussianMa1 => {
                let theta = self.ma[0];
                match lag {
                    0 => self.sigma2 * (1.0 + theta * theta),
                    1 => self.sigma2 * theta,
                    _ => 0.0,
                }
            }
            _ => {
                let psi = &self.psi;
                if lag >= psi.len() {
                    return 0.0;
                }
                self.sigma2 * psi.iter().zip(&psi[lag..]).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    /// `c(0), ..., c(len - 1)`.
    pub fn autocovariances(&self, len: usize) -> Vec<f64> {
        (0..len as i64).map(|tau| self.autocovariance(tau)).collect()
    }

    fn burn_in(&self) -> usize {
        if self.ar.is_empty() {
            BASE_BURN_IN
        } else if self.ar.len() == 1 {
            BASE_BURN_IN + (20.0 / (1.0 - self.ar[0].abs())).ceil() as usize
        } else {
            BASE_BURN_IN + self.psi.len()
        }
    }

    /// Prepare a sampler for paths on `K_T`.
    pub fn sampler(&self, half_window: usize) -> Result<PathSampler> {
        check_half_window(half_window)?;
        let n = 2 * half_window + 1;
        let backend = if self.is_gaussian() {
            Backend::Circulant(CirculantEmbedding::new(&self.autocovariances(n))?)
        } else {
            Backend::Filter {
                burn_in: self.burn_in(),
            }
        };
        Ok(PathSampler {
            model: self.clone(),
            half_window,
            backend,
        })
    }

    /// One sample path on `K_T`, deterministic in `(model, T, seed)`.
    pub fn simulate(&self, half_window: usize, seed: u64) -> Result<SamplePath> {
        Ok(self.sampler(half_window)?.sample(seed))
    }
}

fn psi_weights(ar: &[f64], ma: &[f64]) -> Result<Vec<f64>> {
    let mut psi: Vec<f64> = Vec::new();
    let mut below = 0usize;
    let memory = ar.len().max(1);
    for j in 0.. {
        if j >= MAX_PSI_LEN {
            return Err(invalid(
                "ar",
                "autoregressive coefficients are not stationary (ψ-weights do not decay)",
            ));
        }
        let mut v = match j {
            0 => 1.0,
            j if j <= ma.len() => ma[j - 1],
            _ => 0.0,
        };
        for (i, a) in ar.iter().enumerate() {
            if j > i {
                v += a * psi[j - i - 1];
            }
        }
        if !v.is_finite() || v.abs() > 1e12 {
            return Err(invalid("ar", "autoregressive coefficients are not stationary"));
        }
        psi.push(v);
        if j >= ma.len() {
            if v.abs() < PSI_CUTOFF {
                below += 1;
                if below >= memory {
                    break;
                }
            } else {
                below = 0;
            }
        }
    }
    while psi.len() > 1 && psi.last().is_some_and(|v| v.abs() < PSI_CUTOFF) {
        psi.pop();
    }
    Ok(psi)
}

/// Observations `Y(-T), ..., Y(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub half_window: usize,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl SamplePath {
    pub fn new(values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.len() < 3 || values.len().is_multiple_of(2) {
            return Err(invalid(
                "values",
                format!("path length must be 2T+1 with T ≥ 1, got {}", values.len()),
            ));
        }
        Ok(Self {
            half_window: values.len() / 2,
            values,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone)]
struct CirculantEmbedding {
    /// `sqrt(eigenvalue / m)` for each circulant frequency.
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl CirculantEmbedding {
    fn new(acov: &[f64]) -> Result<Self> {
        let n = acov.len();
        let mut m = (2 * (n - 1)).max(2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let mut last = (0.0, 0.0);
        for _ in 0..=MAX_EMBEDDING_DOUBLINGS {
            let mut row: Vec<Complex64> = (0..m)
                .map(|j| {
                    let lag = j.min(m - j);
                    Complex64::new(acov.get(lag).copied().unwrap_or(0.0), 0.0)
                })
                .collect();
            let fft = planner.plan_fft_forward(m);
            fft.process(&mut row);
            let eig: Vec<f64> = row.iter().map(|z| z.re).collect();
            let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            if min >= -CIRCULANT_TOLERANCE * max {
                let scale = eig
                    .iter()
                    .map(|&e| (e.max(0.0) / m as f64).sqrt())
                    .collect();
                return Ok(Self { scale, fft });
            }
            last = (min, max);
            m *= 2;
        }
        Err(Error::CirculantEmbedding {
            min_eigenvalue: last.0,
            max_eigenvalue: last.1,
            size: m / 2,
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut buf);
        buf[..n].iter().map(|z| z.re).collect()
    }
}

#[derive(Clone)]
enum Backend {
    Circulant(CirculantEmbedding),
    Filter { burn_in: usize },
}

/// Reusable path generator for a fixed model and half-window.
#[derive(Clone)]
pub struct PathSampler {
    model: SpectralModel,
    half_window: usize,
    backend: Backend,
}

impl fmt::Debug for PathSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathSampler")
            .field("model", &self.model.family)
            .field("half_window", &self.half_window)
            .finish()
    }
}

impl PathSampler {
    pub fn half_window(&self) -> usize {
        self.half_window
    }

    pub fn sample(&self, seed: u64) -> SamplePath {
        let n = 2 * self.half_window + 1;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let values = match &self.backend {
            Backend::Circulant(ce) => ce.sample(&mut rng, n),
            Backend::Filter { burn_in } => self.filter(&mut rng, n, *burn_in),
        };
        SamplePath {
            half_window: self.half_window,
            values,
            seed,
        }
    }

    fn filter<R: Rng>(&self, rng: &mut R, n: usize, burn_in: usize) -> Vec<f64> {
        let SpectralModel {
            ar,
            ma,
            innovations,
            sigma2,
            ..
        } = &self.model;
        let sigma = sigma2.sqrt();
        let total = burn_in + n;
        let eps: Vec<f64> = (0..total + ma.len())
            .map(|_| innovations.draw(rng, sigma))
            .collect();
        let mut y = vec![0.0; total];
        for t in 0..total {
            // eps is offset by ma.len() so that ε(t - j) exists for every t.
            let e = ma.len() + t;
            let mut v = eps[e];
            for (j, th) in ma.iter().enumerate() {
                v += th * eps[e - j - 1];
            }
            for (i, a) in ar.iter().enumerate() {
                if t > i {
                    v += a * y[t - i - 1];
                }
            }
            y[t] = v;
        }
        y.split_off(burn_in)
    }
}

/// Serializable model description used by configs and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelName,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default = "default_innovations")]
    pub innovations: Innovations,
}

fn default_sigma2() -> f64 {
    1.0
}

fn default_innovations() -> Innovations {
    Innovations::Gaussian
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    White,
    Ar1,
    Ma1,
}

impl ModelName {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "white" => Ok(Self::White),
            "ar1" => Ok(Self::Ar1),
            "ma1" => Ok(Self::Ma1),
            other => Err(invalid(
                "model",
                format!("unknown model `{other}` (expected white, ar1 or ma1)"),
            )),
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<SpectralModel> {
        let base = match self.model {
            ModelName::White => SpectralModel::white(self.sigma2)?,
            ModelName::Ar1 => {
                let rho = self.rho.ok_or_else(|| invalid("rho", "required for ar1"))?;
                SpectralModel::ar1(self.sigma2, rho)?
            }
            ModelName::Ma1 => {
                let theta = self
                    .theta
                    .ok_or_else(|| invalid("theta", "required for ma1"))?;
                SpectralModel::ma1(self.sigma2, theta)?
            }
        };
        Ok(base.with_innovations(self.innovations))
    }
}
