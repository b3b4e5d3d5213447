//! Limit formulas for the mean and covariance of `J_{k,T}(φ)`.
//!
//! ```text
//! E J_{k,T}(φ) → k! ∫ φ f^k
//! T cov(J_{k,T}(φ₁), J_{l,T}(φ₂)) → 2π e(h) k l k! l! [ ∫ φ₁(λ)(φ̄₂(λ) + φ̄₂(-λ)) f^{k+l}(λ) dλ
//!                                    + ∬ φ₁(λ₁) φ̄₂(λ₂) f^{k-1}(λ₁) f^{l-1}(λ₂) f₄(λ₁,-λ₁,λ₂) ]
//! ```
//!
//! Covariance limits are reported on the `T · cov` scale with `T` the
//! half-window (not the sample size `2T + 1`). The pairwise and trispectrum
//! contributions are kept apart so that the Gaussian reduction can be shown
//! directly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::{check_batch, WeightFunction};
use crate::models::SpectralModel;
use crate::periodogram::FrequencyGrid;
use crate::tapers::{Taper, DEFAULT_QUADRATURE_POINTS};

/// Node counts for the frequency-domain integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Uniform nodes on `Λ` for single integrals.
    pub single: usize,
    /// Uniform nodes per axis for the trispectrum double integral.
    pub double: usize,
    /// Simpson nodes on `[-1, 1]` for `e(h)`.
    pub taper: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            single: 4096,
            double: 257,
            taper: DEFAULT_QUADRATURE_POINTS,
        }
    }
}

/// Tolerance for Hermitian/PSD validation of limit covariance matrices.
pub const MATRIX_TOLERANCE: f64 = 1e-8;

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitMean {
    /// `k! ∫ φ f^k`
    pub value: Complex64,
    pub k: u32,
    pub phi: String,
}

pub fn limit_mean(
    model: &SpectralModel,
    phi: &WeightFunction,
    k: u32,
    quadrature_n: usize,
) -> Result<LimitMean> {
    if k == 0 {
        return Err(invalid("k", "power must be at least 1"));
    }
    let grid = FrequencyGrid::new(quadrature_n)?;
    let integral: Complex64 = grid
        .points()
        .iter()
        .map(|&l| phi.eval(l) * model.spectral_density(l).powi(k as i32))
        .sum::<Complex64>()
        * grid.weight();
    Ok(LimitMean {
        value: integral * factorial(k),
        k,
        phi: phi.label().to_string(),
    })
}

/// Limit of `T · cov(J_{k,T}(φ₁), J_{l,T}(φ₂))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCovariance {
    pub gaussian_part: Complex64,
    pub trispectrum_part: Complex64,
    pub total: Complex64,
    pub e_h: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn limit_covariance(
    model: &SpectralModel,
    phi1: &WeightFunction,
    k: u32,
    phi2: &WeightFunction,
    l: u32,
    taper: &Taper,
    quadrature: &Quadrature,
) -> Result<LimitCovariance> {
    let e_h = taper.e_of_h(quadrature.taper)?;
    limit_covariance_with_e(model, phi1, k, phi2, l, e_h, quadrature)
}

fn limit_covariance_with_e(
    model: &SpectralModel,
    phi1: &WeightFunction,
    k: u32,
    phi2: &WeightFunction,
    l: u32,
    e_h: f64,
    quadrature: &Quadrature,
) -> Result<LimitCovariance> {
    if k == 0 || l == 0 {
        return Err(invalid("k", "powers must be at least 1"));
    }
    let prefactor =
        2.0 * std::f64::consts::PI * e_h * f64::from(k * l) * factorial(k) * factorial(l);

    let grid = FrequencyGrid::new(quadrature.single)?;
    let pairwise: Complex64 = grid
        .points()
        .iter()
        .map(|&x| {
            phi1.eval(x)
                * (phi2.eval(x).conj() + phi2.eval(-x).conj())
                * model.spectral_density(x).powi((k + l) as i32)
        })
        .sum::<Complex64>()
        * grid.weight();

    let trispectrum = if model.is_gaussian() {
        Complex64::new(0.0, 0.0)
    } else {
        let (_, _, k4) = model.innovation_cumulants();
        if !k4.is_finite() {
            return Err(Error::MissingTrispectrum(model.family().to_string()));
        }
        let g = FrequencyGrid::new(quadrature.double)?;
        let left: Vec<(f64, Complex64)> = g
            .points()
            .iter()
            .map(|&x| (x, phi1.eval(x) * model.spectral_density(x).powi(k as i32 - 1)))
            .collect();
        let right: Vec<(f64, Complex64)> = g
            .points()
            .iter()
            .map(|&y| (y, phi2.eval(y).conj() * model.spectral_density(y).powi(l as i32 - 1)))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, a) in &left {
            for &(y, b) in &right {
                acc += a * b * model.trispectrum(x, -x, y);
            }
        }
        acc * g.weight() * g.weight()
    };

    let gaussian_part = prefactor * pairwise;
    let trispectrum_part = prefactor * trispectrum;
    Ok(LimitCovariance {
        gaussian_part,
        trispectrum_part,
        total: gaussian_part + trispectrum_part,
        e_h,
    })
}

/// Limit covariance matrix of `√T (J_T - E J_T)` for a vector of functionals
/// with possibly different powers, plus its Gaussian-only reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct CltCovariance {
    /// Full matrix (pairwise + trispectrum).
    pub full: DMatrix<Complex64>,
    /// Pairwise part only; equals `full` for Gaussian models.
    pub gaussian: DMatrix<Complex64>,
}

impl CltCovariance {
    /// `full[i][j] / sqrt(full[i][i] full[j][j])`.
    pub fn correlation(&self, i: usize, j: usize) -> Complex64 {
        self.full[(i, j)] / (self.full[(i, i)].re * self.full[(j, j)].re).sqrt()
    }
}

pub fn clt_covariance_matrix(
    model: &SpectralModel,
    phis: &[WeightFunction],
    ks: &[u32],
    taper: &Taper,
    quadrature: &Quadrature,
) -> Result<CltCovariance> {
    check_batch(phis, ks)?;
    let e_h = taper.e_of_h(quadrature.taper)?;
    let m = phis.len();
    let mut full = DMatrix::zeros(m, m);
    let mut gaussian = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let c = limit_covariance_with_e(model, &phis[i], ks[i], &phis[j], ks[j], e_h, quadrature)?;
            full[(i, j)] = c.total;
            gaussian[(i, j)] = c.gaussian_part;
            if i != j {
                // Hermitian by construction; the mirrored entry is also
                // recomputed in `validate_hermitian_psd` tests.
                full[(j, i)] = c.total.conj();
                gaussian[(j, i)] = c.gaussian_part.conj();
            }
        }
    }
    validate_hermitian_psd(&full)?;
    validate_hermitian_psd(&gaussian)?;
    Ok(CltCovariance { full, gaussian })
}

/// Check `A = A^H` and `λ_min(A) ≥ -tol·max(1, λ_max)`.
pub fn validate_hermitian_psd(a: &DMatrix<Complex64>) -> Result<()> {
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - a[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    if asym > MATRIX_TOLERANCE * scale {
        return Err(Error::NotHermitian(asym));
    }
    let eig = a.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -MATRIX_TOLERANCE * scale {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(())
}

/// Reference decay `T^{1-r}` for the order-`r` joint cumulant of functionals.
pub fn cumulant_order_bound(r: u32, half_window: usize) -> Result<f64> {
    if r < 3 {
        return Err(invalid("r", format!("cumulant order must be at least 3, got {r}")));
    }
    if half_window == 0 {
        return Err(invalid("T", "half-window must be at least 1"));
    }
    Ok((half_window as f64).powi(1 - r as i32))
}

/// `√T (E J_{k,T}(φ) - k! ∫ φ f^k)`, real part.
pub fn bias_gap(limit: &LimitMean, half_window: usize, oracle_mean: f64) -> f64 {
    (half_window as f64).sqrt() * (oracle_mean - limit.value.re)
}

/// Integrability exponent in `[1, ∞]`.
pub type Exponent = f64;

fn reciprocal(p: Exponent) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "which", rename_all = "snake_case")]
pub enum ExponentCondition {
    /// `1/q + k/p = 1`
    Thm2Mean { p: Exponent, q: Exponent, k: u32 },
    /// `1/q + (k+l)/2 · 1/p = 1/2`
    Thm2Cov { p: Exponent, q: Exponent, k: u32, l: u32 },
    /// `1/q + k/p = 1/2`
    Thm2CumEqual { p: Exponent, q: Exponent, k: u32 },
    /// `1/q + (k₁+…+k_r)/r · 1/p = 1/2`
    Thm2CumMixed { p: Exponent, q: Exponent, ks: Vec<u32> },
    /// `1/q + k/p = 1/2`
    Thm4Clt { p: Exponent, q: Exponent, k: u32 },
    /// `1/q + min{k_i}/p = 1/2`
    Thm6Clt { p: Exponent, q: Exponent, ks: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentCheck {
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub diagnostic: String,
}

const EXPONENT_TOLERANCE: f64 = 1e-12;

pub fn check_exponents(cond: &ExponentCondition) -> Result<ExponentCheck> {
    use ExponentCondition::*;
    let (p, q) = match cond {
        Thm2Mean { p, q, .. }
        | Thm2Cov { p, q, .. }
        | Thm2CumEqual { p, q, .. }
        | Thm2CumMixed { p, q, .. }
        | Thm4Clt { p, q, .. }
        | Thm6Clt { p, q, .. } => (*p, *q),
    };
    for (name, v) in [("p", p), ("q", q)] {
        if v.is_nan() || v < 1.0 {
            return Err(invalid(
                if name == "p" { "p" } else { "q" },
                format!("exponent must lie in [1, ∞], got {v}"),
            ));
        }
    }
    let (ip, iq) = (reciprocal(p), reciprocal(q));
    let (lhs, rhs, relation) = match cond {
        Thm2Mean { k, .. } => (iq + f64::from(*k) * ip, 1.0, "1/q + k/p = 1"),
        Thm2Cov { k, l, .. } => (
            iq + f64::from(k + l) / 2.0 * ip,
            0.5,
            "1/q + (k+l)/2 · 1/p = 1/2",
        ),
        Thm2CumEqual { k, .. } | Thm4Clt { k, .. } => {
            (iq + f64::from(*k) * ip, 0.5, "1/q + k/p = 1/2")
        }
        Thm2CumMixed { ks, .. } => {
            if ks.len() < 3 {
                return Err(invalid("ks", "mixed cumulant condition needs r ≥ 3 powers"));
            }
            let mean = ks.iter().map(|&k| f64::from(k)).sum::<f64>() / ks.len() as f64;
            (iq + mean * ip, 0.5, "1/q + (k₁+…+k_r)/r · 1/p = 1/2")
        }
        Thm6Clt { ks, .. } => {
            let min = ks
                .iter()
                .copied()
                .min()
                .ok_or_else(|| invalid("ks", "need at least one power"))?;
            (iq + f64::from(min) * ip, 0.5, "1/q + min{k_i}/p = 1/2")
        }
    };
    let satisfied = (lhs - rhs).abs() <= EXPONENT_TOLERANCE;
    let diagnostic = if satisfied {
        format!("{relation} holds (p = {p}, q = {q})")
    } else {
        format!("{relation} fails: left side {lhs} ≠ {rhs} (p = {p}, q = {q})")
    };
    Ok(ExponentCheck {
        satisfied,
        lhs,
        rhs,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Innovations;
    use std::f64::consts::PI;

    fn white() -> SpectralModel {
        SpectralModel::white(1.0).unwrap()
    }

    fn ar() -> SpectralModel {
        SpectralModel::ar1(1.0, 0.5).unwrap()
    }

    #[test]
    fn limit_mean_examples() {
        let one = WeightFunction::one();
        assert!((limit_mean(&white(), &one, 1, 1024).unwrap().value.re - 1.0).abs() < 1e-14);
        assert!((limit_mean(&white(), &one, 2, 1024).unwrap().value.re - 1.0 / PI).abs() < 1e-14);
        assert!((limit_mean(&ar(), &one, 1, 1024).unwrap().value.re - 4.0 / 3.0).abs() < 1e-12);
        assert!(limit_mean(&ar(), &one, 0, 1024).is_err());
    }

    #[test]
    fn limit_mean_refinement_stable() {
        for k in 1..=3 {
            let a = limit_mean(&ar(), &WeightFunction::cosine(1), k, 512).unwrap().value;
            let b = limit_mean(&ar(), &WeightFunction::cosine(1), k, 4096).unwrap().value;
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn limit_mean_nonnegative_and_linear() {
        let band = WeightFunction::band(0.2, 1.0).unwrap();
        let cos = WeightFunction::cosine(2);
        for k in 1..=3 {
            assert!(limit_mean(&ar(), &band, k, 2048).unwrap().value.re >= 0.0);
            let (a, b) = (Complex64::new(2.0, 0.0), Complex64::new(0.0, -1.0));
            let combo = WeightFunction::linear_combination(a, &band, b, &cos);
            let lhs = limit_mean(&ar(), &combo, k, 2048).unwrap().value;
            let rhs = a * limit_mean(&ar(), &band, k, 2048).unwrap().value
                + b * limit_mean(&ar(), &cos, k, 2048).unwrap().value;
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn limit_mean_power_shift_identity() {
        // limit_mean(k, φ·f^m) = k!/(k+m)! · limit_mean(k+m, φ)
        let model = ar();
        let phi = WeightFunction::cosine(1);
        for (k, m) in [(1u32, 1u32), (1, 2), (2, 1)] {
            let inner = model.clone();
            let base = phi.clone();
            let weighted = WeightFunction::custom("phi*f^m", move |l| {
                base.eval(l) * inner.spectral_density(l).powi(m as i32)
            });
            let lhs = limit_mean(&model, &weighted, k, 4096).unwrap().value;
            let rhs = limit_mean(&model, &phi, k + m, 4096).unwrap().value * factorial(k)
                / factorial(k + m);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn white_noise_variance_limit() {
        let one = WeightFunction::one();
        let q = Quadrature::default();
        let rect = limit_covariance(&white(), &one, 1, &one, 1, &Taper::rectangular(), &q).unwrap();
        assert!((rect.total.re - 1.0).abs() < 1e-12);
        assert_eq!(rect.trispectrum_part, Complex64::new(0.0, 0.0));
        let cos = limit_covariance(&white(), &one, 1, &one, 1, &Taper::cosine(), &q).unwrap();
        assert!((cos.total.re - 1.5).abs() < 1e-8);
    }

    #[test]
    fn iid_trispectrum_part_is_e_h_kappa4() {
        let one = WeightFunction::one();
        let q = Quadrature::default();
        for (law, k4) in [(Innovations::Exponential, 6.0), (Innovations::TwoPoint, -2.0)] {
            let m = white().with_innovations(law);
            for h in [Taper::rectangular(), Taper::cosine()] {
                let c = limit_covariance(&m, &one, 1, &one, 1, &h, &q).unwrap();
                let e = h.e_of_h(q.taper).unwrap();
                assert!((c.trispectrum_part.re - e * k4).abs() < 1e-10);
                assert!((c.gaussian_part.re - 2.0 * e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hermitian_symmetry_of_limit_covariance() {
        let q = Quadrature {
            single: 1024,
            double: 65,
            ..Quadrature::default()
        };
        let phis = [
            WeightFunction::one(),
            WeightFunction::cosine(1),
            WeightFunction::custom("e^{iλ}", |l| Complex64::from_polar(1.0, l)),
        ];
        let m = ar().with_innovations(Innovations::Exponential);
        for p1 in &phis {
            for p2 in &phis {
                for (k, l) in [(1, 1), (1, 2), (2, 3)] {
                    let a = limit_covariance(&m, p1, k, p2, l, &Taper::cosine(), &q).unwrap();
                    let b = limit_covariance(&m, p2, l, p1, k, &Taper::cosine(), &q).unwrap();
                    assert!((a.total - b.total.conj()).norm() < 1e-10 * (1.0 + a.total.norm()));
                }
            }
        }
    }

    #[test]
    fn taper_enters_linearly_through_e_h() {
        let q = Quadrature {
            double: 65,
            ..Quadrature::default()
        };
        let m = ar().with_innovations(Innovations::TwoPoint);
        let phi = WeightFunction::cosine(1);
        let base = limit_covariance(&m, &phi, 2, &phi, 1, &Taper::rectangular(), &q).unwrap();
        for h in [Taper::cosine(), Taper::bartlett()] {
            let c = limit_covariance(&m, &phi, 2, &phi, 1, &h, &q).unwrap();
            let ratio = c.e_h / base.e_h;
            assert!((c.total - base.total * ratio).norm() < 1e-10 * base.total.norm());
        }
    }

    #[test]
    fn gaussian_reduction_iff_gaussian_family() {
        let q = Quadrature {
            double: 33,
            ..Quadrature::default()
        };
        let phi = WeightFunction::one();
        for law in [Innovations::Gaussian, Innovations::Exponential, Innovations::TwoPoint] {
            let m = ar().with_innovations(law);
            let c = limit_covariance(&m, &phi, 1, &phi, 2, &Taper::cosine(), &q).unwrap();
            assert_eq!(c.trispectrum_part == Complex64::new(0.0, 0.0), m.is_gaussian());
        }
    }

    #[test]
    fn variance_limit_is_real_nonnegative() {
        let q = Quadrature {
            double: 65,
            ..Quadrature::default()
        };
        let m = ar().with_innovations(Innovations::Exponential);
        for phi in [WeightFunction::one(), WeightFunction::band(0.5, 2.0).unwrap()] {
            for k in 1..=3 {
                let c = limit_covariance(&m, &phi, k, &phi, k, &Taper::bartlett(), &q).unwrap();
                assert!(c.total.re >= 0.0 && c.total.im.abs() < 1e-12 * c.total.re);
            }
        }
    }

    #[test]
    fn clt_matrix_properties() {
        let q = Quadrature {
            double: 65,
            ..Quadrature::default()
        };
        let phis = [WeightFunction::one(), WeightFunction::one(), WeightFunction::cosine(1)];
        let ks = [1, 2, 2];
        let h = Taper::cosine();

        let g = clt_covariance_matrix(&ar(), &phis, &ks, &h, &q).unwrap();
        assert_eq!(g.full, g.gaussian);

        let single = clt_covariance_matrix(&ar(), &phis[..1], &ks[..1], &h, &q).unwrap();
        let direct = limit_covariance(&ar(), &phis[0], 1, &phis[0], 1, &h, &q).unwrap();
        assert_eq!(single.full[(0, 0)], direct.total);

        let ng = ar().with_innovations(Innovations::Exponential);
        let c = clt_covariance_matrix(&ng, &phis, &ks, &h, &q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = limit_covariance(&ng, &phis[i], ks[i], &phis[j], ks[j], &h, &q).unwrap();
                assert!((c.full[(i, j)] - e.total).norm() < 1e-12 * (1.0 + e.total.norm()));
            }
        }
        assert!(clt_covariance_matrix(&ar(), &phis, &ks[..2], &h, &q).is_err());
    }

    #[test]
    fn equal_power_specialization() {
        // With k_i = k_j = k the mixed-power prefactor k_i k_i! k_j k_j! is (k k!)².
        let q = Quadrature::default();
        let phis = [WeightFunction::one(), WeightFunction::cosine(1)];
        let c = clt_covariance_matrix(&ar(), &phis, &[2, 2], &Taper::cosine(), &q).unwrap();
        let e = Taper::cosine().e_of_h(q.taper).unwrap();
        let grid = FrequencyGrid::new(q.single).unwrap();
        let integral: f64 = grid
            .points()
            .iter()
            .map(|&l| 2.0 * ar().spectral_density(l).powi(4))
            .sum::<f64>()
            * grid.weight();
        let expect = 2.0 * PI * e * (2.0 * 2.0f64).powi(2) * integral;
        assert!((c.full[(0, 0)].re - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn psd_validation_rejects_bad_matrices() {
        let bad = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(validate_hermitian_psd(&bad), Err(Error::NotPositiveSemidefinite(_))));
        let skew = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.5),
                Complex64::new(0.0, 0.5),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(validate_hermitian_psd(&skew), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn cumulant_bound_examples() {
        assert!((cumulant_order_bound(3, 100).unwrap() - 1e-4).abs() < 1e-18);
        assert!((cumulant_order_bound(4, 10).unwrap() - 1e-3).abs() < 1e-18);
        for r in 3..6 {
            let a = cumulant_order_bound(r, 50).unwrap();
            let b = cumulant_order_bound(r, 100).unwrap();
            assert!((a / b - 2f64.powi(r as i32 - 1)).abs() < 1e-9);
        }
        assert!(cumulant_order_bound(2, 10).is_err());
    }

    #[test]
    fn exponent_examples() {
        use ExponentCondition::*;
        let inf = f64::INFINITY;
        assert!(check_exponents(&Thm2Mean { p: inf, q: 1.0, k: 2 }).unwrap().satisfied);
        assert!(check_exponents(&Thm4Clt { p: 4.0, q: 4.0, k: 1 }).unwrap().satisfied);
        assert!(check_exponents(&Thm2Cov { p: 4.0, q: 4.0, k: 1, l: 1 }).unwrap().satisfied);
        assert!(check_exponents(&Thm2CumEqual { p: 4.0, q: 4.0, k: 1 }).unwrap().satisfied);
        assert!(check_exponents(&Thm2CumMixed { p: 8.0, q: 4.0, ks: vec![1, 2, 3] })
            .unwrap()
            .satisfied);
        assert!(check_exponents(&Thm6Clt { p: 4.0, q: 4.0, ks: vec![3, 1, 2] })
            .unwrap()
            .satisfied);

        let fail = check_exponents(&Thm4Clt { p: 2.0, q: 2.0, k: 1 }).unwrap();
        assert!(!fail.satisfied);
        assert!(fail.diagnostic.contains("1/q + k/p = 1/2"));
        assert!(check_exponents(&Thm2Mean { p: 0.5, q: 1.0, k: 1 }).is_err());
        assert!(check_exponents(&Thm2CumMixed { p: 2.0, q: 2.0, ks: vec![1, 2] }).is_err());
    }

    #[test]
    fn bias_gap_white_noise_k1_is_zero() {
        let lm = limit_mean(&white(), &WeightFunction::one(), 1, 1024).unwrap();
        assert!(bias_gap(&lm, 64, 1.0).abs() < 1e-12);
        assert!((bias_gap(&lm, 16, 1.5) - 2.0).abs() < 1e-12);
    }
}
