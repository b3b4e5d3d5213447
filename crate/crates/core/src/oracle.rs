//! Exact finite-sample moments of `J_{k,T}(φ)` for Gaussian models.
//!
//! For a Gaussian process the finite Fourier transforms are jointly complex
//! Gaussian, so by the Isserlis/Wick rule
//!
//! ```text
//! E I_T^k(λ) = (2π H_{2,T}(0))^{-k} Σ_{pairings of 1..2k} Π cov(d_T(λ_i), d_T(λ_j))
//! ```
//!
//! with `λ_i = λ` at odd positions and `-λ` at even positions. Covariances of
//! powers use the indecomposable pairings of the two-row table (pairings
//! that link the rows); pairings that stay within rows reproduce the product
//! of means and drop out.
//!
//! For non-Gaussian linear processes only `J_{1,T}`, a quadratic form in the
//! data, gets an exact treatment: its covariance is enumerated directly from
//! fourth moments in the time domain (`O(n⁴)`, so tiny `T` only).
//!
//! Indices in [`PairPartition`] are zero-based.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::functionals::{FunctionalEstimate, Provenance, WeightFunction};
use crate::models::SpectralModel;
use crate::periodogram::FrequencyGrid;
use crate::tapers::{discrete_norm, Taper};

/// Largest `k` for [`enumerate_pair_partitions`] (10395 pairings).
pub const MAX_PAIRING_HALF: usize = 6;
/// Largest `k` for [`exact_mean_j`].
pub const MAX_MEAN_POWER: u32 = 4;
/// Largest `k + l` for [`exact_cov_j`].
pub const MAX_COV_POWER: u32 = 4;
/// Largest half-window for the time-domain fourth-moment enumeration.
pub const MAX_BRUTE_FORCE_HALF_WINDOW: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairPartition {
    pub pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Number of elements covered.
    pub fn size(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn is_valid(&self) -> bool {
        let n = self.size();
        let mut seen = vec![false; n];
        for &(a, b) in &self.pairs {
            for x in [a, b] {
                if x >= n || seen[x] {
                    return false;
                }
                seen[x] = true;
            }
        }
        true
    }
}

fn pairings_of(elements: &[usize], current: &mut Vec<(usize, usize)>, out: &mut Vec<PairPartition>) {
    let Some((&first, rest)) = elements.split_first() else {
        out.push(PairPartition {
            pairs: current.clone(),
        });
        return;
    };
    for (i, &partner) in rest.iter().enumerate() {
        let remaining: Vec<usize> = rest
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &x)| x)
            .collect();
        current.push((first, partner));
        pairings_of(&remaining, current, out);
        current.pop();
    }
}

/// All `(2k-1)!!` pairings of `{0, ..., 2k-1}`, each pair `(a, b)` with
/// `a < b`, pairs sorted by first element, partitions in lexicographic order.
pub fn enumerate_pair_partitions(k: usize) -> Result<Vec<PairPartition>> {
    if k > MAX_PAIRING_HALF {
        return Err(Error::SizeGuard {
            what: format!("pairings of {} elements", 2 * k),
            limit: MAX_PAIRING_HALF,
        });
    }
    let elements: Vec<usize> = (0..2 * k).collect();
    let mut out = Vec::new();
    pairings_of(&elements, &mut Vec::with_capacity(k), &mut out);
    Ok(out)
}

/// Index table with rows of the given lengths, laid out row after row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    row_lens: Vec<usize>,
}

impl Table {
    pub fn new(row_lens: Vec<usize>) -> Self {
        Self { row_lens }
    }

    /// Rows of lengths `2k` and `2l`.
    pub fn two_row(k: usize, l: usize) -> Self {
        Self::new(vec![2 * k, 2 * l])
    }

    pub fn size(&self) -> usize {
        self.row_lens.iter().sum()
    }

    pub fn row_of(&self, index: usize) -> usize {
        let mut acc = 0;
        for (r, len) in self.row_lens.iter().enumerate() {
            acc += len;
            if index < acc {
                return r;
            }
        }
        panic!("index {index} outside table of size {acc}");
    }

    /// A partition is indecomposable when its blocks, viewed as hyperedges
    /// over rows, connect every row.
    pub fn is_indecomposable(&self, blocks: &[Vec<usize>]) -> bool {
        let rows = self.row_lens.len();
        if rows == 0 {
            return true;
        }
        let mut adjacency = vec![vec![false; rows]; rows];
        for block in blocks {
            let touched: Vec<usize> = block.iter().map(|&i| self.row_of(i)).collect();
            for &a in &touched {
                for &b in &touched {
                    adjacency[a][b] = true;
                }
            }
        }
        let mut seen = vec![false; rows];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(r) = stack.pop() {
            for s in 0..rows {
                if adjacency[r][s] && !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_indecomposable_pairing(&self, p: &PairPartition) -> bool {
        let blocks: Vec<Vec<usize>> = p.pairs.iter().map(|&(a, b)| vec![a, b]).collect();
        self.is_indecomposable(&blocks)
    }
}

fn split_pairings(k: usize, l: usize) -> Result<(Vec<PairPartition>, Vec<PairPartition>)> {
    if k + l > MAX_PAIRING_HALF {
        return Err(Error::SizeGuard {
            what: format!("two-row table with k + l = {}", k + l),
            limit: MAX_PAIRING_HALF,
        });
    }
    let table = Table::two_row(k, l);
    Ok(enumerate_pair_partitions(k + l)?
        .into_iter()
        .partition(|p| table.is_indecomposable_pairing(p)))
}

/// Pairings of the `(2k, 2l)` two-row table that connect the rows.
pub fn indecomposable_pairings(k: usize, l: usize) -> Result<Vec<PairPartition>> {
    Ok(split_pairings(k, l)?.0)
}

/// Pairings of the `(2k, 2l)` table that stay within rows.
pub fn decomposable_pairings(k: usize, l: usize) -> Result<Vec<PairPartition>> {
    Ok(split_pairings(k, l)?.1)
}

/// Second-order cumulants of the tapered Fourier transform of a model,
/// `cum(d_T(λ), d_T(μ)) = Σ_{s,t} h(s/T) h(t/T) e^{-iλs-iμt} c(s-t)`.
#[derive(Debug, Clone)]
pub struct DftCovariance {
    half_window: usize,
    taper: Vec<f64>,
    /// `c(0), ..., c(2T)`
    acov: Vec<f64>,
    /// `Σ_t h_{t+u} h_t c(u)` for `u = -2T..2T`, index `u + 2T`
    opposite: Vec<f64>,
    /// `Σ_{s+t=m} h_s h_t c(s-t)` for `m = -2T..2T`, index `m + 2T`
    same: Vec<f64>,
    h2: f64,
}

impl DftCovariance {
    pub fn new(model: &SpectralModel, taper: &Taper, half_window: usize) -> Result<Self> {
        let h = taper.series(half_window)?;
        let n = h.len();
        let acov = model.autocovariances(n);
        let c = |lag: i64| acov[lag.unsigned_abs() as usize];
        let span = 2 * n - 1;
        let mut opposite = vec![0.0; span];
        let mut same = vec![0.0; span];
        for s in 0..n {
            for t in 0..n {
                let v = h[s] * h[t] * c(s as i64 - t as i64);
                // s - t + (n - 1) and s + t both range over 0..2n-1
                opposite[s + n - 1 - t] += v;
                same[s + t] += v;
            }
        }
        let h2 = h.iter().map(|x| x * x).sum();
        Ok(Self {
            half_window,
            taper: h,
            acov,
            opposite,
            same,
            h2,
        })
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    /// `H_{2,T}(0)`.
    pub fn h2(&self) -> f64 {
        self.h2
    }

    fn lag_sum(values: &[f64], lambda: f64) -> Complex64 {
        let offset = (values.len() / 2) as i64;
        values
            .iter()
            .enumerate()
            .map(|(i, v)| Complex64::from_polar(*v, -lambda * (i as i64 - offset) as f64))
            .sum()
    }

    /// `cum(d_T(λ), d_T(-λ)) = 2π H_{2,T}(0) E I_T(λ)`, real and nonnegative.
    pub fn opposite(&self, lambda: f64) -> f64 {
        Self::lag_sum(&self.opposite, lambda).re
    }

    /// `cum(d_T(λ), d_T(λ))`.
    pub fn same(&self, lambda: f64) -> Complex64 {
        Self::lag_sum(&self.same, lambda)
    }

    /// `cum(d_T(λ), d_T(μ))` by the full double sum.
    pub fn cov(&self, lambda: f64, mu: f64) -> Complex64 {
        let n = self.taper.len();
        let half = self.half_window as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for s in 0..n {
            let ts = s as i64 - half;
            for t in 0..n {
                let tt = t as i64 - half;
                let v = self.taper[s]
                    * self.taper[t]
                    * self.acov[(s as i64 - t as i64).unsigned_abs() as usize];
                acc += Complex64::from_polar(v, -lambda * ts as f64 - mu * tt as f64);
            }
        }
        acc
    }

    /// `M[a][b] = cum(d_T(λ_a), d_T(λ_b))` for every pair of grid nodes,
    /// row-major.
    pub fn grid_matrix(&self, grid: &FrequencyGrid) -> Vec<Complex64> {
        let n = self.taper.len();
        let half = self.half_window as i64;
        let m = grid.len();
        // A[t][a] = h_t e^{-iλ_a t}
        let a: Vec<Complex64> = (0..n)
            .flat_map(|t| {
                let tt = (t as i64 - half) as f64;
                let h = self.taper[t];
                grid.points()
                    .iter()
                    .map(move |&l| Complex64::from_polar(h, -l * tt))
            })
            .collect();
        // B = C A
        let b: Vec<Complex64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|s| {
                let mut row = vec![Complex64::new(0.0, 0.0); m];
                for t in 0..n {
                    let c = self.acov[(s as i64 - t as i64).unsigned_abs() as usize];
                    if c == 0.0 {
                        continue;
                    }
                    for (r, x) in row.iter_mut().zip(&a[t * m..(t + 1) * m]) {
                        *r += c * x;
                    }
                }
                row
            })
            .collect();
        // M = Aᵀ B
        (0..m)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut row = vec![Complex64::new(0.0, 0.0); m];
                for s in 0..n {
                    let x = a[s * m + i];
                    for (r, y) in row.iter_mut().zip(&b[s * m..(s + 1) * m]) {
                        *r += x * y;
                    }
                }
                row
            })
            .collect()
    }
}

fn require_gaussian(model: &SpectralModel) -> Result<()> {
    if !model.is_gaussian() {
        return Err(Error::NonGaussian(model.family().to_string()));
    }
    Ok(())
}

/// Sign of the frequency carried by table position `i`: `+` at even
/// zero-based positions, `-` at odd ones.
fn position_sign(i: usize) -> bool {
    i.is_multiple_of(2)
}

/// `E I_T^k(λ)` at every grid node.
pub fn exact_mean_power(
    model: &SpectralModel,
    taper: &Taper,
    half_window: usize,
    k: u32,
    grid: &FrequencyGrid,
) -> Result<Vec<f64>> {
    require_gaussian(model)?;
    if k == 0 || k > MAX_MEAN_POWER {
        return Err(Error::SizeGuard {
            what: format!("mean oracle power k = {k}"),
            limit: MAX_MEAN_POWER as usize,
        });
    }
    let pairings = enumerate_pair_partitions(k as usize)?;
    // For each pairing, how many (+,+), (-,-) and (+,-) pairs it contains.
    let shapes: Vec<(i32, i32, i32)> = pairings
        .iter()
        .map(|p| {
            p.pairs.iter().fold((0, 0, 0), |(pp, mm, pm), &(a, b)| {
                match (position_sign(a), position_sign(b)) {
                    (true, true) => (pp + 1, mm, pm),
                    (false, false) => (pp, mm + 1, pm),
                    _ => (pp, mm, pm + 1),
                }
            })
        })
        .collect();
    let cov = DftCovariance::new(model, taper, half_window)?;
    if cov.h2() == 0.0 {
        return Err(Error::DegenerateTaper(format!("H_2,T(0) = 0 for `{}`", taper.name())));
    }
    let norm = (2.0 * PI * cov.h2()).powi(k as i32);
    Ok(grid
        .points()
        .par_iter()
        .map(|&l| {
            let same = cov.same(l);
            let same_neg = same.conj();
            let opp = Complex64::new(cov.opposite(l), 0.0);
            let total: Complex64 = shapes
                .iter()
                .map(|&(pp, mm, pm)| same.powi(pp) * same_neg.powi(mm) * opp.powi(pm))
                .sum();
            total.re / norm
        })
        .collect())
}

/// Exact `E J_{k,T}(φ)` on `grid` for a Gaussian model.
pub fn exact_mean_j(
    model: &SpectralModel,
    taper: &Taper,
    half_window: usize,
    phi: &WeightFunction,
    k: u32,
    grid: &FrequencyGrid,
) -> Result<FunctionalEstimate> {
    let mean_power = exact_mean_power(model, taper, half_window, k, grid)?;
    let value: Complex64 = phi
        .on_grid(grid)
        .iter()
        .zip(&mean_power)
        .map(|(p, m)| p * m)
        .sum::<Complex64>()
        * grid.weight();
    Ok(FunctionalEstimate {
        value,
        k,
        half_window,
        grid_n: grid.len(),
        provenance: Provenance::Oracle,
        continuity_warning: !phi.is_continuous(),
    })
}

/// Exact `cov(J_{k,T}(φ₁), J_{l,T}(φ₂)) = E[(J₁ - EJ₁) conj(J₂ - EJ₂)]` on
/// `grid` for a Gaussian model.
#[allow(clippy::too_many_arguments)]
pub fn exact_cov_j(
    model: &SpectralModel,
    taper: &Taper,
    half_window: usize,
    phi1: &WeightFunction,
    k: u32,
    phi2: &WeightFunction,
    l: u32,
    grid: &FrequencyGrid,
) -> Result<Complex64> {
    let cov = DftCovariance::new(model, taper, half_window)?;
    let matrix = cov.grid_matrix(grid);
    exact_cov_j_with(&cov, &matrix, phi1, k, phi2, l, grid)
}

/// [`exact_cov_j`] reusing a precomputed [`DftCovariance::grid_matrix`].
pub fn exact_cov_j_with(
    cov: &DftCovariance,
    matrix: &[Complex64],
    phi1: &WeightFunction,
    k: u32,
    phi2: &WeightFunction,
    l: u32,
    grid: &FrequencyGrid,
) -> Result<Complex64> {
    if k == 0 || l == 0 || k + l > MAX_COV_POWER {
        return Err(Error::SizeGuard {
            what: format!("covariance oracle powers k = {k}, l = {l}"),
            limit: MAX_COV_POWER as usize,
        });
    }
    let m = grid.len();
    if matrix.len() != m * m {
        return Err(invalid("matrix", "grid matrix does not match grid"));
    }
    let row1 = 2 * k as usize;
    let pairings = indecomposable_pairings(k as usize, l as usize)?;
    // Each table position maps to (row, sign); the node index follows from
    // the (α, β) grid pair at evaluation time.
    let slots: Vec<Vec<(bool, bool, bool, bool)>> = pairings
        .iter()
        .map(|p| {
            p.pairs
                .iter()
                .map(|&(i, j)| (i < row1, position_sign(i), j < row1, position_sign(j)))
                .collect()
        })
        .collect();
    let w1 = phi1.on_grid(grid);
    let w2: Vec<Complex64> = phi2.on_grid(grid).iter().map(|z| z.conj()).collect();
    let norm = (2.0 * PI * cov.h2()).powi((k + l) as i32);
    let total: Complex64 = (0..m)
        .into_par_iter()
        .map(|a| {
            let a_neg = grid.negated_index(a);
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, &wb) in w2.iter().enumerate() {
                let b_neg = grid.negated_index(b);
                let node = |first_row: bool, plus: bool| match (first_row, plus) {
                    (true, true) => a,
                    (true, false) => a_neg,
                    (false, true) => b,
                    (false, false) => b_neg,
                };
                let mut sum = Complex64::new(0.0, 0.0);
                for pairing in &slots {
                    let mut prod = Complex64::new(1.0, 0.0);
                    for &(r1, s1, r2, s2) in pairing {
                        prod *= matrix[node(r1, s1) * m + node(r2, s2)];
                    }
                    sum += prod;
                }
                acc += w1[a] * wb * sum;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total * grid.weight() * grid.weight() / norm)
}

/// `Φ_{k,T}(λ₁..λ_{k-1}) = (2π)^{1-k} H_{k,T}(0)^{-1} Π_j H_{1,T}(λ_j) H_{1,T}(-Σλ_j)`.
pub fn fejer_kernel(taper: &Taper, half_window: usize, k: u32, lambdas: &[f64]) -> Result<Complex64> {
    if k < 2 || lambdas.len() != (k - 1) as usize {
        return Err(invalid(
            "lambdas",
            format!("kernel of order k = {k} takes k - 1 ≥ 1 frequencies, got {}", lambdas.len()),
        ));
    }
    let series = taper.series(half_window)?;
    let hk: f64 = series.iter().map(|h| h.powi(k as i32)).sum();
    if hk == 0.0 {
        return Err(Error::DegenerateTaper(format!(
            "H_{k},T(0) = 0 for taper `{}`",
            taper.name()
        )));
    }
    let sum: f64 = lambdas.iter().sum();
    let prod = lambdas
        .iter()
        .map(|&l| discrete_norm(&series, 1, l))
        .fold(discrete_norm(&series, 1, -sum), |acc, z| acc * z);
    Ok(prod / ((2.0 * PI).powi(k as i32 - 1) * hk))
}

/// Real `n × n` quadratic-form matrix `A` (stored complex, row-major) with
/// `J_{1,T}(φ) = Σ_{s,t} A[s][t] Y(s) Y(t)` on `grid`.
pub fn quadratic_form(
    taper: &Taper,
    half_window: usize,
    phi: &WeightFunction,
    grid: &FrequencyGrid,
) -> Result<Vec<Complex64>> {
    let h = taper.series(half_window)?;
    let n = h.len();
    let h2: f64 = h.iter().map(|x| x * x).sum();
    if h2 == 0.0 {
        return Err(Error::DegenerateTaper(format!("H_2,T(0) = 0 for `{}`", taper.name())));
    }
    let weights = phi.on_grid(grid);
    // kernel[u] = Σ_j w φ(λ_j) e^{-iλ_j u} for u = -(n-1)..n-1
    let kernel: Vec<Complex64> = (0..2 * n - 1)
        .map(|i| {
            let u = i as f64 - (n - 1) as f64;
            grid.points()
                .iter()
                .zip(&weights)
                .map(|(&l, p)| p * Complex64::from_polar(1.0, -l * u))
                .sum::<Complex64>()
                * grid.weight()
        })
        .collect();
    let scale = 1.0 / (2.0 * PI * h2);
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for s in 0..n {
        for t in 0..n {
            a[s * n + t] = scale * h[s] * h[t] * kernel[s + n - 1 - t];
        }
    }
    Ok(a)
}

/// Covariance of two quadratic forms split into the pairwise (Gaussian)
/// part and the fourth-cumulant part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentBreakdown {
    pub gaussian: Complex64,
    pub fourth_cumulant: Complex64,
    pub total: Complex64,
}

/// `cov(Yᵀ A Y, Yᵀ B Y)` for a linear process by direct enumeration of
/// `E[Y_s Y_t Y_u Y_v]` over all index quadruples.
///
/// `E[Y_s Y_t Y_u Y_v] = c(s-t)c(u-v) + c(s-u)c(t-v) + c(s-v)c(t-u)
/// + κ₄ Σ_m ψ_{s-m} ψ_{t-m} ψ_{u-m} ψ_{v-m}`.
pub fn fourth_moment_cov(
    model: &SpectralModel,
    half_window: usize,
    a: &[Complex64],
    b: &[Complex64],
) -> Result<FourthMomentBreakdown> {
    if half_window > MAX_BRUTE_FORCE_HALF_WINDOW {
        return Err(Error::SizeGuard {
            what: format!("fourth-moment enumeration at T = {half_window}"),
            limit: MAX_BRUTE_FORCE_HALF_WINDOW,
        });
    }
    let n = 2 * half_window + 1;
    if a.len() != n * n || b.len() != n * n {
        return Err(invalid("a", "quadratic form size does not match T"));
    }
    let acov = model.autocovariances(n);
    let c = |x: usize, y: usize| acov[x.abs_diff(y)];
    let (_, _, k4) = model.innovation_cumulants();
    let psi = model.psi_weights();
    // Innovation times m run from the earliest one that still reaches index 0
    // up to n - 1; offset by psi.len() - 1.
    let shift = psi.len() - 1;
    let weight = |s: usize, m: usize| -> f64 {
        // ψ_{s - (m - shift)}
        let lag = s + shift;
        if lag < m {
            0.0
        } else {
            psi.get(lag - m).copied().unwrap_or(0.0)
        }
    };
    let innovation_times = n + shift;
    let mut gaussian = Complex64::new(0.0, 0.0);
    let mut fourth = Complex64::new(0.0, 0.0);
    for s in 0..n {
        for t in 0..n {
            let ast = a[s * n + t];
            for u in 0..n {
                for v in 0..n {
                    let w = ast * b[u * n + v].conj();
                    if w == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    gaussian += w * (c(s, u) * c(t, v) + c(s, v) * c(t, u));
                    if k4 != 0.0 {
                        let mut cum = 0.0;
                        for m in 0..innovation_times {
                            cum += weight(s, m) * weight(t, m) * weight(u, m) * weight(v, m);
                        }
                        fourth += w * k4 * cum;
                    }
                }
            }
        }
    }
    Ok(FourthMomentBreakdown {
        gaussian,
        fourth_cumulant: fourth,
        total: gaussian + fourth,
    })
}

/// Exact `cov(J_{1,T}(φ₁), J_{1,T}(φ₂))` for a linear process at small `T`.
pub fn brute_force_cov_j1(
    model: &SpectralModel,
    taper: &Taper,
    half_window: usize,
    phi1: &WeightFunction,
    phi2: &WeightFunction,
    grid: &FrequencyGrid,
) -> Result<FourthMomentBreakdown> {
    let a = quadratic_form(taper, half_window, phi1, grid)?;
    let b = quadratic_form(taper, half_window, phi2, grid)?;
    fourth_moment_cov(model, half_window, &a, &b)
}
