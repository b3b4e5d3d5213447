//! Replicated simulation experiments for the mean, covariance and normality limits.
//!
//! Every experiment simulates `R` independent paths per half-window `T`,
//! computes the vector `(J_{k_i,T}(φ_i))_i` for each path, and compares
//! empirical moments against the exact Gaussian oracle and the limit
//! formulas. Replicate `r` at half-window `T` always uses the seed
//! [`replicate_seed`]`(base_seed, T, r)` and all reductions run in replicate
//! order, so reports do not depend on the number of worker threads.
//!
//! Covariances are scaled by the half-window `T`, not by `2T + 1`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    bias_gap, clt_covariance_matrix, cumulant_order_bound, limit_mean, CltCovariance, LimitMean,
    Quadrature,
};
use crate::error::{Error, Result};
use crate::functionals::{integrate_power, WeightFunction};
use crate::models::{ModelSpec, SpectralModel};
use crate::oracle::{exact_cov_j_with, exact_mean_j, DftCovariance, MAX_COV_POWER, MAX_MEAN_POWER};
use crate::periodogram::{FrequencyGrid, PeriodogramEngine};
use crate::tapers::Taper;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "TAPERSPEC_THREADS";

/// Smallest accepted replicate count.
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Convergence,
    Normality,
    F4Discrimination,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::Normality => "normality",
            Self::F4Discrimination => "f4_discrimination",
        }
    }
}

/// Where standardized components are centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Exact `E J` when the oracle applies, otherwise the sample mean.
    #[default]
    Oracle,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalityThresholds {
    pub skew_max: f64,
    pub exkurt_max: f64,
}

impl Default for NormalityThresholds {
    fn default() -> Self {
        Self {
            skew_max: 0.15,
            exkurt_max: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative tolerance of `T·cov` against the limit, scaled by
    /// `sqrt(limit_ii · limit_jj)`.
    pub cov_rel: f64,
    /// Allowed distance, in standard errors, between Monte Carlo and exact
    /// moments.
    pub oracle_se: f64,
    /// Absolute tolerance on correlations.
    pub correlation: f64,
    /// Largest accepted log-log decay slope of standardized cumulants.
    pub slope_max: f64,
    /// Standard errors by which the full formula must beat the Gaussian part.
    pub discrimination_se: f64,
    /// Slack, in standard errors, for monotone cumulant decay.
    pub monotone_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cov_rel: 0.1,
            oracle_se: 4.0,
            correlation: 0.1,
            slope_max: -0.3,
            discrimination_se: 3.0,
            monotone_se: 2.0,
        }
    }
}

fn default_replicates() -> usize {
    1000
}

fn default_taper() -> String {
    "rectangular".to_string()
}

fn default_oracle_cov_max() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentKind,
    pub model: ModelSpec,
    #[serde(default = "default_taper")]
    pub taper: String,
    /// Weight functions in [`WeightFunction::parse`] syntax.
    pub phis: Vec<String>,
    pub ks: Vec<u32>,
    #[serde(rename = "T_sweep")]
    pub t_sweep: Vec<usize>,
    #[serde(rename = "R", default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Grid size for every `T`; `2(2T+1)` when absent.
    #[serde(rename = "grid_N", default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub normality_thresholds: NormalityThresholds,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub centering: Centering,
    /// Largest `T` for which the exact covariance oracle is evaluated.
    #[serde(default = "default_oracle_cov_max")]
    pub oracle_cov_max_half_window: usize,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the model and functionals.
    pub fn new(
        experiment: ExperimentKind,
        model: ModelSpec,
        taper: &str,
        phis: &[&str],
        ks: &[u32],
        t_sweep: &[usize],
        replicates: usize,
    ) -> Self {
        Self {
            experiment,
            model,
            taper: taper.to_string(),
            phis: phis.iter().map(|s| s.to_string()).collect(),
            ks: ks.to_vec(),
            t_sweep: t_sweep.to_vec(),
            replicates,
            base_seed: 0,
            grid_n: None,
            normality_thresholds: NormalityThresholds::default(),
            tolerances: Tolerances::default(),
            centering: Centering::default(),
            oracle_cov_max_half_window: default_oracle_cov_max(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("`{field}`: {why}")));
        if self.replicates < MIN_REPLICATES {
            return bad("R", format!("R ≥ {MIN_REPLICATES} required, got {}", self.replicates));
        }
        if self.t_sweep.is_empty() {
            return bad("T_sweep", "must list at least one half-window".into());
        }
        if self.t_sweep[0] == 0 {
            return bad("T_sweep", "half-windows must be at least 1".into());
        }
        if self.t_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return bad("T_sweep", "must be strictly increasing".into());
        }
        if self.phis.is_empty() {
            return bad("phis", "must list at least one weight function".into());
        }
        if self.phis.len() != self.ks.len() {
            return bad(
                "ks",
                format!("{} powers for {} weight functions", self.ks.len(), self.phis.len()),
            );
        }
        if let Some(k) = self.ks.iter().find(|&&k| k == 0) {
            return bad("ks", format!("powers must be at least 1, got {k}"));
        }
        if let Some(n) = self.grid_n {
            if n < 2 {
                return bad("grid_N", format!("must be at least 2, got {n}"));
            }
        }
        let t = &self.normality_thresholds;
        if !(t.skew_max > 0.0 && t.exkurt_max > 0.0) {
            return bad("normality_thresholds", "thresholds must be positive".into());
        }
        self.model
            .build()
            .map_err(|e| Error::Config(format!("`model`: {e}")))?;
        Taper::from_name(&self.taper).map_err(|e| Error::Config(format!("`taper`: {e}")))?;
        for p in &self.phis {
            WeightFunction::parse(p).map_err(|e| Error::Config(format!("`phis`: {e}")))?;
        }
        Ok(())
    }

    pub fn grid_for(&self, half_window: usize) -> Result<FrequencyGrid> {
        match self.grid_n {
            Some(n) => FrequencyGrid::new(n),
            None => FrequencyGrid::default_for(half_window),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` at half-window `half_window`.
pub fn replicate_seed(base_seed: u64, half_window: usize, index: usize) -> u64 {
    let s = splitmix64(base_seed);
    let s = splitmix64(s ^ half_window as u64);
    splitmix64(s ^ index as u64)
}

/// Worker count from [`THREADS_ENV`]; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
    }
}

/// Unbiased cumulant estimates of orders 1 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KStatistics {
    pub n: usize,
    pub mean: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl KStatistics {
    pub fn new(x: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 4 {
            return Err(crate::error::invalid("x", "k-statistics need at least 4 values"));
        }
        let nf = n as f64;
        let mean = x.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in x {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        let k2 = nf / (nf - 1.0) * m2;
        let k3 = nf * nf / ((nf - 1.0) * (nf - 2.0)) * m3;
        let k4 = nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2)
            / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
        Ok(Self { n, mean, k2, k3, k4 })
    }

    pub fn skewness(&self) -> f64 {
        self.k3 / self.k2.powf(1.5)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        self.k4 / (self.k2 * self.k2)
    }
}

/// Least-squares slope of `ln|y|` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Per-`(T, component)` summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    pub half_window: usize,
    pub index: usize,
    pub k: u32,
    pub phi_id: String,
    pub grid_n: usize,
    pub replicates: usize,
    pub sample_mean: Complex64,
    pub mean_se: f64,
    pub oracle_mean: Option<Complex64>,
    pub limit_mean: Complex64,
    /// `√T (oracle_mean - limit_mean)`.
    pub bias_gap: Option<f64>,
    /// Centre used for the standardized component.
    pub center: Complex64,
    pub t_scaled_var: f64,
    pub limit_var: f64,
    /// Sample skewness and excess kurtosis (self-standardized).
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// 3rd and 4th k-statistics of `√T (J - center) / sqrt(limit_var)`.
    pub standardized_cumulant_3: f64,
    pub standardized_cumulant_4: f64,
    pub pass: bool,
}

/// Per-`(T, i, j)` covariance entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEntry {
    pub half_window: usize,
    pub i: usize,
    pub j: usize,
    /// `T · cov(J_i, J_j)` from the replicates.
    pub t_scaled_sample_cov: Complex64,
    pub se: f64,
    /// `T · cov` from the exact Gaussian oracle.
    pub oracle_t_scaled_cov: Option<Complex64>,
    pub limit_cov: Complex64,
    pub limit_gaussian_part: Complex64,
    pub limit_trispectrum_part: Complex64,
    pub sample_correlation: f64,
    pub limit_correlation: f64,
    /// `|sample - gaussian part|` and `|sample - full limit|`.
    pub gap_gaussian_only: f64,
    pub gap_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySlope {
    pub index: usize,
    pub order: u32,
    pub half_windows: Vec<usize>,
    pub values: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub slope: f64,
    /// Slope of `T^{r/2} · T^{1-r}`.
    pub reference_slope: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub half_window: Option<usize>,
    pub components: Vec<usize>,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub components: Vec<ComponentRow>,
    pub covariances: Vec<CovarianceEntry>,
    pub slopes: Vec<DecaySlope>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn checks_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name == name)
    }

    pub fn covariance(&self, half_window: usize, i: usize, j: usize) -> Option<&CovarianceEntry> {
        self.covariances
            .iter()
            .find(|c| c.half_window == half_window && c.i == i && c.j == j)
    }

    pub fn component(&self, half_window: usize, index: usize) -> Option<&ComponentRow> {
        self.components
            .iter()
            .find(|c| c.half_window == half_window && c.index == index)
    }
}

struct Setup {
    model: SpectralModel,
    taper: Taper,
    phis: Vec<WeightFunction>,
    limits: Vec<LimitMean>,
    clt: CltCovariance,
}

impl Setup {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = config.model.build()?;
        let taper = Taper::from_name(&config.taper)?;
        let phis = config
            .phis
            .iter()
            .map(|p| WeightFunction::parse(p))
            .collect::<Result<Vec<_>>>()?;
        let quadrature = Quadrature::default();
        let limits = phis
            .iter()
            .zip(&config.ks)
            .map(|(p, &k)| limit_mean(&model, p, k, quadrature.single))
            .collect::<Result<Vec<_>>>()?;
        let clt = clt_covariance_matrix(&model, &phis, &config.ks, &taper, &quadrature)?;
        Ok(Self {
            model,
            taper,
            phis,
            limits,
            clt,
        })
    }
}

/// Simulated functionals at one half-window, `values[r][i]`.
struct Sweep {
    half_window: usize,
    grid: FrequencyGrid,
    values: Vec<Vec<Complex64>>,
}

fn simulate(config: &ExperimentConfig, setup: &Setup, half_window: usize) -> Result<Sweep> {
    let grid = config.grid_for(half_window)?;
    let engine = PeriodogramEngine::new(&setup.taper, half_window, &grid)?;
    let sampler = setup.model.sampler(half_window)?;
    let weights: Vec<Vec<Complex64>> = setup.phis.iter().map(|p| p.on_grid(&grid)).collect();
    let w = grid.weight();
    let values = (0..config.replicates)
        .into_par_iter()
        .map_init(Vec::new, |buf, r| {
            let path = sampler.sample(replicate_seed(config.base_seed, half_window, r));
            engine.ordinates_into(&path, buf)?;
            Ok(weights
                .iter()
                .zip(&config.ks)
                .map(|(phi, &k)| integrate_power(phi, buf, k, w))
                .collect())
        })
        .collect::<Result<Vec<Vec<Complex64>>>>()?;
    Ok(Sweep {
        half_window,
        grid,
        values,
    })
}

struct Exact {
    means: Vec<Option<Complex64>>,
    covs: Vec<Vec<Option<Complex64>>>,
}

fn exact_moments(config: &ExperimentConfig, setup: &Setup, sweep: &Sweep) -> Result<Exact> {
    let m = setup.phis.len();
    let t = sweep.half_window;
    if !setup.model.is_gaussian() {
        return Ok(Exact {
            means: vec![None; m],
            covs: vec![vec![None; m]; m],
        });
    }
    let mut means = Vec::with_capacity(m);
    for (phi, &k) in setup.phis.iter().zip(&config.ks) {
        means.push(if k <= MAX_MEAN_POWER {
            Some(exact_mean_j(&setup.model, &setup.taper, t, phi, k, &sweep.grid)?.value)
        } else {
            None
        });
    }
    let mut covs = vec![vec![None; m]; m];
    let wanted = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .any(|(i, j)| config.ks[i] + config.ks[j] <= MAX_COV_POWER);
    if wanted && t <= config.oracle_cov_max_half_window {
        let cov = DftCovariance::new(&setup.model, &setup.taper, t)?;
        let matrix = cov.grid_matrix(&sweep.grid);
        for (i, row) in covs.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                let (k, l) = (config.ks[i], config.ks[j]);
                if k + l <= MAX_COV_POWER {
                    let c = exact_cov_j_with(
                        &cov,
                        &matrix,
                        &setup.phis[i],
                        k,
                        &setup.phis[j],
                        l,
                        &sweep.grid,
                    )?;
                    *slot = Some(c * t as f64);
                }
            }
        }
    }
    Ok(Exact { means, covs })
}

struct Summary {
    components: Vec<ComponentRow>,
    covariances: Vec<CovarianceEntry>,
}

fn summarize(
    config: &ExperimentConfig,
    setup: &Setup,
    sweep: &Sweep,
    exact: &Exact,
    warnings: &mut Vec<String>,
) -> Result<Summary> {
    let m = setup.phis.len();
    let r = sweep.values.len();
    let rf = r as f64;
    let t = sweep.half_window;
    let tf = t as f64;
    let means: Vec<Complex64> = (0..m)
        .map(|i| sweep.values.iter().map(|v| v[i]).sum::<Complex64>() / rf)
        .collect();

    let mut covariances = Vec::with_capacity(m * m);
    let mut diag = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            let products: Vec<Complex64> = sweep
                .values
                .iter()
                .map(|v| (v[i] - means[i]) * (v[j] - means[j]).conj())
                .collect();
            let sum: Complex64 = products.iter().sum();
            let sample = sum / (rf - 1.0) * tf;
            let pm = sum / rf;
            let spread = products.iter().map(|p| (p - pm).norm_sqr()).sum::<f64>() / (rf - 1.0);
            let se = tf * (spread / rf).sqrt();
            if i == j {
                diag[i] = sample.re;
            }
            let limit_total = setup.clt.full[(i, j)];
            let limit_gauss = setup.clt.gaussian[(i, j)];
            covariances.push(CovarianceEntry {
                half_window: t,
                i,
                j,
                t_scaled_sample_cov: sample,
                se,
                oracle_t_scaled_cov: exact.covs[i][j],
                limit_cov: limit_total,
                limit_gaussian_part: limit_gauss,
                limit_trispectrum_part: limit_total - limit_gauss,
                sample_correlation: 0.0,
                limit_correlation: setup.clt.correlation(i, j).re,
                gap_gaussian_only: (sample - limit_gauss).norm(),
                gap_full: (sample - limit_total).norm(),
            });
        }
    }
    for c in &mut covariances {
        c.sample_correlation = c.t_scaled_sample_cov.re / (diag[c.i] * diag[c.j]).sqrt();
    }

    let mut components = Vec::with_capacity(m);
    for i in 0..m {
        let limit_var = setup.clt.full[(i, i)].re;
        let center = match (config.centering, exact.means[i]) {
            (Centering::Oracle, Some(e)) => e,
            _ => means[i],
        };
        let scale = (tf / limit_var).sqrt();
        let z: Vec<f64> = sweep
            .values
            .iter()
            .map(|v| (v[i] - center).re * scale)
            .collect();
        let ks = KStatistics::new(&z)?;
        let mean_se = (diag[i] / tf / rf).sqrt();
        let limit = &setup.limits[i];
        let gap = exact.means[i].map(|e| bias_gap(limit, t, e.re));
        if let Some(e) = exact.means[i] {
            let bias = (e - limit.value).norm();
            if bias > 1e-12 * limit.value.norm().max(1.0) && mean_se > 0.5 * bias {
                warnings.push(format!(
                    "T = {t}, component {i}: Monte Carlo SE {mean_se:.3e} exceeds half the mean bias {bias:.3e}; increase R"
                ));
            }
        }
        components.push(ComponentRow {
            half_window: t,
            index: i,
            k: config.ks[i],
            phi_id: setup.phis[i].label().to_string(),
            grid_n: sweep.grid.len(),
            replicates: r,
            sample_mean: means[i],
            mean_se,
            oracle_mean: exact.means[i],
            limit_mean: limit.value,
            bias_gap: gap,
            center,
            t_scaled_var: diag[i],
            limit_var,
            skewness: ks.skewness(),
            excess_kurtosis: ks.excess_kurtosis(),
            standardized_cumulant_3: ks.k3,
            standardized_cumulant_4: ks.k4,
            pass: true,
        });
    }
    Ok(Summary {
        components,
        covariances,
    })
}

fn check(
    name: &str,
    half_window: Option<usize>,
    components: Vec<usize>,
    value: f64,
    reference: f64,
    tolerance: f64,
    passed: bool,
) -> Check {
    Check {
        name: name.to_string(),
        half_window,
        components,
        value,
        reference,
        tolerance,
        passed,
    }
}

fn convergence_checks(config: &ExperimentConfig, report: &mut ExperimentReport) {
    let tol = config.tolerances;
    let last = *config.t_sweep.last().expect("validated sweep");
    for row in &report.components {
        if let Some(e) = row.oracle_mean {
            let d = (row.sample_mean - e).norm();
            report.checks.push(check(
                "mean_vs_oracle",
                Some(row.half_window),
                vec![row.index],
                row.sample_mean.re,
                e.re,
                tol.oracle_se * row.mean_se,
                d <= tol.oracle_se * row.mean_se,
            ));
        }
    }
    for c in &report.covariances {
        if let Some(o) = c.oracle_t_scaled_cov {
            let d = (c.t_scaled_sample_cov - o).norm();
            report.checks.push(check(
                "cov_vs_oracle",
                Some(c.half_window),
                vec![c.i, c.j],
                c.t_scaled_sample_cov.re,
                o.re,
                tol.oracle_se * c.se,
                d <= tol.oracle_se * c.se,
            ));
        }
        if c.half_window == last {
            let scale = report
                .covariance(last, c.i, c.i)
                .zip(report.covariance(last, c.j, c.j))
                .map(|(a, b)| (a.limit_cov.re * b.limit_cov.re).sqrt())
                .unwrap_or(1.0);
            report.checks.push(check(
                "cov_vs_limit",
                Some(last),
                vec![c.i, c.j],
                c.t_scaled_sample_cov.re,
                c.limit_cov.re,
                tol.cov_rel * scale,
                c.gap_full <= tol.cov_rel * scale,
            ));
        }
    }
}

fn normality_checks(config: &ExperimentConfig, report: &mut ExperimentReport) {
    let tol = config.tolerances;
    let th = config.normality_thresholds;
    let last = *config.t_sweep.last().expect("validated sweep");
    for row in report.components.iter().filter(|r| r.half_window == last) {
        report.checks.push(check(
            "skewness",
            Some(last),
            vec![row.index],
            row.skewness,
            0.0,
            th.skew_max,
            row.skewness.abs() < th.skew_max,
        ));
        report.checks.push(check(
            "excess_kurtosis",
            Some(last),
            vec![row.index],
            row.excess_kurtosis,
            0.0,
            th.exkurt_max,
            row.excess_kurtosis.abs() < th.exkurt_max,
        ));
    }
    for c in report
        .covariances
        .iter()
        .filter(|c| c.half_window == last && c.i < c.j)
    {
        report.checks.push(check(
            "correlation",
            Some(last),
            vec![c.i, c.j],
            c.sample_correlation,
            c.limit_correlation,
            tol.correlation,
            (c.sample_correlation - c.limit_correlation).abs() <= tol.correlation,
        ));
    }
    if config.t_sweep.len() < 2 {
        return;
    }
    let r = config.replicates as f64;
    let m = config.ks.len();
    let ts: Vec<f64> = config.t_sweep.iter().map(|&t| t as f64).collect();
    for i in 0..m {
        let rows: Vec<ComponentRow> = config
            .t_sweep
            .iter()
            .filter_map(|&t| report.component(t, i).cloned())
            .collect();
        for order in [3u32, 4] {
            let (values, ses): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .map(|row| {
                    let ratio = row.t_scaled_var / row.limit_var;
                    if order == 3 {
                        (row.standardized_cumulant_3, (6.0 / r).sqrt() * ratio.powf(1.5))
                    } else {
                        (row.standardized_cumulant_4, (24.0 / r).sqrt() * ratio * ratio)
                    }
                })
                .unzip();
            let slope = loglog_slope(&ts, &values);
            let bound: Vec<f64> = config
                .t_sweep
                .iter()
                .map(|&t| {
                    cumulant_order_bound(order, t).expect("order ≥ 3")
                        * (t as f64).powf(f64::from(order) / 2.0)
                })
                .collect();
            let reference_slope = loglog_slope(&ts, &bound);
            let monotone = values
                .windows(2)
                .zip(ses.windows(2))
                .all(|(v, s)| v[1].abs() <= v[0].abs() + tol.monotone_se * s[0].max(s[1]));
            report.checks.push(check(
                "cumulant_slope",
                None,
                vec![i],
                slope,
                reference_slope,
                tol.slope_max,
                slope <= tol.slope_max,
            ));
            report.checks.push(check(
                "cumulant_monotone",
                None,
                vec![i],
                f64::from(u8::from(monotone)),
                1.0,
                tol.monotone_se,
                monotone,
            ));
            report.slopes.push(DecaySlope {
                index: i,
                order,
                half_windows: config.t_sweep.clone(),
                values,
                standard_errors: ses,
                slope,
                reference_slope,
                monotone,
            });
        }
    }
}

fn f4_checks(config: &ExperimentConfig, report: &mut ExperimentReport, warnings: &mut Vec<String>) {
    let tol = config.tolerances;
    for c in report.covariances.iter().filter(|c| c.i <= c.j) {
        let tri = c.limit_trispectrum_part.norm();
        let margin = c.gap_gaussian_only - c.gap_full;
        let needed = tol.discrimination_se * c.se;
        let passed = if tri == 0.0 {
            margin.abs() <= needed
        } else {
            margin > needed
        };
        if tri > 0.0 && c.se > 0.5 * tri {
            warnings.push(format!(
                "T = {}, entry ({}, {}): Monte Carlo SE {:.3e} exceeds half the trispectrum part {:.3e}; increase R",
                c.half_window, c.i, c.j, c.se, tri
            ));
        }
        report.checks.push(check(
            "f4_discrimination",
            Some(c.half_window),
            vec![c.i, c.j],
            margin,
            0.0,
            needed,
            passed,
        ));
    }
}

fn mark_rows(report: &mut ExperimentReport) {
    for row in &mut report.components {
        row.pass = report
            .checks
            .iter()
            .filter(|c| c.half_window.is_none_or(|t| t == row.half_window))
            .filter(|c| c.components.contains(&row.index))
            .all(|c| c.passed);
    }
}

fn run_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    let setup = Setup::new(config)?;
    let mut warnings = Vec::new();
    let mut components = Vec::new();
    let mut covariances = Vec::new();
    for &t in &config.t_sweep {
        let sweep = simulate(config, &setup, t)?;
        let exact = exact_moments(config, &setup, &sweep)?;
        let s = summarize(config, &setup, &sweep, &exact, &mut warnings)?;
        components.extend(s.components);
        covariances.extend(s.covariances);
    }
    if kind == ExperimentKind::Normality
        && config.centering == Centering::Oracle
        && components.iter().any(|c| c.oracle_mean.is_none())
    {
        warnings.push("exact mean unavailable for some components; centred at the sample mean".into());
    }
    let mut report = ExperimentReport {
        experiment: kind,
        config: config.clone(),
        components,
        covariances,
        slopes: Vec::new(),
        checks: Vec::new(),
        warnings: Vec::new(),
    };
    match kind {
        ExperimentKind::Convergence => convergence_checks(config, &mut report),
        ExperimentKind::Normality => normality_checks(config, &mut report),
        ExperimentKind::F4Discrimination => f4_checks(config, &mut report, &mut warnings),
    }
    report.warnings = warnings;
    mark_rows(&mut report);
    Ok(report)
}

fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}

/// Run the experiment named by `config.experiment` on `threads` workers
/// (`None` uses the global pool).
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentReport> {
    with_workers(threads, || run_kind(config, config.experiment))
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let threads = threads_from_env()?;
    with_workers(threads, || run_kind(config, ExperimentKind::Convergence))
}

pub fn run_normality(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let threads = threads_from_env()?;
    with_workers(threads, || run_kind(config, ExperimentKind::Normality))
}

pub fn run_f4_discrimination(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let threads = threads_from_env()?;
    with_workers(threads, || run_kind(config, ExperimentKind::F4Discrimination))
}
