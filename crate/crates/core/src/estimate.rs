//! Least-squares and conjugate normal-Wishart estimation with one-step-ahead
//! predictive densities.
//!
//! The Bayesian model is `Y = X Φ + E`, rows of `E` i.i.d. `N(0, Σ)`, with
//! `Φ | Σ ~ MN(M0, V0, Σ)` and `Σ ~ IW(S0, ν0)`. The posterior keeps the same
//! form with `(Mn, Vn, Sn, νn)` and a new row `y = Φᵀx + e` is matric-variate t.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::design::{build_univariate_augmented, ColumnKind, DateWindow, DesignSystem, ExogSpec, LagSet, ModelSpec};
use crate::design::{residual_correlation, Estimator};
use crate::error::{Error, Result};
use crate::ingest::{MarketDataset, HOURS};
use crate::linalg::{psd_factor, symmetrize, ScaledCholesky};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Largest accepted condition number of the (column-equilibrated) Gram
    /// matrix before falling back to an SVD solve.
    pub cond_limit: f64,
    /// Relative singular-value threshold below which the design is rank deficient.
    pub rank_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { cond_limit: 1e12, rank_tol: 1e-11 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsFit {
    /// m×q coefficients.
    pub phi: DMatrix<f64>,
    /// q×q residual covariance with divisor n − m.
    pub sigma: DMatrix<f64>,
    pub n: usize,
    pub columns: Vec<String>,
    /// True when the SVD fallback was used.
    pub used_fallback: bool,
}

impl LsFit {
    pub fn residuals(&self, ds: &DesignSystem) -> DMatrix<f64> {
        &ds.y - &ds.x * &self.phi
    }
}

pub fn ls_fit(ds: &DesignSystem) -> Result<LsFit> {
    ls_fit_with(ds, &SolverConfig::default())
}

pub fn ls_fit_with(ds: &DesignSystem, cfg: &SolverConfig) -> Result<LsFit> {
    let (n, m) = (ds.n(), ds.m());
    if n <= m {
        return Err(Error::InsufficientSample { n, m });
    }
    let norms: Vec<f64> = ds.x.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let mut xs = ds.x.clone();
    for (j, mut col) in xs.column_iter_mut().enumerate() {
        col /= norms[j];
    }
    let gram = xs.tr_mul(&xs);
    let xty = xs.tr_mul(&ds.y);

    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let (mut phi, used_fallback) = match (cond <= cfg.cond_limit).then(|| ScaledCholesky::new(&gram)).flatten() {
        Some(chol) => (chol.solve(&xty), false),
        None => {
            let svd = xs.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smin / smax < cfg.rank_tol {
                return Err(Error::RankDeficient { ratio: smin / smax });
            }
            let sol = svd.solve(&ds.y, 0.0).map_err(|_| Error::RankDeficient { ratio: smin / smax })?;
            (sol, true)
        }
    };
    for (j, mut row) in phi.row_iter_mut().enumerate() {
        row /= norms[j];
    }
    let resid = &ds.y - &ds.x * &phi;
    let mut sigma = resid.tr_mul(&resid) / (n - m) as f64;
    symmetrize(&mut sigma);
    Ok(LsFit { phi, sigma, n, columns: ds.columns.clone(), used_fallback })
}

/// Conjugate normal-Wishart prior.
#[derive(Clone, Debug, PartialEq)]
pub struct NwPrior {
    pub m0: DMatrix<f64>,
    pub v0: DMatrix<f64>,
    pub s0: DMatrix<f64>,
    pub nu0: f64,
}

impl NwPrior {
    fn validate(&self, m: usize, q: usize) -> Result<()> {
        if self.m0.shape() != (m, q) {
            return Err(Error::DimensionMismatch { expected: m * q, got: self.m0.len() });
        }
        if self.v0.shape() != (m, m) || self.s0.shape() != (q, q) {
            return Err(Error::NonPdPrior("V0 or S0 has the wrong shape".into()));
        }
        let symmetric = |a: &DMatrix<f64>| (a - a.transpose()).amax() <= 1e-10 * a.amax().max(1.0);
        if !symmetric(&self.v0) || ScaledCholesky::new(&self.v0).is_none() {
            return Err(Error::NonPdPrior("V0 is not symmetric positive definite".into()));
        }
        if !symmetric(&self.s0) || ScaledCholesky::new(&self.s0).is_none() {
            return Err(Error::NonPdPrior("S0 is not symmetric positive definite".into()));
        }
        if !(self.nu0 > q as f64 - 1.0) {
            return Err(Error::NonPdPrior(format!("nu0 = {} must exceed q - 1 = {}", self.nu0, q - 1)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NwPosterior {
    pub mn: DMatrix<f64>,
    pub vn: DMatrix<f64>,
    pub sn: DMatrix<f64>,
    pub nun: f64,
    pub columns: Vec<String>,
}

impl NwPosterior {
    /// Reuses this posterior as the prior for a further batch of data.
    pub fn as_prior(&self) -> NwPrior {
        NwPrior { m0: self.mn.clone(), v0: self.vn.clone(), s0: self.sn.clone(), nu0: self.nun }
    }
}

pub fn nw_posterior(ds: &DesignSystem, prior: &NwPrior) -> Result<NwPosterior> {
    let (n, m, q) = (ds.n(), ds.m(), ds.q());
    prior.validate(m, q)?;
    if n == 0 {
        return Ok(NwPosterior {
            mn: prior.m0.clone(),
            vn: prior.v0.clone(),
            sn: prior.s0.clone(),
            nun: prior.nu0,
            columns: ds.columns.clone(),
        });
    }
    let v0_chol = ScaledCholesky::new(&prior.v0).ok_or_else(|| Error::NonPdPrior("V0".into()))?;
    let v0_inv = v0_chol.inverse();
    let precision = &v0_inv + ds.x.tr_mul(&ds.x);
    let prec_chol = ScaledCholesky::new(&precision).ok_or(Error::RankDeficient { ratio: 0.0 })?;
    let vn = prec_chol.inverse();
    let mn = prec_chol.solve(&(&v0_inv * &prior.m0 + ds.x.tr_mul(&ds.y)));
    // S0 + YᵀY + M0ᵀV0⁻¹M0 − MnᵀVn⁻¹Mn, written as a sum of PSD terms.
    let resid = &ds.y - &ds.x * &mn;
    let shift = &mn - &prior.m0;
    let mut sn = &prior.s0 + resid.tr_mul(&resid) + shift.tr_mul(&(&v0_inv * &shift));
    symmetrize(&mut sn);
    Ok(NwPosterior { mn, vn, sn, nun: prior.nu0 + n as f64, columns: ds.columns.clone() })
}

/// Hyperparameters of the default Minnesota-style normal-Wishart prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    /// Prior mean of each equation's own first lag.
    pub delta: f64,
    /// Overall tightness of the autoregressive coefficients.
    pub lambda: f64,
    /// Tightness of exogenous coefficients relative to the regressor's spread.
    pub exog_lambda: f64,
    /// Prior variance factor for the calendar dummies.
    pub dummy_variance: f64,
    /// `nu0 = q + nu0_offset`.
    pub nu0_offset: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { delta: 0.9, lambda: 0.2, exog_lambda: 1.0, dummy_variance: 1e6, nu0_offset: 2.0 }
    }
}

/// Residual variance of an OLS autoregression with intercept on `series`.
fn ar_residual_variance(series: &[f64], lags: &LagSet) -> f64 {
    let p = lags.max();
    let fallback = {
        let mean = series.iter().sum::<f64>() / series.len().max(1) as f64;
        let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (series.len().max(2) - 1) as f64;
        if var > 0.0 { var } else { 1.0 }
    };
    let rows = series.len().saturating_sub(p);
    let k = lags.len() + 1;
    if rows <= k + 1 {
        return fallback;
    }
    let x = DMatrix::from_fn(rows, k, |r, c| if c == 0 { 1.0 } else { series[r + p - lags.iter().nth(c - 1).unwrap()] });
    let y = DMatrix::from_fn(rows, 1, |r, _| series[r + p]);
    match DesignSystem::from_matrices(y, x).and_then(|ds| ls_fit(&ds)) {
        Ok(fit) if fit.sigma[(0, 0)] > 0.0 => fit.sigma[(0, 0)],
        _ => fallback,
    }
}

/// Minnesota-flavoured conjugate prior for a design built by [`crate::design`].
///
/// `M0` is zero except the own-hour first lag (`delta`). `V0` is diagonal:
/// `lambda² / (l² σ_j²)` for lag `l` of hour `j`, `exog_lambda² / var(x_k)` for
/// exogenous columns and `dummy_variance` for dummies, where `σ_j²` are
/// univariate AR residual variances. `S0 = diag(σ_i²)`, `nu0 = q + nu0_offset`.
pub fn minnesota_prior(ds: &DesignSystem, lags: &LagSet, cfg: &PriorConfig) -> Result<NwPrior> {
    let (n, m, q) = (ds.n(), ds.m(), ds.q());
    if ds.map.kinds.len() != m {
        return Err(Error::InvalidSpec("minnesota_prior needs a design with a column map".into()));
    }
    // residual variance per hour that appears as a lagged regressor or equation
    let mut sigma2 = [f64::NAN; HOURS];
    let mut variance_of = |hour: usize| -> f64 {
        if sigma2[hour - 1].is_nan() {
            let series: Vec<f64> = match ds.map.equation_hours.iter().position(|&h| h == hour) {
                Some(e) => ds.y.column(e).iter().copied().collect(),
                None => {
                    let c = ds.map.kinds.iter().position(|k| *k == ColumnKind::PriceLag { hour, lag: 1 });
                    c.map(|c| ds.x.column(c).iter().copied().collect()).unwrap_or_default()
                }
            };
            sigma2[hour - 1] = ar_residual_variance(&series, lags);
        }
        sigma2[hour - 1]
    };

    let mut v0 = DMatrix::zeros(m, m);
    for (k, kind) in ds.map.kinds.iter().enumerate() {
        v0[(k, k)] = match *kind {
            ColumnKind::PriceLag { hour, lag } => cfg.lambda.powi(2) / ((lag * lag) as f64 * variance_of(hour)),
            ColumnKind::Dummy(_) => cfg.dummy_variance,
            _ => {
                let col = ds.x.column(k);
                let mean = col.mean();
                let var = if n > 1 { col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
                cfg.exog_lambda.powi(2) / if var > 0.0 { var } else { 1.0 }
            }
        };
    }
    let mut m0 = DMatrix::zeros(m, q);
    for (e, row) in ds.map.own_first_lag().into_iter().enumerate() {
        if let Some(r) = row {
            m0[(r, e)] = cfg.delta;
        }
    }
    let s0 = DMatrix::from_diagonal(&DVector::from_iterator(q, ds.map.equation_hours.iter().map(|&h| variance_of(h))));
    Ok(NwPrior { m0, v0, s0, nu0: q as f64 + cfg.nu0_offset })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityKind {
    Gaussian,
    StudentT { dof: f64 },
    Empirical,
}

/// One-step-ahead predictive distribution of the q-vector of prices.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastDensity {
    pub kind: DensityKind,
    pub mean: DVector<f64>,
    pub scale: DMatrix<f64>,
    /// d×q draws, when sampled.
    pub draws: Option<DMatrix<f64>>,
    pub target_date: Option<NaiveDate>,
    /// Components come from separately fitted models (no joint law across them).
    pub independent_margins: bool,
}

impl ForecastDensity {
    pub fn dof(&self) -> Option<f64> {
        match self.kind {
            DensityKind::StudentT { dof } => Some(dof),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Marginal variance of component `i` (scale·ν/(ν−2) for Student t).
    pub fn marginal_variance(&self, i: usize) -> f64 {
        match self.kind {
            DensityKind::StudentT { dof } if dof > 2.0 => self.scale[(i, i)] * dof / (dof - 2.0),
            DensityKind::StudentT { .. } => f64::INFINITY,
            _ => self.scale[(i, i)],
        }
    }

    /// Stacks univariate densities (one per hour) into one vector density.
    pub fn stack(parts: &[ForecastDensity]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyDensity(0))?;
        let q = parts.len();
        let mut mean = DVector::zeros(q);
        let mut scale = DMatrix::zeros(q, q);
        for (i, p) in parts.iter().enumerate() {
            if p.dim() != 1 || p.kind != first.kind {
                return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
            }
            mean[i] = p.mean[0];
            scale[(i, i)] = p.scale[(0, 0)];
        }
        Ok(Self { kind: first.kind, mean, scale, draws: None, target_date: first.target_date, independent_margins: true })
    }
}

pub fn predictive_ls(fit: &LsFit, x_new: &[f64]) -> Result<ForecastDensity> {
    let m = fit.phi.nrows();
    if x_new.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: x_new.len() });
    }
    let x = DVector::from_column_slice(x_new);
    Ok(ForecastDensity {
        kind: DensityKind::Gaussian,
        mean: fit.phi.tr_mul(&x),
        scale: fit.sigma.clone(),
        draws: None,
        target_date: None,
        independent_margins: false,
    })
}

pub fn predictive_bayes(post: &NwPosterior, x_new: &[f64]) -> Result<ForecastDensity> {
    let (m, q) = post.mn.shape();
    if x_new.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: x_new.len() });
    }
    if !(post.nun > q as f64 + 1.0) {
        return Err(Error::DofTooSmall { nu: post.nun, q });
    }
    let dof = post.nun - q as f64 + 1.0;
    let x = DVector::from_column_slice(x_new);
    let inflation = 1.0 + x.dot(&(&post.vn * &x));
    let mut scale = &post.sn * (inflation / dof);
    symmetrize(&mut scale);
    Ok(ForecastDensity {
        kind: DensityKind::StudentT { dof },
        mean: post.mn.tr_mul(&x),
        scale,
        draws: None,
        target_date: None,
        independent_margins: false,
    })
}

/// Draws `d` i.i.d. vectors from the density's parametric law.
pub fn sample_density(fd: &ForecastDensity, d: usize, seed: u64) -> Result<ForecastDensity> {
    let q = fd.dim();
    if q == 0 || d < 2 {
        return Err(Error::EmptyDensity(d));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = DMatrix::zeros(d, q);
    match fd.kind {
        DensityKind::Empirical => {
            let src = fd.draws.as_ref().ok_or(Error::EmptyDensity(0))?;
            if src.nrows() == 0 {
                return Err(Error::EmptyDensity(0));
            }
            for r in 0..d {
                let pick = rng.random_range(0..src.nrows());
                draws.row_mut(r).copy_from(&src.row(pick));
            }
        }
        DensityKind::Gaussian | DensityKind::StudentT { .. } => {
            let factor = if fd.independent_margins {
                DMatrix::from_diagonal(&DVector::from_iterator(q, (0..q).map(|i| fd.scale[(i, i)].max(0.0).sqrt())))
            } else {
                psd_factor(&fd.scale)
            };
            let chi = match fd.kind {
                DensityKind::StudentT { dof } => Some((dof, ChiSquared::new(dof).map_err(|_| Error::DofTooSmall { nu: dof, q })?)),
                _ => None,
            };
            let mut z = DVector::zeros(q);
            for r in 0..d {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let mut shock = &factor * &z;
                if let Some((dof, chi)) = &chi {
                    if fd.independent_margins {
                        for v in shock.iter_mut() {
                            *v /= (chi.sample(&mut rng) / dof).sqrt();
                        }
                    } else {
                        shock /= (chi.sample(&mut rng) / dof).sqrt();
                    }
                }
                for (c, v) in shock.iter().enumerate() {
                    draws[(r, c)] = fd.mean[c] + v;
                }
            }
        }
    }
    Ok(ForecastDensity { draws: Some(draws), ..fd.clone() })
}

/// A fitted model of either estimator, ready to forecast.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedModel {
    LeastSquares(LsFit),
    Bayesian(NwPosterior),
}

impl FittedModel {
    pub fn fit(ds: &DesignSystem, spec: &ModelSpec, prior: &PriorConfig, solver: &SolverConfig) -> Result<Self> {
        match spec.estimator {
            Estimator::LeastSquares => ls_fit_with(ds, solver).map(Self::LeastSquares),
            Estimator::Bayesian => {
                let p = minnesota_prior(ds, &spec.lags, prior)?;
                nw_posterior(ds, &p).map(Self::Bayesian)
            }
        }
    }

    pub fn predict(&self, x_new: &[f64]) -> Result<ForecastDensity> {
        match self {
            Self::LeastSquares(f) => predictive_ls(f, x_new),
            Self::Bayesian(p) => predictive_bayes(p, x_new),
        }
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        match self {
            Self::LeastSquares(f) => &f.phi,
            Self::Bayesian(p) => &p.mn,
        }
    }
}

/// Cross-hour residual correlation of the 24 augmented univariate models.
pub fn augmented_residual_correlation(data: &MarketDataset, exog: ExogSpec, lags: &LagSet, window: DateWindow) -> Result<DMatrix<f64>> {
    let mut columns = Vec::with_capacity(HOURS);
    for h in 1..=HOURS {
        let spec = ModelSpec { lags: lags.clone(), ..ModelSpec::augmented(Estimator::LeastSquares, exog, h) };
        let ds = build_univariate_augmented(data, &spec, window)?;
        let fit = ls_fit(&ds)?;
        columns.push(fit.residuals(&ds).column(0).into_owned());
    }
    residual_correlation(&DMatrix::from_columns(&columns))
}

/// Writes `label,equation,value` rows for a coefficient matrix.
pub fn coefficient_table(columns: &[String], equations: &[usize], coef: &DMatrix<f64>) -> String {
    let mut out = String::from("label,equation,value\n");
    for (e, h) in equations.iter().enumerate() {
        for (k, label) in columns.iter().enumerate() {
            out.push_str(&format!("{label},h{h:02},{}\n", coef[(k, e)]));
        }
    }
    out
}
