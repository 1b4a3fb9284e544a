//! Maximum likelihood fitting, baseline search, the market-share equation for
//! the no-purchase parameter, and the assembled [`FitResult`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{AltCode, TransactionDataset};
use crate::error::{Result, RmmError};
use crate::likelihood::{
    log_sum_exp, observed_loglik, Derivatives, ModelCoefficients, ParamLayout,
};

pub const DEFAULT_MARKET_SHARE: f64 = 0.7;

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    /// Stop when the gradient max-norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            max_halvings: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Estimates of `(alpha*_{-k}, beta)` for one baseline.
#[derive(Clone, Debug)]
pub struct MleFit {
    pub coefficients: ModelCoefficients,
    /// Inverse of the negative Hessian at the optimum, in flat parameter order.
    pub covariance: DMatrix<f64>,
    pub loglik: f64,
    pub convergence: Convergence,
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

// Alternatives that are never offered or never chosen have intercepts that
// run off to -inf; reject them before Newton wanders.
fn check_identified(dataset: &TransactionDataset) -> Result<()> {
    if dataset.n_alternatives() < 2 {
        return Err(RmmError::RankDeficient {
            direction: "the model (fewer than two alternatives)".into(),
        });
    }
    let j = dataset.n_alternatives();
    let mut offered = vec![false; j];
    let mut chosen = vec![false; j];
    for r in &dataset.records {
        for c in &dataset.record_set(r).codes {
            offered[c.index()] = true;
        }
        chosen[r.chosen.index()] = true;
    }
    for code in dataset.catalog.codes() {
        let label = dataset.catalog.label(code).unwrap_or_default();
        if !offered[code.index()] {
            return Err(RmmError::RankDeficient {
                direction: format!("intercept of alternative {code} ({label}), never offered"),
            });
        }
        if !chosen[code.index()] {
            return Err(RmmError::RankDeficient {
                direction: format!("intercept of alternative {code} ({label}), never chosen"),
            });
        }
    }
    Ok(())
}

fn param_name(dataset: &TransactionDataset, layout: &ParamLayout, idx: usize) -> String {
    if idx < layout.n_alternatives - 1 {
        let code = layout.alpha_codes().nth(idx).expect("in range");
        format!("intercept of alternative {code}")
    } else {
        format!(
            "slope of `{}`",
            dataset.asv_names[idx - (layout.n_alternatives - 1)]
        )
    }
}

fn rank_deficiency(
    dataset: &TransactionDataset,
    layout: &ParamLayout,
    info: &DMatrix<f64>,
) -> RmmError {
    let eig = SymmetricEigen::new(info.clone());
    let (smallest, _) =
        eig.eigenvalues
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
            );
    let vector = eig.eigenvectors.column(smallest);
    let (idx, _) = vector
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    RmmError::RankDeficient {
        direction: param_name(dataset, layout, idx),
    }
}

/// Maximizes the observed log-likelihood with `baseline` pinned, using damped
/// Newton steps from zero.
pub fn fit_mle(dataset: &TransactionDataset, baseline: AltCode) -> Result<MleFit> {
    fit_mle_with(dataset, baseline, &NewtonOptions::default())
}

pub fn fit_mle_with(
    dataset: &TransactionDataset,
    baseline: AltCode,
    opts: &NewtonOptions,
) -> Result<MleFit> {
    let layout = ParamLayout::for_dataset(dataset, baseline)?;
    check_identified(dataset)?;
    let dim = layout.dim();
    let mut theta = vec![0.0; dim];
    let mut iterations = 0;

    loop {
        let w = observed_loglik(&theta, dataset, baseline, Derivatives::Hessian)?;
        let grad = w.gradient.expect("requested");
        let info = -w.hessian.expect("requested");
        let gnorm = max_norm(&grad);
        let Some(chol) = info.clone().cholesky() else {
            return Err(rank_deficiency(dataset, &layout, &info));
        };

        if gnorm < opts.tolerance {
            // A perfect fit means the optimum sits at infinity and the
            // vanishing gradient is an artifact.
            if w.value > -1e-6 {
                return Err(RmmError::RankDeficient {
                    direction: "every parameter (choices are perfectly separated)".into(),
                });
            }
            let covariance = chol.inverse();
            return Ok(MleFit {
                coefficients: ModelCoefficients::from_params(&layout, &theta)?,
                covariance,
                loglik: w.value,
                convergence: Convergence {
                    iterations,
                    gradient_norm: gnorm,
                    converged: true,
                },
            });
        }
        if iterations >= opts.max_iterations {
            return Err(RmmError::NonConvergence {
                iterations,
                gradient_norm: gnorm,
                last_iterate: theta,
            });
        }

        let step = chol.solve(&grad);
        // Accept any step that does not lower the objective beyond rounding.
        let slack = 64.0 * f64::EPSILON * w.value.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + t * d)
                .collect();
            match observed_loglik(&trial, dataset, baseline, Derivatives::None) {
                Ok(v) if v.value >= w.value - slack => {
                    accepted = Some(trial);
                    break;
                }
                _ => t *= 0.5,
            }
        }
        iterations += 1;
        match accepted {
            Some(next) => theta = next,
            None => {
                return Err(RmmError::NonConvergence {
                    iterations,
                    gradient_norm: gnorm,
                    last_iterate: theta,
                })
            }
        }
    }
}

/// Ties closer than this are broken towards the smaller code.
const TIE_TOLERANCE: f64 = 1e-9;

/// Finds the alternative with the smallest fitted intercept, so that with it
/// as baseline every other intercept is nonnegative.
///
/// The likelihood is invariant to the choice of baseline, so a single fit
/// against alternative 1 ranks all intercepts.
pub fn search_baseline(dataset: &TransactionDataset) -> Result<AltCode> {
    let fit = fit_mle(dataset, AltCode(1))?;
    Ok(lowest_intercept(&fit.coefficients.intercepts()))
}

fn lowest_intercept(intercepts: &[f64]) -> AltCode {
    let mut best = 0;
    for (i, &a) in intercepts.iter().enumerate().skip(1) {
        if a < intercepts[best] - TIE_TOLERANCE {
            best = i;
        }
    }
    AltCode(best as u32 + 1)
}

fn check_share(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(RmmError::Domain(format!(
            "market share must be in (0,1), got {s}"
        )))
    }
}

/// `log D_i`, the log of the summed exponentiated utilities over each record's
/// choice set.
pub fn log_denominators(
    coeffs: &ModelCoefficients,
    dataset: &TransactionDataset,
) -> Result<Vec<f64>> {
    let intercepts = coeffs.intercepts();
    if intercepts.len() != dataset.n_alternatives() || coeffs.beta.len() != dataset.n_asv() {
        return Err(RmmError::Domain(
            "coefficients do not match the dataset's alternatives or ASVs".into(),
        ));
    }
    let mut util = Vec::new();
    Ok(dataset
        .records
        .iter()
        .map(|r| {
            util.clear();
            util.extend(
                dataset
                    .record_set(r)
                    .codes
                    .iter()
                    .zip(&r.values)
                    .map(|(c, x)| {
                        intercepts[c.index()]
                            + x.iter().zip(&coeffs.beta).map(|(a, b)| a * b).sum::<f64>()
                    }),
            );
            log_sum_exp(&util)
        })
        .collect())
}

// log sum_i 1/D_i
fn log_inverse_total(log_d: &[f64]) -> f64 {
    let neg: Vec<f64> = log_d.iter().map(|v| -v).collect();
    log_sum_exp(&neg)
}

/// Solves the market-share equation: the ratio of estimated no-purchases to
/// observed purchases equals `(1 - s) / s`.
pub fn estimate_gamma(
    coeffs: &ModelCoefficients,
    dataset: &TransactionDataset,
    share: f64,
) -> Result<f64> {
    check_share(share)?;
    let log_t = log_inverse_total(&log_denominators(coeffs, dataset)?);
    let n = dataset.len() as f64;
    Ok(n.ln() + (1.0 - share).ln() - share.ln() - log_t)
}

/// Residual `U(gamma)` of the market-share equation.
pub fn market_share_residual(
    gamma: f64,
    coeffs: &ModelCoefficients,
    dataset: &TransactionDataset,
    share: f64,
) -> Result<f64> {
    check_share(share)?;
    let log_t = log_inverse_total(&log_denominators(coeffs, dataset)?);
    let n = dataset.len() as f64;
    Ok((gamma + log_t - n.ln()).exp() - (1.0 - share) / share)
}

/// Gradient of the estimated gamma with respect to `(alpha*_{-k}, beta)`:
/// the `1/D_i`-weighted mean over records of the within-set expected design
/// vector.
pub fn gamma_gradient(
    coeffs: &ModelCoefficients,
    dataset: &TransactionDataset,
) -> Result<DVector<f64>> {
    let layout = ParamLayout::for_dataset(dataset, coeffs.baseline)?;
    let log_d = log_denominators(coeffs, dataset)?;
    let log_t = log_inverse_total(&log_d);
    let intercepts = coeffs.intercepts();
    let dim = layout.dim();
    let n_alpha = layout.n_alternatives - 1;
    let mut g = DVector::zeros(dim);
    for (r, ld) in dataset.records.iter().zip(&log_d) {
        let weight = (-ld - log_t).exp();
        for (c, x) in dataset.record_set(r).codes.iter().zip(&r.values) {
            let v =
                intercepts[c.index()] + x.iter().zip(&coeffs.beta).map(|(a, b)| a * b).sum::<f64>();
            let wp = weight * (v - ld).exp();
            if let Some(a) = layout.alpha_index(*c) {
                g[a] += wp;
            }
            for (k, xv) in x.iter().enumerate() {
                g[n_alpha + k] += wp * xv;
            }
        }
    }
    Ok(g)
}

/// Delta-method variance of gamma, treating the market share as known.
pub fn gamma_variance(
    coeffs: &ModelCoefficients,
    covariance: &DMatrix<f64>,
    dataset: &TransactionDataset,
) -> Result<f64> {
    let g = gamma_gradient(coeffs, dataset)?;
    if covariance.nrows() != g.len() || covariance.ncols() != g.len() {
        return Err(RmmError::Domain(format!(
            "covariance is {}x{}, expected {}x{}",
            covariance.nrows(),
            covariance.ncols(),
            g.len(),
            g.len()
        )));
    }
    Ok((g.transpose() * covariance * &g)[(0, 0)].max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoPurchase {
    pub estimate: f64,
    pub estimate_rounded: i64,
    pub total_arrivals: f64,
    pub total_arrivals_rounded: i64,
}

impl NoPurchase {
    pub fn from_estimate(estimate: f64, observed: usize) -> Self {
        let total = observed as f64 + estimate;
        Self {
            estimate,
            estimate_rounded: estimate.round() as i64,
            total_arrivals: total,
            total_arrivals_rounded: total.round() as i64,
        }
    }
}

/// Per-record instant loss rates `exp(gamma) / D_i`.
pub fn loss_rates(
    gamma: f64,
    coeffs: &ModelCoefficients,
    dataset: &TransactionDataset,
) -> Result<Vec<f64>> {
    Ok(log_denominators(coeffs, dataset)?
        .into_iter()
        .map(|ld| (gamma - ld).exp())
        .collect())
}

/// Total estimated no-purchases: the sum of the loss rates over purchases.
pub fn no_purchase(
    gamma: f64,
    coeffs: &ModelCoefficients,
    dataset: &TransactionDataset,
) -> Result<NoPurchase> {
    let log_t = log_inverse_total(&log_denominators(coeffs, dataset)?);
    Ok(NoPurchase::from_estimate(
        (gamma + log_t).exp(),
        dataset.len(),
    ))
}

/// Two-sided standard normal tail probability.
pub fn two_sided_p(z: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.cdf(-z.abs())).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub z_value: f64,
    pub p_value: f64,
}

impl CoefficientRow {
    pub fn new(name: String, estimate: f64, variance: f64) -> Self {
        let std_error = variance.max(0.0).sqrt();
        let z_value = estimate / std_error;
        Self {
            name,
            estimate,
            std_error,
            z_value,
            p_value: two_sided_p(z_value),
        }
    }
}

/// A complete fit: coefficients with gamma, covariance over
/// `(gamma, alpha*_{-k}, beta)`, inference table, and arrival estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: ModelCoefficients,
    /// Row-major, ordered like `table`.
    pub covariance: Vec<Vec<f64>>,
    pub table: Vec<CoefficientRow>,
    pub loglik: f64,
    pub observed_arrivals: usize,
    pub no_purchase: NoPurchase,
    pub market_share: f64,
    pub convergence: Convergence,
}

impl FitResult {
    pub fn std_errors(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.std_error).collect()
    }

    pub fn z_values(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.z_value).collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.p_value).collect()
    }

    pub fn gamma(&self) -> f64 {
        self.coefficients.gamma.expect("fit always sets gamma")
    }

    pub fn row(&self, name: &str) -> Option<&CoefficientRow> {
        self.table.iter().find(|r| r.name == name)
    }
}

/// Baseline search, MLE at the chosen baseline, gamma from the market share,
/// its delta-method variance, and the no-purchase total.
pub fn fit(dataset: &TransactionDataset, share: f64) -> Result<FitResult> {
    check_share(share)?;
    let baseline = search_baseline(dataset).map_err(|e| e.at_stage("baseline search"))?;
    let mle = fit_mle(dataset, baseline).map_err(|e| e.at_stage("maximum likelihood"))?;
    assemble(dataset, mle, share).map_err(|e| e.at_stage("no-purchase estimation"))
}

/// Completes a fit from an MLE at a given baseline.
pub fn assemble(dataset: &TransactionDataset, mle: MleFit, share: f64) -> Result<FitResult> {
    let coeffs = &mle.coefficients;
    let gamma = estimate_gamma(coeffs, dataset, share)?;
    let g = gamma_gradient(coeffs, dataset)?;
    let cov_eta = &mle.covariance;
    let var_gamma = (g.transpose() * cov_eta * &g)[(0, 0)].max(0.0);
    let cross = g.transpose() * cov_eta;

    let dim = cov_eta.nrows() + 1;
    let mut cov = vec![vec![0.0; dim]; dim];
    cov[0][0] = var_gamma;
    for a in 0..dim - 1 {
        cov[0][a + 1] = cross[(0, a)];
        cov[a + 1][0] = cross[(0, a)];
        for b in 0..dim - 1 {
            cov[a + 1][b + 1] = cov_eta[(a, b)];
        }
    }

    let layout = coeffs.layout();
    let mut table = Vec::with_capacity(dim);
    table.push(CoefficientRow::new(
        format!("gamma (-ASC{})", coeffs.baseline),
        gamma,
        var_gamma,
    ));
    for (i, code) in layout.alpha_codes().enumerate() {
        table.push(CoefficientRow::new(
            format!("ASC{code}"),
            coeffs.alpha_star[&code],
            cov_eta[(i, i)],
        ));
    }
    for (k, name) in dataset.asv_names.iter().enumerate() {
        let i = layout.beta_index(k);
        table.push(CoefficientRow::new(
            name.clone(),
            coeffs.beta[k],
            cov_eta[(i, i)],
        ));
    }

    let no_purchase = no_purchase(gamma, coeffs, dataset)?;
    Ok(FitResult {
        coefficients: coeffs.clone().with_gamma(gamma),
        covariance: cov,
        table,
        loglik: mle.loglik,
        observed_arrivals: dataset.len(),
        no_purchase,
        market_share: share,
        convergence: mle.convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AlternativeCatalog, ChoiceSet, SetCode, TransactionRecord};

    fn dataset(choices: &[(u32, [f64; 2])]) -> TransactionDataset {
        let catalog = AlternativeCatalog::from_labels(["a", "b"]).unwrap();
        let sets =
            vec![ChoiceSet::new(SetCode(1), vec![AltCode(1), AltCode(2)], choices.len()).unwrap()];
        let records = choices
            .iter()
            .enumerate()
            .map(|(i, (c, x))| TransactionRecord {
                id: i.to_string(),
                chosen: AltCode(*c),
                set_code: SetCode(1),
                values: vec![vec![x[0]], vec![x[1]]],
            })
            .collect();
        TransactionDataset::from_parts("buy".into(), vec!["x".into()], catalog, sets, records)
            .unwrap()
    }

    #[test]
    fn symmetric_data_gives_zero_intercepts() {
        let ds = dataset(&[
            (1, [1.0, 2.0]),
            (2, [1.0, 2.0]),
            (1, [2.0, 1.0]),
            (2, [2.0, 1.0]),
        ]);
        let fit = fit_mle(&ds, AltCode(1)).unwrap();
        assert!(fit.coefficients.alpha_star[&AltCode(2)].abs() < 1e-12);
        assert!(fit.coefficients.beta[0].abs() < 1e-12);
        assert_eq!(search_baseline(&ds).unwrap(), AltCode(1));
    }

    #[test]
    fn never_chosen_alternative_is_rank_deficient() {
        let ds = dataset(&[(1, [1.0, 2.0]), (1, [2.0, 1.0])]);
        match fit_mle(&ds, AltCode(1)) {
            Err(RmmError::RankDeficient { direction }) => {
                assert!(direction.contains("never chosen"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_covariate_is_rank_deficient() {
        let ds = dataset(&[(1, [1.0, 1.0]), (2, [1.0, 1.0]), (1, [3.0, 3.0])]);
        match fit_mle(&ds, AltCode(1)) {
            Err(RmmError::RankDeficient { direction }) => {
                assert!(direction.contains("`x`"), "{direction}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn perfect_separation_is_reported() {
        // the cheaper alternative always wins: beta -> -inf
        let ds = dataset(&[
            (1, [1.0, 2.0]),
            (2, [2.0, 1.0]),
            (1, [0.0, 3.0]),
            (2, [3.0, 0.0]),
        ]);
        match fit_mle(&ds, AltCode(1)) {
            Err(RmmError::RankDeficient { direction }) => assert!(direction.contains("separated")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lowest_intercept_ties_go_to_smaller_code() {
        assert_eq!(lowest_intercept(&[0.0, 0.0, 0.0]), AltCode(1));
        assert_eq!(lowest_intercept(&[0.0, -1.0, -1.0]), AltCode(2));
        assert_eq!(lowest_intercept(&[0.0, 0.5, -0.1]), AltCode(3));
    }

    #[test]
    fn share_bounds() {
        let ds = dataset(&[(1, [1.0, 2.0]), (2, [2.0, 1.0]), (1, [3.0, 1.0])]);
        let c = fit_mle(&ds, AltCode(1)).unwrap().coefficients;
        for s in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(
                estimate_gamma(&c, &ds, s),
                Err(RmmError::Domain(_))
            ));
        }
        assert!(fit(&ds, 1.5).is_err());
    }

    #[test]
    fn even_share_means_as_many_losses_as_sales() {
        let ds = dataset(&[(1, [1.0, 2.0]), (2, [2.0, 1.0]), (1, [3.0, 1.0])]);
        let c = fit_mle(&ds, AltCode(1)).unwrap().coefficients;
        let gamma = estimate_gamma(&c, &ds, 0.5).unwrap();
        let np = no_purchase(gamma, &c, &ds).unwrap();
        assert!((np.estimate - 3.0).abs() < 1e-12);
        assert_eq!(np.total_arrivals_rounded, 6);
    }

    #[test]
    fn arrival_rounding() {
        let np = NoPurchase::from_estimate(1100.0 * 0.3 / 0.7, 1100);
        assert_eq!(np.estimate_rounded, 471);
        assert_eq!(np.total_arrivals_rounded, 1571);
        let half = NoPurchase::from_estimate(2.5, 10);
        assert_eq!(half.estimate_rounded, 3);
        assert_eq!(half.total_arrivals_rounded, 13);
    }

    #[test]
    fn zero_covariance_gives_zero_gamma_variance() {
        let ds = dataset(&[(1, [1.0, 2.0]), (2, [2.0, 1.0]), (1, [3.0, 1.0])]);
        let c = fit_mle(&ds, AltCode(1)).unwrap().coefficients;
        assert_eq!(gamma_variance(&c, &DMatrix::zeros(2, 2), &ds).unwrap(), 0.0);
    }

    #[test]
    fn p_values() {
        assert!((two_sided_p(0.0) - 1.0).abs() < 1e-15);
        assert!((two_sided_p(1.959963984540054) - 0.05).abs() < 1e-10);
        assert!((two_sided_p(-1.959963984540054) - 0.05).abs() < 1e-10);
        assert!(two_sided_p(40.0) < 1e-300);
    }
}
