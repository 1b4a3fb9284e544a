//! Utilities, choice probabilities and the observed (purchase-conditional)
//! log-likelihood with its analytic gradient and Hessian.
//!
//! Parameters are normalized against a baseline alternative `k` whose
//! intercept is pinned to zero. The flat parameter vector is laid out as the
//! non-baseline intercepts in ascending code order followed by the ASV slopes.
//! Covariates enter un-normalized: the softmax over a choice set is invariant
//! to a per-record shift, so differencing against `x_ik` changes nothing and
//! would require the baseline to be present in every set.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{AltCode, ChoiceSet, TransactionDataset};
use crate::error::{Result, RmmError};

/// Baseline-normalized intercepts, slopes, and (once estimated) the
/// no-purchase parameter `gamma = -alpha_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCoefficients {
    pub baseline: AltCode,
    pub alpha_star: BTreeMap<AltCode, f64>,
    pub beta: Vec<f64>,
    pub gamma: Option<f64>,
}

impl ModelCoefficients {
    /// `intercepts[j-1]` is the intercept of alternative `j`; the baseline's
    /// entry must be zero.
    pub fn from_intercepts(baseline: AltCode, intercepts: &[f64], beta: Vec<f64>) -> Result<Self> {
        if baseline.0 == 0 || baseline.index() >= intercepts.len() {
            return Err(RmmError::Domain(format!(
                "baseline {baseline} outside 1..={}",
                intercepts.len()
            )));
        }
        if intercepts[baseline.index()] != 0.0 {
            return Err(RmmError::Domain(
                "baseline intercept must be exactly zero".into(),
            ));
        }
        let alpha_star = intercepts
            .iter()
            .enumerate()
            .map(|(i, &a)| (AltCode(i as u32 + 1), a))
            .filter(|(c, _)| *c != baseline)
            .collect();
        Ok(Self {
            baseline,
            alpha_star,
            beta,
            gamma: None,
        })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn n_alternatives(&self) -> usize {
        self.alpha_star.len() + 1
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.n_alternatives(), self.baseline, self.beta.len())
    }

    /// Intercept of `code`; zero for the baseline.
    pub fn intercept(&self, code: AltCode) -> Result<f64> {
        if code == self.baseline {
            return Ok(0.0);
        }
        self.alpha_star
            .get(&code)
            .copied()
            .ok_or_else(|| RmmError::Domain(format!("unknown alternative {code}")))
    }

    /// Dense intercepts indexed by `code - 1`, baseline included as zero.
    pub fn intercepts(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_alternatives()];
        for (c, a) in &self.alpha_star {
            out[c.index()] = *a;
        }
        out
    }

    /// Flat `(alpha*_{-k}, beta)` vector.
    pub fn params(&self) -> Vec<f64> {
        self.alpha_star
            .values()
            .copied()
            .chain(self.beta.iter().copied())
            .collect()
    }

    pub fn from_params(layout: &ParamLayout, params: &[f64]) -> Result<Self> {
        layout.check(params)?;
        Ok(Self {
            baseline: layout.baseline,
            alpha_star: layout.alpha_codes().zip(params.iter().copied()).collect(),
            beta: params[layout.n_alternatives - 1..].to_vec(),
            gamma: None,
        })
    }
}

/// Index map between alternatives/ASVs and the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub n_alternatives: usize,
    pub baseline: AltCode,
    pub n_asv: usize,
}

impl ParamLayout {
    pub fn new(n_alternatives: usize, baseline: AltCode, n_asv: usize) -> Self {
        Self {
            n_alternatives,
            baseline,
            n_asv,
        }
    }

    pub fn for_dataset(dataset: &TransactionDataset, baseline: AltCode) -> Result<Self> {
        if !dataset.catalog.contains(baseline) {
            return Err(RmmError::Domain(format!(
                "baseline {baseline} is not a catalogued alternative"
            )));
        }
        Ok(Self::new(
            dataset.n_alternatives(),
            baseline,
            dataset.n_asv(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.n_alternatives - 1 + self.n_asv
    }

    /// Flat index of `code`'s intercept, `None` for the baseline.
    pub fn alpha_index(&self, code: AltCode) -> Option<usize> {
        use std::cmp::Ordering::*;
        match code.cmp(&self.baseline) {
            Less => Some(code.index()),
            Equal => None,
            Greater => Some(code.index() - 1),
        }
    }

    pub fn beta_index(&self, asv: usize) -> usize {
        self.n_alternatives - 1 + asv
    }

    /// Non-baseline codes in flat order.
    pub fn alpha_codes(&self) -> impl Iterator<Item = AltCode> + '_ {
        (1..=self.n_alternatives as u32)
            .map(AltCode)
            .filter(move |c| *c != self.baseline)
    }

    fn check(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.dim() {
            return Err(RmmError::Domain(format!(
                "parameter vector has length {}, expected {}",
                params.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn intercepts(&self, params: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_alternatives];
        for (c, a) in self.alpha_codes().zip(params) {
            out[c.index()] = *a;
        }
        out
    }
}

/// Numerically stable `log(sum(exp(x)))`. Returns `-inf` for empty input.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean utility `alpha*_code + beta . x`.
pub fn utility(coeffs: &ModelCoefficients, code: AltCode, asv_row: &[f64]) -> Result<f64> {
    if asv_row.len() != coeffs.beta.len() {
        return Err(RmmError::Domain(format!(
            "expected {} ASV values, got {}",
            coeffs.beta.len(),
            asv_row.len()
        )));
    }
    Ok(coeffs.intercept(code)? + dot(&coeffs.beta, asv_row))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn set_utilities(
    coeffs: &ModelCoefficients,
    set: &ChoiceSet,
    asv_rows: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(RmmError::Domain("choice set is empty".into()));
    }
    if asv_rows.len() != set.len() {
        return Err(RmmError::Domain(format!(
            "choice set has {} alternatives but {} ASV rows were given",
            set.len(),
            asv_rows.len()
        )));
    }
    set.codes
        .iter()
        .zip(asv_rows)
        .map(|(c, x)| utility(coeffs, *c, x))
        .collect()
}

/// Softmax over the exposed set (no-purchase excluded).
pub fn purchase_probabilities(
    coeffs: &ModelCoefficients,
    set: &ChoiceSet,
    asv_rows: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let v = set_utilities(coeffs, set, asv_rows)?;
    let lse = log_sum_exp(&v);
    Ok(v.iter().map(|u| (u - lse).exp()).collect())
}

/// Probabilities including the no-purchase option, whose utility is `gamma`
/// on the normalized scale. Returns `(p0, p)`.
pub fn full_probabilities(
    coeffs: &ModelCoefficients,
    set: &ChoiceSet,
    asv_rows: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    let gamma = coeffs
        .gamma
        .ok_or_else(|| RmmError::State("no-purchase parameter has not been estimated".into()))?;
    let mut v = set_utilities(coeffs, set, asv_rows)?;
    v.push(gamma);
    let lse = log_sum_exp(&v);
    let p0 = (gamma - lse).exp();
    v.pop();
    Ok((p0, v.iter().map(|u| (u - lse).exp()).collect()))
}

/// Which derivatives [`observed_loglik`] should compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivatives {
    None,
    Gradient,
    Hessian,
}

#[derive(Clone, Debug)]
pub struct LikelihoodWorkspace {
    pub value: f64,
    pub gradient: Option<DVector<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Observed log-likelihood at `params`, with the analytic conditional-logit
/// gradient `sum_i (z_i,chosen - zbar_i)` and Hessian
/// `-sum_i sum_j p_ij (z_ij - zbar_i)(z_ij - zbar_i)'` when requested.
///
/// Records are summed sequentially in dataset order.
pub fn observed_loglik(
    params: &[f64],
    dataset: &TransactionDataset,
    baseline: AltCode,
    order: Derivatives,
) -> Result<LikelihoodWorkspace> {
    let layout = ParamLayout::for_dataset(dataset, baseline)?;
    layout.check(params)?;
    if dataset.is_empty() {
        return Err(RmmError::EmptyDataset);
    }
    let dim = layout.dim();
    let n_asv = layout.n_asv;
    let intercepts = layout.intercepts(params);
    let beta = &params[dim - n_asv..];

    let want_grad = order != Derivatives::None;
    let want_hess = order == Derivatives::Hessian;
    let mut value = 0.0;
    let mut grad = vec![0.0; if want_grad { dim } else { 0 }];
    let mut hess = vec![0.0; if want_hess { dim * dim } else { 0 }];

    let mut util = Vec::new();
    let mut prob = Vec::new();
    let mut zbar = vec![0.0; dim];
    let mut dev = vec![0.0; dim];

    for (i, r) in dataset.records.iter().enumerate() {
        let set = dataset.record_set(r);
        util.clear();
        util.extend(
            set.codes
                .iter()
                .zip(&r.values)
                .map(|(c, x)| intercepts[c.index()] + dot(beta, x)),
        );
        let lse = log_sum_exp(&util);
        let pos = set.position(r.chosen).expect("validated dataset");
        let term = util[pos] - lse;
        if !term.is_finite() {
            return Err(RmmError::NonFinite {
                record: i,
                message: format!("log-probability of record `{}` is {term}", r.id),
            });
        }
        value += term;
        if !want_grad {
            continue;
        }

        prob.clear();
        prob.extend(util.iter().map(|u| (u - lse).exp()));
        zbar.iter_mut().for_each(|z| *z = 0.0);
        for ((c, x), p) in set.codes.iter().zip(&r.values).zip(&prob) {
            if let Some(a) = layout.alpha_index(*c) {
                zbar[a] += p;
            }
            for (k, xv) in x.iter().enumerate() {
                zbar[dim - n_asv + k] += p * xv;
            }
        }
        if let Some(a) = layout.alpha_index(r.chosen) {
            grad[a] += 1.0;
        }
        for (k, xv) in r.values[pos].iter().enumerate() {
            grad[dim - n_asv + k] += xv;
        }
        for (g, z) in grad.iter_mut().zip(&zbar) {
            *g -= z;
        }

        if !want_hess {
            continue;
        }
        for ((c, x), p) in set.codes.iter().zip(&r.values).zip(&prob) {
            for (d, z) in dev.iter_mut().zip(&zbar) {
                *d = -z;
            }
            if let Some(a) = layout.alpha_index(*c) {
                dev[a] += 1.0;
            }
            for (k, xv) in x.iter().enumerate() {
                dev[dim - n_asv + k] += xv;
            }
            for a in 0..dim {
                let pa = p * dev[a];
                if pa == 0.0 {
                    continue;
                }
                for b in a..dim {
                    hess[a * dim + b] -= pa * dev[b];
                }
            }
        }
    }

    let gradient = want_grad.then(|| DVector::from_vec(grad));
    let hessian = want_hess.then(|| {
        let mut h = DMatrix::from_row_slice(dim, dim, &hess);
        for a in 0..dim {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        h
    });
    Ok(LikelihoodWorkspace {
        value,
        gradient,
        hessian,
    })
}
