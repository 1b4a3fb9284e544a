//! Ground-truth data generation and brute-force reference computations.
//!
//! Arrivals are i.i.d.: each draws a choice set from a weighted menu, ASVs
//! uniformly from configured ranges, and an outcome (possibly no purchase)
//! from the full model. Dropping the no-purchase arrivals yields censored
//! transaction data that flows through the ordinary reshape/fit pipeline.

use std::io::{Read, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{reshape, AltCode, LongColumns, LongRow, RawData, RawRows, TransactionDataset};
use crate::error::{Result, RmmError};
use crate::estimation::{self, FitResult};
use crate::likelihood::{log_sum_exp, ModelCoefficients, ParamLayout};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuEntry {
    pub codes: Vec<u32>,
    pub weight: f64,
}

/// How the no-purchase level is pinned.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoPurchaseLevel {
    /// Utility of no purchase on the same scale as `alpha`.
    Gamma(f64),
    /// Expected fraction of arrivals that purchase; gamma is calibrated.
    TargetShare(f64),
}

fn default_asv_names() -> Vec<String> {
    vec!["Price".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Intercept of each alternative `1..=J`.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub no_purchase: NoPurchaseLevel,
    pub menu: Vec<MenuEntry>,
    /// `(low, high)` per ASV.
    pub asv_ranges: Vec<(f64, f64)>,
    #[serde(default = "default_asv_names")]
    pub asv_names: Vec<String>,
    pub n_arrivals: usize,
    pub seed: u64,
}

/// Draws used to calibrate gamma and compute the expected share. Fixed, so
/// every replication of a scenario shares one true gamma.
const CALIBRATION_DRAWS: usize = 200_000;
const CALIBRATION_SEED: u64 = 0x5EED_CA1B;

impl ScenarioSpec {
    /// Five alternatives with intercepts `0, 0.5, .., 2`, price slope -0.01,
    /// prices in 100..700, and a menu of overlapping sets.
    pub fn reference(n_arrivals: usize, target_share: f64, seed: u64) -> Self {
        let set = |codes: &[u32], weight: f64| MenuEntry {
            codes: codes.to_vec(),
            weight,
        };
        Self {
            alpha: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            beta: vec![-0.01],
            no_purchase: NoPurchaseLevel::TargetShare(target_share),
            menu: vec![
                set(&[1, 2, 3, 4, 5], 0.3),
                set(&[1, 2, 3], 0.2),
                set(&[2, 4, 5], 0.2),
                set(&[1, 3, 5], 0.15),
                set(&[1, 4], 0.15),
            ],
            asv_ranges: vec![(100.0, 700.0)],
            asv_names: default_asv_names(),
            n_arrivals,
            seed,
        }
    }

    pub fn n_alternatives(&self) -> usize {
        self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.alpha.len();
        let bad = |m: String| Err(RmmError::Domain(m));
        if j < 2 {
            return bad("a scenario needs at least two alternatives".into());
        }
        if self.beta.is_empty()
            || self.beta.len() != self.asv_ranges.len()
            || self.beta.len() != self.asv_names.len()
        {
            return bad("beta, asv_ranges and asv_names must have the same nonzero length".into());
        }
        if self.n_arrivals == 0 {
            return bad("n_arrivals must be at least 1".into());
        }
        if self.menu.is_empty() {
            return bad("menu is empty".into());
        }
        let mut offered = vec![false; j];
        for m in &self.menu {
            if !(m.weight > 0.0 && m.weight.is_finite()) {
                return bad(format!("menu weight {} is not positive", m.weight));
            }
            if m.codes.len() < 2 || m.codes.windows(2).any(|w| w[0] >= w[1]) {
                return bad("menu sets need two or more strictly increasing codes".into());
            }
            for &c in &m.codes {
                if c == 0 || c as usize > j {
                    return bad(format!("menu code {c} outside 1..={j}"));
                }
                offered[c as usize - 1] = true;
            }
        }
        if let Some(i) = offered.iter().position(|o| !o) {
            return bad(format!("alternative {} never appears in the menu", i + 1));
        }
        for &(lo, hi) in &self.asv_ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("invalid ASV range ({lo}, {hi})"));
            }
        }
        if self.alpha.iter().chain(&self.beta).any(|v| !v.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        match self.no_purchase {
            NoPurchaseLevel::TargetShare(s) if !(s > 0.0 && s < 1.0) => {
                bad(format!("target share {s} outside (0,1)"))
            }
            NoPurchaseLevel::Gamma(g) if g.is_nan() || g == f64::INFINITY => {
                bad(format!("invalid gamma {g}"))
            }
            _ => Ok(()),
        }
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let spec: Self = serde_json::from_reader(reader)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        let width = self.n_alternatives().to_string().len();
        (1..=self.n_alternatives())
            .map(|c| format!("Alt_{c:0width$}"))
            .collect()
    }

    fn draw_offer(
        &self,
        rng: &mut ChaCha8Rng,
        menu: &WeightedIndex<f64>,
    ) -> (usize, Vec<Vec<f64>>) {
        let m = menu.sample(rng);
        let values = self.menu[m]
            .codes
            .iter()
            .map(|_| {
                self.asv_ranges
                    .iter()
                    .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
                    .collect()
            })
            .collect();
        (m, values)
    }

    fn utilities(&self, menu_index: usize, values: &[Vec<f64>]) -> Vec<f64> {
        self.menu[menu_index]
            .codes
            .iter()
            .zip(values)
            .map(|(&c, x)| {
                self.alpha[c as usize - 1]
                    + x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    fn menu_index(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(self.menu.iter().map(|m| m.weight)).expect("validated weights")
    }

    // log sum exp(v) over the offered set, for the calibration sample
    fn calibration_sample(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
        let menu = self.menu_index();
        (0..CALIBRATION_DRAWS)
            .map(|_| {
                let (m, x) = self.draw_offer(&mut rng, &menu);
                log_sum_exp(&self.utilities(m, &x))
            })
            .collect()
    }

    /// Expected purchase share at a given gamma, by averaging over a fixed
    /// calibration sample of offers.
    pub fn expected_share(&self, gamma: f64) -> f64 {
        share_on_sample(&self.calibration_sample(), gamma)
    }

    /// The gamma in force: given directly, or solved so the expected share
    /// hits the target.
    pub fn resolve_gamma(&self) -> f64 {
        match self.no_purchase {
            NoPurchaseLevel::Gamma(g) => g,
            NoPurchaseLevel::TargetShare(s) => {
                let sample = self.calibration_sample();
                // share is decreasing in gamma; bracket then bisect
                let (mut lo, mut hi) = (-1.0, 1.0);
                while share_on_sample(&sample, lo) < s {
                    lo *= 2.0;
                }
                while share_on_sample(&sample, hi) > s {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if share_on_sample(&sample, mid) > s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-13 {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// The generating market share: the target, or the expected share at the
    /// given gamma.
    pub fn true_share(&self) -> f64 {
        match self.no_purchase {
            NoPurchaseLevel::TargetShare(s) => s,
            NoPurchaseLevel::Gamma(g) => self.expected_share(g),
        }
    }

    /// True coefficients normalized against `baseline`.
    pub fn true_coefficients(&self, baseline: AltCode) -> Result<ModelCoefficients> {
        let k =
            self.alpha.get(baseline.index()).copied().ok_or_else(|| {
                RmmError::Domain(format!("baseline {baseline} outside the scenario"))
            })?;
        let shifted: Vec<f64> = self.alpha.iter().map(|a| a - k).collect();
        let mut shifted = shifted;
        shifted[baseline.index()] = 0.0;
        Ok(
            ModelCoefficients::from_intercepts(baseline, &shifted, self.beta.clone())?
                .with_gamma(self.resolve_gamma() - k),
        )
    }
}

fn share_on_sample(log_s: &[f64], gamma: f64) -> f64 {
    // P(purchase) = S / (e^gamma + S) = 1 / (1 + e^(gamma - log S))
    log_s
        .iter()
        .map(|ls| 1.0 / (1.0 + (gamma - ls).exp()))
        .sum::<f64>()
        / log_s.len() as f64
}

/// One arrival, purchase or not.
#[derive(Clone, Debug, PartialEq)]
pub struct Arrival {
    pub id: String,
    pub codes: Vec<AltCode>,
    pub values: Vec<Vec<f64>>,
    pub outcome: Option<AltCode>,
}

#[derive(Clone, Debug)]
pub struct SimulatedData {
    pub arrivals: Vec<Arrival>,
    pub censored: TransactionDataset,
    /// Purchases over arrivals.
    pub realized_share: f64,
    pub gamma: f64,
}

impl SimulatedData {
    pub fn n_purchases(&self) -> usize {
        self.censored.len() + self.censored.dropped_singletons
    }
}

/// Simulates arrivals from the full model and censors the no-purchases.
pub fn generate(spec: &ScenarioSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let gamma = spec.resolve_gamma();
    generate_with_gamma(spec, gamma)
}

fn generate_with_gamma(spec: &ScenarioSpec, gamma: f64) -> Result<SimulatedData> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let menu = spec.menu_index();
    let width = spec.n_arrivals.to_string().len();
    let mut arrivals = Vec::with_capacity(spec.n_arrivals);
    for i in 0..spec.n_arrivals {
        let (m, values) = spec.draw_offer(&mut rng, &menu);
        let mut util = spec.utilities(m, &values);
        util.push(gamma);
        let lse = log_sum_exp(&util);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut outcome = None;
        for (p, &c) in util.iter().zip(&spec.menu[m].codes) {
            acc += (p - lse).exp();
            if u < acc {
                outcome = Some(AltCode(c));
                break;
            }
        }
        arrivals.push(Arrival {
            id: format!("{:0width$}", i + 1),
            codes: spec.menu[m].codes.iter().map(|&c| AltCode(c)).collect(),
            values,
            outcome,
        });
    }
    let purchases = arrivals.iter().filter(|a| a.outcome.is_some()).count();
    let censored = censor(spec, &arrivals)?;
    Ok(SimulatedData {
        realized_share: purchases as f64 / arrivals.len() as f64,
        arrivals,
        censored,
        gamma,
    })
}

fn long_rows(spec: &ScenarioSpec, arrivals: &[Arrival], purchases_only: bool) -> Vec<LongRow> {
    let labels = spec.labels();
    arrivals
        .iter()
        .filter(|a| !purchases_only || a.outcome.is_some())
        .flat_map(|a| {
            let labels = &labels;
            a.codes.iter().zip(&a.values).map(move |(c, x)| LongRow {
                id: a.id.clone(),
                purchased: a.outcome == Some(*c),
                alternative: labels[c.index()].clone(),
                values: x.iter().map(|v| Some(*v)).collect(),
            })
        })
        .collect()
}

fn censor(spec: &ScenarioSpec, arrivals: &[Arrival]) -> Result<TransactionDataset> {
    let raw = RawData {
        response: "Purchase".into(),
        asv_names: spec.asv_names.clone(),
        rows: RawRows::Long(long_rows(spec, arrivals, true)),
    };
    reshape(&raw, 1)
}

/// Column names used when writing simulated data in long layout.
pub fn long_columns(spec: &ScenarioSpec) -> LongColumns {
    LongColumns {
        idvar: "Arrival_ID".into(),
        resp: "Purchase".into(),
        alts: "Alternative".into(),
        asv: spec.asv_names.clone(),
    }
}

/// Writes every arrival, purchases and no-purchases alike, in long layout.
pub fn write_arrivals<W: Write>(
    spec: &ScenarioSpec,
    arrivals: &[Arrival],
    delimiter: u8,
    writer: W,
) -> Result<()> {
    let cols = long_columns(spec);
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    let mut header = vec![cols.idvar, cols.resp, cols.alts];
    header.extend(cols.asv);
    w.write_record(&header)?;
    for r in long_rows(spec, arrivals, false) {
        let mut row = vec![
            r.id,
            if r.purchased { "1" } else { "0" }.to_string(),
            r.alternative,
        ];
        row.extend(r.values.iter().map(|v| v.unwrap_or_default().to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Complete-data view: the no-purchase option becomes an extra alternative
/// `J + 1` with all ASVs zero, so its intercept plays the role of gamma.
pub fn complete_dataset(spec: &ScenarioSpec, arrivals: &[Arrival]) -> Result<TransactionDataset> {
    let mut labels = spec.labels();
    let none_label = "~No_Purchase".to_string();
    labels.push(none_label.clone());
    let zeros = vec![Some(0.0); spec.beta.len()];
    let mut rows = Vec::new();
    for a in arrivals {
        for (c, x) in a.codes.iter().zip(&a.values) {
            rows.push(LongRow {
                id: a.id.clone(),
                purchased: a.outcome == Some(*c),
                alternative: labels[c.index()].clone(),
                values: x.iter().map(|v| Some(*v)).collect(),
            });
        }
        rows.push(LongRow {
            id: a.id.clone(),
            purchased: a.outcome.is_none(),
            alternative: none_label.clone(),
            values: zeros.clone(),
        });
    }
    reshape(
        &RawData {
            response: "Purchase".into(),
            asv_names: spec.asv_names.clone(),
            rows: RawRows::Long(rows),
        },
        1,
    )
}

/// Direct, unstabilized observed log-likelihood: plain exponentials and
/// ratios. Fails when any utility reaches 500 in magnitude.
pub fn brute_force_loglik(
    params: &[f64],
    dataset: &TransactionDataset,
    baseline: AltCode,
) -> Result<f64> {
    let layout = ParamLayout::for_dataset(dataset, baseline)?;
    let coeffs = ModelCoefficients::from_params(&layout, params)?;
    let mut total = 0.0;
    for (i, r) in dataset.records.iter().enumerate() {
        let set = dataset.record_set(r);
        let mut denom = 0.0;
        let mut numer = 0.0;
        for (c, x) in set.codes.iter().zip(&r.values) {
            let mut v = coeffs.intercept(*c)?;
            for (b, xv) in coeffs.beta.iter().zip(x) {
                v += b * xv;
            }
            if v.abs() >= 500.0 {
                return Err(RmmError::NonFinite {
                    record: i,
                    message: format!("utility {v} would overflow the direct evaluation"),
                });
            }
            let e = v.exp();
            denom += e;
            if *c == r.chosen {
                numer = e;
            }
        }
        total += (numer / denom).ln();
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub params: Vec<f64>,
    pub value: f64,
    /// Grid step actually used per dimension.
    pub resolution: Vec<f64>,
    pub on_boundary: bool,
}

/// Exhaustive grid maximization of [`brute_force_loglik`] over at most two
/// parameters. Grid points closer than `resolution` cover each interval
/// including both ends.
pub fn grid_search_mle(
    dataset: &TransactionDataset,
    baseline: AltCode,
    bounds: &[(f64, f64)],
    resolution: f64,
) -> Result<GridResult> {
    let layout = ParamLayout::for_dataset(dataset, baseline)?;
    if layout.dim() > 2 || bounds.len() != layout.dim() {
        return Err(RmmError::Unsupported(format!(
            "grid search supports at most two parameters with matching bounds (model has {})",
            layout.dim()
        )));
    }
    if resolution.is_nan()
        || resolution <= 0.0
        || bounds
            .iter()
            .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
    {
        return Err(RmmError::Domain(
            "grid bounds must be finite and resolution positive".into(),
        ));
    }
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            let steps = ((hi - lo) / resolution).ceil().max(1.0) as usize;
            (0..=steps)
                .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
                .collect()
        })
        .collect();
    let step: Vec<f64> = axes
        .iter()
        .map(|a| if a.len() > 1 { a[1] - a[0] } else { 0.0 })
        .collect();

    let points: Vec<Vec<usize>> = match axes.len() {
        1 => (0..axes[0].len()).map(|i| vec![i]).collect(),
        _ => (0..axes[0].len())
            .flat_map(|i| (0..axes[1].len()).map(move |j| vec![i, j]))
            .collect(),
    };
    let values: Vec<Result<f64>> = points
        .par_iter()
        .map(|idx| {
            let p: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
            brute_force_loglik(&p, dataset, baseline)
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (bi, value) = best.expect("grid is nonempty");
    let idx = &points[bi];
    Ok(GridResult {
        params: idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect(),
        value,
        resolution: step,
        on_boundary: idx
            .iter()
            .zip(&axes)
            .any(|(&i, a)| a.len() > 1 && (i == 0 || i == a.len() - 1)),
    })
}

/// One replication of a recovery study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub seed: u64,
    pub purchases: usize,
    pub realized_share: f64,
    pub baseline: u32,
    pub beta: Vec<f64>,
    pub beta_se: Vec<f64>,
    pub gamma: f64,
    pub gamma_se: f64,
    /// True gamma relative to the fitted baseline.
    pub gamma_true: f64,
    pub arrivals_estimate: f64,
    pub arrivals_true: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub replications: usize,
    pub failures: usize,
    pub n_arrivals: usize,
    /// Fraction of replications whose `beta_hat +- 3 SE` covers the truth.
    pub beta_coverage: Vec<f64>,
    pub mean_abs_beta_error: Vec<f64>,
    pub mean_abs_gamma_error: f64,
    pub gamma_empirical_sd: f64,
    pub gamma_mean_se: f64,
    pub mean_abs_arrival_error: f64,
    /// Same, for the naive estimate that takes purchases as all arrivals.
    pub mean_abs_arrival_error_naive: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryStudy {
    pub replications: Vec<Replication>,
    pub summary: RecoverySummary,
}

/// SplitMix64 finalizer; derives independent per-replication seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates `replications` datasets in parallel and fits each with the true
/// market share. Results do not depend on thread scheduling.
pub fn recovery_study(spec: &ScenarioSpec, replications: usize) -> Result<RecoveryStudy> {
    spec.validate()?;
    let gamma = spec.resolve_gamma();
    let share = spec.true_share();
    let outcomes: Vec<Option<Replication>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(spec.seed, r as u64);
            let mut s = spec.clone();
            s.seed = seed;
            let data = generate_with_gamma(&s, gamma).ok()?;
            let fit = estimation::fit(&data.censored, share).ok()?;
            Some(replication(spec, seed, gamma, &data, &fit))
        })
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let reps: Vec<Replication> = outcomes.into_iter().flatten().collect();
    let summary = summarize(spec, &reps, failures);
    Ok(RecoveryStudy {
        replications: reps,
        summary,
    })
}

fn replication(
    spec: &ScenarioSpec,
    seed: u64,
    gamma: f64,
    data: &SimulatedData,
    fit: &FitResult,
) -> Replication {
    let baseline = fit.coefficients.baseline;
    let n_alpha = spec.n_alternatives() - 1;
    Replication {
        seed,
        purchases: data.censored.len(),
        realized_share: data.realized_share,
        baseline: baseline.0,
        beta: fit.coefficients.beta.clone(),
        beta_se: fit.table[1 + n_alpha..]
            .iter()
            .map(|r| r.std_error)
            .collect(),
        gamma: fit.gamma(),
        gamma_se: fit.table[0].std_error,
        gamma_true: gamma - spec.alpha[baseline.index()],
        arrivals_estimate: fit.no_purchase.total_arrivals,
        arrivals_true: data.arrivals.len(),
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn summarize(spec: &ScenarioSpec, reps: &[Replication], failures: usize) -> RecoverySummary {
    let k = spec.beta.len();
    let beta_coverage = (0..k)
        .map(|a| {
            mean(
                reps.iter()
                    .map(|r| ((r.beta[a] - spec.beta[a]).abs() <= 3.0 * r.beta_se[a]) as u8 as f64),
            )
        })
        .collect();
    let mean_abs_beta_error = (0..k)
        .map(|a| mean(reps.iter().map(|r| (r.beta[a] - spec.beta[a]).abs())))
        .collect();
    let gamma_mean = mean(reps.iter().map(|r| r.gamma - r.gamma_true));
    let gamma_var = mean(
        reps.iter()
            .map(|r| (r.gamma - r.gamma_true - gamma_mean).powi(2)),
    ) * reps.len() as f64
        / (reps.len().max(2) - 1) as f64;
    RecoverySummary {
        replications: reps.len() + failures,
        failures,
        n_arrivals: spec.n_arrivals,
        beta_coverage,
        mean_abs_beta_error,
        mean_abs_gamma_error: mean(reps.iter().map(|r| (r.gamma - r.gamma_true).abs())),
        gamma_empirical_sd: gamma_var.sqrt(),
        gamma_mean_se: mean(reps.iter().map(|r| r.gamma_se)),
        mean_abs_arrival_error: mean(
            reps.iter()
                .map(|r| (r.arrivals_estimate - r.arrivals_true as f64).abs()),
        ),
        mean_abs_arrival_error_naive: mean(
            reps.iter()
                .map(|r| (r.purchases as f64 - r.arrivals_true as f64).abs()),
        ),
    }
}

/// One row per replication.
pub fn write_recovery_table<W: Write>(
    study: &RecoveryStudy,
    delimiter: u8,
    writer: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    let k = study.summary.beta_coverage.len();
    let mut header: Vec<String> = ["seed", "purchases", "realized_share", "baseline"]
        .map(String::from)
        .to_vec();
    for a in 0..k {
        header.push(format!("beta_{}", a + 1));
        header.push(format!("beta_se_{}", a + 1));
    }
    header.extend(
        [
            "gamma",
            "gamma_se",
            "gamma_true",
            "arrivals_estimate",
            "arrivals_true",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in &study.replications {
        let mut row = vec![
            r.seed.to_string(),
            r.purchases.to_string(),
            r.realized_share.to_string(),
            r.baseline.to_string(),
        ];
        for a in 0..k {
            row.push(r.beta[a].to_string());
            row.push(r.beta_se[a].to_string());
        }
        row.extend([
            r.gamma.to_string(),
            r.gamma_se.to_string(),
            r.gamma_true.to_string(),
            r.arrivals_estimate.to_string(),
            r.arrivals_true.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_spec_is_valid() {
        let spec = ScenarioSpec::reference(100, 0.7, 1);
        spec.validate().unwrap();
        assert_eq!(spec.labels()[0], "Alt_1");
        let mut wide = spec.clone();
        wide.alpha = vec![0.0; 12];
        assert_eq!(wide.labels()[0], "Alt_01");
    }

    #[test]
    fn invalid_specs() {
        let base = ScenarioSpec::reference(100, 0.7, 1);
        let mut s = base.clone();
        s.alpha = vec![0.0];
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.menu[0].weight = 0.0;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.no_purchase = NoPurchaseLevel::TargetShare(1.0);
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.menu = vec![MenuEntry {
            codes: vec![1, 2],
            weight: 1.0,
        }];
        assert!(s.validate().is_err(), "alternatives 3..5 never offered");
        let mut s = base;
        s.n_arrivals = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = ScenarioSpec::reference(500, 0.7, 9);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.arrivals, b.arrivals);
        assert_eq!(a.censored, b.censored);
    }

    #[test]
    fn no_censoring_when_gamma_is_minus_infinity() {
        let mut spec = ScenarioSpec::reference(300, 0.7, 3);
        spec.no_purchase = NoPurchaseLevel::Gamma(f64::NEG_INFINITY);
        let data = generate(&spec).unwrap();
        assert_eq!(data.censored.len(), 300);
        assert_eq!(data.realized_share, 1.0);
    }

    #[test]
    fn gamma_calibration_hits_target() {
        let spec = ScenarioSpec::reference(10, 0.7, 1);
        let g = spec.resolve_gamma();
        assert!((spec.expected_share(g) - 0.7).abs() < 1e-10);
    }

    #[test]
    fn censored_codes_match_scenario_codes() {
        let spec = ScenarioSpec::reference(2000, 0.7, 5);
        let data = generate(&spec).unwrap();
        assert_eq!(data.censored.n_alternatives(), 5);
        for (i, label) in spec.labels().iter().enumerate() {
            assert_eq!(
                data.censored.catalog.code_of(label),
                Some(AltCode(i as u32 + 1))
            );
        }
    }

    #[test]
    fn seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
