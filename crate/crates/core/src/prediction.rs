//! Choice probabilities for new offers and the decisions drawn from them.

use std::fmt;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AltCode, ChoiceSet, SetCode};
use crate::error::{Result, RmmError};
use crate::likelihood::{full_probabilities, purchase_probabilities, ModelCoefficients};
use crate::model::FittedModel;

/// How a decision is read off a probability row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionMode {
    /// Most probable alternative; ties go to the smaller code.
    Fixed,
    /// One categorical draw per row. Row `r` uses ChaCha8 seeded with `seed`
    /// on stream `r`, so draws do not depend on evaluation order.
    Sampled { seed: u64 },
}

impl fmt::Display for DecisionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionMode::Fixed => f.write_str("fixed"),
            DecisionMode::Sampled { .. } => f.write_str("sampled"),
        }
    }
}

/// One offer: `values[p][a]` is ASV `a` for the `p`-th alternative of the set.
pub type OfferRow = Vec<Vec<f64>>;

/// Purchase-conditional probabilities, one row per offer.
pub fn predict_probabilities(
    coeffs: &ModelCoefficients,
    set: &ChoiceSet,
    rows: &[OfferRow],
) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| purchase_probabilities(coeffs, set, r))
        .collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in row.iter().enumerate().skip(1) {
        if p > row[best] {
            best = i;
        }
    }
    best
}

fn sample(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// Decisions for each probability row. `codes` label the columns and must be
/// ascending.
pub fn decide(probabilities: &[Vec<f64>], codes: &[AltCode], mode: DecisionMode) -> Vec<AltCode> {
    probabilities
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let idx = match mode {
                DecisionMode::Fixed => argmax(row),
                DecisionMode::Sampled { seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(r as u64);
                    sample(row, &mut rng)
                }
            };
            codes[idx]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub set_code: SetCode,
    pub codes: Vec<AltCode>,
    pub probabilities: Vec<Vec<f64>>,
    pub decisions: Vec<AltCode>,
    pub mode: DecisionMode,
    /// No-purchase probability per row under the full model, when requested.
    pub no_purchase: Option<Vec<f64>>,
}

pub fn predict(
    model: &FittedModel,
    rows: &[OfferRow],
    set_code: SetCode,
    mode: DecisionMode,
    with_no_purchase: bool,
) -> Result<PredictionResult> {
    let set = model.set(set_code)?;
    let coeffs = &model.fit.coefficients;
    let probabilities = predict_probabilities(coeffs, set, rows)?;
    let decisions = decide(&probabilities, &set.codes, mode);
    let no_purchase = if with_no_purchase {
        Some(
            rows.iter()
                .map(|r| full_probabilities(coeffs, set, r).map(|(p0, _)| p0))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(PredictionResult {
        set_code,
        codes: set.codes.clone(),
        probabilities,
        decisions,
        mode,
        no_purchase,
    })
}

/// Reads offers from delimited text with `<asv>_<code>` columns for every
/// alternative of `set`. Other columns are ignored.
pub fn read_offer_rows<R: Read>(
    reader: R,
    asv_names: &[String],
    set: &ChoiceSet,
    delimiter: u8,
) -> Result<Vec<OfferRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut columns = Vec::with_capacity(set.len());
    for code in &set.codes {
        let mut per_asv = Vec::with_capacity(asv_names.len());
        for name in asv_names {
            let col = format!("{name}_{code}");
            let idx = headers
                .iter()
                .position(|h| h == col)
                .ok_or(RmmError::MissingColumn(col))?;
            per_asv.push(idx);
        }
        columns.push(per_asv);
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(set.len());
        for per_asv in &columns {
            let mut v = Vec::with_capacity(per_asv.len());
            for &c in per_asv {
                let cell = rec.get(c).unwrap_or("");
                let x = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| RmmError::InvalidValue {
                        row: i + 1,
                        message: format!("column `{}` holds `{cell}`", &headers[c]),
                    })?;
                v.push(x);
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `# key=value` header lines, then `Alts_<code>` probability columns,
/// an optional `No_Purchase` column, and `Decision`.
pub fn write_predictions<W: Write>(
    result: &PredictionResult,
    delimiter: u8,
    mut writer: W,
) -> Result<()> {
    let seed = match result.mode {
        DecisionMode::Sampled { seed } => seed.to_string(),
        DecisionMode::Fixed => "none".into(),
    };
    writeln!(writer, "# set_code={}", result.set_code)?;
    writeln!(writer, "# mode={}", result.mode)?;
    writeln!(writer, "# seed={seed}")?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    let mut header: Vec<String> = result.codes.iter().map(|c| format!("Alts_{c}")).collect();
    if result.no_purchase.is_some() {
        header.push("No_Purchase".into());
    }
    header.push("Decision".into());
    w.write_record(&header)?;
    for (r, row) in result.probabilities.iter().enumerate() {
        let mut out: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        if let Some(p0) = &result.no_purchase {
            out.push(p0[r].to_string());
        }
        out.push(result.decisions[r].to_string());
        w.write_record(&out)?;
    }
    w.flush()?;
    Ok(())
}
