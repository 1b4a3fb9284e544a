//! The model file: everything prediction needs from a fit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::{AlternativeCatalog, ChoiceSet, SetCode, TransactionDataset};
use crate::error::{Result, RmmError};
use crate::estimation::FitResult;

pub const MODEL_NAME: &str = "Conditional Logit Model";
pub const ESTIMATION_METHOD: &str = "Robust Demand Estimation";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: String,
    pub estimation_method: String,
    pub response: String,
    pub asv_names: Vec<String>,
    pub catalog: AlternativeCatalog,
    pub remaining_sets: Vec<ChoiceSet>,
    pub fit: FitResult,
}

impl FittedModel {
    pub fn new(dataset: &TransactionDataset, fit: FitResult) -> Self {
        Self {
            model: MODEL_NAME.into(),
            estimation_method: ESTIMATION_METHOD.into(),
            response: dataset.response.clone(),
            asv_names: dataset.asv_names.clone(),
            catalog: dataset.catalog.clone(),
            remaining_sets: dataset.remaining_sets.clone(),
            fit,
        }
    }

    /// Looks up a remaining choice set; the error lists the valid codes.
    pub fn set(&self, code: SetCode) -> Result<&ChoiceSet> {
        self.remaining_sets
            .iter()
            .find(|s| s.set_code == code)
            .ok_or_else(|| {
                let valid: Vec<String> = self
                    .remaining_sets
                    .iter()
                    .map(|s| s.set_code.to_string())
                    .collect();
                RmmError::Domain(format!(
                    "unknown choice set code {code}; valid codes are {}",
                    valid.join(", ")
                ))
            })
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let m: Self = serde_json::from_reader(reader)?;
        let coeffs = &m.fit.coefficients;
        if coeffs.n_alternatives() != m.catalog.len() || coeffs.beta.len() != m.asv_names.len() {
            return Err(RmmError::Consistency(
                "model coefficients do not match its catalog or ASV list".into(),
            ));
        }
        Ok(m)
    }
}
