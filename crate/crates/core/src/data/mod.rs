//! Transaction data: parsing long and wide files, coding alternatives and
//! choice sets, and the canonical dataset consumed by estimation.

mod parse;
mod reshape;
mod write;

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RmmError};

pub use parse::{
    parse_long, parse_wide, LongColumns, LongRow, RawData, RawRows, ReadOptions, WideColumns,
    WideRow,
};
pub use reshape::{reshape, DEFAULT_MIN_OBS};
pub use write::{write_long, write_wide};

/// Integer code of an alternative, `1..=J`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AltCode(pub u32);

impl AltCode {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for AltCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integer code of a remaining choice set, `1..=M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SetCode(pub u32);

impl fmt::Display for SetCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub code: AltCode,
    pub label: String,
}

/// Bijection between alternative labels and the codes `1..=J`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CatalogEntry>", into = "Vec<CatalogEntry>")]
pub struct AlternativeCatalog {
    entries: Vec<CatalogEntry>,
}

impl AlternativeCatalog {
    /// Codes labels in ascending byte-wise order. Duplicates are collapsed.
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        labels.sort_unstable();
        labels.dedup();
        let entries = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| CatalogEntry {
                code: AltCode(i as u32 + 1),
                label,
            })
            .collect();
        Self::from_entries(entries)
    }

    /// Accepts explicit codes; they must be exactly `1..=J` with unique,
    /// non-empty labels.
    pub fn from_entries(mut entries: Vec<CatalogEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.code);
        for (i, e) in entries.iter().enumerate() {
            if e.code.0 as usize != i + 1 {
                return Err(RmmError::Consistency(format!(
                    "alternative codes must be contiguous from 1, found {} at position {}",
                    e.code,
                    i + 1
                )));
            }
            if e.label.is_empty() {
                return Err(RmmError::Consistency(format!(
                    "alternative {} has an empty label",
                    e.code
                )));
            }
        }
        let mut labels: Vec<&str> = entries.iter().map(|e| e.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(RmmError::Consistency(format!(
                "label `{}` used by more than one alternative",
                w[0]
            )));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, code: AltCode) -> bool {
        code.0 >= 1 && code.index() < self.entries.len()
    }

    pub fn label(&self, code: AltCode) -> Option<&str> {
        if self.contains(code) {
            Some(&self.entries[code.index()].label)
        } else {
            None
        }
    }

    pub fn code_of(&self, label: &str) -> Option<AltCode> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.code)
    }

    pub fn codes(&self) -> impl Iterator<Item = AltCode> + '_ {
        self.entries.iter().map(|e| e.code)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }
}

impl TryFrom<Vec<CatalogEntry>> for AlternativeCatalog {
    type Error = RmmError;

    fn try_from(entries: Vec<CatalogEntry>) -> Result<Self> {
        Self::from_entries(entries)
    }
}

impl From<AlternativeCatalog> for Vec<CatalogEntry> {
    fn from(c: AlternativeCatalog) -> Self {
        c.entries
    }
}

/// A set of alternatives exposed together, with the number of transactions
/// that saw it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceSet {
    pub set_code: SetCode,
    pub codes: Vec<AltCode>,
    pub observations: usize,
}

impl ChoiceSet {
    pub fn new(set_code: SetCode, codes: Vec<AltCode>, observations: usize) -> Result<Self> {
        check_codes(&codes)?;
        Ok(Self {
            set_code,
            codes,
            observations,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Position of `code` inside the set.
    pub fn position(&self, code: AltCode) -> Option<usize> {
        self.codes.binary_search(&code).ok()
    }

    pub fn contains(&self, code: AltCode) -> bool {
        self.position(code).is_some()
    }

    /// Pipe-delimited rendering, e.g. `1|5|8`.
    pub fn display_codes(&self) -> String {
        join_codes(&self.codes)
    }
}

/// A choice set discarded for having too few observations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedSet {
    pub codes: Vec<AltCode>,
    pub observations: usize,
}

pub fn join_codes(codes: &[AltCode]) -> String {
    codes
        .iter()
        .map(|c| c.0.to_string())
        .collect::<Vec<_>>()
        .join("|")
}

/// Parses a `|`-delimited list of positive integer codes, returning them in
/// ascending order.
pub fn parse_choice_set(input: &str) -> Result<Vec<AltCode>> {
    let mut codes = Vec::new();
    for token in input.trim().split('|') {
        let t = token.trim();
        match t.parse::<u32>() {
            Ok(c) if c >= 1 => codes.push(AltCode(c)),
            _ => {
                return Err(RmmError::ChoiceSetParse {
                    input: input.to_string(),
                    token: token.to_string(),
                })
            }
        }
    }
    codes.sort_unstable();
    if let Some(w) = codes.windows(2).find(|w| w[0] == w[1]) {
        return Err(RmmError::ChoiceSetParse {
            input: input.to_string(),
            token: w[0].to_string(),
        });
    }
    Ok(codes)
}

fn check_codes(codes: &[AltCode]) -> Result<()> {
    if codes.is_empty() {
        return Err(RmmError::Domain("choice set is empty".into()));
    }
    if codes[0].0 == 0 || codes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RmmError::Domain(format!(
            "choice set codes must be positive and strictly increasing: {}",
            join_codes(codes)
        )));
    }
    Ok(())
}

/// One observed purchase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub id: String,
    pub chosen: AltCode,
    pub set_code: SetCode,
    /// `values[p][a]` is ASV `a` of the `p`-th alternative of the set.
    pub values: Vec<Vec<f64>>,
}

/// Coded, filtered transactions ready for estimation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionDataset {
    pub response: String,
    pub asv_names: Vec<String>,
    pub catalog: AlternativeCatalog,
    pub remaining_sets: Vec<ChoiceSet>,
    pub removed_sets: Vec<RemovedSet>,
    pub dropped_singletons: usize,
    pub records: Vec<TransactionRecord>,
}

impl TransactionDataset {
    /// Builds a dataset from already-coded parts and checks every invariant.
    pub fn from_parts(
        response: String,
        asv_names: Vec<String>,
        catalog: AlternativeCatalog,
        remaining_sets: Vec<ChoiceSet>,
        records: Vec<TransactionRecord>,
    ) -> Result<Self> {
        let ds = Self {
            response,
            asv_names,
            catalog,
            remaining_sets,
            removed_sets: Vec::new(),
            dropped_singletons: 0,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.asv_names.is_empty() {
            return Err(RmmError::Consistency(
                "no alternative-specific variables".into(),
            ));
        }
        if self.records.is_empty() || self.remaining_sets.is_empty() {
            return Err(RmmError::EmptyDataset);
        }
        for (i, set) in self.remaining_sets.iter().enumerate() {
            check_codes(&set.codes)?;
            if set.set_code.0 as usize != i + 1 {
                return Err(RmmError::Consistency(format!(
                    "set codes must run 1..M in order, found {} at position {}",
                    set.set_code,
                    i + 1
                )));
            }
            if let Some(c) = set.codes.iter().find(|c| !self.catalog.contains(**c)) {
                return Err(RmmError::Consistency(format!(
                    "choice set {} references unknown alternative {c}",
                    set.set_code
                )));
            }
        }
        let mut counts = vec![0usize; self.remaining_sets.len()];
        let n_asv = self.asv_names.len();
        for r in &self.records {
            let set = self.set(r.set_code).ok_or_else(|| {
                RmmError::Consistency(format!(
                    "record `{}` references unknown choice set {}",
                    r.id, r.set_code
                ))
            })?;
            counts[set.set_code.0 as usize - 1] += 1;
            if !set.contains(r.chosen) {
                return Err(RmmError::Consistency(format!(
                    "record `{}` chose {} outside its choice set {}",
                    r.id,
                    r.chosen,
                    set.display_codes()
                )));
            }
            if r.values.len() != set.len() || r.values.iter().any(|v| v.len() != n_asv) {
                return Err(RmmError::Consistency(format!(
                    "record `{}` has ASV values of the wrong shape",
                    r.id
                )));
            }
        }
        for (set, n) in self.remaining_sets.iter().zip(counts) {
            if set.observations != n {
                return Err(RmmError::Consistency(format!(
                    "choice set {} claims {} observations but {} records use it",
                    set.set_code, set.observations, n
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_alternatives(&self) -> usize {
        self.catalog.len()
    }

    pub fn n_asv(&self) -> usize {
        self.asv_names.len()
    }

    pub fn set(&self, code: SetCode) -> Option<&ChoiceSet> {
        let idx = (code.0 as usize).checked_sub(1)?;
        self.remaining_sets.get(idx)
    }

    /// Choice set of a record. Panics if the dataset is inconsistent.
    pub fn record_set(&self, record: &TransactionRecord) -> &ChoiceSet {
        &self.remaining_sets[record.set_code.0 as usize - 1]
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let ds: Self = serde_json::from_reader(reader)?;
        ds.validate()?;
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_codes_labels_bytewise() {
        let cat = AlternativeCatalog::from_labels([
            "Suite 2",
            "King Room 1",
            "2 Double Beds Room 1",
            "King Room 1",
        ])
        .unwrap();
        assert_eq!(cat.len(), 3);
        assert_eq!(cat.label(AltCode(1)), Some("2 Double Beds Room 1"));
        assert_eq!(cat.label(AltCode(2)), Some("King Room 1"));
        assert_eq!(cat.code_of("Suite 2"), Some(AltCode(3)));
        assert_eq!(cat.label(AltCode(4)), None);
        assert_eq!(cat.label(AltCode(0)), None);
    }

    #[test]
    fn catalog_rejects_gaps_and_duplicates() {
        let gap = vec![
            CatalogEntry {
                code: AltCode(1),
                label: "a".into(),
            },
            CatalogEntry {
                code: AltCode(3),
                label: "b".into(),
            },
        ];
        assert!(AlternativeCatalog::from_entries(gap).is_err());
        let dup = vec![
            CatalogEntry {
                code: AltCode(1),
                label: "a".into(),
            },
            CatalogEntry {
                code: AltCode(2),
                label: "a".into(),
            },
        ];
        assert!(AlternativeCatalog::from_entries(dup).is_err());
    }

    #[test]
    fn choice_set_strings() {
        assert_eq!(
            parse_choice_set("1|5|8").unwrap(),
            vec![AltCode(1), AltCode(5), AltCode(8)]
        );
        assert_eq!(
            parse_choice_set("10|2").unwrap(),
            vec![AltCode(2), AltCode(10)]
        );
        match parse_choice_set("1||5") {
            Err(RmmError::ChoiceSetParse { token, .. }) => assert_eq!(token, ""),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_choice_set("1|x").is_err());
        assert!(parse_choice_set("0|1").is_err());
        assert!(parse_choice_set("3|3").is_err());
    }

    #[test]
    fn choice_set_lookup() {
        let s = ChoiceSet::new(SetCode(1), vec![AltCode(1), AltCode(5), AltCode(8)], 3).unwrap();
        assert_eq!(s.position(AltCode(5)), Some(1));
        assert_eq!(s.position(AltCode(4)), None);
        assert_eq!(s.display_codes(), "1|5|8");
        assert!(ChoiceSet::new(SetCode(1), vec![], 0).is_err());
        assert!(ChoiceSet::new(SetCode(1), vec![AltCode(2), AltCode(1)], 0).is_err());
    }
}
