use std::collections::{BTreeMap, HashMap};

use crate::error::{Result, RmmError};

use super::{
    AltCode, AlternativeCatalog, CatalogEntry, ChoiceSet, LongRow, RawData, RawRows, RemovedSet,
    SetCode, TransactionDataset, TransactionRecord, WideRow,
};

pub const DEFAULT_MIN_OBS: usize = 30;

// One coded transaction before filtering.
struct Coded {
    id: String,
    chosen: AltCode,
    set: Vec<AltCode>,
    values: Vec<Vec<Option<f64>>>,
}

/// Codes alternatives and choice sets, drops singleton sets and sets seen
/// fewer than `min_obs` times, and assembles the dataset.
///
/// Sets are kept when their count is `>= min_obs`.
pub fn reshape(raw: &RawData, min_obs: usize) -> Result<TransactionDataset> {
    if min_obs == 0 {
        return Err(RmmError::Domain("min_obs must be at least 1".into()));
    }
    let (catalog, coded) = match &raw.rows {
        RawRows::Long(rows) => code_long(rows)?,
        RawRows::Wide(rows) => code_wide(rows)?,
    };

    let mut counts: BTreeMap<Vec<AltCode>, usize> = BTreeMap::new();
    let mut dropped_singletons = 0;
    for t in &coded {
        if t.set.len() < 2 {
            dropped_singletons += 1;
        } else {
            *counts.entry(t.set.clone()).or_default() += 1;
        }
    }

    let mut remaining_sets = Vec::new();
    let mut removed_sets = Vec::new();
    let mut set_codes: HashMap<Vec<AltCode>, SetCode> = HashMap::new();
    for (codes, n) in counts {
        if n >= min_obs {
            let code = SetCode(remaining_sets.len() as u32 + 1);
            set_codes.insert(codes.clone(), code);
            remaining_sets.push(ChoiceSet {
                set_code: code,
                codes,
                observations: n,
            });
        } else {
            removed_sets.push(RemovedSet {
                codes,
                observations: n,
            });
        }
    }

    let mut records = Vec::new();
    for t in coded {
        let Some(&set_code) = set_codes.get(&t.set) else {
            continue;
        };
        let mut values = Vec::with_capacity(t.values.len());
        for (code, row) in t.set.iter().zip(t.values) {
            let mut out = Vec::with_capacity(row.len());
            for (v, name) in row.into_iter().zip(&raw.asv_names) {
                out.push(v.ok_or_else(|| RmmError::Incomplete {
                    id: t.id.clone(),
                    code: code.0,
                    asv: name.clone(),
                })?);
            }
            values.push(out);
        }
        records.push(TransactionRecord {
            id: t.id,
            chosen: t.chosen,
            set_code,
            values,
        });
    }
    if records.is_empty() {
        return Err(RmmError::EmptyDataset);
    }

    let dataset = TransactionDataset {
        response: raw.response.clone(),
        asv_names: raw.asv_names.clone(),
        catalog,
        remaining_sets,
        removed_sets,
        dropped_singletons,
        records,
    };
    dataset.validate()?;
    Ok(dataset)
}

fn code_long(rows: &[LongRow]) -> Result<(AlternativeCatalog, Vec<Coded>)> {
    let catalog = AlternativeCatalog::from_labels(rows.iter().map(|r| r.alternative.as_str()))?;

    // group by id, in order of first appearance
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&LongRow>> = HashMap::new();
    for r in rows {
        groups
            .entry(r.id.as_str())
            .or_insert_with(|| {
                order.push(r.id.as_str());
                Vec::new()
            })
            .push(r);
    }

    let mut coded = Vec::with_capacity(order.len());
    for id in order {
        let mut members: Vec<(AltCode, &LongRow)> = groups[id]
            .iter()
            .map(|r| (catalog.code_of(&r.alternative).expect("catalogued"), *r))
            .collect();
        members.sort_by_key(|(c, _)| *c);
        let chosen: Vec<AltCode> = members
            .iter()
            .filter(|(_, r)| r.purchased)
            .map(|(c, _)| *c)
            .collect();
        if chosen.len() != 1 {
            return Err(RmmError::Consistency(format!(
                "id `{id}` has {} purchased alternatives, expected exactly one",
                chosen.len()
            )));
        }
        coded.push(Coded {
            id: id.to_string(),
            chosen: chosen[0],
            set: members.iter().map(|(c, _)| *c).collect(),
            values: members.iter().map(|(_, r)| r.values.clone()).collect(),
        });
    }
    Ok((catalog, coded))
}

// Wide files carry their own alternative codes; those are kept so that
// `<asv>_<code>` columns keep their meaning. Codes never chosen anywhere get a
// synthetic `Alt_<code>` label.
fn code_wide(rows: &[WideRow]) -> Result<(AlternativeCatalog, Vec<Coded>)> {
    let mut labels: BTreeMap<u32, &str> = BTreeMap::new();
    let mut max_code = 0;
    for r in rows {
        max_code = max_code.max(r.chosen_code);
        max_code = max_code.max(*r.choice_set.last().unwrap_or(&0));
        if r.chosen_label.is_empty() {
            continue;
        }
        match labels.get(&r.chosen_code) {
            Some(&l) if l != r.chosen_label => {
                return Err(RmmError::Consistency(format!(
                    "alternative code {} is labelled both `{l}` and `{}`",
                    r.chosen_code, r.chosen_label
                )))
            }
            _ => {
                labels.insert(r.chosen_code, &r.chosen_label);
            }
        }
    }
    let entries = (1..=max_code)
        .map(|c| CatalogEntry {
            code: AltCode(c),
            label: labels
                .get(&c)
                .map(|l| l.to_string())
                .unwrap_or_else(|| format!("Alt_{c}")),
        })
        .collect();
    let catalog = AlternativeCatalog::from_entries(entries)?;

    // the file's own set codes must name sets consistently
    let mut file_codes: HashMap<u32, &[u32]> = HashMap::new();
    for r in rows {
        match file_codes.get(&r.choice_set_code) {
            Some(&s) if s != r.choice_set.as_slice() => {
                return Err(RmmError::Consistency(format!(
                    "choice set code {} names more than one choice set",
                    r.choice_set_code
                )))
            }
            _ => {
                file_codes.insert(r.choice_set_code, &r.choice_set);
            }
        }
    }

    let coded = rows
        .iter()
        .map(|r| Coded {
            id: r.id.clone(),
            chosen: AltCode(r.chosen_code),
            set: r.choice_set.iter().map(|&c| AltCode(c)).collect(),
            values: r.values.clone(),
        })
        .collect();
    Ok((catalog, coded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_long, LongColumns, ReadOptions};

    fn cols() -> LongColumns {
        LongColumns {
            idvar: "id".into(),
            resp: "buy".into(),
            alts: "room".into(),
            asv: vec!["Price".into()],
        }
    }

    fn raw(src: &str) -> RawData {
        parse_long(src.as_bytes(), &cols(), &ReadOptions::default()).unwrap()
    }

    #[test]
    fn no_filtering_with_min_obs_one() {
        let ds = reshape(&raw("id,buy,room,Price\n1,1,A,10\n1,0,B,12\n"), 1).unwrap();
        assert_eq!(ds.remaining_sets.len(), 1);
        assert!(ds.removed_sets.is_empty());
        assert_eq!(ds.records[0].values, vec![vec![10.0], vec![12.0]]);
    }

    #[test]
    fn min_obs_boundary_is_inclusive() {
        let mut src = String::from("id,buy,room,Price\n");
        for i in 0..3 {
            src.push_str(&format!("{i},1,A,1\n{i},0,B,2\n"));
        }
        for i in 3..5 {
            src.push_str(&format!("{i},1,A,1\n{i},0,C,2\n"));
        }
        let ds = reshape(&raw(&src), 3).unwrap();
        assert_eq!(ds.remaining_sets.len(), 1);
        assert_eq!(ds.remaining_sets[0].observations, 3);
        assert_eq!(ds.removed_sets.len(), 1);
        assert_eq!(ds.removed_sets[0].observations, 2);
        assert_eq!(ds.len(), 3);
    }

    #[test]
    fn singletons_are_dropped_and_counted() {
        let src = "id,buy,room,Price\n1,1,A,1\n1,0,B,2\n2,1,A,1\n";
        let ds = reshape(&raw(src), 1).unwrap();
        assert_eq!(ds.dropped_singletons, 1);
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn set_codes_follow_numeric_order() {
        // labels chosen so that codes 2 and 10 exist; 2 < 10 numerically
        let labels: Vec<String> = (0..10).map(|i| format!("r{i}")).collect();
        let mut src = String::from("id,buy,room,Price\n");
        // set {1,10} and set {1,2}
        src.push_str(&format!("a,1,{},1\na,0,{},1\n", labels[0], labels[9]));
        src.push_str(&format!("b,1,{},1\nb,0,{},1\n", labels[0], labels[1]));
        for (i, l) in labels.iter().enumerate().skip(2).take(7) {
            src.push_str(&format!("c{i},1,{},1\nc{i},0,{l},1\n", labels[0]));
        }
        let ds = reshape(&raw(&src), 1).unwrap();
        assert_eq!(ds.remaining_sets[0].display_codes(), "1|2");
        assert_eq!(ds.remaining_sets.last().unwrap().display_codes(), "1|10");
    }

    #[test]
    fn empty_after_filtering() {
        let src = "id,buy,room,Price\n1,1,A,1\n1,0,B,2\n";
        assert!(matches!(reshape(&raw(src), 2), Err(RmmError::EmptyDataset)));
    }

    #[test]
    fn missing_asv_inside_set() {
        let src = "id,buy,room,Price\n1,1,A,1\n1,0,B,\n";
        match reshape(&raw(src), 1) {
            Err(RmmError::Incomplete { id, code, .. }) => {
                assert_eq!(id, "1");
                assert_eq!(code, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn purchase_count_per_id() {
        let none = "id,buy,room,Price\n1,0,A,1\n1,0,B,2\n";
        assert!(matches!(
            reshape(&raw(none), 1),
            Err(RmmError::Consistency(_))
        ));
        let two = "id,buy,room,Price\n1,1,A,1\n1,1,B,2\n";
        assert!(matches!(
            reshape(&raw(two), 1),
            Err(RmmError::Consistency(_))
        ));
    }
}
