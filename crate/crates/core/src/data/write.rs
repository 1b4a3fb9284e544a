use std::io::Write;

use crate::error::Result;

use super::{LongColumns, TransactionDataset, WideColumns};

/// Writes the dataset's records in long layout, one row per exposed
/// alternative.
pub fn write_long<W: Write>(
    dataset: &TransactionDataset,
    cols: &LongColumns,
    delimiter: u8,
    writer: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    let mut header = vec![cols.idvar.clone(), cols.resp.clone(), cols.alts.clone()];
    header.extend(cols.asv.iter().cloned());
    w.write_record(&header)?;
    for r in &dataset.records {
        let set = dataset.record_set(r);
        for (code, values) in set.codes.iter().zip(&r.values) {
            let mut row = vec![
                r.id.clone(),
                if *code == r.chosen { "1" } else { "0" }.to_string(),
                dataset.catalog.label(*code).unwrap_or_default().to_string(),
            ];
            row.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the dataset's records in wide layout. Alternatives outside a
/// record's choice set are written as 0.
pub fn write_wide<W: Write>(
    dataset: &TransactionDataset,
    cols: &WideColumns,
    delimiter: u8,
    writer: W,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(writer);
    let j = dataset.n_alternatives();
    let mut header = vec![
        cols.idvar.clone(),
        cols.alts.clone(),
        cols.alts_code.clone(),
        cols.choice_set.clone(),
        cols.choice_set_code.clone(),
    ];
    for name in &cols.asv {
        header.extend((1..=j).map(|c| format!("{name}_{c}")));
    }
    w.write_record(&header)?;
    for r in &dataset.records {
        let set = dataset.record_set(r);
        let mut row = vec![
            r.id.clone(),
            dataset
                .catalog
                .label(r.chosen)
                .unwrap_or_default()
                .to_string(),
            r.chosen.to_string(),
            set.display_codes(),
            set.set_code.to_string(),
        ];
        for a in 0..cols.asv.len() {
            let mut slots = vec!["0".to_string(); j];
            for (code, values) in set.codes.iter().zip(&r.values) {
                slots[code.index()] = values[a].to_string();
            }
            row.extend(slots);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
