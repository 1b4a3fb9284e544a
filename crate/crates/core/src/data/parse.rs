use std::collections::{HashMap, HashSet};
use std::io::Read;

use crate::error::{Result, RmmError};

use super::parse_choice_set;

/// Column mapping for long files: one row per (transaction, alternative).
#[derive(Clone, Debug)]
pub struct LongColumns {
    pub idvar: String,
    pub resp: String,
    pub alts: String,
    pub asv: Vec<String>,
}

/// Column mapping for wide files: one row per transaction, with ASVs in
/// `<asv>_<code>` columns.
#[derive(Clone, Debug)]
pub struct WideColumns {
    pub idvar: String,
    /// Response name; when the column exists every row must be a purchase.
    pub resp: String,
    pub alts: String,
    pub asv: Vec<String>,
    pub alts_code: String,
    pub choice_set: String,
    pub choice_set_code: String,
}

#[derive(Clone, Debug)]
pub struct ReadOptions {
    pub delimiter: u8,
    /// Drop exact duplicate rows instead of failing on them.
    pub dedup: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            dedup: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LongRow {
    pub id: String,
    pub purchased: bool,
    pub alternative: String,
    /// One entry per ASV; `None` for an empty or `NA` cell.
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WideRow {
    pub id: String,
    pub chosen_label: String,
    pub chosen_code: u32,
    /// Ascending.
    pub choice_set: Vec<u32>,
    pub choice_set_code: u32,
    /// `values[p][a]`: ASV `a` for the `p`-th member of `choice_set`.
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawRows {
    Long(Vec<LongRow>),
    Wide(Vec<WideRow>),
}

/// Parsed but not yet coded transactions.
#[derive(Clone, Debug, PartialEq)]
pub struct RawData {
    pub response: String,
    pub asv_names: Vec<String>,
    pub rows: RawRows,
}

impl RawData {
    pub fn len(&self) -> usize {
        match &self.rows {
            RawRows::Long(r) => r.len(),
            RawRows::Wide(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Header(HashMap<String, usize>);

impl Header {
    fn read<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Self> {
        let headers = rdr.headers()?;
        Ok(Self(
            headers
                .iter()
                .enumerate()
                .map(|(i, h)| (h.trim().to_string(), i))
                .collect(),
        ))
    }

    fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.get(name)
            .ok_or_else(|| RmmError::MissingColumn(name.to_string()))
    }
}

fn reader<R: Read>(source: R, opts: &ReadOptions) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn parse_value(cell: &str, row: usize, column: &str) -> Result<Option<f64>> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(RmmError::InvalidValue {
            row,
            message: format!("column `{column}` holds non-numeric value `{cell}`"),
        }),
    }
}

fn parse_code(cell: &str, row: usize, column: &str) -> Result<u32> {
    match cell.parse::<u32>() {
        Ok(c) if c >= 1 => Ok(c),
        _ => Err(RmmError::InvalidValue {
            row,
            message: format!("column `{column}` holds invalid code `{cell}`"),
        }),
    }
}

fn check_asv_names(asv: &[String]) -> Result<()> {
    if asv.is_empty() {
        return Err(RmmError::Domain(
            "at least one alternative-specific variable is required".into(),
        ));
    }
    Ok(())
}

/// Reads a long-format file. Row indices in errors are 1-based data rows
/// (the header is row 0).
pub fn parse_long<R: Read>(source: R, cols: &LongColumns, opts: &ReadOptions) -> Result<RawData> {
    check_asv_names(&cols.asv)?;
    let mut rdr = reader(source, opts);
    let header = Header::read(&mut rdr)?;
    let id_col = header.require(&cols.idvar)?;
    let resp_col = header.require(&cols.resp)?;
    let alt_col = header.require(&cols.alts)?;
    let asv_cols = cols
        .asv
        .iter()
        .map(|a| header.require(a))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<LongRow> = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let id = rec.get(id_col).unwrap_or("").to_string();
        let alternative = rec.get(alt_col).unwrap_or("").to_string();
        if id.is_empty() || alternative.is_empty() {
            return Err(RmmError::InvalidValue {
                row,
                message: "empty id or alternative".into(),
            });
        }
        let purchased = match rec.get(resp_col).unwrap_or("") {
            "0" => false,
            "1" => true,
            other => {
                return Err(RmmError::InvalidValue {
                    row,
                    message: format!("response `{}` must be 0 or 1, found `{other}`", cols.resp),
                })
            }
        };
        let values = asv_cols
            .iter()
            .zip(&cols.asv)
            .map(|(&c, name)| parse_value(rec.get(c).unwrap_or(""), row, name))
            .collect::<Result<Vec<_>>>()?;
        let parsed = LongRow {
            id,
            purchased,
            alternative,
            values,
        };
        let key = (parsed.id.clone(), parsed.alternative.clone());
        if let Some(&prev) = seen.get(&key) {
            if opts.dedup && rows[prev] == parsed {
                continue;
            }
            return Err(RmmError::Duplicate {
                id: key.0,
                alternative: key.1,
            });
        }
        seen.insert(key, rows.len());
        rows.push(parsed);
    }
    Ok(RawData {
        response: cols.resp.clone(),
        asv_names: cols.asv.clone(),
        rows: RawRows::Long(rows),
    })
}

/// Reads a wide-format file. ASV columns for alternatives outside a row's
/// choice set are ignored, so placeholder zeros never reach the model.
pub fn parse_wide<R: Read>(source: R, cols: &WideColumns, opts: &ReadOptions) -> Result<RawData> {
    check_asv_names(&cols.asv)?;
    let mut rdr = reader(source, opts);
    let header = Header::read(&mut rdr)?;
    let id_col = header.require(&cols.idvar)?;
    let alt_col = header.require(&cols.alts)?;
    let code_col = header.require(&cols.alts_code)?;
    let set_col = header.require(&cols.choice_set)?;
    let set_code_col = header.require(&cols.choice_set_code)?;
    let resp_col = header.get(&cols.resp);

    let mut rows: Vec<WideRow> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let id = rec.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(RmmError::InvalidValue {
                row,
                message: "empty id".into(),
            });
        }
        if let Some(c) = resp_col {
            if rec.get(c).unwrap_or("") != "1" {
                return Err(RmmError::InvalidValue {
                    row,
                    message: format!("wide rows are purchases; `{}` must be 1", cols.resp),
                });
            }
        }
        let chosen_label = rec.get(alt_col).unwrap_or("").to_string();
        let chosen_code = parse_code(rec.get(code_col).unwrap_or(""), row, &cols.alts_code)?;
        let choice_set: Vec<u32> = parse_choice_set(rec.get(set_col).unwrap_or(""))?
            .into_iter()
            .map(|c| c.0)
            .collect();
        let choice_set_code = parse_code(
            rec.get(set_code_col).unwrap_or(""),
            row,
            &cols.choice_set_code,
        )?;
        if choice_set.binary_search(&chosen_code).is_err() {
            return Err(RmmError::Consistency(format!(
                "row {row} (id `{id}`): chosen alternative {chosen_code} is not in choice set {}",
                rec.get(set_col).unwrap_or("")
            )));
        }
        let mut values = Vec::with_capacity(choice_set.len());
        for &code in &choice_set {
            let mut v = Vec::with_capacity(cols.asv.len());
            for name in &cols.asv {
                let column = format!("{name}_{code}");
                let cell = match header.get(&column) {
                    Some(c) => parse_value(rec.get(c).unwrap_or(""), row, &column)?,
                    None => None,
                };
                v.push(cell);
            }
            values.push(v);
        }
        let parsed = WideRow {
            id,
            chosen_label,
            chosen_code,
            choice_set,
            choice_set_code,
            values,
        };
        if let Some(&prev) = seen.get(&parsed.id) {
            if opts.dedup && rows[prev] == parsed {
                continue;
            }
            return Err(RmmError::Duplicate {
                id: parsed.id,
                alternative: parsed.chosen_label,
            });
        }
        seen.insert(parsed.id.clone(), rows.len());
        rows.push(parsed);
    }
    check_wide_asv_columns(&header, &cols.asv)?;
    Ok(RawData {
        response: cols.resp.clone(),
        asv_names: cols.asv.clone(),
        rows: RawRows::Wide(rows),
    })
}

// Each declared ASV must have at least one `<asv>_<code>` column.
fn check_wide_asv_columns(header: &Header, asv: &[String]) -> Result<()> {
    let prefixes: HashSet<&str> = header
        .0
        .keys()
        .filter_map(|k| {
            let (prefix, suffix) = k.rsplit_once('_')?;
            suffix.parse::<u32>().ok().map(|_| prefix)
        })
        .collect();
    match asv.iter().find(|a| !prefixes.contains(a.as_str())) {
        Some(a) => Err(RmmError::MissingColumn(format!("{a}_<code>"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn long_cols() -> LongColumns {
        LongColumns {
            idvar: "id".into(),
            resp: "buy".into(),
            alts: "room".into(),
            asv: vec!["Price".into()],
        }
    }

    fn wide_cols() -> WideColumns {
        WideColumns {
            idvar: "id".into(),
            resp: "buy".into(),
            alts: "room".into(),
            asv: vec!["Price".into()],
            alts_code: "code".into(),
            choice_set: "set".into(),
            choice_set_code: "set_code".into(),
        }
    }

    #[test]
    fn long_minimal() {
        let src = "id,buy,room,Price\n7,1,King,100\n";
        let raw = parse_long(src.as_bytes(), &long_cols(), &ReadOptions::default()).unwrap();
        assert_eq!(raw.len(), 1);
        match raw.rows {
            RawRows::Long(rows) => {
                assert_eq!(rows[0].id, "7");
                assert!(rows[0].purchased);
                assert_eq!(rows[0].values, vec![Some(100.0)]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn long_rejects_non_binary_response() {
        let src = "id,buy,room,Price\n1,0,A,1\n1,2,B,1\n";
        match parse_long(src.as_bytes(), &long_cols(), &ReadOptions::default()) {
            Err(RmmError::InvalidValue { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn long_missing_column_is_named() {
        let src = "id,buy,room\n1,1,A\n";
        match parse_long(src.as_bytes(), &long_cols(), &ReadOptions::default()) {
            Err(RmmError::MissingColumn(c)) => assert_eq!(c, "Price"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn long_duplicates() {
        let src = "id,buy,room,Price\n1,1,A,5\n1,0,B,6\n1,1,A,5\n";
        assert!(matches!(
            parse_long(src.as_bytes(), &long_cols(), &ReadOptions::default()),
            Err(RmmError::Duplicate { .. })
        ));
        let opts = ReadOptions {
            dedup: true,
            ..Default::default()
        };
        let raw = parse_long(src.as_bytes(), &long_cols(), &opts).unwrap();
        assert_eq!(raw.len(), 2);

        // conflicting duplicates are never merged
        let src = "id,buy,room,Price\n1,1,A,5\n1,0,A,5\n";
        assert!(parse_long(src.as_bytes(), &long_cols(), &opts).is_err());
    }

    #[test]
    fn long_custom_delimiter() {
        let src = "id;buy;room;Price\n1;1;A;5\n1;0;B;6\n";
        let opts = ReadOptions {
            delimiter: b';',
            ..Default::default()
        };
        assert_eq!(
            parse_long(src.as_bytes(), &long_cols(), &opts)
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn wide_ignores_unavailable_columns() {
        let src = "id,room,code,set,set_code,Price_1,Price_2,Price_3\n\
                   a,X,1,1|3,1,399,0,450\n";
        let raw = parse_wide(src.as_bytes(), &wide_cols(), &ReadOptions::default()).unwrap();
        match raw.rows {
            RawRows::Wide(rows) => {
                assert_eq!(rows[0].choice_set, vec![1, 3]);
                assert_eq!(rows[0].values, vec![vec![Some(399.0)], vec![Some(450.0)]]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn wide_errors() {
        let opts = ReadOptions::default();
        let bad_set = "id,room,code,set,set_code,Price_1\na,X,1,1||5,1,3\n";
        assert!(matches!(
            parse_wide(bad_set.as_bytes(), &wide_cols(), &opts),
            Err(RmmError::ChoiceSetParse { .. })
        ));
        let outside = "id,room,code,set,set_code,Price_1\na,X,2,1|5,1,3\n";
        assert!(matches!(
            parse_wide(outside.as_bytes(), &wide_cols(), &opts),
            Err(RmmError::Consistency(_))
        ));
        let no_set = "id,room,code,set_code,Price_1\na,X,1,1,3\n";
        match parse_wide(no_set.as_bytes(), &wide_cols(), &opts) {
            Err(RmmError::MissingColumn(c)) => assert_eq!(c, "set"),
            other => panic!("{other:?}"),
        }
        let no_asv = "id,room,code,set,set_code,Cost_1\na,X,1,1,1,3\n";
        assert!(matches!(
            parse_wide(no_asv.as_bytes(), &wide_cols(), &opts),
            Err(RmmError::MissingColumn(_))
        ));
        let resp_zero = "id,buy,room,code,set,set_code,Price_1\na,0,X,1,1,1,3\n";
        assert!(matches!(
            parse_wide(resp_zero.as_bytes(), &wide_cols(), &opts),
            Err(RmmError::InvalidValue { .. })
        ));
    }
}
