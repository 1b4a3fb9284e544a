mod common;

use common::random_dataset;
use proptest::prelude::*;
use rmm_core::data::{self, LongColumns, ReadOptions, WideColumns};
use rmm_core::TransactionDataset;

fn long_cols(ds: &TransactionDataset) -> LongColumns {
    LongColumns {
        idvar: "ID".into(),
        resp: "Buy".into(),
        alts: "Option".into(),
        asv: ds.asv_names.clone(),
    }
}

fn wide_cols(ds: &TransactionDataset) -> WideColumns {
    WideColumns {
        idvar: "ID".into(),
        resp: "Buy".into(),
        alts: "Option".into(),
        asv: ds.asv_names.clone(),
        alts_code: "Option_Code".into(),
        choice_set: "Offer".into(),
        choice_set_code: "Offer_Code".into(),
    }
}

fn via_long(ds: &TransactionDataset, min_obs: usize) -> TransactionDataset {
    let mut buf = Vec::new();
    data::write_long(ds, &long_cols(ds), b',', &mut buf).unwrap();
    let raw = data::parse_long(buf.as_slice(), &long_cols(ds), &ReadOptions::default()).unwrap();
    data::reshape(&raw, min_obs).unwrap()
}

fn via_wide(ds: &TransactionDataset, min_obs: usize) -> TransactionDataset {
    let mut buf = Vec::new();
    data::write_wide(ds, &wide_cols(ds), b';', &mut buf).unwrap();
    let opts = ReadOptions {
        delimiter: b';',
        dedup: false,
    };
    let raw = data::parse_wide(buf.as_slice(), &wide_cols(ds), &opts).unwrap();
    data::reshape(&raw, min_obs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn long_and_wide_layouts_agree(seed in any::<u64>(), n in 30usize..300) {
        let ds = random_dataset(seed, n);
        let long = via_long(&ds, 1);
        let wide = via_wide(&ds, 1);
        prop_assert_eq!(&long.records, &ds.records);
        prop_assert_eq!(&long.remaining_sets, &ds.remaining_sets);
        prop_assert_eq!(&long.catalog, &ds.catalog);
        prop_assert_eq!(&wide.records, &long.records);
        prop_assert_eq!(&wide.remaining_sets, &long.remaining_sets);
        prop_assert_eq!(&wide.catalog, &long.catalog);
    }

    #[test]
    fn filtering_accounts_for_every_purchase(seed in any::<u64>(), min_obs in 1usize..80) {
        let ds = random_dataset(seed, 300);
        let total = ds.len();
        let raw = {
            let mut buf = Vec::new();
            data::write_long(&ds, &long_cols(&ds), b',', &mut buf).unwrap();
            data::parse_long(buf.as_slice(), &long_cols(&ds), &ReadOptions::default()).unwrap()
        };
        match data::reshape(&raw, min_obs) {
            Ok(f) => {
                let kept: usize = f.remaining_sets.iter().map(|s| s.observations).sum();
                let removed: usize = f.removed_sets.iter().map(|s| s.observations).sum();
                prop_assert_eq!(kept, f.len());
                prop_assert_eq!(kept + removed + f.dropped_singletons, total);
                prop_assert!(f.remaining_sets.iter().all(|s| s.observations >= min_obs && s.len() >= 2));
                prop_assert!(f.removed_sets.iter().all(|s| s.observations < min_obs));
                for (i, s) in f.remaining_sets.iter().enumerate() {
                    prop_assert_eq!(s.set_code.0 as usize, i + 1);
                    prop_assert!(s.codes.windows(2).all(|w| w[0] < w[1]));
                }
                prop_assert!(f.remaining_sets.windows(2).all(|w| w[0].codes < w[1].codes));
            }
            Err(e) => {
                prop_assert!(matches!(e, rmm_core::RmmError::EmptyDataset), "{e}");
                prop_assert!(ds.remaining_sets.iter().all(|s| s.observations < min_obs));
            }
        }
    }

    #[test]
    fn dataset_json_round_trips(seed in any::<u64>()) {
        let ds = random_dataset(seed, 80);
        let mut buf = Vec::new();
        ds.save(&mut buf).unwrap();
        let back = TransactionDataset::load(buf.as_slice()).unwrap();
        prop_assert_eq!(back, ds);
    }
}

#[test]
fn tampered_dataset_is_rejected_on_load() {
    let ds = random_dataset(5, 60);
    let mut json: serde_json::Value = {
        let mut buf = Vec::new();
        ds.save(&mut buf).unwrap();
        serde_json::from_slice(&buf).unwrap()
    };
    json["records"][0]["chosen"] = serde_json::json!(99);
    let text = serde_json::to_vec(&json).unwrap();
    assert!(TransactionDataset::load(text.as_slice()).is_err());
}
