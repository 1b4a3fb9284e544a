#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmm_core::data::AltCode;
use rmm_core::likelihood::ModelCoefficients;
use rmm_core::synthetic::{self, MenuEntry, NoPurchaseLevel, ScenarioSpec};
use rmm_core::TransactionDataset;

/// Random scenario: 2..=6 alternatives, 1..=2 ASVs on a unit-ish scale,
/// random menus covering every alternative.
pub fn random_spec(seed: u64, n_arrivals: usize) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j: usize = rng.gen_range(2..=6);
    let k: usize = rng.gen_range(1..=2);
    let alpha = (0..j).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let beta = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut menu = vec![MenuEntry {
        codes: (1..=j as u32).collect(),
        weight: 1.0,
    }];
    for _ in 0..rng.gen_range(0..4) {
        let mut codes: Vec<u32> = (1..=j as u32).filter(|_| rng.gen_bool(0.6)).collect();
        if codes.len() < 2 {
            codes = vec![1, j as u32];
        }
        menu.push(MenuEntry {
            codes,
            weight: rng.gen_range(0.2..1.0),
        });
    }
    ScenarioSpec {
        alpha,
        beta,
        no_purchase: NoPurchaseLevel::Gamma(rng.gen_range(-1.0..1.0)),
        menu,
        asv_ranges: (0..k).map(|_| (-2.0, 2.0)).collect(),
        asv_names: (0..k).map(|i| format!("x{i}")).collect(),
        n_arrivals,
        seed,
    }
}

pub fn random_dataset(seed: u64, n_arrivals: usize) -> TransactionDataset {
    synthetic::generate(&random_spec(seed, n_arrivals))
        .unwrap()
        .censored
}

pub fn random_params(seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn n_params(ds: &TransactionDataset) -> usize {
    ds.n_alternatives() - 1 + ds.n_asv()
}

/// Published estimates for the hotel example; baseline 3.
pub fn hotel_coefficients() -> ModelCoefficients {
    let intercepts = [
        1.3338, 1.4175, 0.0, 2.0308, 1.6915, 0.4412, 0.3404, 0.9712, 0.9756, 2.4836,
    ];
    ModelCoefficients::from_intercepts(AltCode(3), &intercepts, vec![-0.0130])
        .unwrap()
        .with_gamma(-3.3079)
}

/// Remaining choice sets and counts of the hotel example.
pub const HOTEL_SETS: [(&str, usize); 12] = [
    ("1|2|3|4|5|6|7|8|9|10", 150),
    ("1|2|3|4|5|7|8|9|10", 62),
    ("1|3|4|5|7|8|9|10", 75),
    ("1|4|5|7|8|9|10", 341),
    ("1|4|5|8|9|10", 34),
    ("1|5|7|8|9|10", 87),
    ("1|5|8", 37),
    ("1|5|8|9|10", 36),
    ("2|5|8", 32),
    ("4|5|7|8|9|10", 34),
    ("4|5|8", 127),
    ("5|9|10", 85),
];

/// A model file carrying the published hotel estimates. The covariance is
/// diagonal because only standard errors are printed; the log-likelihood is
/// not printed and is stored as zero.
pub fn hotel_model() -> rmm_core::FittedModel {
    use rmm_core::data::{parse_choice_set, AlternativeCatalog, ChoiceSet, SetCode};
    use rmm_core::estimation::{CoefficientRow, Convergence, FitResult, NoPurchase};

    let catalog = AlternativeCatalog::from_labels([
        "2 Double Beds Room 1",
        "King Room 1",
        "King Room 2",
        "King Room 3",
        "King Room 4",
        "Queen Room 1",
        "Queen Room 2",
        "Special Type Room 1",
        "Suite 1",
        "Suite 2",
    ])
    .unwrap();
    let sets = HOTEL_SETS
        .iter()
        .enumerate()
        .map(|(i, (s, n))| {
            ChoiceSet::new(SetCode(i as u32 + 1), parse_choice_set(s).unwrap(), *n).unwrap()
        })
        .collect();
    let printed = [
        ("gamma (-ASC3)", -3.3079, 2.2766),
        ("ASC1", 1.3338, 0.3221),
        ("ASC2", 1.4175, 0.2985),
        ("ASC4", 2.0308, 0.3148),
        ("ASC5", 1.6915, 0.4452),
        ("ASC6", 0.4412, 0.3987),
        ("ASC7", 0.3404, 0.3377),
        ("ASC8", 0.9712, 0.3158),
        ("ASC9", 0.9756, 0.7060),
        ("ASC10", 2.4836, 1.2308),
        ("Price", -0.0130, 0.0057),
    ];
    let table: Vec<CoefficientRow> = printed
        .iter()
        .map(|(n, e, s)| CoefficientRow::new(n.to_string(), *e, s * s))
        .collect();
    let dim = table.len();
    let covariance = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    if i == j {
                        printed[i].2 * printed[i].2
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    rmm_core::FittedModel {
        model: rmm_core::model::MODEL_NAME.into(),
        estimation_method: rmm_core::model::ESTIMATION_METHOD.into(),
        response: "Purchase".into(),
        asv_names: vec!["Price".into()],
        catalog,
        remaining_sets: sets,
        fit: FitResult {
            coefficients: hotel_coefficients(),
            covariance,
            table,
            loglik: 0.0,
            observed_arrivals: 1100,
            no_purchase: NoPurchase::from_estimate(1100.0 * 0.3 / 0.7, 1100),
            market_share: 0.7,
            convergence: Convergence {
                iterations: 0,
                gradient_norm: 0.0,
                converged: true,
            },
        },
    }
}

pub const NEWDATA1: [[f64; 3]; 5] = [
    [521.0, 677.0, 232.0],
    [321.0, 412.0, 384.0],
    [101.0, 98.0, 330.0],
    [234.0, 321.0, 590.0],
    [743.0, 382.0, 280.0],
];

pub const NEWDATA1_PROBS: [[f64; 3]; 5] = [
    [0.032273722, 0.006073611, 0.961652667],
    [0.573101692, 0.251077881, 0.175820427],
    [0.396453969, 0.589491288, 0.014054743],
    [0.681064726, 0.314302956, 0.004632318],
    [0.002256071, 0.352244224, 0.645499705],
];

pub const NEWDATA1_DECISIONS: [u32; 5] = [8, 1, 5, 1, 8];

pub const NEWDATA2: [[f64; 8]; 3] = [
    [232.0, 152.0, 123.0, 139.0, 136.0, 387.0, 262.0, 421.0],
    [122.0, 531.0, 743.0, 535.0, 276.0, 153.0, 163.0, 573.0],
    [524.0, 221.0, 192.0, 325.0, 673.0, 454.0, 326.0, 472.0],
];

pub const NEWDATA2_PROBS: [[f64; 8]; 3] = [
    [
        0.059017764,
        0.0439933498,
        0.4887438272,
        0.282743035,
        0.0761297013,
        0.005475253,
        0.02792824,
        0.015968827,
    ],
    [
        0.514723134,
        0.0006655305,
        0.0003222683,
        0.003429207,
        0.0257447096,
        0.239374472,
        0.21112052,
        0.004620159,
    ],
    [
        0.004973822,
        0.0673153629,
        0.7478395764,
        0.094527281,
        0.0002654811,
        0.008598506,
        0.04560368,
        0.030876287,
    ],
];

pub fn offer_rows<const M: usize>(prices: &[[f64; M]]) -> Vec<Vec<Vec<f64>>> {
    prices
        .iter()
        .map(|r| r.iter().map(|p| vec![*p]).collect())
        .collect()
}
