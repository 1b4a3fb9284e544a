//! Plain-text reports for reshaped datasets, fits, and predictions. Numbers
//! are shown at 4 decimals; files keep full precision.

use std::fmt::Write;

use crate::data::{join_codes, TransactionDataset};
use crate::model::FittedModel;
use crate::prediction::PredictionResult;

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let idx_width = rows.len().to_string().len();
    let _ = write!(out, "{:idx_width$}", "");
    for (h, w) in header.iter().zip(&widths) {
        let _ = write!(out, " {h:>w$}");
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let _ = write!(out, "{:>idx_width$}", i + 1);
        for (c, w) in r.iter().zip(&widths) {
            let _ = write!(out, " {c:>w$}");
        }
        out.push('\n');
    }
}

pub fn reshape_summary(dataset: &TransactionDataset) -> String {
    let mut out = String::new();
    out.push_str("$Alts_Code_Desc\n");
    let rows: Vec<Vec<String>> = dataset
        .catalog
        .entries()
        .iter()
        .map(|e| vec![e.code.to_string(), e.label.clone()])
        .collect();
    table(&mut out, &["Alts_Code", "Alternative"], &rows);

    out.push_str("\n$Rem_Choice_Set\n");
    let rows: Vec<Vec<String>> = dataset
        .remaining_sets
        .iter()
        .map(|s| {
            vec![
                s.set_code.to_string(),
                s.display_codes(),
                s.observations.to_string(),
            ]
        })
        .collect();
    table(
        &mut out,
        &["Choice_Set_Code", "Remaining_Choice_Set", "Observation"],
        &rows,
    );

    out.push_str("\n$Removed_Choice_Set\n");
    let rows: Vec<Vec<String>> = dataset
        .removed_sets
        .iter()
        .map(|s| vec![join_codes(&s.codes), s.observations.to_string()])
        .collect();
    table(&mut out, &["Removed_Choice_Set", "Observation"], &rows);

    let removed_obs: usize = dataset.removed_sets.iter().map(|s| s.observations).sum();
    let _ = writeln!(out, "\n$Summary");
    let _ = writeln!(out, "Alternatives: {}", dataset.n_alternatives());
    let _ = writeln!(out, "Records: {}", dataset.len());
    let _ = writeln!(
        out,
        "Remaining choice sets: {}",
        dataset.remaining_sets.len()
    );
    let _ = writeln!(
        out,
        "Removed choice sets: {} ({} records)",
        dataset.removed_sets.len(),
        removed_obs
    );
    let _ = writeln!(
        out,
        "Dropped single-alternative records: {}",
        dataset.dropped_singletons
    );
    out
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub fn fit_report(model: &FittedModel) -> String {
    let fit = &model.fit;
    let mut out = String::new();
    let _ = writeln!(out, "$Model\n{}\n", model.model);
    let _ = writeln!(out, "$Estimation_Method\n{}\n", model.estimation_method);
    let _ = writeln!(out, "$Response_Variable\n{}\n", model.response);
    let _ = writeln!(
        out,
        "$Alternative_Specific_Variables\n{}\n",
        model.asv_names.join(" ")
    );
    let _ = writeln!(out, "$Baseline_Product\n{}\n", fit.coefficients.baseline);

    out.push_str("$Coefficients\n");
    let name_width = fit.table.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let cols = ["Estimate", "Std. Error", "z value", "Pr(>|z|)"];
    let cells: Vec<[String; 4]> = fit
        .table
        .iter()
        .map(|r| {
            [
                fmt4(r.estimate),
                fmt4(r.std_error),
                fmt4(r.z_value),
                fmt4(r.p_value),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..4)
        .map(|k| {
            cells
                .iter()
                .map(|c| c[k].len())
                .chain([cols[k].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let _ = write!(out, "{:name_width$}", "");
    for (c, w) in cols.iter().zip(&widths) {
        let _ = write!(out, " {c:>w$}");
    }
    out.push('\n');
    for (r, c) in fit.table.iter().zip(&cells) {
        let _ = write!(out, "{:<name_width$}", r.name);
        for (v, w) in c.iter().zip(&widths) {
            let _ = write!(out, " {v:>w$}");
        }
        out.push('\n');
    }

    let np = &fit.no_purchase;
    let _ = writeln!(
        out,
        "\n$Total_Arrivals_(Estimate)\n{} ({:.2})\n",
        np.total_arrivals_rounded, np.total_arrivals
    );
    let _ = writeln!(out, "$Observed_Arrivals\n{}\n", fit.observed_arrivals);
    let _ = writeln!(
        out,
        "$No_Purchase_(Estimate)\n{} ({:.2})\n",
        np.estimate_rounded, np.estimate
    );
    let _ = writeln!(out, "$Market_Share\n{}\n", fit.market_share);
    let _ = writeln!(
        out,
        "$Convergence\niterations {}, gradient max-norm {:.3e}, log-likelihood {:.4}",
        fit.convergence.iterations, fit.convergence.gradient_norm, fit.loglik
    );
    out
}

pub fn prediction_report(result: &PredictionResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "$Model\nPrediction by Conditional Logit Model.\n");
    let decisions: Vec<String> = result.decisions.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "$Decision\n{}\n", decisions.join(" "));
    out.push_str("$Probability\n");
    let header: Vec<String> = result.codes.iter().map(|c| format!("Alts_{c}")).collect();
    let rows: Vec<Vec<String>> = result
        .probabilities
        .iter()
        .map(|r| r.iter().map(|p| format!("{p:.9}")).collect())
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    table(&mut out, &header, &rows);
    out
}
