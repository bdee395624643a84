//! Experiment reports as a tab-separated table and a JSON document.
//!
//! Both renderings depend only on the report value, so identical runs give
//! byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;

use prominence_core::eval::{Agreement, EvalReport, HeldOutRun, MethodRow};
use prominence_core::PairCategory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeldOutSummary {
    pub method: String,
    pub weighted_accuracy: Option<f64>,
    pub weighted_accuracy_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub images: usize,
    pub faces: usize,
    pub missing_pixel_images: usize,
    pub eval: EvalReport,
    /// Leave-one-worker-out agreement of each human with the rest.
    pub inter_human: Option<Agreement>,
    /// Per method, accuracy over the runs that each drop one worker from
    /// the ground truth.
    pub leave_one_human_out: Vec<HeldOutSummary>,
    pub held_out_workers: Vec<String>,
}

impl ExperimentReport {
    pub fn held_out_summary(eval: &EvalReport, runs: &[HeldOutRun]) -> Vec<HeldOutSummary> {
        eval.rows
            .iter()
            .map(|row| {
                let s = prominence_core::eval::summarize_runs(runs, &row.method);
                HeldOutSummary {
                    method: row.method.clone(),
                    weighted_accuracy: s.map(|v| v.0),
                    weighted_accuracy_std: s.map(|v| v.1),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per method plus, when computed, a `human` row.
    pub fn to_tsv(&self) -> String {
        let e = &self.eval;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# pairs={} skipped={} folds={} seed={} nu={} both_orientations={} image_leakage={} non_converged_fits={}",
            e.pairs, e.skipped_pairs, e.folds, e.seed, fmt(e.nu), e.both_orientations, e.image_leakage,
            e.non_converged_fits
        );
        let _ = writeln!(
            out,
            "# images={} faces={} missing_pixel_images={} selected_c={}",
            self.images,
            self.faces,
            self.missing_pixel_images,
            e.selected_c.iter().map(|c| fmt(*c)).collect::<Vec<_>>().join(",")
        );
        let counts: Vec<String> = PairCategory::ALL
            .iter()
            .map(|c| format!("{}={}", c.name(), e.category_counts[c.index()]))
            .collect();
        let _ = writeln!(out, "# categories {}", counts.join(" "));

        out.push_str("method\tavailable\tweighted_accuracy\tstd\tmse");
        for c in PairCategory::ALL {
            let _ = write!(out, "\t{0}_weighted\t{0}_unweighted", c.name());
        }
        if !self.leave_one_human_out.is_empty() {
            out.push_str("\tloho_weighted_accuracy\tloho_std");
        }
        out.push('\n');
        for row in &e.rows {
            self.write_row(&mut out, row);
        }
        if let Some(h) = &self.inter_human {
            let _ = write!(out, "human\ttrue\t{}\t{}\tNA", fmt(h.mean), fmt(h.std));
            for _ in PairCategory::ALL {
                out.push_str("\tNA\tNA");
            }
            if !self.leave_one_human_out.is_empty() {
                out.push_str("\tNA\tNA");
            }
            out.push('\n');
        }
        out
    }

    fn write_row(&self, out: &mut String, row: &MethodRow) {
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            row.method,
            row.available,
            opt(row.weighted_accuracy),
            opt(row.weighted_accuracy_std),
            opt(row.mse)
        );
        for c in PairCategory::ALL {
            let acc = row.categories.as_ref().map(|cats| &cats[c.index()]);
            let _ = write!(
                out,
                "\t{}\t{}",
                opt(acc.and_then(|a| a.weighted)),
                opt(acc.and_then(|a| a.unweighted))
            );
        }
        if !self.leave_one_human_out.is_empty() {
            let s = self.leave_one_human_out.iter().find(|s| s.method == row.method);
            let _ = write!(
                out,
                "\t{}\t{}",
                opt(s.and_then(|s| s.weighted_accuracy)),
                opt(s.and_then(|s| s.weighted_accuracy_std))
            );
        }
        out.push('\n');
    }
}

/// Fixed six-decimal rendering keeps the table diffable.
fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt)
}
