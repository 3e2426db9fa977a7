//! Score-report files (JSON).

use segtopic_core::eval::{CrossvalReport, PrPoint, ScoreReport};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::float::raw;

pub const REPORT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ReportOut {
    format: &'static str,
    version: u32,
    relevance_ap: Box<RawValue>,
    type_ap: Box<RawValue>,
    relevance_ap_pessimistic: Box<RawValue>,
    relevance_ap_optimistic: Box<RawValue>,
    relevance_curve: Vec<[Box<RawValue>; 2]>,
    type_curve: Vec<[Box<RawValue>; 2]>,
}

fn curve(points: &[PrPoint]) -> Vec<[Box<RawValue>; 2]> {
    points.iter().map(|p| [raw(p.precision), raw(p.recall)]).collect()
}

pub fn report_to_json(r: &ScoreReport) -> String {
    let out = ReportOut {
        format: "segtopic-score",
        version: REPORT_VERSION,
        relevance_ap: raw(r.relevance_ap),
        type_ap: raw(r.type_ap),
        relevance_ap_pessimistic: raw(r.relevance_tie_bounds.0),
        relevance_ap_optimistic: raw(r.relevance_tie_bounds.1),
        relevance_curve: curve(&r.relevance_curve),
        type_curve: curve(&r.type_curve),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("report serializes");
    s.push('\n');
    s
}

/// Terminal summary with 3 decimals.
pub fn summary(r: &ScoreReport, verbose: bool) -> String {
    let mut s = format!("Type AP      {:.3}\nRelevance AP {:.3}\n", r.type_ap, r.relevance_ap);
    if verbose {
        s.push_str(&format!(
            "Relevance AP under ties: pessimistic {:.3}, optimistic {:.3}\n",
            r.relevance_tie_bounds.0, r.relevance_tie_bounds.1
        ));
    }
    s
}

pub fn crossval_table(r: &CrossvalReport) -> String {
    let mut s = String::from("fold\tdocs\tsegments\tType AP\tRelevance AP\n");
    for f in &r.folds {
        match &f.report {
            Some(rep) => s.push_str(&format!(
                "{}\t{}\t{}\t{:.3}\t{:.3}\n",
                f.fold + 1,
                f.num_test_documents,
                f.num_test_segments,
                rep.type_ap,
                rep.relevance_ap
            )),
            None => s.push_str(&format!(
                "{}\t{}\t{}\tskipped (no in-domain segment)\n",
                f.fold + 1,
                f.num_test_documents,
                f.num_test_segments
            )),
        }
    }
    s.push_str(&format!("mean\t\t\t{:.3}\t{:.3}\n", r.mean_type_ap, r.mean_relevance_ap));
    s
}
