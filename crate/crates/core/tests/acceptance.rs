//! Acceptance suite: one line per criterion, all must pass.
//!
//! Run with `cargo test -p chase-escape --test acceptance`.

use std::io::Write;

use chase_escape::verify::{criteria, CriterionReport};

/// Writes straight to stderr so the report shows up without `--nocapture`.
fn line(text: String) {
    let _ = writeln!(std::io::stderr(), "{text}");
}

#[test]
fn acceptance_criteria() {
    let reports: Vec<CriterionReport> = criteria()
        .iter()
        .map(|c| {
            let report = c.evaluate();
            line(report.summary_line());
            for check in &report.checks {
                line(format!("        {} = {} (want {})", check.name, check.measured, check.expected));
            }
            for note in &report.notes {
                line(format!("        note: {note}"));
            }
            report
        })
        .collect();
    let passed = reports.iter().filter(|r| r.passed).count();
    line(format!("acceptance: {passed}/{} criteria passed", reports.len()));
    let failed: Vec<u32> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
