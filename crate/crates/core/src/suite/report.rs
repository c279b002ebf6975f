//! Serialization and per-case summaries of verification reports.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use super::VerificationReport;

pub const CSV_HEADER: [&str; 13] = [
    "case", "instance", "m", "n", "p", "r", "lhs", "rhs", "constant", "ratio", "pass", "vacuous", "aux",
];

/// One JSON object per line.
pub fn write_jsonl<W: Write>(mut out: W, reports: &[VerificationReport]) -> io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(out: W, reports: &[VerificationReport]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.case.clone(),
            r.instance.clone(),
            r.m.to_string(),
            r.n.to_string(),
            opt(r.p),
            opt(r.r),
            r.lhs.to_string(),
            r.rhs.to_string(),
            opt(r.constant),
            opt(r.ratio),
            r.pass.to_string(),
            r.vacuous.to_string(),
            opt(r.aux),
        ])?;
    }
    w.flush()
}

/// Constant fitted at one parameter combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitEntry {
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub aux: Option<f64>,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub case: String,
    pub checks: usize,
    pub vacuous: usize,
    pub passed: usize,
    pub pass_rate: f64,
    /// Largest `lhs/rhs` over non-vacuous checks that ran at a given constant.
    pub max_ratio: Option<f64>,
    /// For fitted checks: the largest minimal constant per parameter combination.
    pub fitted: Vec<FitEntry>,
}

/// Summaries in order of first appearance.
pub fn summarize(reports: &[VerificationReport]) -> Vec<CaseSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut by_case: BTreeMap<String, Vec<&VerificationReport>> = BTreeMap::new();
    for r in reports {
        if !by_case.contains_key(&r.case) {
            order.push(r.case.clone());
        }
        by_case.entry(r.case.clone()).or_default().push(r);
    }
    order
        .into_iter()
        .map(|case| {
            let rs = &by_case[&case];
            let checks = rs.len();
            let vacuous = rs.iter().filter(|r| r.vacuous).count();
            let passed = rs.iter().filter(|r| r.pass).count();
            let max_ratio = rs
                .iter()
                .filter(|r| !r.vacuous && !r.fitted)
                .filter_map(|r| r.ratio)
                .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
            let mut fitted: Vec<FitEntry> = Vec::new();
            for r in rs.iter().filter(|r| r.fitted && !r.vacuous) {
                let Some(c) = r.min_constant else { continue };
                match fitted.iter_mut().find(|e| e.p == r.p && e.r == r.r && e.aux == r.aux) {
                    Some(e) => e.constant = e.constant.max(c),
                    None => fitted.push(FitEntry {
                        p: r.p,
                        r: r.r,
                        aux: r.aux,
                        constant: c,
                    }),
                }
            }
            CaseSummary {
                case,
                checks,
                vacuous,
                passed,
                pass_rate: if checks == 0 { 1.0 } else { passed as f64 / checks as f64 },
                max_ratio,
                fitted,
            }
        })
        .collect()
}
