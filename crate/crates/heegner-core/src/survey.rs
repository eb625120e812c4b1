//! Survey driver: measures the Heegner index across a curve file and
//! reports per-curve conjecture verdicts.
//!
//! Only rank-one curves of prime conductor enter the survey; other
//! records are dropped silently.  Rows are ordered by (conductor,
//! label), each curve's failures are isolated into its own status
//! column, and parallelism splits at curve granularity so reports stay
//! deterministic.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve_store::{self, CoefficientCache, CurveRecord};
use crate::ec_arith;
use crate::error::Error;
use crate::heegner::{self, conjecture_check};
use crate::quadforms;
use crate::Result;

/// Knobs for one survey run.
#[derive(Debug, Clone)]
pub struct SurveyOptions {
    /// Largest |D| tried per curve.
    pub dmax: i64,
    pub precision_bits: u32,
    /// Worker threads; 0 picks the rayon default.
    pub jobs: usize,
    /// Include wall-clock timings; off makes reruns byte-identical.
    pub with_timing: bool,
    /// Directory holding coefficient-table caches.
    pub cache_dir: Option<std::path::PathBuf>,
}

impl Default for SurveyOptions {
    fn default() -> Self {
        SurveyOptions {
            dmax: 163,
            precision_bits: 256,
            jobs: 0,
            with_timing: true,
            cache_dir: None,
        }
    }
}

/// One curve's survey outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyRow {
    pub label: String,
    pub conductor: u64,
    /// gcd of the recognised per-pair indices; absent when every trace
    /// was torsion or the curve failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<u64>,
    /// Analytic Sha order exactly as ingested from the curve file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    /// Pairs traced; early exit can stop before the full range.
    pub pairs_traced: usize,
    pub torsion_traces: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub millis: Option<u64>,
    pub status: String,
}

/// Whole-run report.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub dmax: i64,
    pub precision_bits: u32,
    pub counterexamples: usize,
    pub rows: Vec<SurveyRow>,
}

/// Survey every rank-one prime-conductor curve in the input.
pub fn run_survey(curves: &[CurveRecord], opts: &SurveyOptions) -> Result<SurveyReport> {
    let mut selected: Vec<&CurveRecord> = curves
        .iter()
        .filter(|c| c.rank == 1 && quadforms::is_prime(c.conductor))
        .collect();
    selected.sort_by(|a, b| (a.conductor, &a.label).cmp(&(b.conductor, &b.label)));
    let survey = || {
        selected
            .par_iter()
            .map(|c| survey_one(c, opts))
            .collect::<Vec<_>>()
    };
    let rows = if opts.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?
            .install(survey)
    } else {
        survey()
    };
    let counterexamples = rows
        .iter()
        .filter(|r| r.verdict.as_deref() == Some("counterexample"))
        .count();
    Ok(SurveyReport {
        dmax: opts.dmax,
        precision_bits: opts.precision_bits,
        counterexamples,
        rows,
    })
}

fn survey_one(curve: &CurveRecord, opts: &SurveyOptions) -> SurveyRow {
    let started = Instant::now();
    let mut row = SurveyRow {
        label: curve.label.clone(),
        conductor: curve.conductor,
        index: None,
        nu: quadforms::nu(curve.conductor).ok(),
        sha: curve.sha_analytic,
        verdict: None,
        pairs_traced: 0,
        torsion_traces: 0,
        millis: None,
        status: "ok".into(),
    };
    match measure(curve, opts) {
        Ok(gi) => {
            row.pairs_traced = gi.traces.len();
            row.torsion_traces = gi.traces.iter().filter(|t| t.index.is_none()).count();
            row.index = gi.index;
            if let (Some(i), Some(nu)) = (gi.index, row.nu) {
                row.verdict = Some(conjecture_check(i, nu, curve.sha_analytic).to_string());
            }
        }
        Err(e) => row.status = e.to_string(),
    }
    if opts.with_timing {
        row.millis = Some(started.elapsed().as_millis() as u64);
    }
    row
}

fn measure(curve: &CurveRecord, opts: &SurveyOptions) -> Result<heegner::GlobalIndex> {
    let prec = opts.precision_bits.max(64);
    let pairs = quadforms::heegner_pairs(curve.conductor, opts.dmax);
    let m = heegner::required_coefficients(&pairs, prec)?;
    let table = cached_table(curve, m, opts.cache_dir.as_deref())?;
    heegner::global_index_with_table(curve, &pairs, prec, &table)
}

/// Reuse a stored coefficient table when the cache has one that is long
/// enough; otherwise build and store.
fn cached_table(curve: &CurveRecord, m: u64, dir: Option<&Path>) -> Result<CoefficientCache> {
    let Some(dir) = dir else {
        return ec_arith::an_table(curve, m);
    };
    if let Some(table) = curve_store::load_cache(&curve.label, m, dir)? {
        return Ok(table);
    }
    let table = ec_arith::an_table(curve, m)?;
    curve_store::store_cache(&table, dir)?;
    Ok(table)
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "-".into(),
    }
}

/// Tab-separated report: a comment header, a column line, one row per
/// curve.
pub fn render_tsv(report: &SurveyReport) -> String {
    let mut out = format!(
        "# dmax={} precision_bits={} counterexamples={}\n",
        report.dmax, report.precision_bits, report.counterexamples
    );
    out.push_str("label\tconductor\tindex\tnu\tsha\tverdict\tpairs\ttorsion\tmillis\tstatus\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.label,
            r.conductor,
            opt(&r.index),
            opt(&r.nu),
            opt(&r.sha),
            r.verdict.as_deref().unwrap_or("-"),
            r.pairs_traced,
            r.torsion_traces,
            opt(&r.millis),
            r.status,
        ));
    }
    out
}

/// JSON report with a stable field order.
pub fn render_json(report: &SurveyReport) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map_err(|e| Error::Validation(format!("report serialisation failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec_arith::RationalPoint;
    use rug::Rational;

    fn record(
        label: &str,
        a: [i64; 5],
        n: u64,
        rank: u32,
        gen: Option<(i64, i64)>,
        tors: u32,
        sha: Option<u64>,
    ) -> CurveRecord {
        let g = gen.map(|(x, y)| RationalPoint::affine(Rational::from(x), Rational::from(y)));
        CurveRecord::new(label, a, n, rank, g, tors, sha).unwrap()
    }

    fn corpus() -> Vec<CurveRecord> {
        vec![
            // surveyed
            record("43a1", [0, 1, 1, 0, 0], 43, 1, Some((0, 0)), 1, None),
            record("37a1", [0, 0, 1, -1, 0], 37, 1, Some((0, 0)), 1, Some(1)),
            // dropped: rank zero
            record("11a1", [0, -1, 1, -10, -20], 11, 0, None, 5, None),
            // dropped: composite conductor field
            record("fake36", [0, 0, 1, -1, 0], 36, 1, Some((0, 0)), 1, None),
        ]
    }

    fn fast_opts() -> SurveyOptions {
        SurveyOptions {
            dmax: 24,
            precision_bits: 128,
            jobs: 1,
            with_timing: false,
            cache_dir: None,
        }
    }

    #[test]
    fn filters_and_sorts_the_corpus() {
        let report = run_survey(&corpus(), &fast_opts()).unwrap();
        let labels: Vec<&str> = report.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["37a1", "43a1"]);
        for row in &report.rows {
            assert_eq!(row.status, "ok");
            assert_eq!(row.index, Some(1));
            assert_eq!(row.verdict.as_deref(), Some("vacuous"));
            assert!(row.nu.is_some());
            assert!(row.millis.is_none());
        }
        assert_eq!(report.counterexamples, 0);
        assert_eq!(report.rows[0].sha, Some(1));
        assert_eq!(report.rows[1].sha, None);
    }

    #[test]
    fn rank_zero_only_input_yields_an_empty_report() {
        let curves = vec![record("11a1", [0, -1, 1, -10, -20], 11, 0, None, 5, None)];
        let report = run_survey(&curves, &fast_opts()).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.counterexamples, 0);
    }

    #[test]
    fn reports_without_timing_are_byte_identical() {
        let curves = corpus();
        let a = render_tsv(&run_survey(&curves, &fast_opts()).unwrap());
        let b = render_tsv(&run_survey(&curves, &fast_opts()).unwrap());
        assert_eq!(a, b);
        assert!(a.contains("37a1\t37\t1\t"));
        assert!(a.lines().nth(1).unwrap().starts_with("label\t"));
    }

    #[test]
    fn json_report_round_trips_and_skips_absent_fields() {
        let report = run_survey(&corpus(), &fast_opts()).unwrap();
        let text = render_json(&report).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["dmax"], 24);
        assert_eq!(value["rows"][0]["label"], "37a1");
        assert_eq!(value["rows"][0]["index"], 1);
        assert_eq!(value["rows"][0]["verdict"], "vacuous");
        assert!(value["rows"][0].get("millis").is_none());
        assert!(value["rows"][1].get("sha").is_none());
    }

    #[test]
    fn cache_directory_is_populated_and_reused() {
        let dir = tempfile::tempdir().unwrap();
        let mut opts = fast_opts();
        opts.cache_dir = Some(dir.path().to_path_buf());
        let curves = vec![record("37a1", [0, 0, 1, -1, 0], 37, 1, Some((0, 0)), 1, None)];
        let first = run_survey(&curves, &opts).unwrap();
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert!(!files.is_empty());
        let second = run_survey(&curves, &opts).unwrap();
        assert_eq!(render_tsv(&first), render_tsv(&second));
    }

    #[test]
    fn curve_failures_stay_in_their_row() {
        // a generator-less rank-one record fails its own row only
        let broken = record("37x1", [0, 0, 1, -1, 0], 37, 1, None, 1, None);
        let good = record("43a1", [0, 1, 1, 0, 0], 43, 1, Some((0, 0)), 1, None);
        let report = run_survey(&[broken, good], &fast_opts()).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[0].status.contains("generator"));
        assert_eq!(report.rows[0].index, None);
        assert_eq!(report.rows[0].verdict, None);
        assert_eq!(report.rows[1].status, "ok");
        assert_eq!(report.rows[1].index, Some(1));
    }
}
