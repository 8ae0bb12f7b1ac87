use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{EvalError, EvalReport};

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn summary_text(r: &EvalReport) -> String {
    let mut s = String::new();
    let sd = |v: Option<f64>| v.map(|v| format!(" (sd {v:.4})")).unwrap_or_default();
    let _ = writeln!(s, "mode: {}", r.mode);
    let _ = writeln!(s, "threshold criterion: {}", r.criterion);
    let _ = writeln!(s, "rows: {} used, {} dropped for missing features", r.rows_total - r.rows_dropped, r.rows_dropped);
    let _ = writeln!(s, "folds evaluated: {}", r.folds.len());
    if !r.skipped.is_empty() {
        let _ = writeln!(s, "folds skipped (single-class test set): {:?}", r.skipped);
    }
    let _ = writeln!(s, "auc: {:.4}{}", r.auc_mean, sd(r.auc_sd));
    let _ = writeln!(s, "accuracy: {:.4}{}", r.accuracy_mean, sd(r.accuracy_sd));
    let _ = writeln!(s, "threshold: {:.4}", r.threshold_mean);
    let _ = writeln!(s, "\nper-season accuracy:");
    for a in &r.per_season {
        let flag = if a.low_count { "  (low count)" } else { "" };
        let _ = writeln!(s, "  {:<12} {:.4}  n={}{}", a.season, a.accuracy, a.n, flag);
    }
    s
}

/// Writes `summary.csv`, `summary.txt`, `seasons.csv` and per-fold
/// `roc_fold{k}.csv` / `curves_fold{k}.csv` into `dir`.
pub fn write_report(dir: &Path, r: &EvalReport) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(std::io::Error::from)?;
    let rows = [
        ("auc_mean", r.auc_mean.to_string()),
        ("auc_sd", opt(r.auc_sd)),
        ("accuracy_mean", r.accuracy_mean.to_string()),
        ("accuracy_sd", opt(r.accuracy_sd)),
        ("threshold_mean", r.threshold_mean.to_string()),
        ("folds", r.folds.len().to_string()),
        ("folds_skipped", r.skipped.len().to_string()),
        ("rows_total", r.rows_total.to_string()),
        ("rows_dropped", r.rows_dropped.to_string()),
    ];
    w.write_record(["metric", "value"]).map_err(std::io::Error::from)?;
    for (k, v) in rows {
        w.write_record([k, v.as_str()]).map_err(std::io::Error::from)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("seasons.csv")).map_err(std::io::Error::from)?;
    w.write_record(["season", "accuracy"]).map_err(std::io::Error::from)?;
    for a in &r.per_season {
        w.write_record([a.season.clone(), a.accuracy.to_string()])
            .map_err(std::io::Error::from)?;
    }
    w.flush()?;

    for f in &r.folds {
        f.roc
            .write_csv(BufWriter::new(File::create(dir.join(format!("roc_fold{}.csv", f.fold)))?))?;
        f.training
            .write_curves_csv(BufWriter::new(File::create(dir.join(format!("curves_fold{}.csv", f.fold)))?))?;
    }

    let mut txt = BufWriter::new(File::create(dir.join("summary.txt"))?);
    txt.write_all(summary_text(r).as_bytes())?;
    txt.flush()?;
    Ok(())
}
