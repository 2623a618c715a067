//! CSV reports. Floats are written with six decimals so reruns are
//! byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::train::RunReport;

pub const REPORT_HEADER: [&str; 6] = [
    "seed",
    "synthesizer",
    "epoch_selected",
    "output_acc",
    "symbol_acc",
    "pseudolabel_stability",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_report_csv<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record([
            r.seed.to_string(),
            r.synthesizer.clone(),
            r.epoch_selected.to_string(),
            fmt_f64(r.output_acc),
            fmt_f64(r.symbol_acc),
            r.pseudolabel_stability.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-epoch training accuracy, one row per seed and epoch.
pub fn write_epochs_csv<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "epoch", "train_output_acc"])?;
    for r in reports {
        for (e, a) in r.train_output_acc.iter().enumerate() {
            w.write_record([r.seed.to_string(), (e + 1).to_string(), fmt_f64(*a)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Headerless square matrix of counts, rows are true classes.
pub fn write_confusion_csv<W: Write>(confusion: &[Vec<u64>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in confusion {
        w.write_record(row.iter().map(u64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_confusion_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<u64>>> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Format(format!("{}: non-count entry {f:?}", path.display())))
            })
            .collect::<Result<Vec<u64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
        return Err(Error::Format(format!("{}: confusion matrix is not square", path.display())));
    }
    Ok(rows)
}

/// Row-normalized rates; all-zero rows stay zero.
pub fn normalize_confusion(confusion: &[Vec<u64>]) -> Vec<Vec<f64>> {
    confusion
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect()
}

pub fn write_rates_csv<W: Write>(rates: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in rates {
        w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn confusion_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("confusion_{seed}.csv"))
}

/// Pools the confusion matrices behind a heatmap source. A run report
/// (`seed,...` header) names its seeds, whose `confusion_<seed>.csv`
/// siblings are summed; any other file is read as a confusion matrix.
pub fn pooled_confusion(source: impl AsRef<Path>) -> Result<Vec<Vec<u64>>> {
    let source = source.as_ref();
    let text = fs::read_to_string(source)?;
    if !text.starts_with("seed,") {
        return read_confusion_csv(source);
    }
    let dir = source.parent().unwrap_or(Path::new("."));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut pooled: Option<Vec<Vec<u64>>> = None;
    for rec in r.records() {
        let rec = rec?;
        let seed: u64 = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("{}: bad seed column", source.display())))?;
        let m = read_confusion_csv(confusion_path(dir, seed))?;
        pooled = Some(match pooled {
            None => m,
            Some(acc) if acc.len() == m.len() => acc
                .iter()
                .zip(&m)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
            Some(_) => return Err(Error::Format("confusion matrices differ in size".into())),
        });
    }
    pooled.ok_or_else(|| Error::Format(format!("{}: report lists no runs", source.display())))
}

/// Writes `report.csv`, `epochs.csv` and one `confusion_<seed>.csv` per run.
pub fn write_run_files(dir: &Path, reports: &[RunReport]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_report_csv(reports, fs::File::create(dir.join("report.csv"))?)?;
    write_epochs_csv(reports, fs::File::create(dir.join("epochs.csv"))?)?;
    for r in reports {
        write_confusion_csv(&r.confusion, fs::File::create(confusion_path(dir, r.seed))?)?;
    }
    Ok(())
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(seed: u64, stability: Option<f64>) -> RunReport {
        RunReport {
            seed,
            synthesizer: "random".into(),
            train_output_acc: vec![0.5, 0.75],
            epoch_selected: 2,
            output_acc: 0.9,
            symbol_acc: 2.0 / 3.0,
            confusion: vec![vec![3, 1], vec![0, 4]],
            pseudolabel_stability: stability,
            implication_violations: 0,
        }
    }

    #[test]
    fn report_csv_layout() {
        let mut buf = Vec::new();
        write_report_csv(&[report(1, Some(0.98)), report(2, None)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "seed,synthesizer,epoch_selected,output_acc,symbol_acc,pseudolabel_stability\n\
             1,random,2,0.900000,0.666667,0.980000\n\
             2,random,2,0.900000,0.666667,\n"
        );
    }

    #[test]
    fn heatmap_pools_and_normalizes() {
        let dir = tempfile::tempdir().unwrap();
        write_run_files(dir.path(), &[report(1, None), report(2, None)]).unwrap();
        let pooled = pooled_confusion(dir.path().join("report.csv")).unwrap();
        assert_eq!(pooled, vec![vec![6, 2], vec![0, 8]]);
        assert_eq!(read_confusion_csv(confusion_path(dir.path(), 1)).unwrap(), vec![vec![3, 1], vec![0, 4]]);
        let rates = normalize_confusion(&pooled);
        let mut buf = Vec::new();
        write_rates_csv(&rates, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.750000,0.250000\n0.000000,1.000000\n");
    }

    #[test]
    fn rejects_ragged_confusion() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_confusion_csv(&p).is_err());
    }

    #[test]
    fn mean_std_of_constants() {
        assert_eq!(mean_std(&[0.5, 0.5]), (0.5, 0.0));
        assert_eq!(mean_std(&[0.0, 1.0]), (0.5, 0.5));
    }
}
