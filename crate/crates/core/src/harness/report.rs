//! Error reports and their CSV / plot-data serializations.
//!
//! Floats are written with 17 significant digits so that files are
//! byte-identical across runs and parse back to the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Fixed 17-significant-digit formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Error and bound at one time level of one ladder entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub m: usize,
    pub t_m: f64,
    pub error_l2: f64,
    pub error_max: f64,
    pub bound_e: f64,
    pub bound_e_tilde: f64,
    /// `error_max / bound_e`.
    pub ratio: f64,
}

/// All rows of one run with `steps` time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub steps: usize,
    pub rows: Vec<ErrorRow>,
}

impl LadderEntry {
    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.error_max).fold(0.0, f64::max)
    }

    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// Pairwise rate `log2(e(M)/e(2M))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub m_coarse: usize,
    pub m_fine: usize,
    pub error_coarse: f64,
    pub error_fine: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorReport {
    pub label: String,
    pub entries: Vec<LadderEntry>,
    pub rates: Vec<RateRow>,
}

impl ErrorReport {
    pub fn global_max_error(&self) -> f64 {
        self.entries.iter().map(LadderEntry::max_error).fold(0.0, f64::max)
    }

    /// Rate over the whole ladder, `log2(e_first/e_last) / (#doublings)`.
    pub fn overall_rate(&self) -> Option<f64> {
        let first = self.rates.first()?;
        let last = self.rates.last()?;
        let doublings = ((last.m_fine / first.m_coarse) as f64).log2();
        Some((first.error_coarse / last.error_fine).log2() / doublings)
    }

    /// Pretty table for terminals.
    pub fn rate_table(&self) -> String {
        let mut s = format!("{:>8} {:>14} {:>8}\n", "M", "max error", "rate");
        for e in &self.entries {
            let rate = self
                .rates
                .iter()
                .find(|r| r.m_coarse == e.steps)
                .map_or(String::from("-"), |r| format!("{:.3}", r.rate));
            s.push_str(&format!("{:>8} {:>14.4e} {:>8}\n", e.steps, e.max_error(), rate));
        }
        s
    }
}

const ROW_HEADER: [&str; 8] = ["M", "m", "t_m", "error_L2", "error_max", "bound_E", "bound_E_tilde", "ratio"];
const RATE_HEADER: [&str; 5] = ["M_coarse", "M_fine", "error_coarse", "error_fine", "rate"];

/// Per-step rows of every ladder entry.
pub fn emit_csv(report: &ErrorReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ROW_HEADER)?;
    for e in &report.entries {
        for r in &e.rows {
            w.write_record([
                e.steps.to_string(),
                r.m.to_string(),
                fmt_f64(r.t_m),
                fmt_f64(r.error_l2),
                fmt_f64(r.error_max),
                fmt_f64(r.bound_e),
                fmt_f64(r.bound_e_tilde),
                fmt_f64(r.ratio),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads back a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<LadderEntry>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut entries: Vec<LadderEntry> = Vec::new();
    for rec in rd.deserialize::<(usize, usize, f64, f64, f64, f64, f64, f64)>() {
        let (steps, m, t_m, error_l2, error_max, bound_e, bound_e_tilde, ratio) = rec?;
        let row = ErrorRow {
            m,
            t_m,
            error_l2,
            error_max,
            bound_e,
            bound_e_tilde,
            ratio,
        };
        match entries.last_mut() {
            Some(e) if e.steps == steps => e.rows.push(row),
            _ => entries.push(LadderEntry { steps, rows: vec![row] }),
        }
    }
    Ok(entries)
}

pub fn emit_rates_csv(report: &ErrorReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RATE_HEADER)?;
    for r in &report.rates {
        w.write_record([
            r.m_coarse.to_string(),
            r.m_fine.to_string(),
            fmt_f64(r.error_coarse),
            fmt_f64(r.error_fine),
            fmt_f64(r.rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated `(t_m, error, bound)` triples, one block per ladder
/// entry, blocks separated by two blank lines (gnuplot `index`).
pub fn emit_plotdata(report: &ErrorReport, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# t_m error_max bound_E")?;
    for (i, e) in report.entries.iter().enumerate() {
        if i > 0 {
            writeln!(w, "\n")?;
        }
        writeln!(w, "# M = {}", e.steps)?;
        for r in &e.rows {
            writeln!(w, "{} {} {}", fmt_f64(r.t_m), fmt_f64(r.error_max), fmt_f64(r.bound_e))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a CSV with the given header and numeric rows; columns listed in
/// `int_cols` are written as integers.
pub fn emit_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
    int_cols: &[usize],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        let rec: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, &x)| if int_cols.contains(&i) { format!("{}", x as i64) } else { fmt_f64(x) })
            .collect();
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ErrorReport {
        let row = |m: usize, e: f64| ErrorRow {
            m,
            t_m: (m as f64 / 4.0).powi(2),
            error_l2: e / 3.0,
            error_max: e,
            bound_e: 0.1 / (m as f64),
            bound_e_tilde: 0.2 / 3.0,
            ratio: e * 10.0 * m as f64,
        };
        ErrorReport {
            label: "sample".into(),
            entries: vec![
                LadderEntry {
                    steps: 4,
                    rows: (1..=4).map(|m| row(m, 1e-3 / m as f64)).collect(),
                },
                LadderEntry {
                    steps: 8,
                    rows: (1..=8).map(|m| row(m, std::f64::consts::PI * 1e-4 / m as f64)).collect(),
                },
            ],
            rates: vec![RateRow {
                m_coarse: 4,
                m_fine: 8,
                error_coarse: 1e-3,
                error_fine: std::f64::consts::PI * 1e-4,
                rate: (1e-3 / (std::f64::consts::PI * 1e-4)).log2(),
            }],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rep = sample();
        emit_csv(&rep, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rep.entries);
    }

    #[test]
    fn emission_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_csv(&sample(), &a).unwrap();
        emit_csv(&sample(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("6.2500000000000000e-2"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        emit_csv(&ErrorReport::default(), &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "M,m,t_m,error_L2,error_max,bound_E,bound_E_tilde,ratio\n"
        );
        assert!(read_csv(&path).unwrap().is_empty());
        let rates = dir.path().join("rates.csv");
        emit_rates_csv(&ErrorReport::default(), &rates).unwrap();
        assert_eq!(std::fs::read_to_string(&rates).unwrap().lines().count(), 1);
    }

    #[test]
    fn plotdata_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.dat");
        emit_plotdata(&sample(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        assert_eq!(data.len(), 12);
        assert_eq!(data[0].split_whitespace().count(), 3);
        assert_eq!(text.matches("# M =").count(), 2);
    }

    #[test]
    fn overall_rate() {
        let rep = sample();
        assert!((rep.overall_rate().unwrap() - rep.rates[0].rate).abs() < 1e-15);
        assert!(ErrorReport::default().overall_rate().is_none());
        assert!(rep.rate_table().contains("1.670"));
    }
}
