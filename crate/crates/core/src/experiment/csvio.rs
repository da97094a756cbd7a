//! CSV files: comma separated, header row, LF line endings, floats printed
//! with 17 significant digits so that reading a file back is exact.

use std::io::{Read, Write};
use std::str::FromStr;

use crate::algo::{Algorithm, Feedback};
use crate::error::{Error, Result};

use super::sweep::{RawRow, SummaryRow};

pub const RAW_HEADER: [&str; 10] = [
    "algorithm",
    "feedback",
    "eta",
    "m",
    "n",
    "total",
    "seed",
    "gap",
    "gap_stderr",
    "wall_ms",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "algorithm", "feedback", "eta", "total", "count", "mean_gap", "std_gap",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

fn field<T: FromStr>(record: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::InvalidArgument(format!("bad value `{raw}` in column `{name}`"))
    })
}

fn algorithm(record: &csv::StringRecord, i: usize) -> Result<Algorithm> {
    let raw = record.get(i).unwrap_or("");
    Algorithm::from_name(raw)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{raw}`")))
}

fn feedback(record: &csv::StringRecord, i: usize) -> Result<Feedback> {
    match record.get(i) {
        Some("reward") => Ok(Feedback::Reward),
        Some("preference") => Ok(Feedback::Preference),
        other => Err(Error::InvalidArgument(format!("unknown feedback {other:?}"))),
    }
}

fn check_header(r: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = r.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::InvalidArgument(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    Ok(())
}

pub fn write_raw<W: Write>(w: W, rows: &[RawRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(RAW_HEADER)?;
    for r in rows {
        out.write_record([
            r.algorithm.name().to_string(),
            r.feedback.as_str().to_string(),
            fmt_f64(r.eta),
            r.m.to_string(),
            r.n.to_string(),
            r.total.to_string(),
            r.seed.to_string(),
            fmt_f64(r.gap),
            fmt_f64(r.gap_stderr),
            r.wall_ms.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_raw<R: Read>(r: R) -> Result<Vec<RawRow>> {
    let mut input = reader(r);
    check_header(&mut input, &RAW_HEADER)?;
    input
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(RawRow {
                algorithm: algorithm(&rec, 0)?,
                feedback: feedback(&rec, 1)?,
                eta: field(&rec, 2, "eta")?,
                m: field(&rec, 3, "m")?,
                n: field(&rec, 4, "n")?,
                total: field(&rec, 5, "total")?,
                seed: field(&rec, 6, "seed")?,
                gap: field(&rec, 7, "gap")?,
                gap_stderr: field(&rec, 8, "gap_stderr")?,
                wall_ms: field(&rec, 9, "wall_ms")?,
            })
        })
        .collect()
}

/// Writes `# `-prefixed metadata lines, then the table.
pub fn write_summary<W: Write>(mut w: W, metadata: &[String], rows: &[SummaryRow]) -> Result<()> {
    for line in metadata {
        writeln!(w, "# {line}")?;
    }
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in rows {
        out.write_record([
            r.algorithm.name().to_string(),
            r.feedback.as_str().to_string(),
            fmt_f64(r.eta),
            r.total.to_string(),
            r.count.to_string(),
            fmt_f64(r.mean_gap),
            fmt_f64(r.std_gap),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut input = reader(r);
    check_header(&mut input, &SUMMARY_HEADER)?;
    input
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(SummaryRow {
                algorithm: algorithm(&rec, 0)?,
                feedback: feedback(&rec, 1)?,
                eta: field(&rec, 2, "eta")?,
                total: field(&rec, 3, "total")?,
                count: field(&rec, 4, "count")?,
                mean_gap: field(&rec, 5, "mean_gap")?,
                std_gap: field(&rec, 6, "std_gap")?,
            })
        })
        .collect()
}

/// Rows of a figure panel: one line per curve point.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureRow {
    pub panel: String,
    pub algorithm: Algorithm,
    pub feedback: Feedback,
    pub eta: f64,
    pub total: usize,
    pub m: usize,
    pub n: usize,
    pub repeats: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
}

pub const FIGURE_HEADER: [&str; 10] = [
    "panel", "algorithm", "feedback", "eta", "total", "m", "n", "repeats", "mean_gap", "std_gap",
];

pub fn write_figure<W: Write>(w: W, rows: &[FigureRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(FIGURE_HEADER)?;
    for r in rows {
        out.write_record([
            r.panel.clone(),
            r.algorithm.name().to_string(),
            r.feedback.as_str().to_string(),
            fmt_f64(r.eta),
            r.total.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.repeats.to_string(),
            fmt_f64(r.mean_gap),
            fmt_f64(r.std_gap),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_figure<R: Read>(r: R) -> Result<Vec<FigureRow>> {
    let mut input = reader(r);
    check_header(&mut input, &FIGURE_HEADER)?;
    input
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(FigureRow {
                panel: rec.get(0).unwrap_or("").to_string(),
                algorithm: algorithm(&rec, 1)?,
                feedback: feedback(&rec, 2)?,
                eta: field(&rec, 3, "eta")?,
                total: field(&rec, 4, "total")?,
                m: field(&rec, 5, "m")?,
                n: field(&rec, 6, "n")?,
                repeats: field(&rec, 7, "repeats")?,
                mean_gap: field(&rec, 8, "mean_gap")?,
                std_gap: field(&rec, 9, "std_gap")?,
            })
        })
        .collect()
}

pub const COVERAGE_HEADER: [&str; 10] = [
    "contexts",
    "count_or_dim",
    "actions",
    "d2",
    "d2_centered",
    "c_global",
    "c_local_bound",
    "rho",
    "sampled",
    "pool",
];

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageRow {
    /// `finite` or `sphere`.
    pub contexts: String,
    pub count_or_dim: usize,
    pub actions: usize,
    pub d2: f64,
    pub d2_centered: f64,
    pub c_global: f64,
    pub c_local_bound: f64,
    pub rho: f64,
    pub sampled: bool,
    pub pool: usize,
}

pub fn write_coverage<W: Write>(w: W, rows: &[CoverageRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(COVERAGE_HEADER)?;
    for r in rows {
        out.write_record([
            r.contexts.clone(),
            r.count_or_dim.to_string(),
            r.actions.to_string(),
            fmt_f64(r.d2),
            fmt_f64(r.d2_centered),
            fmt_f64(r.c_global),
            fmt_f64(r.c_local_bound),
            fmt_f64(r.rho),
            r.sampled.to_string(),
            r.pool.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_coverage<R: Read>(r: R) -> Result<Vec<CoverageRow>> {
    let mut input = reader(r);
    check_header(&mut input, &COVERAGE_HEADER)?;
    input
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(CoverageRow {
                contexts: rec.get(0).unwrap_or("").to_string(),
                count_or_dim: field(&rec, 1, "count_or_dim")?,
                actions: field(&rec, 2, "actions")?,
                d2: field(&rec, 3, "d2")?,
                d2_centered: field(&rec, 4, "d2_centered")?,
                c_global: field(&rec, 5, "c_global")?,
                c_local_bound: field(&rec, 6, "c_local_bound")?,
                rho: field(&rec, 7, "rho")?,
                sampled: field(&rec, 8, "sampled")?,
                pool: field(&rec, 9, "pool")?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, 0.0, f64::INFINITY] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn summary_skips_metadata() {
        let rows = vec![SummaryRow {
            algorithm: Algorithm::Offline,
            feedback: Feedback::Reward,
            eta: 0.5,
            total: 10,
            count: 3,
            mean_gap: 0.25,
            std_gap: 0.125,
        }];
        let mut buf = Vec::new();
        write_summary(&mut buf, &["master_seed=1".into()], &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# master_seed=1\nalgorithm,"));
        assert!(!text.contains('\r'));
        assert_eq!(read_summary(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn wrong_header_rejected() {
        let text = "a,b\n1,2\n";
        assert!(read_raw(text.as_bytes()).is_err());
    }
}
