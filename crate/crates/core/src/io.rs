//! Reading and writing pair tables.
//!
//! Two layouts are supported: a long CSV `chr_a,chr_b,count` with one cell
//! per line, and an upper-triangular whitespace matrix whose header row
//! lists column labels `2 ... n` and optionally `Sum`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::table::{cell_count, offset, pairs, PairIndex, PairTable, TriangularTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    LongCsv,
    Matrix,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line: line as usize, message: message.into() }
}

fn parse_count(field: &str, line: u64) -> Result<u64> {
    if let Ok(v) = field.parse::<u64>() {
        return Ok(v);
    }
    match field.parse::<i64>() {
        Ok(v) if v < 0 => Err(parse_err(line, format!("negative count {v}"))),
        _ => Err(parse_err(line, format!("count {field:?} is not a non-negative integer"))),
    }
}

fn parse_category(field: &str, line: u64) -> Result<usize> {
    match field.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(parse_err(line, format!("category {field:?} is not a positive integer"))),
    }
}

/// Parses the long CSV layout. Unlisted cells are zero. Without `n` the
/// number of categories is the largest label seen.
pub fn parse_long_csv(text: &str, n: Option<usize>) -> Result<PairTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut entries: Vec<(usize, usize, u64, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let a = parse_category(&record[0], line)?;
        let b = parse_category(&record[1], line)?;
        if a >= b {
            return Err(parse_err(line, format!("pair ({a},{b}) must satisfy chr_a < chr_b")));
        }
        let c = parse_count(&record[2], line)?;
        entries.push((a, b, c, line));
    }
    let n = match n {
        Some(n) => n,
        None => entries.iter().map(|e| e.1).max().unwrap_or(0),
    };
    let mut table = PairTable::zeros(n)?;
    let mut seen = vec![false; cell_count(n)];
    for (a, b, c, line) in entries {
        if b > n {
            return Err(parse_err(line, format!("category {b} exceeds n = {n}")));
        }
        let o = offset(n, a, b);
        if std::mem::replace(&mut seen[o], true) {
            return Err(parse_err(line, format!("duplicate cell ({a},{b})")));
        }
        table.cells_mut()[o] = c;
    }
    Ok(table)
}

/// A matrix-layout table together with its optional `Sum` column.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTable<T> {
    pub table: TriangularTable<T>,
    pub sums: Option<Vec<T>>,
}

/// Parses the matrix layout. Row `j` holds the values for `k = j+1..n`
/// followed by the row sum when the header ends in `Sum`. The final row,
/// which has no cells, may be omitted.
pub fn parse_matrix<T>(text: &str) -> Result<MatrixTable<T>>
where
    T: FromStr + Copy + Default,
{
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
    let mut labels: Vec<&str> = header.split_whitespace().skip(1).collect();
    let has_sum = labels.last().is_some_and(|l| l.eq_ignore_ascii_case("sum"));
    if has_sum {
        labels.pop();
    }
    for (i, l) in labels.iter().enumerate() {
        if l.parse::<usize>().ok() != Some(i + 2) {
            return Err(parse_err(hline, format!("column label {l:?} should be {}", i + 2)));
        }
    }
    let n = labels.len() + 1;
    let mut table = TriangularTable::<T>::zeros(n)?;
    let mut sums = has_sum.then(|| vec![T::default(); n]);
    let mut next_row = 1;
    for (line, row) in lines {
        let mut fields = row.split_whitespace();
        let label = fields.next().unwrap_or_default();
        if label.parse::<usize>().ok() != Some(next_row) || next_row > n {
            return Err(parse_err(line, format!("expected row {next_row}, found {label:?}")));
        }
        let j = next_row;
        let values: Vec<&str> = fields.collect();
        let expected = n - j + usize::from(has_sum);
        if values.len() != expected {
            return Err(parse_err(line, format!("row {j} has {} values, expected {expected}", values.len())));
        }
        let parse = |s: &str| s.parse::<T>().map_err(|_| parse_err(line, format!("bad value {s:?}")));
        for (k, v) in (j + 1..=n).zip(&values) {
            table.cells_mut()[offset(n, j, k)] = parse(v)?;
        }
        if let Some(s) = sums.as_mut() {
            s[j - 1] = parse(values[values.len() - 1])?;
        }
        next_row += 1;
    }
    if next_row < n {
        return Err(parse_err(0, format!("missing row {next_row}")));
    }
    Ok(MatrixTable { table, sums })
}

/// Parses a count table in matrix layout; a `Sum` column must equal the margins.
pub fn parse_count_matrix(text: &str) -> Result<PairTable> {
    let parsed = parse_matrix::<i64>(text)?;
    if let Some((idx, _)) = parsed.table.iter().find(|&(_, v)| v < 0) {
        return Err(Error::Parse { line: 0, message: format!("negative count at {idx}") });
    }
    let table = parsed.table.map(|v| v as u64);
    if let Some(sums) = parsed.sums {
        let margins = table.margins();
        for (k, (&s, &u)) in sums.iter().zip(margins.as_slice()).enumerate() {
            if s < 0 || s as u64 != u {
                return Err(parse_err(0, format!("row {} sum {s} disagrees with margin {u}", k + 1)));
            }
        }
    }
    Ok(table)
}

pub fn parse_table(text: &str, format: InputFormat, n: Option<usize>) -> Result<PairTable> {
    let table = match format {
        InputFormat::LongCsv => parse_long_csv(text, n)?,
        InputFormat::Matrix => parse_count_matrix(text)?,
    };
    if let Some(n) = n {
        if n != table.n() {
            return Err(Error::DimensionMismatch { left: table.n(), right: n });
        }
    }
    Ok(table)
}

pub fn read_table(path: &Path, format: InputFormat, n: Option<usize>) -> Result<PairTable> {
    parse_table(&std::fs::read_to_string(path)?, format, n)
}

/// Long CSV with every cell listed, zeros included.
pub fn write_long_csv(t: &PairTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    let write = |w: &mut csv::Writer<Vec<u8>>| -> Result<()> {
        w.write_record(["chr_a", "chr_b", "count"]).map_err(io)?;
        for (idx, c) in t.iter() {
            w.serialize((idx.j(), idx.k(), c)).map_err(io)?;
        }
        Ok(())
    };
    write(&mut w).expect("writing to memory cannot fail");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Rounds to `digits` significant digits and prints without exponent.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1) as i32;
    let scale = |v: f64| 10f64.powi(v.abs().log10().floor() as i32 - digits + 1);
    let step = scale(x);
    let rounded = (x / step).round() * step;
    let decimals = (-(rounded.abs().log10().floor() as i32) + digits - 1).max(0) as usize;
    let s = format!("{rounded:.decimals$}");
    if s.starts_with("-") && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Tab-separated matrix layout of a real table, with a `Sum` column,
/// using `digits` significant digits.
pub fn render_tsv(t: &TriangularTable<f64>, digits: usize) -> String {
    render_matrix(t, |x| format_significant(x, digits), |s| {
        // sums keep at least their integer digits
        let whole = s.abs().log10().floor().max(0.0) as usize + 1;
        format_significant(s, digits.max(whole))
    })
}

/// Tab-separated matrix layout of a count table, with a `Sum` column.
pub fn render_count_tsv(t: &PairTable) -> String {
    render_matrix(&t.to_real(), |x| format!("{x:.0}"), |s| format!("{s:.0}"))
}

fn render_matrix(t: &TriangularTable<f64>, cell: impl Fn(f64) -> String, sum: impl Fn(f64) -> String) -> String {
    let n = t.n();
    let mut sums = vec![0.0; n];
    for (idx, v) in t.iter() {
        sums[idx.j() - 1] += v;
        sums[idx.k() - 1] += v;
    }
    let mut out = String::from("Chr");
    for k in 2..=n {
        let _ = write!(out, "\t{k}");
    }
    out.push_str("\tSum\n");
    for j in 1..=n {
        let _ = write!(out, "{j}");
        for _ in 2..=j {
            out.push('\t');
        }
        for k in j + 1..=n {
            let _ = write!(out, "\t{}", cell(t[PairIndex::new_unchecked(j, k)]));
        }
        let _ = writeln!(out, "\t{}", sum(sums[j - 1]));
    }
    out
}

/// Every cell of `t` as `(pair, value)`, in storage order.
pub fn cell_list<T: Copy + Default>(t: &TriangularTable<T>) -> Vec<(PairIndex, T)> {
    pairs(t.n()).map(|p| (p, t[p])).collect()
}
