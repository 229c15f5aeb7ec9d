//! Line-aligned text formats: one sentence per line, space-separated values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Fixed six-decimal rendering used for every score file. Negative zero is
/// written as `0.000000`.
pub fn format_score(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

/// The value a score takes after a write/read cycle through a score file.
pub fn quantize(v: f64) -> f64 {
    format_score(v).parse().unwrap_or(v)
}

pub fn format_scores(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 10);
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format_score(v));
    }
    out
}

pub fn format_weights(values: &[u8]) -> String {
    let mut out = String::with_capacity(values.len() * 2);
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push(if v == 0 { '0' } else { '1' });
    }
    out
}

pub fn parse_scores(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|f| f.parse::<f64>().map_err(|_| format!("not a number: `{f}`")))
        .collect()
}

pub fn parse_weights(line: &str) -> std::result::Result<Vec<u8>, String> {
    line.split_whitespace()
        .map(|f| match f {
            "0" => Ok(0),
            "1" => Ok(1),
            _ => Err(format!("weight must be 0 or 1, got `{f}`")),
        })
        .collect()
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::file(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}

/// Reads a file in batches of at most `batch` lines, calling `f` with the
/// index of the first line in the batch.
pub fn for_each_batch<F>(path: &Path, batch: usize, mut f: F) -> Result<()>
where
    F: FnMut(usize, Vec<String>) -> Result<()>,
{
    let mut reader = open(path)?;
    let mut start = 0;
    let mut lines = Vec::with_capacity(batch);
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(|e| Error::file(path, e))?;
        if n == 0 {
            break;
        }
        let line = buf.trim_end_matches(['\n', '\r']).to_owned();
        lines.push(line);
        if lines.len() == batch {
            let full = std::mem::replace(&mut lines, Vec::with_capacity(batch));
            let count = full.len();
            f(start, full)?;
            start += count;
        }
    }
    if !lines.is_empty() {
        f(start, lines)?;
    }
    Ok(())
}

/// Reads a whole score file into memory.
pub fn read_score_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for_each_batch(path, 4096, |start, lines| {
        for (i, l) in lines.iter().enumerate() {
            out.push(parse_scores(l).map_err(|msg| Error::Format {
                path: path.to_owned(),
                line: start + i + 1,
                msg,
            })?);
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn read_weight_file(path: &Path) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for_each_batch(path, 4096, |start, lines| {
        for (i, l) in lines.iter().enumerate() {
            out.push(parse_weights(l).map_err(|msg| Error::Format {
                path: path.to_owned(),
                line: start + i + 1,
                msg,
            })?);
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn write_lines<W: Write, I: IntoIterator<Item = S>, S: AsRef<str>>(sink: &mut W, lines: I) -> Result<()> {
    for l in lines {
        sink.write_all(l.as_ref().as_bytes())?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}
