use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use smallvec::SmallVec;

use super::vocab::{BOS_WORD, EOS_WORD, UNK_WORD};
use super::{Entry, Gram, GramTable, NGramModel, Vocabulary};
use crate::error::{Error, Result};

const LN_10: f64 = std::f64::consts::LN_10;

/// Writes the model as ARPA text with base-10 log values. Entries within a
/// section are sorted by id sequence so output is deterministic.
pub fn write_arpa<W: Write>(model: &NGramModel, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    let vocab = model.vocab();
    writeln!(out, "\\data\\")?;
    for n in 1..=model.order() {
        writeln!(out, "ngram {}={}", n, model.count(n))?;
    }
    for n in 1..=model.order() {
        writeln!(out)?;
        writeln!(out, "\\{}-grams:", n)?;
        let mut entries: Vec<(&Gram, &Entry)> = model.grams(n).collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
        for (gram, entry) in entries {
            write!(out, "{}\t", entry.log_prob / LN_10)?;
            for (i, &id) in gram.iter().enumerate() {
                if i > 0 {
                    out.write_all(b" ")?;
                }
                out.write_all(vocab.word(id).unwrap_or(UNK_WORD).as_bytes())?;
            }
            if let Some(b) = entry.backoff {
                write!(out, "\t{}", b / LN_10)?;
            }
            writeln!(out)?;
        }
    }
    writeln!(out)?;
    writeln!(out, "\\end\\")?;
    out.flush()?;
    Ok(())
}

pub fn write_arpa_file(model: &NGramModel, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::file(path, e))?;
    write_arpa(model, f)
}

pub fn read_arpa_file(path: &Path) -> Result<NGramModel> {
    let f = File::open(path).map_err(|e| Error::file(path, e))?;
    read_arpa(BufReader::new(f))
}

/// Parses ARPA text. Anything before the `\data\` line is ignored.
pub fn read_arpa<R: BufRead>(source: R) -> Result<NGramModel> {
    let mut lines = source.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = move || -> Result<Option<(usize, String)>> {
        match lines.next() {
            Some((n, Ok(l))) => Ok(Some((n, l))),
            Some((_, Err(e))) => Err(e.into()),
            None => Ok(None),
        }
    };

    // Header.
    let mut last_line = 0;
    loop {
        match next()? {
            Some((n, l)) => {
                last_line = n;
                if l.trim() == "\\data\\" {
                    break;
                }
            }
            None => return Err(Error::arpa(last_line, "missing \\data\\ header")),
        }
    }

    let mut declared: Vec<usize> = Vec::new();
    let mut pending: Option<(usize, String)> = None;
    while let Some((n, l)) = next()? {
        let t = l.trim();
        if t.is_empty() {
            if declared.is_empty() {
                continue;
            }
            break;
        }
        let Some(rest) = t.strip_prefix("ngram ") else {
            pending = Some((n, l));
            break;
        };
        let (k, count) = rest
            .split_once('=')
            .ok_or_else(|| Error::arpa(n, format!("malformed count line `{t}`")))?;
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Error::arpa(n, format!("non-numeric n-gram order `{}`", k.trim())))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| Error::arpa(n, format!("non-numeric n-gram count `{}`", count.trim())))?;
        if k != declared.len() + 1 {
            return Err(Error::arpa(n, format!("expected ngram {} count, found ngram {k}", declared.len() + 1)));
        }
        declared.push(count);
    }
    if declared.is_empty() {
        return Err(Error::arpa(last_line.max(1), "no n-gram counts in \\data\\ section"));
    }
    let order = declared.len();

    let mut vocab = Vocabulary::new();
    let mut grams: Vec<GramTable> = vec![GramTable::default(); order];
    let mut section: Option<usize> = None;
    let mut listed = 0usize;
    let mut saw_end = false;

    let finish_section = |section: Option<usize>, listed: usize, line: usize| -> Result<()> {
        if let Some(k) = section {
            if listed != declared[k - 1] {
                return Err(Error::arpa(
                    line,
                    format!(
                        "\\{k}-grams: section lists {listed} entries but \\data\\ declares {}",
                        declared[k - 1]
                    ),
                ));
            }
        }
        Ok(())
    };

    loop {
        let (n, l) = match pending.take() {
            Some(p) => p,
            None => match next()? {
                Some(p) => p,
                None => break,
            },
        };
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        if t == "\\end\\" {
            finish_section(section, listed, n)?;
            saw_end = true;
            break;
        }
        if t.starts_with('\\') {
            finish_section(section, listed, n)?;
            let k = t
                .strip_prefix('\\')
                .and_then(|s| s.strip_suffix("-grams:"))
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::arpa(n, format!("malformed section header `{t}`")))?;
            let expected = section.map_or(1, |s| s + 1);
            if k != expected || k > order {
                return Err(Error::arpa(n, format!("unexpected section header `{t}`")));
            }
            section = Some(k);
            listed = 0;
            continue;
        }
        let Some(k) = section else {
            return Err(Error::arpa(n, format!("entry outside of any n-gram section: `{t}`")));
        };

        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != k + 1 && fields.len() != k + 2 {
            return Err(Error::arpa(n, format!("\\{k}-grams: entry has {} fields", fields.len())));
        }
        let log_prob = parse_log10(fields[0], n)?;
        let backoff = match fields.get(k + 1) {
            Some(f) => Some(parse_log10(f, n)?),
            None => None,
        };
        let mut gram: Gram = SmallVec::with_capacity(k);
        for w in &fields[1..=k] {
            let id = if k == 1 {
                vocab.insert(w)
            } else {
                vocab
                    .id(w)
                    .ok_or_else(|| Error::arpa(n, format!("word `{w}` has no unigram entry")))?
            };
            gram.push(id);
        }
        if grams[k - 1].insert(gram, Entry { log_prob, backoff }).is_some() {
            return Err(Error::arpa(n, format!("duplicate entry `{}`", fields[1..=k].join(" "))));
        }
        listed += 1;
    }

    if !saw_end {
        return Err(Error::arpa(last_line, "missing \\end\\ marker"));
    }
    if section != Some(order) {
        return Err(Error::arpa(last_line, format!("missing \\{}-grams: section", section.map_or(1, |s| s + 1))));
    }
    for marker in [UNK_WORD, BOS_WORD, EOS_WORD] {
        let id = vocab.id(marker).expect("reserved");
        if !grams[0].contains_key([id].as_slice()) {
            return Err(Error::arpa(last_line, format!("no unigram entry for {marker}")));
        }
    }
    Ok(NGramModel::from_parts(vocab, grams, None, None))
}

fn parse_log10(field: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map(|v| v * LN_10)
        .map_err(|_| Error::arpa(line, format!("non-numeric value `{field}`")))
}
