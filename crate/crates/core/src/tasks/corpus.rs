//! Corpus readers and writers.

use std::io::{BufRead, Write};

use super::parse::ParseExample;
use crate::error::{BsoError, Result};

/// One whitespace-tokenized sentence per line; blank lines give empty sentences.
pub fn read_plain<R: BufRead>(r: R) -> Result<Vec<Vec<String>>> {
    r.lines()
        .map(|l| Ok(l?.split_whitespace().map(String::from).collect()))
        .collect()
}

pub fn write_plain<W: Write, S: AsRef<str>>(w: &mut W, sentences: &[Vec<S>]) -> Result<()> {
    for s in sentences {
        let line: Vec<&str> = s.iter().map(AsRef::as_ref).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Tab-separated `index form head label` rows, sentences separated by blank lines.
pub fn read_conll<R: BufRead>(r: R) -> Result<Vec<ParseExample>> {
    let mut out = Vec::new();
    let mut cur = ParseExample {
        words: Vec::new(),
        heads: Vec::new(),
        labels: Vec::new(),
    };
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            if !cur.words.is_empty() {
                out.push(std::mem::replace(
                    &mut cur,
                    ParseExample {
                        words: Vec::new(),
                        heads: Vec::new(),
                        labels: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |what: &str| BsoError::Data(format!("line {}: {what}", lineno + 1));
        if cols.len() < 4 {
            return Err(bad("expected 4 tab-separated columns"));
        }
        let index: usize = cols[0].parse().map_err(|_| bad("bad token index"))?;
        if index != cur.words.len() + 1 {
            return Err(bad("token indices must count up from 1"));
        }
        cur.words.push(cols[1].to_string());
        cur.heads.push(cols[2].parse().map_err(|_| bad("bad head index"))?);
        cur.labels.push(cols[3].to_string());
    }
    if !cur.words.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn write_conll<W: Write>(w: &mut W, parses: &[ParseExample]) -> Result<()> {
    for p in parses {
        for i in 0..p.len() {
            writeln!(w, "{}\t{}\t{}\t{}", i + 1, p.words[i], p.heads[i], p.labels[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
