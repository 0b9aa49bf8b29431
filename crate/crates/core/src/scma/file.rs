//! Plain-text codebook files.
//!
//! ```text
//! # comments and blank lines are ignored
//! J K V M
//! <K lines of M "re,im" entries>      repeated for each of the J users
//! F                                   optional explicit indicator block
//! <K lines of J 0/1 entries>
//! ```
//!
//! The indicator matrix is inferred from the all-zero rows of each user's
//! block. When an `F` block is present it must agree with the inferred one.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{Codebook, IndicatorMatrix, ScmaConfig};
use crate::error::{Error, Result};

/// Reads a codebook file and normalizes it to unit average codeword energy.
pub fn read_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_codebook(&text, path)?.normalized())
}

/// Parses codebook text as-is (no energy normalization).
pub fn parse_codebook(text: &str, origin: impl AsRef<Path>) -> Result<Codebook> {
    let origin: PathBuf = origin.as_ref().to_path_buf();
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.clone(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| perr(1, "missing \"J K V M\" header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| perr(hline, format!("bad header: {e}")))?;
    let [j_users, k_res, v_nz, m_size] = dims[..] else {
        return Err(perr(hline, "header must be \"J K V M\"".into()));
    };
    if j_users == 0 || k_res == 0 || m_size == 0 {
        return Err(perr(hline, "dimensions must be positive".into()));
    }

    let mut books = vec![vec![vec![Complex64::new(0.0, 0.0); k_res]; m_size]; j_users];
    for (j, book) in books.iter_mut().enumerate() {
        for k in 0..k_res {
            let (ln, row) = lines.next().ok_or_else(|| {
                perr(0, format!("unexpected end of file in user {} block", j + 1))
            })?;
            let entries: Vec<&str> = row.split_whitespace().collect();
            if entries.len() != m_size {
                return Err(perr(
                    ln,
                    format!("expected {m_size} \"re,im\" entries, got {}", entries.len()),
                ));
            }
            for (m, tok) in entries.iter().enumerate() {
                book[m][k] =
                    parse_complex(tok).ok_or_else(|| perr(ln, format!("bad entry {tok:?}")))?;
            }
        }
    }

    let supports: Vec<Vec<usize>> = books
        .iter()
        .map(|book| {
            (0..k_res)
                .filter(|&k| book.iter().any(|cw| cw[k].norm() > 1e-12))
                .collect()
        })
        .collect();
    let inferred = IndicatorMatrix::from_supports(k_res, &supports)?;

    if let Some((ln, tag)) = lines.next() {
        if tag != "F" {
            return Err(perr(
                ln,
                format!("expected \"F\" block or end of file, got {tag:?}"),
            ));
        }
        let mut rows = Vec::with_capacity(k_res);
        for _ in 0..k_res {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| perr(ln, "F block is shorter than K rows".into()))?;
            let r: Vec<u8> = row
                .split_whitespace()
                .map(|t| t.parse::<u8>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad F entry: {e}")))?;
            rows.push(r);
        }
        let explicit = IndicatorMatrix::from_rows(&rows)?;
        if explicit != inferred {
            return Err(perr(
                ln,
                "explicit F does not match the codebook zero rows".into(),
            ));
        }
        if let Some((ln, extra)) = lines.next() {
            return Err(perr(ln, format!("trailing content {extra:?}")));
        }
    }

    let config = ScmaConfig::new(inferred, m_size)?;
    if config.nonzeros() != v_nz {
        return Err(perr(
            hline,
            format!(
                "header says V = {v_nz} but codewords have {} nonzeros",
                config.nonzeros()
            ),
        ));
    }
    Codebook::new(config, books)
}

fn parse_complex(tok: &str) -> Option<Complex64> {
    let (re, im) = tok.split_once(',')?;
    Some(Complex64::new(
        re.trim().parse().ok()?,
        im.trim().parse().ok()?,
    ))
}

/// Writes a codebook in the text format, including the explicit `F` block.
pub fn write_codebook(cb: &Codebook, path: impl AsRef<Path>) -> Result<()> {
    let cfg = cb.config();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {}",
        cfg.users(),
        cfg.resources(),
        cfg.nonzeros(),
        cfg.codebook_size()
    );
    for j in 0..cfg.users() {
        let _ = writeln!(out, "# user {}", j + 1);
        for k in 0..cfg.resources() {
            let row: Vec<String> = (0..cfg.codebook_size())
                .map(|m| {
                    let c = cb.codeword(j, m)[k];
                    format!("{:e},{:e}", c.re, c.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out.push_str("F\n");
    for row in cfg.indicator().rows() {
        let r: Vec<String> = row.iter().map(u8::to_string).collect();
        let _ = writeln!(out, "{}", r.join(" "));
    }
    let path = path.as_ref();
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
