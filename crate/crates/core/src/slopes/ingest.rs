//! Plain-text operator matrices.
//!
//! ```text
//! q=3 k=5 dim=4
//! 0, 2*T^-1, 0, 0
//! ...
//! ```
//!
//! Entries are rational functions of `T` (symbols `T`, `g`, `pi`) evaluated
//! in the completion at `T`.

use std::path::Path;

use super::{HeckeMatrix, Matrix};
use crate::apoly::PolyRing;
use crate::error::{Error, Result};
use crate::expr::parse_local;
use crate::local::{prime_localize, LocalElem, LocalRing, Localization};

/// Completion of `F_q[T]` at `T` with `pi = T`.
pub fn localization_at_t(q: u64, prec: i64) -> Result<Localization> {
    let (p, e) = crate::drinfeld::prime_power(q)?;
    let base = PolyRing::new(crate::field::FieldCtx::new(p, e)?);
    let t = base.t();
    prime_localize(&base, &t, prec)
}

fn parse_header(line: &str) -> Result<(u64, u32, usize)> {
    let mut q = None;
    let mut k = None;
    let mut dim = None;
    let mut col = 1;
    for tok in line.split_whitespace() {
        let pos = line[col - 1..].find(tok).map_or(col, |i| col + i);
        col = pos + tok.len();
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(1, pos, format!("expected key=value, found {tok:?}")))?;
        let bad = || Error::parse(1, pos + key.len() + 1, format!("bad value {val:?} for {key}"));
        match key {
            "q" => q = Some(val.parse::<u64>().map_err(|_| bad())?),
            "k" => k = Some(val.parse::<u32>().map_err(|_| bad())?),
            "dim" => dim = Some(val.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(Error::parse(1, pos, format!("unknown header key {key:?}"))),
        }
    }
    match (q, k, dim) {
        (Some(q), Some(k), Some(d)) => Ok((q, k, d)),
        _ => Err(Error::parse(1, 1, "header needs q=, k= and dim=")),
    }
}

/// Parse matrix text; returns the matrix and the localization its entries live in.
pub fn parse_matrix(text: &str, prec: i64) -> Result<(HeckeMatrix, Localization)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty matrix file"))?;
    let (q, k, dim) = parse_header(header)?;
    if k < 2 || dim == 0 {
        return Err(Error::parse(1, 1, "need k >= 2 and dim >= 1"));
    }
    let loc = localization_at_t(q, prec).map_err(|e| Error::parse(1, 1, e.to_string()))?;
    let mut rows: Vec<Vec<LocalElem>> = Vec::with_capacity(dim);
    let mut last_line = 1;
    for (idx, line) in lines {
        let ln = idx + 1;
        last_line = ln;
        if rows.len() == dim {
            return Err(Error::parse(ln, 1, format!("more than {dim} rows")));
        }
        let mut row = Vec::with_capacity(dim);
        let mut offset = 0;
        for field in line.split(',') {
            let entry = parse_local(field, &loc, ln).map_err(|e| match e {
                Error::Parse { line, col, msg } => Error::Parse { line, col: col + offset, msg },
                other => Error::parse(ln, offset + 1, other.to_string()),
            })?;
            row.push(entry);
            offset += field.chars().count() + 1;
        }
        if row.len() != dim {
            return Err(Error::parse(ln, 1, format!("row has {} entries, expected {dim}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != dim {
        return Err(Error::parse(last_line, 1, format!("found {} rows, expected {dim}", rows.len())));
    }
    let m = Matrix::from_rows(rows)?;
    Ok((HeckeMatrix { q, k, m }, loc))
}

pub fn ingest_matrix(path: &Path, prec: i64) -> Result<(HeckeMatrix, Localization)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text, prec)
}

/// Expression for an exact entry, as a Laurent polynomial in `T`.
pub fn format_entry(r: &LocalRing, x: &LocalElem) -> Result<String> {
    if !x.is_exact() {
        return Err(Error::Precondition("only exact entries can be written".into()));
    }
    let f = r.residue();
    let terms: Vec<String> = x
        .terms()
        .map(|(k, c)| {
            let c = f.format(c);
            match k {
                0 => c,
                1 => format!("{c}*T"),
                _ => format!("{c}*T^{k}"),
            }
        })
        .collect();
    Ok(if terms.is_empty() { "0".into() } else { terms.join(" + ") })
}

/// Serialize an exact matrix in the ingestion format.
pub fn emit_matrix(r: &LocalRing, h: &HeckeMatrix) -> Result<String> {
    let d = h.dim();
    let mut out = format!("q={} k={} dim={}\n", h.q, h.k, d);
    for i in 0..d {
        let row: Result<Vec<String>> = h.m.row(i).iter().map(|x| format_entry(r, x)).collect();
        out.push_str(&row?.join(", "));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::Valuation;
    use crate::slopes::{t_matrix, u_matrix};

    #[test]
    fn round_trip() {
        for q in [3, 4] {
            let loc = localization_at_t(q, 20).unwrap();
            let r = loc.ring();
            for h in [u_matrix(r, 7).unwrap(), t_matrix(r, 6).unwrap()] {
                let text = emit_matrix(r, &h).unwrap();
                let (back, _) = parse_matrix(&text, 20).unwrap();
                assert_eq!(back, h);
            }
        }
    }

    #[test]
    fn rational_entry() {
        let (h, loc) = parse_matrix("q=3 k=2 dim=1\n1/(T+1)\n", 10).unwrap();
        assert_eq!(loc.ring().val(h.m.get(0, 0)).unwrap(), Valuation::int(0));
    }

    #[test]
    fn malformed() {
        let e = parse_matrix("q=3 k=3 dim=2\n1, 0\n1, , 2\n", 10).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, col: 4, .. }), "{e:?}");
        let e = parse_matrix("q=3 k=3 dim=2\n1, 0\n", 10).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        let e = parse_matrix("q=3 k=3 dim=2\n1, 0, 1\n0, 1\n", 10).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        let e = parse_matrix("q=3 k=x dim=2\n", 10).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, col: 7, .. }), "{e:?}");
        assert!(parse_matrix("q=6 k=3 dim=1\n1\n", 10).is_err());
    }
}
