//! Plain-text records for codes and measures.
//!
//! A code record is one field per line: `p`, `n`, `k`, `l`, then each
//! matrix row-major on a single line, then each vector. Entries are decimal
//! integers separated by single spaces; an empty matrix or vector is an
//! empty line. Generator form stores `G`, `ΔG`, `B`; parity form stores
//! `H`, `ΔH`, `c`, `Δc`.
//!
//! A measure table has one atom per line: the coordinates, then the mass.
//! Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;

use nestlat::codes::{CodeDims, GeneratorNestedCode, ParityNestedCode};
use nestlat::measures::FiniteMeasure;
use nestlat::zp::{PrimeModulus, ZpMatrix, ZpVector};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] nestlat::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> TextError {
    TextError::Syntax { line, message: message.into() }
}

fn join(entries: &[u32]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{e}").expect("writing to a String");
    }
    out
}

fn header(p: PrimeModulus, dims: CodeDims) -> String {
    format!("{}\n{}\n{}\n{}\n", p.get(), dims.n, dims.k, dims.l)
}

pub fn write_generator_code(code: &GeneratorNestedCode) -> String {
    let mut out = header(code.modulus(), code.dims());
    for field in [code.g().as_slice(), code.delta_g().as_slice(), code.dither().as_slice()] {
        out.push_str(&join(field));
        out.push('\n');
    }
    out
}

pub fn write_parity_code(code: &ParityNestedCode) -> String {
    let mut out = header(code.modulus(), code.dims());
    for field in [code.h().as_slice(), code.delta_h().as_slice(), code.c().as_slice(), code.delta_c().as_slice()] {
        out.push_str(&join(field));
        out.push('\n');
    }
    out
}

struct Fields<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Fields<'a> {
    fn new(text: &'a str) -> Self {
        Fields { lines: text.lines().enumerate(), last: 0 }
    }

    fn next_line(&mut self, what: &str) -> Result<&'a str, TextError> {
        match self.lines.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok(line)
            }
            None => Err(syntax(self.last + 1, format!("missing field `{what}`"))),
        }
    }

    fn scalar(&mut self, what: &str) -> Result<u64, TextError> {
        let line = self.next_line(what)?;
        parse_u64(line, self.last, what)
    }

    fn entries(&mut self, what: &str, count: usize) -> Result<Vec<u32>, TextError> {
        let line = self.next_line(what)?;
        let at = self.last;
        let entries = if line.is_empty() {
            Vec::new()
        } else {
            line.split(' ').map(|t| parse_u64(t, at, what).map(|v| u32::try_from(v).unwrap_or(u32::MAX))).collect::<Result<Vec<_>, _>>()?
        };
        if entries.len() != count {
            return Err(syntax(at, format!("field `{what}` has {} entries, expected {count}", entries.len())));
        }
        Ok(entries)
    }

    fn finish(mut self) -> Result<(), TextError> {
        match self.lines.find(|(_, l)| !l.trim().is_empty()) {
            Some((i, _)) => Err(syntax(i + 1, "unexpected trailing content")),
            None => Ok(()),
        }
    }
}

fn parse_u64(token: &str, line: usize, what: &str) -> Result<u64, TextError> {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(syntax(line, format!("field `{what}`: `{token}` is not a decimal integer")));
    }
    token.parse().map_err(|_| syntax(line, format!("field `{what}`: `{token}` is out of range")))
}

fn read_header(fields: &mut Fields<'_>) -> Result<(PrimeModulus, CodeDims), TextError> {
    let p = fields.scalar("p")?;
    let at = fields.last;
    let p = u32::try_from(p).map_err(|_| syntax(at, "field `p` is out of range"))?;
    let p = PrimeModulus::new(p).map_err(|e| syntax(at, format!("field `p`: {e}")))?;
    let n = fields.scalar("n")? as usize;
    let k = fields.scalar("k")? as usize;
    let l = fields.scalar("l")? as usize;
    let at = fields.last;
    let dims = CodeDims::new(n, k, l).map_err(|e| syntax(at, format!("dimensions: {e}")))?;
    Ok((p, dims))
}

fn matrix(fields: &mut Fields<'_>, p: PrimeModulus, rows: usize, cols: usize, what: &str) -> Result<ZpMatrix, TextError> {
    let entries = fields.entries(what, rows * cols)?;
    let at = fields.last;
    ZpMatrix::new(p, rows, cols, entries).map_err(|e| syntax(at, format!("field `{what}`: {e}")))
}

fn vector(fields: &mut Fields<'_>, p: PrimeModulus, len: usize, what: &str) -> Result<ZpVector, TextError> {
    let entries = fields.entries(what, len)?;
    let at = fields.last;
    ZpVector::new(p, entries).map_err(|e| syntax(at, format!("field `{what}`: {e}")))
}

pub fn read_generator_code(text: &str) -> Result<GeneratorNestedCode, TextError> {
    let mut f = Fields::new(text);
    let (p, d) = read_header(&mut f)?;
    let g = matrix(&mut f, p, d.l, d.n, "G")?;
    let dg = matrix(&mut f, p, d.k, d.n, "dG")?;
    let b = vector(&mut f, p, d.n, "B")?;
    f.finish()?;
    Ok(GeneratorNestedCode::new(g, dg, b)?)
}

pub fn read_parity_code(text: &str) -> Result<ParityNestedCode, TextError> {
    let mut f = Fields::new(text);
    let (p, d) = read_header(&mut f)?;
    let h = matrix(&mut f, p, d.l, d.n, "H")?;
    let dh = matrix(&mut f, p, d.k, d.n, "dH")?;
    let c = vector(&mut f, p, d.l, "c")?;
    let dc = vector(&mut f, p, d.k, "dc")?;
    f.finish()?;
    Ok(ParityNestedCode::new(h, dh, c, dc)?)
}

/// One atom per line, coordinates then mass, in the measure's order.
pub fn write_measure(measure: &FiniteMeasure) -> String {
    let mut out = String::new();
    for atom in measure.atoms() {
        for c in &atom.point {
            write!(out, "{c} ").expect("writing to a String");
        }
        writeln!(out, "{}", atom.mass).expect("writing to a String");
    }
    out
}

/// Parses a measure table; `first_line` offsets line numbers in errors when
/// the table is embedded in a larger file.
pub fn read_measure(text: &str, first_line: usize) -> Result<FiniteMeasure, TextError> {
    let mut dim = None;
    let mut atoms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let at = first_line + i;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| syntax(at, format!("`{t}` is not a number"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if values.len() < 2 {
            return Err(syntax(at, "an atom needs at least one coordinate and a mass"));
        }
        let d = values.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(syntax(at, format!("atom has {d} coordinates, earlier atoms have {expected}")));
            }
            _ => {}
        }
        let mass = values[d];
        let mut point = values;
        point.truncate(d);
        atoms.push((point, mass));
    }
    let dim = dim.ok_or_else(|| syntax(first_line, "measure table has no atoms"))?;
    FiniteMeasure::from_weighted(dim, atoms).map_err(|e| syntax(first_line, format!("measure table: {e}")))
}
