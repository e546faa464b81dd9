//! Fixed-format MPS reader and writer.
//!
//! The writer emits one matrix entry per COLUMNS/RHS/BOUNDS line with the
//! name fields in their fixed columns (5–12 and 15–22) and the value
//! starting at column 25. Values are written in shortest round-trip form,
//! which may run past column 36; the reader takes the numeric fields as
//! whitespace-separated tokens from column 25 on, so both the strict layout
//! and this extended one parse. Names longer than eight characters (or
//! containing spaces) are replaced by `C0000001`/`R0000001` style names and
//! the mapping is returned alongside the text.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{RowSense, StandardFormLP, Triplet};

const OBJ_ROW: &str = "COST";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("MPS line {line}: {message}")]
pub struct MpsError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsOutput {
    pub text: String,
    /// `(written name, original name)` for every column, when mangled.
    pub col_map: Vec<(String, String)>,
    pub row_map: Vec<(String, String)>,
}

impl MpsOutput {
    pub fn mangled(&self) -> bool {
        !self.col_map.is_empty() || !self.row_map.is_empty()
    }
}

fn fits_fixed(name: &str) -> bool {
    !name.is_empty() && name.len() <= 8 && name.is_ascii() && !name.contains(char::is_whitespace)
}

fn needs_mangling(names: &[String], reserved: &[&str]) -> bool {
    let mut seen = std::collections::HashSet::new();
    names
        .iter()
        .any(|n| !fits_fixed(n) || reserved.contains(&n.as_str()) || !seen.insert(n.as_str()))
}

fn fmt_num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        plain
    } else {
        format!("{v:E}")
    }
}

pub fn write_mps(lp: &StandardFormLP) -> MpsOutput {
    let mangle_cols = needs_mangling(&lp.col_names, &[]);
    let mangle_rows = needs_mangling(&lp.row_names, &[OBJ_ROW]);
    let cols: Vec<String> = if mangle_cols {
        (0..lp.num_cols()).map(|j| format!("C{:07}", j + 1)).collect()
    } else {
        lp.col_names.clone()
    };
    let rows: Vec<String> = if mangle_rows {
        (0..lp.num_rows()).map(|i| format!("R{:07}", i + 1)).collect()
    } else {
        lp.row_names.clone()
    };
    let model_name = if fits_fixed(&lp.name) { lp.name.as_str() } else { "LP" };

    let mut out = String::new();
    let _ = writeln!(out, "NAME          {model_name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for (i, sense) in lp.senses.iter().enumerate() {
        let code = match sense {
            RowSense::Le => "L",
            RowSense::Eq => "E",
            RowSense::Ge => "G",
        };
        let _ = writeln!(out, " {code:<2} {}", rows[i]);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_cols()];
    for t in &lp.entries {
        by_col[t.col].push((t.row, t.val));
    }
    out.push_str("COLUMNS\n");
    for (j, entries) in by_col.iter().enumerate() {
        let name = &cols[j];
        let c = lp.objective[j];
        if c != 0.0 || entries.is_empty() {
            let _ = writeln!(out, "    {name:<8}  {OBJ_ROW:<8}  {}", fmt_num(c));
        }
        for &(i, v) in entries {
            let _ = writeln!(out, "    {name:<8}  {:<8}  {}", rows[i], fmt_num(v));
        }
    }

    out.push_str("RHS\n");
    if lp.obj_offset != 0.0 {
        let _ = writeln!(out, "    RHS       {OBJ_ROW:<8}  {}", fmt_num(-lp.obj_offset));
    }
    for (i, &b) in lp.rhs.iter().enumerate() {
        if b != 0.0 {
            let _ = writeln!(out, "    RHS       {:<8}  {}", rows[i], fmt_num(b));
        }
    }

    out.push_str("BOUNDS\n");
    for j in 0..lp.num_cols() {
        let name = &cols[j];
        let (l, u) = (lp.col_lower[j], lp.col_upper[j]);
        let mut line = |kind: &str, v: Option<f64>| {
            match v {
                Some(v) => {
                    let _ = writeln!(out, " {kind} BND       {name:<8}  {}", fmt_num(v));
                }
                None => {
                    let _ = writeln!(out, " {kind} BND       {name}");
                }
            }
        };
        if l == u {
            line("FX", Some(l));
            continue;
        }
        match (l.is_finite(), u.is_finite()) {
            (false, false) => line("FR", None),
            (false, true) => {
                line("MI", None);
                line("UP", Some(u));
            }
            (true, fin_u) => {
                if l != 0.0 {
                    line("LO", Some(l));
                }
                if fin_u {
                    line("UP", Some(u));
                }
            }
        }
    }
    out.push_str("ENDATA\n");

    let pair = |written: &[String], original: &[String], mangled: bool| {
        if mangled {
            written.iter().cloned().zip(original.iter().cloned()).collect()
        } else {
            Vec::new()
        }
    };
    MpsOutput {
        col_map: pair(&cols, &lp.col_names, mangle_cols),
        row_map: pair(&rows, &lp.row_names, mangle_rows),
        text: out,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

fn field(line: &str, from: usize, to: usize) -> &str {
    // 1-based inclusive column range, clipped to the line.
    let bytes = line.len();
    if from > bytes {
        return "";
    }
    let end = to.min(bytes);
    line.get(from - 1..end).unwrap_or("").trim()
}

fn numeric_tail(line: &str) -> Vec<&str> {
    if line.len() < 25 {
        return Vec::new();
    }
    line.get(24..).unwrap_or("").split_whitespace().collect()
}

fn parse_num(tok: &str, line: usize) -> Result<f64, MpsError> {
    tok.parse::<f64>().map_err(|_| MpsError {
        line,
        message: format!("invalid number '{tok}'"),
    })
}

pub fn read_mps(text: &str) -> Result<StandardFormLP, MpsError> {
    let mut lp = StandardFormLP::new("");
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut coeffs: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut ranges: Vec<Option<f64>> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let err = |message: String| MpsError { line: ln, message };
        if !line.starts_with(' ') {
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or("");
            section = match head {
                "NAME" => {
                    lp.name = line[4..].trim().to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(format!("unknown section '{other}'"))),
            };
            continue;
        }
        match section {
            Section::None | Section::End => {
                return Err(err("data line outside of a section".into()));
            }
            Section::Rows => {
                let kind = field(line, 2, 3);
                let name = field(line, 5, 12).to_string();
                if name.is_empty() {
                    return Err(err("row without a name".into()));
                }
                let sense = match kind {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name);
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    other => return Err(err(format!("unknown row type '{other}'"))),
                };
                if row_index.insert(name.clone(), lp.senses.len()).is_some() {
                    return Err(err(format!("duplicate row '{name}'")));
                }
                lp.senses.push(sense);
                lp.rhs.push(0.0);
                lp.row_names.push(name);
                ranges.push(None);
            }
            Section::Columns => {
                let col = field(line, 5, 12).to_string();
                let first_row = field(line, 15, 22);
                if first_row == "'MARKER'" {
                    continue;
                }
                let j = match col_index.get(&col) {
                    Some(&j) => j,
                    None => {
                        if col.is_empty() {
                            return Err(err("column entry without a column name".into()));
                        }
                        let j = lp.add_col(col.clone(), 0.0, f64::INFINITY, 0.0);
                        col_index.insert(col.clone(), j);
                        coeffs.push(Vec::new());
                        j
                    }
                };
                let tail = numeric_tail(line);
                let mut pairs: Vec<(&str, &str)> = Vec::new();
                match tail.len() {
                    1 => pairs.push((first_row, tail[0])),
                    3 => {
                        pairs.push((first_row, tail[0]));
                        pairs.push((tail[1], tail[2]));
                    }
                    _ => return Err(err("expected one or two (row, value) pairs".into())),
                }
                for (row, val) in pairs {
                    let v = parse_num(val, ln)?;
                    if Some(row) == obj_row.as_deref() {
                        lp.objective[j] += v;
                    } else {
                        let i = *row_index.get(row).ok_or_else(|| err(format!("unknown row '{row}'")))?;
                        coeffs[j].push((i, v));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let first_row = field(line, 15, 22);
                let tail = numeric_tail(line);
                let mut pairs: Vec<(&str, &str)> = Vec::new();
                match tail.len() {
                    1 => pairs.push((first_row, tail[0])),
                    3 => {
                        pairs.push((first_row, tail[0]));
                        pairs.push((tail[1], tail[2]));
                    }
                    _ => return Err(err("expected one or two (row, value) pairs".into())),
                }
                for (row, val) in pairs {
                    let v = parse_num(val, ln)?;
                    if Some(row) == obj_row.as_deref() {
                        if section == Section::Rhs {
                            lp.obj_offset = -v;
                        }
                        continue;
                    }
                    let i = *row_index.get(row).ok_or_else(|| err(format!("unknown row '{row}'")))?;
                    if section == Section::Rhs {
                        lp.rhs[i] = v;
                    } else {
                        ranges[i] = Some(v);
                    }
                }
            }
            Section::Bounds => {
                let kind = field(line, 2, 3);
                let col = field(line, 15, 22);
                let j = *col_index.get(col).ok_or_else(|| err(format!("unknown column '{col}'")))?;
                let tail = numeric_tail(line);
                let value = || -> Result<f64, MpsError> {
                    let tok = tail.first().ok_or_else(|| MpsError {
                        line: ln,
                        message: format!("bound type {kind} needs a value"),
                    })?;
                    parse_num(tok, ln)
                };
                match kind {
                    "UP" => lp.col_upper[j] = value()?,
                    "LO" => lp.col_lower[j] = value()?,
                    "FX" => {
                        let v = value()?;
                        lp.col_lower[j] = v;
                        lp.col_upper[j] = v;
                    }
                    "FR" => {
                        lp.col_lower[j] = f64::NEG_INFINITY;
                        lp.col_upper[j] = f64::INFINITY;
                    }
                    "MI" => lp.col_lower[j] = f64::NEG_INFINITY,
                    "PL" => lp.col_upper[j] = f64::INFINITY,
                    other => return Err(err(format!("unsupported bound type '{other}'"))),
                }
            }
        }
    }
    if section != Section::End {
        return Err(MpsError {
            line: text.lines().count(),
            message: "missing ENDATA".into(),
        });
    }

    // Ranged rows become a pair of one-sided rows.
    let base_rows = lp.senses.len();
    let mut extra: Vec<(usize, RowSense, f64)> = Vec::new();
    for i in 0..base_rows {
        if let Some(r) = ranges[i] {
            let b = lp.rhs[i];
            let (lo, hi) = match lp.senses[i] {
                RowSense::Le => (b - r.abs(), b),
                RowSense::Ge => (b, b + r.abs()),
                RowSense::Eq if r >= 0.0 => (b, b + r),
                RowSense::Eq => (b + r, b),
            };
            lp.senses[i] = RowSense::Ge;
            lp.rhs[i] = lo;
            extra.push((i, RowSense::Le, hi));
        }
    }
    let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); base_rows];
    for (j, list) in coeffs.iter().enumerate() {
        for &(i, v) in list {
            row_entries[i].push((j, v));
        }
    }
    for (src, sense, rhs) in extra {
        let name = format!("{}_rng", lp.row_names[src]);
        lp.senses.push(sense);
        lp.rhs.push(rhs);
        lp.row_names.push(name);
        row_entries.push(row_entries[src].clone());
    }
    lp.entries.clear();
    for (i, list) in row_entries.iter_mut().enumerate() {
        list.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(list.len());
        for &(j, v) in list.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        for (j, v) in merged {
            if v != 0.0 {
                lp.entries.push(Triplet { row: i, col: j, val: v });
            }
        }
    }
    Ok(lp)
}
