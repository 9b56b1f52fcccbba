//! QPS (MPS plus quadratic sections) reading and writing.
//!
//! Sections handled: NAME, ROWS, COLUMNS, RHS, RANGES, BOUNDS, QUADOBJ,
//! QMATRIX, ENDATA. Lines are tokenized on whitespace, which covers both
//! fixed- and free-format files because MPS names contain no spaces.
//! Fortran D exponents (1.5D+2) are normalized before parsing numbers.
//!
//! Conventions enforced here:
//! - the first N row is the objective; further N rows are ignored;
//! - QUADOBJ holds one entry per unordered pair of H in the 0.5 x'Hx
//!   convention, QMATRIX holds the full matrix and must be symmetric;
//!   both are normalized to full symmetric storage in `RawQp::quad`;
//! - integer markers and integer bound kinds are rejected;
//! - RHS, RANGES and BOUNDS must each use a single vector name;
//! - bound magnitudes of 1e30 and above are treated as infinite.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::problem::{preprocess, PreprocessError, QpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub name: String,
    pub kind: RowKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Lo,
    Up,
    Fx,
    Fr,
    Mi,
    Pl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawBound {
    pub var: usize,
    pub kind: BoundKind,
    /// Unused for FR/MI/PL (kept at 0).
    pub value: f64,
}

/// Parsed file content before reduction to standard form. Field order
/// mirrors file encounter order, so serializing and reparsing a `RawQp`
/// reproduces it exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawQp {
    pub name: String,
    pub obj_name: String,
    /// Constraint rows in declaration order (the objective is not a row).
    pub rows: Vec<RawRow>,
    /// Variables in first-appearance order.
    pub vars: Vec<String>,
    /// Objective coefficients as (var, value).
    pub obj_linear: Vec<(usize, f64)>,
    /// Constraint coefficients as (row, var, value).
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<(usize, f64)>,
    /// RHS entry on the objective row; the objective constant is its negation.
    pub obj_rhs: f64,
    pub ranges: Vec<(usize, f64)>,
    pub bounds: Vec<RawBound>,
    /// Quadratic term of the objective (0.5 x'Hx) in full symmetric storage:
    /// off-diagonal pairs appear as both (i, j) and (j, i).
    pub quad: Vec<(usize, usize, f64)>,
}

#[derive(Debug, thiserror::Error)]
pub enum QpsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing section: {0}")]
    MissingSection(&'static str),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T, QpsError> {
    Err(QpsError::Parse {
        line,
        msg: msg.into(),
    })
}

/// Parse a numeric field, accepting Fortran D exponents.
fn parse_value(tok: &str, line: usize) -> Result<f64, QpsError> {
    let normalized: String;
    let s = if tok.contains(['D', 'd']) {
        normalized = tok.replace(['D', 'd'], "E");
        &normalized
    } else {
        tok
    };
    match s.parse::<f64>() {
        Ok(v) => Ok(v),
        Err(_) => perr(line, format!("malformed numeric field \"{tok}\"")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    QuadObj,
    QMatrix,
}

pub fn parse_qps(text: &str) -> Result<RawQp, QpsError> {
    let mut raw = RawQp::default();
    let mut section: Option<Section> = None;
    let mut seen_sections: Vec<Section> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut extra_n_rows: HashSet<String> = HashSet::new();
    let mut have_obj = false;
    let mut seen_entries: HashSet<(usize, usize)> = HashSet::new();
    let mut seen_obj_entries: HashSet<usize> = HashSet::new();
    let mut seen_rhs: HashSet<usize> = HashSet::new();
    let mut seen_obj_rhs = false;
    let mut seen_ranges: HashSet<usize> = HashSet::new();
    let mut seen_quad: HashSet<(usize, usize)> = HashSet::new();
    let mut rhs_vector: Option<String> = None;
    let mut range_vector: Option<String> = None;
    let mut bound_vector: Option<String> = None;
    let mut ended = false;

    for (idx, line_raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = line_raw.trim_end();
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('*') {
            continue;
        }
        if ended {
            break;
        }

        let is_header = !trimmed.starts_with([' ', '\t']);
        let toks: Vec<&str> = trimmed.split_whitespace().collect();

        if is_header {
            let head = toks[0].to_ascii_uppercase();
            let next = match head.as_str() {
                "NAME" => {
                    if let Some(t) = toks.get(1) {
                        raw.name = (*t).to_string();
                    }
                    continue;
                }
                "ENDATA" => {
                    ended = true;
                    continue;
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "QUADOBJ" => Section::QuadObj,
                "QMATRIX" => Section::QMatrix,
                other => return perr(line, format!("unknown section \"{other}\"")),
            };
            if seen_sections.contains(&next) {
                return perr(line, format!("duplicate section {head}"));
            }
            if matches!(next, Section::QuadObj) && seen_sections.contains(&Section::QMatrix)
                || matches!(next, Section::QMatrix) && seen_sections.contains(&Section::QuadObj)
            {
                return perr(line, "both QUADOBJ and QMATRIX present");
            }
            if !matches!(next, Section::Rows) && !seen_sections.contains(&Section::Rows) {
                return perr(line, format!("section {head} before ROWS"));
            }
            if matches!(
                next,
                Section::Bounds
                    | Section::QuadObj
                    | Section::QMatrix
                    | Section::Rhs
                    | Section::Ranges
            ) && !seen_sections.contains(&Section::Columns)
            {
                return perr(line, format!("section {head} before COLUMNS"));
            }
            seen_sections.push(next);
            section = Some(next);
            continue;
        }

        let Some(sec) = section else {
            return perr(line, "data line before any section");
        };

        match sec {
            Section::Rows => {
                if toks.len() != 2 {
                    return perr(line, "row line must be: <kind> <name>");
                }
                let name = toks[1].to_string();
                let kind = match toks[0].to_ascii_uppercase().as_str() {
                    "N" => {
                        if have_obj {
                            // Secondary free rows are ignored entirely.
                            extra_n_rows.insert(name);
                        } else {
                            have_obj = true;
                            raw.obj_name = name;
                        }
                        continue;
                    }
                    "E" => RowKind::Eq,
                    "L" => RowKind::Le,
                    "G" => RowKind::Ge,
                    k => return perr(line, format!("unknown row kind \"{k}\"")),
                };
                if row_index.contains_key(&name)
                    || name == raw.obj_name && have_obj
                    || extra_n_rows.contains(&name)
                {
                    return perr(line, format!("duplicate row \"{name}\""));
                }
                row_index.insert(name.clone(), raw.rows.len());
                raw.rows.push(RawRow { name, kind });
            }
            Section::Columns => {
                if toks.iter().any(|t| t.eq_ignore_ascii_case("'MARKER'")) {
                    return perr(line, "integer markers are not supported");
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return perr(line, "column line must be: <var> (<row> <value>){1,2}");
                }
                let var = *var_index.entry(toks[0].to_string()).or_insert_with(|| {
                    raw.vars.push(toks[0].to_string());
                    raw.vars.len() - 1
                });
                for pair in toks[1..].chunks(2) {
                    let rname = pair[0];
                    let value = parse_value(pair[1], line)?;
                    if rname == raw.obj_name {
                        if !seen_obj_entries.insert(var) {
                            return perr(
                                line,
                                format!("duplicate objective coefficient for \"{}\"", toks[0]),
                            );
                        }
                        raw.obj_linear.push((var, value));
                    } else if extra_n_rows.contains(rname) {
                        continue;
                    } else if let Some(&r) = row_index.get(rname) {
                        if !seen_entries.insert((r, var)) {
                            return perr(
                                line,
                                format!("duplicate coefficient ({}, {rname})", toks[0]),
                            );
                        }
                        raw.entries.push((r, var, value));
                    } else {
                        return perr(line, format!("unknown row \"{rname}\""));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                if toks.len() != 3 && toks.len() != 5 {
                    return perr(line, "line must be: <vector> (<row> <value>){1,2}");
                }
                let vector = match sec {
                    Section::Rhs => &mut rhs_vector,
                    _ => &mut range_vector,
                };
                match vector {
                    None => *vector = Some(toks[0].to_string()),
                    Some(v) if v == toks[0] => {}
                    Some(v) => {
                        return perr(
                            line,
                            format!("multiple vectors in section (\"{v}\" and \"{}\")", toks[0]),
                        )
                    }
                }
                for pair in toks[1..].chunks(2) {
                    let rname = pair[0];
                    let value = parse_value(pair[1], line)?;
                    if rname == raw.obj_name {
                        if sec == Section::Ranges {
                            return perr(line, "range on the objective row");
                        }
                        if seen_obj_rhs {
                            return perr(line, "duplicate objective RHS");
                        }
                        seen_obj_rhs = true;
                        raw.obj_rhs = value;
                        continue;
                    }
                    if extra_n_rows.contains(rname) {
                        continue;
                    }
                    let Some(&r) = row_index.get(rname) else {
                        return perr(line, format!("unknown row \"{rname}\""));
                    };
                    match sec {
                        Section::Rhs => {
                            if !seen_rhs.insert(r) {
                                return perr(line, format!("duplicate RHS for row \"{rname}\""));
                            }
                            raw.rhs.push((r, value));
                        }
                        _ => {
                            if !seen_ranges.insert(r) {
                                return perr(line, format!("duplicate range for row \"{rname}\""));
                            }
                            raw.ranges.push((r, value));
                        }
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return perr(line, "bound line must be: <kind> <vector> <var> [<value>]");
                }
                match &bound_vector {
                    None => bound_vector = Some(toks[1].to_string()),
                    Some(v) if v == toks[1] => {}
                    Some(v) => {
                        return perr(
                            line,
                            format!("multiple bound vectors (\"{v}\" and \"{}\")", toks[1]),
                        )
                    }
                }
                let Some(&var) = var_index.get(toks[2]) else {
                    return perr(line, format!("unknown variable \"{}\"", toks[2]));
                };
                let kind = match toks[0].to_ascii_uppercase().as_str() {
                    "LO" => BoundKind::Lo,
                    "UP" => BoundKind::Up,
                    "FX" => BoundKind::Fx,
                    "FR" => BoundKind::Fr,
                    "MI" => BoundKind::Mi,
                    "PL" => BoundKind::Pl,
                    "BV" | "LI" | "UI" => {
                        return perr(line, "integer bound kinds are not supported")
                    }
                    k => return perr(line, format!("unknown bound kind \"{k}\"")),
                };
                let value = match kind {
                    BoundKind::Lo | BoundKind::Up | BoundKind::Fx => {
                        if toks.len() < 4 {
                            return perr(line, format!("bound kind {} requires a value", toks[0]));
                        }
                        let v = parse_value(toks[3], line)?;
                        if v.abs() >= 1e30 {
                            if v > 0.0 {
                                f64::INFINITY
                            } else {
                                f64::NEG_INFINITY
                            }
                        } else {
                            v
                        }
                    }
                    _ => 0.0,
                };
                raw.bounds.push(RawBound { var, kind, value });
            }
            Section::QuadObj | Section::QMatrix => {
                if toks.len() != 3 {
                    return perr(line, "quadratic line must be: <var> <var> <value>");
                }
                let Some(&i) = var_index.get(toks[0]) else {
                    return perr(line, format!("unknown variable \"{}\"", toks[0]));
                };
                let Some(&j) = var_index.get(toks[1]) else {
                    return perr(line, format!("unknown variable \"{}\"", toks[1]));
                };
                let value = parse_value(toks[2], line)?;
                match sec {
                    Section::QuadObj => {
                        let key = (i.min(j), i.max(j));
                        if !seen_quad.insert(key) {
                            return perr(
                                line,
                                format!("duplicate quadratic pair ({}, {})", toks[0], toks[1]),
                            );
                        }
                        raw.quad.push((i, j, value));
                        if i != j {
                            raw.quad.push((j, i, value));
                        }
                    }
                    _ => {
                        if !seen_quad.insert((i, j)) {
                            return perr(
                                line,
                                format!("duplicate quadratic entry ({}, {})", toks[0], toks[1]),
                            );
                        }
                        raw.quad.push((i, j, value));
                    }
                }
            }
        }
    }

    if !seen_sections.contains(&Section::Rows) {
        return Err(QpsError::MissingSection("ROWS"));
    }
    if !seen_sections.contains(&Section::Columns) {
        return Err(QpsError::MissingSection("COLUMNS"));
    }
    if !have_obj {
        return Err(QpsError::MissingSection("objective (N) row"));
    }
    if seen_sections.contains(&Section::QMatrix) {
        let mut map: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, v) in &raw.quad {
            map.insert((i, j), v);
        }
        for &(i, j, v) in &raw.quad {
            if i != j && map.get(&(j, i)) != Some(&v) {
                return perr(
                    0,
                    format!(
                        "QMATRIX is not symmetric at ({}, {})",
                        raw.vars[i], raw.vars[j]
                    ),
                );
            }
        }
    }
    Ok(raw)
}

pub fn parse_qps_file(path: impl AsRef<Path>) -> Result<RawQp, QpsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| QpsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_qps(&text)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Qps(#[from] QpsError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

/// Parse a QPS file and reduce it to standard form.
pub fn load_problem(path: impl AsRef<Path>) -> Result<QpProblem, LoadError> {
    let raw = parse_qps_file(path)?;
    Ok(preprocess(&raw)?)
}

fn fmt_bound_value(v: f64) -> String {
    if v == f64::INFINITY {
        "1e30".to_string()
    } else if v == f64::NEG_INFINITY {
        "-1e30".to_string()
    } else {
        format!("{v}")
    }
}

/// Write a `RawQp` back out in QPS form. Serializing and reparsing yields
/// the identical structure; float fields use shortest round-trip formatting.
pub fn serialize_qps(raw: &RawQp) -> String {
    let mut out = String::new();
    let push_line = |out: &mut String, line: String| {
        out.push_str(line.trim_end());
        out.push('\n');
    };

    push_line(&mut out, format!("NAME          {}", raw.name));
    push_line(&mut out, "ROWS".to_string());
    push_line(&mut out, format!(" N  {}", raw.obj_name));
    for row in &raw.rows {
        let k = match row.kind {
            RowKind::Eq => "E",
            RowKind::Le => "L",
            RowKind::Ge => "G",
        };
        push_line(&mut out, format!(" {k}  {}", row.name));
    }

    push_line(&mut out, "COLUMNS".to_string());
    // Entries grouped per variable in first-appearance order: objective
    // coefficient first, then constraint entries in stored order.
    let mut per_var: Vec<Vec<(&str, f64)>> = vec![Vec::new(); raw.vars.len()];
    for &(v, value) in &raw.obj_linear {
        per_var[v].push((raw.obj_name.as_str(), value));
    }
    for &(r, v, value) in &raw.entries {
        per_var[v].push((raw.rows[r].name.as_str(), value));
    }
    for (v, pairs) in per_var.iter().enumerate() {
        for chunk in pairs.chunks(2) {
            let mut line = format!("    {:<10}", raw.vars[v]);
            for (rname, value) in chunk {
                line.push_str(&format!("{:<10}{:<16}", rname, format!("{value}")));
            }
            push_line(&mut out, line);
        }
    }

    if raw.obj_rhs != 0.0 || !raw.rhs.is_empty() {
        push_line(&mut out, "RHS".to_string());
        if raw.obj_rhs != 0.0 {
            push_line(
                &mut out,
                format!("    RHS       {:<10}{}", raw.obj_name, raw.obj_rhs),
            );
        }
        for &(r, value) in &raw.rhs {
            push_line(
                &mut out,
                format!("    RHS       {:<10}{}", raw.rows[r].name, value),
            );
        }
    }

    if !raw.ranges.is_empty() {
        push_line(&mut out, "RANGES".to_string());
        for &(r, value) in &raw.ranges {
            push_line(
                &mut out,
                format!("    RNG       {:<10}{}", raw.rows[r].name, value),
            );
        }
    }

    if !raw.bounds.is_empty() {
        push_line(&mut out, "BOUNDS".to_string());
        for b in &raw.bounds {
            let (k, with_value) = match b.kind {
                BoundKind::Lo => ("LO", true),
                BoundKind::Up => ("UP", true),
                BoundKind::Fx => ("FX", true),
                BoundKind::Fr => ("FR", false),
                BoundKind::Mi => ("MI", false),
                BoundKind::Pl => ("PL", false),
            };
            if with_value {
                push_line(
                    &mut out,
                    format!(
                        " {k} BND       {:<10}{}",
                        raw.vars[b.var],
                        fmt_bound_value(b.value)
                    ),
                );
            } else {
                push_line(&mut out, format!(" {k} BND       {}", raw.vars[b.var]));
            }
        }
    }

    if !raw.quad.is_empty() {
        push_line(&mut out, "QUADOBJ".to_string());
        let mut emitted: HashSet<(usize, usize)> = HashSet::new();
        for &(i, j, v) in &raw.quad {
            if emitted.insert((i.min(j), i.max(j))) {
                push_line(
                    &mut out,
                    format!("    {:<10}{:<10}{}", raw.vars[i], raw.vars[j], v),
                );
            }
        }
    }

    push_line(&mut out, "ENDATA".to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
* tiny example
NAME          TINY
ROWS
 N  COST
 L  C1
 G  C2
COLUMNS
    X1        COST      1.0            C1        2.0
    X1        C2        1.0
    X2        C1        1.0
RHS
    RHS       C1        4.0            C2        1.0
BOUNDS
 UP BND       X1        3.0
QUADOBJ
    X1        X1        2.0
    X1        X2        0.5
ENDATA
";

    #[test]
    fn parses_small_file() {
        let raw = parse_qps(SMALL).unwrap();
        assert_eq!(raw.name, "TINY");
        assert_eq!(raw.obj_name, "COST");
        assert_eq!(raw.rows.len(), 2);
        assert_eq!(raw.rows[0].kind, RowKind::Le);
        assert_eq!(raw.vars, vec!["X1".to_string(), "X2".to_string()]);
        assert_eq!(raw.obj_linear, vec![(0, 1.0)]);
        assert_eq!(raw.entries, vec![(0, 0, 2.0), (1, 0, 1.0), (0, 1, 1.0)]);
        assert_eq!(raw.rhs, vec![(0, 4.0), (1, 1.0)]);
        assert_eq!(raw.bounds.len(), 1);
        // QUADOBJ normalized to full symmetric storage
        assert_eq!(raw.quad, vec![(0, 0, 2.0), (0, 1, 0.5), (1, 0, 0.5)]);
    }

    #[test]
    fn accepts_fortran_exponents_and_bare_fractions() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    X         OBJ       -.5            R1        1.5D+2
RHS
    B         R1        2.5d-1
ENDATA
";
        let raw = parse_qps(text).unwrap();
        assert_eq!(raw.obj_linear, vec![(0, -0.5)]);
        assert_eq!(raw.entries, vec![(0, 0, 150.0)]);
        assert_eq!(raw.rhs, vec![(0, 0.25)]);
    }

    #[test]
    fn large_bound_is_infinite() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    X         OBJ       1.0            R1        1.0
BOUNDS
 UP BND       X         1.0E+30
 LO BND2      X         0.0
ENDATA
";
        // second bound line uses a different vector name -> error
        assert!(parse_qps(text).is_err());
        let ok = text.replace("BND2", "BND ");
        let raw = parse_qps(&ok).unwrap();
        assert_eq!(raw.bounds[0].value, f64::INFINITY);
    }

    #[test]
    fn duplicate_coefficient_rejected() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    X         R1        1.0            R1        2.0
ENDATA
";
        let e = parse_qps(text).unwrap_err();
        assert!(e.to_string().contains("duplicate coefficient"));
    }

    #[test]
    fn duplicate_quad_pair_rejected_either_orientation() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    X         R1        1.0
    Y         R1        1.0
QUADOBJ
    X         Y         1.0
    Y         X         2.0
ENDATA
";
        let e = parse_qps(text).unwrap_err();
        assert!(e.to_string().contains("duplicate quadratic pair"));
    }

    #[test]
    fn qmatrix_requires_symmetry() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    X         R1        1.0
    Y         R1        1.0
QMATRIX
    X         X         2.0
    X         Y         1.0
    Y         X         3.0
    Y         Y         2.0
ENDATA
";
        let e = parse_qps(text).unwrap_err();
        assert!(e.to_string().contains("not symmetric"));
        let ok = text.replace("Y         X         3.0", "Y         X         1.0");
        let raw = parse_qps(&ok).unwrap();
        assert_eq!(raw.quad.len(), 4);
    }

    #[test]
    fn integer_markers_rejected() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    M1        'MARKER'  'INTORG'
    X         R1        1.0
ENDATA
";
        let e = parse_qps(text).unwrap_err();
        assert!(e.to_string().contains("integer markers"));
    }

    #[test]
    fn integer_bound_kinds_rejected() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    X         R1        1.0
BOUNDS
 BV BND       X
ENDATA
";
        assert!(parse_qps(text)
            .unwrap_err()
            .to_string()
            .contains("integer bound"));
    }

    #[test]
    fn multiple_rhs_vectors_rejected() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
 G  R2
COLUMNS
    X         R1        1.0            R2        1.0
RHS
    RHS1      R1        1.0
    RHS2      R2        2.0
ENDATA
";
        assert!(parse_qps(text)
            .unwrap_err()
            .to_string()
            .contains("multiple vectors"));
    }

    #[test]
    fn extra_free_rows_are_skipped() {
        let text = "\
NAME T
ROWS
 N  OBJ
 N  OBJ2
 G  R1
COLUMNS
    X         OBJ       1.0            OBJ2      9.0
    X         R1        1.0
RHS
    RHS       OBJ2      5.0
ENDATA
";
        let raw = parse_qps(text).unwrap();
        assert_eq!(raw.obj_linear, vec![(0, 1.0)]);
        assert_eq!(raw.rhs, vec![]);
        assert_eq!(raw.obj_rhs, 0.0);
    }

    #[test]
    fn unknown_row_and_section_errors_carry_line_numbers() {
        let text = "NAME T\nROWS\n N  OBJ\nCOLUMNS\n    X         NOPE      1.0\n";
        match parse_qps(text).unwrap_err() {
            QpsError::Parse { line, msg } => {
                assert_eq!(line, 5);
                assert!(msg.contains("NOPE"));
            }
            other => panic!("unexpected error {other:?}"),
        }
        let text2 = "NAME T\nROWS\n N  OBJ\nGARBAGE\n";
        assert!(parse_qps(text2)
            .unwrap_err()
            .to_string()
            .contains("GARBAGE"));
    }

    #[test]
    fn range_on_objective_rejected() {
        let text = "\
NAME T
ROWS
 N  OBJ
 G  R1
COLUMNS
    X         OBJ       1.0            R1        1.0
RANGES
    RNG       OBJ       4.0
ENDATA
";
        assert!(parse_qps(text)
            .unwrap_err()
            .to_string()
            .contains("objective"));
    }

    #[test]
    fn serialize_roundtrip_is_identity() {
        let raw = parse_qps(SMALL).unwrap();
        let text = serialize_qps(&raw);
        let again = parse_qps(&text).unwrap();
        assert_eq!(raw, again);
        // and a second pass is byte-stable
        assert_eq!(text, serialize_qps(&again));
    }
}
