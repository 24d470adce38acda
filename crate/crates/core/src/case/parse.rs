//! Reader for MATPOWER `.m` case files.
//!
//! Only the numeric assignments that the OPF model needs are captured
//! (`baseMVA`, `bus`, `gen`, `branch`, `gencost`). Everything else in the
//! file (version strings, cell arrays of bus names, function headers) is
//! skipped. Both the version 2 `mpc.<field> = ...` style and the legacy
//! bare `<field> = ...` style are accepted.

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Minimum column counts per matrix.
pub const BUS_COLS: usize = 13;
pub const GEN_COLS: usize = 10;
pub const BRANCH_COLS: usize = 13;
/// `model startup shutdown n` plus at least one coefficient.
pub const GENCOST_MIN_COLS: usize = 5;

/// Numeric content of a case file, exactly as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCase {
    pub name: String,
    pub base_mva: f64,
    pub bus_rows: Vec<Vec<f64>>,
    pub gen_rows: Vec<Vec<f64>>,
    pub branch_rows: Vec<Vec<f64>>,
    pub gencost_rows: Vec<Vec<f64>>,
}

/// Parse the text of a MATPOWER case file.
pub fn parse_matpower(text: &str) -> Result<RawCase, IngestError> {
    let clean = strip_comments(text);
    let mut scanner = Scanner::new(&clean);

    let mut name = String::from("case");
    let mut base_mva = None;
    let mut bus = None;
    let mut gen = None;
    let mut branch = None;
    let mut gencost = None;

    while let Some(stmt) = scanner.next_statement()? {
        match stmt {
            Statement::Function(fname) => name = fname,
            Statement::Scalar(field, value) if field == "baseMVA" => {
                base_mva = Some(parse_number(value.trim()).ok_or_else(|| {
                    IngestError::MalformedFile(format!("baseMVA is not a number: `{}`", value.trim()))
                })?);
            }
            Statement::Matrix(field, body) => {
                let slot = match field.as_str() {
                    "bus" => &mut bus,
                    "gen" => &mut gen,
                    "branch" => &mut branch,
                    "gencost" => &mut gencost,
                    _ => continue,
                };
                *slot = Some(parse_matrix(&field, body)?);
            }
            _ => {}
        }
    }

    let base_mva = base_mva.ok_or(IngestError::MissingSection("baseMVA"))?;
    if !(base_mva.is_finite() && base_mva > 0.0) {
        return Err(IngestError::MalformedFile(format!("baseMVA must be positive, got {base_mva}")));
    }
    let bus_rows = non_empty(bus, "bus")?;
    let gen_rows = non_empty(gen, "gen")?;
    let branch_rows = non_empty(branch, "branch")?;
    let gencost_rows = non_empty(gencost, "gencost")?;

    check_columns("bus", &bus_rows, BUS_COLS)?;
    check_columns("gen", &gen_rows, GEN_COLS)?;
    check_columns("branch", &branch_rows, BRANCH_COLS)?;
    check_columns("gencost", &gencost_rows, GENCOST_MIN_COLS)?;

    if gencost_rows.len() < gen_rows.len() {
        return Err(IngestError::MalformedFile(format!(
            "gencost has {} rows for {} generators",
            gencost_rows.len(),
            gen_rows.len()
        )));
    }
    for (i, row) in gencost_rows.iter().take(gen_rows.len()).enumerate() {
        if row[0] != 2.0 {
            return Err(IngestError::UnsupportedCost(format!(
                "gencost row {} uses model {}; only polynomial (2) costs are supported",
                i + 1,
                row[0]
            )));
        }
        let n = row[3];
        if n.fract() != 0.0 || !(0.0..=3.0).contains(&n) {
            return Err(IngestError::UnsupportedCost(format!(
                "gencost row {} has {} coefficients; at most a quadratic is supported",
                i + 1,
                n
            )));
        }
        if row.len() < 4 + n as usize {
            return Err(IngestError::MalformedFile(format!(
                "gencost row {} declares {} coefficients but has {} columns",
                i + 1,
                n,
                row.len()
            )));
        }
    }

    let ids: std::collections::HashSet<i64> = bus_rows.iter().map(|r| r[0] as i64).collect();
    for (i, row) in branch_rows.iter().enumerate() {
        for end in [row[0], row[1]] {
            if !ids.contains(&(end as i64)) {
                return Err(IngestError::UnknownBus { row: i + 1, bus: end as i64 });
            }
        }
    }

    Ok(RawCase { name, base_mva, bus_rows, gen_rows, branch_rows, gencost_rows })
}

fn non_empty(m: Option<Vec<Vec<f64>>>, section: &'static str) -> Result<Vec<Vec<f64>>, IngestError> {
    match m {
        Some(rows) if !rows.is_empty() => Ok(rows),
        _ => Err(IngestError::MissingSection(section)),
    }
}

fn check_columns(section: &str, rows: &[Vec<f64>], min: usize) -> Result<(), IngestError> {
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() < min) {
        return Err(IngestError::MalformedFile(format!(
            "{section} row {} has {} columns, need at least {min}",
            i + 1,
            row.len()
        )));
    }
    Ok(())
}

/// Remove `%` comments, leaving quoted strings intact.
fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut in_quote = false;
        let mut prev: Option<char> = None;
        for c in line.chars() {
            match c {
                '\'' => {
                    // A quote right after an identifier, number or bracket is MATLAB's transpose.
                    let transpose =
                        !in_quote && prev.is_some_and(|p| p.is_alphanumeric() || p == ']' || p == ')' || p == '_');
                    if !transpose {
                        in_quote = !in_quote;
                    }
                    out.push(c);
                }
                '%' if !in_quote => break,
                _ => out.push(c),
            }
            prev = Some(c);
        }
        out.push('\n');
    }
    out
}

enum Statement<'a> {
    Function(String),
    Scalar(String, &'a str),
    Matrix(String, &'a str),
    Other,
}

struct Scanner<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches(|c: char| c.is_whitespace() || c == ';' || c == ',');
        self.pos = self.src.len() - trimmed.len();
    }

    fn skip_to_line_end(&mut self) {
        match self.rest().find('\n') {
            Some(i) => self.pos += i + 1,
            None => self.pos = self.src.len(),
        }
    }

    fn next_statement(&mut self) -> Result<Option<Statement<'a>>, IngestError> {
        self.skip_ws();
        let rest = self.rest();
        if rest.is_empty() {
            return Ok(None);
        }
        if let Some(after) = rest.strip_prefix("function") {
            if after.starts_with(char::is_whitespace) {
                let line = after.lines().next().unwrap_or("");
                let fname = line.rsplit('=').next().unwrap_or(line).trim().to_string();
                self.skip_to_line_end();
                return Ok(Some(Statement::Function(fname)));
            }
        }

        let ident_len = rest.find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '.')).unwrap_or(rest.len());
        if ident_len == 0 {
            self.skip_to_line_end();
            return Ok(Some(Statement::Other));
        }
        let ident = &rest[..ident_len];
        let field = ident.strip_prefix("mpc.").unwrap_or(ident).to_string();
        let after_ident = rest[ident_len..].trim_start();
        let Some(rhs) = after_ident.strip_prefix('=') else {
            self.skip_to_line_end();
            return Ok(Some(Statement::Other));
        };
        let rhs_trim = rhs.trim_start();
        let rhs_start = self.src.len() - rhs_trim.len();

        match rhs_trim.chars().next() {
            Some('[') => {
                let close = rhs_trim
                    .find(']')
                    .ok_or_else(|| IngestError::MalformedFile(format!("unterminated matrix for `{field}`")))?;
                let body = &rhs_trim[1..close];
                self.pos = rhs_start + close + 1;
                Ok(Some(Statement::Matrix(field, body)))
            }
            Some('{') => {
                let close = rhs_trim
                    .find('}')
                    .ok_or_else(|| IngestError::MalformedFile(format!("unterminated cell array for `{field}`")))?;
                self.pos = rhs_start + close + 1;
                Ok(Some(Statement::Other))
            }
            _ => {
                let end = rhs_trim.find([';', '\n']).unwrap_or(rhs_trim.len());
                let value = &rhs_trim[..end];
                self.pos = rhs_start + end;
                Ok(Some(Statement::Scalar(field, value)))
            }
        }
    }
}

fn parse_matrix(field: &str, body: &str) -> Result<Vec<Vec<f64>>, IngestError> {
    let body = body.replace("...\n", " ");
    let mut rows = Vec::new();
    for chunk in body.split([';', '\n']) {
        let tokens: Vec<&str> =
            chunk.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() {
            continue;
        }
        let row = tokens
            .iter()
            .map(|t| {
                parse_number(t)
                    .ok_or_else(|| IngestError::MalformedFile(format!("`{t}` in matrix `{field}` is not a number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if let Some(first) = rows.first() {
        let width = first.len();
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(IngestError::MalformedFile(format!(
                "matrix `{field}` row {} has {} columns, expected {width}",
                i + 1,
                rows[i].len()
            )));
        }
    }
    Ok(rows)
}

fn parse_number(token: &str) -> Option<f64> {
    match token {
        "Inf" | "inf" | "+Inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        _ => token.parse::<f64>().ok().filter(|v| !v.is_nan()),
    }
}
