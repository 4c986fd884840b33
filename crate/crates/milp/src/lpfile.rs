//! Reader and writer for the CPLEX LP text format.
//!
//! The writer lists every column in the objective (zero coefficients
//! included) so that a re-read yields the same column order, and prints
//! non-integral numbers with 17 significant digits so coefficients survive
//! the round trip bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::LpFileError;
use crate::problem::{Domain, Problem, RowSense};

const TERMS_PER_LINE: usize = 8;

const RESERVED: &[&str] = &[
    "free", "inf", "infinity", "st", "end", "bounds", "bound", "generals", "general", "gen",
    "binaries", "binary", "bin", "maximize", "maximum", "max", "minimize", "minimum", "min",
];

/// Formats `v` so that parsing the text returns the identical `f64`.
pub fn format_number(v: f64) -> String {
    if v == f64::INFINITY {
        return "+inf".into();
    }
    if v == f64::NEG_INFINITY {
        return "-inf".into();
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let s = format!("{v:.16e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    if exp == "0" {
        mantissa.to_string()
    } else {
        format!("{mantissa}e{exp}")
    }
}

fn check_name(name: &str, seen: &mut HashMap<String, ()>, what: &str) -> Result<(), LpFileError> {
    let bad = name.is_empty()
        || name.len() > 255
        || name.starts_with(|c: char| c.is_ascii_digit() || c == '.')
        || name
            .chars()
            .any(|c| c.is_whitespace() || "+-*^<>=:[]\\".contains(c) || !c.is_ascii())
        || RESERVED.contains(&name.to_ascii_lowercase().as_str())
        || name.eq_ignore_ascii_case("subject")
        || name.eq_ignore_ascii_case("such");
    if bad {
        return Err(LpFileError::Unrepresentable(format!("invalid {what} name {name:?}")));
    }
    if seen.insert(name.to_string(), ()).is_some() {
        return Err(LpFileError::Unrepresentable(format!("duplicate {what} name {name:?}")));
    }
    Ok(())
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], problem: &Problem) {
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", format_number(a), problem.variables[j].name);
        } else {
            let _ = write!(out, " {sign} {} {}", format_number(a.abs()), problem.variables[j].name);
        }
    }
}

/// Renders `problem` as LP-format text.
pub fn to_lp_string(problem: &Problem) -> Result<String, LpFileError> {
    problem
        .validate()
        .map_err(|e| LpFileError::Unrepresentable(e.to_string()))?;
    let mut seen = HashMap::new();
    for v in &problem.variables {
        check_name(&v.name, &mut seen, "column")?;
    }
    let mut seen_rows = HashMap::new();
    for c in &problem.constraints {
        check_name(&c.name, &mut seen_rows, "row")?;
    }
    if problem.variables.is_empty() && !problem.constraints.is_empty() {
        return Err(LpFileError::Unrepresentable("rows without columns".into()));
    }

    let mut out = String::new();
    if !problem.name.is_empty() {
        let _ = writeln!(out, "\\ Problem: {}", problem.name.replace(['\n', '\r'], " "));
    }
    out.push_str("Maximize\n obj:");
    let obj: Vec<(usize, f64)> = problem
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| (j, v.objective))
        .collect();
    write_terms(&mut out, &obj, problem);
    out.push_str("\nSubject To\n");
    for c in &problem.constraints {
        let _ = write!(out, " {}:", c.name);
        if c.terms.is_empty() {
            let _ = write!(out, " 0 {}", problem.variables[0].name);
        } else {
            write_terms(&mut out, &c.terms, problem);
        }
        let _ = writeln!(out, " {} {}", c.sense, format_number(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &problem.variables {
        let default = match v.domain {
            Domain::Binary => (0.0, 1.0),
            _ => (0.0, f64::INFINITY),
        };
        if (v.lower, v.upper) == default {
            continue;
        }
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                format_number(v.lower),
                v.name,
                format_number(v.upper)
            );
        }
    }
    for (title, domain) in [("Generals", Domain::Integer), ("Binaries", Domain::Binary)] {
        let names: Vec<&str> = problem
            .variables
            .iter()
            .filter(|v| v.domain == domain)
            .map(|v| v.name.as_str())
            .collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{title}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    Ok(out)
}

pub fn write_lp_file(problem: &Problem, path: impl AsRef<Path>) -> Result<(), LpFileError> {
    let text = to_lp_string(problem)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_lp_file(path: impl AsRef<Path>) -> Result<Problem, LpFileError> {
    let text = std::fs::read_to_string(path)?;
    parse_lp(&text)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sign(f64),
    Op(RowSense),
    Colon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn parse_err(line: usize, message: impl Into<String>) -> LpFileError {
    LpFileError::Parse {
        line,
        message: message.into(),
    }
}

fn lex(line_no: usize, text: &str) -> Result<Vec<Tok>, LpFileError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            toks.push(Tok::Colon);
            i += 1;
        } else if c == '+' || c == '-' {
            toks.push(Tok::Sign(if c == '-' { -1.0 } else { 1.0 }));
            i += 1;
        } else if "<>=".contains(c) {
            let start = i;
            while i < chars.len() && "<>=".contains(chars[i]) {
                i += 1;
            }
            let op: String = chars[start..i].iter().collect();
            let sense = match op.as_str() {
                "<=" | "=<" | "<" => RowSense::Le,
                ">=" | "=>" | ">" => RowSense::Ge,
                "=" => RowSense::Eq,
                _ => return Err(parse_err(line_no, format!("unknown operator {op:?}"))),
            };
            toks.push(Tok::Op(sense));
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| parse_err(line_no, format!("bad number {s:?}")))?;
            toks.push(Tok::Num(v));
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && !"+-<>=:".contains(chars[i]) {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => toks.push(Tok::Num(f64::INFINITY)),
                _ => toks.push(Tok::Name(s)),
            }
        }
    }
    Ok(toks)
}

fn section_header(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    match l.as_str() {
        "maximize" | "maximum" | "max" | "minimize" | "minimum" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "generals" | "general" | "gen" => Some(Section::Generals),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

struct Builder {
    problem: Problem,
    index: HashMap<String, usize>,
}

impl Builder {
    fn column(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self
            .problem
            .add_variable(name, Domain::Continuous, 0.0, f64::INFINITY, 0.0);
        self.index.insert(name.to_string(), j);
        j
    }
}

/// Reads `(coef, name)` terms from `toks[*pos..]` until an operator or the end.
fn read_terms(
    toks: &[(usize, Tok)],
    pos: &mut usize,
    b: &mut Builder,
) -> Result<Vec<(usize, f64)>, LpFileError> {
    let mut terms = Vec::new();
    while *pos < toks.len() {
        let (line, ref tok) = toks[*pos];
        if matches!(tok, Tok::Op(_)) {
            break;
        }
        let mut sign = 1.0;
        while let Some((_, Tok::Sign(s))) = toks.get(*pos) {
            sign *= s;
            *pos += 1;
        }
        let mut coef = 1.0;
        if let Some((_, Tok::Num(v))) = toks.get(*pos) {
            coef = *v;
            *pos += 1;
        }
        match toks.get(*pos) {
            Some((_, Tok::Name(n))) => {
                let j = b.column(n);
                terms.push((j, sign * coef));
                *pos += 1;
            }
            _ => return Err(parse_err(line, "expected a variable name")),
        }
    }
    Ok(terms)
}

fn read_signed_number(toks: &[(usize, Tok)], pos: &mut usize, line: usize) -> Result<f64, LpFileError> {
    let mut sign = 1.0;
    while let Some((_, Tok::Sign(s))) = toks.get(*pos) {
        sign *= s;
        *pos += 1;
    }
    match toks.get(*pos) {
        Some((_, Tok::Num(v))) => {
            *pos += 1;
            Ok(sign * v)
        }
        _ => Err(parse_err(line, "expected a number")),
    }
}

/// Parses LP-format text. Minimization objectives are negated into the
/// maximization convention.
pub fn parse_lp(text: &str) -> Result<Problem, LpFileError> {
    let mut b = Builder {
        problem: Problem::new(""),
        index: HashMap::new(),
    };
    let mut section: Option<Section> = None;
    let mut minimize = false;
    let mut objective_toks: Vec<(usize, Tok)> = Vec::new();
    let mut row_toks: Vec<(usize, Tok)> = Vec::new();
    let mut bound_lines: Vec<(usize, Vec<Tok>)> = Vec::new();
    let mut int_names: Vec<(usize, String, Domain)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let trimmed = raw.trim();
        if let Some(name) = trimmed.strip_prefix("\\ Problem:") {
            b.problem.name = name.trim().to_string();
            continue;
        }
        let content = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_header(content) {
            if s == Section::Objective {
                minimize = content.trim().to_ascii_lowercase().starts_with("min");
            }
            section = Some(s);
            continue;
        }
        let toks = lex(line_no, content)?;
        match section {
            None => return Err(parse_err(line_no, "content before the objective section")),
            Some(Section::Objective) => objective_toks.extend(toks.into_iter().map(|t| (line_no, t))),
            Some(Section::Constraints) => row_toks.extend(toks.into_iter().map(|t| (line_no, t))),
            Some(Section::Bounds) => bound_lines.push((line_no, toks)),
            Some(Section::Generals) | Some(Section::Binaries) => {
                let domain = if section == Some(Section::Generals) {
                    Domain::Integer
                } else {
                    Domain::Binary
                };
                for t in toks {
                    match t {
                        Tok::Name(n) => int_names.push((line_no, n, domain)),
                        _ => return Err(parse_err(line_no, "expected variable names")),
                    }
                }
            }
            Some(Section::End) => return Err(parse_err(line_no, "content after End")),
        }
    }

    // Objective: optional label, then terms.
    let mut pos = 0;
    if let (Some((_, Tok::Name(_))), Some((_, Tok::Colon))) = (objective_toks.first(), objective_toks.get(1)) {
        pos = 2;
    }
    let obj_terms = read_terms(&objective_toks, &mut pos, &mut b)?;
    if pos < objective_toks.len() {
        return Err(parse_err(objective_toks[pos].0, "unexpected operator in objective"));
    }
    for (j, a) in obj_terms {
        b.problem.variables[j].objective += if minimize { -a } else { a };
    }

    // Rows.
    let mut pos = 0;
    let mut unnamed = 0usize;
    while pos < row_toks.len() {
        let line = row_toks[pos].0;
        let name = match (row_toks.get(pos), row_toks.get(pos + 1)) {
            (Some((_, Tok::Name(n))), Some((_, Tok::Colon))) => {
                let n = n.clone();
                pos += 2;
                n
            }
            _ => {
                unnamed += 1;
                format!("R{unnamed}")
            }
        };
        let terms = read_terms(&row_toks, &mut pos, &mut b)?;
        let sense = match row_toks.get(pos) {
            Some((_, Tok::Op(s))) => *s,
            _ => return Err(parse_err(line, format!("row {name} has no sense"))),
        };
        pos += 1;
        let rhs = read_signed_number(&row_toks, &mut pos, line)?;
        b.problem.add_constraint(name, terms, sense, rhs);
    }

    // Bounds.
    let mut explicit = vec![false; b.problem.num_vars()];
    for (line, toks) in bound_lines {
        let mut pos = 0;
        match toks.as_slice() {
            [Tok::Name(n), Tok::Name(kw)] if kw.eq_ignore_ascii_case("free") => {
                let j = b.column(n);
                b.problem.variables[j].lower = f64::NEG_INFINITY;
                b.problem.variables[j].upper = f64::INFINITY;
                explicit.resize(b.problem.num_vars(), false);
                explicit[j] = true;
                continue;
            }
            _ => {}
        }
        let lead = if matches!(toks.first(), Some(Tok::Name(_))) {
            None
        } else {
            let indexed: Vec<(usize, Tok)> = toks.iter().cloned().map(|t| (line, t)).collect();
            let v = read_signed_number(&indexed, &mut pos, line)?;
            let op = match toks.get(pos) {
                Some(Tok::Op(s)) => *s,
                _ => return Err(parse_err(line, "expected operator in bound")),
            };
            pos += 1;
            Some((v, op))
        };
        let name = match toks.get(pos) {
            Some(Tok::Name(n)) => n.clone(),
            _ => return Err(parse_err(line, "expected variable in bound")),
        };
        pos += 1;
        let j = b.column(&name);
        explicit.resize(b.problem.num_vars(), false);
        explicit[j] = true;
        let var = &mut b.problem.variables[j];
        if let Some((v, op)) = lead {
            match op {
                RowSense::Le => var.lower = v,
                RowSense::Ge => var.upper = v,
                RowSense::Eq => {
                    var.lower = v;
                    var.upper = v;
                }
            }
        }
        if pos < toks.len() {
            let op = match toks.get(pos) {
                Some(Tok::Op(s)) => *s,
                _ => return Err(parse_err(line, "expected operator in bound")),
            };
            pos += 1;
            let indexed: Vec<(usize, Tok)> = toks.iter().cloned().map(|t| (line, t)).collect();
            let v = read_signed_number(&indexed, &mut pos, line)?;
            let var = &mut b.problem.variables[j];
            match op {
                RowSense::Le => var.upper = v,
                RowSense::Ge => var.lower = v,
                RowSense::Eq => {
                    var.lower = v;
                    var.upper = v;
                }
            }
            if pos < toks.len() {
                return Err(parse_err(line, "trailing tokens in bound"));
            }
        }
    }

    for (line, name, domain) in int_names {
        let j = *b
            .index
            .get(&name)
            .ok_or_else(|| parse_err(line, format!("unknown variable {name:?}")))?;
        let var = &mut b.problem.variables[j];
        var.domain = domain;
        if domain == Domain::Binary && !explicit.get(j).copied().unwrap_or(false) {
            var.lower = 0.0;
            var.upper = 1.0;
        }
    }
    b.problem
        .validate()
        .map_err(|e| parse_err(0, e.to_string()))?;
    Ok(b.problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -3.0, 0.1, 1.0 / 3.0, 2.0e-300, -7.25e17, 123456.789, 1e15, f64::MAX] {
            let s = format_number(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_number(5.0), "5");
        assert_eq!(format_number(0.5), "5e-1");
    }

    #[test]
    fn empty_problem() {
        let p = Problem::new("");
        let text = to_lp_string(&p).unwrap();
        assert!(text.contains("Maximize") && text.contains("Subject To") && text.contains("End"));
        assert_eq!(parse_lp(&text).unwrap(), p);
    }

    #[test]
    fn binary_goes_to_binaries_section() {
        let mut p = Problem::new("b");
        let y = p.add_variable("Y_1", Domain::Binary, 0.0, 1.0, 2.0);
        let z = p.add_variable("Z", Domain::Integer, 0.0, 4.0, -1.0);
        p.add_constraint("budget", [(y, 1e6), (z, 3e4)], RowSense::Le, 2.5e6);
        let text = to_lp_string(&p).unwrap();
        let bin_at = text.find("Binaries").unwrap();
        assert!(text[bin_at..].contains("Y_1"));
        assert!(text.contains("Generals\n Z"));
        assert_eq!(parse_lp(&text).unwrap(), p);
    }

    #[test]
    fn fixed_binary_keeps_bounds() {
        let mut p = Problem::new("f");
        p.add_variable("Y", Domain::Binary, 1.0, 1.0, 0.0);
        p.add_variable("x", Domain::Continuous, f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_variable("w", Domain::Continuous, -2.0, 0.5, 1.0);
        let back = parse_lp(&to_lp_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_bad_names() {
        let mut p = Problem::new("n");
        p.add_variable("a b", Domain::Continuous, 0.0, 1.0, 0.0);
        assert!(matches!(to_lp_string(&p), Err(LpFileError::Unrepresentable(_))));
        let mut q = Problem::new("n");
        q.add_variable("x", Domain::Continuous, 0.0, 1.0, 0.0);
        q.add_variable("x", Domain::Continuous, 0.0, 1.0, 0.0);
        assert!(to_lp_string(&q).is_err());
    }

    #[test]
    fn parses_foreign_minimize_file() {
        let text = "Minimize\n cost: 2 x + y\nSubject To\n x + y >= 1\n c2: x - y <= 3\nBounds\n y <= 10\nEnd\n";
        let p = parse_lp(text).unwrap();
        assert_eq!(p.variables[0].objective, -2.0);
        assert_eq!(p.constraints[0].name, "R1");
        assert_eq!(p.constraints[1].terms, vec![(0, 1.0), (1, -1.0)]);
        assert_eq!(p.variables[1].upper, 10.0);
    }
}
