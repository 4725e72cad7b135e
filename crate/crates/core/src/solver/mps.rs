//! Fixed-format MPS emission and the `name value` solution-file parser used
//! by the external-backend bridge, plus a reader for the emitted subset so a
//! bridge command can round-trip models.
//!
//! Variable names are deterministic (`y_j`, `x_i_j_s`, `u_j_s`, `eta`,
//! `w_s`, `z`); constraint rows are `c0..`; both objectives are emitted as
//! free rows with the active one first, named `OBJ`, the inactive `OBJALT`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::ExtraConstraint;
use crate::error::{Error, Result};
use crate::model::{Constraint, LinExpr, MipModel, Sense, VarKind, Variable};

fn pad_to(line: &mut String, col: usize) {
    while line.len() < col {
        line.push(' ');
    }
    if !line.is_empty() && !line.ends_with(' ') {
        line.push(' ');
    }
}

fn field_line(fields: &[(usize, &str)]) -> String {
    let mut line = String::new();
    for &(col, text) in fields {
        pad_to(&mut line, col);
        line.push_str(text);
    }
    line.push('\n');
    line
}

fn num(v: f64) -> String {
    format!("{}", v)
}

/// Renders the model plus extra constraints as fixed-format MPS. The active
/// objective is `model.objective`; `model.cost` is emitted as the `OBJALT`
/// free row. Fixed-variable extras become `FX` bounds.
pub fn mps_string(model: &MipModel, extras: &[ExtraConstraint]) -> String {
    let mut rows: Vec<&Constraint> = model.constraints.iter().collect();
    let mut fixes: Vec<(usize, f64)> = Vec::new();
    let extra_rows: Vec<Constraint> = extras
        .iter()
        .filter_map(|e| match e {
            ExtraConstraint::Row(c) => Some(c.clone()),
            ExtraConstraint::Fix { var, value } => {
                fixes.push((*var, *value));
                None
            }
        })
        .collect();
    rows.extend(extra_rows.iter());

    let mut out = String::new();
    out.push_str(&field_line(&[(0, "NAME"), (14, "PODLOC")]));
    out.push_str("* active objective: OBJ\n");
    out.push_str("ROWS\n");
    out.push_str(&field_line(&[(1, "N"), (4, "OBJ")]));
    out.push_str(&field_line(&[(1, "N"), (4, "OBJALT")]));
    for (i, c) in rows.iter().enumerate() {
        let sense = match c.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        out.push_str(&field_line(&[(1, sense), (4, &format!("c{}", i))]));
    }

    // column-major view including both objective rows
    let mut per_var: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.vars.len()];
    for &(v, coef) in &model.objective.terms {
        per_var[v].push(("OBJ".to_string(), coef));
    }
    for &(v, coef) in &model.cost.terms {
        per_var[v].push(("OBJALT".to_string(), coef));
    }
    for (i, c) in rows.iter().enumerate() {
        for &(v, coef) in &c.terms {
            per_var[v].push((format!("c{}", i), coef));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker_seq = 0;
    for (v, var) in model.vars.iter().enumerate() {
        let is_int = var.kind != VarKind::Continuous;
        if is_int != in_int {
            let kind = if is_int { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&field_line(&[
                (4, &format!("M{}", marker_seq)),
                (14, "'MARKER'"),
                (39, kind),
            ]));
            marker_seq += 1;
            in_int = is_int;
        }
        for (row, coef) in &per_var[v] {
            out.push_str(&field_line(&[
                (4, &var.name),
                (14, row),
                (24, &num(*coef)),
            ]));
        }
    }
    if in_int {
        out.push_str(&field_line(&[
            (4, &format!("M{}", marker_seq)),
            (14, "'MARKER'"),
            (39, "'INTEND'"),
        ]));
    }

    out.push_str("RHS\n");
    if model.objective.constant != 0.0 {
        out.push_str(&field_line(&[
            (4, "RHS"),
            (14, "OBJ"),
            (24, &num(-model.objective.constant)),
        ]));
    }
    if model.cost.constant != 0.0 {
        out.push_str(&field_line(&[
            (4, "RHS"),
            (14, "OBJALT"),
            (24, &num(-model.cost.constant)),
        ]));
    }
    for (i, c) in rows.iter().enumerate() {
        if c.rhs != 0.0 {
            out.push_str(&field_line(&[
                (4, "RHS"),
                (14, &format!("c{}", i)),
                (24, &num(c.rhs)),
            ]));
        }
    }

    out.push_str("BOUNDS\n");
    for var in &model.vars {
        match var.kind {
            VarKind::Binary | VarKind::Integer => {
                // explicit upper bound: integer-column defaults vary between readers
                out.push_str(&field_line(&[
                    (1, "UP"),
                    (4, "BND"),
                    (14, &var.name),
                    (24, &num(var.upper)),
                ]));
            }
            VarKind::Continuous => {
                if var.lower == f64::NEG_INFINITY && var.upper == f64::INFINITY {
                    out.push_str(&field_line(&[(1, "FR"), (4, "BND"), (14, &var.name)]));
                } else {
                    if var.lower != 0.0 {
                        out.push_str(&field_line(&[
                            (1, "LO"),
                            (4, "BND"),
                            (14, &var.name),
                            (24, &num(var.lower)),
                        ]));
                    }
                    if var.upper != f64::INFINITY {
                        out.push_str(&field_line(&[
                            (1, "UP"),
                            (4, "BND"),
                            (14, &var.name),
                            (24, &num(var.upper)),
                        ]));
                    }
                }
            }
        }
    }
    for (v, value) in fixes {
        out.push_str(&field_line(&[
            (1, "FX"),
            (4, "BND"),
            (14, &model.vars[v].name),
            (24, &num(value)),
        ]));
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(
    model: &MipModel,
    extras: &[ExtraConstraint],
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, mps_string(model, extras))?;
    Ok(())
}

/// Parses the MPS subset emitted by [`write_mps`]: two free rows (active
/// objective first), L/G/E constraints, INTORG/INTEND markers and
/// UP/LO/FX/FR/MI bounds. Returns a model with an empty semantic map.
pub fn parse_mps(text: &str) -> Result<MipModel> {
    #[derive(PartialEq)]
    enum Section {
        Start,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    let bad = |line: usize, msg: &str| Error::Backend(format!("MPS line {}: {}", line, msg));

    let mut section = Section::Start;
    let mut obj_rows: Vec<String> = Vec::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut row_senses: Vec<Sense> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut vars: Vec<Variable> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut con_terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut obj_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(), Vec::new()];
    let mut obj_constants = [0.0f64; 2];
    let mut rhs: Vec<f64> = Vec::new();
    let mut in_int = false;
    let mut explicit_lower: Vec<bool> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if raw.starts_with('*') || raw.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let is_header = !raw.starts_with(' ');
        if is_header {
            section = match toks[0] {
                "NAME" => Section::Start,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => return Err(bad(lineno, "RANGES not supported")),
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(bad(lineno, &format!("unknown section {}", other))),
            };
            continue;
        }
        match section {
            Section::Start => {}
            Section::Done => return Err(bad(lineno, "data after ENDATA")),
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(bad(lineno, "expected `<sense> <name>`"));
                }
                match toks[0] {
                    "N" => {
                        if obj_rows.len() == 2 {
                            return Err(bad(lineno, "more than two free rows"));
                        }
                        obj_rows.push(toks[1].to_string());
                    }
                    s => {
                        let sense = match s {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            "E" => Sense::Eq,
                            _ => return Err(bad(lineno, "unknown row sense")),
                        };
                        row_index.insert(toks[1].to_string(), row_names.len());
                        row_names.push(toks[1].to_string());
                        row_senses.push(sense);
                        con_terms.push(Vec::new());
                        rhs.push(0.0);
                    }
                }
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    match *toks.last().unwrap() {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        _ => return Err(bad(lineno, "unknown marker")),
                    }
                    continue;
                }
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(bad(lineno, "expected `<var> (<row> <value>)+`"));
                }
                let name = toks[0];
                let v = *var_index.entry(name.to_string()).or_insert_with(|| {
                    vars.push(Variable {
                        name: name.to_string(),
                        kind: if in_int {
                            VarKind::Integer
                        } else {
                            VarKind::Continuous
                        },
                        lower: 0.0,
                        upper: f64::INFINITY,
                    });
                    explicit_lower.push(false);
                    vars.len() - 1
                });
                for pair in toks[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(lineno, "bad numeric value"))?;
                    if let Some(k) = obj_rows.iter().position(|r| r == pair[0]) {
                        obj_terms[k].push((v, value));
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        con_terms[r].push((v, value));
                    } else {
                        return Err(bad(lineno, &format!("unknown row {}", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(bad(lineno, "expected `<set> (<row> <value>)+`"));
                }
                for pair in toks[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(lineno, "bad numeric value"))?;
                    if let Some(k) = obj_rows.iter().position(|r| r == pair[0]) {
                        obj_constants[k] = -value;
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        rhs[r] = value;
                    } else {
                        return Err(bad(lineno, &format!("unknown row {}", pair[0])));
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(bad(lineno, "expected `<type> <set> <var> [value]`"));
                }
                let v = *var_index
                    .get(toks[2])
                    .ok_or_else(|| bad(lineno, &format!("unknown variable {}", toks[2])))?;
                let value = || -> Result<f64> {
                    toks.get(3)
                        .ok_or_else(|| bad(lineno, "missing bound value"))?
                        .parse()
                        .map_err(|_| bad(lineno, "bad bound value"))
                };
                match toks[0] {
                    "UP" => vars[v].upper = value()?,
                    "LO" => {
                        vars[v].lower = value()?;
                        explicit_lower[v] = true;
                    }
                    "FX" => {
                        let x = value()?;
                        vars[v].lower = x;
                        vars[v].upper = x;
                        explicit_lower[v] = true;
                    }
                    "FR" => {
                        vars[v].lower = f64::NEG_INFINITY;
                        vars[v].upper = f64::INFINITY;
                    }
                    "MI" => vars[v].lower = f64::NEG_INFINITY,
                    "BV" => {
                        vars[v].kind = VarKind::Binary;
                        vars[v].lower = 0.0;
                        vars[v].upper = 1.0;
                    }
                    t => return Err(bad(lineno, &format!("unsupported bound type {}", t))),
                }
            }
        }
    }
    if section != Section::Done {
        return Err(Error::Backend("MPS: missing ENDATA".into()));
    }
    if obj_rows.is_empty() {
        return Err(Error::Backend("MPS: no free row".into()));
    }
    for var in vars.iter_mut() {
        if var.kind == VarKind::Integer && var.lower == 0.0 && var.upper == 1.0 {
            var.kind = VarKind::Binary;
        }
    }

    let constraints = con_terms
        .into_iter()
        .zip(row_senses)
        .zip(rhs)
        .map(|((terms, sense), rhs)| Constraint { terms, sense, rhs })
        .collect();
    Ok(MipModel {
        vars,
        constraints,
        objective: LinExpr {
            terms: obj_terms[0].clone(),
            constant: obj_constants[0],
        },
        cost: LinExpr {
            terms: obj_terms[1].clone(),
            constant: obj_constants[1],
        },
        varmap: Default::default(),
        mode: crate::model::UncertaintyMode::Expectation,
        scenario_totals: Vec::new(),
    })
}

pub fn read_mps(path: impl AsRef<Path>) -> Result<MipModel> {
    let text = std::fs::read_to_string(path)?;
    parse_mps(&text)
}

/// Marker line a bridge command writes when the model is infeasible.
pub const INFEASIBLE_MARKER: &str = "=infeasible=";

/// Parses a `name value` per-line solution dump into a dense assignment.
/// Blank lines and lines starting with `#` or `*` are skipped; unknown
/// variable names or malformed lines are backend errors. Variables missing
/// from the file are zero.
pub fn parse_solution(model: &MipModel, text: &str) -> Result<Vec<f64>> {
    let index: HashMap<&str, usize> = model
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut assignment = vec![0.0; model.vars.len()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('*') {
            continue;
        }
        if line == INFEASIBLE_MARKER {
            return Err(Error::Backend(
                "solution file declares the model infeasible".into(),
            ));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Backend(format!(
                "solution line {}: expected `name value`",
                lineno + 1
            )));
        }
        let &v = index.get(toks[0]).ok_or_else(|| {
            Error::Backend(format!(
                "solution line {}: unknown variable {}",
                lineno + 1,
                toks[0]
            ))
        })?;
        assignment[v] = toks[1].parse().map_err(|_| {
            Error::Backend(format!("solution line {}: bad value", lineno + 1))
        })?;
    }
    Ok(assignment)
}

/// Renders an assignment as a `name value` dump (nonzero entries only).
pub fn solution_string(model: &MipModel, assignment: &[f64]) -> String {
    let mut out = String::new();
    for (var, &x) in model.vars.iter().zip(assignment) {
        if x != 0.0 {
            writeln!(out, "{} {}", var.name, x).unwrap();
        }
    }
    out
}
