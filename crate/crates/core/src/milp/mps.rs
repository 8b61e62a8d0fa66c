//! Fixed-format MPS export and a matching reader.
//!
//! Names longer than eight characters are replaced by an eight-character
//! hash; a collision aborts the export. Integrality is written with
//! INTORG/INTEND markers, a nonzero objective constant as an RHS entry on the
//! cost row (negated, per the usual convention). Non-integer values use the
//! shortest decimal that round-trips the exact double, so numeric fields may
//! exceed the nominal 12-character column; token-based readers are fine with
//! that.

use std::collections::HashMap;

use super::{MilpError, MilpModel, Sense};

const OBJ_ROW: &str = "COST";

fn short_name(name: &str, taken: &mut HashMap<String, String>) -> Result<String, MilpError> {
    let candidate = if name.len() <= 8 && !name.is_empty() {
        name.to_string()
    } else {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("N{:07X}", h & 0x0FFF_FFFF)
    };
    if let Some(existing) = taken.get(&candidate) {
        if existing != name {
            return Err(MilpError::NameTooLong(format!(
                "{name:?} and {existing:?} both map to {candidate:?}"
            )));
        }
    }
    taken.insert(candidate.clone(), name.to_string());
    Ok(candidate)
}

fn fmt_val(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e10 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

/// Render `model` as fixed-format MPS text.
pub fn export_mps(model: &MilpModel) -> Result<String, MilpError> {
    model.validate()?;
    let mut taken = HashMap::new();
    taken.insert(OBJ_ROW.to_string(), OBJ_ROW.to_string());
    let col_names: Vec<String> = model
        .vars
        .iter()
        .map(|v| short_name(&v.name, &mut taken))
        .collect::<Result<_, _>>()?;
    let row_names: Vec<String> = (0..model.rows.len()).map(|r| format!("R{:07}", r + 1)).collect();

    let mut out = String::new();
    let name = if model.name.is_empty() { "MODEL" } else { &model.name };
    out.push_str(&format!("NAME          {}\n", &name[..name.len().min(24)]));
    out.push_str("ROWS\n");
    out.push_str(&format!(" N  {OBJ_ROW}\n"));
    for (r, row) in model.rows.iter().enumerate() {
        let tag = match row.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        out.push_str(&format!(" {}  {}\n", tag, row_names[r]));
    }

    // Column-major entries: objective first, then rows sorted by index.
    let mut col_entries: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.vars.len()];
    for (j, &c) in model.objective.iter().enumerate() {
        col_entries[j].push((OBJ_ROW.to_string(), c));
    }
    for (r, row) in model.rows.iter().enumerate() {
        let mut sorted = row.coeffs.clone();
        sorted.sort_by_key(|&(c, _)| c);
        for (col, coef) in sorted {
            col_entries[col].push((row_names[r].clone(), coef));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, entries) in col_entries.iter().enumerate() {
        if model.vars[j].integral != in_int {
            let tag = if model.vars[j].integral { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&format!(
                "    M{:07}  'MARKER'                 {}\n",
                marker, tag
            ));
            marker += 1;
            in_int = model.vars[j].integral;
        }
        let mut it = entries.iter();
        while let Some((row, val)) = it.next() {
            match it.next() {
                Some((row2, val2)) => out.push_str(&format!(
                    "    {:<8}  {:<8}  {:<12}   {:<8}  {:<12}\n",
                    col_names[j],
                    row,
                    fmt_val(*val),
                    row2,
                    fmt_val(*val2)
                )),
                None => out.push_str(&format!(
                    "    {:<8}  {:<8}  {:<12}\n",
                    col_names[j],
                    row,
                    fmt_val(*val)
                )),
            }
        }
    }
    if in_int {
        out.push_str(&format!(
            "    M{:07}  'MARKER'                 'INTEND'\n",
            marker
        ));
    }

    out.push_str("RHS\n");
    if model.objective_constant != 0.0 {
        out.push_str(&format!(
            "    RHS       {:<8}  {:<12}\n",
            OBJ_ROW,
            fmt_val(-model.objective_constant)
        ));
    }
    for (r, row) in model.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            out.push_str(&format!(
                "    RHS       {:<8}  {:<12}\n",
                row_names[r],
                fmt_val(row.rhs)
            ));
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.vars.iter().enumerate() {
        let name = &col_names[j];
        if v.lo == v.hi {
            out.push_str(&format!(" FX BND       {:<8}  {:<12}\n", name, fmt_val(v.lo)));
        } else if v.integral && v.lo == 0.0 && v.hi == 1.0 {
            out.push_str(&format!(" BV BND       {:<8}\n", name));
        } else {
            if v.lo == f64::NEG_INFINITY {
                out.push_str(&format!(" MI BND       {:<8}\n", name));
            } else if v.lo != 0.0 {
                out.push_str(&format!(" LO BND       {:<8}  {:<12}\n", name, fmt_val(v.lo)));
            }
            if v.hi.is_finite() {
                out.push_str(&format!(" UP BND       {:<8}  {:<12}\n", name, fmt_val(v.hi)));
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

/// Parse MPS text produced by `export_mps` (free-format tokenization).
pub fn parse_mps(text: &str) -> Result<MilpModel, MilpError> {
    let bad = |msg: String| MilpError::MalformedMps(msg);
    let mut model = MilpModel::new("parsed");
    let mut section = String::new();
    let mut row_sense: HashMap<String, Sense> = HashMap::new();
    let mut row_order: Vec<String> = Vec::new();
    let mut obj_row: Option<String> = None;
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut row_coeffs: HashMap<String, Vec<(usize, f64)>> = HashMap::new();
    let mut row_rhs: HashMap<String, f64> = HashMap::new();
    let mut in_int = false;
    let mut explicit_bounds: HashMap<usize, (Option<f64>, Option<f64>, bool)> = HashMap::new();

    for raw in text.lines() {
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let is_header = !raw.starts_with(' ');
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if is_header {
            section = tokens[0].to_uppercase();
            if section == "NAME" && tokens.len() > 1 {
                model.name = tokens[1].to_string();
            }
            if section == "ENDATA" {
                break;
            }
            continue;
        }
        match section.as_str() {
            "ROWS" => {
                if tokens.len() != 2 {
                    return Err(bad(format!("bad ROWS line: {raw:?}")));
                }
                match tokens[0].to_uppercase().as_str() {
                    "N" => obj_row = Some(tokens[1].to_string()),
                    "L" => {
                        row_sense.insert(tokens[1].to_string(), Sense::Le);
                        row_order.push(tokens[1].to_string());
                    }
                    "G" => {
                        row_sense.insert(tokens[1].to_string(), Sense::Ge);
                        row_order.push(tokens[1].to_string());
                    }
                    "E" => {
                        row_sense.insert(tokens[1].to_string(), Sense::Eq);
                        row_order.push(tokens[1].to_string());
                    }
                    t => return Err(bad(format!("unknown row type {t:?}"))),
                }
            }
            "COLUMNS" => {
                if tokens.len() >= 3 && tokens[1] == "'MARKER'" {
                    match tokens[2] {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        t => return Err(bad(format!("unknown marker {t:?}"))),
                    }
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(bad(format!("bad COLUMNS line: {raw:?}")));
                }
                let col = *col_index.entry(tokens[0].to_string()).or_insert_with(|| {
                    model.add_var(tokens[0], 0.0, f64::INFINITY, in_int)
                });
                let mut k = 1;
                while k + 1 < tokens.len() {
                    let row = tokens[k];
                    let val: f64 = tokens[k + 1]
                        .parse()
                        .map_err(|e| bad(format!("bad value {:?}: {e}", tokens[k + 1])))?;
                    if Some(row) == obj_row.as_deref() {
                        model.objective[col] = val;
                    } else if row_sense.contains_key(row) {
                        row_coeffs.entry(row.to_string()).or_default().push((col, val));
                    } else {
                        return Err(bad(format!("unknown row {row:?}")));
                    }
                    k += 2;
                }
            }
            "RHS" => {
                let mut k = 1;
                while k + 1 < tokens.len() {
                    let row = tokens[k];
                    let val: f64 = tokens[k + 1]
                        .parse()
                        .map_err(|e| bad(format!("bad rhs {:?}: {e}", tokens[k + 1])))?;
                    if Some(row) == obj_row.as_deref() {
                        model.objective_constant = -val;
                    } else if row_sense.contains_key(row) {
                        row_rhs.insert(row.to_string(), val);
                    } else {
                        return Err(bad(format!("unknown rhs row {row:?}")));
                    }
                    k += 2;
                }
            }
            "RANGES" => return Err(MilpError::Unsupported("RANGES section".into())),
            "BOUNDS" => {
                if tokens.len() < 3 {
                    return Err(bad(format!("bad BOUNDS line: {raw:?}")));
                }
                let kind = tokens[0].to_uppercase();
                let col = *col_index
                    .get(tokens[2])
                    .ok_or_else(|| bad(format!("bounds for unknown column {:?}", tokens[2])))?;
                let entry = explicit_bounds.entry(col).or_insert((None, None, false));
                let val = || -> Result<f64, MilpError> {
                    tokens
                        .get(3)
                        .ok_or_else(|| bad(format!("missing bound value: {raw:?}")))?
                        .parse()
                        .map_err(|e| bad(format!("bad bound value: {e}")))
                };
                match kind.as_str() {
                    "UP" => entry.1 = Some(val()?),
                    "LO" => entry.0 = Some(val()?),
                    "FX" => {
                        let v = val()?;
                        entry.0 = Some(v);
                        entry.1 = Some(v);
                    }
                    "BV" => {
                        entry.0 = Some(0.0);
                        entry.1 = Some(1.0);
                        entry.2 = true;
                    }
                    "MI" => entry.0 = Some(f64::NEG_INFINITY),
                    "PL" => entry.1 = Some(f64::INFINITY),
                    t => return Err(MilpError::Unsupported(format!("bound type {t}"))),
                }
            }
            s => return Err(bad(format!("tokens outside a known section ({s:?}): {raw:?}"))),
        }
    }

    if obj_row.is_none() {
        return Err(bad("no objective row".into()));
    }
    // Default bounds: [0, inf) continuous, then apply explicit entries.
    for (col, (lo, hi, bv)) in explicit_bounds {
        if let Some(l) = lo {
            model.vars[col].lo = l;
        }
        if let Some(h) = hi {
            model.vars[col].hi = h;
        }
        if bv {
            model.vars[col].integral = true;
        }
    }
    for name in row_order {
        let sense = row_sense[&name];
        let coeffs = row_coeffs.remove(&name).unwrap_or_default();
        let rhs = row_rhs.get(&name).copied().unwrap_or(0.0);
        model.add_row("parsed", coeffs, sense, rhs);
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{lp_relax_solve, milp_solve, SolveLimits};

    fn sample_model() -> MilpModel {
        let mut m = MilpModel::new("SAMPLE");
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let t = m.add_continuous("theta_1", 0.0, f64::INFINITY);
        m.set_objective_coef(t, 1.0);
        m.set_objective_coef(b, 0.25);
        m.add_row("r1", vec![(a, 1.0), (b, 1.0)], Sense::Eq, 1.0);
        m.add_row("r2", vec![(t, 1.0), (a, -3.5)], Sense::Ge, 0.0);
        m.objective_constant = 2.0;
        m
    }

    #[test]
    fn skeleton_for_empty_model() {
        let mps = export_mps(&MilpModel::new("EMPTY")).unwrap();
        for section in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(mps.contains(section), "missing {section}");
        }
        assert!(mps.ends_with("ENDATA\n"));
    }

    #[test]
    fn export_is_byte_stable() {
        let m = sample_model();
        assert_eq!(export_mps(&m).unwrap(), export_mps(&m).unwrap());
    }

    #[test]
    fn round_trip_preserves_structure_and_optimum() {
        let m = sample_model();
        let parsed = parse_mps(&export_mps(&m).unwrap()).unwrap();
        assert_eq!(parsed.num_vars(), m.num_vars());
        assert_eq!(parsed.num_rows(), m.num_rows());
        for (v1, v2) in m.vars.iter().zip(&parsed.vars) {
            assert_eq!(v1.lo, v2.lo);
            assert_eq!(v1.hi, v2.hi);
            assert_eq!(v1.integral, v2.integral);
        }
        for (r1, r2) in m.rows.iter().zip(&parsed.rows) {
            assert_eq!(r1.sense, r2.sense);
            assert_eq!(r1.rhs, r2.rhs);
            let mut c1 = r1.coeffs.clone();
            let mut c2 = r2.coeffs.clone();
            c1.sort_by_key(|&(c, _)| c);
            c2.sort_by_key(|&(c, _)| c);
            assert_eq!(c1, c2);
        }
        assert_eq!(parsed.objective_constant, m.objective_constant);
        let a = milp_solve(&m, &SolveLimits::default()).unwrap();
        let b = milp_solve(&parsed, &SolveLimits::default()).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);
        let la = lp_relax_solve(&m).unwrap();
        let lb = lp_relax_solve(&parsed).unwrap();
        assert!((la.value - lb.value).abs() < 1e-9);
    }

    #[test]
    fn long_names_are_hashed() {
        let mut m = MilpModel::new("t");
        m.add_continuous("a_very_long_variable_name_indeed", 0.0, 1.0);
        let mps = export_mps(&m).unwrap();
        assert!(!mps.contains("a_very_long_variable_name_indeed"));
        assert!(parse_mps(&mps).is_ok());
    }
}
