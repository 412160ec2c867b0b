//! Deterministic CSV emission.
//!
//! Every numeric cell is printed with 12 significant digits, the delimiter
//! is a comma, and row order is fixed by the caller, so identical inputs
//! produce byte-identical files. Metadata (for example a config hash) goes
//! into `#`-prefixed header comment lines, never timestamps.

use std::fmt::Write as _;

use crate::estimator::{BlowupFit, KEstimate, TransferCheck};
use crate::exponent::{BlockRange, OperatorFamily};

/// 12-significant-digit scientific form shared by all emitters.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// A comma-separated table with optional comment header lines.
#[derive(Debug, Clone, Default)]
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            comments: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn p_columns(prefix: &str, l: usize) -> impl Iterator<Item = String> + '_ {
    (1..=l).map(move |j| format!("{prefix}_{j}"))
}

/// (p, norm) table, one exponent tuple per row.
pub fn norm_table(points: &[(Vec<f64>, f64)], l: usize) -> Table {
    let mut cols: Vec<String> = p_columns("p", l).collect();
    cols.push("norm".into());
    let mut t = Table::new(cols);
    for (p, v) in points {
        let mut row: Vec<String> = p.iter().map(|&x| fmt_g(x)).collect();
        row.push(fmt_g(*v));
        t.push(row);
    }
    t
}

/// Per-block endpoint table.
pub fn endpoint_table(ranges: &[BlockRange]) -> Table {
    let mut t = Table::new(
        ["block", "p_minus", "p_plus", "q_minus", "q_plus", "kappa"]
            .map(String::from)
            .to_vec(),
    );
    for (j, r) in ranges.iter().enumerate() {
        t.push(vec![
            (j + 1).to_string(),
            fmt_g(r.p_minus),
            fmt_g(r.p_plus),
            fmt_g(r.q_minus),
            fmt_g(r.q_plus),
            fmt_g(r.kappa),
        ]);
    }
    t
}

/// Sampled (p, q, envelope) table.
pub fn envelope_table(family: &OperatorFamily, points: &[Vec<f64>]) -> Table {
    let l = family.len();
    let mut cols: Vec<String> = p_columns("p", l).collect();
    cols.extend(p_columns("q", l));
    cols.push("lower_shape".into());
    cols.push("upper_shape".into());
    let mut t = Table::new(cols);
    for p in points {
        let (q, env) = match (family.q_of_p(p), family.envelope(p)) {
            (Ok(q), Ok(env)) => (q, env),
            _ => continue,
        };
        let mut row: Vec<String> = p.iter().map(|&x| fmt_g(x)).collect();
        row.extend(q.iter().map(|&x| fmt_g(x)));
        row.push(fmt_g(env.lower_shape));
        row.push(fmt_g(env.upper_shape));
        t.push(row);
    }
    t
}

/// K-curve table: exponents, lower bound, witness parameters, tolerance.
pub fn k_curve_table(curve: &[KEstimate], l: usize) -> Table {
    let witness_names: Vec<String> = curve
        .first()
        .map(|k| k.witness.iter().map(|(n, _)| format!("witness_{n}")).collect())
        .unwrap_or_default();
    let mut cols: Vec<String> = p_columns("p", l).collect();
    cols.extend(p_columns("q", l));
    cols.push("lower_bound".into());
    cols.extend(witness_names);
    cols.push("tolerance".into());
    cols.push("degenerate".into());
    let mut t = Table::new(cols);
    for k in curve {
        let mut row: Vec<String> = k.p.iter().map(|&x| fmt_g(x)).collect();
        row.extend(k.q.iter().map(|&x| fmt_g(x)));
        row.push(fmt_g(k.lower_bound));
        row.extend(k.witness.iter().map(|(_, v)| fmt_g(*v)));
        row.push(fmt_g(k.quadrature_tolerance));
        row.push(u8::from(k.degenerate).to_string());
        t.push(row);
    }
    t
}

/// Blow-up fit report rows: one per fitted endpoint.
pub fn blowup_table(fits: &[(BlowupFit, f64)]) -> Table {
    let mut t = Table::new(
        [
            "endpoint", "block", "value", "slope", "expected", "residual", "samples",
        ]
        .map(String::from)
        .to_vec(),
    );
    for (fit, expected) in fits {
        t.push(vec![
            fit.endpoint.side.as_str().to_string(),
            (fit.endpoint.block + 1).to_string(),
            fmt_g(fit.endpoint.value),
            fmt_g(fit.fitted_slope),
            fmt_g(*expected),
            fmt_g(fit.residual),
            fit.samples.len().to_string(),
        ]);
    }
    t
}

/// Transfer report: one row per holdout margin.
pub fn transfer_table(check: &TransferCheck, labels: &[String]) -> Table {
    let mut t = Table::new(["holdout", "margin"].map(String::from).to_vec());
    t.comment(format!("c_hat = {}", fmt_g(check.c_hat)));
    for (label, m) in labels.iter().zip(&check.margins) {
        t.push(vec![label.clone(), fmt_g(*m)]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_g(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(fmt_g(-1.0 / 3.0), "-3.33333333333e-1");
        assert_eq!(fmt_g(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_shape_is_deterministic() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.comment("hash=deadbeef");
        t.push(vec![fmt_g(1.0), fmt_g(2.0)]);
        let body = t.to_csv();
        assert_eq!(body, "# hash=deadbeef\na,b\n1.00000000000e0,2.00000000000e0\n");
    }
}
