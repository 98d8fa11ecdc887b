//! `warped compare`: sup-norm difference of two trajectory CSVs.

use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::Table;

/// Grid points closer than this are treated as the same `tau`.
const TAU_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub columns: Vec<String>,
    pub rows: usize,
    /// Rows present in only one file (the longer run's tail).
    pub unmatched_rows: usize,
    pub sup_difference: f64,
    pub worst_column: Option<String>,
    pub worst_tau: Option<f64>,
}

fn column(t: &Table, name: &str) -> Option<usize> {
    t.columns.iter().position(|c| c == name)
}

/// Compares the columns shared by `a` and `b` row by row, on matching
/// `tau` values.
pub fn compare(a: &Table, b: &Table) -> CliResult<Comparison> {
    let (ta, tb) = match (column(a, "tau"), column(b, "tau")) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(CliError::Failed("both files need a `tau` column".into())),
    };
    let shared: Vec<(String, usize, usize)> = a
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.as_str() != "tau")
        .filter_map(|(i, c)| column(b, c).map(|j| (c.clone(), i, j)))
        .collect();
    if shared.is_empty() {
        return Err(CliError::Failed("the files share no columns besides `tau`".into()));
    }
    let rows = a.rows.len().min(b.rows.len());
    let mut cmp = Comparison {
        columns: shared.iter().map(|s| s.0.clone()).collect(),
        rows,
        unmatched_rows: a.rows.len().max(b.rows.len()) - rows,
        sup_difference: 0.0,
        worst_column: None,
        worst_tau: None,
    };
    for k in 0..rows {
        let (ra, rb) = (&a.rows[k], &b.rows[k]);
        if (ra[ta] - rb[tb]).abs() > TAU_MATCH * (1.0 + ra[ta].abs()) {
            return Err(CliError::Failed(format!(
                "row {}: tau {} vs {}; sample both runs on the same grid (`sample_every`)",
                k + 2,
                ra[ta],
                rb[tb]
            )));
        }
        for (name, i, j) in &shared {
            let d = (ra[*i] - rb[*j]).abs();
            if d > cmp.sup_difference || d.is_nan() {
                cmp.sup_difference = if d.is_nan() { f64::INFINITY } else { d };
                cmp.worst_column = Some(name.clone());
                cmp.worst_tau = Some(ra[ta]);
            }
        }
    }
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cols: &[&str], rows: Vec<Vec<f64>>) -> Table {
        Table { columns: cols.iter().map(|c| c.to_string()).collect(), rows }
    }

    #[test]
    fn shared_columns_only() {
        let a = table(&["tau", "r", "norm"], vec![vec![0.0, 1.0, -1.0], vec![1.0, 2.0, -1.0]]);
        let b = table(&["tau", "r", "clairaut"], vec![vec![0.0, 1.0, 3.0], vec![1.0, 2.5, 3.0], vec![2.0, 0.0, 0.0]]);
        let c = compare(&a, &b).unwrap();
        assert_eq!(c.columns, vec!["r"]);
        assert_eq!(c.sup_difference, 0.5);
        assert_eq!(c.unmatched_rows, 1);
        assert_eq!(c.worst_tau, Some(1.0));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = table(&["tau", "r"], vec![vec![0.0, 1.0], vec![0.5, 2.0]]);
        let b = table(&["tau", "r"], vec![vec![0.0, 1.0], vec![0.6, 2.0]]);
        assert!(compare(&a, &b).is_err());
    }
}
