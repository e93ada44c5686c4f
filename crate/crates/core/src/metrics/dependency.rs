//! Group collections viewed as tables: confidence of instantiated
//! dependencies, the strongest dependency of a column set, and redundancy.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::MetricError;

/// Column subsets are enumerated exhaustively up to this many columns.
pub const DEFAULT_MAX_COLUMNS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupTable {
    pub group_name: String,
    pub columns: Vec<String>,
    pub rows: Vec<BTreeMap<String, String>>,
}

impl GroupTable {
    pub fn new(group_name: impl Into<String>, columns: Vec<String>) -> Self {
        GroupTable {
            group_name: group_name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    /// Rows given as full tuples in column order.
    pub fn from_tuples(group_name: &str, columns: &[&str], tuples: &[&[&str]]) -> Self {
        let mut t = GroupTable::new(group_name, columns.iter().map(|c| c.to_string()).collect());
        for tuple in tuples {
            t.rows.push(
                columns
                    .iter()
                    .zip(tuple.iter())
                    .map(|(c, v)| (c.to_string(), v.to_string()))
                    .collect(),
            );
        }
        t
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn project<'a>(&'a self, row: &'a BTreeMap<String, String>, cols: &[&str]) -> Option<Vec<&'a str>> {
        cols.iter().map(|c| row.get(*c).map(String::as_str)).collect()
    }
}

fn check_columns(tab: &GroupTable, cols: &[&str]) -> Result<(), MetricError> {
    match cols.iter().find(|c| !tab.columns.iter().any(|k| k == *c)) {
        Some(c) => Err(MetricError::UnknownColumn(c.to_string())),
        None => Ok(()),
    }
}

/// Lower median of a non-empty list.
pub fn lower_median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[(values.len() - 1) / 2])
}

/// Median confidence of `x -> y` over the distinct value pairs of the
/// projection on `X ∪ Y`. Rows missing any of those cells are ignored.
pub fn confidence_score(tab: &GroupTable, x: &[&str], y: &[&str]) -> Result<f64, MetricError> {
    if x.is_empty() || y.is_empty() {
        return Err(MetricError::EmptyColumnSet);
    }
    if x.iter().any(|c| y.contains(c)) {
        return Err(MetricError::OverlappingColumns);
    }
    check_columns(tab, x)?;
    check_columns(tab, y)?;
    let mut supp_x: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut supp_xy: HashMap<(Vec<&str>, Vec<&str>), usize> = HashMap::new();
    for row in &tab.rows {
        let (Some(vx), Some(vy)) = (tab.project(row, x), tab.project(row, y)) else {
            continue;
        };
        *supp_x.entry(vx.clone()).or_default() += 1;
        *supp_xy.entry((vx, vy)).or_default() += 1;
    }
    let values = supp_xy
        .iter()
        .map(|((vx, _), &n)| n as f64 / supp_x[vx] as f64)
        .collect();
    lower_median(values).ok_or(MetricError::NotApplicable)
}

/// Strongest single-column dependency inside `x`.
pub fn dependency_score(tab: &GroupTable, x: &[&str]) -> Result<f64, MetricError> {
    if x.len() < 2 {
        return Err(MetricError::TooFewColumns);
    }
    let mut best: Option<f64> = None;
    for (i, a) in x.iter().enumerate() {
        let rest: Vec<&str> = x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| *c).collect();
        match confidence_score(tab, &rest, &[a]) {
            Ok(v) => best = Some(best.map_or(v, |b| b.max(v))),
            Err(MetricError::NotApplicable) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(MetricError::NotApplicable)
}

/// Indices of rows that agree with another row on every column of `x`.
pub fn duplicates(tab: &GroupTable, x: &[&str]) -> BTreeSet<usize> {
    let mut by_key: HashMap<Vec<&str>, Vec<usize>> = HashMap::new();
    for (i, row) in tab.rows.iter().enumerate() {
        if let Some(k) = tab.project(row, x) {
            by_key.entry(k).or_default().push(i);
        }
    }
    by_key.into_values().filter(|v| v.len() > 1).flatten().collect()
}

/// Rows made redundant by some column set of size two or more whose
/// dependency reaches `alpha`.
pub fn redundant_rows(tab: &GroupTable, alpha: f64, max_columns: usize) -> Result<BTreeSet<usize>, MetricError> {
    let m = tab.columns.len();
    if m > max_columns {
        return Err(MetricError::TooManyColumns {
            group: tab.group_name.clone(),
            columns: m,
            cap: max_columns,
        });
    }
    let mut out = BTreeSet::new();
    if m < 2 {
        return Ok(out);
    }
    for mask in 1u64..(1u64 << m) {
        if mask.count_ones() < 2 {
            continue;
        }
        let x: Vec<&str> = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| tab.columns[i].as_str())
            .collect();
        let dups = duplicates(tab, &x);
        if dups.is_empty() || dups.is_subset(&out) {
            continue;
        }
        match dependency_score(tab, &x) {
            Ok(d) if d >= alpha => out.extend(dups),
            Ok(_) | Err(MetricError::NotApplicable) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Fraction of rows made redundant at level `alpha`.
pub fn redundancy_score(tab: &GroupTable, alpha: f64) -> Result<f64, MetricError> {
    redundancy_score_capped(tab, alpha, DEFAULT_MAX_COLUMNS)
}

pub fn redundancy_score_capped(tab: &GroupTable, alpha: f64, max_columns: usize) -> Result<f64, MetricError> {
    if tab.is_empty() {
        return Err(MetricError::NotApplicable);
    }
    Ok(redundant_rows(tab, alpha, max_columns)?.len() as f64 / tab.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> GroupTable {
        GroupTable::from_tuples(
            "R",
            &["A", "B", "C"],
            &[&["a", "b", "c"], &["a", "b", "c'"], &["a'", "b", "c'"], &["a''", "b'", "c"]],
        )
    }

    #[test]
    fn example_table() {
        let t = example();
        assert_eq!(confidence_score(&t, &["A"], &["B"]).unwrap(), 1.0);
        assert_eq!(dependency_score(&t, &["A", "B"]).unwrap(), 1.0);
        assert_eq!(redundancy_score(&t, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn lower_median_rule() {
        assert_eq!(lower_median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(vec![0.5, 1.0, 0.5, 1.0]), Some(0.5));
        assert_eq!(lower_median(vec![]), None);
    }

    #[test]
    fn missing_cells_are_excluded() {
        let mut t = GroupTable::from_tuples("R", &["A", "B"], &[&["a", "b"], &["a", "b"]]);
        let mut partial = BTreeMap::new();
        partial.insert("A".to_string(), "a".to_string());
        t.rows.push(partial);
        assert_eq!(confidence_score(&t, &["A"], &["B"]).unwrap(), 1.0);
        assert_eq!(duplicates(&t, &["A", "B"]).len(), 2);
        let empty = GroupTable::new("E", vec!["A".into(), "B".into()]);
        assert_eq!(confidence_score(&empty, &["A"], &["B"]), Err(MetricError::NotApplicable));
    }

    #[test]
    fn bad_inputs() {
        let t = example();
        assert_eq!(confidence_score(&t, &["A"], &["A"]), Err(MetricError::OverlappingColumns));
        assert!(matches!(confidence_score(&t, &["Z"], &["A"]), Err(MetricError::UnknownColumn(_))));
        assert_eq!(dependency_score(&t, &["A"]), Err(MetricError::TooFewColumns));
        assert!(matches!(redundancy_score_capped(&t, 1.0, 2), Err(MetricError::TooManyColumns { .. })));
    }

    #[test]
    fn identical_rows() {
        let t = GroupTable::from_tuples("R", &["A", "B"], &[&["a", "b"], &["a", "b"], &["a", "b"]]);
        assert_eq!(dependency_score(&t, &["A", "B"]).unwrap(), 1.0);
        assert_eq!(redundancy_score(&t, 1.0).unwrap(), 1.0);
    }
}
