//! Partition comparison: adjusted mutual information and completeness.

use std::collections::BTreeMap;

use super::MetricError;

/// A total labelling of a fixed item universe.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    pub assignment: BTreeMap<String, String>,
}

impl Clustering {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Clustering {
            assignment: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn insert(&mut self, item: impl Into<String>, cluster: impl Into<String>) {
        self.assignment.insert(item.into(), cluster.into());
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        let mut labels: Vec<&String> = self.assignment.values().collect();
        labels.sort();
        labels.dedup();
        labels.len()
    }
}

struct Contingency {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    cells: Vec<Vec<usize>>,
}

fn contingency(a: &Clustering, b: &Clustering) -> Result<Contingency, MetricError> {
    if a.assignment.len() != b.assignment.len()
        || a.assignment.keys().zip(b.assignment.keys()).any(|(x, y)| x != y)
    {
        return Err(MetricError::MismatchedUniverse);
    }
    fn index(c: &Clustering) -> BTreeMap<&str, usize> {
        let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
        for l in c.assignment.values() {
            let next = ids.len();
            ids.entry(l.as_str()).or_insert(next);
        }
        ids
    }
    let (ia, ib) = (index(a), index(b));
    let mut cells = vec![vec![0usize; ib.len()]; ia.len()];
    for (item, la) in &a.assignment {
        let lb = &b.assignment[item];
        cells[ia[la.as_str()]][ib[lb.as_str()]] += 1;
    }
    let rows = cells.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..ib.len()).map(|j| cells.iter().map(|r| r[j]).sum()).collect();
    Ok(Contingency {
        n: a.assignment.len(),
        rows,
        cols,
        cells,
    })
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(c: &Contingency) -> f64 {
    let n = c.n as f64;
    let mut mi = 0.0;
    for (i, row) in c.cells.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (c.rows[i] as f64 * c.cols[j] as f64)).ln();
            }
        }
    }
    mi
}

/// `ln k!` for k in `0..=n`.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Expected mutual information under the hypergeometric (permutation) model.
fn expected_mutual_information(c: &Contingency) -> f64 {
    let n = c.n;
    let lf = log_factorials(n);
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in &c.rows {
        for &b in &c.cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            for nij in lo..=hi {
                let log_p = lf[a] + lf[b] + lf[n - a] + lf[n - b]
                    - lf[n]
                    - lf[nij]
                    - lf[a - nij]
                    - lf[b - nij]
                    - lf[n + nij - a - b];
                let x = nij as f64;
                emi += x / nf * (nf * x / (a as f64 * b as f64)).ln() * log_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information, normalized by the arithmetic mean of the
/// two entropies.
pub fn ami_score(a: &Clustering, b: &Clustering) -> Result<f64, MetricError> {
    let c = contingency(a, b)?;
    if c.n == 0 {
        return Ok(1.0);
    }
    let (ka, kb) = (c.rows.len(), c.cols.len());
    if (ka == 1 && kb == 1) || (ka == c.n && kb == c.n) {
        return Ok(1.0);
    }
    let mi = mutual_information(&c);
    let emi = expected_mutual_information(&c);
    let mean_h = (entropy(&c.rows, c.n) + entropy(&c.cols, c.n)) / 2.0;
    let denom = mean_h - emi;
    if denom.abs() < 1e-12 {
        return Ok(if (mi - emi).abs() < 1e-12 { 1.0 } else { 0.0 });
    }
    Ok(((mi - emi) / denom).min(1.0))
}

/// `1 - H(clusters | classes) / H(clusters)`: 1 when every class sits in a
/// single cluster, and 1 when the clusters carry no entropy.
pub fn completeness_score(classes: &Clustering, clusters: &Clustering) -> Result<f64, MetricError> {
    let c = contingency(classes, clusters)?;
    let h = entropy(&c.cols, c.n);
    if h <= 0.0 {
        return Ok(1.0);
    }
    let n = c.n as f64;
    let mut h_cond = 0.0;
    for (i, row) in c.cells.iter().enumerate() {
        for &nij in row {
            if nij > 0 {
                let x = nij as f64;
                h_cond -= x / n * (x / c.rows[i] as f64).ln();
            }
        }
    }
    Ok((1.0 - h_cond / h).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(labels: &[&str]) -> Clustering {
        Clustering::from_pairs(labels.iter().enumerate().map(|(i, l)| (format!("i{i}"), *l)))
    }

    #[test]
    fn identical_and_trivial() {
        let a = cl(&["x", "x", "y", "z"]);
        assert!((ami_score(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let one = cl(&["a", "a", "a"]);
        let singles = cl(&["a", "b", "c"]);
        assert!(ami_score(&one, &singles).unwrap().abs() < 1e-12);
        assert!((completeness_score(&singles, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!((completeness_score(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_universe() {
        let a = cl(&["x", "y"]);
        let b = cl(&["x", "y", "z"]);
        assert_eq!(ami_score(&a, &b), Err(MetricError::MismatchedUniverse));
        let mut c = Clustering::new();
        c.insert("other", "x");
        c.insert("i1", "y");
        assert_eq!(completeness_score(&a, &c), Err(MetricError::MismatchedUniverse));
    }

    #[test]
    fn renaming_labels_does_not_matter() {
        let a = cl(&["x", "x", "y", "y", "y"]);
        let b = cl(&["p", "q", "q", "r", "r"]);
        let b2 = cl(&["1", "0", "0", "7", "7"]);
        assert_eq!(ami_score(&a, &b).unwrap(), ami_score(&a, &b2).unwrap());
    }
}
