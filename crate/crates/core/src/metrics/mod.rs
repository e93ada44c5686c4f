//! Data loss, semantic loss and schema quality of a structured instance,
//! plus the one-group-per-sentence baseline.

mod clustering;
mod dependency;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use clustering::{ami_score, completeness_score, Clustering};
pub use dependency::{
    confidence_score, dependency_score, duplicates, lower_median, redundancy_score, redundancy_score_capped,
    redundant_rows, GroupTable, DEFAULT_MAX_COLUMNS,
};

use crate::grammar::{extract_grammar, Grammar};
use crate::similarity::{equivalence_partition, EquivPartition, SimilarityConfig};
use crate::tree::{LabelKind, Node, NodeLabel, Position, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("the two clusterings cover different items")]
    MismatchedUniverse,
    #[error("no rows carry every requested column")]
    NotApplicable,
    #[error("column sets must be non-empty")]
    EmptyColumnSet,
    #[error("column sets overlap")]
    OverlappingColumns,
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("a dependency needs at least two columns")]
    TooFewColumns,
    #[error("group {group} has {columns} columns, above the cap of {cap}")]
    TooManyColumns { group: String, columns: usize, cap: usize },
}

/// Concatenated token text under a position.
pub fn text_at(t: &Tree, p: &Position) -> String {
    t.descendants(p)
        .filter_map(|(_, l)| match l {
            NodeLabel::Token(s) => Some(s.as_str()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn prop_multiset(t: &Tree) -> HashMap<(String, String), usize> {
    let mut out = HashMap::new();
    for (p, l) in t.iter() {
        if let NodeLabel::Prop(name) = l {
            *out.entry((name.clone(), text_at(t, p))).or_default() += 1;
        }
    }
    out
}

/// Share of the initial property instances (name and value) still present
/// in the final instance. Copies in the final instance count once per
/// initial occurrence.
pub fn coverage_score(initial: &Tree, final_: &Tree) -> f64 {
    let before = prop_multiset(initial);
    let total: usize = before.values().sum();
    if total == 0 {
        return 1.0;
    }
    let after = prop_multiset(final_);
    let kept: usize = before
        .iter()
        .map(|(k, n)| (*n).min(after.get(k).copied().unwrap_or(0)))
        .sum();
    kept as f64 / total as f64
}

fn group_props(g: &Grammar) -> Vec<(String, BTreeSet<String>)> {
    g.rules
        .iter()
        .filter(|r| r.lhs.kind() == LabelKind::Grp)
        .map(|r| {
            let props = r.rhs_symbols().filter(|s| s.is_prop()).map(|s| s.name().to_string()).collect();
            (r.lhs.name().to_string(), props)
        })
        .collect()
}

/// Mean Jaccard index of property-name sets over all pairs of groups.
pub fn group_overlap(g: &Grammar) -> f64 {
    let groups = group_props(g);
    if groups.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (a, b) = (&groups[i].1, &groups[j].1);
            let union = a.union(b).count();
            if union > 0 {
                sum += a.intersection(b).count() as f64 / union as f64;
            }
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// One table per group rule, one row per group node in the instance.
pub fn build_group_tables(instance: &Tree, g: &Grammar) -> Vec<GroupTable> {
    let mut tables: Vec<GroupTable> = group_props(g)
        .into_iter()
        .map(|(name, _)| {
            let columns = g
                .rule_for(&NodeLabel::Grp(name.clone()))
                .map(|r| r.rhs_symbols().filter(|s| s.is_prop()).map(|s| s.name().to_string()).collect())
                .unwrap_or_default();
            GroupTable::new(name, columns)
        })
        .collect();
    let index: HashMap<String, usize> = tables.iter().enumerate().map(|(i, t)| (t.group_name.clone(), i)).collect();
    for (p, l) in instance.iter() {
        let NodeLabel::Grp(name) = l else { continue };
        let Some(&i) = index.get(name) else { continue };
        let mut row = BTreeMap::new();
        for c in instance.children(p) {
            if let Some(NodeLabel::Prop(prop)) = instance.label(&c) {
                if tables[i].columns.contains(prop) {
                    row.entry(prop.clone()).or_insert_with(|| text_at(instance, &c));
                }
            }
        }
        tables[i].rows.push(row);
    }
    tables
}

/// Redundancy pooled over all group tables: redundant rows over all rows.
pub fn pooled_redundancy(tables: &[GroupTable], alpha: f64, max_columns: usize) -> Result<f64, MetricError> {
    let counts: Vec<usize> = tables
        .par_iter()
        .map(|t| redundant_rows(t, alpha, max_columns).map(|r| r.len()))
        .collect::<Result<_, _>>()?;
    let rows: usize = tables.iter().map(GroupTable::len).sum();
    if rows == 0 {
        return Ok(0.0);
    }
    Ok(counts.iter().sum::<usize>() as f64 / rows as f64)
}

/// Each sentence becomes one group of its distinct property names;
/// sentences with the same name set share a group.
pub fn naive_baseline(corpus: &[Tree]) -> (Grammar, Tree) {
    let mut ids: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let mut groups = Vec::new();
    for t in corpus {
        let mut seen = BTreeSet::new();
        let mut props = Vec::new();
        for (p, l) in t.iter() {
            if let NodeLabel::Prop(name) = l {
                // Nested properties are part of their enclosing one.
                if t.descendants(p).skip(1).any(|(_, d)| d.is_prop()) {
                    continue;
                }
                if seen.insert(name.clone()) {
                    props.push(Node::new(l.clone(), vec![Node::token(text_at(t, p))]));
                }
            }
        }
        if props.is_empty() {
            continue;
        }
        let key: Vec<String> = seen.into_iter().collect();
        let next = ids.len() + 1;
        let id = *ids.entry(key).or_insert(next);
        groups.push(Node::new(NodeLabel::Grp(id.to_string()), props));
    }
    if groups.is_empty() {
        return (Grammar::default(), Tree::empty());
    }
    let tree = Tree::from_node_unchecked(&Node::new(NodeLabel::Lambda, groups));
    (extract_grammar(&tree), tree)
}

/// Equivalence classes of the parents of property nodes.
pub fn prop_parent_partition(initial: &Tree, sim: &SimilarityConfig) -> EquivPartition {
    let parents: BTreeSet<Position> = initial
        .iter()
        .filter(|(_, l)| l.is_prop())
        .filter_map(|(p, _)| p.parent())
        .filter(|p| !p.is_root())
        .collect();
    equivalence_partition(sim, initial, &parents)
}

/// Label each initial property instance by its parent's class, and by the
/// label of its parent in the final instance. Instances missing from the
/// final instance become singletons.
pub fn semantic_clusterings(initial: &Tree, final_: &Tree, part: &EquivPartition) -> (Clustering, Clustering) {
    let mut in_final: HashMap<(String, String), Vec<String>> = HashMap::new();
    for (p, l) in final_.iter() {
        if let NodeLabel::Prop(name) = l {
            let parent = p.parent().and_then(|q| final_.label(&q).cloned()).unwrap_or(NodeLabel::Lambda);
            in_final.entry((name.clone(), text_at(final_, p))).or_default().push(parent.to_string());
        }
    }
    let mut used: HashMap<(String, String), usize> = HashMap::new();
    let (mut a, mut b) = (Clustering::new(), Clustering::new());
    for (p, l) in initial.iter() {
        let NodeLabel::Prop(name) = l else { continue };
        let item = p.to_string();
        let parent = p.parent().unwrap_or_else(Position::root);
        let class = match part.class_of(&parent) {
            Some(c) => format!("class:{c}"),
            None if parent.is_root() => "class:root".to_string(),
            None => format!("parent:{parent}"),
        };
        a.insert(item.clone(), class);
        let key = (name.clone(), text_at(initial, p));
        let k = used.entry(key.clone()).or_default();
        let label = match in_final.get(&key).and_then(|v| v.get(*k)) {
            Some(parent) => format!("final:{parent}"),
            None => format!("absent:{item}"),
        };
        *k += 1;
        b.insert(item, label);
    }
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub coverage: f64,
    pub ami: f64,
    pub completeness: f64,
    pub rule_count: usize,
    pub group_overlap: f64,
    /// Keyed by α as written in the CSV header.
    pub redundancy: BTreeMap<String, f64>,
    #[serde(skip)]
    alphas: Vec<f64>,
}

pub fn alpha_key(alpha: f64) -> String {
    let s = format!("{alpha}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

impl MetricsReport {
    pub fn redundancy_at(&self, alpha: f64) -> Option<f64> {
        self.redundancy.get(&alpha_key(alpha)).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Header and one data row, in the layout of the comparison table.
    pub fn to_csv(&self, tau: f64, min_support: usize) -> String {
        let mut header = vec!["tau".to_string(), "minSup".into(), "cs".into()];
        let mut row = vec![format!("{tau}"), min_support.to_string(), fmt(self.coverage)];
        for a in &self.alphas {
            header.push(format!("rho_{}", alpha_key(*a)));
            row.push(fmt(self.redundancy[&alpha_key(*a)]));
        }
        header.extend(["AMI".into(), "cc".into(), "#R".into(), "grOverlap".into()]);
        row.extend([fmt(self.ami), fmt(self.completeness), self.rule_count.to_string(), fmt(self.group_overlap)]);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        w.write_record(&row).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.4}")
}

/// Every metric of a final instance against the enriched initial one.
pub fn evaluate(
    initial: &Tree,
    final_: &Tree,
    grammar: &Grammar,
    sim: &SimilarityConfig,
    alphas: &[f64],
) -> Result<MetricsReport, MetricError> {
    let part = prop_parent_partition(initial, sim);
    let (a, b) = semantic_clusterings(initial, final_, &part);
    let tables = build_group_tables(final_, grammar);
    let mut redundancy = BTreeMap::new();
    for &alpha in alphas {
        redundancy.insert(alpha_key(alpha), pooled_redundancy(&tables, alpha, DEFAULT_MAX_COLUMNS)?);
    }
    Ok(MetricsReport {
        coverage: coverage_score(initial, final_),
        ami: ami_score(&a, &b)?,
        completeness: completeness_score(&a, &b)?,
        rule_count: grammar.len(),
        group_overlap: group_overlap(grammar),
        redundancy,
        alphas: alphas.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::parse_bracketed;
    use crate::similarity::SimilarityKind;

    fn t(s: &str) -> Tree {
        parse_bracketed(s).unwrap()
    }

    #[test]
    fn coverage() {
        let enriched = t("(λ (S (NP (Prop_SOSY heart rate)) (VP (V is) (NP (Prop_VALUE 100) (Prop_UNIT bpm)))))");
        let reduced = t("(λ (Prop_SOSY heart rate) (NP (Prop_VALUE 100) (Prop_UNIT bpm)))");
        assert_eq!(coverage_score(&enriched, &reduced), 1.0);
        assert_eq!(coverage_score(&enriched, &enriched), 1.0);
        assert!((coverage_score(&enriched, &t("(λ (Prop_SOSY heart rate))")) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(coverage_score(&t("(λ (NP x))"), &t("(λ (NP y))")), 1.0);
        // A changed value does not count as retained.
        assert_eq!(coverage_score(&t("(λ (Prop_A x))"), &t("(λ (Prop_A y))")), 0.0);
    }

    #[test]
    fn overlap() {
        let g = |s: &str| Grammar::parse_text(s).unwrap();
        assert_eq!(group_overlap(&g("λ -> Grp_1 Grp_2\nGrp_1 -> Prop_A\nGrp_2 -> Prop_B")), 0.0);
        assert_eq!(group_overlap(&g("λ -> Grp_1 Grp_2\nGrp_1 -> Prop_A\nGrp_2 -> Prop_A")), 1.0);
        let three = g("λ -> Grp_1 Grp_2 Grp_3\nGrp_1 -> Prop_A Prop_B\nGrp_2 -> Prop_B Prop_C\nGrp_3 -> Prop_C Prop_D");
        assert!((group_overlap(&three) - 2.0 / 9.0).abs() < 1e-12);
        assert_eq!(group_overlap(&g("λ -> Grp_1\nGrp_1 -> Prop_A")), 0.0);
    }

    #[test]
    fn tables() {
        let inst = t("(λ (Coll_1 (Grp_1 (Prop_A a) (Prop_B b)) (Grp_1 (Prop_A a2)) (Grp_1 (Prop_A a3) (Prop_B b3))))");
        let g = extract_grammar(&inst);
        let tabs = build_group_tables(&inst, &g);
        assert_eq!(tabs.len(), 1);
        assert_eq!(tabs[0].columns, ["A", "B"]);
        assert_eq!(tabs[0].rows.len(), 3);
        assert!(!tabs[0].rows[1].contains_key("B"));
    }

    #[test]
    fn baseline() {
        // "Ultrasound of the liver shows a mass in the liver."
        let s = t("(λ (S (NP (Prop_EXAM_NAME ultrasound) (PP (Prop_ANATOMY liver))) \
                       (VP (NP (Prop_SOSY_DESC mass) (PP (Prop_ANATOMY liver))))))");
        let (g, inst) = naive_baseline(std::slice::from_ref(&s));
        assert_eq!(g.count_kind(LabelKind::Grp), 1);
        let grp = g.rules.iter().find(|r| r.lhs.kind() == LabelKind::Grp).unwrap();
        assert_eq!(grp.rhs.len(), 3);
        assert_eq!(inst.count_where(NodeLabel::is_prop), 3);

        let (g, _) = naive_baseline(&[]);
        assert!(g.is_empty());

        let a = t("(λ (NP (Prop_A x) (Prop_B y)))");
        let b = t("(λ (NP (Prop_B q) (Prop_A p)))");
        let (g, inst) = naive_baseline(&[a, b]);
        assert_eq!(g.count_kind(LabelKind::Grp), 1);
        assert_eq!(inst.count_where(|l| l.kind() == LabelKind::Grp), 2);
    }

    #[test]
    fn clusterings() {
        let initial = t("(λ (NP (Prop_A x) (Prop_B y)) (NP (Prop_A z) (Prop_B w)))");
        let sim = SimilarityConfig::new(SimilarityKind::Jaccard, 0.9).unwrap();
        let part = prop_parent_partition(&initial, &sim);
        assert_eq!(part.len(), 1);
        let kept = t("(λ (Coll_1 (Grp_1 (Prop_A x) (Prop_B y)) (Grp_1 (Prop_A z) (Prop_B w))))");
        let (a, b) = semantic_clusterings(&initial, &kept, &part);
        assert_eq!(a.cluster_count(), 1);
        assert_eq!(b.cluster_count(), 1);
        let dropped = t("(λ (Coll_1 (Grp_1 (Prop_A x) (Prop_B y)) (Grp_1 (Prop_A z))))");
        let (_, b) = semantic_clusterings(&initial, &dropped, &part);
        assert_eq!(b.cluster_count(), 2);
        let split = t("(λ (Grp_1 (Prop_A x) (Prop_B y)) (Grp_2 (Prop_A z) (Prop_B w)))");
        let (a, b) = semantic_clusterings(&initial, &split, &part);
        assert!(completeness_score(&a, &b).unwrap() < 1.0);
    }

    #[test]
    fn report_csv() {
        let initial = t("(λ (NP (Prop_A x) (Prop_B y)) (NP (Prop_A x) (Prop_B y)))");
        let fin = t("(λ (Coll_1 (Grp_1 (Prop_A x) (Prop_B y)) (Grp_1 (Prop_A x) (Prop_B y))))");
        let g = extract_grammar(&fin);
        let sim = SimilarityConfig::new(SimilarityKind::Jaccard, 0.5).unwrap();
        let r = evaluate(&initial, &fin, &g, &sim, &[1.0, 0.5]).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert_eq!(r.redundancy_at(1.0), Some(1.0));
        let csv = r.to_csv(0.5, 2);
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "tau,minSup,cs,rho_1.0,rho_0.5,AMI,cc,#R,grOverlap");
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["rule_count"], 3);
    }
}
