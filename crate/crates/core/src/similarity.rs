//! Sub-tree similarity, contextual similarity over tree-ancestors, and
//! τ-equivalence classes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{subtree_at, NodeLabel, Position, Subtree, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    /// Jaccard index of the property names in each sub-tree.
    #[default]
    Jaccard,
    /// Normalized edit distance between the child label sequences.
    Levenshtein,
}

impl std::str::FromStr for SimilarityKind {
    type Err = SimilarityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jaccard" | "jaccard_props" => Ok(SimilarityKind::Jaccard),
            "levenshtein" | "levenshtein_labels" => Ok(SimilarityKind::Levenshtein),
            other => Err(SimilarityError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("unknown similarity function `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub kind: SimilarityKind,
    pub tau: f64,
}

impl SimilarityConfig {
    pub fn new(kind: SimilarityKind, tau: f64) -> Result<Self, SimilarityError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(SimilarityError::Threshold(tau));
        }
        Ok(SimilarityConfig { kind, tau })
    }
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn label_similarity(a: &[&NodeLabel], b: &[&NodeLabel]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// `f(x, y)`: symmetric, in `[0, 1]`, and 1 on identical sub-trees.
pub fn base_similarity(kind: SimilarityKind, x: &Subtree, y: &Subtree) -> f64 {
    match kind {
        SimilarityKind::Jaccard => jaccard(&x.prop_names(), &y.prop_names()),
        SimilarityKind::Levenshtein => label_similarity(&x.child_labels(), &y.child_labels()),
    }
}

/// Weighted mean of `f` over the tree-ancestors `P_0 .. P_d` of both
/// sub-trees, `d` the smaller anchor depth, with weights `1 / (i + 1)`.
pub fn contextual_similarity(kind: SimilarityKind, x: &Subtree, y: &Subtree) -> f64 {
    let d = x.depth().min(y.depth());
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..=d {
        let w = 1.0 / (i + 1) as f64;
        let px = x.anchor().ancestor(i).unwrap();
        let py = y.anchor().ancestor(i).unwrap();
        let f = if px == py {
            1.0
        } else {
            let sx = subtree_at(x.base(), &px).unwrap();
            let sy = subtree_at(y.base(), &py).unwrap();
            base_similarity(kind, &sx, &sy)
        };
        num += w * f;
        den += w;
    }
    num / den
}

/// Cached per-position features, so that all pairs over one tree share the
/// ancestor computations.
pub struct SimilarityIndex<'t> {
    kind: SimilarityKind,
    props: HashMap<Position, BTreeSet<&'t str>>,
    labels: HashMap<Position, Vec<&'t NodeLabel>>,
}

impl<'t> SimilarityIndex<'t> {
    pub fn new(kind: SimilarityKind, t: &'t Tree) -> Self {
        let mut props: HashMap<Position, BTreeSet<&'t str>> = HashMap::new();
        let mut labels: HashMap<Position, Vec<&'t NodeLabel>> = HashMap::new();
        match kind {
            SimilarityKind::Jaccard => {
                for (p, l) in t.iter() {
                    props.entry(p.clone()).or_default();
                    if let NodeLabel::Prop(name) = l {
                        for i in 0..=p.depth() {
                            props.entry(p.ancestor(i).unwrap()).or_default().insert(name.as_str());
                        }
                    }
                }
            }
            SimilarityKind::Levenshtein => {
                for (p, l) in t.iter() {
                    labels.entry(p.clone()).or_default();
                    if let Some(parent) = p.parent() {
                        labels.entry(parent).or_default().push(l);
                    }
                }
            }
        }
        SimilarityIndex { kind, props, labels }
    }

    fn f(&self, a: &Position, b: &Position) -> f64 {
        if a == b {
            return 1.0;
        }
        match self.kind {
            SimilarityKind::Jaccard => jaccard(&self.props[a], &self.props[b]),
            SimilarityKind::Levenshtein => label_similarity(&self.labels[a], &self.labels[b]),
        }
    }

    pub fn contextual(&self, u: &Position, v: &Position) -> f64 {
        let d = u.depth().min(v.depth());
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=d {
            let w = 1.0 / (i + 1) as f64;
            num += w * self.f(&u.ancestor(i).unwrap(), &v.ancestor(i).unwrap());
            den += w;
        }
        num / den
    }

    /// Pairwise contextual similarities; the diagonal is 1.
    pub fn matrix(&self, items: &[Position]) -> Vec<Vec<f64>> {
        items
            .par_iter()
            .enumerate()
            .map(|(i, u)| {
                items
                    .iter()
                    .enumerate()
                    .map(|(j, v)| if i == j { 1.0 } else { self.contextual(u, v) })
                    .collect()
            })
            .collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Connected components of the graph linking pairs with similarity `≥ tau`,
/// each sorted, ordered by smallest member.
pub fn components(sim: &[Vec<f64>], tau: f64) -> Vec<Vec<usize>> {
    let n = sim.len();
    let mut uf = UnionFind::new(n);
    for (i, row) in sim.iter().enumerate() {
        for (j, &s) in row.iter().enumerate().skip(i + 1) {
            if s >= tau {
                uf.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = uf.find(i);
        groups.entry(r).or_default().push(i);
    }
    // Roots are the smallest member, so map order is smallest-member order.
    groups.into_values().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EquivPartition {
    pub classes: Vec<BTreeSet<Position>>,
    pub class_of: BTreeMap<Position, usize>,
}

impl EquivPartition {
    pub fn from_classes(classes: Vec<BTreeSet<Position>>) -> Self {
        let class_of = classes
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |p| (p.clone(), i)))
            .collect();
        EquivPartition { classes, class_of }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, p: &Position) -> Option<usize> {
        self.class_of.get(p).copied()
    }
}

/// τ-equivalence classes of `candidates`: single-link clusters cut at τ.
pub fn equivalence_partition(
    cfg: &SimilarityConfig,
    t: &Tree,
    candidates: &BTreeSet<Position>,
) -> EquivPartition {
    let items: Vec<Position> = candidates.iter().cloned().collect();
    let index = SimilarityIndex::new(cfg.kind, t);
    let sim = index.matrix(&items);
    let classes = components(&sim, cfg.tau)
        .into_iter()
        .map(|c| c.into_iter().map(|i| items[i].clone()).collect())
        .collect();
    EquivPartition::from_classes(classes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    /// Cluster ids: `0..n` are the leaves, `n + k` the k-th merge.
    pub left: usize,
    pub right: usize,
    pub similarity: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dendrogram serializes")
    }
}

/// Single-link merge sequence, most similar pairs first.
pub fn dendrogram(kind: SimilarityKind, t: &Tree, candidates: &BTreeSet<Position>) -> Dendrogram {
    let items: Vec<Position> = candidates.iter().cloned().collect();
    let sim = SimilarityIndex::new(kind, t).matrix(&items);
    let n = items.len();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| sim[b.0][b.1].total_cmp(&sim[a.0][a.1]).then(a.cmp(b)));
    let mut uf = UnionFind::new(n);
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut size = vec![1; n];
    let mut merges = Vec::new();
    for (i, j) in pairs {
        let (ri, rj) = (uf.find(i), uf.find(j));
        if ri == rj {
            continue;
        }
        let (left, right) = (cluster_id[ri], cluster_id[rj]);
        let merged = size[ri] + size[rj];
        uf.union(ri, rj);
        let root = uf.find(ri);
        cluster_id[root] = n + merges.len();
        size[root] = merged;
        merges.push(Merge {
            left: left.min(right),
            right: left.max(right),
            similarity: sim[i][j],
            size: merged,
        });
    }
    Dendrogram {
        leaves: items.iter().map(|p| p.to_string()).collect(),
        merges,
    }
}
