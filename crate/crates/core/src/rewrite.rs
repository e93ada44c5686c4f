//! The structuring loop: group equivalent sub-trees, rewrite the instance
//! toward the schema shapes, re-extract the grammar, and stop once it is
//! valid or the iteration budget runs out.
//!
//! Rules applied inside one step, repeated until nothing changes:
//!
//! - R1: a syntactic node whose children are all properties becomes a group
//!   named after its equivalence class (when the class is frequent enough);
//!   repeated property names keep their first occurrence.
//! - R1b: a frequent syntactic node mixing loose properties with structures
//!   gathers the loose properties into a new group.
//! - R2: every group in a class takes the class name.
//! - R3: two groups with distinct names under one node form a relation.
//! - R4: three or more groups with several names become relations pairing
//!   the leftmost group with each later group of another name.
//! - R5: same-named groups (or relations) under one node form a collection;
//!   at the root, same-named members are gathered into one collection.
//! - R6: single-child syntactic nodes collapse, and syntactic nodes holding
//!   only structures are spliced into their parent.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::attribute::{validate_grammar, ValidationReport};
use crate::grammar::{extract_grammar, Grammar};
use crate::similarity::{equivalence_partition, EquivPartition, SimilarityConfig};
use crate::tree::{LabelKind, Node, NodeLabel, Position, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("minimum support must be at least 1")]
    MinSupport,
    #[error("the iteration limit must be at least 1")]
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewriteConfig {
    pub similarity: SimilarityConfig,
    pub min_support: usize,
    pub max_iterations: usize,
}

impl RewriteConfig {
    pub fn new(
        similarity: SimilarityConfig,
        min_support: usize,
        max_iterations: usize,
    ) -> Result<Self, ConfigError> {
        if min_support < 1 {
            return Err(ConfigError::MinSupport);
        }
        if max_iterations < 1 {
            return Err(ConfigError::MaxIterations);
        }
        Ok(RewriteConfig {
            similarity,
            min_support,
            max_iterations,
        })
    }

    fn collection_gate(&self) -> usize {
        self.min_support.max(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IterationRecord {
    pub step: usize,
    pub productions: usize,
    pub equivalence_classes: usize,
    pub collections: usize,
    pub relations: usize,
    pub groups: usize,
}

impl IterationRecord {
    fn new(step: usize, g: &Grammar, classes: usize) -> Self {
        IterationRecord {
            step,
            productions: g.len(),
            equivalence_classes: classes,
            collections: g.count_kind(LabelKind::Coll),
            relations: g.count_kind(LabelKind::Rel),
            groups: g.count_kind(LabelKind::Grp),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuringResult {
    pub grammar: Grammar,
    pub instance: Tree,
    pub report: ValidationReport,
    pub log: Vec<IterationRecord>,
    pub converged: bool,
    /// Grammar of the input instance, before any rewriting.
    pub initial_grammar: Grammar,
}

/// Sentence roots become `SENT` children of one shared root. Empty
/// sentences are skipped.
pub fn merge_forest(forest: &[Tree]) -> Tree {
    let children = forest
        .iter()
        .filter(|t| !t.is_empty())
        .map(|t| Node::new(NodeLabel::Syn("SENT".into()), t.to_node().children))
        .collect();
    Tree::from_node_unchecked(&Node::new(NodeLabel::Lambda, children))
}

/// Internal nodes other than the root and properties that have a property
/// below them.
pub fn candidate_positions(t: &Tree) -> BTreeSet<Position> {
    let mut with_prop: BTreeSet<Position> = BTreeSet::new();
    for (p, l) in t.iter() {
        if l.is_prop() {
            for i in 1..=p.depth() {
                with_prop.insert(p.ancestor(i).unwrap());
            }
        }
    }
    with_prop
        .into_iter()
        .filter(|p| {
            let l = t.label(p).unwrap();
            !p.is_root() && !l.is_prop() && !t.is_leaf(p)
        })
        .collect()
}

/// Orders ids numerically when both are numbers, numbers first.
fn id_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct W {
    label: NodeLabel,
    children: Vec<W>,
    class: Option<usize>,
    group: Option<usize>,
}

impl W {
    fn build(t: &Tree, p: &Position, part: &EquivPartition, groups: &EquivPartition) -> W {
        W {
            label: t.label(p).unwrap().clone(),
            children: t.children(p).map(|c| W::build(t, &c, part, groups)).collect(),
            class: part.class_of(p),
            group: groups.class_of(p),
        }
    }

    fn new(label: NodeLabel, children: Vec<W>) -> W {
        W {
            label,
            children,
            class: None,
            group: None,
        }
    }

    fn to_node(&self) -> Node {
        Node::new(
            self.label.clone(),
            self.children.iter().map(W::to_node).collect(),
        )
    }
}

/// Names for structures created or renamed within a step.
struct Registry {
    class_size: Vec<usize>,
    group_size: Vec<usize>,
    group_of_class: HashMap<usize, String>,
    lifted: HashMap<(usize, Vec<String>), String>,
    coll_of_member: BTreeMap<NodeLabel, String>,
    next_grp: u64,
    next_coll: u64,
}

impl Registry {
    fn new(t: &Tree, part: &EquivPartition, groups: &EquivPartition) -> Self {
        let max_id = |kind: LabelKind| {
            t.iter()
                .filter(|(_, l)| l.kind() == kind)
                .filter_map(|(_, l)| l.name().parse::<u64>().ok())
                .max()
                .unwrap_or(0)
        };
        // A class adopts the smallest group id among its members that no
        // earlier class has claimed.
        let mut group_of_class = HashMap::new();
        let mut claimed = BTreeSet::new();
        for (c, members) in groups.classes.iter().enumerate() {
            let mut ids: Vec<&str> = members
                .iter()
                .filter_map(|p| match t.label(p) {
                    Some(NodeLabel::Grp(n)) => Some(n.as_str()),
                    _ => None,
                })
                .collect();
            ids.sort_by(|a, b| id_order(a, b));
            if let Some(id) = ids.into_iter().find(|id| !claimed.contains(*id)) {
                claimed.insert(id.to_string());
                group_of_class.insert(c, id.to_string());
            }
        }
        let mut coll_of_member = BTreeMap::new();
        let mut used = BTreeSet::new();
        for (p, l) in t.iter() {
            if let NodeLabel::Coll(id) = l {
                if let Some(member) = t.label(&p.child(0)) {
                    if !coll_of_member.contains_key(member) && used.insert(id.clone()) {
                        coll_of_member.insert(member.clone(), id.clone());
                    }
                }
            }
        }
        Registry {
            class_size: part.classes.iter().map(BTreeSet::len).collect(),
            group_size: groups.classes.iter().map(BTreeSet::len).collect(),
            group_of_class,
            lifted: HashMap::new(),
            coll_of_member,
            next_grp: max_id(LabelKind::Grp) + 1,
            next_coll: max_id(LabelKind::Coll) + 1,
        }
    }

    fn fresh_grp(&mut self) -> String {
        let id = self.next_grp.to_string();
        self.next_grp += 1;
        id
    }

    fn group(&mut self, class: usize) -> NodeLabel {
        if !self.group_of_class.contains_key(&class) {
            let id = self.fresh_grp();
            self.group_of_class.insert(class, id);
        }
        NodeLabel::Grp(self.group_of_class[&class].clone())
    }

    /// Keyed by class and property names, so loose properties of different
    /// kinds never share a group.
    fn lifted_group(&mut self, class: usize, props: &[W]) -> NodeLabel {
        let mut names: Vec<String> = props.iter().map(|p| p.label.name().to_string()).collect();
        names.sort();
        names.dedup();
        let key = (class, names);
        if !self.lifted.contains_key(&key) {
            let id = self.fresh_grp();
            self.lifted.insert(key.clone(), id);
        }
        NodeLabel::Grp(self.lifted[&key].clone())
    }

    fn collection(&mut self, member: &NodeLabel) -> NodeLabel {
        if !self.coll_of_member.contains_key(member) {
            let id = self.next_coll.to_string();
            self.next_coll += 1;
            self.coll_of_member.insert(member.clone(), id);
        }
        NodeLabel::Coll(self.coll_of_member[member].clone())
    }

    fn frequent(&self, class: Option<usize>, min_support: usize) -> bool {
        class.is_some_and(|c| self.class_size[c] >= min_support)
    }

    fn frequent_group(&self, group: Option<usize>, min_support: usize) -> bool {
        group.is_some_and(|c| self.group_size[c] >= min_support)
    }
}

fn relation_label(a: &NodeLabel, b: &NodeLabel) -> NodeLabel {
    let (x, y) = (a.name(), b.name());
    let (lo, hi) = if id_order(x, y) == Ordering::Greater { (y, x) } else { (x, y) };
    NodeLabel::Rel(format!("{lo}_{hi}"))
}

fn is_structural(w: &W) -> bool {
    w.label.is_structure()
}

fn dedup_props(children: Vec<W>) -> Vec<W> {
    let mut seen = BTreeSet::new();
    children
        .into_iter()
        .filter(|c| seen.insert(c.label.clone()))
        .collect()
}

struct Rewriter<'a> {
    reg: Registry,
    cfg: &'a RewriteConfig,
}

impl Rewriter<'_> {
    fn node(&mut self, mut n: W) -> Vec<W> {
        let children = std::mem::take(&mut n.children);
        n.children = children.into_iter().flat_map(|c| self.node(c)).collect();
        match n.label.kind() {
            LabelKind::Prop | LabelKind::Token | LabelKind::Lambda => vec![n],
            LabelKind::Grp => {
                // R2
                if let Some(c) = n.group {
                    n.label = self.reg.group(c);
                }
                vec![n]
            }
            LabelKind::Rel => {
                let ok = n.children.len() == 2
                    && n.children.iter().all(|c| c.label.kind() == LabelKind::Grp)
                    && n.children[0].label != n.children[1].label;
                if ok {
                    n.label = relation_label(&n.children[0].label, &n.children[1].label);
                    vec![n]
                } else {
                    n.label = NodeLabel::Syn("REL".into());
                    self.syntactic(n)
                }
            }
            LabelKind::Coll => {
                let first = n.children.first().map(|c| c.label.clone());
                match first {
                    Some(m)
                        if matches!(m.kind(), LabelKind::Grp | LabelKind::Rel)
                            && n.children.iter().all(|c| c.label == m) =>
                    {
                        n.label = self.reg.collection(&m);
                        vec![n]
                    }
                    _ => n.children,
                }
            }
            LabelKind::Syn => self.syntactic(n),
        }
    }

    fn syntactic(&mut self, mut n: W) -> Vec<W> {
        if n.children.len() == 1 {
            // R6 first, as in reduction.
            return n.children;
        }
        let frequent = self.reg.frequent(n.class, self.cfg.min_support);
        let all_props = !n.children.is_empty() && n.children.iter().all(|c| c.label.is_prop());
        // R1
        if all_props && self.reg.frequent_group(n.group, self.cfg.min_support) {
            let label = self.reg.group(n.group.unwrap());
            return vec![W {
                label,
                children: dedup_props(n.children),
                class: n.class,
                group: n.group,
            }];
        }
        // R1b
        let has_props = n.children.iter().any(|c| c.label.is_prop());
        let has_structures = n.children.iter().any(is_structural);
        let only_props_and_structures = n
            .children
            .iter()
            .all(|c| c.label.is_prop() || is_structural(c));
        if frequent && has_props && has_structures && only_props_and_structures {
            let at = n.children.iter().position(|c| c.label.is_prop()).unwrap();
            let (props, rest): (Vec<W>, Vec<W>) =
                n.children.into_iter().partition(|c| c.label.is_prop());
            let label = self.reg.lifted_group(n.class.unwrap(), &props);
            let mut children = rest;
            children.insert(at.min(children.len()), W::new(label, dedup_props(props)));
            n.children = children;
        }

        if !n.children.is_empty() && n.children.iter().all(is_structural) {
            let gate = self.cfg.collection_gate();
            let labels: Vec<&NodeLabel> = n.children.iter().map(|c| &c.label).collect();
            let distinct: BTreeSet<&NodeLabel> = labels.iter().copied().collect();
            let all_grp = labels.iter().all(|l| l.kind() == LabelKind::Grp);
            let all_rel = labels.iter().all(|l| l.kind() == LabelKind::Rel);
            if all_grp && labels.len() == 2 && distinct.len() == 2 {
                // R3
                let label = relation_label(labels[0], labels[1]);
                return vec![W::new(label, n.children)];
            }
            if (all_grp || all_rel) && distinct.len() == 1 && labels.len() >= gate {
                // R5
                let label = self.reg.collection(labels[0]);
                return vec![W::new(label, n.children)];
            }
            if all_grp && labels.len() >= 3 && distinct.len() >= 2 {
                // R4
                let mut it = n.children.into_iter();
                let first = it.next().unwrap();
                let mut out = Vec::new();
                for g in it {
                    if g.label == first.label {
                        out.push(g);
                    } else {
                        let label = relation_label(&first.label, &g.label);
                        out.push(W::new(label, vec![first.clone(), g]));
                    }
                }
                return out;
            }
        }

        // R6
        if n.children.len() == 1 || (!n.children.is_empty() && n.children.iter().all(is_structural)) {
            return n.children;
        }
        vec![n]
    }

    /// R5 at the root: one collection per member label.
    fn root(&mut self, root: W) -> W {
        let mut children: Vec<W> = root.children.into_iter().flat_map(|c| self.node(c)).collect();
        let gate = self.cfg.collection_gate();
        let key = |w: &W| -> Option<NodeLabel> {
            match w.label.kind() {
                LabelKind::Grp | LabelKind::Rel => Some(w.label.clone()),
                LabelKind::Coll => w.children.first().map(|c| c.label.clone()),
                _ => None,
            }
        };
        let mut direct: BTreeMap<NodeLabel, usize> = BTreeMap::new();
        let mut has_coll: BTreeSet<NodeLabel> = BTreeSet::new();
        for c in &children {
            if let Some(k) = key(c) {
                if c.label.kind() == LabelKind::Coll {
                    has_coll.insert(k);
                } else {
                    *direct.entry(k).or_default() += 1;
                }
            }
        }
        let gather: BTreeSet<NodeLabel> = direct
            .iter()
            .filter(|(k, n)| has_coll.contains(*k) || **n >= gate)
            .map(|(k, _)| k.clone())
            .chain(has_coll.iter().cloned())
            .collect();
        if !gather.is_empty() {
            let mut slots: BTreeMap<NodeLabel, usize> = BTreeMap::new();
            let mut out: Vec<W> = Vec::new();
            for c in children.drain(..) {
                match key(&c).filter(|k| gather.contains(k)) {
                    Some(k) => {
                        let members = if c.label.kind() == LabelKind::Coll {
                            c.children
                        } else {
                            vec![c]
                        };
                        let slot = *slots.entry(k.clone()).or_insert_with(|| {
                            out.push(W::new(NodeLabel::Lambda, vec![]));
                            out.len() - 1
                        });
                        out[slot].children.extend(members);
                    }
                    None => out.push(c),
                }
            }
            for (k, slot) in slots {
                out[slot].label = self.reg.collection(&k);
            }
            children = out;
        }
        W::new(NodeLabel::Lambda, children)
    }
}

/// Groups and syntactic nodes holding only properties.
fn group_shaped(t: &Tree, p: &Position) -> bool {
    match t.label(p) {
        Some(NodeLabel::Grp(_)) => true,
        Some(NodeLabel::Syn(_)) => {
            t.child_count(p) > 1 && t.children(p).all(|c| t.label(&c).is_some_and(NodeLabel::is_prop))
        }
        _ => false,
    }
}

/// One rewriting step. A tree whose grammar is already valid is returned
/// unchanged.
///
/// Group names come from classes clustered among group-shaped candidates
/// alone, so two sibling groups are never chained together through an
/// enclosing node that resembles both.
pub fn rewrite_step(t: &Tree, part: &EquivPartition, cfg: &RewriteConfig) -> Tree {
    if validate_grammar(&extract_grammar(t)).valid {
        return t.clone();
    }
    let shaped: BTreeSet<Position> = part
        .class_of
        .keys()
        .filter(|p| group_shaped(t, p))
        .cloned()
        .collect();
    let groups = equivalence_partition(&cfg.similarity, t, &shaped);
    let mut rw = Rewriter {
        reg: Registry::new(t, part, &groups),
        cfg,
    };
    let mut w = W::build(t, &Position::root(), part, &groups);
    for _ in 0..64 {
        let next = rw.root(w.clone());
        if next == w {
            break;
        }
        w = next;
    }
    Tree::from_node_unchecked(&w.to_node())
}

/// Algorithm loop over a merged, reduced forest.
pub fn structure_corpus(t: &Tree, cfg: &RewriteConfig) -> StructuringResult {
    let initial_grammar = extract_grammar(t);
    let mut grammar = initial_grammar.clone();
    let mut report = validate_grammar(&grammar);
    let mut instance = t.clone();
    let mut log: Vec<IterationRecord> = Vec::new();
    while !report.valid && log.len() < cfg.max_iterations {
        let candidates = candidate_positions(&instance);
        let part = equivalence_partition(&cfg.similarity, &instance, &candidates);
        let next = rewrite_step(&instance, &part, cfg);
        if next == instance {
            // Stuck: later steps would repeat this one exactly.
            while log.len() < cfg.max_iterations {
                log.push(IterationRecord::new(log.len() + 1, &grammar, part.len()));
            }
            break;
        }
        instance = next;
        grammar = extract_grammar(&instance);
        report = validate_grammar(&grammar);
        log.push(IterationRecord::new(log.len() + 1, &grammar, part.len()));
    }
    StructuringResult {
        converged: report.valid,
        grammar,
        instance,
        report,
        log,
        initial_grammar,
    }
}
