//! Ordered labelled trees addressed by integer-sequence positions.
//!
//! A [`Tree`] stores every node under its explicit [`Position`]. Positions
//! order lexicographically, which is exactly document (pre-order) order, so
//! iterating the underlying map walks the tree top-down and left-to-right.
//! Transformations work on the recursive [`Node`] form and convert back.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("position {0} is not in the tree domain")]
    MissingPosition(Position),
    #[error("ancestor level {level} exceeds depth {depth} of position {anchor}")]
    AncestorOutOfRange {
        anchor: Position,
        level: usize,
        depth: usize,
    },
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("invalid label at {position}: {message}")]
    Label { position: Position, message: String },
}

/// A node address: the path of child indices from the root. Empty is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position(Vec<usize>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn new(path: Vec<usize>) -> Self {
        Position(path)
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> Position {
        let mut path = self.0.clone();
        path.push(index);
        Position(path)
    }

    pub fn parent(&self) -> Option<Position> {
        if self.0.is_empty() {
            None
        } else {
            Some(Position(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Last child index, `None` at the root.
    pub fn index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// The position `levels` steps up, if it exists.
    pub fn ancestor(&self, levels: usize) -> Option<Position> {
        (levels <= self.0.len()).then(|| Position(self.0[..self.0.len() - levels].to_vec()))
    }

    /// `self` is a (non-strict) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (i, step) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{step}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Position {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "ε" {
            return Ok(Position::root());
        }
        s.split('.')
            .map(|part| {
                part.parse::<usize>()
                    .map_err(|_| TreeError::Domain(format!("bad position `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Position)
    }
}

/// Coarse label category, used for pattern matching and statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LabelKind {
    Lambda,
    Syn,
    Prop,
    Grp,
    Rel,
    Coll,
    Token,
}

impl LabelKind {
    pub fn prefix(self) -> Option<&'static str> {
        match self {
            LabelKind::Prop => Some("Prop"),
            LabelKind::Grp => Some("Grp"),
            LabelKind::Rel => Some("Rel"),
            LabelKind::Coll => Some("Coll"),
            _ => None,
        }
    }
}

/// Node labels: the root marker, syntactic tags, the four schema concepts,
/// and lexical tokens.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeLabel {
    Lambda,
    Syn(String),
    Prop(String),
    Grp(String),
    Rel(String),
    Coll(String),
    Token(String),
}

pub const LAMBDA: &str = "λ";

impl NodeLabel {
    pub fn kind(&self) -> LabelKind {
        match self {
            NodeLabel::Lambda => LabelKind::Lambda,
            NodeLabel::Syn(_) => LabelKind::Syn,
            NodeLabel::Prop(_) => LabelKind::Prop,
            NodeLabel::Grp(_) => LabelKind::Grp,
            NodeLabel::Rel(_) => LabelKind::Rel,
            NodeLabel::Coll(_) => LabelKind::Coll,
            NodeLabel::Token(_) => LabelKind::Token,
        }
    }

    /// Build a label of the given kind. `Lambda` ignores the name.
    pub fn of_kind(kind: LabelKind, name: impl Into<String>) -> NodeLabel {
        let name = name.into();
        match kind {
            LabelKind::Lambda => NodeLabel::Lambda,
            LabelKind::Syn => NodeLabel::Syn(name),
            LabelKind::Prop => NodeLabel::Prop(name),
            LabelKind::Grp => NodeLabel::Grp(name),
            LabelKind::Rel => NodeLabel::Rel(name),
            LabelKind::Coll => NodeLabel::Coll(name),
            LabelKind::Token => NodeLabel::Token(name),
        }
    }

    /// The bare name (tag, structure name, or token text); `λ` for the root.
    pub fn name(&self) -> &str {
        match self {
            NodeLabel::Lambda => LAMBDA,
            NodeLabel::Syn(s)
            | NodeLabel::Prop(s)
            | NodeLabel::Grp(s)
            | NodeLabel::Rel(s)
            | NodeLabel::Coll(s)
            | NodeLabel::Token(s) => s,
        }
    }

    pub fn is_prop(&self) -> bool {
        matches!(self, NodeLabel::Prop(_))
    }

    pub fn is_token(&self) -> bool {
        matches!(self, NodeLabel::Token(_))
    }

    pub fn is_syn(&self) -> bool {
        matches!(self, NodeLabel::Syn(_))
    }

    /// Grp, Rel or Coll.
    pub fn is_structure(&self) -> bool {
        matches!(self, NodeLabel::Grp(_) | NodeLabel::Rel(_) | NodeLabel::Coll(_))
    }

    /// Interpret a non-root label as written in bracketed or grammar text:
    /// `Prop_X`, `Grp_X`, `Rel_X` and `Coll_X` map to the schema kinds, any
    /// other text is a syntactic tag.
    pub fn parse_inner(text: &str) -> NodeLabel {
        for kind in [LabelKind::Prop, LabelKind::Grp, LabelKind::Rel, LabelKind::Coll] {
            let prefix = kind.prefix().unwrap();
            if let Some(rest) = text.strip_prefix(prefix).and_then(|r| r.strip_prefix('_')) {
                if !rest.is_empty() {
                    return NodeLabel::of_kind(kind, rest);
                }
            }
        }
        NodeLabel::Syn(text.to_string())
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeLabel::Lambda => f.write_str(LAMBDA),
            NodeLabel::Syn(s) | NodeLabel::Token(s) => f.write_str(s),
            other => write!(f, "{}_{}", other.kind().prefix().unwrap(), other.name()),
        }
    }
}

/// Recursive owned form of a tree, convenient for building and rewriting.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub label: NodeLabel,
    pub children: Vec<Node>,
}

impl Node {
    pub fn new(label: NodeLabel, children: Vec<Node>) -> Self {
        Node { label, children }
    }

    pub fn leaf(label: NodeLabel) -> Self {
        Node {
            label,
            children: Vec::new(),
        }
    }

    pub fn token(text: impl Into<String>) -> Self {
        Node::leaf(NodeLabel::Token(text.into()))
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Token texts below this node, in order.
    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let NodeLabel::Token(t) = &self.label {
            out.push(t);
        }
        for c in &self.children {
            c.collect_tokens(out);
        }
    }

    pub fn count_where(&self, pred: &impl Fn(&NodeLabel) -> bool) -> usize {
        usize::from(pred(&self.label))
            + self
                .children
                .iter()
                .map(|c| c.count_where(pred))
                .sum::<usize>()
    }

    pub fn contains_prop(&self) -> bool {
        self.label.is_prop() || self.children.iter().any(Node::contains_prop)
    }
}

/// An ordered tree `(D, l)` with an explicit position domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    nodes: BTreeMap<Position, NodeLabel>,
}

impl Default for Tree {
    fn default() -> Self {
        Tree::empty()
    }
}

impl Tree {
    /// The empty tree `{ε ↦ λ}`.
    pub fn empty() -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(Position::root(), NodeLabel::Lambda);
        Tree { nodes }
    }

    /// Build from an explicit labelling, checking every tree invariant.
    pub fn from_labels(nodes: BTreeMap<Position, NodeLabel>) -> Result<Tree, TreeError> {
        let violations = validate_domain(nodes.keys());
        if !nodes.contains_key(&Position::root()) {
            return Err(TreeError::Domain("root ε missing".into()));
        }
        if let Some(v) = violations.first() {
            return Err(TreeError::Domain(v.to_string()));
        }
        let tree = Tree { nodes };
        tree.check_labels()?;
        Ok(tree)
    }

    /// Build from the recursive form. The root label must be `Lambda`.
    pub fn from_node(root: &Node) -> Result<Tree, TreeError> {
        let tree = Tree::from_node_unchecked(root);
        tree.check_labels()?;
        Ok(tree)
    }

    /// Positional form of a node built by this crate's own transformations,
    /// which preserve label invariants.
    pub(crate) fn from_node_unchecked(root: &Node) -> Tree {
        fn walk(node: &Node, pos: Position, out: &mut BTreeMap<Position, NodeLabel>) {
            for (i, child) in node.children.iter().enumerate() {
                walk(child, pos.child(i), out);
            }
            out.insert(pos, node.label.clone());
        }
        let mut nodes = BTreeMap::new();
        walk(root, Position::root(), &mut nodes);
        Tree { nodes }
    }

    fn check_labels(&self) -> Result<(), TreeError> {
        for (pos, label) in &self.nodes {
            let bad = |message: &str| {
                Err(TreeError::Label {
                    position: pos.clone(),
                    message: message.to_string(),
                })
            };
            match label {
                NodeLabel::Lambda if !pos.is_root() => return bad("λ below the root"),
                _ if pos.is_root() && *label != NodeLabel::Lambda => {
                    return bad("root must be labelled λ")
                }
                NodeLabel::Token(_) if self.nodes.contains_key(&pos.child(0)) => {
                    return bad("token with children")
                }
                NodeLabel::Prop(n) | NodeLabel::Grp(n) | NodeLabel::Rel(n) | NodeLabel::Coll(n)
                    if n.is_empty() =>
                {
                    return bad("empty structure name")
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn to_node(&self) -> Node {
        self.node_at(&Position::root())
    }

    fn node_at(&self, pos: &Position) -> Node {
        Node {
            label: self.nodes[pos].clone(),
            children: self.children(pos).map(|c| self.node_at(&c)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn contains(&self, pos: &Position) -> bool {
        self.nodes.contains_key(pos)
    }

    pub fn label(&self, pos: &Position) -> Option<&NodeLabel> {
        self.nodes.get(pos)
    }

    /// All `(position, label)` pairs in document order.
    pub fn iter(&self) -> impl Iterator<Item = (&Position, &NodeLabel)> {
        self.nodes.iter()
    }

    pub fn positions(&self) -> impl Iterator<Item = &Position> {
        self.nodes.keys()
    }

    pub fn children<'a>(&'a self, pos: &Position) -> impl Iterator<Item = Position> + 'a {
        let pos = pos.clone();
        (0..)
            .map(move |i| pos.child(i))
            .take_while(|c| self.nodes.contains_key(c))
    }

    pub fn child_count(&self, pos: &Position) -> usize {
        self.children(pos).count()
    }

    pub fn is_leaf(&self, pos: &Position) -> bool {
        !self.nodes.contains_key(&pos.child(0))
    }

    /// `pos` and all its descendants, in document order.
    pub fn descendants<'a>(
        &'a self,
        pos: &Position,
    ) -> impl Iterator<Item = (&'a Position, &'a NodeLabel)> + 'a {
        let pos = pos.clone();
        self.nodes
            .range(pos.clone()..)
            .take_while(move |(p, _)| pos.is_prefix_of(p))
    }

    /// Number of nodes matching a predicate.
    pub fn count_where(&self, pred: impl Fn(&NodeLabel) -> bool) -> usize {
        self.nodes.values().filter(|l| pred(l)).count()
    }
}

/// `T|_u`: the sub-tree of a tree anchored at a position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subtree<'a> {
    base: &'a Tree,
    anchor: Position,
}

/// Sub-tree of `t` at `u`.
pub fn subtree_at<'a>(t: &'a Tree, u: &Position) -> Result<Subtree<'a>, TreeError> {
    if !t.contains(u) {
        return Err(TreeError::MissingPosition(u.clone()));
    }
    Ok(Subtree {
        base: t,
        anchor: u.clone(),
    })
}

/// The `i`-th tree-ancestor of a sub-tree. `i = 0` is the sub-tree itself.
pub fn tree_ancestor<'a>(s: &Subtree<'a>, i: usize) -> Result<Subtree<'a>, TreeError> {
    s.anchor
        .ancestor(i)
        .map(|anchor| Subtree {
            base: s.base,
            anchor,
        })
        .ok_or_else(|| TreeError::AncestorOutOfRange {
            anchor: s.anchor.clone(),
            level: i,
            depth: s.anchor.depth(),
        })
}

impl<'a> Subtree<'a> {
    pub fn base(&self) -> &'a Tree {
        self.base
    }

    pub fn anchor(&self) -> &Position {
        &self.anchor
    }

    pub fn depth(&self) -> usize {
        self.anchor.depth()
    }

    pub fn label(&self) -> &'a NodeLabel {
        &self.base.nodes[&self.anchor]
    }

    pub fn positions(&self) -> impl Iterator<Item = &Position> + '_ {
        self.base.descendants(&self.anchor).map(|(p, _)| p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Position, &NodeLabel)> + '_ {
        self.base.descendants(&self.anchor)
    }

    /// Distinct property names occurring anywhere in the sub-tree.
    pub fn prop_names(&self) -> BTreeSet<&'a str> {
        self.base
            .descendants(&self.anchor)
            .filter_map(|(_, l)| match l {
                NodeLabel::Prop(n) => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Labels of the anchor's children, in order.
    pub fn child_labels(&self) -> Vec<&'a NodeLabel> {
        self.base
            .children(&self.anchor)
            .map(|c| &self.base.nodes[&c])
            .collect()
    }
}

/// Leaves (`u.0 ∉ D`) in document order.
pub fn leaves(t: &Tree) -> Vec<(Position, &NodeLabel)> {
    t.iter()
        .filter(|(p, _)| t.is_leaf(p))
        .map(|(p, l)| (p.clone(), l))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosureRule {
    /// A proper prefix of the position is missing.
    Prefix,
    /// A left sibling of the position is missing.
    Sibling,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DomainViolation {
    pub rule: ClosureRule,
    pub position: Position,
    pub missing: Position,
}

impl fmt::Display for DomainViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.rule {
            ClosureRule::Prefix => "prefix",
            ClosureRule::Sibling => "sibling",
        };
        write!(f, "{what} closure violated at {}: {} missing", self.position, self.missing)
    }
}

/// Every violated prefix- or sibling-closure instance of a position set.
pub fn validate_domain<'a>(domain: impl IntoIterator<Item = &'a Position>) -> Vec<DomainViolation> {
    let domain: BTreeSet<&Position> = domain.into_iter().collect();
    let mut out = Vec::new();
    for &pos in &domain {
        let path = pos.path();
        for len in 0..path.len() {
            let prefix = Position::new(path[..len].to_vec());
            if !domain.contains(&prefix) {
                out.push(DomainViolation {
                    rule: ClosureRule::Prefix,
                    position: pos.clone(),
                    missing: prefix,
                });
            }
        }
        if let Some(parent) = pos.parent() {
            for i in 0..pos.index().unwrap() {
                let sibling = parent.child(i);
                if !domain.contains(&sibling) {
                    out.push(DomainViolation {
                        rule: ClosureRule::Sibling,
                        position: pos.clone(),
                        missing: sibling,
                    });
                }
            }
        }
    }
    out
}
