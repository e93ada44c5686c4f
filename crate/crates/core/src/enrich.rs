//! Named-entity enrichment followed by simplification and reduction.
//!
//! Entity spans become `Prop` sub-trees placed under the lowest node that
//! covers them. Simplification then drops everything that carries no
//! property, and reduction strips part-of-speech scaffolding so that each
//! property holds its tokens directly.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{Node, NodeLabel, Tree};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnrichError {
    #[error("sentence {sentence}: span {label}[{start},{end}) is out of range ({tokens} tokens)")]
    SpanOutOfRange {
        sentence: String,
        label: String,
        start: usize,
        end: usize,
        tokens: usize,
    },
    #[error("sentence {sentence}: span {label}[{start},{end}) crosses constituent boundaries")]
    CrossingSpan {
        sentence: String,
        label: String,
        start: usize,
        end: usize,
    },
}

/// A labelled token range `[start, end)` over a sentence's token leaves.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub sentence_id: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntitySpan {
    pub fn new(sentence_id: impl Into<String>, start: usize, end: usize, label: impl Into<String>) -> Self {
        EntitySpan {
            sentence_id: sentence_id.into(),
            start,
            end,
            label: label.into(),
        }
    }

    fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub id: String,
    pub tree: Tree,
    pub entities: Vec<EntitySpan>,
}

impl AnnotatedSentence {
    pub fn new(id: impl Into<String>, tree: Tree, entities: Vec<EntitySpan>) -> Self {
        let id = id.into();
        let mut seen = std::collections::BTreeSet::new();
        let entities = entities
            .into_iter()
            .filter(|e| seen.insert((e.start, e.end, e.label.clone())))
            .collect();
        AnnotatedSentence { id, tree, entities }
    }

    pub fn token_count(&self) -> usize {
        self.tree.count_where(NodeLabel::is_token)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnrichOptions {
    /// Skip (or partially wrap) crossing spans instead of failing.
    pub lenient: bool,
}

/// Insert a `Prop` node for every entity span, in strict mode.
pub fn enrich(s: &AnnotatedSentence) -> Result<Tree, EnrichError> {
    enrich_with(s, EnrichOptions::default())
}

pub fn enrich_with(s: &AnnotatedSentence, opts: EnrichOptions) -> Result<Tree, EnrichError> {
    let tokens = s.token_count();
    let mut spans: Vec<&EntitySpan> = s.entities.iter().collect();
    for e in &spans {
        if e.start >= e.end || e.end > tokens {
            return Err(EnrichError::SpanOutOfRange {
                sentence: s.id.clone(),
                label: e.label.clone(),
                start: e.start,
                end: e.end,
                tokens,
            });
        }
    }
    // Outer entities first, so nested ones land inside them.
    spans.sort_by_key(|e| (std::cmp::Reverse(e.end - e.start), e.start));

    let mut root = s.tree.to_node();
    for e in spans {
        let placed = place(&mut root, 0, e.range(), &e.label, opts.lenient);
        if placed.is_err() {
            return Err(EnrichError::CrossingSpan {
                sentence: s.id.clone(),
                label: e.label.clone(),
                start: e.start,
                end: e.end,
            });
        }
    }
    Ok(Tree::from_node_unchecked(&root))
}

fn token_len(node: &Node) -> usize {
    match node.label {
        NodeLabel::Token(_) => 1,
        _ => node.children.iter().map(token_len).sum(),
    }
}

fn child_ranges(node: &Node, offset: usize) -> Vec<Range<usize>> {
    let mut cursor = offset;
    node.children
        .iter()
        .map(|c| {
            let r = cursor..cursor + token_len(c);
            cursor = r.end;
            r
        })
        .collect()
}

fn covers(outer: &Range<usize>, inner: &Range<usize>) -> bool {
    !outer.is_empty() && outer.start <= inner.start && inner.end <= outer.end
}

struct Crossing;

/// Wrap `span` in a `Prop` below `node`, whose token range starts at
/// `offset` and covers the span. Returns whether anything was wrapped.
fn place(
    node: &mut Node,
    offset: usize,
    span: Range<usize>,
    label: &str,
    lenient: bool,
) -> Result<bool, Crossing> {
    let ranges = child_ranges(node, offset);
    if let Some(i) = ranges.iter().position(|r| covers(r, &span)) {
        let r = ranges[i].clone();
        let child = &mut node.children[i];
        let exact_below = r == span && child_ranges(child, r.start).contains(&span);
        if r == span && !exact_below {
            let inner = std::mem::replace(child, Node::leaf(NodeLabel::Lambda));
            *child = Node::new(NodeLabel::Prop(label.to_string()), vec![inner]);
            return Ok(true);
        }
        return place(child, r.start, span, label, lenient);
    }

    let inside: Vec<usize> = ranges
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_empty() && span.start <= r.start && r.end <= span.end)
        .map(|(i, _)| i)
        .collect();
    let crossing = ranges.iter().any(|r| {
        !r.is_empty() && r.start < span.end && span.start < r.end && !(span.start <= r.start && r.end <= span.end)
    });
    if crossing && !lenient {
        return Err(Crossing);
    }
    let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
        return Ok(false);
    };
    let wrapped: Vec<Node> = node.children.drain(first..=last).collect();
    node.children
        .insert(first, Node::new(NodeLabel::Prop(label.to_string()), wrapped));
    Ok(true)
}

/// Mark coordinations: a syntactic node with a `CC` child becomes `CONJ`,
/// and nested `CONJ` children are spliced so conjuncts are siblings.
pub fn normalize_conjunctions(t: &Tree) -> Tree {
    fn walk(node: Node) -> Node {
        let children: Vec<Node> = node.children.into_iter().map(walk).collect();
        let is_conj = matches!(&node.label, NodeLabel::Syn(_))
            && children
                .iter()
                .any(|c| c.label == NodeLabel::Syn("CC".into()));
        if !is_conj {
            return Node::new(node.label, children);
        }
        let conj = NodeLabel::Syn("CONJ".into());
        let mut flat = Vec::new();
        for c in children {
            if c.label == conj {
                flat.extend(c.children);
            } else {
                flat.push(c);
            }
        }
        Node::new(conj, flat)
    }
    Tree::from_node_unchecked(&walk(t.to_node()))
}

fn prune(node: Node) -> Node {
    if node.label.is_prop() {
        return node;
    }
    let children = node
        .children
        .into_iter()
        .filter(Node::contains_prop)
        .map(prune)
        .collect();
    Node::new(node.label, children)
}

/// Delete every maximal sub-tree that holds no property.
pub fn prune_unpropertied(t: &Tree) -> Tree {
    Tree::from_node_unchecked(&prune(t.to_node()))
}

/// Replace single-child syntactic nodes by their child, bottom-up.
fn collapse(node: Node) -> Node {
    let children: Vec<Node> = node.children.into_iter().map(collapse).collect();
    if node.label.is_syn() && children.len() == 1 {
        return children.into_iter().next().unwrap();
    }
    Node::new(node.label, children)
}

fn collapse_below_root(root: Node) -> Node {
    let children = root.children.into_iter().map(collapse).collect();
    Node::new(root.label, children)
}

/// Prune property-free branches, then collapse single-child syntactic nodes.
pub fn simplify(t: &Tree) -> Tree {
    Tree::from_node_unchecked(&collapse_below_root(prune(t.to_node())))
}

/// Flatten a property so its children are tokens (and nested properties).
fn flatten_prop(prop: Node) -> Node {
    fn gather(node: Node, out: &mut Vec<Node>) {
        match node.label {
            NodeLabel::Token(_) => out.push(node),
            NodeLabel::Prop(_) => out.push(flatten_prop(node)),
            _ => {
                for c in node.children {
                    gather(c, out);
                }
            }
        }
    }
    let mut children = Vec::new();
    for c in prop.children {
        gather(c, &mut children);
    }
    Node::new(prop.label, children)
}

fn reduce_node(node: Node) -> Node {
    if node.label.is_prop() {
        return flatten_prop(node);
    }
    let children: Vec<Node> = node.children.into_iter().map(reduce_node).collect();
    if node.label.is_syn() && children.len() == 1 {
        return children.into_iter().next().unwrap();
    }
    Node::new(node.label, children)
}

/// Strip grammatical nodes inside properties and re-collapse outside them.
pub fn reduce(t: &Tree) -> Tree {
    let root = t.to_node();
    let children = root.children.into_iter().map(reduce_node).collect();
    Tree::from_node_unchecked(&Node::new(root.label, children))
}
