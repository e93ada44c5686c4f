//! Condensed context-free grammars and their extraction from instance trees.
//!
//! Extraction goes through the quotient tree: positions are grouped by label,
//! each class is linked to the classes of its children, and the resulting
//! class tree is read off as one rule per internal node. A child class gets a
//! `+` mark under a parent class when some parent position holds two or more
//! children of that class.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::tree::{LabelKind, Node, NodeLabel, Position, Tree, LAMBDA};

/// A grammar symbol. Tokens are terminals, every other label a non-terminal.
pub type Symbol = NodeLabel;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RhsItem {
    pub symbol: Symbol,
    pub repeated: bool,
}

impl RhsItem {
    pub fn once(symbol: Symbol) -> Self {
        RhsItem { symbol, repeated: false }
    }

    pub fn many(symbol: Symbol) -> Self {
        RhsItem { symbol, repeated: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Rule {
    pub lhs: Symbol,
    pub rhs: Vec<RhsItem>,
}

impl Rule {
    pub fn new(lhs: Symbol, rhs: Vec<RhsItem>) -> Self {
        Rule { lhs, rhs }
    }

    pub fn rhs_symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.rhs.iter().map(|i| &i.symbol)
    }
}

/// Rules in definition order; the start symbol is always `λ`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Grammar {
    pub rules: Vec<Rule>,
}

impl Grammar {
    pub fn new(rules: Vec<Rule>) -> Self {
        Grammar { rules }
    }

    pub fn start(&self) -> Symbol {
        NodeLabel::Lambda
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules_for<'a>(&'a self, lhs: &'a Symbol) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| &r.lhs == lhs)
    }

    pub fn rule_for(&self, lhs: &Symbol) -> Option<&Rule> {
        self.rules.iter().find(|r| &r.lhs == lhs)
    }

    pub fn nonterminals(&self) -> BTreeSet<Symbol> {
        let mut out: BTreeSet<Symbol> = self.rules.iter().map(|r| r.lhs.clone()).collect();
        for r in &self.rules {
            out.extend(r.rhs_symbols().filter(|s| !s.is_token()).cloned());
        }
        out
    }

    pub fn terminals(&self) -> BTreeSet<Symbol> {
        self.rules
            .iter()
            .flat_map(Rule::rhs_symbols)
            .filter(|s| s.is_token())
            .cloned()
            .collect()
    }

    /// Number of rules whose left-hand side has the given kind.
    pub fn count_kind(&self, kind: LabelKind) -> usize {
        self.rules.iter().filter(|r| r.lhs.kind() == kind).count()
    }

    pub fn to_text(&self) -> String {
        let lhs: HashSet<&Symbol> = self.rules.iter().map(|r| &r.lhs).collect();
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.lhs.to_string());
            out.push_str(" ->");
            for item in &r.rhs {
                out.push(' ');
                write_symbol(&item.symbol, &lhs, &mut out);
                if item.repeated {
                    out.push('+');
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parse the `LHS -> A B+ C` line format. A bare name on a right-hand
    /// side is a non-terminal when it has a schema prefix or is defined by
    /// some rule, and a terminal otherwise; quoted names are terminals.
    pub fn parse_text(text: &str) -> Result<Grammar, GrammarParseError> {
        let mut raw = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or(GrammarParseError::MissingArrow(line_no))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return Err(GrammarParseError::BadLhs(line_no));
            }
            let items = split_rhs(rhs, line_no)?;
            if items.is_empty() {
                return Err(GrammarParseError::EmptyRhs(line_no));
            }
            raw.push((lhs.to_string(), items));
        }
        let defined: HashSet<String> = raw.iter().map(|(l, _)| l.clone()).collect();
        let as_nonterminal = |name: &str| {
            if name == LAMBDA {
                NodeLabel::Lambda
            } else {
                NodeLabel::parse_inner(name)
            }
        };
        let rules = raw
            .into_iter()
            .map(|(lhs, items)| {
                let rhs = items
                    .into_iter()
                    .map(|(name, quoted, repeated)| {
                        let symbol = if quoted {
                            NodeLabel::Token(name)
                        } else {
                            let nt = as_nonterminal(&name);
                            if defined.contains(&name) || !nt.is_syn() {
                                nt
                            } else {
                                NodeLabel::Token(name)
                            }
                        };
                        RhsItem { symbol, repeated }
                    })
                    .collect();
                Rule::new(as_nonterminal(&lhs), rhs)
            })
            .collect();
        Ok(Grammar { rules })
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarParseError {
    #[error("line {0}: missing `->`")]
    MissingArrow(usize),
    #[error("line {0}: left-hand side must be a single symbol")]
    BadLhs(usize),
    #[error("line {0}: empty right-hand side")]
    EmptyRhs(usize),
    #[error("line {0}: unterminated quoted terminal")]
    UnterminatedQuote(usize),
}

fn terminal_needs_quotes(text: &str, lhs: &HashSet<&Symbol>) -> bool {
    text.is_empty()
        || text == LAMBDA
        || text.ends_with('+')
        || text.contains(|c: char| c.is_whitespace() || c == '"' || c == '\\')
        || text.contains("->")
        || !NodeLabel::parse_inner(text).is_syn()
        || lhs.contains(&NodeLabel::Syn(text.to_string()))
}

fn write_symbol(symbol: &Symbol, lhs: &HashSet<&Symbol>, out: &mut String) {
    match symbol {
        NodeLabel::Token(t) if terminal_needs_quotes(t, lhs) => {
            out.push('"');
            for c in t.chars() {
                if c == '"' || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push('"');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// `(name, quoted, repeated)` per right-hand item.
fn split_rhs(text: &str, line: usize) -> Result<Vec<(String, bool, bool)>, GrammarParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let mut name = String::new();
        let quoted = c == '"';
        if quoted {
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '\\' => name.extend(chars.next()),
                    '"' => {
                        closed = true;
                        break;
                    }
                    c => name.push(c),
                }
            }
            if !closed {
                return Err(GrammarParseError::UnterminatedQuote(line));
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                name.push(c);
                chars.next();
            }
        }
        let repeated = if quoted {
            chars.next_if_eq(&'+').is_some()
        } else if name.len() > 1 && name.ends_with('+') {
            name.pop();
            true
        } else {
            false
        };
        out.push((name, quoted, repeated));
    }
    Ok(out)
}

/// Positions grouped by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPartition {
    pub classes: BTreeMap<NodeLabel, BTreeSet<Position>>,
}

pub fn label_classes(t: &Tree) -> LabelPartition {
    let mut classes: BTreeMap<NodeLabel, BTreeSet<Position>> = BTreeMap::new();
    for (p, l) in t.iter() {
        classes.entry(l.clone()).or_default().insert(p.clone());
    }
    LabelPartition { classes }
}

/// A quotient tree with its repetition marks. A class reachable from several
/// parent classes appears under each of them, but is expanded only at its
/// first pre-order occurrence; later (and recursive) occurrences are leaves
/// referring back to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientTree {
    pub tree: Tree,
    pub repeated: BTreeSet<Position>,
}

impl QuotientTree {
    pub fn is_repeated(&self, p: &Position) -> bool {
        self.repeated.contains(p)
    }

    /// Quotient again, keeping the marks.
    pub fn quotient(&self) -> QuotientTree {
        quotient_marked(&self.tree, &self.repeated)
    }

    /// One rule per expanded internal node, in pre-order. Properties derive
    /// data and get no explicit rule.
    pub fn grammar(&self) -> Grammar {
        let rules = self
            .tree
            .iter()
            .filter(|(p, l)| !l.is_prop() && !self.tree.is_leaf(p))
            .map(|(p, l)| {
                let rhs = self
                    .tree
                    .children(p)
                    .map(|c| RhsItem {
                        symbol: self.tree.label(&c).unwrap().clone(),
                        repeated: self.repeated.contains(&c),
                    })
                    .collect();
                Rule::new(l.clone(), rhs)
            })
            .collect();
        Grammar { rules }
    }

    /// Bracketed text with `+` appended to repeated labels.
    pub fn to_marked_string(&self) -> String {
        fn go(q: &QuotientTree, p: &Position, out: &mut String) {
            let l = q.tree.label(p).unwrap();
            let mark = if q.repeated.contains(p) { "+" } else { "" };
            if q.tree.is_leaf(p) && !p.is_root() {
                out.push_str(&format!("{l}{mark}"));
                return;
            }
            out.push_str(&format!("({l}{mark}"));
            for c in q.tree.children(p) {
                out.push(' ');
                go(q, &c, out);
            }
            out.push(')');
        }
        let mut out = String::new();
        go(self, &Position::root(), &mut out);
        out
    }
}

pub fn quotient_tree(t: &Tree) -> QuotientTree {
    quotient_marked(t, &BTreeSet::new())
}

fn quotient_marked(t: &Tree, marks: &BTreeSet<Position>) -> QuotientTree {
    // Successor classes per class, in first pre-order occurrence.
    let mut succ: HashMap<&NodeLabel, Vec<&NodeLabel>> = HashMap::new();
    let mut seen: HashSet<(&NodeLabel, &NodeLabel)> = HashSet::new();
    let mut repeated: HashSet<(&NodeLabel, &NodeLabel)> = HashSet::new();
    let mut per_parent: HashMap<(Position, &NodeLabel), usize> = HashMap::new();
    for (p, l) in t.iter() {
        let Some(parent) = p.parent() else { continue };
        let pl = t.label(&parent).unwrap();
        if seen.insert((pl, l)) {
            succ.entry(pl).or_default().push(l);
        }
        let n = per_parent.entry((parent, l)).or_insert(0);
        *n += 1;
        if *n >= 2 || marks.contains(p) {
            repeated.insert((pl, l));
        }
    }

    fn build<'a>(
        label: &'a NodeLabel,
        succ: &HashMap<&'a NodeLabel, Vec<&'a NodeLabel>>,
        expanded: &mut HashSet<&'a NodeLabel>,
    ) -> Node {
        if !expanded.insert(label) {
            return Node::leaf(label.clone());
        }
        let children = succ
            .get(label)
            .map(|cs| cs.iter().map(|c| build(c, succ, expanded)).collect())
            .unwrap_or_default();
        Node::new(label.clone(), children)
    }

    let root = t.label(&Position::root()).unwrap();
    let mut expanded = HashSet::new();
    let node = build(root, &succ, &mut expanded);
    let tree = Tree::from_node_unchecked(&node);
    let marked = tree
        .iter()
        .filter(|(p, l)| {
            p.parent().is_some_and(|parent| {
                let pl = tree.label(&parent).unwrap();
                repeated.contains(&(pl, *l)) || matches!(pl, NodeLabel::Coll(_))
            })
        })
        .map(|(p, _)| p.clone())
        .collect();
    QuotientTree { tree, repeated: marked }
}

/// The grammar of a tree, read off its quotient tree.
pub fn extract_grammar(t: &Tree) -> Grammar {
    quotient_tree(t).grammar()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::parse_bracketed;
    use proptest::prelude::*;

    fn t(s: &str) -> Tree {
        parse_bracketed(s).unwrap()
    }

    fn pos(s: &str) -> Position {
        s.parse().unwrap()
    }

    const TWO_SENTENCES: &str = "(λ (X a b) (X b c) (Y a))";
    const TWO_GROUP_GRAMMAR: &str =
        "(λ (Coll_1 (Rel_1 (Grp_1 (Prop_1 v1) (Prop_2 v2)) (Grp_2 (Prop_3 v3)))))";

    #[test]
    fn two_sentence_label_classes() {
        let part = label_classes(&t(TWO_SENTENCES));
        let get = |l: NodeLabel| -> Vec<String> {
            part.classes[&l].iter().map(|p| p.to_string()).collect()
        };
        assert_eq!(get(NodeLabel::Lambda), ["ε"]);
        assert_eq!(get(NodeLabel::Syn("X".into())), ["0", "1"]);
        assert_eq!(get(NodeLabel::Syn("Y".into())), ["2"]);
        assert_eq!(get(NodeLabel::Token("a".into())), ["0.0", "2.0"]);
        assert_eq!(get(NodeLabel::Token("b".into())), ["0.1", "1.0"]);
        assert_eq!(get(NodeLabel::Token("c".into())), ["1.1"]);
        assert_eq!(part.classes.len(), 6);
    }

    #[test]
    fn label_classes_edge_cases() {
        let part = label_classes(&Tree::empty());
        assert_eq!(part.classes.len(), 1);
        let part = label_classes(&t("(λ (A x) (B y))"));
        assert!(part.classes.values().all(|c| c.len() == 1));
    }

    #[test]
    fn two_sentence_quotient_and_grammar() {
        let q = quotient_tree(&t(TWO_SENTENCES));
        assert_eq!(q.to_marked_string(), "(λ (X+ a b c) (Y a))");
        assert!(q.is_repeated(&pos("0")));
        assert!(!q.is_repeated(&pos("1")));
        assert_eq!(extract_grammar(&t(TWO_SENTENCES)).to_text(), "λ -> X+ Y\nX -> a b c\nY -> a\n");
    }

    #[test]
    fn repeated_children_collapse() {
        let q = quotient_tree(&t("(λ (A x) (A x) (A y))"));
        assert_eq!(q.to_marked_string(), "(λ (A+ x y))");
    }

    #[test]
    fn quotient_form_is_a_fixpoint() {
        let src = t("(λ (A x (B y)) (C z))");
        let q = quotient_tree(&src);
        assert_eq!(q.tree, src);
        assert!(q.repeated.is_empty());
    }

    #[test]
    fn two_group_grammar() {
        let g = extract_grammar(&t(TWO_GROUP_GRAMMAR));
        assert_eq!(
            g.to_text(),
            "λ -> Coll_1\nColl_1 -> Rel_1+\nRel_1 -> Grp_1 Grp_2\nGrp_1 -> Prop_1 Prop_2\nGrp_2 -> Prop_3\n"
        );
    }

    #[test]
    fn empty_tree_has_no_rules() {
        assert!(extract_grammar(&Tree::empty()).is_empty());
    }

    #[test]
    fn shared_and_recursive_classes_expand_once() {
        let g = extract_grammar(&t("(λ (Grp_1 (Prop_A a)) (Rel_1 (Grp_1 (Prop_B b)) (Grp_2 (Prop_C c))))"));
        assert_eq!(
            g.to_text(),
            "λ -> Grp_1 Rel_1\nGrp_1 -> Prop_A Prop_B\nRel_1 -> Grp_1 Grp_2\nGrp_2 -> Prop_C\n"
        );
        let g = extract_grammar(&t("(λ (NP (NP x) y))"));
        assert_eq!(g.to_text(), "λ -> NP\nNP -> NP x y\n");
    }

    #[test]
    fn text_round_trip_with_awkward_terminals() {
        let g = Grammar::new(vec![
            Rule::new(NodeLabel::Lambda, vec![RhsItem::many(NodeLabel::Syn("X".into()))]),
            Rule::new(
                NodeLabel::Syn("X".into()),
                vec![
                    RhsItem::once(NodeLabel::Token("X".into())),
                    RhsItem::once(NodeLabel::Token("C++".into())),
                    RhsItem::many(NodeLabel::Token("a b".into())),
                    RhsItem::once(NodeLabel::Token("Prop_Q".into())),
                    RhsItem::once(NodeLabel::Prop("Q".into())),
                ],
            ),
        ]);
        let text = g.to_text();
        assert_eq!(text, "λ -> X+\nX -> \"X\" \"C++\" \"a b\"+ \"Prop_Q\" Prop_Q\n");
        assert_eq!(Grammar::parse_text(&text).unwrap(), g);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(Grammar::parse_text("λ X"), Err(GrammarParseError::MissingArrow(1)));
        assert_eq!(Grammar::parse_text("\nλ ->"), Err(GrammarParseError::EmptyRhs(2)));
        assert_eq!(Grammar::parse_text("a b -> c"), Err(GrammarParseError::BadLhs(1)));
    }

    fn arb_tree() -> impl Strategy<Value = Tree> {
        let label = prop::sample::select(vec![
            NodeLabel::Syn("A".into()),
            NodeLabel::Syn("B".into()),
            NodeLabel::Grp("1".into()),
            NodeLabel::Rel("r".into()),
            NodeLabel::Coll("c".into()),
            NodeLabel::Prop("P".into()),
        ]);
        let leaf = prop::sample::select(vec!["x", "y", "z"]).prop_map(Node::token);
        let node = leaf.prop_recursive(4, 30, 3, move |inner| {
            (label.clone(), prop::collection::vec(inner, 1..4))
                .prop_map(|(l, cs)| Node::new(l, cs))
        });
        prop::collection::vec(node, 0..4)
            .prop_map(|cs| Tree::from_node(&Node::new(NodeLabel::Lambda, cs)).unwrap())
    }

    proptest! {
        #[test]
        fn quotient_is_idempotent(tree in arb_tree()) {
            let q = quotient_tree(&tree);
            let qq = q.quotient();
            prop_assert_eq!(&qq, &q);
            prop_assert_eq!(qq.grammar(), extract_grammar(&tree));
        }

        #[test]
        fn one_rule_per_internal_label(tree in arb_tree()) {
            let g = extract_grammar(&tree);
            let mut children: BTreeMap<NodeLabel, BTreeSet<NodeLabel>> = BTreeMap::new();
            for (p, l) in tree.iter() {
                if l.is_prop() || tree.is_leaf(p) { continue; }
                let e = children.entry(l.clone()).or_default();
                e.extend(tree.children(p).map(|c| tree.label(&c).unwrap().clone()));
            }
            for (l, cs) in &children {
                let rules: Vec<_> = g.rules_for(l).collect();
                prop_assert_eq!(rules.len(), 1);
                let got: BTreeSet<NodeLabel> = rules[0].rhs_symbols().cloned().collect();
                prop_assert_eq!(&got, cs);
            }
            prop_assert_eq!(g.len(), children.len());
        }

        #[test]
        fn text_round_trip(tree in arb_tree()) {
            let g = extract_grammar(&tree);
            prop_assert_eq!(Grammar::parse_text(&g.to_text()).unwrap(), g.clone());
            prop_assert_eq!(extract_grammar(&tree), g);
        }
    }
}
