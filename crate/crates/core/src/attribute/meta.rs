//! The schema meta-grammar as an attribute grammar, and the encoding of a
//! grammar as one of its derivation trees.
//!
//! Each rule list is derived right-recursively, so a rule's references are
//! checked against the names defined by the rules after it. Encoded rules
//! are therefore ordered collections, relations, groups, then properties.

use std::collections::BTreeSet;

use crate::grammar::{Grammar, Rule};
use crate::tree::{LabelKind, Node, NodeLabel, Tree};

use super::{
    attr, evaluate_synthesized, AttributeGrammar, Guard, Pattern, Production, SemanticRule, Value,
    GAMMA, NAME,
};

const LISTS: [&str; 4] = ["pL", "gL", "rL", "cL"];

fn syn(name: &str) -> NodeLabel {
    NodeLabel::Syn(name.to_string())
}

fn empty_lists(p: Production) -> Production {
    LISTS.iter().fold(p, |p, l| {
        p.rule(SemanticRule::constant(l, Value::Set(BTreeSet::new())))
    })
}

/// `list ← {name of child 0} ∪ list of child 1`, guarded by `name ∉ list`;
/// the other lists are copied from child 1.
fn cons(p: Production, list: &str, name_attr: &str) -> Production {
    let mut p = p
        .guard(Guard::new(vec![attr(0, name_attr), attr(1, list)], |v| {
            Ok(!v[1].as_set()?.contains(v[0].as_text()?))
        }))
        .rule(SemanticRule::new(list, vec![attr(0, name_attr), attr(1, list)], |v| {
            let mut s = v[1].as_set()?.clone();
            s.insert(v[0].as_text()?.to_string());
            Ok(Value::Set(s))
        }));
    for other in LISTS.iter().filter(|l| **l != list) {
        p = p.rule(SemanticRule::copy(other, 1, other));
    }
    p
}

fn subset(a: usize, la: &str, b: usize, lb: &str) -> Guard {
    Guard::new(vec![attr(a, la), attr(b, lb)], |v| {
        Ok(v[0].as_set()?.is_subset(v[1].as_set()?))
    })
}

fn member(a: usize, name: &str, b: usize, list: &str) -> Guard {
    Guard::new(vec![attr(a, name), attr(b, list)], |v| {
        Ok(v[1].as_set()?.contains(v[0].as_text()?))
    })
}

/// The meta-grammar with its synthesized name lists and `γ`.
pub fn meta_grammar() -> AttributeGrammar {
    use LabelKind::{Coll, Grp, Prop, Rel};
    let k = Pattern::Kind;
    let s = Pattern::syn;
    let mut ps = Vec::new();

    let mut start = Production::new(Pattern::Exact(NodeLabel::Lambda), vec![s("root"), s("rules")]);
    for l in LISTS {
        start = start.guard(subset(0, l, 1, l));
    }
    ps.push(start);

    let mut root = Production::new(s("root"), vec![s("rootList")]);
    for l in LISTS {
        root = root.rule(SemanticRule::copy(l, 0, l));
    }
    ps.push(root);
    ps.push(empty_lists(Production::new(s("rootList"), vec![])));
    for (kind, list) in [(Prop, "pL"), (Grp, "gL"), (Rel, "rL"), (Coll, "cL")] {
        ps.push(cons(Production::new(s("rootList"), vec![k(kind), s("rootList")]), list, NAME));
    }

    ps.push(empty_lists(Production::new(s("rules"), vec![])));
    ps.push(cons(Production::new(s("rules"), vec![s("property"), s("rules")]), "pL", "x"));
    ps.push(
        cons(Production::new(s("rules"), vec![s("group"), s("rules")]), "gL", "x")
            .guard(subset(0, "pL", 1, "pL")),
    );
    ps.push(
        cons(Production::new(s("rules"), vec![s("relation"), s("rules")]), "rL", "x")
            .guard(subset(0, "gL", 1, "gL")),
    );
    ps.push(
        cons(Production::new(s("rules"), vec![s("collGrp"), s("rules")]), "cL", "x")
            .guard(member(0, "g", 1, "gL")),
    );
    ps.push(
        cons(Production::new(s("rules"), vec![s("collRel"), s("rules")]), "cL", "x")
            .guard(member(0, "r", 1, "rL")),
    );

    ps.push(Production::new(s("property"), vec![k(Prop), s("data")]).rule(SemanticRule::copy("x", 0, NAME)));
    ps.push(Production::new(s("data"), vec![]));
    ps.push(
        Production::new(s("group"), vec![k(Grp), s("propList")])
            .rule(SemanticRule::copy("x", 0, NAME))
            .rule(SemanticRule::copy("pL", 1, "pL")),
    );
    ps.push(Production::new(s("propList"), vec![k(Prop)]).rule(SemanticRule::new(
        "pL",
        vec![attr(0, NAME)],
        |v| Ok(Value::Set(BTreeSet::from([v[0].as_text()?.to_string()]))),
    )));
    ps.push(
        Production::new(s("propList"), vec![k(Prop), s("propList")])
            .guard(Guard::new(vec![attr(0, NAME), attr(1, "pL")], |v| {
                Ok(!v[1].as_set()?.contains(v[0].as_text()?))
            }))
            .rule(SemanticRule::new("pL", vec![attr(0, NAME), attr(1, "pL")], |v| {
                let mut s = v[1].as_set()?.clone();
                s.insert(v[0].as_text()?.to_string());
                Ok(Value::Set(s))
            })),
    );
    ps.push(
        Production::new(s("relation"), vec![k(Rel), k(Grp), k(Grp)])
            .guard(Guard::new(vec![attr(1, NAME), attr(2, NAME)], |v| Ok(v[0] != v[1])))
            .rule(SemanticRule::copy("x", 0, NAME))
            .rule(SemanticRule::new("gL", vec![attr(1, NAME), attr(2, NAME)], |v| {
                Ok(Value::Set(BTreeSet::from([
                    v[0].as_text()?.to_string(),
                    v[1].as_text()?.to_string(),
                ])))
            })),
    );
    ps.push(
        Production::new(s("collGrp"), vec![k(Coll), k(Grp)])
            .rule(SemanticRule::copy("x", 0, NAME))
            .rule(SemanticRule::copy("g", 1, NAME)),
    );
    ps.push(
        Production::new(s("collRel"), vec![k(Coll), k(Rel)])
            .rule(SemanticRule::copy("x", 0, NAME))
            .rule(SemanticRule::copy("r", 1, NAME)),
    );
    AttributeGrammar::new(ps)
}

fn chain(items: Vec<Node>, list: &str) -> Node {
    items
        .into_iter()
        .rev()
        .fold(Node::leaf(syn(list)), |tail, item| Node::new(syn(list), vec![item, tail]))
}

fn encode_rule(r: &Rule) -> Result<Node, String> {
    let leaf = |l: &NodeLabel| Node::leaf(l.clone());
    let no_marks = || {
        if r.rhs.iter().any(|i| i.repeated) {
            Err(format!("repetition in the rule for {}", r.lhs))
        } else {
            Ok(())
        }
    };
    let syms: Vec<&NodeLabel> = r.rhs_symbols().collect();
    match r.lhs.kind() {
        LabelKind::Prop => {
            if syms.iter().any(|s| !s.is_token()) {
                return Err(format!("{} derives non-data", r.lhs));
            }
            Ok(Node::new(syn("property"), vec![leaf(&r.lhs), Node::leaf(syn("data"))]))
        }
        LabelKind::Grp => {
            no_marks()?;
            if syms.is_empty() || syms.iter().any(|s| !s.is_prop()) {
                return Err(format!("{} is not a property list", r.lhs));
            }
            let mut list = Node::new(syn("propList"), vec![leaf(syms[syms.len() - 1])]);
            for s in syms[..syms.len() - 1].iter().rev() {
                list = Node::new(syn("propList"), vec![leaf(s), list]);
            }
            Ok(Node::new(syn("group"), vec![leaf(&r.lhs), list]))
        }
        LabelKind::Rel => {
            no_marks()?;
            if syms.len() != 2 || syms.iter().any(|s| s.kind() != LabelKind::Grp) {
                return Err(format!("{} is not binary over groups", r.lhs));
            }
            Ok(Node::new(syn("relation"), vec![leaf(&r.lhs), leaf(syms[0]), leaf(syms[1])]))
        }
        LabelKind::Coll => {
            let [item] = r.rhs.as_slice() else {
                return Err(format!("{} is not homogeneous", r.lhs));
            };
            let kind = match item.symbol.kind() {
                LabelKind::Grp if item.repeated => "collGrp",
                LabelKind::Rel if item.repeated => "collRel",
                _ => return Err(format!("{} is not a repeated group or relation", r.lhs)),
            };
            Ok(Node::new(syn(kind), vec![leaf(&r.lhs), leaf(&item.symbol)]))
        }
        _ => Err(format!("no meta-rule derives a rule for {}", r.lhs)),
    }
}

/// Encode `g` as a derivation tree of the meta-grammar. Properties used but
/// not defined get an implicit data rule.
pub fn encode_derivation(g: &Grammar) -> Result<Tree, String> {
    let roots: Vec<&Rule> = g.rules.iter().filter(|r| r.lhs == NodeLabel::Lambda).collect();
    let [root] = roots.as_slice() else {
        return Err(format!("{} root rules", roots.len()));
    };
    let root_items = root
        .rhs_symbols()
        .map(|s| match s.kind() {
            LabelKind::Prop | LabelKind::Grp | LabelKind::Rel | LabelKind::Coll => Ok(Node::leaf(s.clone())),
            _ => Err(format!("root lists {s}")),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let order = [LabelKind::Coll, LabelKind::Rel, LabelKind::Grp, LabelKind::Prop];
    let mut entries = Vec::new();
    for kind in order {
        for r in g.rules.iter().filter(|r| r.lhs.kind() == kind) {
            entries.push(encode_rule(r)?);
        }
    }
    if let Some(r) = g
        .rules
        .iter()
        .find(|r| !matches!(r.lhs.kind(), LabelKind::Lambda | LabelKind::Coll | LabelKind::Rel | LabelKind::Grp | LabelKind::Prop))
    {
        return Err(format!("no meta-rule derives a rule for {}", r.lhs));
    }
    let explicit: BTreeSet<&NodeLabel> = g.rules.iter().map(|r| &r.lhs).filter(|l| l.is_prop()).collect();
    let implicit: BTreeSet<&NodeLabel> = g
        .rules
        .iter()
        .flat_map(Rule::rhs_symbols)
        .filter(|s| s.is_prop() && !explicit.contains(s))
        .collect();
    for p in implicit {
        entries.push(Node::new(
            syn("property"),
            vec![Node::leaf(p.clone()), Node::leaf(syn("data"))],
        ));
    }

    let tree = Node::new(
        NodeLabel::Lambda,
        vec![
            Node::new(syn("root"), vec![chain(root_items, "rootList")]),
            chain(entries, "rules"),
        ],
    );
    Tree::from_node(&tree).map_err(|e| e.to_string())
}

/// Validity as computed by attribute evaluation over the encoded derivation.
pub fn meta_verdict(g: &Grammar) -> bool {
    let Ok(d) = encode_derivation(g) else {
        return false;
    };
    match evaluate_synthesized(&meta_grammar(), &d) {
        Ok(env) => env.get(GAMMA) == Some(&Value::Bool(true)),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribute::validate_grammar;
    use crate::grammar::RhsItem;
    use proptest::prelude::*;

    const TWO_GROUP_GRAMMAR: &str = "λ -> Coll_1\nColl_1 -> Rel_1+\nRel_1 -> Grp_1 Grp_2\nGrp_1 -> Prop_1 Prop_2\nGrp_2 -> Prop_3\n";

    fn g(text: &str) -> Grammar {
        Grammar::parse_text(text).unwrap()
    }

    #[test]
    fn two_group_derivation_attributes() {
        let d = encode_derivation(&g(TWO_GROUP_GRAMMAR)).unwrap();
        let env = evaluate_synthesized(&meta_grammar(), &d).unwrap();
        assert_eq!(env[GAMMA], Value::Bool(true));
        let root = d.to_node();
        assert_eq!(root.children[0].children[0].children[0].label, NodeLabel::Coll("1".into()));
    }

    #[test]
    fn verdicts_on_golden_grammars() {
        assert!(meta_verdict(&g(TWO_GROUP_GRAMMAR)));
        assert!(!meta_verdict(&g(&TWO_GROUP_GRAMMAR.replace("Grp_1 Grp_2", "Grp_1 Grp_1"))));
        assert!(!meta_verdict(&g(&TWO_GROUP_GRAMMAR.replace("Grp_2 -> Prop_3\n", ""))));
        assert!(!meta_verdict(&g(&format!("{TWO_GROUP_GRAMMAR}Grp_1 -> Prop_9\n"))));
        assert!(!meta_verdict(&Grammar::default()));
    }

    fn arb_symbol() -> impl Strategy<Value = NodeLabel> {
        prop_oneof![
            prop::sample::select(vec!["a", "b"]).prop_map(|n| NodeLabel::Prop(n.into())),
            prop::sample::select(vec!["1", "2", "3"]).prop_map(|n| NodeLabel::Grp(n.into())),
            prop::sample::select(vec!["1", "2"]).prop_map(|n| NodeLabel::Rel(n.into())),
            prop::sample::select(vec!["1", "2"]).prop_map(|n| NodeLabel::Coll(n.into())),
            Just(NodeLabel::Syn("NP".into())),
            Just(NodeLabel::Token("x".into())),
        ]
    }

    fn arb_grammar() -> impl Strategy<Value = Grammar> {
        let item = (arb_symbol(), prop::bool::weighted(0.2))
            .prop_map(|(symbol, repeated)| RhsItem { symbol, repeated });
        let rule = (
            prop_oneof![
                1 => Just(NodeLabel::Lambda),
                6 => arb_symbol().prop_filter("no token lhs", |s| !s.is_token()),
            ],
            prop::collection::vec(item, 1..4),
        )
            .prop_map(|(lhs, rhs)| Rule::new(lhs, rhs));
        prop::collection::vec(rule, 0..7).prop_map(Grammar::new)
    }

    /// Shape-correct grammars, so the valid side is well exercised too.
    fn arb_shaped_grammar() -> impl Strategy<Value = Grammar> {
        let groups = prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c"]), 1..3);
        (
            prop::collection::vec(groups, 1..4),
            prop::bool::ANY,
            prop::bool::ANY,
            prop::bool::ANY,
        )
            .prop_map(|(groups, with_rel, self_rel, with_coll)| {
                let mut rules = vec![];
                let gname = |i: usize| NodeLabel::Grp(i.to_string());
                let mut root = vec![RhsItem::once(gname(0))];
                if with_rel {
                    let other = if self_rel || groups.len() == 1 { 0 } else { 1 };
                    rules.push(Rule::new(
                        NodeLabel::Rel("r".into()),
                        vec![RhsItem::once(gname(0)), RhsItem::once(gname(other))],
                    ));
                    if with_coll {
                        rules.push(Rule::new(
                            NodeLabel::Coll("c".into()),
                            vec![RhsItem::many(NodeLabel::Rel("r".into()))],
                        ));
                        root.push(RhsItem::once(NodeLabel::Coll("c".into())));
                    }
                }
                for (i, props) in groups.iter().enumerate() {
                    rules.push(Rule::new(
                        gname(i),
                        props.iter().map(|p| RhsItem::once(NodeLabel::Prop(p.to_string()))).collect(),
                    ));
                }
                rules.insert(0, Rule::new(NodeLabel::Lambda, root));
                Grammar::new(rules)
            })
    }

    proptest! {
        #[test]
        fn meta_agrees_with_direct_checks(gr in arb_grammar()) {
            prop_assert_eq!(meta_verdict(&gr), validate_grammar(&gr).valid, "{}", gr.to_text());
        }

        #[test]
        fn meta_agrees_on_shaped_grammars(gr in arb_shaped_grammar()) {
            prop_assert_eq!(meta_verdict(&gr), validate_grammar(&gr).valid, "{}", gr.to_text());
        }
    }
}
