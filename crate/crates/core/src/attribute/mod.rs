//! S-attributed grammar evaluation over derivation trees, and validation of
//! extracted grammars against the schema meta-grammar.

pub mod meta;
pub mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::tree::{LabelKind, Node, NodeLabel, Position, Tree};

pub use validate::{validate_grammar, Constraint, ValidationReport, Violation};

/// Attribute values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Text(String),
    Set(BTreeSet<String>),
}

impl Value {
    pub fn as_int(&self) -> Result<i64, String> {
        match self {
            Value::Int(v) => Ok(*v),
            other => Err(format!("expected integer, got {other:?}")),
        }
    }

    pub fn as_text(&self) -> Result<&str, String> {
        match self {
            Value::Text(v) => Ok(v),
            other => Err(format!("expected text, got {other:?}")),
        }
    }

    pub fn as_set(&self) -> Result<&BTreeSet<String>, String> {
        match self {
            Value::Set(v) => Ok(v),
            other => Err(format!("expected set, got {other:?}")),
        }
    }

    pub fn as_bool(&self) -> Result<bool, String> {
        match self {
            Value::Bool(v) => Ok(*v),
            other => Err(format!("expected boolean, got {other:?}")),
        }
    }
}

/// Attribute `attr` of right-hand child `child`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrRef {
    pub child: usize,
    pub attr: String,
}

pub fn attr(child: usize, name: &str) -> AttrRef {
    AttrRef {
        child,
        attr: name.to_string(),
    }
}

pub type Formula = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;
pub type Predicate = Arc<dyn Fn(&[Value]) -> Result<bool, String> + Send + Sync>;

/// `target ← formula(inputs)`.
#[derive(Clone)]
pub struct SemanticRule {
    pub target: String,
    pub inputs: Vec<AttrRef>,
    pub formula: Formula,
}

/// A conjunct of the production's `γ`.
#[derive(Clone)]
pub struct Guard {
    pub inputs: Vec<AttrRef>,
    pub predicate: Predicate,
}

impl SemanticRule {
    pub fn new(
        target: &str,
        inputs: Vec<AttrRef>,
        formula: impl Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    ) -> Self {
        SemanticRule {
            target: target.to_string(),
            inputs,
            formula: Arc::new(formula),
        }
    }

    /// Copy `attr` of child `child` unchanged.
    pub fn copy(target: &str, child: usize, name: &str) -> Self {
        SemanticRule::new(target, vec![attr(child, name)], |v| Ok(v[0].clone()))
    }

    pub fn constant(target: &str, value: Value) -> Self {
        SemanticRule::new(target, vec![], move |_| Ok(value.clone()))
    }
}

impl Guard {
    pub fn new(
        inputs: Vec<AttrRef>,
        predicate: impl Fn(&[Value]) -> Result<bool, String> + Send + Sync + 'static,
    ) -> Self {
        Guard {
            inputs,
            predicate: Arc::new(predicate),
        }
    }
}

/// Matches one node label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Exact(NodeLabel),
    Kind(LabelKind),
}

impl Pattern {
    pub fn syn(name: &str) -> Pattern {
        Pattern::Exact(NodeLabel::Syn(name.to_string()))
    }

    pub fn token(text: &str) -> Pattern {
        Pattern::Exact(NodeLabel::Token(text.to_string()))
    }

    pub fn matches(&self, label: &NodeLabel) -> bool {
        match self {
            Pattern::Exact(l) => l == label,
            Pattern::Kind(k) => label.kind() == *k,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Exact(l) => write!(f, "{l}"),
            Pattern::Kind(k) => write!(f, "{k:?}_*"),
        }
    }
}

#[derive(Clone)]
pub struct Production {
    pub lhs: Pattern,
    pub rhs: Vec<Pattern>,
    pub rules: Vec<SemanticRule>,
    pub guards: Vec<Guard>,
}

impl Production {
    pub fn new(lhs: Pattern, rhs: Vec<Pattern>) -> Self {
        Production {
            lhs,
            rhs,
            rules: Vec::new(),
            guards: Vec::new(),
        }
    }

    pub fn rule(mut self, r: SemanticRule) -> Self {
        self.rules.push(r);
        self
    }

    pub fn guard(mut self, g: Guard) -> Self {
        self.guards.push(g);
        self
    }

    fn matches(&self, label: &NodeLabel, children: &[&NodeLabel]) -> bool {
        self.lhs.matches(label)
            && self.rhs.len() == children.len()
            && self.rhs.iter().zip(children).all(|(p, c)| p.matches(c))
    }
}

/// Productions with synthesized semantic rules. A node is evaluated with the
/// first production matching its label and child labels. Leaves without a
/// matching empty production carry only their intrinsic `name` attribute.
#[derive(Clone, Default)]
pub struct AttributeGrammar {
    pub productions: Vec<Production>,
}

impl AttributeGrammar {
    pub fn new(productions: Vec<Production>) -> Self {
        AttributeGrammar { productions }
    }

    /// Declared attribute names per left-hand pattern.
    pub fn attributes(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for p in &self.productions {
            out.entry(p.lhs.to_string())
                .or_default()
                .extend(p.rules.iter().map(|r| r.target.clone()));
        }
        out
    }
}

pub const GAMMA: &str = "γ";
pub const NAME: &str = "name";

pub type Env = BTreeMap<String, Value>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no production matches the node at {position}")]
    Derivation { position: Position },
    #[error("at {position}: {message}")]
    Rule { position: Position, message: String },
}

/// Evaluate all synthesized attributes bottom-up and return the root's
/// environment, including `γ`.
pub fn evaluate_synthesized(ag: &AttributeGrammar, d: &Tree) -> Result<Env, EvalError> {
    eval_node(ag, &d.to_node(), Position::root())
}

fn eval_node(ag: &AttributeGrammar, node: &Node, at: Position) -> Result<Env, EvalError> {
    let child_envs = node
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| eval_node(ag, c, at.child(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let child_labels: Vec<&NodeLabel> = node.children.iter().map(|c| &c.label).collect();
    let production = ag
        .productions
        .iter()
        .find(|p| p.matches(&node.label, &child_labels));
    let Some(production) = production else {
        if node.is_leaf() {
            let mut env = Env::new();
            env.insert(NAME.into(), Value::Text(node.label.name().to_string()));
            env.insert(GAMMA.into(), Value::Bool(true));
            return Ok(env);
        }
        return Err(EvalError::Derivation { position: at });
    };

    let rule_err = |message: String| EvalError::Rule {
        position: at.clone(),
        message,
    };
    let fetch = |refs: &[AttrRef]| -> Result<Vec<Value>, EvalError> {
        refs.iter()
            .map(|r| {
                child_envs
                    .get(r.child)
                    .and_then(|e| e.get(&r.attr))
                    .cloned()
                    .ok_or_else(|| rule_err(format!("attribute {} of child {} is undefined", r.attr, r.child)))
            })
            .collect()
    };

    let mut env = Env::new();
    for rule in &production.rules {
        let inputs = fetch(&rule.inputs)?;
        let value = (rule.formula)(&inputs).map_err(rule_err)?;
        env.insert(rule.target.clone(), value);
    }
    let mut gamma = true;
    for guard in &production.guards {
        let inputs = fetch(&guard.inputs)?;
        gamma &= (guard.predicate)(&inputs).map_err(rule_err)?;
    }
    for ce in &child_envs {
        if let Some(Value::Bool(g)) = ce.get(GAMMA) {
            gamma &= g;
        }
    }
    env.insert(GAMMA.into(), Value::Bool(gamma));
    Ok(env)
}

/// Binary numerals: `P → 0 | 1 | P 0 | P 1` with `val`, plus `λ → P`.
pub fn binary_grammar() -> AttributeGrammar {
    let p = || Pattern::syn("P");
    AttributeGrammar::new(vec![
        Production::new(Pattern::Exact(NodeLabel::Lambda), vec![p()]).rule(SemanticRule::copy("val", 0, "val")),
        Production::new(p(), vec![Pattern::token("0")]).rule(SemanticRule::constant("val", Value::Int(0))),
        Production::new(p(), vec![Pattern::token("1")]).rule(SemanticRule::constant("val", Value::Int(1))),
        Production::new(p(), vec![p(), Pattern::token("0")]).rule(SemanticRule::new(
            "val",
            vec![attr(0, "val")],
            |v| Ok(Value::Int(2 * v[0].as_int()?)),
        )),
        Production::new(p(), vec![p(), Pattern::token("1")]).rule(SemanticRule::new(
            "val",
            vec![attr(0, "val")],
            |v| Ok(Value::Int(2 * v[0].as_int()? + 1)),
        )),
    ])
}

/// Left-recursive derivation of a non-empty binary word under `λ`.
pub fn binary_derivation(word: &str) -> Option<Tree> {
    let mut chars = word.chars();
    let first = chars.next()?;
    let digit = |c: char| matches!(c, '0' | '1').then(|| Node::token(c.to_string()));
    let mut p = Node::new(NodeLabel::Syn("P".into()), vec![digit(first)?]);
    for c in chars {
        p = Node::new(NodeLabel::Syn("P".into()), vec![p, digit(c)?]);
    }
    Tree::from_node(&Node::new(NodeLabel::Lambda, vec![p])).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bracket::{parse_bracketed, serialize_bracketed};
    use proptest::prelude::*;

    fn val(word: &str) -> Result<i64, EvalError> {
        let d = binary_derivation(word).unwrap();
        let env = evaluate_synthesized(&binary_grammar(), &d)?;
        Ok(env["val"].as_int().unwrap())
    }

    #[test]
    fn derivation_shape() {
        assert_eq!(
            serialize_bracketed(&binary_derivation("0011").unwrap()),
            "(λ (P (P (P (P 0) 0) 1) 1))"
        );
        assert!(binary_derivation("").is_none());
        assert!(binary_derivation("012").is_none());
    }

    #[test]
    fn binary_values() {
        assert_eq!(val("0011").unwrap(), 3);
        assert_eq!(val("0").unwrap(), 0);
        assert_eq!(val("101").unwrap(), 5);
    }

    #[test]
    fn gamma_defaults_true() {
        let d = binary_derivation("1").unwrap();
        let env = evaluate_synthesized(&binary_grammar(), &d).unwrap();
        assert_eq!(env[GAMMA], Value::Bool(true));
    }

    #[test]
    fn no_matching_production() {
        let d = parse_bracketed("(λ (P 0 0 0))").unwrap();
        assert_eq!(
            evaluate_synthesized(&binary_grammar(), &d),
            Err(EvalError::Derivation {
                position: "0".parse().unwrap()
            })
        );
    }

    #[test]
    fn undefined_attribute_is_a_rule_error() {
        let ag = AttributeGrammar::new(vec![Production::new(
            Pattern::Exact(NodeLabel::Lambda),
            vec![Pattern::Kind(LabelKind::Token)],
        )
        .rule(SemanticRule::copy("v", 0, "missing"))]);
        let d = parse_bracketed("(λ x)").unwrap();
        assert!(matches!(evaluate_synthesized(&ag, &d), Err(EvalError::Rule { .. })));
    }

    #[test]
    fn guards_and_names() {
        // λ → First Last with γ ← x = y over the leaves' names.
        let ag = AttributeGrammar::new(vec![Production::new(
            Pattern::Exact(NodeLabel::Lambda),
            vec![Pattern::Kind(LabelKind::Token), Pattern::Kind(LabelKind::Token)],
        )
        .guard(Guard::new(vec![attr(0, NAME), attr(1, NAME)], |v| {
            Ok(v[0].as_text()? == v[1].as_text()?)
        }))]);
        let same = parse_bracketed("(λ stud stud)").unwrap();
        let diff = parse_bracketed("(λ stud prof)").unwrap();
        assert_eq!(evaluate_synthesized(&ag, &same).unwrap()[GAMMA], Value::Bool(true));
        assert_eq!(evaluate_synthesized(&ag, &diff).unwrap()[GAMMA], Value::Bool(false));
        assert!(ag.attributes()["λ"].is_empty());
    }

    proptest! {
        #[test]
        fn binary_matches_integer_parse(word in "[01]{1,16}") {
            prop_assert_eq!(val(&word).unwrap(), i64::from_str_radix(&word, 2).unwrap());
        }
    }
}
