//! Direct validity checks of a grammar against the schema meta-grammar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::grammar::{Grammar, Symbol};
use crate::tree::{LabelKind, NodeLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Constraint {
    /// Exactly one `λ` rule, and only schema symbols define rules.
    V1,
    /// Root symbols are schema symbols, defined, and listed once.
    V2,
    /// Structure names are unique per kind.
    V3,
    /// Groups list distinct properties.
    V4,
    /// Relations join two distinct groups.
    V5,
    /// Collections repeat one defined group or relation.
    V6,
    /// Properties derive data only.
    V7,
    /// Every non-terminal used has a rule.
    V8,
    /// Repetition only in collections and the root list.
    V9,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }

    pub fn constraints(&self) -> BTreeSet<Constraint> {
        self.violations.iter().map(|v| v.constraint).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn is_schema(s: &Symbol) -> bool {
    matches!(
        s.kind(),
        LabelKind::Prop | LabelKind::Grp | LabelKind::Rel | LabelKind::Coll
    )
}

/// Check V1 to V9. Properties without an explicit rule are taken to derive
/// data implicitly.
pub fn validate_grammar(g: &Grammar) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |c: Constraint, subject: &Symbol, message: String| {
        out.push(Violation {
            constraint: c,
            subject: subject.to_string(),
            message,
        })
    };
    let defined: BTreeSet<&Symbol> = g.rules.iter().map(|r| &r.lhs).collect();
    let is_defined = |s: &Symbol| s.is_prop() || defined.contains(s);

    let roots = g.rules.iter().filter(|r| r.lhs == NodeLabel::Lambda).count();
    if roots != 1 {
        push(
            Constraint::V1,
            &NodeLabel::Lambda,
            format!("expected exactly one root rule, found {roots}"),
        );
    }

    let mut counts: BTreeMap<&Symbol, usize> = BTreeMap::new();
    for r in &g.rules {
        *counts.entry(&r.lhs).or_default() += 1;
    }
    for (s, n) in &counts {
        if is_schema(s) && *n > 1 {
            push(Constraint::V3, s, format!("defined by {n} rules"));
        }
    }

    for r in &g.rules {
        let lhs = &r.lhs;
        match lhs.kind() {
            LabelKind::Lambda => {
                let mut seen = BTreeSet::new();
                for s in r.rhs_symbols() {
                    if !is_schema(s) {
                        push(Constraint::V2, s, "root lists a non-schema symbol".into());
                    } else if !is_defined(s) {
                        push(Constraint::V2, s, "root lists an undefined symbol".into());
                    }
                    if !seen.insert(s) {
                        push(Constraint::V2, s, "listed twice in the root rule".into());
                    }
                }
            }
            LabelKind::Grp => {
                if r.rhs.is_empty() {
                    push(Constraint::V4, lhs, "group has no properties".into());
                }
                let mut seen = BTreeSet::new();
                for s in r.rhs_symbols() {
                    if !s.is_prop() {
                        push(Constraint::V4, lhs, format!("group member {s} is not a property"));
                    } else if !seen.insert(s) {
                        push(Constraint::V4, lhs, format!("property {s} listed twice"));
                    }
                }
            }
            LabelKind::Rel => {
                let groups: Vec<&Symbol> = r.rhs_symbols().collect();
                if groups.len() != 2 || groups.iter().any(|s| s.kind() != LabelKind::Grp) {
                    push(Constraint::V5, lhs, "relation must join exactly two groups".into());
                } else if groups[0] == groups[1] {
                    push(Constraint::V5, lhs, format!("relation joins {} with itself", groups[0]));
                }
            }
            LabelKind::Coll => {
                let shape_ok = r.rhs.len() == 1
                    && r.rhs[0].repeated
                    && matches!(r.rhs[0].symbol.kind(), LabelKind::Grp | LabelKind::Rel);
                if !shape_ok {
                    push(
                        Constraint::V6,
                        lhs,
                        "collection must repeat a single group or relation".into(),
                    );
                } else if !is_defined(&r.rhs[0].symbol) {
                    push(
                        Constraint::V6,
                        lhs,
                        format!("collection member {} is undefined", r.rhs[0].symbol),
                    );
                }
            }
            LabelKind::Prop => {
                if r.rhs_symbols().any(|s| !s.is_token()) {
                    push(Constraint::V7, lhs, "property must derive data only".into());
                }
            }
            LabelKind::Syn | LabelKind::Token => {
                push(Constraint::V1, lhs, "rule for a non-schema symbol".into());
            }
        }

        for s in r.rhs_symbols() {
            if !s.is_token() && !is_defined(s) {
                push(Constraint::V8, s, format!("used in the rule for {lhs} but never defined"));
            }
        }
        if !matches!(lhs.kind(), LabelKind::Coll | LabelKind::Lambda) {
            for item in r.rhs.iter().filter(|i| i.repeated) {
                push(
                    Constraint::V9,
                    lhs,
                    format!("repetition of {} outside a collection", item.symbol),
                );
            }
        }
    }

    out.sort_by_key(|a| a.constraint);
    ValidationReport {
        valid: out.is_empty(),
        violations: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(text: &str) -> Grammar {
        Grammar::parse_text(text).unwrap()
    }

    const TWO_GROUP_GRAMMAR: &str = "λ -> Coll_1\nColl_1 -> Rel_1+\nRel_1 -> Grp_1 Grp_2\nGrp_1 -> Prop_1 Prop_2\nGrp_2 -> Prop_3\n";

    #[test]
    fn two_group_grammar_is_valid() {
        let r = validate_grammar(&g(TWO_GROUP_GRAMMAR));
        assert!(r.valid, "{:?}", r.violations);
    }

    #[test]
    fn exam_sosy_is_valid() {
        let r = validate_grammar(&g("λ -> Rel_ExamSosy\n\
             Rel_ExamSosy -> Grp_Exam Grp_Sosy\n\
             Grp_Sosy -> Prop_sosyDesc Prop_anat\n\
             Grp_Exam -> Prop_examName Prop_anat\n\
             Prop_sosyDesc -> fever\n\
             Prop_anat -> liver\n\
             Prop_examName -> scan\n"));
        assert!(r.valid, "{:?}", r.violations);
    }

    #[test]
    fn mutations() {
        let cases = [
            (TWO_GROUP_GRAMMAR.replace("Rel_1 -> Grp_1 Grp_2", "Rel_1 -> Grp_1 Grp_1"), Constraint::V5),
            (TWO_GROUP_GRAMMAR.replace("Grp_2 -> Prop_3\n", ""), Constraint::V8),
            (TWO_GROUP_GRAMMAR.replace("Rel_1 -> Grp_1 Grp_2", "Rel_1 -> Grp_1 Grp_2 Grp_3\nGrp_3 -> Prop_4"), Constraint::V5),
            (format!("{TWO_GROUP_GRAMMAR}Grp_1 -> Prop_9\n"), Constraint::V3),
            (TWO_GROUP_GRAMMAR.replace("Coll_1 -> Rel_1+", "Coll_1 -> Rel_1+ Grp_1+"), Constraint::V6),
        ];
        for (text, c) in cases {
            let r = validate_grammar(&g(&text));
            assert!(!r.valid);
            assert!(r.has(c), "{text}: {:?}", r.violations);
        }
    }

    #[test]
    fn individual_checks() {
        let check = |text: &str, c: Constraint| {
            let r = validate_grammar(&g(text));
            assert!(r.has(c), "{text}: {:?}", r.violations);
        };
        check("Grp_1 -> Prop_A", Constraint::V1);
        check("λ -> Grp_1\nλ -> Grp_1\nGrp_1 -> Prop_A", Constraint::V1);
        check("λ -> NP\nNP -> Prop_A", Constraint::V1);
        check("λ -> Grp_1 Grp_1\nGrp_1 -> Prop_A", Constraint::V2);
        check("λ -> NP\nNP -> Prop_A", Constraint::V2);
        check("λ -> Grp_1\nGrp_1 -> Prop_A Prop_A", Constraint::V4);
        check("λ -> Grp_1\nGrp_1 -> Prop_A Grp_2\nGrp_2 -> Prop_B", Constraint::V4);
        check("λ -> Coll_1\nColl_1 -> Grp_1", Constraint::V6);
        check("λ -> Coll_1\nColl_1 -> Grp_9+", Constraint::V6);
        check("λ -> Coll_1\nColl_1 -> Coll_2+\nColl_2 -> Grp_1+\nGrp_1 -> Prop_A", Constraint::V6);
        check("λ -> Prop_A\nProp_A -> Grp_1\nGrp_1 -> Prop_B", Constraint::V7);
        check("λ -> Grp_1\nGrp_1 -> Prop_A+", Constraint::V9);
        // Repetition in the root list is fine.
        assert!(validate_grammar(&g("λ -> Grp_1+\nGrp_1 -> Prop_A")).valid);
        // Implicit property rules.
        assert!(validate_grammar(&g("λ -> Prop_A Grp_1\nGrp_1 -> Prop_B")).valid);
        assert!(!validate_grammar(&Grammar::default()).valid);
    }

    #[test]
    fn report_json() {
        let r = validate_grammar(&g("λ -> Grp_1\nGrp_1 -> Prop_A Prop_A"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["valid"], false);
        assert_eq!(v["violations"][0]["constraint"], "V4");
        assert_eq!(v["violations"][0]["subject"], "Grp_1");
    }
}
