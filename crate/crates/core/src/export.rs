//! Schema exporters: grammar text, relational DDL and a property-graph
//! schema. Structure names default to the grammar's ids; a label map may
//! substitute readable names.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::attribute::{validate_grammar, ValidationReport};
use crate::grammar::{Grammar, Symbol};
use crate::tree::LabelKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExportError {
    #[error("grammar is not a valid schema ({} violations)", .0.violations.len())]
    Invalid(ValidationReport),
    #[error("label map: {0}")]
    LabelMap(String),
}

/// Symbol text (`Grp_1`, `Prop_A`) to a readable name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap(pub BTreeMap<String, String>);

impl LabelMap {
    /// A flat JSON object of strings.
    pub fn from_json(text: &str) -> Result<Self, ExportError> {
        serde_json::from_str(text)
            .map(LabelMap)
            .map_err(|e| ExportError::LabelMap(e.to_string()))
    }

    fn name(&self, s: &Symbol) -> String {
        let key = s.to_string();
        self.0.get(&key).cloned().unwrap_or_else(|| s.name().to_string())
    }
}

pub fn export_grammar_text(g: &Grammar) -> String {
    g.to_text()
}

fn checked(g: &Grammar) -> Result<(), ExportError> {
    let report = validate_grammar(g);
    if report.valid {
        Ok(())
    } else {
        Err(ExportError::Invalid(report))
    }
}

fn ident(s: &str) -> String {
    let plain = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        s.to_string()
    } else {
        format!("\"{}\"", s.replace('"', "\"\""))
    }
}

struct GroupNames {
    table: String,
    key: String,
}

fn group_names(map: &LabelMap, g: &Symbol) -> GroupNames {
    let name = map.name(g);
    GroupNames {
        table: ident(&format!("GRP_{name}")),
        key: ident(&format!("id_{name}")),
    }
}

fn prop_names(map: &LabelMap, g: &Grammar, grp: &Symbol) -> Vec<String> {
    g.rule_for(grp)
        .map(|r| r.rhs_symbols().filter(|s| s.is_prop()).map(|s| map.name(s)).collect())
        .unwrap_or_default()
}

/// `CREATE TABLE` text: a table per group, a join table per relation, all
/// columns `TEXT`.
pub fn export_relational_ddl(g: &Grammar, map: &LabelMap) -> Result<String, ExportError> {
    checked(g)?;
    let mut out = String::new();
    for r in g.rules.iter().filter(|r| r.lhs.kind() == LabelKind::Grp) {
        let names = group_names(map, &r.lhs);
        let mut cols = vec![format!("  {} TEXT PRIMARY KEY", names.key)];
        cols.extend(prop_names(map, g, &r.lhs).iter().map(|p| format!("  {} TEXT", ident(p))));
        let _ = writeln!(out, "CREATE TABLE {} (\n{}\n);", names.table, cols.join(",\n"));
    }
    for r in g.rules.iter().filter(|r| r.lhs.kind() == LabelKind::Rel) {
        let ends: Vec<GroupNames> = r.rhs_symbols().map(|s| group_names(map, s)).collect();
        let table = ident(&format!("REL_{}", map.name(&r.lhs)));
        let cols: Vec<String> = ends
            .iter()
            .map(|e| format!("  {} TEXT NOT NULL REFERENCES {} ({})", e.key, e.table, e.key))
            .collect();
        let _ = writeln!(
            out,
            "CREATE TABLE {table} (\n{},\n  PRIMARY KEY ({}, {})\n);",
            cols.join(",\n"),
            ends[0].key,
            ends[1].key
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeType {
    pub name: String,
    pub symbol: String,
    pub properties: Vec<String>,
    pub extents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeType {
    pub name: String,
    pub symbol: String,
    pub source: String,
    pub target: String,
    pub extents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphSchema {
    pub node_types: Vec<NodeType>,
    pub edge_types: Vec<EdgeType>,
}

pub fn graph_schema(g: &Grammar, map: &LabelMap) -> Result<GraphSchema, ExportError> {
    checked(g)?;
    let mut extents: BTreeMap<&Symbol, Vec<String>> = BTreeMap::new();
    for r in g.rules.iter().filter(|r| r.lhs.kind() == LabelKind::Coll) {
        for s in r.rhs_symbols() {
            extents.entry(s).or_default().push(map.name(&r.lhs));
        }
    }
    let node_types = g
        .rules
        .iter()
        .filter(|r| r.lhs.kind() == LabelKind::Grp)
        .map(|r| NodeType {
            name: map.name(&r.lhs),
            symbol: r.lhs.to_string(),
            properties: prop_names(map, g, &r.lhs),
            extents: extents.get(&r.lhs).cloned().unwrap_or_default(),
        })
        .collect();
    let edge_types = g
        .rules
        .iter()
        .filter(|r| r.lhs.kind() == LabelKind::Rel)
        .map(|r| {
            let ends: Vec<&Symbol> = r.rhs_symbols().collect();
            EdgeType {
                name: map.name(&r.lhs),
                symbol: r.lhs.to_string(),
                source: map.name(ends[0]),
                target: map.name(ends[1]),
                extents: extents.get(&r.lhs).cloned().unwrap_or_default(),
            }
        })
        .collect();
    Ok(GraphSchema { node_types, edge_types })
}

pub fn export_graph_schema(g: &Grammar, map: &LabelMap) -> Result<String, ExportError> {
    Ok(serde_json::to_string_pretty(&graph_schema(g, map)?).expect("schema serializes") + "\n")
}
