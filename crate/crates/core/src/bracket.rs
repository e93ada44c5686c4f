//! Treebank-style bracketed text for trees.
//!
//! ```text
//! (λ (NP (DT The) (Prop_SOSY heart rate)) (VP (VBD was)))
//! ```
//!
//! The first atom after `(` is the node label; every other atom is a token
//! leaf. Tokens containing whitespace, parentheses or quotes are written as
//! double-quoted strings with `\"` and `\\` escapes. The outermost node is
//! always read as the root `λ`, whatever its written label (or lack of one,
//! as in `( (S ...))`).

use thiserror::Error;

use crate::tree::{Node, NodeLabel, Tree, LAMBDA};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("unbalanced parentheses at byte {0}")]
    Unbalanced(usize),
    #[error("unexpected `{found}` at byte {offset}")]
    Unexpected { offset: usize, found: String },
    #[error("unterminated quoted token starting at byte {0}")]
    UnterminatedQuote(usize),
    #[error("node at byte {0} has no label")]
    MissingLabel(usize),
    #[error("root label `λ` used below the root at byte {0}")]
    NestedLambda(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Open,
    Close,
    Bare(String),
    Quoted(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Lexeme)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(at, c)) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                out.push((at, Lexeme::Open));
            }
            ')' => {
                chars.next();
                out.push((at, Lexeme::Close));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    match c {
                        '\\' => match chars.next() {
                            Some((_, e)) => s.push(e),
                            None => break,
                        },
                        '"' => {
                            closed = true;
                            break;
                        }
                        c => s.push(c),
                    }
                }
                if !closed {
                    return Err(ParseError::UnterminatedQuote(at));
                }
                out.push((at, Lexeme::Quoted(s)));
            }
            _ => {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push((at, Lexeme::Bare(s)));
            }
        }
    }
    Ok(out)
}

struct Parser {
    lexemes: Vec<(usize, Lexeme)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn offset(&self) -> usize {
        self.lexemes.get(self.at).map_or(self.end, |(o, _)| *o)
    }

    fn node(&mut self, is_root: bool) -> Result<Node, ParseError> {
        let open_at = self.offset();
        match self.lexemes.get(self.at) {
            Some((_, Lexeme::Open)) => self.at += 1,
            Some((o, l)) => {
                return Err(ParseError::Unexpected {
                    offset: *o,
                    found: format!("{l:?}"),
                })
            }
            None => return Err(ParseError::Unbalanced(self.end)),
        }
        let label = match self.lexemes.get(self.at) {
            Some((o, Lexeme::Bare(s))) => {
                let o = *o;
                let s = s.clone();
                self.at += 1;
                if is_root {
                    NodeLabel::Lambda
                } else if s == LAMBDA {
                    return Err(ParseError::NestedLambda(o));
                } else {
                    NodeLabel::parse_inner(&s)
                }
            }
            _ if is_root => NodeLabel::Lambda,
            _ => return Err(ParseError::MissingLabel(open_at)),
        };
        let mut children = Vec::new();
        loop {
            match self.lexemes.get(self.at) {
                Some((_, Lexeme::Close)) => {
                    self.at += 1;
                    return Ok(Node::new(label, children));
                }
                Some((_, Lexeme::Open)) => children.push(self.node(false)?),
                Some((_, Lexeme::Bare(s) | Lexeme::Quoted(s))) => {
                    children.push(Node::token(s.clone()));
                    self.at += 1;
                }
                None => return Err(ParseError::Unbalanced(open_at)),
            }
        }
    }
}

/// Parse one bracketed tree.
pub fn parse_bracketed(text: &str) -> Result<Tree, ParseError> {
    let lexemes = lex(text)?;
    if lexemes.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        lexemes,
        at: 0,
        end: text.len(),
    };
    let root = parser.node(true)?;
    if let Some((offset, lexeme)) = parser.lexemes.get(parser.at) {
        return Err(match lexeme {
            Lexeme::Close => ParseError::Unbalanced(*offset),
            other => ParseError::Unexpected {
                offset: *offset,
                found: format!("{other:?}"),
            },
        });
    }
    // The parser only emits Lambda at the root and tokens as leaves.
    Ok(Tree::from_node_unchecked(&root))
}

fn needs_quotes(token: &str) -> bool {
    token.is_empty()
        || token
            .chars()
            .any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == '\\')
}

fn write_token(token: &str, out: &mut String) {
    if needs_quotes(token) {
        out.push('"');
        for c in token.chars() {
            if c == '"' || c == '\\' {
                out.push('\\');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(token);
    }
}

fn write_node(node: &Node, out: &mut String) {
    if let NodeLabel::Token(t) = &node.label {
        write_token(t, out);
        return;
    }
    out.push('(');
    out.push_str(&node.label.to_string());
    for child in &node.children {
        out.push(' ');
        write_node(child, out);
    }
    out.push(')');
}

/// Single-line bracketed text; re-parses to an equal tree.
pub fn serialize_bracketed(t: &Tree) -> String {
    let mut out = String::new();
    write_node(&t.to_node(), &mut out);
    out
}
