//! Linearization of a query against a table schema.
//!
//! The token stream is the query's words followed by three delimited blocks:
//! the table name, the column names, and every table value that the query
//! mentions (`<T> .. </T> <C> .. </C> <V> .. </V>`).

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Table;
use crate::text::{normalize_text, tokenize_words};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sentinel {
    TableOpen,
    TableClose,
    ColumnOpen,
    ColumnClose,
    ValueOpen,
    ValueClose,
}

impl Sentinel {
    pub fn as_str(self) -> &'static str {
        match self {
            Sentinel::TableOpen => "<T>",
            Sentinel::TableClose => "</T>",
            Sentinel::ColumnOpen => "<C>",
            Sentinel::ColumnClose => "</C>",
            Sentinel::ValueOpen => "<V>",
            Sentinel::ValueClose => "</V>",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Token {
    Word(String),
    Sentinel(Sentinel),
    Table(String),
    Column(String),
    /// A cell value mentioned by the query, with the column it came from.
    Value { text: String, column: String },
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => f.write_str(w),
            Token::Sentinel(s) => f.write_str(s.as_str()),
            Token::Table(t) | Token::Column(t) => f.write_str(t),
            Token::Value { text, .. } => f.write_str(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizedQuery {
    tokens: Vec<Token>,
}

/// A value token together with where its words sit in the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueMention<'a> {
    pub text: &'a str,
    pub column: &'a str,
    pub start: usize,
    pub len: usize,
}

impl LinearizedQuery {
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn words(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .take_while(|t| matches!(t, Token::Word(_)))
            .filter_map(|t| match t {
                Token::Word(w) => Some(w.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn table_names(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .filter_map(|t| match t {
                Token::Table(n) => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .filter_map(|t| match t {
                Token::Column(n) => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn values(&self) -> Vec<(&str, &str)> {
        self.tokens
            .iter()
            .filter_map(|t| match t {
                Token::Value { text, column } => Some((text.as_str(), column.as_str())),
                _ => None,
            })
            .collect()
    }

    /// Every occurrence of each V-block value in the query words.
    pub fn value_mentions(&self) -> Vec<ValueMention<'_>> {
        let words = self.words();
        let mut out = Vec::new();
        for (text, column) in self.values() {
            let span = tokenize_words(text);
            if span.is_empty() || span.len() > words.len() {
                continue;
            }
            for start in 0..=(words.len() - span.len()) {
                if words[start..start + span.len()]
                    .iter()
                    .zip(&span)
                    .all(|(w, s)| *w == s.as_str())
                {
                    out.push(ValueMention {
                        text,
                        column,
                        start,
                        len: span.len(),
                    });
                }
            }
        }
        out
    }

    /// Normalized query text used to key user corrections.
    pub fn query_key(&self) -> String {
        normalize_text(&self.words().join(" "))
    }

    /// Checks sentinel structure: T, C and V blocks, each exactly once and in
    /// that order, with only names or values inside.
    pub fn is_well_formed(&self) -> bool {
        let mut i = self.words().len();
        let t = &self.tokens;
        for (open, close) in [
            (Sentinel::TableOpen, Sentinel::TableClose),
            (Sentinel::ColumnOpen, Sentinel::ColumnClose),
            (Sentinel::ValueOpen, Sentinel::ValueClose),
        ] {
            if t.get(i) != Some(&Token::Sentinel(open)) {
                return false;
            }
            i += 1;
            while let Some(tok) = t.get(i) {
                let ok = match (open, tok) {
                    (_, Token::Sentinel(s)) if *s == close => break,
                    (Sentinel::TableOpen, Token::Table(_)) => true,
                    (Sentinel::ColumnOpen, Token::Column(_)) => true,
                    (Sentinel::ValueOpen, Token::Value { .. }) => true,
                    _ => false,
                };
                if !ok {
                    return false;
                }
                i += 1;
            }
            if t.get(i) != Some(&Token::Sentinel(close)) {
                return false;
            }
            i += 1;
        }
        i == t.len()
    }
}

impl fmt::Display for LinearizedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{tok}")?;
        }
        Ok(())
    }
}

/// Linearizes `query` against `table`.
///
/// Values are matched by exact normalized token span: a cell value is
/// included when its word sequence appears contiguously in the query. Each
/// (column, value) pair appears once, ordered by first position in the query
/// and then by column order.
pub fn linearize_query(query: &str, table: &Table) -> LinearizedQuery {
    let words = tokenize_words(query);
    let mut tokens: Vec<Token> = words.iter().cloned().map(Token::Word).collect();

    tokens.push(Token::Sentinel(Sentinel::TableOpen));
    tokens.push(Token::Table(table.name().to_string()));
    tokens.push(Token::Sentinel(Sentinel::TableClose));

    tokens.push(Token::Sentinel(Sentinel::ColumnOpen));
    tokens.extend(table.columns().iter().map(|c| Token::Column(c.name.clone())));
    tokens.push(Token::Sentinel(Sentinel::ColumnClose));

    let mut found: Vec<(usize, usize, String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for (c, column) in table.columns().iter().enumerate() {
        for row in table.rows() {
            let Some(text) = row.cells[c].text() else {
                continue;
            };
            let span = tokenize_words(text);
            if span.is_empty() || span.len() > words.len() {
                continue;
            }
            let key = (c, normalize_text(text));
            if seen.contains(&key) {
                continue;
            }
            let position = (0..=(words.len() - span.len()))
                .find(|&s| words[s..s + span.len()] == span[..]);
            if let Some(start) = position {
                seen.insert(key);
                found.push((start, c, text.to_string(), column.name.clone()));
            }
        }
    }
    found.sort_by_key(|a| (a.0, a.1));

    tokens.push(Token::Sentinel(Sentinel::ValueOpen));
    tokens.extend(
        found
            .into_iter()
            .map(|(_, _, text, column)| Token::Value { text, column }),
    );
    tokens.push(Token::Sentinel(Sentinel::ValueClose));

    LinearizedQuery { tokens }
}
