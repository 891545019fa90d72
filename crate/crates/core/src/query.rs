//! Boolean keyword queries over title, abstract and keywords.
//!
//! Grammar (AND binds tighter than OR):
//!
//! ```text
//! query   := or_expr EOF
//! or_expr := and_expr ("OR" and_expr)*
//! and_expr:= primary ("AND" primary)*
//! primary := "(" or_expr ")" | "\"" phrase "\"" | word | word "*"
//! ```

use std::fmt;

use crate::error::QuerySyntaxError;
use crate::record::{ArticleRecord, Corpus};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// Lowercased, whitespace-collapsed phrase.
    Phrase(String),
    /// Lowercased token prefix.
    Wildcard(String),
    And(Vec<Query>),
    Or(Vec<Query>),
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, op: &str, qs: &[Query]| {
            f.write_str("(")?;
            for (i, q) in qs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{q}")?;
            }
            f.write_str(")")
        };
        match self {
            Query::Phrase(p) => write!(f, "\"{p}\""),
            Query::Wildcard(p) => write!(f, "{p}*"),
            Query::And(qs) => join(f, "AND", qs),
            Query::Or(qs) => join(f, "OR", qs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Quoted(String),
    Word(String),
}

fn normalize(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, QuerySyntaxError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            chars.next();
            tokens.push((pos, Token::LParen));
        } else if c == ')' {
            chars.next();
            tokens.push((pos, Token::RParen));
        } else if c == '"' || c == '\u{201c}' || c == '\u{201d}' {
            chars.next();
            let mut phrase = String::new();
            let mut closed = false;
            for (_, c) in chars.by_ref() {
                if c == '"' || c == '\u{201c}' || c == '\u{201d}' {
                    closed = true;
                    break;
                }
                phrase.push(c);
            }
            if !closed {
                return Err(QuerySyntaxError {
                    position: pos,
                    expected: "closing quote".into(),
                });
            }
            let phrase = normalize(&phrase);
            if phrase.is_empty() {
                return Err(QuerySyntaxError {
                    position: pos,
                    expected: "nonempty phrase".into(),
                });
            }
            tokens.push((pos, Token::Quoted(phrase)));
        } else {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() || matches!(c, '(' | ')' | '"' | '\u{201c}' | '\u{201d}') {
                    break;
                }
                word.push(c);
                chars.next();
            }
            let tok = match word.as_str() {
                "AND" => Token::And,
                "OR" => Token::Or,
                _ => Token::Word(word),
            };
            tokens.push((pos, tok));
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, expected: &str) -> QuerySyntaxError {
        QuerySyntaxError {
            position: self.offset(),
            expected: expected.to_string(),
        }
    }

    fn or_expr(&mut self) -> Result<Query, QuerySyntaxError> {
        let mut parts = vec![self.and_expr()?];
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            parts.push(self.and_expr()?);
        }
        Ok(flatten(parts, Query::Or))
    }

    fn and_expr(&mut self) -> Result<Query, QuerySyntaxError> {
        let mut parts = vec![self.primary()?];
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            parts.push(self.primary()?);
        }
        Ok(flatten(parts, Query::And))
    }

    fn primary(&mut self) -> Result<Query, QuerySyntaxError> {
        let start = self.offset();
        match self.peek().cloned() {
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(self.error("`)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Quoted(phrase)) => {
                self.pos += 1;
                Ok(Query::Phrase(phrase))
            }
            Some(Token::Word(word)) => {
                self.pos += 1;
                word_term(&word, start)
            }
            _ => Err(self.error("a term or `(`")),
        }
    }
}

fn word_term(word: &str, position: usize) -> Result<Query, QuerySyntaxError> {
    let (body, wildcard) = match word.strip_suffix('*') {
        Some(body) => (body, true),
        None => (word, false),
    };
    if body.is_empty() || body.contains('*') {
        return Err(QuerySyntaxError {
            position,
            expected: "a word with at most one trailing `*`".into(),
        });
    }
    let body = body.to_lowercase();
    Ok(if wildcard {
        Query::Wildcard(body)
    } else {
        Query::Phrase(body)
    })
}

/// Collapses single-child nodes and merges nested nodes of the same kind.
fn flatten(parts: Vec<Query>, make: fn(Vec<Query>) -> Query) -> Query {
    if parts.len() == 1 {
        return parts.into_iter().next().expect("one part");
    }
    let probe = make(Vec::new());
    let mut out = Vec::with_capacity(parts.len());
    for part in parts {
        match (&probe, part) {
            (Query::And(_), Query::And(inner)) | (Query::Or(_), Query::Or(inner)) => {
                out.extend(inner)
            }
            (_, other) => out.push(other),
        }
    }
    make(out)
}

pub fn parse_query(text: &str) -> Result<Query, QuerySyntaxError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let query = parser.or_expr()?;
    if parser.peek().is_some() {
        return Err(parser.error("AND, OR or end of query"));
    }
    Ok(query)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn starts_word(text: &str, at: usize) -> bool {
    text[..at]
        .chars()
        .next_back()
        .is_none_or(|c| !is_word_char(c))
}

fn ends_word(text: &str, at: usize) -> bool {
    text[at..].chars().next().is_none_or(|c| !is_word_char(c))
}

fn phrase_in(text: &str, phrase: &str) -> bool {
    text.match_indices(phrase)
        .any(|(at, m)| starts_word(text, at) && ends_word(text, at + m.len()))
}

fn prefix_in(text: &str, prefix: &str) -> bool {
    text.match_indices(prefix)
        .any(|(at, _)| starts_word(text, at))
}

/// The searchable fields of a record, each normalized on its own.
fn fields(rec: &ArticleRecord) -> Vec<String> {
    std::iter::once(rec.title.as_str())
        .chain(std::iter::once(rec.abstract_text.as_str()))
        .chain(rec.keywords.iter().map(String::as_str))
        .filter(|f| !f.trim().is_empty())
        .map(normalize)
        .collect()
}

impl Query {
    fn eval(&self, fields: &[String]) -> bool {
        match self {
            Query::Phrase(p) => fields.iter().any(|f| phrase_in(f, p)),
            Query::Wildcard(p) => fields.iter().any(|f| prefix_in(f, p)),
            Query::And(qs) => qs.iter().all(|q| q.eval(fields)),
            Query::Or(qs) => qs.iter().any(|q| q.eval(fields)),
        }
    }

    pub fn matches(&self, rec: &ArticleRecord) -> bool {
        self.eval(&fields(rec))
    }
}

pub fn filter_corpus(corpus: &Corpus, query: &Query) -> Corpus {
    Corpus {
        provenance: corpus.provenance.clone(),
        records: corpus
            .records
            .iter()
            .filter(|r| query.matches(r))
            .cloned()
            .collect(),
    }
}
