//! Query file parser.
//!
//! ```text
//! QUERY Q(x1,x2,x3) :- R(x1,x2), S(x1,x3) ;
//! ORDER BY SUM x1 + w:score(x3) DESC ;
//! ```
//!
//! The `QUERY` keyword and the `;` terminators are optional. Head lists accept
//! numbered ranges (`x1..x5`) and `..` for "every body variable". Ranking
//! clauses are `LEX v1, v2, ...`, `SUM t1 + t2 + ...`, `MAX t1, t2, ...`
//! (terms separated by `,` or `+`) and `TUPLEWEIGHT`, each optionally followed
//! by `ASC` or `DESC`. A SUM/MAX term is a variable (identity weight) or
//! `w:<table>(v)`.

use std::collections::HashMap;

use thiserror::Error;

use crate::error::ModelError;
use crate::model::query::{ConjunctiveQuery, TermSpec};
use crate::model::ranking::{Direction, RankingSpec, TermWeight, WeightTerm};
use crate::model::relation::Database;
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown variable `{name}`")]
    UnknownVariable { name: String, line: usize, col: usize },
    #[error("{line}:{col}: variable `{name}` listed twice in ORDER BY LEX")]
    RepeatedLexVariable { name: String, line: usize, col: usize },
    #[error(transparent)]
    Schema(#[from] ModelError),
}

/// A parsed query file.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedQuery {
    pub query: ConjunctiveQuery,
    pub ranking: RankingSpec,
}

impl ParsedQuery {
    /// Checks relation names and arities against a loaded database.
    pub fn check_schema(&self, db: &Database) -> Result<(), QueryError> {
        self.query.check_schema(db)?;
        Ok(())
    }

    /// Names of the weight tables the ranking refers to.
    pub fn weight_tables(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .ranking
            .terms()
            .iter()
            .filter_map(|t| t.weight.table_name().map(str::to_string))
            .collect();
        names.sort();
        names.dedup();
        names
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Turnstile,
    Colon,
    Plus,
    DotDot,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, msg: String| QueryError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' | ')' | ',' | ';' | '+' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    _ => Tok::Plus,
                };
                out.push(Token { tok, line: l0, col: c0 });
                advance(1, &mut i, &mut col);
            }
            ':' => {
                if chars.get(i + 1) == Some(&'-') {
                    out.push(Token { tok: Tok::Turnstile, line: l0, col: c0 });
                    advance(2, &mut i, &mut col);
                } else {
                    out.push(Token { tok: Tok::Colon, line: l0, col: c0 });
                    advance(1, &mut i, &mut col);
                }
            }
            '.' if chars.get(i + 1) == Some(&'.') => {
                out.push(Token { tok: Tok::DotDot, line: l0, col: c0 });
                advance(2, &mut i, &mut col);
            }
            '\'' | '"' => {
                let quote = c;
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != quote && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != quote {
                    return Err(err(l0, c0, "unterminated string literal".into()));
                }
                out.push(Token {
                    tok: Tok::Str(chars[start..j].iter().collect()),
                    line: l0,
                    col: c0,
                });
                let n = j + 1 - i;
                advance(n, &mut i, &mut col);
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                out.push(Token {
                    tok: Tok::Number(chars[i..j].iter().collect()),
                    line: l0,
                    col: c0,
                });
                let n = j - i;
                advance(n, &mut i, &mut col);
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                    j += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[i..j].iter().collect()),
                    line: l0,
                    col: c0,
                });
                let n = j - i;
                advance(n, &mut i, &mut col);
            }
            other => return Err(err(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, QueryError> {
        let t = self.peek();
        Err(QueryError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, QueryError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            self.fail(format!("expected {what}, found {}", describe(&self.peek().tok)))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), QueryError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.next()))
            }
            other => self.fail(format!("expected {what}, found {}", describe(other))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.at_keyword(kw) {
            self.next();
            Ok(())
        } else {
            self.fail(format!("expected `{kw}`, found {}", describe(&self.peek().tok)))
        }
    }

    fn skip_semis(&mut self) {
        while self.peek().tok == Tok::Semi {
            self.next();
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(s) => format!("number `{s}`"),
        Tok::Str(s) => format!("string '{s}'"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Turnstile => "`:-`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Plus => "`+`".into(),
        Tok::DotDot => "`..`".into(),
        Tok::Eof => "end of input".into(),
    }
}

enum HeadItem {
    All,
    Var(String, Token),
    Range(String, Token, String),
}

/// Splits `x12` into `("x", 12)`.
fn numbered(name: &str) -> Option<(&str, u64)> {
    let split = name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (prefix, digits) = name.split_at(split);
    Some((prefix, digits.parse().ok()?))
}

/// Parses a query file.
pub fn parse_query(text: &str) -> Result<ParsedQuery, QueryError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    if p.at_keyword("QUERY") {
        p.next();
    }
    let (name, _) = p.ident("query name")?;
    p.expect(Tok::LParen, "`(`")?;
    let mut head_items = Vec::new();
    if p.peek().tok != Tok::RParen {
        loop {
            if p.peek().tok == Tok::DotDot {
                p.next();
                head_items.push(HeadItem::All);
            } else {
                let (v, tok) = p.ident("head variable")?;
                if p.peek().tok == Tok::DotDot {
                    p.next();
                    let (end, _) = p.ident("end of variable range")?;
                    head_items.push(HeadItem::Range(v, tok, end));
                } else {
                    head_items.push(HeadItem::Var(v, tok));
                }
            }
            if p.peek().tok == Tok::Comma {
                p.next();
            } else {
                break;
            }
        }
    }
    p.expect(Tok::RParen, "`)`")?;
    p.expect(Tok::Turnstile, "`:-`")?;

    let mut builder = ConjunctiveQuery::builder(&name);
    let mut body_vars: Vec<String> = Vec::new();
    loop {
        let (rel, _) = p.ident("relation name")?;
        p.expect(Tok::LParen, "`(`")?;
        let mut terms = Vec::new();
        loop {
            let t = p.next();
            let term = match t.tok {
                Tok::Ident(v) => {
                    if !body_vars.contains(&v) {
                        body_vars.push(v.clone());
                    }
                    TermSpec::Var(v)
                }
                Tok::Number(n) => TermSpec::Const(if n.contains('.') {
                    Value::float(n.parse().expect("lexer produced a float literal"))
                } else {
                    match n.parse::<i64>() {
                        Ok(v) => Value::Int(v),
                        Err(_) => {
                            return Err(QueryError::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: format!("integer literal `{n}` out of range"),
                            })
                        }
                    }
                }),
                Tok::Str(s) => TermSpec::Const(Value::text(&s)),
                other => {
                    return Err(QueryError::Syntax {
                        line: t.line,
                        col: t.col,
                        msg: format!("expected a term, found {}", describe(&other)),
                    })
                }
            };
            terms.push(term);
            if p.peek().tok == Tok::Comma {
                p.next();
            } else {
                break;
            }
        }
        p.expect(Tok::RParen, "`)`")?;
        builder = builder.atom(&rel, terms);
        if p.peek().tok == Tok::Comma {
            p.next();
        } else {
            break;
        }
    }

    let mut head: Vec<String> = Vec::new();
    for item in head_items {
        match item {
            HeadItem::All => head.extend(body_vars.iter().cloned()),
            HeadItem::Var(v, tok) => {
                if !body_vars.contains(&v) {
                    return Err(QueryError::UnknownVariable {
                        name: v,
                        line: tok.line,
                        col: tok.col,
                    });
                }
                head.push(v);
            }
            HeadItem::Range(start, tok, end) => {
                let bad = |msg: String| QueryError::Syntax {
                    line: tok.line,
                    col: tok.col,
                    msg,
                };
                let (Some((pa, a)), Some((pb, b))) = (numbered(&start), numbered(&end)) else {
                    return Err(bad(format!("`{start}..{end}` is not a numbered range")));
                };
                if pa != pb || a > b {
                    return Err(bad(format!("`{start}..{end}` is not a numbered range")));
                }
                for i in a..=b {
                    let v = format!("{pa}{i}");
                    if !body_vars.contains(&v) {
                        return Err(QueryError::UnknownVariable {
                            name: v,
                            line: tok.line,
                            col: tok.col,
                        });
                    }
                    head.push(v);
                }
            }
        }
    }
    let query = builder
        .head(head.iter().map(String::as_str))
        .build()
        .expect("head variables were checked against the body");

    p.skip_semis();
    p.keyword("ORDER")?;
    p.keyword("BY")?;
    let var = |p: &mut Parser, what: &str| -> Result<usize, QueryError> {
        let (name, tok) = p.ident(what)?;
        query.var_id(&name).ok_or(QueryError::UnknownVariable {
            name,
            line: tok.line,
            col: tok.col,
        })
    };
    let ranking = if p.at_keyword("LEX") {
        p.next();
        let mut order = Vec::new();
        loop {
            let tok = p.peek().clone();
            let v = var(&mut p, "variable")?;
            if order.contains(&v) {
                return Err(QueryError::RepeatedLexVariable {
                    name: query.var_name(v).to_string(),
                    line: tok.line,
                    col: tok.col,
                });
            }
            order.push(v);
            if p.peek().tok == Tok::Comma {
                p.next();
            } else {
                break;
            }
        }
        RankingSpec::Lex {
            order,
            direction: direction(&mut p),
        }
    } else if p.at_keyword("SUM") || p.at_keyword("MAX") {
        let is_sum = p.at_keyword("SUM");
        p.next();
        let mut terms = Vec::new();
        loop {
            let weighted = matches!(&p.peek().tok, Tok::Ident(s) if s == "w")
                && p.toks.get(p.pos + 1).is_some_and(|t| t.tok == Tok::Colon);
            if weighted {
                p.next();
                p.next();
                let (table, _) = p.ident("weight table name")?;
                p.expect(Tok::LParen, "`(`")?;
                let v = var(&mut p, "variable")?;
                p.expect(Tok::RParen, "`)`")?;
                terms.push(WeightTerm {
                    var: v,
                    weight: TermWeight::Named(table),
                });
            } else {
                terms.push(WeightTerm::identity(var(&mut p, "variable or w:<table>(var)")?));
            }
            let sep_ok = p.peek().tok == Tok::Plus || (!is_sum && p.peek().tok == Tok::Comma);
            if sep_ok {
                p.next();
            } else {
                break;
            }
        }
        let direction = direction(&mut p);
        if is_sum {
            RankingSpec::Sum { terms, direction }
        } else {
            RankingSpec::MaxAgg { terms, direction }
        }
    } else if p.at_keyword("TUPLEWEIGHT") {
        p.next();
        RankingSpec::TupleWeightSum {
            direction: direction(&mut p),
        }
    } else {
        return p.fail("expected LEX, SUM, MAX or TUPLEWEIGHT");
    };
    p.skip_semis();
    if p.peek().tok != Tok::Eof {
        return p.fail(format!("unexpected {}", describe(&p.peek().tok)));
    }
    Ok(ParsedQuery { query, ranking })
}

fn direction(p: &mut Parser) -> Direction {
    if p.at_keyword("DESC") {
        p.next();
        Direction::Desc
    } else {
        if p.at_keyword("ASC") {
            p.next();
        }
        Direction::Asc
    }
}

/// Parses a query and checks it against a loaded database.
pub fn parse_query_for(text: &str, db: &Database) -> Result<ParsedQuery, QueryError> {
    let parsed = parse_query(text)?;
    parsed.check_schema(db)?;
    Ok(parsed)
}

/// Resolves `w:<table>` references with already loaded tables.
pub fn attach_tables(
    parsed: &mut ParsedQuery,
    tables: &HashMap<String, std::sync::Arc<HashMap<Value, f64>>>,
) -> Result<(), QueryError> {
    parsed.ranking.resolve_tables(tables)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::relation::Relation;

    #[test]
    fn four_atom_lex_query() {
        let p = parse_query("Q(x1..x5) :- R(x1,x2), S(x1,x3), T(x2,x4), U(x4,x5) ORDER BY LEX x1,x2,x3,x4,x5")
            .unwrap();
        assert_eq!(p.query.len(), 4);
        assert_eq!(p.query.head, vec![0, 1, 2, 3, 4]);
        assert_eq!(p.ranking, RankingSpec::lex(vec![0, 1, 2, 3, 4]));
    }

    #[test]
    fn single_atom_query() {
        let p = parse_query("Q(x) :- R(x) ORDER BY LEX x").unwrap();
        assert_eq!(p.query.len(), 1);
        assert_eq!(p.ranking, RankingSpec::lex(vec![0]));
    }

    #[test]
    fn self_join_sum_query() {
        let p = parse_query(
            "Q(..) :- Cit(p1,p2,s1), Cit(p2,p3,s2), Cit(p3,p4,s3) ORDER BY SUM s1+s2+s3",
        )
        .unwrap();
        assert_eq!(p.query.len(), 3);
        assert!(p.query.atoms.iter().all(|a| a.relation == "Cit"));
        assert!(p.query.is_join_query());
        let s = |n| p.query.var_id(n).unwrap();
        assert_eq!(p.ranking, RankingSpec::sum_of([s("s1"), s("s2"), s("s3")]));
    }

    #[test]
    fn full_grammar_with_keywords_and_tables() {
        let text = "QUERY Q(a, b) :- R(a, 'x', b), S(b, -2.5) ;\nORDER BY SUM a + w:score(b) DESC ;\n";
        let p = parse_query(text).unwrap();
        assert_eq!(p.ranking.direction(), Direction::Desc);
        assert_eq!(p.weight_tables(), vec!["score".to_string()]);
        assert_eq!(p.query.to_string(), "Q(a,b) :- R(a,'x',b), S(b,-2.5)");
    }

    #[test]
    fn max_and_tupleweight() {
        let p = parse_query("Q(a,b) :- R(a,b); ORDER BY MAX a, b").unwrap();
        assert!(matches!(p.ranking, RankingSpec::MaxAgg { ref terms, .. } if terms.len() == 2));
        let p = parse_query("Q(a) :- R(a) ORDER BY TUPLEWEIGHT DESC").unwrap();
        assert_eq!(p.ranking, RankingSpec::TupleWeightSum { direction: Direction::Desc });
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_query("Q(x) :- R(x\nORDER BY LEX x").unwrap_err();
        assert_eq!(
            err,
            QueryError::Syntax {
                line: 2,
                col: 1,
                msg: "expected `)`, found `ORDER`".into()
            }
        );
    }

    #[test]
    fn unknown_order_variable() {
        let err = parse_query("Q(x) :- R(x)\nORDER BY LEX y").unwrap_err();
        assert_eq!(
            err,
            QueryError::UnknownVariable {
                name: "y".into(),
                line: 2,
                col: 14
            }
        );
    }

    #[test]
    fn repeated_lex_variable() {
        assert!(matches!(
            parse_query("Q(x) :- R(x) ORDER BY LEX x, x"),
            Err(QueryError::RepeatedLexVariable { .. })
        ));
    }

    #[test]
    fn arity_checked_against_schema() {
        let db = Database::from_relations([Relation::from_ints("R", &[[1, 2]])]);
        let err = parse_query_for("Q(x) :- R(x) ORDER BY LEX x", &db).unwrap_err();
        assert!(matches!(err, QueryError::Schema(ModelError::ArityMismatch { .. })));
    }

    #[test]
    fn bad_range() {
        assert!(parse_query("Q(x1..y3) :- R(x1) ORDER BY LEX x1").is_err());
    }
}
