//! Prolog-style text for default theories.
//!
//! ```text
//! acceptable(A) :- safety(A,high), not ab0(A).
//! ab0(A) :- persons(A,'2').
//! ```
//!
//! Feature names become predicate names (lower-cased, non-alphanumerics
//! replaced by `_`). Values are written bare when they are plain atoms or
//! numbers and single-quoted otherwise.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::dataset::{Dataset, Polarity};
use crate::error::{Error, Result};
use crate::theory::{Abnormals, Clause, DefaultTheory, Head, Literal};

const VAR: &str = "A";

/// Predicate name for a feature or target label.
pub fn predicate_name(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    if !out.starts_with(|c: char| c.is_ascii_lowercase()) {
        out.insert(0, 'p');
    }
    out
}

fn is_plain_atom(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_plain_number(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

fn atom(value: &str) -> String {
    if is_plain_atom(value) || is_plain_number(value) {
        value.to_string()
    } else {
        let escaped = value.replace('\\', "\\\\").replace('\'', "\\'");
        format!("'{escaped}'")
    }
}

fn render_clause(out: &mut String, head: &str, clause: &Clause, data: &Dataset) {
    let mut body = Vec::with_capacity(clause.body.len());
    for lit in &clause.body {
        body.push(match *lit {
            Literal::Item { item, polarity } => {
                let it = &data.items[item];
                let test = format!("{}({VAR},{})", predicate_name(&it.feature), atom(&it.value));
                match polarity {
                    Polarity::Present => test,
                    Polarity::Absent => format!("not {test}"),
                }
            }
            Literal::NotAb(ab) => format!("not ab{ab}({VAR})"),
        });
    }
    let _ = writeln!(out, "{head}({VAR}) :- {}.", body.join(", "));
}

fn render_ab(
    out: &mut String,
    ab: usize,
    abnormals: &Abnormals,
    data: &Dataset,
    done: &mut BTreeSet<usize>,
) {
    if !done.insert(ab) {
        return;
    }
    let Some(clauses) = abnormals.get(&ab) else {
        return;
    };
    for c in clauses {
        render_clause(out, &format!("ab{ab}"), c, data);
    }
    for c in clauses {
        for r in c.ab_refs() {
            render_ab(out, r, abnormals, data, done);
        }
    }
}

/// Each default clause is followed by the abnormality clauses it (and they,
/// transitively) refer to.
pub fn render_theory(theory: &DefaultTheory, data: &Dataset) -> String {
    let mut out = String::new();
    let head = predicate_name(&theory.target_name);
    let mut done = BTreeSet::new();
    for c in &theory.defaults {
        render_clause(&mut out, &head, c, data);
        for r in c.ab_refs() {
            render_ab(&mut out, r, &theory.abnormals, data, &mut done);
        }
    }
    for &ab in theory.abnormals.keys() {
        render_ab(&mut out, ab, &theory.abnormals, data, &mut done);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Name(String),
    Var(String),
    Quoted(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Neck,
    Dot,
}

fn tokenize(line: &str) -> std::result::Result<Vec<Token>, String> {
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '%' => break,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '.' => {
                out.push(Token::Dot);
                i += 1;
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                out.push(Token::Neck);
                i += 2;
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated quoted atom".into()),
                        Some('\\') => {
                            let next = chars.get(i + 1).ok_or("dangling escape")?;
                            s.push(*next);
                            i += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Token::Quoted(s));
            }
            c if c.is_ascii_digit()
                || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) =>
            {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit)
                {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                out.push(Token::Number(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(if c.is_ascii_uppercase() || c == '_' {
                    Token::Var(word)
                } else {
                    Token::Name(word)
                });
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

/// `name(Var)` or `name(Var,value)`.
struct Atom {
    name: String,
    var: String,
    value: Option<String>,
}

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expect(&mut self, want: Token, what: &str) -> std::result::Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(format!("expected {what}, found {t:?}")),
            None => Err(format!("expected {what}, found end of line")),
        }
    }

    fn atom(&mut self) -> std::result::Result<Atom, String> {
        let name = match self.next() {
            Some(Token::Name(n)) => n,
            other => return Err(format!("expected a predicate name, found {other:?}")),
        };
        self.expect(Token::LParen, "`(`")?;
        let var = match self.next() {
            Some(Token::Var(v)) => v,
            other => return Err(format!("expected a variable, found {other:?}")),
        };
        let value = if self.peek() == Some(&Token::Comma) {
            self.next();
            Some(match self.next() {
                Some(Token::Name(v) | Token::Quoted(v) | Token::Number(v)) => v,
                other => return Err(format!("expected a value, found {other:?}")),
            })
        } else {
            None
        };
        self.expect(Token::RParen, "`)`")?;
        Ok(Atom { name, var, value })
    }
}

fn ab_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("ab")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Parses [`render_theory`] output against `data`'s item schema. Lines may
/// come in any order; `%` starts a comment.
pub fn parse_theory(text: &str, data: &Dataset) -> Result<DefaultTheory> {
    let mut lookup: HashMap<(String, &str), usize> = HashMap::new();
    let mut features: HashMap<String, &str> = HashMap::new();
    for (i, it) in data.items.iter().enumerate() {
        if it.polarity == Polarity::Present {
            lookup.insert((predicate_name(&it.feature), it.value.as_str()), i);
            features.insert(predicate_name(&it.feature), it.feature.as_str());
        }
    }

    let mut target: Option<String> = None;
    let mut theory = DefaultTheory::new("");
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let syntax = |message: String| Error::TheoryParse { line, message };
        let tokens = tokenize(raw).map_err(syntax)?;
        if tokens.is_empty() {
            continue;
        }
        let mut cur = Cursor { tokens, pos: 0 };
        let head = cur.atom().map_err(syntax)?;
        if head.value.is_some() {
            return Err(syntax(format!("head `{}` must be unary", head.name)));
        }
        cur.expect(Token::Neck, "`:-`").map_err(syntax)?;

        let mut body = Vec::new();
        loop {
            let negated = matches!(cur.peek(), Some(Token::Name(n)) if n == "not");
            if negated {
                cur.next();
            }
            let atom = cur.atom().map_err(syntax)?;
            if atom.var != head.var {
                return Err(syntax(format!(
                    "variable `{}` does not match head variable `{}`",
                    atom.var, head.var
                )));
            }
            let lit = match (&atom.value, ab_index(&atom.name)) {
                (None, Some(ab)) if negated => Literal::NotAb(ab),
                (None, _) => {
                    return Err(syntax(format!(
                        "`{}` must be a negated abnormality or a feature test with a value",
                        atom.name
                    )))
                }
                (Some(value), _) => {
                    let Some(&item) = lookup.get(&(atom.name.clone(), value.as_str())) else {
                        return Err(match features.get(&atom.name) {
                            Some(f) => Error::Schema(format!(
                                "line {line}: feature `{f}` has no value `{value}`"
                            )),
                            None => Error::Schema(format!(
                                "line {line}: unknown feature `{}`",
                                atom.name
                            )),
                        });
                    };
                    Literal::Item {
                        item,
                        polarity: if negated {
                            Polarity::Absent
                        } else {
                            Polarity::Present
                        },
                    }
                }
            };
            body.push(lit);
            match cur.next() {
                Some(Token::Comma) => continue,
                Some(Token::Dot) => break,
                other => return Err(syntax(format!("expected `,` or `.`, found {other:?}"))),
            }
        }
        if let Some(t) = cur.next() {
            return Err(syntax(format!("trailing input after `.`: {t:?}")));
        }

        match ab_index(&head.name) {
            Some(ab) => theory
                .abnormals
                .entry(ab)
                .or_default()
                .push(Clause::new(Head::Ab(ab), body)),
            None => {
                match &target {
                    Some(t) if *t != head.name => {
                        return Err(syntax(format!(
                            "second target predicate `{}` (first was `{t}`)",
                            head.name
                        )))
                    }
                    _ => target = Some(head.name.clone()),
                }
                theory.defaults.push(Clause::new(Head::Target, body));
            }
        }
    }
    theory.target_name = target.unwrap_or_default();
    theory.validate()?;
    Ok(theory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Item;

    fn schema() -> Dataset {
        let items = [
            ("persons", "2"),
            ("persons", "4"),
            ("maintenance", "very_high"),
            ("safety", "high"),
            ("safety", "medium"),
            ("max heart-rate", "[0,0.8)"),
            ("odd", "it's"),
        ]
        .iter()
        .map(|(f, v)| Item::present(*f, *v))
        .collect();
        Dataset {
            items,
            examples: vec![],
        }
    }

    const CARS: &str = "\
acceptable(A) :- safety(A,high), not ab0(A).
ab0(A) :- persons(A,2).
ab0(A) :- maintenance(A,very_high).
acceptable(A) :- persons(A,4), safety(A,medium).
";

    #[test]
    fn parses_and_renders_example_style() {
        let ds = schema();
        let theory = parse_theory(CARS, &ds).unwrap();
        assert_eq!(theory.target_name, "acceptable");
        assert_eq!(theory.defaults.len(), 2);
        assert_eq!(theory.abnormals[&0].len(), 2);
        assert_eq!(theory.clause_count(), 4);
        assert_eq!(render_theory(&theory, &ds), CARS);
    }

    #[test]
    fn quoting_and_absent_tests() {
        let ds = schema();
        let mut theory = DefaultTheory::new("Target Class");
        theory.defaults.push(Clause::new(
            Head::Target,
            vec![
                Literal::present(5),
                Literal::Item {
                    item: 6,
                    polarity: Polarity::Absent,
                },
            ],
        ));
        let text = render_theory(&theory, &ds);
        assert_eq!(
            text,
            "target_class(A) :- max_heart_rate(A,'[0,0.8)'), not odd(A,'it\\'s').\n"
        );
        let back = parse_theory(&text, &ds).unwrap();
        assert_eq!(back.defaults, theory.defaults);
    }

    #[test]
    fn errors_name_line_and_item() {
        let ds = schema();
        match parse_theory(
            "acceptable(A) :- safety(A,high).\nacceptable(A) :- safety(A,high)\n",
            &ds,
        ) {
            Err(Error::TheoryParse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_theory("acceptable(A) :- colour(A,red).\n", &ds) {
            Err(Error::Schema(msg)) => assert!(msg.contains("colour"), "{msg}"),
            other => panic!("{other:?}"),
        }
        match parse_theory("acceptable(A) :- safety(A,low).\n", &ds) {
            Err(Error::Schema(msg)) => assert!(msg.contains("low"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_theory("acceptable(A) :- safety(A,high), not ab1(A).\n", &ds),
            Err(Error::DanglingAbnormality(1))
        ));
        assert!(parse_theory("acceptable(A) :- safety(B,high).\n", &ds).is_err());
    }

    #[test]
    fn number_tokens() {
        assert!(
            is_plain_number("2.3")
                && is_plain_number("-1")
                && !is_plain_number("2.")
                && !is_plain_number("5_more")
        );
        assert_eq!(atom("5_more"), "'5_more'");
        assert_eq!(
            tokenize("f(A,2.3).").unwrap()[4],
            Token::Number("2.3".into())
        );
    }
}
