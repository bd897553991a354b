//! `exists a b; forall y; matrix (a | y) & (b | !y);`

use crate::lexer::{Cursor, ParseError, Pos, Tok};
use crate::qbf::{Prop, Qbf2};

pub fn parse_qbf(text: &str) -> Result<Qbf2, ParseError> {
    let mut cur = Cursor::new(text)?;
    cur.expect_keyword("exists")?;
    let a = names(&mut cur)?;
    cur.expect_keyword("forall")?;
    let b = names(&mut cur)?;
    cur.expect_keyword("matrix")?;
    let all: Vec<&(String, Pos)> = a.iter().chain(&b).collect();
    for (i, (n, p)) in all.iter().enumerate() {
        if all[..i].iter().any(|(m, _)| m == n) {
            return Err(ParseError::new(*p, format!("`{n}` is declared twice")));
        }
    }
    let lookup = |n: &str| all.iter().position(|(m, _)| m == n);
    let matrix = or(&mut cur, &lookup)?;
    cur.expect_sym(";")?;
    cur.expect_eof()?;
    let strip = |v: Vec<(String, Pos)>| v.into_iter().map(|(n, _)| n).collect();
    Qbf2::new(strip(a), strip(b), matrix)
        .map_err(|e| ParseError::new(Pos { line: 1, col: 1 }, e.to_string()))
}

fn names(cur: &mut Cursor) -> Result<Vec<(String, Pos)>, ParseError> {
    let mut out = Vec::new();
    while let Tok::Ident(_) = cur.peek() {
        out.push(cur.expect_ident()?);
    }
    cur.expect_sym(";")?;
    Ok(out)
}

type Lookup<'a> = dyn Fn(&str) -> Option<usize> + 'a;

fn or(cur: &mut Cursor, lookup: &Lookup) -> Result<Prop, ParseError> {
    let mut lhs = and(cur, lookup)?;
    while cur.accept_sym("|") || cur.accept_sym("||") {
        lhs = Prop::or(lhs, and(cur, lookup)?);
    }
    Ok(lhs)
}

fn and(cur: &mut Cursor, lookup: &Lookup) -> Result<Prop, ParseError> {
    let mut lhs = unary(cur, lookup)?;
    while cur.accept_sym("&") || cur.accept_sym("&&") {
        lhs = Prop::and(lhs, unary(cur, lookup)?);
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor, lookup: &Lookup) -> Result<Prop, ParseError> {
    if cur.accept_sym("!") {
        return Ok(Prop::not(unary(cur, lookup)?));
    }
    if cur.accept_sym("(") {
        let p = or(cur, lookup)?;
        cur.expect_sym(")")?;
        return Ok(p);
    }
    let (n, pos) = cur.expect_ident()?;
    lookup(&n)
        .map(Prop::Var)
        .ok_or_else(|| ParseError::new(pos, format!("undeclared variable `{n}`")))
}
