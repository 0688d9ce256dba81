//! Parser for the morphism expression syntax:
//!
//! ```text
//! expr  := ten (';' ten)*
//! ten   := atom ('*' atom)*
//! atom  := '(' expr ')' | NAME | graph '(' expr ')'
//!        | id[obj] | copy[obj] | del[obj] | swap[obj,obj] | pi1[obj,obj] | pi2[obj,obj]
//! obj   := '1' | SORT ('*' SORT)*
//! ```
//!
//! `;` is diagrammatic composition and `*` the monoidal product; both
//! associate to the left.

use crate::error::{Error, Result};
use crate::signature::Signature;
use crate::term::{Morphism, Object};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    sig: &'a Signature,
}

pub fn parse(src: &str, sig: &Signature) -> Result<Morphism> {
    let mut p = Parser { src, pos: 0, sig };
    let m = p.expr()?;
    p.skip_ws();
    if p.pos < src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(m)
}

/// Parses an object such as `A*B` or `1`.
pub fn parse_object(src: &str, sig: &Signature) -> Result<Object> {
    let mut p = Parser { src, pos: 0, sig };
    let o = p.object()?;
    p.skip_ws();
    if p.pos < src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(o)
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .take_while(|&(i, c)| c == '_' || c.is_alphanumeric() && (i > 0 || !c.is_ascii_digit()))
            .map(|(i, c)| i + c.len_utf8())
            .last()?;
        self.pos += len;
        Some(&rest[..len])
    }

    fn expr(&mut self) -> Result<Morphism> {
        let mut acc = self.ten()?;
        while self.eat(';') {
            let start = self.pos;
            let next = self.ten()?;
            acc = acc.then(&next).map_err(|e| match e {
                Error::TypeMismatch {
                    expected, found, ..
                } => Error::Parse {
                    pos: start,
                    msg: format!(
                        "cannot compose: left side has codomain {expected}, right side has domain {found}"
                    ),
                },
                other => other,
            })?;
        }
        Ok(acc)
    }

    fn ten(&mut self) -> Result<Morphism> {
        let mut acc = self.atom()?;
        while self.eat('*') {
            let next = self.atom()?;
            acc = acc.tensor(&next);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Morphism> {
        if self.eat('(') {
            let m = self.expr()?;
            self.expect(')')?;
            return Ok(m);
        }
        let start = self.pos;
        let name = self
            .ident()
            .ok_or_else(|| self.error("expected a morphism"))?;
        self.skip_ws();
        let bracket = self.rest().starts_with('[');
        match (name, bracket) {
            ("id", true) => self.one_object().map(|a| Morphism::id(&a)),
            ("copy", true) => self.one_object().map(|a| Morphism::copy(&a)),
            ("del", true) => self.one_object().map(|a| Morphism::delete(&a)),
            ("swap", true) => self.two_objects().map(|(a, b)| Morphism::swap(&a, &b)),
            ("pi1", true) => self.two_objects().map(|(a, b)| Morphism::proj1(&a, &b)),
            ("pi2", true) => self.two_objects().map(|(a, b)| Morphism::proj2(&a, &b)),
            ("graph", false) if self.rest().starts_with('(') => {
                self.expect('(')?;
                let f = self.expr()?;
                self.expect(')')?;
                Ok(Morphism::graph(&f))
            }
            (_, false) => self.sig.gen(name).map_err(|_| Error::Parse {
                pos: start,
                msg: format!("unknown generator `{name}`"),
            }),
            (_, true) => Err(Error::Parse {
                pos: start,
                msg: format!("unknown structural morphism `{name}`"),
            }),
        }
    }

    fn one_object(&mut self) -> Result<Object> {
        self.expect('[')?;
        let a = self.object()?;
        self.expect(']')?;
        Ok(a)
    }

    fn two_objects(&mut self) -> Result<(Object, Object)> {
        self.expect('[')?;
        let a = self.object()?;
        self.expect(',')?;
        let b = self.object()?;
        self.expect(']')?;
        Ok((a, b))
    }

    fn object(&mut self) -> Result<Object> {
        self.skip_ws();
        if self.rest().starts_with('1') {
            self.pos += 1;
            return Ok(Object::unit());
        }
        let mut sorts = Vec::new();
        loop {
            let start = self.pos;
            let name = self.ident().ok_or_else(|| self.error("expected a sort"))?;
            let s = self.sig.sort(name).map_err(|_| Error::Parse {
                pos: start,
                msg: format!("unknown sort `{name}`"),
            })?;
            sorts.push(s.id.clone());
            if !self.eat('*') {
                break;
            }
        }
        Ok(Object::new(sorts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::normalize;

    fn sig() -> Signature {
        let mut b = Signature::builder();
        b.finite_sort("A", 2).unwrap();
        b.finite_sort("B", 2).unwrap();
        b.table_fn("f", &["A"], &["B"], |t| vec![t[0]]).unwrap();
        b.table_fn("g", &["B"], &["A"], |t| vec![1 - t[0]]).unwrap();
        b.build()
    }

    #[test]
    fn parses_the_documented_forms() {
        let s = sig();
        for src in [
            "f ; g",
            "f * g",
            "copy[A]",
            "del[A]",
            "id[A*B]",
            "swap[A,B]",
            "pi1[A,B]",
            "pi2[A,B]",
            "graph(f)",
            "copy[A];(f*f)",
            "id[1]",
        ] {
            parse(src, &s).unwrap_or_else(|e| panic!("{src}: {e}"));
        }
    }

    #[test]
    fn display_parses_back() {
        let s = sig();
        for src in [
            "f ; g ; f",
            "f ; (g ; f)",
            "(f * g) * f",
            "f * (g * f)",
            "copy[A] ; (f ; g) * id[A]",
            "graph(f ; g)",
        ] {
            let m = parse(src, &s).unwrap();
            let again = parse(&m.to_string(), &s).unwrap();
            assert_eq!(m, again, "{src} printed as {m}");
        }
    }

    #[test]
    fn copy_naturality_via_syntax() {
        let s = sig();
        let lhs = parse("copy[A];(f*f)", &s).unwrap();
        let rhs = parse("f;copy[B]", &s).unwrap();
        assert_eq!(normalize(&lhs), normalize(&rhs));
    }

    #[test]
    fn reports_errors() {
        let s = sig();
        let e = parse("f ; f", &s).unwrap_err().to_string();
        assert!(e.contains("codomain B") && e.contains("domain A"), "{e}");
        assert!(matches!(parse("h", &s), Err(Error::Parse { pos: 0, .. })));
        assert!(parse("copy[Z]", &s).is_err());
        assert!(parse("f ;", &s).is_err());
        assert!(parse("(f", &s).is_err());
        assert!(parse("f g", &s).is_err());
    }
}
