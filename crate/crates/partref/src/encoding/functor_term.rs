//! The transition-type term language and its parser.
//!
//! Grammar (whitespace-separated tokens):
//!
//! ```text
//! term    := operand (op operand)*        op is `x` (product) or `+`
//!                                         (coproduct), not mixed
//! operand := P term' | B term' | D term' | Z term' | Q term' | term'
//! term'   := atom (^ NAME)*
//! atom    := X | NAME | ( term )
//! ```
//!
//! `X` is the argument (the state set), `P`/`B`/`D` are finite powerset, bag
//! and distribution, `Z`/`Q` are integer- and rational-weighted maps, `^`
//! builds exponents by a named finite set. Bare names refer to declared
//! alphabets or constant sets. The names `X P B D Z Q x` are reserved.

use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GroupKindTag {
    Int,
    Rat,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FunctorTerm {
    Argument,
    Const(String),
    Powerset(Box<FunctorTerm>),
    Bag(Box<FunctorTerm>),
    Dist(Box<FunctorTerm>),
    Group(GroupKindTag, Box<FunctorTerm>),
    Product(Vec<FunctorTerm>),
    Coproduct(Vec<FunctorTerm>),
    Exponent(Box<FunctorTerm>, String),
}

impl FunctorTerm {
    pub fn contains_argument(&self) -> bool {
        match self {
            FunctorTerm::Argument => true,
            FunctorTerm::Const(_) => false,
            FunctorTerm::Powerset(c)
            | FunctorTerm::Bag(c)
            | FunctorTerm::Dist(c)
            | FunctorTerm::Group(_, c)
            | FunctorTerm::Exponent(c, _) => c.contains_argument(),
            FunctorTerm::Product(cs) | FunctorTerm::Coproduct(cs) => {
                cs.iter().any(|c| c.contains_argument())
            }
        }
    }

    /// Names of all alphabets/constant sets the term mentions.
    pub fn set_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out.dedup();
        out
    }

    fn collect_names(&self, out: &mut Vec<String>) {
        match self {
            FunctorTerm::Argument => {}
            FunctorTerm::Const(n) => {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            FunctorTerm::Powerset(c)
            | FunctorTerm::Bag(c)
            | FunctorTerm::Dist(c)
            | FunctorTerm::Group(_, c) => c.collect_names(out),
            FunctorTerm::Exponent(c, n) => {
                c.collect_names(out);
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            FunctorTerm::Product(cs) | FunctorTerm::Coproduct(cs) => {
                for c in cs {
                    c.collect_names(out);
                }
            }
        }
    }
}

impl fmt::Display for FunctorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctorTerm::Argument => write!(f, "X"),
            FunctorTerm::Const(n) => write!(f, "{n}"),
            FunctorTerm::Powerset(c) => write!(f, "P {}", atom(c)),
            FunctorTerm::Bag(c) => write!(f, "B {}", atom(c)),
            FunctorTerm::Dist(c) => write!(f, "D {}", atom(c)),
            FunctorTerm::Group(GroupKindTag::Int, c) => write!(f, "Z {}", atom(c)),
            FunctorTerm::Group(GroupKindTag::Rat, c) => write!(f, "Q {}", atom(c)),
            FunctorTerm::Product(cs) => {
                write!(f, "(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " x ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            FunctorTerm::Coproduct(cs) => {
                write!(f, "(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            FunctorTerm::Exponent(c, n) => write!(f, "{}^{n}", atom(c)),
        }
    }
}

fn atom(t: &FunctorTerm) -> String {
    match t {
        FunctorTerm::Argument
        | FunctorTerm::Const(_)
        | FunctorTerm::Product(_)
        | FunctorTerm::Coproduct(_)
        | FunctorTerm::Exponent(..) => format!("{t}"),
        _ => format!("({t})"),
    }
}

/// Position-annotated syntax error; `col` is 1-based within the given text.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TermError {
    pub col: u32,
    pub msg: String,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tok<'a> {
    Word(&'a str),
    LParen,
    RParen,
    Caret,
    Plus,
    End,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn col(&self) -> u32 {
        self.pos as u32 + 1
    }

    fn peek(&mut self) -> Result<(Tok<'a>, u32), TermError> {
        let save = self.pos;
        let t = self.next()?;
        let at = (save + self.skipped_ws(save)) as u32 + 1;
        self.pos = save;
        Ok((t.0, at))
    }

    fn skipped_ws(&self, from: usize) -> usize {
        let mut i = from;
        while i < self.src.len() && self.src[i].is_ascii_whitespace() {
            i += 1;
        }
        i - from
    }

    fn next(&mut self) -> Result<(Tok<'a>, u32), TermError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let at = self.col();
        if self.pos >= self.src.len() {
            return Ok((Tok::End, at));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            _ if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Word(std::str::from_utf8(&self.src[start..self.pos]).unwrap())
            }
            _ => {
                return Err(TermError {
                    col: at,
                    msg: format!("unexpected character `{}`", c as char),
                })
            }
        };
        Ok((tok, at))
    }
}

/// Parses a transition-type term.
pub fn parse_functor_term(src: &str) -> Result<FunctorTerm, TermError> {
    let mut lex = Lexer::new(src);
    let term = parse_term(&mut lex)?;
    match lex.next()? {
        (Tok::End, _) => Ok(term),
        (_, col) => Err(TermError {
            col,
            msg: "trailing input after transition-type term".into(),
        }),
    }
}

fn parse_term(lex: &mut Lexer) -> Result<FunctorTerm, TermError> {
    let first = parse_operand(lex)?;
    let mut items = vec![first];
    let mut op: Option<bool> = None; // true = product, false = coproduct
    loop {
        let (tok, col) = lex.peek()?;
        let is_product = match tok {
            Tok::Word("x") => true,
            Tok::Plus => false,
            _ => break,
        };
        if let Some(prev) = op {
            if prev != is_product {
                return Err(TermError {
                    col,
                    msg: "cannot mix `x` and `+` without parentheses".into(),
                });
            }
        }
        op = Some(is_product);
        lex.next()?;
        items.push(parse_operand(lex)?);
    }
    Ok(match op {
        None => items.pop().unwrap(),
        Some(true) => FunctorTerm::Product(items),
        Some(false) => FunctorTerm::Coproduct(items),
    })
}

fn parse_operand(lex: &mut Lexer) -> Result<FunctorTerm, TermError> {
    let (tok, _) = lex.peek()?;
    if let Tok::Word(w) = tok {
        let ctor: Option<fn(Box<FunctorTerm>) -> FunctorTerm> = match w {
            "P" => Some(FunctorTerm::Powerset),
            "B" => Some(FunctorTerm::Bag),
            "D" => Some(FunctorTerm::Dist),
            "Z" => Some(|c| FunctorTerm::Group(GroupKindTag::Int, c)),
            "Q" => Some(|c| FunctorTerm::Group(GroupKindTag::Rat, c)),
            _ => None,
        };
        if let Some(ctor) = ctor {
            lex.next()?;
            let inner = parse_operand(lex)?;
            return Ok(ctor(Box::new(inner)));
        }
    }
    parse_postfix(lex)
}

fn parse_postfix(lex: &mut Lexer) -> Result<FunctorTerm, TermError> {
    let mut term = parse_atom(lex)?;
    loop {
        let (tok, _) = lex.peek()?;
        if tok != Tok::Caret {
            return Ok(term);
        }
        lex.next()?;
        match lex.next()? {
            (Tok::Word(name), col) => {
                if is_reserved(name) {
                    return Err(TermError {
                        col,
                        msg: format!("`{name}` is reserved and cannot name a set"),
                    });
                }
                term = FunctorTerm::Exponent(Box::new(term), name.to_string());
            }
            (_, col) => {
                return Err(TermError {
                    col,
                    msg: "expected a set name after `^`".into(),
                })
            }
        }
    }
}

fn parse_atom(lex: &mut Lexer) -> Result<FunctorTerm, TermError> {
    match lex.next()? {
        (Tok::Word("X"), _) => Ok(FunctorTerm::Argument),
        (Tok::Word(w), col) => {
            if is_reserved(w) {
                Err(TermError {
                    col,
                    msg: format!("`{w}` is reserved and cannot name a set"),
                })
            } else {
                Ok(FunctorTerm::Const(w.to_string()))
            }
        }
        (Tok::LParen, _) => {
            let inner = parse_term(lex)?;
            match lex.next()? {
                (Tok::RParen, _) => Ok(inner),
                (_, col) => Err(TermError {
                    col,
                    msg: "expected `)`".into(),
                }),
            }
        }
        (Tok::End, col) => Err(TermError {
            col,
            msg: "unexpected end of transition-type term".into(),
        }),
        (_, col) => Err(TermError {
            col,
            msg: "expected a transition-type term".into(),
        }),
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "X" | "P" | "B" | "D" | "Z" | "Q" | "x")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_powerset() {
        assert_eq!(
            parse_functor_term("P X").unwrap(),
            FunctorTerm::Powerset(Box::new(FunctorTerm::Argument))
        );
    }

    #[test]
    fn segala_shape() {
        // sets of distributions over labelled states
        let t = parse_functor_term("P (D (A x X))").unwrap();
        assert_eq!(
            t,
            FunctorTerm::Powerset(Box::new(FunctorTerm::Dist(Box::new(FunctorTerm::Product(
                vec![FunctorTerm::Const("A".into()), FunctorTerm::Argument]
            )))))
        );
    }

    #[test]
    fn dfa_shape() {
        let t = parse_functor_term("(2 x X^A)").unwrap();
        assert_eq!(
            t,
            FunctorTerm::Product(vec![
                FunctorTerm::Const("2".into()),
                FunctorTerm::Exponent(Box::new(FunctorTerm::Argument), "A".into())
            ])
        );
    }

    #[test]
    fn unparenthesized_chain() {
        let t = parse_functor_term("P X x P X").unwrap();
        match t {
            FunctorTerm::Product(cs) => assert_eq!(cs.len(), 2),
            _ => panic!("expected a product"),
        }
    }

    #[test]
    fn errors_are_positioned() {
        assert!(parse_functor_term("").is_err());
        let e = parse_functor_term("P (X").unwrap_err();
        assert_eq!(e.col, 5);
        assert!(parse_functor_term("(X x X + X)").is_err());
        assert!(parse_functor_term("P ?").is_err());
    }

    #[test]
    fn display_roundtrips() {
        for src in ["P X", "P (D (A x X))", "(2 x X^A)", "(D X + P (A x X))"] {
            let t = parse_functor_term(src).unwrap();
            let back = parse_functor_term(&t.to_string()).unwrap();
            assert_eq!(t, back);
        }
    }
}
