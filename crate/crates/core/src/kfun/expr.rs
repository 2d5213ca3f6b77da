//! Text form of scalar functions.
//!
//! ```text
//! expr := comp { "+" comp }
//! comp := atom [ "o" comp ]            composition, right-associative, left operand outer
//! atom := "0" | "r" | NUM "*" "r" [ "^" NUM ] | "pl" "[" NUM ":" NUM { "," NUM ":" NUM } ";" NUM "]"
//!       | "(" expr ")" | "max" "(" expr { "," expr } ")" | "inv" "(" expr ")"
//! ```

use std::fmt;

use super::{Aggregation, ScalarFn};

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    /// Character offset into the parsed text.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
    pub message: Option<String>,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(m) = &self.message {
            return write!(f, "{m} at offset {}", self.offset);
        }
        write!(f, "expected {} but found {} at offset {}", self.expected.join(" or "), self.found, self.offset)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Word(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Word(w) => write!(f, "'{w}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
            Tok::End => f.write_str("end of expression"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let x = text.parse::<f64>().map_err(|_| ExprError {
                offset: start,
                expected: vec!["number".into()],
                found: format!("'{text}'"),
                message: None,
            })?;
            out.push((start, Tok::Num(x)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Word(chars[start..i].iter().collect())));
        } else if "+*^()[],:;".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ExprError {
                offset: i,
                expected: vec!["expression".into()],
                found: format!("'{c}'"),
                message: None,
            });
        }
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ExprError> {
        Err(ExprError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
            message: None,
        })
    }

    fn semantic<T>(&self, at: usize, e: crate::error::Error) -> Result<T, ExprError> {
        Err(ExprError { offset: at, expected: vec![], found: String::new(), message: Some(e.to_string()) })
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.fail(&[&format!("'{c}'")])
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn num(&mut self) -> Result<f64, ExprError> {
        match *self.peek() {
            Tok::Num(x) => {
                self.pos += 1;
                Ok(x)
            }
            _ => self.fail(&["number"]),
        }
    }

    fn expr(&mut self) -> Result<ScalarFn, ExprError> {
        let mut terms = vec![self.comp()?];
        while self.eat_sym('+') {
            terms.push(self.comp()?);
        }
        if terms.len() == 1 {
            return Ok(terms.pop().unwrap());
        }
        let class = if terms.iter().any(|f| f.class() == super::FnClass::KInf) {
            super::FnClass::KInf
        } else if terms.iter().all(|f| f.is_zero()) {
            super::FnClass::Zero
        } else {
            super::FnClass::K
        };
        Ok(ScalarFn::from_node(super::Node::Add(terms), class))
    }

    fn comp(&mut self) -> Result<ScalarFn, ExprError> {
        let outer = self.atom()?;
        if self.is_word("o") {
            self.pos += 1;
            let inner = self.comp()?;
            return Ok(raw_compose(outer, inner));
        }
        Ok(outer)
    }

    fn atom(&mut self) -> Result<ScalarFn, ExprError> {
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.pos += 1;
                if x == 0.0 && *self.peek() != Tok::Sym('*') {
                    return Ok(ScalarFn::zero());
                }
                self.expect_sym('*')?;
                if !self.is_word("r") {
                    return self.fail(&["'r'"]);
                }
                self.pos += 1;
                let made = if self.eat_sym('^') {
                    let e = self.num()?;
                    ScalarFn::power(x, e)
                } else {
                    ScalarFn::linear(x)
                };
                made.or_else(|e| self.semantic(at, e))
            }
            Tok::Word(w) if w == "r" => {
                self.pos += 1;
                Ok(ScalarFn::identity())
            }
            Tok::Word(w) if w == "pl" => {
                self.pos += 1;
                self.expect_sym('[')?;
                let mut knots = Vec::new();
                loop {
                    let r = self.num()?;
                    self.expect_sym(':')?;
                    let v = self.num()?;
                    knots.push((r, v));
                    if self.eat_sym(',') {
                        continue;
                    }
                    if self.eat_sym(';') {
                        break;
                    }
                    return self.fail(&["','", "';'"]);
                }
                let slope = self.num()?;
                self.expect_sym(']')?;
                ScalarFn::piecewise(knots, slope).or_else(|e| self.semantic(at, e))
            }
            Tok::Word(w) if w == "max" => {
                self.pos += 1;
                self.expect_sym('(')?;
                let mut cs = vec![self.expr()?];
                while self.eat_sym(',') {
                    cs.push(self.expr()?);
                }
                self.expect_sym(')')?;
                Ok(raw_combine(Aggregation::Max, cs))
            }
            Tok::Word(w) if w == "inv" => {
                self.pos += 1;
                self.expect_sym('(')?;
                let c = self.expr()?;
                self.expect_sym(')')?;
                if c.class() != super::FnClass::KInf {
                    return self
                        .semantic(at, crate::error::Error::Validation("inverse needs a K-infinity function".into()));
                }
                Ok(ScalarFn::from_node(super::Node::Inverse(c), super::FnClass::KInf))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            _ => self.fail(&["'0'", "'r'", "number", "'pl'", "'max'", "'inv'", "'('"]),
        }
    }
}

// The parser keeps the tree exactly as written so that printing reproduces the input.
fn raw_compose(outer: ScalarFn, inner: ScalarFn) -> ScalarFn {
    use super::FnClass::*;
    let class = match (outer.class(), inner.class()) {
        (Zero, _) | (_, Zero) => Zero,
        (KInf, KInf) => KInf,
        _ => K,
    };
    ScalarFn::from_node(super::Node::Compose(outer, inner), class)
}

fn raw_combine(mode: Aggregation, cs: Vec<ScalarFn>) -> ScalarFn {
    if cs.len() == 1 {
        return cs.into_iter().next().unwrap();
    }
    use super::FnClass::*;
    let class = if cs.iter().any(|f| f.class() == KInf) {
        KInf
    } else if cs.iter().all(|f| f.is_zero()) {
        Zero
    } else {
        K
    };
    let node = match mode {
        Aggregation::Sum => super::Node::Add(cs),
        Aggregation::Max => super::Node::Max(cs),
    };
    ScalarFn::from_node(node, class)
}

pub fn parse(src: &str) -> Result<ScalarFn, ExprError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let f = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&["'+'", "'o'", "end of expression"]);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_atoms() {
        assert!(parse("0").unwrap().is_zero());
        assert!(parse("r").unwrap().is_identity());
        assert_eq!(parse("0.9*r").unwrap().eval(2.0).unwrap(), 1.8);
        assert_eq!(parse("2*r^2").unwrap().eval(3.0).unwrap(), 18.0);
        assert_eq!(parse("pl[1:0.9, 2:1.4; 0.5]").unwrap().eval(4.0).unwrap(), 2.4);
        assert_eq!(parse("max(0.5*r, 1*r^2)").unwrap().eval(2.0).unwrap(), 4.0);
        assert!((parse("inv(0.9*r)").unwrap().eval(0.9).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn composition_binds_tighter_than_sum() {
        let f = parse("r + 2*r o 3*r").unwrap();
        assert_eq!(f.eval(1.0).unwrap(), 7.0);
        let g = parse("(r + 0.1*r) o 0.9*r").unwrap();
        assert!((g.eval(1.0).unwrap() - 0.99).abs() < 1e-15);
    }

    #[test]
    fn print_round_trip() {
        for s in [
            "0.9*r",
            "(r + 0.1*r) o 0.9*r",
            "max(0.5*r, 2*r^1.5) + inv(r + 3*r)",
            "pl[0.5:1, 2:3; 0.25]",
            "(2*r o 3*r) o 4*r",
            "2*r o 3*r o 4*r",
            "1e-7*r + 1e20*r",
        ] {
            let f = parse(s).unwrap();
            assert_eq!(f.to_string(), s);
            assert_eq!(parse(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn error_positions() {
        let e = parse("0.9*").unwrap_err();
        assert_eq!(e.offset, 4);
        assert_eq!(e.expected, vec!["'r'"]);
        let e = parse("max(r, ").unwrap_err();
        assert_eq!(e.offset, 7);
        let e = parse("-0.9*r").unwrap_err();
        assert_eq!(e.offset, 0);
        let e = parse("inv(pl[1:1; 0])").unwrap_err();
        assert!(e.message.is_some());
        let e = parse("r r").unwrap_err();
        assert_eq!(e.offset, 2);
    }
}
