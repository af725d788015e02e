//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := ("-")? power ;
//! power  := atom ("^" INTEGER)? ;
//! atom   := NUMBER | VAR | "(" expr ")" | FUNC "(" expr ")" ;
//! ```

use super::{BinaryOp, Expr, ExprError, UnaryOp};

/// Parses `source` as an expression over variables `x1..xn`.
pub fn parse(source: &str, n: usize) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        n,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinaryOp::Add,
                Some(b'-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinaryOp::Mul,
                Some(b'/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            let inner = self.power()?;
            Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        match self.peek() {
            Some(b'-') => Err(ExprError::NegativeExponent { offset: self.pos }),
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                let digits = self.digits();
                let k = std::str::from_utf8(digits)
                    .ok()
                    .and_then(|s| s.parse::<u32>().ok())
                    .ok_or(ExprError::Syntax {
                        offset: start,
                        message: "exponent too large".into(),
                    })?;
                Ok(Expr::Pow(Box::new(base), k))
            }
            _ => Err(self.syntax("expected a non-negative integer exponent")),
        }
    }

    fn digits(&mut self) -> &[u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b'x') if self.src.get(self.pos + 1).is_some_and(u8::is_ascii_digit) => {
                let start = self.pos;
                self.pos += 1;
                let index: usize = std::str::from_utf8(self.digits())
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(usize::MAX);
                if index == 0 || index > self.n {
                    return Err(ExprError::VariableIndex {
                        offset: start,
                        index,
                        n: self.n,
                    });
                }
                Ok(Expr::Var(index - 1))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let op = match &self.src[start..self.pos] {
                    b"sin" => UnaryOp::Sin,
                    b"cos" => UnaryOp::Cos,
                    b"exp" => UnaryOp::Exp,
                    b"log" => UnaryOp::Log,
                    b"sqrt" => UnaryOp::Sqrt,
                    _ => {
                        self.pos = start;
                        return Err(self.syntax("unknown identifier"));
                    }
                };
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::Unary(op, Box::new(arg)))
            }
            Some(_) => Err(self.syntax("expected a number, variable, function or `(`")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let int_len = self.digits().len();
        let mut frac_len = 0;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_len = self.digits().len();
        }
        if int_len + frac_len == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                self.pos = mark;
                return Err(self.syntax("malformed exponent in number"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Expr::Const)
            .ok_or(ExprError::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_constraint_tree() {
        let e = parse("x1^2 + (x2-1)^2 - 1", 2).unwrap();
        let sq = |a: Expr| Expr::Pow(Box::new(a), 2);
        let expected = Expr::Binary(
            BinaryOp::Sub,
            Box::new(Expr::Binary(
                BinaryOp::Add,
                Box::new(sq(Expr::Var(0))),
                Box::new(sq(Expr::Binary(BinaryOp::Sub, Box::new(Expr::Var(1)), Box::new(Expr::Const(1.0))))),
            )),
            Box::new(Expr::Const(1.0)),
        );
        assert_eq!(e, expected);
        assert_eq!(parse("x2", 2).unwrap(), Expr::Var(1));
    }

    #[test]
    fn variable_index_errors() {
        assert_eq!(parse("x0 + 1", 2), Err(ExprError::VariableIndex { offset: 0, index: 0, n: 2 }));
        assert!(matches!(
            parse("x1 * x3", 2),
            Err(ExprError::VariableIndex { offset: 5, index: 3, .. })
        ));
    }

    #[test]
    fn negative_exponent() {
        assert_eq!(parse("x1^-2", 1), Err(ExprError::NegativeExponent { offset: 3 }));
    }

    #[test]
    fn syntax_errors_report_offsets() {
        assert!(matches!(parse("x1 +", 1), Err(ExprError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("(x1", 1), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("tan(x1)", 1), Err(ExprError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("x1 x1", 1), Err(ExprError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1^2^2", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("--x1", 1), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("1e", 1), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn precedence_and_unary_minus() {
        // -x1^2 is -(x1^2); unary minus binds looser than ^ and tighter than *.
        assert_eq!(
            parse("-x1^2", 1).unwrap(),
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)))
        );
        let e = parse("2 * -x1 - 3 / x1", 1).unwrap();
        assert_eq!(super::super::evaluate(&e, &[2.0]).unwrap(), -5.5);
    }

    #[test]
    fn numbers() {
        for (src, v) in [("1.5", 1.5), ("1e-3", 1e-3), (".25", 0.25), ("3.", 3.0), ("2E+2", 200.0)] {
            assert_eq!(parse(src, 1).unwrap(), Expr::Const(v), "{src}");
        }
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse(" sin ( x1 ) ^ 2 ", 1).unwrap(), parse("sin(x1)^2", 1).unwrap());
    }
}
