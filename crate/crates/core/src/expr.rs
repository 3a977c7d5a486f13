//! Residual functions as computational graphs.
//!
//! A residual component `f_i(z, p)` is parsed from an infix expression over
//! state variables `z1..z{n_z}`, parameters `p1..p{n_p}`, the operators
//! `+ - * / ^` (integer exponents only), `exp(...)`, parentheses, and decimal
//! literals. Graphs are flat, topologically ordered node lists over a closed
//! opcode set, so every downstream evaluation lane (real, interval, McCormick)
//! can be total by construction. Graphs are immutable after construction and
//! all evaluation routines are pure.

use std::fmt;

/// One node of a computational graph. Operand fields are indices of earlier
/// nodes in the same graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Const(f64),
    /// State variable `z{k+1}` (zero-based index).
    VarZ(usize),
    /// Parameter `p{k+1}` (zero-based index).
    VarP(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Exp(usize),
    /// Integer power; the exponent may be negative.
    PowInt(usize, i32),
}

/// A residual component as a topologically ordered node list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprGraph {
    nodes: Vec<Node>,
    n_z: usize,
    n_p: usize,
    root: usize,
}

/// Evaluation failure at a concrete point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalError {
    DivisionByZero,
    /// A node produced a non-finite value (e.g. `exp` overflow).
    Overflow,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => write!(f, "division by zero"),
            EvalError::Overflow => write!(f, "overflow: evaluation produced a non-finite value"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Parse failure with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    /// A token that cannot start or continue the current production.
    UnexpectedToken(String),
    UnknownIdentifier(String),
    NonIntegerExponent,
    MalformedNumber,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: ", self.position)?;
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of expression"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token `{t}`"),
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}`"),
            ParseErrorKind::NonIntegerExponent => write!(f, "exponent must be an integer literal"),
            ParseErrorKind::MalformedNumber => write!(f, "malformed number literal"),
        }
    }
}

impl std::error::Error for ParseError {}

impl ExprGraph {
    /// Parse an infix expression into a graph over `n_z` state variables and
    /// `n_p` parameters.
    pub fn parse(text: &str, n_z: usize, n_p: usize) -> Result<Self, ParseError> {
        Parser::new(text, n_z, n_p).parse()
    }

    /// Build a graph from raw nodes. Panics unless the node list is
    /// topologically ordered with in-range operand and variable indices.
    /// Nodes unreachable from the root are pruned, so evaluation never
    /// touches dead subexpressions.
    pub fn from_nodes(nodes: Vec<Node>, n_z: usize, n_p: usize, root: usize) -> Self {
        assert!(root < nodes.len(), "root index out of range");
        for (i, node) in nodes.iter().enumerate() {
            let ok = match *node {
                Node::Const(_) => true,
                Node::VarZ(k) => k < n_z,
                Node::VarP(k) => k < n_p,
                Node::Neg(a) | Node::Exp(a) | Node::PowInt(a, _) => a < i,
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    a < i && b < i
                }
            };
            assert!(ok, "node {i} violates graph ordering or index bounds");
        }
        let mut reachable = vec![false; nodes.len()];
        reachable[root] = true;
        for i in (0..nodes.len()).rev() {
            if !reachable[i] {
                continue;
            }
            match nodes[i] {
                Node::Neg(a) | Node::Exp(a) | Node::PowInt(a, _) => reachable[a] = true,
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    reachable[a] = true;
                    reachable[b] = true;
                }
                _ => {}
            }
        }
        let mut remap = vec![usize::MAX; nodes.len()];
        let mut kept = Vec::with_capacity(nodes.len());
        for (i, node) in nodes.into_iter().enumerate() {
            if !reachable[i] {
                continue;
            }
            remap[i] = kept.len();
            kept.push(match node {
                Node::Neg(a) => Node::Neg(remap[a]),
                Node::Exp(a) => Node::Exp(remap[a]),
                Node::PowInt(a, m) => Node::PowInt(remap[a], m),
                Node::Add(a, b) => Node::Add(remap[a], remap[b]),
                Node::Sub(a, b) => Node::Sub(remap[a], remap[b]),
                Node::Mul(a, b) => Node::Mul(remap[a], remap[b]),
                Node::Div(a, b) => Node::Div(remap[a], remap[b]),
                leaf => leaf,
            });
        }
        ExprGraph { nodes: kept, n_z, n_p, root: remap[root] }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Evaluate the residual at a real point.
    pub fn eval_real(&self, z: &[f64], p: &[f64]) -> Result<f64, EvalError> {
        assert_eq!(z.len(), self.n_z, "state dimension mismatch");
        assert_eq!(p.len(), self.n_p, "parameter dimension mismatch");
        let mut vals: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match *node {
                Node::Const(c) => c,
                Node::VarZ(k) => z[k],
                Node::VarP(k) => p[k],
                Node::Neg(a) => -vals[a],
                Node::Add(a, b) => vals[a] + vals[b],
                Node::Sub(a, b) => vals[a] - vals[b],
                Node::Mul(a, b) => vals[a] * vals[b],
                Node::Div(a, b) => {
                    if vals[b] == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    vals[a] / vals[b]
                }
                Node::Exp(a) => vals[a].exp(),
                Node::PowInt(a, m) => {
                    if m < 0 && vals[a] == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    vals[a].powi(m)
                }
            };
            if !v.is_finite() {
                return Err(EvalError::Overflow);
            }
            vals.push(v);
        }
        Ok(vals[self.root])
    }

    /// Forward-mode tangent sweep: value and exact directional derivative of
    /// the residual at `(z, p)` along `(dz, dp)`.
    pub fn eval_tangent(
        &self,
        z: &[f64],
        p: &[f64],
        dz: &[f64],
        dp: &[f64],
    ) -> Result<(f64, f64), EvalError> {
        assert_eq!(z.len(), self.n_z, "state dimension mismatch");
        assert_eq!(p.len(), self.n_p, "parameter dimension mismatch");
        assert_eq!(dz.len(), self.n_z, "state direction dimension mismatch");
        assert_eq!(dp.len(), self.n_p, "parameter direction dimension mismatch");
        let mut vals: Vec<(f64, f64)> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let (v, d) = match *node {
                Node::Const(c) => (c, 0.0),
                Node::VarZ(k) => (z[k], dz[k]),
                Node::VarP(k) => (p[k], dp[k]),
                Node::Neg(a) => (-vals[a].0, -vals[a].1),
                Node::Add(a, b) => (vals[a].0 + vals[b].0, vals[a].1 + vals[b].1),
                Node::Sub(a, b) => (vals[a].0 - vals[b].0, vals[a].1 - vals[b].1),
                Node::Mul(a, b) => (
                    vals[a].0 * vals[b].0,
                    vals[a].1 * vals[b].0 + vals[a].0 * vals[b].1,
                ),
                Node::Div(a, b) => {
                    let (u, du) = vals[a];
                    let (w, dw) = vals[b];
                    if w == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    (u / w, (du * w - u * dw) / (w * w))
                }
                Node::Exp(a) => {
                    let e = vals[a].0.exp();
                    (e, e * vals[a].1)
                }
                Node::PowInt(a, m) => {
                    let (u, du) = vals[a];
                    if m < 0 && u == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    if m == 0 {
                        (1.0, 0.0)
                    } else {
                        (u.powi(m), f64::from(m) * u.powi(m - 1) * du)
                    }
                }
            };
            if !v.is_finite() || !d.is_finite() {
                return Err(EvalError::Overflow);
            }
            vals.push((v, d));
        }
        Ok(vals[self.root])
    }

    /// Canonical textual form: fully parenthesized infix. Re-parsing the
    /// output yields a graph with identical values at every point.
    pub fn print_canonical(&self) -> String {
        fn rec(g: &ExprGraph, i: usize, out: &mut String) {
            match g.nodes[i] {
                Node::Const(c) => {
                    // parenthesized when negative: `^` binds tighter than
                    // unary minus, so a bare -c would reassociate
                    if c.is_sign_negative() {
                        out.push_str(&format!("({c})"));
                    } else {
                        out.push_str(&format!("{c}"));
                    }
                }
                Node::VarZ(k) => out.push_str(&format!("z{}", k + 1)),
                Node::VarP(k) => out.push_str(&format!("p{}", k + 1)),
                Node::Neg(a) => {
                    out.push_str("(-");
                    rec(g, a, out);
                    out.push(')');
                }
                Node::Add(a, b) => binary(g, a, b, '+', out),
                Node::Sub(a, b) => binary(g, a, b, '-', out),
                Node::Mul(a, b) => binary(g, a, b, '*', out),
                Node::Div(a, b) => binary(g, a, b, '/', out),
                Node::Exp(a) => {
                    out.push_str("exp(");
                    rec(g, a, out);
                    out.push(')');
                }
                Node::PowInt(a, m) => {
                    out.push('(');
                    rec(g, a, out);
                    out.push_str(&format!(" ^ {m})"));
                }
            }
        }
        fn binary(g: &ExprGraph, a: usize, b: usize, op: char, out: &mut String) {
            out.push('(');
            rec(g, a, out);
            out.push(' ');
            out.push(op);
            out.push(' ');
            rec(g, b, out);
            out.push(')');
        }
        let mut out = String::new();
        rec(self, self.root, &mut out);
        out
    }
}

// ---------------------------------------------------------------------------
// Parser: hand-rolled recursive descent with byte positions.
//
// expr   := term (('+'|'-') term)*
// term   := unary (('*'|'/') unary)*
// unary  := '-' unary | power
// power  := atom ('^' ['-'] integer)?
// atom   := number | ident | '(' expr ')' | 'exp' '(' expr ')'
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    n_z: usize,
    n_p: usize,
    nodes: Vec<Node>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, n_z: usize, n_p: usize) -> Self {
        Parser { text, tokens: Vec::new(), pos: 0, n_z, n_p, nodes: Vec::new() }
    }

    fn parse(mut self) -> Result<ExprGraph, ParseError> {
        self.tokenize()?;
        let root = self.parse_expr()?;
        if self.pos < self.tokens.len() {
            let (tok, at) = &self.tokens[self.pos];
            return Err(ParseError {
                position: *at,
                kind: ParseErrorKind::UnexpectedToken(token_text(tok)),
            });
        }
        Ok(ExprGraph { nodes: self.nodes, n_z: self.n_z, n_p: self.n_p, root })
    }

    fn tokenize(&mut self) -> Result<(), ParseError> {
        let bytes = self.text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' => {
                    self.tokens.push((Tok::Plus, i));
                    i += 1;
                }
                '-' => {
                    self.tokens.push((Tok::Minus, i));
                    i += 1;
                }
                '*' => {
                    self.tokens.push((Tok::Star, i));
                    i += 1;
                }
                '/' => {
                    self.tokens.push((Tok::Slash, i));
                    i += 1;
                }
                '^' => {
                    self.tokens.push((Tok::Caret, i));
                    i += 1;
                }
                '(' => {
                    self.tokens.push((Tok::LParen, i));
                    i += 1;
                }
                ')' => {
                    self.tokens.push((Tok::RParen, i));
                    i += 1;
                }
                '0'..='9' | '.' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                        i += 1;
                    }
                    // Optional exponent part of a scientific literal.
                    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                            j += 1;
                        }
                        if j < bytes.len() && bytes[j].is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && bytes[i].is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let lit = &self.text[start..i];
                    let v: f64 = lit.parse().map_err(|_| ParseError {
                        position: start,
                        kind: ParseErrorKind::MalformedNumber,
                    })?;
                    self.tokens.push((Tok::Num(v), start));
                }
                'a'..='z' | 'A'..='Z' | '_' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    self.tokens.push((Tok::Ident(self.text[start..i].to_string()), start));
                }
                other => {
                    return Err(ParseError {
                        position: i,
                        kind: ParseErrorKind::UnexpectedChar(other),
                    })
                }
            }
        }
        Ok(())
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, at)| *at)
            .unwrap_or(self.text.len())
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        let at = self.here();
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(ParseError { position: at, kind: ParseErrorKind::UnexpectedToken(token_text(&t)) }),
            None => Err(ParseError { position: at, kind: ParseErrorKind::UnexpectedEnd }),
        }
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn parse_expr(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = self.push(Node::Add(lhs, rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = self.push(Node::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = self.push(Node::Mul(lhs, rhs));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = self.push(Node::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<usize, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(self.push(Node::Neg(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<usize, ParseError> {
        let base = self.parse_atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let negative = if matches!(self.peek(), Some(Tok::Minus)) {
                self.pos += 1;
                true
            } else {
                false
            };
            let at = self.here();
            match self.bump() {
                Some(Tok::Num(v)) => {
                    if v.fract() != 0.0 || v.abs() > f64::from(i32::MAX) {
                        return Err(ParseError { position: at, kind: ParseErrorKind::NonIntegerExponent });
                    }
                    let m = v as i32;
                    let m = if negative { -m } else { m };
                    Ok(self.push(Node::PowInt(base, m)))
                }
                Some(t) => Err(ParseError { position: at, kind: ParseErrorKind::UnexpectedToken(token_text(&t)) }),
                None => Err(ParseError { position: at, kind: ParseErrorKind::UnexpectedEnd }),
            }
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<usize, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(self.push(Node::Const(v))),
            Some(Tok::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(id)) => {
                if id == "exp" {
                    self.expect(Tok::LParen)?;
                    let inner = self.parse_expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(self.push(Node::Exp(inner)));
                }
                let node = parse_variable(&id, self.n_z, self.n_p).ok_or(ParseError {
                    position: at,
                    kind: ParseErrorKind::UnknownIdentifier(id.clone()),
                })?;
                Ok(self.push(node))
            }
            Some(t) => Err(ParseError { position: at, kind: ParseErrorKind::UnexpectedToken(token_text(&t)) }),
            None => Err(ParseError { position: at, kind: ParseErrorKind::UnexpectedEnd }),
        }
    }
}

fn parse_variable(id: &str, n_z: usize, n_p: usize) -> Option<Node> {
    let (head, digits) = id.split_at(1);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    if k == 0 {
        return None;
    }
    match head {
        "z" if k <= n_z => Some(Node::VarZ(k - 1)),
        "p" if k <= n_p => Some(Node::VarP(k - 1)),
        _ => None,
    }
}

fn token_text(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("{v}"),
        Tok::Ident(s) => s.clone(),
        Tok::Plus => "+".into(),
        Tok::Minus => "-".into(),
        Tok::Star => "*".into(),
        Tok::Slash => "/".into(),
        Tok::Caret => "^".into(),
        Tok::LParen => "(".into(),
        Tok::RParen => ")".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(text: &str, n_z: usize, n_p: usize) -> ExprGraph {
        ExprGraph::parse(text, n_z, n_p).unwrap()
    }

    #[test]
    fn parse_simple_difference() {
        let g = graph("z1 - p1", 1, 1);
        assert_eq!(g.nodes().len(), 3);
        assert!(matches!(g.nodes()[g.root()], Node::Sub(_, _)));
        assert_eq!(g.eval_real(&[2.0], &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn parse_exp_residual_shape() {
        let g = graph("exp(38*z1) - 1", 1, 0);
        assert!(g.nodes().iter().any(|n| matches!(n, Node::Exp(_))));
        let v = g.eval_real(&[0.1], &[]).unwrap();
        assert!((v - ((38.0f64 * 0.1).exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn reject_non_integer_exponent() {
        let err = ExprGraph::parse("z1 ^ 0.5", 1, 0).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonIntegerExponent);
        assert_eq!(err.position, 5);
    }

    #[test]
    fn reject_unknown_identifier() {
        let err = ExprGraph::parse("z1 + q3", 1, 0).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("q3".into()));
        // z-index beyond the declared count is also unknown in this problem
        let err = ExprGraph::parse("z2", 1, 0).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = ExprGraph::parse("z1 + * p1", 1, 1).unwrap_err();
        assert_eq!(err.position, 5);
    }

    #[test]
    fn negative_exponent_parses() {
        let g = graph("z1 ^ -2", 1, 0);
        assert!((g.eval_real(&[2.0], &[]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn van_der_waals_residual_value() {
        let g = graph(
            "(p1 + 3.610*1/(z1^2))*(z1 - 0.0429) - 0.0820574*p2",
            1,
            2,
        );
        let (v, p, t) = (17.67, 0.68, 274.27);
        let expected = (p + 3.610 / (v * v)) * (v - 0.0429) - 0.0820574 * t;
        assert!((g.eval_real(&[v], &[p, t]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let g = graph("z1/z1", 1, 0);
        assert_eq!(g.eval_real(&[0.0], &[]).unwrap_err(), EvalError::DivisionByZero);
    }

    #[test]
    fn exp_overflow_is_reported() {
        let g = graph("exp(z1)", 1, 0);
        assert_eq!(g.eval_real(&[1000.0], &[]).unwrap_err(), EvalError::Overflow);
    }

    #[test]
    fn tangent_square() {
        let g = graph("z1^2", 1, 0);
        let (v, d) = g.eval_tangent(&[3.0], &[], &[1.0], &[]).unwrap();
        assert_eq!(v, 9.0);
        assert_eq!(d, 6.0);
    }

    #[test]
    fn tangent_exp() {
        let g = graph("exp(z1)", 1, 0);
        let (v, d) = g.eval_tangent(&[0.0], &[], &[1.0], &[]).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(d, 1.0);
    }

    #[test]
    fn tangent_product_rule() {
        let g = graph("z1*p1", 1, 1);
        let (v, d) = g.eval_tangent(&[2.0], &[5.0], &[1.0], &[0.0]).unwrap();
        assert_eq!(v, 10.0);
        assert_eq!(d, 5.0);
    }

    #[test]
    #[allow(clippy::type_complexity)]
    fn tangent_matches_central_differences() {
        let cases: &[(&str, usize, usize, &[f64], &[f64])] = &[
            ("z1^2 + p1*z1", 1, 1, &[1.3], &[0.7]),
            ("exp(z1) - p1/z1", 1, 1, &[1.5], &[2.0]),
            ("(z1 - p1)*(z1 + p2) / (p1 + 2)", 1, 2, &[0.4], &[1.1, -0.3]),
            ("z1^3 - 2*z2 + z1*z2*p1", 2, 1, &[0.9, -1.2], &[0.5]),
        ];
        let h = 1e-6;
        for (text, n_z, n_p, z, p) in cases {
            let g = graph(text, *n_z, *n_p);
            for dir in 0..(n_z + n_p) {
                let mut dz = vec![0.0; *n_z];
                let mut dp = vec![0.0; *n_p];
                if dir < *n_z {
                    dz[dir] = 1.0;
                } else {
                    dp[dir - n_z] = 1.0;
                }
                let (_, d) = g.eval_tangent(z, p, &dz, &dp).unwrap();
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                let mut pp = p.to_vec();
                let mut pm = p.to_vec();
                if dir < *n_z {
                    zp[dir] += h;
                    zm[dir] -= h;
                } else {
                    pp[dir - n_z] += h;
                    pm[dir - n_z] -= h;
                }
                let fd =
                    (g.eval_real(&zp, &pp).unwrap() - g.eval_real(&zm, &pm).unwrap()) / (2.0 * h);
                assert!(
                    (fd - d).abs() <= 1e-6 * (1.0 + d.abs()),
                    "{text} dir {dir}: ad {d} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn canonical_print_reparses_to_same_values() {
        use rand::{Rng, SeedableRng};
        let texts: &[(&str, usize, usize)] = &[
            ("(p1 + 3.610*1/(z1^2))*(z1 - 0.0429) - 0.0820574*p2", 1, 2),
            ("-z1 + exp(p1*z1) - 1e-9", 1, 1),
            ("z1^3 / (p1 + 2.5) - z1 ^ -2", 1, 1),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (text, n_z, n_p) in texts {
            let g = graph(text, *n_z, *n_p);
            let printed = g.print_canonical();
            let g2 = ExprGraph::parse(&printed, *n_z, *n_p)
                .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
            for _ in 0..100 {
                let z: Vec<f64> = (0..*n_z).map(|_| rng.random_range(0.5..2.0)).collect();
                let p: Vec<f64> = (0..*n_p).map(|_| rng.random_range(0.5..2.0)).collect();
                let a = g.eval_real(&z, &p);
                let b = g2.eval_real(&z, &p);
                match (a, b) {
                    (Ok(x), Ok(y)) => assert_eq!(x.to_bits(), y.to_bits()),
                    (Err(e1), Err(e2)) => assert_eq!(e1, e2),
                    other => panic!("round-trip divergence: {other:?}"),
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn print_parse_round_trip_random_graphs(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Random graph over 2 states and 2 parameters, built bottom-up.
            let mut nodes = vec![
                Node::VarZ(0),
                Node::VarZ(1),
                Node::VarP(0),
                Node::VarP(1),
                Node::Const(rng.random_range(-3.0..3.0)),
            ];
            for _ in 0..12 {
                let n = nodes.len();
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                let node = match rng.random_range(0..8) {
                    0 => Node::Add(a, b),
                    1 => Node::Sub(a, b),
                    2 => Node::Mul(a, b),
                    3 => Node::Div(a, b),
                    4 => Node::Neg(a),
                    5 => Node::Exp(a),
                    6 => Node::PowInt(a, rng.random_range(-3..=4)),
                    _ => Node::Const(rng.random_range(-2.0..2.0)),
                };
                nodes.push(node);
            }
            let root = nodes.len() - 1;
            let g = ExprGraph::from_nodes(nodes, 2, 2, root);
            let printed = g.print_canonical();
            let g2 = ExprGraph::parse(&printed, 2, 2).expect("canonical form must reparse");
            for _ in 0..20 {
                let z: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
                let p: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
                match (g.eval_real(&z, &p), g2.eval_real(&z, &p)) {
                    (Ok(x), Ok(y)) => proptest::prop_assert_eq!(x.to_bits(), y.to_bits()),
                    (Err(e1), Err(e2)) => proptest::prop_assert_eq!(e1, e2),
                    other => panic!("round-trip divergence: {other:?}"),
                }
            }
        }
    }
}
