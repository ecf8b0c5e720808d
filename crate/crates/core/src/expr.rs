//! Multivariate rational functions over the working field, plus the
//! expression grammar used to describe map coordinates: integers, `t`
//! (function fields only), variables x1..xN, `+ - * / ^` with integer
//! exponents, parentheses, unary minus; `^` binds tightest and is
//! right-associative. Hand-rolled recursive descent so parse errors carry
//! exact positions and expected-token sets.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::mulgroup::{FieldSpec, FieldValue, FpPoly, FpRatFun};

/// A multivariate polynomial with exact field coefficients; the zero
/// polynomial has no terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MPoly {
    field: FieldSpec,
    nvars: usize,
    terms: BTreeMap<Vec<u32>, FieldValue>,
}

impl MPoly {
    pub fn zero(field: FieldSpec, nvars: usize) -> Self {
        MPoly {
            field,
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(field: FieldSpec, nvars: usize, value: FieldValue) -> Self {
        let mut p = MPoly::zero(field, nvars);
        if !value.is_zero() {
            p.terms.insert(vec![0; nvars], value);
        }
        p
    }

    pub fn one(field: FieldSpec, nvars: usize) -> Self {
        MPoly::constant(field, nvars, field.one_value())
    }

    pub fn var(field: FieldSpec, nvars: usize, index: usize) -> Self {
        assert!(index < nvars);
        let mut exps = vec![0u32; nvars];
        exps[index] = 1;
        let mut p = MPoly::zero(field, nvars);
        p.terms.insert(exps, field.one_value());
        p
    }

    /// The coefficient generator t, available over function fields.
    pub fn t_gen(field: FieldSpec, nvars: usize) -> Result<Self> {
        match field {
            FieldSpec::FunctionField { p } => Ok(MPoly::constant(
                field,
                nvars,
                FieldValue::RationalFunction(FpRatFun::from_poly(FpPoly::t(p))),
            )),
            FieldSpec::Rationals => Err(Error::InvalidArgument(
                "t is only defined over function fields".into(),
            )),
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<FieldValue> {
        if self.terms.is_empty() {
            return Some(self.field.zero_value());
        }
        if self.terms.len() == 1 {
            let (exps, c) = self.terms.iter().next().unwrap();
            if exps.iter().all(|&e| e == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &FieldValue)> {
        self.terms.iter()
    }

    fn assert_compatible(&self, other: &MPoly) {
        assert_eq!(self.field, other.field, "mixed fields");
        assert_eq!(self.nvars, other.nvars, "mixed variable counts");
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        self.assert_compatible(other);
        let mut terms = self.terms.clone();
        for (exps, c) in &other.terms {
            match terms.get_mut(exps) {
                Some(cur) => {
                    let sum = cur.add(c);
                    if sum.is_zero() {
                        terms.remove(exps);
                    } else {
                        *cur = sum;
                    }
                }
                None => {
                    terms.insert(exps.clone(), c.clone());
                }
            }
        }
        MPoly {
            field: self.field,
            nvars: self.nvars,
            terms,
        }
    }

    pub fn neg(&self) -> MPoly {
        MPoly {
            field: self.field,
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        self.assert_compatible(other);
        let mut terms: BTreeMap<Vec<u32>, FieldValue> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let prod = ca.mul(cb);
                match terms.get_mut(&exps) {
                    Some(cur) => {
                        let sum = cur.add(&prod);
                        if sum.is_zero() {
                            terms.remove(&exps);
                        } else {
                            *cur = sum;
                        }
                    }
                    None => {
                        if !prod.is_zero() {
                            terms.insert(exps, prod);
                        }
                    }
                }
            }
        }
        MPoly {
            field: self.field,
            nvars: self.nvars,
            terms,
        }
    }

    pub fn scale(&self, c: &FieldValue) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.field, self.nvars);
        }
        MPoly {
            field: self.field,
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, v)| (e.clone(), v.mul(c)))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut acc = MPoly::one(self.field, self.nvars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn eval(&self, values: &[FieldValue]) -> FieldValue {
        assert_eq!(values.len(), self.nvars, "wrong number of point coordinates");
        let mut acc = self.field.zero_value();
        for (exps, c) in &self.terms {
            let mut term = c.clone();
            for (v, &e) in values.iter().zip(exps) {
                term = term.mul(&value_pow(v, e));
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Which variables actually occur.
    fn used_vars(&self) -> Vec<usize> {
        let mut used = vec![false; self.nvars];
        for exps in self.terms.keys() {
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    used[i] = true;
                }
            }
        }
        used.iter()
            .enumerate()
            .filter_map(|(i, &u)| u.then_some(i))
            .collect()
    }

    /// Dense univariate coefficients when only `var` occurs.
    fn to_univariate(&self, var: usize) -> Vec<FieldValue> {
        let deg = self
            .terms
            .keys()
            .map(|e| e[var] as usize)
            .max()
            .unwrap_or(0);
        let mut out = vec![self.field.zero_value(); deg + 1];
        for (exps, c) in &self.terms {
            out[exps[var] as usize] = c.clone();
        }
        out
    }

    fn from_univariate(field: FieldSpec, nvars: usize, var: usize, coeffs: &[FieldValue]) -> MPoly {
        let mut p = MPoly::zero(field, nvars);
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                let mut exps = vec![0u32; nvars];
                exps[var] = i as u32;
                p.terms.insert(exps, c.clone());
            }
        }
        p
    }

    /// Leading coefficient under the term order; None for zero.
    fn leading_coeff(&self) -> Option<&FieldValue> {
        self.terms.iter().next_back().map(|(_, c)| c)
    }
}

fn value_pow(v: &FieldValue, e: u32) -> FieldValue {
    let mut acc = v.field().one_value();
    let mut base = v.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    acc
}

fn upoly_trim(coeffs: &mut Vec<FieldValue>) {
    while coeffs.last().is_some_and(FieldValue::is_zero) {
        coeffs.pop();
    }
}

fn upoly_divrem(num: &[FieldValue], den: &[FieldValue]) -> (Vec<FieldValue>, Vec<FieldValue>) {
    let field = den.last().unwrap().field();
    let mut rem = num.to_vec();
    upoly_trim(&mut rem);
    let dd = den.len() - 1;
    if rem.len() <= dd {
        return (vec![], rem);
    }
    let lead = den.last().unwrap();
    let mut quot = vec![field.zero_value(); rem.len() - dd];
    for k in (0..rem.len() - dd).rev() {
        let c = rem[k + dd].div(lead).expect("nonzero leading coefficient");
        if c.is_zero() {
            continue;
        }
        quot[k] = c.clone();
        for (i, d) in den.iter().enumerate() {
            let delta = c.mul(d);
            rem[k + i] = rem[k + i].sub(&delta);
        }
    }
    upoly_trim(&mut rem);
    (quot, rem)
}

fn upoly_gcd(a: &[FieldValue], b: &[FieldValue]) -> Vec<FieldValue> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    upoly_trim(&mut x);
    upoly_trim(&mut y);
    while !y.is_empty() {
        let (_, r) = upoly_divrem(&x, &y);
        x = y;
        y = r;
    }
    // monic normalize
    if let Some(lead) = x.last().cloned() {
        for c in &mut x {
            *c = c.div(&lead).unwrap();
        }
    }
    x
}

/// A rational function num/den, kept normalized: nonzero denominator with
/// leading coefficient 1, and (when numerator and denominator involve at
/// most one common variable) reduced by their gcd.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFun {
    num: MPoly,
    den: MPoly,
}

impl RatFun {
    pub fn new(num: MPoly, den: MPoly) -> Result<Self> {
        num.assert_compatible(&den);
        if den.is_zero() {
            return Err(Error::InvalidArgument(
                "division by the zero polynomial".into(),
            ));
        }
        let field = num.field();
        let nvars = num.nvars();
        if num.is_zero() {
            return Ok(RatFun {
                num,
                den: MPoly::one(field, nvars),
            });
        }
        let mut num = num;
        let mut den = den;
        // gcd reduction for the effectively-univariate case
        let nu = num.used_vars();
        let du = den.used_vars();
        let shared: Option<usize> = match (nu.as_slice(), du.as_slice()) {
            ([], _) | (_, []) => du.first().or(nu.first()).copied(),
            ([a], [b]) if a == b => Some(*a),
            _ => None,
        };
        let reducible = nu.len() <= 1 && du.len() <= 1 && shared.is_some();
        if reducible {
            let var = shared.unwrap();
            let un = num.to_univariate(var);
            let ud = den.to_univariate(var);
            let g = upoly_gcd(&un, &ud);
            if g.len() > 1 {
                let (qn, rn) = upoly_divrem(&un, &g);
                let (qd, rd) = upoly_divrem(&ud, &g);
                debug_assert!(rn.is_empty() && rd.is_empty());
                num = MPoly::from_univariate(field, nvars, var, &qn);
                den = MPoly::from_univariate(field, nvars, var, &qd);
            }
        }
        // denominator leading coefficient 1
        let lead = den.leading_coeff().unwrap().clone();
        if !lead.is_one() {
            let inv = field.one_value().div(&lead)?;
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Ok(RatFun { num, den })
    }

    pub fn from_poly(p: MPoly) -> Self {
        let one = MPoly::one(p.field(), p.nvars());
        RatFun::new(p, one).expect("denominator one")
    }

    pub fn constant(field: FieldSpec, nvars: usize, v: FieldValue) -> Self {
        RatFun::from_poly(MPoly::constant(field, nvars, v))
    }

    pub fn num(&self) -> &MPoly {
        &self.num
    }

    pub fn den(&self) -> &MPoly {
        &self.den
    }

    pub fn field(&self) -> FieldSpec {
        self.num.field()
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_constant(&self) -> Option<FieldValue> {
        let d = self.den.as_constant()?;
        let n = self.num.as_constant()?;
        n.div(&d).ok()
    }

    pub fn add(&self, other: &RatFun) -> Result<RatFun> {
        RatFun::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &RatFun) -> Result<RatFun> {
        RatFun::new(
            self.num.mul(&other.den).sub(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn mul(&self, other: &RatFun) -> Result<RatFun> {
        RatFun::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn neg(&self) -> RatFun {
        RatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn div(&self, other: &RatFun) -> Result<RatFun> {
        RatFun::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn pow(&self, e: i64) -> Result<RatFun> {
        let mag = e.unsigned_abs().try_into().map_err(|_| {
            Error::ResourceBound("exponent too large".into())
        })?;
        let (num, den) = if e >= 0 {
            (self.num.pow(mag), self.den.pow(mag))
        } else {
            (self.den.pow(mag), self.num.pow(mag))
        };
        RatFun::new(num, den)
    }

    /// Exact evaluation; None when the denominator vanishes at the point.
    pub fn eval(&self, values: &[FieldValue]) -> Option<FieldValue> {
        let d = self.den.eval(values);
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(values).div(&d).expect("nonzero divisor"))
    }

    /// When this is c·x1^e1···xN^eN (monomial over monomial), the constant
    /// and the exponent vector.
    pub fn as_monomial(&self) -> Option<(FieldValue, Vec<i64>)> {
        if self.num.terms.len() != 1 || self.den.terms.len() != 1 {
            return None;
        }
        let (ne, nc) = self.num.terms.iter().next().unwrap();
        let (de, dc) = self.den.terms.iter().next().unwrap();
        let coeff = nc.div(dc).ok()?;
        let exps = ne
            .iter()
            .zip(de)
            .map(|(&a, &b)| a as i64 - b as i64)
            .collect();
        Some((coeff, exps))
    }
}

fn coeff_needs_parens(c: &FieldValue) -> bool {
    match c {
        FieldValue::Rational(q) => q.is_negative(),
        FieldValue::RationalFunction(r) => {
            !r.is_polynomial() || r.num().coeffs().iter().filter(|&&x| x != 0).count() > 1
        }
    }
}

fn fmt_mpoly(p: &MPoly, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    let mut first = true;
    for (exps, c) in p.terms.iter().rev() {
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        let monomial: Vec<String> = exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    format!("x{}", i + 1)
                } else {
                    format!("x{}^{}", i + 1, e)
                }
            })
            .collect();
        let coeff = if coeff_needs_parens(c) {
            format!("({c})")
        } else {
            format!("{c}")
        };
        if monomial.is_empty() {
            write!(f, "{coeff}")?;
        } else if c.is_one() {
            write!(f, "{}", monomial.join("*"))?;
        } else {
            write!(f, "{coeff}*{}", monomial.join("*"))?;
        }
    }
    Ok(())
}

impl std::fmt::Display for MPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt_mpoly(self, f)
    }
}

impl std::fmt::Display for RatFun {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den.as_constant().is_some_and(|c| c.is_one()) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Int(n) => format!("integer {n}"),
            Token::Ident(s) => format!("identifier '{s}'"),
            Token::Plus => "'+'".into(),
            Token::Minus => "'-'".into(),
            Token::Star => "'*'".into(),
            Token::Slash => "'/'".into(),
            Token::Caret => "'^'".into(),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::End => "end of input".into(),
        }
    }
}

fn tokenize(input: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((Token::Plus, i));
                i += 1;
            }
            '-' => {
                out.push((Token::Minus, i));
                i += 1;
            }
            '*' => {
                out.push((Token::Star, i));
                i += 1;
            }
            '/' => {
                out.push((Token::Slash, i));
                i += 1;
            }
            '^' => {
                out.push((Token::Caret, i));
                i += 1;
            }
            '(' => {
                out.push((Token::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Token::RParen, i));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigInt = input[start..i].parse().unwrap();
                out.push((Token::Int(n), start));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Token::Ident(input[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Parse {
                    position: i,
                    expected: "a number, identifier, operator or parenthesis".into(),
                    found: format!("'{c}'"),
                })
            }
        }
    }
    out.push((Token::End, bytes.len()));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    vars: &'a [String],
    field: FieldSpec,
    nvars: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn here(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Parse {
            position: self.here(),
            expected: expected.into(),
            found: self.peek().describe(),
        })
    }

    fn expect(&mut self, want: Token, expected: &str) -> Result<()> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            self.fail(expected)
        }
    }

    fn expr(&mut self) -> Result<RatFun> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Token::Plus => {
                    self.advance();
                    acc = acc.add(&self.term()?)?;
                }
                Token::Minus => {
                    self.advance();
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<RatFun> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Token::Star => {
                    self.advance();
                    acc = acc.mul(&self.unary()?)?;
                }
                Token::Slash => {
                    let at = self.here();
                    self.advance();
                    let rhs = self.unary()?;
                    acc = acc.div(&rhs).map_err(|_| Error::Parse {
                        position: at,
                        expected: "a nonzero denominator".into(),
                        found: "the zero polynomial".into(),
                    })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<RatFun> {
        if *self.peek() == Token::Minus {
            self.advance();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<RatFun> {
        let base = self.atom()?;
        if *self.peek() == Token::Caret {
            let at = self.here();
            self.advance();
            let e = self.exponent()?;
            let e = e.to_i64().ok_or_else(|| Error::Parse {
                position: at,
                expected: "a machine-size integer exponent".into(),
                found: format!("{e}"),
            })?;
            return base.pow(e).map_err(|_| Error::Parse {
                position: at,
                expected: "a nonzero base for a negative exponent".into(),
                found: "the zero polynomial".into(),
            });
        }
        Ok(base)
    }

    /// Integer-only exponent sub-grammar; right-associative via recursion.
    fn exponent(&mut self) -> Result<BigInt> {
        if *self.peek() == Token::Minus {
            self.advance();
            return Ok(-self.exponent()?);
        }
        let base = match self.advance() {
            Token::Int(n) => n,
            Token::LParen => {
                let inner = self.exponent()?;
                self.expect(Token::RParen, "')' closing the exponent")?;
                inner
            }
            other => {
                return Err(Error::Parse {
                    position: self.tokens[self.pos - 1].1,
                    expected: "an integer exponent".into(),
                    found: other.describe(),
                })
            }
        };
        if *self.peek() == Token::Caret {
            let at = self.here();
            self.advance();
            let e = self.exponent()?;
            let (base_u, e_u) = (base, e.to_u32().ok_or_else(|| Error::Parse {
                position: at,
                expected: "a small nonnegative tower exponent".into(),
                found: "a huge or negative exponent".into(),
            })?);
            return Ok(base_u.pow(e_u));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RatFun> {
        let at = self.here();
        match self.advance() {
            Token::Int(n) => Ok(RatFun::constant(
                self.field,
                self.nvars,
                self.field.value_from_bigint(&n),
            )),
            Token::Ident(name) => {
                if name == "t" {
                    let p = MPoly::t_gen(self.field, self.nvars).map_err(|_| Error::Parse {
                        position: at,
                        expected: "'t' only over a function field".into(),
                        found: "'t' over the rationals".into(),
                    })?;
                    return Ok(RatFun::from_poly(p));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(RatFun::from_poly(MPoly::var(self.field, self.nvars, i))),
                    None => Err(Error::Parse {
                        position: at,
                        expected: format!(
                            "one of the variables [{}]{}",
                            self.vars.join(", "),
                            if matches!(self.field, FieldSpec::FunctionField { .. }) {
                                " or 't'"
                            } else {
                                ""
                            }
                        ),
                        found: format!("identifier '{name}'"),
                    }),
                }
            }
            Token::LParen => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            other => Err(Error::Parse {
                position: at,
                expected: "a number, variable or '('".into(),
                found: other.describe(),
            }),
        }
    }
}

/// Parses an expression into an exact rational function in the named
/// variables over the given field.
pub fn parse_expression(input: &str, vars: &[String], field: FieldSpec) -> Result<RatFun> {
    let tokens = tokenize(input)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        vars,
        field,
        nvars: vars.len(),
    };
    let result = parser.expr()?;
    if *parser.peek() != Token::End {
        return parser.fail("end of input or an operator");
    }
    Ok(result)
}

/// Standard variable names x1..xN.
pub fn standard_vars(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}
