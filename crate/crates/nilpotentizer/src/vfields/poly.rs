use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Polynomial in `x0..x{n-1}` with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(c.into()))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, BigRational::one());
        p
    }

    pub fn monomial(exponents: Vec<u32>, c: BigRational) -> Self {
        let mut p = Self::zero(exponents.len());
        if !c.is_zero() {
            p.terms.insert(exponents, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.nvars != o.nvars {
            return Err(Error::DimensionMismatch(format!(
                "polynomials in {} and {} variables",
                self.nvars, o.nvars
            )));
        }
        Ok(())
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        let entry = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::from_int(self.nvars, 1);
        for _ in 0..k {
            out = out.mul(self).expect("same variables");
        }
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c * BigRational::from_integer(e[i].into()));
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mono: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * mono
            })
            .sum()
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        let mut s = BigRational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (&k, xi) in e.iter().zip(x) {
                for _ in 0..k {
                    m *= xi;
                }
            }
            s += m;
        }
        s
    }

    /// Parses `"x0^2*x1 - 3*x1"`-style expressions: `+ - * /` (division by constants
    /// only), non-negative integer powers, parentheses, decimals and integers.
    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        let mut p = Parser { s: text.as_bytes(), pos: 0, nvars };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            if !a.is_one() || e.iter().all(|&k| k == 0) {
                factors.push(if a.is_integer() { a.to_string() } else { format!("({a})") });
            }
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(format!("x{i}")),
                    _ => factors.push(format!("x{i}^{k}")),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?)?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.factor()?;
                    let c = match (d.terms.len(), d.terms.iter().next()) {
                        (1, Some((e, c))) if e.iter().all(|&k| k == 0) => c.clone(),
                        _ => return Err(Error::Parse { pos: at, msg: "division by a non-constant or zero".into() }),
                    };
                    acc = acc.scale(&c.recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Polynomial> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.factor()?.neg());
        }
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a non-negative integer exponent"));
            }
            let k: u32 = std::str::from_utf8(&self.s[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| Error::Parse { pos: start, msg: "exponent too large".into() })?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(self.err("expected variable index after 'x'"));
                }
                let i: usize = std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().unwrap_or(usize::MAX);
                if i >= self.nvars {
                    return Err(Error::Parse {
                        pos: start - 1,
                        msg: format!("variable x{i} out of range for {} variables", self.nvars),
                    });
                }
                Ok(Polynomial::var(self.nvars, i))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let int_part = std::str::from_utf8(&self.s[start..self.pos]).unwrap().to_string();
                let mut frac = String::new();
                if self.pos < self.s.len() && self.s[self.pos] == b'.' {
                    self.pos += 1;
                    let fs = self.pos;
                    while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    frac = std::str::from_utf8(&self.s[fs..self.pos]).unwrap().to_string();
                }
                if int_part.is_empty() && frac.is_empty() {
                    return Err(Error::Parse { pos: start, msg: "malformed number".into() });
                }
                let digits = format!("{int_part}{frac}");
                let num: BigInt = digits.parse().map_err(|_| Error::Parse { pos: start, msg: "malformed number".into() })?;
                let den = num_traits::pow(BigInt::from(10), frac.len());
                Ok(Polynomial::constant(self.nvars, BigRational::new(num, den)))
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Floating copy of a polynomial for fast evaluation.
#[derive(Clone, Debug, Default)]
pub struct FloatPoly {
    terms: Vec<(Vec<u32>, f64)>,
}

impl FloatPoly {
    pub fn from_terms(terms: Vec<(Vec<u32>, f64)>) -> Self {
        FloatPoly { terms: terms.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn from_exact(p: &Polynomial) -> Self {
        Self::from_terms(p.terms.iter().map(|(e, c)| (e.clone(), c.to_f64().unwrap_or(f64::NAN))).collect())
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (&k, &xi) in e.iter().zip(x) {
                if k > 0 {
                    m *= xi.powi(k as i32);
                }
            }
            s += m;
        }
        s
    }

    pub fn derivative(&self, i: usize) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(e, _)| e[i] > 0)
                .map(|(e, c)| {
                    let mut e2 = e.clone();
                    e2[i] -= 1;
                    (e2, c * e[i] as f64)
                })
                .collect(),
        )
    }

    /// `Σ c_k p_k`, merging equal monomials.
    pub fn combine(parts: &[(f64, &FloatPoly)]) -> Self {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (s, p) in parts {
            if *s == 0.0 {
                continue;
            }
            for (e, c) in &p.terms {
                *acc.entry(e.clone()).or_insert(0.0) += s * c;
            }
        }
        Self::from_terms(acc.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let p = Polynomial::parse("x0^2*x1 - 3*x1", 2).unwrap();
        assert_eq!(p.eval(&[2.0, 1.0]), 1.0);
        let q = Polynomial::parse(&p.to_string(), 2).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parse_decimals_and_division() {
        let p = Polynomial::parse("0.5*x0 + x0/2 - (x1)^0", 2).unwrap();
        assert_eq!(p, Polynomial::parse("x0 - 1", 2).unwrap());
    }

    #[test]
    fn parse_errors_report_position() {
        match Polynomial::parse("x0^", 1) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Polynomial::parse("x3", 2), Err(Error::Parse { pos: 0, .. })));
        assert!(Polynomial::parse("x0/x1", 2).is_err());
        assert!(Polynomial::parse("(x0", 1).is_err());
    }

    #[test]
    fn derivative_of_monomial() {
        let p = Polynomial::parse("3*x0^2*x1", 2).unwrap();
        assert_eq!(p.derivative(0), Polynomial::parse("6*x0*x1", 2).unwrap());
        assert!(p.derivative(1).derivative(1).is_zero());
    }
}
