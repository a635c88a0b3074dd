//! Exact polynomials in `z_1..z_n, conj(z_1)..conj(z_n)` with complex rational
//! coefficients, formal Wirtinger derivatives, `δ_j`, and the Gaussian inner
//! product.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{
    coeff_conj, coeff_is_zero, coeff_to_c64, factorial, fmt_rational_compact, int, parse_rational,
    real, rpow, Coeff, Rational,
};
use crate::gaussian::WeightSequence;

/// Sparse exponent vector: `(coordinate, exponent)` pairs, coordinates
/// strictly increasing, exponents positive.
pub type Exponents = Vec<(usize, u32)>;

/// `z^α conj(z)^β`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pub z: Exponents,
    pub zb: Exponents,
}

fn exp_of(e: &Exponents, j: usize) -> u32 {
    e.binary_search_by_key(&j, |&(c, _)| c).map(|i| e[i].1).unwrap_or(0)
}

fn exp_add(e: &Exponents, j: usize, delta: i64) -> Exponents {
    let mut out = e.clone();
    match out.binary_search_by_key(&j, |&(c, _)| c) {
        Ok(i) => {
            let v = out[i].1 as i64 + delta;
            debug_assert!(v >= 0);
            if v == 0 {
                out.remove(i);
            } else {
                out[i].1 = v as u32;
            }
        }
        Err(i) => {
            debug_assert!(delta > 0);
            out.insert(i, (j, delta as u32));
        }
    }
    out
}

fn exp_merge(a: &Exponents, b: &Exponents) -> Exponents {
    let mut map: BTreeMap<usize, u32> = a.iter().copied().collect();
    for &(c, e) in b {
        *map.entry(c).or_default() += e;
    }
    map.into_iter().collect()
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn from_maps(z: BTreeMap<usize, u32>, zb: BTreeMap<usize, u32>) -> Self {
        Self {
            z: z.into_iter().filter(|&(_, e)| e > 0).collect(),
            zb: zb.into_iter().filter(|&(_, e)| e > 0).collect(),
        }
    }

    pub fn z_exp(&self, j: usize) -> u32 {
        exp_of(&self.z, j)
    }

    pub fn zb_exp(&self, j: usize) -> u32 {
        exp_of(&self.zb, j)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial { z: exp_merge(&self.z, &other.z), zb: exp_merge(&self.zb, &other.zb) }
    }

    pub fn conj(&self) -> Monomial {
        Monomial { z: self.zb.clone(), zb: self.z.clone() }
    }

    pub fn degree(&self) -> u32 {
        self.z.iter().chain(&self.zb).map(|&(_, e)| e).sum()
    }

    /// Coordinates with a nonzero exponent, ascending.
    pub fn coords(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.z.iter().chain(&self.zb).map(|&(j, _)| j).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn max_coord(&self) -> usize {
        self.coords().last().copied().unwrap_or(0)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (prefix, exps) in [("z", &self.z), ("zb", &self.zb)] {
            for &(j, e) in exps {
                if !first {
                    write!(f, " ")?;
                }
                first = false;
                write!(f, "{prefix}{j}")?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

/// A polynomial in canonical form: unique monomial keys, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolyFn {
    terms: BTreeMap<Monomial, Coeff>,
}

impl PolyFn {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::monomial(Monomial::one(), c)
    }

    pub fn monomial(m: Monomial, c: Coeff) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// `z_j`.
    pub fn z(j: usize) -> Self {
        Self::monomial(Monomial { z: vec![(j, 1)], zb: vec![] }, Coeff::one())
    }

    /// `conj(z_j)`.
    pub fn zb(j: usize) -> Self {
        Self::monomial(Monomial { z: vec![], zb: vec![(j, 1)] }, Coeff::one())
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Coeff)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c · m` in place, keeping the canonical form.
    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if coeff_is_zero(&c) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if coeff_is_zero(&sum) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_assign_scaled(&mut self, other: &PolyFn, c: &Coeff) {
        if coeff_is_zero(c) {
            return;
        }
        for (m, v) in &other.terms {
            self.add_term(m.clone(), v * c);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &PolyFn) -> PolyFn {
        let mut out = self.clone();
        out.add_assign_scaled(other, &Coeff::one());
        out
    }

    pub fn sub(&self, other: &PolyFn) -> PolyFn {
        let mut out = self.clone();
        out.add_assign_scaled(other, &-Coeff::one());
        out
    }

    pub fn neg(&self) -> PolyFn {
        self.scale(&-Coeff::one())
    }

    pub fn scale(&self, c: &Coeff) -> PolyFn {
        if coeff_is_zero(c) {
            return PolyFn::zero();
        }
        PolyFn { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn scale_real(&self, r: &Rational) -> PolyFn {
        self.scale(&real(r.clone()))
    }

    pub fn mul(&self, other: &PolyFn) -> PolyFn {
        let mut out = PolyFn::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    /// Pointwise complex conjugate: swaps `z` and `conj(z)` exponents and
    /// conjugates coefficients.
    pub fn conj(&self) -> PolyFn {
        PolyFn { terms: self.terms.iter().map(|(m, c)| (m.conj(), coeff_conj(c))).collect() }
    }

    /// `∂/∂z_j`.
    pub fn d_z(&self, j: usize) -> PolyFn {
        let mut out = PolyFn::zero();
        for (m, c) in &self.terms {
            let e = m.z_exp(j);
            if e > 0 {
                let dm = Monomial { z: exp_add(&m.z, j, -1), zb: m.zb.clone() };
                out.add_term(dm, c * real(int(e as i64)));
            }
        }
        out
    }

    /// `∂/∂conj(z_j)`.
    pub fn d_zbar(&self, j: usize) -> PolyFn {
        let mut out = PolyFn::zero();
        for (m, c) in &self.terms {
            let e = m.zb_exp(j);
            if e > 0 {
                let dm = Monomial { z: m.z.clone(), zb: exp_add(&m.zb, j, -1) };
                out.add_term(dm, c * real(int(e as i64)));
            }
        }
        out
    }

    /// Multiplication by `conj(z_j)`.
    pub fn mul_zb(&self, j: usize) -> PolyFn {
        PolyFn {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (Monomial { z: m.z.clone(), zb: exp_add(&m.zb, j, 1) }, c.clone()))
                .collect(),
        }
    }

    /// Multiplication by `z_j`.
    pub fn mul_z(&self, j: usize) -> PolyFn {
        PolyFn {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (Monomial { z: exp_add(&m.z, j, 1), zb: m.zb.clone() }, c.clone()))
                .collect(),
        }
    }

    /// `δ_j φ = ∂φ/∂z_j − conj(z_j) φ / (2 a_j^2)`.
    pub fn delta(&self, j: usize, w: &WeightSequence) -> Result<PolyFn> {
        let inv_sigma = Rational::one() / w.sigma(j)?;
        let mut out = self.d_z(j);
        out.add_assign_scaled(&self.mul_zb(j), &real(-inv_sigma));
        Ok(out)
    }

    pub fn max_coord(&self) -> usize {
        self.terms.keys().map(Monomial::max_coord).max().unwrap_or(0)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest `(z, conj z)` exponents of coordinate `j` over all terms.
    pub fn bidegree(&self, j: usize) -> (u32, u32) {
        self.terms
            .keys()
            .fold((0, 0), |(p, q), m| (p.max(m.z_exp(j)), q.max(m.zb_exp(j))))
    }

    /// Every term involves at most coordinate `j`.
    pub fn depends_only_on(&self, j: usize) -> bool {
        self.terms.keys().all(|m| m.coords().iter().all(|&c| c == j))
    }

    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(|m| m.zb.is_empty())
    }

    /// Conditional expectation onto `L^2(C^n)`: coordinates above `n` are
    /// integrated out against their Gaussian factors.
    pub fn project(&self, n: usize, w: &WeightSequence) -> Result<PolyFn> {
        let mut out = PolyFn::zero();
        for (m, c) in &self.terms {
            let mut factor = Rational::one();
            for j in m.coords().into_iter().filter(|&j| j > n) {
                let (p, q) = (m.z_exp(j), m.zb_exp(j));
                if p != q {
                    factor = Rational::zero();
                    break;
                }
                factor *= Rational::from_integer(factorial(p)) * rpow(&w.sigma(j)?, p);
            }
            if factor.is_zero() {
                continue;
            }
            let kept = Monomial {
                z: m.z.iter().copied().filter(|&(j, _)| j <= n).collect(),
                zb: m.zb.iter().copied().filter(|&(j, _)| j <= n).collect(),
            };
            out.add_term(kept, c * real(factor));
        }
        Ok(out)
    }

    /// Floating evaluation at `point` (`point[k]` is `z_{k+1}`).
    pub fn eval(&self, point: &[Complex64]) -> Result<Complex64> {
        let needed = self.max_coord();
        if needed > point.len() {
            return Err(Error::DimensionMismatch { needed, got: point.len() });
        }
        let mut acc = Complex64::zero();
        for (m, c) in &self.terms {
            let mut v = coeff_to_c64(c);
            for &(j, e) in &m.z {
                v *= point[j - 1].powu(e);
            }
            for &(j, e) in &m.zb {
                v *= point[j - 1].conj().powu(e);
            }
            acc += v;
        }
        Ok(acc)
    }
}

/// `∫ z^α conj(z)^β · conj(z^γ conj(z)^δ) dN`.
fn monomial_pairing(a: &Monomial, b: &Monomial, w: &WeightSequence) -> Result<Rational> {
    let mut coords = a.coords();
    coords.extend(b.coords());
    coords.sort_unstable();
    coords.dedup();
    let mut acc = Rational::one();
    for j in coords {
        let holo = a.z_exp(j) + b.zb_exp(j);
        let anti = a.zb_exp(j) + b.z_exp(j);
        if holo != anti {
            return Ok(Rational::zero());
        }
        acc *= Rational::from_integer(factorial(holo)) * rpow(&w.sigma(j)?, holo);
    }
    Ok(acc)
}

/// `⟨f, g⟩ = ∫ f conj(g) dN`, conjugate-linear in `g`.
pub fn inner(f: &PolyFn, g: &PolyFn, w: &WeightSequence) -> Result<Coeff> {
    w.ensure_dim(f.max_coord().max(g.max_coord()))?;
    let mut acc = Coeff::zero();
    for (m1, c1) in &f.terms {
        for (m2, c2) in &g.terms {
            let v = monomial_pairing(m1, m2, w)?;
            if !v.is_zero() {
                acc += c1 * coeff_conj(c2) * real(v);
            }
        }
    }
    Ok(acc)
}

/// `⟨f, f⟩` as an exact nonnegative rational.
pub fn norm_sq(f: &PolyFn, w: &WeightSequence) -> Result<Rational> {
    Ok(inner(f, f, w)?.re)
}

fn fmt_coeff_factor(c: &Coeff) -> String {
    if c.im.is_zero() {
        fmt_rational_compact(&c.re)
    } else if c.re.is_zero() {
        format!("({}i)", fmt_rational_compact(&c.im))
    } else {
        let sign = if c.im < Rational::zero() { "-" } else { "+" };
        let im = if c.im < Rational::zero() { -c.im.clone() } else { c.im.clone() };
        format!("({}{}{}i)", fmt_rational_compact(&c.re), sign, fmt_rational_compact(&im))
    }
}

fn fmt_term(m: &Monomial, c: &Coeff) -> String {
    let mono = m.to_string();
    if mono.is_empty() {
        return fmt_coeff_factor(c);
    }
    if c.im.is_zero() && c.re == Rational::one() {
        mono
    } else if c.im.is_zero() && c.re == -Rational::one() {
        format!("-{mono}")
    } else {
        format!("{} {}", fmt_coeff_factor(c), mono)
    }
}

impl fmt::Display for PolyFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let t = fmt_term(m, c);
            match (k, t.strip_prefix('-')) {
                (0, _) => write!(f, "{t}")?,
                (_, Some(rest)) => write!(f, " - {rest}")?,
                (_, None) => write!(f, " + {t}")?,
            }
        }
        Ok(())
    }
}

fn parse_complex(text: &str) -> Result<Coeff> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("invalid complex coefficient `{text}`"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(real(parse_rational(&t)?));
    };
    // Split `re±im` at the last sign that is not leading.
    let split = body
        .char_indices()
        .filter(|&(k, ch)| k > 0 && (ch == '+' || ch == '-'))
        .map(|(k, _)| k)
        .last();
    let imag = |s: &str| -> Result<Rational> {
        match s {
            "" | "+" => Ok(Rational::one()),
            "-" => Ok(-Rational::one()),
            other => parse_rational(other.strip_prefix('+').unwrap_or(other)),
        }
    };
    match split {
        Some(k) => {
            let re = parse_rational(&body[..k]).map_err(|_| bad())?;
            let im = imag(&body[k..]).map_err(|_| bad())?;
            Ok(Coeff::new(re, im))
        }
        None => Ok(Coeff::new(Rational::zero(), imag(body).map_err(|_| bad())?)),
    }
}

fn parse_factor(tok: &str, z: &mut BTreeMap<usize, u32>, zb: &mut BTreeMap<usize, u32>) -> Result<()> {
    let bad = || Error::Parse(format!("invalid factor `{tok}`"));
    let (target, rest) = if let Some(r) = tok.strip_prefix("zb") {
        (&mut *zb, r)
    } else if let Some(r) = tok.strip_prefix('z') {
        (&mut *z, r)
    } else {
        return Err(bad());
    };
    let (idx, exp) = match rest.split_once('^') {
        Some((i, e)) => (i, e.parse::<u32>().map_err(|_| bad())?),
        None => (rest, 1),
    };
    let idx: usize = idx.parse().map_err(|_| bad())?;
    if idx == 0 {
        return Err(Error::Parse(format!("coordinate indices start at 1 in `{tok}`")));
    }
    *target.entry(idx).or_default() += exp;
    Ok(())
}

fn parse_term(text: &str, negative: bool) -> Result<(Monomial, Coeff)> {
    let mut coeff = Coeff::one();
    let mut rest = text.trim();
    if let Some(inner) = rest.strip_prefix('(') {
        let close = inner
            .find(')')
            .ok_or_else(|| Error::Parse(format!("unbalanced parenthesis in `{text}`")))?;
        coeff = parse_complex(&inner[..close])?;
        rest = inner[close + 1..].trim();
    }
    let mut z = BTreeMap::new();
    let mut zb = BTreeMap::new();
    for (k, tok) in rest.split(|c: char| c.is_whitespace() || c == '*').filter(|s| !s.is_empty()).enumerate() {
        if tok.starts_with('z') {
            parse_factor(tok, &mut z, &mut zb)?;
        } else if k == 0 && text.trim_start().starts_with(tok) {
            coeff = parse_complex(tok)?;
        } else {
            return Err(Error::Parse(format!("unexpected token `{tok}` in term `{text}`")));
        }
    }
    if negative {
        coeff = -coeff;
    }
    Ok((Monomial::from_maps(z, zb), coeff))
}

impl FromStr for PolyFn {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut pieces: Vec<(bool, String)> = Vec::new();
        let mut current = String::new();
        let mut negative = false;
        let mut depth = 0i32;
        for ch in text.chars() {
            match ch {
                '(' => {
                    depth += 1;
                    current.push(ch);
                }
                ')' => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(Error::Parse(format!("unbalanced parenthesis in `{text}`")));
                    }
                    current.push(ch);
                }
                '+' | '-' if depth == 0 => {
                    if current.trim().is_empty() {
                        if ch == '-' {
                            negative = !negative;
                        }
                    } else {
                        pieces.push((negative, std::mem::take(&mut current)));
                        negative = ch == '-';
                    }
                }
                _ => current.push(ch),
            }
        }
        if depth != 0 {
            return Err(Error::Parse(format!("unbalanced parenthesis in `{text}`")));
        }
        if current.trim().is_empty() {
            if !pieces.is_empty() || negative {
                return Err(Error::Parse(format!("dangling operator in `{text}`")));
            }
            return Err(Error::Parse("empty polynomial".into()));
        }
        pieces.push((negative, current));
        let mut p = PolyFn::zero();
        for (neg, piece) in pieces {
            let (m, c) = parse_term(&piece, neg)?;
            p.add_term(m, c);
        }
        Ok(p)
    }
}

impl Serialize for PolyFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PolyFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
