//! `(s,t)`-forms on `C^n` with polynomial coefficients and the weighted norm
//! `‖f‖² = Σ' 2^{s+t} a^{I,J} ∫|f_{I,J}|² dN`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{int, real, Coeff, Rational};
use crate::gaussian::WeightSequence;
use crate::multiindex::{weight_aij, MultiIndex};
use crate::poly::{self, PolyFn};

pub type FormKey = (MultiIndex, MultiIndex);

/// `f = Σ' f_{I,J} dz^I ∧ dz̄^J` with `|I| = s`, `|J| = t`, indices in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Form {
    s: usize,
    t: usize,
    n: usize,
    coeffs: BTreeMap<FormKey, PolyFn>,
}

fn sign_rational(sign: i8) -> Rational {
    int(sign as i64)
}

/// `2^k`.
fn pow2(k: usize) -> Rational {
    num_traits::pow(int(2), k)
}

impl Form {
    pub fn zero(s: usize, t: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArg("truncation dimension must be positive".into()));
        }
        if s > n || t > n {
            return Err(Error::DegreeOverflow { s, t, n });
        }
        Ok(Self { s, t, n, coeffs: BTreeMap::new() })
    }

    /// A `(0,0)`-form.
    pub fn scalar(f: PolyFn, n: usize) -> Result<Self> {
        let mut out = Self::zero(0, 0, n)?;
        out.set(MultiIndex::empty(), MultiIndex::empty(), f)?;
        Ok(out)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&FormKey, &PolyFn)> {
        self.coeffs.iter()
    }

    pub fn get(&self, i: &MultiIndex, j: &MultiIndex) -> Option<&PolyFn> {
        self.coeffs.get(&(i.clone(), j.clone()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    fn validate_key(&self, i: &MultiIndex, j: &MultiIndex, poly: &PolyFn) -> Result<()> {
        if i.len() != self.s || j.len() != self.t {
            return Err(Error::ShapeMismatch(format!(
                "index pair [{i}|{j}] does not have shape ({},{})",
                self.s, self.t
            )));
        }
        let top = i.max_entry().max(j.max_entry()).max(poly.max_coord());
        if top > self.n {
            return Err(Error::IndexOutOfRange { index: top, len: self.n });
        }
        Ok(())
    }

    /// Replaces the `(I,J)` coefficient; a zero polynomial removes it.
    pub fn set(&mut self, i: MultiIndex, j: MultiIndex, poly: PolyFn) -> Result<()> {
        self.validate_key(&i, &j, &poly)?;
        if poly.is_zero() {
            self.coeffs.remove(&(i, j));
        } else {
            self.coeffs.insert((i, j), poly);
        }
        Ok(())
    }

    /// Adds `c · poly` to the `(I,J)` coefficient.
    pub fn accumulate(&mut self, i: MultiIndex, j: MultiIndex, poly: &PolyFn, c: &Coeff) -> Result<()> {
        self.validate_key(&i, &j, poly)?;
        let key = (i, j);
        let entry = self.coeffs.entry(key.clone()).or_default();
        entry.add_assign_scaled(poly, c);
        if entry.is_zero() {
            self.coeffs.remove(&key);
        }
        Ok(())
    }

    fn same_shape(&self, other: &Form) -> Result<()> {
        if (self.s, self.t, self.n) != (other.s, other.t, other.n) {
            return Err(Error::ShapeMismatch(format!(
                "({},{}) on C^{} vs ({},{}) on C^{}",
                self.s, self.t, self.n, other.s, other.t, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.combine(other, &Coeff::one())
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.combine(other, &-Coeff::one())
    }

    fn combine(&self, other: &Form, c: &Coeff) -> Result<Form> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for ((i, j), p) in &other.coeffs {
            out.accumulate(i.clone(), j.clone(), p, c)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Coeff) -> Form {
        let mut out = Form { s: self.s, t: self.t, n: self.n, coeffs: BTreeMap::new() };
        for (k, p) in &self.coeffs {
            let q = p.scale(c);
            if !q.is_zero() {
                out.coeffs.insert(k.clone(), q);
            }
        }
        out
    }

    /// Re-embeds the form on `C^m`, `m ≥ n` (indices are unchanged).
    pub fn lift(&self, m: usize) -> Result<Form> {
        if m < self.n {
            return Err(Error::InvalidArg(format!("cannot lift from C^{} to C^{m}", self.n)));
        }
        Ok(Form { s: self.s, t: self.t, n: m, coeffs: self.coeffs.clone() })
    }

    /// `M_m f`: keep `(I,J)` with `max(I ∪ J) ≤ m` and project each coefficient
    /// onto `L^2(C^m)`.
    pub fn truncate(&self, m: usize, w: &WeightSequence) -> Result<Form> {
        let mut out = Form::zero(self.s, self.t, m)?;
        for ((i, j), p) in &self.coeffs {
            if i.max_entry().max(j.max_entry()) <= m {
                out.set(i.clone(), j.clone(), p.project(m, w)?)?;
            }
        }
        Ok(out)
    }

    /// Largest z- and conj(z)-exponents over every coefficient and coordinate.
    pub fn max_bidegree(&self) -> (u32, u32) {
        let mut out = (0, 0);
        for p in self.coeffs.values() {
            for j in 1..=self.n {
                let (a, b) = p.bidegree(j);
                out = (out.0.max(a), out.1.max(b));
            }
        }
        out
    }

    /// `‖f‖²`.
    pub fn norm_sq(&self, w: &WeightSequence) -> Result<Rational> {
        Ok(inner_forms(self, self, w)?.re)
    }

    /// `∂̄f = (−1)^s Σ'_{I,M} Σ_j Σ'_J ε_{j,J}^M (∂f_{I,J}/∂z̄_j) dz^I ∧ dz̄^M`.
    pub fn dbar(&self) -> Result<Form> {
        if self.t + 1 > self.n {
            return Err(Error::DegreeOverflow { s: self.s, t: self.t + 1, n: self.n });
        }
        let mut out = Form::zero(self.s, self.t + 1, self.n)?;
        let global = if self.s % 2 == 0 { Coeff::one() } else { -Coeff::one() };
        for ((i, j_idx), f) in &self.coeffs {
            for j in 1..=self.n {
                let Some((eps, m)) = j_idx.insert(j) else { continue };
                let d = f.d_zbar(j);
                if d.is_zero() {
                    continue;
                }
                out.accumulate(i.clone(), m, &d, &(&global * real(sign_rational(eps))))?;
            }
        }
        Ok(out)
    }

    /// `T*f = (−1)^{s−1} Σ'_{I,K} Σ_j 2a_j² δ_j(f_{I,jK}) dz^I ∧ dz̄^K`.
    pub fn dbar_adjoint(&self, w: &WeightSequence) -> Result<Form> {
        if self.t == 0 {
            return Err(Error::InvalidDegree("adjoint needs an (s,t+1)-form with t+1 >= 1".into()));
        }
        w.ensure_dim(self.n)?;
        let mut out = Form::zero(self.s, self.t - 1, self.n)?;
        // (−1)^{s−1}
        let global = if self.s % 2 == 1 { Coeff::one() } else { -Coeff::one() };
        for ((i, j_idx), f) in &self.coeffs {
            for &j in j_idx.entries() {
                let (eps, k) = j_idx.remove(j).expect("member");
                let term = f.delta(j, w)?;
                let c = &global * real(w.sigma(j)? * sign_rational(eps));
                out.accumulate(i.clone(), k, &term, &c)?;
            }
        }
        Ok(out)
    }

    /// `Σ' f_{I,J}(z) (dz^I ∧ dz̄^J)(z^1, .., z^{s+t})`.
    pub fn ambient_eval(&self, z: &[Complex64], args: &[Vec<Complex64>]) -> Result<Complex64> {
        let mut acc = Complex64::zero();
        for ((i, j), f) in &self.coeffs {
            acc += f.eval(z)? * eval_wedge(i, j, args)?;
        }
        Ok(acc)
    }
}

/// `Σ' 2^{s+t} a^{I,J} ⟨f_{I,J}, g_{I,J}⟩`.
pub fn inner_forms(f: &Form, g: &Form, w: &WeightSequence) -> Result<Coeff> {
    f.same_shape(g)?;
    let scale = pow2(f.s + f.t);
    let mut acc = Coeff::zero();
    for (key, fp) in &f.coeffs {
        if let Some(gp) = g.coeffs.get(key) {
            let weight = weight_aij(&key.0, &key.1, w)? * &scale;
            acc += poly::inner(fp, gp, w)? * real(weight);
        }
    }
    Ok(acc)
}

fn permutation_sign(perm: &[usize]) -> f64 {
    let mut inversions = 0;
    for a in 0..perm.len() {
        for b in a + 1..perm.len() {
            if perm[a] > perm[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(dz^I ∧ dz̄^J)(z^1..z^{s+t})` by the explicit permutation sum, normalized
/// by `1/√((s+t)!)`.
pub fn eval_wedge(i: &MultiIndex, j: &MultiIndex, args: &[Vec<Complex64>]) -> Result<Complex64> {
    let s = i.len();
    let k = s + j.len();
    if args.len() != k {
        return Err(Error::ShapeMismatch(format!("wedge of degree {k} given {} arguments", args.len())));
    }
    let needed = i.max_entry().max(j.max_entry());
    if let Some(short) = args.iter().find(|a| a.len() < needed) {
        return Err(Error::DimensionMismatch { needed, got: short.len() });
    }
    let slots: Vec<usize> = i.entries().iter().chain(j.entries()).copied().collect();
    let mut acc = Complex64::zero();
    for perm in (0..k).permutations(k) {
        let mut term = Complex64::new(permutation_sign(&perm), 0.0);
        for (slot, &arg) in perm.iter().enumerate() {
            let v = args[arg][slots[slot] - 1];
            term *= if slot < s { v } else { v.conj() };
        }
        acc += term;
    }
    let norm: f64 = (1..=k).map(|x| x as f64).product::<f64>().sqrt();
    Ok(acc / norm)
}

impl fmt::Display for Form {
    /// `form s=.. t=.. n=..` followed by one `[I|J] polynomial` line per coefficient.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "form s={} t={} n={}", self.s, self.t, self.n)?;
        for ((i, j), p) in &self.coeffs {
            writeln!(f, "[{i}|{j}] {p}")?;
        }
        Ok(())
    }
}

fn parse_index_list(text: &str) -> Result<MultiIndex> {
    let entries: Vec<usize> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("invalid index `{s}`"))))
        .collect::<Result<_>>()?;
    MultiIndex::new(entries)
}

impl FromStr for Form {
    type Err = Error;

    /// Parses the literal syntax. Without a `form` header the shape is taken
    /// from the first coefficient line and `n` from the largest index used.
    fn from_str(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut entries: Vec<(MultiIndex, MultiIndex, PolyFn)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ctx = |e: Error| Error::Parse(format!("line {}: {e}", lineno + 1));
            if let Some(rest) = line.strip_prefix("form") {
                let mut shape = (None, None, None);
                for kv in rest.split_whitespace() {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| ctx(Error::Parse(format!("expected key=value, got `{kv}`"))))?;
                    let v: usize = v.parse().map_err(|_| ctx(Error::Parse(format!("invalid value `{v}`"))))?;
                    match k {
                        "s" => shape.0 = Some(v),
                        "t" => shape.1 = Some(v),
                        "n" => shape.2 = Some(v),
                        other => return Err(ctx(Error::Parse(format!("unknown header key `{other}`")))),
                    }
                }
                match shape {
                    (Some(s), Some(t), Some(n)) => header = Some((s, t, n)),
                    _ => return Err(ctx(Error::Parse("header needs s, t and n".into()))),
                }
                continue;
            }
            let body = line
                .strip_prefix('[')
                .ok_or_else(|| ctx(Error::Parse(format!("expected `[I|J] poly`, got `{line}`"))))?;
            let (idx, poly) = body
                .split_once(']')
                .ok_or_else(|| ctx(Error::Parse("missing `]`".into())))?;
            let (i, j) = idx.split_once('|').ok_or_else(|| ctx(Error::Parse("missing `|`".into())))?;
            let i = parse_index_list(i).map_err(ctx)?;
            let j = parse_index_list(j).map_err(ctx)?;
            let poly: PolyFn = poly.trim().parse().map_err(ctx)?;
            entries.push((i, j, poly));
        }
        let (s, t, n) = match header {
            Some(h) => h,
            None => {
                let (i, j, _) = entries
                    .first()
                    .ok_or_else(|| Error::Parse("empty form literal needs a `form s= t= n=` header".into()))?;
                let n = entries
                    .iter()
                    .map(|(i, j, p)| i.max_entry().max(j.max_entry()).max(p.max_coord()))
                    .max()
                    .unwrap_or(1)
                    .max(1);
                (i.len(), j.len(), n)
            }
        };
        let mut form = Form::zero(s, t, n)?;
        for (i, j, p) in entries {
            form.accumulate(i, j, &p, &Coeff::one())?;
        }
        Ok(form)
    }
}

#[derive(Serialize, Deserialize)]
struct FormEntry {
    #[serde(rename = "I")]
    i: MultiIndex,
    #[serde(rename = "J")]
    j: MultiIndex,
    poly: PolyFn,
}

#[derive(Serialize, Deserialize)]
struct FormRepr {
    s: usize,
    t: usize,
    n: usize,
    coeffs: Vec<FormEntry>,
}

impl Serialize for Form {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FormRepr {
            s: self.s,
            t: self.t,
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .map(|((i, j), p)| FormEntry { i: i.clone(), j: j.clone(), poly: p.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Form {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FormRepr::deserialize(d)?;
        let mut form = Form::zero(repr.s, repr.t, repr.n).map_err(serde::de::Error::custom)?;
        for e in repr.coeffs {
            form.accumulate(e.i, e.j, &e.poly, &Coeff::one()).map_err(serde::de::Error::custom)?;
        }
        Ok(form)
    }
}
