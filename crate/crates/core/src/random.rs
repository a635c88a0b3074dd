//! Seeded random polynomials and forms for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exact::{rat, Coeff};
use crate::forms::Form;
use crate::multiindex::enumerate_indices;
use crate::poly::{Monomial, PolyFn};

/// Shape of random test data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub n: usize,
    /// Total degree cap per monomial.
    pub degree: u32,
    /// Monomials drawn per coefficient (duplicates merge).
    pub terms: usize,
    /// Probability in percent that a given `(I,J)` slot is populated.
    pub density: u32,
}

impl RandomSpec {
    pub fn new(n: usize, degree: u32) -> Self {
        Self { n, degree, terms: 3, density: 60 }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_rational(rng: &mut impl Rng) -> num_rational::BigRational {
    rat(rng.random_range(-4..=4), rng.random_range(1..=3))
}

pub fn random_coeff(rng: &mut impl Rng) -> Coeff {
    Coeff::new(small_rational(rng), small_rational(rng))
}

pub fn random_monomial(rng: &mut impl Rng, n: usize, degree: u32) -> Monomial {
    let total = rng.random_range(0..=degree);
    let mut z = std::collections::BTreeMap::new();
    let mut zb = std::collections::BTreeMap::new();
    for _ in 0..total {
        let j = rng.random_range(1..=n);
        if rng.random_bool(0.5) {
            *z.entry(j).or_insert(0) += 1;
        } else {
            *zb.entry(j).or_insert(0) += 1;
        }
    }
    Monomial::from_maps(z, zb)
}

pub fn random_poly(rng: &mut impl Rng, spec: &RandomSpec) -> PolyFn {
    PolyFn::from_terms((0..spec.terms).map(|_| (random_monomial(rng, spec.n, spec.degree), random_coeff(rng))))
}

/// Holomorphic polynomial (no conjugate variables).
pub fn random_holomorphic(rng: &mut impl Rng, spec: &RandomSpec) -> PolyFn {
    let p = random_poly(rng, spec);
    PolyFn::from_terms(p.terms().map(|(m, c)| (Monomial { z: m.z.clone(), zb: Vec::new() }, c.clone())))
}

fn fill(rng: &mut impl Rng, s: usize, t: usize, spec: &RandomSpec, holo: bool) -> Result<Form> {
    let mut form = Form::zero(s, t, spec.n)?;
    for i in enumerate_indices(s, spec.n)? {
        for j in enumerate_indices(t, spec.n)? {
            if rng.random_range(0..100) >= spec.density {
                continue;
            }
            let p = if holo { random_holomorphic(rng, spec) } else { random_poly(rng, spec) };
            form.set(i.clone(), j, p)?;
        }
    }
    Ok(form)
}

/// Random `(s,t)`-form on `C^n`.
pub fn random_form(rng: &mut impl Rng, s: usize, t: usize, spec: &RandomSpec) -> Result<Form> {
    fill(rng, s, t, spec, false)
}

/// Random `(s,t)`-form with holomorphic coefficients.
pub fn random_holomorphic_form(rng: &mut impl Rng, s: usize, t: usize, spec: &RandomSpec) -> Result<Form> {
    fill(rng, s, t, spec, true)
}
