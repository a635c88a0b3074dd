//! Complex Hermite (Itô) polynomials per coordinate.
//!
//! With `σ = 2a_j^2`, `H_{0,0} = 1`, `H_{p+1,q} = z H_{p,q} − σ q H_{p,q−1}` and
//! `H_{p,q+1} = conj(z) H_{p,q} − σ p H_{p−1,q}`. The family is orthogonal for
//! the Gaussian inner product with `‖H_{p,q}‖² = p! q! σ^{p+q}`; `∂/∂conj(z)`
//! lowers `q` and `δ` raises it.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::Result;
use crate::exact::{binomial, coeff_norm_sqr, factorial, real, rpow, Coeff, Rational};
use crate::gaussian::WeightSequence;
use crate::poly::{Monomial, PolyFn};

/// A tensor Hermite index: `(coordinate, p, q)` triples with ascending
/// coordinates; `(0,0)` factors are omitted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HermiteMode(Vec<(usize, u32, u32)>);

impl HermiteMode {
    pub fn new(mut factors: Vec<(usize, u32, u32)>) -> Self {
        factors.retain(|&(_, p, q)| p + q > 0);
        factors.sort_unstable();
        factors.dedup_by_key(|f| f.0);
        Self(factors)
    }

    pub fn constant() -> Self {
        Self::default()
    }

    pub fn factors(&self) -> &[(usize, u32, u32)] {
        &self.0
    }

    pub fn get(&self, j: usize) -> (u32, u32) {
        self.0
            .binary_search_by_key(&j, |f| f.0)
            .map(|k| (self.0[k].1, self.0[k].2))
            .unwrap_or((0, 0))
    }

    /// Replace coordinate `j`'s bidegree.
    pub fn with(&self, j: usize, p: u32, q: u32) -> HermiteMode {
        let mut f: Vec<_> = self.0.iter().copied().filter(|x| x.0 != j).collect();
        f.push((j, p, q));
        HermiteMode::new(f)
    }

    /// The holomorphic part `(coordinate, p)`, used to key solver sectors.
    pub fn p_vector(&self) -> Vec<(usize, u32)> {
        self.0.iter().filter(|f| f.1 > 0).map(|f| (f.0, f.1)).collect()
    }

    pub fn total_q(&self) -> u32 {
        self.0.iter().map(|f| f.2).sum()
    }

    pub fn max_coord(&self) -> usize {
        self.0.last().map(|f| f.0).unwrap_or(0)
    }
}

type ProfileKey = (u32, u32, Rational);
type Profile = Arc<Vec<(u32, u32, Rational)>>;

fn profile_cache() -> &'static RwLock<HashMap<ProfileKey, Profile>> {
    static CACHE: OnceLock<RwLock<HashMap<ProfileKey, Profile>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn monomial_cache() -> &'static RwLock<HashMap<ProfileKey, Profile>> {
    static CACHE: OnceLock<RwLock<HashMap<ProfileKey, Profile>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn memo(
    cache: &RwLock<HashMap<ProfileKey, Profile>>,
    key: ProfileKey,
    build: impl FnOnce() -> Vec<(u32, u32, Rational)>,
) -> Profile {
    if let Some(hit) = cache.read().expect("cache poisoned").get(&key) {
        return hit.clone();
    }
    let value = Arc::new(build());
    cache.write().expect("cache poisoned").entry(key).or_insert(value).clone()
}

/// Univariate coefficients of `H_{p,q}`: `(a, b, c)` meaning `c z^a conj(z)^b`.
fn hermite_profile(p: u32, q: u32, sigma: &Rational) -> Profile {
    memo(profile_cache(), (p, q, sigma.clone()), || {
        (0..=p.min(q))
            .map(|k| {
                let mag = Rational::from_integer(factorial(k) * binomial(p, k) * binomial(q, k))
                    * rpow(sigma, k);
                let c = if k % 2 == 0 { mag } else { -mag };
                (p - k, q - k, c)
            })
            .collect()
    })
}

/// Hermite coefficients of the univariate monomial `z^p conj(z)^q`, found by
/// eliminating leading terms: `(p', q', c)` meaning `c H_{p',q'}`.
fn monomial_profile(p: u32, q: u32, sigma: &Rational) -> Profile {
    memo(monomial_cache(), (p, q, sigma.clone()), || {
        let mut remaining: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
        remaining.insert((p, q), Rational::one());
        let mut out = Vec::new();
        // Leading term = largest total degree; every H_{a,b} has leading term z^a conj(z)^b
        // and lower terms on the same diagonal a-b, so elimination terminates.
        while let Some((&(a, b), _)) = remaining.iter().max_by_key(|((a, b), _)| (a + b, *a)) {
            let c = remaining.remove(&(a, b)).expect("present");
            for &(x, y, ref h) in hermite_profile(a, b, sigma).iter().skip(1) {
                let entry = remaining.entry((x, y)).or_insert_with(Rational::zero);
                *entry -= &c * h;
                if entry.is_zero() {
                    remaining.remove(&(x, y));
                }
            }
            out.push((a, b, c));
        }
        out.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        out
    })
}

fn univariate_poly(j: usize, profile: &[(u32, u32, Rational)]) -> PolyFn {
    PolyFn::from_terms(profile.iter().map(|(a, b, c)| {
        let mut z = BTreeMap::new();
        let mut zb = BTreeMap::new();
        z.insert(j, *a);
        zb.insert(j, *b);
        (Monomial::from_maps(z, zb), real(c.clone()))
    }))
}

/// `H_{p,q}` in coordinate `j`.
pub fn hermite_poly(p: u32, q: u32, j: usize, w: &WeightSequence) -> Result<PolyFn> {
    let sigma = w.sigma(j)?;
    Ok(univariate_poly(j, &hermite_profile(p, q, &sigma)))
}

/// `∏_j H_{p_j,q_j}(z_j)`.
pub fn mode_poly(mode: &HermiteMode, w: &WeightSequence) -> Result<PolyFn> {
    let mut acc = PolyFn::one();
    for &(j, p, q) in mode.factors() {
        acc = acc.mul(&hermite_poly(p, q, j, w)?);
    }
    Ok(acc)
}

/// `‖∏ H_{p_j,q_j}‖² = ∏ p_j! q_j! σ_j^{p_j+q_j}`.
pub fn mode_norm_sq(mode: &HermiteMode, w: &WeightSequence) -> Result<Rational> {
    let mut acc = Rational::one();
    for &(j, p, q) in mode.factors() {
        acc *= Rational::from_integer(factorial(p) * factorial(q)) * rpow(&w.sigma(j)?, p + q);
    }
    Ok(acc)
}

/// Coefficients of a polynomial in the tensor Hermite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    pub coeffs: BTreeMap<HermiteMode, Coeff>,
    pub weights: WeightSequence,
}

pub fn expand(f: &PolyFn, w: &WeightSequence) -> Result<HermiteExpansion> {
    w.ensure_dim(f.max_coord())?;
    let mut coeffs: BTreeMap<HermiteMode, Coeff> = BTreeMap::new();
    for (m, c) in f.terms() {
        // Cartesian product of the per-coordinate expansions.
        let mut partial: Vec<(Vec<(usize, u32, u32)>, Rational)> = vec![(Vec::new(), Rational::one())];
        for j in m.coords() {
            let profile = monomial_profile(m.z_exp(j), m.zb_exp(j), &w.sigma(j)?);
            let mut next = Vec::with_capacity(partial.len() * profile.len());
            for (factors, scale) in &partial {
                for (a, b, h) in profile.iter() {
                    let mut f2 = factors.clone();
                    f2.push((j, *a, *b));
                    next.push((f2, scale * h));
                }
            }
            partial = next;
        }
        for (factors, scale) in partial {
            let mode = HermiteMode::new(factors);
            let entry = coeffs.entry(mode.clone()).or_insert_with(Coeff::zero);
            *entry += c * real(scale);
            if entry.re.is_zero() && entry.im.is_zero() {
                coeffs.remove(&mode);
            }
        }
    }
    Ok(HermiteExpansion { coeffs, weights: w.clone() })
}

impl HermiteExpansion {
    pub fn reconstruct(&self) -> Result<PolyFn> {
        let mut acc = PolyFn::zero();
        for (mode, c) in &self.coeffs {
            acc.add_assign_scaled(&mode_poly(mode, &self.weights)?, c);
        }
        Ok(acc)
    }

    /// Parseval: `Σ |c|² ‖H_mode‖²`.
    pub fn norm_sq(&self) -> Result<Rational> {
        let mut acc = Rational::zero();
        for (mode, c) in &self.coeffs {
            acc += coeff_norm_sqr(c) * mode_norm_sq(mode, &self.weights)?;
        }
        Ok(acc)
    }
}

/// Floating values `H_{p,q}(z)` for all `p ≤ pmax`, `q ≤ qmax`; `out[p][q]`.
pub fn hermite_table_f64(pmax: usize, qmax: usize, sigma: f64, z: Complex64) -> Vec<Vec<Complex64>> {
    let zb = z.conj();
    let mut h = vec![vec![Complex64::zero(); qmax + 1]; pmax + 1];
    h[0][0] = Complex64::new(1.0, 0.0);
    for q in 1..=qmax {
        h[0][q] = zb * h[0][q - 1];
    }
    for p in 0..pmax {
        for q in 0..=qmax {
            let lower = if q > 0 { h[p][q - 1] * (sigma * q as f64) } else { Complex64::zero() };
            h[p + 1][q] = z * h[p][q] - lower;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::poly::{inner, norm_sq};

    fn w() -> WeightSequence {
        WeightSequence::dyadic(8)
    }

    fn p(s: &str) -> PolyFn {
        s.parse().unwrap()
    }

    /// Builds `H_{p,q}` by the z-raising recurrence first (`H_{0,q} = conj(z)^q`
    /// then raise p), or by the conj(z)-raising recurrence first.
    fn by_recurrence(p_deg: u32, q_deg: u32, j: usize, w: &WeightSequence, p_first: bool) -> PolyFn {
        let sigma = w.sigma(j).unwrap();
        let mut table: BTreeMap<(u32, u32), PolyFn> = BTreeMap::new();
        table.insert((0, 0), PolyFn::one());
        let get = |t: &BTreeMap<(u32, u32), PolyFn>, a: i64, b: i64| -> PolyFn {
            if a < 0 || b < 0 {
                PolyFn::zero()
            } else {
                t[&(a as u32, b as u32)].clone()
            }
        };
        if p_first {
            for a in 0..=p_deg {
                for b in 0..=q_deg {
                    if (a, b) == (0, 0) {
                        continue;
                    }
                    let v = if b == 0 {
                        get(&table, a as i64 - 1, 0).mul_z(j)
                    } else {
                        let prev = get(&table, a as i64, b as i64 - 1);
                        prev.mul_zb(j).sub(&get(&table, a as i64 - 1, b as i64 - 1).scale_real(&(&sigma * Rational::from_integer((a as i64).into()))))
                    };
                    table.insert((a, b), v);
                }
            }
        } else {
            for b in 0..=q_deg {
                for a in 0..=p_deg {
                    if (a, b) == (0, 0) {
                        continue;
                    }
                    let v = if a == 0 {
                        get(&table, 0, b as i64 - 1).mul_zb(j)
                    } else {
                        let prev = get(&table, a as i64 - 1, b as i64);
                        prev.mul_z(j).sub(&get(&table, a as i64 - 1, b as i64 - 1).scale_real(&(&sigma * Rational::from_integer((b as i64).into()))))
                    };
                    table.insert((a, b), v);
                }
            }
        }
        table[&(p_deg, q_deg)].clone()
    }

    #[test]
    fn examples() {
        let w = w();
        assert_eq!(hermite_poly(0, 0, 1, &w).unwrap(), PolyFn::one());
        let h11 = hermite_poly(1, 1, 1, &w).unwrap();
        assert_eq!(h11, p("z1 zb1 - 1/8"));
        assert_eq!(norm_sq(&h11, &w).unwrap(), rat(1, 64));
        assert!(hermite_poly(1, 1, 9, &w).is_err());
    }

    #[test]
    fn closed_form_matches_both_recurrences() {
        let w = w();
        for j in [1usize, 3] {
            for a in 0..=4 {
                for b in 0..=4 {
                    let h = hermite_poly(a, b, j, &w).unwrap();
                    assert_eq!(h, by_recurrence(a, b, j, &w, true), "p-first {a},{b}");
                    assert_eq!(h, by_recurrence(a, b, j, &w, false), "q-first {a},{b}");
                }
            }
        }
    }

    #[test]
    fn lowering_raising_and_orthogonality() {
        let w = w();
        let sigma = w.sigma(2).unwrap();
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                let h = hermite_poly(a, b, 2, &w).unwrap();
                let lowered_q = if b > 0 {
                    hermite_poly(a, b - 1, 2, &w).unwrap().scale_real(&Rational::from_integer(b.into()))
                } else {
                    PolyFn::zero()
                };
                assert_eq!(h.d_zbar(2), lowered_q);
                let lowered_p = if a > 0 {
                    hermite_poly(a - 1, b, 2, &w).unwrap().scale_real(&Rational::from_integer(a.into()))
                } else {
                    PolyFn::zero()
                };
                assert_eq!(h.d_z(2), lowered_p);
                let raised = hermite_poly(a, b + 1, 2, &w).unwrap().scale_real(&(-Rational::one() / &sigma));
                assert_eq!(h.delta(2, &w).unwrap(), raised);
                for c in 0..=4u32 {
                    for d in 0..=4u32 {
                        let g = hermite_poly(c, d, 2, &w).unwrap();
                        let expected = if (a, b) == (c, d) {
                            mode_norm_sq(&HermiteMode::new(vec![(2, a, b)]), &w).unwrap()
                        } else {
                            Rational::zero()
                        };
                        assert_eq!(inner(&h, &g, &w).unwrap(), real(expected));
                    }
                }
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let w = w();
        let e = expand(&p("z1 zb1"), &w).unwrap();
        let mut expected = BTreeMap::new();
        expected.insert(HermiteMode::new(vec![(1, 1, 1)]), real(rat(1, 1)));
        expected.insert(HermiteMode::constant(), real(rat(1, 8)));
        assert_eq!(e.coeffs, expected);
        let one = expand(&PolyFn::one(), &w).unwrap();
        assert_eq!(one.coeffs.len(), 1);
        assert_eq!(one.coeffs[&HermiteMode::constant()], real(rat(1, 1)));
        let f = p("zb1^3 z2");
        assert_eq!(expand(&f, &w).unwrap().reconstruct().unwrap(), f);
    }

    #[test]
    fn expansion_agrees_with_projection_and_parseval() {
        let w = w();
        let f = p("(2+i) z1^2 zb1^3 z2 + 3 zb2^2 z1 - z2 zb2 + (1/3)");
        let e = expand(&f, &w).unwrap();
        for (mode, c) in &e.coeffs {
            let h = mode_poly(mode, &w).unwrap();
            let projected = inner(&f, &h, &w).unwrap() / real(mode_norm_sq(mode, &w).unwrap());
            assert_eq!(&projected, c);
        }
        assert_eq!(e.norm_sq().unwrap(), norm_sq(&f, &w).unwrap());
        assert_eq!(e.reconstruct().unwrap(), f);
    }

    #[test]
    fn float_table_matches_exact() {
        let w = w();
        let z = Complex64::new(0.3, -0.2);
        let table = hermite_table_f64(4, 4, crate::exact::to_f64(&w.sigma(1).unwrap()), z);
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                let exact = hermite_poly(a, b, 1, &w).unwrap().eval(&[z]).unwrap();
                assert!((table[a as usize][b as usize] - exact).norm() < 1e-14);
            }
        }
    }
}
