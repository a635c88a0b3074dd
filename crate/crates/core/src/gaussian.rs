//! Weight sequences, exact moments of the product Gaussian and a seeded sampler.
//!
//! Coordinate `j` carries the complex Gaussian `N_{a_j}`: real and imaginary
//! parts are independent centered normals with standard deviation `a_j`, so
//! `E|z_j|^2 = σ_j = 2 a_j^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{factorial, fmt_rational, int, real, rpow, serde_fmt, to_f64, Coeff, Rational};

/// Samples generated per RNG stream; chunk `k` uses stream `k` of the seed.
pub const SAMPLE_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightRule {
    /// `a_k = c · r^{k-1}`.
    Geometric { c: Rational, r: Rational },
    /// A finite, explicitly listed prefix.
    Explicit,
}

/// The fixed positive sequence `{a_j}` with `Σ a_j < 1`, materialized up to `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    rule: WeightRule,
    prefix: Vec<Rational>,
    a_f64: Vec<f64>,
}

impl WeightSequence {
    pub fn geometric(c: Rational, r: Rational, len: usize) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::InvalidArg(format!("scale c = {} must be positive", fmt_rational(&c))));
        }
        if !r.is_positive() || r >= Rational::one() {
            return Err(Error::InvalidArg(format!("ratio r = {} must lie in (0,1)", fmt_rational(&r))));
        }
        let total = &c / (Rational::one() - &r);
        if total >= Rational::one() {
            return Err(Error::InvalidArg(format!(
                "weights must satisfy sum a_j < 1, geometric sum is {}",
                fmt_rational(&total)
            )));
        }
        if len == 0 {
            return Err(Error::InvalidArg("materialized length must be positive".into()));
        }
        let mut prefix = Vec::with_capacity(len);
        let mut a = c.clone();
        for _ in 0..len {
            prefix.push(a.clone());
            a *= &r;
        }
        Ok(Self::from_parts(WeightRule::Geometric { c, r }, prefix))
    }

    pub fn explicit(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArg("explicit weight list is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_positive()) {
            return Err(Error::InvalidArg(format!("weight {} is not positive", fmt_rational(bad))));
        }
        let total: Rational = values.iter().sum();
        if total >= Rational::one() {
            return Err(Error::InvalidArg(format!(
                "weights must satisfy sum a_j < 1, explicit sum is {}",
                fmt_rational(&total)
            )));
        }
        Ok(Self::from_parts(WeightRule::Explicit, values))
    }

    /// The default `a_k = 2^{-k-1}` (sum 1/2).
    pub fn dyadic(len: usize) -> Self {
        Self::geometric(Rational::new(1.into(), 4.into()), Rational::new(1.into(), 2.into()), len)
            .expect("dyadic weights are valid")
    }

    fn from_parts(rule: WeightRule, prefix: Vec<Rational>) -> Self {
        let a_f64 = prefix.iter().map(to_f64).collect();
        Self { rule, prefix, a_f64 }
    }

    pub fn rule(&self) -> &WeightRule {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    pub fn prefix(&self) -> &[Rational] {
        &self.prefix
    }

    /// Exact value of `Σ_{j≥1} a_j` (closed form for the geometric rule).
    pub fn total(&self) -> Rational {
        match &self.rule {
            WeightRule::Geometric { c, r } => c / (Rational::one() - r),
            WeightRule::Explicit => self.prefix.iter().sum(),
        }
    }

    fn check(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.prefix.len() {
            Err(Error::IndexOutOfRange { index: j, len: self.prefix.len() })
        } else {
            Ok(())
        }
    }

    /// `a_j`, 1-based.
    pub fn a(&self, j: usize) -> Result<&Rational> {
        self.check(j)?;
        Ok(&self.prefix[j - 1])
    }

    /// `σ_j = 2 a_j^2`, the second absolute moment of `z_j`.
    pub fn sigma(&self, j: usize) -> Result<Rational> {
        let a = self.a(j)?;
        Ok(int(2) * a * a)
    }

    pub fn a_f64(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        Ok(self.a_f64[j - 1])
    }

    pub fn ensure_dim(&self, n: usize) -> Result<()> {
        if n > self.prefix.len() {
            Err(Error::IndexOutOfRange { index: n, len: self.prefix.len() })
        } else {
            Ok(())
        }
    }
}

/// `∫ z^p conj(z)^q dN_{a_j}`: zero unless `p == q`, else `p! σ_j^p`.
pub fn monomial_moment(p: u32, q: u32, j: usize, w: &WeightSequence) -> Result<Coeff> {
    let sigma = w.sigma(j)?;
    if p != q {
        return Ok(Coeff::zero());
    }
    Ok(real(Rational::from_integer(factorial(p)) * rpow(&sigma, p)))
}

/// A draw from the `n`-dimensional marginal of the product measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub coords: Vec<Complex64>,
}

/// `count` independent points of `C^n`, deterministic in `seed`.
pub fn sample(n: usize, count: usize, seed: u64, w: &WeightSequence) -> Result<Vec<SamplePoint>> {
    w.ensure_dim(n)?;
    let scales: Vec<f64> = (1..=n).map(|j| w.a_f64(j)).collect::<Result<_>>()?;
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Vec<SamplePoint>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = chunk_rng(seed, chunk);
            let len = SAMPLE_CHUNK.min(count - chunk * SAMPLE_CHUNK);
            (0..len)
                .map(|_| SamplePoint {
                    coords: scales
                        .iter()
                        .map(|&a| {
                            let x: f64 = StandardNormal.sample(&mut rng);
                            let y: f64 = StandardNormal.sample(&mut rng);
                            Complex64::new(a * x, a * y)
                        })
                        .collect(),
                })
                .collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Sample mean and its standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

/// `|empirical - exact|` measured in standard errors; exact agreement with a
/// degenerate estimator counts as zero.
pub fn sigmas_off(empirical: f64, exact: f64, stderr: f64) -> f64 {
    let diff = (empirical - exact).abs();
    if diff == 0.0 {
        0.0
    } else if stderr == 0.0 {
        f64::INFINITY
    } else {
        diff / stderr
    }
}

/// `2^{p/2+1} Γ((1+p)/2) / √π`, i.e. `E(|x|^p + |y|^p)` per unit-scale coordinate.
pub fn abs_moment_constant(p: f64) -> f64 {
    2f64.powf(p / 2.0 + 1.0) * statrs::function::gamma::gamma((1.0 + p) / 2.0) / PI.sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    #[serde(serialize_with = "serde_fmt::float")]
    pub p: f64,
    pub n: usize,
    pub count: usize,
    #[serde(serialize_with = "serde_fmt::float")]
    pub empirical: f64,
    #[serde(serialize_with = "serde_fmt::float")]
    pub exact: f64,
    #[serde(serialize_with = "serde_fmt::float")]
    pub stderr: f64,
    #[serde(serialize_with = "serde_fmt::float")]
    pub sigmas: f64,
}

/// Monte Carlo estimate of `E Σ_{i≤n} (|Re z_i|^p + |Im z_i|^p)` against the
/// Γ-function closed form.
pub fn moment_sum_check(
    p: f64,
    n: usize,
    count: usize,
    seed: u64,
    w: &WeightSequence,
) -> Result<MomentReport> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArg(format!("moment order p = {p} must be >= 1")));
    }
    let points = sample(n, count, seed, w)?;
    let values: Vec<f64> = points
        .iter()
        .map(|pt| pt.coords.iter().map(|z| z.re.abs().powf(p) + z.im.abs().powf(p)).sum())
        .collect();
    let (empirical, stderr) = mean_stderr(&values);
    let scale_sum: f64 = (1..=n).map(|j| w.a_f64(j).map(|a| a.powf(p))).sum::<Result<f64>>()?;
    let exact = abs_moment_constant(p) * scale_sum;
    Ok(MomentReport {
        p,
        n,
        count,
        empirical,
        exact,
        stderr,
        sigmas: sigmas_off(empirical, exact, stderr),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FerniqueReport {
    pub n: usize,
    pub count: usize,
    /// Mean of `exp(Σ_{k≤n} |x_k| + |y_k|)`.
    #[serde(serialize_with = "serde_fmt::float")]
    pub empirical: f64,
    #[serde(serialize_with = "serde_fmt::float")]
    pub stderr: f64,
    /// `∏ [e^{a²/2} (1 + erf(a/√2))]^2`.
    #[serde(serialize_with = "serde_fmt::float")]
    pub exact: f64,
    /// `exp(Σ a_k² + (2√2/√π) a_k)`.
    #[serde(serialize_with = "serde_fmt::float")]
    pub bound: f64,
    /// Mean of `exp(ε|φ(z)|)` for `φ = ‖φ‖·z_1`, `ε = 1/‖φ‖`.
    #[serde(serialize_with = "serde_fmt::float")]
    pub functional_empirical: f64,
    /// Pointwise `ε|φ(z)| ≤ ‖z‖_1` held on every sample.
    pub dominated: bool,
    pub pass: bool,
}

pub fn fernique_check(
    phi_norm_bound: &Rational,
    count: usize,
    seed: u64,
    w: &WeightSequence,
    n: usize,
) -> Result<FerniqueReport> {
    if !phi_norm_bound.is_positive() {
        return Err(Error::InvalidArg("functional norm bound must be positive".into()));
    }
    let points = sample(n, count, seed, w)?;
    let phi_norm = to_f64(phi_norm_bound);
    let eps = 1.0 / phi_norm;
    let mut l1_exp = Vec::with_capacity(points.len());
    let mut phi_exp = Vec::with_capacity(points.len());
    let mut dominated = true;
    for pt in &points {
        let l1: f64 = pt.coords.iter().map(|z| z.re.abs() + z.im.abs()).sum();
        let phi = pt.coords.first().map(|z| eps * (phi_norm * z).norm()).unwrap_or(0.0);
        dominated &= phi <= l1 * (1.0 + 1e-12);
        l1_exp.push(l1.exp());
        phi_exp.push(phi.exp());
    }
    let (empirical, stderr) = mean_stderr(&l1_exp);
    let (functional_empirical, _) = mean_stderr(&phi_exp);
    let c = 2.0 * 2f64.sqrt() / PI.sqrt();
    let mut log_bound = 0.0;
    let mut exact = 1.0;
    for j in 1..=n {
        let a = w.a_f64(j)?;
        log_bound += a * a + c * a;
        let per = (a * a / 2.0).exp() * (1.0 + statrs::function::erf::erf(a / 2f64.sqrt()));
        exact *= per * per;
    }
    let bound = log_bound.exp();
    let pass = empirical <= bound + 5.0 * stderr && dominated;
    Ok(FerniqueReport {
        n,
        count,
        empirical,
        stderr,
        exact,
        bound,
        functional_empirical,
        dominated,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn w() -> WeightSequence {
        WeightSequence::dyadic(32)
    }

    #[test]
    fn geometric_rule_and_certificate() {
        let w = WeightSequence::geometric(rat(1, 4), rat(1, 2), 5).unwrap();
        assert_eq!(w.a(1).unwrap(), &rat(1, 4));
        assert_eq!(w.a(3).unwrap(), &rat(1, 16));
        assert_eq!(w.total(), rat(1, 2));
        assert_eq!(w.sigma(1).unwrap(), rat(1, 8));
        assert!(WeightSequence::geometric(rat(1, 1), rat(1, 2), 5).is_err());
        assert!(WeightSequence::geometric(rat(1, 2), rat(1, 2), 5).is_err());
        assert!(WeightSequence::explicit(vec![rat(1, 2), rat(1, 2)]).is_err());
        assert!(WeightSequence::explicit(vec![rat(1, 2), rat(-1, 8)]).is_err());
        assert!(matches!(w.a(6), Err(Error::IndexOutOfRange { index: 6, len: 5 })));
    }

    #[test]
    fn moment_examples() {
        let w = w();
        // Polar-coordinates oracle: ∫|z|^2 dN_a = ∫_0^∞ r^2 (r/a^2) e^{-r^2/2a^2} dr = 2a^2.
        let a = 0.25f64;
        let radial = simpson(|r| r * r * r / (a * a) * (-r * r / (2.0 * a * a)).exp(), 0.0, 3.0, 4000);
        assert!((radial - 2.0 * a * a).abs() < 1e-10);
        assert_eq!(monomial_moment(1, 1, 1, &w).unwrap(), real(rat(1, 8)));
        assert_eq!(monomial_moment(2, 1, 1, &w).unwrap(), Coeff::zero());
        // χ² with 2 dof: E|z|^4 = 2 (2a^2)^2.
        let fourth = simpson(|r| r.powi(5) / (a * a) * (-r * r / (2.0 * a * a)).exp(), 0.0, 3.0, 4000);
        assert!((fourth - 1.0 / 32.0).abs() < 1e-10);
        assert_eq!(monomial_moment(2, 2, 1, &w).unwrap(), real(rat(1, 32)));
        assert!(monomial_moment(1, 1, 99, &w).is_err());
    }

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let h = (hi - lo) / steps as f64;
        let mut acc = f(lo) + f(hi);
        for k in 1..steps {
            acc += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn joint_moment_factorizes_against_quadrature() {
        // E[|z_1|^2 |z_2|^2] by 2-d radial quadrature (angles integrate out).
        let w = w();
        let (a1, a2) = (w.a_f64(1).unwrap(), w.a_f64(2).unwrap());
        let radial = |a: f64| simpson(|r| r.powi(3) / (a * a) * (-r * r / (2.0 * a * a)).exp(), 0.0, 12.0 * a, 4000);
        let joint = radial(a1) * radial(a2);
        let exact = monomial_moment(1, 1, 1, &w).unwrap().re * monomial_moment(1, 1, 2, &w).unwrap().re;
        assert!((joint - to_f64(&exact)).abs() < 1e-12);
    }

    #[test]
    fn sampler_is_deterministic_and_sized() {
        let w = w();
        assert!(sample(2, 0, 7, &w).unwrap().is_empty());
        let a = sample(3, 5000, 11, &w).unwrap();
        let b = sample(3, 5000, 11, &w).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5000);
        assert!(a.iter().all(|p| p.coords.len() == 3));
        assert_ne!(a, sample(3, 5000, 12, &w).unwrap());
        assert!(sample(40, 1, 0, &w).is_err());
    }

    #[test]
    fn sampler_second_moment_and_marginals() {
        let w = w();
        let pts = sample(2, 100_000, 2024, &w).unwrap();
        let mod2: Vec<f64> = pts.iter().map(|p| p.coords[0].norm_sqr()).collect();
        let (m, se) = mean_stderr(&mod2);
        assert!(sigmas_off(m, 2.0 / 16.0, se) <= 5.0);
        for j in 0..2 {
            let a2 = w.a_f64(j + 1).unwrap().powi(2);
            let re2: Vec<f64> = pts.iter().map(|p| p.coords[j].re.powi(2)).collect();
            let im2: Vec<f64> = pts.iter().map(|p| p.coords[j].im.powi(2)).collect();
            let (mr, ser) = mean_stderr(&re2);
            let (mi, sei) = mean_stderr(&im2);
            assert!(sigmas_off(mr, a2, ser) <= 5.0);
            assert!(sigmas_off(mi, a2, sei) <= 5.0);
        }
    }

    #[test]
    fn gamma_constants() {
        // p = 2: Γ(3/2) = √π/2 gives constant 2.
        assert!((abs_moment_constant(2.0) - 2.0).abs() < 1e-12);
        // p = 1: 2√2/√π.
        let c1 = abs_moment_constant(1.0);
        assert!((c1 - 2.0 * 2f64.sqrt() / PI.sqrt()).abs() < 1e-12);
        assert!((c1 * 0.5 - 0.797_884_560_802_865_4).abs() < 1e-12);
    }

    #[test]
    fn moment_sum_matches_gamma_formula() {
        let w = w();
        let r2 = moment_sum_check(2.0, 3, 50_000, 5, &w).unwrap();
        let exact2: f64 = (1..=3).map(|j| 2.0 * w.a_f64(j).unwrap().powi(2)).sum();
        assert!((r2.exact - exact2).abs() < 1e-15);
        assert!(r2.sigmas <= 5.0, "{r2:?}");
        let r1 = moment_sum_check(1.0, 16, 50_000, 6, &w).unwrap();
        assert!(r1.sigmas <= 5.0, "{r1:?}");
        assert!(moment_sum_check(0.5, 1, 10, 0, &w).is_err());
    }

    #[test]
    fn fernique_bound_examples() {
        let w = w();
        let r = fernique_check(&rat(1, 1), 20_000, 3, &w, 1).unwrap();
        let expected = (1.0f64 / 16.0 + 2.0 * 2f64.sqrt() / PI.sqrt() / 4.0).exp();
        assert!((r.bound - expected).abs() < 1e-12);
        assert!((expected.ln() - 0.46144).abs() < 1e-4);
        assert!(r.exact <= r.bound);
        assert!(r.pass);
        assert!(r.functional_empirical <= r.empirical);

        let tiny = WeightSequence::geometric(rat(1, 1_000_000_000), rat(1, 2), 4).unwrap();
        let t = fernique_check(&rat(1, 1), 1000, 3, &tiny, 4).unwrap();
        assert!((t.bound - 1.0).abs() < 1e-8);
        assert!((t.empirical - 1.0).abs() < 1e-8);

        let g = fernique_check(&rat(2, 1), 100_000, 9, &w, 4).unwrap();
        assert!(g.pass, "{g:?}");
    }
}
