//! Reproducible experiments: property verification, the dimension sweep,
//! the projected Lempert data, and Monte Carlo norm identification.

mod lempert;
pub mod quadrature;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{rat, real, serde_fmt, to_f64, Rational};
use crate::forms::{inner_forms, Form};
use crate::gaussian::{mean_stderr, sample, sigmas_off, WeightSequence};
use crate::multiindex::MultiIndex;
use crate::poly::{inner, PolyFn};
use crate::random::{random_form, random_holomorphic_form, random_poly, rng, RandomSpec};
use crate::solver::{basic_estimate_slack, check_closed, energy_identity_defect, solve_minimal, AnsatzSpec};

pub use lempert::{cutoff, lempert_example, psi, CoordinateReport, LempertReport};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss–Legendre points per radial panel.
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Outer cutoff radius.
    pub r0: Rational,
    /// Per-coordinate Hermite bidegree cap for the projected data.
    pub hermite_cap: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub mc_sigma: f64,
    pub lempert_rel_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub weights: WeightSequence,
    pub n_range: Vec<usize>,
    /// Largest form degrees exercised.
    pub s: usize,
    pub t: usize,
    pub degree_cap: u32,
    pub seed: u64,
    pub case_count: usize,
    /// Monte Carlo sample count.
    pub samples: usize,
    pub quadrature: QuadratureConfig,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            weights: WeightSequence::dyadic(64),
            n_range: vec![1, 2, 3, 4],
            s: 2,
            t: 1,
            degree_cap: 4,
            seed: 20200209,
            case_count: 100,
            samples: 100_000,
            quadrature: QuadratureConfig { radial_nodes: 24, angular_nodes: 64, r0: rat(3, 4), hermite_cap: 12 },
            tolerances: Tolerances { mc_sigma: 5.0, lempert_rel_residual: 1e-6 },
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_range.is_empty() {
            return Err(Error::InvalidArg("n_range must be nonempty".into()));
        }
        if self.n_range.windows(2).any(|p| p[0] >= p[1]) || self.n_range[0] == 0 {
            return Err(Error::InvalidArg("n_range must be positive and strictly increasing".into()));
        }
        let r0 = &self.quadrature.r0;
        if *r0 <= rat(0, 1) || *r0 >= rat(1, 1) {
            return Err(Error::InvalidArg("quadrature.r0 must lie in (0, 1)".into()));
        }
        if self.quadrature.radial_nodes == 0 || self.quadrature.angular_nodes == 0 {
            return Err(Error::InvalidArg("quadrature node counts must be positive".into()));
        }
        self.weights.ensure_dim(self.max_n())
    }

    pub fn max_n(&self) -> usize {
        self.n_range.last().copied().unwrap_or(0)
    }
}

fn case_seed(base: u64, tag: u64, case: usize) -> u64 {
    base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (case as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Up to three failing inputs.
    pub counterexamples: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub properties: Vec<PropertyResult>,
    /// `check_closed(z̄_2 dz̄_1)`; must be false.
    pub sentinel_closed: Option<bool>,
    pub pass: bool,
}

const PROPERTIES: [&str; 7] = [
    "dbar_squared_zero",
    "integration_by_parts",
    "commutator",
    "adjointness",
    "energy_identity",
    "basic_estimate",
    "analytic_kernel",
];

/// Outcome of one property on one case: `None` if not applicable.
type Outcome = Option<std::result::Result<(), String>>;

fn check(ok: bool, dump: impl FnOnce() -> String) -> Outcome {
    Some(if ok { Ok(()) } else { Err(dump()) })
}

fn one_case(cfg: &ExperimentConfig, s: usize, t: usize, n: usize, seed: u64) -> Result<[Outcome; 7]> {
    let w = &cfg.weights;
    let spec = RandomSpec::new(n, cfg.degree_cap);
    let mut r = rng(seed);
    let u = random_form(&mut r, s, t, &spec)?;
    let phi = random_poly(&mut r, &spec);
    let chi = random_poly(&mut r, &spec);
    let j = 1 + (seed as usize % n);
    let k = 1 + ((seed >> 8) as usize % n);

    let squared = if t + 2 <= n {
        let dd = u.dbar()?.dbar()?;
        check(dd.is_zero(), || format!("u = {u}"))
    } else {
        None
    };

    let lhs = inner(&phi.d_zbar(j), &chi, w)?;
    let rhs = -inner(&phi, &chi.delta(j, w)?, w)?;
    let ibp = check(lhs == rhs, || format!("j = {j}, phi = {phi}, chi = {chi}"));

    let comm = phi.delta(k, w)?.d_zbar(j).sub(&phi.d_zbar(j).delta(k, w)?);
    let expected = if j == k { phi.scale_real(&(-Rational::from_integer(1.into()) / w.sigma(j)?)) } else { PolyFn::zero() };
    let commutator = check(comm == expected, || format!("j = {j}, k = {k}, phi = {phi}"));

    let (mut adjoint, mut energy, mut basic, mut kernel) = (None, None, None, None);
    if t + 1 <= n {
        let g = random_form(&mut r, s, t + 1, &spec)?;
        let l = inner_forms(&u.dbar()?, &g, w)?;
        let rr = inner_forms(&u, &g.dbar_adjoint(w)?, w)?;
        adjoint = check(l == rr, || format!("u = {u}g = {g}"));
        let defect = energy_identity_defect(&g, w)?;
        energy = check(defect == Rational::from_integer(0.into()), || format!("f = {g}"));
        let slack = basic_estimate_slack(&g, w)?;
        basic = check(slack >= Rational::from_integer(0.into()), || format!("f = {g}"));
        let h = random_holomorphic_form(&mut r, s, t, &spec)?;
        kernel = check(h.dbar()?.is_zero(), || format!("h = {h}"));
    }
    Ok([squared, ibp, commutator, adjoint, energy, basic, kernel])
}

/// Seeded random checks of the exact identities over every `(s, t, n)` with
/// `s ≤ cfg.s`, `t ≤ cfg.t`, `n ∈ cfg.n_range` and `s, t ≤ n`.
pub fn verify_suite(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let mut jobs = Vec::new();
    for s in 0..=cfg.s {
        for t in 0..=cfg.t {
            for &n in &cfg.n_range {
                if s > n || t > n {
                    continue;
                }
                for case in 0..cfg.case_count {
                    let tag = ((s as u64) << 32) | ((t as u64) << 16) | n as u64;
                    jobs.push((s, t, n, case_seed(cfg.seed, tag, case)));
                }
            }
        }
    }
    let outcomes: Vec<[Outcome; 7]> =
        jobs.par_iter().map(|&(s, t, n, seed)| one_case(cfg, s, t, n, seed)).collect::<Result<_>>()?;
    let mut properties: Vec<PropertyResult> = PROPERTIES
        .iter()
        .map(|name| PropertyResult { name: name.to_string(), cases: 0, failures: 0, counterexamples: Vec::new() })
        .collect();
    for (case, (s, t, n, seed)) in outcomes.iter().zip(&jobs) {
        for (prop, outcome) in properties.iter_mut().zip(case) {
            match outcome {
                None => {}
                Some(Ok(())) => prop.cases += 1,
                Some(Err(dump)) => {
                    prop.cases += 1;
                    prop.failures += 1;
                    if prop.counterexamples.len() < 3 {
                        prop.counterexamples.push(format!("(s,t,n)=({s},{t},{n}) seed={seed}: {dump}"));
                    }
                }
            }
        }
    }
    let sentinel_closed = if cfg.case_count == 0 {
        None
    } else {
        Some(check_closed(&"form s=0 t=1 n=2\n[|1] zb2".parse::<Form>()?))
    };
    let pass = properties.iter().all(|p| p.failures == 0) && sentinel_closed != Some(true);
    Ok(VerifyReport { properties, sentinel_closed, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    #[serde(serialize_with = "serde_fmt::rational")]
    pub norm_f_sq: Rational,
    #[serde(serialize_with = "serde_fmt::rational")]
    pub norm_u_sq: Rational,
    #[serde(serialize_with = "serde_fmt::float")]
    pub ratio: f64,
    /// `M_n f` closed (trivially true for the built-in family).
    pub closed: bool,
}

impl SweepRow {
    pub fn ratio_sq(&self) -> Option<Rational> {
        (self.norm_f_sq != Rational::from_integer(0.into())).then(|| &self.norm_u_sq / &self.norm_f_sq)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub builtin: Vec<SweepRow>,
    pub truncated: Vec<SweepRow>,
    /// Exact `ratio² = 1/2` at every `n` for the built-in family.
    pub builtin_ratio_half: bool,
    pub bounded: bool,
    pub truncation_closed: bool,
    pub pass: bool,
}

/// `f_n = Σ_{k≤n} z̄_k dz̄_k`.
pub fn builtin_family(n: usize) -> Result<Form> {
    let mut f = Form::zero(0, 1, n)?;
    for k in 1..=n {
        f.set(MultiIndex::empty(), MultiIndex::single(k), PolyFn::zb(k))?;
    }
    Ok(f)
}

fn sweep_row(f: &Form, w: &WeightSequence) -> Result<SweepRow> {
    let closed = check_closed(f);
    let r = solve_minimal(f, w, AnsatzSpec::for_form(f))?;
    let ratio = r.ratio_sq().map(|q| to_f64(&q).sqrt()).unwrap_or(0.0);
    Ok(SweepRow { n: f.n(), norm_f_sq: r.norm_f_sq, norm_u_sq: r.norm_u_sq, ratio, closed })
}

/// Solves the built-in family and `M_n(∂̄u)` for a fixed random `u` at each
/// `n ∈ n_range`.
pub fn dimension_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let w = &cfg.weights;
    let builtin: Vec<SweepRow> =
        cfg.n_range.par_iter().map(|&n| sweep_row(&builtin_family(n)?, w)).collect::<Result<_>>()?;

    let base_n = cfg.max_n().min(4);
    let (s, t) = (cfg.s.min(base_n), cfg.t.min(base_n.saturating_sub(1)));
    let spec = RandomSpec { terms: 2, density: 50, ..RandomSpec::new(base_n, cfg.degree_cap.min(3)) };
    let u = random_form(&mut rng(case_seed(cfg.seed, 0x5EED, 0)), s, t, &spec)?;
    let f = u.dbar()?.lift(cfg.max_n())?;
    let truncated: Vec<SweepRow> = cfg
        .n_range
        .par_iter()
        .filter(|&&n| s <= n && t < n)
        .map(|&n| sweep_row(&f.truncate(n, w)?, w))
        .collect::<Result<_>>()?;

    let half = rat(1, 2);
    let builtin_ratio_half = builtin.iter().all(|r| r.ratio_sq() == Some(half.clone()));
    let bounded = builtin.iter().chain(&truncated).all(|r| r.norm_u_sq <= r.norm_f_sq);
    let truncation_closed = truncated.iter().all(|r| r.closed);
    Ok(SweepReport {
        pass: builtin_ratio_half && bounded && truncation_closed,
        builtin,
        truncated,
        builtin_ratio_half,
        bounded,
        truncation_closed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub samples: usize,
    #[serde(serialize_with = "serde_fmt::float")]
    pub empirical: f64,
    #[serde(serialize_with = "serde_fmt::float")]
    pub stderr: f64,
    #[serde(serialize_with = "serde_fmt::rational")]
    pub exact: Rational,
    #[serde(serialize_with = "serde_fmt::float")]
    pub sigmas: f64,
    pub pass: bool,
}

/// Empirical `E|Σ' f_{I,J}(z) (dz^I ∧ dz̄^J)(z¹..z^{s+t})|²` over independent
/// draws against `‖f‖²`.
pub fn mc_norm_check(cfg: &ExperimentConfig, f: &Form) -> Result<McReport> {
    let k = f.s() + f.t();
    if k > 3 {
        return Err(Error::InvalidArg(format!("Monte Carlo check needs s + t <= 3, got {k}")));
    }
    let w = &cfg.weights;
    let exact = f.norm_sq(w)?;
    let count = cfg.samples;
    let points = sample(f.n(), count * (k + 1), cfg.seed, w)?;
    let values: Vec<f64> = points
        .par_chunks(k + 1)
        .map(|group| {
            let args: Vec<Vec<_>> = group[1..].iter().map(|p| p.coords.clone()).collect();
            f.ambient_eval(&group[0].coords, &args).map(|v| v.norm_sqr())
        })
        .collect::<Result<_>>()?;
    let (empirical, stderr) = mean_stderr(&values);
    let sigmas = sigmas_off(empirical, to_f64(&exact), stderr);
    Ok(McReport { samples: count, empirical, stderr, exact, sigmas, pass: sigmas <= cfg.tolerances.mc_sigma })
}

/// Unit-coefficient `dz̄_1 ∧ .. ∧ dz̄_t` on `C^n`.
pub fn unit_antiholomorphic(t: usize, n: usize) -> Result<Form> {
    let mut f = Form::zero(0, t, n)?;
    f.set(MultiIndex::empty(), MultiIndex::new((1..=t).collect())?, PolyFn::constant(real(rat(1, 1))))?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { case_count: 4, samples: 20_000, ..ExperimentConfig::default() }
    }

    #[test]
    fn empty_verify_passes() {
        let r = verify_suite(&ExperimentConfig { case_count: 0, ..small() }).unwrap();
        assert!(r.pass && r.sentinel_closed.is_none());
        assert!(r.properties.iter().all(|p| p.cases == 0));
    }

    #[test]
    fn small_verify_passes() {
        let r = verify_suite(&small()).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.sentinel_closed, Some(false));
        assert!(r.properties.iter().all(|p| p.cases > 0));
    }

    #[test]
    fn sweep_single_coordinate() {
        let cfg = ExperimentConfig { n_range: vec![1], ..small() };
        let r = dimension_sweep(&cfg).unwrap();
        assert_eq!(r.builtin[0].norm_u_sq, rat(1, 128));
        assert_eq!(r.builtin[0].norm_f_sq, rat(1, 64));
        assert!(r.pass);
    }

    #[test]
    fn mc_zero_and_unit() {
        let cfg = small();
        let zero = Form::zero(0, 1, 1).unwrap();
        let r = mc_norm_check(&cfg, &zero).unwrap();
        assert_eq!((r.empirical, r.sigmas), (0.0, 0.0));
        assert!(r.pass);
        let r = mc_norm_check(&cfg, &unit_antiholomorphic(1, 1).unwrap()).unwrap();
        assert_eq!(r.exact, rat(1, 8));
        assert!(r.pass, "{r:?}");
        assert!(mc_norm_check(&cfg, &unit_antiholomorphic(4, 4).unwrap()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        assert!(ExperimentConfig { n_range: vec![], ..small() }.validate().is_err());
        assert!(ExperimentConfig { n_range: vec![2, 1], ..small() }.validate().is_err());
        let mut bad = small();
        bad.quadrature.r0 = rat(1, 1);
        assert!(bad.validate().is_err());
    }
}
