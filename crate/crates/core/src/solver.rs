//! Minimal-norm solutions of `∂̄u = f` for closed polynomial forms.
//!
//! In the tensor Hermite basis `∂̄` maps the mode `(p, q)` of `dz̄_j`-free
//! coefficients to `(p, q − e_j)` with weight `q_j`, so the system splits
//! into independent sectors keyed by `(I, p, |q|)`. Each sector is solved
//! through the diagonally weighted normal equations `A D Aᵀ y = f`,
//! `u = D Aᵀ y`, where `D` is the inverse Gram diagonal; `u` then lies in
//! the range of the adjoint, which is the orthogonal complement of `ker ∂̄`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{coeff_is_zero, coeff_norm_sqr, fmt_rational, int, real, serde_fmt, Coeff, Rational};
use crate::forms::Form;
use crate::gaussian::WeightSequence;
use crate::hermite::{expand, mode_norm_sq, mode_poly, HermiteMode};
use crate::multiindex::{weight_aij, MultiIndex};

/// Per-coordinate caps on the Hermite bidegrees of the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnsatzSpec {
    pub max_z_degree: u32,
    pub max_zbar_degree: u32,
    pub retry_limit: u32,
}

impl AnsatzSpec {
    /// `(P, Q + 1)` for data with per-coordinate bidegrees at most `(P, Q)`.
    pub fn for_form(f: &Form) -> Self {
        let (p, q) = f.max_bidegree();
        Self { max_z_degree: p, max_zbar_degree: q + 1, retry_limit: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    Generic,
    Separable,
}

/// Output of a solve, with exact certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub u: Form,
    #[serde(serialize_with = "serde_fmt::rational")]
    pub residual_norm_sq: Rational,
    #[serde(serialize_with = "serde_fmt::rational")]
    pub norm_u_sq: Rational,
    #[serde(serialize_with = "serde_fmt::rational")]
    pub norm_f_sq: Rational,
    #[serde(serialize_with = "serde_fmt::rational")]
    pub ortho_defect: Rational,
    pub bound_satisfied: bool,
    pub path: SolvePath,
    /// Ansatz enlargements used (0 when the first attempt succeeded).
    pub retries: u32,
}

impl SolveReport {
    /// `‖u‖² / ‖f‖²`, `None` for `f = 0`.
    pub fn ratio_sq(&self) -> Option<Rational> {
        (!self.norm_f_sq.is_zero()).then(|| &self.norm_u_sq / &self.norm_f_sq)
    }
}

/// `Sf = 0`; vacuous when `(s, t+2)`-forms do not exist on `C^n`.
pub fn check_closed(f: &Form) -> bool {
    if f.t() + 1 > f.n() {
        return true;
    }
    f.dbar().map(|g| g.is_zero()).unwrap_or(false)
}

type Row = (MultiIndex, HermiteMode);
type Col = (MultiIndex, HermiteMode);

fn sign_coeff(sign: i64) -> Rational {
    int(sign)
}

fn pow2(k: usize) -> Rational {
    num_traits::pow(int(2), k)
}

struct Sector {
    i: MultiIndex,
    rhs: BTreeMap<Row, Coeff>,
}

struct Ctx<'a> {
    s: usize,
    t: usize,
    n: usize,
    w: &'a WeightSequence,
    ansatz: AnsatzSpec,
}

impl Ctx<'_> {
    fn within_caps(&self, mode: &HermiteMode) -> bool {
        mode.factors()
            .iter()
            .all(|&(_, p, q)| p <= self.ansatz.max_z_degree && q <= self.ansatz.max_zbar_degree)
    }

    /// Columns whose image meets `row`.
    fn preimages(&self, row: &Row) -> Vec<Col> {
        let (j_idx, mode) = row;
        j_idx
            .entries()
            .iter()
            .filter_map(|&j| {
                let (_, k) = j_idx.remove(j)?;
                let (p, q) = mode.get(j);
                let m = mode.with(j, p, q + 1);
                self.within_caps(&m).then_some((k, m))
            })
            .collect()
    }

    /// Nonzero entries `(row, a)` of the `∂̄` matrix in column `col`.
    fn image(&self, col: &Col) -> Vec<(Row, Rational)> {
        let (k, mode) = col;
        let global: i64 = if self.s % 2 == 0 { 1 } else { -1 };
        (1..=self.n)
            .filter_map(|j| {
                let (sign, m) = k.insert(j)?;
                let (p, q) = mode.get(j);
                (q > 0).then(|| ((m, mode.with(j, p, q - 1)), sign_coeff(global * sign as i64 * q as i64)))
            })
            .collect()
    }

    /// Inverse Gram weight of a column.
    fn inv_gram(&self, i: &MultiIndex, col: &Col) -> Result<Rational> {
        let g = pow2(self.s + self.t) * weight_aij(i, &col.0, self.w)? * mode_norm_sq(&col.1, self.w)?;
        Ok(Rational::one() / g)
    }

    /// Minimal-norm coefficients for one sector after `closure` enlargement
    /// steps; `None` if the restricted system is inconsistent.
    fn solve_sector(&self, sector: &Sector, closure: u32) -> Result<Option<Vec<(Col, Coeff)>>> {
        let mut rows: BTreeSet<Row> = sector.rhs.keys().cloned().collect();
        let mut cols: BTreeSet<Col> = BTreeSet::new();
        for step in 0..=closure {
            for r in &rows {
                cols.extend(self.preimages(r));
            }
            for c in &cols {
                rows.extend(self.image(c).into_iter().map(|(r, _)| r));
            }
            if step == closure {
                break;
            }
        }
        let rows: Vec<Row> = rows.into_iter().collect();
        let row_pos: BTreeMap<&Row, usize> = rows.iter().enumerate().map(|(k, r)| (r, k)).collect();
        let cols: Vec<Col> = cols.into_iter().collect();
        let mut entries: Vec<Vec<(usize, Rational)>> = Vec::with_capacity(cols.len());
        let mut d: Vec<Rational> = Vec::with_capacity(cols.len());
        for c in &cols {
            entries.push(self.image(c).into_iter().map(|(r, a)| (row_pos[&r], a)).collect());
            d.push(self.inv_gram(&sector.i, c)?);
        }
        let m = rows.len();
        let mut normal = vec![vec![Rational::zero(); m]; m];
        for (col, dc) in entries.iter().zip(&d) {
            for (r1, a1) in col {
                let scaled = a1 * dc;
                for (r2, a2) in col {
                    normal[*r1][*r2] += &scaled * a2;
                }
            }
        }
        let rhs: Vec<Coeff> = rows
            .iter()
            .map(|r| sector.rhs.get(r).cloned().unwrap_or_else(Coeff::zero))
            .collect();
        let Some(y) = solve_consistent(normal, rhs) else { return Ok(None) };
        let mut out = Vec::new();
        for ((c, col), dc) in cols.into_iter().zip(&entries).zip(&d) {
            let mut x = Coeff::zero();
            for (r, a) in col {
                x += &y[*r] * real(a * dc);
            }
            if !coeff_is_zero(&x) {
                out.push((c, x));
            }
        }
        Ok(Some(out))
    }
}

/// Gauss–Jordan on a real rational matrix with complex right-hand side.
/// Free variables are set to zero; `None` if the system is inconsistent.
fn solve_consistent(mut a: Vec<Vec<Rational>>, mut b: Vec<Coeff>) -> Option<Vec<Coeff>> {
    let m = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == m {
            break;
        }
        let Some(piv) = (row..m).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(row, piv);
        b.swap(row, piv);
        let inv = Rational::one() / &a[row][col];
        for v in a[row].iter_mut() {
            *v *= &inv;
        }
        b[row] = &b[row] * real(inv);
        let pivot_row = a[row].clone();
        let pivot_rhs = b[row].clone();
        for r in 0..m {
            if r == row || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for (v, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
            b[r] = &b[r] - &pivot_rhs * real(factor);
        }
        pivots.push((row, col));
        row += 1;
    }
    if b[row..].iter().any(|v| !coeff_is_zero(v)) {
        return None;
    }
    let mut x = vec![Coeff::zero(); cols];
    for (r, c) in pivots {
        x[c] = b[r].clone();
    }
    Some(x)
}

fn sectors(f: &Form, w: &WeightSequence) -> Result<Vec<Sector>> {
    let mut map: BTreeMap<(MultiIndex, Vec<(usize, u32)>, u32), Sector> = BTreeMap::new();
    for ((i, j), p) in f.coeffs() {
        for (mode, c) in expand(p, w)?.coeffs {
            let key = (i.clone(), mode.p_vector(), mode.total_q());
            map.entry(key)
                .or_insert_with(|| Sector { i: i.clone(), rhs: BTreeMap::new() })
                .rhs
                .insert((j.clone(), mode), c);
        }
    }
    Ok(map.into_values().collect())
}

fn assemble(s: usize, t: usize, n: usize, parts: Vec<(MultiIndex, Vec<(Col, Coeff)>)>, w: &WeightSequence) -> Result<Form> {
    let mut u = Form::zero(s, t, n)?;
    for (i, cols) in parts {
        for ((k, mode), c) in cols {
            u.accumulate(i.clone(), k, &mode_poly(&mode, w)?, &c)?;
        }
    }
    Ok(u)
}

fn finish(f: &Form, u: Form, w: &WeightSequence, path: SolvePath, retries: u32, cap: u32) -> Result<SolveReport> {
    let residual = u.dbar()?.sub(f)?;
    let norm_u_sq = u.norm_sq(w)?;
    let norm_f_sq = f.norm_sq(w)?;
    Ok(SolveReport {
        residual_norm_sq: residual.norm_sq(w)?,
        ortho_defect: ortho_defect(&u, w, cap)?,
        bound_satisfied: norm_u_sq <= norm_f_sq,
        norm_u_sq,
        norm_f_sq,
        u,
        path,
        retries,
    })
}

/// Minimal-norm `u` with `∂̄u = f` inside the Hermite ansatz.
pub fn solve_minimal(f: &Form, w: &WeightSequence, ansatz: AnsatzSpec) -> Result<SolveReport> {
    if f.t() == 0 {
        return Err(Error::InvalidDegree("right-hand side must have t >= 1".into()));
    }
    w.ensure_dim(f.n())?;
    if !check_closed(f) {
        return Err(Error::NotClosed);
    }
    let (s, t, n) = (f.s(), f.t() - 1, f.n());
    let sectors = sectors(f, w)?;
    let mut last_residual = Rational::zero();
    for attempt in 0..=ansatz.retry_limit {
        let ctx = Ctx {
            s,
            t,
            n,
            w,
            ansatz: AnsatzSpec {
                max_z_degree: ansatz.max_z_degree + attempt,
                max_zbar_degree: ansatz.max_zbar_degree + attempt,
                retry_limit: ansatz.retry_limit,
            },
        };
        let solved: Vec<Option<(MultiIndex, Vec<(Col, Coeff)>)>> = sectors
            .par_iter()
            .map(|sec| Ok(ctx.solve_sector(sec, attempt)?.map(|cols| (sec.i.clone(), cols))))
            .collect::<Result<_>>()?;
        let parts: Vec<_> = solved.into_iter().flatten().collect();
        let u = assemble(s, t, n, parts, w)?;
        let report = finish(f, u, w, SolvePath::Generic, attempt, ctx.ansatz.max_z_degree)?;
        if report.residual_norm_sq.is_zero() {
            return Ok(report);
        }
        last_residual = report.residual_norm_sq;
    }
    Err(Error::AnsatzInsufficient { residual: fmt_rational(&last_residual), retries: ansatz.retry_limit as usize })
}

/// Data of the form `Σ_k f_{I,k} dz^I ∧ dz̄_k` with each `f_{I,k}` a function
/// of `z_k` alone.
pub fn is_separable(f: &Form) -> bool {
    f.t() == 1 && f.coeffs().all(|((_, j), p)| p.depends_only_on(j.entries()[0]))
}

/// Coordinatewise solve `u_I = (−1)^s Σ_k L_k^{-1} f_{I,k}` with
/// `L^{-1} H_{p,q} = H_{p,q+1}/(q+1)`.
pub fn solve_separable(f: &Form, w: &WeightSequence) -> Result<SolveReport> {
    if !is_separable(f) {
        return Err(Error::InvalidArg("data is not coordinate-separable".into()));
    }
    w.ensure_dim(f.n())?;
    let sign = if f.s() % 2 == 0 { Coeff::one() } else { -Coeff::one() };
    let mut u = Form::zero(f.s(), 0, f.n())?;
    let mut cap = 0;
    for ((i, j), p) in f.coeffs() {
        let k = j.entries()[0];
        for (mode, c) in expand(p, w)?.coeffs {
            let (pp, q) = mode.get(k);
            cap = cap.max(pp);
            let raised = mode.with(k, pp, q + 1);
            let scale = &sign * real(Rational::new(1.into(), (q + 1).into()));
            u.accumulate(i.clone(), MultiIndex::empty(), &mode_poly(&raised, w)?, &(c * scale))?;
        }
    }
    finish(f, u, w, SolvePath::Separable, 0, cap)
}

/// `max |⟨u, H_p dz^I ∧ dz̄^J⟩|²` over holomorphic tensor modes with every
/// `p_j ≤ degree_cap`.
pub fn ortho_defect(u: &Form, w: &WeightSequence, degree_cap: u32) -> Result<Rational> {
    let mut worst = Rational::zero();
    let scale = pow2(u.s() + u.t());
    for ((i, j), p) in u.coeffs() {
        let weight = weight_aij(i, j, w)? * &scale;
        for (mode, c) in expand(p, w)?.coeffs {
            if mode.total_q() != 0 || mode.factors().iter().any(|&(_, pj, _)| pj > degree_cap) {
                continue;
            }
            let g = &weight * mode_norm_sq(&mode, w)?;
            let v = coeff_norm_sqr(&c) * &g * &g;
            if v > worst {
                worst = v;
            }
        }
    }
    Ok(worst)
}

/// `‖T*f‖² + ‖Sf‖² − (t+1)‖f‖² − 2^{s+t+1} Σ' a^{I,K} ‖∂̄f_{I,K}‖²` for an
/// `(s, t+1)`-form; `Sf` is taken as zero when it has no room on `C^n`.
pub fn energy_identity_defect(f: &Form, w: &WeightSequence) -> Result<Rational> {
    if f.t() == 0 {
        return Err(Error::InvalidDegree("energy identity needs t >= 1".into()));
    }
    let adj = f.dbar_adjoint(w)?.norm_sq(w)?;
    let sf = if f.t() + 1 <= f.n() { f.dbar()?.norm_sq(w)? } else { Rational::zero() };
    let mut grad = Rational::zero();
    for ((i, k), p) in f.coeffs() {
        let scalar = Form::scalar(p.clone(), f.n())?;
        grad += weight_aij(i, k, w)? * scalar.dbar()?.norm_sq(w)?;
    }
    let t1 = int(f.t() as i64);
    Ok(adj + sf - t1 * f.norm_sq(w)? - pow2(f.s() + f.t()) * grad)
}

/// `‖f‖² ≤ ‖T*f‖² + ‖Sf‖²`, returning the slack.
pub fn basic_estimate_slack(f: &Form, w: &WeightSequence) -> Result<Rational> {
    let adj = f.dbar_adjoint(w)?.norm_sq(w)?;
    let sf = if f.t() + 1 <= f.n() { f.dbar()?.norm_sq(w)? } else { Rational::zero() };
    Ok(adj + sf - f.norm_sq(w)?)
}

/// Whether an exact rational is nonnegative (report helper).
pub fn nonneg(r: &Rational) -> bool {
    !r.is_negative()
}
