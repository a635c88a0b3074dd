use std::collections::BTreeMap;

use dbar_core::exact::{rat, Coeff};
use dbar_core::forms::inner_forms;
use dbar_core::multiindex::enumerate_indices;
use dbar_core::poly::{inner, Monomial};
use dbar_core::solver::{
    basic_estimate_slack, check_closed, energy_identity_defect, ortho_defect, solve_minimal, AnsatzSpec,
};
use dbar_core::{Form, PolyFn, Rational, WeightSequence};
use num_traits::Zero;
use proptest::prelude::*;

fn weights() -> WeightSequence {
    WeightSequence::dyadic(16)
}

fn coeff() -> impl Strategy<Value = Coeff> {
    (-5i64..=5, 1i64..=4, -5i64..=5, 1i64..=4).prop_map(|(a, b, c, d)| Coeff::new(rat(a, b), rat(c, d)))
}

fn monomial(n: usize, degree: u32) -> impl Strategy<Value = Monomial> {
    prop::collection::vec((1..=n, any::<bool>()), 0..=degree as usize).prop_map(|vars| {
        let (mut z, mut zb) = (BTreeMap::new(), BTreeMap::new());
        for (j, conj) in vars {
            *(if conj { &mut zb } else { &mut z }).entry(j).or_insert(0u32) += 1;
        }
        Monomial::from_maps(z, zb)
    })
}

fn poly(n: usize, degree: u32) -> impl Strategy<Value = PolyFn> {
    prop::collection::vec((monomial(n, degree), coeff()), 0..4).prop_map(PolyFn::from_terms)
}

/// Random `(s,t)`-form on `C^n`: each `(I,J)` slot is empty or a random polynomial.
fn form(s: usize, t: usize, n: usize, degree: u32) -> impl Strategy<Value = Form> {
    let slots: Vec<_> = enumerate_indices(s, n)
        .unwrap()
        .into_iter()
        .flat_map(|i| enumerate_indices(t, n).unwrap().into_iter().map(move |j| (i.clone(), j)))
        .collect();
    let len = slots.len();
    prop::collection::vec(prop::option::weighted(0.6, poly(n, degree)), len).prop_map(move |polys| {
        let mut f = Form::zero(s, t, n).unwrap();
        for ((i, j), p) in slots.iter().zip(polys) {
            if let Some(p) = p {
                f.set(i.clone(), j.clone(), p).unwrap();
            }
        }
        f
    })
}

/// `(s, t, n)` with `s ≤ 2`, `t ≤ 2`, `n ≤ 4` and room for a `(s, t+1)`-form.
fn shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (0usize..=2, 0usize..=2, 1usize..=4).prop_filter("fits", |&(s, t, n)| s <= n && t < n)
}

fn pair() -> impl Strategy<Value = (Form, Form)> {
    shape().prop_flat_map(|(s, t, n)| (form(s, t, n, 3), form(s, t + 1, n, 3)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dbar_squares_to_zero(u in shape().prop_filter("room", |&(_, t, n)| t + 2 <= n).prop_flat_map(|(s, t, n)| form(s, t, n, 4))) {
        prop_assert!(u.dbar().unwrap().dbar().unwrap().is_zero());
    }

    #[test]
    fn adjoint_relation((u, f) in pair()) {
        let w = weights();
        prop_assert_eq!(
            inner_forms(&u.dbar().unwrap(), &f, &w).unwrap(),
            inner_forms(&u, &f.dbar_adjoint(&w).unwrap(), &w).unwrap()
        );
    }

    #[test]
    fn energy_identity_and_basic_estimate((_, f) in pair()) {
        let w = weights();
        prop_assert!(energy_identity_defect(&f, &w).unwrap().is_zero());
        prop_assert!(basic_estimate_slack(&f, &w).unwrap() >= Rational::zero());
    }

    #[test]
    fn integration_by_parts(f in poly(3, 4), g in poly(3, 4), j in 1usize..=3) {
        let w = weights();
        prop_assert_eq!(inner(&f.d_zbar(j), &g, &w).unwrap(), -inner(&f, &g.delta(j, &w).unwrap(), &w).unwrap());
    }

    #[test]
    fn inner_product_is_hermitian((u, _) in pair(), (v, _) in pair()) {
        let w = weights();
        if (u.s(), u.t(), u.n()) == (v.s(), v.t(), v.n()) {
            let a = inner_forms(&u, &v, &w).unwrap();
            let b = inner_forms(&v, &u, &w).unwrap();
            prop_assert_eq!(a.re, b.re);
            prop_assert_eq!(a.im, -b.im);
        }
        prop_assert!(u.norm_sq(&w).unwrap() >= Rational::zero());
        prop_assert_eq!(u.norm_sq(&w).unwrap().is_zero(), u.is_zero());
    }

    #[test]
    fn text_and_json_round_trip((u, _) in pair()) {
        prop_assert_eq!(u.to_string().parse::<Form>().unwrap(), u.clone());
        let json = serde_json::to_string(&u).unwrap();
        prop_assert_eq!(serde_json::from_str::<Form>(&json).unwrap(), u);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solver_certificate((u, _) in pair()) {
        let w = weights();
        let f = u.dbar().unwrap();
        let r = solve_minimal(&f, &w, AnsatzSpec::for_form(&f)).unwrap();
        prop_assert!(r.residual_norm_sq.is_zero());
        prop_assert_eq!(r.u.dbar().unwrap(), f.clone());
        prop_assert!(r.norm_u_sq <= u.norm_sq(&w).unwrap());
        prop_assert!(r.norm_u_sq <= r.norm_f_sq);
        prop_assert!(r.bound_satisfied);
        let cap = AnsatzSpec::for_form(&f).max_z_degree;
        prop_assert!(ortho_defect(&r.u, &w, cap).unwrap().is_zero());
        // u − û lies in the kernel, so û is orthogonal to it.
        let diff = u.sub(&r.u).unwrap();
        prop_assert!(diff.dbar().unwrap().is_zero());
        prop_assert!(inner_forms(&r.u, &diff, &w).unwrap().is_zero());
        prop_assert_eq!(solve_minimal(&f, &w, AnsatzSpec::for_form(&f)).unwrap(), r);
    }

    #[test]
    fn truncation_preserves_closedness(
        (u, m) in (1usize..=2, 0usize..=1, 2usize..=4)
            .prop_flat_map(|(s, t, n)| (form(s, t, n, 3), 1usize..=n))
    ) {
        let w = weights();
        let f = u.dbar().unwrap();
        if f.s() <= m && f.t() <= m {
            let fm = f.truncate(m, &w).unwrap();
            prop_assert!(check_closed(&fm));
        }
    }
}
