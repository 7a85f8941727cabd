use proptest::prelude::*;

use tamelocal::chars::CharSetup;
use tamelocal::exactnum::{rat, rint, Cyclo, Rational};
use tamelocal::localfactors::{
    factor_report, gamma_adjoint, l_factor_adjoint, l_factor_by_pieces, l_factor_closed_form,
    principal_parameter, sym_tensor, LPolynomial,
};
use tamelocal::tamefield::TowerParams;
use tamelocal::weilrep::{build_weil_quotient, CocycleProvider};

fn setup(p: u64, e: u64, f: u64, r: u64) -> CharSetup {
    CharSetup::new(TowerParams::new(p, 1, e, f, 0, r)).unwrap()
}

/// `q^{n²}·Π_k (1 − q^{-(2k-1)})/(1 − q^{-2k})`, evaluated directly.
fn gamma0_formula(n: u32, q: i64) -> Rational {
    let mut acc = rint(q.pow(n * n));
    for k in 1..=n {
        acc = acc * (rint(1) - rat(1, q.pow(2 * k - 1))) / (rint(1) - rat(1, q.pow(2 * k)));
    }
    acc
}

#[test]
fn principal_parameter_small_cases() {
    let p = principal_parameter(1, 3);
    assert_eq!(p.gamma0, rat(9, 4));
    assert_eq!(p.eps, rint(3));
    assert!(p.eps_imported);
    assert_eq!(p.kernel_weights, vec![(2, 1)]);
    let p2 = principal_parameter(2, 3);
    let want = rint(81) * (rint(1) - rat(1, 3)) * (rint(1) - rat(1, 27))
        / ((rint(1) - rat(1, 9)) * (rint(1) - rat(1, 81)));
    assert_eq!(p2.gamma0, want);
    // ker ad N₀ = span{N₀, N₀³}
    assert_eq!(p2.kernel_weights, vec![(2, 1), (6, 1)]);
    assert_eq!(
        p2.l,
        LPolynomial {
            coeffs: vec![rint(1), -rat(1, 3) - rat(1, 27), rat(1, 81)]
        }
    );
    for (n, q) in [(3, 3), (3, 5), (4, 3)] {
        assert_eq!(
            principal_parameter(n, q as u64).gamma0,
            gamma0_formula(n as u32, q)
        );
    }
}

#[test]
fn sym_tensor_forms() {
    let s1 = sym_tensor(1);
    assert_eq!(
        s1.form,
        vec![vec![rint(0), rint(1)], vec![rint(-1), rint(0)]]
    );
    let s2 = sym_tensor(2);
    assert_eq!(s2.form, crate_transpose(&s2.form));
    // N₀ on Sym_2: v_1 ↦ v_0, v_2 ↦ 2 v_1
    let n0 = vec![
        vec![rint(0), rint(1), rint(0)],
        vec![rint(0), rint(0), rint(2)],
        vec![rint(0); 3],
    ];
    assert_eq!(s2.e, n0);
}

fn crate_transpose(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    (0..a.len())
        .map(|i| a.iter().map(|r| r[i].clone()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sym_tensor_invariance(n in 0usize..7, a in -5i64..6, t in 1i64..5) {
        let st = sym_tensor(n);
        let sign = if n % 2 == 0 { rint(1) } else { rint(-1) };
        let sym: Vec<Vec<Rational>> = crate_transpose(&st.form).into_iter().map(|r| r.into_iter().map(|x| &sign * x).collect()).collect();
        prop_assert_eq!(&sym, &st.form);
        let (z, o) = (rint(0), rint(1));
        let gens = [
            [[o.clone(), rint(a)], [z.clone(), o.clone()]],
            [[o.clone(), z.clone()], [rint(a), o.clone()]],
            [[rint(t), z.clone()], [z.clone(), rat(1, t)]],
            [[z.clone(), o.clone()], [-o.clone(), z.clone()]],
        ];
        for g in &gens {
            prop_assert!(st.preserves_form(&st.group_element(g)));
        }
        for x in [&st.e, &st.f, &st.h] {
            prop_assert!(st.in_lie_algebra(x));
        }
    }
}

#[test]
fn factor_reports_match_closed_forms() {
    for s in [setup(3, 2, 1, 4), setup(3, 1, 2, 4), setup(3, 2, 2, 4)] {
        let vt = s.vartheta(&s.theta(2).unwrap());
        let mut gammas = Vec::new();
        for prov in [CocycleProvider::Trivial, CocycleProvider::RandomValid(3)] {
            let g = build_weil_quotient(&s, &prov).unwrap();
            let rep = factor_report(&s, Some(&g), &vt).unwrap();
            assert!(
                rep.closed_form_match.values().all(|&b| b),
                "{} {:?}",
                s.params(),
                rep.closed_form_match
            );
            assert!(rep.closed_form_match.contains_key("root_number"));
            assert!(rep.closed_form_match.contains_key("conductor_routes"));
            let alone = factor_report(&s, None, &vt).unwrap();
            assert_eq!((alone.a, &alone.eps, &alone.l), (rep.a, &rep.eps, &rep.l));
            let q_half_a = Cyclo::prime_half_power(3, rep.a);
            assert_eq!(&rep.w * &q_half_a, rep.eps);
            assert_eq!(rep.l, rep.l_dual);
            gammas.push(gamma_adjoint(&g, &vt).unwrap());
            let json = serde_json::to_string(&rep).unwrap();
            assert!(json.contains("\"Ldual\""));
        }
        assert_eq!(gammas[0], gammas[1]);
    }
}

#[test]
fn l_factor_routes_agree() {
    for s in [
        setup(3, 2, 1, 4),
        setup(3, 1, 2, 4),
        setup(3, 2, 2, 4),
        setup(3, 1, 4, 2),
        setup(5, 1, 2, 2),
    ] {
        let vt = s.vartheta(&s.theta(0).unwrap());
        let g = build_weil_quotient(&s, &CocycleProvider::Trivial).unwrap();
        let by_pieces = l_factor_by_pieces(&s, &vt).unwrap();
        assert_eq!(
            by_pieces,
            l_factor_adjoint(&g, &vt).unwrap(),
            "{}",
            s.params()
        );
        assert_eq!(by_pieces, l_factor_closed_form(&s));
    }
}
