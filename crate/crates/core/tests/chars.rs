use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tamelocal::chars::{CharSetup, FiniteCharacter, NormResidue};
use tamelocal::galoisgrp::SubfieldTag;
use tamelocal::tamefield::TowerParams;

fn setup(p: u64, e: u64, f: u64, r: u64) -> CharSetup {
    CharSetup::new(TowerParams::new(p, 1, e, f, 0, r)).unwrap()
}

fn inst_a() -> CharSetup {
    setup(3, 2, 1, 4)
}

fn inst_b() -> CharSetup {
    setup(3, 1, 2, 4)
}

fn inst_c() -> CharSetup {
    setup(3, 2, 2, 4)
}

#[test]
fn admissible_theta_counts() {
    for (s, want) in [(inst_a(), 18), (inst_b(), 12), (inst_c(), 108)] {
        let thetas = s.admissible_thetas();
        assert_eq!(thetas.len(), want, "{}", s.params());
        assert_eq!(s.predicted_theta_count(), want as u64);
        assert!(thetas.iter().all(|th| s.is_admissible(th)));
        // lexicographic order means strictly increasing exponent vectors
        for w in thetas.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }
}

/// Recomputes condition (2) on every element of the pinned subgroup, not
/// just on its generators.
#[test]
fn pinned_values_hold_pointwise() {
    for s in [inst_a(), inst_b()] {
        let t = &s.tower;
        let prm = *s.params();
        let (l, lp) = (prm.l() as u32, prm.l_prime() as u32);
        let el = (prm.e * prm.l()) as usize;
        let g = &s.ubar.group;
        let gens: Vec<_> = g
            .level_gens
            .iter()
            .filter(|(v, _)| *v >= el)
            .map(|(_, z)| z.clone())
            .collect();
        let p = t.p();
        let pl = p.pow(lp);
        let base = t.base();
        let thetas = s.admissible_thetas();
        let total = p.pow(gens.len() as u32);
        for idx in 0..total {
            let mut k = idx;
            let mut alpha = t.one();
            for z in &gens {
                alpha = t.mul(&alpha, &t.pow(z, k % p));
                k /= p;
            }
            let alpha = t.truncate(&alpha, g.depth);
            let am1 = t.sub(&alpha, &t.one());
            let x: Vec<u64> = am1
                .chunks(t.d())
                .flat_map(|b| t.ring.div_p_pow(b, l))
                .collect();
            let want = t.trace_f_qp(&t.trace_to(&base, &t.mul(&x, &s.beta))) % pl;
            let c = g.coords(t, &alpha).unwrap();
            for th in &thetas {
                let m = num_integer::lcm(th.modulus, pl);
                assert_eq!(th.eval(&c) * (m / th.modulus) % m, want * (m / pl) % m);
            }
        }
    }
}

#[test]
fn c_character_table() {
    // q = 3 ramified: c(−1) = −1
    let a = inst_a();
    assert_eq!(a.sign_at_minus_one(&a.chi_data_c()), -1);
    // q = 3, e = f = 2: c(−1) = −(−1)^1 = +1
    let c = inst_c();
    let cc = c.chi_data_c();
    assert_eq!(c.sign_at_minus_one(&cc), 1);
    assert_eq!(cc.order(), 2);
    // unramified |H| = 2: c ≡ 1
    let b = inst_b();
    assert_eq!(b.chi_data_c().order(), 1);
    // q = 5 ramified: (−1)^{(5−1)/2} = +1
    let a5 = setup(5, 2, 1, 4);
    assert_eq!(a5.sign_at_minus_one(&a5.chi_data_c()), 1);
    // trivial on Ū ∩ (1 + p_K^2)
    for s in [&a, &b, &c, &a5] {
        let ch = s.chi_data_c();
        assert!(s.level_gens(2).iter().all(|g| ch.is_trivial_at(g)));
    }
}

#[test]
fn conductors_of_vartheta_tilde() {
    for (s, want) in [(inst_a(), 6), (inst_b(), 4), (inst_c(), 7)] {
        for th in s.admissible_thetas() {
            let vt = s.vartheta(&th);
            assert_eq!(s.conductor_tilde(&vt), want, "{}", s.params());
            assert_eq!(s.tilde(&vt).conductor(), want);
        }
    }
    let a = inst_a();
    let triv = FiniteCharacter::trivial(a.ubar.invariants().len());
    assert_eq!(a.conductor_tilde(&triv), 0);
    assert_eq!(a.tilde(&triv).conductor(), 0);
}

fn check_twist_fixers(s: &CharSetup) {
    let prm = *s.params();
    let t = &s.tower;
    let er1 = (prm.e * (prm.r - 1)) as usize;
    let mut k0 = t.subfield(SubfieldTag::K0).unwrap().info.subgroup;
    k0.sort();
    let mut all = t.gamma.elements();
    all.sort();
    let vt = s.vartheta(&s.theta(0).unwrap());
    for k in 2..=(prm.e * prm.r) as usize {
        let mut got = s.twist_fixers(&vt, k);
        got.sort();
        let want = if k > er1 {
            all.clone()
        } else if k == er1 {
            k0.clone()
        } else {
            vec![t.gamma.identity()]
        };
        assert_eq!(got, want, "{} k={k}", prm);
    }
}

#[test]
fn twist_fixer_subgroups() {
    check_twist_fixers(&inst_a());
    check_twist_fixers(&inst_b());
    check_twist_fixers(&inst_c());
    check_twist_fixers(&setup(5, 4, 1, 4));
    check_twist_fixers(&setup(5, 1, 4, 3));
}

#[test]
fn vartheta_tilde_at_beta() {
    for s in [inst_a(), inst_b(), inst_c(), setup(5, 2, 2, 3)] {
        let t = &s.tower;
        for th in s.admissible_thetas().iter().step_by(5) {
            let vt = s.vartheta(th);
            let q = s.tilde(&vt);
            let lhs = q.value(t, &s.beta);
            let rhs = vt.value(&s.ubar.minus_one);
            assert_eq!(lhs, rhs);
            assert_eq!(
                rhs.to_rational().map(|r| &r * &r),
                Some(tamelocal::exactnum::rint(1))
            );
        }
    }
}

#[test]
fn vartheta_tilde_trivial_on_k_plus() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in [inst_a(), inst_b(), inst_c()] {
        let t = &s.tower;
        let kp = t.subfield(SubfieldTag::KPlus).unwrap();
        let q = s.tilde(&s.vartheta(&s.theta(1).unwrap()));
        for _ in 0..20 {
            let x = t.norm_to(&kp, &t.random_unit(&mut rng));
            assert_eq!(q.eval(t, &x).unwrap(), 0);
            assert_eq!(q.eval(t, &kp.uniformizer).unwrap(), 0);
        }
    }
}

#[test]
fn wedge_twist_conductors() {
    for s in [
        inst_a(),
        inst_b(),
        inst_c(),
        setup(5, 4, 1, 4),
        setup(5, 1, 4, 3),
    ] {
        let prm = *s.params();
        let gam = &s.tower.gamma;
        let er1 = (prm.e * (prm.r - 1)) as usize;
        let vt = s.vartheta(&s.theta(0).unwrap());
        for g in gam.elements() {
            if gam.mul(g, g) == gam.identity() {
                continue;
            }
            let want = if prm.ramified_over_kplus() || (gam.in_inertia(g) && g != gam.identity()) {
                er1
            } else {
                er1 + 1
            };
            assert_eq!(s.tilde_twisted(&vt, g).conductor(), want, "{prm} {g:?}");
        }
    }
}

#[test]
fn norm_residue_symbols() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // ramified K/K_+ with q = 3: (−1, K/K_+) = −1
    let a = inst_a();
    let t = &a.tower;
    let kp = t.subfield(SubfieldTag::KPlus).unwrap();
    let sym = NormResidue::new(t, &t.top(), &kp);
    assert_eq!(sym.symbol(t, &t.scalar(-1)), -1);
    // unramified K/K_+: (−1)^{ord}
    let b = inst_b();
    let t = &b.tower;
    let kp = t.subfield(SubfieldTag::KPlus).unwrap();
    let sym = NormResidue::new(t, &t.top(), &kp);
    for _ in 0..20 {
        let u = t.norm_to(&kp, &t.random_unit(&mut rng));
        assert_eq!(sym.symbol(t, &u), 1);
        assert_eq!(sym.symbol(t, &t.mul(&u, &kp.uniformizer)), -1);
    }
    // squares are norms, and the symbol is multiplicative
    for s in [inst_a(), inst_c()] {
        let t = &s.tower;
        let kp = t.subfield(SubfieldTag::KPlus).unwrap();
        let sym = NormResidue::new(t, &t.top(), &kp);
        for _ in 0..20 {
            let x = t.norm_to(&kp, &t.random_unit(&mut rng));
            let y = t.mul(&t.norm_to(&kp, &t.random_unit(&mut rng)), &kp.uniformizer);
            assert_eq!(sym.symbol(t, &t.mul(&x, &x)), 1);
            assert_eq!(
                sym.symbol(t, &t.mul(&x, &y)),
                sym.symbol(t, &x) * sym.symbol(t, &y)
            );
        }
    }
}

#[test]
fn chi_tilde_gamma_is_quadratic_twist() {
    let c = inst_c();
    let t = &c.tower;
    let vt = c.vartheta(&c.theta(3).unwrap());
    for g in t.gamma.involutions().elements {
        if g == t.gamma.identity() || g == t.tau {
            continue;
        }
        let chi = c.chi_tilde_gamma(&vt, g).unwrap();
        let kg = t.subfield(SubfieldTag::KGamma(g)).unwrap();
        let sym = NormResidue::new(t, &t.top(), &kg);
        // on norms from K the quadratic factor vanishes
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = c.tilde(&vt);
        for _ in 0..10 {
            let x = t.norm_to(&kg, &t.random_unit(&mut rng));
            assert_eq!(sym.symbol(t, &x), 1);
            let a = chi.value(t, &x);
            let b = q.value(t, &x);
            assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn characters_are_multiplicative(seed in any::<u64>()) {
        let s = inst_a();
        let t = &s.tower;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let thetas = s.admissible_thetas();
        let th = &thetas[(seed % thetas.len() as u64) as usize];
        let vt = s.vartheta(th);
        let q = s.tilde(&vt);
        let x = t.random_unit(&mut rng);
        let y = t.random_unit(&mut rng);
        let lhs = q.eval(t, &t.mul(&x, &y)).unwrap();
        let rhs = (q.eval(t, &x).unwrap() + q.eval(t, &y).unwrap()) % q.modulus;
        prop_assert_eq!(lhs, rhs);
        let a = s.ubar.unit_image(t, &x);
        let b = s.ubar.unit_image(t, &y);
        prop_assert_eq!(vt.eval(&s.ubar.add(&a, &b)), (vt.eval(&a) + vt.eval(&b)) % vt.modulus);
    }
}
