use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::units::{norm_one_group, unit_group_quotient};
use super::*;

fn model(p: u64, f0: u64, e: u64, f: u64, m: u64, r: u64) -> TowerModel {
    let params = TowerParams::new(p, f0, e, f, m, r);
    realize_tower(params, params.precision_floor() + e as usize).unwrap()
}

fn inst_a() -> TowerModel {
    model(3, 1, 2, 1, 0, 4)
}

fn inst_b() -> TowerModel {
    model(3, 1, 1, 2, 0, 4)
}

fn inst_c() -> TowerModel {
    model(3, 1, 2, 2, 0, 4)
}

#[test]
fn ramified_quadratic_relations() {
    let t = inst_a();
    let pi = t.uniformizer();
    let delta = t.gamma.delta();
    assert_eq!(t.galois_apply(delta, &pi), t.neg(&pi));
    assert_eq!(t.galois_apply(t.gamma.mul(delta, delta), &pi), pi);
    let omega = t.teich(t.omega_exp as i64);
    assert_eq!(t.mul(&pi, &pi), t.mul(&t.scalar(3), &omega));
}

#[test]
fn unramified_quadratic_frobenius() {
    let t = inst_b();
    let rho = t.gamma.rho();
    let gen = t.teich(1);
    let img = t.galois_apply(rho, &gen);
    assert_ne!(img, gen);
    assert_eq!(t.galois_apply(rho, &img), gen);
    // ρ is the inverse of x ↦ x^q on Teichmüller elements
    assert_eq!(t.pow(&img, t.q()), gen);
}

#[test]
fn invalid_inertia_rejected() {
    let params = TowerParams::new(3, 1, 4, 1, 0, 4);
    assert!(matches!(
        realize_tower(params, 40),
        Err(TowerError::Group(GroupError::InvalidParams { .. }))
    ));
    let small = TowerParams::new(3, 1, 2, 1, 0, 4);
    assert_eq!(
        realize_tower(small, 9).unwrap_err(),
        TowerError::PrecisionTooSmall {
            given: 9,
            needed: 10
        }
    );
}

#[test]
fn nonzero_m_is_realized() {
    // Γ = ⟨ρ⟩ ≅ Z/4 with ρ² = δ.
    let params = TowerParams {
        tau_kind: TauKind::RamifiedOverKPlus,
        ..TowerParams::new(3, 1, 2, 2, 1, 4)
    };
    let t = realize_tower(params, 12).unwrap();
    assert_ne!(t.omega_exp, 0);
    let pi = t.uniformizer();
    let rho = t.gamma.rho();
    let rho2 = t.gamma.mul(rho, rho);
    assert_eq!(
        t.galois_apply(rho2, &pi),
        t.galois_apply(t.gamma.delta(), &pi)
    );
    assert_eq!(t.find_beta(), Err(TowerError::NoSuchGenerator));
}

#[test]
fn conjugation_relation_on_random_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in [
        inst_c(),
        model(5, 1, 2, 2, 0, 4),
        model(5, 1, 4, 1, 0, 4),
        model(3, 1, 1, 4, 0, 4),
    ] {
        let g = &t.gamma;
        let lhs = g.mul(g.mul(g.inv(g.rho()), g.delta()), g.rho());
        let rhs = g.pow(g.delta(), t.q() as i64);
        for _ in 0..100 {
            let x = t.random(&mut rng);
            assert_eq!(t.galois_apply(lhs, &x), t.galois_apply(rhs, &x));
        }
        // ρ^{f(q-1)} = 1
        let big = g.pow(g.rho(), (t.params.f * (t.q() - 1)) as i64);
        assert_eq!(big, g.identity());
    }
}

#[test]
fn automorphisms_respect_ring_operations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = model(5, 1, 2, 2, 0, 4);
    for g in t.gamma.elements() {
        for _ in 0..20 {
            let a = t.random(&mut rng);
            let b = t.random(&mut rng);
            let ga = t.galois_apply(g, &a);
            let gb = t.galois_apply(g, &b);
            assert_eq!(t.galois_apply(g, &t.mul(&a, &b)), t.mul(&ga, &gb));
            assert_eq!(t.galois_apply(g, &t.add(&a, &b)), t.add(&ga, &gb));
        }
    }
}

#[test]
fn fixed_ring_is_base() {
    for t in [inst_a(), inst_b(), inst_c(), model(5, 1, 2, 2, 0, 4)] {
        let all = t.gamma.elements();
        let base = t.base();
        let qm1 = t.ring.unit_order();
        for j in 0..t.e() {
            for i in 0..qm1 {
                let x = t.monomial(i as i64, j);
                let fixed = t.is_fixed_by(&x, &all);
                let in_f = j == 0 && i % base.teich_gen == 0;
                assert_eq!(fixed, in_f, "T^{i} ϖ^{j}");
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = t.random(&mut rng);
            let tr = t.trace_to(&base, &x);
            assert!(t.is_fixed_by(&tr, &all));
            assert!(tr[t.d()..].iter().all(|&c| c == 0));
        }
    }
}

#[test]
fn traces_and_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in [inst_a(), inst_b(), inst_c()] {
        let n = t.params.n() as i64;
        let beta = t.find_beta().unwrap();
        assert_eq!(
            t.trace_norm(SubfieldTag::KPlus, &beta, false).unwrap(),
            t.zero()
        );
        assert_eq!(
            t.trace_norm(SubfieldTag::F, &t.one(), false).unwrap(),
            t.scalar(2 * n)
        );
        let u = t.random_unit(&mut rng);
        let ut = t.galois_apply(t.tau, &u);
        let w = t.mul(&u, &t.unit_inv(&ut));
        assert_eq!(t.trace_norm(SubfieldTag::KPlus, &w, true).unwrap(), t.one());
        assert!(
            t.trace_norm(SubfieldTag::KDeltaPrime, &w, true).is_ok() == (t.lattice().len() > 4)
        );
    }
}

#[test]
fn beta_examples() {
    let a = inst_a();
    assert_eq!(a.find_beta().unwrap(), a.uniformizer());
    // quadratic unramified: β = a with a² ∈ F a non-square unit
    let b = inst_b();
    let beta = b.find_beta().unwrap();
    let sq = b.mul(&beta, &beta);
    assert!(b.is_fixed_by(&sq, &b.gamma.elements()));
    let base = b.base();
    let k = b.leading_log(&sq).unwrap();
    assert_eq!(k % base.teich_gen, 0);
    assert_eq!((k / base.teich_gen) % 2, 1);
    for t in [
        inst_c(),
        model(5, 1, 2, 2, 0, 4),
        model(3, 1, 1, 4, 0, 4),
        model(5, 1, 4, 1, 0, 4),
    ] {
        let beta = t.find_beta().unwrap();
        assert!(t.is_symplectic_generator(&beta));
        assert!(t.shintani_conditions(&beta));
    }
}

#[test]
fn shintani_criterion_small_residue_degree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for t in [
        inst_a(),
        inst_b(),
        inst_c(),
        model(5, 1, 2, 2, 0, 4),
        model(5, 2, 2, 1, 0, 4),
    ] {
        let mut hits = [0usize; 2];
        for _ in 0..300 {
            let mut x = t.random(&mut rng);
            // bias towards non-generators: sometimes kill a_1 or force a_0 into F
            match rng.gen_range(0..3) {
                0 if t.e() > 1 => {
                    let d = t.d();
                    for c in &mut x[d..2 * d] {
                        *c = (*c * t.p()) % t.ring.modulus;
                    }
                }
                1 => {
                    let d = t.d();
                    let base = t.base();
                    let s = t.teich((base.teich_gen * rng.gen_range(0..t.q() - 1)) as i64);
                    let pert: Vec<u64> =
                        x[..d].iter().map(|c| c * t.p() % t.ring.modulus).collect();
                    let a0 = t.ring.add(&s[..d], &pert);
                    x[..d].copy_from_slice(&a0);
                }
                _ => {}
            }
            let lhs = t.generates_integers(&x);
            assert_eq!(lhs, t.shintani_conditions(&x), "{} {:?}", t.params, x);
            hits[usize::from(lhs)] += 1;
        }
        assert!(hits[0] > 0 && hits[1] > 0);
    }
}

#[test]
fn shintani_literal_fails_for_residue_degree_four() {
    // a ∈ F_9 \ F_3 inside F_81: a^{Fr} ≠ a, yet O_F[a] has residue field F_9.
    let t = model(3, 1, 1, 4, 0, 4);
    let a = t.teich(10);
    assert!(t.shintani_conditions(&a));
    assert!(!t.generates_integers(&a));
}

#[test]
fn unit_group_orders() {
    for t in [inst_a(), inst_b(), inst_c(), model(5, 1, 2, 2, 0, 4)] {
        for l in t.lattice() {
            let sub = t.subfield_from_info(l);
            for n in 1..=3usize {
                let g = unit_group_quotient(&t, &sub, n).unwrap();
                assert_eq!(
                    g.order(),
                    (sub.q_l - 1) * sub.q_l.pow(n as u32 - 1),
                    "{}",
                    sub.info.tag
                );
            }
        }
        let k1 = unit_group_quotient(&t, &t.top(), 1).unwrap();
        assert_eq!(k1.order(), t.q_k() - 1);
    }
    assert!(matches!(
        unit_group_quotient(&inst_a(), &inst_a().top(), 100),
        Err(TowerError::PrecisionTooSmall { .. })
    ));
}

#[test]
fn norm_one_group_orders() {
    let cases = [
        ((3, 2, 1), 162u64),
        ((3, 1, 2), 108),
        ((3, 2, 2), 8748),
        ((5, 2, 1), 1250),
        ((5, 1, 2), 750),
        ((5, 4, 1), 781_250),
        ((5, 2, 2), 468_750),
        ((5, 1, 4), 406_250),
        ((3, 1, 4), 7290),
    ];
    for ((p, e, f), want) in cases {
        let t = model(p, 1, e, f, 0, 4);
        let g = norm_one_group(&t, (e * 4) as usize).unwrap();
        assert_eq!(g.order(), want, "p={p} e={e} f={f}");
    }
}

#[test]
fn coordinates_are_homomorphic() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let t = inst_c();
    let g = norm_one_group(&t, 8).unwrap();
    let full = unit_group_quotient(&t, &t.top(), 8).unwrap();
    let add = |a: &[u64], b: &[u64], inv: &[u64]| -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(inv)
            .map(|((x, y), s)| (x + y) % s)
            .collect()
    };
    for _ in 0..50 {
        let u = t.random_unit(&mut rng);
        let v = t.random_unit(&mut rng);
        let cu = full.coords(&t, &u).unwrap();
        let cv = full.coords(&t, &v).unwrap();
        assert_eq!(
            full.coords(&t, &t.mul(&u, &v)).unwrap(),
            add(&cu, &cv, full.invariants())
        );
        assert_eq!(full.element(&t, &cu), t.truncate(&u, 8));
        let nu = t.mul(&u, &t.unit_inv(&t.galois_apply(t.tau, &u)));
        let nv = t.mul(&v, &t.unit_inv(&t.galois_apply(t.tau, &v)));
        let a = g.coords(&t, &nu).unwrap();
        let b = g.coords(&t, &nv).unwrap();
        assert_eq!(
            g.coords(&t, &t.mul(&nu, &nv)).unwrap(),
            add(&a, &b, g.invariants())
        );
        assert_eq!(g.element(&t, &a), t.truncate(&nu, 8));
        // a unit outside the norm-one group is rejected
        if t.norm_to(&t.subfield(SubfieldTag::KPlus).unwrap(), &t.truncate(&u, 8)) != t.one() {
            let tu = t.truncate(&u, 8);
            let nrm = t.truncate(&t.norm_to(&t.subfield(SubfieldTag::KPlus).unwrap(), &tu), 8);
            if nrm != t.one() {
                assert!(g.coords(&t, &tu).is_none());
            }
        }
    }
}

#[test]
fn norm_kernel_brute_force() {
    // |ker N_{K/K_+}| on (O_K/p_K^2)^× for the ramified n = 1, q = 3 case.
    let t = inst_a();
    let kp = t.subfield(SubfieldTag::KPlus).unwrap();
    let mut count = 0;
    for a in 1..3i64 {
        for b in 0..3i64 {
            let u = t.add(&t.scalar(a), &t.mul(&t.scalar(b), &t.uniformizer()));
            let n = t.truncate(&t.norm_to(&kp, &u), 2);
            if n == t.one() {
                count += 1;
            }
        }
    }
    assert_eq!(count, 6);
}

#[test]
fn centralizer_of_beta_is_polynomial_ring() {
    // Matrices over Z/9 commuting with multiplication by β on O_K/9O_K are
    // exactly (Z/9)[β], for n = 1 and both quadratic types.
    for t in [inst_a(), inst_b()] {
        let beta = t.find_beta().unwrap();
        let m = 9u64;
        let basis: Vec<Elem> = (0..2)
            .map(|i| {
                let mut v = t.zero();
                v[i] = 1;
                v
            })
            .collect();
        // column i = coefficients of β·basis_i
        let bm: Vec<Vec<u64>> = basis
            .iter()
            .map(|b| t.mul(&beta, b).iter().map(|c| c % m).collect())
            .collect();
        let mat = |c: &[u64; 4]| [[c[0], c[1]], [c[2], c[3]]];
        let bmat = [[bm[0][0], bm[1][0]], [bm[0][1], bm[1][1]]];
        let mul = |x: [[u64; 2]; 2], y: [[u64; 2]; 2]| {
            let mut z = [[0u64; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    z[i][j] = (x[i][0] * y[0][j] + x[i][1] * y[1][j]) % m;
                }
            }
            z
        };
        let mut poly = std::collections::BTreeSet::new();
        for a in 0..m {
            for b in 0..m {
                let mut z = [[0u64; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        z[i][j] = (b * bmat[i][j] + if i == j { a } else { 0 }) % m;
                    }
                }
                poly.insert(z);
            }
        }
        let mut cent = std::collections::BTreeSet::new();
        for code in 0..m.pow(4) {
            let c = [code % m, (code / m) % m, (code / 81) % m, code / 729];
            let x = mat(&c);
            if mul(x, bmat) == mul(bmat, x) {
                cent.insert(x);
            }
        }
        assert_eq!(poly.len(), 81);
        assert_eq!(cent, poly);
    }
}
