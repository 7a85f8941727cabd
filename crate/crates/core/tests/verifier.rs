use tamelocal::exactnum::{rat, rint};
use tamelocal::tamefield::TowerParams;
use tamelocal::verifier::{
    dim_delta, formal_degree_lhs, gamma0_closed_form, realizable_towers,
    root_number_expected_equal, standard_grid, sweep, symplectic_order_brute,
    symplectic_order_closed_form, to_csv, verify_decomposition, verify_formal_degree,
    verify_root_number, CocycleChoice, Instance, Status, TowerCache,
};

fn inst(p: u64, e: u64, f: u64, r: u64) -> Instance {
    Instance::new(TowerParams::new(p, 1, e, f, 0, r), 0)
}

#[test]
fn formal_degree_closed_forms() {
    let a = TowerParams::new(3, 1, 2, 1, 0, 4);
    let b = TowerParams::new(3, 1, 1, 2, 0, 4);
    assert_eq!(dim_delta(&a), rint(36));
    assert_eq!(formal_degree_lhs(&a), rint(18));
    assert_eq!(dim_delta(&b), rint(54));
    assert_eq!(formal_degree_lhs(&b), rint(27));
    assert_eq!(gamma0_closed_form(1, 3), rat(9, 4));
}

#[test]
fn symplectic_group_order_by_enumeration() {
    assert_eq!(symplectic_order_brute(1, 3), 24);
    assert_eq!(symplectic_order_closed_form(1, 3), rint(24));
    assert_eq!(symplectic_order_brute(1, 5), 120);
    assert_eq!(symplectic_order_closed_form(1, 5), rint(120));
    // |Sp_4(F_3)| = 51840
    assert_eq!(symplectic_order_closed_form(2, 3), rint(51840));
}

#[test]
fn formal_degree_identity_on_a_b_c() {
    let cache = TowerCache::new();
    for (i, want) in [
        (inst(3, 2, 1, 4), "18"),
        (inst(3, 1, 2, 4), "27"),
        (inst(3, 2, 2, 4), ""),
    ] {
        let rep = verify_formal_degree(&i, &cache).unwrap();
        assert_eq!(rep.status, Status::AsExpected, "{rep:?}");
        let fd = rep
            .checks
            .iter()
            .find(|c| c.name == "formal_degree")
            .unwrap();
        if !want.is_empty() {
            assert_eq!(fd.lhs, want);
        }
        // assembly, closed form and Weil quotient routes all present
        assert_eq!(
            rep.checks
                .iter()
                .filter(|c| c.name == "formal_degree")
                .count(),
            3
        );
    }
}

#[test]
fn root_number_verdicts() {
    let cache = TowerCache::new();
    for i in [inst(3, 2, 1, 4), inst(3, 1, 2, 4), inst(3, 2, 2, 4)] {
        assert!(root_number_expected_equal(&i.params));
        let rep = verify_root_number(&i, &cache).unwrap();
        assert_eq!(rep.status, Status::AsExpected, "{rep:?}");
        assert!(rep
            .checks
            .iter()
            .filter(|c| c.name == "root_number")
            .all(|c| c.equal));
    }
    let bad = inst(5, 4, 1, 4);
    assert!(!root_number_expected_equal(&bad.params));
    let rep = verify_root_number(&bad, &cache).unwrap();
    assert_eq!(rep.status, Status::AsExpected, "{rep:?}");
    let w = rep.checks.iter().find(|c| c.route == "assembly").unwrap();
    assert!(!w.equal && !w.expected);
    assert!(rep.notes.iter().any(|n| n == "w/theta(-1) = -1"));
}

#[test]
fn theta_minus_one_for_every_theta() {
    let cache = TowerCache::new();
    for (p, e, f) in [(3, 2, 1), (3, 1, 2)] {
        let s = cache.get(TowerParams::new(p, 1, e, f, 0, 4)).unwrap();
        for k in 0..s.admissible_thetas().len() {
            let rep = verify_root_number(&Instance::new(s.params().clone(), k), &cache).unwrap();
            assert_eq!(rep.status, Status::AsExpected);
            assert!(rep
                .checks
                .iter()
                .any(|c| c.name == "theta_minus_one" && c.equal));
        }
    }
}

#[test]
fn decomposition_under_cocycles() {
    let cache = TowerCache::new();
    for mut i in [inst(3, 2, 1, 4), inst(3, 1, 2, 4)] {
        for c in [
            CocycleChoice::Trivial,
            CocycleChoice::Random(4),
            CocycleChoice::Cyclic,
        ] {
            i.cocycle = c;
            let rep = verify_decomposition(&i, &cache).unwrap();
            assert_eq!(rep.status, Status::AsExpected, "{rep:?}");
        }
    }
}

#[test]
fn realizable_grid() {
    // e = 4 needs 4 | q − 1
    assert_eq!(
        realizable_towers(3, 1, 2, 0, 4)
            .iter()
            .map(|t| (t.e, t.f))
            .collect::<Vec<_>>(),
        vec![(1, 4), (2, 2)]
    );
    assert_eq!(realizable_towers(5, 1, 2, 0, 4).len(), 3);
    assert_eq!(
        standard_grid(&[(3, 1), (5, 1)], &[1, 2], &[0], 4, 0).len(),
        9
    );
}

#[test]
fn sweep_isolates_errors_and_is_deterministic() {
    let cache = TowerCache::new();
    assert!(sweep(&[], 2, &cache).all_as_expected);
    let cells = vec![inst(3, 2, 1, 4), inst(3, 4, 1, 4), inst(3, 1, 2, 4)];
    let rep = sweep(&cells, 2, &cache);
    assert_eq!(rep.reports[0].status, Status::AsExpected);
    assert_eq!(rep.reports[1].status, Status::Error);
    assert!(rep.reports[1].notes[0].starts_with("InvalidParams"));
    assert_eq!(rep.reports[2].status, Status::AsExpected);
    assert_eq!(rep.exit_code(), 1);
    let again = sweep(&cells, 1, &TowerCache::new());
    assert_eq!(
        serde_json::to_string(&rep).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
    let csv = to_csv(&rep.reports).unwrap();
    assert!(csv
        .lines()
        .next()
        .unwrap()
        .starts_with("p,f0,e,f,m,r,theta_index"));
    assert!(csv.contains("error"));
}
