//! Acceptance run: one pass/fail line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use tamelocal::chars::{CharSetup, FiniteCharacter};
use tamelocal::exactnum::{rat, rint, Cyclo};
use tamelocal::galoisgrp::{build_gamma, SubfieldTag};
use tamelocal::localfactors::{
    adjoint_character, adjoint_pieces, artin_conductor, artin_conductor_by_pieces, epsilon_adjoint,
    frohlich_queyrut_check, gauss_sum, l_factor_adjoint, lambda_factor, principal_parameter,
    GaussRoute, LPolynomial, LambdaMode,
};
use tamelocal::tamefield::TowerParams;
use tamelocal::verifier::{
    formal_degree_lhs, gamma0_closed_form, standard_grid, sweep, symplectic_order_brute,
    symplectic_order_closed_form, verify_formal_degree, verify_root_number, Instance, Status,
    TowerCache,
};
use tamelocal::weilrep::{build_weil_quotient, find_fundamental_element, CocycleProvider};

type Outcome = Result<String, String>;

fn setup(p: u64, e: u64, f: u64, r: u64) -> CharSetup {
    CharSetup::new(TowerParams::new(p, 1, e, f, 0, r)).expect("realizable tower")
}

fn abc() -> [CharSetup; 3] {
    [setup(3, 2, 1, 4), setup(3, 1, 2, 4), setup(3, 2, 2, 4)]
}

fn providers(s: &CharSetup) -> Vec<CocycleProvider> {
    let mut v = vec![
        CocycleProvider::Trivial,
        CocycleProvider::RandomValid(1),
        CocycleProvider::RandomValid(2),
    ];
    if let Some(a) = find_fundamental_element(s) {
        v.push(CocycleProvider::CyclicFundamental(a));
    }
    v
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let el = start.elapsed();
    ensure(el < limit, || {
        format!("{what} took {el:?}, limit {limit:?}")
    })
}

fn c1_involutions() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for q in [3u64, 5, 7, 9, 11, 13, 25, 27] {
        for e in 1..=48u64 {
            for f in 1..=48 / e {
                if (e * f) % 2 == 1 {
                    continue;
                }
                for m in 0..e {
                    let Ok(g) = build_gamma(e, f, q, m) else {
                        continue;
                    };
                    let h = g.involutions();
                    ensure(h.elements == g.predicted_involutions(), || {
                        format!("e={e} f={f} q={q} m={m}")
                    })?;
                    ensure(h.elements.iter().all(|&x| g.is_central(x)), || {
                        format!("non-central e={e} f={f} q={q}")
                    })?;
                    checked += 1;
                }
            }
        }
    }
    within(start, Duration::from_secs(1), "involution scan")?;
    Ok(format!("{checked} groups"))
}

fn c2_conductors() -> Outcome {
    for (s, want) in [(setup(3, 2, 1, 4), 6), (setup(3, 1, 2, 4), 4)] {
        let start = Instant::now();
        let prm = *s.params();
        let t = &s.tower;
        for th in s.admissible_thetas() {
            let vt = s.vartheta(&th);
            ensure(s.conductor_tilde(&vt) == want, || {
                format!("{prm}: f(ϑ̃) ≠ {want}")
            })?;
        }
        let er1 = (prm.e * (prm.r - 1)) as usize;
        let mut k0 = t
            .subfield(SubfieldTag::K0)
            .map_err(|e| e.to_string())?
            .info
            .subgroup;
        k0.sort();
        let mut all = t.gamma.elements();
        all.sort();
        let vt = s.vartheta(&s.theta(0).map_err(|e| e.to_string())?);
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
            ensure(got == want, || format!("{prm}: twist fixers at k={k}"))?;
        }
        within(start, Duration::from_secs(10), "conductor instance")?;
    }
    Ok("f(ϑ̃) = 6, 4; twist fixers for k in [2, er]".into())
}

fn c3_decomposition() -> Outcome {
    let mut runs = 0;
    for s in abc() {
        let start = Instant::now();
        let provs = providers(&s);
        ensure(provs.len() >= 3, || "fewer than 3 providers".into())?;
        let vt = s.vartheta(&s.theta(0).map_err(|e| e.to_string())?);
        for prov in provs {
            let g = build_weil_quotient(&s, &prov).map_err(|e| e.to_string())?;
            let rep = g.verify_wedge_square(&vt);
            ensure(rep.pass, || {
                format!(
                    "{} {}: {} mismatches",
                    s.params(),
                    rep.cocycle,
                    rep.mismatch_count
                )
            })?;
            runs += 1;
        }
        within(start, Duration::from_secs(60), "decomposition instance")?;
    }
    Ok(format!("{runs} (instance, cocycle) pairs"))
}

fn c4_irreducibility() -> Outcome {
    let mut count = 0;
    for s in abc() {
        let g = build_weil_quotient(&s, &CocycleProvider::Trivial).map_err(|e| e.to_string())?;
        let k = s.ubar.invariants().len();
        let tau = g.gamma_index(s.tower.tau);
        // characters of G trivial on Ū: ν(δ), ν(ρ) ∈ {±1} when a homomorphism
        let mut nus = Vec::new();
        for vd in 0..2 {
            for vr in 0..2 {
                if let Ok(nu) = g.linear_char(2, vd, vr, FiniteCharacter::trivial(k)) {
                    nus.push(nu);
                }
            }
        }
        // ν nontrivial on Ū: ν·χ ≠ χ, so no ν-invariant form
        let twist = g
            .linear_char(2, 0, 0, nontrivial_quadratic(&s))
            .map_err(|e| e.to_string())?;
        for th in s.admissible_thetas() {
            let chi = g.induce_from_ubar(&s.vartheta(&th));
            ensure(g.inner_product(&chi, &chi) == Cyclo::one(), || {
                format!("{}: reducible", s.params())
            })?;
            for nu in &nus {
                let want = Cyclo::root_of_unity(nu.modulus, nu.on_gamma[tau] as i64);
                ensure(g.fs_indicator(nu, &chi) == Some(want), || {
                    format!("{}: indicator ≠ ν(τ)", s.params())
                })?;
            }
            ensure(g.fs_indicator(&twist, &chi).is_none(), || {
                format!("{}: ν·χ = χ for ν nontrivial on Ū", s.params())
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} admissible θ"))
}

/// A quadratic character of `Ū` that is nontrivial.
fn nontrivial_quadratic(s: &CharSetup) -> FiniteCharacter {
    let inv = s.ubar.invariants();
    let exps = inv.iter().map(|&o| u64::from(o % 2 == 0)).collect();
    FiniteCharacter { modulus: 2, exps }.reduced()
}

fn c5_artin_conductor() -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    for s in abc() {
        let prm = *s.params();
        let want = 2 * prm.n() * prm.n() * prm.r;
        let vt = s.vartheta(&s.theta(0).map_err(|e| e.to_string())?);
        let g =
            build_weil_quotient(&s, &CocycleProvider::RandomValid(7)).map_err(|e| e.to_string())?;
        let filt = artin_conductor(&g, &adjoint_character(&g, &vt)).map_err(|e| e.to_string())?;
        let pieces = artin_conductor_by_pieces(&s, &vt).map_err(|e| e.to_string())?;
        ensure(filt == rint(want as i64) && pieces == want as i64, || {
            format!("{prm}: {filt} vs {pieces} vs {want}")
        })?;
        out.push(want.to_string());
    }
    within(start, Duration::from_secs(30), "conductors")?;
    Ok(format!(
        "a = {} by filtration and by pieces",
        out.join(", ")
    ))
}

fn c6_l_factor() -> Outcome {
    let one_plus_t = LPolynomial {
        coeffs: vec![rint(1), rint(1)],
    };
    for (s, want) in abc()
        .into_iter()
        .zip([LPolynomial::one(), one_plus_t.clone(), one_plus_t])
    {
        let vt = s.vartheta(&s.theta(1).map_err(|e| e.to_string())?);
        for prov in providers(&s) {
            let g = build_weil_quotient(&s, &prov).map_err(|e| e.to_string())?;
            let l = l_factor_adjoint(&g, &vt).map_err(|e| e.to_string())?;
            ensure(l == want, || {
                format!("{} {}: P = {}", s.params(), g.label, l.render())
            })?;
        }
    }
    Ok("P = 1, 1 + T, 1 + T across providers".into())
}

fn c7_epsilon_lambda() -> Outcome {
    let (mut gauss, mut lambdas, mut fq) = (0, 0, 0);
    for s in abc() {
        let t = &s.tower;
        for th in s.admissible_thetas() {
            let vt = s.vartheta(&th);
            let pieces = adjoint_pieces(&s, &vt).map_err(|e| e.to_string())?;
            for chi in pieces
                .on_k
                .iter()
                .chain(pieces.pi3.iter().map(|(_, c)| c))
                .filter(|c| c.conductor() > 0)
            {
                let k = chi.field.different() as usize + chi.conductor();
                let gs = gauss_sum(t, chi, &t.scalar(-1), k, GaussRoute::Auto)
                    .map_err(|e| e.to_string())?;
                ensure(gs.abs_square() == Cyclo::one(), || {
                    format!("{}: |G|² ≠ 1", s.params())
                })?;
                gauss += 1;
            }
            let rep = frohlich_queyrut_check(&s, &s.tilde(&vt)).map_err(|e| e.to_string())?;
            ensure(
                rep.holds && rep.beta_side == vt.value(&s.ubar.minus_one).render(),
                || format!("{}: Fröhlich–Queyrut {:?}", s.params(), rep),
            )?;
            fq += 1;
        }
        let lattice = t.gamma.subfield_lattice(t.tau).map_err(|e| e.to_string())?;
        let base = t.base();
        for info in lattice {
            let l = t.subfield_from_info(info);
            let deg = l.e() * l.f();
            if deg != 2 && deg != 4 {
                continue;
            }
            let a = lambda_factor(t, &l, &base, LambdaMode::ByInductivity);
            let b = lambda_factor(t, &l, &base, LambdaMode::ClosedForm);
            if let (Ok(a), Ok(b)) = (&a, &b) {
                ensure(a == b, || {
                    format!("{}: λ({}) modes differ", s.params(), l.info.tag)
                })?;
                lambdas += 1;
            }
        }
    }
    ensure(lambdas > 0, || "no λ comparison ran".into())?;
    Ok(format!(
        "{gauss} Gauss sums, {lambdas} λ pairs, {fq} Fröhlich–Queyrut checks"
    ))
}

fn c8_root_number() -> Outcome {
    let cache = TowerCache::new();
    for s in abc() {
        for th in s.admissible_thetas().iter().step_by(7) {
            let asm = epsilon_adjoint(&s, &s.vartheta(th)).map_err(|e| e.to_string())?;
            ensure(Some(&asm.w) == asm.w_closed.as_ref(), || {
                format!("{}: assembly ≠ closed form", s.params())
            })?;
        }
    }
    let mut lines = Vec::new();
    for (p, e, f) in [(3, 2, 1), (3, 1, 2), (3, 2, 2), (5, 4, 1)] {
        let inst = Instance::new(TowerParams::new(p, 1, e, f, 0, 4), 0);
        let rep = verify_root_number(&inst, &cache).map_err(|e| e.to_string())?;
        ensure(rep.status == Status::AsExpected, || format!("{:?}", rep))?;
        let asm = rep
            .checks
            .iter()
            .find(|c| c.name == "root_number" && c.route == "assembly")
            .ok_or("no check")?;
        lines.push(format!(
            "q={p} e={e} f={f}: {}",
            if asm.equal { "equal" } else { "unequal" }
        ));
    }
    ensure(lines[3].ends_with("unequal"), || {
        "failure instance did not fail".into()
    })?;
    Ok(lines.join("; "))
}

fn c9_formal_degree() -> Outcome {
    let start = Instant::now();
    ensure(principal_parameter(1, 3).gamma0 == rat(9, 4), || {
        "γ₀(1, 3) ≠ 9/4".into()
    })?;
    for (n, q) in [(1, 3), (2, 3), (1, 5), (2, 5)] {
        ensure(
            principal_parameter(n, q).gamma0 == gamma0_closed_form(n as u64, q),
            || format!("γ₀({n}, {q})"),
        )?;
    }
    let cache = TowerCache::new();
    let mut fds = Vec::new();
    for (e, f) in [(2, 1), (1, 2), (2, 2)] {
        let inst = Instance::new(TowerParams::new(3, 1, e, f, 0, 4), 0);
        let rep = verify_formal_degree(&inst, &cache).map_err(|e| e.to_string())?;
        ensure(rep.status == Status::AsExpected, || format!("{:?}", rep))?;
        fds.push(tamelocal::exactnum::render_rational(&formal_degree_lhs(
            &inst.params,
        )));
    }
    ensure(fds[0] == "18" && fds[1] == "27", || format!("FD = {fds:?}"))?;
    within(start, Duration::from_secs(5), "formal degree")?;
    Ok(format!("FD = {}", fds.join(", ")))
}

fn c10_counting() -> Outcome {
    let brute = symplectic_order_brute(1, 3);
    ensure(
        brute == 24 && symplectic_order_closed_form(1, 3) == rint(24),
        || format!("|Sp₂(F₃)| = {brute}"),
    )?;
    let mut counts = Vec::new();
    for s in abc() {
        let got = s.admissible_thetas().len() as u64;
        ensure(got == s.predicted_theta_count(), || {
            format!("{}: {got} θ", s.params())
        })?;
        counts.push(got.to_string());
    }
    Ok(format!("|Sp₂(F₃)| = 24, θ counts {}", counts.join(", ")))
}

fn c11_sweep() -> Outcome {
    let start = Instant::now();
    let grid = standard_grid(&[(3, 1), (5, 1)], &[1, 2], &[0], 4, 0);
    let rep = sweep(
        &grid,
        std::thread::available_parallelism().map_or(1, usize::from),
        &TowerCache::new(),
    );
    let bad: Vec<String> = rep
        .reports
        .iter()
        .filter(|r| r.status != Status::AsExpected)
        .map(|r| format!("{:?}", r.instance))
        .collect();
    ensure(bad.is_empty(), || {
        format!("not as expected: {}", bad.join(", "))
    })?;
    within(start, Duration::from_secs(600), "sweep")?;
    Ok(format!(
        "{} instances in {:.1?}",
        grid.len(),
        start.elapsed()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("involution tables", c1_involutions),
        ("conductors of ϑ̃", c2_conductors),
        ("decomposition of ∧²φ₁", c3_decomposition),
        ("irreducibility and indicator", c4_irreducibility),
        ("Artin conductor, two routes", c5_artin_conductor),
        ("L-factor", c6_l_factor),
        ("ε/λ engine", c7_epsilon_lambda),
        ("root number", c8_root_number),
        ("formal degree", c9_formal_degree),
        ("counting oracle", c10_counting),
        ("full sweep", c11_sweep),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let el = start.elapsed();
        match out {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({el:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({el:.2?})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
