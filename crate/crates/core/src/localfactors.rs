//! Local factors: Gauss sums, abelian ε-factors after Tate, λ-factors of
//! tame Galois subextensions, Artin conductors, `L`- and `γ`-factors of the
//! adjoint parameter, and the principal parameter `φ₀`.
//!
//! Conventions: `ψ_F` has conductor exponent `0`, `ψ_L = ψ_F ∘ T_{L/F}` has
//! `n(ψ_L) = d(L) = e(L/F) − 1`, and unless stated otherwise each field
//! carries the measure self-dual for its character, so `∫_{O_L} dx =
//! q_L^{-d(L)/2}`. On `F` this is the unit measure.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_traits::Zero;

use num_integer::lcm;
use serde::Serialize;
use thiserror::Error;

use crate::chars::{CharError, CharSetup, FiniteCharacter, NormResidue, QuasiChar, UbarModule};
use crate::exactnum::{rat, render_rational, rint, Cyclo, Rational, RootHistogram};
use crate::galoisgrp::{GElem, SubfieldTag};
use crate::tamefield::units::unit_group_quotient;
use crate::tamefield::{Elem, SubField, TowerError, TowerModel};
use crate::weilrep::{ClassFunction, WeilQuotient};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LocalError {
    #[error(transparent)]
    Char(#[from] CharError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("Gauss sum needs c of valuation -{expected:?}, got -{given}")]
    WrongValuation {
        expected: Option<usize>,
        given: usize,
    },
    #[error("precision {given} too small, need {needed}")]
    Precision { given: usize, needed: usize },
    #[error("check not applicable: {0}")]
    Inapplicable(String),
    #[error("unsupported extension: {0}")]
    UnsupportedExtension(String),
    #[error("conductor {0} is not an integer")]
    NonIntegerConductor(String),
    #[error("expected a rational value: {0}")]
    NonRational(String),
    #[error("inertia-fixed spaces depend on the inertia lift")]
    InertiaLiftAmbiguous,
}

/// `q_L^{k/2}` as an exact number.
fn q_half_power(t: &TowerModel, l: &SubField, k: i64) -> Cyclo {
    let deg = (t.params.f0 * l.f()) as i64;
    Cyclo::prime_half_power(t.p(), deg * k)
}

/// How a Gauss sum is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaussRoute {
    /// Sum over all of `(O_L/p_L^f)^×`.
    Direct,
    /// Sum over `(O_L/p_L^{⌈f/2⌉})^×`, keeping the stationary points.
    StationaryPhase,
    /// Direct for small groups, stationary phase otherwise.
    Auto,
}

const DIRECT_LIMIT: u64 = 20_000;

/// `G_ψ(χ^{-1}, c) = q_L^{-f/2} Σ_{t ∈ (O_L/p_L^f)^×} χ^{-1}(t) ψ_L(ct)` with
/// `c = u·ϖ_L^{-k}`, `ϖ_L` the model uniformizer of `L = χ.field` and `u`
/// a unit of `L`. Requires `f = f(χ) > 0` and `k = d(L) + f`.
pub fn gauss_sum(
    t: &TowerModel,
    chi: &QuasiChar,
    c_unit: &Elem,
    k: usize,
    route: GaussRoute,
) -> Result<Cyclo, LocalError> {
    let l = &chi.field;
    let f = chi.conductor();
    let d = l.different() as usize;
    if f == 0 {
        return Err(LocalError::WrongValuation {
            expected: None,
            given: k,
        });
    }
    if k != d + f {
        return Err(LocalError::WrongValuation {
            expected: Some(d + f),
            given: k,
        });
    }
    let (scale, s) = t.scaled_inverse_uniformizer_pow(l, k);
    if t.e() * s as usize > t.precision {
        return Err(LocalError::Precision {
            given: t.precision,
            needed: t.e() * s as usize,
        });
    }
    let c = t.mul(c_unit, &scale);
    let ps = t.p().pow(s);
    let m = lcm(chi.modulus, ps);
    let (cm, cp) = (m / chi.modulus, m / ps);
    let psi = |x: &Elem| t.psi_exponent(l, &t.mul(&c, x), s);
    let mut hist = RootHistogram::new(m);
    let j = f.div_ceil(2);
    let full = unit_group_quotient(t, l, f)?;
    let direct = match route {
        GaussRoute::Direct => true,
        GaussRoute::StationaryPhase => false,
        GaussRoute::Auto => full.order() <= DIRECT_LIMIT,
    };
    if direct {
        for coords in full.all_coords() {
            let u = full.lift(t, &coords);
            let a = chi.eval_unit(t, &u)?;
            hist.add((m - a * cm % m + psi(&u) * cp) % m, 1);
        }
        return Ok(&hist.to_cyclo() * &q_half_power(t, l, -(f as i64)));
    }
    // t = u(1 + g) with g ∈ p^j/p^f: both χ(1 + g) and ψ(cug) are additive
    // in g, so the inner sum is q_L^{f-j} or 0.
    let deg = t.params.f0 * l.f();
    let mut gens = Vec::new();
    for lev in j..f {
        let pik = t.pow(&l.uniformizer, lev as u64);
        for i in 0..deg {
            gens.push(t.mul(&pik, &t.teich((l.teich_gen * i) as i64)));
        }
    }
    let one_plus: Vec<u64> = gens
        .iter()
        .map(|g| chi.eval_unit(t, &t.add(&t.one(), g)))
        .collect::<Result<_, _>>()?;
    let coarse = unit_group_quotient(t, l, j)?;
    for coords in coarse.all_coords() {
        let u = coarse.lift(t, &coords);
        let stationary = gens
            .iter()
            .zip(&one_plus)
            .all(|(g, &a)| psi(&t.mul(&u, g)) * cp % m == a * cm % m);
        if stationary {
            let a = chi.eval_unit(t, &u)?;
            hist.add((m - a * cm % m + psi(&u) * cp) % m, 1);
        }
    }
    Ok(&hist.to_cyclo() * &q_half_power(t, l, f as i64 - 2 * j as i64))
}

/// The additive character `x ↦ ψ_L(a x)` with `a = unit·ϖ_L^{val}`.
#[derive(Clone, Debug)]
pub struct AddChar {
    pub unit: Elem,
    pub val: i64,
}

impl AddChar {
    /// `ψ_L` itself.
    #[must_use]
    pub fn standard(t: &TowerModel) -> Self {
        AddChar {
            unit: t.one(),
            val: 0,
        }
    }
}

/// `χ(a)` for `a = unit·ϖ_L^{val}`, as a number.
pub fn char_value(t: &TowerModel, chi: &QuasiChar, a: &AddChar) -> Result<Cyclo, LocalError> {
    let u = chi.eval_unit(t, &a.unit)? as i64;
    Ok(Cyclo::root_of_unity(
        chi.modulus,
        u + chi.pi_exp as i64 * a.val,
    ))
}

/// Tate's `ε(χ, ψ_a, dx)` for a quasi-character `χ` of `L^×`, with
/// `∫_{O_L} dx = q_L^{-measure_exp/2}`.
///
/// With `n = n(ψ_a)` and the self-dual measure: `χ(ϖ)^n q^{n/2}` if `χ` is
/// unramified, else `G_{ψ_a}(χ^{-1}, -ϖ^{-(n+f)})·χ(ϖ)^{n+f}·q^{(n+f)/2}`.
pub fn abelian_epsilon(
    t: &TowerModel,
    chi: &QuasiChar,
    psi: &AddChar,
    measure_exp: i64,
) -> Result<Cyclo, LocalError> {
    let l = &chi.field;
    let d = l.different() as i64;
    let n = d + psi.val;
    let f = chi.conductor() as i64;
    let at_pi = |k: i64| Cyclo::root_of_unity(chi.modulus, chi.pi_exp as i64 * k);
    // the self-dual measure for ψ_a has ∫_{O} = q^{-n/2}
    let rescale = q_half_power(t, l, n - measure_exp);
    let eps = if f == 0 {
        &at_pi(n) * &q_half_power(t, l, n)
    } else {
        // ψ_a(-ϖ^{-(n+f)} t) = ψ_L(-u ϖ^{-(d+f)} t)
        let g = gauss_sum(
            t,
            chi,
            &t.neg(&psi.unit),
            (d + f) as usize,
            GaussRoute::Auto,
        )?;
        &(&g * &at_pi(n + f)) * &q_half_power(t, l, n + f)
    };
    Ok(&eps * &rescale)
}

/// `ε(χ, ψ_L)` with the self-dual measure.
pub fn epsilon(t: &TowerModel, chi: &QuasiChar) -> Result<Cyclo, LocalError> {
    abelian_epsilon(t, chi, &AddChar::standard(t), chi.field.different() as i64)
}

/// Both sides of the Fröhlich–Queyrut identity for `ϑ̃` on `K^×`.
#[derive(Clone, Debug, Serialize)]
pub struct FqReport {
    pub gauss_side: String,
    pub beta_side: String,
    pub holds: bool,
}

/// Checks `G_{ψ_K}(ϑ̃^{-1}, -ϖ_K^{-(d(K)+f)})·ϑ̃(ϖ_K)^{d(K)+f} = ϑ̃(β)`,
/// which requires `ϑ̃` to be trivial on `K_+^×`.
pub fn frohlich_queyrut_check(s: &CharSetup, chi: &QuasiChar) -> Result<FqReport, LocalError> {
    let t = &s.tower;
    let kp = t.subfield(SubfieldTag::KPlus)?;
    let nl = chi.units.depth.div_ceil(kp.info.e_top as usize);
    let kp_units = unit_group_quotient(t, &kp, nl)?;
    let mut gens = kp_units.basis.clone();
    gens.push(kp.uniformizer.clone());
    for g in &gens {
        if chi.eval(t, g)? != 0 {
            return Err(LocalError::Inapplicable(
                "character is nontrivial on K_+^×".into(),
            ));
        }
    }
    let f = chi.conductor();
    let k = chi.field.different() as usize + f;
    let g = gauss_sum(t, chi, &t.scalar(-1), k, GaussRoute::Auto)?;
    let lhs = &g * &Cyclo::root_of_unity(chi.modulus, (chi.pi_exp * k as u64) as i64);
    let rhs = chi.value(t, &s.beta);
    Ok(FqReport {
        gauss_side: lhs.render(),
        beta_side: rhs.render(),
        holds: lhs == rhs,
    })
}

/// How a λ-factor is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LambdaMode {
    /// `ε(Ind 1_L, ψ_E) / ε(1_L, ψ_L)` with `Ind 1_L` split into the
    /// characters of `E^×/N(L^×)`; needs `L/E` abelian.
    ByInductivity,
    /// The closed forms for tame Galois `L/F`.
    ClosedForm,
}

/// `N_{L/E}(x)` for `x ∈ L`.
#[must_use]
pub fn relative_norm(t: &TowerModel, big: &SubField, small: &SubField, x: &[u64]) -> Elem {
    let s_big: BTreeSet<GElem> = big.info.subgroup.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut acc = t.one();
    for &g in &small.info.subgroup {
        if seen.contains(&g) {
            continue;
        }
        for &h in &s_big {
            seen.insert(t.gamma.mul(g, h));
        }
        acc = t.mul(&acc, &t.galois_apply(g, x));
    }
    acc
}

/// Whether `L/E` is Galois with abelian group.
#[must_use]
pub fn is_abelian_over(t: &TowerModel, big: &SubField, small: &SubField) -> bool {
    let g = &t.gamma;
    let s_big: BTreeSet<GElem> = big.info.subgroup.iter().copied().collect();
    let s_small = &small.info.subgroup;
    if !s_big.iter().all(|h| s_small.contains(h)) {
        return false;
    }
    let normal = s_small.iter().all(|&x| {
        s_big
            .iter()
            .all(|&h| s_big.contains(&g.mul(g.mul(x, h), g.inv(x))))
    });
    let commutators = s_small.iter().all(|&x| {
        s_small
            .iter()
            .all(|&y| s_big.contains(&g.mul(g.mul(x, y), g.inv(g.mul(y, x)))))
    });
    normal && commutators
}

/// The subfield fixed by the subgroup generated by `S_L` and `extra`.
fn over_field(t: &TowerModel, l: &SubField, extra: GElem, tag: SubfieldTag) -> SubField {
    let mut gens = l.info.subgroup.clone();
    gens.push(extra);
    t.subfield_from_info(t.gamma.subfield(tag, &gens))
}

/// Whether some `F ⊂ E ⊂ L` has `L/E` unramified quadratic.
#[must_use]
pub fn has_unramified_quadratic_top(t: &TowerModel, l: &SubField) -> bool {
    let n = l.info.subgroup.len();
    t.gamma.elements().into_iter().any(|g| {
        let e = over_field(t, l, g, SubfieldTag::E);
        e.info.subgroup.len() == 2 * n && e.info.e_top == l.info.e_top
    })
}

/// The Legendre symbol of an unramified `L` as a character of `O_L^×`.
fn legendre_of(t: &TowerModel, l: &SubField) -> Result<QuasiChar, LocalError> {
    let units = unit_group_quotient(t, l, 1)?;
    let exps = units
        .basis
        .iter()
        .map(|b| (t.leading_log(b).expect("unit") / l.teich_gen) % 2)
        .collect();
    Ok(QuasiChar {
        field: l.clone(),
        units,
        modulus: 2,
        exps,
        pi_exp: 0,
    })
}

/// `λ(L/E, ψ_E)` with self-dual measures on `E` and `L`.
pub fn lambda_factor(
    t: &TowerModel,
    big: &SubField,
    small: &SubField,
    mode: LambdaMode,
) -> Result<Cyclo, LocalError> {
    match mode {
        LambdaMode::ByInductivity => {
            if !is_abelian_over(t, big, small) {
                return Err(LocalError::UnsupportedExtension(
                    "Gal(L/E) is not abelian".into(),
                ));
            }
            let mut acc = q_half_power(t, big, -(big.different() as i64));
            for chi in NormResidue::new(t, big, small).characters(t)? {
                acc = &acc * &epsilon(t, &chi)?;
            }
            Ok(acc)
        }
        LambdaMode::ClosedForm => {
            if small.info.subgroup.len() as u64 != t.gamma.order() {
                return Err(LocalError::UnsupportedExtension(
                    "closed forms are over F".into(),
                ));
            }
            let (e, fl) = (big.e(), big.f());
            let q = t.params.q() as u128;
            if has_unramified_quadratic_top(t, big) {
                let half = (q.pow((fl / 2) as u32) - 1) / 2;
                return Ok(if e % 2 == 0 {
                    Cyclo::from_int(if half % 2 == 0 { -1 } else { 1 })
                } else {
                    Cyclo::one()
                });
            }
            if e % 2 == 1 {
                return Ok(Cyclo::one());
            }
            let l0 = over_field(t, big, t.gamma.delta(), SubfieldTag::K0);
            // ϖ_0 = N_{L/L_0}(ϖ_L) is a prime of L_0 and a norm from L
            let w0 = relative_norm(t, big, &l0, &big.uniformizer);
            let v = t.valuation(&w0);
            debug_assert_eq!(v as u64, l0.info.e_top);
            let u0 = t.mul(
                &t.div_uniformizer_pow(&w0, v),
                &t.teich(-(l0.uniformizer_teich as i64)),
            );
            let g = gauss_sum(
                t,
                &legendre_of(t, &l0)?,
                &t.unit_inv(&u0),
                1,
                GaussRoute::Auto,
            )?;
            let sign = ((q.pow(fl as u32) - 1) / e as u128) * (e as u128 * (e as u128 + 2) / 8);
            Ok(if sign % 2 == 0 { g } else { -g })
        }
    }
}

// ---- conductors and L-factors on the Weil quotient ----

/// `P(T)` with `L(s) = 1/P(q^{-s})`, `P(0) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LPolynomial {
    pub coeffs: Vec<Rational>,
}

impl LPolynomial {
    #[must_use]
    pub fn one() -> Self {
        LPolynomial {
            coeffs: vec![rint(1)],
        }
    }

    #[must_use]
    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(rint(0), |acc, c| acc * x + c)
    }

    #[must_use]
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[must_use]
    pub fn mul(&self, other: &LPolynomial) -> LPolynomial {
        let mut c = vec![rint(0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        LPolynomial { coeffs: c }
    }

    /// `self / other` when the division is exact.
    #[must_use]
    pub fn div_exact(&self, other: &LPolynomial) -> Option<LPolynomial> {
        let dd = other.degree();
        if self.degree() < dd {
            return None;
        }
        let mut rem = self.coeffs.clone();
        let lead = other.coeffs[dd].clone();
        let mut quo = vec![rint(0); self.degree() - dd + 1];
        for k in (0..quo.len()).rev() {
            let c = &rem[k + dd] / &lead;
            for (i, b) in other.coeffs.iter().enumerate() {
                rem[k + i] -= &c * b;
            }
            quo[k] = c;
        }
        rem.iter()
            .all(Zero::is_zero)
            .then_some(LPolynomial { coeffs: quo })
    }

    #[must_use]
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = render_rational(c);
            parts.push(match k {
                0 => cs,
                1 => format!("{cs}*T"),
                _ => format!("{cs}*T^{k}"),
            });
        }
        parts.join(" + ")
    }
}

impl Serialize for LPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

/// The character of `Ad∘φ = ∧²φ₁ ⊕ φ₁` with `φ₁ = Ind_Ū ϑ`.
#[must_use]
pub fn adjoint_character(g: &WeilQuotient<'_>, vt: &FiniteCharacter) -> ClassFunction {
    let phi1 = g.induce_from_ubar(vt);
    g.wedge_square(&phi1).add(&phi1)
}

/// The subgroup of `Ū` generated by `gens`.
#[must_use]
pub fn ubar_span(u: &UbarModule, gens: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut stack = vec![u.zero()];
    seen.insert(u.zero());
    while let Some(x) = stack.pop() {
        for z in gens {
            let y = u.add(&x, z);
            if seen.insert(y.clone()) {
                stack.push(y);
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort();
    out
}

/// `|S|^{-1} Σ_{g ∈ S} χ(g)` over element ids.
fn average(chi: &ClassFunction, ids: impl Iterator<Item = usize>) -> Cyclo {
    let mut h = RootHistogram::new(chi.modulus);
    let mut count: i64 = 0;
    for i in ids {
        for &(k, c) in &chi.values[i] {
            h.add(k, c);
        }
        count += 1;
    }
    h.to_cyclo().scale(&rat(1, count * chi.denom))
}

fn as_rational(c: &Cyclo, what: &str) -> Result<Rational, LocalError> {
    c.to_rational()
        .ok_or_else(|| LocalError::NonRational(what.into()))
}

/// Γ-indices of the inertia subgroup `⟨δ⟩`.
fn inertia_indices(g: &WeilQuotient<'_>) -> Vec<usize> {
    let gam = &g.setup.tower.gamma;
    gam.closure(&[gam.delta()])
        .into_iter()
        .map(|x| gam.index(x))
        .collect()
}

/// `dim V^{I_F}` for a character of the Weil quotient.
///
/// The inertia image is generated by the image `U_0` of `O_K^×` and a lift
/// of `⟨δ⟩`. The lift is only defined up to `Ū/U_0`, so the function checks
/// that `V^{U_0} = V^Ū` (then `Ū` acts trivially on the invariants and
/// every lift gives the same space) and averages over `⟨δ⟩ ⋉ Ū`.
pub fn inertia_invariants(
    g: &WeilQuotient<'_>,
    chi: &ClassFunction,
) -> Result<Rational, LocalError> {
    let u = &g.setup.ubar;
    let uo = u.order() as usize;
    let id = g.gamma_identity();
    let units: Vec<Vec<u64>> = u.full_gen_images.iter().map(|(_, c)| c.clone()).collect();
    let u0 = ubar_span(u, &units);
    let on_u0 = average(chi, u0.iter().map(|x| g.id(&(id, x.clone()))));
    let on_ubar = average(chi, id * uo..(id + 1) * uo);
    if on_u0 != on_ubar {
        return Err(LocalError::InertiaLiftAmbiguous);
    }
    let ids = inertia_indices(g)
        .into_iter()
        .flat_map(|s| s * uo..(s + 1) * uo);
    as_rational(&average(chi, ids), "inertia invariants")
}

/// Artin conductor by the ramification filtration:
/// `a = codim V^{I_F} + e^{-1} Σ_{k≥1} codim V^{U_K^k}`, where `U_K^k` acts
/// through its image in `Ū`. For tame `K/F` the upper-numbering group
/// `G_F^u` with `(k−1)/e < u ≤ k/e` is the image of `U_K^k`, an interval of
/// length `1/e`.
pub fn artin_conductor(g: &WeilQuotient<'_>, chi: &ClassFunction) -> Result<Rational, LocalError> {
    let u = &g.setup.ubar;
    let id = g.gamma_identity();
    let e = g.setup.params().e as i64;
    let dim = as_rational(&chi.value(g.id(&g.identity())), "dimension")?;
    let mut a = &dim - inertia_invariants(g, chi)?;
    for k in 1..=u.group.depth {
        let gens: Vec<Vec<u64>> = u
            .full_gen_images
            .iter()
            .filter(|(lev, _)| *lev >= k)
            .map(|(_, c)| c.clone())
            .collect();
        let sub = ubar_span(u, &gens);
        let inv = as_rational(
            &average(chi, sub.iter().map(|x| g.id(&(id, x.clone())))),
            "level invariants",
        )?;
        a += (&dim - inv) / rint(e);
    }
    if !a.is_integer() {
        return Err(LocalError::NonIntegerConductor(render_rational(&a)));
    }
    Ok(a)
}

/// `det(1 − T·Fr | V^{I_F})` with `Fr = (ρ, 0)`, from the traces of the
/// powers of `Fr` on the inertia invariants and Newton's identities.
pub fn l_polynomial(g: &WeilQuotient<'_>, chi: &ClassFunction) -> Result<LPolynomial, LocalError> {
    let gam = &g.setup.tower.gamma;
    let uo = g.setup.ubar.order() as usize;
    let dim = inertia_invariants(g, chi)?;
    if !dim.is_integer() {
        return Err(LocalError::NonRational("fixed-space dimension".into()));
    }
    let dim = dim
        .to_integer()
        .to_string()
        .parse::<usize>()
        .expect("small dimension");
    let inertia = gam.closure(&[gam.delta()]);
    let power_sums: Vec<Rational> = (1..=dim)
        .map(|k| {
            let fk = gam.pow(gam.rho(), k as i64);
            let ids = inertia
                .iter()
                .map(|&s| gam.index(gam.mul(fk, s)))
                .flat_map(|s| s * uo..(s + 1) * uo);
            as_rational(&average(chi, ids), "Frobenius trace")
        })
        .collect::<Result<_, _>>()?;
    // k·e_k = Σ_{i=1}^k (−1)^{i−1} e_{k−i} p_i, P(T) = Σ (−1)^k e_k T^k
    let mut el = vec![rint(1)];
    for k in 1..=dim {
        let mut s = rint(0);
        for i in 1..=k {
            let term = &el[k - i] * &power_sums[i - 1];
            if i % 2 == 1 {
                s += term;
            } else {
                s -= term;
            }
        }
        el.push(s / rint(k as i64));
    }
    let coeffs = el
        .into_iter()
        .enumerate()
        .map(|(k, c)| if k % 2 == 0 { c } else { -c })
        .collect();
    Ok(LPolynomial { coeffs })
}

/// `P(T)` of `L(φ, Ad, s)`.
pub fn l_factor_adjoint(
    g: &WeilQuotient<'_>,
    vt: &FiniteCharacter,
) -> Result<LPolynomial, LocalError> {
    l_polynomial(g, &adjoint_character(g, vt))
}

// ---- the decomposition of Ad∘φ and its ε-factor ----

/// The abelian pieces of `Ad∘φ = Π₁ ⊕ Π₂ ⊕ Π₃` with
/// `Π₁ = Ind_K^F 1 − Ind_{K_+}^F 1`, `Π₂ = Ind_K^F ϑ̃ ⊕ ⊕_{γ≠γ^{-1}} Ind_K^F ϑ̃_γ`
/// and `Π₃ = ⊕_{γ ∈ H∖{1,τ}} Ind_{K_γ}^F χ̃_γ`.
#[derive(Clone, Debug)]
pub struct AdjointPieces {
    pub on_k: Vec<QuasiChar>,
    pub pi3: Vec<(GElem, QuasiChar)>,
}

pub fn adjoint_pieces(s: &CharSetup, vt: &FiniteCharacter) -> Result<AdjointPieces, LocalError> {
    let gam = &s.tower.gamma;
    let one = gam.identity();
    let mut on_k = vec![s.tilde(vt)];
    let mut seen = BTreeSet::new();
    let mut pi3 = Vec::new();
    for g in gam.elements() {
        if gam.mul(g, g) == one {
            if g != one && g != s.tower.tau {
                pi3.push((g, s.chi_tilde_gamma(vt, g)?));
            }
            continue;
        }
        if seen.insert(g) {
            seen.insert(gam.inv(g));
            on_k.push(s.tilde_twisted(vt, g));
        }
    }
    Ok(AdjointPieces { on_k, pi3 })
}

/// `P(T)` of `L(Ad∘φ, s)` from the abelian pieces: `L(Ind_L^F χ) = L(χ)`,
/// which is `1/(1 − χ(ϖ_L)T^{f(L/F)})` for unramified `χ` and `1` otherwise.
pub fn l_factor_by_pieces(s: &CharSetup, vt: &FiniteCharacter) -> Result<LPolynomial, LocalError> {
    let t = &s.tower;
    let (k, kp) = (t.top(), t.subfield(SubfieldTag::KPlus)?);
    let ind_one = |l: &SubField| {
        let mut coeffs = vec![rint(0); l.f() as usize + 1];
        coeffs[0] = rint(1);
        coeffs[l.f() as usize] = rint(-1);
        LPolynomial { coeffs }
    };
    let mut p = ind_one(&k)
        .div_exact(&ind_one(&kp))
        .ok_or_else(|| LocalError::NonRational("Π₁ L-factor".into()))?;
    let pieces = adjoint_pieces(s, vt)?;
    for chi in pieces.on_k.iter().chain(pieces.pi3.iter().map(|(_, c)| c)) {
        if chi.conductor() > 0 {
            continue;
        }
        let a = chi.at_uniformizer() % chi.modulus;
        let v = if a == 0 {
            rint(1)
        } else if 2 * a == chi.modulus {
            rint(-1)
        } else {
            return Err(LocalError::NonRational(format!(
                "χ(ϖ_L) = ζ_{}^{a}",
                chi.modulus
            )));
        };
        let fl = chi.field.f() as usize;
        let mut coeffs = vec![rint(0); fl + 1];
        coeffs[0] = rint(1);
        coeffs[fl] = -v;
        p = p.mul(&LPolynomial { coeffs });
    }
    Ok(p)
}

/// `a(Ind_L^F χ) = f(L/F)·(d(L) + a(χ))` for a character of `L^×`.
fn induced_conductor(chi: &QuasiChar) -> i64 {
    let l = &chi.field;
    (l.f() * (l.different() + chi.conductor() as u64)) as i64
}

/// Artin conductor of `Ad∘φ` summed over the abelian pieces.
pub fn artin_conductor_by_pieces(s: &CharSetup, vt: &FiniteCharacter) -> Result<i64, LocalError> {
    let t = &s.tower;
    let (k, kp) = (t.top(), t.subfield(SubfieldTag::KPlus)?);
    let pieces = adjoint_pieces(s, vt)?;
    let pi1 = (k.f() * k.different()) as i64 - (kp.f() * kp.different()) as i64;
    let rest: i64 = pieces
        .on_k
        .iter()
        .chain(pieces.pi3.iter().map(|(_, c)| c))
        .map(induced_conductor)
        .sum();
    Ok(pi1 + rest)
}

/// One λ-factor used by the assembly, with both evaluations when available.
#[derive(Clone, Debug, Serialize)]
pub struct LambdaRecord {
    pub field: String,
    pub by_inductivity: Option<String>,
    pub closed_form: Option<String>,
    pub agree: Option<bool>,
}

/// `λ(L/F)`, preferring inductivity and recording the closed form.
fn lambda_over_f(
    t: &TowerModel,
    l: &SubField,
    log: &mut Vec<LambdaRecord>,
) -> Result<Cyclo, LocalError> {
    let f = t.base();
    let ind = lambda_factor(t, l, &f, LambdaMode::ByInductivity).ok();
    let closed = lambda_factor(t, l, &f, LambdaMode::ClosedForm).ok();
    log.push(LambdaRecord {
        field: l.info.tag.to_string(),
        by_inductivity: ind.as_ref().map(Cyclo::render),
        closed_form: closed.as_ref().map(Cyclo::render),
        agree: ind.as_ref().zip(closed.as_ref()).map(|(a, b)| a == b),
    });
    ind.or(closed)
        .ok_or_else(|| LocalError::UnsupportedExtension(format!("λ({}/F)", l.info.tag)))
}

/// The three cases of the root-number formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RootCase {
    RamifiedOverKPlus,
    UnramifiedH2,
    UnramifiedH4,
}

/// `ε(Ad∘φ, ψ_F)` assembled from abelian ε-factors and λ-factors, with the
/// root number extracted against `q^{a/2}`.
#[derive(Clone, Debug)]
pub struct EpsilonAssembly {
    pub eps: Cyclo,
    pub eps_pi: [Cyclo; 3],
    pub a: i64,
    pub w: Cyclo,
    pub w_closed: Option<Cyclo>,
    pub case: RootCase,
    pub vartheta_minus_one: Cyclo,
    pub lambdas: Vec<LambdaRecord>,
}

/// The closed form `w(Ad∘φ)/ϑ(−1)`, when the instance is in its scope.
#[must_use]
pub fn root_number_sign(s: &CharSetup) -> (RootCase, Option<i64>) {
    let prm = s.params();
    let q = prm.q() as u128;
    let n = prm.n() as u128;
    let sgn = |k: u128| if k % 2 == 0 { 1 } else { -1 };
    if prm.ramified_over_kplus() {
        // the formula assumes K/F totally ramified
        let v = (prm.f == 1).then(|| sgn((q - 1) / (2 * n) * (n * (n + 1) / 2)));
        return (RootCase::RamifiedOverKPlus, v);
    }
    if s.tower.gamma.involutions().elements.len() == 2 {
        (RootCase::UnramifiedH2, Some(1))
    } else {
        let fp = prm.f_plus() as u32;
        (RootCase::UnramifiedH4, Some(-sgn((q.pow(fp) - 1) / 2)))
    }
}

pub fn epsilon_adjoint(s: &CharSetup, vt: &FiniteCharacter) -> Result<EpsilonAssembly, LocalError> {
    let t = &s.tower;
    let (k, kp) = (t.top(), t.subfield(SubfieldTag::KPlus)?);
    let mut lambdas = Vec::new();
    let lam_k = lambda_over_f(t, &k, &mut lambdas)?;
    let lam_kp = lambda_over_f(t, &kp, &mut lambdas)?;
    // ε(Ind_L^F 1) = λ(L/F)·q_L^{d(L)/2}
    let ind_one = |lam: &Cyclo, l: &SubField| lam * &q_half_power(t, l, l.different() as i64);
    let eps1 = ind_one(&lam_k, &k)
        .div(&ind_one(&lam_kp, &kp))
        .expect("nonzero");
    let pieces = adjoint_pieces(s, vt)?;
    let mut eps2 = Cyclo::one();
    for chi in &pieces.on_k {
        eps2 = &(&eps2 * &lam_k) * &epsilon(t, chi)?;
    }
    let mut eps3 = Cyclo::one();
    for (_, chi) in &pieces.pi3 {
        let lam = lambda_over_f(t, &chi.field, &mut lambdas)?;
        eps3 = &(&eps3 * &lam) * &epsilon(t, chi)?;
    }
    let eps = &(&eps1 * &eps2) * &eps3;
    let a = artin_conductor_by_pieces(s, vt)?;
    let f0 = t.params.f0 as i64;
    let w = eps
        .div(&Cyclo::prime_half_power(t.p(), f0 * a))
        .expect("nonzero");
    let vartheta_minus_one = vt.value(&s.ubar.minus_one);
    let (case, sign) = root_number_sign(s);
    let w_closed = sign.map(|x| vartheta_minus_one.scale(&rint(x)));
    Ok(EpsilonAssembly {
        eps,
        eps_pi: [eps1, eps2, eps3],
        a,
        w,
        w_closed,
        case,
        vartheta_minus_one,
        lambdas,
    })
}

/// `γ(0) = ε·L(1)/L(0) = ε·P(1)/P(q^{-1})` for a self-dual representation.
#[must_use]
pub fn gamma_at_zero(eps: &Cyclo, l: &LPolynomial, q: u64) -> Cyclo {
    let ratio = l.eval(&rint(1)) / l.eval(&rat(1, q as i64));
    eps.scale(&ratio)
}

/// `γ(Ad∘φ, ψ_F, 0)`.
pub fn gamma_adjoint(g: &WeilQuotient<'_>, vt: &FiniteCharacter) -> Result<Cyclo, LocalError> {
    let asm = epsilon_adjoint(g.setup, vt)?;
    let l = l_factor_adjoint(g, vt)?;
    Ok(gamma_at_zero(&asm.eps, &l, g.setup.params().q()))
}

/// Local factors of `Ad∘φ` with their comparisons against closed forms.
#[derive(Clone, Debug)]
pub struct FactorReport {
    pub a: i64,
    pub eps: Cyclo,
    pub w: Cyclo,
    pub l: LPolynomial,
    pub l_dual: LPolynomial,
    pub gamma_at_0: Cyclo,
    pub closed_form_match: BTreeMap<String, bool>,
}

impl Serialize for FactorReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FactorReport", 7)?;
        st.serialize_field("a", &self.a)?;
        st.serialize_field("eps", &self.eps.render())?;
        st.serialize_field("w", &self.w.render())?;
        st.serialize_field("L", &self.l)?;
        st.serialize_field("Ldual", &self.l_dual)?;
        st.serialize_field("gamma_at_0", &self.gamma_at_0.render())?;
        st.serialize_field("closed_form_match", &self.closed_form_match)?;
        st.end()
    }
}

/// `P(T)` of `L(φ, Ad, s)` in closed form: `1` if `K/K_+` is ramified,
/// `1 + T^{f_+}` otherwise.
#[must_use]
pub fn l_factor_closed_form(s: &CharSetup) -> LPolynomial {
    let prm = s.params();
    if prm.ramified_over_kplus() {
        return LPolynomial::one();
    }
    let fp = prm.f_plus() as usize;
    let mut coeffs = vec![rint(0); fp + 1];
    coeffs[0] = rint(1);
    coeffs[fp] = rint(1);
    LPolynomial { coeffs }
}

/// `|γ(Ad∘φ, 0)| = q^{n²r}·{1 | 2/(1+q^{-f_+})}`.
#[must_use]
pub fn gamma_magnitude_closed_form(s: &CharSetup) -> Rational {
    let prm = s.params();
    let q = prm.q() as i64;
    let n = prm.n() as u32;
    let base = Rational::from_integer(num_bigint::BigInt::from(q).pow(n * n * prm.r as u32));
    if prm.ramified_over_kplus() {
        base
    } else {
        let qf = q.pow(prm.f_plus() as u32);
        base * rat(2 * qf, qf + 1)
    }
}

/// Assembles the factor report for `Ad∘φ`. The conductor and L-factor come
/// from the abelian pieces; when the Weil quotient is supplied they are
/// also computed from the filtration and the inertia invariants and compared.
pub fn factor_report(
    s: &CharSetup,
    g: Option<&WeilQuotient<'_>>,
    vt: &FiniteCharacter,
) -> Result<FactorReport, LocalError> {
    let prm = s.params();
    let asm = epsilon_adjoint(s, vt)?;
    let l = l_factor_by_pieces(s, vt)?;
    let mut m = BTreeMap::new();
    if let Some(g) = g {
        let a_filt = artin_conductor(g, &adjoint_character(g, vt))?;
        m.insert("conductor_routes".into(), a_filt == rint(asm.a));
        m.insert("l_factor_routes".into(), l_factor_adjoint(g, vt)? == l);
    }
    // the adjoint is self-dual
    let l_dual = l.clone();
    let gamma = gamma_at_zero(&asm.eps, &l, prm.q());
    let n = prm.n() as i64;
    m.insert("conductor_2n2r".into(), asm.a == 2 * n * n * prm.r as i64);
    m.insert("l_factor".into(), l == l_factor_closed_form(s));
    m.insert("w_unit".into(), asm.w.abs_square() == Cyclo::one());
    if let Some(wc) = &asm.w_closed {
        m.insert("root_number".into(), *wc == asm.w);
    }
    if asm.lambdas.iter().any(|r| r.agree.is_some()) {
        m.insert(
            "lambda_modes".into(),
            asm.lambdas.iter().all(|r| r.agree != Some(false)),
        );
    }
    let mag = gamma_magnitude_closed_form(s);
    m.insert(
        "gamma_magnitude".into(),
        gamma.abs_square() == Cyclo::from_rational(&mag * &mag),
    );
    Ok(FactorReport {
        a: asm.a,
        eps: asm.eps,
        w: asm.w,
        l,
        l_dual,
        gamma_at_0: gamma,
        closed_form_match: m,
    })
}

// ---- Sym_n and the principal parameter ----

/// A square rational matrix; column `j` is the image of basis vector `j`.
pub type Matrix = Vec<Vec<Rational>>;

fn zero_matrix(n: usize) -> Matrix {
    vec![vec![rint(0); n]; n]
}

#[must_use]
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut c = zero_matrix(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                c[i][j] += &a[i][k] * &b[k][j];
            }
        }
    }
    c
}

#[must_use]
pub fn transpose(a: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| a[j][i].clone()).collect())
        .collect()
}

/// Rank over `Q` by Gaussian elimination.
#[must_use]
pub fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, piv);
        let inv = rint(1) / &rows[r][c];
        let prow: Vec<Rational> = rows[r].iter().map(|x| x * &inv).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let m = row[c].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &m * y;
                }
            }
        }
        rows[r] = prow;
        r += 1;
    }
    r
}

/// `Sym_n` of `SL_2` on the monomials `v_k = X^{n-k}Y^k`, with the
/// invariant form `⟨v_k, v_{n-k}⟩ = (-1)^k k!(n-k)!`.
#[derive(Clone, Debug)]
pub struct SymTensor {
    pub n: usize,
    /// Differential of `[[0,1],[0,0]]`.
    pub e: Matrix,
    /// Differential of `[[0,0],[1,0]]`.
    pub f: Matrix,
    /// Differential of `diag(1,-1)`.
    pub h: Matrix,
    pub form: Matrix,
}

impl SymTensor {
    /// The matrix of `g = [[a,b],[c,d]]`, acting by `X ↦ aX + cY`, `Y ↦ bX + dY`.
    #[must_use]
    pub fn group_element(&self, g: &[[Rational; 2]; 2]) -> Matrix {
        let n = self.n;
        let lin = |x: &Rational, y: &Rational| vec![x.clone(), y.clone()];
        let polmul = |p: &[Rational], q: &[Rational]| {
            let mut out = vec![rint(0); p.len() + q.len() - 1];
            for (i, a) in p.iter().enumerate() {
                for (j, b) in q.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            out
        };
        let ximg = lin(&g[0][0], &g[1][0]);
        let yimg = lin(&g[0][1], &g[1][1]);
        let mut m = zero_matrix(n + 1);
        for k in 0..=n {
            // coefficients indexed by the power of Y
            let mut p = vec![rint(1)];
            for _ in 0..n - k {
                p = polmul(&p, &ximg);
            }
            for _ in 0..k {
                p = polmul(&p, &yimg);
            }
            for (i, c) in p.into_iter().enumerate() {
                m[i][k] = c;
            }
        }
        m
    }

    /// `M^T B M = B`.
    #[must_use]
    pub fn preserves_form(&self, m: &Matrix) -> bool {
        mat_mul(&mat_mul(&transpose(m), &self.form), m) == self.form
    }

    /// `X^T B + B X = 0`.
    #[must_use]
    pub fn in_lie_algebra(&self, x: &Matrix) -> bool {
        let a = mat_mul(&transpose(x), &self.form);
        let b = mat_mul(&self.form, x);
        a.iter()
            .zip(&b)
            .all(|(r, s)| r.iter().zip(s).all(|(u, v)| (u + v).is_zero()))
    }
}

#[must_use]
pub fn sym_tensor(n: usize) -> SymTensor {
    let (mut e, mut f, mut h, mut form) = (
        zero_matrix(n + 1),
        zero_matrix(n + 1),
        zero_matrix(n + 1),
        zero_matrix(n + 1),
    );
    let fact = |k: usize| (1..=k as i64).fold(rint(1), |acc, i| acc * rint(i));
    for k in 0..=n {
        // e: Y ↦ X, so v_k ↦ k v_{k-1}; f: X ↦ Y, so v_k ↦ (n-k) v_{k+1}
        if k > 0 {
            e[k - 1][k] = rint(k as i64);
        }
        if k < n {
            f[k + 1][k] = rint((n - k) as i64);
        }
        h[k][k] = rint(n as i64 - 2 * k as i64);
        let sign = if k % 2 == 0 { rint(1) } else { rint(-1) };
        form[k][n - k] = sign * fact(k) * fact(n - k);
    }
    SymTensor { n, e, f, h, form }
}

/// Local factors of the adjoint of the principal parameter `φ₀` into
/// `SO_{2n+1}`.
#[derive(Clone, Debug, Serialize)]
pub struct PrincipalParameter {
    pub n: usize,
    pub q: u64,
    /// `(ad h-weight, multiplicity)` on `ker(ad N₀) ⊂ so_{2n+1}`.
    pub kernel_weights: Vec<(i64, usize)>,
    /// One linear factor `1 − q^{-w/2}T` per kernel weight vector.
    pub l_factors: Vec<LPolynomial>,
    pub l: LPolynomial,
    #[serde(serialize_with = "ser_rational")]
    pub eps: Rational,
    /// `ε(φ₀, Ad) = q^{n²}` is taken as known, not computed here.
    pub eps_imported: bool,
    #[serde(serialize_with = "ser_rational")]
    pub gamma0: Rational,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&render_rational(r))
}

/// Dimension of `{X ∈ so(B) : [N, X] = 0}` inside the ad `h`-weight space
/// of weight `w` (matrix units `E_{ij}` with `h_i − h_j = w`).
fn kernel_weight_dim(st: &SymTensor, w: i64) -> usize {
    let d = st.n + 1;
    let hv: Vec<i64> = (0..d).map(|i| st.n as i64 - 2 * i as i64).collect();
    let support: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| hv[i] - hv[j] == w)
        .collect();
    if support.is_empty() {
        return 0;
    }
    // each unknown contributes a column to the stacked linear conditions
    let mut cols: Vec<Vec<Rational>> = Vec::new();
    for &(i, j) in &support {
        let mut x = zero_matrix(d);
        x[i][j] = rint(1);
        let lie = {
            let a = mat_mul(&transpose(&x), &st.form);
            let b = mat_mul(&st.form, &x);
            a.into_iter()
                .zip(b)
                .flat_map(|(r, s)| r.into_iter().zip(s).map(|(u, v)| u + v))
                .collect::<Vec<_>>()
        };
        let comm = {
            let a = mat_mul(&st.e, &x);
            let b = mat_mul(&x, &st.e);
            a.into_iter()
                .zip(b)
                .flat_map(|(r, s)| r.into_iter().zip(s).map(|(u, v)| u - v))
                .collect::<Vec<_>>()
        };
        cols.push(lie.into_iter().chain(comm).collect());
    }
    let rows: Vec<Vec<Rational>> = (0..cols[0].len())
        .map(|r| cols.iter().map(|c| c[r].clone()).collect())
        .collect();
    support.len() - rank(rows)
}

/// `L(φ₀, Ad, s)`, `ε(φ₀, Ad)` and `γ₀ = γ(φ₀, Ad, 0)`. The Frobenius acts
/// on `ad h`-weight `w` by `q^{-w/2}`, inertia trivially, and the monodromy
/// is `N₀ = dSym_{2n}([[0,1],[0,0]])`.
#[must_use]
pub fn principal_parameter(n: usize, q: u64) -> PrincipalParameter {
    let st = sym_tensor(2 * n);
    let mut kernel_weights = Vec::new();
    let mut l_factors = Vec::new();
    for w in (2..=4 * n as i64).step_by(2) {
        let dim = kernel_weight_dim(&st, w);
        if dim == 0 {
            continue;
        }
        kernel_weights.push((w, dim));
        let ev = Rational::new(1.into(), num_bigint::BigInt::from(q).pow((w / 2) as u32));
        for _ in 0..dim {
            l_factors.push(LPolynomial {
                coeffs: vec![rint(1), -ev.clone()],
            });
        }
    }
    let l = l_factors
        .iter()
        .fold(LPolynomial::one(), |acc, f| acc.mul(f));
    let eps = Rational::from_integer(num_bigint::BigInt::from(q).pow((n * n) as u32));
    let qr = Rational::from_integer(q.into());
    let gamma0 = &eps * l.eval(&rint(1)) / l.eval(&(rint(1) / qr));
    PrincipalParameter {
        n,
        q,
        kernel_weights,
        l_factors,
        l,
        eps,
        eps_imported: true,
        gamma0,
    }
}
