//! Finite quotients `G = Γ ⋉_α Ū` of the relative Weil group `W_{K/F}`,
//! class functions with exact cyclotomic values, induced characters, and
//! the character identities for `∧²φ₁` and for twisted indicators.
//!
//! The module is `Ū = K^{×(1−τ)}` modulo `1 + p_K^{er}`. Every character
//! that enters the identities factors through `x ↦ x^{1−τ}` (the involutions
//! of `Γ` are central), so `G` is a quotient of `W_{K/F}` on which all of
//! them are defined.

use std::collections::BTreeSet;

use num_integer::lcm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chars::{CharError, CharSetup, FiniteCharacter, NormResidue};
use crate::exactnum::{canonical_int_terms, rat, Cyclo, RootHistogram};
use crate::galoisgrp::GElem;
use crate::tamefield::Elem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeilError {
    #[error(transparent)]
    Char(#[from] CharError),
    #[error("cocycle check failed: {0}")]
    CocycleInvalid(String),
    #[error("fundamental classes are only constructed for cyclic Γ")]
    FundamentalClassUnsupported,
    #[error("class of a has order {order} in F^×/N(K^×), need {needed}")]
    NotFundamental { order: u64, needed: u64 },
    #[error("not a homomorphism: {0}")]
    NotAHomomorphism(String),
}

/// Source of the 2-cocycle `α : Γ × Γ → Ū`.
#[derive(Clone, Debug)]
pub enum CocycleProvider {
    Trivial,
    /// `α(σ^i, σ^j) = a^{[i+j ≥ |Γ|]}` for a generator `σ` of cyclic `Γ` and
    /// `a ∈ F^×` whose class generates `F^×/N(K^×)`, pushed to `Ū`.
    CyclicFundamental(Elem),
    /// A random coboundary `α(σ,τ) = h(σ)^τ h(τ) h(στ)^{-1}`.
    RandomValid(u64),
    /// Explicit table indexed by `Γ` indices, values in `Ū` coordinates.
    Custom(Vec<Vec<Vec<u64>>>),
}

impl CocycleProvider {
    #[must_use]
    pub fn label(&self) -> String {
        match self {
            CocycleProvider::Trivial => "trivial".into(),
            CocycleProvider::CyclicFundamental(_) => "cyclic-fundamental".into(),
            CocycleProvider::RandomValid(s) => format!("random-valid({s})"),
            CocycleProvider::Custom(_) => "custom".into(),
        }
    }
}

/// Searches `a = T^j·p^v ∈ F^×` (`v ∈ {0,1}`) whose class generates
/// `F^×/N(K^×)`, for cyclic `Γ`.
#[must_use]
pub fn find_fundamental_element(setup: &CharSetup) -> Option<Elem> {
    let t = &setup.tower;
    let gam = &t.gamma;
    gam.cyclic_generator()?;
    let base = t.base();
    let sym = NormResidue::new(t, &t.top(), &base);
    let p = t.scalar(t.p() as i64);
    for v in [1u32, 0] {
        for j in 0..base.q_l - 1 {
            let mut a = t.teich((j * base.teich_gen) as i64);
            if v == 1 {
                a = t.mul(&a, &p);
            }
            if sym.class_order(t, &a) == gam.order() {
                return Some(a);
            }
        }
    }
    None
}

/// An element `(σ, x)` with `σ` given by its index in `Γ`.
pub type GElt = (usize, Vec<u64>);

/// Sparse integer combination `Σ c·ζ_M^k`.
pub type Terms = Vec<(u64, i64)>;

/// The group `Γ ⋉_α Ū` with `(σ,x)(τ,y) = (στ, α(σ,τ)·x^τ·y)`.
#[derive(Clone, Debug)]
pub struct WeilQuotient<'a> {
    pub setup: &'a CharSetup,
    pub label: String,
    /// `true` when the cocycle table is identically trivial.
    pub split: bool,
    n_gamma: usize,
    gmul: Vec<usize>,
    ginv: Vec<usize>,
    alpha: Vec<Vec<u64>>,
    radix: Vec<u64>,
    ubar_order: u64,
}

/// Builds `G` for a cocycle provider, verifying the cocycle identity on
/// `Γ³`, normalization, and `α(σ,σ)^σ = α(σ,σ)` for involutions.
pub fn build_weil_quotient<'a>(
    setup: &'a CharSetup,
    provider: &CocycleProvider,
) -> Result<WeilQuotient<'a>, WeilError> {
    let t = &setup.tower;
    let gam = &t.gamma;
    let ng = gam.order() as usize;
    let mut gmul = vec![0usize; ng * ng];
    let mut ginv = vec![0usize; ng];
    for i in 0..ng {
        let a = gam.from_index(i);
        ginv[i] = gam.index(gam.inv(a));
        for j in 0..ng {
            gmul[i * ng + j] = gam.index(gam.mul(a, gam.from_index(j)));
        }
    }
    let u = &setup.ubar;
    let zero = u.zero();
    let alpha: Vec<Vec<u64>> = match provider {
        CocycleProvider::Trivial => vec![zero.clone(); ng * ng],
        CocycleProvider::Custom(tab) => {
            if tab.len() != ng || tab.iter().any(|r| r.len() != ng) {
                return Err(WeilError::CocycleInvalid("table shape".into()));
            }
            tab.iter().flatten().cloned().collect()
        }
        CocycleProvider::RandomValid(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let h: Vec<Vec<u64>> = (0..ng)
                .map(|i| {
                    if i == gam.index(gam.identity()) {
                        zero.clone()
                    } else {
                        u.invariants()
                            .iter()
                            .map(|&s| rng.gen_range(0..s))
                            .collect()
                    }
                })
                .collect();
            let mut tab = Vec::with_capacity(ng * ng);
            for i in 0..ng {
                for j in 0..ng {
                    let a = u.add(&u.act_index(&h[i], j), &h[j]);
                    tab.push(u.add(&a, &u.neg(&h[gmul[i * ng + j]])));
                }
            }
            tab
        }
        CocycleProvider::CyclicFundamental(a) => {
            let gen = gam
                .cyclic_generator()
                .ok_or(WeilError::FundamentalClassUnsupported)?;
            let sym = NormResidue::new(t, &t.top(), &t.base());
            let order = sym.class_order(t, a);
            if order != ng as u64 {
                return Err(WeilError::NotFundamental {
                    order,
                    needed: ng as u64,
                });
            }
            let a_img = u.image(t, a);
            let mut exp_of = vec![0usize; ng];
            for i in 0..ng {
                exp_of[gam.index(gam.pow(gen, i as i64))] = i;
            }
            let mut tab = Vec::with_capacity(ng * ng);
            for i in 0..ng {
                for j in 0..ng {
                    let wrap = exp_of[i] + exp_of[j] >= ng;
                    tab.push(if wrap { a_img.clone() } else { zero.clone() });
                }
            }
            tab
        }
    };
    let split = alpha.iter().all(|x| x.iter().all(|&c| c == 0));
    let mut radix = Vec::new();
    let mut acc = 1u64;
    for &s in u.invariants().iter().rev() {
        radix.push(acc);
        acc *= s;
    }
    radix.reverse();
    let g = WeilQuotient {
        setup,
        label: provider.label(),
        split,
        n_gamma: ng,
        gmul,
        ginv,
        alpha,
        radix,
        ubar_order: u.order(),
    };
    g.check_cocycle()?;
    Ok(g)
}

impl<'a> WeilQuotient<'a> {
    fn check_cocycle(&self) -> Result<(), WeilError> {
        let u = &self.setup.ubar;
        let ng = self.n_gamma;
        let id = self.gamma_identity();
        for s in 0..ng {
            if self.alpha(id, s).iter().any(|&c| c != 0)
                || self.alpha(s, id).iter().any(|&c| c != 0)
            {
                return Err(WeilError::CocycleInvalid(format!("not normalized at {s}")));
            }
            for tt in 0..ng {
                for v in 0..ng {
                    // α(στ,υ)·α(σ,τ)^υ = α(σ,τυ)·α(τ,υ)
                    let lhs = u.add(
                        self.alpha(self.gm(s, tt), v),
                        &u.act_index(self.alpha(s, tt), v),
                    );
                    let rhs = u.add(self.alpha(s, self.gm(tt, v)), self.alpha(tt, v));
                    if lhs != rhs {
                        return Err(WeilError::CocycleInvalid(format!(
                            "identity fails at ({s},{tt},{v})"
                        )));
                    }
                }
            }
            if self.gm(s, s) == id && u.act_index(self.alpha(s, s), s) != *self.alpha(s, s) {
                return Err(WeilError::CocycleInvalid(format!(
                    "α(σ,σ) not σ-fixed at {s}"
                )));
            }
        }
        Ok(())
    }

    #[must_use]
    pub fn order(&self) -> u64 {
        self.n_gamma as u64 * self.ubar_order
    }

    #[must_use]
    pub fn gamma_order(&self) -> usize {
        self.n_gamma
    }

    #[must_use]
    pub fn gamma_identity(&self) -> usize {
        let gam = &self.setup.tower.gamma;
        gam.index(gam.identity())
    }

    #[must_use]
    pub fn gamma_index(&self, g: GElem) -> usize {
        self.setup.tower.gamma.index(g)
    }

    fn gm(&self, i: usize, j: usize) -> usize {
        self.gmul[i * self.n_gamma + j]
    }

    /// `α(σ,τ)` in coordinates.
    #[must_use]
    pub fn alpha(&self, i: usize, j: usize) -> &Vec<u64> {
        &self.alpha[i * self.n_gamma + j]
    }

    /// Index of an element, `σ` major.
    #[must_use]
    pub fn id(&self, g: &GElt) -> usize {
        let x: u64 = g.1.iter().zip(&self.radix).map(|(c, r)| c * r).sum();
        g.0 * self.ubar_order as usize + x as usize
    }

    #[must_use]
    pub fn element(&self, id: usize) -> GElt {
        let uo = self.ubar_order as usize;
        let mut rest = (id % uo) as u64;
        let inv = self.setup.ubar.invariants();
        let coords = self
            .radix
            .iter()
            .zip(inv)
            .map(|(&r, &s)| {
                let c = rest / r;
                rest %= r;
                debug_assert!(c < s);
                c
            })
            .collect();
        (id / uo, coords)
    }

    #[must_use]
    pub fn identity(&self) -> GElt {
        (self.gamma_identity(), self.setup.ubar.zero())
    }

    #[must_use]
    pub fn mul(&self, g: &GElt, h: &GElt) -> GElt {
        let u = &self.setup.ubar;
        let x = u.add(&u.add(self.alpha(g.0, h.0), &u.act_index(&g.1, h.0)), &h.1);
        (self.gm(g.0, h.0), x)
    }

    #[must_use]
    pub fn inv(&self, g: &GElt) -> GElt {
        // (σ,x)(σ^{-1},y) = (1, α(σ,σ^{-1}) x^{σ^{-1}} y)
        let u = &self.setup.ubar;
        let si = self.ginv[g.0];
        let y = u.neg(&u.add(self.alpha(g.0, si), &u.act_index(&g.1, si)));
        (si, y)
    }

    /// `r^{-1} g r`.
    #[must_use]
    pub fn conj(&self, g: &GElt, r: &GElt) -> GElt {
        self.mul(&self.mul(&self.inv(r), g), r)
    }

    /// Class id of every element, by orbits under conjugation by a
    /// generating set.
    #[must_use]
    pub fn conjugacy_classes(&self) -> Vec<usize> {
        let n = self.order() as usize;
        let gam = &self.setup.tower.gamma;
        let u = &self.setup.ubar;
        let mut gens: Vec<GElt> = vec![
            (gam.index(gam.delta()), u.zero()),
            (gam.index(gam.rho()), u.zero()),
        ];
        for i in 0..u.invariants().len() {
            let mut e = u.zero();
            e[i] = 1;
            gens.push((self.gamma_identity(), e));
        }
        let mut class = vec![usize::MAX; n];
        let mut next = 0;
        for start in 0..n {
            if class[start] != usize::MAX {
                continue;
            }
            class[start] = next;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let g = self.element(i);
                for s in &gens {
                    let j = self.id(&self.conj(&g, s));
                    if class[j] == usize::MAX {
                        class[j] = next;
                        stack.push(j);
                    }
                }
            }
            next += 1;
        }
        class
    }
}

/// A class function on `G` with values `(1/denom)·Σ c·ζ_M^k`.
#[derive(Clone, Debug)]
pub struct ClassFunction {
    pub modulus: u64,
    pub denom: i64,
    pub values: Vec<Terms>,
}

impl ClassFunction {
    #[must_use]
    pub fn value(&self, id: usize) -> Cyclo {
        Cyclo::from_int_terms(self.modulus, &self.values[id]).scale(&rat(1, self.denom))
    }

    fn rebased(&self, m: u64, denom: i64) -> impl Iterator<Item = Terms> + '_ {
        let f = m / self.modulus;
        let s = denom / self.denom;
        self.values
            .iter()
            .map(move |v| v.iter().map(|&(k, c)| (k * f % m, c * s)).collect())
    }

    /// Pointwise sum.
    #[must_use]
    pub fn add(&self, other: &ClassFunction) -> ClassFunction {
        let m = lcm(self.modulus, other.modulus);
        let d = lcm(self.denom, other.denom);
        let values = self
            .rebased(m, d)
            .zip(other.rebased(m, d))
            .map(|(mut a, b)| {
                a.extend(b);
                a
            })
            .collect();
        ClassFunction {
            modulus: m,
            denom: d,
            values,
        }
    }

    /// Pointwise difference.
    #[must_use]
    pub fn sub(&self, other: &ClassFunction) -> ClassFunction {
        let neg = ClassFunction {
            modulus: other.modulus,
            denom: other.denom,
            values: other
                .values
                .iter()
                .map(|v| v.iter().map(|&(k, c)| (k, -c)).collect())
                .collect(),
        };
        self.add(&neg)
    }

    /// Ids where the two functions differ.
    #[must_use]
    pub fn mismatches(&self, other: &ClassFunction) -> Vec<usize> {
        let diff = self.sub(other);
        diff.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !canonical_int_terms(diff.modulus, v).is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Whether the function is constant on the given classes.
    #[must_use]
    pub fn is_class_function(&self, classes: &[usize]) -> bool {
        let nclass = classes.iter().max().map_or(0, |m| m + 1);
        let mut rep: Vec<Option<Terms>> = vec![None; nclass];
        for (i, v) in self.values.iter().enumerate() {
            let c = canonical_int_terms(self.modulus, v);
            match &rep[classes[i]] {
                None => rep[classes[i]] = Some(c),
                Some(r) if *r == c => {}
                Some(_) => return false,
            }
        }
        true
    }

    /// Value at an element.
    #[must_use]
    pub fn value_at(&self, g: &WeilQuotient<'_>, e: &GElt) -> Cyclo {
        self.value(g.id(e))
    }
}

fn mul_terms(a: &[(u64, i64)], b: &[(u64, i64)], m: u64) -> Terms {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &(k1, c1) in a {
        for &(k2, c2) in b {
            out.push(((k1 + k2) % m, c1 * c2));
        }
    }
    out
}

fn compact(v: Terms, m: u64) -> Terms {
    let mut h: std::collections::BTreeMap<u64, i64> = std::collections::BTreeMap::new();
    for (k, c) in v {
        *h.entry(k % m).or_insert(0) += c;
    }
    h.into_iter().filter(|(_, c)| *c != 0).collect()
}

/// A linear character `ν(σ,x) = ζ_M^{a_σ + b(x)}` of `G`.
#[derive(Clone, Debug)]
pub struct LinearChar {
    pub modulus: u64,
    pub on_gamma: Vec<u64>,
    pub on_ubar: FiniteCharacter,
}

impl<'a> WeilQuotient<'a> {
    /// Builds `ν` from its values `ζ_M^{vd}` on `δ`, `ζ_M^{vr}` on `ρ` and a
    /// character of `Ū`, checking that it is a homomorphism of `G`.
    pub fn linear_char(
        &self,
        modulus: u64,
        vd: u64,
        vr: u64,
        on_ubar: FiniteCharacter,
    ) -> Result<LinearChar, WeilError> {
        let gam = &self.setup.tower.gamma;
        let u = &self.setup.ubar;
        let m = lcm(modulus, on_ubar.modulus);
        let on_ubar = FiniteCharacter {
            modulus: m,
            exps: on_ubar
                .exps
                .iter()
                .map(|k| k * (m / on_ubar.modulus))
                .collect(),
        };
        let (vd, vr) = (vd * (m / modulus), vr * (m / modulus));
        let on_gamma: Vec<u64> = (0..self.n_gamma)
            .map(|i| {
                let g = gam.from_index(i);
                (g.a * vd + g.b * vr) % m
            })
            .collect();
        for i in 0..self.n_gamma {
            for j in 0..self.n_gamma {
                if (on_gamma[i] + on_gamma[j]) % m != on_gamma[self.gm(i, j)] {
                    return Err(WeilError::NotAHomomorphism("on Γ".into()));
                }
                if !on_ubar.is_trivial_at(self.alpha(i, j)) {
                    return Err(WeilError::NotAHomomorphism("on the cocycle".into()));
                }
            }
            for b in 0..u.invariants().len() {
                let mut e = u.zero();
                e[b] = 1;
                if on_ubar.eval(&u.act_index(&e, i)) != on_ubar.eval(&e) {
                    return Err(WeilError::NotAHomomorphism("not Γ-invariant on Ū".into()));
                }
            }
        }
        Ok(LinearChar {
            modulus: m,
            on_gamma,
            on_ubar,
        })
    }

    #[must_use]
    pub fn eval_linear(&self, nu: &LinearChar, g: &GElt) -> u64 {
        (nu.on_gamma[g.0] + nu.on_ubar.eval(&g.1)) % nu.modulus
    }

    /// `Ind_{Ū}^{G} χ`, via coset representatives `(α, 1)`.
    #[must_use]
    pub fn induce_from_ubar(&self, chi: &FiniteCharacter) -> ClassFunction {
        let id = self.gamma_identity();
        let zero = self.setup.ubar.zero();
        let reps: Vec<GElt> = (0..self.n_gamma).map(|a| (a, zero.clone())).collect();
        let values = (0..self.order() as usize)
            .map(|i| {
                let g = self.element(i);
                let mut v = Vec::new();
                for r in &reps {
                    let c = self.conj(&g, r);
                    if c.0 == id {
                        v.push((chi.eval(&c.1), 1));
                    }
                }
                compact(v, chi.modulus)
            })
            .collect();
        ClassFunction {
            modulus: chi.modulus,
            denom: 1,
            values,
        }
    }

    /// `Ind_{Ū}^{G} ϑ̃` by the closed form `Σ_γ ϑ̃(x^γ)` on `σ = 1`, `0` off it.
    #[must_use]
    pub fn induced_closed_form(&self, chi: &FiniteCharacter) -> ClassFunction {
        let id = self.gamma_identity();
        let u = &self.setup.ubar;
        let values = (0..self.order() as usize)
            .map(|i| {
                let (s, x) = self.element(i);
                if s != id {
                    return Vec::new();
                }
                compact(
                    (0..self.n_gamma)
                        .map(|a| (chi.eval(&u.act_index(&x, a)), 1))
                        .collect(),
                    chi.modulus,
                )
            })
            .collect();
        ClassFunction {
            modulus: chi.modulus,
            denom: 1,
            values,
        }
    }

    /// `Ind_{W_{K/K_γ}}^{G} χ` for an involution `γ`, where `χ(σ,x)` is given
    /// on the subgroup `⟨γ⟩ ⋉ Ū` by `chi(σ == γ, x)`.
    #[must_use]
    pub fn induce_from_involution(
        &self,
        gamma: usize,
        modulus: u64,
        chi: &dyn Fn(bool, &[u64]) -> Terms,
    ) -> ClassFunction {
        let id = self.gamma_identity();
        let zero = self.setup.ubar.zero();
        let mut covered = BTreeSet::new();
        let mut reps = Vec::new();
        for a in 0..self.n_gamma {
            if covered.insert(a) {
                covered.insert(self.gm(a, gamma));
                reps.push((a, zero.clone()));
            }
        }
        let values = (0..self.order() as usize)
            .map(|i| {
                let g = self.element(i);
                let mut v = Vec::new();
                for r in &reps {
                    let c = self.conj(&g, r);
                    if c.0 == id || c.0 == gamma {
                        v.extend(chi(c.0 == gamma, &c.1));
                    }
                }
                compact(v, modulus)
            })
            .collect();
        ClassFunction {
            modulus,
            denom: 1,
            values,
        }
    }

    /// `χ_γ(σ,x) = sign(σ)·ϑ̃(α(σ,γ)·x^{1+γ})` on `W_{K/K_γ}`.
    #[must_use]
    pub fn chi_gamma(&self, vt: &FiniteCharacter, gamma: usize) -> ClassFunction {
        let u = &self.setup.ubar;
        let m = lcm(vt.modulus, 2);
        let f = m / vt.modulus;
        let id = self.gamma_identity();
        let chi = |is_gamma: bool, x: &[u64]| -> Terms {
            let s = if is_gamma { gamma } else { id };
            let y = u.add(&u.add(self.alpha(s, gamma), x), &u.act_index(x, gamma));
            let k = vt.eval(&y) * f;
            vec![(if is_gamma { (k + m / 2) % m } else { k }, 1)]
        };
        self.induce_from_involution(gamma, m, &chi)
    }

    /// Class function of the inflated regular representation of `Γ` minus
    /// `Ind_{⟨τ⟩}^{Γ} 1`, both by the induced-character formula.
    #[must_use]
    pub fn regular_minus_r_tau(&self) -> ClassFunction {
        let gam = &self.setup.tower.gamma;
        let id = self.gamma_identity();
        let tau = gam.index(self.setup.tower.tau);
        let ng = self.n_gamma;
        let per_sigma: Vec<i64> = (0..ng)
            .map(|s| {
                let reg = if s == id { ng as i64 } else { 0 };
                // Ind_{⟨τ⟩}^{Γ} 1 (σ) = #{α ∈ Γ : α^{-1}σα ∈ ⟨τ⟩} / 2
                let fixed = (0..ng)
                    .filter(|&a| {
                        let c = self.gm(self.gm(self.ginv[a], s), a);
                        c == id || c == tau
                    })
                    .count() as i64;
                reg - fixed / 2
            })
            .collect();
        let uo = self.ubar_order as usize;
        let values = (0..self.order() as usize)
            .map(|i| {
                let c = per_sigma[i / uo];
                if c == 0 {
                    Vec::new()
                } else {
                    vec![(0, c)]
                }
            })
            .collect();
        ClassFunction {
            modulus: 1,
            denom: 1,
            values,
        }
    }

    /// `(χ(g)² − χ(g²))/2`.
    #[must_use]
    pub fn wedge_square(&self, chi: &ClassFunction) -> ClassFunction {
        let m = chi.modulus;
        let d = chi.denom;
        let values = (0..self.order() as usize)
            .map(|i| {
                let g = self.element(i);
                let g2 = self.id(&self.mul(&g, &g));
                let mut v = mul_terms(&chi.values[i], &chi.values[i], m);
                v.extend(chi.values[g2].iter().map(|&(k, c)| (k, -c * d)));
                compact(v, m)
            })
            .collect();
        ClassFunction {
            modulus: m,
            denom: 2 * d * d,
            values,
        }
    }

    /// `|G|^{-1} Σ χ₁(g)·conj(χ₂(g))`.
    #[must_use]
    pub fn inner_product(&self, a: &ClassFunction, b: &ClassFunction) -> Cyclo {
        let m = lcm(a.modulus, b.modulus);
        let (fa, fb) = (m / a.modulus, m / b.modulus);
        let mut h = RootHistogram::new(m);
        for (va, vb) in a.values.iter().zip(&b.values) {
            for &(k1, c1) in va {
                for &(k2, c2) in vb {
                    h.add((k1 * fa + m - (k2 * fb) % m) % m, c1 * c2);
                }
            }
        }
        h.to_cyclo()
            .scale(&rat(1, self.order() as i64 * a.denom * b.denom))
    }

    /// The right-hand side of the `∧²φ₁` decomposition.
    #[must_use]
    pub fn wedge_square_rhs(&self, vt: &FiniteCharacter) -> ClassFunction {
        let gam = &self.setup.tower.gamma;
        let u = &self.setup.ubar;
        let tau = gam.index(self.setup.tower.tau);
        let id = self.gamma_identity();
        let mut acc = self.regular_minus_r_tau();
        let mut seen = BTreeSet::new();
        for g in 0..self.n_gamma {
            let g2 = self.gm(g, g);
            if g2 == id {
                if g != id && g != tau {
                    acc = acc.add(&self.chi_gamma(vt, g));
                }
                continue;
            }
            if !seen.insert(g) {
                continue;
            }
            seen.insert(self.ginv[g]);
            // ρ_γ = Ind_{Ū} ϑ̃_γ, ϑ̃_γ(x) = ϑ̃(x^{1+γ})
            let tw = FiniteCharacter {
                modulus: vt.modulus,
                exps: (0..u.invariants().len())
                    .map(|b| {
                        let mut e = u.zero();
                        e[b] = 1;
                        vt.eval(&u.add(&e, &u.act_index(&e, g)))
                    })
                    .collect(),
            };
            acc = acc.add(&self.induce_from_ubar(&tw));
        }
        acc
    }

    /// Checks `χ_{∧²φ₁} = χ_{R_Γ} − χ_{R_τ} + Σ χ_{ρ_γ} + Σ χ_{π_γ}` on all of `G`.
    #[must_use]
    pub fn verify_wedge_square(&self, vt: &FiniteCharacter) -> WedgeSquareReport {
        let phi1 = self.induce_from_ubar(vt);
        let lhs = self.wedge_square(&phi1);
        let rhs = self.wedge_square_rhs(vt);
        let bad = lhs.mismatches(&rhs);
        let e = self.id(&self.identity());
        let deg = |c: &ClassFunction| {
            c.value(e)
                .to_rational()
                .map(|r| r.to_string())
                .unwrap_or_default()
        };
        WedgeSquareReport {
            cocycle: self.label.clone(),
            group_order: self.order(),
            checked: self.order(),
            lhs_degree: deg(&lhs),
            rhs_degree: deg(&rhs),
            mismatches: bad
                .iter()
                .take(10)
                .map(|&i| format!("{:?}", self.element(i)))
                .collect(),
            mismatch_count: bad.len() as u64,
            pass: bad.is_empty(),
        }
    }

    /// `|G|^{-1} Σ ν(g)·χ(g²)`, or `None` when `ν·χ ≠ χ`.
    #[must_use]
    pub fn fs_indicator(&self, nu: &LinearChar, chi: &ClassFunction) -> Option<Cyclo> {
        let m = lcm(nu.modulus, chi.modulus);
        let (fn_, fc) = (m / nu.modulus, m / chi.modulus);
        let n = self.order() as usize;
        for i in 0..n {
            if canonical_int_terms(chi.modulus, &chi.values[i]).is_empty() {
                continue;
            }
            if self.eval_linear(nu, &self.element(i)) != 0 {
                return None;
            }
        }
        let mut h = RootHistogram::new(m);
        for i in 0..n {
            let g = self.element(i);
            let g2 = self.id(&self.mul(&g, &g));
            let a = self.eval_linear(nu, &g) * fn_;
            for &(k, c) in &chi.values[g2] {
                h.add((a + k * fc) % m, c);
            }
        }
        Some(h.to_cyclo().scale(&rat(1, self.order() as i64 * chi.denom)))
    }
}

/// Outcome of the exhaustive `∧²φ₁` comparison.
#[derive(Clone, Debug, Serialize)]
pub struct WedgeSquareReport {
    pub cocycle: String,
    pub group_order: u64,
    pub checked: u64,
    pub lhs_degree: String,
    pub rhs_degree: String,
    pub mismatch_count: u64,
    pub mismatches: Vec<String>,
    pub pass: bool,
}
