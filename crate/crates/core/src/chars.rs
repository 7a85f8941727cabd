//! Characters of the finite quotients attached to a tame tower: the
//! norm-one group `Ū = K^{×(1−τ)}` with its Galois action, admissible
//! characters `θ`, the χ-data character `c`, quasi-characters of subfields,
//! conductors, and quadratic norm residue symbols.

use std::collections::BTreeSet;

use num_integer::{gcd, lcm};
use serde::Serialize;
use thiserror::Error;

use crate::exactnum::Cyclo;
use crate::galoisgrp::{GElem, InvolutionCase, SubfieldTag};
use crate::tamefield::ring::pow_mod_u;
use crate::tamefield::units::{norm_one_group, unit_group_quotient, FilteredUnitGroup};
use crate::tamefield::{Elem, SubField, TowerError, TowerModel, TowerParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharError {
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("character depth {depth} is insufficient (needs {needed})")]
    DepthInsufficient { depth: usize, needed: usize },
    #[error("element is not in the domain of the character")]
    NotInDomain,
    #[error("theta index {index} out of range ({count} admissible characters)")]
    ThetaIndex { index: usize, count: usize },
}

/// A character of a finite abelian group `⊕ Z/s_i`, given by the exponents
/// `k_i` with `χ(b_i) = ζ_M^{k_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FiniteCharacter {
    pub modulus: u64,
    pub exps: Vec<u64>,
}

impl FiniteCharacter {
    #[must_use]
    pub fn trivial(k: usize) -> Self {
        FiniteCharacter {
            modulus: 1,
            exps: vec![0; k],
        }
    }

    /// The character with `χ(b_i) = ζ_{s_i}^{c_i}`.
    #[must_use]
    pub fn from_lex(invariants: &[u64], c: &[u64]) -> Self {
        let m = invariants.iter().fold(1, |a, &s| lcm(a, s));
        FiniteCharacter {
            modulus: m,
            exps: c
                .iter()
                .zip(invariants)
                .map(|(&ci, &s)| ci * (m / s))
                .collect(),
        }
    }

    /// Exponent of `ζ_M` at the given coordinates.
    #[must_use]
    pub fn eval(&self, coords: &[u64]) -> u64 {
        let m = self.modulus as u128;
        let mut acc: u128 = 0;
        for (&k, &y) in self.exps.iter().zip(coords) {
            acc = (acc + k as u128 * y as u128) % m;
        }
        acc as u64
    }

    #[must_use]
    pub fn value(&self, coords: &[u64]) -> Cyclo {
        Cyclo::root_of_unity(self.modulus, self.eval(coords) as i64)
    }

    #[must_use]
    pub fn is_trivial_at(&self, coords: &[u64]) -> bool {
        self.eval(coords) == 0
    }

    fn rebased(&self, m: u64) -> Vec<u64> {
        self.exps.iter().map(|&k| k * (m / self.modulus)).collect()
    }

    /// Pointwise product, with the smallest common modulus.
    #[must_use]
    pub fn mul(&self, other: &FiniteCharacter) -> FiniteCharacter {
        let m = lcm(self.modulus, other.modulus);
        let a = self.rebased(m);
        let b = other.rebased(m);
        FiniteCharacter {
            modulus: m,
            exps: a.iter().zip(&b).map(|(x, y)| (x + y) % m).collect(),
        }
        .reduced()
    }

    #[must_use]
    pub fn inv(&self) -> FiniteCharacter {
        let m = self.modulus;
        FiniteCharacter {
            modulus: m,
            exps: self.exps.iter().map(|&k| (m - k) % m).collect(),
        }
    }

    /// Shrinks the modulus to the order of the character.
    #[must_use]
    pub fn reduced(mut self) -> FiniteCharacter {
        let g = self.exps.iter().fold(self.modulus, |a, &k| gcd(a, k));
        if g > 1 {
            self.modulus /= g;
            for k in &mut self.exps {
                *k /= g;
            }
        }
        self
    }

    /// Order of the character.
    #[must_use]
    pub fn order(&self) -> u64 {
        self.clone().reduced().modulus
    }
}

/// `Ū` with its coordinates and the right `Γ`-action `x^γ = γ^{-1}(x)`.
#[derive(Clone, Debug)]
pub struct UbarModule {
    pub group: FilteredUnitGroup,
    /// `act[i][j]` = coordinates of `b_j^{γ_i}` for `γ_i = Γ::from_index(i)`.
    act: Vec<Vec<Vec<u64>>>,
    /// Coordinates of `ϖ^{1−τ}`.
    pub pi_coords: Vec<u64>,
    /// Coordinates of `−1`.
    pub minus_one: Vec<u64>,
    /// `(O_K / p_K^{depth})^×`, used to describe `K^×`-side characters.
    pub full_units: FilteredUnitGroup,
    /// For each generator of `full_units` (torsion first): coordinates of
    /// its image under `x ↦ x^{1−τ}`, with its `ϖ`-level.
    pub full_gen_images: Vec<(usize, Vec<u64>)>,
}

impl UbarModule {
    /// The module modulo `1 + p_K^{depth}`.
    pub fn new(t: &TowerModel, depth: usize) -> Result<Self, CharError> {
        let group = norm_one_group(t, depth)?;
        let full_units = unit_group_quotient(t, &t.top(), depth)?;
        let mut act = Vec::new();
        for i in 0..t.gamma.order() as usize {
            let g = t.gamma.from_index(i);
            let imgs = group
                .basis
                .iter()
                .map(|b| {
                    group
                        .coords(t, &t.truncate(&t.act(b, g), depth))
                        .expect("Ū is Γ-stable")
                })
                .collect();
            act.push(imgs);
        }
        // τ(ϖ) = T^x ϖ, so ϖ^{1−τ} = T^{-x}
        let tx = t.auto_of(t.tau).x;
        let pi_unit = t.teich(-(tx as i64));
        let pi_coords = group.coords(t, &pi_unit).expect("ϖ^{1−τ} has norm one");
        let minus_one = group.coords(t, &t.scalar(-1)).expect("−1 has norm one");
        let mut m = UbarModule {
            group,
            act,
            pi_coords,
            minus_one,
            full_units: full_units.clone(),
            full_gen_images: Vec::new(),
        };
        let mut imgs = vec![(
            0usize,
            m.unit_image(t, &t.teich(full_units.torsion.0 as i64)),
        )];
        for (lvl, z) in &full_units.level_gens {
            imgs.push((*lvl, m.unit_image(t, z)));
        }
        m.full_gen_images = imgs;
        Ok(m)
    }

    #[must_use]
    pub fn invariants(&self) -> &[u64] {
        self.group.invariants()
    }

    #[must_use]
    pub fn order(&self) -> u64 {
        self.group.order()
    }

    #[must_use]
    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.invariants().len()]
    }

    #[must_use]
    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(self.invariants())
            .map(|((x, y), s)| (x + y) % s)
            .collect()
    }

    #[must_use]
    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(self.invariants())
            .map(|(x, s)| (s - x) % s)
            .collect()
    }

    #[must_use]
    pub fn scale(&self, a: &[u64], k: i64) -> Vec<u64> {
        a.iter()
            .zip(self.invariants())
            .map(|(&x, &s)| ((x as i128 * k as i128).rem_euclid(s as i128)) as u64)
            .collect()
    }

    /// `x^γ` in coordinates, `γ` given by its index in `Γ`.
    #[must_use]
    pub fn act_index(&self, x: &[u64], gi: usize) -> Vec<u64> {
        let inv = self.invariants();
        let mut out = vec![0u64; inv.len()];
        for (j, &c) in x.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (o, (&b, &s)) in out.iter_mut().zip(self.act[gi][j].iter().zip(inv)) {
                *o = ((*o as u128 + c as u128 * b as u128) % s as u128) as u64;
            }
        }
        out
    }

    /// `x^{1−τ}` for a unit `x`, in coordinates.
    #[must_use]
    pub fn unit_image(&self, t: &TowerModel, x: &[u64]) -> Vec<u64> {
        let xt = t.galois_apply(t.tau, x);
        let u = t.truncate(&t.mul(x, &t.unit_inv(&xt)), self.group.depth);
        self.group.coords(t, &u).expect("x^{1−τ} has norm one")
    }

    /// `x^{1−τ}` for any nonzero `x ∈ O_K` of valuation below the precision
    /// margin.
    #[must_use]
    pub fn image(&self, t: &TowerModel, x: &[u64]) -> Vec<u64> {
        let v = t.valuation(x);
        let u = t.div_uniformizer_pow(x, v);
        assert!(
            t.precision - v >= self.group.depth,
            "element too deep for exact image"
        );
        let base = self.unit_image(t, &u);
        self.add(&base, &self.scale(&self.pi_coords, v as i64))
    }

    /// All elements in lexicographic coordinate order.
    #[must_use]
    pub fn all_coords(&self) -> Vec<Vec<u64>> {
        self.group.all_coords()
    }
}

/// Everything character-theoretic attached to a realized tower.
#[derive(Clone, Debug)]
pub struct CharSetup {
    pub tower: TowerModel,
    pub beta: Elem,
    pub ubar: UbarModule,
}

impl CharSetup {
    /// Realizes the tower at precision `e(r+2)`, finds `β`, and builds `Ū`
    /// modulo `1 + p_K^{er}`.
    pub fn new(params: TowerParams) -> Result<Self, CharError> {
        let tower = crate::tamefield::realize_tower(params, (params.e * (params.r + 2)) as usize)?;
        let beta = tower.find_beta()?;
        let ubar = UbarModule::new(&tower, (params.e * params.r) as usize)?;
        Ok(CharSetup { tower, beta, ubar })
    }

    #[must_use]
    pub fn params(&self) -> &TowerParams {
        &self.tower.params
    }

    /// Generators of `Ū ∩ (1 + p_K^k)` in coordinates.
    #[must_use]
    pub fn level_gens(&self, k: usize) -> Vec<Vec<u64>> {
        self.ubar.group.level_subgroup_gens(k)
    }

    /// For each generator `α` of `Ū ∩ (1 + p_K^{el})`: its coordinates and the
    /// prescribed value `ψ(ϖ_F^{-l'} T_{K/F}(xβ))` with `α = 1 + ϖ_F^l x`,
    /// as an exponent of `ζ_{p^{l'}}`.
    #[must_use]
    pub fn theta_constraints(&self) -> Vec<(Vec<u64>, u64)> {
        let t = &self.tower;
        let prm = self.params();
        let (l, lp) = (prm.l() as usize, prm.l_prime() as u32);
        let el = prm.e as usize * l;
        let g = &self.ubar.group;
        let base = t.base();
        g.level_gens
            .iter()
            .filter(|(v, _)| *v >= el)
            .map(|(_, z)| {
                let coords = g.coords(t, z).expect("generator");
                (coords, self.pinned_value(z, l, lp, &base))
            })
            .collect()
    }

    /// `Tr_{F/Q_p} T_{K/F}(xβ) mod p^{l'}` for `α = 1 + p^l x`.
    fn pinned_value(&self, alpha: &[u64], l: usize, lp: u32, base: &SubField) -> u64 {
        let t = &self.tower;
        let am1 = t.sub(alpha, &t.one());
        let x: Elem = am1
            .chunks(t.d())
            .flat_map(|b| t.ring.div_p_pow(b, l as u32))
            .collect();
        let xb = t.mul(&x, &self.beta);
        let tr = t.trace_to(base, &xb);
        t.trace_f_qp(&tr) % t.p().pow(lp)
    }

    /// Whether a character of `Ū` satisfies the admissibility conditions.
    #[must_use]
    pub fn is_admissible(&self, theta: &FiniteCharacter) -> bool {
        let lp = self.params().l_prime() as u32;
        let pl = self.tower.p().pow(lp);
        self.theta_constraints().iter().all(|(c, want)| {
            let m = lcm(theta.modulus, pl);
            theta.eval(c) * (m / theta.modulus) % m == want * (m / pl) % m
        })
    }

    /// All admissible `θ`, in lexicographic order of their exponents.
    #[must_use]
    pub fn admissible_thetas(&self) -> Vec<FiniteCharacter> {
        let inv = self.ubar.invariants().to_vec();
        let m = inv.iter().fold(1, |a, &s| lcm(a, s));
        let lp = self.params().l_prime() as u32;
        let pl = self.tower.p().pow(lp);
        let mm = lcm(m, pl);
        let cons: Vec<(Vec<u64>, u64)> = self
            .theta_constraints()
            .into_iter()
            .map(|(c, w)| {
                // weight of coordinate i: c_i·(mm/s_i)
                let wts = c
                    .iter()
                    .zip(&inv)
                    .map(|(&ci, &s)| ci * (mm / s) % mm)
                    .collect();
                (wts, w * (mm / pl) % mm)
            })
            .collect();
        let mut out = Vec::new();
        let mut c = vec![0u64; inv.len()];
        loop {
            let ok = cons.iter().all(|(wts, want)| {
                let mut acc: u128 = 0;
                for (&ci, &w) in c.iter().zip(wts) {
                    acc += ci as u128 * w as u128;
                }
                (acc % mm as u128) as u64 == *want
            });
            if ok {
                out.push(FiniteCharacter::from_lex(&inv, &c));
            }
            // odometer, last coordinate fastest
            let mut i = inv.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                c[i] += 1;
                if c[i] < inv[i] {
                    break;
                }
                c[i] = 0;
            }
        }
    }

    /// The `index`-th admissible `θ`.
    pub fn theta(&self, index: usize) -> Result<FiniteCharacter, CharError> {
        let all = self.admissible_thetas();
        let count = all.len();
        all.into_iter()
            .nth(index)
            .ok_or(CharError::ThetaIndex { index, count })
    }

    /// `|G_β(F_q)|·q^{(l−1)n}`, the predicted number of admissible `θ`.
    #[must_use]
    pub fn predicted_theta_count(&self) -> u64 {
        let p = self.params();
        let q = p.q();
        let n = p.n() as u32;
        let qn = q.pow(n);
        let g_beta = if p.ramified_over_kplus() {
            2 * qn
        } else {
            qn + qn / q.pow(p.f_plus() as u32)
        };
        g_beta * q.pow(((p.l() - 1) * p.n()) as u32)
    }

    /// The character `c` on `Ū` from the minimal χ-data choice.
    #[must_use]
    pub fn chi_data_c(&self) -> FiniteCharacter {
        let t = &self.tower;
        let k = self.ubar.invariants().len();
        let case = t.gamma.involutions().case;
        if t.params.ramified_over_kplus() {
            // trivial on Ū ∩ (1 + p_K), c(−1) = (−1)^{(q−1)/2}
            let q_plus = t.q().pow(t.params.f_plus() as u32);
            let sign = (q_plus - 1) / 2 % 2;
            let vals = self.char_from_torsion(sign);
            return vals.unwrap_or_else(|| FiniteCharacter::trivial(k));
        }
        if case != InvolutionCase::Klein {
            return FiniteCharacter::trivial(k);
        }
        // |H| = 4: c(h^j) = (−1)^j for the torsion generator h of Ū
        self.char_from_torsion(1).expect("μ_U has even order")
    }

    /// The character trivial on `Ū ∩ (1 + p_K)` sending the torsion
    /// generator to `(−1)^{sign}`.
    fn char_from_torsion(&self, sign: u64) -> Option<FiniteCharacter> {
        let t = &self.tower;
        let g = &self.ubar.group;
        let k = self.ubar.invariants().len();
        // evaluate on the basis: basis element b has digits; torsion digit d_0
        let exps = g
            .basis
            .iter()
            .map(|b| {
                let d = g.digits(t, b).expect("basis element");
                (d[0] * sign) % 2
            })
            .collect::<Vec<u64>>();
        if exps.len() != k {
            return None;
        }
        Some(FiniteCharacter { modulus: 2, exps }.reduced())
    }

    /// `ϑ = c·θ`.
    #[must_use]
    pub fn vartheta(&self, theta: &FiniteCharacter) -> FiniteCharacter {
        self.chi_data_c().mul(theta)
    }

    /// `ϑ(−1)` as `±1`.
    #[must_use]
    pub fn sign_at_minus_one(&self, ch: &FiniteCharacter) -> i64 {
        let k = ch.eval(&self.ubar.minus_one);
        if k == 0 {
            1
        } else {
            assert_eq!(2 * k, ch.modulus, "value at −1 must be ±1");
            -1
        }
    }

    /// Conductor of `x ↦ χ(x^{1−τ})` on `K^×`: 0 if trivial on `O_K^×`,
    /// otherwise the least `k ≥ 1` with triviality on `1 + p_K^k`.
    #[must_use]
    pub fn conductor_tilde(&self, ch: &FiniteCharacter) -> usize {
        let imgs = &self.ubar.full_gen_images;
        if imgs.iter().all(|(_, c)| ch.is_trivial_at(c)) {
            return 0;
        }
        let trivial_from = |k: usize| {
            imgs.iter()
                .filter(|(v, _)| *v >= k && *v >= 1)
                .all(|(_, c)| ch.is_trivial_at(c))
        };
        (1..=self.ubar.group.depth)
            .find(|&k| trivial_from(k))
            .expect("trivial beyond the depth")
    }

    /// `{σ : χ̃(x^σ) = χ̃(x) for all x ∈ 1 + p_K^k}`.
    #[must_use]
    pub fn twist_fixers(&self, ch: &FiniteCharacter, k: usize) -> Vec<GElem> {
        let gam = &self.tower.gamma;
        let gens: Vec<&Vec<u64>> = self
            .ubar
            .full_gen_images
            .iter()
            .filter(|(v, _)| *v >= k && *v >= 1)
            .map(|(_, c)| c)
            .collect();
        gam.elements()
            .into_iter()
            .filter(|&s| {
                let si = gam.index(s);
                gens.iter()
                    .all(|c| ch.eval(&self.ubar.act_index(c, si)) == ch.eval(c))
            })
            .collect()
    }

    /// `χ̃` as a quasi-character of `K^×` (depth `er`).
    #[must_use]
    pub fn tilde(&self, ch: &FiniteCharacter) -> QuasiChar {
        let t = &self.tower;
        let top = t.top();
        let units = self.ubar.full_units.clone();
        let exps = units
            .basis
            .iter()
            .map(|b| ch.eval(&self.ubar.unit_image(t, b)))
            .collect();
        let pi_exp = ch.eval(&self.ubar.pi_coords);
        QuasiChar {
            field: top,
            units,
            modulus: ch.modulus,
            exps,
            pi_exp,
        }
        .reduced()
    }

    /// `x ↦ χ̃(x^{1+γ})` as a quasi-character of `K^×`.
    #[must_use]
    pub fn tilde_twisted(&self, ch: &FiniteCharacter, gamma: GElem) -> QuasiChar {
        let gi = self.tower.gamma.index(gamma);
        let tw = |c: &[u64]| self.ubar.add(c, &self.ubar.act_index(c, gi));
        let t = &self.tower;
        let units = self.ubar.full_units.clone();
        let exps = units
            .basis
            .iter()
            .map(|b| ch.eval(&tw(&self.ubar.unit_image(t, b))))
            .collect();
        let pi_exp = ch.eval(&tw(&self.ubar.pi_coords));
        QuasiChar {
            field: t.top(),
            units,
            modulus: ch.modulus,
            exps,
            pi_exp,
        }
        .reduced()
    }

    /// `χ̃_γ(x) = (x, K/K_γ)·χ̃(x)` on `K_γ^×` for an involution `γ`.
    pub fn chi_tilde_gamma(
        &self,
        ch: &FiniteCharacter,
        gamma: GElem,
    ) -> Result<QuasiChar, CharError> {
        let t = &self.tower;
        let kg = t.subfield(SubfieldTag::KGamma(gamma))?;
        let nl = (self.ubar.group.depth).div_ceil(kg.info.e_top as usize);
        let units = unit_group_quotient(t, &kg, nl)?;
        let sym = NormResidue::new(t, &t.top(), &kg);
        let m = lcm(ch.modulus, 2);
        let eval = |x: &Elem| -> u64 {
            let a = ch.eval(&self.ubar.image(t, x)) * (m / ch.modulus);
            let b = if sym.symbol(t, x) == 1 { 0 } else { m / 2 };
            (a + b) % m
        };
        let exps = units.basis.iter().map(eval).collect();
        let pi_exp = eval(&kg.uniformizer);
        Ok(QuasiChar {
            field: kg,
            units,
            modulus: m,
            exps,
            pi_exp,
        }
        .reduced())
    }
}

/// A quasi-character of `L^×` trivial on `1 + p_L^N`, described by its values
/// on a basis of `(O_L/p_L^N)^×` and on the model uniformizer `ϖ_L`.
#[derive(Clone, Debug)]
pub struct QuasiChar {
    pub field: SubField,
    pub units: FilteredUnitGroup,
    pub modulus: u64,
    pub exps: Vec<u64>,
    pub pi_exp: u64,
}

impl QuasiChar {
    #[must_use]
    pub fn reduced(mut self) -> Self {
        let g = self
            .exps
            .iter()
            .fold(gcd(self.modulus, self.pi_exp), |a, &k| gcd(a, k));
        if g > 1 {
            self.modulus /= g;
            self.pi_exp /= g;
            for k in &mut self.exps {
                *k /= g;
            }
        }
        self
    }

    fn eval_coords(&self, c: &[u64]) -> u64 {
        let m = self.modulus as u128;
        let mut acc: u128 = 0;
        for (&k, &y) in self.exps.iter().zip(c) {
            acc = (acc + k as u128 * y as u128) % m;
        }
        acc as u64
    }

    /// Exponent of `ζ_M` at a unit of `O_L`.
    pub fn eval_unit(&self, t: &TowerModel, u: &[u64]) -> Result<u64, CharError> {
        let c = self
            .units
            .coords(t, &t.truncate(u, self.units.depth))
            .ok_or(CharError::NotInDomain)?;
        Ok(self.eval_coords(&c))
    }

    /// Exponent of `ζ_M` at a nonzero element of `L ∩ O_K`.
    pub fn eval(&self, t: &TowerModel, x: &[u64]) -> Result<u64, CharError> {
        let et = self.field.info.e_top as usize;
        let v = t.valuation(x);
        if v % et != 0 {
            return Err(CharError::NotInDomain);
        }
        let vl = v / et;
        let u = t.div_uniformizer_pow(x, v);
        let u = t.mul(
            &u,
            &t.teich(-(self.field.uniformizer_teich as i64) * vl as i64),
        );
        let a = self.eval_unit(t, &u)?;
        Ok((a + self.pi_exp * vl as u64) % self.modulus)
    }

    #[must_use]
    pub fn value(&self, t: &TowerModel, x: &[u64]) -> Cyclo {
        Cyclo::root_of_unity(self.modulus, self.eval(t, x).expect("in domain") as i64)
    }

    /// Conductor exponent `f(χ)` in `L`-valuation (0 if unramified).
    #[must_use]
    pub fn conductor(&self) -> usize {
        let et = self.field.info.e_top as usize;
        let trivial_from = |k: usize| {
            self.units
                .level_subgroup_gens(k * et)
                .iter()
                .all(|c| self.eval_coords(c) == 0)
        };
        if self.eval_coords(&self.units.torsion_coords()) == 0 && trivial_from(0) {
            return 0;
        }
        let top = self.units.depth.div_ceil(et);
        (1..=top)
            .find(|&k| trivial_from(k))
            .expect("trivial beyond the depth")
    }

    /// `χ(ϖ_L)` as an exponent.
    #[must_use]
    pub fn at_uniformizer(&self) -> u64 {
        self.pi_exp
    }
}

/// Norm classes for a cyclic tame extension `L'/L` of degree `d`, computed
/// in `L^× / ⟨ϖ_L^d⟩(1 + p_L) ≅ Z/d × k_L^×`. For `d = 2` this is the
/// quadratic norm residue symbol `(x, L'/L)`.
#[derive(Clone, Debug)]
pub struct NormResidue {
    pub small: SubField,
    pub degree: u64,
    /// Norm subgroup as a set of `(valuation mod d, Teichmüller index)`.
    norms: BTreeSet<(u64, u64)>,
    q_l: u64,
}

impl NormResidue {
    /// `big` is `L'`, `small` is `L`.
    #[must_use]
    pub fn new(t: &TowerModel, big: &SubField, small: &SubField) -> Self {
        let s_small = &small.info.subgroup;
        let s_big: BTreeSet<GElem> = big.info.subgroup.iter().copied().collect();
        assert_eq!(s_small.len() % s_big.len(), 0, "subfield expected");
        let degree = (s_small.len() / s_big.len()) as u64;
        // coset representatives of S_small / S_big
        let mut reps = Vec::new();
        let mut seen = BTreeSet::new();
        for &g in s_small {
            if seen.contains(&g) {
                continue;
            }
            for &h in &s_big {
                seen.insert(t.gamma.mul(g, h));
            }
            reps.push(g);
        }
        // norms of monomials T^a ϖ^v, using σ(T^a ϖ^v) = T^{a p^k + x v} ϖ^v
        let qm1 = t.ring.unit_order();
        let norm_monomial = |a: u64, v: u64| -> (u64, u64) {
            let mut exp: u128 = 0;
            for g in &reps {
                let s = t.auto_of(*g);
                let pk = pow_mod_u(t.p(), s.k, qm1) as u128;
                exp += (a as u128 * pk + s.x as u128 * v as u128) % qm1 as u128;
            }
            ((exp % qm1 as u128) as u64, v * reps.len() as u64)
        };
        let q_l = small.q_l;
        let mut nr = NormResidue {
            small: small.clone(),
            degree,
            norms: BTreeSet::new(),
            q_l,
        };
        let (a0, v0) = norm_monomial(big.uniformizer_teich, big.info.e_top);
        let (a1, _) = norm_monomial(big.teich_gen, 0);
        let gens = [nr.class_monomial(t, a0, v0), nr.class_monomial(t, a1, 0)];
        let mut set = BTreeSet::new();
        set.insert((0u64, 0u64));
        loop {
            let mut grew = false;
            for x in set.clone() {
                for g in &gens {
                    let y = ((x.0 + g.0) % degree, (x.1 + g.1) % (q_l - 1));
                    grew |= set.insert(y);
                }
            }
            if !grew {
                break;
            }
        }
        assert_eq!(set.len() as u64, q_l - 1, "norm subgroup must have index d");
        nr.norms = set;
        nr
    }

    /// Class of `T^a ϖ^v ∈ L^×`.
    fn class_monomial(&self, t: &TowerModel, a: u64, v: u64) -> (u64, u64) {
        let qm1 = t.ring.unit_order();
        let et = self.small.info.e_top;
        assert_eq!(v % et, 0, "element not in L");
        let vl = v / et;
        // T^a ϖ^v = T^{a − y·vl} ϖ_L^{vl}
        let shift = (self.small.uniformizer_teich as u128 * vl as u128 % qm1 as u128) as u64;
        let r = (a + qm1 - shift) % qm1;
        assert_eq!(r % self.small.teich_gen, 0, "residue not in k_L");
        (
            vl % self.degree,
            (r / self.small.teich_gen) % (self.q_l - 1),
        )
    }

    /// Class of `x ∈ L^×` in `Z/d × k_L^×`.
    fn class(&self, t: &TowerModel, x: &[u64]) -> (u64, u64) {
        let et = self.small.info.e_top as usize;
        let v = t.valuation(x);
        assert_eq!(v % et, 0, "element not in L");
        let vl = v / et;
        let u = t.div_uniformizer_pow(x, v);
        let u = t.mul(
            &u,
            &t.teich(-(self.small.uniformizer_teich as i64) * vl as i64),
        );
        let a = t.leading_log(&u).expect("unit");
        assert_eq!(a % self.small.teich_gen, 0, "residue not in k_L");
        (
            (vl as u64) % self.degree,
            (a / self.small.teich_gen) % (self.q_l - 1),
        )
    }

    /// Whether `x` is a norm from `L'`.
    #[must_use]
    pub fn is_norm(&self, t: &TowerModel, x: &[u64]) -> bool {
        self.norms.contains(&self.class(t, x))
    }

    /// `(x, L'/L) = ±1` for a quadratic extension.
    #[must_use]
    pub fn symbol(&self, t: &TowerModel, x: &[u64]) -> i64 {
        assert_eq!(self.degree, 2, "symbol needs a quadratic extension");
        if self.is_norm(t, x) {
            1
        } else {
            -1
        }
    }

    /// Order of the class of `x` in `L^× / N(L'^×)`.
    #[must_use]
    pub fn class_order(&self, t: &TowerModel, x: &[u64]) -> u64 {
        let c = self.class(t, x);
        (1..=self.degree)
            .find(|&k| {
                let y = ((c.0 * k) % self.degree, (c.1 * k) % (self.q_l - 1));
                self.norms.contains(&y)
            })
            .expect("the quotient has exponent d")
    }

    /// The characters of `L^× / N(L'^×)` as quasi-characters of `L^×`.
    pub fn characters(&self, t: &TowerModel) -> Result<Vec<QuasiChar>, CharError> {
        let units = unit_group_quotient(t, &self.small, 1)?;
        let (d, qm1) = (self.degree, self.q_l - 1);
        let m = lcm(d, qm1);
        let val = |i: u64, j: u64, c: (u64, u64)| (i * c.0 * (m / d) + j * c.1 * (m / qm1)) % m;
        let unit_classes: Vec<_> = units.basis.iter().map(|b| self.class(t, b)).collect();
        let pi_class = self.class(t, &self.small.uniformizer);
        let mut out = Vec::new();
        for i in 0..d {
            for j in 0..qm1 {
                if self.norms.iter().any(|&c| val(i, j, c) != 0) {
                    continue;
                }
                let exps = unit_classes.iter().map(|&c| val(i, j, c)).collect();
                let field = self.small.clone();
                let pi_exp = val(i, j, pi_class);
                out.push(
                    QuasiChar {
                        field,
                        units: units.clone(),
                        modulus: m,
                        exps,
                        pi_exp,
                    }
                    .reduced(),
                );
            }
        }
        debug_assert_eq!(out.len() as u64, d);
        Ok(out)
    }
}
