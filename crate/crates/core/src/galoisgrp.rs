//! Metacyclic Galois groups of tame extensions.
//!
//! `Γ(e,f,q,m) = ⟨δ,ρ | δ^e = 1, ρ^f = δ^m, ρ⁻¹δρ = δ^q⟩`, elements kept in
//! the normal form `δ^a ρ^b` with `0 ≤ a < e`, `0 ≤ b < f`.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("invalid group parameters (e={e}, f={f}, q={q}, m={m}): {reason}")]
    InvalidParams {
        e: u64,
        f: u64,
        q: u64,
        m: u64,
        reason: String,
    },
    #[error("chosen tau is not a nontrivial involution")]
    TauNotInvolution,
}

/// `b^k mod n`.
#[must_use]
pub fn pow_mod(b: u64, mut k: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let mut acc: u128 = 1;
    let mut base = (b % n) as u128;
    let n128 = n as u128;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base % n128;
        }
        base = base * base % n128;
        k >>= 1;
    }
    acc as u64
}

/// Inverse of `a` modulo `n` (for `gcd(a,n) = 1`).
#[must_use]
pub fn inv_mod(a: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let g = (a as i64).extended_gcd(&(n as i64));
    assert_eq!(g.gcd, 1, "{a} is not invertible mod {n}");
    g.x.rem_euclid(n as i64) as u64
}

/// An element `δ^a ρ^b` in normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GElem {
    pub a: u64,
    pub b: u64,
}

impl fmt::Display for GElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (0, 0) => write!(f, "1"),
            (a, 0) => write!(f, "δ^{a}"),
            (0, b) => write!(f, "ρ^{b}"),
            (a, b) => write!(f, "δ^{a}ρ^{b}"),
        }
    }
}

/// The abstract group `Γ(e,f,q,m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetacyclicGroup {
    pub e: u64,
    pub f: u64,
    pub q: u64,
    pub m: u64,
    /// `q^{-k} mod e` for `0 ≤ k < f`.
    qinv_pows: Vec<u64>,
}

/// Which row of the involution table applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InvolutionCase {
    /// `|Γ|` odd: no involutions.
    Trivial,
    /// `f` odd, or `e` even with `m` odd: `H = {1, δ^{e/2}}`.
    InertiaOnly,
    /// `e` odd, `m` even: `H = {1, ρ^{f/2}δ^{-m/2}}`.
    FrobeniusEvenM,
    /// `e` odd, `m` odd: `H = {1, ρ^{f/2}δ^{(e-m)/2}}`.
    FrobeniusOddM,
    /// `e`, `f`, `m` even: `|H| = 4`.
    Klein,
}

/// The involution subgroup `H = {γ : γ² = 1}` with its case label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Involutions {
    pub elements: Vec<GElem>,
    pub case: InvolutionCase,
}

/// Build `Γ(e,f,q,m)`, checking the tame-realizability conditions.
///
/// Besides `e | q^f − 1` and `m(q − 1) ≡ 0 mod e`, groups with even `f` must
/// satisfy `e | q^{f/2} − 1`, which is the condition under which `ρ^{f/2}`
/// commutes with `δ`; when `e`, `f`, `m` are all even, also
/// `(m/2)(q − 1) ≡ 0 mod e`, so that `ρ^{f/2}δ^{-m/2}` commutes with `ρ`.
/// Together these make every involution central.
pub fn build_gamma(e: u64, f: u64, q: u64, m: u64) -> Result<MetacyclicGroup, GroupError> {
    let bad = |reason: &str| GroupError::InvalidParams {
        e,
        f,
        q,
        m,
        reason: reason.to_string(),
    };
    if e == 0 || f == 0 {
        return Err(bad("e and f must be positive"));
    }
    if q < 2 {
        return Err(bad("q must be at least 2"));
    }
    if m >= e {
        return Err(bad("m must satisfy 0 <= m < e"));
    }
    if e > 1 && q.gcd(&e) != 1 {
        return Err(bad("e must be prime to q"));
    }
    if pow_mod(q, f, e) != 1 % e {
        return Err(bad("e does not divide q^f - 1"));
    }
    if (m as u128 * (q as u128 - 1)) % e as u128 != 0 {
        return Err(bad("m(q-1) is not divisible by e"));
    }
    if f % 2 == 0 && pow_mod(q, f / 2, e) != 1 % e {
        return Err(bad("f even requires e | q^(f/2) - 1"));
    }
    if e % 2 == 0
        && f % 2 == 0
        && m % 2 == 0
        && ((m / 2) as u128 * (q as u128 - 1)) % e as u128 != 0
    {
        return Err(bad("e, f, m even requires (m/2)(q-1) divisible by e"));
    }
    let qi = inv_mod(q % e.max(1), e);
    let mut qinv_pows = Vec::with_capacity(f as usize);
    let mut acc = 1 % e;
    for _ in 0..f {
        qinv_pows.push(acc);
        acc = (acc as u128 * qi as u128 % e as u128) as u64;
    }
    Ok(MetacyclicGroup {
        e,
        f,
        q,
        m,
        qinv_pows,
    })
}

impl MetacyclicGroup {
    #[must_use]
    pub fn order(&self) -> u64 {
        self.e * self.f
    }

    #[must_use]
    pub fn identity(&self) -> GElem {
        GElem { a: 0, b: 0 }
    }

    #[must_use]
    pub fn delta(&self) -> GElem {
        GElem {
            a: 1 % self.e,
            b: 0,
        }
    }

    #[must_use]
    pub fn rho(&self) -> GElem {
        if self.f == 1 {
            GElem { a: self.m, b: 0 }
        } else {
            GElem { a: 0, b: 1 }
        }
    }

    #[must_use]
    pub fn elem(&self, a: i64, b: i64) -> GElem {
        // δ^a ρ^b for arbitrary integers, via multiplication
        let d = self.pow(self.delta(), a);
        let r = self.pow(self.rho(), b);
        self.mul(d, r)
    }

    /// All elements in index order.
    #[must_use]
    pub fn elements(&self) -> Vec<GElem> {
        let mut v = Vec::with_capacity(self.order() as usize);
        for b in 0..self.f {
            for a in 0..self.e {
                v.push(GElem { a, b });
            }
        }
        v
    }

    /// Dense index `a + e·b`.
    #[inline]
    #[must_use]
    pub fn index(&self, g: GElem) -> usize {
        (g.a + self.e * g.b) as usize
    }

    #[inline]
    #[must_use]
    pub fn from_index(&self, i: usize) -> GElem {
        let i = i as u64;
        GElem {
            a: i % self.e,
            b: i / self.e,
        }
    }

    /// `δ^a ρ^b · δ^c ρ^d = δ^{a + c q^{-b} (+ m)} ρ^{(b+d) mod f}`.
    #[inline]
    #[must_use]
    pub fn mul(&self, x: GElem, y: GElem) -> GElem {
        let e = self.e;
        let mut a = (x.a + y.a * self.qinv_pows[x.b as usize]) % e;
        let mut b = x.b + y.b;
        if b >= self.f {
            b -= self.f;
            a = (a + self.m) % e;
        }
        GElem { a, b }
    }

    #[must_use]
    pub fn inv(&self, x: GElem) -> GElem {
        // brute force over the cyclic subgroup generated by x
        let mut y = x;
        let mut prev = self.identity();
        while y != self.identity() {
            prev = y;
            y = self.mul(y, x);
        }
        prev
    }

    #[must_use]
    pub fn pow(&self, x: GElem, k: i64) -> GElem {
        let base = if k < 0 { self.inv(x) } else { x };
        let mut k = k.unsigned_abs();
        let mut acc = self.identity();
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            k >>= 1;
        }
        acc
    }

    #[must_use]
    pub fn elem_order(&self, x: GElem) -> u64 {
        let mut y = x;
        let mut k = 1;
        while y != self.identity() {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    /// `ord(ρ) = f · e / gcd(e, m)`.
    #[must_use]
    pub fn rho_order_formula(&self) -> u64 {
        self.f * self.e / self.e.gcd(&self.m)
    }

    /// Whether `x` lies in the inertia subgroup `⟨δ⟩`.
    #[must_use]
    pub fn in_inertia(&self, x: GElem) -> bool {
        x.b == 0
    }

    #[must_use]
    pub fn is_central(&self, x: GElem) -> bool {
        [self.delta(), self.rho()]
            .iter()
            .all(|&g| self.mul(x, g) == self.mul(g, x))
    }

    #[must_use]
    pub fn is_cyclic(&self) -> bool {
        let n = self.order();
        self.elements().iter().any(|&g| self.elem_order(g) == n)
    }

    /// A generator when the group is cyclic.
    #[must_use]
    pub fn cyclic_generator(&self) -> Option<GElem> {
        let n = self.order();
        self.elements()
            .into_iter()
            .find(|&g| self.elem_order(g) == n)
    }

    /// The subgroup generated by `gens`, sorted.
    #[must_use]
    pub fn closure(&self, gens: &[GElem]) -> Vec<GElem> {
        let mut set: BTreeSet<GElem> = BTreeSet::new();
        set.insert(self.identity());
        let mut frontier = vec![self.identity()];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if set.insert(y) {
                    frontier.push(y);
                }
            }
        }
        set.into_iter().collect()
    }

    /// The case label predicted from the parities of `e`, `f`, `m`.
    #[must_use]
    pub fn involution_case(&self) -> InvolutionCase {
        let (e, f, m) = (self.e, self.f, self.m);
        if (e * f) % 2 == 1 {
            InvolutionCase::Trivial
        } else if f % 2 == 1 || (e % 2 == 0 && m % 2 == 1) {
            InvolutionCase::InertiaOnly
        } else if e % 2 == 1 && m % 2 == 0 {
            InvolutionCase::FrobeniusEvenM
        } else if e % 2 == 1 {
            InvolutionCase::FrobeniusOddM
        } else {
            InvolutionCase::Klein
        }
    }

    /// The involution set predicted by the case table.
    #[must_use]
    pub fn predicted_involutions(&self) -> Vec<GElem> {
        let e = self.e as i64;
        let f = self.f as i64;
        let m = self.m as i64;
        let one = self.identity();
        let mut v = match self.involution_case() {
            InvolutionCase::Trivial => vec![one],
            InvolutionCase::InertiaOnly => vec![one, self.elem(e / 2, 0)],
            InvolutionCase::FrobeniusEvenM => {
                vec![one, self.mul(self.elem(0, f / 2), self.elem(-m / 2, 0))]
            }
            InvolutionCase::FrobeniusOddM => {
                vec![
                    one,
                    self.mul(self.elem(0, f / 2), self.elem((e - m) / 2, 0)),
                ]
            }
            InvolutionCase::Klein => {
                let t = self.mul(self.elem(0, f / 2), self.elem(-m / 2, 0));
                let d = self.elem(e / 2, 0);
                vec![one, d, t, self.mul(d, t)]
            }
        };
        v.sort();
        v.dedup();
        v
    }

    /// `H = {γ : γ² = 1}` found by enumeration, labelled by the case table.
    #[must_use]
    pub fn involutions(&self) -> Involutions {
        let elements: Vec<GElem> = self
            .elements()
            .into_iter()
            .filter(|&g| self.mul(g, g) == self.identity())
            .collect();
        let mut elements = elements;
        elements.sort();
        Involutions {
            elements,
            case: self.involution_case(),
        }
    }

    /// Checks that `τ` is a nontrivial involution.
    pub fn check_tau(&self, tau: GElem) -> Result<(), GroupError> {
        if tau == self.identity() || self.mul(tau, tau) != self.identity() {
            return Err(GroupError::TauNotInvolution);
        }
        Ok(())
    }

    /// Ramification data of the fixed field of a subgroup.
    #[must_use]
    pub fn subfield(&self, name: SubfieldTag, gens: &[GElem]) -> SubfieldInfo {
        let subgroup = self.closure(gens);
        let e_kl = subgroup.iter().filter(|g| self.in_inertia(**g)).count() as u64;
        let f_kl = subgroup.len() as u64 / e_kl;
        SubfieldInfo {
            tag: name,
            generators: gens.to_vec(),
            subgroup,
            e_over_base: self.e / e_kl,
            f_over_base: self.f / f_kl,
            e_top: e_kl,
            f_top: f_kl,
        }
    }

    /// The subfield lattice relevant for a choice of `τ`.
    ///
    /// With `|H| = 2`: `K`, `K_+`, `K_0`, `F`. With `|H| = 4` additionally
    /// `K_{δ'}`, `K_{τ'}`, `E = K^H` and `E_0 = E ∩ K_0`.
    pub fn subfield_lattice(&self, tau: GElem) -> Result<Vec<SubfieldInfo>, GroupError> {
        self.check_tau(tau)?;
        let h = self.involutions();
        let one = self.identity();
        let mut out = vec![
            self.subfield(SubfieldTag::K, &[]),
            self.subfield(SubfieldTag::KPlus, &[tau]),
        ];
        if h.elements.len() == 4 {
            let dp = self.elem(self.e as i64 / 2, 0);
            let tp = self.mul(dp, tau);
            out.push(self.subfield(SubfieldTag::KDeltaPrime, &[dp]));
            out.push(self.subfield(SubfieldTag::KTauPrime, &[tp]));
            out.push(self.subfield(SubfieldTag::E, &[dp, tau]));
            out.push(self.subfield(SubfieldTag::E0, &[self.delta(), tau]));
        }
        out.push(self.subfield(SubfieldTag::K0, &[self.delta()]));
        let mut gens = vec![self.delta(), self.rho()];
        gens.retain(|g| *g != one);
        out.push(self.subfield(SubfieldTag::F, &gens));
        Ok(out)
    }
}

/// Names of the fields in the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SubfieldTag {
    K,
    KPlus,
    KDeltaPrime,
    KTauPrime,
    E,
    E0,
    K0,
    F,
    /// Fixed field of a cyclic subgroup `⟨γ⟩`.
    KGamma(GElem),
}

impl fmt::Display for SubfieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubfieldTag::K => write!(f, "K"),
            SubfieldTag::KPlus => write!(f, "K+"),
            SubfieldTag::KDeltaPrime => write!(f, "K_δ'"),
            SubfieldTag::KTauPrime => write!(f, "K_τ'"),
            SubfieldTag::E => write!(f, "E"),
            SubfieldTag::E0 => write!(f, "E0"),
            SubfieldTag::K0 => write!(f, "K0"),
            SubfieldTag::F => write!(f, "F"),
            SubfieldTag::KGamma(g) => write!(f, "K_<{g}>"),
        }
    }
}

/// A subfield `L = K^S` of `K/F` with its ramification data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubfieldInfo {
    pub tag: SubfieldTag,
    pub generators: Vec<GElem>,
    /// `S = Gal(K/L)`, sorted.
    pub subgroup: Vec<GElem>,
    /// `e(L/F)`.
    pub e_over_base: u64,
    /// `f(L/F)`.
    pub f_over_base: u64,
    /// `e(K/L)`.
    pub e_top: u64,
    /// `f(K/L)`.
    pub f_top: u64,
}

impl SubfieldInfo {
    /// `[K:L]`.
    #[must_use]
    pub fn top_degree(&self) -> u64 {
        self.subgroup.len() as u64
    }

    /// For a quadratic `K/L`: whether it is ramified.
    #[must_use]
    pub fn top_ramified(&self) -> bool {
        self.e_top > 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let g = build_gamma(2, 1, 3, 0).unwrap();
        assert_eq!(g.order(), 2);
        assert!(g.is_cyclic());
        assert_eq!(g.involutions().elements, vec![g.identity(), g.delta()]);

        let g = build_gamma(4, 2, 5, 0).unwrap();
        let d = g.delta();
        let r = g.rho();
        assert_eq!(g.mul(g.inv(r), g.mul(d, r)), g.pow(d, 5));
        assert_eq!(g.mul(g.inv(r), g.mul(d, r)), d);
        let h = g.involutions();
        assert_eq!(h.elements.len(), 4);
        assert_eq!(h.case, InvolutionCase::Klein);
        let d2 = g.pow(d, 2);
        let mut want = vec![g.identity(), d2, r, g.mul(r, d2)];
        want.sort();
        assert_eq!(h.elements, want);

        let g = build_gamma(1, 2, 3, 0).unwrap();
        let h = g.involutions();
        assert_eq!(h.case, InvolutionCase::FrobeniusEvenM);
        assert_eq!(h.elements, vec![g.identity(), g.rho()]);
    }

    #[test]
    fn rejected_groups() {
        assert!(build_gamma(4, 1, 3, 0).is_err());
        // Q_8-like, D_4 and S_3 presentations
        assert!(build_gamma(4, 2, 3, 2).is_err());
        assert!(build_gamma(4, 2, 3, 0).is_err());
        assert!(build_gamma(3, 2, 5, 0).is_err());
        // ρ²δ⁻¹ would be a non-central involution
        assert!(build_gamma(4, 4, 3, 2).is_err());
        assert!(build_gamma(4, 1, 5, 1).is_ok());
    }

    #[test]
    fn relation_holds_on_all_pairs() {
        let g = build_gamma(8, 2, 9, 4).unwrap();
        let d = g.delta();
        let r = g.rho();
        assert_eq!(g.mul(g.inv(r), g.mul(d, r)), g.pow(d, 9));
        assert_eq!(g.pow(r, g.f as i64), g.pow(d, g.m as i64));
        assert_eq!(g.elem_order(r), g.rho_order_formula());
        for x in g.elements() {
            for y in g.elements() {
                for z in g.elements() {
                    assert_eq!(g.mul(g.mul(x, y), z), g.mul(x, g.mul(y, z)));
                }
            }
        }
    }

    #[test]
    fn lattice_klein() {
        let g = build_gamma(2, 2, 3, 0).unwrap();
        let tau = g.rho();
        let lat = g.subfield_lattice(tau).unwrap();
        let get = |t: SubfieldTag| lat.iter().find(|s| s.tag == t).unwrap().clone();
        assert!(!get(SubfieldTag::KPlus).top_ramified());
        assert!(get(SubfieldTag::KDeltaPrime).top_ramified());
        assert!(!get(SubfieldTag::KTauPrime).top_ramified());
        let e = get(SubfieldTag::E);
        // K_δ'/E unramified, K_τ'/E ramified
        let kd = get(SubfieldTag::KDeltaPrime);
        let kt = get(SubfieldTag::KTauPrime);
        assert_eq!(kd.e_over_base, e.e_over_base);
        assert_eq!(kt.e_over_base, 2 * e.e_over_base);
        let e0 = get(SubfieldTag::E0);
        assert_eq!((e0.e_over_base, e0.f_over_base), (1, 1));
        for s in &lat {
            assert_eq!(s.e_over_base * s.f_over_base * s.top_degree(), g.order());
        }
        assert_eq!(
            g.subfield_lattice(g.identity()),
            Err(GroupError::TauNotInvolution)
        );
    }

    #[test]
    fn lattice_totally_ramified() {
        let g = build_gamma(4, 1, 5, 0).unwrap();
        let tau = g.pow(g.delta(), 2);
        let lat = g.subfield_lattice(tau).unwrap();
        assert_eq!(lat.len(), 4);
        assert!(lat.iter().all(|s| s.f_over_base == 1));
        assert!(lat[1].top_ramified());
    }

    #[test]
    fn e0_has_residue_degree_f_plus() {
        let g = build_gamma(4, 4, 5, 0).unwrap();
        let tau = g.pow(g.rho(), 2);
        let lat = g.subfield_lattice(tau).unwrap();
        let e0 = lat.iter().find(|s| s.tag == SubfieldTag::E0).unwrap();
        assert_eq!((e0.e_over_base, e0.f_over_base), (1, 2));
    }
}

#[cfg(test)]
mod table_scan {
    use super::*;

    #[test]
    fn scan_case_table() {
        let mut checked = 0;
        for q in [3u64, 5, 7, 9, 11, 13, 25, 27] {
            for e in 1..=48u64 {
                for f in 1..=48u64 {
                    if e * f > 48 || (e * f) % 2 == 1 {
                        continue;
                    }
                    for m in 0..e {
                        let Ok(g) = build_gamma(e, f, q, m) else {
                            continue;
                        };
                        let h = g.involutions();
                        assert_eq!(
                            h.elements,
                            g.predicted_involutions(),
                            "e={e} f={f} q={q} m={m}"
                        );
                        for &x in &h.elements {
                            assert!(g.is_central(x), "e={e} f={f} q={q} m={m}");
                        }
                        checked += 1;
                    }
                }
            }
        }
        eprintln!("checked {checked}");
    }
}
