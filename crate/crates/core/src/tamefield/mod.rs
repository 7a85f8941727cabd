//! Finite-precision models of tame towers `Q_p ⊆ F ⊆ K_0 ⊆ K`.
//!
//! `F` is unramified of degree `f0` over `Q_p`, `K_0/F` is unramified of
//! degree `f`, and `K = K_0(ϖ)` with `ϖ^e = p·ω` for a Teichmüller unit `ω`.
//! Elements of `O_K / p^M` are stored as `e` blocks of Galois-ring
//! coefficients: block `j` is the coefficient of `ϖ^j`.

pub mod abelian;
pub mod ring;
pub mod units;

#[cfg(test)]
mod tests;

use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::galoisgrp::{
    build_gamma, inv_mod, GElem, GroupError, MetacyclicGroup, SubfieldInfo, SubfieldTag,
};
use ring::{pow_mod_u, GaloisRing};

/// An element of `O_K / p^M`.
pub type Elem = Vec<u64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid tower parameters: {0}")]
    InvalidParams(String),
    #[error("no Teichmüller class ω realizes m = {m}")]
    Unrealizable { m: u64 },
    #[error("precision {given} is below the floor {needed}")]
    PrecisionTooSmall { given: usize, needed: usize },
    #[error("no generator β with O_K = O_F[β] and β^τ = −β exists for this τ")]
    NoSuchGenerator,
    #[error("subfield {0} is not in the lattice of this instance")]
    UnknownSubfield(String),
}

/// Position of `τ` relative to the inertia subgroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TauKind {
    /// `f = 1`, `τ = δ^{e/2}`.
    TotallyRamified,
    /// `τ` is not in `Gal(K/K_0)`, so `K/K_+` is unramified.
    UnramifiedOverKPlus,
    /// `τ = δ^{e/2}` with `f > 1`: `K/K_+` ramified but `K/F` not totally
    /// ramified. Realizable, but admits no symplectic generator `β`.
    RamifiedOverKPlus,
}

/// Parameters of a tame tower and the involution `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TowerParams {
    pub p: u64,
    pub f0: u64,
    pub e: u64,
    pub f: u64,
    pub m: u64,
    pub r: u64,
    pub tau_kind: TauKind,
}

impl TowerParams {
    /// Parameters with the natural `τ`: totally ramified when `f = 1`,
    /// unramified over `K_+` otherwise.
    #[must_use]
    pub fn new(p: u64, f0: u64, e: u64, f: u64, m: u64, r: u64) -> Self {
        let tau_kind = if f == 1 {
            TauKind::TotallyRamified
        } else {
            TauKind::UnramifiedOverKPlus
        };
        TowerParams {
            p,
            f0,
            e,
            f,
            m,
            r,
            tau_kind,
        }
    }

    #[must_use]
    pub fn q(&self) -> u64 {
        self.p.pow(self.f0 as u32)
    }

    /// `n` with `ef = 2n`.
    #[must_use]
    pub fn n(&self) -> u64 {
        self.e * self.f / 2
    }

    #[must_use]
    pub fn ramified_over_kplus(&self) -> bool {
        self.tau_kind != TauKind::UnramifiedOverKPlus
    }

    /// `e_+ = e(K_+/F)`.
    #[must_use]
    pub fn e_plus(&self) -> u64 {
        if self.ramified_over_kplus() {
            self.e / 2
        } else {
            self.e
        }
    }

    /// `f_+ = f(K_+/F)`.
    #[must_use]
    pub fn f_plus(&self) -> u64 {
        if self.ramified_over_kplus() {
            self.f
        } else {
            self.f / 2
        }
    }

    /// `l = ⌈r/2⌉`.
    #[must_use]
    pub fn l(&self) -> u64 {
        self.r.div_ceil(2)
    }

    /// `l' = ⌊r/2⌋`.
    #[must_use]
    pub fn l_prime(&self) -> u64 {
        self.r / 2
    }

    /// The `ϖ`-adic precision floor `e·r + e`.
    #[must_use]
    pub fn precision_floor(&self) -> usize {
        (self.e * self.r + self.e) as usize
    }

    /// Checks the parameter invariants and builds `Γ`.
    pub fn validate(&self) -> Result<MetacyclicGroup, TowerError> {
        let bad = |s: &str| Err(TowerError::InvalidParams(s.to_string()));
        if self.p < 3
            || !crate::exactnum::factorize(self.p)
                .iter()
                .all(|&(l, k)| l == self.p && k == 1)
        {
            return bad("p must be an odd prime");
        }
        if self.f0 == 0 || self.e == 0 || self.f == 0 {
            return bad("degrees must be positive");
        }
        if (self.e * self.f) % 2 != 0 {
            return bad("e·f must be even");
        }
        if self.r < 2 {
            return bad("r must be at least 2");
        }
        if self
            .p
            .checked_pow((self.f0 * self.f) as u32)
            .map_or(true, |x| x > 1 << 20)
        {
            return bad("residue field of K too large for this model");
        }
        let g = build_gamma(self.e, self.f, self.q(), self.m)?;
        match self.tau_kind {
            TauKind::TotallyRamified if self.f != 1 => bad("totally ramified τ requires f = 1"),
            TauKind::TotallyRamified | TauKind::RamifiedOverKPlus if self.e % 2 != 0 => {
                bad("τ in inertia requires e even")
            }
            TauKind::RamifiedOverKPlus if self.f == 1 => bad("use TotallyRamified when f = 1"),
            TauKind::UnramifiedOverKPlus
                if !g.involutions().elements.iter().any(|h| !g.in_inertia(*h)) =>
            {
                bad("no involution outside inertia")
            }
            _ => Ok(g),
        }
    }

    /// The involution `τ` determined by the kind.
    #[must_use]
    pub fn tau(&self, g: &MetacyclicGroup) -> GElem {
        match self.tau_kind {
            TauKind::TotallyRamified | TauKind::RamifiedOverKPlus => g.elem(self.e as i64 / 2, 0),
            TauKind::UnramifiedOverKPlus => *g
                .involutions()
                .elements
                .iter()
                .filter(|h| !g.in_inertia(**h))
                .min_by_key(|h| (h.a, h.b))
                .expect("validated"),
        }
    }
}

impl fmt::Display for TowerParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={} f0={} e={} f={} m={} r={}",
            self.p, self.f0, self.e, self.f, self.m, self.r
        )
    }
}

/// A field automorphism `Σ a_j ϖ^j ↦ Σ Frob^k(a_j) T^{xj} ϖ^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Auto {
    /// Power of the absolute Frobenius, modulo `d = f0·f`.
    pub k: u64,
    /// Teichmüller exponent of `σ(ϖ)/ϖ`, modulo `p^d − 1`.
    pub x: u64,
}

/// A subfield `L = K^S` realized inside the model.
#[derive(Clone, Debug)]
pub struct SubField {
    pub info: SubfieldInfo,
    /// Uniformizer `ϖ_L = T^y ϖ^{e(K/L)}`.
    pub uniformizer: Elem,
    /// Teichmüller exponent `y` of the uniformizer.
    pub uniformizer_teich: u64,
    /// Teichmüller exponent of a generator of `μ(L)` prime to `p`.
    pub teich_gen: u64,
    /// `p^{f0·f(L/F)}`, the absolute residue field size.
    pub q_l: u64,
    /// Left coset representatives of `Γ / S`.
    pub coset_reps: Vec<GElem>,
}

impl SubField {
    /// `e(L/F)`.
    #[must_use]
    pub fn e(&self) -> u64 {
        self.info.e_over_base
    }

    /// `f(L/F)`.
    #[must_use]
    pub fn f(&self) -> u64 {
        self.info.f_over_base
    }

    /// `[L:F]`.
    #[must_use]
    pub fn degree(&self) -> u64 {
        self.e() * self.f()
    }

    /// Different exponent `d(L) = e(L/F) − 1` (tame, `d(F) = 0`).
    #[must_use]
    pub fn different(&self) -> u64 {
        self.e() - 1
    }
}

/// The realized tower.
#[derive(Clone, Debug)]
pub struct TowerModel {
    pub params: TowerParams,
    pub gamma: MetacyclicGroup,
    pub tau: GElem,
    pub ring: GaloisRing,
    /// `ω = T^w`.
    pub omega_exp: u64,
    /// Retained `ϖ`-digits `e·M`.
    pub precision: usize,
    /// Automorphism of each element of `Γ`, indexed by `Γ::index`.
    autos: Vec<Auto>,
    e: usize,
    d: usize,
}

/// Builds the tower model with at least `n_digits` retained `ϖ`-digits.
pub fn realize_tower(params: TowerParams, n_digits: usize) -> Result<TowerModel, TowerError> {
    let gamma = params.validate()?;
    let need = params.precision_floor();
    if n_digits < need {
        return Err(TowerError::PrecisionTooSmall {
            given: n_digits,
            needed: need,
        });
    }
    let e = params.e as usize;
    let f0 = params.f0 as usize;
    let d = f0 * params.f as usize;
    let prec = n_digits.div_ceil(e) as u32;
    let ring = GaloisRing::new(params.p, d, prec);
    let qm1 = ring.unit_order();
    let q = params.q();
    let qf1 = pow_mod_u(q, params.f - 1, qm1);
    let mut found = None;
    'search: for w in 0..params.e {
        for x in 0..qm1 {
            let lhs = (params.e as u128 * x as u128) % qm1 as u128;
            let rhs = (w as u128 * ((qf1 + qm1 - 1) % qm1) as u128) % qm1 as u128;
            if lhs != rhs {
                continue;
            }
            let sum = (x as u128 * (qm1 / (q - 1)) as u128) % qm1 as u128;
            let want = (params.m as u128 * (qm1 / params.e) as u128) % qm1 as u128;
            if sum == want {
                found = Some((w, x));
                break 'search;
            }
        }
    }
    let (w, x) = found.ok_or(TowerError::Unrealizable { m: params.m })?;
    let delta = Auto {
        k: 0,
        x: (qm1 / params.e) % qm1,
    };
    let rho = Auto {
        k: (d - f0) as u64,
        x,
    };
    let tau = params.tau(&gamma);
    let mut model = TowerModel {
        params,
        gamma,
        tau,
        ring,
        omega_exp: w,
        precision: e * prec as usize,
        autos: Vec::new(),
        e,
        d,
    };
    let order = model.gamma.order() as usize;
    let mut autos = Vec::with_capacity(order);
    for i in 0..order {
        let g = model.gamma.from_index(i);
        let da = model.auto_pow(delta, g.a);
        let rb = model.auto_pow(rho, g.b);
        autos.push(model.compose(da, rb));
    }
    for i in 0..order {
        for j in 0..order {
            let gi = model.gamma.from_index(i);
            let gj = model.gamma.from_index(j);
            let prod = model.gamma.index(model.gamma.mul(gi, gj));
            assert_eq!(
                model.compose(autos[i], autos[j]),
                autos[prod],
                "Galois action must be a homomorphism"
            );
        }
    }
    let mut distinct = autos.clone();
    distinct.sort_by_key(|a| (a.k, a.x));
    distinct.dedup();
    assert_eq!(distinct.len(), order, "Galois action must be faithful");
    model.autos = autos;
    Ok(model)
}

impl TowerModel {
    #[must_use]
    pub fn e(&self) -> usize {
        self.e
    }

    /// Absolute residue degree `d = f0·f` of `K`.
    #[must_use]
    pub fn d(&self) -> usize {
        self.d
    }

    #[must_use]
    pub fn p(&self) -> u64 {
        self.params.p
    }

    #[must_use]
    pub fn q(&self) -> u64 {
        self.params.q()
    }

    /// `q_K = q^f`.
    #[must_use]
    pub fn q_k(&self) -> u64 {
        self.ring.unit_order() + 1
    }

    /// Canonical key-value descriptor (used as a cache key).
    #[must_use]
    pub fn descriptor(&self) -> String {
        format!(
            "p={}\nf0={}\ne={}\nf={}\nm={}\nomega={}\nprecision={}\ntau={:?}\n",
            self.params.p,
            self.params.f0,
            self.params.e,
            self.params.f,
            self.params.m,
            self.omega_exp,
            self.precision,
            self.params.tau_kind
        )
    }

    // ---- automorphisms ----

    #[must_use]
    pub fn compose(&self, s1: Auto, s2: Auto) -> Auto {
        let qm1 = self.ring.unit_order();
        let pk = pow_mod_u(self.params.p, s1.k, qm1);
        Auto {
            k: (s1.k + s2.k) % self.d as u64,
            x: ((s1.x as u128 + s2.x as u128 * pk as u128) % qm1 as u128) as u64,
        }
    }

    fn auto_pow(&self, s: Auto, k: u64) -> Auto {
        let mut acc = Auto { k: 0, x: 0 };
        for _ in 0..k {
            acc = self.compose(acc, s);
        }
        acc
    }

    #[must_use]
    pub fn auto_of(&self, g: GElem) -> Auto {
        self.autos[self.gamma.index(g)]
    }

    /// `σ(x)` for a field automorphism.
    #[must_use]
    pub fn apply_auto(&self, s: Auto, x: &[u64]) -> Elem {
        let d = self.d;
        let mut out = vec![0; x.len()];
        for j in 0..self.e {
            let blk = &x[j * d..(j + 1) * d];
            if blk.iter().all(|&c| c == 0) {
                continue;
            }
            let fr = self.ring.frob(blk, s.k as usize);
            let tw = self.ring.teich((s.x as i64) * j as i64);
            let img = self.ring.mul(&fr, tw);
            out[j * d..(j + 1) * d].copy_from_slice(&img);
        }
        out
    }

    /// `γ(x)` (left action).
    #[must_use]
    pub fn galois_apply(&self, g: GElem, x: &[u64]) -> Elem {
        self.apply_auto(self.auto_of(g), x)
    }

    /// `x^γ = γ^{-1}(x)` (right action).
    #[must_use]
    pub fn act(&self, x: &[u64], g: GElem) -> Elem {
        self.galois_apply(self.gamma.inv(g), x)
    }

    // ---- ring arithmetic ----

    #[must_use]
    pub fn zero(&self) -> Elem {
        vec![0; self.e * self.d]
    }

    #[must_use]
    pub fn one(&self) -> Elem {
        self.scalar(1)
    }

    #[must_use]
    pub fn scalar(&self, c: i64) -> Elem {
        let mut v = self.zero();
        v[..self.d].copy_from_slice(&self.ring.scalar(c));
        v
    }

    /// Embeds a Galois-ring element as `a·ϖ^0`.
    #[must_use]
    pub fn from_base(&self, a: &[u64]) -> Elem {
        let mut v = self.zero();
        v[..self.d].copy_from_slice(a);
        v
    }

    /// The Teichmüller element `T^k`.
    #[must_use]
    pub fn teich(&self, k: i64) -> Elem {
        self.from_base(self.ring.teich(k))
    }

    /// `T^k ϖ^j` for `0 ≤ j`; powers `j ≥ e` are folded through `ϖ^e = pω`.
    #[must_use]
    pub fn monomial(&self, k: i64, j: usize) -> Elem {
        let mut x = self.teich(k);
        let pi = self.uniformizer();
        for _ in 0..j {
            x = self.mul(&x, &pi);
        }
        x
    }

    #[must_use]
    pub fn uniformizer(&self) -> Elem {
        let mut v = self.zero();
        if self.e == 1 {
            v[..self.d].copy_from_slice(
                &self
                    .ring
                    .scale(self.ring.teich(self.omega_exp as i64), self.params.p),
            );
        } else {
            v[self.d..2 * self.d].copy_from_slice(&self.ring.one());
        }
        v
    }

    #[must_use]
    pub fn add(&self, a: &[u64], b: &[u64]) -> Elem {
        let n = self.ring.modulus;
        a.iter().zip(b).map(|(x, y)| (x + y) % n).collect()
    }

    #[must_use]
    pub fn sub(&self, a: &[u64], b: &[u64]) -> Elem {
        let n = self.ring.modulus;
        a.iter().zip(b).map(|(x, y)| (x + n - y) % n).collect()
    }

    #[must_use]
    pub fn neg(&self, a: &[u64]) -> Elem {
        let n = self.ring.modulus;
        a.iter().map(|x| (n - x) % n).collect()
    }

    #[must_use]
    pub fn mul(&self, a: &[u64], b: &[u64]) -> Elem {
        let (e, d) = (self.e, self.d);
        let mut low = vec![0u64; e * d];
        let mut high = vec![0u64; e * d];
        for i in 0..e {
            let ai = &a[i * d..(i + 1) * d];
            if ai.iter().all(|&c| c == 0) {
                continue;
            }
            for j in 0..e {
                let bj = &b[j * d..(j + 1) * d];
                if bj.iter().all(|&c| c == 0) {
                    continue;
                }
                let k = i + j;
                if k < e {
                    self.ring.mul_acc(&mut low[k * d..(k + 1) * d], ai, bj);
                } else {
                    self.ring
                        .mul_acc(&mut high[(k - e) * d..(k - e + 1) * d], ai, bj);
                }
            }
        }
        if high.iter().any(|&c| c != 0) {
            let pw = self
                .ring
                .scale(self.ring.teich(self.omega_exp as i64), self.params.p);
            for k in 0..e {
                let hk = high[k * d..(k + 1) * d].to_vec();
                if hk.iter().all(|&c| c == 0) {
                    continue;
                }
                self.ring.mul_acc(&mut low[k * d..(k + 1) * d], &hk, &pw);
            }
        }
        low
    }

    #[must_use]
    pub fn pow(&self, a: &[u64], mut k: u64) -> Elem {
        let mut acc = self.one();
        let mut b = a.to_vec();
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            k >>= 1;
        }
        acc
    }

    /// `ϖ`-adic valuation (`precision` for zero).
    #[must_use]
    pub fn valuation(&self, a: &[u64]) -> usize {
        let d = self.d;
        (0..self.e)
            .map(|j| {
                let v = self.ring.valuation(&a[j * d..(j + 1) * d]);
                if v >= self.ring.prec {
                    self.precision
                } else {
                    self.e * v as usize + j
                }
            })
            .min()
            .unwrap_or(self.precision)
            .min(self.precision)
    }

    #[must_use]
    pub fn is_unit(&self, a: &[u64]) -> bool {
        self.valuation(a) == 0
    }

    /// Valuation `v` of `x` and the residue of `x / ϖ^v` in `k_K` as an
    /// `F_p`-vector.
    #[must_use]
    pub fn leading_residue(&self, a: &[u64]) -> (usize, Vec<u64>) {
        let v = self.valuation(a);
        if v >= self.precision {
            return (v, vec![0; self.d]);
        }
        let (s, j) = (v / self.e, v % self.e);
        let blk = &a[j * self.d..(j + 1) * self.d];
        let ps = self.params.p.pow(s as u32);
        let res: Vec<u64> = blk.iter().map(|&c| (c / ps) % self.params.p).collect();
        // p^s = ϖ^{es} ω^{-s}
        let wl = self.ring.teich(-(self.omega_exp as i64) * s as i64);
        let wres = self.ring.residue(wl);
        let out = self.ring.residue(&self.ring.mul(&res, &wres));
        (v, out)
    }

    /// Teichmüller exponent of the leading residue of a nonzero element.
    #[must_use]
    pub fn leading_log(&self, a: &[u64]) -> Option<u64> {
        let (v, res) = self.leading_residue(a);
        if v >= self.precision {
            return None;
        }
        self.ring.residue_log(&res)
    }

    /// Inverse of a unit by Newton iteration.
    #[must_use]
    pub fn unit_inv(&self, a: &[u64]) -> Elem {
        let k = self.leading_log(a).expect("unit_inv needs a unit");
        assert!(self.is_unit(a), "unit_inv needs a unit");
        let mut y = self.teich(-(k as i64));
        let two = self.scalar(2);
        let mut acc = 1;
        while acc < self.precision {
            let t = self.sub(&two, &self.mul(a, &y));
            y = self.mul(&y, &t);
            acc *= 2;
        }
        debug_assert_eq!(self.mul(a, &y), self.one());
        y
    }

    /// `x / ϖ^k` for `x` of valuation at least `k`. The result is exact
    /// modulo `ϖ^{precision−k}`; higher digits are zero.
    #[must_use]
    pub fn div_uniformizer_pow(&self, a: &[u64], k: usize) -> Elem {
        if k == 0 {
            return a.to_vec();
        }
        debug_assert!(self.valuation(a) >= k);
        let s = k.div_ceil(self.e);
        let shifted = self.mul(a, &self.pow(&self.uniformizer(), (self.e * s - k) as u64));
        let divided: Elem = shifted
            .chunks(self.d)
            .flat_map(|blk| self.ring.div_p_pow(blk, s as u32))
            .collect();
        self.mul(&divided, &self.teich(-(self.omega_exp as i64) * s as i64))
    }

    /// Truncates `x` modulo `ϖ^k`.
    #[must_use]
    pub fn truncate(&self, a: &[u64], k: usize) -> Elem {
        let d = self.d;
        let mut out = a.to_vec();
        for j in 0..self.e {
            let s = if k > j { (k - j).div_ceil(self.e) } else { 0 };
            if (s as u32) < self.ring.prec {
                let ps = self.params.p.pow(s as u32);
                for c in &mut out[j * d..(j + 1) * d] {
                    *c %= ps;
                }
            }
        }
        out
    }

    /// A uniformly random element.
    pub fn random<R: Rng>(&self, rng: &mut R) -> Elem {
        (0..self.e * self.d)
            .map(|_| rng.gen_range(0..self.ring.modulus))
            .collect()
    }

    /// A uniformly random unit.
    pub fn random_unit<R: Rng>(&self, rng: &mut R) -> Elem {
        loop {
            let x = self.random(rng);
            if self.is_unit(&x) {
                return x;
            }
        }
    }

    // ---- subfields, traces, norms ----

    /// The lattice of subfields relevant to `τ`, plus `K_γ` on request.
    #[must_use]
    pub fn lattice(&self) -> Vec<SubfieldInfo> {
        self.gamma.subfield_lattice(self.tau).expect("τ validated")
    }

    /// Subfield data for a tag.
    pub fn subfield(&self, tag: SubfieldTag) -> Result<SubField, TowerError> {
        let info = match tag {
            SubfieldTag::KGamma(g) => self.gamma.subfield(tag, &[g]),
            _ => self
                .lattice()
                .into_iter()
                .find(|s| s.tag == tag)
                .ok_or_else(|| TowerError::UnknownSubfield(tag.to_string()))?,
        };
        Ok(self.subfield_from_info(info))
    }

    /// Realizes the fixed field of a subgroup.
    #[must_use]
    pub fn subfield_from_info(&self, info: SubfieldInfo) -> SubField {
        let qm1 = self.ring.unit_order();
        let autos: Vec<Auto> = info.subgroup.iter().map(|g| self.auto_of(*g)).collect();
        let et = info.e_top;
        let y = (0..qm1)
            .find(|&y| {
                autos.iter().all(|s| {
                    let pk = pow_mod_u(self.params.p, s.k, qm1);
                    let lhs = (y as u128 * pk as u128 + s.x as u128 * et as u128) % qm1 as u128;
                    lhs == y as u128
                })
            })
            .expect("tame subfields have Teichmüller-twisted uniformizers");
        let uniformizer = self.monomial(y as i64, et as usize);
        let deg_l = self.params.f0 * info.f_over_base;
        let q_l = self.params.p.pow(deg_l as u32);
        let teich_gen = qm1 / (q_l - 1);
        let mut coset_reps: Vec<GElem> = Vec::new();
        let mut covered = std::collections::BTreeSet::new();
        for g in self.gamma.elements() {
            if covered.contains(&g) {
                continue;
            }
            for s in &info.subgroup {
                covered.insert(self.gamma.mul(g, *s));
            }
            coset_reps.push(g);
        }
        SubField {
            info,
            uniformizer,
            uniformizer_teich: y,
            teich_gen,
            q_l,
            coset_reps,
        }
    }

    /// The whole field `K` as a subfield.
    #[must_use]
    pub fn top(&self) -> SubField {
        self.subfield(SubfieldTag::K).expect("K is always present")
    }

    /// `F` as a subfield.
    #[must_use]
    pub fn base(&self) -> SubField {
        self.subfield(SubfieldTag::F).expect("F is always present")
    }

    /// Whether `x` is fixed by every element of `S`.
    #[must_use]
    pub fn is_fixed_by(&self, x: &[u64], subgroup: &[GElem]) -> bool {
        subgroup.iter().all(|g| self.galois_apply(*g, x) == x)
    }

    /// `T_{K/L}(x)`.
    #[must_use]
    pub fn trace_to(&self, l: &SubField, x: &[u64]) -> Elem {
        let mut acc = self.zero();
        for g in &l.info.subgroup {
            acc = self.add(&acc, &self.galois_apply(*g, x));
        }
        debug_assert!(self.is_fixed_by(&acc, &l.info.subgroup));
        acc
    }

    /// `N_{K/L}(x)`.
    #[must_use]
    pub fn norm_to(&self, l: &SubField, x: &[u64]) -> Elem {
        let mut acc = self.one();
        for g in &l.info.subgroup {
            acc = self.mul(&acc, &self.galois_apply(*g, x));
        }
        debug_assert!(self.is_fixed_by(&acc, &l.info.subgroup));
        acc
    }

    /// `T_{L/F}(x)` for `x ∈ L`.
    #[must_use]
    pub fn trace_down(&self, l: &SubField, x: &[u64]) -> Elem {
        let mut acc = self.zero();
        for g in &l.coset_reps {
            acc = self.add(&acc, &self.galois_apply(*g, x));
        }
        acc
    }

    /// `N_{L/F}(x)` for `x ∈ L`.
    #[must_use]
    pub fn norm_down(&self, l: &SubField, x: &[u64]) -> Elem {
        let mut acc = self.one();
        for g in &l.coset_reps {
            acc = self.mul(&acc, &self.galois_apply(*g, x));
        }
        acc
    }

    /// `T_{K/L}` or `N_{K/L}` by tag; the result is asserted to lie in `L`.
    pub fn trace_norm(&self, tag: SubfieldTag, x: &[u64], norm: bool) -> Result<Elem, TowerError> {
        let l = self.subfield(tag)?;
        let out = if norm {
            self.norm_to(&l, x)
        } else {
            self.trace_to(&l, x)
        };
        assert!(self.is_fixed_by(&out, &l.info.subgroup));
        Ok(out)
    }

    /// `Tr_{F/Q_p}(y)` of an element of `O_F`, as an integer modulo `p^M`.
    #[must_use]
    pub fn trace_f_qp(&self, y: &[u64]) -> u64 {
        let f0 = self.params.f0 as usize;
        let mut acc = self.ring.zero();
        for i in 0..f0 {
            acc = self.ring.add(&acc, &self.ring.frob(&y[..self.d], i));
        }
        debug_assert!(y[self.d..].iter().all(|&c| c == 0));
        self.ring.as_scalar(&acc).expect("trace to Q_p is a scalar")
    }

    /// The additive character `ψ_L(p^{-s}·y)` for `y ∈ O_L`, returned as
    /// an exponent of `ζ_{p^s}`: `ψ_F(p^{-s}z) = ζ_{p^s}^{Tr_{F/Q_p} z}` and
    /// `ψ_L = ψ_F ∘ T_{L/F}`.
    #[must_use]
    pub fn psi_exponent(&self, l: &SubField, y: &[u64], s: u32) -> u64 {
        let t = self.trace_down(l, y);
        let ps = self.params.p.pow(s);
        self.trace_f_qp(&t) % ps
    }

    /// `p^s · ϖ_L^{-k}` as an element of `O_K`, with `s = ⌈k·e(K/L)/e⌉`.
    #[must_use]
    pub fn scaled_inverse_uniformizer_pow(&self, l: &SubField, k: usize) -> (Elem, u32) {
        let j = k * l.info.e_top as usize;
        let s = j.div_ceil(self.e);
        // p^s ϖ^{-j} = ϖ^{es-j} ω^{-s}
        let pi_part = self.mul(
            &self.pow(&self.uniformizer(), (self.e * s - j) as u64),
            &self.teich(-(self.omega_exp as i64) * s as i64),
        );
        // ϖ_L^{-k} = T^{-yk} ϖ^{-j}
        let out = self.mul(
            &pi_part,
            &self.teich(-(l.uniformizer_teich as i64) * k as i64),
        );
        (out, s as u32)
    }

    // ---- generators β ----

    /// The symplectic generator `β` (`β^τ = −β`, `O_K = O_F[β]`).
    pub fn find_beta(&self) -> Result<Elem, TowerError> {
        match self.params.tau_kind {
            TauKind::RamifiedOverKPlus => Err(TowerError::NoSuchGenerator),
            TauKind::TotallyRamified => {
                let b = self.uniformizer();
                debug_assert!(self.is_symplectic_generator(&b));
                Ok(b)
            }
            TauKind::UnramifiedOverKPlus => {
                let qm1 = self.ring.unit_order();
                let ts = self.auto_of(self.tau);
                let pk = pow_mod_u(self.params.p, ts.k, qm1);
                // ϖ_τ = T^y ϖ fixed by τ
                let y = if self.e > 1 {
                    (0..qm1)
                        .find(|&y| {
                            (y as u128 * pk as u128 + ts.x as u128) % qm1 as u128 == y as u128
                        })
                        .ok_or(TowerError::NoSuchGenerator)?
                } else {
                    0
                };
                let tail = if self.e > 1 {
                    self.add(&self.one(), &self.monomial(y as i64, 1))
                } else {
                    self.one()
                };
                for x in 0..qm1 {
                    let a = self.teich(x as i64);
                    if self.galois_apply(self.tau, &a) != self.neg(&a) {
                        continue;
                    }
                    let b = self.mul(&a, &tail);
                    if self.is_symplectic_generator(&b) {
                        return Ok(b);
                    }
                }
                Err(TowerError::NoSuchGenerator)
            }
        }
    }

    /// `β^τ = −β` and `O_K = O_F[β]`.
    #[must_use]
    pub fn is_symplectic_generator(&self, b: &[u64]) -> bool {
        self.galois_apply(self.tau, b) == self.neg(b) && self.generates_integers(b)
    }

    /// `O_F[β] = O_K`, tested by Nakayama: the `O_F`-span of `1, β, …,
    /// β^{2n−1}` must be all of `O_K / p`.
    #[must_use]
    pub fn generates_integers(&self, b: &[u64]) -> bool {
        let p = self.params.p;
        let deg = self.params.n() as usize * 2;
        let base = self.base();
        let tf = self.teich(base.teich_gen as i64);
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let mut bi = self.one();
        for _ in 0..deg {
            let mut t = bi.clone();
            for _ in 0..self.params.f0 {
                rows.push(t.iter().map(|c| c % p).collect());
                t = self.mul(&t, &tf);
            }
            bi = self.mul(&bi, b);
        }
        rank_mod_p(rows, p) == self.e * self.d
    }

    /// The literal Shintani conditions on the expansion `β = Σ a_j ϖ^j`:
    /// `a_0^{Fr} ≢ a_0 mod p` when `f > 1`, and `a_1` a unit when `e > 1`.
    #[must_use]
    pub fn shintani_conditions(&self, b: &[u64]) -> bool {
        let d = self.d;
        let p = self.params.p;
        if self.params.f > 1 {
            let a0 = &b[..d];
            let fr = self.ring.frob(a0, self.params.f0 as usize);
            if self.ring.residue(&fr) == self.ring.residue(a0) {
                return false;
            }
        }
        if self.e > 1 && b[d..2 * d].iter().all(|c| c % p == 0) {
            return false;
        }
        true
    }
}

/// Rank over `F_p` of a list of row vectors.
#[must_use]
pub fn rank_mod_p(mut rows: Vec<Vec<u64>>, p: u64) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i][c] % p != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = inv_mod(rows[rank][c] % p, p);
        for x in rows[rank].iter_mut() {
            *x = *x * inv % p;
        }
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[c] % p != 0 {
                let k = row[c] % p;
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x = (*x + (p - k) * y) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}
