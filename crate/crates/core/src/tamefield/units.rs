//! Finite unit groups `(O_L/p_L^N)^×` and the norm-one group of `K/K_+`,
//! with level-by-level discrete logarithms and a cyclic decomposition.

use super::abelian::AbelianPresentation;
use super::{Elem, SubField, TowerError, TowerModel};
use crate::galoisgrp::inv_mod;

/// A subgroup of `(O_K / p_K^N)^×` presented by a torsion generator of order
/// prime to `p` and, for each `ϖ_K`-level, generators whose leading residues
/// form an `F_p`-basis of that graded piece.
#[derive(Clone, Debug)]
pub struct FilteredUnitGroup {
    /// Depth `N` in `ϖ_K`-valuation: the group is taken modulo `1 + p_K^N`.
    pub depth: usize,
    /// `(Teichmüller exponent step, order)` of the torsion generator.
    pub torsion: (u64, u64),
    /// `(level, generator)` pairs, sorted by level.
    pub level_gens: Vec<(usize, Elem)>,
    /// Inverse powers `z^{-d}` for `0 ≤ d < p`.
    inv_pows: Vec<Vec<Elem>>,
    /// For each level: indices into `level_gens` and the `F_p` solver.
    levels: Vec<LevelSolver>,
    pub presentation: AbelianPresentation,
    /// Basis elements of the cyclic decomposition.
    pub basis: Vec<Elem>,
}

#[derive(Clone, Debug)]
struct LevelSolver {
    level: usize,
    gens: Vec<usize>,
    /// Row-reduced residue matrix: `(pivot column, row, combination)`.
    pivots: Vec<(usize, Vec<u64>, Vec<u64>)>,
}

impl LevelSolver {
    fn new(level: usize, gens: Vec<usize>, residues: &[Vec<u64>], p: u64) -> Self {
        let k = gens.len();
        let mut pivots: Vec<(usize, Vec<u64>, Vec<u64>)> = Vec::new();
        for (idx, res) in residues.iter().enumerate() {
            let mut row = res.clone();
            let mut comb = vec![0u64; k];
            comb[idx] = 1;
            for (c, prow, pcomb) in &pivots {
                let m = row[*c] % p;
                if m != 0 {
                    for (x, y) in row.iter_mut().zip(prow) {
                        *x = (*x + (p - m) * y) % p;
                    }
                    for (x, y) in comb.iter_mut().zip(pcomb) {
                        *x = (*x + (p - m) * y) % p;
                    }
                }
            }
            let c = row
                .iter()
                .position(|&x| x % p != 0)
                .expect("level generators must have independent residues");
            let inv = inv_mod(row[c], p);
            for x in row.iter_mut() {
                *x = *x * inv % p;
            }
            for x in comb.iter_mut() {
                *x = *x * inv % p;
            }
            // keep earlier pivots reduced at the new pivot column
            for (_, prow, pcomb) in pivots.iter_mut() {
                let m = prow[c] % p;
                if m != 0 {
                    for (x, y) in prow.iter_mut().zip(&row) {
                        *x = (*x + (p - m) * y) % p;
                    }
                    for (x, y) in pcomb.iter_mut().zip(&comb) {
                        *x = (*x + (p - m) * y) % p;
                    }
                }
            }
            pivots.push((c, row, comb));
        }
        LevelSolver {
            level,
            gens,
            pivots,
        }
    }

    /// Coefficients `d` with `res = Σ d_i res(z_i)`, or `None`.
    fn solve(&self, res: &[u64], p: u64) -> Option<Vec<u64>> {
        let mut row = res.to_vec();
        let mut out = vec![0u64; self.gens.len()];
        for (c, prow, pcomb) in &self.pivots {
            let m = row[*c] % p;
            if m != 0 {
                for (x, y) in row.iter_mut().zip(prow) {
                    *x = (*x + (p - m) * y) % p;
                }
                for (x, y) in out.iter_mut().zip(pcomb) {
                    *x = (*x + m * y) % p;
                }
            }
        }
        row.iter().all(|&x| x % p == 0).then_some(out)
    }
}

impl FilteredUnitGroup {
    /// Builds the group from its torsion generator `T^{step}` of the given
    /// order and its level generators.
    #[must_use]
    pub fn new(
        t: &TowerModel,
        torsion: (u64, u64),
        mut level_gens: Vec<(usize, Elem)>,
        depth: usize,
    ) -> Self {
        let p = t.p();
        level_gens.retain(|(v, _)| *v < depth);
        level_gens.sort_by_key(|(v, _)| *v);
        let inv_pows = level_gens
            .iter()
            .map(|(_, z)| {
                let zi = t.unit_inv(z);
                let mut pows = vec![t.one()];
                for _ in 1..p {
                    pows.push(t.mul(pows.last().expect("nonempty"), &zi));
                }
                pows
            })
            .collect();
        let mut levels = Vec::new();
        let mut i = 0;
        while i < level_gens.len() {
            let v = level_gens[i].0;
            let mut idx = Vec::new();
            let mut res = Vec::new();
            while i < level_gens.len() && level_gens[i].0 == v {
                let x = t.sub(&level_gens[i].1, &t.one());
                let (vx, r) = t.leading_residue(&x);
                assert_eq!(vx, v, "generator level mismatch");
                idx.push(i);
                res.push(r);
                i += 1;
            }
            levels.push(LevelSolver::new(v, idx, &res, p));
        }
        let mut g = FilteredUnitGroup {
            depth,
            torsion,
            level_gens,
            inv_pows,
            levels,
            presentation: AbelianPresentation::new(&[vec![1]], 1),
            basis: Vec::new(),
        };
        let ngen = 1 + g.level_gens.len();
        let mut rel = Vec::with_capacity(ngen);
        let mut r0 = vec![0i64; ngen];
        r0[0] = torsion.1 as i64;
        rel.push(r0);
        for j in 0..g.level_gens.len() {
            let zp = t.pow(&g.level_gens[j].1, p);
            let digits = g.digits(t, &zp).expect("p-th powers stay in the group");
            let mut row: Vec<i64> = digits.iter().map(|&x| -(x as i64)).collect();
            row[j + 1] += p as i64;
            rel.push(row);
        }
        g.presentation = AbelianPresentation::new(&rel, ngen);
        let expected = torsion.1 * p.pow(g.level_gens.len() as u32);
        assert_eq!(
            g.presentation.order(),
            expected,
            "relations must be complete"
        );
        g.basis = (0..g.presentation.invariants.len())
            .map(|i| g.from_exponents(t, g.presentation.basis_exponents(i)))
            .collect();
        g
    }

    /// Group order.
    #[must_use]
    pub fn order(&self) -> u64 {
        self.presentation.order()
    }

    /// Orders of the cyclic factors.
    #[must_use]
    pub fn invariants(&self) -> &[u64] {
        &self.presentation.invariants
    }

    /// Exponents of `u` over the generators (torsion first), or `None` if `u`
    /// is not in the subgroup.
    #[must_use]
    pub fn digits(&self, t: &TowerModel, u: &[u64]) -> Option<Vec<u64>> {
        let p = t.p();
        let mut out = vec![0u64; 1 + self.level_gens.len()];
        if !t.is_unit(u) {
            return None;
        }
        let a = t.leading_log(u)?;
        let (step, order) = self.torsion;
        if a % step != 0 {
            return None;
        }
        out[0] = (a / step) % order;
        let mut cur = t.mul(u, &t.teich(-(a as i64)));
        let mut li = 0;
        loop {
            let x = t.sub(&cur, &t.one());
            let v = t.valuation(&x);
            if v >= self.depth {
                return Some(out);
            }
            while li < self.levels.len() && self.levels[li].level < v {
                li += 1;
            }
            if li == self.levels.len() || self.levels[li].level != v {
                return None;
            }
            let lv = &self.levels[li];
            let (_, res) = t.leading_residue(&x);
            let d = lv.solve(&res, p)?;
            for (k, &gi) in lv.gens.iter().enumerate() {
                if d[k] != 0 {
                    out[gi + 1] = d[k];
                    cur = t.mul(&cur, &self.inv_pows[gi][d[k] as usize]);
                }
            }
            li += 1;
        }
    }

    /// Coordinates of `u` in the cyclic decomposition.
    #[must_use]
    pub fn coords(&self, t: &TowerModel, u: &[u64]) -> Option<Vec<u64>> {
        self.digits(t, u).map(|d| self.presentation.coords(&d))
    }

    /// The element `Π gen^{x}` for an exponent vector over the generators.
    #[must_use]
    pub fn from_exponents(&self, t: &TowerModel, exps: &[u64]) -> Elem {
        let (step, order) = self.torsion;
        let mut acc = t.teich(((exps[0] % order) * step) as i64);
        for (j, (_, z)) in self.level_gens.iter().enumerate() {
            if exps[j + 1] != 0 {
                acc = t.mul(&acc, &t.pow(z, exps[j + 1]));
            }
        }
        t.truncate(&acc, self.depth)
    }

    /// A representative with the given coordinates that lies exactly in the
    /// subfield: a product of the untruncated generators.
    #[must_use]
    pub fn lift(&self, t: &TowerModel, coords: &[u64]) -> Elem {
        let ngen = 1 + self.level_gens.len();
        let mut exps = vec![0u64; ngen];
        for (i, &c) in coords.iter().enumerate() {
            for (x, &b) in exps.iter_mut().zip(self.presentation.basis_exponents(i)) {
                *x += c * b;
            }
        }
        let (step, order) = self.torsion;
        let mut acc = t.teich(((exps[0] % order) * step) as i64);
        for (j, (_, z)) in self.level_gens.iter().enumerate() {
            if exps[j + 1] != 0 {
                acc = t.mul(&acc, &t.pow(z, exps[j + 1]));
            }
        }
        acc
    }

    /// The element with the given coordinates.
    #[must_use]
    pub fn element(&self, t: &TowerModel, coords: &[u64]) -> Elem {
        let mut acc = t.one();
        for (b, &c) in self.basis.iter().zip(coords) {
            if c != 0 {
                acc = t.mul(&acc, &t.pow(b, c));
            }
        }
        t.truncate(&acc, self.depth)
    }

    /// All coordinate vectors in lexicographic order.
    #[must_use]
    pub fn all_coords(&self) -> Vec<Vec<u64>> {
        let inv = self.invariants();
        let mut out = vec![Vec::new()];
        for &s in inv {
            let mut next = Vec::with_capacity(out.len() * s as usize);
            for v in &out {
                for c in 0..s {
                    let mut w = v.clone();
                    w.push(c);
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    /// Coordinates of the generators of the subgroup `1 + p_K^k` (intersected
    /// with this group): the level generators at levels `≥ k`.
    #[must_use]
    pub fn level_subgroup_gens(&self, k: usize) -> Vec<Vec<u64>> {
        let ngen = 1 + self.level_gens.len();
        self.level_gens
            .iter()
            .enumerate()
            .filter(|(_, (v, _))| *v >= k)
            .map(|(j, _)| {
                let mut e = vec![0u64; ngen];
                e[j + 1] = 1;
                self.presentation.coords(&e)
            })
            .collect()
    }

    /// Coordinates of the torsion generator.
    #[must_use]
    pub fn torsion_coords(&self) -> Vec<u64> {
        let mut e = vec![0u64; 1 + self.level_gens.len()];
        e[0] = 1;
        self.presentation.coords(&e)
    }
}

/// `(O_L / p_L^{n_l})^×` for a subfield `L`.
pub fn unit_group_quotient(
    t: &TowerModel,
    l: &SubField,
    n_l: usize,
) -> Result<FilteredUnitGroup, TowerError> {
    let et = l.info.e_top as usize;
    let depth = n_l * et;
    if depth > t.precision {
        return Err(TowerError::PrecisionTooSmall {
            given: t.precision,
            needed: depth,
        });
    }
    let deg = (t.params.f0 * l.f()) as usize;
    let mut gens = Vec::new();
    for k in 1..n_l {
        let pik = t.pow(&l.uniformizer, k as u64);
        for i in 0..deg {
            let z = t.add(
                &t.one(),
                &t.mul(&pik, &t.teich((l.teich_gen * i as u64) as i64)),
            );
            gens.push((k * et, z));
        }
    }
    Ok(FilteredUnitGroup::new(
        t,
        (l.teich_gen, l.q_l - 1),
        gens,
        depth,
    ))
}

/// The norm-one group `Ū = K^{×(1−τ)}` modulo `1 + p_K^{depth}`.
pub fn norm_one_group(t: &TowerModel, depth: usize) -> Result<FilteredUnitGroup, TowerError> {
    if depth > t.precision {
        return Err(TowerError::PrecisionTooSmall {
            given: t.precision,
            needed: depth,
        });
    }
    let qm1 = t.ring.unit_order();
    let torsion = if t.params.ramified_over_kplus() {
        (qm1 / 2, 2)
    } else {
        let qp = t.params.q().pow(t.params.f_plus() as u32);
        (qp - 1, qp + 1)
    };
    let p = t.p();
    let d = t.d();
    let mut gens = Vec::new();
    for k in 1..depth {
        let pik = t.pow(&t.uniformizer(), k as u64);
        let mut rows: Vec<Vec<u64>> = Vec::new();
        for i in 0..d {
            let z = t.add(&t.one(), &t.mul(&pik, &t.teich(i as i64)));
            let zt = t.galois_apply(t.tau, &z);
            let u = t.mul(&z, &t.unit_inv(&zt));
            let x = t.sub(&u, &t.one());
            let (v, res) = t.leading_residue(&x);
            if v != k {
                continue;
            }
            let mut trial = rows.clone();
            trial.push(res.clone());
            if super::rank_mod_p(trial, p) == rows.len() + 1 {
                rows.push(res);
                gens.push((k, u));
            }
        }
    }
    Ok(FilteredUnitGroup::new(t, torsion, gens, depth))
}
