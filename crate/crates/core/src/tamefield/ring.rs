//! Galois rings `GR(p^M, d) = W(F_{p^d}) / p^M` presented as
//! `(Z/p^M)[T]/(g)` where `T` is the Teichmüller lift of a primitive root.

use std::collections::HashMap;

/// A Galois ring with a Teichmüller generator.
#[derive(Clone, Debug)]
pub struct GaloisRing {
    pub p: u64,
    pub d: usize,
    /// Precision exponent `M`; arithmetic is modulo `p^M`.
    pub prec: u32,
    /// `p^M`.
    pub modulus: u64,
    /// Monic modulus `g`, low coefficients `g_0..g_{d-1}`.
    pub poly: Vec<u64>,
    /// `T^{d+j} mod g` for `0 ≤ j < d-1`.
    reduce: Vec<Vec<u64>>,
    /// `frob_pows[k][i]` = image of `T^i` under the `k`-th power of Frobenius.
    frob_pows: Vec<Vec<Vec<u64>>>,
    /// `teich[k] = T^k` for `0 ≤ k < p^d - 1`.
    teich: Vec<Vec<u64>>,
    /// Residue vector (mod p) of `T^k` to `k`.
    residue_log: HashMap<Vec<u64>, u64>,
}

/// `Q - 1` where `Q = p^d`.
fn unit_order(p: u64, d: usize) -> u64 {
    p.pow(d as u32) - 1
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Multiplication in `(Z/N)[X]/(g)` for monic `g` of degree `d`.
fn polymul_mod(a: &[u64], b: &[u64], g: &[u64], n: u64) -> Vec<u64> {
    let d = g.len();
    let mut prod = vec![0u128; 2 * d];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u128 * y as u128) % n as u128;
        }
    }
    for k in (d..2 * d).rev() {
        let c = prod[k] % n as u128;
        if c == 0 {
            continue;
        }
        prod[k] = 0;
        for i in 0..d {
            // X^k = X^{k-d} · X^d = -X^{k-d} Σ g_i X^i
            let t = c * g[i] as u128 % n as u128;
            prod[k - d + i] = (prod[k - d + i] + n as u128 - t) % n as u128;
        }
    }
    prod[..d].iter().map(|&x| (x % n as u128) as u64).collect()
}

fn polypow_mod(a: &[u64], mut e: u128, g: &[u64], n: u64) -> Vec<u64> {
    let d = g.len();
    let mut acc = vec![0u64; d];
    acc[0] = 1 % n;
    let mut b = a.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            acc = polymul_mod(&acc, &b, g, n);
        }
        b = polymul_mod(&b, &b, g, n);
        e >>= 1;
    }
    acc
}

/// Finds a monic primitive polynomial of degree `d` over `F_p`.
fn primitive_poly(p: u64, d: usize) -> Vec<u64> {
    let order = unit_order(p, d);
    let factors = prime_factors(order);
    let total = p.pow(d as u32);
    for code in 0..total {
        let mut g = vec![0u64; d];
        let mut c = code;
        for gi in g.iter_mut() {
            *gi = c % p;
            c /= p;
        }
        if g[0] == 0 {
            continue;
        }
        let mut x = vec![0u64; d];
        if d == 1 {
            // X ≡ -g_0
            x[0] = (p - g[0]) % p;
        } else {
            x[1] = 1;
        }
        let one = {
            let mut v = vec![0u64; d];
            v[0] = 1;
            v
        };
        if polypow_mod(&x, order as u128, &g, p) != one {
            continue;
        }
        if factors
            .iter()
            .all(|&l| polypow_mod(&x, (order / l) as u128, &g, p) != one)
        {
            // X has order p^d - 1, so F_p[X]/(g) contains a cyclic group of
            // that order and g must be irreducible.
            return g;
        }
    }
    unreachable!("primitive polynomials exist in every degree")
}

impl GaloisRing {
    /// Builds `GR(p^prec, d)`.
    #[must_use]
    pub fn new(p: u64, d: usize, prec: u32) -> Self {
        assert!(d >= 1 && prec >= 1);
        let modulus = p.pow(prec);
        let gbar = primitive_poly(p, d);
        let poly = if d == 1 {
            // T is the Teichmüller lift of the primitive root -g_0.
            let root = (p - gbar[0]) % p;
            let mut t = root % modulus;
            for _ in 0..prec {
                t = pow_mod_u(t, p, modulus);
            }
            vec![(modulus - t) % modulus]
        } else {
            // Teichmüller lift of X in (Z/p^M)[X]/(gbar lifted).
            let mut t = vec![0u64; d];
            t[1] = 1;
            let q = p.pow(d as u32) as u128;
            for _ in 0..prec {
                t = polypow_mod(&t, q, &gbar, modulus);
            }
            // characteristic polynomial Π (Y - t^{p^i}) with coefficients in R0
            let mut conj = Vec::with_capacity(d);
            let mut c = t.clone();
            for _ in 0..d {
                conj.push(c.clone());
                c = polypow_mod(&c, p as u128, &gbar, modulus);
            }
            // poly in Y with R0 coefficients, start with 1
            let zero = vec![0u64; d];
            let mut one = vec![0u64; d];
            one[0] = 1;
            let mut coeffs: Vec<Vec<u64>> = vec![one];
            for r in &conj {
                let mut next = vec![zero.clone(); coeffs.len() + 1];
                for (k, ck) in coeffs.iter().enumerate() {
                    // ck · Y^{k+1}
                    for i in 0..d {
                        next[k + 1][i] = (next[k + 1][i] + ck[i]) % modulus;
                    }
                    // - r ck · Y^k
                    let prod = polymul_mod(ck, r, &gbar, modulus);
                    for i in 0..d {
                        next[k][i] = (next[k][i] + modulus - prod[i]) % modulus;
                    }
                }
                coeffs = next;
            }
            let mut poly = Vec::with_capacity(d);
            for c in coeffs.iter().take(d) {
                assert!(
                    c[1..].iter().all(|&x| x == 0),
                    "Teichmüller minimal polynomial must have scalar coefficients"
                );
                poly.push(c[0]);
            }
            poly
        };
        let mut ring = GaloisRing {
            p,
            d,
            prec,
            modulus,
            poly,
            reduce: Vec::new(),
            frob_pows: Vec::new(),
            teich: Vec::new(),
            residue_log: HashMap::new(),
        };
        ring.reduce = (0..d.saturating_sub(1))
            .map(|j| {
                let mut x = vec![0u64; d];
                x[0] = 1;
                let t = ring.gen();
                for _ in 0..d + j {
                    x = ring.mul_slow(&x, &t);
                }
                x
            })
            .collect();
        // Teichmüller table
        let qm1 = unit_order(p, d);
        let mut teich = Vec::with_capacity(qm1 as usize);
        let mut cur = ring.one();
        let t = ring.gen();
        for k in 0..qm1 {
            let res: Vec<u64> = cur.iter().map(|x| x % p).collect();
            ring.residue_log.insert(res, k);
            teich.push(cur.clone());
            cur = ring.mul(&cur, &t);
        }
        assert_eq!(cur, ring.one(), "T must have order p^d - 1");
        assert_eq!(ring.residue_log.len() as u64, qm1);
        ring.teich = teich;
        // Frobenius: T^i ↦ T^{p i}
        let mut frob_pows = Vec::with_capacity(d);
        for k in 0..d {
            let pk = p.pow(k as u32) % qm1.max(1);
            let imgs = (0..d)
                .map(|i| ring.teich[((i as u64 * pk) % qm1) as usize].clone())
                .collect();
            frob_pows.push(imgs);
        }
        ring.frob_pows = frob_pows;
        ring
    }

    /// `Q - 1 = p^d - 1`.
    #[must_use]
    pub fn unit_order(&self) -> u64 {
        unit_order(self.p, self.d)
    }

    #[must_use]
    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.d]
    }

    #[must_use]
    pub fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.d];
        v[0] = 1 % self.modulus;
        v
    }

    #[must_use]
    pub fn scalar(&self, c: i64) -> Vec<u64> {
        let mut v = vec![0; self.d];
        v[0] = c.rem_euclid(self.modulus as i64) as u64;
        v
    }

    /// The generator `T`.
    #[must_use]
    pub fn gen(&self) -> Vec<u64> {
        let mut v = vec![0; self.d];
        if self.d == 1 {
            v[0] = (self.modulus - self.poly[0]) % self.modulus;
        } else {
            v[1] = 1;
        }
        v
    }

    fn mul_slow(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        polymul_mod(a, b, &self.poly, self.modulus)
    }

    #[must_use]
    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.modulus;
        a.iter().zip(b).map(|(x, y)| (x + y) % n).collect()
    }

    #[must_use]
    pub fn sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.modulus;
        a.iter().zip(b).map(|(x, y)| (x + n - y) % n).collect()
    }

    #[must_use]
    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        let n = self.modulus;
        a.iter().map(|x| (n - x) % n).collect()
    }

    #[must_use]
    pub fn scale(&self, a: &[u64], c: u64) -> Vec<u64> {
        let n = self.modulus as u128;
        a.iter()
            .map(|&x| (x as u128 * c as u128 % n) as u64)
            .collect()
    }

    /// Accumulates `acc += a · b`.
    pub fn mul_acc(&self, acc: &mut [u64], a: &[u64], b: &[u64]) {
        let d = self.d;
        let n = self.modulus;
        if d == 1 {
            acc[0] = ((acc[0] as u128 + a[0] as u128 * b[0] as u128) % n as u128) as u64;
            return;
        }
        let mut prod = [0u128; 16];
        let prod = &mut prod[..2 * d - 1];
        for i in 0..d {
            if a[i] == 0 {
                continue;
            }
            for j in 0..d {
                prod[i + j] += a[i] as u128 * b[j] as u128;
            }
        }
        for i in 0..d {
            acc[i] = ((acc[i] as u128 + prod[i]) % n as u128) as u64;
        }
        for j in 0..d - 1 {
            let c = (prod[d + j] % n as u128) as u64;
            if c == 0 {
                continue;
            }
            let r = &self.reduce[j];
            for i in 0..d {
                acc[i] = ((acc[i] as u128 + c as u128 * r[i] as u128) % n as u128) as u64;
            }
        }
    }

    #[must_use]
    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut acc = self.zero();
        self.mul_acc(&mut acc, a, b);
        acc
    }

    /// The `k`-th power of the absolute Frobenius `x ↦ x^p` (lifted).
    #[must_use]
    pub fn frob(&self, a: &[u64], k: usize) -> Vec<u64> {
        let k = k % self.d;
        if k == 0 {
            return a.to_vec();
        }
        let imgs = &self.frob_pows[k];
        let n = self.modulus as u128;
        let mut out = vec![0u128; self.d];
        for (i, &c) in a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(&imgs[i]) {
                *o = (*o + c as u128 * v as u128) % n;
            }
        }
        out.into_iter().map(|x| x as u64).collect()
    }

    /// `T^k` (Teichmüller representative), any integer `k`.
    #[must_use]
    pub fn teich(&self, k: i64) -> &[u64] {
        let qm1 = self.unit_order() as i64;
        &self.teich[k.rem_euclid(qm1) as usize]
    }

    /// Residue vector mod `p`.
    #[must_use]
    pub fn residue(&self, a: &[u64]) -> Vec<u64> {
        a.iter().map(|x| x % self.p).collect()
    }

    /// Teichmüller exponent of a residue vector (None for zero).
    #[must_use]
    pub fn residue_log(&self, res: &[u64]) -> Option<u64> {
        self.residue_log.get(res).copied()
    }

    /// The Teichmüller exponent of the residue of a unit.
    #[must_use]
    pub fn unit_log(&self, a: &[u64]) -> Option<u64> {
        self.residue_log(&self.residue(a))
    }

    /// `p`-adic valuation of the element (`prec` for zero).
    #[must_use]
    pub fn valuation(&self, a: &[u64]) -> u32 {
        a.iter()
            .filter(|&&x| x != 0)
            .map(|&x| {
                let mut v = 0;
                let mut y = x;
                while y % self.p == 0 {
                    y /= self.p;
                    v += 1;
                }
                v
            })
            .min()
            .unwrap_or(self.prec)
    }

    /// Exact division by `p^s` of an element divisible by it (the lost top
    /// digits are set to zero).
    #[must_use]
    pub fn div_p_pow(&self, a: &[u64], s: u32) -> Vec<u64> {
        let ps = self.p.pow(s);
        a.iter()
            .map(|&x| {
                debug_assert_eq!(x % ps, 0);
                x / ps
            })
            .collect()
    }

    /// Reduction of a scalar element (in `Z/p^M`) to an integer in `[0, p^M)`.
    #[must_use]
    pub fn as_scalar(&self, a: &[u64]) -> Option<u64> {
        if a[1..].iter().all(|&x| x == 0) {
            Some(a[0])
        } else {
            None
        }
    }
}

/// `b^e mod n` on `u64`.
#[must_use]
pub fn pow_mod_u(b: u64, mut e: u64, n: u64) -> u64 {
    let mut acc: u128 = 1 % n as u128;
    let mut base = (b % n) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % n as u128;
        }
        base = base * base % n as u128;
        e >>= 1;
    }
    acc as u64
}
