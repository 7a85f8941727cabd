//! Finite abelian groups given by generators and a complete relation matrix,
//! decomposed into cyclic factors by integer diagonalization.

/// A presentation `Z^g / R` reduced to `⊕ Z/s_i`.
///
/// Coordinates of an exponent vector `x` are `y = x·Q mod s`; the `i`-th
/// basis element is the exponent vector `Q^{-1}[i]`.
#[derive(Clone, Debug)]
pub struct AbelianPresentation {
    /// Number of generators `g`.
    pub generators: usize,
    /// Orders of the cyclic factors (all `> 1`).
    pub invariants: Vec<u64>,
    /// `g × k` coordinate matrix (columns reduced modulo `s_i`).
    coord: Vec<Vec<u64>>,
    /// `k × g` basis exponent vectors, reduced modulo the group exponent.
    basis: Vec<Vec<u64>>,
}

impl AbelianPresentation {
    /// Diagonalizes the relation matrix. The relations must define a finite
    /// group (full column rank).
    #[must_use]
    pub fn new(relations: &[Vec<i64>], generators: usize) -> Self {
        let rows = relations.len();
        let cols = generators;
        let mut a: Vec<Vec<i128>> = relations
            .iter()
            .map(|r| r.iter().map(|&x| x as i128).collect())
            .collect();
        let mut q: Vec<Vec<i128>> = identity(cols);
        let mut qi: Vec<Vec<i128>> = identity(cols);
        let mut diag = Vec::new();
        for t in 0..cols {
            loop {
                // smallest nonzero entry of the remaining block
                let mut best: Option<(usize, usize)> = None;
                for i in t..rows {
                    for j in t..cols {
                        if a[i][j] != 0
                            && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                        {
                            best = Some((i, j));
                        }
                    }
                }
                let (bi, bj) = best.expect("relations must give a finite group");
                a.swap(t, bi);
                if bj != t {
                    for row in a.iter_mut() {
                        row.swap(t, bj);
                    }
                    for row in q.iter_mut() {
                        row.swap(t, bj);
                    }
                    qi.swap(t, bj);
                }
                let piv = a[t][t];
                let mut clean = true;
                for i in t + 1..rows {
                    let c = a[i][t] / piv;
                    if c != 0 {
                        for j in t..cols {
                            a[i][j] -= c * a[t][j];
                        }
                    }
                    if a[i][t] != 0 {
                        clean = false;
                    }
                }
                for j in t + 1..cols {
                    let c = a[t][j] / piv;
                    if c != 0 {
                        // col_j -= c·col_t
                        for row in a.iter_mut() {
                            row[j] -= c * row[t];
                        }
                        for row in q.iter_mut() {
                            row[j] -= c * row[t];
                        }
                        // Q^{-1}: row_t += c·row_j
                        let rj = qi[j].clone();
                        for (x, y) in qi[t].iter_mut().zip(&rj) {
                            *x += c * y;
                        }
                    }
                    if a[t][j] != 0 {
                        clean = false;
                    }
                }
                if clean {
                    break;
                }
            }
            diag.push(a[t][t].unsigned_abs() as u64);
        }
        let exponent = diag
            .iter()
            .fold(1u64, |acc, &s| num_integer::lcm(acc, s.max(1)));
        let mut invariants = Vec::new();
        let mut coord = vec![Vec::new(); cols];
        let mut basis = Vec::new();
        for (t, &s) in diag.iter().enumerate() {
            if s == 1 {
                continue;
            }
            invariants.push(s);
            for (j, row) in coord.iter_mut().enumerate() {
                row.push(q[j][t].rem_euclid(s as i128) as u64);
            }
            basis.push(
                qi[t]
                    .iter()
                    .map(|&x| x.rem_euclid(exponent as i128) as u64)
                    .collect(),
            );
        }
        AbelianPresentation {
            generators,
            invariants,
            coord,
            basis,
        }
    }

    /// The group order.
    #[must_use]
    pub fn order(&self) -> u64 {
        self.invariants.iter().product()
    }

    /// Coordinates of an exponent vector in the cyclic decomposition.
    #[must_use]
    pub fn coords(&self, exps: &[u64]) -> Vec<u64> {
        self.invariants
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut acc: u128 = 0;
                for (j, &x) in exps.iter().enumerate() {
                    acc += x as u128 * self.coord[j][i] as u128;
                }
                (acc % s as u128) as u64
            })
            .collect()
    }

    /// Exponent vector (over the generators) of the `i`-th basis element.
    #[must_use]
    pub fn basis_exponents(&self, i: usize) -> &[u64] {
        &self.basis[i]
    }
}

fn identity(n: usize) -> Vec<Vec<i128>> {
    (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_and_product() {
        // Z/4 × Z/6 presented as <a,b | 4a, 6b>
        let g = AbelianPresentation::new(&[vec![4, 0], vec![0, 6]], 2);
        assert_eq!(g.order(), 24);
        // <a,b | 3a - b, 9b>: b = 3a, order of a is 27
        let g = AbelianPresentation::new(&[vec![3, -1], vec![0, 9]], 2);
        assert_eq!(g.order(), 27);
        assert_eq!(g.invariants, vec![27]);
        // coordinates are a homomorphism and kill relations
        assert_eq!(g.coords(&[3, 26]), vec![0]);
        let b = g.basis_exponents(0).to_vec();
        assert_eq!(g.coords(&b), vec![1]);
    }

    #[test]
    fn triangular_p_group() {
        // Z/3^3 generated by z with z^3 = w, w^3 = v, v^3 = 1, plus torsion 2
        let rel = vec![
            vec![2, 0, 0, 0],
            vec![0, 3, -1, 0],
            vec![0, 0, 3, -1],
            vec![0, 0, 0, 3],
        ];
        let g = AbelianPresentation::new(&rel, 4);
        assert_eq!(g.order(), 54);
        for (i, s) in g.invariants.iter().enumerate() {
            let b = g.basis_exponents(i);
            let c = g.coords(b);
            for (j, &cj) in c.iter().enumerate() {
                assert_eq!(cj, u64::from(i == j), "basis {i} order {s}");
            }
        }
    }
}
