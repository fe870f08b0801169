//! Integer lattices in `ℤ^k` kept in row echelon (Hermite-style) form.

/// Row echelon basis of the lattice spanned by a finite set of vectors.
///
/// Rows are sorted by strictly increasing pivot column, pivots are positive,
/// and every entry below a pivot is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    rows: Vec<Vec<i128>>,
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

impl Lattice {
    pub fn span(dim: usize, gens: &[Vec<i64>]) -> Self {
        let mut pending: Vec<Vec<i128>> = gens
            .iter()
            .map(|v| {
                assert_eq!(v.len(), dim, "vector of wrong dimension");
                v.iter().map(|&x| x as i128).collect()
            })
            .collect();
        let mut rows: Vec<Vec<i128>> = Vec::new();
        for col in 0..dim {
            // Combine every pending vector with a nonzero entry in `col` into one pivot row.
            let mut pivot: Option<Vec<i128>> = None;
            let mut rest = Vec::new();
            for v in pending.drain(..) {
                if v[col] == 0 {
                    if v.iter().any(|&x| x != 0) {
                        rest.push(v);
                    }
                    continue;
                }
                match pivot.take() {
                    None => pivot = Some(v),
                    Some(p) => {
                        let (g, x, y) = ext_gcd(p[col], v[col]);
                        let (pa, va) = (p[col] / g, v[col] / g);
                        let new_p: Vec<i128> =
                            p.iter().zip(&v).map(|(a, b)| x * a + y * b).collect();
                        let reduced: Vec<i128> =
                            v.iter().zip(&p).map(|(b, a)| pa * b - va * a).collect();
                        debug_assert_eq!(reduced[col], 0);
                        if reduced.iter().any(|&x| x != 0) {
                            rest.push(reduced);
                        }
                        pivot = Some(new_p);
                    }
                }
            }
            if let Some(mut p) = pivot {
                if p[col] < 0 {
                    p.iter_mut().for_each(|x| *x = -*x);
                }
                rows.push(p);
            }
            pending = rest;
        }
        debug_assert!(pending.is_empty());
        Lattice { dim, rows }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        if v.len() != self.dim {
            return false;
        }
        let mut r: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        for row in &self.rows {
            let col = row.iter().position(|&x| x != 0).expect("zero row in echelon basis");
            if r[..col].iter().any(|&x| x != 0) {
                return false;
            }
            if r[col] % row[col] != 0 {
                return false;
            }
            let q = r[col] / row[col];
            r.iter_mut().zip(row).for_each(|(a, b)| *a -= q * b);
        }
        r.iter().all(|&x| x == 0)
    }
}
