//! Dense integer matrices with exact (arbitrary precision) arithmetic.
//!
//! Subgroup membership, quotients, lattice intersections and recurrence
//! transforms all reduce to Smith normal form, kernels and integer linear
//! solves over these matrices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

#[derive(Clone, PartialEq, Eq)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMat {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        IntMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Convenience constructor for tests and small fixed matrices.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        IntMat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    /// Builds a matrix from a list of column vectors.
    pub fn from_cols(dim: usize, cols: &[Vec<BigInt>]) -> Self {
        let mut m = IntMat::zero(dim, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), dim, "column length mismatch");
            for (i, x) in col.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == IntMat::identity(self.rows)
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IntMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * other.at(k, j);
                    let cur = out.at(i, j) + prod;
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in mul_vec");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i).clone()).sum()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row_i -= q * row_t
    fn row_sub_scaled(&mut self, i: usize, t: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let delta = q * self.at(t, j);
            let val = self.at(i, j) - delta;
            self.set(i, j, val);
        }
    }

    /// col_j -= q * col_t
    fn col_sub_scaled(&mut self, j: usize, t: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let delta = q * self.at(i, t);
            let val = self.at(i, j) - delta;
            self.set(i, j, val);
        }
    }

    /// row_dst += row_src
    fn row_add(&mut self, dst: usize, src: usize) {
        for j in 0..self.cols {
            let val = self.at(dst, j) + self.at(src, j);
            self.set(dst, j, val);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let val = -self.at(i, j);
            self.set(i, j, val);
        }
    }
}

impl std::fmt::Debug for IntMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IntMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.at(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Rounded integer division: the quotient nearest to a/b.
fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if r.magnitude() * 2u8 > *b.magnitude() {
        if r.sign() == b.sign() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

pub struct SmithDecomposition {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
}

impl SmithDecomposition {
    /// Diagonal entries of D up to min(rows, cols).
    pub fn diagonal(&self) -> Vec<BigInt> {
        let n = self.d.rows().min(self.d.cols());
        (0..n).map(|i| self.d.at(i, i).clone()).collect()
    }
}

/// Smith normal form: unimodular U, V with U * M * V = D, D diagonal with
/// nonnegative entries, each dividing the next.
pub fn smith_normal_form(m: &IntMat) -> SmithDecomposition {
    let mut d = m.clone();
    let mut u = IntMat::identity(m.rows());
    let mut v = IntMat::identity(m.cols());
    let steps = m.rows().min(m.cols());

    for t in 0..steps {
        // Move a nonzero entry of minimal magnitude into the pivot slot.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..d.rows() {
            for j in t..d.cols() {
                if d.at(i, j).is_zero() {
                    continue;
                }
                match pivot {
                    Some((pi, pj)) if d.at(pi, pj).magnitude() <= d.at(i, j).magnitude() => {}
                    _ => pivot = Some((i, j)),
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);

        'reduce: loop {
            for i in (t + 1)..d.rows() {
                if d.at(i, t).is_zero() {
                    continue;
                }
                let q = div_round(d.at(i, t), d.at(t, t));
                d.row_sub_scaled(i, t, &q);
                u.row_sub_scaled(i, t, &q);
                if !d.at(i, t).is_zero() {
                    // Remainder is smaller than the pivot; promote it.
                    d.swap_rows(t, i);
                    u.swap_rows(t, i);
                }
                continue 'reduce;
            }
            for j in (t + 1)..d.cols() {
                if d.at(t, j).is_zero() {
                    continue;
                }
                let q = div_round(d.at(t, j), d.at(t, t));
                d.col_sub_scaled(j, t, &q);
                v.col_sub_scaled(j, t, &q);
                if !d.at(t, j).is_zero() {
                    d.swap_cols(t, j);
                    v.swap_cols(t, j);
                }
                continue 'reduce;
            }
            // Pivot row and column are clear; enforce that the pivot divides
            // the remaining submatrix before moving on (this is what makes
            // the final diagonal a divisibility chain).
            for i in (t + 1)..d.rows() {
                for j in (t + 1)..d.cols() {
                    if !d.at(i, j).is_zero() && !d.at(i, j).is_multiple_of(d.at(t, t)) {
                        d.row_add(t, i);
                        u.row_add(t, i);
                        continue 'reduce;
                    }
                }
            }
            break;
        }

        if d.at(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }

    SmithDecomposition { u, d, v }
}

/// A basis (as column vectors) of the integer kernel {x : M x = 0}.
pub fn kernel_basis(m: &IntMat) -> Vec<Vec<BigInt>> {
    let snf = smith_normal_form(m);
    let min = m.rows().min(m.cols());
    let mut basis = Vec::new();
    for j in 0..m.cols() {
        let diag_zero = j >= min || snf.d.at(j, j).is_zero();
        if diag_zero {
            basis.push(snf.v.column(j));
        }
    }
    basis
}

/// Solves M x = b over the integers, using a precomputed Smith form of M.
/// Returns None when no integer solution exists.
pub fn solve_with(snf: &SmithDecomposition, b: &[BigInt]) -> Option<Vec<BigInt>> {
    let rows = snf.d.rows();
    let cols = snf.d.cols();
    assert_eq!(b.len(), rows, "rhs length mismatch");
    let c = snf.u.mul_vec(b);
    let min = rows.min(cols);
    let mut z = vec![BigInt::zero(); cols];
    for i in 0..rows {
        if i < min && !snf.d.at(i, i).is_zero() {
            let (q, r) = c[i].div_rem(snf.d.at(i, i));
            if !r.is_zero() {
                return None;
            }
            z[i] = q;
        } else if !c[i].is_zero() {
            return None;
        }
    }
    Some(snf.v.mul_vec(&z))
}

pub fn solve(m: &IntMat, b: &[BigInt]) -> Option<Vec<BigInt>> {
    solve_with(&smith_normal_form(m), b)
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMat) -> BigInt {
    assert_eq!(m.rows(), m.cols(), "determinant of non-square matrix");
    let n = m.rows();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = 1i8;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a.at(k, k).is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !a.at(i, k).is_zero()) else {
                return BigInt::zero();
            };
            a.swap_rows(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a.at(i, j) * a.at(k, k) - a.at(i, k) * a.at(k, j);
                a.set(i, j, num / &prev);
            }
            a.set(i, k, BigInt::zero());
        }
        prev = a.at(k, k).clone();
    }
    let det = a.at(n - 1, n - 1).clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Characteristic polynomial coefficients by the Faddeev–LeVerrier scheme;
/// index i holds the coefficient of x^i, with the leading coefficient 1.
/// All divisions are exact over the integers.
pub fn char_poly(a: &IntMat) -> Vec<BigInt> {
    assert_eq!(a.rows(), a.cols(), "char_poly of non-square matrix");
    let n = a.rows();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut aux = IntMat::identity(n);
    for k in 1..=n {
        let m = a.mul(&aux);
        let c = -m.trace() / BigInt::from(k);
        coeffs[n - k] = c.clone();
        aux = m;
        for i in 0..n {
            let val = aux.at(i, i) + &c;
            aux.set(i, i, val);
        }
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_snf(m: &IntMat) {
        let snf = smith_normal_form(m);
        assert_eq!(snf.u.mul(m).mul(&snf.v), snf.d, "U*M*V != D for {m:?}");
        assert_eq!(determinant(&snf.u).magnitude(), BigInt::one().magnitude());
        assert_eq!(determinant(&snf.v).magnitude(), BigInt::one().magnitude());
        let diag = snf.diagonal();
        for w in diag.windows(2) {
            assert!(!w[0].is_negative() && !w[1].is_negative());
            if !w[1].is_zero() {
                assert!(!w[0].is_zero(), "zero before nonzero in chain: {diag:?}");
                assert!(w[1].is_multiple_of(&w[0]), "chain broken: {diag:?}");
            }
        }
        // off-diagonal of D is zero
        for i in 0..snf.d.rows() {
            for j in 0..snf.d.cols() {
                if i != j {
                    assert!(snf.d.at(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn snf_identity() {
        let m = IntMat::identity(2);
        let snf = smith_normal_form(&m);
        assert!(snf.d.is_identity());
        assert!(snf.u.is_identity());
        assert!(snf.v.is_identity());
    }

    #[test]
    fn snf_two_by_two() {
        let m = IntMat::from_i64(&[&[2, 4], &[6, 8]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal(), vec![BigInt::from(2), BigInt::from(4)]);
        check_snf(&m);
    }

    #[test]
    fn snf_zero_matrix() {
        let m = IntMat::zero(1, 3);
        let snf = smith_normal_form(&m);
        assert!(snf.d.is_zero());
        check_snf(&m);
    }

    #[test]
    fn snf_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        for _ in 0..200 {
            let rows = rng.gen_range(1..=8);
            let cols = rng.gen_range(1..=8);
            let mut m = IntMat::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m.set(i, j, BigInt::from(rng.gen_range(-50i64..=50)));
                }
            }
            check_snf(&m);
        }
    }

    #[test]
    fn kernel_of_projection() {
        // x + y + z = 0 has a rank-2 kernel.
        let m = IntMat::from_i64(&[&[1, 1, 1]]);
        let basis = kernel_basis(&m);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            let s: BigInt = v.iter().sum();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn solve_simple() {
        let m = IntMat::from_i64(&[&[2, 0], &[0, 3]]);
        let b = vec![BigInt::from(4), BigInt::from(9)];
        let x = solve(&m, &b).unwrap();
        assert_eq!(x, vec![BigInt::from(2), BigInt::from(3)]);
        let b_bad = vec![BigInt::from(1), BigInt::from(0)];
        assert!(solve(&m, &b_bad).is_none());
    }

    #[test]
    fn char_poly_fibonacci_matrix() {
        let m = IntMat::from_i64(&[&[0, 1], &[1, 1]]);
        // x^2 - x - 1
        assert_eq!(
            char_poly(&m),
            vec![BigInt::from(-1), BigInt::from(-1), BigInt::from(1)]
        );
    }

    #[test]
    fn char_poly_cayley_hamilton() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let mut m = IntMat::zero(n, n);
            for i in 0..n {
                for j in 0..n {
                    m.set(i, j, BigInt::from(rng.gen_range(-9i64..=9)));
                }
            }
            let coeffs = char_poly(&m);
            // Evaluate p(M) by Horner; must vanish.
            let mut acc = IntMat::zero(n, n);
            for c in coeffs.iter().rev() {
                acc = acc.mul(&m);
                for i in 0..n {
                    let val = acc.at(i, i) + c;
                    acc.set(i, i, val);
                }
            }
            assert!(acc.is_zero(), "Cayley-Hamilton failed for {m:?}");
        }
    }

    #[test]
    fn determinant_matches_cofactor_small() {
        let m = IntMat::from_i64(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]);
        assert_eq!(determinant(&m), BigInt::from(-3));
    }
}
