//! Dense real-symmetric eigendecomposition: Householder reduction to
//! tridiagonal form followed by the implicit QL algorithm with Wilkinson-type
//! shifts.

use crate::{Error, Result};

pub const MAX_DIMENSION: usize = 4096;
const MAX_SWEEPS_PER_VALUE: usize = 60;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConfig("matrix rows must all have length n".into()));
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_bitwise_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors,
/// stored one per row.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    vectors: Vec<f64>,
    n: usize,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.n..(i + 1) * self.n]
    }

    /// `|⟨v_i|ψ⟩|²` for every eigenvector.
    pub fn weights(&self, psi: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let c: f64 = self.vector(i).iter().zip(psi).map(|(a, b)| a * b).sum();
                c * c
            })
            .collect()
    }
}

fn check_symmetric(a: &DenseMatrix) -> Result<()> {
    let n = a.dim();
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::DimensionOutOfRange(n));
    }
    let scale = a.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            let diff = (a.get(i, j) - a.get(j, i)).abs();
            if !(diff <= 1e-12 * scale) {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { what: "matrix", index: 0 });
    }
    Ok(())
}

/// Householder tridiagonalization. On return `v` holds the accumulated
/// orthogonal transform (column-major in the sense `v[k][j]` is component
/// `k` of basis vector `j`), `d` the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize(v: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for x in d[..i].iter_mut() {
                *x /= scale;
                h += *x * *x;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);
            for j in 0..i {
                let f = d[j];
                v[at(j, i)] = f;
                let mut g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    let vkj = v[at(k, j)];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let (f, g) = (d[j], e[j]);
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    // accumulate transformations
    let mut col = vec![0.0; n];
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                col[k] = v[at(k, i + 1)];
                d[k] = col[k] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += col[k] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`. `w` holds basis vectors as rows
/// and receives the rotations.
fn ql_implicit(w: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > MAX_SWEEPS_PER_VALUE {
                    return Err(Error::NoConvergence { index: l, iterations });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d[l + 2..n].iter_mut() {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let wi = &mut lo[i * n..];
                    let wi1 = &mut hi[..n];
                    for (a, b) in wi.iter_mut().zip(wi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix.
pub fn symmetric_eigendecomposition(a: &DenseMatrix) -> Result<Eigen> {
    check_symmetric(a)?;
    let n = a.dim();
    if n == 1 {
        return Ok(Eigen { values: vec![a.get(0, 0)], vectors: vec![1.0], n });
    }
    let mut v = a.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, n, &mut d, &mut e);
    // basis vector j is column j of v; rotate rows instead
    let mut w = vec![0.0; n * n];
    for k in 0..n {
        for j in 0..n {
            w[j * n + k] = v[k * n + j];
        }
    }
    drop(v);
    ql_implicit(&mut w, n, &mut d, &mut e)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        vectors.extend_from_slice(&w[i * n..(i + 1) * n]);
    }
    Ok(Eigen { values, vectors, n })
}

/// Eigenvalues only.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigendecomposition(a)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_swap() {
        let e = symmetric_eigendecomposition(&DenseMatrix::identity(5)).unwrap();
        assert!(e.values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let s = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = symmetric_eigendecomposition(&s).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let v = e.vector(0);
        assert!((v[0] + v[1]).abs() < 1e-15 && (v[0].abs() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.1, 0.0]]).unwrap();
        assert!(matches!(symmetric_eigendecomposition(&a), Err(Error::NotSymmetric { .. })));
        assert!(matches!(symmetric_eigendecomposition(&DenseMatrix::zeros(0)), Err(Error::DimensionOutOfRange(0))));
        assert!(DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn diagonal_and_one_by_one() {
        let a = DenseMatrix::from_fn(4, |i, j| if i == j { [3.0, -1.0, 2.0, 0.5][i] } else { 0.0 });
        let e = symmetric_eigendecomposition(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 0.5, 2.0, 3.0]);
        let one = DenseMatrix::from_rows(&[vec![7.5]]).unwrap();
        assert_eq!(symmetric_eigenvalues(&one).unwrap(), vec![7.5]);
    }

    #[test]
    fn path_graph_closed_form() {
        // tridiagonal with zero diagonal and unit off-diagonal: 2cos(kπ/(n+1))
        let n = 30;
        let a = DenseMatrix::from_fn(n, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 });
        let vals = symmetric_eigenvalues(&a).unwrap();
        let mut exact: Vec<f64> =
            (1..=n).map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos()).collect();
        exact.sort_by(f64::total_cmp);
        for (x, y) in vals.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-13);
        }
    }
}
