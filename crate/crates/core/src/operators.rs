//! Integer difference and decimation operators.
//!
//! Everything here is exact: matrices carry `i64` entries and products are
//! overflow-checked. Rational operators are stored as an integer numerator
//! over a common denominator. Conversion to floating point happens only at
//! the frame/quantizer boundary through [`IntMatrix::to_cmatrix`].
//!
//! Indices in doc comments are 1-based to match the usual matrix notation;
//! the code is 0-based.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::CMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperatorError {
    #[error("invalid block size rho = {rho} for frame length m = {m}")]
    InvalidBlock { m: usize, rho: usize },
    #[error("invalid decimation plan: {0}")]
    InvalidPlan(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| i64::from(i == j))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn checked_matmul(&self, rhs: &Self) -> Option<Self> {
        if self.cols != rhs.rows {
            return None;
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(l, j);
                    if b == 0 {
                        continue;
                    }
                    let idx = i * rhs.cols + j;
                    out.data[idx] = out.data[idx].checked_add(a.checked_mul(b)?)?;
                }
            }
        }
        Some(out)
    }

    pub fn checked_scale(&self, s: i64) -> Option<Self> {
        let data = self
            .data
            .iter()
            .map(|&x| x.checked_mul(s))
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn pow(&self, e: u32) -> Self {
        assert_eq!(self.rows, self.cols, "pow of a non-square matrix");
        let mut out = Self::identity(self.rows);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// `Δ · self`: backward difference down each column.
    pub fn diff_down(&self) -> Self {
        let mut out = self.clone();
        for i in (1..self.rows).rev() {
            for j in 0..self.cols {
                out.data[i * self.cols + j] -= self.data[(i - 1) * self.cols + j];
            }
        }
        out
    }

    /// `Δ^{-1} · self`: cumulative sum down each column.
    pub fn cumsum_down(&self) -> Self {
        let mut out = self.clone();
        for i in 1..self.rows {
            for j in 0..self.cols {
                let prev = out.data[(i - 1) * self.cols + j];
                let cur = &mut out.data[i * self.cols + j];
                *cur = cur.checked_add(prev).expect("integer overflow in cumulative sum");
            }
        }
        out
    }

    /// `Δ̄_ρ · self` without materializing `Δ̄_ρ` (see [`dbar_rho`]).
    pub fn apply_dbar(&self, rho: usize) -> Self {
        let m = self.rows;
        assert!(rho >= 1 && rho <= m, "block size out of range");
        let mut out = self.clone();
        for t in 1..=m {
            let partner = if t > rho {
                Some(t - rho)
            } else if t < rho {
                Some(m + t - rho)
            } else {
                None
            };
            if let Some(p) = partner {
                for j in 0..self.cols {
                    let cur = &mut out.data[(t - 1) * self.cols + j];
                    *cur = cur
                        .checked_sub(self.data[(p - 1) * self.cols + j])
                        .expect("integer overflow in block difference");
                }
            }
        }
        out
    }

    /// `D_ρ · self`: keeps rows ρ, 2ρ, …
    pub fn subsample_rows(&self, rho: usize) -> Self {
        let eta = self.rows / rho;
        Self::from_fn(eta, self.cols, |l, j| self.get((l + 1) * rho - 1, j))
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            Complex64::new(self.get(i, j) as f64, 0.0)
        })
    }

    /// Exact product with an integer vector, widened to `i128`.
    pub fn mul_vec_i128(&self, v: &[i64]) -> Option<Vec<i128>> {
        if v.len() != self.cols {
            return None;
        }
        (0..self.rows)
            .map(|i| {
                self.row(i).iter().zip(v).try_fold(0i128, |acc, (&a, &b)| {
                    acc.checked_add(i128::from(a).checked_mul(i128::from(b))?)
                })
            })
            .collect()
    }
}

impl Mul for &IntMatrix {
    type Output = IntMatrix;

    fn mul(self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, rhs.rows, "integer matrix dimension mismatch");
        self.checked_matmul(rhs)
            .expect("integer overflow in operator product")
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Rational matrix `num / den` with a shared positive denominator.
#[derive(Debug, Clone)]
pub struct RatMatrix {
    pub num: IntMatrix,
    pub den: i64,
}

impl RatMatrix {
    /// Exact equality by cross-multiplication.
    pub fn exact_eq(&self, other: &Self) -> bool {
        match (
            self.num.checked_scale(other.den),
            other.num.checked_scale(self.den),
        ) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        self.num.to_cmatrix().scale_real(1.0 / self.den as f64)
    }
}

/// Order, length and block size of a decimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecimationPlan {
    pub r: usize,
    pub m: usize,
    pub rho: usize,
    pub eta: usize,
}

impl DecimationPlan {
    pub fn new(r: usize, m: usize, rho: usize) -> Result<Self, OperatorError> {
        if r == 0 {
            return Err(OperatorError::InvalidPlan("order r must be >= 1".into()));
        }
        if m == 0 {
            return Err(OperatorError::InvalidPlan("frame length m must be >= 1".into()));
        }
        if rho == 0 || !m.is_multiple_of(rho) {
            return Err(OperatorError::InvalidBlock { m, rho });
        }
        Ok(Self {
            r,
            m,
            rho,
            eta: m / rho,
        })
    }

    /// Plan with `m = η·ρ`.
    pub fn from_eta(r: usize, eta: usize, rho: usize) -> Result<Self, OperatorError> {
        Self::new(r, eta * rho, rho)
    }

    /// `ρ^r`.
    pub fn rho_pow(&self) -> i64 {
        (self.rho as i64).pow(self.r as u32)
    }
}

/// Backward difference `Δ`: unit diagonal, `-1` on the sub-diagonal.
pub fn delta(m: usize) -> IntMatrix {
    IntMatrix::identity(m).diff_down()
}

/// `Δ^{-1}`: lower triangular all-ones.
pub fn delta_inv(m: usize) -> IntMatrix {
    IntMatrix::from_fn(m, m, |i, j| i64::from(j <= i))
}

/// `Δ^r`.
pub fn delta_pow(m: usize, r: usize) -> IntMatrix {
    (0..r).fold(IntMatrix::identity(m), |acc, _| acc.diff_down())
}

/// `Δ^{-r}`.
pub fn delta_inv_pow(m: usize, r: usize) -> IntMatrix {
    (0..r).fold(IntMatrix::identity(m), |acc, _| acc.cumsum_down())
}

/// Block backward difference `Δ̄_ρ` with integer entries.
///
/// Row `t` is `e_t − e_{t−ρ}` for `t > ρ`, `e_ρ` for `t = ρ`, and the cyclic
/// `e_t − e_{m+t−ρ}` for `t < ρ`. With this convention
/// `D_ρ Δ̄_ρ = Δ^{(η)} D_ρ` and `Δ̄_ρ Δ^{-1} = ρ S_ρ` hold exactly.
pub fn dbar_rho(m: usize, rho: usize) -> Result<IntMatrix, OperatorError> {
    if rho == 0 || rho > m {
        return Err(OperatorError::InvalidBlock { m, rho });
    }
    Ok(IntMatrix::identity(m).apply_dbar(rho))
}

/// Sub-sampling `D_ρ`: the `(m/ρ)×m` selector of rows ρ, 2ρ, …, m.
pub fn sub_sample(m: usize, rho: usize) -> Result<IntMatrix, OperatorError> {
    if rho == 0 || !m.is_multiple_of(rho) {
        return Err(OperatorError::InvalidBlock { m, rho });
    }
    Ok(IntMatrix::from_fn(m / rho, m, |l, s| {
        i64::from(s + 1 == (l + 1) * rho)
    }))
}

/// Integration operator `S_ρ = S_ρ^+ − S_ρ^-` as a rational matrix over `ρ`.
///
/// Rows `l ≥ ρ` average the window `l−ρ+1 ..= l`; rows `l < ρ` carry `-1/ρ`
/// on columns `l+1 ..= m−ρ+l`.
pub fn s_rho(m: usize, rho: usize) -> Result<RatMatrix, OperatorError> {
    if rho == 0 || rho > m {
        return Err(OperatorError::InvalidBlock { m, rho });
    }
    let num = IntMatrix::from_fn(m, m, |i, j| {
        let (l, c) = (i + 1, j + 1);
        if l >= rho {
            i64::from(c + rho > l && c <= l)
        } else if c > l && c + rho <= m + l {
            -1
        } else {
            0
        }
    });
    Ok(RatMatrix {
        num,
        den: rho as i64,
    })
}

/// `ρ^r A_r = D_ρ Δ̄_ρ^r Δ^{-r}`, the integer numerator of adapted decimation.
pub fn adapted_numerator(plan: &DecimationPlan) -> IntMatrix {
    let mut m = delta_inv_pow(plan.m, plan.r);
    for _ in 0..plan.r {
        m = m.apply_dbar(plan.rho);
    }
    m.subsample_rows(plan.rho)
}

/// `ρ^r D_ρ S_ρ^r = D_ρ (Δ̄_ρ Δ^{-1})^r`, the integer numerator of alternative
/// decimation.
pub fn alternative_numerator(plan: &DecimationPlan) -> IntMatrix {
    let mut m = IntMatrix::identity(plan.m);
    for _ in 0..plan.r {
        m = m.cumsum_down().apply_dbar(plan.rho);
    }
    m.subsample_rows(plan.rho)
}

/// Auxiliary double sequence: `a_{0,s} = [s ≥ 1]`, `a_{l,s} = Σ_{j ≤ s} a_{l−1,j}`.
///
/// Evaluated by running the recursion level by level; `None` on overflow.
pub fn a_seq(l: usize, s: i64) -> Option<u128> {
    if s <= 0 {
        return Some(0);
    }
    let s = usize::try_from(s).ok()?;
    let mut level: Vec<u128> = vec![1; s];
    for _ in 0..l {
        let mut acc: u128 = 0;
        for v in level.iter_mut() {
            acc = acc.checked_add(*v)?;
            *v = acc;
        }
    }
    level.last().copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_examples() {
        assert_eq!(
            delta(3).to_rows(),
            vec![vec![1, 0, 0], vec![-1, 1, 0], vec![0, -1, 1]]
        );
        let ones = [1, 1, 1];
        let v = delta_inv(3).mul_vec_i128(&ones).unwrap();
        assert_eq!(v, vec![1, 2, 3]);
        assert_eq!(delta_pow(4, 2).row(2), &[1, -2, 1, 0]);
    }

    #[test]
    fn delta_inverse_is_exact() {
        for m in 1..=12 {
            assert_eq!(&delta_inv(m) * &delta(m), IntMatrix::identity(m));
            assert_eq!(delta_inv_pow(m, 3), delta_inv(m).pow(3));
            assert_eq!(delta_pow(m, 3), delta(m).pow(3));
        }
    }

    #[test]
    fn dbar_examples() {
        assert_eq!(
            dbar_rho(4, 2).unwrap().to_rows(),
            vec![
                vec![1, 0, -1, 0],
                vec![0, 1, 0, 0],
                vec![-1, 0, 1, 0],
                vec![0, -1, 0, 1]
            ]
        );
        let full = dbar_rho(5, 5).unwrap();
        for t in 0..4 {
            assert!(full.row(t).iter().all(|&x| x == 0));
        }
        assert_eq!(full.row(4), &[0, 0, 0, 0, 1]);
        let twisted = &sub_sample(4, 2).unwrap() * &dbar_rho(4, 2).unwrap();
        assert_eq!(twisted.to_rows(), vec![vec![0, 1, 0, 0], vec![0, -1, 0, 1]]);
        assert_eq!(
            dbar_rho(3, 4),
            Err(OperatorError::InvalidBlock { m: 3, rho: 4 })
        );
    }

    #[test]
    fn sub_sample_examples() {
        assert_eq!(
            sub_sample(4, 2).unwrap().to_rows(),
            vec![vec![0, 1, 0, 0], vec![0, 0, 0, 1]]
        );
        assert_eq!(sub_sample(3, 1).unwrap(), IntMatrix::identity(3));
        let d = sub_sample(6, 3).unwrap();
        assert_eq!(d.row(0), &[0, 0, 1, 0, 0, 0]);
        assert_eq!(d.row(1), &[0, 0, 0, 0, 0, 1]);
        assert!(sub_sample(5, 2).is_err());
    }

    #[test]
    fn s_rho_examples() {
        let s1 = s_rho(5, 1).unwrap();
        assert_eq!(s1.num, IntMatrix::identity(5));
        assert_eq!(s1.den, 1);
        let s = s_rho(4, 2).unwrap();
        assert_eq!(s.num.row(2), &[0, 1, 1, 0]);
        assert_eq!(s.den, 2);
        // row 1 (l = 1 < ρ): -1/ρ on columns 2..=3
        assert_eq!(s.num.row(0), &[0, -1, -1, 0]);
    }

    #[test]
    fn a_seq_examples() {
        assert_eq!(a_seq(0, 5), Some(1));
        assert_eq!(a_seq(0, 0), Some(0));
        assert_eq!(a_seq(3, -2), Some(0));
        for s in 1..20 {
            assert_eq!(a_seq(1, s), Some(s as u128));
        }
    }

    #[test]
    fn plan_validation() {
        assert!(DecimationPlan::new(1, 24, 4).is_ok());
        assert_eq!(DecimationPlan::new(1, 24, 4).unwrap().eta, 6);
        assert!(matches!(
            DecimationPlan::new(1, 24, 5),
            Err(OperatorError::InvalidBlock { .. })
        ));
        assert!(DecimationPlan::new(0, 24, 4).is_err());
        assert!(DecimationPlan::new(1, 24, 0).is_err());
    }

    #[test]
    fn structured_numerators_match_dense_products() {
        for (r, eta, rho) in [(1, 3, 2), (2, 4, 3), (3, 5, 2), (2, 2, 4)] {
            let plan = DecimationPlan::from_eta(r, eta, rho).unwrap();
            let m = plan.m;
            let d = sub_sample(m, rho).unwrap();
            let dbar = dbar_rho(m, rho).unwrap();
            let dense = &(&d * &dbar.pow(r as u32)) * &delta_inv(m).pow(r as u32);
            assert_eq!(adapted_numerator(&plan), dense);
            let rho_s = s_rho(m, rho).unwrap().num;
            assert_eq!(alternative_numerator(&plan), &d * &rho_s.pow(r as u32));
        }
    }
}
