//! Reference constructions written directly from the operator and frame
//! definitions, kept independent of the library's structured code paths.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

pub type IMat = Vec<Vec<i128>>;
pub type CMat = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(m: usize) -> IMat {
    (0..m).map(|i| (0..m).map(|j| i128::from(i == j)).collect()).collect()
}

pub fn delta(m: usize) -> IMat {
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { 1 } else if i == j + 1 { -1 } else { 0 })
                .collect()
        })
        .collect()
}

pub fn delta_inv(m: usize) -> IMat {
    (0..m).map(|i| (0..m).map(|j| i128::from(j <= i)).collect()).collect()
}

/// Row `t` (1-based): `e_t − e_{t−ρ}` for `t > ρ`, `e_ρ` for `t = ρ`,
/// `e_t − e_{m+t−ρ}` for `t < ρ`.
pub fn dbar(m: usize, rho: usize) -> IMat {
    (1..=m)
        .map(|t| {
            let mut row = vec![0i128; m];
            row[t - 1] += 1;
            if t > rho {
                row[t - rho - 1] -= 1;
            } else if t < rho {
                row[m + t - rho - 1] -= 1;
            }
            row
        })
        .collect()
}

pub fn sub_sample(m: usize, rho: usize) -> IMat {
    (1..=m / rho)
        .map(|l| (1..=m).map(|s| i128::from(s == l * rho)).collect())
        .collect()
}

/// `ρ S_ρ`: windows of the `ρ` latest samples for rows `l ≥ ρ`, `−1` on
/// columns `l+1 … m−ρ+l` for rows `l < ρ`.
pub fn rho_s(m: usize, rho: usize) -> IMat {
    (1..=m)
        .map(|l| {
            (1..=m)
                .map(|c| {
                    if l >= rho {
                        i128::from(c + rho > l && c <= l)
                    } else if c > l && c + rho <= m + l {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn imul(a: &IMat, b: &IMat) -> IMat {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).map(|(&x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

/// `M ↦ Δ^{-1} M`: running sums down each column.
pub fn cumsum_rows(mut a: IMat) -> IMat {
    for i in 1..a.len() {
        let (prev, cur) = a.split_at_mut(i);
        for (x, p) in cur[0].iter_mut().zip(&prev[i - 1]) {
            *x += p;
        }
    }
    a
}

/// `M ↦ Δ̄_ρ M` from the row definition.
pub fn dbar_rows(a: &IMat, rho: usize) -> IMat {
    let m = a.len();
    (1..=m)
        .map(|t| {
            let other = if t > rho {
                Some(t - rho)
            } else if t < rho {
                Some(m + t - rho)
            } else {
                None
            };
            a[t - 1]
                .iter()
                .enumerate()
                .map(|(j, &v)| v - other.map_or(0, |o| a[o - 1][j]))
                .collect()
        })
        .collect()
}

/// `D_ρ Δ̄_ρ^r Δ^{-r}`.
pub fn adapted_numerator(m: usize, rho: usize, r: usize) -> IMat {
    let mut a = identity(m);
    for _ in 0..r {
        a = cumsum_rows(a);
    }
    for _ in 0..r {
        a = dbar_rows(&a, rho);
    }
    (1..=m / rho).map(|l| a[l * rho - 1].clone()).collect()
}

/// `D_ρ (ρ S_ρ)^r`.
pub fn alternative_numerator(m: usize, rho: usize, r: usize) -> IMat {
    let s = rho_s(m, rho);
    let mut a = identity(m);
    for _ in 0..r {
        a = imul(&s, &a);
    }
    imul(&sub_sample(m, rho), &a)
}

pub fn imul_vec(a: &IMat, v: &[i128]) -> Vec<i128> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn to_complex(a: &IMat, scale: f64) -> CMat {
    a.iter()
        .map(|row| row.iter().map(|&v| c(v as f64 * scale, 0.0)).collect())
        .collect()
}

pub fn cmul(a: &CMat, b: &CMat) -> CMat {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum())
                .collect()
        })
        .collect()
}

pub fn cmul_vec(a: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn adjoint(a: &CMat) -> CMat {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].conj()).collect())
        .collect()
}

pub fn csub(a: &CMat, b: &CMat) -> CMat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

pub fn fro(a: &CMat) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ_j ‖column j‖₂`.
pub fn col_norm_sum(a: &CMat) -> f64 {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j].norm_sqr()).sum::<f64>().sqrt())
        .sum()
}

/// A frame given by its spectrum, eigenvector columns and base vector.
#[derive(Clone)]
pub struct Frame {
    pub name: &'static str,
    pub lambdas: Vec<f64>,
    pub b: CMat,
    pub phi0: Vec<Complex64>,
}

impl Frame {
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    /// `m×k` matrix with rows `φ_j* = (B diag(e^{2πiλ j/m}) B* φ0)*`.
    pub fn phi(&self, m: usize) -> CMat {
        let k = self.k();
        let coeffs: Vec<Complex64> = (0..k)
            .map(|s| (0..k).map(|i| self.b[i][s].conj() * self.phi0[i]).sum())
            .collect();
        (1..=m)
            .map(|j| {
                (0..k)
                    .map(|i| {
                        (0..k)
                            .map(|s| {
                                let angle = 2.0 * PI * self.lambdas[s] * j as f64 / m as f64;
                                self.b[i][s] * Complex64::from_polar(1.0, angle) * coeffs[s]
                            })
                            .sum::<Complex64>()
                            .conj()
                    })
                    .collect()
            })
            .collect()
    }

    /// `B diag(f(λ)) B*`.
    pub fn spectral(&self, f: impl Fn(f64) -> Complex64) -> CMat {
        let k = self.k();
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| (0..k).map(|s| self.b[i][s] * f(self.lambdas[s]) * self.b[j][s].conj()).sum())
                    .collect()
            })
            .collect()
    }

    /// `min_s |⟨φ0, v_s⟩|²`.
    pub fn c_phi0(&self) -> f64 {
        (0..self.k())
            .map(|s| {
                (0..self.k())
                    .map(|i| self.phi0[i] * self.b[i][s].conj())
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn library_spec(&self, m: usize) -> adec_core::FrameSpec {
        let k = self.k();
        let b = adec_core::CMatrix::from_fn(k, k, |i, j| self.b[i][j]);
        adec_core::FrameSpec::from_eigen(&self.lambdas, Some(b), self.phi0.clone(), m).unwrap()
    }
}

pub fn grid_frames() -> Vec<Frame> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let eye = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    vec![
        Frame {
            name: "k=1 lambda=1",
            lambdas: vec![1.0],
            b: vec![vec![c(1.0, 0.0)]],
            phi0: vec![c(1.0, 0.0)],
        },
        Frame {
            name: "k=2 lambda=(1,-1)",
            lambdas: vec![1.0, -1.0],
            b: eye.clone(),
            phi0: vec![c(h, 0.0), c(h, 0.0)],
        },
        Frame {
            name: "k=2 lambda=(1,2)",
            lambdas: vec![1.0, 2.0],
            b: eye,
            phi0: vec![c(h, 0.0), c(0.0, h)],
        },
        Frame {
            name: "k=2 rotated",
            lambdas: vec![2.0, -1.0],
            b: vec![vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]],
            phi0: vec![c(0.6, 0.0), c(0.0, 0.8)],
        },
    ]
}

/// Inverse of a 1×1 or 2×2 matrix.
pub fn small_inverse(g: &CMat) -> CMat {
    match g.len() {
        1 => vec![vec![g[0][0].inv()]],
        2 => {
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            vec![
                vec![g[1][1] / det, -g[0][1] / det],
                vec![-g[1][0] / det, g[0][0] / det],
            ]
        }
        n => panic!("unsupported size {n}"),
    }
}

/// Smallest eigenvalue of a 1×1 or 2×2 Hermitian matrix.
pub fn small_min_eig(g: &CMat) -> f64 {
    match g.len() {
        1 => g[0][0].re,
        2 => {
            let (a, d) = (g[0][0].re, g[1][1].re);
            let off = g[0][1].norm_sqr();
            (a + d) / 2.0 - (((a - d) / 2.0).powi(2) + off).sqrt()
        }
        n => panic!("unsupported size {n}"),
    }
}

/// `(MΦ)^† M q` through the `k×k` normal equations.
pub fn reconstruct(a_phi: &CMat, a_q: &[Complex64]) -> Vec<Complex64> {
    let adj = adjoint(a_phi);
    let g = cmul(&adj, a_phi);
    cmul_vec(&small_inverse(&g), &cmul_vec(&adj, a_q))
}
