//! Unitarily generated frames `φ_j = e^{2πiΩ j/m} φ0` and the diagonal
//! factors `C̃`, `D̃` that describe how differences and cumulative sums act
//! on them.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, CMatrix, HermEig, LinalgError};
use crate::operators::DecimationPlan;
use crate::tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("base vector must have unit norm, got {0}")]
    BadBaseVector(f64),
    #[error("base vector has length {got}, generator is {k}x{k}")]
    DimensionMismatch { k: usize, got: usize },
    #[error("eigenvalue {0} is a multiple of the frame length")]
    ZeroEigenvalue(f64),
    #[error("eigenvalue {lambda} is not a nonzero integer in [-{half_eta}, {half_eta}]")]
    EigenvalueOutOfRange { lambda: f64, half_eta: f64 },
    #[error("frame length {spec} does not match plan length {plan}")]
    LengthMismatch { spec: usize, plan: usize },
    #[error("base vector is degenerate: min_s |<phi0, v_s>|^2 = {0:.3e}")]
    DegenerateBase(f64),
    #[error("not a frame: lower bound {lower:.3e}, upper bound {upper:.3e}")]
    RankDeficient { lower: f64, upper: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Generator, base vector and length of a unitarily generated frame.
#[derive(Debug, Clone)]
pub struct FrameSpec {
    pub omega: CMatrix,
    pub phi0: Vec<Complex64>,
    pub m: usize,
    eig: HermEig,
}

impl FrameSpec {
    /// Validates `Ω` (Hermitian) and `φ0` (unit norm) and diagonalizes `Ω`.
    pub fn new(omega: CMatrix, phi0: Vec<Complex64>, m: usize) -> Result<Self, FrameError> {
        let eig = linalg::herm_eig(&omega)?;
        Self::with_eig(omega, phi0, m, eig)
    }

    /// Builds `Ω = B diag(λ) B*` from its spectrum. `B = I` when no
    /// eigenvector matrix is given. The eigenvalues are kept exactly as given.
    pub fn from_eigen(
        eigenvalues: &[f64],
        eigenvectors: Option<CMatrix>,
        phi0: Vec<Complex64>,
        m: usize,
    ) -> Result<Self, FrameError> {
        let k = eigenvalues.len();
        let b = eigenvectors.unwrap_or_else(|| CMatrix::identity(k));
        if b.rows() != k || b.cols() != k {
            return Err(FrameError::DimensionMismatch { k, got: b.rows() });
        }
        let unitary_defect = (&b.adjoint() * &b).distance(&CMatrix::identity(k));
        if unitary_defect > tolerances::FRAME_ROW {
            return Err(LinalgError::DimensionMismatch(format!(
                "eigenvector matrix is not unitary (defect {unitary_defect:.3e})"
            ))
            .into());
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
        let eig = HermEig {
            eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            eigenvectors: CMatrix::from_fn(k, k, |i, j| b.get(i, order[j])),
        };
        let omega = eig.reconstruct();
        Self::with_eig(omega, phi0, m, eig)
    }

    /// Diagonal integer generator with `φ0 = (1, …, 1)/√k`.
    pub fn harmonic(eigenvalues: &[i64], m: usize) -> Result<Self, FrameError> {
        let k = eigenvalues.len();
        let lambdas: Vec<f64> = eigenvalues.iter().map(|&l| l as f64).collect();
        let phi0 = vec![Complex64::new(1.0 / (k as f64).sqrt(), 0.0); k];
        Self::from_eigen(&lambdas, None, phi0, m)
    }

    fn with_eig(
        omega: CMatrix,
        phi0: Vec<Complex64>,
        m: usize,
        eig: HermEig,
    ) -> Result<Self, FrameError> {
        let k = omega.rows();
        if phi0.len() != k {
            return Err(FrameError::DimensionMismatch { k, got: phi0.len() });
        }
        let norm = linalg::vec_norm2(&phi0);
        if (norm - 1.0).abs() > tolerances::UNIT_NORM {
            return Err(FrameError::BadBaseVector(norm));
        }
        Ok(Self {
            omega,
            phi0,
            m,
            eig,
        })
    }

    /// Same generator and base vector with a different frame length.
    pub fn with_length(&self, m: usize) -> Self {
        Self { m, ..self.clone() }
    }

    pub fn k(&self) -> usize {
        self.phi0.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    /// `B`, with columns `v_s`.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eig.eigenvectors
    }

    /// `B diag(f(λ_s)) B*`.
    fn spectral_fn(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let diag: Vec<Complex64> = self.eig.eigenvalues.iter().map(|&l| f(l)).collect();
        let b = &self.eig.eigenvectors;
        &(b * &CMatrix::from_diag(&diag)) * &b.adjoint()
    }
}

/// `e^{2πi λ j / m}` with the angle reduced modulo one turn before scaling.
fn unit_phase(lambda: f64, j: usize, m: usize) -> Complex64 {
    let turns = (lambda * j as f64).rem_euclid(m as f64) / m as f64;
    Complex64::from_polar(1.0, 2.0 * PI * turns)
}

/// The `m×k` analysis operator with rows `φ_j*`, `j = 1..m`.
#[derive(Debug, Clone)]
pub struct AnalysisOperator {
    pub phi: CMatrix,
    pub spec: FrameSpec,
}

impl AnalysisOperator {
    /// `y = Φx`.
    pub fn analyze(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.phi
            .mul_vec(x)
            .expect("signal dimension must match the frame")
    }
}

/// Builds `Φ` with `U_{j/m} = B diag(e^{2πiλ_s j/m}) B*`.
pub fn build_ugf(spec: &FrameSpec) -> AnalysisOperator {
    let k = spec.k();
    let b = spec.eigenvectors();
    let coeffs = b
        .adjoint()
        .mul_vec(&spec.phi0)
        .expect("phi0 length validated at construction");
    let lambdas = spec.eigenvalues();
    let mut phi = CMatrix::zeros(spec.m, k);
    for j in 1..=spec.m {
        let rotated: Vec<Complex64> = coeffs
            .iter()
            .zip(lambdas)
            .map(|(&c, &l)| c * unit_phase(l, j, spec.m))
            .collect();
        let phi_j = b.mul_vec(&rotated).expect("square eigenvector matrix");
        for (s, z) in phi_j.into_iter().enumerate() {
            phi.set(j - 1, s, z.conj());
        }
    }
    AnalysisOperator {
        phi,
        spec: spec.clone(),
    }
}

/// `C̃`, `D̃` and the rank-one residual row `φ0*`.
#[derive(Debug, Clone)]
pub struct FrameFactors {
    /// `B diag(1/(1 − e^{2πiλ_s/m})) B*`.
    pub c_tilde: CMatrix,
    /// `B diag(1 − e^{2πiρλ_s/m}) B*`.
    pub d_tilde: CMatrix,
    /// `φ0*` as a `1×k` row.
    pub residual_row: CMatrix,
}

fn integer_value(lambda: f64) -> Option<i64> {
    let rounded = lambda.round();
    ((lambda - rounded).abs() <= 1e-9).then_some(rounded as i64)
}

/// Checks that every eigenvalue is a nonzero integer in `[-η/2, η/2]`.
pub fn check_eigenvalues(spec: &FrameSpec, eta: usize) -> Result<(), FrameError> {
    let half_eta = eta as f64 / 2.0;
    for &lambda in spec.eigenvalues() {
        match integer_value(lambda) {
            Some(n) if n != 0 && (n as f64).abs() <= half_eta => {}
            _ => return Err(FrameError::EigenvalueOutOfRange { lambda, half_eta }),
        }
    }
    Ok(())
}

pub fn frame_factors(spec: &FrameSpec, plan: &DecimationPlan) -> Result<FrameFactors, FrameError> {
    if spec.m != plan.m {
        return Err(FrameError::LengthMismatch {
            spec: spec.m,
            plan: plan.m,
        });
    }
    for &lambda in spec.eigenvalues() {
        if let Some(n) = integer_value(lambda) {
            if n.rem_euclid(plan.m as i64) == 0 {
                return Err(FrameError::ZeroEigenvalue(lambda));
            }
        }
    }
    check_eigenvalues(spec, plan.eta)?;
    let one = Complex64::new(1.0, 0.0);
    let m = plan.m;
    let rho = plan.rho;
    Ok(FrameFactors {
        c_tilde: spec.spectral_fn(|l| one / (one - unit_phase(l, 1, m))),
        d_tilde: spec.spectral_fn(|l| one - unit_phase(l, rho, m)),
        residual_row: CMatrix::row_vector(
            &spec.phi0.iter().map(|z| z.conj()).collect::<Vec<_>>(),
        ),
    })
}

/// `C_{φ0} = min_s |⟨φ0, v_s⟩|²`.
pub fn lower_frame_const(spec: &FrameSpec) -> Result<f64, FrameError> {
    let b = spec.eigenvectors();
    let c = (0..spec.k())
        .map(|s| {
            let v = b.col(s);
            v.iter()
                .zip(&spec.phi0)
                .map(|(vi, pi)| pi * vi.conj())
                .sum::<Complex64>()
                .norm_sqr()
        })
        .fold(f64::INFINITY, f64::min);
    if c < tolerances::DEGENERATE_BASE {
        return Err(FrameError::DegenerateBase(c));
    }
    Ok(c)
}

/// Lower and upper frame bounds `(σ_min², σ_max²)` of the rows of `e`.
pub fn frame_bounds(e: &CMatrix) -> Result<(f64, f64), FrameError> {
    if e.rows() < e.cols() {
        return Err(FrameError::RankDeficient {
            lower: 0.0,
            upper: linalg::spectral_norm(e).powi(2),
        });
    }
    let lower = linalg::sigma_min_sq(e);
    let upper = linalg::spectral_norm(e).powi(2);
    if upper == 0.0 || lower < tolerances::RANK_REL * upper {
        return Err(FrameError::RankDeficient { lower, upper });
    }
    Ok((lower, upper))
}

/// `min_s |sin(πλ_s/η)| / (ρ |sin(πλ_s/m)|)`, the smallest singular value of
/// `(1/ρ) D̃ C̃`.
pub fn dc_lower_ratio(spec: &FrameSpec, plan: &DecimationPlan) -> f64 {
    spec.eigenvalues()
        .iter()
        .map(|&l| {
            (PI * l / plan.eta as f64).sin().abs()
                / (plan.rho as f64 * (PI * l / plan.m as f64).sin().abs())
        })
        .fold(f64::INFINITY, f64::min)
}

fn relative(lhs: &CMatrix, rhs: &CMatrix) -> f64 {
    let norm = lhs.frobenius_norm();
    let diff = lhs.distance(rhs);
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}

/// Relative residual of `Δ^{-1}Φ = ΦC̃ − 1_{m,1} φ0* C̃`.
pub fn cumsum_residual(spec: &FrameSpec, factors: &FrameFactors) -> f64 {
    let phi = build_ugf(spec).phi;
    let lhs = &crate::operators::delta_inv(spec.m).to_cmatrix() * &phi;
    let ones = CMatrix::from_fn(spec.m, 1, |_, _| Complex64::new(1.0, 0.0));
    let rhs = &(&phi * &factors.c_tilde) - &(&(&ones * &factors.residual_row) * &factors.c_tilde);
    relative(&lhs, &rhs)
}

/// Relative residual of `Δ̄_ρΦ = ΦD̃ + Δ̄_ρ 1_{m,1} φ0*`.
pub fn block_difference_residual(
    spec: &FrameSpec,
    plan: &DecimationPlan,
    factors: &FrameFactors,
) -> Result<f64, FrameError> {
    let phi = build_ugf(spec).phi;
    let dbar = crate::operators::dbar_rho(spec.m, plan.rho)
        .map_err(|_| FrameError::LengthMismatch {
            spec: spec.m,
            plan: plan.m,
        })?
        .to_cmatrix();
    let ones = CMatrix::from_fn(spec.m, 1, |_, _| Complex64::new(1.0, 0.0));
    let lhs = &dbar * &phi;
    let rhs = &(&phi * &factors.d_tilde) + &(&(&dbar * &ones) * &factors.residual_row);
    Ok(relative(&lhs, &rhs))
}
