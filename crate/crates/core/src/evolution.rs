//! Unitary propagators by Cayley steps and Heisenberg-picture checks.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::ScalarField;
use crate::linalg::{max_abs, normal_norm};
use crate::operators::SparseOperator;

/// Dense unitary on the site basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    pub matrix: DMatrix<Complex64>,
}

impl Unitary {
    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |U†U - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(n, n)))
    }

    /// The reverse-time propagator.
    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }

    /// `self · other`: evolve by `other` first.
    pub fn then(&self, other: &Unitary) -> Self {
        Self { matrix: &other.matrix * &self.matrix }
    }

    pub fn max_abs_diff(&self, other: &Unitary) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}

/// One Cayley step `(1 + iHδ/2)⁻¹ (1 - iHδ/2)`.
pub fn cayley_step(h: &SparseOperator, delta: f64) -> Result<DMatrix<Complex64>> {
    let n = h.dim();
    let half = Complex64::new(0.0, delta / 2.0);
    let hd = h.to_dense();
    let id = DMatrix::<Complex64>::identity(n, n);
    let plus = &id + &hd * half;
    let minus = &id - &hd * half;
    plus.lu().solve(&minus).ok_or(Error::SingularSolve)
}

fn check_interval(t1: f64, t2: f64, steps: usize) -> Result<()> {
    if steps == 0 || !(t2 > t1) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::InvalidTimeInterval { t1, t2, steps });
    }
    Ok(())
}

/// Time-ordered product of Cayley steps with `H` sampled at step midpoints.
pub fn propagator(
    sampler: impl Fn(f64) -> Result<SparseOperator>,
    t1: f64,
    t2: f64,
    steps: usize,
) -> Result<Unitary> {
    check_interval(t1, t2, steps)?;
    let delta = (t2 - t1) / steps as f64;
    let mut u: Option<DMatrix<Complex64>> = None;
    for n in 0..steps {
        let h = sampler(t1 + (n as f64 + 0.5) * delta)?;
        let step = cayley_step(&h, delta)?;
        u = Some(match u {
            None => step,
            Some(prev) => step * prev,
        });
    }
    Ok(Unitary { matrix: u.expect("at least one step") })
}

/// Propagator of a time-independent `H`; one factorization reused per step.
pub fn static_propagator(h: &SparseOperator, t1: f64, t2: f64, steps: usize) -> Result<Unitary> {
    check_interval(t1, t2, steps)?;
    let step = cayley_step(h, (t2 - t1) / steps as f64)?;
    let mut u = step.clone();
    for _ in 1..steps {
        u = &step * u;
    }
    Ok(Unitary { matrix: u })
}

/// Smallest step count with `‖H‖·δ ≤ 0.1`, using the row-sum bound on `‖H‖`.
pub fn default_steps(h_norm: f64, t1: f64, t2: f64) -> usize {
    ((h_norm * (t2 - t1).abs() / 0.1).ceil() as usize).max(1)
}

fn mult_dense(a: &ScalarField) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        a.len(),
        a.values.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}

/// `a_t = U† a U`.
pub fn heisenberg_evolve(a: &ScalarField, u: &Unitary) -> Result<DMatrix<Complex64>> {
    if a.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: a.len() });
    }
    Ok(u.matrix.adjoint() * mult_dense(a) * &u.matrix)
}

/// Operator norm of `[a, b]` for Hermitian `a`, `b`.
pub fn commutator_norm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    normal_norm(&(a * b - b * a))
}

/// `max |(a_{t+δ} - a_{t-δ}) / 2δ - i[H_t, a_t]|` with `a_t` evolved from 0.
///
/// Both sides are pulled back to time 0, where the Heisenberg-picture
/// Hamiltonian is the sampled `H(t)` conjugated by `U(t, 0)`.
pub fn heisenberg_residual(
    sampler: impl Fn(f64) -> Result<SparseOperator>,
    a: &ScalarField,
    t: f64,
    delta: f64,
    steps_to_t: usize,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let h_t = sampler(t)?;
    let n = h_t.dim();
    if a.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.len() });
    }
    let u_t = if t == 0.0 {
        Unitary::identity(n)
    } else if t > 0.0 {
        propagator(&sampler, 0.0, t, steps_to_t)?
    } else {
        propagator(&sampler, t, 0.0, steps_to_t)?.adjoint()
    };
    let plus = cayley_step(&sampler(t + delta / 2.0)?, delta)?;
    let minus = cayley_step(&sampler(t - delta / 2.0)?, delta)?;
    let am = mult_dense(a);
    let a_plus = plus.adjoint() * &am * &plus;
    let a_minus = &minus * &am * minus.adjoint();
    let hd = h_t.to_dense();
    let rhs = (&hd * &am - &am * &hd) * Complex64::i();
    let lhs = (a_plus - a_minus) / Complex64::new(2.0 * delta, 0.0);
    let diff = u_t.matrix.adjoint() * (lhs - rhs) * &u_t.matrix;
    Ok(max_abs(&diff))
}
