//! Sparse operator algebra and the covariant Laplacian builder.
//!
//! Hopping terms follow the Peierls form `H_ij = -c_ij exp(-i theta_ij)`
//! with `theta_ij` the line integral of the connection along the link
//! `i -> j`. Couplings come from the arithmetic link average of the inverse
//! metric, which keeps the operator Hermitian for position dependent `g`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::{Lattice, LinkField, LinkKind, ScalarField};
use crate::linalg::symmetric_eigenvalues;
use crate::{Error, Result};

/// Sparse complex square matrix over lattice sites.
///
/// `range` is the declared stencil range: the largest graph distance any
/// nonzero entry may couple.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    rows: Vec<BTreeMap<usize, Complex64>>,
    range: usize,
}

/// Alias used where an operator is self-adjoint by construction.
pub type HermitianOperator = SparseOperator;

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        SparseOperator {
            dim,
            rows: vec![BTreeMap::new(); dim],
            range: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut op = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            if v != 0.0 {
                op.rows[i].insert(i, Complex64::new(v, 0.0));
            }
        }
        op
    }

    /// Drops exact zeros; entries smaller than rounding are kept.
    pub fn from_dense(m: &DMatrix<Complex64>, range: usize) -> Self {
        let mut op = Self::zeros(m.nrows());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != Complex64::new(0.0, 0.0) {
                    op.rows[i].insert(j, v);
                }
            }
        }
        op.range = range;
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn with_range(mut self, range: usize) -> Self {
        self.range = range;
        self
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rows[i].get(&j).copied().unwrap_or_default()
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        if v == Complex64::new(0.0, 0.0) {
            self.rows[i].remove(&j);
        } else {
            self.rows[i].insert(j, v);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: Complex64) {
        let e = self.rows[i].entry(j).or_default();
        *e += v;
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.rows[i].iter().map(|(&j, &v)| (j, v))
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(&j, &v)| (i, j, v)))
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    fn check_dim(&self, other: &SparseOperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: Complex64, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (i, j, v) in other.entries() {
            out.add_to(i, j, alpha * v);
        }
        out.prune();
        out.range = self.range.max(other.range);
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> SparseOperator {
        let mut out = self.clone();
        for r in &mut out.rows {
            for v in r.values_mut() {
                *v *= s;
            }
        }
        out.prune();
        out
    }

    pub fn mul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let mut out = Self::zeros(self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            let acc = &mut out.rows[i];
            for (&k, &a) in row {
                for (&j, &b) in &other.rows[k] {
                    *acc.entry(j).or_default() += a * b;
                }
            }
        }
        out.prune();
        out.range = self.range.saturating_add(other.range);
        Ok(out)
    }

    pub fn adjoint(&self) -> SparseOperator {
        let mut out = Self::zeros(self.dim);
        for (i, j, v) in self.entries() {
            out.rows[j].insert(i, v.conj());
        }
        out.range = self.range;
        out
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(&j, &v)| v * x[j]).sum())
            .collect()
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.entries() {
            worst = worst.max((v - self.get(j, i).conj()).norm());
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.entries() {
            worst = worst.max((v - other.get(i, j)).norm());
        }
        for (i, j, v) in other.entries() {
            worst = worst.max((v - self.get(i, j)).norm());
        }
        worst
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn row_sum_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.values().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn prune(&mut self) {
        for r in &mut self.rows {
            r.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        }
    }

    /// Writes the sparse triplet format: `dim nnz` header, then `i j re im`.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.dim, self.nnz())?;
        for (i, j, v) in self.entries() {
            writeln!(w, "{i} {j} {:.16e} {:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Parses the triplet format. The declared range is left at `dim`
    /// because the format carries no lattice.
    pub fn read_triplets<R: BufRead>(r: R) -> Result<SparseOperator> {
        let mut lines = r.lines().enumerate().filter_map(|(n, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((n + 1, other)),
        });
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let (n, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))?;
        let header = header?;
        let mut it = header.split_whitespace();
        let mut field = |name: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| parse_err(n, format!("missing {name}")))?
                .parse()
                .map_err(|e| parse_err(n, format!("bad {name}: {e}")))
        };
        let dim = field("dim")?;
        let nnz = field("nnz")?;
        let mut op = Self::zeros(dim);
        let mut count = 0;
        for (n, line) in lines {
            let line = line?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(parse_err(n, format!("expected 4 fields, got {}", parts.len())));
            }
            let idx = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|e| parse_err(n, format!("{e}")))?;
                if v >= dim {
                    return Err(parse_err(n, format!("index {v} out of range")));
                }
                Ok(v)
            };
            let num = |s: &str| -> Result<f64> { s.parse().map_err(|e| parse_err(n, format!("{e}"))) };
            let (i, j) = (idx(parts[0])?, idx(parts[1])?);
            op.set(i, j, Complex64::new(num(parts[2])?, num(parts[3])?));
            count += 1;
        }
        if count != nnz {
            return Err(parse_err(0, format!("header declares {nnz} entries, found {count}")));
        }
        op.range = dim;
        Ok(op)
    }
}

/// `[X, Y] = XY - YX`.
pub fn commutator(x: &SparseOperator, y: &SparseOperator) -> Result<SparseOperator> {
    x.mul(y)?.sub(&y.mul(x)?)
}

/// Diagonal multiplication operator.
pub fn mult_op(f: &ScalarField) -> SparseOperator {
    SparseOperator::diagonal(&f.values)
}

/// A position function used inside commutators.
///
/// `Coordinate(k)` has no global values on periodic axes; only its
/// minimal-image differences along pairs of sites are defined.
#[derive(Debug, Clone, Copy)]
pub enum Position<'a> {
    Field(&'a ScalarField),
    Coordinate(usize),
}

impl Position<'_> {
    /// `a(j) - a(i)`.
    pub fn difference(&self, lattice: &Lattice, i: usize, j: usize) -> f64 {
        match self {
            Position::Field(f) => f.values[j] - f.values[i],
            Position::Coordinate(k) => lattice.displacement(i, j)[*k],
        }
    }
}

/// `[mult(a), X]`, entrywise `(a_i - a_j) X_ij`.
pub fn position_commutator(lattice: &Lattice, a: Position<'_>, x: &SparseOperator) -> SparseOperator {
    let mut out = SparseOperator::zeros(x.dim());
    for (i, j, v) in x.entries() {
        if i != j {
            out.set(i, j, v * (-a.difference(lattice, i, j)));
        }
    }
    out.range = x.range;
    out
}

/// Strictly positive mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mass(f64);

impl Mass {
    pub fn new(m: f64) -> Result<Self> {
        if m.is_finite() && m > 0.0 {
            Ok(Mass(m))
        } else {
            Err(Error::InvalidMass(m))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Inverse metric `g^{kl}` per site, a symmetric `d x d` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricField {
    dim: usize,
    data: Vec<f64>,
}

impl MetricField {
    pub fn constant(lattice: &Lattice, m: &[f64]) -> Self {
        let d = lattice.dim();
        assert_eq!(m.len(), d * d, "metric needs d*d components");
        MetricField {
            dim: d,
            data: m.repeat(lattice.num_sites()),
        }
    }

    pub fn identity(lattice: &Lattice) -> Self {
        let d = lattice.dim();
        let id = DMatrix::<f64>::identity(d, d);
        Self::constant(lattice, id.as_slice())
    }

    /// `f` returns the row-major `d x d` components at a site position.
    pub fn from_fn(lattice: &Lattice, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let d = lattice.dim();
        let mut data = Vec::with_capacity(lattice.num_sites() * d * d);
        for s in 0..lattice.num_sites() {
            let m = f(&lattice.position(s));
            assert_eq!(m.len(), d * d, "metric needs d*d components");
            data.extend(m);
        }
        MetricField { dim: d, data }
    }

    pub fn from_matrices(dim: usize, matrices: &[DMatrix<f64>]) -> Self {
        let mut data = Vec::with_capacity(matrices.len() * dim * dim);
        for m in matrices {
            for k in 0..dim {
                for l in 0..dim {
                    data.push(m[(k, l)]);
                }
            }
        }
        MetricField { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_sites(&self) -> usize {
        self.data.len() / (self.dim * self.dim)
    }

    pub fn get(&self, site: usize, k: usize, l: usize) -> f64 {
        self.data[site * self.dim * self.dim + k * self.dim + l]
    }

    pub fn set(&mut self, site: usize, k: usize, l: usize, v: f64) {
        self.data[site * self.dim * self.dim + k * self.dim + l] = v;
    }

    pub fn matrix(&self, site: usize) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_row_slice(d, d, &self.data[site * d * d..(site + 1) * d * d])
    }

    pub fn scaled(&self, s: f64) -> Self {
        MetricField {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn min_eigenvalues(&self) -> Vec<f64> {
        (0..self.num_sites())
            .map(|s| symmetric_eigenvalues(&self.matrix(s))[0])
            .collect()
    }

    pub fn check_positive_definite(&self) -> Result<()> {
        for (site, ev) in self.min_eigenvalues().into_iter().enumerate() {
            if !(ev > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    site,
                    min_eigenvalue: ev,
                });
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &MetricField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Peierls phases `theta_l = A_l * |l|` from a connection given as
/// tangential components per unit length.
pub fn connection_phases(lattice: &Lattice, a: &LinkField) -> LinkField {
    LinkField {
        values: lattice
            .links()
            .iter()
            .zip(&a.values)
            .map(|(l, v)| v * l.length)
            .collect(),
    }
}

/// Inverse of [`connection_phases`].
pub fn phases_to_connection(lattice: &Lattice, theta: &LinkField) -> LinkField {
    LinkField {
        values: lattice
            .links()
            .iter()
            .zip(&theta.values)
            .map(|(l, v)| v / l.length)
            .collect(),
    }
}

/// Connection from continuum components `A_k(x)`: each link carries its
/// straight-path line integral (Simpson rule) divided by the link length.
pub fn connection_from_components(lattice: &Lattice, a: impl Fn(&[f64]) -> Vec<f64>) -> LinkField {
    LinkField::from_forward_fn(lattice, |l| {
        let x0 = lattice.position(l.from);
        let at = |t: f64| -> f64 {
            let x: Vec<f64> = x0
                .iter()
                .zip(&l.displacement)
                .map(|(x, dx)| x + t * dx)
                .collect();
            a(&x).iter().zip(&l.displacement).map(|(ak, dx)| ak * dx).sum()
        };
        let integral = (at(0.0) + 4.0 * at(0.5) + at(1.0)) / 6.0;
        integral / l.length
    })
}

/// Symmetric coupling `c_l` on every directed link for inverse metric `g`.
pub fn link_couplings(lattice: &Lattice, g: &MetricField, m: Mass) -> Vec<f64> {
    lattice
        .links()
        .iter()
        .map(|l| {
            let (i, j) = (l.from, l.to);
            match l.kind {
                LinkKind::Axis(k) => {
                    let h = lattice.spacing(k);
                    (g.get(i, k, k) + g.get(j, k, k)) / (4.0 * m.value() * h * h)
                }
                LinkKind::Diagonal(k, q) => {
                    let sign = (l.offset[k] * l.offset[q]).signum() as f64;
                    let (hk, hq) = (lattice.spacing(k), lattice.spacing(q));
                    sign * (g.get(i, k, q) + g.get(j, k, q)) / (8.0 * m.value() * hk * hq)
                }
            }
        })
        .collect()
}

/// Covariant Laplacian from explicit link phases.
pub fn laplacian_from_phases(
    lattice: &Lattice,
    g: &MetricField,
    theta: &LinkField,
    m: Mass,
) -> Result<SparseOperator> {
    if g.num_sites() != lattice.num_sites() || g.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            found: g.num_sites(),
        });
    }
    if theta.values.len() != lattice.num_links() {
        return Err(Error::LengthMismatch {
            what: "link phases",
            expected: lattice.num_links(),
            found: theta.values.len(),
        });
    }
    for (link, &phase) in theta.values.iter().enumerate() {
        if !(phase.abs() < FRAC_PI_2) {
            return Err(Error::PhaseOutOfRange { link, phase });
        }
    }
    twisted_laplacian(lattice, g, theta, m)
}

/// [`laplacian_from_phases`] without the phase-range precondition. Any real
/// phases are accepted, so the result need not be reconstructible.
pub fn twisted_laplacian(
    lattice: &Lattice,
    g: &MetricField,
    theta: &LinkField,
    m: Mass,
) -> Result<SparseOperator> {
    if g.num_sites() != lattice.num_sites() || g.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            found: g.num_sites(),
        });
    }
    if theta.values.len() != lattice.num_links() {
        return Err(Error::LengthMismatch {
            what: "link phases",
            expected: lattice.num_links(),
            found: theta.values.len(),
        });
    }
    g.check_positive_definite()?;
    let c = link_couplings(lattice, g, m);
    let n = lattice.num_sites();
    let mut op = SparseOperator::zeros(n);
    let mut diag = vec![0.0; n];
    for (id, l) in lattice.links().iter().enumerate() {
        if c[id] == 0.0 {
            continue;
        }
        op.set(l.from, l.to, -c[id] * Complex64::from_polar(1.0, -theta.values[id]));
        diag[l.from] += c[id];
    }
    for (i, v) in diag.into_iter().enumerate() {
        op.add_to(i, i, Complex64::new(v, 0.0));
    }
    op.prune();
    op.range = 1;
    Ok(op)
}

/// `Δ(A, g)` with `A` given as tangential components per unit length.
pub fn covariant_laplacian(
    lattice: &Lattice,
    g: &MetricField,
    a: &LinkField,
    m: Mass,
) -> Result<SparseOperator> {
    laplacian_from_phases(lattice, g, &connection_phases(lattice, a), m)
}

/// `H = Δ(A, g) + mult(φ)`.
pub fn build_hamiltonian(
    lattice: &Lattice,
    g: &MetricField,
    a: &LinkField,
    phi: &ScalarField,
    m: Mass,
) -> Result<SparseOperator> {
    if phi.len() != lattice.num_sites() {
        return Err(Error::LengthMismatch {
            what: "potential",
            expected: lattice.num_sites(),
            found: phi.len(),
        });
    }
    covariant_laplacian(lattice, g, a, m)?.add(&mult_op(phi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub hermiticity_defect: f64,
    pub is_hermitian: bool,
    pub locality_radius: usize,
    /// `(max off-diagonal |M_ij|, max_k ||[M, x_k]||_max)`; both vanish
    /// exactly when `M` commutes with every multiplication operator.
    pub commutant_defect: (f64, f64),
}

/// Structural certificate for an operator on `lattice`. Entries with modulus
/// at or below `tol` do not count towards the locality radius.
pub fn validate_operator(lattice: &Lattice, m: &SparseOperator, tol: f64) -> ValidationReport {
    let hermiticity_defect = m.hermiticity_defect();
    let scale = m.max_abs().max(1.0);
    let mut locality_radius = 0;
    let mut off_diag: f64 = 0.0;
    let mut comm = vec![0.0f64; lattice.dim()];
    for (i, j, v) in m.entries() {
        if i == j {
            continue;
        }
        off_diag = off_diag.max(v.norm());
        if v.norm() > tol {
            locality_radius = locality_radius.max(lattice.graph_distance(i, j));
        }
        for (k, c) in comm.iter_mut().enumerate() {
            *c = c.max((v * Position::Coordinate(k).difference(lattice, i, j)).norm());
        }
    }
    ValidationReport {
        hermiticity_defect,
        is_hermitian: hermiticity_defect <= 1e-12 * scale,
        locality_radius,
        commutant_defect: (off_diag, comm.into_iter().fold(0.0, f64::max)),
    }
}
