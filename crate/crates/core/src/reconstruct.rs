//! Recovery of `(g, A, φ)` from a Hamiltonian.
//!
//! Conventions: velocities are `ȧ = i[H, a]`, so for a positive definite
//! metric the double commutator `[a, [H, b]]` has positive row sums equal to
//! `g(da, db) / m`. On a lattice that double commutator is a pure hopping
//! matrix; the metric is read off from its covariant row sums, and the
//! statement that it "is a multiplication operator" is certified on smooth
//! vectors by [`cure_residual`].

use num_complex::Complex64;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::lattice::{Lattice, LinkField, LinkKind, ScalarField};
use crate::linalg::wrap_angle;
use crate::operators::{
    build_hamiltonian, connection_phases, mult_op, phases_to_connection, position_commutator,
    validate_operator, Mass, MetricField, Position, SparseOperator,
};
use crate::{Error, Result};

/// `ȧ = i[H, mult(a)]`.
pub fn velocity(h: &SparseOperator, a: &ScalarField) -> Result<SparseOperator> {
    let ma = mult_op(a);
    let c = h.mul(&ma)?.sub(&ma.mul(h)?)?;
    Ok(c.scale(Complex64::i()).with_range(h.range()))
}

/// Velocity of a position function, entrywise `i H_ij (a_j - a_i)`.
pub fn velocity_of(lattice: &Lattice, h: &SparseOperator, a: Position<'_>) -> SparseOperator {
    position_commutator(lattice, a, h).scale(-Complex64::i())
}

/// Split of a Hamiltonian into link couplings, link phases and its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PeierlsDecomposition {
    /// Signed coupling `c_l` per directed link (equal on both orientations).
    pub couplings: Vec<f64>,
    /// Peierls phases in `(-pi/2, pi/2)`; zero on links with zero coupling.
    pub phases: LinkField,
    pub diagonal: ScalarField,
}

impl PeierlsDecomposition {
    pub fn reassemble(&self, lattice: &Lattice) -> SparseOperator {
        let mut op = SparseOperator::diagonal(&self.diagonal.values);
        for (id, l) in lattice.links().iter().enumerate() {
            if self.couplings[id] != 0.0 {
                op.set(
                    l.from,
                    l.to,
                    -self.couplings[id] * Complex64::from_polar(1.0, -self.phases.values[id]),
                );
            }
        }
        op.with_range(1)
    }
}

fn split_entry(v: Complex64) -> (f64, f64) {
    let c = -v.re.signum() * v.norm();
    let theta = -(-v / c).arg();
    (c, theta)
}

/// Decomposes `H_ij = -c_l exp(-i theta_l)` over the lattice links.
///
/// Every off-diagonal entry has to sit on a lattice link within `max_range`.
pub fn peierls_decompose(
    lattice: &Lattice,
    h: &SparseOperator,
    max_range: usize,
) -> Result<PeierlsDecomposition> {
    if h.dim() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            found: h.dim(),
        });
    }
    let mut couplings = vec![0.0; lattice.num_links()];
    let mut phases = vec![0.0; lattice.num_links()];
    let mut diagonal = vec![0.0; lattice.num_sites()];
    for (i, j, v) in h.entries() {
        if i == j {
            diagonal[i] = v.re;
            continue;
        }
        let distance = lattice.graph_distance(i, j);
        let link = match lattice.find_link(i, j) {
            Some(id) if distance <= max_range => id,
            _ => {
                return Err(Error::LocalityViolation {
                    row: i,
                    col: j,
                    distance,
                    max_range,
                })
            }
        };
        if v.re == 0.0 {
            return Err(Error::PhaseAmbiguity { row: i, col: j });
        }
        let (c, theta) = split_entry(v);
        couplings[link] = c;
        phases[link] = theta;
    }
    Ok(PeierlsDecomposition {
        couplings,
        phases: LinkField { values: phases },
        diagonal: ScalarField::new(diagonal),
    })
}

/// Couplings on lattice links only, ignoring anything beyond the stencil.
fn stencil_couplings(lattice: &Lattice, h: &SparseOperator) -> Vec<f64> {
    lattice
        .links()
        .iter()
        .map(|l| {
            let v = h.get(l.from, l.to);
            if v.norm() == 0.0 {
                0.0
            } else {
                -v.re.signum() * v.norm()
            }
        })
        .collect()
}

fn row_sum_metric(lattice: &Lattice, couplings: &[f64], m: Mass) -> MetricField {
    let d = lattice.dim();
    let mut g = MetricField::constant(lattice, &vec![0.0; d * d]);
    for (id, l) in lattice.links().iter().enumerate() {
        let c = couplings[id];
        if c == 0.0 {
            continue;
        }
        for k in 0..d {
            for q in k..d {
                let v = g.get(l.from, k, q) + m.value() * c * l.displacement[k] * l.displacement[q];
                g.set(l.from, k, q, v);
            }
        }
    }
    for s in 0..lattice.num_sites() {
        for k in 0..d {
            for q in 0..k {
                g.set(s, k, q, g.get(s, q, k));
            }
        }
    }
    g
}

/// Inverse metric from the covariant row sums of `m [x_k, [H, x_l]]`.
pub fn metric_from_decomposition(
    lattice: &Lattice,
    dec: &PeierlsDecomposition,
    m: Mass,
) -> MetricField {
    row_sum_metric(lattice, &dec.couplings, m)
}

pub fn reconstruct_metric(lattice: &Lattice, h: &SparseOperator, m: Mass) -> Result<MetricField> {
    let dec = peierls_decompose(lattice, h, 1)?;
    Ok(metric_from_decomposition(lattice, &dec, m))
}

/// Connection as tangential components per unit length (`theta_l / |l|`).
pub fn reconstruct_connection(lattice: &Lattice, dec: &PeierlsDecomposition) -> LinkField {
    phases_to_connection(lattice, &dec.phases)
}

/// Gauge function that zeroes the phases on the breadth-first spanning tree.
pub fn tree_gauge_function(lattice: &Lattice, theta: &LinkField) -> ScalarField {
    let (order, parent) = lattice.spanning_tree();
    let mut chi = vec![0.0; lattice.num_sites()];
    for site in order {
        if let Some(link) = parent[site] {
            let l = lattice.link(link);
            chi[site] = chi[l.from] - theta.values[link];
        }
    }
    ScalarField::new(chi)
}

/// Phases in tree gauge, reduced to `(-pi, pi]`. Holonomy ends up on
/// co-tree links.
pub fn tree_gauge_phases(lattice: &Lattice, theta: &LinkField) -> LinkField {
    let chi = tree_gauge_function(lattice, theta);
    let shifted = theta.add(&lattice.d0(&chi));
    LinkField {
        values: shifted.values.into_iter().map(wrap_angle).collect(),
    }
}

/// `φ = r - Σ_j c_ij`: the diagonal left after removing the kinetic part
/// reassembled from the decomposition.
pub fn reconstruct_potential(lattice: &Lattice, dec: &PeierlsDecomposition) -> ScalarField {
    let mut phi = dec.diagonal.values.clone();
    for (id, l) in lattice.links().iter().enumerate() {
        phi[l.from] -= dec.couplings[id];
    }
    ScalarField::new(phi)
}

/// `e^{iχ} H e^{-iχ}`.
pub fn gauge_transform(h: &SparseOperator, chi: &ScalarField) -> SparseOperator {
    let mut out = SparseOperator::zeros(h.dim());
    for (i, j, v) in h.entries() {
        out.set(i, j, v * Complex64::from_polar(1.0, chi.values[i] - chi.values[j]));
    }
    out.with_range(h.range())
}

/// Gauge-fixes `H` to tree gauge. Gauge-equivalent Hamiltonians map to the
/// same operator.
pub fn canonical_tree_gauge(lattice: &Lattice, h: &SparseOperator) -> Result<SparseOperator> {
    let dec = peierls_decompose(lattice, h, 1)?;
    Ok(gauge_transform(h, &tree_gauge_function(lattice, &dec.phases)))
}

/// Normalized Gaussian centred in the chart with width `extent / 6` per axis.
pub fn smooth_test_vector(lattice: &Lattice) -> Vec<Complex64> {
    let d = lattice.dim();
    let centre: Vec<f64> = (0..d).map(|k| lattice.extent(k) / 2.0).collect();
    let mut psi: Vec<f64> = (0..lattice.num_sites())
        .map(|s| {
            let x = lattice.position(s);
            let r2: f64 = (0..d)
                .map(|k| {
                    let sigma = lattice.extent(k) / 6.0;
                    ((x[k] - centre[k]) / sigma).powi(2)
                })
                .sum();
            (-0.5 * r2).exp()
        })
        .collect();
    let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|v| *v /= norm);
    psi.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

/// `‖[a, [H, b]] ψ - s ψ‖` where `s` is the covariant row sum of the double
/// commutator over the nearest-neighbour stencil, i.e. `g(da, db) / m`.
///
/// Small values (`O(h^2)` for smooth `ψ`) mean the double commutator acts as
/// the multiplication operator the metric predicts; couplings beyond the
/// stencil show up as a residual that does not shrink under refinement.
pub fn cure_residual(
    lattice: &Lattice,
    h: &SparseOperator,
    a: Position<'_>,
    b: Position<'_>,
    psi: &[Complex64],
) -> Result<f64> {
    if psi.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi.len(),
        });
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("test vector has norm {norm}, expected 1")));
    }
    let hb = position_commutator(lattice, b, h).scale(Complex64::new(-1.0, 0.0));
    let double = position_commutator(lattice, a, &hb);
    let couplings = stencil_couplings(lattice, h);
    let mut s = vec![0.0; h.dim()];
    for (id, l) in lattice.links().iter().enumerate() {
        s[l.from] += couplings[id]
            * a.difference(lattice, l.from, l.to)
            * b.difference(lattice, l.from, l.to);
    }
    let dpsi = double.apply(psi);
    Ok(dpsi
        .iter()
        .zip(psi)
        .zip(&s)
        .map(|((x, p), si)| (x - p * si).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CureResidual {
    pub pair: (usize, usize),
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    /// Smallest eigenvalue of the reconstructed `g^{kl}` per site.
    pub metric_min_eigenvalue: Vec<f64>,
    /// Every site has `min eigenvalue > tol`.
    pub positivity_ok: bool,
    /// No coordinate direction is unquantized.
    pub nondegeneracy_ok: bool,
    /// Axes `k` with `[x_k, ẋ_k] = 0` at every site.
    pub unquantized_axes: Vec<usize>,
    pub cure_residuals: Vec<CureResidual>,
    pub commutant_defect: (f64, f64),
    pub tolerance: f64,
}

impl AxiomReport {
    pub fn cure_max(&self) -> f64 {
        self.cure_residuals
            .iter()
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.metric_min_eigenvalue
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks positivity, nondegeneracy and the cure on coordinate pairs.
pub fn axiom_report(lattice: &Lattice, h: &SparseOperator, m: Mass, tol: f64) -> Result<AxiomReport> {
    if h.dim() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            found: h.dim(),
        });
    }
    let g = row_sum_metric(lattice, &stencil_couplings(lattice, h), m);
    let metric_min_eigenvalue = g.min_eigenvalues();
    let positivity_ok = metric_min_eigenvalue.iter().all(|&e| e > tol);
    let unquantized_axes: Vec<usize> = (0..lattice.dim())
        .filter(|&k| (0..lattice.num_sites()).all(|s| g.get(s, k, k).abs() <= tol))
        .collect();
    let psi = smooth_test_vector(lattice);
    let mut cure_residuals = Vec::new();
    for k in 0..lattice.dim() {
        for q in k..lattice.dim() {
            let residual = cure_residual(
                lattice,
                h,
                Position::Coordinate(k),
                Position::Coordinate(q),
                &psi,
            )?;
            cure_residuals.push(CureResidual {
                pair: (k, q),
                residual,
            });
        }
    }
    Ok(AxiomReport {
        metric_min_eigenvalue,
        positivity_ok,
        nondegeneracy_ok: unquantized_axes.is_empty(),
        unquantized_axes,
        cure_residuals,
        commutant_defect: validate_operator(lattice, h, tol).commutant_defect,
        tolerance: tol,
    })
}

/// The nearest-neighbour stencil average of `g` that the builder encodes and
/// the row-sum reconstruction returns, computed directly from the field.
pub fn stencil_metric(lattice: &Lattice, g: &MetricField) -> MetricField {
    let d = lattice.dim();
    let mut out = MetricField::constant(lattice, &vec![0.0; d * d]);
    for l in lattice.links() {
        let (i, j) = (l.from, l.to);
        let (axes, weight): (Vec<usize>, f64) = match l.kind {
            LinkKind::Axis(k) => {
                let h = lattice.spacing(k);
                (vec![k], (g.get(i, k, k) + g.get(j, k, k)) / (4.0 * h * h))
            }
            LinkKind::Diagonal(k, q) => {
                let sign = (l.offset[k] * l.offset[q]).signum() as f64;
                let w = sign * (g.get(i, k, q) + g.get(j, k, q))
                    / (8.0 * lattice.spacing(k) * lattice.spacing(q));
                (vec![k, q], w)
            }
        };
        for &a in &axes {
            for &b in &axes {
                let v = out.get(i, a, b) + weight * l.displacement[a] * l.displacement[b];
                out.set(i, a, b, v);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTripErrors {
    pub e_g: f64,
    #[serde(rename = "e_F")]
    pub e_f: f64,
    pub e_phi: f64,
}

/// Everything recovered from one Hamiltonian.
#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    pub decomposition: PeierlsDecomposition,
    pub g_rec: MetricField,
    pub a_rec: LinkField,
    pub a_rec_tree_gauge: LinkField,
    pub phi_rec: ScalarField,
    /// Present only when a reference `(g, A, φ)` was supplied.
    pub errors: Option<RoundTripErrors>,
    pub axioms: AxiomReport,
}

impl Serialize for ReconstructionReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Axioms {
            positivity: bool,
            nondegeneracy: bool,
            cure_max: f64,
            commutant: (f64, f64),
        }
        let d = self.g_rec.dim();
        let g_rec: Vec<&[f64]> = self.g_rec.as_slice().chunks(d * d).collect();
        let fields = if self.errors.is_some() { 5 } else { 4 };
        let mut s = serializer.serialize_struct("ReconstructionReport", fields)?;
        s.serialize_field("g_rec", &g_rec)?;
        s.serialize_field("A_rec_tree_gauge", &self.a_rec_tree_gauge.values)?;
        s.serialize_field("phi_rec", &self.phi_rec.values)?;
        if let Some(e) = &self.errors {
            s.serialize_field("errors", e)?;
        }
        s.serialize_field(
            "axioms",
            &Axioms {
                positivity: self.axioms.positivity_ok,
                nondegeneracy: self.axioms.nondegeneracy_ok,
                cure_max: self.axioms.cure_max(),
                commutant: self.axioms.commutant_defect,
            },
        )?;
        s.end()
    }
}

/// Reconstructs `(g, A, φ)` from `H` alone.
pub fn reconstruct(lattice: &Lattice, h: &SparseOperator, m: Mass, tol: f64) -> Result<ReconstructionReport> {
    let dec = peierls_decompose(lattice, h, 1)?;
    let g_rec = metric_from_decomposition(lattice, &dec, m);
    let a_rec = reconstruct_connection(lattice, &dec);
    let a_rec_tree_gauge = phases_to_connection(lattice, &tree_gauge_phases(lattice, &dec.phases));
    let phi_rec = reconstruct_potential(lattice, &dec);
    let axioms = axiom_report(lattice, h, m, tol)?;
    Ok(ReconstructionReport {
        decomposition: dec,
        g_rec,
        a_rec,
        a_rec_tree_gauge,
        phi_rec,
        errors: None,
        axioms,
    })
}

/// Max plaquette curvature difference, compared modulo `2 pi`.
pub fn curvature_difference(lattice: &Lattice, theta_a: &LinkField, theta_b: &LinkField) -> f64 {
    lattice
        .plaquette_sums(theta_a)
        .iter()
        .zip(lattice.plaquette_sums(theta_b))
        .map(|(a, b)| wrap_angle(a - b).abs())
        .fold(0.0, f64::max)
}

/// Builds `H` from `(g, A, φ)`, reconstructs it and reports the errors.
pub fn roundtrip_report(
    lattice: &Lattice,
    g: &MetricField,
    a: &LinkField,
    phi: &ScalarField,
    m: Mass,
) -> Result<ReconstructionReport> {
    let h = build_hamiltonian(lattice, g, a, phi, m)?;
    let mut report = reconstruct(lattice, &h, m, 1e-9)?;
    let e_g = report.g_rec.max_abs_diff(&stencil_metric(lattice, g));
    let e_f = curvature_difference(
        lattice,
        &report.decomposition.phases,
        &connection_phases(lattice, a),
    );
    let e_phi = report.phi_rec.max_abs_diff(phi);
    report.errors = Some(RoundTripErrors { e_g, e_f, e_phi });
    Ok(report)
}

/// Pointwise comparison of a reconstructed metric with the continuum field,
/// over sites with a complete stencil.
pub fn continuum_metric_error(lattice: &Lattice, g_rec: &MetricField, g_exact: &MetricField) -> f64 {
    let d = lattice.dim();
    let mut worst: f64 = 0.0;
    for s in (0..lattice.num_sites()).filter(|&s| lattice.is_interior(s)) {
        for k in 0..d {
            for q in 0..d {
                worst = worst.max((g_rec.get(s, k, q) - g_exact.get(s, k, q)).abs());
            }
        }
    }
    worst
}
