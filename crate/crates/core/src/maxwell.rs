//! Cochains on the cubical spacetime complex `sites x time samples`.
//!
//! Axes are ordered `(t, x, y)`. A k-cell is a set of k directions plus a
//! base vertex; it is oriented by its directions in increasing order. Time is
//! an open axis, spatial axes wrap where the lattice is periodic.

use std::io::Write;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::SpacetimeMetric;
use crate::lattice::{Lattice, LinkField, ScalarField};

#[derive(Debug, Clone)]
pub struct SpacetimeComplex {
    lattice: Lattice,
    /// Vertex grid sizes, time first.
    sizes: Vec<usize>,
    periodic: Vec<bool>,
    /// Edge lengths per axis, `dt` first.
    steps: Vec<f64>,
    /// Cells per degree as `(direction mask, base vertex)`.
    cells: Vec<Vec<(usize, usize)>>,
    lookup: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl SpacetimeComplex {
    pub fn new(lattice: &Lattice, time_samples: usize, dt: f64) -> Result<Self> {
        if time_samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "spacetime complex needs at least 2 time samples, got {time_samples}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let d = lattice.dim();
        let mut sizes = vec![time_samples];
        let mut periodic = vec![false];
        let mut steps = vec![dt];
        for k in 0..d {
            sizes.push(lattice.size(k));
            periodic.push(lattice.is_periodic(k));
            steps.push(lattice.spacing(k));
        }
        let n = d + 1;
        let nv: usize = sizes.iter().product();
        let mut cells = vec![Vec::new(); n + 1];
        let mut lookup = vec![NONE; (1 << n) * nv];
        for mask in 0..(1usize << n) {
            let k = mask.count_ones() as usize;
            for v in 0..nv {
                let c = coords_of(&sizes, v);
                let fits = (0..n).all(|a| mask >> a & 1 == 0 || periodic[a] || c[a] + 1 < sizes[a]);
                if fits {
                    lookup[mask * nv + v] = cells[k].len();
                    cells[k].push((mask, v));
                }
            }
        }
        Ok(Self { lattice: lattice.clone(), sizes, periodic, steps, cells, lookup })
    }

    /// Spacetime dimension `n = d + 1`.
    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn time_samples(&self) -> usize {
        self.sizes[0]
    }

    pub fn dt(&self) -> f64 {
        self.steps[0]
    }

    pub fn num_vertices(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn num_cells(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, Vec::len)
    }

    /// `(direction mask, base vertex)` of a k-cell.
    pub fn cell(&self, k: usize, id: usize) -> (usize, usize) {
        self.cells[k][id]
    }

    pub fn cell_id(&self, mask: usize, vertex: usize) -> Option<usize> {
        let id = self.lookup[mask * self.num_vertices() + vertex];
        (id != NONE).then_some(id)
    }

    /// Vertex index of `(time sample, site)`.
    pub fn vertex(&self, t: usize, site: usize) -> usize {
        t + self.sizes[0] * site
    }

    /// `(time sample, site)` of a vertex.
    pub fn split_vertex(&self, v: usize) -> (usize, usize) {
        (v % self.sizes[0], v / self.sizes[0])
    }

    /// Vertex one step along `axis`, or `None` past an open end.
    pub fn step(&self, v: usize, axis: usize) -> Option<usize> {
        let mut c = coords_of(&self.sizes, v);
        if c[axis] + 1 < self.sizes[axis] {
            c[axis] += 1;
        } else if self.periodic[axis] {
            c[axis] = 0;
        } else {
            return None;
        }
        Some(index_of(&self.sizes, &c))
    }

    fn vertices_of(&self, mask: usize, base: usize) -> Vec<usize> {
        let axes: Vec<usize> = (0..self.dim()).filter(|a| mask >> a & 1 == 1).collect();
        let mut out = vec![base];
        for a in axes {
            let shifted: Vec<usize> = out.iter().map(|&v| self.step(v, a).expect("cell fits")).collect();
            out.extend(shifted);
        }
        out
    }

    /// Faces of a k-cell with their incidence signs `(-1)^r` and `-(-1)^r`.
    fn faces(&self, mask: usize, base: usize) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let mut r = 0;
        for a in 0..self.dim() {
            if mask >> a & 1 == 0 {
                continue;
            }
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            let face = mask & !(1 << a);
            let far = self.step(base, a).expect("cell fits");
            out.push((face, far, sign));
            out.push((face, base, -sign));
            r += 1;
        }
        out
    }

    /// Content hash of the complex (sizes, periodicity, spacings).
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for ((n, p), s) in self.sizes.iter().zip(&self.periodic).zip(&self.steps) {
            h.update((*n as u64).to_le_bytes());
            h.update([*p as u8]);
            h.update(s.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn coords_of(sizes: &[usize], mut v: usize) -> Vec<usize> {
    sizes
        .iter()
        .map(|n| {
            let c = v % n;
            v /= n;
            c
        })
        .collect()
}

fn index_of(sizes: &[usize], c: &[usize]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (x, n) in c.iter().zip(sizes) {
        idx += x * stride;
        stride *= n;
    }
    idx
}

/// Real values on the k-cells of the complex.
///
/// A dual cochain is indexed by primal cells too: its value on primal
/// k-cell `c` lives on the dual (n-k)-cell of `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub dual: bool,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn zeros(complex: &SpacetimeComplex, degree: usize) -> Self {
        Self { degree, dual: false, values: vec![0.0; complex.num_cells(degree)] }
    }

    pub fn from_fn(complex: &SpacetimeComplex, degree: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let values = (0..complex.num_cells(degree))
            .map(|id| {
                let (mask, v) = complex.cell(degree, id);
                f(mask, v)
            })
            .collect();
        Self { degree, dual: false, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain> {
        if self.degree != other.degree || self.dual != other.dual || self.len() != other.len() {
            return Err(Error::LengthMismatch { what: "cochain", expected: self.len(), found: other.len() });
        }
        Ok(Cochain {
            degree: self.degree,
            dual: self.dual,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Cochain) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// CSV `cell_id,value` with a comment header identifying the complex.
    pub fn write_csv<W: Write>(&self, complex: &SpacetimeComplex, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# complex {} dim {} degree {} {} axes (t,x,y) orientation increasing-index",
            complex.hash(),
            complex.dim(),
            self.degree,
            if self.dual { "dual" } else { "primal" }
        )?;
        writeln!(w, "cell_id,value")?;
        for (id, v) in self.values.iter().enumerate() {
            writeln!(w, "{id},{v:.16e}")?;
        }
        Ok(())
    }
}

/// `A + φ dt`: spatial edges carry the link phase `A·h`, time edges `φ·dt`
/// at their source vertex.
pub fn assemble_potential(complex: &SpacetimeComplex, a: &[LinkField], phi: &[ScalarField]) -> Result<Cochain> {
    let nt = complex.time_samples();
    let lattice = complex.lattice();
    for (what, len) in [("connection series", a.len()), ("potential series", phi.len())] {
        if len != nt {
            return Err(Error::LengthMismatch { what, expected: nt, found: len });
        }
    }
    for t in 0..nt {
        if a[t].values.len() != lattice.num_links() {
            return Err(Error::LengthMismatch {
                what: "connection",
                expected: lattice.num_links(),
                found: a[t].values.len(),
            });
        }
        if phi[t].len() != lattice.num_sites() {
            return Err(Error::LengthMismatch {
                what: "potential",
                expected: lattice.num_sites(),
                found: phi[t].len(),
            });
        }
    }
    let dt = complex.dt();
    let mut out = Cochain::zeros(complex, 1);
    for (id, &(mask, v)) in complex.cells[1].iter().enumerate() {
        let axis = mask.trailing_zeros() as usize;
        let (t, site) = complex.split_vertex(v);
        out.values[id] = if axis == 0 {
            phi[t].values[site] * dt
        } else {
            let (_, to) = complex.split_vertex(complex.step(v, axis).expect("edge fits"));
            let link = lattice.find_link(site, to).expect("axis edge is a lattice link");
            a[t].values[link] * lattice.link(link).length
        };
    }
    Ok(out)
}

/// Vertex cochain from a scalar per `(time sample, site)`.
pub fn vertex_cochain(complex: &SpacetimeComplex, f: impl Fn(usize, usize) -> f64) -> Cochain {
    Cochain::from_fn(complex, 0, |_, v| {
        let (t, s) = complex.split_vertex(v);
        f(t, s)
    })
}

/// Coboundary. Primal cochains go up one degree; dual cochains (indexed by
/// primal k-cells) go to primal (k-1)-cells by the signed transpose.
pub fn d_cochain(complex: &SpacetimeComplex, omega: &Cochain) -> Result<Cochain> {
    let k = omega.degree;
    if omega.len() != complex.num_cells(k) {
        return Err(Error::LengthMismatch { what: "cochain", expected: complex.num_cells(k), found: omega.len() });
    }
    if !omega.dual {
        if k > 2 {
            return Err(Error::UnsupportedDegree(k));
        }
        let mut out = Cochain::zeros(complex, k + 1);
        for (id, &(mask, v)) in complex.cells.get(k + 1).into_iter().flatten().enumerate() {
            let mut acc = 0.0;
            for (face, base, sign) in complex.faces(mask, v) {
                acc += sign * omega.values[complex.cell_id(face, base).expect("face exists")];
            }
            out.values[id] = acc;
        }
        Ok(out)
    } else {
        if k == 0 || k > complex.dim() {
            return Err(Error::UnsupportedDegree(k));
        }
        let mut out = Cochain { degree: k - 1, dual: true, values: vec![0.0; complex.num_cells(k - 1)] };
        for (id, &(mask, v)) in complex.cells[k].iter().enumerate() {
            let mut r = 0;
            for a in 0..complex.dim() {
                if mask >> a & 1 == 0 {
                    continue;
                }
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                let extra = if a % 2 == 0 { -1.0 } else { 1.0 };
                let face = mask & !(1 << a);
                let far = complex.step(v, a).expect("cell fits");
                out.values[complex.cell_id(face, far).expect("face exists")] += extra * sign * omega.values[id];
                out.values[complex.cell_id(face, v).expect("face exists")] -= extra * sign * omega.values[id];
                r += 1;
            }
        }
        Ok(out)
    }
}

/// `ε(S, S^c) · Π_{a∈S} sign(g^aa)` for a direction mask in `n` dimensions.
pub fn hodge_sign(n: usize, mask: usize, time_sign: f64) -> f64 {
    let mut inversions = 0;
    for a in 0..n {
        if mask >> a & 1 == 1 {
            inversions += (0..a).filter(|b| mask >> b & 1 == 0).count();
        }
    }
    let mut s = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    if mask & 1 == 1 && time_sign < 0.0 {
        s = -s;
    }
    s
}

fn vertex_diag(complex: &SpacetimeComplex, metric: &SpacetimeMetric, v: usize) -> Result<Vec<f64>> {
    let (t, site) = complex.split_vertex(v);
    let sample = if metric.num_samples() == 1 { 0 } else { t };
    let g = metric.slice(sample).site_lower(site);
    let d = g.nrows();
    let scale = (0..d).fold(0.0f64, |m, a| m.max(g[(a, a)].abs()));
    for i in 0..d {
        for j in 0..d {
            if i != j && g[(i, j)].abs() > 1e-12 * scale {
                return Err(Error::NonDiagonalMetric { site, value: g[(i, j)] });
            }
        }
    }
    Ok((0..d).map(|a| g[(a, a)]).collect())
}

fn check_metric(complex: &SpacetimeComplex, metric: &SpacetimeMetric) -> Result<()> {
    if metric.spatial_dim() + 1 != complex.dim() {
        return Err(Error::DimensionMismatch { expected: complex.dim() - 1, found: metric.spatial_dim() });
    }
    if metric.num_samples() != 1 && metric.num_samples() != complex.time_samples() {
        return Err(Error::LengthMismatch {
            what: "metric samples",
            expected: complex.time_samples(),
            found: metric.num_samples(),
        });
    }
    if metric.slice(0).num_sites() != complex.lattice().num_sites() {
        return Err(Error::LengthMismatch {
            what: "metric sites",
            expected: complex.lattice().num_sites(),
            found: metric.slice(0).num_sites(),
        });
    }
    Ok(())
}

/// Diagonal Hodge weight of primal cell `(mask, base)`; `dual` gives the
/// weight of the star acting on its dual cell. Metric entries are averaged
/// over the vertices of the primal cell.
fn hodge_weight(
    complex: &SpacetimeComplex,
    metric: &SpacetimeMetric,
    mask: usize,
    base: usize,
    dual: bool,
) -> Result<f64> {
    let n = complex.dim();
    let verts = complex.vertices_of(mask, base);
    let mut diag = vec![0.0; n - 1];
    for &v in &verts {
        for (acc, g) in diag.iter_mut().zip(vertex_diag(complex, metric, v)?) {
            *acc += g;
        }
    }
    for g in &mut diag {
        *g /= verts.len() as f64;
    }
    let ts = metric.time_sign();
    let sqrt_det = (ts.abs() * diag.iter().product::<f64>()).sqrt();
    // Inverse metric magnitudes and edge lengths per axis, time first.
    let ginv: Vec<f64> = std::iter::once(1.0 / ts.abs()).chain(diag.iter().map(|g| 1.0 / g)).collect();
    let star = if dual { (!mask) & ((1 << n) - 1) } else { mask };
    let mut w = hodge_sign(n, star, ts) * sqrt_det;
    for a in 0..n {
        if star >> a & 1 == 1 {
            w *= ginv[a] / complex.steps[a];
        } else {
            w *= complex.steps[a];
        }
    }
    Ok(w)
}

/// Diagonal Hodge star. A primal k-cochain maps to a dual cochain on the same
/// cells and vice versa; `∗∗ = (-1)^{k(n-k)} sign(det g)`.
pub fn hodge(complex: &SpacetimeComplex, omega: &Cochain, metric: &SpacetimeMetric) -> Result<Cochain> {
    check_metric(complex, metric)?;
    let k = omega.degree;
    if omega.len() != complex.num_cells(k) {
        return Err(Error::LengthMismatch { what: "cochain", expected: complex.num_cells(k), found: omega.len() });
    }
    let values = complex.cells[k]
        .iter()
        .zip(&omega.values)
        .map(|(&(mask, v), x)| Ok(hodge_weight(complex, metric, mask, v, omega.dual)? * x))
        .collect::<Result<Vec<_>>>()?;
    Ok(Cochain { degree: k, dual: !omega.dual, values })
}

/// Field strength `F = d𝐀`.
pub fn field_strength(complex: &SpacetimeComplex, potential: &Cochain) -> Result<Cochain> {
    d_cochain(complex, potential)
}

/// Sources of a field strength: `j = ∗ d ∗ F`.
pub fn source_current(complex: &SpacetimeComplex, f: &Cochain, metric: &SpacetimeMetric) -> Result<Cochain> {
    if f.degree != 2 || f.dual {
        return Err(Error::UnsupportedDegree(f.degree));
    }
    let star_f = hodge(complex, f, metric)?;
    let d_star_f = d_cochain(complex, &star_f)?;
    hodge(complex, &d_star_f, metric)
}

/// `j = ∗ d ∗ d𝐀`.
pub fn current(complex: &SpacetimeComplex, potential: &Cochain, metric: &SpacetimeMetric) -> Result<Cochain> {
    source_current(complex, &field_strength(complex, potential)?, metric)
}

/// `max |d ∗ j|`, the discrete continuity defect.
pub fn continuity_defect(complex: &SpacetimeComplex, j: &Cochain, metric: &SpacetimeMetric) -> Result<f64> {
    Ok(d_cochain(complex, &hodge(complex, j, metric)?)?.max_abs())
}
