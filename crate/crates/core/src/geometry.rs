//! Christoffel symbols, geodesics, the Lorentzian lift `diag(-1, g_t)` and
//! the zeroth-component residual of time-dependent metrics.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operators::MetricField;

/// A lower-index metric `g_ij(q)` on a chart.
pub trait Metric {
    fn dim(&self) -> usize;

    /// Lower-index metric at `q`; `OutOfChart` when `q` leaves the domain.
    fn lower(&self, q: &[f64]) -> Result<DMatrix<f64>>;

    /// Brings `q` back into the fundamental domain of periodic axes.
    fn wrap(&self, _q: &mut [f64]) {}
}

/// Closed-form metric, optionally restricted to a box.
pub struct AnalyticMetric<F> {
    dim: usize,
    f: F,
    bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl<F: Fn(&[f64]) -> DMatrix<f64>> AnalyticMetric<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, bounds: None }
    }

    pub fn with_bounds(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.bounds = Some((lo, hi));
        self
    }
}

impl<F: Fn(&[f64]) -> DMatrix<f64>> Metric for AnalyticMetric<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn lower(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: q.len() });
        }
        if let Some((lo, hi)) = &self.bounds {
            if q.iter().zip(lo.iter().zip(hi)).any(|(x, (a, b))| !(x >= a && x <= b)) {
                return Err(Error::OutOfChart(q.to_vec()));
            }
        }
        Ok((self.f)(q))
    }
}

/// Multilinear interpolation of the lower-index metric over lattice cells.
///
/// Sites are inverted one by one and the lower matrices interpolated, so the
/// interpolant reproduces `g_ij` exactly at every node.
#[derive(Debug, Clone)]
pub struct MetricInterpolant {
    sizes: Vec<usize>,
    spacings: Vec<f64>,
    periodic: Vec<bool>,
    lower: Vec<DMatrix<f64>>,
}

impl MetricInterpolant {
    /// From the inverse metric `g^ij` as produced by reconstruction.
    pub fn new(lattice: &Lattice, g: &MetricField) -> Result<Self> {
        if g.num_sites() != lattice.num_sites() {
            return Err(Error::LengthMismatch {
                what: "metric field",
                expected: lattice.num_sites(),
                found: g.num_sites(),
            });
        }
        g.check_positive_definite()?;
        let lower = (0..g.num_sites())
            .map(|s| {
                let inv = g.matrix(s).try_inverse().ok_or(Error::NotPositiveDefinite {
                    site: s,
                    min_eigenvalue: 0.0,
                })?;
                Ok(symmetrize(&inv))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_lower(lattice, lower))
    }

    /// From per-site lower-index matrices.
    pub fn from_lower(lattice: &Lattice, lower: Vec<DMatrix<f64>>) -> Self {
        let d = lattice.dim();
        Self {
            sizes: (0..d).map(|k| lattice.size(k)).collect(),
            spacings: (0..d).map(|k| lattice.spacing(k)).collect(),
            periodic: (0..d).map(|k| lattice.is_periodic(k)).collect(),
            lower,
        }
    }

    pub fn site_lower(&self, site: usize) -> &DMatrix<f64> {
        &self.lower[site]
    }

    pub fn num_sites(&self) -> usize {
        self.lower.len()
    }

    /// Copy with every lower matrix multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|m| m * s).collect(),
            ..self.clone()
        }
    }

    /// Differencing step for Christoffel symbols: a quarter of the smallest spacing.
    pub fn default_eta(&self) -> f64 {
        self.spacings.iter().copied().fold(f64::INFINITY, f64::min) / 4.0
    }

    fn site(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (c, n) in coords.iter().zip(&self.sizes) {
            idx += c * stride;
            stride *= n;
        }
        idx
    }
}

impl Metric for MetricInterpolant {
    fn dim(&self) -> usize {
        self.sizes.len()
    }

    fn lower(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if q.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: q.len() });
        }
        // Per axis: lower corner, upper corner, fractional offset.
        let mut cell = Vec::with_capacity(d);
        for k in 0..d {
            let n = self.sizes[k];
            let h = self.spacings[k];
            let x = q[k] / h;
            if !x.is_finite() {
                return Err(Error::OutOfChart(q.to_vec()));
            }
            if self.periodic[k] {
                let x = x.rem_euclid(n as f64);
                let i0 = (x.floor() as usize).min(n - 1);
                cell.push((i0, (i0 + 1) % n, x - i0 as f64));
            } else {
                let top = (n - 1) as f64;
                if x < 0.0 || x > top {
                    return Err(Error::OutOfChart(q.to_vec()));
                }
                let i0 = (x.floor() as usize).min(n - 2);
                cell.push((i0, i0 + 1, x - i0 as f64));
            }
        }
        let mut out = DMatrix::zeros(d, d);
        let mut coords = vec![0; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for (k, &(i0, i1, t)) in cell.iter().enumerate() {
                if corner >> k & 1 == 1 {
                    coords[k] = i1;
                    w *= t;
                } else {
                    coords[k] = i0;
                    w *= 1.0 - t;
                }
            }
            if w != 0.0 {
                out += &self.lower[self.site(&coords)] * w;
            }
        }
        Ok(out)
    }

    fn wrap(&self, q: &mut [f64]) {
        for k in 0..self.dim() {
            if self.periodic[k] {
                q[k] = q[k].rem_euclid(self.sizes[k] as f64 * self.spacings[k]);
            }
        }
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `Γ^k_ij`, stored as `data[(k * d + i) * d + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `-Γ^k_ij v^i v^j`.
    pub fn acceleration(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += self.get(k, i, j) * v[i] * v[j];
                    }
                }
                -s
            })
            .collect()
    }
}

/// Christoffel symbols by central differences of step `eta`.
pub fn christoffel<M: Metric + ?Sized>(metric: &M, q: &[f64], eta: f64) -> Result<Christoffel> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("differencing step must be positive, got {eta}")));
    }
    let d = metric.dim();
    let g = metric.lower(q)?;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument(format!("singular metric at {q:?}")))?;
    let mut dg = Vec::with_capacity(d);
    let mut p = q.to_vec();
    for l in 0..d {
        p[l] = q[l] + eta;
        let plus = metric.lower(&p)?;
        p[l] = q[l] - eta;
        let minus = metric.lower(&p)?;
        p[l] = q[l];
        dg.push(symmetrize(&((plus - minus) / (2.0 * eta))));
    }
    let mut data = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for l in 0..d {
                    s += ginv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                }
                data[(k * d + i) * d + j] = 0.5 * s;
            }
        }
    }
    Ok(Christoffel { dim: d, data })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

impl GeodesicState {
    pub fn new(q: Vec<f64>, v: Vec<f64>) -> Self {
        Self { q, v }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GeodesicState>,
    /// `g(v, v)` at every sample.
    pub speed2: Vec<f64>,
    /// Set when an open chart boundary stopped the integration early.
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectory has its initial state")
    }

    /// `max_t |g(v,v)(t) - g(v,v)(0)|`.
    pub fn speed2_drift(&self) -> f64 {
        let s0 = self.speed2[0];
        self.speed2.iter().fold(0.0, |m, s| m.max((s - s0).abs()))
    }

    /// Largest coordinate distance to another trajectory sampled at common times.
    pub fn max_deviation_at(&self, other: &Trajectory, stride_self: usize, stride_other: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let mut a = 0;
        let mut b = 0;
        while a < self.len() && b < other.len() {
            let d = self.states[a]
                .q
                .iter()
                .zip(&other.states[b].q)
                .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()));
            worst = worst.max(d);
            a += stride_self;
            b += stride_other;
        }
        worst
    }

    /// CSV columns `t, q_1..q_d, v_1..v_d, speed2, residual0`; non-finite
    /// residuals are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W, residual: Option<&[f64]>) -> Result<()> {
        let d = self.states.first().map_or(0, |s| s.q.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|k| format!("q_{k}")));
        header.extend((1..=d).map(|k| format!("v_{k}")));
        header.push("speed2".into());
        header.push("residual0".into());
        writeln!(w, "{}", header.join(","))?;
        for (n, s) in self.states.iter().enumerate() {
            let mut row = vec![format!("{:.12e}", self.times[n])];
            row.extend(s.q.iter().chain(&s.v).map(|x| format!("{x:.12e}")));
            row.push(format!("{:.12e}", self.speed2[n]));
            let r = residual.map_or(0.0, |r| r[n]);
            row.push(if r.is_finite() { format!("{r:.12e}") } else { String::new() });
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn speed2<M: Metric + ?Sized>(metric: &M, s: &GeodesicState) -> Result<f64> {
    let g = metric.lower(&s.q)?;
    let d = s.v.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += g[(i, j)] * s.v[i] * s.v[j];
        }
    }
    Ok(acc)
}

fn rhs<M: Metric + ?Sized>(metric: &M, q: &[f64], v: &[f64], eta: f64) -> Result<Vec<f64>> {
    Ok(christoffel(metric, q, eta)?.acceleration(v))
}

fn offset(x: &[f64], k: &[f64], s: f64) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + s * b).collect()
}

/// Classic RK4 for `q'' + Γ(q)(q', q') = 0` up to time `t_total`.
pub fn geodesic_integrate<M: Metric + ?Sized>(
    metric: &M,
    state0: &GeodesicState,
    dt: f64,
    t_total: f64,
    eta: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_total >= dt) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and T >= dt, got dt = {dt}, T = {t_total}"
        )));
    }
    let d = metric.dim();
    if state0.q.len() != d || state0.v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: state0.q.len().max(state0.v.len()) });
    }
    let mut state = state0.clone();
    metric.wrap(&mut state.q);
    let steps = (t_total / dt).round() as usize;
    let mut traj = Trajectory {
        times: vec![0.0],
        speed2: vec![speed2(metric, &state)?],
        states: vec![state.clone()],
        truncated: false,
    };
    for n in 1..=steps {
        match rk4_step(metric, &state, dt, eta) {
            Ok(mut next) => {
                metric.wrap(&mut next.q);
                let s2 = match speed2(metric, &next) {
                    Ok(s) => s,
                    Err(Error::OutOfChart(_)) => {
                        traj.truncated = true;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                traj.times.push(n as f64 * dt);
                traj.speed2.push(s2);
                traj.states.push(next.clone());
                state = next;
            }
            Err(Error::OutOfChart(_)) => {
                traj.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

fn rk4_step<M: Metric + ?Sized>(metric: &M, s: &GeodesicState, dt: f64, eta: f64) -> Result<GeodesicState> {
    let (q, v) = (&s.q, &s.v);
    let a1 = rhs(metric, q, v, eta)?;
    let q2 = offset(q, v, dt / 2.0);
    let v2 = offset(v, &a1, dt / 2.0);
    let a2 = rhs(metric, &q2, &v2, eta)?;
    let q3 = offset(q, &v2, dt / 2.0);
    let v3 = offset(v, &a2, dt / 2.0);
    let a3 = rhs(metric, &q3, &v3, eta)?;
    let q4 = offset(q, &v3, dt);
    let v4 = offset(v, &a3, dt);
    let a4 = rhs(metric, &q4, &v4, eta)?;
    let d = q.len();
    let mut out = GeodesicState::new(vec![0.0; d], vec![0.0; d]);
    for k in 0..d {
        out.q[k] = q[k] + dt / 6.0 * (v[k] + 2.0 * v2[k] + 2.0 * v3[k] + v4[k]);
        out.v[k] = v[k] + dt / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
    }
    Ok(out)
}

/// Time-sampled spatial metrics lifted to `diag(time_sign, g_t)` on `Q x R`.
///
/// Between samples the lower spatial metric is linear in `t`.
#[derive(Debug, Clone)]
pub struct SpacetimeMetric {
    times: Vec<f64>,
    slices: Vec<MetricInterpolant>,
    time_sign: f64,
}

/// Lifts a series of reconstructed inverse metrics.
pub fn lorentzian_lift(lattice: &Lattice, times: &[f64], samples: &[MetricField]) -> Result<SpacetimeMetric> {
    let slices = samples
        .iter()
        .map(|g| MetricInterpolant::new(lattice, g))
        .collect::<Result<Vec<_>>>()?;
    SpacetimeMetric::from_slices(times.to_vec(), slices)
}

impl SpacetimeMetric {
    pub fn from_slices(times: Vec<f64>, slices: Vec<MetricInterpolant>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InsufficientTimeSamples(0));
        }
        if times.len() != slices.len() {
            return Err(Error::LengthMismatch {
                what: "time samples",
                expected: slices.len(),
                found: times.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample times must increase strictly".into()));
        }
        Ok(Self { times, slices, time_sign: -1.0 })
    }

    /// Static lift of a single metric.
    pub fn stationary(slice: MetricInterpolant) -> Self {
        Self { times: vec![0.0], slices: vec![slice], time_sign: -1.0 }
    }

    /// Replaces the lapse entry `g_00` (default `-1`).
    pub fn with_time_sign(mut self, sign: f64) -> Self {
        self.time_sign = sign;
        self
    }

    pub fn time_sign(&self) -> f64 {
        self.time_sign
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn num_samples(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, sample: usize) -> &MetricInterpolant {
        &self.slices[sample]
    }

    pub fn spatial_dim(&self) -> usize {
        self.slices[0].dim()
    }

    /// Block matrix `diag(time_sign, g_t)` at a site and time sample.
    pub fn lifted(&self, sample: usize, site: usize) -> DMatrix<f64> {
        let g = self.slices[sample].site_lower(site);
        let d = g.nrows();
        let mut out = DMatrix::zeros(d + 1, d + 1);
        out[(0, 0)] = self.time_sign;
        out.view_mut((1, 1), (d, d)).copy_from(g);
        out
    }

    fn bracket(&self, t: f64) -> Result<(usize, f64)> {
        let n = self.times.len();
        if n == 1 {
            return Ok((0, 0.0));
        }
        if t < self.times[0] || t > self.times[n - 1] {
            return Err(Error::OutOfChart(vec![t]));
        }
        let s = self.times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        Ok((s, (t - self.times[s]) / (self.times[s + 1] - self.times[s])))
    }

    /// Lower spatial metric at time `t` and point `q`.
    pub fn spatial_lower(&self, t: f64, q: &[f64]) -> Result<DMatrix<f64>> {
        let (s, w) = self.bracket(t)?;
        let g0 = self.slices[s].lower(q)?;
        if w == 0.0 {
            return Ok(g0);
        }
        Ok(g0 * (1.0 - w) + self.slices[s + 1].lower(q)? * w)
    }

    /// `∂_t g_ij` from three-point differences at the samples, linear in between.
    pub fn time_derivative(&self, t: f64, q: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.times.len();
        if n == 1 {
            let d = self.spatial_dim();
            return Ok(DMatrix::zeros(d, d));
        }
        if n < 3 {
            return Err(Error::InsufficientTimeSamples(n));
        }
        let (s, w) = self.bracket(t)?;
        let d0 = self.node_derivative(s, q)?;
        if w == 0.0 {
            return Ok(d0);
        }
        Ok(d0 * (1.0 - w) + self.node_derivative(s + 1, q)? * w)
    }

    fn node_derivative(&self, s: usize, q: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.times.len();
        let base = s.clamp(1, n - 2) - 1;
        let ts = &self.times[base..base + 3];
        let t = self.times[s];
        let mut out = DMatrix::zeros(self.spatial_dim(), self.spatial_dim());
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let w = ((t - ts[b]) + (t - ts[c])) / ((ts[a] - ts[b]) * (ts[a] - ts[c]));
            out += self.slices[base + a].lower(q)? * w;
        }
        Ok(out)
    }
}

impl Metric for SpacetimeMetric {
    fn dim(&self) -> usize {
        self.spatial_dim() + 1
    }

    /// Coordinates `(t, q_1, ..., q_d)`.
    fn lower(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.spatial_dim();
        if q.len() != d + 1 {
            return Err(Error::DimensionMismatch { expected: d + 1, found: q.len() });
        }
        let g = self.spatial_lower(q[0], &q[1..])?;
        let mut out = DMatrix::zeros(d + 1, d + 1);
        out[(0, 0)] = self.time_sign;
        out.view_mut((1, 1), (d, d)).copy_from(&g);
        Ok(out)
    }

    fn wrap(&self, q: &mut [f64]) {
        self.slices[0].wrap(&mut q[1..]);
    }
}

/// `r(t) = ½ ∂_t g_ij(q(t)) v^i v^j` along a trajectory parametrized by `t`.
pub fn zeroth_residual(metric: &SpacetimeMetric, traj: &Trajectory) -> Result<Vec<f64>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let dg = metric.time_derivative(t, &s.q)?;
            let d = s.v.len();
            let mut r = 0.0;
            for i in 0..d {
                for j in 0..d {
                    r += dg[(i, j)] * s.v[i] * s.v[j];
                }
            }
            Ok(0.5 * r)
        })
        .collect()
}
