//! Discretized configuration spaces: sites, directed links, plaquettes and
//! the generating cycles of the fundamental group.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Product topologies supported by the lattice builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Interval,
    Ring,
    Rectangle,
    Cylinder,
    Torus,
    Box3,
}

impl Topology {
    pub fn dim(self) -> usize {
        match self {
            Topology::Interval | Topology::Ring => 1,
            Topology::Rectangle | Topology::Cylinder | Topology::Torus => 2,
            Topology::Box3 => 3,
        }
    }

    pub fn is_periodic(self, axis: usize) -> bool {
        matches!(
            (self, axis),
            (Topology::Ring, 0) | (Topology::Cylinder, 0) | (Topology::Torus, 0 | 1)
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::Interval => "interval",
            Topology::Ring => "ring",
            Topology::Rectangle => "rectangle",
            Topology::Cylinder => "cylinder",
            Topology::Torus => "torus",
            Topology::Box3 => "box3",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "interval" => Topology::Interval,
            "ring" => Topology::Ring,
            "rectangle" => Topology::Rectangle,
            "cylinder" => Topology::Cylinder,
            "torus" => Topology::Torus,
            "box3" => Topology::Box3,
            other => return Err(Error::InvalidLattice(format!("unknown topology `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub topology: Topology,
    /// Site count per axis.
    pub sizes: Vec<usize>,
    /// Lattice spacing per axis, in length units.
    pub spacings: Vec<f64>,
}

impl LatticeSpec {
    pub fn new(topology: Topology, sizes: &[usize], spacings: &[f64]) -> Self {
        LatticeSpec {
            topology,
            sizes: sizes.to_vec(),
            spacings: spacings.to_vec(),
        }
    }

    /// Same spacing on every axis.
    pub fn uniform(topology: Topology, sizes: &[usize], spacing: f64) -> Self {
        Self::new(topology, sizes, &vec![spacing; sizes.len()])
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.topology.dim();
        if self.sizes.len() != d || self.spacings.len() != d {
            return Err(Error::InvalidLattice(format!(
                "{} needs {d} sizes and spacings, got {} and {}",
                self.topology,
                self.sizes.len(),
                self.spacings.len()
            )));
        }
        if let Some((k, n)) = self.sizes.iter().enumerate().find(|(_, &n)| n < 3) {
            return Err(Error::InvalidLattice(format!(
                "axis {k} has {n} sites; at least 3 are required"
            )));
        }
        if let Some((k, h)) = self
            .spacings
            .iter()
            .enumerate()
            .find(|(_, &h)| !(h.is_finite() && h > 0.0))
        {
            return Err(Error::InvalidLattice(format!(
                "axis {k} has spacing {h}; spacings must be positive"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Nearest neighbour along one axis.
    Axis(usize),
    /// Diagonal inside the coordinate plane `(k, l)`, `k < l`.
    Diagonal(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
    /// Minimal-image index offset, one entry per axis.
    pub offset: Vec<i64>,
    /// Minimal-image displacement in length units.
    pub displacement: Vec<f64>,
    /// Euclidean chart length of the displacement.
    pub length: f64,
    pub reverse: usize,
    /// True for the positively oriented member of each pair.
    pub forward: bool,
}

/// Oriented elementary 2-cell spanned by two axes.
#[derive(Debug, Clone)]
pub struct Plaquette {
    pub axes: (usize, usize),
    pub base: usize,
    /// Directed links traversed counter-clockwise in the `(k, l)` plane.
    pub boundary: [usize; 4],
}

#[derive(Debug, Clone)]
pub struct Lattice {
    spec: LatticeSpec,
    strides: Vec<usize>,
    num_sites: usize,
    links: Vec<Link>,
    link_lookup: HashMap<(usize, usize), usize>,
    plaquettes: Vec<Plaquette>,
    generators: Vec<Vec<usize>>,
}

impl Lattice {
    pub fn new(spec: LatticeSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.topology.dim();
        let mut strides = vec![1usize; d];
        for k in 1..d {
            strides[k] = strides[k - 1] * spec.sizes[k - 1];
        }
        let num_sites = spec.sizes.iter().product();
        let mut lattice = Lattice {
            spec,
            strides,
            num_sites,
            links: Vec::new(),
            link_lookup: HashMap::new(),
            plaquettes: Vec::new(),
            generators: Vec::new(),
        };
        lattice.build_links();
        lattice.build_plaquettes();
        lattice.build_generators();
        Ok(lattice)
    }

    fn build_links(&mut self) {
        let d = self.dim();
        let mut offsets: Vec<(LinkKind, Vec<i64>)> = Vec::new();
        for k in 0..d {
            let mut o = vec![0; d];
            o[k] = 1;
            offsets.push((LinkKind::Axis(k), o));
        }
        for k in 0..d {
            for l in (k + 1)..d {
                for sign in [1, -1] {
                    let mut o = vec![0; d];
                    o[k] = 1;
                    o[l] = sign;
                    offsets.push((LinkKind::Diagonal(k, l), o));
                }
            }
        }
        for site in 0..self.num_sites {
            for (kind, offset) in &offsets {
                let Some(to) = self.shift(site, offset) else {
                    continue;
                };
                let displacement: Vec<f64> = offset
                    .iter()
                    .zip(&self.spec.spacings)
                    .map(|(&o, &h)| o as f64 * h)
                    .collect();
                let length = displacement.iter().map(|x| x * x).sum::<f64>().sqrt();
                let id = self.links.len();
                self.links.push(Link {
                    from: site,
                    to,
                    kind: *kind,
                    offset: offset.clone(),
                    displacement: displacement.clone(),
                    length,
                    reverse: id + 1,
                    forward: true,
                });
                self.links.push(Link {
                    from: to,
                    to: site,
                    kind: *kind,
                    offset: offset.iter().map(|o| -o).collect(),
                    displacement: displacement.iter().map(|x| -x).collect(),
                    length,
                    reverse: id,
                    forward: false,
                });
                self.link_lookup.insert((site, to), id);
                self.link_lookup.insert((to, site), id + 1);
            }
        }
    }

    fn build_plaquettes(&mut self) {
        let d = self.dim();
        for k in 0..d {
            for l in (k + 1)..d {
                let mut ek = vec![0; d];
                ek[k] = 1;
                let mut el = vec![0; d];
                el[l] = 1;
                for base in 0..self.num_sites {
                    let (Some(a), Some(c)) = (self.shift(base, &ek), self.shift(base, &el)) else {
                        continue;
                    };
                    let Some(b) = self.shift(a, &el) else {
                        continue;
                    };
                    let boundary = [
                        self.link_lookup[&(base, a)],
                        self.link_lookup[&(a, b)],
                        self.link_lookup[&(b, c)],
                        self.link_lookup[&(c, base)],
                    ];
                    self.plaquettes.push(Plaquette {
                        axes: (k, l),
                        base,
                        boundary,
                    });
                }
            }
        }
    }

    fn build_generators(&mut self) {
        let d = self.dim();
        for k in 0..d {
            if !self.is_periodic(k) {
                continue;
            }
            let mut step = vec![0; d];
            step[k] = 1;
            let mut cycle = Vec::with_capacity(self.spec.sizes[k]);
            let mut site = 0;
            for _ in 0..self.spec.sizes[k] {
                let next = self.shift(site, &step).expect("periodic axis");
                cycle.push(self.link_lookup[&(site, next)]);
                site = next;
            }
            self.generators.push(cycle);
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn topology(&self) -> Topology {
        self.spec.topology
    }

    pub fn dim(&self) -> usize {
        self.spec.topology.dim()
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn size(&self, axis: usize) -> usize {
        self.spec.sizes[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spec.spacings[axis]
    }

    /// Chart extent of an axis: `N h` when periodic, `(N - 1) h` otherwise.
    pub fn extent(&self, axis: usize) -> f64 {
        let n = self.size(axis) as f64;
        if self.is_periodic(axis) {
            n * self.spacing(axis)
        } else {
            (n - 1.0) * self.spacing(axis)
        }
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.spec.topology.is_periodic(axis)
    }

    pub fn periodic_axes(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.is_periodic(k)).collect()
    }

    pub fn is_closed(&self) -> bool {
        (0..self.dim()).all(|k| self.is_periodic(k))
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        (0..self.dim())
            .map(|k| (site / self.strides[k]) % self.spec.sizes[k])
            .collect()
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Embedding coordinates `x_k = i_k h_k`.
    pub fn position(&self, site: usize) -> Vec<f64> {
        self.coords(site)
            .iter()
            .zip(&self.spec.spacings)
            .map(|(&c, &h)| c as f64 * h)
            .collect()
    }

    /// Site reached by an integer offset, wrapping periodic axes.
    pub fn shift(&self, site: usize, offset: &[i64]) -> Option<usize> {
        let mut coords = self.coords(site);
        for k in 0..self.dim() {
            let n = self.spec.sizes[k] as i64;
            let c = coords[k] as i64 + offset[k];
            let c = if self.is_periodic(k) {
                c.rem_euclid(n)
            } else if (0..n).contains(&c) {
                c
            } else {
                return None;
            };
            coords[k] = c as usize;
        }
        Some(self.site_index(&coords))
    }

    /// Minimal-image index offset from `i` to `j`.
    pub fn min_image_offset(&self, i: usize, j: usize) -> Vec<i64> {
        let (ci, cj) = (self.coords(i), self.coords(j));
        (0..self.dim())
            .map(|k| {
                let mut o = cj[k] as i64 - ci[k] as i64;
                if self.is_periodic(k) {
                    let n = self.spec.sizes[k] as i64;
                    o = o.rem_euclid(n);
                    if 2 * o > n {
                        o -= n;
                    }
                }
                o
            })
            .collect()
    }

    pub fn displacement(&self, i: usize, j: usize) -> Vec<f64> {
        self.min_image_offset(i, j)
            .iter()
            .zip(&self.spec.spacings)
            .map(|(&o, &h)| o as f64 * h)
            .collect()
    }

    /// Hop count between two sites using axis and in-plane diagonal moves.
    pub fn graph_distance(&self, i: usize, j: usize) -> usize {
        let o = self.min_image_offset(i, j);
        let linf = o.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        let l1: u64 = o.iter().map(|x| x.unsigned_abs()).sum();
        linf.max(l1.div_ceil(2)) as usize
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: usize) -> &Link {
        &self.links[id]
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn find_link(&self, from: usize, to: usize) -> Option<usize> {
        self.link_lookup.get(&(from, to)).copied()
    }

    /// Directed links leaving `site`.
    pub fn links_from(&self, site: usize) -> impl Iterator<Item = (usize, &Link)> + '_ {
        self.links
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.from == site)
    }

    /// Outgoing link ids grouped by source site.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_sites];
        for (id, l) in self.links.iter().enumerate() {
            adj[l.from].push(id);
        }
        adj
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    /// Generating cycles of the fundamental group, one per periodic axis.
    pub fn generators_pi1(&self) -> &[Vec<usize>] {
        &self.generators
    }

    /// Breadth-first spanning tree over axis links rooted at site 0.
    ///
    /// Returns the visiting order and, for every site, the tree link that
    /// reaches it (`None` for the root).
    pub fn spanning_tree(&self) -> (Vec<usize>, Vec<Option<usize>>) {
        let adj = self.adjacency();
        let mut parent = vec![None; self.num_sites];
        let mut seen = vec![false; self.num_sites];
        let mut order = Vec::with_capacity(self.num_sites);
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(site) = queue.pop_front() {
            order.push(site);
            for &id in &adj[site] {
                let l = &self.links[id];
                if matches!(l.kind, LinkKind::Axis(_)) && !seen[l.to] {
                    seen[l.to] = true;
                    parent[l.to] = Some(id);
                    queue.push_back(l.to);
                }
            }
        }
        (order, parent)
    }

    /// Sites whose full nearest-neighbour stencil (axis and diagonal) is present.
    pub fn is_interior(&self, site: usize) -> bool {
        let c = self.coords(site);
        (0..self.dim()).all(|k| self.is_periodic(k) || (c[k] > 0 && c[k] + 1 < self.size(k)))
    }

    pub fn d0(&self, f: &ScalarField) -> LinkField {
        LinkField {
            values: self
                .links
                .iter()
                .map(|l| f.values[l.to] - f.values[l.from])
                .collect(),
        }
    }

    /// Sum of a link field around every plaquette boundary.
    pub fn plaquette_sums(&self, omega: &LinkField) -> Vec<f64> {
        self.plaquettes
            .iter()
            .map(|p| p.boundary.iter().map(|&l| omega.values[l]).sum())
            .collect()
    }

    /// Checks that a link cycle is closed and connected.
    pub fn check_cycle(&self, cycle: &[usize]) -> Result<()> {
        let (Some(first), Some(last)) = (cycle.first(), cycle.last()) else {
            return Err(Error::OpenCycle("empty cycle".into()));
        };
        for w in cycle.windows(2) {
            if self.links[w[0]].to != self.links[w[1]].from {
                return Err(Error::OpenCycle(format!(
                    "link {} does not continue link {}",
                    w[1], w[0]
                )));
            }
        }
        if self.links[*last].to != self.links[*first].from {
            return Err(Error::OpenCycle(format!(
                "cycle ends at site {} but starts at site {}",
                self.links[*last].to, self.links[*first].from
            )));
        }
        Ok(())
    }
}

/// Real function on sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn constant(lattice: &Lattice, c: f64) -> Self {
        ScalarField {
            values: vec![c; lattice.num_sites()],
        }
    }

    /// Samples `f` at the embedding coordinates of each site.
    pub fn from_fn(lattice: &Lattice, f: impl Fn(&[f64]) -> f64) -> Self {
        ScalarField {
            values: (0..lattice.num_sites())
                .map(|s| f(&lattice.position(s)))
                .collect(),
        }
    }

    /// Embedding coordinate along `axis`.
    pub fn coordinate(lattice: &Lattice, axis: usize) -> Self {
        Self::from_fn(lattice, |x| x[axis])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Discrete one-form: one value per directed link, odd under reversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkField {
    pub values: Vec<f64>,
}

impl LinkField {
    pub fn zeros(lattice: &Lattice) -> Self {
        LinkField {
            values: vec![0.0; lattice.num_links()],
        }
    }

    /// Evaluates `f` on forward links and fills reverses with the negation.
    pub fn from_forward_fn(lattice: &Lattice, mut f: impl FnMut(&Link) -> f64) -> Self {
        let mut values = vec![0.0; lattice.num_links()];
        for (id, l) in lattice.links().iter().enumerate() {
            if l.forward {
                let v = f(l);
                values[id] = v;
                values[l.reverse] = -v;
            }
        }
        LinkField { values }
    }

    pub fn antisymmetry_defect(&self, lattice: &Lattice) -> f64 {
        lattice
            .links()
            .iter()
            .enumerate()
            .map(|(id, l)| (self.values[id] + self.values[l.reverse]).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        LinkField {
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &LinkField) -> Self {
        LinkField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Convenience wrapper around [`Lattice::new`].
pub fn build_lattice(spec: LatticeSpec) -> Result<Lattice> {
    Lattice::new(spec)
}
