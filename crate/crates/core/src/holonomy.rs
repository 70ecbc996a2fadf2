//! Loop holonomies, flat connections, Aharonov–Bohm spectra and the lattice
//! first Chern number.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LinkField, ScalarField, Topology};
use crate::linalg::{hermitian_eigenvalues, wrap_angle};
use crate::operators::{mult_op, twisted_laplacian, Mass, MetricField};

/// One holonomy angle per generator of `π₁`, stored in `(-π, π]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyClass {
    angles: Vec<f64>,
}

impl HolonomyClass {
    pub fn new(angles: &[f64]) -> Self {
        Self { angles: angles.iter().copied().map(wrap_angle).collect() }
    }

    pub fn trivial(lattice: &Lattice) -> Self {
        Self { angles: vec![0.0; lattice.generators_pi1().len()] }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

/// Sum of phases around a closed cycle of links, in `(-π, π]`.
pub fn loop_holonomy(lattice: &Lattice, theta: &LinkField, cycle: &[usize]) -> Result<f64> {
    lattice.check_cycle(cycle)?;
    Ok(wrap_angle(cycle.iter().map(|&l| theta.values[l]).sum()))
}

/// Holonomies around every generator of `π₁`.
pub fn holonomy_class(lattice: &Lattice, theta: &LinkField) -> Result<HolonomyClass> {
    let angles = lattice
        .generators_pi1()
        .iter()
        .map(|c| loop_holonomy(lattice, theta, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(HolonomyClass { angles })
}

/// Flat phases spreading each angle uniformly along its periodic axis.
///
/// The angles are used as given, without reduction, so `α` and `α + 2π`
/// produce different (gauge-equivalent) fields.
pub fn spread_phases(lattice: &Lattice, angles: &[f64]) -> Result<LinkField> {
    let axes = lattice.periodic_axes();
    if angles.len() != axes.len() {
        return Err(Error::HolonomyMismatch { given: angles.len(), available: axes.len() });
    }
    let mut per_axis = vec![0.0; lattice.dim()];
    for (&k, &a) in axes.iter().zip(angles) {
        per_axis[k] = a / lattice.size(k) as f64;
    }
    Ok(LinkField::from_forward_fn(lattice, |l| {
        l.offset.iter().zip(&per_axis).map(|(&o, p)| o as f64 * p).sum()
    }))
}

/// Canonical flat phases realizing a holonomy class.
pub fn flat_connection(lattice: &Lattice, target: &HolonomyClass) -> Result<LinkField> {
    spread_phases(lattice, &target.angles)
}

/// Largest plaquette phase sum.
pub fn flatness_defect(lattice: &Lattice, theta: &LinkField) -> f64 {
    lattice.plaquette_sums(theta).iter().fold(0.0, |m, f| m.max(f.abs()))
}

/// Eigenvalues of the flat-connection Hamiltonian over a grid of holonomies.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralFlow {
    pub alphas: Vec<f64>,
    /// Ascending eigenvalues, one row per `alpha`.
    pub eigenvalues: Vec<Vec<f64>>,
}

impl SpectralFlow {
    /// CSV `alpha,lambda_1..lambda_K`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let k = self.eigenvalues.first().map_or(0, Vec::len);
        let mut header = vec!["alpha".to_string()];
        header.extend((1..=k).map(|i| format!("lambda_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (a, row) in self.alphas.iter().zip(&self.eigenvalues) {
            let mut cols = vec![format!("{a:.16e}")];
            cols.extend(row.iter().map(|x| format!("{x:.16e}")));
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }
}

/// Aharonov–Bohm spectral flow on a ring or cylinder. Link phases may leave
/// `(-π/2, π/2)` here, so any real `alpha` is accepted.
pub fn ab_spectrum(
    lattice: &Lattice,
    g: &MetricField,
    phi: &ScalarField,
    m: Mass,
    alphas: &[f64],
) -> Result<SpectralFlow> {
    if !matches!(lattice.topology(), Topology::Ring | Topology::Cylinder) {
        return Err(Error::WrongTopology { needed: "ring or cylinder", found: lattice.topology().to_string() });
    }
    let mut eigenvalues = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("holonomy sample {alpha} is not finite")));
        }
        let theta = spread_phases(lattice, &[alpha])?;
        if phi.len() != lattice.num_sites() {
            return Err(Error::LengthMismatch { what: "potential", expected: lattice.num_sites(), found: phi.len() });
        }
        let h = twisted_laplacian(lattice, g, &theta, m)?.add(&mult_op(phi))?;
        eigenvalues.push(hermitian_eigenvalues(&h.to_dense()));
    }
    Ok(SpectralFlow { alphas: alphas.to_vec(), eigenvalues })
}

/// Total principal-branch plaquette flux over `2π` on a torus.
pub fn chern_number(lattice: &Lattice, theta: &LinkField) -> Result<i64> {
    if lattice.topology() != Topology::Torus {
        return Err(Error::WrongTopology { needed: "torus", found: lattice.topology().to_string() });
    }
    let total: f64 = lattice.plaquette_sums(theta).into_iter().map(wrap_angle).sum::<f64>() / (2.0 * PI);
    let k = total.round();
    if (total - k).abs() > 1e-6 {
        return Err(Error::NonIntegerChern(total));
    }
    Ok(k as i64)
}

/// Landau-gauge phases with flux `2πk / (N_x N_y)` through every plaquette of
/// a torus; the compensating jump sits on the seam `x = N_x - 1 → 0`.
pub fn uniform_flux_phases(lattice: &Lattice, k: i64) -> Result<LinkField> {
    if lattice.topology() != Topology::Torus {
        return Err(Error::WrongTopology { needed: "torus", found: lattice.topology().to_string() });
    }
    let (nx, ny) = (lattice.size(0), lattice.size(1));
    let flux = 2.0 * PI * k as f64 / (nx * ny) as f64;
    let axis = |site: usize, dir: usize| -> f64 {
        let c = lattice.coords(site);
        match dir {
            0 if c[0] == nx - 1 => -flux * (nx * c[1]) as f64,
            0 => 0.0,
            _ => flux * c[0] as f64,
        }
    };
    Ok(LinkField::from_forward_fn(lattice, |l| {
        let (ox, oy) = (l.offset[0], l.offset[1]);
        match (ox, oy) {
            (1, 0) => axis(l.from, 0),
            (0, 1) => axis(l.from, 1),
            // Diagonals follow the x-then-y path so that every triangle is consistent.
            (1, 1) => axis(l.from, 0) + axis(lattice.shift(l.from, &[1, 0]).expect("torus"), 1),
            _ => axis(l.from, 0) - axis(l.to, 1),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    fn lat(t: Topology, sizes: &[usize]) -> Lattice {
        Lattice::new(LatticeSpec::uniform(t, sizes, 1.0)).unwrap()
    }

    fn angle_eq(a: f64, b: f64) -> bool {
        wrap_angle(a - b).abs() < 1e-12
    }

    #[test]
    fn loop_holonomy_examples() {
        let l = lat(Topology::Ring, &[7]);
        let cycle = &l.generators_pi1()[0];
        assert_eq!(loop_holonomy(&l, &LinkField::zeros(&l), cycle).unwrap(), 0.0);
        let chi = ScalarField::from_fn(&l, |x| (x[0] * 0.9).sin());
        assert!(loop_holonomy(&l, &l.d0(&chi), cycle).unwrap().abs() < 1e-14);
        let theta = LinkField::from_forward_fn(&l, |_| 2.5 / 7.0);
        assert!(angle_eq(loop_holonomy(&l, &theta, cycle).unwrap(), 2.5));
        assert!(matches!(loop_holonomy(&l, &theta, &cycle[..3]), Err(Error::OpenCycle(_))));
    }

    #[test]
    fn flat_connection_examples() {
        let c = lat(Topology::Cylinder, &[6, 4]);
        let theta = flat_connection(&c, &HolonomyClass::new(&[PI / 3.0])).unwrap();
        assert!(flatness_defect(&c, &theta) <= 1e-13);
        assert!(angle_eq(holonomy_class(&c, &theta).unwrap().angles()[0], PI / 3.0));

        let i = lat(Topology::Interval, &[5]);
        assert_eq!(flat_connection(&i, &HolonomyClass::new(&[])).unwrap().max_abs(), 0.0);
        assert!(matches!(
            flat_connection(&i, &HolonomyClass::new(&[0.1])),
            Err(Error::HolonomyMismatch { given: 1, available: 0 })
        ));

        let t = lat(Topology::Torus, &[5, 4]);
        let theta = flat_connection(&t, &HolonomyClass::new(&[0.7, -1.1])).unwrap();
        assert!(flatness_defect(&t, &theta) <= 1e-13);
        let got = holonomy_class(&t, &theta).unwrap();
        assert!(angle_eq(got.angles()[0], 0.7) && angle_eq(got.angles()[1], -1.1));
    }

    #[test]
    fn ring4_spectrum_at_pi() {
        let l = lat(Topology::Ring, &[4]);
        let flow = ab_spectrum(
            &l,
            &MetricField::identity(&l),
            &ScalarField::constant(&l, 0.0),
            Mass::new(1.0).unwrap(),
            &[0.0, PI, 3.0 * PI],
        )
        .unwrap();
        for (a, b) in flow.eigenvalues[1].iter().zip(&flow.eigenvalues[2]) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = 0.5f64.sqrt();
        let want = [1.0 - r, 1.0 - r, 1.0 + r, 1.0 + r];
        for (a, b) in flow.eigenvalues[1].iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
        let mut buf = Vec::new();
        flow.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("alpha,lambda_1,lambda_2,lambda_3,lambda_4\n"));
        assert!(ab_spectrum(&lat(Topology::Interval, &[4]), &MetricField::identity(&lat(Topology::Interval, &[4])), &ScalarField::new(vec![0.0; 4]), Mass::new(1.0).unwrap(), &[0.0]).is_err());
    }

    #[test]
    fn chern_examples() {
        let t = lat(Topology::Torus, &[5, 4]);
        assert_eq!(chern_number(&t, &LinkField::zeros(&t)).unwrap(), 0);
        let chi = ScalarField::from_fn(&t, |x| 3.0 * x[0].sin() * x[1].cos());
        assert_eq!(chern_number(&t, &t.d0(&chi)).unwrap(), 0);
        for k in -2..=2 {
            let theta = uniform_flux_phases(&t, k).unwrap();
            assert_eq!(chern_number(&t, &theta).unwrap(), k);
        }
        let c = lat(Topology::Cylinder, &[4, 4]);
        assert!(matches!(chern_number(&c, &LinkField::zeros(&c)), Err(Error::WrongTopology { .. })));
    }
}
