//! The discrete connection (links), its curvature (clover field strength),
//! and the gauge-group action on configurations.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    det_sum, AlgebraElement, DomainError, GroupElement, LatticeGeometry, NeighborTables, Result,
    NDIM, SQRT_2,
};

/// The six coordinate planes, index order used for `FieldStrength` storage.
pub const PLANES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[inline]
pub fn plane_index(mu: usize, nu: usize) -> (usize, f64) {
    debug_assert!(mu != nu);
    let (p, q, sign) = if mu < nu { (mu, nu, 1.0) } else { (nu, mu, -1.0) };
    let idx = match (p, q) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => unreachable!(),
    };
    (idx, sign)
}

/// One SU(2) element per (site, direction): the discrete connection, with
/// link `U_mu(x) ≈ exp(a A_mu)` at the link midpoint.
#[derive(Debug, Clone)]
pub struct LinkField {
    pub geometry: LatticeGeometry,
    links: Vec<GroupElement>,
    nbr: Arc<NeighborTables>,
}

impl LinkField {
    pub fn flat(geometry: LatticeGeometry) -> Self {
        let nbr = Arc::new(geometry.neighbor_tables());
        let links = vec![GroupElement::IDENTITY; geometry.num_links()];
        Self { geometry, links, nbr }
    }

    pub fn from_links(geometry: LatticeGeometry, links: Vec<GroupElement>) -> Result<Self> {
        if links.len() != geometry.num_links() {
            return Err(DomainError(format!(
                "link count {} does not match geometry ({} links)",
                links.len(),
                geometry.num_links()
            )));
        }
        let nbr = Arc::new(geometry.neighbor_tables());
        Ok(Self { geometry, links, nbr })
    }

    /// Build by evaluating a function of (site, direction).
    pub fn from_fn(geometry: LatticeGeometry, f: impl Fn(usize, usize) -> GroupElement + Sync) -> Self {
        let nbr = Arc::new(geometry.neighbor_tables());
        let n = geometry.num_sites();
        let links: Vec<GroupElement> = (0..n * NDIM)
            .into_par_iter()
            .map(|i| f(i / NDIM, i % NDIM))
            .collect();
        Self { geometry, links, nbr }
    }

    #[inline(always)]
    pub fn link(&self, site: usize, mu: usize) -> GroupElement {
        self.links[site * NDIM + mu]
    }

    #[inline(always)]
    pub fn set_link(&mut self, site: usize, mu: usize, u: GroupElement) {
        self.links[site * NDIM + mu] = u;
    }

    pub fn links(&self) -> &[GroupElement] {
        &self.links
    }

    pub fn links_mut(&mut self) -> &mut [GroupElement] {
        &mut self.links
    }

    #[inline(always)]
    pub fn nbr(&self) -> &NeighborTables {
        &self.nbr
    }

    pub fn num_sites(&self) -> usize {
        self.geometry.num_sites()
    }

    /// Largest deviation of any link from unit norm.
    pub fn unitarity_drift(&self) -> f64 {
        self.links
            .par_iter()
            .map(|u| (u.norm() - 1.0).abs())
            .reduce(|| 0.0, f64::max)
    }

    /// Renormalize every link to exact unit norm; returns the drift that was
    /// removed. Idempotent up to roundoff.
    pub fn reunitarize(&mut self) -> f64 {
        let drift = self.unitarity_drift();
        self.links.par_iter_mut().for_each(|u| *u = u.normalized());
        drift
    }

    /// The elementary 1×1 Wilson loop U_mu(x) U_nu(x+mu) U_mu(x+nu)^† U_nu(x)^†.
    pub fn plaquette(&self, site: usize, mu: usize, nu: usize) -> Result<GroupElement> {
        if mu == nu || mu >= NDIM || nu >= NDIM {
            return Err(DomainError(format!("plaquette needs two distinct directions, got ({mu},{nu})")));
        }
        let xp = self.nbr.up[site][mu] as usize;
        let xq = self.nbr.up[site][nu] as usize;
        Ok(self.link(site, mu)
            * self.link(xp, nu)
            * self.link(xq, mu).dagger()
            * self.link(site, nu).dagger())
    }

    /// Gauge action: U_mu(x) ↦ g(x)^† U_mu(x) g(x+mu). Gauge-invariant
    /// observables are unchanged.
    pub fn apply_gauge(&self, g: &GaugeTransform) -> Result<LinkField> {
        if g.geometry != self.geometry {
            return Err(DomainError("gauge transform geometry mismatch".into()));
        }
        let n = self.num_sites();
        let links: Vec<GroupElement> = (0..n * NDIM)
            .into_par_iter()
            .map(|i| {
                let (site, mu) = (i / NDIM, i % NDIM);
                let up = self.nbr.up[site][mu] as usize;
                g.g[site].dagger() * self.link(site, mu) * g.g[up]
            })
            .collect();
        Ok(LinkField { geometry: self.geometry.clone(), links, nbr: self.nbr.clone() })
    }
}

/// One group element per site.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeTransform {
    pub geometry: LatticeGeometry,
    pub g: Vec<GroupElement>,
}

impl GaugeTransform {
    pub fn identity(geometry: LatticeGeometry) -> Self {
        let n = geometry.num_sites();
        Self { geometry, g: vec![GroupElement::IDENTITY; n] }
    }

    /// Pointwise product; `apply_gauge(apply_gauge(U, g), h) = apply_gauge(U, g·h)`.
    pub fn compose(&self, rhs: &GaugeTransform) -> Result<GaugeTransform> {
        if self.geometry != rhs.geometry {
            return Err(DomainError("gauge transform geometry mismatch".into()));
        }
        let g = self
            .g
            .par_iter()
            .zip(rhs.g.par_iter())
            .map(|(a, b)| *a * *b)
            .collect();
        Ok(GaugeTransform { geometry: self.geometry.clone(), g })
    }

    /// Haar-ish random transform from the counter RNG (test and probe use).
    pub fn random(geometry: LatticeGeometry, seed: u64) -> Self {
        let n = geometry.num_sites();
        let g = (0..n)
            .into_par_iter()
            .map(|s| {
                let x = AlgebraElement::new([
                    crate::util::counter_gaussian(seed, s as u64, 0),
                    crate::util::counter_gaussian(seed, s as u64, 1),
                    crate::util::counter_gaussian(seed, s as u64, 2),
                ]);
                x.exp_map()
            })
            .collect();
        Self { geometry, g }
    }
}

/// Per-site, per-plane curvature components F_{mu nu} (mu < nu), in units of
/// 1/length², from the 4-leaf clover average.
#[derive(Debug, Clone)]
pub struct FieldStrength {
    pub geometry: LatticeGeometry,
    comps: Vec<[AlgebraElement; 6]>,
}

impl FieldStrength {
    /// F_{mu nu}(x); antisymmetric in (mu, nu) by construction.
    #[inline]
    pub fn f(&self, site: usize, mu: usize, nu: usize) -> AlgebraElement {
        let (idx, sign) = plane_index(mu, nu);
        self.comps[site][idx].scale(sign)
    }

    #[inline(always)]
    pub fn plane(&self, site: usize, plane: usize) -> AlgebraElement {
        self.comps[site][plane]
    }

    pub fn num_sites(&self) -> usize {
        self.comps.len()
    }

    /// e(x) = Σ_{mu<nu} ⟨F_{mu nu}, F_{mu nu}⟩ at one site.
    #[inline]
    pub fn site_energy(&self, site: usize) -> f64 {
        self.comps[site].iter().map(|f| f.norm_sq()).sum()
    }
}

/// Symbolic description of one link factor inside a clover leaf: site offset
/// from the clover's base point, direction, and whether it enters daggered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafEntry {
    pub offset: [i8; NDIM],
    pub dir: usize,
    pub dagger: bool,
}

/// The four counterclockwise plaquette leaves of the clover in the (mu, nu)
/// plane, one per quadrant, each a closed loop based at the clover site.
/// Shared by the field-strength evaluation and the force assembly so both
/// differentiate the same discrete functional.
pub fn clover_leaves(mu: usize, nu: usize) -> [[LeafEntry; 4]; 4] {
    let off = |m: &[(usize, i8)]| -> [i8; NDIM] {
        let mut o = [0i8; NDIM];
        for &(d, v) in m {
            o[d] += v;
        }
        o
    };
    let e = |offset, dir, dagger| LeafEntry { offset, dir, dagger };
    [
        // (+mu, +nu) quadrant
        [
            e(off(&[]), mu, false),
            e(off(&[(mu, 1)]), nu, false),
            e(off(&[(nu, 1)]), mu, true),
            e(off(&[]), nu, true),
        ],
        // (−mu, +nu)
        [
            e(off(&[]), nu, false),
            e(off(&[(nu, 1), (mu, -1)]), mu, true),
            e(off(&[(mu, -1)]), nu, true),
            e(off(&[(mu, -1)]), mu, false),
        ],
        // (−mu, −nu)
        [
            e(off(&[(mu, -1)]), mu, true),
            e(off(&[(mu, -1), (nu, -1)]), nu, true),
            e(off(&[(mu, -1), (nu, -1)]), mu, false),
            e(off(&[(nu, -1)]), nu, false),
        ],
        // (+mu, −nu)
        [
            e(off(&[(nu, -1)]), nu, true),
            e(off(&[(nu, -1)]), mu, false),
            e(off(&[(nu, -1), (mu, 1)]), nu, false),
            e(off(&[]), mu, true),
        ],
    ]
}

/// Resolve a small site offset through the periodic neighbor tables.
#[inline]
pub fn site_at_offset(nbr: &NeighborTables, site: usize, offset: [i8; NDIM]) -> usize {
    let mut s = site;
    for mu in 0..NDIM {
        let mut k = offset[mu];
        while k > 0 {
            s = nbr.up[s][mu] as usize;
            k -= 1;
        }
        while k < 0 {
            s = nbr.down[s][mu] as usize;
            k += 1;
        }
    }
    s
}

/// Evaluate one leaf as a product of group elements.
#[inline]
pub fn eval_leaf(field: &LinkField, base: usize, leaf: &[LeafEntry; 4]) -> GroupElement {
    let mut acc: Option<GroupElement> = None;
    for entry in leaf {
        let s = site_at_offset(field.nbr(), base, entry.offset);
        let u = field.link(s, entry.dir);
        let u = if entry.dagger { u.dagger() } else { u };
        acc = Some(match acc {
            None => u,
            Some(a) => a * u,
        });
    }
    acc.unwrap()
}

/// Clover field strength: F_{mu nu}(x) = project_algebra(Σ leaves)/(4a²),
/// O(a²)-accurate on smooth fields, exactly antisymmetric and algebra-valued.
pub fn clover_field_strength(field: &LinkField) -> FieldStrength {
    let geometry = field.geometry.clone();
    let a2 = geometry.spacing * geometry.spacing;
    // vec(Q)·√2/(4a²) in the orthonormal basis.
    let scale = SQRT_2 / (4.0 * a2);
    let nbr = field.nbr();
    let comps: Vec<[AlgebraElement; 6]> = (0..geometry.num_sites())
        .into_par_iter()
        .map(|x| {
            let mut out = [AlgebraElement::ZERO; 6];
            for (pi, &(p, q)) in PLANES.iter().enumerate() {
                let xp = nbr.up[x][p] as usize;
                let xq = nbr.up[x][q] as usize;
                let xmp = nbr.down[x][p] as usize;
                let xmq = nbr.down[x][q] as usize;
                let xq_mp = nbr.down[xq][p] as usize;
                let xmp_mq = nbr.down[xmp][q] as usize;
                let xmq_pp = nbr.up[xmq][p] as usize;

                let l1 = field.link(x, p)
                    * field.link(xp, q)
                    * field.link(xq, p).dagger()
                    * field.link(x, q).dagger();
                let l2 = field.link(x, q)
                    * field.link(xq_mp, p).dagger()
                    * field.link(xmp, q).dagger()
                    * field.link(xmp, p);
                let l3 = field.link(xmp, p).dagger()
                    * field.link(xmp_mq, q).dagger()
                    * field.link(xmp_mq, p)
                    * field.link(xmq, q);
                let l4 = field.link(xmq, q).dagger()
                    * field.link(xmq, p)
                    * field.link(xmq_pp, q)
                    * field.link(x, p).dagger();

                out[pi] = AlgebraElement::new([
                    (l1.q[1] + l2.q[1] + l3.q[1] + l4.q[1]) * scale,
                    (l1.q[2] + l2.q[2] + l3.q[2] + l4.q[2]) * scale,
                    (l1.q[3] + l2.q[3] + l3.q[3] + l4.q[3]) * scale,
                ]);
            }
            out
        })
        .collect();
    FieldStrength { geometry, comps }
}

/// Same stencil evaluated through the symbolic leaf table; slow, used to pin
/// the hand-unrolled version in tests.
pub fn clover_field_strength_reference(field: &LinkField) -> FieldStrength {
    let geometry = field.geometry.clone();
    let scale = SQRT_2 / (4.0 * geometry.spacing * geometry.spacing);
    let comps: Vec<[AlgebraElement; 6]> = (0..geometry.num_sites())
        .map(|x| {
            let mut out = [AlgebraElement::ZERO; 6];
            for (pi, &(p, q)) in PLANES.iter().enumerate() {
                let mut v = [0.0; 3];
                for leaf in &clover_leaves(p, q) {
                    let l = eval_leaf(field, x, leaf);
                    v[0] += l.q[1];
                    v[1] += l.q[2];
                    v[2] += l.q[3];
                }
                out[pi] = AlgebraElement::new([v[0] * scale, v[1] * scale, v[2] * scale]);
            }
            out
        })
        .collect();
    FieldStrength { geometry, comps }
}

/// Naive single-plaquette field strength from the group logarithm,
/// F = log(P_{mu nu})/a²; the comparison stencil for the clover consistency
/// checks.
pub fn log_plaquette_field_strength(field: &LinkField) -> FieldStrength {
    let geometry = field.geometry.clone();
    let a2 = geometry.spacing * geometry.spacing;
    let comps: Vec<[AlgebraElement; 6]> = (0..geometry.num_sites())
        .into_par_iter()
        .map(|x| {
            let mut out = [AlgebraElement::ZERO; 6];
            for (pi, &(p, q)) in PLANES.iter().enumerate() {
                let pl = field.plaquette(x, p, q).unwrap();
                // log_map yields the rotation angle vector; convert to the
                // orthonormal algebra basis (coefficients √2·v).
                let l = pl.log_map();
                out[pi] = AlgebraElement::new([
                    l.x[0] * SQRT_2 / a2,
                    l.x[1] * SQRT_2 / a2,
                    l.x[2] * SQRT_2 / a2,
                ]);
            }
            out
        })
        .collect();
    FieldStrength { geometry, comps }
}

/// Per-site energy density e(x) = Σ_{mu<nu} ⟨F,F⟩ ≥ 0.
pub fn energy_density(fs: &FieldStrength) -> Vec<f64> {
    (0..fs.num_sites())
        .into_par_iter()
        .map(|x| fs.site_energy(x))
        .collect()
}

/// Energy in the toroidal shell r_in ≤ dist < r_out around `center`
/// (center in lattice units, radii in physical units).
pub fn annulus_energy(
    fs: &FieldStrength,
    center: [f64; NDIM],
    r_in: f64,
    r_out: f64,
) -> Result<f64> {
    if !(0.0 <= r_in && r_in < r_out) {
        return Err(DomainError(format!("annulus radii must satisfy 0 <= r_in < r_out, got [{r_in}, {r_out})")));
    }
    let g = &fs.geometry;
    let a4 = g.spacing.powi(4);
    let vals: Vec<f64> = (0..fs.num_sites())
        .into_par_iter()
        .map(|x| {
            let d = g.distance(x, center);
            if d >= r_in && d < r_out {
                fs.site_energy(x)
            } else {
                0.0
            }
        })
        .collect();
    Ok(a4 * det_sum(&vals))
}

/// Energy of the toroidal ball dist < radius.
pub fn ball_energy(fs: &FieldStrength, center: [f64; NDIM], radius: f64) -> Result<f64> {
    if radius == 0.0 {
        return Ok(0.0);
    }
    annulus_energy(fs, center, 0.0, radius)
}

/// Total a⁴ Σ_x e(x).
pub fn total_energy(fs: &FieldStrength) -> f64 {
    let vals: Vec<f64> = (0..fs.num_sites())
        .into_par_iter()
        .map(|x| fs.site_energy(x))
        .collect();
    fs.geometry.spacing.powi(4) * det_sum(&vals)
}

/// Number of sites in the toroidal shell; used to flag under-resolved shells.
pub fn shell_site_count(g: &LatticeGeometry, center: [f64; NDIM], r_in: f64, r_out: f64) -> usize {
    (0..g.num_sites())
        .into_par_iter()
        .filter(|&x| {
            let d = g.distance(x, center);
            d >= r_in && d < r_out
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Reduction;
    use approx::assert_abs_diff_eq;

    fn small_geometry() -> LatticeGeometry {
        LatticeGeometry::new([4, 4, 4, 4], 1.0).unwrap()
    }

    pub(crate) fn random_field(geometry: LatticeGeometry, seed: u64, amplitude: f64) -> LinkField {
        LinkField::from_fn(geometry, |s, mu| {
            let key = (s * NDIM + mu) as u64;
            AlgebraElement::new([
                amplitude * crate::util::counter_gaussian(seed, key, 0),
                amplitude * crate::util::counter_gaussian(seed, key, 1),
                amplitude * crate::util::counter_gaussian(seed, key, 2),
            ])
            .exp_map()
        })
    }

    #[test]
    fn flat_field_strength_is_zero() {
        let f = LinkField::flat(small_geometry());
        let fs = clover_field_strength(&f);
        for x in 0..fs.num_sites() {
            assert_eq!(fs.site_energy(x), 0.0);
        }
        assert_eq!(total_energy(&fs), 0.0);
    }

    #[test]
    fn flat_plaquette_identity() {
        let f = LinkField::flat(small_geometry());
        for mu in 0..4 {
            for nu in 0..4 {
                if mu == nu {
                    assert!(f.plaquette(0, mu, nu).is_err());
                } else {
                    let p = f.plaquette(3, mu, nu).unwrap();
                    assert!(p.deviation_from_identity() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn constant_abelian_embedding_is_pure_gauge() {
        // U_mu = exp(i sigma3 theta_mu), constant: all links commute, every
        // plaquette is the identity.
        let thetas = [0.3, -0.9, 1.4, 0.2];
        let f = LinkField::from_fn(small_geometry(), |_, mu| {
            AlgebraElement::new([0.0, 0.0, thetas[mu]]).exp_map()
        });
        for x in [0, 7, 63] {
            for (p, q) in PLANES {
                assert!(f.plaquette(x, p, q).unwrap().deviation_from_identity() < 1e-14);
            }
        }
        let fs = clover_field_strength(&f);
        assert!(total_energy(&fs) < 1e-24);
    }

    #[test]
    fn single_hot_link_plaquette_trace() {
        // One link rotated by pi/4 about sigma3; plaquettes containing it have
        // trace 2 cos(pi/4) by direct matrix multiplication.
        let mut f = LinkField::flat(small_geometry());
        let angle = std::f64::consts::FRAC_PI_4;
        f.set_link(0, 0, AlgebraElement::new([0.0, 0.0, angle]).exp_map());
        let p = f.plaquette(0, 0, 1).unwrap();
        assert_abs_diff_eq!(p.re_trace(), 2.0 * angle.cos(), epsilon = 1e-14);
    }

    #[test]
    fn clover_reference_agrees_with_unrolled() {
        let f = random_field(small_geometry(), 11, 0.4);
        let a = clover_field_strength(&f);
        let b = clover_field_strength_reference(&f);
        for x in 0..a.num_sites() {
            for pi in 0..6 {
                let da = a.plane(x, pi);
                let db = b.plane(x, pi);
                for k in 0..3 {
                    assert_abs_diff_eq!(da.x[k], db.x[k], epsilon = 1e-13);
                }
            }
        }
    }

    /// Constant abelian flux on the torus: U_0(x) = exp(i sigma3 g a² x_1),
    /// with one compensating boundary layer so the configuration is exactly
    /// periodic and the plaquette angle is g a² everywhere.
    pub(crate) fn constant_flux_field(l: usize, k: i32) -> (LinkField, f64) {
        let geometry = LatticeGeometry::new([l; 4], 1.0).unwrap();
        let geo = geometry.clone();
        let g = 2.0 * std::f64::consts::PI * k as f64 / (l as f64);
        // U_0(x) = exp(i sigma3 g x1); U_1 carries the compensating flux line
        // at the wrap so that every (0,1) plaquette angle is exactly −g.
        let field = LinkField::from_fn(geometry, move |s, mu| {
            let x = geo.delinearize(s);
            match mu {
                0 => AlgebraElement::new([0.0, 0.0, g * x[1] as f64]).exp_map(),
                1 if x[1] == l - 1 => {
                    AlgebraElement::new([0.0, 0.0, -g * (l as f64) * x[0] as f64]).exp_map()
                }
                _ => GroupElement::IDENTITY,
            }
        });
        (field, g)
    }

    #[test]
    fn constant_flux_clover_converges_like_a_squared() {
        // Fixed flux quantum, refined lattice: clover F_{01} -> -sqrt(2) g with
        // relative error (g²/6)(1 + o(1)); observed order >= 1.9.
        let mut errs = Vec::new();
        let mut gs = Vec::new();
        for l in [8usize, 16, 32] {
            let (field, g) = constant_flux_field(l, 1);
            let fs = clover_field_strength(&field);
            let expected = -SQRT_2 * g;
            // Interior site away from the compensating layer.
            let x = field.geometry.linearize([1, 1, 1, 1]);
            let measured = fs.f(x, 0, 1).x[2];
            errs.push(((measured - expected) / expected).abs());
            gs.push(g);
        }
        let order01 = (errs[0] / errs[1]).ln() / (gs[0] / gs[1]).ln();
        let order12 = (errs[1] / errs[2]).ln() / (gs[1] / gs[2]).ln();
        assert!(order01 >= 1.9, "order {order01} errs {errs:?}");
        assert!(order12 >= 1.9, "order {order12} errs {errs:?}");
        // And the log-plaquette stencil is exact on this family.
        let (field, g) = constant_flux_field(6, 1);
        let fs = log_plaquette_field_strength(&field);
        let x = field.geometry.linearize([1, 1, 1, 1]);
        assert_abs_diff_eq!(fs.f(x, 0, 1).x[2], -SQRT_2 * g, epsilon = 1e-12);
    }

    #[test]
    fn constant_flux_energy_density_uniform() {
        let (field, g) = constant_flux_field(8, 1);
        let fs = clover_field_strength(&field);
        let e = energy_density(&fs);
        // e = |F01|² = 2 sin²(g)/a⁴ for this configuration; uniform across sites.
        let expected = 2.0 * g.sin().powi(2);
        for &ex in &e {
            assert_abs_diff_eq!(ex, expected, epsilon = 1e-10 * expected.max(1.0));
        }
    }

    #[test]
    fn gauge_covariance_of_field_strength() {
        let f = random_field(small_geometry(), 5, 0.5);
        let g = GaugeTransform::random(f.geometry.clone(), 17);
        let fg = f.apply_gauge(&g).unwrap();
        let fs = clover_field_strength(&f);
        let fsg = clover_field_strength(&fg);
        // e(x) invariant pointwise; components conjugate (norms preserved).
        for x in 0..fs.num_sites() {
            let a = fs.site_energy(x);
            let b = fsg.site_energy(x);
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "site {x}: {a} vs {b}");
        }
    }

    #[test]
    fn gauge_transform_composition() {
        let f = random_field(small_geometry(), 23, 0.6);
        let g = GaugeTransform::random(f.geometry.clone(), 1);
        let h = GaugeTransform::random(f.geometry.clone(), 2);
        let a = f.apply_gauge(&g).unwrap().apply_gauge(&h).unwrap();
        let gh = g.compose(&h).unwrap();
        let b = f.apply_gauge(&gh).unwrap();
        for (u, v) in a.links().iter().zip(b.links()) {
            for k in 0..4 {
                assert_abs_diff_eq!(u.q[k], v.q[k], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn constant_gauge_preserves_links_traces() {
        let f = random_field(small_geometry(), 29, 0.7);
        let c = AlgebraElement::new([0.4, -0.2, 0.9]).exp_map();
        let g = GaugeTransform {
            geometry: f.geometry.clone(),
            g: vec![c; f.num_sites()],
        };
        let fg = f.apply_gauge(&g).unwrap();
        for x in [0, 5, 100] {
            for (p, q) in PLANES {
                let a = f.plaquette(x, p, q).unwrap().re_trace();
                let b = fg.plaquette(x, p, q).unwrap().re_trace();
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identity_gauge_is_noop() {
        let f = random_field(small_geometry(), 31, 0.5);
        let g = GaugeTransform::identity(f.geometry.clone());
        let fg = f.apply_gauge(&g).unwrap();
        assert_eq!(f.links(), fg.links());
    }

    #[test]
    fn shells_partition_total_energy() {
        let f = random_field(small_geometry(), 37, 0.5);
        let fs = clover_field_strength(&f);
        let center = [0.5, 1.5, 2.0, 0.0];
        let total = total_energy(&fs);
        assert_eq!(ball_energy(&fs, center, 0.0).unwrap(), 0.0);
        // Core ball + log-binned annuli out past the torus diameter.
        let radii = [1.0, 2.0, 4.0, 8.0];
        let mut sum = ball_energy(&fs, center, radii[0]).unwrap();
        for w in radii.windows(2) {
            sum += annulus_energy(&fs, center, w[0], w[1]).unwrap();
        }
        assert_abs_diff_eq!(sum, total, epsilon = 1e-12 * total.max(1.0));
        assert!(annulus_energy(&fs, center, 2.0, 1.0).is_err());
    }

    #[test]
    fn reunitarize_is_idempotent_and_gentle() {
        let mut f = random_field(small_geometry(), 41, 0.5);
        // Inject sub-1e-8 norm drift.
        for u in f.links_mut() {
            for k in 0..4 {
                u.q[k] *= 1.0 + 3e-9;
            }
        }
        let before = {
            let fs = clover_field_strength(&f);
            let e: Vec<f64> = (0..fs.num_sites()).map(|x| (1.0 + fs.site_energy(x)).powf(1.2)).collect();
            crate::geometry::reduce_sum(&e, Reduction::Deterministic)
        };
        let drift = f.reunitarize();
        assert!(drift > 1e-10 && drift < 1e-8);
        let after = {
            let fs = clover_field_strength(&f);
            let e: Vec<f64> = (0..fs.num_sites()).map(|x| (1.0 + fs.site_energy(x)).powf(1.2)).collect();
            crate::geometry::reduce_sum(&e, Reduction::Deterministic)
        };
        // Linear response: the action shifts by O(drift), not O(drift²).
        assert!(((after - before) / before).abs() < 10.0 * drift);
        let again = f.reunitarize();
        assert!(again < 1e-14);
    }
}
