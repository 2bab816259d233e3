//! Periodic 4D hypercubic lattice indexing and the SU(2) matrix algebra.
//!
//! Group elements are stored as unit quaternions `q0 + i q·σ` (σ the Pauli
//! matrices), so unitarity and det = 1 are exact up to a single norm
//! constraint. Lie algebra elements are stored as coordinates in the
//! orthonormal basis `i σ_k / √2` of su(2) under `⟨X,Y⟩ = −tr(XY)`; with this
//! normalization a unit-charge instanton carries action 8π² and the
//! topological charge comes out as (1/32π²)∫ε⟨F,F⟩ with no extra factors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Domain-precondition violations (mismatched geometries, bad radii, ...).
#[derive(Debug, Error)]
#[error("{0}")]
pub struct DomainError(pub String);

pub type Result<T> = std::result::Result<T, DomainError>;

pub const NDIM: usize = 4;

/// Periodic hypercubic lattice: `dims[mu]` sites per direction, spacing `a`.
///
/// Site indices are lexicographic with direction 0 fastest:
/// `index = x0 + L0*(x1 + L1*(x2 + L2*x3))`. The checkpoint format relies on
/// this ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub dims: [usize; NDIM],
    pub spacing: f64,
}

impl LatticeGeometry {
    pub fn new(dims: [usize; NDIM], spacing: f64) -> Result<Self> {
        if dims.iter().any(|&l| l < 4) {
            return Err(DomainError(format!(
                "lattice dims {dims:?}: every extent must be >= 4 (clover stencil)"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(DomainError(format!("lattice spacing {spacing} must be positive")));
        }
        Ok(Self { dims, spacing })
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn num_links(&self) -> usize {
        self.num_sites() * NDIM
    }

    /// Total 4-volume `a⁴ · N_sites`.
    pub fn volume(&self) -> f64 {
        self.spacing.powi(4) * self.num_sites() as f64
    }

    #[inline]
    pub fn linearize(&self, x: [usize; NDIM]) -> usize {
        debug_assert!(x.iter().zip(&self.dims).all(|(&c, &l)| c < l));
        x[0] + self.dims[0] * (x[1] + self.dims[1] * (x[2] + self.dims[2] * x[3]))
    }

    #[inline]
    pub fn delinearize(&self, mut s: usize) -> [usize; NDIM] {
        let mut x = [0usize; NDIM];
        for mu in 0..NDIM {
            x[mu] = s % self.dims[mu];
            s /= self.dims[mu];
        }
        x
    }

    /// Site shifted by `step` lattice units along `mu`, periodically wrapped.
    #[inline]
    pub fn shift(&self, site: usize, mu: usize, step: isize) -> usize {
        let mut x = self.delinearize(site);
        let l = self.dims[mu] as isize;
        x[mu] = (((x[mu] as isize + step) % l) + l) as usize % self.dims[mu];
        self.linearize(x)
    }

    /// Minimal-image displacement (in lattice units) from `from` to site
    /// coordinates `x`, component-wise in (-L/2, L/2].
    #[inline]
    pub fn min_image(&self, x: [usize; NDIM], from: [f64; NDIM]) -> [f64; NDIM] {
        let mut d = [0.0; NDIM];
        for mu in 0..NDIM {
            let l = self.dims[mu] as f64;
            let mut delta = x[mu] as f64 - from[mu];
            delta -= l * (delta / l).round();
            d[mu] = delta;
        }
        d
    }

    /// Toroidal Euclidean distance (physical units) between a site and a
    /// fractional center given in lattice units.
    #[inline]
    pub fn distance(&self, site: usize, center: [f64; NDIM]) -> f64 {
        let d = self.min_image(self.delinearize(site), center);
        self.spacing * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]).sqrt()
    }

    /// Precomputed neighbor tables, one `+mu` and one `-mu` entry per site.
    pub fn neighbor_tables(&self) -> NeighborTables {
        let n = self.num_sites();
        let mut up = vec![[0u32; NDIM]; n];
        let mut down = vec![[0u32; NDIM]; n];
        for s in 0..n {
            for mu in 0..NDIM {
                up[s][mu] = self.shift(s, mu, 1) as u32;
                down[s][mu] = self.shift(s, mu, -1) as u32;
            }
        }
        NeighborTables { up, down }
    }
}

/// Per-site periodic neighbor indices.
#[derive(Debug)]
pub struct NeighborTables {
    pub up: Vec<[u32; NDIM]>,
    pub down: Vec<[u32; NDIM]>,
}

impl NeighborTables {
    #[inline(always)]
    pub fn step(&self, site: usize, mu: usize, forward: bool) -> usize {
        if forward {
            self.up[site][mu] as usize
        } else {
            self.down[site][mu] as usize
        }
    }
}

/// SU(2) element `q0·I + i(q1σ1 + q2σ2 + q3σ3)` with q unit-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub q: [f64; 4],
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { q: [1.0, 0.0, 0.0, 0.0] };

    #[inline]
    pub fn new(q: [f64; 4]) -> Self {
        Self { q }
    }

    /// Quaternion product = matrix product of the 2×2 representations.
    #[inline(always)]
    pub fn multiply(&self, rhs: &GroupElement) -> GroupElement {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = rhs.q;
        // (a0 + i a·σ)(b0 + i b·σ) = (a0b0 − a·b) + i(a0 b + b0 a − a×b)·σ
        GroupElement {
            q: [
                a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
                a0 * b1 + b0 * a1 - (a2 * b3 - a3 * b2),
                a0 * b2 + b0 * a2 - (a3 * b1 - a1 * b3),
                a0 * b3 + b0 * a3 - (a1 * b2 - a2 * b1),
            ],
        }
    }

    /// Hermitian conjugate = inverse for unit quaternions.
    #[inline(always)]
    pub fn dagger(&self) -> GroupElement {
        GroupElement { q: [self.q[0], -self.q[1], -self.q[2], -self.q[3]] }
    }

    /// Re tr U = 2 q0.
    #[inline(always)]
    pub fn re_trace(&self) -> f64 {
        2.0 * self.q[0]
    }

    #[inline(always)]
    pub fn norm(&self) -> f64 {
        let [a, b, c, d] = self.q;
        (a * a + b * b + c * c + d * d).sqrt()
    }

    /// Renormalize to unit length; the reunitarization step of the flows.
    #[inline]
    pub fn normalized(&self) -> GroupElement {
        let n = self.norm();
        GroupElement { q: [self.q[0] / n, self.q[1] / n, self.q[2] / n, self.q[3] / n] }
    }

    /// Rotation angle of the inverse of `exp_map`: U = (cos θ, sin θ n̂) ↦ θ n̂.
    #[inline]
    pub fn log_map(&self) -> AlgebraElement {
        let v = [self.q[1], self.q[2], self.q[3]];
        let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let theta = vn.atan2(self.q[0]);
        // θ / sin θ, with the series for small angles.
        let scale = if vn < 1e-9 {
            if self.q[0] >= 0.0 {
                1.0 + theta * theta / 6.0
            } else {
                // Near −identity the axis is ill-conditioned but the map is
                // still defined; sin θ ≈ vn.
                theta / vn.max(f64::MIN_POSITIVE)
            }
        } else {
            theta / vn
        };
        AlgebraElement { x: [v[0] * scale, v[1] * scale, v[2] * scale] }
    }

    /// Distance from the identity in the quaternion embedding.
    pub fn deviation_from_identity(&self) -> f64 {
        let [a, b, c, d] = self.q;
        ((a - 1.0) * (a - 1.0) + b * b + c * c + d * d).sqrt()
    }
}

impl std::ops::Mul for GroupElement {
    type Output = GroupElement;
    #[inline(always)]
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.multiply(&rhs)
    }
}

/// Traceless anti-Hermitian 2×2 matrix, stored as coordinates `x` in the
/// basis `iσ_k/√2`, orthonormal under `⟨X,Y⟩ = −tr(XY)`: `⟨X,X⟩ = Σ x_k²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgebraElement {
    pub x: [f64; 3],
}

impl AlgebraElement {
    pub const ZERO: AlgebraElement = AlgebraElement { x: [0.0; 3] };

    #[inline]
    pub fn new(x: [f64; 3]) -> Self {
        Self { x }
    }

    #[inline(always)]
    pub fn inner(&self, rhs: &AlgebraElement) -> f64 {
        self.x[0] * rhs.x[0] + self.x[1] * rhs.x[1] + self.x[2] * rhs.x[2]
    }

    #[inline(always)]
    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    #[inline(always)]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn scale(&self, c: f64) -> AlgebraElement {
        AlgebraElement { x: [self.x[0] * c, self.x[1] * c, self.x[2] * c] }
    }

    #[inline]
    pub fn add(&self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            x: [self.x[0] + rhs.x[0], self.x[1] + rhs.x[1], self.x[2] + rhs.x[2]],
        }
    }

    /// Group exponential in coefficient coordinates:
    /// `exp_map(x) = cos|x|·I + i sin|x| x̂·σ`. Exactly unit norm; `|x| = π`
    /// about any axis gives −identity.
    #[inline]
    pub fn exp_map(&self) -> GroupElement {
        let t2 = self.norm_sq();
        let t = t2.sqrt();
        let (c, s_over_t) = if t < 1e-8 {
            // cos t ≈ 1 − t²/2, sin t / t ≈ 1 − t²/6; renormalized below.
            (1.0 - 0.5 * t2, 1.0 - t2 / 6.0)
        } else {
            (t.cos(), t.sin() / t)
        };
        GroupElement {
            q: [c, self.x[0] * s_over_t, self.x[1] * s_over_t, self.x[2] * s_over_t],
        }
        .normalized()
    }
}

/// A general 2×2 complex matrix, row-major, for the projection contract.
/// Entry `m[r][c] = (re, im)`.
pub type ComplexMatrix2 = [[(f64, f64); 2]; 2];

/// Project a 2×2 complex matrix onto the algebra: anti-Hermitian part
/// `(m − m†)/2` minus its trace part, expressed in the `iσ_k/√2` basis.
/// Idempotent on matrices already in the algebra.
pub fn project_algebra(m: &ComplexMatrix2) -> AlgebraElement {
    // s = (m − m†)/2 is anti-Hermitian; remove the trace to land in su(2).
    let s00 = ((m[0][0].0 - m[0][0].0) / 2.0, (m[0][0].1 + m[0][0].1) / 2.0);
    let s11 = ((m[1][1].0 - m[1][1].0) / 2.0, (m[1][1].1 + m[1][1].1) / 2.0);
    let s01 = ((m[0][1].0 - m[1][0].0) / 2.0, (m[0][1].1 + m[1][0].1) / 2.0);
    let s10 = ((m[1][0].0 - m[0][1].0) / 2.0, (m[1][0].1 + m[0][1].1) / 2.0);
    let tr_im = (s00.1 + s11.1) / 2.0;
    // Traceless anti-Hermitian: X = i(v1σ1 + v2σ2 + v3σ3) has entries
    // [[i v3, i v1 + v2], [i v1 − v2, −i v3]].
    let v3 = s00.1 - tr_im;
    let v1 = (s01.1 + s10.1) / 2.0;
    let v2 = (s01.0 - s10.0) / 2.0;
    AlgebraElement { x: [v1 * SQRT_2, v2 * SQRT_2, v3 * SQRT_2] }
}

/// Matrix form of an algebra element, for oracle tests against explicit
/// complex arithmetic.
pub fn algebra_to_matrix(x: &AlgebraElement) -> ComplexMatrix2 {
    let v = [x.x[0] / SQRT_2, x.x[1] / SQRT_2, x.x[2] / SQRT_2];
    [
        [(0.0, v[2]), (v[1], v[0])],
        [(-v[1], v[0]), (0.0, -v[2])],
    ]
}

/// Matrix form of a group element.
pub fn group_to_matrix(u: &GroupElement) -> ComplexMatrix2 {
    let [q0, q1, q2, q3] = u.q;
    [
        [(q0, q3), (q2, q1)],
        [(-q2, q1), (q0, -q3)],
    ]
}

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Deterministic chunked sum: fixed 4096-element chunks are reduced in
/// parallel, partials are folded in index order, so the result is independent
/// of thread count.
pub fn det_sum(values: &[f64]) -> f64 {
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    if values.len() <= CHUNK {
        return values.iter().sum();
    }
    values
        .par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Reduction strategy for the big site sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduction {
    /// Fixed chunk order, bit-reproducible across thread counts.
    Deterministic,
    /// rayon-native summation; faster, order not reproducible.
    Fast,
}

impl Default for Reduction {
    fn default() -> Self {
        Reduction::Deterministic
    }
}

pub fn reduce_sum(values: &[f64], mode: Reduction) -> f64 {
    use rayon::prelude::*;
    match mode {
        Reduction::Deterministic => det_sum(values),
        Reduction::Fast => values.par_iter().sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Multiply two complex 2×2 matrices; the independent oracle for the
    /// quaternion product.
    fn matmul(a: &ComplexMatrix2, b: &ComplexMatrix2) -> ComplexMatrix2 {
        let mut out = [[(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                let mut re = 0.0;
                let mut im = 0.0;
                for k in 0..2 {
                    re += a[r][k].0 * b[k][c].0 - a[r][k].1 * b[k][c].1;
                    im += a[r][k].0 * b[k][c].1 + a[r][k].1 * b[k][c].0;
                }
                out[r][c] = (re, im);
            }
        }
        out
    }

    fn mat_close(a: &ComplexMatrix2, b: &ComplexMatrix2, tol: f64) -> bool {
        (0..2).all(|r| {
            (0..2).all(|c| (a[r][c].0 - b[r][c].0).abs() < tol && (a[r][c].1 - b[r][c].1).abs() < tol)
        })
    }

    fn arb_unit() -> impl Strategy<Value = GroupElement> {
        [-1.0f64..1.0, -1.0..1.0, -1.0..1.0, -1.0..1.0]
            .prop_filter_map("nonzero", |q| {
                let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
                (n > 1e-3).then(|| GroupElement::new([q[0] / n, q[1] / n, q[2] / n, q[3] / n]))
            })
    }

    fn arb_algebra(scale: f64) -> impl Strategy<Value = AlgebraElement> {
        [-1.0f64..1.0, -1.0..1.0, -1.0..1.0]
            .prop_map(move |x| AlgebraElement::new([x[0] * scale, x[1] * scale, x[2] * scale]))
    }

    #[test]
    fn linearize_roundtrip_non_cubic() {
        let g = LatticeGeometry::new([4, 5, 6, 7], 1.0).unwrap();
        for s in 0..g.num_sites() {
            assert_eq!(g.linearize(g.delinearize(s)), s);
        }
    }

    #[test]
    fn neighbor_map_periodic() {
        let g = LatticeGeometry::new([4, 5, 6, 7], 1.0).unwrap();
        for s in (0..g.num_sites()).step_by(7) {
            for mu in 0..NDIM {
                assert_eq!(g.shift(s, mu, g.dims[mu] as isize), s);
                assert_eq!(g.shift(g.shift(s, mu, 1), mu, -1), s);
            }
        }
    }

    #[test]
    fn dims_below_four_rejected() {
        assert!(LatticeGeometry::new([3, 4, 4, 4], 1.0).is_err());
        assert!(LatticeGeometry::new([4, 4, 4, 4], 0.0).is_err());
    }

    #[test]
    fn identity_multiplication() {
        let u = GroupElement::new([0.6, 0.0, 0.8, 0.0]);
        assert_eq!(GroupElement::IDENTITY * u, u);
        assert_eq!(u * GroupElement::IDENTITY, u);
    }

    #[test]
    fn angle_addition_about_sigma3() {
        // (cos θ + iσ3 sin θ)(cos φ + iσ3 sin φ) should rotate by θ+φ; the
        // expected values come from direct trig evaluation.
        let theta = 0.37f64;
        let phi = 1.21f64;
        let u = GroupElement::new([theta.cos(), 0.0, 0.0, theta.sin()]);
        let v = GroupElement::new([phi.cos(), 0.0, 0.0, phi.sin()]);
        let w = u * v;
        assert_abs_diff_eq!(w.q[0], (theta + phi).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(w.q[3], (theta + phi).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(w.q[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn exp_map_special_values() {
        assert_eq!(AlgebraElement::ZERO.exp_map(), GroupElement::IDENTITY);
        let pi_sigma3 = AlgebraElement::new([0.0, 0.0, std::f64::consts::PI]);
        let u = pi_sigma3.exp_map();
        assert_abs_diff_eq!(u.q[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.q[3], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn project_algebra_examples() {
        // Identity is pure trace: projects to zero.
        let id = group_to_matrix(&GroupElement::IDENTITY);
        assert_eq!(project_algebra(&id).norm(), 0.0);

        // diag(i, 3i) → diag(−i, i): trace part 2i removed.
        let m: ComplexMatrix2 = [[(0.0, 1.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, 3.0)]];
        let p = project_algebra(&m);
        let back = algebra_to_matrix(&p);
        let expected: ComplexMatrix2 = [[(0.0, -1.0), (0.0, 0.0)], [(0.0, 0.0), (0.0, 1.0)]];
        assert!(mat_close(&back, &expected, 1e-14));
    }

    #[test]
    fn inner_product_matches_matrix_trace() {
        // ⟨x,x⟩ from coefficients must equal −tr(X²) computed with explicit
        // complex arithmetic.
        let x = AlgebraElement::new([0.3, -1.2, 0.77]);
        let m = algebra_to_matrix(&x);
        let sq = matmul(&m, &m);
        let neg_trace = -(sq[0][0].0 + sq[1][1].0);
        assert_abs_diff_eq!(neg_trace, x.norm_sq(), epsilon = 1e-14);
        assert_abs_diff_eq!(sq[0][0].1 + sq[1][1].1, 0.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn multiply_matches_complex_matmul(u in arb_unit(), v in arb_unit()) {
            let w = u * v;
            let oracle = matmul(&group_to_matrix(&u), &group_to_matrix(&v));
            prop_assert!(mat_close(&group_to_matrix(&w), &oracle, 1e-13));
            prop_assert!((w.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn multiply_associative(u in arb_unit(), v in arb_unit(), w in arb_unit()) {
            let a = (u * v) * w;
            let b = u * (v * w);
            for k in 0..4 {
                prop_assert!((a.q[k] - b.q[k]).abs() < 1e-13);
            }
        }

        #[test]
        fn dagger_is_inverse(u in arb_unit()) {
            let id = u * u.dagger();
            prop_assert!(id.deviation_from_identity() < 1e-12);
        }

        #[test]
        fn exp_of_opposites_cancels(x in arb_algebra(3.0)) {
            let u = x.exp_map() * x.scale(-1.0).exp_map();
            prop_assert!(u.deviation_from_identity() < 1e-12);
        }

        #[test]
        fn log_inverts_exp_inside_principal_branch(x in arb_algebra(1.5)) {
            // |x| < pi here, so exp_map is injective and log recovers x.
            let y = x.exp_map().log_map();
            for k in 0..3 {
                prop_assert!((x.x[k] - y.x[k]).abs() < 1e-10);
            }
        }

        #[test]
        fn exp_inverts_log(u in arb_unit()) {
            let v = u.log_map().exp_map();
            for k in 0..4 {
                prop_assert!((u.q[k] - v.q[k]).abs() < 1e-10);
            }
        }

        #[test]
        fn projection_idempotent(x in arb_algebra(2.0)) {
            let p = project_algebra(&algebra_to_matrix(&x));
            for k in 0..3 {
                prop_assert!((p.x[k] - x.x[k]).abs() < 1e-13);
            }
        }

        #[test]
        fn coefficient_norm_is_trace_norm(x in arb_algebra(2.0)) {
            let m = algebra_to_matrix(&x);
            let sq = matmul(&m, &m);
            let neg_trace = -(sq[0][0].0 + sq[1][1].0);
            prop_assert!((neg_trace - x.norm_sq()).abs() < 1e-13);
        }
    }

    #[test]
    fn det_sum_matches_serial() {
        let v: Vec<f64> = (0..20000).map(|i| ((i * 2654435761u64 as usize) % 997) as f64 * 1e-3).collect();
        let serial: f64 = v.iter().sum();
        assert_abs_diff_eq!(det_sum(&v), serial, epsilon = 1e-9);
    }
}
