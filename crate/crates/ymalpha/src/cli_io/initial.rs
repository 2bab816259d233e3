//! Initial-condition construction: flat, counter-seeded random, BPST
//! instanton, abelian background waves, and link-product superpositions.

use serde::{Deserialize, Serialize};

use crate::fields::LinkField;
use crate::geometry::{AlgebraElement, DomainError, GroupElement, LatticeGeometry, Result, NDIM};
use crate::util::counter_gaussian;

/// Initial-condition specification, as parsed from run configs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum InitialCondition {
    Flat,
    /// Links exp(amplitude · gaussian algebra element), counter-seeded by
    /// (seed, site, direction): order-independent generation.
    Random { seed: u64, amplitude: f64 },
    /// BPST profile in singular gauge. `center` in lattice units (fractional
    /// values keep the gauge singularity between sites), `rho` physical.
    /// `orientation` +1 for charge +1, −1 for the parity mirror.
    Instanton { center: [f64; NDIM], rho: f64, orientation: i8 },
    /// Smooth abelian background: U_mu = exp(i σ3 amplitude sin(2π mode x_axis / L_axis)).
    AbelianWave { mu: usize, axis: usize, mode: i32, amplitude: f64 },
    /// Link-wise group product of the parts, in order.
    Superposition(Vec<InitialCondition>),
}

pub fn random_field(geometry: LatticeGeometry, seed: u64, amplitude: f64) -> LinkField {
    LinkField::from_fn(geometry, move |s, mu| {
        let key = (s * NDIM + mu) as u64;
        AlgebraElement::new([
            amplitude * counter_gaussian(seed, key, 0),
            amplitude * counter_gaussian(seed, key, 1),
            amplitude * counter_gaussian(seed, key, 2),
        ])
        .exp_map()
    })
}

/// Smooth radial cutoff: 1 inside r1, quintic-smooth to 0 at r2.
#[inline]
fn window(r: f64, r1: f64, r2: f64) -> f64 {
    if r <= r1 {
        1.0
    } else if r >= r2 {
        0.0
    } else {
        let s = (r - r1) / (r2 - r1);
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Discretized BPST instanton on the torus, built in two gauges: regular
/// gauge inside a transition radius (the core winding lives in smooth links)
/// and singular gauge outside (the ρ²/r³ tail is windowed to the identity
/// before the seam), glued by the exact sitewise hedgehog gauge rotation.
/// Links are path-ordered products of segment midpoint exponentials.
/// Measured charge approaches `orientation` and the action approaches 8π²
/// under refinement.
pub fn make_instanton(
    geometry: LatticeGeometry,
    center: [f64; NDIM],
    rho: f64,
    orientation: i8,
) -> Result<LinkField> {
    make_instanton_with_window(geometry, center, rho, orientation, true)
}

/// `make_instanton` with the seam window selectable; windowless builds keep
/// the full ρ²/r³ tail to the minimal-image boundary (used when several
/// lumps share the lattice and cancel each other's tails).
pub fn make_instanton_with_window(
    geometry: LatticeGeometry,
    center: [f64; NDIM],
    rho: f64,
    orientation: i8,
    windowed: bool,
) -> Result<LinkField> {
    let a = geometry.spacing;
    if rho < a {
        return Err(DomainError(format!(
            "instanton size rho = {rho} below lattice spacing {a}: unresolvable"
        )));
    }
    if orientation != 1 && orientation != -1 {
        return Err(DomainError(format!("instanton orientation must be ±1, got {orientation}")));
    }
    for (k, &c) in center.iter().enumerate() {
        if !(0.0 <= c && c < geometry.dims[k] as f64) {
            return Err(DomainError(format!(
                "instanton center component {k} = {c} outside lattice [0, {})",
                geometry.dims[k]
            )));
        }
    }
    let orient = f64::from(orientation);
    let min_extent = geometry.dims.iter().cloned().min().unwrap() as f64 * a;
    let (r1, r2) = if windowed {
        (0.37 * min_extent, 0.48 * min_extent)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let transition = (3.0 * rho).min(0.75 * r1).max(2.0 * a);
    let geo = geometry.clone();

    // Physical minimal-image displacement of a fractional lattice position.
    let displacement = move |geo: &LatticeGeometry, pos: &[f64; NDIM]| -> ([f64; NDIM], f64) {
        let mut d = [0.0; NDIM];
        let mut rr = 0.0;
        for k in 0..NDIM {
            let l = geo.dims[k] as f64;
            let mut delta = pos[k] - center[k];
            delta -= l * (delta / l).round();
            d[k] = delta * a;
            rr += d[k] * d[k];
        }
        (d, rr)
    };

    // Hedgehog u(x) = (d0 ± i d·σ)/r; the sign carries the orientation.
    let hedgehog = move |d: &[f64; NDIM], rr: f64| -> GroupElement {
        let r = rr.sqrt().max(1e-300);
        GroupElement::new([d[0] / r, orient * d[1] / r, orient * d[2] / r, orient * d[3] / r])
    };
    // ∂_mu u as a (non-unit) quaternion.
    let hedgehog_deriv = move |d: &[f64; NDIM], rr: f64, mu: usize| -> GroupElement {
        let r = rr.sqrt().max(1e-300);
        let mut e = [0.0; 4];
        e[if mu == 0 { 0 } else { mu }] = if mu == 0 { 1.0 } else { orient };
        let u = [d[0] / r, orient * d[1] / r, orient * d[2] / r, orient * d[3] / r];
        GroupElement::new([
            e[0] / r - d[mu] / rr * u[0],
            e[1] / r - d[mu] / rr * u[1],
            e[2] / r - d[mu] / rr * u[2],
            e[3] / r - d[mu] / rr * u[3],
        ])
    };

    // Rotation 3-vector of the connection at a fractional position.
    // Regular gauge: A = r²/(r²+ρ²) · u ∂u†, smooth through the center.
    // Singular gauge: A = ρ²/(r²+ρ²) · u† ∂u, windowed before the seam;
    // the two are related by the sitewise gauge rotation u itself.
    let connection = move |geo: &LatticeGeometry, pos: &[f64; NDIM], mu: usize, regular: bool| -> [f64; 3] {
        let (d, rr) = displacement(geo, pos);
        if rr < 1e-24 {
            return [0.0; 3];
        }
        let u = hedgehog(&d, rr);
        let du = hedgehog_deriv(&d, rr, mu);
        let (q, f) = if regular {
            (u * du.dagger(), rr / (rr + rho * rho))
        } else {
            let chi = window(rr.sqrt(), r1, r2);
            (u.dagger() * du, chi * rho * rho / (rr + rho * rho))
        };
        [q.q[1] * f, q.q[2] * f, q.q[3] * f]
    };

    // Path-ordered product of segment midpoint exponentials along the link.
    const SEGMENTS: usize = 8;
    let wilson_line = move |geo: &LatticeGeometry, x: &[usize; NDIM], mu: usize, regular: bool| {
        let mut u = GroupElement::IDENTITY;
        let step = a / SEGMENTS as f64;
        for seg in (0..SEGMENTS).rev() {
            let frac = (seg as f64 + 0.5) / SEGMENTS as f64;
            let mut pos = [0.0; NDIM];
            for k in 0..NDIM {
                pos[k] = x[k] as f64 + if k == mu { frac } else { 0.0 };
            }
            let c = connection(geo, &pos, mu, regular);
            // Earlier segments act first (rightmost factor).
            u = AlgebraElement::new([c[0] * step, c[1] * step, c[2] * step])
                .exp_map()
                .multiply(&u);
        }
        u
    };

    Ok(LinkField::from_fn(geometry, move |s, mu| {
        let x = geo.delinearize(s);
        let mut y = x;
        y[mu] = (y[mu] + 1) % geo.dims[mu];
        let posx = [x[0] as f64, x[1] as f64, x[2] as f64, x[3] as f64];
        let posy = [y[0] as f64, y[1] as f64, y[2] as f64, y[3] as f64];
        let (dx, rrx) = displacement(&geo, &posx);
        let (dy, rry) = displacement(&geo, &posy);
        let inside_x = rrx.sqrt() < transition;
        let inside_y = rry.sqrt() < transition;
        let u = if inside_x && inside_y {
            wilson_line(&geo, &x, mu, true)
        } else if !inside_x && !inside_y {
            wilson_line(&geo, &x, mu, false)
        } else {
            // Straddling link: conjugate the regular-gauge line into the
            // singular gauge on whichever end is outside.
            let w = wilson_line(&geo, &x, mu, true);
            let sx = if inside_x { GroupElement::IDENTITY } else { hedgehog(&dx, rrx) };
            let sy = if inside_y { GroupElement::IDENTITY } else { hedgehog(&dy, rry) };
            sx.dagger() * w * sy
        };
        u.normalized()
    }))
}

/// Periodic abelian wave on the `mu` links, varying along `axis`.
pub fn abelian_wave(
    geometry: LatticeGeometry,
    mu: usize,
    axis: usize,
    mode: i32,
    amplitude: f64,
) -> Result<LinkField> {
    if mu >= NDIM || axis >= NDIM {
        return Err(DomainError(format!("abelian wave axes out of range: mu={mu} axis={axis}")));
    }
    let geo = geometry.clone();
    Ok(LinkField::from_fn(geometry, move |s, m| {
        if m != mu {
            return GroupElement::IDENTITY;
        }
        let x = geo.delinearize(s);
        let phase =
            2.0 * std::f64::consts::PI * mode as f64 * x[axis] as f64 / geo.dims[axis] as f64;
        AlgebraElement::new([0.0, 0.0, amplitude * phase.sin()]).exp_map()
    }))
}

/// Build a configuration from its specification.
pub fn build_initial(geometry: &LatticeGeometry, spec: &InitialCondition) -> Result<LinkField> {
    match spec {
        InitialCondition::Flat => Ok(LinkField::flat(geometry.clone())),
        InitialCondition::Random { seed, amplitude } => {
            Ok(random_field(geometry.clone(), *seed, *amplitude))
        }
        InitialCondition::Instanton { center, rho, orientation } => {
            make_instanton(geometry.clone(), *center, *rho, *orientation)
        }
        InitialCondition::AbelianWave { mu, axis, mode, amplitude } => {
            abelian_wave(geometry.clone(), *mu, *axis, *mode, *amplitude)
        }
        InitialCondition::Superposition(parts) => {
            if parts.is_empty() {
                return Err(DomainError("superposition needs at least one part".into()));
            }
            let mut acc = build_initial(geometry, &parts[0])?;
            for part in &parts[1..] {
                let next = build_initial(geometry, part)?;
                let links = acc
                    .links()
                    .iter()
                    .zip(next.links())
                    .map(|(u, v)| (*u * *v).normalized())
                    .collect();
                acc = LinkField::from_links(geometry.clone(), links)?;
            }
            Ok(acc)
        }
    }
}

/// Center of the lattice offset to half-integer coordinates, the default
/// instanton placement.
pub fn centered(geometry: &LatticeGeometry) -> [f64; NDIM] {
    let mut c = [0.0; NDIM];
    for k in 0..NDIM {
        c[k] = geometry.dims[k] as f64 / 2.0 + 0.5;
    }
    c
}
