use std::f64::consts::PI;

use homog3::flux::{cmc_flux, homology_invariance_check, CapChain, CurveChain, FluxInput};
use homog3::surface::{Immersion, Topology};
use homog3::{GroupPoint, LieVector, SpaceSpec, VectorField};

fn euclid() -> SpaceSpec {
    SpaceSpec::semidirect(0.0, 0.0, 0.0, 0.0)
}

fn unit_sphere() -> Immersion {
    Immersion::from_chart(
        |u, v| Ok(GroupPoint::semidirect(u.sin() * v.cos(), u.sin() * v.sin(), u.cos())),
        Topology::Sphere,
        (0.0, PI),
        (0.0, 2.0 * PI),
        (16, 32),
        -1.0,
    )
    .unwrap()
}

fn cylinder() -> Immersion {
    Immersion::from_chart(
        |u, v| Ok(GroupPoint::semidirect(v.cos(), v.sin(), u)),
        Topology::Cylinder,
        (-3.0, 3.0),
        (0.0, 2.0 * PI),
        (16, 32),
        -1.0,
    )
    .unwrap()
}

/// Flux of `tau -> imm(path(tau))` with a cone cap built from the chart.
fn flux_on(spec: &SpaceSpec, imm: &Immersion, path: impl Fn(f64) -> (f64, f64) + Sync + Copy, h: f64, k: VectorField, n: usize) -> f64 {
    let amb = homog3::surface::Ambient::new(spec).unwrap();
    let alpha = CurveChain::on_surface(spec, imm, path, n, 1.0).unwrap();
    let curve = |t: f64| {
        let (u, v) = path(t);
        imm.fields(&amb, u, v).map(|f| f.point)
    };
    let beta = CapChain::cone_over(spec, curve, &alpha, n / 4).unwrap();
    cmc_flux(spec, &FluxInput { alpha, beta, h, k, n: 2 }).unwrap().total
}

#[test]
fn sphere_cap_flux_vanishes() {
    for theta in [0.4, 1.0, 2.2] {
        let f = flux_on(&euclid(), &unit_sphere(), move |t| (theta, 2.0 * PI * t), 1.0, VectorField::Vertical, 128);
        assert!(f.abs() < 1e-6, "theta={theta} flux={f:e}");
    }
}

#[test]
fn cylinder_flux_is_pi_and_nonzero() {
    for n in [64, 96, 128, 256] {
        let f = flux_on(&euclid(), &cylinder(), |t| (0.0, 2.0 * PI * t), 0.5, VectorField::Vertical, n);
        assert!((f.abs() - PI).abs() < 1e-3, "n={n} flux={f}");
        assert!(f.abs() > 1.0);
    }
}

#[test]
fn plane_flux_with_horizontal_field_vanishes() {
    let plane = Immersion::from_chart(
        |u, v| Ok(GroupPoint::semidirect(u * v.cos(), u * v.sin(), 0.0)),
        Topology::Cylinder,
        (0.5, 2.0),
        (0.0, 2.0 * PI),
        (8, 16),
        1.0,
    )
    .unwrap();
    let k = VectorField::RightInvariant(LieVector::new(1.0, 0.0, 0.0));
    let f = flux_on(&euclid(), &plane, |t| (1.0, 2.0 * PI * t), 0.0, k, 128);
    assert!(f.abs() < 1e-8, "{f:e}");
}

#[test]
fn flux_is_linear_in_the_killing_field() {
    let spec = euclid();
    let imm = cylinder();
    // a tilted curve, so every term is nontrivial
    let path = |t: f64| (0.3 * (2.0 * PI * t).sin(), 2.0 * PI * t);
    let k1 = VectorField::Vertical;
    let k2 = VectorField::RightInvariant(LieVector::new(1.0, 0.0, 0.0));
    let k3 = VectorField::Rotation;
    let (a, b, c) = (0.7, -1.3, 2.1);
    let combo = VectorField::Combination(vec![(a, k1.clone()), (b, k2.clone()), (c, k3.clone())]);
    let f = |k| flux_on(&spec, &imm, path, 0.5, k, 64);
    let lhs = f(combo);
    let rhs = a * f(k1) + b * f(k2) + c * f(k3);
    assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
}

#[test]
fn tilted_curve_converges_to_pi_at_second_order() {
    let path = |t: f64| (0.4 * (2.0 * PI * t).cos(), 2.0 * PI * t);
    let err: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| (flux_on(&euclid(), &cylinder(), path, 0.5, VectorField::Vertical, n).abs() - PI).abs())
        .collect();
    for w in err.windows(2) {
        assert!(w[1] < 1e-9 || w[0] / w[1] > 3.5, "errors {err:?}");
    }
    assert!(err[2] < 1e-3);
}

#[test]
fn cylinder_circles_are_homologous() {
    let c = homology_invariance_check(&euclid(), &cylinder(), &VectorField::Vertical, |t| (0.0, 2.0 * PI * t), |t| (2.0, 2.0 * PI * t), 256).unwrap();
    assert!(c.gap < 1e-3, "{c:?}");
    assert!((c.flux1.abs() - PI).abs() < 1e-3, "{c:?}");
    // a wavy curve in the same class
    let c = homology_invariance_check(&euclid(), &cylinder(), &VectorField::Vertical, |t| (0.0, 2.0 * PI * t), |t| (1.0 + 0.5 * (4.0 * PI * t).sin(), 2.0 * PI * t), 256).unwrap();
    assert!(c.gap < 1e-3, "{c:?}");
}

#[test]
fn homology_check_rejects_non_winding_curves() {
    let r = homology_invariance_check(&euclid(), &cylinder(), &VectorField::Vertical, |t| (0.0, 2.0 * PI * t), |t| (t, 0.0), 64);
    assert!(matches!(r, Err(homog3::Error::BoundaryMismatch(_))));
    let r = homology_invariance_check(&euclid(), &unit_sphere(), &VectorField::Vertical, |t| (1.0, 2.0 * PI * t), |t| (1.0, 2.0 * PI * t), 64);
    assert!(r.is_err());
}
