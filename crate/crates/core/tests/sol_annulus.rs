//! The Sol3 invariant annulus at H = 0.3: profile loop, Gauss curve and flux.

use homog3::cmc::{gauss_curve, killing_cylinder, symmetric_loop, GaussVerdict, ProfileCurve, Slice};
use homog3::flux::homology_invariance_check;
use homog3::{LieVector, SpaceSpec, VectorField};

fn sol() -> SpaceSpec {
    SpaceSpec::semidirect(1.0, 0.0, 0.0, -1.0)
}

fn k_sigma() -> VectorField {
    VectorField::RightInvariant(LieVector::new(0.0, 0.0, 1.0))
}

fn annulus_profile() -> ProfileCurve {
    let l = symmetric_loop(&sol(), &k_sigma(), 0.3, &Slice::horizontal(), -1.0, (0.05, 100.0)).unwrap();
    assert!(l.closure_gap < 1e-8, "gap {:e}", l.closure_gap);
    assert!(l.profile.periodic);
    l.profile
}

#[test]
fn annulus_gauss_curve_is_closed_and_embedded() {
    let profile = annulus_profile();
    let imm = killing_cylinder(&profile, (0.0, 1.0), (8, 64)).unwrap();
    let g = gauss_curve(&sol(), &imm, 512).unwrap();
    assert_eq!(g.verdict, GaussVerdict::Closed { embedded: true }, "{:?}", (g.closure_gap, g.min_speed, g.separation));
    assert!(g.closure_gap < 1e-5);
    assert!(g.min_speed > 0.0);
    for p in &g.points {
        assert!((p.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn annulus_flux_is_homology_invariant() {
    let profile = annulus_profile();
    let (s0, s1) = profile.s_range;
    let imm = killing_cylinder(&profile, (0.0, 1.0), (8, 64)).unwrap();
    let curve = |t0: f64| move |tau: f64| (t0, s0 + (s1 - s0) * tau);
    for k in [k_sigma(), VectorField::RightInvariant(LieVector::new(1.0, 0.0, 0.0)), VectorField::RightInvariant(LieVector::new(0.0, 1.0, 0.0))] {
        let c = homology_invariance_check(&sol(), &imm, &k, curve(0.0), curve(0.5), 256).unwrap();
        assert!(c.gap < 1e-3, "{k:?}: {c:?}");
    }
}
