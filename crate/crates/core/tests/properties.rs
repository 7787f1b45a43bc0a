//! Property tests for the structural invariants: partitions partition,
//! serialized windows round-trip, the field evaluators agree with brute
//! force, and empirical distribution distances behave like distances.

use covertimes::geom::{circle_circle_intersections, Disk, Point, Window};
use covertimes::montecarlo::{ks_two_sample, ks_two_sample_critical};
use covertimes::processes::{
    sample_marked_poisson, truncate_marks, MarkKind, MarkedPointSet, RadiusLaw, RngSpec,
};
use proptest::prelude::*;

fn radius_law() -> impl Strategy<Value = RadiusLaw> {
    prop_oneof![
        (0.1f64..5.0).prop_map(RadiusLaw::constant),
        (0.1f64..5.0).prop_map(RadiusLaw::uniform),
        (0.2f64..4.0).prop_map(RadiusLaw::exponential),
        ((0.5f64..6.0), (0.5f64..2.0)).prop_map(|(a, m)| RadiusLaw::pareto(a, m)),
    ]
}

proptest! {
    #[test]
    fn truncation_partitions_exactly(seed in 0u64..1000, cutoff in 0.0f64..3.0, law in radius_law()) {
        let w = Window::unit_square();
        let s = sample_marked_poisson(&w, 80.0, &law, &RngSpec::new(seed, 0)).unwrap();
        let (below, above) = truncate_marks(&s, cutoff).unwrap();
        prop_assert_eq!(below.len() + above.len(), s.len());
        prop_assert!(below.marks.iter().all(|m| *m <= cutoff));
        prop_assert!(above.marks.iter().all(|m| *m > cutoff));
        // Reassembling in order reproduces the multiset of rows.
        let mut got: Vec<(u64, u64)> = below
            .points
            .iter()
            .zip(&below.marks)
            .chain(above.points.iter().zip(&above.marks))
            .map(|(p, m)| (p.x().to_bits() ^ p.y().to_bits(), m.to_bits()))
            .collect();
        let mut want: Vec<(u64, u64)> = s
            .points
            .iter()
            .zip(&s.marks)
            .map(|(p, m)| (p.x().to_bits() ^ p.y().to_bits(), m.to_bits()))
            .collect();
        got.sort_unstable();
        want.sort_unstable();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn window_json_roundtrips(cx in -5.0f64..5.0, cy in -5.0f64..5.0, r in 0.01f64..10.0) {
        let w = Window::disc([cx, cy], r).unwrap();
        let back: Window = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        prop_assert_eq!(w, back);
    }

    #[test]
    fn circle_intersections_lie_on_both(ax in -1.0f64..1.0, ay in -1.0f64..1.0,
                                        bx in -1.0f64..1.0, by in -1.0f64..1.0,
                                        ra in 0.05f64..1.5, rb in 0.05f64..1.5) {
        let a = Disk::new(Point::new2(ax, ay), ra);
        let b = Disk::new(Point::new2(bx, by), rb);
        let tol = 1e-9;
        let r = circle_circle_intersections(&a, &b, tol);
        if !r.tangent {
            for p in &r.points {
                prop_assert!((p.dist(&a.center) - ra).abs() <= 10.0 * tol);
                prop_assert!((p.dist(&b.center) - rb).abs() <= 10.0 * tol);
            }
        }
    }

    #[test]
    fn xi_spbm_matches_sort_oracle(seed in 0u64..500, k in 1u32..4, qx in 0.0f64..1.0, qy in 0.0f64..1.0) {
        let w = Window::unit_square();
        let pts = sample_marked_poisson(&w, 60.0, &RadiusLaw::uniform(1.0), &RngSpec::new(seed, 1)).unwrap();
        let q = Point::new2(qx, qy);
        let mut scaled: Vec<f64> = pts
            .points
            .iter()
            .zip(&pts.marks)
            .filter(|(_, y)| **y > 0.0)
            .map(|(p, y)| q.dist(p) / y)
            .collect();
        scaled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = scaled.get(k as usize - 1).copied().unwrap_or(f64::INFINITY);
        let got = covertimes::coverage::xi_spbm(&q, &pts, k);
        if want.is_finite() {
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        } else {
            prop_assert_eq!(got, f64::INFINITY);
        }
    }

    #[test]
    fn ks_two_sample_is_a_pseudometric(mut a in prop::collection::vec(-50.0f64..50.0, 1..60),
                                       mut b in prop::collection::vec(-50.0f64..50.0, 1..60)) {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let d_ab = ks_two_sample(&a, &b);
        let d_ba = ks_two_sample(&b, &a);
        prop_assert!((d_ab - d_ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d_ab));
        prop_assert_eq!(ks_two_sample(&a, &a), 0.0);
        prop_assert!(ks_two_sample_critical(0.01, a.len(), b.len()) > 0.0);
    }
}

#[test]
fn marked_set_mark_kinds_guard_operations() {
    let w = Window::unit_square();
    let s = MarkedPointSet {
        points: vec![Point::new2(0.5, 0.5)],
        marks: vec![0.25],
        mark_kind: MarkKind::BirthTime,
        intensity_used: 1.0,
        window_used: w,
    };
    assert!(truncate_marks(&s, 1.0).is_err());
}
