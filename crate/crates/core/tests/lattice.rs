use std::collections::HashSet;

use proptest::prelude::*;
use xyrotor::lattice::{Axis, Loop, TorusLattice, currents_from_heights};

#[test]
fn invariants_hold_for_small_tori() {
    for l in 2..=8 {
        let lat = TorusLattice::new(l).unwrap();
        assert_eq!(lat.num_vertices(), l * l);
        assert_eq!(lat.num_edges(), 2 * l * l);
        assert_eq!(lat.num_faces(), l * l);
        for e in 0..lat.num_edges() {
            let faces: Vec<i8> = (0..lat.num_faces())
                .map(|f| lat.face_sign(e, f))
                .filter(|&s| s != 0)
                .collect();
            assert_eq!(faces.len(), 2, "L={l} e={e}");
            assert_eq!(faces.iter().map(|&s| i32::from(s)).sum::<i32>(), 0);
            let edge = lat.edge(e);
            for v in 0..lat.num_vertices() {
                let expected = if v == edge.start {
                    1
                } else if v == edge.end {
                    -1
                } else {
                    0
                };
                assert_eq!(lat.vertex_sign(e, v), expected);
            }
        }
        for v in 0..lat.num_vertices() {
            for f in 0..lat.num_faces() {
                let sum: i32 = (0..lat.num_edges())
                    .map(|e| i32::from(lat.vertex_sign(e, v)) * i32::from(lat.face_sign(e, f)))
                    .sum();
                assert_eq!(sum, 0, "L={l} v={v} f={f}");
            }
        }
        for which in [Loop::Cx, Loop::Cy, Loop::BxBar, Loop::ByBar] {
            assert_eq!(lat.loop_edges(which).len(), l);
        }
        let axis_of = |which| lat.loop_edges(which).iter().map(|&e| lat.edge(e).axis).collect::<HashSet<_>>();
        assert_eq!(axis_of(Loop::Cx), HashSet::from([Axis::X]));
        assert_eq!(axis_of(Loop::ByBar), HashSet::from([Axis::X]));
        assert_eq!(lat.crossing_number(Loop::Cx, Loop::ByBar), 1);
        assert_eq!(lat.crossing_number(Loop::Cy, Loop::BxBar), 1);
        assert_eq!(lat.crossing_number(Loop::Cx, Loop::BxBar), 0);
        assert_eq!(lat.crossing_number(Loop::Cy, Loop::ByBar), 0);
        assert!(lat.check_code_algebra().passed());
    }
}

#[test]
fn heights_map_is_injective_on_two_by_two() {
    let lat = TorusLattice::new(2).unwrap();
    let range = -2..=2i64;
    let mut seen = HashSet::new();
    let mut count = 0;
    for a in range.clone() {
        for b in range.clone() {
            for c in range.clone() {
                for m in range.clone() {
                    for mp in range.clone() {
                        let k = currents_from_heights(&lat, &[a, b, c], m, mp).unwrap().currents;
                        seen.insert(k);
                        count += 1;
                    }
                }
            }
        }
    }
    assert_eq!(seen.len(), count);
}

#[test]
fn cut_current_equals_winding() {
    let lat = TorusLattice::new(5).unwrap();
    let heights: Vec<i64> = (1..25).map(|i| (i * 7 % 5) - 2).collect();
    let c = currents_from_heights(&lat, &heights, 3, -2).unwrap();
    assert_eq!(c.cut_current(&lat), 3);
}

proptest! {
    #[test]
    fn random_currents_are_divergence_free(
        l in 2usize..=4,
        raw in prop::collection::vec(-50i64..50, 15),
        m in -5i64..5,
        mp in -5i64..5,
    ) {
        let lat = TorusLattice::new(l).unwrap();
        let heights = &raw[..lat.num_faces() - 1];
        let c = currents_from_heights(&lat, heights, m, mp).unwrap();
        for v in 0..lat.num_vertices() {
            prop_assert_eq!(c.divergence(&lat, v), 0);
        }
        prop_assert_eq!(c.cut_current(&lat), m);
    }
}
