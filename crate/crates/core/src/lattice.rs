//! Oriented square-lattice torus shared by the rotor code and the XY model.
//!
//! Vertices carry XY spins, edges carry rotors (and bond angles
//! `Θ_e = θ_start − θ_end`), faces carry the integer heights of the dual
//! current representation. All horizontal edges point `+x`, all vertical
//! edges point `+y`; faces circulate clockwise.
//!
//! Indexing is row-major everywhere:
//!
//! * vertex `(x, y)` → `y·L + x`
//! * face `(x, y)` (lower-left corner at vertex `(x, y)`) → `y·L + x`
//! * edge leaving vertex `v` along axis `a` → `2·v + a` (`x = 0`, `y = 1`)

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Lattice direction of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One oriented edge together with its two signed face incidences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    pub axis: Axis,
    /// `(face, ε_{e,f})` for the two faces bordering the edge.
    pub faces: [(usize, i8); 2],
}

/// The four non-contractible edge sets used by the logical operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loop {
    /// Primal loop along `x` (x-edges of row 0).
    Cx,
    /// Primal loop along `y` (y-edges of column 0).
    Cy,
    /// Edges cut by the horizontal dual loop (y-edges of row `L−1`).
    BxBar,
    /// Edges cut by the vertical dual loop (x-edges of column `L−1`).
    /// This is the twisted boundary.
    ByBar,
}

impl fmt::Display for Loop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Loop::Cx => "C_x",
            Loop::Cy => "C_y",
            Loop::BxBar => "B_xbar",
            Loop::ByBar => "B_ybar",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusLattice {
    size: usize,
    edges: Vec<Edge>,
    cx: Vec<usize>,
    cy: Vec<usize>,
    bx_bar: Vec<usize>,
    by_bar: Vec<usize>,
}

impl TorusLattice {
    /// Builds the `L × L` torus. `L = 1` would produce self-loops, so `L ≥ 2`.
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidSize { size, min: 2 });
        }
        let l = size;
        let n = l * l;
        let mut edges = Vec::with_capacity(2 * n);
        for y in 0..l {
            for x in 0..l {
                let v = y * l + x;
                // x-edge: top of the face below (+1), bottom of its own face (−1)
                edges.push(Edge {
                    start: v,
                    end: y * l + (x + 1) % l,
                    axis: Axis::X,
                    faces: [(((y + l - 1) % l) * l + x, 1), (v, -1)],
                });
                // y-edge: left side of its own face (+1), right side of the face to the left (−1)
                edges.push(Edge {
                    start: v,
                    end: ((y + 1) % l) * l + x,
                    axis: Axis::Y,
                    faces: [(v, 1), (y * l + (x + l - 1) % l, -1)],
                });
            }
        }
        let cx = (0..l).map(|x| 2 * x).collect();
        let cy = (0..l).map(|y| 2 * (y * l) + 1).collect();
        let bx_bar = (0..l).map(|x| 2 * ((l - 1) * l + x) + 1).collect();
        let by_bar = (0..l).map(|y| 2 * (y * l + l - 1)).collect();
        Ok(Self {
            size,
            edges,
            cx,
            cy,
            bx_bar,
            by_bar,
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn num_faces(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn vertex_index(&self, x: usize, y: usize) -> usize {
        (y % self.size) * self.size + x % self.size
    }

    pub fn vertex_coords(&self, v: usize) -> (usize, usize) {
        (v % self.size, v / self.size)
    }

    pub fn face_index(&self, x: usize, y: usize) -> usize {
        self.vertex_index(x, y)
    }

    pub fn face_coords(&self, f: usize) -> (usize, usize) {
        self.vertex_coords(f)
    }

    pub fn edge_index(&self, x: usize, y: usize, axis: Axis) -> usize {
        2 * self.vertex_index(x, y) + usize::from(axis == Axis::Y)
    }

    /// Lower-left vertex coordinates and axis of an edge.
    pub fn edge_coords(&self, e: usize) -> (usize, usize, Axis) {
        let (x, y) = self.vertex_coords(e / 2);
        (x, y, self.edges[e].axis)
    }

    /// Face incidence `ε_{e,f}`.
    pub fn face_sign(&self, e: usize, f: usize) -> i8 {
        self.edges[e]
            .faces
            .iter()
            .filter(|&&(face, _)| face == f)
            .map(|&(_, s)| s)
            .sum()
    }

    /// Vertex incidence `ε_{e,v}`: `+1` at the start of `e`, `−1` at its end.
    pub fn vertex_sign(&self, e: usize, v: usize) -> i8 {
        let edge = &self.edges[e];
        i8::from(edge.start == v) - i8::from(edge.end == v)
    }

    /// Signed boundary of a face, `(edge, ε_{e,f})`.
    pub fn face_boundary(&self, f: usize) -> [(usize, i8); 4] {
        let (x, y) = self.face_coords(f);
        let l = self.size;
        [
            (self.edge_index(x, (y + 1) % l, Axis::X), 1),
            (self.edge_index((x + 1) % l, y, Axis::Y), -1),
            (self.edge_index(x, y, Axis::X), -1),
            (self.edge_index(x, y, Axis::Y), 1),
        ]
    }

    /// Signed star of a vertex, `(edge, ε_{e,v})`.
    pub fn vertex_star(&self, v: usize) -> [(usize, i8); 4] {
        let (x, y) = self.vertex_coords(v);
        let l = self.size;
        [
            (self.edge_index(x, y, Axis::X), 1),
            (self.edge_index(x, y, Axis::Y), 1),
            (self.edge_index((x + l - 1) % l, y, Axis::X), -1),
            (self.edge_index(x, (y + l - 1) % l, Axis::Y), -1),
        ]
    }

    pub fn loop_edges(&self, which: Loop) -> &[usize] {
        match which {
            Loop::Cx => &self.cx,
            Loop::Cy => &self.cy,
            Loop::BxBar => &self.bx_bar,
            Loop::ByBar => &self.by_bar,
        }
    }

    /// Twist indicator `δ_e`: 1 on the twisted boundary `B_ȳ`.
    pub fn is_twisted(&self, e: usize) -> bool {
        let (x, _, axis) = self.edge_coords(e);
        axis == Axis::X && x == self.size - 1
    }

    /// Number of edges shared by two loops.
    pub fn crossing_number(&self, a: Loop, b: Loop) -> usize {
        let lb = self.loop_edges(b);
        self.loop_edges(a).iter().filter(|e| lb.contains(e)).count()
    }

    /// Flips the sign of `ε_{e,f}`. Only useful for fault-injection tests of
    /// [`TorusLattice::check_code_algebra`].
    pub fn flip_face_sign(&mut self, e: usize, f: usize) {
        for entry in self.edges[e].faces.iter_mut() {
            if entry.0 == f {
                entry.1 = -entry.1;
            }
        }
    }

    /// Verifies stabilizer commutation, logical crossing numbers and the
    /// face-stabilizer redundancy directly from the stored incidence tables.
    pub fn check_code_algebra(&self) -> AlgebraReport {
        let nf = self.num_faces();
        // Σ_e ε_{e,v} ε_{e,f}, accumulated only over edges touching both.
        let mut sums = std::collections::BTreeMap::<(usize, usize), i32>::new();
        let mut redundancy = Vec::new();
        for (e, edge) in self.edges.iter().enumerate() {
            let mut chain = 0i32;
            for &(f, s) in &edge.faces {
                chain += i32::from(s);
                *sums.entry((edge.start, f)).or_default() += i32::from(s);
                *sums.entry((edge.end, f)).or_default() -= i32::from(s);
            }
            if chain != 0 {
                redundancy.push(e);
            }
        }
        let commutation = sums
            .into_iter()
            .filter(|&(_, s)| s != 0)
            .map(|((vertex, face), sum)| CommutationViolation { vertex, face, sum })
            .collect();

        let mut crossings = Vec::new();
        for (primal, dual) in [
            (Loop::Cx, Loop::ByBar),
            (Loop::Cy, Loop::BxBar),
            (Loop::Cx, Loop::BxBar),
            (Loop::Cy, Loop::ByBar),
        ] {
            let expected = usize::from(
                matches!((primal, dual), (Loop::Cx, Loop::ByBar) | (Loop::Cy, Loop::BxBar)),
            );
            let found = self.crossing_number(primal, dual);
            let len_ok = self.loop_edges(primal).len() == self.size
                && self.loop_edges(dual).len() == self.size;
            if found != expected || !len_ok {
                crossings.push(CrossingViolation {
                    primal,
                    dual,
                    expected,
                    found,
                });
            }
        }

        AlgebraReport {
            size: self.size,
            pairs_checked: self.num_vertices() * nf,
            commutation,
            crossings,
            redundancy,
        }
    }
}

/// A vertex-face pair whose stabilizers fail to commute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommutationViolation {
    pub vertex: usize,
    pub face: usize,
    pub sum: i32,
}

/// A logical loop pair with the wrong intersection count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingViolation {
    pub primal: Loop,
    pub dual: Loop,
    pub expected: usize,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraReport {
    pub size: usize,
    pub pairs_checked: usize,
    pub commutation: Vec<CommutationViolation>,
    pub crossings: Vec<CrossingViolation>,
    /// Edges where `Σ_f ε_{e,f} ≠ 0`.
    pub redundancy: Vec<usize>,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.commutation.is_empty() && self.crossings.is_empty() && self.redundancy.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Algebra(Box::new(self)))
        }
    }
}

impl fmt::Display for AlgebraReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "[{}] vertex-face commutation ({} pairs)",
            mark(self.commutation.is_empty()),
            self.pairs_checked
        )?;
        for v in &self.commutation {
            writeln!(f, "    vertex {} / face {}: sum {}", v.vertex, v.face, v.sum)?;
        }
        writeln!(
            f,
            "[{}] logical crossing numbers",
            mark(self.crossings.is_empty())
        )?;
        for c in &self.crossings {
            writeln!(
                f,
                "    {} x {}: expected {}, found {}",
                c.primal, c.dual, c.expected, c.found
            )?;
        }
        write!(
            f,
            "[{}] face-stabilizer redundancy",
            mark(self.redundancy.is_empty())
        )?;
        for e in &self.redundancy {
            write!(f, "\n    edge {e}: boundary chains do not cancel")?;
        }
        Ok(())
    }
}

/// Divergence-free integer currents built from face heights and windings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentConfig {
    /// One height per face; the reference face 0 is pinned to 0.
    pub heights: Vec<i64>,
    pub winding_x: i64,
    pub winding_y: i64,
    pub currents: Vec<i64>,
}

impl CurrentConfig {
    /// `Σ_e ε_{e,v} k_e`.
    pub fn divergence(&self, lat: &TorusLattice, v: usize) -> i64 {
        lat.vertex_star(v)
            .iter()
            .map(|&(e, s)| i64::from(s) * self.currents[e])
            .sum()
    }

    /// Net current through the twisted boundary `B_ȳ`.
    pub fn cut_current(&self, lat: &TorusLattice) -> i64 {
        lat.loop_edges(Loop::ByBar)
            .iter()
            .map(|&e| self.currents[e])
            .sum()
    }
}

/// `k_e = Σ_f ε_{e,f} n_f + m·[e ∈ C_x] + m'·[e ∈ C_y]`, with `heights`
/// indexed by the non-reference faces `1..N`.
pub fn currents_from_heights(
    lat: &TorusLattice,
    heights: &[i64],
    winding_x: i64,
    winding_y: i64,
) -> Result<CurrentConfig> {
    let nf = lat.num_faces();
    if heights.len() != nf - 1 {
        return Err(Error::InvalidParameter {
            name: "heights",
            reason: format!("expected {} values, got {}", nf - 1, heights.len()),
        });
    }
    let mut all = Vec::with_capacity(nf);
    all.push(0);
    all.extend_from_slice(heights);
    let mut currents: Vec<i64> = lat
        .edges()
        .iter()
        .map(|edge| edge.faces.iter().map(|&(f, s)| i64::from(s) * all[f]).sum())
        .collect();
    for &e in lat.loop_edges(Loop::Cx) {
        currents[e] += winding_x;
    }
    for &e in lat.loop_edges(Loop::Cy) {
        currents[e] += winding_y;
    }
    Ok(CurrentConfig {
        heights: all,
        winding_x,
        winding_y,
        currents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_on_2x2() {
        let lat = TorusLattice::new(2).unwrap();
        assert_eq!(lat.num_vertices(), 4);
        assert_eq!(lat.num_edges(), 8);
        assert_eq!(lat.num_faces(), 4);
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(matches!(TorusLattice::new(1), Err(Error::InvalidSize { .. })));
        assert!(matches!(TorusLattice::new(0), Err(Error::InvalidSize { .. })));
    }

    #[test]
    fn cx_is_horizontal() {
        let lat = TorusLattice::new(4).unwrap();
        let cx = lat.loop_edges(Loop::Cx);
        assert_eq!(cx.len(), 4);
        assert!(cx.iter().all(|&e| lat.edge(e).axis == Axis::X));
    }

    #[test]
    fn dense_commutation_l3() {
        let lat = TorusLattice::new(3).unwrap();
        for v in 0..9 {
            for f in 0..9 {
                let s: i32 = (0..lat.num_edges())
                    .map(|e| i32::from(lat.vertex_sign(e, v)) * i32::from(lat.face_sign(e, f)))
                    .sum();
                assert_eq!(s, 0, "v={v} f={f}");
            }
        }
    }

    #[test]
    fn boundary_and_star_agree_with_edge_table() {
        for l in 2..6 {
            let lat = TorusLattice::new(l).unwrap();
            for f in 0..lat.num_faces() {
                for (e, s) in lat.face_boundary(f) {
                    assert_eq!(lat.face_sign(e, f), s);
                }
            }
            for v in 0..lat.num_vertices() {
                for (e, s) in lat.vertex_star(v) {
                    assert_eq!(lat.vertex_sign(e, v), s);
                }
            }
        }
    }

    #[test]
    fn algebra_passes() {
        for l in [2, 5] {
            let report = TorusLattice::new(l).unwrap().check_code_algebra();
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn corrupted_incidence_is_localized() {
        let mut lat = TorusLattice::new(4).unwrap();
        let e = lat.edge_index(1, 2, Axis::Y);
        let (f, _) = lat.edge(e).faces[0];
        lat.flip_face_sign(e, f);
        let report = lat.check_code_algebra();
        assert!(!report.passed());
        let mut pairs: Vec<_> = report.commutation.iter().map(|c| (c.vertex, c.face)).collect();
        pairs.sort();
        let mut expected = vec![(lat.edge(e).start, f), (lat.edge(e).end, f)];
        expected.sort();
        assert_eq!(pairs, expected);
        assert_eq!(report.redundancy, vec![e]);
        assert!(report.into_result().is_err());
    }

    #[test]
    fn twist_indicator_matches_cut() {
        let lat = TorusLattice::new(5).unwrap();
        let twisted: Vec<_> = (0..lat.num_edges()).filter(|&e| lat.is_twisted(e)).collect();
        assert_eq!(twisted, lat.loop_edges(Loop::ByBar));
    }

    #[test]
    fn zero_heights_give_zero_currents() {
        let lat = TorusLattice::new(3).unwrap();
        let c = currents_from_heights(&lat, &[0; 8], 0, 0).unwrap();
        assert!(c.currents.iter().all(|&k| k == 0));
    }

    #[test]
    fn constant_heights_ring_the_reference_face() {
        let lat = TorusLattice::new(4).unwrap();
        let c = currents_from_heights(&lat, &[3; 15], 0, 0).unwrap();
        let ring = lat.face_boundary(0);
        for (e, &k) in c.currents.iter().enumerate() {
            match ring.iter().find(|&&(re, _)| re == e) {
                // reference face sits at 0 while all others sit at 3
                Some(&(_, s)) => assert_eq!(k, -3 * i64::from(s), "edge {e}"),
                None => assert_eq!(k, 0, "edge {e}"),
            }
        }
    }

    #[test]
    fn unit_winding_on_2x2() {
        let lat = TorusLattice::new(2).unwrap();
        let c = currents_from_heights(&lat, &[0; 3], 1, 0).unwrap();
        let cx = lat.loop_edges(Loop::Cx);
        for (e, &k) in c.currents.iter().enumerate() {
            assert_eq!(k, i64::from(cx.contains(&e)));
        }
        for v in 0..4 {
            assert_eq!(c.divergence(&lat, v), 0);
        }
        assert_eq!(c.cut_current(&lat), 1);
    }

    #[test]
    fn wrong_height_count_is_rejected() {
        let lat = TorusLattice::new(2).unwrap();
        assert!(currents_from_heights(&lat, &[0; 4], 0, 0).is_err());
    }
}
