//! Exhaustive enumeration of divergence-free currents via face heights.
//!
//! Currents are parametrized as `k_e = Σ_f ε_{e,f} n_f + m [e ∈ C_x] +
//! m' [e ∈ C_y]` with the reference face pinned to zero. A depth-first
//! search assigns face heights in index order; an edge enters the running
//! weight as soon as both of its faces are fixed, and any edge with
//! `|k_e| > Q` closes the branch. Every configuration with all `|k_e| ≤ Q`
//! is visited exactly once, so the result is the same truncated sum that the
//! transfer matrix contracts.
//!
//! The cost grows like the number of admissible configurations, roughly
//! `(2Q+1)^{N+1}` times a constraint fraction, which limits this evaluator to
//! `L ≤ 3` and modest `Q`.

use crate::lattice::{Loop, TorusLattice};

use super::SectorSums;

struct Search<'a> {
    heights: Vec<i64>,
    /// Edges completed when face `f` is assigned.
    completes: Vec<Vec<usize>>,
    faces: Vec<[(usize, i64); 2]>,
    winding_x: Vec<bool>,
    winding_y: Vec<bool>,
    cut: Vec<bool>,
    ratios: &'a [f64],
    log_derivs: &'a [f64],
    q: i64,
    m: i64,
    mp: i64,
    leaves: u64,
    sums: SectorSums,
}

impl Search<'_> {
    /// Current on `e` with the contribution of `skip` left out.
    fn partial_current(&self, e: usize, skip: usize) -> i64 {
        let [(f1, s1), (f2, s2)] = self.faces[e];
        let mut k = if self.winding_x[e] { self.m } else { 0 }
            + if self.winding_y[e] { self.mp } else { 0 };
        if f1 != skip {
            k += s1 * self.heights[f1];
        }
        if f2 != skip {
            k += s2 * self.heights[f2];
        }
        k
    }

    fn sign_of(&self, e: usize, face: usize) -> i64 {
        let [(f1, s1), (_, s2)] = self.faces[e];
        if f1 == face { s1 } else { s2 }
    }

    fn visit(&mut self, face: usize, weight: f64, dsum: f64, cut: i64) {
        if face == self.heights.len() {
            self.leaves += 1;
            self.sums.add(cut, weight, weight * dsum);
            return;
        }
        // the first completed edge pins the admissible height window
        let first = self.completes[face][0];
        let s = self.sign_of(first, face);
        let rest = self.partial_current(first, face);
        // |s·h + rest| ≤ Q with s = ±1
        let (lo, hi) = if s > 0 {
            (-self.q - rest, self.q - rest)
        } else {
            (rest - self.q, rest + self.q)
        };
        'heights: for h in lo..=hi {
            self.heights[face] = h;
            let mut w = weight;
            let mut d = dsum;
            let mut k_cut = cut;
            for i in 0..self.completes[face].len() {
                let e = self.completes[face][i];
                let k = self.partial_current(e, usize::MAX);
                if k.abs() > self.q {
                    continue 'heights;
                }
                let a = k.unsigned_abs() as usize;
                w *= self.ratios[a];
                d += self.log_derivs[a];
                if self.cut[e] {
                    k_cut += k;
                }
            }
            if w > 0.0 {
                self.visit(face + 1, w, d, k_cut);
            }
        }
        self.heights[face] = 0;
    }
}

/// Sector sums of `Π_e I_{k_e}/I_0` over all currents with `|k_e| ≤ q`,
/// plus the number of configurations visited. `ratios[k] = I_k/I_0` and
/// `log_derivs[k] = I_k'/I_k` for `k ≤ q`.
pub(crate) fn sector_sums(
    lat: &TorusLattice,
    q: u32,
    ratios: &[f64],
    log_derivs: &[f64],
) -> (SectorSums, u64) {
    let nf = lat.num_faces();
    let ne = lat.num_edges();
    let mut completes = vec![Vec::new(); nf];
    let mut faces = Vec::with_capacity(ne);
    for (e, edge) in lat.edges().iter().enumerate() {
        let [(f1, s1), (f2, s2)] = edge.faces;
        completes[f1.max(f2)].push(e);
        faces.push([(f1, i64::from(s1)), (f2, i64::from(s2))]);
    }
    let mask = |which: Loop| {
        let mut m = vec![false; ne];
        for &e in lat.loop_edges(which) {
            m[e] = true;
        }
        m
    };
    let qi = i64::from(q);
    // the windings equal the net currents through the two dual cuts
    let wmax = qi * lat.size() as i64;
    let mut search = Search {
        heights: vec![0; nf],
        completes,
        faces,
        winding_x: mask(Loop::Cx),
        winding_y: mask(Loop::Cy),
        cut: mask(Loop::ByBar),
        ratios,
        log_derivs,
        q: qi,
        m: 0,
        mp: 0,
        leaves: 0,
        sums: SectorSums::default(),
    };
    for m in -wmax..=wmax {
        for mp in -wmax..=wmax {
            search.m = m;
            search.mp = mp;
            search.visit(1, 1.0, 0.0, 0);
        }
    }
    (search.sums, search.leaves)
}
