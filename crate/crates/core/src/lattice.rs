//! Open-boundary hypercubic lattices in one to three dimensions.
//!
//! Directions are zero based. Vertex indices are lexicographic with the
//! first coordinate running fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Coord = [usize; 3];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeShape {
    extents: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId {
    pub vertex: usize,
    pub dir: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlaquetteId {
    pub vertex: usize,
    pub k: usize,
    pub l: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn both() -> [Parity; 2] {
        [Parity::Even, Parity::Odd]
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl LatticeShape {
    pub fn new(extents: &[usize]) -> Result<Self> {
        if extents.is_empty() || extents.len() > 3 {
            return Err(Error::InvalidLattice(format!(
                "dimension {} not in 1..=3",
                extents.len()
            )));
        }
        if let Some(&l) = extents.iter().find(|&&l| l < 2) {
            return Err(Error::InvalidLattice(format!("extent {l} < 2")));
        }
        Ok(Self {
            extents: extents.to_vec(),
        })
    }

    pub fn cubic(d: usize, l: usize) -> Result<Self> {
        Self::new(&vec![l; d])
    }

    pub fn d(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn n_vertices(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn coord(&self, v: usize) -> Coord {
        let mut c = [0; 3];
        let mut r = v;
        for (k, &l) in self.extents.iter().enumerate() {
            c[k] = r % l;
            r /= l;
        }
        c
    }

    pub fn index(&self, c: &Coord) -> usize {
        let mut idx = 0;
        for k in (0..self.d()).rev() {
            idx = idx * self.extents[k] + c[k];
        }
        idx
    }

    /// Neighbour one step along +dir, if inside the lattice.
    pub fn step(&self, v: usize, dir: usize) -> Option<usize> {
        let mut c = self.coord(v);
        if dir >= self.d() || c[dir] + 1 >= self.extents[dir] {
            return None;
        }
        c[dir] += 1;
        Some(self.index(&c))
    }

    /// Neighbour one step along -dir, if inside the lattice.
    pub fn step_back(&self, v: usize, dir: usize) -> Option<usize> {
        let mut c = self.coord(v);
        if dir >= self.d() || c[dir] == 0 {
            return None;
        }
        c[dir] -= 1;
        Some(self.index(&c))
    }

    pub fn parity(&self, v: usize) -> Parity {
        parity_of(&self.coord(v))
    }

    pub fn link_exists(&self, link: LinkId) -> bool {
        link.vertex < self.n_vertices() && self.step(link.vertex, link.dir).is_some()
    }

    pub fn enumerate_links(&self) -> Vec<LinkId> {
        let mut out = Vec::new();
        for v in 0..self.n_vertices() {
            for dir in 0..self.d() {
                if self.step(v, dir).is_some() {
                    out.push(LinkId { vertex: v, dir });
                }
            }
        }
        out
    }

    /// Closed-form link count sum_k (L_k - 1) prod_{j != k} L_j.
    pub fn link_count(&self) -> usize {
        (0..self.d())
            .map(|k| {
                (self.extents[k] - 1)
                    * (0..self.d())
                        .filter(|&j| j != k)
                        .map(|j| self.extents[j])
                        .product::<usize>()
            })
            .sum()
    }

    pub fn plaquette_exists(&self, p: PlaquetteId) -> bool {
        p.k < p.l
            && p.l < self.d()
            && self.step(p.vertex, p.k).is_some()
            && self.step(p.vertex, p.l).is_some()
    }

    pub fn enumerate_plaquettes(&self) -> Vec<PlaquetteId> {
        let mut out = Vec::new();
        for v in 0..self.n_vertices() {
            for k in 0..self.d() {
                for l in k + 1..self.d() {
                    let p = PlaquetteId { vertex: v, k, l };
                    if self.plaquette_exists(p) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    /// Links (a, b, c, d) of a plaquette with Tr(U_a U_b U_c^dag U_d^dag).
    pub fn plaquette_links(&self, p: PlaquetteId) -> Result<[LinkId; 4]> {
        if !self.plaquette_exists(p) {
            return Err(Error::InvalidLattice(format!("no plaquette {p:?}")));
        }
        let xk = self.step(p.vertex, p.k).unwrap();
        let xl = self.step(p.vertex, p.l).unwrap();
        Ok([
            LinkId { vertex: p.vertex, dir: p.k },
            LinkId { vertex: xk, dir: p.l },
            LinkId { vertex: xl, dir: p.k },
            LinkId { vertex: p.vertex, dir: p.l },
        ])
    }

    /// The nine role links of the cube based at `v` (roles 1..=9 map to
    /// entries 0..=8).
    pub fn cube_link_roles(&self, v: usize) -> Result<[LinkId; 9]> {
        if self.d() != 3 {
            return Err(Error::InvalidLattice("cubes need d = 3".into()));
        }
        let (Some(x0), Some(x1), Some(x2)) = (self.step(v, 0), self.step(v, 1), self.step(v, 2))
        else {
            return Err(Error::InvalidLattice(format!(
                "cube at vertex {v} leaves the lattice"
            )));
        };
        let l = |vertex, dir| LinkId { vertex, dir };
        Ok([
            l(v, 0),
            l(x0, 1),
            l(x1, 0),
            l(v, 1),
            l(v, 2),
            l(x2, 0),
            l(x0, 2),
            l(x2, 1),
            l(x1, 2),
        ])
    }

    /// Plaquette in plane (k, l) based at `v`, in the cube role ordering:
    /// the returned links (a, b, c, d) give the ancilla product
    /// g_a g_b g_c^-1 g_d^-1. Planes (0,2) and (1,2) use the reversed
    /// orientation of the role sets {5,6,7,1} and {5,8,9,4}.
    pub fn role_links(&self, p: PlaquetteId) -> Result<[LinkId; 4]> {
        let [a, b, c, d] = self.plaquette_links(p)?;
        if p.k == 0 && p.l == 1 {
            Ok([a, b, c, d])
        } else {
            Ok([d, c, b, a])
        }
    }

    /// Whether all other coordinates of the link are strictly inside.
    pub fn is_interior_link(&self, link: LinkId) -> bool {
        let c = self.coord(link.vertex);
        (0..self.d())
            .filter(|&j| j != link.dir)
            .all(|j| c[j] > 0 && c[j] + 1 < self.extents[j])
    }
}

pub fn parity_of(c: &Coord) -> Parity {
    if c.iter().sum::<usize>() % 2 == 0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Index of the plane (k, l) among the planes of a d-dimensional lattice.
pub fn plane_index(k: usize, l: usize) -> usize {
    match (k, l) {
        (0, 1) => 0,
        (0, 2) => 1,
        _ => 2,
    }
}

pub fn planes(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 0..d {
        for l in k + 1..d {
            out.push((k, l));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn link_counts() {
        assert_eq!(LatticeShape::cubic(3, 2).unwrap().enumerate_links().len(), 12);
        assert_eq!(LatticeShape::cubic(1, 2).unwrap().enumerate_links().len(), 1);
        assert_eq!(LatticeShape::cubic(2, 3).unwrap().enumerate_links().len(), 12);
    }

    #[test]
    fn plaquette_counts() {
        assert_eq!(LatticeShape::cubic(2, 2).unwrap().enumerate_plaquettes().len(), 1);
        assert_eq!(LatticeShape::cubic(3, 2).unwrap().enumerate_plaquettes().len(), 6);
        assert_eq!(LatticeShape::cubic(1, 4).unwrap().enumerate_plaquettes().len(), 0);
    }

    #[test]
    fn invalid_shapes() {
        assert!(LatticeShape::new(&[]).is_err());
        assert!(LatticeShape::new(&[2, 1]).is_err());
        assert!(LatticeShape::new(&[2, 2, 2, 2]).is_err());
    }

    #[test]
    fn parities() {
        let s = LatticeShape::cubic(3, 3).unwrap();
        assert_eq!(s.parity(s.index(&[0, 0, 0])), Parity::Even);
        assert_eq!(s.parity(s.index(&[1, 0, 0])), Parity::Odd);
        assert_eq!(s.parity(s.index(&[1, 1, 0])), Parity::Even);
    }

    #[test]
    fn cube_roles_match_figure() {
        let s = LatticeShape::cubic(3, 2).unwrap();
        let r = s.cube_link_roles(0).unwrap();
        assert_eq!(r[0], LinkId { vertex: 0, dir: 0 });
        assert_eq!(r[8], LinkId { vertex: s.index(&[0, 1, 0]), dir: 2 });
        assert!(s.cube_link_roles(1).is_err());
        let sets = [[1, 2, 3, 4], [5, 6, 7, 1], [5, 8, 9, 4]];
        let mut count = std::collections::HashMap::new();
        for set in sets {
            for role in set {
                *count.entry(role).or_insert(0) += 1;
            }
        }
        let twice: Vec<_> = {
            let mut v: Vec<_> = count.iter().filter(|(_, &c)| c == 2).map(|(&r, _)| r).collect();
            v.sort();
            v
        };
        assert_eq!(twice, vec![1, 4, 5]);
        // Nine of the twelve cube edges are used.
        let all: std::collections::HashSet<_> = r.iter().collect();
        assert_eq!(all.len(), 9);
    }

    #[test]
    fn role_sets_match_plaquettes() {
        let s = LatticeShape::cubic(3, 3).unwrap();
        let v = s.index(&[1, 0, 1]);
        let r = s.cube_link_roles(v).unwrap();
        let sets = [[1, 2, 3, 4], [5, 6, 7, 1], [5, 8, 9, 4]];
        for (i, (k, l)) in planes(3).into_iter().enumerate() {
            let role = s.role_links(PlaquetteId { vertex: v, k, l }).unwrap();
            let want: Vec<_> = sets[i].iter().map(|&x| r[x - 1]).collect();
            assert_eq!(role.to_vec(), want);
            let mut a: Vec<_> = s.plaquette_links(PlaquetteId { vertex: v, k, l }).unwrap().to_vec();
            let mut b = want.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn link_count_matches_closed_form(ext in proptest::collection::vec(2usize..5, 1..4)) {
            let s = LatticeShape::new(&ext).unwrap();
            prop_assert_eq!(s.enumerate_links().len(), s.link_count());
            let mut links = s.enumerate_links();
            let sorted = { let mut c = links.clone(); c.sort(); c };
            prop_assert_eq!(&links, &sorted);
            links.dedup();
            prop_assert_eq!(links.len(), s.link_count());
        }

        #[test]
        fn interior_links_in_2d_minus_2_plaquettes(d in 2usize..4, l in 3usize..5) {
            let s = LatticeShape::cubic(d, l).unwrap();
            let plaqs = s.enumerate_plaquettes();
            for link in s.enumerate_links() {
                if !s.is_interior_link(link) { continue; }
                let n = plaqs.iter().filter(|p| s.plaquette_links(**p).unwrap().contains(&link)).count();
                prop_assert_eq!(n, 2 * (d - 1));
            }
        }

        #[test]
        fn coord_roundtrip(ext in proptest::collection::vec(2usize..6, 1..4), seed in 0usize..1000) {
            let s = LatticeShape::new(&ext).unwrap();
            let v = seed % s.n_vertices();
            prop_assert_eq!(s.index(&s.coord(v)), v);
        }
    }
}
