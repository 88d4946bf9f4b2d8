use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Directional relation of object `i` with respect to object `j`
/// (`spatial[i][j] = LeftOf` reads "i is left of j").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpatialRel {
    None,
    LeftOf,
    RightOf,
    InFrontOf,
    Behind,
    Above,
    Below,
}

/// Physical interaction; `physical[i][j] = Support` reads "i is supported by j".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhysicalRel {
    None,
    Support,
    Contact,
    Attach,
}

impl SpatialRel {
    pub const ALL: [SpatialRel; 7] = [
        SpatialRel::None,
        SpatialRel::LeftOf,
        SpatialRel::RightOf,
        SpatialRel::InFrontOf,
        SpatialRel::Behind,
        SpatialRel::Above,
        SpatialRel::Below,
    ];

    pub fn opposite(self) -> Self {
        match self {
            SpatialRel::None => SpatialRel::None,
            SpatialRel::LeftOf => SpatialRel::RightOf,
            SpatialRel::RightOf => SpatialRel::LeftOf,
            SpatialRel::InFrontOf => SpatialRel::Behind,
            SpatialRel::Behind => SpatialRel::InFrontOf,
            SpatialRel::Above => SpatialRel::Below,
            SpatialRel::Below => SpatialRel::Above,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SpatialRel::None => "none",
            SpatialRel::LeftOf => "left_of",
            SpatialRel::RightOf => "right_of",
            SpatialRel::InFrontOf => "in_front_of",
            SpatialRel::Behind => "behind",
            SpatialRel::Above => "above",
            SpatialRel::Below => "below",
        }
    }
}

impl PhysicalRel {
    pub const ALL: [PhysicalRel; 4] =
        [PhysicalRel::None, PhysicalRel::Support, PhysicalRel::Contact, PhysicalRel::Attach];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhysicalRel::None => "none",
            PhysicalRel::Support => "support",
            PhysicalRel::Contact => "contact",
            PhysicalRel::Attach => "attach",
        }
    }
}

impl FromStr for SpatialRel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SpatialRel::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_owned()))
    }
}

impl FromStr for PhysicalRel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PhysicalRel::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_owned()))
    }
}

impl fmt::Display for SpatialRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for PhysicalRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spatial and physical N×N relation matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationGraphs {
    n: usize,
    spatial: Vec<SpatialRel>,
    physical: Vec<PhysicalRel>,
}

impl RelationGraphs {
    pub fn empty(n: usize) -> Self {
        Self { n, spatial: vec![SpatialRel::None; n * n], physical: vec![PhysicalRel::None; n * n] }
    }

    /// Builds from row-major matrices and validates all invariants.
    pub fn from_matrices(spatial: Vec<Vec<SpatialRel>>, physical: Vec<Vec<PhysicalRel>>) -> Result<Self> {
        let n = spatial.len();
        if physical.len() != n
            || spatial.iter().any(|r| r.len() != n)
            || physical.iter().any(|r| r.len() != n)
        {
            return Err(Error::InvalidGraph("relation matrices must both be N×N".into()));
        }
        let g = Self {
            n,
            spatial: spatial.into_iter().flatten().collect(),
            physical: physical.into_iter().flatten().collect(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spatial(&self, i: usize, j: usize) -> SpatialRel {
        self.spatial[i * self.n + j]
    }

    pub fn physical(&self, i: usize, j: usize) -> PhysicalRel {
        self.physical[i * self.n + j]
    }

    /// Sets `spatial[i][j] = rel` and `spatial[j][i] = rel.opposite()`.
    pub fn set_spatial_pair(&mut self, i: usize, j: usize, rel: SpatialRel) {
        self.spatial[i * self.n + j] = rel;
        self.spatial[j * self.n + i] = rel.opposite();
    }

    pub fn set_physical(&mut self, i: usize, j: usize, rel: PhysicalRel) {
        self.physical[i * self.n + j] = rel;
    }

    pub fn spatial_rows(&self) -> Vec<Vec<SpatialRel>> {
        self.spatial.chunks(self.n.max(1)).map(|c| c.to_vec()).take(self.n).collect()
    }

    pub fn physical_rows(&self) -> Vec<Vec<PhysicalRel>> {
        self.physical.chunks(self.n.max(1)).map(|c| c.to_vec()).take(self.n).collect()
    }

    /// Directed support pairs `(supported, supporter)`.
    pub fn support_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.physical(i, j) == PhysicalRel::Support {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// First supporter of `i` in index order, if any.
    pub fn supporter_of(&self, i: usize) -> Option<usize> {
        (0..self.n).find(|&j| self.physical(i, j) == PhysicalRel::Support)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.spatial(i, i) != SpatialRel::None || self.physical(i, i) != PhysicalRel::None {
                return Err(Error::InvalidGraph(format!("diagonal entry {i} is not `none`")));
            }
            for j in 0..n {
                if self.spatial(i, j).opposite() != self.spatial(j, i) {
                    return Err(Error::InvalidGraph(format!(
                        "spatial[{i}][{j}]={} but spatial[{j}][{i}]={}",
                        self.spatial(i, j),
                        self.spatial(j, i)
                    )));
                }
            }
        }
        if self.has_support_cycle() {
            return Err(Error::InvalidGraph("support edges contain a cycle".into()));
        }
        Ok(())
    }

    /// True if following support edges from some object returns to it.
    pub fn has_support_cycle(&self) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.n];
        fn visit(g: &RelationGraphs, i: usize, state: &mut [u8]) -> bool {
            state[i] = 1;
            for j in 0..g.n {
                if g.physical(i, j) == PhysicalRel::Support {
                    if state[j] == 1 || (state[j] == 0 && visit(g, j, state)) {
                        return true;
                    }
                }
            }
            state[i] = 2;
            false
        }
        (0..self.n).any(|i| state[i] == 0 && visit(self, i, &mut state))
    }

    /// Would adding `i supported by j` close a support cycle?
    pub fn support_reaches(&self, from: usize, target: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.n];
        while let Some(k) = stack.pop() {
            if k == target {
                return true;
            }
            if std::mem::replace(&mut seen[k], true) {
                continue;
            }
            stack.extend((0..self.n).filter(|&j| self.physical(k, j) == PhysicalRel::Support));
        }
        false
    }

    /// Relabels objects: new index `perm[i]` takes old object `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut g = Self::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                g.spatial[perm[i] * self.n + perm[j]] = self.spatial(i, j);
                g.physical[perm[i] * self.n + perm[j]] = self.physical(i, j);
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip_through_strings() {
        for r in SpatialRel::ALL {
            assert_eq!(r.as_str().parse::<SpatialRel>().unwrap(), r);
            assert_eq!(r.opposite().opposite(), r);
        }
        for r in PhysicalRel::ALL {
            assert_eq!(r.as_str().parse::<PhysicalRel>().unwrap(), r);
        }
        assert!(matches!("sideways".parse::<SpatialRel>(), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn validation_catches_violations() {
        let mut g = RelationGraphs::empty(3);
        g.set_spatial_pair(0, 1, SpatialRel::LeftOf);
        g.validate().unwrap();
        g.spatial[1] = SpatialRel::Above;
        assert!(g.validate().is_err());

        let mut g = RelationGraphs::empty(3);
        g.set_physical(0, 1, PhysicalRel::Support);
        g.set_physical(1, 2, PhysicalRel::Support);
        g.validate().unwrap();
        assert!(g.support_reaches(0, 2));
        g.set_physical(2, 0, PhysicalRel::Support);
        assert!(g.has_support_cycle());
        assert!(g.validate().is_err());
    }

    #[test]
    fn permutation_moves_entries() {
        let mut g = RelationGraphs::empty(3);
        g.set_spatial_pair(0, 2, SpatialRel::Behind);
        g.set_physical(1, 0, PhysicalRel::Support);
        let perm = [2, 0, 1];
        let p = g.permuted(&perm);
        assert_eq!(p.spatial(2, 1), SpatialRel::Behind);
        assert_eq!(p.spatial(1, 2), SpatialRel::InFrontOf);
        assert_eq!(p.physical(0, 2), PhysicalRel::Support);
        p.validate().unwrap();
    }
}
