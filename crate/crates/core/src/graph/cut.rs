use num_rational::Ratio;

use super::{Graph, VertexId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A proper vertex subset together with its exact cut statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    members: Vec<VertexId>,
    vol_s: u64,
    boundary: u64,
    total_volume: u64,
    conductance: Ratio<u64>,
    balance: Ratio<u64>,
}

impl Cut {
    /// Computes the statistics of `s` in `g`.
    ///
    /// Fails with [`Error::DegenerateCut`] when `s` is empty, covers every
    /// vertex, or leaves one side with zero volume.
    pub fn new(g: &Graph, s: &[VertexId]) -> Result<Self> {
        let mut inside = vec![false; g.n()];
        for &v in s {
            *inside.get_mut(v).ok_or(Error::UnknownVertex(v))? = true;
        }
        let members: Vec<VertexId> = (0..g.n()).filter(|&v| inside[v]).collect();
        if members.is_empty() || members.len() == g.n() {
            return Err(Error::DegenerateCut);
        }
        let vol_s = g.volume(&members);
        let total_volume = g.total_volume();
        let small = vol_s.min(total_volume - vol_s);
        if small == 0 {
            return Err(Error::DegenerateCut);
        }
        let boundary = g.boundary_size(&inside);
        Ok(Cut {
            members,
            vol_s,
            boundary,
            total_volume,
            conductance: Ratio::new(boundary, small),
            balance: Ratio::new(small, total_volume),
        })
    }

    /// The same cut with every member renamed through `ids`, for example
    /// from the local IDs of a subgraph to original IDs. Statistics are
    /// kept; `ids` must be increasing so members stay sorted.
    pub fn relabel(mut self, ids: &[VertexId]) -> Cut {
        self.members = self.members.iter().map(|&v| ids[v]).collect();
        self
    }

    /// Sorted member list.
    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Vol(S).
    pub fn volume(&self) -> u64 {
        self.vol_s
    }

    /// Vol(V) of the graph the cut was measured in.
    pub fn total_volume(&self) -> u64 {
        self.total_volume
    }

    /// |∂(S)|.
    pub fn boundary(&self) -> u64 {
        self.boundary
    }

    /// Exact Φ(S).
    pub fn conductance(&self) -> Ratio<u64> {
        self.conductance
    }

    /// Exact bal(S).
    pub fn balance(&self) -> Ratio<u64> {
        self.balance
    }

    /// Φ(S) in the scalar type `T`.
    pub fn conductance_as<T: Scalar>(&self) -> T {
        T::from_ratio(*self.conductance.numer(), *self.conductance.denom())
    }

    /// bal(S) in the scalar type `T`.
    pub fn balance_as<T: Scalar>(&self) -> T {
        T::from_ratio(*self.balance.numer(), *self.balance.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{barbell, clique, cycle};

    #[test]
    fn k4_pair() {
        let c = clique(4).cut_stats(&[0, 1]).unwrap();
        assert_eq!(c.boundary(), 4);
        assert_eq!(c.volume(), 6);
        assert_eq!(c.conductance(), Ratio::new(2, 3));
        assert_eq!(c.balance(), Ratio::new(1, 2));
    }

    #[test]
    fn barbell_side() {
        let c = barbell(4, 1).unwrap().cut_stats(&[0, 1, 2, 3]).unwrap();
        assert_eq!(c.conductance(), Ratio::new(1, 13));
        assert_eq!(c.balance(), Ratio::new(1, 2));
        assert!((c.conductance_as::<f64>() - 1.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn cycle_arc() {
        let c = cycle(6).cut_stats(&[0, 1, 2]).unwrap();
        assert_eq!(c.conductance(), Ratio::new(1, 3));
    }

    #[test]
    fn degenerate_sets_are_rejected() {
        let k4 = clique(4);
        assert_eq!(k4.cut_stats(&[]), Err(Error::DegenerateCut));
        assert_eq!(k4.cut_stats(&[0, 1, 2, 3]), Err(Error::DegenerateCut));
    }
}
