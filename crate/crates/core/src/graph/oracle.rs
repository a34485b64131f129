//! Exhaustive and dense reference computations for small graphs.

use num_rational::Ratio;

use super::{Cut, Graph, VertexId};
use crate::error::{Error, Result};

/// Largest vertex count accepted by [`min_conductance_oracle`].
pub const ORACLE_MAX_VERTICES: usize = 16;

/// Exact Φ_G by enumerating every cut, with a witness.
///
/// Only subsets avoiding the last vertex are enumerated, since a cut and its
/// complement have the same conductance. Cuts with a zero-volume side are
/// skipped. Among minimizers the first in enumeration order is returned.
pub fn min_conductance_oracle(g: &Graph) -> Result<(Ratio<u64>, Cut)> {
    let n = g.n();
    if n > ORACLE_MAX_VERTICES {
        return Err(Error::TooLarge { n, max: ORACLE_MAX_VERTICES });
    }
    if n < 2 {
        return Err(Error::DegenerateCut);
    }
    let adj_mask: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |acc, &w| acc | 1 << w))
        .collect();
    let deg: Vec<u64> = (0..n).map(|v| g.degree(v)).collect();
    let total = g.total_volume();
    let mut best: Option<(u64, u64, u32)> = None;
    for mask in 1u32..(1u32 << (n - 1)) {
        let mut vol = 0;
        let mut boundary = 0u64;
        let mut bits = mask;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            vol += deg[v];
            boundary += (adj_mask[v] & !mask).count_ones() as u64;
        }
        let small = vol.min(total - vol);
        if small == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, s, _)) => (boundary as u128) * (s as u128) < (b as u128) * (small as u128),
        };
        if better {
            best = Some((boundary, small, mask));
        }
    }
    let (_, _, mask) = best.ok_or(Error::DegenerateCut)?;
    let members: Vec<VertexId> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
    let cut = Cut::new(g, &members)?;
    Ok((cut.conductance(), cut))
}

/// Smallest `t` such that the lazy walk from every start vertex is within
/// L1 distance `tol` of the degree-stationary distribution.
///
/// Isolated vertices without loops have no stationary mass; a graph made of
/// a single such vertex mixes at `t = 0`.
pub fn mixing_time_estimate(g: &Graph, tol: f64) -> Result<usize> {
    const MAX_STEPS: usize = 1_000_000;
    let n = g.n();
    if n <= 1 {
        return Ok(0);
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let total = g.total_volume() as f64;
    let psi: Vec<f64> = (0..n).map(|v| g.degree(v) as f64 / total).collect();
    let mut dists: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let mut p = vec![0.0; n];
            p[s] = 1.0;
            p
        })
        .collect();
    let worst = |dists: &[Vec<f64>]| {
        dists
            .iter()
            .map(|p| p.iter().zip(&psi).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    for t in 0..=MAX_STEPS {
        if worst(&dists) <= tol {
            return Ok(t);
        }
        for p in &mut dists {
            *p = crate::walks::lazy_step(g, p);
        }
    }
    Err(Error::NotConverged(MAX_STEPS))
}
