//! Seeded graph families, including planted sparse cuts.
//!
//! Deterministic families are plain functions. [`GraphSpec`] names every
//! family, parses from a compact string (`"barbell:12:1"`, `"er:60:0.2"`)
//! and generates with an explicit seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{seeded, Rng};

/// K_n.
pub fn clique(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).expect("clique edges are simple")
}

/// C_n for `n ≥ 3`.
pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "a simple cycle needs at least 3 vertices");
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle edges are simple")
}

/// P_n: `n` vertices, `n - 1` edges.
pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("path edges are simple")
}

/// S_k: center `0` joined to leaves `1..=k`.
pub fn star(k: usize) -> Graph {
    Graph::from_edges(k + 1, (1..=k).map(|i| (0, i))).expect("star edges are simple")
}

/// `rows × cols` grid, vertex `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_edges(rows * cols, edges).expect("grid edges are simple")
}

/// Two copies of K_c joined by `bridges` edges `{i, c + i}`.
pub fn barbell(c: usize, bridges: usize) -> Result<Graph> {
    cliques_chain(2, c, bridges)
}

/// `count` copies of K_size in a row, consecutive copies joined by
/// `bridges` edges between equally ranked members.
pub fn cliques_chain(count: usize, size: usize, bridges: usize) -> Result<Graph> {
    if size == 0 || bridges > size {
        return Err(Error::Infeasible(format!("{bridges} bridges between cliques of size {size}")));
    }
    let mut edges = Vec::new();
    for k in 0..count {
        let base = k * size;
        for u in 0..size {
            for v in u + 1..size {
                edges.push((base + u, base + v));
            }
        }
        if k + 1 < count {
            for i in 0..bridges {
                edges.push((base + i, base + size + i));
            }
        }
    }
    Graph::from_edges(count * size, edges)
}

/// G(n, p).
pub fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Infeasible(format!("edge probability {p}")));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// A uniform-ish `r`-regular simple graph.
///
/// Stubs are paired at random; a pair forming a loop or a duplicate edge is
/// rejected and redrawn, and the whole pairing restarts if it gets stuck.
pub fn random_regular(n: usize, r: usize, rng: &mut Rng) -> Result<Graph> {
    if r >= n || (n * r) % 2 == 1 {
        return Err(Error::Infeasible(format!("{r}-regular graph on {n} vertices")));
    }
    const RESTARTS: usize = 1000;
    'restart: for _ in 0..RESTARTS {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, r)).collect();
        stubs.shuffle(rng);
        let mut adj = vec![Vec::<usize>::new(); n];
        let mut edges = Vec::with_capacity(n * r / 2);
        while !stubs.is_empty() {
            let mut placed = false;
            for _ in 0..(4 * stubs.len()).max(64) {
                let i = rng.random_range(0..stubs.len());
                let j = rng.random_range(0..stubs.len());
                let (u, v) = (stubs[i], stubs[j]);
                if i == j || u == v || adj[u].contains(&v) {
                    continue;
                }
                adj[u].push(v);
                adj[v].push(u);
                edges.push((u.min(v), u.max(v)));
                let (hi, lo) = (i.max(j), i.min(j));
                stubs.swap_remove(hi);
                stubs.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed {
                continue 'restart;
            }
        }
        return Graph::from_edges(n, edges);
    }
    Err(Error::Infeasible(format!("no {r}-regular pairing on {n} vertices after {RESTARTS} restarts")))
}

/// G(n, p) with a clique planted on vertices `0..size`.
pub fn planted_clique(n: usize, p: f64, size: usize, rng: &mut Rng) -> Result<Graph> {
    if size > n {
        return Err(Error::Infeasible(format!("clique of {size} in {n} vertices")));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let forced = v < size;
            if rng.random_bool(p) || forced {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// A named graph family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphSpec {
    Clique { n: usize },
    Cycle { n: usize },
    Path { n: usize },
    Star { leaves: usize },
    Grid { rows: usize, cols: usize },
    Barbell { size: usize, bridges: usize },
    CliquesChain { count: usize, size: usize, bridges: usize },
    ErdosRenyi { n: usize, p: f64 },
    RandomRegular { n: usize, r: usize },
    PlantedClique { n: usize, p: f64, size: usize },
}

impl GraphSpec {
    /// Builds the graph; deterministic families ignore `seed`.
    pub fn generate(&self, seed: u64) -> Result<Graph> {
        let mut rng = seeded(seed);
        match *self {
            GraphSpec::Clique { n } => Ok(clique(n)),
            GraphSpec::Cycle { n } if n < 3 => Err(Error::Infeasible(format!("cycle on {n} vertices"))),
            GraphSpec::Cycle { n } => Ok(cycle(n)),
            GraphSpec::Path { n } => Ok(path(n)),
            GraphSpec::Star { leaves } => Ok(star(leaves)),
            GraphSpec::Grid { rows, cols } => Ok(grid(rows, cols)),
            GraphSpec::Barbell { size, bridges } => barbell(size, bridges),
            GraphSpec::CliquesChain { count, size, bridges } => cliques_chain(count, size, bridges),
            GraphSpec::ErdosRenyi { n, p } => erdos_renyi(n, p, &mut rng),
            GraphSpec::RandomRegular { n, r } => random_regular(n, r, &mut rng),
            GraphSpec::PlantedClique { n, p, size } => planted_clique(n, p, size, &mut rng),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Clique { n } => write!(f, "clique:{n}"),
            GraphSpec::Cycle { n } => write!(f, "cycle:{n}"),
            GraphSpec::Path { n } => write!(f, "path:{n}"),
            GraphSpec::Star { leaves } => write!(f, "star:{leaves}"),
            GraphSpec::Grid { rows, cols } => write!(f, "grid:{rows}:{cols}"),
            GraphSpec::Barbell { size, bridges } => write!(f, "barbell:{size}:{bridges}"),
            GraphSpec::CliquesChain { count, size, bridges } => write!(f, "chain:{count}:{size}:{bridges}"),
            GraphSpec::ErdosRenyi { n, p } => write!(f, "er:{n}:{p}"),
            GraphSpec::RandomRegular { n, r } => write!(f, "regular:{n}:{r}"),
            GraphSpec::PlantedClique { n, p, size } => write!(f, "planted:{n}:{p}:{size}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    /// Parses `family:arg:arg...`, e.g. `grid:6:6` or `regular:32:4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::BadParameter(format!("unrecognized graph spec {s:?}"));
        let int = |i: usize| parts.get(i).and_then(|x| x.parse::<usize>().ok()).ok_or_else(bad);
        let real = |i: usize| parts.get(i).and_then(|x| x.parse::<f64>().ok()).ok_or_else(bad);
        let arity = |k: usize| if parts.len() == k + 1 { Ok(()) } else { Err(bad()) };
        let spec = match parts[0] {
            "clique" => GraphSpec::Clique { n: int(1)? },
            "cycle" => GraphSpec::Cycle { n: int(1)? },
            "path" => GraphSpec::Path { n: int(1)? },
            "star" => GraphSpec::Star { leaves: int(1)? },
            "grid" => {
                arity(2)?;
                GraphSpec::Grid { rows: int(1)?, cols: int(2)? }
            }
            "barbell" => {
                arity(2)?;
                GraphSpec::Barbell { size: int(1)?, bridges: int(2)? }
            }
            "chain" => {
                arity(3)?;
                GraphSpec::CliquesChain { count: int(1)?, size: int(2)?, bridges: int(3)? }
            }
            "er" => {
                arity(2)?;
                GraphSpec::ErdosRenyi { n: int(1)?, p: real(2)? }
            }
            "regular" => {
                arity(2)?;
                GraphSpec::RandomRegular { n: int(1)?, r: int(2)? }
            }
            "planted" => {
                arity(3)?;
                GraphSpec::PlantedClique { n: int(1)?, p: real(2)?, size: int(3)? }
            }
            _ => return Err(bad()),
        };
        if matches!(spec, GraphSpec::Clique { .. } | GraphSpec::Cycle { .. } | GraphSpec::Path { .. } | GraphSpec::Star { .. }) {
            arity(1)?;
        }
        Ok(spec)
    }
}
