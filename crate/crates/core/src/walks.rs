//! Truncated lazy random walks and their sweep orderings.
//!
//! The lazy walk matrix is `M = (A D^-1 + I) / 2`, with a self loop at `v`
//! counted once in `A` and once in `deg(v)`. One step is computed the way a
//! vertex would compute it locally: `v` sends `p(v) / (2 deg v)` over each
//! simple edge and keeps the rest, so the share of a self loop never leaves
//! `v`. Truncation with parameter `ε` zeroes `p(x)` whenever
//! `p(x) < 2ε·deg(x)`.
//!
//! Walk parameters follow the standard nibble schedule. With `L = ln(m e⁴)`:
//!
//! ```text
//! ℓ   = ⌈log₂ m⌉                 t₀ = ⌈c_t · ln(m e²) / φ²⌉
//! f(φ) = φ³ / (c_f · L²)         γ  = 5φ / (c_γ · L)
//! ε_b = φ / (c_ε · L · t₀ · 2^b)
//! ```
//!
//! The [`Profile::Paper`] constants are `(c_t, c_f, c_γ, c_ε) = (49, 14⁴,
//! 392, 56)`. They make `t₀` tens of thousands of steps on toy graphs, so
//! [`Profile::Desk`] keeps every functional form and swaps in small
//! constants.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::congest::{tree::Tree, Backend, Message, Network, Outbox};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::scalar::{Fixed, Scalar};

/// Which constant set the walk parameters use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Paper,
    #[default]
    Desk,
}

/// Leading constants of `t₀`, `f`, `γ` and `ε_b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConstants {
    pub t0: f64,
    pub f: f64,
    pub gamma: f64,
    pub eps: f64,
}

impl WalkConstants {
    pub const PAPER: WalkConstants = WalkConstants { t0: 49.0, f: 38416.0, gamma: 392.0, eps: 56.0 };
    pub const DESK: WalkConstants = WalkConstants { t0: 4.0, f: 8.0, gamma: 8.0, eps: 4.0 };
}

impl Profile {
    pub fn constants(self) -> WalkConstants {
        match self {
            Profile::Paper => WalkConstants::PAPER,
            Profile::Desk => WalkConstants::DESK,
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::BadParameter(format!("unknown profile {s:?}"))),
        }
    }
}

/// Derived nibble parameters for one `(m, φ)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NibbleParams {
    /// Edge count `|E|` the parameters were derived for.
    pub m: u64,
    pub phi: f64,
    /// Number of scales `ℓ`; at least 1.
    pub ell: u32,
    pub t0: u64,
    pub f_phi: f64,
    pub gamma: f64,
    /// `ε_0`; `ε_b = ε_0 / 2^b`.
    pub eps0: f64,
    pub profile: Profile,
    pub constants: WalkConstants,
}

impl NibbleParams {
    /// Truncation threshold `ε_b`.
    pub fn eps_b(&self, b: u32) -> f64 {
        self.eps0 / 2f64.powi(b as i32)
    }

    /// `ln(m e⁴)`.
    pub fn log_term(&self) -> f64 {
        (self.m as f64).ln() + 4.0
    }
}

/// Parameters for a graph with `m` edges under `profile`.
pub fn derive_nibble_params(m: u64, phi: f64, profile: Profile) -> Result<NibbleParams> {
    derive_nibble_params_with(m, phi, profile, profile.constants())
}

/// Parameters with explicit constants (recorded under `profile`).
pub fn derive_nibble_params_with(m: u64, phi: f64, profile: Profile, c: WalkConstants) -> Result<NibbleParams> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::BadPhi(phi));
    }
    if m == 0 {
        return Err(Error::BadParameter("walk parameters need at least one edge".into()));
    }
    let mf = m as f64;
    let l4 = mf.ln() + 4.0;
    let t0 = (c.t0 * (mf.ln() + 2.0) / (phi * phi)).ceil() as u64;
    let ell = (crate::congest::ceil_log2(m) as u32).max(1);
    Ok(NibbleParams {
        m,
        phi,
        ell,
        t0,
        f_phi: phi.powi(3) / (c.f * l4 * l4),
        gamma: 5.0 * phi / (c.gamma * l4),
        eps0: phi / (c.eps * l4 * t0 as f64),
        profile,
        constants: c,
    })
}

fn share<T: Scalar>(g: &Graph, p: &[T], v: VertexId) -> T {
    match g.degree(v) {
        0 => T::zero(),
        d => p[v].div_int(2 * d),
    }
}

/// One lazy step `p ↦ M p`. Total mass is preserved.
pub fn lazy_step<T: Scalar>(g: &Graph, p: &[T]) -> Vec<T> {
    let shares: Vec<T> = (0..g.n()).map(|v| share(g, p, v)).collect();
    (0..g.n())
        .map(|u| {
            let mut acc = p[u].clone() - shares[u].mul_int(g.simple_degree(u));
            for &w in g.neighbors(u) {
                acc = acc + shares[w].clone();
            }
            acc
        })
        .collect()
}

fn thresholds<T: Scalar>(g: &Graph, eps: f64) -> Vec<T> {
    let e = T::from_f64(eps);
    (0..g.n()).map(|v| e.mul_int(2 * g.degree(v))).collect()
}

/// `[p]_ε`: keeps `p(x)` iff `p(x) ≥ 2ε·deg(x)`.
pub fn truncate<T: Scalar>(g: &Graph, p: &[T], eps: f64) -> Vec<T> {
    let thr = thresholds::<T>(g, eps);
    p.iter().zip(&thr).map(|(x, t)| if x >= t { x.clone() } else { T::zero() }).collect()
}

/// Walk distribution `p̃_t` after truncation, with the set of vertices that
/// have held positive mass so far.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedWalkState<T> {
    pub t: usize,
    pub mass: Vec<T>,
    pub eps: f64,
    touched: Vec<bool>,
}

impl<T: Scalar> TruncatedWalkState<T> {
    /// `χ_v` at `t = 0`.
    pub fn start(n: usize, v: VertexId, eps: f64) -> Self {
        let mut mass = vec![T::zero(); n];
        mass[v] = T::one();
        let mut touched = vec![false; n];
        touched[v] = true;
        TruncatedWalkState { t: 0, mass, eps, touched }
    }

    /// `ρ̃(v) = p̃(v) / deg(v)`, for reporting.
    pub fn rho(&self, g: &Graph, v: VertexId) -> f64 {
        self.mass[v].as_f64() / g.degree(v).max(1) as f64
    }

    /// Vertices with positive mass, ascending.
    pub fn support(&self) -> Vec<VertexId> {
        (0..self.mass.len()).filter(|&v| self.mass[v].is_positive()).collect()
    }

    pub fn total_mass(&self) -> T {
        self.mass.iter().fold(T::zero(), |a, x| a + x.clone())
    }

    /// Whether `v` held positive mass at some step so far.
    pub fn touched(&self, v: VertexId) -> bool {
        self.touched[v]
    }

    /// `P*`: simple edges with an endpoint that held positive mass.
    pub fn participants(&self, g: &Graph) -> Vec<(VertexId, VertexId)> {
        g.edges().filter(|&(u, v)| self.touched[u] || self.touched[v]).collect()
    }
}

struct Mass<T>(T);

impl<T> Message for Mass<T> {
    fn bits(&self) -> u64 {
        Fixed::BITS
    }
}

/// A truncated walk being advanced step by step, together with the tree
/// its mass spread along.
///
/// The tree is rooted at the start vertex; a vertex joins it the first time
/// mass is sent to it, as a child of the smallest-ID sender. Its edges are
/// therefore edges of `P*`.
pub struct TruncatedWalk<'g, T> {
    g: &'g Graph,
    state: TruncatedWalkState<T>,
    thresholds: Vec<T>,
    tree: Tree,
}

impl<'g, T: Scalar> TruncatedWalk<'g, T> {
    pub fn new(g: &'g Graph, start: VertexId, eps: f64) -> Self {
        TruncatedWalk {
            g,
            state: TruncatedWalkState::start(g.n(), start, eps),
            thresholds: thresholds(g, eps),
            tree: Tree::singleton(g.n(), start),
        }
    }

    pub fn state(&self) -> &TruncatedWalkState<T> {
        &self.state
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn into_state(self) -> TruncatedWalkState<T> {
        self.state
    }

    /// Advances one step without a network.
    pub fn step_central(&mut self) {
        let g = self.g;
        let next = lazy_step(g, &self.state.mass);
        for v in 0..g.n() {
            if !self.tree.contains(v) {
                if let Some(&p) = g.neighbors(v).iter().find(|&&w| self.state.mass[w].is_positive()) {
                    self.tree.attach(v, p);
                }
            }
        }
        self.finish(next);
    }

    /// Advances one step as one network round.
    pub fn step(&mut self, net: &mut Network) -> Result<()> {
        let g = self.g;
        match net.backend() {
            Backend::Charged => {
                let messages: u64 = self.state.support().iter().map(|&v| g.simple_degree(v)).sum();
                net.charge(1, messages, if messages > 0 { Fixed::BITS } else { 0 })?;
                self.step_central();
                Ok(())
            }
            Backend::Simulated => {
                let mut next: Vec<T> = (0..g.n())
                    .map(|u| self.state.mass[u].clone() - share(g, &self.state.mass, u).mul_int(g.simple_degree(u)))
                    .collect();
                let support = self.state.support();
                let mut first_sender: Vec<Option<VertexId>> = vec![None; g.n()];
                let mass = &self.state.mass;
                let mut slots = vec![(); g.n()];
                net.round(
                    g,
                    &mut slots,
                    &support,
                    |v, _, out: &mut Outbox<Mass<T>>| {
                        let s = share(g, mass, v);
                        for &w in g.neighbors(v) {
                            out.send(w, Mass(s.clone()));
                        }
                    },
                    |v, _, from, Mass(x)| {
                        next[v] = next[v].clone() + x;
                        first_sender[v].get_or_insert(from);
                    },
                )?;
                for (v, p) in first_sender.into_iter().enumerate() {
                    if let (Some(p), false) = (p, self.tree.contains(v)) {
                        self.tree.attach(v, p);
                    }
                }
                self.finish(next);
                Ok(())
            }
        }
    }

    fn finish(&mut self, mut next: Vec<T>) {
        for (v, x) in next.iter_mut().enumerate() {
            if *x < self.thresholds[v] {
                *x = T::zero();
            } else if x.is_positive() {
                self.state.touched[v] = true;
            }
        }
        self.state.mass = next;
        self.state.t += 1;
    }
}

/// Runs the truncated walk from `v` with `ε_b` for `t₀` steps, one network
/// round per step, and returns the states for `t = 0..=t₀`.
pub fn run_truncated_walk(
    net: &mut Network,
    g: &Graph,
    v: VertexId,
    params: &NibbleParams,
    b: u32,
) -> Result<Vec<TruncatedWalkState<Fixed>>> {
    let mut walk = TruncatedWalk::<Fixed>::new(g, v, params.eps_b(b));
    let mut states = vec![walk.state().clone()];
    net.phase("walk", |net| {
        for _ in 0..params.t0 {
            walk.step(net)?;
            states.push(walk.state().clone());
        }
        Ok(states)
    })
}

/// The sweep ordering `π̃_t` of the positive-mass vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    /// Support sorted by `ρ̃` descending, ties by ID ascending.
    pub order: Vec<VertexId>,
    /// `prefix_volume[j-1] = Vol(π̃(1..j))`.
    pub prefix_volume: Vec<u64>,
    /// `prefix_boundary[j-1] = |∂(π̃(1..j))|`.
    pub prefix_boundary: Vec<u64>,
}

impl Sweep {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `π̃(1..j)`, sorted by ID.
    pub fn prefix(&self, j: usize) -> Vec<VertexId> {
        let mut s = self.order[..j].to_vec();
        s.sort_unstable();
        s
    }
}

/// Orders `a` before `b` when `ρ̃(a) > ρ̃(b)`, or on ties when `a < b`.
pub fn rho_order<T: Scalar>(g: &Graph, mass: &[T], a: VertexId, b: VertexId) -> Ordering {
    T::cmp_ratio(&mass[b], g.degree(b).max(1), &mass[a], g.degree(a).max(1)).then(a.cmp(&b))
}

/// Sweep order of `state` with prefix volumes and boundaries.
pub fn sweep_order<T: Scalar>(g: &Graph, state: &TruncatedWalkState<T>) -> Sweep {
    let mut order = state.support();
    order.sort_by(|&a, &b| rho_order(g, &state.mass, a, b));
    let mut inside = vec![false; g.n()];
    let (mut vol, mut bnd) = (0u64, 0u64);
    let mut prefix_volume = Vec::with_capacity(order.len());
    let mut prefix_boundary = Vec::with_capacity(order.len());
    for &x in &order {
        let internal = g.neighbors(x).iter().filter(|&&w| inside[w]).count() as u64;
        inside[x] = true;
        vol += g.degree(x);
        bnd = bnd + g.simple_degree(x) - 2 * internal;
        prefix_volume.push(vol);
        prefix_boundary.push(bnd);
    }
    Sweep { order, prefix_volume, prefix_boundary }
}

/// Largest graph [`z_set`] accepts.
pub const Z_SET_MAX_VERTICES: usize = 64;

/// `Z_{u,φ,b}`: start vertices whose untruncated walk reaches
/// `ρ_t(u) ≥ 2ε_b` for some `t ≤ t₀`. Runs one walk per start.
pub fn z_set<T: Scalar>(g: &Graph, u: VertexId, params: &NibbleParams, b: u32) -> Result<Vec<VertexId>> {
    if g.n() > Z_SET_MAX_VERTICES {
        return Err(Error::TooLarge { n: g.n(), max: Z_SET_MAX_VERTICES });
    }
    let thr = T::from_f64(params.eps_b(b)).mul_int(2 * g.degree(u));
    let mut members = Vec::new();
    for v in 0..g.n() {
        let mut p = vec![T::zero(); g.n()];
        p[v] = T::one();
        for t in 0..=params.t0 {
            if p[u] >= thr {
                members.push(v);
                break;
            }
            if t < params.t0 {
                p = lazy_step(g, &p);
            }
        }
    }
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{barbell, clique, star};
    use num_rational::BigRational;

    #[test]
    fn paper_parameters_for_m100() {
        let p = derive_nibble_params(100, 0.1, Profile::Paper).unwrap();
        assert_eq!(p.ell, 7);
        // t0 = ceil(49 (ln 100 + 2) / 0.01)
        let oracle_t0 = (49.0 * (100f64.ln() + 2.0) / 0.01).ceil() as u64;
        assert_eq!(p.t0, oracle_t0);
        assert_eq!(p.t0, 32366);
        let oracle_f = 1e-3 / (38416.0 * (100f64.ln() + 4.0).powi(2));
        assert!((p.f_phi - oracle_f).abs() < 1e-22);
        assert!((p.f_phi - 3.51e-10).abs() < 0.01e-10);
        assert_eq!(p.eps_b(4) / p.eps_b(3), 0.5);
    }

    #[test]
    fn bad_phi_is_rejected() {
        assert_eq!(derive_nibble_params(10, 0.0, Profile::Desk), Err(Error::BadPhi(0.0)));
        assert!(derive_nibble_params(10, 1.5, Profile::Desk).is_err());
    }

    #[test]
    fn lazy_step_examples() {
        let k2 = clique(2);
        assert_eq!(lazy_step(&k2, &[1.0, 0.0]), vec![0.5, 0.5]);
        let k3 = clique(3);
        let r = |a, b| BigRational::from_ratio(a, b);
        let p = lazy_step(&k3, &[r(1, 1), r(0, 1), r(0, 1)]);
        assert_eq!(p, vec![r(1, 2), r(1, 4), r(1, 4)]);
        let bb = barbell(4, 1).unwrap();
        let vol = bb.total_volume();
        let psi: Vec<BigRational> = (0..bb.n()).map(|v| r(bb.degree(v), vol)).collect();
        assert_eq!(lazy_step(&bb, &psi), psi);
    }

    #[test]
    fn loops_keep_their_share() {
        let g = clique(3).contract(&[0, 1]).graph;
        let p = lazy_step(&g, &[1.0, 0.0]);
        // deg 2 with one loop: half stays, a quarter loops back, a quarter leaves.
        assert_eq!(p, vec![0.75, 0.25]);
    }

    #[test]
    fn truncation_examples() {
        let k2 = clique(2);
        assert_eq!(truncate(&k2, &[0.5, 0.5], 0.3), vec![0.0, 0.0]);
        assert_eq!(truncate(&k2, &[0.5, 0.2], 0.0), vec![0.5, 0.2]);
        let s3 = star(3);
        let p = [0.5, 0.2, 0.2, 0.1];
        assert_eq!(truncate(&s3, &p, 0.04), p.to_vec());
        assert_eq!(truncate(&s3, &p, 0.06), vec![0.5, 0.2, 0.2, 0.0]);
    }

    #[test]
    fn walk_start_state() {
        let g = barbell(4, 1).unwrap();
        let params = derive_nibble_params(g.m() as u64, 0.1, Profile::Desk).unwrap();
        let mut net = Network::for_graph(&g);
        let states = run_truncated_walk(&mut net, &g, 2, &params, 1).unwrap();
        assert_eq!(states[0].support(), vec![2]);
        assert_eq!(states[0].participants(&g), vec![(0, 2), (1, 2), (2, 3)]);
        assert_eq!(states.len() as u64, params.t0 + 1);
        assert_eq!(net.ledger().total().rounds, params.t0);
    }

    #[test]
    fn distributed_walk_matches_central_iteration() {
        let g = barbell(5, 2).unwrap();
        let params = derive_nibble_params(g.m() as u64, 0.2, Profile::Desk).unwrap();
        let eps = params.eps_b(2);
        let mut net = Network::for_graph(&g);
        let states = run_truncated_walk(&mut net, &g, 0, &params, 2).unwrap();
        let mut p: Vec<Fixed> = TruncatedWalkState::start(g.n(), 0, eps).mass;
        for s in &states[1..] {
            p = truncate(&g, &lazy_step(&g, &p), eps);
            assert_eq!(s.mass, p);
        }
        let mut charged = Network::for_graph(&g).with_backend(Backend::Charged);
        let again = run_truncated_walk(&mut charged, &g, 0, &params, 2).unwrap();
        assert_eq!(again, states);
        assert_eq!(charged.ledger(), net.ledger());
    }

    #[test]
    fn heavy_truncation_keeps_walk_in_one_clique() {
        let g = barbell(8, 1).unwrap();
        let mut walk = TruncatedWalk::<Fixed>::new(&g, 1, 0.01);
        for _ in 0..40 {
            walk.step_central();
        }
        let far: Vec<_> = walk.state().participants(&g).into_iter().filter(|&(u, v)| u >= 8 && v >= 8).collect();
        assert!(far.is_empty(), "{far:?}");
    }

    #[test]
    fn sweep_ties_and_prefixes() {
        let g = clique(4);
        let s = TruncatedWalkState { t: 0, mass: vec![0.25; 4], eps: 0.0, touched: vec![true; 4] };
        let sw = sweep_order(&g, &s);
        assert_eq!(sw.order, vec![0, 1, 2, 3]);
        assert_eq!(sw.prefix_volume, vec![3, 6, 9, 12]);
        assert_eq!(sw.prefix_boundary, vec![3, 4, 3, 0]);
    }
}
