//! The effective configuration of a run, as embedded in every output.

use serde::{Deserialize, Serialize};

use crate::congest::{Backend, Network};
use crate::error::{Error, Result};
use crate::expander::DecompConfig;
use crate::generators::GraphSpec;
use crate::graph::Graph;
use crate::low_diam::LowDiamConfig;
use crate::sparse_cut::CutConfig;
use crate::triangles::{RouterConfig, TriangleConfig};
use crate::walks::Profile;

/// Environment variable that takes precedence over `--seed`.
pub const SEED_ENV: &str = "EXPANDER_SEED";

/// Overrides of recorded constants. Unset fields keep the profile default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantOverrides {
    pub c_h: Option<f64>,
    /// Replaces the computed `K_Φ` in the Partition bound check.
    pub k_phi: Option<f64>,
    /// `K` of the low-diameter decomposition.
    pub k_low_diam: Option<f64>,
    pub c_r: Option<f64>,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: String,
    /// Edge-list file the graph was read from.
    pub graph: Option<String>,
    /// Generator spec the graph was built from, with `seed`.
    pub spec: Option<GraphSpec>,
    pub epsilon: Option<f64>,
    pub k: usize,
    pub phi: Option<f64>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub profile: Profile,
    pub backend: Backend,
    pub constants: ConstantOverrides,
    pub seed: u64,
    pub trials: usize,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            graph: None,
            spec: None,
            epsilon: None,
            k: 2,
            phi: None,
            beta: None,
            p: None,
            profile: Profile::Desk,
            backend: Backend::Charged,
            constants: ConstantOverrides::default(),
            seed: 0,
            trials: 1,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn cut_config(&self) -> CutConfig {
        let mut cfg = CutConfig::for_profile(self.profile);
        if let Some(c) = self.constants.c_h {
            cfg.c_h = c;
        }
        cfg.p = self.p.or(cfg.p);
        cfg
    }

    pub fn low_diam_config(&self) -> LowDiamConfig {
        let mut cfg = LowDiamConfig::default();
        if let Some(k) = self.constants.k_low_diam {
            cfg.k = k;
        }
        cfg
    }

    pub fn decomp_config(&self) -> DecompConfig {
        DecompConfig { cut: self.cut_config(), low_diam: self.low_diam_config(), ..DecompConfig::for_profile(self.profile) }
    }

    pub fn router_config(&self) -> RouterConfig {
        let mut cfg = RouterConfig::default();
        if let Some(c) = self.constants.c_r {
            cfg.c_r = c;
        }
        cfg
    }

    pub fn triangle_config(&self) -> TriangleConfig {
        TriangleConfig { decomposition: self.decomp_config(), router: self.router_config() }
    }

    pub fn network(&self, g: &Graph) -> Network {
        Network::for_graph(g).with_backend(self.backend)
    }

    /// Reads the graph file or builds the graph from `spec`.
    pub fn load_graph(&self) -> Result<Graph> {
        match (&self.graph, &self.spec) {
            (Some(path), _) => Graph::read_file(path),
            (None, Some(spec)) => spec.generate(self.seed),
            (None, None) => Err(Error::BadParameter("no graph given".into())),
        }
    }

    /// A short name of the input graph.
    pub fn graph_label(&self) -> String {
        match (&self.graph, &self.spec) {
            (Some(path), _) => path.clone(),
            (None, Some(spec)) => spec.to_string(),
            (None, None) => String::new(),
        }
    }
}

/// The seed a run uses: the environment value if set, then the flag, then
/// 0. The clock is never consulted.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64> {
    match env {
        Some(s) => s.trim().parse().map_err(|_| Error::BadParameter(format!("{SEED_ENV}={s:?} is not an integer"))),
        None => Ok(flag.unwrap_or(0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(None, None).unwrap(), 0);
        assert_eq!(resolve_seed(Some(5), None).unwrap(), 5);
        assert_eq!(resolve_seed(Some(5), Some("9")).unwrap(), 9);
        assert!(resolve_seed(None, Some("x")).is_err());
    }

    #[test]
    fn overrides_reach_the_configs() {
        let cfg = RunConfig {
            constants: ConstantOverrides { c_h: Some(0.5), k_phi: None, k_low_diam: Some(4.0), c_r: Some(3.0) },
            p: Some(0.25),
            ..Default::default()
        };
        let d = cfg.decomp_config();
        assert_eq!(d.cut.c_h, 0.5);
        assert_eq!(d.cut.p, Some(0.25));
        assert_eq!(d.low_diam.k, 4.0);
        assert_eq!(cfg.triangle_config().router.c_r, 3.0);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig { command: "bench".into(), spec: Some("grid:3:4".parse().unwrap()), epsilon: Some(0.2), ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        assert_eq!(cfg.load_graph().unwrap().m(), 17);
    }
}
