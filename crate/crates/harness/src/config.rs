//! Experiment configuration file (TOML).
//!
//! ```toml
//! seed = 7
//! output_dir = "out"          # relative to this file
//!
//! [dictionary]
//! excitations = 128
//! tr_ms = 37.0
//! te_ms = 18.5                # defaults to tr_ms / 2
//! t1_range = [100.0, 5000.0]
//! t1_steps = 40
//! t2_range = [20.0, 1800.0]
//! t2_steps = 40
//!
//! [phantom]
//! height = 32
//! width = 32
//! # omit segments for the built-in head layout
//! [[phantom.segments]]
//! name = "csf"
//! t1_ms = 4000.0
//! t2_ms = 1600.0
//! proton_density = 1.0
//! ellipses = [[0.5, 0.5, 0.2, 0.1]]   # centre row, centre col, radius row, radius col
//!
//! [sampling]
//! ratios = [8, 16]
//! shift = "shifted"           # or "fixed"
//! noise_level = 0.0           # |w| / |A x0|
//!
//! [solver]
//! max_iters = 40
//! tolerance = 1e-6
//! epsilons = [0.0, 0.2, 0.4, 0.6, 0.8]
//! methods = ["brute-exact", "tree-exact", "tree-ann"]
//! audit_fraction = 0.0
//!
//! [solve]
//! method = "tree-ann"
//! epsilon = 0.4
//! ratio = 8
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use cover_ipg::mrf::{Ellipse, ExcitationSequence, ParameterGrid, Phantom, Segment};
use cover_ipg::operators::ShiftRule;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dictionary: DictionarySpec,
    #[serde(default)]
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub solve: SolveSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionarySpec {
    pub excitations: usize,
    pub tr_ms: f64,
    pub te_ms: Option<f64>,
    pub t1_range: [f64; 2],
    pub t1_steps: usize,
    pub t2_range: [f64; 2],
    pub t2_steps: usize,
}

impl Default for DictionarySpec {
    fn default() -> Self {
        Self {
            excitations: 128,
            tr_ms: 37.0,
            te_ms: None,
            t1_range: [100.0, 5000.0],
            t1_steps: 40,
            t2_range: [20.0, 1800.0],
            t2_steps: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub height: usize,
    pub width: usize,
    pub segments: Option<Vec<SegmentSpec>>,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            segments: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub name: String,
    pub t1_ms: f64,
    pub t2_ms: f64,
    pub proton_density: f64,
    /// `[centre_row, centre_col, radius_row, radius_col]`, fractions of the
    /// image size.
    pub ellipses: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    Shifted,
    Fixed,
}

impl From<Shift> for ShiftRule {
    fn from(s: Shift) -> Self {
        match s {
            Shift::Shifted => ShiftRule::Shifted,
            Shift::Fixed => ShiftRule::Fixed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    pub ratios: Vec<usize>,
    pub shift: Shift,
    pub noise_level: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            ratios: vec![8, 16],
            shift: Shift::Shifted,
            noise_level: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BruteExact,
    TreeExact,
    TreeAnn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BruteExact => "brute-exact",
            Method::TreeExact => "tree-exact",
            Method::TreeAnn => "tree-ann",
        }
    }

    pub fn needs_tree(self) -> bool {
        self != Method::BruteExact
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: usize,
    pub tolerance: f64,
    pub step_size: Option<f64>,
    pub epsilons: Vec<f64>,
    pub methods: Vec<Method>,
    pub audit_fraction: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            max_iters: 40,
            tolerance: 1e-6,
            step_size: None,
            epsilons: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            methods: vec![Method::BruteExact, Method::TreeExact, Method::TreeAnn],
            audit_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSpec {
    pub method: Method,
    pub epsilon: f64,
    pub ratio: usize,
}

impl Default for SolveSpec {
    fn default() -> Self {
        Self {
            method: Method::TreeAnn,
            epsilon: 0.4,
            ratio: 8,
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a config file; `output_dir` is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate().map_err(|message| HarnessError::Config {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let s = &self.solver;
        if let Some(e) = s.epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(format!("epsilon values must be nonnegative, got {e}"));
        }
        if s.methods.is_empty() || s.epsilons.is_empty() {
            return Err("solver.methods and solver.epsilons must be nonempty".into());
        }
        if self.sampling.ratios.is_empty() {
            return Err("sampling.ratios must be nonempty".into());
        }
        let h = self.phantom.height;
        for &r in self.sampling.ratios.iter().chain(std::iter::once(&self.solve.ratio)) {
            if r == 0 || !h.is_multiple_of(r) {
                return Err(format!("ratio {r} must divide the phantom height {h}"));
            }
        }
        if !(self.sampling.noise_level >= 0.0 && self.sampling.noise_level.is_finite()) {
            return Err("sampling.noise_level must be nonnegative".into());
        }
        if !(self.solve.epsilon >= 0.0 && self.solve.epsilon.is_finite()) {
            return Err("solve.epsilon must be nonnegative".into());
        }
        Ok(())
    }

    pub fn sequence(&self) -> Result<ExcitationSequence> {
        let d = &self.dictionary;
        let ramp = ExcitationSequence::ramp(d.excitations)?;
        let te = d.te_ms.unwrap_or(d.tr_ms / 2.0);
        Ok(ExcitationSequence::new(ramp.flip_angles_deg().to_vec(), d.tr_ms, te)?)
    }

    pub fn grid(&self) -> Result<ParameterGrid> {
        let d = &self.dictionary;
        Ok(ParameterGrid::log_spaced(
            (d.t1_range[0], d.t1_range[1]),
            d.t1_steps,
            (d.t2_range[0], d.t2_range[1]),
            d.t2_steps,
        )?)
    }

    /// Phantom with tissue values snapped to the nearest grid entry.
    pub fn phantom(&self, grid: &ParameterGrid) -> Result<Phantom> {
        let p = &self.phantom;
        let phantom = match &p.segments {
            None => Phantom::desk(p.height, p.width, grid)?,
            Some(segs) => {
                let segments = segs
                    .iter()
                    .map(|s| Segment {
                        name: s.name.clone(),
                        shapes: s
                            .ellipses
                            .iter()
                            .map(|e| Ellipse {
                                center: (e[0], e[1]),
                                radii: (e[2], e[3]),
                            })
                            .collect(),
                        params: grid.nearest(s.t1_ms, s.t2_ms),
                        proton_density: s.proton_density,
                    })
                    .collect();
                Phantom::rasterize(p.height, p.width, segments)?
            }
        };
        Ok(phantom)
    }
}
