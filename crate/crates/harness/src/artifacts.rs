//! On-disk layout of an experiment directory.
//!
//! ```text
//! <output_dir>/
//!   dictionary.bin          gen-dict
//!   tree.bin                build-tree
//!   phantom.json            gen-phantom
//!   runs/<label>/telemetry.csv
//!   runs/<label>/summary.json
//!   sweep.csv               sweep
//!   report.csv, report.json report
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cover_ipg::covertree::{read_tree, write_tree, CoverTree};
use cover_ipg::model::{read_dictionary, write_dictionary, Dictionary, TissueParams};
use cover_ipg::mrf::{Ellipse, Phantom, Segment};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dictionary(&self) -> PathBuf {
        self.root.join("dictionary.bin")
    }

    pub fn tree(&self) -> PathBuf {
        self.root.join("tree.bin")
    }

    pub fn phantom(&self) -> PathBuf {
        self.root.join("phantom.json")
    }

    pub fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn run_dir(&self, label: &str) -> PathBuf {
        self.runs().join(label)
    }

    pub fn sweep_table(&self) -> PathBuf {
        self.root.join("sweep.csv")
    }

    pub fn report_csv(&self) -> PathBuf {
        self.root.join("report.csv")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn open(path: &Path, hint: &'static str) -> Result<BufReader<File>> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact {
            path: path.to_path_buf(),
            hint,
        });
    }
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn save_dictionary(path: &Path, dict: &Dictionary<f64>) -> Result<()> {
    let mut w = create(path)?;
    write_dictionary(dict, &mut w)?;
    finish(w, path)
}

pub fn load_dictionary(path: &Path) -> Result<Dictionary<f64>> {
    Ok(read_dictionary(open(path, "gen-dict")?)?)
}

pub fn save_tree(path: &Path, tree: &CoverTree<f64>) -> Result<()> {
    let mut w = create(path)?;
    write_tree(tree, &mut w)?;
    finish(w, path)
}

/// Reads a tree built over the unit-norm atoms of `dict`.
pub fn load_tree(path: &Path, dict: &Dictionary<f64>) -> Result<CoverTree<f64>> {
    Ok(read_tree(open(path, "build-tree")?, dict.normalized().clone())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PhantomFile {
    height: usize,
    width: usize,
    segments: Vec<SegmentFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SegmentFile {
    name: String,
    t1_ms: f64,
    t2_ms: f64,
    proton_density: f64,
    ellipses: Vec<[f64; 4]>,
}

/// Stores the segment description; the label map is re-rasterized on load.
pub fn save_phantom(path: &Path, phantom: &Phantom) -> Result<()> {
    let file = PhantomFile {
        height: phantom.height(),
        width: phantom.width(),
        segments: phantom
            .segments()
            .iter()
            .map(|s| SegmentFile {
                name: s.name.clone(),
                t1_ms: s.params.t1_ms,
                t2_ms: s.params.t2_ms,
                proton_density: s.proton_density,
                ellipses: s
                    .shapes
                    .iter()
                    .map(|e| [e.center.0, e.center.1, e.radii.0, e.radii.1])
                    .collect(),
            })
            .collect(),
    };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &file)?;
    w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    finish(w, path)
}

pub fn load_phantom(path: &Path) -> Result<Phantom> {
    let file: PhantomFile = serde_json::from_reader(open(path, "gen-phantom")?)?;
    let segments = file
        .segments
        .into_iter()
        .map(|s| Segment {
            name: s.name,
            shapes: s
                .ellipses
                .iter()
                .map(|e| Ellipse {
                    center: (e[0], e[1]),
                    radii: (e[2], e[3]),
                })
                .collect(),
            params: TissueParams::new(s.t1_ms, s.t2_ms),
            proton_density: s.proton_density,
        })
        .collect();
    Ok(Phantom::rasterize(file.height, file.width, segments)?)
}
