//! Segment-labelled numerical phantoms and parameter maps.

use super::ParameterGrid;
use crate::error::{Error, Result};
use crate::model::{Dictionary, ProductImage, TissueParams};
use crate::scalar::{self, Real};

/// Axis-aligned ellipse in fractional image coordinates (`0..1` on both
/// axes, row first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: (f64, f64),
    pub radii: (f64, f64),
}

impl Ellipse {
    pub fn contains(&self, row: f64, col: f64) -> bool {
        let dy = (row - self.center.0) / self.radii.0;
        let dx = (col - self.center.1) / self.radii.1;
        dy * dy + dx * dx <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub name: String,
    pub shapes: Vec<Ellipse>,
    pub params: TissueParams,
    pub proton_density: f64,
}

/// Label map plus per-segment tissue values. Label 0 is background with
/// zero proton density; label `k > 0` is `segments[k - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    height: usize,
    width: usize,
    labels: Vec<usize>,
    segments: Vec<Segment>,
}

impl Phantom {
    /// Paints segments in order; later segments cover earlier ones. Pixel
    /// centres are sampled at `(r + 0.5) / height`.
    pub fn rasterize(height: usize, width: usize, segments: Vec<Segment>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Config("phantom needs a nonempty grid".into()));
        }
        for s in &segments {
            if !(s.proton_density >= 0.0 && s.proton_density.is_finite()) {
                return Err(Error::Config(format!(
                    "segment '{}' has invalid proton density",
                    s.name
                )));
            }
            if s.shapes.iter().any(|e| !(e.radii.0 > 0.0 && e.radii.1 > 0.0)) {
                return Err(Error::Config(format!("segment '{}' has a degenerate ellipse", s.name)));
            }
        }
        let mut labels = vec![0; height * width];
        for r in 0..height {
            for c in 0..width {
                let (y, x) = ((r as f64 + 0.5) / height as f64, (c as f64 + 0.5) / width as f64);
                for (k, s) in segments.iter().enumerate() {
                    if s.shapes.iter().any(|e| e.contains(y, x)) {
                        labels[r * width + c] = k + 1;
                    }
                }
            }
        }
        Ok(Self {
            height,
            width,
            labels,
            segments,
        })
    }

    /// Head-like layout: skin, muscle, grey matter, white matter and two
    /// CSF ventricles on a background. Tissue values are snapped to the
    /// nearest entry of `grid`.
    pub fn desk(height: usize, width: usize, grid: &ParameterGrid) -> Result<Self> {
        let seg = |name: &str, shapes: Vec<Ellipse>, t1: f64, t2: f64, pd: f64| Segment {
            name: name.to_string(),
            shapes,
            params: grid.nearest(t1, t2),
            proton_density: pd,
        };
        let centred = |ry: f64, rx: f64| Ellipse {
            center: (0.5, 0.5),
            radii: (ry, rx),
        };
        let ventricles = vec![
            Ellipse {
                center: (0.47, 0.41),
                radii: (0.12, 0.05),
            },
            Ellipse {
                center: (0.47, 0.59),
                radii: (0.12, 0.05),
            },
        ];
        Self::rasterize(
            height,
            width,
            vec![
                seg("skin", vec![centred(0.47, 0.40)], 400.0, 60.0, 0.5),
                seg("muscle", vec![centred(0.43, 0.36)], 1100.0, 40.0, 0.6),
                seg("grey matter", vec![centred(0.38, 0.31)], 1300.0, 110.0, 0.8),
                seg("white matter", vec![centred(0.29, 0.22)], 800.0, 70.0, 0.7),
                seg("csf", ventricles, 4000.0, 1600.0, 1.0),
            ],
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn segment_at(&self, j: usize) -> Option<&Segment> {
        self.labels[j].checked_sub(1).map(|k| &self.segments[k])
    }

    pub fn proton_density(&self) -> Vec<f64> {
        (0..self.pixels())
            .map(|j| self.segment_at(j).map_or(0.0, |s| s.proton_density))
            .collect()
    }

    /// Ground-truth parameters per pixel; `None` where no tissue is present.
    pub fn tissue_params(&self) -> Vec<Option<TissueParams>> {
        (0..self.pixels())
            .map(|j| self.segment_at(j).filter(|s| s.proton_density > 0.0).map(|s| s.params))
            .collect()
    }
}

/// Synthesized phantom image with its generating atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedPhantom<T> {
    pub image: ProductImage<T>,
    pub atom_ids: Vec<usize>,
    pub gammas: Vec<T>,
}

/// `X_j = PD(j) * psi_{i(j)} / |psi_{i(j)}|`; background columns are zero
/// and carry atom 0 with zero intensity.
pub fn synthesize_phantom<T: Real>(phantom: &Phantom, dict: &Dictionary<T>) -> Result<SynthesizedPhantom<T>> {
    let mut ids = Vec::with_capacity(phantom.pixels());
    let mut gammas = Vec::with_capacity(phantom.pixels());
    for (j, p) in phantom.tissue_params().into_iter().enumerate() {
        match p {
            None => {
                ids.push(0);
                gammas.push(T::zero());
            }
            Some(p) => {
                let id = dict.find_params(p.t1_ms, p.t2_ms).ok_or(Error::ParameterNotInGrid {
                    pixel: j,
                    t1: p.t1_ms,
                    t2: p.t2_ms,
                })?;
                let pd = phantom.segment_at(j).map_or(0.0, |s| s.proton_density);
                ids.push(id);
                gammas.push(T::lit(pd) / dict.norm(id));
            }
        }
    }
    let image = ProductImage::from_atoms(dict, &ids, &gammas)?;
    Ok(SynthesizedPhantom {
        image,
        atom_ids: ids,
        gammas,
    })
}

/// Recovered parameter maps, one entry per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterMaps {
    pub t1_ms: Vec<f64>,
    pub t2_ms: Vec<f64>,
    /// Intensity relative to the unit-norm atom.
    pub proton_density: Vec<f64>,
}

/// Table lookup per pixel. A pixel with zero intensity maps to
/// `T1 = T2 = 0`.
pub fn params_from_atoms<T: Real>(ids: &[usize], gammas: &[T], dict: &Dictionary<T>) -> Result<ParameterMaps> {
    if ids.len() != gammas.len() {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            found: gammas.len(),
        });
    }
    let mut maps = ParameterMaps {
        t1_ms: Vec::with_capacity(ids.len()),
        t2_ms: Vec::with_capacity(ids.len()),
        proton_density: Vec::with_capacity(ids.len()),
    };
    for (&id, &g) in ids.iter().zip(gammas) {
        dict.atoms().check_id(id)?;
        let p = if g > T::zero() {
            dict.params()[id]
        } else {
            TissueParams::default()
        };
        maps.t1_ms.push(p.t1_ms);
        maps.t2_ms.push(p.t2_ms);
        maps.proton_density.push((g * dict.norm(id)).as_f64());
    }
    Ok(maps)
}

/// Mean absolute T1 and T2 error over tissue pixels, divided by the total
/// pixel count.
pub fn parameter_mae(maps: &ParameterMaps, truth: &[Option<TissueParams>]) -> (f64, f64) {
    let (mut s1, mut s2) = (0.0, 0.0);
    for (j, p) in truth.iter().enumerate() {
        if let Some(p) = p {
            s1 += (maps.t1_ms[j] - p.t1_ms).abs();
            s2 += (maps.t2_ms[j] - p.t2_ms).abs();
        }
    }
    let n = truth.len().max(1) as f64;
    (s1 / n, s2 / n)
}

/// `|x - x0| / |x0|`, or `|x|` when `x0` is zero.
pub fn normalized_error<T: Real>(x: &ProductImage<T>, truth: &ProductImage<T>) -> f64 {
    let e = scalar::dist(x.as_slice(), truth.as_slice()).as_f64();
    let n = scalar::norm(truth.as_slice()).as_f64();
    if n > 0.0 {
        e / n
    } else {
        e
    }
}
