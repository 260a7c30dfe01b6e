//! Cartesian k-space row subsampling per image slice.
//!
//! Input vectors use the [`ProductImage`](crate::model::ProductImage)
//! layout: slice `l` occupies `x[l*J .. (l+1)*J]`, and inside a slice pixel
//! `(r, c)` sits at `r * width + c`. Measurements are stacked the same way:
//! slice `l` holds its retained k-space rows in pattern order, each row
//! `width` long.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::{check_len, LinearOperator};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// How retained rows move from one slice to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftRule {
    /// Slice `l` keeps rows `(l mod ratio) + k * ratio`.
    Shifted,
    /// Every slice keeps rows `k * ratio`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpiPattern {
    height: usize,
    width: usize,
    rows: Vec<Vec<usize>>,
}

impl EpiPattern {
    pub fn new(height: usize, width: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        if height == 0 || width == 0 || rows.is_empty() {
            return Err(Error::InvalidPattern("empty grid or no slices".into()));
        }
        let per_slice = rows[0].len();
        if per_slice == 0 {
            return Err(Error::InvalidPattern("slice keeps no rows".into()));
        }
        for (l, r) in rows.iter().enumerate() {
            if r.len() != per_slice {
                return Err(Error::InvalidPattern(format!(
                    "slice {l} keeps {} rows, slice 0 keeps {per_slice}",
                    r.len()
                )));
            }
            if let Some(&bad) = r.iter().find(|&&k| k >= height) {
                return Err(Error::InvalidPattern(format!(
                    "slice {l}: row {bad} outside 0..{height}"
                )));
            }
        }
        Ok(Self { height, width, rows })
    }

    /// Uniform row subselection, one row in `ratio`.
    pub fn lattice(height: usize, width: usize, slices: usize, ratio: usize, shift: ShiftRule) -> Result<Self> {
        if ratio == 0 || !height.is_multiple_of(ratio) {
            return Err(Error::InvalidPattern(format!(
                "ratio {ratio} does not divide height {height}"
            )));
        }
        let rows = (0..slices)
            .map(|l| {
                let offset = match shift {
                    ShiftRule::Shifted => l % ratio,
                    ShiftRule::Fixed => 0,
                };
                (0..height / ratio).map(|k| offset + k * ratio).collect()
            })
            .collect();
        Self::new(height, width, rows)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn slices(&self) -> usize {
        self.rows.len()
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn rows(&self, slice: usize) -> &[usize] {
        &self.rows[slice]
    }

    pub fn rows_per_slice(&self) -> usize {
        self.rows[0].len()
    }

    /// `n = slices * height * width`
    pub fn input_dim(&self) -> usize {
        self.slices() * self.pixels()
    }

    /// `m = slices * rows_per_slice * width`
    pub fn output_dim(&self) -> usize {
        self.slices() * self.rows_per_slice() * self.width
    }
}

/// Writes the pattern as text:
///
/// ```text
/// # epi-pattern v1
/// height 32
/// width 32
/// slices 64
/// slice 0: 0 8 16 24
/// ...
/// ```
pub fn write_pattern<W: Write>(pattern: &EpiPattern, mut w: W) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# epi-pattern v1");
    let _ = writeln!(s, "height {}", pattern.height);
    let _ = writeln!(s, "width {}", pattern.width);
    let _ = writeln!(s, "slices {}", pattern.slices());
    for (l, rows) in pattern.rows.iter().enumerate() {
        let list: Vec<String> = rows.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "slice {l}: {}", list.join(" "));
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_pattern<R: BufRead>(r: R) -> Result<EpiPattern> {
    let bad = |msg: String| Error::Format(format!("pattern: {msg}"));
    let (mut height, mut width, mut slices) = (None, None, None);
    let mut rows: Vec<Option<Vec<usize>>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line
            .split_once(' ')
            .ok_or_else(|| bad(format!("cannot parse '{line}'")))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| bad(format!("'{v}': {e}")));
        match key {
            "height" => height = Some(parse(rest)?),
            "width" => width = Some(parse(rest)?),
            "slices" => {
                let n = parse(rest)?;
                slices = Some(n);
                rows = vec![None; n];
            }
            "slice" => {
                let (idx, list) = rest
                    .split_once(':')
                    .ok_or_else(|| bad(format!("missing ':' in '{line}'")))?;
                let idx = parse(idx)?;
                let kept = list.split_whitespace().map(parse).collect::<Result<Vec<_>>>()?;
                let slot = rows
                    .get_mut(idx)
                    .ok_or_else(|| bad(format!("slice {idx} before or beyond 'slices' header")))?;
                *slot = Some(kept);
            }
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
    }
    let (height, width) = height.zip(width).ok_or_else(|| bad("missing height or width".into()))?;
    slices.ok_or_else(|| bad("missing slices".into()))?;
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(l, r)| r.ok_or_else(|| bad(format!("slice {l} missing"))))
        .collect::<Result<Vec<_>>>()?;
    EpiPattern::new(height, width, rows)
}

/// Per-slice unitary 2-D DFT followed by row selection.
pub struct EpiOperator<T: Real> {
    pattern: EpiPattern,
    col_fwd: Arc<dyn Fft<T>>,
    col_inv: Arc<dyn Fft<T>>,
    row_fwd: Arc<dyn Fft<T>>,
    row_inv: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for EpiOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EpiOperator").field("pattern", &self.pattern).finish()
    }
}

impl<T: Real> EpiOperator<T> {
    pub fn new(pattern: EpiPattern) -> Self {
        let mut planner = FftPlanner::new();
        let col_fwd = planner.plan_fft(pattern.height, FftDirection::Forward);
        let col_inv = planner.plan_fft(pattern.height, FftDirection::Inverse);
        let row_fwd = planner.plan_fft(pattern.width, FftDirection::Forward);
        let row_inv = planner.plan_fft(pattern.width, FftDirection::Inverse);
        let scale = T::from_count(pattern.pixels()).sqrt().recip();
        Self {
            pattern,
            col_fwd,
            col_inv,
            row_fwd,
            row_inv,
            scale,
        }
    }

    pub fn pattern(&self) -> &EpiPattern {
        &self.pattern
    }

    /// `n / m`, the step size used by the reconstruction.
    pub fn undersampling(&self) -> f64 {
        self.pattern.input_dim() as f64 / self.pattern.output_dim() as f64
    }

    fn forward_slice(&self, image: &[Complex<T>], keep: &[usize], out: &mut [Complex<T>]) {
        let (h, w) = (self.pattern.height, self.pattern.width);
        // columns first, then only the retained rows need their row transform
        let mut col = vec![Complex::new(T::zero(), T::zero()); h];
        let mut transformed = vec![Complex::new(T::zero(), T::zero()); h * w];
        for c in 0..w {
            for r in 0..h {
                col[r] = image[r * w + c];
            }
            self.col_fwd.process(&mut col);
            for r in 0..h {
                transformed[r * w + c] = col[r];
            }
        }
        for (k, &row) in keep.iter().enumerate() {
            let dst = &mut out[k * w..(k + 1) * w];
            dst.copy_from_slice(&transformed[row * w..(row + 1) * w]);
            self.row_fwd.process(dst);
            for v in dst.iter_mut() {
                *v = *v * self.scale;
            }
        }
    }

    fn adjoint_slice(&self, meas: &[Complex<T>], keep: &[usize], out: &mut [Complex<T>]) {
        let (h, w) = (self.pattern.height, self.pattern.width);
        for v in out.iter_mut() {
            *v = Complex::new(T::zero(), T::zero());
        }
        for (k, &row) in keep.iter().enumerate() {
            let dst = &mut out[row * w..(row + 1) * w];
            for (d, s) in dst.iter_mut().zip(&meas[k * w..(k + 1) * w]) {
                *d = *d + *s;
            }
        }
        let mut filled = vec![false; h];
        for &row in keep {
            if !filled[row] {
                filled[row] = true;
                self.row_inv.process(&mut out[row * w..(row + 1) * w]);
            }
        }
        let mut col = vec![Complex::new(T::zero(), T::zero()); h];
        for c in 0..w {
            for r in 0..h {
                col[r] = out[r * w + c];
            }
            self.col_inv.process(&mut col);
            for r in 0..h {
                out[r * w + c] = col[r] * self.scale;
            }
        }
    }
}

impl<T: Real> LinearOperator<T> for EpiOperator<T> {
    fn input_dim(&self) -> usize {
        self.pattern.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.pattern.output_dim()
    }

    fn apply(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_len(self.input_dim(), x.len())?;
        let j = self.pattern.pixels();
        let per = self.pattern.rows_per_slice() * self.pattern.width;
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.output_dim()];
        y.par_chunks_mut(per)
            .zip(x.par_chunks(j))
            .enumerate()
            .for_each(|(l, (out, image))| self.forward_slice(image, &self.pattern.rows[l], out));
        Ok(y)
    }

    fn adjoint(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_len(self.output_dim(), y.len())?;
        let j = self.pattern.pixels();
        let per = self.pattern.rows_per_slice() * self.pattern.width;
        let mut x = vec![Complex::new(T::zero(), T::zero()); self.input_dim()];
        x.par_chunks_mut(j)
            .zip(y.par_chunks(per))
            .enumerate()
            .for_each(|(l, (out, meas))| self.adjoint_slice(meas, &self.pattern.rows[l], out));
        Ok(x)
    }
}
