//! Dictionary file. Little-endian throughout.
//!
//! ```text
//! magic    8 bytes  "MRFDICT1"
//! d        u64      number of atoms
//! n        u64      atom dimension
//! atoms    d * n * 2 x f64   row-major, interleaved (re, im)
//! params   d * 2 x f64       (T1 ms, T2 ms) per atom
//! ```
//!
//! Stored atoms are the raw rows; norms and unit rows are recomputed on
//! load.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex;

use super::{Dictionary, TissueParams};
use crate::covertree::PointSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"MRFDICT1";

pub fn write_dictionary<T: Real, W: Write>(dict: &Dictionary<T>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u64::<LittleEndian>(dict.len() as u64)?;
    w.write_u64::<LittleEndian>(dict.dim() as u64)?;
    for atom in dict.atoms().iter() {
        for c in atom {
            w.write_f64::<LittleEndian>(c.re.as_f64())?;
            w.write_f64::<LittleEndian>(c.im.as_f64())?;
        }
    }
    for p in dict.params() {
        w.write_f64::<LittleEndian>(p.t1_ms)?;
        w.write_f64::<LittleEndian>(p.t2_ms)?;
    }
    Ok(())
}

pub fn read_dictionary<T: Real, R: Read>(mut r: R) -> Result<Dictionary<T>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a dictionary file".into()));
    }
    let d = r.read_u64::<LittleEndian>()? as usize;
    let n = r.read_u64::<LittleEndian>()? as usize;
    if d == 0 || n == 0 {
        return Err(Error::Format(format!("empty dictionary header ({d} x {n})")));
    }
    let mut data = Vec::with_capacity(d * n);
    for _ in 0..d * n {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        data.push(Complex::new(T::lit(re), T::lit(im)));
    }
    let mut params = Vec::with_capacity(d);
    for _ in 0..d {
        let t1 = r.read_f64::<LittleEndian>()?;
        let t2 = r.read_f64::<LittleEndian>()?;
        params.push(TissueParams::new(t1, t2));
    }
    Dictionary::new(PointSet::new(n, data)?, params)
}
