//! Binary tree file.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes  "CTREEv01"
//! d            u64      number of points
//! D            u64      point dimension
//! sigma        f64
//! L_max        i32
//! node_count   u64
//! node_count preorder records:
//!   point_id   u64
//!   scale      i32
//!   maxdist    f64
//!   children   u32      number of child records that follow this subtree root
//!   dups       u32
//!   dup ids    dups x u64
//! ```
//!
//! Children are written in stored order, so reading reproduces the node
//! structure exactly. Per-child reach values are recomputed from the points
//! on load.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{CoverTree, Node, PointSet};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"CTREEv01";

pub fn write_tree<T: Real, W: Write>(tree: &CoverTree<T>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u64::<LittleEndian>(tree.points.len() as u64)?;
    w.write_u64::<LittleEndian>(tree.points.dim() as u64)?;
    w.write_f64::<LittleEndian>(tree.sigma.as_f64())?;
    w.write_i32::<LittleEndian>(tree.max_scale)?;
    w.write_u64::<LittleEndian>(tree.nodes.len() as u64)?;

    let mut stack = vec![0usize];
    while let Some(idx) = stack.pop() {
        let node = &tree.nodes[idx];
        w.write_u64::<LittleEndian>(node.point_id as u64)?;
        w.write_i32::<LittleEndian>(node.scale)?;
        w.write_f64::<LittleEndian>(node.maxdist.as_f64())?;
        w.write_u32::<LittleEndian>(node.children.len() as u32)?;
        w.write_u32::<LittleEndian>(node.duplicate_ids.len() as u32)?;
        for &dup in &node.duplicate_ids {
            w.write_u64::<LittleEndian>(dup as u64)?;
        }
        stack.extend(node.children.iter().rev());
    }
    Ok(())
}

/// Reads a tree written by [`write_tree`] over the same `points`.
pub fn read_tree<T: Real, R: Read>(mut r: R, points: PointSet<T>) -> Result<CoverTree<T>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a cover tree file".into()));
    }
    let d = r.read_u64::<LittleEndian>()? as usize;
    let dim = r.read_u64::<LittleEndian>()? as usize;
    if d != points.len() || dim != points.dim() {
        return Err(Error::Format(format!(
            "tree built for {d} points of dimension {dim}, given {} of dimension {}",
            points.len(),
            points.dim()
        )));
    }
    let sigma = T::lit(r.read_f64::<LittleEndian>()?);
    let max_scale = r.read_i32::<LittleEndian>()?;
    let count = r.read_u64::<LittleEndian>()? as usize;
    if count == 0 || count > d {
        return Err(Error::Format(format!("node count {count} invalid for {d} points")));
    }

    let mut nodes: Vec<Node<T>> = Vec::with_capacity(count);
    // (arena index, children still to attach)
    let mut open: Vec<(usize, u32)> = Vec::new();
    for idx in 0..count {
        let point_id = read_id(&mut r, d)?;
        let scale = r.read_i32::<LittleEndian>()?;
        let maxdist = T::lit(r.read_f64::<LittleEndian>()?);
        let n_children = r.read_u32::<LittleEndian>()?;
        let n_dups = r.read_u32::<LittleEndian>()?;
        let duplicate_ids = (0..n_dups).map(|_| read_id(&mut r, d)).collect::<Result<Vec<_>>>()?;

        if idx > 0 {
            let (parent, remaining) = open
                .last_mut()
                .ok_or_else(|| Error::Format("record outside any subtree".into()))?;
            *remaining -= 1;
            let parent = *parent;
            if *remaining == 0 {
                open.pop();
            }
            nodes[parent].children.push(idx);
        }
        let mut node = Node::new(point_id, scale);
        node.maxdist = maxdist;
        node.duplicate_ids = duplicate_ids;
        nodes.push(node);
        if n_children > 0 {
            open.push((idx, n_children));
        }
    }
    if !open.is_empty() {
        return Err(Error::Format("truncated node records".into()));
    }

    let mut tree = CoverTree {
        points,
        nodes,
        sigma,
        max_scale,
        build_distances: 0,
    };
    let stored: Vec<T> = tree.nodes.iter().map(|n| n.maxdist).collect();
    tree.build_distances = tree.compute_reach();
    // compute_reach overwrites maxdist; keep what the file says
    for (node, m) in tree.nodes.iter_mut().zip(stored) {
        node.maxdist = m;
    }
    Ok(tree)
}

fn read_id<R: Read>(r: &mut R, d: usize) -> Result<usize> {
    let id = r.read_u64::<LittleEndian>()? as usize;
    if id >= d {
        return Err(Error::Format(format!("point id {id} out of range")));
    }
    Ok(id)
}
