//! `CKPT` files: named parameter tensors followed by the Adam state.
//!
//! Layout (all integers `u32` LE unless noted):
//! `"CKPT"`, tensor count, then per tensor: name length, UTF-8 name, rank,
//! extents, `f64` LE values row-major. The Adam state follows as a `u64` LE
//! step count and the same tensor layout with entries `m/<name>` and
//! `v/<name>` for every parameter.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::adam::AdamState;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::features::{u32_le, Reader};
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"CKPT";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub names: Vec<String>,
    pub params: Vec<Tensor<F>>,
    pub adam: AdamState<F>,
}

fn write_tensors<F: Real>(out: &mut impl Write, entries: &[(String, &Tensor<F>)]) -> Result<()> {
    out.write_all(&u32_le(entries.len())?)?;
    for (name, t) in entries {
        out.write_all(&u32_le(name.len())?)?;
        out.write_all(name.as_bytes())?;
        out.write_all(&u32_le(t.rank())?)?;
        for &d in t.shape() {
            out.write_all(&u32_le(d)?)?;
        }
        for v in t.data() {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_tensors<F: Real>(r: &mut Reader<'_>) -> Result<Vec<(String, Tensor<F>)>> {
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format(r.path, "tensor name is not UTF-8"))?
            .to_owned();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let numel: usize = shape.iter().product();
        let data = (0..numel).map(|_| r.f64().map(F::of)).collect::<Result<Vec<_>>>()?;
        let t = Tensor::new(shape, data).map_err(|e| Error::format(r.path, format!("{name}: {e}")))?;
        out.push((name, t));
    }
    Ok(out)
}

pub fn write_checkpoint<F: Real>(
    path: &Path,
    names: &[String],
    params: &[Tensor<F>],
    adam: &AdamState<F>,
) -> Result<()> {
    if names.len() != params.len() || adam.m.len() != params.len() || adam.v.len() != params.len() {
        return Err(Error::shape("checkpoint names, parameters and Adam state disagree"));
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(MAGIC)?;
    let entries: Vec<_> = names.iter().cloned().zip(params).collect();
    write_tensors(&mut out, &entries)?;
    out.write_all(&adam.step_count.to_le_bytes())?;
    let moments: Vec<_> = names
        .iter()
        .zip(&adam.m)
        .map(|(n, t)| (format!("m/{n}"), t))
        .chain(names.iter().zip(&adam.v).map(|(n, t)| (format!("v/{n}"), t)))
        .collect();
    write_tensors(&mut out, &moments)?;
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<F: Real>(path: &Path) -> Result<Checkpoint<F>> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0, path };
    r.magic(MAGIC)?;
    let (names, params): (Vec<_>, Vec<_>) = read_tensors::<F>(&mut r)?.into_iter().unzip();
    let step_count = r.u64()?;
    let moments = read_tensors::<F>(&mut r)?;
    r.finish()?;
    if moments.len() != 2 * names.len() {
        return Err(Error::format(path, "Adam state does not cover every parameter"));
    }
    let (m, v) = moments.split_at(names.len());
    for (i, name) in names.iter().enumerate() {
        if m[i].0 != format!("m/{name}") || v[i].0 != format!("v/{name}") {
            return Err(Error::format(path, format!("Adam moments out of order at {name}")));
        }
    }
    Ok(Checkpoint {
        names,
        params,
        adam: AdamState {
            m: m.iter().map(|(_, t)| t.clone()).collect(),
            v: v.iter().map(|(_, t)| t.clone()).collect(),
            step_count,
        },
    })
}
