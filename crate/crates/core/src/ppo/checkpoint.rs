//! Versioned binary checkpoints.
//!
//! Layout (little-endian): magic `EPCK`, format version `u32`, master seed
//! `u64`, hyperparameters as length-prefixed JSON, the controlled district
//! ids as length-prefixed strings, then the policy and value networks. A
//! network is its layer count, `(inputs u32, outputs u32, activation u8)` per
//! layer and the flat parameters as `f64`.

use std::io::{Read, Write};
use std::path::Path;

use super::model::ActorCritic;
use super::net::{Activation, Dense, Mlp};
use super::PpoHyper;
use crate::error::{Error, Result};
use crate::io;

const MAGIC: &[u8; 4] = b"EPCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: ActorCritic,
    pub hyper: PpoHyper,
    pub seed: u64,
    pub controlled: Vec<String>,
}

impl Checkpoint {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        write_bytes(&mut w, &serde_json::to_vec(&self.hyper)?)?;
        w.write_all(&(self.controlled.len() as u32).to_le_bytes())?;
        for id in &self.controlled {
            write_bytes(&mut w, id.as_bytes())?;
        }
        write_net(&mut w, &self.net.policy)?;
        write_net(&mut w, &self.net.value)?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::data("not a checkpoint file"));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::data(format!("unsupported checkpoint version {version}")));
        }
        let mut seed = [0u8; 8];
        r.read_exact(&mut seed)?;
        let hyper: PpoHyper = serde_json::from_slice(&read_bytes(&mut r)?)?;
        let n = read_u32(&mut r)? as usize;
        let controlled = (0..n)
            .map(|_| String::from_utf8(read_bytes(&mut r)?).map_err(|_| Error::data("district id is not UTF-8")))
            .collect::<Result<Vec<_>>>()?;
        let policy = read_net(&mut r)?;
        let value = read_net(&mut r)?;
        if policy.inputs() != value.inputs() || value.outputs() != 1 {
            return Err(Error::data("policy and value networks do not fit together"));
        }
        Ok(Self { net: ActorCritic { policy, value }, hyper, seed: u64::from_le_bytes(seed), controlled })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(io::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(io::open(path)?))
    }
}

fn write_bytes<W: Write>(w: &mut W, b: &[u8]) -> Result<()> {
    w.write_all(&(b.len() as u32).to_le_bytes())?;
    w.write_all(b)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_bytes<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let n = read_u32(r)? as usize;
    if n > 1 << 24 {
        return Err(Error::data("checkpoint field too large"));
    }
    let mut b = vec![0u8; n];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn write_net<W: Write>(w: &mut W, net: &Mlp) -> Result<()> {
    w.write_all(&(net.layers().len() as u32).to_le_bytes())?;
    for l in net.layers() {
        w.write_all(&(l.inputs as u32).to_le_bytes())?;
        w.write_all(&(l.outputs as u32).to_le_bytes())?;
        w.write_all(&[l.activation.code()])?;
    }
    for p in net.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_net<R: Read>(r: &mut R) -> Result<Mlp> {
    let n = read_u32(r)? as usize;
    if n == 0 || n > 64 {
        return Err(Error::data(format!("implausible layer count {n}")));
    }
    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let inputs = read_u32(r)? as usize;
        let outputs = read_u32(r)? as usize;
        let mut act = [0u8];
        r.read_exact(&mut act)?;
        if inputs == 0 || outputs == 0 || inputs > 1 << 16 || outputs > 1 << 16 {
            return Err(Error::data("implausible layer shape"));
        }
        layers.push(Dense { inputs, outputs, activation: Activation::from_code(act[0])? });
    }
    let count: usize = layers.iter().map(Dense::param_count).sum();
    let mut params = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b)?;
        params.push(f64::from_le_bytes(b));
    }
    Mlp::from_parts(layers, params)
}
