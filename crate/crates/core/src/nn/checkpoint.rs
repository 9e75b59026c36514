//! Model checkpoint file.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic        8 bytes  "SGNNCKPT"
//! version      u32      1
//! config       u32 len + UTF-8 JSON of ModelConfig
//! extra        u32 len + UTF-8 JSON (caller metadata, may be "{}")
//! seed         u64
//! blocks       u32 count, then per block:
//!                u32 name len + name, u32 ndim, ndim × u32 dims,
//!                prod(dims) × f64 values
//! normaliser   u32 dim, dim × f64 mean, dim × f64 std
//! optimizer    u8 flag; if 1: f64 lr, f64 β₁, f64 β₂, f64 ε, u64 step,
//!                n_params × f64 m, n_params × f64 v
//! ```

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::nn::{AdamConfig, AdamState, ModelConfig, ModelParams, Normalizer};

const MAGIC: &[u8; 8] = b"SGNNCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub normalizer: Normalizer,
    pub optimizer: Option<AdamState>,
    pub seed: u64,
    pub extra: String,
}

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    out.write_u32::<LE>(s.len() as u32)?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(input: &mut R) -> Result<String> {
    let len = input.read_u32::<LE>()? as usize;
    if len > 1 << 28 {
        return Err(Error::Format(format!("string length {len} is implausible")));
    }
    let mut buf = vec![0u8; len];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

fn write_f64s<W: Write>(out: &mut W, values: &[f64]) -> Result<()> {
    for &v in values {
        out.write_f64::<LE>(v)?;
    }
    Ok(())
}

fn read_f64s<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; n];
    input.read_f64_into::<LE>(&mut v)?;
    Ok(v)
}

impl Checkpoint {
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_u32::<LE>(VERSION)?;
        write_str(&mut out, &serde_json::to_string(&self.params.config)?)?;
        write_str(&mut out, &self.extra)?;
        out.write_u64::<LE>(self.seed)?;
        let layout = &self.params.layout;
        out.write_u32::<LE>(layout.blocks.len() as u32)?;
        for b in &layout.blocks {
            write_str(&mut out, &b.name)?;
            out.write_u32::<LE>(b.shape.len() as u32)?;
            for &d in &b.shape {
                out.write_u32::<LE>(d as u32)?;
            }
            write_f64s(&mut out, &self.params.data[b.range()])?;
        }
        out.write_u32::<LE>(self.normalizer.mean.len() as u32)?;
        write_f64s(&mut out, &self.normalizer.mean)?;
        write_f64s(&mut out, &self.normalizer.std)?;
        match &self.optimizer {
            None => out.write_u8(0)?,
            Some(st) => {
                out.write_u8(1)?;
                let c = st.config;
                write_f64s(&mut out, &[c.lr, c.beta1, c.beta2, c.eps])?;
                out.write_u64::<LE>(st.step)?;
                write_f64s(&mut out, &st.m)?;
                write_f64s(&mut out, &st.v)?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let version = input.read_u32::<LE>()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let config: ModelConfig = serde_json::from_str(&read_str(&mut input)?)?;
        config.validate()?;
        let extra = read_str(&mut input)?;
        let seed = input.read_u64::<LE>()?;
        let mut params = ModelParams::zeros(&config);
        let n_blocks = input.read_u32::<LE>()? as usize;
        if n_blocks != params.layout.blocks.len() {
            return Err(Error::Format(format!(
                "checkpoint has {n_blocks} tensors, configuration implies {}",
                params.layout.blocks.len()
            )));
        }
        for i in 0..n_blocks {
            let name = read_str(&mut input)?;
            let ndim = input.read_u32::<LE>()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim.min(8) {
                shape.push(input.read_u32::<LE>()? as usize);
            }
            let expected = &params.layout.blocks[i];
            if name != expected.name || shape != expected.shape {
                return Err(Error::Format(format!(
                    "tensor {i} is `{name}` {shape:?}, expected `{}` {:?}",
                    expected.name, expected.shape
                )));
            }
            let range = expected.range();
            input.read_f64_into::<LE>(&mut params.data[range])?;
        }
        let dim = input.read_u32::<LE>()? as usize;
        if dim != config.global_dim {
            return Err(Error::Format(format!("normaliser width {dim} != global width {}", config.global_dim)));
        }
        let normalizer = Normalizer { mean: read_f64s(&mut input, dim)?, std: read_f64s(&mut input, dim)? };
        let optimizer = match input.read_u8()? {
            0 => None,
            1 => {
                let h = read_f64s(&mut input, 4)?;
                let step = input.read_u64::<LE>()?;
                let n = params.len();
                Some(AdamState {
                    config: AdamConfig { lr: h[0], beta1: h[1], beta2: h[2], eps: h[3] },
                    step,
                    m: read_f64s(&mut input, n)?,
                    v: read_f64s(&mut input, n)?,
                })
            }
            f => return Err(Error::Format(format!("bad optimizer flag {f}"))),
        };
        Ok(Checkpoint { params, normalizer, optimizer, seed, extra })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
