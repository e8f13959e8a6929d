//! `WCAE` checkpoints: magic, `u16` version, input shape, the layer table,
//! parameters, running statistics and an optional Adam state, all
//! little-endian with `f64` tensors.

use std::fs;
use std::path::Path;

use super::{build_cae, Activation, CaeModel, LayerSpec, OptimizerState, Section};
use crate::codec::{Reader, Writer};
use crate::error::{Error, FormatError, Result};

const MAGIC: &[u8; 4] = b"WCAE";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: CaeModel,
    pub optimizer: Option<OptimizerState>,
}

fn write_activation(w: &mut Writer, a: Activation) {
    match a {
        Activation::LeakyRelu(s) => {
            w.u8(0);
            w.f64(s);
        }
        Activation::Sigmoid => w.u8(1),
        Activation::Linear => w.u8(2),
    }
}

fn read_activation(r: &mut Reader<'_>) -> std::result::Result<Activation, FormatError> {
    match r.u8()? {
        0 => Ok(Activation::LeakyRelu(r.f64()?)),
        1 => Ok(Activation::Sigmoid),
        2 => Ok(Activation::Linear),
        t => Err(FormatError::Schema(format!("unknown activation tag {t}"))),
    }
}

fn write_spec(w: &mut Writer, spec: &LayerSpec) {
    match *spec {
        LayerSpec::Conv2d {
            filters,
            kernel,
            stride,
            padding,
            activation,
        } => {
            w.u8(0);
            for v in [filters, kernel.0, kernel.1, stride, padding] {
                w.u32(v as u32);
            }
            write_activation(w, activation);
        }
        LayerSpec::Conv2dTranspose {
            filters,
            kernel,
            stride,
            padding,
            output_padding,
            activation,
        } => {
            w.u8(1);
            for v in [filters, kernel.0, kernel.1, stride, padding, output_padding] {
                w.u32(v as u32);
            }
            write_activation(w, activation);
        }
        LayerSpec::BatchNorm => w.u8(2),
        LayerSpec::Dense { units, activation } => {
            w.u8(3);
            w.u32(units as u32);
            write_activation(w, activation);
        }
        LayerSpec::Flatten => w.u8(4),
        LayerSpec::Reshape {
            height,
            width,
            channels,
        } => {
            w.u8(5);
            for v in [height, width, channels] {
                w.u32(v as u32);
            }
        }
        LayerSpec::Activation(a) => {
            w.u8(6);
            write_activation(w, a);
        }
    }
}

fn read_spec(r: &mut Reader<'_>) -> std::result::Result<LayerSpec, FormatError> {
    let u = |r: &mut Reader<'_>| r.u32().map(|v| v as usize);
    Ok(match r.u8()? {
        0 => LayerSpec::Conv2d {
            filters: u(r)?,
            kernel: (u(r)?, u(r)?),
            stride: u(r)?,
            padding: u(r)?,
            activation: read_activation(r)?,
        },
        1 => LayerSpec::Conv2dTranspose {
            filters: u(r)?,
            kernel: (u(r)?, u(r)?),
            stride: u(r)?,
            padding: u(r)?,
            output_padding: u(r)?,
            activation: read_activation(r)?,
        },
        2 => LayerSpec::BatchNorm,
        3 => LayerSpec::Dense {
            units: u(r)?,
            activation: read_activation(r)?,
        },
        4 => LayerSpec::Flatten,
        5 => LayerSpec::Reshape {
            height: u(r)?,
            width: u(r)?,
            channels: u(r)?,
        },
        6 => LayerSpec::Activation(read_activation(r)?),
        t => return Err(FormatError::Schema(format!("unknown layer tag {t}"))),
    })
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u16(VERSION);
        let (h, wd, c) = m.input_shape;
        for v in [h, wd, c] {
            w.u32(v as u32);
        }
        w.u8(m.training as u8);
        w.u32(m.layers.len() as u32);
        for (layer, section) in m.layers.iter().zip(&m.sections) {
            w.u8(match section {
                Section::Encoder => 0,
                Section::Code => 1,
                Section::Decoder => 2,
            });
            write_spec(&mut w, &layer.spec);
        }
        w.u64(m.params.len() as u64);
        w.f64s(&m.params);
        w.u64(m.stats.len() as u64);
        w.f64s(&m.stats);
        match &self.optimizer {
            None => w.u8(0),
            Some(o) => {
                w.u8(1);
                w.u64(o.step);
                for v in [o.learning_rate, o.beta1, o.beta2, o.epsilon] {
                    w.f64(v);
                }
                w.f64s(&o.m);
                w.f64s(&o.v);
            }
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        r.expect_magic(MAGIC)?;
        let version = r.u16()?;
        if version != VERSION {
            return Err(FormatError::UnknownVersion {
                found: version as u32,
                supported: VERSION as u32,
            });
        }
        let shape = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        let training = r.u8()? != 0;
        let n_layers = r.u32()? as usize;
        let (mut enc, mut code, mut dec) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n_layers {
            let section = r.u8()?;
            let spec = read_spec(&mut r)?;
            match section {
                0 => enc.push(spec),
                1 => code.push(spec),
                2 => dec.push(spec),
                s => return Err(FormatError::Schema(format!("unknown section tag {s}"))),
            }
        }
        let mut model = build_cae(&enc, &code, &dec, shape, 0)
            .map_err(|e| FormatError::Schema(format!("layer table does not build: {e}")))?;
        let n_params = r.u64()? as usize;
        if n_params != model.params.len() {
            return Err(FormatError::LengthMismatch(format!(
                "layer table needs {} parameters, file stores {n_params}",
                model.params.len()
            )));
        }
        model.params = r.f64s(n_params)?;
        let n_stats = r.u64()? as usize;
        if n_stats != model.stats.len() {
            return Err(FormatError::LengthMismatch(format!(
                "layer table needs {} running statistics, file stores {n_stats}",
                model.stats.len()
            )));
        }
        model.stats = r.f64s(n_stats)?;
        model.training = training;
        let optimizer = match r.u8()? {
            0 => None,
            1 => {
                let step = r.u64()?;
                let learning_rate = r.f64()?;
                let beta1 = r.f64()?;
                let beta2 = r.f64()?;
                let epsilon = r.f64()?;
                let m = r.f64s(n_params)?;
                let v = r.f64s(n_params)?;
                Some(OptimizerState {
                    m,
                    v,
                    step,
                    learning_rate,
                    beta1,
                    beta2,
                    epsilon,
                })
            }
            t => return Err(FormatError::Schema(format!("unknown optimizer flag {t}"))),
        };
        r.finish()?;
        Ok(Self { model, optimizer })
    }
}

pub fn save_checkpoint(path: &Path, model: &CaeModel, optimizer: Option<&OptimizerState>) -> Result<()> {
    let ck = Checkpoint {
        model: model.clone(),
        optimizer: optimizer.cloned(),
    };
    fs::write(path, ck.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })
}
