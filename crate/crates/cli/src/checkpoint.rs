//! Binary checkpoint container. Layout (all integers little-endian, floats
//! as IEEE-754 binary64 little-endian):
//!
//! ```text
//! magic        8 bytes  "CTGANCK1"
//! iteration    u64
//! networks     u32 count, then per network:
//!   name       u32 length + UTF-8 bytes
//!   input_dim  u32
//!   layers     u32 count, then per layer a u8 tag and its payload:
//!                0 dense / 1 weight-norm dense / 2 batch-norm dense: u32 units
//!                3 relu, 4 lrelu, 5 sigmoid, 6 tanh, 7 softplus, 8 softmax
//!                9 dropout: f64 rate, 10 gaussian noise: f64 std
//!   params     u32 count, then per tensor: u32 layer, u8 kind
//!              (0 weight, 1 bias, 2 direction, 3 gain, 4 scale, 5 shift), tensor
//!   running    u32 count, then per layer: u32 layer, tensor mean, tensor var
//!   adam       u64 step, then one first-moment and one second-moment
//!              tensor per parameter, in parameter order
//! streams      u32 count, then per stream: name, u64 seed, u64 stream id,
//!              u128 word position
//! checksum     u64 FNV-1a of every preceding byte
//! ```
//!
//! A tensor is `u32 ndim`, `ndim` u32 dimensions, then the elements.

use std::path::Path;

use ctgan_core::nn::{AdamMoments, LayerSpec, NetworkSpec, Param, ParamKind, ParamStore, RunningStats};
use ctgan_core::rng::RngState;
use ctgan_core::Tensor;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"CTGANCK1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub iteration: u64,
    pub networks: Vec<(String, ParamStore)>,
    pub streams: Vec<(String, RngState)>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

const KINDS: [ParamKind; 6] = [
    ParamKind::Weight,
    ParamKind::Bias,
    ParamKind::Direction,
    ParamKind::Gain,
    ParamKind::Scale,
    ParamKind::Shift,
];

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn tensor(&mut self, t: &Tensor) {
        self.u32(t.ndim());
        for d in t.shape() {
            self.u32(*d);
        }
        for v in t.data() {
            self.f64(*v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn corrupt(what: &str) -> CliError {
    CliError::Runtime(format!("malformed checkpoint: {what}"))
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| corrupt("unexpected end of data"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> CliResult<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> CliResult<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> CliResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn str(&mut self) -> CliResult<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("name is not UTF-8"))
    }
    fn tensor(&mut self) -> CliResult<Tensor> {
        let ndim = self.u32()?;
        let shape = (0..ndim).map(|_| self.u32()).collect::<CliResult<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |a, d| a.checked_mul(*d));
        let len = len.filter(|l| l.saturating_mul(8) <= self.bytes.len()).ok_or_else(|| corrupt("tensor size"))?;
        let data = (0..len).map(|_| self.f64()).collect::<CliResult<Vec<_>>>()?;
        Tensor::new(shape, data).map_err(|e| corrupt(&e.to_string()))
    }
}

fn write_layer(w: &mut Writer, l: &LayerSpec) {
    match l {
        LayerSpec::Dense { units } => {
            w.u8(0);
            w.u32(*units);
        }
        LayerSpec::WeightNormDense { units } => {
            w.u8(1);
            w.u32(*units);
        }
        LayerSpec::BatchNormDense { units } => {
            w.u8(2);
            w.u32(*units);
        }
        LayerSpec::Relu => w.u8(3),
        LayerSpec::LeakyRelu => w.u8(4),
        LayerSpec::Sigmoid => w.u8(5),
        LayerSpec::Tanh => w.u8(6),
        LayerSpec::Softplus => w.u8(7),
        LayerSpec::Softmax => w.u8(8),
        LayerSpec::Dropout { rate } => {
            w.u8(9);
            w.f64(*rate);
        }
        LayerSpec::GaussianNoise { std } => {
            w.u8(10);
            w.f64(*std);
        }
    }
}

fn read_layer(r: &mut Reader<'_>) -> CliResult<LayerSpec> {
    Ok(match r.u8()? {
        0 => LayerSpec::Dense { units: r.u32()? },
        1 => LayerSpec::WeightNormDense { units: r.u32()? },
        2 => LayerSpec::BatchNormDense { units: r.u32()? },
        3 => LayerSpec::Relu,
        4 => LayerSpec::LeakyRelu,
        5 => LayerSpec::Sigmoid,
        6 => LayerSpec::Tanh,
        7 => LayerSpec::Softplus,
        8 => LayerSpec::Softmax,
        9 => LayerSpec::Dropout { rate: r.f64()? },
        10 => LayerSpec::GaussianNoise { std: r.f64()? },
        t => return Err(corrupt(&format!("unknown layer tag {t}"))),
    })
}

impl Checkpoint {
    pub fn network(&self, name: &str) -> Option<&ParamStore> {
        self.networks.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u64(self.iteration);
        w.u32(self.networks.len());
        for (name, store) in &self.networks {
            w.str(name);
            let spec = store.spec();
            w.u32(spec.input_dim);
            w.u32(spec.layers.len());
            for l in &spec.layers {
                write_layer(&mut w, l);
            }
            w.u32(store.params().len());
            for p in store.params() {
                w.u32(p.layer);
                w.u8(KINDS.iter().position(|k| *k == p.kind).expect("known kind") as u8);
                w.tensor(&p.value);
            }
            w.u32(store.running().len());
            for r in store.running() {
                w.u32(r.layer);
                w.tensor(&r.mean);
                w.tensor(&r.var);
            }
            let m = store.moments();
            w.u64(m.step);
            for t in m.m.iter().chain(&m.v) {
                w.tensor(t);
            }
        }
        w.u32(self.streams.len());
        for (name, s) in &self.streams {
            w.str(name);
            w.u64(s.seed);
            w.u64(s.stream_id);
            w.0.extend_from_slice(&s.word_pos.to_le_bytes());
        }
        let sum = fnv1a(&w.0);
        w.u64(sum);
        w.0
    }

    pub fn decode(bytes: &[u8]) -> CliResult<Self> {
        if bytes.len() < MAGIC.len() + 8 || &bytes[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        if fnv1a(body) != u64::from_le_bytes(tail.try_into().expect("8 bytes")) {
            return Err(corrupt("checksum mismatch"));
        }
        let mut r = Reader { bytes: body, pos: 8 };
        let iteration = r.u64()?;
        let count = r.u32()?;
        let mut networks = Vec::new();
        for _ in 0..count {
            let name = r.str()?;
            let input_dim = r.u32()?;
            let nl = r.u32()?;
            let layers = (0..nl).map(|_| read_layer(&mut r)).collect::<CliResult<Vec<_>>>()?;
            let np = r.u32()?;
            let mut params = Vec::with_capacity(np);
            for _ in 0..np {
                let layer = r.u32()?;
                let kind = *KINDS.get(r.u8()? as usize).ok_or_else(|| corrupt("unknown parameter kind"))?;
                params.push(Param {
                    layer,
                    kind,
                    value: r.tensor()?,
                });
            }
            let nr = r.u32()?;
            let mut running = Vec::with_capacity(nr);
            for _ in 0..nr {
                running.push(RunningStats {
                    layer: r.u32()?,
                    mean: r.tensor()?,
                    var: r.tensor()?,
                });
            }
            let step = r.u64()?;
            let m = (0..np).map(|_| r.tensor()).collect::<CliResult<Vec<_>>>()?;
            let v = (0..np).map(|_| r.tensor()).collect::<CliResult<Vec<_>>>()?;
            let store = ParamStore::from_parts(
                NetworkSpec::new(input_dim, layers),
                params,
                running,
                Some(AdamMoments { m, v, step }),
            )
            .map_err(|e| corrupt(&format!("network `{name}`: {e}")))?;
            networks.push((name, store));
        }
        let ns = r.u32()?;
        let mut streams = Vec::with_capacity(ns);
        for _ in 0..ns {
            let name = r.str()?;
            let seed = r.u64()?;
            let stream_id = r.u64()?;
            let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
            streams.push((
                name,
                RngState {
                    seed,
                    stream_id,
                    word_pos,
                },
            ));
        }
        if r.pos != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self {
            iteration,
            networks,
            streams,
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.encode()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::decode(&bytes)
    }
}
