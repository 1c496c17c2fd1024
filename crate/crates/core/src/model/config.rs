use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{pool_extent, Padding, PoolSpec, DEFAULT_ELU_ALPHA};

/// Channels × time × frequency of the default one-second input.
pub const MODEL3_INPUT: [usize; 3] = [1, 100, 129];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Mfm,
    Relu,
    Elu { alpha: f64 },
    Identity,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Mfm => "mfm",
            Activation::Relu => "relu",
            Activation::Elu { .. } => "elu",
            Activation::Identity => "identity",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mfm" => Ok(Activation::Mfm),
            "relu" => Ok(Activation::Relu),
            "elu" => Ok(Activation::Elu { alpha: DEFAULT_ELU_ALPHA }),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::config(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv { filters: usize, kernel: (usize, usize), padding: Padding, bias: bool },
    Pool(PoolSpec),
    Activation(Activation),
    Flatten,
    Dropout { rate: f64 },
    Linear { width: usize, bias: bool },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Pool(_) => "pool",
            LayerSpec::Activation(_) => "act",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Linear { .. } => "linear",
        }
    }
}

/// Activation shape between layers, excluding the batch axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureShape {
    Map { channels: usize, height: usize, width: usize },
    Flat(usize),
}

impl FeatureShape {
    pub fn numel(&self) -> usize {
        match *self {
            FeatureShape::Map { channels, height, width } => channels * height * width,
            FeatureShape::Flat(d) => d,
        }
    }
}

impl fmt::Display for FeatureShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureShape::Map { channels, height, width } => write!(f, "{channels}x{height}x{width}"),
            FeatureShape::Flat(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Channels, frames, frequency bins.
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
    /// Class names by output index.
    pub labels: [String; 2],
}

/// Three conv(16, 1x9, same) → MFM → maxpool(3x3/3x3, ceil) blocks, then
/// flatten → dropout(0.5) → linear(32, no bias) → linear(2).
pub fn model3_default() -> ModelConfig {
    let block = [
        LayerSpec::Conv { filters: 16, kernel: (1, 9), padding: Padding::Same, bias: true },
        LayerSpec::Activation(Activation::Mfm),
        LayerSpec::Pool(PoolSpec::default()),
    ];
    let mut layers: Vec<LayerSpec> = block.iter().cycle().take(9).cloned().collect();
    layers.extend([
        LayerSpec::Flatten,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Linear { width: 32, bias: false },
        LayerSpec::Linear { width: 2, bias: true },
    ]);
    ModelConfig { input_shape: MODEL3_INPUT, layers, labels: default_labels() }
}

fn default_labels() -> [String; 2] {
    ["spoof".to_string(), "genuine".to_string()]
}

impl ModelConfig {
    /// Replaces every non-identity activation.
    pub fn with_activation(mut self, act: Activation) -> Self {
        for layer in &mut self.layers {
            if let LayerSpec::Activation(a) = layer {
                if *a != Activation::Identity {
                    *a = act;
                }
            }
        }
        self
    }

    pub fn with_input(mut self, frames: usize, bins: usize) -> Self {
        self.input_shape = [1, frames, bins];
        self
    }

    pub fn input_feature_shape(&self) -> FeatureShape {
        let [channels, height, width] = self.input_shape;
        FeatureShape::Map { channels, height, width }
    }

    /// Propagates shapes and checks the output width is 2.
    pub fn validate(&self) -> Result<()> {
        shape_trace(self).map(|_| ())
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parses the layer-per-line text format; `path` only labels errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut input = None;
        let mut labels = default_labels();
        let mut layers = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::parse(path, line_no, msg);
            let mut tokens = line.split_whitespace();
            let head = tokens.next().unwrap_or_default();
            let rest: Vec<&str> = tokens.collect();
            match head {
                "input" => {
                    let dims = rest.first().ok_or_else(|| err("input needs CxTxF".into()))?;
                    let d = parse_dims(dims, 3).map_err(err)?;
                    input = Some([d[0], d[1], d[2]]);
                }
                "labels" => {
                    if rest.len() != 2 {
                        return Err(err("labels needs exactly two names".into()));
                    }
                    labels = [rest[0].to_string(), rest[1].to_string()];
                }
                _ => layers.push(parse_layer(head, &rest).map_err(err)?),
            }
        }
        let input_shape = input.ok_or_else(|| Error::parse(path, 0, "missing 'input' line"))?;
        let cfg = ModelConfig { input_shape, layers, labels };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for LayerSpec {
    /// One line of the layer file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yes = |v: bool| if v { "yes" } else { "no" };
        match self {
            LayerSpec::Conv { filters, kernel, padding, bias } => {
                let pad = match padding {
                    Padding::Same => "same",
                    Padding::Valid => "valid",
                };
                write!(f, "conv filters={filters} kernel={}x{} pad={pad} bias={}", kernel.0, kernel.1, yes(*bias))
            }
            LayerSpec::Pool(p) => write!(
                f,
                "pool kernel={}x{} stride={}x{} ceil={}",
                p.kernel.0,
                p.kernel.1,
                p.stride.0,
                p.stride.1,
                yes(p.ceil_mode)
            ),
            LayerSpec::Activation(Activation::Elu { alpha }) => write!(f, "act fn=elu alpha={alpha}"),
            LayerSpec::Activation(a) => write!(f, "act fn={}", a.name()),
            LayerSpec::Flatten => write!(f, "flatten"),
            LayerSpec::Dropout { rate } => write!(f, "dropout rate={rate}"),
            LayerSpec::Linear { width, bias } => write!(f, "linear width={width} bias={}", yes(*bias)),
        }
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [c, t, b] = self.input_shape;
        writeln!(f, "input {c}x{t}x{b}")?;
        for layer in &self.layers {
            writeln!(f, "{layer}")?;
        }
        writeln!(f, "labels {} {}", self.labels[0], self.labels[1])
    }
}

fn parse_dims(s: &str, n: usize) -> std::result::Result<Vec<usize>, String> {
    let dims: Vec<usize> = s
        .split('x')
        .map(|d| d.parse::<usize>().map_err(|_| format!("bad extent '{d}' in '{s}'")))
        .collect::<std::result::Result<_, _>>()?;
    if dims.len() != n || dims.contains(&0) {
        return Err(format!("expected {n} positive extents, got '{s}'"));
    }
    Ok(dims)
}

fn parse_layer(kind: &str, args: &[&str]) -> std::result::Result<LayerSpec, String> {
    let mut kv = std::collections::BTreeMap::new();
    for a in args {
        let (k, v) = a.split_once('=').ok_or_else(|| format!("expected key=value, got '{a}'"))?;
        if kv.insert(k, v).is_some() {
            return Err(format!("duplicate key '{k}'"));
        }
    }
    let mut take = |key: &str| kv.remove(key).ok_or_else(|| format!("{kind} needs '{key}'"));
    let flag = |v: &str| match v {
        "yes" | "true" => Ok(true),
        "no" | "false" => Ok(false),
        _ => Err(format!("expected yes/no, got '{v}'")),
    };
    let pair = |v: &str| parse_dims(v, 2).map(|d| (d[0], d[1]));
    let num = |v: &str| v.parse::<usize>().map_err(|_| format!("bad integer '{v}'"));
    let layer = match kind {
        "conv" => {
            let filters = num(take("filters")?)?;
            let kernel = pair(take("kernel")?)?;
            let padding = match take("pad")? {
                "same" => Padding::Same,
                "valid" => Padding::Valid,
                p => return Err(format!("unknown padding '{p}'")),
            };
            let bias = flag(take("bias")?)?;
            LayerSpec::Conv { filters, kernel, padding, bias }
        }
        "pool" => {
            let kernel = pair(take("kernel")?)?;
            let stride = pair(take("stride")?)?;
            let ceil_mode = flag(take("ceil")?)?;
            LayerSpec::Pool(PoolSpec { kernel, stride, ceil_mode })
        }
        "act" => {
            let mut act: Activation = take("fn")?.parse().map_err(|e: Error| e.to_string())?;
            if let Activation::Elu { alpha } = &mut act {
                if let Ok(a) = take("alpha") {
                    *alpha = a.parse().map_err(|_| format!("bad alpha '{a}'"))?;
                }
            }
            LayerSpec::Activation(act)
        }
        "flatten" => LayerSpec::Flatten,
        "dropout" => {
            let r = take("rate")?;
            let rate: f64 = r.parse().map_err(|_| format!("bad rate '{r}'"))?;
            LayerSpec::Dropout { rate }
        }
        "linear" => {
            let width = num(take("width")?)?;
            let bias = flag(take("bias")?)?;
            LayerSpec::Linear { width, bias }
        }
        other => return Err(format!("unknown layer kind '{other}'")),
    };
    if let Some(k) = kv.keys().next() {
        return Err(format!("unexpected key '{k}' for {kind}"));
    }
    Ok(layer)
}

/// One row of [`shape_trace`]: layer index, its spec, shape after it and the
/// number of parameters it owns.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub index: usize,
    pub layer: LayerSpec,
    pub output: FeatureShape,
    pub params: usize,
}

pub(crate) fn propagate(layer: &LayerSpec, shape: FeatureShape) -> std::result::Result<(FeatureShape, usize), String> {
    use FeatureShape::*;
    match (layer, shape) {
        (LayerSpec::Conv { filters, kernel: (kh, kw), padding, bias }, Map { channels, height, width }) => {
            if *filters == 0 || *kh == 0 || *kw == 0 {
                return Err("conv needs positive filters and kernel".into());
            }
            let out = |len: usize, k: usize| match padding {
                Padding::Same => Some(len),
                Padding::Valid => (k <= len).then(|| len - k + 1),
            };
            let (h, w) = match (out(height, *kh), out(width, *kw)) {
                (Some(h), Some(w)) => (h, w),
                _ => return Err(format!("kernel {kh}x{kw} larger than input {height}x{width}")),
            };
            let params = filters * channels * kh * kw + if *bias { *filters } else { 0 };
            Ok((Map { channels: *filters, height: h, width: w }, params))
        }
        (LayerSpec::Pool(p), Map { channels, height, width }) => {
            let h = pool_extent(height, p.kernel.0, p.stride.0, p.ceil_mode).filter(|&v| v > 0);
            let w = pool_extent(width, p.kernel.1, p.stride.1, p.ceil_mode).filter(|&v| v > 0);
            match (h, w) {
                (Some(h), Some(w)) => Ok((Map { channels, height: h, width: w }, 0)),
                _ => Err(format!("cannot pool {height}x{width}")),
            }
        }
        (LayerSpec::Activation(Activation::Mfm), s) => match s {
            Map { channels, height, width } if channels % 2 == 0 => {
                Ok((Map { channels: channels / 2, height, width }, 0))
            }
            Flat(d) if d % 2 == 0 => Ok((Flat(d / 2), 0)),
            _ => Err(format!("mfm needs an even channel or feature count, got {s}")),
        },
        (LayerSpec::Activation(_), s) => Ok((s, 0)),
        (LayerSpec::Flatten, s) => Ok((Flat(s.numel()), 0)),
        (LayerSpec::Dropout { rate }, s) => {
            if (0.0..1.0).contains(rate) {
                Ok((s, 0))
            } else {
                Err(format!("dropout rate {rate} outside [0, 1)"))
            }
        }
        (LayerSpec::Linear { width, bias }, Flat(d)) => {
            if *width == 0 {
                return Err("linear width must be positive".into());
            }
            Ok((Flat(*width), d * width + if *bias { *width } else { 0 }))
        }
        (l, s) => Err(format!("{} cannot follow shape {s}", l.kind())),
    }
}

pub fn shape_trace(config: &ModelConfig) -> Result<Vec<TraceRow>> {
    if config.input_shape.contains(&0) {
        return Err(Error::config("input extents must be positive"));
    }
    let mut shape = config.input_feature_shape();
    let mut rows = Vec::with_capacity(config.layers.len());
    for (index, layer) in config.layers.iter().enumerate() {
        let (out, params) = propagate(layer, shape).map_err(|msg| Error::Propagation { layer: index, msg })?;
        rows.push(TraceRow { index, layer: layer.clone(), output: out, params });
        shape = out;
    }
    if shape != FeatureShape::Flat(2) {
        return Err(Error::Propagation {
            layer: config.layers.len().saturating_sub(1),
            msg: format!("network must end in 2 outputs, ends in {shape}"),
        });
    }
    Ok(rows)
}

pub fn count_params(config: &ModelConfig) -> Result<usize> {
    Ok(shape_trace(config)?.iter().map(|r| r.params).sum())
}
