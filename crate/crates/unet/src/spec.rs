use std::fmt;
use std::str::FromStr;

use csmri_io::KvDocument;

use crate::{Result, UnetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetMode {
    MultiScale,
    SingleScale,
}

/// How the decoder returns to the finer scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsampling {
    /// Place values at the positions recorded by the matching max-pool.
    Unpool,
    Nearest,
}

/// How an encoder output joins the decoder at the same scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipMode {
    Concat,
    Additive,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $($variant:path => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = UnetError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(UnetError::Spec(format!(concat!("unknown ", $what, " `{}`"), s))),
                }
            }
        }
    };
}

keyword_enum!(NetMode, "network mode", NetMode::MultiScale => "multi_scale", NetMode::SingleScale => "single_scale");
keyword_enum!(Upsampling, "upsampling", Upsampling::Unpool => "unpool", Upsampling::Nearest => "nearest");
keyword_enum!(SkipMode, "skip mode", SkipMode::Concat => "concat", SkipMode::Additive => "additive");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub mode: NetMode,
    pub n_scales: usize,
    pub layers_per_stage: usize,
    pub base_channels: usize,
    /// Blocks in the last decoder stage, the one feeding the 1x1 head.
    pub terminal_layers: usize,
    pub single_scale_layers: usize,
    pub single_scale_channels: usize,
    pub input_size: (usize, usize),
    pub in_channels: usize,
    pub upsampling: Upsampling,
    pub skip: SkipMode,
}

impl NetworkSpec {
    /// Five scales, four blocks per stage, 64 channels at full resolution,
    /// 256x256 input.
    pub fn full_scale() -> Self {
        Self {
            mode: NetMode::MultiScale,
            n_scales: 5,
            layers_per_stage: 4,
            base_channels: 64,
            terminal_layers: 2,
            single_scale_layers: 18,
            single_scale_channels: 64,
            input_size: (256, 256),
            in_channels: 1,
            upsampling: Upsampling::Unpool,
            skip: SkipMode::Concat,
        }
    }

    /// Three scales at base width 16 on 64x64 images.
    pub fn desk() -> Self {
        Self { n_scales: 3, base_channels: 16, input_size: (64, 64), ..Self::full_scale() }
    }

    /// The 18-layer, 64-channel network without pooling.
    pub fn single_scale(input_size: (usize, usize)) -> Self {
        Self { mode: NetMode::SingleScale, input_size, ..Self::full_scale() }
    }

    /// Channel width of the multi-scale network at scale `s`.
    pub fn width(&self, s: usize) -> usize {
        self.base_channels << s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(UnetError::Spec(m));
        let (h, w) = self.input_size;
        if h == 0 || w == 0 || self.in_channels == 0 {
            return bad(format!("empty input {h}x{w}x{}", self.in_channels));
        }
        match self.mode {
            NetMode::SingleScale => {
                if self.single_scale_layers == 0 || self.single_scale_channels == 0 {
                    return bad("single-scale network needs layers and channels".into());
                }
            }
            NetMode::MultiScale => {
                if self.n_scales == 0 || self.layers_per_stage == 0 || self.base_channels == 0 {
                    return bad("n_scales, layers_per_stage and base_channels must be positive".into());
                }
                if self.n_scales > 1 && (self.layers_per_stage < 2 || self.terminal_layers == 0) {
                    return bad("multi-scale stages need at least 2 blocks and a terminal stage".into());
                }
                let f = 1usize.checked_shl(self.n_scales as u32 - 1).unwrap_or(0);
                if f == 0 || h % f != 0 || w % f != 0 {
                    return bad(format!("input {h}x{w} is not divisible by 2^{}", self.n_scales - 1));
                }
            }
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 11] = [
        "net_mode",
        "n_scales",
        "layers_per_stage",
        "base_channels",
        "terminal_layers",
        "single_scale_layers",
        "single_scale_channels",
        "input_height",
        "input_width",
        "upsampling",
        "skip",
    ];

    /// Override fields from any of [`Self::KEYS`] present in `doc`.
    pub fn apply_kv(&mut self, doc: &KvDocument) -> Result<()> {
        fn take<T: FromStr>(doc: &KvDocument, key: &str, dst: &mut T) -> Result<()> {
            if let Some(v) = doc.parse_value(key)? {
                *dst = v;
            }
            Ok(())
        }
        if let Some(v) = doc.get("net_mode") {
            self.mode = v.parse()?;
        }
        if let Some(v) = doc.get("upsampling") {
            self.upsampling = v.parse()?;
        }
        if let Some(v) = doc.get("skip") {
            self.skip = v.parse()?;
        }
        take(doc, "n_scales", &mut self.n_scales)?;
        take(doc, "layers_per_stage", &mut self.layers_per_stage)?;
        take(doc, "base_channels", &mut self.base_channels)?;
        take(doc, "terminal_layers", &mut self.terminal_layers)?;
        take(doc, "single_scale_layers", &mut self.single_scale_layers)?;
        take(doc, "single_scale_channels", &mut self.single_scale_channels)?;
        take(doc, "input_height", &mut self.input_size.0)?;
        take(doc, "input_width", &mut self.input_size.1)?;
        Ok(())
    }

    pub fn write_kv(&self, doc: &mut KvDocument) {
        doc.set("net_mode", self.mode);
        doc.set("n_scales", self.n_scales);
        doc.set("layers_per_stage", self.layers_per_stage);
        doc.set("base_channels", self.base_channels);
        doc.set("terminal_layers", self.terminal_layers);
        doc.set("single_scale_layers", self.single_scale_layers);
        doc.set("single_scale_channels", self.single_scale_channels);
        doc.set("input_height", self.input_size.0);
        doc.set("input_width", self.input_size.1);
        doc.set("upsampling", self.upsampling);
        doc.set("skip", self.skip);
    }

    pub fn from_kv(doc: &KvDocument) -> Result<Self> {
        let mut spec = Self::desk();
        spec.apply_kv(doc)?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageRole {
    Encoder,
    Bottom,
    Decoder,
}

/// The conv blocks of one stage, as `(n_in, n_out)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    pub role: StageRole,
    pub scale: usize,
    pub blocks: Vec<(usize, usize)>,
}

fn chain(n_in: usize, width: usize, n_out: usize, count: usize) -> Vec<(usize, usize)> {
    (0..count)
        .map(|i| {
            let a = if i == 0 { n_in } else { width };
            let b = if i + 1 == count { n_out } else { width };
            (a, b)
        })
        .collect()
}

/// Stages in forward order: encoder scales 0..n-1, the bottom stage, then
/// decoder stages from scale n-2 back to 0.
///
/// A stage followed by an unpool ends at the next-finer width so that its
/// output matches the recorded pool switches; the decoder's first block
/// brings the concatenated channels back to the scale width.
pub fn stage_plan(spec: &NetworkSpec) -> Vec<StagePlan> {
    if spec.mode == NetMode::SingleScale {
        let c = spec.single_scale_channels;
        return vec![StagePlan {
            role: StageRole::Bottom,
            scale: 0,
            blocks: chain(spec.in_channels, c, c, spec.single_scale_layers),
        }];
    }
    let n = spec.n_scales;
    let l = spec.layers_per_stage;
    if n == 1 {
        let c = spec.width(0);
        return vec![StagePlan { role: StageRole::Bottom, scale: 0, blocks: chain(spec.in_channels, c, c, l) }];
    }
    let mut stages = Vec::new();
    let mut n_in = spec.in_channels;
    for s in 0..n - 1 {
        stages.push(StagePlan { role: StageRole::Encoder, scale: s, blocks: chain(n_in, spec.width(s), spec.width(s), l) });
        n_in = spec.width(s);
    }
    stages.push(StagePlan {
        role: StageRole::Bottom,
        scale: n - 1,
        blocks: chain(n_in, spec.width(n - 1), spec.width(n - 2), l),
    });
    for s in (0..n - 1).rev() {
        let w = spec.width(s);
        let joined = match spec.skip {
            SkipMode::Concat => 2 * w,
            SkipMode::Additive => w,
        };
        let (count, out) = if s == 0 { (spec.terminal_layers, w) } else { (l, spec.width(s - 1)) };
        stages.push(StagePlan { role: StageRole::Decoder, scale: s, blocks: chain(joined, w, out, count) });
    }
    stages
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// Conv + BN + ReLU with a square kernel.
    Block { kernel: usize },
    Pool,
    Upsample,
    Concat,
    Add,
    /// The final 1x1 convolution.
    Head,
}

/// One row of the declared layer graph with its output shape `(C, H, W)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerInfo {
    pub name: String,
    pub kind: LayerKind,
    pub scale: usize,
    pub output: (usize, usize, usize),
}

pub(crate) fn block_name(role: StageRole, scale: usize, i: usize) -> String {
    match role {
        StageRole::Encoder => format!("enc{scale}.{i}"),
        StageRole::Bottom => format!("bottom.{i}"),
        StageRole::Decoder => format!("dec{scale}.{i}"),
    }
}

/// The full layer graph in forward order, derived from the spec alone.
pub fn layer_plan(spec: &NetworkSpec) -> Result<Vec<LayerInfo>> {
    spec.validate()?;
    let (h, w) = spec.input_size;
    let size = |s: usize| (h >> s, w >> s);
    let mut layers = Vec::new();
    let mut push = |name: String, kind, scale: usize, c: usize| {
        let (hs, ws) = size(scale);
        layers.push(LayerInfo { name, kind, scale, output: (c, hs, ws) });
    };
    let mut channels = spec.in_channels;
    for stage in stage_plan(spec) {
        if stage.role == StageRole::Decoder {
            let s = stage.scale;
            push(format!("up{s}"), LayerKind::Upsample, s, channels);
            let (kind, c) = match spec.skip {
                SkipMode::Concat => (LayerKind::Concat, channels + spec.width(s)),
                SkipMode::Additive => (LayerKind::Add, channels),
            };
            push(format!("skip{s}"), kind, s, c);
        }
        for (i, &(_, n_out)) in stage.blocks.iter().enumerate() {
            push(block_name(stage.role, stage.scale, i), LayerKind::Block { kernel: 3 }, stage.scale, n_out);
            channels = n_out;
        }
        if stage.role == StageRole::Encoder {
            push(format!("pool{}", stage.scale), LayerKind::Pool, stage.scale + 1, channels);
        }
    }
    push("head".into(), LayerKind::Head, 0, 1);
    Ok(layers)
}
