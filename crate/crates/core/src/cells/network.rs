use std::fmt::Write as _;
use std::rc::Rc;

use crate::numerics::{Backend, Eager, NumericsError, Rng, Tensor2};

use super::cell::{cell_step, CellFamily, CellParams};
use super::CellError;

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    /// Parallel cells fed the same input; their states are concatenated.
    Recurrent(Vec<(CellFamily, usize)>),
    /// Dense layer followed by ReLU.
    Relu(usize),
    /// Dense layer without activation.
    Linear(usize),
    /// Inverted dropout; identity outside training.
    Dropout(f64),
    /// Adds the recurrent segment's input to its output, then ReLU.
    SkipSum,
}

/// Layer list of one network. Exactly one contiguous run of recurrent layers.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub input: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<(), CellError> {
        let bad = |m: String| Err(CellError::BadSpec(m));
        if self.input == 0 {
            return Err(CellError::ZeroWidth);
        }
        let rec: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Recurrent(_)))
            .map(|(i, _)| i)
            .collect();
        if rec.is_empty() {
            return bad("no recurrent layer".into());
        }
        if rec.windows(2).any(|w| w[1] != w[0] + 1) {
            return bad("recurrent layers must form one contiguous segment".into());
        }
        let seg_start = rec[0];
        let seg_end = *rec.last().unwrap();
        let mut width = self.input;
        let mut skip_width = None;
        let mut skips = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            if i == seg_start {
                skip_width = Some(width);
            }
            match layer {
                LayerSpec::Recurrent(cells) => {
                    if cells.is_empty() {
                        return bad(format!("layer {i}: recurrent layer without cells"));
                    }
                    if cells.iter().any(|&(_, w)| w == 0) {
                        return Err(CellError::ZeroWidth);
                    }
                    width = cells.iter().map(|&(_, w)| w).sum();
                }
                LayerSpec::Relu(w) | LayerSpec::Linear(w) => {
                    if *w == 0 {
                        return Err(CellError::ZeroWidth);
                    }
                    width = *w;
                }
                LayerSpec::Dropout(p) => {
                    if !(0.0..1.0).contains(p) {
                        return bad(format!("layer {i}: dropout probability {p}"));
                    }
                }
                LayerSpec::SkipSum => {
                    skips += 1;
                    if i < seg_end {
                        return bad(format!("layer {i}: skip-sum before the recurrent segment ends"));
                    }
                    if skip_width != Some(width) {
                        return bad(format!(
                            "layer {i}: skip-sum of width {width} with segment input width {}",
                            skip_width.unwrap_or(0)
                        ));
                    }
                }
            }
        }
        if skips > 1 {
            return bad("more than one skip-sum".into());
        }
        if !matches!(self.layers.last(), Some(LayerSpec::Linear(_))) {
            return bad("last layer must be linear".into());
        }
        Ok(())
    }

    pub fn output_width(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::Linear(w)) => *w,
            _ => 0,
        }
    }

    /// State width of each recurrent layer.
    pub fn recurrent_widths(&self) -> Vec<usize> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Recurrent(cells) => Some(cells.iter().map(|&(_, w)| w).sum()),
                _ => None,
            })
            .collect()
    }

    pub fn state_width(&self) -> usize {
        self.recurrent_widths().iter().sum()
    }

    pub fn has_dropout(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, LayerSpec::Dropout(_)))
    }

    pub fn families(&self) -> Vec<CellFamily> {
        let mut out = Vec::new();
        for l in &self.layers {
            if let LayerSpec::Recurrent(cells) = l {
                for &(f, _) in cells {
                    if !out.contains(&f) {
                        out.push(f);
                    }
                }
            }
        }
        out
    }

    /// Compact text form, e.g. `in4|gru5|relu20|relu10|fc4`.
    pub fn tag(&self) -> String {
        let mut s = format!("in{}", self.input);
        for l in &self.layers {
            s.push('|');
            match l {
                LayerSpec::Recurrent(cells) => {
                    let parts: Vec<String> = cells.iter().map(|(f, w)| format!("{f}{w}")).collect();
                    s.push_str(&parts.join("+"));
                }
                LayerSpec::Relu(w) => {
                    let _ = write!(s, "relu{w}");
                }
                LayerSpec::Linear(w) => {
                    let _ = write!(s, "fc{w}");
                }
                LayerSpec::Dropout(p) => {
                    let _ = write!(s, "drop{p}");
                }
                LayerSpec::SkipSum => s.push_str("sum"),
            }
        }
        s
    }

    pub fn from_tag(tag: &str) -> Result<Self, CellError> {
        let bad = || CellError::BadSpec(format!("unparseable spec tag `{tag}`"));
        let mut parts = tag.split('|');
        let input = parts
            .next()
            .and_then(|p| p.strip_prefix("in"))
            .and_then(|n| n.parse().ok())
            .ok_or_else(bad)?;
        let mut layers = Vec::new();
        for p in parts {
            let layer = if p == "sum" {
                LayerSpec::SkipSum
            } else if let Some(w) = p.strip_prefix("relu") {
                LayerSpec::Relu(w.parse().map_err(|_| bad())?)
            } else if let Some(w) = p.strip_prefix("fc") {
                LayerSpec::Linear(w.parse().map_err(|_| bad())?)
            } else if let Some(q) = p.strip_prefix("drop") {
                LayerSpec::Dropout(q.parse().map_err(|_| bad())?)
            } else {
                let mut cells = Vec::new();
                for c in p.split('+') {
                    let split = c.find(|ch: char| ch.is_ascii_digit()).ok_or_else(bad)?;
                    let family: CellFamily = c[..split].parse().map_err(|_| bad())?;
                    cells.push((family, c[split..].parse().map_err(|_| bad())?));
                }
                LayerSpec::Recurrent(cells)
            };
            layers.push(layer);
        }
        let spec = Self { input, layers };
        spec.validate()?;
        Ok(spec)
    }

    fn segment_start(&self) -> usize {
        self.layers
            .iter()
            .position(|l| matches!(l, LayerSpec::Recurrent(_)))
            .expect("validated spec has a recurrent layer")
    }

    fn segment_end(&self) -> usize {
        self.layers
            .iter()
            .rposition(|l| matches!(l, LayerSpec::Recurrent(_)))
            .expect("validated spec has a recurrent layer")
            + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense { weight: Tensor2, bias: Tensor2, relu: bool },
    Recurrent(Vec<CellParams>),
    Dropout(f64),
    SkipSum,
}

/// Recurrent state of every recurrent layer, `rows × width` each.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub layers: Vec<Tensor2>,
}

impl HiddenState {
    pub fn zeros(spec: &NetworkSpec, rows: usize) -> Self {
        Self {
            layers: spec
                .recurrent_widths()
                .into_iter()
                .map(|w| Tensor2::zeros(rows, w))
                .collect(),
        }
    }

    /// Concatenation of all layers' first row.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|t| t.row(0).iter().copied()).collect()
    }

    pub fn from_flat(spec: &NetworkSpec, flat: &[f64]) -> Result<Self, CellError> {
        let widths = spec.recurrent_widths();
        if widths.iter().sum::<usize>() != flat.len() {
            return Err(CellError::ShapeMismatch(format!(
                "flat state of length {} for widths {widths:?}",
                flat.len()
            )));
        }
        let mut at = 0;
        let layers = widths
            .into_iter()
            .map(|w| {
                let t = Tensor2::row_vector(&flat[at..at + w]);
                at += w;
                t
            })
            .collect();
        Ok(Self { layers })
    }
}

/// Parameters as backend values, laid out like the model's layers.
#[derive(Clone)]
pub(crate) enum BoundLayer<V> {
    Dense { w: V, b: V, relu: bool },
    Recurrent(Vec<(CellFamily, usize, Vec<V>)>),
    Dropout { p: f64, width: usize },
    SkipSum,
}

#[derive(Clone)]
pub(crate) struct Bound<V> {
    layers: Vec<BoundLayer<V>>,
    seg_start: usize,
    seg_end: usize,
}

/// Recurrent network with feed-forward layers around one recurrent segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

fn dense_init(fan_in: usize, out: usize, rng: &mut Rng) -> (Tensor2, Tensor2) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let data = (0..fan_in * out).map(|_| rng.uniform_in(-bound, bound)).collect();
    (
        Tensor2::from_vec(fan_in, out, data).expect("sized"),
        Tensor2::zeros(1, out),
    )
}

impl Model {
    pub fn init(spec: NetworkSpec, rng: &mut Rng) -> Result<Self, CellError> {
        spec.validate()?;
        let mut width = spec.input;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for l in &spec.layers {
            let layer = match l {
                LayerSpec::Recurrent(cells) => {
                    let params = cells
                        .iter()
                        .map(|&(f, w)| CellParams::init(f, width, w, rng))
                        .collect::<Result<Vec<_>, _>>()?;
                    width = cells.iter().map(|&(_, w)| w).sum();
                    Layer::Recurrent(params)
                }
                LayerSpec::Relu(w) | LayerSpec::Linear(w) => {
                    let (weight, bias) = dense_init(width, *w, rng);
                    width = *w;
                    Layer::Dense {
                        weight,
                        bias,
                        relu: matches!(l, LayerSpec::Relu(_)),
                    }
                }
                LayerSpec::Dropout(p) => Layer::Dropout(*p),
                LayerSpec::SkipSum => Layer::SkipSum,
            };
            layers.push(layer);
        }
        Ok(Self { spec, layers })
    }

    /// Rebuilds a model from named tensors as produced by [`Model::named_params`].
    pub fn from_named(spec: NetworkSpec, named: &[(String, Tensor2)]) -> Result<Self, CellError> {
        let template = Self::init(spec, &mut Rng::new(0))?;
        let mut model = template.clone();
        let names = template.param_names();
        if names.len() != named.len() {
            return Err(CellError::BadParams(format!(
                "expected {} tensors, got {}",
                names.len(),
                named.len()
            )));
        }
        for ((slot, want), (name, t)) in model.params_mut().into_iter().zip(&names).zip(named) {
            if want != name {
                return Err(CellError::BadParams(format!("expected `{want}`, found `{name}`")));
            }
            if slot.shape() != t.shape() {
                return Err(CellError::BadParams(format!(
                    "`{name}` has shape {:?}, expected {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t.clone();
        }
        for cell in model.cells() {
            if cell.family() == CellFamily::Bmru && cell.get("alpha").unwrap().data().iter().any(|&a| a <= 0.0) {
                return Err(CellError::BadParams("BMRU alpha must be strictly positive".into()));
            }
        }
        Ok(model)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_names(&self) -> Vec<String> {
        self.named_params().into_iter().map(|(n, _)| n).collect()
    }

    /// Every trainable tensor with its stable name, in storage order.
    pub fn named_params(&self) -> Vec<(String, &Tensor2)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Dense { weight, bias, .. } => {
                    out.push((format!("l{i}.weight"), weight));
                    out.push((format!("l{i}.bias"), bias));
                }
                Layer::Recurrent(cells) => {
                    for (j, cell) in cells.iter().enumerate() {
                        for (name, t) in cell.named() {
                            out.push((format!("l{i}.c{j}.{name}"), t));
                        }
                    }
                }
                Layer::Dropout(_) | Layer::SkipSum => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense { weight, bias, .. } => {
                    out.push(weight);
                    out.push(bias);
                }
                Layer::Recurrent(cells) => {
                    for cell in cells {
                        out.extend(cell.weights_mut().iter_mut());
                    }
                }
                Layer::Dropout(_) | Layer::SkipSum => {}
            }
        }
        out
    }

    pub fn cells(&self) -> Vec<&CellParams> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::Recurrent(c) => Some(c.iter()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Re-imposes parameter constraints after an optimizer step.
    pub fn project(&mut self) {
        for layer in &mut self.layers {
            if let Layer::Recurrent(cells) = layer {
                for c in cells {
                    c.project();
                }
            }
        }
    }

    pub fn zero_state(&self, rows: usize) -> HiddenState {
        HiddenState::zeros(&self.spec, rows)
    }

    pub(crate) fn bind<B: Backend>(&self, be: &mut B) -> Bound<B::V> {
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut width = self.spec.input;
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Dense { weight, .. } => width = weight.cols(),
                Layer::Recurrent(cells) => width = cells.iter().map(|c| c.hidden_size()).sum(),
                _ => {}
            }
            layers.push(match layer {
                Layer::Dense { weight, bias, relu } => BoundLayer::Dense {
                    w: be.param(&format!("l{i}.weight"), weight),
                    b: be.param(&format!("l{i}.bias"), bias),
                    relu: *relu,
                },
                Layer::Recurrent(cells) => BoundLayer::Recurrent(
                    cells
                        .iter()
                        .enumerate()
                        .map(|(j, c)| {
                            let w = c.named().map(|(n, t)| be.param(&format!("l{i}.c{j}.{n}"), t)).collect();
                            (c.family(), c.hidden_size(), w)
                        })
                        .collect(),
                ),
                Layer::Dropout(p) => BoundLayer::Dropout { p: *p, width },
                Layer::SkipSum => BoundLayer::SkipSum,
            });
        }
        Bound {
            layers,
            seg_start: self.spec.segment_start(),
            seg_end: self.spec.segment_end(),
        }
    }
}

fn dropout<B: Backend>(
    be: &mut B,
    x: B::V,
    p: f64,
    rows: usize,
    cols: usize,
    rng: Option<&mut Rng>,
) -> Result<B::V, NumericsError> {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let data = (0..rows * cols)
                .map(|_| if rng.uniform() < p { 0.0 } else { keep })
                .collect();
            let mask = be.input(Tensor2::from_vec(rows, cols, data)?);
            be.mul(&x, &mask)
        }
        _ => Ok(x),
    }
}

impl<V: Clone> Bound<V> {
    /// Layers before the recurrent segment. Returns the segment input.
    pub(crate) fn pre<B: Backend<V = V>>(
        &self,
        be: &mut B,
        x: V,
        rows: usize,
        mut rng: Option<&mut Rng>,
    ) -> Result<V, NumericsError> {
        let mut h = x;
        for layer in &self.layers[..self.seg_start] {
            h = apply_ff(be, layer, h, None, rows, rng.as_deref_mut())?;
        }
        Ok(h)
    }

    /// One step of the recurrent segment; `state` is updated in place and the
    /// last layer's new state is returned.
    pub(crate) fn recur<B: Backend<V = V>>(&self, be: &mut B, feat: &V, state: &mut [V]) -> Result<V, NumericsError> {
        let mut input = feat.clone();
        for (k, layer) in self.layers[self.seg_start..self.seg_end].iter().enumerate() {
            let BoundLayer::Recurrent(cells) = layer else {
                unreachable!("segment is contiguous")
            };
            let new_state = if cells.len() == 1 {
                let (family, _, w) = &cells[0];
                cell_step(be, *family, w, &state[k], &input)?
            } else {
                let mut offset = 0;
                let mut acc: Option<V> = None;
                for (family, width, w) in cells {
                    let h = be.slice_cols(&state[k], offset, *width)?;
                    let out = cell_step(be, *family, w, &h, &input)?;
                    acc = Some(match acc {
                        None => out,
                        Some(prev) => be.concat_cols(&prev, &out)?,
                    });
                    offset += width;
                }
                acc.expect("non-empty recurrent layer")
            };
            state[k] = new_state.clone();
            input = new_state;
        }
        Ok(input)
    }

    /// Layers after the segment, given the segment output and its input.
    pub(crate) fn post<B: Backend<V = V>>(
        &self,
        be: &mut B,
        out: V,
        skip: &V,
        rows: usize,
        mut rng: Option<&mut Rng>,
    ) -> Result<V, NumericsError> {
        let mut h = out;
        for layer in &self.layers[self.seg_end..] {
            h = apply_ff(be, layer, h, Some(skip), rows, rng.as_deref_mut())?;
        }
        Ok(h)
    }

    pub(crate) fn step<B: Backend<V = V>>(
        &self,
        be: &mut B,
        x: V,
        state: &mut [V],
        rows: usize,
        mut rng: Option<&mut Rng>,
    ) -> Result<V, NumericsError> {
        let feat = self.pre(be, x, rows, rng.as_deref_mut())?;
        let out = self.recur(be, &feat, state)?;
        self.post(be, out, &feat, rows, rng)
    }
}

fn apply_ff<B: Backend>(
    be: &mut B,
    layer: &BoundLayer<B::V>,
    h: B::V,
    skip: Option<&B::V>,
    rows: usize,
    rng: Option<&mut Rng>,
) -> Result<B::V, NumericsError> {
    match layer {
        BoundLayer::Dense { w, b, relu } => {
            let a = be.affine(&h, w, b)?;
            Ok(if *relu { be.relu(&a) } else { a })
        }
        BoundLayer::Dropout { p, width } => dropout(be, h, *p, rows, *width, rng),
        BoundLayer::SkipSum => {
            let s = be.add(&h, skip.expect("skip-sum follows the segment"))?;
            Ok(be.relu(&s))
        }
        BoundLayer::Recurrent(_) => unreachable!("recurrent layers are handled by recur"),
    }
}

/// Step-by-step eager evaluation with parameters bound once.
#[derive(Clone)]
pub struct Runner {
    bound: Bound<Rc<Tensor2>>,
    state: Vec<Rc<Tensor2>>,
    rows: usize,
    input: usize,
}

impl Runner {
    pub fn new(model: &Model, rows: usize) -> Self {
        let bound = model.bind(&mut Eager);
        let state = model.zero_state(rows).layers.into_iter().map(Rc::new).collect();
        Self {
            bound,
            state,
            rows,
            input: model.spec().input,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn state(&self) -> HiddenState {
        HiddenState {
            layers: self.state.iter().map(|t| (**t).clone()).collect(),
        }
    }

    pub fn set_state(&mut self, state: &HiddenState) -> Result<(), CellError> {
        if state.layers.len() != self.state.len()
            || state
                .layers
                .iter()
                .zip(&self.state)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(CellError::ShapeMismatch("hidden state does not match the model".into()));
        }
        self.state = state.layers.iter().cloned().map(Rc::new).collect();
        Ok(())
    }

    pub fn reset(&mut self) {
        for s in &mut self.state {
            *s = Rc::new(Tensor2::zeros(s.rows(), s.cols()));
        }
    }

    fn input_tensor(&self, x: &[f64]) -> Result<Tensor2, CellError> {
        if x.len() != self.rows * self.input {
            return Err(CellError::ShapeMismatch(format!(
                "input of length {} for {} rows of width {}",
                x.len(),
                self.rows,
                self.input
            )));
        }
        Ok(Tensor2::from_vec(self.rows, self.input, x.to_vec())?)
    }

    /// Advances the state on `x` (row-major, `rows × input`) and returns the
    /// network output, `rows × output`.
    pub fn step(&mut self, x: &[f64], rng: Option<&mut Rng>) -> Result<Tensor2, CellError> {
        let x = Rc::new(self.input_tensor(x)?);
        let out = self.bound.step(&mut Eager, x, &mut self.state, self.rows, rng)?;
        if !out.is_finite() || self.state.iter().any(|s| !s.is_finite()) {
            return Err(CellError::NonFinite);
        }
        Ok(Rc::try_unwrap(out).unwrap_or_else(|rc| (*rc).clone()))
    }

    /// Advances only the recurrent state (no readout).
    pub fn advance(&mut self, x: &[f64]) -> Result<(), CellError> {
        let x = Rc::new(self.input_tensor(x)?);
        let feat = self.bound.pre(&mut Eager, x, self.rows, None)?;
        self.bound.recur(&mut Eager, &feat, &mut self.state)?;
        if self.state.iter().any(|s| !s.is_finite()) {
            return Err(CellError::NonFinite);
        }
        Ok(())
    }

    /// Segment input produced by the feed-forward layers for `x`.
    pub fn features(&self, x: &[f64]) -> Result<Tensor2, CellError> {
        let x = Rc::new(self.input_tensor(x)?);
        let feat = self.bound.pre(&mut Eager, x, self.rows, None)?;
        Ok((*feat).clone())
    }

    /// Advances the state on precomputed segment features.
    pub fn advance_features(&mut self, feat: &Tensor2) -> Result<(), CellError> {
        let feat = Rc::new(feat.clone());
        self.bound.recur(&mut Eager, &feat, &mut self.state)?;
        Ok(())
    }
}

impl Model {
    /// Runs a single sequence from `h0`; returns per-step outputs and the final state.
    pub fn forward_sequence(
        &self,
        h0: &HiddenState,
        inputs: &[Vec<f64>],
        mut dropout_rng: Option<&mut Rng>,
    ) -> Result<(Vec<Vec<f64>>, HiddenState), CellError> {
        let mut runner = Runner::new(self, 1);
        runner.set_state(h0)?;
        let mut outs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let y = runner.step(x, dropout_rng.as_deref_mut())?;
            outs.push(y.data().to_vec());
        }
        Ok((outs, runner.state()))
    }
}
