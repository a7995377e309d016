//! Define-then-run reverse-mode tape over [`Tensor2`] values.
//!
//! Nodes are appended in topological order while a graph is built; values are
//! produced by [`Tape::forward`] and adjoints by [`Tape::backward`]. Only the
//! primitives needed by the recurrent cells and feed-forward heads exist.

use std::collections::HashMap;

use super::tensor::{gemm, Tensor2};
use super::NumericsError;

pub type NodeId = usize;

/// Slope of the smooth surrogates used for the derivatives of the Heaviside
/// and sign functions.
pub const DEFAULT_SURROGATE_SLOPE: f64 = 10.0;

#[derive(Clone, Debug)]
pub enum Op {
    Leaf(String),
    Const(Tensor2),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Abs(NodeId),
    Heaviside(NodeId),
    Sign(NodeId),
    OneMinus(NodeId),
    AddScalar(NodeId, f64),
    Scale(NodeId, f64),
    ConcatCols(NodeId, NodeId),
    SliceCols(NodeId, usize, usize),
    Gather(NodeId, Vec<usize>),
    Sum(NodeId),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf(_) => "leaf",
            Op::Const(_) => "const",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Relu(_) => "relu",
            Op::Abs(_) => "abs",
            Op::Heaviside(_) => "heaviside",
            Op::Sign(_) => "sign",
            Op::OneMinus(_) => "one_minus",
            Op::AddScalar(..) => "add_scalar",
            Op::Scale(..) => "scale",
            Op::ConcatCols(..) => "concat_cols",
            Op::SliceCols(..) => "slice_cols",
            Op::Gather(..) => "gather",
            Op::Sum(_) => "sum",
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of every leaf, keyed by leaf name.
#[derive(Debug, Default, Clone)]
pub struct Gradients {
    by_name: HashMap<String, Tensor2>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor2> {
        self.by_name.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor2)> {
        self.by_name.iter()
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    pub fn into_map(self) -> HashMap<String, Tensor2> {
        self.by_name
    }
}

#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<Tensor2>,
    outputs: HashMap<String, NodeId>,
    surrogate_slope: f64,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::with_surrogate_slope(DEFAULT_SURROGATE_SLOPE)
    }

    pub fn with_surrogate_slope(k: f64) -> Self {
        Self {
            ops: Vec::new(),
            values: Vec::new(),
            outputs: HashMap::new(),
            surrogate_slope: k,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, id: NodeId) -> &Op {
        &self.ops[id]
    }

    fn push(&mut self, op: Op) -> NodeId {
        // Appending invalidates any earlier forward pass.
        self.values.clear();
        self.ops.push(op);
        self.ops.len() - 1
    }

    pub fn leaf(&mut self, name: impl Into<String>) -> NodeId {
        self.push(Op::Leaf(name.into()))
    }

    pub fn constant(&mut self, value: Tensor2) -> NodeId {
        self.push(Op::Const(value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Relu(a))
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Abs(a))
    }

    pub fn heaviside(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Heaviside(a))
    }

    pub fn sign(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sign(a))
    }

    pub fn one_minus(&mut self, a: NodeId) -> NodeId {
        self.push(Op::OneMinus(a))
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        self.push(Op::AddScalar(a, c))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        self.push(Op::Scale(a, c))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::ConcatCols(a, b))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        self.push(Op::SliceCols(a, start, len))
    }

    /// Picks `a[r, index[r]]` for every row, giving a column vector.
    pub fn gather(&mut self, a: NodeId, index: Vec<usize>) -> NodeId {
        self.push(Op::Gather(a, index))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sum(a))
    }

    pub fn mark_output(&mut self, name: impl Into<String>, id: NodeId) {
        self.outputs.insert(name.into(), id);
    }

    pub fn is_forwarded(&self) -> bool {
        !self.ops.is_empty() && self.values.len() == self.ops.len()
    }

    pub fn value(&self, id: NodeId) -> Option<&Tensor2> {
        self.values.get(id)
    }

    pub fn output(&self, name: &str) -> Option<&Tensor2> {
        self.outputs.get(name).and_then(|&id| self.values.get(id))
    }

    /// Evaluates every node; leaves are resolved through `bindings`.
    pub fn forward(&mut self, bindings: &HashMap<String, Tensor2>) -> Result<(), NumericsError> {
        self.forward_with(|name| bindings.get(name))
    }

    pub fn forward_with<'a>(&mut self, bindings: impl Fn(&str) -> Option<&'a Tensor2>) -> Result<(), NumericsError> {
        self.values.clear();
        self.values.reserve(self.ops.len());
        for id in 0..self.ops.len() {
            let value = self.eval(id, &bindings)?;
            if !value.is_finite() {
                self.values.clear();
                return Err(NumericsError::NonFinite {
                    node: id,
                    op: self.ops[id].name(),
                });
            }
            self.values.push(value);
        }
        Ok(())
    }

    fn eval<'a>(&self, id: NodeId, bindings: &impl Fn(&str) -> Option<&'a Tensor2>) -> Result<Tensor2, NumericsError> {
        let op = &self.ops[id];
        let v = |n: NodeId| &self.values[n];
        let mismatch = |detail: String| NumericsError::ShapeMismatch {
            node: id,
            op: op.name(),
            detail,
        };
        let out = match op {
            Op::Leaf(name) => bindings(name)
                .cloned()
                .ok_or_else(|| NumericsError::Unbound(name.clone()))?,
            Op::Const(t) => t.clone(),
            Op::MatMul(a, b) => v(*a)
                .matmul(v(*b))
                .ok_or_else(|| mismatch(format!("{:?} x {:?}", v(*a).shape(), v(*b).shape())))?,
            Op::Add(a, b) => binary(v(*a), v(*b), |x, y| x + y)
                .ok_or_else(|| mismatch(format!("{:?} + {:?}", v(*a).shape(), v(*b).shape())))?,
            Op::Sub(a, b) => binary(v(*a), v(*b), |x, y| x - y)
                .ok_or_else(|| mismatch(format!("{:?} - {:?}", v(*a).shape(), v(*b).shape())))?,
            Op::Mul(a, b) => binary(v(*a), v(*b), |x, y| x * y)
                .ok_or_else(|| mismatch(format!("{:?} * {:?}", v(*a).shape(), v(*b).shape())))?,
            Op::Sigmoid(a) => v(*a).map(sigmoid),
            Op::Tanh(a) => v(*a).map(f64::tanh),
            Op::Relu(a) => v(*a).map(|x| x.max(0.0)),
            Op::Abs(a) => v(*a).map(f64::abs),
            Op::Heaviside(a) => v(*a).map(heaviside),
            Op::Sign(a) => v(*a).map(sign),
            Op::OneMinus(a) => v(*a).map(|x| 1.0 - x),
            Op::AddScalar(a, c) => v(*a).map(|x| x + c),
            Op::Scale(a, c) => v(*a).map(|x| x * c),
            Op::ConcatCols(a, b) => concat_cols(v(*a), v(*b))
                .ok_or_else(|| mismatch(format!("{:?} | {:?}", v(*a).shape(), v(*b).shape())))?,
            Op::SliceCols(a, start, len) => slice_cols(v(*a), *start, *len)
                .ok_or_else(|| mismatch(format!("cols {}..{} of {:?}", start, start + len, v(*a).shape())))?,
            Op::Gather(a, index) => {
                let src = v(*a);
                if index.len() != src.rows() || index.iter().any(|&i| i >= src.cols()) {
                    return Err(mismatch(format!("{} indices into {:?}", index.len(), src.shape())));
                }
                let data = index.iter().enumerate().map(|(r, &c)| src.get(r, c)).collect();
                Tensor2::from_vec(index.len(), 1, data)?
            }
            Op::Sum(a) => Tensor2::scalar(v(*a).sum()),
        };
        Ok(out)
    }

    /// Reverse pass from a single seeded output.
    pub fn backward(&self, output: NodeId, seed: Tensor2) -> Result<Gradients, NumericsError> {
        self.backward_many(vec![(output, seed)])
    }

    /// Whether each node depends on at least one leaf.
    fn needs_grad(&self) -> Vec<bool> {
        let mut needs = vec![false; self.ops.len()];
        for (id, op) in self.ops.iter().enumerate() {
            needs[id] = match op {
                Op::Leaf(_) => true,
                Op::Const(_) => false,
                Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::ConcatCols(a, b) => {
                    needs[*a] || needs[*b]
                }
                Op::Sigmoid(a)
                | Op::Tanh(a)
                | Op::Relu(a)
                | Op::Abs(a)
                | Op::Heaviside(a)
                | Op::Sign(a)
                | Op::OneMinus(a)
                | Op::AddScalar(a, _)
                | Op::Scale(a, _)
                | Op::SliceCols(a, ..)
                | Op::Gather(a, _)
                | Op::Sum(a) => needs[*a],
            };
        }
        needs
    }

    /// Reverse pass with several seeded outputs; adjoints add up.
    pub fn backward_many(&self, seeds: Vec<(NodeId, Tensor2)>) -> Result<Gradients, NumericsError> {
        if !self.is_forwarded() {
            return Err(NumericsError::NotForwarded);
        }
        let needs = self.needs_grad();
        let mut adj: Vec<Option<Tensor2>> = vec![None; self.ops.len()];
        // Adjoints are only propagated into nodes that depend on a leaf.
        macro_rules! acc {
            ($node:expr, $g:expr) => {
                if needs[$node] {
                    accumulate(&mut adj[$node], $g);
                }
            };
        }
        let mut last = 0;
        for (id, seed) in seeds {
            if seed.shape() != self.values[id].shape() {
                return Err(NumericsError::ShapeMismatch {
                    node: id,
                    op: "seed",
                    detail: format!("{:?} vs {:?}", seed.shape(), self.values[id].shape()),
                });
            }
            accumulate(&mut adj[id], seed);
            last = last.max(id);
        }
        let mut grads = Gradients::default();
        for id in (0..=last).rev() {
            let Some(g) = adj[id].take() else { continue };
            let v = |n: NodeId| &self.values[n];
            match &self.ops[id] {
                Op::Leaf(name) => match grads.by_name.get_mut(name) {
                    Some(acc) => acc.add_assign(&g),
                    None => {
                        grads.by_name.insert(name.clone(), g);
                    }
                },
                Op::Const(_) => {}
                Op::MatMul(a, b) => {
                    let (va, vb) = (v(*a), v(*b));
                    if needs[*a] {
                        gemm_into(&mut adj[*a], &g, false, vb, true, va.shape());
                    }
                    if needs[*b] {
                        gemm_into(&mut adj[*b], va, true, &g, false, vb.shape());
                    }
                }
                Op::Add(a, b) => {
                    acc!(*b, reduce_to(&g, v(*b)));
                    acc!(*a, reduce_to(&g, v(*a)));
                }
                Op::Sub(a, b) => {
                    acc!(*b, reduce_to(&g.map(|x| -x), v(*b)));
                    acc!(*a, reduce_to(&g, v(*a)));
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (v(*a), v(*b));
                    let times = |w: &Tensor2| g.zip_map(w, |x, y| x * y).expect("shape checked in forward");
                    acc!(*b, reduce_to(&times(va), vb));
                    acc!(*a, reduce_to(&times(vb), va));
                }
                Op::Sigmoid(a) => {
                    let d = g.zip_map(v(id), |x, s| x * s * (1.0 - s)).unwrap();
                    acc!(*a, d);
                }
                Op::Tanh(a) => {
                    let d = g.zip_map(v(id), |x, t| x * (1.0 - t * t)).unwrap();
                    acc!(*a, d);
                }
                Op::Relu(a) => {
                    let d = g.zip_map(v(*a), |x, u| if u > 0.0 { x } else { 0.0 }).unwrap();
                    acc!(*a, d);
                }
                Op::Abs(a) => {
                    let d = g.zip_map(v(*a), |x, u| x * sign(u)).unwrap();
                    acc!(*a, d);
                }
                Op::Heaviside(a) => {
                    let k = self.surrogate_slope;
                    let d = g
                        .zip_map(v(*a), |x, u| {
                            let s = sigmoid(k * u);
                            x * s * (1.0 - s) * k
                        })
                        .unwrap();
                    acc!(*a, d);
                }
                Op::Sign(a) => {
                    let k = self.surrogate_slope;
                    let d = g
                        .zip_map(v(*a), |x, u| {
                            let t = (k * u).tanh();
                            x * (1.0 - t * t) * k
                        })
                        .unwrap();
                    acc!(*a, d);
                }
                Op::OneMinus(a) => acc!(*a, g.map(|x| -x)),
                Op::AddScalar(a, _) => acc!(*a, g),
                Op::Scale(a, c) => {
                    let c = *c;
                    acc!(*a, g.map(|x| x * c));
                }
                Op::ConcatCols(a, b) => {
                    let ca = v(*a).cols();
                    let cb = v(*b).cols();
                    acc!(*a, slice_cols(&g, 0, ca).unwrap());
                    acc!(*b, slice_cols(&g, ca, cb).unwrap());
                }
                Op::SliceCols(a, start, len) => {
                    let src = v(*a);
                    let mut d = Tensor2::zeros(src.rows(), src.cols());
                    for r in 0..src.rows() {
                        d.row_mut(r)[*start..start + len].copy_from_slice(g.row(r));
                    }
                    acc!(*a, d);
                }
                Op::Gather(a, index) => {
                    let src = v(*a);
                    let mut d = Tensor2::zeros(src.rows(), src.cols());
                    for (r, &c) in index.iter().enumerate() {
                        d.set(r, c, g.get(r, 0));
                    }
                    acc!(*a, d);
                }
                Op::Sum(a) => {
                    let src = v(*a);
                    acc!(*a, Tensor2::filled(src.rows(), src.cols(), g.get(0, 0)));
                }
            }
        }
        // Leaves that received no adjoint still get an explicit zero gradient.
        for (id, op) in self.ops.iter().enumerate() {
            if let Op::Leaf(name) = op {
                if !grads.by_name.contains_key(name) {
                    let (r, c) = self.values[id].shape();
                    grads.by_name.insert(name.clone(), Tensor2::zeros(r, c));
                }
            }
        }
        Ok(grads)
    }
}

/// Adds `op(a) · op(b)` into the adjoint slot without a temporary when it exists.
fn gemm_into(slot: &mut Option<Tensor2>, a: &Tensor2, ta: bool, b: &Tensor2, tb: bool, shape: (usize, usize)) {
    match slot {
        Some(acc) => gemm(a, ta, b, tb, acc, 1.0),
        None => {
            let mut out = Tensor2::zeros(shape.0, shape.1);
            gemm(a, ta, b, tb, &mut out, 0.0);
            *slot = Some(out);
        }
    }
}

fn accumulate(slot: &mut Option<Tensor2>, g: Tensor2) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

/// Elementwise op where `b` may broadcast as a row over `a`, or `a` over `b`.
fn binary(a: &Tensor2, b: &Tensor2, f: impl Fn(f64, f64) -> f64) -> Option<Tensor2> {
    if a.rows() == 1 && b.rows() > 1 {
        b.zip_map(a, |y, x| f(x, y))
    } else {
        a.zip_map(b, f)
    }
}

/// Sums a broadcast gradient back down to the operand's shape.
fn reduce_to(g: &Tensor2, operand: &Tensor2) -> Tensor2 {
    if g.shape() == operand.shape() {
        g.clone()
    } else {
        g.sum_rows()
    }
}

pub(crate) fn concat_cols(a: &Tensor2, b: &Tensor2) -> Option<Tensor2> {
    if a.rows() != b.rows() {
        return None;
    }
    let cols = a.cols() + b.cols();
    let mut data = Vec::with_capacity(a.rows() * cols);
    for r in 0..a.rows() {
        data.extend_from_slice(a.row(r));
        data.extend_from_slice(b.row(r));
    }
    Tensor2::from_vec(a.rows(), cols, data).ok()
}

pub(crate) fn slice_cols(a: &Tensor2, start: usize, len: usize) -> Option<Tensor2> {
    if start + len > a.cols() {
        return None;
    }
    let mut data = Vec::with_capacity(a.rows() * len);
    for r in 0..a.rows() {
        data.extend_from_slice(&a.row(r)[start..start + len]);
    }
    Tensor2::from_vec(a.rows(), len, data).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, Tensor2)]) -> HashMap<String, Tensor2> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn forward_matmul_and_activations() {
        let mut tape = Tape::new();
        let a = tape.leaf("a");
        let b = tape.leaf("b");
        let c = tape.matmul(a, b);
        tape.mark_output("c", c);
        let z = tape.constant(Tensor2::scalar(0.0));
        let s = tape.sigmoid(z);
        let t = tape.tanh(z);
        let bindings = bind(&[
            ("a", Tensor2::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()),
            ("b", Tensor2::from_rows(&[vec![1.0], vec![1.0]]).unwrap()),
        ]);
        tape.forward(&bindings).unwrap();
        assert_eq!(tape.output("c").unwrap().data(), &[3.0, 7.0]);
        assert_eq!(tape.value(s).unwrap().get(0, 0), 0.5);
        assert_eq!(tape.value(t).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn square_and_sigmoid_derivatives() {
        let mut tape = Tape::new();
        let x = tape.leaf("x");
        let sq = tape.mul(x, x);
        let y = tape.leaf("y");
        let s = tape.sigmoid(y);
        tape.forward(&bind(&[("x", Tensor2::scalar(3.0)), ("y", Tensor2::scalar(0.0))]))
            .unwrap();
        let g = tape.backward(sq, Tensor2::scalar(1.0)).unwrap();
        assert_eq!(g.get("x").unwrap().get(0, 0), 6.0);
        let g = tape.backward(s, Tensor2::scalar(1.0)).unwrap();
        assert_eq!(g.get("y").unwrap().get(0, 0), 0.25);
        // unreached leaf is still reported, as zero
        assert_eq!(g.get("x").unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn shape_mismatch_names_node() {
        let mut tape = Tape::new();
        let a = tape.leaf("a");
        let b = tape.leaf("b");
        let _ = tape.add(a, b);
        let err = tape
            .forward(&bind(&[("a", Tensor2::zeros(2, 3)), ("b", Tensor2::zeros(2, 2))]))
            .unwrap_err();
        match err {
            NumericsError::ShapeMismatch { node, op, .. } => {
                assert_eq!(node, 2);
                assert_eq!(op, "add");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn backward_before_forward_rejected() {
        let mut tape = Tape::new();
        let a = tape.leaf("a");
        assert!(matches!(
            tape.backward(a, Tensor2::scalar(1.0)),
            Err(NumericsError::NotForwarded)
        ));
    }

    #[test]
    fn unbound_leaf_rejected() {
        let mut tape = Tape::new();
        tape.leaf("missing");
        assert!(matches!(
            tape.forward(&HashMap::new()),
            Err(NumericsError::Unbound(name)) if name == "missing"
        ));
    }

    #[test]
    fn broadcast_bias_gradient_sums_rows() {
        let mut tape = Tape::new();
        let x = tape.leaf("x");
        let b = tape.leaf("b");
        let y = tape.add(x, b);
        let s = tape.sum(y);
        tape.forward(&bind(&[
            ("x", Tensor2::zeros(3, 2)),
            ("b", Tensor2::row_vector(&[1.0, 2.0])),
        ]))
        .unwrap();
        let g = tape.backward(s, Tensor2::scalar(1.0)).unwrap();
        assert_eq!(g.get("b").unwrap().data(), &[3.0, 3.0]);
        assert_eq!(g.get("x").unwrap().data(), &[1.0; 6]);
    }

    #[test]
    fn surrogates_at_zero() {
        let mut tape = Tape::new();
        let u = tape.leaf("u");
        let h = tape.heaviside(u);
        let s = tape.sign(u);
        tape.forward(&bind(&[("u", Tensor2::scalar(0.0))])).unwrap();
        assert_eq!(tape.value(h).unwrap().get(0, 0), 0.0);
        let gh = tape.backward(h, Tensor2::scalar(1.0)).unwrap();
        assert!((gh.get("u").unwrap().get(0, 0) - 2.5).abs() < 1e-12);
        let gs = tape.backward(s, Tensor2::scalar(1.0)).unwrap();
        assert!((gs.get("u").unwrap().get(0, 0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gather_concat_slice_roundtrip_gradients() {
        let mut tape = Tape::new();
        let a = tape.leaf("a");
        let b = tape.leaf("b");
        let c = tape.concat_cols(a, b);
        let right = tape.slice_cols(c, 1, 2);
        let picked = tape.gather(right, vec![1, 0]);
        let s = tape.sum(picked);
        tape.forward(&bind(&[
            ("a", Tensor2::from_rows(&[vec![1.0], vec![2.0]]).unwrap()),
            ("b", Tensor2::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap()),
        ]))
        .unwrap();
        assert_eq!(tape.value(s).unwrap().get(0, 0), 4.0 + 5.0);
        let g = tape.backward(s, Tensor2::scalar(1.0)).unwrap();
        assert_eq!(g.get("a").unwrap().data(), &[0.0, 0.0]);
        assert_eq!(g.get("b").unwrap().data(), &[0.0, 1.0, 1.0, 0.0]);
    }
}
