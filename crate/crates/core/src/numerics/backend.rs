//! A small operator vocabulary shared by eager evaluation and the tape, so the
//! cell equations are written once and either evaluated directly or recorded
//! for differentiation.

use std::rc::Rc;

use super::tape::{self, Tape};
use super::{NumericsError, Tensor2};

pub trait Backend {
    type V: Clone;

    /// Named trainable parameter.
    fn param(&mut self, name: &str, value: &Tensor2) -> Self::V;
    /// Constant data (inputs, masks).
    fn input(&mut self, value: Tensor2) -> Self::V;

    fn matmul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError>;
    fn add(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError>;
    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError>;
    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError>;
    fn sigmoid(&mut self, a: &Self::V) -> Self::V;
    fn tanh(&mut self, a: &Self::V) -> Self::V;
    fn relu(&mut self, a: &Self::V) -> Self::V;
    fn abs(&mut self, a: &Self::V) -> Self::V;
    fn heaviside(&mut self, a: &Self::V) -> Self::V;
    fn sign(&mut self, a: &Self::V) -> Self::V;
    fn one_minus(&mut self, a: &Self::V) -> Self::V;
    fn add_scalar(&mut self, a: &Self::V, c: f64) -> Self::V;
    fn concat_cols(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError>;
    fn slice_cols(&mut self, a: &Self::V, start: usize, len: usize) -> Result<Self::V, NumericsError>;

    /// `x · w + b`
    fn affine(&mut self, x: &Self::V, w: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        let xw = self.matmul(x, w)?;
        self.add(&xw, b)
    }
}

/// Immediate evaluation on shared tensors.
#[derive(Debug, Default, Clone, Copy)]
pub struct Eager;

fn eager_err(op: &'static str, a: &Tensor2, b: &Tensor2) -> NumericsError {
    NumericsError::ShapeMismatch {
        node: 0,
        op,
        detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
    }
}

fn elementwise(
    op: &'static str,
    a: &Tensor2,
    b: &Tensor2,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Rc<Tensor2>, NumericsError> {
    let out = if a.rows() == 1 && b.rows() > 1 {
        b.zip_map(a, |y, x| f(x, y))
    } else {
        a.zip_map(b, f)
    };
    out.map(Rc::new).ok_or_else(|| eager_err(op, a, b))
}

impl Backend for Eager {
    type V = Rc<Tensor2>;

    fn param(&mut self, _name: &str, value: &Tensor2) -> Self::V {
        Rc::new(value.clone())
    }

    fn input(&mut self, value: Tensor2) -> Self::V {
        Rc::new(value)
    }

    fn matmul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        a.matmul(b).map(Rc::new).ok_or_else(|| eager_err("matmul", a, b))
    }

    fn add(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        elementwise("add", a, b, |x, y| x + y)
    }

    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        elementwise("sub", a, b, |x, y| x - y)
    }

    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        elementwise("mul", a, b, |x, y| x * y)
    }

    fn sigmoid(&mut self, a: &Self::V) -> Self::V {
        Rc::new(a.map(tape::sigmoid))
    }

    fn tanh(&mut self, a: &Self::V) -> Self::V {
        Rc::new(a.map(f64::tanh))
    }

    fn relu(&mut self, a: &Self::V) -> Self::V {
        Rc::new(a.map(|x| x.max(0.0)))
    }

    fn abs(&mut self, a: &Self::V) -> Self::V {
        Rc::new(a.map(f64::abs))
    }

    fn heaviside(&mut self, a: &Self::V) -> Self::V {
        Rc::new(a.map(tape::heaviside))
    }

    fn sign(&mut self, a: &Self::V) -> Self::V {
        Rc::new(a.map(tape::sign))
    }

    fn one_minus(&mut self, a: &Self::V) -> Self::V {
        Rc::new(a.map(|x| 1.0 - x))
    }

    fn add_scalar(&mut self, a: &Self::V, c: f64) -> Self::V {
        Rc::new(a.map(|x| x + c))
    }

    fn concat_cols(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        tape::concat_cols(a, b)
            .map(Rc::new)
            .ok_or_else(|| eager_err("concat_cols", a, b))
    }

    fn slice_cols(&mut self, a: &Self::V, start: usize, len: usize) -> Result<Self::V, NumericsError> {
        tape::slice_cols(a, start, len)
            .map(Rc::new)
            .ok_or_else(|| NumericsError::ShapeMismatch {
                node: 0,
                op: "slice_cols",
                detail: format!("cols {}..{} of {:?}", start, start + len, a.shape()),
            })
    }
}

impl Backend for Tape {
    type V = tape::NodeId;

    fn param(&mut self, name: &str, _value: &Tensor2) -> Self::V {
        self.leaf(name)
    }

    fn input(&mut self, value: Tensor2) -> Self::V {
        self.constant(value)
    }

    fn matmul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        Ok(Tape::matmul(self, *a, *b))
    }

    fn add(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        Ok(Tape::add(self, *a, *b))
    }

    fn sub(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        Ok(Tape::sub(self, *a, *b))
    }

    fn mul(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        Ok(Tape::mul(self, *a, *b))
    }

    fn sigmoid(&mut self, a: &Self::V) -> Self::V {
        Tape::sigmoid(self, *a)
    }

    fn tanh(&mut self, a: &Self::V) -> Self::V {
        Tape::tanh(self, *a)
    }

    fn relu(&mut self, a: &Self::V) -> Self::V {
        Tape::relu(self, *a)
    }

    fn abs(&mut self, a: &Self::V) -> Self::V {
        Tape::abs(self, *a)
    }

    fn heaviside(&mut self, a: &Self::V) -> Self::V {
        Tape::heaviside(self, *a)
    }

    fn sign(&mut self, a: &Self::V) -> Self::V {
        Tape::sign(self, *a)
    }

    fn one_minus(&mut self, a: &Self::V) -> Self::V {
        Tape::one_minus(self, *a)
    }

    fn add_scalar(&mut self, a: &Self::V, c: f64) -> Self::V {
        Tape::add_scalar(self, *a, c)
    }

    fn concat_cols(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V, NumericsError> {
        Ok(Tape::concat_cols(self, *a, *b))
    }

    fn slice_cols(&mut self, a: &Self::V, start: usize, len: usize) -> Result<Self::V, NumericsError> {
        Ok(Tape::slice_cols(self, *a, start, len))
    }
}
