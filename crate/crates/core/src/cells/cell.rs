use std::fmt;
use std::str::FromStr;

use crate::numerics::{Backend, Eager, NumericsError, Rng, Tensor2};

use super::CellError;

/// Recurrent cell family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellFamily {
    Gru,
    Brc,
    Nbrc,
    MinGru,
    Bmru,
}

impl CellFamily {
    pub const ALL: [CellFamily; 5] = [
        CellFamily::Gru,
        CellFamily::Brc,
        CellFamily::Nbrc,
        CellFamily::MinGru,
        CellFamily::Bmru,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CellFamily::Gru => "gru",
            CellFamily::Brc => "brc",
            CellFamily::Nbrc => "nbrc",
            CellFamily::MinGru => "mingru",
            CellFamily::Bmru => "bmru",
        }
    }

    /// Gates depend on the input only, so the recurrence is a scan.
    pub fn is_input_gated(self) -> bool {
        matches!(self, CellFamily::MinGru | CellFamily::Bmru)
    }

    /// Parameter names in storage order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            CellFamily::Gru => &["W_xr", "W_hr", "b_r", "W_xz", "W_hz", "b_z", "W_xn", "W_hn", "b_n"],
            CellFamily::Brc => &["W_r", "w_r", "b_r", "W_z", "w_z", "b_z", "W_n", "b_n"],
            CellFamily::Nbrc => &["W_xr", "W_hr", "b_r", "W_xz", "W_hz", "b_z", "W_n", "b_n"],
            CellFamily::MinGru => &["W_z", "b_z", "W_n", "b_n"],
            CellFamily::Bmru => &["W_n", "b_n", "W_beta", "b_beta", "alpha"],
        }
    }

    fn param_kind(name: &str) -> ParamKind {
        match name {
            "W_hr" | "W_hz" | "W_hn" => ParamKind::Recurrent,
            "w_r" | "w_z" => ParamKind::Elementwise,
            "alpha" => ParamKind::Alpha,
            n if n.starts_with("W_") => ParamKind::Input,
            _ => ParamKind::Bias,
        }
    }
}

impl fmt::Display for CellFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CellFamily {
    type Err = CellError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gru" => Ok(CellFamily::Gru),
            "brc" => Ok(CellFamily::Brc),
            "nbrc" => Ok(CellFamily::Nbrc),
            "mingru" => Ok(CellFamily::MinGru),
            "bmru" => Ok(CellFamily::Bmru),
            other => Err(CellError::UnknownFamily(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    Input,
    Recurrent,
    Elementwise,
    Bias,
    Alpha,
}

/// Lower bound re-imposed on the BMRU write amplitude after optimizer steps.
pub const ALPHA_FLOOR: f64 = 1e-3;

/// Weights of one recurrent cell. Input weights are `input × hidden`,
/// recurrent weights `hidden × hidden`, vectors `1 × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    family: CellFamily,
    input: usize,
    hidden: usize,
    weights: Vec<Tensor2>,
}

impl CellParams {
    pub fn shape_of(name: &str, input: usize, hidden: usize) -> (usize, usize) {
        match CellFamily::param_kind(name) {
            ParamKind::Input => (input, hidden),
            ParamKind::Recurrent => (hidden, hidden),
            _ => (1, hidden),
        }
    }

    /// Uniform(±1/√fan_in) weights, zero biases, unit BMRU amplitude.
    pub fn init(family: CellFamily, input: usize, hidden: usize, rng: &mut Rng) -> Result<Self, CellError> {
        if input == 0 || hidden == 0 {
            return Err(CellError::ZeroWidth);
        }
        let weights = family
            .param_names()
            .iter()
            .map(|&name| {
                let (rows, cols) = Self::shape_of(name, input, hidden);
                match CellFamily::param_kind(name) {
                    ParamKind::Bias => Tensor2::zeros(rows, cols),
                    ParamKind::Alpha => Tensor2::filled(rows, cols, 1.0),
                    ParamKind::Input | ParamKind::Recurrent => uniform_fan_in(rows, cols, rows, rng),
                    ParamKind::Elementwise => uniform_fan_in(rows, cols, 1, rng),
                }
            })
            .collect();
        Ok(Self {
            family,
            input,
            hidden,
            weights,
        })
    }

    /// Builds parameters from explicitly named tensors, checking names and shapes.
    pub fn from_named(
        family: CellFamily,
        input: usize,
        hidden: usize,
        named: Vec<(String, Tensor2)>,
    ) -> Result<Self, CellError> {
        let mut weights = Vec::with_capacity(named.len());
        let names = family.param_names();
        if named.len() != names.len() {
            return Err(CellError::BadParams(format!(
                "{family} expects {} tensors, got {}",
                names.len(),
                named.len()
            )));
        }
        for &name in names {
            let t = named
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| CellError::BadParams(format!("{family} is missing {name}")))?;
            let want = Self::shape_of(name, input, hidden);
            if t.shape() != want {
                return Err(CellError::BadParams(format!(
                    "{family}.{name} has shape {:?}, expected {want:?}",
                    t.shape()
                )));
            }
            weights.push(t);
        }
        let p = Self {
            family,
            input,
            hidden,
            weights,
        };
        if family == CellFamily::Bmru && p.get("alpha").unwrap().data().iter().any(|&a| a <= 0.0) {
            return Err(CellError::BadParams("BMRU alpha must be strictly positive".into()));
        }
        Ok(p)
    }

    pub fn family(&self) -> CellFamily {
        self.family
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn weights(&self) -> &[Tensor2] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Tensor2] {
        &mut self.weights
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Tensor2)> {
        self.family.param_names().iter().copied().zip(&self.weights)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor2> {
        self.family
            .param_names()
            .iter()
            .position(|&n| n == name)
            .map(|i| &self.weights[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor2> {
        let i = self.family.param_names().iter().position(|&n| n == name)?;
        Some(&mut self.weights[i])
    }

    /// Keeps BMRU amplitudes at or above [`ALPHA_FLOOR`].
    pub fn project(&mut self) {
        if self.family == CellFamily::Bmru {
            if let Some(alpha) = self.get_mut("alpha") {
                for a in alpha.data_mut() {
                    *a = a.max(ALPHA_FLOOR);
                }
            }
        }
    }

    /// One update `h_t = f(h_{t-1}, x_t)` for a single sample.
    pub fn step(&self, h_prev: &[f64], x: &[f64]) -> Result<Vec<f64>, CellError> {
        if h_prev.len() != self.hidden || x.len() != self.input {
            return Err(CellError::ShapeMismatch(format!(
                "{} cell with input {} / hidden {} given x of {} and h of {}",
                self.family,
                self.input,
                self.hidden,
                x.len(),
                h_prev.len()
            )));
        }
        if h_prev.iter().chain(x).any(|v| !v.is_finite()) {
            return Err(CellError::NonFinite);
        }
        let mut be = Eager;
        let w: Vec<_> = self.named().map(|(n, t)| be.param(n, t)).collect();
        let h = be.input(Tensor2::row_vector(h_prev));
        let xv = be.input(Tensor2::row_vector(x));
        let out = cell_step(&mut be, self.family, &w, &h, &xv)?;
        Ok(out.data().to_vec())
    }

    /// Gate activations for one sample, for inspection: `(name, values)` pairs.
    pub fn gates(&self, h_prev: &[f64], x: &[f64]) -> Result<Vec<(&'static str, Vec<f64>)>, CellError> {
        let mut be = Eager;
        let w: Vec<_> = self.named().map(|(n, t)| be.param(n, t)).collect();
        let h = be.input(Tensor2::row_vector(h_prev));
        let xv = be.input(Tensor2::row_vector(x));
        let g = gate_values(&mut be, self.family, &w, &h, &xv)?;
        Ok(g.into_iter().map(|(n, v)| (n, v.data().to_vec())).collect())
    }
}

fn uniform_fan_in(rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> Tensor2 {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform_in(-bound, bound)).collect();
    Tensor2::from_vec(rows, cols, data).expect("sized")
}

/// `z ⊙ h + (1 − z) ⊙ n`
fn blend<B: Backend>(be: &mut B, z: &B::V, h: &B::V, n: &B::V) -> Result<B::V, NumericsError> {
    let keep = be.mul(z, h)?;
    let one_minus = be.one_minus(z);
    let write = be.mul(&one_minus, n)?;
    be.add(&keep, &write)
}

/// `x · W_x + h · W_h + b`
fn two_affine<B: Backend>(
    be: &mut B,
    x: &B::V,
    wx: &B::V,
    h: &B::V,
    wh: &B::V,
    b: &B::V,
) -> Result<B::V, NumericsError> {
    let xa = be.matmul(x, wx)?;
    let ha = be.matmul(h, wh)?;
    let s = be.add(&xa, &ha)?;
    be.add(&s, b)
}

/// `x · W + w ⊙ h + b`
fn elementwise_affine<B: Backend>(
    be: &mut B,
    x: &B::V,
    wx: &B::V,
    h: &B::V,
    w: &B::V,
    b: &B::V,
) -> Result<B::V, NumericsError> {
    let xa = be.matmul(x, wx)?;
    let ha = be.mul(h, w)?;
    let s = be.add(&xa, &ha)?;
    be.add(&s, b)
}

/// Records or evaluates one cell update. `w` holds the parameters in
/// [`CellFamily::param_names`] order; `h` is `batch × hidden`, `x` is `batch × input`.
pub(crate) fn cell_step<B: Backend>(
    be: &mut B,
    family: CellFamily,
    w: &[B::V],
    h: &B::V,
    x: &B::V,
) -> Result<B::V, NumericsError> {
    match family {
        CellFamily::Gru => {
            let r_pre = two_affine(be, x, &w[0], h, &w[1], &w[2])?;
            let r = be.sigmoid(&r_pre);
            let z_pre = two_affine(be, x, &w[3], h, &w[4], &w[5])?;
            let z = be.sigmoid(&z_pre);
            let xn = be.matmul(x, &w[6])?;
            let hn = be.matmul(h, &w[7])?;
            let rhn = be.mul(&r, &hn)?;
            let s = be.add(&xn, &rhn)?;
            let n_pre = be.add(&s, &w[8])?;
            let n = be.tanh(&n_pre);
            blend(be, &z, h, &n)
        }
        CellFamily::Brc | CellFamily::Nbrc => {
            let (r_pre, z_pre) = if family == CellFamily::Brc {
                (
                    elementwise_affine(be, x, &w[0], h, &w[1], &w[2])?,
                    elementwise_affine(be, x, &w[3], h, &w[4], &w[5])?,
                )
            } else {
                (
                    two_affine(be, x, &w[0], h, &w[1], &w[2])?,
                    two_affine(be, x, &w[3], h, &w[4], &w[5])?,
                )
            };
            let t = be.tanh(&r_pre);
            let r = be.add_scalar(&t, 1.0);
            let z = be.sigmoid(&z_pre);
            let xn = be.matmul(x, &w[6])?;
            let rh = be.mul(&r, h)?;
            let s = be.add(&xn, &rh)?;
            let n_pre = be.add(&s, &w[7])?;
            let n = be.tanh(&n_pre);
            blend(be, &z, h, &n)
        }
        CellFamily::MinGru => {
            let z_pre = be.affine(x, &w[0], &w[1])?;
            let z = be.sigmoid(&z_pre);
            let n = be.affine(x, &w[2], &w[3])?;
            blend(be, &z, h, &n)
        }
        CellFamily::Bmru => {
            let n = be.affine(x, &w[0], &w[1])?;
            let beta_pre = be.affine(x, &w[2], &w[3])?;
            let beta = be.abs(&beta_pre);
            let n_abs = be.abs(&n);
            let margin = be.sub(&n_abs, &beta)?;
            let z = be.heaviside(&margin);
            let s = be.sign(&n);
            let sa = be.mul(&s, &w[4])?;
            let write = be.mul(&z, &sa)?;
            let one_minus = be.one_minus(&z);
            let carry = be.mul(&one_minus, h)?;
            be.add(&write, &carry)
        }
    }
}

/// Gate values (r, z, n, β as applicable) without the state update.
pub(crate) fn gate_values<B: Backend>(
    be: &mut B,
    family: CellFamily,
    w: &[B::V],
    h: &B::V,
    x: &B::V,
) -> Result<Vec<(&'static str, B::V)>, NumericsError> {
    Ok(match family {
        CellFamily::Gru => {
            let r_pre = two_affine(be, x, &w[0], h, &w[1], &w[2])?;
            let r = be.sigmoid(&r_pre);
            let z_pre = two_affine(be, x, &w[3], h, &w[4], &w[5])?;
            let z = be.sigmoid(&z_pre);
            vec![("r", r), ("z", z)]
        }
        CellFamily::Brc | CellFamily::Nbrc => {
            let (r_pre, z_pre) = if family == CellFamily::Brc {
                (
                    elementwise_affine(be, x, &w[0], h, &w[1], &w[2])?,
                    elementwise_affine(be, x, &w[3], h, &w[4], &w[5])?,
                )
            } else {
                (
                    two_affine(be, x, &w[0], h, &w[1], &w[2])?,
                    two_affine(be, x, &w[3], h, &w[4], &w[5])?,
                )
            };
            let t = be.tanh(&r_pre);
            let r = be.add_scalar(&t, 1.0);
            let z = be.sigmoid(&z_pre);
            vec![("r", r), ("z", z)]
        }
        CellFamily::MinGru => {
            let z_pre = be.affine(x, &w[0], &w[1])?;
            let z = be.sigmoid(&z_pre);
            let n = be.affine(x, &w[2], &w[3])?;
            vec![("z", z), ("n", n)]
        }
        CellFamily::Bmru => {
            let n = be.affine(x, &w[0], &w[1])?;
            let beta_pre = be.affine(x, &w[2], &w[3])?;
            let beta = be.abs(&beta_pre);
            let n_abs = be.abs(&n);
            let margin = be.sub(&n_abs, &beta)?;
            let z = be.heaviside(&margin);
            vec![("n", n), ("beta", beta), ("z", z)]
        }
    })
}
