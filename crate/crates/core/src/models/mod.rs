//! Parametric sensing models `p -> A = F(p)` with unit-norm columns.
//!
//! Every model exposes the assembled matrix, its per-parameter partial
//! derivatives, and a pullback that contracts a matrix sensitivity with the
//! whole Jacobian at once (what the optimizer actually needs).

mod dense;
mod em;
mod fourier;

pub use dense::DenseModel;
pub use em::{EmGeometry, EmModel};
pub use fourier::FourierModel;

use serde::{Deserialize, Serialize};

use crate::blocks::BlockStructure;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Closed interval for one design scalar; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub const UNBOUNDED: Bound = Bound { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn symmetric(half_width: f64) -> Self {
        Bound { lo: -half_width, hi: half_width }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }
}

pub trait SensingModel: Send + Sync {
    /// Number of measurements `M`.
    fn rows(&self) -> usize;

    /// Signal length `N`.
    fn cols(&self) -> usize;

    /// Number of real design scalars `P`.
    fn num_params(&self) -> usize;

    fn bound(&self, j: usize) -> Bound;

    /// The column-normalized sensing matrix.
    fn assemble(&self, p: &[f64]) -> Result<CMatrix>;

    /// `dA/dp_j` of the normalized matrix.
    fn partial(&self, p: &[f64], j: usize) -> Result<CMatrix>;

    /// Returns `g_j = 2 Re sum_mn conj(S_mn) dA_mn/dp_j` for every `j`.
    ///
    /// `a` must be `assemble(p)`. If `S = dJ/dconj(A)` for a real function
    /// `J`, the result is the real gradient of `J` with respect to `p`.
    fn pullback(&self, p: &[f64], a: &CMatrix, sensitivity: &CMatrix) -> Result<Vec<f64>>;

    /// Baseline design drawn (or laid out) from `seed`.
    fn random_init(&self, seed: u64) -> Result<Vec<f64>>;

    fn descriptor(&self) -> ModelDescriptor;

    /// Componentwise clamp onto the feasible box.
    fn project_feasible(&self, p: &[f64]) -> Vec<f64> {
        p.iter().enumerate().map(|(j, &v)| self.bound(j).clamp(v)).collect()
    }

    /// Block structure the model is naturally paired with, if any.
    fn natural_blocks(&self) -> Option<BlockStructure> {
        None
    }
}

/// Serialized model description used by run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelDescriptor {
    Fourier {
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "N")]
        n: usize,
    },
    Em(EmGeometry),
    Dense {
        #[serde(rename = "M")]
        m: usize,
        #[serde(rename = "N")]
        n: usize,
    },
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<Box<dyn SensingModel>> {
        Ok(match self {
            ModelDescriptor::Fourier { m, n } => Box::new(FourierModel::new(*m, *n)?),
            ModelDescriptor::Em(geometry) => Box::new(EmModel::new(geometry.clone())?),
            ModelDescriptor::Dense { m, n } => Box::new(DenseModel::new(*m, *n)?),
        })
    }
}

pub fn make_fourier(m: usize, n: usize) -> Result<FourierModel> {
    FourierModel::new(m, n)
}

pub fn make_em(geometry: EmGeometry) -> Result<EmModel> {
    EmModel::new(geometry)
}

pub fn make_dense(m: usize, n: usize) -> Result<DenseModel> {
    DenseModel::new(m, n)
}

pub(crate) fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!("model dimensions must be positive, got {m}x{n}")));
    }
    Ok(())
}

pub(crate) fn check_params(model: &dyn SensingModel, p: &[f64]) -> Result<()> {
    if p.len() != model.num_params() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} parameters, got {}",
            model.num_params(),
            p.len()
        )));
    }
    if let Some(j) = p.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("parameter {j}")));
    }
    Ok(())
}

pub(crate) fn check_param_index(model: &dyn SensingModel, j: usize) -> Result<()> {
    if j >= model.num_params() {
        return Err(Error::IndexOutOfRange { index: j, len: model.num_params() });
    }
    Ok(())
}

pub(crate) fn check_sensitivity(model: &dyn SensingModel, s: &CMatrix) -> Result<()> {
    if s.nrows() != model.rows() || s.ncols() != model.cols() {
        return Err(Error::DimensionMismatch(format!(
            "sensitivity is {}x{}, model is {}x{}",
            s.nrows(),
            s.ncols(),
            model.rows(),
            model.cols()
        )));
    }
    Ok(())
}
