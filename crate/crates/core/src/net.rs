//! Explicit fully connected ReLU networks and the constructive operations on
//! them: identity networks, affine reparametrisation, composition and
//! parallel sums.
//!
//! A network is a list of affine layers `(W_n, B_n)`. The realization applies
//! `max{., 0}` componentwise after every layer except the last. Weight
//! matrices are stored densely with shape `(k_n, k_{n-1})`.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dims::DimVector;
use crate::error::{Error, Result};
use crate::par;

/// One affine layer `x -> W x + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::Shape(format!(
                "weight has {} rows but bias has length {}",
                weight.nrows(),
                bias.len()
            )));
        }
        if weight.nrows() == 0 || weight.ncols() == 0 {
            return Err(Error::Shape("empty layer".into()));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { weight: Array2::zeros((rows, cols)), bias: Array1::zeros(rows) }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.weight.dot(&x) + &self.bias
    }
}

/// A ReLU network with at least one hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    dims: DimVector,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Shape(format!(
                "a network needs at least 2 layers, got {}",
                layers.len()
            )));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(Error::Shape(format!(
                    "layer {} expects input width {} but layer {} has output width {}",
                    k + 2,
                    pair[1].in_dim(),
                    k + 1,
                    pair[0].out_dim()
                )));
            }
        }
        let mut widths = vec![layers[0].in_dim()];
        widths.extend(layers.iter().map(Layer::out_dim));
        let dims = DimVector::new(widths)?;
        Ok(Self { layers, dims })
    }

    /// Convenience constructor from `(weight rows, bias)` pairs.
    pub fn from_rows(layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>) -> Result<Self> {
        let layers = layers
            .into_iter()
            .map(|(w, b)| {
                let rows = w.len();
                let cols = w.first().map_or(0, Vec::len);
                if w.iter().any(|r| r.len() != cols) {
                    return Err(Error::Shape("ragged weight matrix".into()));
                }
                let flat: Vec<f64> = w.into_iter().flatten().collect();
                let weight = Array2::from_shape_vec((rows, cols), flat)
                    .map_err(|e| Error::Shape(e.to_string()))?;
                Layer::new(weight, Array1::from(b))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn dims(&self) -> &DimVector {
        &self.dims
    }

    /// Number of affine layers, i.e. `dims().len() - 1`.
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dims.input()
    }

    pub fn output_dim(&self) -> usize {
        self.dims.output()
    }

    pub fn param_count(&self) -> u128 {
        self.dims.param_count()
    }

    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects input of length {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let last = self.layers.len() - 1;
        let mut h = self.layers[0].apply(ArrayView1::from(x));
        for layer in &self.layers[1..] {
            h.mapv_inplace(relu);
            h = layer.apply(h.view());
        }
        debug_assert_eq!(h.len(), self.layers[last].out_dim());
        Ok(h.to_vec())
    }

    /// Realization of a network with scalar output.
    pub fn realize_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "expected scalar output, network has output width {}",
                self.output_dim()
            )));
        }
        Ok(self.realize(x)?[0])
    }

    /// Realizes the network at every point, in parallel when enabled.
    pub fn realize_batch(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        par::map_range(points.len(), |i| self.realize(&points[i])).into_iter().collect()
    }

    /// Sequential counterpart of [`Network::realize_batch`].
    pub fn realize_batch_seq(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        par::map_range_seq(points.len(), |i| self.realize(&points[i])).into_iter().collect()
    }

    /// Scalar identity network with `hidden >= 1` hidden layers of width 2,
    /// computing `x = max{x,0} - max{-x,0}`. Its widths are `neutral(hidden + 2)`.
    pub fn identity(hidden: usize) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::InvalidArgument("identity network needs at least one hidden layer".into()));
        }
        Self::identity_chain(1, hidden)
    }

    /// Identity on `R^q` through `hidden` layers of width `2q`.
    fn identity_chain(q: usize, hidden: usize) -> Result<Self> {
        let eye = Array2::<f64>::eye(q);
        let mut layers = Vec::with_capacity(hidden + 1);
        layers.push(Layer::new(ndarray::concatenate![Axis(0), eye, -&eye], Array1::zeros(2 * q))?);
        for _ in 1..hidden {
            layers.push(Layer::new(Array2::eye(2 * q), Array1::zeros(2 * q))?);
        }
        layers.push(Layer::new(ndarray::concatenate![Axis(1), eye, -&eye], Array1::zeros(q))?);
        Self::new(layers)
    }

    /// All-zero network with width-1 hidden layers and `layers >= 2` affine
    /// layers: widths `(d_in, 1, ..., 1, d_out)`.
    pub fn zero(d_in: usize, d_out: usize, layers: usize) -> Result<Self> {
        if layers < 2 {
            return Err(Error::InvalidArgument(format!("zero network needs >= 2 layers, got {layers}")));
        }
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidArgument("zero network needs positive widths".into()));
        }
        let mut widths = vec![1; layers + 1];
        widths[0] = d_in;
        widths[layers] = d_out;
        let out = widths.windows(2).map(|w| Layer::zeros(w[1], w[0])).collect();
        Self::new(out)
    }

    /// Network realizing `y -> lambda * (R(self)(y + shift_in) + shift_out)`
    /// with unchanged widths.
    pub fn affine_wrap(&self, lambda: f64, shift_in: &[f64], shift_out: &[f64]) -> Result<Self> {
        if shift_in.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input shift has length {}, network input width is {}",
                shift_in.len(),
                self.input_dim()
            )));
        }
        if shift_out.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "output shift has length {}, network output width is {}",
                shift_out.len(),
                self.output_dim()
            )));
        }
        let mut layers = self.layers.clone();
        let first = &mut layers[0];
        first.bias = &first.bias + &first.weight.dot(&ArrayView1::from(shift_in));
        let last = layers.last_mut().expect("at least two layers");
        last.weight *= lambda;
        last.bias = (&last.bias + &ArrayView1::from(shift_out)) * lambda;
        Self::new(layers)
    }

    /// Network realizing `R(self) ∘ R(inner)`, with widths `dims(self) ⊙ dims(inner)`.
    ///
    /// The output layer `(W, B)` of `inner` becomes `([W; -W], [B; -B])` and the
    /// first layer `(W_1, B_1)` of `self` becomes `([W_1, -W_1], B_1)`, so the
    /// glue layer carries `(max{y,0}, max{-y,0})` for the inner output `y`.
    pub fn compose(&self, inner: &Network) -> Result<Self> {
        if self.input_dim() != inner.output_dim() {
            return Err(Error::Shape(format!(
                "cannot compose: outer input width {} != inner output width {}",
                self.input_dim(),
                inner.output_dim()
            )));
        }
        let mut layers = Vec::with_capacity(self.layer_count() + inner.layer_count());
        let (inner_out, inner_rest) = inner.layers.split_last().expect("at least two layers");
        layers.extend_from_slice(inner_rest);
        layers.push(Layer::new(
            ndarray::concatenate![Axis(0), inner_out.weight, -&inner_out.weight],
            ndarray::concatenate![Axis(0), inner_out.bias, -&inner_out.bias],
        )?);
        let (outer_in, outer_rest) = self.layers.split_first().expect("at least two layers");
        layers.push(Layer::new(
            ndarray::concatenate![Axis(1), outer_in.weight, -&outer_in.weight],
            outer_in.bias.clone(),
        )?);
        layers.extend_from_slice(outer_rest);
        let net = Self::new(layers)?;
        debug_assert_eq!(net.dims, self.dims.odot(&inner.dims));
        Ok(net)
    }

    /// Network realizing `sum_i h_i R(net_i)`. All members must have the same
    /// number of layers, input width and output width; the widths of the
    /// result are the `⊞`-fold of the member widths.
    pub fn parallel_sum(terms: &[(f64, &Network)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("parallel sum of no networks".into()))?;
        let depth = first.layer_count();
        for (_, net) in terms {
            if net.layer_count() != depth {
                return Err(Error::Shape(format!(
                    "parallel sum needs equal depths, got {} and {}",
                    depth,
                    net.layer_count()
                )));
            }
            if net.input_dim() != first.input_dim() || net.output_dim() != first.output_dim() {
                return Err(Error::Shape(format!(
                    "parallel sum endpoints differ: {} vs {}",
                    first.dims, net.dims
                )));
            }
        }
        let dims = DimVector::boxplus_all(terms.iter().map(|(_, n)| &n.dims))?;
        let w = dims.as_slice();
        let mut layers = Vec::with_capacity(depth);
        for j in 0..depth {
            let mut layer = Layer::zeros(w[j + 1], w[j]);
            if j + 1 == depth {
                // last layer: scaled blocks side by side, scaled biases summed
                let mut col = 0;
                for (h, net) in terms {
                    let src = &net.layers[j];
                    layer.weight.slice_mut(s![.., col..col + src.in_dim()]).assign(&(&src.weight * *h));
                    layer.bias.scaled_add(*h, &src.bias);
                    col += src.in_dim();
                }
            } else {
                let mut row = 0;
                let mut col = 0;
                for (_, net) in terms {
                    let src = &net.layers[j];
                    let (r, c) = (src.out_dim(), src.in_dim());
                    // first layer stacks vertically, hidden layers go block-diagonal
                    let cols = if j == 0 { 0..c } else { col..col + c };
                    layer.weight.slice_mut(s![row..row + r, cols]).assign(&src.weight);
                    layer.bias.slice_mut(s![row..row + r]).assign(&src.bias);
                    row += r;
                    col += c;
                }
            }
            layers.push(layer);
        }
        let net = Self::new(layers)?;
        debug_assert_eq!(net.dims, dims);
        Ok(net)
    }

    /// Same realization with exactly `target_layers` layers. Padding by
    /// `k >= 2` layers composes with `identity(k - 1)`; padding by one layer
    /// uses the composition glue alone.
    pub fn extend_depth(&self, target_layers: usize) -> Result<Self> {
        let current = self.layer_count();
        if target_layers < current {
            return Err(Error::InvalidArgument(format!(
                "cannot shrink a network from {current} to {target_layers} layers"
            )));
        }
        let extra = target_layers - current;
        match extra {
            0 => Ok(self.clone()),
            1 => {
                let q = self.output_dim();
                let (out, rest) = self.layers.split_last().expect("at least two layers");
                let eye = Array2::<f64>::eye(q);
                let mut layers = rest.to_vec();
                layers.push(Layer::new(
                    ndarray::concatenate![Axis(0), out.weight, -&out.weight],
                    ndarray::concatenate![Axis(0), out.bias, -&out.bias],
                )?);
                layers.push(Layer::new(ndarray::concatenate![Axis(1), eye, -&eye], Array1::zeros(q))?);
                Self::new(layers)
            }
            k => Self::identity_chain(self.output_dim(), k - 1)?.compose(self),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&NetworkFile::from(self)).expect("network serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&NetworkFile::from(self)).expect("network serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        file.try_into()
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// On-disk layout: `{"dims": [...], "layers": [{"w": [[...]], "b": [...]}]}`
/// with row-major weights.
#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkFile {
    pub dims: Vec<usize>,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerFile {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl From<&Network> for NetworkFile {
    fn from(net: &Network) -> Self {
        Self {
            dims: net.dims.as_slice().to_vec(),
            layers: net
                .layers
                .iter()
                .map(|l| LayerFile {
                    w: l.weight.outer_iter().map(|r| r.to_vec()).collect(),
                    b: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<NetworkFile> for Network {
    type Error = Error;

    fn try_from(file: NetworkFile) -> Result<Self> {
        let net = Network::from_rows(file.layers.into_iter().map(|l| (l.w, l.b)).collect())
            .map_err(|e| Error::Format(e.to_string()))?;
        if net.dims.as_slice() != file.dims.as_slice() {
            return Err(Error::Format(format!(
                "declared dims {:?} do not match layer shapes {}",
                file.dims, net.dims
            )));
        }
        Ok(net)
    }
}
