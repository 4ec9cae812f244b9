//! Layered networks with named piecewise-linear activations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{FtcError, Result};
use crate::instance::FineTuneInstance;
use crate::pwl::{Activation, Pwl1D};
use crate::scalar::{dot, Scalar};

/// One hidden layer: `post = act(W·prev + b)` neuron by neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<S: Scalar> {
    pub weights: Vec<Vec<S>>,
    pub biases: Vec<S>,
    pub activations: Vec<Activation<S>>,
}

impl<S: Scalar> Layer<S> {
    pub fn width(&self) -> usize {
        self.biases.len()
    }

    pub fn relu_width(&self) -> usize {
        self.activations.iter().map(Activation::relu_count).sum()
    }

    pub fn push(&mut self, row: Vec<S>, bias: S, act: Activation<S>) {
        self.weights.push(row);
        self.biases.push(bias);
        self.activations.push(act);
    }

    pub fn empty() -> Self {
        Self { weights: vec![], biases: vec![], activations: vec![] }
    }
}

/// Scalar-output network `x ↦ wᵀ·h_L(…h_1(x)) + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<S: Scalar> {
    pub input_dim: usize,
    pub layers: Vec<Layer<S>>,
    pub output_weights: Vec<S>,
    pub output_bias: S,
}

/// Preactivations and postactivations of every hidden neuron.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalTrace<S: Scalar> {
    pub pre: Vec<Vec<S>>,
    pub post: Vec<Vec<S>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub max_err_on_t: f64,
    pub max_err_off_t: f64,
    pub tolerance: f64,
    pub numeric: String,
    pub pass: bool,
}

impl<S: Scalar> Network<S> {
    pub fn zero(input_dim: usize) -> Self {
        Self { input_dim, layers: vec![], output_weights: vec![], output_bias: S::zero() }
    }

    pub fn constant(input_dim: usize, c: S) -> Self {
        Self { output_bias: c, ..Self::zero(input_dim) }
    }

    pub fn new(
        input_dim: usize,
        layers: Vec<Layer<S>>,
        output_weights: Vec<S>,
        output_bias: S,
    ) -> Result<Self> {
        let net = Self { input_dim, layers, output_weights, output_bias };
        net.check()?;
        Ok(net)
    }

    pub fn check(&self) -> Result<()> {
        let mut prev = self.input_dim;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = layer.width();
            if layer.weights.len() != w || layer.activations.len() != w {
                return Err(FtcError::InvalidNetwork(format!("layer {l} has ragged parts")));
            }
            for row in &layer.weights {
                if row.len() != prev {
                    return Err(FtcError::DimensionMismatch { expected: prev, found: row.len() });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(FtcError::InvalidNetwork(format!("non-finite weight in layer {l}")));
                }
            }
            for act in &layer.activations {
                act.validate()?;
            }
            prev = w;
        }
        if self.output_weights.len() != prev {
            return Err(FtcError::DimensionMismatch { expected: prev, found: self.output_weights.len() });
        }
        Ok(())
    }

    /// Number of affine maps, so a network with two hidden layers has depth 3.
    pub fn depth(&self) -> usize {
        self.layers.len() + 1
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::width).collect()
    }

    pub fn relu_widths(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::relu_width).collect()
    }

    pub fn max_relu_width(&self) -> usize {
        self.relu_widths().into_iter().max().unwrap_or(0)
    }

    /// ReLU-equivalent neuron count.
    pub fn neuron_count(&self) -> usize {
        self.relu_widths().iter().sum()
    }

    pub fn is_pure_relu(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.activations.iter().all(|a| *a == Activation::Relu))
    }

    pub fn eval(&self, x: &[S]) -> Result<(S, EvalTrace<S>)> {
        if x.len() != self.input_dim {
            return Err(FtcError::DimensionMismatch { expected: self.input_dim, found: x.len() });
        }
        let mut trace = EvalTrace { pre: vec![], post: vec![] };
        let mut h: Vec<S> = x.to_vec();
        for layer in &self.layers {
            let pre: Vec<S> = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(row, b)| dot(row, &h) + b.clone())
                .collect();
            let post: Vec<S> = pre.iter().zip(&layer.activations).map(|(a, act)| act.apply(a)).collect();
            trace.pre.push(pre);
            h = post.clone();
            trace.post.push(post);
        }
        Ok((dot(&self.output_weights, &h) + self.output_bias.clone(), trace))
    }

    pub fn value(&self, x: &[S]) -> Result<S> {
        if x.len() != self.input_dim {
            return Err(FtcError::DimensionMismatch { expected: self.input_dim, found: x.len() });
        }
        let mut h: Vec<S> = x.to_vec();
        for layer in &self.layers {
            h = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .zip(&layer.activations)
                .map(|((row, b), act)| act.apply(&(dot(row, &h) + b.clone())))
                .collect();
        }
        Ok(dot(&self.output_weights, &h) + self.output_bias.clone())
    }

    /// Checks `g(x_i) = z_i` on `T` and `g(x_i) = 0` elsewhere.
    pub fn verify_finetune(&self, inst: &FineTuneInstance, tol: &S) -> Result<VerifyReport> {
        let points = inst.points_as::<S>();
        let errs: Vec<(usize, S)> = points
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let v = self.value(x)?;
                Ok((i, (v - S::from_f64(inst.targets[i])).abs()))
            })
            .collect::<Result<_>>()?;
        let mut on = S::zero();
        let mut off = S::zero();
        for (i, e) in errs {
            let slot = if inst.is_tuned(i + 1) { &mut on } else { &mut off };
            if e > *slot {
                *slot = e;
            }
        }
        Ok(VerifyReport {
            pass: on <= *tol && off <= *tol,
            max_err_on_t: on.as_f64(),
            max_err_off_t: off.as_f64(),
            tolerance: tol.as_f64(),
            numeric: S::MODE.into(),
        })
    }

    /// Replaces every named activation by its ReLU expansion. Expansions that
    /// need a bounded-below domain use the smallest preactivation seen on
    /// `points`, minus one.
    pub fn to_pure_relu(&self, points: &[Vec<S>]) -> Result<Network<S>> {
        let traces: Vec<EvalTrace<S>> = points
            .iter()
            .map(|x| self.eval(x).map(|(_, t)| t))
            .collect::<Result<_>>()?;
        // prev_map[j] = (constant, [(new index, coeff)]) expressing the old
        // postactivation j in terms of the new layer's postactivations.
        type Expansion<S> = Vec<(S, Vec<(usize, S)>)>;
        let mut prev_map: Expansion<S> = (0..self.input_dim)
            .map(|k| (S::zero(), vec![(k, S::one())]))
            .collect();
        let mut prev_width = self.input_dim;
        let mut layers = Vec::with_capacity(self.layers.len());
        let compose = |row: &[S], bias: &S, map: &Expansion<S>, width: usize| {
            let mut eff = vec![S::zero(); width];
            let mut eb = bias.clone();
            for (w, (c, terms)) in row.iter().zip(map) {
                if w.is_zero() {
                    continue;
                }
                if !c.is_zero() {
                    eb = eb + w.clone() * c.clone();
                }
                for (k, coeff) in terms {
                    eff[*k] = eff[*k].clone() + w.clone() * coeff.clone();
                }
            }
            (eff, eb)
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let mut new_layer = Layer::empty();
            let mut map: Expansion<S> = Vec::with_capacity(layer.width());
            for j in 0..layer.width() {
                let low = traces
                    .iter()
                    .map(|t| &t.pre[l][j])
                    .fold(None::<S>, |m, v| match m {
                        Some(m) if m <= *v => Some(m),
                        _ => Some(v.clone()),
                    })
                    .map(|m| m - S::one());
                let dec = layer.activations[j].to_relus(low.as_ref())?;
                let (eff, eb) = compose(&layer.weights[j], &layer.biases[j], &prev_map, prev_width);
                let mut terms = Vec::with_capacity(dec.terms.len());
                for t in &dec.terms {
                    terms.push((new_layer.width(), t.coeff.clone()));
                    new_layer.push(
                        eff.iter().map(|w| t.direction.clone() * w.clone()).collect(),
                        t.direction.clone() * eb.clone() + t.shift.clone(),
                        Activation::Relu,
                    );
                }
                map.push((dec.constant, terms));
            }
            prev_width = new_layer.width();
            prev_map = map;
            layers.push(new_layer);
        }
        let (out_w, out_b) = compose(&self.output_weights, &self.output_bias, &prev_map, prev_width);
        Network::new(self.input_dim, layers, out_w, out_b)
    }

    /// Exact piecewise-linear form of `t ↦ g(origin + t·direction)`.
    pub fn restrict_to_line(&self, direction: &[S], origin: &[S]) -> Result<Pwl1D<S>> {
        if direction.len() != self.input_dim || origin.len() != self.input_dim {
            return Err(FtcError::DimensionMismatch {
                expected: self.input_dim,
                found: direction.len().min(origin.len()),
            });
        }
        let mut h: Vec<Pwl1D<S>> = direction
            .iter()
            .zip(origin)
            .map(|(d, o)| Pwl1D::linear(d.clone(), o.clone()))
            .collect();
        let combine = |row: &[S], bias: &S, h: &[Pwl1D<S>]| {
            let terms: Vec<(S, &Pwl1D<S>)> = row.iter().cloned().zip(h.iter()).collect();
            Pwl1D::weighted_sum(&terms, bias)
        };
        for layer in &self.layers {
            h = layer
                .weights
                .par_iter()
                .zip(&layer.biases)
                .zip(&layer.activations)
                .map(|((row, b), act)| combine(row, b, &h).apply_activation(act))
                .collect();
        }
        Ok(combine(&self.output_weights, &self.output_bias, &h))
    }

    /// Replaces the first layer's input `p` (a single scalar) by `aᵀx`.
    pub fn lift_projection(&self, a: &[S]) -> Result<Network<S>> {
        if self.input_dim != 1 {
            return Err(FtcError::DimensionMismatch { expected: 1, found: self.input_dim });
        }
        let mut net = self.clone();
        net.input_dim = a.len();
        if let Some(first) = net.layers.first_mut() {
            for row in &mut first.weights {
                let w = row[0].clone();
                *row = a.iter().map(|ak| w.clone() * ak.clone()).collect();
            }
        }
        Ok(net)
    }

    /// Network computing `f(x) + g(x)`; the shallower summand is carried
    /// forward through identity neurons.
    pub fn sum_predictor(f: &Network<S>, g: &Network<S>) -> Result<Network<S>> {
        if f.input_dim != g.input_dim {
            return Err(FtcError::DimensionMismatch { expected: f.input_dim, found: g.input_dim });
        }
        let depth = f.layers.len().max(g.layers.len());
        if depth == 0 {
            return Network::new(f.input_dim, vec![], vec![], f.output_bias.clone() + g.output_bias.clone());
        }
        let fp = f.padded_to(depth);
        let gp = g.padded_to(depth);
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let (a, b) = (&fp.layers[l], &gp.layers[l]);
            let (wa, wb) = if l == 0 {
                (0, 0)
            } else {
                (fp.layers[l - 1].width(), gp.layers[l - 1].width())
            };
            let mut layer = Layer::empty();
            for j in 0..a.width() {
                let row = if l == 0 {
                    a.weights[j].clone()
                } else {
                    a.weights[j].iter().cloned().chain(std::iter::repeat_n(S::zero(), wb)).collect()
                };
                layer.push(row, a.biases[j].clone(), a.activations[j].clone());
            }
            for j in 0..b.width() {
                let row = if l == 0 {
                    b.weights[j].clone()
                } else {
                    std::iter::repeat_n(S::zero(), wa).chain(b.weights[j].iter().cloned()).collect()
                };
                layer.push(row, b.biases[j].clone(), b.activations[j].clone());
            }
            layers.push(layer);
        }
        let out: Vec<S> = fp.output_weights.iter().chain(&gp.output_weights).cloned().collect();
        Network::new(f.input_dim, layers, out, fp.output_bias.clone() + gp.output_bias.clone())
    }

    /// Same function with `depth` hidden layers, appending one identity
    /// neuron per missing layer. The identity is exact on all of ℝ.
    fn padded_to(&self, depth: usize) -> Network<S> {
        let mut net = self.clone();
        if net.layers.len() >= depth {
            return net;
        }
        let mut row = net.output_weights.clone();
        let mut bias = net.output_bias.clone();
        if net.layers.is_empty() {
            // A constant: read no input.
            row = vec![S::zero(); net.input_dim];
        }
        while net.layers.len() < depth {
            let mut layer = Layer::empty();
            layer.push(row, bias, Activation::Identity);
            net.layers.push(layer);
            row = vec![S::one()];
            bias = S::zero();
        }
        net.output_weights = vec![S::one()];
        net.output_bias = S::zero();
        net
    }

    /// Re-expresses every parameter in another numeric mode via `f64`.
    pub fn convert<T: Scalar>(&self) -> Network<T> {
        let c = |v: &S| T::from_f64(v.as_f64());
        let act = |a: &Activation<S>| match a {
            Activation::Relu => Activation::Relu,
            Activation::HardTanh => Activation::HardTanh,
            Activation::Identity => Activation::Identity,
            Activation::Bump { center, halfwidth } => Activation::Bump { center: c(center), halfwidth: c(halfwidth) },
            Activation::TailCut { delta } => Activation::TailCut { delta: c(delta) },
            Activation::WindowLinear { delta } => Activation::WindowLinear { delta: c(delta) },
        };
        Network {
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weights: l.weights.iter().map(|r| r.iter().map(c).collect()).collect(),
                    biases: l.biases.iter().map(c).collect(),
                    activations: l.activations.iter().map(act).collect(),
                })
                .collect(),
            output_weights: self.output_weights.iter().map(c).collect(),
            output_bias: c(&self.output_bias),
        }
    }

    /// Largest absolute parameter.
    pub fn max_abs_weight(&self) -> f64 {
        let it = self
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().flatten().chain(&l.biases))
            .chain(&self.output_weights)
            .chain(std::iter::once(&self.output_bias));
        it.map(|v| v.as_f64().abs()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Value {
        let vec = |v: &[S]| v.iter().map(Scalar::to_json).collect::<Vec<_>>();
        let layers: Vec<Value> = self
            .layers
            .iter()
            .map(|l| {
                let mut obj = json!({
                    "W": l.weights.iter().map(|r| vec(r)).collect::<Vec<_>>(),
                    "b": vec(&l.biases),
                });
                let uniform = l.activations.windows(2).all(|w| w[0] == w[1]);
                if uniform && !l.activations.is_empty() {
                    obj["activation"] = l.activations[0].to_json();
                } else {
                    obj["activations"] = l.activations.iter().map(Activation::to_json).collect();
                }
                obj
            })
            .collect();
        json!({
            "input_dim": self.input_dim,
            "layers": layers,
            "output_weights": vec(&self.output_weights),
            "output_bias": self.output_bias.to_json(),
            "neuron_count": self.neuron_count(),
            "numeric": S::MODE,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let err = |m: &str| FtcError::Parse(m.to_string());
        let list = |v: &Value, what: &str| -> Result<Vec<S>> {
            v.as_array()
                .ok_or_else(|| err(&format!("{what} must be an array")))?
                .iter()
                .map(S::from_json)
                .collect()
        };
        let input_dim = v
            .get("input_dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| err("missing input_dim"))? as usize;
        let mut layers = Vec::new();
        for (i, l) in v
            .get("layers")
            .and_then(Value::as_array)
            .ok_or_else(|| err("missing layers"))?
            .iter()
            .enumerate()
        {
            let weights: Vec<Vec<S>> = l
                .get("W")
                .and_then(Value::as_array)
                .ok_or_else(|| err(&format!("layer {i} missing W")))?
                .iter()
                .map(|r| list(r, "W row"))
                .collect::<Result<_>>()?;
            let biases = list(l.get("b").ok_or_else(|| err(&format!("layer {i} missing b")))?, "b")?;
            let activations = if let Some(a) = l.get("activations") {
                a.as_array()
                    .ok_or_else(|| err("activations must be an array"))?
                    .iter()
                    .map(Activation::from_json)
                    .collect::<Result<_>>()?
            } else {
                let a = Activation::from_json(
                    l.get("activation").ok_or_else(|| err(&format!("layer {i} missing activation")))?,
                )?;
                vec![a; biases.len()]
            };
            layers.push(Layer { weights, biases, activations });
        }
        let output_weights = match v.get("output_weights") {
            Some(w) => list(w, "output_weights")?,
            None => vec![S::one(); layers.last().map_or(0, Layer::width)],
        };
        let output_bias = v.get("output_bias").map(S::from_json).transpose()?.unwrap_or_else(S::zero);
        let net = Network::new(input_dim, layers, output_weights, output_bias)?;
        if let Some(count) = v.get("neuron_count").and_then(Value::as_u64) {
            if count as usize != net.neuron_count() {
                return Err(FtcError::InvalidNetwork(format!(
                    "declared neuron_count {count} but activations account for {}",
                    net.neuron_count()
                )));
            }
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn single_relu() -> Network<f64> {
        let layer = Layer { weights: vec![vec![1.0]], biases: vec![0.0], activations: vec![Activation::Relu] };
        Network::new(1, vec![layer], vec![1.0], 0.0).unwrap()
    }

    fn mixed() -> Network<Q> {
        let l1 = Layer {
            weights: vec![vec![q(2, 1), q(-1, 1)], vec![q(1, 3), q(1, 1)], vec![q(-1, 1), q(1, 2)]],
            biases: vec![q(0, 1), q(1, 4), q(-1, 2)],
            activations: vec![
                Activation::HardTanh,
                Activation::Bump { center: q(1, 2), halfwidth: q(1, 4) },
                Activation::Identity,
            ],
        };
        let l2 = Layer {
            weights: vec![vec![q(1, 1), q(2, 1), q(-1, 1)], vec![q(-3, 1), q(1, 1), q(1, 2)]],
            biases: vec![q(1, 5), q(0, 1)],
            activations: vec![Activation::WindowLinear { delta: q(1, 8) }, Activation::TailCut { delta: q(1, 3) }],
        };
        Network::new(2, vec![l1, l2], vec![q(1, 1), q(-2, 1)], q(1, 7)).unwrap()
    }

    fn grid2(n: i64) -> Vec<Vec<Q>> {
        let mut pts = vec![];
        for i in -n..=n {
            for j in -n..=n {
                pts.push(vec![q(i, 3), q(j, 4)]);
            }
        }
        pts
    }

    #[test]
    fn eval_examples() {
        let zero = Network::<f64>::zero(3);
        assert_eq!(zero.value(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let (v, trace) = single_relu().eval(&[-2.0]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(trace.pre, vec![vec![-2.0]]);
        assert_eq!(trace.post, vec![vec![0.0]]);
        assert!(matches!(single_relu().eval(&[1.0, 2.0]), Err(FtcError::DimensionMismatch { .. })));
    }

    #[test]
    fn trace_postactivations_apply_activations() {
        let net = mixed();
        for x in grid2(3) {
            let (_, t) = net.eval(&x).unwrap();
            for (l, layer) in net.layers.iter().enumerate() {
                for j in 0..layer.width() {
                    assert_eq!(t.post[l][j], layer.activations[j].apply(&t.pre[l][j]));
                }
            }
        }
    }

    #[test]
    fn verify_examples() {
        let inst = FineTuneInstance::new(vec![vec![1.0], vec![2.0]], vec![0.0, 0.0], vec![]).unwrap();
        assert!(Network::<f64>::zero(1).verify_finetune(&inst, &1e-8).unwrap().pass);
        let inst = FineTuneInstance::new(vec![vec![1.0], vec![2.0]], vec![0.0, 0.75], vec![2]).unwrap();
        let r = Network::<f64>::zero(1).verify_finetune(&inst, &1e-8).unwrap();
        assert!(!r.pass);
        assert_eq!(r.max_err_on_t, 0.75);
        assert_eq!(r.max_err_off_t, 0.0);
    }

    #[test]
    fn neuron_accounting() {
        let net = mixed();
        assert_eq!(net.relu_widths(), vec![2 + 3 + 1, 4 + 2]);
        assert_eq!(net.neuron_count(), 12);
        assert_eq!(net.depth(), 3);
    }

    #[test]
    fn pure_relu_conversion_is_exact_on_its_points() {
        let net = mixed();
        let pts = grid2(4);
        let relu = net.to_pure_relu(&pts).unwrap();
        assert!(relu.is_pure_relu());
        assert_eq!(relu.neuron_count(), net.neuron_count());
        assert_eq!(relu.widths(), vec![6, 6]);
        for x in &pts {
            assert_eq!(relu.value(x).unwrap(), net.value(x).unwrap());
        }
    }

    #[test]
    fn pure_relu_examples() {
        let ht = Layer {
            weights: vec![vec![1.0]; 3],
            biases: vec![0.0, 1.0, -1.0],
            activations: vec![Activation::HardTanh; 3],
        };
        let net = Network::new(1, vec![ht], vec![1.0, 1.0, 1.0], 0.0).unwrap();
        assert_eq!(net.to_pure_relu(&[vec![0.0]]).unwrap().widths(), vec![6]);
        let wl = Layer {
            weights: vec![vec![1.0]],
            biases: vec![0.0],
            activations: vec![Activation::WindowLinear { delta: 0.25 }],
        };
        let net = Network::new(1, vec![wl], vec![1.0], 0.0).unwrap();
        assert_eq!(net.to_pure_relu(&[vec![0.0]]).unwrap().widths(), vec![4]);
        let relu = single_relu();
        assert_eq!(relu.to_pure_relu(&[vec![0.0]]).unwrap(), relu);
    }

    #[test]
    fn restriction_matches_evaluation() {
        let net = mixed();
        let dir = vec![q(3, 5), q(-1, 2)];
        let origin = vec![q(1, 9), q(1, 3)];
        let p = net.restrict_to_line(&dir, &origin).unwrap();
        for i in -300..=300 {
            let t = q(i, 37);
            let x: Vec<Q> = dir.iter().zip(&origin).map(|(d, o)| o.clone() + t.clone() * d.clone()).collect();
            assert_eq!(p.eval(&t), net.value(&x).unwrap());
        }
        assert_eq!(Network::<Q>::zero(2).restrict_to_line(&dir, &origin).unwrap().piece_count(), 1);
    }

    #[test]
    fn sum_predictor_adds() {
        let f = mixed();
        let mut neg = f.clone();
        neg.output_weights.iter_mut().for_each(|w| *w = -w.clone());
        neg.output_bias = -neg.output_bias;
        let zero = Network::<Q>::zero(2);
        let g = single_relu().convert::<Q>().lift_projection(&[q(1, 1), q(1, 1)]).unwrap();
        let fz = Network::sum_predictor(&f, &zero).unwrap();
        let cancel = Network::sum_predictor(&f, &neg).unwrap();
        let fg = Network::sum_predictor(&f, &g).unwrap();
        for x in grid2(3) {
            let fx = f.value(&x).unwrap();
            assert_eq!(fz.value(&x).unwrap(), fx);
            assert_eq!(cancel.value(&x).unwrap(), q(0, 1));
            assert_eq!(fg.value(&x).unwrap(), fx + g.value(&x).unwrap());
        }
        assert!(Network::sum_predictor(&f, &Network::<Q>::zero(3)).is_err());
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let net = mixed();
        let v = net.to_json();
        assert_eq!(v["neuron_count"], 12);
        assert_eq!(v["numeric"], "rational");
        let back = Network::<Q>::from_json(&v).unwrap();
        assert_eq!(back, net);
        let mut bad = v.clone();
        bad["neuron_count"] = json!(11);
        assert!(Network::<Q>::from_json(&bad).is_err());
        let uniform = single_relu().to_json();
        assert_eq!(uniform["layers"][0]["activation"]["kind"], "relu");
        assert_eq!(Network::<f64>::from_json(&uniform).unwrap(), single_relu());
    }
}
