use rand::seq::SliceRandom;
use rand::Rng;

use super::{dot, sigmoid, Layer, ModelKind, ModelSpec, TrainedModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::seed;

/// Fits `spec` on `data`. Deterministic in `(spec, data)`.
pub fn train(spec: &ModelSpec, data: &Dataset) -> Result<TrainedModel> {
    spec.validate()?;
    if data.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    if !data.has_both_classes() {
        return Err(Error::Training(
            "training data contains a single class".into(),
        ));
    }
    let layers = match spec.kind {
        ModelKind::LogisticRegression => vec![fit_linear(spec, data, logistic_loss)?],
        ModelKind::LinearSvm => vec![fit_linear(spec, data, hinge_loss)?],
        ModelKind::Mlp => fit_mlp(spec, data)?,
    };
    TrainedModel::from_layers(spec.clone(), data.schema().clone(), layers)
}

/// Loss and its derivative with respect to the score, given the margin `y*z`.
type MarginLoss = fn(f64) -> (f64, f64);

fn logistic_loss(margin: f64) -> (f64, f64) {
    (softplus(-margin), -sigmoid(-margin))
}

fn hinge_loss(margin: f64) -> (f64, f64) {
    if margin < 1.0 {
        (1.0 - margin, -1.0)
    } else {
        (0.0, 0.0)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Full-batch (sub)gradient descent on mean loss + l2/2 |w|^2.
fn fit_linear(spec: &ModelSpec, data: &Dataset, loss: MarginLoss) -> Result<Layer> {
    let d = data.n_features();
    let n = data.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut grad_w = vec![0.0; d];
    for epoch in 0..spec.epochs {
        grad_w
            .iter_mut()
            .zip(&w)
            .for_each(|(g, wi)| *g = spec.l2_penalty * wi);
        let mut grad_b = 0.0;
        let mut total = 0.5 * spec.l2_penalty * dot(&w, &w);
        for (x, label) in data.rows().zip(data.labels()) {
            let y = label.sign();
            let (l, dl) = loss(y * (dot(&w, x) + b));
            total += l / n;
            if dl != 0.0 {
                let coef = dl * y / n;
                grad_w.iter_mut().zip(x).for_each(|(g, xi)| *g += coef * xi);
                grad_b += coef;
            }
        }
        if !total.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let lr = match spec.kind {
            ModelKind::LinearSvm => spec.learning_rate / ((epoch + 1) as f64).sqrt(),
            _ => spec.learning_rate,
        };
        w.iter_mut().zip(&grad_w).for_each(|(wi, g)| *wi -= lr * g);
        b -= lr * grad_b;
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::Divergence { epoch: spec.epochs });
    }
    Ok(Layer {
        inputs: d,
        outputs: 1,
        weights: w,
        bias: vec![b],
    })
}

/// ReLU network with a single logit output, trained on logistic loss with
/// Adam over seeded mini-batches.
fn fit_mlp(spec: &ModelSpec, data: &Dataset) -> Result<Vec<Layer>> {
    let mut rng = seed::rng(spec.seed);
    let mut widths = vec![data.n_features()];
    widths.extend(&spec.hidden_layers);
    widths.push(1);

    let mut layers: Vec<Layer> = widths
        .windows(2)
        .map(|w| {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let mut layer = Layer::zeros(w[0], w[1]);
            for p in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *p = rng.random_range(-bound..bound);
            }
            layer
        })
        .collect();
    let mut grads: Vec<Layer> = layers
        .iter()
        .map(|l| Layer::zeros(l.inputs, l.outputs))
        .collect();
    let n_params = layers.iter().map(|l| l.weights.len() + l.bias.len()).sum();
    let mut adam = Adam::new(n_params);

    // activations[k] is the input to layer k; pre[k] its pre-activation
    let mut activations: Vec<Vec<f64>> = widths.iter().map(|w| vec![0.0; *w]).collect();
    let mut pre: Vec<Vec<f64>> = widths[1..].iter().map(|w| vec![0.0; *w]).collect();
    let mut deltas: Vec<Vec<f64>> = widths[1..].iter().map(|w| vec![0.0; *w]).collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let last = layers.len() - 1;
    for epoch in 0..spec.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(spec.batch_size) {
            for g in &mut grads {
                g.weights.iter_mut().for_each(|v| *v = 0.0);
                g.bias.iter_mut().for_each(|v| *v = 0.0);
            }
            for &i in batch {
                activations[0].copy_from_slice(data.row(i));
                for (k, layer) in layers.iter().enumerate() {
                    for (o, z) in pre[k].iter_mut().enumerate() {
                        *z = dot(layer.row(o), &activations[k]) + layer.bias[o];
                    }
                    if k < last {
                        for (a, z) in activations[k + 1].iter_mut().zip(&pre[k]) {
                            *a = z.max(0.0);
                        }
                    }
                }
                let y = data.label(i).sign();
                let (loss, dl) = logistic_loss(y * pre[last][0]);
                epoch_loss += loss;
                deltas[last][0] = dl * y;
                for k in (0..layers.len()).rev() {
                    let layer = &layers[k];
                    let g = &mut grads[k];
                    for (o, &delta) in deltas[k].iter().enumerate() {
                        g.bias[o] += delta;
                        let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        row.iter_mut()
                            .zip(&activations[k])
                            .for_each(|(gw, a)| *gw += delta * a);
                    }
                    if k > 0 {
                        let (lower, upper) = deltas.split_at_mut(k);
                        let prev = &mut lower[k - 1];
                        for (j, p) in prev.iter_mut().enumerate() {
                            if pre[k - 1][j] <= 0.0 {
                                *p = 0.0;
                                continue;
                            }
                            *p = (0..layer.outputs)
                                .map(|o| layer.weights[o * layer.inputs + j] * upper[0][o])
                                .sum();
                        }
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for (g, l) in grads.iter_mut().zip(&layers) {
                g.weights
                    .iter_mut()
                    .zip(&l.weights)
                    .for_each(|(gw, w)| *gw = *gw * scale + spec.l2_penalty * w);
                g.bias.iter_mut().for_each(|gb| *gb *= scale);
            }
            let mut params: Vec<&mut [f64]> = Vec::with_capacity(2 * layers.len());
            for l in layers.iter_mut() {
                params.push(&mut l.weights);
                params.push(&mut l.bias);
            }
            let grad_refs: Vec<&[f64]> = grads
                .iter()
                .flat_map(|g| [g.weights.as_slice(), g.bias.as_slice()])
                .collect();
            adam.step_blocks(&mut params, &grad_refs, spec.learning_rate);
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok(layers)
}
