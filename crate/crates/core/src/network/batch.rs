//! Batched forward/backward passes carrying first spatial derivatives.
//!
//! A block holds `P` points: columns `[0, P)` are values and columns
//! `[(c + 1) P, (c + 2) P)` are derivatives along direction `c`.

use ndarray::{s, Array2, ArrayView2, Axis, Zip};

use super::MlpArchitecture;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentActivations {
    pub points: usize,
    pub dim: usize,
    /// Index of the layer whose input is `blocks[0]`.
    pub start: usize,
    /// `blocks[i]` is the input of layer `start + i`; the last block is the
    /// raw network output.
    pub blocks: Vec<Array2<f64>>,
}

impl TangentActivations {
    pub fn output(&self) -> &Array2<f64> {
        self.blocks.last().unwrap()
    }

    /// Activations entering layer `layer`.
    pub fn input_of(&self, layer: usize) -> &Array2<f64> {
        &self.blocks[layer - self.start]
    }
}

/// Input block for points `x` in `dim` dimensions.
pub fn input_block(x: &[[f64; 3]], dim: usize) -> Array2<f64> {
    let p = x.len();
    let mut h = Array2::zeros((dim, p * (dim + 1)));
    for (j, xj) in x.iter().enumerate() {
        for k in 0..dim {
            h[(k, j)] = xj[k];
            h[(k, (k + 1) * p + j)] = 1.0;
        }
    }
    h
}

fn weights<'a>(arch: &MlpArchitecture, theta: &'a [f64], layer: usize) -> (ArrayView2<'a, f64>, &'a [f64]) {
    let s = arch.layout()[layer];
    let w = ArrayView2::from_shape((s.n_out, s.n_in), &theta[s.weight_range()]).unwrap();
    (w, &theta[s.bias_range()])
}

/// Run layers `start..` on the block `input` (the activations entering `start`).
pub fn tangent_forward(arch: &MlpArchitecture, theta: &[f64], input: Array2<f64>, start: usize, dim: usize) -> TangentActivations {
    let points = input.ncols() / (dim + 1);
    let n_layers = arch.n_layers();
    let mut blocks = vec![input];
    for l in start..n_layers {
        let (w, b) = weights(arch, theta, l);
        let mut z = w.dot(blocks.last().unwrap());
        for (o, mut row) in z.axis_iter_mut(Axis(0)).enumerate() {
            row.slice_mut(s![..points]).mapv_inplace(|v| v + b[o]);
        }
        if l + 1 < n_layers {
            let (mut val, mut tan) = z.view_mut().split_at(Axis(1), points);
            val.mapv_inplace(f64::tanh);
            for c in 0..dim {
                let mut block = tan.slice_mut(s![.., c * points..(c + 1) * points]);
                Zip::from(&mut block).and(&val).for_each(|t, &a| *t *= 1.0 - a * a);
            }
        }
        blocks.push(z);
    }
    TangentActivations { points, dim, start, blocks }
}

/// Accumulate `d(loss)/d(theta)` for layers `acts.start..` into `grad`
/// (full-length layout) given `g_out`, the gradient with respect to the
/// output block.
pub fn tangent_backward(arch: &MlpArchitecture, theta: &[f64], acts: &TangentActivations, g_out: Array2<f64>, grad: &mut [f64]) {
    let p = acts.points;
    let layout = arch.layout();
    let mut g = g_out;
    for l in (acts.start..arch.n_layers()).rev() {
        let s = layout[l];
        let input = acts.input_of(l);
        let dw = g.dot(&input.t());
        for (dst, src) in grad[s.weight_range()].iter_mut().zip(dw.iter()) {
            *dst += src;
        }
        for (o, dst) in grad[s.bias_range()].iter_mut().enumerate() {
            *dst += g.slice(s![o, ..p]).sum();
        }
        if l == acts.start {
            break;
        }
        let (w, _) = weights(arch, theta, l);
        let mut gh = w.t().dot(&g);
        let a = input.slice(s![.., ..p]);
        let mut coupling = Array2::<f64>::zeros((s.n_in, p));
        for c in 0..acts.dim {
            let cols = s![.., (c + 1) * p..(c + 2) * p];
            Zip::from(&mut coupling).and(gh.slice(cols)).and(input.slice(cols)).for_each(|k, &ga, &ac| *k += ga * ac);
            Zip::from(gh.slice_mut(cols)).and(&a).for_each(|ga, &av| *ga *= 1.0 - av * av);
        }
        Zip::from(gh.slice_mut(s![.., ..p])).and(&a).and(&coupling).for_each(|ga, &av, &k| {
            *ga = *ga * (1.0 - av * av) - 2.0 * av * k;
        });
        g = gh;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_params, Dual};
    use crate::network::{forward_with, init_xavier};
    use crate::Scalar;

    fn setup() -> (MlpArchitecture, Vec<f64>, Vec<[f64; 3]>) {
        let arch = MlpArchitecture::new(vec![2, 6, 5, 3]).unwrap();
        let mut theta = init_xavier(&arch, 5).theta.into_values();
        for (i, v) in theta.iter_mut().enumerate() {
            *v += 0.01 * (i as f64).sin();
        }
        let x = vec![[0.1, 0.7, 0.0], [0.5, -0.3, 0.0], [0.9, 0.2, 0.0]];
        (arch, theta, x)
    }

    #[test]
    fn forward_matches_dual_evaluation() {
        let (arch, theta, x) = setup();
        let acts = tangent_forward(&arch, &theta, input_block(&x, 2), 0, 2);
        let out = acts.output();
        for (j, xj) in x.iter().enumerate() {
            let th: Vec<Dual<f64, 2>> = theta.iter().map(|&v| Dual::lift(v)).collect();
            let xs = [Dual::seed(xj[0], 0), Dual::seed(xj[1], 1)];
            let y = forward_with(&arch, &th, &xs);
            for o in 0..3 {
                assert!((out[(o, j)] - y[o].v).abs() < 1e-14);
                for c in 0..2 {
                    assert!((out[(o, (c + 1) * 3 + j)] - y[o].d[c]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn backward_matches_tape() {
        let (arch, theta, x) = setup();
        let weights: Vec<f64> = (0..27).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let loss = |th: &[crate::autodiff::Var]| {
            let mut total = crate::autodiff::Var::constant(0.0);
            for (j, xj) in x.iter().enumerate() {
                let t: Vec<Dual<_, 2>> = th.iter().map(|&v| Dual::lift(v)).collect();
                let xs = [Dual::seed(Scalar::constant(xj[0]), 0), Dual::seed(Scalar::constant(xj[1]), 1)];
                let y = forward_with(&arch, &t, &xs);
                for o in 0..3 {
                    total = total + y[o].v.scale(weights[o * 9 + j]);
                    for c in 0..2 {
                        total = total + y[o].d[c].scale(weights[o * 9 + (c + 1) * 3 + j]);
                    }
                }
            }
            total
        };
        let (_, g_ref) = grad_params(loss, &crate::autodiff::ParamVector::from_values(theta.clone())).unwrap();
        let acts = tangent_forward(&arch, &theta, input_block(&x, 2), 0, 2);
        let g_out = Array2::from_shape_vec((3, 9), weights).unwrap();
        let mut g = vec![0.0; theta.len()];
        tangent_backward(&arch, &theta, &acts, g_out, &mut g);
        for (a, b) in g.iter().zip(g_ref.values()) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn cached_prefix_gives_same_output() {
        let (arch, theta, x) = setup();
        let full = tangent_forward(&arch, &theta, input_block(&x, 2), 0, 2);
        let tail = tangent_forward(&arch, &theta, full.input_of(2).clone(), 2, 2);
        assert_eq!(full.output(), tail.output());
    }
}
