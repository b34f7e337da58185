/// Adam with the usual decay constants and bias correction.
pub(crate) struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    pub(crate) fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One update over parameter blocks laid out in the same order as at
    /// construction.
    pub(crate) fn step_blocks(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let mut k = 0;
        for (p, g) in params.iter_mut().zip(grads) {
            for (pi, gi) in p.iter_mut().zip(g.iter()) {
                self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * gi;
                self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * gi * gi;
                *pi -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + EPS);
                k += 1;
            }
        }
    }

    pub(crate) fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step_blocks(&mut [params], &[grad], lr);
    }
}
