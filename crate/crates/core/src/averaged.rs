/// Dense weight vector that also tracks the average of its post-step
/// snapshots, updated lazily so each step costs only the touched coordinates.
#[derive(Debug, Clone)]
pub struct AveragedWeights {
    weights: Vec<f64>,
    totals: Vec<f64>,
    /// Snapshots already folded into `totals`, per coordinate.
    stamps: Vec<u64>,
    step: u64,
}

impl AveragedWeights {
    pub fn new(initial: Vec<f64>) -> Self {
        let n = initial.len();
        Self {
            weights: initial,
            totals: vec![0.0; n],
            stamps: vec![0; n],
            step: 0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Starts a new step; updates made before the next call belong to it.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    pub fn add(&mut self, i: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let done = self.step.saturating_sub(1);
        self.totals[i] += self.weights[i] * (done - self.stamps[i]) as f64;
        self.stamps[i] = done;
        self.weights[i] += delta;
    }

    /// Mean of the weight vector over all completed steps. With no steps the
    /// current weights are returned.
    pub fn average(&self) -> Vec<f64> {
        if self.step == 0 {
            return self.weights.clone();
        }
        let t = self.step;
        self.weights
            .iter()
            .zip(&self.totals)
            .zip(&self.stamps)
            .map(|((w, total), stamp)| (total + w * (t - stamp) as f64) / t as f64)
            .collect()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}
