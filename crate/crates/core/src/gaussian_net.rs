//! Dense leaky-ReLU networks with a softmax head, addressed through one flat
//! weight vector, with hand-written reverse-mode gradients of the bounded
//! cross-entropy loss.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default `Z` of the bounded cross-entropy loss.
pub const BOUNDED_CE_Z: f64 = 4.0;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    /// Input width, hidden widths, number of classes.
    pub widths: Vec<usize>,
    pub leaky_slope: f64,
}

impl MlpArchitecture {
    pub fn new(widths: Vec<usize>, leaky_slope: f64) -> Result<Self> {
        if widths.len() < 3 {
            return Err(invalid("widths", "need input, at least one hidden layer, and output"));
        }
        if widths.contains(&0) {
            return Err(invalid("widths", "layer widths must be positive"));
        }
        if *widths.last().unwrap() < 2 {
            return Err(invalid("widths", "need at least two classes"));
        }
        if !leaky_slope.is_finite() {
            return Err(invalid("leaky_slope", "must be finite"));
        }
        Ok(Self { widths, leaky_slope })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Total parameter count `d`. Each layer stores its `out x in` weight
    /// matrix row-major, followed by its `out` biases.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_layers());
        let mut off = 0;
        for w in self.widths.windows(2) {
            out.push(off);
            off += w[1] * w[0] + w[1];
        }
        out
    }

    fn act(&self, z: f64) -> f64 {
        if z > 0.0 {
            z
        } else {
            self.leaky_slope * z
        }
    }

    fn act_grad(&self, z: f64) -> f64 {
        if z > 0.0 {
            1.0
        } else {
            self.leaky_slope
        }
    }
}

/// A point in weight space `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlatWeights(pub Vec<f64>);

impl FlatWeights {
    pub fn new(arch: &MlpArchitecture, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.param_count() {
            return Err(Error::DimensionMismatch { expected: arch.param_count(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight vector".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(arch: &MlpArchitecture) -> Self {
        Self(vec![0.0; arch.param_count()])
    }

    /// He-scaled Gaussian weights and zero biases.
    pub fn init(arch: &MlpArchitecture, seed: u64) -> Self {
        let mut rng = stream_rng(seed, Phase::Init, 0, 0);
        let mut v = Vec::with_capacity(arch.param_count());
        for w in arch.widths.windows(2) {
            let scale = (2.0 / w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] {
                v.push(scale * rng.sample::<f64, _>(StandardNormal));
            }
            v.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Named RNG phases. Each `(seed, phase, epoch, step)` key selects an
/// independent ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Phase {
    Init = 0,
    Prior = 1,
    Posterior = 2,
    Evaluation = 3,
    Shuffle = 4,
    Data = 5,
}

/// Counter-based stream for `(seed, phase, epoch, step)`.
pub fn stream_rng(seed: u64, phase: Phase, epoch: u32, step: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 8 bits of phase, 24 of epoch, 32 of step.
    let stream = ((phase as u64) << 56) | ((epoch as u64 & 0xFF_FFFF) << 32) | step as u64;
    rng.set_stream(stream);
    rng
}

/// Draws `eps ~ N(0, sigma2 I)` and returns `(mean + eps, eps)`.
pub fn sample_weights<R: Rng + ?Sized>(mean: &FlatWeights, sigma2: f64, rng: &mut R) -> Result<(FlatWeights, FlatWeights)> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(invalid("sigma2", format!("{sigma2} must be positive and finite")));
    }
    let s = sigma2.sqrt();
    let eps: Vec<f64> = (0..mean.len()).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect();
    let h = mean.0.iter().zip(&eps).map(|(a, b)| a + b).collect();
    Ok((FlatWeights(h), FlatWeights(eps)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Prior,
    Posterior,
    Test,
    Full,
}

/// Labeled examples. `ids` identify rows of the source dataset, so splits
/// taken from one source can be checked for overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    /// Class indices in `0..n_classes`.
    pub labels: Vec<usize>,
    pub ids: Vec<usize>,
    pub n_classes: usize,
    pub split: Split,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Dataset(format!("{} feature rows but {} labels", features.len(), labels.len())));
        }
        if let Some(first) = features.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::Dataset("rows have no features".into()));
            }
            for (i, row) in features.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::Dataset(format!("row {i} has {} features, expected {d}", row.len())));
                }
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Dataset(format!("row {i} has a non-finite feature")));
                }
            }
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= n_classes) {
            return Err(Error::Dataset(format!("row {i} has label {y}, expected < {n_classes}")));
        }
        let ids = (0..labels.len()).collect();
        Ok(Self { features, labels, ids, n_classes, split: Split::Full })
    }

    /// Reads a CSV whose last column is an integer class index (0-based)
    /// and whose other columns are features. A non-numeric first row is
    /// treated as a header.
    pub fn from_csv(path: &Path, n_classes: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
            if rec.len() < 2 {
                return Err(Error::Dataset(format!("{}: line {} needs features and a label", path.display(), line + 1)));
            }
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().take(rec.len() - 1).map(str::parse).collect();
            let label = rec[rec.len() - 1].parse::<usize>();
            match (parsed, label) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::Dataset(format!(
                        "{}: line {} is not numeric features followed by an integer label",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        if xs.is_empty() {
            return Err(Error::Dataset(format!("{}: no rows", path.display())));
        }
        let k = n_classes.unwrap_or_else(|| ys.iter().max().map_or(0, |m| m + 1));
        Self::new(xs, ys, k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Rows at `idx`, tagged with `split`.
    pub fn subset(&self, idx: &[usize], split: Split) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
            n_classes: self.n_classes,
            split,
        }
    }

    /// Shuffles rows and cuts them into prior, posterior and test parts of
    /// the given sizes.
    pub fn split_three(&self, n_prior: usize, n_posterior: usize, n_test: usize, seed: u64) -> Result<[Self; 3]> {
        if n_prior + n_posterior + n_test > self.len() {
            return Err(Error::Dataset(format!(
                "requested {} rows but the dataset has {}",
                n_prior + n_posterior + n_test,
                self.len()
            )));
        }
        if n_prior == 0 || n_posterior == 0 || n_test == 0 {
            return Err(Error::Dataset("every split needs at least one row".into()));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut stream_rng(seed, Phase::Data, 0, 0));
        let (a, rest) = idx.split_at(n_prior);
        let (b, rest) = rest.split_at(n_posterior);
        let c = &rest[..n_test];
        Ok([self.subset(a, Split::Prior), self.subset(b, Split::Posterior), self.subset(c, Split::Test)])
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        let mine: HashSet<usize> = self.ids.iter().copied().collect();
        other.ids.iter().all(|i| !mine.contains(i))
    }
}

/// Two interleaved half circles with Gaussian jitter, two classes.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    let mut rng = stream_rng(seed, Phase::Data, 1, 0);
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let y = i % 2;
        let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let (x0, x1) = if y == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        xs.push(vec![x0 + noise * e0, x1 + noise * e1]);
        ys.push(y);
    }
    LabeledDataset::new(xs, ys, 2)
}

/// Isotropic Gaussian blobs with unit spread. Class centers are drawn
/// uniformly on a sphere of radius `separation / 2`.
pub fn blobs(n: usize, dim: usize, n_classes: usize, separation: f64, seed: u64) -> Result<LabeledDataset> {
    if dim == 0 || n_classes < 2 {
        return Err(Error::Dataset("blobs need dim >= 1 and at least two classes".into()));
    }
    let mut rng = stream_rng(seed, Phase::Data, 2, 0);
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| 0.5 * separation * x / norm).collect()
        })
        .collect();
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let y = i % n_classes;
        xs.push(centers[y].iter().map(|c| c + rng.sample::<f64, _>(StandardNormal)).collect());
        ys.push(y);
    }
    LabeledDataset::new(xs, ys, n_classes)
}

struct Trace {
    /// Pre-activations per layer.
    pre: Vec<Vec<f64>>,
    /// Activations per layer, `acts[0]` being the input.
    acts: Vec<Vec<f64>>,
}

fn check_dims(arch: &MlpArchitecture, w: &FlatWeights, x: &[f64]) -> Result<()> {
    if w.len() != arch.param_count() {
        return Err(Error::DimensionMismatch { expected: arch.param_count(), got: w.len() });
    }
    if x.len() != arch.input_dim() {
        return Err(Error::DimensionMismatch { expected: arch.input_dim(), got: x.len() });
    }
    Ok(())
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn run(arch: &MlpArchitecture, w: &[f64], offsets: &[usize], x: &[f64]) -> Trace {
    let n = arch.n_layers();
    let mut pre = Vec::with_capacity(n);
    let mut acts = Vec::with_capacity(n + 1);
    acts.push(x.to_vec());
    for l in 0..n {
        let (fan_in, fan_out) = (arch.widths[l], arch.widths[l + 1]);
        let mat = &w[offsets[l]..offsets[l] + fan_in * fan_out];
        let bias = &w[offsets[l] + fan_in * fan_out..offsets[l] + fan_in * fan_out + fan_out];
        let input = &acts[l];
        let z: Vec<f64> = (0..fan_out)
            .map(|o| bias[o] + mat[o * fan_in..(o + 1) * fan_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let a = if l + 1 == n { softmax(&z) } else { z.iter().map(|&v| arch.act(v)).collect() };
        pre.push(z);
        acts.push(a);
    }
    Trace { pre, acts }
}

/// Class probabilities of the network at `x`.
pub fn forward(arch: &MlpArchitecture, w: &FlatWeights, x: &[f64]) -> Result<Vec<f64>> {
    check_dims(arch, w, x)?;
    Ok(run(arch, &w.0, &arch.offsets(), x).acts.pop().unwrap())
}

/// `-(1/z) ln(e^{-z} + (1 - 2e^{-z}) p_y)`.
pub fn bounded_ce_loss_z(probs: &[f64], y: usize, z: f64) -> f64 {
    let e = (-z).exp();
    (-(e + (1.0 - 2.0 * e) * probs[y]).ln() / z).clamp(0.0, 1.0)
}

/// Bounded cross-entropy with `Z = 4`; `probs[y]` is the softmax
/// probability of the true class.
pub fn bounded_ce_loss(probs: &[f64], y: usize) -> f64 {
    bounded_ce_loss_z(probs, y, BOUNDED_CE_Z)
}

/// Mean bounded cross-entropy over `idx` and its gradient with respect to
/// the weights.
pub fn loss_and_grad(arch: &MlpArchitecture, w: &FlatWeights, data: &LabeledDataset, idx: &[usize]) -> Result<(f64, FlatWeights)> {
    if idx.is_empty() {
        return Err(invalid("batch", "must be nonempty"));
    }
    if w.len() != arch.param_count() {
        return Err(Error::DimensionMismatch { expected: arch.param_count(), got: w.len() });
    }
    let offsets = arch.offsets();
    let n = arch.n_layers();
    let e = (-BOUNDED_CE_Z).exp();
    let scale = 1.0 / idx.len() as f64;
    let mut grad = vec![0.0; w.len()];
    let mut loss = 0.0;
    for &i in idx {
        let x = &data.features[i];
        let y = data.labels[i];
        check_dims(arch, w, x)?;
        let t = run(arch, &w.0, &offsets, x);
        let p = &t.acts[n];
        let phi = e + (1.0 - 2.0 * e) * p[y];
        loss += -phi.ln() / BOUNDED_CE_Z;
        // d loss / d p_y, then through the softmax.
        let g = -(1.0 - 2.0 * e) / (BOUNDED_CE_Z * phi);
        let mut delta: Vec<f64> = (0..p.len())
            .map(|k| g * p[y] * (if k == y { 1.0 } else { 0.0 } - p[k]))
            .collect();
        for l in (0..n).rev() {
            let (fan_in, fan_out) = (arch.widths[l], arch.widths[l + 1]);
            let input = &t.acts[l];
            let base = offsets[l];
            for o in 0..fan_out {
                let d = delta[o] * scale;
                let row = &mut grad[base + o * fan_in..base + (o + 1) * fan_in];
                for (gi, a) in row.iter_mut().zip(input) {
                    *gi += d * a;
                }
                grad[base + fan_in * fan_out + o] += d;
            }
            if l > 0 {
                let mat = &w.0[base..base + fan_in * fan_out];
                let mut prev = vec![0.0; fan_in];
                for o in 0..fan_out {
                    for (j, pv) in prev.iter_mut().enumerate() {
                        *pv += mat[o * fan_in + j] * delta[o];
                    }
                }
                for (j, pv) in prev.iter_mut().enumerate() {
                    *pv *= arch.act_grad(t.pre[l - 1][j]);
                }
                delta = prev;
            }
        }
    }
    Ok((loss * scale, FlatWeights(grad)))
}

/// Gradient of the mean bounded cross-entropy over `idx`.
pub fn backward(arch: &MlpArchitecture, w: &FlatWeights, data: &LabeledDataset, idx: &[usize]) -> Result<FlatWeights> {
    Ok(loss_and_grad(arch, w, data, idx)?.1)
}

/// Index of the largest probability, ties to the smallest index.
pub fn predict(probs: &[f64]) -> usize {
    let mut best = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = k;
        }
    }
    best
}

/// `(zero-one risk, bounded cross-entropy risk)` over the dataset.
pub fn risks(arch: &MlpArchitecture, w: &FlatWeights, data: &LabeledDataset) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Dataset("cannot compute risks on an empty dataset".into()));
    }
    let offsets = arch.offsets();
    let (mut zo, mut ce) = (0.0, 0.0);
    for (x, &y) in data.features.iter().zip(&data.labels) {
        check_dims(arch, w, x)?;
        let p = run(arch, &w.0, &offsets, x).acts.pop().unwrap();
        if predict(&p) != y {
            zo += 1.0;
        }
        ce += bounded_ce_loss(&p, y);
    }
    let n = data.len() as f64;
    Ok(((zo / n).clamp(0.0, 1.0), (ce / n).clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn arch(w: &[usize]) -> MlpArchitecture {
        MlpArchitecture::new(w.to_vec(), DEFAULT_LEAKY_SLOPE).unwrap()
    }

    fn random_weights(a: &MlpArchitecture, seed: u64) -> FlatWeights {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FlatWeights((0..a.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn architecture_validation() {
        assert!(MlpArchitecture::new(vec![2, 2], 0.01).is_err());
        assert!(MlpArchitecture::new(vec![2, 3, 1], 0.01).is_err());
        assert!(MlpArchitecture::new(vec![2, 0, 2], 0.01).is_err());
        assert_eq!(arch(&[2, 3, 2]).param_count(), 2 * 3 + 3 + 3 * 2 + 2);
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let a = arch(&[3, 5, 4]);
        let p = forward(&a, &FlatWeights::zeros(&a), &[0.3, -1.0, 2.0]).unwrap();
        for v in p {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn forward_matches_straight_line_recomputation() {
        // 2-4-2 net; weights written out by layer.
        let a = arch(&[2, 4, 2]);
        let w = random_weights(&a, 4);
        let v = &w.0;
        let x = [0.7, -1.3];
        let mut h = [0.0; 4];
        for o in 0..4 {
            let z = v[o * 2] * x[0] + v[o * 2 + 1] * x[1] + v[8 + o];
            h[o] = if z > 0.0 { z } else { 0.01 * z };
        }
        let mut z = [0.0; 2];
        for o in 0..2 {
            z[o] = v[12 + 8 + o] + (0..4).map(|j| v[12 + o * 4 + j] * h[j]).sum::<f64>();
        }
        let e0 = z[0].exp();
        let e1 = z[1].exp();
        let p = forward(&a, &w, &x).unwrap();
        assert_abs_diff_eq!(p[0], e0 / (e0 + e1), epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], e1 / (e0 + e1), epsilon = 1e-12);
        assert!(forward(&a, &w, &[1.0]).is_err());
    }

    #[test]
    fn bounded_ce_values() {
        assert_abs_diff_eq!(bounded_ce_loss(&[1.0, 0.0], 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bounded_ce_loss(&[1.0, 0.0], 0), 0.004_621_361_706_471_62, epsilon = 1e-15);
        let mut last = f64::INFINITY;
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let l = bounded_ce_loss(&[p, 1.0 - p], 0);
            assert!(l < last && (0.0..=1.0).contains(&l));
            last = l;
        }
    }

    fn toy_data() -> LabeledDataset {
        LabeledDataset::new(
            vec![vec![0.5, -0.2], vec![-1.0, 0.4], vec![0.3, 0.9], vec![-0.6, -0.7]],
            vec![0, 1, 1, 0],
            2,
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_at_symmetric_point() {
        let a = arch(&[2, 3, 2]);
        let g = backward(&a, &FlatWeights::zeros(&a), &toy_data(), &[0, 1, 2, 3]).unwrap();
        assert!(g.0.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let a = arch(&[2, 3, 2]);
        let data = toy_data();
        let idx = [0, 1, 2, 3];
        for seed in 0..5 {
            let w = random_weights(&a, seed);
            let g = backward(&a, &w, &data, &idx).unwrap();
            let h = 1e-5;
            for i in 0..w.len() {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp.0[i] += h;
                wm.0[i] -= h;
                let fp = loss_and_grad(&a, &wp, &data, &idx).unwrap().0;
                let fm = loss_and_grad(&a, &wm, &data, &idx).unwrap().0;
                let fd = (fp - fm) / (2.0 * h);
                let rel = (g.0[i] - fd).abs() / g.0[i].abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-4, "coord {i}: {} vs {fd}", g.0[i]);
            }
        }
    }

    #[test]
    fn gradient_is_linear_in_batch() {
        let a = arch(&[2, 3, 2]);
        let w = random_weights(&a, 2);
        let data = toy_data();
        let full = backward(&a, &w, &data, &[0, 1, 2, 3]).unwrap();
        let mut sum = vec![0.0; w.len()];
        for i in 0..4 {
            for (s, g) in sum.iter_mut().zip(backward(&a, &w, &data, &[i]).unwrap().0) {
                *s += g / 4.0;
            }
        }
        for (x, y) in full.0.iter().zip(&sum) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_moments_and_determinism() {
        let mean = FlatWeights(vec![0.5; 4]);
        let s2 = 0.04;
        let mut rng = stream_rng(3, Phase::Posterior, 0, 0);
        let n = 100_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let (h, e) = sample_weights(&mean, s2, &mut rng).unwrap();
            assert_abs_diff_eq!(h.0[1] - e.0[1], 0.5, epsilon = 1e-15);
            acc += e.0[0] * e.0[0];
            acc2 += e.0[0].powi(4);
        }
        let var = acc / n as f64;
        let se = ((acc2 / n as f64 - var * var) / n as f64).sqrt();
        assert!((var - s2).abs() < 3.0 * se);
        let a = sample_weights(&mean, s2, &mut stream_rng(1, Phase::Prior, 2, 3)).unwrap();
        let b = sample_weights(&mean, s2, &mut stream_rng(1, Phase::Prior, 2, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_weights(&mean, s2, &mut stream_rng(1, Phase::Prior, 2, 4)).unwrap();
        assert_ne!(a, c);
        let (tiny, _) = sample_weights(&mean, 1e-30, &mut rng).unwrap();
        assert!(tiny.0.iter().all(|v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn risks_cases() {
        let a = arch(&[2, 3, 2]);
        let data = toy_data();
        // Constant prediction (class 0) on balanced data.
        let (zo, ce) = risks(&a, &FlatWeights::zeros(&a), &data).unwrap();
        assert_eq!(zo, 0.5);
        assert!((0.0..=1.0).contains(&ce));
        // Hand-set weights that separate two points.
        let sep = LabeledDataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0, 1], 2).unwrap();
        let mut w = FlatWeights::zeros(&a);
        w.0[0] = 1.0; // hidden 0 <- x0
        w.0[9] = 5.0; // logit 0 <- hidden 0
        w.0[12] = -5.0; // logit 1 <- hidden 0
        assert_eq!(risks(&a, &w, &sep).unwrap().0, 0.0);
    }

    #[test]
    fn splits_are_disjoint() {
        let d = blobs(300, 4, 2, 4.0, 1).unwrap();
        let [p, s, t] = d.split_three(100, 120, 80, 5).unwrap();
        assert!(p.is_disjoint_from(&s) && p.is_disjoint_from(&t) && s.is_disjoint_from(&t));
        assert_eq!((p.len(), s.len(), t.len()), (100, 120, 80));
        assert_eq!(p.split, Split::Prior);
        assert!(d.split_three(200, 120, 80, 5).is_err());
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(two_moons(50, 0.1, 3).unwrap(), two_moons(50, 0.1, 3).unwrap());
        assert_ne!(two_moons(50, 0.1, 3).unwrap(), two_moons(50, 0.1, 4).unwrap());
        let b = blobs(40, 3, 4, 6.0, 2).unwrap();
        assert_eq!(b.n_classes, 4);
        assert_eq!(b.dim(), 3);
    }

    #[test]
    fn csv_loading() {
        let dir = std::env::temp_dir().join(format!("dispac-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let ok = dir.join("ok.csv");
        std::fs::write(&ok, "x0,x1,label\n0.5,1.0,1\n-0.5,2.0,0\n").unwrap();
        let d = LabeledDataset::from_csv(&ok, None).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.labels, vec![1, 0]);
        let bad = dir.join("bad.csv");
        std::fs::write(&bad, "0.5,1.0,1\n-0.5,abc,0\n").unwrap();
        assert!(matches!(LabeledDataset::from_csv(&bad, None), Err(Error::Dataset(_))));
        let ragged = dir.join("ragged.csv");
        std::fs::write(&ragged, "0.5,1.0,1\n-0.5,0\n").unwrap();
        assert!(LabeledDataset::from_csv(&ragged, None).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    proptest! {
        #[test]
        fn prop_probabilities_normalized(seed in 0u64..1000, x0 in -5.0f64..5.0, x1 in -5.0f64..5.0) {
            let a = arch(&[2, 6, 3]);
            let w = random_weights(&a, seed);
            let p = forward(&a, &w, &[x0, x1]).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
