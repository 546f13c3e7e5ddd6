//! False-positive discriminant: an l2-regularized logistic regression over
//! tf-idf rows, and extraction of its heaviest-weighted vocabulary.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{quadrant, write_file, Corpus, Quadrant};
use crate::error::{AuditError, Result};
use crate::textvec::{SparseVector, VectorizerModel};

const MODEL_FORMAT: &str = "kwaudit-fp-model";
const MODEL_VERSION: u32 = 1;

/// 1 for documents the scorer flags as false positives, 0 for TP, FN and TN.
pub fn label_fp_targets(corpus: &Corpus, threshold: f64) -> Result<Vec<bool>> {
    corpus
        .iter()
        .map(|d| quadrant(d, threshold).map(|q| q == Quadrant::FalsePositive))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_iterations: usize,
    /// Stop once the gradient's max-abs entry drops below this.
    pub tolerance: f64,
    /// Balance the two classes by inverse frequency.
    pub class_reweight: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-4,
            max_iterations: 5000,
            tolerance: 1e-6,
            class_reweight: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_loss: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub l2_lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFPModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub training: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: LinearFPModel,
}

impl LinearFPModel {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict_proba(&self, x: &SparseVector) -> f64 {
        sigmoid(self.decision(x))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| AuditError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| AuditError::Serialization(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(AuditError::Serialization(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_json()?.as_bytes())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Rows in compressed sparse row layout.
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: &[SparseVector], dim: usize) -> Result<Self> {
        let nnz = rows.iter().map(SparseVector::nnz).sum();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            if row.indices.len() != row.values.len() {
                return Err(AuditError::DimensionMismatch {
                    expected: row.indices.len(),
                    found: row.values.len(),
                });
            }
            if let Some(&bad) = row.indices.iter().find(|&&i| i >= dim) {
                return Err(AuditError::DimensionMismatch {
                    expected: dim,
                    found: bad + 1,
                });
            }
            cols.extend_from_slice(&row.indices);
            vals.extend_from_slice(&row.values);
            row_ptr.push(cols.len());
        }
        Ok(Self {
            row_ptr,
            cols,
            vals,
        })
    }

    fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// `out[i] = x_i · w + b`
    fn mul(&self, w: &[f64], b: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = b;
            for k in s..e {
                acc += self.vals[k] * w[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// `out = Xᵀ r`
    fn mul_transpose(&self, r: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[k]] += self.vals[k] * ri;
            }
        }
    }
}

/// Weighted mean logistic loss plus `(λ/2)‖w‖²`; the intercept is not penalized.
pub struct LogisticObjective {
    x: Csr,
    y: Vec<f64>,
    sample_weight: Vec<f64>,
    dim: usize,
    l2_lambda: f64,
}

impl LogisticObjective {
    pub fn new(
        x: &[SparseVector],
        y: &[bool],
        dim: usize,
        l2_lambda: f64,
        class_reweight: bool,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(AuditError::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        let n = y.len();
        let positives = y.iter().filter(|&&v| v).count();
        if n < 2 || positives == 0 || positives == n {
            return Err(AuditError::SingleClass {
                positives,
                total: n,
            });
        }
        let sample_weight = if class_reweight {
            let wp = n as f64 / (2.0 * positives as f64);
            let wn = n as f64 / (2.0 * (n - positives) as f64);
            y.iter().map(|&v| if v { wp } else { wn }).collect()
        } else {
            vec![1.0; n]
        };
        Ok(Self {
            x: Csr::from_rows(x, dim)?,
            y: y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
            sample_weight,
            dim,
            l2_lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn data_loss(&self, z: &[f64]) -> f64 {
        let total: f64 = self.sample_weight.iter().sum();
        z.iter()
            .zip(&self.y)
            .zip(&self.sample_weight)
            .map(|((&zi, &yi), &si)| si * (softplus(zi) - yi * zi))
            .sum::<f64>()
            / total
    }

    pub fn value(&self, w: &[f64], b: f64) -> f64 {
        let mut z = vec![0.0; self.x.rows()];
        self.x.mul(w, b, &mut z);
        self.data_loss(&z) + 0.5 * self.l2_lambda * dot(w, w)
    }

    /// Returns `(∂/∂w, ∂/∂b)`.
    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let mut z = vec![0.0; self.x.rows()];
        self.x.mul(w, b, &mut z);
        let mut gw = vec![0.0; self.dim];
        let gb = self.gradient_at(w, &z, &mut gw);
        (gw, gb)
    }

    fn gradient_at(&self, w: &[f64], z: &[f64], gw: &mut [f64]) -> f64 {
        let total: f64 = self.sample_weight.iter().sum();
        let r: Vec<f64> = z
            .iter()
            .zip(&self.y)
            .zip(&self.sample_weight)
            .map(|((&zi, &yi), &si)| si * (sigmoid(zi) - yi) / total)
            .collect();
        self.x.mul_transpose(&r, gw);
        for (g, &wi) in gw.iter_mut().zip(w) {
            *g += self.l2_lambda * wi;
        }
        r.iter().sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(g: &[f64], gb: f64) -> f64 {
    g.iter().fold(gb.abs(), |m, v| m.max(v.abs()))
}

/// Trains from zero initialization.
pub fn train_fp_model(
    x: &[SparseVector],
    y: &[bool],
    dim: usize,
    config: &TrainConfig,
) -> Result<LinearFPModel> {
    train_fp_model_from(x, y, dim, config, &vec![0.0; dim], 0.0).map(|(m, _)| m)
}

/// Full-batch gradient descent with Armijo backtracking, started at
/// `(init_w, init_b)`. Trial steps use the Barzilai–Borwein length and are
/// halved until sufficient decrease holds, so accepted losses never increase.
/// Returns the model and the loss after every accepted iteration (starting
/// with the initial loss).
pub fn train_fp_model_from(
    x: &[SparseVector],
    y: &[bool],
    dim: usize,
    config: &TrainConfig,
    init_w: &[f64],
    init_b: f64,
) -> Result<(LinearFPModel, Vec<f64>)> {
    if init_w.len() != dim {
        return Err(AuditError::DimensionMismatch {
            expected: dim,
            found: init_w.len(),
        });
    }
    let obj = LogisticObjective::new(x, y, dim, config.l2_lambda, config.class_reweight)?;
    let n = obj.x.rows();
    let lambda = config.l2_lambda;

    let mut w = init_w.to_vec();
    let mut b = init_b;
    let mut z = vec![0.0; n];
    obj.x.mul(&w, b, &mut z);
    let mut loss = obj.data_loss(&z) + 0.5 * lambda * dot(&w, &w);
    let mut gw = vec![0.0; dim];
    let mut gb = obj.gradient_at(&w, &z, &mut gw);

    let mut history = vec![loss];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut xd = vec![0.0; n];
    let mut z_trial = vec![0.0; n];
    let mut gw_new = vec![0.0; dim];
    let mut converged = max_abs(&gw, gb) < config.tolerance;

    while !converged && iterations < config.max_iterations {
        // Direction d = -g; precompute X·d so each trial step costs O(n).
        let dw: Vec<f64> = gw.iter().map(|g| -g).collect();
        let db = -gb;
        obj.x.mul(&dw, db, &mut xd);
        let g_sq = dot(&gw, &gw) + gb * gb;
        let w_sq = dot(&w, &w);
        let wd = dot(&w, &dw);
        let d_sq = dot(&dw, &dw);

        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            for ((zt, &zi), &di) in z_trial.iter_mut().zip(&z).zip(&xd) {
                *zt = zi + t * di;
            }
            let reg = 0.5 * lambda * (w_sq + 2.0 * t * wd + t * t * d_sq);
            let trial = obj.data_loss(&z_trial) + reg;
            if trial <= loss - 1e-4 * t * g_sq {
                loss = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No representable decrease left along the gradient.
            break;
        }

        for (wi, di) in w.iter_mut().zip(&dw) {
            *wi += t * di;
        }
        b += t * db;
        std::mem::swap(&mut z, &mut z_trial);
        let gb_new = obj.gradient_at(&w, &z, &mut gw_new);

        // Barzilai–Borwein length for the next trial: sᵀs / sᵀΔg with s = t·d.
        let mut s_dot_y = 0.0;
        for (gn, go) in gw_new.iter().zip(&gw) {
            s_dot_y += (gn - go) * -go;
        }
        s_dot_y += (gb_new - gb) * -gb;
        s_dot_y *= t;
        let s_sq = t * t * g_sq;
        step = if s_dot_y > 0.0 {
            (s_sq / s_dot_y).clamp(1e-10, 1e10)
        } else {
            (t * 2.0).min(1e10)
        };

        std::mem::swap(&mut gw, &mut gw_new);
        gb = gb_new;
        iterations += 1;
        history.push(loss);
        converged = max_abs(&gw, gb) < config.tolerance;
    }

    let gradient_norm = max_abs(&gw, gb);
    Ok((
        LinearFPModel {
            weights: w,
            bias: b,
            training: TrainingMeta {
                iterations,
                final_loss: loss,
                gradient_norm,
                converged,
                l2_lambda: lambda,
                seed: config.seed,
            },
        },
        history,
    ))
}

/// Which end of the coefficient ranking to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankDirection {
    /// Largest coefficients first: features pushing toward a false positive.
    #[default]
    FalsePositive,
    /// Most negative coefficients first.
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedKeyword {
    pub token: String,
    pub weight: f64,
    pub rank: usize,
}

/// The `k` vocabulary tokens with the most extreme coefficients in
/// `direction`; ties go to the lexicographically smaller token.
pub fn top_fp_keywords(
    model: &LinearFPModel,
    vectorizer: &VectorizerModel,
    k: usize,
    direction: RankDirection,
) -> Result<Vec<RankedKeyword>> {
    let vocab = vectorizer.vocabulary();
    if model.weights.len() != vocab.len() {
        return Err(AuditError::DimensionMismatch {
            expected: vocab.len(),
            found: model.weights.len(),
        });
    }
    if k == 0 || k > vocab.len() {
        return Err(AuditError::KOutOfRange {
            k,
            vocabulary: vocab.len(),
        });
    }
    let mut order: Vec<usize> = (0..vocab.len()).collect();
    order.sort_by(|&a, &b| {
        let (wa, wb) = (model.weights[a], model.weights[b]);
        let by_weight = match direction {
            RankDirection::FalsePositive => wb.total_cmp(&wa),
            RankDirection::Negative => wa.total_cmp(&wb),
        };
        by_weight.then_with(|| vocab[a].cmp(&vocab[b]))
    });
    Ok(order
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(r, i)| RankedKeyword {
            token: vocab[i].clone(),
            weight: model.weights[i],
            rank: r + 1,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, GoldLabel, SampleSource, Split};
    use crate::textvec::VectorizerConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector {
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<SparseVector>, Vec<bool>) {
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        y[0] = true;
        y[1] = false;
        let x = (0..n)
            .map(|_| {
                let mut pairs = Vec::new();
                for j in 0..d {
                    if rng.random_bool(0.5) {
                        pairs.push((j, rng.random_range(-1.0..1.0)));
                    }
                }
                sv(&pairs)
            })
            .collect();
        (x, y)
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let x = vec![
            sv(&[(0, 1.0)]),
            sv(&[(0, 0.8), (1, 0.1)]),
            sv(&[(1, 1.0)]),
            sv(&[(1, 0.9), (0, 0.05)]),
        ];
        let y = [true, true, false, false];
        let cfg = TrainConfig {
            l2_lambda: 1e-6,
            ..TrainConfig::default()
        };
        let m = train_fp_model(&x, &y, 2, &cfg).unwrap();
        let acc = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| (m.predict_proba(xi) > 0.5) == yi)
            .count();
        assert_eq!(acc, 4);
        assert!(m.training.final_loss.is_finite());
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let err = train_fp_model(&x, &[false, false], 2, &TrainConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            AuditError::SingleClass {
                positives: 0,
                total: 2
            }
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(5, 1.0)])];
        let err = train_fp_model(&x, &[true, false], 2, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, AuditError::DimensionMismatch { .. }));
        let err = train_fp_model(&x[..1], &[true, false], 2, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, AuditError::DimensionMismatch { .. }));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, y) = random_problem(&mut rng, 10, 20);
        let obj = LogisticObjective::new(&x, &y, 20, 0.1, false).unwrap();
        let w: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = 0.3;
        let (gw, gb) = obj.gradient(&w, b);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for j in 0..=20 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            let (mut bp, mut bm) = (b, b);
            if j < 20 {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fd = (obj.value(&wp, bp) - obj.value(&wm, bm)) / (2.0 * h);
            let an = if j < 20 { gw[j] } else { gb };
            worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-6));
        }
        assert!(worst < 1e-4, "relative error {worst}");
    }

    #[test]
    fn loss_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, y) = random_problem(&mut rng, 80, 15);
        let cfg = TrainConfig::default();
        let (_, history) = train_fp_model_from(&x, &y, 15, &cfg, &[0.0; 15], 0.0).unwrap();
        assert!(history.len() > 1);
        assert!(history.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn regularized_optimum_is_unique() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (x, y) = random_problem(&mut rng, 60, 12);
        let cfg = TrainConfig {
            l2_lambda: 1e-2,
            tolerance: 1e-9,
            ..TrainConfig::default()
        };
        let (a, _) = train_fp_model_from(&x, &y, 12, &cfg, &[0.0; 12], 0.0).unwrap();
        let start: Vec<f64> = (0..12).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (b, _) = train_fp_model_from(&x, &y, 12, &cfg, &start, -1.0).unwrap();
        assert!(a.training.converged && b.training.converged);
        let gap = a
            .weights
            .iter()
            .zip(&b.weights)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-4, "gap {gap}");
    }

    #[test]
    fn ranking_under_input_scaling() {
        // Nearly unregularized: the optimum for c·X is the optimum for X divided by c.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = 8;
        let x: Vec<SparseVector> = (0..400)
            .map(|_| {
                sv(&(0..d)
                    .map(|j| (j, rng.random_range(0.01..1.0)))
                    .collect::<Vec<_>>())
            })
            .collect();
        let truth: Vec<f64> = (0..d).map(|j| j as f64 - 3.5).collect();
        let y: Vec<bool> = x
            .iter()
            .map(|r| rng.random::<f64>() < sigmoid(r.dot(&truth)))
            .collect();
        let vocab: Vec<String> = (0..d).map(|j| format!("t{j}")).collect();
        let texts = [vocab.join(" ")];
        let vec_model = VectorizerModel::fit(&texts, VectorizerConfig::new(1.0, 0.0)).unwrap();
        let cfg = TrainConfig {
            l2_lambda: 1e-8,
            tolerance: 1e-9,
            max_iterations: 20_000,
            ..TrainConfig::default()
        };
        let base = train_fp_model(&x, &y, d, &cfg).unwrap();
        let scaled: Vec<SparseVector> = x.iter().map(|r| r.scaled(3.0)).collect();
        let other = train_fp_model(&scaled, &y, d, &cfg).unwrap();
        let names = |m: &LinearFPModel| {
            top_fp_keywords(m, &vec_model, d, RankDirection::FalsePositive)
                .unwrap()
                .into_iter()
                .map(|k| k.token)
                .collect::<Vec<_>>()
        };
        assert_eq!(names(&base), names(&other));
        assert!((base.weights[0] - 3.0 * other.weights[0]).abs() < 1e-3);
    }

    fn vocab_model(tokens: &[&str]) -> VectorizerModel {
        VectorizerModel::fit(&[tokens.join(" ")], VectorizerConfig::new(1.0, 0.0)).unwrap()
    }

    fn fixed_model(weights: Vec<f64>) -> LinearFPModel {
        LinearFPModel {
            weights,
            bias: 0.0,
            training: TrainingMeta {
                iterations: 0,
                final_loss: 0.0,
                gradient_norm: 0.0,
                converged: true,
                l2_lambda: 0.0,
                seed: 0,
            },
        }
    }

    #[test]
    fn top_keywords_order_and_ties() {
        let v = vocab_model(&["aa", "bb", "cc", "dd"]);
        let m = fixed_model(vec![0.5, 2.0, 0.5, -1.0]);
        let top = top_fp_keywords(&m, &v, 4, RankDirection::FalsePositive).unwrap();
        let got: Vec<_> = top.iter().map(|k| (k.token.as_str(), k.rank)).collect();
        assert_eq!(got, [("bb", 1), ("aa", 2), ("cc", 3), ("dd", 4)]);
        let neg = top_fp_keywords(&m, &v, 1, RankDirection::Negative).unwrap();
        assert_eq!(neg[0].token, "dd");
        assert!(matches!(
            top_fp_keywords(&m, &v, 5, RankDirection::FalsePositive),
            Err(AuditError::KOutOfRange {
                k: 5,
                vocabulary: 4
            })
        ));
        assert!(top_fp_keywords(&m, &v, 0, RankDirection::FalsePositive).is_err());
    }

    #[test]
    fn top_350_of_6313_is_about_five_and_a_half_percent() {
        let tokens: Vec<String> = (0..6313).map(|i| format!("w{i:05}")).collect();
        let v = VectorizerModel::fit(&[tokens.join(" ")], VectorizerConfig::new(1.0, 0.0)).unwrap();
        assert_eq!(v.len(), 6313);
        let m = fixed_model((0..6313).map(|i| (i as f64 * 0.37).sin()).collect());
        let top = top_fp_keywords(&m, &v, 350, RankDirection::FalsePositive).unwrap();
        assert_eq!(top.len(), 350);
        let share: f64 = 350.0 / 6313.0;
        assert!((share - 0.055).abs() < 0.001);
    }

    #[test]
    fn fp_labels_match_quadrant_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let docs: Vec<Document> = (0..200)
            .map(|i| Document {
                id: format!("d{i}"),
                text: String::new(),
                score: Some(rng.random()),
                gold_label: if rng.random_bool(0.3) {
                    GoldLabel::Abusive
                } else {
                    GoldLabel::NonAbusive
                },
                sample_source: if i % 4 == 0 {
                    SampleSource::Fdr
                } else {
                    SampleSource::Prevalence
                },
                split: Split::Train,
            })
            .collect();
        let corpus = Corpus::new(docs).unwrap();
        let labels = label_fp_targets(&corpus, 0.5).unwrap();
        let counts = corpus.quadrant_counts(0.5).unwrap();
        assert_eq!(labels.iter().filter(|&&l| l).count(), counts.fp);
        for (doc, &l) in corpus.iter().zip(&labels) {
            let q = quadrant(doc, 0.5).unwrap();
            assert_eq!(l, q == Quadrant::FalsePositive);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let m = fixed_model(vec![0.25, -1.5]);
        assert_eq!(LinearFPModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn ranking_is_prefix_stable(
                weights in prop::collection::vec(-3i32..3, 2..30),
                j in 1usize..30,
                jj in 1usize..30,
            ) {
                let d = weights.len();
                let (j, jj) = (j.min(d), jj.min(d));
                let (lo, hi) = (j.min(jj), j.max(jj));
                let tokens: Vec<String> = (0..d).map(|i| format!("k{i:02}")).collect();
                let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
                let v = vocab_model(&refs);
                let m = fixed_model(weights.iter().map(|&w| w as f64).collect());
                let a = top_fp_keywords(&m, &v, lo, RankDirection::FalsePositive).unwrap();
                let b = top_fp_keywords(&m, &v, hi, RankDirection::FalsePositive).unwrap();
                prop_assert_eq!(&a[..], &b[..lo]);
                prop_assert!(b.windows(2).all(|p| p[0].weight >= p[1].weight));
            }
        }
    }
}
