//! Simulation models 1-5 and the benchmark harness.
//!
//! Every model draws `T`, then `X` (given `T`, or before `T` for model 3),
//! then both potential outcomes, and observes `Y = Y(T)`. Ground truth comes
//! from the structural DAG (models 1-3) or from the closed form "every
//! superset of {1, 2}" (models 4-5, whose arm-dependent covariance is not a
//! DAG over `X`).
//!
//! Replication `r` of a cell draws from a ChaCha stream keyed by
//! `(seed, model, n, p)` with stream number `r`, so results do not depend on
//! the order in which replications run.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{collider_blocks, locally_minimal, DEFAULT_MAX_BLOCK};
use crate::collection::{AdjustmentCollection, Source};
use crate::copula::normal_cdf;
use crate::criterion::{criterion_table, CriterionConfig, Variant};
use crate::dag::{Dag, Node, PopulationSpec};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inverse_regression::{CandidateOptions, Method};
use crate::selection::{select, SelectionResult, SelectorConfig};
use crate::subset::{check_dimension, SubsetId};

/// Standard deviation of the model error terms (variance 0.2).
pub fn noise_sd() -> f64 {
    0.2f64.sqrt()
}

pub const MIN_SAMPLE_SIZE: usize = 100;
pub const DEFAULT_P: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: u8,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    /// Replication index; selects the RNG stream.
    pub stream: u64,
}

impl ModelSpec {
    pub fn new(id: u8, n: usize, seed: u64) -> Result<Self> {
        Self {
            id,
            n,
            p: DEFAULT_P,
            seed,
            stream: 0,
        }
        .validated()
    }

    pub fn with_p(mut self, p: usize) -> Result<Self> {
        self.p = p;
        self.validated()
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    fn validated(self) -> Result<Self> {
        if !(1..=5).contains(&self.id) {
            return Err(Error::UnknownModel(self.id));
        }
        if self.n < MIN_SAMPLE_SIZE {
            return Err(Error::Config(format!(
                "simulation needs n >= {MIN_SAMPLE_SIZE}, got {}",
                self.n
            )));
        }
        check_dimension(self.p)?;
        if self.p < DEFAULT_P {
            return Err(Error::Config(format!(
                "simulation models need p >= {DEFAULT_P}, got {}",
                self.p
            )));
        }
        Ok(self)
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&(self.id as u64).to_le_bytes());
        key[16..24].copy_from_slice(&(self.n as u64).to_le_bytes());
        key[24..].copy_from_slice(&(self.p as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

/// CDF of the F distribution with (2, 3) degrees of freedom.
pub fn f23_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (1.0 + 2.0 * x / 3.0).powf(-1.5)
    }
}

/// Quantile of F(2, 3) at `1 - upper`, taking the upper tail probability
/// directly to keep precision near 1.
pub fn f23_upper_quantile(upper: f64) -> f64 {
    1.5 * (upper.powf(-2.0 / 3.0) - 1.0)
}

/// Quantile of F(2, 3).
pub fn f23_quantile(u: f64) -> f64 {
    f23_upper_quantile(1.0 - u)
}

/// `F₂,₃⁻¹(Φ(z))`.
fn from_normal_score(z: f64) -> f64 {
    f23_upper_quantile(normal_cdf(-z))
}

fn bernoulli(rng: &mut ChaCha8Rng, logit: f64) -> bool {
    let prob = 1.0 / (1.0 + (-logit).exp());
    rng.random::<f64>() < prob
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// One simulated sample with both potential outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: Dataset,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
}

/// Draws a sample from the model.
pub fn sample_model(spec: &ModelSpec) -> Result<SimulatedData> {
    let spec = spec.validated()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = spec.rng();
    let sd = noise_sd();
    let mut x = DMatrix::zeros(n, p);
    let mut t = vec![0u8; n];
    let mut y0 = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut row = vec![0.0; p];

    for i in 0..n {
        match spec.id {
            1 | 2 => {
                let (shift, var, w) = if spec.id == 1 { (0.6, 0.8, (1.5, 1.0)) } else { (0.5, 0.6, (2.0, 2.0)) };
                let ti = bernoulli(&mut rng, 0.0);
                for (j, v) in row.iter_mut().enumerate() {
                    if j == 3 {
                        continue;
                    }
                    let mu = if ti && j < 2 { shift } else { 0.0 };
                    *v = mu + f64::sqrt(var) * normal(&mut rng);
                }
                row[3] = w.0 * row[2] + w.1 * row[0] + sd * normal(&mut rng);
                let (e0, e1) = (sd * normal(&mut rng), sd * normal(&mut rng));
                let (x2, x3) = (row[1], row[2]);
                if spec.id == 1 {
                    y0[i] = 4.0 * (x2 + x3) + 2.2 * e0;
                    y1[i] = 5.0 * (x2 + x3) + 2.2 * e1;
                } else {
                    y0[i] = 9.0 * x2.sin() + 9.0 * x3.powi(3) + 2.2 * e0;
                    y1[i] = 10.0 * x2.sin() + 10.0 * x3.sin() + 2.2 * e1;
                }
                t[i] = ti as u8;
            }
            3 => {
                let base = 0.6f64.sqrt();
                row[3] = base * normal(&mut rng);
                for j in 7..p {
                    row[j] = base * normal(&mut rng);
                }
                for j in [0, 1, 2, 4] {
                    row[j] = 2.0 * row[3] + sd * normal(&mut rng);
                }
                row[5] = bernoulli(&mut rng, 0.0) as u8 as f64;
                row[6] = bernoulli(&mut rng, 0.0) as u8 as f64;
                let ti = bernoulli(&mut rng, row[1] + row[4]);
                let (e0, e1) = (sd * normal(&mut rng), sd * normal(&mut rng));
                let common = 2.0 * row[5] + 7.0 * row[2] / (0.5 + (row[0] + 2.0).powi(3));
                let xp3 = row[p - 1].powi(3);
                y0[i] = common + 0.4 * xp3 + e0;
                y1[i] = common + 0.8 * xp3 + e1;
                t[i] = ti as u8;
            }
            4 | 5 => {
                let ti = bernoulli(&mut rng, 0.0);
                for v in row.iter_mut() {
                    *v = normal(&mut rng);
                }
                if ti {
                    // corr(Z1, Z2) = .5 in the treated arm
                    row[1] = 0.5 * row[0] + 0.75f64.sqrt() * row[1];
                }
                for v in row.iter_mut() {
                    *v = from_normal_score(*v);
                }
                let scale = if spec.id == 4 { 1.0 } else { 10.0 };
                let (e0, e1) = (sd * normal(&mut rng), sd * normal(&mut rng));
                let common = row[0] + row[2].sin();
                y0[i] = common + 1.5 * row[1] + scale * e0;
                y1[i] = common + row[1] + scale * e1;
                t[i] = ti as u8;
            }
            _ => unreachable!("validated"),
        }
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    let y: Vec<f64> = (0..n).map(|i| if t[i] == 1 { y1[i] } else { y0[i] }).collect();
    Ok(SimulatedData {
        data: Dataset::new(x, t, y)?,
        y0,
        y1,
    })
}

/// Structural DAG of models 1-3; `None` for models 4-5.
pub fn model_dag(id: u8, p: usize) -> Result<Option<Dag>> {
    check_dimension(p)?;
    let x = Node::X;
    let edges = match id {
        1 | 2 => vec![
            (x(2), Node::Y),
            (x(3), Node::Y),
            (x(1), Node::T),
            (x(2), Node::T),
            (x(1), x(4)),
            (x(3), x(4)),
        ],
        3 => vec![
            (x(4), x(1)),
            (x(4), x(2)),
            (x(4), x(3)),
            (x(4), x(5)),
            (x(1), Node::Y),
            (x(3), Node::Y),
            (x(6), Node::Y),
            (x(p), Node::Y),
            (x(2), Node::T),
            (x(5), Node::T),
        ],
        4 | 5 => return Ok(None),
        other => return Err(Error::UnknownModel(other)),
    };
    Dag::new(p, edges).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthSource {
    Dag,
    Analytic,
}

/// Oracle adjustment sets of one model, per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub id: u8,
    pub p: usize,
    pub collections: [AdjustmentCollection; 2],
    pub minimal: [Vec<SubsetId>; 2],
    /// Union of collider blocks (unrefined).
    pub colliders: [SubsetId; 2],
    pub source: TruthSource,
}

pub fn ground_truth(id: u8, p: usize) -> Result<GroundTruth> {
    let (collection, source) = match model_dag(id, p)? {
        Some(dag) => (dag.true_collection()?, TruthSource::Dag),
        None => (
            AdjustmentCollection::supersets_of(SubsetId::from_indices(&[1, 2], p)?, Source::Oracle)?,
            TruthSource::Analytic,
        ),
    };
    let minimal = locally_minimal(&collection);
    let colliders = collider_blocks(&collection, DEFAULT_MAX_BLOCK)
        .into_iter()
        .fold(SubsetId::empty(p), |acc, b| acc.union(b));
    // the outcome mechanisms of both arms share the same DAG
    Ok(GroundTruth {
        id,
        p,
        collections: [collection.clone(), collection],
        minimal: [minimal.clone(), minimal],
        colliders: [colliders, colliders],
        source,
    })
}

/// Population moments of models 4-5 on the normal-score scale.
pub fn analytic_population(id: u8, p: usize) -> Result<PopulationSpec> {
    if !(4..=5).contains(&id) {
        return Err(Error::UnknownModel(id));
    }
    check_dimension(p)?;
    let sigma0 = DMatrix::identity(p, p);
    let mut sigma1 = sigma0.clone();
    sigma1[(0, 1)] = 0.5;
    sigma1[(1, 0)] = 0.5;
    let e = |k: usize, cols: usize| DMatrix::from_fn(p, cols, |i, j| if i == j && j < k { 1.0 } else { 0.0 });
    Ok(PopulationSpec {
        sigma0,
        sigma1,
        beta_y: e(3, 3),
        beta_t: e(2, 2),
        provenance: format!("model {id}"),
    })
}

/// Average treatment effect implied by the model equations, where known in
/// closed form.
pub fn design_ate(id: u8) -> Option<f64> {
    match id {
        // E(X2 + X3) with P(T = 1) = 1/2 and E(X2 | T = 1) = .6
        1 => Some(0.3),
        _ => None,
    }
}

/// Estimator pairing used for a model.
pub fn criterion_config(id: u8) -> CriterionConfig {
    CriterionConfig {
        method_y: Method::Sir,
        method_t: if id >= 4 { Method::Save } else { Method::Sir },
        candidate: CandidateOptions::default(),
    }
}

/// Criterion table and ridge-ratio selection for one arm with default tuning.
pub fn select_for_model(d: &Dataset, id: u8, arm: u8, variant: Variant) -> Result<SelectionResult> {
    let table = criterion_table(d, arm, variant, &criterion_config(id))?;
    select(&table, &SelectorConfig::for_sample_size(d.n()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub rho: f64,
    pub omega: f64,
    /// 1 when every locally minimal true set was selected.
    pub pi: f64,
    /// Correctly detected colliders; `None` when the truth has none.
    pub true_colliders: Option<usize>,
    pub false_colliders: usize,
}

pub fn compute_metrics(
    estimated: &AdjustmentCollection,
    truth: &AdjustmentCollection,
    truth_minimal: &[SubsetId],
    truth_colliders: SubsetId,
    max_block: usize,
) -> MetricsRecord {
    let hit = estimated.intersection_len(truth) as f64;
    let ratio = |den: usize| if den == 0 { 0.0 } else { hit / den as f64 };
    let found = collider_blocks(estimated, max_block)
        .into_iter()
        .fold(SubsetId::empty(estimated.p()), |acc, b| acc.union(b));
    MetricsRecord {
        rho: ratio(truth.len()),
        omega: ratio(estimated.len()),
        pi: truth_minimal.iter().all(|a| estimated.contains(*a)) as u8 as f64,
        true_colliders: (!truth_colliders.is_empty()).then(|| found.intersection(truth_colliders).len()),
        false_colliders: found.difference(truth_colliders).len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub models: Vec<u8>,
    pub ns: Vec<usize>,
    pub variants: Vec<Variant>,
    pub reps: usize,
    pub seed: u64,
    pub p: usize,
    pub max_block: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            models: vec![1, 2, 3, 4, 5],
            ns: vec![400, 800],
            variants: vec![Variant::Normal, Variant::Copula],
            reps: 200,
            seed: 1,
            p: DEFAULT_P,
            max_block: DEFAULT_MAX_BLOCK,
        }
    }
}

/// Mean metrics (×100) of one model / variant / n / arm cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: u8,
    pub variant: Variant,
    pub n: usize,
    pub arm: u8,
    pub rho: f64,
    pub omega: f64,
    pub pi: f64,
    pub true_colliders: Option<f64>,
    pub false_colliders: f64,
    pub reps: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResults {
    pub config: BenchmarkConfig,
    pub cells: Vec<CellSummary>,
}

/// Metrics of one replication for both arms, per variant.
pub fn run_replication(
    spec: &ModelSpec,
    variants: &[Variant],
    truth: &GroundTruth,
    max_block: usize,
) -> Result<Vec<[MetricsRecord; 2]>> {
    let sample = sample_model(spec)?;
    variants
        .iter()
        .map(|&v| {
            let mut out = [None, None];
            for arm in 0..2u8 {
                let sel = select_for_model(&sample.data, spec.id, arm, v)?;
                let a = arm as usize;
                out[a] = Some(compute_metrics(
                    &sel.selected,
                    &truth.collections[a],
                    &truth.minimal[a],
                    truth.colliders[a],
                    max_block,
                ));
            }
            Ok([out[0].unwrap(), out[1].unwrap()])
        })
        .collect()
}

pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkResults> {
    if config.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for &model in &config.models {
        let truth = ground_truth(model, config.p)?;
        for &n in &config.ns {
            let base = ModelSpec::new(model, n, config.seed)?.with_p(config.p)?;
            let runs: Vec<Result<Vec<[MetricsRecord; 2]>>> = (0..config.reps as u64)
                .into_par_iter()
                .map(|r| run_replication(&base.with_stream(r), &config.variants, &truth, config.max_block))
                .collect();
            let failed = runs.iter().filter(|r| r.is_err()).count();
            if failed > 0 {
                let first = runs.iter().find_map(|r| r.as_ref().err()).unwrap();
                log::warn!("model {model}, n = {n}: {failed} replications failed (first: {first})");
            }
            let ok: Vec<&Vec<[MetricsRecord; 2]>> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
            for (vi, &variant) in config.variants.iter().enumerate() {
                for arm in 0..2 {
                    let recs: Vec<MetricsRecord> = ok.iter().map(|r| r[vi][arm]).collect();
                    cells.push(summarize(model, variant, n, arm as u8, &recs, failed));
                }
            }
        }
    }
    Ok(BenchmarkResults {
        config: config.clone(),
        cells,
    })
}

fn summarize(model: u8, variant: Variant, n: usize, arm: u8, recs: &[MetricsRecord], failed: usize) -> CellSummary {
    let k = recs.len();
    let mean = |f: &dyn Fn(&MetricsRecord) -> f64| {
        if k == 0 {
            f64::NAN
        } else {
            100.0 * recs.iter().map(f).sum::<f64>() / k as f64
        }
    };
    let has_t = recs.first().is_some_and(|r| r.true_colliders.is_some());
    CellSummary {
        model,
        variant,
        n,
        arm,
        rho: mean(&|r| r.rho),
        omega: mean(&|r| r.omega),
        pi: mean(&|r| r.pi),
        true_colliders: has_t.then(|| mean(&|r| r.true_colliders.unwrap_or(0) as f64)),
        false_colliders: mean(&|r| r.false_colliders as f64),
        reps: k,
        failed,
    }
}

impl BenchmarkResults {
    pub fn cell(&self, model: u8, variant: Variant, n: usize, arm: u8) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.variant == variant && c.n == n && c.arm == arm)
    }

    /// Long-format CSV: `model,variant,n,metric,arm,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "variant", "n", "metric", "arm", "value"])?;
        for c in &self.cells {
            let mut row = |metric: &str, value: f64| {
                w.write_record([
                    c.model.to_string(),
                    c.variant.to_string(),
                    c.n.to_string(),
                    metric.to_string(),
                    c.arm.to_string(),
                    format!("{value:.4}"),
                ])
            };
            row("rho", c.rho)?;
            row("omega", c.omega)?;
            row("pi", c.pi)?;
            if let Some(t) = c.true_colliders {
                row("T", t)?;
            }
            row("F", c.false_colliders)?;
            row("reps", c.reps as f64)?;
            row("failed", c.failed as f64)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Text table with one block per `n`, one column per model and variant.
    pub fn render_table(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let cols: Vec<(u8, Variant)> = cfg
            .models
            .iter()
            .flat_map(|&m| cfg.variants.iter().map(move |&v| (m, v)))
            .collect();
        let r = |x: f64| if x.is_nan() { "nan".to_string() } else { format!("{}", x.round()) };
        for &n in &cfg.ns {
            let _ = write!(out, "{:<14}", format!("n={n}"));
            for (m, v) in &cols {
                let _ = write!(out, "{:>10}", format!("M{m} {}", v.to_string().to_uppercase()));
            }
            out.push('\n');
            let rows: [(&str, &dyn Fn(&CellSummary, &CellSummary) -> String); 5] = [
                ("rho0/omega0", &|a, _| format!("{}/{}", r(a.rho), r(a.omega))),
                ("rho1/omega1", &|_, b| format!("{}/{}", r(b.rho), r(b.omega))),
                ("pi0/pi1", &|a, b| format!("{}/{}", r(a.pi), r(b.pi))),
                ("T0/F0", &|a, _| {
                    format!("{}/{}", a.true_colliders.map_or("-".into(), r), r(a.false_colliders))
                }),
                ("T1/F1", &|_, b| {
                    format!("{}/{}", b.true_colliders.map_or("-".into(), r), r(b.false_colliders))
                }),
            ];
            for (label, f) in rows {
                let _ = write!(out, "{label:<14}");
                for &(m, v) in &cols {
                    let cell = match (self.cell(m, v, n, 0), self.cell(m, v, n, 1)) {
                        (Some(a), Some(b)) => f(a, b),
                        _ => "?".into(),
                    };
                    let _ = write!(out, "{cell:>10}");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn f23_round_trip() {
        for u in [0.01, 0.3, 0.5, 0.9, 0.999] {
            assert_relative_eq!(f23_cdf(f23_quantile(u)), u, epsilon = 1e-12);
        }
        assert_eq!(f23_cdf(-1.0), 0.0);
        // median of F(2,3): 1.5 (2^(2/3) - 1)
        assert_relative_eq!(f23_quantile(0.5), 1.5 * (2f64.powf(2.0 / 3.0) - 1.0), epsilon = 1e-14);
        assert!(from_normal_score(9.0).is_finite());
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(ModelSpec::new(6, 400, 1), Err(Error::UnknownModel(6))));
        assert!(ModelSpec::new(1, 50, 1).is_err());
        assert!(ModelSpec::new(1, 400, 1).unwrap().with_p(25).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = ModelSpec::new(3, 200, 9).unwrap().with_stream(4);
        assert_eq!(sample_model(&spec).unwrap(), sample_model(&spec).unwrap());
        let other = sample_model(&spec.with_stream(5)).unwrap();
        assert_ne!(sample_model(&spec).unwrap().data, other.data);
    }

    #[test]
    fn observed_outcome_is_own_arm() {
        for id in 1..=5 {
            let s = sample_model(&ModelSpec::new(id, 150, 3).unwrap()).unwrap();
            for i in 0..150 {
                let want = if s.data.t()[i] == 1 { s.y1[i] } else { s.y0[i] };
                assert_eq!(s.data.y()[i], want);
            }
        }
    }

    #[test]
    fn model_one_collider_column() {
        let s = sample_model(&ModelSpec::new(1, 2000, 5).unwrap()).unwrap();
        let x = s.data.x();
        let resid: Vec<f64> = (0..2000).map(|i| x[(i, 3)] - 1.5 * x[(i, 2)] - x[(i, 0)]).collect();
        let var = resid.iter().map(|r| r * r).sum::<f64>() / 2000.0;
        assert!((var - 0.2).abs() < 0.03, "{var}");
    }

    #[test]
    fn metrics_arithmetic() {
        let truth = ground_truth(1, 10).unwrap();
        let t = &truth.collections[0];
        let m = compute_metrics(t, t, &truth.minimal[0], truth.colliders[0], 3);
        assert_eq!((m.rho, m.omega, m.pi), (1.0, 1.0, 1.0));
        assert_eq!(m.true_colliders, Some(1));
        assert_eq!(m.false_colliders, 0);

        let all = AdjustmentCollection::from_subsets(10, Source::Estimated, crate::subset::enumerate_subsets(10).unwrap()).unwrap();
        let m = compute_metrics(&all, t, &truth.minimal[0], truth.colliders[0], 3);
        assert_eq!(m.rho, 1.0);
        assert_relative_eq!(m.omega, 448.0 / 1024.0);

        let mut missing = t.clone();
        missing.remove(truth.minimal[0][0]);
        let m = compute_metrics(&missing, t, &truth.minimal[0], truth.colliders[0], 3);
        assert_eq!(m.pi, 0.0);
    }

    #[test]
    fn copula_models_population_truth() {
        for id in [4, 5] {
            let pop = analytic_population(id, 10).unwrap();
            let (zero, min_excluded) = pop.zero_set(1e-10).unwrap();
            assert_eq!(zero, ground_truth(id, 10).unwrap().collections[0]);
            assert!(min_excluded > 1e-4);
        }
    }
}
