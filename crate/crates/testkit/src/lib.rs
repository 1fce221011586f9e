//! Random fixtures and brute-force reference implementations.
//!
//! Fixtures are plain membership matrices (`truth[i][l]`, `runs[k][i][l]`).
//! The oracle works on those matrices directly with nested loops and never
//! calls into `mleval-core`; only [`Fixture::to_dataset`] does, to hand the
//! same data to the implementation under test.

use mleval_core::{
    Dataset, DatasetDraft, DocumentRef, Instance, LabelId, LabelRegistry, LabelSet, RunDraft,
    ScoredRun,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub labels: usize,
    pub truth: Vec<Vec<bool>>,
    pub runs: Vec<Vec<Vec<bool>>>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_row(rng: &mut impl Rng, labels: usize, density: f64) -> Vec<bool> {
    // A fixed share of rows is forced empty so the empty set always shows up.
    if rng.random_bool(0.2) {
        return vec![false; labels];
    }
    (0..labels).map(|_| rng.random_bool(density)).collect()
}

impl Fixture {
    /// 1..=max_instances instances, 1..=max_labels labels, 1..=max_runs runs.
    pub fn random(
        rng: &mut impl Rng,
        max_instances: usize,
        max_labels: usize,
        max_runs: usize,
    ) -> Fixture {
        let n = rng.random_range(1..=max_instances);
        let labels = rng.random_range(1..=max_labels);
        let k = rng.random_range(1..=max_runs);
        let density = rng.random_range(0.1..0.7);
        let truth = (0..n).map(|_| random_row(rng, labels, density)).collect();
        let runs = (0..k)
            .map(|_| (0..n).map(|_| random_row(rng, labels, density)).collect())
            .collect();
        Fixture {
            labels,
            truth,
            runs,
        }
    }

    pub fn instance_count(&self) -> usize {
        self.truth.len()
    }

    pub fn label_name(l: usize) -> String {
        format!("L{l}")
    }

    pub fn run_name(k: usize) -> String {
        format!("P{k}")
    }

    pub fn instance_id(i: usize) -> String {
        format!("i{i}")
    }

    pub fn to_set(row: &[bool]) -> LabelSet {
        row.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(l, _)| LabelId::from(l))
            .collect()
    }

    pub fn to_draft(&self) -> DatasetDraft {
        let registry = LabelRegistry::new((0..self.labels).map(Self::label_name)).unwrap();
        let instances = self
            .truth
            .iter()
            .enumerate()
            .map(|(i, row)| Instance {
                id: Self::instance_id(i),
                document: DocumentRef::none(),
                truth: Self::to_set(row),
            })
            .collect();
        let runs = self
            .runs
            .iter()
            .enumerate()
            .map(|(k, rows)| {
                let mut run = RunDraft::hard(Self::run_name(k));
                for (i, row) in rows.iter().enumerate() {
                    run.push(Self::instance_id(i), Self::to_set(row));
                }
                run
            })
            .collect();
        DatasetDraft {
            name: "fixture".into(),
            registry,
            instances,
            runs,
        }
    }

    pub fn to_dataset(&self) -> Dataset {
        Dataset::assemble(self.to_draft())
            .expect("fixture is valid")
            .0
    }
}

/// Reference implementation over membership matrices.
pub mod oracle {
    use super::Fixture;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct Counts {
        pub tp: u64,
        pub fp: u64,
        pub fn_: u64,
        pub tn: u64,
    }

    pub fn counts(truth: &[Vec<bool>], pred: &[Vec<bool>], label: usize) -> Counts {
        let mut c = Counts {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 0,
        };
        for i in 0..truth.len() {
            let g = truth[i][label];
            let p = pred[i][label];
            if g && p {
                c.tp += 1;
            } else if p && !g {
                c.fp += 1;
            } else if g && !p {
                c.fn_ += 1;
            } else {
                c.tn += 1;
            }
        }
        c
    }

    pub fn precision(c: Counts) -> Option<f64> {
        if c.tp + c.fp == 0 {
            None
        } else {
            Some(c.tp as f64 / (c.tp + c.fp) as f64)
        }
    }

    pub fn recall(c: Counts) -> Option<f64> {
        if c.tp + c.fn_ == 0 {
            None
        } else {
            Some(c.tp as f64 / (c.tp + c.fn_) as f64)
        }
    }

    /// The closed form 2tp / (2tp + fp + fn), plus the error-free rule.
    pub fn f1(c: Counts) -> f64 {
        let errors = c.fp + c.fn_;
        if c.tp == 0 && errors == 0 {
            1.0
        } else {
            (2 * c.tp) as f64 / (2 * c.tp + errors) as f64
        }
    }

    pub fn jaccard(a: &[bool], b: &[bool]) -> f64 {
        let mut inter = 0u32;
        let mut union = 0u32;
        for (x, y) in a.iter().zip(b) {
            if *x && *y {
                inter += 1;
            }
            if *x || *y {
                union += 1;
            }
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn mean_jaccard(a: &[Vec<bool>], b: &[Vec<bool>]) -> f64 {
        let total: f64 = a.iter().zip(b).map(|(x, y)| jaccard(x, y)).sum();
        total / a.len() as f64
    }

    pub fn cardinality(rows: &[Vec<bool>]) -> f64 {
        let total: usize = rows.iter().map(|r| r.iter().filter(|b| **b).count()).sum();
        total as f64 / rows.len() as f64
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct Summary {
        pub cardinality: f64,
        pub mean_f1: f64,
        pub mean_precision: Option<f64>,
        pub mean_recall: Option<f64>,
        pub mean_jaccard: f64,
    }

    fn mean_defined(values: Vec<Option<f64>>) -> Option<f64> {
        let defined: Vec<f64> = values.into_iter().flatten().collect();
        if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }

    pub fn summary(fx: &Fixture, run: usize) -> Summary {
        let pred = &fx.runs[run];
        let all: Vec<Counts> = (0..fx.labels).map(|l| counts(&fx.truth, pred, l)).collect();
        Summary {
            cardinality: cardinality(pred),
            mean_f1: all.iter().map(|c| f1(*c)).sum::<f64>() / fx.labels as f64,
            mean_precision: mean_defined(all.iter().map(|c| precision(*c)).collect()),
            mean_recall: mean_defined(all.iter().map(|c| recall(*c)).collect()),
            mean_jaccard: mean_jaccard(&fx.truth, pred),
        }
    }

    /// Party 0 is the ground truth, party k the run k-1.
    pub fn similarity(fx: &Fixture) -> Vec<Vec<f64>> {
        let parties: Vec<&Vec<Vec<bool>>> =
            std::iter::once(&fx.truth).chain(fx.runs.iter()).collect();
        parties
            .iter()
            .map(|p| parties.iter().map(|q| mean_jaccard(p, q)).collect())
            .collect()
    }

    /// Distinct rows across truth and every run, by exhaustive comparison.
    pub fn distinct_tuples(fx: &Fixture) -> Vec<Vec<bool>> {
        let mut seen: Vec<Vec<bool>> = Vec::new();
        for row in fx.truth.iter().chain(fx.runs.iter().flatten()) {
            if !seen.contains(row) {
                seen.push(row.clone());
            }
        }
        seen
    }
}

/// A scored run with random scores over `fixture`'s instances and labels.
/// Some labels are left unscored (implicit 0) and some scores sit exactly on
/// common thresholds.
pub fn random_scored_run(rng: &mut impl Rng, instances: usize, labels: usize) -> ScoredRun {
    const EDGES: [f64; 5] = [0.0, 0.25, 0.5, 0.9, 1.0];
    let scores = (0..instances)
        .map(|i| {
            let mut row = Vec::new();
            for l in 0..labels {
                if !rng.random_bool(0.8) {
                    continue;
                }
                let s = if rng.random_bool(0.15) {
                    EDGES[rng.random_range(0..EDGES.len())]
                } else {
                    rng.random_range(0.0..=1.0)
                };
                row.push((LabelId::from(l), s));
            }
            (Fixture::instance_id(i), row)
        })
        .collect();
    ScoredRun {
        name: "scored".into(),
        scores,
    }
}
