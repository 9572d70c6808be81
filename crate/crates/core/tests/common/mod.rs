//! Shared generators for the integration test suites.

use knnportfolio_core::features::{FeatureVector, NUM_FEATURES};
use knnportfolio_core::knowledge_base::{Category, InstanceRecord, KnowledgeBase};
use knnportfolio_core::metrics::RuntimeOutcome;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A feature vector with the leading coordinates set and the rest zero.
pub fn fv(front: &[f64]) -> FeatureVector {
    let mut values = [0.0; NUM_FEATURES];
    values[..front.len()].copy_from_slice(front);
    FeatureVector::new(values).unwrap()
}

/// Random vector satisfying every `FeatureVector` invariant: non-negative
/// everywhere, fractions inside [0,1], ordered min/mean/max blocks.
pub fn random_feature_vector(rng: &mut ChaCha8Rng) -> FeatureVector {
    let mut values = [0.0f64; NUM_FEATURES];
    for slot in values.iter_mut() {
        *slot = rng.gen_range(0.0..50.0);
    }
    for idx in [14, 22, 23, 24] {
        values[idx - 1] = rng.gen_range(0.0..=1.0);
    }
    for (min_i, mean_i, max_i) in [(6, 4, 7), (11, 9, 12), (27, 25, 28)] {
        let mut triple = [values[min_i - 1], values[mean_i - 1], values[max_i - 1]];
        triple.sort_unstable_by(f64::total_cmp);
        values[min_i - 1] = triple[0];
        values[mean_i - 1] = triple[1];
        values[max_i - 1] = triple[2];
    }
    let ratio_mean = rng.gen_range(0.0..=1.0);
    values[17 - 1] = ratio_mean;
    values[19 - 1] = rng.gen_range(0.0..=ratio_mean);
    values[20 - 1] = rng.gen_range(ratio_mean..2.0);
    FeatureVector::new(values).unwrap()
}

pub fn random_outcome(rng: &mut ChaCha8Rng, cutoff: f64) -> RuntimeOutcome {
    match rng.gen_range(0..100) {
        0..=59 => RuntimeOutcome::Solved(rng.gen_range(0.0..cutoff)),
        60..=84 => RuntimeOutcome::Timeout,
        _ => RuntimeOutcome::Failed,
    }
}

/// Random knowledge base: every record is solvable, ids are unique, and a
/// slice of the records share identical features so distance ties occur.
pub fn random_kb(
    rng: &mut ChaCha8Rng,
    max_records: usize,
    max_solvers: usize,
    cutoff: f64,
) -> KnowledgeBase {
    let n = rng.gen_range(1..=max_records);
    let num_solvers = rng.gen_range(1..=max_solvers);
    let solvers: Vec<String> = (0..num_solvers).map(|s| format!("solver-{s}")).collect();

    let mut vectors: Vec<FeatureVector> = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.gen_bool(0.1) {
            vectors.push(vectors[rng.gen_range(0..i)]);
        } else {
            vectors.push(random_feature_vector(rng));
        }
    }

    let mut columns: Vec<Vec<RuntimeOutcome>> = (0..num_solvers)
        .map(|_| (0..n).map(|_| random_outcome(rng, cutoff)).collect())
        .collect();
    // Occasionally duplicate a solver's whole outcome column to force
    // penalty ties between solvers.
    if num_solvers > 1 && rng.gen_bool(0.3) {
        let from = rng.gen_range(0..num_solvers);
        let to = rng.gen_range(0..num_solvers);
        columns[to] = columns[from].clone();
    }

    let records: Vec<InstanceRecord> = (0..n)
        .map(|i| {
            let mut outcomes: Vec<RuntimeOutcome> =
                (0..num_solvers).map(|s| columns[s][i]).collect();
            if !outcomes.iter().any(RuntimeOutcome::is_solved) {
                outcomes[rng.gen_range(0..num_solvers)] =
                    RuntimeOutcome::Solved(rng.gen_range(0.0..cutoff));
            }
            InstanceRecord::new(
                format!("inst-{i:03}"),
                Category::ALL[rng.gen_range(0..Category::ALL.len())],
                vectors[i],
                outcomes,
            )
        })
        .collect();

    let build = KnowledgeBase::from_records(cutoff, solvers, records).unwrap();
    assert!(build.warnings.is_empty(), "generator produced droppable rows");
    build.kb
}

/// Three well-separated feature clusters; cluster i is solved only by
/// solver i, with uniform times in [1,100] seconds, everything else times
/// out at the given cutoff.
pub fn clustered_kb(rng: &mut ChaCha8Rng, per_cluster: usize, cutoff: f64) -> KnowledgeBase {
    let mut records = Vec::new();
    for cluster in 0..3usize {
        let center = 10.0 + 100.0 * cluster as f64;
        for i in 0..per_cluster {
            let outcomes = (0..3)
                .map(|s| {
                    if s == cluster {
                        RuntimeOutcome::Solved(rng.gen_range(1.0..100.0))
                    } else {
                        RuntimeOutcome::Timeout
                    }
                })
                .collect();
            records.push(InstanceRecord::new(
                format!("c{cluster}-{i:04}"),
                Category::ALL[cluster],
                fv(&[
                    center + rng.gen_range(-1.0..1.0),
                    center + rng.gen_range(-1.0..1.0),
                ]),
                outcomes,
            ));
        }
    }
    let build = KnowledgeBase::from_records(
        cutoff,
        vec!["s0".into(), "s1".into(), "s2".into()],
        records,
    )
    .unwrap();
    assert!(build.warnings.is_empty());
    build.kb
}
