//! Scaling checks: parsing stays linear in input size and feature
//! extraction stays within its wall-clock bound on a large instance.
//! Both measurements run inside one test so they never compete for cores.

use knnportfolio_core::dimacs::parse_dimacs;
use knnportfolio_core::features::extract_features;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

fn random_3cnf_text(rng: &mut ChaCha8Rng, target_bytes: usize) -> String {
    let num_vars = 200_000;
    let mut text = String::with_capacity(target_bytes + 64);
    // The declared clause count is corrected afterwards.
    text.push_str(&format!("p cnf {num_vars} 1\n"));
    let mut clauses = 0usize;
    while text.len() < target_bytes {
        for _ in 0..3 {
            let v = rng.gen_range(1..=num_vars) as i64;
            let lit = if rng.gen_bool(0.5) { v } else { -v };
            text.push_str(&format!("{lit} "));
        }
        text.push_str("0\n");
        clauses += 1;
    }
    let header_end = text.find('\n').unwrap();
    text.replace_range(..header_end, &format!("p cnf {num_vars} {clauses}"));
    text
}

fn median_parse_seconds(text: &str, runs: usize) -> f64 {
    let mut times: Vec<f64> = (0..runs)
        .map(|_| {
            let clock = Instant::now();
            let parsed = parse_dimacs(text.as_bytes(), "<perf>").unwrap();
            let elapsed = clock.elapsed().as_secs_f64();
            assert!(parsed.instance.num_clauses() > 0);
            elapsed
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[runs / 2]
}

#[test]
fn parse_scales_linearly_and_extraction_meets_its_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e7f);
    let small = random_3cnf_text(&mut rng, 1 << 20); // ~1 MiB
    let large = random_3cnf_text(&mut rng, 10 << 20); // ~10 MiB

    let t_small = median_parse_seconds(&small, 3);
    let t_large = median_parse_seconds(&large, 3);
    // Linear growth with a factor-of-2 allowance; a noise floor keeps the
    // ratio meaningful when the small parse is nearly instant.
    let floor = 0.005;
    assert!(
        t_large <= 2.0 * 10.0 * t_small.max(floor),
        "parse times: {t_small}s for 1 MiB vs {t_large}s for 10 MiB"
    );

    let instance = parse_dimacs(large.as_bytes(), "<perf>").unwrap().instance;
    let clock = Instant::now();
    let features = extract_features(&instance);
    let extraction = clock.elapsed();
    assert!(features.value(1) > 0.0);
    assert!(
        extraction < Duration::from_secs(5),
        "extraction took {extraction:?} on a ~10 MiB instance"
    );
    eprintln!(
        "parse medians: 1 MiB {t_small:.3}s, 10 MiB {t_large:.3}s; extraction on 10 MiB: {extraction:?}"
    );
}
