use policylens::simproj::{project_tsne, silhouette, tsne, EmbeddingVector, TsneParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 50 points around each of two orthogonal directions in 20-D.
fn two_blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for blob in 0..2 {
        for _ in 0..50 {
            let mut v: Vec<f64> = (0..20).map(|_| rng.gen_range(-0.1..0.1)).collect();
            for k in 0..10 {
                v[blob * 10 + k] += 1.0;
            }
            points.push(v);
            labels.push(blob);
        }
    }
    (points, labels)
}

#[test]
fn two_blobs_separate() {
    let (points, labels) = two_blobs(7);
    let out = tsne(&points, &TsneParams::default()).unwrap();
    let s = silhouette(&out.coords, &labels);
    assert!(s > 0.5, "silhouette {s}");
    assert!(out.final_kl >= 0.0);
    assert!(out.final_kl <= out.exaggeration_kl, "{} > {}", out.final_kl, out.exaggeration_kl);
}

#[test]
fn deterministic_across_thread_counts() {
    let (points, _) = two_blobs(3);
    let params = TsneParams { iterations: 300, ..Default::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| tsne(&points, &params).unwrap())
    };
    let a = run(1);
    let b = run(8);
    let c = run(8);
    assert_eq!(a.coords, b.coords);
    assert_eq!(b.coords, c.coords);
    assert_eq!(a.final_kl.to_bits(), b.final_kl.to_bits());
}

#[test]
fn permutation_equivariant() {
    let (points, _) = two_blobs(5);
    let vectors: Vec<EmbeddingVector> = points
        .iter()
        .enumerate()
        .map(|(i, v)| EmbeddingVector {
            doc_id: format!("d{i:03}"),
            model_id: "m".into(),
            truncated_to: 1,
            values: v.clone(),
        })
        .collect();
    let params = TsneParams { iterations: 200, ..Default::default() };
    let a = project_tsne(&vectors, &params).unwrap();
    let mut reversed = vectors.clone();
    reversed.reverse();
    let b = project_tsne(&reversed, &params).unwrap();
    for (i, id) in a.doc_ids.iter().enumerate() {
        let j = b.doc_ids.iter().position(|x| x == id).unwrap();
        assert_eq!(a.coords[i], b.coords[j]);
    }
}

#[test]
fn affinities_are_normalized() {
    let (points, _) = two_blobs(9);
    let params = TsneParams { iterations: 0, perplexity: 15.0, ..Default::default() };
    let out = tsne(&points, &params).unwrap();
    for h in &out.entropies {
        assert!((h - 15f64.log2()).abs() < 1e-6);
    }
}
