//! Policy embeddings, cosine similarity, t-SNE projection and generator
//! cluster cohesion.

pub mod embed;
pub mod tsne;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{truncate_tokens, EmbedBatch, EmbeddingClient, EmbeddingConfig};
pub use tsne::{cosine_distances, silhouette, tsne, TsneOutput, TsneParams};

#[derive(Debug, Error)]
pub enum SimprojError {
    #[error("document `{0}` has no text to embed")]
    EmptyText(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected embedding response: {0}")]
    BadResponse(String),
    #[error("zero vector for `{0}`")]
    ZeroVector(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("t-SNE needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("perplexity {perplexity} is too large for {n} points")]
    PerplexityTooLarge { perplexity: f64, n: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub doc_id: String,
    pub model_id: String,
    pub truncated_to: usize,
    pub values: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, SimprojError> {
    if a.len() != b.len() {
        return Err(SimprojError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(SimprojError::ZeroVector(String::new()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SimprojError> {
    cosine(&a.values, &b.values).map_err(|e| match e {
        SimprojError::ZeroVector(_) => {
            let id = if norm(&a.values) == 0.0 { &a.doc_id } else { &b.doc_id };
            SimprojError::ZeroVector(id.clone())
        }
        other => other,
    })
}

fn check_vectors(vectors: &[EmbeddingVector]) -> Result<(), SimprojError> {
    let Some(first) = vectors.first() else { return Ok(()) };
    for v in vectors {
        if v.values.len() != first.values.len() {
            return Err(SimprojError::DimensionMismatch { expected: first.values.len(), got: v.values.len() });
        }
        if norm(&v.values) == 0.0 {
            return Err(SimprojError::ZeroVector(v.doc_id.clone()));
        }
    }
    Ok(())
}

pub fn write_embeddings<W: Write>(vectors: &[EmbeddingVector], mut out: W) -> std::io::Result<()> {
    for v in vectors {
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_embeddings<R: BufRead>(input: R) -> Result<Vec<EmbeddingVector>, SimprojError> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    check_vectors(&out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub doc_ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub seed: u64,
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration_kl: f64,
    pub final_kl: f64,
}

/// Projects `vectors` to 2-D. Points are processed in doc_id order, so the
/// result does not depend on input order; rows come back in input order.
pub fn project_tsne(vectors: &[EmbeddingVector], params: &TsneParams) -> Result<Projection2D, SimprojError> {
    check_vectors(vectors)?;
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| vectors[a].doc_id.cmp(&vectors[b].doc_id));
    let points: Vec<Vec<f64>> = order.iter().map(|&i| vectors[i].values.clone()).collect();
    let out = tsne(&points, params)?;
    let mut coords = vec![[0.0; 2]; vectors.len()];
    for (sorted_pos, &i) in order.iter().enumerate() {
        coords[i] = out.coords[sorted_pos];
    }
    Ok(Projection2D {
        doc_ids: vectors.iter().map(|v| v.doc_id.clone()).collect(),
        coords,
        seed: params.seed,
        perplexity: params.perplexity,
        iterations: params.iterations,
        exaggeration_kl: out.exaggeration_kl,
        final_kl: out.final_kl,
    })
}

impl Projection2D {
    /// `doc_id,x,y,generator`; unlabeled docs get an empty generator cell.
    pub fn to_csv(&self, labels: &BTreeMap<String, String>) -> String {
        let mut out = String::from("doc_id,x,y,generator\n");
        for (id, [x, y]) in self.doc_ids.iter().zip(&self.coords) {
            let g = labels.get(id).map_or("", String::as_str);
            let _ = writeln!(out, "{id},{x:.6},{y:.6},{g}");
        }
        out
    }

    /// Scatter plot; the `top` most frequent labels get their own colour.
    pub fn to_svg(&self, labels: &BTreeMap<String, String>, top: usize) -> String {
        const PALETTE: [&str; 10] = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
            "#17becf",
        ];
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for id in &self.doc_ids {
            if let Some(g) = labels.get(id) {
                *freq.entry(g).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let colored: Vec<&str> = ranked.iter().take(top.min(PALETTE.len())).map(|r| r.0).collect();
        let (w, h, pad) = (640.0, 640.0, 20.0);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for c in &self.coords {
            for k in 0..2 {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let scale = |v: f64, k: usize, size: f64| {
            let span = (hi[k] - lo[k]).max(1e-12);
            pad + (v - lo[k]) / span * (size - 2.0 * pad)
        };
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{}\" viewBox=\"0 0 {w} {}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            h + 20.0 * colored.len() as f64,
            h + 20.0 * colored.len() as f64
        );
        // unlabeled points first so coloured ones stay visible
        let mut layers: Vec<(usize, String)> = Vec::new();
        for (id, c) in self.doc_ids.iter().zip(&self.coords) {
            let slot = labels.get(id).and_then(|g| colored.iter().position(|x| x == g));
            let fill = slot.map_or("#d0d0d0", |s| PALETTE[s]);
            let circle = format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{fill}\"/>\n",
                scale(c[0], 0, w),
                h - scale(c[1], 1, h)
            );
            layers.push((slot.map_or(0, |s| s + 1), circle));
        }
        layers.sort_by_key(|l| l.0);
        for (_, c) in layers {
            out.push_str(&c);
        }
        for (i, g) in colored.iter().enumerate() {
            let y = h + 14.0 + 20.0 * i as f64;
            let _ = writeln!(
                out,
                "<circle cx=\"{pad}\" cy=\"{y}\" r=\"5\" fill=\"{}\"/><text x=\"{}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>",
                PALETTE[i],
                pad + 10.0,
                y + 4.0,
                g.replace('&', "&amp;").replace('<', "&lt;")
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohesion {
    pub generator: String,
    pub docs: usize,
    pub intra: f64,
    pub cross: f64,
    pub ratio: f64,
}

/// Mean within-generator similarity against mean similarity to unlabeled
/// documents (or to all other documents when none are unlabeled).
/// Generators with fewer than two documents are left out.
pub fn cluster_cohesion(
    vectors: &[EmbeddingVector],
    labels: &BTreeMap<String, String>,
) -> Result<Vec<Cohesion>, SimprojError> {
    check_vectors(vectors)?;
    let generators: BTreeSet<&str> = vectors.iter().filter_map(|v| labels.get(&v.doc_id)).map(String::as_str).collect();
    let unlabeled: Vec<&EmbeddingVector> = vectors.iter().filter(|v| !labels.contains_key(&v.doc_id)).collect();
    let mut out = Vec::new();
    for g in generators {
        let members: Vec<&EmbeddingVector> =
            vectors.iter().filter(|v| labels.get(&v.doc_id).map(String::as_str) == Some(g)).collect();
        if members.len() < 2 {
            continue;
        }
        let others: Vec<&EmbeddingVector> = if unlabeled.is_empty() {
            vectors.iter().filter(|v| labels.get(&v.doc_id).map(String::as_str) != Some(g)).collect()
        } else {
            unlabeled.clone()
        };
        if others.is_empty() {
            continue;
        }
        let mut intra = 0.0;
        let mut pairs = 0usize;
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                intra += cosine(&members[i].values, &members[j].values)?;
                pairs += 1;
            }
        }
        let mut cross = 0.0;
        for m in &members {
            for o in &others {
                cross += cosine(&m.values, &o.values)?;
            }
        }
        let intra = intra / pairs as f64;
        let cross = cross / (members.len() * others.len()) as f64;
        out.push(Cohesion { generator: g.to_string(), docs: members.len(), intra, cross, ratio: intra / cross });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ev(id: &str, values: Vec<f64>) -> EmbeddingVector {
        EmbeddingVector { doc_id: id.into(), model_id: "m".into(), truncated_to: 1, values }
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&ev("a", vec![0.0, 0.0]), &ev("b", vec![1.0, 0.0])),
            Err(SimprojError::ZeroVector(id)) if id == "a"
        ));
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn embeddings_roundtrip() {
        let vs = vec![ev("a", vec![0.1, 1.0 / 3.0]), ev("b", vec![-2.5e-300, 7.0])];
        let mut buf = Vec::new();
        write_embeddings(&vs, &mut buf).unwrap();
        assert_eq!(read_embeddings(buf.as_slice()).unwrap(), vs);
        let bad = b"{\"doc_id\":\"a\",\"model_id\":\"m\",\"truncated_to\":1,\"values\":[1]}\n{\"doc_id\":\"b\",\"model_id\":\"m\",\"truncated_to\":1,\"values\":[1,2]}\n";
        assert!(read_embeddings(&bad[..]).is_err());
    }

    #[test]
    fn cohesion_cases() {
        let same: Vec<EmbeddingVector> = (0..6).map(|i| ev(&format!("d{i}"), vec![1.0, 2.0])).collect();
        let labels: BTreeMap<String, String> =
            [("d0", "g"), ("d1", "g"), ("d2", "solo")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let c = cluster_cohesion(&same, &labels).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].ratio - 1.0).abs() < 1e-12 && (c[0].intra - 1.0).abs() < 1e-12);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut vs = Vec::new();
        let mut labels = BTreeMap::new();
        for i in 0..40 {
            let mut v: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..1.0)).collect();
            if i < 10 {
                v[0] += 5.0;
                labels.insert(format!("d{i:02}"), "tight".to_string());
            }
            vs.push(ev(&format!("d{i:02}"), v));
        }
        let c = cluster_cohesion(&vs, &labels).unwrap();
        assert!(c[0].ratio > 1.2);
        // shuffling the labels removes the effect on average
        let ids: Vec<String> = vs.iter().map(|v| v.doc_id.clone()).collect();
        let mut ratios = Vec::new();
        for _ in 0..30 {
            let mut picked = ids.clone();
            for i in (1..picked.len()).rev() {
                picked.swap(i, rng.gen_range(0..=i));
            }
            let shuffled: BTreeMap<String, String> =
                picked[..10].iter().map(|id| (id.clone(), "tight".to_string())).collect();
            ratios.push(cluster_cohesion(&vs, &shuffled).unwrap()[0].ratio);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 1.0).abs() < 0.1, "mean shuffled ratio {mean}");
    }

    #[test]
    fn csv_and_svg() {
        let p = Projection2D {
            doc_ids: vec!["a".into(), "b".into()],
            coords: vec![[0.0, 1.0], [2.0, -1.0]],
            seed: 1,
            perplexity: 1.0,
            iterations: 0,
            exaggeration_kl: 0.0,
            final_kl: 0.0,
        };
        let labels: BTreeMap<String, String> = [("a".to_string(), "x&y".to_string())].into();
        assert_eq!(p.to_csv(&labels), "doc_id,x,y,generator\na,0.000000,1.000000,x&y\nb,2.000000,-1.000000,\n");
        let svg = p.to_svg(&labels, 10);
        assert!(svg.starts_with("<svg") && svg.contains("x&amp;y") && svg.matches("<circle").count() == 3);
    }

    proptest! {
        #[test]
        fn cosine_symmetry_and_scale(a in prop::collection::vec(-10.0f64..10.0, 3), b in prop::collection::vec(-10.0f64..10.0, 3), l in 0.01f64..100.0) {
            prop_assume!(norm(&a) > 1e-6 && norm(&b) > 1e-6);
            let ab = cosine(&a, &b).unwrap();
            prop_assert!((ab - cosine(&b, &a).unwrap()).abs() < 1e-12);
            let scaled: Vec<f64> = a.iter().map(|x| x * l).collect();
            prop_assert!((ab - cosine(&scaled, &b).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }
    }
}
