//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use policylens::annotators::http::RetryPolicy;
use policylens::corpus::{ingest_reader, PolicyDocument, TrigramIdentifier};
use policylens::synth::{generate, SynthConfig};
use serde_json::{json, Value};

pub mod oracles;

type Handler = dyn Fn(&Value) -> (u16, String) + Send + Sync;

/// Local HTTP server answering POSTs with a handler, counting requests.
pub struct MockServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    server: Arc<tiny_http::Server>,
    workers: Vec<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(handler: impl Fn(&Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind mock server"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let hits = Arc::new(AtomicUsize::new(0));
        let handler: Arc<Handler> = Arc::new(handler);
        let workers = (0..8)
            .map(|_| {
                let (server, hits, handler) = (server.clone(), hits.clone(), handler.clone());
                std::thread::spawn(move || {
                    while let Ok(mut req) = server.recv() {
                        hits.fetch_add(1, Ordering::SeqCst);
                        let mut body = String::new();
                        let _ = req.as_reader().read_to_string(&mut body);
                        let value: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
                        let (status, text) = handler(&value);
                        let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                        let resp = tiny_http::Response::from_string(text).with_status_code(status).with_header(header);
                        let _ = req.respond(resp);
                    }
                })
            })
            .collect();
        Self { url: format!("http://127.0.0.1:{port}"), hits, server, workers }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

pub fn chat_response(content: &str) -> String {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

pub fn valid_content() -> String {
    json!({
        "ispol": true, "upd": "01/09/2023", "contr": true, "purp": true, "rect": true,
        "forg": false, "port": false, "comp": true, "hum": false
    })
    .to_string()
}

pub fn fast_retry() -> RetryPolicy {
    RetryPolicy { max_attempts: 3, base_delay_ms: 1, max_delay_ms: 2 }
}

/// Ingested synthetic documents.
pub fn synthetic_docs(seed: u64, websites: usize) -> Vec<PolicyDocument> {
    let mut buf = Vec::new();
    generate(&SynthConfig { seed, websites }).write_jsonl(&mut buf).unwrap();
    let (corpus, _) = ingest_reader(buf.as_slice(), &TrigramIdentifier::default()).unwrap();
    corpus.documents().to_vec()
}

/// Reference disclosure percentages (August, October) per obligation in the
/// order contr, purp, rect, forg, port, comp, hum, with policy totals and
/// the cells marked significant.
pub struct ReferenceGroup {
    pub name: &'static str,
    pub pct: [(f64, f64); 7],
    pub totals: (u64, u64),
    pub starred: [bool; 7],
}

pub const REFERENCE: [ReferenceGroup; 3] = [
    ReferenceGroup {
        name: "EU",
        pct: [(85.8, 86.5), (99.3, 99.3), (87.7, 87.5), (89.7, 89.3), (72.3, 71.6), (73.8, 73.0), (26.6, 27.1)],
        totals: (2081, 2176),
        starred: [false; 7],
    },
    ReferenceGroup {
        name: "CH",
        pct: [(73.0, 76.9), (98.7, 98.9), (74.6, 77.3), (76.8, 79.3), (46.4, 53.2), (44.0, 50.2), (16.4, 18.7)],
        totals: (7002, 8195),
        starred: [true, false, true, true, true, true, true],
    },
    ReferenceGroup {
        name: "CH & EU",
        pct: [(80.5, 83.2), (98.4, 98.4), (79.9, 82.5), (82.5, 84.0), (54.4, 60.0), (52.8, 58.0), (23.2, 24.4)],
        totals: (3375, 3962),
        starred: [true, false, true, false, true, true, false],
    },
];

/// Counts recovered from a rounded percentage and its total.
pub fn count(pct: f64, n: u64) -> u64 {
    (pct / 100.0 * n as f64).round() as u64
}
