//! The wire backend against a scripted completions server on localhost.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use argos::engine::{solve, DecidedBy, EngineConfig, EngineError};
use argos::harness::Problem;
use argos::llm::{BackendError, WireBackend, WireConfig};
use serde_json::{json, Value};

type Script = dyn Fn(usize, &Value) -> (u16, Value) + Send + Sync;
type Log = Arc<Mutex<Vec<(Option<String>, Value)>>>;

struct Mock {
    url: String,
    requests: Log,
}

fn read_request(reader: &mut BufReader<TcpStream>) -> Option<(Option<String>, Value)> {
    let mut length = 0;
    let mut auth = None;
    let mut line = String::new();
    if reader.read_line(&mut line).ok()? == 0 {
        return None;
    }
    loop {
        line.clear();
        reader.read_line(&mut line).ok()?;
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        let (name, value) = l.split_once(':')?;
        match name.to_ascii_lowercase().as_str() {
            "content-length" => length = value.trim().parse().ok()?,
            "authorization" => auth = Some(value.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).ok()?;
    Some((auth, serde_json::from_slice(&body).ok()?))
}

fn serve(script: Arc<Script>) -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    let requests: Log = Arc::default();
    let seen = requests.clone();
    let counter = Arc::new(AtomicUsize::new(0));
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let (script, seen, counter) = (script.clone(), seen.clone(), counter.clone());
            thread::spawn(move || {
                let mut writer = stream.try_clone().unwrap();
                let mut reader = BufReader::new(stream);
                while let Some((auth, body)) = read_request(&mut reader) {
                    let n = counter.fetch_add(1, Ordering::SeqCst);
                    let (status, reply) = script(n, &body);
                    seen.lock().unwrap().push((auth, body));
                    let text = reply.to_string();
                    let head = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
                        text.len()
                    );
                    if writer
                        .write_all(head.as_bytes())
                        .and_then(|_| writer.write_all(text.as_bytes()))
                        .is_err()
                    {
                        return;
                    }
                }
            });
        }
    });
    Mock { url, requests }
}

fn choice(text: &str, logprobs: Value) -> Value {
    json!({"choices": [{"text": text, "logprobs": logprobs}]})
}

/// Plays a competent model on `p(a)` / `q(a)`: it proposes `q`, likes every
/// rule, and answers every chain of thought with False.
fn competent(_: usize, body: &Value) -> (u16, Value) {
    let prompt = body["prompt"].as_str().unwrap_or_default();
    match body["max_tokens"].as_u64().unwrap() {
        1 => {
            let (yes, no) = if prompt.contains("contradictory") {
                (-3.0, -0.05)
            } else {
                (-0.05, -3.0)
            };
            (
                200,
                choice(
                    " Yes",
                    json!({"top_logprobs": [{" Yes": yes, "yes": yes - 2.0, " No": no}]}),
                ),
            )
        }
        25 => (200, choice(" q", Value::Null)),
        _ => (
            200,
            choice(
                "Nothing links p to q, so False.",
                json!({"tokens": [" so", " False", "."], "token_logprobs": [-0.2, -0.3, -0.01]}),
            ),
        ),
    }
}

fn problem() -> Problem {
    Problem::parse_json(r#"{"id": "pq", "premises": ["p(a)"], "query": "q(a)"}"#).unwrap()
}

fn config(url: &str) -> WireConfig {
    let mut c = WireConfig::new(url, "test-model");
    c.api_key = Some("sekrit".into());
    c.backoff = Duration::from_millis(5);
    c.timeout = Duration::from_secs(10);
    c
}

#[test]
fn full_loop_over_http() {
    let mock = serve(Arc::new(competent));
    let backend = WireBackend::new(config(&mock.url));
    let r = solve(&problem(), &EngineConfig::default(), &backend).unwrap();
    assert!(r.verdict);
    assert_eq!(r.decided_by, DecidedBy::Sat);
    assert_eq!(r.commonsense.len(), 1);
    assert_eq!(r.commonsense[0].text(), "p(a) -> q(a)");
    assert_eq!(r.cot_calls, 5);
    let vote = r.last_vote.unwrap();
    assert!(!vote.answer);
    assert_eq!(vote.vote_fraction, 1.0);
    assert!((vote.weighted_confidence - (-0.3f64).exp()).abs() < 1e-9);

    let requests = mock.requests.lock().unwrap();
    for (auth, body) in requests.iter() {
        assert_eq!(auth.as_deref(), Some("Bearer sekrit"));
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["logprobs"], 5);
    }
    let by_tokens = |n: u64| requests.iter().filter(|(_, b)| b["max_tokens"] == n).count();
    assert_eq!(by_tokens(300), 5, "one vote of k samples");
    assert!(by_tokens(25) >= 1);
    assert_eq!(by_tokens(1), 2, "one commonsense and one relevance score");
    let cot = requests.iter().find(|(_, b)| b["max_tokens"] == 300).unwrap();
    assert_eq!(cot.1["temperature"], 0.7);
}

#[test]
fn retries_server_errors() {
    let mock = serve(Arc::new(
        |n, body: &Value| if n < 2 { (503, json!({})) } else { competent(n, body) },
    ));
    let backend = WireBackend::new(config(&mock.url));
    let r = solve(&problem(), &EngineConfig::default(), &backend).unwrap();
    assert!(r.verdict);
}

#[test]
fn client_errors_are_not_retried() {
    let mock = serve(Arc::new(|_, _: &Value| (401, json!({"error": "bad key"}))));
    let backend = WireBackend::new(config(&mock.url));
    let err = solve(&problem(), &EngineConfig::default(), &backend).unwrap_err();
    assert!(matches!(err, EngineError::Backend(BackendError::Protocol(_))), "{err}");
    assert_eq!(mock.requests.lock().unwrap().len(), 5, "one attempt per sample");
}

#[test]
fn gives_up_after_retries() {
    let mock = serve(Arc::new(|_, _: &Value| (500, json!({}))));
    let mut c = config(&mock.url);
    c.retries = 2;
    let backend = WireBackend::new(c);
    let engine = EngineConfig {
        k: 1,
        ..EngineConfig::default()
    };
    let err = solve(&problem(), &engine, &backend).unwrap_err();
    match err {
        EngineError::Backend(BackendError::Transport { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("unexpected {other}"),
    }
    assert_eq!(mock.requests.lock().unwrap().len(), 3);
}

#[test]
fn malformed_body_is_a_protocol_error() {
    let mock = serve(Arc::new(|_, _: &Value| (200, json!({"nothing": true}))));
    let backend = WireBackend::new(config(&mock.url));
    let err = solve(&problem(), &EngineConfig::default(), &backend).unwrap_err();
    assert!(matches!(err, EngineError::Backend(BackendError::Protocol(_))), "{err}");
}

#[test]
fn missing_logprobs_mean_full_confidence() {
    let mock = serve(Arc::new(|n, body: &Value| {
        if body["max_tokens"] == 300 {
            (200, choice("It is True", Value::Null))
        } else {
            competent(n, body)
        }
    }));
    let backend = WireBackend::new(config(&mock.url));
    let engine = EngineConfig {
        gamma0: 0.5,
        ..EngineConfig::default()
    };
    let r = solve(&problem(), &engine, &backend).unwrap();
    assert_eq!(r.decided_by, DecidedBy::SelfConsistency);
    assert!(r.verdict);
    assert_eq!(r.last_vote.unwrap().weighted_confidence, 1.0);
}
