//! Remote chat backend and scorer sidecar client against a local stub
//! server speaking just enough HTTP/1.1.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use tootsim::eval::{MockScorer, NliLabel, Scorer, SidecarScorer};
use tootsim::llm::{
    with_budget, ChatBackend, ChatRequest, LlmError, PromptTag, RemoteBackend, RemoteConfig, RetryPolicy, SidecarClient,
};

#[derive(Debug, Clone)]
struct Seen {
    method: String,
    path: String,
    authorization: Option<String>,
    body: Value,
}

type Reply = (u16, String);

/// Serve connections until the process exits. `respond` sees the request
/// index and the parsed request.
fn serve(respond: impl Fn(usize, &Seen) -> Reply + Send + 'static) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let mut parts = line.split_whitespace();
            let method = parts.next().unwrap_or_default().to_string();
            let path = parts.next().unwrap_or_default().to_string();
            let (mut len, mut authorization) = (0, None);
            loop {
                let mut header = String::new();
                reader.read_line(&mut header).unwrap();
                let header = header.trim_end();
                if header.is_empty() {
                    break;
                }
                let (name, value) = header.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => len = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let request = Seen {
                method,
                path,
                authorization,
                body: serde_json::from_slice(&body).unwrap_or(Value::Null),
            };
            let index = {
                let mut all = log.lock().unwrap();
                all.push(request.clone());
                all.len() - 1
            };
            let (status, text) = respond(index, &request);
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (url, seen)
}

fn remote(url: &str) -> RemoteBackend {
    RemoteBackend::new(RemoteConfig {
        base_url: url.to_string(),
        api_key: "test-key".into(),
        model: "stub-model".into(),
        timeout: Duration::from_secs(5),
    })
    .unwrap()
}

fn fast(max_attempts: u32) -> RetryPolicy {
    RetryPolicy {
        max_attempts,
        base_backoff: Duration::from_millis(1),
        multiplier: 2.0,
    }
}

fn completion(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn like_request() -> ChatRequest {
    ChatRequest::new(PromptTag::Like, "Should you like this?", "user_000/1/like/0")
}

#[test]
fn rate_limited_requests_are_retried_until_success() {
    let (url, seen) = serve(|i, _| {
        if i < 2 {
            (429, r#"{"error":"slow down"}"#.into())
        } else {
            (200, completion("  like \n"))
        }
    });
    let llm = with_budget(remote(&url), 2, fast(3)).unwrap();
    assert_eq!(llm.complete_text(&like_request()).unwrap(), "like");

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let first = &seen[0];
    assert_eq!(first.method, "POST");
    assert_eq!(first.path, "/chat/completions");
    assert_eq!(first.authorization.as_deref(), Some("Bearer test-key"));
    assert_eq!(first.body["model"], "stub-model");
    assert_eq!(first.body["messages"][0]["content"], "Should you like this?");
    assert_eq!(first.body["temperature"], 0.0);
}

#[test]
fn persistent_rate_limit_gives_up_after_max_attempts() {
    let (url, seen) = serve(|_, _| (429, "{}".into()));
    let llm = with_budget(remote(&url), 1, fast(4)).unwrap();
    let err = llm.complete(&like_request()).unwrap_err();
    assert!(matches!(err, LlmError::Status { status: 429, .. }), "{err}");
    assert_eq!(seen.lock().unwrap().len(), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = serve(|_, _| (400, r#"{"error":"bad"}"#.into()));
    let llm = with_budget(remote(&url), 1, fast(5)).unwrap();
    assert!(matches!(
        llm.complete(&like_request()),
        Err(LlmError::Status { status: 400, .. })
    ));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn completion_without_content_is_a_bad_response() {
    let (url, _) = serve(|_, _| (200, r#"{"choices":[]}"#.into()));
    assert!(matches!(
        remote(&url).complete(&like_request()),
        Err(LlmError::BadResponse(_))
    ));
}

#[test]
fn unreachable_remote_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = remote(&format!("http://127.0.0.1:{port}"))
        .complete(&like_request())
        .unwrap_err();
    assert!(err.is_retryable(), "{err}");
}

fn sidecar_stub() -> (String, Arc<Mutex<Vec<Seen>>>) {
    serve(|_, req| match (req.method.as_str(), req.path.as_str()) {
        ("GET", "/health") => (200, json!({"status": "ok", "similarity_model": "stub"}).to_string()),
        ("POST", "/similarity") => {
            let c = req.body["candidate"].as_str().unwrap_or_default();
            if c.is_empty() {
                return (400, json!({"error": "empty candidate"}).to_string());
            }
            // Deliberately out of range to exercise clamping.
            let score = if c == req.body["reference"] { 1.02 } else { 0.25 };
            (200, json!({"score": score}).to_string())
        }
        ("POST", "/nli") => {
            let label = if req.body["premise"] == req.body["hypothesis"] {
                "ENTAILMENT"
            } else {
                "neutral"
            };
            (200, json!({"label": label}).to_string())
        }
        _ => (404, "{}".into()),
    })
}

#[test]
fn sidecar_client_speaks_the_scorer_contract() {
    let (url, seen) = sidecar_stub();
    let client = SidecarClient::new(format!("{url}/")).unwrap();
    assert_eq!(client.base_url(), url);
    assert_eq!(client.health().unwrap()["status"], "ok");
    assert_eq!(client.similarity("same", "same").unwrap(), 1.0);
    assert_eq!(client.similarity("a", "b").unwrap(), 0.25);
    assert_eq!(client.nli("p", "p").unwrap(), "ENTAILMENT");
    assert!(matches!(
        client.similarity("", "b"),
        Err(LlmError::Status { status: 400, .. })
    ));

    let seen = seen.lock().unwrap();
    let sim = seen.iter().find(|s| s.path == "/similarity").unwrap();
    assert_eq!(sim.body, json!({"candidate": "same", "reference": "same"}));
    let nli = seen.iter().find(|s| s.path == "/nli").unwrap();
    assert_eq!(nli.body, json!({"premise": "p", "hypothesis": "p"}));
}

#[test]
fn sidecar_scorer_parses_labels_and_checks_health() {
    let (url, _) = sidecar_stub();
    let scorer = SidecarScorer::connect(&url).unwrap();
    assert_eq!(scorer.nli("x", "x").unwrap(), NliLabel::Entailment);
    assert_eq!(scorer.nli("x", "y").unwrap(), NliLabel::Neutral);
    assert!(scorer.name().contains(&url));

    let (down, _) = serve(|_, _| (503, "{}".into()));
    assert!(SidecarScorer::connect(&down).is_err());
    assert!(SidecarClient::new("").is_err());
}

#[test]
fn unknown_sidecar_label_is_an_error() {
    let (url, _) = serve(|_, req| match req.path.as_str() {
        "/health" => (200, "{}".into()),
        _ => (200, json!({"label": "maybe"}).to_string()),
    });
    assert!(SidecarScorer::connect(&url).unwrap().nli("a", "b").is_err());
    // The offline scorer never fails.
    assert!(MockScorer.nli("a", "b").is_ok());
}
