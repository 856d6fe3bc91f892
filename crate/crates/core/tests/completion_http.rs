//! The completion client against a scripted local HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use peerarg_core::adapters::{
    AspectPromptTemplate, Completion, CompletionClient, CompletionEndpoint, CompletionError, LlmAspectClassifier,
};
use peerarg_core::extraction::{AspectClass, AspectClassifier, ReviewSentence};
use peerarg_core::AspectLabel;

#[derive(Clone)]
struct Reply {
    status: u16,
    body: String,
    delay: Duration,
}

fn ok(body: &str) -> Reply {
    Reply { status: 200, body: body.into(), delay: Duration::ZERO }
}

fn status(code: u16) -> Reply {
    Reply { status: code, body: "{}".into(), delay: Duration::ZERO }
}

struct Captured {
    headers: Vec<String>,
    body: String,
}

struct Stub {
    url: String,
    requests: Arc<Mutex<Vec<Captured>>>,
    peak: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Captured {
    let mut reader = BufReader::new(stream);
    let mut headers = Vec::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            break;
        }
        let line = line.trim_end().to_string();
        if line.is_empty() {
            break;
        }
        headers.push(line);
    }
    let header = |name: &str| {
        headers.iter().find_map(|h| {
            let (k, v) = h.split_once(':')?;
            k.trim().eq_ignore_ascii_case(name).then(|| v.trim().to_string())
        })
    };
    let mut body = Vec::new();
    if let Some(len) = header("content-length") {
        body.resize(len.parse().unwrap(), 0);
        reader.read_exact(&mut body).unwrap();
    } else if header("transfer-encoding").is_some_and(|v| v.eq_ignore_ascii_case("chunked")) {
        loop {
            let mut size = String::new();
            reader.read_line(&mut size).unwrap();
            let n = usize::from_str_radix(size.trim(), 16).unwrap();
            let mut chunk = vec![0; n + 2];
            reader.read_exact(&mut chunk).unwrap();
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
    }
    Captured { headers, body: String::from_utf8(body).unwrap() }
}

/// Serves `script` in order (the last reply repeats), one thread per
/// connection.
fn serve(script: Vec<Reply>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let peak = Arc::new(AtomicUsize::new(0));
    let active = Arc::new(AtomicUsize::new(0));
    let served = Arc::new(AtomicUsize::new(0));
    {
        let (requests, peak) = (requests.clone(), peak.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let (requests, peak, active, served) = (requests.clone(), peak.clone(), active.clone(), served.clone());
                let script = script.clone();
                thread::spawn(move || {
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    let captured = read_request(&mut stream);
                    requests.lock().unwrap().push(captured);
                    let n = served.fetch_add(1, Ordering::SeqCst);
                    let reply = script[n.min(script.len() - 1)].clone();
                    thread::sleep(reply.delay);
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        reply.status,
                        reply.body.len(),
                        reply.body
                    );
                    let _ = stream.flush();
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
    }
    Stub { url, requests, peak }
}

fn endpoint(url: &str) -> CompletionEndpoint {
    let mut e = CompletionEndpoint::new(url, "test-model");
    e.timeout = Duration::from_secs(5);
    e.backoff = Duration::from_millis(5);
    e.max_retries = 2;
    e
}

#[test]
fn classifier_round_trip() {
    let stub = serve(vec![ok(r#"{"text": " CLA\nSentence: next"}"#)]);
    let mut e = endpoint(&stub.url);
    e.api_key = Some("secret".into());
    let client: Arc<dyn Completion> = Arc::new(CompletionClient::new(e).unwrap());
    let classifier = LlmAspectClassifier::new(client, AspectPromptTemplate::default_template().compile());
    let sentence = ReviewSentence { index: 0, text: "The writing is easy to follow.".into() };
    let got = classifier.classify(&sentence).unwrap();
    assert_eq!(got.into_iter().collect::<Vec<_>>(), vec![AspectClass::Aspect(AspectLabel::Clarity)]);

    let requests = stub.requests.lock().unwrap();
    assert_eq!(requests.len(), 1);
    let body: serde_json::Value = serde_json::from_str(&requests[0].body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert!(body["max_tokens"].as_u64().unwrap() > 0);
    let prompt = body["prompt"].as_str().unwrap();
    assert!(prompt.ends_with("Sentence: The writing is easy to follow.\nAspects: "));
    assert!(requests[0].headers.iter().any(|h| h == "authorization: Bearer secret" || h == "Authorization: Bearer secret"));
}

#[test]
fn retries_transient_failures() {
    let stub = serve(vec![status(503), status(429), ok(r#"{"text": "accept"}"#)]);
    let client = CompletionClient::new(endpoint(&stub.url)).unwrap();
    assert_eq!(client.complete("p").unwrap(), "accept");
    assert_eq!(stub.requests.lock().unwrap().len(), 3);
}

#[test]
fn gives_up_after_retries() {
    let stub = serve(vec![status(500)]);
    let client = CompletionClient::new(endpoint(&stub.url)).unwrap();
    match client.complete("p") {
        Err(CompletionError::ServiceUnavailable { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(stub.requests.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = serve(vec![status(401)]);
    let client = CompletionClient::new(endpoint(&stub.url)).unwrap();
    assert!(matches!(client.complete("p"), Err(CompletionError::ServiceUnavailable { attempts: 1, .. })));
    assert_eq!(stub.requests.lock().unwrap().len(), 1);
}

#[test]
fn missing_text_field_is_malformed() {
    let stub = serve(vec![ok(r#"{"choices": []}"#)]);
    let client = CompletionClient::new(endpoint(&stub.url)).unwrap();
    assert!(matches!(client.complete("p"), Err(CompletionError::MalformedResponse(_))));
    let stub = serve(vec![ok("not json")]);
    let client = CompletionClient::new(endpoint(&stub.url)).unwrap();
    assert!(matches!(client.complete("p"), Err(CompletionError::MalformedResponse(_))));
}

#[test]
fn unreachable_service() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let client = CompletionClient::new(endpoint(&format!("http://127.0.0.1:{port}/x"))).unwrap();
    assert!(matches!(client.complete("p"), Err(CompletionError::ServiceUnavailable { attempts: 3, .. })));
}

#[test]
fn slow_service_times_out() {
    let stub = serve(vec![Reply { delay: Duration::from_millis(600), ..ok(r#"{"text": "x"}"#) }]);
    let mut e = endpoint(&stub.url);
    e.timeout = Duration::from_millis(150);
    e.max_retries = 1;
    let client = CompletionClient::new(e).unwrap();
    assert!(matches!(client.complete("p"), Err(CompletionError::Timeout { attempts: 2 })));
}

#[test]
fn in_flight_requests_are_capped() {
    let stub = serve(vec![Reply { delay: Duration::from_millis(60), ..ok(r#"{"text": "x"}"#) }]);
    let mut e = endpoint(&stub.url);
    e.max_in_flight = 2;
    let client = Arc::new(CompletionClient::new(e).unwrap());
    let handles: Vec<_> = (0..6)
        .map(|_| {
            let c = client.clone();
            thread::spawn(move || c.complete("p").unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), "x");
    }
    assert_eq!(stub.requests.lock().unwrap().len(), 6);
    assert!(stub.peak.load(Ordering::SeqCst) <= 2);
}

#[test]
fn invalid_endpoints_are_rejected() {
    let mut e = endpoint("http://127.0.0.1:1/x");
    e.max_in_flight = 0;
    assert!(matches!(CompletionClient::new(e), Err(CompletionError::InvalidEndpoint(_))));
    assert!(matches!(CompletionClient::new(endpoint("")), Err(CompletionError::InvalidEndpoint(_))));
}
