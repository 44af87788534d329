//! A minimal HTTP/1.1 server on a loopback port, one thread, one request
//! per connection. Enough to exercise the remote scorer client.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use densekg_core::scorer::{ScoreRequest, ScoreResponse, ScoreVector, WireScore, PROTOCOL_VERSION};

pub struct Request {
    pub method: String,
    pub path: String,
    pub body: String,
}

pub type Handler = dyn Fn(&Request) -> (u16, String) + Send + Sync;

pub struct MockService {
    url: String,
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    requests: Arc<AtomicUsize>,
    thread: Option<JoinHandle<()>>,
}

impl MockService {
    pub fn start(handler: impl Fn(&Request) -> (u16, String) + Send + Sync + 'static) -> MockService {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(AtomicUsize::new(0));
        let (stop2, requests2) = (stop.clone(), requests.clone());
        let handler: Box<Handler> = Box::new(handler);
        let thread = thread::spawn(move || {
            for stream in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                if let Some(req) = read_request(&stream) {
                    requests2.fetch_add(1, Ordering::SeqCst);
                    let (status, body) = handler(&req);
                    respond(stream, status, &body);
                }
            }
        });
        MockService {
            url: format!("http://{addr}"),
            addr,
            stop,
            requests,
            thread: Some(thread),
        }
    }

    /// Serves `/score` and `/health` with `score` computing each pair.
    pub fn scoring(model: &str, score: impl Fn(&str, &str) -> ScoreVector + Send + Sync + 'static) -> MockService {
        let model = model.to_string();
        MockService::start(move |req| match (req.method.as_str(), req.path.as_str()) {
            ("GET", "/health") => (200, format!("{{\"status\":\"ok\",\"model\":\"{model}\"}}")),
            ("POST", "/score") => {
                let Ok(r) = serde_json::from_str::<ScoreRequest>(&req.body) else {
                    return (400, "{\"error\":\"bad request\"}".into());
                };
                let resp = ScoreResponse {
                    v: PROTOCOL_VERSION,
                    scores: r
                        .pairs
                        .iter()
                        .map(|p| WireScore::from_vector(&score(&p.head, &p.tail)))
                        .collect(),
                };
                (200, serde_json::to_string(&resp).unwrap())
            }
            _ => (404, "{}".into()),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockService {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn read_request(stream: &TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some(Request {
        method,
        path,
        body: String::from_utf8(body).ok()?,
    })
}

fn respond(mut stream: TcpStream, status: u16, body: &str) {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        429 => "Too Many Requests",
        _ => "Error",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}
