//! Shared test helpers: a minimal scripted HTTP endpoint.

// Each integration-test target compiles its own copy and uses a subset.
#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

pub fn chat_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"content": content}}]
    })
    .to_string()
}

/// Minimal scripted HTTP server. Each incoming request consumes the next
/// scripted (status, body) pair; after the script runs out, every request
/// gets the fallback response. Request arrival times and the peak number of
/// concurrent requests are recorded.
pub struct FakeServer {
    addr: SocketAddr,
    hits: Arc<Mutex<Vec<Instant>>>,
    peak_in_flight: Arc<AtomicUsize>,
    shutdown: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl FakeServer {
    pub fn start(
        script: Vec<(u16, String)>,
        fallback: (u16, String),
        delay: Duration,
    ) -> FakeServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        listener.set_nonblocking(true).expect("nonblocking");
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(Mutex::new(Vec::new()));
        let peak = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let script = Arc::new(Mutex::new(std::collections::VecDeque::from(script)));

        let handle = {
            let hits = hits.clone();
            let peak = peak.clone();
            let shutdown = shutdown.clone();
            std::thread::spawn(move || {
                let in_flight = Arc::new(AtomicUsize::new(0));
                let mut workers = Vec::new();
                while !shutdown.load(Ordering::SeqCst) {
                    match listener.accept() {
                        Ok((stream, _)) => {
                            hits.lock().unwrap().push(Instant::now());
                            let current = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                            peak.fetch_max(current, Ordering::SeqCst);
                            let (status, body) = script
                                .lock()
                                .unwrap()
                                .pop_front()
                                .unwrap_or_else(|| fallback.clone());
                            let in_flight = in_flight.clone();
                            workers.push(std::thread::spawn(move || {
                                serve_one(stream, status, &body, delay);
                                in_flight.fetch_sub(1, Ordering::SeqCst);
                            }));
                        }
                        Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                            std::thread::sleep(Duration::from_millis(2));
                        }
                        Err(_) => break,
                    }
                }
                for w in workers {
                    let _ = w.join();
                }
            })
        };

        FakeServer {
            addr,
            hits,
            peak_in_flight: peak,
            shutdown,
            handle: Some(handle),
        }
    }

    pub fn url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    pub fn hit_times(&self) -> Vec<Instant> {
        self.hits.lock().unwrap().clone()
    }

    pub fn hit_count(&self) -> usize {
        self.hits.lock().unwrap().len()
    }

    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }
}

impl Drop for FakeServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve_one(mut stream: TcpStream, status: u16, body: &str, delay: Duration) {
    stream.set_read_timeout(Some(Duration::from_secs(5))).ok();
    // Read headers, then exactly content-length body bytes.
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    let header_end;
    loop {
        match stream.read(&mut chunk) {
            Ok(0) => return,
            Ok(n) => {
                buf.extend_from_slice(&chunk[..n]);
                if let Some(pos) = find_header_end(&buf) {
                    header_end = pos;
                    break;
                }
            }
            Err(_) => return,
        }
    }
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_lowercase();
    let content_length: usize = headers
        .lines()
        .find_map(|l| l.strip_prefix("content-length:"))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0);
    while buf.len() < header_end + 4 + content_length {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(_) => break,
        }
    }

    std::thread::sleep(delay);
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        400 => "Bad Request",
        _ => "Error",
    };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}
