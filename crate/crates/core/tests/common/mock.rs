//! A minimal JSON-over-HTTP endpoint for exercising the remote backends.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};

use serde_json::Value;

pub struct MockEndpoint {
    pub url: String,
    /// Request bodies in arrival order.
    pub requests: Arc<Mutex<Vec<Value>>>,
}

pub fn spawn(handler: impl Fn(&Value) -> Value + Send + Sync + 'static) -> MockEndpoint {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = requests.clone();
    let handler = Arc::new(handler);
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let (log, handler) = (log.clone(), handler.clone());
            std::thread::spawn(move || connection(stream, &log, &*handler));
        }
    });
    MockEndpoint { url, requests }
}

fn connection(stream: TcpStream, log: &Mutex<Vec<Value>>, handler: &dyn Fn(&Value) -> Value) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    loop {
        let mut length = 0;
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    length = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; length];
        if reader.read_exact(&mut body).is_err() {
            return;
        }
        let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        let response = handler(&request).to_string();
        log.lock().unwrap().push(request);
        let head = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n",
            response.len()
        );
        if out
            .write_all(head.as_bytes())
            .and_then(|_| out.write_all(response.as_bytes()))
            .is_err()
        {
            return;
        }
    }
}
