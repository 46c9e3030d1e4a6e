#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::Duration;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tissuelens")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn tissuelens")
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// `tissuelens serve` on an ephemeral port, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(data: &Path) -> Server {
        let mut child = Command::new(bin())
            .args(["serve", "--data", data.to_str().unwrap(), "--port", "0"])
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .expect("spawn server");
        let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
        let base = loop {
            match lines.next() {
                Some(Ok(line)) => {
                    if let Some(url) = line.strip_prefix("listening on ") {
                        break url.trim().to_string();
                    }
                }
                _ => {
                    let status = child.wait().unwrap();
                    panic!("server exited before listening: {status}");
                }
            }
        };
        std::thread::spawn(move || for _ in lines {});
        Server { child, base }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub fn get_json(&self, path: &str) -> serde_json::Value {
        ureq::get(&self.url(path))
            .call()
            .expect("GET")
            .into_json()
            .expect("json body")
    }

    pub fn post_json(&self, path: &str, body: &serde_json::Value) -> serde_json::Value {
        ureq::post(&self.url(path))
            .send_json(body)
            .expect("POST")
            .into_json()
            .expect("json body")
    }

    /// Posts a whole-image search and polls the job until it settles.
    pub fn whole_search(&self, body: &serde_json::Value) -> serde_json::Value {
        let job = self.post_json("/api/search", body);
        let id = job["id"].as_str().expect("job id").to_string();
        for _ in 0..2400 {
            let status = self.get_json(&format!("/api/search/{id}"));
            match status["state"].as_str() {
                Some("pending") => std::thread::sleep(Duration::from_millis(50)),
                Some("done") => return status["result"].clone(),
                other => panic!("search job ended in {other:?}: {status}"),
            }
        }
        panic!("search job {id} timed out");
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
