#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nbdeck::service::{router, AppState, Backends};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn notebook_json(rel: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixtures().join(rel)).unwrap()).unwrap()
}

/// Serve `state` on an ephemeral port; returns the base URL.
pub async fn start(state: AppState) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(state)).await.unwrap();
    });
    format!("http://{addr}")
}

pub async fn start_builtin() -> String {
    start(AppState::new(Backends::builtin())).await
}

#[derive(Clone)]
pub struct Api {
    pub base: String,
    pub client: Client,
}

impl Api {
    pub fn new(base: String) -> Self {
        Api {
            base,
            client: Client::new(),
        }
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> (StatusCode, Value) {
        let resp = req.send().await.unwrap();
        let status = resp.status();
        let body = resp.json::<Value>().await.unwrap_or(Value::Null);
        (status, body)
    }

    pub async fn create(&self, notebook: Value, config: Value) -> (StatusCode, Value) {
        let url = format!("{}/api/decks", self.base);
        self.send(
            self.client
                .post(url)
                .json(&json!({"notebook": notebook, "config": config})),
        )
        .await
    }

    pub async fn get(&self, path: &str) -> (StatusCode, Value) {
        self.send(self.client.get(format!("{}{path}", self.base)))
            .await
    }

    pub async fn edit(
        &self,
        deck: &str,
        slide: &str,
        revision: u64,
        patch: Value,
    ) -> (StatusCode, Value) {
        let mut body = patch;
        body["expected_revision"] = json!(revision);
        let url = format!("{}/api/decks/{deck}/slides/{slide}", self.base);
        self.send(self.client.patch(url).json(&body)).await
    }

    pub async fn add(
        &self,
        deck: &str,
        after: &str,
        title: &str,
        revision: u64,
    ) -> (StatusCode, Value) {
        let url = format!("{}/api/decks/{deck}/slides", self.base);
        let body = json!({"expected_revision": revision, "after": after, "title": title});
        self.send(self.client.post(url).json(&body)).await
    }

    pub async fn delete(&self, deck: &str, slide: &str, revision: u64) -> (StatusCode, Value) {
        let url = format!(
            "{}/api/decks/{deck}/slides/{slide}?expected_revision={revision}",
            self.base
        );
        self.send(self.client.delete(url)).await
    }

    /// (status, content type, body bytes)
    pub async fn export(&self, deck: &str, format: &str) -> (StatusCode, String, Vec<u8>) {
        let url = format!("{}/api/decks/{deck}/export?format={format}", self.base);
        let resp = self.client.get(url).send().await.unwrap();
        let status = resp.status();
        let ct = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .map(|v| v.to_str().unwrap().to_string())
            .unwrap_or_default();
        (status, ct, resp.bytes().await.unwrap().to_vec())
    }
}

pub fn bullets(deck: &Value, slide: &str) -> Vec<String> {
    deck["slides"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["id"] == slide)
        .map(|s| {
            s["bullets"]
                .as_array()
                .unwrap()
                .iter()
                .map(|b| b["text"].as_str().unwrap().to_string())
                .collect()
        })
        .unwrap_or_default()
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// create, edit with a stale revision (409), edit with the right one, export.
pub async fn scripted_session(api: &Api) -> Result<String, String> {
    let (status, deck) = api
        .create(
            notebook_json("demo/wine_quality.ipynb"),
            json!({"title": "Wine"}),
        )
        .await;
    ensure!(status == StatusCode::CREATED, "create returned {status}");
    let id = deck["deck_id"].as_str().ok_or("no deck_id")?.to_string();
    ensure!(
        deck["revision"] == 0,
        "new deck at revision {}",
        deck["revision"]
    );

    let patch = json!({"title": "What the data shows"});
    let (status, body) = api.edit(&id, "eda", 3, patch.clone()).await;
    ensure!(
        status == StatusCode::CONFLICT,
        "stale edit returned {status}"
    );
    ensure!(body["current_revision"] == 0, "conflict body {body}");
    let (_, unchanged) = api.get(&format!("/api/decks/{id}")).await;
    ensure!(unchanged == deck, "a rejected edit changed the deck");

    let (status, edited) = api.edit(&id, "eda", 0, patch).await;
    ensure!(status == StatusCode::OK, "edit returned {status}");
    ensure!(
        edited["revision"] == 1,
        "edit left revision at {}",
        edited["revision"]
    );

    let (status, ct, bytes) = api.export(&id, "json").await;
    ensure!(
        status == StatusCode::OK && ct == "application/json",
        "export returned {status} {ct}"
    );
    let exported = nbdeck_core::import_deck(&bytes).map_err(|e| e.to_string())?;
    let title = exported.slide("eda").map(|s| s.title.as_str());
    ensure!(
        title == Some("What the data shows"),
        "export carries title {title:?}"
    );
    ensure!(
        serde_json::to_value(&exported).unwrap() == edited,
        "export differs from the served deck"
    );
    Ok(format!(
        "{id}: 409 on stale revision, edit at 0 -> 1, export re-imports"
    ))
}

/// Concurrent edits on two decks; each deck only ever sees its own.
pub async fn interleaved_edits(api: &Api, rounds: u64) -> Result<String, String> {
    let (_, a) = api
        .create(
            notebook_json("demo/wine_quality.ipynb"),
            json!({"title": "A"}),
        )
        .await;
    let (_, b) = api
        .create(
            notebook_json("corpus/00_titanic.ipynb"),
            json!({"title": "B"}),
        )
        .await;
    let (ida, idb) = (
        a["deck_id"].as_str().unwrap().to_string(),
        b["deck_id"].as_str().unwrap().to_string(),
    );
    ensure!(ida != idb, "two decks share id {ida}");

    let run = |id: String, tag: &'static str| async move {
        for r in 0..rounds {
            let slide = if r % 2 == 0 { "eda" } else { "metrics" };
            let (status, _) = api
                .edit(
                    &id,
                    slide,
                    r,
                    json!({"bullets": [format!("{tag} edit {r}")]}),
                )
                .await;
            if status != StatusCode::OK {
                return Err(format!("{tag} edit {r} returned {status}"));
            }
        }
        Ok(())
    };
    let (ra, rb) = tokio::join!(run(ida.clone(), "deck-a"), run(idb.clone(), "deck-b"));
    ra?;
    rb?;

    for (id, own, other) in [(&ida, "deck-a", "deck-b"), (&idb, "deck-b", "deck-a")] {
        let (_, deck) = api.get(&format!("/api/decks/{id}")).await;
        ensure!(
            deck["revision"] == rounds,
            "{id} at revision {} after {rounds} edits",
            deck["revision"]
        );
        let text = deck.to_string();
        ensure!(
            !text.contains(other),
            "{id} contains text of the other deck"
        );
        let last = |slide| bullets(&deck, slide);
        ensure!(
            last("eda")
                .iter()
                .chain(&last("metrics"))
                .all(|b| b.starts_with(own)),
            "{id} edited slides hold foreign bullets"
        );
    }
    let (_, a2) = api.get(&format!("/api/decks/{ida}")).await;
    ensure!(a2["slides"][0] == a["slides"][0], "untouched slide changed");
    Ok(format!(
        "{rounds} interleaved edits per deck, no cross-contamination"
    ))
}
