//! Blocking JSON-over-HTTP helper shared by the remote embedding and
//! summarization clients.

use serde::de::DeserializeOwned;
use serde::Serialize;

#[cfg(feature = "remote")]
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

#[cfg(feature = "remote")]
pub fn post_json<Req: Serialize, Resp: DeserializeOwned>(
    url: &str,
    body: &Req,
) -> Result<Resp, String> {
    use std::time::Duration;

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(DEFAULT_TIMEOUT_SECS)))
        .build()
        .into();
    let mut response = agent
        .post(url)
        .send_json(body)
        .map_err(|e| format!("POST {url}: {e}"))?;
    response
        .body_mut()
        .read_json::<Resp>()
        .map_err(|e| format!("POST {url}: bad response body: {e}"))
}

#[cfg(not(feature = "remote"))]
pub fn post_json<Req: Serialize, Resp: DeserializeOwned>(
    url: &str,
    _body: &Req,
) -> Result<Resp, String> {
    Err(format!(
        "cannot reach {url}: built without remote backend support"
    ))
}
