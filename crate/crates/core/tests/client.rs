mod common;

use std::time::Duration;

use axum::http::StatusCode;
use serde_json::json;

use common::{chat_reply, MockServer};
use testbench::generation::{ChatClient, GenerationError, ModelSpec, RetryPolicy};
use testbench::prompting::{Message, Role};

fn spec(server: &MockServer, max_retries: u32) -> ModelSpec {
    ModelSpec {
        model: "mock".into(),
        temperature: 0.7,
        endpoint_url: server.endpoint(),
        api_key_env: None,
        max_retries,
        timeout: Duration::from_secs(5),
    }
}

fn client() -> ChatClient {
    ChatClient::new().with_retry_policy(RetryPolicy {
        base: Duration::from_millis(5),
        max: Duration::from_millis(20),
    })
}

fn messages() -> Vec<Message> {
    vec![
        Message { role: Role::System, content: "be brief".into() },
        Message { role: Role::User, content: "write a test".into() },
    ]
}

fn block_on<F: std::future::Future>(f: F) -> F::Output {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap().block_on(f)
}

#[test]
fn retries_through_rate_limits() {
    let server = MockServer::start(|n, _| match n {
        0 | 1 => (StatusCode::TOO_MANY_REQUESTS, json!({ "error": "slow down" })),
        _ => (StatusCode::OK, chat_reply("```java\nclass T {}\n```")),
    });
    let reply = block_on(client().request_completion(&spec(&server, 3), &messages(), "a")).unwrap();
    assert_eq!(reply, "```java\nclass T {}\n```");
    assert_eq!(server.request_count(), 3);
}

#[test]
fn server_error_without_retries_fails_once() {
    let server = MockServer::start(|_, _| (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": "boom" })));
    let err = block_on(client().request_completion(&spec(&server, 0), &messages(), "a")).unwrap_err();
    match err {
        GenerationError::Endpoint { attempts, status, .. } => assert_eq!((attempts, status), (1, Some(500))),
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(server.request_count(), 1);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(|_, _| (StatusCode::BAD_REQUEST, json!({ "error": "bad" })));
    let err = block_on(client().request_completion(&spec(&server, 5), &messages(), "a")).unwrap_err();
    assert!(matches!(err, GenerationError::Endpoint { status: Some(400), .. }));
    assert_eq!(server.request_count(), 1);
}

#[test]
fn request_body_carries_configuration() {
    let server = MockServer::start(|_, _| (StatusCode::OK, chat_reply("ok")));
    block_on(client().request_completion(&spec(&server, 0), &messages(), "a")).unwrap();
    let body = server.requests.lock().unwrap()[0].clone();
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["model"], "mock");
    assert_eq!(
        body["messages"],
        json!([{ "role": "system", "content": "be brief" }, { "role": "user", "content": "write a test" }])
    );
}

#[test]
fn malformed_reply_is_a_protocol_error() {
    let server = MockServer::start(|_, _| (StatusCode::OK, json!({ "choices": [] })));
    let err = block_on(client().request_completion(&spec(&server, 0), &messages(), "a")).unwrap_err();
    assert!(matches!(err, GenerationError::Protocol { .. }));
}
