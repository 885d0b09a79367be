//! Drive the HTTP API in-process: upload, shortlist, run, partitions.
//!
//! ```text
//! cargo run -p chardiff-service --example walkthrough
//! ```

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use chardiff_service::{router, AppState, ServiceConfig};

const Y2016: &str = include_str!("../../core/data/employees_2016.csv");
const Y2017: &str = include_str!("../../core/data/employees_2017.csv");

async fn call(app: &Router, req: Request<Body>) -> Value {
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let status = resp.status();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    let value: Value = serde_json::from_slice(&bytes).expect("JSON body");
    assert!(status.is_success(), "{status}: {value}");
    value
}

fn upload() -> Request<Body> {
    let b = "walkthrough";
    let mut body = String::new();
    for (name, value) in [("source", Y2016), ("target", Y2017), ("key", "name")] {
        body += &format!("--{b}\r\nContent-Disposition: form-data; name=\"{name}\"\r\n\r\n{value}\r\n");
    }
    body += &format!("--{b}--\r\n");
    Request::post("/sessions")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={b}"))
        .body(Body::from(body))
        .unwrap()
}

#[tokio::main]
async fn main() {
    let app = router(Arc::new(AppState::new(ServiceConfig::default()).unwrap()));

    let session = call(&app, upload()).await;
    let id = session["session_id"].as_str().unwrap().to_string();
    println!("session {id}: {} rows", session["row_count"]);

    let shortlist = call(
        &app,
        Request::get(format!("/sessions/{id}/shortlist?target=bonus"))
            .body(Body::empty())
            .unwrap(),
    )
    .await;
    for a in shortlist["condition"].as_array().unwrap() {
        println!(
            "  condition candidate {:<8} {:.3}",
            a["attribute"].as_str().unwrap(),
            a["association"].as_f64().unwrap()
        );
    }

    let body = json!({
        "target": "bonus",
        "cond_attrs": ["edu", "exp", "gen"],
        "tran_attrs": ["bonus", "salary"],
        "c": 2, "t": 1, "alpha": 0.5, "top_n": 3
    });
    let run = call(
        &app,
        Request::post(format!("/sessions/{id}/runs"))
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(body.to_string()))
            .unwrap(),
    )
    .await;
    let run_id = run["run_id"].as_str().unwrap();
    for s in run["summaries"].as_array().unwrap() {
        println!("rank {} score {:.4}", s["rank"], s["score"]["score"].as_f64().unwrap());
        for ct in s["cts"].as_array().unwrap() {
            println!(
                "    {} -> {}",
                ct["condition"]["text"].as_str().unwrap(),
                ct["transformation"]["text"].as_str().unwrap()
            );
        }
    }

    let uri = format!("/sessions/{id}/runs/{run_id}/summaries/1/partitions");
    for p in call(&app, Request::get(uri).body(Body::empty()).unwrap())
        .await
        .as_array()
        .unwrap()
    {
        let r = &p["rectangle"];
        println!(
            "{:<24} {:>6.2}%  y = {:.3}, height = {:.3}{}",
            p["condition"].as_str().unwrap(),
            p["coverage_percent"].as_f64().unwrap(),
            r["y"].as_f64().unwrap(),
            r["height"].as_f64().unwrap(),
            if p["changed"].as_bool().unwrap() {
                ""
            } else {
                "  (unchanged)"
            }
        );
    }
}
