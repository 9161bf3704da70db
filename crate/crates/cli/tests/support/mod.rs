#![allow(dead_code)]

use std::io::Cursor;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use choroidseg_core::phantom::{Phantom, PhantomSpec};
use choroidseg_core::GrayImage;
use http_body_util::BodyExt;
use tower::ServiceExt;

pub fn small_phantom(seed: u64) -> Phantom {
    PhantomSpec {
        rows: 180,
        cols: 90,
        rpe_row: 70.0,
        retina_thickness: 40.0,
        choroid_height: 50.0,
        noise_sigma: 4.0,
        vessels: 4,
        seed,
        ..PhantomSpec::default()
    }
    .generate()
    .unwrap()
}

pub fn png_bytes(image: &GrayImage) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    image
        .to_luma8()
        .write_to(&mut buf, image::ImageFormat::Png)
        .unwrap();
    buf.into_inner()
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }
}

pub async fn send(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> Reply {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .body(body.into())
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let body = response
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        headers,
        body,
    }
}

/// Uploads a scan and returns its session id.
pub async fn upload(app: &Router, bytes: Vec<u8>) -> String {
    let reply = send(app, Method::POST, "/api/scans", bytes).await;
    assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.text());
    reply.json()["session_id"].as_str().unwrap().to_string()
}
