//! Scripted client against a live server.

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use patchsmith::corpus;
use patchsmith::mesh::{load_obj, save_obj};
use patchsmith::session::decode_buffers;

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start() -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, patchsmith_server::router(Default::default(), None)).await.unwrap() });
    format!("{addr}")
}

async fn create(http: &reqwest::Client, addr: &str, obj: Vec<u8>) -> reqwest::Response {
    http.post(format!("http://{addr}/session?depth=2&resolution=3")).body(obj).send().await.unwrap()
}

async fn next_text(ws: &mut Socket) -> Value {
    loop {
        match ws.next().await.unwrap().unwrap() {
            Message::Text(t) => return serde_json::from_str(&t).unwrap(),
            Message::Ping(_) | Message::Pong(_) => continue,
            other => panic!("expected text, got {other:?}"),
        }
    }
}

/// An update: the JSON frame and the binary frame that follows it.
async fn next_update(ws: &mut Socket) -> (Value, Vec<u8>) {
    let head = next_text(ws).await;
    assert_eq!(head["type"], "update", "{head}");
    match ws.next().await.unwrap().unwrap() {
        Message::Binary(b) => (head, b.to_vec()),
        other => panic!("expected binary, got {other:?}"),
    }
}

async fn send(ws: &mut Socket, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

#[tokio::test]
async fn scripted_session_round_trip() {
    let addr = start().await;
    let http = reqwest::Client::new();
    let created = create(&http, &addr, save_obj(&corpus::cube())).await;
    assert_eq!(created.status(), 201);
    let body: Value = serde_json::from_slice(&created.bytes().await.unwrap()).unwrap();
    let id = body["id"].as_str().unwrap().to_owned();
    assert_eq!(body["patch_count"], 24);

    let (mut ws, _) = connect_async(format!("ws://{addr}/session/{id}/ws")).await.unwrap();
    let (head, bytes) = next_update(&mut ws).await;
    assert_eq!((head["revision"].as_u64(), head["full"].as_bool()), (Some(0), Some(true)));
    assert_eq!(decode_buffers(&bytes).unwrap().euler_characteristic(), 2);

    // Insert an edge between corners of the bottom and top faces.
    let faces = head["control"]["faces"].as_array().unwrap();
    let c1 = json!({ "face": 0, "vertex": faces[0][0] });
    let c2 = json!({ "face": 1, "vertex": faces[1][0] });
    send(&mut ws, json!({ "revision": 0, "op": "insert_edge", "c1": c1, "c2": c2 })).await;
    let (head, bytes) = next_update(&mut ws).await;
    assert_eq!(head["revision"], 1);
    assert_eq!(head["euler_characteristic"], 0);
    assert_eq!(decode_buffers(&bytes).unwrap().euler_characteristic(), 0);

    send(&mut ws, json!({ "op": "sync" })).await;
    let (_, before) = next_update(&mut ws).await;

    // Identity frame edit: nothing changes, and the full buffers are byte-identical.
    send(&mut ws, json!({ "revision": 1, "op": "set_frame", "owner": { "kind": "face", "id": 0 }, "scale": 1.0, "rotation": 0.0 })).await;
    let (head, bytes) = next_update(&mut ws).await;
    assert_eq!(head["revision"], 2);
    assert!(head["changed_patches"].as_array().unwrap().is_empty());
    assert_eq!(decode_buffers(&bytes).unwrap().patches.len(), 0);
    send(&mut ws, json!({ "op": "sync" })).await;
    let (_, after) = next_update(&mut ws).await;
    assert_eq!(before, after);

    // Stale revision: conflict, then the state is unchanged.
    send(&mut ws, json!({ "revision": 0, "op": "delete_edge", "id": 0 })).await;
    let err = next_text(&mut ws).await;
    assert_eq!((err["type"].as_str(), err["error"].as_str(), err["revision"].as_u64()), (Some("error"), Some("ConflictError"), Some(2)));
    send(&mut ws, json!({ "op": "sync" })).await;
    let (head, unchanged) = next_update(&mut ws).await;
    assert_eq!(head["revision"], 2);
    assert_eq!(unchanged, after);

    // Topology errors come back as errors too.
    send(&mut ws, json!({ "revision": 2, "op": "delete_edge", "id": 9999 })).await;
    assert_eq!(next_text(&mut ws).await["error"], "TopologyError");
    send(&mut ws, json!({ "nonsense": true })).await;
    assert_eq!(next_text(&mut ws).await["error"], "EditError");

    // HTTP views follow the session.
    let obj = http.get(format!("http://{addr}/session/{id}/export.obj")).send().await.unwrap().bytes().await.unwrap();
    assert_eq!(load_obj(&obj).unwrap().genus(), 1);
    let csv = http.get(format!("http://{addr}/session/{id}/defects.csv")).send().await.unwrap().text().await.unwrap();
    assert!(csv.starts_with("depth,mode,c1,g1,c2"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
}

#[tokio::test]
async fn vertex_moves_stream_only_dirty_patches() {
    let addr = start().await;
    let http = reqwest::Client::new();
    let body: Value = serde_json::from_slice(&create(&http, &addr, save_obj(&corpus::cube())).await.bytes().await.unwrap()).unwrap();
    let id = body["id"].as_str().unwrap();
    let (mut ws, _) = connect_async(format!("ws://{addr}/session/{id}/ws")).await.unwrap();
    next_update(&mut ws).await;
    send(&mut ws, json!({ "revision": 0, "op": "move_vertex", "id": 0, "position": [-1.4, -1.2, -1.1] })).await;
    let (head, bytes) = next_update(&mut ws).await;
    let changed: Vec<u64> = head["changed_patches"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert!(!changed.is_empty() && changed.len() < 24);
    assert!(head.get("control").is_none());
    let decoded = decode_buffers(&bytes).unwrap();
    let sent: Vec<u64> = decoded.patches.iter().map(|p| p.patch as u64).collect();
    assert_eq!(sent, changed);
}

#[tokio::test]
async fn bad_requests() {
    let addr = start().await;
    let http = reqwest::Client::new();
    let open = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n".to_vec();
    let r = create(&http, &addr, open).await;
    assert_eq!(r.status(), 422);
    assert!(r.text().await.unwrap().starts_with("BoundaryError"));
    let missing = http.get(format!("http://{addr}/session/00000000-0000-0000-0000-000000000000/export.obj")).send().await.unwrap();
    assert_eq!(missing.status(), 404);
    let junk = http.get(format!("http://{addr}/session/not-an-id/defects.csv")).send().await.unwrap();
    assert_eq!(junk.status(), 404);
}
