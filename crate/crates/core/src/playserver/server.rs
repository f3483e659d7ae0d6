//! WebSocket front end. Each session runs in its own task; connections
//! talk to it over channels.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tower_http::services::ServeDir;

use super::protocol::{ClientMsg, ServerMsg, PROTOCOL_VERSION};
use super::session::{ClientId, Outbox, Session, SessionConfig};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub session: SessionConfig,
    pub record_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub seed: u64,
}

enum Command {
    Join { client: ClientId, name: String, tx: mpsc::UnboundedSender<ServerMsg> },
    Chat { client: ClientId, text: String },
    Action { client: ClientId, action: usize },
    Leave { client: ClientId },
}

struct Shared {
    cfg: ServerConfig,
    sessions: Mutex<HashMap<String, mpsc::UnboundedSender<Command>>>,
    next_client: AtomicU64,
    next_session: AtomicU64,
}

pub fn router(cfg: ServerConfig) -> Router {
    let static_dir = cfg.static_dir.clone();
    let shared = Arc::new(Shared {
        cfg,
        sessions: Mutex::new(HashMap::new()),
        next_client: AtomicU64::new(1),
        next_session: AtomicU64::new(1),
    });
    let app = Router::new().route("/ws", get(upgrade)).with_state(shared);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

pub async fn serve(addr: SocketAddr, cfg: ServerConfig) -> Result<()> {
    let listener = TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(cfg)).await?;
    Ok(())
}

async fn upgrade(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, shared))
}

fn spawn_session(shared: &Arc<Shared>, ai: Option<String>) -> Result<String> {
    let n = shared.next_session.fetch_add(1, Ordering::Relaxed);
    let id = format!("s{n}");
    let mut cfg = shared.cfg.session.clone();
    if let Some(ai) = ai {
        cfg.ai = ai;
    }
    let grace = cfg.disconnect_grace;
    let session = Session::new(id.clone(), cfg, shared.cfg.seed.wrapping_add(n))?;
    let (tx, rx) = mpsc::unbounded_channel();
    shared.sessions.lock().expect("session map poisoned").insert(id.clone(), tx);
    tokio::spawn(run_session(session, rx, Arc::clone(shared), grace));
    Ok(id)
}

async fn connection(socket: WebSocket, shared: Arc<Shared>) {
    let client = shared.next_client.fetch_add(1, Ordering::Relaxed);
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<ServerMsg>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let text = serde_json::to_string(&msg).expect("server messages serialize");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    let mut joined: Option<mpsc::UnboundedSender<Command>> = None;
    while let Some(Ok(frame)) = stream.next().await {
        let text = match frame {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let msg: ClientMsg = match serde_json::from_str(&text) {
            Ok(m) => m,
            Err(e) => {
                let _ = tx.send(ServerMsg::error(format!("bad message: {e}")));
                continue;
            }
        };
        if msg.version() != PROTOCOL_VERSION {
            let _ = tx.send(ServerMsg::error(format!("unsupported protocol version {}", msg.version())));
            continue;
        }
        let cmd = match msg {
            ClientMsg::Create { ai, .. } => {
                let reply = match spawn_session(&shared, ai) {
                    Ok(session) => ServerMsg::Created { v: PROTOCOL_VERSION, session },
                    Err(e) => ServerMsg::error(e.to_string()),
                };
                let _ = tx.send(reply);
                continue;
            }
            ClientMsg::Join { session, name, .. } => {
                if joined.is_some() {
                    let _ = tx.send(ServerMsg::error("already in a session"));
                    continue;
                }
                let Some(handle) = shared.sessions.lock().expect("session map poisoned").get(&session).cloned() else {
                    let _ = tx.send(ServerMsg::error(format!("no session `{session}`")));
                    continue;
                };
                joined = Some(handle);
                Command::Join { client, name, tx: tx.clone() }
            }
            ClientMsg::Chat { text, .. } => Command::Chat { client, text },
            ClientMsg::Action { action, .. } => Command::Action { client, action },
        };
        match &joined {
            Some(h) if h.send(cmd).is_ok() => {}
            Some(_) => {
                let _ = tx.send(ServerMsg::error("session has ended"));
            }
            None => {
                let _ = tx.send(ServerMsg::error("join a session first"));
            }
        }
    }
    if let Some(h) = joined {
        let _ = h.send(Command::Leave { client });
    }
    drop(tx);
    let _ = writer.await;
}

async fn run_session(mut session: Session, mut rx: mpsc::UnboundedReceiver<Command>, shared: Arc<Shared>, grace: Duration) {
    let mut clients: HashMap<ClientId, mpsc::UnboundedSender<ServerMsg>> = HashMap::new();
    let mut ticker = tokio::time::interval(grace.min(Duration::from_secs(1)).max(Duration::from_millis(10)));
    loop {
        // (client to blame on rejection, outcome)
        let (from, out): (Option<ClientId>, Result<Outbox>) = tokio::select! {
            cmd = rx.recv() => match cmd {
                None => break,
                Some(Command::Join { client, name, tx }) => {
                    clients.insert(client, tx);
                    let r = session.join(client, &name);
                    (Some(client), r)
                }
                Some(Command::Chat { client, text }) => (Some(client), session.chat(client, &text)),
                Some(Command::Action { client, action }) => (Some(client), session.action(client, action)),
                Some(Command::Leave { client }) => {
                    session.disconnect(client, Instant::now());
                    clients.remove(&client);
                    (None, Ok(Vec::new()))
                }
            },
            _ = ticker.tick() => (None, Ok(session.tick(Instant::now()))),
        };
        match (out, from) {
            (Ok(out), _) => {
                for (c, msg) in out {
                    if let Some(tx) = clients.get(&c) {
                        let _ = tx.send(msg);
                    }
                }
            }
            (Err(e), Some(c)) => {
                if let Some(tx) = clients.get(&c) {
                    let _ = tx.send(ServerMsg::error(e.to_string()));
                }
                if session.clients().all(|k| k != c) {
                    clients.remove(&c);
                }
            }
            (Err(e), None) => log::warn!("session {}: {e}", session.id),
        }
        if session.is_over() {
            break;
        }
    }
    shared.sessions.lock().expect("session map poisoned").remove(&session.id);
    if let Some(dir) = &shared.cfg.record_dir {
        let path = dir.join(format!("{}.jsonl", session.id));
        match session.transcript().save(&path) {
            Ok(()) => log::info!("wrote transcript {}", path.display()),
            Err(e) => log::error!("could not write transcript {}: {e}", path.display()),
        }
    }
}
