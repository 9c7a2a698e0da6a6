use std::collections::VecDeque;
use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::http::{HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use serde_json::json;
use stimstream_core::corpus::{Account, AccountKind, GeoCircle, GeoPoint, VisibilityLevel};
use stimstream_core::eventlog::EventLogEntry;

use crate::engine::{EngineError, Page};
use crate::service::Exercise;

pub const BANNER_HEADER: &str = "x-exercise-banner";
const DEFAULT_PAGE: usize = 100;
const MAX_PAGE: usize = 1000;

type Shared = Arc<Exercise>;

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "auth", "missing or invalid session token")
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let (status, code) = match &e {
            EngineError::Text(_) | EngineError::BadHandle(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            EngineError::UnknownMessage(_) => (StatusCode::NOT_FOUND, "not_found"),
            EngineError::NoGhosts | EngineError::Sink(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// The account behind a `Bearer` token (or a `token` query parameter, for clients
/// that cannot set headers on a push connection).
pub struct Authed(pub Account);

#[derive(Deserialize)]
struct TokenQuery {
    token: Option<String>,
}

impl FromRequestParts<Shared> for Authed {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Shared) -> Result<Self, Self::Rejection> {
        let header = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::to_string);
        let token = match header {
            Some(t) => t,
            None => Query::<TokenQuery>::try_from_uri(&parts.uri)
                .ok()
                .and_then(|q| q.0.token)
                .ok_or_else(ApiError::unauthorized)?,
        };
        state.session(token.trim()).map(Authed).ok_or_else(ApiError::unauthorized)
    }
}

pub fn router(exercise: Shared) -> Router {
    let banner = HeaderValue::from_str(exercise.banner()).unwrap_or_else(|_| HeaderValue::from_static("EXERCISE"));
    Router::new()
        .route("/session", post(create_session))
        .route("/messages", post(post_message))
        .route("/messages/{id}", get(get_message))
        .route("/retweets", post(post_retweet))
        .route("/inject", post(inject))
        .route("/trending", get(trending))
        .route("/topics/{topic}", get(topic))
        .route("/stream", get(stream_page))
        .route("/map", get(map))
        .route("/profiles/{handle}", get(profile))
        .route("/clock", get(clock))
        .route("/control/pause", post(pause))
        .route("/control/resume", post(resume))
        .route("/subscribe", get(subscribe))
        .layer(axum::middleware::map_response(move |mut res: Response| {
            let banner = banner.clone();
            async move {
                res.headers_mut().insert(HeaderName::from_static(BANNER_HEADER), banner);
                res
            }
        }))
        .with_state(exercise)
}

#[derive(Deserialize)]
struct Credentials {
    handle: String,
    password: String,
}

#[derive(Serialize)]
struct SessionOut {
    token: String,
    account: Account,
    banner: String,
}

async fn create_session(State(ex): State<Shared>, Json(c): Json<Credentials>) -> ApiResult<SessionOut> {
    let (token, account) = ex
        .login(&c.handle, &c.password)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "auth", "unknown handle or wrong password"))?;
    Ok(Json(SessionOut { token, account, banner: ex.banner().to_string() }))
}

#[derive(Deserialize)]
struct LatLon {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct PostIn {
    text: String,
    #[serde(default)]
    geo: Option<LatLon>,
}

async fn post_message(
    State(ex): State<Shared>,
    Authed(account): Authed,
    Json(body): Json<PostIn>,
) -> Result<(StatusCode, Json<EventLogEntry>), ApiError> {
    let geo = body
        .geo
        .map(|g| GeoPoint::new(g.lat, g.lon))
        .transpose()
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", e.to_string()))?;
    let entry = ex.mutate(|engine, now| engine.post(now, &account, &body.text, geo))?;
    Ok((StatusCode::CREATED, Json(entry)))
}

#[derive(Deserialize)]
struct RetweetIn {
    id: u64,
}

async fn post_retweet(
    State(ex): State<Shared>,
    Authed(account): Authed,
    Json(body): Json<RetweetIn>,
) -> Result<(StatusCode, Json<EventLogEntry>), ApiError> {
    let entry = ex.mutate(|engine, now| engine.retweet(now, &account, body.id))?;
    Ok((StatusCode::CREATED, Json(entry)))
}

#[derive(Deserialize)]
struct InjectIn {
    text: String,
    visibility: VisibilityLevel,
    #[serde(default)]
    author: Option<String>,
}

async fn inject(
    State(ex): State<Shared>,
    Authed(account): Authed,
    Json(body): Json<InjectIn>,
) -> Result<(StatusCode, Json<EventLogEntry>), ApiError> {
    require_controller(&account)?;
    let entry = ex.mutate(|engine, now| engine.inject(now, &body.text, body.visibility, body.author.as_deref()))?;
    Ok((StatusCode::CREATED, Json(entry)))
}

fn require_controller(account: &Account) -> Result<(), ApiError> {
    if account.kind == AccountKind::Controller {
        Ok(())
    } else {
        Err(ApiError::new(StatusCode::FORBIDDEN, "forbidden", "controller session required"))
    }
}

async fn get_message(State(ex): State<Shared>, _: Authed, Path(id): Path<u64>) -> ApiResult<serde_json::Value> {
    ex.read(|e| e.message(id).map(|m| json!(m)))
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("message {id} not found")))
}

#[derive(Deserialize)]
struct TrendingQuery {
    k: Option<usize>,
}

async fn trending(State(ex): State<Shared>, _: Authed, Query(q): Query<TrendingQuery>) -> ApiResult<serde_json::Value> {
    let now = ex.clock().now();
    let k = q.k.unwrap_or(20);
    let topics = ex.engine.lock().trending(now, k);
    Ok(Json(json!({ "scenario_time": now, "topics": topics })))
}

#[derive(Deserialize)]
struct PageQuery {
    #[serde(default)]
    since: u64,
    limit: Option<usize>,
}

impl PageQuery {
    fn limit(&self) -> usize {
        self.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE)
    }
}

async fn topic(
    State(ex): State<Shared>,
    _: Authed,
    Path(topic): Path<String>,
    Query(q): Query<PageQuery>,
) -> ApiResult<Page> {
    Ok(Json(ex.read(|e| e.topic(&topic, q.since, q.limit()))))
}

async fn stream_page(State(ex): State<Shared>, _: Authed, Query(q): Query<PageQuery>) -> ApiResult<Page> {
    Ok(Json(ex.read(|e| e.stream(q.since, q.limit()))))
}

#[derive(Deserialize)]
struct MapQuery {
    topic: Option<String>,
    lat: Option<f64>,
    lon: Option<f64>,
    radius_m: Option<f64>,
}

async fn map(State(ex): State<Shared>, _: Authed, Query(q): Query<MapQuery>) -> ApiResult<serde_json::Value> {
    let invalid = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", m);
    let circle = match (q.lat, q.lon, q.radius_m) {
        (None, None, None) => None,
        (Some(lat), Some(lon), Some(r)) => {
            let center = GeoPoint::new(lat, lon).map_err(|e| invalid(e.to_string()))?;
            Some(GeoCircle::new(center, r).map_err(|e| invalid(e.to_string()))?)
        }
        _ => return Err(invalid("lat, lon and radius_m must be given together".into())),
    };
    let pins = ex.read(|e| e.map(q.topic.as_deref(), circle.as_ref()));
    Ok(Json(json!({ "pins": pins })))
}

async fn profile(State(ex): State<Shared>, _: Authed, Path(handle): Path<String>) -> ApiResult<Account> {
    ex.read(|e| e.profile(&handle).cloned())
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no account {handle:?}")))
}

fn clock_view(ex: &Exercise) -> serde_json::Value {
    let snap = ex.clock().snapshot();
    let (progress, idle) = ex.read(|e| (e.progress(), e.is_idle()));
    json!({
        "scenario_time": snap.scenario_time,
        "compression": snap.compression,
        "paused": snap.paused,
        "start_unix_ms": snap.start_unix_ms,
        "plan_total": progress.plan_total,
        "plan_emitted": progress.plan_emitted,
        "pending_retweets": progress.pending_retweets,
        "log_len": progress.log_len,
        "complete": idle,
    })
}

async fn clock(State(ex): State<Shared>, _: Authed) -> ApiResult<serde_json::Value> {
    Ok(Json(clock_view(&ex)))
}

async fn pause(State(ex): State<Shared>, Authed(account): Authed) -> ApiResult<serde_json::Value> {
    require_controller(&account)?;
    ex.pause();
    Ok(Json(clock_view(&ex)))
}

async fn resume(State(ex): State<Shared>, Authed(account): Authed) -> ApiResult<serde_json::Value> {
    require_controller(&account)?;
    ex.resume();
    Ok(Json(clock_view(&ex)))
}

#[derive(Deserialize)]
struct SubscribeQuery {
    since: Option<u64>,
}

/// Pushes every entry after the resume point, one event per entry with `id` = seq.
async fn subscribe(
    State(ex): State<Shared>,
    _: Authed,
    headers: HeaderMap,
    Query(q): Query<SubscribeQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let last_event =
        headers.get("last-event-id").and_then(|v| v.to_str().ok()).and_then(|v| v.trim().parse::<u64>().ok());
    let since = q.since.or(last_event).unwrap_or(0);
    let rx = ex.subscribe_head();
    let state = (ex, since, rx, VecDeque::<EventLogEntry>::new());
    let events = stream::unfold(state, |(ex, mut cursor, mut rx, mut buf)| async move {
        loop {
            if let Some(entry) = buf.pop_front() {
                cursor = entry.seq;
                let event = Event::default().id(entry.seq.to_string()).json_data(&entry).expect("entries serialize");
                return Some((Ok(event), (ex, cursor, rx, buf)));
            }
            rx.borrow_and_update();
            let page = ex.read(|e| e.stream(cursor, MAX_PAGE));
            if !page.entries.is_empty() {
                buf.extend(page.entries);
                continue;
            }
            // Closing only after the log is drained, so no subscriber misses the tail.
            if ex.is_closed() || rx.changed().await.is_err() {
                return None;
            }
        }
    });
    Sse::new(events).keep_alive(KeepAlive::new().interval(Duration::from_secs(15)))
}
