use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use rand::RngCore;
use stimstream_core::corpus::Account;
use stimstream_core::scheduler::SchedulePlan;
use thiserror::Error;
use tokio::sync::{watch, Notify};
use tokio::task::JoinHandle;

use crate::api;
use crate::clock::ExerciseClock;
use crate::engine::{Engine, EngineError};
use crate::roster::Roster;

pub const DEFAULT_BANNER: &str = "EXERCISE ONLY - every message in this feed is simulated and part of a test.";

/// Longest the driver sleeps between checks, in wall time.
const MAX_TICK: Duration = Duration::from_millis(50);

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub compression: f64,
    pub seed: u64,
    pub start_paused: bool,
    /// JSON-lines copy of the event log.
    pub log_path: Option<PathBuf>,
    pub banner: String,
    pub bind: SocketAddr,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            compression: 1.0,
            seed: 0,
            start_paused: false,
            log_path: None,
            banner: DEFAULT_BANNER.to_string(),
            bind: SocketAddr::from(([127, 0, 0, 1], 0)),
        }
    }
}

#[derive(Debug, Error)]
pub enum StartError {
    #[error("an exercise is already running")]
    AlreadyRunning,
    #[error("compression must be a positive finite number, got {0}")]
    Compression(f64),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// State shared by the HTTP handlers and the replay driver.
pub struct Exercise {
    pub(crate) engine: Mutex<Engine>,
    pub(crate) clock: ExerciseClock,
    pub(crate) roster: Roster,
    pub(crate) banner: String,
    sessions: Mutex<HashMap<String, String>>,
    head_tx: watch::Sender<u64>,
    wake: Notify,
    closed: AtomicBool,
}

impl Exercise {
    pub fn clock(&self) -> &ExerciseClock {
        &self.clock
    }

    pub fn banner(&self) -> &str {
        &self.banner
    }

    /// Runs `f` against the engine after emitting everything due, then wakes subscribers
    /// and the driver.
    pub(crate) fn mutate<T>(
        &self,
        f: impl FnOnce(&mut Engine, f64) -> Result<T, EngineError>,
    ) -> Result<T, EngineError> {
        let (out, head) = {
            let mut engine = self.engine.lock();
            let now = self.clock.now();
            engine.flush(now)?;
            let out = f(&mut engine, now);
            (out, engine.head())
        };
        self.head_tx.send_replace(head);
        self.wake.notify_one();
        out
    }

    pub fn read<T>(&self, f: impl FnOnce(&Engine) -> T) -> T {
        f(&self.engine.lock())
    }

    pub(crate) fn login(&self, handle: &str, password: &str) -> Option<(String, Account)> {
        let entry = self.roster.get(handle)?;
        if entry.password.as_deref() != Some(password) {
            return None;
        }
        let mut raw = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut raw);
        let token: String = raw.iter().map(|b| format!("{b:02x}")).collect();
        self.sessions.lock().insert(token.clone(), handle.to_string());
        Some((token, entry.account()))
    }

    pub(crate) fn session(&self, token: &str) -> Option<Account> {
        let handle = self.sessions.lock().get(token).cloned()?;
        self.roster.get(&handle).map(|e| e.account())
    }

    pub(crate) fn subscribe_head(&self) -> watch::Receiver<u64> {
        self.head_tx.subscribe()
    }

    pub(crate) fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Acquire)
    }

    pub fn pause(&self) {
        self.clock.pause();
        self.wake.notify_one();
    }

    pub fn resume(&self) {
        self.clock.resume();
        self.wake.notify_one();
    }

    fn tick(&self) -> Result<Duration, EngineError> {
        let (n, head, due) = {
            let mut engine = self.engine.lock();
            let n = engine.flush(self.clock.now())?;
            (n, engine.head(), engine.next_due())
        };
        if n > 0 {
            self.head_tx.send_replace(head);
        }
        let wait = due
            .and_then(|t| self.clock.wall_until(t))
            .map(Duration::from_secs_f64)
            .map_or(MAX_TICK, |d| d.min(MAX_TICK));
        Ok(wait)
    }
}

async fn drive(exercise: Arc<Exercise>, mut stop: watch::Receiver<bool>) {
    loop {
        let wait = match exercise.tick() {
            Ok(w) => w,
            Err(e) => {
                tracing::error!("replay stopped: {e}");
                return;
            }
        };
        tokio::select! {
            _ = tokio::time::sleep(wait) => {}
            _ = exercise.wake.notified() => {}
            _ = stop.changed() => return,
        }
    }
}

/// Allows one running exercise at a time.
#[derive(Clone, Default)]
pub struct ExerciseHost {
    busy: Arc<AtomicBool>,
}

impl ExerciseHost {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_running(&self) -> bool {
        self.busy.load(Ordering::Acquire)
    }

    /// Binds the API, starts the clock and begins replaying `plan`.
    pub async fn start(
        &self,
        plan: SchedulePlan,
        roster: Roster,
        config: ServerConfig,
    ) -> Result<RunningExercise, StartError> {
        if self.busy.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire).is_err() {
            return Err(StartError::AlreadyRunning);
        }
        let guard = BusyGuard(self.busy.clone());
        if !(config.compression > 0.0 && config.compression.is_finite()) {
            return Err(StartError::Compression(config.compression));
        }
        plan.validate().map_err(|e| StartError::Plan(e.to_string()))?;
        roster.validate().map_err(|e| StartError::Plan(e.to_string()))?;
        let mut engine = Engine::new(Arc::new(plan), &roster, config.seed)?;
        if let Some(path) = &config.log_path {
            engine = engine.with_sink(Box::new(BufWriter::new(File::create(path)?)));
        }
        let listener = tokio::net::TcpListener::bind(config.bind).await?;
        let addr = listener.local_addr()?;
        let (head_tx, _) = watch::channel(0);
        let exercise = Arc::new(Exercise {
            engine: Mutex::new(engine),
            clock: ExerciseClock::start(config.compression, config.start_paused),
            roster,
            banner: config.banner,
            sessions: Mutex::new(HashMap::new()),
            head_tx,
            wake: Notify::new(),
            closed: AtomicBool::new(false),
        });
        let (stop_tx, stop_rx) = watch::channel(false);
        let driver = tokio::spawn(drive(exercise.clone(), stop_rx.clone()));
        let app = api::router(exercise.clone());
        let mut server_stop = stop_rx;
        let server = tokio::spawn(async move {
            let shutdown = async move {
                let _ = server_stop.changed().await;
            };
            if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
                tracing::error!("server error: {e}");
            }
        });
        Ok(RunningExercise { addr, exercise, stop: stop_tx, driver, server, _guard: guard })
    }
}

struct BusyGuard(Arc<AtomicBool>);

impl Drop for BusyGuard {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

pub struct RunningExercise {
    addr: SocketAddr,
    exercise: Arc<Exercise>,
    stop: watch::Sender<bool>,
    driver: JoinHandle<()>,
    server: JoinHandle<()>,
    _guard: BusyGuard,
}

impl RunningExercise {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn exercise(&self) -> &Arc<Exercise> {
        &self.exercise
    }

    /// Resolves once the plan is fully emitted and no ghost retweets are outstanding.
    pub async fn wait_idle(&self) {
        let mut rx = self.exercise.subscribe_head();
        loop {
            if self.exercise.read(|e| e.is_idle()) {
                return;
            }
            let _ = tokio::time::timeout(MAX_TICK, rx.changed()).await;
        }
    }

    /// Stops replay, closes subscriber streams and waits for the server to exit.
    pub async fn shutdown(self) {
        self.exercise.closed.store(true, Ordering::Release);
        self.exercise.head_tx.send_modify(|_| {});
        let _ = self.stop.send(true);
        let _ = self.driver.await;
        let _ = self.server.await;
    }
}
