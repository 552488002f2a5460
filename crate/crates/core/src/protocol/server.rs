use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::message::{decode, WireJoint, WireMessage, MAX_LINE};
use super::session::{session_step, Phase, SessionState};
use super::ErrorCode;
use crate::error::{Error, Result};
use crate::formats::to_canonical;
use crate::rotation::{Rotation, Vec3};
use crate::skeleton::{default_channels, Joint, MotionClip, Pose, Skeleton};

const POLL: Duration = Duration::from_millis(20);
const READ_TIMEOUT: Duration = Duration::from_millis(100);
const DEFAULT_RECORD_FRAME_TIME: f64 = 1.0 / 30.0;

type Recorded = Vec<(Vec3, Vec<f64>)>;

/// Rebuilds a clip from a wire skeleton and the frames received for it.
/// Rotating joints get the default channel layout.
pub fn recording_to_clip(joints: &[WireJoint], frames: &[(Vec3, Vec<f64>)], frame_time: f64) -> Result<MotionClip> {
    let skel_joints = joints
        .iter()
        .map(|j| {
            let parent = usize::try_from(j.parent).ok();
            match (j.end, parent) {
                (true, Some(p)) => Joint::end_site(j.name.clone(), p, j.offset),
                _ => Joint::new(j.name.clone(), parent, j.offset, default_channels(parent.is_none())),
            }
        })
        .collect::<Vec<_>>();
    let name = joints.first().map(|j| j.name.clone()).unwrap_or_default();
    let skeleton = Skeleton::new(name, skel_joints)?;
    let poses = frames
        .iter()
        .map(|(root, q)| {
            let rotations = joints
                .iter()
                .zip(q.chunks_exact(4))
                .filter(|(j, _)| !j.end)
                .map(|(_, q)| Rotation::new(q[0], q[1], q[2], q[3]))
                .collect::<Result<Vec<_>>>()?;
            Ok(Pose { root_translation: *root, rotations, joint_translations: Vec::new() })
        })
        .collect::<Result<Vec<_>>>()?;
    MotionClip::new(skeleton, frame_time, poses, None)
}

fn unique_path(dir: &Path, ns: &str) -> io::Result<(PathBuf, std::fs::File)> {
    for n in 1.. {
        let name = if n == 1 { format!("{ns}.json") } else { format!("{ns}-{n}.json") };
        let path = dir.join(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => return Ok((path, f)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

struct Connection {
    state: SessionState,
    frames: BTreeMap<String, Recorded>,
    record_dir: Option<PathBuf>,
    recordings: Arc<Mutex<Vec<PathBuf>>>,
    flushed: bool,
}

impl Connection {
    /// Writes one canonical clip per namespace that received frames.
    fn flush_recordings(&mut self) {
        if self.flushed {
            return;
        }
        self.flushed = true;
        let Some(dir) = &self.record_dir else { return };
        for (ns, frames) in &self.frames {
            let Some(st) = self.state.namespaces.get(ns) else { continue };
            let Some(joints) = &st.skeleton else { continue };
            if frames.is_empty() {
                continue;
            }
            let ft = st.frame_time.unwrap_or(DEFAULT_RECORD_FRAME_TIME);
            let result = recording_to_clip(joints, frames, ft).and_then(|clip| {
                let (path, mut file) = unique_path(dir, ns).map_err(|e| Error::io(dir, e))?;
                file.write_all(to_canonical(&clip).as_bytes()).map_err(|e| Error::io(&path, e))?;
                Ok(path)
            });
            match result {
                Ok(path) => {
                    log::info!("recorded {} frames of `{ns}` to {}", frames.len(), path.display());
                    self.recordings.lock().expect("recordings lock").push(path);
                }
                Err(e) => log::error!("recording `{ns}` failed: {e}"),
            }
        }
    }

    /// Handles one line; returns the reply and whether to close.
    fn handle_line(&mut self, line: &[u8]) -> (Option<WireMessage>, bool) {
        let msg = match decode(line) {
            Ok(m) => m,
            Err(e) => return (Some(WireMessage::error(ErrorCode::BadMsg, e.to_string())), false),
        };
        let state = std::mem::take(&mut self.state);
        let (state, reply) = session_step(state, &msg);
        self.state = state;
        if let (WireMessage::Frame(f), None) = (&msg, &reply) {
            self.frames.entry(f.ns.clone()).or_default().push((f.root, f.q.clone()));
        }
        let closing = self.state.phase == Phase::Closed && matches!(msg, WireMessage::Bye(_)) && !self.flushed;
        if closing {
            self.flush_recordings();
        }
        (reply, closing)
    }
}

fn serve_connection(stream: TcpStream, record_dir: Option<PathBuf>, stop: Arc<AtomicBool>, recordings: Arc<Mutex<Vec<PathBuf>>>) {
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_else(|_| "?".into());
    log::debug!("connection from {peer}");
    if let Err(e) = stream.set_read_timeout(Some(READ_TIMEOUT)) {
        log::warn!("{peer}: {e}");
        return;
    }
    let _ = stream.set_nodelay(true);
    let mut writer = match stream.try_clone() {
        Ok(w) => w,
        Err(e) => {
            log::warn!("{peer}: {e}");
            return;
        }
    };
    let mut reader = BufReader::new(stream);
    let mut conn = Connection { state: SessionState::default(), frames: BTreeMap::new(), record_dir, recordings, flushed: false };
    let mut buf = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        let limit = (MAX_LINE + 1).saturating_sub(buf.len()) as u64;
        let read = (&mut reader).take(limit).read_until(b'\n', &mut buf);
        let eof = match read {
            Ok(0) => true,
            Ok(_) => false,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut | io::ErrorKind::Interrupted) => {
                continue
            }
            Err(e) => {
                log::warn!("{peer}: read failed: {e}");
                break;
            }
        };
        if buf.is_empty() {
            break;
        }
        let complete = buf.ends_with(b"\n");
        if !complete && buf.len() > MAX_LINE {
            let reply = WireMessage::error(ErrorCode::BadMsg, format!("line exceeds {MAX_LINE} bytes"));
            let _ = writer.write_all(reply.encode().as_bytes());
            break;
        }
        // Without a terminator the peer has closed: treat the rest as a final line.
        let at_eof = eof || !complete;
        let line = std::mem::take(&mut buf);
        let (reply, close) = conn.handle_line(&line);
        if let Some(r) = reply {
            if let Err(e) = writer.write_all(r.encode().as_bytes()) {
                log::warn!("{peer}: write failed: {e}");
                break;
            }
        }
        if close || at_eof {
            break;
        }
    }
    conn.flush_recordings();
    log::debug!("connection from {peer} closed");
}

/// Reference receiver: validates, acknowledges and optionally records.
pub struct Server {
    listener: TcpListener,
    record_dir: Option<PathBuf>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, record_dir: Option<PathBuf>) -> Result<Self> {
        if let Some(dir) = &record_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let listener = TcpListener::bind(addr).map_err(Error::Network)?;
        listener.set_nonblocking(true).map_err(Error::Network)?;
        Ok(Server { listener, record_dir })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Accepts connections until `stop` is set, then waits for every
    /// connection thread. Each connection has its own session.
    pub fn run(self, stop: Arc<AtomicBool>, recordings: Arc<Mutex<Vec<PathBuf>>>) -> Result<()> {
        let mut workers: Vec<JoinHandle<()>> = Vec::new();
        while !stop.load(Ordering::Relaxed) {
            match self.listener.accept() {
                Ok((stream, _)) => {
                    if let Err(e) = stream.set_nonblocking(false) {
                        log::warn!("dropping connection: {e}");
                        continue;
                    }
                    let (dir, stop, rec) = (self.record_dir.clone(), stop.clone(), recordings.clone());
                    workers.push(thread::spawn(move || serve_connection(stream, dir, stop, rec)));
                    workers.retain(|w| !w.is_finished());
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock || e.kind() == io::ErrorKind::Interrupted => {
                    thread::sleep(POLL)
                }
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
        for w in workers {
            let _ = w.join();
        }
        Ok(())
    }

    pub fn spawn(self) -> ServerHandle {
        let addr = self.local_addr();
        let stop = Arc::new(AtomicBool::new(false));
        let recordings = Arc::new(Mutex::new(Vec::new()));
        let (s, r) = (stop.clone(), recordings.clone());
        let thread = thread::spawn(move || {
            if let Err(e) = self.run(s, r) {
                log::error!("server stopped: {e}");
            }
        });
        ServerHandle { addr, stop, recordings, thread: Some(thread) }
    }
}

/// A server running on a background thread; stops on [`shutdown`](Self::shutdown) or drop.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    recordings: Arc<Mutex<Vec<PathBuf>>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Files written so far, in completion order.
    pub fn recordings(&self) -> Vec<PathBuf> {
        self.recordings.lock().expect("recordings lock").clone()
    }

    pub fn shutdown(mut self) -> Vec<PathBuf> {
        self.stop_and_join();
        self.recordings()
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}
