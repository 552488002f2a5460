use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, TryRecvError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::message::{decode, AckFor, Frame, PlayDone, SkeletonMsg, WireJoint, WireMessage, MAX_LINE};
use super::session::valid_namespace;
use super::ErrorCode;
use crate::error::{Error, Result};
use crate::skeleton::{MotionClip, Pose, Skeleton};

const ACK_TIMEOUT: Duration = Duration::from_secs(10);

/// All joints in skeleton order; end sites are flagged.
pub fn wire_joints(skeleton: &Skeleton) -> Vec<WireJoint> {
    skeleton
        .joints()
        .iter()
        .map(|j| WireJoint { name: j.name.clone(), parent: j.parent.map_or(-1, |p| p as i64), offset: j.offset, end: j.is_end_site })
        .collect()
}

/// One `(w, x, y, z)` per joint, identity for end sites.
pub fn wire_quats(skeleton: &Skeleton, pose: &Pose) -> Vec<f64> {
    let mut q = Vec::with_capacity(4 * skeleton.len());
    for i in 0..skeleton.len() {
        match skeleton.animated_index(i) {
            Some(slot) => q.extend(pose.rotations[slot].wxyz()),
            None => q.extend([1.0, 0.0, 0.0, 0.0]),
        }
    }
    q
}

fn protocol_error(code: ErrorCode, message: impl Into<String>) -> Error {
    Error::Protocol { code, message: message.into() }
}

/// Controller side of a connection. Replies are read on a background thread.
pub struct StreamClient {
    stream: TcpStream,
    replies: Receiver<std::result::Result<WireMessage, String>>,
}

impl StreamClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(Error::Network)?;
        stream.set_nodelay(true).map_err(Error::Network)?;
        let read_half = stream.try_clone().map_err(Error::Network)?;
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(read_half);
            let mut line = Vec::new();
            loop {
                line.clear();
                match io::Read::take(&mut reader, MAX_LINE as u64 + 1).read_until(b'\n', &mut line) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {
                        let msg = decode(&line).map_err(|e| e.to_string());
                        if tx.send(msg).is_err() {
                            break;
                        }
                    }
                }
            }
        });
        Ok(StreamClient { stream, replies })
    }

    pub fn send(&mut self, m: &WireMessage) -> Result<()> {
        self.stream.write_all(m.encode().as_bytes()).map_err(Error::Network)
    }

    fn reply_to_result(r: std::result::Result<WireMessage, String>) -> Result<WireMessage> {
        match r {
            Ok(WireMessage::Error(e)) => Err(protocol_error(e.code, e.message)),
            Ok(m) => Ok(m),
            Err(e) => Err(protocol_error(ErrorCode::BadMsg, format!("undecodable reply: {e}"))),
        }
    }

    /// Waits for the ack of `for_`; an `error` reply is returned as
    /// [`Error::Protocol`].
    pub fn expect_ack(&mut self, for_: AckFor) -> Result<()> {
        let r = match self.replies.recv_timeout(ACK_TIMEOUT) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Network(io::Error::new(io::ErrorKind::TimedOut, "no reply from server")))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Network(io::Error::new(io::ErrorKind::ConnectionAborted, "server closed the connection")))
            }
        };
        match Self::reply_to_result(r)? {
            WireMessage::Ack(a) if a.for_ == for_ => Ok(()),
            other => Err(protocol_error(ErrorCode::Proto, format!("expected ack for {for_:?}, got {}", other.type_name()))),
        }
    }

    /// Returns the first pending error reply, without blocking.
    pub fn check_errors(&mut self) -> Result<()> {
        loop {
            match self.replies.try_recv() {
                Ok(r) => {
                    Self::reply_to_result(r)?;
                }
                Err(TryRecvError::Empty) => return Ok(()),
                Err(TryRecvError::Disconnected) => {
                    return Err(Error::Network(io::Error::new(io::ErrorKind::ConnectionAborted, "server closed the connection")))
                }
            }
        }
    }

    pub fn hello(&mut self) -> Result<()> {
        self.send(&WireMessage::hello())?;
        self.expect_ack(AckFor::Hello)
    }

    pub fn register(&mut self, ns: &str, skeleton: &Skeleton) -> Result<()> {
        if !valid_namespace(ns) {
            return Err(Error::invalid(format!("invalid namespace `{ns}` (expected [A-Za-z0-9_]{{1,64}})")));
        }
        self.send(&WireMessage::register(ns))?;
        self.expect_ack(AckFor::Register)?;
        self.send(&WireMessage::Skeleton(SkeletonMsg { ns: ns.into(), joints: wire_joints(skeleton) }))?;
        self.expect_ack(AckFor::Skeleton)
    }

    pub fn send_frame(&mut self, ns: &str, skeleton: &Skeleton, i: u64, t: f64, pose: &Pose) -> Result<()> {
        self.send(&WireMessage::Frame(Frame {
            ns: ns.into(),
            i,
            t,
            root: pose.root_translation,
            q: wire_quats(skeleton, pose),
        }))
    }

    pub fn play_done(&mut self, ns: &str, frames: u64, frame_time: f64) -> Result<()> {
        self.send(&WireMessage::PlayDone(PlayDone { ns: ns.into(), frames, frame_time }))?;
        self.expect_ack(AckFor::PlayDone)
    }

    pub fn bye(mut self) -> Result<()> {
        self.send(&WireMessage::bye())?;
        self.expect_ack(AckFor::Bye)
    }
}

impl Drop for StreamClient {
    /// Shuts the socket down so the reader thread and the peer both see EOF.
    fn drop(&mut self) {
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

#[derive(Clone, Debug, Default)]
pub struct PlayOptions {
    /// Overrides the clip's frame rate.
    pub fps: Option<f64>,
    /// Repeat the clip until `stop` is set.
    pub looping: bool,
    pub stop: Option<Arc<AtomicBool>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlaySummary {
    pub frames_sent: u64,
    /// From the first frame to the end of the last frame period.
    pub duration: Duration,
    pub frame_time: f64,
}

/// Streams `clip` to a receiver under `ns`, paced at the clip's frame rate.
///
/// Frame `i` is sent at `start + i * period`, so pacing error does not
/// accumulate. Any error reply aborts the stream.
pub fn play(clip: &MotionClip, addr: impl ToSocketAddrs, ns: &str, opts: &PlayOptions) -> Result<PlaySummary> {
    if !valid_namespace(ns) {
        return Err(Error::invalid(format!("invalid namespace `{ns}` (expected [A-Za-z0-9_]{{1,64}})")));
    }
    let frame_time = match opts.fps {
        Some(f) if f.is_finite() && f > 0.0 => 1.0 / f,
        Some(f) => return Err(Error::invalid(format!("fps must be positive, got {f}"))),
        None => clip.frame_time(),
    };
    if clip.is_empty() {
        return Err(Error::invalid("cannot play an empty clip"));
    }
    let skeleton = clip.skeleton();
    let mut client = StreamClient::connect(addr)?;
    client.hello()?;
    client.register(ns, skeleton)?;

    let period = Duration::from_secs_f64(frame_time);
    let stopped = || opts.stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed));
    let n = clip.len() as u64;
    let start = Instant::now();
    let mut i: u64 = 0;
    loop {
        if (!opts.looping && i >= n) || stopped() {
            break;
        }
        let deadline = start + period.mul_f64(i as f64);
        if let Some(wait) = deadline.checked_duration_since(Instant::now()) {
            thread::sleep(wait);
        }
        client.check_errors()?;
        let pose = &clip.frames()[(i % n) as usize];
        client.send_frame(ns, skeleton, i, i as f64 * frame_time, pose)?;
        i += 1;
    }
    let end = start + period.mul_f64(i as f64);
    if let Some(wait) = end.checked_duration_since(Instant::now()) {
        thread::sleep(wait);
    }
    let duration = start.elapsed();
    client.check_errors()?;
    client.play_done(ns, i, frame_time)?;
    client.bye()?;
    Ok(PlaySummary { frames_sent: i, duration, frame_time })
}
