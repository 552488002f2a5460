use std::collections::{BTreeMap, HashSet};

use super::message::{AckFor, Frame, WireJoint, WireMessage};
use super::{ErrorCode, PROTOCOL_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    PreHello,
    Ready,
    Closed,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NamespaceState {
    pub skeleton: Option<Vec<WireJoint>>,
    pub last_index: Option<u64>,
    /// From `play_done`, if one arrived.
    pub frame_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionState {
    pub version: Option<u32>,
    pub namespaces: BTreeMap<String, NamespaceState>,
    pub phase: Phase,
}

impl Default for SessionState {
    fn default() -> Self {
        SessionState { version: None, namespaces: BTreeMap::new(), phase: Phase::PreHello }
    }
}

/// `[A-Za-z0-9_]{1,64}`
pub fn valid_namespace(ns: &str) -> bool {
    (1..=64).contains(&ns.len()) && ns.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn check_joints(joints: &[WireJoint]) -> Result<(), String> {
    if joints.is_empty() {
        return Err("skeleton has no joints".into());
    }
    let mut names = HashSet::new();
    for (i, j) in joints.iter().enumerate() {
        if !names.insert(j.name.as_str()) {
            return Err(format!("duplicate joint name `{}`", j.name));
        }
        if !j.offset.iter().all(|v| v.is_finite()) {
            return Err(format!("joint {i} has a non-finite offset"));
        }
        match (i, j.parent) {
            (0, -1) if !j.end => {}
            (0, _) => return Err("joint 0 must be a rotating root with parent -1".into()),
            (_, p) if p >= 0 && (p as u64) < i as u64 && !joints[p as usize].end => {}
            (_, p) => return Err(format!("joint {i} has invalid parent {p}")),
        }
    }
    Ok(())
}

fn check_frame(f: &Frame, joints: &[WireJoint]) -> Result<(), String> {
    if f.q.len() != 4 * joints.len() {
        return Err(format!("q has {} values, expected {}", f.q.len(), 4 * joints.len()));
    }
    if !(f.t.is_finite() && f.root.iter().all(|v| v.is_finite())) {
        return Err("non-finite time or root".into());
    }
    for (j, q) in f.q.chunks_exact(4).enumerate() {
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((n - 1.0).abs() <= 1e-6) {
            return Err(format!("quaternion {j} is not unit length"));
        }
    }
    Ok(())
}

fn err(s: SessionState, code: ErrorCode, msg: impl Into<String>) -> (SessionState, Option<WireMessage>) {
    (s, Some(WireMessage::error(code, msg)))
}

/// Applies one received message. Rejected messages leave the state
/// unchanged and produce an `error` reply; accepted frames produce no reply.
pub fn session_step(mut s: SessionState, m: &WireMessage) -> (SessionState, Option<WireMessage>) {
    match s.phase {
        Phase::Closed => return err(s, ErrorCode::Proto, "session is closed"),
        Phase::PreHello => {
            return match m {
                WireMessage::Hello(h) if h.version == PROTOCOL_VERSION => {
                    s.version = Some(h.version);
                    s.phase = Phase::Ready;
                    (s, Some(WireMessage::ack(AckFor::Hello, None)))
                }
                WireMessage::Hello(h) => err(s, ErrorCode::Proto, format!("unsupported protocol version {}", h.version)),
                other => err(s, ErrorCode::Proto, format!("expected hello, got {}", other.type_name())),
            }
        }
        Phase::Ready => {}
    }
    match m {
        WireMessage::Hello(_) => err(s, ErrorCode::Proto, "hello already received"),
        WireMessage::Ack(_) | WireMessage::Error(_) => {
            err(s, ErrorCode::Proto, format!("{} is sent by the server only", m.type_name()))
        }
        WireMessage::Register(r) => {
            if !valid_namespace(&r.ns) {
                err(s, ErrorCode::BadMsg, format!("invalid namespace `{}`", r.ns))
            } else if s.namespaces.contains_key(&r.ns) {
                err(s, ErrorCode::Dup, format!("namespace `{}` already registered", r.ns))
            } else {
                s.namespaces.insert(r.ns.clone(), NamespaceState::default());
                (s, Some(WireMessage::ack(AckFor::Register, Some(&r.ns))))
            }
        }
        WireMessage::Skeleton(k) => {
            let Some(ns) = s.namespaces.get_mut(&k.ns) else {
                return err(s, ErrorCode::Ns, format!("namespace `{}` is not registered", k.ns));
            };
            if ns.skeleton.is_some() {
                return err(s, ErrorCode::Dup, format!("namespace `{}` already has a skeleton", k.ns));
            }
            if let Err(e) = check_joints(&k.joints) {
                return err(s, ErrorCode::BadMsg, e);
            }
            ns.skeleton = Some(k.joints.clone());
            (s, Some(WireMessage::ack(AckFor::Skeleton, Some(&k.ns))))
        }
        WireMessage::Frame(f) => {
            let Some(ns) = s.namespaces.get_mut(&f.ns) else {
                return err(s, ErrorCode::Ns, format!("namespace `{}` is not registered", f.ns));
            };
            let Some(joints) = &ns.skeleton else {
                return err(s, ErrorCode::Ns, format!("namespace `{}` has no skeleton", f.ns));
            };
            if let Some(last) = ns.last_index {
                if f.i <= last {
                    return err(s, ErrorCode::Order, format!("frame {} after frame {last} in `{}`", f.i, f.ns));
                }
            }
            if let Err(e) = check_frame(f, joints) {
                return err(s, ErrorCode::BadMsg, e);
            }
            ns.last_index = Some(f.i);
            (s, None)
        }
        WireMessage::PlayDone(p) => {
            let Some(ns) = s.namespaces.get_mut(&p.ns) else {
                return err(s, ErrorCode::Ns, format!("namespace `{}` is not registered", p.ns));
            };
            if !(p.frame_time.is_finite() && p.frame_time > 0.0) {
                return err(s, ErrorCode::BadMsg, "frame_time must be positive");
            }
            ns.frame_time = Some(p.frame_time);
            (s, Some(WireMessage::ack(AckFor::PlayDone, Some(&p.ns))))
        }
        WireMessage::Bye(_) => {
            s.phase = Phase::Closed;
            (s, Some(WireMessage::ack(AckFor::Bye, None)))
        }
    }
}
