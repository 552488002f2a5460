//! Independent model of the receiver's session rules, used to predict the
//! reply to every message in a random sequence.

use std::collections::BTreeMap;

use motionkit::protocol::{AckFor, ErrorCode, Frame, Hello, PlayDone, SkeletonMsg, WireJoint, WireMessage};

use super::Gen;

#[derive(Clone, Debug, PartialEq)]
pub enum Expect {
    Silent,
    Ack(AckFor),
    Error(ErrorCode),
}

#[derive(Default)]
struct Ns {
    joints: Option<usize>,
    last: Option<u64>,
}

#[derive(Default)]
pub struct RefSession {
    hello: bool,
    closed: bool,
    ns: BTreeMap<String, Ns>,
}

fn ns_ok(s: &str) -> bool {
    !s.is_empty() && s.len() <= 64 && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn joints_ok(j: &[WireJoint]) -> bool {
    if j.is_empty() || j[0].parent != -1 || j[0].end {
        return false;
    }
    let mut names: Vec<&str> = j.iter().map(|x| x.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    names.len() == j.len()
        && j.iter().enumerate().skip(1).all(|(i, x)| x.parent >= 0 && (x.parent as usize) < i && !j[x.parent as usize].end)
}

impl RefSession {
    pub fn expect(&mut self, m: &WireMessage) -> Expect {
        use Expect::*;
        if self.closed {
            return Error(ErrorCode::Proto);
        }
        if !self.hello {
            return match m {
                WireMessage::Hello(h) if h.version == 1 => {
                    self.hello = true;
                    Ack(AckFor::Hello)
                }
                _ => Error(ErrorCode::Proto),
            };
        }
        match m {
            WireMessage::Hello(_) | WireMessage::Ack(_) | WireMessage::Error(_) => Error(ErrorCode::Proto),
            WireMessage::Register(r) if !ns_ok(&r.ns) => Error(ErrorCode::BadMsg),
            WireMessage::Register(r) if self.ns.contains_key(&r.ns) => Error(ErrorCode::Dup),
            WireMessage::Register(r) => {
                self.ns.insert(r.ns.clone(), Ns::default());
                Ack(AckFor::Register)
            }
            WireMessage::Skeleton(k) => match self.ns.get_mut(&k.ns) {
                None => Error(ErrorCode::Ns),
                Some(n) if n.joints.is_some() => Error(ErrorCode::Dup),
                Some(_) if !joints_ok(&k.joints) => Error(ErrorCode::BadMsg),
                Some(n) => {
                    n.joints = Some(k.joints.len());
                    Ack(AckFor::Skeleton)
                }
            },
            WireMessage::Frame(f) => match self.ns.get_mut(&f.ns) {
                None => Error(ErrorCode::Ns),
                Some(Ns { joints: None, .. }) => Error(ErrorCode::Ns),
                Some(n) if n.last.is_some_and(|l| f.i <= l) => Error(ErrorCode::Order),
                Some(n) => {
                    let count = n.joints.unwrap();
                    let unit = f.q.chunks(4).all(|q| {
                        q.len() == 4 && ((q.iter().map(|v| v * v).sum::<f64>().sqrt()) - 1.0).abs() <= 1e-6
                    });
                    if f.q.len() != 4 * count || !unit {
                        Error(ErrorCode::BadMsg)
                    } else {
                        n.last = Some(f.i);
                        Silent
                    }
                }
            },
            WireMessage::PlayDone(p) => match self.ns.get(&p.ns) {
                None => Error(ErrorCode::Ns),
                Some(_) if !(p.frame_time > 0.0) => Error(ErrorCode::BadMsg),
                Some(_) => Ack(AckFor::PlayDone),
            },
            WireMessage::Bye(_) => {
                self.closed = true;
                Ack(AckFor::Bye)
            }
        }
    }
}

pub fn classify(reply: &Option<WireMessage>) -> Expect {
    match reply {
        None => Expect::Silent,
        Some(WireMessage::Ack(a)) => Expect::Ack(a.for_),
        Some(WireMessage::Error(e)) => Expect::Error(e.code),
        Some(other) => panic!("unexpected reply {other:?}"),
    }
}

const NAMES: [&str; 5] = ["a", "b", "hero_2", "bad ns", ""];

fn joints(g: &mut Gen, n: usize) -> Vec<WireJoint> {
    (0..n)
        .map(|i| WireJoint {
            name: format!("j{i}"),
            parent: if i == 0 { -1 } else { g.below(i) as i64 },
            offset: g.vec3(1.0),
            end: false,
        })
        .collect()
}

/// A message from a biased random mix, mostly well formed.
pub fn random_message(g: &mut Gen) -> WireMessage {
    let ns = NAMES[if g.chance(0.8) { g.below(3) } else { 3 + g.below(2) }].to_string();
    match g.below(10) {
        0 => WireMessage::Hello(Hello { version: if g.chance(0.85) { 1 } else { 2 } }),
        1 => WireMessage::register(ns),
        2 => {
            let n = 1 + g.below(3);
            let mut j = joints(g, n);
            match g.below(6) {
                0 => j.clear(),
                1 => j[0].parent = 0,
                2 => j.push(WireJoint { name: "j0".into(), parent: 0, offset: [0.0; 3], end: true }),
                _ => {}
            }
            WireMessage::Skeleton(SkeletonMsg { ns, joints: j })
        }
        3..=6 => {
            let count = 1 + g.below(3);
            let mut q: Vec<f64> = (0..count).flat_map(|_| [1.0, 0.0, 0.0, 0.0]).collect();
            match g.below(8) {
                0 => {
                    q.pop();
                }
                1 => q[0] = 0.5,
                _ => {}
            }
            WireMessage::Frame(Frame { ns, i: g.below(6) as u64, t: 0.0, root: [0.0; 3], q })
        }
        7 => WireMessage::PlayDone(PlayDone { ns, frames: 3, frame_time: if g.chance(0.8) { 1.0 / 30.0 } else { 0.0 } }),
        8 => {
            if g.chance(0.5) {
                WireMessage::ack(AckFor::Hello, None)
            } else {
                WireMessage::error(ErrorCode::Proto, "x")
            }
        }
        _ => {
            if g.chance(0.3) {
                WireMessage::bye()
            } else {
                WireMessage::register(ns)
            }
        }
    }
}

/// A sequence that usually starts with hello and registers a namespace.
pub fn random_sequence(g: &mut Gen, len: usize) -> Vec<WireMessage> {
    let mut out = Vec::with_capacity(len);
    if g.chance(0.9) {
        out.push(WireMessage::hello());
        if g.chance(0.7) {
            out.push(WireMessage::register("a"));
            let n = 1 + g.below(3);
            out.push(WireMessage::Skeleton(SkeletonMsg { ns: "a".into(), joints: joints(g, n) }));
        }
    }
    while out.len() < len {
        out.push(random_message(g));
    }
    out
}
