//! Line-delimited JSON streaming protocol, version 1.
//!
//! A controller ([`StreamClient`], [`play`]) connects to a receiver
//! ([`Server`]), says `hello`, registers one namespace per character, sends
//! its skeleton and then streams unacknowledged `frame` messages. Control
//! messages are acknowledged with `ack`; failures come back as `error` with
//! one of the [`ErrorCode`]s.

mod client;
mod message;
mod server;
mod session;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use client::{play, wire_joints, wire_quats, PlayOptions, PlaySummary, StreamClient};
pub use message::{decode, Ack, AckFor, Bye, ErrorMsg, Frame, Hello, PlayDone, Register, SkeletonMsg, WireJoint, WireMessage, MAX_LINE};
pub use server::{recording_to_clip, Server, ServerHandle};
pub use session::{session_step, valid_namespace, NamespaceState, Phase, SessionState};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_PORT: u16 = 9907;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCode {
    /// Message not allowed in the current phase.
    #[serde(rename = "E_PROTO")]
    Proto,
    /// Namespace registered, or skeleton sent, twice.
    #[serde(rename = "E_DUP")]
    Dup,
    /// Namespace unknown or without a skeleton.
    #[serde(rename = "E_NS")]
    Ns,
    /// Frame index not strictly increasing.
    #[serde(rename = "E_ORDER")]
    Order,
    /// Undecodable or semantically invalid message.
    #[serde(rename = "E_BADMSG")]
    BadMsg,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Proto => "E_PROTO",
            ErrorCode::Dup => "E_DUP",
            ErrorCode::Ns => "E_NS",
            ErrorCode::Order => "E_ORDER",
            ErrorCode::BadMsg => "E_BADMSG",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
