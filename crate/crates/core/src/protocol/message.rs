use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ErrorCode;
use crate::error::ParseError;
use crate::rotation::Vec3;

/// Longest accepted line, terminator included.
pub const MAX_LINE: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireJoint {
    pub name: String,
    /// Index of an earlier joint, or -1 for the root.
    pub parent: i64,
    pub offset: Vec3,
    /// End sites carry no rotation of their own; their `q` entry is ignored.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub end: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckFor {
    Hello,
    Register,
    Skeleton,
    PlayDone,
    Bye,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub version: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    #[serde(rename = "for")]
    pub for_: AckFor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Register {
    pub ns: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletonMsg {
    pub ns: String,
    pub joints: Vec<WireJoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub ns: String,
    pub i: u64,
    pub t: f64,
    pub root: Vec3,
    /// `(w, x, y, z)` per skeleton joint, end sites included.
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayDone {
    pub ns: String,
    pub frames: u64,
    pub frame_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bye {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello(Hello),
    Ack(Ack),
    Error(ErrorMsg),
    Register(Register),
    Skeleton(SkeletonMsg),
    Frame(Frame),
    PlayDone(PlayDone),
    Bye(Bye),
}

impl WireMessage {
    pub fn hello() -> Self {
        WireMessage::Hello(Hello { version: super::PROTOCOL_VERSION })
    }

    pub fn ack(for_: AckFor, ns: Option<&str>) -> Self {
        WireMessage::Ack(Ack { for_, ns: ns.map(str::to_owned) })
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        WireMessage::Error(ErrorMsg { code, message: message.into() })
    }

    pub fn register(ns: impl Into<String>) -> Self {
        WireMessage::Register(Register { ns: ns.into() })
    }

    pub fn bye() -> Self {
        WireMessage::Bye(Bye {})
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            WireMessage::Hello(_) => "hello",
            WireMessage::Ack(_) => "ack",
            WireMessage::Error(_) => "error",
            WireMessage::Register(_) => "register",
            WireMessage::Skeleton(_) => "skeleton",
            WireMessage::Frame(_) => "frame",
            WireMessage::PlayDone(_) => "play_done",
            WireMessage::Bye(_) => "bye",
        }
    }

    /// One LF-terminated line. Non-finite numbers are written as `null` and
    /// will not decode.
    pub fn encode(&self) -> String {
        let mut s = serde_json::to_string(self).expect("wire messages serialize");
        s.push('\n');
        s
    }
}

#[derive(Deserialize)]
struct Header {
    #[serde(rename = "type")]
    kind: String,
}

fn body<T: DeserializeOwned>(text: &str) -> Result<T, ParseError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(ParseError::from_json)
}

/// Decodes one line, with or without its terminator.
pub fn decode(line: &[u8]) -> Result<WireMessage, ParseError> {
    if line.len() > MAX_LINE {
        return Err(ParseError::new(format!("line exceeds {MAX_LINE} bytes")));
    }
    let line = line.strip_suffix(b"\n").unwrap_or(line);
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    let text = std::str::from_utf8(line).map_err(|e| ParseError::new(format!("invalid UTF-8: {e}")))?;
    let header: Header = body(text)?;
    Ok(match header.kind.as_str() {
        "hello" => WireMessage::Hello(body(text)?),
        "ack" => WireMessage::Ack(body(text)?),
        "error" => WireMessage::Error(body(text)?),
        "register" => WireMessage::Register(body(text)?),
        "skeleton" => WireMessage::Skeleton(body(text)?),
        "frame" => WireMessage::Frame(body(text)?),
        "play_done" => WireMessage::PlayDone(body(text)?),
        "bye" => WireMessage::Bye(body(text)?),
        other => return Err(ParseError::at_field("type", format!("unknown type `{other}`"))),
    })
}
