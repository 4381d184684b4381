//! Keyed random streams.
//!
//! A stream is identified by a root seed and an ordered list of domain tags
//! (image id, corruption kind, severity, frame index, ...). The pair is hashed
//! with SHA-256 into a ChaCha20 key, so every stream is independent of the
//! order in which other streams are drawn and reproduces bit-for-bit on any
//! platform.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"corruptbench/random-stream/v1";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    Str(String),
    Int(u64),
}

impl From<&str> for Tag {
    fn from(s: &str) -> Self {
        Tag::Str(s.to_owned())
    }
}

impl From<String> for Tag {
    fn from(s: String) -> Self {
        Tag::Str(s)
    }
}

impl From<&String> for Tag {
    fn from(s: &String) -> Self {
        Tag::Str(s.clone())
    }
}

macro_rules! int_tag {
    ($($t:ty),*) => {$(
        impl From<$t> for Tag {
            fn from(v: $t) -> Self {
                Tag::Int(v as u64)
            }
        }
    )*};
}
int_tag!(u8, u16, u32, u64, usize);

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Str(s) => f.write_str(s),
            Tag::Int(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RandomStream {
    root_seed: u64,
    tags: Vec<Tag>,
}

impl RandomStream {
    pub fn new(root_seed: u64) -> Self {
        Self { root_seed, tags: Vec::new() }
    }

    /// A child stream with one more domain tag appended.
    pub fn tag(&self, tag: impl Into<Tag>) -> Self {
        let mut tags = self.tags.clone();
        tags.push(tag.into());
        Self { root_seed: self.root_seed, tags }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    /// The 256-bit key for this stream.
    pub fn key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.root_seed.to_le_bytes());
        for tag in &self.tags {
            match tag {
                Tag::Str(s) => {
                    h.update([b's']);
                    h.update((s.len() as u64).to_le_bytes());
                    h.update(s.as_bytes());
                }
                Tag::Int(v) => {
                    h.update([b'i']);
                    h.update(v.to_le_bytes());
                }
            }
        }
        h.finalize().into()
    }

    /// A fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.key())
    }

    /// Derives a 64-bit seed from the stream key (for handing to external code).
    pub fn derive_seed(&self) -> u64 {
        let k = self.key();
        u64::from_le_bytes(k[..8].try_into().expect("8 bytes"))
    }
}
