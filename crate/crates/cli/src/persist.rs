// Copyright 2026 The hoctree Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Binary index file, format version 1. All integers and floats are
//! little-endian.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "HOCTREE\0"
//!      8     4  version (u32) = 1
//!     12     4  flags (u32); bit 0 set = leaf MBR tags stored
//!     16    48  x_lo, x_hi, y_lo, y_hi, t_lo, t_hi (f64 each)
//!     64     4  max_depth (u32)
//!     68     8  split_threshold (u64)
//!     76     8  object_count (u64)
//!     84     8  payload length in bytes (u64)
//!     92     4  CRC-32 (IEEE) of the payload
//!     96     -  payload
//! ```
//!
//! The payload is the tree in depth-first pre-order. An internal node is the
//! byte `0x00` followed by an 8-bit child presence mask (bit `i` = octant
//! `i`) and then the present children in ascending octant order. A leaf is
//! the byte `0x01`, its entry count (u32), the 16-byte MBR tag when the leaf
//! is non-empty and tags are stored, then each entry as `id` (u64), `x`, `y`,
//! `t` (f64). Cells and Morton labels are implied by the path from the root.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use hoctree::curves::MAX_ORDER;
use hoctree::index::{compute_mbrsign, Children, MBR_SIGN_BYTES};
use hoctree::{CellCoord, HocTree, IndexConfig, IndexError, MbrSign, Node, StObject};

pub const MAGIC: [u8; 8] = *b"HOCTREE\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 96;
const FLAG_TAGS: u32 = 1;
const TAG_INTERNAL: u8 = 0;
const TAG_LEAF: u8 = 1;
const ENTRY_BYTES: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u32),
    #[error("index file truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("payload checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("corrupt index payload: {0}")]
    Corrupt(String),
    #[error("invalid tree: {0}")]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaveOptions {
    /// Store each non-empty leaf's 16-byte MBR tag. Without tags they are
    /// recomputed from the entries on load.
    pub with_tags: bool,
}

impl Default for SaveOptions {
    fn default() -> Self {
        SaveOptions { with_tags: true }
    }
}

pub fn encode(tree: &HocTree, opts: SaveOptions) -> Vec<u8> {
    let mut payload = Vec::with_capacity(tree.object_count() * ENTRY_BYTES + 64);
    encode_node(tree.root(), opts, &mut payload);

    let cfg = tree.config();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(if opts.with_tags { FLAG_TAGS } else { 0 }).to_le_bytes());
    for v in [cfg.x_lo, cfg.x_hi, cfg.y_lo, cfg.y_hi, cfg.t_lo, cfg.t_hi] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&cfg.max_depth.to_le_bytes());
    out.extend_from_slice(&(cfg.split_threshold as u64).to_le_bytes());
    out.extend_from_slice(&(tree.object_count() as u64).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);
    out.extend_from_slice(&payload);
    out
}

fn encode_node(node: &Node, opts: SaveOptions, out: &mut Vec<u8>) {
    if let Some(children) = node.children() {
        out.push(TAG_INTERNAL);
        let mask = children.iter().enumerate().fold(0u8, |m, (i, c)| if c.is_some() { m | (1 << i) } else { m });
        out.push(mask);
        for child in children.iter().flatten() {
            encode_node(child, opts, out);
        }
        return;
    }
    let leaf = node.as_leaf().expect("node is either internal or leaf");
    out.push(TAG_LEAF);
    let entries = leaf.entries();
    out.extend_from_slice(&u32::try_from(entries.len()).expect("leaf entry count fits in u32").to_le_bytes());
    if opts.with_tags {
        if let Some(tag) = leaf.mbr() {
            out.extend_from_slice(&tag.to_bytes());
        }
    }
    for e in entries {
        out.extend_from_slice(&e.id.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.extend_from_slice(&e.t.to_le_bytes());
    }
}

/// Writes the tree with tags and returns the number of bytes written.
pub fn save(tree: &HocTree, path: &Path) -> Result<u64, PersistError> {
    save_with(tree, path, SaveOptions::default())
}

pub fn save_with(tree: &HocTree, path: &Path, opts: SaveOptions) -> Result<u64, PersistError> {
    let bytes = encode(tree, opts);
    fs::write(path, &bytes).map_err(|source| PersistError::Io { path: path.to_owned(), source })?;
    Ok(bytes.len() as u64)
}

pub fn load(path: &Path) -> Result<HocTree, PersistError> {
    let bytes = fs::read(path).map_err(|source| PersistError::Io { path: path.to_owned(), source })?;
    decode(&bytes)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(PersistError::Corrupt(format!("node data runs past the payload at byte {}", self.pos)));
        };
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], PersistError> {
        Ok(self.take(N)?.try_into().expect("slice has length N"))
    }

    fn u8(&mut self) -> Result<u8, PersistError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<HocTree, PersistError> {
    if bytes.len() < MAGIC.len() {
        return Err(PersistError::Truncated { needed: MAGIC.len(), available: bytes.len() });
    }
    if bytes[..MAGIC.len()] != MAGIC {
        return Err(PersistError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(PersistError::Truncated { needed: HEADER_LEN, available: bytes.len() });
    }
    let mut header = Cursor { buf: &bytes[..HEADER_LEN], pos: MAGIC.len() };
    let version = header.u32()?;
    if version != VERSION {
        return Err(PersistError::UnsupportedVersion(version));
    }
    let flags = header.u32()?;
    let mut bounds = [0f64; 6];
    for b in &mut bounds {
        *b = header.f64()?;
    }
    let max_depth = header.u32()?;
    let split_threshold = header.u64()?;
    let object_count = header.u64()?;
    let payload_len = header.u64()?;
    let stored_crc = header.u32()?;

    let available = bytes.len() - HEADER_LEN;
    let payload_len = usize::try_from(payload_len).map_err(|_| PersistError::Corrupt("payload length overflows".into()))?;
    if available < payload_len {
        return Err(PersistError::Truncated { needed: HEADER_LEN + payload_len, available: bytes.len() });
    }
    if available > payload_len {
        return Err(PersistError::Corrupt(format!("{} trailing bytes after payload", available - payload_len)));
    }
    let payload = &bytes[HEADER_LEN..];
    let computed = crc32fast::hash(payload);
    if computed != stored_crc {
        return Err(PersistError::ChecksumMismatch { stored: stored_crc, computed });
    }
    if flags & !FLAG_TAGS != 0 {
        return Err(PersistError::Corrupt(format!("unknown flags {flags:#x}")));
    }

    let [x_lo, x_hi, y_lo, y_hi, t_lo, t_hi] = bounds;
    let config = IndexConfig {
        x_lo,
        x_hi,
        y_lo,
        y_hi,
        t_lo,
        t_hi,
        max_depth,
        split_threshold: usize::try_from(split_threshold).map_err(|_| PersistError::Corrupt("split threshold overflows".into()))?,
    };
    config.validate().map_err(IndexError::from)?;

    let mut cur = Cursor { buf: payload, pos: 0 };
    let root = decode_node(&mut cur, CellCoord::ROOT, max_depth, flags & FLAG_TAGS != 0)?;
    if cur.pos != payload.len() {
        return Err(PersistError::Corrupt(format!("{} unread payload bytes", payload.len() - cur.pos)));
    }
    let tree = HocTree::from_root(config, root)?;
    if tree.object_count() as u64 != object_count {
        return Err(PersistError::Corrupt(format!("header records {object_count} objects, payload holds {}", tree.object_count())));
    }
    Ok(tree)
}

fn decode_node(cur: &mut Cursor<'_>, cell: CellCoord, max_depth: u32, tags: bool) -> Result<Node, PersistError> {
    match cur.u8()? {
        TAG_INTERNAL => {
            if cell.depth() >= max_depth.min(MAX_ORDER) {
                return Err(PersistError::Corrupt(format!("internal node at deepest level {:?}", cell)));
            }
            let mask = cur.u8()?;
            let mut children: Children = Default::default();
            for (octant, slot) in children.iter_mut().enumerate() {
                if mask & (1 << octant) != 0 {
                    *slot = Some(Box::new(decode_node(cur, cell.child(octant as u8), max_depth, tags)?));
                }
            }
            Ok(Node::new_internal(cell, children))
        }
        TAG_LEAF => {
            let count = cur.u32()? as usize;
            let stored_tag = if tags && count > 0 { Some(MbrSign::from_bytes(cur.array::<MBR_SIGN_BYTES>()?)) } else { None };
            let remaining = cur.buf.len() - cur.pos;
            if count.saturating_mul(ENTRY_BYTES) > remaining {
                return Err(PersistError::Corrupt(format!("leaf claims {count} entries beyond payload end")));
            }
            let mut entries = Vec::with_capacity(count);
            for _ in 0..count {
                let id = cur.u64()?;
                entries.push(StObject::new(id, cur.f64()?, cur.f64()?, cur.f64()?));
            }
            let tag = match stored_tag {
                Some(tag) => Some(tag),
                None if count > 0 => Some(compute_mbrsign(&entries)?),
                None => None,
            };
            Ok(Node::new_leaf(cell, entries, tag))
        }
        other => Err(PersistError::Corrupt(format!("unknown node tag {other:#04x}"))),
    }
}

/// Number of non-empty leaves, i.e. of stored MBR tags.
pub fn tagged_leaf_count(tree: &HocTree) -> usize {
    tree.leaves().filter_map(Node::as_leaf).filter(|l| !l.entries().is_empty()).count()
}
