//! Public revocation lists.
//!
//! A list holds revealed revocation secrets `rev` and nothing else, so it
//! says nothing about holders. A presented `r` is revoked when some entry
//! satisfies `rev · G2 == r`. The check only means something after the
//! presentation's signature has verified, since a holder who lies about `r`
//! already fails verification.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::codec::{self, CodecError};
use crate::group::{G2Point, Scalar, G2_BYTES, SCALAR_BYTES};

#[derive(Debug, Error)]
pub enum RevocationError {
    #[error("revocation secret is zero")]
    ZeroSecret,
    #[error("index is stale: built from {indexed} entries, list has {current}")]
    StaleIndex { indexed: usize, current: usize },
    #[error("duplicate entry at line {0}")]
    Duplicate(usize),
    #[error("malformed entry at line {line}: {source}")]
    Malformed { line: usize, source: CodecError },
    #[error("raw list length {0} is not a multiple of 32")]
    RawLength(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PublishOutcome {
    Appended,
    AlreadyPresent,
}

/// Append-only, duplicate-free list of revealed revocation secrets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RevocationList {
    entries: Vec<Scalar>,
    seen: HashSet<[u8; SCALAR_BYTES]>,
}

impl RevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    pub fn contains(&self, rev: &Scalar) -> bool {
        self.seen.contains(&rev.to_bytes())
    }

    pub fn publish(&mut self, rev: Scalar) -> Result<PublishOutcome, RevocationError> {
        if rev.is_zero() {
            return Err(RevocationError::ZeroSecret);
        }
        if !self.seen.insert(rev.to_bytes()) {
            return Ok(PublishOutcome::AlreadyPresent);
        }
        self.entries.push(rev);
        Ok(PublishOutcome::Appended)
    }

    /// One base64url scalar per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 44);
        for e in &self.entries {
            out.push_str(&codec::encode(e.to_bytes()));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RevocationError> {
        let mut list = RevocationList::new();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |source| RevocationError::Malformed { line: k + 1, source };
            let bytes = codec::decode_array::<SCALAR_BYTES>(line).map_err(malformed)?;
            let rev = Scalar::from_bytes(&bytes).map_err(|e| malformed(e.into()))?;
            if list.publish(rev)? == PublishOutcome::AlreadyPresent {
                return Err(RevocationError::Duplicate(k + 1));
            }
        }
        Ok(list)
    }

    /// Concatenated 32-byte big-endian scalars.
    pub fn to_raw(&self) -> Vec<u8> {
        self.entries.iter().flat_map(|e| e.to_bytes()).collect()
    }

    pub fn from_raw(bytes: &[u8]) -> Result<Self, RevocationError> {
        if !bytes.len().is_multiple_of(SCALAR_BYTES) {
            return Err(RevocationError::RawLength(bytes.len()));
        }
        let mut list = RevocationList::new();
        for (k, chunk) in bytes.chunks(SCALAR_BYTES).enumerate() {
            let rev =
                Scalar::from_bytes(chunk).map_err(|e| RevocationError::Malformed { line: k + 1, source: e.into() })?;
            if list.publish(rev)? == PublishOutcome::AlreadyPresent {
                return Err(RevocationError::Duplicate(k + 1));
            }
        }
        Ok(list)
    }

    pub fn load(path: &Path) -> Result<Self, RevocationError> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), RevocationError> {
        Ok(fs::write(path, self.to_text())?)
    }
}

/// Appends `rev` unless it is already listed.
pub fn publish_revocation(list: &mut RevocationList, rev: Scalar) -> Result<PublishOutcome, RevocationError> {
    list.publish(rev)
}

/// Linear scan: one G2 multiplication per entry.
pub fn is_revoked_scan(r: &G2Point, list: &RevocationList) -> bool {
    list.entries.iter().any(|rev| G2Point::mul_generator(rev) == *r)
}

/// The same scan split across `threads` worker threads.
pub fn is_revoked_scan_parallel(r: &G2Point, list: &RevocationList, threads: usize) -> bool {
    let threads = threads.max(1);
    let chunk = list.entries.len().div_ceil(threads).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = list
            .entries
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().any(|rev| G2Point::mul_generator(rev) == *r)))
            .collect();
        handles.into_iter().any(|h| h.join().expect("scan worker panicked"))
    })
}

/// Precomputed `rev · G2` encodings for constant-time-per-check lookups.
#[derive(Debug, Clone, Default)]
pub struct RevocationIndex {
    points: HashSet<[u8; G2_BYTES]>,
    source_length: usize,
}

impl RevocationIndex {
    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lookup without staleness check.
    pub fn contains(&self, r: &G2Point) -> bool {
        self.points.contains(&r.to_bytes())
    }

    /// Brings the index up to date with entries appended since it was built.
    pub fn refresh(&mut self, list: &RevocationList) {
        for rev in &list.entries[self.source_length.min(list.len())..] {
            self.points.insert(G2Point::mul_generator(rev).to_bytes());
        }
        self.source_length = list.len();
    }
}

pub fn build_index(list: &RevocationList) -> RevocationIndex {
    let mut index = RevocationIndex::default();
    index.refresh(list);
    index
}

/// Index lookup; fails if the list grew since the index was built.
pub fn is_revoked_indexed(
    r: &G2Point,
    index: &RevocationIndex,
    list: &RevocationList,
) -> Result<bool, RevocationError> {
    if index.source_length != list.len() {
        return Err(RevocationError::StaleIndex { indexed: index.source_length, current: list.len() });
    }
    Ok(index.contains(r))
}
