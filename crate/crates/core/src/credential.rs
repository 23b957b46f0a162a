//! Issuance of signed claims with an embedded revocation key.
//!
//! For every claim `m` the issuer draws a fresh revocation secret `rev`
//! (public key `r = rev · G2`) and a 16-byte nonce, computes
//!
//! ```text
//! H = digest(b64(m) ":" b64(nonce) ":" b64(r))
//! σ = sign(A.sk, b64(H) ":" b64(r)) + sign(rev, b64(H) ":" b64(r))
//! ```
//!
//! so that `σ` verifies under the aggregated key `A.pk + r`. The pair
//! `{H, rev}` goes to the issuer's private registry and can later be
//! published to revoke the claim.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use argon2::{Algorithm, Argon2, Params, Version};
use rand_core::CryptoRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bls::{self, KeyPair};
use crate::codec::{self, b64_array};
use crate::group::{G1Point, G2Point, Scalar};

pub const NONCE_LEN: usize = 16;
pub const DIGEST_LEN: usize = 32;
const SEPARATOR: u8 = b':';
const KDF_SALT: &[u8] = b"SDBLS-V01-digest";

#[derive(Debug, Error)]
pub enum CredentialError {
    #[error("no claims given")]
    NoClaims,
    #[error("claim content is empty")]
    EmptyClaim,
    #[error("revocation signature does not verify under r; the dealer is dishonest")]
    InvalidRevocationSignature,
    #[error("memory-hard digest failed: {0}")]
    Kdf(String),
    #[error("registry i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed registry line {line}: {source}")]
    Registry { line: usize, source: serde_json::Error },
}

/// The 32-byte claim digest `H`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClaimDigest(#[serde(with = "b64_array")] pub [u8; DIGEST_LEN]);

impl std::fmt::Debug for ClaimDigest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ClaimDigest({})", codec::encode(self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryHardParams {
    pub memory_kib: u32,
    pub iterations: u32,
    pub lanes: u32,
}

impl Default for MemoryHardParams {
    fn default() -> Self {
        MemoryHardParams { memory_kib: 19 * 1024, iterations: 2, lanes: 1 }
    }
}

/// How `H` is derived from the framed claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DigestMode {
    #[default]
    Sha256,
    /// Argon2id with a fixed salt, slowing down guessing of `m`.
    MemoryHard(MemoryHardParams),
}

impl DigestMode {
    pub fn digest(&self, framed: &[u8]) -> Result<ClaimDigest, CredentialError> {
        match self {
            DigestMode::Sha256 => Ok(ClaimDigest(Sha256::digest(framed).into())),
            DigestMode::MemoryHard(p) => {
                let params = Params::new(p.memory_kib, p.iterations, p.lanes, Some(DIGEST_LEN))
                    .map_err(|e| CredentialError::Kdf(e.to_string()))?;
                let mut out = [0u8; DIGEST_LEN];
                Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
                    .hash_password_into(framed, KDF_SALT, &mut out)
                    .map_err(|e| CredentialError::Kdf(e.to_string()))?;
                Ok(ClaimDigest(out))
            }
        }
    }
}

fn join_b64(fields: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, f) in fields.iter().enumerate() {
        if k > 0 {
            out.push(SEPARATOR);
        }
        out.extend_from_slice(codec::encode(f).as_bytes());
    }
    out
}

/// Claim framing `b64(m):b64(nonce):b64(r)`, the preimage of `H`.
pub fn frame(m: &str, nonce: &[u8; NONCE_LEN], r: &G2Point) -> Vec<u8> {
    join_b64(&[m.as_bytes(), nonce, &r.to_bytes()])
}

/// Signed message framing `b64(H):b64(r)`.
pub fn frame2(h: &ClaimDigest, r: &G2Point) -> Vec<u8> {
    join_b64(&[&h.0, &r.to_bytes()])
}

pub fn claim_digest(
    mode: &DigestMode,
    m: &str,
    nonce: &[u8; NONCE_LEN],
    r: &G2Point,
) -> Result<ClaimDigest, CredentialError> {
    mode.digest(&frame(m, nonce, r))
}

/// A claim as held in the holder's wallet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedClaim {
    pub h: ClaimDigest,
    pub r: G2Point,
    pub sigma: G1Point,
    pub m: String,
    #[serde(with = "b64_array")]
    pub nonce: [u8; NONCE_LEN],
}

impl SignedClaim {
    /// Signature check under `issuer_pk + r` plus the digest check.
    pub fn verify(&self, issuer_pk: &G2Point, mode: &DigestMode) -> bool {
        let Ok(pk) = bls::aggregate_pks(&[*issuer_pk, self.r]) else { return false };
        bls::verify(&pk, &frame2(&self.h, &self.r), &self.sigma)
            && matches!(claim_digest(mode, &self.m, &self.nonce, &self.r), Ok(h) if h == self.h)
    }

    /// `H ‖ r ‖ σ` as raw bytes (176 bytes).
    pub fn core_bytes(&self) -> Vec<u8> {
        [&self.h.0[..], &self.r.to_bytes(), &self.sigma.to_bytes()].concat()
    }
}

/// `{H, rev}` kept privately by whoever may later revoke the claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationRecord {
    pub h: ClaimDigest,
    pub rev: Scalar,
}

/// A credential issuer: long-term keys plus the append-only registry of
/// revocation secrets for locally issued claims.
#[derive(Debug)]
pub struct IssuerIdentity {
    keys: KeyPair,
    registry: Vec<RevocationRecord>,
    mode: DigestMode,
}

impl IssuerIdentity {
    pub fn new(keys: KeyPair) -> Self {
        IssuerIdentity { keys, registry: Vec::new(), mode: DigestMode::Sha256 }
    }

    pub fn with_digest_mode(mut self, mode: DigestMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn public_key(&self) -> G2Point {
        self.keys.public()
    }

    pub fn digest_mode(&self) -> &DigestMode {
        &self.mode
    }

    pub fn registry(&self) -> &[RevocationRecord] {
        &self.registry
    }

    pub fn find_revocation(&self, h: &ClaimDigest) -> Option<&RevocationRecord> {
        self.registry.iter().find(|rec| rec.h == *h)
    }

    /// Issues one signed claim per entry, each with its own revocation key
    /// and nonce. Returns the claims and the registry records appended.
    pub fn issue_claims<R, S>(
        &mut self,
        claims: &[S],
        rng: &mut R,
    ) -> Result<(Vec<SignedClaim>, Vec<RevocationRecord>), CredentialError>
    where
        R: CryptoRng + ?Sized,
        S: AsRef<str>,
    {
        if claims.is_empty() {
            return Err(CredentialError::NoClaims);
        }
        if claims.iter().any(|m| m.as_ref().is_empty()) {
            return Err(CredentialError::EmptyClaim);
        }
        let mut issued = Vec::with_capacity(claims.len());
        let mut records = Vec::with_capacity(claims.len());
        for m in claims {
            let m = m.as_ref();
            let rev = Scalar::random(rng);
            let r = G2Point::mul_generator(&rev);
            let mut nonce = [0u8; NONCE_LEN];
            rng.fill_bytes(&mut nonce);
            let h = claim_digest(&self.mode, m, &nonce, &r)?;
            let u = bls::message_point(&frame2(&h, &r));
            let sigma = bls::aggregate_sigs(&[
                bls::sign_hashed(self.keys.secret(), &u).expect("issuer key is non-zero"),
                bls::sign_hashed(&rev, &u).expect("random scalars are non-zero"),
            ])
            .expect("two signatures");
            issued.push(SignedClaim { h, r, sigma, m: m.to_owned(), nonce });
            records.push(RevocationRecord { h, rev });
        }
        self.registry.extend(records.iter().cloned());
        Ok((issued, records))
    }

    /// Completes a claim whose revocation key was created by a revocation
    /// dealer. The dealer's `σ_rev` must verify under `r` before it is
    /// aggregated; the registry is left untouched since the issuer never
    /// learns `rev`.
    pub fn issue_with_external_revocation(
        &self,
        m: &str,
        r: &G2Point,
        sigma_rev: &G1Point,
        nonce: &[u8; NONCE_LEN],
    ) -> Result<SignedClaim, CredentialError> {
        if m.is_empty() {
            return Err(CredentialError::EmptyClaim);
        }
        let h = claim_digest(&self.mode, m, nonce, r)?;
        let u = bls::message_point(&frame2(&h, r));
        if !bls::verify_hashed(r, &u, sigma_rev) {
            return Err(CredentialError::InvalidRevocationSignature);
        }
        let own = bls::sign_hashed(self.keys.secret(), &u).expect("issuer key is non-zero");
        Ok(SignedClaim { h, r: *r, sigma: own + *sigma_rev, m: m.to_owned(), nonce: *nonce })
    }

    /// Appends the given records to a JSON-lines registry file.
    pub fn persist(&self, path: &Path, records: &[RevocationRecord]) -> Result<(), CredentialError> {
        append_registry(path, records)
    }
}

pub fn append_registry(path: &Path, records: &[RevocationRecord]) -> Result<(), CredentialError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    for rec in records {
        let line = serde_json::to_string(rec).expect("records serialize");
        writeln!(file, "{line}")?;
    }
    Ok(())
}

pub fn load_registry(path: &Path) -> Result<Vec<RevocationRecord>, CredentialError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| CredentialError::Registry { line: k + 1, source })?;
        out.push(rec);
    }
    Ok(out)
}
