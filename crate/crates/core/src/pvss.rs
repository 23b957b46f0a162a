//! Threshold sharing of a revocation secret among revocation issuers.
//!
//! The dealer picks `p(x) = rev + a_1 x + … + a_{t-1} x^{t-1}` and publishes
//!
//! * commitments `C_j = a_j · G2` (so `C_0 = r`),
//! * for each issuer `i` with Diffie-Hellman key `y_i = x_i · G1`:
//!   the exponent share `Y_i = p(i) · y_i`, an ephemeral key `E_i = k_i · G1`
//!   and `ct_i`, the scalar `p(i)` sealed with ChaCha20-Poly1305 under
//!   `SHA-256(label ‖ k_i · y_i)`.
//!
//! Anyone can check `e(X_i, y_i) == e(G2, Y_i)` with `X_i = Σ i^j · C_j`.
//! The receiving issuer additionally checks that the decrypted scalar
//! matches both `X_i` and `Y_i`, and complains otherwise. Revealed scalar
//! shares are checked against `X_i` and combined by Lagrange interpolation
//! at zero; the result is accepted only if `rev · G2 == C_0`.

use std::collections::HashSet;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use rand_core::CryptoRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::b64_vec;
use crate::group::{pairing_product_is_identity, G1Point, G2Point, Scalar};

const KDF_LABEL: &[u8] = b"SDBLS-V01-PVSS-share-key";
const POK_LABEL: &[u8] = b"SDBLS-V01-PVSS-share-pok";
const BUNDLE_LABEL: &[u8] = b"SDBLS-V01-PVSS-bundle";

pub const TAG_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DealError {
    #[error("threshold must satisfy 1 < t <= n (t = {t}, n = {n})")]
    InvalidThreshold { t: u32, n: u32 },
    #[error("expected {expected} issuer keys, got {actual}")]
    IssuerCount { expected: u32, actual: usize },
    #[error("issuer keys must be distinct and non-identity")]
    BadIssuerKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DealRejection {
    #[error("bundle shape is inconsistent: {0}")]
    Shape(&'static str),
    #[error("share at position {position} carries index {found}")]
    IndexMismatch { position: usize, found: u32 },
    #[error("exponent share of issuer {index} does not match the commitments")]
    PairingMismatch { index: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplaintReason {
    UnknownIndex,
    Decryption,
    CommitmentMismatch,
    ExponentShareMismatch,
}

/// Raised by a revocation issuer whose share is inconsistent with the
/// public bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("issuer {index} complains: {reason:?}")]
pub struct ShareComplaint {
    pub index: u32,
    pub reason: ComplaintReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("need {needed} valid shares, got {got}")]
    TooFewShares { needed: u32, got: usize },
    #[error("share index {0} appears twice")]
    DuplicateIndex(u32),
    #[error("share index {0} is outside 1..=n")]
    UnknownIndex(u32),
    #[error("shares from issuers {indices:?} do not match the commitments")]
    InvalidShares { indices: Vec<u32> },
    #[error("interpolated secret does not match C_0")]
    SecretMismatch,
}

/// A revocation issuer's Diffie-Hellman key pair `(x, y = x · G1)`.
#[derive(Clone)]
pub struct IssuerDhKeys {
    x: Scalar,
    y: G1Point,
}

impl IssuerDhKeys {
    pub fn generate<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        Self::from_secret(Scalar::random(rng))
    }

    pub fn from_secret(x: Scalar) -> Self {
        IssuerDhKeys { x, y: G1Point::mul_generator(&x) }
    }

    pub fn public(&self) -> G1Point {
        self.y
    }

    pub fn secret(&self) -> &Scalar {
        &self.x
    }
}

impl std::fmt::Debug for IssuerDhKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IssuerDhKeys").field("y", &self.y).finish_non_exhaustive()
    }
}

impl Drop for IssuerDhKeys {
    fn drop(&mut self) {
        zeroize::Zeroize::zeroize(&mut self.x);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncryptedShare {
    pub i: u32,
    #[serde(rename = "Y")]
    pub exponent_share: G1Point,
    #[serde(rename = "E")]
    pub ephemeral: G1Point,
    /// 32-byte sealed scalar followed by the 16-byte tag.
    #[serde(with = "b64_vec")]
    pub ct: Vec<u8>,
}

/// Everything the dealer publishes for one revocation secret.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealerBundle {
    pub n: u32,
    pub t: u32,
    pub commitments: Vec<G2Point>,
    pub shares: Vec<EncryptedShare>,
}

impl DealerBundle {
    /// `C_0`, which equals the revocation public key `r`.
    pub fn revocation_key(&self) -> Option<G2Point> {
        self.commitments.first().copied()
    }

    /// `X_i = Σ_j i^j · C_j`, evaluated by Horner's rule.
    pub fn share_commitment(&self, i: u32) -> G2Point {
        self.commitments.iter().rev().fold(G2Point::identity(), |acc, c| acc.mul_small(u64::from(i)) + *c)
    }

    /// Transcript hash binding proofs to this exact bundle.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(BUNDLE_LABEL);
        h.update(self.n.to_be_bytes());
        h.update(self.t.to_be_bytes());
        for c in &self.commitments {
            h.update(c.to_bytes());
        }
        for s in &self.shares {
            h.update(s.i.to_be_bytes());
            h.update(s.exponent_share.to_bytes());
            h.update(s.ephemeral.to_bytes());
            h.update((s.ct.len() as u32).to_be_bytes());
            h.update(&s.ct);
        }
        h.finalize().into()
    }

    fn share(&self, i: u32) -> Option<&EncryptedShare> {
        self.shares.iter().find(|s| s.i == i)
    }
}

/// Dealer-side secrets, returned for auditing in tests and dropped by
/// honest dealers.
#[derive(Debug, Clone)]
pub struct DealTranscript {
    pub coefficients: Vec<Scalar>,
    /// `shares[k] = p(k + 1)`.
    pub shares: Vec<Scalar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedShare {
    pub i: u32,
    pub s: Scalar,
}

/// Schnorr proof of knowledge of `s_i` with `X_i = s_i · G2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharePossessionProof {
    pub i: u32,
    pub commitment: G2Point,
    pub response: Scalar,
}

pub fn evaluate_polynomial(coefficients: &[Scalar], x: u32) -> Scalar {
    let x = Scalar::from_u64(u64::from(x));
    coefficients.iter().rev().fold(Scalar::zero(), |acc, c| acc * x + *c)
}

fn share_cipher(dh: &G1Point) -> ChaCha20Poly1305 {
    let mut h = Sha256::new();
    h.update(KDF_LABEL);
    h.update(dh.to_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha20Poly1305::new(Key::from_slice(&key))
}

fn share_aad(i: u32, exponent_share: &G1Point) -> Vec<u8> {
    [&i.to_be_bytes()[..], &exponent_share.to_bytes()].concat()
}

/// Encrypts `s` to issuer key `y` under ephemeral scalar `eph`, bound to
/// `(i, exponent_share)`. Returns the ephemeral point and ciphertext.
pub fn seal_share(i: u32, s: &Scalar, exponent_share: &G1Point, y: &G1Point, eph: &Scalar) -> (G1Point, Vec<u8>) {
    let ct = share_cipher(&(y * eph))
        .encrypt(Nonce::from_slice(&[0u8; 12]), Payload { msg: &s.to_bytes(), aad: &share_aad(i, exponent_share) })
        .expect("encryption of 32 bytes cannot fail");
    (G1Point::mul_generator(eph), ct)
}

pub fn deal<R: CryptoRng + ?Sized>(
    rev: &Scalar,
    t: u32,
    n: u32,
    issuer_pks: &[G1Point],
    rng: &mut R,
) -> Result<(DealerBundle, DealTranscript), DealError> {
    if t < 2 || t > n {
        return Err(DealError::InvalidThreshold { t, n });
    }
    if issuer_pks.len() != n as usize {
        return Err(DealError::IssuerCount { expected: n, actual: issuer_pks.len() });
    }
    let distinct: HashSet<[u8; 48]> = issuer_pks.iter().map(G1Point::to_bytes).collect();
    if distinct.len() != issuer_pks.len() || issuer_pks.iter().any(G1Point::is_identity) {
        return Err(DealError::BadIssuerKey);
    }

    let mut coefficients = vec![*rev];
    coefficients.extend((1..t).map(|_| Scalar::random(rng)));
    let commitments = coefficients.iter().map(G2Point::mul_generator).collect();

    let mut shares = Vec::with_capacity(n as usize);
    let mut values = Vec::with_capacity(n as usize);
    for (k, y) in issuer_pks.iter().enumerate() {
        let i = k as u32 + 1;
        let s = evaluate_polynomial(&coefficients, i);
        let exponent_share = y * &s;
        let (ephemeral, ct) = seal_share(i, &s, &exponent_share, y, &Scalar::random(rng));
        shares.push(EncryptedShare { i, exponent_share, ephemeral, ct });
        values.push(s);
    }
    Ok((DealerBundle { n, t, commitments, shares }, DealTranscript { coefficients, shares: values }))
}

/// Public check of a bundle against the issuers' Diffie-Hellman keys.
pub fn verify_deal(bundle: &DealerBundle, issuer_pks: &[G1Point]) -> Result<(), DealRejection> {
    if bundle.t < 2 || bundle.t > bundle.n {
        return Err(DealRejection::Shape("threshold out of range"));
    }
    if bundle.commitments.len() != bundle.t as usize {
        return Err(DealRejection::Shape("commitment count differs from t"));
    }
    if bundle.shares.len() != bundle.n as usize || issuer_pks.len() != bundle.n as usize {
        return Err(DealRejection::Shape("share or key count differs from n"));
    }
    for (position, share) in bundle.shares.iter().enumerate() {
        if share.i as usize != position + 1 {
            return Err(DealRejection::IndexMismatch { position, found: share.i });
        }
    }
    let g2 = G2Point::generator();
    for (share, y) in bundle.shares.iter().zip(issuer_pks) {
        let x_i = bundle.share_commitment(share.i);
        if !pairing_product_is_identity(&[(&x_i, y), (&g2, &-share.exponent_share)]) {
            return Err(DealRejection::PairingMismatch { index: share.i });
        }
    }
    Ok(())
}

/// Decrypts and checks issuer `index`'s share. Call after [`verify_deal`].
pub fn accept_share(issuer: &IssuerDhKeys, index: u32, bundle: &DealerBundle) -> Result<Scalar, ShareComplaint> {
    let complaint = |reason| ShareComplaint { index, reason };
    let share = bundle.share(index).ok_or(complaint(ComplaintReason::UnknownIndex))?;
    let plain = share_cipher(&(share.ephemeral * issuer.x))
        .decrypt(
            Nonce::from_slice(&[0u8; 12]),
            Payload { msg: &share.ct, aad: &share_aad(index, &share.exponent_share) },
        )
        .map_err(|_| complaint(ComplaintReason::Decryption))?;
    let s = Scalar::from_bytes(&plain).map_err(|_| complaint(ComplaintReason::Decryption))?;
    if G2Point::mul_generator(&s) != bundle.share_commitment(index) {
        return Err(complaint(ComplaintReason::CommitmentMismatch));
    }
    if issuer.y * s != share.exponent_share {
        return Err(complaint(ComplaintReason::ExponentShareMismatch));
    }
    Ok(s)
}

fn pok_challenge(bundle_digest: &[u8; 32], i: u32, x_i: &G2Point, commitment: &G2Point) -> Scalar {
    Scalar::hash_to_scalar(POK_LABEL, &[bundle_digest, &i.to_be_bytes(), &x_i.to_bytes(), &commitment.to_bytes()])
}

pub fn prove_share_possession<R: CryptoRng + ?Sized>(
    share: &RevealedShare,
    bundle: &DealerBundle,
    rng: &mut R,
) -> SharePossessionProof {
    let k = Scalar::random(rng);
    let commitment = G2Point::mul_generator(&k);
    let c = pok_challenge(&bundle.digest(), share.i, &bundle.share_commitment(share.i), &commitment);
    SharePossessionProof { i: share.i, commitment, response: k + c * share.s }
}

pub fn verify_share_possession(proof: &SharePossessionProof, bundle: &DealerBundle) -> bool {
    if proof.i == 0 || proof.i > bundle.n {
        return false;
    }
    let x_i = bundle.share_commitment(proof.i);
    let c = pok_challenge(&bundle.digest(), proof.i, &x_i, &proof.commitment);
    G2Point::mul_generator(&proof.response) == proof.commitment + x_i * c
}

/// Lagrange interpolation at zero over the given points. No checks.
pub fn interpolate_at_zero(points: &[RevealedShare]) -> Scalar {
    points
        .iter()
        .map(|p| {
            let xi = Scalar::from_u64(u64::from(p.i));
            let (num, den) =
                points.iter().filter(|q| q.i != p.i).fold((Scalar::one(), Scalar::one()), |(num, den), q| {
                    let xj = Scalar::from_u64(u64::from(q.i));
                    (num * xj, den * (xj - xi))
                });
            p.s * num * den.invert().expect("indices are distinct")
        })
        .sum()
}

/// Recovers `rev` from revealed shares after checking every share
/// against its commitment.
pub fn reconstruct(shares: &[RevealedShare], bundle: &DealerBundle) -> Result<Scalar, ReconstructError> {
    let mut seen = HashSet::new();
    for s in shares {
        if s.i == 0 || s.i > bundle.n {
            return Err(ReconstructError::UnknownIndex(s.i));
        }
        if !seen.insert(s.i) {
            return Err(ReconstructError::DuplicateIndex(s.i));
        }
    }
    let invalid: Vec<u32> =
        shares.iter().filter(|s| G2Point::mul_generator(&s.s) != bundle.share_commitment(s.i)).map(|s| s.i).collect();
    if !invalid.is_empty() {
        return Err(ReconstructError::InvalidShares { indices: invalid });
    }
    if shares.len() < bundle.t as usize {
        return Err(ReconstructError::TooFewShares { needed: bundle.t, got: shares.len() });
    }
    let rev = interpolate_at_zero(shares);
    match bundle.revocation_key() {
        Some(c0) if G2Point::mul_generator(&rev) == c0 => Ok(rev),
        _ => Err(ReconstructError::SecretMismatch),
    }
}
