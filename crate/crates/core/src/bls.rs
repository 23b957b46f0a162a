//! BLS signatures with signatures in G1 and public keys in G2.

use rand_core::CryptoRng;
use thiserror::Error;
use zeroize::Zeroize;

use crate::group::{hash_to_g1, pairing_product_is_identity, G1Point, G2Point, Scalar, DOMAIN_TAG};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlsError {
    #[error("secret key is zero")]
    ZeroSecretKey,
    #[error("cannot aggregate an empty list")]
    EmptyAggregate,
}

/// A secret scalar and its public key `sk · G2`.
///
/// The secret is wiped on drop and is never part of any serialized
/// presentation or verification artifact.
#[derive(Clone)]
pub struct KeyPair {
    sk: Scalar,
    pk: G2Point,
}

impl KeyPair {
    pub fn from_secret(sk: Scalar) -> Result<Self, BlsError> {
        if sk.is_zero() {
            return Err(BlsError::ZeroSecretKey);
        }
        Ok(KeyPair { sk, pk: G2Point::mul_generator(&sk) })
    }

    pub fn secret(&self) -> &Scalar {
        &self.sk
    }

    pub fn public(&self) -> G2Point {
        self.pk
    }

    pub fn sign(&self, msg: &[u8]) -> G1Point {
        sign_point(&self.sk, &message_point(msg))
    }
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair").field("pk", &self.pk).finish_non_exhaustive()
    }
}

impl Drop for KeyPair {
    fn drop(&mut self) {
        self.sk.zeroize();
    }
}

pub fn keygen<R: CryptoRng + ?Sized>(rng: &mut R) -> KeyPair {
    KeyPair::from_secret(Scalar::random(rng)).expect("random scalars are non-zero")
}

/// The point `U` a message is hashed to before signing.
pub fn message_point(msg: &[u8]) -> G1Point {
    hash_to_g1(DOMAIN_TAG, msg)
}

fn sign_point(sk: &Scalar, u: &G1Point) -> G1Point {
    u * sk
}

pub fn sign(sk: &Scalar, msg: &[u8]) -> Result<G1Point, BlsError> {
    if sk.is_zero() {
        return Err(BlsError::ZeroSecretKey);
    }
    Ok(sign_point(sk, &message_point(msg)))
}

/// Signs an already hashed message point; used when several keys sign the
/// same message.
pub fn sign_hashed(sk: &Scalar, u: &G1Point) -> Result<G1Point, BlsError> {
    if sk.is_zero() {
        return Err(BlsError::ZeroSecretKey);
    }
    Ok(sign_point(sk, u))
}

/// Checks `e(pk, U) == e(G2, σ)`. The identity public key never verifies.
pub fn verify(pk: &G2Point, msg: &[u8], sig: &G1Point) -> bool {
    verify_hashed(pk, &message_point(msg), sig)
}

pub fn verify_hashed(pk: &G2Point, u: &G1Point, sig: &G1Point) -> bool {
    if pk.is_identity() {
        return false;
    }
    pairing_product_is_identity(&[(pk, u), (&G2Point::generator(), &-*sig)])
}

pub fn aggregate_sigs(sigs: &[G1Point]) -> Result<G1Point, BlsError> {
    if sigs.is_empty() {
        return Err(BlsError::EmptyAggregate);
    }
    Ok(sigs.iter().copied().sum())
}

pub fn aggregate_pks(pks: &[G2Point]) -> Result<G2Point, BlsError> {
    if pks.is_empty() {
        return Err(BlsError::EmptyAggregate);
    }
    Ok(pks.iter().copied().sum())
}
