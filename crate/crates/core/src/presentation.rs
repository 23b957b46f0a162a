//! Holder presentations and their verification.
//!
//! A [`BasicProof`] is a projection `{H, r, σ}` of a signed claim,
//! optionally with `(m, nonce)`. It verifies under `A.pk + r` and can be
//! replayed by anyone who has seen it.
//!
//! A [`OneTimeProof`] folds a fresh session key into the signature:
//!
//! ```text
//! σ'  = σ + sign(sk_t, H:r)
//! σ_t = sign(sk_t, H:r:σ':t:pk_t)
//! ```
//!
//! and verifies under `A.pk + r + pk_t` together with `σ_t` under `pk_t`.
//! The session string `t` names the intended audience and issue time.

use std::time::{SystemTime, UNIX_EPOCH};

use rand_core::CryptoRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use zeroize::Zeroize;

use crate::bls;
use crate::codec::{self, b64_array};
use crate::credential::{claim_digest, frame2, ClaimDigest, DigestMode, SignedClaim, NONCE_LEN};
use crate::group::{G1Point, G2Point, Scalar};

#[derive(Debug, Error)]
pub enum PresentationError {
    #[error("session string is empty")]
    EmptySession,
    #[error("max_age must be positive")]
    ZeroMaxAge,
    #[error("disclosure needs both m and nonce")]
    PartialDisclosure,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyViolation {
    #[error("session string is not a valid session object")]
    Malformed,
    #[error("audience mismatch: expected {expected:?}, found {found:?}")]
    AudienceMismatch { expected: String, found: String },
    #[error("session expired: age {age}s exceeds {max_age}s")]
    Expired { age: u64, max_age: u64 },
    #[error("session issued in the future")]
    NotYetValid,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("session policy violated: {0}")]
    Policy(#[from] PolicyViolation),
    #[error("session signature σ_t does not verify under pk_t")]
    SessionSignature,
    #[error("credential signature does not verify under the aggregated key")]
    CredentialSignature,
    #[error("disclosed claim does not hash to H")]
    DigestMismatch,
}

impl VerifyError {
    pub fn is_policy(&self) -> bool {
        matches!(self, VerifyError::Policy(_))
    }
}

/// Disclosed claim content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disclosure {
    pub m: String,
    pub nonce: [u8; NONCE_LEN],
}

#[derive(Serialize, Deserialize)]
struct DisclosureWire {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    m: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default, with = "opt_nonce")]
    nonce: Option<[u8; NONCE_LEN]>,
}

mod opt_nonce {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<[u8; NONCE_LEN]>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(n) => b64_array::serialize(n, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[u8; NONCE_LEN]>, D::Error> {
        b64_array::deserialize(d).map(Some)
    }
}

impl DisclosureWire {
    fn from_model(d: &Option<Disclosure>) -> Self {
        match d {
            Some(d) => DisclosureWire { m: Some(d.m.clone()), nonce: Some(d.nonce) },
            None => DisclosureWire { m: None, nonce: None },
        }
    }

    fn into_model(self) -> Result<Option<Disclosure>, PresentationError> {
        match (self.m, self.nonce) {
            (Some(m), Some(nonce)) => Ok(Some(Disclosure { m, nonce })),
            (None, None) => Ok(None),
            _ => Err(PresentationError::PartialDisclosure),
        }
    }
}

/// `{H, r, σ}` with optional disclosure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BasicProofWire", into = "BasicProofWire")]
pub struct BasicProof {
    pub h: ClaimDigest,
    pub r: G2Point,
    pub sigma: G1Point,
    pub disclosed: Option<Disclosure>,
}

#[derive(Serialize, Deserialize)]
struct BasicProofWire {
    h: ClaimDigest,
    r: G2Point,
    sigma: G1Point,
    #[serde(flatten)]
    disclosed: DisclosureWire,
}

impl TryFrom<BasicProofWire> for BasicProof {
    type Error = PresentationError;
    fn try_from(w: BasicProofWire) -> Result<Self, Self::Error> {
        Ok(BasicProof { h: w.h, r: w.r, sigma: w.sigma, disclosed: w.disclosed.into_model()? })
    }
}

impl From<BasicProof> for BasicProofWire {
    fn from(p: BasicProof) -> Self {
        BasicProofWire { h: p.h, r: p.r, sigma: p.sigma, disclosed: DisclosureWire::from_model(&p.disclosed) }
    }
}

/// `{H, r, σ', t, pk_t, σ_t}` with optional disclosure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OneTimeProofWire", into = "OneTimeProofWire")]
pub struct OneTimeProof {
    pub h: ClaimDigest,
    pub r: G2Point,
    pub sigma_prime: G1Point,
    pub t: String,
    pub pk_t: G2Point,
    pub sigma_t: G1Point,
    pub disclosed: Option<Disclosure>,
}

#[derive(Serialize, Deserialize)]
struct OneTimeProofWire {
    h: ClaimDigest,
    r: G2Point,
    sigma_prime: G1Point,
    t: String,
    pk_t: G2Point,
    sigma_t: G1Point,
    #[serde(flatten)]
    disclosed: DisclosureWire,
}

impl TryFrom<OneTimeProofWire> for OneTimeProof {
    type Error = PresentationError;
    fn try_from(w: OneTimeProofWire) -> Result<Self, Self::Error> {
        Ok(OneTimeProof {
            h: w.h,
            r: w.r,
            sigma_prime: w.sigma_prime,
            t: w.t,
            pk_t: w.pk_t,
            sigma_t: w.sigma_t,
            disclosed: w.disclosed.into_model()?,
        })
    }
}

impl From<OneTimeProof> for OneTimeProofWire {
    fn from(p: OneTimeProof) -> Self {
        OneTimeProofWire {
            disclosed: DisclosureWire::from_model(&p.disclosed),
            h: p.h,
            r: p.r,
            sigma_prime: p.sigma_prime,
            t: p.t,
            pk_t: p.pk_t,
            sigma_t: p.sigma_t,
        }
    }
}

impl OneTimeProof {
    /// `H ‖ r ‖ σ' ‖ pk_t ‖ σ_t ‖ t` as raw bytes.
    pub fn core_bytes(&self) -> Vec<u8> {
        [
            &self.h.0[..],
            &self.r.to_bytes(),
            &self.sigma_prime.to_bytes(),
            &self.pk_t.to_bytes(),
            &self.sigma_t.to_bytes(),
            self.t.as_bytes(),
        ]
        .concat()
    }
}

/// Contents of the session string `t`, serialized as
/// `{"aud":"<audience>","iat":<unix seconds>}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub aud: String,
    pub iat: u64,
}

impl SessionInfo {
    pub fn new(aud: impl Into<String>, iat: u64) -> Self {
        SessionInfo { aud: aud.into(), iat }
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("session info serializes")
    }

    pub fn parse(t: &str) -> Option<Self> {
        serde_json::from_str(t).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    System,
    Fixed(u64),
}

impl Clock {
    pub fn now(&self) -> u64 {
        match self {
            Clock::System => SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            Clock::Fixed(t) => *t,
        }
    }
}

/// What a verifier accepts as a valid session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionPolicy {
    expected_audience: String,
    max_age: u64,
    clock: Clock,
}

impl SessionPolicy {
    pub fn new(expected_audience: impl Into<String>, max_age: u64, clock: Clock) -> Result<Self, PresentationError> {
        if max_age == 0 {
            return Err(PresentationError::ZeroMaxAge);
        }
        Ok(SessionPolicy { expected_audience: expected_audience.into(), max_age, clock })
    }

    pub fn audience(&self) -> &str {
        &self.expected_audience
    }

    pub fn max_age(&self) -> u64 {
        self.max_age
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn check(&self, t: &str) -> Result<(), PolicyViolation> {
        let info = SessionInfo::parse(t).ok_or(PolicyViolation::Malformed)?;
        if info.aud != self.expected_audience {
            return Err(PolicyViolation::AudienceMismatch {
                expected: self.expected_audience.clone(),
                found: info.aud,
            });
        }
        let now = self.clock.now();
        if info.iat > now {
            return Err(PolicyViolation::NotYetValid);
        }
        let age = now - info.iat;
        if age > self.max_age {
            return Err(PolicyViolation::Expired { age, max_age: self.max_age });
        }
        Ok(())
    }
}

pub fn make_basic_proof(claim: &SignedClaim, disclose: bool) -> BasicProof {
    BasicProof {
        h: claim.h,
        r: claim.r,
        sigma: claim.sigma,
        disclosed: disclose.then(|| Disclosure { m: claim.m.clone(), nonce: claim.nonce }),
    }
}

/// Session framing `b64(H):b64(r):b64(σ'):b64(t):b64(pk_t)`.
pub fn frame3(h: &ClaimDigest, r: &G2Point, sigma_prime: &G1Point, t: &str, pk_t: &G2Point) -> Vec<u8> {
    let fields: [&[u8]; 5] = [&h.0, &r.to_bytes(), &sigma_prime.to_bytes(), t.as_bytes(), &pk_t.to_bytes()];
    let mut out = Vec::new();
    for (k, f) in fields.iter().enumerate() {
        if k > 0 {
            out.push(b':');
        }
        out.extend_from_slice(codec::encode(f).as_bytes());
    }
    out
}

/// Builds a session-bound presentation. The session secret is wiped
/// before returning.
pub fn make_one_time_proof<R: CryptoRng + ?Sized>(
    claim: &SignedClaim,
    t: &str,
    rng: &mut R,
    disclose: bool,
) -> Result<OneTimeProof, PresentationError> {
    if t.is_empty() {
        return Err(PresentationError::EmptySession);
    }
    let mut sk_t = Scalar::random(rng);
    let pk_t = G2Point::mul_generator(&sk_t);
    let session_part = bls::sign(&sk_t, &frame2(&claim.h, &claim.r)).expect("non-zero key");
    let sigma_prime = claim.sigma + session_part;
    let sigma_t = bls::sign(&sk_t, &frame3(&claim.h, &claim.r, &sigma_prime, t, &pk_t)).expect("non-zero key");
    sk_t.zeroize();
    Ok(OneTimeProof {
        h: claim.h,
        r: claim.r,
        sigma_prime,
        t: t.to_owned(),
        pk_t,
        sigma_t,
        disclosed: disclose.then(|| Disclosure { m: claim.m.clone(), nonce: claim.nonce }),
    })
}

fn check_disclosure(
    h: &ClaimDigest,
    r: &G2Point,
    disclosed: &Option<Disclosure>,
    mode: &DigestMode,
) -> Result<(), VerifyError> {
    if let Some(d) = disclosed {
        match claim_digest(mode, &d.m, &d.nonce, r) {
            Ok(computed) if computed == *h => {}
            _ => return Err(VerifyError::DigestMismatch),
        }
    }
    Ok(())
}

pub fn verify_basic(issuer_pk: &G2Point, proof: &BasicProof) -> Result<(), VerifyError> {
    verify_basic_with_mode(issuer_pk, proof, &DigestMode::Sha256)
}

pub fn verify_basic_with_mode(issuer_pk: &G2Point, proof: &BasicProof, mode: &DigestMode) -> Result<(), VerifyError> {
    let pk = *issuer_pk + proof.r;
    if !bls::verify(&pk, &frame2(&proof.h, &proof.r), &proof.sigma) {
        return Err(VerifyError::CredentialSignature);
    }
    check_disclosure(&proof.h, &proof.r, &proof.disclosed, mode)
}

pub fn verify_one_time(issuer_pk: &G2Point, proof: &OneTimeProof, policy: &SessionPolicy) -> Result<(), VerifyError> {
    verify_one_time_with_mode(issuer_pk, proof, policy, &DigestMode::Sha256)
}

/// Policy first, then `σ_t` under `pk_t`, then `σ'` under
/// `A.pk + r + pk_t`, then the disclosed digest.
pub fn verify_one_time_with_mode(
    issuer_pk: &G2Point,
    proof: &OneTimeProof,
    policy: &SessionPolicy,
    mode: &DigestMode,
) -> Result<(), VerifyError> {
    policy.check(&proof.t)?;
    let session_msg = frame3(&proof.h, &proof.r, &proof.sigma_prime, &proof.t, &proof.pk_t);
    if !bls::verify(&proof.pk_t, &session_msg, &proof.sigma_t) {
        return Err(VerifyError::SessionSignature);
    }
    let pk = bls::aggregate_pks(&[*issuer_pk, proof.r, proof.pk_t]).expect("three keys");
    if !bls::verify(&pk, &frame2(&proof.h, &proof.r), &proof.sigma_prime) {
        return Err(VerifyError::CredentialSignature);
    }
    check_disclosure(&proof.h, &proof.r, &proof.disclosed, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bls::keygen;
    use crate::credential::IssuerIdentity;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn setup() -> (IssuerIdentity, SignedClaim, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let mut iss = IssuerIdentity::new(keygen(&mut rng));
        let (claims, _) = iss.issue_claims(&["above18=true"], &mut rng).unwrap();
        (iss, claims.into_iter().next().unwrap(), rng)
    }

    fn policy(now: u64) -> SessionPolicy {
        SessionPolicy::new("shop.example", 60, Clock::Fixed(now)).unwrap()
    }

    #[test]
    fn basic_proof_projection() {
        let (iss, claim, _) = setup();
        let hidden = make_basic_proof(&claim, false);
        assert!(hidden.disclosed.is_none());
        assert_eq!(verify_basic(&iss.public_key(), &hidden), Ok(()));
        let shown = make_basic_proof(&claim, true);
        assert_eq!(shown.disclosed.as_ref().unwrap().m, "above18=true");
        assert_eq!(verify_basic(&iss.public_key(), &shown), Ok(()));
    }

    #[test]
    fn basic_proof_rejections() {
        let (iss, claim, _) = setup();
        let mut p = make_basic_proof(&claim, true);
        p.r += G2Point::generator();
        assert_eq!(verify_basic(&iss.public_key(), &p), Err(VerifyError::CredentialSignature));
        let mut p = make_basic_proof(&claim, true);
        p.disclosed.as_mut().unwrap().m = "above18=false".into();
        assert_eq!(verify_basic(&iss.public_key(), &p), Err(VerifyError::DigestMismatch));
    }

    #[test]
    fn basic_proof_replay_is_accepted() {
        let (iss, claim, _) = setup();
        let p = make_basic_proof(&claim, false);
        let replayed: BasicProof = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(verify_basic(&iss.public_key(), &replayed), Ok(()));
    }

    #[test]
    fn frame3_layout() {
        let (_, claim, _) = setup();
        let pk_t = G2Point::generator();
        let f = frame3(&claim.h, &claim.r, &claim.sigma, "t", &pk_t);
        let expected = [
            codec::encode(claim.h.0),
            codec::encode(claim.r.to_bytes()),
            codec::encode(claim.sigma.to_bytes()),
            codec::encode("t"),
            codec::encode(pk_t.to_bytes()),
        ]
        .join(":");
        assert_eq!(f, expected.into_bytes());
        assert_ne!(f, frame3(&claim.h, &claim.r, &(claim.sigma + G1Point::generator()), "t", &pk_t));
    }

    #[test]
    fn one_time_roundtrip_and_freshness() {
        let (iss, claim, mut rng) = setup();
        let t = SessionInfo::new("shop.example", 1000).encode();
        assert_eq!(t, r#"{"aud":"shop.example","iat":1000}"#);
        let a = make_one_time_proof(&claim, &t, &mut rng, false).unwrap();
        let b = make_one_time_proof(&claim, &t, &mut rng, true).unwrap();
        assert_eq!(verify_one_time(&iss.public_key(), &a, &policy(1010)), Ok(()));
        assert_eq!(verify_one_time(&iss.public_key(), &b, &policy(1010)), Ok(()));
        assert_ne!(a.pk_t, b.pk_t);
        assert_ne!(a.sigma_prime, b.sigma_prime);
        assert_ne!(a.sigma_t, b.sigma_t);
        assert!(matches!(make_one_time_proof(&claim, "", &mut rng, false), Err(PresentationError::EmptySession)));
    }

    #[test]
    fn wrong_session_key_cannot_recover_sigma() {
        let (iss, claim, mut rng) = setup();
        let t = SessionInfo::new("shop.example", 1000).encode();
        let p = make_one_time_proof(&claim, &t, &mut rng, false).unwrap();
        let guess = Scalar::random(&mut rng);
        let recovered = p.sigma_prime - bls::sign(&guess, &frame2(&p.h, &p.r)).unwrap();
        assert_ne!(recovered, claim.sigma);
        let stripped = BasicProof { h: p.h, r: p.r, sigma: recovered, disclosed: None };
        assert_eq!(verify_basic(&iss.public_key(), &stripped), Err(VerifyError::CredentialSignature));
    }

    #[test]
    fn policy_checks() {
        let (iss, claim, mut rng) = setup();
        let p = make_one_time_proof(&claim, &SessionInfo::new("shop.example", 1000).encode(), &mut rng, false).unwrap();
        let err = verify_one_time(&iss.public_key(), &p, &policy(1061)).unwrap_err();
        assert_eq!(err, VerifyError::Policy(PolicyViolation::Expired { age: 61, max_age: 60 }));
        assert!(err.is_policy());
        assert_eq!(
            verify_one_time(&iss.public_key(), &p, &policy(999)),
            Err(VerifyError::Policy(PolicyViolation::NotYetValid))
        );
        let other = SessionPolicy::new("bank.example", 60, Clock::Fixed(1000)).unwrap();
        assert!(matches!(
            verify_one_time(&iss.public_key(), &p, &other),
            Err(VerifyError::Policy(PolicyViolation::AudienceMismatch { .. }))
        ));
        let raw = make_one_time_proof(&claim, "not json", &mut rng, false).unwrap();
        assert_eq!(
            verify_one_time(&iss.public_key(), &raw, &policy(1000)),
            Err(VerifyError::Policy(PolicyViolation::Malformed))
        );
        assert!(matches!(SessionPolicy::new("a", 0, Clock::System), Err(PresentationError::ZeroMaxAge)));
    }

    #[test]
    fn proof_json_field_names() {
        let (_, claim, mut rng) = setup();
        let p = make_one_time_proof(&claim, "{\"aud\":\"a\",\"iat\":1}", &mut rng, true).unwrap();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["h", "m", "nonce", "pk_t", "r", "sigma_prime", "sigma_t", "t"]);
        let back: OneTimeProof = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, p);

        let mut partial = v;
        partial.as_object_mut().unwrap().remove("nonce");
        assert!(serde_json::from_value::<OneTimeProof>(partial).is_err());

        let b = serde_json::to_value(make_basic_proof(&claim, false)).unwrap();
        let mut keys: Vec<&str> = b.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(keys, ["h", "r", "sigma"]);
    }
}
