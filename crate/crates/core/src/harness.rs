//! Deterministic in-process simulation of the threshold issuance and
//! quorum revocation ceremonies.
//!
//! Five kinds of actor exchange [`ActorMessage`]s over a FIFO bus: the
//! credential issuer, the revocation dealer, `n` revocation issuers
//! ("revokers"), the holder and a verifier. Every actor draws randomness
//! from its own ChaCha20 stream derived from the ceremony seed, so a seed
//! fully determines the transcript.
//!
//! Issuance of claim `k`:
//!
//! ```text
//! issuer  -> dealer   RevocationRequest   (no claim content)
//! dealer  -> issuer   RevocationKey       r = rev·G2
//! issuer  -> dealer   DigestSubmit        H = digest(m, nonce, r)
//! dealer  -> all      DealBundle          PVSS bundle for rev (also to issuer)
//! dealer  -> issuer   RevocationSignature σ_rev = sign(rev, H:r); rev erased
//! revoker -> issuer   ShareAccept | ShareComplaint
//! issuer  -> holder   ClaimDelivery       once all n shares are accepted
//! ```
//!
//! Revocation: the lowest-indexed voter coordinates. Other voters send it
//! a `RevocationVote`; once `vote_quorum` votes are in it answers each voter
//! with `QuorumReached`, voters reply with `ShareReveal` (share plus proof of
//! possession), and the coordinator reconstructs `rev` and sends
//! `ListUpdate` to the verifier. Invalid reveals are excluded by index.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use rand_chacha::ChaCha20Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bls::{self, KeyPair};
use crate::codec::b64_vec;
use crate::credential::{claim_digest, frame2, ClaimDigest, DigestMode, IssuerIdentity, SignedClaim, NONCE_LEN};
use crate::group::{G1Point, G2Point, Scalar};
use crate::presentation::{
    make_basic_proof, make_one_time_proof, verify_basic_with_mode, verify_one_time_with_mode, BasicProof, OneTimeProof,
    SessionInfo, SessionPolicy,
};
use crate::pvss::{
    accept_share, deal, prove_share_possession, reconstruct, seal_share, verify_deal, verify_share_possession,
    DealerBundle, IssuerDhKeys, ReconstructError, RevealedShare, ShareComplaint, SharePossessionProof,
};
use crate::revocation::{is_revoked_scan, RevocationList};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid quorum config: need 1 < t <= vote_quorum <= n (t={t}, vote_quorum={vote_quorum}, n={n})")]
    InvalidConfig { n: u32, t: u32, vote_quorum: u32 },
    #[error("no claims given")]
    NoClaims,
    #[error("claim content is empty")]
    EmptyClaim,
    #[error("claim {0} was not issued")]
    UnknownClaim(usize),
    #[error("revocation issuer {0} does not exist")]
    UnknownIssuer(u32),
}

/// Who sends or receives a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RoleId {
    CredentialIssuer,
    Dealer,
    RevocationIssuer(u32),
    Holder,
    Verifier,
}

impl fmt::Display for RoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoleId::CredentialIssuer => f.write_str("issuer"),
            RoleId::Dealer => f.write_str("dealer"),
            RoleId::RevocationIssuer(i) => write!(f, "revoker-{i}"),
            RoleId::Holder => f.write_str("holder"),
            RoleId::Verifier => f.write_str("verifier"),
        }
    }
}

impl Serialize for RoleId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RoleId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        match text.as_str() {
            "issuer" => Ok(RoleId::CredentialIssuer),
            "dealer" => Ok(RoleId::Dealer),
            "holder" => Ok(RoleId::Holder),
            "verifier" => Ok(RoleId::Verifier),
            other => other
                .strip_prefix("revoker-")
                .and_then(|i| i.parse().ok())
                .map(RoleId::RevocationIssuer)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown role {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageKind {
    RevocationRequest,
    RevocationKey,
    DigestSubmit,
    RevocationSignature,
    DealBundle,
    ShareAccept,
    ShareComplaint,
    ClaimDelivery,
    RevocationVote,
    QuorumReached,
    ShareReveal,
    ListUpdate,
    PresentationSubmit,
    VerdictReport,
}

/// Envelope on the simulated bus. `payload` is the JSON body, carried as
/// base64url bytes in transcripts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorMessage {
    pub from: RoleId,
    pub to: RoleId,
    pub kind: MessageKind,
    #[serde(with = "b64_vec")]
    pub payload: Vec<u8>,
    pub seq: u64,
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presentation {
    Basic(BasicProof),
    OneTime(OneTimeProof),
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Body {
    RevocationRequest { claim: u32 },
    RevocationKey { claim: u32, r: G2Point },
    DigestSubmit { claim: u32, h: ClaimDigest },
    RevocationSignature { claim: u32, sigma_rev: G1Point },
    DealBundle { claim: u32, bundle: DealerBundle },
    ShareAccept { claim: u32, index: u32 },
    ShareComplaint { claim: u32, complaint: ShareComplaint },
    ClaimDelivery { claim: u32, signed: SignedClaim },
    RevocationVote { round: u32, claim: u32, index: u32 },
    QuorumReached { round: u32, claim: u32 },
    ShareReveal { round: u32, claim: u32, share: RevealedShare, proof: SharePossessionProof },
    ListUpdate { rev: Scalar },
    PresentationSubmit { presentation: Presentation },
    VerdictReport { verdict: Verdict },
}

impl Body {
    fn kind(&self) -> MessageKind {
        match self {
            Body::RevocationRequest { .. } => MessageKind::RevocationRequest,
            Body::RevocationKey { .. } => MessageKind::RevocationKey,
            Body::DigestSubmit { .. } => MessageKind::DigestSubmit,
            Body::RevocationSignature { .. } => MessageKind::RevocationSignature,
            Body::DealBundle { .. } => MessageKind::DealBundle,
            Body::ShareAccept { .. } => MessageKind::ShareAccept,
            Body::ShareComplaint { .. } => MessageKind::ShareComplaint,
            Body::ClaimDelivery { .. } => MessageKind::ClaimDelivery,
            Body::RevocationVote { .. } => MessageKind::RevocationVote,
            Body::QuorumReached { .. } => MessageKind::QuorumReached,
            Body::ShareReveal { .. } => MessageKind::ShareReveal,
            Body::ListUpdate { .. } => MessageKind::ListUpdate,
            Body::PresentationSubmit { .. } => MessageKind::PresentationSubmit,
            Body::VerdictReport { .. } => MessageKind::VerdictReport,
        }
    }
}

/// `n` revocation issuers, reconstruction threshold `t`, and the number of
/// votes needed before shares are revealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumConfig {
    pub n: u32,
    pub t: u32,
    pub vote_quorum: u32,
}

impl QuorumConfig {
    pub fn new(n: u32, t: u32, vote_quorum: u32) -> Result<Self, HarnessError> {
        if t < 2 || t > vote_quorum || vote_quorum > n {
            return Err(HarnessError::InvalidConfig { n, t, vote_quorum });
        }
        Ok(QuorumConfig { n, t, vote_quorum })
    }

    /// `vote_quorum = t`.
    pub fn threshold(t: u32, n: u32) -> Result<Self, HarnessError> {
        Self::new(n, t, t)
    }
}

/// Deliberate misbehavior to exercise complaint and cheater paths.
#[derive(Debug, Clone, Default)]
pub struct FaultPlan {
    /// `(claim, issuer)`: the dealer encrypts `s_i + 1` for that issuer while
    /// publishing the honest `Y_i`.
    pub mismatched_ciphertext: BTreeSet<(u32, u32)>,
    /// Revocation issuers that reveal a wrong share.
    pub corrupt_reveals: BTreeSet<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    RejectedSignature,
    RejectedPolicy,
    Revoked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresentationMode {
    Basic,
    OneTime,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RevocationOutcome {
    Revoked { rev: Scalar, excluded: Vec<u32> },
    Refused { votes: u32, vote_quorum: u32 },
    Failed { valid_reveals: u32, excluded: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum ClaimStatus {
    Issued,
    Aborted { reason: String },
}

type Outbox = Vec<(RoleId, Body)>;

fn actor_rng(seed: u64, role: &str) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"SDBLS-V01-harness");
    h.update(seed.to_be_bytes());
    h.update(role.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

struct PendingClaim {
    m: String,
    nonce: [u8; NONCE_LEN],
    r: Option<G2Point>,
    sigma_rev: Option<G1Point>,
    bundle_ok: Option<bool>,
    accepted: BTreeSet<u32>,
}

struct IssuerActor {
    identity: IssuerIdentity,
    directory: Vec<G1Point>,
    rng: ChaCha20Rng,
    pending: BTreeMap<u32, PendingClaim>,
    issued: BTreeMap<u32, SignedClaim>,
    aborted: BTreeMap<u32, String>,
}

impl IssuerActor {
    fn abort(&mut self, claim: u32, reason: String) {
        if self.pending.remove(&claim).is_some() {
            self.aborted.insert(claim, reason);
        }
    }

    fn handle(&mut self, body: Body) -> Outbox {
        let mut out = Outbox::new();
        match body {
            Body::RevocationKey { claim, r } => {
                let Some(p) = self.pending.get_mut(&claim) else { return out };
                self.rng.fill_bytes(&mut p.nonce);
                p.r = Some(r);
                let h = claim_digest(self.identity.digest_mode(), &p.m, &p.nonce, &r).expect("digest");
                out.push((RoleId::Dealer, Body::DigestSubmit { claim, h }));
            }
            Body::DealBundle { claim, bundle } => {
                let Some(p) = self.pending.get_mut(&claim) else { return out };
                let ok = verify_deal(&bundle, &self.directory).is_ok() && bundle.revocation_key() == p.r;
                p.bundle_ok = Some(ok);
                if !ok {
                    self.abort(claim, "dealer bundle failed public verification".into());
                }
            }
            Body::RevocationSignature { claim, sigma_rev } => {
                if let Some(p) = self.pending.get_mut(&claim) {
                    p.sigma_rev = Some(sigma_rev);
                }
            }
            Body::ShareAccept { claim, index } => {
                if let Some(p) = self.pending.get_mut(&claim) {
                    p.accepted.insert(index);
                }
            }
            Body::ShareComplaint { claim, complaint } => {
                self.abort(claim, format!("complaint from revoker {}: {:?}", complaint.index, complaint.reason));
            }
            _ => {}
        }
        self.try_complete(&mut out);
        out
    }

    fn try_complete(&mut self, out: &mut Outbox) {
        let n = self.directory.len();
        let ready: Vec<u32> = self
            .pending
            .iter()
            .filter(|(_, p)| p.sigma_rev.is_some() && p.bundle_ok == Some(true) && p.accepted.len() == n)
            .map(|(k, _)| *k)
            .collect();
        for claim in ready {
            let p = self.pending.remove(&claim).expect("pending");
            let r = p.r.expect("r");
            let sigma_rev = p.sigma_rev.expect("sigma_rev");
            match self.identity.issue_with_external_revocation(&p.m, &r, &sigma_rev, &p.nonce) {
                Ok(signed) => {
                    self.issued.insert(claim, signed.clone());
                    out.push((RoleId::Holder, Body::ClaimDelivery { claim, signed }));
                }
                Err(e) => {
                    self.aborted.insert(claim, e.to_string());
                }
            }
        }
    }
}

struct DealerSession {
    rev: Scalar,
    r: G2Point,
}

struct DealerActor {
    config: QuorumConfig,
    directory: Vec<G1Point>,
    rng: ChaCha20Rng,
    sessions: BTreeMap<u32, DealerSession>,
    digests_seen: Vec<ClaimDigest>,
    faults: BTreeSet<(u32, u32)>,
}

impl DealerActor {
    fn handle(&mut self, body: Body) -> Outbox {
        let mut out = Outbox::new();
        match body {
            Body::RevocationRequest { claim } => {
                let rev = Scalar::random(&mut self.rng);
                let r = G2Point::mul_generator(&rev);
                self.sessions.insert(claim, DealerSession { rev, r });
                out.push((RoleId::CredentialIssuer, Body::RevocationKey { claim, r }));
            }
            Body::DigestSubmit { claim, h } => {
                let Some(session) = self.sessions.remove(&claim) else { return out };
                self.digests_seen.push(h);
                let sigma_rev = bls::sign(&session.rev, &frame2(&h, &session.r)).expect("non-zero rev");
                let (mut bundle, transcript) =
                    deal(&session.rev, self.config.t, self.config.n, &self.directory, &mut self.rng)
                        .expect("config validated");
                let targets: Vec<u32> = self.faults.range((claim, 0)..=(claim, u32::MAX)).map(|f| f.1).collect();
                for i in targets {
                    self.corrupt_ciphertext(&mut bundle, i, transcript.shares[i as usize - 1]);
                }
                drop(transcript);
                for i in 1..=self.config.n {
                    out.push((RoleId::RevocationIssuer(i), Body::DealBundle { claim, bundle: bundle.clone() }));
                }
                out.push((RoleId::CredentialIssuer, Body::DealBundle { claim, bundle }));
                out.push((RoleId::CredentialIssuer, Body::RevocationSignature { claim, sigma_rev }));
            }
            _ => {}
        }
        out
    }

    /// Re-encrypts `s_i + 1` to issuer `i`, leaving `Y_i` honest.
    fn corrupt_ciphertext(&mut self, bundle: &mut DealerBundle, i: u32, s_i: Scalar) {
        let slot = &mut bundle.shares[i as usize - 1];
        let y = self.directory[i as usize - 1];
        let eph = Scalar::random(&mut self.rng);
        (slot.ephemeral, slot.ct) = seal_share(i, &(s_i + Scalar::one()), &slot.exponent_share, &y, &eph);
    }
}

struct HeldShare {
    bundle: DealerBundle,
    s: Scalar,
}

#[derive(Default)]
struct Ballot {
    claim: u32,
    votes: BTreeSet<u32>,
    quorum_reached: bool,
    reveals: BTreeMap<u32, RevealedShare>,
    excluded: BTreeSet<u32>,
    published: Option<Scalar>,
}

struct RevokerActor {
    index: u32,
    keys: IssuerDhKeys,
    directory: Vec<G1Point>,
    config: QuorumConfig,
    rng: ChaCha20Rng,
    shares: BTreeMap<u32, HeldShare>,
    ballots: BTreeMap<u32, Ballot>,
    corrupt_reveal: bool,
}

impl RevokerActor {
    fn handle(&mut self, from: RoleId, body: Body) -> Outbox {
        let mut out = Outbox::new();
        match body {
            Body::DealBundle { claim, bundle } => {
                let verdict = verify_deal(&bundle, &self.directory)
                    .map_err(|_| ShareComplaint {
                        index: self.index,
                        reason: crate::pvss::ComplaintReason::CommitmentMismatch,
                    })
                    .and_then(|_| accept_share(&self.keys, self.index, &bundle));
                match verdict {
                    Ok(s) => {
                        self.shares.insert(claim, HeldShare { bundle, s });
                        out.push((RoleId::CredentialIssuer, Body::ShareAccept { claim, index: self.index }));
                    }
                    Err(complaint) => {
                        out.push((RoleId::CredentialIssuer, Body::ShareComplaint { claim, complaint }));
                    }
                }
            }
            Body::RevocationVote { round, claim, index } => {
                let ballot = self.ballots.entry(round).or_insert_with(|| Ballot { claim, ..Ballot::default() });
                ballot.votes.insert(index);
                if ballot.quorum_reached {
                    out.push((from, Body::QuorumReached { round, claim }));
                } else if ballot.votes.len() as u32 >= self.config.vote_quorum {
                    ballot.quorum_reached = true;
                    for &v in ballot.votes.iter().filter(|v| **v != self.index) {
                        out.push((RoleId::RevocationIssuer(v), Body::QuorumReached { round, claim }));
                    }
                    if let Some(own) = self.reveal(claim) {
                        out.extend(self.collect(round, own.0, own.1));
                    }
                }
            }
            Body::QuorumReached { round, claim } => {
                if let Some((share, proof)) = self.reveal(claim) {
                    out.push((from, Body::ShareReveal { round, claim, share, proof }));
                }
            }
            Body::ShareReveal { round, share, proof, .. } => {
                out.extend(self.collect(round, share, proof));
            }
            _ => {}
        }
        out
    }

    /// Opens a ballot as coordinator, counting the coordinator's own vote.
    fn open_ballot(&mut self, round: u32, claim: u32) -> Outbox {
        self.handle(RoleId::RevocationIssuer(self.index), Body::RevocationVote { round, claim, index: self.index })
    }

    fn reveal(&mut self, claim: u32) -> Option<(RevealedShare, SharePossessionProof)> {
        let held = self.shares.get(&claim)?;
        let honest = RevealedShare { i: self.index, s: held.s };
        let proof = prove_share_possession(&honest, &held.bundle, &mut self.rng);
        let share = if self.corrupt_reveal { RevealedShare { s: held.s + Scalar::one(), ..honest } } else { honest };
        Some((share, proof))
    }

    /// Coordinator side: gather reveals and publish once reconstruction
    /// succeeds.
    fn collect(&mut self, round: u32, share: RevealedShare, proof: SharePossessionProof) -> Outbox {
        let mut out = Outbox::new();
        let Some(ballot) = self.ballots.get_mut(&round) else { return out };
        let Some(held) = self.shares.get(&ballot.claim) else { return out };
        if ballot.published.is_some() || ballot.excluded.contains(&share.i) {
            return out;
        }
        if proof.i != share.i || !verify_share_possession(&proof, &held.bundle) {
            ballot.excluded.insert(share.i);
            return out;
        }
        ballot.reveals.insert(share.i, share);
        loop {
            let shares: Vec<RevealedShare> = ballot.reveals.values().copied().collect();
            if (shares.len() as u32) < self.config.t {
                break;
            }
            match reconstruct(&shares, &held.bundle) {
                Ok(rev) => {
                    ballot.published = Some(rev);
                    out.push((RoleId::Verifier, Body::ListUpdate { rev }));
                    break;
                }
                Err(ReconstructError::InvalidShares { indices }) => {
                    for i in indices {
                        ballot.reveals.remove(&i);
                        ballot.excluded.insert(i);
                    }
                }
                Err(_) => break,
            }
        }
        out
    }
}

struct HolderActor {
    rng: ChaCha20Rng,
    claims: BTreeMap<u32, SignedClaim>,
    verdicts: Vec<Verdict>,
    last_presentation: Option<Presentation>,
}

struct VerifierActor {
    issuer_pk: G2Point,
    mode: DigestMode,
    list: RevocationList,
    policy: Option<SessionPolicy>,
    seen_session_sigs: HashSet<[u8; 48]>,
    verdicts: Vec<Verdict>,
}

impl VerifierActor {
    fn handle(&mut self, body: Body) -> Outbox {
        match body {
            Body::ListUpdate { rev } => {
                let _ = self.list.publish(rev);
                Outbox::new()
            }
            Body::PresentationSubmit { presentation } => {
                let verdict = self.judge(&presentation);
                self.verdicts.push(verdict);
                vec![(RoleId::Holder, Body::VerdictReport { verdict })]
            }
            _ => Outbox::new(),
        }
    }

    fn judge(&mut self, presentation: &Presentation) -> Verdict {
        let (result, r) = match presentation {
            Presentation::Basic(p) => (verify_basic_with_mode(&self.issuer_pk, p, &self.mode), p.r),
            Presentation::OneTime(p) => {
                let policy = self.policy.as_ref().expect("policy set before presentations");
                let result = verify_one_time_with_mode(&self.issuer_pk, p, policy, &self.mode);
                if result.is_ok() && !self.seen_session_sigs.insert(p.sigma_t.to_bytes()) {
                    return Verdict::RejectedPolicy;
                }
                (result, p.r)
            }
        };
        match result {
            Err(e) if e.is_policy() => Verdict::RejectedPolicy,
            Err(_) => Verdict::RejectedSignature,
            Ok(()) if is_revoked_scan(&r, &self.list) => Verdict::Revoked,
            Ok(()) => Verdict::Accepted,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IssuerState {
    pub public_key: G2Point,
    pub issued: BTreeMap<u32, SignedClaim>,
    pub aborted: BTreeMap<u32, String>,
    pub pending: usize,
    pub registry_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DealerState {
    pub open_sessions: usize,
    pub digests_seen: Vec<ClaimDigest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevokerState {
    pub index: u32,
    pub public_key: G1Point,
    pub held_shares: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderState {
    pub claims: BTreeMap<u32, SignedClaim>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifierState {
    pub revocation_list: Vec<Scalar>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalStates {
    pub issuer: IssuerState,
    pub dealer: DealerState,
    pub revokers: Vec<RevokerState>,
    pub holder: HolderState,
    pub verifier: VerifierState,
}

/// JSON-exportable audit record of a ceremony.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CeremonyRecord {
    pub seed: u64,
    pub config: QuorumConfig,
    pub claims: Vec<ClaimStatus>,
    pub messages: Vec<ActorMessage>,
    pub final_states: FinalStates,
}

impl CeremonyRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

/// A live simulation: all actors plus the message log.
pub struct Ceremony {
    seed: u64,
    config: QuorumConfig,
    claim_count: u32,
    issuer: IssuerActor,
    dealer: DealerActor,
    revokers: Vec<RevokerActor>,
    holder: HolderActor,
    verifier: VerifierActor,
    queue: VecDeque<ActorMessage>,
    log: Vec<ActorMessage>,
    seqs: BTreeMap<RoleId, u64>,
    rounds: u32,
}

impl Ceremony {
    /// Runs threshold issuance of `claims` and returns the live ceremony.
    pub fn run_issuance<S: AsRef<str>>(
        config: QuorumConfig,
        claims: &[S],
        seed: u64,
        faults: &FaultPlan,
    ) -> Result<Self, HarnessError> {
        Self::run_issuance_with_mode(config, claims, seed, faults, DigestMode::Sha256)
    }

    pub fn run_issuance_with_mode<S: AsRef<str>>(
        config: QuorumConfig,
        claims: &[S],
        seed: u64,
        faults: &FaultPlan,
        mode: DigestMode,
    ) -> Result<Self, HarnessError> {
        let config = QuorumConfig::new(config.n, config.t, config.vote_quorum)?;
        if claims.is_empty() {
            return Err(HarnessError::NoClaims);
        }
        if claims.iter().any(|c| c.as_ref().is_empty()) {
            return Err(HarnessError::EmptyClaim);
        }
        let mut issuer_rng = actor_rng(seed, "issuer");
        let issuer_keys: KeyPair = bls::keygen(&mut issuer_rng);
        let revokers: Vec<RevokerActor> = (1..=config.n)
            .map(|i| {
                let label = RoleId::RevocationIssuer(i).to_string();
                let mut rng = actor_rng(seed, &label);
                let keys = IssuerDhKeys::generate(&mut rng);
                RevokerActor {
                    index: i,
                    keys,
                    directory: Vec::new(),
                    config,
                    rng,
                    shares: BTreeMap::new(),
                    ballots: BTreeMap::new(),
                    corrupt_reveal: faults.corrupt_reveals.contains(&i),
                }
            })
            .collect();
        let directory: Vec<G1Point> = revokers.iter().map(|r| r.keys.public()).collect();
        let mut ceremony = Ceremony {
            seed,
            config,
            claim_count: claims.len() as u32,
            issuer: IssuerActor {
                identity: IssuerIdentity::new(issuer_keys).with_digest_mode(mode),
                directory: directory.clone(),
                rng: issuer_rng,
                pending: BTreeMap::new(),
                issued: BTreeMap::new(),
                aborted: BTreeMap::new(),
            },
            dealer: DealerActor {
                config,
                directory: directory.clone(),
                rng: actor_rng(seed, "dealer"),
                sessions: BTreeMap::new(),
                digests_seen: Vec::new(),
                faults: faults.mismatched_ciphertext.clone(),
            },
            revokers,
            holder: HolderActor {
                rng: actor_rng(seed, "holder"),
                claims: BTreeMap::new(),
                verdicts: Vec::new(),
                last_presentation: None,
            },
            verifier: VerifierActor {
                issuer_pk: G2Point::identity(),
                mode,
                list: RevocationList::new(),
                policy: None,
                seen_session_sigs: HashSet::new(),
                verdicts: Vec::new(),
            },
            queue: VecDeque::new(),
            log: Vec::new(),
            seqs: BTreeMap::new(),
            rounds: 0,
        };
        ceremony.verifier.issuer_pk = ceremony.issuer.identity.public_key();
        for r in &mut ceremony.revokers {
            r.directory = directory.clone();
        }
        for (k, m) in claims.iter().enumerate() {
            let claim = k as u32;
            ceremony.issuer.pending.insert(
                claim,
                PendingClaim {
                    m: m.as_ref().to_owned(),
                    nonce: [0; NONCE_LEN],
                    r: None,
                    sigma_rev: None,
                    bundle_ok: None,
                    accepted: BTreeSet::new(),
                },
            );
            ceremony.send(RoleId::CredentialIssuer, RoleId::Dealer, Body::RevocationRequest { claim });
            ceremony.drain();
        }
        for claim in std::mem::take(&mut ceremony.issuer.pending).into_keys() {
            ceremony.issuer.aborted.insert(claim, "issuance did not complete".into());
        }
        Ok(ceremony)
    }

    fn send(&mut self, from: RoleId, to: RoleId, body: Body) {
        let seq = self.seqs.entry(from).or_insert(0);
        *seq += 1;
        let msg = ActorMessage {
            from,
            to,
            kind: body.kind(),
            payload: serde_json::to_vec(&body).expect("bodies serialize"),
            seq: *seq,
        };
        self.log.push(msg.clone());
        self.queue.push_back(msg);
    }

    fn drain(&mut self) {
        while let Some(msg) = self.queue.pop_front() {
            let body: Body = serde_json::from_slice(&msg.payload).expect("bodies deserialize");
            let out = match msg.to {
                RoleId::CredentialIssuer => self.issuer.handle(body),
                RoleId::Dealer => self.dealer.handle(body),
                RoleId::RevocationIssuer(i) => self.revokers[i as usize - 1].handle(msg.from, body),
                RoleId::Holder => {
                    match body {
                        Body::ClaimDelivery { claim, signed } => {
                            self.holder.claims.insert(claim, signed);
                        }
                        Body::VerdictReport { verdict } => self.holder.verdicts.push(verdict),
                        _ => {}
                    }
                    Outbox::new()
                }
                RoleId::Verifier => self.verifier.handle(body),
            };
            for (to, body) in out {
                self.send(msg.to, to, body);
            }
        }
    }

    pub fn config(&self) -> QuorumConfig {
        self.config
    }

    pub fn issuer_public_key(&self) -> G2Point {
        self.issuer.identity.public_key()
    }

    pub fn claim_status(&self, claim: usize) -> Option<ClaimStatus> {
        let k = claim as u32;
        if self.issuer.issued.contains_key(&k) {
            Some(ClaimStatus::Issued)
        } else {
            self.issuer.aborted.get(&k).map(|reason| ClaimStatus::Aborted { reason: reason.clone() })
        }
    }

    /// Claims delivered to the holder, by claim index.
    pub fn holder_claims(&self) -> &BTreeMap<u32, SignedClaim> {
        &self.holder.claims
    }

    pub fn accepted_share_count(&self) -> usize {
        self.revokers.iter().map(|r| r.shares.len()).sum()
    }

    pub fn public_list(&self) -> &RevocationList {
        &self.verifier.list
    }

    pub fn messages(&self) -> &[ActorMessage] {
        &self.log
    }

    /// Runs a vote among `voters` on revoking `claim`.
    pub fn request_revocation(
        &mut self,
        claim: usize,
        voters: &BTreeSet<u32>,
    ) -> Result<RevocationOutcome, HarnessError> {
        if !self.issuer.issued.contains_key(&(claim as u32)) {
            return Err(HarnessError::UnknownClaim(claim));
        }
        if let Some(&bad) = voters.iter().find(|i| **i == 0 || **i > self.config.n) {
            return Err(HarnessError::UnknownIssuer(bad));
        }
        let claim = claim as u32;
        self.rounds += 1;
        let round = self.rounds;
        let Some(&coordinator) = voters.iter().next() else {
            return Ok(RevocationOutcome::Refused { votes: 0, vote_quorum: self.config.vote_quorum });
        };
        let out = self.revokers[coordinator as usize - 1].open_ballot(round, claim);
        let from = RoleId::RevocationIssuer(coordinator);
        for (to, body) in out {
            self.send(from, to, body);
        }
        for &v in voters.iter().skip(1) {
            self.send(
                RoleId::RevocationIssuer(v),
                RoleId::RevocationIssuer(coordinator),
                Body::RevocationVote { round, claim, index: v },
            );
        }
        self.drain();

        let ballot = &self.revokers[coordinator as usize - 1].ballots[&round];
        let excluded: Vec<u32> = ballot.excluded.iter().copied().collect();
        Ok(match ballot.published {
            Some(rev) => RevocationOutcome::Revoked { rev, excluded },
            None if !ballot.quorum_reached => {
                RevocationOutcome::Refused { votes: ballot.votes.len() as u32, vote_quorum: self.config.vote_quorum }
            }
            None => RevocationOutcome::Failed { valid_reveals: ballot.reveals.len() as u32, excluded },
        })
    }

    /// Holder presents `claim` to the verifier under `policy`. The session
    /// string uses the policy's audience and clock.
    pub fn run_presentation_session(
        &mut self,
        claim: usize,
        policy: &SessionPolicy,
        mode: PresentationMode,
    ) -> Result<Verdict, HarnessError> {
        let signed = self.holder.claims.get(&(claim as u32)).cloned().ok_or(HarnessError::UnknownClaim(claim))?;
        let presentation = match mode {
            PresentationMode::Basic => Presentation::Basic(make_basic_proof(&signed, false)),
            PresentationMode::OneTime => {
                let t = SessionInfo::new(policy.audience(), policy.clock().now()).encode();
                Presentation::OneTime(
                    make_one_time_proof(&signed, &t, &mut self.holder.rng, false).expect("non-empty session"),
                )
            }
        };
        self.holder.last_presentation = Some(presentation.clone());
        Ok(self.submit(policy, presentation))
    }

    /// Resubmits the holder's most recent presentation, as an eavesdropper
    /// replaying it would.
    pub fn replay_last_presentation(&mut self, policy: &SessionPolicy) -> Option<Verdict> {
        let p = self.holder.last_presentation.clone()?;
        Some(self.submit(policy, p))
    }

    fn submit(&mut self, policy: &SessionPolicy, presentation: Presentation) -> Verdict {
        self.verifier.policy = Some(policy.clone());
        self.send(RoleId::Holder, RoleId::Verifier, Body::PresentationSubmit { presentation });
        self.drain();
        *self.verifier.verdicts.last().expect("verifier answered")
    }

    pub fn issuer_state(&self) -> IssuerState {
        IssuerState {
            public_key: self.issuer.identity.public_key(),
            issued: self.issuer.issued.clone(),
            aborted: self.issuer.aborted.clone(),
            pending: self.issuer.pending.len(),
            registry_len: self.issuer.identity.registry().len(),
        }
    }

    pub fn dealer_state(&self) -> DealerState {
        DealerState { open_sessions: self.dealer.sessions.len(), digests_seen: self.dealer.digests_seen.clone() }
    }

    pub fn record(&self) -> CeremonyRecord {
        CeremonyRecord {
            seed: self.seed,
            config: self.config,
            claims: (0..self.claim_count as usize)
                .map(|k| self.claim_status(k).expect("every claim settled"))
                .collect(),
            messages: self.log.clone(),
            final_states: FinalStates {
                issuer: self.issuer_state(),
                dealer: self.dealer_state(),
                revokers: self
                    .revokers
                    .iter()
                    .map(|r| RevokerState {
                        index: r.index,
                        public_key: r.keys.public(),
                        held_shares: r.shares.keys().copied().collect(),
                    })
                    .collect(),
                holder: HolderState { claims: self.holder.claims.clone(), verdicts: self.holder.verdicts.clone() },
                verifier: VerifierState {
                    revocation_list: self.verifier.list.entries().to_vec(),
                    verdicts: self.verifier.verdicts.clone(),
                },
            },
        }
    }
}

pub fn run_issuance_ceremony<S: AsRef<str>>(
    config: QuorumConfig,
    claims: &[S],
    seed: u64,
) -> Result<Ceremony, HarnessError> {
    Ceremony::run_issuance(config, claims, seed, &FaultPlan::default())
}
