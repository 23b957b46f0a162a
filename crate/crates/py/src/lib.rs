//! Python bindings. Structured values cross the boundary as the same JSON
//! documents the CLI reads and writes; keys and scalars as base64url text.

use std::collections::BTreeSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;

use sdbls_core::bls;
use sdbls_core::credential::{DigestMode, IssuerIdentity, SignedClaim};
use sdbls_core::group::{G1Point, G2Point, Scalar};
use sdbls_core::harness::{self, FaultPlan, QuorumConfig, RevocationOutcome};
use sdbls_core::presentation::{self, BasicProof, Clock, OneTimeProof, SessionInfo, SessionPolicy};
use sdbls_core::pvss::{self, DealerBundle, RevealedShare};
use sdbls_core::revocation;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rng(seed: Option<u64>) -> PyResult<ChaCha20Rng> {
    let seed = match seed {
        Some(s) => s,
        None => {
            let mut raw = [0u8; 8];
            getrandom::fill(&mut raw).map_err(value_err)?;
            u64::from_le_bytes(raw)
        }
    };
    Ok(ChaCha20Rng::seed_from_u64(seed))
}

fn from_b64<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(text.to_owned())).map_err(value_err)
}

fn to_b64<T: serde::Serialize>(value: &T) -> String {
    match serde_json::to_value(value).expect("serializes") {
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }
}

fn parse<T: serde::de::DeserializeOwned>(json: &str) -> PyResult<T> {
    serde_json::from_str(json).map_err(value_err)
}

fn dump<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializes")
}

/// A credential issuer with its registry of revocation secrets.
#[pyclass]
struct Issuer {
    inner: IssuerIdentity,
    rng: ChaCha20Rng,
}

#[pymethods]
impl Issuer {
    #[new]
    #[pyo3(signature = (seed=None))]
    fn new(seed: Option<u64>) -> PyResult<Self> {
        let mut rng = rng(seed)?;
        Ok(Issuer { inner: IssuerIdentity::new(bls::keygen(&mut rng)), rng })
    }

    #[getter]
    fn public_key(&self) -> String {
        to_b64(&self.inner.public_key())
    }

    /// Returns one signed-claim JSON document per claim.
    fn issue(&mut self, claims: Vec<String>) -> PyResult<Vec<String>> {
        let (signed, _) = self.inner.issue_claims(&claims, &mut self.rng).map_err(value_err)?;
        Ok(signed.iter().map(dump).collect())
    }

    /// The revocation secret recorded for a claim this issuer signed.
    fn revocation_secret(&self, claim: &str) -> PyResult<String> {
        let claim: SignedClaim = parse(claim)?;
        let record = self.inner.find_revocation(&claim.h).ok_or_else(|| value_err("claim not in registry"))?;
        Ok(to_b64(&record.rev))
    }
}

#[pyfunction]
fn verify_claim(issuer_pk: &str, claim: &str) -> PyResult<bool> {
    let claim: SignedClaim = parse(claim)?;
    Ok(claim.verify(&from_b64(issuer_pk)?, &DigestMode::Sha256))
}

#[pyfunction]
#[pyo3(signature = (claim, disclose=false))]
fn present_basic(claim: &str, disclose: bool) -> PyResult<String> {
    Ok(dump(&presentation::make_basic_proof(&parse(claim)?, disclose)))
}

#[pyfunction]
#[pyo3(signature = (claim, aud, iat, seed=None, disclose=false))]
fn present_one_time(claim: &str, aud: &str, iat: u64, seed: Option<u64>, disclose: bool) -> PyResult<String> {
    let t = SessionInfo::new(aud, iat).encode();
    let proof = presentation::make_one_time_proof(&parse(claim)?, &t, &mut rng(seed)?, disclose).map_err(value_err)?;
    Ok(dump(&proof))
}

#[pyfunction]
fn verify_basic(issuer_pk: &str, proof: &str) -> PyResult<bool> {
    let proof: BasicProof = parse(proof)?;
    Ok(presentation::verify_basic(&from_b64(issuer_pk)?, &proof).is_ok())
}

/// Raises `ValueError` for malformed input; returns `False` for any
/// policy or signature failure.
#[pyfunction]
fn verify_one_time(issuer_pk: &str, proof: &str, aud: &str, max_age: u64, now: u64) -> PyResult<bool> {
    let proof: OneTimeProof = parse(proof)?;
    let policy = SessionPolicy::new(aud, max_age, Clock::Fixed(now)).map_err(value_err)?;
    Ok(presentation::verify_one_time(&from_b64(issuer_pk)?, &proof, &policy).is_ok())
}

/// The `r` field of a claim or proof document.
#[pyfunction]
fn revocation_key(document: &str) -> PyResult<String> {
    let value: serde_json::Value = parse(document)?;
    let r = value.get("r").and_then(|r| r.as_str()).ok_or_else(|| value_err("document has no r"))?;
    let point: G2Point = from_b64(r)?;
    Ok(to_b64(&point))
}

#[pyclass(name = "RevocationList")]
#[derive(Default)]
struct PyRevocationList {
    inner: revocation::RevocationList,
}

#[pymethods]
impl PyRevocationList {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyRevocationList { inner: revocation::RevocationList::from_text(text).map_err(value_err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn to_raw(&self) -> Vec<u8> {
        self.inner.to_raw()
    }

    /// Returns `True` if the secret was new.
    fn publish(&mut self, rev: &str) -> PyResult<bool> {
        let outcome = self.inner.publish(from_b64::<Scalar>(rev)?).map_err(value_err)?;
        Ok(outcome == revocation::PublishOutcome::Appended)
    }

    fn is_revoked(&self, r: &str) -> PyResult<bool> {
        Ok(revocation::is_revoked_scan(&from_b64(r)?, &self.inner))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Generates `n` revocation-issuer key pairs as `(secret, public)` tuples.
#[pyfunction]
#[pyo3(signature = (n, seed=None))]
fn revoker_keys(n: u32, seed: Option<u64>) -> PyResult<Vec<(String, String)>> {
    let mut rng = rng(seed)?;
    Ok((0..n)
        .map(|_| {
            let k = pvss::IssuerDhKeys::generate(&mut rng);
            (to_b64(k.secret()), to_b64(&k.public()))
        })
        .collect())
}

/// Deals `rev` to the given issuers; returns the bundle JSON.
#[pyfunction]
#[pyo3(signature = (rev, t, issuer_pks, seed=None))]
fn deal(rev: &str, t: u32, issuer_pks: Vec<String>, seed: Option<u64>) -> PyResult<String> {
    let pks = issuer_pks.iter().map(|p| from_b64::<G1Point>(p)).collect::<PyResult<Vec<_>>>()?;
    let (bundle, _) = pvss::deal(&from_b64(rev)?, t, pks.len() as u32, &pks, &mut rng(seed)?).map_err(value_err)?;
    Ok(dump(&bundle))
}

#[pyfunction]
fn verify_deal(bundle: &str, issuer_pks: Vec<String>) -> PyResult<bool> {
    let bundle: DealerBundle = parse(bundle)?;
    let pks = issuer_pks.iter().map(|p| from_b64::<G1Point>(p)).collect::<PyResult<Vec<_>>>()?;
    Ok(pvss::verify_deal(&bundle, &pks).is_ok())
}

/// Decrypts issuer `index`'s share; raises on complaint.
#[pyfunction]
fn accept_share(secret: &str, index: u32, bundle: &str) -> PyResult<String> {
    let keys = pvss::IssuerDhKeys::from_secret(from_b64(secret)?);
    let s = pvss::accept_share(&keys, index, &parse(bundle)?).map_err(value_err)?;
    Ok(to_b64(&s))
}

/// Rebuilds `rev` from `(index, share)` pairs.
#[pyfunction]
fn reconstruct(shares: Vec<(u32, String)>, bundle: &str) -> PyResult<String> {
    let shares =
        shares.into_iter().map(|(i, s)| Ok(RevealedShare { i, s: from_b64(&s)? })).collect::<PyResult<Vec<_>>>()?;
    Ok(to_b64(&pvss::reconstruct(&shares, &parse(bundle)?).map_err(value_err)?))
}

/// Runs threshold issuance and, optionally, one revocation vote. Returns
/// the ceremony record JSON.
#[pyfunction]
#[pyo3(signature = (t, n, claims, seed, revoke=None, voters=Vec::new()))]
fn run_ceremony(
    t: u32,
    n: u32,
    claims: Vec<String>,
    seed: u64,
    revoke: Option<usize>,
    voters: Vec<u32>,
) -> PyResult<String> {
    let config = QuorumConfig::threshold(t, n).map_err(value_err)?;
    let mut c = harness::Ceremony::run_issuance(config, &claims, seed, &FaultPlan::default()).map_err(value_err)?;
    if let Some(k) = revoke {
        let voters: BTreeSet<u32> = voters.into_iter().collect();
        if let RevocationOutcome::Failed { .. } = c.request_revocation(k, &voters).map_err(value_err)? {
            return Err(value_err("reconstruction failed"));
        }
    }
    Ok(c.record().to_json())
}

#[pyfunction]
fn measure_sizes(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let s = sdbls_core::bench::measure_sizes();
    let d = PyDict::new(py);
    d.set_item("revocation_entry", s.revocation_entry)?;
    d.set_item("signed_claim_core", s.signed_claim_core)?;
    d.set_item("one_time_proof_core", s.one_time_proof_core)?;
    Ok(d)
}

#[pymodule]
fn sdbls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Issuer>()?;
    m.add_class::<PyRevocationList>()?;
    m.add_function(wrap_pyfunction!(verify_claim, m)?)?;
    m.add_function(wrap_pyfunction!(present_basic, m)?)?;
    m.add_function(wrap_pyfunction!(present_one_time, m)?)?;
    m.add_function(wrap_pyfunction!(verify_basic, m)?)?;
    m.add_function(wrap_pyfunction!(verify_one_time, m)?)?;
    m.add_function(wrap_pyfunction!(revocation_key, m)?)?;
    m.add_function(wrap_pyfunction!(revoker_keys, m)?)?;
    m.add_function(wrap_pyfunction!(deal, m)?)?;
    m.add_function(wrap_pyfunction!(verify_deal, m)?)?;
    m.add_function(wrap_pyfunction!(accept_share, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(run_ceremony, m)?)?;
    m.add_function(wrap_pyfunction!(measure_sizes, m)?)?;
    Ok(())
}
