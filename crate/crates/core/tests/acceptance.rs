//! Acceptance suite. Runs every criterion in sequence on one thread (the
//! timing checks need a quiet machine) and prints one PASS/FAIL line each.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand_chacha::ChaCha20Rng;
use rand_core::{Rng, SeedableRng};
use sdbls_core::bench::{bench_issue_verify, bench_revocation_scan, measure_sizes};
use sdbls_core::bls::{self, keygen};
use sdbls_core::credential::{frame2, IssuerIdentity};
use sdbls_core::group::{hash_to_g1, pairing, G1Point, G2Point, Scalar};
use sdbls_core::harness::{run_issuance_ceremony, PresentationMode, QuorumConfig, RevocationOutcome, Verdict};
use sdbls_core::presentation::{make_one_time_proof, verify_one_time, Clock, SessionInfo, SessionPolicy};
use sdbls_core::pvss::{
    accept_share, deal, interpolate_at_zero, reconstruct, verify_deal, IssuerDhKeys, RevealedShare,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_claim(rng: &mut ChaCha20Rng) -> String {
    let mut raw = [0u8; 6];
    rng.fill_bytes(&mut raw);
    format!("attr-{}={}", rng.next_u32() % 1000, sdbls_core::codec::encode(raw))
}

fn lifecycle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1001);
    let claims: Vec<String> = (0..64).map(|_| random_claim(&mut rng)).collect();
    let config = QuorumConfig::new(5, 3, 3).unwrap();
    let mut c = run_issuance_ceremony(config, &claims, 1001).map_err(|e| e.to_string())?;
    let policy = SessionPolicy::new("verifier.example", 300, Clock::Fixed(1_700_000_000)).unwrap();
    let run =
        |c: &mut sdbls_core::harness::Ceremony, k: usize, mode| c.run_presentation_session(k, &policy, mode).unwrap();

    let mut basic = 0;
    let mut one_time = 0;
    for k in 0..64 {
        basic += usize::from(run(&mut c, k, PresentationMode::Basic) == Verdict::Accepted);
        one_time += usize::from(run(&mut c, k, PresentationMode::OneTime) == Verdict::Accepted);
    }

    let mut chosen = BTreeSet::new();
    while chosen.len() < 10 {
        chosen.insert(rng.next_u32() as usize % 64);
    }
    let mut revoked_ok = 0;
    for &k in &chosen {
        let mut pool: Vec<u32> = (1..=config.n).collect();
        let mut voters = BTreeSet::new();
        while voters.len() < config.vote_quorum as usize {
            voters.insert(pool.swap_remove(rng.next_u32() as usize % pool.len()));
        }
        revoked_ok +=
            usize::from(matches!(c.request_revocation(k, &voters).unwrap(), RevocationOutcome::Revoked { .. }));
    }

    let mut flagged = BTreeSet::new();
    let mut still_valid = 0;
    for k in 0..64 {
        let b = run(&mut c, k, PresentationMode::Basic);
        let o = run(&mut c, k, PresentationMode::OneTime);
        match (b, o) {
            (Verdict::Revoked, Verdict::Revoked) => {
                flagged.insert(k);
            }
            (Verdict::Accepted, Verdict::Accepted) => still_valid += 1,
            _ => {}
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        basic == 64 && one_time == 64 && revoked_ok == 10 && flagged == chosen && still_valid == 54 && secs < 60.0,
        format!(
            "basic {basic}/64, one-time {one_time}/64, quorum revocations {revoked_ok}/10, flagged {}/10 exact={}, still valid {still_valid}/54, {secs:.1}s (< 60s)",
            flagged.len(),
            flagged == chosen
        ),
    )
}

fn correctness_identity() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1002);
    let mut issuer = IssuerIdentity::new(keygen(&mut rng));
    let pk = issuer.public_key();
    let mut holds = 0;
    let mut split = 0;
    for _ in 0..100 {
        let m = random_claim(&mut rng);
        let claim = issuer.issue_claims(&[m], &mut rng).unwrap().0.remove(0);
        let msg = frame2(&claim.h, &claim.r);
        holds += usize::from(bls::verify(&(pk + claim.r), &msg, &claim.sigma));
        // e(G2, σ) = e(A.pk, U) · e(r, U), evaluated as three separate pairings
        let u = bls::message_point(&msg);
        split += usize::from(pairing(&G2Point::generator(), &claim.sigma) == pairing(&pk, &u) * pairing(&claim.r, &u));
    }
    check(holds == 100 && split == 100, format!("aggregate-key check {holds}/100, split pairing check {split}/100"))
}

fn tamper_suite() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1003);
    let mut issuer = IssuerIdentity::new(keygen(&mut rng));
    let pk = issuer.public_key();
    let policy = SessionPolicy::new("verifier.example", 60, Clock::Fixed(5_000)).unwrap();
    let t = SessionInfo::new("verifier.example", 4_990).encode();
    let fresh_t = SessionInfo::new("verifier.example", 4_999).encode();
    let mut honest = 0;
    let mut rejected = 0;
    let mut forgeries_rejected = [0usize; 3];
    for _ in 0..20 {
        let m = random_claim(&mut rng);
        let claim = issuer.issue_claims(&[m], &mut rng).unwrap().0.remove(0);
        let proof = make_one_time_proof(&claim, &t, &mut rng, false).unwrap();
        honest += usize::from(verify_one_time(&pk, &proof, &policy).is_ok());
        for field in common::FIELDS {
            rejected += usize::from(verify_one_time(&pk, &common::mutate(&proof, field), &policy).is_err());
        }
        for (v, variant) in common::FORGERIES.iter().enumerate() {
            let forged = common::forge(&proof, &fresh_t, variant, &mut rng);
            forgeries_rejected[v] += usize::from(verify_one_time(&pk, &forged, &policy).is_err());
        }
    }
    let variants_ok = forgeries_rejected.iter().filter(|n| **n == 20).count();
    check(
        honest == 20 && rejected == 120 && variants_ok == 3,
        format!(
            "honest {honest}/20 accepted, single-field mutations rejected {rejected}/120, session-key forgery variants rejected {variants_ok}/3 ({forgeries_rejected:?} of 20 each)"
        ),
    )
}

fn threshold_boundary() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1004);
    let mut summary = Vec::new();
    let mut ok = true;
    for (t, n) in [(2u32, 3u32), (3, 5), (5, 9)] {
        let keys: Vec<IssuerDhKeys> = (0..n).map(|_| IssuerDhKeys::generate(&mut rng)).collect();
        let pks: Vec<G1Point> = keys.iter().map(IssuerDhKeys::public).collect();
        let (mut exact, mut total_t, mut blocked, mut total_low) = (0, 0, 0, 0);
        for _ in 0..20 {
            let rev = Scalar::random(&mut rng);
            let (bundle, transcript) = deal(&rev, t, n, &pks, &mut rng).unwrap();
            ok &= verify_deal(&bundle, &pks).is_ok();
            let shares: Vec<RevealedShare> = (1..=n)
                .map(|i| RevealedShare { i, s: accept_share(&keys[i as usize - 1], i, &bundle).unwrap() })
                .collect();
            let c0 = bundle.revocation_key().unwrap();
            for subset in common::subsets(n, t as usize) {
                let picked: Vec<RevealedShare> = subset.iter().map(|i| shares[*i as usize - 1]).collect();
                total_t += 1;
                exact += usize::from(reconstruct(&picked, &bundle).ok() == Some(transcript.coefficients[0]));
            }
            for subset in common::subsets(n, t as usize - 1) {
                let picked: Vec<RevealedShare> = subset.iter().map(|i| shares[*i as usize - 1]).collect();
                total_low += 1;
                blocked += usize::from(G2Point::mul_generator(&interpolate_at_zero(&picked)) != c0);
            }
        }
        ok &= exact == total_t && blocked == total_low;
        summary
            .push(format!("({t},{n}): t-subsets {exact}/{total_t}, (t-1)-subsets failing C_0 {blocked}/{total_low}"));
    }
    check(ok, summary.join("; "))
}

fn pvss_verifiability() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1005);
    let (t, n) = (3u32, 5u32);
    let keys: Vec<IssuerDhKeys> = (0..n).map(|_| IssuerDhKeys::generate(&mut rng)).collect();
    let pks: Vec<G1Point> = keys.iter().map(IssuerDhKeys::public).collect();
    let mut accepted = 0;
    let mut rejected = 0;
    let mut by_kind = [0usize; 3];
    for k in 0..100 {
        let (bundle, _) = deal(&Scalar::random(&mut rng), t, n, &pks, &mut rng).unwrap();
        accepted += usize::from(verify_deal(&bundle, &pks).is_ok());
        let mut bad = bundle.clone();
        let pick = rng.next_u32() as usize;
        match k % 3 {
            0 => {
                let j = pick % t as usize;
                bad.commitments[j] += G2Point::generator();
            }
            1 => {
                let j = pick % n as usize;
                bad.shares[j].exponent_share += G1Point::generator();
            }
            _ => {
                let j = pick % n as usize;
                bad.shares[j].i = (bad.shares[j].i % n) + 1;
            }
        }
        if verify_deal(&bad, &pks).is_err() {
            rejected += 1;
            by_kind[k % 3] += 1;
        }
    }
    check(
        accepted == 100 && rejected == 100,
        format!(
            "honest accepted {accepted}/100, tampered rejected {rejected}/100 (commitment {}, Y_i {}, index {})",
            by_kind[0], by_kind[1], by_kind[2]
        ),
    )
}

fn object_sizes() -> Outcome {
    let s = measure_sizes();
    check(
        s.revocation_entry == 32 && s.signed_claim_core.abs_diff(177) <= 8 && s.one_time_proof_core.abs_diff(322) <= 16,
        format!(
            "revocation entry {} B (= 32), signed-claim core {} B (177 ± 8), one-time-proof core {} B (322 ± 16)",
            s.revocation_entry, s.signed_claim_core, s.one_time_proof_core
        ),
    )
}

fn scan_linearity() -> Outcome {
    let sizes = [100, 1_000, 10_000];
    let report = bench_revocation_scan(&sizes, 2, 1007, 1);
    let fit = report.fit("verify-scan").ok_or("no scan rows")?;
    let indexed: Vec<f64> = report.rows_for("verify-indexed").map(|r| r.mean_seconds).collect();
    let ratio = indexed.iter().copied().fold(f64::MIN, f64::max) / indexed.iter().copied().fold(f64::MAX, f64::min);
    let scan: Vec<String> =
        report.rows_for("verify-scan").map(|r| format!("{}:{:.1}ms", r.parameter, r.mean_seconds * 1e3)).collect();
    check(
        fit.slope > 0.0 && fit.r_squared >= 0.95 && ratio < 3.0,
        format!(
            "scan [{}] slope {:.2}us/entry R^2 {:.4} (>= 0.95); indexed max/min {ratio:.2} (< 3)",
            scan.join(", "),
            fit.slope * 1e6,
            fit.r_squared
        ),
    )
}

fn issue_before_verify() -> Outcome {
    let report = bench_issue_verify(64, 3, 1008);
    let mut ok = true;
    let mut parts = Vec::new();
    for row in report.rows_for("issue") {
        let verify = report.mean("verify", row.parameter).ok_or("missing verify row")?;
        ok &= row.mean_seconds < verify;
        parts.push(format!("{}: {:.2}/{:.2}ms", row.parameter, row.mean_seconds * 1e3, verify * 1e3));
    }
    check(ok && !parts.is_empty(), format!("issue/verify means per claim count [{}]", parts.join(", ")))
}

fn determinism() -> Outcome {
    let run = |seed| {
        let mut c = run_issuance_ceremony(QuorumConfig::new(4, 2, 3).unwrap(), &["a=1", "b=2", "c=3"], seed).unwrap();
        let voters: BTreeSet<u32> = [1, 2, 4].into();
        c.request_revocation(1, &voters).unwrap();
        let policy = SessionPolicy::new("v", 10, Clock::Fixed(99)).unwrap();
        c.run_presentation_session(0, &policy, PresentationMode::OneTime).unwrap();
        c.run_presentation_session(1, &policy, PresentationMode::Basic).unwrap();
        c.record().to_json()
    };
    let (a, b, other) = (run(1009), run(1009), run(1010));
    check(
        a == b && a != other,
        format!("same seed identical: {} ({} bytes); different seed differs: {}", a == b, a.len(), a != other),
    )
}

fn hash_to_curve_vectors() -> Outcome {
    let vectors = common::suite_vectors();
    let passed = vectors
        .iter()
        .filter(|(msg, x, y)| {
            hex::encode(hash_to_g1(common::SUITE_DST, msg).to_affine().to_uncompressed()) == format!("{x}{y}")
        })
        .count();
    check(passed == vectors.len(), format!("{passed}/{} published G1 vectors", vectors.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("end-to-end lifecycle", lifecycle),
        ("correctness identity", correctness_identity),
        ("tamper suite", tamper_suite),
        ("threshold boundary", threshold_boundary),
        ("pvss public verifiability", pvss_verifiability),
        ("object sizes", object_sizes),
        ("revocation-scan linearity", scan_linearity),
        ("issue-vs-verify ordering", issue_before_verify),
        ("determinism", determinism),
        ("hash-to-curve conformance", hash_to_curve_vectors),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
