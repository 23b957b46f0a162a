//! Timing and size measurements.
//!
//! Everything runs on the calling thread unless an entry point says
//! otherwise. Absolute numbers depend on the machine; what carries over is
//! the shape (orderings, slopes, byte counts).

use std::fmt::Write as _;
use std::time::Instant;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::bls;
use crate::credential::{DigestMode, IssuerIdentity, SignedClaim};
use crate::group::{G1Point, Scalar, G1_BYTES, G2_BYTES, SCALAR_BYTES};
use crate::presentation::{make_basic_proof, make_one_time_proof, verify_basic};
use crate::pvss::{deal, reconstruct, IssuerDhKeys, RevealedShare};
use crate::revocation::{build_index, is_revoked_indexed, is_revoked_scan, is_revoked_scan_parallel, RevocationList};

pub const CSV_HEADER: &str = "operation,parameter,mean_seconds,bytes";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub operation: String,
    pub parameter: u64,
    pub mean_seconds: f64,
    pub bytes: Option<u64>,
}

/// Least-squares line through one operation's `(parameter, mean_seconds)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub environment: String,
}

impl BenchReport {
    fn new(mut rows: Vec<BenchRow>) -> Self {
        rows.sort_by(|a, b| a.operation.cmp(&b.operation).then(a.parameter.cmp(&b.parameter)));
        BenchReport { rows, environment: environment() }
    }

    pub fn merge(reports: impl IntoIterator<Item = BenchReport>) -> Self {
        BenchReport::new(reports.into_iter().flat_map(|r| r.rows).collect())
    }

    pub fn rows_for<'a>(&'a self, operation: &'a str) -> impl Iterator<Item = &'a BenchRow> + 'a {
        self.rows.iter().filter(move |r| r.operation == operation)
    }

    pub fn mean(&self, operation: &str, parameter: u64) -> Option<f64> {
        self.rows_for(operation).find(|r| r.parameter == parameter).map(|r| r.mean_seconds)
    }

    pub fn fit(&self, operation: &str) -> Option<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.rows_for(operation).map(|r| (r.parameter as f64, r.mean_seconds)).unzip();
        linear_fit(&xs, &ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let bytes = r.bytes.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{:.9},{}", r.operation, r.parameter, r.mean_seconds, bytes);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn environment() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|s| s.trim().to_owned())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{} {} ({cpu}, {threads} hw threads)", std::env::consts::OS, std::env::consts::ARCH)
}

/// Ordinary least squares. `None` with fewer than two distinct x values.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - (slope * x + intercept)).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit { slope, intercept, r_squared })
}

fn mean_seconds(reps: usize, mut f: impl FnMut()) -> f64 {
    let reps = reps.max(1);
    let start = Instant::now();
    for _ in 0..reps {
        f();
    }
    start.elapsed().as_secs_f64() / reps as f64
}

fn row(operation: &str, parameter: u64, mean_seconds: f64, bytes: Option<u64>) -> BenchRow {
    BenchRow { operation: operation.into(), parameter, mean_seconds, bytes }
}

/// `1, 2, 4, ...` up to `max`, with `max` itself always included.
pub fn geometric_steps(max: usize) -> Vec<usize> {
    let mut steps: Vec<usize> =
        std::iter::successors(Some(1usize), |k| k.checked_mul(2)).take_while(|k| *k <= max).collect();
    if max >= 1 && steps.last() != Some(&max) {
        steps.push(max);
    }
    steps
}

fn sample_claims(count: usize) -> Vec<String> {
    (0..count).map(|k| format!("claim-{k}=value-{k}")).collect()
}

/// Issuing and verifying `k` claims for `k` in `geometric_steps(max_claims)`.
pub fn bench_issue_verify(max_claims: usize, reps: usize, seed: u64) -> BenchReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut issuer = IssuerIdentity::new(bls::keygen(&mut rng));
    let pk = issuer.public_key();
    let mode = DigestMode::Sha256;
    let mut rows = Vec::new();
    for k in geometric_steps(max_claims) {
        let claims = sample_claims(k);
        let mut issued: Vec<SignedClaim> = Vec::new();
        let issue = mean_seconds(reps, || {
            issued = issuer.issue_claims(&claims, &mut rng).expect("non-empty claims").0;
        });
        let verify = mean_seconds(reps, || {
            assert!(issued.iter().all(|c| c.verify(&pk, &mode)));
        });
        rows.push(row("issue", k as u64, issue, None));
        rows.push(row("verify", k as u64, verify, None));
    }
    BenchReport::new(rows)
}

/// One basic-proof verification plus a revocation check against lists of
/// each size. The presented claim is never listed, so the scan visits
/// every entry. `threads > 1` adds a parallel-scan series.
pub fn bench_revocation_scan(list_sizes: &[usize], reps: usize, seed: u64, threads: usize) -> BenchReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut issuer = IssuerIdentity::new(bls::keygen(&mut rng));
    let pk = issuer.public_key();
    let claim = issuer.issue_claims(&["presented"], &mut rng).expect("one claim").0.remove(0);
    let proof = make_basic_proof(&claim, false);
    let max = list_sizes.iter().copied().max().unwrap_or(0);
    let revs: Vec<Scalar> = (0..max).map(|_| Scalar::random(&mut rng)).collect();

    let mut rows = Vec::new();
    for &size in list_sizes {
        let mut list = RevocationList::new();
        for rev in &revs[..size] {
            list.publish(*rev).expect("random scalars are non-zero");
        }
        let index = build_index(&list);
        let scan = mean_seconds(reps, || {
            assert!(verify_basic(&pk, &proof).is_ok() && !is_revoked_scan(&proof.r, &list));
        });
        let indexed = mean_seconds(reps, || {
            assert!(verify_basic(&pk, &proof).is_ok() && !is_revoked_indexed(&proof.r, &index, &list).unwrap());
        });
        let bytes = Some(list.to_raw().len() as u64);
        rows.push(row("verify-scan", size as u64, scan, bytes));
        rows.push(row("verify-indexed", size as u64, indexed, bytes));
        if threads > 1 {
            let parallel = mean_seconds(reps, || {
                assert!(verify_basic(&pk, &proof).is_ok() && !is_revoked_scan_parallel(&proof.r, &list, threads));
            });
            rows.push(row("verify-scan-parallel", size as u64, parallel, bytes));
        }
    }
    BenchReport::new(rows)
}

/// Dealing and reconstructing one revocation secret per `(t, n)`. The
/// parameter column encodes the config as `n * 1000 + t`.
pub fn bench_pvss(configs: &[(u32, u32)], reps: usize, seed: u64) -> BenchReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &(t, n) in configs {
        let keys: Vec<IssuerDhKeys> = (0..n).map(|_| IssuerDhKeys::generate(&mut rng)).collect();
        let pks: Vec<G1Point> = keys.iter().map(IssuerDhKeys::public).collect();
        let rev = Scalar::random(&mut rng);
        let mut dealt = None;
        let deal_time = mean_seconds(reps, || {
            dealt = Some(deal(&rev, t, n, &pks, &mut rng).expect("valid config"));
        });
        let (bundle, transcript) = dealt.expect("dealt at least once");
        let shares: Vec<RevealedShare> =
            (1..=t).map(|i| RevealedShare { i, s: transcript.shares[i as usize - 1] }).collect();
        let reconstruct_time = mean_seconds(reps, || {
            assert_eq!(reconstruct(&shares, &bundle).expect("honest shares"), rev);
        });
        let parameter = u64::from(n) * 1000 + u64::from(t);
        let bundle_bytes = Some(serde_json::to_vec(&bundle).expect("bundle serializes").len() as u64);
        rows.push(row("pvss-deal", parameter, deal_time, bundle_bytes));
        rows.push(row("pvss-reconstruct", parameter, reconstruct_time, None));
    }
    BenchReport::new(rows)
}

/// Decodes a `bench_pvss` parameter back into `(t, n)`.
pub fn pvss_parameter(parameter: u64) -> (u32, u32) {
    ((parameter % 1000) as u32, (parameter / 1000) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeReport {
    pub revocation_entry: usize,
    pub signed_claim_core: usize,
    pub one_time_proof_core: usize,
}

impl SizeReport {
    pub fn to_report(&self) -> BenchReport {
        BenchReport::new(vec![
            row("size-one-time-proof-core", 0, 0.0, Some(self.one_time_proof_core as u64)),
            row("size-revocation-entry", 0, 0.0, Some(self.revocation_entry as u64)),
            row("size-signed-claim-core", 0, 0.0, Some(self.signed_claim_core as u64)),
        ])
    }
}

/// Raw byte counts of real objects, without any text envelope. The
/// one-time proof uses a 2-byte session string.
pub fn measure_sizes() -> SizeReport {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut issuer = IssuerIdentity::new(bls::keygen(&mut rng));
    let (claims, records) = issuer.issue_claims(&["x"], &mut rng).expect("one claim");
    let proof = make_one_time_proof(&claims[0], "s1", &mut rng, false).expect("non-empty session");
    let mut list = RevocationList::new();
    list.publish(records[0].rev).expect("non-zero");
    let sizes = SizeReport {
        revocation_entry: list.to_raw().len(),
        signed_claim_core: claims[0].core_bytes().len(),
        one_time_proof_core: proof.core_bytes().len(),
    };
    debug_assert_eq!(sizes.signed_claim_core, 32 + G2_BYTES + G1_BYTES);
    debug_assert_eq!(sizes.revocation_entry, SCALAR_BYTES);
    sizes
}
