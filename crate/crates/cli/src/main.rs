use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use sdbls_core::bench::{self, BenchReport};
use sdbls_core::bls::{self, KeyPair};
use sdbls_core::credential::{self, ClaimDigest, DigestMode, IssuerIdentity, MemoryHardParams, SignedClaim};
use sdbls_core::group::{G1Point, G2Point, Scalar};
use sdbls_core::harness::{Ceremony, FaultPlan, Presentation, PresentationMode, QuorumConfig, RevocationOutcome};
use sdbls_core::presentation::{
    make_basic_proof, make_one_time_proof, verify_basic_with_mode, verify_one_time_with_mode, Clock, SessionInfo,
    SessionPolicy,
};
use sdbls_core::pvss::{
    accept_share, deal, prove_share_possession, reconstruct, verify_deal, verify_share_possession, DealerBundle,
    IssuerDhKeys, ReconstructError, RevealedShare, SharePossessionProof,
};
use sdbls_core::revocation::{is_revoked_scan, PublishOutcome, RevocationList};

#[derive(Debug, Parser)]
#[command(name = "sdbls", version, about = "Selective disclosure BLS credentials with anonymous revocation")]
struct Cli {
    /// Seed for all randomness; omit to use the operating system.
    #[arg(long, global = true, env = "SDBLS_SEED")]
    seed: Option<u64>,
    /// Claim digest function.
    #[arg(long, global = true, value_enum, default_value_t = Kdf::Sha256)]
    kdf: Kdf,
    /// Reconstruction threshold and issuer count, as `t:n`.
    #[arg(long, global = true, value_parser = parse_quorum)]
    quorum: Option<(u32, u32)>,
    /// Write the primary output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kdf {
    Sha256,
    MemoryHard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KeyKind {
    Issuer,
    Revoker,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Basic,
    OneTime,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an issuer signing key or a revocation issuer key.
    Keygen {
        #[arg(long, value_enum, default_value_t = KeyKind::Issuer)]
        kind: KeyKind,
        /// Append the new revocation issuer's public key to this directory file.
        #[arg(long)]
        directory: Option<PathBuf>,
    },
    /// Issue signed claims.
    Issue {
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "claim", required = true)]
        claims: Vec<String>,
        /// Append `{h, rev}` records to this registry.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Build a presentation for one stored claim.
    Present {
        #[arg(long)]
        claims: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, value_enum, default_value_t = Mode::OneTime)]
        mode: Mode,
        /// Audience written into the session string.
        #[arg(long)]
        aud: Option<String>,
        /// Issued-at time for the session string; defaults to now.
        #[arg(long)]
        iat: Option<u64>,
        /// Include the claim content and nonce.
        #[arg(long)]
        disclose: bool,
    },
    /// Verify a presentation and check revocation.
    Verify {
        /// Issuer key file (only the public key is read).
        #[arg(long)]
        issuer: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        list: Option<PathBuf>,
        #[arg(long)]
        aud: Option<String>,
        #[arg(long, default_value_t = 300)]
        max_age: u64,
        /// Verifier clock; defaults to now.
        #[arg(long)]
        now: Option<u64>,
    },
    /// Publish a revocation secret to a list file.
    RevokeList(RevokeArgs),
    /// Deal a revocation secret to the issuers in a directory.
    Deal {
        #[arg(long)]
        issuers: PathBuf,
        /// Secret to share (base64url); random if omitted.
        #[arg(long)]
        rev: Option<String>,
    },
    /// Check a dealt bundle and decrypt this issuer's share.
    AcceptShare {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        index: u32,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        issuers: PathBuf,
    },
    /// Reveal a share with a proof of possession.
    Reveal {
        #[arg(long)]
        share: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
    },
    /// Rebuild the revocation secret from revealed shares.
    Reconstruct {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long = "reveal", required = true)]
        reveals: Vec<PathBuf>,
        /// Publish the result to this list.
        #[arg(long)]
        list: Option<PathBuf>,
    },
    /// Run the simulated multi-party issuance and revocation ceremony.
    Ceremony {
        #[arg(long = "claim", required = true)]
        claims: Vec<String>,
        /// Votes needed before shares are revealed; defaults to t.
        #[arg(long)]
        vote_quorum: Option<u32>,
        /// Claim index to put to a revocation vote.
        #[arg(long)]
        revoke: Option<usize>,
        /// Voting issuers, comma separated.
        #[arg(long, value_delimiter = ',')]
        voters: Vec<u32>,
    },
    /// Timing and size measurements.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct RevokeArgs {
    #[arg(long)]
    list: PathBuf,
    /// Secret to publish (base64url).
    #[arg(long, conflicts_with = "registry")]
    rev: Option<String>,
    /// Issuer registry to look the secret up in.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Claim digest to look up (base64url).
    #[arg(long, requires = "registry")]
    digest: Option<String>,
    /// Claims file; with `--index`, the digest is taken from that claim.
    #[arg(long, requires = "registry")]
    claims: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    index: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 64)]
    max_claims: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_quorum, default_value = "2:3,3:5,3:7,3:9,5:9")]
    pvss: Vec<(u32, u32)>,
    /// Worker threads for an extra parallel-scan series (not single-core data).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Skip the issue/verify series.
    #[arg(long)]
    skip_issue: bool,
    /// Skip the revocation scan series.
    #[arg(long)]
    skip_scan: bool,
    /// Skip the PVSS series.
    #[arg(long)]
    skip_pvss: bool,
}

fn parse_quorum(text: &str) -> std::result::Result<(u32, u32), String> {
    let (t, n) = text.split_once(':').ok_or("expected t:n")?;
    let t: u32 = t.parse().map_err(|_| "t is not a number")?;
    let n: u32 = n.parse().map_err(|_| "n is not a number")?;
    if t < 2 || t > n {
        return Err(format!("need 2 <= t <= n, got {t}:{n}"));
    }
    Ok((t, n))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(String),
    /// A negative answer: invalid proof, revoked claim, refused quorum.
    #[error("{0}")]
    Rejected(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Rejected(_) => 1,
            CliError::Usage(_) | CliError::Format(_) => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn format_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Format(format!("{}: {e}", path.display()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| format_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("values serialize");
    text.push('\n');
    text
}

fn decode<T: DeserializeOwned>(what: &str, b64: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(b64.to_owned()))
        .map_err(|e| CliError::Format(format!("{what}: {e}")))
}

#[derive(Serialize, Deserialize)]
struct IssuerKeyFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sk: Option<Scalar>,
    pk: G2Point,
}

#[derive(Serialize, Deserialize)]
struct RevokerKeyFile {
    x: Scalar,
    y: G1Point,
}

#[derive(Serialize, Deserialize)]
struct RevealFile {
    share: RevealedShare,
    proof: SharePossessionProof,
}

#[derive(Serialize)]
struct ReconstructOutput {
    rev: Scalar,
    r: G2Point,
    excluded: Vec<u32>,
}

struct Ctx {
    rng: ChaCha20Rng,
    mode: DigestMode,
    quorum: Option<(u32, u32)>,
    out: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }

    fn quorum(&self) -> Result<(u32, u32)> {
        self.quorum.ok_or_else(|| CliError::Usage("--quorum t:n is required".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdbls: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = match cli.seed {
        Some(s) => s,
        None => {
            let mut raw = [0u8; 8];
            getrandom::fill(&mut raw).map_err(|e| CliError::Usage(format!("no OS randomness: {e}")))?;
            u64::from_le_bytes(raw)
        }
    };
    let mode = match cli.kdf {
        Kdf::Sha256 => DigestMode::Sha256,
        Kdf::MemoryHard => DigestMode::MemoryHard(MemoryHardParams::default()),
    };
    let mut ctx =
        Ctx { rng: ChaCha20Rng::seed_from_u64(seed), mode, quorum: cli.quorum, out: cli.out, format: cli.format };
    if ctx.format == Format::Csv && !matches!(cli.command, Command::Bench(_)) {
        return Err(CliError::Usage("--format csv only applies to bench".into()));
    }
    match cli.command {
        Command::Keygen { kind, directory } => keygen(&mut ctx, kind, directory.as_deref()),
        Command::Issue { key, claims, registry } => issue(&mut ctx, &key, &claims, registry.as_deref()),
        Command::Present { claims, index, mode, aud, iat, disclose } => {
            present(&mut ctx, &claims, index, mode, aud, iat, disclose)
        }
        Command::Verify { issuer, proof, list, aud, max_age, now } => {
            verify(&ctx, &issuer, &proof, list.as_deref(), aud, max_age, now)
        }
        Command::RevokeList(args) => revoke_list(&ctx, &args),
        Command::Deal { issuers, rev } => deal_cmd(&mut ctx, &issuers, rev.as_deref()),
        Command::AcceptShare { key, index, bundle, issuers } => accept_share_cmd(&ctx, &key, index, &bundle, &issuers),
        Command::Reveal { share, bundle } => reveal(&mut ctx, &share, &bundle),
        Command::Reconstruct { bundle, reveals, list } => reconstruct_cmd(&ctx, &bundle, &reveals, list.as_deref()),
        Command::Ceremony { claims, vote_quorum, revoke, voters } => {
            ceremony(&ctx, seed, &claims, vote_quorum, revoke, &voters)
        }
        Command::Bench(args) => bench_cmd(&ctx, seed, &args),
    }
}

fn keygen(ctx: &mut Ctx, kind: KeyKind, directory: Option<&Path>) -> Result<()> {
    match kind {
        KeyKind::Issuer => {
            let keys = bls::keygen(&mut ctx.rng);
            ctx.emit(&to_json(&IssuerKeyFile { sk: Some(*keys.secret()), pk: keys.public() }))
        }
        KeyKind::Revoker => {
            let keys = IssuerDhKeys::generate(&mut ctx.rng);
            if let Some(path) = directory {
                let mut dir: Vec<G1Point> = if path.exists() { read_json(path)? } else { Vec::new() };
                dir.push(keys.public());
                fs::write(path, to_json(&dir)).map_err(|e| format_err(path, e))?;
            }
            ctx.emit(&to_json(&RevokerKeyFile { x: *keys.secret(), y: keys.public() }))
        }
    }
}

fn load_issuer(path: &Path) -> Result<IssuerKeyFile> {
    read_json(path)
}

fn issue(ctx: &mut Ctx, key: &Path, claims: &[String], registry: Option<&Path>) -> Result<()> {
    let file = load_issuer(key)?;
    let sk = file.sk.ok_or_else(|| format_err(key, "no secret key"))?;
    let keys = KeyPair::from_secret(sk).map_err(|e| format_err(key, e))?;
    if keys.public() != file.pk {
        return Err(format_err(key, "public key does not match secret key"));
    }
    let mut issuer = IssuerIdentity::new(keys).with_digest_mode(ctx.mode);
    let (signed, records) = issuer.issue_claims(claims, &mut ctx.rng).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = registry {
        credential::append_registry(path, &records).map_err(|e| format_err(path, e))?;
    }
    ctx.emit(&to_json(&signed))
}

fn present(
    ctx: &mut Ctx,
    claims: &Path,
    index: usize,
    mode: Mode,
    aud: Option<String>,
    iat: Option<u64>,
    disclose: bool,
) -> Result<()> {
    let stored: Vec<SignedClaim> = read_json(claims)?;
    let claim = stored
        .get(index)
        .ok_or_else(|| CliError::Usage(format!("claim index {index} out of range ({} stored)", stored.len())))?;
    let presentation = match mode {
        Mode::Basic => Presentation::Basic(make_basic_proof(claim, disclose)),
        Mode::OneTime => {
            let aud = aud.ok_or_else(|| CliError::Usage("one-time proofs need --aud".into()))?;
            let t = SessionInfo::new(aud, iat.unwrap_or_else(|| Clock::System.now())).encode();
            let proof =
                make_one_time_proof(claim, &t, &mut ctx.rng, disclose).map_err(|e| CliError::Usage(e.to_string()))?;
            Presentation::OneTime(proof)
        }
    };
    ctx.emit(&to_json(&presentation))
}

fn verify(
    ctx: &Ctx,
    issuer: &Path,
    proof: &Path,
    list: Option<&Path>,
    aud: Option<String>,
    max_age: u64,
    now: Option<u64>,
) -> Result<()> {
    let pk = load_issuer(issuer)?.pk;
    let presentation: Presentation = read_json(proof)?;
    let list = match list {
        Some(path) if path.exists() => RevocationList::load(path).map_err(|e| format_err(path, e))?,
        _ => RevocationList::new(),
    };
    let (result, r) = match &presentation {
        Presentation::Basic(p) => (verify_basic_with_mode(&pk, p, &ctx.mode), p.r),
        Presentation::OneTime(p) => {
            let aud = aud.ok_or_else(|| CliError::Usage("one-time proofs need --aud".into()))?;
            let clock = now.map_or(Clock::System, Clock::Fixed);
            let policy = SessionPolicy::new(aud, max_age, clock).map_err(|e| CliError::Usage(e.to_string()))?;
            (verify_one_time_with_mode(&pk, p, &policy, &ctx.mode), p.r)
        }
    };
    result.map_err(|e| CliError::Rejected(format!("invalid: {e}")))?;
    if is_revoked_scan(&r, &list) {
        return Err(CliError::Rejected("revoked".into()));
    }
    ctx.emit("valid\n")
}

fn revoke_list(ctx: &Ctx, args: &RevokeArgs) -> Result<()> {
    let rev: Scalar = match (&args.rev, &args.registry) {
        (Some(rev), _) => decode("--rev", rev)?,
        (None, Some(registry)) => {
            let digest: ClaimDigest = match (&args.digest, &args.claims) {
                (Some(d), _) => decode("--digest", d)?,
                (None, Some(claims)) => {
                    let stored: Vec<SignedClaim> = read_json(claims)?;
                    stored
                        .get(args.index)
                        .ok_or_else(|| CliError::Usage(format!("claim index {} out of range", args.index)))?
                        .h
                }
                (None, None) => return Err(CliError::Usage("--registry needs --digest or --claims".into())),
            };
            let records = credential::load_registry(registry).map_err(|e| format_err(registry, e))?;
            records
                .iter()
                .find(|rec| rec.h == digest)
                .map(|rec| rec.rev)
                .ok_or_else(|| CliError::Usage("digest not found in registry".into()))?
        }
        (None, None) => return Err(CliError::Usage("give --rev or --registry".into())),
    };
    let mut list = if args.list.exists() {
        RevocationList::load(&args.list).map_err(|e| format_err(&args.list, e))?
    } else {
        RevocationList::new()
    };
    let outcome = list.publish(rev).map_err(|e| CliError::Usage(e.to_string()))?;
    list.save(&args.list).map_err(|e| format_err(&args.list, e))?;
    ctx.emit(match outcome {
        PublishOutcome::Appended => "appended\n",
        PublishOutcome::AlreadyPresent => "already present\n",
    })
}

fn deal_cmd(ctx: &mut Ctx, issuers: &Path, rev: Option<&str>) -> Result<()> {
    let (t, n) = ctx.quorum()?;
    let pks: Vec<G1Point> = read_json(issuers)?;
    let rev = match rev {
        Some(text) => decode("--rev", text)?,
        None => Scalar::random(&mut ctx.rng),
    };
    let (bundle, _transcript) = deal(&rev, t, n, &pks, &mut ctx.rng).map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.emit(&to_json(&bundle))
}

fn accept_share_cmd(ctx: &Ctx, key: &Path, index: u32, bundle: &Path, issuers: &Path) -> Result<()> {
    let file: RevokerKeyFile = read_json(key)?;
    let keys = IssuerDhKeys::from_secret(file.x);
    if keys.public() != file.y {
        return Err(format_err(key, "public key does not match secret key"));
    }
    let bundle: DealerBundle = read_json(bundle)?;
    let pks: Vec<G1Point> = read_json(issuers)?;
    verify_deal(&bundle, &pks).map_err(|e| CliError::Rejected(format!("bundle rejected: {e}")))?;
    let s = accept_share(&keys, index, &bundle).map_err(|c| CliError::Rejected(format!("complaint: {c}")))?;
    ctx.emit(&to_json(&RevealedShare { i: index, s }))
}

fn reveal(ctx: &mut Ctx, share: &Path, bundle: &Path) -> Result<()> {
    let share: RevealedShare = read_json(share)?;
    let bundle: DealerBundle = read_json(bundle)?;
    let proof = prove_share_possession(&share, &bundle, &mut ctx.rng);
    ctx.emit(&to_json(&RevealFile { share, proof }))
}

fn reconstruct_cmd(ctx: &Ctx, bundle: &Path, reveals: &[PathBuf], list: Option<&Path>) -> Result<()> {
    let bundle: DealerBundle = read_json(bundle)?;
    let mut excluded = BTreeSet::new();
    let mut shares = Vec::new();
    for path in reveals {
        let file: RevealFile = read_json(path)?;
        if file.proof.i == file.share.i && verify_share_possession(&file.proof, &bundle) {
            shares.push(file.share);
        } else {
            excluded.insert(file.share.i);
        }
    }
    let rev = loop {
        match reconstruct(&shares, &bundle) {
            Ok(rev) => break rev,
            Err(ReconstructError::InvalidShares { indices }) => {
                excluded.extend(indices.iter().copied());
                shares.retain(|s| !indices.contains(&s.i));
            }
            Err(e @ ReconstructError::TooFewShares { .. }) => {
                return Err(CliError::Rejected(format!("quorum not reached: {e}")))
            }
            Err(e) => return Err(CliError::Format(e.to_string())),
        }
    };
    if let Some(path) = list {
        let mut published = if path.exists() {
            RevocationList::load(path).map_err(|e| format_err(path, e))?
        } else {
            RevocationList::new()
        };
        published.publish(rev).map_err(|e| CliError::Format(e.to_string()))?;
        published.save(path).map_err(|e| format_err(path, e))?;
    }
    let r = bundle.revocation_key().expect("reconstruct checked the bundle");
    ctx.emit(&to_json(&ReconstructOutput { rev, r, excluded: excluded.into_iter().collect() }))
}

fn ceremony(
    ctx: &Ctx,
    seed: u64,
    claims: &[String],
    vote_quorum: Option<u32>,
    revoke: Option<usize>,
    voters: &[u32],
) -> Result<()> {
    let (t, n) = ctx.quorum()?;
    let config = QuorumConfig::new(n, t, vote_quorum.unwrap_or(t)).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut c = Ceremony::run_issuance_with_mode(config, claims, seed, &FaultPlan::default(), ctx.mode)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut refused = None;
    if let Some(k) = revoke {
        let voters: BTreeSet<u32> = voters.iter().copied().collect();
        match c.request_revocation(k, &voters).map_err(|e| CliError::Usage(e.to_string()))? {
            RevocationOutcome::Revoked { .. } => {
                let policy = SessionPolicy::new("sdbls-cli", 60, Clock::Fixed(0)).expect("positive max age");
                c.run_presentation_session(k, &policy, PresentationMode::Basic)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            RevocationOutcome::Refused { votes, vote_quorum } => {
                refused = Some(format!("quorum refused: {votes} of {vote_quorum} votes"));
            }
            RevocationOutcome::Failed { valid_reveals, .. } => {
                refused = Some(format!("reconstruction failed with {valid_reveals} valid reveals"));
            }
        }
    }
    ctx.emit(&c.record().to_json())?;
    match refused {
        Some(msg) => Err(CliError::Rejected(msg)),
        None => Ok(()),
    }
}

fn bench_cmd(ctx: &Ctx, seed: u64, args: &BenchArgs) -> Result<()> {
    if args.max_claims == 0 || args.sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::Usage("need --max-claims >= 1 and ascending --sizes".into()));
    }
    let mut reports = vec![bench::measure_sizes().to_report()];
    if !args.skip_issue {
        reports.push(bench::bench_issue_verify(args.max_claims, args.reps, seed));
    }
    if !args.skip_scan {
        reports.push(bench::bench_revocation_scan(&args.sizes, args.reps, seed, args.threads));
    }
    if !args.skip_pvss {
        reports.push(bench::bench_pvss(&args.pvss, args.reps, seed));
    }
    let report = BenchReport::merge(reports);
    ctx.emit(&match ctx.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    })
}
