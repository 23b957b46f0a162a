#![allow(dead_code)]

use rand_chacha::ChaCha20Rng;
use sdbls_core::bls;
use sdbls_core::credential::frame2;
use sdbls_core::group::{G1Point, G2Point, Scalar};
use sdbls_core::presentation::{frame3, OneTimeProof, SessionInfo};

pub const FIELDS: [&str; 6] = ["h", "r", "sigma_prime", "t", "pk_t", "sigma_t"];

/// Changes exactly one field. A changed `t` stays well-formed and inside
/// the policy window so that only the signatures can catch it.
pub fn mutate(proof: &OneTimeProof, field: &str) -> OneTimeProof {
    let mut p = proof.clone();
    match field {
        "h" => p.h.0[0] ^= 0x01,
        "r" => p.r += G2Point::generator(),
        "sigma_prime" => p.sigma_prime += G1Point::generator(),
        "t" => {
            let info = SessionInfo::parse(&p.t).expect("well-formed session");
            p.t = SessionInfo::new(info.aud, info.iat - 1).encode();
        }
        "pk_t" => p.pk_t += G2Point::generator(),
        "sigma_t" => p.sigma_t += G1Point::generator(),
        other => panic!("no field {other}"),
    }
    p
}

pub const FORGERIES: [&str; 3] = ["stale-sigma-t", "resigned-over-old-sigma-prime", "summed-pk-t"];

/// An eavesdropper holding `proof` adds a fresh session key `sk'` on top:
/// `σ'' = σ' + sign(sk', H:r)` verifies under `pk_t + pk'`, but the
/// session signature cannot be produced without `sk_t`.
pub fn forge(proof: &OneTimeProof, new_t: &str, variant: &str, rng: &mut ChaCha20Rng) -> OneTimeProof {
    let sk = Scalar::random(rng);
    let pk = G2Point::mul_generator(&sk);
    let sigma2 = proof.sigma_prime + bls::sign(&sk, &frame2(&proof.h, &proof.r)).unwrap();
    let pk2 = proof.pk_t + pk;
    let sigma_t = match variant {
        "stale-sigma-t" => proof.sigma_t,
        "resigned-over-old-sigma-prime" => {
            bls::sign(&sk, &frame3(&proof.h, &proof.r, &proof.sigma_prime, new_t, &pk2)).unwrap()
        }
        "summed-pk-t" => bls::sign(&sk, &frame3(&proof.h, &proof.r, &sigma2, new_t, &pk2)).unwrap(),
        other => panic!("no variant {other}"),
    };
    OneTimeProof { sigma_prime: sigma2, t: new_t.to_owned(), pk_t: pk2, sigma_t, ..proof.clone() }
}

/// All `k`-element subsets of `1..=n`, in lexicographic order.
pub fn subsets(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn walk(start: u32, n: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            walk(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(1, n, k, &mut Vec::new(), &mut out);
    out
}

pub const SUITE_DST: &[u8] = b"QUUX-V01-CS02-with-BLS12381G1_XMD:SHA-256_SSWU_RO_";

/// Published hash-to-curve vectors for the G1 random-oracle suite with
/// SHA-256: message and the uncompressed `x`, `y` coordinates.
pub fn suite_vectors() -> Vec<(Vec<u8>, &'static str, &'static str)> {
    vec![
        (
            b"".to_vec(),
            "052926add2207b76ca4fa57a8734416c8dc95e24501772c814278700eed6d1e4e8cf62d9c09db0fac349612b759e79a1",
            "08ba738453bfed09cb546dbb0783dbb3a5f1f566ed67bb6be0e8c67e2e81a4cc68ee29813bb7994998f3eae0c9c6a265",
        ),
        (
            b"abc".to_vec(),
            "03567bc5ef9c690c2ab2ecdf6a96ef1c139cc0b2f284dca0a9a7943388a49a3aee664ba5379a7655d3c68900be2f6903",
            "0b9c15f3fe6e5cf4211f346271d7b01c8f3b28be689c8429c85b67af215533311f0b8dfaaa154fa6b88176c229f2885d",
        ),
        (
            b"abcdef0123456789".to_vec(),
            "11e0b079dea29a68f0383ee94fed1b940995272407e3bb916bbf268c263ddd57a6a27200a784cbc248e84f357ce82d98",
            "03a87ae2caf14e8ee52e51fa2ed8eefe80f02457004ba4d486d6aa1f517c0889501dc7413753f9599b099ebcbbd2d709",
        ),
        (
            format!("q128_{}", "q".repeat(128)).into_bytes(),
            "15f68eaa693b95ccb85215dc65fa81038d69629f70aeee0d0f677cf22285e7bf58d7cb86eefe8f2e9bc3f8cb84fac488",
            "1807a1d50c29f430b8cafc4f8638dfeeadf51211e1602a5f184443076715f91bb90a48ba1e370edce6ae1062f5e6dd38",
        ),
        (
            format!("a512_{}", "a".repeat(512)).into_bytes(),
            "082aabae8b7dedb0e78aeb619ad3bfd9277a2f77ba7fad20ef6aabdc6c31d19ba5a6d12283553294c1825c4b3ca2dcfe",
            "05b84ae5a942248eea39e1d91030458c40153f3b654ab7872d779ad1e942856a20c438e8d99bc8abfbf74729ce1f7ac8",
        ),
    ]
}
