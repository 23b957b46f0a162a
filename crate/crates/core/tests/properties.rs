use proptest::prelude::*;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use sdbls_core::bls::{self, keygen};
use sdbls_core::credential::{DigestMode, IssuerIdentity};
use sdbls_core::group::{G1Point, G2Point, Scalar};
use sdbls_core::presentation::{
    make_basic_proof, make_one_time_proof, verify_basic, verify_one_time, BasicProof, Clock, OneTimeProof, SessionInfo,
    SessionPolicy,
};
use sdbls_core::pvss::{interpolate_at_zero, RevealedShare};
use sdbls_core::revocation::RevocationList;

fn scalar(seed: u64) -> Scalar {
    Scalar::random(&mut ChaCha20Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixed_base_matches_generic_mul(seed: u64) {
        let s = scalar(seed);
        prop_assert_eq!(G1Point::mul_generator(&s), G1Point::generator() * s);
        prop_assert_eq!(G2Point::mul_generator(&s), G2Point::generator() * s);
    }

    #[test]
    fn encodings_round_trip(seed: u64) {
        let s = scalar(seed);
        prop_assert_eq!(Scalar::from_bytes(&s.to_bytes()).unwrap(), s);
        let p = G1Point::mul_generator(&s);
        prop_assert_eq!(G1Point::from_bytes(&p.to_bytes()).unwrap(), p);
        let q = G2Point::mul_generator(&s);
        prop_assert_eq!(G2Point::from_bytes(&q.to_bytes()).unwrap(), q);
    }

    #[test]
    fn sign_verify_and_aggregate(seed: u64, msg in proptest::collection::vec(any::<u8>(), 0..64), other in any::<u8>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = keygen(&mut rng);
        let b = keygen(&mut rng);
        let sa = a.sign(&msg);
        prop_assert!(bls::verify(&a.public(), &msg, &sa));
        let mut changed = msg.clone();
        changed.push(other);
        prop_assert!(!bls::verify(&a.public(), &changed, &sa));
        let agg = bls::aggregate_sigs(&[sa, b.sign(&msg)]).unwrap();
        let apk = bls::aggregate_pks(&[a.public(), b.public()]).unwrap();
        prop_assert!(bls::verify(&apk, &msg, &agg));
        prop_assert!(!bls::verify(&a.public(), &msg, &agg));
    }

    #[test]
    fn issued_claims_present_and_round_trip(seed: u64, m in "[a-z0-9=]{1,24}", iat in 1u64..1_000_000) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut issuer = IssuerIdentity::new(keygen(&mut rng));
        let pk = issuer.public_key();
        let (claims, records) = issuer.issue_claims(&[m.as_str()], &mut rng).unwrap();
        let claim = &claims[0];
        prop_assert!(claim.verify(&pk, &DigestMode::Sha256));
        prop_assert_eq!(G2Point::mul_generator(&records[0].rev), claim.r);

        let basic = make_basic_proof(claim, seed % 2 == 0);
        let basic: BasicProof = serde_json::from_str(&serde_json::to_string(&basic).unwrap()).unwrap();
        prop_assert!(verify_basic(&pk, &basic).is_ok());

        let policy = SessionPolicy::new("rp", 30, Clock::Fixed(iat + 5)).unwrap();
        let t = SessionInfo::new("rp", iat).encode();
        let proof = make_one_time_proof(claim, &t, &mut rng, seed % 3 == 0).unwrap();
        let proof: OneTimeProof = serde_json::from_str(&serde_json::to_string(&proof).unwrap()).unwrap();
        prop_assert!(verify_one_time(&pk, &proof, &policy).is_ok());
    }

    #[test]
    fn any_t_points_interpolate_the_constant(seed: u64, t in 2usize..6, extra in 0usize..4, skip in 0usize..8) {
        let coefficients: Vec<Scalar> = (0..t as u64).map(|k| scalar(seed ^ (k + 1))).collect();
        let n = t + extra;
        let points: Vec<RevealedShare> = (1..=n as u32)
            .map(|i| RevealedShare { i, s: sdbls_core::pvss::evaluate_polynomial(&coefficients, i) })
            .collect();
        let start = skip % (n - t + 1);
        prop_assert_eq!(interpolate_at_zero(&points[start..start + t]), coefficients[0]);
    }

    #[test]
    fn revocation_list_formats_round_trip(seeds in proptest::collection::btree_set(any::<u64>(), 0..12)) {
        let mut list = RevocationList::new();
        for s in seeds {
            list.publish(scalar(s)).unwrap();
        }
        prop_assert_eq!(RevocationList::from_text(&list.to_text()).unwrap(), list.clone());
        prop_assert_eq!(RevocationList::from_raw(&list.to_raw()).unwrap(), list.clone());
        prop_assert_eq!(list.to_raw().len(), 32 * list.len());
    }
}
