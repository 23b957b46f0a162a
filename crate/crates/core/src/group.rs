//! BLS12-381 group and field layer.
//!
//! Every higher module talks to the curve through the newtypes defined here:
//! [`Scalar`] (integers mod the group order), [`G1Point`] (signatures, hashed
//! messages, Diffie-Hellman keys), [`G2Point`] (public keys, revocation keys,
//! polynomial commitments) and [`GtElement`] (pairing outputs).
//!
//! Encodings are fixed: scalars are 32 bytes big-endian, G1 points are the
//! 48-byte compressed form and G2 points the 96-byte compressed form, with the
//! compression/infinity/sign flags in the three most significant bits of the
//! first byte. Decoding reports wrong lengths, non-canonical encodings,
//! off-curve points and points outside the prime-order subgroup as distinct
//! errors.
//!
//! Note on curve parameters: this is the standard BLS12-381 curve,
//! `y^2 = x^3 + 4` over the base field (and `y^2 = x^3 + 4(u + 1)` on the
//! twist). Some descriptions of the curve quote the constant as 16; that is
//! not the curve used here or by any interoperable implementation.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use bls12_381::hash_to_curve::{ExpandMsgXmd, HashToCurve};
use bls12_381::{G1Affine, G1Projective, G2Affine, G2Prepared, G2Projective, Gt};
use ff::Field;
use rand_core::CryptoRng;
use sha2::{Digest, Sha512};
use subtle::ConditionallySelectable;
use thiserror::Error;
use zeroize::Zeroize;

/// Domain separation tag used for every hash-to-G1 call in this crate.
pub const DOMAIN_TAG: &[u8] = b"SDBLS-V01";

pub const SCALAR_BYTES: usize = 32;
pub const G1_BYTES: usize = 48;
pub const G2_BYTES: usize = 96;

/// Base field modulus, big-endian.
const FIELD_MODULUS: [u8; 48] = [
    0x1a, 0x01, 0x11, 0xea, 0x39, 0x7f, 0xe6, 0x9a, 0x4b, 0x1b, 0xa7, 0xb6, 0x43, 0x4b, 0xac, 0xd7, 0x64, 0x77, 0x4b,
    0x84, 0xf3, 0x85, 0x12, 0xbf, 0x67, 0x30, 0xd2, 0xa0, 0xf6, 0xb0, 0xf6, 0x24, 0x1e, 0xab, 0xff, 0xfe, 0xb1, 0x53,
    0xff, 0xff, 0xb9, 0xfe, 0xff, 0xff, 0xff, 0xff, 0xaa, 0xab,
];

const FLAG_COMPRESSED: u8 = 0x80;
const FLAG_INFINITY: u8 = 0x40;
const FLAG_SORT: u8 = 0x20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("wrong encoding length: expected {expected} bytes, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("non-canonical encoding")]
    NonCanonical,
    #[error("point is not on the curve")]
    OffCurve,
    #[error("point is not in the prime-order subgroup")]
    WrongSubgroup,
}

/// An integer modulo the group order `n`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Scalar(pub(crate) bls12_381::Scalar);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(bls12_381::Scalar::ZERO)
    }

    pub fn one() -> Self {
        Scalar(bls12_381::Scalar::ONE)
    }

    pub fn from_u64(v: u64) -> Self {
        Scalar(bls12_381::Scalar::from(v))
    }

    /// Uniform non-zero scalar.
    pub fn random<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = bls12_381::Scalar::random(&mut *rng);
            if !bool::from(s.is_zero()) {
                return Scalar(s);
            }
        }
    }

    /// Maps a list of byte strings to a scalar: SHA-512 over the
    /// length-prefixed parts, reduced mod `n`.
    pub fn hash_to_scalar(domain: &[u8], parts: &[&[u8]]) -> Self {
        let mut h = Sha512::new();
        h.update((domain.len() as u64).to_be_bytes());
        h.update(domain);
        for p in parts {
            h.update((p.len() as u64).to_be_bytes());
            h.update(p);
        }
        let wide: [u8; 64] = h.finalize().into();
        Scalar(bls12_381::Scalar::from_bytes_wide(&wide))
    }

    pub fn is_zero(&self) -> bool {
        bool::from(self.0.is_zero())
    }

    pub fn invert(&self) -> Option<Scalar> {
        Option::from(self.0.invert()).map(Scalar)
    }

    /// 32-byte big-endian encoding.
    pub fn to_bytes(&self) -> [u8; SCALAR_BYTES] {
        let mut out = self.0.to_bytes();
        out.reverse();
        out
    }

    /// Decodes a 32-byte big-endian value, rejecting anything `>= n`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
        let mut le: [u8; SCALAR_BYTES] =
            bytes.try_into().map_err(|_| EncodingError::WrongLength { expected: SCALAR_BYTES, actual: bytes.len() })?;
        le.reverse();
        Option::from(bls12_381::Scalar::from_bytes(&le)).map(Scalar).ok_or(EncodingError::NonCanonical)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", crate::codec::encode(self.to_bytes()))
    }
}

impl Zeroize for Scalar {
    fn zeroize(&mut self) {
        self.0.zeroize();
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 + rhs.0)
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 - rhs.0)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        self.0 += rhs.0;
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |a, b| a + b)
    }
}

/// Checks the flag bits and coordinate ranges of a compressed encoding.
/// Returns `true` for the point at infinity.
fn check_compressed(bytes: &[u8]) -> Result<bool, EncodingError> {
    let flags = bytes[0];
    if flags & FLAG_COMPRESSED == 0 {
        return Err(EncodingError::NonCanonical);
    }
    if flags & FLAG_INFINITY != 0 {
        let rest_zero = bytes[0] & !(FLAG_COMPRESSED | FLAG_INFINITY) == 0 && bytes[1..].iter().all(|b| *b == 0);
        return if rest_zero { Ok(true) } else { Err(EncodingError::NonCanonical) };
    }
    for (k, chunk) in bytes.chunks(48).enumerate() {
        let mut coord = [0u8; 48];
        coord.copy_from_slice(chunk);
        if k == 0 {
            coord[0] &= !(FLAG_COMPRESSED | FLAG_INFINITY | FLAG_SORT);
        }
        // big-endian lexicographic comparison is numeric comparison
        if coord >= FIELD_MODULUS {
            return Err(EncodingError::NonCanonical);
        }
    }
    Ok(false)
}

macro_rules! curve_point {
    (
        $(#[$meta:meta])*
        $name:ident, $affine:ty, $proj:ty, $len:expr, $table:ident
    ) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq)]
        pub struct $name(pub(crate) $proj);

        impl $name {
            pub fn generator() -> Self {
                $name(<$proj>::generator())
            }

            pub fn identity() -> Self {
                $name(<$proj>::identity())
            }

            pub fn is_identity(&self) -> bool {
                bool::from(self.0.is_identity())
            }

            /// `s · G` for the fixed generator, through a precomputed
            /// constant-time comb.
            pub fn mul_generator(s: &Scalar) -> Self {
                $name($table().mul(s))
            }

            /// Variable-time multiplication by a small public integer.
            pub fn mul_small(&self, k: u64) -> Self {
                let mut acc = <$proj>::identity();
                for bit in (0..64).rev() {
                    acc = acc.double();
                    if (k >> bit) & 1 == 1 {
                        acc += self.0;
                    }
                }
                $name(acc)
            }

            pub fn to_affine(&self) -> $affine {
                <$affine>::from(self.0)
            }

            pub fn to_bytes(&self) -> [u8; $len] {
                self.to_affine().to_compressed()
            }

            pub fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
                let arr: [u8; $len] = bytes.try_into().map_err(|_| EncodingError::WrongLength {
                    expected: $len,
                    actual: bytes.len(),
                })?;
                if check_compressed(&arr)? {
                    return Ok(Self::identity());
                }
                let p: $affine = Option::from(<$affine>::from_compressed_unchecked(&arr))
                    .ok_or(EncodingError::OffCurve)?;
                if !bool::from(p.is_torsion_free()) {
                    return Err(EncodingError::WrongSubgroup);
                }
                Ok($name(p.into()))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), crate::codec::encode(self.to_bytes()))
            }
        }

        impl std::hash::Hash for $name {
            fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
                self.to_bytes().hash(state)
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: $name) {
                self.0 += rhs.0;
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-self.0)
            }
        }

        impl Mul<Scalar> for $name {
            type Output = $name;
            fn mul(self, rhs: Scalar) -> $name {
                $name(self.0 * rhs.0)
            }
        }

        impl Mul<&Scalar> for &$name {
            type Output = $name;
            fn mul(self, rhs: &Scalar) -> $name {
                $name(self.0 * rhs.0)
            }
        }

        impl Sum for $name {
            fn sum<I: Iterator<Item = $name>>(iter: I) -> $name {
                iter.fold($name::identity(), |a, b| a + b)
            }
        }
    };
}

/// Fixed-base comb with 4-bit windows: `table[w][d] = d · 16^w · G`.
struct CombTable<A> {
    windows: Vec<[A; 16]>,
}

macro_rules! comb_table {
    ($fn_name:ident, $affine:ty, $proj:ty) => {
        fn $fn_name() -> &'static CombTable<$affine> {
            static TABLE: OnceLock<CombTable<$affine>> = OnceLock::new();
            TABLE.get_or_init(|| {
                let mut base = <$proj>::generator();
                let mut windows = Vec::with_capacity(64);
                for _ in 0..64 {
                    let mut proj = [<$proj>::identity(); 16];
                    for d in 1..16 {
                        proj[d] = proj[d - 1] + base;
                    }
                    let mut aff = [<$affine>::identity(); 16];
                    <$proj>::batch_normalize(&proj, &mut aff);
                    windows.push(aff);
                    base = proj[15] + base;
                }
                CombTable { windows }
            })
        }

        impl CombTable<$affine> {
            fn mul(&self, s: &Scalar) -> $proj {
                let le = s.0.to_bytes();
                let mut acc = <$proj>::identity();
                for (w, window) in self.windows.iter().enumerate() {
                    let digit = (le[w / 2] >> ((w % 2) * 4)) & 0x0f;
                    let mut sel = <$affine>::identity();
                    for (d, p) in window.iter().enumerate() {
                        sel.conditional_assign(p, subtle::ConstantTimeEq::ct_eq(&(d as u8), &digit));
                    }
                    acc += sel;
                }
                acc
            }
        }
    };
}

comb_table!(g1_table, G1Affine, G1Projective);
comb_table!(g2_table, G2Affine, G2Projective);

curve_point!(
    /// A point of the prime-order subgroup of `E(F_p)`.
    G1Point, G1Affine, G1Projective, G1_BYTES, g1_table
);
curve_point!(
    /// A point of the prime-order subgroup of the sextic twist over `F_p^2`.
    G2Point, G2Affine, G2Projective, G2_BYTES, g2_table
);

/// An element of the order-`n` subgroup of `F_p^12^*`, written
/// multiplicatively.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GtElement(pub(crate) Gt);

impl GtElement {
    pub fn identity() -> Self {
        GtElement(Gt::identity())
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Gt::identity()
    }

    pub fn pow(&self, e: &Scalar) -> Self {
        GtElement(self.0 * e.0)
    }
}

impl Mul for GtElement {
    type Output = GtElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: GtElement) -> GtElement {
        // the backend writes the target group additively
        GtElement(self.0 + rhs.0)
    }
}

/// The optimal ate pairing `e: G2 × G1 → GT`.
pub fn pairing(q: &G2Point, p: &G1Point) -> GtElement {
    GtElement(bls12_381::pairing(&p.to_affine(), &q.to_affine()))
}

/// Returns whether `Π e(q_i, p_i) == 1`, sharing one final exponentiation.
pub fn pairing_product_is_identity(terms: &[(&G2Point, &G1Point)]) -> bool {
    let prepared: Vec<(G1Affine, G2Prepared)> =
        terms.iter().map(|(q, p)| (p.to_affine(), G2Prepared::from(q.to_affine()))).collect();
    let refs: Vec<(&G1Affine, &G2Prepared)> = prepared.iter().map(|(p, q)| (p, q)).collect();
    bls12_381::multi_miller_loop(&refs).final_exponentiation() == Gt::identity()
}

/// `hash_to_curve` with the `BLS12381G1_XMD:SHA-256_SSWU_RO_` suite.
pub fn hash_to_g1(domain_tag: &[u8], msg: &[u8]) -> G1Point {
    assert!(!domain_tag.is_empty(), "hash-to-curve requires a non-empty domain tag");
    G1Point(<G1Projective as HashToCurve<ExpandMsgXmd<sha2::Sha256>>>::hash_to_curve([msg], domain_tag))
}

/// Any element with a fixed-length encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Element {
    Scalar(Scalar),
    G1(G1Point),
    G2(G2Point),
}

impl Element {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Element::Scalar(s) => s.to_bytes().to_vec(),
            Element::G1(p) => p.to_bytes().to_vec(),
            Element::G2(p) => p.to_bytes().to_vec(),
        }
    }

    /// Dispatches on the input length (32, 48 or 96 bytes).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EncodingError> {
        match bytes.len() {
            SCALAR_BYTES => Scalar::from_bytes(bytes).map(Element::Scalar),
            G1_BYTES => G1Point::from_bytes(bytes).map(Element::G1),
            G2_BYTES => G2Point::from_bytes(bytes).map(Element::G2),
            actual => Err(EncodingError::WrongLength { expected: SCALAR_BYTES, actual }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn random_scalars_are_deterministic_and_nonzero() {
        assert_eq!(Scalar::random(&mut rng(7)), Scalar::random(&mut rng(7)));
        assert_ne!(Scalar::random(&mut rng(7)), Scalar::random(&mut rng(8)));
        let mut r = rng(1);
        for _ in 0..10_000 {
            let s = Scalar::random(&mut r);
            assert!(!s.is_zero());
            // canonical encoding implies s < n
            assert_eq!(Scalar::from_bytes(&s.to_bytes()), Ok(s));
        }
    }

    #[test]
    fn scalar_encoding_rejects_order() {
        // n, big-endian
        let n = hex::decode("73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001").unwrap();
        assert_eq!(Scalar::from_bytes(&n), Err(EncodingError::NonCanonical));
        let n_minus_one = (-Scalar::one()).to_bytes();
        let mut expected = n.clone();
        expected[31] = 0;
        assert_eq!(n_minus_one.to_vec(), expected);
        assert!(matches!(Scalar::from_bytes(&[0u8; 31]), Err(EncodingError::WrongLength { expected: 32, actual: 31 })));
    }

    #[test]
    fn group_law_basics() {
        let g1 = G1Point::generator();
        let g2 = G2Point::generator();
        assert_eq!(g2 * Scalar::one(), g2);
        assert!((g1 * Scalar::zero()).is_identity());
        assert_eq!(g1 + G1Point::identity(), g1);
        assert!((g1 + (-g1)).is_identity());
        assert_eq!(g1 * Scalar::from_u64(3) + g1 * Scalar::from_u64(4), g1 * Scalar::from_u64(7));
        let (a, b) = (Scalar::random(&mut rng(2)), Scalar::random(&mut rng(3)));
        assert_eq!(g2 * (a + b), g2 * a + g2 * b);
    }

    #[test]
    fn comb_matches_double_and_add() {
        let mut r = rng(11);
        for _ in 0..20 {
            let s = Scalar::random(&mut r);
            assert_eq!(G1Point::mul_generator(&s), G1Point::generator() * s);
            assert_eq!(G2Point::mul_generator(&s), G2Point::generator() * s);
        }
        assert!(G2Point::mul_generator(&Scalar::zero()).is_identity());
        let m1 = -Scalar::one();
        assert_eq!(G2Point::mul_generator(&m1), -G2Point::generator());
    }

    #[test]
    fn mul_small_matches_scalar_mul() {
        let p = G2Point::generator() * Scalar::from_u64(99);
        for k in [0u64, 1, 2, 3, 9, 255, 1 << 40] {
            assert_eq!(p.mul_small(k), p * Scalar::from_u64(k));
        }
    }

    #[test]
    fn encoding_sizes_and_identity() {
        assert_eq!(G1Point::generator().to_bytes().len(), 48);
        assert_eq!(G2Point::generator().to_bytes().len(), 96);
        let inf = G1Point::identity().to_bytes();
        assert_eq!(inf[0], 0xc0);
        assert_eq!(G1Point::from_bytes(&inf), Ok(G1Point::identity()));
        let mut bad_inf = inf;
        bad_inf[47] = 1;
        assert_eq!(G1Point::from_bytes(&bad_inf), Err(EncodingError::NonCanonical));
    }

    #[test]
    fn uncompressed_flag_is_rejected() {
        let mut b = G1Point::generator().to_bytes();
        b[0] &= !FLAG_COMPRESSED;
        assert_eq!(G1Point::from_bytes(&b), Err(EncodingError::NonCanonical));
    }

    #[test]
    fn coordinate_at_modulus_is_noncanonical() {
        let mut b = FIELD_MODULUS;
        b[0] |= FLAG_COMPRESSED;
        assert_eq!(G1Point::from_bytes(&b), Err(EncodingError::NonCanonical));
        let mut b2 = [0u8; 96];
        b2[48..].copy_from_slice(&FIELD_MODULUS);
        b2[0] |= FLAG_COMPRESSED;
        assert_eq!(G2Point::from_bytes(&b2), Err(EncodingError::NonCanonical));
    }

    /// Smallest x giving an on-curve G1 point outside the subgroup.
    fn non_subgroup_g1() -> [u8; 48] {
        for x in 0u8..=255 {
            let mut b = [0u8; 48];
            b[47] = x;
            b[0] |= FLAG_COMPRESSED;
            if let Some(p) = Option::<G1Affine>::from(G1Affine::from_compressed_unchecked(&b)) {
                if !bool::from(p.is_torsion_free()) {
                    return b;
                }
            }
        }
        unreachable!("the cofactor makes almost every curve point non-torsion-free")
    }

    #[test]
    fn decoding_distinguishes_error_cases() {
        assert_eq!(G1Point::from_bytes(&non_subgroup_g1()), Err(EncodingError::WrongSubgroup));
        // x = 0 gives y^2 = 4, which is a square, so search for an x with no point
        let off = (1u8..=255)
            .map(|x| {
                let mut b = [0u8; 48];
                b[47] = x;
                b[0] |= FLAG_COMPRESSED;
                b
            })
            .find(|b| Option::<G1Affine>::from(G1Affine::from_compressed_unchecked(b)).is_none())
            .unwrap();
        assert_eq!(G1Point::from_bytes(&off), Err(EncodingError::OffCurve));
        assert!(matches!(Element::from_bytes(&[0u8; 50]), Err(EncodingError::WrongLength { actual: 50, .. })));
    }

    #[test]
    fn pairing_bilinear_and_nondegenerate() {
        let g1 = G1Point::generator();
        let g2 = G2Point::generator();
        let base = pairing(&g2, &g1);
        assert!(!base.is_identity());
        assert!(pairing(&g2, &G1Point::identity()).is_identity());
        assert_eq!(pairing(&(g2 + g2), &g1), base * base);
        let mut r = rng(5);
        for _ in 0..3 {
            let (a, b) = (Scalar::random(&mut r), Scalar::random(&mut r));
            assert_eq!(pairing(&(g2 * a), &(g1 * b)), base.pow(&(a * b)));
        }
        // order n: base^(n-1) · base == 1
        assert!((base.pow(&(-Scalar::one())) * base).is_identity());
    }

    #[test]
    fn pairing_product_matches_direct_pairings() {
        let a = Scalar::from_u64(5);
        let p = G1Point::generator() * a;
        let q = G2Point::generator();
        assert!(pairing_product_is_identity(&[(&q, &p), (&(q * a), &-G1Point::generator())]));
        assert!(!pairing_product_is_identity(&[(&q, &p), (&q, &-G1Point::generator())]));
    }

    #[test]
    fn hash_to_g1_deterministic() {
        let a = hash_to_g1(DOMAIN_TAG, b"abc");
        assert_eq!(a, hash_to_g1(DOMAIN_TAG, b"abc"));
        assert_ne!(a, hash_to_g1(DOMAIN_TAG, b"abcd"));
        assert_ne!(a, hash_to_g1(b"OTHER", b"abc"));
    }
}
