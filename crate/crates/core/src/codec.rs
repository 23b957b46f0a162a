//! base64url (unpadded) text encoding used by every wire format, plus the
//! serde glue that lets group elements appear directly in JSON.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::group::{EncodingError, G1Point, G2Point, Scalar};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("invalid base64url: {0}")]
    Base64(#[from] base64::DecodeError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
}

pub fn encode(bytes: impl AsRef<[u8]>) -> String {
    URL_SAFE_NO_PAD.encode(bytes)
}

pub fn decode(text: &str) -> Result<Vec<u8>, CodecError> {
    Ok(URL_SAFE_NO_PAD.decode(text.trim())?)
}

pub fn decode_array<const N: usize>(text: &str) -> Result<[u8; N], CodecError> {
    let v = decode(text)?;
    v.as_slice().try_into().map_err(|_| CodecError::Length { expected: N, actual: v.len() })
}

macro_rules! serde_via_base64 {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&encode(self.to_bytes()))
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                let bytes = decode(&text).map_err(D::Error::custom)?;
                <$ty>::from_bytes(&bytes).map_err(D::Error::custom)
            }
        }
    };
}

serde_via_base64!(Scalar);
serde_via_base64!(G1Point);
serde_via_base64!(G2Point);

/// serde adapter for fixed-size byte arrays.
pub mod b64_array {
    use super::*;

    pub fn serialize<S: Serializer, const N: usize>(v: &[u8; N], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(d: D) -> Result<[u8; N], D::Error> {
        let text = String::deserialize(d)?;
        decode_array(&text).map_err(D::Error::custom)
    }
}

/// serde adapter for variable-length byte strings.
pub mod b64_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        decode(&text).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unpadded_url_alphabet() {
        assert_eq!(encode([0xfb, 0xff]), "-_8");
        assert_eq!(decode("-_8").unwrap(), vec![0xfb, 0xff]);
        assert!(decode("-_8=").is_err());
    }

    #[test]
    fn points_roundtrip_through_json() {
        let p = G2Point::generator() * Scalar::from_u64(42);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json.len(), 128 + 2);
        let back: G2Point = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let err = serde_json::from_str::<G1Point>(&json).unwrap_err();
        assert!(err.to_string().contains("wrong encoding length"));
    }
}
