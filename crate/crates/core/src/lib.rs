pub mod bench;
pub mod bls;
pub mod codec;
pub mod credential;
pub mod group;
pub mod harness;
pub mod presentation;
pub mod pvss;
pub mod revocation;
