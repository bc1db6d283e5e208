//! Secured CAN 2.0A communication built from a truncated Chaskey MAC and
//! AES-128 counter-mode encryption of the 64-bit Data field.

pub mod aes;
pub mod chaskey;
pub mod frame;
