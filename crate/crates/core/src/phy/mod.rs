//! Bit-level transmission stack and exact bit accounting.

pub mod channel;
pub mod frame;
pub mod huffman;
pub mod ldpc;
pub mod link;

pub use channel::{hard_decision, transmit, AwgnChannel, ChannelConfig, Transmission};
pub use frame::{bits_for, hamming_distance, BitFrame, Direction, Scheme};
pub use huffman::HuffmanCodebook;
pub use ldpc::{BlockDecode, LdpcCode, LdpcParams};
pub use link::{LinkOutcome, Retransmission, TraditionalLink};
