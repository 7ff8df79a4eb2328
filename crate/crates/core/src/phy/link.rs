//! The traditional stack: Huffman source coding, LDPC channel coding,
//! BPSK over AWGN, with optional chase-combining retransmission.

use serde::{Deserialize, Serialize};

use super::channel::{hard_decision, AwgnChannel, ChannelConfig};
use super::frame::hamming_distance;
use super::huffman::HuffmanCodebook;
use super::ldpc::LdpcCode;
use crate::error::Result;

/// Retransmission policy for the traditional stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Retransmission {
    /// One shot per block; decoding failures pass through.
    Off,
    /// Resend a block until its parity checks pass, summing the received
    /// samples of every copy before the hard decision.
    Chase { max_attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkOutcome {
    /// Decoded symbols, including any produced from padding bits.
    pub symbols: Vec<u16>,
    /// Huffman payload length before channel coding.
    pub payload_bits: usize,
    /// Every bit put on air, retransmissions included.
    pub air_bits: usize,
    /// Raw demodulation errors summed over all transmissions.
    pub channel_bit_errors: usize,
    pub blocks: usize,
    pub transmissions: usize,
    /// Blocks whose final decode did not satisfy all checks.
    pub failed_blocks: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TraditionalLink<'a> {
    pub codebook: &'a HuffmanCodebook,
    pub code: &'a LdpcCode,
}

impl<'a> TraditionalLink<'a> {
    pub fn new(codebook: &'a HuffmanCodebook, code: &'a LdpcCode) -> Self {
        TraditionalLink { codebook, code }
    }

    /// Coded length of `symbols` on a clean single-shot link.
    pub fn coded_len(&self, symbols: &[u16]) -> Result<usize> {
        let payload = self.codebook.encode(symbols)?.len();
        Ok(self.code.blocks_for(payload) * self.code.n())
    }

    /// Sends `symbols` and decodes up to `max_symbols` at the receiver.
    pub fn send(
        &self,
        symbols: &[u16],
        max_symbols: usize,
        cfg: ChannelConfig,
        policy: Retransmission,
    ) -> Result<LinkOutcome> {
        let payload = self.codebook.encode(symbols)?;
        let mut channel = AwgnChannel::new(cfg);
        let max_attempts = match policy {
            Retransmission::Off => 1,
            Retransmission::Chase { max_attempts } => max_attempts.max(1),
        };
        let n = self.code.n();
        let mut decoded_bits = Vec::with_capacity(payload.len());
        let mut out = LinkOutcome {
            symbols: Vec::new(),
            payload_bits: payload.len(),
            air_bits: 0,
            channel_bit_errors: 0,
            blocks: 0,
            transmissions: 0,
            failed_blocks: 0,
        };
        for chunk in payload.chunks(self.code.k()) {
            let codeword = self.code.encode(chunk);
            let mut combined = vec![0.0f64; n];
            let mut result = None;
            for _ in 0..max_attempts {
                let samples = channel.send_soft(&codeword);
                out.air_bits += n;
                out.transmissions += 1;
                out.channel_bit_errors += hamming_distance(&codeword, &hard_decision(&samples));
                for (acc, s) in combined.iter_mut().zip(&samples) {
                    *acc += s;
                }
                let d = self.code.decode(&hard_decision(&combined));
                let done = d.converged;
                result = Some(d);
                if done {
                    break;
                }
            }
            let d = result.expect("at least one attempt");
            if !d.converged {
                out.failed_blocks += 1;
            }
            out.blocks += 1;
            decoded_bits.extend(d.message);
        }
        out.symbols = self.codebook.decode_prefix(&decoded_bits, max_symbols).0;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::huffman::frequencies;
    use crate::phy::ldpc::LdpcParams;

    fn setup() -> (HuffmanCodebook, LdpcCode) {
        let freqs = frequencies((0..256u16).chain([0; 500]).chain([255; 300]));
        (
            HuffmanCodebook::build(&freqs).unwrap(),
            LdpcCode::regular(LdpcParams::default()).unwrap(),
        )
    }

    #[test]
    fn clean_link_is_exact() {
        let (cb, code) = setup();
        let link = TraditionalLink::new(&cb, &code);
        let symbols: Vec<u16> = (0..500).map(|i| (i * 37 % 256) as u16).collect();
        let out = link
            .send(&symbols, symbols.len(), ChannelConfig::new(100.0, 1), Retransmission::Off)
            .unwrap();
        assert_eq!(out.symbols, symbols);
        assert_eq!(out.air_bits, link.coded_len(&symbols).unwrap());
        assert_eq!(out.air_bits, 2 * out.payload_bits.div_ceil(48) * 48);
        assert_eq!(out.failed_blocks, 0);
    }

    #[test]
    fn chase_combining_recovers_at_zero_db() {
        let (cb, code) = setup();
        let link = TraditionalLink::new(&cb, &code);
        let symbols: Vec<u16> = (0..40).map(|i| (i * 11 % 256) as u16).collect();
        let cfg = ChannelConfig::new(0.0, 77);
        let out = link
            .send(&symbols, symbols.len(), cfg, Retransmission::Chase { max_attempts: 8 })
            .unwrap();
        assert_eq!(out.failed_blocks, 0);
        assert_eq!(out.symbols, symbols);
        assert!(out.transmissions > out.blocks);
        assert_eq!(out.air_bits, out.transmissions * 96);
    }
}
