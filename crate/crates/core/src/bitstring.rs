//! Computational-basis labels. Bit `q` of the integer is qubit `q`; strings put qubit 0 first.

use crate::error::{Error, Result};

pub fn format_bits(b: u64, n: usize) -> String {
    (0..n)
        .map(|q| if b >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bits(s: &str) -> Result<u64> {
    let s = s.trim();
    if s.len() > 64 {
        return Err(Error::parse("bitstring", format!("{} bits exceed 64", s.len())));
    }
    let mut b = 0u64;
    for (q, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => b |= 1 << q,
            other => {
                return Err(Error::parse(
                    "bitstring",
                    format!("unexpected character {other:?} in {s:?}"),
                ))
            }
        }
    }
    Ok(b)
}

/// Bits set at the listed positions.
pub fn from_positions(positions: &[usize]) -> u64 {
    positions.iter().fold(0, |acc, &q| acc | 1 << q)
}

pub fn parity(b: u64) -> bool {
    b.count_ones() % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_zero_is_leftmost() {
        assert_eq!(format_bits(0b0011, 4), "1100");
        assert_eq!(parse_bits("1100").unwrap(), 0b0011);
        assert!(parse_bits("10a").is_err());
    }
}
