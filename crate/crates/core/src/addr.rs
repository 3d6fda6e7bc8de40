//! 48-bit Bluetooth device addresses, the primary tracking key.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest value representable in 48 bits.
pub const BT_ADDRESS_MAX: u64 = (1 << 48) - 1;

/// A 48-bit Bluetooth device address.
///
/// The canonical text form is six uppercase two-hex-digit octets joined by
/// colons, e.g. `00:0C:25:14:67:1E`. Parsing accepts either case.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BtAddress(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddressError {
    /// Wrong octet count, non-hex characters, or wrong separators.
    #[error("malformed bluetooth address {input:?}: {reason}")]
    Malformed { input: String, reason: &'static str },
    /// A raw value that does not fit in 48 bits.
    #[error("value {0:#x} does not fit in 48 bits")]
    OutOfRange(u64),
}

impl BtAddress {
    /// Builds an address from a raw 48-bit value.
    pub fn from_u64(value: u64) -> Result<Self, AddressError> {
        if value > BT_ADDRESS_MAX {
            return Err(AddressError::OutOfRange(value));
        }
        Ok(BtAddress(value))
    }

    /// The raw 48-bit value.
    pub fn value(self) -> u64 {
        self.0
    }

    /// Parses the colon-separated hex form, case-insensitive.
    pub fn parse(s: &str) -> Result<Self, AddressError> {
        let malformed = |reason| AddressError::Malformed {
            input: s.to_string(),
            reason,
        };
        let octets: Vec<&str> = s.split(':').collect();
        if octets.len() != 6 {
            return Err(malformed("expected six colon-separated octets"));
        }
        let mut value: u64 = 0;
        for octet in octets {
            if octet.len() != 2 {
                return Err(malformed("each octet must be exactly two hex digits"));
            }
            let byte = u8::from_str_radix(octet, 16)
                .map_err(|_| malformed("octet contains non-hex characters"))?;
            value = (value << 8) | u64::from(byte);
        }
        Ok(BtAddress(value))
    }

    /// True when the text looks like an address (used to disambiguate
    /// name-vs-address target queries).
    pub fn looks_like_address(s: &str) -> bool {
        Self::parse(s).is_ok()
    }
}

impl fmt::Display for BtAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        write!(
            f,
            "{:02X}:{:02X}:{:02X}:{:02X}:{:02X}:{:02X}",
            (v >> 40) & 0xff,
            (v >> 32) & 0xff,
            (v >> 24) & 0xff,
            (v >> 16) & 0xff,
            (v >> 8) & 0xff,
            v & 0xff,
        )
    }
}

// Debug prints the canonical colon form; the raw integer is never useful in
// an assertion message.
impl fmt::Debug for BtAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for BtAddress {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BtAddress::parse(s)
    }
}
