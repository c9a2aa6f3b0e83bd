//! UTC timestamps with a canonical RFC 3339 rendering.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use time::format_description::well_known::Rfc3339;
use time::{OffsetDateTime, UtcOffset};

use crate::error::{Error, Result};

/// A UTC instant. Always rendered as `YYYY-MM-DDTHH:MM:SS[.fff]Z`; the
/// fractional part appears only when non-zero, with trailing zeros trimmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(OffsetDateTime);

impl Timestamp {
    /// Parses an RFC 3339 string. Any offset is accepted and normalized to UTC.
    pub fn parse(s: &str) -> Result<Self> {
        OffsetDateTime::parse(s, &Rfc3339)
            .map(|t| Timestamp(t.to_offset(UtcOffset::UTC)))
            .map_err(|_| Error::InvalidTimestamp(s.to_string()))
    }

    /// Years 0 to 9999 only, the range RFC 3339 can write.
    pub fn from_unix_seconds(secs: i64) -> Result<Self> {
        OffsetDateTime::from_unix_timestamp(secs)
            .ok()
            .filter(in_range)
            .map(Timestamp)
            .ok_or(Error::InvalidParam("unix timestamp out of range"))
    }

    pub fn unix_seconds(&self) -> i64 {
        self.0.unix_timestamp()
    }

    /// Signed difference `self - earlier` in seconds, including sub-second parts.
    pub fn seconds_since(&self, earlier: &Timestamp) -> f64 {
        let nanos = self.0.unix_timestamp_nanos() - earlier.0.unix_timestamp_nanos();
        nanos as f64 / 1e9
    }

    pub fn minutes_since(&self, earlier: &Timestamp) -> f64 {
        self.seconds_since(earlier) / 60.0
    }

    pub fn checked_plus_seconds(&self, secs: i64) -> Option<Self> {
        self.0
            .checked_add(time::Duration::seconds(secs))
            .filter(in_range)
            .map(Timestamp)
    }

    /// # Panics
    /// If the result falls outside years 0 to 9999.
    pub fn plus_seconds(&self, secs: i64) -> Self {
        self.checked_plus_seconds(secs).expect("timestamp out of range")
    }

    pub fn to_rfc3339(&self) -> String {
        let t = self.0;
        let mut out = format!(
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}",
            t.year(),
            u8::from(t.month()),
            t.day(),
            t.hour(),
            t.minute(),
            t.second()
        );
        let nanos = t.nanosecond();
        if nanos != 0 {
            let frac = format!("{nanos:09}");
            out.push('.');
            out.push_str(frac.trim_end_matches('0'));
        }
        out.push('Z');
        out
    }
}

fn in_range(t: &OffsetDateTime) -> bool {
    (0..=9999).contains(&t.year())
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_rfc3339())
    }
}

impl core::str::FromStr for Timestamp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Timestamp::parse(s)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Timestamp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_rfc3339())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Timestamp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Timestamp::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_rendering() {
        let t = Timestamp::parse("2025-10-04T14:00:00Z").unwrap();
        assert_eq!(t.to_rfc3339(), "2025-10-04T14:00:00Z");
        let t = Timestamp::parse("2025-10-04T10:00:00-04:00").unwrap();
        assert_eq!(t.to_rfc3339(), "2025-10-04T14:00:00Z");
        let t = Timestamp::parse("2025-10-04T14:00:00.500Z").unwrap();
        assert_eq!(t.to_rfc3339(), "2025-10-04T14:00:00.5Z");
    }

    #[test]
    fn rejects_garbage() {
        assert!(Timestamp::parse("yesterday").is_err());
        assert!(Timestamp::parse("2025-10-04 14:00").is_err());
    }

    #[test]
    fn differences() {
        let a = Timestamp::parse("2025-10-04T14:00:00Z").unwrap();
        let b = Timestamp::parse("2025-10-04T14:02:30Z").unwrap();
        assert_eq!(b.seconds_since(&a), 150.0);
        assert_eq!(b.minutes_since(&a), 2.5);
        assert_eq!(a.plus_seconds(150), b);
    }

    #[test]
    fn range_is_four_digit_years() {
        let end = Timestamp::parse("9999-12-31T23:59:59Z").unwrap();
        assert!(end.checked_plus_seconds(1).is_none());
        assert!(Timestamp::from_unix_seconds(-62_167_219_201).is_err());
        assert_eq!(Timestamp::from_unix_seconds(-62_167_219_200).unwrap().to_rfc3339(), "0000-01-01T00:00:00Z");
    }
}
