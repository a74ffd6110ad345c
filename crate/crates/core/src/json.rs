//! JSON output with every binary64 written as 17 significant decimal digits.
//!
//! 17 significant digits identify a binary64 value uniquely, so parsing the
//! output reproduces the in-memory numbers bit for bit, and re-serializing
//! the parsed document reproduces the original bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::Result;

fn write_sig17<W: ?Sized + io::Write>(writer: &mut W, value: f64) -> io::Result<()> {
    if value.is_finite() {
        write!(writer, "{value:.16e}")
    } else {
        writer.write_all(b"null")
    }
}

/// Single-line formatter (used for JSON-lines output).
#[derive(Debug, Default, Clone, Copy)]
pub struct Sig17Compact;

impl Formatter for Sig17Compact {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_sig17(writer, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_sig17(writer, f64::from(value))
    }
}

/// Indented formatter (used for reports).
#[derive(Debug, Default)]
pub struct Sig17Pretty<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident ( $($arg:ident : $ty:ty),* );)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for Sig17Pretty<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write_sig17(writer, value)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write_sig17(writer, f64::from(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

pub fn to_writer_compact<W: io::Write, T: ?Sized + Serialize>(writer: W, value: &T) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, Sig17Compact);
    value.serialize(&mut ser)?;
    Ok(())
}

pub fn to_string_compact<T: ?Sized + Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    to_writer_compact(&mut buf, value)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn to_string_pretty<T: ?Sized + Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17Pretty::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(to_string_compact(&[0.1f64, -2.0, 1e-300]).unwrap(),
            "[1.0000000000000001e-1,-2.0000000000000000e0,1.0000000000000000e-300]");
        assert_eq!(to_string_compact(&f64::NAN).unwrap(), "null");
    }

    #[test]
    fn pretty_matches_compact_after_parse() {
        let v = serde_json::json!({"a": [1.5, 2.25], "b": {"c": 3.0}});
        let pretty = to_string_pretty(&v).unwrap();
        assert!(pretty.contains('\n'));
        let back: serde_json::Value = serde_json::from_str(&pretty).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let text = to_string_compact(&x).unwrap();
            let back: f64 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
            prop_assert_eq!(to_string_compact(&back).unwrap(), text);
        }
    }
}
