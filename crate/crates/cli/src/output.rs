//! Line-oriented `key value` output.

use std::fmt::Write as _;

use rarity_core::xprec::{LogMagnitude, Precision, XReal};

/// Accumulates `key value` lines under a `# stamp` header.
#[derive(Debug)]
pub struct Lines {
    text: String,
    precision: Precision,
    digits: usize,
}

impl Lines {
    pub fn new(stamp: &str, precision: Precision, digits: usize) -> Self {
        Lines {
            text: format!("# {stamp}\n"),
            precision,
            digits,
        }
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} {value}");
        self
    }

    /// A real number at full working precision.
    pub fn real(&mut self, key: &str, value: &XReal) -> &mut Self {
        let text = plain(value, self.precision);
        self.kv(key, text)
    }

    /// A probability in four lines: scientific form, mantissa, exact decimal
    /// exponent and the raw log10 at working precision.
    pub fn magnitude(&mut self, key: &str, m: &LogMagnitude) -> &mut Self {
        let sci = m.to_scientific(self.digits);
        match m.log10() {
            Some(log10) => {
                let log10 = plain(log10, self.precision);
                self.kv(key, &sci)
                    .kv(&format!("{key}_mantissa"), sci.mantissa())
                    .kv(&format!("{key}_exponent"), sci.exponent)
                    .kv(&format!("{key}_log10"), log10)
            }
            None => self
                .kv(key, 0)
                .kv(&format!("{key}_mantissa"), 0)
                .kv(&format!("{key}_exponent"), 0)
                .kv(&format!("{key}_log10"), "-inf"),
        }
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Positional decimal with as many significant digits as the precision.
pub fn plain(value: &XReal, precision: Precision) -> String {
    value.to_plain_string(precision.digits() as usize)
}
