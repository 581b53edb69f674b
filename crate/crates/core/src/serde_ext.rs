//! Serde adapters for the sentinel encodings used in exported JSON.

/// Rounds to nine significant digits, the precision used for every exported
/// number.
pub(crate) fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// `+inf` (unbounded resolution) is written as `null` and read back as `+inf`.
pub(crate) mod pos_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(super::round_sig(*v))
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Infinite decibel sentinels are written as `null`.
pub(crate) mod db_as_null {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(super::round_sig(*v))
        } else {
            s.serialize_none()
        }
    }
}

pub(crate) mod sig9 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round_sig(*v))
    }
}

#[cfg(test)]
mod tests {
    use super::round_sig;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig(0.123456789123), 0.123456789);
        assert_eq!(round_sig(1172.8613123), 1172.86131);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::INFINITY).is_infinite());
    }
}
