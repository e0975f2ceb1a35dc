//! SPICE numeric literals with SI scale suffixes.

/// Parses `1k`, `2.5meg`, `10fF`, `1e-12`, ... Trailing letters after a
/// recognised suffix are ignored, as in SPICE (`1pF` is `1p`).
pub fn parse_value(token: &str) -> Option<f64> {
    let token = token.trim();
    let bytes = token.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let mantissa_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    let digits = &token[mantissa_start..i];
    if digits.is_empty() || digits == "." {
        return None;
    }
    // exponent only if followed by an integer
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_digits = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_digits {
            i = j;
        }
    }
    let number: f64 = token[..i].parse().ok()?;
    let rest = token[i..].to_ascii_lowercase();
    let scale = suffix_scale(&rest)?;
    let v = number * scale;
    v.is_finite().then_some(v)
}

fn suffix_scale(rest: &str) -> Option<f64> {
    if rest.is_empty() {
        return Some(1.0);
    }
    if !rest.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    if rest.starts_with("meg") {
        return Some(1e6);
    }
    if rest.starts_with("mil") {
        return Some(25.4e-6);
    }
    let scale = match rest.as_bytes()[0] {
        b't' => 1e12,
        b'g' => 1e9,
        b'k' => 1e3,
        b'm' => 1e-3,
        b'u' => 1e-6,
        b'n' => 1e-9,
        b'p' => 1e-12,
        b'f' => 1e-15,
        b'a' => 1e-18,
        // unit letters without scale (`v`, `s`, `ohm`, ...)
        _ => 1.0,
    };
    Some(scale)
}

/// Shortest exponent form that parses back to the identical f64.
pub fn format_value(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_value("1k"), Some(1e3));
        assert_eq!(parse_value("1f"), Some(1e-15));
        assert_eq!(parse_value("10fF"), Some(10.0 * 1e-15));
        assert_eq!(parse_value("2.5meg"), Some(2.5e6));
        assert_eq!(parse_value("3m"), Some(3e-3));
        assert_eq!(parse_value("0.9"), Some(0.9));
        assert_eq!(parse_value("0.9v"), Some(0.9));
        assert_eq!(parse_value("1e-12"), Some(1e-12));
        assert_eq!(parse_value("-2u"), Some(-2e-6));
        assert_eq!(parse_value(".5n"), Some(0.5e-9));
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_value("abc"), None);
        assert_eq!(parse_value(""), None);
        assert_eq!(parse_value("1k2"), None);
        assert_eq!(parse_value("."), None);
    }

    #[test]
    fn format_round_trips() {
        for v in [0.9, 1e-15, 1234.5678, 2.0e-11, 0.65] {
            assert_eq!(parse_value(&format_value(v)), Some(v));
        }
    }
}
