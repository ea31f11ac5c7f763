//! Numeric literals with SPICE engineering suffixes.

/// Parses `1k`, `2.5meg`, `10fF`, `4e-18`. The suffix is folded into the
/// decimal exponent before conversion so scaling is exact. Trailing unit
/// letters after the suffix are ignored.
pub fn parse_value(token: &str) -> Option<f64> {
    let s = token.trim().to_ascii_lowercase();
    let bytes = s.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut n_digits = i - digits_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        n_digits += i - frac_start;
    }
    if n_digits == 0 {
        return None;
    }
    let mantissa_end = i;
    let mut exponent: i64 = 0;
    if i < bytes.len() && bytes[i] == b'e' {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_digits = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_digits {
            exponent = s[i + 1..j].parse().ok()?;
            i = j;
        }
    }
    let rest = &s[i..];
    let (scale, unit) = if let Some(unit) = rest.strip_prefix("meg") {
        (6, unit)
    } else {
        match rest.chars().next() {
            None => (0, ""),
            Some(c) => {
                let scale = match c {
                    'f' => -15,
                    'p' => -12,
                    'n' => -9,
                    'u' => -6,
                    'm' => -3,
                    'k' => 3,
                    'g' => 9,
                    't' => 12,
                    _ => 0,
                };
                if scale == 0 {
                    (0, rest)
                } else {
                    (scale, &rest[1..])
                }
            }
        }
    };
    if !unit.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let literal = format!("{}e{}", &s[..mantissa_end], exponent.checked_add(scale)?);
    let v: f64 = literal.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Shortest round-tripping text; exponent form outside `[1e-3, 1e6)`.
pub fn format_value(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if (1e-3..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
