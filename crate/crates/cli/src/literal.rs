//! Complex literals of the form `a`, `bi`, `a+bi`, `a-bi` with optional
//! scientific notation (`1e-3-2.5E+2i`). Parsing goes through
//! `f64::from_str`, which is locale-independent.

use num_complex::Complex64 as C64;

pub fn parse_complex(text: &str) -> Result<C64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    let number = |part: &str| -> Result<f64, String> {
        let v: f64 = part
            .parse()
            .map_err(|_| format!("invalid number {part:?} in complex literal {text:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite component in complex literal {text:?}"))
        }
    };
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return Ok(C64::new(number(&s)?, 0.0));
    };
    // the real/imaginary split is the last sign that is not the leading sign
    // and not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (number(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => number(other)?,
    };
    Ok(C64::new(re, im))
}

/// Inverse of [`parse_complex`] with 17 significant digits.
pub fn format_complex(z: C64) -> String {
    format!(
        "{:.17e}{}{:.17e}i",
        z.re,
        if z.im.is_sign_negative() { "" } else { "+" },
        z.im
    )
}
