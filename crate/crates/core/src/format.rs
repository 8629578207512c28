//! Locale-independent number formatting and complex-number parsing shared by
//! the CSV/JSON writers and the command line.

use crate::{Error, Result, C64};

/// Shortest round-trip representation of `x` (never more than 17 significant
/// digits). Values far from unity switch to exponent notation so that tiny
/// residuals stay short.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Parse a complex number written as `re`, `imi`, `re+imi` or `re-imi`
/// (`j` is accepted in place of `i`).
pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || Error::Parse(format!("invalid complex number {text:?}"));
    if s.is_empty() {
        return Err(err());
    }
    let body = match s.strip_suffix('i').or_else(|| s.strip_suffix('j')) {
        None => return s.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| err()),
        Some(body) => body,
    };
    // Split at the last sign that is not the leading sign or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let parse_im = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| err()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| err())?;
            let im = parse_im(&body[k..])?;
            Ok(C64::new(re, im))
        }
        None => Ok(C64::new(0.0, parse_im(body)?)),
    }
}

/// CSV text with a header row, optionally preceded by one `# ...` comment line.
pub fn csv_text<I>(comment: Option<&str>, header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = comment.map(|c| format!("# {c}\n")).unwrap_or_default().into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    drop(w);
    String::from_utf8(out).map_err(|e| Error::Parse(e.to_string()))
}

/// Inverse of [`parse_complex`] for display purposes.
pub fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        fmt_f64(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_f64(z.re), fmt_f64(-z.im))
    } else {
        format!("{}+{}i", fmt_f64(z.re), fmt_f64(z.im))
    }
}
