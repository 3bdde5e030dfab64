//! Argument value parsers.

use std::ops::RangeInclusive;

use num_complex::Complex;
use zp_core::{Mp, PrecisionContext, Real};

/// One real component: a decimal, `p/q`, `sqrt(n)`, `sqrt(n)/q`, or a sum
/// or difference of two such terms (`1/2+sqrt(3)/2`).
pub fn parse_real(s: &str, ctx: &PrecisionContext) -> Result<Mp, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".into());
    }
    // split at a top-level + or − that is not a leading sign or an exponent sign
    let bytes = s.as_bytes();
    for i in (1..bytes.len()).rev() {
        let c = bytes[i];
        let prev = bytes[i - 1];
        if (c == b'+' || c == b'-') && prev != b'e' && prev != b'E' && prev != b'(' {
            let left = parse_real(&s[..i], ctx)?;
            let right = parse_term(&s[i + 1..], ctx)?;
            return Ok(if c == b'+' { left + right } else { left - right });
        }
    }
    parse_term(s, ctx)
}

fn parse_term(s: &str, ctx: &PrecisionContext) -> Result<Mp, String> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('-') {
        return parse_term(rest, ctx).map(|x| -x);
    }
    if let Some(rest) = s.strip_prefix('+') {
        return parse_term(rest, ctx);
    }
    let (num, den) = match s.rsplit_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (s, None),
    };
    let n = if let Some(inner) = num.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let v = Mp::from_decimal(inner, ctx.bits).ok_or_else(|| format!("bad number `{inner}`"))?;
        if v.to_f64() < 0.0 {
            return Err(format!("sqrt of negative number `{inner}`"));
        }
        v.sqrt()
    } else {
        Mp::from_decimal(num, ctx.bits).ok_or_else(|| format!("bad number `{num}`"))?
    };
    match den {
        Some(d) => {
            let d = Mp::from_decimal(d, ctx.bits).ok_or_else(|| format!("bad denominator `{d}`"))?;
            if d.to_f64() == 0.0 {
                return Err("division by zero".into());
            }
            Ok(n / d)
        }
        None => Ok(n),
    }
}

/// `re,im`.
pub fn parse_complex(s: &str, ctx: &PrecisionContext) -> Result<Complex<Mp>, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    Ok(Complex::new(parse_real(re, ctx)?, parse_real(im, ctx)?))
}

/// `2..5`, `2,3,7` or `4`.
pub fn parse_levels(s: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let r: RangeInclusive<u32> = a.trim().parse().map_err(|_| format!("bad level `{a}`"))?
                ..=b.trim().parse().map_err(|_| format!("bad level `{b}`"))?;
            out.extend(r);
        } else {
            out.push(part.parse().map_err(|_| format!("bad level `{part}`"))?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err("levels must be positive".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `all`, or `1-2,1-3`.
pub fn parse_pairs(s: &str) -> Result<Option<Vec<(usize, usize)>>, String> {
    if s.trim() == "all" {
        return Ok(None);
    }
    s.split(',')
        .map(|p| {
            let (a, b) = p.trim().split_once('-').ok_or_else(|| format!("expected `a-b`, got `{p}`"))?;
            let (a, b): (usize, usize) =
                (a.parse().map_err(|_| format!("bad index `{a}`"))?, b.parse().map_err(|_| format!("bad index `{b}`"))?);
            Ok(if a < b { (a, b) } else { (b, a) })
        })
        .collect::<Result<Vec<_>, String>>()
        .map(Some)
}
