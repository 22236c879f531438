//! Duration flags: `0`, `<n>h`, `<n>m`, `<n>s`, `inf`, or a bare number of
//! seconds.

pub fn parse_duration(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    let (num, scale) = match s.char_indices().last() {
        Some((i, 'h')) => (&s[..i], 3600.0),
        Some((i, 'm')) => (&s[..i], 60.0),
        Some((i, 's')) => (&s[..i], 1.0),
        _ => (s, 1.0),
    };
    let value: f64 = num
        .parse()
        .map_err(|_| format!("invalid duration {s:?} (expected 0, <n>h, <n>m, <n>s or inf)"))?;
    if !(value.is_finite() && value >= 0.0) {
        return Err(format!("duration must be non-negative, got {s:?}"));
    }
    Ok(value * scale)
}

pub fn parse_duration_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_duration).collect()
}
