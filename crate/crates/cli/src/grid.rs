//! Grid-flag grammar: `start..end[:step]` ranges (inclusive, default
//! step 0.1) or comma-separated lists.

/// Parse a value grid. Values are snapped to 10 decimal places so ranges
/// like `0..1:0.1` produce the same floats as hand-written lists.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    if let Some((range, step)) = split_range(text)? {
        let (start, end) = range;
        if step <= 0.0 {
            return Err(format!("step must be positive in {text:?}"));
        }
        if end < start {
            return Err(format!("empty range {text:?}"));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| snap(start + i as f64 * step)).collect());
    }
    let values: Result<Vec<f64>, _> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map(snap))
        .collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        Ok(_) => Err("empty list".into()),
        Err(e) => Err(format!("cannot parse {text:?}: {e}")),
    }
}

fn split_range(text: &str) -> Result<Option<((f64, f64), f64)>, String> {
    let Some((start, rest)) = text.split_once("..") else {
        return Ok(None);
    };
    let (end, step) = match rest.split_once(':') {
        Some((end, step)) => (
            end,
            step.parse::<f64>()
                .map_err(|e| format!("bad step in {text:?}: {e}"))?,
        ),
        None => (rest, 0.1),
    };
    let start: f64 = start
        .parse()
        .map_err(|e| format!("bad range start in {text:?}: {e}"))?;
    let end: f64 = end
        .parse()
        .map_err(|e| format!("bad range end in {text:?}: {e}"))?;
    Ok(Some(((start, end), step)))
}

fn snap(v: f64) -> f64 {
    (v * 1e10).round() / 1e10
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_with_default_step() {
        let g = parse_grid("0..1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
    }

    #[test]
    fn range_with_explicit_step() {
        let g = parse_grid("0.5..0.9:0.2").unwrap();
        assert_eq!(g, vec![0.5, 0.7, 0.9]);
    }

    #[test]
    fn comma_list() {
        let g = parse_grid("0.65,0.75,0.85,0.95").unwrap();
        assert_eq!(g, vec![0.65, 0.75, 0.85, 0.95]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
    }

    #[test]
    fn bad_inputs() {
        assert!(parse_grid("1..0").is_err());
        assert!(parse_grid("0..1:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
