use crate::error::{CliError, Result};

/// Slack for including `stop` in a `start:stop:step` range.
pub const STOP_TOLERANCE: f64 = 1e-12;
const MAX_POINTS: usize = 1_000_000;

/// Parses `a,b,c` or an inclusive `start:stop:step` range.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::config("empty grid"));
    }
    let values = if text.contains(':') {
        parse_range(text)?
    } else {
        text.split(',').map(|s| parse_number(s, text)).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(CliError::config(format!("grid `{text}` has no points")));
    }
    Ok(values)
}

fn parse_number(s: &str, text: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::config(format!("bad number `{}` in grid `{text}`", s.trim())))?;
    if !v.is_finite() {
        return Err(CliError::config(format!("non-finite value in grid `{text}`")));
    }
    Ok(v)
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(CliError::config(format!("range `{text}` must be start:stop:step")));
    };
    let (start, stop, step) = (parse_number(start, text)?, parse_number(stop, text)?, parse_number(step, text)?);
    if step <= 0.0 {
        return Err(CliError::config(format!("range `{text}` needs a positive step")));
    }
    if stop < start {
        return Err(CliError::config(format!("range `{text}` ends before it starts")));
    }
    let count = ((stop - start) / step + STOP_TOLERANCE / step).floor();
    if count >= MAX_POINTS as f64 {
        return Err(CliError::config(format!("range `{text}` has more than {MAX_POINTS} points")));
    }
    Ok((0..=count as usize).map(|i| start + i as f64 * step).collect())
}

/// The single value of a grid that must not sweep.
pub fn scalar(name: &str, grid: &[f64]) -> Result<f64> {
    match grid {
        [v] => Ok(*v),
        _ => Err(CliError::config(format!("--{name} takes a single value for this command"))),
    }
}
