use nanosim::netlist::parse_value;
use nanosim::Chirality;

pub fn parse_number(s: &str) -> Result<f64, String> {
    parse_value(s.trim()).ok_or_else(|| format!("`{s}` is not a number"))
}

pub fn parse_chirality(s: &str) -> Result<Chirality, String> {
    let (n, m) = s
        .split_once(',')
        .ok_or_else(|| format!("chirality `{s}` must look like `19,0`"))?;
    let n: u32 = n.trim().parse().map_err(|_| format!("bad n in `{s}`"))?;
    let m: u32 = m.trim().parse().map_err(|_| format!("bad m in `{s}`"))?;
    let c = Chirality::new(n, m).map_err(|e| e.to_string())?;
    if !c.is_semiconducting() {
        return Err(format!("chirality {c} is metallic"));
    }
    Ok(c)
}

/// Points of a parsed `start:stop:step` range.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

pub fn parse_axis(s: &str) -> Result<Axis, String> {
    parse_range(s).map(Axis)
}

/// `start:stop:step`, stop included when it lies within half a step of the
/// grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("range `{s}` must be start:stop:step"));
    };
    let (start, stop, step) = (
        parse_number(start)?,
        parse_number(stop)?,
        parse_number(step)?,
    );
    if !(step > 0.0) || stop < start {
        return Err(format!("range `{s}` needs step > 0 and stop >= start"));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize;
    if count > 10_000 {
        return Err(format!("range `{s}` has too many points"));
    }
    Ok((0..=count)
        .map(|k| {
            let x = start + k as f64 * step;
            // Snap 0.7999999999 to 0.8 so axes print cleanly.
            (x * 1e9).round() / 1e9
        })
        .collect())
}
