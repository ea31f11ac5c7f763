use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{pdp, MeasureError};

/// Values on a VDD x temperature grid, indexed `[vdd][temp]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub vdd_axis: Vec<f64>,
    pub temp_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn axis_index(axis: &[f64], x: f64) -> Option<usize> {
    axis.iter()
        .position(|&a| (a - x).abs() <= 1e-9 * a.abs().max(1.0))
}

impl Grid {
    pub fn get(&self, vdd: f64, temp_c: f64) -> Option<f64> {
        Some(self.values[axis_index(&self.vdd_axis, vdd)?][axis_index(&self.temp_axis, temp_c)?])
    }
}

/// Published power, delay and PDP tables.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureTables {
    pub power: Grid,
    pub delay: Grid,
    pub pdp: Grid,
}

#[derive(Debug, Deserialize)]
struct Row {
    table: String,
    vdd_v: f64,
    temp_c: f64,
    value: f64,
}

impl FixtureTables {
    /// Largest `|pdp - power * delay| / pdp` over the grid.
    pub fn max_pdp_relative_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, row) in self.pdp.values.iter().enumerate() {
            for (j, &table) in row.iter().enumerate() {
                let product = pdp(self.power.values[i][j], self.delay.values[i][j]);
                worst = worst.max((table - product).abs() / table.abs());
            }
        }
        worst
    }
}

fn malformed(msg: impl Into<String>) -> MeasureError {
    MeasureError::Invalid(format!("malformed fixture: {}", msg.into()))
}

/// Reads the `table,vdd_V,temp_C,value` CSV.
pub fn parse_fixture_tables<R: Read>(reader: R) -> Result<FixtureTables, MeasureError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let expected = ["table", "vdd_V", "temp_C", "value"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(malformed(format!(
            "header {:?}, expected {expected:?}",
            headers
        )));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let row: Row = record
            .deserialize(None)
            .map_err(|e| malformed(format!("{e} in {:?}", record)))?;
        if !(row.value.is_finite() && row.vdd_v.is_finite() && row.temp_c.is_finite()) {
            return Err(malformed(format!("non-finite entry {record:?}")));
        }
        rows.push(row);
    }

    let mut vdd_axis: Vec<f64> = Vec::new();
    let mut temp_axis: Vec<f64> = Vec::new();
    for r in &rows {
        if axis_index(&vdd_axis, r.vdd_v).is_none() {
            vdd_axis.push(r.vdd_v);
        }
        if axis_index(&temp_axis, r.temp_c).is_none() {
            temp_axis.push(r.temp_c);
        }
    }
    vdd_axis.sort_by(f64::total_cmp);
    temp_axis.sort_by(f64::total_cmp);

    let grid = |name: &str| -> Result<Grid, MeasureError> {
        let mut values = vec![vec![f64::NAN; temp_axis.len()]; vdd_axis.len()];
        for r in rows.iter().filter(|r| r.table == name) {
            let (i, j) = (
                axis_index(&vdd_axis, r.vdd_v).expect("axis built from rows"),
                axis_index(&temp_axis, r.temp_c).expect("axis built from rows"),
            );
            if !values[i][j].is_nan() {
                return Err(malformed(format!(
                    "duplicate {name} cell ({}, {})",
                    r.vdd_v, r.temp_c
                )));
            }
            values[i][j] = r.value;
        }
        if values.iter().flatten().any(|v| v.is_nan()) {
            return Err(malformed(format!("table `{name}` is not fully populated")));
        }
        Ok(Grid {
            vdd_axis: vdd_axis.clone(),
            temp_axis: temp_axis.clone(),
            values,
        })
    };
    if let Some(r) = rows
        .iter()
        .find(|r| !matches!(r.table.as_str(), "power" | "delay" | "pdp"))
    {
        return Err(malformed(format!("unknown table `{}`", r.table)));
    }
    Ok(FixtureTables {
        power: grid("power")?,
        delay: grid("delay")?,
        pdp: grid("pdp")?,
    })
}

pub fn load_fixture_tables(path: impl AsRef<Path>) -> Result<FixtureTables, MeasureError> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| malformed(format!("{}: {e}", path.display())))?;
    parse_fixture_tables(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_missing_cells() {
        let text = "table,vdd_V,temp_C,value\npower,0.7,0,1\ndelay,0.7,0,1\n";
        assert!(parse_fixture_tables(text.as_bytes()).is_err());
        let text = "table,vdd_V,temp_C,value\npower,0.7,0,1\ndelay,0.7,0,2\npdp,0.7,0,2\n";
        let t = parse_fixture_tables(text.as_bytes()).unwrap();
        assert_eq!(t.max_pdp_relative_error(), 0.0);
        assert!(parse_fixture_tables("a,b\n1,2\n".as_bytes()).is_err());
    }
}
