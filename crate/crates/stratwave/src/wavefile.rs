//! CSV persistence of wave fields.

use std::path::Path;

use stratwave_core::grid::StripGrid;
use stratwave_core::wave::WaveField;

use crate::error::CliError;
use crate::output::{fmt_number, Table};

/// One row per node, bed row first; values print in shortest round-trip form
/// so reloading is exact.
pub fn wave_table(w: &WaveField) -> Table {
    let g = w.grid();
    let mut table = Table::new(&["i", "j", "xi [-]", "zeta [-]", "w [-]"])
        .meta("kind", "wave")
        .meta("lambda", fmt_number(w.lambda))
        .meta("density_id", format!("{:016x}", w.density_id))
        .meta("nx", g.nx())
        .meta("nz", g.nz())
        .meta("half_period", fmt_number(g.half_period()))
        .meta("penalization", w.penalization.map_or("none".to_string(), fmt_number));
    for j in 0..g.rows().len() {
        for i in 0..g.nx() {
            table.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_number(g.xi(i)),
                fmt_number(g.rows()[j]),
                fmt_number(w.at(i, j)),
            ]);
        }
    }
    table
}

fn meta<T: std::str::FromStr>(table: &Table, key: &str, path: &Path) -> Result<T, CliError> {
    table
        .get_meta(key)
        .ok_or_else(|| CliError::format(path, format!("missing metadata {key}")))?
        .parse()
        .map_err(|_| CliError::format(path, format!("unreadable metadata {key}")))
}

/// Rebuilds a field written by [`wave_table`]; `interfaces` are the rows
/// the grid must contain.
pub fn wave_from_table(table: &Table, interfaces: &[f64], path: &Path) -> Result<WaveField, CliError> {
    if table.get_meta("kind") != Some("wave") {
        return Err(CliError::format(path, "not a wave file"));
    }
    let nx: usize = meta(table, "nx", path)?;
    let nz: usize = meta(table, "nz", path)?;
    let half_period: f64 = meta(table, "half_period", path)?;
    let lambda: f64 = meta(table, "lambda", path)?;
    let id_text: String = meta(table, "density_id", path)?;
    let density_id = u64::from_str_radix(&id_text, 16).map_err(|_| CliError::format(path, "unreadable density_id"))?;
    let penalization = match table.get_meta("penalization") {
        None | Some("none") => None,
        Some(text) => Some(text.parse().map_err(|_| CliError::format(path, "unreadable penalization"))?),
    };
    if table.rows.len() != nx * (nz + 1) {
        return Err(CliError::format(path, format!("expected {} rows, found {}", nx * (nz + 1), table.rows.len())));
    }
    let index = |name: &str| table.column(name).ok_or_else(|| CliError::format(path, format!("missing column {name}")));
    let (ci, cj, cz, cw) = (index("i")?, index("j")?, index("zeta [-]")?, index("w [-]")?);
    let number = |text: &str| text.parse::<f64>().map_err(|_| CliError::format(path, format!("bad number {text:?}")));
    let mut rows = vec![f64::NAN; nz + 1];
    let mut values = vec![f64::NAN; nx * (nz + 1)];
    for record in &table.rows {
        let i: usize = record[ci].parse().map_err(|_| CliError::format(path, "bad column index"))?;
        let j: usize = record[cj].parse().map_err(|_| CliError::format(path, "bad row index"))?;
        if i >= nx || j > nz {
            return Err(CliError::format(path, format!("node ({i}, {j}) outside the grid")));
        }
        rows[j] = number(&record[cz])?;
        values[j * nx + i] = number(&record[cw])?;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(CliError::format(path, "missing nodes"));
    }
    let grid = StripGrid::new(nx, half_period, rows, interfaces)?;
    let mut w = WaveField::from_values(grid, values, lambda, density_id)?;
    w.penalization = penalization;
    Ok(w)
}

pub fn load_wave(path: &Path, interfaces: &[f64]) -> Result<WaveField, CliError> {
    wave_from_table(&Table::read(path)?, interfaces, path)
}
