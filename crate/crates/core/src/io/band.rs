//! Column text export of quantile bands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::IoError;
use crate::quantile::QuantileBand;
use crate::solver::Grid;

/// Renders a band as `# key = value` header lines followed by
/// `x y cdf in_band` rows. Only in-band cells are listed unless `all_cells`.
pub fn band_text(band: &QuantileBand, grid: &Grid, config_hash: &str, all_cells: bool) -> Result<String, IoError> {
    if band.mask.len() != grid.n_cells() || band.cdf.len() != grid.n_cells() {
        return Err(IoError::SizeMismatch {
            expected: grid.n_cells(),
            got: band.mask.len(),
        });
    }
    let mut out = String::new();
    let _ = writeln!(out, "# epsilon = {:?}", band.epsilon);
    let _ = writeln!(out, "# p = {:?}", band.p);
    let _ = writeln!(out, "# t = {:?}", band.t);
    let _ = writeln!(out, "# config_hash = {config_hash}");
    let _ = writeln!(out, "# cells = {}", grid.n_cells());
    let _ = writeln!(out, "# in_band = {}", band.count());
    let _ = writeln!(out, "# columns: x y cdf in_band");
    for c in 0..grid.n_cells() {
        if !all_cells && !band.mask[c] {
            continue;
        }
        let p = grid.center(c);
        let _ = writeln!(out, "{:?} {:?} {:?} {}", p[0], p[1], band.cdf[c], u8::from(band.mask[c]));
    }
    Ok(out)
}

pub fn export_band(path: &Path, band: &QuantileBand, grid: &Grid, config_hash: &str, all_cells: bool) -> Result<(), IoError> {
    fs::write(path, band_text(band, grid, config_hash, all_cells)?)?;
    Ok(())
}
