//! Artifact writing. Files go through an [`Outputs`] guard that deletes
//! everything it wrote unless the command commits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use magnetovar_core::grid::{CellVectorField, DomainMask};

use crate::error::CliError;

/// 17 significant digits, so tables round-trip exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with a fixed header; cells are written verbatim.
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { text: header.join(",") + "\n", width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    created_dir: bool,
    committed: bool,
}

impl Outputs {
    /// Creates the directory if needed and proves it writable, so that an
    /// unusable destination fails before any computation.
    pub fn prepare(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let probe = dir.join(".magnetovar-write-probe");
        fs::write(&probe, b"").map_err(|e| CliError::io(dir, e))?;
        fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new(), created_dir, committed: false })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Keeps the written files.
    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            // only succeeds if nothing else ended up in there
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Legacy structured-points dump of a cell field over the unpadded region,
/// with the body mask as a second array. Points sit at cell centers and
/// x varies fastest. Header:
///
/// ```text
/// # vtk DataFile Version 3.0
/// magnetovar <name>
/// ASCII
/// DATASET STRUCTURED_POINTS
/// DIMENSIONS <nx> <ny> <nz>
/// ORIGIN <x0> <y0> <z0>
/// SPACING <h> <h> <h>
/// POINT_DATA <nx*ny*nz>
/// VECTORS <name> double
/// ```
///
/// followed by one `vx vy vz` line per point, then `SCALARS mask int 1`,
/// `LOOKUP_TABLE default` and one 0/1 per point.
pub fn vtk_cells(name: &str, field: &CellVectorField, mask: &DomainMask) -> String {
    let g = field.grid();
    let [nx, ny, nz] = g.n;
    let p = g.pad;
    let o = g.cell_center([p, p, p]);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "magnetovar {name}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
    let _ = writeln!(s, "ORIGIN {} {} {}", num(o[0]), num(o[1]), num(o[2]));
    let _ = writeln!(s, "SPACING {} {} {}", num(g.h), num(g.h), num(g.h));
    let _ = writeln!(s, "POINT_DATA {}", nx * ny * nz);
    let _ = writeln!(s, "VECTORS {name} double");
    let each = |f: &mut dyn FnMut([usize; 3])| {
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    f([p + i, p + j, p + k]);
                }
            }
        }
    };
    each(&mut |idx| {
        let v = field.at(idx);
        let _ = writeln!(s, "{} {} {}", num(v[0]), num(v[1]), num(v[2]));
    });
    let _ = writeln!(s, "SCALARS mask int 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    each(&mut |idx| {
        let _ = writeln!(s, "{}", u8::from(mask.contains(idx)));
    });
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use magnetovar_core::geometry::Geometry;
    use magnetovar_core::grid::{build_mask, GridSpec};

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn vtk_header_and_sizes() {
        let g = GridSpec::new([4, 2, 2], 0.5, [-1.0, -0.5, -0.5], 1).unwrap();
        let mask = build_mask(&Geometry::ball(0.4), &g).unwrap();
        let m = CellVectorField::from_fn(&g, |_| [0.0, 0.0, 1.0]);
        let text = vtk_cells("m", &m, &mask);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], "DIMENSIONS 4 2 2");
        assert_eq!(lines[5], format!("ORIGIN {} {} {}", num(-0.75), num(-0.25), num(-0.25)));
        assert_eq!(lines[7], "POINT_DATA 16");
        assert_eq!(lines.len(), 9 + 16 + 2 + 16);
        assert_eq!(lines[9], format!("{} {} {}", num(0.0), num(0.0), num(1.0)));
    }

    #[test]
    fn uncommitted_outputs_are_removed() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        {
            let mut o = Outputs::prepare(&dir).unwrap();
            o.write("a.csv", "x\n").unwrap();
            assert!(dir.join("a.csv").exists());
        }
        assert!(!dir.exists());
        let mut o = Outputs::prepare(&dir).unwrap();
        o.write("a.csv", "x\n").unwrap();
        o.commit();
        assert!(dir.join("a.csv").exists());
    }
}
