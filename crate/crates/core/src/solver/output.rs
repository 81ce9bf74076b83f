//! CSV and legacy VTK writers.

use std::io::{self, Write};

use super::{PointEval, PredictionGrid, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRow {
    pub x: [f64; 3],
    pub u: [f64; 3],
    pub phi: f64,
    pub h: f64,
}

const AXES: [&str; 3] = ["x", "y", "z"];
const COMPONENTS: [&str; 3] = ["u", "v", "w"];

/// `x[,y[,z]],u[,v[,w]],phi,H`
pub fn write_fields<W: Write>(mut out: W, dim: usize, rows: &[FieldRow]) -> io::Result<()> {
    let header: Vec<&str> = AXES[..dim].iter().chain(&COMPONENTS[..dim]).copied().chain(["phi", "H"]).collect();
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let mut cols: Vec<String> = r.x[..dim].iter().chain(&r.u[..dim]).map(|v| format!("{v:e}")).collect();
        cols.push(format!("{:e}", r.phi));
        cols.push(format!("{:e}", r.h));
        writeln!(out, "{}", cols.join(","))?;
    }
    out.flush()
}

/// Parse a file written by [`write_fields`].
pub fn read_fields(text: &str) -> Result<(usize, Vec<FieldRow>), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty fields file")?;
    let n = header.split(',').count();
    if !(4..=8).contains(&n) || n % 2 != 0 {
        return Err(format!("unexpected header `{header}`"));
    }
    let dim = (n - 2) / 2;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", i + 2))?;
        if v.len() != n {
            return Err(format!("line {}: expected {n} columns", i + 2));
        }
        let mut r = FieldRow { x: [0.0; 3], u: [0.0; 3], phi: v[2 * dim], h: v[2 * dim + 1] };
        r.x[..dim].copy_from_slice(&v[..dim]);
        r.u[..dim].copy_from_slice(&v[dim..2 * dim]);
        rows.push(r);
    }
    Ok((dim, rows))
}

/// `step,displacement,load`
pub fn write_load_disp<W: Write>(mut out: W, records: &[StepRecord]) -> io::Result<()> {
    writeln!(out, "step,displacement,load")?;
    for r in records {
        writeln!(out, "{},{:e},{:e}", r.step, r.displacement, r.load)?;
    }
    out.flush()
}

/// `iter,phase,loss`
pub fn write_loss<W: Write>(mut out: W, record: &StepRecord) -> io::Result<()> {
    writeln!(out, "iter,phase,loss")?;
    for (i, phase, loss) in record.loss_rows() {
        writeln!(out, "{i},{phase},{loss:e}")?;
    }
    out.flush()
}

/// Legacy ASCII structured-points file over the whole grid box; points
/// outside the domain carry `inside = 0`.
pub fn write_vtk<W: Write>(mut out: W, grid: &PredictionGrid, dim: usize, evals: &[PointEval], h: &[f64]) -> io::Result<()> {
    let [nx, ny, nz] = grid.shape;
    let first = grid.points[0];
    let last = grid.points[grid.len() - 1];
    let spacing: Vec<f64> = (0..3).map(|k| if grid.shape[k] > 1 { (last[k] - first[k]) / (grid.shape[k] - 1) as f64 } else { 1.0 }).collect();
    writeln!(out, "# vtk DataFile Version 3.0\nphase-field fields\nASCII\nDATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(out, "ORIGIN {} {} {}", first[0], first[1], first[2])?;
    writeln!(out, "SPACING {} {} {}", spacing[0], spacing[1], spacing[2])?;
    writeln!(out, "POINT_DATA {}", grid.len())?;
    writeln!(out, "VECTORS displacement double")?;
    for e in evals {
        let u: Vec<f64> = (0..3).map(|k| if k < dim { e.u[k] } else { 0.0 }).collect();
        writeln!(out, "{:e} {:e} {:e}", u[0], u[1], u[2])?;
    }
    for (name, values) in [
        ("phi", evals.iter().map(|e| e.phi).collect::<Vec<_>>()),
        ("H", h.to_vec()),
        ("inside", grid.inside.iter().map(|&b| f64::from(u8::from(b))).collect()),
    ] {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
        for v in values {
            writeln!(out, "{v:e}")?;
        }
    }
    out.flush()
}
