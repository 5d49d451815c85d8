use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{DGField, FieldRecord};

/// Equispaced samples per cell, endpoints included.
pub fn sample_points(samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect(),
    }
}

/// CSV with columns `cell_index, x_sample, value`.
pub fn write_field_csv<W: Write>(field: &DGField, samples: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "cell_index,x_sample,value")?;
    let mesh = field.mesh();
    let xis = sample_points(samples);
    for j in 0..field.cells() {
        for &xi in &xis {
            writeln!(out, "{j},{:.16e},{:.16e}", mesh.map(j, xi), field.eval_in_cell(j, xi))?;
        }
    }
    Ok(())
}

/// Raw coefficients of every field at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub fields: BTreeMap<String, FieldRecord>,
}

/// Write `<tag>.json` plus one `<tag>_<field>.csv` per field into `dir`.
pub fn write_snapshot(
    dir: &Path,
    tag: &str,
    time: f64,
    step: usize,
    fields: &[(&str, &DGField)],
    samples: usize,
) -> Result<()> {
    let snapshot = Snapshot {
        time,
        step,
        fields: fields.iter().map(|(n, f)| (n.to_string(), f.to_record())).collect(),
    };
    write_json(&dir.join(format!("{tag}.json")), &snapshot)?;
    for (name, field) in fields {
        let mut w = BufWriter::new(File::create(dir.join(format!("{tag}_{name}.csv")))?);
        write_field_csv(field, samples, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
