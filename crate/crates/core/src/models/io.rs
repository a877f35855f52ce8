//! Flat binary and CSV serialization of trajectories and snapshot matrices.
//!
//! Binary layout (little endian): magic `SPTRAJ01`, `u64` rows, `u64`
//! columns, `f64` time step, then the column-major payload.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::integrator::Trajectory;

const MAGIC: &[u8; 8] = b"SPTRAJ01";

pub fn write_binary<W: Write>(mut w: W, states: &DMatrix<f64>, ht: f64) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(states.nrows() as u64).to_le_bytes())?;
    w.write_all(&(states.ncols() as u64).to_le_bytes())?;
    w.write_all(&ht.to_le_bytes())?;
    for v in states.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<(DMatrix<f64>, f64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a trajectory file".into()));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let rows = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let cols = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let ht = f64::from_le_bytes(buf);
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Io("header dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok((DMatrix::from_vec(rows, cols, data), ht))
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let ht = if traj.times.len() > 1 { traj.times[1] - traj.times[0] } else { 0.0 };
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_binary(&mut w, &traj.states, ht)?;
    w.flush()?;
    Ok(())
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let (states, ht) = read_binary(BufReader::new(std::fs::File::open(path)?))?;
    Ok(Trajectory {
        times: (0..states.ncols()).map(|i| i as f64 * ht).collect(),
        states,
        wall_time: 0.0,
    })
}

/// One row per time instant: `t,x_1,…,x_{2n}`.
pub fn write_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let dim = traj.states.nrows();
    let mut header = String::from("t");
    for i in 1..=dim {
        header.push_str(&format!(",x{i}"));
    }
    writeln!(w, "{header}")?;
    for (j, t) in traj.times.iter().enumerate() {
        let mut line = format!("{t:.17e}");
        for v in traj.states.column(j).iter() {
            line.push_str(&format!(",{v:.17e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::Io(format!("line {}: {e}", lineno + 1)))?;
        if vals.len() < 2 {
            return Err(Error::Io(format!("line {}: too few fields", lineno + 1)));
        }
        match dim {
            None => dim = Some(vals.len() - 1),
            Some(d) if d != vals.len() - 1 => return Err(Error::Io(format!("line {}: ragged row", lineno + 1))),
            _ => {}
        }
        times.push(vals[0]);
        data.extend_from_slice(&vals[1..]);
    }
    let dim = dim.ok_or_else(|| Error::Io("empty trajectory".into()))?;
    Ok(Trajectory {
        states: DMatrix::from_vec(dim, times.len(), data),
        times,
        wall_time: 0.0,
    })
}
