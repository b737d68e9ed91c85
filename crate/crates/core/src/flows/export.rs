//! Trajectory export: CSV (`t,m_1_1,...,m_n_n`, row-major) and JSON.

use std::io::Write;

use serde_json::json;

use super::field::Trajectory;
use crate::error::Result;

/// Writes the CSV form; `comment`, when given, becomes a leading `# ` line.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, comment: Option<&str>, w: &mut W) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    let n = traj.dim();
    let mut header = vec!["t".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("m_{i}_{j}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut line = format!("{t:.16e}");
        for x in s.as_slice() {
            line.push_str(&format!(",{x:.16e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, None, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// JSON with `times`, row-major `states` and the integrator `meta`.
pub fn trajectory_to_json(traj: &Trajectory) -> serde_json::Value {
    json!({
        "n": traj.dim(),
        "times": traj.times,
        "states": traj.states.iter().map(|s| s.as_slice().to_vec()).collect::<Vec<_>>(),
        "meta": traj.meta,
    })
}
