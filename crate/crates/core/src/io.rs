//! CSV output. Floats are written with 17 significant digits, rows end in `\n`.

use std::io::{self, Write};

use crate::bifurcation::{BifurcationDiagram, BifurcationPoint};
use crate::fsoe::Equilibrium;
use crate::ode::Trajectory;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// `t,p,e`
pub fn write_fsoe_trajectory<W: Write + ?Sized>(w: &mut W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "t,p,e")?;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(y[0]), fmt_f64(y[1]))?;
    }
    Ok(())
}

/// `t,x_0,...,x_{N-1},e`, optionally followed by `sync_error`.
pub fn write_network_trajectory<W: Write + ?Sized>(
    w: &mut W,
    traj: &Trajectory,
    with_sync_error: bool,
) -> io::Result<()> {
    let n = traj.dim() - 1;
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("x_{i}")));
    header.push("e".to_string());
    if with_sync_error {
        header.push("sync_error".to_string());
    }
    writeln!(w, "{}", header.join(","))?;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let mut row = Vec::with_capacity(n + 3);
        row.push(fmt_f64(*t));
        row.extend(y.iter().map(|v| fmt_f64(*v)));
        if with_sync_error {
            row.push(fmt_f64(crate::network::sync_error(&y[..n])));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `beta,p_star,e_star,trace,det,stability`
pub fn write_equilibria<W: Write + ?Sized>(
    w: &mut W,
    beta: f64,
    eqs: &[Equilibrium],
) -> io::Result<()> {
    writeln!(w, "beta,p_star,e_star,trace,det,stability")?;
    for eq in eqs {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(beta),
            fmt_f64(eq.p_star),
            fmt_f64(eq.e_star),
            fmt_f64(eq.jac.trace),
            fmt_f64(eq.jac.det),
            eq.stability.as_str()
        )?;
    }
    Ok(())
}

/// `run_id,t,p,e`
pub fn write_portrait<W: Write + ?Sized>(w: &mut W, runs: &[Trajectory]) -> io::Result<()> {
    writeln!(w, "run_id,t,p,e")?;
    for (id, traj) in runs.iter().enumerate() {
        for (t, y) in traj.times.iter().zip(&traj.states) {
            writeln!(
                w,
                "{id},{},{},{}",
                fmt_f64(*t),
                fmt_f64(y[0]),
                fmt_f64(y[1])
            )?;
        }
    }
    Ok(())
}

/// One row per equilibrium and grid value, ordered by `beta`, then branch.
pub fn write_diagram<W: Write + ?Sized>(w: &mut W, d: &BifurcationDiagram) -> io::Result<()> {
    writeln!(
        w,
        "beta,branch_id,p_star,e_star,trace,det,stability,cycle_p_min,cycle_p_max,cycle_period"
    )?;
    let mut rows: Vec<(usize, usize, &crate::bifurcation::BranchPoint)> = Vec::new();
    for b in &d.branches {
        for pt in &b.points {
            let k = d
                .beta_grid
                .iter()
                .position(|&x| x == pt.beta)
                .expect("branch points lie on the grid");
            rows.push((k, b.id, pt));
        }
    }
    rows.sort_by_key(|&(k, id, _)| (k, id));
    for (k, id, pt) in rows {
        let eq = &pt.equilibrium;
        let cycle = d.cycle_amplitudes[k];
        writeln!(
            w,
            "{},{id},{},{},{},{},{},{},{},{}",
            fmt_f64(pt.beta),
            fmt_f64(eq.p_star),
            fmt_f64(eq.e_star),
            fmt_f64(eq.jac.trace),
            fmt_f64(eq.jac.det),
            eq.stability.as_str(),
            fmt_opt(cycle.map(|c| c.p_min)),
            fmt_opt(cycle.map(|c| c.p_max)),
            fmt_opt(cycle.map(|c| c.period)),
        )?;
    }
    Ok(())
}

/// `beta,kind,detection,omega0,coefficient`
pub fn write_points<W: Write + ?Sized>(w: &mut W, points: &[BifurcationPoint]) -> io::Result<()> {
    writeln!(w, "beta,kind,detection,omega0,coefficient")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(p.beta),
            p.kind.as_str(),
            p.detection.as_str(),
            fmt_opt(p.omega0),
            fmt_opt(p.coefficient)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsoe::equilibria;
    use crate::model::ModelConfig;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 702.0, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn equilibria_csv() {
        let eqs = equilibria(&ModelConfig::canonical(0.7)).unwrap();
        let mut buf = Vec::new();
        write_equilibria(&mut buf, 0.7, &eqs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "beta,p_star,e_star,trace,det,stability");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].ends_with(",StableFocus"));
        assert!(!text.contains('\r'));
    }
}
