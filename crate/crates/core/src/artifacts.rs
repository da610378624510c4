//! On-disk artifact formats: polytope/quadratic/law records, per-stage
//! dump files, the terminal-pair record, trajectory exports, and 2-D
//! plot data (ordered vertex loops). All numbers are written with 17
//! significant digits so reads reproduce writes bitwise.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::config::Config;
use crate::dp::StageResult;
use crate::error::{Error, Result};
use crate::geometry::{Partition, Polytope};
use crate::parametric::MarriedRegion;
use crate::pwq::{AffineLaw, PiecewiseAffineLaw, PwqFunction, QuadraticForm};
use crate::rhc::{GainCertificate, Trajectory};
use crate::specfile::format_f64;
use crate::terminal::TerminalPair;

fn join_f64(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(format_f64)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_polytope(out: &mut String, p: &Polytope) {
    let _ = writeln!(out, "polytope {} {}", p.num_rows(), p.dim());
    for i in 0..p.num_rows() {
        let coeffs = join_f64((0..p.dim()).map(|j| p.row_matrix()[(i, j)]));
        let _ = writeln!(out, "{coeffs} | {}", format_f64(p.offsets()[i]));
    }
}

pub fn write_quadratic(out: &mut String, q: &QuadraticForm) {
    let _ = writeln!(out, "quadratic {}", q.dim());
    for i in 0..q.dim() {
        let _ = writeln!(out, "{}", join_f64((0..q.dim()).map(|j| q.q_mat[(i, j)])));
    }
    let _ = writeln!(out, "q {}", join_f64(q.lin.iter().copied()));
    let _ = writeln!(out, "s {}", format_f64(q.constant));
}

pub fn write_law(out: &mut String, law: &AffineLaw) {
    let _ = writeln!(out, "law {} {}", law.out_dim(), law.in_dim());
    for i in 0..law.out_dim() {
        let _ = writeln!(
            out,
            "{}",
            join_f64((0..law.in_dim()).map(|j| law.gain[(i, j)]))
        );
    }
    let _ = writeln!(out, "k {}", join_f64(law.offset.iter().copied()));
}

pub fn write_matrix_block(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let _ = writeln!(out, "{}", join_f64((0..m.ncols()).map(|j| m[(i, j)])));
    }
}

pub fn write_pwq(out: &mut String, f: &PwqFunction) {
    let _ = writeln!(out, "pwq {}", f.num_pieces());
    out.push_str("parent\n");
    write_polytope(out, &f.partition.parent);
    for (cell, piece) in f.partition.cells.iter().zip(f.pieces.iter()) {
        write_polytope(out, cell);
        write_quadratic(out, piece);
    }
}

pub fn write_pal(out: &mut String, f: &PiecewiseAffineLaw) {
    let _ = writeln!(out, "pal {}", f.laws.len());
    out.push_str("parent\n");
    write_polytope(out, &f.partition.parent);
    for (cell, law) in f.partition.cells.iter().zip(f.laws.iter()) {
        write_polytope(out, cell);
        write_law(out, law);
    }
}

fn write_region(out: &mut String, r: &MarriedRegion) {
    let _ = writeln!(out, "seed {}", join_f64(r.seed.iter().copied()));
    let cells: Vec<String> = r.cells.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "cells {} {}", r.cells.len(), cells.join(" "));
    for (cell, act) in r.cells.iter().zip(r.active_sets.iter()) {
        let rows: Vec<String> = act.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(out, "active {cell} : {}", rows.join(" "));
    }
    write_polytope(out, &r.region);
    write_law(out, &r.law);
    write_quadratic(out, &r.value);
}

/// Serializes one stage to its dump file contents.
pub fn write_stage(s: &StageResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "stage {}", s.stage);
    out.push_str("x_set\n");
    write_polytope(&mut out, &s.x_set);
    out.push_str("z_set\n");
    write_polytope(&mut out, &s.z_set);
    out.push_str("value\n");
    write_pwq(&mut out, &s.value);
    out.push_str("control_law\n");
    write_pal(&mut out, &s.control_law);
    out.push_str("max_value\n");
    write_pwq(&mut out, &s.max_value);
    out.push_str("disturbance_law\n");
    write_pal(&mut out, &s.disturbance_law);
    match &s.x_star {
        Some(members) => {
            let _ = writeln!(out, "x_star {}", members.len());
            for m in members {
                write_polytope(&mut out, m);
            }
        }
        None => {
            let _ = writeln!(out, "x_star 0");
        }
    }
    let _ = writeln!(out, "min_regions {}", s.min_regions.len());
    for r in &s.min_regions {
        write_region(&mut out, r);
    }
    let _ = writeln!(out, "max_regions {}", s.max_regions.len());
    for r in &s.max_regions {
        write_region(&mut out, r);
    }
    out
}

pub fn write_terminal(t: &TerminalPair) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "terminal");
    let _ = writeln!(out, "gamma {}", format_f64(t.gamma_used));
    write_matrix_block(&mut out, "P_f", &t.p_f);
    write_matrix_block(&mut out, "K_u", &t.k_u);
    write_matrix_block(&mut out, "K_w", &t.k_w);
    write_matrix_block(&mut out, "A_f", &t.a_f);
    write_matrix_block(&mut out, "A_c", &t.a_c);
    out.push_str("X_f\n");
    write_polytope(&mut out, &t.x_f);
    out
}

/// Per-step trajectory rows plus the certificate summary.
pub fn write_trajectory(traj: &Trajectory, cert: Option<&GainCertificate>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# i | x | u | w | y | stage_cost | value");
    for i in 0..traj.len() {
        let _ = writeln!(
            out,
            "{i} | {} | {} | {} | {} | {} | {}",
            join_f64(traj.states[i].iter().copied()),
            join_f64(traj.controls[i].iter().copied()),
            join_f64(traj.disturbances[i].iter().copied()),
            join_f64(traj.outputs[i].iter().copied()),
            format_f64(traj.stage_costs[i]),
            format_f64(traj.values[i]),
        );
    }
    if let Some(x) = traj.states.last() {
        let _ = writeln!(
            out,
            "{} | {} | | | | | {}",
            traj.len(),
            join_f64(x.iter().copied()),
            format_f64(*traj.values.last().unwrap()),
        );
    }
    if let Some(c) = cert {
        let _ = writeln!(out, "# certificate (output energy convention: 0.5|y|^2 per step)");
        let _ = writeln!(out, "# output_energy {}", format_f64(c.output_energy));
        let _ = writeln!(out, "# disturbance_energy {}", format_f64(c.disturbance_energy));
        let _ = writeln!(out, "# initial_value {}", format_f64(c.initial_value));
        let _ = writeln!(out, "# slack {}", format_f64(c.slack));
        let _ = writeln!(out, "# conclusive {}", c.conclusive);
    }
    out
}

/// Ordered vertex loops of every 2-D region of a stage value function.
pub fn write_plot_data(s: &StageResult, cfg: &Config) -> Result<String> {
    let mut out = String::new();
    if s.x_set.dim() != 2 {
        return Ok(out);
    }
    let cells = &s.value.partition.cells;
    let _ = writeln!(out, "plot stage {} regions {}", s.stage, cells.len());
    for (i, cell) in cells.iter().enumerate() {
        let mut verts = cell.vertices(&cfg.tol)?;
        if verts.is_empty() {
            continue;
        }
        // Order counterclockwise around the centroid.
        let cx = verts.iter().map(|v| v[0]).sum::<f64>() / verts.len() as f64;
        let cy = verts.iter().map(|v| v[1]).sum::<f64>() / verts.len() as f64;
        verts.sort_by(|p, q| {
            let ap = (p[1] - cy).atan2(p[0] - cx);
            let aq = (q[1] - cy).atan2(q[0] - cx);
            ap.partial_cmp(&aq).unwrap()
        });
        let _ = writeln!(out, "region {i} vertices {}", verts.len());
        for v in verts {
            let _ = writeln!(out, "{} {}", format_f64(v[0]), format_f64(v[1]));
        }
    }
    Ok(out)
}

// ------------------------------------------------------------------
// Parsing
// ------------------------------------------------------------------

pub struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().collect(),
            pos: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        while self.pos < self.lines.len() {
            let l = self.lines[self.pos].trim();
            self.pos += 1;
            if !l.is_empty() {
                return Ok(l);
            }
        }
        Err(Error::Parse {
            line: self.pos,
            msg: "unexpected end of artifact".into(),
        })
    }

    fn expect(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.first() != Some(&tag) {
            return Err(Error::Parse {
                line: self.pos,
                msg: format!("expected '{tag}', found '{line}'"),
            });
        }
        Ok(parts)
    }

    fn floats(&mut self) -> Result<Vec<f64>> {
        let line = self.next()?;
        line.split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: self.pos,
                    msg: format!("bad number {t}"),
                })
            })
            .collect()
    }

    pub fn read_polytope(&mut self) -> Result<Polytope> {
        let parts = self.expect("polytope")?;
        let rows: usize = parts[1].parse().unwrap_or(0);
        let dim: usize = parts[2].parse().unwrap_or(0);
        let mut hs = Vec::with_capacity(rows);
        for _ in 0..rows {
            let line = self.next()?;
            let (lhs, rhs) = line.split_once('|').ok_or(Error::Parse {
                line: self.pos,
                msg: "polytope row must contain '|'".into(),
            })?;
            let a: Vec<f64> = lhs
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            let b: f64 = rhs.trim().parse().map_err(|_| Error::Parse {
                line: self.pos,
                msg: "bad offset".into(),
            })?;
            hs.push((DVector::from_row_slice(&a), b));
        }
        Polytope::from_rows(dim, &hs)
    }

    pub fn read_quadratic(&mut self) -> Result<QuadraticForm> {
        let parts = self.expect("quadratic")?;
        let dim: usize = parts[1].parse().unwrap_or(0);
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            data.extend(self.floats()?);
        }
        let q = DMatrix::from_row_slice(dim, dim, &data);
        let qline = self.expect("q")?;
        let lin: Vec<f64> = qline[1..].iter().map(|t| t.parse().unwrap()).collect();
        let sline = self.expect("s")?;
        let s: f64 = sline[1].parse().unwrap();
        QuadraticForm::new(q, DVector::from_row_slice(&lin), s)
    }

    pub fn read_law(&mut self) -> Result<AffineLaw> {
        let parts = self.expect("law")?;
        let out_dim: usize = parts[1].parse().unwrap_or(0);
        let in_dim: usize = parts[2].parse().unwrap_or(0);
        let mut data = Vec::with_capacity(out_dim * in_dim);
        for _ in 0..out_dim {
            data.extend(self.floats()?);
        }
        let gain = DMatrix::from_row_slice(out_dim, in_dim, &data);
        let kline = self.expect("k")?;
        let off: Vec<f64> = kline[1..].iter().map(|t| t.parse().unwrap()).collect();
        AffineLaw::new(gain, DVector::from_row_slice(&off))
    }

    pub fn read_matrix_block(&mut self, name: &str) -> Result<DMatrix<f64>> {
        let parts = self.expect(name)?;
        let rows: usize = parts[1].parse().unwrap_or(0);
        let cols: usize = parts[2].parse().unwrap_or(0);
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.floats()?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }

    pub fn read_pwq(&mut self) -> Result<PwqFunction> {
        let parts = self.expect("pwq")?;
        let count: usize = parts[1].parse().unwrap_or(0);
        self.expect("parent")?;
        let parent = self.read_polytope()?;
        let mut cells = Vec::with_capacity(count);
        let mut pieces = Vec::with_capacity(count);
        for _ in 0..count {
            cells.push(self.read_polytope()?);
            pieces.push(self.read_quadratic()?);
        }
        PwqFunction::new(Partition::new(cells, parent), pieces)
    }

    pub fn read_pal(&mut self) -> Result<PiecewiseAffineLaw> {
        let parts = self.expect("pal")?;
        let count: usize = parts[1].parse().unwrap_or(0);
        self.expect("parent")?;
        let parent = self.read_polytope()?;
        let mut cells = Vec::with_capacity(count);
        let mut laws = Vec::with_capacity(count);
        for _ in 0..count {
            cells.push(self.read_polytope()?);
            laws.push(self.read_law()?);
        }
        PiecewiseAffineLaw::new(Partition::new(cells, parent), laws)
    }

    fn read_region(&mut self) -> Result<MarriedRegion> {
        let sline = self.expect("seed")?;
        let seed: Vec<f64> = sline[1..].iter().map(|t| t.parse().unwrap()).collect();
        let cline = self.expect("cells")?;
        let k: usize = cline[1].parse().unwrap_or(0);
        let cells: Vec<usize> = cline[2..2 + k].iter().map(|t| t.parse().unwrap()).collect();
        let mut active_sets = Vec::with_capacity(k);
        for _ in 0..k {
            let aline = self.expect("active")?;
            let after: Vec<usize> = aline
                .iter()
                .skip_while(|t| **t != ":")
                .skip(1)
                .map(|t| t.parse().unwrap())
                .collect();
            active_sets.push(after);
        }
        let region = self.read_polytope()?;
        let law = self.read_law()?;
        let value = self.read_quadratic()?;
        Ok(MarriedRegion {
            seed: DVector::from_row_slice(&seed),
            cells,
            active_sets,
            region,
            law,
            value,
        })
    }

    pub fn read_stage(&mut self) -> Result<StageResult> {
        let parts = self.expect("stage")?;
        let stage: usize = parts[1].parse().unwrap_or(0);
        self.expect("x_set")?;
        let x_set = self.read_polytope()?;
        self.expect("z_set")?;
        let z_set = self.read_polytope()?;
        self.expect("value")?;
        let value = self.read_pwq()?;
        self.expect("control_law")?;
        let control_law = self.read_pal()?;
        self.expect("max_value")?;
        let max_value = self.read_pwq()?;
        self.expect("disturbance_law")?;
        let disturbance_law = self.read_pal()?;
        let xline = self.expect("x_star")?;
        let nstar: usize = xline[1].parse().unwrap_or(0);
        let x_star = if nstar == 0 {
            None
        } else {
            let mut members = Vec::with_capacity(nstar);
            for _ in 0..nstar {
                members.push(self.read_polytope()?);
            }
            Some(members)
        };
        let mline = self.expect("min_regions")?;
        let nmin: usize = mline[1].parse().unwrap_or(0);
        let mut min_regions = Vec::with_capacity(nmin);
        for _ in 0..nmin {
            min_regions.push(self.read_region()?);
        }
        let mline = self.expect("max_regions")?;
        let nmax: usize = mline[1].parse().unwrap_or(0);
        let mut max_regions = Vec::with_capacity(nmax);
        for _ in 0..nmax {
            max_regions.push(self.read_region()?);
        }
        Ok(StageResult {
            stage,
            value,
            control_law,
            max_value,
            disturbance_law,
            x_set,
            z_set,
            x_star,
            max_regions,
            min_regions,
        })
    }

    pub fn read_terminal(&mut self) -> Result<TerminalPair> {
        self.expect("terminal")?;
        let gline = self.expect("gamma")?;
        let gamma_used: f64 = gline[1].parse().unwrap();
        let p_f = self.read_matrix_block("P_f")?;
        let k_u = self.read_matrix_block("K_u")?;
        let k_w = self.read_matrix_block("K_w")?;
        let a_f = self.read_matrix_block("A_f")?;
        let a_c = self.read_matrix_block("A_c")?;
        self.expect("X_f")?;
        let x_f = self.read_polytope()?;
        Ok(TerminalPair {
            p_f,
            k_u,
            k_w,
            a_f,
            a_c,
            x_f,
            gamma_used,
        })
    }
}

// ------------------------------------------------------------------
// Directory layout
// ------------------------------------------------------------------

pub fn stage_filename(j: usize) -> String {
    format!("stage_{j:02}.txt")
}

/// Writes the full synthesis output into `outdir`.
pub fn save_synthesis(
    outdir: &Path,
    spec_text: &str,
    terminal: &TerminalPair,
    stages: &[StageResult],
    cfg: &Config,
) -> Result<()> {
    std::fs::create_dir_all(outdir)?;
    std::fs::write(outdir.join("problem.txt"), spec_text)?;
    std::fs::write(outdir.join("terminal.txt"), write_terminal(terminal))?;
    let mut summary = String::new();
    for s in stages {
        std::fs::write(outdir.join(stage_filename(s.stage)), write_stage(s))?;
        let _ = writeln!(
            summary,
            "stage {}: x-regions: {}, z-regions: {}",
            s.stage,
            s.min_regions.len(),
            s.max_regions.len()
        );
        let plot = write_plot_data(s, cfg)?;
        if !plot.is_empty() {
            std::fs::write(outdir.join(format!("plot_stage_{:02}.txt", s.stage)), plot)?;
        }
    }
    std::fs::write(outdir.join("summary.txt"), summary)?;
    Ok(())
}

/// Loads a synthesis directory back into memory.
pub fn load_synthesis(
    outdir: &Path,
) -> Result<(crate::specfile::SpecFile, TerminalPair, Vec<StageResult>)> {
    let spec_text = std::fs::read_to_string(outdir.join("problem.txt"))?;
    let spec = crate::specfile::parse_spec(&spec_text)?;
    let term_text = std::fs::read_to_string(outdir.join("terminal.txt"))?;
    let terminal = Reader::new(&term_text).read_terminal()?;
    let mut stages = Vec::new();
    for j in 1..=spec.problem.horizon {
        let text = std::fs::read_to_string(outdir.join(stage_filename(j)))?;
        stages.push(Reader::new(&text).read_stage()?);
    }
    Ok((spec, terminal, stages))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwq::QuadraticForm;

    #[test]
    fn polytope_record_round_trip() {
        let p = crate::testdata::example_xf();
        let mut out = String::new();
        write_polytope(&mut out, &p);
        let p2 = Reader::new(&out).read_polytope().unwrap();
        assert_eq!(p.row_matrix(), p2.row_matrix());
        assert_eq!(p.offsets(), p2.offsets());
        let mut out2 = String::new();
        write_polytope(&mut out2, &p2);
        assert_eq!(out, out2);
    }

    #[test]
    fn pwq_record_round_trip() {
        let f = PwqFunction::single(
            crate::testdata::example_xf(),
            QuadraticForm::from_matrix(crate::testdata::example_pf()).unwrap(),
        )
        .unwrap();
        let mut out = String::new();
        write_pwq(&mut out, &f);
        let f2 = Reader::new(&out).read_pwq().unwrap();
        assert_eq!(f.pieces[0].q_mat, f2.pieces[0].q_mat);
        let mut out2 = String::new();
        write_pwq(&mut out2, &f2);
        assert_eq!(out, out2);
    }

    #[test]
    fn terminal_record_round_trip() {
        let spec = crate::testdata::example_spec();
        let t = crate::testdata::example_terminal(&spec);
        let text = write_terminal(&t);
        let t2 = Reader::new(&text).read_terminal().unwrap();
        assert_eq!(t.p_f, t2.p_f);
        assert_eq!(t.k_u, t2.k_u);
        assert_eq!(t.k_w, t2.k_w);
        assert_eq!(write_terminal(&t2), text);
    }
}
