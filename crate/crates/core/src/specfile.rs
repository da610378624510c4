//! The problem file: a line-oriented structured text document with
//! explicit section headers, matrices in row-major decimal, and polytopes
//! as halfspace rows `a1 ... ad | b`. Parse errors carry line numbers.

use nalgebra::{DMatrix, DVector};

use crate::config::Tolerances;
use crate::dp::{Mode, ProblemSpec, TerminalChoice};
use crate::error::{Error, Result};
use crate::geometry::Polytope;

/// Parsed problem file: the problem plus run options.
#[derive(Debug, Clone)]
pub struct SpecFile {
    pub problem: ProblemSpec,
    pub seed: u64,
    pub tol: Tolerances,
}

/// 17 significant digits: exact round-trip for doubles.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Cursor { lines, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.peek();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

fn parse_floats(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("not a number: {t}"),
            })
        })
        .collect()
}

fn read_matrix(cur: &mut Cursor, rows: usize, cols: usize, lineno: usize) -> Result<DMatrix<f64>> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (ln, line) = cur
            .next()
            .ok_or_else(|| cur.err(lineno, "unexpected end of file in matrix"))?;
        let vals = parse_floats(line, ln)?;
        if vals.len() != cols {
            return Err(cur.err(ln, format!("expected {cols} entries, found {}", vals.len())));
        }
        data.extend(vals);
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

fn read_polytope(cur: &mut Cursor, rows: usize, dim: usize, lineno: usize) -> Result<Polytope> {
    let mut hs = Vec::with_capacity(rows);
    for _ in 0..rows {
        let (ln, line) = cur
            .next()
            .ok_or_else(|| cur.err(lineno, "unexpected end of file in polytope"))?;
        let (lhs, rhs) = line
            .split_once('|')
            .ok_or_else(|| cur.err(ln, "polytope row must be 'a1 ... ad | b'"))?;
        let a = parse_floats(lhs, ln)?;
        let b = parse_floats(rhs, ln)?;
        if a.len() != dim || b.len() != 1 {
            return Err(cur.err(ln, format!("expected {dim} coefficients and one offset")));
        }
        hs.push((DVector::from_row_slice(&a), b[0]));
    }
    Polytope::from_rows(dim, &hs)
}

/// Shape header of the form "NAME rows cols".
fn shape(parts: &[&str], lineno: usize, what: &str) -> Result<(usize, usize)> {
    if parts.len() != 3 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("{what}: expected 'NAME rows cols'"),
        });
    }
    let r = parts[1].parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: "bad row count".into(),
    })?;
    let c = parts[2].parse().map_err(|_| Error::Parse {
        line: lineno,
        msg: "bad column count".into(),
    })?;
    Ok((r, c))
}

pub fn parse_spec(text: &str) -> Result<SpecFile> {
    let mut cur = Cursor::new(text);
    let mut a = None;
    let mut b = None;
    let mut g = None;
    let mut q = None;
    let mut r = None;
    let mut gamma = None;
    let mut x_set = None;
    let mut u_set = None;
    let mut w_set = None;
    let mut horizon = None;
    let mut terminal_mode: Option<String> = None;
    let mut p_f = None;
    let mut x_f = None;
    let mut mode = Mode::Constrained;
    let mut seed = 0u64;
    let mut tol = Tolerances::default();
    let mut bounding_box = None;

    let mut section = String::new();
    while let Some((ln, line)) = cur.next() {
        if line.starts_with('[') {
            section = line
                .trim_matches(|c| c == '[' || c == ']')
                .to_ascii_lowercase();
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let key = parts[0];
        match (section.as_str(), key) {
            ("system", "A") => {
                let (rr, cc) = shape(&parts, ln, "A")?;
                a = Some(read_matrix(&mut cur, rr, cc, ln)?);
            }
            ("system", "B") => {
                let (rr, cc) = shape(&parts, ln, "B")?;
                b = Some(read_matrix(&mut cur, rr, cc, ln)?);
            }
            ("system", "G") => {
                let (rr, cc) = shape(&parts, ln, "G")?;
                g = Some(read_matrix(&mut cur, rr, cc, ln)?);
            }
            ("cost", "Q") => {
                let (rr, cc) = shape(&parts, ln, "Q")?;
                q = Some(read_matrix(&mut cur, rr, cc, ln)?);
            }
            ("cost", "R") => {
                let (rr, cc) = shape(&parts, ln, "R")?;
                r = Some(read_matrix(&mut cur, rr, cc, ln)?);
            }
            ("cost", "gamma") => {
                gamma = Some(parse_floats(parts[1], ln)?[0]);
            }
            ("sets", "X") | ("sets", "U") | ("sets", "W") => {
                let (rr, dd) = shape(&parts, ln, key)?;
                let poly = read_polytope(&mut cur, rr, dd, ln)?;
                match key {
                    "X" => x_set = Some(poly),
                    "U" => u_set = Some(poly),
                    _ => w_set = Some(poly),
                }
            }
            ("horizon", "N") => {
                horizon = Some(parts[1].parse::<usize>().map_err(|_| Error::Parse {
                    line: ln,
                    msg: "bad horizon".into(),
                })?);
            }
            ("terminal", "mode") => {
                terminal_mode = Some(parts[1].to_string());
            }
            ("terminal", "P_f") => {
                let (rr, cc) = shape(&parts, ln, "P_f")?;
                p_f = Some(read_matrix(&mut cur, rr, cc, ln)?);
            }
            ("terminal", "X_f") => {
                let (rr, dd) = shape(&parts, ln, "X_f")?;
                x_f = Some(read_polytope(&mut cur, rr, dd, ln)?);
            }
            ("options", "mode") => {
                mode = match parts[1] {
                    "constrained" => Mode::Constrained,
                    "control-only" => Mode::ControlOnly,
                    "restricted" => Mode::Restricted,
                    other => {
                        return Err(Error::Parse {
                            line: ln,
                            msg: format!("unknown mode: {other}"),
                        })
                    }
                };
            }
            ("options", "seed") => {
                seed = parts[1].parse().map_err(|_| Error::Parse {
                    line: ln,
                    msg: "bad seed".into(),
                })?;
            }
            ("options", "bounding_box") => {
                let (rr, dd) = shape(&parts, ln, "bounding_box")?;
                bounding_box = Some(read_polytope(&mut cur, rr, dd, ln)?);
            }
            ("options", k) if k.starts_with("tol_") => {
                let v = parse_floats(parts[1], ln)?[0];
                match k {
                    "tol_feas" => tol.feas = v,
                    "tol_kkt" => tol.kkt = v,
                    "tol_act" => tol.act = v,
                    "tol_pd" => tol.pd = v,
                    "tol_interior" => tol.interior = v,
                    "tol_cont" => tol.cont = v,
                    "tol_dedup" => tol.dedup = v,
                    "tol_step" => tol.step = v,
                    "tol_redundancy" => tol.redundancy = v,
                    other => {
                        return Err(Error::Parse {
                            line: ln,
                            msg: format!("unknown tolerance override: {other}"),
                        })
                    }
                }
            }
            (_, k) => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("unexpected entry '{k}' in section [{section}]"),
                });
            }
        }
    }

    let missing = |what: &str| Error::Parse {
        line: 0,
        msg: format!("missing required field: {what}"),
    };
    let terminal = match terminal_mode.as_deref() {
        Some("compute") => TerminalChoice::Compute,
        Some("given") => TerminalChoice::Given {
            p_f: p_f.ok_or_else(|| missing("P_f"))?,
            x_f: x_f.ok_or_else(|| missing("X_f"))?,
        },
        Some(other) => {
            return Err(Error::Parse {
                line: 0,
                msg: format!("unknown terminal mode: {other}"),
            })
        }
        None => return Err(missing("terminal mode")),
    };
    let problem = ProblemSpec {
        a: a.ok_or_else(|| missing("A"))?,
        b: b.ok_or_else(|| missing("B"))?,
        g: g.ok_or_else(|| missing("G"))?,
        q: q.ok_or_else(|| missing("Q"))?,
        r: r.ok_or_else(|| missing("R"))?,
        gamma: gamma.ok_or_else(|| missing("gamma"))?,
        x_set: x_set.ok_or_else(|| missing("X"))?,
        u_set: u_set.ok_or_else(|| missing("U"))?,
        w_set: w_set.ok_or_else(|| missing("W"))?,
        horizon: horizon.ok_or_else(|| missing("N"))?,
        terminal,
        mode,
        bounding_box,
    };
    Ok(SpecFile { problem, seed, tol })
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    out.push_str(&format!("{name} {} {}\n", m.nrows(), m.ncols()));
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn write_polytope_rows(out: &mut String, name: &str, p: &Polytope) {
    out.push_str(&format!("{name} {} {}\n", p.num_rows(), p.dim()));
    for i in 0..p.num_rows() {
        let row: Vec<String> = (0..p.dim())
            .map(|j| format_f64(p.row_matrix()[(i, j)]))
            .collect();
        out.push_str(&format!("{} | {}\n", row.join(" "), format_f64(p.offsets()[i])));
    }
}

pub fn write_spec(sf: &SpecFile) -> String {
    let p = &sf.problem;
    let mut out = String::new();
    out.push_str("[system]\n");
    write_matrix(&mut out, "A", &p.a);
    write_matrix(&mut out, "B", &p.b);
    write_matrix(&mut out, "G", &p.g);
    out.push_str("[cost]\n");
    write_matrix(&mut out, "Q", &p.q);
    write_matrix(&mut out, "R", &p.r);
    out.push_str(&format!("gamma {}\n", format_f64(p.gamma)));
    out.push_str("[sets]\n");
    write_polytope_rows(&mut out, "X", &p.x_set);
    write_polytope_rows(&mut out, "U", &p.u_set);
    write_polytope_rows(&mut out, "W", &p.w_set);
    out.push_str("[horizon]\n");
    out.push_str(&format!("N {}\n", p.horizon));
    out.push_str("[terminal]\n");
    match &p.terminal {
        TerminalChoice::Compute => out.push_str("mode compute\n"),
        TerminalChoice::Given { p_f, x_f } => {
            out.push_str("mode given\n");
            write_matrix(&mut out, "P_f", p_f);
            write_polytope_rows(&mut out, "X_f", x_f);
        }
    }
    out.push_str("[options]\n");
    out.push_str(&format!(
        "mode {}\n",
        match p.mode {
            Mode::Constrained => "constrained",
            Mode::ControlOnly => "control-only",
            Mode::Restricted => "restricted",
        }
    ));
    out.push_str(&format!("seed {}\n", sf.seed));
    if let Some(bb) = &p.bounding_box {
        write_polytope_rows(&mut out, "bounding_box", bb);
    }
    let d = Tolerances::default();
    let t = &sf.tol;
    for (name, v, dv) in [
        ("tol_feas", t.feas, d.feas),
        ("tol_kkt", t.kkt, d.kkt),
        ("tol_act", t.act, d.act),
        ("tol_pd", t.pd, d.pd),
        ("tol_interior", t.interior, d.interior),
        ("tol_cont", t.cont, d.cont),
        ("tol_dedup", t.dedup, d.dedup),
        ("tol_step", t.step, d.step),
        ("tol_redundancy", t.redundancy, d.redundancy),
    ] {
        if v != dv {
            out.push_str(&format!("{name} {}\n", format_f64(v)));
        }
    }
    out
}

/// The worked example as a spec file, used by tests and as a template.
pub fn example_spec_text() -> &'static str {
    "# constrained min-max synthesis: second-order example\n\
     [system]\n\
     A 2 2\n1 1\n0 1\n\
     B 2 1\n0.5\n1\n\
     G 2 2\n1 0\n0 1\n\
     [cost]\n\
     Q 2 2\n10 0\n0 10\n\
     R 1 1\n1\n\
     gamma 100\n\
     [sets]\n\
     X 4 2\n1 0 | 10\n-1 0 | 10\n0 1 | 10\n0 -1 | 10\n\
     U 2 1\n1 | 1\n-1 | 1\n\
     W 4 2\n1 0 | 0.1\n-1 0 | 0.1\n0 1 | 0.1\n0 -1 | 0.1\n\
     [horizon]\n\
     N 2\n\
     [terminal]\n\
     mode given\n\
     P_f 2 2\n20.6143 5.9244\n5.9244 14.2329\n\
     X_f 4 2\n-0.9849 -0.3155 | 2.1526\n0.9849 0.3155 | 2.1526\n0.4369 0.8995 | 0.7079\n-0.4369 -0.8995 | 0.7079\n\
     [options]\n\
     mode constrained\n\
     seed 0\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_example() {
        let sf = parse_spec(example_spec_text()).unwrap();
        assert_eq!(sf.problem.horizon, 2);
        assert_eq!(sf.problem.n(), 2);
        assert_eq!(sf.problem.m(), 1);
        assert_eq!(sf.problem.gamma, 100.0);
        assert_eq!(sf.problem.x_set.num_rows(), 4);
        assert!(matches!(sf.problem.terminal, TerminalChoice::Given { .. }));
    }

    #[test]
    fn round_trip_is_identical() {
        let sf = parse_spec(example_spec_text()).unwrap();
        let text = write_spec(&sf);
        let sf2 = parse_spec(&text).unwrap();
        let text2 = write_spec(&sf2);
        assert_eq!(text, text2);
        assert_eq!(sf.problem.a, sf2.problem.a);
        assert_eq!(
            sf.problem.x_set.row_matrix(),
            sf2.problem.x_set.row_matrix()
        );
        assert_eq!(sf.problem.x_set.offsets(), sf2.problem.x_set.offsets());
        match (&sf.problem.terminal, &sf2.problem.terminal) {
            (TerminalChoice::Given { p_f: a, x_f: xa }, TerminalChoice::Given { p_f: b, x_f: xb }) => {
                assert_eq!(a, b);
                assert_eq!(xa.row_matrix(), xb.row_matrix());
                assert_eq!(xa.offsets(), xb.offsets());
            }
            _ => panic!("terminal choice changed"),
        }
    }

    #[test]
    fn missing_field_is_line_anchored() {
        let text = example_spec_text().replace("R 1 1\n1\n", "");
        match parse_spec(&text) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains('R'), "msg: {msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let text = example_spec_text().replace("gamma 100", "gamma abc");
        match parse_spec(&text) {
            Err(Error::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn tolerance_overrides_apply() {
        let text = format!("{}tol_feas 1e-6\n", example_spec_text());
        let sf = parse_spec(&text).unwrap();
        assert_eq!(sf.tol.feas, 1e-6);
        assert_eq!(sf.tol.kkt, Tolerances::default().kkt);
    }
}
