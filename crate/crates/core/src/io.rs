//! Text serialisation: operator and state files, witness bundle export,
//! and probability table CSV.
//!
//! All numbers are written with 17 significant digits, which round-trips
//! every f64 exactly.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, DimSpec, C64};
use crate::protocol::{ProbabilityTable, Provenance};
use crate::state::{DensityMatrix, PovmEffect, PureState};
use crate::witness::{CoeffGrid, WitnessBundle};

/// 17-significant-digit decimal, the shortest width that is lossless for
/// every double.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn significant_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

fn parse_f64(no: usize, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::parse(no, format!("bad number `{s}`")))
}

fn parse_usize(no: usize, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(no, format!("bad integer `{s}`")))
}

/// Reads a `dims d_A d_B` header line.
fn parse_dims_line(no: usize, line: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "dims" {
        return Err(Error::parse(no, "expected `dims d_A d_B`"));
    }
    let d_a = parse_usize(no, parts[1])?;
    let d_b = parse_usize(no, parts[2])?;
    if d_a == 0 || d_b == 0 {
        return Err(Error::parse(no, "dimensions must be positive"));
    }
    Ok((d_a, d_b))
}

fn parse_entry(no: usize, line: &str) -> Result<C64> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::parse(no, "expected `re im`"));
    }
    Ok(C64::new(parse_f64(no, parts[0])?, parse_f64(no, parts[1])?))
}

/// Writes a bipartite operator: `dims d_A d_B` then (d_A d_B)^2 rows of
/// `re im` in row-major order.
pub fn write_operator(m: &CMatrix, d_a: usize, d_b: usize) -> Result<String> {
    let n = d_a * d_b;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::dim(format!(
            "operator is {}x{}, dims say {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = format!("dims {d_a} {d_b}\n");
    for r in 0..n {
        for c in 0..n {
            let z = m[(r, c)];
            out.push_str(&fmt_g17(z.re));
            out.push(' ');
            out.push_str(&fmt_g17(z.im));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Inverse of [`write_operator`]. Blank lines are ignored; entry count must
/// match the header exactly.
pub fn read_operator(text: &str) -> Result<(CMatrix, usize, usize)> {
    let lines = significant_lines(text);
    if lines.is_empty() {
        return Err(Error::parse(0, "empty operator file"));
    }
    let (d_a, d_b) = parse_dims_line(lines[0].0, lines[0].1)?;
    let n = d_a * d_b;
    let body = &lines[1..];
    if body.len() != n * n {
        return Err(Error::parse(
            lines[0].0,
            format!("expected {} entries, found {}", n * n, body.len()),
        ));
    }
    let mut m = CMatrix::zeros(n, n);
    for (idx, &(no, line)) in body.iter().enumerate() {
        m[(idx / n, idx % n)] = parse_entry(no, line)?;
    }
    Ok((m, d_a, d_b))
}

pub fn write_density(rho: &DensityMatrix) -> Result<String> {
    let d = rho.dims().dims();
    if d.len() != 2 {
        return Err(Error::dim("state files hold bipartite operators"));
    }
    write_operator(rho.mat(), d[0], d[1])
}

/// Reads and fully validates a density matrix.
pub fn read_density(text: &str) -> Result<DensityMatrix> {
    let (m, d_a, d_b) = read_operator(text)?;
    DensityMatrix::new(m, DimSpec::bipartite(d_a, d_b)?)
}

pub fn write_effect(e: &PovmEffect) -> Result<String> {
    let d = e.dims().dims();
    if d.len() != 2 {
        return Err(Error::dim("effect files hold bipartite operators"));
    }
    write_operator(e.mat(), d[0], d[1])
}

/// Reads and fully validates a POVM effect.
pub fn read_effect(text: &str) -> Result<PovmEffect> {
    let (m, d_a, d_b) = read_operator(text)?;
    PovmEffect::new(m, DimSpec::bipartite(d_a, d_b)?)
}

/// Writes a pure state as the vector variant of the operator format:
/// `dims d_A d_B` then d_A d_B amplitude rows.
pub fn write_pure(psi: &PureState) -> Result<String> {
    let d = psi.dims().dims();
    if d.len() != 2 {
        return Err(Error::dim("pure state files hold bipartite vectors"));
    }
    let mut out = format!("dims {} {}\n", d[0], d[1]);
    for z in psi.vec().iter() {
        out.push_str(&fmt_g17(z.re));
        out.push(' ');
        out.push_str(&fmt_g17(z.im));
        out.push('\n');
    }
    Ok(out)
}

pub fn read_pure(text: &str) -> Result<PureState> {
    let lines = significant_lines(text);
    if lines.is_empty() {
        return Err(Error::parse(0, "empty state file"));
    }
    let (d_a, d_b) = parse_dims_line(lines[0].0, lines[0].1)?;
    let n = d_a * d_b;
    let body = &lines[1..];
    if body.len() != n {
        return Err(Error::parse(
            lines[0].0,
            format!("expected {n} amplitudes, found {}", body.len()),
        ));
    }
    let mut v = CVector::zeros(n);
    for (idx, &(no, line)) in body.iter().enumerate() {
        v[idx] = parse_entry(no, line)?;
    }
    PureState::new(v, DimSpec::bipartite(d_a, d_b)?)
}

fn push_grid(out: &mut String, name: &str, grid: &CoeffGrid) {
    out.push_str(name);
    out.push('\n');
    for (s, t, v) in grid.iter() {
        out.push_str(&format!("{s} {t} {}\n", fmt_g17(v)));
    }
}

/// Serialises the portable parts of a bundle: dimensions, the two pure
/// states, s_x, and the three coefficient grids as `s t value` triples.
pub fn write_bundle(bundle: &WitnessBundle) -> String {
    let mut out = format!("dims {} {}\n", bundle.d_a, bundle.d_b);
    out.push_str("phi\n");
    for z in bundle.phi.vec().iter() {
        out.push_str(&format!("{} {}\n", fmt_g17(z.re), fmt_g17(z.im)));
    }
    out.push_str("psi\n");
    for z in bundle.psi.vec().iter() {
        out.push_str(&format!("{} {}\n", fmt_g17(z.re), fmt_g17(z.im)));
    }
    out.push_str(&format!("s_x {}\n", fmt_g17(bundle.s_x())));
    push_grid(&mut out, "alpha", &bundle.alpha);
    push_grid(&mut out, "beta", &bundle.beta);
    push_grid(&mut out, "gamma", &bundle.gamma);
    out
}

struct Reader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        let &(no, line) = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::parse(0, "file ends early"))?;
        self.pos += 1;
        Ok((no, line))
    }

    fn expect(&mut self, marker: &str) -> Result<()> {
        let (no, line) = self.next()?;
        if line != marker {
            return Err(Error::parse(no, format!("expected `{marker}`, got `{line}`")));
        }
        Ok(())
    }

    fn vector(&mut self, n: usize, dims: &DimSpec) -> Result<PureState> {
        let mut v = CVector::zeros(n);
        for idx in 0..n {
            let (no, line) = self.next()?;
            v[idx] = parse_entry(no, line)?;
        }
        PureState::new(v, dims.clone())
    }

    fn grid(&mut self, name: &str, rows: usize, cols: usize) -> Result<CoeffGrid> {
        self.expect(name)?;
        let mut grid = CoeffGrid::zeros(rows, cols);
        for _ in 0..rows * cols {
            let (no, line) = self.next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::parse(no, "expected `s t value`"));
            }
            let s = parse_usize(no, parts[0])?;
            let t = parse_usize(no, parts[1])?;
            if s >= rows || t >= cols {
                return Err(Error::parse(no, format!("index ({s}, {t}) out of range")));
            }
            grid.set(s, t, parse_f64(no, parts[2])?);
        }
        Ok(grid)
    }
}

/// Inverse of [`write_bundle`]. The derived operators are rebuilt from phi
/// and psi; the stored s_x must agree with the recomputed one.
pub fn read_bundle(text: &str) -> Result<WitnessBundle> {
    let mut r = Reader {
        lines: significant_lines(text),
        pos: 0,
    };
    let (no, line) = r.next()?;
    let (d_a, d_b) = parse_dims_line(no, line)?;
    let dims = DimSpec::bipartite(d_a, d_b)?;
    let n = d_a * d_b;

    r.expect("phi")?;
    let phi = r.vector(n, &dims)?;
    r.expect("psi")?;
    let psi = r.vector(n, &dims)?;

    let (no, line) = r.next()?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 2 || parts[0] != "s_x" {
        return Err(Error::parse(no, "expected `s_x value`"));
    }
    let s_x_stored = parse_f64(no, parts[1])?;

    let alpha = r.grid("alpha", d_a * d_a, d_b * d_b)?;
    let beta = r.grid("beta", d_a * d_a, d_b * d_b)?;
    let gamma = r.grid("gamma", d_a * d_a, d_b * d_b)?;
    if r.pos != r.lines.len() {
        let (no, _) = r.lines[r.pos];
        return Err(Error::parse(no, "trailing content after bundle"));
    }

    let bundle = WitnessBundle::from_components(phi, psi, alpha, beta, gamma)?;
    if (bundle.s_x() - s_x_stored).abs() > 1e-9 {
        return Err(Error::parse(
            no,
            format!(
                "stored s_x {} disagrees with recomputed {}",
                s_x_stored,
                bundle.s_x()
            ),
        ));
    }
    Ok(bundle)
}

/// CSV export of a table: header `s,t,p00,p01,p10,p11`, one s-major row per
/// input pair, and a final `mm,mm` row for the maximally mixed pair.
pub fn write_table_csv(table: &ProbabilityTable) -> String {
    let mut out = String::from("s,t,p00,p01,p10,p11\n");
    for s in 0..table.n_a() {
        for t in 0..table.n_b() {
            let d = table.dist(s, t);
            out.push_str(&format!(
                "{s},{t},{},{},{},{}\n",
                fmt_g17(d[0]),
                fmt_g17(d[1]),
                fmt_g17(d[2]),
                fmt_g17(d[3])
            ));
        }
    }
    let d = table.mm_dist();
    out.push_str(&format!(
        "mm,mm,{},{},{},{}\n",
        fmt_g17(d[0]),
        fmt_g17(d[1]),
        fmt_g17(d[2]),
        fmt_g17(d[3])
    ));
    out
}

/// Inverse of [`write_table_csv`]. The provenance is not stored in the
/// file, so the caller states it.
pub fn read_table_csv(text: &str, provenance: Provenance) -> Result<ProbabilityTable> {
    let lines = significant_lines(text);
    if lines.is_empty() {
        return Err(Error::parse(0, "empty table file"));
    }
    let (no, header) = lines[0];
    if header != "s,t,p00,p01,p10,p11" {
        return Err(Error::parse(no, "bad table header"));
    }
    let mut cells: Vec<(usize, usize, [f64; 4])> = Vec::new();
    let mut mm: Option<[f64; 4]> = None;
    for &(no, line) in &lines[1..] {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::parse(no, "expected 6 columns"));
        }
        let dist = [
            parse_f64(no, parts[2])?,
            parse_f64(no, parts[3])?,
            parse_f64(no, parts[4])?,
            parse_f64(no, parts[5])?,
        ];
        if parts[0] == "mm" {
            if mm.is_some() {
                return Err(Error::parse(no, "duplicate mm row"));
            }
            mm = Some(dist);
        } else {
            if mm.is_some() {
                return Err(Error::parse(no, "mm row must come last"));
            }
            cells.push((parse_usize(no, parts[0])?, parse_usize(no, parts[1])?, dist));
        }
    }
    let mm = mm.ok_or_else(|| Error::parse(0, "missing mm row"))?;
    let n_a = cells.iter().map(|&(s, _, _)| s + 1).max().unwrap_or(0);
    let n_b = cells.iter().map(|&(_, t, _)| t + 1).max().unwrap_or(0);
    if cells.len() != n_a * n_b {
        return Err(Error::parse(
            0,
            format!("expected {} rows, found {}", n_a * n_b, cells.len()),
        ));
    }
    let d_a = (n_a as f64).sqrt().round() as usize;
    let d_b = (n_b as f64).sqrt().round() as usize;
    if d_a * d_a != n_a || d_b * d_b != n_b {
        return Err(Error::parse(0, "row counts are not perfect squares"));
    }
    let mut ordered = vec![[0.0; 4]; n_a * n_b];
    let mut seen = vec![false; n_a * n_b];
    for (s, t, dist) in cells {
        let idx = s * n_b + t;
        if seen[idx] {
            return Err(Error::parse(0, format!("duplicate row ({s}, {t})")));
        }
        seen[idx] = true;
        ordered[idx] = dist;
    }
    ProbabilityTable::new(d_a, d_b, ordered, mm, provenance)
}
