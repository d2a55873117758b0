//! Plain-text solution dump.
//!
//! ```text
//! dg-solution degree <r> dim <M> intervals <N> anchor <initial|terminal>
//! <outer trace: M values>
//! <t_{n-1}> <t_n>            # repeated per interval,
//! <U^n_0: M values>          # followed by r + 1 coefficient rows
//! ...
//! ```
//!
//! Numbers use 17 significant digits, so a dump reads back bit-identically.

use std::fmt::Write as _;

use nalgebra::DVector;

use super::{OuterTrace, PiecewisePoly};
use crate::basis::ReferenceElement;
use crate::error::{Error, Result};
use crate::mesh::TemporalMesh;

fn push_row(out: &mut String, values: impl Iterator<Item = f64>) {
    let row: Vec<String> = values.map(|x| format!("{x:.16e}")).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

pub fn write_solution(u: &PiecewisePoly) -> String {
    let anchor = match u.outer() {
        OuterTrace::Initial(_) => "initial",
        OuterTrace::Terminal(_) => "terminal",
    };
    let mut out = String::new();
    let _ = writeln!(out, "dg-solution degree {} dim {} intervals {} anchor {anchor}", u.degree(), u.dim(), u.mesh().len());
    push_row(&mut out, u.outer().vector().iter().copied());
    for n in 0..u.mesh().len() {
        let (a, b) = u.mesh().interval(n);
        push_row(&mut out, [a, b].into_iter());
        for c in u.local(n) {
            push_row(&mut out, c.iter().copied());
        }
    }
    out
}

fn parse_row(line: Option<&str>, expected: usize) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Parse("unexpected end of solution dump".into()))?;
    let values = line
        .split_whitespace()
        .map(|x| x.parse::<f64>().map_err(|e| Error::Parse(format!("'{x}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::Parse(format!("expected {expected} numbers, found {}", values.len())));
    }
    Ok(values)
}

pub fn read_solution(text: &str) -> Result<PiecewisePoly> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty solution dump".into()))?
        .split_whitespace()
        .collect();
    let field = |name: &str| -> Result<&str> {
        header
            .iter()
            .position(|h| *h == name)
            .and_then(|i| header.get(i + 1).copied())
            .ok_or_else(|| Error::Parse(format!("header lacks '{name}'")))
    };
    if header.first() != Some(&"dg-solution") {
        return Err(Error::Parse("not a dg-solution dump".into()));
    }
    let num = |name: &str| -> Result<usize> { field(name)?.parse().map_err(|e| Error::Parse(format!("{name}: {e}"))) };
    let (degree, dim, intervals) = (num("degree")?, num("dim")?, num("intervals")?);
    let outer_values = DVector::from_vec(parse_row(lines.next(), dim)?);
    let outer = match field("anchor")? {
        "initial" => OuterTrace::Initial(outer_values),
        "terminal" => OuterTrace::Terminal(outer_values),
        other => return Err(Error::Parse(format!("unknown anchor '{other}'"))),
    };
    let mut breakpoints = Vec::with_capacity(intervals + 1);
    let mut coeffs = Vec::with_capacity(intervals);
    for n in 0..intervals {
        let ends = parse_row(lines.next(), 2)?;
        if n == 0 {
            breakpoints.push(ends[0]);
        } else if ends[0] != *breakpoints.last().expect("nonempty") {
            return Err(Error::Parse(format!("interval {n} does not start where the previous one ends")));
        }
        breakpoints.push(ends[1]);
        let local = (0..=degree)
            .map(|_| parse_row(lines.next(), dim).map(DVector::from_vec))
            .collect::<Result<Vec<_>>>()?;
        coeffs.push(local);
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing data after solution dump".into()));
    }
    PiecewisePoly::new(TemporalMesh::from_breakpoints(breakpoints)?, ReferenceElement::new(degree)?, coeffs, outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::solve_primal;
    use crate::operator::Operator;

    #[test]
    fn round_trip_is_bit_identical() {
        let op = Operator::diagonal(vec![1.0, 7.0, 30.0]).unwrap();
        let mesh = TemporalMesh::quasi_uniform(1.0, 5, 0.5, 3).unwrap();
        let f = |t: f64| DVector::from_vec(vec![t.sin(), 1.0 / 3.0, t.exp()]);
        let u = solve_primal(&op, &mesh, 2, &f, &DVector::from_vec(vec![0.1, 0.2, 0.3])).unwrap();
        let text = write_solution(&u);
        let back = read_solution(&text).unwrap();
        assert_eq!(back, u);
        assert_eq!(write_solution(&back), text);
        let dual = u.reversed();
        assert_eq!(read_solution(&write_solution(&dual)).unwrap(), dual);
    }

    #[test]
    fn rejects_malformed_dumps() {
        assert!(read_solution("").is_err());
        assert!(read_solution("something else").is_err());
        let op = Operator::diagonal(vec![1.0]).unwrap();
        let mesh = TemporalMesh::uniform(1.0, 2).unwrap();
        let u = solve_primal(&op, &mesh, 1, &|_t: f64| DVector::from_element(1, 1.0), &DVector::zeros(1)).unwrap();
        let text = write_solution(&u);
        let truncated: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(read_solution(&truncated).is_err());
        assert!(read_solution(&format!("{text}1.0\n")).is_err());
    }
}
