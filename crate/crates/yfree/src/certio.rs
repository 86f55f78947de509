//! Line-oriented text format for certificates.
//!
//! The layout is a fixed-order key-value tree so serialized certificates
//! diff cleanly. `parse_certificate` is strict: fields must appear in
//! serialization order and every line is validated, with errors carrying
//! 1-based line numbers. The header records that the certified count is
//! taken over `F = A ∩ I(n)^π`.

use crate::cyclic::{CyclicPermutation, Direction};
use crate::grouping::{
    CertificateGraph, ChainId, CycleCertificate, GroupKind, Grouping,
};
use crate::{Error, Result};

const HEADER: &str = "certificate v1";
const F_NOTE: &str = "intersection(family, intervals(n, pi))";

/// Serializes a certificate; [`parse_certificate`] inverts this exactly.
pub fn serialize_certificate(cert: &CycleCertificate) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(&format!("n {}\n", cert.n));
    out.push_str(&format!("k {}\n", cert.k));
    out.push_str(&format!("pi {}\n", cert.pi));
    out.push_str(&format!("f {F_NOTE}\n"));
    out.push_str(&format!("count {}\n", cert.count));
    out.push_str(&format!("bound {}\n", cert.bound));
    out.push_str(&format!("total-weight {}\n", cert.total_weight));
    out.push_str(&format!("groupings {}\n", cert.groupings.len()));
    for (gi, g) in cert.groupings.iter().enumerate() {
        out.push_str(&format!("grouping {gi}\n"));
        out.push_str(&format!("kind {}\n", g.kind.number()));
        out.push_str(&format!("h {}\n", g.h_first));
        if let Some(r) = g.r {
            out.push_str(&format!("r {r}\n"));
        }
        out.push_str(&format!("weight {}\n", g.weight));
        out.push_str(&format!("chains {}\n", g.chains.len()));
        for (ci, id) in g.chains.iter().enumerate() {
            out.push_str(&format!("chain {id}"));
            if g.kind == GroupKind::Type3 {
                out.push_str(&format!(" m {}", g.m[ci]));
                if ci < g.t.len() {
                    out.push_str(&format!(" t {}", g.t[ci]));
                }
            }
            out.push('\n');
        }
    }
    out.push_str(&format!("edges {}\n", cert.graph.edges.len()));
    for (from, to) in &cert.graph.edges {
        out.push_str(&format!("edge {from} {to}\n"));
    }
    out.push_str(&format!("ungrouped {}\n", cert.ungrouped.len()));
    for id in &cert.ungrouped {
        out.push_str(&format!("chain {id}\n"));
    }
    out.push_str("end\n");
    out
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate(),
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (idx, raw) in self.lines.by_ref() {
            let line = raw.trim();
            if !line.is_empty() {
                return Ok((idx + 1, line));
            }
        }
        Err(Error::parse(0, "unexpected end of certificate"))
    }

    fn expect_literal(&mut self, lit: &str) -> Result<()> {
        let (no, line) = self.next_line()?;
        if line != lit {
            return Err(Error::parse(no, format!("expected {lit:?}, found {line:?}")));
        }
        Ok(())
    }

    fn expect_value(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (no, line) = self.next_line()?;
        match line.split_once(' ') {
            Some((head, rest)) if head == key => Ok((no, rest.trim())),
            _ => Err(Error::parse(
                no,
                format!("expected \"{key} <value>\", found {line:?}"),
            )),
        }
    }

    fn expect_int<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (no, value) = self.expect_value(key)?;
        value
            .parse()
            .map_err(|_| Error::parse(no, format!("invalid {key} value {value:?}")))
    }

    fn done(&mut self) -> Result<()> {
        if let Some((idx, raw)) = self.lines.by_ref().find(|(_, l)| !l.trim().is_empty()) {
            return Err(Error::parse(
                idx + 1,
                format!("trailing content {:?}", raw.trim()),
            ));
        }
        Ok(())
    }
}

fn parse_chain_tokens(no: usize, n: u32, tokens: &[&str]) -> Result<ChainId> {
    if tokens.len() != 2 {
        return Err(Error::parse(no, "chain takes a direction and an anchor"));
    }
    let direction = Direction::parse(tokens[0]).map_err(|e| Error::parse(no, e.to_string()))?;
    let anchor: u32 = tokens[1]
        .parse()
        .map_err(|_| Error::parse(no, format!("invalid anchor {:?}", tokens[1])))?;
    if anchor < 1 || anchor > n {
        return Err(Error::parse(no, format!("anchor {anchor} out of range 1..={n}")));
    }
    Ok(ChainId::new(direction, anchor))
}

/// Parses the certificate text format.
pub fn parse_certificate(text: &str) -> Result<CycleCertificate> {
    let mut r = Reader::new(text);
    r.expect_literal(HEADER)?;
    let n: u32 = r.expect_int("n")?;
    if !(2..=63).contains(&n) {
        return Err(Error::parse(2, format!("n {n} out of range 2..=63")));
    }
    let k: u32 = r.expect_int("k")?;
    let (pi_no, pi_text) = r.expect_value("pi")?;
    let pi = CyclicPermutation::parse(n, pi_text).map_err(|e| Error::parse(pi_no, e.to_string()))?;
    let (f_no, f_note) = r.expect_value("f")?;
    if f_note != F_NOTE {
        return Err(Error::parse(f_no, format!("expected f {F_NOTE}")));
    }
    let count: usize = r.expect_int("count")?;
    let bound: usize = r.expect_int("bound")?;
    let total_weight: i64 = r.expect_int("total-weight")?;
    let grouping_count: usize = r.expect_int("groupings")?;
    if grouping_count > 2 * n as usize {
        return Err(Error::parse(0, format!("{grouping_count} groupings cannot fit 2n chains")));
    }
    let mut groupings = Vec::with_capacity(grouping_count);
    for gi in 0..grouping_count {
        let idx: usize = r.expect_int("grouping")?;
        if idx != gi {
            return Err(Error::parse(0, format!("grouping {idx} out of order, expected {gi}")));
        }
        let kind = GroupKind::from_number(r.expect_int("kind")?)
            .map_err(|e| Error::parse(0, e.to_string()))?;
        let h_first: usize = r.expect_int("h")?;
        let r_param: Option<usize> = if kind == GroupKind::Type3 {
            None
        } else {
            Some(r.expect_int("r")?)
        };
        let weight: i64 = r.expect_int("weight")?;
        let chain_count: usize = r.expect_int("chains")?;
        if chain_count == 0 || chain_count > 2 * n as usize {
            return Err(Error::parse(0, format!("grouping {gi} has a bad chain count")));
        }
        let mut chains = Vec::with_capacity(chain_count);
        let mut m = Vec::new();
        let mut t = Vec::new();
        for ci in 0..chain_count {
            let (no, rest) = r.expect_value("chain")?;
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if kind == GroupKind::Type3 {
                if tokens.len() != 4 && tokens.len() != 6 {
                    return Err(Error::parse(no, "type 3 chain takes m and optionally t"));
                }
                chains.push(parse_chain_tokens(no, n, &tokens[..2])?);
                if tokens[2] != "m" {
                    return Err(Error::parse(no, "expected m after the chain id"));
                }
                let mv: usize = tokens[3]
                    .parse()
                    .map_err(|_| Error::parse(no, format!("invalid m value {:?}", tokens[3])))?;
                m.push(mv);
                if tokens.len() == 6 {
                    if tokens[4] != "t" {
                        return Err(Error::parse(no, "expected t after m"));
                    }
                    if t.len() != ci {
                        return Err(Error::parse(no, "t may only be omitted on the last chain"));
                    }
                    let tv: usize = tokens[5].parse().map_err(|_| {
                        Error::parse(no, format!("invalid t value {:?}", tokens[5]))
                    })?;
                    t.push(tv);
                }
            } else {
                chains.push(parse_chain_tokens(no, n, &tokens)?);
            }
        }
        groupings.push(Grouping {
            kind,
            chains,
            h_first,
            r: r_param,
            m,
            t,
            weight,
        });
    }
    let edge_count: usize = r.expect_int("edges")?;
    if edge_count > grouping_count {
        return Err(Error::parse(0, "more edges than groupings"));
    }
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let (no, rest) = r.expect_value("edge")?;
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::parse(no, "edge takes two grouping indices"));
        }
        let from: usize = tokens[0]
            .parse()
            .map_err(|_| Error::parse(no, format!("invalid edge source {:?}", tokens[0])))?;
        let to: usize = tokens[1]
            .parse()
            .map_err(|_| Error::parse(no, format!("invalid edge target {:?}", tokens[1])))?;
        if from >= grouping_count || to >= grouping_count {
            return Err(Error::parse(no, "edge names a missing grouping"));
        }
        edges.push((from, to));
    }
    let ungrouped_count: usize = r.expect_int("ungrouped")?;
    if ungrouped_count > 2 * n as usize {
        return Err(Error::parse(0, "more ungrouped chains than chains"));
    }
    let mut ungrouped = Vec::with_capacity(ungrouped_count);
    for _ in 0..ungrouped_count {
        let (no, rest) = r.expect_value("chain")?;
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        ungrouped.push(parse_chain_tokens(no, n, &tokens)?);
    }
    r.expect_literal("end")?;
    r.done()?;
    Ok(CycleCertificate {
        n,
        k,
        pi,
        count,
        bound,
        total_weight,
        groupings,
        graph: CertificateGraph { edges },
        ungrouped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::{build_certificate, CertifyOutcome};
    use crate::lattice::{GroundSet, SetFamily, SubsetWord};

    fn demo_cert() -> (CycleCertificate, SetFamily) {
        let g = GroundSet::new(6).unwrap();
        let sets: [&[u32]; 4] = [&[1], &[1, 2], &[1, 2, 3], &[1, 2, 3, 4]];
        let a = SetFamily::new(g, sets.iter().map(|s| SubsetWord::from_elements(s))).unwrap();
        let pi = CyclicPermutation::identity(6).unwrap();
        match build_certificate(&a, 3, &pi).unwrap() {
            CertifyOutcome::Certificate(c) => (c, a),
            CertifyOutcome::Violation(v) => panic!("{}", v.provenance),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let (cert, _) = demo_cert();
        let text = serialize_certificate(&cert);
        let back = parse_certificate(&text).unwrap();
        assert_eq!(back, cert);
        assert_eq!(serialize_certificate(&back), text);
    }

    #[test]
    fn serialized_form_is_stable() {
        let (cert, _) = demo_cert();
        let text = serialize_certificate(&cert);
        assert!(text.starts_with("certificate v1\nn 6\nk 3\npi id\n"));
        assert!(text.contains("\ngroupings 1\ngrouping 0\nkind 3\nh 0\nweight -1\nchains 2\n"));
        assert!(text.contains("\nchain asc 1 m 3 t 1\nchain desc 3 m 2\n"));
        assert!(text.ends_with("end\n"));
    }

    #[test]
    fn parser_rejects_malformed_text() {
        let (cert, _) = demo_cert();
        let text = serialize_certificate(&cert);
        assert!(parse_certificate("").is_err());
        assert!(parse_certificate("certificate v2\n").is_err());
        assert!(parse_certificate(&text.replace("kind 3", "kind 9")).is_err());
        assert!(parse_certificate(&text.replace("chain asc 1 m 3 t 1", "chain asc 99 m 3 t 1")).is_err());
        assert!(parse_certificate(&text.replace("end\n", "")).is_err());
        assert!(parse_certificate(&format!("{text}garbage\n")).is_err());
        // a numeric edit still parses; rejection is the verifier's job
        let edited = text.replace("weight -1", "weight 7");
        assert!(parse_certificate(&edited).is_ok());
    }
}
