//! DIMACS cnf interop for offloading queries to external solvers.
//! UNSAT cores are not emitted.

use super::{Cnf, Lit};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
    #[error("missing \"p cnf\" header")]
    MissingHeader,
    #[error("literal {0} exceeds declared variable count {1}")]
    LiteralOutOfRange(i32, u32),
}

/// Emit standard DIMACS: `p cnf V C` header, one clause per line.
pub fn emit_dimacs(cnf: &Cnf) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len()));
    for clause in &cnf.clauses {
        for l in clause {
            out.push_str(&format!("{} ", l.to_dimacs()));
        }
        out.push_str("0\n");
    }
    out.into_bytes()
}

/// Parse DIMACS bytes into a CNF.
pub fn parse_dimacs(bytes: &[u8]) -> Result<Cnf, DimacsError> {
    let text = String::from_utf8_lossy(bytes);
    let mut cnf = Cnf::new();
    let mut header: Option<(u32, usize)> = None;
    let mut current: Vec<Lit> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(DimacsError::Malformed(lineno + 1, format!("bad header {line:?}")));
            }
            let v = parts[2]
                .parse::<u32>()
                .map_err(|e| DimacsError::Malformed(lineno + 1, e.to_string()))?;
            let c = parts[3]
                .parse::<usize>()
                .map_err(|e| DimacsError::Malformed(lineno + 1, e.to_string()))?;
            header = Some((v, c));
            cnf.num_vars = v;
            continue;
        }
        let (num_vars, _) = header.ok_or(DimacsError::MissingHeader)?;
        for tok in line.split_whitespace() {
            let v: i32 = tok
                .parse()
                .map_err(|e: std::num::ParseIntError| DimacsError::Malformed(lineno + 1, e.to_string()))?;
            match Lit::from_dimacs(v) {
                None => cnf.clauses.push(std::mem::take(&mut current)),
                Some(l) => {
                    if l.var() > num_vars {
                        return Err(DimacsError::LiteralOutOfRange(v, num_vars));
                    }
                    current.push(l);
                }
            }
        }
    }
    if header.is_none() {
        return Err(DimacsError::MissingHeader);
    }
    if !current.is_empty() {
        return Err(DimacsError::Malformed(0, "clause not terminated by 0".into()));
    }
    Ok(cnf)
}
