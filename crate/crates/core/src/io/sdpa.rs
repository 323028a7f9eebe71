//! SDPA sparse format (.dat-s) reader and canonical writer.
//!
//! The container describes `min Σ cⱼxⱼ s.t. Σ xⱼFⱼ − F₀ ⪰ 0`. Mapping
//! `Aⱼ = −Fⱼ, C = −F₀, b = −c` turns this into the dual standard form
//! `max ⟨b,y⟩ s.t. A*(y) + Z = C`, so the reported ⟨b,y⟩ equals the negated
//! SDPA objective. Multiple blocks are concatenated into one cone with
//! block-diagonal sparsity; the chordal decomposition recovers them as
//! cliques automatically.

use std::collections::HashSet;

use crate::decomposition::SdpProblem;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SdpaError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    IndexOutOfBlock { line: usize, message: String },
    #[error("line {line}: duplicate entry (matrix {mat}, block {block}, {i}, {j})")]
    DuplicateEntry {
        line: usize,
        mat: usize,
        block: usize,
        i: usize,
        j: usize,
    },
}

/// One coefficient line: `matno blkno i j value` with 1-based indices and
/// `i ≤ j`; `matno = 0` addresses F₀.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaEntry {
    pub mat: usize,
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Raw parsed contents of a .dat-s file. This is the lossless container;
/// [`SdpaFile::to_problem`] applies the sign mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaFile {
    pub num_constraints: usize,
    /// Negative size marks a diagonal block.
    pub block_sizes: Vec<i64>,
    /// SDPA objective vector (length `num_constraints`).
    pub objective: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

fn is_comment(line: &str) -> bool {
    matches!(line.trim_start().chars().next(), Some('"') | Some('*'))
}

/// SDPA allows `,` `(` `)` `{` `}` as separators in the header lines.
fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '(' | ')' | '{' | '}'))
        .filter(|t| !t.is_empty())
        .collect()
}

impl SdpaFile {
    pub fn parse(text: &str) -> Result<Self, SdpaError> {
        let mut data_lines = text
            .lines()
            .enumerate()
            .map(|(idx, line)| (idx + 1, line))
            .filter(|(_, line)| !is_comment(line) && !line.trim().is_empty());

        let mut next_line = |what: &str| {
            data_lines.next().ok_or_else(|| SdpaError::Parse {
                line: text.lines().count() + 1,
                message: format!("unexpected end of file, expected {what}"),
            })
        };

        let (line_no, line) = next_line("the number of constraint matrices")?;
        let num_constraints: usize = parse_first(line, line_no, "number of constraints")?;

        let (line_no, line) = next_line("the number of blocks")?;
        let num_blocks: usize = parse_first(line, line_no, "number of blocks")?;

        let (line_no, line) = next_line("the block sizes")?;
        let block_sizes = parse_numbers::<i64>(line, line_no, num_blocks, "block size")?;
        if block_sizes.contains(&0) {
            return Err(SdpaError::Parse {
                line: line_no,
                message: "block size must be nonzero".into(),
            });
        }

        let (line_no, line) = next_line("the objective vector")?;
        let objective = parse_numbers::<f64>(line, line_no, num_constraints, "objective value")?;

        let mut entries = Vec::new();
        let mut seen: HashSet<(usize, usize, usize, usize)> = HashSet::new();
        for (line_no, line) in data_lines {
            let toks = tokens(line);
            if toks.len() != 5 {
                return Err(SdpaError::Parse {
                    line: line_no,
                    message: format!("expected 5 fields (matno blkno i j value), got {}", toks.len()),
                });
            }
            let mat: usize = parse_token(toks[0], line_no, "matrix number")?;
            let block: usize = parse_token(toks[1], line_no, "block number")?;
            let i: usize = parse_token(toks[2], line_no, "row index")?;
            let j: usize = parse_token(toks[3], line_no, "column index")?;
            let value: f64 = parse_token(toks[4], line_no, "value")?;

            if mat > num_constraints {
                return Err(SdpaError::Parse {
                    line: line_no,
                    message: format!("matrix number {mat} exceeds {num_constraints}"),
                });
            }
            if block == 0 || block > num_blocks {
                return Err(SdpaError::IndexOutOfBlock {
                    line: line_no,
                    message: format!("block number {block} not in 1..={num_blocks}"),
                });
            }
            if i == 0 || j == 0 || i > j {
                return Err(SdpaError::Parse {
                    line: line_no,
                    message: format!("indices must satisfy 1 ≤ i ≤ j, got ({i}, {j})"),
                });
            }
            let size = block_sizes[block - 1];
            let side = size.unsigned_abs() as usize;
            if j > side {
                return Err(SdpaError::IndexOutOfBlock {
                    line: line_no,
                    message: format!("entry ({i}, {j}) outside block {block} of size {side}"),
                });
            }
            if size < 0 && i != j {
                return Err(SdpaError::IndexOutOfBlock {
                    line: line_no,
                    message: format!(
                        "off-diagonal entry ({i}, {j}) in diagonal block {block}"
                    ),
                });
            }
            if !seen.insert((mat, block, i, j)) {
                return Err(SdpaError::DuplicateEntry {
                    line: line_no,
                    mat,
                    block,
                    i,
                    j,
                });
            }
            entries.push(SdpaEntry {
                mat,
                block,
                i,
                j,
                value,
            });
        }

        Ok(Self {
            num_constraints,
            block_sizes,
            objective,
            entries,
        })
    }

    /// Total cone side after block concatenation.
    pub fn n(&self) -> usize {
        self.block_sizes.iter().map(|s| s.unsigned_abs() as usize).sum()
    }

    pub fn m(&self) -> usize {
        self.num_constraints
    }

    fn block_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.block_sizes.len());
        let mut acc = 0usize;
        for &s in &self.block_sizes {
            offsets.push(acc);
            acc += s.unsigned_abs() as usize;
        }
        offsets
    }

    /// Canonical re-emission: entries sorted by (matno, blkno, i, j), values
    /// in shortest round-trip decimal form. Stable under parse → emit cycles.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.num_constraints));
        out.push_str(&format!("{}\n", self.block_sizes.len()));
        out.push_str(
            &self
                .block_sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        out.push('\n');
        out.push_str(
            &self
                .objective
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        out.push('\n');
        let mut sorted: Vec<&SdpaEntry> = self.entries.iter().collect();
        sorted.sort_by_key(|e| (e.mat, e.block, e.i, e.j));
        for e in sorted {
            out.push_str(&format!("{} {} {} {} {}\n", e.mat, e.block, e.i, e.j, e.value));
        }
        out
    }

    /// Applies the sign mapping and concatenates blocks into one cone.
    pub fn to_problem(&self) -> SdpProblem {
        let offsets = self.block_offsets();
        let n = self.n();
        let mut c_trips: Vec<(usize, usize, f64)> = Vec::new();
        let mut a_trips: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); self.num_constraints];
        for e in &self.entries {
            let off = offsets[e.block - 1];
            let (gi, gj) = (off + e.i - 1, off + e.j - 1);
            if e.mat == 0 {
                c_trips.push((gi, gj, -e.value));
            } else {
                a_trips[e.mat - 1].push((gi, gj, -e.value));
            }
        }
        let b: Vec<f64> = self.objective.iter().map(|&v| -v).collect();
        SdpProblem::from_triplets(n, &c_trips, &a_trips, b)
            .expect("pattern is built from the same entries")
    }
}

fn parse_first<T: std::str::FromStr>(
    line: &str,
    line_no: usize,
    what: &str,
) -> Result<T, SdpaError> {
    let toks = tokens(line);
    let tok = toks.first().ok_or_else(|| SdpaError::Parse {
        line: line_no,
        message: format!("missing {what}"),
    })?;
    parse_token(tok, line_no, what)
}

fn parse_numbers<T: std::str::FromStr>(
    line: &str,
    line_no: usize,
    count: usize,
    what: &str,
) -> Result<Vec<T>, SdpaError> {
    let toks = tokens(line);
    let mut out = Vec::with_capacity(count);
    for tok in toks {
        if out.len() == count {
            break;
        }
        out.push(parse_token(tok, line_no, what)?);
    }
    if out.len() != count {
        return Err(SdpaError::Parse {
            line: line_no,
            message: format!("expected {count} {what}s, found {}", out.len()),
        });
    }
    Ok(out)
}

fn parse_token<T: std::str::FromStr>(
    tok: &str,
    line_no: usize,
    what: &str,
) -> Result<T, SdpaError> {
    tok.parse().map_err(|_| SdpaError::Parse {
        line: line_no,
        message: format!("invalid {what}: '{tok}'"),
    })
}

/// Parses a .dat-s text into the solver's internal problem form.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem, SdpaError> {
    Ok(SdpaFile::parse(text)?.to_problem())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "1\n1\n2\n10.0\n0 1 1 1 1.0\n0 1 2 2 2.0\n1 1 1 1 1.0\n";

    #[test]
    fn minimal_file_maps_signs() {
        let file = SdpaFile::parse(MINIMAL).unwrap();
        assert_eq!(file.m(), 1);
        assert_eq!(file.n(), 2);
        let p = file.to_problem();
        assert_eq!(p.n(), 2);
        assert_eq!(p.m(), 1);
        assert_eq!(p.b(), &[-10.0]);
        // C = -diag(1, 2) over the diagonal-only pattern.
        assert_eq!(p.c().as_slice(), &[-1.0, -2.0]);
        // A₁ = -e₁e₁ᵀ.
        assert_eq!(p.a().rows()[0], vec![(0, -1.0)]);
    }

    #[test]
    fn comments_and_punctuation_are_tolerated() {
        let text = "\"a comment\n* another\n2 =mDIM\n2\n{2, -2}\n1.0, 2.0\n0 1 1 2 1.5\n1 2 1 1 1.0\n";
        let file = SdpaFile::parse(text).unwrap();
        assert_eq!(file.num_constraints, 2);
        assert_eq!(file.block_sizes, vec![2, -2]);
        assert_eq!(file.objective, vec![1.0, 2.0]);
        assert_eq!(file.entries.len(), 2);
    }

    #[test]
    fn diagonal_block_rejects_off_diagonal_entries() {
        let text = "1\n1\n-2\n1.0\n0 1 1 2 1.0\n";
        let err = SdpaFile::parse(text).unwrap_err();
        assert!(matches!(err, SdpaError::IndexOutOfBlock { line: 5, .. }));
    }

    #[test]
    fn out_of_block_index_is_reported() {
        let text = "1\n1\n2\n1.0\n0 1 1 3 1.0\n";
        let err = SdpaFile::parse(text).unwrap_err();
        assert!(matches!(err, SdpaError::IndexOutOfBlock { line: 5, .. }));
    }

    #[test]
    fn duplicate_entries_are_rejected() {
        let text = "1\n1\n2\n1.0\n0 1 1 1 1.0\n0 1 1 1 2.0\n";
        let err = SdpaFile::parse(text).unwrap_err();
        assert_eq!(
            err,
            SdpaError::DuplicateEntry {
                line: 6,
                mat: 0,
                block: 1,
                i: 1,
                j: 1
            }
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "1\n1\n2\n1.0\n0 1 1 1\n";
        match SdpaFile::parse(text).unwrap_err() {
            SdpaError::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn truncated_header_is_a_parse_error() {
        assert!(matches!(
            SdpaFile::parse("2\n1\n").unwrap_err(),
            SdpaError::Parse { .. }
        ));
    }

    #[test]
    fn blocks_concatenate_with_offsets() {
        let text = "1\n2\n2 2\n1.0\n0 2 1 2 3.0\n1 1 1 1 1.0\n";
        let p = SdpaFile::parse(text).unwrap().to_problem();
        assert_eq!(p.n(), 4);
        // Block 2 entry (1,2) lands at global (2,3).
        assert!(p.pattern().contains(2, 3));
        assert!(!p.pattern().contains(1, 2));
    }

    #[test]
    fn canonical_emission_is_stable() {
        let text = "\"c\n1\n1\n2\n10.0\n1 1 1 1 1.0\n0 1 2 2 2.0\n0 1 1 1 1.0\n";
        let once = SdpaFile::parse(text).unwrap().to_canonical_string();
        let twice = SdpaFile::parse(&once).unwrap().to_canonical_string();
        assert_eq!(once, twice);
        assert!(once.starts_with("1\n1\n2\n10\n0 1 1 1 1\n"));
    }
}
