//! Plain-text affine pair files.
//!
//! ```text
//! # comments and blank lines are ignored
//! 2
//! 0.5 0   0
//! 0   0.5 0
//! 0.5 0   0.5
//! 0   0.5 0.5
//! ```
//!
//! The first line holds the dimension `d`; then come `d` rows of `d + 1`
//! numbers (linear part, then translation) for `A0`, and `d` more for `A1`.

use crate::error::{Error, Result};
use crate::fractal::{operator_from_rows, AffinePair};

pub fn parse_pair(text: &str) -> Result<AffinePair> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Parse("pair file is empty".into()))?;
    let d: usize = first
        .parse()
        .ok()
        .filter(|d| (1..=64).contains(d))
        .ok_or_else(|| Error::Parse(format!("'{first}' is not a dimension between 1 and 64")))?;
    let mut block = || -> Result<Vec<Vec<f64>>> {
        (0..d)
            .map(|_| {
                let (no, line) = lines
                    .next()
                    .ok_or_else(|| Error::Parse("pair file ends early".into()))?;
                let row = line
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| {
                                Error::Parse(format!("line {}: '{t}' is not a number", no + 1))
                            })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if row.len() != d + 1 {
                    return Err(Error::Parse(format!(
                        "line {}: expected {} numbers, found {}",
                        no + 1,
                        d + 1,
                        row.len()
                    )));
                }
                Ok(row)
            })
            .collect()
    };
    let a0 = operator_from_rows(&block()?)?;
    let a1 = operator_from_rows(&block()?)?;
    if let Some((no, _)) = lines.next() {
        return Err(Error::Parse(format!(
            "line {}: unexpected trailing data",
            no + 1
        )));
    }
    AffinePair::new(a0, a1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = "# halves\n2\n0.5 0 0\n0 0.5 0\n\n0.5,0,0.5\n0 0.5 0.5\n";
        let p = parse_pair(text).unwrap();
        assert_eq!(p.dimension(), 2);
        assert_eq!(p.a1.translation.as_slice(), &[0.5, 0.5]);
        assert_eq!(p.a0.linear[(1, 1)], 0.5);
    }

    #[test]
    fn rejects_malformed_files() {
        for bad in [
            "",
            "x",
            "0",
            "1\n0.5 0\n",
            "1\n0.5\n0.5 1\n",
            "1\n0.5 0\n0.5 a\n",
            "1\n1 0\n1 0\n1 0\n",
        ] {
            assert!(matches!(parse_pair(bad), Err(Error::Parse(_))), "{bad:?}");
        }
    }
}
