//! The nine worked example masks.

use crate::criteria::Overall;
use crate::error::{Error, Result};
use crate::scheme::Mask;

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub coefficients: &'static [f64],
    pub dyadic: Overall,
    /// `None` where the behaviour on the line is not stated.
    pub classical: Option<Overall>,
    pub note: &'static str,
}

impl Preset {
    pub fn mask(&self) -> Mask {
        Mask::new(self.coefficients.to_vec()).expect("preset masks are valid")
    }
}

const E: f64 = 0.125;

pub const PRESETS: [Preset; 9] = [
    Preset {
        name: "ex1",
        coefficients: &[0.3, 0.1, 0.7, 0.9],
        dyadic: Overall::Converges,
        classical: Some(Overall::Converges),
        note: "positive mask; support [0,2] dyadic, [0,3] classical",
    },
    Preset {
        name: "ex2",
        coefficients: &[0.6, 0.9, 0.4, 0.1],
        dyadic: Overall::Converges,
        classical: None,
        note: "positive mask",
    },
    Preset {
        name: "ex3",
        coefficients: &[0.6, 1.1, 0.4, -0.1],
        dyadic: Overall::Converges,
        classical: None,
        note: "one negative coefficient",
    },
    Preset {
        name: "ex4",
        coefficients: &[0.25, 0.75, 0.75, 0.25],
        dyadic: Overall::Converges,
        classical: Some(Overall::Converges),
        note: "corner cutting",
    },
    Preset {
        name: "ex5",
        coefficients: &[2.6, 0.7, -1.6, 0.3],
        dyadic: Overall::Diverges,
        classical: Some(Overall::Diverges),
        note: "divergent",
    },
    Preset {
        name: "ex6",
        coefficients: &[0.4, -0.1, 0.6, 1.1],
        dyadic: Overall::Converges,
        classical: Some(Overall::Diverges),
        note: "diverges on the line, converges on the half-line",
    },
    Preset {
        name: "ex7",
        coefficients: &[0.25; 8],
        dyadic: Overall::Converges,
        classical: None,
        note: "eight equal coefficients",
    },
    Preset {
        name: "ex8",
        coefficients: &[E, 3.0 * E, E, 3.0 * E, 3.0 * E, E, 3.0 * E, E],
        dyadic: Overall::Converges,
        classical: None,
        note: "eight coefficients",
    },
    Preset {
        name: "ex9",
        coefficients: &[
            1.0, E, 0.0, E, 0.0, E, 0.0, E, 0.0, E, 0.0, E, 0.0, E, 0.0, E,
        ],
        dyadic: Overall::Converges,
        classical: None,
        note: "interpolatory, sixteen coefficients",
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name.trim()))
        .ok_or_else(|| Error::Parse(format!("unknown preset '{name}' (try ex1..ex9)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_are_pinned() {
        let expected: [&[f64]; 9] = [
            &[0.3, 0.1, 0.7, 0.9],
            &[0.6, 0.9, 0.4, 0.1],
            &[0.6, 1.1, 0.4, -0.1],
            &[0.25, 0.75, 0.75, 0.25],
            &[2.6, 0.7, -1.6, 0.3],
            &[0.4, -0.1, 0.6, 1.1],
            &[0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25],
            &[0.125, 0.375, 0.125, 0.375, 0.375, 0.125, 0.375, 0.125],
            &[
                1.0, 0.125, 0.0, 0.125, 0.0, 0.125, 0.0, 0.125, 0.0, 0.125, 0.0, 0.125, 0.0, 0.125,
                0.0, 0.125,
            ],
        ];
        for (p, c) in PRESETS.iter().zip(expected) {
            assert_eq!(p.coefficients, c, "{}", p.name);
            assert!(!p.mask().is_padded());
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(find("EX4").unwrap().name, "ex4");
        assert!(find("ex10").is_err());
    }
}
