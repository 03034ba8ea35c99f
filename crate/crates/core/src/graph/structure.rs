use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::error::{Error, Result};

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Largest supported atomic number.
pub const MAX_ATOMIC_NUMBER: u8 = 118;

/// Atomic number for an element symbol (case-insensitive).
pub fn atomic_number(symbol: &str) -> Option<u8> {
    SYMBOLS
        .iter()
        .position(|s| s.eq_ignore_ascii_case(symbol))
        .map(|i| i as u8 + 1)
}

/// Element symbol of an atomic number in `1..=118`.
pub fn element_symbol(z: u8) -> Option<&'static str> {
    (1..=MAX_ATOMIC_NUMBER)
        .contains(&z)
        .then(|| SYMBOLS[z as usize - 1])
}

/// Atoms with positions in Å.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicStructure {
    pub species: Vec<u8>,
    pub positions: Vec<Vector3<f64>>,
    pub comment: String,
}

impl AtomicStructure {
    pub fn new(species: Vec<u8>, positions: Vec<Vector3<f64>>) -> Result<AtomicStructure> {
        let s = AtomicStructure {
            species,
            positions,
            comment: String::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.species.len() != self.positions.len() {
            return Err(Error::Argument(format!(
                "{} species for {} positions",
                self.species.len(),
                self.positions.len()
            )));
        }
        if let Some(z) = self.species.iter().find(|z| !(1..=MAX_ATOMIC_NUMBER).contains(z)) {
            return Err(Error::Argument(format!("atomic number {z} outside 1..=118")));
        }
        if let Some(i) = self.positions.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite(format!("position of atom {i}")));
        }
        Ok(())
    }

    /// Render as XYZ text with the stored comment.
    pub fn to_xyz(&self) -> String {
        let mut out = format!("{}\n{}\n", self.len(), self.comment);
        for (z, p) in self.species.iter().zip(&self.positions) {
            let sym = element_symbol(*z).unwrap_or("X");
            let _ = writeln!(out, "{sym} {:.10} {:.10} {:.10}", p.x, p.y, p.z);
        }
        out
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parse the XYZ format: an atom count, a comment line, then one
/// `symbol x y z` row per atom (extra columns are ignored). Line numbers in
/// errors are 1-based; a file that ends early reports its last line.
pub fn parse_xyz(text: &str) -> Result<AtomicStructure> {
    let lines: Vec<&str> = text.lines().collect();
    let count_line = lines.first().ok_or_else(|| parse_error(1, "empty input"))?;
    let n: usize = count_line
        .trim()
        .parse()
        .map_err(|_| parse_error(1, format!("expected an atom count, found {count_line:?}")))?;
    let comment = lines.get(1).map(|s| s.to_string()).unwrap_or_default();

    let mut species = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    for k in 0..n {
        let idx = 2 + k;
        let Some(row) = lines.get(idx) else {
            return Err(parse_error(
                lines.len().max(1),
                format!("count line declares {n} atoms but only {k} rows follow"),
            ));
        };
        let line_no = idx + 1;
        let mut cols = row.split_whitespace();
        let sym = cols
            .next()
            .ok_or_else(|| parse_error(line_no, "expected an atom row, found a blank line"))?;
        let z = atomic_number(sym)
            .or_else(|| sym.parse::<u8>().ok().filter(|z| (1..=MAX_ATOMIC_NUMBER).contains(z)))
            .ok_or_else(|| parse_error(line_no, format!("unknown element {sym:?}")))?;
        let mut xyz = [0.0; 3];
        for (axis, v) in xyz.iter_mut().enumerate() {
            let tok = cols.next().ok_or_else(|| {
                parse_error(line_no, format!("missing coordinate {}", ["x", "y", "z"][axis]))
            })?;
            *v = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(line_no, format!("malformed number {tok:?}")))?;
        }
        species.push(z);
        positions.push(Vector3::from(xyz));
    }
    if let Some((i, _)) = lines
        .iter()
        .enumerate()
        .skip(2 + n)
        .find(|(_, l)| !l.trim().is_empty())
    {
        return Err(parse_error(
            i + 1,
            format!("count line declares {n} atoms but more rows follow"),
        ));
    }
    Ok(AtomicStructure {
        species,
        positions,
        comment,
    })
}
