use nalgebra::DMatrix;

use super::clebsch_gordan::{clebsch_gordan, MAX_CG_DEGREE};
use super::rotation::Rotation;
use crate::error::{argument, Result};

/// Real Wigner-D block of one degree: the `(2L+1)×(2L+1)` orthogonal matrix
/// acting on type-`L` vectors in the basis of [`super::harmonics`], so that
/// `Y(R r̂) = D(R) Y(r̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerBlock {
    degree: usize,
    matrix: DMatrix<f64>,
}

impl WignerBlock {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn transpose(&self) -> WignerBlock {
        WignerBlock {
            degree: self.degree,
            matrix: self.matrix.transpose(),
        }
    }
}

/// Wigner block of degree `l` for `rotation`.
///
/// Improper or non-orthogonal matrices are rejected when the [`Rotation`] is
/// constructed, so any `Rotation` reaching this point is valid.
pub fn wigner_d(rotation: &Rotation, l: usize) -> Result<WignerBlock> {
    let mut all = wigner_d_all(rotation, l)?;
    Ok(all.pop().expect("at least degree 0"))
}

/// Wigner blocks for every degree `0..=l_max`.
///
/// `D⁽⁰⁾ = [1]`, `D⁽¹⁾ = R` (the real basis orders degree 1 as `(x, y, z)`),
/// and for `L ≥ 2`
///
/// ```text
/// D⁽ᴸ⁾ = Cᵀ (D⁽ᴸ⁻¹⁾ ⊗ D⁽¹⁾) C,   C = CG(L-1, 1, L)
/// ```
///
/// which holds because `C` is an isometric intertwiner.
pub fn wigner_d_all(rotation: &Rotation, l_max: usize) -> Result<Vec<WignerBlock>> {
    if l_max > MAX_CG_DEGREE {
        return Err(argument(format!(
            "Wigner degree {l_max} exceeds the supported maximum {MAX_CG_DEGREE}"
        )));
    }
    let mut blocks = Vec::with_capacity(l_max + 1);
    blocks.push(WignerBlock {
        degree: 0,
        matrix: DMatrix::from_element(1, 1, 1.0),
    });
    if l_max == 0 {
        return Ok(blocks);
    }
    let r = rotation.matrix();
    let d1 = DMatrix::from_fn(3, 3, |i, j| r[(i, j)]);
    blocks.push(WignerBlock {
        degree: 1,
        matrix: d1.clone(),
    });

    for l in 2..=l_max {
        let cg = clebsch_gordan(l - 1, 1, l)?;
        let dim = 2 * l + 1;
        // group non-zeros by output component
        let mut columns: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); dim];
        for &(a, b, c, v) in cg.nonzeros() {
            columns[c].push((a, b, v));
        }
        let prev = &blocks[l - 1].matrix;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, col_c) in columns.iter().enumerate() {
            for (cp, col_cp) in columns.iter().enumerate() {
                let mut acc = 0.0;
                for &(a, b, v) in col_c {
                    for &(ap, bp, vp) in col_cp {
                        acc += v * prev[(a, ap)] * d1[(b, bp)] * vp;
                    }
                }
                m[(c, cp)] = acc;
            }
        }
        blocks.push(WignerBlock { degree: l, matrix: m });
    }
    Ok(blocks)
}
