use super::{Antiunitary, SymmetryError};
use crate::linalg::{random::random_orthogonal, ComplexMatrix, RealMatrix, C64};
use crate::povm::Povm;
use crate::rng::stream;

/// Reference basis of a conjugation rotated by a real orthogonal matrix:
/// `w'_k = sum_j w_j R_jk`.
pub fn invariant_basis(
    theta: &Antiunitary,
    rotation: Option<&RealMatrix>,
) -> Result<Vec<Vec<C64>>, SymmetryError> {
    let w = theta.reference_basis()?;
    let Some(r) = rotation else {
        return Ok(w);
    };
    let d = w.len();
    Ok((0..d)
        .map(|k| {
            (0..d)
                .map(|i| (0..d).map(|j| w[j][i] * r[j][k]).sum())
                .collect()
        })
        .collect())
}

/// Uniform mixture of `copies` rotated reference bases of `theta`, each
/// projector weighted `1/copies`.
///
/// With `seed = None` the first copy is the unrotated reference basis and later
/// copies use rotations from seed 0. With a seed every copy is rotated; copy `c`
/// draws from stream `c` of the seed.
pub fn invariant_povm(
    theta: &Antiunitary,
    copies: usize,
    seed: Option<u64>,
) -> Result<Povm, SymmetryError> {
    if copies == 0 {
        return Err(SymmetryError::NoCopies);
    }
    if !theta.is_conjugation() {
        return Err(SymmetryError::NotConjugation {
            defect: theta.conjugation_defect(),
        });
    }
    let d = theta.dim();
    let weight = 1.0 / copies as f64;
    let mut elements = Vec::with_capacity(copies * d);
    let mut labels = Vec::with_capacity(copies * d);
    for c in 0..copies {
        let basis = match seed {
            None if c == 0 => invariant_basis(theta, None)?,
            _ => {
                let r = random_orthogonal(d, &mut stream(seed.unwrap_or(0), c as u64));
                invariant_basis(theta, Some(&r))?
            }
        };
        for (k, v) in basis.iter().enumerate() {
            elements.push(ComplexMatrix::projector(v).scale_re(weight));
            labels.push(format!("c{c}:{k}"));
        }
    }
    // Completeness holds by construction up to rounding; validate anyway.
    Povm::new(elements, labels).map_err(|_| SymmetryError::NotConjugation {
        defect: theta.conjugation_defect(),
    })
}
