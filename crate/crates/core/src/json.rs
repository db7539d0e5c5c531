//! Shared matrix JSON format: `{"dim": d, "re": [[..]], "im": [[..]]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};
use crate::state::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        assert!(m.is_square());
        let d = m.rows();
        let part = |f: fn(C64) -> f64| -> Vec<Vec<f64>> {
            (0..d).map(|r| (0..d).map(|c| f(m[(r, c)])).collect()).collect()
        };
        Self { dim: d, re: part(|z| z.re), im: part(|z| z.im) }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let d = self.dim;
        let check = |rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: rows.len() });
            }
            for row in rows {
                if row.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: row.len() });
                }
            }
            Ok(())
        };
        check(&self.re)?;
        check(&self.im)?;
        let data = (0..d * d).map(|k| C64::new(self.re[k / d][k % d], self.im[k / d][k % d])).collect();
        ComplexMatrix::new(d, d, data)
    }

    pub fn to_hermitian(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.to_matrix()?)
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_hermitian()?)
    }
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(h: &HermitianMatrix) -> Self {
        Self::from_matrix(h.matrix())
    }
}

impl From<&DensityMatrix> for MatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        Self::from_matrix(rho.matrix())
    }
}

pub fn parse_state(text: &str) -> Result<DensityMatrix> {
    serde_json::from_str::<MatrixJson>(text)?.to_state()
}

pub fn parse_hermitian(text: &str) -> Result<HermitianMatrix> {
    serde_json::from_str::<MatrixJson>(text)?.to_hermitian()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn state_round_trip() {
        let rho = random::random_state(3, 2, 5).unwrap();
        let text = serde_json::to_string(&MatrixJson::from(&rho)).unwrap();
        let back = parse_state(&text).unwrap();
        assert!((rho.matrix() - back.matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = r#"{"dim": 2, "re": [[1, 0], [0]], "im": [[0, 0], [0, 0]]}"#;
        assert!(matches!(parse_state(text), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_state("{\"dim\": 2,\n \"re\": [[1, 0], [0, 0]]\n \"im\": []}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
