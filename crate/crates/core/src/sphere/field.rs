use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Smooth,
    /// Singular (but integrable) at cone points; quadrature adds a tail estimate at the poles.
    Singular,
}

/// Node values on a [`crate::sphere::SphereGrid`], row-major in (u, phi).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl ScalarField {
    pub fn smooth(values: Vec<f64>) -> Self {
        ScalarField {
            values,
            kind: FieldKind::Smooth,
        }
    }

    pub fn singular(values: Vec<f64>) -> Self {
        ScalarField {
            values,
            kind: FieldKind::Singular,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::smooth(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::smooth(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_singular(&self) -> bool {
        self.kind == FieldKind::Singular
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: self.kind,
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        let kind = if self.is_singular() || other.is_singular() {
            FieldKind::Singular
        } else {
            FieldKind::Smooth
        };
        ScalarField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            kind,
        }
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// self + s * other
    pub fn axpy(&self, s: f64, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Ratio of a (1,1)-form to the background form.
#[derive(Clone, Debug, PartialEq)]
pub struct Density(pub ScalarField);

impl Density {
    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.min()
    }

    pub fn max(&self) -> f64 {
        self.0.max()
    }

    pub fn is_metric(&self) -> bool {
        self.0.values.iter().all(|&v| v > 0.0 && v.is_finite())
    }
}
