//! Layer-dimension vectors and the operators that mirror network composition
//! (`odot`) and parallel summation (`boxplus`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer widths `(k_0, k_1, ..., k_{H+1})` of a ReLU network: input width,
/// `H >= 1` hidden widths, output width. Every entry is positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DimVector(Vec<usize>);

impl DimVector {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 3 {
            return Err(Error::InvalidDims { dims, reason: "needs at least one hidden layer" });
        }
        if dims.contains(&0) {
            return Err(Error::InvalidDims { dims, reason: "widths must be positive" });
        }
        Ok(Self(dims))
    }

    /// `(1, 2, ..., 2, 1)` with `n` entries: the widths of a scalar identity
    /// network with `n - 2` hidden layers.
    pub fn neutral(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("neutral vector needs length >= 3, got {n}")));
        }
        let mut dims = vec![2; n];
        dims[0] = 1;
        dims[n - 1] = 1;
        Ok(Self(dims))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Number of entries, i.e. the number of layers plus one.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn input(&self) -> usize {
        self.0[0]
    }

    pub fn output(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    /// Hidden widths `k_1, ..., k_H`.
    pub fn hidden(&self) -> &[usize] {
        &self.0[1..self.0.len() - 1]
    }

    /// Largest entry, endpoints included.
    pub fn sup_norm(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Number of weights plus biases of any network with these widths.
    pub fn param_count(&self) -> u128 {
        self.0.windows(2).map(|w| w[1] as u128 * (w[0] as u128 + 1)).sum()
    }

    /// `self ⊙ inner`: the widths of `outer ∘ inner` when `self` are the
    /// widths of `outer`. The glue layer has width `inner.output() + self.input()`.
    pub fn odot(&self, inner: &DimVector) -> DimVector {
        let mut out = Vec::with_capacity(self.len() + inner.len() - 1);
        out.extend_from_slice(&inner.0[..inner.len() - 1]);
        out.push(inner.output() + self.input());
        out.extend_from_slice(&self.0[1..]);
        DimVector(out)
    }

    /// `self ⊞ other`: endpoints kept, hidden widths added. Only defined for
    /// vectors of equal length with matching endpoints.
    pub fn boxplus(&self, other: &DimVector) -> Result<DimVector> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "boxplus needs equal lengths, got {} and {}",
                self.len(),
                other.len()
            )));
        }
        if self.input() != other.input() || self.output() != other.output() {
            return Err(Error::Shape(format!("boxplus endpoints differ: {self} vs {other}")));
        }
        let out = self
            .0
            .iter()
            .zip(&other.0)
            .enumerate()
            .map(|(k, (&a, &b))| if k == 0 || k == self.len() - 1 { a } else { a + b })
            .collect();
        Ok(DimVector(out))
    }

    /// Left fold of `boxplus` over a nonempty sequence.
    pub fn boxplus_all<'a, I>(items: I) -> Result<DimVector>
    where
        I: IntoIterator<Item = &'a DimVector>,
    {
        let mut it = items.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::InvalidArgument("boxplus over an empty sequence".into()))?;
        it.try_fold(first.clone(), |acc, d| acc.boxplus(d))
    }
}

impl TryFrom<Vec<usize>> for DimVector {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DimVector> for Vec<usize> {
    fn from(d: DimVector) -> Self {
        d.0
    }
}

impl fmt::Display for DimVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, d) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dv(v: &[usize]) -> DimVector {
        DimVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn odot_examples() {
        assert_eq!(dv(&[1, 3, 1]).odot(&dv(&[2, 4, 1])), dv(&[2, 4, 2, 3, 1]));
        assert_eq!(dv(&[1, 2, 1]).odot(&dv(&[1, 2, 1])), dv(&[1, 2, 2, 2, 1]));
        assert_eq!(DimVector::neutral(3).unwrap().odot(&DimVector::neutral(3).unwrap()), DimVector::neutral(5).unwrap());
    }

    #[test]
    fn boxplus_examples() {
        assert_eq!(dv(&[1, 3, 1]).boxplus(&dv(&[1, 5, 1])).unwrap(), dv(&[1, 8, 1]));
        assert_eq!(dv(&[2, 4, 4, 3]).boxplus(&dv(&[2, 1, 1, 3])).unwrap(), dv(&[2, 5, 5, 3]));
    }

    #[test]
    fn boxplus_rejects_mismatched_shapes() {
        assert!(matches!(dv(&[1, 3, 1]).boxplus(&dv(&[1, 3, 3, 1])), Err(Error::Shape(_))));
        assert!(matches!(dv(&[1, 3, 1]).boxplus(&dv(&[2, 3, 1])), Err(Error::Shape(_))));
        assert!(matches!(dv(&[1, 3, 1]).boxplus(&dv(&[1, 3, 2])), Err(Error::Shape(_))));
    }

    #[test]
    fn neutral_vectors() {
        assert_eq!(DimVector::neutral(3).unwrap(), dv(&[1, 2, 1]));
        assert_eq!(DimVector::neutral(4).unwrap(), dv(&[1, 2, 2, 1]));
        for n in 3..=10 {
            assert_eq!(DimVector::neutral(n).unwrap().sup_norm(), 2);
        }
        assert!(DimVector::neutral(2).is_err());
    }

    #[test]
    fn construction_invariants() {
        assert!(DimVector::new(vec![1, 1]).is_err());
        assert!(DimVector::new(vec![1, 0, 1]).is_err());
        assert!(serde_json::from_str::<DimVector>("[3,0,1]").is_err());
        assert_eq!(serde_json::from_str::<DimVector>("[3,2,1]").unwrap(), dv(&[3, 2, 1]));
    }

    #[test]
    fn param_counts() {
        assert_eq!(dv(&[1, 2, 1]).param_count(), 7);
        assert_eq!(dv(&[3, 5, 4, 2]).param_count(), 54);
        let n = 9;
        assert_eq!(dv(&[1, n + 1, 1]).param_count(), ((n + 1) * 2 + (n + 2)) as u128);
    }

    fn any_dims() -> impl Strategy<Value = DimVector> {
        prop::collection::vec(1usize..9, 3..8).prop_map(|v| DimVector::new(v).unwrap())
    }

    fn shaped_triple() -> impl Strategy<Value = (DimVector, DimVector, DimVector)> {
        (1usize..6, 1usize..6, 1usize..5).prop_flat_map(|(k, l, h)| {
            let one = move || {
                prop::collection::vec(1usize..9, h).prop_map(move |mid| {
                    let mut v = vec![k];
                    v.extend(mid);
                    v.push(l);
                    DimVector::new(v).unwrap()
                })
            };
            (one(), one(), one())
        })
    }

    proptest! {
        #[test]
        fn odot_is_associative(a in any_dims(), b in any_dims(), c in any_dims()) {
            prop_assert_eq!(a.odot(&b).odot(&c), a.odot(&b.odot(&c)));
        }

        #[test]
        fn odot_length(a in any_dims(), b in any_dims()) {
            prop_assert_eq!(a.odot(&b).len(), a.len() + b.len() - 1);
        }

        #[test]
        fn boxplus_laws((a, b, c) in shaped_triple()) {
            let ab = a.boxplus(&b).unwrap();
            prop_assert_eq!(ab.len(), a.len());
            prop_assert_eq!((ab.input(), ab.output()), (a.input(), a.output()));
            prop_assert_eq!(ab.boxplus(&c).unwrap(), a.boxplus(&b.boxplus(&c).unwrap()).unwrap());
            prop_assert!(ab.sup_norm() <= a.sup_norm() + b.sup_norm());
        }

        #[test]
        fn odot_sup_norm_with_unit_glue(a in any_dims(), b in any_dims()) {
            let mut av = a.as_slice().to_vec();
            av[0] = 1;
            let mut bv = b.as_slice().to_vec();
            *bv.last_mut().unwrap() = 1;
            let (a, b) = (DimVector::new(av).unwrap(), DimVector::new(bv).unwrap());
            prop_assert!(a.odot(&b).sup_norm() <= a.sup_norm().max(b.sup_norm()).max(2));
        }
    }
}
