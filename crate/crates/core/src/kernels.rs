//! Benchmark kernel functions and user-supplied kernels.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Callback signature for custom kernels.
pub type KernelFn = dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync;

/// A user-supplied kernel.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub complex: bool,
    /// Free-form note on smoothness away from the diagonal.
    pub smoothness: String,
    pub func: Arc<KernelFn>,
}

impl CustomKernel {
    pub fn new(
        name: impl Into<String>,
        complex: bool,
        smoothness: impl Into<String>,
        func: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        CustomKernel { name: name.into(), complex, smoothness: smoothness.into(), func: Arc::new(func) }
    }

    /// Real-valued kernel from a real callback.
    pub fn real(
        name: impl Into<String>,
        smoothness: impl Into<String>,
        func: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, false, smoothness, move |x, y| Complex64::new(func(x, y), 0.0))
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("complex", &self.complex)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

/// The seven radial benchmark kernels, in terms of `r = |x - y|`:
///
/// | id | formula |
/// |----|---------|
/// | K1 | `1/r` |
/// | K2 | `ln r` |
/// | K3 | `sin r` |
/// | K4 | `exp(i r)/r` |
/// | K5 | `1/sqrt(1 + r)` |
/// | K6 | `exp(-r)` |
/// | K7 | `r` |
#[derive(Debug, Clone)]
pub enum KernelId {
    K1,
    K2,
    K3,
    K4,
    K5,
    K6,
    K7,
    Custom(CustomKernel),
}

impl PartialEq for KernelId {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl KernelId {
    pub const BUILTIN: [KernelId; 7] =
        [KernelId::K1, KernelId::K2, KernelId::K3, KernelId::K4, KernelId::K5, KernelId::K6, KernelId::K7];

    pub fn name(&self) -> String {
        match self {
            KernelId::Custom(c) => c.name.clone(),
            builtin => format!("K{}", builtin.code()),
        }
    }

    /// Stable numeric code, used when deriving seeds. Custom kernels hash
    /// their name (FNV-1a) into the upper range.
    pub fn code(&self) -> u64 {
        match self {
            KernelId::K1 => 1,
            KernelId::K2 => 2,
            KernelId::K3 => 3,
            KernelId::K4 => 4,
            KernelId::K5 => 5,
            KernelId::K6 => 6,
            KernelId::K7 => 7,
            KernelId::Custom(c) => {
                let mut h: u64 = 0xcbf29ce484222325;
                for b in c.name.bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x100000001b3);
                }
                h | 1 << 63
            }
        }
    }

    pub fn is_complex(&self) -> bool {
        match self {
            KernelId::K4 => true,
            KernelId::Custom(c) => c.complex,
            _ => false,
        }
    }

    fn singular_at_zero(&self) -> bool {
        matches!(self, KernelId::K1 | KernelId::K2 | KernelId::K4)
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "k1" => Ok(KernelId::K1),
            "k2" => Ok(KernelId::K2),
            "k3" => Ok(KernelId::K3),
            "k4" => Ok(KernelId::K4),
            "k5" => Ok(KernelId::K5),
            "k6" => Ok(KernelId::K6),
            "k7" => Ok(KernelId::K7),
            _ => Err(Error::Config(format!("unknown kernel `{s}` (expected k1..k7)"))),
        }
    }
}

/// Name lookup for built-in and registered kernels.
#[derive(Debug, Clone, Default)]
pub struct KernelRegistry {
    custom: BTreeMap<String, CustomKernel>,
}

impl KernelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, kernel: CustomKernel) -> Result<()> {
        let key = kernel.name.to_ascii_lowercase();
        if key.parse::<KernelId>().is_ok() || self.custom.contains_key(&key) {
            return Err(Error::Config(format!("kernel name `{}` already taken", kernel.name)));
        }
        self.custom.insert(key, kernel);
        Ok(())
    }

    pub fn resolve(&self, name: &str) -> Result<KernelId> {
        name.parse().or_else(|e| {
            self.custom.get(&name.trim().to_ascii_lowercase()).cloned().map(KernelId::Custom).ok_or(e)
        })
    }

    pub fn names(&self) -> Vec<String> {
        KernelId::BUILTIN.iter().map(KernelId::name).chain(self.custom.values().map(|c| c.name.clone())).collect()
    }
}

#[inline]
pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[inline]
fn radial_real(id: &KernelId, r: f64) -> f64 {
    match id {
        KernelId::K1 => 1.0 / r,
        KernelId::K2 => r.ln(),
        KernelId::K3 => r.sin(),
        KernelId::K5 => 1.0 / (1.0 + r).sqrt(),
        KernelId::K6 => (-r).exp(),
        KernelId::K7 => r,
        KernelId::K4 | KernelId::Custom(_) => unreachable!("not a real radial kernel"),
    }
}

/// Evaluate a kernel at a target/source pair.
pub fn evaluate(id: &KernelId, x: &[f64], y: &[f64]) -> Result<Complex64> {
    let v = match id {
        KernelId::Custom(c) => (c.func)(x, y),
        KernelId::K4 => {
            let r = checked_distance(id, x, y)?;
            Complex64::from_polar(1.0 / r, r)
        }
        _ => Complex64::new(radial_real(id, checked_distance(id, x, y)?), 0.0),
    };
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{id} at distance {} gave {v}", distance(x, y))))
    }
}

/// Real path used by matrix assembly; the caller guarantees a real kernel.
pub(crate) fn evaluate_real(id: &KernelId, x: &[f64], y: &[f64]) -> Result<f64> {
    let v = match id {
        KernelId::Custom(c) => (c.func)(x, y).re,
        _ => radial_real(id, checked_distance(id, x, y)?),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("{id} at distance {} gave {v}", distance(x, y))))
    }
}

fn checked_distance(id: &KernelId, x: &[f64], y: &[f64]) -> Result<f64> {
    let r = distance(x, y);
    if r == 0.0 && id.singular_at_zero() {
        return Err(Error::SingularEvaluation { kernel: id.name() });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn table_values() {
        let v = evaluate(&KernelId::K7, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_eq!(v, Complex64::new(5.0, 0.0));
        let v = evaluate(&KernelId::K4, &[0.0; 3], &[PI, 0.0, 0.0]).unwrap();
        assert!((v.re + 1.0 / PI).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert_eq!(evaluate(&KernelId::K6, &[0.0], &[0.0]).unwrap().re, 1.0);
        assert_eq!(evaluate(&KernelId::K2, &[0.0], &[1.0]).unwrap().re, 0.0);
        assert_eq!(evaluate(&KernelId::K5, &[0.0], &[3.0]).unwrap().re, 0.5);
    }

    #[test]
    fn singular_kernels_reject_zero_distance() {
        for id in [KernelId::K1, KernelId::K2, KernelId::K4] {
            assert!(matches!(evaluate(&id, &[0.5], &[0.5]), Err(Error::SingularEvaluation { .. })));
        }
    }

    #[test]
    fn custom_non_finite_is_numerical_error() {
        let k = KernelId::Custom(CustomKernel::real("blowup", "none", |_, _| f64::NAN));
        assert!(matches!(evaluate(&k, &[0.0], &[1.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn names_parse_case_insensitively() {
        assert_eq!("K3".parse::<KernelId>().unwrap(), KernelId::K3);
        assert_eq!("k7".parse::<KernelId>().unwrap(), KernelId::K7);
        assert!("k8".parse::<KernelId>().is_err());
    }

    #[test]
    fn registry_resolves_custom() {
        let mut reg = KernelRegistry::new();
        reg.register(CustomKernel::real("Gauss", "entire", |x, y| (-distance(x, y).powi(2)).exp()))
            .unwrap();
        assert!(reg.register(CustomKernel::real("k1", "", |_, _| 0.0)).is_err());
        let g = reg.resolve("gauss").unwrap();
        assert!(!g.is_complex());
        assert_eq!(g.name(), "Gauss");
        assert!(g.code() > 7);
        assert_eq!(reg.resolve("K4").unwrap(), KernelId::K4);
    }
}
