use std::collections::BTreeMap;

use crate::autodiff::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Slot {
    value: Tensor2,
    m: Tensor2,
    v: Tensor2,
}

/// Named parameters in insertion order, each with its Adam moments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    slots: BTreeMap<String, Slot>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a parameter; replacing resets its moments.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor2) {
        let name = name.into();
        let (r, c) = value.shape();
        let slot = Slot {
            value,
            m: Tensor2::zeros(r, c),
            v: Tensor2::zeros(r, c),
        };
        if self.slots.insert(name.clone(), slot).is_none() {
            self.names.push(name);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor2> {
        self.slots.get(name).map(|s| &s.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor2> {
        self.slots.get_mut(name).map(|s| &mut s.value)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.slots.contains_key(name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Parameters in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor2)> {
        self.names
            .iter()
            .map(|n| (n.as_str(), &self.slots[n].value))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.slots.values().map(|s| s.value.len()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn moments(&self, name: &str) -> Option<(&Tensor2, &Tensor2)> {
        self.slots.get(name).map(|s| (&s.m, &s.v))
    }

    /// Records every parameter as a named leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> Result<ParamVars> {
        let mut vars = BTreeMap::new();
        for (name, value) in self.iter() {
            vars.insert(name.to_owned(), tape.param(name, value.clone())?);
        }
        Ok(ParamVars(vars))
    }

    /// One bias-corrected Adam update. Parameters missing from `grads` are
    /// treated as having zero gradient.
    pub fn adam_step(&mut self, grads: &BTreeMap<String, Tensor2>, cfg: &AdamConfig) -> Result<()> {
        for (name, g) in grads {
            let slot = self
                .slots
                .get(name)
                .ok_or_else(|| Error::Invalid(format!("gradient for unknown parameter `{name}`")))?;
            if g.shape() != slot.value.shape() {
                return Err(Error::Shape {
                    op: "adam_step",
                    detail: format!("`{name}`: grad {:?} vs param {:?}", g.shape(), slot.value.shape()),
                });
            }
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient(name.clone()));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for name in &self.names {
            let slot = self.slots.get_mut(name).expect("names and slots agree");
            let grad = grads.get(name);
            let n = slot.value.len();
            let (value, m, v) = (
                slot.value.data_mut(),
                slot.m.data_mut(),
                slot.v.data_mut(),
            );
            for i in 0..n {
                let g = grad.map_or(0.0, |g| g.data()[i]);
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                value[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

/// Tape handles for every parameter of a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct ParamVars(BTreeMap<String, Var>);

impl ParamVars {
    pub fn get(&self, name: &str) -> Option<Var> {
        self.0.get(name).copied()
    }

    /// Panics if the parameter was not bound; model code only asks for
    /// names it registered itself.
    pub fn var(&self, name: &str) -> Var {
        match self.0.get(name) {
            Some(v) => *v,
            None => panic!("parameter `{name}` not bound"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(x: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("x", Tensor2::scalar(x));
        s
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = scalar_store(1.0);
        let grads = BTreeMap::from([("x".to_owned(), Tensor2::scalar(1.0))]);
        let lr = 1e-3;
        s.adam_step(&grads, &AdamConfig::with_lr(lr)).unwrap();
        // m_hat = v_hat = 1 after bias correction
        let expected = 1.0 - lr / (1.0 + 1e-8);
        assert!((s.get("x").unwrap().item() - expected).abs() < 1e-15);
        assert!((1.0 - s.get("x").unwrap().item() - lr).abs() < 1e-6);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameter_and_decays_moments() {
        let mut s = scalar_store(2.0);
        let cfg = AdamConfig::with_lr(0.1);
        s.adam_step(&BTreeMap::from([("x".to_owned(), Tensor2::scalar(0.5))]), &cfg)
            .unwrap();
        let after_first = s.get("x").unwrap().item();
        let (m1, v1) = s.moments("x").map(|(m, v)| (m.item(), v.item())).unwrap();

        let mut frozen = scalar_store(after_first);
        frozen
            .adam_step(&BTreeMap::from([("x".to_owned(), Tensor2::scalar(0.0))]), &cfg)
            .unwrap();
        assert_eq!(frozen.get("x").unwrap().item(), after_first);

        s.adam_step(&BTreeMap::from([("x".to_owned(), Tensor2::scalar(0.0))]), &cfg)
            .unwrap();
        let (m2, v2) = s.moments("x").map(|(m, v)| (m.item(), v.item())).unwrap();
        assert!((m2 - 0.9 * m1).abs() < 1e-15);
        assert!((v2 - 0.999 * v1).abs() < 1e-15);
    }

    #[test]
    fn identical_updates_are_deterministic() {
        let grads = BTreeMap::from([("x".to_owned(), Tensor2::scalar(0.3))]);
        let mut a = scalar_store(1.0);
        let mut b = scalar_store(1.0);
        for _ in 0..5 {
            a.adam_step(&grads, &AdamConfig::default()).unwrap();
            b.adam_step(&grads, &AdamConfig::default()).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut s = scalar_store(1.0);
        let grads = BTreeMap::from([("x".to_owned(), Tensor2::scalar(f64::NAN))]);
        match s.adam_step(&grads, &AdamConfig::default()) {
            Err(Error::NonFiniteGradient(name)) => assert_eq!(name, "x"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.step(), 0);
    }
}
