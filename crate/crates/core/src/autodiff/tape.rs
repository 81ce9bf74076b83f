//! Reverse-mode scalar graph.
//!
//! Every arithmetic operation on a [`Var`] appends one node to a
//! thread-local expression record. A node stores up to two parent indices
//! together with the local partial derivatives, so the reverse sweep is a
//! single pass over the record in reverse order.

use std::cell::RefCell;
use std::marker::PhantomData;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::AdError;
use crate::scalar::Scalar;

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

#[derive(Default)]
struct TapeData {
    nodes: Vec<Node>,
    active: bool,
    fault: Option<AdError>,
}

thread_local! {
    static TAPE: RefCell<TapeData> = RefCell::new(TapeData::default());
}

/// Traced scalar: a primal value plus its node in the active record.
///
/// Constants (created through [`Scalar::constant`]) have no node and are
/// ignored by the reverse sweep.
#[derive(Clone, Copy, Debug)]
pub struct Var {
    value: f64,
    index: u32,
}

impl Var {
    #[inline]
    pub fn val(self) -> f64 {
        self.value
    }

    #[inline]
    pub fn is_constant(self) -> bool {
        self.index == NO_PARENT
    }

    #[inline]
    fn unary(self, value: f64, partial: f64, name: &'static str) -> Var {
        if self.is_constant() {
            return Var { value, index: NO_PARENT };
        }
        let index = push(
            Node { parents: [self.index, NO_PARENT], partials: [partial, 0.0] },
            value,
            partial,
            name,
            &[self.value],
        );
        Var { value, index }
    }

    #[inline]
    fn binary(self, rhs: Var, value: f64, da: f64, db: f64, name: &'static str) -> Var {
        match (self.is_constant(), rhs.is_constant()) {
            (true, true) => Var { value, index: NO_PARENT },
            (false, true) => {
                let index = push(
                    Node { parents: [self.index, NO_PARENT], partials: [da, 0.0] },
                    value,
                    da,
                    name,
                    &[self.value, rhs.value],
                );
                Var { value, index }
            }
            (true, false) => {
                let index = push(
                    Node { parents: [rhs.index, NO_PARENT], partials: [db, 0.0] },
                    value,
                    db,
                    name,
                    &[self.value, rhs.value],
                );
                Var { value, index }
            }
            (false, false) => {
                let index = push(
                    Node { parents: [self.index, rhs.index], partials: [da, db] },
                    value,
                    da + db,
                    name,
                    &[self.value, rhs.value],
                );
                Var { value, index }
            }
        }
    }
}

#[inline]
fn push(node: Node, value: f64, partial_sum: f64, name: &'static str, operands: &[f64]) -> u32 {
    TAPE.with(|t| {
        let mut t = t.borrow_mut();
        assert!(t.active, "traced arithmetic outside of a Recording");
        if t.fault.is_none() && !(value.is_finite() && partial_sum.is_finite()) {
            t.fault = Some(AdError::NonFinite { primitive: name, operands: operands.to_vec() });
        }
        let idx = t.nodes.len() as u32;
        t.nodes.push(node);
        idx
    })
}

/// Scope guard owning the thread-local expression record.
///
/// Only one recording may be active per thread; the record is cleared when
/// the guard is created and again when it is dropped (capacity is kept so a
/// hot loop can reuse the allocation).
pub struct Recording {
    _not_send: PhantomData<*const ()>,
}

impl Recording {
    pub fn new() -> Self {
        TAPE.with(|t| {
            let mut t = t.borrow_mut();
            assert!(!t.active, "nested Recording on the same thread");
            t.active = true;
            t.nodes.clear();
            t.fault = None;
        });
        Recording { _not_send: PhantomData }
    }

    /// New independent variable.
    pub fn input(&self, value: f64) -> Var {
        let index = TAPE.with(|t| {
            let mut t = t.borrow_mut();
            let idx = t.nodes.len() as u32;
            t.nodes.push(Node { parents: [NO_PARENT; 2], partials: [0.0; 2] });
            idx
        });
        Var { value, index }
    }

    pub fn inputs(&self, values: &[f64]) -> Vec<Var> {
        values.iter().map(|&v| self.input(v)).collect()
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        TAPE.with(|t| t.borrow().nodes.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First non-finite event recorded, if any.
    pub fn fault(&self) -> Option<AdError> {
        TAPE.with(|t| t.borrow().fault.clone())
    }

    /// d(output)/d(input) for every entry of `inputs`.
    pub fn gradient(&self, output: Var, inputs: &[Var]) -> Result<Vec<f64>, AdError> {
        let mut out = vec![0.0; inputs.len()];
        self.gradient_into(output, inputs, &mut out)?;
        Ok(out)
    }

    /// Like [`gradient`](Self::gradient) but writes into a caller buffer.
    pub fn gradient_into(&self, output: Var, inputs: &[Var], out: &mut [f64]) -> Result<(), AdError> {
        assert_eq!(inputs.len(), out.len());
        if let Some(f) = self.fault() {
            return Err(f);
        }
        if output.is_constant() {
            out.iter_mut().for_each(|g| *g = 0.0);
            return Ok(());
        }
        TAPE.with(|t| {
            let t = t.borrow();
            let n = output.index as usize + 1;
            let mut adj = vec![0.0f64; n];
            adj[n - 1] = 1.0;
            for i in (0..n).rev() {
                let a = adj[i];
                if a == 0.0 {
                    continue;
                }
                let node = &t.nodes[i];
                for k in 0..2 {
                    let p = node.parents[k];
                    if p != NO_PARENT {
                        adj[p as usize] += node.partials[k] * a;
                    }
                }
            }
            for (g, v) in out.iter_mut().zip(inputs) {
                *g = if v.is_constant() || v.index as usize >= n { 0.0 } else { adj[v.index as usize] };
            }
        });
        Ok(())
    }
}

impl Default for Recording {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for Recording {
    fn drop(&mut self) {
        TAPE.with(|t| {
            let mut t = t.borrow_mut();
            t.active = false;
            t.nodes.clear();
            t.fault = None;
        });
    }
}

impl Add for Var {
    type Output = Var;
    #[inline]
    fn add(self, rhs: Var) -> Var {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0, "add")
    }
}

impl Sub for Var {
    type Output = Var;
    #[inline]
    fn sub(self, rhs: Var) -> Var {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0, "sub")
    }
}

impl Mul for Var {
    type Output = Var;
    #[inline]
    fn mul(self, rhs: Var) -> Var {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value, "mul")
    }
}

impl Div for Var {
    type Output = Var;
    #[inline]
    fn div(self, rhs: Var) -> Var {
        let q = self.value / rhs.value;
        self.binary(rhs, q, 1.0 / rhs.value, -q / rhs.value, "div")
    }
}

impl Neg for Var {
    type Output = Var;
    #[inline]
    fn neg(self) -> Var {
        self.unary(-self.value, -1.0, "neg")
    }
}

impl Scalar for Var {
    #[inline]
    fn constant(v: f64) -> Self {
        Var { value: v, index: NO_PARENT }
    }

    #[inline]
    fn value(self) -> f64 {
        self.value
    }

    #[inline]
    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.unary(t, 1.0 - t * t, "tanh")
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e, "exp")
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.unary(s, 0.5 / s, "sqrt")
    }

    /// Derivative at zero is taken as zero.
    #[inline]
    fn abs(self) -> Self {
        let d = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.unary(self.value.abs(), d, "abs")
    }

    #[inline]
    fn cos(self) -> Self {
        self.unary(self.value.cos(), -self.value.sin(), "cos")
    }

    #[inline]
    fn acos(self) -> Self {
        let v = self.value;
        self.unary(v.acos(), -1.0 / (1.0 - v * v).sqrt(), "acos")
    }

    #[inline]
    fn max(self, other: Self) -> Self {
        if self.value >= other.value {
            self.binary(other, self.value, 1.0, 0.0, "max")
        } else {
            self.binary(other, other.value, 0.0, 1.0, "max")
        }
    }

    #[inline]
    fn min(self, other: Self) -> Self {
        if self.value <= other.value {
            self.binary(other, self.value, 1.0, 0.0, "min")
        } else {
            self.binary(other, other.value, 0.0, 1.0, "min")
        }
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        let d = if n == 0 { 0.0 } else { n as f64 * self.value.powi(n - 1) };
        self.unary(self.value.powi(n), d, "powi")
    }

    #[inline]
    fn powf(self, e: f64) -> Self {
        self.unary(self.value.powf(e), e * self.value.powf(e - 1.0), "powf")
    }
}
