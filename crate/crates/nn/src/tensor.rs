//! Dense f64 tensors with reverse-mode automatic differentiation.
//!
//! Tensors are immutable after forward construction except for leaf data
//! (updated by the optimizer between steps) and gradient buffers (owned by
//! one backward pass at a time). Each non-leaf tensor records its parents and
//! a backward closure; `backward` walks the graph in reverse topological
//! order and accumulates gradients additively, so calling it twice without
//! `zero_grad` doubles the gradients.
//!
//! Shape violations are programming errors and panic with both shapes in the
//! message. Non-finite values are a contract violation; forward outputs are
//! scanned when debug assertions are enabled.

use std::cell::{Cell, RefCell};
use std::collections::HashSet;
use std::fmt;
use std::rc::Rc;

thread_local! {
    static NEXT_ID: Cell<u64> = const { Cell::new(0) };
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` with gradient recording disabled (inference mode).
pub fn no_grad<T>(f: impl FnOnce() -> T) -> T {
    let prev = GRAD_ENABLED.with(|g| g.replace(false));
    let out = f();
    GRAD_ENABLED.with(|g| g.set(prev));
    out
}

pub(crate) fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Backward closure: receives (output gradient, output data) and accumulates
/// into the parents' gradient buffers.
type BackwardFn = Box<dyn Fn(&[f64], &[f64])>;

struct Node {
    parents: Vec<Tensor>,
    backward: BackwardFn,
}

struct Inner {
    id: u64,
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    requires_grad: bool,
    node: Option<Node>,
}

/// A dense, row-major f64 tensor participating in the autodiff graph.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<Inner>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.inner.id)
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .finish()
    }
}

fn next_id() -> u64 {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

pub(crate) fn check_finite(data: &[f64], context: &str) {
    if cfg!(debug_assertions) {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            panic!("non-finite value {} at index {i} in {context}", data[i]);
        }
    }
}

impl Tensor {
    /// Leaf tensor from raw data.
    pub fn from_vec(shape: &[usize], data: Vec<f64>, requires_grad: bool) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match data length {}",
            shape,
            data.len()
        );
        check_finite(&data, "leaf tensor");
        Tensor {
            inner: Rc::new(Inner {
                id: next_id(),
                shape: shape.to_vec(),
                data: RefCell::new(data),
                grad: RefCell::new(None),
                requires_grad,
                node: None,
            }),
        }
    }

    pub fn zeros(shape: &[usize], requires_grad: bool) -> Tensor {
        Tensor::from_vec(shape, vec![0.0; shape.iter().product()], requires_grad)
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor::from_vec(&[1], vec![v], false)
    }

    /// Non-leaf tensor produced by an op. When no parent requires a gradient
    /// (or recording is disabled) the result degenerates to a constant leaf.
    /// This is the extension point for custom differentiable ops: the
    /// closure receives (output gradient, output data) and must accumulate
    /// into the parents via [`Tensor::with_grad_mut`] or
    /// [`Tensor::accumulate_grad`].
    pub fn from_op(
        shape: Vec<usize>,
        data: Vec<f64>,
        parents: Vec<Tensor>,
        backward: impl Fn(&[f64], &[f64]) + 'static,
    ) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "op output shape {:?} does not match data length {}",
            shape,
            data.len()
        );
        check_finite(&data, "op output");
        let track = grad_enabled() && parents.iter().any(|p| p.requires_grad());
        Tensor {
            inner: Rc::new(Inner {
                id: next_id(),
                shape,
                data: RefCell::new(data),
                grad: RefCell::new(None),
                requires_grad: track,
                node: track.then(|| Node {
                    parents,
                    backward: Box::new(backward),
                }),
            }),
        }
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    /// Borrowed view of the values.
    pub fn data(&self) -> std::cell::Ref<'_, Vec<f64>> {
        self.inner.data.borrow()
    }

    /// Copy of the values.
    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.data.borrow().clone()
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.inner.data.borrow()[0]
    }

    /// Copy of the gradient, if one has been accumulated.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    /// Accumulates `delta` into the gradient buffer (lazily allocated).
    pub fn accumulate_grad(&self, delta: &[f64]) {
        self.with_grad_mut(|g| {
            for (gi, di) in g.iter_mut().zip(delta) {
                *gi += di;
            }
        });
    }

    /// Direct access to the zero-initialized gradient buffer.
    pub fn with_grad_mut(&self, f: impl FnOnce(&mut [f64])) {
        let mut slot = self.inner.grad.borrow_mut();
        let g = slot.get_or_insert_with(|| vec![0.0; self.numel()]);
        f(g);
    }

    /// In-place leaf update: the optimizer's view of (data, grad).
    pub fn apply_update(&self, f: impl FnOnce(&mut [f64], &[f64])) {
        let grad = self.inner.grad.borrow();
        let Some(g) = grad.as_ref() else { return };
        f(&mut self.inner.data.borrow_mut(), g);
    }

    /// Overwrites leaf data (checkpoint load, quantization).
    pub fn set_data(&self, values: &[f64]) {
        assert_eq!(values.len(), self.numel());
        check_finite(values, "set_data");
        self.inner.data.borrow_mut().copy_from_slice(values);
    }

    /// Reverse-mode differentiation from this scalar. Leaf gradients
    /// accumulate additively across calls; intermediate gradients are
    /// transient and consumed as the pass walks the graph, so running
    /// backward twice on the same graph contributes the same leaf gradients
    /// twice.
    pub fn backward(&self) {
        assert_eq!(
            self.numel(),
            1,
            "backward() needs a scalar loss, got shape {:?}",
            self.shape()
        );
        let order = self.topo_order();
        self.with_grad_mut(|g| g[0] += 1.0);
        for t in order.iter().rev() {
            if let Some(node) = &t.inner.node {
                let Some(g) = t.inner.grad.borrow_mut().take() else {
                    continue;
                };
                let data = t.inner.data.borrow();
                (node.backward)(&g, &data);
            }
        }
    }

    /// Iterative post-order DFS over the recorded graph.
    fn topo_order(&self) -> Vec<Tensor> {
        let mut order: Vec<Tensor> = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut stack: Vec<(Tensor, usize)> = vec![(self.clone(), 0)];
        visited.insert(self.id());
        while let Some((t, child)) = stack.pop() {
            let parents = t.inner.node.as_ref().map(|n| &n.parents);
            match parents {
                Some(ps) if child < ps.len() => {
                    let next = ps[child].clone();
                    stack.push((t, child + 1));
                    if next.requires_grad() && visited.insert(next.id()) {
                        stack.push((next, 0));
                    }
                }
                _ => order.push(t),
            }
        }
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    #[test]
    fn square_gradient_at_three() {
        let x = Tensor::from_vec(&[1], vec![3.0], true);
        let y = ops::mul_elem(&x, &x);
        y.backward();
        assert_eq!(x.grad().unwrap(), vec![6.0]);
    }

    #[test]
    fn backward_twice_doubles_grads() {
        let x = Tensor::from_vec(&[1], vec![3.0], true);
        let y = ops::mul_elem(&x, &x);
        y.backward();
        y.backward();
        assert_eq!(x.grad().unwrap(), vec![12.0]);
    }

    #[test]
    fn zero_grad_resets() {
        let x = Tensor::from_vec(&[1], vec![2.0], true);
        let y = ops::scale(&x, 5.0);
        y.backward();
        assert_eq!(x.grad().unwrap(), vec![5.0]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn no_grad_suppresses_recording() {
        let x = Tensor::from_vec(&[2], vec![1.0, 2.0], true);
        let y = no_grad(|| ops::scale(&x, 2.0));
        assert!(!y.requires_grad());
        assert_eq!(y.to_vec(), vec![2.0, 4.0]);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // y = x*x + x*x  =>  dy/dx = 4x
        let x = Tensor::from_vec(&[1], vec![2.0], true);
        let sq = ops::mul_elem(&x, &x);
        let y = ops::add(&sq, &sq);
        y.backward();
        assert_eq!(x.grad().unwrap(), vec![8.0]);
    }

    #[test]
    #[should_panic(expected = "shape")]
    fn shape_mismatch_panics() {
        let _ = Tensor::from_vec(&[2, 3], vec![0.0; 5], false);
    }
}
