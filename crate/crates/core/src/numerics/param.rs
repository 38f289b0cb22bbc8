use super::Tensor2D;

/// A tensor with an accumulated gradient and a freeze flag.
///
/// Frozen parameters enter the tape as constants, so nothing downstream of
/// them records a backward rule and their `grad` stays zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub value: Tensor2D,
    pub grad: Tensor2D,
    pub frozen: bool,
}

impl Parameter {
    pub fn new(value: Tensor2D) -> Self {
        let grad = Tensor2D::zeros(value.rows(), value.cols());
        Self {
            value,
            grad,
            frozen: false,
        }
    }

    pub fn frozen(value: Tensor2D) -> Self {
        Self {
            frozen: true,
            ..Self::new(value)
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn numel(&self) -> usize {
        self.value.len()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    /// Adds `g` into the gradient; a no-op for frozen parameters.
    pub fn accumulate_grad(&mut self, g: &Tensor2D) {
        if !self.frozen {
            self.grad.add_assign(g);
        }
    }
}
