//! Dense double-precision matrices and a tape for reverse-mode
//! gradients. Covers exactly what the network needs: matrix multiply,
//! column concatenation, elementwise nonlinearities, row softmax, the
//! fused softmax cross-entropy loss, row gathering for pair features,
//! and plain gradient-descent updates.
//!
//! A tape records the forward graph in creation order; the backward pass
//! walks it once in reverse, which is a valid reverse topological order
//! because every operand precedes its consumer.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorError {
    DimMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    ShapeDataMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },
    NonFiniteValue,
    TargetOutOfRange {
        row: usize,
        target: usize,
        classes: usize,
    },
    LossNotScalar {
        rows: usize,
        cols: usize,
    },
    RowIndexOutOfRange {
        index: usize,
        rows: usize,
    },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::DimMismatch { op, lhs, rhs } => write!(
                f,
                "{op}: dimensions {}x{} and {}x{} do not conform",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            TensorError::ShapeDataMismatch { rows, cols, len } => write!(
                f,
                "matrix {rows}x{cols} needs {} values, got {len}",
                rows * cols
            ),
            TensorError::NonFiniteValue => write!(f, "matrix contains a non-finite value"),
            TensorError::TargetOutOfRange {
                row,
                target,
                classes,
            } => write!(
                f,
                "row {row}: target class {target} out of range for {classes} classes"
            ),
            TensorError::LossNotScalar { rows, cols } => {
                write!(f, "backward needs a 1x1 loss, got {rows}x{cols}")
            }
            TensorError::RowIndexOutOfRange { index, rows } => {
                write!(f, "row index {index} out of range for {rows} rows")
            }
        }
    }
}

/// Row-major dense matrix of f64 values, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::ShapeDataMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(TensorError::NonFiniteValue);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, TensorError> {
        if self.cols != other.rows {
            return Err(TensorError::DimMismatch {
                op: "matmul",
                lhs: (self.rows, self.cols),
                rhs: (other.rows, other.cols),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(lhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn concat_cols(&self, other: &Matrix) -> Result<Matrix, TensorError> {
        if self.rows != other.rows {
            return Err(TensorError::DimMismatch {
                op: "concat_cols",
                lhs: (self.rows, self.cols),
                rhs: (other.rows, other.cols),
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn relu(&self) -> Matrix {
        self.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    pub fn tanh(&self) -> Matrix {
        self.map(libm::tanh)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Numerically stable softmax per row; rows sum to 1 within 1e-12
    /// and every entry is strictly positive.
    pub fn row_softmax(&self) -> Matrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = &mut out.data[r * self.cols..(r + 1) * self.cols];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - max);
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        self.map(|v| v * factor)
    }

    fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(VarId, VarId),
    ConcatCols(VarId, VarId),
    Relu(VarId),
    Tanh(VarId),
    RowSoftmax(VarId),
    /// Scalar mean over rows of -log softmax(logits)[target].
    SoftmaxCrossEntropy {
        logits: VarId,
        targets: Vec<usize>,
    },
    /// Output row r = [input[pairs[r].0] | input[pairs[r].1]].
    GatherPairs {
        input: VarId,
        pairs: Vec<(usize, usize)>,
    },
    Sum(VarId),
}

struct Node {
    value: Matrix,
    op: Op,
}

/// Records a forward computation so gradients of a scalar loss can be
/// accumulated back to every recorded value.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, id: VarId) -> &Matrix {
        &self.nodes[id.0].value
    }

    pub fn leaf(&mut self, value: Matrix) -> VarId {
        self.push(value, Op::Leaf)
    }

    fn push(&mut self, value: Matrix, op: Op) -> VarId {
        self.nodes.push(Node { value, op });
        VarId(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: VarId, b: VarId) -> Result<VarId, TensorError> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn concat_cols(&mut self, a: VarId, b: VarId) -> Result<VarId, TensorError> {
        let value = self.value(a).concat_cols(self.value(b))?;
        Ok(self.push(value, Op::ConcatCols(a, b)))
    }

    pub fn relu(&mut self, a: VarId) -> VarId {
        let value = self.value(a).relu();
        self.push(value, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: VarId) -> VarId {
        let value = self.value(a).tanh();
        self.push(value, Op::Tanh(a))
    }

    pub fn row_softmax(&mut self, a: VarId) -> VarId {
        let value = self.value(a).row_softmax();
        self.push(value, Op::RowSoftmax(a))
    }

    /// Mean over rows of -log softmax(logits)[row, target], computed in
    /// fused log-sum-exp form.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: VarId,
        targets: &[usize],
    ) -> Result<VarId, TensorError> {
        let m = self.value(logits);
        if targets.len() != m.rows() {
            return Err(TensorError::DimMismatch {
                op: "softmax_cross_entropy",
                lhs: (m.rows(), m.cols()),
                rhs: (targets.len(), 1),
            });
        }
        let mut total = 0.0;
        for (r, &target) in targets.iter().enumerate() {
            if target >= m.cols() {
                return Err(TensorError::TargetOutOfRange {
                    row: r,
                    target,
                    classes: m.cols(),
                });
            }
            let row = m.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + libm::log(row.iter().map(|v| libm::exp(v - max)).sum::<f64>());
            total += lse - row[target];
        }
        let value = Matrix::from_vec(1, 1, vec![total / targets.len() as f64])?;
        Ok(self.push(
            value,
            Op::SoftmaxCrossEntropy {
                logits,
                targets: targets.into(),
            },
        ))
    }

    pub fn gather_pairs(
        &mut self,
        input: VarId,
        pairs: &[(usize, usize)],
    ) -> Result<VarId, TensorError> {
        let m = self.value(input);
        let mut data = Vec::with_capacity(pairs.len() * 2 * m.cols());
        for &(i, j) in pairs {
            for idx in [i, j] {
                if idx >= m.rows() {
                    return Err(TensorError::RowIndexOutOfRange {
                        index: idx,
                        rows: m.rows(),
                    });
                }
            }
            data.extend_from_slice(m.row(i));
            data.extend_from_slice(m.row(j));
        }
        let value = Matrix::from_vec(pairs.len(), 2 * m.cols(), data)?;
        Ok(self.push(
            value,
            Op::GatherPairs {
                input,
                pairs: pairs.into(),
            },
        ))
    }

    pub fn sum(&mut self, a: VarId) -> VarId {
        let total = self.value(a).values().iter().sum();
        let value = Matrix::from_vec(1, 1, vec![total]).expect("finite sum");
        self.push(value, Op::Sum(a))
    }

    /// Propagates d(loss)/d(node) to every recorded node. `loss` must be
    /// a 1x1 value produced by this tape.
    pub fn backward(&self, loss: VarId) -> Result<Gradients, TensorError> {
        let loss_value = self.value(loss);
        if loss_value.rows() != 1 || loss_value.cols() != 1 {
            return Err(TensorError::LossNotScalar {
                rows: loss_value.rows(),
                cols: loss_value.cols(),
            });
        }
        let mut grads: Vec<Matrix> = self
            .nodes
            .iter()
            .map(|n| Matrix::zeros(n.value.rows(), n.value.cols()))
            .collect();
        grads[loss.0].set(0, 0, 1.0);

        for idx in (0..=loss.0).rev() {
            let grad = grads[idx].clone();
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = grad.matmul(&self.value(*b).transpose())?;
                    let gb = self.value(*a).transpose().matmul(&grad)?;
                    grads[a.0].add_assign(&ga);
                    grads[b.0].add_assign(&gb);
                }
                Op::ConcatCols(a, b) => {
                    let left_cols = self.value(*a).cols();
                    let mut ga = Matrix::zeros(grad.rows(), left_cols);
                    let mut gb = Matrix::zeros(grad.rows(), grad.cols() - left_cols);
                    for r in 0..grad.rows() {
                        let (left, right) = grad.row(r).split_at(left_cols);
                        for (c, v) in left.iter().enumerate() {
                            ga.set(r, c, *v);
                        }
                        for (c, v) in right.iter().enumerate() {
                            gb.set(r, c, *v);
                        }
                    }
                    grads[a.0].add_assign(&ga);
                    grads[b.0].add_assign(&gb);
                }
                Op::Relu(a) => {
                    let input = self.value(*a);
                    let ga = Matrix {
                        rows: grad.rows,
                        cols: grad.cols,
                        data: grad
                            .data
                            .iter()
                            .zip(&input.data)
                            .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                            .collect(),
                    };
                    grads[a.0].add_assign(&ga);
                }
                Op::Tanh(a) => {
                    let out = &self.nodes[idx].value;
                    let ga = Matrix {
                        rows: grad.rows,
                        cols: grad.cols,
                        data: grad
                            .data
                            .iter()
                            .zip(&out.data)
                            .map(|(g, y)| g * (1.0 - y * y))
                            .collect(),
                    };
                    grads[a.0].add_assign(&ga);
                }
                Op::RowSoftmax(a) => {
                    let out = &self.nodes[idx].value;
                    let mut ga = Matrix::zeros(grad.rows(), grad.cols());
                    for r in 0..grad.rows() {
                        let s = out.row(r);
                        let g = grad.row(r);
                        let dot: f64 = s.iter().zip(g).map(|(si, gi)| si * gi).sum();
                        for c in 0..grad.cols() {
                            ga.set(r, c, s[c] * (g[c] - dot));
                        }
                    }
                    grads[a.0].add_assign(&ga);
                }
                Op::SoftmaxCrossEntropy { logits, targets } => {
                    let probs = self.value(*logits).row_softmax();
                    let scale = grad.get(0, 0) / targets.len() as f64;
                    let mut ga = probs.scaled(scale);
                    for (r, &target) in targets.iter().enumerate() {
                        let v = ga.get(r, target);
                        ga.set(r, target, v - scale);
                    }
                    grads[logits.0].add_assign(&ga);
                }
                Op::GatherPairs { input, pairs } => {
                    let cols = self.value(*input).cols();
                    let mut ga = Matrix::zeros(self.value(*input).rows(), cols);
                    for (r, &(i, j)) in pairs.iter().enumerate() {
                        let row = grad.row(r);
                        for c in 0..cols {
                            let vi = ga.get(i, c) + row[c];
                            ga.set(i, c, vi);
                            let vj = ga.get(j, c) + row[cols + c];
                            ga.set(j, c, vj);
                        }
                    }
                    grads[input.0].add_assign(&ga);
                }
                Op::Sum(a) => {
                    let g = grad.get(0, 0);
                    let shape = self.value(*a);
                    let ga = Matrix {
                        rows: shape.rows,
                        cols: shape.cols,
                        data: vec![g; shape.rows * shape.cols],
                    };
                    grads[a.0].add_assign(&ga);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

pub struct Gradients {
    grads: Vec<Matrix>,
}

impl Gradients {
    pub fn get(&self, id: VarId) -> &Matrix {
        &self.grads[id.0]
    }
}

/// Plain gradient-descent update: p <- p - lr * g.
pub fn sgd_step(param: &mut Matrix, grad: &Matrix, learning_rate: f64) -> Result<(), TensorError> {
    if (param.rows(), param.cols()) != (grad.rows(), grad.cols()) {
        return Err(TensorError::DimMismatch {
            op: "sgd_step",
            lhs: (param.rows(), param.cols()),
            rhs: (grad.rows(), grad.cols()),
        });
    }
    for (p, g) in param.data.iter_mut().zip(&grad.data) {
        *p -= learning_rate * g;
    }
    if param.data.iter().any(|v| !v.is_finite()) {
        return Err(TensorError::NonFiniteValue);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let mut rng = crate::rng::substream(1, "tensor-test");
        let x = random_matrix(&mut rng, 3, 5);
        let id = Matrix::identity(3);
        assert_eq!(id.matmul(&x).unwrap(), x);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut rng = crate::rng::substream(2, "tensor-test");
        let a = random_matrix(&mut rng, 4, 3);
        let b = random_matrix(&mut rng, 3, 5);
        let got = a.matmul(&b).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                let mut expected = 0.0;
                for k in 0..3 {
                    expected += a.get(i, k) * b.get(k, j);
                }
                assert!((got.get(i, j) - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn matmul_dim_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(
            a.matmul(&b),
            Err(TensorError::DimMismatch { .. })
        ));
    }

    #[test]
    fn softmax_zero_row_is_uniform() {
        let m = Matrix::zeros(1, 4).row_softmax();
        for c in 0..4 {
            assert!((m.get(0, c) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_positive() {
        let mut rng = crate::rng::substream(3, "tensor-test");
        let m = random_matrix(&mut rng, 6, 9).scaled(50.0).row_softmax();
        for r in 0..6 {
            let sum: f64 = m.row(r).iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(m.row(r).iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn cross_entropy_uniform_is_log_c() {
        let mut tape = Tape::new();
        let logits = tape.leaf(Matrix::zeros(2, 5));
        let loss = tape.softmax_cross_entropy(logits, &[0, 3]).unwrap();
        let expected = libm::log(5.0);
        assert!((tape.value(loss).get(0, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_confident_correct_is_near_zero() {
        let mut tape = Tape::new();
        let logits = tape
            .leaf(Matrix::from_vec(1, 3, vec![50.0, 0.0, 0.0]).unwrap());
        let loss = tape.softmax_cross_entropy(logits, &[0]).unwrap();
        assert!(tape.value(loss).get(0, 0) < 1e-12);
    }

    #[test]
    fn cross_entropy_matches_unfused_oracle() {
        let mut rng = crate::rng::substream(4, "tensor-test");
        let logits = random_matrix(&mut rng, 5, 7).scaled(3.0);
        let targets = [2usize, 0, 6, 3, 3];
        let mut tape = Tape::new();
        let id = tape.leaf(logits.clone());
        let loss = tape.softmax_cross_entropy(id, &targets).unwrap();
        // direct formula: mean of -log(softmax[target])
        let probs = logits.row_softmax();
        let expected: f64 = targets
            .iter()
            .enumerate()
            .map(|(r, &t)| -libm::log(probs.get(r, t)))
            .sum::<f64>()
            / targets.len() as f64;
        assert!((tape.value(loss).get(0, 0) - expected).abs() <= 1e-10);
    }

    #[test]
    fn cross_entropy_target_out_of_range() {
        let mut tape = Tape::new();
        let logits = tape.leaf(Matrix::zeros(1, 3));
        assert!(matches!(
            tape.softmax_cross_entropy(logits, &[3]),
            Err(TensorError::TargetOutOfRange { .. })
        ));
    }

    #[test]
    fn sum_gradient_is_all_ones() {
        let mut tape = Tape::new();
        let w = tape.leaf(Matrix::zeros(3, 2));
        let loss = tape.sum(w);
        let grads = tape.backward(loss).unwrap();
        assert!(grads.get(w).values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn sgd_zero_lr_is_identity() {
        let mut p = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let original = p.clone();
        let g = Matrix::from_vec(2, 2, vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        sgd_step(&mut p, &g, 0.0).unwrap();
        assert_eq!(p, original);
    }

    #[test]
    fn backward_rejects_nonscalar_loss() {
        let mut tape = Tape::new();
        let w = tape.leaf(Matrix::zeros(2, 2));
        assert!(matches!(
            tape.backward(w),
            Err(TensorError::LossNotScalar { .. })
        ));
    }

    /// Central finite differences over every entry of every leaf,
    /// comparing against the analytic gradients of `build`.
    fn finite_difference_check(leaves: Vec<Matrix>, build: impl Fn(&mut Tape, &[VarId]) -> VarId) {
        let mut tape = Tape::new();
        let ids: Vec<VarId> = leaves.iter().map(|m| tape.leaf(m.clone())).collect();
        let loss = build(&mut tape, &ids);
        let grads = tape.backward(loss).unwrap();

        let h = 1e-5;
        for (leaf_idx, leaf) in leaves.iter().enumerate() {
            for r in 0..leaf.rows() {
                for c in 0..leaf.cols() {
                    let eval = |delta: f64| {
                        let mut perturbed = leaves.clone();
                        let v = perturbed[leaf_idx].get(r, c);
                        perturbed[leaf_idx].set(r, c, v + delta);
                        let mut t = Tape::new();
                        let ids: Vec<VarId> =
                            perturbed.iter().map(|m| t.leaf(m.clone())).collect();
                        let l = build(&mut t, &ids);
                        t.value(l).get(0, 0)
                    };
                    let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                    let analytic = grads.get(ids[leaf_idx]).get(r, c);
                    let denom = numeric.abs().max(analytic.abs());
                    let err = (numeric - analytic).abs();
                    assert!(
                        err <= 1e-7 || err / denom <= 1e-4,
                        "leaf {leaf_idx} entry ({r},{c}): analytic {analytic}, numeric {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_check_two_layer_network() {
        let mut rng = crate::rng::substream(5, "tensor-test");
        let x = random_matrix(&mut rng, 4, 3);
        let w1 = random_matrix(&mut rng, 3, 6);
        let w2 = random_matrix(&mut rng, 6, 4);
        finite_difference_check(vec![x, w1, w2], |tape, ids| {
            let h = tape.matmul(ids[0], ids[1]).unwrap();
            let h = tape.relu(h);
            let logits = tape.matmul(h, ids[2]).unwrap();
            tape.softmax_cross_entropy(logits, &[1, 0, 3, 2]).unwrap()
        });
    }

    #[test]
    fn gradient_check_concat_gather_softmax() {
        let mut rng = crate::rng::substream(6, "tensor-test");
        let a = random_matrix(&mut rng, 3, 2);
        let b = random_matrix(&mut rng, 3, 4);
        let w = random_matrix(&mut rng, 12, 5);
        finite_difference_check(vec![a, b, w], |tape, ids| {
            let cat = tape.concat_cols(ids[0], ids[1]).unwrap();
            let pairs = tape.gather_pairs(cat, &[(0, 1), (2, 0)]).unwrap();
            let logits = tape.matmul(pairs, ids[2]).unwrap();
            tape.softmax_cross_entropy(logits, &[4, 0]).unwrap()
        });
    }

    #[test]
    fn gradient_check_tanh_and_row_softmax() {
        let mut rng = crate::rng::substream(7, "tensor-test");
        let x = random_matrix(&mut rng, 2, 3);
        let w = random_matrix(&mut rng, 3, 3);
        finite_difference_check(vec![x, w], |tape, ids| {
            let h = tape.matmul(ids[0], ids[1]).unwrap();
            let h = tape.tanh(h);
            let s = tape.row_softmax(h);
            tape.sum(s)
        });
    }

    #[test]
    fn gather_pairs_rows_and_gradient_scatter() {
        let m = Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut tape = Tape::new();
        let id = tape.leaf(m);
        let gathered = tape.gather_pairs(id, &[(2, 0)]).unwrap();
        assert_eq!(tape.value(gathered).row(0), &[5.0, 6.0, 1.0, 2.0]);
        let loss = tape.sum(gathered);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(id).values(), &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn gather_pairs_rejects_out_of_range() {
        let mut tape = Tape::new();
        let id = tape.leaf(Matrix::zeros(2, 2));
        assert!(matches!(
            tape.gather_pairs(id, &[(0, 5)]),
            Err(TensorError::RowIndexOutOfRange { .. })
        ));
    }
}
