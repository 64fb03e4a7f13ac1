//! Forward operations with recorded backward closures.
//!
//! Ops allocate fresh output buffers; when any input is tracked the output
//! joins the same tape. Shape mismatches panic with both shapes included.

use super::{accumulate, GradCell, Node, TapeInner, Tensor};
use std::cell::RefCell;
use std::rc::Rc;

fn attach(out: &mut Tensor, tape: &Rc<TapeInner>, back: Box<dyn Fn(&[f64])>) {
    let cell: GradCell = Rc::new(RefCell::new(None));
    out.grad = Some(cell.clone());
    out.tape = Some(tape.clone());
    tape.nodes.borrow_mut().push(Node { out_grad: cell, back });
}

fn assert_same_shape(op: &str, a: &Tensor, b: &Tensor) {
    assert_eq!(
        a.shape(),
        b.shape(),
        "shape mismatch in {op}: {:?} vs {:?}",
        a.shape(),
        b.shape()
    );
}

fn rows_cols(t: &Tensor) -> (usize, usize) {
    match t.shape() {
        [r, c] => (*r, *c),
        [n] => (1, *n),
        s => panic!("expected matrix or vector, got shape {s:?}"),
    }
}

/// Matrix product `[m,k] x [k,n] -> [m,n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = rows_cols(a);
    let (k2, n) = rows_cols(b);
    assert_eq!(k, k2, "shape mismatch in matmul: {:?} vs {:?}", a.shape(), b.shape());

    let ad = a.data();
    let bd = b.data();
    let mut data = vec![0.0; m * n];
    for i in 0..m {
        for l in 0..k {
            let av = ad[i * k + l];
            if av == 0.0 {
                continue;
            }
            let brow = &bd[l * n..(l + 1) * n];
            let orow = &mut data[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    let mut out = Tensor::from_vec(vec![m, n], data);
    if let Some(tape) = Tensor::tape_of(&[a, b]) {
        let (ag, bg) = (a.grad.clone(), b.grad.clone());
        let (ad, bd) = (a.data.clone(), b.data.clone());
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &ag {
                // dA = G * B^T
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for l in 0..k {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += g[i * n + j] * bd[l * n + j];
                        }
                        da[i * k + l] = acc;
                    }
                }
                accumulate(cell, &da);
            }
            if let Some(cell) = &bg {
                // dB = A^T * G
                let mut db = vec![0.0; k * n];
                for l in 0..k {
                    for i in 0..m {
                        let av = ad[i * k + l];
                        if av == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            db[l * n + j] += av * g[i * n + j];
                        }
                    }
                }
                accumulate(cell, &db);
            }
        }));
    }
    out
}

/// Elementwise sum of two same-shape tensors.
pub fn add(a: &Tensor, b: &Tensor) -> Tensor {
    assert_same_shape("add", a, b);
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    let mut out = Tensor::from_vec(a.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[a, b]) {
        let (ag, bg) = (a.grad.clone(), b.grad.clone());
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &ag {
                accumulate(cell, g);
            }
            if let Some(cell) = &bg {
                accumulate(cell, g);
            }
        }));
    }
    out
}

/// Adds a `[n]` (or `[1,n]`) bias row to every row of `[m,n]`.
pub fn add_row(a: &Tensor, bias: &Tensor) -> Tensor {
    let (m, n) = rows_cols(a);
    assert_eq!(
        bias.numel(),
        n,
        "shape mismatch in add_row: {:?} vs {:?}",
        a.shape(),
        bias.shape()
    );
    let bd = bias.data();
    let data = a
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| v + bd[i % n])
        .collect();
    let mut out = Tensor::from_vec(a.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[a, bias]) {
        let (ag, bg) = (a.grad.clone(), bias.grad.clone());
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &ag {
                accumulate(cell, g);
            }
            if let Some(cell) = &bg {
                let mut db = vec![0.0; n];
                for i in 0..m {
                    for j in 0..n {
                        db[j] += g[i * n + j];
                    }
                }
                accumulate(cell, &db);
            }
        }));
    }
    out
}

pub fn neg(x: &Tensor) -> Tensor {
    mul_scalar(x, -1.0)
}

pub fn sub(a: &Tensor, b: &Tensor) -> Tensor {
    add(a, &neg(b))
}

/// Elementwise product.
pub fn mul(a: &Tensor, b: &Tensor) -> Tensor {
    assert_same_shape("mul", a, b);
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    let mut out = Tensor::from_vec(a.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[a, b]) {
        let (ag, bg) = (a.grad.clone(), b.grad.clone());
        let (ad, bd) = (a.data.clone(), b.data.clone());
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &ag {
                let da: Vec<f64> = g.iter().zip(bd.iter()).map(|(gi, bi)| gi * bi).collect();
                accumulate(cell, &da);
            }
            if let Some(cell) = &bg {
                let db: Vec<f64> = g.iter().zip(ad.iter()).map(|(gi, ai)| gi * ai).collect();
                accumulate(cell, &db);
            }
        }));
    }
    out
}

/// Elementwise quotient.
pub fn div(a: &Tensor, b: &Tensor) -> Tensor {
    assert_same_shape("div", a, b);
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x / y).collect();
    let mut out = Tensor::from_vec(a.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[a, b]) {
        let (ag, bg) = (a.grad.clone(), b.grad.clone());
        let (ad, bd) = (a.data.clone(), b.data.clone());
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &ag {
                let da: Vec<f64> = g.iter().zip(bd.iter()).map(|(gi, bi)| gi / bi).collect();
                accumulate(cell, &da);
            }
            if let Some(cell) = &bg {
                let db: Vec<f64> = g
                    .iter()
                    .zip(ad.iter().zip(bd.iter()))
                    .map(|(gi, (ai, bi))| -gi * ai / (bi * bi))
                    .collect();
                accumulate(cell, &db);
            }
        }));
    }
    out
}

pub fn add_scalar(x: &Tensor, c: f64) -> Tensor {
    let data = x.data().iter().map(|v| v + c).collect();
    let mut out = Tensor::from_vec(x.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                accumulate(cell, g);
            }
        }));
    }
    out
}

pub fn mul_scalar(x: &Tensor, c: f64) -> Tensor {
    let data = x.data().iter().map(|v| v * c).collect();
    let mut out = Tensor::from_vec(x.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let dx: Vec<f64> = g.iter().map(|gi| gi * c).collect();
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    let data: Vec<f64> = x.data().iter().map(|&v| 1.0 / (1.0 + (-v).exp())).collect();
    let mut out = Tensor::from_vec(x.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        let saved = out.data.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let dx: Vec<f64> =
                    g.iter().zip(saved.iter()).map(|(gi, &s)| gi * s * (1.0 - s)).collect();
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

pub fn relu(x: &Tensor) -> Tensor {
    let data: Vec<f64> = x.data().iter().map(|&v| v.max(0.0)).collect();
    let mut out = Tensor::from_vec(x.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        let xd = x.data.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let dx: Vec<f64> = g
                    .iter()
                    .zip(xd.iter())
                    .map(|(gi, &v)| if v > 0.0 { *gi } else { 0.0 })
                    .collect();
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

pub fn exp(x: &Tensor) -> Tensor {
    let data: Vec<f64> = x.data().iter().map(|v| v.exp()).collect();
    let mut out = Tensor::from_vec(x.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        let saved = out.data.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let dx: Vec<f64> = g.iter().zip(saved.iter()).map(|(gi, &e)| gi * e).collect();
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

/// Natural log; inputs must be positive.
pub fn ln(x: &Tensor) -> Tensor {
    let data: Vec<f64> = x.data().iter().map(|v| v.ln()).collect();
    let mut out = Tensor::from_vec(x.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        let xd = x.data.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let dx: Vec<f64> = g.iter().zip(xd.iter()).map(|(gi, &v)| gi / v).collect();
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

/// Row-wise softmax over the last dimension of `[m,n]`.
pub fn softmax_rows(x: &Tensor) -> Tensor {
    let (m, n) = rows_cols(x);
    let xd = x.data();
    let mut data = vec![0.0; m * n];
    for i in 0..m {
        let row = &xd[i * n..(i + 1) * n];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for j in 0..n {
            let e = (row[j] - max).exp();
            data[i * n + j] = e;
            sum += e;
        }
        for j in 0..n {
            data[i * n + j] /= sum;
        }
    }
    let mut out = Tensor::from_vec(x.shape().to_vec(), data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        let saved = out.data.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    let s = &saved[i * n..(i + 1) * n];
                    let gr = &g[i * n..(i + 1) * n];
                    let dot: f64 = s.iter().zip(gr).map(|(si, gi)| si * gi).sum();
                    for j in 0..n {
                        dx[i * n + j] = s[j] * (gr[j] - dot);
                    }
                }
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

/// Sum of all elements, as a scalar.
pub fn sum(x: &Tensor) -> Tensor {
    let total: f64 = x.data().iter().sum();
    let n = x.numel();
    let mut out = Tensor::from_vec(vec![1], vec![total]);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                accumulate(cell, &vec![g[0]; n]);
            }
        }));
    }
    out
}

/// Mean of all elements, as a scalar.
pub fn mean(x: &Tensor) -> Tensor {
    let n = x.numel();
    mul_scalar(&sum(x), 1.0 / n as f64)
}

/// Maximum element, as a scalar; the gradient routes to the first argmax.
pub fn max(x: &Tensor) -> Tensor {
    assert!(x.numel() > 0, "max of empty tensor");
    let mut idx = 0;
    let mut best = x.data()[0];
    for (i, &v) in x.data().iter().enumerate().skip(1) {
        if v > best {
            best = v;
            idx = i;
        }
    }
    let n = x.numel();
    let mut out = Tensor::from_vec(vec![1], vec![best]);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let mut dx = vec![0.0; n];
                dx[idx] = g[0];
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

/// Selects rows of `[m,d]` by index, producing `[k,d]`. Indices may repeat.
pub fn gather(x: &Tensor, idx: &[usize]) -> Tensor {
    let (m, d) = rows_cols(x);
    let xd = x.data();
    let mut data = Vec::with_capacity(idx.len() * d);
    for &i in idx {
        assert!(i < m, "gather index {i} out of range for {m} rows");
        data.extend_from_slice(&xd[i * d..(i + 1) * d]);
    }
    let mut out = Tensor::from_vec(vec![idx.len(), d], data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        let idx = idx.to_vec();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let mut dx = vec![0.0; m * d];
                for (row, &i) in idx.iter().enumerate() {
                    for j in 0..d {
                        dx[i * d + j] += g[row * d + j];
                    }
                }
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

/// Adds each row of `[k,d]` into output row `idx[k]` of a zero `[m,d]`.
pub fn scatter_add(x: &Tensor, idx: &[usize], out_rows: usize) -> Tensor {
    let (k, d) = rows_cols(x);
    assert_eq!(k, idx.len(), "scatter_add needs one index per row, got {k} rows, {} indices", idx.len());
    let xd = x.data();
    let mut data = vec![0.0; out_rows * d];
    for (row, &i) in idx.iter().enumerate() {
        assert!(i < out_rows, "scatter index {i} out of range for {out_rows} rows");
        for j in 0..d {
            data[i * d + j] += xd[row * d + j];
        }
    }
    let mut out = Tensor::from_vec(vec![out_rows, d], data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        let idx = idx.to_vec();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let mut dx = vec![0.0; k * d];
                for (row, &i) in idx.iter().enumerate() {
                    for j in 0..d {
                        dx[row * d + j] = g[i * d + j];
                    }
                }
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

/// Per-segment columnwise maximum: rows of `[n,d]` grouped by `seg` into
/// `[m,d]`. Empty segments yield zeros. Gradients route to the first argmax
/// row of each (segment, column).
pub fn segment_max(x: &Tensor, seg: &[usize], segments: usize) -> Tensor {
    let (n, d) = rows_cols(x);
    assert_eq!(n, seg.len(), "segment_max needs one segment id per row");
    let xd = x.data();
    let mut data = vec![f64::NEG_INFINITY; segments * d];
    let mut argmax = vec![usize::MAX; segments * d];
    for row in 0..n {
        let s = seg[row];
        assert!(s < segments, "segment id {s} out of range");
        for j in 0..d {
            let v = xd[row * d + j];
            if v > data[s * d + j] {
                data[s * d + j] = v;
                argmax[s * d + j] = row;
            }
        }
    }
    for v in data.iter_mut() {
        if *v == f64::NEG_INFINITY {
            *v = 0.0;
        }
    }
    let mut out = Tensor::from_vec(vec![segments, d], data);
    if let Some(tape) = Tensor::tape_of(&[x]) {
        let xg = x.grad.clone();
        attach(&mut out, &tape, Box::new(move |g| {
            if let Some(cell) = &xg {
                let mut dx = vec![0.0; n * d];
                for s in 0..segments {
                    for j in 0..d {
                        let row = argmax[s * d + j];
                        if row != usize::MAX {
                            dx[row * d + j] += g[s * d + j];
                        }
                    }
                }
                accumulate(cell, &dx);
            }
        }));
    }
    out
}

/// Column-concatenates same-row-count matrices.
pub fn concat_cols(parts: &[&Tensor]) -> Tensor {
    assert!(!parts.is_empty());
    let rows = rows_cols(parts[0]).0;
    let widths: Vec<usize> = parts
        .iter()
        .map(|p| {
            let (r, c) = rows_cols(p);
            assert_eq!(r, rows, "concat_cols row mismatch: {:?} vs {rows} rows", p.shape());
            c
        })
        .collect();
    let total: usize = widths.iter().sum();
    let mut data = vec![0.0; rows * total];
    let mut offset = 0;
    for (p, &w) in parts.iter().zip(&widths) {
        let pd = p.data();
        for i in 0..rows {
            data[i * total + offset..i * total + offset + w]
                .copy_from_slice(&pd[i * w..(i + 1) * w]);
        }
        offset += w;
    }
    let mut out = Tensor::from_vec(vec![rows, total], data);
    if let Some(tape) = Tensor::tape_of(parts) {
        let grads: Vec<Option<GradCell>> = parts.iter().map(|p| p.grad.clone()).collect();
        attach(&mut out, &tape, Box::new(move |g| {
            let mut offset = 0;
            for (cell, &w) in grads.iter().zip(&widths) {
                if let Some(cell) = cell {
                    let mut dp = vec![0.0; rows * w];
                    for i in 0..rows {
                        dp[i * w..(i + 1) * w]
                            .copy_from_slice(&g[i * total + offset..i * total + offset + w]);
                    }
                    accumulate(cell, &dp);
                }
                offset += w;
            }
        }));
    }
    out
}

/// Row-concatenates same-column-count matrices.
pub fn concat_rows(parts: &[&Tensor]) -> Tensor {
    assert!(!parts.is_empty());
    let cols = rows_cols(parts[0]).1;
    let row_counts: Vec<usize> = parts
        .iter()
        .map(|p| {
            let (r, c) = rows_cols(p);
            assert_eq!(c, cols, "concat_rows column mismatch: {:?} vs {cols} cols", p.shape());
            r
        })
        .collect();
    let total_rows: usize = row_counts.iter().sum();
    let mut data = Vec::with_capacity(total_rows * cols);
    for p in parts {
        data.extend_from_slice(p.data());
    }
    let mut out = Tensor::from_vec(vec![total_rows, cols], data);
    if let Some(tape) = Tensor::tape_of(parts) {
        let grads: Vec<Option<GradCell>> = parts.iter().map(|p| p.grad.clone()).collect();
        attach(&mut out, &tape, Box::new(move |g| {
            let mut offset = 0;
            for (cell, &r) in grads.iter().zip(&row_counts) {
                if let Some(cell) = cell {
                    accumulate(cell, &g[offset * cols..(offset + r) * cols]);
                }
                offset += r;
            }
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Parameter, Tape};

    #[test]
    fn sigmoid_at_zero() {
        let x = Tensor::scalar(0.0);
        assert!((sigmoid(&x).item() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn softmax_of_constant_vector_is_uniform() {
        let x = Tensor::from_vec(vec![1, 4], vec![3.0; 4]);
        let s = softmax_rows(&x);
        for &v in s.data() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn scatter_add_example() {
        let ones = Tensor::from_vec(vec![3, 1], vec![1.0; 3]);
        let out = scatter_add(&ones, &[0, 0, 1], 2);
        assert_eq!(out.data(), &[2.0, 1.0]);
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let tape = Tape::new();
        let p = Parameter::new("x", vec![1], vec![0.0]);
        let x = tape.leaf(&p);
        sigmoid(&x).backward().unwrap();
        assert!((p.grad()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn matmul_known_product_and_grads() {
        let tape = Tape::new();
        let a = Parameter::new("a", vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let b = Parameter::new("b", vec![2, 2], vec![5.0, 6.0, 7.0, 8.0]);
        let out = matmul(&tape.leaf(&a), &tape.leaf(&b));
        assert_eq!(out.data(), &[19.0, 22.0, 43.0, 50.0]);
        sum(&out).backward().unwrap();
        // dA = ones * B^T
        assert_eq!(&*a.grad(), &[11.0, 15.0, 11.0, 15.0]);
        assert_eq!(&*b.grad(), &[4.0, 4.0, 6.0, 6.0]);
    }

    #[test]
    fn shape_mismatch_panics_with_both_shapes() {
        let a = Tensor::zeros(vec![2, 3]);
        let b = Tensor::zeros(vec![3, 3]);
        let err = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| add(&a, &b))).unwrap_err();
        let msg = err.downcast_ref::<String>().cloned().unwrap_or_default();
        assert!(msg.contains("[2, 3]") && msg.contains("[3, 3]"), "message was: {msg}");
    }

    #[test]
    fn segment_max_routes_gradient() {
        let tape = Tape::new();
        let p = Parameter::new("x", vec![4, 1], vec![1.0, 5.0, 2.0, 7.0]);
        let x = tape.leaf(&p);
        let m = segment_max(&x, &[0, 0, 1, 1], 2);
        assert_eq!(m.data(), &[5.0, 7.0]);
        sum(&m).backward().unwrap();
        assert_eq!(&*p.grad(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn max_reduction_picks_first_argmax() {
        let tape = Tape::new();
        let p = Parameter::new("x", vec![3], vec![2.0, 9.0, 9.0]);
        let x = tape.leaf(&p);
        let m = max(&x);
        assert_eq!(m.item(), 9.0);
        m.backward().unwrap();
        assert_eq!(&*p.grad(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn gather_concat_round_trip_grads() {
        let tape = Tape::new();
        let p = Parameter::new("x", vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = tape.leaf(&p);
        let picked = gather(&x, &[2, 0, 2]);
        assert_eq!(picked.data(), &[5.0, 6.0, 1.0, 2.0, 5.0, 6.0]);
        let joined = concat_cols(&[&picked, &picked]);
        assert_eq!(joined.shape(), &[3, 4]);
        sum(&joined).backward().unwrap();
        assert_eq!(&*p.grad(), &[2.0, 2.0, 0.0, 0.0, 4.0, 4.0]);
    }
}
