use serde_json::Value;

use crate::numeric::NeumaierSum;

/// Dense real-valued tensor stored in row-major order. One axis per kernel
/// argument; axis length equals the atom count of the corresponding law.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Table {
    /// Builds a table, failing when `data.len()` differs from the product of `shape`.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, String> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(format!(
                "table holds {} entries but shape {:?} needs {}",
                data.len(),
                shape,
                len
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        for (k, &i) in idx.iter().enumerate() {
            off = off * self.shape[k] + i;
        }
        off
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Applies `I - E_axis` in place, `probs` being the law along `axis`.
    pub fn center_axis(&mut self, axis: usize, probs: &[f64]) {
        let means = self.expect_axis(axis, probs);
        let len = self.data.len();
        let mut idx = vec![0usize; self.rank()];
        for off in 0..len {
            let mean_idx: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != axis)
                .map(|(_, &v)| v)
                .collect();
            self.data[off] -= means.get(&mean_idx);
            increment(&mut idx, &self.shape);
        }
    }

    /// Integrates out a single axis.
    pub fn expect_axis(&self, axis: usize, probs: &[f64]) -> Table {
        let mut mask = vec![false; self.rank()];
        mask[axis] = true;
        let probs_per_axis: Vec<&[f64]> = (0..self.rank())
            .map(|k| if k == axis { probs } else { &[][..] })
            .collect();
        self.expect_axes(&mask, &probs_per_axis)
    }

    /// Integrates out every axis with `reduce[k] == true` against
    /// `probs[k]`; the result keeps the remaining axes in order.
    pub fn expect_axes(&self, reduce: &[bool], probs: &[&[f64]]) -> Table {
        let out_shape: Vec<usize> = self
            .shape
            .iter()
            .zip(reduce)
            .filter(|(_, &r)| !r)
            .map(|(&s, _)| s)
            .collect();
        let out_len: usize = out_shape.iter().product();
        let mut acc = vec![NeumaierSum::new(); out_len];
        let mut idx = vec![0usize; self.rank()];
        for &v in &self.data {
            let mut weight = 1.0;
            let mut out_off = 0;
            for (k, &i) in idx.iter().enumerate() {
                if reduce[k] {
                    weight *= probs[k][i];
                } else {
                    out_off = out_off * self.shape[k] + i;
                }
            }
            acc[out_off].add(weight * v);
            increment(&mut idx, &self.shape);
        }
        Table {
            shape: out_shape,
            data: acc.iter().map(NeumaierSum::value).collect(),
        }
    }

    /// Keeps only the listed indices along each axis.
    pub fn select(&self, keep: &[Vec<usize>]) -> Table {
        let shape: Vec<usize> = keep.iter().map(Vec::len).collect();
        let mut src = vec![0usize; self.rank()];
        Table::from_fn(shape, |idx| {
            for (k, &i) in idx.iter().enumerate() {
                src[k] = keep[k][i];
            }
            self.get(&src)
        })
    }

    /// Returns `T'` with `T'[y] = T[x]` where `y[k] = x[perm[k]]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Table {
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut x = vec![0usize; self.rank()];
        Table::from_fn(shape, |y| {
            for (k, &p) in perm.iter().enumerate() {
                x[p] = y[k];
            }
            self.get(&x)
        })
    }

    /// Nested JSON arrays, one nesting level per axis. A rank-0 table is a bare number.
    pub fn to_json(&self) -> Value {
        fn build(data: &[f64], shape: &[usize]) -> Value {
            match shape.split_first() {
                None => Value::from(data[0]),
                Some((&len, rest)) => {
                    let stride: usize = rest.iter().product();
                    Value::Array(
                        (0..len)
                            .map(|k| build(&data[k * stride..(k + 1) * stride], rest))
                            .collect(),
                    )
                }
            }
        }
        build(&self.data, &self.shape)
    }

    /// Parses nested arrays against an expected shape.
    pub fn from_json(value: &Value, shape: &[usize]) -> Result<Table, String> {
        fn walk(value: &Value, shape: &[usize], path: &mut String, out: &mut Vec<f64>) -> Result<(), String> {
            match shape.split_first() {
                None => match value.as_f64() {
                    Some(v) => {
                        out.push(v);
                        Ok(())
                    }
                    None => Err(format!("{path}: expected a number")),
                },
                Some((&len, rest)) => {
                    let arr = value
                        .as_array()
                        .ok_or_else(|| format!("{path}: expected an array of length {len}"))?;
                    if arr.len() != len {
                        return Err(format!(
                            "{path}: expected length {len}, found {}",
                            arr.len()
                        ));
                    }
                    for (k, item) in arr.iter().enumerate() {
                        let saved = path.len();
                        path.push_str(&format!("[{k}]"));
                        walk(item, rest, path, out)?;
                        path.truncate(saved);
                    }
                    Ok(())
                }
            }
        }
        let mut out = Vec::with_capacity(shape.iter().product());
        let mut path = String::new();
        walk(value, shape, &mut path, &mut out)?;
        Ok(Table {
            shape: shape.to_vec(),
            data: out,
        })
    }

    /// Shape inferred from the first element at each nesting level.
    pub fn infer_shape(value: &Value) -> Vec<usize> {
        let mut shape = Vec::new();
        let mut cur = value;
        while let Some(arr) = cur.as_array() {
            shape.push(arr.len());
            match arr.first() {
                Some(first) => cur = first,
                None => break,
            }
        }
        shape
    }
}

/// Row-major odometer increment; wraps to all zeros after the last index.
#[inline]
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}
