//! Symmetric 3-D Hausdorff distance in physical millimetres.

use crate::error::{Error, Result};
use crate::volcore::Mask;

/// Above this `|A|·|B|` product the distance-transform path is used.
pub const BRUTE_FORCE_PAIR_LIMIT: usize = 50_000;

fn voxels(m: &Mask) -> Vec<[i64; 3]> {
    let [nx, ny, _] = m.dims();
    m.data()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| [(i % nx) as i64, ((i / nx) % ny) as i64, (i / (nx * ny)) as i64])
        .collect()
}

fn check(a: &Mask, b: &Mask) -> Result<()> {
    if a.dims() != b.dims() || a.spacing() != b.spacing() {
        return Err(Error::Alignment);
    }
    if !a.any() {
        return Err(Error::EmptyMask("first Hausdorff operand"));
    }
    if !b.any() {
        return Err(Error::EmptyMask("second Hausdorff operand"));
    }
    Ok(())
}

#[inline]
fn sq_dist(p: &[i64; 3], q: &[i64; 3], w: &[f64; 3]) -> f64 {
    let d = |i: usize| ((p[i] - q[i]) * (p[i] - q[i])) as f64 * w[i];
    d(0) + d(1) + d(2)
}

fn weights(m: &Mask) -> [f64; 3] {
    let s = m.spacing();
    [s[0] * s[0], s[1] * s[1], s[2] * s[2]]
}

/// Exhaustive `O(|A|·|B|)` evaluation.
pub fn hausdorff3d_brute(a: &Mask, b: &Mask) -> Result<f64> {
    check(a, b)?;
    let w = weights(a);
    let (va, vb) = (voxels(a), voxels(b));
    let directed = |xs: &[[i64; 3]], ys: &[[i64; 3]]| {
        xs.iter()
            .map(|x| ys.iter().map(|y| sq_dist(x, y, &w)).fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max)
    };
    Ok(directed(&va, &vb).max(directed(&vb, &va)).sqrt())
}

/// 1-D lower envelope of parabolas `f(p) + w (q − p)²` (Felzenszwalb–Huttenlocher).
fn edt_1d(f: &[f64], w: f64, out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let (qf, pf) = (q as f64, p as f64);
                    let s = ((f[q] + w * qf * qf) - (f[p] + w * pf * pf)) / (2.0 * w * (qf - pf));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *o = f[p] + ((q as i64 - p as i64).pow(2)) as f64 * w;
    }
}

/// Squared distance in mm² from every voxel to the nearest set voxel of `m`.
fn squared_edt(m: &Mask) -> Vec<f64> {
    let [nx, ny, nz] = m.dims();
    let w = weights(m);
    let mut d: Vec<f64> = m.data().iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());
    let mut line = Vec::new();
    let mut out = Vec::new();
    let mut pass = |d: &mut Vec<f64>, len: usize, stride: usize, starts: Vec<usize>, weight: f64| {
        line.resize(len, 0.0);
        out.resize(len, 0.0);
        for s in starts {
            for i in 0..len {
                line[i] = d[s + i * stride];
            }
            edt_1d(&line, weight, &mut out, &mut v, &mut z);
            for i in 0..len {
                d[s + i * stride] = out[i];
            }
        }
    };
    let xs: Vec<usize> = (0..ny * nz).map(|r| r * nx).collect();
    pass(&mut d, nx, 1, xs, w[0]);
    let ys: Vec<usize> = (0..nz).flat_map(|zz| (0..nx).map(move |x| zz * nx * ny + x)).collect();
    pass(&mut d, ny, nx, ys, w[1]);
    let zs: Vec<usize> = (0..nx * ny).collect();
    pass(&mut d, nz, nx * ny, zs, w[2]);
    d
}

/// Distance-transform evaluation, `O(N)` in the grid size.
pub fn hausdorff3d_edt(a: &Mask, b: &Mask) -> Result<f64> {
    check(a, b)?;
    let directed = |x: &Mask, dt: &[f64]| {
        x.data().iter().zip(dt).filter(|(&s, _)| s).map(|(_, &d)| d).fold(0.0f64, f64::max)
    };
    let (da, db) = (squared_edt(a), squared_edt(b));
    Ok(directed(a, &db).max(directed(b, &da)).sqrt())
}

/// `max(h(A,B), h(B,A))` with anisotropic spacing. Undefined (an error) when
/// either mask is empty.
pub fn hausdorff3d(a: &Mask, b: &Mask) -> Result<f64> {
    check(a, b)?;
    if a.count().saturating_mul(b.count()) <= BRUTE_FORCE_PAIR_LIMIT {
        hausdorff3d_brute(a, b)
    } else {
        hausdorff3d_edt(a, b)
    }
}
