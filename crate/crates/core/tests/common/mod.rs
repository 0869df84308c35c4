#![allow(dead_code)]

use nemaflow::Field;

/// Mean oscillation over every cube the grid can hold: all sides `2..=n`
/// points at every base point, wrapping periodically. Single points never
/// oscillate.
pub fn exhaustive_bmo(f: &Field) -> f64 {
    let g = *f.grid();
    let n = g.n();
    let dim = g.dim();
    let comps = f.components();
    let np = g.npoints();
    let nz = if dim == 3 { n } else { 1 };
    // Point-major copy so a cube visit reads contiguous components.
    let mut pts = vec![0.0; np * comps];
    for c in 0..comps {
        for (p, v) in f.component(c).iter().enumerate() {
            pts[p * comps + c] = *v;
        }
    }
    let at = |i: usize, j: usize, k: usize| {
        let idx = if dim == 3 {
            (i * n + j) * n + k
        } else {
            i * n + j
        };
        &pts[idx * comps..(idx + 1) * comps]
    };
    let mut best: f64 = 0.0;
    let mut members: Vec<&[f64]> = Vec::new();
    for side in 2..=n {
        let sz = if dim == 3 { side } else { 1 };
        let count = (side * side * sz) as f64;
        for i0 in 0..n {
            for j0 in 0..n {
                for k0 in 0..nz {
                    members.clear();
                    for a in 0..side {
                        for b in 0..side {
                            for c in 0..sz {
                                members.push(at((i0 + a) % n, (j0 + b) % n, (k0 + c) % nz.max(1)));
                            }
                        }
                    }
                    let mut mean = vec![0.0; comps];
                    for m in &members {
                        for c in 0..comps {
                            mean[c] += m[c];
                        }
                    }
                    for v in &mut mean {
                        *v /= count;
                    }
                    let osc: f64 = members
                        .iter()
                        .map(|m| {
                            m.iter()
                                .zip(&mean)
                                .map(|(x, y)| (x - y) * (x - y))
                                .sum::<f64>()
                                .sqrt()
                        })
                        .sum::<f64>()
                        / count;
                    best = best.max(osc);
                }
            }
        }
    }
    best
}
