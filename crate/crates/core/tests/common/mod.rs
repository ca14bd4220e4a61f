//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use subdiff::problem::{space_time_fn, time_fn, BoundaryData, ProblemSpec};
use subdiff::specfun::gamma;
use subdiff::{BoundaryClosure, SpatialGrid, TimeMesh};

/// Tanh-sinh quadrature of `f(x, x - a, b - x)` over `[a, b]`.
///
/// The integrand receives the distances to both endpoints computed without
/// cancellation, so endpoint singularities such as `(b - x)^{-α}` are
/// resolved to full precision.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const T_MAX: f64 = 6.5;
    let half = 0.5 * (b - a);
    // contribution of the node pair at ±t
    let pair = |t: f64| {
        let s = FRAC_PI_2 * t.sinh();
        let c = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (c * c);
        // half (1 - tanh(s))
        let d = half * (-s).exp() / c;
        if d == 0.0 || w == 0.0 {
            return 0.0;
        }
        w * (f(a + d, d, b - a - d) + f(b - d, b - a - d, d))
    };
    let mut h = 1.0;
    let mut sum = FRAC_PI_2 * f(0.5 * (a + b), half, half);
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += pair(k * h);
        k += 1.0;
    }
    let mut prev = half * h * sum;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1.0;
        while k * h <= T_MAX {
            sum += pair(k * h);
            k += 2.0;
        }
        let next = half * h * sum;
        if (next - prev).abs() <= 1e-15 * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col] != 0.0, "singular dense system");
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            if m != 0.0 {
                for k in col..n {
                    a[row][k] -= m * a[col][k];
                }
                b[row] -= m * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// L1 weights straight from `[ω_{2-α}(t_n - t_{k-1}) - ω_{2-α}(t_n - t_k)] / τ_k`,
/// indexed by `k - 1`.
pub fn naive_l1(t: &[f64], alpha: f64, n: usize) -> Vec<f64> {
    let g = gamma(2.0 - alpha).unwrap();
    (1..=n)
        .map(|k| {
            let tau = t[k] - t[k - 1];
            ((t[n] - t[k - 1]).powf(1.0 - alpha) - (t[n] - t[k]).powf(1.0 - alpha)) / (g * tau)
        })
        .collect()
}

/// A random mesh on `[0, T]`: uniform, graded or jittered.
pub fn random_mesh(rng: &mut ChaCha8Rng, steps: usize, final_time: f64) -> TimeMesh {
    match rng.gen_range(0..3) {
        0 => TimeMesh::uniform(steps, final_time).unwrap(),
        1 => TimeMesh::graded(steps, final_time, rng.gen_range(1.0..4.0)).unwrap(),
        _ => {
            let h = final_time / steps as f64;
            let mut nodes: Vec<f64> = (0..=steps)
                .map(|k| {
                    if k == 0 || k == steps {
                        k as f64 * h
                    } else {
                        (k as f64 + rng.gen_range(-0.4..0.4)) * h
                    }
                })
                .collect();
            nodes[steps] = final_time;
            TimeMesh::from_nodes(nodes).unwrap()
        }
    }
}

/// A problem with random polynomial data touching every boundary term:
/// boundary values and slopes linear in `t`, a quadratic initial profile and
/// a source `(g0 + g1 x + g2 x²)(1 + g3 t)`.
pub fn random_problem(rng: &mut ChaCha8Rng, alpha: f64) -> ProblemSpec {
    let mut r = || rng.gen_range(-1.0..1.0);
    let q: f64 = 1.5 * r() + 0.5;
    let length = 1.0;
    let inv = 1.0 / gamma(2.0 - alpha).unwrap();
    let beta = 1.0 - alpha;
    let linear = |c0: f64, c1: f64| {
        (
            time_fn(move |t| c0 + c1 * t),
            time_fn(move |t| c1 * t.powf(beta) * inv),
        )
    };
    let (p0, p1, s0, s1, r0, r1, z0, z1) = (r(), r(), r(), r(), r(), r(), r(), r());
    let (bl, cap_bl) = linear(p0, p1);
    let (sl, cap_sl) = linear(s0, s1);
    let (br, cap_br) = linear(r0, r1);
    let (sr, cap_sr) = linear(z0, z1);
    let c2 = r();
    // u0(0) = p0, u0(L) = r0
    let c1 = (r0 - p0) / length - c2 * length;
    let (g0, g1, g2, g3) = (r(), r(), r(), r());
    let mut p = ProblemSpec::zero(alpha, q, length, 1.0).unwrap();
    p.initial = time_fn(move |x| p0 + c1 * x + c2 * x * x);
    p.source = space_time_fn(move |x, t| (g0 + g1 * x + g2 * x * x) * (1.0 + g3 * t));
    p.source_dx_left = time_fn(move |t| g1 * (1.0 + g3 * t));
    p.source_dx_right = time_fn(move |t| (g1 + 2.0 * g2 * length) * (1.0 + g3 * t));
    p.left = BoundaryData {
        value: bl,
        slope: sl,
        caputo_value: Some(cap_bl),
        caputo_slope: Some(cap_sl),
    };
    p.right = BoundaryData {
        value: br,
        slope: sr,
        caputo_value: Some(cap_br),
        caputo_slope: Some(cap_sr),
    };
    p.exact_u = None;
    p.exact_v = None;
    p.validate().unwrap();
    p
}

/// Solve the coupled `(u, v)` scheme level by level as one dense system of
/// `2(M+1)` unknowns per level, written row by row from the five scheme
/// equations. Returns `u^0..u^N`.
pub fn coupled_solve(
    problem: &ProblemSpec,
    mesh: &TimeMesh,
    grid: &SpatialGrid,
    closure: BoundaryClosure,
) -> Vec<Vec<f64>> {
    let m = grid.intervals();
    let h = grid.h();
    let t = mesh.nodes();
    let q = problem.q;
    let xs: Vec<f64> = grid.nodes().collect();
    let nu = m + 1;
    let (ui, vi) = (|i: usize| i, |i: usize| nu + i);
    // averaged operator row i as (col, coeff)
    let avg = |i: usize| -> Vec<(usize, f64)> {
        if i == 0 {
            vec![(0, 2.0 / 3.0), (1, 1.0 / 3.0)]
        } else if i == m {
            vec![(m, 2.0 / 3.0), (m - 1, 1.0 / 3.0)]
        } else {
            vec![(i - 1, 1.0 / 12.0), (i, 10.0 / 12.0), (i + 1, 1.0 / 12.0)]
        }
    };
    let d2 = |i: usize| -> Vec<(usize, f64)> {
        let c = 1.0 / (h * h);
        vec![(i - 1, c), (i, -2.0 * c), (i + 1, c)]
    };
    let mut history: Vec<Vec<f64>> = vec![xs.iter().map(|&x| (problem.initial)(x)).collect()];
    for n in 1..=mesh.steps() {
        let tn = t[n];
        let a = naive_l1(t, problem.alpha, n);
        let a0 = a[n - 1];
        // D u^n = a0 u^n - w, w_i = a0 u^{n-1}_i - Σ_{k<n} a_k (u^k - u^{k-1})
        let w: Vec<f64> = (0..nu)
            .map(|i| {
                let mut s = a0 * history[n - 1][i];
                for k in 1..n {
                    s -= a[k - 1] * (history[k][i] - history[k - 1][i]);
                }
                s
            })
            .collect();
        let size = 2 * nu;
        let mut mat = vec![vec![0.0; size]; size];
        let mut rhs = vec![0.0; size];
        let mut row = 0;
        for i in 1..m {
            // A D u + δ² v - q A u = A f
            for (j, c) in avg(i) {
                mat[row][ui(j)] += (a0 - q) * c;
                rhs[row] += c * (w[j] + (problem.source)(xs[j], tn));
            }
            for (j, c) in d2(i) {
                mat[row][vi(j)] += c;
            }
            row += 1;
            // A v - δ² u = 0
            for (j, c) in avg(i) {
                mat[row][vi(j)] += c;
            }
            for (j, c) in d2(i) {
                mat[row][ui(j)] -= c;
            }
            row += 1;
        }
        let (qq, alpha) = (q, problem.alpha);
        let _ = alpha;
        let cap = |c: &Option<subdiff::problem::TimeFn>| (c.as_ref().unwrap())(tn);
        let hb0l = qq * (problem.left.value)(tn) - cap(&problem.left.caputo_value) + (problem.source)(0.0, tn);
        let hb1l = qq * (problem.left.slope)(tn) - cap(&problem.left.caputo_slope) + (problem.source_dx_left)(tn);
        let hb0r =
            qq * (problem.right.value)(tn) - cap(&problem.right.caputo_value) + (problem.source)(problem.length, tn);
        let hb1r = qq * (problem.right.slope)(tn) - cap(&problem.right.caputo_slope) + (problem.source_dx_right)(tn);
        let (c2, c3) = (h * h / 12.0, 7.0 * h * h * h / 180.0);
        // A v_0 - (2/h) δ_x u_{1/2} = -(2/h) b1l + c2 hb0l + c3 hb1l
        for (j, c) in avg(0) {
            mat[row][vi(j)] += c;
        }
        mat[row][ui(1)] -= 2.0 / (h * h);
        mat[row][ui(0)] += 2.0 / (h * h);
        rhs[row] = -2.0 / h * (problem.left.slope)(tn) + c2 * hb0l + c3 * hb1l;
        row += 1;
        // A v_M + (2/h) δ_x u_{M-1/2} = (2/h) b1r ∓ c2 hb0r ± c3 hb1r
        for (j, c) in avg(m) {
            mat[row][vi(j)] += c;
        }
        mat[row][ui(m)] += 2.0 / (h * h);
        mat[row][ui(m - 1)] -= 2.0 / (h * h);
        let sign = match closure {
            BoundaryClosure::Reference => -1.0,
            BoundaryClosure::Mirrored => 1.0,
        };
        rhs[row] = 2.0 / h * (problem.right.slope)(tn) + sign * (c2 * hb0r - c3 * hb1r);
        row += 1;
        mat[row][ui(0)] = 1.0;
        rhs[row] = (problem.left.value)(tn);
        row += 1;
        mat[row][ui(m)] = 1.0;
        rhs[row] = (problem.right.value)(tn);
        row += 1;
        assert_eq!(row, size);
        let sol = dense_solve(mat, rhs);
        history.push(sol[..nu].to_vec());
    }
    history
}

/// Largest `|x - y| / max(|y|_∞, floor)` over two vectors.
pub fn rel_diff(x: &[f64], y: &[f64], floor: f64) -> f64 {
    let scale = y.iter().fold(floor, |m, v| m.max(v.abs()));
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn trapezoid(u: &[f64], v: &[f64], h: f64) -> f64 {
    let m = u.len() - 1;
    let inner: f64 = (1..m).map(|i| u[i] * v[i]).sum();
    h * (0.5 * u[0] * v[0] + inner + 0.5 * u[m] * v[m])
}

/// `‖A v‖² / ‖v‖²` for a grid function vanishing at both ends.
pub fn averaged_norm_ratio(v: &[f64], h: f64) -> f64 {
    let av = subdiff::grid::apply_averaged(v);
    trapezoid(&av, &av, h) / trapezoid(v, v, h)
}

/// `|⟨δ²v, Au⟩ - ⟨δ²u, Av⟩|` relative to the Cauchy-Schwarz scale of both
/// sides.
pub fn adjoint_defect(u: &[f64], v: &[f64], h: f64) -> f64 {
    use subdiff::grid::{apply_averaged, apply_dxx};
    let (au, av) = (apply_averaged(u), apply_averaged(v));
    let (du, dv) = (apply_dxx(u, h), apply_dxx(v, h));
    let lhs = trapezoid(&dv, &au, h);
    let rhs = trapezoid(&du, &av, h);
    let norm = |x: &[f64]| trapezoid(x, x, h).sqrt();
    let scale = norm(&dv) * norm(&au) + norm(&du) * norm(&av);
    (lhs - rhs).abs() / scale
}

/// Difference between `(Av)_0` and its elimination form
/// `h²(19/36 δ²v_1 + 1/18 δ²v_2) + 5/3 (Av)_1 - 2/3 (Av)_2`, relative to
/// `max |v_i|`.
pub fn elimination_defect(v: &[f64], h: f64) -> f64 {
    use subdiff::grid::{apply_averaged, apply_dxx};
    let av = apply_averaged(v);
    let d2 = apply_dxx(v, h);
    let rhs = h * h * (19.0 / 36.0 * d2[1] + d2[2] / 18.0) + 5.0 / 3.0 * av[1] - 2.0 / 3.0 * av[2];
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (av[0] - rhs).abs() / scale
}

/// Apply the L1 operator nodewise to levels `u^0..u^n` and compare with
/// applying it after the averaged operator; relative to the largest term
/// of the L1 sums.
pub fn commutation_defect(levels: &[Vec<f64>], mesh: &TimeMesh, alpha: f64) -> f64 {
    use subdiff::grid::apply_averaged;
    use subdiff::kernels::{l1_caputo, l1_weights};
    let n = levels.len() - 1;
    let w = l1_weights(mesh, alpha, n).unwrap();
    let nodes = levels[0].len();
    let caputo_nodewise = |data: &[Vec<f64>]| -> Vec<f64> {
        (0..nodes)
            .map(|i| {
                let series: Vec<f64> = data.iter().map(|l| l[i]).collect();
                l1_caputo(&series, &w).unwrap()
            })
            .collect()
    };
    let first = apply_averaged(&caputo_nodewise(levels));
    let averaged: Vec<Vec<f64>> = levels.iter().map(|l| apply_averaged(l)).collect();
    let second = caputo_nodewise(&averaged);
    let scale: f64 = (0..nodes)
        .map(|i| (1..=n).map(|k| (w.for_increment(k) * (levels[k][i] - levels[k - 1][i])).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    first.iter().zip(&second).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

/// Random grid function on `M + 1` nodes, optionally pinned to zero at both
/// ends.
pub fn random_grid_values(rng: &mut ChaCha8Rng, m: usize, zero_ends: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if zero_ends {
        v[0] = 0.0;
        v[m] = 0.0;
    }
    v
}

/// Relative error of the L1 formula against the quadrature value of the
/// Caputo derivative of a random continuous piecewise-linear function with
/// breakpoints at the mesh nodes.
pub fn l1_piecewise_linear_defect(rng: &mut ChaCha8Rng, steps: usize, alpha: f64) -> f64 {
    use subdiff::kernels::{l1_caputo, l1_weights};
    use subdiff::specfun::omega;
    let mesh = random_mesh(rng, steps, 1.0);
    let t = mesh.nodes();
    let v: Vec<f64> = (0..=steps).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = steps;
    let terms: Vec<f64> = (1..=n)
        .map(|k| {
            let slope = (v[k] - v[k - 1]) / (t[k] - t[k - 1]);
            let gap = t[n] - t[k];
            slope * tanh_sinh(|_, _, db| omega(1.0 - alpha, gap + db).unwrap(), t[k - 1], t[k])
        })
        .collect();
    let exact: f64 = terms.iter().sum();
    let scale = terms.iter().map(|x| x.abs()).sum::<f64>();
    let got = l1_caputo(&v, &l1_weights(&mesh, alpha, n).unwrap()).unwrap();
    (got - exact).abs() / scale
}
