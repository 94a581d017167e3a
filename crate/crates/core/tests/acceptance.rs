//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! binary exits non-zero if any check fails.

use std::time::{Duration, Instant};

use dbarpos::forms::{commutator_of_hermitian, commutator_operator};
use dbarpos::geometry::{
    finite_difference_hessian, parse_weight, CheckOptions, CurvatureAtPoint, Domain, Weight,
};
use dbarpos::linalg::norm_sqr;
use dbarpos::probes::{
    build_control_probe, build_probe_form, default_schedule, fiber_integrate_prekopa, monotone_limit_check,
    probe_rhs, run_probe, Fiber, FiberOptions,
};
use dbarpos::solver::{dbar_of, discretize_dbar, estimate_ratio, minimal_solution, GridField, GridSpec};
use dbarpos::{eig_hermitian, q_smallest_sum, subset_sums_oracle, CMatrix, HermitianMatrix, Spectrum, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for k in j + 1..n {
            let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
    }
    HermitianMatrix::new(m).unwrap()
}

/// `q`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            go(j + 1, n, q, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    go(0, n, q, &mut vec![], &mut out);
    out
}

fn diagonal_commutator() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let theta = CurvatureAtPoint::from_hermitian(&HermitianMatrix::diagonal(&d).unwrap());
        for q in 1..=n {
            let a = commutator_operator(&theta, q).map_err(|e| e.to_string())?;
            let m = a.matrix();
            let sets = subsets(n, q);
            for (i, s) in sets.iter().enumerate() {
                for j in 0..sets.len() {
                    let want = if i == j { s.iter().map(|&k| d[k]).sum() } else { 0.0 };
                    worst = worst.max((m.get(i, j) - C64::new(want, 0.0)).norm());
                }
            }
        }
    }
    let detail = format!("max entry error {worst:.2e} over 200 diagonal curvatures");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spectral_bridge() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut min_gap, mut spec_gap) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let theta = random_hermitian(&mut rng, n);
        let ev = eig_hermitian(&theta).map_err(|e| e.to_string())?;
        for q in 1..=n {
            let a = commutator_of_hermitian(&theta, q).map_err(|e| e.to_string())?;
            let op = eig_hermitian(a.matrix()).map_err(|e| e.to_string())?;
            let smallest = q_smallest_sum(&ev, q).map_err(|e| e.to_string())?;
            min_gap = min_gap.max((op.min() - smallest).abs());
            let mut sums: Vec<f64> =
                subsets(n, q).iter().map(|s| s.iter().map(|&k| ev.eigenvalues[k]).sum()).collect();
            sums.sort_by(f64::total_cmp);
            for (x, y) in sums.iter().zip(&op.eigenvalues) {
                spec_gap = spec_gap.max((x - y).abs());
            }
        }
    }
    let detail = format!("lambda_min gap {min_gap:.2e}, spectrum gap {spec_gap:.2e}");
    if min_gap <= 1e-10 && spec_gap <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=10);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let s = Spectrum::from_eigenvalues(values).map_err(|e| e.to_string())?;
        for q in 1..=n {
            let fast = q_smallest_sum(&s, q).map_err(|e| e.to_string())?;
            let slow = subset_sums_oracle(&s, q).map_err(|e| e.to_string())?;
            let min = slow.into_iter().fold(f64::INFINITY, f64::min);
            worst = worst.max((fast - min).abs());
        }
    }
    let detail = format!("max gap {worst:.2e} over 1000 spectra");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn estimate_ratios() -> Check {
    let origin = |n: usize| vec![zero(); n];
    let mut lines = vec![];
    let mut ok = true;
    let cases: [(usize, usize, usize, f64, f64); 4] =
        [(1, 1, 64, 0.8, 1.10), (1, 1, 128, 0.8, 1.05), (2, 1, 32, 0.6, 1.15), (2, 2, 32, 0.6, 1.15)];
    for (n, q, ppa, r, limit) in cases {
        let domain = if n == 1 { Domain::unit_ball(1) } else { Domain::unit_polydisc(2) };
        let grid = GridSpec::over_domain(&domain, ppa).map_err(|e| e.to_string())?;
        let f = probe_rhs(&grid, q, &origin(n), r).map_err(|e| e.to_string())?;
        let w = Weight::norm_squared(n);
        let est = estimate_ratio(&f, &w, &w, 1.0, q).map_err(|e| e.to_string())?;
        let ratio = est.report.ratio;
        ok &= ratio <= limit && ratio > 0.0;
        lines.push(format!("n={n} q={q} {ppa}/axis ratio {ratio:.4} (<= {limit})"));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

/// The violating probe for criterion 5 and the deviation for criterion 6.
fn probe_and_deviation() -> (Check, Check) {
    let run = || -> Result<(Check, f64), String> {
        let d = Domain::unit_ball(2);
        let w = Weight::diagonal_quadratic(&[-1.0, 1.0]).on_domain(d.clone()).map_err(|e| e.to_string())?;
        let (g, cfg) = build_probe_form(&w, 1, 0.0, &[zero(), zero()], 0.5).map_err(|e| e.to_string())?;
        let rep = run_probe(&g, &cfg, &w, 0.0).map_err(|e| e.to_string())?;
        let last = rep.entries.last().ok_or("empty trace")?;
        let violating = match rep.m_star {
            Some(m) if m <= 16384.0 && last.value.r_scaled < 0.0 && last.refined_r_scaled < 0.0 => true,
            _ => false,
        };

        let control = Weight::norm_squared(2).on_domain(d).map_err(|e| e.to_string())?;
        let (cg, mut ccfg) = build_control_probe(&control, 1, 0.0, &[zero(), zero()], 0.5).map_err(|e| e.to_string())?;
        ccfg.m_schedule = default_schedule();
        let crep = run_probe(&cg, &ccfg, &control, 0.0).map_err(|e| e.to_string())?;
        let control_ok = crep.m_star.is_none()
            && crep.entries.len() == default_schedule().len()
            && crep.entries.iter().all(|e| e.value.r_scaled >= -1e-6 * e.value.scale);
        let detail = format!(
            "m_star {:?}, R(m_star) scaled {:.3e} (refined {:.3e}); control min R/scale {:.3e} over {} values",
            rep.m_star,
            last.value.r_scaled,
            last.refined_r_scaled,
            crep.min_relative(),
            crep.entries.len()
        );
        let dev = rep.dprime_star_deviation.max(crep.dprime_star_deviation);
        Ok((if violating && control_ok { Ok(detail) } else { Err(detail) }, dev))
    };
    match run() {
        Ok((probe, dev)) => {
            let detail = format!("max relative deviation {dev:.2e} across the schedule");
            (probe, if dev <= 1e-10 { Ok(detail) } else { Err(detail) })
        }
        Err(e) => (Err(e.clone()), Err(e)),
    }
}

fn monotone_limits() -> Check {
    let d = Domain::unit_ball(2);
    let opts = CheckOptions::default();
    let mut worst = 0.0f64;
    let families: [(&str, &str, usize, f64); 2] =
        [("|z1|^2 + |z2|^2", "|z1|^2 + |z2|^2", 1, 1.0), ("-|z1|^2 + 2*|z2|^2", "|z1|^2", 2, 1.0)];
    for (base, bump, q, c) in families {
        let seq = (1..=8)
            .map(|j| parse_weight(&format!("{base} + ({bump})/{j}"), 2))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let limit = parse_weight(base, 2).map_err(|e| e.to_string())?;
        let rep = monotone_limit_check(&seq, &limit, q, c, &d, &opts).map_err(|e| e.to_string())?;
        if !(rep.sequence_passes && rep.limit_passes && rep.consistent) {
            return Err(format!("family {base}: sequence/limit did not pass"));
        }
        // q-sums: (1 + 1/j) for the first family; 1 + 1/j for the second as well
        for (j, r) in rep.sequence.iter().enumerate() {
            worst = worst.max((r.min_value - (1.0 + 1.0 / (j + 1) as f64)).abs());
        }
        worst = worst.max((rep.limit.min_value - 1.0).abs());
    }
    let detail = format!("max deviation from analytic minima {worst:.2e}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn prekopa_fibers() -> Check {
    let base = Domain::unit_ball(1);
    let opts = FiberOptions {
        points_per_axis: 32,
        fiber_nodes: 10_000,
        ..FiberOptions::default()
    };
    let disc = Fiber::polydisc(vec![1.0]).map_err(|e| e.to_string())?;
    let annulus = Fiber::annuli(vec![0.5], vec![1.0]).map_err(|e| e.to_string())?;
    let cases = [
        ("|z1|^2 + |w1|^2", &disc),
        ("|z1|^2 * (1 + |w1|^2)", &disc),
        ("|z1|^2 + log(1 + |z1|^2 * |w1|^2)", &annulus),
    ];
    let mut lines = vec![];
    let mut ok = true;
    for (src, fiber) in cases {
        let w = dbarpos::geometry::Expr::parse(src)
            .and_then(|e| e.into_weight(1, 1))
            .map_err(|e| e.to_string())?;
        let out = fiber_integrate_prekopa(&w, fiber, &base, 1, 0.0, &opts).map_err(|e| e.to_string())?;
        let min = out.field.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= min >= -1e-3 && out.report.pass && out.field.points.len() > 0;
        lines.push(format!("{src}: min eigenvalue {min:.4}"));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

/// Dense matrix of the discrete `∂̄` (degree `q−1 → q`), columns restricted
/// to the given unknowns.
fn dense_dbar(grid: &GridSpec, q: usize, unknowns: &[usize]) -> Vec<Vec<C64>> {
    let op = discretize_dbar(grid, q).unwrap();
    unknowns
        .iter()
        .map(|&k| {
            let mut e = vec![zero(); op.from_len()];
            e[k] = C64::new(1.0, 0.0);
            op.apply(&e)
        })
        .collect()
}

/// Orthonormal basis of the null space of the stacked columns `cols`
/// (each column a vector over the same rows), via the eigenvectors of `AᴴA`.
fn null_space(cols: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let k = cols.len();
    let gram = CMatrix::from_fn(k, k, |i, j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum());
    let spec = eig_hermitian(&HermitianMatrix::new(gram).unwrap()).unwrap();
    let tol = 1e-10 * spec.max().max(1.0);
    (0..k).filter(|&i| spec.eigenvalues[i] <= tol).map(|i| spec.eigenvector(i)).collect()
}

fn random_field(rng: &mut impl Rng, grid: &GridSpec, q: usize) -> GridField {
    let w = dbarpos::multi_index::binomial(grid.n(), q);
    let mut f = GridField::from_fn(grid, q, |_| vec![zero(); w]).unwrap();
    for p in 0..grid.len() {
        if grid.in_mask(p) {
            for c in &mut f.values[p * w..(p + 1) * w] {
                *c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    f
}

fn discrete_calculus() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let origin = vec![zero(); 2];
    let mut square = 0.0f64;
    for ppa in [16, 24, 32] {
        for d in [
            Domain::unit_polydisc(2),
            Domain::unit_ball(2),
            Domain::boxed(vec![C64::new(0.1, -0.2), zero()], vec![1.0, 0.7, 0.5, 1.2]).unwrap(),
        ] {
            let g = GridSpec::over_domain(&d, ppa).map_err(|e| e.to_string())?;
            let u = random_field(&mut rng, &g, 0);
            let ff = dbar_of(&dbar_of(&u).unwrap()).unwrap();
            square = square.max(ff.values.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
    }

    // n = 1 on the disc: kernel of ∂̄ from the dense operator
    let g1 = GridSpec::over_domain(&Domain::unit_ball(1), 16).unwrap();
    let w1: Vec<f64> = (0..g1.len()).map(|p| norm_sqr(&g1.point(p))).collect();
    let unknowns: Vec<usize> = (0..g1.len()).filter(|&p| g1.in_mask(p)).collect();
    let kernel1 = null_space(&dense_dbar(&g1, 1, &unknowns));
    let f1 = dbar_of(&random_field(&mut rng, &g1, 0)).unwrap();
    let s1 = minimal_solution(&f1, &w1).map_err(|e| e.to_string())?;
    let inner1 = |u: &[C64], k: &[C64]| -> (C64, f64, f64) {
        let mut ip = zero();
        let (mut nu, mut nk) = (0.0, 0.0);
        for (i, &p) in unknowns.iter().enumerate() {
            let e = (-w1[p]).exp();
            ip += u[p] * k[i].conj() * e;
            nu += u[p].norm_sqr() * e;
            nk += k[i].norm_sqr() * e;
        }
        (ip, nu, nk)
    };
    let mut orth = 0.0f64;
    for k in &kernel1 {
        let (ip, nu, nk) = inner1(&s1.u.values, k);
        orth = orth.max(ip.norm() / (nu * nk).sqrt());
    }

    // n = 2 on a box, q = 1: tensor products of the planar kernel, plus
    // boundary-supported kernel vectors tensored with anything
    let plane = GridSpec::new(1, vec![-1.0; 2], vec![2.0; 2], 16, None).unwrap();
    let all: Vec<usize> = (0..plane.len()).collect();
    let d_plane = dense_dbar(&plane, 1, &all);
    let k_plane = null_space(&d_plane);
    let interior: Vec<bool> = (0..plane.len()).map(|p| plane.in_level(p, 1)).collect();
    let mut restricted = d_plane.clone();
    for (col, &inside) in restricted.iter_mut().zip(&interior) {
        if inside {
            col.push(C64::new(1.0, 0.0));
        } else {
            col.push(zero());
        }
    }
    // kernel vectors of d that vanish on the interior: stack a selector row per interior point
    let k_boundary = {
        let cols: Vec<Vec<C64>> = (0..plane.len())
            .map(|p| {
                let mut c = d_plane[p].clone();
                c.extend((0..plane.len()).map(|r| if r == p && interior[p] { C64::new(1.0, 0.0) } else { zero() }));
                c
            })
            .collect();
        null_space(&cols)
    };
    let g2 = GridSpec::new(2, vec![-1.0; 4], vec![2.0; 4], 16, None).unwrap();
    let wp: Vec<f64> = (0..plane.len()).map(|p| (-norm_sqr(&plane.point(p))).exp()).collect();
    let w2: Vec<f64> = (0..g2.len()).map(|p| norm_sqr(&g2.point(p))).collect();
    let f2 = probe_rhs(&g2, 1, &origin, 0.5).map_err(|e| e.to_string())?;
    let s2 = minimal_solution(&f2, &w2).map_err(|e| e.to_string())?;
    let m = plane.len();
    let u2 = &s2.u.values;
    let nu2: f64 = (0..g2.len()).map(|p| u2[p].norm_sqr() * (-w2[p]).exp()).sum();
    let wnorm = |k: &[C64]| -> f64 { k.iter().zip(&wp).map(|(z, e)| z.norm_sqr() * e).sum::<f64>().sqrt() };
    // X = K_a^H diag(wp) U diag(wp) conj(K_b)
    let tensor_ip = |a: &[C64], b: &[C64]| -> C64 {
        let mut s = zero();
        for p1 in 0..m {
            let ca = a[p1].conj() * wp[p1];
            if ca == zero() {
                continue;
            }
            let row = &u2[p1 * m..(p1 + 1) * m];
            let mut t = zero();
            for p2 in 0..m {
                t += row[p2] * b[p2].conj() * wp[p2];
            }
            s += ca * t;
        }
        s
    };
    let mut orth2 = 0.0f64;
    for a in &k_plane {
        for b in &k_plane {
            orth2 = orth2.max(tensor_ip(a, b).norm() / (wnorm(a) * wnorm(b) * nu2.sqrt()));
        }
    }
    let boundary: Vec<usize> = (0..m).filter(|&p| !interior[p]).collect();
    for &t in &boundary {
        for &t2 in &boundary {
            let e = (-(w2[t * m + t2])).exp();
            orth2 = orth2.max(u2[t * m + t2].norm() * e / (e.sqrt() * nu2.sqrt()));
        }
    }
    for k0 in &k_boundary {
        let k0: Vec<C64> = k0[..m].to_vec();
        for p in (0..m).step_by(7) {
            let mut e = vec![zero(); m];
            e[p] = C64::new(1.0, 0.0);
            let n = wnorm(&k0) * wnorm(&e) * nu2.sqrt();
            orth2 = orth2.max(tensor_ip(&k0, &e).norm() / n).max(tensor_ip(&e, &k0).norm() / n);
        }
    }

    // n = 2, q = 2: the kernel contains ∂̄w for every w
    let f3 = dbar_of(&random_field(&mut rng, &g2, 1)).unwrap();
    let s3 = minimal_solution(&f3, &w2).map_err(|e| e.to_string())?;
    let mut orth3 = 0.0f64;
    for _ in 0..4 {
        let k = dbar_of(&random_field(&mut rng, &g2, 0)).unwrap();
        let (mut ip, mut nu, mut nk) = (zero(), 0.0, 0.0);
        for p in 0..g2.len() {
            let e = (-w2[p]).exp();
            for c in 0..2 {
                let (a, b) = (s3.u.values[2 * p + c], k.values[2 * p + c]);
                ip += a * b.conj() * e;
                nu += a.norm_sqr() * e;
                nk += b.norm_sqr() * e;
            }
        }
        orth3 = orth3.max(ip.norm() / (nu * nk).sqrt());
    }

    let detail = format!(
        "dbar^2 max {square:.2e}; orthogonality n=1 {orth:.2e} ({} kernel vectors), n=2 q=1 {orth2:.2e} \
         ({}x{} tensor + boundary), n=2 q=2 {orth3:.2e}",
        kernel1.len(),
        k_plane.len(),
        k_plane.len()
    );
    if square < 1e-13 && orth <= 1e-8 && orth2 <= 1e-8 && orth3 <= 1e-8 && !kernel1.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A polynomial in the real coordinates `x_1, y_1, …`: (coefficient, exponents).
struct Poly(Vec<(f64, Vec<u32>)>);

impl Poly {
    fn random(rng: &mut impl Rng, vars: usize, degree: u32) -> Self {
        let mut terms = vec![];
        let mut exps = vec![0u32; vars];
        loop {
            if exps.iter().sum::<u32>() <= degree {
                terms.push((rng.gen_range(-1.0..1.0), exps.clone()));
            }
            let mut i = 0;
            loop {
                if i == vars {
                    return Self(terms);
                }
                exps[i] += 1;
                if exps[i] <= degree {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|(c, e)| c * x.iter().zip(e).map(|(x, &k)| x.powi(k as i32)).product::<f64>()).sum()
    }

    /// Exact second partial derivative in real variables `a`, `b`.
    fn second(&self, a: usize, b: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (c, e) in &self.0 {
            let mut e = e.clone();
            let mut coef = *c;
            for v in [a, b] {
                if e[v] == 0 {
                    coef = 0.0;
                    break;
                }
                coef *= e[v] as f64;
                e[v] -= 1;
            }
            if coef != 0.0 {
                s += coef * x.iter().zip(&e).map(|(x, &k)| x.powi(k as i32)).product::<f64>();
            }
        }
        s
    }

    /// `∂²/∂z_j∂z̄_k = ¼[(∂x_j∂x_k + ∂y_j∂y_k) + i(∂x_j∂y_k − ∂y_j∂x_k)]`.
    fn complex_hessian(&self, x: &[f64], n: usize) -> Vec<C64> {
        let mut h = vec![];
        for j in 0..n {
            for k in 0..n {
                let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
                let re = self.second(xj, xk, x) + self.second(yj, yk, x);
                let im = self.second(xj, yk, x) - self.second(yj, xk, x);
                h.push(C64::new(0.25 * re, 0.25 * im));
            }
        }
        h
    }
}

fn hessian_order() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let steps = [1e-2, 5e-3, 2.5e-3];
    let mut worst = f64::INFINITY;
    for case in 0..20 {
        let n = 1 + case % 2;
        let poly = std::sync::Arc::new(Poly::random(&mut rng, 2 * n, 4));
        let p = poly.clone();
        let w = Weight::new(n, "quartic", move |z: &[C64]| {
            let x: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
            p.eval(&x)
        });
        let points: Vec<Vec<f64>> = (0..4).map(|_| (0..2 * n).map(|_| rng.gen_range(-0.7..0.7)).collect()).collect();
        let errors: Vec<f64> = steps
            .iter()
            .map(|&h| {
                points
                    .iter()
                    .map(|x| {
                        let z: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
                        let fd = finite_difference_hessian(&w, &z, h).unwrap();
                        let exact = poly.complex_hessian(x, n);
                        (0..n * n).map(|i| (fd.get(i / n, i % n) - exact[i]).norm()).fold(0.0, f64::max)
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        // least-squares slope of log error against log h
        let lx: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
        let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
        let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        worst = worst.min(slope);
    }
    let detail = format!("minimum empirical order {worst:.3} over 20 quartic weights");
    if worst >= 1.9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report(id: usize, name: &str, budget: Duration, elapsed: Duration, check: &Check) -> bool {
    let in_time = elapsed <= budget;
    let (ok, detail) = match check {
        Ok(d) => (in_time, d.as_str()),
        Err(d) => (false, d.as_str()),
    };
    println!(
        "{} [{id}] {name}: {detail} ({:.2} s, budget {} s{})",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", over budget" }
    );
    ok
}

fn timed(f: impl FnOnce() -> Check) -> (Check, Duration) {
    let t = Instant::now();
    let c = f();
    (c, t.elapsed())
}

fn main() {
    let secs = Duration::from_secs;
    let mut all = true;

    let (c, t) = timed(diagonal_commutator);
    all &= report(1, "diagonal commutator equals subset sums", secs(5), t, &c);
    let (c, t) = timed(spectral_bridge);
    all &= report(2, "commutator spectrum equals q-subset sums", secs(10), t, &c);
    let (c, t) = timed(oracle_equivalence);
    all &= report(3, "q_smallest_sum matches the subset-sum oracle", secs(5), t, &c);
    let (c, t) = timed(estimate_ratios);
    all &= report(4, "twisted estimate ratios on probe data", secs(60), t, &c);
    let start = Instant::now();
    let (probe, deviation) = probe_and_deviation();
    let t = start.elapsed();
    all &= report(5, "probe functional turns negative on a violation", secs(30), t, &probe);
    all &= report(6, "D'* term independent of the weight", secs(30), t, &deviation);
    let (c, t) = timed(monotone_limits);
    all &= report(7, "monotone limits keep uniform positivity", secs(5), t, &c);
    let (c, t) = timed(prekopa_fibers);
    all &= report(8, "fiber integrals of Reinhardt weights stay psh", secs(120), t, &c);
    let (c, t) = timed(discrete_calculus);
    all &= report(9, "discrete dbar complex and minimal solutions", secs(20), t, &c);
    let (c, t) = timed(hessian_order);
    all &= report(10, "finite-difference Hessian is second order", secs(5), t, &c);

    if !all {
        std::process::exit(1);
    }
}
