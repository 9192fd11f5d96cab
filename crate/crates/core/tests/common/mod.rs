//! Dense reference solvers for small grids, shared by the integration suites.
#![allow(dead_code)]

use blind_deconv::bench::rng_from_seed;
use blind_deconv::blind::{k_step, x_step, SolverConfig};
use blind_deconv::image::{
    convolve, convolve_adjoint, gradient, ConvMode, Fft2, GradientField, GrayImage, Kernel,
};
use blind_deconv::nonblind::{deconvolve_periodic, NonblindConfig};
use blind_deconv::priors::{freq_weights, SmoothedPower, WeightMap};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = rng_from_seed(seed);
    GrayImage::from_fn(w, h, |_, _| rng.random::<f64>())
}

pub fn random_field(w: usize, h: usize, seed: u64) -> GradientField {
    GradientField::new(
        random_image(w, h, seed).map(|v| v - 0.5),
        random_image(w, h, seed + 1).map(|v| v - 0.5),
    )
    .unwrap()
}

pub fn random_kernel(size: usize, seed: u64) -> Kernel {
    let mut rng = rng_from_seed(seed);
    Kernel::square(size, (0..size * size).map(|_| rng.random::<f64>()).collect())
        .unwrap()
        .project()
}

fn unit_image(w: usize, h: usize, idx: usize) -> GrayImage {
    let mut img = GrayImage::zeros(w, h);
    img.set(idx / w, idx % w, 1.0);
    img
}

fn to_vec(img: &GrayImage) -> DVector<f64> {
    DVector::from_column_slice(img.data())
}

/// Matrix of a linear image operator, column by column.
fn operator_matrix(w: usize, h: usize, rows: usize, f: impl Fn(&GrayImage) -> Vec<f64>) -> DMatrix<f64> {
    let n = w * h;
    let mut m = DMatrix::zeros(rows, n);
    for j in 0..n {
        let col = f(&unit_image(w, h, j));
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

fn circ_matrix(k: &Kernel, w: usize, h: usize) -> DMatrix<f64> {
    operator_matrix(w, h, w * h, |e| convolve(e, k, ConvMode::SameCircular).unwrap().into_data())
}

fn grad_matrix(w: usize, h: usize) -> DMatrix<f64> {
    operator_matrix(w, h, 2 * w * h, |e| {
        let g = gradient(e).unwrap();
        g.dh().data().iter().chain(g.dv().data()).copied().collect()
    })
}

fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Largest relative error of the CG x-update against a dense solve of
/// `(K^T K + diag(w)) x = K^T g` per channel.
pub fn x_step_oracle_error(size: usize, seed: u64) -> f64 {
    let g = random_field(size, size, seed);
    let k = random_kernel(3, seed + 2);
    let mut rng = rng_from_seed(seed + 3);
    let w = WeightMap::from_image(GrayImage::from_fn(size, size, |_, _| 0.05 + rng.random::<f64>()))
        .unwrap();
    let got = x_step(&g, &k, &w, 2000).unwrap();
    let kmat = circ_matrix(&k, size, size);
    let mut a = kmat.transpose() * &kmat;
    for i in 0..size * size {
        a[(i, i)] += w.data()[i];
    }
    let lu = a.lu();
    let mut worst = 0.0f64;
    for (gc, xc) in g.channels().into_iter().zip(got.channels()) {
        let want = lu.solve(&(kmat.transpose() * to_vec(gc))).unwrap();
        worst = worst.max(rel_err(&to_vec(xc), &want));
    }
    worst
}

/// Relative error of the kernel IRLS after `outer` iterations against the same
/// iterations with dense direct solves.
pub fn k_step_oracle_error(size: usize, seed: u64, lambda: f64, outer: usize) -> f64 {
    let s = 3;
    let n = size * size;
    let gx = random_field(size, size, seed);
    let k0 = random_kernel(s, seed + 2);
    let noise = random_field(size, size, seed + 5);
    let gy = GradientField::new(
        convolve(gx.dh(), &k0, ConvMode::SameCircular).unwrap().zip_map(noise.dh(), |a, b| a + 0.05 * b).unwrap(),
        convolve(gx.dv(), &k0, ConvMode::SameCircular).unwrap().zip_map(noise.dv(), |a, b| a + 0.05 * b).unwrap(),
    )
    .unwrap();
    let fw = freq_weights(&random_image(size, size, seed + 7), 2.0, size, size).unwrap();
    let cfg = SolverConfig {
        kernel_size: s,
        irls_outer: outer,
        cg_iters_k: 200,
        ..SolverConfig::default()
    };
    let init = Kernel::delta(s).unwrap();
    let got = k_step(&gy, &gx, &fw, lambda, &cfg, &init).unwrap();

    // columns: the latent field shifted by each tap
    let c = s / 2;
    let mut cmat = [DMatrix::zeros(n, s * s), DMatrix::zeros(n, s * s)];
    for t in 0..s * s {
        let mut d = vec![0.0; s * s];
        d[t] = 1.0;
        let e = Kernel::square(s, d).unwrap();
        for (ch, xc) in gx.channels().into_iter().enumerate() {
            let col = convolve(xc, &e, ConvMode::SameCircular).unwrap();
            cmat[ch].set_column(t, &to_vec(&col));
        }
    }
    // ridge: (1/N) sum_w alpha_w conj(E_s) E_t over tap spectra
    let plan = Fft2::new(size, size);
    let spectra: Vec<_> = (0..s * s)
        .map(|t| {
            let (a, b) = (t / s, t % s);
            let i = (a + size - c) % size;
            let j = (b + size - c) % size;
            plan.forward_real(unit_image(size, size, i * size + j).data())
        })
        .collect();
    let mut ridge = DMatrix::zeros(s * s, s * s);
    for p in 0..s * s {
        for q in 0..s * s {
            let v: f64 = (0..n)
                .map(|w| fw.alpha()[w] * (spectra[p][w].conj() * spectra[q][w]).re)
                .sum();
            ridge[(p, q)] = v / n as f64;
        }
    }
    let m = cmat[0].transpose() * &cmat[0] + cmat[1].transpose() * &cmat[1] + ridge;
    let b = cmat[0].transpose() * to_vec(gy.dh()) + cmat[1].transpose() * to_vec(gy.dv());
    let penalty = SmoothedPower::new(0.5, cfg.irls_eps).unwrap();
    let mut k = DVector::from_column_slice(init.data());
    for _ in 0..outer {
        let mut a = m.clone();
        for i in 0..s * s {
            a[(i, i)] += lambda * penalty.weight(k[i]);
        }
        k = a.lu().solve(&b).unwrap();
    }
    rel_err(&DVector::from_column_slice(got.kernel.data()), &k)
}

/// Relative error of the periodic non-blind IRLS against dense direct solves.
pub fn nonblind_oracle_error(size: usize, seed: u64) -> f64 {
    let x0 = random_image(size, size, seed);
    let k = random_kernel(3, seed + 1);
    let y = convolve(&x0, &k, ConvMode::SameCircular).unwrap();
    let cfg = NonblindConfig {
        lambda_img: 50.0,
        irls_outer: 3,
        cg_iters: 2000,
        ..NonblindConfig::default()
    };
    let (got, _) = deconvolve_periodic(&y, &k, &cfg).unwrap();

    let kmat = circ_matrix(&k, size, size);
    let dmat = grad_matrix(size, size);
    let penalty = SmoothedPower::new(cfg.alpha, cfg.eps).unwrap();
    let rhs = kmat.transpose() * to_vec(&y) * cfg.lambda_img;
    let mut x = to_vec(&y);
    for _ in 0..cfg.irls_outer {
        let g = &dmat * &x;
        let wdiag = DMatrix::from_diagonal(&g.map(|t| penalty.weight(t)));
        let a = kmat.transpose() * &kmat * cfg.lambda_img + dmat.transpose() * wdiag * &dmat;
        x = a.lu().solve(&rhs).unwrap();
    }
    rel_err(&to_vec(&got), &x)
}

/// Largest `|<K x, y> - <x, K^T y>|` relative to the inner products, over both
/// convolution modes.
pub fn adjoint_gap(seed: u64) -> f64 {
    let x = random_image(13, 11, seed);
    let k = Kernel::new(5, 3, random_image(5, 3, seed + 1).into_data()).unwrap();
    let mut worst = 0.0f64;
    for mode in [ConvMode::Valid, ConvMode::SameCircular] {
        let kx = convolve(&x, &k, mode).unwrap();
        let y = random_image(kx.width(), kx.height(), seed + 2);
        let lhs = kx.dot(&y);
        let rhs = x.dot(&convolve_adjoint(&y, &k, mode).unwrap());
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    worst
}
