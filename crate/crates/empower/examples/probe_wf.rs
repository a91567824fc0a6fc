use empower::channel::*;
use nalgebra::DMatrix;
use std::time::Instant;

fn main() {
    let n = 130;
    let h = ChannelMatrix::new(DMatrix::from_fn(1, n, |_, j| (j as f64 * 0.1).sin() * 0.05)).unwrap();
    let noise = NoiseCovariance::isotropic(1, 1e-2).unwrap();
    let p = PowerBudget::new(3250.0).unwrap();

    let t0 = Instant::now();
    let mut s = None;
    for _ in 0..100 { s = Some(waterfill(&h, &noise, p).unwrap()); }
    println!("waterfill 1x{n} x100: {:?} per call {:?}", t0.elapsed(), t0.elapsed()/100);
    let s = s.unwrap();

    let t1 = Instant::now();
    for _ in 0..100 { let _ = capacity(&h, &s, &noise).unwrap(); }
    println!("capacity  x100: {:?} per call {:?}", t1.elapsed(), t1.elapsed()/100);

    // raw SVD cost
    let w = DMatrix::from_fn(1, n, |_, j| (j as f64 * 0.1).sin() * 0.5);
    let t2 = Instant::now();
    for _ in 0..100 { let _ = w.clone().svd(false, true); }
    println!("svd 1x{n}  x100: {:?} per call {:?}", t2.elapsed(), t2.elapsed()/100);
}
