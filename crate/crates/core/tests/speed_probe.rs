use nalgebra::DMatrix;
use wpt_core::cloud::PointCloud;
use wpt_core::ot::{plan, SolverConfig};
use wpt_core::rng::rng_from_seed;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
#[ignore]
fn probe_jv_5000() {
    let mut rng = rng_from_seed(1);
    let n = 5000;
    let d = 2;
    let a = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let b = DMatrix::from_fn(n, d, |_, _| 1.5 + rng.sample::<f64, _>(StandardNormal) * 1.3);
    let p = PointCloud::uniform(a).unwrap();
    let q = PointCloud::uniform(b).unwrap();
    let t0 = std::time::Instant::now();
    let c = plan(&p, &q, &SolverConfig::exact()).unwrap();
    println!("JV n=5000 took {:?}, objective {}", t0.elapsed(), c.objective());
}
