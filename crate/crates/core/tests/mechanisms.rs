use monodp::mechanisms::{median_of_quantiles, ssa_blocks, ssa_stable_histogram, SsaConfig};
use monodp::statistic::Count;
use monodp::{Dataset, MonotoneStatistic, PrivacyBudget, Range, Release, Result, Stream};

#[test]
fn median_of_count_lands_in_sampled_range_and_near_np() {
    let (n, p) = (500usize, 0.1);
    let f = MonotoneStatistic::new(Count).with_range(Range::integers(n));
    let z = Dataset::from_scalars(&vec![1.0; n]);
    let budget = PrivacyBudget::new(4.0, 1e-4).unwrap();
    let runs = 200;
    let np = n as f64 * p;
    let band = 5.0 * (np * (1.0 - p)).sqrt();
    let (mut inside, mut near) = (0, 0);
    for i in 0..runs {
        let out = median_of_quantiles(&f, &z, &budget, 0.1, p, Stream::new(i)).unwrap();
        let y = out.value.value().unwrap();
        inside += usize::from(out.sample_min <= y && y <= out.sample_max);
        near += usize::from((y - np).abs() <= band);
    }
    assert!(inside as f64 >= 0.9 * runs as f64, "{inside}/{runs} inside the sampled range");
    assert!(near as f64 >= 0.85 * runs as f64, "{near}/{runs} within the binomial band");
}

#[test]
fn ssa_estimates_a_gaussian_mean() {
    let budget = PrivacyBudget::new(1.0, 0.05).unwrap();
    let cfg = SsaConfig::new(0.3, 0.05);
    let k = ssa_blocks(&budget, &cfg).unwrap();
    assert_eq!(k, (8.0 * 400f64.ln()).ceil() as usize);
    let n = 100 * k;
    let sum = |s: &Dataset| -> Result<f64> { Ok(s.points().map(|z| z[0]).sum()) };
    let runs = 200;
    let mut good = 0;
    for i in 0..runs {
        let stream = Stream::new(1000 + i);
        let mut rng = stream.child("data", 0).rng();
        let values: Vec<f64> = (0..n).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        let z = Dataset::from_scalars(&values);
        let out = ssa_stable_histogram(&sum, &z, &budget, &cfg, &mut stream.child("ssa", 0).rng()).unwrap();
        good += usize::from(matches!(out.value, Release::Value(v) if v.abs() <= 0.9));
    }
    assert!(good as f64 >= 0.95 * runs as f64, "{good}/{runs} within 3 alpha");
}
