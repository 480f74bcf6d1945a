//! Distributional oracles for the routing simulator: with empty queues and
//! unit-size events the first-passage time of a venue is an Erlang law, so
//! means, standard deviations, whole CDFs, and two-venue criterion values
//! all have closed forms that are recomputed here by hand.

use execlab_core::rng::stream_rng;
use execlab_core::sor::{
    balance_statistics, criterion, simulate_waiting_time, AllocationKey, QueueLaw, SizeLaw,
    VenueSpec,
};
use execlab_core::stats::{ks_p_value, ks_statistic, mean, standard_error};

fn lattice_venue(intensity: f64) -> VenueSpec {
    VenueSpec {
        intensity,
        queue_law: QueueLaw::Constant { value: 0.0 },
        event_size: SizeLaw::unit(),
    }
}

/// Erlang CDF: P(T <= t) for the sum of `shape` exponentials of the given
/// rate, via the standard finite Poisson tail sum.
fn erlang_cdf(shape: usize, rate: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = rate * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..shape {
        term *= x / j as f64;
        sum += term;
    }
    1.0 - (-x).exp() * sum
}

#[test]
fn waiting_time_is_erlang_with_the_ceiling_event_count() {
    // Slice 3.2 with unit events needs 4 fills: T ~ Erlang(4, rate 2).
    let venue = lattice_venue(2.0);
    let mut rng = stream_rng(8_128, 0);
    let draws = 20_000;
    let mut elapsed = Vec::with_capacity(draws);
    for _ in 0..draws {
        let outcome = simulate_waiting_time(&venue, 3.2, &mut rng);
        assert_eq!(outcome.completing_jump, 1.0);
        elapsed.push(outcome.elapsed);
    }

    let expected_mean = 4.0 / 2.0;
    let se = standard_error(&elapsed);
    assert!(
        (mean(&elapsed) - expected_mean).abs() <= 4.0 * se,
        "mean {} vs Erlang mean {expected_mean} (SE {se})",
        mean(&elapsed)
    );
    // Erlang(4, 2) standard deviation is sqrt(4)/2 = 1.
    let sd = se * (draws as f64).sqrt();
    assert!((sd - 1.0).abs() <= 0.05, "sd {sd} vs Erlang sd 1");

    let d = ks_statistic(&elapsed, |t| erlang_cdf(4, 2.0, t));
    let p = ks_p_value(d, draws);
    assert!(p > 0.01, "KS rejected the Erlang law: D = {d}, p = {p}");
}

#[test]
fn queue_ahead_raises_the_event_count() {
    // Queue 2.3 plus slice 1.5 needs ceil(3.8) = 4 unit fills.
    let venue = VenueSpec {
        intensity: 2.0,
        queue_law: QueueLaw::Constant { value: 2.3 },
        event_size: SizeLaw::unit(),
    };
    let mut rng = stream_rng(8_129, 0);
    let draws = 20_000;
    let elapsed: Vec<f64> = (0..draws)
        .map(|_| simulate_waiting_time(&venue, 1.5, &mut rng).elapsed)
        .collect();
    let d = ks_statistic(&elapsed, |t| erlang_cdf(4, 2.0, t));
    assert!(ks_p_value(d, draws) > 0.01, "KS rejected Erlang(4, 2): D = {d}");

    // Nothing to consume: the venue reports an instant, empty completion.
    let empty = simulate_waiting_time(&lattice_venue(2.0), 0.0, &mut rng);
    assert_eq!(empty.elapsed, 0.0);
    assert_eq!(empty.completing_jump, 0.0);
}

#[test]
fn two_venue_criterion_matches_hand_integrals() {
    // Venues at rates 1 and 2, half the order each.
    let venues = vec![lattice_venue(1.0), lattice_venue(2.0)];
    let key = AllocationKey::uniform(2);
    let samples = 200_000;

    // Order 2.0: one fill per venue, E max(Exp(1), Exp(2)) = 1 + 1/2 - 1/3.
    let small = criterion(&key, &venues, &SizeLaw::Constant { value: 2.0 }, samples, 31).unwrap();
    let expected = 7.0 / 6.0;
    assert!(
        (small.mean - expected).abs() <= 4.0 * small.std_error,
        "criterion {} vs hand value {expected}",
        small.mean
    );

    // Order 4.0: two fills per venue, E max(Gamma(2,1), Gamma(2,2)) =
    // 3 - int exp(-3t)(1 + 3t + 2t^2) dt = 3 - 22/27 = 59/27.
    let large = criterion(&key, &venues, &SizeLaw::Constant { value: 4.0 }, samples, 37).unwrap();
    let expected = 59.0 / 27.0;
    assert!(
        (large.mean - expected).abs() <= 4.0 * large.std_error,
        "criterion {} vs hand value {expected}",
        large.mean
    );
}

#[test]
fn zero_weight_venue_drops_out_of_the_maximum() {
    // All volume on the fast venue: C = E Erlang(2, rate 2) = 1.
    let venues = vec![lattice_venue(1.0), lattice_venue(2.0)];
    let key = AllocationKey::new(vec![0.0, 1.0]).unwrap();
    let estimate =
        criterion(&key, &venues, &SizeLaw::Constant { value: 2.0 }, 200_000, 41).unwrap();
    assert!(
        (estimate.mean - 1.0).abs() <= 4.0 * estimate.std_error,
        "criterion {} vs Erlang mean 1",
        estimate.mean
    );
}

#[test]
fn identical_venues_make_the_criterion_symmetric() {
    let venue = VenueSpec {
        intensity: 1.0,
        queue_law: QueueLaw::Exponential { mean: 1.0 },
        event_size: SizeLaw::unit(),
    };
    let venues = vec![venue.clone(), venue];
    let order = SizeLaw::Constant { value: 5.0 };
    let lhs = criterion(
        &AllocationKey::new(vec![0.3, 0.7]).unwrap(),
        &venues,
        &order,
        100_000,
        43,
    )
    .unwrap();
    let rhs = criterion(
        &AllocationKey::new(vec![0.7, 0.3]).unwrap(),
        &venues,
        &order,
        100_000,
        47,
    )
    .unwrap();
    let noise = (lhs.std_error.powi(2) + rhs.std_error.powi(2)).sqrt();
    assert!(
        (lhs.mean - rhs.mean).abs() <= 4.0 * noise,
        "swapped keys disagree: {} vs {}",
        lhs.mean,
        rhs.mean
    );
}

#[test]
fn criterion_grows_with_the_order_size() {
    // Single venue at rate 1: the criterion is exactly the Erlang mean,
    // i.e. the fill count, so doubling the order doubles the value.
    let venues = vec![lattice_venue(1.0)];
    let key = AllocationKey::uniform(1);
    let mut values = Vec::new();
    for (size, expected) in [(1.0, 1.0), (3.0, 3.0), (6.0, 6.0)] {
        let estimate = criterion(
            &key,
            &venues,
            &SizeLaw::Constant { value: size },
            100_000,
            53 + size as u64,
        )
        .unwrap();
        assert!(
            (estimate.mean - expected).abs() <= 4.0 * estimate.std_error,
            "order {size}: criterion {} vs {expected}",
            estimate.mean
        );
        values.push(estimate.mean);
    }
    assert!(values[0] < values[1] && values[1] < values[2]);
}

#[test]
fn balance_holds_at_the_symmetric_key() {
    // By symmetry the expected slow-down pull is equal across identical
    // venues at the uniform key, so the pairwise z-score is pure noise.
    let venue = VenueSpec {
        intensity: 1.0,
        queue_law: QueueLaw::Exponential { mean: 1.0 },
        event_size: SizeLaw::unit(),
    };
    let venues = vec![venue.clone(), venue];
    let diagnostics = balance_statistics(
        &AllocationKey::uniform(2),
        &venues,
        &SizeLaw::Constant { value: 10.0 },
        20_000,
        59,
    )
    .unwrap();
    assert!(
        diagnostics.max_pairwise_z <= 4.0,
        "pairwise z = {}",
        diagnostics.max_pairwise_z
    );
}
