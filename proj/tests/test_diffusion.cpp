#include <doctest.h>

#include <cmath>
#include <vector>

#include "decodi/diffusion.hpp"
#include "decodi/error.hpp"
#include "oracles.hpp"

using namespace decodi;

TEST_CASE("forward_diffuse at t=0 returns x0 exactly and draws nothing") {
    NoiseSchedule sched;
    Rng rng(11);
    Rng untouched(11);
    const Vec x0{1.0, -2.0};
    const LatentState z = forward_diffuse(x0, 0, sched, rng);
    CHECK(z.t == 0);
    CHECK(z.z == x0);
    CHECK(rng.bits() == untouched.bits());
}

TEST_CASE("forward_diffuse variance grows linearly with t") {
    NoiseSchedule sched;
    Rng rng(42);
    const Vec x0{0.0, 0.0};
    const int n = 100000;
    std::vector<double> first(n), second(n);
    for (int i = 0; i < n; ++i) {
        const LatentState z = forward_diffuse(x0, 9, sched, rng);
        first[i] = z.z[0];
        second[i] = z.z[1];
    }
    CHECK(oracle::sample_variance(first) > 8.7);
    CHECK(oracle::sample_variance(first) < 9.3);
    CHECK(oracle::sample_variance(second) > 8.7);
    CHECK(oracle::sample_variance(second) < 9.3);
}

TEST_CASE("diffusing in two stages matches diffusing directly") {
    NoiseSchedule sched;
    const Vec x0{0.0};
    const int n = 10000;
    Rng rng_direct(7);
    Rng rng_staged(8);
    std::vector<double> direct(n), staged(n);
    for (int i = 0; i < n; ++i) direct[i] = forward_diffuse(x0, 9, sched, rng_direct).z[0];
    for (int i = 0; i < n; ++i) {
        double z = forward_diffuse(x0, 4, sched, rng_staged).z[0];
        for (int step = 0; step < 5; ++step) z += rng_staged.normal();
        staged[i] = z;
    }
    CHECK(oracle::ks_two_sample_p(direct, staged) > 0.01);
}

TEST_CASE("forward_diffuse rejects out-of-range steps and non-finite inputs") {
    NoiseSchedule sched;
    Rng rng(1);
    CHECK_THROWS_AS(forward_diffuse(Vec{0.0}, -1, sched, rng), StepRangeError);
    CHECK_THROWS_AS(forward_diffuse(Vec{0.0}, sched.T + 1, sched, rng), StepRangeError);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(forward_diffuse(Vec{inf}, 3, sched, rng), ValidationError);
    CHECK_THROWS_AS(forward_diffuse(Vec{std::nan("")}, 3, sched, rng), ValidationError);
}

TEST_CASE("x0_from_eps inverts the forward definition") {
    NoiseSchedule sched;
    const Vec got = x0_from_eps(LatentState{Vec{3.0}, 4}, Vec{1.0}, sched);
    CHECK(got == Vec{1.0});

    const Vec z{0.25, -8.5};
    CHECK(x0_from_eps(LatentState{z, 17}, Vec{0.0, 0.0}, sched) == z);
}

TEST_CASE("x0_from_eps round-trips forward_diffuse to machine precision") {
    NoiseSchedule sched;
    Rng rng(99);
    const Vec x0{1.25, -0.75, 3.0};
    for (int t : {1, 5, 50}) {
        const LatentState z = forward_diffuse(x0, t, sched, rng);
        const double std = std::sqrt(sched.cumulative_variance(t));
        Vec eps(x0.size());
        for (std::size_t d = 0; d < x0.size(); ++d) eps[d] = (z.z[d] - x0[d]) / std;
        const Vec back = x0_from_eps(z, eps, sched);
        for (std::size_t d = 0; d < x0.size(); ++d) CHECK(back[d] == doctest::Approx(x0[d]).epsilon(1e-12));
    }
}

TEST_CASE("x0_from_eps rejects t=0") {
    NoiseSchedule sched;
    CHECK_THROWS_AS(x0_from_eps(LatentState{Vec{1.0}, 0}, Vec{0.0}, sched), StepRangeError);
}

TEST_CASE("reverse_step at t=1 returns the point estimate deterministically") {
    NoiseSchedule sched;
    Rng rng(3);
    Rng untouched(3);
    const LatentState out = reverse_step(LatentState{Vec{5.0}, 1}, Vec{2.0}, sched, rng);
    CHECK(out.t == 0);
    CHECK(out.z == Vec{3.0});
    CHECK(rng.bits() == untouched.bits());
}

TEST_CASE("reverse_step injected noise has variance (t-1)/t") {
    NoiseSchedule sched;
    Rng rng(5);
    const int n = 100000;
    std::vector<double> z1(n);
    for (int i = 0; i < n; ++i)
        z1[i] = reverse_step(LatentState{Vec{0.0}, 2}, Vec{0.0}, sched, rng).z[0];
    const double var = oracle::sample_variance(z1);
    CHECK(var > 0.48);
    CHECK(var < 0.52);
}

TEST_CASE("reverse_step conditional mean shrinks toward the point estimate") {
    NoiseSchedule sched;
    Rng rng(6);
    const int n = 100000;
    const double sqrt_tau = std::sqrt(10.0);
    std::vector<double> z9(n);
    for (int i = 0; i < n; ++i) {
        // eps chosen so the implied x0 estimate is zero; the mean of z_9 is then (9/10) * z.
        z9[i] = reverse_step(LatentState{Vec{10.0}, 10}, Vec{10.0 / sqrt_tau}, sched, rng).z[0];
    }
    const double m = oracle::mean(z9);
    CHECK(m > 8.95);
    CHECK(m < 9.05);
}

TEST_CASE("reverse_step rejects t outside [1, T]") {
    NoiseSchedule sched;
    Rng rng(1);
    CHECK_THROWS_AS(reverse_step(LatentState{Vec{0.0}, 0}, Vec{0.0}, sched, rng), StepRangeError);
    CHECK_THROWS_AS(reverse_step(LatentState{Vec{0.0}, sched.T + 1}, Vec{0.0}, sched, rng),
                    StepRangeError);
}

TEST_CASE("identical seeds give bitwise-identical outputs") {
    NoiseSchedule sched;
    const Vec x0{0.5, -1.5};
    Rng a(12345), b(12345);
    const LatentState za = forward_diffuse(x0, 20, sched, a);
    const LatentState zb = forward_diffuse(x0, 20, sched, b);
    CHECK(za.z == zb.z);
    const LatentState ra = reverse_step(za, Vec{0.1, 0.2}, sched, a);
    const LatentState rb = reverse_step(zb, Vec{0.1, 0.2}, sched, b);
    CHECK(ra.z == rb.z);
}

TEST_CASE("per_step_variance scales both directions of the walk") {
    NoiseSchedule sched{50, 4.0};
    CHECK(sched.cumulative_variance(9) == doctest::Approx(36.0));
    Rng rng(13);
    const int n = 50000;
    std::vector<double> zs(n);
    for (int i = 0; i < n; ++i) zs[i] = forward_diffuse(Vec{0.0}, 4, sched, rng).z[0];
    const double var = oracle::sample_variance(zs);
    CHECK(var > 16.0 * 0.96);
    CHECK(var < 16.0 * 1.04);
}

TEST_CASE("schedule validation rejects nonsense") {
    CHECK_THROWS_AS((NoiseSchedule{0, 1.0}).validate(), ValidationError);
    CHECK_THROWS_AS((NoiseSchedule{50, 0.0}).validate(), ValidationError);
    CHECK_THROWS_AS((NoiseSchedule{50, -1.0}).validate(), ValidationError);
    CHECK_NOTHROW((NoiseSchedule{1, 0.25}).validate());
}
