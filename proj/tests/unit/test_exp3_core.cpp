#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracle.hpp"

#include "exp3mle/bandit.hpp"
#include "exp3mle/errors.hpp"

using namespace exp3mle;

namespace {

void check_simplex(std::span<const double> row) {
    double s = 0.0;
    for (double v : row) {
        CHECK(v >= 0.0);
        s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
}

}  // namespace

TEST_CASE("bandit spec validation") {
    CHECK_NOTHROW(BanditSpec({0.8, 0.0}));
    CHECK_NOTHROW(BanditSpec({1.0, 1.0, 0.0}));
    CHECK_THROWS_AS(BanditSpec({0.8}), DomainError);
    CHECK_THROWS_AS(BanditSpec({0.2, 0.8}), DomainError);
    CHECK_THROWS_AS(BanditSpec({1.2, 0.1}), DomainError);
    CHECK_THROWS_AS(BanditSpec({0.5, -0.1}), DomainError);
    CHECK_THROWS_AS(BanditSpec({std::nan(""), 0.1}), DomainError);
    CHECK(BanditSpec({0.8, 0.0}).is_two_arm_zero_loss());
    CHECK_FALSE(BanditSpec({0.8, 0.6, 0.4, 0.2}).is_two_arm_zero_loss());
}

TEST_CASE("rate schedules") {
    CHECK_THROWS_AS(RateSchedule::constant(-0.1), DomainError);
    CHECK_NOTHROW(RateSchedule::constant(0.0));
    CHECK_THROWS_AS(RateSchedule::polynomial(0.3, 1.0), DomainError);
    CHECK_THROWS_AS(RateSchedule::polynomial(0.3, 0.0), DomainError);
    CHECK_THROWS_AS(RateSchedule::polynomial(0.0, 0.5), DomainError);
    CHECK(RateSchedule::constant(0.3).resolve(1000, 0.8) == 0.3);
    CHECK(RateSchedule::polynomial(0.3, 0.5).resolve(10000, 0.8) == doctest::Approx(0.3 / (100.0 * 0.8)));
    CHECK_THROWS_AS(ThetaBox(0.0, 0.8), DomainError);
    CHECK_THROWS_AS(ThetaBox(0.5, 0.4), DomainError);
    CHECK_NOTHROW(ThetaBox(0.3, 0.3));
}

TEST_CASE("uniform initial policy") {
    CHECK(init_policy(BanditSpec({0.8, 0.6, 0.4, 0.2})) == std::vector<double>{0.25, 0.25, 0.25, 0.25});
    CHECK(init_policy(BanditSpec({0.8, 0.0})) == std::vector<double>{0.5, 0.5});
    const auto p3 = init_policy(BanditSpec({0.8, 0.5, 0.0}));
    CHECK(std::abs(p3[0] + p3[1] + p3[2] - 1.0) <= 1e-15);
}

TEST_CASE("softmax update") {
    const std::vector<double> a{5.0, 9.0};
    CHECK(softmax_update(a, 0.0) == std::vector<double>{0.5, 0.5});
    const std::vector<double> b{0.0, 0.0, 0.0};
    for (double v : softmax_update(b, 1.7)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const std::vector<double> c{1.0, 0.0};
    const auto p = softmax_update(c, 0.3);
    const long double e = std::exp(-0.3L);
    CHECK(std::abs(p[0] - static_cast<double>(e / (e + 1.0L))) <= 1e-15);
    CHECK(std::abs(p[1] - static_cast<double>(1.0L / (e + 1.0L))) <= 1e-15);
    CHECK(p[0] == doctest::Approx(0.425557).epsilon(1e-6));

    // Large losses neither overflow nor produce NaN; the dominated entry underflows to 0.
    const std::vector<double> d{1e6, 0.0};
    const auto q = softmax_update(d, 1.0);
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 1.0);

    const std::vector<double> bad{std::numeric_limits<double>::infinity(), 0.0};
    CHECK_THROWS_AS(softmax_update(bad, 0.3), NonFiniteInput);
    CHECK_THROWS_AS(softmax_update(c, -1.0), DomainError);
}

TEST_CASE("importance loss") {
    const BanditSpec two({0.8, 0.0});
    const std::vector<double> half{0.5, 0.5};
    CHECK(importance_loss(two, half, 0) == std::vector<double>{1.6, 0.0});
    CHECK(importance_loss(two, half, 1) == std::vector<double>{0.0, 0.0});
    const BanditSpec four({0.8, 0.6, 0.4, 0.2});
    const std::vector<double> quarter(4, 0.25);
    CHECK(importance_loss(four, quarter, 2) == std::vector<double>{0.0, 0.0, 1.6, 0.0});
    const std::vector<double> dead{0.0, 1.0};
    CHECK_THROWS_AS(importance_loss(two, dead, 0), ZeroProbabilityPull);
}

TEST_CASE("inverse cdf draw") {
    const std::vector<double> p{0.25, 0.25, 0.5};
    CHECK(draw_arm(p, 0.0) == 0);
    CHECK(draw_arm(p, 0.2499) == 0);
    CHECK(draw_arm(p, 0.25) == 1);  // boundary goes to the next arm's half-open interval
    CHECK(draw_arm(p, 0.75) == 2);
    CHECK(draw_arm(p, 0.999999) == 2);
    const std::vector<double> z{0.0, 1.0};
    CHECK(draw_arm(z, 0.0) == 1);
}

TEST_CASE("simulate basics and determinism") {
    const BanditSpec spec({0.8, 0.6, 0.4, 0.2});
    const Trajectory one = simulate(spec, RateSchedule::constant(0.3), 1, 5);
    CHECK(one.arms.size() == 1);
    for (double v : one.true_path.row(0)) CHECK(v == 0.25);

    const Trajectory a = simulate(spec, RateSchedule::polynomial(0.3, 0.5), 500, 42);
    const Trajectory b = simulate(spec, RateSchedule::polynomial(0.3, 0.5), 500, 42);
    CHECK(a.arms == b.arms);
    CHECK(a.true_path == b.true_path);
    const Trajectory c = simulate(spec, RateSchedule::polynomial(0.3, 0.5), 500, 43);
    CHECK(a.arms != c.arms);
    for (std::size_t t = 0; t < a.n; ++t) check_simplex(a.true_path.row(t));
}

TEST_CASE("replay reproduces the true path bit-exactly") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const BanditSpec spec({0.8, 0.6, 0.4, 0.2});
        const RateSchedule sched = RateSchedule::polynomial(0.5, 0.5);
        const Trajectory t = simulate(spec, sched, 2000, seed);
        const ProbabilityPath p = probability_path(spec, sched, t.arms, t.n);
        CHECK(p.probs == t.true_path);
        for (std::size_t k = 0; k < spec.arms(); ++k) CHECK(p.cum_loss_est(0, k) == 0.0);
    }
}

TEST_CASE("replay agrees with a long double oracle") {
    const std::vector<double> losses{0.8, 0.6, 0.4, 0.2};
    const BanditSpec spec(losses);
    const Trajectory t = simulate(spec, RateSchedule::constant(0.05), 300, 9);
    for (double eta : {0.005, 0.01, 0.05}) {
        const ProbabilityPath p = probability_path(spec, RateSchedule::constant(eta), t.arms, 300);
        const auto ref = oracle::exp3_path(losses, t.arms, eta, 300);
        double worst = 0.0;
        for (std::size_t s = 0; s < 300; ++s)
            for (std::size_t k = 0; k < 4; ++k)
                worst = std::max(worst, std::abs(p.probs(s, k) - static_cast<double>(ref[s][k])));
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("one-step two-arm replay") {
    const BanditSpec spec({0.8, 0.0});
    const std::vector<std::size_t> arms{0, 1};
    const ProbabilityPath p = probability_path(spec, RateSchedule::constant(0.3), arms, 2);
    const long double e = std::exp(-0.48L);
    CHECK(std::abs(p.probs(1, 0) - static_cast<double>(e / (1.0L + e))) <= 1e-15);
    CHECK(p.probs(1, 0) == doctest::Approx(0.382253).epsilon(1e-6));
}

TEST_CASE("zero rate keeps every row uniform") {
    const BanditSpec spec({0.8, 0.6, 0.4});
    const std::vector<std::size_t> arms{0, 0, 1, 2, 0, 1, 0, 0};
    const ProbabilityPath p = probability_path(spec, RateSchedule::constant(0.0), arms, arms.size());
    for (std::size_t t = 0; t < arms.size(); ++t)
        for (double v : p.probs.row(t)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("two-arm monotonicity properties") {
    const BanditSpec spec({0.8, 0.0});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Trajectory t = simulate(spec, RateSchedule::constant(0.3), 400, seed);
        for (std::size_t s = 1; s < t.n; ++s) CHECK(t.true_path(s, 0) <= t.true_path(s - 1, 0));

        // Smaller rate, larger replayed p_1 at every step.
        const ProbabilityPath lo = probability_path(spec, RateSchedule::constant(0.2), t.arms, t.n);
        const ProbabilityPath hi = probability_path(spec, RateSchedule::constant(0.3), t.arms, t.n);
        for (std::size_t s = 0; s < t.n; ++s) CHECK(lo.probs(s, 0) >= hi.probs(s, 0));
    }
}

TEST_CASE("replay collapse is reported") {
    const BanditSpec spec({0.8, 0.0});
    // Enough arm-1 pulls at a large rate drive p_1 to exactly zero.
    const std::vector<std::size_t> arms(12, 0);
    try {
        probability_path(spec, RateSchedule::constant(5.0), arms, arms.size());
        FAIL("expected ReplayCollapse");
    } catch (const ReplayCollapse& e) {
        CHECK(e.step() >= 2);
        CHECK(e.step() <= arms.size());
    }
}

TEST_CASE("streaming state matches replay and caches revisions") {
    const BanditSpec spec({0.8, 0.0});
    Exp3State s(spec, 0.3);
    const auto r0 = s.revision();
    CHECK(s.update(1));
    CHECK(s.revision() == r0);  // zero-loss pull leaves the state unchanged
    CHECK(s.update(0));
    CHECK(s.revision() == r0 + 1);
    CHECK(s.probabilities()[0] == doctest::Approx(0.382253).epsilon(1e-6));
    CHECK(std::exp(s.log_probabilities()[0]) == doctest::Approx(s.probabilities()[0]).epsilon(1e-14));
}
