#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "tppfit/dataset.hpp"
#include "tppfit/errors.hpp"

using namespace tppfit;
using namespace tppfit::testing;

TEST_CASE("observation validation") {
    CHECK_THROWS_AS(ExperimentDataset({{0.0, 1.0, 1.0}}), DomainError);
    CHECK_THROWS_AS(ExperimentDataset({{1.0, 1.0, -1.0}}), DomainError);
    Observation bad{1e7, 2e8, 3.0, Split::Train, 21.0};
    CHECK_THROWS_AS(ExperimentDataset({bad}), DomainError);
    Observation ok{1e7, 2e8, 3.0, Split::Train, 20.0};
    CHECK(ExperimentDataset({ok}).size() == 1);
    CHECK(Observation{1e7, 2e8, 3.0}.ratio() == 20.0);
}

TEST_CASE("split names") {
    for (auto s : {Split::Train, Split::HoldoutCollinear, Split::HoldoutNonCollinear})
        CHECK(parse_split(split_name(s)) == s);
    CHECK(split_name(Split::HoldoutCollinear) == "holdout_co");
    CHECK_FALSE(parse_split("test").has_value());
}

TEST_CASE("generate_collinear") {
    const auto t = truth(LawKind::Chinchilla);
    const auto sizes = log_space(5e6, 8e7, 14);
    const std::vector<double> ratios{1, 1.5, 1.9, 2, 2.5, 2.7, 3, 3.3, 3.5, 4, 4.5, 5};
    SUBCASE("noiseless values are exact") {
        const auto ds = generate_collinear(t, sizes, ratios, {0.0, 1});
        CHECK(ds.size() == 168);
        for (const auto& o : ds.observations()) {
            CHECK(o.loss == evaluate(t, o.n, o.d));
            REQUIRE(o.ray.has_value());
            CHECK(std::abs(o.d / o.n - *o.ray) / *o.ray < 1e-9);
        }
        CHECK(ds.is_collinear());
        CHECK(ds.distinct_ratios() == ratios);
        CHECK(ds.distinct_sizes().size() == 14);
    }
    SUBCASE("deterministic per seed") {
        const auto a = generate_collinear(t, sizes, ratios, {0.01, 9});
        const auto b = generate_collinear(t, sizes, ratios, {0.01, 9});
        const auto c = generate_collinear(t, sizes, ratios, {0.01, 10});
        CHECK(a == b);
        CHECK_FALSE(a == c);
    }
    SUBCASE("growing the grid keeps existing noise") {
        const auto small = generate_collinear(t, sizes, {1, 2}, {0.01, 4});
        const auto big = generate_collinear(t, sizes, {1, 2, 3}, {0.01, 4});
        std::size_t matched = 0;
        for (const auto& o : small.observations())
            for (const auto& p : big.observations())
                if (o.n == p.n && o.d == p.d) {
                    CHECK(o.loss == p.loss);
                    ++matched;
                }
        CHECK(matched == small.size());
    }
    SUBCASE("single ray") {
        const auto ds = generate_collinear(t, sizes, {20.0}, {0.0, 0});
        CHECK(ds.is_collinear());
        CHECK(ds.distinct_ratios().size() == 1);
    }
    CHECK_THROWS_AS(generate_collinear(t, {2e7, 1e7}, {1.0}, {0.0, 0}), InvalidGridError);
    CHECK_THROWS_AS(generate_collinear(t, {1e7}, {}, {0.0, 0}), InvalidGridError);
    CHECK_THROWS_AS(generate_collinear(t, {1e7}, {-1.0}, {0.0, 0}), InvalidGridError);
    CHECK_THROWS(generate_collinear(t, {1e7}, {1.0}, {-1.0, 0}));
}

TEST_CASE("noise statistics") {
    double s = 0, s2 = 0;
    const int m = 20000;
    for (int i = 0; i < m; ++i) {
        const double z = counter_normal(7, static_cast<std::uint64_t>(i), 3);
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / m) < 0.03);
    CHECK(std::abs(s2 / m - 1.0) < 0.05);
    CHECK(counter_normal(1, 2, 3) == counter_normal(1, 2, 3));
    CHECK(counter_normal(1, 2, 3) != counter_normal(1, 3, 2));
}

TEST_CASE("generate_grid") {
    const auto t = truth(LawKind::Chinchilla);
    const auto ds = generate_grid(t, log_space(5e6, 8e7, 14), log_space(1e7, 3e8, 12), {0.0, 0});
    CHECK(ds.size() == 168);
    std::set<double> ratios;
    for (const auto& o : ds.observations()) {
        CHECK_FALSE(o.ray.has_value());
        ratios.insert(o.d / o.n);
    }
    CHECK(ratios.size() == 168);
    CHECK_FALSE(ds.is_collinear());
    CHECK(generate_grid(t, {1e7}, {1e8}, {0.0, 0}).size() == 1);
}

TEST_CASE("mark_holdout") {
    const auto t = truth(LawKind::Chinchilla);
    const auto sizes = log_space(5e6, 8e7, 6);
    const auto co = generate_collinear(t, sizes, {1, 2, 3, 4, 5, 6, 7}, {0.0, 0});
    SUBCASE("paper-shaped split") {
        const auto m = mark_holdout(co, 6.0, 1e300);
        CHECK(m.count(Split::HoldoutCollinear) == 12);
        CHECK(m.count(Split::Train) == 30);
        for (const auto& o : m.observations()) CHECK((o.split == Split::HoldoutCollinear) == (*o.ray >= 6.0));
    }
    SUBCASE("ratio cut above max ray") {
        CHECK(mark_holdout(co, 100.0, 1e300).count(Split::HoldoutCollinear) == 0);
    }
    SUBCASE("union partition") {
        const auto grid = generate_grid(t, sizes, log_space(1e7, 3e8, 5), {0.0, 0});
        const auto all = mark_holdout(co.concatenated(grid), 6.0, 2e8);
        CHECK(all.count(Split::HoldoutCollinear) > 0);
        CHECK(all.count(Split::HoldoutNonCollinear) > 0);
        CHECK(all.count(Split::Train) + all.count(Split::HoldoutCollinear) + all.count(Split::HoldoutNonCollinear) ==
              all.size());
        for (const auto& o : all.observations())
            if (o.ray && *o.ray >= 6.0) CHECK(o.split == Split::HoldoutCollinear);
    }
    CHECK_THROWS_AS(mark_holdout(co, 0.5, 1e300), EmptyTrainError);
}

TEST_CASE("replication and helpers") {
    const auto t = truth(LawKind::Chinchilla);
    const auto ds = generate_collinear(t, log_space(1e7, 1e9, 5), {20.0}, {0.0, 0});
    CHECK(ds.replicated(3).size() == 15);
    CHECK(ds.min_loss() > 1.69);
    const auto ls = log_space(1.0, 1000.0, 4);
    CHECK(ls.front() == 1.0);
    CHECK(ls.back() == 1000.0);
    CHECK(ls[1] == doctest::Approx(10.0).epsilon(1e-12));
}
