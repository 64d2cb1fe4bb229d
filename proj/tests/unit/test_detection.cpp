#include "doctest.h"

#include "fedprov/detection.hpp"
#include "fedprov/domain.hpp"
#include "fedprov/error.hpp"
#include "fedprov/robust.hpp"

#include "../support/domain_system.hpp"
#include "../support/oracles.hpp"

using namespace fedprov;

TEST_CASE("MAD hand example") {
    const std::vector<double> z{1, 2, 3, 4, 100};
    const auto s = mad_scores(z);
    CHECK(s[4] == doctest::Approx(97.0 / 1.4826).epsilon(1e-12));
    CHECK(s[4] == doctest::Approx(65.42).epsilon(1e-4));
    CHECK(mad_flags(z) == std::vector<std::size_t>{4});
}

TEST_CASE("MAD degenerate populations") {
    const std::vector<double> c{2, 2, 2, 2};
    for (double s : mad_scores(c)) CHECK(s == 0.0);
    CHECK(mad_flags(c).empty());
    const std::vector<double> consensus{1, 1, 1, 1, 5};
    const auto s = mad_scores(consensus);
    CHECK(s[0] == 0.0);
    CHECK(s[4] == kMadSentinel);
    CHECK(mad_flags(consensus) == std::vector<std::size_t>{4});
}

TEST_CASE("MAD matches the midpoint-median oracle") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        const auto z = oracle::random_vector(rng, 3 + rng() % 15);
        const auto got = mad_scores(z), want = oracle::mad_scores(z);
        for (std::size_t i = 0; i < z.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
    }
}

TEST_CASE("MAD config validation and lower median") {
    MadConfig m;
    m.b = 0;
    CHECK_THROWS_AS(m.validate(), Error);
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(lower_median(v) == 2.0);
}

TEST_CASE("slopes") {
    const std::vector<double> v{1, 3, 2, 6};
    CHECK(regression_slope(v) == doctest::Approx(1.4));   // 7 / 5 by hand
    CHECK(endpoint_slope(v) == doctest::Approx(5.0 / 3.0));
    const std::vector<double> one{4};
    CHECK(regression_slope(one) == 0.0);
    CHECK(slope(v, SlopeMode::endpoint) == endpoint_slope(v));
}

TEST_CASE("local anomaly detection") {
    RowMatrix same(6, 4);
    same.setConstant(1.5);
    CHECK(local_anomaly_detect(same).flagged.empty());

    std::mt19937_64 rng(2);
    // a bounded cluster: Gaussian tails would legitimately trip MAD at n = 10
    std::uniform_real_distribution<double> g(-1.0, 1.0);
    RowMatrix v(10, 5);
    for (Eigen::Index r = 0; r < 10; ++r)
        for (Eigen::Index c = 0; c < 5; ++c) v(r, c) = g(rng);
    for (std::size_t axis = 0; axis < 5; ++axis) {
        RowMatrix w = v;
        w(7, static_cast<Eigen::Index>(axis)) += 100.0;
        const auto flagged = local_anomaly_detect(w).flagged;
        std::string got;
        for (auto f : flagged) got += std::to_string(f) + " ";
        INFO("axis ", axis, " flagged ", got);
        CHECK(flagged == std::vector<std::size_t>{7});
    }
    CHECK_THROWS_AS(local_anomaly_detect(RowMatrix::Zero(2, 3)), Error);
}

TEST_CASE("tsim examples") {
    const std::vector<double> a{1, 2, 3}, r{3, 2, 1}, c1{5, 5, 5}, c2{1, 1, 1};
    CHECK(tsim(a, a) == doctest::Approx(1.0));
    CHECK(tsim(a, r) == doctest::Approx(-1.0));
    const std::vector<double> shifted{11, 12, 13}, scaled{2, 4, 6};
    CHECK(tsim(a, shifted) == doctest::Approx(1.0));
    CHECK(tsim(a, scaled) == doctest::Approx(1.0));
    CHECK(tsim(c1, c2) == 1.0);
    CHECK(tsim(a, c1) == 0.0);
    const std::vector<double> shorter{1, 2};
    CHECK_THROWS_AS(tsim(a, shorter), Error);
}

TEST_CASE("ddist examples") {
    const std::vector<double> a{2, 3, 4}, b{1, 2, 3};
    CHECK(ddist(a, a) == 0.0);
    CHECK(ddist(a, b) == doctest::Approx(1.0));
    std::vector<double> shifted = a;
    for (auto& x : shifted) x += 2.5;
    CHECK(ddist(shifted, b) == doctest::Approx(ddist(a, b) + 2.5));
}

TEST_CASE("task detection rules") {
    SUBCASE("identical non-constant CAMs give unit similarity") {
        const std::vector<std::vector<double>> cam{{0.1, 0.5, 0.9}, {1, 0, 0.5, 0.2}};
        const std::vector<std::vector<std::vector<double>>> cams(4, cam);
        const auto r = task_detect(cams);
        for (const auto& a : r.alpha)
            for (double x : a) CHECK(x == doctest::Approx(1.0));
        CHECK(r.determined.empty());
        CHECK(r.candidates.empty());
    }
    SUBCASE("a mirrored client is determined") {
        const std::vector<std::vector<double>> cam{{0.1, 0.5, 0.9}, {1, 0, 0.5, 0.2}};
        std::vector<std::vector<std::vector<double>>> cams(5, cam);
        for (auto& layer : cams[2]) {
            double m = 0;
            for (double x : layer) m += x / static_cast<double>(layer.size());
            for (double& x : layer) x = -x + 2 * m;
        }
        const auto r = task_detect(cams);
        CHECK(r.alpha[2][0] == doctest::Approx(-1.0));
        CHECK(r.determined == std::vector<std::size_t>{2});
    }
    SUBCASE("decreasing positive similarity makes a candidate") {
        // pattern = median of three identical clients; the fourth drifts more in deeper layers
        const std::vector<std::vector<double>> base{{0, 1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}};
        std::vector<std::vector<std::vector<double>>> cams(4, base);
        cams[3][1] = {0, 1, 3, 2};
        cams[3][2] = {0, 3, 1, 2};
        const auto r = task_detect(cams);
        CHECK(r.alpha[3][0] > r.alpha[3][1]);
        CHECK(r.alpha[3][1] > r.alpha[3][2]);
        CHECK(r.alpha[3][2] > 0.0);
        CHECK(r.candidates == std::vector<std::size_t>{3});
        CHECK(r.determined.empty());
    }
    const std::vector<std::vector<std::vector<double>>> few(2, {{1, 2}, {3, 4}});
    CHECK_THROWS_AS(task_detect(few), Error);
    const std::vector<std::vector<std::vector<double>>> shallow(3, {{1, 2}});
    CHECK_THROWS_AS(task_detect(shallow), Error);
}

TEST_CASE("domain detection rules") {
    std::vector<DomainEvidence> ev;
    for (std::size_t i = 0; i < 6; ++i) ev.push_back({i, true, {0.0, 0.0, 0.0}});
    SUBCASE("exact predictions confirm nothing") {
        const auto rep = domain_detect(ev, {0, 1, 2}, {5});
        CHECK(rep.confirmed.empty());
        CHECK(rep.determined == std::vector<std::size_t>{5});
    }
    SUBCASE("a rising positive delta is confirmed") {
        ev[2].delta = {0.1, 0.2, 0.3};
        const auto rep = domain_detect(ev, {2}, {});
        CHECK(rep.confirmed == std::vector<std::size_t>{2});
    }
    SUBCASE("a falling delta is not") {
        ev[2].delta = {0.3, 0.2, 0.1};
        CHECK(domain_detect(ev, {2}, {}).confirmed.empty());
    }
    SUBCASE("no candidates passes the determined set through") {
        ev[1].delta = {5, 6, 7};
        CHECK(domain_detect(ev, {}, {4, 1}).determined == std::vector<std::size_t>{1, 4});
    }
    SUBCASE("unfitted candidates are confirmed directly") {
        ev[3].fitted = false;
        CHECK(domain_detect(ev, {3}, {}).confirmed == std::vector<std::size_t>{3});
    }
}

TEST_CASE("Kalman fit on a noiseless diagonal system") {
    const auto sys = fixture::simulate_domain(4, 15, 7);
    const auto m = fit_domain_model(std::span(sys.states.data(), 10), 4);
    REQUIRE(m.fitted);
    for (std::size_t l = 0; l < 4; ++l) {
        CHECK(m.f1[l] == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(m.f2[l] == doctest::Approx(0.1).epsilon(1e-3));
        CHECK(m.p[l] == doctest::Approx(sys.p[l]).epsilon(1e-3));
    }
    CHECK(fixture::heldout_error(sys, 10, 5) <= 1e-3);
}

TEST_CASE("Kalman degenerate inputs") {
    std::vector<DomainObservation> zeros(5, DomainObservation{{0, 0}, {0, 0}, {0, 0}});
    const auto m = fit_domain_model(zeros, 2);
    CHECK(m.fitted);
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(m.f1[l] == 0.0);
        CHECK(m.f2[l] == 0.0);
        CHECK(m.p[l] == 0.0);
    }
    const std::vector<double> x{1, 2};
    CHECK(predict_domain(m, x, x) == std::vector<double>{0, 0});
    CHECK_FALSE(fit_domain_model(std::span(zeros.data(), 2), 2).fitted);
    try {
        predict_domain(DomainParams{}, x, x);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::not_fitted);
    }
}

TEST_CASE("predict_domain matches a hand evaluation") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        DomainParams m;
        m.fitted = true;
        m.f1 = oracle::random_vector(rng, 3);
        m.f2 = oracle::random_vector(rng, 3);
        m.omega = oracle::random_vector(rng, 3);
        m.h = oracle::random_vector(rng, 3);
        m.w = oracle::random_vector(rng, 3);
        m.p = oracle::random_vector(rng, 3);
        const auto d = oracle::random_vector(rng, 3), dg = oracle::random_vector(rng, 3);
        const auto out = predict_domain(m, d, dg);
        for (std::size_t l = 0; l < 3; ++l)
            CHECK(out[l] == doctest::Approx(m.f1[l] * d[l] + m.f2[l] * dg[l] + m.h[l] * m.omega[l] + m.w[l]).epsilon(1e-12));
    }
    DomainParams id;
    id.fitted = true;
    id.f1 = {1, 1};
    id.f2 = id.omega = id.h = id.w = id.p = {0, 0};
    const std::vector<double> d{3, -4}, dg{9, 9};
    CHECK(predict_domain(id, d, dg) == d);
}

TEST_CASE("reference window") {
    DomainModel m;
    const std::vector<std::vector<double>> a{{1, 2}}, b{{3, 6}}, c{{5, 1}}, d{{7, 7}};
    update_reference(m, a, true);
    CHECK(m.reference == a);
    update_reference(m, b, true);
    CHECK(m.reference == std::vector<std::vector<double>>{{2, 4}});
    const auto frozen = m;
    update_reference(m, d, false);
    CHECK(m == frozen);
    update_reference(m, c, true);
    update_reference(m, d, true);   // window of 3 drops a
    CHECK(m.reference[0][0] == doctest::Approx(5.0));
    CHECK(m.reference[0][1] == doctest::Approx(14.0 / 3.0));
}

TEST_CASE("omega refit leaves other parameters frozen") {
    const auto sys = fixture::simulate_domain(2, 10, 3);
    auto m = fit_domain_model(sys.states, 2);
    const auto before = m;
    auto shifted = sys.states;
    for (std::size_t t = 0; t < shifted.size(); ++t)
        for (std::size_t l = 0; l < 2; ++l) shifted[t].dg[l] += 0.3 * static_cast<double>(t);
    refit_omega(m, shifted);
    CHECK(m.f1 == before.f1);
    CHECK(m.f2 == before.f2);
    CHECK(m.p == before.p);
    for (double o : m.omega) CHECK(o == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("domain model and verdict JSON round-trips") {
    DomainModel m;
    m.params = fit_domain_model(fixture::simulate_domain(2, 6, 1).states, 2);
    update_reference(m, {{0.5, 0.25}, {1.0}}, true);
    m.history.push_back({{1, 2}, {3, 4}, {5, 6}});
    CHECK(domain_model_from_json(domain_model_to_json(m)) == m);

    Verdict v;
    v.client = 4;
    v.round = 9;
    v.flags.sortv = true;
    v.scores["sortv"] = 3.5;
    v.confirmed = true;
    const auto back = verdict_from_json(verdict_to_json(v));
    CHECK(back.client == 4);
    CHECK(back.round == 9);
    CHECK(back.flags == v.flags);
    CHECK(back.scores == v.scores);
    CHECK(back.confirmed);
    CHECK_THROWS_AS(verdict_from_json(nlohmann::json{{"client", 1}}), Error);
}
