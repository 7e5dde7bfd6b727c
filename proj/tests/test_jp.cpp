#include "bell/jp.hpp"

#include "bell/recipes.hpp"
#include "bell/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace bell;

namespace {

PairwiseSystem system_of(const JointWitness& w) {
    PairwiseSystem s;
    for (auto c : all_contexts)
        for (int a : {1, -1})
            for (int b : {1, -1})
                s.cells[idx(c)][PairwiseSystem::cell_index(a, b)] =
                    w.project(c, a, b);
    return s;
}

JointWitness random_witness(std::uint64_t seed) {
    Rng rng(seed);
    JointWitness w;
    BigQ total(0);
    for (auto& v : w.w) {
        v = BigQ(static_cast<int>(rng.below(6)));
        total += v;
    }
    if (total == 0) {
        w.w[seed % 16] = 1;
        total = 1;
    }
    for (auto& v : w.w) v /= total;
    return w;
}

PairwiseSystem pr_box() {
    PairwiseSystem s;
    const BigQ h(1, 2);
    for (auto c : {ContextId::xy, ContextId::xyp, ContextId::xpy})
        s.cells[idx(c)] = {h, 0, 0, h};
    s.cells[idx(ContextId::xpyp)] = {0, h, h, 0};
    return s;
}

std::filesystem::path fresh_dir(const char* tag) {
    auto p =
        std::filesystem::temp_directory_path() / (std::string("bell_jp_") + tag);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("systems assembled from a joint distribution are feasible") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const JointWitness w = random_witness(seed);
        const PairwiseSystem s = system_of(w);
        const JpResult r = jp_feasible(s);
        REQUIRE(r.status == JpResult::Status::feasible);
        REQUIRE(r.witness.has_value());
        CHECK(r.witness_max_error <= 1e-9);
        // the returned witness reproduces every input cell
        for (auto c : all_contexts)
            for (int a : {1, -1})
                for (int b : {1, -1}) {
                    const BigQ diff =
                        r.witness->project(c, a, b) -
                        s.cells[idx(c)][PairwiseSystem::cell_index(a, b)];
                    CHECK(std::abs(to_double(diff)) <= 1e-9);
                }
        for (const auto& v : fine_values(s)) CHECK(v <= BigQ(0));
    }
}

TEST_CASE("witness index bit convention") {
    // assignment (A_x, A_x', B_y, B_y') = (+1, -1, +1, -1) is index 0b1010
    JointWitness w;
    w.w[0b1010] = 1;
    CHECK(w.project(ContextId::xy, 1, 1) == BigQ(1));
    CHECK(w.project(ContextId::xy, 1, -1) == BigQ(0));
    CHECK(w.project(ContextId::xyp, 1, -1) == BigQ(1));
    CHECK(w.project(ContextId::xpy, -1, 1) == BigQ(1));
    CHECK(w.project(ContextId::xpyp, -1, -1) == BigQ(1));

    // a deterministic system pins the whole mass back onto that assignment
    const JpResult r = jp_feasible(system_of(w));
    REQUIRE(r.status == JpResult::Status::feasible);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->w[0b1010] == BigQ(1));
    for (std::size_t i = 0; i < 16; ++i)
        if (i != 0b1010) CHECK(r.witness->w[i] == BigQ(0));
}

TEST_CASE("perfect correlations in three contexts and anticorrelation in the "
          "fourth have no joint distribution") {
    const PairwiseSystem s = pr_box();
    CHECK(s.e(ContextId::xy) == BigQ(1));
    CHECK(s.e(ContextId::xpyp) == BigQ(-1));
    const JpResult r = jp_feasible(s);
    REQUIRE(r.status == JpResult::Status::infeasible);
    REQUIRE(r.certificate.has_value());
    CHECK(r.certificate->kind == JpCertificate::Kind::chsh_violation);
    CHECK(r.certificate->value == BigQ(4));
    CHECK(r.certificate->signs == std::array<int, 4>{1, 1, 1, -1});
    CHECK(r.certificate->detail.find("> 2") != std::string::npos);

    std::array<BigQ, 8> fv = fine_values(s);
    BigQ best(-10);
    for (const auto& v : fv) best = std::max(best, v);
    CHECK(best == BigQ(2));  // 4 - 2
}

TEST_CASE("correlations at the quantum optimum are infeasible") {
    const double r = 1.0 / std::sqrt(2.0);
    const PairwiseSystem s =
        system_from_correlations({-r, r, -r, -r}, {0, 0}, {0, 0});
    const JpResult res = jp_feasible(s);
    REQUIRE(res.status == JpResult::Status::infeasible);
    REQUIRE(res.certificate.has_value());
    CHECK(std::abs(to_double(res.certificate->value) - 2 * std::sqrt(2.0)) <
          1e-12);
    CHECK(res.certificate->signs == std::array<int, 4>{-1, 1, -1, -1});
}

TEST_CASE("the no-zero contextual demo is infeasible with value 3") {
    const ExactCorrelations ec = exact_correlations(demo_eq5_model());
    const PairwiseSystem s = system_from_exact(ec, true);
    const JpResult r = jp_feasible(s);
    REQUIRE(r.status == JpResult::Status::infeasible);
    REQUIRE(r.certificate.has_value());
    CHECK(r.certificate->value == BigQ(3));
    CHECK(r.certificate->signs == std::array<int, 4>{1, 1, 1, -1});
}

TEST_CASE("the selective demo fails on marginals, not on correlations") {
    const ExactCorrelations ec = exact_correlations(demo_eq3_model());
    const PairwiseSystem s = system_from_exact(ec, true);
    const JpResult r = jp_feasible(s);
    REQUIRE(r.status == JpResult::Status::marginal_inconsistent);
    REQUIRE(r.certificate.has_value());
    CHECK(r.certificate->kind == JpCertificate::Kind::marginal_mismatch);
    CHECK(r.certificate->value == BigQ(18, 13));
    CHECK(r.certificate->detail.find("B_y'") != std::string::npos);
    CHECK(r.certificate->detail.find("xyp") != std::string::npos);
    CHECK(!r.witness.has_value());
}

TEST_CASE("marginal tolerance separates at the advertised threshold") {
    auto shifted = [](double eps) {
        // B_y' has mean 0 in context xyp but eps in context xpyp
        PairwiseSystem s;
        for (auto c : all_contexts)
            for (int a : {1, -1})
                for (int b : {1, -1}) {
                    const double p =
                        c == ContextId::xpyp ? (1 + b * eps) / 4.0 : 0.25;
                    s.cells[idx(c)][PairwiseSystem::cell_index(a, b)] =
                        rational_from_double(p);
                }
        return s;
    };
    CHECK(jp_feasible(shifted(2e-9)).status ==
          JpResult::Status::marginal_inconsistent);
    CHECK(jp_feasible(shifted(5e-10)).status == JpResult::Status::feasible);
}

TEST_CASE("random moment systems never crash the decision procedure") {
    // consistent marginals by construction; feasibility varies with e
    int feasible = 0, infeasible = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Rng rng(derive_seed(77, {seed}));
        std::array<double, 4> e;
        for (auto& v : e)
            v = 2.0 * static_cast<double>(rng.below(20001)) / 20000.0 - 1.0;
        const PairwiseSystem s = system_from_correlations(e, {0, 0}, {0, 0});
        const JpResult r = jp_feasible(s);
        REQUIRE(r.status != JpResult::Status::marginal_inconsistent);
        if (r.status == JpResult::Status::feasible) {
            ++feasible;
            CHECK(r.witness.has_value());
        } else {
            ++infeasible;
            REQUIRE(r.certificate.has_value());
            CHECK(r.certificate->value > BigQ(2));
        }
    }
    CHECK(feasible > 0);
    CHECK(infeasible > 0);
}

TEST_CASE("the eight sign patterns are the odd-minus ones") {
    const auto pats = fine_patterns();
    std::set<std::array<int, 4>> seen;
    for (const auto& p : pats) {
        int minus = 0;
        for (int v : p) {
            CHECK((v == 1 || v == -1));
            minus += v == -1;
        }
        CHECK(minus % 2 == 1);
        seen.insert(p);
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("invalid moment combinations are rejected") {
    CHECK_THROWS_AS(system_from_correlations({-1, 0, 0, 0}, {1, 0}, {1, 0}),
                    config_error);
    PairwiseSystem s = pr_box();
    s.cells[0][0] = BigQ(-1, 100);
    CHECK_THROWS_AS(s.validate_and_normalize(), config_error);
    s = pr_box();
    s.cells[2][0] += BigQ(1, 100);  // context total drifts off 1
    CHECK_THROWS_AS(s.validate_and_normalize(), config_error);
}

TEST_CASE("pairwise CSV round trip and error paths") {
    const auto dir = fresh_dir("csv");
    const auto path = dir / "system.csv";
    {
        std::ofstream out(path);
        out << "context,p_pp,p_pm,p_mp,p_mm\n";
        out << "xy,13/40,0,0,27/40\n";
        out << "xyp,1/4,1/4,1/4,1/4\n";
        out << "xpy,0.5,0,0.5,0\n";
        out << "xpyp,0.25,0.25,0.25,0.25\n";
    }
    const PairwiseSystem s = load_pairwise_csv(path);
    CHECK(s.cells[idx(ContextId::xy)][0] == BigQ(13, 40));
    CHECK(s.cells[idx(ContextId::xpy)][2] == BigQ(1, 2));
    CHECK(s.e(ContextId::xyp) == BigQ(0));

    auto write = [&](const char* name, const char* body) {
        const auto p = dir / name;
        std::ofstream out(p);
        out << body;
        return p;
    };
    CHECK_THROWS_WITH_AS(
        load_pairwise_csv(write("bad_header.csv", "ctx,a,b,c,d\nxy,1,0,0,0\n")),
        doctest::Contains("header"), config_error);
    CHECK_THROWS_WITH_AS(
        load_pairwise_csv(write(
            "dup.csv", "context,p_pp,p_pm,p_mp,p_mm\nxy,1,0,0,0\nxy,1,0,0,0\n")),
        doctest::Contains("duplicate"), config_error);
    CHECK_THROWS_AS(
        load_pairwise_csv(write("missing.csv",
                                "context,p_pp,p_pm,p_mp,p_mm\nxy,1,0,0,0\n")),
        config_error);
    CHECK_THROWS_AS(
        load_pairwise_csv(write("fields.csv",
                                "context,p_pp,p_pm,p_mp,p_mm\nxy,1,0,0\n")),
        config_error);
    CHECK_THROWS_AS(load_pairwise_csv(dir / "does_not_exist.csv"), config_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pairwise JSON accepts both the cells form and the moments form") {
    const auto dir = fresh_dir("json");
    const auto cells = dir / "cells.json";
    {
        std::ofstream out(cells);
        out << R"({"system": {
            "xy":   ["13/40", "0", "0", "27/40"],
            "xyp":  [0.25, 0.25, 0.25, 0.25],
            "xpy":  [0.5, 0, 0.5, 0],
            "xpyp": [0.25, 0.25, 0.25, 0.25]}})";
    }
    const PairwiseSystem a = load_pairwise_json(cells);
    CHECK(a.cells[idx(ContextId::xy)][3] == BigQ(27, 40));

    const auto moments = dir / "moments.json";
    {
        std::ofstream out(moments);
        out << R"({"correlations": {
            "e": [1, 1, 1, -1], "m_alice": [0, 0], "m_bob": [0, 0]}})";
    }
    const PairwiseSystem b = load_pairwise_json(moments);
    CHECK(b.e(ContextId::xy) == BigQ(1));
    CHECK(b.cells[idx(ContextId::xy)][0] == BigQ(1, 2));
    const JpResult r = jp_feasible(b);
    CHECK(r.status == JpResult::Status::infeasible);

    const auto bad = dir / "bad.json";
    {
        std::ofstream out(bad);
        out << R"({"system": {"xy": [1, 0, 0, 0]}})";
    }
    CHECK_THROWS_AS(load_pairwise_json(bad), config_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("coupling identities hold exactly, and mismatches are caught") {
    for (const Model& base : {demo_eq3_model(), demo_eq3_disjoint_model()}) {
        const Model coupled = build_coupling(base);
        const CouplingReport r = coupling_equalities(base, coupled);
        CHECK(r.all_zero);
        for (const auto& res : r.residuals) CHECK(res == BigQ(0));
        for (std::size_t i = 0; i < 8; ++i)
            CHECK(r.product_side[i] == r.coupled_side[i]);
    }

    const Model coupled = build_coupling(demo_eq3_model());
    CHECK_THROWS_WITH_AS(
        coupling_equalities(demo_eq3_disjoint_model(), coupled),
        doctest::Contains("ingredient tables differ"), domain_error);
    CHECK_THROWS_WITH_AS(coupling_equalities(demo_eq3_model(), demo_eq3_model()),
                         doctest::Contains("not a coupled_joint"), domain_error);
    CHECK_THROWS_WITH_AS(coupling_equalities(demo_eq5_model(), coupled),
                         doctest::Contains("not a product-type"), domain_error);
}

TEST_CASE("stochastic couplings also satisfy the identities") {
    for (std::uint64_t seed : {3u, 14u, 25u}) {
        const Model base = random_stochastic_local(seed);
        const CouplingReport r = coupling_equalities(base, build_coupling(base));
        CHECK(r.all_zero);
    }
}
