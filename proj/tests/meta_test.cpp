#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmw/errors.hpp"
#include "gmw/genetic.hpp"
#include "gmw/gwo.hpp"
#include "gmw/objectives.hpp"
#include "gmw/slpso.hpp"

using namespace gmw;
using meta::Individual;
using meta::Population;

namespace {

Population make_pop(const std::vector<double>& fitnesses, std::size_t dim, RngStream& rng) {
    Population pop(fitnesses.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        pop[i].position.resize(dim);
        for (double& x : pop[i].position) x = rng.uniform(-1.0, 1.0);
        pop[i].fitness = fitnesses[i];
    }
    return pop;
}

}  // namespace

TEST_CASE("compute_a is linear with exact endpoints") {
    CHECK(meta::compute_a(0, {2.0, 0.0, 100}) == 2.0);
    CHECK(meta::compute_a(100, {2.0, 0.0, 100}) == 0.0);
    CHECK(meta::compute_a(50, {1.0, 0.0, 100}) == 0.5);
    CHECK_THROWS_AS(meta::compute_a(101, {2.0, 0.0, 100}), UsageError);
}

TEST_CASE("update_hierarchy picks the three minima") {
    RngStream rng(1);
    SUBCASE("plain sort") {
        const Population pop = make_pop({3, 1, 2, 5, 4}, 2, rng);
        const meta::WolfHierarchy h = meta::update_hierarchy(pop);
        CHECK(h.alpha == 1);
        CHECK(h.beta == 2);
        CHECK(h.delta == 0);
        CHECK(h.omegas == std::vector<std::size_t>{3, 4});
    }
    SUBCASE("all-equal fitness breaks ties by index") {
        const Population pop = make_pop({7, 7, 7, 7, 7}, 2, rng);
        const meta::WolfHierarchy h = meta::update_hierarchy(pop);
        CHECK(h.alpha == 0);
        CHECK(h.beta == 1);
        CHECK(h.delta == 2);
    }
    SUBCASE("matches a full-sort oracle on random populations") {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> f(50);
            for (double& v : f) v = rng.uniform(0.0, 10.0);
            const Population pop = make_pop(f, 1, rng);
            const meta::WolfHierarchy h = meta::update_hierarchy(pop);

            std::vector<std::size_t> idx(f.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
            CHECK(h.alpha == idx[0]);
            CHECK(h.beta == idx[1]);
            CHECK(h.delta == idx[2]);

            // hierarchy invariant
            CHECK(*pop[h.alpha].fitness <= *pop[h.beta].fitness);
            CHECK(*pop[h.beta].fitness <= *pop[h.delta].fitness);
            for (std::size_t w : h.omegas)
                CHECK(*pop[h.delta].fitness <= *pop[w].fitness);
        }
    }
    SUBCASE("rejects tiny or unevaluated populations") {
        Population small = make_pop({1, 2, 3}, 1, rng);
        CHECK_THROWS_AS(meta::update_hierarchy(small), UsageError);
        Population stale = make_pop({1, 2, 3, 4}, 1, rng);
        stale[2].fitness.reset();
        CHECK_THROWS_AS(meta::update_hierarchy(stale), UsageError);
    }
}

TEST_CASE("gwo_candidate hand evaluation") {
    // wolf at 0, leaders at 1,2,3; r1=1, r2=0.5, a=2 => A=2, C=1
    CHECK(meta::gwo_candidate(0.0, 1.0, 2.0, 1.0, 0.5) == -1.0);
    CHECK(meta::gwo_candidate(0.0, 2.0, 2.0, 1.0, 0.5) == -2.0);
    CHECK(meta::gwo_candidate(0.0, 3.0, 2.0, 1.0, 0.5) == -3.0);
    CHECK((-1.0 + -2.0 + -3.0) / 3.0 == -2.0);
}

TEST_CASE("gwo_step at a=0 sends every omega to the leaders' mean") {
    RngStream rng(2);
    Population pop = make_pop({1, 2, 3, 9, 8, 7}, 5, rng);
    const meta::WolfHierarchy h = meta::update_hierarchy(pop);
    const auto pa = pop[h.alpha].position;
    const auto pb = pop[h.beta].position;
    const auto pd = pop[h.delta].position;
    meta::gwo_step(pop, h, 0.0, rng);
    for (std::size_t w : h.omegas) {
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(pop[w].position[j] == (pa[j] + pb[j] + pd[j]) / 3.0);  // bit-exact
        CHECK_FALSE(pop[w].fitness.has_value());
    }
    CHECK(pop[h.alpha].position == pa);
    CHECK(pop[h.beta].position == pb);
    CHECK(pop[h.delta].position == pd);
    CHECK(pop[h.alpha].fitness.has_value());
}

TEST_CASE("gwo_step leaves dominant wolves bit-identical") {
    RngStream rng(3);
    Population pop = make_pop({0.3, 0.1, 0.7, 0.9, 0.5, 0.2, 0.8}, 20, rng);
    const meta::WolfHierarchy h = meta::update_hierarchy(pop);
    const Population before = pop;
    meta::gwo_step(pop, h, 1.7, rng);
    for (std::size_t i : {h.alpha, h.beta, h.delta})
        CHECK(pop[i].position == before[i].position);
    for (std::size_t w : h.omegas) CHECK(pop[w].position != before[w].position);
}

TEST_CASE("gwo_step flags non-finite results with the dimension") {
    RngStream rng(4);
    Population pop = make_pop({1, 2, 3, 4, 5}, 3, rng);
    const meta::WolfHierarchy h = meta::update_hierarchy(pop);
    pop[h.alpha].position[1] = std::numeric_limits<double>::max();
    CHECK_THROWS_WITH_AS(meta::gwo_step(pop, h, 2.0, rng), doctest::Contains("dimension 1"),
                         NumericError);
}

TEST_CASE("gwo trajectories are seed-deterministic") {
    const auto a = meta::minimize_gwo(meta::sphere, 10, {20, 50, 2.0, 0.0, -5.0, 5.0}, 99);
    const auto b = meta::minimize_gwo(meta::sphere, 10, {20, 50, 2.0, 0.0, -5.0, 5.0}, 99);
    CHECK(a.best_fitness == b.best_fitness);
    CHECK(a.best_position == b.best_position);
    CHECK(a.best_history == b.best_history);
    // best-so-far history never increases
    for (std::size_t i = 1; i < a.best_history.size(); ++i)
        CHECK(a.best_history[i] <= a.best_history[i - 1]);
}

TEST_CASE("mutate_gene fixed points and boundaries") {
    CHECK(meta::mutate_gene(0.3, 0.5, 20.0, -1.0, 1.0) == 0.3);
    CHECK(meta::mutate_gene(0.3, 1.0, 20.0, -1.0, 1.0) == 1.0);
    CHECK(meta::mutate_gene(0.3, 0.0, 20.0, -1.0, 1.0) == -1.0);
}

TEST_CASE("polynomial mutation stays in bounds and concentrates with eta") {
    RngStream rng(5);
    meta::GaEventState ga;
    ga.x_lower = -1.0;
    ga.x_upper = 1.0;

    double dev20 = 0.0, dev100 = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const double p = rng.uniform(-1.0, 1.0);
        const double u = rng.uniform();
        const double m20 = meta::mutate_gene(p, u, 20.0, -1.0, 1.0);
        const double m100 = meta::mutate_gene(p, u, 100.0, -1.0, 1.0);
        CHECK(m20 >= -1.0);
        CHECK(m20 <= 1.0);
        CHECK(m100 >= -1.0);
        CHECK(m100 <= 1.0);
        dev20 += std::abs(m20 - p);
        dev100 += std::abs(m100 - p);
    }
    // larger eta concentrates the distribution around the parent
    CHECK(dev100 < dev20);
}

TEST_CASE("polynomial_mutation clamps out-of-bound genes and counts them") {
    RngStream rng(6);
    meta::GaEventState ga;
    Individual ind;
    ind.position = {1.4, -2.0, 0.2};
    ind.fitness = 1.0;
    meta::polynomial_mutation(ind, 0.0, ga, rng);  // rate 0: clamp only
    CHECK(ga.clamped_genes == 2);
    CHECK(ind.position[0] == 1.0);
    CHECK(ind.position[1] == -1.0);
    CHECK(ind.position[2] == 0.2);
    CHECK_FALSE(ind.fitness.has_value());
}

TEST_CASE("crossover_with_dominant") {
    RngStream rng(7);
    SUBCASE("rate endpoints") {
        Individual omega, dominant;
        omega.position.assign(50, 0.0);
        dominant.position.assign(50, 1.0);
        Individual o0 = omega;
        meta::crossover_with_dominant(o0, dominant, 0.0, rng);
        CHECK(o0.position == omega.position);
        Individual o1 = omega;
        meta::crossover_with_dominant(o1, dominant, 1.0, rng);
        CHECK(o1.position == dominant.position);
    }
    SUBCASE("gene fraction concentrates at the rate") {
        Individual omega, dominant;
        omega.position.assign(100000, 0.0);
        dominant.position.assign(100000, 1.0);
        meta::crossover_with_dominant(omega, dominant, 0.3, rng);
        double from_dominant = 0.0;
        for (double g : omega.position) {
            CHECK((g == 0.0 || g == 1.0));  // provenance: always one parent's gene
            from_dominant += g;
        }
        CHECK(from_dominant / 100000.0 == doctest::Approx(0.3).epsilon(0.0334));  // 0.3 +- 0.01
    }
    SUBCASE("dimension mismatch") {
        Individual a, b;
        a.position.assign(3, 0.0);
        b.position.assign(4, 0.0);
        CHECK_THROWS_AS(meta::crossover_with_dominant(a, b, 0.5, rng), DimensionError);
    }
}

TEST_CASE("ga_event") {
    RngStream rng(8);
    SUBCASE("requires the patience trigger") {
        Population pop = make_pop({1, 2, 3, 4, 5}, 3, rng);
        const meta::WolfHierarchy h = meta::update_hierarchy(pop);
        meta::GaEventState ga;
        ga.stall_counter = 2;
        ga.patience = 4;
        CHECK_THROWS_AS(meta::ga_event(pop, h, ga, rng), UsageError);
    }
    SUBCASE("forced mutation interpolates rates linearly over omega ranks") {
        std::vector<double> f(15);
        for (std::size_t i = 0; i < 15; ++i) f[i] = static_cast<double>(i);
        Population pop = make_pop(f, 4, rng);
        const meta::WolfHierarchy h = meta::update_hierarchy(pop);
        meta::GaEventState ga;
        ga.p_mut = 1.0;  // always mutation
        ga.stall_counter = ga.patience;
        ga.rate_worst = 0.6;
        ga.rate_best = 0.1;
        const Population before = pop;
        const meta::GaEventReport rep = meta::ga_event(pop, h, ga, rng);
        CHECK(rep.kind == meta::GaEventKind::mutation);
        REQUIRE(rep.rates.size() == 12);
        CHECK(rep.rates.front() == 0.6);  // worst omega
        CHECK(rep.rates.back() == 0.1);   // best omega
        for (std::size_t k = 0; k < 12; ++k)
            CHECK(rep.rates[k] ==
                  doctest::Approx(0.6 + (0.1 - 0.6) * static_cast<double>(k) / 11.0));
        // worst omega is index 14, best omega index 3
        CHECK(rep.omega_order.front() == 14);
        CHECK(rep.omega_order.back() == 3);
        CHECK(ga.stall_counter == 0);
        for (std::size_t i : {h.alpha, h.beta, h.delta})
            CHECK(pop[i].position == before[i].position);
    }
    SUBCASE("forced crossover keeps dominants intact and genes sourced from parents") {
        Population pop = make_pop({0, 1, 2, 3, 4, 5}, 30, rng);
        const meta::WolfHierarchy h = meta::update_hierarchy(pop);
        meta::GaEventState ga;
        ga.p_mut = 0.0;  // always crossover
        ga.stall_counter = ga.patience;
        const Population before = pop;
        const meta::GaEventReport rep = meta::ga_event(pop, h, ga, rng);
        CHECK(rep.kind == meta::GaEventKind::crossover);
        for (std::size_t i : {h.alpha, h.beta, h.delta})
            CHECK(pop[i].position == before[i].position);
        for (std::size_t w : h.omegas) {
            for (std::size_t j = 0; j < 30; ++j) {
                const double g = pop[w].position[j];
                const bool from_parent = g == before[w].position[j] ||
                                         g == before[h.alpha].position[j] ||
                                         g == before[h.beta].position[j] ||
                                         g == before[h.delta].position[j];
                CHECK(from_parent);
            }
            CHECK_FALSE(pop[w].fitness.has_value());
        }
    }
    SUBCASE("event type frequency tracks p_mut") {
        std::size_t mutations = 0;
        const int events = 1000;
        for (int i = 0; i < events; ++i) {
            RngStream ev_rng(1000 + i);
            Population pop = make_pop({0, 1, 2, 3, 4, 5}, 2, ev_rng);
            const meta::WolfHierarchy h = meta::update_hierarchy(pop);
            meta::GaEventState ga;
            ga.p_mut = 0.7;
            ga.stall_counter = ga.patience;
            if (meta::ga_event(pop, h, ga, ev_rng).kind == meta::GaEventKind::mutation)
                ++mutations;
        }
        const double freq = static_cast<double>(mutations) / events;
        CHECK(freq == doctest::Approx(0.7).epsilon(0.043));  // 0.7 +- 0.03
    }
}

TEST_CASE("stall accounting") {
    meta::GaEventState ga;
    ga.patience = 3;
    CHECK(meta::note_omega_fitness(ga, 5.0));  // improvement
    CHECK(ga.stall_counter == 0);
    CHECK_FALSE(meta::note_omega_fitness(ga, 5.0));  // equal is not strict improvement
    CHECK(ga.stall_counter == 1);
    CHECK_FALSE(meta::note_omega_fitness(ga, 6.0));
    CHECK(ga.stall_counter == 2);
    CHECK(meta::note_omega_fitness(ga, 4.9));
    CHECK(ga.stall_counter == 0);
    CHECK(ga.best_omega_fitness_seen == 4.9);
}

TEST_CASE("slpso_step") {
    SUBCASE("degenerate swarm with zero velocity does not move") {
        RngStream rng(9);
        meta::SlpsoConfig cfg;
        cfg.np = 6;
        meta::SlpsoState state = meta::SlpsoState::init(cfg, 4);
        Population pop(6);
        for (auto& ind : pop) {
            ind.position.assign(4, 0.05);
            ind.fitness = 1.0;
        }
        const Population before = pop;
        meta::slpso_step(pop, state, rng);
        for (std::size_t i = 0; i < pop.size(); ++i)
            CHECK(pop[i].position == before[i].position);
    }
    SUBCASE("the best particle is exempt") {
        RngStream rng(10);
        meta::SlpsoConfig cfg;
        cfg.np = 8;
        cfg.vel_lo = -1.0;
        cfg.vel_hi = 1.0;
        meta::SlpsoState state = meta::SlpsoState::init(cfg, 5);
        Population pop = make_pop({0.4, 0.9, 0.1, 0.6, 0.7, 0.2, 0.8, 0.5}, 5, rng);
        const Population before = pop;
        meta::slpso_step(pop, state, rng);
        CHECK(pop[2].position == before[2].position);  // fitness 0.1 is best
        CHECK(pop[2].fitness.has_value());
    }
    SUBCASE("velocities respect the clamp") {
        RngStream rng(11);
        meta::SlpsoConfig cfg;
        cfg.np = 10;
        cfg.pos_lo = -10.0;
        cfg.pos_hi = 10.0;
        cfg.vel_lo = -0.01;
        cfg.vel_hi = 0.01;
        meta::SlpsoState state = meta::SlpsoState::init(cfg, 3);
        std::vector<double> f(10);
        for (double& v : f) v = rng.uniform(0.0, 1.0);
        Population pop = make_pop(f, 3, rng);
        for (auto& ind : pop)
            for (double& x : ind.position) x = rng.uniform(-10.0, 10.0);
        meta::slpso_step(pop, state, rng);
        for (const auto& vel : state.velocities)
            for (double v : vel) {
                CHECK(v >= -0.01);
                CHECK(v <= 0.01);
            }
    }
    SUBCASE("rejects swarms below two particles") {
        RngStream rng(12);
        meta::SlpsoConfig cfg;
        cfg.np = 2;
        meta::SlpsoState state = meta::SlpsoState::init(cfg, 2);
        Population pop = make_pop({1.0}, 2, rng);
        CHECK_THROWS_AS(meta::slpso_step(pop, state, rng), UsageError);
    }
}

TEST_CASE("slpso makes progress on the sphere function") {
    std::vector<double> at20, at200;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        meta::SlpsoOptions opts;
        opts.cfg.np = 30;
        opts.cfg.pos_lo = -5.0;
        opts.cfg.pos_hi = 5.0;
        opts.cfg.vel_lo = -1.0;
        opts.cfg.vel_hi = 1.0;
        opts.iterations = 200;
        const auto trace = meta::minimize_slpso(meta::sphere, 30, opts, seed);
        at20.push_back(trace.best_history[19]);
        at200.push_back(trace.best_history[199]);
    }
    std::sort(at20.begin(), at20.end());
    std::sort(at200.begin(), at200.end());
    CHECK(at200[5] < at20[5]);  // median strictly improves
}
