#include "gmw/moo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmw/errors.hpp"

namespace gmw::moo {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
    return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(
    std::span<const ObjectiveVector> points) {
    const std::size_t n = points.size();
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> dominated(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(points[i], points[j])) dominated[i].push_back(j);
            else if (dominates(points[j], points[i])) ++domination_count[i];
        }
    }
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        if (domination_count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        fronts.push_back(current);
        std::vector<std::size_t> next;
        for (std::size_t i : current) {
            for (std::size_t j : dominated[i]) {
                if (--domination_count[j] == 0) next.push_back(j);
            }
        }
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

std::vector<double> crowding_distance(std::span<const ObjectiveVector> front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), kInf);
        return dist;
    }
    auto accumulate = [&](auto key) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
        dist[order.front()] = kInf;
        dist[order.back()] = kInf;
        const double range = key(order.back()) - key(order.front());
        if (range <= 0.0) return;  // degenerate objective contributes nothing
        for (std::size_t k = 1; k + 1 < n; ++k)
            dist[order[k]] += (key(order[k + 1]) - key(order[k - 1])) / range;
    };
    accumulate([&](std::size_t i) { return front[i].f1; });
    accumulate([&](std::size_t i) { return front[i].f2; });
    return dist;
}

RankedObjectives rank_and_crowd(std::span<const ObjectiveVector> points) {
    RankedObjectives out;
    out.rank.assign(points.size(), 0);
    out.crowding.assign(points.size(), 0.0);
    const auto fronts = fast_nondominated_sort(points);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<ObjectiveVector> members;
        members.reserve(fronts[f].size());
        for (std::size_t i : fronts[f]) members.push_back(points[i]);
        const std::vector<double> dist = crowding_distance(members);
        for (std::size_t k = 0; k < fronts[f].size(); ++k) {
            out.rank[fronts[f][k]] = f;
            out.crowding[fronts[f][k]] = dist[k];
        }
    }
    return out;
}

std::vector<std::size_t> select_survivors(std::span<const ObjectiveVector> combined,
                                          std::size_t np) {
    if (combined.size() < np)
        throw UsageError("select_survivors: fewer candidates than survivors requested");
    const auto fronts = fast_nondominated_sort(combined);
    const RankedObjectives ranked = rank_and_crowd(combined);

    std::vector<std::size_t> chosen;
    chosen.reserve(np);
    for (const auto& front : fronts) {
        if (chosen.size() + front.size() <= np) {
            chosen.insert(chosen.end(), front.begin(), front.end());
            if (chosen.size() == np) break;
            continue;
        }
        std::vector<std::size_t> order = front;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (ranked.crowding[a] != ranked.crowding[b])
                return ranked.crowding[a] > ranked.crowding[b];
            return a < b;
        });
        order.resize(np - chosen.size());
        chosen.insert(chosen.end(), order.begin(), order.end());
        break;
    }
    return chosen;
}

meta::WolfHierarchy moo_leaders(std::span<const ObjectiveVector> points) {
    if (points.size() < 4)
        throw UsageError("moo_leaders: need at least 4 individuals, have " +
                         std::to_string(points.size()));
    const RankedObjectives ranked = rank_and_crowd(points);
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ranked.rank[a] != ranked.rank[b]) return ranked.rank[a] < ranked.rank[b];
        if (ranked.crowding[a] != ranked.crowding[b])
            return ranked.crowding[a] > ranked.crowding[b];
        return a < b;
    });
    meta::WolfHierarchy h;
    h.alpha = order[0];
    h.beta = order[1];
    h.delta = order[2];
    h.omegas.assign(order.begin() + 3, order.end());
    std::sort(h.omegas.begin(), h.omegas.end());
    return h;
}

namespace {

struct MooPopulation {
    meta::Population pop;            // fitness slot holds f1 = -accuracy
    std::vector<double> regularizers;
    std::vector<double> ces;

    std::vector<ObjectiveVector> objectives() const {
        std::vector<ObjectiveVector> out(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i)
            out[i] = {*pop[i].fitness, regularizers[i]};
        return out;
    }
};

void evaluate_member(MooPopulation& mp, std::size_t i, const hybrid::FitnessFn& fitness,
                     hybrid::TrainLog& log, std::size_t generation, hybrid::Phase phase) {
    meta::Individual& ind = mp.pop[i];
    const hybrid::DataEval ev = fitness(ind.position);
    if (!std::isfinite(ev.ce))
        throw NumericError(std::string("non-finite fitness during ") + phase_name(phase) +
                           " phase");
    ind.fitness = -ev.accuracy;
    ind.accuracy = ev.accuracy;
    mp.ces[i] = ev.ce;
    mp.regularizers[i] = nn::l2_regularizer(ind.position);
    log.append(generation, phase, *ind.fitness, ev.accuracy);
}

// worst-to-best omega ordering under the (rank, crowding, index) key
std::vector<std::size_t> omegas_worst_to_best(const meta::WolfHierarchy& hier,
                                              std::span<const ObjectiveVector> points) {
    const RankedObjectives ranked = rank_and_crowd(points);
    std::vector<std::size_t> order(hier.omegas.begin(), hier.omegas.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ranked.rank[a] != ranked.rank[b]) return ranked.rank[a] > ranked.rank[b];
        if (ranked.crowding[a] != ranked.crowding[b])
            return ranked.crowding[a] < ranked.crowding[b];
        return a < b;
    });
    return order;
}

}  // namespace

MooResult gmw_sgd_moo_train(const hybrid::GmwConfig& cfg, const nn::NetworkSpec& spec,
                            const data::Dataset& train, const data::Dataset& test) {
    cfg.validate();
    spec.validate();
    if (train.n == 0 || test.n == 0) throw UsageError("gmw_sgd_moo_train: empty dataset");

    RngStream rng = RngStream(cfg.seed).substream(1);
    hybrid::FitnessFn fitness(spec, train, cfg.eval_batch,
                              RngStream(cfg.seed).substream(2).seed());

    MooResult out;
    hybrid::TrainLog& log = out.log;

    MooPopulation mp;
    mp.pop.resize(cfg.np);
    mp.regularizers.assign(cfg.np, 0.0);
    mp.ces.assign(cfg.np, 0.0);
    const std::size_t dim = nn::param_count(spec);
    for (auto& ind : mp.pop) {
        ind.position.resize(dim);
        for (double& g : ind.position) g = rng.uniform(cfg.init_lo, cfg.init_hi);
    }
    for (std::size_t i = 0; i < cfg.np; ++i)
        evaluate_member(mp, i, fitness, log, 0, hybrid::Phase::init);

    meta::GaEventState ga = cfg.ga;
    hybrid::SgdState sgd{cfg.lr0};
    const std::size_t total_steps = std::max<std::size_t>(1, cfg.n_gen * cfg.n_evol);
    const meta::GwoSchedule schedule{cfg.a_start, cfg.a_end, total_steps};
    const std::size_t budget = cfg.eval_budget.value_or(cfg.np * cfg.n_gen * cfg.n_evol);

    std::size_t global_step = 0;
    std::size_t gwo_evals = 0;
    bool budget_spent = false;

    for (std::size_t g = 1; g <= cfg.n_gen && !budget_spent; ++g) {
        fitness.resample(g);
        // parents are re-scored on the generation's subset so mu+lambda
        // selection compares like with like
        for (std::size_t i = 0; i < cfg.np; ++i)
            evaluate_member(mp, i, fitness, log, g, hybrid::Phase::select);
        const MooPopulation parents = mp;
        std::size_t ga_events = 0;

        for (std::size_t e = 0; e < cfg.n_evol; ++e) {
            if (gwo_evals + cfg.np > budget) {
                budget_spent = true;
                break;
            }
            meta::WolfHierarchy hier = moo_leaders(mp.objectives());
            const double a = meta::compute_a(global_step, schedule);
            ++global_step;
            meta::gwo_step(mp.pop, hier, a, rng);
            for (std::size_t i = 0; i < cfg.np; ++i)
                evaluate_member(mp, i, fitness, log, g, hybrid::Phase::gwo);
            gwo_evals += cfg.np;

            const auto objs = mp.objectives();
            hier = moo_leaders(objs);
            double best_omega = std::numeric_limits<double>::infinity();
            for (std::size_t w : hier.omegas)
                best_omega = std::min(best_omega, *mp.pop[w].fitness);
            meta::note_omega_fitness(ga, best_omega);

            if (ga.stall_counter >= ga.patience) {
                const auto order = omegas_worst_to_best(hier, objs);
                meta::ga_event_ordered(mp.pop, hier, order, ga, rng);
                ++ga_events;
                for (std::size_t w : hier.omegas)
                    evaluate_member(mp, w, fitness, log, g, hybrid::Phase::ga);
            }
        }
        if (budget_spent) break;

        // CE-driven SGD refinement of the bi-objective leaders
        if (cfg.n_epoch > 0) {
            meta::WolfHierarchy hier = moo_leaders(mp.objectives());
            const std::size_t leaders[3] = {hier.alpha, hier.beta, hier.delta};
            std::uint64_t leader_seeds[3];
            for (auto& s : leader_seeds) s = rng.next_u64();
            for (std::size_t k = 0; k < 3; ++k) {
                meta::Individual& leader = mp.pop[leaders[k]];
                nn::Network net = nn::Network::zeros(spec);
                nn::load(net, leader.position);
                RngStream leader_rng(leader_seeds[k]);
                for (std::size_t e = 0; e < cfg.n_epoch; ++e)
                    hybrid::sgd_epoch(net, train, sgd.lr, cfg.sgd_batch, leader_rng);
                leader.position = nn::flatten(net);
                evaluate_member(mp, leaders[k], fitness, log, g, hybrid::Phase::sgd);
            }
            lr_step(sgd, mp.ces[moo_leaders(mp.objectives()).alpha], cfg);
        }

        // mu+lambda survivor selection over parents and updated population
        MooPopulation combined = parents;
        combined.pop.insert(combined.pop.end(), mp.pop.begin(), mp.pop.end());
        combined.regularizers.insert(combined.regularizers.end(), mp.regularizers.begin(),
                                     mp.regularizers.end());
        combined.ces.insert(combined.ces.end(), mp.ces.begin(), mp.ces.end());
        const auto chosen = select_survivors(combined.objectives(), cfg.np);
        MooPopulation next;
        for (std::size_t i : chosen) {
            next.pop.push_back(combined.pop[i]);
            next.regularizers.push_back(combined.regularizers[i]);
            next.ces.push_back(combined.ces[i]);
        }
        mp = std::move(next);

        log.generations.push_back({g, log.best_fitness_seen, log.best_accuracy_seen, sgd.lr,
                                   ga_events, ga.clamped_genes});
    }

    // final front report
    const auto objs = mp.objectives();
    const auto fronts = fast_nondominated_sort(objs);
    const auto& f0 = fronts.front();
    std::vector<ObjectiveVector> members;
    for (std::size_t i : f0) members.push_back(objs[i]);
    const std::vector<double> crowd = crowding_distance(members);

    for (std::size_t k = 0; k < f0.size(); ++k)
        out.report.front.push_back({-objs[f0[k]].f1, objs[f0[k]].f2});

    std::vector<std::size_t> order(f0.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (crowd[a] != crowd[b]) return crowd[a] > crowd[b];
        return f0[a] < f0[b];
    });
    for (std::size_t k : order) {
        if (out.report.representatives.size() == 6) break;
        const ParetoPoint p{-objs[f0[k]].f1, objs[f0[k]].f2};
        const bool dup = std::any_of(
            out.report.representatives.begin(), out.report.representatives.end(),
            [&](const ParetoPoint& q) {
                return q.accuracy == p.accuracy && q.regularizer == p.regularizer;
            });
        if (!dup) out.report.representatives.push_back(p);
    }

    // the highest-accuracy front member stands in as "the model"
    std::size_t best_i = f0.front();
    for (std::size_t i : f0)
        if (*mp.pop[i].fitness < *mp.pop[best_i].fitness) best_i = i;
    out.best = mp.pop[best_i];

    const hybrid::ModelMetrics metrics = hybrid::evaluate_model(out.best, spec, train, test);
    log.train_accuracy = metrics.train_accuracy;
    log.test_accuracy = metrics.test_accuracy;
    log.test_ce = metrics.test_ce;
    return out;
}

}  // namespace gmw::moo
