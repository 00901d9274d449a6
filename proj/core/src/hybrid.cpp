#include "gmw/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gmw/errors.hpp"

namespace gmw::hybrid {

void GmwConfig::validate() const {
    if (np < 4) throw ValidationError("gmw: np must be at least 4");
    if (n_evol == 0) throw ValidationError("gmw: n_evol must be positive");
    if (!(lr0 > lr_min && lr_min > 0.0))
        throw ValidationError("gmw: need lr0 > lr_min > 0");
    if (!(lr_factor > 0.0 && lr_factor < 1.0))
        throw ValidationError("gmw: lr_factor must lie in (0, 1)");
    if (lr_patience == 0) throw ValidationError("gmw: lr_patience must be positive");
    if (a_start < 0.0 || a_end < 0.0) throw ValidationError("gmw: a range must be non-negative");
    if (init_lo > init_hi) throw ValidationError("gmw: init range is inverted");
    if (eval_batch == 0) throw ValidationError("gmw: eval_batch must be positive");
    if (sgd_batch == 0) throw ValidationError("gmw: sgd_batch must be positive");
    if (ga.patience == 0) throw ValidationError("gmw: ga patience must be positive");
    if (!(ga.p_mut >= 0.0 && ga.p_mut <= 1.0))
        throw ValidationError("gmw: p_mut must lie in [0, 1]");
    if (!(ga.rate_worst >= 0.0 && ga.rate_worst <= 1.0 && ga.rate_best >= 0.0 &&
          ga.rate_best <= 1.0))
        throw ValidationError("gmw: modification rates must lie in [0, 1]");
    if (!(ga.eta_m >= 20.0 && ga.eta_m <= 100.0))
        throw ValidationError("gmw: eta_m must lie in [20, 100]");
    if (!(ga.x_lower < ga.x_upper)) throw ValidationError("gmw: mutation bounds are inverted");
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::init: return "init";
        case Phase::gwo: return "gwo";
        case Phase::slpso: return "slpso";
        case Phase::ga: return "ga";
        case Phase::sgd: return "sgd";
        case Phase::select: return "select";
    }
    return "?";
}

void TrainLog::append(std::size_t generation, Phase phase, double fitness, double acc) {
    if (fitness < best_fitness_seen) best_fitness_seen = fitness;
    if (acc > best_accuracy_seen) best_accuracy_seen = acc;
    records.push_back(
        {records.size() + 1, generation, phase, best_fitness_seen, best_accuracy_seen});
}

std::size_t TrainLog::count(Phase phase) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(),
                      [phase](const EvalRecord& r) { return r.phase == phase; }));
}

DataEval evaluate_on(const nn::Network& net, const data::Dataset& d, std::size_t chunk) {
    if (d.n == 0) throw UsageError("evaluate_on: empty dataset");
    if (chunk == 0) chunk = d.n;
    double ce_sum = 0.0;
    double hit_sum = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < d.n; start += chunk) {
        const std::size_t end = std::min(d.n, start + chunk);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const nn::Batch b = data::gather(d, idx);
        const std::vector<double> logits = nn::forward(net, b);
        const double n = static_cast<double>(b.n);
        ce_sum += nn::ce_loss(logits, b.labels) * n;
        hit_sum += nn::accuracy(logits, b.labels) * n;
    }
    return {ce_sum / static_cast<double>(d.n), hit_sum / static_cast<double>(d.n)};
}

FitnessFn::FitnessFn(const nn::NetworkSpec& spec, const data::Dataset& train,
                     std::size_t eval_batch, std::uint64_t seed)
    : spec_(&spec), train_(&train), eval_batch_(eval_batch), seed_(seed) {
    if (train.n == 0) throw UsageError("fitness: empty training set");
    resample(0);
}

void FitnessFn::resample(std::size_t generation) {
    const std::size_t take = std::min(eval_batch_, train_->n);
    std::vector<std::size_t> idx(train_->n);
    std::iota(idx.begin(), idx.end(), 0);
    RngStream rng = RngStream(seed_).substream(generation);
    for (std::size_t k = 0; k < take; ++k)
        std::swap(idx[k], idx[k + rng.uniform_index(train_->n - k)]);
    idx.resize(take);
    std::sort(idx.begin(), idx.end());

    subset_ = data::Dataset{};
    subset_.shape = train_->shape;
    subset_.class_count = train_->class_count;
    subset_.name = train_->name + "-eval";
    subset_.n = take;
    const std::size_t stride = train_->shape.size();
    subset_.inputs.reserve(take * stride);
    subset_.labels.reserve(take);
    for (std::size_t i : idx) {
        subset_.labels.push_back(train_->labels[i]);
        subset_.inputs.insert(subset_.inputs.end(), train_->inputs.begin() + i * stride,
                              train_->inputs.begin() + (i + 1) * stride);
    }
}

DataEval FitnessFn::operator()(std::span<const double> position) const {
    nn::Network net = nn::Network::zeros(*spec_);
    nn::load(net, position);
    return evaluate_on(net, subset_);
}

meta::Population init_population(const GmwConfig& cfg, const nn::NetworkSpec& spec,
                                 const FitnessFn& fitness, RngStream& rng, TrainLog* log) {
    if (cfg.np < 4) throw UsageError("init_population: np must be at least 4");
    const std::size_t dim = nn::param_count(spec);
    meta::Population pop(cfg.np);
    for (auto& ind : pop) {
        ind.position.resize(dim);
        for (double& g : ind.position) g = rng.uniform(cfg.init_lo, cfg.init_hi);
    }
    for (auto& ind : pop) {
        const DataEval e = fitness(ind.position);
        ind.fitness = e.ce;
        ind.accuracy = e.accuracy;
        if (log) log->append(0, Phase::init, e.ce, e.accuracy);
    }
    return pop;
}

double sgd_epoch(nn::Network& net, const data::Dataset& train, double lr,
                 std::size_t batch_size, RngStream& rng) {
    if (train.n == 0) throw UsageError("sgd_epoch: empty dataset");
    data::BatchPlan plan{batch_size, true, rng.next_u64()};
    double loss_sum = 0.0;
    for (const nn::Batch& b : data::batches(train, plan)) {
        nn::BackwardResult res = nn::backward(net, b);
        loss_sum += res.loss * static_cast<double>(b.n);
        for (std::size_t i = 0; i < net.weights.size(); ++i) {
            for (std::size_t k = 0; k < net.weights[i].size(); ++k)
                net.weights[i][k] -= lr * res.grads.weights[i][k];
            for (std::size_t k = 0; k < net.biases[i].size(); ++k)
                net.biases[i][k] -= lr * res.grads.biases[i][k];
        }
    }
    return loss_sum / static_cast<double>(train.n);
}

void lr_step(SgdState& state, double current_loss, double lr_factor, std::size_t lr_patience,
             double lr_min) {
    if (current_loss < state.best_loss_seen) {
        state.best_loss_seen = current_loss;
        state.plateau_counter = 0;
        return;
    }
    if (++state.plateau_counter >= lr_patience) {
        state.lr = std::max(state.lr * lr_factor, lr_min);
        state.plateau_counter = 0;
    }
}

void lr_step(SgdState& state, double current_loss, const GmwConfig& cfg) {
    lr_step(state, current_loss, cfg.lr_factor, cfg.lr_patience, cfg.lr_min);
}

meta::WolfHierarchy refine_leaders(meta::Population& pop, const meta::WolfHierarchy& hier,
                                   const data::Dataset& train, SgdState& sgd,
                                   const GmwConfig& cfg, const nn::NetworkSpec& spec,
                                   const FitnessFn& fitness, RngStream& rng, TrainLog* log,
                                   std::size_t generation) {
    if (cfg.n_epoch == 0) return hier;
    const std::size_t leaders[3] = {hier.alpha, hier.beta, hier.delta};
    std::uint64_t leader_seeds[3];
    for (auto& s : leader_seeds) s = rng.next_u64();

    for (std::size_t k = 0; k < 3; ++k) {
        meta::Individual& leader = pop[leaders[k]];
        nn::Network net = nn::Network::zeros(spec);
        nn::load(net, leader.position);
        RngStream leader_rng(leader_seeds[k]);
        for (std::size_t e = 0; e < cfg.n_epoch; ++e)
            sgd_epoch(net, train, sgd.lr, cfg.sgd_batch, leader_rng);
        leader.position = nn::flatten(net);
        const DataEval ev = fitness(leader.position);
        leader.fitness = ev.ce;
        leader.accuracy = ev.accuracy;
        if (log) log->append(generation, Phase::sgd, ev.ce, ev.accuracy);
    }
    return meta::update_hierarchy(pop);
}

namespace {

void check_finite(double fitness, Phase phase) {
    if (!std::isfinite(fitness))
        throw NumericError(std::string("non-finite fitness during ") + phase_name(phase) +
                           " phase");
}

}  // namespace

TrainResult gmw_sgd_train(const GmwConfig& cfg, const nn::NetworkSpec& spec,
                          const data::Dataset& train, const data::Dataset& test) {
    cfg.validate();
    spec.validate();
    if (nn::param_count(spec) == 0) throw UsageError("gmw_sgd_train: network has no parameters");
    if (train.n == 0 || test.n == 0) throw UsageError("gmw_sgd_train: empty dataset");

    RngStream rng = RngStream(cfg.seed).substream(1);
    FitnessFn fitness(spec, train, cfg.eval_batch, RngStream(cfg.seed).substream(2).seed());

    TrainResult out;
    TrainLog& log = out.log;
    meta::Population pop = init_population(cfg, spec, fitness, rng, &log);

    meta::Individual best;
    double best_f = std::numeric_limits<double>::infinity();
    auto offer = [&](const meta::Individual& ind) {
        if (ind.fitness && *ind.fitness < best_f) {
            best_f = *ind.fitness;
            best = ind;
        }
    };
    for (const auto& ind : pop) offer(ind);

    meta::GaEventState ga = cfg.ga;
    SgdState sgd{cfg.lr0};
    const std::size_t total_steps = std::max<std::size_t>(1, cfg.n_gen * cfg.n_evol);
    const meta::GwoSchedule schedule{cfg.a_start, cfg.a_end, total_steps};
    const std::size_t budget = cfg.eval_budget.value_or(cfg.np * cfg.n_gen * cfg.n_evol);

    std::size_t global_step = 0;
    std::size_t gwo_evals = 0;
    bool budget_spent = false;

    for (std::size_t g = 1; g <= cfg.n_gen && !budget_spent; ++g) {
        fitness.resample(g);
        std::size_t ga_events = 0;

        for (std::size_t e = 0; e < cfg.n_evol; ++e) {
            if (gwo_evals + cfg.np > budget) {
                budget_spent = true;
                break;
            }
            meta::WolfHierarchy hier = meta::update_hierarchy(pop);
            const double a = meta::compute_a(global_step, schedule);
            ++global_step;
            meta::gwo_step(pop, hier, a, rng);

            // the full population is (re)evaluated on the generation's subset
            for (auto& ind : pop) {
                const DataEval ev = fitness(ind.position);
                check_finite(ev.ce, Phase::gwo);
                ind.fitness = ev.ce;
                ind.accuracy = ev.accuracy;
                log.append(g, Phase::gwo, ev.ce, ev.accuracy);
                offer(ind);
            }
            gwo_evals += cfg.np;

            hier = meta::update_hierarchy(pop);
            double best_omega = std::numeric_limits<double>::infinity();
            for (std::size_t w : hier.omegas) best_omega = std::min(best_omega, *pop[w].fitness);
            meta::note_omega_fitness(ga, best_omega);

            if (ga.stall_counter >= ga.patience) {
                meta::ga_event(pop, hier, ga, rng);
                ++ga_events;
                for (std::size_t w : hier.omegas) {
                    const DataEval ev = fitness(pop[w].position);
                    check_finite(ev.ce, Phase::ga);
                    pop[w].fitness = ev.ce;
                    pop[w].accuracy = ev.accuracy;
                    log.append(g, Phase::ga, ev.ce, ev.accuracy);
                    offer(pop[w]);
                }
            }
        }
        if (budget_spent) break;

        meta::WolfHierarchy hier = meta::update_hierarchy(pop);
        hier = refine_leaders(pop, hier, train, sgd, cfg, spec, fitness, rng, &log, g);
        for (const auto& ind : pop) {
            if (ind.fitness) check_finite(*ind.fitness, Phase::sgd);
            offer(ind);
        }
        lr_step(sgd, *pop[hier.alpha].fitness, cfg);
        log.generations.push_back({g, log.best_fitness_seen, log.best_accuracy_seen, sgd.lr,
                                   ga_events, ga.clamped_genes});
    }

    const ModelMetrics metrics = evaluate_model(best, spec, train, test);
    log.train_accuracy = metrics.train_accuracy;
    log.test_accuracy = metrics.test_accuracy;
    log.test_ce = metrics.test_ce;
    out.best = std::move(best);
    return out;
}

ModelMetrics evaluate_model(const meta::Individual& ind, const nn::NetworkSpec& spec,
                            const data::Dataset& train, const data::Dataset& test) {
    nn::Network net = nn::Network::zeros(spec);
    nn::load(net, ind.position);
    const DataEval tr = evaluate_on(net, train);
    const DataEval te = evaluate_on(net, test);
    return {tr.accuracy, te.accuracy, te.ce};
}

}  // namespace gmw::hybrid
