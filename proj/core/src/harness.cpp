#include "gmw/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gmw/errors.hpp"
#include "gmw/rng.hpp"

namespace gmw::harness {

using nlohmann::json;

const char* algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::sgd: return "sgd";
        case Algorithm::slpso: return "slpso";
        case Algorithm::gmw_sgd: return "gmw-sgd";
        case Algorithm::gmw_sgd_moo: return "gmw-sgd-moo";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "sgd") return Algorithm::sgd;
    if (name == "slpso") return Algorithm::slpso;
    if (name == "gmw-sgd") return Algorithm::gmw_sgd;
    if (name == "gmw-sgd-moo") return Algorithm::gmw_sgd_moo;
    throw ValidationError("run.algorithm: unknown '" + name +
                          "'; permitted: sgd, slpso, gmw-sgd, gmw-sgd-moo");
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- config field access accepting both native JSON types and INI strings

[[noreturn]] void bad_field(const std::string& where, const std::string& what) {
    throw ValidationError(where + ": " + what);
}

double to_double(const json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v.get<std::string>(), &pos);
            if (pos != v.get<std::string>().size()) throw std::invalid_argument("");
            return d;
        } catch (const std::exception&) {
            bad_field(where, "expected a number, got '" + v.get<std::string>() + "'");
        }
    }
    bad_field(where, "expected a number");
}

std::size_t to_size(const json& v, const std::string& where) {
    const double d = to_double(v, where);
    if (d < 0 || d != std::floor(d)) bad_field(where, "expected a non-negative integer");
    return static_cast<std::size_t>(d);
}

std::uint64_t to_u64(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto s = v.get<std::int64_t>();
        if (s < 0) bad_field(where, "expected a non-negative integer");
        return static_cast<std::uint64_t>(s);
    }
    if (v.is_string()) {
        try {
            std::size_t pos = 0;
            const std::uint64_t u = std::stoull(v.get<std::string>(), &pos);
            if (pos != v.get<std::string>().size()) throw std::invalid_argument("");
            return u;
        } catch (const std::exception&) {
            bad_field(where, "expected an integer, got '" + v.get<std::string>() + "'");
        }
    }
    bad_field(where, "expected an integer");
}

std::pair<double, double> to_range(const json& v, const std::string& where) {
    if (v.is_array() && v.size() == 2)
        return {to_double(v[0], where), to_double(v[1], where)};
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto comma = s.find(',');
        if (comma != std::string::npos) {
            return {to_double(json(s.substr(0, comma)), where),
                    to_double(json(s.substr(comma + 1)), where)};
        }
    }
    bad_field(where, "expected a pair 'a,b'");
}

std::vector<int> to_int_list(const json& v, const std::string& where) {
    std::vector<int> out;
    if (v.is_array()) {
        for (const auto& e : v) out.push_back(static_cast<int>(to_double(e, where)));
        return out;
    }
    if (v.is_string()) {
        std::stringstream ss(v.get<std::string>());
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) out.push_back(static_cast<int>(to_double(json(tok), where)));
        return out;
    }
    bad_field(where, "expected a list");
}

class Section {
public:
    Section(const json& root, std::string name) : name_(std::move(name)) {
        if (root.contains(name_)) {
            obj_ = root.at(name_);
            if (!obj_.is_object()) bad_field(name_, "expected a section/object");
        } else {
            obj_ = json::object();
        }
    }

    bool has(const char* key) const {
        mark(key);
        return obj_.contains(key) && !obj_.at(key).is_null();
    }

    double number(const char* key, double dflt) {
        mark(key);
        return has(key) ? to_double(obj_.at(key), where(key)) : dflt;
    }
    std::size_t size(const char* key, std::size_t dflt) {
        mark(key);
        return has(key) ? to_size(obj_.at(key), where(key)) : dflt;
    }
    std::uint64_t u64(const char* key, std::uint64_t dflt) {
        mark(key);
        return has(key) ? to_u64(obj_.at(key), where(key)) : dflt;
    }
    std::string str(const char* key, const std::string& dflt) {
        mark(key);
        if (!has(key)) return dflt;
        const auto& v = obj_.at(key);
        if (!v.is_string()) bad_field(where(key), "expected a string");
        return v.get<std::string>();
    }
    std::pair<double, double> range(const char* key, std::pair<double, double> dflt) {
        mark(key);
        return has(key) ? to_range(obj_.at(key), where(key)) : dflt;
    }
    std::vector<int> int_list(const char* key, std::vector<int> dflt) {
        mark(key);
        return has(key) ? to_int_list(obj_.at(key), where(key)) : dflt;
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
                bad_field(name_ + "." + it.key(), "unknown field");
    }

private:
    std::string where(const char* key) const { return name_ + "." + key; }
    void mark(const char* key) const { seen_.push_back(key); }

    std::string name_;
    json obj_;
    mutable std::vector<std::string> seen_;
};

json ini_to_json(const std::string& text) {
    json root = json::object();
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r\n");
        const auto b = s.find_last_not_of(" \t\r\n");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": key outside any [section]");
        root[section][key] = value;
    }
    return root;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    const json& root = j.contains("config") ? j.at("config") : j;

    RunConfig cfg;

    {
        Section run(root, "run");
        cfg.algorithm = parse_algorithm(run.str("algorithm", "gmw-sgd"));
        cfg.seed = run.u64("seed", 0);
        cfg.out_dir = run.str("out", "runs/out");
        if (run.has("budget")) cfg.eval_budget = run.size("budget", 0);
        run.finish();
    }

    {
        Section ds(root, "dataset");
        cfg.dataset.kind = ds.str("kind", "blobs");
        cfg.dataset.path = ds.str("path", "");
        cfg.dataset.classes = ds.int_list("class_subset", {});
        cfg.dataset.train_limit = ds.size("train_limit", 0);
        cfg.dataset.test_limit = ds.size("test_limit", 0);
        cfg.dataset.samples = ds.size("samples", 3000);
        cfg.dataset.blob_classes = ds.size("classes", 3);
        cfg.dataset.dims = ds.size("dims", 16);
        cfg.dataset.spread = ds.number("spread", 0.8);
        cfg.dataset.test_fraction = ds.number("test_fraction", 0.2);
        cfg.dataset.dataset_seed = ds.u64("seed", 1);
        ds.finish();
    }

    if (root.contains("network")) {
        const json& nw = root.at("network");
        if (nw.is_string()) {
            cfg.network = nw.get<std::string>();
        } else if (nw.is_object()) {
            Section net(root, "network");
            const std::string preset = net.str("preset", "");
            const std::string input = net.str("input", "");
            const std::string layers = net.str("layers", "");
            net.finish();
            if (!preset.empty()) {
                cfg.network = preset;
            } else if (!input.empty() && !layers.empty()) {
                std::string text = "input:" + input;
                std::stringstream ss(layers);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    const auto a = tok.find_first_not_of(" \t");
                    const auto b = tok.find_last_not_of(" \t");
                    if (a != std::string::npos) text += "|" + tok.substr(a, b - a + 1);
                }
                cfg.network = text;
            } else {
                bad_field("network", "give preset, or input plus layers");
            }
        } else {
            bad_field("network", "expected a string or a section");
        }
    }

    {
        Section g(root, "gmw");
        cfg.gmw.np = g.size("np", 15);
        cfg.gmw.n_gen = g.size("ngen", 14);
        cfg.gmw.n_evol = g.size("nevol", 10);
        cfg.gmw.n_epoch = g.size("nepoch", 2);
        cfg.gmw.lr0 = g.number("lr", 0.01);
        cfg.gmw.lr_factor = g.number("lr_factor", 0.1);
        cfg.gmw.lr_patience = g.size("lr_patience", 2);
        cfg.gmw.lr_min = g.number("lr_min", 1e-5);
        std::tie(cfg.gmw.a_start, cfg.gmw.a_end) = g.range("a", {1.0, 0.0});
        cfg.gmw.ga.patience = g.size("patience", 4);
        cfg.gmw.ga.p_mut = g.number("pmut", 0.7);
        cfg.gmw.ga.eta_m = g.number("eta_m", 20.0);
        std::tie(cfg.gmw.ga.rate_worst, cfg.gmw.ga.rate_best) = g.range("rate", {0.6, 0.1});
        std::tie(cfg.gmw.ga.x_lower, cfg.gmw.ga.x_upper) = g.range("bounds", {-1.0, 1.0});
        std::tie(cfg.gmw.init_lo, cfg.gmw.init_hi) = g.range("init", {-0.1, 0.1});
        cfg.gmw.eval_batch = g.size("eval_batch", 1024);
        cfg.gmw.sgd_batch = g.size("sgd_batch", 32);
        g.finish();
    }

    {
        Section s(root, "slpso");
        cfg.slpso.np = s.size("np", 60);
        cfg.slpso.n_evol = s.size("nevol", 36);
        cfg.slpso.alpha = s.number("alpha", 0.5);
        cfg.slpso.beta = s.number("beta", 0.0001);
        std::tie(cfg.slpso.pos_lo, cfg.slpso.pos_hi) = s.range("position", {-0.1, 0.1});
        std::tie(cfg.slpso.vel_lo, cfg.slpso.vel_hi) = s.range("velocity", {-0.01, 0.01});
        cfg.slpso.eval_batch = s.size("eval_batch", 1024);
        s.finish();
    }

    {
        Section s(root, "sgd");
        cfg.sgd.lr = s.number("lr", 0.01);
        cfg.sgd.lr_factor = s.number("lr_factor", 0.1);
        cfg.sgd.lr_patience = s.size("lr_patience", 2);
        cfg.sgd.lr_min = s.number("lr_min", 1e-5);
        cfg.sgd.batch_size = s.size("batch_size", 32);
        cfg.sgd.max_epochs = s.size("max_epochs", 200);
        cfg.sgd.early_stop = s.size("early_stop", 20);
        cfg.sgd.eval_batch = s.size("eval_batch", 1024);
        std::tie(cfg.sgd.init_lo, cfg.sgd.init_hi) = s.range("init", {-0.1, 0.1});
        s.finish();
    }

    for (auto it = root.begin(); it != root.end(); ++it) {
        static const char* known[] = {"run", "dataset", "network", "gmw", "slpso", "sgd"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
                return it.key() == k;
            }) == std::end(known))
            bad_field(it.key(), "unknown section");
    }

    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open config file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw ValidationError(path + ": bad JSON: " + e.what());
        }
        return from_json(j);
    }
    return from_json(ini_to_json(text));
}

json RunConfig::to_json() const {
    json j;
    // out_dir is omitted: it does not affect the run's results, and the echo
    // must reproduce byte-identically wherever the rerun writes
    j["run"] = {{"algorithm", algorithm_name(algorithm)}, {"seed", seed}};
    if (eval_budget) j["run"]["budget"] = *eval_budget;

    json ds{{"kind", dataset.kind},
            {"seed", dataset.dataset_seed}};
    if (dataset.kind == "cifar10") {
        ds["path"] = dataset.path;
        if (!dataset.classes.empty()) ds["class_subset"] = dataset.classes;
        if (dataset.train_limit) ds["train_limit"] = dataset.train_limit;
        if (dataset.test_limit) ds["test_limit"] = dataset.test_limit;
    } else {
        ds["samples"] = dataset.samples;
        ds["classes"] = dataset.blob_classes;
        ds["dims"] = dataset.dims;
        ds["spread"] = dataset.spread;
        ds["test_fraction"] = dataset.test_fraction;
    }
    j["dataset"] = ds;

    j["network"] = resolved_network().to_string();

    j["gmw"] = {{"np", gmw.np},
                {"ngen", gmw.n_gen},
                {"nevol", gmw.n_evol},
                {"nepoch", gmw.n_epoch},
                {"lr", gmw.lr0},
                {"lr_factor", gmw.lr_factor},
                {"lr_patience", gmw.lr_patience},
                {"lr_min", gmw.lr_min},
                {"a", {gmw.a_start, gmw.a_end}},
                {"patience", gmw.ga.patience},
                {"pmut", gmw.ga.p_mut},
                {"eta_m", gmw.ga.eta_m},
                {"rate", {gmw.ga.rate_worst, gmw.ga.rate_best}},
                {"bounds", {gmw.ga.x_lower, gmw.ga.x_upper}},
                {"init", {gmw.init_lo, gmw.init_hi}},
                {"eval_batch", gmw.eval_batch},
                {"sgd_batch", gmw.sgd_batch}};

    j["slpso"] = {{"np", slpso.np},
                  {"nevol", slpso.n_evol},
                  {"alpha", slpso.alpha},
                  {"beta", slpso.beta},
                  {"position", {slpso.pos_lo, slpso.pos_hi}},
                  {"velocity", {slpso.vel_lo, slpso.vel_hi}},
                  {"eval_batch", slpso.eval_batch}};

    j["sgd"] = {{"lr", sgd.lr},
                {"lr_factor", sgd.lr_factor},
                {"lr_patience", sgd.lr_patience},
                {"lr_min", sgd.lr_min},
                {"batch_size", sgd.batch_size},
                {"max_epochs", sgd.max_epochs},
                {"early_stop", sgd.early_stop},
                {"eval_batch", sgd.eval_batch},
                {"init", {sgd.init_lo, sgd.init_hi}}};

    return j;
}

nn::NetworkSpec RunConfig::resolved_network() const {
    const nn::Shape data_shape = dataset.kind == "cifar10"
                                     ? nn::Shape{3, 32, 32}
                                     : nn::Shape{dataset.dims, 1, 1};
    const std::size_t classes = dataset.kind == "cifar10"
                                    ? (dataset.classes.empty() ? 10 : dataset.classes.size())
                                    : dataset.blob_classes;

    auto build_mlp = [&](const std::vector<std::size_t>& hidden) {
        nn::NetworkSpec s;
        s.input = data_shape;
        std::size_t cur = data_shape.size();
        if (!data_shape.is_flat()) s.layers.push_back(nn::flatten_layer());
        for (std::size_t h : hidden) {
            s.layers.push_back(nn::dense(cur, h));
            s.layers.push_back(nn::relu());
            cur = h;
        }
        s.layers.push_back(nn::dense(cur, classes));
        s.validate();
        return s;
    };

    auto build_default_cnn = [&]() {
        nn::NetworkSpec s = nn::default_cnn_spec();
        s.layers.back().out = classes;  // class subsets shrink the output layer
        s.validate();
        return s;
    };

    try {
        if (network.empty())
            return dataset.kind == "cifar10" ? build_default_cnn() : build_mlp({64});
        if (network == "default_cnn") return build_default_cnn();
        if (network.rfind("mlp:", 0) == 0) {
            std::vector<std::size_t> hidden;
            std::stringstream ss(network.substr(4));
            std::string tok;
            while (std::getline(ss, tok, ','))
                hidden.push_back(to_size(json(tok), "network"));
            return build_mlp(hidden);
        }
        return nn::NetworkSpec::parse(network);
    } catch (const DimensionError& e) {
        throw ValidationError(std::string("network: ") + e.what());
    }
}

void RunConfig::validate() const {
    if (dataset.kind != "blobs" && dataset.kind != "cifar10")
        throw ValidationError("dataset.kind: unknown '" + dataset.kind +
                              "'; permitted: blobs, cifar10");
    if (dataset.kind == "cifar10") {
        if (dataset.path.empty()) throw ValidationError("dataset.path: required for cifar10");
        if (!dataset.classes.empty()) {
            if (dataset.classes.size() < 2)
                throw ValidationError("dataset.class_subset: need at least 2 classes");
            for (int c : dataset.classes)
                if (c < 0 || c > 9)
                    throw ValidationError("dataset.class_subset: class " + std::to_string(c) +
                                          " outside [0, 9]");
        }
    } else {
        if (dataset.blob_classes < 2) throw ValidationError("dataset.classes: need at least 2");
        if (dataset.samples < dataset.blob_classes)
            throw ValidationError("dataset.samples: need at least one sample per class");
        if (dataset.dims == 0) throw ValidationError("dataset.dims: must be positive");
        if (dataset.spread < 0.0) throw ValidationError("dataset.spread: must be non-negative");
        if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0))
            throw ValidationError("dataset.test_fraction: must lie strictly between 0 and 1");
    }

    const nn::NetworkSpec spec = resolved_network();
    const nn::Shape data_shape = dataset.kind == "cifar10"
                                     ? nn::Shape{3, 32, 32}
                                     : nn::Shape{dataset.dims, 1, 1};
    const std::size_t classes = dataset.kind == "cifar10"
                                    ? (dataset.classes.empty() ? 10 : dataset.classes.size())
                                    : dataset.blob_classes;
    if (spec.input != data_shape)
        throw ValidationError("network: input " + spec.input.to_string() +
                              " does not match dataset shape " + data_shape.to_string());
    if (spec.class_count() != classes)
        throw ValidationError("network: final layer scores " +
                              std::to_string(spec.class_count()) + " classes, dataset has " +
                              std::to_string(classes));

    gmw.validate();

    if (slpso.np < 2) throw ValidationError("slpso.np: need at least 2 particles");
    if (slpso.n_evol == 0) throw ValidationError("slpso.nevol: must be positive");
    if (!(slpso.pos_lo < slpso.pos_hi)) throw ValidationError("slpso.position: inverted range");
    if (!(slpso.vel_lo < slpso.vel_hi)) throw ValidationError("slpso.velocity: inverted range");
    if (slpso.eval_batch == 0) throw ValidationError("slpso.eval_batch: must be positive");

    if (!(sgd.lr > sgd.lr_min && sgd.lr_min > 0.0))
        throw ValidationError("sgd.lr: need lr > lr_min > 0");
    if (!(sgd.lr_factor > 0.0 && sgd.lr_factor < 1.0))
        throw ValidationError("sgd.lr_factor: must lie in (0, 1)");
    if (sgd.batch_size == 0) throw ValidationError("sgd.batch_size: must be positive");
    if (sgd.max_epochs == 0) throw ValidationError("sgd.max_epochs: must be positive");
    if (sgd.early_stop == 0) throw ValidationError("sgd.early_stop: must be positive");
    if (sgd.eval_batch == 0) throw ValidationError("sgd.eval_batch: must be positive");
    if (sgd.init_lo > sgd.init_hi) throw ValidationError("sgd.init: inverted range");
    if (eval_budget && *eval_budget == 0)
        throw ValidationError("run.budget: must be positive when given");
}

std::pair<data::Dataset, data::Dataset> load_dataset(const DatasetConfig& cfg) {
    if (cfg.kind == "cifar10") {
        auto [train, test] = data::load_cifar10(cfg.path);
        if (!cfg.classes.empty()) {
            train = data::select_classes(train, cfg.classes);
            test = data::select_classes(test, cfg.classes);
        }
        if (cfg.train_limit > 0 && cfg.train_limit < train.n) {
            const double frac = static_cast<double>(cfg.train_limit) /
                                static_cast<double>(train.n);
            train = data::split(train, frac, cfg.dataset_seed).first;
        }
        if (cfg.test_limit > 0 && cfg.test_limit < test.n) {
            const double frac = static_cast<double>(cfg.test_limit) /
                                static_cast<double>(test.n);
            test = data::split(test, frac, cfg.dataset_seed + 1).first;
        }
        return {std::move(train), std::move(test)};
    }
    data::Dataset all = data::make_blobs(cfg.samples, cfg.blob_classes, cfg.dims, cfg.spread,
                                         cfg.dataset_seed);
    return data::split(all, 1.0 - cfg.test_fraction, cfg.dataset_seed);
}

namespace {

struct AlgoOutcome {
    hybrid::TrainLog log;
    meta::Individual best;
    std::optional<moo::ParetoReport> pareto;
};

AlgoOutcome run_slpso_training(const RunConfig& cfg, const nn::NetworkSpec& spec,
                               const data::Dataset& train, const data::Dataset& test) {
    const SlpsoRunConfig& sc = cfg.slpso;
    RngStream rng = RngStream(cfg.seed).substream(1);
    hybrid::FitnessFn fitness(spec, train, sc.eval_batch,
                              RngStream(cfg.seed).substream(2).seed());

    AlgoOutcome out;
    hybrid::TrainLog& log = out.log;
    const std::size_t dim = nn::param_count(spec);

    meta::SlpsoConfig mc;
    mc.np = sc.np;
    mc.alpha = sc.alpha;
    mc.beta = sc.beta;
    mc.pos_lo = sc.pos_lo;
    mc.pos_hi = sc.pos_hi;
    mc.vel_lo = sc.vel_lo;
    mc.vel_hi = sc.vel_hi;
    meta::SlpsoState state = meta::SlpsoState::init(mc, dim);

    meta::Population pop(sc.np);
    double best_f = std::numeric_limits<double>::infinity();
    auto offer = [&](const meta::Individual& ind) {
        if (*ind.fitness < best_f) {
            best_f = *ind.fitness;
            out.best = ind;
        }
    };
    for (auto& ind : pop) {
        ind.position.resize(dim);
        for (double& g : ind.position) g = rng.uniform(sc.pos_lo, sc.pos_hi);
        const hybrid::DataEval ev = fitness(ind.position);
        ind.fitness = ev.ce;
        ind.accuracy = ev.accuracy;
        log.append(0, hybrid::Phase::init, ev.ce, ev.accuracy);
        offer(ind);
    }

    const std::size_t budget = cfg.eval_budget.value_or(sc.np * sc.n_evol);
    std::size_t evals = 0;
    for (std::size_t t = 0; t < sc.n_evol; ++t) {
        if (evals + sc.np > budget) break;
        meta::slpso_step(pop, state, rng);
        for (auto& ind : pop) {
            const hybrid::DataEval ev = fitness(ind.position);
            if (!std::isfinite(ev.ce)) throw NumericError("non-finite fitness during slpso phase");
            ind.fitness = ev.ce;
            ind.accuracy = ev.accuracy;
            log.append(t + 1, hybrid::Phase::slpso, ev.ce, ev.accuracy);
            offer(ind);
        }
        evals += sc.np;
    }

    const hybrid::ModelMetrics m = hybrid::evaluate_model(out.best, spec, train, test);
    log.train_accuracy = m.train_accuracy;
    log.test_accuracy = m.test_accuracy;
    log.test_ce = m.test_ce;
    return out;
}

AlgoOutcome run_sgd_training(const RunConfig& cfg, const nn::NetworkSpec& spec,
                             const data::Dataset& train, const data::Dataset& test) {
    const SgdRunConfig& sc = cfg.sgd;
    RngStream rng = RngStream(cfg.seed).substream(1);
    hybrid::FitnessFn fitness(spec, train, sc.eval_batch,
                              RngStream(cfg.seed).substream(2).seed());

    AlgoOutcome out;
    hybrid::TrainLog& log = out.log;
    const std::size_t dim = nn::param_count(spec);

    nn::Network net = nn::Network::zeros(spec);
    {
        nn::ParamVector init(dim);
        for (double& g : init) g = rng.uniform(sc.init_lo, sc.init_hi);
        nn::load(net, init);
    }

    double best_ce = std::numeric_limits<double>::infinity();
    auto offer = [&](const nn::ParamVector& p, const hybrid::DataEval& ev) {
        if (ev.ce < best_ce) {
            best_ce = ev.ce;
            out.best.position = p;
            out.best.fitness = ev.ce;
            out.best.accuracy = ev.accuracy;
        }
    };

    {
        const nn::ParamVector p = nn::flatten(net);
        const hybrid::DataEval ev = fitness(p);
        log.append(0, hybrid::Phase::init, ev.ce, ev.accuracy);
        offer(p, ev);
    }

    hybrid::SgdState state{sc.lr};
    const std::size_t max_epochs = std::min<std::size_t>(
        sc.max_epochs, cfg.eval_budget.value_or(sc.max_epochs));
    double best_acc = -1.0;
    std::size_t stall = 0;
    for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
        const double mean_loss = hybrid::sgd_epoch(net, train, state.lr, sc.batch_size, rng);
        if (!std::isfinite(mean_loss)) throw NumericError("non-finite loss during sgd phase");
        const nn::ParamVector p = nn::flatten(net);
        const hybrid::DataEval ev = fitness(p);
        log.append(epoch, hybrid::Phase::sgd, ev.ce, ev.accuracy);
        offer(p, ev);

        if (ev.accuracy > best_acc) {
            best_acc = ev.accuracy;
            stall = 0;
        } else if (++stall >= sc.early_stop) {
            break;
        }
        hybrid::lr_step(state, mean_loss, sc.lr_factor, sc.lr_patience, sc.lr_min);
    }

    const hybrid::ModelMetrics m = hybrid::evaluate_model(out.best, spec, train, test);
    log.train_accuracy = m.train_accuracy;
    log.test_accuracy = m.test_accuracy;
    log.test_ce = m.test_ce;
    return out;
}

json log_to_json(const hybrid::TrainLog& log) {
    json trace;
    auto& idx = trace["eval_index"] = json::array();
    auto& gen = trace["generation"] = json::array();
    auto& phase = trace["phase"] = json::array();
    auto& acc = trace["best_train_accuracy"] = json::array();
    auto& fit = trace["best_fitness"] = json::array();
    for (const auto& r : log.records) {
        idx.push_back(r.eval_index);
        gen.push_back(r.generation);
        phase.push_back(hybrid::phase_name(r.phase));
        acc.push_back(r.best_accuracy);
        fit.push_back(r.best_fitness);
    }
    return trace;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    auto [train, test] = load_dataset(cfg.dataset);
    const nn::NetworkSpec spec = cfg.resolved_network();
    if (train.shape != spec.input || train.class_count != spec.class_count())
        throw ValidationError("network does not match the loaded dataset");

    AlgoOutcome outcome;
    switch (cfg.algorithm) {
        case Algorithm::gmw_sgd: {
            hybrid::GmwConfig g = cfg.gmw;
            g.seed = cfg.seed;
            g.eval_budget = cfg.eval_budget;
            hybrid::TrainResult res = hybrid::gmw_sgd_train(g, spec, train, test);
            outcome.log = std::move(res.log);
            outcome.best = std::move(res.best);
            break;
        }
        case Algorithm::gmw_sgd_moo: {
            hybrid::GmwConfig g = cfg.gmw;
            g.seed = cfg.seed;
            g.eval_budget = cfg.eval_budget;
            moo::MooResult res = moo::gmw_sgd_moo_train(g, spec, train, test);
            outcome.log = std::move(res.log);
            outcome.best = std::move(res.best);
            outcome.pareto = std::move(res.report);
            break;
        }
        case Algorithm::slpso:
            outcome = run_slpso_training(cfg, spec, train, test);
            break;
        case Algorithm::sgd:
            outcome = run_sgd_training(cfg, spec, train, test);
            break;
    }

    const auto t1 = std::chrono::steady_clock::now();

    RunResult result;
    result.wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0).count();

    json& doc = result.doc;
    doc["algorithm"] = algorithm_name(cfg.algorithm);
    doc["seed"] = cfg.seed;
    doc["config"] = cfg.to_json();
    doc["result"] = {{"train_accuracy", outcome.log.train_accuracy},
                     {"test_accuracy", outcome.log.test_accuracy},
                     {"test_ce", outcome.log.test_ce}};

    json counts;
    std::size_t total = 0;
    for (hybrid::Phase p : {hybrid::Phase::init, hybrid::Phase::gwo, hybrid::Phase::slpso,
                            hybrid::Phase::ga, hybrid::Phase::sgd, hybrid::Phase::select}) {
        const std::size_t c = outcome.log.count(p);
        if (c > 0) counts[hybrid::phase_name(p)] = c;
        total += c;
    }
    counts["total"] = total;
    doc["evaluations"] = counts;

    doc["trace"] = log_to_json(outcome.log);

    if (!outcome.log.generations.empty()) {
        json gens = json::array();
        for (const auto& g : outcome.log.generations)
            gens.push_back({{"generation", g.generation},
                            {"best_fitness", g.best_fitness},
                            {"best_train_accuracy", g.best_accuracy},
                            {"lr", g.lr},
                            {"ga_events", g.ga_events},
                            {"clamped_genes", g.clamped_genes}});
        doc["generations"] = gens;
    }

    if (outcome.pareto) {
        json reps = json::array();
        for (const auto& p : outcome.pareto->representatives)
            reps.push_back({{"accuracy", p.accuracy}, {"regularizer", p.regularizer}});
        json front = json::array();
        for (const auto& p : outcome.pareto->front)
            front.push_back({{"accuracy", p.accuracy}, {"regularizer", p.regularizer}});
        doc["pareto"] = {{"representatives", reps}, {"front", front}};
    }

    return result;
}

std::string trace_csv(const json& result) {
    if (!result.contains("trace")) throw UsageError("result document has no trace");
    const json& t = result.at("trace");
    const auto& idx = t.at("eval_index");
    const auto& acc = t.at("best_train_accuracy");
    const auto& fit = t.at("best_fitness");
    if (idx.empty()) throw UsageError("trace is empty");
    std::string out = "eval_index,best_train_accuracy,best_fitness\n";
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out += std::to_string(idx[i].get<std::size_t>());
        out += ",";
        out += fmt17(acc[i].get<double>());
        out += ",";
        out += fmt17(fit[i].get<double>());
        out += "\n";
    }
    return out;
}

namespace {

std::string pareto_csv(const json& points) {
    std::string out = "accuracy,regularizer\n";
    for (const auto& p : points) {
        out += fmt17(p.at("accuracy").get<double>() * 100.0);  // percent
        out += ",";
        out += fmt17(p.at("regularizer").get<double>());
        out += "\n";
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestionError("cannot write " + path.string());
    f << text;
}

}  // namespace

void write_result(const RunResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text(dir / "result.json", result.doc.dump(2) + "\n");
    write_text(dir / "trace.csv", trace_csv(result.doc));
    if (result.doc.contains("pareto")) {
        write_text(dir / "pareto.csv", pareto_csv(result.doc.at("pareto").at("representatives")));
        write_text(dir / "front0.csv", pareto_csv(result.doc.at("pareto").at("front")));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "wall_ms %.3f\n", result.wall_ms);
    write_text(dir / "timing.txt", buf);
}

Comparison compare(const std::vector<json>& results) {
    if (results.empty()) throw UsageError("compare: need at least one result");
    struct Row {
        std::string name;
        double train, test, ce;
        int order;
    };
    auto canonical = [](const std::string& name) {
        if (name == "sgd") return 0;
        if (name == "slpso") return 1;
        if (name == "gmw-sgd") return 2;
        if (name == "gmw-sgd-moo") return 3;
        return 4;
    };
    std::vector<Row> rows;
    for (const json& r : results) {
        Row row;
        row.name = r.at("algorithm").get<std::string>();
        row.train = r.at("result").at("train_accuracy").get<double>();
        row.test = r.at("result").at("test_accuracy").get<double>();
        row.ce = r.at("result").at("test_ce").get<double>();
        row.order = canonical(row.name);
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.order < b.order; });

    char line[160];
    std::string table;
    std::snprintf(line, sizeof line, "%-12s  %-14s  %-13s  %-8s\n", "Algorithm",
                  "Train Accuracy", "Test Accuracy", "CE");
    table += line;
    table += std::string(12 + 2 + 14 + 2 + 13 + 2 + 8, '-') + "\n";
    std::string csv = "algorithm,train_accuracy,test_accuracy,test_ce\n";
    for (const Row& r : rows) {
        std::snprintf(line, sizeof line, "%-12s  %13.2f%%  %12.2f%%  %8.4f\n", r.name.c_str(),
                      r.train * 100.0, r.test * 100.0, r.ce);
        table += line;
        csv += r.name + "," + fmt17(r.train) + "," + fmt17(r.test) + "," + fmt17(r.ce) + "\n";
    }
    return {table, csv};
}

}  // namespace gmw::harness
