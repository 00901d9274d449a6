// gmw: experiment harness for the hybrid wolf/SGD trainer and its baselines.
//
// Subcommands:
//   train         run one configured experiment, write result.json + trace.csv
//   compare       build a comparison table from result.json files
//   export-trace  re-emit the convergence trace CSV from a result.json

#include <CLI11.hpp>

#include <array>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "gmw/errors.hpp"
#include "gmw/harness.hpp"

namespace {

int error_code(const std::exception& e) {
    if (dynamic_cast<const gmw::UsageError*>(&e)) return 2;
    if (dynamic_cast<const gmw::ValidationError*>(&e)) return 2;
    if (dynamic_cast<const gmw::IngestionError*>(&e)) return 3;
    if (dynamic_cast<const gmw::NumericError*>(&e)) return 4;
    if (dynamic_cast<const gmw::DimensionError*>(&e)) return 5;
    return 1;
}

const char* error_category(const std::exception& e) {
    if (dynamic_cast<const gmw::UsageError*>(&e)) return "usage";
    if (dynamic_cast<const gmw::ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const gmw::IngestionError*>(&e)) return "ingestion";
    if (dynamic_cast<const gmw::NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const gmw::DimensionError*>(&e)) return "dimension";
    return "error";
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw gmw::IngestionError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw gmw::IngestionError(path + ": bad JSON: " + e.what());
    }
    return j;
}

struct TrainFlags {
    std::string config;
    std::string algorithm;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> np, ngen, nevol, nepoch, patience;
    std::optional<double> lr, pmut, eta_m;
    std::string cifar;
    std::string classes;
    std::string network;
    std::size_t repeat = 1;
};

int cmd_train(const TrainFlags& flags) {
    gmw::harness::RunConfig cfg;
    if (!flags.config.empty()) cfg = gmw::harness::RunConfig::from_file(flags.config);

    if (!flags.algorithm.empty()) cfg.algorithm = gmw::harness::parse_algorithm(flags.algorithm);
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (flags.budget) cfg.eval_budget = *flags.budget;
    if (!flags.cifar.empty()) {
        cfg.dataset.kind = "cifar10";
        cfg.dataset.path = flags.cifar;
    }
    if (!flags.classes.empty()) {
        cfg.dataset.classes.clear();
        std::stringstream ss(flags.classes);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) cfg.dataset.classes.push_back(std::stoi(tok));
    }
    if (!flags.network.empty()) cfg.network = flags.network;

    // per-parameter overrides apply to the selected algorithm
    if (flags.np) {
        if (cfg.algorithm == gmw::harness::Algorithm::slpso) cfg.slpso.np = *flags.np;
        else cfg.gmw.np = *flags.np;
    }
    if (flags.nevol) {
        if (cfg.algorithm == gmw::harness::Algorithm::slpso) cfg.slpso.n_evol = *flags.nevol;
        else cfg.gmw.n_evol = *flags.nevol;
    }
    if (flags.ngen) cfg.gmw.n_gen = *flags.ngen;
    if (flags.nepoch) cfg.gmw.n_epoch = *flags.nepoch;
    if (flags.lr) {
        if (cfg.algorithm == gmw::harness::Algorithm::sgd) cfg.sgd.lr = *flags.lr;
        else cfg.gmw.lr0 = *flags.lr;
    }
    if (flags.pmut) cfg.gmw.ga.p_mut = *flags.pmut;
    if (flags.patience) cfg.gmw.ga.patience = *flags.patience;
    if (flags.eta_m) cfg.gmw.ga.eta_m = *flags.eta_m;

    if (flags.repeat == 0) throw gmw::UsageError("--repeat must be positive");
    const std::string base_out = cfg.out_dir;
    std::vector<double> train, test, ce;
    for (std::size_t k = 0; k < flags.repeat; ++k) {
        gmw::harness::RunConfig run_cfg = cfg;
        run_cfg.seed = cfg.seed + k;
        run_cfg.out_dir = flags.repeat == 1
                              ? base_out
                              : base_out + "/seed-" + std::to_string(run_cfg.seed);
        const gmw::harness::RunResult result = gmw::harness::run(run_cfg);
        gmw::harness::write_result(result, run_cfg.out_dir);

        const auto& r = result.doc.at("result");
        train.push_back(r.at("train_accuracy").get<double>());
        test.push_back(r.at("test_accuracy").get<double>());
        ce.push_back(r.at("test_ce").get<double>());
        std::printf("%s  seed %llu\n", result.doc.at("algorithm").get<std::string>().c_str(),
                    static_cast<unsigned long long>(run_cfg.seed));
        std::printf("  train accuracy  %.4f\n", train.back());
        std::printf("  test accuracy   %.4f\n", test.back());
        std::printf("  test ce         %.4f\n", ce.back());
        std::printf("  evaluations     %zu\n",
                    result.doc.at("evaluations").at("total").get<std::size_t>());
        std::printf("  wall            %.1f ms\n", result.wall_ms);
        std::printf("  wrote %s/result.json\n", run_cfg.out_dir.c_str());
    }

    if (flags.repeat > 1) {
        auto stats = [](const std::vector<double>& v) {
            double lo = v[0], hi = v[0], sum = 0.0;
            for (double x : v) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
                sum += x;
            }
            return std::array<double, 3>{sum / static_cast<double>(v.size()), lo, hi};
        };
        const auto ta = stats(train), te = stats(test), tc = stats(ce);
        std::printf("aggregate over %zu seeds (mean / min / max)\n", flags.repeat);
        std::printf("  train accuracy  %.4f / %.4f / %.4f\n", ta[0], ta[1], ta[2]);
        std::printf("  test accuracy   %.4f / %.4f / %.4f\n", te[0], te[1], te[2]);
        std::printf("  test ce         %.4f / %.4f / %.4f\n", tc[0], tc[1], tc[2]);
        std::ofstream agg(base_out + "/aggregate.csv");
        if (!agg) throw gmw::IngestionError("cannot write " + base_out + "/aggregate.csv");
        char buf[160];
        agg << "metric,mean,min,max\n";
        std::snprintf(buf, sizeof buf, "train_accuracy,%.17g,%.17g,%.17g\n", ta[0], ta[1], ta[2]);
        agg << buf;
        std::snprintf(buf, sizeof buf, "test_accuracy,%.17g,%.17g,%.17g\n", te[0], te[1], te[2]);
        agg << buf;
        std::snprintf(buf, sizeof buf, "test_ce,%.17g,%.17g,%.17g\n", tc[0], tc[1], tc[2]);
        agg << buf;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid wolf/SGD neural-network training harness"};
    app.require_subcommand(1);

    TrainFlags tf;
    CLI::App* train = app.add_subcommand("train", "run one configured experiment");
    train->add_option("--config", tf.config, "config file (key = value sections, or JSON)");
    train->add_option("--algorithm", tf.algorithm, "sgd | slpso | gmw-sgd | gmw-sgd-moo");
    train->add_option("--seed", tf.seed, "run seed");
    train->add_option("--out", tf.out, "output directory");
    train->add_option("--budget", tf.budget, "evaluation budget cap");
    train->add_option("--np", tf.np, "population size");
    train->add_option("--ngen", tf.ngen, "generations");
    train->add_option("--nevol", tf.nevol, "optimizer iterations per generation");
    train->add_option("--nepoch", tf.nepoch, "SGD epochs per dominant wolf");
    train->add_option("--lr", tf.lr, "learning rate");
    train->add_option("--pmut", tf.pmut, "mutation/crossover event probability");
    train->add_option("--patience", tf.patience, "stall patience before a genetic event");
    train->add_option("--eta-m", tf.eta_m, "polynomial mutation distribution index");
    train->add_option("--cifar", tf.cifar, "CIFAR-10 binary directory (switches dataset)");
    train->add_option("--classes", tf.classes, "CIFAR class subset, e.g. 0,1,2");
    train->add_option("--network", tf.network, "network spec text or preset");
    train->add_option("--repeat", tf.repeat,
                      "run N consecutive seeds and aggregate mean/min/max");

    std::vector<std::string> result_paths;
    std::string compare_out;
    CLI::App* cmp = app.add_subcommand("compare", "tabulate result.json files");
    cmp->add_option("results", result_paths, "result.json paths")->required();
    cmp->add_option("--out", compare_out, "also write comparison.csv here");

    std::string trace_result, trace_out;
    CLI::App* exp = app.add_subcommand("export-trace", "re-emit trace CSV from a result.json");
    exp->add_option("result", trace_result, "result.json path")->required();
    exp->add_option("--out", trace_out, "output CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(tf);
        if (cmp->parsed()) {
            std::vector<nlohmann::json> docs;
            for (const auto& p : result_paths) docs.push_back(load_json(p));
            const auto c = gmw::harness::compare(docs);
            std::cout << c.table;
            if (!compare_out.empty()) {
                std::ofstream f(compare_out);
                if (!f) throw gmw::IngestionError("cannot write " + compare_out);
                f << c.csv;
                std::cout << "wrote " << compare_out << "\n";
            }
            return 0;
        }
        if (exp->parsed()) {
            const std::string csv = gmw::harness::trace_csv(load_json(trace_result));
            if (trace_out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream f(trace_out);
                if (!f) throw gmw::IngestionError("cannot write " + trace_out);
                f << csv;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error (" << error_category(e) << "): " << e.what() << "\n";
        return error_code(e);
    }
    return 0;
}
