#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmw/dataset.hpp"
#include "gmw/genetic.hpp"
#include "gmw/gwo.hpp"
#include "gmw/network.hpp"
#include "gmw/population.hpp"
#include "gmw/rng.hpp"

namespace gmw::hybrid {

/// Full configuration of the hybrid trainer.
struct GmwConfig {
    std::size_t np = 15;      // population size
    std::size_t n_gen = 14;   // generations
    std::size_t n_evol = 10;  // GWO iterations per generation
    std::size_t n_epoch = 2;  // SGD epochs per dominant wolf per generation

    double lr0 = 0.01;
    double lr_factor = 0.1;
    std::size_t lr_patience = 2;  // generations without improvement before decay
    double lr_min = 1e-5;

    double a_start = 1.0;
    double a_end = 0.0;

    meta::GaEventState ga{};

    double init_lo = -0.1;
    double init_hi = 0.1;

    std::size_t eval_batch = 1024;  // fitness evaluation subset size
    std::size_t sgd_batch = 32;     // SGD minibatch size
    std::uint64_t seed = 0;

    /// Caps the number of GWO-phase fitness evaluations; unset means
    /// np * n_gen * n_evol (the configured total).
    std::optional<std::size_t> eval_budget;

    void validate() const;
};

/// Reduce-on-plateau learning-rate state.
struct SgdState {
    double lr = 0.01;
    std::size_t plateau_counter = 0;
    double best_loss_seen = std::numeric_limits<double>::infinity();
};

enum class Phase { init, gwo, slpso, ga, sgd, select };

const char* phase_name(Phase p);

/// One record per fitness evaluation; best_* carry best-so-far values, so
/// best_fitness is non-increasing and best_accuracy non-decreasing.
struct EvalRecord {
    std::size_t eval_index = 0;  // 1-based, strictly increasing
    std::size_t generation = 0;
    Phase phase = Phase::init;
    double best_fitness = 0.0;
    double best_accuracy = 0.0;
};

struct GenerationSummary {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double best_accuracy = 0.0;
    double lr = 0.0;
    std::size_t ga_events = 0;
    std::size_t clamped_genes = 0;  // cumulative genes clamped before mutation
};

struct TrainLog {
    std::vector<EvalRecord> records;
    std::vector<GenerationSummary> generations;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double test_ce = 0.0;

    double best_fitness_seen = std::numeric_limits<double>::infinity();
    double best_accuracy_seen = 0.0;

    void append(std::size_t generation, Phase phase, double fitness, double acc);
    std::size_t count(Phase phase) const;
};

struct DataEval {
    double ce = 0.0;
    double accuracy = 0.0;
};

/// Mean cross entropy and accuracy of a network over a whole dataset,
/// evaluated in bounded chunks.
DataEval evaluate_on(const nn::Network& net, const data::Dataset& d, std::size_t chunk = 256);

/// Cross entropy + accuracy of a parameter vector on a seed-chosen subset of
/// the training set. The subset is shared by every caller between resample()
/// calls, so within-generation comparisons are fair; evaluation itself is
/// pure and safe to run concurrently.
class FitnessFn {
public:
    FitnessFn(const nn::NetworkSpec& spec, const data::Dataset& train, std::size_t eval_batch,
              std::uint64_t seed);

    /// Picks the evaluation subset for a generation; the same (seed,
    /// generation) pair always selects the same samples.
    void resample(std::size_t generation);

    DataEval operator()(std::span<const double> position) const;

    std::size_t subset_size() const { return subset_.n; }

private:
    const nn::NetworkSpec* spec_;
    const data::Dataset* train_;
    std::size_t eval_batch_;
    std::uint64_t seed_;
    data::Dataset subset_;
};

/// np individuals with genes drawn uniformly from [init_lo, init_hi], all
/// evaluated once (logged under Phase::init when a log is given).
meta::Population init_population(const GmwConfig& cfg, const nn::NetworkSpec& spec,
                                 const FitnessFn& fitness, RngStream& rng,
                                 TrainLog* log = nullptr);

/// One full shuffled pass of plain minibatch SGD (no momentum);
/// returns the sample-weighted mean batch loss.
double sgd_epoch(nn::Network& net, const data::Dataset& train, double lr,
                 std::size_t batch_size, RngStream& rng);

/// Reduce-on-plateau: strict improvement resets the counter; once it reaches
/// lr_patience the rate is multiplied by lr_factor (floored at lr_min).
void lr_step(SgdState& state, double current_loss, double lr_factor, std::size_t lr_patience,
             double lr_min);
void lr_step(SgdState& state, double current_loss, const GmwConfig& cfg);

/// Runs n_epoch SGD epochs on each dominant wolf independently (private
/// network copy and derived RNG per leader), re-evaluates them, and returns
/// the recomputed hierarchy. Omegas are untouched. n_epoch == 0 is a no-op.
meta::WolfHierarchy refine_leaders(meta::Population& pop, const meta::WolfHierarchy& hier,
                                   const data::Dataset& train, SgdState& sgd,
                                   const GmwConfig& cfg, const nn::NetworkSpec& spec,
                                   const FitnessFn& fitness, RngStream& rng,
                                   TrainLog* log = nullptr, std::size_t generation = 0);

struct TrainResult {
    meta::Individual best;  // best-ever individual by fitness
    TrainLog log;
};

/// The hybrid training loop: per generation, n_evol GWO iterations with
/// patience-triggered genetic events, then SGD refinement of the three
/// dominant wolves with a decaying learning rate.
TrainResult gmw_sgd_train(const GmwConfig& cfg, const nn::NetworkSpec& spec,
                          const data::Dataset& train, const data::Dataset& test);

struct ModelMetrics {
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double test_ce = 0.0;
};

/// Accuracy on the train set, accuracy and mean cross entropy on the test set.
ModelMetrics evaluate_model(const meta::Individual& ind, const nn::NetworkSpec& spec,
                            const data::Dataset& train, const data::Dataset& test);

}  // namespace gmw::hybrid
