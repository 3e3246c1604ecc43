#ifndef ROBEX_CLI_HPP
#define ROBEX_CLI_HPP

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "robex/dataset.hpp"
#include "robex/training.hpp"

namespace robex::cli {

/// Exit codes shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;      // bad flags, config or model/data files
inline constexpr int kNumericalError = 2;  // divergence, undefined metric on all samples
inline constexpr int kVerifyFailure = 3;

struct GenDataArgs {
    std::size_t n_samples = 0;
    int n_classes = 2;
    std::size_t dim = 8;
    std::optional<ImageShape> image;  // overrides dim when set
    std::uint64_t seed = 1;
    double separation = 3.0;
    std::string out;
};
int cmd_gen_data(const GenDataArgs& args, std::ostream& err);

/// Flat `key = value` training configuration. Missing keys take the
/// documented defaults; unknown keys are an error.
struct ParsedConfig {
    TrainConfig train;
    Activation activation = Activation::relu();
};
ParsedConfig parse_config_file(const std::string& path);

struct DataArgs {
    std::string path;
    std::string format = "csv";  // csv | cifar-bin
    std::size_t limit = 0;       // 0: all samples
};
Dataset load_data(const DataArgs& args);

struct TrainArgs {
    std::string config_path;
    DataArgs data;
    std::string out_model;
    std::string metrics_out;  // empty: "<out_model>.metrics.csv"
    std::vector<std::size_t> hidden = {16, 16};
};
int cmd_train(const TrainArgs& args, std::ostream& err);

struct ExplainArgs {
    std::string model_path;
    DataArgs data;
    std::string method = "gradient";
    std::size_t index = 0;
    std::size_t ig_steps = 64;
    std::string out;
};
int cmd_explain(const ExplainArgs& args, std::ostream& err);

struct EvaluateArgs {
    std::string model_path;
    DataArgs data;
    std::vector<std::string> methods = {"gradient"};
    std::vector<std::string> noise_kinds = {"gaussian"};
    std::vector<double> levels = {0.005, 0.01, 0.025};
    std::uint64_t seed = 1;
    std::size_t ig_steps = 64;
    std::string out;
};
int cmd_evaluate(const EvaluateArgs& args, std::ostream& err);

struct BoundArgs {
    std::string model_path;
    std::optional<DataArgs> data;  // inputs for Hessian measurement
    std::size_t n_inputs = 10;     // random inputs when no data is given
    std::vector<double> path_start, path_end;  // ReLU kink analysis
    std::size_t hutchinson_samples = 10;
    std::uint64_t seed = 1;
    std::string out;
};
int cmd_bound(const BoundArgs& args, std::ostream& err);

int cmd_verify(std::uint64_t seed, std::ostream& out);

}  // namespace robex::cli

#endif
