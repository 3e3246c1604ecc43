#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "robex/cli.hpp"

namespace {

using robex::cli::DataArgs;

void add_data_flags(CLI::App* cmd, DataArgs& data) {
    cmd->add_option("--data", data.path, "dataset file")->required();
    cmd->add_option("--format", data.format, "data format: csv or cifar-bin")
        ->check(CLI::IsMember({"csv", "cifar-bin"}));
    cmd->add_option("--limit", data.limit, "use only the first N samples (0 = all)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"training, explanation and robustness analysis for small dense classifiers"};
    app.require_subcommand(1);

    // gen-data
    robex::cli::GenDataArgs gen;
    std::vector<std::size_t> image_dims;
    auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic Gaussian-blob dataset");
    gen_cmd->add_option("--n", gen.n_samples, "number of samples")->required();
    gen_cmd->add_option("--classes", gen.n_classes, "number of classes");
    gen_cmd->add_option("--dim", gen.dim, "feature dimension");
    gen_cmd->add_option("--image", image_dims, "image shape: HEIGHT WIDTH CHANNELS")->expected(3);
    gen_cmd->add_option("--seed", gen.seed, "rng seed");
    gen_cmd->add_option("--separation", gen.separation,
                        "margin between each class centre and the nearest decision midpoint, "
                        "in blob standard deviations");
    gen_cmd->add_option("--out", gen.out, "output CSV path")->required();

    // train
    robex::cli::TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train a classifier from a config file");
    train_cmd->add_option("--config", train.config_path, "flat key = value config file")->required();
    add_data_flags(train_cmd, train.data);
    train_cmd->add_option("--out", train.out_model, "output model path")->required();
    train_cmd->add_option("--metrics", train.metrics_out, "metrics CSV path (default <out>.metrics.csv)");
    train_cmd->add_option("--hidden", train.hidden, "hidden layer sizes")->delimiter(',');

    // explain
    robex::cli::ExplainArgs explain;
    auto* explain_cmd = app.add_subcommand("explain", "write an explanation map for one sample");
    explain_cmd->add_option("--model", explain.model_path, "model file")->required();
    add_data_flags(explain_cmd, explain.data);
    explain_cmd->add_option("--method", explain.method, "gradient|gradxinput|intgrad|gbp|lrp");
    explain_cmd->add_option("--index", explain.index, "sample index");
    explain_cmd->add_option("--ig-steps", explain.ig_steps, "integrated-gradients quadrature points");
    explain_cmd->add_option("--out", explain.out, "output CSV path")->required();

    // evaluate
    robex::cli::EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "score explanation robustness under input noise");
    eval_cmd->add_option("--model", eval.model_path, "model file")->required();
    add_data_flags(eval_cmd, eval.data);
    eval_cmd->add_option("--methods", eval.methods, "explanation methods")->delimiter(',');
    eval_cmd->add_option("--noise", eval.noise_kinds, "noise kinds: gaussian|laplace|saltpepper")
        ->delimiter(',');
    eval_cmd->add_option("--levels", eval.levels, "noise levels in [0, 0.5]")->delimiter(',');
    eval_cmd->add_option("--seed", eval.seed, "master seed for the perturbation draws");
    eval_cmd->add_option("--ig-steps", eval.ig_steps, "integrated-gradients quadrature points");
    eval_cmd->add_option("--out", eval.out, "output CSV path")->required();

    // bound
    robex::cli::BoundArgs bound;
    DataArgs bound_data;
    auto* bound_cmd = app.add_subcommand("bound", "certify Hessian bounds or run the kink analysis");
    bound_cmd->add_option("--model", bound.model_path, "model file")->required();
    auto* bound_data_opt = bound_cmd->add_option("--data", bound_data.path, "inputs for measurement");
    bound_cmd->add_option("--format", bound_data.format, "data format: csv or cifar-bin")
        ->check(CLI::IsMember({"csv", "cifar-bin"}));
    bound_cmd->add_option("--limit", bound_data.limit, "use only the first N samples");
    bound_cmd->add_option("--inputs", bound.n_inputs, "number of inputs to measure");
    bound_cmd->add_option("--path-start", bound.path_start, "kink-path start point")->delimiter(',');
    bound_cmd->add_option("--path-end", bound.path_end, "kink-path end point")->delimiter(',');
    bound_cmd->add_option("--samples", bound.hutchinson_samples, "stochastic norm samples per input");
    bound_cmd->add_option("--seed", bound.seed, "rng seed");
    bound_cmd->add_option("--out", bound.out, "output report path")->required();

    // verify
    std::uint64_t verify_seed = 1;
    auto* verify_cmd = app.add_subcommand("verify", "run the built-in oracle suites");
    verify_cmd->add_option("--seed", verify_seed, "rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : robex::cli::kUsageError;
    }

    if (gen_cmd->parsed()) {
        if (!image_dims.empty())
            gen.image = robex::ImageShape{image_dims[0], image_dims[1], image_dims[2]};
        return robex::cli::cmd_gen_data(gen, std::cerr);
    }
    if (train_cmd->parsed()) return robex::cli::cmd_train(train, std::cerr);
    if (explain_cmd->parsed()) return robex::cli::cmd_explain(explain, std::cerr);
    if (eval_cmd->parsed()) return robex::cli::cmd_evaluate(eval, std::cerr);
    if (bound_cmd->parsed()) {
        if (bound_data_opt->count() > 0) bound.data = bound_data;
        return robex::cli::cmd_bound(bound, std::cerr);
    }
    if (verify_cmd->parsed()) return robex::cli::cmd_verify(verify_seed, std::cout);
    return robex::cli::kUsageError;
}
