#include "robex/cli.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "robex/bounds.hpp"
#include "robex/explain.hpp"
#include "robex/model_io.hpp"
#include "robex/robustness.hpp"
#include "robex/verify.hpp"

namespace robex::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

SweepDataset sweep_view(const Dataset& ds) {
    SweepDataset sd;
    sd.features = &ds.features;
    sd.labels = &ds.labels;
    sd.domain = {ds.x_min, ds.x_max};
    sd.channels = ds.image_shape ? ds.image_shape->channels : 1;
    if (ds.image_shape && ds.image_shape->height >= 7 && ds.image_shape->width >= 7)
        sd.grid = {{ds.image_shape->height, ds.image_shape->width}};
    return sd;
}

double frob_sq(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += v * v;
    return acc;
}

}  // namespace

ParsedConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);

    ParsedConfig cfg;
    double beta = 1.0;
    std::string activation = "relu";

    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw std::runtime_error("malformed config line: " + t);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            if (key == "lr") cfg.train.learning_rate = std::stod(value);
            else if (key == "momentum") cfg.train.momentum = std::stod(value);
            else if (key == "weight_decay") cfg.train.weight_decay = std::stod(value);
            else if (key == "curvature_weight") cfg.train.curvature_weight = std::stod(value);
            else if (key == "beta") beta = std::stod(value);
            else if (key == "activation") activation = value;
            else if (key == "epochs") cfg.train.epochs = std::stoul(value);
            else if (key == "batch_size") cfg.train.batch_size = std::stoul(value);
            else if (key == "seed") cfg.train.seed = std::stoull(value);
            else if (key == "lr_decay") cfg.train.lr_decay = std::stod(value);
            else throw std::runtime_error("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("bad value for config key '" + key + "': " + value);
        }
    }

    if (activation == "relu") cfg.activation = Activation::relu();
    else if (activation == "softplus") cfg.activation = Activation::softplus(beta);
    else throw std::runtime_error("unknown activation '" + activation + "' (use relu or softplus)");
    return cfg;
}

Dataset load_data(const DataArgs& args) {
    if (args.format == "csv") {
        Dataset ds = load_dataset_csv(args.path);
        if (args.limit != 0 && ds.size() > args.limit) {
            ds.features.resize(args.limit);
            ds.labels.resize(args.limit);
        }
        return ds;
    }
    if (args.format == "cifar-bin") return load_cifar_binary(args.path, args.limit);
    throw std::runtime_error("unknown data format '" + args.format + "' (use csv or cifar-bin)");
}

int cmd_gen_data(const GenDataArgs& args, std::ostream& err) {
    try {
        const Dataset ds = make_blobs(args.n_samples, args.n_classes, args.dim, args.seed,
                                      args.separation, args.image);
        save_dataset_csv(ds, args.out);
    } catch (const std::exception& e) {
        err << "gen-data: " << e.what() << "\n";
        return kUsageError;
    }
    return kOk;
}

int cmd_train(const TrainArgs& args, std::ostream& err) {
    ParsedConfig cfg;
    Dataset ds;
    try {
        cfg = parse_config_file(args.config_path);
        ds = load_data(args.data);
        cfg.train.validate(cfg.activation);
    } catch (const std::exception& e) {
        err << "train: " << e.what() << "\n";
        return kUsageError;
    }

    std::vector<std::size_t> sizes;
    sizes.push_back(ds.dim());
    for (std::size_t h : args.hidden) sizes.push_back(h);
    sizes.push_back(static_cast<std::size_t>(ds.n_classes));

    TrainResult result;
    try {
        result = train({&ds.features, &ds.labels}, cfg.train, sizes, cfg.activation, ds.x_min,
                       ds.x_max);
    } catch (const std::exception& e) {
        err << "train: " << e.what() << "\n";
        return kUsageError;
    }

    std::string metrics;
    for (const EpochMetrics& em : result.metrics) {
        metrics += std::to_string(em.epoch) + "," + format_real(em.loss) + "," +
                   format_real(em.curvature) + "," + format_real(em.accuracy) + "\n";
    }
    const std::string metrics_path =
        args.metrics_out.empty() ? args.out_model + ".metrics.csv" : args.metrics_out;
    try {
        write_file_atomic(metrics_path, metrics);
        if (result.diverged) {
            err << "train: " << result.diverged->message << " (partial metrics in " << metrics_path
                << ")\n";
            return kNumericalError;
        }
        save_model(result.net, args.out_model);
    } catch (const std::exception& e) {
        err << "train: " << e.what() << "\n";
        return kUsageError;
    }
    return kOk;
}

int cmd_explain(const ExplainArgs& args, std::ostream& err) {
    try {
        const Network net = load_model(args.model_path);
        const Dataset ds = load_data(args.data);
        const auto method = parse_method(args.method);
        if (!method)
            throw std::runtime_error("unknown method '" + args.method +
                                     "' (use gradient|gradxinput|intgrad|gbp|lrp)");
        if (args.index >= ds.size())
            throw std::runtime_error("sample index " + std::to_string(args.index) +
                                     " out of range (dataset has " + std::to_string(ds.size()) +
                                     " rows)");

        ExplainOptions opts;
        opts.ig_steps = args.ig_steps;
        const std::size_t channels = ds.image_shape ? ds.image_shape->channels : 1;

        const ExplanationMap raw = compute_map(net, ds.features[args.index], *method, opts);
        const ExplanationMap norm = normalize_map(raw, channels);

        double mass = 0.0;
        for (double v : raw.values) mass += std::abs(v);

        std::string body = "# method=" + method_name(*method) +
                           " class=" + std::to_string(raw.class_explained) +
                           " l1_mass=" + format_real(mass) +
                           " normalized=" + (norm.normalized ? std::string("1") : std::string("0")) +
                           "\n";
        if (channels == 1) {
            for (std::size_t i = 0; i < raw.values.size(); ++i)
                body += std::to_string(i) + "," + format_real(raw.values[i]) + "," +
                        format_real(norm.values[i]) + "\n";
        } else {
            // per-pixel rows; the raw column carries the channel-abs sum
            const std::size_t pixels = norm.values.size();
            for (std::size_t p = 0; p < pixels; ++p) {
                double absraw = 0.0;
                for (std::size_t c = 0; c < channels; ++c) absraw += std::abs(raw.values[c * pixels + p]);
                body += std::to_string(p) + "," + format_real(absraw) + "," +
                        format_real(norm.values[p]) + "\n";
            }
        }
        write_file_atomic(args.out, body);
    } catch (const std::exception& e) {
        err << "explain: " << e.what() << "\n";
        return kUsageError;
    }
    return kOk;
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& err) {
    try {
        const Network net = load_model(args.model_path);
        const Dataset ds = load_data(args.data);
        const SweepDataset sd = sweep_view(ds);

        std::vector<ExplMethod> methods;
        for (const std::string& name : args.methods) {
            const auto m = parse_method(name);
            if (!m) throw std::runtime_error("unknown method '" + name + "'");
            methods.push_back(*m);
        }
        std::vector<NoiseKind> kinds;
        for (const std::string& name : args.noise_kinds) {
            const auto k = parse_noise(name);
            if (!k) throw std::runtime_error("unknown noise kind '" + name + "'");
            kinds.push_back(*k);
        }
        for (double level : args.levels)
            if (!(level >= 0.0) || level > 0.5)
                throw std::runtime_error("noise level " + format_real(level) + " outside [0, 0.5]");

        std::vector<NoiseSpec> specs;
        for (NoiseKind kind : kinds)
            for (double level : args.levels) specs.push_back({kind, level, 0});

        SweepConfig cfg;
        cfg.seed = args.seed;
        cfg.explain.ig_steps = args.ig_steps;

        std::string body;
        bool all_excluded_somewhere = false;
        for (ExplMethod method : methods) {
            const RobustnessReport rep = robustness_sweep(net, sd, method, specs, cfg);
            for (const ReportRow& row : rep.rows) {
                body += method_name(method) + "," + noise_name(row.kind) + "," +
                        format_real(row.level) + "," + format_real(row.pcc_mean) + "," +
                        format_real(row.pcc_std) + "," + format_real(row.ssim_mean) + "," +
                        format_real(row.ssim_std) + "," + format_real(row.mse_mean) + "," +
                        format_real(row.mse_std) + "," + format_real(row.perturbed_accuracy) + "," +
                        std::to_string(row.n) + "," + std::to_string(row.n_excluded) + "\n";
                if (row.n_excluded == row.n) all_excluded_somewhere = true;
            }
        }
        write_file_atomic(args.out, body);
        if (all_excluded_somewhere) {
            err << "evaluate: a report row has no defined PCC samples\n";
            return kNumericalError;
        }
    } catch (const std::exception& e) {
        err << "evaluate: " << e.what() << "\n";
        return kUsageError;
    }
    return kOk;
}

int cmd_bound(const BoundArgs& args, std::ostream& err) {
    try {
        const Network net = load_model(args.model_path);
        const bool has_path = !args.path_start.empty() || !args.path_end.empty();
        if (has_path && (args.path_start.size() != net.input_dim() ||
                         args.path_end.size() != net.input_dim()))
            throw std::runtime_error("path endpoints must have " + std::to_string(net.input_dim()) +
                                     " coordinates");

        std::string body;
        if (!net.activation.is_softplus()) {
            if (!has_path)
                throw std::runtime_error(
                    "a ReLU model needs --path-start/--path-end for the kink analysis");
            PathSpec path{args.path_start, args.path_end};
            const std::size_t cls = forward(net, path.start).predicted;
            const KinkSumResult r = kink_sum_check(net, path, cls);
            for (const KinkRecord& k : r.kinks)
                body += "kink," + format_real(k.t) + "," + std::to_string(k.layer) + "," +
                        std::to_string(k.unit) + "," + std::to_string(k.sign) + "\n";
            body += "dh";
            for (double v : r.measured_dh) body += "," + format_real(v);
            body += "\n";
            double dev = 0.0;
            for (std::size_t i = 0; i < r.measured_dh.size(); ++i)
                dev = std::max(dev, std::abs(r.measured_dh[i] - r.formula_dh[i]));
            body += "summary," + std::to_string(r.kinks.size()) + "," +
                    format_real(dot(r.measured_dh, r.measured_dh)) + "," +
                    format_real(r.theorem2_bound) + "," + format_real(dev) + "\n";
            write_file_atomic(args.out, body);
            return kOk;
        }

        // Softplus: certificate plus measured Hessian norms
        std::vector<Vec> inputs;
        if (args.data) {
            const Dataset ds = load_data(*args.data);
            const std::size_t n = std::min(args.n_inputs, ds.size());
            inputs.assign(ds.features.begin(), ds.features.begin() + static_cast<std::ptrdiff_t>(n));
        } else {
            Rng rng(mix_seed(args.seed, 0x424e44));
            for (std::size_t i = 0; i < args.n_inputs; ++i) {
                Vec x(net.input_dim());
                for (auto& v : x) v = rng.next_uniform_in(net.x_min, net.x_max);
                inputs.push_back(std::move(x));
            }
        }

        Rng est_rng(mix_seed(args.seed, 0x455354));
        const bool exact_ok = net.input_dim() <= 64;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const std::size_t cls = forward(net, inputs[i]).predicted;
            const BoundCertificate cert = theorem1_bound(net, cls);
            const double sampled = std::sqrt(
                estimate_hessian_sq_norm(net, inputs[i], cls, args.hutchinson_samples, est_rng).value);
            std::string exact_str = "nan", slack_str = "nan";
            if (exact_ok) {
                const double exact = std::sqrt(frob_sq(exact_hessian(net, inputs[i], cls)));
                exact_str = format_real(exact);
                slack_str = format_real(cert.theorem1 - exact);
            }
            body += std::to_string(i) + "," + std::to_string(cls) + "," + format_real(cert.theorem1) +
                    "," + format_real(sampled) + "," + exact_str + "," + slack_str + "\n";
        }

        if (has_path) {
            PathSpec path{args.path_start, args.path_end};
            const std::size_t cls = forward(net, path.start).predicted;
            const BoundCertificate cert = theorem1_bound(net, cls);
            body += "path," + format_real(path.length()) + "," + format_real(cert.theorem1) + "," +
                    format_real(explanation_change_bound(cert, path)) + "\n";
        }
        write_file_atomic(args.out, body);
    } catch (const std::exception& e) {
        err << "bound: " << e.what() << "\n";
        return kUsageError;
    }
    return kOk;
}

int cmd_verify(std::uint64_t seed, std::ostream& out) {
    const std::vector<SuiteResult> results = run_verification(seed);
    bool all_ok = true;
    for (const SuiteResult& r : results) {
        out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.stats << "\n";
        if (!r.passed) all_ok = false;
    }
    out << (all_ok ? "verification passed" : "verification FAILED") << " (" << results.size()
        << " suites)\n";
    return all_ok ? kOk : kVerifyFailure;
}

}  // namespace robex::cli
