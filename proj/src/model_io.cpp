#include "robex/model_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace robex {

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void save_model(const Network& net, const std::string& path) {
    net.validate();
    std::string body;
    body += "robexmodel 1\n";
    if (net.activation.is_softplus())
        body += "activation softplus " + format_real(net.activation.beta) + "\n";
    else
        body += "activation relu\n";
    body += "domain " + format_real(net.x_min) + " " + format_real(net.x_max) + "\n";
    body += "layers " + std::to_string(net.depth()) + "\n";
    for (const Layer& layer : net.layers) {
        body += "W " + std::to_string(layer.weights.rows) + " " + std::to_string(layer.weights.cols) + "\n";
        for (std::size_t i = 0; i < layer.weights.rows; ++i) {
            for (std::size_t j = 0; j < layer.weights.cols; ++j) {
                if (j) body += ' ';
                body += format_real(layer.weights(i, j));
            }
            body += '\n';
        }
        body += "b " + std::to_string(layer.biases.size()) + "\n";
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
            if (i) body += ' ';
            body += format_real(layer.biases[i]);
        }
        body += '\n';
    }
    write_file_atomic(path, body);
}

Network load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);

    auto fail = [&](const std::string& why) -> std::runtime_error {
        return std::runtime_error("malformed model file " + path + ": " + why);
    };

    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "robexmodel") throw fail("missing header");
    if (version != 1) throw fail("unsupported version " + std::to_string(version));

    Network net;
    if (!(in >> word) || word != "activation") throw fail("missing activation");
    if (!(in >> word)) throw fail("missing activation kind");
    if (word == "relu") {
        net.activation = Activation::relu();
    } else if (word == "softplus") {
        double beta = 0.0;
        if (!(in >> beta)) throw fail("missing softplus beta");
        net.activation = Activation::softplus(beta);
    } else {
        throw fail("unknown activation '" + word + "'");
    }

    if (!(in >> word) || word != "domain") throw fail("missing domain");
    if (!(in >> net.x_min >> net.x_max)) throw fail("missing domain bounds");

    std::size_t layer_count = 0;
    if (!(in >> word >> layer_count) || word != "layers") throw fail("missing layer count");

    for (std::size_t l = 0; l < layer_count; ++l) {
        Layer layer;
        std::size_t rows = 0, cols = 0;
        if (!(in >> word >> rows >> cols) || word != "W") throw fail("missing weight block");
        layer.weights = Matrix(rows, cols);
        for (auto& v : layer.weights.data)
            if (!(in >> v)) throw fail("truncated weight block");
        std::size_t blen = 0;
        if (!(in >> word >> blen) || word != "b" || blen != rows) throw fail("missing bias block");
        layer.biases.resize(blen);
        for (auto& v : layer.biases)
            if (!(in >> v)) throw fail("truncated bias block");
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

}  // namespace robex
