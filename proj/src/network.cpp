#include "robex/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robex {

Activation Activation::softplus(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("softplus: beta must be positive");
    return {ActivationKind::Softplus, beta};
}

namespace {

double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

double Activation::value(double x) const {
    if (kind == ActivationKind::ReLU) return x > 0.0 ? x : 0.0;
    const double t = beta * x;
    if (t > 0.0) return x + std::log1p(std::exp(-t)) / beta;
    return std::log1p(std::exp(t)) / beta;
}

double Activation::d1(double x) const {
    if (kind == ActivationKind::ReLU) return x >= 0.0 ? 1.0 : 0.0;
    return logistic(beta * x);
}

double Activation::d2(double x) const {
    if (kind == ActivationKind::ReLU)
        throw std::domain_error("second derivative of ReLU is ill-defined");
    const double s = logistic(beta * x);
    return beta * s * (1.0 - s);
}

double Activation::d3(double x) const {
    if (kind == ActivationKind::ReLU)
        throw std::domain_error("third derivative of ReLU is ill-defined");
    const double s = logistic(beta * x);
    return beta * beta * s * (1.0 - s) * (1.0 - 2.0 * s);
}

void Network::validate() const {
    if (layers.empty()) throw std::invalid_argument("network has no layers");
    if (!(x_min < x_max)) throw std::invalid_argument("network input domain is empty");
    if (activation.is_softplus() && !(activation.beta > 0.0))
        throw std::invalid_argument("softplus beta must be positive");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        if (layer.weights.rows != layer.biases.size())
            throw std::invalid_argument("layer weight/bias dimension mismatch");
        if (!layer.weights.all_finite())
            throw std::invalid_argument("layer weights contain non-finite values");
        for (double b : layer.biases)
            if (!std::isfinite(b)) throw std::invalid_argument("layer biases contain non-finite values");
        if (l > 0 && layers[l - 1].weights.rows != layer.weights.cols)
            throw std::invalid_argument("consecutive layer dimensions do not chain");
    }
}

namespace {

void add_bias_inplace(Vec& z, const Vec& b) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += b[i];
}

std::size_t argmax_lowest(const Vec& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

void require_softplus(const Network& net, const char* op) {
    if (!net.activation.is_softplus())
        throw std::domain_error(std::string(op) + ": requires a Softplus network (ReLU has no well-defined second derivative)");
}

void require_class(const Network& net, std::size_t cls) {
    if (cls >= net.output_dim()) throw std::out_of_range("class index out of range");
}

Vec softmax(const Vec& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (auto& x : p) x /= sum;
    return p;
}

}  // namespace

ForwardTrace forward(const Network& net, const Vec& x) {
    if (x.size() != net.input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
    const std::size_t depth = net.depth();
    ForwardTrace tr;
    tr.inputs.reserve(depth);
    tr.pre.reserve(depth);
    Vec a = x;
    for (std::size_t l = 0; l < depth; ++l) {
        tr.inputs.push_back(a);
        Vec z = matvec(net.layers[l].weights, a);
        add_bias_inplace(z, net.layers[l].biases);
        for (double zi : z)
            if (!std::isfinite(zi)) throw std::runtime_error("forward: non-finite pre-activation (diverged weights?)");
        tr.pre.push_back(z);
        if (l + 1 < depth) {
            a.resize(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) a[i] = net.activation.value(z[i]);
        } else {
            a = z;
        }
    }
    tr.logits = a;
    tr.predicted = argmax_lowest(tr.logits);
    return tr;
}

Vec input_gradient(const Network& net, const Vec& x, std::size_t cls) {
    require_class(net, cls);
    const ForwardTrace tr = forward(net, x);
    const std::size_t depth = net.depth();
    Vec u(net.output_dim(), 0.0);
    u[cls] = 1.0;
    for (std::size_t l = depth; l-- > 0;) {
        Vec q = matvec_transposed(net.layers[l].weights, u);
        if (l == 0) return q;
        u.resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) u[i] = q[i] * net.activation.d1(tr.pre[l - 1][i]);
    }
    return {};  // unreachable
}

ParamGrads ParamGrads::zeros_like(const Network& net) {
    ParamGrads g;
    g.dw.reserve(net.depth());
    g.db.reserve(net.depth());
    for (const Layer& layer : net.layers) {
        g.dw.emplace_back(layer.weights.rows, layer.weights.cols);
        g.db.emplace_back(layer.biases.size(), 0.0);
    }
    return g;
}

void ParamGrads::add_scaled(const ParamGrads& other, double scale) {
    for (std::size_t l = 0; l < dw.size(); ++l) {
        for (std::size_t i = 0; i < dw[l].data.size(); ++i) dw[l].data[i] += scale * other.dw[l].data[i];
        for (std::size_t i = 0; i < db[l].size(); ++i) db[l][i] += scale * other.db[l][i];
    }
}

void ParamGrads::scale(double s) {
    for (auto& m : dw)
        for (auto& x : m.data) x *= s;
    for (auto& v : db)
        for (auto& x : v) x *= s;
}

BatchGradResult parameter_gradient(const Network& net, const LabeledBatch& batch) {
    if (batch.indices.empty()) throw std::invalid_argument("parameter_gradient: empty batch");
    const std::size_t depth = net.depth();
    BatchGradResult res;
    res.grads = ParamGrads::zeros_like(net);
    const double inv_n = 1.0 / static_cast<double>(batch.indices.size());

    for (std::size_t pos = 0; pos < batch.indices.size(); ++pos) {
        const std::size_t idx = batch.indices[pos];
        const Vec& x = (*batch.features)[idx];
        const int label = (*batch.labels)[idx];
        if (label < 0 || static_cast<std::size_t>(label) >= net.output_dim())
            throw std::out_of_range("parameter_gradient: label out of range");

        const ForwardTrace tr = forward(net, x);
        if (tr.predicted == static_cast<std::size_t>(label)) ++res.correct;

        const Vec p = softmax(tr.logits);
        const double m = *std::max_element(tr.logits.begin(), tr.logits.end());
        double lse = 0.0;
        for (double z : tr.logits) lse += std::exp(z - m);
        res.mean_loss += inv_n * (-(tr.logits[label] - m - std::log(lse)));

        Vec delta = p;  // dL/dz at the output layer
        delta[label] -= 1.0;
        for (std::size_t l = depth; l-- > 0;) {
            Matrix& dw = res.grads.dw[l];
            Vec& db = res.grads.db[l];
            const Vec& in = tr.inputs[l];
            for (std::size_t i = 0; i < dw.rows; ++i) {
                const double d = delta[i] * inv_n;
                db[i] += d;
                for (std::size_t j = 0; j < dw.cols; ++j) dw(i, j) += d * in[j];
            }
            if (l == 0) break;
            Vec q = matvec_transposed(net.layers[l].weights, delta);
            delta.resize(q.size());
            for (std::size_t i = 0; i < q.size(); ++i)
                delta[i] = q[i] * net.activation.d1(tr.pre[l - 1][i]);
        }
    }
    return res;
}

Vec hessian_vector_product(const Network& net, const Vec& x, std::size_t cls, const Vec& v) {
    require_softplus(net, "hessian_vector_product");
    require_class(net, cls);
    if (v.size() != net.input_dim())
        throw std::invalid_argument("hessian_vector_product: direction dimension mismatch");

    const std::size_t depth = net.depth();
    const ForwardTrace tr = forward(net, x);

    // forward tangents of the pre-activations along v
    std::vector<Vec> rz(depth);
    Vec ra = v;
    for (std::size_t l = 0; l < depth; ++l) {
        rz[l] = matvec(net.layers[l].weights, ra);
        if (l + 1 < depth) {
            ra.resize(rz[l].size());
            for (std::size_t i = 0; i < ra.size(); ++i)
                ra[i] = net.activation.d1(tr.pre[l][i]) * rz[l][i];
        }
    }

    // reverse pass carrying the adjoint u and its tangent
    Vec u(net.output_dim(), 0.0);
    u[cls] = 1.0;
    Vec ru(net.output_dim(), 0.0);
    for (std::size_t l = depth; l-- > 0;) {
        if (l == 0) return matvec_transposed(net.layers[0].weights, ru);
        Vec q = matvec_transposed(net.layers[l].weights, u);
        Vec rq = matvec_transposed(net.layers[l].weights, ru);
        u.resize(q.size());
        ru.resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double z = tr.pre[l - 1][i];
            const double s1 = net.activation.d1(z);
            const double s2 = net.activation.d2(z);
            u[i] = q[i] * s1;
            ru[i] = rq[i] * s1 + q[i] * s2 * rz[l - 1][i];
        }
    }
    return {};  // unreachable
}

Matrix exact_hessian(const Network& net, const Vec& x, std::size_t cls) {
    require_softplus(net, "exact_hessian");
    require_class(net, cls);
    if (x.size() != net.input_dim()) throw std::invalid_argument("exact_hessian: input dimension mismatch");

    const std::size_t n = net.input_dim();
    const std::size_t depth = net.depth();
    const ForwardTrace tr = forward(net, x);

    Matrix jac = Matrix::identity(n);   // d(layer input)/dx
    std::vector<Matrix> hess;           // per layer-input unit, d^2/dx^2

    for (std::size_t l = 0; l < depth; ++l) {
        const Matrix& w = net.layers[l].weights;
        const std::size_t out = w.rows;

        Matrix jz(out, n);
        for (std::size_t i = 0; i < out; ++i)
            for (std::size_t j = 0; j < w.cols; ++j) {
                const double wij = w(i, j);
                if (wij == 0.0) continue;
                for (std::size_t k = 0; k < n; ++k) jz(i, k) += wij * jac(j, k);
            }

        std::vector<Matrix> hz(out, Matrix(n, n));
        if (!hess.empty()) {
            for (std::size_t i = 0; i < out; ++i)
                for (std::size_t j = 0; j < w.cols; ++j) {
                    const double wij = w(i, j);
                    if (wij == 0.0) continue;
                    for (std::size_t k = 0; k < n * n; ++k) hz[i].data[k] += wij * hess[j].data[k];
                }
        }

        if (l + 1 == depth) return hz[cls];

        jac = Matrix(out, n);
        hess.assign(out, Matrix(n, n));
        for (std::size_t i = 0; i < out; ++i) {
            const double z = tr.pre[l][i];
            const double s1 = net.activation.d1(z);
            const double s2 = net.activation.d2(z);
            for (std::size_t k = 0; k < n; ++k) jac(i, k) = s1 * jz(i, k);
            Matrix& h = hess[i];
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b)
                    h(a, b) = s2 * jz(i, a) * jz(i, b) + s1 * hz[i](a, b);
        }
    }
    return {};  // unreachable
}

namespace {

// Lane bundle for the mixed second-order forward pass: value, directional
// derivatives along v and r, and the mixed v-r derivative.
struct Lanes {
    Vec a0, av, ar, avr;
};

}  // namespace

CurvatureGradResult curvature_penalty_gradient(const Network& net, const Vec& x,
                                               std::size_t cls, const Vec& v) {
    require_softplus(net, "curvature_penalty_gradient");
    require_class(net, cls);

    const Vec phi = hessian_vector_product(net, x, cls, v);
    CurvatureGradResult res;
    res.hv_sq = dot(phi, phi);
    res.grads = ParamGrads::zeros_like(net);

    Vec r(phi.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 2.0 * phi[i];

    const std::size_t depth = net.depth();

    // forward: keep the input lanes and pre-activation lanes of every layer
    std::vector<Lanes> in(depth), z(depth);
    Lanes cur{x, v, r, Vec(x.size(), 0.0)};
    for (std::size_t l = 0; l < depth; ++l) {
        in[l] = cur;
        const Matrix& w = net.layers[l].weights;
        z[l].a0 = matvec(w, cur.a0);
        add_bias_inplace(z[l].a0, net.layers[l].biases);
        z[l].av = matvec(w, cur.av);
        z[l].ar = matvec(w, cur.ar);
        z[l].avr = matvec(w, cur.avr);
        if (l + 1 == depth) break;
        const std::size_t out = w.rows;
        cur.a0.resize(out);
        cur.av.resize(out);
        cur.ar.resize(out);
        cur.avr.resize(out);
        for (std::size_t i = 0; i < out; ++i) {
            const double zi = z[l].a0[i];
            const double s1 = net.activation.d1(zi);
            const double s2 = net.activation.d2(zi);
            cur.a0[i] = net.activation.value(zi);
            cur.av[i] = s1 * z[l].av[i];
            cur.ar[i] = s1 * z[l].ar[i];
            cur.avr[i] = s2 * z[l].av[i] * z[l].ar[i] + s1 * z[l].avr[i];
        }
    }

    // reverse: adjoints of the four lanes; seed d(r^T H v)/d(zvr_L) = e_cls
    Lanes zadj;
    zadj.a0.assign(net.output_dim(), 0.0);
    zadj.av.assign(net.output_dim(), 0.0);
    zadj.ar.assign(net.output_dim(), 0.0);
    zadj.avr.assign(net.output_dim(), 0.0);
    zadj.avr[cls] = 1.0;

    for (std::size_t l = depth; l-- > 0;) {
        const Matrix& w = net.layers[l].weights;
        Matrix& dw = res.grads.dw[l];
        Vec& db = res.grads.db[l];
        for (std::size_t i = 0; i < w.rows; ++i) {
            db[i] += zadj.a0[i];
            for (std::size_t j = 0; j < w.cols; ++j)
                dw(i, j) += zadj.a0[i] * in[l].a0[j] + zadj.av[i] * in[l].av[j] +
                            zadj.ar[i] * in[l].ar[j] + zadj.avr[i] * in[l].avr[j];
        }
        if (l == 0) break;

        Lanes aadj;
        aadj.a0 = matvec_transposed(w, zadj.a0);
        aadj.av = matvec_transposed(w, zadj.av);
        aadj.ar = matvec_transposed(w, zadj.ar);
        aadj.avr = matvec_transposed(w, zadj.avr);

        const std::size_t prev = w.cols;
        zadj.a0.assign(prev, 0.0);
        zadj.av.assign(prev, 0.0);
        zadj.ar.assign(prev, 0.0);
        zadj.avr.assign(prev, 0.0);
        const Lanes& zp = z[l - 1];
        for (std::size_t i = 0; i < prev; ++i) {
            const double zi = zp.a0[i];
            const double s1 = net.activation.d1(zi);
            const double s2 = net.activation.d2(zi);
            const double s3 = net.activation.d3(zi);
            zadj.avr[i] = s1 * aadj.avr[i];
            zadj.av[i] = s1 * aadj.av[i] + s2 * zp.ar[i] * aadj.avr[i];
            zadj.ar[i] = s1 * aadj.ar[i] + s2 * zp.av[i] * aadj.avr[i];
            zadj.a0[i] = s1 * aadj.a0[i] + s2 * zp.av[i] * aadj.av[i] + s2 * zp.ar[i] * aadj.ar[i] +
                         (s3 * zp.av[i] * zp.ar[i] + s2 * zp.avr[i]) * aadj.avr[i];
        }
    }
    return res;
}

}  // namespace robex
