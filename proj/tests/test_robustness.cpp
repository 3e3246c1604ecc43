#include <cmath>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "robex/dataset.hpp"
#include "robex/robustness.hpp"
#include "test_helpers.hpp"

using namespace robex;
using namespace robex::testing;

TEST_CASE("pcc hand cases") {
    CHECK(*pcc({1, 2, 3}, {1, 2, 3}) == 1.0);

    // v = -u + c is perfectly anti-correlated
    CHECK(*pcc({1, 2, 3}, {4, 3, 2}) == doctest::Approx(-1.0).epsilon(1e-15));

    const double expected = 3.0 / (std::sqrt(2.0) * std::sqrt(14.0 / 3.0));
    CHECK(*pcc({1, 2, 3}, {1, 2, 4}) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_FALSE(pcc({2, 2, 2}, {1, 2, 3}).has_value());
    CHECK_FALSE(pcc({1, 2, 3}, {5, 5, 5}).has_value());
    CHECK_THROWS_AS(pcc({1, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(pcc({1}, {1}), std::invalid_argument);
}

TEST_CASE("pcc is invariant under positive affine maps") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        Vec u(24), v(24);
        for (auto& e : u) e = rng.next_uniform_in(-1, 1);
        for (auto& e : v) e = rng.next_uniform_in(-1, 1);
        const double a = rng.next_uniform_in(0.1, 5.0);
        const double b = rng.next_uniform_in(-3.0, 3.0);
        Vec ut(24);
        for (std::size_t i = 0; i < 24; ++i) ut[i] = a * u[i] + b;
        CHECK(std::abs(*pcc(ut, v) - *pcc(u, v)) <= 1e-12);
    }
}

TEST_CASE("mse hand cases") {
    CHECK(mse({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(mse({0, 0}, {1, 1}) == 1.0);
    CHECK(mse({1, 2, 3}, {2, 2, 2}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("mse is zero exactly when the vectors are equal") {
    Rng rng(18);
    Vec u(16);
    for (auto& e : u) e = rng.next_uniform_in(-1, 1);
    CHECK(mse(u, u) == 0.0);
    Vec v = u;
    v[7] = std::nextafter(v[7], 2.0);  // smallest representable change
    CHECK(mse(u, v) > 0.0);
}

TEST_CASE("ssim hand cases") {
    const std::size_t h = 8, w = 8;
    Vec u(h * w, 0.0), v(h * w, 0.0);

    // identical non-constant images
    Rng rng(19);
    for (auto& e : u) e = rng.next_uniform_in(0, 1);
    CHECK(ssim(u, u, h, w, 1.0) == 1.0);

    // constant zero vs constant L: k1^2 / (1 + k1^2), independent of L
    const double L = 3.0;
    v.assign(h * w, L);
    const double expected = 0.01 * 0.01 / (1.0 + 0.01 * 0.01);
    CHECK(ssim(Vec(h * w, 0.0), v, h, w, L) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(9.999e-5).epsilon(1e-3));

    // symmetry is exact
    Vec a(h * w), b(h * w);
    for (auto& e : a) e = rng.next_uniform_in(0, 1);
    for (auto& e : b) e = rng.next_uniform_in(0, 1);
    CHECK(ssim(a, b, h, w, 1.0) == ssim(b, a, h, w, 1.0));

    CHECK_THROWS_AS(ssim(Vec(36, 0.0), Vec(36, 0.0), 6, 6, 1.0), std::invalid_argument);
}

TEST_CASE("gaussian perturbation uses sigma = range * nu") {
    const Vec x = {0.5, 0.5, 0.5};
    const NoiseSpec spec{NoiseKind::Gaussian, 0.025, 9};
    const Domain unit{0.0, 1.0};
    const Domain wide{0.0, 2.0};

    Rng r1(33), r2(33);
    const Vec p1 = perturb(x, spec, unit, r1);
    const Vec p2 = perturb(x, spec, wide, r2);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(p2[i] - x[i] == doctest::Approx(2.0 * (p1[i] - x[i])).epsilon(1e-12));

    Rng r3(33);
    Vec expected = x;
    for (auto& e : expected) e += 0.025 * r3.next_normal();
    Rng r4(33);
    CHECK(perturb(x, spec, unit, r4) == expected);
}

TEST_CASE("perturbation magnitude vanishes with the noise level") {
    const Vec x = {0.3, 0.7};
    const Domain unit{0.0, 1.0};
    double prev = 1e9;
    for (double nu : {0.1, 0.01, 0.001}) {
        Rng rng(77);
        const Vec p = perturb(x, {NoiseKind::Gaussian, nu, 0}, unit, rng);
        double mag = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) mag += std::abs(p[i] - x[i]);
        CHECK(mag < prev);
        prev = mag;
    }
    Rng rng(77);
    CHECK(perturb(x, {NoiseKind::Gaussian, 0.0, 0}, unit, rng) == x);
}

TEST_CASE("perturb validates the noise level") {
    Rng rng(1);
    const Domain unit{0.0, 1.0};
    CHECK_THROWS_AS(perturb({0.5}, {NoiseKind::Gaussian, 0.6, 0}, unit, rng), std::invalid_argument);
    CHECK_THROWS_AS(perturb({0.5}, {NoiseKind::Laplace, -0.1, 0}, unit, rng), std::invalid_argument);
}

TEST_CASE("salt-pepper flips exactly ceil(n * nu / 2) whole pixels") {
    const std::size_t pixels = 1024;
    Vec x(pixels, 0.5);
    Rng rng(44);
    const Vec p = perturb(x, {NoiseKind::SaltPepper, 0.005, 0}, {0.0, 1.0}, rng);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < pixels; ++i)
        if (p[i] != x[i]) {
            ++changed;
            CHECK((p[i] == 0.0 || p[i] == 1.0));
        }
    CHECK(changed == 3);  // ceil(1024 * 0.005 / 2)

    // multichannel: all channels of a selected pixel move together
    const std::size_t ch = 3, px = 64;
    Vec img(ch * px, 0.5);
    Rng rng2(45);
    const Vec q = perturb(img, {NoiseKind::SaltPepper, 0.25, 0}, {0.0, 1.0}, rng2, ch);
    std::set<std::size_t> touched;
    for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t ppx = 0; ppx < px; ++ppx)
            if (q[c * px + ppx] != 0.5) touched.insert(ppx);
    CHECK(touched.size() == 8);  // ceil(64 * 0.25 / 2)
    for (std::size_t ppx : touched) {
        const double v0 = q[0 * px + ppx];
        CHECK((v0 == 0.0 || v0 == 1.0));
        CHECK(q[1 * px + ppx] == v0);
        CHECK(q[2 * px + ppx] == v0);
    }
}

TEST_CASE("accuracy counts argmax hits") {
    Matrix w(2, 1);
    w(0, 0) = 1.0;
    w(1, 0) = -1.0;
    Network net = make_linear_net(w);
    const std::vector<Vec> xs = {{1.0}, {2.0}, {-1.0}, {-0.5}};
    const std::vector<int> right = {0, 0, 1, 1};
    const std::vector<int> wrong = {1, 1, 0, 0};
    CHECK(accuracy(net, xs, right) == 1.0);
    CHECK(accuracy(net, xs, wrong) == 0.0);
}

TEST_CASE("a constant-output net scores the base rate on balanced labels") {
    Matrix w(10, 4);  // all-zero weights: every logit ties, argmax picks class 0
    Network net = make_linear_net(w);
    std::vector<Vec> xs;
    std::vector<int> ys;
    Rng rng(3);
    for (int c = 0; c < 10; ++c)
        for (int i = 0; i < 7; ++i) {
            Vec x(4);
            for (auto& e : x) e = rng.next_uniform_in(0, 1);
            xs.push_back(x);
            ys.push_back(c);
        }
    CHECK(accuracy(net, xs, ys) == doctest::Approx(0.1).epsilon(1e-12));
}

namespace {

SweepDataset wrap(const Dataset& ds) {
    SweepDataset sd;
    sd.features = &ds.features;
    sd.labels = &ds.labels;
    sd.domain = {ds.x_min, ds.x_max};
    sd.channels = ds.image_shape ? ds.image_shape->channels : 1;
    if (ds.image_shape && ds.image_shape->height >= 7 && ds.image_shape->width >= 7)
        sd.grid = {{ds.image_shape->height, ds.image_shape->width}};
    return sd;
}

}  // namespace

TEST_CASE("sweep at zero noise returns perfect similarity") {
    Rng rng(99);
    Network net = make_random_net(rng, {8, 12, 3}, Activation::softplus(5.0));
    const Dataset ds = make_blobs(60, 3, 8, 123);
    const SweepDataset sd = wrap(ds);

    const std::vector<NoiseSpec> specs = {{NoiseKind::Gaussian, 0.0, 7}};
    const RobustnessReport rep = robustness_sweep(net, sd, ExplMethod::Gradient, specs, {42, {}});
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].pcc_mean == 1.0);
    CHECK(rep.rows[0].mse_mean == 0.0);
    CHECK(rep.rows[0].n == 60);
}

TEST_CASE("sweep is a pure function of net, data, specs and seeds") {
    Rng rng(100);
    Network net = make_random_net(rng, {8, 10, 2}, Activation::softplus(1.0));
    const Dataset ds = make_blobs(40, 2, 8, 5);
    const SweepDataset sd = wrap(ds);
    const std::vector<NoiseSpec> specs = {{NoiseKind::Gaussian, 0.01, 1},
                                          {NoiseKind::Laplace, 0.01, 2},
                                          {NoiseKind::SaltPepper, 0.05, 3}};
    const RobustnessReport a = robustness_sweep(net, sd, ExplMethod::Lrp, specs, {11, {}});
    const RobustnessReport b = robustness_sweep(net, sd, ExplMethod::Lrp, specs, {11, {}});
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].pcc_mean == b.rows[i].pcc_mean);
        CHECK(a.rows[i].mse_mean == b.rows[i].mse_mean);
        CHECK(a.rows[i].perturbed_accuracy == b.rows[i].perturbed_accuracy);
    }
}

TEST_CASE("larger noise lowers the mean PCC") {
    Rng rng(101);
    Network net = make_random_net(rng, {8, 16, 8, 3}, Activation::softplus(10.0));
    const Dataset ds = make_blobs(500, 3, 8, 77);
    const SweepDataset sd = wrap(ds);
    const std::vector<NoiseSpec> specs = {{NoiseKind::Gaussian, 0.005, 4},
                                          {NoiseKind::Gaussian, 0.025, 4}};
    const RobustnessReport rep = robustness_sweep(net, sd, ExplMethod::Gradient, specs, {21, {}});
    CHECK(rep.rows[0].pcc_mean >= rep.rows[1].pcc_mean);
    CHECK(rep.rows[0].mse_mean <= rep.rows[1].mse_mean);
}

TEST_CASE("sweep computes SSIM on image-shaped data") {
    Rng rng(102);
    Network net = make_random_net(rng, {64, 16, 2}, Activation::softplus(5.0));
    const Dataset ds = make_blobs(20, 2, 0, 9, 3.0, ImageShape{8, 8, 1});
    const SweepDataset sd = wrap(ds);
    const std::vector<NoiseSpec> specs = {{NoiseKind::Gaussian, 0.0, 0},
                                          {NoiseKind::Gaussian, 0.01, 0}};
    const RobustnessReport rep = robustness_sweep(net, sd, ExplMethod::Gradient, specs, {1, {}});
    CHECK(rep.rows[0].ssim_mean == 1.0);  // zero noise: identical maps
    CHECK(std::isfinite(rep.rows[1].ssim_mean));
    CHECK(rep.rows[1].ssim_mean <= 1.0);

    // flat data has no pixel grid: SSIM is reported as NaN
    Network small = make_random_net(rng, {8, 6, 2}, Activation::softplus(5.0));
    const Dataset flat = make_blobs(10, 2, 8, 9);
    const RobustnessReport rep2 =
        robustness_sweep(small, wrap(flat), ExplMethod::Gradient, specs, {1, {}});
    CHECK(std::isnan(rep2.rows[1].ssim_mean));
}

TEST_CASE("sweep explains the original class for the perturbed input") {
    // a raw map entry proves the class is held fixed: on a linear net the map
    // is the class row, so a class flip would change it
    Matrix w(2, 2);
    w(0, 0) = 1.0; w(0, 1) = 0.0;
    w(1, 0) = 0.0; w(1, 1) = 1.0;
    Network net = make_linear_net(w);
    // borderline input: large noise flips the argmax, the map must not change
    const std::vector<Vec> xs = {{0.51, 0.49}};
    const std::vector<int> ys = {0};
    SweepDataset sd;
    sd.features = &xs;
    sd.labels = &ys;
    sd.domain = {0.0, 1.0};
    const std::vector<NoiseSpec> specs = {{NoiseKind::Gaussian, 0.5, 6}};
    const RobustnessReport rep = robustness_sweep(net, sd, ExplMethod::Gradient, specs, {2, {}});
    // the gradient of a linear net is constant, so PCC stays undefined-free
    // and MSE stays 0 even when the predicted class flips
    CHECK(rep.rows[0].mse_mean == 0.0);
}
