#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nf/mlp.hpp"

#include <cmath>

using namespace nf;

TEST_CASE("glorot init: bounds, variance and zero biases")
{
    MlpConfig cfg;
    cfg.input_width = 64;
    cfg.hidden_layers = 2;
    cfg.hidden_width = 64;
    cfg.output_width = 64;
    MlpParams<double> p = glorot_init<double>(cfg, 123);

    const double bound = std::sqrt(6.0 / (64 + 64));
    double sum = 0, sum_sq = 0;
    std::size_t n = 0;
    for (const auto& w : p.weights) {
        CHECK(w.cwiseAbs().maxCoeff() <= bound);
        sum += w.sum();
        sum_sq += w.array().square().sum();
        n += w.size();
    }
    REQUIRE(n >= 10000);
    const double mean = sum / double(n);
    const double var = sum_sq / double(n) - mean * mean;
    // Uniform(-b, b) has variance b^2/3 = 2/(fan_in + fan_out).
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(2.0 / (64 + 64)).epsilon(0.1));
    for (const auto& b : p.biases)
        CHECK(b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("glorot init is seed-deterministic")
{
    MlpConfig cfg;
    cfg.input_width = 8;
    cfg.hidden_layers = 1;
    cfg.hidden_width = 16;
    cfg.output_width = 4;
    const auto a = glorot_init<float>(cfg, 5);
    const auto b = glorot_init<float>(cfg, 5);
    const auto c = glorot_init<float>(cfg, 6);
    for (std::size_t k = 0; k < a.weights.size(); ++k)
        CHECK((a.weights[k] - b.weights[k]).cwiseAbs().maxCoeff() == 0.0f);
    bool diff = false;
    for (std::size_t k = 0; k < a.weights.size(); ++k)
        if ((a.weights[k] - c.weights[k]).cwiseAbs().maxCoeff() > 0)
            diff = true;
    CHECK(diff);
}

TEST_CASE("parameter count for the paper-sized network")
{
    MlpConfig cfg;
    cfg.input_width = 32;
    cfg.hidden_layers = 2;
    cfg.hidden_width = 64;
    cfg.output_width = 3;
    // 32*64+64 + 64*64+64 + 64*3+3
    CHECK(cfg.parameter_count() == 32 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
    CHECK(cfg.layer_count() == 3);
}

TEST_CASE("forward matches a naive per-sample loop")
{
    MlpConfig cfg;
    cfg.input_width = 5;
    cfg.hidden_layers = 2;
    cfg.hidden_width = 7;
    cfg.output_width = 2;
    const auto p = glorot_init<double>(cfg, 17);

    Pcg32 rng(3, 0);
    MatX<double> X(5, 9);
    for (Eigen::Index i = 0; i < X.size(); ++i)
        X.data()[i] = rng.uniform(-1.0, 1.0);

    MatX<double> out;
    MlpCache<double> cache;
    mlp_forward(p, X, out, cache);

    for (int s = 0; s < 9; ++s) {
        VecX<double> a = X.col(s);
        for (int k = 0; k < cfg.layer_count(); ++k) {
            VecX<double> z = p.weights[k] * a + p.biases[k];
            if (k + 1 < cfg.layer_count())
                for (Eigen::Index i = 0; i < z.size(); ++i)
                    z[i] = std::max(0.0, z[i]);
            a = z;
        }
        for (int i = 0; i < 2; ++i)
            CHECK(out(i, s) == doctest::Approx(a[i]).epsilon(1e-13));
    }
}

TEST_CASE("sigmoid output stays in (0,1) and matches the definition")
{
    MlpConfig cfg;
    cfg.input_width = 3;
    cfg.hidden_layers = 1;
    cfg.hidden_width = 8;
    cfg.output_width = 3;
    cfg.output_activation = OutputActivation::Sigmoid;
    const auto p = glorot_init<double>(cfg, 2);

    MatX<double> X = MatX<double>::Random(3, 16);
    MatX<double> out, lin_out;
    MlpCache<double> cache;
    mlp_forward(p, X, out, cache);
    CHECK(out.minCoeff() > 0.0);
    CHECK(out.maxCoeff() < 1.0);

    MlpParams<double> plin = p;
    plin.cfg.output_activation = OutputActivation::Linear;
    MlpCache<double> cache2;
    mlp_forward(plin, X, lin_out, cache2);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        CHECK(out.data()[i]
              == doctest::Approx(1.0 / (1.0 + std::exp(-lin_out.data()[i]))).epsilon(1e-13));
}

TEST_CASE("backward matches finite differences in double")
{
    for (OutputActivation act : { OutputActivation::Linear, OutputActivation::Sigmoid }) {
        MlpConfig cfg;
        cfg.input_width = 4;
        cfg.hidden_layers = 2;
        cfg.hidden_width = 6;
        cfg.output_width = 3;
        cfg.output_activation = act;
        MlpParams<double> p = glorot_init<double>(cfg, 31);

        Pcg32 rng(8, 0);
        MatX<double> X(4, 5);
        for (Eigen::Index i = 0; i < X.size(); ++i)
            X.data()[i] = rng.uniform(-1.0, 1.0);
        MatX<double> dOut(3, 5);
        for (Eigen::Index i = 0; i < dOut.size(); ++i)
            dOut.data()[i] = rng.uniform(-1.0, 1.0);

        MatX<double> out;
        MlpCache<double> cache;
        mlp_forward(p, X, out, cache);
        MlpGrads<double> grads = make_grads(p);
        MatX<double> dX;
        mlp_backward(p, cache, dOut, grads, dX);

        auto objective = [&]() {
            MatX<double> o;
            MlpCache<double> c;
            mlp_forward(p, X, o, c);
            return dOut.cwiseProduct(o).sum();
        };
        const double h = 1e-6;

        for (std::size_t k = 0; k < p.weights.size(); ++k) {
            for (Eigen::Index i = 0; i < p.weights[k].size(); i += 3) {
                double& w = p.weights[k].data()[i];
                const double save = w;
                w = save + h;
                const double fp = objective();
                w = save - h;
                const double fm = objective();
                w = save;
                CHECK(grads.weights[k].data()[i]
                      == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
            }
            for (Eigen::Index i = 0; i < p.biases[k].size(); i += 2) {
                double& b = p.biases[k][i];
                const double save = b;
                b = save + h;
                const double fp = objective();
                b = save - h;
                const double fm = objective();
                b = save;
                CHECK(grads.biases[k][i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
            }
        }

        // Input gradient against finite differences too.
        for (Eigen::Index i = 0; i < X.size(); i += 4) {
            double& x = X.data()[i];
            const double save = x;
            x = save + h;
            const double fp = objective();
            x = save - h;
            const double fm = objective();
            x = save;
            CHECK(dX.data()[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
        }
    }
}

TEST_CASE("backward accumulates into existing gradients")
{
    MlpConfig cfg;
    cfg.input_width = 2;
    cfg.hidden_layers = 1;
    cfg.hidden_width = 4;
    cfg.output_width = 1;
    const auto p = glorot_init<double>(cfg, 7);
    MatX<double> X = MatX<double>::Random(2, 3), out, dX;
    MatX<double> dOut = MatX<double>::Ones(1, 3);
    MlpCache<double> cache;
    mlp_forward(p, X, out, cache);

    MlpGrads<double> once = make_grads(p);
    mlp_backward(p, cache, dOut, once, dX);
    MlpGrads<double> twice = make_grads(p);
    mlp_backward(p, cache, dOut, twice, dX);
    mlp_backward(p, cache, dOut, twice, dX);
    for (std::size_t k = 0; k < once.weights.size(); ++k)
        CHECK((twice.weights[k] - 2.0 * once.weights[k]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("forward rejects mismatched input width")
{
    MlpConfig cfg;
    cfg.input_width = 4;
    const auto p = glorot_init<float>(cfg, 1);
    MatX<float> X = MatX<float>::Zero(3, 2), out;
    MlpCache<float> cache;
    CHECK_THROWS_AS(mlp_forward(p, X, out, cache), std::invalid_argument);
}
