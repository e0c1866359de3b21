#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "poe/optim.hpp"

using poe::AdamwConfig;
using poe::OptimizerState;
using poe::Tensor;

namespace {

// f(t) = t^2 from t=1 at lr=0.1 without decay, checked against an independent
// float64 reference. Adam overshoots zero at step 12 and damps back; the first
// twelve iterates and the final one are pinned.
const double kTrajectory12[12] = {
    0.90000000049999995,  0.80041222869179285,  0.70158627294603026, 0.60393906057374602,
    0.50796365926434195,  0.41423645599366188,  0.32342070493910202, 0.23626372452104183,
    0.15358456007036356,  0.076249155606912158, 0.0051315019480571433,
    -0.058937890630047313};
const double kTheta100 = 0.002936675681102543;

}  // namespace

TEST_CASE("quadratic trajectory matches the pinned reference") {
    AdamwConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.0;
    OptimizerState state;
    state.config = cfg;
    std::map<std::string, Tensor> params{{"t", Tensor::scalar(1.0)}};
    for (int step = 1; step <= 100; ++step) {
        std::map<std::string, Tensor> grads{{"t", Tensor::scalar(2.0 * params.at("t")[0])}};
        poe::adamw_step(params, grads, state);
        if (step <= 12) {
            REQUIRE_THAT(params.at("t")[0],
                         Catch::Matchers::WithinRel(kTrajectory12[step - 1], 1e-12));
        }
    }
    REQUIRE_THAT(params.at("t")[0], Catch::Matchers::WithinRel(kTheta100, 1e-12));
    REQUIRE(std::abs(params.at("t")[0]) < 0.003);
    REQUIRE(state.global_step == 100);
    REQUIRE(state.steps.at("t") == 100);
}

TEST_CASE("first step equals the closed form") {
    // m_hat = g, v_hat = g^2, so the first update is lr * g/(|g|+eps) + lr*wd*t
    AdamwConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.01;
    OptimizerState state;
    state.config = cfg;
    std::map<std::string, Tensor> params{{"t", Tensor::scalar(1.0)}};
    std::map<std::string, Tensor> grads{{"t", Tensor::scalar(2.0)}};
    poe::adamw_step(params, grads, state);
    const double expect = 1.0 - 0.1 * (2.0 / (2.0 + 1e-8)) - 0.1 * 0.01 * 1.0;
    REQUIRE_THAT(params.at("t")[0], Catch::Matchers::WithinRel(expect, 1e-14));
}

TEST_CASE("decoupled decay shrinks a parameter with zero gradient") {
    AdamwConfig cfg;
    cfg.lr = 0.5;
    cfg.weight_decay = 0.1;
    OptimizerState state;
    state.config = cfg;
    std::map<std::string, Tensor> params{{"t", Tensor::scalar(1.0)}};
    std::map<std::string, Tensor> grads{{"t", Tensor::scalar(0.0)}};
    poe::adamw_step(params, grads, state);
    // moment update is 0, only decay acts: 1 - 0.5*0.1
    REQUIRE_THAT(params.at("t")[0], Catch::Matchers::WithinRel(0.95, 1e-15));
}

TEST_CASE("params without gradients stay bitwise untouched") {
    OptimizerState state;
    std::map<std::string, Tensor> params{{"a", Tensor::scalar(0.25)}, {"b", Tensor::scalar(0.75)}};
    const Tensor b_before = params.at("b");
    std::map<std::string, Tensor> grads{{"a", Tensor::scalar(1.0)}};
    poe::adamw_step(params, grads, state);
    REQUIRE(params.at("b").bitwise_equal(b_before));
    REQUIRE(params.at("a")[0] != 0.25);
    REQUIRE(state.m.count("b") == 0);
    REQUIRE(state.v.count("b") == 0);
    REQUIRE(state.steps.count("b") == 0);
    REQUIRE(state.steps.at("a") == 1);
    REQUIRE(state.global_step == 1);
}

TEST_CASE("late-joining parameter gets fresh bias correction") {
    // identical update sequence for "x" whether or not another param trained first
    auto run = [](bool with_other) {
        OptimizerState state;
        state.config.lr = 0.01;
        std::map<std::string, Tensor> params{{"x", Tensor::scalar(1.0)},
                                             {"other", Tensor::scalar(1.0)}};
        if (with_other) {
            for (int i = 0; i < 5; ++i) {
                std::map<std::string, Tensor> grads{{"other", Tensor::scalar(0.3)}};
                poe::adamw_step(params, grads, state);
            }
        }
        for (int i = 0; i < 3; ++i) {
            std::map<std::string, Tensor> grads{{"x", Tensor::scalar(0.7)}};
            poe::adamw_step(params, grads, state);
        }
        return params.at("x")[0];
    };
    const double with_other = run(true);
    const double alone = run(false);
    REQUIRE(with_other == alone);
}

TEST_CASE("invalid gradients are rejected") {
    OptimizerState state;
    std::map<std::string, Tensor> params{{"a", Tensor::zeros(2, 2)}};
    std::map<std::string, Tensor> shape_grads{{"a", Tensor::zeros(2, 3)}};
    REQUIRE_THROWS_AS(poe::adamw_step(params, shape_grads, state), poe::Error);

    std::map<std::string, Tensor> nan_grads{{"a", Tensor::full({2, 2}, std::nan(""))}};
    try {
        poe::adamw_step(params, nan_grads, state);
        FAIL("expected error");
    } catch (const poe::Error& e) {
        REQUIRE(e.kind() == poe::ErrorKind::numeric);
    }

    std::map<std::string, Tensor> unknown_grads{{"zz", Tensor::zeros(1, 1)}};
    REQUIRE_THROWS_AS(poe::adamw_step(params, unknown_grads, state), poe::Error);
}

TEST_CASE("tensor update applies elementwise") {
    OptimizerState state;
    state.config.lr = 0.1;
    state.config.weight_decay = 0.0;
    std::map<std::string, Tensor> params{{"w", Tensor::row({1.0, -1.0, 0.5})}};
    std::map<std::string, Tensor> grads{{"w", Tensor::row({2.0, -2.0, 0.0})}};
    poe::adamw_step(params, grads, state);
    const double moved = 0.1 * (2.0 / (2.0 + 1e-8));
    REQUIRE_THAT(params.at("w")[0], Catch::Matchers::WithinRel(1.0 - moved, 1e-15));
    REQUIRE_THAT(params.at("w")[1], Catch::Matchers::WithinRel(-1.0 + moved, 1e-15));
    REQUIRE(params.at("w")[2] == 0.5);
}

TEST_CASE("defaults match the documented training setup") {
    AdamwConfig cfg;
    REQUIRE(cfg.lr == 5e-6);
    REQUIRE(cfg.beta1 == 0.9);
    REQUIRE(cfg.beta2 == 0.999);
    REQUIRE(cfg.eps == 1e-8);
    REQUIRE(cfg.weight_decay == 0.01);
}
