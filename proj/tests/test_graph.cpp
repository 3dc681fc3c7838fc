#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "specedge/graph.hpp"
#include "specedge/rng.hpp"

using namespace specedge;
using oracles::ParamMap;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, scale);
    return t;
}

// Weighted scalar readout makes cotangents non-uniform without changing the
// op under test.
NodeId weighted_sum(Graph& g, NodeId x, const Tensor& w) {
    return g.reduce_sum(g.mul(x, g.constant(w)));
}

// Checks reverse-mode grads of `build` (params -> scalar loss graph) against
// central finite differences.
void gradcheck(const ParamMap& params,
               const std::function<NodeId(Graph&, std::map<std::string, NodeId>&)>& build,
               double tol = 1e-4) {
    auto run = [&](const ParamMap& p, std::map<std::string, Tensor>* grads) {
        Graph g;
        std::map<std::string, NodeId> ids;
        for (const auto& [name, t] : p) ids[name] = g.param(name, t);
        const NodeId loss = build(g, ids);
        g.forward({});
        if (grads) *grads = g.backward(loss);
        return g.value(loss).item();
    };
    ParamMap analytic;
    run(params, &analytic);
    const ParamMap fd = oracles::fd_gradients([&](const ParamMap& p) { return run(p, nullptr); }, params);
    CHECK(oracles::max_rel_err(analytic, fd) < tol);
}

} // namespace

TEST_CASE("identity and constant plumbing") {
    Graph g;
    NodeId x = g.input("x", {2});
    g.mark_output("y", x);
    auto out = g.forward({{"x", Tensor({2}, {2.0, 3.0})}});
    CHECK(out.at("y")[0] == 2.0);
    CHECK(out.at("y")[1] == 3.0);
}

TEST_CASE("softmax of [0,0] is exactly uniform") {
    Graph g;
    NodeId z = g.constant(Tensor({2}, {0.0, 0.0}));
    NodeId p = g.softmax(z);
    g.forward({});
    CHECK(g.value(p)[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.value(p)[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("matmul against identity returns the input") {
    Rng rng(7);
    Tensor a = random_tensor({3, 3}, rng);
    Tensor eye({3, 3});
    for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
    Graph g;
    NodeId y = g.matmul(g.constant(a), g.constant(eye));
    g.forward({});
    for (int i = 0; i < 9; ++i) CHECK(g.value(y)[i] == doctest::Approx(a[i]).epsilon(1e-15));
}

TEST_CASE("d(x^2)/dx = 2x") {
    Graph g;
    NodeId x = g.param("x", Tensor::scalar(3.0));
    NodeId loss = g.reduce_sum(g.mul(x, x));
    g.forward({});
    auto grads = g.backward(loss);
    CHECK(grads.at("x")[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("softmax-dot-onehot gradient at [0,0]") {
    // loss = softmax(z)[0]; dp0/dz = p0*(delta - p) = [0.25, -0.25]
    Graph g;
    NodeId z = g.param("z", Tensor({2}, {0.0, 0.0}));
    NodeId loss = g.reduce_sum(g.mul(g.softmax(z), g.constant(Tensor({2}, {1.0, 0.0}))));
    g.forward({});
    auto grads = g.backward(loss);
    CHECK(grads.at("z")[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(grads.at("z")[1] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("layernorm of a constant vector is zero pre-affine") {
    Graph g;
    NodeId y = g.layer_norm(g.constant(Tensor::full({6}, 3.7)));
    g.forward({});
    for (int i = 0; i < 6; ++i) CHECK(std::abs(g.value(y)[i]) < 1e-9);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(11);
    Graph g;
    NodeId p = g.softmax(g.constant(random_tensor({8, 13}, rng, 4.0)));
    g.forward({});
    const Tensor& probs = g.value(p);
    for (int r = 0; r < 8; ++r) {
        double s = 0;
        for (int c = 0; c < 13; ++c) s += probs[r * 13 + c];
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("cross-entropy of sharp correct logits approaches zero") {
    Graph g;
    Tensor logits({2, 3});
    logits[0 * 3 + 1] = 50.0;
    logits[1 * 3 + 2] = 50.0;
    NodeId ce = g.cross_entropy(g.constant(logits), {1, 2});
    g.forward({});
    CHECK(g.value(ce).item() < 1e-12);
    CHECK(g.value(ce).item() >= 0.0);
}

TEST_CASE("gradcheck: every op kind vs central finite differences") {
    Rng rng(42);

    SUBCASE("matmul plain") {
        ParamMap p;
        p.emplace("a", random_tensor({3, 4}, rng));
        p.emplace("b", random_tensor({4, 5}, rng));
        Tensor w = random_tensor({3, 5}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) { return weighted_sum(g, g.matmul(ids["a"], ids["b"]), w); });
    }
    SUBCASE("matmul trans_b") {
        ParamMap p;
        p.emplace("a", random_tensor({3, 4}, rng));
        p.emplace("b", random_tensor({5, 4}, rng));
        Tensor w = random_tensor({3, 5}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) {
            return weighted_sum(g, g.matmul(ids["a"], ids["b"], false, true), w);
        });
    }
    SUBCASE("matmul trans_a") {
        ParamMap p;
        p.emplace("a", random_tensor({4, 3}, rng));
        p.emplace("b", random_tensor({4, 5}, rng));
        Tensor w = random_tensor({3, 5}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) {
            return weighted_sum(g, g.matmul(ids["a"], ids["b"], true, false), w);
        });
    }
    SUBCASE("matmul batched with shared rhs") {
        ParamMap p;
        p.emplace("a", random_tensor({2, 3, 4}, rng));
        p.emplace("b", random_tensor({4, 5}, rng));
        Tensor w = random_tensor({2, 3, 5}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) { return weighted_sum(g, g.matmul(ids["a"], ids["b"]), w); });
    }
    SUBCASE("matmul batched both sides") {
        ParamMap p;
        p.emplace("a", random_tensor({2, 2, 3, 4}, rng));
        p.emplace("b", random_tensor({2, 2, 5, 4}, rng));
        Tensor w = random_tensor({2, 2, 3, 5}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) {
            return weighted_sum(g, g.matmul(ids["a"], ids["b"], false, true), w);
        });
    }
    SUBCASE("add sub mul with broadcast") {
        ParamMap p;
        p.emplace("a", random_tensor({2, 3, 4}, rng));
        p.emplace("bias", random_tensor({4}, rng));
        Tensor w = random_tensor({2, 3, 4}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) {
            NodeId s = g.sub(g.add(ids["a"], ids["bias"]), ids["bias"]);
            return weighted_sum(g, g.mul(s, ids["bias"]), w);
        });
    }
    SUBCASE("scale") {
        ParamMap p;
        p.emplace("a", random_tensor({5}, rng));
        Tensor w = random_tensor({5}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) { return weighted_sum(g, g.scale(ids["a"], -2.5), w); });
    }
    SUBCASE("layer_norm") {
        ParamMap p;
        p.emplace("a", random_tensor({3, 7}, rng));
        Tensor w = random_tensor({3, 7}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) { return weighted_sum(g, g.layer_norm(ids["a"]), w); });
    }
    SUBCASE("softmax") {
        ParamMap p;
        p.emplace("a", random_tensor({3, 6}, rng));
        Tensor w = random_tensor({3, 6}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) { return weighted_sum(g, g.softmax(ids["a"]), w); });
    }
    SUBCASE("gelu") {
        ParamMap p;
        p.emplace("a", random_tensor({9}, rng));
        Tensor w = random_tensor({9}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) { return weighted_sum(g, g.gelu(ids["a"]), w); });
    }
    SUBCASE("relu") {
        ParamMap p;
        p.emplace("a", random_tensor({9}, rng));
        // keep values away from the kink, where FD is ill-defined
        for (std::int64_t i = 0; i < p.at("a").size(); ++i)
            if (std::abs(p.at("a")[i]) < 0.05) p.at("a")[i] = 0.5;
        Tensor w = random_tensor({9}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) { return weighted_sum(g, g.relu(ids["a"]), w); });
    }
    SUBCASE("embed") {
        ParamMap p;
        p.emplace("table", random_tensor({5, 3}, rng));
        Tensor w = random_tensor({4, 3}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) {
            return weighted_sum(g, g.embed(ids["table"], {1, 4, 1, 0}, {4}), w);
        });
    }
    SUBCASE("reshape and transpose") {
        ParamMap p;
        p.emplace("a", random_tensor({2, 3, 4}, rng));
        Tensor w = random_tensor({4, 2, 3}, rng);
        gradcheck(p, [&](Graph& g, auto& ids) {
            NodeId t = g.transpose(ids["a"], {2, 0, 1});
            return weighted_sum(g, g.reshape(t, {4, 2, 3}), w);
        });
    }
    SUBCASE("reduce_mean") {
        ParamMap p;
        p.emplace("a", random_tensor({3, 3}, rng));
        gradcheck(p, [&](Graph& g, auto& ids) { return g.reduce_mean(g.mul(ids["a"], ids["a"])); });
    }
    SUBCASE("cross_entropy weighted") {
        ParamMap p;
        p.emplace("z", random_tensor({4, 5}, rng));
        gradcheck(p, [&](Graph& g, auto& ids) {
            return g.cross_entropy(ids["z"], {1, 0, 4, 2}, {1.0, 0.0, 2.0, 1.0});
        });
    }
    SUBCASE("mse") {
        ParamMap p;
        p.emplace("pred", random_tensor({6}, rng));
        gradcheck(p, [&](Graph& g, auto& ids) { return g.mse(ids["pred"], {1, 2, 3, 4, 5, 6}); });
    }
}

TEST_CASE("error paths") {
    SUBCASE("unbound input") {
        Graph g;
        g.input("x", {2});
        CHECK_THROWS_AS(g.forward({}), std::invalid_argument);
    }
    SUBCASE("shape mismatch on bind") {
        Graph g;
        g.input("x", {2});
        CHECK_THROWS_AS(g.forward({{"x", Tensor({3})}}), std::invalid_argument);
    }
    SUBCASE("matmul inner extents") {
        Graph g;
        NodeId a = g.constant(Tensor({2, 3}));
        NodeId b = g.constant(Tensor({4, 2}));
        CHECK_THROWS_AS(g.matmul(a, b), std::invalid_argument);
    }
    SUBCASE("backward before forward") {
        Graph g;
        NodeId x = g.param("x", Tensor::scalar(1.0));
        CHECK_THROWS_AS(g.backward(x), std::logic_error);
    }
    SUBCASE("loss must be scalar") {
        Graph g;
        NodeId x = g.param("x", Tensor({2}, {1.0, 2.0}));
        g.forward({});
        CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
    }
    SUBCASE("non-finite values surface as NumericalError") {
        Graph g;
        NodeId x = g.param("x", Tensor::scalar(1e308));
        g.mul(x, x);
        CHECK_THROWS_AS(g.forward({}), NumericalError);
    }
    SUBCASE("embed rejects out-of-vocab ids") {
        Graph g;
        NodeId t = g.param("t", Tensor({3, 2}));
        CHECK_THROWS_AS(g.embed(t, {3}, {1}), std::invalid_argument);
    }
}

TEST_CASE("forward determinism") {
    auto run = [] {
        Rng rng(123);
        Graph g;
        NodeId a = g.param("a", random_tensor({4, 4}, rng));
        NodeId y = g.softmax(g.gelu(g.matmul(a, a)));
        g.forward({});
        std::vector<double> vals(g.value(y).vec());
        return vals;
    };
    CHECK(run() == run());
}
